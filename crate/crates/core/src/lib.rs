pub mod engine;
pub mod eval;
pub mod lang;
pub mod miner;
pub mod oracle;
pub mod pipeline;
pub mod repo;
