//! Language detection and per-line source classification.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

mod cosmetic;
mod scanner;

pub use cosmetic::{cosmetic_removed_lines, is_cosmetic_change, is_cosmetic_commit, same_tokens, tokenize};

/// The languages with comment-aware support, plus a catch-all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LanguageId {
    C,
    #[serde(rename = "C++", alias = "Cpp", alias = "cpp", alias = "c++")]
    Cpp,
    #[serde(rename = "C#", alias = "CSharp", alias = "csharp", alias = "c#")]
    CSharp,
    #[serde(alias = "java")]
    Java,
    #[serde(alias = "JS", alias = "js", alias = "javascript")]
    JavaScript,
    #[serde(alias = "ruby")]
    Ruby,
    #[serde(rename = "PHP", alias = "php", alias = "Php")]
    Php,
    #[serde(alias = "python")]
    Python,
    #[serde(alias = "Other", alias = "Others", alias = "other")]
    Unsupported,
}

impl LanguageId {
    pub const SUPPORTED: [LanguageId; 8] = [
        LanguageId::C,
        LanguageId::Cpp,
        LanguageId::CSharp,
        LanguageId::Java,
        LanguageId::JavaScript,
        LanguageId::Ruby,
        LanguageId::Php,
        LanguageId::Python,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LanguageId::C => "C",
            LanguageId::Cpp => "C++",
            LanguageId::CSharp => "C#",
            LanguageId::Java => "Java",
            LanguageId::JavaScript => "JavaScript",
            LanguageId::Ruby => "Ruby",
            LanguageId::Php => "PHP",
            LanguageId::Python => "Python",
            LanguageId::Unsupported => "Unsupported",
        }
    }

    pub fn is_supported(self) -> bool {
        self != LanguageId::Unsupported
    }

    /// Language for a path under the default extension table.
    pub fn from_path(path: impl AsRef<Path>) -> Self {
        LanguageMap::default().language_of(path)
    }
}

impl fmt::Display for LanguageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LanguageId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lang = match s.to_ascii_lowercase().as_str() {
            "c" => LanguageId::C,
            "c++" | "cpp" => LanguageId::Cpp,
            "c#" | "csharp" | "cs" => LanguageId::CSharp,
            "java" => LanguageId::Java,
            "javascript" | "js" => LanguageId::JavaScript,
            "ruby" | "rb" => LanguageId::Ruby,
            "php" => LanguageId::Php,
            "python" | "py" => LanguageId::Python,
            "unsupported" | "other" | "others" => LanguageId::Unsupported,
            _ => return Err(format!("unknown language {s:?}")),
        };
        Ok(lang)
    }
}

/// Extension → language table. Keys are lowercase extensions without the dot.
///
/// The default table maps `.h` to C; override it for C++-heavy corpora.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageMap {
    extensions: BTreeMap<String, LanguageId>,
}

const DEFAULT_EXTENSIONS: &[(&str, LanguageId)] = &[
    ("c", LanguageId::C),
    ("h", LanguageId::C),
    ("cc", LanguageId::Cpp),
    ("cpp", LanguageId::Cpp),
    ("cxx", LanguageId::Cpp),
    ("c++", LanguageId::Cpp),
    ("hh", LanguageId::Cpp),
    ("hpp", LanguageId::Cpp),
    ("hxx", LanguageId::Cpp),
    ("h++", LanguageId::Cpp),
    ("ipp", LanguageId::Cpp),
    ("tpp", LanguageId::Cpp),
    ("inl", LanguageId::Cpp),
    ("cs", LanguageId::CSharp),
    ("java", LanguageId::Java),
    ("js", LanguageId::JavaScript),
    ("jsx", LanguageId::JavaScript),
    ("mjs", LanguageId::JavaScript),
    ("cjs", LanguageId::JavaScript),
    ("rb", LanguageId::Ruby),
    ("rake", LanguageId::Ruby),
    ("gemspec", LanguageId::Ruby),
    ("ru", LanguageId::Ruby),
    ("php", LanguageId::Php),
    ("phtml", LanguageId::Php),
    ("php3", LanguageId::Php),
    ("php4", LanguageId::Php),
    ("php5", LanguageId::Php),
    ("php7", LanguageId::Php),
    ("phps", LanguageId::Php),
    ("py", LanguageId::Python),
    ("pyw", LanguageId::Python),
    ("pyi", LanguageId::Python),
];

impl Default for LanguageMap {
    fn default() -> Self {
        Self {
            extensions: DEFAULT_EXTENSIONS
                .iter()
                .map(|(ext, lang)| (ext.to_string(), *lang))
                .collect(),
        }
    }
}

impl LanguageMap {
    pub fn empty() -> Self {
        Self {
            extensions: BTreeMap::new(),
        }
    }

    /// Adds or replaces one mapping; a leading dot is ignored.
    pub fn set(&mut self, extension: &str, language: LanguageId) -> &mut Self {
        let ext = extension.trim_start_matches('.').to_ascii_lowercase();
        self.extensions.insert(ext, language);
        self
    }

    /// Applies every entry of `overrides` on top of this table.
    pub fn merge(&mut self, overrides: &LanguageMap) -> &mut Self {
        for (ext, lang) in &overrides.extensions {
            self.extensions.insert(ext.clone(), *lang);
        }
        self
    }

    pub fn language_of(&self, path: impl AsRef<Path>) -> LanguageId {
        path.as_ref()
            .extension()
            .and_then(|e| e.to_str())
            .and_then(|e| self.extensions.get(&e.to_ascii_lowercase()))
            .copied()
            .unwrap_or(LanguageId::Unsupported)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, LanguageId)> {
        self.extensions.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LineClass {
    Code,
    Comment,
    Blank,
    MixedCodeComment,
}

impl LineClass {
    /// Lines downstream filters must keep: anything carrying code.
    pub fn has_code(self) -> bool {
        matches!(self, LineClass::Code | LineClass::MixedCodeComment)
    }
}

/// Classifies every physical line of `content`.
///
/// The result has one entry per line as produced by [`str::lines`].
/// Whitespace-only lines are `Blank` in every language; other lines of an
/// unsupported language are `Code`.
pub fn classify_lines(content: &str, language: LanguageId) -> Vec<LineClass> {
    let marks = if language.is_supported() {
        scanner::scan(content, language)
    } else {
        Vec::new()
    };
    content
        .lines()
        .enumerate()
        .map(|(i, text)| {
            if text.trim().is_empty() {
                return LineClass::Blank;
            }
            let (code, comment) = marks.get(i).copied().unwrap_or((true, false));
            match (code, comment) {
                (true, true) => LineClass::MixedCodeComment,
                (false, true) => LineClass::Comment,
                _ => LineClass::Code,
            }
        })
        .collect()
}
