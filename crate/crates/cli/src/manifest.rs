use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use szz_core::engine::Preset;
use szz_core::eval::Regime;

/// TOML run manifest. Every field can also be given as a flag; flags win.
///
/// ```toml
/// dataset = "oracle.json"
/// clones_root = "clones"
/// presets = ["B", "AG", "MA", "L", "R"]
/// regimes = ["none", "best-case-date"]
/// outlier_threshold = 20
/// out_dir = "out"
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub dataset: Option<PathBuf>,
    pub clones_root: Option<PathBuf>,
    #[serde(default)]
    pub presets: Vec<String>,
    pub regime: Option<String>,
    #[serde(default)]
    pub regimes: Vec<String>,
    pub outlier_threshold: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub parses: Option<PathBuf>,
    pub refactorings: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl RunManifest {
    /// Reads a manifest; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut m: RunManifest = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut m.dataset,
            &mut m.clones_root,
            &mut m.out_dir,
            &mut m.parses,
            &mut m.refactorings,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(m)
    }

    pub fn regime_names(&self) -> Vec<String> {
        let mut v = self.regimes.clone();
        v.extend(self.regime.clone());
        v
    }
}

/// Comma lists, case-insensitive; duplicates are dropped, order kept.
pub fn parse_presets<S: AsRef<str>>(items: &[S]) -> Result<Vec<Preset>> {
    let mut out = Vec::new();
    for item in items {
        for name in item.as_ref().split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let p: Preset = name.parse()?;
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// `all` expands to every regime.
pub fn parse_regimes<S: AsRef<str>>(items: &[S]) -> Result<Vec<Regime>> {
    let mut out = Vec::new();
    for item in items {
        for name in item.as_ref().split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let found: Vec<Regime> = if name.eq_ignore_ascii_case("all") {
                Regime::ALL.to_vec()
            } else {
                match name.to_ascii_lowercase().parse::<Regime>() {
                    Ok(r) => vec![r],
                    Err(e) => bail!(e),
                }
            };
            for r in found {
                if !out.contains(&r) {
                    out.push(r);
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_lists() {
        let p = parse_presets(&["b, ag", "MA-SZZ", "B"]).unwrap();
        assert_eq!(p, vec![Preset::B, Preset::Ag, Preset::Ma]);
        assert!(parse_presets(&["X"]).is_err());
    }

    #[test]
    fn regime_lists() {
        assert_eq!(parse_regimes(&["all"]).unwrap(), Regime::ALL.to_vec());
        assert_eq!(
            parse_regimes(&["best-case-date,none"]).unwrap(),
            vec![Regime::None, Regime::BestCaseDate]
        );
        assert!(parse_regimes(&["yesterday"]).is_err());
    }

    #[test]
    fn manifest_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "dataset = \"d.json\"\npresets = [\"B\"]\nregime = \"none\"\n").unwrap();
        let m = RunManifest::load(&path).unwrap();
        assert_eq!(m.dataset.as_deref(), Some(dir.path().join("d.json").as_path()));
        assert_eq!(m.regime_names(), vec!["none"]);
        std::fs::write(&path, "colour = 1\n").unwrap();
        assert!(RunManifest::load(&path).is_err());
    }
}
