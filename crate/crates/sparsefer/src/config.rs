//! `key = value` configuration. Later sources override earlier ones:
//! defaults, then the config file, then command-line settings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sparsefer_core::rng::{derive_seed, tag};
use sparsefer_core::svm::{CvMode, DEFAULT_C_GRID};
use sparsefer_core::UnusedAtomPolicy;

use crate::error::{Error, Result};

/// Every recognized key with its default (empty = unset).
pub const KEYS: &[(&str, &str)] = &[
    ("manifest", ""),
    ("resize", ""),
    ("per_class_train", "20"),
    ("per_class_test", "10"),
    ("identity_disjoint", "false"),
    ("rffd_dims", "600,650,700,750,800,900,1000"),
    ("rffd_candidates", "10"),
    ("rffd_quality_threshold", ""),
    ("rffd_cv", "loo"),
    ("rffd_c", "1"),
    ("sparsity", "15%"),
    ("omp_residual_tol", "0"),
    ("ksvd_max_iters", "50"),
    ("ksvd_rel_tol", "1e-4"),
    ("ksvd_unused_atoms", "replace"),
    ("svm_c_grid", ""),
    ("svm_cv", "loo"),
    ("pca_baseline", "false"),
    ("record_timings", "false"),
    ("seed", "0"),
    ("out", "out"),
    ("synth_mode", "blobs"),
    ("synth_classes", "3"),
    ("synth_width", "10"),
    ("synth_height", "6"),
    ("synth_per_class", "80"),
    ("synth_sigma", "0.015"),
    ("synth_separation", "10"),
    ("synth_n", "20"),
    ("synth_k", "50"),
    ("synth_l", "3"),
    ("synth_signals", "1500"),
    ("synth_noise", "0"),
];

/// Raw settings after layering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn defaults() -> Self {
        RawConfig {
            values: KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment. Manifest paths are
    /// taken relative to the file's directory.
    pub fn apply_text(&mut self, text: &str, base: Option<&Path>) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match (k, base) {
                ("manifest", Some(base)) => {
                    let joined: Vec<String> = split_list(v).map(|p| base.join(p).display().to_string()).collect();
                    self.set(k, &joined.join(","))
                }
                _ => self.set(k, v),
            }
            .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        self.apply_text(&text, path.parent())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v)
    }

    fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key);
        v.parse()
            .map_err(|_| Error::Config(format!("`{key}`: cannot parse {v:?}")))
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.get(key).is_empty() {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        split_list(self.get(key))
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Config(format!("`{key}`: cannot parse list entry {s:?}")))
            })
            .collect()
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(Error::Config(format!("`{key}`: expected true or false, got {v:?}"))),
        }
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

/// Cross-validation scheme as written in the config; k-fold seeds are derived later.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvSetting {
    LeaveOneOut,
    KFold(usize),
}

impl CvSetting {
    fn parse(key: &str, v: &str) -> Result<Self> {
        if v == "loo" {
            return Ok(CvSetting::LeaveOneOut);
        }
        v.strip_prefix("kfold:")
            .and_then(|k| k.parse().ok())
            .filter(|&k: &usize| k >= 2)
            .map(CvSetting::KFold)
            .ok_or_else(|| Error::Config(format!("`{key}`: expected `loo` or `kfold:<k>` with k >= 2, got {v:?}")))
    }

    pub fn mode(self, seed: u64) -> CvMode {
        match self {
            CvSetting::LeaveOneOut => CvMode::LeaveOneOut,
            CvSetting::KFold(k) => CvMode::KFold { k, seed },
        }
    }
}

/// Sparsity level: an atom count or a percentage of the dictionary size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sparsity {
    Count(usize),
    /// `numerator / denominator` percent, kept exact.
    Percent { numerator: u64, denominator: u64 },
}

impl Sparsity {
    pub fn parse(v: &str) -> Result<Self> {
        let bad = || Error::Config(format!("`sparsity`: expected a count or a percentage like `15%`, got {v:?}"));
        match v.strip_suffix('%') {
            None => v.parse().map(Sparsity::Count).map_err(|_| bad()),
            Some(p) => {
                let p = p.trim();
                let (int, frac) = p.split_once('.').unwrap_or((p, ""));
                if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
                    return Err(bad());
                }
                let digits = format!("{int}{frac}");
                let numerator: u64 = digits.parse().map_err(|_| bad())?;
                let denominator = 10u64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
                Ok(Sparsity::Percent { numerator, denominator })
            }
        }
    }

    /// `floor(pct · K)` for percentages; the count itself otherwise.
    pub fn resolve(self, k: usize) -> usize {
        match self {
            Sparsity::Count(l) => l,
            Sparsity::Percent { numerator, denominator } => {
                ((numerator as u128 * k as u128) / (100 * denominator as u128)) as usize
            }
        }
    }
}

/// Synthetic data settings for the `synth` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthSettings {
    /// Gaussian blobs written as 16-bit PNG images plus a manifest.
    Blobs {
        classes: usize,
        width: u32,
        height: u32,
        per_class: usize,
        sigma: f64,
        separation: f64,
    },
    /// Planted dictionary, codes and signals as SMX1 files.
    Planted {
        n: usize,
        k: usize,
        l: usize,
        signals: usize,
        noise: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub manifests: Vec<PathBuf>,
    /// Common `(width, height)` every image is resized to.
    pub resize: Option<(u32, u32)>,
    pub per_class_train: usize,
    pub per_class_test: usize,
    pub identity_disjoint: bool,
    pub rffd_dims: Vec<usize>,
    pub rffd_candidates: usize,
    pub rffd_quality_threshold: Option<f64>,
    pub rffd_cv: CvSetting,
    pub rffd_c: f64,
    pub sparsity: Sparsity,
    pub omp_residual_tol: f64,
    pub ksvd_max_iters: usize,
    pub ksvd_rel_tol: f64,
    pub ksvd_unused_atoms: UnusedAtomPolicy,
    pub svm_c_grid: Vec<f64>,
    pub svm_cv: CvSetting,
    pub pca_baseline: bool,
    pub record_timings: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub synth: SynthSettings,
}

impl PipelineConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let resize = match raw.get("resize") {
            "" => None,
            v => {
                let (w, h) = v
                    .split_once('x')
                    .and_then(|(w, h)| Some((w.trim().parse().ok()?, h.trim().parse().ok()?)))
                    .filter(|&(w, h): &(u32, u32)| w > 0 && h > 0)
                    .ok_or_else(|| Error::Config(format!("`resize`: expected WIDTHxHEIGHT, got {v:?}")))?;
                Some((w, h))
            }
        };
        let svm_c_grid = if raw.get("svm_c_grid").is_empty() {
            DEFAULT_C_GRID.to_vec()
        } else {
            raw.list("svm_c_grid")?
        };
        let synth = match raw.get("synth_mode") {
            "blobs" => SynthSettings::Blobs {
                classes: raw.parse("synth_classes")?,
                width: raw.parse("synth_width")?,
                height: raw.parse("synth_height")?,
                per_class: raw.parse("synth_per_class")?,
                sigma: raw.parse("synth_sigma")?,
                separation: raw.parse("synth_separation")?,
            },
            "planted" => SynthSettings::Planted {
                n: raw.parse("synth_n")?,
                k: raw.parse("synth_k")?,
                l: raw.parse("synth_l")?,
                signals: raw.parse("synth_signals")?,
                noise: raw.parse("synth_noise")?,
            },
            v => return Err(Error::Config(format!("`synth_mode`: expected blobs or planted, got {v:?}"))),
        };
        let cfg = PipelineConfig {
            manifests: split_list(raw.get("manifest")).map(PathBuf::from).collect(),
            resize,
            per_class_train: raw.parse("per_class_train")?,
            per_class_test: raw.parse("per_class_test")?,
            identity_disjoint: raw.flag("identity_disjoint")?,
            rffd_dims: raw.list("rffd_dims")?,
            rffd_candidates: raw.parse("rffd_candidates")?,
            rffd_quality_threshold: raw.optional("rffd_quality_threshold")?,
            rffd_cv: CvSetting::parse("rffd_cv", raw.get("rffd_cv"))?,
            rffd_c: raw.parse("rffd_c")?,
            sparsity: Sparsity::parse(raw.get("sparsity"))?,
            omp_residual_tol: raw.parse("omp_residual_tol")?,
            ksvd_max_iters: raw.parse("ksvd_max_iters")?,
            ksvd_rel_tol: raw.parse("ksvd_rel_tol")?,
            ksvd_unused_atoms: match raw.get("ksvd_unused_atoms") {
                "replace" => UnusedAtomPolicy::ReplaceWithWorstSignal,
                "keep" => UnusedAtomPolicy::Keep,
                v => return Err(Error::Config(format!("`ksvd_unused_atoms`: expected replace or keep, got {v:?}"))),
            },
            svm_c_grid,
            svm_cv: CvSetting::parse("svm_cv", raw.get("svm_cv"))?,
            pca_baseline: raw.flag("pca_baseline")?,
            record_timings: raw.flag("record_timings")?,
            seed: raw.parse("seed")?,
            out: PathBuf::from(raw.get("out")),
            synth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.per_class_train == 0 {
            return fail("per_class_train must be at least 1");
        }
        if self.rffd_dims.is_empty() || self.rffd_dims.contains(&0) {
            return fail("rffd_dims must list positive dimensions");
        }
        if self.rffd_candidates == 0 {
            return fail("rffd_candidates must be at least 1");
        }
        if matches!(self.rffd_quality_threshold, Some(t) if !(t >= 0.0)) {
            return fail("rffd_quality_threshold must be >= 0");
        }
        if !(self.rffd_c > 0.0) || self.svm_c_grid.is_empty() || self.svm_c_grid.iter().any(|&c| !(c > 0.0)) {
            return fail("rffd_c and every svm_c_grid entry must be > 0");
        }
        if matches!(self.sparsity, Sparsity::Count(0)) {
            return fail("sparsity must be at least 1");
        }
        if !(self.omp_residual_tol >= 0.0) || !(self.ksvd_rel_tol >= 0.0) {
            return fail("omp_residual_tol and ksvd_rel_tol must be >= 0");
        }
        if self.ksvd_max_iters == 0 {
            return fail("ksvd_max_iters must be at least 1");
        }
        Ok(())
    }

    /// Every stage seed, derived from the master seed.
    pub fn seeds(&self) -> Seeds {
        Seeds {
            master: self.seed,
            split: derive_seed(self.seed, &[tag::SPLIT]),
            rffd: derive_seed(self.seed, &[tag::RFFD]),
            rffd_cv: derive_seed(self.seed, &[tag::CV, tag::RFFD]),
            ksvd: derive_seed(self.seed, &[tag::KSVD]),
            svm_cv: derive_seed(self.seed, &[tag::CV, tag::SVM]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub split: u64,
    pub rffd: u64,
    pub rffd_cv: u64,
    pub ksvd: u64,
    pub svm_cv: u64,
}

/// Layers defaults, an optional file and overrides, then parses.
pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig> {
    let mut raw = RawConfig::defaults();
    if let Some(f) = file {
        raw.apply_file(f)?;
    }
    for kv in overrides {
        raw.apply_override(kv)?;
    }
    PipelineConfig::from_raw(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentage_sparsity_floors() {
        let pct = |s: &str| Sparsity::parse(s).unwrap();
        assert_eq!(pct("15%").resolve(143), 21);
        assert_eq!(pct("10%").resolve(360), 36);
        assert_eq!(pct("12.5%").resolve(8), 1);
        assert_eq!(pct("7").resolve(1000), 7);
        assert_eq!(pct("0.5%").resolve(100), 0);
        assert!(Sparsity::parse("x%").is_err());
        assert!(Sparsity::parse("%").is_err());
        assert!(Sparsity::parse("-3").is_err());
    }

    #[test]
    fn precedence_cli_over_file_over_defaults() {
        let mut raw = RawConfig::defaults();
        raw.apply_text("seed = 5\nrffd_dims = 10, 20 # comment\n\nsvm_cv = kfold:4\n", None)
            .unwrap();
        raw.apply_override("seed=9").unwrap();
        let cfg = PipelineConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.rffd_dims, vec![10, 20]);
        assert_eq!(cfg.svm_cv, CvSetting::KFold(4));
        assert_eq!(cfg.per_class_train, 20);
        assert_eq!(cfg.svm_c_grid, DEFAULT_C_GRID.to_vec());
        assert_eq!(cfg.sparsity, Sparsity::Percent { numerator: 15, denominator: 1 });
    }

    #[test]
    fn manifest_paths_follow_the_config_file() {
        let mut raw = RawConfig::defaults();
        raw.apply_text("manifest = a.csv, sub/b.csv", Some(Path::new("/data"))).unwrap();
        let cfg = PipelineConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.manifests, vec![PathBuf::from("/data/a.csv"), PathBuf::from("/data/sub/b.csv")]);
    }

    #[test]
    fn bad_settings_are_config_errors() {
        for text in [
            "bogus = 1",
            "seed = x",
            "no equals sign",
            "rffd_cv = kfold:1",
            "svm_c_grid = 1, 0",
            "sparsity = 0",
            "resize = 10",
            "identity_disjoint = maybe",
            "ksvd_unused_atoms = drop",
        ] {
            let mut raw = RawConfig::defaults();
            let r = raw.apply_text(text, None).and_then(|_| PipelineConfig::from_raw(&raw));
            assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let cfg = PipelineConfig::from_raw(&RawConfig::defaults()).unwrap();
        let s = cfg.seeds();
        let all = [s.split, s.rffd, s.rffd_cv, s.ksvd, s.svm_cv];
        for i in 0..all.len() {
            for j in 0..i {
                assert_ne!(all[i], all[j]);
            }
        }
        assert_eq!(s, cfg.seeds());
    }
}
