//! Run settings as namespaced `key = value` pairs.
//!
//! A config file holds one `key = value` per line; blank lines and lines
//! starting with `#` are skipped. Keys not set keep their defaults. Every
//! seeded component draws from the single root `seed`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::burst::BurstConfig;
use crate::classify::SvmConfig;
use crate::error::{Error, Result};
use crate::features::ExtractConfig;
use crate::pipeline::PipelineConfig;
use crate::stm::StmConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub size: usize,
    pub homophily: f64,
    pub sources: usize,
    pub participation: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            size: 100,
            homophily: 0.7,
            sources: 2,
            participation: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub synth: SynthSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 0,
            pipeline: PipelineConfig::default(),
            synth: SynthSettings::default(),
        }
    }
}

/// Every key with its help text, in listing order.
pub const KEYS: [(&str, &str); 26] = [
    ("seed", "root seed for every randomized step"),
    ("burst.scale", "burst rate over base rate"),
    ("burst.gamma", "state transition cost coefficient"),
    ("burst.include_offline", "feed check-ins and RSVPs to the burst detector"),
    ("features.strong_tie", "interactions making a strong tie"),
    ("features.session_gap", "max seconds between events of one session"),
    ("stm.user_rank", "user rank R"),
    ("stm.feature_rank", "feature rank S"),
    ("stm.source_rank", "source rank T (auto = min(M, 5))"),
    ("stm.lambda1", "graph smoothing weight"),
    ("stm.lambda2", "user factor norm weight"),
    ("stm.eta", "SGD step size"),
    ("stm.tolerance", "stop when an epoch improves less than this"),
    ("stm.max_epochs", "epoch cap"),
    ("stm.init_scale", "uniform init half-width"),
    ("tsvm.c", "labeled hinge cost C"),
    ("tsvm.cstar", "unlabeled hinge cost C*"),
    ("tsvm.epochs", "SGD epochs per training"),
    ("tsvm.min_iterations", "minimum SGD steps per training"),
    ("tsvm.max_sweeps", "label-switching sweeps per cost level"),
    ("cv.folds", "cross-validation folds"),
    ("cv.labeled_fraction", "fraction of users whose labels are visible"),
    ("synth.size", "users per archetype"),
    ("synth.homophily", "homophily h in [0, 1]"),
    ("synth.sources", "number of sources"),
    ("synth.participation", "per-source participation probability"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.pipeline;
        let stm: &mut StmConfig = &mut p.stm;
        let svm: &mut SvmConfig = &mut p.svm;
        let ext: &mut ExtractConfig = &mut p.extract;
        let burst: &mut BurstConfig = &mut ext.burst;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "burst.scale" => burst.scale = parse(key, value)?,
            "burst.gamma" => burst.gamma = parse(key, value)?,
            "burst.include_offline" => burst.include_offline = parse(key, value)?,
            "features.strong_tie" => ext.strong_tie_threshold = parse(key, value)?,
            "features.session_gap" => ext.session_gap = parse(key, value)?,
            "stm.user_rank" => stm.user_rank = parse(key, value)?,
            "stm.feature_rank" => stm.feature_rank = parse(key, value)?,
            "stm.source_rank" => {
                stm.source_rank = match value.trim() {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "stm.lambda1" => stm.lambda1 = parse(key, value)?,
            "stm.lambda2" => stm.lambda2 = parse(key, value)?,
            "stm.eta" => stm.eta = parse(key, value)?,
            "stm.tolerance" => stm.tolerance = parse(key, value)?,
            "stm.max_epochs" => stm.max_epochs = parse(key, value)?,
            "stm.init_scale" => stm.init_scale = parse(key, value)?,
            "tsvm.c" => svm.c = parse(key, value)?,
            "tsvm.cstar" => svm.c_star = parse(key, value)?,
            "tsvm.epochs" => svm.epochs = parse(key, value)?,
            "tsvm.min_iterations" => svm.min_iterations = parse(key, value)?,
            "tsvm.max_sweeps" => svm.max_sweeps = parse(key, value)?,
            "cv.folds" => p.folds = parse(key, value)?,
            "cv.labeled_fraction" => p.labeled_fraction = parse(key, value)?,
            "synth.size" => self.synth.size = parse(key, value)?,
            "synth.homophily" => self.synth.homophily = parse(key, value)?,
            "synth.sources" => self.synth.sources = parse(key, value)?,
            "synth.participation" => self.synth.participation = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.pipeline;
        let (stm, svm, ext) = (&p.stm, &p.svm, &p.extract);
        Some(match key {
            "seed" => self.seed.to_string(),
            "burst.scale" => ext.burst.scale.to_string(),
            "burst.gamma" => ext.burst.gamma.to_string(),
            "burst.include_offline" => ext.burst.include_offline.to_string(),
            "features.strong_tie" => ext.strong_tie_threshold.to_string(),
            "features.session_gap" => ext.session_gap.to_string(),
            "stm.user_rank" => stm.user_rank.to_string(),
            "stm.feature_rank" => stm.feature_rank.to_string(),
            "stm.source_rank" => stm.source_rank.map_or_else(|| "auto".to_string(), |t| t.to_string()),
            "stm.lambda1" => stm.lambda1.to_string(),
            "stm.lambda2" => stm.lambda2.to_string(),
            "stm.eta" => stm.eta.to_string(),
            "stm.tolerance" => stm.tolerance.to_string(),
            "stm.max_epochs" => stm.max_epochs.to_string(),
            "stm.init_scale" => stm.init_scale.to_string(),
            "tsvm.c" => svm.c.to_string(),
            "tsvm.cstar" => svm.c_star.to_string(),
            "tsvm.epochs" => svm.epochs.to_string(),
            "tsvm.min_iterations" => svm.min_iterations.to_string(),
            "tsvm.max_sweeps" => svm.max_sweeps.to_string(),
            "cv.folds" => p.folds.to_string(),
            "cv.labeled_fraction" => p.labeled_fraction.to_string(),
            "synth.size" => self.synth.size.to_string(),
            "synth.homophily" => self.synth.homophily.to_string(),
            "synth.sources" => self.synth.sources.to_string(),
            "synth.participation" => self.synth.participation.to_string(),
            _ => return None,
        })
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Every key with its current value, sorted by key.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        KEYS.into_iter()
            .map(|(k, _)| (k.to_string(), self.get(k).expect("listed key")))
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Hex SHA-256 of [`Settings::to_text`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Pipeline config with the root seed pushed into every seeded stage.
    pub fn seeded_pipeline(&self) -> PipelineConfig {
        let mut p = self.pipeline;
        p.seed = self.seed;
        p.stm.seed = self.seed;
        p.svm.seed = self.seed;
        p
    }
}
