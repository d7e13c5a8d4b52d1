//! Per-class linear SVMs, their transductive extension and evaluation.
//!
//! Each of the three classes is handled by an independent binary model
//! `f_k(x) = w_k . x + b_k`; a user's label vector is the sign pattern of the
//! three scores, with a score of exactly zero mapped to -1.

mod crossval;
mod infogain;
mod metrics;
mod svm;
mod tsvm;

pub use crossval::{stratified_folds, summarize, MetricSummary, Spread};
pub use infogain::{discretize, entropy, information_gain, information_gain_ranking, FeatureScore};
pub use metrics::{auc, evaluate, f1, Metrics};
pub use svm::{hinge_objective, train_svm, SvmConfig};
pub use tsvm::{train_tsvm, TsvmResult};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label vector over the three classes, entries in {+1, -1}.
pub type LabelVector = [i8; 3];

pub const NEGATIVE: LabelVector = [-1, -1, -1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    #[serde(rename = "cr")]
    Cr,
    #[serde(rename = "nc")]
    Nc,
    #[serde(rename = "io")]
    Io,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::Cr, Class::Nc, Class::Io];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Cr => "cr",
            Class::Nc => "nc",
            Class::Io => "io",
        }
    }

    pub fn parse(s: &str) -> Option<Class> {
        Class::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A training row: features plus, when labeled, the full label vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: Option<LabelVector>,
}

impl LabeledSample {
    pub fn labeled(x: Vec<f64>, y: LabelVector) -> Self {
        LabeledSample { x, y: Some(y) }
    }

    pub fn unlabeled(x: Vec<f64>) -> Self {
        LabeledSample { x, y: None }
    }

    pub fn is_labeled(&self) -> bool {
        self.y.is_some()
    }
}

/// Binary linear model for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub class: Class,
    pub w: Vec<f64>,
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C*")]
    pub c_star: f64,
    pub seed: u64,
    pub dim: usize,
    #[serde(skip)]
    pub iterations: usize,
    /// Training objective of the returned (averaged) iterate.
    #[serde(skip)]
    pub objective: f64,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(dot(&self.w, x) + self.b)
    }
}

/// Sign with the zero tie mapped to -1.
pub fn sign(score: f64) -> i8 {
    if score > 0.0 {
        1
    } else {
        -1
    }
}

/// Labels and scores from the three per-class models.
pub fn predict(models: &[LinearModel; 3], x: &[f64]) -> Result<(LabelVector, [f64; 3])> {
    let mut labels = NEGATIVE;
    let mut scores = [0.0; 3];
    for (k, model) in models.iter().enumerate() {
        scores[k] = model.decision(x)?;
        labels[k] = sign(scores[k]);
    }
    Ok((labels, scores))
}

pub fn write_models(path: &Path, models: &[LinearModel; 3]) -> Result<()> {
    let text = serde_json::to_string_pretty(models)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_models(path: &Path) -> Result<[LinearModel; 3]> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let models: Vec<LinearModel> = serde_json::from_str(&text)?;
    let models: [LinearModel; 3] = models
        .try_into()
        .map_err(|v: Vec<_>| Error::InvalidArgument(format!("expected 3 models, found {}", v.len())))?;
    for (k, m) in models.iter().enumerate() {
        if m.class.index() != k {
            return Err(Error::InvalidArgument(format!("model {k} is for class {}", m.class)));
        }
        if m.w.len() != m.dim {
            return Err(Error::DimensionMismatch {
                expected: m.dim,
                got: m.w.len(),
            });
        }
    }
    Ok(models)
}

/// Per-user predictions: `user_id,cr,nc,io,score_cr,score_nc,score_io`.
pub fn write_predictions(path: &Path, users: &[String], labels: &[LabelVector], scores: &[[f64; 3]]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    wtr.write_record(["user_id", "cr", "nc", "io", "score_cr", "score_nc", "score_io"])
        .map_err(|e| Error::csv(path, e))?;
    for ((user, y), s) in users.iter().zip(labels).zip(scores) {
        let mut rec = vec![user.clone()];
        rec.extend(y.iter().map(|v| v.to_string()));
        rec.extend(s.iter().map(|v| format!("{v}")));
        wtr.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub users: Vec<String>,
    pub labels: Vec<LabelVector>,
    pub scores: Vec<[f64; 3]>,
}

pub fn read_predictions(path: &Path) -> Result<Predictions> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Predictions {
        users: Vec::new(),
        labels: Vec::new(),
        scores: Vec::new(),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if rec.len() != 7 {
            return Err(Error::InvalidArgument(format!(
                "{}: expected 7 prediction columns, found {}",
                path.display(),
                rec.len()
            )));
        }
        let bad = |what: &str| Error::InvalidArgument(format!("{}: bad {what} for {}", path.display(), &rec[0]));
        let mut y = NEGATIVE;
        let mut s = [0.0; 3];
        for k in 0..3 {
            y[k] = parse_sign(&rec[1 + k]).ok_or_else(|| bad("label"))?;
            s[k] = rec[4 + k].parse().map_err(|_| bad("score"))?;
        }
        out.users.push(rec[0].to_string());
        out.labels.push(y);
        out.scores.push(s);
    }
    Ok(out)
}

/// Accepts `1`/`+1`/`-1`, and `0` as -1 for 0/1-coded files.
pub(crate) fn parse_sign(s: &str) -> Option<i8> {
    match s.trim() {
        "1" | "+1" => Some(1),
        "-1" | "0" => Some(-1),
        _ => None,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(class: Class, w: Vec<f64>, b: f64) -> LinearModel {
        LinearModel {
            class,
            dim: w.len(),
            w,
            b,
            c: 1.0,
            c_star: 0.5,
            seed: 0,
            iterations: 0,
            objective: 0.0,
        }
    }

    fn triple(w: Vec<f64>, b: f64) -> [LinearModel; 3] {
        Class::ALL.map(|c| model(c, w.clone(), b))
    }

    #[test]
    fn score_and_sign() {
        let (y, s) = predict(&triple(vec![1.0, 0.0], 0.0), &[2.0, 5.0]).unwrap();
        assert_eq!(s, [2.0; 3]);
        assert_eq!(y, [1; 3]);
        let (y, _) = predict(&triple(vec![1.0, 0.0], -0.5), &[0.0, 0.0]).unwrap();
        assert_eq!(y, NEGATIVE);
    }

    #[test]
    fn zero_score_is_negative() {
        let (y, s) = predict(&triple(vec![1.0], 0.0), &[0.0]).unwrap();
        assert_eq!(s, [0.0; 3]);
        assert_eq!(y, NEGATIVE);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            predict(&triple(vec![1.0, 2.0], 0.0), &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn positive_rescaling_keeps_labels() {
        let a = triple(vec![0.3, -1.2], 0.1);
        let b = Class::ALL.map(|c| model(c, vec![3.0, -12.0], 1.0));
        for x in [[1.0, 0.0], [0.0, 1.0], [-2.0, -0.4], [0.5, 0.1]] {
            assert_eq!(predict(&a, &x).unwrap().0, predict(&b, &x).unwrap().0);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let models = triple(vec![0.25, -1.5, 3.0], 0.125);
        write_models(&path, &models).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for key in ["\"class\"", "\"w\"", "\"b\"", "\"C\"", "\"C*\"", "\"seed\"", "\"dim\""] {
            assert!(text.contains(key), "{key} missing");
        }
        assert_eq!(read_models(&path).unwrap(), models);
    }

    #[test]
    fn prediction_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let users = vec!["a".to_string(), "b".to_string()];
        let labels = vec![[1, -1, -1], NEGATIVE];
        let scores = vec![[0.5, -0.25, -1.0], [-3.0, -0.0625, -2.0]];
        write_predictions(&path, &users, &labels, &scores).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("user_id,cr,nc,io,score_cr,score_nc,score_io\n"));
        let back = read_predictions(&path).unwrap();
        assert_eq!(back.users, users);
        assert_eq!(back.labels, labels);
        assert_eq!(back.scores, scores);
    }
}
