use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// How missing feature cells enter the tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingMode {
    /// Missing cells are left out of the observation set.
    #[default]
    Exclude,
    /// Missing cells take the mean of their (feature, source) column and count as observed.
    MeanImpute,
}

/// Sparse N x D x M tensor of observed entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    entries: Vec<(usize, usize, usize, f64)>,
}

impl FeatureTensor {
    /// Builds a tensor, rejecting out-of-range indices and duplicate cells.
    pub fn new(n: usize, d: usize, m: usize, mut entries: Vec<(usize, usize, usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, j, k, _)| (i, j, k));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1, w[0].2) == (w[1].0, w[1].1, w[1].2) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate entry ({}, {}, {})",
                    w[0].0, w[0].1, w[0].2
                )));
            }
        }
        if let Some(&(i, j, k, _)) = entries.iter().find(|&&(i, j, k, _)| i >= n || j >= d || k >= m) {
            return Err(Error::InvalidArgument(format!(
                "entry ({i}, {j}, {k}) outside {n}x{d}x{m}"
            )));
        }
        if let Some(&(i, j, k, v)) = entries.iter().find(|e| !e.3.is_finite()) {
            return Err(Error::InvalidArgument(format!("entry ({i}, {j}, {k}) = {v}")));
        }
        Ok(FeatureTensor { n, d, m, entries })
    }

    /// Dense tensor with every cell observed, indexed as `values[i][j][k]`.
    pub fn from_dense(values: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = values.len();
        let d = values.first().map_or(0, Vec::len);
        let m = values.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(n * d * m);
        for (i, plane) in values.iter().enumerate() {
            for (j, fiber) in plane.iter().enumerate() {
                for (k, &v) in fiber.iter().enumerate() {
                    entries.push((i, j, k, v));
                }
            }
        }
        Self::new(n, d, m, entries)
    }

    pub fn entries(&self) -> &[(usize, usize, usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Observed entry count per user row.
    pub fn counts_per_user(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for &(i, _, _, _) in &self.entries {
            counts[i] += 1;
        }
        counts
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.3 * e.3).sum::<f64>().sqrt()
    }
}

/// Stacks one feature matrix per source into an N x D x M tensor with users
/// ordered as in `roster`.
pub fn assemble_tensor(matrices: &[FeatureMatrix], roster: &[String], mode: MissingMode) -> Result<FeatureTensor> {
    let Some(first) = matrices.first() else {
        return Err(Error::InvalidArgument("no source matrices".into()));
    };
    if let Some(bad) = matrices.iter().find(|m| m.columns != first.columns) {
        return Err(Error::Misaligned(format!(
            "source {} has a different column set",
            bad.source_id
        )));
    }
    let (n, d, m) = (roster.len(), first.n_cols(), matrices.len());
    let mut entries = Vec::new();
    let mut seen = vec![false; n];
    for (k, matrix) in matrices.iter().enumerate() {
        let rows: HashMap<&str, usize> = matrix
            .users
            .iter()
            .enumerate()
            .map(|(r, u)| (u.as_str(), r))
            .collect();
        let means: Vec<Option<f64>> = (0..d)
            .map(|j| {
                let obs: Vec<f64> = matrix.cells.iter().filter_map(|r| r[j]).collect();
                (!obs.is_empty()).then(|| obs.iter().sum::<f64>() / obs.len() as f64)
            })
            .collect();
        for (i, user) in roster.iter().enumerate() {
            let row = rows.get(user.as_str()).map(|&r| &matrix.cells[r]);
            let participates = row.is_some_and(|r| r.iter().any(Option::is_some));
            if participates {
                seen[i] = true;
            }
            for j in 0..d {
                match (row.and_then(|r| r[j]), mode) {
                    (Some(v), _) => entries.push((i, j, k, v)),
                    (None, MissingMode::MeanImpute) => {
                        if let Some(mean) = means[j] {
                            entries.push((i, j, k, mean));
                        }
                    }
                    (None, MissingMode::Exclude) => {}
                }
            }
        }
    }
    let missing: Vec<String> = roster
        .iter()
        .zip(&seen)
        .filter(|(_, &s)| !s)
        .map(|(u, _)| u.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UserInNoSource(missing));
    }
    FeatureTensor::new(n, d, m, entries)
}

/// Side-by-side concatenation of the (already z-scored) source matrices;
/// missing cells become 0, the post-normalization mean.
pub fn concatenate_baseline(matrices: &[FeatureMatrix], roster: &[String]) -> FeatureMatrix {
    let columns = matrices
        .iter()
        .flat_map(|m| m.columns.iter().map(move |c| format!("{}:{c}", m.source_id)))
        .collect();
    let source = matrices
        .iter()
        .map(|m| m.source_id.as_str())
        .collect::<Vec<_>>()
        .join("+");
    let aligned: Vec<FeatureMatrix> = matrices.iter().map(|m| m.aligned_to(roster)).collect();
    let mut out = FeatureMatrix::new(source, columns);
    for (i, user) in roster.iter().enumerate() {
        let row = aligned
            .iter()
            .flat_map(|m| m.cells[i].iter().map(|c| Some(c.unwrap_or(0.0))))
            .collect();
        out.push_row(user.clone(), row);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureMatrix, NUM_FEATURES};

    fn full_matrix(source: &str, users: &[&str], base: f64) -> FeatureMatrix {
        let mut m = FeatureMatrix::canonical(source);
        for (i, u) in users.iter().enumerate() {
            m.push_row(*u, (0..NUM_FEATURES).map(|j| Some(base + (i * NUM_FEATURES + j) as f64)).collect());
        }
        m
    }

    fn roster(users: &[&str]) -> Vec<String> {
        users.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn fully_observed_counts() {
        let users = ["a", "b"];
        let mats = vec![full_matrix("s0", &users, 0.0), full_matrix("s1", &users, 100.0)];
        let t = assemble_tensor(&mats, &roster(&users), MissingMode::Exclude).unwrap();
        assert_eq!((t.n, t.d, t.m), (2, 24, 2));
        assert_eq!(t.len(), 96);
    }

    #[test]
    fn masked_cell_excluded_or_imputed() {
        let users = ["a", "b"];
        let mut s0 = full_matrix("s0", &users, 0.0);
        // z-score column 5 so its mean is zero
        s0.cells[0][5] = Some(-1.0);
        s0.cells[1][5] = Some(1.0);
        let mut with_gap = s0.clone();
        with_gap.cells[0][5] = None;
        with_gap.cells[1][5] = Some(0.0);
        let mats = vec![with_gap.clone(), full_matrix("s1", &users, 100.0)];
        let a = assemble_tensor(&mats, &roster(&users), MissingMode::Exclude).unwrap();
        assert_eq!(a.len(), 95);
        let b = assemble_tensor(&mats, &roster(&users), MissingMode::MeanImpute).unwrap();
        assert_eq!(b.len(), 96);
        let imputed = b.entries().iter().find(|e| (e.0, e.1, e.2) == (0, 5, 0)).unwrap();
        assert_eq!(imputed.3, 0.0);
    }

    #[test]
    fn user_without_data_is_an_error() {
        let mats = vec![full_matrix("s0", &["a"], 0.0)];
        let err = assemble_tensor(&mats, &roster(&["a", "ghost"]), MissingMode::Exclude).unwrap_err();
        match err {
            Error::UserInNoSource(u) => assert_eq!(u, vec!["ghost".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_out_of_range_entries_rejected() {
        assert!(FeatureTensor::new(1, 1, 1, vec![(0, 0, 0, 1.0), (0, 0, 0, 2.0)]).is_err());
        assert!(FeatureTensor::new(1, 1, 1, vec![(0, 1, 0, 1.0)]).is_err());
    }

    #[test]
    fn concatenation_layout() {
        let users = ["a", "b"];
        let s0 = full_matrix("s0", &users, 0.0);
        let mut s1 = full_matrix("s1", &users, 100.0);
        s1.cells[1][3] = None;
        let cat = concatenate_baseline(&[s0.clone(), s1], &roster(&users));
        assert_eq!(cat.n_cols(), 48);
        assert_eq!(cat.columns[0], "s0:pr_ratio");
        assert_eq!(cat.columns[24], "s1:pr_ratio");
        assert_eq!(cat.cells[1][24 + 3], Some(0.0));
        assert_eq!(cat.cells[0][24], Some(100.0));

        let single = concatenate_baseline(std::slice::from_ref(&s0), &roster(&users));
        assert_eq!(single.cells, s0.cells);
    }
}
