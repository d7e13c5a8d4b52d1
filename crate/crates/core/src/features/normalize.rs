use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub sd: f64,
}

/// Per-column z-score statistics; `None` for columns with no observed training cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub columns: Vec<String>,
    pub stats: Vec<Option<ColumnStats>>,
}

impl NormStats {
    /// Applies the stored statistics to any matrix with the same columns.
    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.columns != self.columns {
            return Err(Error::Misaligned("normalization columns differ".into()));
        }
        let mut out = matrix.clone();
        for row in &mut out.cells {
            for (cell, stat) in row.iter_mut().zip(&self.stats) {
                if let (Some(v), Some(s)) = (cell.as_mut(), stat) {
                    *v = if s.sd > 0.0 { (*v - s.mean) / s.sd } else { 0.0 };
                }
            }
        }
        Ok(out)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let map: BTreeMap<&str, Option<ColumnStats>> = self
            .columns
            .iter()
            .map(String::as_str)
            .zip(self.stats.iter().copied())
            .collect();
        let text = serde_json::to_string_pretty(&map)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path, columns: &[String]) -> Result<NormStats> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: BTreeMap<String, Option<ColumnStats>> = serde_json::from_str(&text)?;
        let stats = columns
            .iter()
            .map(|c| {
                map.get(c)
                    .copied()
                    .ok_or_else(|| Error::Misaligned(format!("column {c} missing from {}", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NormStats {
            columns: columns.to_vec(),
            stats,
        })
    }
}

/// Z-scores every column using population statistics of the observed cells in
/// `training_rows`. Zero-variance columns map to 0; missing cells stay missing.
pub fn normalize(matrix: &FeatureMatrix, training_rows: &[usize]) -> Result<(FeatureMatrix, NormStats)> {
    if let Some(&bad) = training_rows.iter().find(|&&r| r >= matrix.n_rows()) {
        return Err(Error::InvalidArgument(format!("training row {bad} out of range")));
    }
    let stats = (0..matrix.n_cols())
        .map(|c| {
            let vals: Vec<f64> = training_rows
                .iter()
                .filter_map(|&r| matrix.cells[r][c])
                .collect();
            if vals.is_empty() {
                return None;
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            Some(ColumnStats { mean, sd: var.sqrt() })
        })
        .collect();
    let norms = NormStats {
        columns: matrix.columns.clone(),
        stats,
    };
    let out = norms.apply(matrix)?;
    Ok((out, norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single_column(values: &[Option<f64>]) -> FeatureMatrix {
        let mut m = FeatureMatrix::new("s", vec!["x".into()]);
        for (i, v) in values.iter().enumerate() {
            m.push_row(format!("u{i}"), vec![*v]);
        }
        m
    }

    #[test]
    fn z_scores_with_population_sd() {
        let m = single_column(&[Some(1.0), Some(2.0), Some(3.0), Some(4.0)]);
        let (out, norms) = normalize(&m, &[0, 1, 2]).unwrap();
        let col = out.column(0);
        assert!((col[0].unwrap() + 1.224744871).abs() < 1e-6);
        assert!(col[1].unwrap().abs() < 1e-12);
        assert!((col[2].unwrap() - 1.224744871).abs() < 1e-6);
        // held-out row 4 under mean 2, sd 0.8165
        assert!((col[3].unwrap() - 2.449489743).abs() < 1e-6);
        let s = norms.stats[0].unwrap();
        assert_eq!(s.mean, 2.0);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let m = single_column(&[Some(5.0), Some(5.0), Some(5.0)]);
        let (out, _) = normalize(&m, &[0, 1, 2]).unwrap();
        assert_eq!(out.column(0), vec![Some(0.0); 3]);
    }

    #[test]
    fn all_missing_column_passes_through() {
        let m = single_column(&[None, None]);
        let (out, norms) = normalize(&m, &[0, 1]).unwrap();
        assert_eq!(out.column(0), vec![None, None]);
        assert_eq!(norms.stats[0], None);
    }

    #[test]
    fn norms_json_round_trip() {
        let m = single_column(&[Some(1.0), Some(3.0)]);
        let (_, norms) = normalize(&m, &[0, 1]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        norms.write_json(f.path()).unwrap();
        assert_eq!(NormStats::read_json(f.path(), &m.columns).unwrap(), norms);
    }

    proptest! {
        #[test]
        fn training_columns_standardized(values in prop::collection::vec(prop::option::weighted(0.8, -1e3f64..1e3), 2..40)) {
            let m = single_column(&values);
            let rows: Vec<usize> = (0..values.len()).collect();
            let (out, _) = normalize(&m, &rows).unwrap();
            let obs: Vec<f64> = out.column(0).into_iter().flatten().collect();
            prop_assert_eq!(obs.len(), values.iter().flatten().count());
            if obs.len() >= 2 {
                let raw: Vec<f64> = values.iter().flatten().copied().collect();
                let spread = raw.iter().cloned().fold(f64::MIN, f64::max) - raw.iter().cloned().fold(f64::MAX, f64::min);
                let n = obs.len() as f64;
                let mean = obs.iter().sum::<f64>() / n;
                let sd = (obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!(mean.abs() < 1e-9);
                if spread > 1e-6 {
                    prop_assert!((sd - 1.0).abs() < 1e-9);
                }
            }
            for (a, b) in values.iter().zip(out.column(0)) {
                prop_assert_eq!(a.is_some(), b.is_some());
            }
        }
    }
}
