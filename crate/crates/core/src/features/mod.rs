//! Per-source behavioral feature matrices.

mod extract;
mod normalize;

pub use extract::{
    disinhibition, extract_source, onoff_ratio, parasociality, profile_features,
    search_browse_ratio, self_disclosure, social_capital, temporal_features, usage_time,
    read_profiles, ExtractConfig, Gender, Profile, SocialCapital, UsageTime,
};
pub use normalize::{normalize, ColumnStats, NormStats};

use std::path::Path;

use crate::error::{Error, Result};

/// Canonical column names, in order.
pub const FEATURE_NAMES: [&str; 24] = [
    "pr_ratio",
    "onoff_ratio",
    "sc_tie_ratio",
    "sc_interacted_ratio",
    "ssb_ratio",
    "emoticons_per_post",
    "stickers_per_post",
    "selfies_per_post",
    "bi_avg",
    "bi_med",
    "bi_sd",
    "bi_max",
    "bi_min",
    "bl_avg",
    "bl_med",
    "bl_sd",
    "bl_max",
    "bl_min",
    "daily_duration",
    "daily_sessions",
    "clustering_coef",
    "age",
    "gender",
    "game_posts",
];

pub const NUM_FEATURES: usize = FEATURE_NAMES.len();

/// Column indices for the canonical layout.
pub mod col {
    pub const PR: usize = 0;
    pub const ONOFF: usize = 1;
    pub const SC_TIE: usize = 2;
    pub const SC_INTERACTED: usize = 3;
    pub const SSB: usize = 4;
    pub const EMOTICONS: usize = 5;
    pub const STICKERS: usize = 6;
    pub const SELFIES: usize = 7;
    pub const BURST_INTENSITY: usize = 8;
    pub const BURST_LENGTH: usize = 13;
    pub const BL_SD: usize = 15;
    pub const DAILY_DURATION: usize = 18;
    pub const DAILY_SESSIONS: usize = 19;
    pub const CLUSTERING: usize = 20;
    pub const AGE: usize = 21;
    pub const GENDER: usize = 22;
    pub const GAME_POSTS: usize = 23;
}

/// N users by named columns; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub source_id: String,
    pub users: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl FeatureMatrix {
    pub fn new(source_id: impl Into<String>, columns: Vec<String>) -> Self {
        FeatureMatrix {
            source_id: source_id.into(),
            users: Vec::new(),
            columns,
            cells: Vec::new(),
        }
    }

    pub fn canonical(source_id: impl Into<String>) -> Self {
        Self::new(source_id, FEATURE_NAMES.iter().map(|s| s.to_string()).collect())
    }

    pub fn push_row(&mut self, user: impl Into<String>, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.users.push(user.into());
        self.cells.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.users.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_canonical(&self) -> bool {
        self.columns.iter().map(String::as_str).eq(FEATURE_NAMES.iter().copied())
    }

    pub fn row_of(&self, user: &str) -> Option<usize> {
        self.users.iter().position(|u| u == user)
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col]
    }

    pub fn column(&self, col: usize) -> Vec<Option<f64>> {
        self.cells.iter().map(|r| r[col]).collect()
    }

    /// Dense copy with missing cells replaced by `fill`.
    pub fn dense(&self, fill: f64) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|c| c.unwrap_or(fill)).collect())
            .collect()
    }

    /// Keeps only `cols`, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            source_id: self.source_id.clone(),
            users: self.users.clone(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            cells: self
                .cells
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
        }
    }

    /// Rows reordered (and filtered) to `roster`; unknown users get all-missing rows.
    pub fn aligned_to(&self, roster: &[String]) -> FeatureMatrix {
        let idx: std::collections::HashMap<&str, usize> = self
            .users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.as_str(), i))
            .collect();
        FeatureMatrix {
            source_id: self.source_id.clone(),
            users: roster.to_vec(),
            columns: self.columns.clone(),
            cells: roster
                .iter()
                .map(|u| match idx.get(u.as_str()) {
                    Some(&i) => self.cells[i].clone(),
                    None => vec![None; self.columns.len()],
                })
                .collect(),
        }
    }

    /// CSV with a `user_id` column followed by the feature columns; empty cell = missing.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut header = vec!["user_id".to_string()];
        header.extend(self.columns.iter().cloned());
        wtr.write_record(&header).map_err(|e| Error::csv(path, e))?;
        for (user, row) in self.users.iter().zip(&self.cells) {
            let mut rec = vec![user.clone()];
            rec.extend(row.iter().map(|c| c.map(|v| format!("{v}")).unwrap_or_default()));
            wtr.write_record(&rec).map_err(|e| Error::csv(path, e))?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path, source_id: &str) -> Result<FeatureMatrix> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.get(0) != Some("user_id") {
            return Err(Error::InvalidArgument(format!(
                "{}: first column must be user_id",
                path.display()
            )));
        }
        let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut m = FeatureMatrix::new(source_id, columns);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let row = rec
                .iter()
                .skip(1)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>().map(Some).map_err(|_| {
                            Error::InvalidArgument(format!("{}: bad number {cell:?}", path.display()))
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            m.push_row(&rec[0], row);
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_missing_cells() {
        let mut m = FeatureMatrix::canonical("s0");
        let mut row = vec![Some(1.5); NUM_FEATURES];
        row[3] = None;
        m.push_row("u1", row);
        m.push_row("u2", vec![None; NUM_FEATURES]);
        let f = tempfile::NamedTempFile::new().unwrap();
        m.write_csv(f.path()).unwrap();
        let back = FeatureMatrix::read_csv(f.path(), "s0").unwrap();
        assert_eq!(back, m);
        assert!(back.is_canonical());
    }

    #[test]
    fn align_fills_missing_rows() {
        let mut m = FeatureMatrix::new("s", vec!["a".into()]);
        m.push_row("x", vec![Some(1.0)]);
        let a = m.aligned_to(&["y".to_string(), "x".to_string()]);
        assert_eq!(a.cells, vec![vec![None], vec![Some(1.0)]]);
    }
}
