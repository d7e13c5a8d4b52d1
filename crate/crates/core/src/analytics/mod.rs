//! Network analyses on classified users and the feature-ablation harness.

mod ablation;
mod network;

pub use ablation::{ablation_curve, increments, power_fit, AblationCurve, PowerFit};
pub use network::{
    community_ratios, friend_type_distribution, hop_distance_same_type, label_propagation, CommunityPoint, HopStats,
    TypeDistribution, PROPAGATION_ROUNDS,
};

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::classify::LabelVector;
use crate::error::{Error, Result};

/// A disorder class, or `Na` for users positive for none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum UserType {
    #[serde(rename = "CR")]
    Cr,
    #[serde(rename = "NC")]
    Nc,
    #[serde(rename = "IO")]
    Io,
    #[serde(rename = "NA")]
    Na,
}

impl UserType {
    pub const ALL: [UserType; 4] = [UserType::Cr, UserType::Nc, UserType::Io, UserType::Na];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            UserType::Cr => "CR",
            UserType::Nc => "NC",
            UserType::Io => "IO",
            UserType::Na => "NA",
        }
    }

    /// Every positive class of `y`, or `[Na]` when there is none.
    pub fn of(y: &LabelVector) -> Vec<UserType> {
        let types: Vec<UserType> = UserType::ALL[..3].iter().copied().filter(|t| y[t.index()] > 0).collect();
        if types.is_empty() {
            vec![UserType::Na]
        } else {
            types
        }
    }
}

impl fmt::Display for UserType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of a long-format `series,x,y` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

impl SeriesPoint {
    pub fn new(series: impl Into<String>, x: f64, y: f64) -> Self {
        SeriesPoint {
            series: series.into(),
            x,
            y,
        }
    }
}

pub fn write_series(path: &Path, points: &[SeriesPoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for p in points {
        wtr.serialize(p).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}
