use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::{StmConfig, StmFactors};
use crate::error::{Error, Result};

/// JSON checkpoint: dims, config and row-major factor arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub ranks: [usize; 3],
    pub config: StmConfig,
    /// User ids in row order of `u`.
    #[serde(default)]
    pub users: Vec<String>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub core: Vec<f64>,
}

impl Checkpoint {
    pub fn new(factors: &StmFactors, config: &StmConfig, users: &[String]) -> Self {
        let (r, s, t) = factors.ranks();
        let flat = |it: ndarray::iter::Iter<'_, f64, _>| it.copied().collect::<Vec<_>>();
        Checkpoint {
            n: factors.u.nrows(),
            d: factors.v.nrows(),
            m: factors.w.nrows(),
            ranks: [r, s, t],
            config: *config,
            users: users.to_vec(),
            u: flat(factors.u.iter()),
            v: flat(factors.v.iter()),
            w: flat(factors.w.iter()),
            core: factors.core.iter().copied().collect(),
        }
    }

    pub fn factors(&self) -> Result<StmFactors> {
        let [r, s, t] = self.ranks;
        let shape_err = |e: ndarray::ShapeError| Error::InvalidArgument(format!("checkpoint shape: {e}"));
        Ok(StmFactors {
            u: Array2::from_shape_vec((self.n, r), self.u.clone()).map_err(shape_err)?,
            v: Array2::from_shape_vec((self.d, s), self.v.clone()).map_err(shape_err)?,
            w: Array2::from_shape_vec((self.m, t), self.w.clone()).map_err(shape_err)?,
            core: Array3::from_shape_vec((r, s, t), self.core.clone()).map_err(shape_err)?,
        })
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let text = serde_json::to_string(checkpoint)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// CSV `epoch,loss`; epoch 0 is the initial objective.
pub fn write_loss_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    wtr.write_record(["epoch", "loss"]).map_err(|e| Error::csv(path, e))?;
    for (epoch, loss) in trace.iter().enumerate() {
        wtr.write_record([epoch.to_string(), format!("{loss}")])
            .map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}
