//! Graph-regularized Tucker factorization of the user x feature x source tensor.
//!
//! The model reconstructs `t_ijk` as `sum_rst c_rst u_ir v_js w_kt` and
//! minimizes
//!
//! ```text
//! 1/2 sum_obs (t_ijk - t^_ijk)^2 + lambda1/2 tr(U' L U) + lambda2/2 |U|^2
//! ```
//!
//! where `L = D - A` is the Laplacian of the interaction graph. Rows of `U`
//! are the latent user features handed to the classifier.

mod checkpoint;
mod objective;
mod sgd;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, write_loss_trace, Checkpoint};
pub use objective::{
    full_gradient, gradient_check, laplacian_trace, objective, smoothing_pairwise, Gradient,
};
pub use sgd::{sgd_fit, FitResult};
pub use tensor::{assemble_tensor, concatenate_baseline, FeatureTensor, MissingMode};

use ndarray::{Array2, Array3, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StmConfig {
    /// User rank R.
    pub user_rank: usize,
    /// Feature rank S.
    pub feature_rank: usize,
    /// Source rank T; `None` means min(M, 5).
    pub source_rank: Option<usize>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    /// Stop once an epoch lowers the loss by less than this.
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Factors start uniform in [-init_scale, init_scale].
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for StmConfig {
    fn default() -> Self {
        StmConfig {
            user_rank: 10,
            feature_rank: 10,
            source_rank: None,
            lambda1: 0.1,
            lambda2: 0.01,
            eta: 0.01,
            tolerance: 1e-5,
            max_epochs: 500,
            init_scale: 0.5,
            seed: 0,
        }
    }
}

impl StmConfig {
    pub fn ranks(&self, m: usize) -> (usize, usize, usize) {
        (
            self.user_rank,
            self.feature_rank,
            self.source_rank.unwrap_or_else(|| m.min(5)),
        )
    }

    pub fn validate(&self, tensor: &FeatureTensor) -> Result<()> {
        let (r, s, t) = self.ranks(tensor.m);
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if r == 0 || s == 0 || t == 0 {
            return bad("ranks must be positive".into());
        }
        if r > tensor.n || s > tensor.d || t > tensor.m {
            return bad(format!(
                "ranks ({r}, {s}, {t}) exceed tensor dims ({}, {}, {})",
                tensor.n, tensor.d, tensor.m
            ));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return bad("lambda1 and lambda2 must be non-negative".into());
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta {} must be positive", self.eta));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if !(self.init_scale > 0.0) {
            return bad("init_scale must be positive".into());
        }
        Ok(())
    }
}

/// Factor matrices and core tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct StmFactors {
    /// N x R user factors.
    pub u: Array2<f64>,
    /// D x S feature factors.
    pub v: Array2<f64>,
    /// M x T source factors.
    pub w: Array2<f64>,
    /// R x S x T core.
    pub core: Array3<f64>,
}

impl StmFactors {
    pub fn zeros(n: usize, d: usize, m: usize, (r, s, t): (usize, usize, usize)) -> Self {
        StmFactors {
            u: Array2::zeros((n, r)),
            v: Array2::zeros((d, s)),
            w: Array2::zeros((m, t)),
            core: Array3::zeros((r, s, t)),
        }
    }

    /// Uniform random values in [-scale, scale], filled U, V, W, then C.
    pub fn random<R: Rng>(
        n: usize,
        d: usize,
        m: usize,
        ranks: (usize, usize, usize),
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut f = Self::zeros(n, d, m, ranks);
        for x in f
            .u
            .iter_mut()
            .chain(f.v.iter_mut())
            .chain(f.w.iter_mut())
            .chain(f.core.iter_mut())
        {
            *x = rng.random_range(-scale..=scale);
        }
        f
    }

    pub fn ranks(&self) -> (usize, usize, usize) {
        self.core.dim()
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .iter()
            .chain(self.v.iter())
            .chain(self.w.iter())
            .chain(self.core.iter())
            .all(|x| x.is_finite())
    }

    /// `sum_rst c_rst u_ir v_js w_kt`.
    pub fn reconstruct_entry(&self, i: usize, j: usize, k: usize) -> f64 {
        let (u, v, w) = (self.u.row(i), self.v.row(j), self.w.row(k));
        let w = w.as_slice().expect("standard layout");
        let core = self.core.as_slice().expect("standard layout");
        let mut cells = core.chunks_exact(w.len());
        let mut total = 0.0;
        for &ur in u.iter() {
            for &vs in v.iter() {
                let cw: f64 = cells.next().expect("core shape").iter().zip(w).map(|(c, wt)| c * wt).sum();
                total += ur * vs * cw;
            }
        }
        total
    }
}

/// Mode products of the core against one entry's factor rows.
pub(crate) struct EntryProducts {
    /// C x2 v_j x3 w_k, length R.
    pub by_user: Vec<f64>,
    /// C x1 u_i x3 w_k, length S.
    pub by_feature: Vec<f64>,
    /// C x1 u_i x2 v_j, length T.
    pub by_source: Vec<f64>,
    pub prediction: f64,
}

impl EntryProducts {
    pub fn compute(f: &StmFactors, i: usize, j: usize, k: usize) -> Self {
        Self::from_rows(&f.core, f.u.row(i), f.v.row(j), f.w.row(k))
    }

    pub fn from_rows(core: &Array3<f64>, u: ArrayView1<f64>, v: ArrayView1<f64>, w: ArrayView1<f64>) -> Self {
        let (r_dim, s_dim, t_dim) = core.dim();
        let mut by_user = vec![0.0; r_dim];
        let mut by_feature = vec![0.0; s_dim];
        let mut by_source = vec![0.0; t_dim];
        for r in 0..r_dim {
            let ur = u[r];
            let mut acc_r = 0.0;
            for s in 0..s_dim {
                let vs = v[s];
                let mut cw = 0.0;
                for t in 0..t_dim {
                    let c = core[[r, s, t]];
                    cw += c * w[t];
                    by_source[t] += c * ur * vs;
                }
                acc_r += cw * vs;
                by_feature[s] += cw * ur;
            }
            by_user[r] = acc_r;
        }
        let prediction = by_user.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
        EntryProducts {
            by_user,
            by_feature,
            by_source,
            prediction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn naive(f: &StmFactors, i: usize, j: usize, k: usize) -> f64 {
        let (r_dim, s_dim, t_dim) = f.ranks();
        let mut total = 0.0;
        for r in 0..r_dim {
            for s in 0..s_dim {
                for t in 0..t_dim {
                    total += f.core[[r, s, t]] * f.u[[i, r]] * f.v[[j, s]] * f.w[[k, t]];
                }
            }
        }
        total
    }

    #[test]
    fn scalar_product() {
        let mut f = StmFactors::zeros(1, 1, 1, (1, 1, 1));
        f.core[[0, 0, 0]] = 2.0;
        f.u[[0, 0]] = 3.0;
        f.v[[0, 0]] = 4.0;
        f.w[[0, 0]] = 0.5;
        assert_eq!(f.reconstruct_entry(0, 0, 0), 12.0);
    }

    #[test]
    fn zero_core_reconstructs_zero() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut f = StmFactors::random(3, 3, 2, (2, 2, 2), 1.0, &mut rng);
        f.core.fill(0.0);
        assert_eq!(f.reconstruct_entry(1, 2, 1), 0.0);
    }

    #[test]
    fn matches_naive_triple_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let f = StmFactors::random(4, 5, 2, (3, 3, 2), 1.0, &mut rng);
        for i in 0..4 {
            for j in 0..5 {
                for k in 0..2 {
                    let a = f.reconstruct_entry(i, j, k);
                    let b = naive(&f, i, j, k);
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn mode_products_match_naive_contractions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let f = StmFactors::random(2, 2, 2, (3, 2, 2), 1.0, &mut rng);
        let p = EntryProducts::compute(&f, 1, 0, 1);
        let (rd, sd, td) = f.ranks();
        for s in 0..sd {
            let mut x = 0.0;
            for r in 0..rd {
                for t in 0..td {
                    x += f.core[[r, s, t]] * f.u[[1, r]] * f.w[[1, t]];
                }
            }
            assert!((p.by_feature[s] - x).abs() < 1e-12);
        }
        for t in 0..td {
            let mut x = 0.0;
            for r in 0..rd {
                for s in 0..sd {
                    x += f.core[[r, s, t]] * f.u[[1, r]] * f.v[[0, s]];
                }
            }
            assert!((p.by_source[t] - x).abs() < 1e-12);
        }
    }
}
