use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{objective, FeatureTensor, StmConfig, StmFactors};
use crate::activity::SocialGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FitResult {
    pub factors: StmFactors,
    /// Objective after initialization followed by one value per epoch.
    pub loss_trace: Vec<f64>,
    pub epochs: usize,
}

/// Per-entry stochastic gradient descent on the objective.
///
/// Every epoch visits the observed entries in a freshly shuffled order and
/// steps U, V, W and C together along the entry's gradient. The regularizer
/// gradient of user i is split evenly over that user's observed entries, so
/// one epoch applies it once in total. Stops after `max_epochs` or when an
/// epoch lowers the objective by less than `tolerance`. An epoch that raises
/// the objective does not count as converged.
pub fn sgd_fit(tensor: &FeatureTensor, graph: &SocialGraph, config: &StmConfig) -> Result<FitResult> {
    config.validate(tensor)?;
    if graph.len() != tensor.n {
        return Err(Error::Misaligned(format!(
            "graph has {} nodes, tensor has {} users",
            graph.len(),
            tensor.n
        )));
    }
    let ranks = config.ranks(tensor.m);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut f = StmFactors::random(tensor.n, tensor.d, tensor.m, ranks, config.init_scale, &mut rng);
    let counts = tensor.counts_per_user();
    let eta = config.eta;
    let (lambda1, lambda2) = (config.lambda1, config.lambda2);

    let mut loss = objective(&f, tensor, graph, lambda1, lambda2)?;
    let mut trace = vec![loss];
    let mut order: Vec<usize> = (0..tensor.len()).collect();
    let mut epochs = 0;
    let (r_dim, _, _) = ranks;
    let mut reg = vec![0.0; r_dim];

    let (_, s_dim, t_dim) = ranks;
    let mut by_user = vec![0.0; r_dim];
    let mut by_feature = vec![0.0; s_dim];
    let mut by_source = vec![0.0; t_dim];
    let mut ui = vec![0.0; r_dim];
    let mut vj = vec![0.0; s_dim];
    let mut wk = vec![0.0; t_dim];

    while epochs < config.max_epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (i, j, k, t) = tensor.entries()[idx];
            ui.copy_from_slice(f.u.row(i).as_slice().expect("standard layout"));
            vj.copy_from_slice(f.v.row(j).as_slice().expect("standard layout"));
            wk.copy_from_slice(f.w.row(k).as_slice().expect("standard layout"));
            let core = f.core.as_slice_mut().expect("standard layout");
            let prediction = products_into(core, &ui, &vj, &wk, &mut by_user, &mut by_feature, &mut by_source);
            let e = prediction - t;

            // lambda1 (L U)_i + lambda2 u_i, shared across the user's entries
            let share = 1.0 / counts[i] as f64;
            let deg = graph.degree(i);
            for (g, &u) in reg.iter_mut().zip(&ui) {
                *g = (lambda1 * deg + lambda2) * u;
            }
            if lambda1 != 0.0 {
                for &(nb, a) in graph.neighbors(i) {
                    let row = f.u.row(nb);
                    for (g, &u) in reg.iter_mut().zip(row.iter()) {
                        *g -= lambda1 * a * u;
                    }
                }
            }

            let mut pos = 0;
            for &ur in &ui {
                for &vs in &vj {
                    let scale = eta * e * ur * vs;
                    for &wt in &wk {
                        core[pos] -= scale * wt;
                        pos += 1;
                    }
                }
            }
            for (r, x) in f.u.row_mut(i).iter_mut().enumerate() {
                *x -= eta * (e * by_user[r] + share * reg[r]);
            }
            for (s, x) in f.v.row_mut(j).iter_mut().enumerate() {
                *x -= eta * e * by_feature[s];
            }
            for (tt, x) in f.w.row_mut(k).iter_mut().enumerate() {
                *x -= eta * e * by_source[tt];
            }
        }
        epochs += 1;
        let next = objective(&f, tensor, graph, lambda1, lambda2)?;
        if !next.is_finite() || !f.is_finite() {
            return Err(Error::Diverged {
                epoch: epochs,
                suggested: eta / 10.0,
            });
        }
        trace.push(next);
        let improvement = loss - next;
        loss = next;
        if (0.0..config.tolerance).contains(&improvement) {
            break;
        }
    }
    log::debug!("sgd_fit: {epochs} epochs, final loss {loss}");
    Ok(FitResult {
        factors: f,
        loss_trace: trace,
        epochs,
    })
}

/// Mode products of a row-major core against one entry's factor rows,
/// written into the buffers; returns the reconstructed value.
fn products_into(
    core: &[f64],
    u: &[f64],
    v: &[f64],
    w: &[f64],
    by_user: &mut [f64],
    by_feature: &mut [f64],
    by_source: &mut [f64],
) -> f64 {
    by_feature.fill(0.0);
    by_source.fill(0.0);
    let mut pos = 0;
    for (r, &ur) in u.iter().enumerate() {
        let mut acc_r = 0.0;
        for (s, &vs) in v.iter().enumerate() {
            let mut cw = 0.0;
            let uv = ur * vs;
            for (t, &wt) in w.iter().enumerate() {
                let c = core[pos];
                cw += c * wt;
                by_source[t] += c * uv;
                pos += 1;
            }
            acc_r += cw * vs;
            by_feature[s] += cw * ur;
        }
        by_user[r] = acc_r;
    }
    by_user.iter().zip(u).map(|(a, b)| a * b).sum()
}
