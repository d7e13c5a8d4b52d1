use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, Class, LinearModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Cost of labeled hinge losses.
    pub c: f64,
    /// Final cost of unlabeled hinge losses in the transductive model.
    pub c_star: f64,
    pub epochs: usize,
    /// Lower bound on the total number of stochastic steps.
    pub min_iterations: usize,
    /// Cap on label-switching sweeps at each cost level.
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            c_star: 0.5,
            epochs: 50,
            min_iterations: 100_000,
            max_sweeps: 50,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C = {} must be positive", self.c)));
        }
        if !(self.c_star >= 0.0 && self.c_star.is_finite()) {
            return Err(Error::InvalidArgument(format!("C* = {} must be non-negative", self.c_star)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// `1/2 |w|^2 + sum_i c_i max(0, 1 - y_i (w . x_i + b))`.
pub fn hinge_objective(w: &[f64], b: f64, x: &[Vec<f64>], y: &[i8], cost: &[f64]) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(y)
        .zip(cost)
        .map(|((xi, &yi), &ci)| ci * (1.0 - f64::from(yi) * (dot(w, xi) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + hinge
}

/// Supervised linear SVM on labels in {+1, -1} with cost `C` on every sample.
pub fn train_svm(x: &[Vec<f64>], y: &[i8], class: Class, config: &SvmConfig) -> Result<LinearModel> {
    config.validate()?;
    let cost = vec![config.c; x.len()];
    let mut model = train_weighted(x, y, &cost, config)?.0;
    model.class = class;
    model.c_star = 0.0;
    Ok(model)
}

/// Output of [`train_weighted`]: the model plus the objective of the averaged
/// iterate at the end of every epoch.
pub(crate) type Trained = (LinearModel, Vec<f64>);

/// Stochastic subgradient descent on the per-sample weighted objective.
///
/// Works on the objective divided by `sum c_i`, which has strong convexity
/// `1 / sum c_i`; steps are `1 / (lambda (t + n))`, `w` is projected onto the
/// ball that must contain the optimum and iterates are averaged with linearly
/// growing weights. The averaged iterate is checkpointed after every epoch and
/// the best checkpoint so far is kept, so the reported objectives never rise.
pub(crate) fn train_weighted(x: &[Vec<f64>], y: &[i8], cost: &[f64], config: &SvmConfig) -> Result<Trained> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyLabeledSet);
    }
    let dim = x[0].len();
    for xi in x {
        if xi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: xi.len() });
        }
    }
    if y.len() != n || cost.len() != n {
        return Err(Error::InvalidArgument("labels, costs and samples differ in length".into()));
    }
    let active = |sign: i8| y.iter().zip(cost).any(|(&yi, &ci)| yi == sign && ci > 0.0);
    if !active(1) || !active(-1) {
        return Err(Error::DegenerateClass);
    }

    let total: f64 = cost.iter().sum();
    let lambda = 1.0 / total;
    let radius = (2.0 * total).sqrt();
    let x_max = x.iter().map(|xi| dot(xi, xi).sqrt()).fold(0.0, f64::max);
    let b_bound = 1.0 + radius * x_max;
    let epochs = config.epochs.max(config.min_iterations.div_ceil(n));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; dim];
    let mut b_avg = 0.0;
    let (mut best_w, mut best_b) = (vec![0.0; dim], 0.0);
    let mut checkpoints = Vec::with_capacity(epochs);
    let mut t = 0usize;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * (t + n) as f64);
            let yi = f64::from(y[i]);
            let margin = yi * (dot(&w, &x[i]) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 && cost[i] > 0.0 {
                let q = n as f64 * cost[i] / total;
                for (v, xv) in w.iter_mut().zip(&x[i]) {
                    *v += eta * q * yi * xv;
                }
                b = (b + eta * q * yi).clamp(-b_bound, b_bound);
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                w.iter_mut().for_each(|v| *v *= radius / norm);
            }
            let rho = 2.0 / (t + 1) as f64;
            for (a, v) in w_avg.iter_mut().zip(&w) {
                *a += rho * (v - *a);
            }
            b_avg += rho * (b - b_avg);
        }
        let objective = hinge_objective(&w_avg, b_avg, x, y, cost);
        if checkpoints.last().is_none_or(|&best| objective <= best) {
            best_w.clone_from(&w_avg);
            best_b = b_avg;
            checkpoints.push(objective);
        } else {
            checkpoints.push(*checkpoints.last().expect("checked above"));
        }
    }

    let model = LinearModel {
        class: Class::Cr,
        objective: *checkpoints.last().expect("at least one epoch"),
        w: best_w,
        b: best_b,
        c: config.c,
        c_star: config.c_star,
        seed: config.seed,
        dim,
        iterations: t,
    };
    Ok((model, checkpoints))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::classify::sign;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    /// Dual SMO with maximal-violating-pair selection for
    /// `min 1/2 |w|^2 + sum c_i xi_i`; returns the primal objective.
    pub(crate) fn smo_objective(x: &[Vec<f64>], y: &[i8], cost: &[f64]) -> f64 {
        let n = x.len();
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let k = |i: usize, j: usize| dot(&x[i], &x[j]);
        let mut alpha = vec![0.0; n];
        // gradient of 1/2 a'Qa - 1'a
        let mut grad = vec![-1.0; n];
        for _ in 0..1_000_000 {
            let up = |i: usize| (yf[i] > 0.0 && alpha[i] < cost[i]) || (yf[i] < 0.0 && alpha[i] > 0.0);
            let low = |i: usize| (yf[i] > 0.0 && alpha[i] > 0.0) || (yf[i] < 0.0 && alpha[i] < cost[i]);
            let (mut i_best, mut g_max) = (usize::MAX, f64::NEG_INFINITY);
            let (mut j_best, mut g_min) = (usize::MAX, f64::INFINITY);
            for t in 0..n {
                let v = -yf[t] * grad[t];
                if up(t) && v > g_max {
                    g_max = v;
                    i_best = t;
                }
                if low(t) && v < g_min {
                    g_min = v;
                    j_best = t;
                }
            }
            if g_max - g_min < 1e-10 {
                break;
            }
            let (i, j) = (i_best, j_best);
            let quad = (k(i, i) + k(j, j) - 2.0 * k(i, j)).max(1e-12);
            let mut step = (g_max - g_min) / quad;
            // box limits along the direction a_i += y_i step, a_j -= y_j step
            let room = |t: usize, dir: f64| {
                if dir > 0.0 {
                    cost[t] - alpha[t]
                } else {
                    alpha[t]
                }
            };
            step = step.min(room(i, yf[i])).min(room(j, -yf[j]));
            alpha[i] += yf[i] * step;
            alpha[j] -= yf[j] * step;
            for t in 0..n {
                grad[t] += yf[t] * (yf[i] * yf[i] * step * k(t, i) - yf[j] * yf[j] * step * k(t, j));
            }
        }
        let dim = x[0].len();
        let mut w = vec![0.0; dim];
        for t in 0..n {
            for (wv, xv) in w.iter_mut().zip(&x[t]) {
                *wv += alpha[t] * yf[t] * xv;
            }
        }
        // best bias for the fixed w by scanning the hinge breakpoints
        let mut best = f64::INFINITY;
        for t in 0..n {
            let b = yf[t] - dot(&w, &x[t]);
            best = best.min(hinge_objective(&w, b, x, y, cost));
        }
        best
    }

    pub(crate) fn blobs(n: usize, sep: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label: i8 = if i % 2 == 0 { 1 } else { -1 };
            let centre = f64::from(label) * sep;
            x.push(vec![centre + noise.sample(&mut rng), 0.5 * centre + noise.sample(&mut rng)]);
            y.push(label);
        }
        (x, y)
    }

    fn accuracy(m: &LinearModel, x: &[Vec<f64>], y: &[i8]) -> f64 {
        let hits = x.iter().zip(y).filter(|(xi, &yi)| sign(m.decision(xi).unwrap()) == yi).count();
        hits as f64 / x.len() as f64
    }

    #[test]
    fn separable_pair() {
        let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let y = vec![-1, 1];
        let cfg = SvmConfig { c: 100.0, ..SvmConfig::default() };
        let m = train_svm(&x, &y, Class::Cr, &cfg).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        let hinge = hinge_objective(&m.w, m.b, &x, &y, &[1.0, 1.0]) - 0.5 * dot(&m.w, &m.w);
        assert!(hinge < 1e-3, "hinge {hinge}");
    }

    #[test]
    fn duplicated_data_keeps_signs() {
        let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let y = vec![-1, 1];
        let cfg = SvmConfig { c: 100.0, ..SvmConfig::default() };
        let xx: Vec<_> = x.iter().chain(&x).cloned().collect();
        let yy: Vec<_> = y.iter().chain(&y).copied().collect();
        let m = train_svm(&xx, &yy, Class::Cr, &cfg).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        let r = train_svm(&x, &[1, 1], Class::Nc, &SvmConfig::default());
        assert!(matches!(r, Err(Error::DegenerateClass)));
    }

    #[test]
    fn matches_dual_solver_on_blobs() {
        for seed in 0..4 {
            let (x, y) = blobs(30, 2.5, seed);
            let cfg = SvmConfig { seed, ..SvmConfig::default() };
            let m = train_svm(&x, &y, Class::Io, &cfg).unwrap();
            assert!(accuracy(&m, &x, &y) >= 0.95, "seed {seed}: acc {}", accuracy(&m, &x, &y));
            let oracle = smo_objective(&x, &y, &vec![cfg.c; x.len()]);
            let ours = hinge_objective(&m.w, m.b, &x, &y, &vec![cfg.c; x.len()]);
            assert!(ours >= oracle - 1e-9, "seed {seed}: {ours} below optimum {oracle}");
            assert!((ours - oracle) / oracle <= 0.02, "seed {seed}: {ours} vs {oracle}");
        }
    }

    #[test]
    fn overlapping_blobs_close_to_optimum() {
        let (x, y) = blobs(60, 0.5, 9);
        let cfg = SvmConfig::default();
        let m = train_svm(&x, &y, Class::Io, &cfg).unwrap();
        let oracle = smo_objective(&x, &y, &vec![cfg.c; x.len()]);
        assert!((m.objective - oracle) / oracle <= 0.02, "{} vs {oracle}", m.objective);
    }

    #[test]
    fn averaged_checkpoints_do_not_increase() {
        for seed in 0..3 {
            let (x, y) = blobs(40, 1.0, 20 + seed);
            let cost = vec![1.0; x.len()];
            let cfg = SvmConfig { seed, ..SvmConfig::default() };
            let (_, checkpoints) = train_weighted(&x, &y, &cost, &cfg).unwrap();
            for w in checkpoints.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = blobs(20, 1.0, 3);
        let cfg = SvmConfig { seed: 4, ..SvmConfig::default() };
        let a = train_svm(&x, &y, Class::Cr, &cfg).unwrap();
        let b = train_svm(&x, &y, Class::Cr, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_cost_samples_are_ignored() {
        let (mut x, mut y) = blobs(20, 2.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cost = vec![1.0; x.len()];
        for _ in 0..5 {
            x.push(vec![rng.random_range(-9.0..9.0), 40.0]);
            y.push(1);
            cost.push(0.0);
        }
        let cfg = SvmConfig::default();
        let (m, _) = train_weighted(&x, &y, &cost, &cfg).unwrap();
        let oracle = smo_objective(&x[..20], &y[..20], &cost[..20]);
        assert!((m.objective - oracle) / oracle <= 0.02);
    }
}
