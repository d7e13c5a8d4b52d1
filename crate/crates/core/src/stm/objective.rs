use ndarray::{Array2, Array3, Zip};

use super::{EntryProducts, FeatureTensor, StmFactors};
use crate::activity::SocialGraph;
use crate::error::{Error, Result};

fn check_aligned(factors: &StmFactors, tensor: &FeatureTensor, graph: &SocialGraph) -> Result<()> {
    let (n, r) = factors.u.dim();
    if n != tensor.n || factors.v.nrows() != tensor.d || factors.w.nrows() != tensor.m {
        return Err(Error::Misaligned(format!(
            "factors ({n}, {}, {}) vs tensor ({}, {}, {})",
            factors.v.nrows(),
            factors.w.nrows(),
            tensor.n,
            tensor.d,
            tensor.m
        )));
    }
    if graph.len() != n {
        return Err(Error::Misaligned(format!(
            "graph has {} nodes, tensor has {n} users",
            graph.len()
        )));
    }
    debug_assert_eq!(r, factors.core.dim().0);
    Ok(())
}

/// `tr(U' L U)` from the Laplacian: `sum_i d_ii |u_i|^2 - sum_ij a_ij u_i . u_j`.
pub fn laplacian_trace(u: &Array2<f64>, graph: &SocialGraph) -> f64 {
    let mut total = 0.0;
    for i in 0..u.nrows() {
        let ui = u.row(i);
        total += graph.degree(i) * ui.dot(&ui);
        for &(j, a) in graph.neighbors(i) {
            total -= a * ui.dot(&u.row(j));
        }
    }
    total
}

/// `1/2 sum_ij a_ij |u_i - u_j|^2`, summed over ordered pairs.
pub fn smoothing_pairwise(u: &Array2<f64>, graph: &SocialGraph) -> f64 {
    let mut total = 0.0;
    for (i, j, a) in graph.edges() {
        let d: f64 = u.row(i).iter().zip(u.row(j).iter()).map(|(x, y)| (x - y) * (x - y)).sum();
        // one unordered edge covers both ordered pairs, cancelling the 1/2
        total += a * d;
    }
    total
}

/// Full objective: reconstruction error on observed entries, graph smoothing
/// and the user-factor norm penalty.
pub fn objective(
    factors: &StmFactors,
    tensor: &FeatureTensor,
    graph: &SocialGraph,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    check_aligned(factors, tensor, graph)?;
    let fit: f64 = tensor
        .entries()
        .iter()
        .map(|&(i, j, k, t)| {
            let e = factors.reconstruct_entry(i, j, k) - t;
            e * e
        })
        .sum();
    let smooth = if lambda1 != 0.0 { smoothing_pairwise(&factors.u, graph) } else { 0.0 };
    let norm = factors.u.iter().map(|x| x * x).sum::<f64>();
    Ok(0.5 * fit + 0.5 * lambda1 * smooth + 0.5 * lambda2 * norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub w: Array2<f64>,
    pub core: Array3<f64>,
}

/// Gradient of [`objective`]: per-entry gradients summed over the observed
/// entries, plus `lambda1 L U + lambda2 U`.
pub fn full_gradient(
    factors: &StmFactors,
    tensor: &FeatureTensor,
    graph: &SocialGraph,
    lambda1: f64,
    lambda2: f64,
) -> Result<Gradient> {
    check_aligned(factors, tensor, graph)?;
    let mut g = Gradient {
        u: Array2::zeros(factors.u.dim()),
        v: Array2::zeros(factors.v.dim()),
        w: Array2::zeros(factors.w.dim()),
        core: Array3::zeros(factors.core.dim()),
    };
    for &(i, j, k, t) in tensor.entries() {
        let p = EntryProducts::compute(factors, i, j, k);
        let e = p.prediction - t;
        for (gu, z) in g.u.row_mut(i).iter_mut().zip(&p.by_user) {
            *gu += e * z;
        }
        for (gv, z) in g.v.row_mut(j).iter_mut().zip(&p.by_feature) {
            *gv += e * z;
        }
        for (gw, z) in g.w.row_mut(k).iter_mut().zip(&p.by_source) {
            *gw += e * z;
        }
        let (ui, vj, wk) = (factors.u.row(i), factors.v.row(j), factors.w.row(k));
        Zip::indexed(&mut g.core).for_each(|(r, s, tt), c| *c += e * ui[r] * vj[s] * wk[tt]);
    }
    for i in 0..factors.u.nrows() {
        let mut lu = factors.u.row(i).to_owned() * graph.degree(i);
        for &(j, a) in graph.neighbors(i) {
            lu.scaled_add(-a, &factors.u.row(j));
        }
        let mut row = g.u.row_mut(i);
        row.scaled_add(lambda1, &lu);
        row.scaled_add(lambda2, &factors.u.row(i));
    }
    Ok(g)
}

/// Largest relative disagreement between [`full_gradient`] and central finite
/// differences of [`objective`] over every coordinate of U, V, W and C.
pub fn gradient_check(
    factors: &StmFactors,
    tensor: &FeatureTensor,
    graph: &SocialGraph,
    lambda1: f64,
    lambda2: f64,
    h: f64,
) -> Result<f64> {
    let analytic = full_gradient(factors, tensor, graph, lambda1, lambda2)?;
    let mut probe = factors.clone();
    let mut worst: f64 = 0.0;
    let eval = |f: &StmFactors| objective(f, tensor, graph, lambda1, lambda2);

    macro_rules! sweep {
        ($field:ident) => {
            for (idx, &a) in analytic.$field.indexed_iter() {
                let orig = probe.$field[idx];
                probe.$field[idx] = orig + h;
                let plus = eval(&probe)?;
                probe.$field[idx] = orig - h;
                let minus = eval(&probe)?;
                probe.$field[idx] = orig;
                let numeric = (plus - minus) / (2.0 * h);
                let scale = a.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max((a - numeric).abs() / scale);
            }
        };
    }
    sweep!(u);
    sweep!(v);
    sweep!(w);
    sweep!(core);
    Ok(worst)
}
