use super::svm::{hinge_objective, train_weighted};
use super::{sign, train_svm, Class, LinearModel, SvmConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TsvmResult {
    pub model: LinearModel,
    /// Inferred labels of the unlabeled samples, in input order.
    pub inferred: Vec<i8>,
    /// Retraining rounds after the supervised start.
    pub retrains: usize,
    pub swaps: usize,
}

/// Transductive SVM by label switching.
///
/// Starts from the supervised model, labels the top `p` fraction of the
/// unlabeled samples positive (`p` is the labeled positive fraction), then
/// raises the unlabeled cost from `C*/64` to `C*` by doubling. At each cost
/// it repeatedly swaps pairs of opposite inferred labels whose slacks sum to
/// more than 2 and retrains, until no such pair remains.
pub fn train_tsvm(
    labeled_x: &[Vec<f64>],
    labeled_y: &[i8],
    unlabeled_x: &[Vec<f64>],
    class: Class,
    config: &SvmConfig,
) -> Result<TsvmResult> {
    if labeled_x.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    if unlabeled_x.is_empty() {
        return Err(Error::InvalidArgument("transductive training needs unlabeled samples".into()));
    }
    let supervised = train_svm(labeled_x, labeled_y, class, config)?;
    if config.c_star == 0.0 {
        let inferred = unlabeled_x
            .iter()
            .map(|x| supervised.decision(x).map(sign))
            .collect::<Result<Vec<_>>>()?;
        return Ok(TsvmResult {
            model: supervised,
            inferred,
            retrains: 0,
            swaps: 0,
        });
    }

    let n_lab = labeled_x.len();
    let n_unl = unlabeled_x.len();
    let positives = labeled_y.iter().filter(|&&y| y > 0).count();
    let n_pos = ((positives as f64 / n_lab as f64) * n_unl as f64).round() as usize;
    let mut ranked: Vec<(usize, f64)> = unlabeled_x
        .iter()
        .enumerate()
        .map(|(i, x)| supervised.decision(x).map(|s| (i, s)))
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut inferred = vec![-1i8; n_unl];
    for &(i, _) in ranked.iter().take(n_pos) {
        inferred[i] = 1;
    }

    let x: Vec<Vec<f64>> = labeled_x.iter().chain(unlabeled_x).cloned().collect();
    let mut y: Vec<i8> = labeled_y.iter().copied().chain(inferred.iter().copied()).collect();
    let mut cost = vec![config.c; n_lab + n_unl];
    let mut c_cur = config.c_star / 64.0;
    let mut retrains = 0;
    let mut swaps = 0;
    let model = loop {
        cost[n_lab..].iter_mut().for_each(|c| *c = c_cur);
        let mut model = train_weighted(&x, &y, &cost, config)?.0;
        retrains += 1;
        for _ in 0..config.max_sweeps {
            let slack: Vec<f64> = (n_lab..x.len())
                .map(|i| (1.0 - f64::from(y[i]) * (super::dot(&model.w, &x[i]) + model.b)).max(0.0))
                .collect();
            let pairs = swap_pairs(&slack, &y[n_lab..]);
            if pairs.is_empty() {
                break;
            }
            for (i, j) in &pairs {
                y[n_lab + i] = -y[n_lab + i];
                y[n_lab + j] = -y[n_lab + j];
            }
            swaps += pairs.len();
            model = train_weighted(&x, &y, &cost, config)?.0;
            retrains += 1;
        }
        if c_cur >= config.c_star {
            break model;
        }
        c_cur = (2.0 * c_cur).min(config.c_star);
    };

    let objective = hinge_objective(&model.w, model.b, &x, &y, &cost);
    log::debug!("tsvm {class}: {retrains} retrains, {swaps} swaps, objective {objective}");
    Ok(TsvmResult {
        model: LinearModel {
            class,
            objective,
            ..model
        },
        inferred: y[n_lab..].to_vec(),
        retrains,
        swaps,
    })
}

/// Disjoint (positive, negative) index pairs whose slacks are both positive
/// and sum to more than 2. Flipping both labels lowers the objective at the
/// current model: a violator's slack `s` becomes `max(0, 2 - s)`.
pub(crate) fn swap_pairs(slack: &[f64], labels: &[i8]) -> Vec<(usize, usize)> {
    let by_slack = |sign: i8| {
        let mut v: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == sign && slack[i] > 0.0).collect();
        v.sort_by(|&a, &b| slack[b].total_cmp(&slack[a]).then(a.cmp(&b)));
        v
    };
    by_slack(1)
        .into_iter()
        .zip(by_slack(-1))
        .take_while(|&(i, j)| slack[i] + slack[j] > 2.0)
        .collect()
}
