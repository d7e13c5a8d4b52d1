use serde::Serialize;

use super::SeriesPoint;
use crate::error::{Error, Result};

/// Least-squares fit of `ln y = ln a + b ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub a: f64,
    pub b: f64,
    /// Coefficient of determination in log-log space.
    pub r2: f64,
}

/// Fits `y = a x^b` over the points with `x > 0` and `y > 0`; `None` with
/// fewer than three such points or no spread in `x`.
pub fn power_fit(points: &[(f64, f64)]) -> Option<PowerFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, y)| x > 0.0 && y > 0.0)
        .map(|&(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 3 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let sse: f64 = logs.iter().map(|p| (p.1 - ln_a - b * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(PowerFit { a: ln_a.exp(), b, r2 })
}

/// `(n, acc[n-1] - acc[n-2])` for n = 1.., with `baseline` as the accuracy
/// of the empty feature set.
pub fn increments(baseline: f64, accuracies: &[f64]) -> Vec<(f64, f64)> {
    let mut prev = baseline;
    accuracies
        .iter()
        .enumerate()
        .map(|(i, &acc)| {
            let d = acc - prev;
            prev = acc;
            ((i + 1) as f64, d)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationCurve {
    pub baseline: f64,
    /// Accuracy using the top-n ranked columns, n = 1..
    pub accuracies: Vec<f64>,
    pub increments: Vec<(f64, f64)>,
    pub fit: Option<PowerFit>,
}

impl AblationCurve {
    pub fn from_accuracies(baseline: f64, accuracies: Vec<f64>) -> Self {
        let inc = increments(baseline, &accuracies);
        AblationCurve {
            baseline,
            fit: power_fit(&inc),
            increments: inc,
            accuracies,
        }
    }

    /// Series `accuracy` and `increment` over the feature count.
    pub fn series(&self, prefix: &str) -> Vec<SeriesPoint> {
        let acc = self
            .accuracies
            .iter()
            .enumerate()
            .map(|(i, &a)| SeriesPoint::new(format!("{prefix}accuracy"), (i + 1) as f64, a));
        let inc = self
            .increments
            .iter()
            .map(|&(x, d)| SeriesPoint::new(format!("{prefix}increment"), x, d));
        acc.chain(inc).collect()
    }
}

/// Scores each prefix of `ranking` with `accuracy_of` and fits the increments.
pub fn ablation_curve<F>(ranking: &[usize], baseline: f64, mut accuracy_of: F) -> Result<AblationCurve>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    if ranking.is_empty() {
        return Err(Error::InvalidArgument("empty feature ranking".into()));
    }
    let mut accuracies = Vec::with_capacity(ranking.len());
    for n in 1..=ranking.len() {
        let acc = accuracy_of(&ranking[..n])?;
        if !(0.0..=1.0).contains(&acc) {
            return Err(Error::InvalidArgument(format!("accuracy {acc} outside [0, 1]")));
        }
        accuracies.push(acc);
    }
    Ok(AblationCurve::from_accuracies(baseline, accuracies))
}
