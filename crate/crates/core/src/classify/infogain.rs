use serde::Serialize;

use crate::features::FeatureMatrix;

/// Equal-frequency bins for present values.
pub const BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureScore {
    pub column: usize,
    pub name: String,
    pub gain: f64,
}

/// Shannon entropy in bits of a label distribution given by counts.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

/// Bin index per cell: present values go to one of [`BINS`] equal-frequency
/// bins by rank, equal values always share a bin, and missing cells get bin
/// `BINS`.
pub fn discretize(values: &[Option<f64>]) -> Vec<usize> {
    let mut present: Vec<(usize, f64)> = values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    present.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let n = present.len();
    let mut bins = vec![BINS; values.len()];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && present[end].1 == present[start].1 {
            end += 1;
        }
        let bin = start * BINS / n;
        for &(i, _) in &present[start..end] {
            bins[i] = bin;
        }
        start = end;
    }
    bins
}

/// `H(label) - H(label | bin)` in bits.
pub fn information_gain(values: &[Option<f64>], labels: &[bool]) -> f64 {
    let bins = discretize(values);
    let count = |pred: &dyn Fn(usize) -> bool| {
        let pos = (0..labels.len()).filter(|&i| pred(i) && labels[i]).count();
        let all = (0..labels.len()).filter(|&i| pred(i)).count();
        [pos, all - pos]
    };
    let prior = entropy(&count(&|_| true));
    let n = labels.len() as f64;
    let conditional: f64 = (0..=BINS)
        .map(|b| {
            let c = count(&|i| bins[i] == b);
            (c[0] + c[1]) as f64 / n * entropy(&c)
        })
        .sum();
    (prior - conditional).max(0.0)
}

/// All columns ranked by information gain, highest first; ties keep the
/// column order.
pub fn information_gain_ranking(matrix: &FeatureMatrix, labels: &[bool]) -> Vec<FeatureScore> {
    let mut scores: Vec<FeatureScore> = (0..matrix.n_cols())
        .map(|c| FeatureScore {
            column: c,
            name: matrix.columns[c].clone(),
            gain: information_gain(&matrix.column(c), labels),
        })
        .collect();
    scores.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.column.cmp(&b.column)));
    scores
}
