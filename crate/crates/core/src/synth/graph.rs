use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Same-type and cross-type edge probabilities `(p_in, p_out)` with
/// `p_in = (1 + 9h) p_out`, chosen so the expected mean degree is
/// `avg_degree`. When that would push `p_in` above one it is capped and
/// `p_out` absorbs the remainder.
pub fn edge_probabilities(types: &[usize], h: f64, avg_degree: f64) -> (f64, f64) {
    let n = types.len();
    if n < 2 {
        return (0.0, 0.0);
    }
    let mut counts = std::collections::BTreeMap::<usize, usize>::new();
    for &t in types {
        *counts.entry(t).or_default() += 1;
    }
    let total_pairs = (n * (n - 1) / 2) as f64;
    let same: f64 = counts.values().map(|&c| (c * c.saturating_sub(1) / 2) as f64).sum();
    let cross = total_pairs - same;
    let target = (avg_degree * n as f64 / 2.0).min(total_pairs);
    let ratio = 1.0 + 9.0 * h;
    let p_out = target / (cross + ratio * same);
    let p_in = ratio * p_out;
    if p_in <= 1.0 {
        return (p_in, p_out);
    }
    let p_out = if cross > 0.0 { ((target - same) / cross).clamp(0.0, 1.0) } else { 0.0 };
    (1.0, p_out)
}

/// Independent Bernoulli draw per unordered pair `(i, j)`, `i < j`, in
/// lexicographic order.
pub fn planted_partition(types: &[usize], h: f64, avg_degree: f64, rng: &mut ChaCha8Rng) -> BTreeSet<(usize, usize)> {
    let (p_in, p_out) = edge_probabilities(types, h, avg_degree);
    let mut edges = BTreeSet::new();
    for i in 0..types.len() {
        for j in i + 1..types.len() {
            let p = if types[i] == types[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.insert((i, j));
            }
        }
    }
    edges
}

/// For each user in index order, closes every open triangle it centres with
/// probability `closure[i]`. Neighborhoods are snapshotted per user.
pub fn triadic_closure(n: usize, edges: &mut BTreeSet<(usize, usize)>, closure: &[f64], rng: &mut ChaCha8Rng) {
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(i, j) in edges.iter() {
        adj[i].insert(j);
        adj[j].insert(i);
    }
    for c in 0..n {
        if closure[c] <= 0.0 {
            continue;
        }
        let nbrs: Vec<usize> = adj[c].iter().copied().collect();
        for (x, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[x + 1..] {
                if !adj[a].contains(&b) && rng.random::<f64>() < closure[c] {
                    adj[a].insert(b);
                    adj[b].insert(a);
                    edges.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn types() -> Vec<usize> {
        (0..200).map(|i| i % 5).collect()
    }

    #[test]
    fn homophily_ratio_and_mean_degree() {
        let t = types();
        let (p_in, p_out) = edge_probabilities(&t, 0.5, 10.0);
        assert!((p_in / p_out - 5.5).abs() < 1e-12);
        let same = 5.0 * (40.0 * 39.0 / 2.0);
        let cross = 200.0 * 199.0 / 2.0 - same;
        assert!((p_in * same + p_out * cross - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn zero_homophily_counts_within_three_sd() {
        let t = types();
        let (p_in, p_out) = edge_probabilities(&t, 0.0, 10.0);
        assert_eq!(p_in, p_out);
        let same_pairs = 5.0 * (40.0 * 39.0 / 2.0);
        let cross_pairs = 200.0 * 199.0 / 2.0 - same_pairs;
        let (mut same, mut cross) = (0.0, 0.0);
        for seed in 0..10 {
            let edges = planted_partition(&t, 0.0, 10.0, &mut ChaCha8Rng::seed_from_u64(seed));
            let s = edges.iter().filter(|&&(i, j)| t[i] == t[j]).count() as f64;
            same += s;
            cross += edges.len() as f64 - s;
        }
        for (count, pairs) in [(same, 10.0 * same_pairs), (cross, 10.0 * cross_pairs)] {
            let mean = pairs * p_in;
            let sd = (pairs * p_in * (1.0 - p_in)).sqrt();
            assert!((count - mean).abs() <= 3.0 * sd, "{count} vs {mean} +- {sd}");
        }
    }

    #[test]
    fn saturated_probability_is_capped() {
        let t = vec![0, 0, 0, 1, 1, 1];
        let (p_in, p_out) = edge_probabilities(&t, 1.0, 4.0);
        assert_eq!(p_in, 1.0);
        assert!((6.0 * p_in + 9.0 * p_out - 12.0).abs() < 1e-12);
    }

    #[test]
    fn full_closure_makes_cliques() {
        let mut edges: BTreeSet<(usize, usize)> = [(0, 1), (0, 2), (0, 3)].into();
        triadic_closure(4, &mut edges, &[1.0, 0.0, 0.0, 0.0], &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(edges.len(), 6);
    }
}
