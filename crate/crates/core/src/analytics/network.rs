use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use super::{SeriesPoint, UserType};
use crate::activity::SocialGraph;
use crate::classify::{Class, LabelVector};
use crate::error::{Error, Result};

/// Row `t` is the distribution of friend types over the neighborhoods of all
/// `t`-users. Types without users, or whose users have no friends, have no row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeDistribution {
    pub rows: BTreeMap<UserType, [f64; 4]>,
}

impl TypeDistribution {
    pub fn get(&self, from: UserType, to: UserType) -> Option<f64> {
        self.rows.get(&from).map(|r| r[to.index()])
    }

    /// Series `friends_<from>`, x = friend type index, y = share.
    pub fn series(&self) -> Vec<SeriesPoint> {
        self.rows
            .iter()
            .flat_map(|(t, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(k, &v)| SeriesPoint::new(format!("friends_{t}"), k as f64, v))
            })
            .collect()
    }
}

fn check_len(graph: &SocialGraph, n: usize, what: &str) -> Result<()> {
    if graph.len() != n {
        return Err(Error::Misaligned(format!("graph has {} nodes, {n} {what}", graph.len())));
    }
    Ok(())
}

pub fn friend_type_distribution(graph: &SocialGraph, labels: &[LabelVector]) -> Result<TypeDistribution> {
    check_len(graph, labels.len(), "labels")?;
    let types: Vec<Vec<UserType>> = labels.iter().map(UserType::of).collect();
    let mut counts: BTreeMap<UserType, [f64; 4]> = BTreeMap::new();
    for (i, own) in types.iter().enumerate() {
        for &t in own {
            let row = counts.entry(t).or_insert([0.0; 4]);
            for &(j, _) in graph.neighbors(i) {
                for &f in &types[j] {
                    row[f.index()] += 1.0;
                }
            }
        }
    }
    let rows = counts
        .into_iter()
        .filter_map(|(t, row)| {
            let total: f64 = row.iter().sum();
            (total > 0.0).then(|| (t, row.map(|c| c / total)))
        })
        .collect();
    Ok(TypeDistribution { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopStats {
    /// Mean hop count to the nearest other user of the same type.
    pub mean: Option<f64>,
    /// Users from which another same-type user is reachable.
    pub reached: usize,
    pub unreachable: usize,
}

fn nearest_hops(graph: &SocialGraph, source: usize, target: &[bool]) -> Option<usize> {
    let mut dist = vec![usize::MAX; graph.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in graph.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                if target[w] {
                    return Some(dist[w]);
                }
                queue.push_back(w);
            }
        }
    }
    None
}

/// Per type with at least two users: breadth-first search from each user to
/// the nearest other user of that type.
pub fn hop_distance_same_type(graph: &SocialGraph, labels: &[LabelVector]) -> Result<BTreeMap<UserType, HopStats>> {
    check_len(graph, labels.len(), "labels")?;
    let types: Vec<Vec<UserType>> = labels.iter().map(UserType::of).collect();
    let mut out = BTreeMap::new();
    for t in UserType::ALL {
        let members: Vec<bool> = types.iter().map(|ts| ts.contains(&t)).collect();
        if members.iter().filter(|&&m| m).count() < 2 {
            continue;
        }
        let mut hops = Vec::new();
        let mut unreachable = 0;
        for i in (0..labels.len()).filter(|&i| members[i]) {
            match nearest_hops(graph, i, &members) {
                Some(h) => hops.push(h as f64),
                None => unreachable += 1,
            }
        }
        let mean = (!hops.is_empty()).then(|| hops.iter().sum::<f64>() / hops.len() as f64);
        out.insert(
            t,
            HopStats {
                mean,
                reached: hops.len(),
                unreachable,
            },
        );
    }
    Ok(out)
}

pub const PROPAGATION_ROUNDS: usize = 100;

/// Synchronous label propagation. Every node starts in its own community;
/// each round every node adopts the label with the largest vote among itself
/// (weight 1) and its friends (edge weight), ties going to the smallest label.
/// Stops at a fixed point or after [`PROPAGATION_ROUNDS`]. Communities are
/// renumbered by first appearance.
pub fn label_propagation(graph: &SocialGraph) -> Vec<usize> {
    let n = graph.len();
    let mut labels: Vec<usize> = (0..n).collect();
    for _ in 0..PROPAGATION_ROUNDS {
        let next: Vec<usize> = (0..n)
            .map(|i| {
                let mut votes: BTreeMap<usize, f64> = BTreeMap::new();
                *votes.entry(labels[i]).or_default() += 1.0;
                for &(j, w) in graph.neighbors(i) {
                    *votes.entry(labels[j]).or_default() += w;
                }
                let best = votes.values().copied().fold(f64::NEG_INFINITY, f64::max);
                votes.into_iter().find(|&(_, v)| v == best).map_or(labels[i], |(l, _)| l)
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let mut renumber = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            let id = renumber.len();
            *renumber.entry(l).or_insert(id)
        })
        .collect()
}

/// One community's summary for one class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityPoint {
    pub community: usize,
    pub class: Class,
    pub size: usize,
    /// Mean decision value for the class over members.
    pub mean_score: f64,
    /// Fraction of members positive for the class.
    pub ratio: f64,
}

pub fn community_ratios(
    graph: &SocialGraph,
    labels: &[LabelVector],
    scores: &[[f64; 3]],
) -> Result<Vec<CommunityPoint>> {
    check_len(graph, labels.len(), "labels")?;
    check_len(graph, scores.len(), "score rows")?;
    let community = label_propagation(graph);
    let count = community.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, &c) in community.iter().enumerate() {
        members[c].push(i);
    }
    let mut out = Vec::new();
    for (c, m) in members.iter().enumerate() {
        let size = m.len() as f64;
        for class in Class::ALL {
            let k = class.index();
            out.push(CommunityPoint {
                community: c,
                class,
                size: m.len(),
                mean_score: m.iter().map(|&i| scores[i][k]).sum::<f64>() / size,
                ratio: m.iter().filter(|&&i| labels[i][k] > 0).count() as f64 / size,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> SocialGraph {
        let nodes = (0..n).map(|i| format!("u{i}")).collect();
        let map: BTreeMap<(usize, usize), f64> = edges.iter().map(|&(a, b)| ((a.min(b), a.max(b)), 1.0)).collect();
        SocialGraph::from_edges(nodes, &map)
    }

    const CR: LabelVector = [1, -1, -1];
    const NA: LabelVector = [-1, -1, -1];

    #[test]
    fn mutual_cr_pair() {
        let d = friend_type_distribution(&graph(2, &[(0, 1)]), &[CR, CR]).unwrap();
        assert_eq!(d.rows[&UserType::Cr], [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn star_of_cr_leaves() {
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let d = friend_type_distribution(&g, &[NA, CR, CR, CR, CR]).unwrap();
        assert_eq!(d.get(UserType::Cr, UserType::Na), Some(1.0));
        assert_eq!(d.get(UserType::Na, UserType::Cr), Some(1.0));
        assert!(!d.rows.contains_key(&UserType::Io));
    }

    #[test]
    fn rows_sum_to_one() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)]);
        let labels = [CR, [1, 1, -1], NA, [-1, -1, 1], CR, NA];
        let d = friend_type_distribution(&g, &labels).unwrap();
        for row in d.rows.values() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn adjacent_pair_is_one_hop() {
        let h = hop_distance_same_type(&graph(3, &[(0, 1), (1, 2)]), &[CR, CR, NA]).unwrap();
        assert_eq!(h[&UserType::Cr].mean, Some(1.0));
        assert!(!h.contains_key(&UserType::Na));
    }

    #[test]
    fn path_of_three_hops() {
        let h = hop_distance_same_type(&graph(4, &[(0, 1), (1, 2), (2, 3)]), &[CR, NA, NA, CR]).unwrap();
        assert_eq!(h[&UserType::Cr].mean, Some(3.0));
    }

    #[test]
    fn unreachable_users_counted() {
        let h = hop_distance_same_type(&graph(4, &[(0, 1)]), &[CR, CR, CR, NA]).unwrap();
        let s = &h[&UserType::Cr];
        assert_eq!((s.reached, s.unreachable, s.mean), (2, 1, Some(1.0)));
    }

    #[test]
    fn clique_community_point() {
        let p = community_ratios(&graph(2, &[(0, 1)]), &[CR, CR], &[[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]).unwrap();
        let cr: Vec<_> = p.iter().filter(|p| p.class == Class::Cr).collect();
        assert_eq!(cr.len(), 1);
        assert_eq!((cr[0].mean_score, cr[0].ratio), (2.0, 1.0));
    }

    #[test]
    fn disconnected_cliques_are_two_communities() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        assert_eq!(label_propagation(&g), vec![0, 0, 0, 1, 1, 1]);
        let p = community_ratios(&g, &[CR; 6], &[[0.0; 3]; 6]).unwrap();
        assert_eq!(p.len(), 6);
    }

    #[test]
    fn heavy_edges_keep_weighted_cliques_apart() {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            map.insert((a, b), 5.0);
        }
        map.insert((2, 3), 1.0);
        let g = SocialGraph::from_edges((0..6).map(|i| format!("u{i}")).collect(), &map);
        assert_eq!(label_propagation(&g), vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn propagation_is_deterministic_and_bounded() {
        let edges: Vec<(usize, usize)> = (0..30).flat_map(|i| [(i, (i + 1) % 30), (i, (i * 7 + 3) % 30)]).filter(|(a, b)| a != b).collect();
        let g = graph(30, &edges);
        let a = label_propagation(&g);
        assert_eq!(a, label_propagation(&g));
        assert!(a.iter().all(|&c| c < 30));
    }
}
