//! The 24 per-user behavioral features for one source.
//!
//! Ratios carry +1/+1 smoothing so they stay positive and finite for every
//! input. Features whose definition needs data the user does not have (no
//! friends, no posts, no bursts, no profile) are returned as `None`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::{FeatureMatrix, NUM_FEATURES};
use crate::activity::{build_graph, segment_sessions, ActivityEvent, EventKind, SocialGraph, DEFAULT_SESSION_GAP};
use crate::burst::{self, BurstConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    /// Interactions at or above which a friendship counts as a strong tie.
    pub strong_tie_threshold: f64,
    pub session_gap: i64,
    pub burst: BurstConfig,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            strong_tie_threshold: 5.0,
            session_gap: DEFAULT_SESSION_GAP,
            burst: BurstConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Profile {
    pub age: Option<f64>,
    pub gender: Option<Gender>,
}

/// Reads `user_id,age,gender` rows; gender is `m`/`male`/`1` or `f`/`female`/`0`.
pub fn read_profiles(path: &Path) -> Result<HashMap<String, Profile>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let age = rec.get(1).and_then(|s| s.trim().parse::<f64>().ok());
        let gender = match rec.get(2).map(|s| s.trim().to_ascii_lowercase()).as_deref() {
            Some("m" | "male" | "1") => Some(Gender::Male),
            Some("f" | "female" | "0") => Some(Gender::Female),
            _ => None,
        };
        out.insert(rec[0].to_string(), Profile { age, gender });
    }
    Ok(out)
}

fn smoothed_ratio(num: usize, den: usize) -> f64 {
    (num as f64 + 1.0) / (den as f64 + 1.0)
}

/// (|a_out| + 1) / (|a_in| + 1) over like/comment/post actions.
///
/// `own` are the user's events, `inbound` the number of other users' online
/// actions that target this user.
pub fn parasociality(user: &str, own: &[&ActivityEvent], inbound: usize) -> f64 {
    let out = own
        .iter()
        .filter(|e| e.kind.is_online_action())
        .filter(|e| e.target_user_id.as_deref().is_some_and(|t| t != user))
        .count();
    smoothed_ratio(out, inbound)
}

/// (|a_on| + 1) / (|a_off| + 1): online actions against offline-flagged events.
pub fn onoff_ratio(own: &[&ActivityEvent]) -> f64 {
    let on = own.iter().filter(|e| e.kind.is_online_action()).count();
    let off = own.iter().filter(|e| e.offline_flag).count();
    smoothed_ratio(on, off)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialCapital {
    pub tie_ratio: f64,
    pub interacted_ratio: f64,
}

/// Strong/weak tie ratio and the fraction of friends the user interacted with.
/// `None` for users without friends.
pub fn social_capital(node: usize, graph: &SocialGraph, strong_tie_threshold: f64) -> Option<SocialCapital> {
    let friends = graph.neighbors(node);
    if friends.is_empty() {
        return None;
    }
    let strong = friends.iter().filter(|&&(_, w)| w >= strong_tie_threshold).count();
    let weak = friends.len() - strong;
    let interacted = friends.iter().filter(|&&(_, w)| w > 0.0).count();
    Some(SocialCapital {
        tie_ratio: smoothed_ratio(strong, weak),
        interacted_ratio: interacted as f64 / friends.len() as f64,
    })
}

/// (n_1 + 1) / (sum_{i>=2} n_i + 1) over like/comment actions with a known order.
pub fn search_browse_ratio(own: &[&ActivityEvent]) -> f64 {
    let mut first = 0;
    let mut later = 0;
    for e in own.iter().filter(|e| e.kind.carries_order()) {
        match e.like_order {
            Some(1) => first += 1,
            Some(_) => later += 1,
            None => {}
        }
    }
    smoothed_ratio(first, later)
}

/// Emoticons, stickers and selfies per post; `None` without posts.
pub fn self_disclosure(own: &[&ActivityEvent]) -> Option<[f64; 3]> {
    let posts: Vec<_> = own.iter().filter(|e| e.kind == EventKind::Post).collect();
    if posts.is_empty() {
        return None;
    }
    let n = posts.len() as f64;
    let sum = |f: fn(&ActivityEvent) -> u32| posts.iter().map(|e| f(e) as f64).sum::<f64>() / n;
    Some([
        sum(|e| e.emoticon_count),
        sum(|e| e.sticker_count),
        sum(|e| e.selfie_count),
    ])
}

/// Burst intensity and length statistics of the user's activity stream, or
/// `None` when the stream is too short or has no burst.
pub fn temporal_features(own: &[&ActivityEvent], config: &BurstConfig) -> Result<Option<[f64; 10]>> {
    let ts: Vec<i64> = own
        .iter()
        .filter(|e| e.kind.is_online_action() || (config.include_offline && e.offline_flag))
        .map(|e| e.timestamp)
        .collect();
    let report = burst::detect(&ts, config)?;
    Ok(report.filter(|r| r.has_bursts).map(|r| r.stats_vector()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsageTime {
    pub mean_daily_duration: f64,
    pub mean_daily_sessions: f64,
}

const DAY: i64 = 86_400;

/// Daily online duration and session count over the user's observation
/// window (first to last event day, inclusive).
pub fn usage_time(timestamps: &[i64], session_gap: i64) -> UsageTime {
    if timestamps.is_empty() {
        return UsageTime {
            mean_daily_duration: 0.0,
            mean_daily_sessions: 0.0,
        };
    }
    let sessions = segment_sessions("", timestamps, session_gap);
    let first = timestamps[0].div_euclid(DAY);
    let last = timestamps[timestamps.len() - 1].div_euclid(DAY);
    let days = ((last - first + 1).max(1)) as f64;
    let total: i64 = sessions.iter().map(|s| s.duration()).sum();
    UsageTime {
        mean_daily_duration: total as f64 / days,
        mean_daily_sessions: sessions.len() as f64 / days,
    }
}

/// Local clustering coefficient over the friend set; `None` below two friends.
pub fn disinhibition(node: usize, graph: &SocialGraph) -> Option<f64> {
    let friends = graph.neighbors(node);
    let k = friends.len();
    if k < 2 {
        return None;
    }
    let mut links = 0usize;
    for (a, &(i, _)) in friends.iter().enumerate() {
        for &(j, _) in &friends[a + 1..] {
            if graph.has_edge(i, j) {
                links += 1;
            }
        }
    }
    Some(2.0 * links as f64 / (k * (k - 1)) as f64)
}

/// (age, gender code, game post count); gender is 1 for male, 0 for female.
pub fn profile_features(profile: Option<&Profile>, own: &[&ActivityEvent]) -> [Option<f64>; 3] {
    let games = own.iter().filter(|e| e.kind == EventKind::GamePost).count() as f64;
    let age = profile.and_then(|p| p.age);
    let gender = profile.and_then(|p| p.gender).map(|g| match g {
        Gender::Male => 1.0,
        Gender::Female => 0.0,
    });
    [age, gender, Some(games)]
}

/// Extracts the canonical feature matrix of one source.
///
/// Rows are the users with at least one event in `events`, sorted by id, or
/// exactly `roster` when given (roster users without events get all-missing
/// rows).
pub fn extract_source(
    source_id: &str,
    events: &[ActivityEvent],
    friends: Option<&[(String, String)]>,
    profiles: Option<&HashMap<String, Profile>>,
    roster: Option<&[String]>,
    config: &ExtractConfig,
) -> Result<FeatureMatrix> {
    let mut by_user: BTreeMap<&str, Vec<&ActivityEvent>> = BTreeMap::new();
    let mut inbound: HashMap<&str, usize> = HashMap::new();
    for ev in events {
        by_user.entry(ev.user_id.as_str()).or_default().push(ev);
        if ev.kind.is_online_action() {
            if let Some(t) = ev.target_user_id.as_deref() {
                if t != ev.user_id {
                    *inbound.entry(t).or_default() += 1;
                }
            }
        }
    }
    for list in by_user.values_mut() {
        list.sort();
    }
    let graph = build_graph(events, friends);

    let users: Vec<String> = match roster {
        Some(r) => r.to_vec(),
        None => by_user.keys().map(|s| s.to_string()).collect(),
    };
    let mut matrix = FeatureMatrix::canonical(source_id);
    for user in users {
        let Some(own) = by_user.get(user.as_str()) else {
            matrix.push_row(user, vec![None; NUM_FEATURES]);
            continue;
        };
        let row = user_row(&user, own, &inbound, &graph, profiles, config)?;
        matrix.push_row(user, row);
    }
    Ok(matrix)
}

fn user_row(
    user: &str,
    own: &[&ActivityEvent],
    inbound: &HashMap<&str, usize>,
    graph: &SocialGraph,
    profiles: Option<&HashMap<String, Profile>>,
    config: &ExtractConfig,
) -> Result<Vec<Option<f64>>> {
    let mut row = Vec::with_capacity(NUM_FEATURES);
    row.push(Some(parasociality(
        user,
        own,
        inbound.get(user).copied().unwrap_or(0),
    )));
    row.push(Some(onoff_ratio(own)));
    let node = graph.index_of(user);
    let sc = node.and_then(|n| social_capital(n, graph, config.strong_tie_threshold));
    row.push(sc.map(|s| s.tie_ratio));
    row.push(sc.map(|s| s.interacted_ratio));
    row.push(Some(search_browse_ratio(own)));
    match self_disclosure(own) {
        Some(v) => row.extend(v.map(Some)),
        None => row.extend([None; 3]),
    }
    match temporal_features(own, &config.burst)? {
        Some(v) => row.extend(v.map(Some)),
        None => row.extend([None; 10]),
    }
    let ts: Vec<i64> = own.iter().map(|e| e.timestamp).collect();
    let ut = usage_time(&ts, config.session_gap);
    row.push(Some(ut.mean_daily_duration));
    row.push(Some(ut.mean_daily_sessions));
    row.push(node.and_then(|n| disinhibition(n, graph)));
    let profile = profiles.and_then(|p| p.get(user));
    row.extend(profile_features(profile, own));
    debug_assert_eq!(row.len(), NUM_FEATURES);
    Ok(row)
}
