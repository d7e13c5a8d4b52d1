//! Seeded synthetic cohorts with planted behavioral archetypes.
//!
//! Five archetypes drive the generator: the three disorder types (bursty
//! activity with growing burst lengths and relapse spikes), heavy users
//! (steady high-rate activity) and normal users (sparse activity). Friendships
//! come from a planted-partition graph whose same-type edge probability is
//! `1 + 9h` times the cross-type probability, followed by a per-archetype
//! triadic-closure pass. Likes and comments pick a friend with probability
//! proportional to the friend's attractiveness, times `1 + 9h` for friends of
//! the same archetype. Each user takes part in each source with the
//! archetype's participation probability and is forced into one source when
//! the draws leave them in none.

mod graph;
mod streams;

pub use graph::{edge_probabilities, planted_partition, triadic_closure};
pub use streams::{bursty_times, poisson_times};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::activity::{sort_events, write_events, write_friend_list, ActivityEvent, EventKind};
use crate::classify::{parse_sign, LabelVector, NEGATIVE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Archetype {
    #[serde(rename = "CR")]
    Cr,
    #[serde(rename = "NC")]
    Nc,
    #[serde(rename = "IO")]
    Io,
    #[serde(rename = "heavy")]
    Heavy,
    #[serde(rename = "normal")]
    Normal,
}

impl Archetype {
    pub const ALL: [Archetype; 5] = [Archetype::Cr, Archetype::Nc, Archetype::Io, Archetype::Heavy, Archetype::Normal];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Cr => "CR",
            Archetype::Nc => "NC",
            Archetype::Io => "IO",
            Archetype::Heavy => "heavy",
            Archetype::Normal => "normal",
        }
    }

    /// Ground-truth label vector: disorder types are positive for their own
    /// class only; heavy and normal users are negative everywhere.
    pub fn labels(self) -> LabelVector {
        match self {
            Archetype::Cr => [1, -1, -1],
            Archetype::Nc => [-1, 1, -1],
            Archetype::Io => [-1, -1, 1],
            Archetype::Heavy | Archetype::Normal => NEGATIVE,
        }
    }

    pub fn is_disorder(self) -> bool {
        matches!(self, Archetype::Cr | Archetype::Nc | Archetype::Io)
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown archetype {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamProfile {
    /// Homogeneous Poisson process.
    Poisson { rate_per_day: f64 },
    /// Alternating quiet/burst renewal process. Burst durations grow linearly
    /// to `1 + burst_growth` times their initial mean over the window, and a
    /// burst that follows a quiet spell longer than `relapse_gap_hours` is
    /// stretched by `relapse_multiplier`.
    Bursty {
        quiet_rate_per_day: f64,
        burst_rate_per_hour: f64,
        quiet_mean_hours: f64,
        burst_mean_minutes: f64,
        burst_growth: f64,
        relapse_gap_hours: f64,
        relapse_multiplier: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeSpec {
    pub stream: StreamProfile,
    /// Fractions of online actions that are posts and comments; the rest are likes.
    pub post_share: f64,
    pub comment_share: f64,
    /// Chance that a like or comment targets a friend.
    pub target_prob: f64,
    /// Relative weight with which friends pick this user as a target.
    pub attractiveness: f64,
    /// Chance of being the first actor on an item.
    pub first_actor_prob: f64,
    pub offline_per_day: f64,
    pub emoticons_per_post: f64,
    pub stickers_per_post: f64,
    pub selfies_per_post: f64,
    pub game_posts_per_day: f64,
    /// Chance of closing each open triangle around the user.
    pub closure_prob: f64,
    /// Chance of being present in each source.
    pub participation: f64,
}

impl ArchetypeSpec {
    fn validate(&self, name: &str) -> Result<()> {
        let probs = [
            ("target_prob", self.target_prob),
            ("first_actor_prob", self.first_actor_prob),
            ("closure_prob", self.closure_prob),
            ("participation", self.participation),
        ];
        for (field, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name}.{field} = {p} is not a probability")));
            }
        }
        let shares = self.post_share + self.comment_share;
        if self.post_share < 0.0 || self.comment_share < 0.0 || shares > 1.0 {
            return Err(Error::Config(format!("{name}: post and comment shares must be in [0, 1]")));
        }
        let rates = [
            self.attractiveness,
            self.offline_per_day,
            self.emoticons_per_post,
            self.stickers_per_post,
            self.selfies_per_post,
            self.game_posts_per_day,
        ];
        let stream_ok = match self.stream {
            StreamProfile::Poisson { rate_per_day } => rate_per_day >= 0.0,
            StreamProfile::Bursty {
                quiet_rate_per_day,
                burst_rate_per_hour,
                quiet_mean_hours,
                burst_mean_minutes,
                burst_growth,
                relapse_gap_hours,
                relapse_multiplier,
            } => {
                quiet_rate_per_day >= 0.0
                    && burst_rate_per_hour >= 0.0
                    && quiet_mean_hours > 0.0
                    && burst_mean_minutes > 0.0
                    && burst_growth >= 0.0
                    && relapse_gap_hours >= 0.0
                    && relapse_multiplier > 0.0
            }
        };
        if rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) || !stream_ok {
            return Err(Error::Config(format!("{name}: rates must be non-negative")));
        }
        Ok(())
    }
}

/// Archetype parameters plus cohort-wide generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeConfig {
    pub version: u32,
    /// First timestamp of the observation window.
    pub start: i64,
    pub window_days: f64,
    pub avg_degree: f64,
    /// Log-scale sd of the per-user multipliers on every rate.
    pub heterogeneity: f64,
    /// Activity scale of each source, cycled when there are more sources.
    pub source_rate_scale: Vec<f64>,
    pub archetypes: BTreeMap<Archetype, ArchetypeSpec>,
}

const DEFAULT_ARCHETYPES: &str = include_str!("../../fixtures/archetypes.json");

impl Default for ArchetypeConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_ARCHETYPES).expect("bundled archetype fixture parses")
    }
}

impl ArchetypeConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ArchetypeConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for a in Archetype::ALL {
            self.archetypes
                .get(&a)
                .ok_or_else(|| Error::Config(format!("archetype {a} missing")))?
                .validate(a.name())?;
        }
        if !(self.window_days > 0.0) || !(self.avg_degree >= 0.0) || !(self.heterogeneity >= 0.0) {
            return Err(Error::Config("window_days must be positive; avg_degree and heterogeneity non-negative".into()));
        }
        if self.source_rate_scale.is_empty() || self.source_rate_scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("source_rate_scale needs positive entries".into()));
        }
        Ok(())
    }

    pub fn spec(&self, a: Archetype) -> &ArchetypeSpec {
        &self.archetypes[&a]
    }

    fn window_end(&self) -> i64 {
        self.start + (self.window_days * 86_400.0) as i64
    }
}

/// What to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    /// Users per archetype, in [`Archetype::ALL`] order.
    pub sizes: [usize; 5],
    /// Homophily strength in [0, 1].
    pub homophily: f64,
    pub sources: usize,
    pub seed: u64,
    /// Overrides every archetype's per-source participation probability.
    pub participation: Option<f64>,
}

impl CohortSpec {
    /// 100 users per archetype, h = 0.7, two sources, 70% participation.
    pub fn standard(seed: u64) -> Self {
        CohortSpec {
            sizes: [100; 5],
            homophily: 0.7,
            sources: 2,
            seed,
            participation: Some(0.7),
        }
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub spec: CohortSpec,
    pub users: Vec<String>,
    pub archetypes: Vec<Archetype>,
    /// Declared friendships as index pairs (i < j).
    pub edges: BTreeSet<(usize, usize)>,
    /// Events of each source, sorted.
    pub sources: Vec<Vec<ActivityEvent>>,
}

/// Users' ground-truth label vectors from their archetypes.
pub fn oracle_labels(cohort: &SyntheticCohort) -> Vec<LabelVector> {
    cohort.archetypes.iter().map(|a| a.labels()).collect()
}

/// Independent stream for (seed, purpose, index).
fn sub_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 48) ^ index);
    rng
}

const GRAPH_STREAM: u64 = 1;
const ROSTER_STREAM: u64 = 2;
const PROFILE_STREAM: u64 = 3;
const EVENT_STREAM: u64 = 4;

/// Per-user draw of the archetype parameters, with log-normal multipliers on
/// rates and probabilities.
#[derive(Debug, Clone, Copy)]
struct UserTraits {
    spec: ArchetypeSpec,
    activity: f64,
}

fn draw_traits(spec: &ArchetypeSpec, sigma: f64, rng: &mut ChaCha8Rng) -> UserTraits {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut jitter = || (sigma * normal.sample(rng) - 0.5 * sigma * sigma).exp();
    let mut s = *spec;
    let activity = jitter();
    s.target_prob = (s.target_prob * jitter()).min(1.0);
    s.first_actor_prob = (s.first_actor_prob * jitter()).min(1.0);
    s.offline_per_day *= jitter();
    s.emoticons_per_post *= jitter();
    s.stickers_per_post *= jitter();
    s.selfies_per_post *= jitter();
    s.game_posts_per_day *= jitter();
    UserTraits { spec: s, activity }
}

fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u32
}

pub fn generate(spec: &CohortSpec, config: &ArchetypeConfig) -> Result<SyntheticCohort> {
    config.validate()?;
    if !(0.0..=1.0).contains(&spec.homophily) {
        return Err(Error::InvalidArgument(format!("homophily {} not in [0, 1]", spec.homophily)));
    }
    if spec.sources == 0 {
        return Err(Error::InvalidArgument("need at least one source".into()));
    }
    if spec.sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidArgument("need at least two archetypes present".into()));
    }
    if let Some(p) = spec.participation {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("participation {p} not in [0, 1]")));
        }
    }
    let n = spec.total();
    let width = n.saturating_sub(1).to_string().len().max(4);
    let users: Vec<String> = (0..n).map(|i| format!("u{i:0width$}")).collect();

    let mut archetypes: Vec<Archetype> = Archetype::ALL
        .iter()
        .zip(spec.sizes)
        .flat_map(|(&a, size)| std::iter::repeat_n(a, size))
        .collect();
    {
        use rand::seq::SliceRandom;
        archetypes.shuffle(&mut sub_rng(spec.seed, ROSTER_STREAM, 0));
    }

    let mut rng = sub_rng(spec.seed, GRAPH_STREAM, 0);
    let types: Vec<usize> = archetypes.iter().map(|&a| a as usize).collect();
    let mut edges = planted_partition(&types, spec.homophily, config.avg_degree, &mut rng);
    let closure: Vec<f64> = archetypes.iter().map(|&a| config.spec(a).closure_prob).collect();
    triadic_closure(n, &mut edges, &closure, &mut rng);

    let mut friends: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &edges {
        friends[i].push(j);
        friends[j].push(i);
    }

    let traits: Vec<UserTraits> = (0..n)
        .map(|i| draw_traits(config.spec(archetypes[i]), config.heterogeneity, &mut sub_rng(spec.seed, PROFILE_STREAM, i as u64)))
        .collect();

    let mut presence = vec![vec![false; spec.sources]; n];
    for (i, row) in presence.iter_mut().enumerate() {
        let mut prng = sub_rng(spec.seed, PROFILE_STREAM, (n + i) as u64);
        let p = spec.participation.unwrap_or(traits[i].spec.participation);
        for slot in row.iter_mut() {
            *slot = prng.random_bool(p);
        }
        if !row.iter().any(|&b| b) {
            let k = prng.random_range(0..spec.sources);
            row[k] = true;
        }
    }

    let boost = 1.0 + 9.0 * spec.homophily;
    let mut sources = Vec::with_capacity(spec.sources);
    for k in 0..spec.sources {
        let scale = config.source_rate_scale[k % config.source_rate_scale.len()];
        let mut events = Vec::new();
        for i in 0..n {
            if !presence[i][k] {
                continue;
            }
            let present_friends: Vec<usize> = friends[i].iter().copied().filter(|&j| presence[j][k]).collect();
            let weights: Vec<f64> = present_friends
                .iter()
                .map(|&j| {
                    let affinity = if archetypes[j] == archetypes[i] { boost } else { 1.0 };
                    traits[j].spec.attractiveness * affinity
                })
                .collect();
            let mut urng = sub_rng(spec.seed, EVENT_STREAM, ((k as u64) << 32) | i as u64);
            user_events(
                &users,
                i,
                &traits[i],
                scale,
                &present_friends,
                &weights,
                config,
                &mut urng,
                &mut events,
            );
        }
        sort_events(&mut events);
        sources.push(events);
    }

    Ok(SyntheticCohort {
        spec: spec.clone(),
        users,
        archetypes,
        edges,
        sources,
    })
}

#[allow(clippy::too_many_arguments)]
fn user_events(
    users: &[String],
    i: usize,
    traits: &UserTraits,
    scale: f64,
    friends: &[usize],
    weights: &[f64],
    config: &ArchetypeConfig,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<ActivityEvent>,
) {
    let s = &traits.spec;
    let start = config.start;
    let end = config.window_end();
    let days = config.window_days;
    let rate = traits.activity * scale;
    let times = match s.stream {
        StreamProfile::Poisson { rate_per_day } => poisson_times(rng, start, end, rate * rate_per_day / 86_400.0),
        StreamProfile::Bursty {
            quiet_rate_per_day,
            burst_rate_per_hour,
            quiet_mean_hours,
            burst_mean_minutes,
            burst_growth,
            relapse_gap_hours,
            relapse_multiplier,
        } => bursty_times(
            rng,
            start,
            end,
            &streams::BurstyParams {
                quiet_rate: rate * quiet_rate_per_day / 86_400.0,
                burst_rate: rate * burst_rate_per_hour / 3_600.0,
                quiet_mean: quiet_mean_hours * 3_600.0,
                burst_mean: burst_mean_minutes * 60.0,
                growth: burst_growth,
                relapse_gap: relapse_gap_hours * 3_600.0,
                relapse_multiplier,
            },
        ),
    };
    let total_weight: f64 = weights.iter().sum();
    let user = &users[i];
    for t in times {
        let u: f64 = rng.random();
        let kind = if u < s.post_share {
            EventKind::Post
        } else if u < s.post_share + s.comment_share {
            EventKind::Comment
        } else {
            EventKind::Like
        };
        let mut ev = ActivityEvent::new(user.clone(), t, kind);
        if kind == EventKind::Post {
            ev.emoticon_count = poisson(s.emoticons_per_post, rng);
            ev.sticker_count = poisson(s.stickers_per_post, rng);
            ev.selfie_count = poisson(s.selfies_per_post, rng);
        } else {
            if total_weight > 0.0 && rng.random_bool(s.target_prob) {
                let mut pick = rng.random::<f64>() * total_weight;
                let mut target = friends[friends.len() - 1];
                for (&j, &w) in friends.iter().zip(weights) {
                    if pick < w {
                        target = j;
                        break;
                    }
                    pick -= w;
                }
                ev.target_user_id = Some(users[target].clone());
            }
            let order = if rng.random_bool(s.first_actor_prob) {
                1
            } else {
                2 + rng.random_range(0..4)
            };
            ev.like_order = Some(order);
        }
        out.push(ev);
    }
    for _ in 0..poisson(s.offline_per_day * scale * days, rng) {
        let kind = if rng.random_bool(0.5) { EventKind::Checkin } else { EventKind::EventRsvp };
        out.push(ActivityEvent::new(user.clone(), rng.random_range(start..end), kind).offline());
    }
    for _ in 0..poisson(s.game_posts_per_day * scale * days, rng) {
        out.push(ActivityEvent::new(user.clone(), rng.random_range(start..end), EventKind::GamePost));
    }
}

impl SyntheticCohort {
    pub fn labels(&self) -> Vec<LabelVector> {
        oracle_labels(self)
    }

    pub fn friend_pairs(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(i, j)| (self.users[i].clone(), self.users[j].clone()))
            .collect()
    }

    pub fn source_name(k: usize) -> String {
        format!("s{k}")
    }

    /// Writes `events_s<k>.jsonl` per source, `friends.csv` and `truth.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (k, events) in self.sources.iter().enumerate() {
            write_events(&dir.join(format!("events_{}.jsonl", Self::source_name(k))), events)?;
        }
        write_friend_list(&dir.join("friends.csv"), &self.friend_pairs())?;
        let truth: Vec<TruthRow> = self
            .users
            .iter()
            .zip(&self.archetypes)
            .map(|(u, &a)| TruthRow {
                user_id: u.clone(),
                labels: a.labels(),
                archetype: Some(a),
            })
            .collect();
        write_truth(&dir.join("truth.csv"), &truth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRow {
    pub user_id: String,
    pub labels: LabelVector,
    pub archetype: Option<Archetype>,
}

/// `user_id,cr,nc,io,archetype`.
pub fn write_truth(path: &Path, rows: &[TruthRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    wtr.write_record(["user_id", "cr", "nc", "io", "archetype"])
        .map_err(|e| Error::csv(path, e))?;
    for r in rows {
        let mut rec = vec![r.user_id.clone()];
        rec.extend(r.labels.iter().map(|v| v.to_string()));
        rec.push(r.archetype.map(|a| a.name().to_string()).unwrap_or_default());
        wtr.write_record(&rec).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// Reads a truth file; the archetype column is optional.
pub fn read_truth(path: &Path) -> Result<Vec<TruthRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if rec.len() < 4 {
            return Err(Error::InvalidArgument(format!("{}: truth rows need user_id,cr,nc,io", path.display())));
        }
        let mut labels = NEGATIVE;
        for k in 0..3 {
            labels[k] = parse_sign(&rec[k + 1]).ok_or_else(|| {
                Error::InvalidArgument(format!("{}: bad label {:?} for {}", path.display(), &rec[k + 1], &rec[0]))
            })?;
        }
        let archetype = match rec.get(4).map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(s.parse()?),
        };
        rows.push(TruthRow {
            user_id: rec[0].to_string(),
            labels,
            archetype,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::burst::{detect, BurstConfig};

    fn small(seed: u64) -> CohortSpec {
        CohortSpec {
            sizes: [20; 5],
            homophily: 0.7,
            sources: 2,
            seed,
            participation: Some(0.7),
        }
    }

    #[test]
    fn bundled_fixture_is_valid() {
        ArchetypeConfig::default().validate().unwrap();
    }

    #[test]
    fn oracle_label_mapping() {
        assert_eq!(Archetype::Cr.labels(), [1, -1, -1]);
        assert_eq!(Archetype::Heavy.labels(), NEGATIVE);
        let spec = CohortSpec {
            sizes: [10, 0, 10, 10, 10],
            ..small(1)
        };
        let c = generate(&spec, &ArchetypeConfig::default()).unwrap();
        assert!(c.labels().iter().all(|y| y[1] == -1));
        assert_eq!(c.labels().iter().filter(|y| y[0] == 1).count(), 10);
    }

    #[test]
    fn same_seed_same_cohort() {
        let cfg = ArchetypeConfig::default();
        let a = generate(&small(3), &cfg).unwrap();
        let b = generate(&small(3), &cfg).unwrap();
        assert_eq!(a, b);
        let c = generate(&small(4), &cfg).unwrap();
        assert_ne!(a.sources, c.sources);
    }

    #[test]
    fn files_are_byte_identical() {
        let cfg = ArchetypeConfig::default();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate(&small(5), &cfg).unwrap().write(d1.path()).unwrap();
        generate(&small(5), &cfg).unwrap().write(d2.path()).unwrap();
        let mut names: Vec<_> = std::fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names, ["events_s0.jsonl", "events_s1.jsonl", "friends.csv", "truth.csv"]);
        for name in names {
            let a = std::fs::read(d1.path().join(&name)).unwrap();
            let b = std::fs::read(d2.path().join(&name)).unwrap();
            assert!(a == b, "{name:?} differs");
        }
    }

    #[test]
    fn every_user_in_some_source() {
        let spec = CohortSpec {
            participation: Some(0.1),
            ..small(6)
        };
        let c = generate(&spec, &ArchetypeConfig::default()).unwrap();
        let mut seen = BTreeSet::new();
        for events in &c.sources {
            seen.extend(events.iter().map(|e| e.user_id.clone()));
        }
        // a present user can still draw zero events, but only if very sparse
        assert!(seen.len() >= c.users.len() * 9 / 10);
    }

    #[test]
    fn rejects_single_archetype() {
        let spec = CohortSpec {
            sizes: [0, 0, 0, 30, 0],
            ..small(1)
        };
        assert!(generate(&spec, &ArchetypeConfig::default()).is_err());
    }

    #[test]
    fn heavy_users_rarely_burst() {
        let spec = CohortSpec {
            sizes: [0, 0, 0, 60, 10],
            participation: Some(1.0),
            ..small(8)
        };
        let c = generate(&spec, &ArchetypeConfig::default()).unwrap();
        let mut heavy = 0;
        let mut calm = 0;
        for (i, user) in c.users.iter().enumerate() {
            if c.archetypes[i] != Archetype::Heavy {
                continue;
            }
            let ts: Vec<i64> = c.sources[0]
                .iter()
                .filter(|e| &e.user_id == user && e.kind.is_online_action())
                .map(|e| e.timestamp)
                .collect();
            heavy += 1;
            match detect(&ts, &BurstConfig::default()).unwrap() {
                Some(r) if r.has_bursts => {}
                _ => calm += 1,
            }
        }
        assert!(calm as f64 >= 0.9 * heavy as f64, "{calm}/{heavy}");
    }

    #[test]
    fn disorder_users_burst() {
        let spec = CohortSpec {
            sizes: [30, 30, 30, 0, 10],
            participation: Some(1.0),
            ..small(9)
        };
        let c = generate(&spec, &ArchetypeConfig::default()).unwrap();
        let mut bursting = 0;
        let mut total = 0;
        for (i, user) in c.users.iter().enumerate() {
            if !c.archetypes[i].is_disorder() {
                continue;
            }
            let ts: Vec<i64> = c.sources[0]
                .iter()
                .filter(|e| &e.user_id == user && e.kind.is_online_action())
                .map(|e| e.timestamp)
                .collect();
            total += 1;
            if detect(&ts, &BurstConfig::default()).unwrap().is_some_and(|r| r.bursts.len() >= 2) {
                bursting += 1;
            }
        }
        assert!(bursting as f64 >= 0.9 * total as f64, "{bursting}/{total}");
    }

    #[test]
    fn truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = generate(&small(2), &ArchetypeConfig::default()).unwrap();
        c.write(dir.path()).unwrap();
        let rows = read_truth(&dir.path().join("truth.csv")).unwrap();
        assert_eq!(rows.len(), c.users.len());
        for (row, (&a, u)) in rows.iter().zip(c.archetypes.iter().zip(&c.users)) {
            assert_eq!(&row.user_id, u);
            assert_eq!(row.archetype, Some(a));
            assert_eq!(row.labels, a.labels());
        }
    }
}
