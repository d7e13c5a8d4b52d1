//! Event and interaction-graph data model.
//!
//! Events arrive as line-delimited JSON, one [`ActivityEvent`] per line. The
//! interaction graph counts directed actions between users as undirected
//! edge weights, and online sessions are maximal runs of events whose
//! consecutive gaps stay under a threshold.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default gap (seconds) below which two consecutive events share a session.
pub const DEFAULT_SESSION_GAP: i64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Like,
    Comment,
    Post,
    Checkin,
    EventRsvp,
    GamePost,
}

impl EventKind {
    /// Like, comment and post: the actions that count as online interaction.
    pub fn is_online_action(self) -> bool {
        matches!(self, EventKind::Like | EventKind::Comment | EventKind::Post)
    }

    pub fn carries_order(self) -> bool {
        matches!(self, EventKind::Like | EventKind::Comment)
    }
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

fn is_false(v: &bool) -> bool {
    !*v
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub user_id: String,
    pub timestamp: i64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_user_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub like_order: Option<u32>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub emoticon_count: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub sticker_count: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub selfie_count: u32,
    #[serde(default, skip_serializing_if = "is_false")]
    pub offline_flag: bool,
    /// Item acted upon; only used to rebuild `like_order` when a log lacks it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
}

impl ActivityEvent {
    pub fn new(user_id: impl Into<String>, timestamp: i64, kind: EventKind) -> Self {
        ActivityEvent {
            user_id: user_id.into(),
            timestamp,
            kind,
            target_user_id: None,
            like_order: None,
            emoticon_count: 0,
            sticker_count: 0,
            selfie_count: 0,
            offline_flag: false,
            item_id: None,
        }
    }

    pub fn with_target(mut self, target: impl Into<String>) -> Self {
        self.target_user_id = Some(target.into());
        self
    }

    pub fn with_order(mut self, order: u32) -> Self {
        self.like_order = Some(order);
        self
    }

    pub fn offline(mut self) -> Self {
        self.offline_flag = true;
        self
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.timestamp < 0 {
            return Err("negative timestamp".into());
        }
        if self.user_id.is_empty() {
            return Err("empty user_id".into());
        }
        if self.like_order.is_some() && !self.kind.carries_order() {
            return Err("like_order on a non like/comment event".into());
        }
        if self.like_order == Some(0) {
            return Err("like_order must be positive".into());
        }
        if self.kind != EventKind::Post
            && (self.emoticon_count | self.sticker_count | self.selfie_count) != 0
        {
            return Err("disclosure counts on a non-post event".into());
        }
        Ok(())
    }
}

/// Sort key used throughout: (user_id, timestamp), then the remaining fields so
/// that the order is total and independent of input order.
pub fn sort_events(events: &mut [ActivityEvent]) {
    events.sort();
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub source: String,
    pub events: Vec<ActivityEvent>,
    pub malformed: Vec<MalformedLine>,
}

impl IngestReport {
    pub fn malformed_count(&self) -> usize {
        self.malformed.len()
    }
}

/// Parses one JSON line. Missing `user_id`, `timestamp` or `kind` is reported
/// as malformed; unknown fields are ignored.
fn parse_line(line: &str) -> std::result::Result<ActivityEvent, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("record is not an object")?;
    for key in ["user_id", "timestamp", "kind"] {
        match obj.get(key) {
            None | Some(serde_json::Value::Null) => return Err(format!("missing {key}")),
            _ => {}
        }
    }
    let event: ActivityEvent = serde_json::from_value(value).map_err(|e| e.to_string())?;
    event.check()?;
    Ok(event)
}

/// Reads a line-delimited JSON event file for one source.
pub fn ingest_events(path: &Path, source: &str) -> Result<IngestReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut report = IngestReport {
        source: source.to_string(),
        ..Default::default()
    };
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(ev) => report.events.push(ev),
            Err(reason) => report.malformed.push(MalformedLine {
                line: idx + 1,
                reason,
            }),
        }
    }
    if !report.malformed.is_empty() {
        log::warn!(
            "{}: {} malformed line(s) skipped",
            path.display(),
            report.malformed.len()
        );
    }
    fill_like_order(&mut report.events);
    sort_events(&mut report.events);
    Ok(report)
}

/// Writes events as line-delimited JSON in the given order.
pub fn write_events(path: &Path, events: &[ActivityEvent]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for ev in events {
        serde_json::to_writer(&mut out, ev)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reconstructs missing `like_order` values by ranking like/comment actions on
/// the same item by timestamp. Events without an `item_id` are left alone.
pub fn fill_like_order(events: &mut [ActivityEvent]) {
    let mut by_item: HashMap<&str, Vec<usize>> = HashMap::new();
    for (idx, ev) in events.iter().enumerate() {
        if ev.kind.carries_order() {
            if let Some(item) = ev.item_id.as_deref() {
                by_item.entry(item).or_default().push(idx);
            }
        }
    }
    let mut assignments = Vec::new();
    for idxs in by_item.values() {
        if idxs.iter().all(|&i| events[i].like_order.is_some()) {
            continue;
        }
        let mut sorted = idxs.clone();
        sorted.sort_by(|&a, &b| {
            (events[a].timestamp, &events[a].user_id).cmp(&(events[b].timestamp, &events[b].user_id))
        });
        for (rank, &i) in sorted.iter().enumerate() {
            if events[i].like_order.is_none() {
                assignments.push((i, rank as u32 + 1));
            }
        }
    }
    for (i, order) in assignments {
        events[i].like_order = Some(order);
    }
}

/// Weighted undirected interaction graph.
///
/// Edge weights count interactions in either direction. Declared friendships
/// without any interaction are still present as zero-weight edges, so the
/// friend set of a node is its adjacency list regardless of weight.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SocialGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl SocialGraph {
    /// Builds a graph over `nodes` from canonical (i < j) edge weights.
    pub fn from_edges(nodes: Vec<String>, edges: &BTreeMap<(usize, usize), f64>) -> Self {
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (&(i, j), &w) in edges {
            debug_assert!(i < j);
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
        }
        SocialGraph {
            nodes,
            index,
            adjacency,
        }
    }

    /// Graph with the given node order and no edges.
    pub fn empty(nodes: Vec<String>) -> Self {
        Self::from_edges(nodes, &BTreeMap::new())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn index_of(&self, user: &str) -> Option<usize> {
        self.index.get(user).copied()
    }

    /// Friends of `i` with their interaction weights, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.adjacency[i][pos].1)
            .unwrap_or(0.0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .is_ok()
    }

    /// Weighted degree d_ii = sum_j a_ij.
    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn friend_count(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Same edges with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SocialGraph {
        let mut out = self.clone();
        for list in &mut out.adjacency {
            for (_, w) in list.iter_mut() {
                *w *= factor;
            }
        }
        out
    }

    /// Mean weighted degree over all nodes; 0 for an empty graph.
    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (0..self.len()).map(|i| self.degree(i)).sum::<f64>() / self.len() as f64
    }

    /// Canonical (i < j) edge list.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| i < j)
                .map(move |&(j, w)| (i, j, w))
        })
    }

    /// Re-indexes the graph onto `roster`. Roster users absent from the graph
    /// become isolated nodes; graph nodes outside the roster are dropped along
    /// with their edges.
    pub fn aligned_to(&self, roster: &[String]) -> SocialGraph {
        let mut edges = BTreeMap::new();
        let map: Vec<Option<usize>> = roster.iter().map(|u| self.index_of(u)).collect();
        let inverse: HashMap<usize, usize> = map
            .iter()
            .enumerate()
            .filter_map(|(new, old)| old.map(|o| (o, new)))
            .collect();
        for (i, j, w) in self.edges() {
            if let (Some(&a), Some(&b)) = (inverse.get(&i), inverse.get(&j)) {
                edges.insert((a.min(b), a.max(b)), w);
            }
        }
        SocialGraph::from_edges(roster.to_vec(), &edges)
    }

    /// Writes the graph as CSV `user_a,user_b,weight` (canonical order).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        wtr.write_record(["user_a", "user_b", "weight"])
            .map_err(|e| Error::csv(path, e))?;
        for (i, j, w) in self.edges() {
            wtr.write_record([&self.nodes[i], &self.nodes[j], &fmt_num(w)])
                .map_err(|e| Error::csv(path, e))?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads a graph exported by [`SocialGraph::write_csv`].
    pub fn read_csv(path: &Path) -> Result<SocialGraph> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut names = BTreeSet::new();
        let mut raw = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::csv(path, e))?;
            let (a, b) = (rec[0].to_string(), rec[1].to_string());
            let w: f64 = rec[2]
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad weight {:?}", &rec[2])))?;
            names.insert(a.clone());
            names.insert(b.clone());
            raw.push((a, b, w));
        }
        let nodes: Vec<String> = names.into_iter().collect();
        let idx: HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut edges = BTreeMap::new();
        for (a, b, w) in raw {
            let (i, j) = (idx[a.as_str()], idx[b.as_str()]);
            if i != j {
                edges.insert((i.min(j), i.max(j)), w);
            }
        }
        Ok(SocialGraph::from_edges(nodes, &edges))
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Builds the interaction graph. Each directed action with a target adds one
/// to the undirected edge weight; self-directed actions are ignored. Declared
/// friendships join as zero-weight edges when no interaction exists.
pub fn build_graph(events: &[ActivityEvent], declared: Option<&[(String, String)]>) -> SocialGraph {
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for ev in events {
        names.insert(&ev.user_id);
        if let Some(t) = &ev.target_user_id {
            names.insert(t);
        }
    }
    if let Some(pairs) = declared {
        for (a, b) in pairs {
            names.insert(a);
            names.insert(b);
        }
    }
    let nodes: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let idx: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    if let Some(pairs) = declared {
        for (a, b) in pairs {
            let (i, j) = (idx[a.as_str()], idx[b.as_str()]);
            if i != j {
                edges.entry((i.min(j), i.max(j))).or_insert(0.0);
            }
        }
    }
    for ev in events {
        let Some(target) = &ev.target_user_id else {
            continue;
        };
        let (i, j) = (idx[ev.user_id.as_str()], idx[target.as_str()]);
        if i == j {
            continue;
        }
        *edges.entry((i.min(j), i.max(j))).or_insert(0.0) += 1.0;
    }
    SocialGraph::from_edges(nodes, &edges)
}

/// Reads a friend list CSV with header `user_a,user_b`.
pub fn read_friend_list(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        if rec.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "{}: friend list rows need two columns",
                path.display()
            )));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

pub fn write_friend_list(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    wtr.write_record(["user_a", "user_b"])
        .map_err(|e| Error::csv(path, e))?;
    for (a, b) in pairs {
        wtr.write_record([a, b]).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub user_id: String,
    pub start: i64,
    pub end: i64,
    pub event_count: usize,
}

impl Session {
    pub fn duration(&self) -> i64 {
        self.end - self.start
    }
}

/// Splits one user's sorted timestamps into maximal runs whose consecutive
/// gaps are at most `gap_threshold` seconds.
pub fn segment_sessions(user_id: &str, timestamps: &[i64], gap_threshold: i64) -> Vec<Session> {
    let mut sessions: Vec<Session> = Vec::new();
    let mut iter = timestamps.iter().copied();
    let Some(first) = iter.next() else {
        return sessions;
    };
    let mut current = Session {
        user_id: user_id.to_string(),
        start: first,
        end: first,
        event_count: 1,
    };
    for ts in iter {
        if ts - current.end <= gap_threshold {
            current.end = ts;
            current.event_count += 1;
        } else {
            let next = Session {
                user_id: user_id.to_string(),
                start: ts,
                end: ts,
                event_count: 1,
            };
            sessions.push(std::mem::replace(&mut current, next));
        }
    }
    sessions.push(current);
    sessions
}

/// Groups sorted events by user, preserving order.
pub fn group_by_user(events: &[ActivityEvent]) -> BTreeMap<&str, Vec<&ActivityEvent>> {
    let mut map: BTreeMap<&str, Vec<&ActivityEvent>> = BTreeMap::new();
    for ev in events {
        map.entry(ev.user_id.as_str()).or_default().push(ev);
    }
    map
}
