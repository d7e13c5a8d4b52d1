//! Command-line driver.
//!
//! Every subcommand reads its declared inputs, writes its outputs into an
//! output directory and records a `manifest.json` there with the command,
//! input digests, root seed, config hash and crate version.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::activity::{build_graph, group_by_user, ingest_events, read_friend_list, write_events, SocialGraph};
use crate::analytics::{
    community_ratios, friend_type_distribution, hop_distance_same_type, write_series, SeriesPoint,
};
use crate::burst;
use crate::classify::{
    evaluate, read_models, read_predictions, write_models, write_predictions, LabelVector, NEGATIVE,
};
use crate::config::{Settings, KEYS};
use crate::error::{Error, Result};
use crate::features::{extract_source, FeatureMatrix};
use crate::pipeline::{
    ablation, crossval, predict_all, represent_with_fit, select_labeled, train_models, CohortData, Learner,
    Representation,
};
use crate::stm::{write_checkpoint, write_loss_trace, Checkpoint};
use crate::synth::{generate, read_truth, ArchetypeConfig, CohortSpec, TruthRow};

#[derive(Debug, Parser)]
#[command(name = "snmdd", version, about = "Social-network usage disorder detection pipeline")]
pub struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Root seed (same as `--set seed=N`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and sort one event file; writes events.jsonl, graph.csv and ingest_report.json.
    Ingest(IngestArgs),
    /// Per-user burst statistics of one event file; writes bursts.csv.
    Bursts(BurstsArgs),
    /// Feature matrices of every source in a data directory; writes features_<source>.csv and graph.csv.
    Features(FeaturesArgs),
    /// User representation from feature matrices; writes representation.csv (and checkpoint.json, loss_trace.csv).
    Tensor(TensorArgs),
    /// Train the per-class models on the visible labels; writes models.json and labeled.csv.
    Train(TrainArgs),
    /// Apply trained models; writes predictions.csv.
    Predict(PredictArgs),
    /// Score predictions, or cross-validate a representation; writes metrics.json.
    Evaluate(EvaluateArgs),
    /// Generate a planted synthetic cohort.
    Synth(SynthArgs),
    /// Network analyses; writes friend_types.csv, hops.csv and communities.csv.
    Analyze(AnalyzeArgs),
    /// Information-gain ranking and feature ablation; writes infogain.csv, ablation.csv and ablation_fit.json.
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RepresentationArg {
    Stm,
    Tucker,
    Concat,
}

impl From<RepresentationArg> for Representation {
    fn from(r: RepresentationArg) -> Self {
        match r {
            RepresentationArg::Stm => Representation::Stm,
            RepresentationArg::Tucker => Representation::Tucker,
            RepresentationArg::Concat => Representation::Concat,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LearnerArg {
    Tsvm,
    Svm,
}

impl From<LearnerArg> for Learner {
    fn from(l: LearnerArg) -> Self {
        match l {
            LearnerArg::Tsvm => Learner::Tsvm,
            LearnerArg::Svm => Learner::Svm,
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Line-delimited JSON event file.
    #[arg(long)]
    pub events: PathBuf,
    /// Source name recorded in the report.
    #[arg(long, default_value = "s0")]
    pub source: String,
    /// Declared friendships `user_a,user_b`.
    #[arg(long)]
    pub friends: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BurstsArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Directory with events_<source>.jsonl files and an optional friends.csv.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TensorArgs {
    /// Output directory of `features`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum, default_value = "stm")]
    pub representation: RepresentationArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub representation: PathBuf,
    /// Truth file `user_id,cr,nc,io[,archetype]`; `cv.labeled_fraction` of it stays visible.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value = "tsvm")]
    pub learner: LearnerArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub representation: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub truth: PathBuf,
    /// Score this predictions file.
    #[arg(long, conflicts_with = "representation", required_unless_present = "representation")]
    pub predictions: Option<PathBuf>,
    /// Users (labeled.csv of `train`) left out of the scoring.
    #[arg(long, requires = "predictions")]
    pub exclude: Option<PathBuf>,
    /// Cross-validate this representation instead.
    #[arg(long)]
    pub representation: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsvm")]
    pub learner: LearnerArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Archetype parameter file; the bundled fixture when absent.
    #[arg(long)]
    pub archetypes: Option<PathBuf>,
    /// Users per archetype (synth.size).
    #[arg(long)]
    pub size: Option<usize>,
    /// Homophily in [0, 1] (synth.homophily).
    #[arg(long)]
    pub homophily: Option<f64>,
    /// Number of sources (synth.sources).
    #[arg(long)]
    pub sources: Option<usize>,
    /// Per-source participation probability (synth.participation).
    #[arg(long)]
    pub participation: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// graph.csv written by `features` or `ingest`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Labels from a predictions file.
    #[arg(long, required_unless_present = "truth")]
    pub predictions: Option<PathBuf>,
    /// Labels from a truth file when no predictions are given.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Output directory of `features`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value = "svm")]
    pub learner: LearnerArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    version: String,
    seed: u64,
    config_hash: String,
    config: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

/// Input digests and output names collected while a subcommand runs.
struct Run {
    command: &'static str,
    settings: Settings,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    out: PathBuf,
}

impl Run {
    fn new(command: &'static str, settings: Settings, out: &Path) -> Result<Self> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Run {
            command,
            settings,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            out: out.to_path_buf(),
        })
    }

    /// Records a file input (or every file of a directory input).
    fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        if path.is_dir() {
            for file in sorted_files(path)? {
                let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                if name != MANIFEST {
                    self.inputs.insert(format!("{role}/{name}"), digest(&file)?);
                }
            }
        } else {
            self.inputs.insert(role.to_string(), digest(path)?);
        }
        Ok(())
    }

    fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn finish(mut self) -> Result<()> {
        self.outputs.sort();
        let manifest = Manifest {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.settings.seed,
            config_hash: self.settings.hash(),
            config: self.settings.to_map(),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = self.out.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

const MANIFEST: &str = "manifest.json";

fn digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Files named `<prefix><name><suffix>` in `dir`, as (name, path) sorted by name.
fn named_files(dir: &Path, prefix: &str, suffix: &str) -> Result<Vec<(String, PathBuf)>> {
    let found: Vec<(String, PathBuf)> = sorted_files(dir)?
        .into_iter()
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?;
            let source = name.strip_prefix(prefix)?.strip_suffix(suffix)?.to_string();
            (!source.is_empty()).then_some((source, p))
        })
        .collect();
    if found.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: no {prefix}*{suffix} files",
            dir.display()
        )));
    }
    Ok(found)
}

/// Truth labels keyed by user.
fn truth_map(path: &Path) -> Result<BTreeMap<String, LabelVector>> {
    Ok(read_truth(path)?.into_iter().map(|r: TruthRow| (r.user_id, r.labels)).collect())
}

/// Truth labels in `users` order; every user must be present.
fn truth_for(path: &Path, users: &[String]) -> Result<Vec<LabelVector>> {
    let map = truth_map(path)?;
    users
        .iter()
        .map(|u| {
            map.get(u)
                .copied()
                .ok_or_else(|| Error::Misaligned(format!("{u} has no row in {}", path.display())))
        })
        .collect()
}

fn read_representation(path: &Path) -> Result<FeatureMatrix> {
    let m = FeatureMatrix::read_csv(path, "representation")?;
    if m.cells.iter().flatten().any(Option::is_none) {
        return Err(Error::InvalidArgument(format!("{}: representation has empty cells", path.display())));
    }
    Ok(m)
}

fn help_keys() -> String {
    let defaults = Settings::default();
    let mut text = String::from("Config keys (set with --config FILE or --set KEY=VALUE):\n");
    for (key, help) in KEYS {
        let value = defaults.get(key).unwrap_or_default();
        text.push_str(&format!("  {key:<24} {help} [default: {value}]\n"));
    }
    text
}

fn settings(cli: &Cli) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &cli.config {
        require(path)?;
        s.apply_file(path)?;
    }
    for pair in &cli.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        s.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

/// Parses `args` (including the program name) and runs the subcommand.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().after_help(help_keys()).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let s = settings(cli)?;
    match &cli.command {
        Command::Ingest(a) => ingest(a, s),
        Command::Bursts(a) => bursts(a, s),
        Command::Features(a) => features(a, s),
        Command::Tensor(a) => tensor(a, s),
        Command::Train(a) => train(a, s),
        Command::Predict(a) => predict(a, s),
        Command::Evaluate(a) => evaluate_cmd(a, s),
        Command::Synth(a) => synth(a, s),
        Command::Analyze(a) => analyze(a, s),
        Command::Ablate(a) => ablate(a, s),
    }
}

#[derive(Serialize)]
struct MalformedRow {
    line: usize,
    reason: String,
}

#[derive(Serialize)]
struct IngestSummary {
    source: String,
    events: usize,
    users: usize,
    malformed: Vec<MalformedRow>,
}

fn ingest(a: &IngestArgs, s: Settings) -> Result<()> {
    require(&a.events)?;
    let friends = match &a.friends {
        Some(p) => {
            require(p)?;
            Some(read_friend_list(p)?)
        }
        None => None,
    };
    let mut run = Run::new("ingest", s, &a.out)?;
    run.input("events", &a.events)?;
    if let Some(p) = &a.friends {
        run.input("friends", p)?;
    }
    let report = ingest_events(&a.events, &a.source)?;
    write_events(&run.output("events.jsonl"), &report.events)?;
    build_graph(&report.events, friends.as_deref()).write_csv(&run.output("graph.csv"))?;
    let summary = IngestSummary {
        source: report.source.clone(),
        events: report.events.len(),
        users: group_by_user(&report.events).len(),
        malformed: report
            .malformed
            .iter()
            .map(|m| MalformedRow {
                line: m.line,
                reason: m.reason.clone(),
            })
            .collect(),
    };
    write_json(&run.output("ingest_report.json"), &summary)?;
    run.finish()
}

fn bursts(a: &BurstsArgs, s: Settings) -> Result<()> {
    require(&a.events)?;
    let config = s.pipeline.extract.burst;
    let mut run = Run::new("bursts", s, &a.out)?;
    run.input("events", &a.events)?;
    let report = ingest_events(&a.events, "events")?;
    let path = run.output("bursts.csv");
    let mut wtr = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    wtr.write_record([
        "user_id", "bi_avg", "bi_med", "bi_sd", "bi_max", "bi_min", "bl_avg", "bl_med", "bl_sd", "bl_max", "bl_min",
        "n_bursts",
    ])
    .map_err(|e| Error::csv(&path, e))?;
    for (user, own) in group_by_user(&report.events) {
        let ts: Vec<i64> = own
            .iter()
            .filter(|e| e.kind.is_online_action() || (config.include_offline && e.offline_flag))
            .map(|e| e.timestamp)
            .collect();
        let mut rec = vec![user.to_string()];
        match burst::detect(&ts, &config)?.filter(|r| r.has_bursts) {
            Some(r) => {
                rec.extend(r.stats_vector().iter().map(|v| format!("{v}")));
                rec.push(r.bursts.len().to_string());
            }
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 10));
                rec.push("0".to_string());
            }
        }
        wtr.write_record(&rec).map_err(|e| Error::csv(&path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(&path, e))?;
    run.finish()
}

fn features(a: &FeaturesArgs, s: Settings) -> Result<()> {
    require(&a.data)?;
    let config = s.pipeline.extract;
    let mut run = Run::new("features", s, &a.out)?;
    run.input("data", &a.data)?;
    let mut sources = Vec::new();
    for (name, path) in named_files(&a.data, "events_", ".jsonl")? {
        sources.push((name.clone(), ingest_events(&path, &name)?.events));
    }
    let friends_path = a.data.join("friends.csv");
    let friends = if friends_path.exists() {
        Some(read_friend_list(&friends_path)?)
    } else {
        None
    };
    let mut roster: Vec<String> = sources
        .iter()
        .flat_map(|(_, events)| events.iter().map(|e| e.user_id.clone()))
        .collect();
    let truth_path = a.data.join("truth.csv");
    if truth_path.exists() {
        roster.extend(read_truth(&truth_path)?.into_iter().map(|r| r.user_id));
    }
    roster.sort();
    roster.dedup();
    for (name, events) in &sources {
        let m = extract_source(name, events, friends.as_deref(), None, Some(&roster), &config)?;
        m.write_csv(&run.output(&format!("features_{name}.csv")))?;
    }
    let all: Vec<_> = sources.iter().flat_map(|(_, e)| e.iter().cloned()).collect();
    build_graph(&all, friends.as_deref())
        .aligned_to(&roster)
        .write_csv(&run.output("graph.csv"))?;
    run.finish()
}

/// Feature matrices and graph written by `features`, as cohort data with
/// the given truth (or all-negative placeholders).
fn load_features(dir: &Path, truth: Option<&Path>) -> Result<CohortData> {
    require(dir)?;
    let mut sources = Vec::new();
    for (name, path) in named_files(dir, "features_", ".csv")? {
        sources.push(FeatureMatrix::read_csv(&path, &name)?);
    }
    let roster = sources[0].users.clone();
    if let Some(m) = sources.iter().find(|m| m.users != roster) {
        return Err(Error::Misaligned(format!("features_{}.csv rows differ from the first source", m.source_id)));
    }
    let graph_path = dir.join("graph.csv");
    require(&graph_path)?;
    let graph = SocialGraph::read_csv(&graph_path)?.aligned_to(&roster);
    let truth = match truth {
        Some(p) => truth_for(p, &roster)?,
        None => vec![NEGATIVE; roster.len()],
    };
    Ok(CohortData {
        roster,
        sources,
        graph,
        truth,
    })
}

fn tensor(a: &TensorArgs, s: Settings) -> Result<()> {
    let data = load_features(&a.features, None)?;
    let pipeline = s.seeded_pipeline();
    let rep: Representation = a.representation.into();
    let mut run = Run::new("tensor", s, &a.out)?;
    run.input("features", &a.features)?;
    let (x, fit) = represent_with_fit(&data, rep, &pipeline.stm)?;
    let columns: Vec<String> = match (rep, x.first()) {
        (Representation::Concat, _) => data
            .sources
            .iter()
            .flat_map(|m| m.columns.iter().map(move |c| format!("{}:{c}", m.source_id)))
            .collect(),
        (_, Some(row)) => (0..row.len()).map(|r| format!("u{r}")).collect(),
        (_, None) => Vec::new(),
    };
    let mut m = FeatureMatrix::new(rep.name(), columns);
    for (user, row) in data.roster.iter().zip(&x) {
        m.push_row(user.clone(), row.iter().copied().map(Some).collect());
    }
    m.write_csv(&run.output("representation.csv"))?;
    if let Some((fit, config)) = fit {
        write_checkpoint(&run.output("checkpoint.json"), &Checkpoint::new(&fit.factors, &config, &data.roster))?;
        write_loss_trace(&run.output("loss_trace.csv"), &fit.loss_trace)?;
    }
    run.finish()
}

fn train(a: &TrainArgs, s: Settings) -> Result<()> {
    require(&a.representation)?;
    require(&a.truth)?;
    let pipeline = s.seeded_pipeline();
    let mut run = Run::new("train", s, &a.out)?;
    run.input("representation", &a.representation)?;
    run.input("truth", &a.truth)?;
    let rep = read_representation(&a.representation)?;
    let x = rep.dense(0.0);
    let truth = truth_for(&a.truth, &rep.users)?;
    let visible = select_labeled(&truth, pipeline.labeled_fraction, pipeline.seed)?;
    let (mut lx, mut ly, mut ux, mut labeled) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for ((row, v), user) in x.iter().zip(&visible).zip(&rep.users) {
        match v {
            Some(y) => {
                lx.push(row.clone());
                ly.push(*y);
                labeled.push(TruthRow {
                    user_id: user.clone(),
                    labels: *y,
                    archetype: None,
                });
            }
            None => ux.push(row.clone()),
        }
    }
    let models = train_models(&lx, &ly, &ux, a.learner.into(), &pipeline.svm)?;
    write_models(&run.output("models.json"), &models)?;
    crate::synth::write_truth(&run.output("labeled.csv"), &labeled)?;
    run.finish()
}

fn predict(a: &PredictArgs, s: Settings) -> Result<()> {
    require(&a.models)?;
    require(&a.representation)?;
    let mut run = Run::new("predict", s, &a.out)?;
    run.input("models", &a.models)?;
    run.input("representation", &a.representation)?;
    let models = read_models(&a.models)?;
    let rep = read_representation(&a.representation)?;
    let (labels, scores) = predict_all(&models, &rep.dense(0.0))?;
    write_predictions(&run.output("predictions.csv"), &rep.users, &labels, &scores)?;
    run.finish()
}

fn evaluate_cmd(a: &EvaluateArgs, s: Settings) -> Result<()> {
    require(&a.truth)?;
    let pipeline = s.seeded_pipeline();
    let mut run = Run::new("evaluate", s, &a.out)?;
    run.input("truth", &a.truth)?;
    let path = run.output("metrics.json");
    if let Some(rep_path) = &a.representation {
        require(rep_path)?;
        run.input("representation", rep_path)?;
        let rep = read_representation(rep_path)?;
        let truth = truth_for(&a.truth, &rep.users)?;
        let visible = select_labeled(&truth, pipeline.labeled_fraction, pipeline.seed)?;
        let report = crossval(&rep.dense(0.0), &visible, &truth, a.learner.into(), &pipeline)?;
        write_json(&path, &report)?;
    } else if let Some(pred_path) = &a.predictions {
        require(pred_path)?;
        run.input("predictions", pred_path)?;
        let excluded: Vec<String> = match &a.exclude {
            Some(p) => {
                require(p)?;
                run.input("exclude", p)?;
                read_truth(p)?.into_iter().map(|r| r.user_id).collect()
            }
            None => Vec::new(),
        };
        let pred = read_predictions(pred_path)?;
        let truth = truth_map(&a.truth)?;
        let (mut y, mut labels, mut scores) = (Vec::new(), Vec::new(), Vec::new());
        for ((user, l), sc) in pred.users.iter().zip(&pred.labels).zip(&pred.scores) {
            if excluded.contains(user) {
                continue;
            }
            let t = truth
                .get(user)
                .ok_or_else(|| Error::Misaligned(format!("{user} has no row in {}", a.truth.display())))?;
            y.push(*t);
            labels.push(*l);
            scores.push(*sc);
        }
        write_json(&path, &evaluate(&y, &scores, &labels)?)?;
    }
    run.finish()
}

fn synth(a: &SynthArgs, mut s: Settings) -> Result<()> {
    let config = match &a.archetypes {
        Some(p) => {
            require(p)?;
            ArchetypeConfig::read(p)?
        }
        None => ArchetypeConfig::default(),
    };
    if let Some(v) = a.size {
        s.synth.size = v;
    }
    if let Some(v) = a.homophily {
        s.synth.homophily = v;
    }
    if let Some(v) = a.sources {
        s.synth.sources = v;
    }
    if let Some(v) = a.participation {
        s.synth.participation = v;
    }
    let spec = CohortSpec {
        sizes: [s.synth.size; 5],
        homophily: s.synth.homophily,
        sources: s.synth.sources,
        seed: s.seed,
        participation: Some(s.synth.participation),
    };
    let mut run = Run::new("synth", s, &a.out)?;
    if let Some(p) = &a.archetypes {
        run.input("archetypes", p)?;
    }
    let cohort = generate(&spec, &config)?;
    cohort.write(&a.out)?;
    for k in 0..spec.sources {
        run.output(&format!("events_{}.jsonl", crate::synth::SyntheticCohort::source_name(k)));
    }
    run.output("friends.csv");
    run.output("truth.csv");
    run.finish()
}

fn analyze(a: &AnalyzeArgs, s: Settings) -> Result<()> {
    require(&a.graph)?;
    let mut run = Run::new("analyze", s, &a.out)?;
    run.input("graph", &a.graph)?;
    let (users, labels, scores) = match (&a.predictions, &a.truth) {
        (Some(p), _) => {
            require(p)?;
            run.input("predictions", p)?;
            let pred = read_predictions(p)?;
            (pred.users, pred.labels, pred.scores)
        }
        (None, Some(t)) => {
            require(t)?;
            run.input("truth", t)?;
            let rows = read_truth(t)?;
            let scores = rows.iter().map(|r| r.labels.map(f64::from)).collect();
            (
                rows.iter().map(|r| r.user_id.clone()).collect::<Vec<_>>(),
                rows.iter().map(|r| r.labels).collect(),
                scores,
            )
        }
        (None, None) => return Err(Error::InvalidArgument("analyze needs --predictions or --truth".into())),
    };
    let graph = SocialGraph::read_csv(&a.graph)?.aligned_to(&users);
    write_series(&run.output("friend_types.csv"), &friend_type_distribution(&graph, &labels)?.series())?;
    let hops: Vec<SeriesPoint> = hop_distance_same_type(&graph, &labels)?
        .into_iter()
        .flat_map(|(t, h)| {
            let mut points = vec![
                SeriesPoint::new(format!("{t}:reached"), 0.0, h.reached as f64),
                SeriesPoint::new(format!("{t}:unreachable"), 0.0, h.unreachable as f64),
            ];
            if let Some(mean) = h.mean {
                points.push(SeriesPoint::new(format!("{t}:mean_hops"), 0.0, mean));
            }
            points
        })
        .collect();
    write_series(&run.output("hops.csv"), &hops)?;
    let communities: Vec<SeriesPoint> = community_ratios(&graph, &labels, &scores)?
        .into_iter()
        .flat_map(|c| {
            let class = c.class.name();
            [
                SeriesPoint::new(format!("{class}:mean_score"), c.community as f64, c.mean_score),
                SeriesPoint::new(format!("{class}:ratio"), c.community as f64, c.ratio),
                SeriesPoint::new(format!("{class}:size"), c.community as f64, c.size as f64),
            ]
        })
        .collect();
    write_series(&run.output("communities.csv"), &communities)?;
    run.finish()
}

fn ablate(a: &AblateArgs, s: Settings) -> Result<()> {
    require(&a.truth)?;
    let data = load_features(&a.features, Some(&a.truth))?;
    let pipeline = s.seeded_pipeline();
    let mut run = Run::new("ablate", s, &a.out)?;
    run.input("features", &a.features)?;
    run.input("truth", &a.truth)?;
    let (ranking, curve) = ablation(&data, a.learner.into(), &pipeline)?;
    let path = run.output("infogain.csv");
    let mut wtr = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    wtr.write_record(["rank", "column", "gain"]).map_err(|e| Error::csv(&path, e))?;
    for (rank, score) in ranking.iter().enumerate() {
        wtr.write_record([(rank + 1).to_string(), score.name.clone(), format!("{}", score.gain)])
            .map_err(|e| Error::csv(&path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(&path, e))?;
    write_series(&run.output("ablation.csv"), &curve.series(""))?;
    write_json(&run.output("ablation_fit.json"), &curve)?;
    run.finish()
}
