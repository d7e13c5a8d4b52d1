//! End-to-end runs: features per source, a user representation, and
//! cross-validated per-class classifiers.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::activity::{build_graph, ActivityEvent, SocialGraph};
use crate::analytics::{ablation_curve, AblationCurve};
use crate::classify::{
    evaluate, information_gain, predict, stratified_folds, summarize, train_svm, train_tsvm, Class, FeatureScore,
    LabelVector, LinearModel, MetricSummary, Metrics, SvmConfig, NEGATIVE,
};
use crate::error::{Error, Result};
use crate::features::{extract_source, normalize, ExtractConfig, FeatureMatrix};
use crate::stm::{assemble_tensor, concatenate_baseline, sgd_fit, FitResult, MissingMode, StmConfig};
use crate::synth::SyntheticCohort;

/// How users are represented to the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Graph-regularized Tucker user factors.
    Stm,
    /// Tucker user factors without the graph term.
    Tucker,
    /// Side-by-side concatenation of the source feature matrices.
    Concat,
}

impl Representation {
    pub const ALL: [Representation; 3] = [Representation::Stm, Representation::Tucker, Representation::Concat];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Stm => "stm",
            Representation::Tucker => "tucker",
            Representation::Concat => "concat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    Tsvm,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub extract: ExtractConfig,
    pub stm: StmConfig,
    pub svm: SvmConfig,
    pub folds: usize,
    /// Fraction of each label stratum whose labels the learner may see.
    pub labeled_fraction: f64,
    pub seed: u64,
}

/// Graph smoothing weight used by the pipeline on the unit-mean-degree
/// smoothing graph.
pub const PIPELINE_LAMBDA1: f64 = 200.0;

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            extract: ExtractConfig::default(),
            stm: StmConfig {
                lambda1: PIPELINE_LAMBDA1,
                ..StmConfig::default()
            },
            svm: SvmConfig::default(),
            folds: 5,
            labeled_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Per-source feature matrices and the interaction graph over one roster.
#[derive(Debug, Clone)]
pub struct CohortData {
    pub roster: Vec<String>,
    /// Raw feature matrices aligned to the roster.
    pub sources: Vec<FeatureMatrix>,
    pub graph: SocialGraph,
    pub truth: Vec<LabelVector>,
}

impl CohortData {
    /// Extracts every source's features over `roster`. The graph merges the
    /// interactions of all sources with the declared friendships.
    pub fn from_events(
        roster: Vec<String>,
        sources: &[(String, Vec<ActivityEvent>)],
        friends: Option<&[(String, String)]>,
        truth: Vec<LabelVector>,
        config: &ExtractConfig,
    ) -> Result<Self> {
        if truth.len() != roster.len() {
            return Err(Error::Misaligned(format!("{} truth rows for {} users", truth.len(), roster.len())));
        }
        let matrices = sources
            .iter()
            .map(|(id, events)| extract_source(id, events, friends, None, Some(&roster), config))
            .collect::<Result<Vec<_>>>()?;
        let all: Vec<ActivityEvent> = sources.iter().flat_map(|(_, e)| e.iter().cloned()).collect();
        let graph = build_graph(&all, friends).aligned_to(&roster);
        Ok(CohortData {
            roster,
            sources: matrices,
            graph,
            truth,
        })
    }

    pub fn from_synthetic(cohort: &SyntheticCohort, config: &ExtractConfig) -> Result<Self> {
        let sources: Vec<(String, Vec<ActivityEvent>)> = cohort
            .sources
            .iter()
            .enumerate()
            .map(|(k, e)| (SyntheticCohort::source_name(k), e.clone()))
            .collect();
        let friends = cohort.friend_pairs();
        Self::from_events(cohort.users.clone(), &sources, Some(&friends), cohort.labels(), config)
    }

    /// Interaction graph rescaled to unit mean weighted degree, so that the
    /// smoothing weight is independent of the overall interaction volume.
    pub fn smoothing_graph(&self) -> SocialGraph {
        let mean = self.graph.mean_degree();
        if mean > 0.0 {
            self.graph.scaled(1.0 / mean)
        } else {
            self.graph.clone()
        }
    }

    /// Source matrices z-scored over all users. No labels are involved.
    pub fn normalized_sources(&self) -> Result<Vec<FeatureMatrix>> {
        let rows: Vec<usize> = (0..self.roster.len()).collect();
        self.sources.iter().map(|m| normalize(m, &rows).map(|(z, _)| z)).collect()
    }
}

/// Column-wise z-score of a dense matrix; constant columns become 0.
pub fn standardize(x: &mut [Vec<f64>]) {
    let Some(d) = x.first().map(Vec::len) else {
        return;
    };
    let n = x.len() as f64;
    for c in 0..d {
        let mean = x.iter().map(|r| r[c]).sum::<f64>() / n;
        let sd = (x.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for r in x.iter_mut() {
            r[c] = if sd > 0.0 { (r[c] - mean) / sd } else { 0.0 };
        }
    }
}

/// Dense per-user vectors for `rep`, standardized per column.
pub fn represent(data: &CohortData, rep: Representation, stm: &StmConfig) -> Result<Vec<Vec<f64>>> {
    represent_with_fit(data, rep, stm).map(|(x, _)| x)
}

/// [`represent`] that also returns the factorization and the config it ran
/// with (none for the concatenation baseline).
pub fn represent_with_fit(
    data: &CohortData,
    rep: Representation,
    stm: &StmConfig,
) -> Result<(Vec<Vec<f64>>, Option<(FitResult, StmConfig)>)> {
    let normalized = data.normalized_sources()?;
    let (mut x, fit) = match rep {
        Representation::Concat => (concatenate_baseline(&normalized, &data.roster).dense(0.0), None),
        Representation::Stm | Representation::Tucker => {
            let tensor = assemble_tensor(&normalized, &data.roster, MissingMode::Exclude)?;
            let mut config = *stm;
            if rep == Representation::Tucker {
                config.lambda1 = 0.0;
            }
            let fit = sgd_fit(&tensor, &data.smoothing_graph(), &config)?;
            log::info!("{} fit: {} epochs, final loss {:?}", rep.name(), fit.epochs, fit.loss_trace.last());
            (fit.factors.u.outer_iter().map(|r| r.to_vec()).collect(), Some((fit, config)))
        }
    };
    standardize(&mut x);
    Ok((x, fit))
}

/// Hides labels so that a `fraction` of each label-vector stratum stays
/// labeled, rounding per stratum.
pub fn select_labeled(truth: &[LabelVector], fraction: f64, seed: u64) -> Result<Vec<Option<LabelVector>>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!("labeled fraction {fraction} not in [0, 1]")));
    }
    let mut strata: BTreeMap<LabelVector, Vec<usize>> = BTreeMap::new();
    for (i, y) in truth.iter().enumerate() {
        strata.entry(*y).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![None; truth.len()];
    for (y, mut members) in strata {
        members.shuffle(&mut rng);
        let keep = (fraction * members.len() as f64).round() as usize;
        for &i in &members[..keep] {
            out[i] = Some(y);
        }
    }
    Ok(out)
}

/// Trains the three per-class models. Transductive training treats every
/// row of `unlabeled` as an unlabeled sample.
pub fn train_models(
    labeled_x: &[Vec<f64>],
    labeled_y: &[LabelVector],
    unlabeled: &[Vec<f64>],
    learner: Learner,
    config: &SvmConfig,
) -> Result<[LinearModel; 3]> {
    let train = |class: Class| -> Result<LinearModel> {
        let y: Vec<i8> = labeled_y.iter().map(|v| v[class.index()]).collect();
        match learner {
            Learner::Svm => train_svm(labeled_x, &y, class, config),
            Learner::Tsvm => Ok(train_tsvm(labeled_x, &y, unlabeled, class, config)?.model),
        }
    };
    Ok([train(Class::Cr)?, train(Class::Nc)?, train(Class::Io)?])
}

pub fn predict_all(models: &[LinearModel; 3], x: &[Vec<f64>]) -> Result<(Vec<LabelVector>, Vec<[f64; 3]>)> {
    let mut labels = Vec::with_capacity(x.len());
    let mut scores = Vec::with_capacity(x.len());
    for row in x {
        let (l, s) = predict(models, row)?;
        labels.push(l);
        scores.push(s);
    }
    Ok((labels, scores))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub per_fold: Vec<Metrics>,
    pub summary: MetricSummary,
}

/// k-fold cross-validation. Folds are stratified on the visible labels; each
/// fold trains on the visible labels of the other folds and is scored against
/// the truth of all its users. The transductive learner sees every user
/// without a visible training label (including the held-out fold) as
/// unlabeled.
pub fn crossval(
    x: &[Vec<f64>],
    visible: &[Option<LabelVector>],
    truth: &[LabelVector],
    learner: Learner,
    config: &PipelineConfig,
) -> Result<CvReport> {
    if x.len() != visible.len() || x.len() != truth.len() {
        return Err(Error::Misaligned(format!(
            "{} rows, {} visible labels, {} truths",
            x.len(),
            visible.len(),
            truth.len()
        )));
    }
    let folds = stratified_folds(visible, config.folds, config.seed)?;
    let mut per_fold = Vec::with_capacity(config.folds);
    for f in 0..config.folds {
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        let mut ux = Vec::new();
        for i in 0..x.len() {
            match visible[i] {
                Some(y) if folds[i] != f => {
                    lx.push(x[i].clone());
                    ly.push(y);
                }
                _ => ux.push(x[i].clone()),
            }
        }
        let models = train_models(&lx, &ly, &ux, learner, &config.svm)?;
        let test: Vec<usize> = (0..x.len()).filter(|&i| folds[i] == f).collect();
        let tx: Vec<Vec<f64>> = test.iter().map(|&i| x[i].clone()).collect();
        let tt: Vec<LabelVector> = test.iter().map(|&i| truth[i]).collect();
        let (labels, scores) = predict_all(&models, &tx)?;
        per_fold.push(evaluate(&labels, &scores, &tt)?);
    }
    let summary = summarize(&per_fold)?;
    Ok(CvReport { per_fold, summary })
}

/// Representation plus cross-validation on one cohort.
pub fn run(data: &CohortData, rep: Representation, learner: Learner, config: &PipelineConfig) -> Result<CvReport> {
    let x = represent(data, rep, &config.stm)?;
    let visible = select_labeled(&data.truth, config.labeled_fraction, config.seed)?;
    crossval(&x, &visible, &data.truth, learner, config)
}

/// Source matrices side by side with missing cells kept, in the column
/// order of the concatenation baseline.
pub fn concatenated_raw(data: &CohortData) -> FeatureMatrix {
    let columns = data
        .sources
        .iter()
        .flat_map(|m| m.columns.iter().map(move |c| format!("{}:{c}", m.source_id)))
        .collect();
    let mut out = FeatureMatrix::new("concat", columns);
    for (i, user) in data.roster.iter().enumerate() {
        out.push_row(user.clone(), data.sources.iter().flat_map(|m| m.cells[i].iter().copied()).collect());
    }
    out
}

/// Columns ranked by information gain averaged over the classes that have
/// positives; ties keep the column order.
pub fn rank_features(matrix: &FeatureMatrix, truth: &[LabelVector]) -> Vec<FeatureScore> {
    let classes: Vec<Vec<bool>> = Class::ALL
        .iter()
        .map(|c| truth.iter().map(|y| y[c.index()] > 0).collect::<Vec<bool>>())
        .filter(|l| l.iter().any(|&b| b))
        .collect();
    let mut scores: Vec<FeatureScore> = (0..matrix.n_cols())
        .map(|c| {
            let values = matrix.column(c);
            let total: f64 = classes.iter().map(|l| information_gain(&values, l)).sum();
            FeatureScore {
                column: c,
                name: matrix.columns[c].clone(),
                gain: if classes.is_empty() { 0.0 } else { total / classes.len() as f64 },
            }
        })
        .collect();
    scores.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.column.cmp(&b.column)));
    scores
}

/// Cross-validated exact-match accuracy of the concatenation representation
/// restricted to each prefix of the information-gain ranking. The baseline is
/// the accuracy of predicting every user negative for all classes.
pub fn ablation(data: &CohortData, learner: Learner, config: &PipelineConfig) -> Result<(Vec<FeatureScore>, AblationCurve)> {
    let ranking = rank_features(&concatenated_raw(data), &data.truth);
    let x = represent(data, Representation::Concat, &config.stm)?;
    let visible = select_labeled(&data.truth, config.labeled_fraction, config.seed)?;
    let baseline = data.truth.iter().filter(|y| **y == NEGATIVE).count() as f64 / data.truth.len().max(1) as f64;
    let order: Vec<usize> = ranking.iter().map(|s| s.column).collect();
    let curve = ablation_curve(&order, baseline, |cols| {
        let sub: Vec<Vec<f64>> = x.iter().map(|row| cols.iter().map(|&c| row[c]).collect()).collect();
        Ok(crossval(&sub, &visible, &data.truth, learner, config)?.summary.accuracy.mean)
    })?;
    Ok((ranking, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, ArchetypeConfig, CohortSpec};

    #[test]
    fn standardize_columns() {
        let mut x = vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        standardize(&mut x);
        assert!((x[0][0] + 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(x[1], vec![0.0, 0.0]);
    }

    #[test]
    fn labeled_selection_per_stratum() {
        let truth: Vec<LabelVector> = (0..100).map(|i| if i < 40 { [1, -1, -1] } else { [-1, -1, -1] }).collect();
        let v = select_labeled(&truth, 0.2, 1).unwrap();
        assert_eq!(v.iter().filter(|y| y.is_some()).count(), 20);
        assert_eq!(v.iter().filter(|y| **y == Some([1, -1, -1])).count(), 8);
        assert_eq!(v, select_labeled(&truth, 0.2, 1).unwrap());
        assert!(select_labeled(&truth, 1.5, 1).is_err());
    }

    #[test]
    fn small_cohort_end_to_end() {
        let spec = CohortSpec {
            sizes: [20; 5],
            ..CohortSpec::standard(3)
        };
        let cohort = generate(&spec, &ArchetypeConfig::default()).unwrap();
        let data = CohortData::from_synthetic(&cohort, &ExtractConfig::default()).unwrap();
        assert_eq!(data.sources.len(), 2);
        let mut config = PipelineConfig {
            labeled_fraction: 0.5,
            ..PipelineConfig::default()
        };
        config.stm.max_epochs = 50;
        config.svm.min_iterations = 5_000;
        let report = run(&data, Representation::Concat, Learner::Svm, &config).unwrap();
        assert_eq!(report.per_fold.len(), 5);
        assert!(report.summary.accuracy.mean > 0.4, "{:?}", report.summary.accuracy);
        let x = represent(&data, Representation::Stm, &config.stm).unwrap();
        assert_eq!(x.len(), 100);
        assert_eq!(x[0].len(), config.stm.user_rank);
    }
}
