//! Two-state burst detection over inter-event gaps.
//!
//! Gaps follow an exponential density with rate `alpha0` in the normal state
//! and `alpha1 = s * alpha0` in the burst state. A state sequence is scored by
//! the negative log-likelihood of the gaps plus `gamma * ln n` for every state
//! change; [`min_cost_states`] finds a global minimum by dynamic programming.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BurstState {
    Normal,
    Burst,
}

impl BurstState {
    fn index(self) -> usize {
        match self {
            BurstState::Normal => 0,
            BurstState::Burst => 1,
        }
    }

    fn from_index(i: usize) -> Self {
        if i == 0 {
            BurstState::Normal
        } else {
            BurstState::Burst
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstConfig {
    /// Ratio alpha1 / alpha0.
    pub scale: f64,
    pub gamma: f64,
    /// Also feed check-ins and RSVPs to the detector.
    pub include_offline: bool,
}

impl Default for BurstConfig {
    fn default() -> Self {
        BurstConfig {
            scale: 2.0,
            gamma: 1.0,
            include_offline: false,
        }
    }
}

/// Positive gaps between consecutive events.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSequence {
    gaps: Vec<f64>,
    mean_gap: f64,
}

impl GapSequence {
    pub fn new(gaps: Vec<f64>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::NoGaps);
        }
        if let Some(bad) = gaps.iter().find(|&&g| !(g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidArgument(format!("gap {bad} is not positive")));
        }
        let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        Ok(GapSequence { gaps, mean_gap })
    }

    /// Gaps of sorted timestamps; simultaneous events are clamped to 1 s apart.
    pub fn from_timestamps(timestamps: &[i64]) -> Result<Self> {
        let gaps = timestamps
            .windows(2)
            .map(|w| ((w[1] - w[0]).max(1)) as f64)
            .collect();
        Self::new(gaps)
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn mean_gap(&self) -> f64 {
        self.mean_gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstModel {
    pub alpha0: f64,
    pub alpha1: f64,
    pub gamma: f64,
    pub n: usize,
}

impl BurstModel {
    /// Cost of emitting gap `x` from `state`: -ln(alpha e^{-alpha x}).
    pub fn emission_cost(&self, state: BurstState, x: f64) -> f64 {
        let alpha = match state {
            BurstState::Normal => self.alpha0,
            BurstState::Burst => self.alpha1,
        };
        -alpha.ln() + alpha * x
    }

    pub fn transition_cost(&self) -> f64 {
        self.gamma * (self.n as f64).ln()
    }

    /// Evaluates the full cost of a state sequence against the gaps.
    pub fn cost(&self, gaps: &GapSequence, states: &[BurstState]) -> f64 {
        assert_eq!(gaps.len(), states.len(), "state sequence length mismatch");
        let tau = self.transition_cost();
        let switches = states.windows(2).filter(|w| w[0] != w[1]).count();
        let emissions: f64 = gaps
            .gaps()
            .iter()
            .zip(states)
            .map(|(&x, &q)| self.emission_cost(q, x))
            .sum();
        switches as f64 * tau + emissions
    }
}

pub fn fit_model(gaps: &GapSequence, scale: f64, gamma: f64) -> Result<BurstModel> {
    if gaps.is_empty() {
        return Err(Error::NoGaps);
    }
    if !(scale > 1.0) {
        return Err(Error::InvalidArgument(format!("scale {scale} must exceed 1")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} must be positive")));
    }
    let alpha0 = 1.0 / gaps.mean_gap();
    Ok(BurstModel {
        alpha0,
        alpha1: scale * alpha0,
        gamma,
        n: gaps.len(),
    })
}

/// Minimum-cost state sequence (Viterbi over two states). Ties go to the
/// normal state.
pub fn min_cost_states(gaps: &GapSequence, model: &BurstModel) -> (Vec<BurstState>, f64) {
    let n = gaps.len();
    let tau = model.transition_cost();
    let states = [BurstState::Normal, BurstState::Burst];
    let mut back = vec![[0usize; 2]; n];
    let x0 = gaps.gaps()[0];
    let mut cost = [
        model.emission_cost(BurstState::Normal, x0),
        model.emission_cost(BurstState::Burst, x0),
    ];
    for t in 1..n {
        let x = gaps.gaps()[t];
        let mut next = [0.0; 2];
        for &s in &states {
            let j = s.index();
            let stay = cost[j];
            let switch = cost[1 - j] + tau;
            // prefer the normal predecessor on ties
            let (prev, best) = if j == 0 {
                if stay <= switch { (0, stay) } else { (1, switch) }
            } else if switch <= stay {
                (0, switch)
            } else {
                (1, stay)
            };
            back[t][j] = prev;
            next[j] = best + model.emission_cost(s, x);
        }
        cost = next;
    }
    let mut last = if cost[0] <= cost[1] { 0 } else { 1 };
    let total = cost[last];
    let mut seq = vec![BurstState::Normal; n];
    for t in (0..n).rev() {
        seq[t] = BurstState::from_index(last);
        last = back[t][last];
    }
    (seq, total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    /// First gap index of the run.
    pub start_index: usize,
    /// Last gap index of the run (inclusive).
    pub end_index: usize,
    /// Events inside the burst.
    pub intensity: usize,
    /// Seconds from the first to the last event of the burst.
    pub length: f64,
}

/// Average, median, population standard deviation, maximum and minimum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub max: f64,
    pub min: f64,
}

impl SummaryStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Some(SummaryStats {
            mean,
            median,
            sd: var.sqrt(),
            max: sorted[sorted.len() - 1],
            min: sorted[0],
        })
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.mean, self.median, self.sd, self.max, self.min]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BurstReport {
    pub states: Vec<BurstState>,
    pub bursts: Vec<Burst>,
    /// Intensity statistics; all zero when there are no bursts.
    pub intensity: SummaryStats,
    /// Length statistics; all zero when there are no bursts.
    pub length: SummaryStats,
    pub has_bursts: bool,
}

impl BurstReport {
    /// Intensity stats followed by length stats.
    pub fn stats_vector(&self) -> [f64; 10] {
        let mut out = [0.0; 10];
        out[..5].copy_from_slice(&self.intensity.to_array());
        out[5..].copy_from_slice(&self.length.to_array());
        out
    }
}

/// Converts maximal burst runs over gaps into bursts over the event timeline.
pub fn summarize_bursts(timestamps: &[i64], states: &[BurstState]) -> BurstReport {
    assert_eq!(
        states.len() + 1,
        timestamps.len(),
        "need one state per gap between events"
    );
    let mut bursts = Vec::new();
    let mut t = 0;
    while t < states.len() {
        if states[t] != BurstState::Burst {
            t += 1;
            continue;
        }
        let start = t;
        while t + 1 < states.len() && states[t + 1] == BurstState::Burst {
            t += 1;
        }
        bursts.push(Burst {
            start_index: start,
            end_index: t,
            intensity: t - start + 2,
            length: (timestamps[t + 1] - timestamps[start]) as f64,
        });
        t += 1;
    }
    let intensities: Vec<f64> = bursts.iter().map(|b| b.intensity as f64).collect();
    let lengths: Vec<f64> = bursts.iter().map(|b| b.length).collect();
    BurstReport {
        states: states.to_vec(),
        has_bursts: !bursts.is_empty(),
        intensity: SummaryStats::of(&intensities).unwrap_or_default(),
        length: SummaryStats::of(&lengths).unwrap_or_default(),
        bursts,
    }
}

/// Runs the detector on one sorted timestamp stream. Streams with fewer than
/// three events yield `None`.
pub fn detect(timestamps: &[i64], config: &BurstConfig) -> Result<Option<BurstReport>> {
    if timestamps.len() < 3 {
        return Ok(None);
    }
    let gaps = GapSequence::from_timestamps(timestamps)?;
    let model = fit_model(&gaps, config.scale, config.gamma)?;
    let (states, _) = min_cost_states(&gaps, &model);
    Ok(Some(summarize_bursts(timestamps, &states)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Exhaustive minimum over all 2^n state sequences.
    fn exhaustive_min(gaps: &GapSequence, model: &BurstModel) -> f64 {
        let n = gaps.len();
        (0u32..(1 << n))
            .map(|mask| {
                let seq: Vec<BurstState> = (0..n)
                    .map(|t| BurstState::from_index(((mask >> t) & 1) as usize))
                    .collect();
                model.cost(gaps, &seq)
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn random_gaps(rng: &mut impl Rng, n: usize) -> GapSequence {
        GapSequence::new(
            (0..n)
                .map(|_| {
                    let base: f64 = rng.random_range(0.01..1.0);
                    if rng.random_bool(0.3) { base * 0.05 } else { base * 10.0 }
                })
                .collect(),
        )
        .unwrap()
    }

    fn transitions(states: &[BurstState]) -> usize {
        states.windows(2).filter(|w| w[0] != w[1]).count()
    }

    #[test]
    fn fit_constant_gaps() {
        let m = fit_model(&GapSequence::new(vec![2.0; 5]).unwrap(), 2.0, 1.0).unwrap();
        assert_eq!((m.alpha0, m.alpha1), (0.5, 1.0));
        let m = fit_model(&GapSequence::new(vec![1.0, 3.0]).unwrap(), 2.0, 1.0).unwrap();
        assert_eq!((m.alpha0, m.alpha1), (0.5, 1.0));
        let m = fit_model(&GapSequence::new(vec![0.3, 7.0, 1.1]).unwrap(), 1.5, 1.0).unwrap();
        assert!((m.alpha1 / m.alpha0 - 1.5).abs() < 1e-15);
    }

    #[test]
    fn empty_gaps_rejected() {
        assert!(matches!(GapSequence::new(vec![]), Err(Error::NoGaps)));
        assert!(matches!(GapSequence::from_timestamps(&[5]), Err(Error::NoGaps)));
    }

    #[test]
    fn simultaneous_events_clamped() {
        let g = GapSequence::from_timestamps(&[10, 10, 15]).unwrap();
        assert_eq!(g.gaps(), &[1.0, 5.0]);
    }

    #[test]
    fn constant_gaps_stay_normal() {
        let gaps = GapSequence::new(vec![4.0; 30]).unwrap();
        let m = fit_model(&gaps, 2.0, 1.0).unwrap();
        let (q, cost) = min_cost_states(&gaps, &m);
        assert!(q.iter().all(|&s| s == BurstState::Normal));
        assert!((cost - m.cost(&gaps, &q)).abs() < 1e-12);
    }

    #[test]
    fn dp_matches_exhaustive_on_seeded_sequences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let gaps = random_gaps(&mut rng, n);
            let gamma = rng.random_range(0.1..2.0);
            let m = fit_model(&gaps, 2.0, gamma).unwrap();
            let (q, cost) = min_cost_states(&gaps, &m);
            let brute = exhaustive_min(&gaps, &m);
            assert!((cost - brute).abs() <= 1e-9 * brute.abs().max(1.0));
            assert!((m.cost(&gaps, &q) - cost).abs() <= 1e-9 * cost.abs().max(1.0));
        }
    }

    fn tiny_run_gaps(flank_left: usize, tiny: usize, flank_right: usize) -> GapSequence {
        // tiny gaps are 0.01 of the overall mean: solve t = 0.01 * (L*big + tiny*t)/n with big = 1
        let n = (flank_left + tiny + flank_right) as f64;
        let big = (flank_left + flank_right) as f64;
        let t = 0.01 * big / (n - 0.01 * tiny as f64);
        let mut g = vec![1.0; flank_left];
        g.extend(std::iter::repeat_n(t, tiny));
        g.extend(std::iter::repeat_n(1.0, flank_right));
        let seq = GapSequence::new(g).unwrap();
        assert!((seq.gaps()[flank_left] - 0.01 * seq.mean_gap()).abs() < 1e-12);
        seq
    }

    #[test]
    fn tiny_gap_run_is_one_burst() {
        for (l, r) in [(5, 5), (1, 1)] {
            let gaps = tiny_run_gaps(l, 10, r);
            let m = fit_model(&gaps, 2.0, 1.0).unwrap();
            let (q, cost) = min_cost_states(&gaps, &m);
            if gaps.len() <= 12 {
                assert!((cost - exhaustive_min(&gaps, &m)).abs() < 1e-9);
            }
            let expected: Vec<BurstState> = (0..gaps.len())
                .map(|t| if t >= l && t < l + 10 { BurstState::Burst } else { BurstState::Normal })
                .collect();
            assert_eq!(q, expected);
        }
    }

    #[test]
    fn summary_of_all_normal_is_absent() {
        let r = summarize_bursts(&[0, 10, 20, 30], &[BurstState::Normal; 3]);
        assert!(!r.has_bursts);
        assert!(r.bursts.is_empty());
        assert_eq!(r.stats_vector(), [0.0; 10]);
    }

    #[test]
    fn one_burst_counts_events_and_seconds() {
        let ts: Vec<i64> = (0..9).collect();
        let mut q = vec![BurstState::Normal; 8];
        for s in &mut q[3..=5] {
            *s = BurstState::Burst;
        }
        let r = summarize_bursts(&ts, &q);
        assert_eq!(r.bursts.len(), 1);
        assert_eq!(r.bursts[0].intensity, 4);
        assert_eq!(r.bursts[0].length, 3.0);
    }

    #[test]
    fn two_burst_stats_match_hand_arithmetic() {
        let ts = vec![0, 100, 102, 105, 300, 500, 501, 503, 510, 520, 900];
        let mut q = vec![BurstState::Normal; 10];
        for t in [1, 2, 5, 6, 7, 8] {
            q[t] = BurstState::Burst;
        }
        let r = summarize_bursts(&ts, &q);
        // A: events 1..=3 -> intensity 3, length 105-100 = 5
        // B: events 5..=9 -> intensity 5, length 520-500 = 20
        assert_eq!(r.bursts.len(), 2);
        let i = r.intensity;
        assert_eq!((i.mean, i.median, i.sd, i.max, i.min), (4.0, 4.0, 1.0, 5.0, 3.0));
        let l = r.length;
        assert_eq!((l.mean, l.median, l.sd, l.max, l.min), (12.5, 12.5, 7.5, 20.0, 5.0));
    }

    #[test]
    fn short_streams_are_absent() {
        assert!(detect(&[1, 2], &BurstConfig::default()).unwrap().is_none());
        assert!(detect(&[], &BurstConfig::default()).unwrap().is_none());
    }

    #[test]
    fn gamma_monotone_on_seeded_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let gaps = random_gaps(&mut rng, 40);
            let mut prev = usize::MAX;
            for gamma in [0.05, 0.2, 0.5, 1.0, 2.0, 4.0] {
                let m = fit_model(&gaps, 2.0, gamma).unwrap();
                let (q, _) = min_cost_states(&gaps, &m);
                let k = transitions(&q);
                assert!(k <= prev, "gamma {gamma}: {k} > {prev}");
                prev = k;
            }
        }
    }

    proptest! {
        #[test]
        fn dp_is_optimal(gaps in prop::collection::vec(0.001f64..50.0, 1..=12), gamma in 0.05f64..3.0) {
            let gaps = GapSequence::new(gaps).unwrap();
            let m = fit_model(&gaps, 2.0, gamma).unwrap();
            let (q, cost) = min_cost_states(&gaps, &m);
            let brute = exhaustive_min(&gaps, &m);
            prop_assert!((cost - brute).abs() <= 1e-9 * brute.abs().max(1.0));
            prop_assert!((m.cost(&gaps, &q) - cost).abs() <= 1e-9 * cost.abs().max(1.0));
        }

        #[test]
        fn scale_covariance(seed in any::<u64>(), k in prop::sample::select(vec![0.25f64, 0.5, 2.0, 4.0, 8.0])) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let gaps = random_gaps(&mut rng, 25);
            let scaled = GapSequence::new(gaps.gaps().iter().map(|g| g * k).collect()).unwrap();
            let (q1, _) = min_cost_states(&gaps, &fit_model(&gaps, 2.0, 1.0).unwrap());
            let (q2, _) = min_cost_states(&scaled, &fit_model(&scaled, 2.0, 1.0).unwrap());
            prop_assert_eq!(q1, q2);
        }
    }
}
