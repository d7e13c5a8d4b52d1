use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

/// Parameters of the alternating quiet/burst process, in seconds.
#[derive(Debug, Clone, Copy)]
pub struct BurstyParams {
    pub quiet_rate: f64,
    pub burst_rate: f64,
    pub quiet_mean: f64,
    pub burst_mean: f64,
    pub growth: f64,
    pub relapse_gap: f64,
    pub relapse_multiplier: f64,
}

/// Event times of a homogeneous Poisson process with `rate` per second on
/// `[start, end)`, sorted, in whole seconds.
pub fn poisson_times(rng: &mut ChaCha8Rng, start: i64, end: i64, rate: f64) -> Vec<i64> {
    let span = (end - start) as f64;
    let mean = rate * span;
    if mean <= 0.0 || span <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut times: Vec<i64> = (0..n).map(|_| rng.random_range(start..end)).collect();
    times.sort_unstable();
    times
}

fn segment(rng: &mut ChaCha8Rng, from: f64, to: f64, rate: f64, out: &mut Vec<i64>) {
    if rate <= 0.0 || to <= from {
        return;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = from + exp.sample(rng);
    while t < to {
        out.push(t as i64);
        t += exp.sample(rng);
    }
}

/// Event times of the alternating renewal process on `[start, end)`.
///
/// Quiet spells have exponential lengths with mean `quiet_mean`; bursts have
/// exponential lengths whose mean grows linearly from `burst_mean` to
/// `burst_mean (1 + growth)` across the window and is multiplied by
/// `relapse_multiplier` after a quiet spell longer than `relapse_gap`.
pub fn bursty_times(rng: &mut ChaCha8Rng, start: i64, end: i64, p: &BurstyParams) -> Vec<i64> {
    let (start_f, end_f) = (start as f64, end as f64);
    let span = end_f - start_f;
    let mut out = Vec::new();
    if span <= 0.0 {
        return out;
    }
    let quiet = Exp::new(1.0 / p.quiet_mean).expect("positive quiet mean");
    let unit = Exp::new(1.0).expect("unit rate");
    let mut t = start_f;
    loop {
        let q = quiet.sample(rng);
        segment(rng, t, (t + q).min(end_f), p.quiet_rate, &mut out);
        t += q;
        if t >= end_f {
            break;
        }
        let progress = (t - start_f) / span;
        let mut mean = p.burst_mean * (1.0 + p.growth * progress);
        if q > p.relapse_gap {
            mean *= p.relapse_multiplier;
        }
        let b = mean * unit.sample(rng);
        segment(rng, t, (t + b).min(end_f), p.burst_rate, &mut out);
        t += b;
        if t >= end_f {
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn poisson_count_matches_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = poisson_times(&mut rng, 0, 1_000_000, 0.001);
        assert!((t.len() as f64 - 1000.0).abs() < 4.0 * 1000f64.sqrt());
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.iter().all(|&x| (0..1_000_000).contains(&x)));
    }

    #[test]
    fn bursty_times_sorted_in_window() {
        let p = BurstyParams {
            quiet_rate: 3.0 / 86_400.0,
            burst_rate: 24.0 / 3_600.0,
            quiet_mean: 20.0 * 3_600.0,
            burst_mean: 35.0 * 60.0,
            growth: 1.5,
            relapse_gap: 30.0 * 3_600.0,
            relapse_multiplier: 2.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = bursty_times(&mut rng, 100, 100 + 14 * 86_400, &p);
        assert!(t.len() > 50);
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.iter().all(|&x| (100..100 + 14 * 86_400).contains(&x)));
    }

    #[test]
    fn zero_rate_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(poisson_times(&mut rng, 0, 100, 0.0).is_empty());
    }
}
