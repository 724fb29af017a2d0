//! Monte Carlo experiments over random key sets.
//!
//! Every trial is reproducible from `(base seed, trial index)`: the trial
//! seed drives both the hash seed and the key draw. Trials run in parallel and
//! are merged in index order, so tables do not depend on the thread count.
//! The same trial seeds are reused at every load of a sweep; keys are drawn
//! sequentially, so the key set at a lower load is a prefix of the one at a
//! higher load.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use setsketch::oracle::count_native_anomalies_mc;
use setsketch::sampling::{random_keys, trial_seed};
use setsketch::{DecodeLimits, HashParams, Sketch64, StepCounter};

/// Key width used by all experiments.
pub const KEY_BITS: u32 = 64;
/// Largest `n` for which native anomalies are enumerated exhaustively.
pub const ORACLE_MAX_BUCKETS: usize = 64;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("threshold bracket is not monotone: load {load} {}", if *.succeeded { "succeeded" } else { "failed" })]
    NonMonotoneBracket { load: f64, succeeded: bool },
    #[error(transparent)]
    Sketch(#[from] setsketch::Error),
}

/// Result of decoding one random instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub success: bool,
    /// Success and the decoded set equals the stored set.
    pub exact: bool,
    pub rounds: usize,
    pub steps: usize,
    pub anomalous_steps: usize,
}

/// Random instance of trial `index`: hash parameters and `m` stored keys.
pub fn trial_instance(
    k: usize,
    n: usize,
    m: usize,
    guard_bits: u32,
    base_seed: u64,
    index: u64,
) -> Result<(HashParams, Vec<u64>), ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(base_seed, index));
    let params = HashParams::new(KEY_BITS, k, n, rng.gen(), guard_bits)?;
    Ok((params, random_keys(&mut rng, m, KEY_BITS)))
}

pub fn run_trial(
    k: usize,
    n: usize,
    m: usize,
    guard_bits: u32,
    base_seed: u64,
    index: u64,
) -> Result<Trial, ExperimentError> {
    let (params, keys) = trial_instance(k, n, m, guard_bits, base_seed, index)?;
    let stored: HashSet<u64> = keys.iter().copied().collect();
    let mut sketch = Sketch64::from_set(params, keys)?;
    let mut counter = StepCounter::new(&stored);
    let out = sketch.decode_observed(DecodeLimits::default(), &mut counter);
    let exact = out.is_success()
        && out.keys.len() == stored.len()
        && out.keys.iter().all(|k| stored.contains(k));
    Ok(Trial {
        success: out.is_success(),
        exact,
        rounds: out.rounds_used,
        steps: out.steps,
        anomalous_steps: counter.anomalous,
    })
}

/// Runs trials `0..trials` in parallel, in index order.
pub fn run_trials(
    k: usize,
    n: usize,
    m: usize,
    guard_bits: u32,
    base_seed: u64,
    trials: usize,
) -> Result<Vec<Trial>, ExperimentError> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(k, n, m, guard_bits, base_seed, t))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub k: usize,
    pub n: usize,
    /// Loads `c = m / n`, each in `(0, 1]`.
    pub loads: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub guard_bits: u32,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::InvalidSpec(
                "trials must be at least 1".into(),
            ));
        }
        if let Some(c) = self.loads.iter().find(|&&c| !(c > 0.0 && c <= 1.0)) {
            return Err(ExperimentError::InvalidSpec(format!(
                "load {c} not in (0, 1]"
            )));
        }
        HashParams::new(KEY_BITS, self.k, self.n, 0, self.guard_bits)?;
        Ok(())
    }
}

/// Stored-key count for load `c`: `round(c * n)`.
pub fn keys_for_load(c: f64, n: usize) -> usize {
    (c * n as f64).round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub load: f64,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub exact: usize,
    pub success_rate: f64,
    pub mean_rounds: f64,
    pub mean_steps: f64,
    pub mean_anomalous_steps: f64,
}

fn summarize(load: f64, m: usize, trials: &[Trial]) -> SweepRow {
    let t = trials.len() as f64;
    let successes = trials.iter().filter(|r| r.success).count();
    SweepRow {
        load,
        m,
        trials: trials.len(),
        successes,
        exact: trials.iter().filter(|r| r.exact).count(),
        success_rate: successes as f64 / t,
        mean_rounds: trials.iter().map(|r| r.rounds as f64).sum::<f64>() / t,
        mean_steps: trials.iter().map(|r| r.steps as f64).sum::<f64>() / t,
        mean_anomalous_steps: trials.iter().map(|r| r.anomalous_steps as f64).sum::<f64>() / t,
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, ExperimentError> {
    spec.validate()?;
    spec.loads
        .iter()
        .map(|&c| {
            let m = keys_for_load(c, spec.n);
            let trials = run_trials(
                spec.k,
                spec.n,
                m,
                spec.guard_bits,
                spec.base_seed,
                spec.trials,
            )?;
            Ok(summarize(c, m, &trials))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub load: f64,
    pub successes: usize,
    pub trials: usize,
}

impl Probe {
    pub fn majority_success(&self) -> bool {
        2 * self.successes > self.trials
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub k: usize,
    pub n: usize,
    pub estimate: f64,
    pub half_width: f64,
    pub trials_consumed: usize,
    #[serde(skip)]
    pub probes: Vec<Probe>,
}

/// Lower and upper ends of the bisection bracket.
pub const THRESHOLD_BRACKET: (f64, f64) = (0.5, 1.0);

/// Bisects the load between 0.5 and 1.0, calling each probe by majority
/// success over `trials_per_probe` trials, until the bracket is at most
/// `tolerance` wide.
pub fn estimate_threshold(
    k: usize,
    n: usize,
    trials_per_probe: usize,
    tolerance: f64,
    base_seed: u64,
) -> Result<ThresholdEstimate, ExperimentError> {
    if tolerance.is_nan() || tolerance < 1.0 / n as f64 {
        return Err(ExperimentError::InvalidSpec(format!(
            "tolerance {tolerance} below 1/n"
        )));
    }
    if trials_per_probe == 0 {
        return Err(ExperimentError::InvalidSpec(
            "trials per probe must be at least 1".into(),
        ));
    }
    let mut probes = Vec::new();
    let mut probe = |c: f64| -> Result<bool, ExperimentError> {
        let trials = run_trials(k, n, keys_for_load(c, n), 32, base_seed, trials_per_probe)?;
        let p = Probe {
            load: c,
            successes: trials.iter().filter(|t| t.success).count(),
            trials: trials_per_probe,
        };
        let ok = p.majority_success();
        probes.push(p);
        Ok(ok)
    };

    let (mut lo, mut hi) = THRESHOLD_BRACKET;
    if !probe(lo)? {
        return Err(ExperimentError::NonMonotoneBracket {
            load: lo,
            succeeded: false,
        });
    }
    if probe(hi)? {
        return Err(ExperimentError::NonMonotoneBracket {
            load: hi,
            succeeded: true,
        });
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdEstimate {
        k,
        n,
        estimate: 0.5 * (lo + hi),
        half_width: 0.5 * (hi - lo),
        trials_consumed: probes.len() * trials_per_probe,
        probes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub n: usize,
    pub m: usize,
    pub median_secs: f64,
    pub ns_per_bucket: f64,
    /// `time(n) / time(previous n)`.
    pub ratio_to_prev: Option<f64>,
    pub successes: usize,
}

/// Median-of-`repeats` decode time for each `n` at load `c`. Sketch
/// construction is excluded from the timing.
pub fn time_decode(
    k: usize,
    c: f64,
    ns: &[usize],
    repeats: usize,
    base_seed: u64,
) -> Result<Vec<TimingRow>, ExperimentError> {
    if repeats == 0 {
        return Err(ExperimentError::InvalidSpec(
            "repeats must be at least 1".into(),
        ));
    }
    let mut rows: Vec<TimingRow> = Vec::with_capacity(ns.len());
    for (idx, &n) in ns.iter().enumerate() {
        let m = keys_for_load(c, n);
        let (params, keys) = trial_instance(k, n, m, 32, base_seed, idx as u64)?;
        let sketch = Sketch64::from_set(params, keys)?;
        let mut times = Vec::with_capacity(repeats);
        let mut successes = 0;
        // One untimed pass warms caches and the allocator.
        let _ = sketch.decode_copy(DecodeLimits::default());
        for _ in 0..repeats {
            let mut copy = sketch.clone();
            let start = Instant::now();
            let out = copy.decode(DecodeLimits::default());
            times.push(start.elapsed().as_secs_f64());
            successes += usize::from(out.is_success());
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let ratio_to_prev = rows.last().map(|prev| median / prev.median_secs);
        rows.push(TimingRow {
            n,
            m,
            median_secs: median,
            ns_per_bucket: median * 1e9 / n as f64,
            ratio_to_prev,
            successes,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyStats {
    pub n: usize,
    pub load: f64,
    pub k: usize,
    pub trials: usize,
    /// Native-anomaly counts; only computed when `n <= ORACLE_MAX_BUCKETS`.
    pub native_mean: Option<f64>,
    pub native_sd: Option<f64>,
    pub native_max: Option<usize>,
    /// `k * e^(c k)`, the expectation bound on the native-anomaly count.
    pub native_bound: f64,
    pub mean_anomalous_steps: f64,
    pub max_anomalous_steps: usize,
}

pub fn anomaly_stats(
    n: usize,
    c: f64,
    k: usize,
    trials: usize,
    base_seed: u64,
) -> Result<AnomalyStats, ExperimentError> {
    if trials == 0 {
        return Err(ExperimentError::InvalidSpec(
            "trials must be at least 1".into(),
        ));
    }
    let m = keys_for_load(c, n);
    let (native_mean, native_sd, native_max) = if n <= ORACLE_MAX_BUCKETS {
        let counts = count_native_anomalies_mc(n, m, k, trials, base_seed)?;
        let t = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / t;
        let var = if counts.len() > 1 {
            counts
                .iter()
                .map(|&x| (x as f64 - mean).powi(2))
                .sum::<f64>()
                / (t - 1.0)
        } else {
            0.0
        };
        (Some(mean), Some(var.sqrt()), counts.iter().copied().max())
    } else {
        (None, None, None)
    };
    let decoded = run_trials(k, n, m, 32, base_seed, trials)?;
    Ok(AnomalyStats {
        n,
        load: c,
        k,
        trials,
        native_mean,
        native_sd,
        native_max,
        native_bound: k as f64 * (c * k as f64).exp(),
        mean_anomalous_steps: decoded
            .iter()
            .map(|t| t.anomalous_steps as f64)
            .sum::<f64>()
            / trials as f64,
        max_anomalous_steps: decoded.iter().map(|t| t.anomalous_steps).max().unwrap_or(0),
    })
}
