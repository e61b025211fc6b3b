use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::distributions::{Cdf, ExponentialService, Preparation};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 10_000;
pub const DEFAULT_SHARDS: usize = 4;
/// Environment variable capping the number of simulation shards.
pub const THREADS_ENV: &str = "LINDLEY_ALT_THREADS";

/// `min(requested, $LINDLEY_ALT_THREADS)`, at least one.
pub fn shard_count(requested: usize) -> usize {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(usize::MAX);
    requested.min(cap).max(1)
}

/// Step function of a sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        assert!(!samples.is_empty(), "empirical CDF of an empty sample");
        samples.sort_by(f64::total_cmp);
        Self { sorted: samples }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

impl Cdf for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    fn atom(&self) -> f64 {
        self.cdf(0.0) - self.sorted.partition_point(|&v| v < 0.0) as f64 / self.sorted.len() as f64
    }
}

/// Kolmogorov–Smirnov statistic `sup |F_N − F|`. Ties (the atom at zero in
/// particular) are compared against both one-sided limits of `reference`.
pub fn ks_distance(empirical: &EmpiricalCdf, reference: &dyn Cdf) -> f64 {
    let sample = &empirical.sorted;
    let n = sample.len() as f64;
    let mut worst = 0.0_f64;
    let mut i = 0;
    while i < sample.len() {
        let v = sample[i];
        let mut j = i + 1;
        while j < sample.len() && sample[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        worst = worst
            .max((below - reference.cdf_left(v)).abs())
            .max((at - reference.cdf(v)).abs());
        i = j;
    }
    worst
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub empirical: EmpiricalCdf,
    /// Fraction of recorded waits that are exactly zero.
    pub pi0_hat: f64,
    pub samples: usize,
    pub warmup: usize,
    pub seed: u64,
    pub shards: usize,
}

impl Simulation {
    pub fn summary(&self, ks: f64) -> SimulationSummary {
        SimulationSummary {
            n: self.samples,
            warmup: self.warmup,
            seed: self.seed,
            pi0_hat: self.pi0_hat,
            ks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub n: usize,
    pub warmup: usize,
    pub seed: u64,
    pub pi0_hat: f64,
    pub ks: f64,
}

/// Runs `W ← max(0, B − A − W)` in `shards` independent streams, each
/// starting from `W = 0` and discarding its first `warmup` steps, and pools
/// the `samples` recorded waits. Stream `s` is ChaCha8 seeded with `seed` on
/// stream number `s`, so output depends only on `(seed, shards)`.
pub fn simulate(
    prep: &Preparation,
    svc: ExponentialService,
    samples: usize,
    warmup: usize,
    seed: u64,
    shards: usize,
) -> Result<Simulation> {
    if samples < MIN_SAMPLES {
        return Err(Error::Domain(format!("{samples} samples, at least {MIN_SAMPLES} required")));
    }
    if shards == 0 {
        return Err(Error::Domain("shard count must be positive".into()));
    }
    let mu = svc.rate();
    let per_shard = |s: usize| samples / shards + usize::from(s < samples % shards);
    let run = |s: usize| {
        let count = per_shard(s);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let mut w = 0.0_f64;
        let mut out = Vec::with_capacity(count);
        for step in 0..warmup + count {
            let b = prep.sample(&mut rng);
            let a = -(1.0 - rng.random::<f64>()).ln() / mu;
            w = (b - a - w).max(0.0);
            if step >= warmup {
                out.push(w);
            }
        }
        out
    };
    // A single shard runs inline, so targets without threads still work.
    let pooled: Vec<Vec<f64>> = if shards == 1 {
        vec![run(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..shards).map(|s| scope.spawn(move || run(s))).collect();
            handles.into_iter().map(|h| h.join().expect("simulation shard panicked")).collect()
        })
    };
    let all: Vec<f64> = pooled.into_iter().flatten().collect();
    let zeros = all.iter().filter(|&&w| w == 0.0).count();
    Ok(Simulation {
        pi0_hat: zeros as f64 / all.len() as f64,
        empirical: EmpiricalCdf::from_samples(all),
        samples,
        warmup,
        seed,
        shards,
    })
}
