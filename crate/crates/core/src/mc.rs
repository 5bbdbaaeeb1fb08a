//! Monte Carlo simulation of continuous-time statistics and semi-Markov
//! chains, plus empirical CDFs and Kolmogorov–Smirnov comparison.
//!
//! Every path draws from its own ChaCha8 stream: the key is expanded from
//! the master seed and the stream number is an avalanche hash of the path
//! index. Results therefore do not depend on how paths are spread across
//! worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::renewal::InterEventLaw;
use crate::stats::{JumpLaw, StatisticKind, TransitionMatrix};

/// KS threshold coefficient, roughly the 99% quantile of √n·D.
pub const KS_COEFFICIENT: f64 = 1.63;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationPlan {
    pub kind: StatisticKind,
    pub jump_law: JumpLaw,
    pub ie_law: InterEventLaw,
    pub t: f64,
    pub n_paths: usize,
    pub master_seed: u64,
}

impl SimulationPlan {
    pub fn new(
        kind: StatisticKind,
        jump_law: JumpLaw,
        ie_law: InterEventLaw,
        t: f64,
        n_paths: usize,
        master_seed: u64,
    ) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("time must be non-negative and finite, got {t}"));
        }
        if n_paths == 0 {
            return domain("need at least one path");
        }
        Ok(SimulationPlan {
            kind,
            jump_law,
            ie_law,
            t,
            n_paths,
            master_seed,
        })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Random stream of path `index` under `master_seed`.
pub fn path_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut s = master_seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(splitmix64(index));
    rng
}

/// Runs `f` on a pool of `threads` workers; 0 means one per available core.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numeric(format!("could not start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Simulates the statistic on one path.
pub fn simulate_path<R: Rng + ?Sized>(plan: &SimulationPlan, rng: &mut R) -> f64 {
    let mut n = 0usize;
    let mut epoch = plan.ie_law.sample(rng);
    while epoch <= plan.t {
        n += 1;
        epoch += plan.ie_law.sample(rng);
    }
    let law = plan.jump_law;
    plan.kind.apply((0..n).map(|_| law.sample(rng)))
}

/// Simulates all paths of the plan and returns the values sorted ascending.
pub fn simulate_statistic(plan: &SimulationPlan, threads: usize) -> Result<Vec<f64>> {
    let mut out = with_threads(threads, || {
        (0..plan.n_paths as u64)
            .into_par_iter()
            .map(|i| simulate_path(plan, &mut path_rng(plan.master_seed, i)))
            .collect::<Vec<f64>>()
    })?;
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Fraction of paths in each state at each requested time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyTable {
    pub states: Vec<String>,
    pub times: Vec<f64>,
    /// fractions[state][time]
    pub fractions: Vec<Vec<f64>>,
    pub n_paths: usize,
}

impl OccupancyTable {
    pub fn fraction(&self, state: usize, time: usize) -> f64 {
        self.fractions[state][time]
    }
}

fn next_state<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

fn chain_path<R: Rng + ?Sized>(
    q: &TransitionMatrix,
    start: usize,
    ie_law: &InterEventLaw,
    t_grid: &[f64],
    rng: &mut R,
) -> Vec<usize> {
    let mut state = start;
    let mut epoch = ie_law.sample(rng);
    t_grid
        .iter()
        .map(|&t| {
            while epoch <= t {
                state = next_state(q.row(state), rng);
                epoch += ie_law.sample(rng);
            }
            state
        })
        .collect()
}

/// Simulates the semi-Markov chain Y(t) = Y_{N(t)} started in `start` and
/// records occupancy fractions on `t_grid`.
pub fn simulate_chain(
    q: &TransitionMatrix,
    start: usize,
    ie_law: &InterEventLaw,
    t_grid: &[f64],
    n_paths: usize,
    master_seed: u64,
    threads: usize,
) -> Result<OccupancyTable> {
    if start >= q.len() {
        return domain(format!(
            "start state {start} out of range for {} states",
            q.len()
        ));
    }
    if n_paths == 0 {
        return domain("need at least one path");
    }
    if t_grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite())
        || t_grid.windows(2).any(|w| w[1] < w[0])
    {
        return domain("time grid must be finite, non-negative and non-decreasing");
    }
    let k = q.len();
    let m = t_grid.len();
    let counts = with_threads(threads, || {
        (0..n_paths as u64)
            .into_par_iter()
            .fold(
                || vec![0u64; k * m],
                |mut acc, i| {
                    let states =
                        chain_path(q, start, ie_law, t_grid, &mut path_rng(master_seed, i));
                    for (ti, s) in states.into_iter().enumerate() {
                        acc[s * m + ti] += 1;
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; k * m],
                |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
            )
    })?;
    let fractions = (0..k)
        .map(|s| {
            (0..m)
                .map(|ti| counts[s * m + ti] as f64 / n_paths as f64)
                .collect()
        })
        .collect();
    Ok(OccupancyTable {
        states: q.states().to_vec(),
        times: t_grid.to_vec(),
        fractions,
        n_paths,
    })
}

/// Empirical CDF of a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

pub fn build_ecdf(samples: &[f64]) -> Result<Ecdf> {
    if samples.is_empty() {
        return domain("cannot build an empirical CDF from no samples");
    }
    if samples.iter().any(|x| x.is_nan()) {
        return domain("samples contain NaN");
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Ecdf { sorted })
}

impl Ecdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples ≤ u.
    pub fn eval(&self, u: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= u) as f64 / self.sorted.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub d: f64,
    pub n: usize,
    pub threshold: f64,
    pub pass: bool,
}

/// KS distance with the default threshold 1.63/√n.
pub fn ks_distance(ecdf: &Ecdf, cdf: impl FnMut(f64) -> f64) -> KsReport {
    ks_distance_with_threshold(ecdf, cdf, KS_COEFFICIENT / (ecdf.len() as f64).sqrt())
}

/// Supremum distance between the ECDF and `cdf`. Tied samples are grouped,
/// and on the left of each distinct sample value both functions are taken
/// at their left limits (the CDF at the preceding float), so atoms of the
/// distribution that show up as ties are compared correctly.
pub fn ks_distance_with_threshold(
    ecdf: &Ecdf,
    mut cdf: impl FnMut(f64) -> f64,
    threshold: f64,
) -> KsReport {
    let xs = &ecdf.sorted;
    let n = xs.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let x = xs[i];
        let mut j = i;
        while j < n && xs[j] == x {
            j += 1;
        }
        let below = i as f64 / nf;
        let at = j as f64 / nf;
        d = d
            .max((at - cdf(x)).abs())
            .max((below - cdf(x.next_down())).abs());
        i = j;
    }
    let d = d.min(1.0);
    KsReport {
        d,
        n,
        threshold,
        pass: d < threshold,
    }
}
