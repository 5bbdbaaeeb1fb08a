//! Waiting-time laws, renewal epochs and the counting process N(t).

use std::f64::consts::PI;
use std::fmt;

use rand::distributions::Open01;
use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::laplace::{counting_pmf_symbol, invert, InversionConfig};
use crate::special::{ml_survival, MlOrder};

/// Cap on the number of pmf entries when the truncation is chosen automatically.
pub const MAX_PMF_TERMS: usize = 10_000;

/// Law of the i.i.d. positive inter-event durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum InterEventLaw {
    Exponential {
        rate: f64,
    },
    /// Survival E_α(−t^α). Order 1 coincides with Exponential(1).
    MittagLeffler {
        order: MlOrder,
    },
}

impl fmt::Display for InterEventLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterEventLaw::Exponential { rate } => write!(f, "Exponential({rate})"),
            InterEventLaw::MittagLeffler { order } => write!(f, "MittagLeffler({})", order.alpha()),
        }
    }
}

impl InterEventLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        if rate > 0.0 && rate.is_finite() {
            Ok(InterEventLaw::Exponential { rate })
        } else {
            domain(format!("exponential rate must be positive, got {rate}"))
        }
    }

    pub fn mittag_leffler(alpha: f64) -> Result<Self> {
        Ok(InterEventLaw::MittagLeffler {
            order: MlOrder::new(alpha)?,
        })
    }

    /// P(J > t).
    pub fn survival(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("waiting time must be non-negative, got {t}"));
        }
        match *self {
            InterEventLaw::Exponential { rate } => Ok((-rate * t).exp()),
            InterEventLaw::MittagLeffler { order } => ml_survival(order, t),
        }
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(1.0 - self.survival(t)?)
    }

    /// Maps two independent uniforms on (0, 1) to a waiting time. The
    /// exponential law uses only `u`: J = −ln(u)/λ. The Mittag-Leffler law
    /// uses J = −ln(u) · [sin(απ(1−v)) / sin(απv)]^{1/α}, which equals
    /// −ln(u) · [sin(απ)/tan(απv) − cos(απ)]^{1/α}.
    pub fn waiting_time_from_uniforms(&self, u: f64, v: f64) -> f64 {
        let e = -u.ln();
        match *self {
            InterEventLaw::Exponential { rate } => e / rate,
            InterEventLaw::MittagLeffler { order } if order.is_exponential() => e,
            InterEventLaw::MittagLeffler { order } => {
                let a = order.alpha();
                let ratio = (a * PI * (1.0 - v)).sin() / (a * PI * v).sin();
                e * ratio.powf(1.0 / a)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_waiting_time(self, rng)
    }
}

/// Draws one waiting time.
pub fn sample_waiting_time<R: Rng + ?Sized>(law: &InterEventLaw, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    match law {
        InterEventLaw::Exponential { .. } => law.waiting_time_from_uniforms(u, 0.5),
        InterEventLaw::MittagLeffler { order } if order.is_exponential() => {
            law.waiting_time_from_uniforms(u, 0.5)
        }
        InterEventLaw::MittagLeffler { .. } => {
            let v: f64 = rng.sample(Open01);
            law.waiting_time_from_uniforms(u, v)
        }
    }
}

/// Renewal epochs T_1 < T_2 < … ≤ horizon; T_0 = 0 is implicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochSequence {
    epochs: Vec<f64>,
    horizon: f64,
}

impl EpochSequence {
    /// Partial sums of `waits`, stopping at the first one beyond `horizon`.
    pub fn from_waiting_times<I: IntoIterator<Item = f64>>(waits: I, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return domain(format!(
                "horizon must be positive and finite, got {horizon}"
            ));
        }
        let mut epochs = Vec::new();
        let mut clock = 0.0;
        for w in waits {
            if !(w > 0.0) {
                return domain(format!("waiting times must be positive, got {w}"));
            }
            clock += w;
            if clock > horizon {
                break;
            }
            epochs.push(clock);
        }
        Ok(EpochSequence { epochs, horizon })
    }

    pub fn epochs(&self) -> &[f64] {
        &self.epochs
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// N(t) = max{n : T_n ≤ t}.
    pub fn count_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return domain(format!("time {t} outside [0, {}]", self.horizon));
        }
        Ok(self.epochs.partition_point(|&e| e <= t))
    }
}

/// Simulates the renewal epochs of `law` on (0, horizon].
pub fn generate_epochs<R: Rng + ?Sized>(
    law: &InterEventLaw,
    horizon: f64,
    rng: &mut R,
) -> Result<EpochSequence> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!(
            "horizon must be positive and finite, got {horizon}"
        ));
    }
    let mut epochs = Vec::new();
    let mut clock = 0.0;
    loop {
        clock += sample_waiting_time(law, rng);
        if clock > horizon {
            break;
        }
        epochs.push(clock);
    }
    Ok(EpochSequence { epochs, horizon })
}

/// P(N(t) = n) for n = 0..=truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingPmfTable {
    pub t: f64,
    pub entries: Vec<f64>,
    pub truncation: usize,
    /// Bound on P(N(t) > truncation).
    pub tail_bound: f64,
}

impl CountingPmfTable {
    pub fn mass(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.entries.get(n).copied()
    }
}

pub(crate) fn poisson_pmf(mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln = -mean + n as f64 * mean.ln() - crate::special::gamma::ln_gamma(n as f64 + 1.0);
    ln.exp()
}

/// Tail P(N > n) of a Poisson law via the geometric bound on the ratio of
/// successive terms, valid once n + 2 > mean.
pub(crate) fn poisson_tail_bound(mean: f64, n: usize, mass: f64) -> f64 {
    let next = poisson_pmf(mean, n + 1);
    let ratio = mean / (n as f64 + 2.0);
    if ratio < 1.0 {
        next / (1.0 - ratio)
    } else {
        (1.0 - mass).max(0.0)
    }
}

fn pmf_entry(law: &InterEventLaw, t: f64, n: usize, config: &InversionConfig) -> Result<f64> {
    match *law {
        InterEventLaw::Exponential { rate } => Ok(poisson_pmf(rate * t, n)),
        InterEventLaw::MittagLeffler { .. } => {
            let p = invert(&counting_pmf_symbol(law, n), t, config).map_err(|e| {
                Error::Numeric(format!(
                    "counting pmf inversion failed for (n = {n}, t = {t}): {e}"
                ))
            })?;
            Ok(p.clamp(0.0, 1.0))
        }
    }
}

/// Counting pmf table up to `n_max`. Exponential waits use the Poisson pmf;
/// Mittag-Leffler waits invert survival(s)·density(s)ⁿ numerically
/// (fixed Talbot contour, 32 nodes).
pub fn counting_pmf(law: &InterEventLaw, t: f64, n_max: usize) -> Result<CountingPmfTable> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("counting pmf time must be positive, got {t}"));
    }
    let config = InversionConfig::default();
    let entries = (0..=n_max)
        .map(|n| pmf_entry(law, t, n, &config))
        .collect::<Result<Vec<_>>>()?;
    let mass: f64 = entries.iter().sum();
    let tail_bound = match *law {
        InterEventLaw::Exponential { rate } => poisson_tail_bound(rate * t, n_max, mass),
        InterEventLaw::MittagLeffler { .. } => (1.0 - mass).max(0.0),
    };
    Ok(CountingPmfTable {
        t,
        entries,
        truncation: n_max,
        tail_bound,
    })
}

/// Counting pmf table truncated at the first n where the reported mass
/// reaches 1 − `mass_tol` (at most [`MAX_PMF_TERMS`] entries). t = 0 gives
/// the point mass at zero.
pub fn counting_pmf_to_mass(
    law: &InterEventLaw,
    t: f64,
    mass_tol: f64,
) -> Result<CountingPmfTable> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("counting pmf time must be non-negative, got {t}"));
    }
    if t == 0.0 {
        return Ok(CountingPmfTable {
            t,
            entries: vec![1.0],
            truncation: 0,
            tail_bound: 0.0,
        });
    }
    let config = InversionConfig::default();
    let mut entries = Vec::new();
    let mut mass = 0.0;
    for n in 0..MAX_PMF_TERMS {
        let p = pmf_entry(law, t, n, &config)?;
        entries.push(p);
        mass += p;
        let tail = match *law {
            InterEventLaw::Exponential { rate } => poisson_tail_bound(rate * t, n, mass),
            InterEventLaw::MittagLeffler { .. } => (1.0 - mass).max(0.0),
        };
        if tail <= mass_tol {
            return Ok(CountingPmfTable {
                t,
                truncation: n,
                entries,
                tail_bound: tail,
            });
        }
    }
    let truncation = entries.len() - 1;
    Ok(CountingPmfTable {
        t,
        truncation,
        entries,
        tail_bound: (1.0 - mass).max(0.0),
    })
}
