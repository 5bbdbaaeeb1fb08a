//! Convolution-type statistics of a renewal-counted number of i.i.d.
//! positive variables: the sum and the maximum.
//!
//! For a statistic S_n = G_n(X_1, …, X_n) and an independent counting
//! process N(t), the continuous-time statistic S(t) = S_{N(t)} has CDF
//!
//! ```text
//! F_{S(t)}(u) = Σ_n F_{S_n}(u) · P(N(t) = n)
//! ```
//!
//! The sum's transform operator is the Laplace–Stieltjes transform
//! ∫ e^{−wu} dF(u); the maximum's is the identity (the CDF itself). In both
//! cases the n-fold statistic's transform is the n-th power of the
//! one-variable transform.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::distributions::Open01;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::renewal::{counting_pmf_to_mass, poisson_pmf, poisson_tail_bound, InterEventLaw};
use crate::special::{ml_one_param, MlOrder};

/// Distribution of the positive jumps (or observations) X_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum JumpLaw {
    Exponential {
        rate: f64,
    },
    /// Uniform on (0, b).
    Uniform {
        b: f64,
    },
    /// P(X > x) = (scale / x)^exponent for x ≥ scale.
    Pareto {
        scale: f64,
        exponent: f64,
    },
    /// Point mass at c.
    Degenerate {
        c: f64,
    },
}

impl fmt::Display for JumpLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpLaw::Exponential { rate } => write!(f, "Exponential({rate})"),
            JumpLaw::Uniform { b } => write!(f, "Uniform(0, {b})"),
            JumpLaw::Pareto { scale, exponent } => write!(f, "Pareto({scale}, {exponent})"),
            JumpLaw::Degenerate { c } => write!(f, "Degenerate({c})"),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        domain(format!("{name} must be positive and finite, got {x}"))
    }
}

impl JumpLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(JumpLaw::Exponential {
            rate: positive("rate", rate)?,
        })
    }

    pub fn uniform(b: f64) -> Result<Self> {
        Ok(JumpLaw::Uniform {
            b: positive("upper bound", b)?,
        })
    }

    pub fn pareto(scale: f64, exponent: f64) -> Result<Self> {
        Ok(JumpLaw::Pareto {
            scale: positive("scale", scale)?,
            exponent: positive("exponent", exponent)?,
        })
    }

    pub fn degenerate(c: f64) -> Result<Self> {
        Ok(JumpLaw::Degenerate {
            c: positive("location", c)?,
        })
    }

    pub fn cdf(&self, u: f64) -> f64 {
        1.0 - self.survival(u)
    }

    /// P(X > u), computed directly to keep precision in the upper tail.
    pub fn survival(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 1.0;
        }
        match *self {
            JumpLaw::Exponential { rate } => (-rate * u).exp(),
            JumpLaw::Uniform { b } => (1.0 - u / b).max(0.0),
            JumpLaw::Pareto { scale, exponent } => {
                if u < scale {
                    1.0
                } else {
                    (scale / u).powf(exponent)
                }
            }
            JumpLaw::Degenerate { c } => {
                if u < c {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Laplace–Stieltjes transform ∫ e^{−wu} dF(u), where closed-form.
    pub fn lst(&self, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return domain(format!("transform variable must be non-negative, got {w}"));
        }
        match *self {
            JumpLaw::Exponential { rate } => Ok(rate / (rate + w)),
            JumpLaw::Uniform { b } => {
                let x = w * b;
                Ok(if x == 0.0 { 1.0 } else { -(-x).exp_m1() / x })
            }
            JumpLaw::Degenerate { c } => Ok((-w * c).exp()),
            JumpLaw::Pareto { .. } => Err(Error::Capability(format!(
                "{self} has no closed-form Laplace-Stieltjes transform; use the grid-based CDF routes"
            ))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Degenerate { c } => c,
            _ => {
                let u: f64 = rng.sample(Open01);
                match *self {
                    JumpLaw::Exponential { rate } => -u.ln() / rate,
                    JumpLaw::Uniform { b } => b * u,
                    JumpLaw::Pareto { scale, exponent } => scale * u.powf(-1.0 / exponent),
                    JumpLaw::Degenerate { .. } => unreachable!(),
                }
            }
        }
    }
}

/// The statistic applied to the first N(t) variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Sum,
    Max,
}

impl StatisticKind {
    /// Applies the statistic; the empty statistic is 0.
    pub fn apply(self, xs: impl IntoIterator<Item = f64>) -> f64 {
        match self {
            StatisticKind::Sum => xs.into_iter().sum(),
            StatisticKind::Max => xs.into_iter().fold(0.0, f64::max),
        }
    }
}

/// One-variable transform: Laplace–Stieltjes at w for the sum, F(w) for the max.
pub fn statistic_transform(kind: StatisticKind, law: &JumpLaw, w: f64) -> Result<f64> {
    if !(w >= 0.0) {
        return domain(format!("transform argument must be non-negative, got {w}"));
    }
    match kind {
        StatisticKind::Sum => law.lst(w),
        StatisticKind::Max => Ok(law.cdf(w)),
    }
}

/// Default number of grid cells on [0, u] for grid convolutions.
pub const DEFAULT_GRID_CELLS: usize = 2048;
/// Default bound on the estimated grid-convolution error.
pub const DEFAULT_CONV_BUDGET: f64 = 1e-4;
/// Default ceiling for lattice refinement.
pub const DEFAULT_MAX_GRID_CELLS: usize = 1 << 17;

/// Lattice settings. The lattice starts at `grid_cells` cells and is
/// doubled while the error estimate exceeds `error_budget`, up to
/// `max_grid_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvolutionOptions {
    pub grid_cells: usize,
    pub max_grid_cells: usize,
    pub error_budget: f64,
}

impl Default for ConvolutionOptions {
    fn default() -> Self {
        ConvolutionOptions {
            grid_cells: DEFAULT_GRID_CELLS,
            max_grid_cells: DEFAULT_MAX_GRID_CELLS,
            error_budget: DEFAULT_CONV_BUDGET,
        }
    }
}

impl ConvolutionOptions {
    /// Runs `attempt` on successively doubled lattices until its error
    /// estimate meets the budget.
    fn refine<T>(
        &self,
        law: &JumpLaw,
        u: f64,
        mut attempt: impl FnMut(usize) -> Result<(T, f64)>,
    ) -> Result<(T, f64)> {
        let mut cells = self.grid_cells;
        loop {
            let (value, err) = attempt(cells)?;
            if err <= self.error_budget || cells.saturating_mul(2) > self.max_grid_cells {
                check_budget(err, self, law, u)?;
                return Ok((value, err));
            }
            cells *= 2;
        }
    }
}

/// A CDF value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfValue {
    pub value: f64,
    pub est_error: f64,
    pub terms: usize,
}

/// Erlang(n, rate) CDF at u, i.e. P(Poisson(rate·u) ≥ n).
pub fn erlang_cdf(n: usize, rate: f64, u: f64) -> f64 {
    if n == 0 {
        return if u >= 0.0 { 1.0 } else { 0.0 };
    }
    if u <= 0.0 {
        return 0.0;
    }
    let m = rate * u;
    if (n as f64) > m {
        // upper tail summed directly; terms decrease from k = n on
        let mut total = 0.0;
        let mut k = n;
        loop {
            let p = poisson_pmf(m, k);
            total += p;
            if p < 1e-18 * total || k > n + 100_000 {
                break;
            }
            k += 1;
        }
        total.min(1.0)
    } else {
        let lower: f64 = (0..n).map(|k| poisson_pmf(m, k)).sum();
        (1.0 - lower).max(0.0)
    }
}

/// Lattice convolution of one law on [0, u_max]. X is discretized onto the
/// multiples of h = u_max/cells by cell masses F((k+½)h) − F((k−½)h); the
/// CDF of the n-fold lattice sum at kh counts the atom at kh with weight ½.
/// For n ≥ 2 the n-fold density is continuous and this is second order in
/// h; the n = 1 term is taken from the exact CDF, whose kinks would
/// otherwise leave an O(h) error.
struct GridConvolution {
    masses: Vec<f64>,
    current: Vec<f64>,
    fft: Option<FftConvolution>,
}

/// Lattices longer than this convolve through the FFT.
const FFT_MIN_LEN: usize = 256;

struct FftConvolution {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel: Vec<Complex64>,
    buffer: Vec<Complex64>,
}

impl FftConvolution {
    fn new(masses: &[f64]) -> Self {
        let size = (2 * masses.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel = vec![Complex64::new(0.0, 0.0); size];
        for (k, &m) in kernel.iter_mut().zip(masses) {
            k.re = m;
        }
        forward.process(&mut kernel);
        let scale = 1.0 / size as f64;
        kernel.iter_mut().for_each(|k| *k *= scale);
        FftConvolution {
            forward,
            inverse,
            kernel,
            buffer: vec![Complex64::new(0.0, 0.0); size],
        }
    }

    /// Linear convolution with the masses, truncated to `current.len()`.
    fn apply(&mut self, current: &mut [f64]) {
        self.buffer
            .iter_mut()
            .for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (b, &c) in self.buffer.iter_mut().zip(current.iter()) {
            b.re = c;
        }
        self.forward.process(&mut self.buffer);
        for (b, k) in self.buffer.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inverse.process(&mut self.buffer);
        for (c, b) in current.iter_mut().zip(&self.buffer) {
            *c = b.re;
        }
    }
}

impl GridConvolution {
    fn new(law: &JumpLaw, u_max: f64, cells: usize) -> Self {
        let h = u_max / cells as f64;
        let mut masses = Vec::with_capacity(cells + 1);
        let mut prev = law.cdf(0.5 * h);
        masses.push(prev);
        for k in 1..=cells {
            let next = law.cdf((k as f64 + 0.5) * h);
            masses.push(next - prev);
            prev = next;
        }
        let mut current = vec![0.0; cells + 1];
        current[0] = 1.0;
        let fft = (cells + 1 > FFT_MIN_LEN).then(|| FftConvolution::new(&masses));
        GridConvolution {
            masses,
            current,
            fft,
        }
    }

    fn step(&mut self) {
        if let Some(fft) = &mut self.fft {
            fft.apply(&mut self.current);
            return;
        }
        let len = self.current.len();
        let mut next = vec![0.0; len];
        for (i, &a) in self.current.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (slot, &m) in next[i..].iter_mut().zip(&self.masses[..len - i]) {
                *slot += a * m;
            }
        }
        self.current = next;
    }

    fn cdf_at_end(&self) -> f64 {
        let last = self.current.len() - 1;
        (self.current[..last].iter().sum::<f64>() + 0.5 * self.current[last]).min(1.0)
    }

    /// CDF at every lattice point k ≥ 1 (entry 0 is left to the caller).
    fn cdf_all(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.current.len());
        let mut below = 0.0;
        for &c in &self.current {
            out.push((below + 0.5 * c).min(1.0));
            below += c;
        }
        out
    }
}

fn uses_convolution(kind: StatisticKind, law: &JumpLaw) -> bool {
    kind == StatisticKind::Sum && matches!(law, JumpLaw::Uniform { .. } | JumpLaw::Pareto { .. })
}

/// Successive n-fold CDFs F^{⋆n}(u) of one law at one point, n = 0, 1, 2, ….
/// Grid-based laws report the value on the finer of two lattices (h and h/2)
/// and use their difference as the error estimate.
struct NfoldSumCdf {
    law: JumpLaw,
    u: f64,
    n: usize,
    grids: Option<[GridConvolution; 2]>,
}

impl NfoldSumCdf {
    fn new(law: &JumpLaw, u: f64, cells: usize) -> Self {
        let grids = (uses_convolution(StatisticKind::Sum, law) && u > 0.0).then(|| {
            [
                GridConvolution::new(law, u, cells),
                GridConvolution::new(law, u, 2 * cells),
            ]
        });
        NfoldSumCdf {
            law: *law,
            u,
            n: 0,
            grids,
        }
    }

    /// Returns (F^{⋆n}(u), estimated error) for the next n, starting at n = 0.
    fn next(&mut self) -> (f64, f64) {
        let n = self.n;
        self.n += 1;
        if n == 0 {
            return (1.0, 0.0);
        }
        if self.u == 0.0 {
            // positive laws: S_n ≤ 0 has probability F(0)^n = 0
            return (self.law.cdf(0.0).powi(n as i32), 0.0);
        }
        match (&self.law, &mut self.grids) {
            (JumpLaw::Exponential { rate }, _) => (erlang_cdf(n, *rate, self.u), 1e-15),
            (JumpLaw::Degenerate { c }, _) => (if n as f64 * c <= self.u { 1.0 } else { 0.0 }, 0.0),
            (_, Some([coarse, fine])) => {
                coarse.step();
                fine.step();
                if n == 1 {
                    return (self.law.cdf(self.u), 0.0);
                }
                let (a, b) = (coarse.cdf_at_end(), fine.cdf_at_end());
                (b, (a - b).abs())
            }
            _ => unreachable!("grid laws always carry grids for u > 0"),
        }
    }
}

fn check_cdf_args(t: f64, u: f64, tol: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be non-negative and finite, got {t}"));
    }
    if !(u >= 0.0) {
        return domain(format!("spatial argument must be non-negative, got {u}"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    Ok(())
}

fn check_budget(err: f64, opts: &ConvolutionOptions, law: &JumpLaw, u: f64) -> Result<()> {
    if err > opts.error_budget {
        return Err(Error::Numeric(format!(
            "grid convolution error estimate {err:e} exceeds budget {:e} for {law} at u = {u}",
            opts.error_budget
        )));
    }
    Ok(())
}

/// CDF of a continuous-time statistic with the counting pmf computed once,
/// for evaluation at many points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatisticCdf {
    kind: StatisticKind,
    law: JumpLaw,
    weights: Vec<f64>,
    tail_bound: f64,
    opts: ConvolutionOptions,
}

/// CDF values on the lattice u_k = k·step, k = 0..=cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCdf {
    pub step: f64,
    pub values: Vec<f64>,
    pub est_error: f64,
}

impl GridCdf {
    pub fn u_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    /// Linear interpolation on the lattice; `None` beyond u_max.
    pub fn eval(&self, u: f64) -> Option<f64> {
        if u < 0.0 {
            return Some(0.0);
        }
        let x = u / self.step;
        let k = x.floor() as usize;
        if k + 1 >= self.values.len() {
            return (u <= self.u_max() * (1.0 + 1e-12)).then(|| *self.values.last().unwrap());
        }
        let frac = x - k as f64;
        Some(self.values[k] + frac * (self.values[k + 1] - self.values[k]))
    }
}

impl StatisticCdf {
    /// Mixture Σ_n F_{S_n}(u) P(N(t) = n) with the pmf truncated once its
    /// tail is below `tol`.
    pub fn new(
        kind: StatisticKind,
        law: &JumpLaw,
        ie_law: &InterEventLaw,
        t: f64,
        tol: f64,
        opts: &ConvolutionOptions,
    ) -> Result<Self> {
        check_cdf_args(t, 0.0, tol)?;
        if opts.grid_cells == 0 {
            return domain("grid must have at least one cell");
        }
        if opts.max_grid_cells < opts.grid_cells {
            return domain(format!(
                "refinement ceiling {} is below the starting grid of {} cells",
                opts.max_grid_cells, opts.grid_cells
            ));
        }
        let pmf = counting_pmf_to_mass(ie_law, t, tol)?;
        Ok(StatisticCdf {
            kind,
            law: *law,
            weights: pmf.entries,
            tail_bound: pmf.tail_bound,
            opts: *opts,
        })
    }

    /// Compound-Poisson weights e^{−m} mⁿ/n!, truncated once the tail is below `tol`.
    fn compound_poisson(law: &JumpLaw, mean: f64, tol: f64, opts: &ConvolutionOptions) -> Self {
        let mut weights = Vec::new();
        let mut mass = 0.0;
        let tail_bound = loop {
            let n = weights.len();
            let w = poisson_pmf(mean, n);
            weights.push(w);
            mass += w;
            let tail = poisson_tail_bound(mean, n, mass);
            if tail < tol || n >= 100_000 {
                break tail;
            }
        };
        StatisticCdf {
            kind: StatisticKind::Sum,
            law: *law,
            weights,
            tail_bound,
            opts: *opts,
        }
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    /// Whether evaluation goes through lattice convolutions (Sum over
    /// uniform or Pareto jumps). Such CDFs are much cheaper on a whole grid.
    pub fn uses_convolution(&self) -> bool {
        uses_convolution(self.kind, &self.law)
    }

    pub fn eval(&self, u: f64) -> Result<CdfValue> {
        check_cdf_args(0.0, u, 1.0)?;
        let (value, err) = match self.kind {
            StatisticKind::Max => {
                let f = self.law.cdf(u);
                let mut pow = 1.0;
                let mut value = 0.0;
                for &p in &self.weights {
                    value += pow * p;
                    pow *= f;
                }
                (value, 0.0)
            }
            StatisticKind::Sum => self.opts.refine(&self.law, u, |cells| {
                let mut nfold = NfoldSumCdf::new(&self.law, u, cells);
                let (mut value, mut err) = (0.0, 0.0);
                for &p in &self.weights {
                    let (f, e) = nfold.next();
                    value += f * p;
                    err += e * p;
                }
                Ok((value, err))
            })?,
        };
        Ok(CdfValue {
            value: value.clamp(0.0, 1.0),
            est_error: err + self.tail_bound,
            terms: self.weights.len(),
        })
    }

    /// CDF on the lattice k·u_max/cells. Convolution-based CDFs are computed
    /// in one pass on two lattices (refined as needed, so `cells` may exceed
    /// `grid_cells`); the others point by point.
    pub fn eval_grid(&self, u_max: f64) -> Result<GridCdf> {
        if !(u_max > 0.0) || !u_max.is_finite() {
            return domain(format!("grid end must be positive and finite, got {u_max}"));
        }
        if !self.uses_convolution() {
            let cells = self.opts.grid_cells;
            let step = u_max / cells as f64;
            let mut est: f64 = 0.0;
            let values = (0..=cells)
                .map(|k| {
                    let v = self.eval(k as f64 * step)?;
                    est = est.max(v.est_error);
                    Ok(v.value)
                })
                .collect::<Result<Vec<f64>>>()?;
            return Ok(GridCdf {
                step,
                values,
                est_error: est,
            });
        }
        let ((step, values), err) = self.opts.refine(&self.law, u_max, |cells| {
            let step = u_max / cells as f64;
            let mut coarse = GridConvolution::new(&self.law, u_max, cells);
            let mut fine = GridConvolution::new(&self.law, u_max, 2 * cells);
            let mut acc_coarse = vec![0.0; cells + 1];
            let mut acc_fine = vec![0.0; cells + 1];
            for (n, &p) in self.weights.iter().enumerate() {
                if n == 0 {
                    acc_coarse
                        .iter_mut()
                        .chain(acc_fine.iter_mut())
                        .for_each(|v| *v += p);
                    continue;
                }
                coarse.step();
                fine.step();
                if n == 1 {
                    for k in 1..=cells {
                        let f = p * self.law.cdf(k as f64 * step);
                        acc_coarse[k] += f;
                        acc_fine[k] += f;
                    }
                    continue;
                }
                let (c, f) = (coarse.cdf_all(), fine.cdf_all());
                for k in 1..=cells {
                    acc_coarse[k] += p * c[k];
                    acc_fine[k] += p * f[2 * k];
                }
            }
            let err = acc_coarse
                .iter()
                .zip(&acc_fine)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let values: Vec<f64> = acc_fine.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
            Ok(((step, values), err))
        })?;
        Ok(GridCdf {
            step,
            values,
            est_error: err + self.tail_bound,
        })
    }
}

/// Compound-Poisson sum CDF: e^{−λt} Σ_n F^{⋆n}(u) (λt)ⁿ/n!, truncated once
/// the Poisson tail is below `tol`. F^{⋆0} is the unit step at 0.
pub fn sum_cdf_series(law: &JumpLaw, rate: f64, t: f64, u: f64, tol: f64) -> Result<f64> {
    Ok(sum_cdf_series_with(law, rate, t, u, tol, &ConvolutionOptions::default())?.value)
}

pub fn sum_cdf_series_with(
    law: &JumpLaw,
    rate: f64,
    t: f64,
    u: f64,
    tol: f64,
    opts: &ConvolutionOptions,
) -> Result<CdfValue> {
    positive("rate", rate)?;
    check_cdf_args(t, u, tol)?;
    StatisticCdf::compound_poisson(law, rate * t, tol, opts).eval(u)
}

/// Fractional Gumbel CDF of the continuous-time maximum under
/// Mittag-Leffler waits: E_α(−(1 − F(w)) t^α).
pub fn max_cdf(order: MlOrder, law: &JumpLaw, t: f64, w: f64) -> Result<f64> {
    check_cdf_args(t, w, 1.0)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let z = -law.survival(w) * t.powf(order.alpha());
    Ok(ml_one_param(order, z)?.value.clamp(0.0, 1.0))
}

/// General mixture Σ_n F_{S_n}(u) P(N(t) = n), truncated once the counting
/// pmf tail is below `tol`.
pub fn mixture_cdf(
    kind: StatisticKind,
    law: &JumpLaw,
    ie_law: &InterEventLaw,
    t: f64,
    u: f64,
    tol: f64,
) -> Result<f64> {
    Ok(mixture_cdf_with(kind, law, ie_law, t, u, tol, &ConvolutionOptions::default())?.value)
}

pub fn mixture_cdf_with(
    kind: StatisticKind,
    law: &JumpLaw,
    ie_law: &InterEventLaw,
    t: f64,
    u: f64,
    tol: f64,
    opts: &ConvolutionOptions,
) -> Result<CdfValue> {
    check_cdf_args(t, u, tol)?;
    StatisticCdf::new(kind, law, ie_law, t, tol, opts)?.eval(u)
}

/// Row-stochastic transition matrix of the embedded chain, with state labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    states: Vec<String>,
    entries: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn new(states: Vec<String>, entries: Vec<Vec<f64>>) -> Result<Self> {
        let k = states.len();
        if k == 0 {
            return domain("transition matrix needs at least one state");
        }
        if entries.len() != k || entries.iter().any(|r| r.len() != k) {
            return domain(format!("transition matrix must be {k}x{k}"));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
                return domain(format!("row {} has entries outside [0, 1]", states[i]));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return domain(format!("row {} sums to {s}, not 1", states[i]));
            }
        }
        Ok(TransitionMatrix { states, entries })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::Domain(format!("unknown state {label:?}")))
    }

    fn check_state(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            domain(format!(
                "state index {i} out of range for {} states",
                self.len()
            ))
        }
    }
}

/// Rows of the semi-Markov marginal matrix p_{i,·}(t) = Σ_n (qⁿ)_{i,·} P(N(t)=n).
pub fn semi_markov_row(
    q: &TransitionMatrix,
    i: usize,
    ie_law: &InterEventLaw,
    t: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    q.check_state(i)?;
    check_cdf_args(t, 0.0, tol)?;
    let pmf = counting_pmf_to_mass(ie_law, t, tol)?;
    let k = q.len();
    let mut dist = vec![0.0; k];
    dist[i] = 1.0;
    let mut out = vec![0.0; k];
    for (n, &p) in pmf.entries.iter().enumerate() {
        if n > 0 {
            let mut next = vec![0.0; k];
            for (a, &da) in dist.iter().enumerate() {
                for (b, slot) in next.iter_mut().enumerate() {
                    *slot += da * q.entry(a, b);
                }
            }
            dist = next;
        }
        for (slot, &d) in out.iter_mut().zip(&dist) {
            *slot += d * p;
        }
    }
    Ok(out)
}

/// P(Y(t) = j | Y(0) = i) for the semi-Markov chain observed through N(t).
pub fn semi_markov_marginal(
    q: &TransitionMatrix,
    i: usize,
    j: usize,
    ie_law: &InterEventLaw,
    t: f64,
    tol: f64,
) -> Result<f64> {
    q.check_state(j)?;
    Ok(semi_markov_row(q, i, ie_law, t, tol)?[j])
}
