//! Laplace-domain symbols of the waiting-time laws, the memory kernel of the
//! relaxation equation, the generalized Montroll–Weiss double transform and
//! numerical Laplace inversion.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::renewal::InterEventLaw;

type SymbolFn = dyn Fn(Complex64) -> Complex64 + Send + Sync;

/// A Laplace transform F(s), evaluable for real s > 0 and, for contour
/// inversion, on the right half of the cut plane.
#[derive(Clone)]
pub struct LaplaceSymbol {
    evaluator: Arc<SymbolFn>,
    description: String,
}

impl fmt::Debug for LaplaceSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaplaceSymbol")
            .field("description", &self.description)
            .finish()
    }
}

impl LaplaceSymbol {
    pub fn new<F>(description: impl Into<String>, evaluator: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        LaplaceSymbol {
            evaluator: Arc::new(evaluator),
            description: description.into(),
        }
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.evaluator)(Complex64::new(s, 0.0)).re
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        (self.evaluator)(s)
    }
}

/// Transform of the waiting-time density: λ/(λ+s) or 1/(1+s^α).
pub fn density_symbol(law: &InterEventLaw) -> LaplaceSymbol {
    match *law {
        InterEventLaw::Exponential { rate } => {
            LaplaceSymbol::new(format!("{rate}/({rate}+s)"), move |s| rate / (rate + s))
        }
        InterEventLaw::MittagLeffler { order } => {
            let a = order.alpha();
            LaplaceSymbol::new(format!("1/(1+s^{a})"), move |s| 1.0 / (1.0 + s.powf(a)))
        }
    }
}

/// Transform of the survival function, (1 − density)/s.
pub fn survival_symbol(law: &InterEventLaw) -> LaplaceSymbol {
    match *law {
        InterEventLaw::Exponential { rate } => {
            LaplaceSymbol::new(format!("1/({rate}+s)"), move |s| 1.0 / (rate + s))
        }
        InterEventLaw::MittagLeffler { order } => {
            let a = order.alpha();
            LaplaceSymbol::new(format!("s^({a}-1)/(1+s^{a})"), move |s| {
                s.powf(a - 1.0) / (1.0 + s.powf(a))
            })
        }
    }
}

/// Memory-kernel transform (1 − density)/(s · density). Constant 1/λ for
/// exponential waits (a scaled Dirac delta), s^(α−1) for Mittag-Leffler.
pub fn kernel_symbol(law: &InterEventLaw) -> LaplaceSymbol {
    match *law {
        InterEventLaw::Exponential { rate } => LaplaceSymbol::new(format!("1/{rate}"), move |_| {
            Complex64::new(1.0 / rate, 0.0)
        }),
        InterEventLaw::MittagLeffler { order } => {
            let a = order.alpha();
            LaplaceSymbol::new(format!("s^({a}-1)"), move |s| s.powf(a - 1.0))
        }
    }
}

/// Transform of P(N(t) = n): survival(s) · density(s)ⁿ.
pub fn counting_pmf_symbol(law: &InterEventLaw, n: usize) -> LaplaceSymbol {
    let surv = survival_symbol(law);
    let dens = density_symbol(law);
    LaplaceSymbol::new(format!("P(N(t)={n}) under {law}"), move |s| {
        surv.eval_complex(s) * dens.eval_complex(s).powi(n as i32)
    })
}

fn check_transform_value(value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        domain(format!(
            "statistic transform value must lie in [0, 1], got {value}"
        ))
    }
}

/// Double transform Q(w, s) = survival(s) / (1 − density(s) · value), where
/// `value` is the already-evaluated statistic transform at w.
pub fn mw_symbol(value: f64, law: &InterEventLaw, s: f64) -> Result<f64> {
    check_transform_value(value)?;
    if !(s > 0.0) {
        return domain(format!("transform variable must be positive, got {s}"));
    }
    let dens = density_symbol(law).eval(s);
    let denom = 1.0 - dens * value;
    if denom <= 0.0 {
        return domain(format!("Montroll-Weiss denominator vanishes at s = {s}"));
    }
    Ok(survival_symbol(law).eval(s) / denom)
}

/// [`mw_symbol`] as a symbol in s, for inversion.
pub fn mw_laplace_symbol(value: f64, law: &InterEventLaw) -> Result<LaplaceSymbol> {
    check_transform_value(value)?;
    let surv = survival_symbol(law);
    let dens = density_symbol(law);
    Ok(LaplaceSymbol::new(
        format!("Q(value={value}, s) under {law}"),
        move |s| surv.eval_complex(s) / (1.0 - dens.eval_complex(s) * value),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InversionMethod {
    GaverStehfest,
    Talbot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionConfig {
    pub method: InversionMethod,
    pub order: usize,
    /// Digits the cross-check between consecutive orders must agree to,
    /// up to a factor of 10.
    pub working_precision_hint: u32,
}

impl InversionConfig {
    pub fn gaver_stehfest(order: usize) -> Result<Self> {
        if !order.is_multiple_of(2) || !(8..=20).contains(&order) {
            return domain(format!(
                "Gaver-Stehfest order must be even and in [8, 20], got {order}"
            ));
        }
        Ok(InversionConfig {
            method: InversionMethod::GaverStehfest,
            order,
            working_precision_hint: 5,
        })
    }

    pub fn talbot(order: usize) -> Result<Self> {
        if !(12..=64).contains(&order) {
            return domain(format!("Talbot order must be in [12, 64], got {order}"));
        }
        Ok(InversionConfig {
            method: InversionMethod::Talbot,
            order,
            working_precision_hint: 10,
        })
    }

    pub fn with_precision_hint(mut self, digits: u32) -> Self {
        self.working_precision_hint = digits;
        self
    }

    fn tolerance(&self) -> f64 {
        10f64.powi(-(self.working_precision_hint as i32))
    }

    fn cross_check_order(&self) -> usize {
        match self.method {
            InversionMethod::GaverStehfest => self.order - 2,
            InversionMethod::Talbot => self.order - 6,
        }
    }
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            method: InversionMethod::Talbot,
            order: 32,
            working_precision_hint: 10,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Stehfest weights V_k for even order n.
pub fn stehfest_weights(n: usize) -> Result<Vec<f64>> {
    let half = n / 2;
    let mut weights = Vec::with_capacity(n);
    for k in 1..=n {
        let mut v = 0.0;
        for j in k.div_ceil(2)..=k.min(half) {
            v += (j as f64).powi(half as i32) * factorial(2 * j)
                / (factorial(half - j)
                    * factorial(j)
                    * factorial(j - 1)
                    * factorial(k - j)
                    * factorial(2 * j - k));
        }
        if (k + half) % 2 == 1 {
            v = -v;
        }
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "Stehfest weight {k} of order {n} overflowed"
            )));
        }
        weights.push(v);
    }
    Ok(weights)
}

fn gaver_stehfest(symbol: &LaplaceSymbol, t: f64, order: usize) -> Result<f64> {
    let a = LN_2 / t;
    let weights = stehfest_weights(order)?;
    let sum: f64 = weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * symbol.eval((i + 1) as f64 * a))
        .sum();
    Ok(a * sum)
}

/// Fixed Talbot contour s(θ) = rθ(cot θ + i), r = 2M/(5t).
fn talbot(symbol: &LaplaceSymbol, t: f64, order: usize) -> f64 {
    let m = order as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut acc = 0.5 * symbol.eval(r) * (r * t).exp();
    for k in 1..order {
        let theta = k as f64 * PI / m;
        let cot = 1.0 / theta.tan();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * symbol.eval_complex(s) * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    r / m * acc
}

fn invert_once(
    symbol: &LaplaceSymbol,
    t: f64,
    method: InversionMethod,
    order: usize,
) -> Result<f64> {
    match method {
        InversionMethod::GaverStehfest => gaver_stehfest(symbol, t, order),
        InversionMethod::Talbot => Ok(talbot(symbol, t, order)),
    }
}

/// Numerically inverts `symbol` at time t > 0, cross-checking against the
/// next lower order.
pub fn invert(symbol: &LaplaceSymbol, t: f64, config: &InversionConfig) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!(
            "inversion time must be positive and finite, got {t}"
        ));
    }
    let value = invert_once(symbol, t, config.method, config.order)?;
    let check = invert_once(symbol, t, config.method, config.cross_check_order())?;
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "inversion of {} at t = {t} is not finite",
            symbol.description
        )));
    }
    let scale = value.abs().max(1.0);
    let disagreement = (value - check).abs();
    if disagreement > 10.0 * config.tolerance() * scale {
        return Err(Error::Numeric(format!(
            "inversion of {} at t = {t}: orders {} and {} differ by {disagreement:e}",
            symbol.description,
            config.order,
            config.cross_check_order()
        )));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::special::{ml_survival, MlOrder};

    fn ml(a: f64) -> InterEventLaw {
        InterEventLaw::mittag_leffler(a).unwrap()
    }

    fn exp1() -> InterEventLaw {
        InterEventLaw::exponential(1.0).unwrap()
    }

    /// ∫₀^∞ e^{−st} g(t) dt in log-time, as an oracle independent of the
    /// closed-form symbols.
    fn laplace_quadrature<G: Fn(f64) -> f64>(g: G, s: f64) -> f64 {
        let f = |y: f64| {
            let t = y.exp();
            t * (-s * t).exp() * g(t)
        };
        quad::integrate(f, -40.0, (60.0 / s).ln(), 1e-13).value
    }

    #[test]
    fn density_symbol_values() {
        assert_eq!(density_symbol(&exp1()).eval(1.0), 0.5);
        for s in [0.1, 1.0, 10.0] {
            assert!(
                (density_symbol(&ml(1.0)).eval(s) - density_symbol(&exp1()).eval(s)).abs() < 1e-15
            );
        }
        assert!((density_symbol(&ml(0.5)).eval(4.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ml_density_symbol_against_quadrature() {
        // density = −d/dt E_α(−t^α), by central differences of the survival
        let order = MlOrder::new(0.5).unwrap();
        let density = |t: f64| {
            let h = 1e-5 * t;
            (ml_survival(order, t - h).unwrap() - ml_survival(order, t + h).unwrap()) / (2.0 * h)
        };
        let q = laplace_quadrature(density, 4.0);
        assert!((q - 1.0 / 3.0).abs() < 1e-6, "{q}");
    }

    #[test]
    fn survival_symbol_values() {
        assert_eq!(survival_symbol(&exp1()).eval(1.0), 0.5);
        for law in [
            exp1(),
            ml(0.5),
            ml(0.8),
            InterEventLaw::exponential(2.5).unwrap(),
        ] {
            for s in [0.1, 1.0, 10.0] {
                let lhs = s * survival_symbol(&law).eval(s) + density_symbol(&law).eval(s);
                assert!((lhs - 1.0).abs() < 1e-14);
            }
        }
        assert!((survival_symbol(&ml(0.5)).eval(1.0) - 0.5).abs() < 1e-15);
        let order = MlOrder::new(0.5).unwrap();
        let q = laplace_quadrature(|t| ml_survival(order, t).unwrap(), 1.0);
        assert!((q - 0.5).abs() < 1e-9, "{q}");
    }

    #[test]
    fn kernel_symbol_values() {
        for s in [0.1, 1.0, 10.0] {
            assert_eq!(kernel_symbol(&exp1()).eval(s), 1.0);
            assert!((kernel_symbol(&ml(1.0)).eval(s) - 1.0).abs() < 1e-15);
            assert!((kernel_symbol(&ml(0.6)).eval(s) - s.powf(-0.4)).abs() < 1e-15);
        }
    }

    #[test]
    fn mw_symbol_values() {
        for law in [exp1(), ml(0.7)] {
            for s in [0.3, 1.0, 5.0] {
                assert_eq!(
                    mw_symbol(0.0, &law, s).unwrap(),
                    survival_symbol(&law).eval(s)
                );
                assert!((mw_symbol(1.0, &law, s).unwrap() - 1.0 / s).abs() < 1e-14);
            }
        }
        // geometric series of the double transform, 50 terms
        let (surv, dens, v) = (0.5f64, 0.5f64, 0.5f64);
        let series: f64 = (0..50).map(|n| surv * (dens * v).powi(n)).sum();
        assert!((series - 2.0 / 3.0).abs() < 1e-14);
        assert!((mw_symbol(0.5, &exp1(), 1.0).unwrap() - series).abs() < 1e-14);
    }

    #[test]
    fn mw_symbol_rejects_bad_arguments() {
        assert!(mw_symbol(1.5, &exp1(), 1.0).is_err());
        assert!(mw_symbol(0.5, &exp1(), 0.0).is_err());
        assert!(mw_laplace_symbol(-0.1, &exp1()).is_err());
    }

    #[test]
    fn stehfest_weights_sum_to_zero() {
        for n in [8, 12, 14, 20] {
            let w = stehfest_weights(n).unwrap();
            let s: f64 = w.iter().sum();
            let m: f64 = w.iter().map(|x| x.abs()).fold(0.0, f64::max);
            assert!(s.abs() < 1e-12 * m, "order {n}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(InversionConfig::gaver_stehfest(13).is_err());
        assert!(InversionConfig::gaver_stehfest(6).is_err());
        assert!(InversionConfig::gaver_stehfest(22).is_err());
        assert!(InversionConfig::talbot(8).is_err());
    }

    #[test]
    fn inverts_elementary_symbols() {
        let one = LaplaceSymbol::new("1/s", |s| 1.0 / s);
        let e = LaplaceSymbol::new("1/(1+s)", |s| 1.0 / (1.0 + s));
        let cfg = InversionConfig::default();
        assert!((invert(&one, 3.0, &cfg).unwrap() - 1.0).abs() < 1e-8);
        assert!((invert(&e, 1.0, &cfg).unwrap() - (-1.0f64).exp()).abs() < 1e-7);
        // Gaver-Stehfest: order 14 is exact enough for 1/s, order 16 for e^{-t}
        let gs14 = InversionConfig::gaver_stehfest(14).unwrap();
        let gs16 = InversionConfig::gaver_stehfest(16).unwrap();
        assert!((invert(&one, 3.0, &gs14).unwrap() - 1.0).abs() < 1e-8);
        assert!((invert(&e, 1.0, &gs16).unwrap() - (-1.0f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn inverts_mittag_leffler_survival() {
        let sym = LaplaceSymbol::new("s^-0.3/(1+s^0.7)", |s| s.powf(-0.3) / (1.0 + s.powf(0.7)));
        let expected = ml_survival(MlOrder::new(0.7).unwrap(), 1.5).unwrap();
        let gs = invert(&sym, 1.5, &InversionConfig::gaver_stehfest(14).unwrap()).unwrap();
        assert!((gs - expected).abs() < 1e-5, "{gs} vs {expected}");
        let tal = invert(&sym, 1.5, &InversionConfig::default()).unwrap();
        assert!((tal - expected).abs() < 1e-10, "{tal} vs {expected}");
    }

    #[test]
    fn gaver_stehfest_relative_accuracy_on_monotone_originals() {
        let e = LaplaceSymbol::new("1/(1+s)", |s| 1.0 / (1.0 + s));
        let gs16 = InversionConfig::gaver_stehfest(16).unwrap();
        // relative accuracy degrades as e^{-t} decays; by t = 3 it is ~4e-5
        for t in [0.25, 0.5, 1.0] {
            let v = invert(&e, t, &gs16).unwrap();
            assert!(((v - (-t).exp()) / (-t).exp()).abs() < 1e-6, "t {t}");
        }
    }

    #[test]
    fn exponential_density_round_trip() {
        for rate in [0.5, 1.0, 3.0] {
            let law = InterEventLaw::exponential(rate).unwrap();
            let sym = density_symbol(&law);
            for k in 1..=20 {
                let t = 0.5 * k as f64 / rate;
                let exact = rate * (-rate * t).exp();
                let got = invert(&sym, t, &InversionConfig::default()).unwrap();
                assert!(
                    ((got - exact) / exact).abs() < 1e-6,
                    "rate {rate} t {t}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn invert_rejects_non_positive_time() {
        let one = LaplaceSymbol::new("1/s", |s| 1.0 / s);
        assert!(matches!(
            invert(&one, 0.0, &InversionConfig::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn invert_reports_order_disagreement() {
        // oscillatory original sin(10 t): Gaver-Stehfest cannot resolve it
        let sym = LaplaceSymbol::new("10/(s^2+100)", |s| 10.0 / (s * s + 100.0));
        match invert(&sym, 2.0, &InversionConfig::gaver_stehfest(14).unwrap()) {
            Err(Error::Numeric(msg)) => assert!(msg.contains("differ")),
            other => panic!("expected numeric error, got {other:?}"),
        }
    }
}
