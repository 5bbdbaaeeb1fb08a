//! Relaxation equations with a memory kernel,
//!
//! ```text
//! ∫₀ᵗ Φ(t − t') Q'(t') dt' = −c Q(t),    Q(0) = 1,
//! ```
//!
//! for the Dirac kernel (ordinary relaxation, Q = e^{−ct}) and the power-law
//! kernel t^{−α}/Γ(1−α), where the left side is the Caputo derivative of
//! order α and Q(t) = E_α(−c t^α).
//!
//! The power-law problem is solved by the implicit L1 scheme with starting
//! corrections. Plain L1 loses accuracy to the t^α, t^{2α}, … terms of the
//! solution near the origin; the corrected operator adds
//! h^{−α} Σ_k W_{n,k} (Q_k − Q_0), with weights making the scheme exact for
//! t^{rα}, r = 1, …, m.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::special::gamma::gamma;
use crate::special::MlOrder;

/// Upper bound on the number of starting corrections.
pub const MAX_CORRECTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kernel", rename_all = "kebab-case")]
pub enum KernelSpec {
    Delta,
    PowerLaw { order: MlOrder },
}

impl KernelSpec {
    pub fn power_law(alpha: f64) -> Result<Self> {
        let order = MlOrder::new(alpha)?;
        if order.is_exponential() {
            return domain(
                "power-law kernel needs order in (0, 1); use the delta kernel for order 1",
            );
        }
        Ok(KernelSpec::PowerLaw { order })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxationProblem {
    pub kernel: KernelSpec,
    pub c: f64,
    pub t_max: f64,
    pub step: f64,
}

impl RelaxationProblem {
    pub fn new(kernel: KernelSpec, c: f64, t_max: f64, step: f64) -> Result<Self> {
        if let KernelSpec::PowerLaw { order } = kernel {
            if order.is_exponential() {
                return domain("power-law kernel needs order in (0, 1)");
            }
        }
        if !(c >= 0.0) || !c.is_finite() {
            return domain(format!(
                "relaxation coefficient must be non-negative and finite, got {c}"
            ));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return domain(format!("t_max must be positive and finite, got {t_max}"));
        }
        if !(step > 0.0) || step > t_max {
            return domain(format!("step must lie in (0, t_max], got {step}"));
        }
        let n = (t_max / step).round();
        if ((n * step - t_max) / t_max).abs() > 1e-9 {
            return domain(format!(
                "t_max {t_max} is not a whole number of steps of {step}"
            ));
        }
        Ok(RelaxationProblem {
            kernel,
            c,
            t_max,
            step,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.step).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxationSolution {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub scheme: String,
    pub est_error: f64,
}

pub fn solve_relaxation(problem: &RelaxationProblem) -> Result<RelaxationSolution> {
    let n = problem.steps();
    let h = problem.step;
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    match problem.kernel {
        KernelSpec::Delta => {
            let values = grid.iter().map(|&t| (-problem.c * t).exp()).collect();
            Ok(RelaxationSolution {
                grid,
                values,
                scheme: "exact exponential".into(),
                est_error: 0.0,
            })
        }
        KernelSpec::PowerLaw { order } => {
            let alpha = order.alpha();
            let op = CorrectedL1::new(order, n)?;
            let values = op.solve(problem.c, h)?;
            let fine = CorrectedL1::new(order, 2 * n)?.solve(problem.c, 0.5 * h)?;
            let diff = values
                .iter()
                .zip(fine.iter().step_by(2))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let est_error = diff / (1.0 - 2f64.powf(alpha - 2.0));
            let scheme = format!("implicit L1, {} starting corrections", op.corrections());
            Ok(RelaxationSolution {
                grid,
                values,
                scheme,
                est_error,
            })
        }
    }
}

fn l1_coefficients(alpha: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let j = j as f64;
            (j + 1.0).powf(1.0 - alpha) - j.powf(1.0 - alpha)
        })
        .collect()
}

/// Σ_{j<k} b_j (v_{k−j} − v_{k−j−1}), the unscaled L1 history at index k.
fn l1_sum(b: &[f64], values: &[f64], k: usize) -> f64 {
    (0..k)
        .map(|j| b[j] * (values[k - j] - values[k - j - 1]))
        .sum()
}

/// Plain L1 approximation of the Caputo derivative at grid index `index`
/// of samples on a uniform grid of spacing `step`.
pub fn caputo_l1(values: &[f64], order: MlOrder, step: f64, index: usize) -> Result<f64> {
    if index == 0 {
        return domain("the L1 derivative is undefined at the origin (index 0)");
    }
    if index >= values.len() {
        return domain(format!(
            "index {index} out of range for {} samples",
            values.len()
        ));
    }
    if !(step > 0.0) {
        return domain(format!("step must be positive, got {step}"));
    }
    let alpha = order.alpha();
    let b = l1_coefficients(alpha, index);
    Ok(step.powf(-alpha) / gamma(2.0 - alpha) * l1_sum(&b, values, index))
}

/// L1 operator with starting corrections on a fixed grid of `n` steps.
#[derive(Debug, Clone)]
pub struct CorrectedL1 {
    alpha: f64,
    b: Vec<f64>,
    /// weights[k][i]: weight of (Q_{k+1} − Q_0) at grid index i
    weights: Vec<Vec<f64>>,
}

impl CorrectedL1 {
    pub fn new(order: MlOrder, n: usize) -> Result<Self> {
        let alpha = order.alpha();
        let b = l1_coefficients(alpha, n);
        let g2 = gamma(2.0 - alpha);
        let sigmas: Vec<f64> = (1..=MAX_CORRECTIONS)
            .map(|r| r as f64 * alpha)
            .take_while(|&s| s < 2.0 - alpha)
            .collect();
        let m = sigmas.len().min(n);
        let sigmas = &sigmas[..m];

        // residual of plain L1 on k^σ (unit step) at every index
        let residuals: Vec<Vec<f64>> = sigmas
            .iter()
            .map(|&s| {
                let g: Vec<f64> = (0..=n).map(|k| (k as f64).powf(s)).collect();
                let scale = gamma(s + 1.0) / gamma(s + 1.0 - alpha);
                (0..=n)
                    .map(|k| {
                        if k == 0 {
                            0.0
                        } else {
                            scale * (k as f64).powf(s - alpha) - l1_sum(&b, &g, k) / g2
                        }
                    })
                    .collect()
            })
            .collect();
        let vandermonde: Vec<Vec<f64>> = sigmas
            .iter()
            .map(|&s| (1..=m).map(|k| (k as f64).powf(s)).collect())
            .collect();
        let inv = invert(&vandermonde)?;
        let weights = (0..m)
            .map(|k| {
                (0..=n)
                    .map(|i| (0..m).map(|r| inv[k][r] * residuals[r][i]).sum())
                    .collect()
            })
            .collect();
        Ok(CorrectedL1 { alpha, b, weights })
    }

    pub fn corrections(&self) -> usize {
        self.weights.len()
    }

    pub fn steps(&self) -> usize {
        self.b.len() - 1
    }

    /// Corrected Caputo derivative at `index` of samples with spacing `step`.
    pub fn apply(&self, values: &[f64], step: f64, index: usize) -> Result<f64> {
        if index == 0 {
            return domain("the L1 derivative is undefined at the origin (index 0)");
        }
        if index > self.steps() || index >= values.len() {
            return domain(format!("index {index} out of range"));
        }
        let g2 = gamma(2.0 - self.alpha);
        let corr: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w[index] * (values[k + 1] - values[0]))
            .sum();
        Ok(step.powf(-self.alpha) * (l1_sum(&self.b, values, index) / g2 + corr))
    }

    /// Solves D^α Q = −c Q, Q(0) = 1 on the operator's grid.
    pub fn solve(&self, c: f64, step: f64) -> Result<Vec<f64>> {
        let n = self.steps();
        let m = self.corrections();
        let g2 = gamma(2.0 - self.alpha);
        let ha = step.powf(-self.alpha);
        let mut q = vec![1.0; n + 1];

        // the first m values appear in every correction term; solve them jointly
        if m > 0 {
            let mut a = vec![vec![0.0; m]; m];
            let mut rhs = vec![0.0; m];
            for i in 1..=m {
                let mut row = vec![0.0; m + 1];
                for j in 0..i {
                    row[i - j] += self.b[j] / g2;
                    row[i - j - 1] -= self.b[j] / g2;
                }
                for (k, w) in self.weights.iter().enumerate() {
                    row[k + 1] += w[i];
                    row[0] -= w[i];
                }
                for r in row.iter_mut() {
                    *r *= ha;
                }
                row[i] += c;
                a[i - 1].copy_from_slice(&row[1..]);
                rhs[i - 1] = -row[0];
            }
            let start = solve_dense(a, rhs)?;
            q[1..=m].copy_from_slice(&start);
        }

        let mut dq: Vec<f64> = vec![0.0; n + 1];
        for k in 1..=m {
            dq[k] = q[k] - q[k - 1];
        }
        for k in m + 1..=n {
            let hist: f64 = (1..k).map(|j| self.b[j] * dq[k - j]).sum::<f64>() / g2;
            let corr: f64 = self
                .weights
                .iter()
                .enumerate()
                .map(|(i, w)| w[k] * (q[i + 1] - 1.0))
                .sum();
            let next = ha * (q[k - 1] / g2 - hist - corr) / (ha / g2 + c);
            if !next.is_finite() {
                return Err(Error::Numeric(format!(
                    "L1 step {k} produced a non-finite value"
                )));
            }
            q[k] = next;
            dq[k] = next - q[k - 1];
        }
        Ok(q)
    }
}

#[allow(clippy::needless_range_loop)]
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let m = rhs.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if !(a[piv][col].abs() > 0.0) {
            return Err(Error::Numeric(
                "singular starting system in the L1 scheme".into(),
            ));
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for i in col + 1..m {
            let f = a[i][col] / a[col][col];
            for j in col..m {
                a[i][j] -= f * a[col][j];
            }
            rhs[i] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|j| a[i][j] * x[j]).sum();
        x[i] = (rhs[i] - s) / a[i][i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Numeric(
            "non-finite starting values in the L1 scheme".into(),
        ))
    }
}

fn invert(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = a.len();
    let cols: Result<Vec<Vec<f64>>> = (0..m)
        .map(|j| {
            let e = (0..m).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            solve_dense(a.to_vec(), e)
        })
        .collect();
    let cols = cols?;
    Ok((0..m)
        .map(|i| (0..m).map(|j| cols[j][i]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use crate::special::ml_survival;

    fn ord(a: f64) -> MlOrder {
        MlOrder::new(a).unwrap()
    }

    fn power(alpha: f64, c: f64, t_max: f64, h: f64) -> RelaxationSolution {
        let p = RelaxationProblem::new(KernelSpec::power_law(alpha).unwrap(), c, t_max, h).unwrap();
        solve_relaxation(&p).unwrap()
    }

    fn max_error(sol: &RelaxationSolution, alpha: f64) -> f64 {
        max_error_every(sol, alpha, 1)
    }

    fn max_error_every(sol: &RelaxationSolution, alpha: f64, stride: usize) -> f64 {
        sol.grid
            .iter()
            .zip(&sol.values)
            .step_by(stride)
            .map(|(&t, &q)| (q - ml_survival(ord(alpha), t).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn problem_validation() {
        let k = KernelSpec::power_law(0.5).unwrap();
        assert!(KernelSpec::power_law(1.0).is_err());
        assert!(RelaxationProblem::new(k, -1.0, 1.0, 0.1).is_err());
        assert!(RelaxationProblem::new(k, 1.0, 0.0, 0.1).is_err());
        assert!(RelaxationProblem::new(k, 1.0, 1.0, 2.0).is_err());
        assert!(RelaxationProblem::new(k, 1.0, 1.0, 0.3).is_err());
        assert_eq!(
            RelaxationProblem::new(k, 1.0, 1.0, 0.1).unwrap().steps(),
            10
        );
    }

    #[test]
    fn delta_kernel_is_exponential() {
        let p = RelaxationProblem::new(KernelSpec::Delta, 1.0, 5.0, 0.01).unwrap();
        let sol = solve_relaxation(&p).unwrap();
        assert!((sol.values[100] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(sol.values[0], 1.0);
        assert_eq!(sol.grid.len(), 501);
    }

    #[test]
    fn zero_coefficient_preserves_initial_value() {
        let sol = power(0.4, 0.0, 2.0, 0.01);
        assert!(sol.values.iter().all(|&q| (q - 1.0).abs() < 1e-14));
    }

    #[test]
    fn power_law_against_mittag_leffler() {
        let sol = power(0.6, 1.0, 5.0, 2e-3);
        let err = max_error(&sol, 0.6);
        assert!(err < 1e-4, "max error {err}");
        assert!(
            err < sol.est_error * 3.0 && sol.est_error < 10.0 * err,
            "est {} vs {err}",
            sol.est_error
        );
    }

    #[test]
    fn scaled_coefficient() {
        // Q(t) = E_α(−c t^α) = ml_survival at t·c^{1/α}
        let (alpha, c) = (0.45, 2.0);
        let sol = power(alpha, c, 2.0, 2e-3);
        for k in (0..sol.grid.len()).step_by(50) {
            let exact = ml_survival(ord(alpha), sol.grid[k] * c.powf(1.0 / alpha)).unwrap();
            assert!((sol.values[k] - exact).abs() < 5e-4, "t {}", sol.grid[k]);
        }
    }

    #[test]
    fn convergence_order() {
        for alpha in [0.3, 0.6, 0.8] {
            let e1 = max_error(&power(alpha, 1.0, 2.0, 4e-3), alpha);
            let e2 = max_error_every(&power(alpha, 1.0, 2.0, 2e-3), alpha, 2);
            assert!(
                e1 / e2 >= 2f64.powf(2.0 - alpha) * 0.8,
                "alpha {alpha}: {e1} -> {e2}"
            );
        }
    }

    #[test]
    fn boundary_order_close_to_exponential() {
        let sol = power(0.999, 1.0, 1.0, 1e-3);
        assert!((sol.values[1000] - (-1.0f64).exp()).abs() < 5e-3);
    }

    #[test]
    fn solution_strictly_decreasing() {
        for alpha in [0.2, 0.6, 0.95] {
            let sol = power(alpha, 1.0, 5.0, 5e-3);
            assert_eq!(sol.values[0], 1.0);
            for w in sol.values.windows(2) {
                assert!(w[1] < w[0] && w[1] > 0.0, "alpha {alpha}");
            }
        }
    }

    #[test]
    fn corrected_operator_residual() {
        let (alpha, c, h) = (0.6, 1.0, 5e-3);
        let sol = power(alpha, c, 5.0, h);
        let op = CorrectedL1::new(ord(alpha), sol.values.len() - 1).unwrap();
        for k in 1..sol.values.len() {
            let d = op.apply(&sol.values, h, k).unwrap();
            assert!((d + c * sol.values[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn plain_l1_residual_at_interior_points() {
        let (alpha, c, h) = (0.6, 1.0, 1e-3);
        let sol = power(alpha, c, 5.0, h);
        for k in (1000..=5000).step_by(250) {
            let d = caputo_l1(&sol.values, ord(alpha), h, k).unwrap();
            assert!(
                (d + c * sol.values[k]).abs() < 10.0 * sol.est_error,
                "k {k}"
            );
        }
    }

    #[test]
    fn caputo_l1_constant_and_linear() {
        assert!(caputo_l1(&[1.0, 1.0], ord(0.5), 0.1, 0).is_err());
        let flat = vec![2.5; 50];
        assert_eq!(caputo_l1(&flat, ord(0.3), 0.1, 49).unwrap(), 0.0);
        let h = 0.05;
        let alpha = 0.35;
        let lin: Vec<f64> = (0..=60).map(|k| k as f64 * h).collect();
        for k in [1, 7, 60] {
            let t = k as f64 * h;
            // (1/Γ(1−α)) ∫₀ᵗ (t − s)^{−α} ds, with s = t − e^y to soften the endpoint
            let q = quad::integrate(|y: f64| (y * (1.0 - alpha)).exp(), -60.0, t.ln(), 1e-15).value;
            let oracle = q / gamma(1.0 - alpha);
            let v = caputo_l1(&lin, ord(alpha), h, k).unwrap();
            assert!(
                (v - oracle).abs() < 1e-12 * oracle.max(1.0),
                "k {k}: {v} vs {oracle}"
            );
        }
    }

    #[test]
    fn caputo_l1_of_mittag_leffler() {
        let (alpha, h) = (0.7, 1e-3);
        let values: Vec<f64> = (0..=3000)
            .map(|k| ml_survival(ord(alpha), k as f64 * h).unwrap())
            .collect();
        for k in (500..=3000).step_by(125) {
            let d = caputo_l1(&values, ord(alpha), h, k).unwrap();
            assert!((d + values[k]).abs() < 1e-2 * values[k], "k {k}");
        }
    }

    #[test]
    fn corrected_operator_exact_on_fractional_powers() {
        let alpha = 0.6;
        let op = CorrectedL1::new(ord(alpha), 40).unwrap();
        assert_eq!(op.corrections(), 2);
        let h = 0.1;
        for s in [alpha, 2.0 * alpha] {
            let v: Vec<f64> = (0..=40).map(|k| (k as f64 * h).powf(s)).collect();
            for k in [1, 2, 17, 40] {
                let t = k as f64 * h;
                let exact = gamma(s + 1.0) / gamma(s + 1.0 - alpha) * t.powf(s - alpha);
                assert!((op.apply(&v, h, k).unwrap() - exact).abs() < 1e-10);
            }
        }
    }
}
