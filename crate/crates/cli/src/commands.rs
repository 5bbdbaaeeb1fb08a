use serde_json::json;

use ctstat::laplace::{
    counting_pmf_symbol, density_symbol, invert, mw_laplace_symbol, survival_symbol,
    InversionConfig, InversionMethod, LaplaceSymbol,
};
use ctstat::mc::{
    build_ecdf, ks_distance_with_threshold, path_rng, simulate_chain, simulate_statistic,
    SimulationPlan,
};
use ctstat::relax::{solve_relaxation, KernelSpec, RelaxationProblem};
use ctstat::renewal::{counting_pmf, counting_pmf_to_mass, generate_epochs, InterEventLaw};
use ctstat::special::{ml_one_param, MlOrder};
use ctstat::stats::{
    max_cdf, semi_markov_row, ConvolutionOptions, JumpLaw, StatisticCdf, StatisticKind,
    TransitionMatrix,
};
use ctstat::{Error, Result};

use crate::args::*;
use crate::output::{Cell, Payload, Table};

pub fn run(command: &Command, common: &Common) -> Result<Payload> {
    match command {
        Command::Ml(a) => ml(a),
        Command::Pmf(a) => pmf(a),
        Command::Epochs(a) => epochs(a, common),
        Command::Invert(a) => invert_symbol(a),
        Command::Analytic(a) => analytic(a),
        Command::Chain(a) => chain(a, common),
        Command::Solve(a) => solve(a),
        Command::Simulate(a) => simulate(a, common),
        Command::Compare(a) => compare(a, common),
    }
}

fn ml(a: &MlArgs) -> Result<Payload> {
    let order = MlOrder::new(a.alpha)?;
    let mut t = Table::new(["z", "value"]);
    for &z in &a.z {
        t.push(vec![Cell::Num(z), Cell::Num(ml_one_param(order, z)?.value)]);
    }
    Ok(Payload::Table(t))
}

fn pmf(a: &PmfArgs) -> Result<Payload> {
    let law = a.waits.resolve()?;
    let table = match a.nmax {
        Some(n) => counting_pmf(&law, a.t, n)?,
        None => counting_pmf_to_mass(&law, a.t, a.tol)?,
    };
    let mut t = Table::new(["n", "probability"]);
    for (n, &p) in table.entries.iter().enumerate() {
        t.push(vec![Cell::Int(n as u64), Cell::Num(p)]);
    }
    Ok(Payload::Table(t))
}

fn epochs(a: &EpochsArgs, common: &Common) -> Result<Payload> {
    let law = a.waits.resolve()?;
    let seq = generate_epochs(&law, a.horizon, &mut path_rng(common.seed, 0))?;
    let mut t = Table::new(["k", "epoch"]);
    for (k, &e) in seq.epochs().iter().enumerate() {
        t.push(vec![Cell::Int(k as u64 + 1), Cell::Num(e)]);
    }
    Ok(Payload::Table(t))
}

fn named_symbol(name: &str, law: &InterEventLaw) -> Result<LaplaceSymbol> {
    let bad = || {
        Error::Domain(format!(
            "unknown symbol {name:?}; use density, survival, pmf:N or mw:V"
        ))
    };
    match name.split_once(':') {
        None if name == "density" => Ok(density_symbol(law)),
        None if name == "survival" => Ok(survival_symbol(law)),
        Some(("pmf", n)) => Ok(counting_pmf_symbol(law, n.parse().map_err(|_| bad())?)),
        Some(("mw", v)) => mw_laplace_symbol(v.parse().map_err(|_| bad())?, law),
        _ => Err(bad()),
    }
}

fn invert_symbol(a: &InvertArgs) -> Result<Payload> {
    let law = a.waits.resolve()?;
    let symbol = named_symbol(&a.symbol, &law)?;
    let config = match InversionMethod::from(a.method) {
        InversionMethod::Talbot => InversionConfig::talbot(a.order.unwrap_or(32))?,
        InversionMethod::GaverStehfest => InversionConfig::gaver_stehfest(a.order.unwrap_or(14))?,
    };
    let mut t = Table::new(["t", "value"]);
    for &time in &a.t {
        t.push(vec![
            Cell::Num(time),
            Cell::Num(invert(&symbol, time, &config)?),
        ]);
    }
    Ok(Payload::Table(t))
}

/// Analytic CDF of a statistic: the fractional Gumbel closed form for the
/// maximum, the counting-pmf mixture (compound-Poisson series under
/// exponential waits) for the sum.
enum Analytic {
    Gumbel {
        order: MlOrder,
        law: JumpLaw,
        time: f64,
    },
    Mixture(StatisticCdf),
}

impl Analytic {
    fn new(s: &StatisticArgs, conv: &ConvolutionArgs) -> Result<Self> {
        Self::with_cells(s, conv, conv.grid_cells, conv.max_grid_cells)
    }

    fn with_cells(
        s: &StatisticArgs,
        conv: &ConvolutionArgs,
        grid_cells: usize,
        max_grid_cells: usize,
    ) -> Result<Self> {
        let ie = s.waits.resolve()?;
        match (StatisticKind::from(s.stat), ie) {
            (StatisticKind::Max, InterEventLaw::MittagLeffler { order }) => Ok(Analytic::Gumbel {
                order,
                law: s.jumps,
                time: s.t,
            }),
            // Exp(λ) waits: E_1(−(1 − F) λt), i.e. the order-1 case at time λt
            (StatisticKind::Max, InterEventLaw::Exponential { rate }) => Ok(Analytic::Gumbel {
                order: MlOrder::new(1.0)?,
                law: s.jumps,
                time: rate * s.t,
            }),
            (kind, ie) => {
                let opts = ConvolutionOptions {
                    grid_cells,
                    max_grid_cells,
                    error_budget: conv.conv_budget,
                };
                Ok(Analytic::Mixture(StatisticCdf::new(
                    kind, &s.jumps, &ie, s.t, conv.tol, &opts,
                )?))
            }
        }
    }

    fn eval(&self, u: f64) -> Result<f64> {
        match self {
            Analytic::Gumbel { order, law, time } => max_cdf(*order, law, *time, u),
            Analytic::Mixture(cdf) => Ok(cdf.eval(u)?.value),
        }
    }

    fn uses_convolution(&self) -> bool {
        matches!(self, Analytic::Mixture(cdf) if cdf.uses_convolution())
    }
}

fn analytic(a: &AnalyticArgs) -> Result<Payload> {
    let cdf = Analytic::new(&a.statistic, &a.convolution)?;
    let points = match &a.grid {
        Some(g) => g.points(),
        None => a.u.clone(),
    };
    let label = match a.statistic.stat {
        StatArg::Sum => "u",
        StatArg::Max => "w",
    };
    let mut t = Table::new([label, "cdf_value"]);
    // a grid from 0 is read off one lattice whose nodes include every point
    if let (true, Some(g)) = (cdf.uses_convolution(), &a.grid) {
        if g.start == 0.0 && g.stop > 0.0 && g.count >= 2 {
            let intervals = g.count - 1;
            let cells = a.convolution.grid_cells.div_ceil(intervals) * intervals;
            let ceiling = a.convolution.max_grid_cells.max(cells);
            let lattice = Analytic::with_cells(&a.statistic, &a.convolution, cells, ceiling)?;
            if let Analytic::Mixture(m) = &lattice {
                let grid = m.eval_grid(g.stop)?;
                // refinement doubles the cells, so the points stay on nodes
                let per = (grid.values.len() - 1) / intervals;
                for (k, u) in points.into_iter().enumerate() {
                    t.push(vec![Cell::Num(u), Cell::Num(grid.values[k * per])]);
                }
                return Ok(Payload::Table(t));
            }
        }
    }
    for u in points {
        t.push(vec![Cell::Num(u), Cell::Num(cdf.eval(u)?)]);
    }
    Ok(Payload::Table(t))
}

fn parse_matrix(a: &ChainArgs) -> Result<TransitionMatrix> {
    let rows = a
        .rows
        .iter()
        .map(|r| {
            r.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Domain(format!("bad matrix entry {x:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    TransitionMatrix::new(a.states.clone(), rows)
}

fn chain(a: &ChainArgs, common: &Common) -> Result<Payload> {
    let q = parse_matrix(a)?;
    let start = q.index_of(&a.start)?;
    let ie = a.waits.resolve()?;
    let mut t = Table::new(
        std::iter::once("t".to_string())
            .chain(q.states().iter().map(|s| format!("p_{}_{}", a.start, s))),
    );
    match a.method {
        ChainMethod::Analytic => {
            for &time in &a.t {
                let row = semi_markov_row(&q, start, &ie, time, a.tol)?;
                t.push(
                    std::iter::once(Cell::Num(time))
                        .chain(row.into_iter().map(Cell::Num))
                        .collect(),
                );
            }
        }
        ChainMethod::Mc => {
            let occ = simulate_chain(&q, start, &ie, &a.t, a.paths, common.seed, common.threads)?;
            for (ti, &time) in a.t.iter().enumerate() {
                let cells = (0..q.len()).map(|s| Cell::Num(occ.fraction(s, ti)));
                t.push(std::iter::once(Cell::Num(time)).chain(cells).collect());
            }
        }
    }
    Ok(Payload::Table(t))
}

fn solve(a: &SolveArgs) -> Result<Payload> {
    let kernel = match a.kernel {
        KernelArg::Delta => KernelSpec::Delta,
        KernelArg::Powerlaw => KernelSpec::power_law(
            a.alpha
                .ok_or_else(|| Error::Domain("--alpha is required".into()))?,
        )?,
    };
    let sol = solve_relaxation(&RelaxationProblem::new(kernel, a.c, a.tmax, a.h)?)?;
    let mut t = Table::new(["t", "Q", "est_error"]);
    for (&time, &q) in sol.grid.iter().zip(&sol.values) {
        t.push(vec![
            Cell::Num(time),
            Cell::Num(q),
            Cell::Num(sol.est_error),
        ]);
    }
    Ok(Payload::Table(t))
}

fn plan(s: &StatisticArgs, paths: usize, seed: u64) -> Result<SimulationPlan> {
    SimulationPlan::new(s.stat.into(), s.jumps, s.waits.resolve()?, s.t, paths, seed)
}

fn simulate(a: &SimulateArgs, common: &Common) -> Result<Payload> {
    let samples = simulate_statistic(&plan(&a.statistic, a.paths, common.seed)?, common.threads)?;
    let mut t = Table::new(["value"]);
    for x in samples {
        t.push(vec![Cell::Num(x)]);
    }
    Ok(Payload::Table(t))
}

/// Empirical mass left above the end of the CDF lattice in `compare`, as a
/// fraction of the KS threshold.
const LATTICE_TAIL: f64 = 0.02;

fn compare(a: &CompareArgs, common: &Common) -> Result<Payload> {
    let samples = simulate_statistic(&plan(&a.statistic, a.paths, common.seed)?, common.threads)?;
    let ecdf = build_ecdf(&samples)?;
    let n = samples.len();
    let cdf = Analytic::new(&a.statistic, &a.convolution)?;
    let threshold = a.ks_coef / (n as f64).sqrt();
    // lattice CDFs stop at a high empirical quantile; beyond it F(u_end) is
    // used as a lower bound and the gap is reported in cdf_error
    let lattice = match &cdf {
        Analytic::Mixture(m) if m.uses_convolution() => {
            let idx =
                (((1.0 - LATTICE_TAIL * threshold) * n as f64).ceil() as usize).clamp(1, n) - 1;
            let u_end = samples[idx];
            if u_end > 0.0 {
                let grid = m.eval_grid(u_end)?;
                let tail = 1.0 - grid.values.last().copied().unwrap_or(1.0);
                Some((grid, tail))
            } else {
                None
            }
        }
        _ => None,
    };
    let lookup = |u: f64| -> Result<f64> {
        match &lattice {
            Some((g, _)) => Ok(g.eval(u).unwrap_or_else(|| *g.values.last().unwrap())),
            None if u < 0.0 => Ok(0.0),
            None => cdf.eval(u),
        }
    };
    let mut failure = None;
    let report = ks_distance_with_threshold(
        &ecdf,
        |u| {
            lookup(u).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        threshold,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let mut record =
        json!({ "d": report.d, "n": report.n, "threshold": report.threshold, "pass": report.pass });
    if let Some((g, tail)) = &lattice {
        record["cdf_error"] = json!(g.est_error + tail);
    }
    Ok(Payload::Record(record))
}
