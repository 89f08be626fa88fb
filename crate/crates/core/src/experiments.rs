//! Convergence studies, bound-versus-measurement checks and the Heisenberg
//! step-count benchmark.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutator::{
    composition_sums, mu_m, premise_certificate, CommutatorTable, PremiseCertificate, Variant,
    DEFAULT_ALPHA_BUDGET,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{heisenberg_1d, HamiltonianSum};
use crate::operator::{exp_hermitian, spectral_norm, DenseOperator};
use crate::product_formula::ProductFormulaSpec;
use crate::scheme::{mpf_evolve, mpf_operator, query_count, MpfScheme, PowerStrategy};

/// Errors at or below this are treated as rounding noise in slope fits.
pub const NOISE_FLOOR: f64 = 1e-11;
/// A study whose errors all sit below this is reported as exact.
pub const EXACT_TOL: f64 = 1e-10;
/// Rounding allowance when comparing a measured error against a bound.
pub const DOMINANCE_SLACK: f64 = 1e-10;
pub const DEFAULT_R_CAP: u64 = 1_000_000;

/// `exp(−iHt)`.
pub fn exact_evolution(h: &HamiltonianSum, t: f64) -> DenseOperator {
    exp_hermitian(&h.dense(), t).expect("Hamiltonian sums are Hermitian")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evolver {
    U1,
    U2,
    U2p(usize),
    Mpf(MpfScheme),
}

impl Evolver {
    pub fn step(&self, h: &HamiltonianSum, delta: f64) -> Result<DenseOperator> {
        match self {
            Evolver::U1 => Ok(ProductFormulaSpec::first_order(h.gamma()).evaluate(h, delta)),
            Evolver::U2 => Ok(ProductFormulaSpec::second_order(h.gamma()).evaluate(h, delta)),
            Evolver::U2p(p) => {
                if *p == 0 {
                    return Err(Error::NonPositive("p"));
                }
                Ok(ProductFormulaSpec::suzuki(h.gamma(), *p).evaluate(h, delta))
            }
            Evolver::Mpf(s) => mpf_operator(h, delta, s),
        }
    }

    /// Expected one-step error order.
    pub fn local_order(&self) -> usize {
        match self {
            Evolver::U1 => 2,
            Evolver::U2 => 3,
            Evolver::U2p(p) => 2 * p + 1,
            Evolver::Mpf(s) => s.base_order * s.half_order + 1,
        }
    }

    pub fn one_step_error(&self, h: &HamiltonianSum, delta: f64) -> Result<f64> {
        let u = self.step(h, delta)?;
        spectral_norm(&u.checked_sub(&exact_evolution(h, delta))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub dt_grid: Vec<f64>,
    pub errors: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub r_squared: Option<f64>,
    /// Number of points above the noise floor used in the fit.
    pub fit_points: usize,
    /// Every error is at rounding level.
    pub exact: bool,
}

/// Least-squares slope and `R²` of `log y` against `log x`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    slope.is_finite().then_some((slope, r2))
}

fn check_grid(dt_grid: &[f64]) -> Result<()> {
    if dt_grid.len() < 4 {
        return Err(Error::DegenerateGrid(format!("{} points, need at least 4", dt_grid.len())));
    }
    if dt_grid.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::DegenerateGrid("step sizes must be positive".into()));
    }
    if dt_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DegenerateGrid("step sizes must be strictly decreasing".into()));
    }
    Ok(())
}

pub fn convergence_study(h: &HamiltonianSum, evolver: &Evolver, dt_grid: &[f64]) -> Result<ConvergenceStudy> {
    check_grid(dt_grid)?;
    let errors = dt_grid
        .par_iter()
        .map(|&dt| evolver.one_step_error(h, dt))
        .collect::<Result<Vec<f64>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = dt_grid
        .iter()
        .zip(&errors)
        .filter(|(_, &e)| e > NOISE_FLOOR)
        .map(|(&d, &e)| (d, e))
        .unzip();
    let fit = log_log_fit(&xs, &ys);
    Ok(ConvergenceStudy {
        dt_grid: dt_grid.to_vec(),
        fitted_slope: fit.map(|f| f.0),
        r_squared: fit.map(|f| f.1),
        fit_points: xs.len(),
        exact: errors.iter().all(|&e| e <= EXACT_TOL),
        errors,
    })
}

/// Geometric grid with ratio 2 whose top step has one-step error below 0.1.
pub fn default_grid(h: &HamiltonianSum, evolver: &Evolver, points: usize) -> Result<Vec<f64>> {
    let mut top = 1.0;
    for _ in 0..40 {
        if evolver.one_step_error(h, top)? < 0.1 {
            break;
        }
        top /= 2.0;
    }
    Ok((0..points).map(|i| top / 2f64.powi(i as i32)).collect())
}

/// Norm bounds of the error terms of a second-order based MPF step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Bounds on the coefficient operators of `k^{−j}`, keyed by even `j`.
    pub e_tilde_bounds: BTreeMap<usize, f64>,
    pub f_tilde_bound: f64,
    /// Partial sum of the total-error series up to `truncation_depth`.
    pub thm_bound: f64,
    pub truncation_depth: usize,
    pub truncated: bool,
    /// Ratio of the last two `j` slices of the series.
    pub tail_ratio: Option<f64>,
    /// Set when the series is not visibly converging at the truncation depth.
    pub tail_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub delta: f64,
    pub budget: ErrorBudget,
    pub measured: f64,
    pub dominated: bool,
    pub premise: PremiseCertificate,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Evaluates the bound series for one step `Δ` of a second-order based MPF.
pub fn error_budget(table: &CommutatorTable, delta: f64, scheme: &MpfScheme, j_cap: usize) -> Result<ErrorBudget> {
    if scheme.base_order != 2 {
        return Err(Error::BadBaseOrder(scheme.base_order));
    }
    let m = scheme.half_order;
    if j_cap < 2 * m {
        return Err(Error::SizeMismatch(format!("j_cap {j_cap} is below 2m = {}", 2 * m)));
    }
    let v = Variant::SecondOrder;
    let s = |j: usize, l: usize| composition_sums(table, j, l, v).map(|c| c.sum);
    let d = delta.abs();
    let mut e_tilde = BTreeMap::new();
    for j in (2..=j_cap).step_by(2) {
        let mut acc = 0.0;
        for l in 1..=(j / 2).min(m.saturating_sub(1)) {
            acc += d.powi(l as i32 - 1) / factorial(l) * s(j, l)?;
        }
        e_tilde.insert(j, d.powi(j as i32 + 1) * acc);
    }
    let mut f_sum = 0.0;
    for j in (2 * m..=j_cap).step_by(2) {
        f_sum += d.powi((j - 2 * m) as i32) * s(j, m)?;
    }
    let f_tilde = d.powi(3 * m as i32) / factorial(m) * f_sum;
    let mut slices = Vec::new();
    for j in (2 * m..=j_cap).step_by(2) {
        let mut t = 0.0;
        for l in 1..=m {
            t += d.powi((j + l) as i32) / factorial(l) * s(j, l)?;
        }
        slices.push(t);
    }
    let thm = scheme.a_norm * slices.iter().sum::<f64>();
    let tail_ratio = match slices.as_slice() {
        [.., a, b] if *a > 0.0 => Some(b / a),
        _ => None,
    };
    Ok(ErrorBudget {
        e_tilde_bounds: e_tilde,
        f_tilde_bound: f_tilde,
        thm_bound: thm,
        truncation_depth: j_cap,
        truncated: true,
        tail_ratio,
        tail_flag: tail_ratio.is_some_and(|r| r >= 1.0),
    })
}

/// Bound series and measured `‖U_MP(Δ) − U(Δ)‖` side by side.
pub fn error_bound_evaluate(
    h: &HamiltonianSum,
    delta: f64,
    scheme: &MpfScheme,
    table: &CommutatorTable,
    j_cap: usize,
) -> Result<BoundCheck> {
    let premise = premise_certificate(table, 1);
    if !premise.admits(delta) {
        return Err(Error::PremiseViolated(format!(
            "Δ = {delta} exceeds the estimated radius {:.6}",
            premise.radius
        )));
    }
    let budget = error_budget(table, delta, scheme, j_cap)?;
    let u = mpf_operator(h, delta, scheme)?;
    let measured = spectral_norm(&u.checked_sub(&exact_evolution(h, delta))?)?;
    Ok(BoundCheck {
        delta,
        dominated: measured <= budget.thm_bound + DOMINANCE_SLACK,
        budget,
        measured,
        premise,
    })
}

/// `4/3 + 2/(3m)`.
pub fn theory_exponent(m: usize) -> f64 {
    4.0 / 3.0 + 2.0 / (3.0 * m as f64)
}

pub const LIMIT_EXPONENT: f64 = 4.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub eps: f64,
    #[serde(default = "default_true")]
    pub periodic: bool,
    #[serde(default = "default_strategy")]
    pub strategy: PowerStrategy,
    #[serde(default = "default_r_cap")]
    pub r_cap: u64,
}

fn default_true() -> bool {
    true
}

fn default_strategy() -> PowerStrategy {
    PowerStrategy::Natural
}

fn default_r_cap() -> u64 {
    DEFAULT_R_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub n: usize,
    pub m: usize,
    pub r: u64,
    pub queries: f64,
    pub queries_amplified: f64,
    pub error: f64,
    /// Initial guess `⌈μ̂T⌉` the search started from.
    pub start: u64,
    /// Every evaluated `(r, error)` pair was non-increasing in `r`.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub m: usize,
    pub n_values: Vec<usize>,
    pub query_counts: Vec<f64>,
    pub query_counts_amplified: Vec<f64>,
    pub fitted_exponent: f64,
    pub fitted_exponent_amplified: f64,
    pub theory_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub cells: Vec<BenchmarkCell>,
    pub scaling: Vec<ScalingResult>,
}

/// Smallest `r ≤ cap` with `err(r) ≤ eps`, assuming `err` decreases in `r`.
/// Returns `(r, err(r), monotone)` where `monotone` reports whether the
/// evaluated points were consistent with that assumption.
pub fn minimal_steps(
    start: u64,
    cap: u64,
    eps: f64,
    mut err: impl FnMut(u64) -> Result<f64>,
) -> Result<(u64, f64, bool)> {
    let mut seen: BTreeMap<u64, f64> = BTreeMap::new();
    let mut eval = |r: u64, seen: &mut BTreeMap<u64, f64>| -> Result<f64> {
        if let Some(&e) = seen.get(&r) {
            return Ok(e);
        }
        let e = err(r)?;
        seen.insert(r, e);
        Ok(e)
    };
    let start = start.clamp(1, cap);
    // bracket (lo, hi]: err(lo) > eps (or lo = 0), err(hi) ≤ eps
    let (mut lo, mut hi);
    if eval(start, &mut seen)? <= eps {
        hi = start;
        lo = 0;
        let mut r = start;
        while r > 1 {
            let next = r / 2;
            if eval(next, &mut seen)? > eps {
                lo = next;
                break;
            }
            hi = next;
            r = next;
        }
    } else {
        lo = start;
        loop {
            if lo >= cap {
                return Err(Error::Infeasible { cap });
            }
            let next = lo.saturating_mul(2).min(cap);
            if eval(next, &mut seen)? <= eps {
                hi = next;
                break;
            }
            lo = next;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid, &mut seen)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let values: Vec<f64> = seen.values().copied().collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
    Ok((hi, seen[&hi], monotone))
}

fn benchmark_cell(n: usize, m: usize, cfg: &BenchmarkConfig) -> Result<BenchmarkCell> {
    let h = heisenberg_1d(n, cfg.periodic)?;
    let scheme = MpfScheme::build(m, 2, cfg.strategy)?;
    let t = n as f64;
    let start = CommutatorTable::compute(&h, 2 * m + 2, DEFAULT_ALPHA_BUDGET, true)
        .and_then(|table| mu_m(&table, m, 2 * m + 1, Variant::SecondOrder))
        .map(|r| (r.mu_m * t).ceil().max(1.0) as u64)
        .unwrap_or(1);
    let exact = exact_evolution(&h, t);
    let (r, error, monotone) = minimal_steps(start, cfg.r_cap, cfg.eps, |r| {
        let u = mpf_evolve(&h, t, r, &scheme)?;
        spectral_norm(&u.checked_sub(&exact)?)
    })?;
    Ok(BenchmarkCell {
        n,
        m,
        r,
        queries: query_count(r, &scheme, false),
        queries_amplified: query_count(r, &scheme, true),
        error,
        start,
        monotone,
    })
}

/// Minimal step counts for `T = n` on periodic Heisenberg chains and the
/// fitted growth exponent of the query count in `n` for each `m`.
pub fn heisenberg_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    if cfg.n_values.is_empty() || cfg.m_values.is_empty() {
        return Err(Error::EmptyList);
    }
    if !(cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(Error::NonPositive("eps"));
    }
    if let Some(&n) = cfg.n_values.iter().find(|&&n| n > 10) {
        return Err(Error::DimTooLarge {
            dim: 1 << n,
            limit: 1 << 10,
        });
    }
    let pairs: Vec<(usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| cfg.m_values.iter().map(move |&m| (n, m)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(n, m)| benchmark_cell(n, m, cfg))
        .collect::<Result<Vec<_>>>()?;
    let scaling = if cfg.n_values.len() >= 3 {
        cfg.m_values
            .iter()
            .map(|&m| scaling_for(&cells, m))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(BenchmarkResult { cells, scaling })
}

fn scaling_for(cells: &[BenchmarkCell], m: usize) -> Result<ScalingResult> {
    let row: Vec<&BenchmarkCell> = cells.iter().filter(|c| c.m == m).collect();
    let ns: Vec<f64> = row.iter().map(|c| c.n as f64).collect();
    let q: Vec<f64> = row.iter().map(|c| c.queries).collect();
    let qa: Vec<f64> = row.iter().map(|c| c.queries_amplified).collect();
    let fit = |ys: &[f64]| {
        log_log_fit(&ns, ys)
            .map(|f| f.0)
            .ok_or_else(|| Error::DegenerateGrid(format!("cannot fit exponent for m = {m}")))
    };
    Ok(ScalingResult {
        m,
        n_values: row.iter().map(|c| c.n).collect(),
        fitted_exponent: fit(&q)?,
        fitted_exponent_amplified: fit(&qa)?,
        query_counts: q,
        query_counts_amplified: qa,
        theory_exponent: theory_exponent(m),
    })
}
