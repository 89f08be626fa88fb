//! Nested-commutator norms `α_j` and the derived cost parameters `λ_{j,l}`,
//! `μ_m`.
//!
//! `α_j = Σ_{γ₁…γ_j} ‖[H_{γ₁},[H_{γ₂},…,H_{γ_j}]]‖`. For Pauli Hamiltonians
//! every nested commutator of strings is zero or a multiple of one string,
//! so α is computed exactly by propagating a map string → accumulated weight
//! one depth at a time. Dense enumeration of all `Γ^j` tuples is kept as the
//! oracle and as the path for general terms.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{induced_one_norm, one_norm, HamiltonianSum, PauliTerm};
use crate::operator::{commutator, spectral_norm, DenseOperator};
use crate::pauli::PauliString;

/// Default work budget for α enumeration.
pub const DEFAULT_ALPHA_BUDGET: u128 = 10_000_000;

/// Largest total depth accepted by the composition sums.
pub const MAX_COMPOSITION_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableMode {
    Exact,
    Capped,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorTable {
    pub gamma: usize,
    pub mode: TableMode,
    pub j_cap: usize,
    pub alpha: BTreeMap<usize, f64>,
    /// Depths filled with the fallback bound instead of exact values.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capped_depths: Vec<usize>,
}

impl CommutatorTable {
    /// α for depths `1..=j_cap`. With `allow_capped`, depths past the budget
    /// are filled with [`fallback_bound`] values and the table is marked capped.
    pub fn compute(h: &HamiltonianSum, j_cap: usize, budget: u128, allow_capped: bool) -> Result<Self> {
        if j_cap == 0 {
            return Err(Error::NonPositive("j_cap"));
        }
        let exact = match h.pauli_terms() {
            Some(terms) => pauli_alpha(&terms, j_cap, budget),
            None => dense_alpha(h, j_cap, budget),
        };
        let mut alpha: BTreeMap<usize, f64> = exact
            .iter()
            .enumerate()
            .map(|(i, &a)| (i + 1, a))
            .collect();
        let mut capped_depths = Vec::new();
        if exact.len() < j_cap {
            let growth = GrowthBound::new(h);
            let mut prev = *exact.last().unwrap_or(&one_norm(h));
            for d in exact.len() + 1..=j_cap {
                let f = if d == 1 { one_norm(h) } else { growth.next(d - 1, prev) };
                if !allow_capped {
                    return Err(Error::BudgetExceeded { depth: d, fallback: f });
                }
                alpha.insert(d, f);
                capped_depths.push(d);
                prev = f;
            }
        }
        Ok(Self {
            gamma: h.gamma(),
            mode: if capped_depths.is_empty() { TableMode::Exact } else { TableMode::Capped },
            j_cap,
            alpha,
            capped_depths,
        })
    }

    /// Table from given values `α_1, α_2, …`.
    pub fn from_values(gamma: usize, values: &[f64], mode: TableMode) -> Self {
        Self {
            gamma,
            mode,
            j_cap: values.len(),
            alpha: values.iter().enumerate().map(|(i, &a)| (i + 1, a)).collect(),
            capped_depths: Vec::new(),
        }
    }

    pub fn alpha(&self, j: usize) -> Result<f64> {
        self.alpha.get(&j).copied().ok_or(Error::MissingAlpha(j))
    }
}

/// `α_j` alone; fails with the capped fallback when over budget.
pub fn alpha_comm(h: &HamiltonianSum, j: usize, budget: u128) -> Result<f64> {
    if j == 0 {
        return Err(Error::NonPositive("j"));
    }
    CommutatorTable::compute(h, j, budget, false)?.alpha(j)
}

/// Exact α by propagation in the Pauli group, stopping early once the work
/// (map entries × Γ, summed over depths) would exceed `budget`.
pub fn pauli_alpha(terms: &[PauliTerm], max_depth: usize, budget: u128) -> Vec<f64> {
    let mut layer: BTreeMap<PauliString, f64> = BTreeMap::new();
    for t in terms {
        if t.coefficient != 0.0 {
            *layer.entry(t.string).or_insert(0.0) += t.coefficient.abs();
        }
    }
    let mut out = vec![layer.values().sum()];
    let mut work: u128 = terms.len() as u128;
    while out.len() < max_depth {
        work += layer.len() as u128 * terms.len() as u128;
        if work > budget {
            break;
        }
        // [c_γ P_γ, w S] = 2 c_γ w P_γ S when the strings anticommute.
        let mut next: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (s, &w) in &layer {
            for t in terms {
                if t.coefficient != 0.0 && !t.string.commutes_with(s) {
                    let (_, p) = t.string.mul(s);
                    *next.entry(p).or_insert(0.0) += 2.0 * t.coefficient.abs() * w;
                }
            }
        }
        out.push(next.values().sum());
        layer = next;
    }
    out
}

/// α by enumerating every index tuple with dense matrices, sharing common
/// suffixes. Stops before the depth at which `Γ^j` tuples exceed `budget`.
pub fn dense_alpha(h: &HamiltonianSum, max_depth: usize, budget: u128) -> Vec<f64> {
    let gamma = h.gamma();
    let terms: Vec<DenseOperator> = (0..gamma).map(|g| h.term_dense(g)).collect();
    let mut depth = 0;
    let mut tuples: u128 = 1;
    while depth < max_depth {
        tuples = tuples.saturating_mul(gamma as u128);
        if tuples > budget {
            break;
        }
        depth += 1;
    }
    if depth == 0 {
        return Vec::new();
    }
    let per_branch: Vec<Vec<f64>> = (0..gamma)
        .into_par_iter()
        .map(|g| {
            let mut sums = vec![0.0; depth];
            dense_walk(&terms, &terms[g], 1, depth, &mut sums);
            sums
        })
        .collect();
    let mut out = vec![0.0; depth];
    for branch in &per_branch {
        for (o, v) in out.iter_mut().zip(branch) {
            *o += v;
        }
    }
    out
}

fn dense_walk(terms: &[DenseOperator], acc: &DenseOperator, d: usize, max: usize, sums: &mut [f64]) {
    let n = spectral_norm(acc).expect("dense terms are within the SVD limit");
    sums[d - 1] += n;
    if d == max || n == 0.0 {
        return;
    }
    for t in terms {
        let c = commutator(t, acc).expect("equal dimensions");
        dense_walk(terms, &c, d + 1, max, sums);
    }
}

/// Support-growth bound used when α is past the budget.
///
/// A depth-`d` nested commutator of terms acting on at most `k` sites acts
/// on at most `(k−1)d + 1` sites, and the terms touching that many sites
/// have total norm at most `((k−1)d + 1)·|||H|||₁`. Hence
/// `α_{d+1} ≤ 2·min(((k−1)d + 1)|||H|||₁, ‖H‖₁)·α_d`.
#[derive(Debug, Clone, Copy)]
pub struct GrowthBound {
    pub one_norm: f64,
    pub induced: f64,
    pub locality: usize,
}

impl GrowthBound {
    pub fn new(h: &HamiltonianSum) -> Self {
        let one = one_norm(h);
        match (h.grouping(), induced_one_norm(h)) {
            (Some(g), Ok(induced)) => Self {
                one_norm: one,
                induced,
                locality: g.iter().map(|s| s.len()).max().unwrap_or(1).max(1),
            },
            _ => Self {
                one_norm: one,
                induced: one,
                locality: 1,
            },
        }
    }

    /// Bound on `α_{d+1}` given (a bound on) `α_d`.
    pub fn next(&self, d: usize, alpha_d: f64) -> f64 {
        let sites = ((self.locality - 1) * d + 1) as f64;
        2.0 * (sites * self.induced).min(self.one_norm) * alpha_d
    }

    /// Bound on `α_j` from `α_1 = ‖H‖₁`.
    pub fn alpha(&self, j: usize) -> f64 {
        let mut a = self.one_norm;
        for d in 1..j {
            a = self.next(d, a);
        }
        a
    }
}

/// The capped fallback for `α_j`.
pub fn fallback_bound(h: &HamiltonianSum, j: usize) -> f64 {
    GrowthBound::new(h).alpha(j)
}

/// Composition rule of a base formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SecondOrder,
    FirstOrder,
    Order2p(usize),
}

impl Variant {
    pub fn from_base_order(order: usize) -> Result<Self> {
        match order {
            1 => Ok(Variant::FirstOrder),
            2 => Ok(Variant::SecondOrder),
            o if o % 2 == 0 && o > 2 => Ok(Variant::Order2p(o / 2)),
            o => Err(Error::BadBaseOrder(o)),
        }
    }

    /// Smallest part and the part step.
    fn parts(self) -> (usize, usize) {
        match self {
            Variant::FirstOrder => (1, 1),
            Variant::SecondOrder => (2, 2),
            Variant::Order2p(p) => (2 * p.max(1), 2),
        }
    }

    fn is_part(self, a: usize) -> bool {
        let (min, step) = self.parts();
        a >= min && (a - min) % step == 0
    }

    /// Values of `j` in the supremum defining `μ_m`, up to `j_cap`.
    pub fn j_range(self, m: usize, j_cap: usize) -> Vec<usize> {
        match self {
            Variant::FirstOrder => (m.max(1)..=j_cap).collect(),
            _ => (2 * m..=j_cap).step_by(2).collect(),
        }
    }
}

/// Sum and best single term of `∏_κ α[j_κ+1]` over valid compositions.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionSums {
    pub sum: f64,
    pub best: f64,
    pub best_parts: Vec<usize>,
}

/// Enumerates compositions of `j` into `l` valid parts by dynamic
/// programming over the remaining sum.
pub fn composition_sums(table: &CommutatorTable, j: usize, l: usize, variant: Variant) -> Result<CompositionSums> {
    if j > MAX_COMPOSITION_DEPTH {
        return Err(Error::PartitionBlowup(j));
    }
    let empty = CompositionSums {
        sum: 0.0,
        best: 0.0,
        best_parts: Vec::new(),
    };
    let (min_part, _) = variant.parts();
    if l == 0 || l * min_part > j {
        return Ok(empty);
    }
    let max_part = j - (l - 1) * min_part;
    let mut weight = vec![0.0; max_part + 1];
    for (a, w) in weight.iter_mut().enumerate() {
        if variant.is_part(a) {
            *w = table.alpha(a + 1)?;
        }
    }
    // sum[t][s]: total over compositions of s into t parts;
    // best[t][s]: largest single product and its first part.
    let mut sum = vec![vec![0.0; j + 1]; l + 1];
    let mut best = vec![vec![(-1.0f64, 0usize); j + 1]; l + 1];
    sum[0][0] = 1.0;
    best[0][0] = (1.0, 0);
    for t in 1..=l {
        for s in 0..=j {
            let mut acc = 0.0;
            let mut b = (-1.0f64, 0usize);
            for a in 1..=s.min(max_part) {
                if !variant.is_part(a) {
                    continue;
                }
                let rest = sum[t - 1][s - a];
                acc += weight[a] * rest;
                let (rb, _) = best[t - 1][s - a];
                if rb >= 0.0 {
                    let cand = weight[a] * rb;
                    if cand > b.0 {
                        b = (cand, a);
                    }
                }
            }
            sum[t][s] = acc;
            best[t][s] = b;
        }
    }
    if best[l][j].0 < 0.0 {
        return Ok(empty);
    }
    let mut parts = Vec::with_capacity(l);
    let (mut t, mut s) = (l, j);
    while t > 0 {
        let a = best[t][s].1;
        parts.push(a);
        s -= a;
        t -= 1;
    }
    Ok(CompositionSums {
        sum: sum[l][j],
        best: best[l][j].0,
        best_parts: parts,
    })
}

/// `λ_{j,l} = (Σ_compositions ∏ α[j_κ+1])^{1/(j+l)}`.
pub fn lambda_jl(table: &CommutatorTable, j: usize, l: usize, variant: Variant) -> Result<f64> {
    let c = composition_sums(table, j, l, variant)?;
    Ok(root(c.sum, j + l))
}

fn root(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powf(1.0 / k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuArgmax {
    pub j: usize,
    pub l: usize,
    pub partition: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuReport {
    pub m: usize,
    pub mu_m: f64,
    pub argmax: Option<MuArgmax>,
    pub mu_upper: f64,
    pub variant: Variant,
    pub j_cap: usize,
    /// Set when one of the last two `j` slices still raised the supremum.
    pub tail_flag: bool,
}

/// `μ_m = sup_{j ≤ j_cap, 1 ≤ l ≤ m} λ_{j,l}` over the variant's index set.
pub fn mu_m(table: &CommutatorTable, m: usize, j_cap: usize, variant: Variant) -> Result<MuReport> {
    if m == 0 {
        return Err(Error::NonPositive("m"));
    }
    if j_cap < 2 * m {
        return Err(Error::SizeMismatch(format!("j_cap {j_cap} is below 2m = {}", 2 * m)));
    }
    let js = variant.j_range(m, j_cap);
    let mut mu = 0.0;
    let mut upper: f64 = 0.0;
    let mut argmax: Option<MuArgmax> = None;
    let mut raised_at: Vec<bool> = Vec::with_capacity(js.len());
    for &j in &js {
        let mut raised = false;
        for l in 1..=m {
            let c = composition_sums(table, j, l, variant)?;
            let lam = root(c.sum, j + l);
            upper = upper.max(root(c.best, j + l));
            if lam > mu {
                mu = lam;
                raised = true;
                argmax = Some(MuArgmax {
                    j,
                    l,
                    partition: c.best_parts.clone(),
                });
            }
        }
        raised_at.push(raised);
    }
    let n = raised_at.len();
    let tail_flag = n >= 2 && (raised_at[n - 1] || raised_at[n - 2]);
    Ok(MuReport {
        m,
        mu_m: mu,
        argmax,
        mu_upper: 2.0 * upper,
        variant,
        j_cap,
        tail_flag,
    })
}

/// `2 · sup_{j,l} max_composition (∏ α[j_κ+1])^{1/(j+l)}`.
pub fn mu_upper_bound(table: &CommutatorTable, m: usize, j_cap: usize, variant: Variant) -> Result<f64> {
    Ok(mu_m(table, m, j_cap, variant)?.mu_upper)
}

/// Heuristic certificate for the step-size premise `Δ ≤ inf_{j≥J} α_j^{−1/j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiseCertificate {
    /// Smallest `α_j^{−1/j}` over the checked depths.
    pub observed: f64,
    /// `1/β` with `β` the geometric mean of the last two growth ratios.
    pub extrapolated: f64,
    pub radius: f64,
    pub from_depth: usize,
    pub to_depth: usize,
}

impl PremiseCertificate {
    pub fn admits(&self, delta: f64) -> bool {
        delta.abs() <= self.radius
    }
}

pub fn premise_certificate(table: &CommutatorTable, from_depth: usize) -> PremiseCertificate {
    let to_depth = table.alpha.keys().copied().max().unwrap_or(0);
    let mut observed = f64::INFINITY;
    for j in from_depth.max(1)..=to_depth {
        if let Some(&a) = table.alpha.get(&j) {
            if a > 0.0 {
                observed = observed.min(a.powf(-1.0 / j as f64));
            }
        }
    }
    let get = |j: usize| table.alpha.get(&j).copied().unwrap_or(0.0);
    let extrapolated = if to_depth >= 3 {
        let (a, b, c) = (get(to_depth - 2), get(to_depth - 1), get(to_depth));
        if a > 0.0 && b > 0.0 && c > 0.0 {
            1.0 / ((b / a) * (c / b)).sqrt()
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    PremiseCertificate {
        observed,
        extrapolated,
        radius: observed.min(extrapolated),
        from_depth,
        to_depth,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerLawRegime {
    Below,
    Critical,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticModel {
    ElectronicStructure { n: usize },
    KLocal { induced: f64, one_norm: f64, p: usize },
    PowerLaw { n: usize, d: usize, alpha: f64, regime: Option<PowerLawRegime> },
}

/// Closed-form scaling shapes with all constants set to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMu {
    pub expression: String,
    pub value: f64,
    /// Exponent of `n` in the gate count, where the model defines one.
    pub gate_exponent: Option<f64>,
}

pub fn analytic_mu(model: AnalyticModel) -> Result<AnalyticMu> {
    match model {
        AnalyticModel::ElectronicStructure { n } => {
            if n == 0 {
                return Err(Error::BadRegime("n must be positive".into()));
            }
            Ok(AnalyticMu {
                expression: "n".into(),
                value: n as f64,
                gate_exponent: Some(2.0),
            })
        }
        AnalyticModel::KLocal { induced, one_norm, p } => {
            if p == 0 || !(induced > 0.0) || !(one_norm > 0.0) || induced > one_norm {
                return Err(Error::BadRegime(format!(
                    "need p ≥ 1 and 0 < induced ≤ one_norm, got p = {p}, {induced}, {one_norm}"
                )));
            }
            let e = p as f64 / (p as f64 + 1.0);
            Ok(AnalyticMu {
                expression: format!("induced^({p}/{}) * one_norm^(1/{})", p + 1, p + 1),
                value: induced.powf(e) * one_norm.powf(1.0 - e),
                gate_exponent: None,
            })
        }
        AnalyticModel::PowerLaw { n, d, alpha, regime } => {
            if n < 2 || d == 0 || !(alpha >= 0.0) {
                return Err(Error::BadRegime(format!("n = {n}, d = {d}, alpha = {alpha}")));
            }
            let r = alpha / d as f64;
            let actual = if r < 1.0 {
                PowerLawRegime::Below
            } else if r == 1.0 {
                PowerLawRegime::Critical
            } else {
                PowerLawRegime::Above
            };
            if let Some(given) = regime {
                if given != actual {
                    return Err(Error::BadRegime(format!(
                        "alpha/d = {r} is not in the {given:?} regime"
                    )));
                }
            }
            let nf = n as f64;
            let (induced, one, expr, gate) = match actual {
                PowerLawRegime::Below => (
                    nf.powf(1.0 - r),
                    nf.powf(2.0 - r),
                    format!("n^(4/3 - {r:.4})"),
                    10.0 / 3.0 - r,
                ),
                PowerLawRegime::Critical => (nf.ln(), nf * nf.ln(), "n^(1/3) log n".to_string(), 7.0 / 3.0),
                PowerLawRegime::Above => (1.0, nf, "n^(1/3)".to_string(), 7.0 / 3.0),
            };
            Ok(AnalyticMu {
                expression: expr,
                value: induced.powf(2.0 / 3.0) * one.powf(1.0 / 3.0),
                gate_exponent: Some(gate),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{heisenberg_1d, HamiltonianSum, PauliTerm};
    use crate::pauli::Pauli;

    fn xz() -> HamiltonianSum {
        HamiltonianSum::from_pauli_terms(
            1,
            vec![
                PauliTerm::new(1.0, PauliString::single(0, Pauli::X)),
                PauliTerm::new(1.0, PauliString::single(0, Pauli::Z)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn alpha_examples() {
        let h = xz();
        assert_eq!(alpha_comm(&h, 1, DEFAULT_ALPHA_BUDGET).unwrap(), 2.0);
        assert_eq!(alpha_comm(&h, 2, DEFAULT_ALPHA_BUDGET).unwrap(), 4.0);
        // each of the four depth-3 words with a non-trivial inner commutator has norm 4
        assert_eq!(alpha_comm(&h, 3, DEFAULT_ALPHA_BUDGET).unwrap(), 16.0);
        let two = heisenberg_1d(2, true).unwrap();
        assert_eq!(alpha_comm(&two, 1, DEFAULT_ALPHA_BUDGET).unwrap(), 6.0);
        assert_eq!(alpha_comm(&two, 2, DEFAULT_ALPHA_BUDGET).unwrap(), 0.0);
    }

    #[test]
    fn heisenberg_three_sites_known_values() {
        let h = heisenberg_1d(3, true).unwrap();
        let t = CommutatorTable::compute(&h, 6, DEFAULT_ALPHA_BUDGET, false).unwrap();
        let expected = [9.0, 72.0, 864.0, 6912.0, 82944.0, 663552.0];
        for (j, e) in expected.iter().enumerate() {
            assert_eq!(t.alpha(j + 1).unwrap(), *e);
        }
        assert_eq!(t.mode, TableMode::Exact);
    }

    #[test]
    fn budget_overflow_reports_fallback() {
        let h = heisenberg_1d(4, true).unwrap();
        let err = CommutatorTable::compute(&h, 6, 200, false).unwrap_err();
        match err {
            Error::BudgetExceeded { depth, fallback } => {
                assert!(depth >= 2);
                assert!(fallback > 0.0);
            }
            e => panic!("unexpected {e:?}"),
        }
        let capped = CommutatorTable::compute(&h, 6, 200, true).unwrap();
        assert_eq!(capped.mode, TableMode::Capped);
        let exact = CommutatorTable::compute(&h, 6, DEFAULT_ALPHA_BUDGET, false).unwrap();
        for j in 1..=6 {
            assert!(exact.alpha(j).unwrap() <= capped.alpha(j).unwrap() + 1e-9);
        }
    }

    #[test]
    fn lambda_examples() {
        let t = CommutatorTable::from_values(3, &[2.0, 3.0, 5.0, 7.0, 11.0, 13.0], TableMode::Analytic);
        let l1 = lambda_jl(&t, 4, 1, Variant::SecondOrder).unwrap();
        assert_eq!(l1, 11f64.powf(1.0 / 5.0));
        let l2 = lambda_jl(&t, 4, 2, Variant::SecondOrder).unwrap();
        assert!((l2 - (5.0f64 * 5.0).powf(1.0 / 6.0)).abs() < 1e-15);
        assert!(matches!(lambda_jl(&t, 6, 1, Variant::SecondOrder), Err(Error::MissingAlpha(7))));
        let zero = CommutatorTable::from_values(3, &[2.0, 0.0, 0.0, 0.0, 0.0], TableMode::Exact);
        assert_eq!(lambda_jl(&zero, 2, 1, Variant::SecondOrder).unwrap(), 0.0);
        let r = mu_m(&zero, 1, 4, Variant::SecondOrder).unwrap();
        assert_eq!(r.mu_m, 0.0);
        assert_eq!(r.mu_upper, 0.0);
        assert!(r.argmax.is_none());
    }

    #[test]
    fn synthetic_k_local_argmax() {
        for m in 1..=4 {
            let values: Vec<f64> = (1..=2 * m + 10).map(|j| 1000.0 * 1f64.powi(j as i32 - 1)).collect();
            let t = CommutatorTable::from_values(10, &values, TableMode::Analytic);
            let r = mu_m(&t, m, 2 * m + 8, Variant::SecondOrder).unwrap();
            let a = r.argmax.unwrap();
            assert_eq!((a.j, a.l), (2 * m, m), "m = {m}");
        }
    }

    #[test]
    fn analytic_shapes() {
        let k = analytic_mu(AnalyticModel::KLocal { induced: 1.0, one_norm: 64.0, p: 2 }).unwrap();
        assert!((k.value - 4.0).abs() < 1e-12);
        let e = analytic_mu(AnalyticModel::ElectronicStructure { n: 17 }).unwrap();
        assert_eq!(e.value, 17.0);
        let p = analytic_mu(AnalyticModel::PowerLaw { n: 16, d: 1, alpha: 2.0, regime: None }).unwrap();
        assert!((p.gate_exponent.unwrap() - 7.0 / 3.0).abs() < 1e-15);
        let p = analytic_mu(AnalyticModel::PowerLaw { n: 16, d: 2, alpha: 1.0, regime: Some(PowerLawRegime::Below) }).unwrap();
        assert!((p.gate_exponent.unwrap() - (10.0 / 3.0 - 0.5)).abs() < 1e-15);
        assert!(analytic_mu(AnalyticModel::PowerLaw { n: 16, d: 1, alpha: 0.5, regime: Some(PowerLawRegime::Above) }).is_err());
        assert!(analytic_mu(AnalyticModel::KLocal { induced: 3.0, one_norm: 2.0, p: 2 }).is_err());
    }

    #[test]
    fn table_json_shape() {
        let t = CommutatorTable::from_values(2, &[2.0, 4.0], TableMode::Exact);
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(text, r#"{"gamma":2,"mode":"exact","j_cap":2,"alpha":{"1":2.0,"2":4.0}}"#);
        let back: CommutatorTable = serde_json::from_str(&text).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn premise_on_three_site_chain() {
        let h = heisenberg_1d(3, true).unwrap();
        let t = CommutatorTable::compute(&h, 12, DEFAULT_ALPHA_BUDGET, false).unwrap();
        let c = premise_certificate(&t, 1);
        assert!(c.admits(0.1));
        assert!(!c.admits(0.11));
        assert!((c.extrapolated - 1.0 / 96f64.sqrt()).abs() < 1e-12);
    }
}
