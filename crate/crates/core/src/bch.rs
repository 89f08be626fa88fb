//! Baker–Campbell–Hausdorff terms and the variation-of-parameters expansion.
//!
//! `φ_k(Y_1,…,Y_k) = k⁻² Σ_σ (−1)^{d_σ} C(k−1,d_σ)⁻¹ [Y_{σ1},[Y_{σ2},…,Y_{σk}]]`
//! is enumerated over permutations built from the right, so permutations
//! sharing a suffix share the inner commutator. The symmetric terms `Φ_k` of
//! the second-order formula are first reduced to one real coefficient per
//! word `(γ₁,…,γ_k)` and only then turned into operators.

use std::collections::BTreeMap;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::commutator::{premise_certificate, CommutatorTable, GrowthBound, DEFAULT_ALPHA_BUDGET};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSum, PauliTerm};
use crate::operator::{
    matrix_exponential, spectral_norm, unitary_log, DenseOperator, HermitianEigen, Hint, C64,
    STRUCTURE_TOL, ZERO,
};
use crate::pauli::{i_pow, PauliString};

pub const PHI_DEPTH_CAP: usize = 8;
pub const SYMMETRIC_DEPTH_CAP: usize = 7;
/// Leaf budget for the symmetric-term enumeration.
pub const SYMMETRIC_WORK_BUDGET: u128 = 200_000_000;
/// Depth of the α table used for convergence premises.
pub const PREMISE_DEPTH: usize = 8;

/// Permutation of `1..=k`, stored by its images.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// `images[i]` is `σ(i+1)`, 1-based.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let k = images.len();
        if k == 0 {
            return Err(Error::NotPermutation(0));
        }
        let mut seen = vec![false; k];
        for &v in &images {
            if v == 0 || v > k || seen[v - 1] {
                return Err(Error::NotPermutation(k));
            }
            seen[v - 1] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            images: (1..=k.max(1)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn descent_count(&self) -> usize {
        self.images.windows(2).filter(|w| w[1] < w[0]).count()
    }
}

/// `|{i : σ(i+1) < σ(i)}|`.
pub fn descent_count(sigma: &Permutation) -> usize {
    sigma.descent_count()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `(−1)^d / C(k−1, d)`.
fn descent_weight(k: usize, d: usize) -> f64 {
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    sign / binomial(k - 1, d)
}

fn is_zero(m: &DMatrix<C64>) -> bool {
    m.iter().all(|z| *z == ZERO)
}

pub fn phi_k(ys: &[DenseOperator]) -> Result<DenseOperator> {
    let k = ys.len();
    if k == 0 {
        return Err(Error::EmptyList);
    }
    if k > PHI_DEPTH_CAP {
        return Err(Error::DepthCap {
            depth: k,
            cap: PHI_DEPTH_CAP,
        });
    }
    let dim = ys[0].dim();
    for y in ys {
        if y.dim() != dim {
            return Err(Error::DimMismatch {
                left: dim,
                right: y.dim(),
            });
        }
    }
    if k == 1 {
        return Ok(ys[0].clone().with_hint(Hint::None));
    }
    let parts: Vec<DMatrix<C64>> = (0..k)
        .into_par_iter()
        .map(|last| {
            let mut out = DMatrix::<C64>::zeros(dim, dim);
            phi_walk(ys, 1 << last, last, 0, ys[last].matrix(), k - 1, &mut out);
            out
        })
        .collect();
    let mut total = DMatrix::<C64>::zeros(dim, dim);
    for p in &parts {
        total += p;
    }
    total /= C64::from((k * k) as f64);
    Ok(DenseOperator::from_matrix_unchecked(total, Hint::None))
}

/// Prepends unused arguments to the suffix commutator `acc`, whose leftmost
/// argument index is `head`.
fn phi_walk(
    ys: &[DenseOperator],
    used: u32,
    head: usize,
    descents: usize,
    acc: &DMatrix<C64>,
    remaining: usize,
    out: &mut DMatrix<C64>,
) {
    let k = ys.len();
    if remaining == 0 {
        *out += acc * C64::from(descent_weight(k, descents));
        return;
    }
    if is_zero(acc) {
        return;
    }
    for a in 0..k {
        if used & (1 << a) != 0 {
            continue;
        }
        let y = ys[a].matrix();
        let c = y * acc - acc * y;
        phi_walk(ys, used | (1 << a), a, descents + usize::from(a > head), &c, remaining - 1, out);
    }
}

/// Truncated series `Σ_{k ≤ k_max} Σ_i φ_k(X^i, Y^{k−i}) / (i!(k−i)!)` for
/// `log(e^X e^Y)`.
pub fn bch_two_term_series(x: &DenseOperator, y: &DenseOperator, k_max: usize) -> Result<DenseOperator> {
    if k_max == 0 {
        return Err(Error::NonPositive("k_max"));
    }
    if k_max > PHI_DEPTH_CAP {
        return Err(Error::DepthCap {
            depth: k_max,
            cap: PHI_DEPTH_CAP,
        });
    }
    let mut z = DenseOperator::zeros(x.dim());
    for k in 1..=k_max {
        for i in 0..=k {
            let mut args = vec![x.clone(); i];
            args.extend(std::iter::repeat(y.clone()).take(k - i));
            let term = phi_k(&args)?;
            z.axpy(C64::from(1.0 / (factorial(i) * factorial(k - i))), &term)?;
        }
    }
    Ok(z)
}

/// `‖log(e^X e^Y) − series(k_max)‖` for anti-Hermitian `X`, `Y`.
pub fn bch_two_term_check(x: &DenseOperator, y: &DenseOperator, k_max: usize) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let nx = spectral_norm(x)?;
    let ny = spectral_norm(y)?;
    if nx + ny > 0.25 {
        return Err(Error::ConvergenceRisk(format!(
            "‖X‖ + ‖Y‖ = {:.4} exceeds 1/4",
            nx + ny
        )));
    }
    let exact = unitary_log(&matrix_exponential(x)?.checked_mul(&matrix_exponential(y)?)?)?;
    let series = bch_two_term_series(x, y, k_max)?;
    spectral_norm(&exact.checked_sub(&series)?)
}

#[derive(Debug, Clone)]
pub struct BchTermReport {
    pub k: usize,
    pub phi_value: DenseOperator,
    pub norm: f64,
    /// `|s|^k α_k / k²`.
    pub bound: f64,
    pub converged_premise: bool,
    /// Set for even `k`, where the term vanishes by symmetry.
    pub structural_zero: bool,
}

/// Real coefficients `c_w` with `Φ_k = (−is)^k Σ_w c_w [H_{w₁},…,H_{w_k}]`,
/// indexed by the word read as a base-Γ number.
pub fn symmetric_word_coefficients(gamma: usize, k: usize) -> Result<Vec<f64>> {
    if gamma == 0 {
        return Err(Error::EmptyList);
    }
    if k == 0 {
        return Err(Error::NonPositive("k"));
    }
    if k > SYMMETRIC_DEPTH_CAP {
        return Err(Error::DepthCap {
            depth: k,
            cap: SYMMETRIC_DEPTH_CAP,
        });
    }
    let letters = 2 * gamma;
    let compositions = (binomial(k + letters - 1, letters - 1)).round() as u128;
    let work = compositions.saturating_mul(factorial(k) as u128);
    let words = (gamma as u128).saturating_pow(k as u32);
    if work > SYMMETRIC_WORK_BUDGET || words > SYMMETRIC_WORK_BUDGET {
        return Err(Error::WorkBudget {
            work: work.max(words),
            budget: SYMMETRIC_WORK_BUDGET,
        });
    }
    let perms = permutations_with_descents(k);
    let letter_gamma = |l: usize| if l < gamma { l } else { letters - 1 - l };
    let mut coef = vec![0.0; words as usize];
    let scale = 1.0 / ((k * k) as f64 * 2f64.powi(k as i32));
    // letters of the current multiset in nondecreasing order, mapped to γ
    let mut word = Vec::with_capacity(k);
    let mut multiplicity = vec![0usize; letters];
    fn compose(
        letter: usize,
        left: usize,
        letters: usize,
        multiplicity: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if letter == letters - 1 {
            multiplicity[letter] = left;
            visit(multiplicity);
            return;
        }
        for i in 0..=left {
            multiplicity[letter] = i;
            compose(letter + 1, left - i, letters, multiplicity, visit);
        }
    }
    let mut visit = |mult: &[usize]| {
        word.clear();
        let mut denom = 1.0;
        for (l, &i) in mult.iter().enumerate() {
            denom *= factorial(i);
            word.extend(std::iter::repeat(letter_gamma(l)).take(i));
        }
        let c = scale / denom;
        for (sigma, d) in &perms {
            let idx = sigma.iter().fold(0usize, |acc, &p| acc * gamma + word[p]);
            coef[idx] += c * descent_weight(k, *d);
        }
    };
    compose(0, k, letters, &mut multiplicity, &mut visit);
    Ok(coef)
}

/// All permutations of `0..k` (0-based images) with their descent counts.
fn permutations_with_descents(k: usize) -> Vec<(Vec<usize>, usize)> {
    let mut out = Vec::with_capacity(factorial(k) as usize);
    let mut current = Vec::with_capacity(k);
    fn rec(k: usize, used: u32, current: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, usize)>) {
        if current.len() == k {
            let d = current.windows(2).filter(|w| w[1] < w[0]).count();
            out.push((current.clone(), d));
            return;
        }
        for a in 0..k {
            if used & (1 << a) == 0 {
                current.push(a);
                rec(k, used | (1 << a), current, out);
                current.pop();
            }
        }
    }
    rec(k, 0, &mut current, &mut out);
    out
}

/// `Σ_w c_w [H_{w₁},…,H_{w_k}]` without the `(−is)^k` prefactor.
fn word_sum(h: &HamiltonianSum, k: usize, coef: &[f64]) -> Result<DenseOperator> {
    match h.pauli_terms() {
        Some(terms) => Ok(pauli_word_sum(h, &terms, k, coef)),
        None => dense_word_sum(h, k, coef),
    }
}

fn pauli_word_sum(h: &HamiltonianSum, terms: &[PauliTerm], k: usize, coef: &[f64]) -> DenseOperator {
    let gamma = terms.len();
    let mut acc: BTreeMap<PauliString, C64> = BTreeMap::new();
    // suffix walk: `value · string` is the commutator of the chosen suffix
    fn walk(
        terms: &[PauliTerm],
        coef: &[f64],
        depth: usize,
        k: usize,
        index: usize,
        place: usize,
        value: C64,
        string: PauliString,
        acc: &mut BTreeMap<PauliString, C64>,
    ) {
        if depth == k {
            let c = coef[index];
            if c != 0.0 {
                *acc.entry(string).or_insert(ZERO) += value * c;
            }
            return;
        }
        let gamma = terms.len();
        for (g, t) in terms.iter().enumerate() {
            if t.string.commutes_with(&string) {
                continue;
            }
            let (phase, product) = t.string.mul(&string);
            let v = value * i_pow(phase) * (2.0 * t.coefficient);
            walk(terms, coef, depth + 1, k, index + g * place, place * gamma, v, product, acc);
        }
    }
    for (g, t) in terms.iter().enumerate() {
        walk(terms, coef, 1, k, g, gamma, C64::from(t.coefficient), t.string, &mut acc);
    }
    let dim = h.dim();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (s, c) in &acc {
        if *c != ZERO {
            m += s.to_matrix(h.n_qubits()) * *c;
        }
    }
    DenseOperator::from_matrix_unchecked(m, Hint::None)
}

fn dense_word_sum(h: &HamiltonianSum, k: usize, coef: &[f64]) -> Result<DenseOperator> {
    let gamma = h.gamma();
    let terms: Vec<DenseOperator> = (0..gamma).map(|g| h.term_dense(g)).collect();
    let parts: Vec<DMatrix<C64>> = (0..gamma)
        .into_par_iter()
        .map(|g| {
            let mut out = DMatrix::<C64>::zeros(h.dim(), h.dim());
            dense_walk(&terms, coef, 1, k, g, gamma, terms[g].matrix(), &mut out);
            out
        })
        .collect();
    let mut total = DMatrix::<C64>::zeros(h.dim(), h.dim());
    for p in &parts {
        total += p;
    }
    Ok(DenseOperator::from_matrix_unchecked(total, Hint::None))
}

#[allow(clippy::too_many_arguments)]
fn dense_walk(
    terms: &[DenseOperator],
    coef: &[f64],
    depth: usize,
    k: usize,
    index: usize,
    place: usize,
    acc: &DMatrix<C64>,
    out: &mut DMatrix<C64>,
) {
    if depth == k {
        let c = coef[index];
        if c != 0.0 {
            *out += acc * C64::from(c);
        }
        return;
    }
    if is_zero(acc) {
        return;
    }
    let gamma = terms.len();
    for (g, t) in terms.iter().enumerate() {
        let c = t.matrix() * acc - acc * t.matrix();
        dense_walk(terms, coef, depth + 1, k, index + g * place, place * gamma, &c, out);
    }
}

/// `Φ_k` at `s = 1`, i.e. with letters `X_γ = −iH_γ`.
fn symmetric_unit_term(h: &HamiltonianSum, k: usize) -> Result<DenseOperator> {
    let coef = symmetric_word_coefficients(h.gamma(), k)?;
    let sum = word_sum(h, k, &coef)?;
    Ok(sum.scale(C64::new(0.0, -1.0).powu(k as u32)).with_hint(Hint::AntiHermitian))
}

/// α table to [`PREMISE_DEPTH`], falling back to the growth bound past the budget.
fn premise_table(h: &HamiltonianSum) -> Result<CommutatorTable> {
    CommutatorTable::compute(h, PREMISE_DEPTH, DEFAULT_ALPHA_BUDGET, true)
}

pub fn symmetric_bch_term(h: &HamiltonianSum, k: usize, s: f64) -> Result<BchTermReport> {
    if k == 0 {
        return Err(Error::NonPositive("k"));
    }
    if k > SYMMETRIC_DEPTH_CAP {
        return Err(Error::DepthCap {
            depth: k,
            cap: SYMMETRIC_DEPTH_CAP,
        });
    }
    let table = premise_table(h)?;
    let alpha_k = match table.alpha(k) {
        Ok(a) => a,
        Err(_) => GrowthBound::new(h).alpha(k),
    };
    let bound = s.abs().powi(k as i32) * alpha_k / (k * k) as f64;
    let converged_premise = premise_certificate(&table, 1).admits(s);
    if k % 2 == 0 {
        return Ok(BchTermReport {
            k,
            phi_value: DenseOperator::zeros(h.dim()).with_hint(Hint::AntiHermitian),
            norm: 0.0,
            bound,
            converged_premise,
            structural_zero: true,
        });
    }
    let phi = symmetric_unit_term(h, k)?.scale_real(s.powi(k as i32));
    let norm = spectral_norm(&phi)?;
    Ok(BchTermReport {
        k,
        phi_value: phi,
        norm,
        bound,
        converged_premise,
        structural_zero: false,
    })
}

/// `E_j`, the coefficient of `s^j` in the exponent of `U₂(s)`.
pub fn e_j_operator(h: &HamiltonianSum, j: usize) -> Result<DenseOperator> {
    if j == 0 {
        return Err(Error::NonPositive("j"));
    }
    if j % 2 == 0 {
        return Err(Error::EvenDepth(j));
    }
    if j > SYMMETRIC_DEPTH_CAP {
        return Err(Error::DepthCap {
            depth: j,
            cap: SYMMETRIC_DEPTH_CAP,
        });
    }
    symmetric_unit_term(h, j)
}

/// `Z_K = −iHs + Σ_{odd 3 ≤ k ≤ K} Φ_k(s)`, with `U₂(s) ≈ exp(Z_K)`.
pub fn effective_generator(h: &HamiltonianSum, s: f64, big_k: usize) -> Result<DenseOperator> {
    if big_k == 0 {
        return Err(Error::NonPositive("K"));
    }
    if big_k % 2 == 0 {
        return Err(Error::EvenDepth(big_k));
    }
    if big_k > SYMMETRIC_DEPTH_CAP {
        return Err(Error::DepthCap {
            depth: big_k,
            cap: SYMMETRIC_DEPTH_CAP,
        });
    }
    let cert = premise_certificate(&premise_table(h)?, 1);
    if !cert.admits(s) {
        return Err(Error::ConvergenceRisk(format!(
            "|s| = {} exceeds the estimated radius {:.6}",
            s.abs(),
            cert.radius
        )));
    }
    let mut z = h.dense().scale(C64::new(0.0, -s));
    for k in (3..=big_k).step_by(2) {
        let e = symmetric_unit_term(h, k)?;
        z.axpy(C64::from(s.powi(k as i32)), &e)?;
    }
    Ok(z.with_hint(Hint::AntiHermitian))
}

#[derive(Debug, Clone)]
pub struct DysonExpansion {
    pub approx: DenseOperator,
    /// `‖B‖^p / p!`.
    pub remainder_bound: f64,
    /// Sum of the per-order quadrature tolerances that were met.
    pub quadrature_tolerance: f64,
    /// Gauss–Legendre points per axis used for each order `l = 1..p−1`.
    pub quadrature_orders: Vec<usize>,
}

pub const DYSON_RELATIVE_TOL: f64 = 1e-10;
pub const DYSON_MAX_NODES: usize = 64;

/// `e^A + Σ_{l<p} I_l` with `I_l` the ordered-simplex integrals of
/// `e^{A(1−s₁)} B e^{A(s₁−s₂)} B ⋯ B e^{A s_l}`.
pub fn dyson_expansion(a: &DenseOperator, b: &DenseOperator, p: usize) -> Result<DysonExpansion> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    for op in [a, b] {
        let dev = op.anti_hermitian_deviation();
        if dev > STRUCTURE_TOL {
            return Err(Error::NotAntiHermitian { deviation: dev });
        }
    }
    if p == 0 {
        return Err(Error::NonPositive("p"));
    }
    let nb = spectral_norm(b)?;
    let dim = a.dim();
    // work in the eigenbasis of iA, where e^{At} is diagonal
    let ia = a.matrix() * C64::new(0.0, 1.0);
    let eig = HermitianEigen::new(&ia);
    let v = &eig.vectors;
    let bt = v.adjoint() * b.matrix() * v;
    let phases = |t: f64| -> Vec<C64> { eig.values.iter().map(|&l| C64::new(0.0, -l * t).exp()).collect() };
    let mut total = matrix_exponential(a)?.into_matrix();
    let mut tolerance = 0.0;
    let mut orders = Vec::new();
    for l in 1..p {
        let scale = nb.powi(l as i32) / factorial(l);
        let tol = DYSON_RELATIVE_TOL * scale;
        if nb == 0.0 {
            orders.push(0);
            continue;
        }
        let mut prev = simplex_integral(&bt, &phases, l, 4, dim);
        let mut n = 8;
        loop {
            let cur = simplex_integral(&bt, &phases, l, n, dim);
            let diff = (&cur - &prev).norm();
            prev = cur;
            if diff <= tol {
                break;
            }
            if n >= DYSON_MAX_NODES {
                return Err(Error::ConvergenceRisk(format!(
                    "order-{l} simplex quadrature did not settle below {tol:.3e} with {n} nodes"
                )));
            }
            n += 4;
        }
        total += v * prev * v.adjoint();
        tolerance += tol;
        orders.push(n);
    }
    Ok(DysonExpansion {
        approx: DenseOperator::from_matrix_unchecked(total, Hint::Unitary),
        remainder_bound: nb.powi(p as i32) / factorial(p),
        quadrature_tolerance: tolerance,
        quadrature_orders: orders,
    })
}

/// Tensor Gauss–Legendre rule on the ordered simplex via
/// `s₁ = u₁, s₂ = u₁u₂, …`, Jacobian `u₁^{l−1} u₂^{l−2} ⋯`.
fn simplex_integral(
    bt: &DMatrix<C64>,
    phases: &dyn Fn(f64) -> Vec<C64>,
    l: usize,
    n: usize,
    dim: usize,
) -> DMatrix<C64> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("n > 0"));
    let nodes: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| ((x + 1.0) / 2.0, w / 2.0))
        .collect();
    let total_points = n.pow(l as u32);
    let diag_scale = |m: &mut DMatrix<C64>, d: &[C64]| {
        for (i, mut row) in m.row_iter_mut().enumerate() {
            row *= d[i];
        }
    };
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let mut idx = vec![0usize; l];
    for point in 0..total_points {
        let mut rem = point;
        for slot in idx.iter_mut() {
            *slot = rem % n;
            rem /= n;
        }
        let mut s = Vec::with_capacity(l);
        let mut weight = 1.0;
        let mut prod = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            let (u, w) = nodes[i];
            prod *= u;
            s.push(prod);
            weight *= w * u.powi((l - 1 - axis) as i32);
        }
        // e^{A(1−s₁)} B e^{A(s₁−s₂)} ⋯ B e^{A s_l}, built from the right
        let mut m = DMatrix::<C64>::from_diagonal(&nalgebra::DVector::from_vec(phases(s[l - 1])));
        for q in (0..l).rev() {
            m = bt * m;
            let left = if q == 0 { 1.0 } else { s[q - 1] };
            diag_scale(&mut m, &phases(left - s[q]));
        }
        out += m * C64::from(weight);
    }
    out
}
