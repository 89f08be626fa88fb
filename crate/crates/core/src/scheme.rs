//! Multi-product formula schemes: order conditions, power schedules, the
//! classically combined MPF operator and the step/query count formulas.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSum;
use crate::operator::{DenseOperator, StateVector, C64};
use crate::product_formula::ProductFormulaSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpfScheme {
    pub base_order: usize,
    #[serde(rename = "m")]
    pub half_order: usize,
    pub powers: Vec<u64>,
    pub coefficients: Vec<f64>,
    pub a_norm: f64,
    pub k_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerStrategy {
    Natural,
    MinANorm,
}

/// Exponents `q` of the order-condition rows `Σ_j a_j k_j^{−q} = δ_{q0}`.
pub fn order_rows(base_order: usize, m: usize) -> Result<Vec<u32>> {
    if m == 0 {
        return Err(Error::NonPositive("m"));
    }
    match base_order {
        1 => Ok((0..m as u32).collect()),
        2 => Ok((0..m as u32).map(|q| 2 * q).collect()),
        b if b % 2 == 0 && b > 2 => {
            if m < b / 2 {
                return Err(Error::SizeMismatch(format!(
                    "half order {m} is below the base half order {}",
                    b / 2
                )));
            }
            let mut rows = vec![0];
            rows.extend((b as u32..=(2 * m as u32 - 2)).step_by(2));
            Ok(rows)
        }
        b => Err(Error::BadBaseOrder(b)),
    }
}

/// Number of powers `M` a scheme needs.
pub fn power_count(base_order: usize, m: usize) -> Result<usize> {
    Ok(order_rows(base_order, m)?.len())
}

fn validate_powers(powers: &[u64]) -> Result<()> {
    if powers.iter().any(|&k| k == 0) {
        return Err(Error::NonPositive("power"));
    }
    let mut sorted = powers.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicatePowers);
    }
    Ok(())
}

/// Closed-form Lagrange weights `a_j = ∏_{i≠j} x_i/(x_i − x_j)` in the nodes
/// `x = k^{−e}`, evaluated as `∏_{i≠j} k_j^e/(k_j^e − k_i^e)`.
pub fn lagrange_weights(powers: &[u64], exponent: u32) -> Result<Vec<f64>> {
    validate_powers(powers)?;
    let pw: Vec<f64> = powers
        .iter()
        .map(|&k| (k as u128).pow(exponent) as f64)
        .collect();
    let mut out = Vec::with_capacity(powers.len());
    for j in 0..pw.len() {
        let mut a = 1.0;
        for i in 0..pw.len() {
            if i != j {
                let diff = pw[j] - pw[i];
                if diff == 0.0 {
                    return Err(Error::SingularSystem(format!(
                        "nodes for powers {} and {} coincide",
                        powers[i], powers[j]
                    )));
                }
                a *= pw[j] / diff;
            }
        }
        out.push(a);
    }
    Ok(out)
}

/// Solves the order-condition system directly by LU.
pub fn direct_solve(powers: &[u64], rows: &[u32]) -> Result<Vec<f64>> {
    validate_powers(powers)?;
    if powers.len() != rows.len() {
        return Err(Error::SizeMismatch(format!(
            "{} powers for {} order conditions",
            powers.len(),
            rows.len()
        )));
    }
    let n = rows.len();
    let a = DMatrix::<f64>::from_fn(n, n, |r, c| (powers[c] as f64).powi(-(rows[r] as i32)));
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("LU factorization failed".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    Ok(x.iter().copied().collect())
}

/// Builds the scheme whose coefficients satisfy the order conditions.
pub fn solve_order_condition(powers: &[u64], m: usize, base_order: usize) -> Result<MpfScheme> {
    let rows = order_rows(base_order, m)?;
    if powers.len() != rows.len() {
        return Err(Error::SizeMismatch(format!(
            "base order {base_order}, m = {m} needs {} powers, got {}",
            rows.len(),
            powers.len()
        )));
    }
    validate_powers(powers)?;
    let coefficients = match base_order {
        1 => lagrange_weights(powers, 1)?,
        2 => lagrange_weights(powers, 2)?,
        _ => direct_solve(powers, &rows)?,
    };
    Ok(MpfScheme::from_parts(base_order, m, powers.to_vec(), coefficients))
}

impl MpfScheme {
    pub fn from_parts(base_order: usize, m: usize, powers: Vec<u64>, coefficients: Vec<f64>) -> Self {
        let a_norm = coefficients.iter().map(|a| a.abs()).sum();
        let k_norm = powers.iter().map(|&k| k as f64).sum();
        Self {
            base_order,
            half_order: m,
            powers,
            coefficients,
            a_norm,
            k_norm,
        }
    }

    /// Natural or optimized scheme for a base order.
    pub fn build(m: usize, base_order: usize, strategy: PowerStrategy) -> Result<Self> {
        let powers = power_schedule_for(m, base_order, strategy)?;
        solve_order_condition(&powers, m, base_order)
    }

    /// Largest order-condition violation relative to `‖a‖₁`, including `|Σa − 1|`.
    pub fn residual(&self) -> f64 {
        let rows = match order_rows(self.base_order, self.half_order) {
            Ok(r) => r,
            Err(_) => return f64::INFINITY,
        };
        let mut worst: f64 = 0.0;
        for q in rows {
            let s: f64 = self
                .coefficients
                .iter()
                .zip(&self.powers)
                .map(|(a, &k)| a * (k as f64).powi(-(q as i32)))
                .sum();
            let target = if q == 0 { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs() / self.a_norm.max(1.0));
        }
        worst
    }

    pub fn base_formula(&self, gamma: usize) -> Result<ProductFormulaSpec> {
        ProductFormulaSpec::of_order(self.base_order, gamma)
    }

    /// Checks stored norms and sizes; used on schemes read from JSON.
    pub fn validate(&self) -> Result<()> {
        if self.powers.len() != self.coefficients.len() {
            return Err(Error::SizeMismatch("powers and coefficients differ in length".into()));
        }
        validate_powers(&self.powers)?;
        order_rows(self.base_order, self.half_order)?;
        let fresh = Self::from_parts(
            self.base_order,
            self.half_order,
            self.powers.clone(),
            self.coefficients.clone(),
        );
        if (fresh.a_norm - self.a_norm).abs() > 1e-12 * fresh.a_norm.max(1.0)
            || (fresh.k_norm - self.k_norm).abs() > 0.0
        {
            return Err(Error::SizeMismatch("stored norms do not match the data".into()));
        }
        Ok(())
    }
}

/// Power schedule for the second-order base.
pub fn power_schedule(m: usize, strategy: PowerStrategy) -> Result<Vec<u64>> {
    power_schedule_for(m, 2, strategy)
}

/// Power schedule for any supported base order.
///
/// `MinANorm` searches increasing subsets of `[1, 8m]`, exhaustively while the
/// subset count stays below [`EXHAUSTIVE_LIMIT`] and by single-swap descent
/// from the natural schedule otherwise. Ties go to the smaller `‖k‖₁`, then
/// the lexicographically smaller list.
pub fn power_schedule_for(m: usize, base_order: usize, strategy: PowerStrategy) -> Result<Vec<u64>> {
    let count = power_count(base_order, m)?;
    let natural: Vec<u64> = (1..=count as u64).collect();
    match strategy {
        PowerStrategy::Natural => Ok(natural),
        PowerStrategy::MinANorm => {
            let cap = 8 * m as u64;
            let rows = order_rows(base_order, m)?;
            if binomial(cap, count as u64) <= EXHAUSTIVE_LIMIT {
                Ok(exhaustive_min(cap, count, |p| a_norm_of(p, base_order, &rows)))
            } else {
                Ok(descent_min(natural, cap, |p| a_norm_of(p, base_order, &rows)))
            }
        }
    }
}

pub const EXHAUSTIVE_LIMIT: u128 = 2_000_000;

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc
}

fn a_norm_of(powers: &[u64], base_order: usize, rows: &[u32]) -> f64 {
    let coeffs = match base_order {
        1 => lagrange_weights(powers, 1),
        2 => lagrange_weights(powers, 2),
        _ => direct_solve(powers, rows),
    };
    match coeffs {
        Ok(c) => c.iter().map(|a| a.abs()).sum(),
        Err(_) => f64::INFINITY,
    }
}

/// `(a_norm, k_norm, powers)` ordering used by the searches.
fn better(a: f64, p: &[u64], best_a: f64, best: &[u64]) -> bool {
    // Norms within rounding are treated as ties.
    let tol = 1e-12 * best_a.max(1.0);
    if a < best_a - tol {
        return true;
    }
    if a > best_a + tol {
        return false;
    }
    let ks: u64 = p.iter().sum();
    let kb: u64 = best.iter().sum();
    ks < kb || (ks == kb && p < best)
}

fn exhaustive_min(cap: u64, count: usize, norm: impl Fn(&[u64]) -> f64) -> Vec<u64> {
    let mut cur: Vec<u64> = (1..=count as u64).collect();
    let mut best = cur.clone();
    let mut best_a = norm(&cur);
    loop {
        // next combination in lexicographic order
        let mut i = count;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if cur[i] < cap - (count - 1 - i) as u64 {
                break;
            }
            if i == 0 {
                return best;
            }
        }
        cur[i] += 1;
        for t in i + 1..count {
            cur[t] = cur[t - 1] + 1;
        }
        let a = norm(&cur);
        if better(a, &cur, best_a, &best) {
            best_a = a;
            best = cur.clone();
        }
    }
}

fn descent_min(start: Vec<u64>, cap: u64, norm: impl Fn(&[u64]) -> f64) -> Vec<u64> {
    let mut best = start;
    let mut best_a = norm(&best);
    loop {
        let mut improved = false;
        for pos in 0..best.len() {
            for v in 1..=cap {
                if best.contains(&v) {
                    continue;
                }
                let mut cand = best.clone();
                cand[pos] = v;
                cand.sort_unstable();
                let a = norm(&cand);
                if better(a, &cand, best_a, &best) {
                    best_a = a;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

/// `Σ_j a_j U_base(Δ/k_j)^{k_j}`, summed in scheme order.
pub fn mpf_operator(h: &HamiltonianSum, delta: f64, scheme: &MpfScheme) -> Result<DenseOperator> {
    let base = scheme.base_formula(h.gamma())?;
    let parts: Vec<DenseOperator> = scheme
        .powers
        .par_iter()
        .map(|&k| base.evaluate(h, delta / k as f64).pow(k))
        .collect();
    let mut acc = DenseOperator::zeros(h.dim());
    for (a, u) in scheme.coefficients.iter().zip(&parts) {
        acc.axpy(C64::new(*a, 0.0), u)?;
    }
    Ok(acc)
}

/// `U_MP(T/r)^r`.
pub fn mpf_evolve(h: &HamiltonianSum, t: f64, r: u64, scheme: &MpfScheme) -> Result<DenseOperator> {
    if r == 0 {
        return Err(Error::NonPositive("r"));
    }
    Ok(mpf_operator(h, t / r as f64, scheme)?.pow(r))
}

/// One MPF step applied to a state; the result is renormalized only on request.
pub fn mpf_apply(
    h: &HamiltonianSum,
    delta: f64,
    scheme: &MpfScheme,
    psi: &StateVector,
    normalize: bool,
) -> Result<StateVector> {
    let base = scheme.base_formula(h.gamma())?;
    let mut acc = nalgebra::DVector::<C64>::zeros(psi.dim());
    for (a, &k) in scheme.coefficients.iter().zip(&scheme.powers) {
        let mut v = psi.clone();
        for _ in 0..k {
            v = base.apply_state(h, delta / k as f64, &v)?;
        }
        acc += v.amplitudes() * C64::new(*a, 0.0);
    }
    let out = StateVector::from_vector(acc);
    Ok(if normalize { out.normalized() } else { out })
}

/// `⌈2μT (2μT‖a‖₁/ε)^{1/(2m)}⌉`.
pub fn required_steps(mu_m: f64, t: f64, eps: f64, m: usize, a_norm: f64) -> Result<u64> {
    if !(mu_m > 0.0) {
        return Err(Error::NonPositive("mu_m"));
    }
    if !(t > 0.0) {
        return Err(Error::NonPositive("T"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::NonPositive("eps"));
    }
    if m == 0 {
        return Err(Error::NonPositive("m"));
    }
    if !(a_norm > 0.0) {
        return Err(Error::NonPositive("a_norm"));
    }
    let x = 2.0 * mu_m * t;
    let r = x * (x * a_norm / eps).powf(1.0 / (2 * m) as f64);
    // Values within rounding of an integer are not pushed up by one.
    let nearest = r.round();
    let steps = if (r - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest
    } else {
        r.ceil()
    };
    Ok((steps as u64).max(1))
}

/// `r‖k‖₁`, times `⌈‖a‖₁⌉` with amplification.
pub fn query_count(r: u64, scheme: &MpfScheme, include_amplification: bool) -> f64 {
    let base = r as f64 * scheme.k_norm;
    if include_amplification {
        base * (scheme.a_norm - 1e-12).ceil().max(1.0)
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn richardson_coefficients() {
        let s = solve_order_condition(&[1], 1, 2).unwrap();
        assert_eq!(s.coefficients, vec![1.0]);
        let s = solve_order_condition(&[1, 2], 2, 2).unwrap();
        assert!(close(&s.coefficients, &[-1.0 / 3.0, 4.0 / 3.0], 1e-14));
        assert!((s.a_norm - 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(s.k_norm, 3.0);
        let s = solve_order_condition(&[1, 2, 3], 3, 2).unwrap();
        assert!(close(&s.coefficients, &[1.0 / 24.0, -16.0 / 15.0, 81.0 / 40.0], 1e-13));
        assert!((s.coefficients.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(s.residual() < 1e-12);
    }

    #[test]
    fn first_order_and_higher_base_systems() {
        // Σa = 1, Σ a/k = 0 for k = (1, 2)
        let s = solve_order_condition(&[1, 2], 2, 1).unwrap();
        assert!(close(&s.coefficients, &[-1.0, 2.0], 1e-14));
        // base 4, m = 3: rows {0, 4}
        let s = solve_order_condition(&[1, 2], 3, 4).unwrap();
        assert!(close(&s.coefficients, &[-1.0 / 15.0, 16.0 / 15.0], 1e-14));
        assert!(s.residual() < 1e-12);
        assert_eq!(order_rows(4, 2).unwrap(), vec![0]);
        assert_eq!(order_rows(6, 5).unwrap(), vec![0, 6, 8]);
    }

    #[test]
    fn order_condition_errors() {
        assert!(matches!(solve_order_condition(&[2, 2], 2, 2), Err(Error::DuplicatePowers)));
        assert!(matches!(solve_order_condition(&[1, 2], 3, 2), Err(Error::SizeMismatch(_))));
        assert!(matches!(solve_order_condition(&[1], 1, 3), Err(Error::BadBaseOrder(3))));
        assert!(matches!(solve_order_condition(&[0], 1, 2), Err(Error::NonPositive(_))));
        assert!(matches!(solve_order_condition(&[], 0, 2), Err(Error::NonPositive("m"))));
    }

    #[test]
    fn closed_form_matches_direct_solve() {
        for m in 1..=6 {
            let powers: Vec<u64> = (1..=m as u64).collect();
            let rows = order_rows(2, m).unwrap();
            let lag = lagrange_weights(&powers, 2).unwrap();
            let dir = direct_solve(&powers, &rows).unwrap();
            for (a, b) in lag.iter().zip(&dir) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_powers_stay_exact() {
        let s = solve_order_condition(&[99_999, 100_000], 2, 2).unwrap();
        assert!(s.residual() < 1e-8);
    }

    #[test]
    fn natural_schedules() {
        assert_eq!(power_schedule(1, PowerStrategy::Natural).unwrap(), vec![1]);
        assert_eq!(power_schedule(2, PowerStrategy::Natural).unwrap(), vec![1, 2]);
        assert_eq!(power_schedule(1, PowerStrategy::MinANorm).unwrap(), vec![1]);
    }

    /// Brute force over all subsets with an independent weight formula.
    fn brute_min(m: usize) -> (f64, Vec<u64>) {
        let cap = 8 * m as u64;
        let mut best: Option<(f64, u64, Vec<u64>)> = None;
        let mut stack: Vec<Vec<u64>> = vec![vec![]];
        while let Some(p) = stack.pop() {
            if p.len() == m {
                let x: Vec<f64> = p.iter().map(|&k| 1.0 / (k as f64 * k as f64)).collect();
                let mut norm = 0.0;
                for j in 0..m {
                    let mut w = 1.0;
                    for i in 0..m {
                        if i != j {
                            w *= x[i] / (x[i] - x[j]);
                        }
                    }
                    norm += f64::abs(w);
                }
                let ks: u64 = p.iter().sum();
                let replace = match &best {
                    None => true,
                    Some((bn, bk, bp)) => {
                        norm < bn - 1e-9 || ((norm - bn).abs() <= 1e-9 && (ks < *bk || (ks == *bk && p < *bp)))
                    }
                };
                if replace {
                    best = Some((norm, ks, p.clone()));
                }
                continue;
            }
            let start = p.last().map_or(1, |&l| l + 1);
            for v in (start..=cap).rev() {
                let mut q = p.clone();
                q.push(v);
                stack.push(q);
            }
        }
        let (n, _, p) = best.unwrap();
        (n, p)
    }

    #[test]
    fn min_a_norm_matches_brute_force() {
        for m in [2, 3] {
            let p = power_schedule(m, PowerStrategy::MinANorm).unwrap();
            let (oracle_norm, oracle) = brute_min(m);
            assert_eq!(p, oracle);
            let s = solve_order_condition(&p, m, 2).unwrap();
            assert!((s.a_norm - oracle_norm).abs() < 1e-9);
            let nat = MpfScheme::build(m, 2, PowerStrategy::Natural).unwrap();
            assert!(s.a_norm <= nat.a_norm);
            assert_eq!(p[0], 1);
        }
        assert_eq!(power_schedule(2, PowerStrategy::MinANorm).unwrap(), vec![1, 16]);
    }

    #[test]
    fn greedy_search_improves_on_natural() {
        // C(48, 6) exceeds the exhaustive limit
        let p = power_schedule(6, PowerStrategy::MinANorm).unwrap();
        let s = solve_order_condition(&p, 6, 2).unwrap();
        let nat = MpfScheme::build(6, 2, PowerStrategy::Natural).unwrap();
        assert!(s.a_norm <= nat.a_norm);
        assert!(s.residual() < 1e-8);
    }

    #[test]
    fn step_counts() {
        assert_eq!(required_steps(0.5, 1.0, 0.5, 3, 0.5).unwrap(), 1);
        // 20 · (20 · (5/3) / 1e-3)^{1/4}
        let r = required_steps(1.0, 10.0, 1e-3, 2, 5.0 / 3.0).unwrap();
        let expected = (20.0 * (20.0 * 5.0 / 3.0 / 1e-3f64).powf(0.25)).ceil() as u64;
        assert_eq!(r, expected);
        assert_eq!(r, 271);
        let r2 = required_steps(1.0, 20.0, 1e-3, 2, 5.0 / 3.0).unwrap();
        assert!(r2 > 2 * r);
        assert!(required_steps(0.0, 1.0, 0.1, 1, 1.0).is_err());
        assert!(required_steps(1.0, 1.0, 1.5, 1, 1.0).is_err());
    }

    #[test]
    fn query_counts() {
        let s1 = MpfScheme::build(1, 2, PowerStrategy::Natural).unwrap();
        assert_eq!(query_count(1, &s1, true), 1.0);
        let s2 = MpfScheme::build(2, 2, PowerStrategy::Natural).unwrap();
        assert_eq!(query_count(10, &s2, true), 60.0);
        assert_eq!(query_count(10, &s2, false), 30.0);
    }

    #[test]
    fn scheme_json_round_trip() {
        let s = MpfScheme::build(3, 2, PowerStrategy::Natural).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"m\":3"));
        let back: MpfScheme = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        back.validate().unwrap();
    }

    proptest! {
        #[test]
        fn residual_invariant(mut powers in proptest::collection::btree_set(1u64..60, 1..6)) {
            let powers: Vec<u64> = std::mem::take(&mut powers).into_iter().collect();
            let m = powers.len();
            for base in [1usize, 2] {
                let s = solve_order_condition(&powers, m, base).unwrap();
                prop_assert!((s.coefficients.iter().sum::<f64>() - 1.0).abs() <= 1e-10 * s.a_norm.max(1.0));
                prop_assert!(s.residual() <= 1e-8);
                let fresh = MpfScheme::from_parts(base, m, s.powers.clone(), s.coefficients.clone());
                prop_assert_eq!(fresh.a_norm, s.a_norm);
            }
        }
    }
}
