//! Hamiltonians as ordered sums of Hermitian terms, and the benchmark models.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{spectral_norm, DenseOperator, Hint, C64};
use crate::pauli::{Pauli, PauliString, MAX_QUBITS};

/// A real multiple of a Pauli string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coefficient: f64, string: PauliString) -> Self {
        Self {
            coefficient,
            string,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Pauli(PauliTerm),
    Dense(DenseOperator),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSum {
    n_qubits: usize,
    terms: Vec<Term>,
    /// Sites each term acts on, used by the induced 1-norm.
    grouping: Option<Vec<Vec<usize>>>,
}

impl HamiltonianSum {
    pub fn from_pauli_terms(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidModel(format!("qubit count {n_qubits} out of range")));
        }
        if terms.is_empty() {
            return Err(Error::EmptyList);
        }
        let limit = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        for t in &terms {
            if !t.coefficient.is_finite() {
                return Err(Error::InvalidModel("non-finite coefficient".into()));
            }
            if t.string.support() & !limit != 0 {
                return Err(Error::InvalidModel(format!(
                    "term {} acts outside {n_qubits} qubits",
                    t.string
                )));
            }
        }
        let grouping = terms.iter().map(|t| t.string.sites()).collect();
        Ok(Self {
            n_qubits,
            terms: terms.into_iter().map(Term::Pauli).collect(),
            grouping: Some(grouping),
        })
    }

    /// General Hermitian terms; no grouping labels.
    pub fn from_dense_terms(terms: Vec<DenseOperator>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyList)?;
        let dim = first.dim();
        if !dim.is_power_of_two() {
            return Err(Error::InvalidModel(format!("dimension {dim} is not a power of two")));
        }
        for t in &terms {
            if t.dim() != dim {
                return Err(Error::DimMismatch {
                    left: dim,
                    right: t.dim(),
                });
            }
            let dev = t.hermitian_deviation();
            if dev > 1e-12 {
                return Err(Error::NotHermitian { deviation: dev });
            }
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            terms: terms
                .into_iter()
                .map(|t| Term::Dense(t.with_hint(Hint::Hermitian)))
                .collect(),
            grouping: None,
        })
    }

    pub fn with_grouping(mut self, grouping: Vec<Vec<usize>>) -> Result<Self> {
        if grouping.len() != self.terms.len() {
            return Err(Error::SizeMismatch(format!(
                "{} labels for {} terms",
                grouping.len(),
                self.terms.len()
            )));
        }
        self.grouping = Some(grouping);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Number of terms Γ.
    pub fn gamma(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn grouping(&self) -> Option<&[Vec<usize>]> {
        self.grouping.as_deref()
    }

    /// The Pauli terms, if every term is a Pauli string.
    pub fn pauli_terms(&self) -> Option<Vec<PauliTerm>> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Pauli(p) => Some(*p),
                Term::Dense(_) => None,
            })
            .collect()
    }

    pub fn term_matrix(&self, gamma: usize) -> DMatrix<C64> {
        match &self.terms[gamma] {
            Term::Pauli(p) => p.string.to_matrix(self.n_qubits) * C64::new(p.coefficient, 0.0),
            Term::Dense(d) => d.matrix().clone(),
        }
    }

    pub fn term_dense(&self, gamma: usize) -> DenseOperator {
        DenseOperator::from_matrix(self.term_matrix(gamma))
            .expect("square by construction")
            .with_hint(Hint::Hermitian)
    }

    pub fn dense(&self) -> DenseOperator {
        let d = self.dim();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for g in 0..self.gamma() {
            acc += self.term_matrix(g);
        }
        DenseOperator::from_matrix(acc)
            .expect("square by construction")
            .with_hint(Hint::Hermitian)
    }

    /// Spectral norm of term γ.
    pub fn term_norm(&self, gamma: usize) -> f64 {
        match &self.terms[gamma] {
            Term::Pauli(p) => p.coefficient.abs(),
            Term::Dense(d) => spectral_norm(d).expect("dense terms are within the SVD limit"),
        }
    }

    /// Copy with every term multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Pauli(p) => Term::Pauli(PauliTerm::new(p.coefficient * s, p.string)),
                Term::Dense(d) => Term::Dense(d.scale_real(s)),
            })
            .collect();
        Self {
            n_qubits: self.n_qubits,
            terms,
            grouping: self.grouping.clone(),
        }
    }
}

/// `Σ_γ ‖H_γ‖`.
pub fn one_norm(h: &HamiltonianSum) -> f64 {
    (0..h.gamma()).map(|g| h.term_norm(g)).sum()
}

/// Largest total norm of the terms touching any single site.
pub fn induced_one_norm(h: &HamiltonianSum) -> Result<f64> {
    let grouping = h.grouping().ok_or(Error::NoGrouping)?;
    let mut per_site: BTreeMap<usize, f64> = BTreeMap::new();
    for (g, sites) in grouping.iter().enumerate() {
        let norm = h.term_norm(g);
        let mut seen = sites.clone();
        seen.sort_unstable();
        seen.dedup();
        for s in seen {
            *per_site.entry(s).or_insert(0.0) += norm;
        }
    }
    Ok(per_site.values().copied().fold(0.0, f64::max))
}

/// Nearest-neighbour Heisenberg chain `Σ_j X_jX_{j+1} + Y_jY_{j+1} + Z_jZ_{j+1}`.
///
/// Terms are ordered by bond, then X, Y, Z. With `periodic` the wrap bond
/// `(n-1, 0)` is included, also for `n = 2` where it repeats bond `(0, 1)`.
pub fn heisenberg_1d(n: usize, periodic: bool) -> Result<HamiltonianSum> {
    if n < 2 {
        return Err(Error::TooSmall { n, min: 2 });
    }
    let bonds = if periodic { n } else { n - 1 };
    let mut terms = Vec::with_capacity(3 * bonds);
    let mut grouping = Vec::with_capacity(3 * bonds);
    for j in 0..bonds {
        let k = (j + 1) % n;
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push(PauliTerm::new(1.0, PauliString::from_sites([(j, p), (k, p)])));
            grouping.push(vec![j, k]);
        }
    }
    HamiltonianSum::from_pauli_terms(n, terms)?.with_grouping(grouping)
}

/// Integer side length of an `n`-site square lattice in `d` dimensions.
fn lattice_side(n: usize, d: usize) -> Result<usize> {
    if d == 0 || n == 0 {
        return Err(Error::NotLattice { n, d });
    }
    let guess = (n as f64).powf(1.0 / d as f64).round() as usize;
    for side in guess.saturating_sub(1)..=guess + 1 {
        if side.checked_pow(d as u32) == Some(n) {
            return Ok(side);
        }
    }
    Err(Error::NotLattice { n, d })
}

fn lattice_coords(mut i: usize, side: usize, d: usize) -> Vec<usize> {
    let mut c = Vec::with_capacity(d);
    for _ in 0..d {
        c.push(i % side);
        i /= side;
    }
    c
}

fn random_pauli<R: Rng>(rng: &mut R) -> Pauli {
    match rng.gen_range(0..3) {
        0 => Pauli::X,
        1 => Pauli::Y,
        _ => Pauli::Z,
    }
}

/// Power-law interacting lattice with one term per site pair.
///
/// Sites are numbered with the first lattice coordinate fastest. Terms are
/// emitted for `i ≤ j` in lexicographic order; the diagonal `(i, i)` is a
/// random single-site Pauli with coefficient 1, and `(i, j)` a random
/// two-site Pauli with coefficient `‖i⃗ − j⃗‖₂^{−α}`. Passing
/// `f64::INFINITY` for `alpha` keeps only nearest neighbours.
pub fn power_law_lattice(n: usize, d: usize, alpha: f64, seed: u64) -> Result<HamiltonianSum> {
    let side = lattice_side(n, d)?;
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidModel(format!("alpha must be nonnegative, got {alpha}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Vec<usize>> = (0..n).map(|i| lattice_coords(i, side, d)).collect();
    let mut terms = Vec::new();
    let mut grouping = Vec::new();
    for i in 0..n {
        for j in i..n {
            if i == j {
                terms.push(PauliTerm::new(1.0, PauliString::single(i, random_pauli(&mut rng))));
                grouping.push(vec![i]);
            } else {
                let dist2: f64 = coords[i]
                    .iter()
                    .zip(&coords[j])
                    .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
                    .sum();
                let coef = dist2.sqrt().powf(-alpha);
                let s = PauliString::from_sites([(i, random_pauli(&mut rng)), (j, random_pauli(&mut rng))]);
                terms.push(PauliTerm::new(coef, s));
                grouping.push(vec![i, j]);
            }
        }
    }
    HamiltonianSum::from_pauli_terms(n, terms)?.with_grouping(grouping)
}

/// Model descriptor exchanged with the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    pub n: usize,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default = "default_dim")]
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<TermSpec>,
}

fn default_dim() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[serde(rename = "heisenberg1d")]
    Heisenberg1d,
    PowerLaw,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coefficient: f64,
    pub paulis: BTreeMap<String, String>,
}

impl ModelSpec {
    pub fn heisenberg(n: usize, periodic: bool) -> Self {
        Self {
            model: ModelKind::Heisenberg1d,
            n,
            periodic,
            d: 1,
            alpha: None,
            seed: 0,
            terms: Vec::new(),
        }
    }

    pub fn build(&self) -> Result<HamiltonianSum> {
        match self.model {
            ModelKind::Heisenberg1d => heisenberg_1d(self.n, self.periodic),
            ModelKind::PowerLaw => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::InvalidModel("power_law requires alpha".into()))?;
                power_law_lattice(self.n, self.d, alpha, self.seed)
            }
            ModelKind::Custom => {
                let terms = self
                    .terms
                    .iter()
                    .map(|t| {
                        Ok(PauliTerm::new(
                            t.coefficient,
                            PauliString::from_site_map(&t.paulis, self.n)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                HamiltonianSum::from_pauli_terms(self.n, terms)
            }
        }
    }

    /// Custom descriptor listing the terms of a Pauli Hamiltonian.
    pub fn from_hamiltonian(h: &HamiltonianSum) -> Result<Self> {
        let terms = h
            .pauli_terms()
            .ok_or_else(|| Error::InvalidModel("only Pauli Hamiltonians serialize".into()))?
            .into_iter()
            .map(|t| TermSpec {
                coefficient: t.coefficient,
                paulis: t.string.to_site_map(),
            })
            .collect();
        Ok(Self {
            model: ModelKind::Custom,
            n: h.n_qubits(),
            periodic: false,
            d: 1,
            alpha: None,
            seed: 0,
            terms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn heisenberg_counts_and_norms() {
        let h = heisenberg_1d(3, true).unwrap();
        assert_eq!(h.gamma(), 9);
        assert_eq!(one_norm(&h), 9.0);
        let h = heisenberg_1d(4, false).unwrap();
        assert_eq!(h.gamma(), 9);
        let h = heisenberg_1d(4, true).unwrap();
        assert_eq!(one_norm(&h), 12.0);
        assert_eq!(induced_one_norm(&h).unwrap(), 6.0);
        let h = heisenberg_1d(2, true).unwrap();
        assert_eq!(h.gamma(), 6);
        assert_eq!(one_norm(&h), 6.0);
        assert!(matches!(heisenberg_1d(1, false), Err(Error::TooSmall { n: 1, min: 2 })));
    }

    #[test]
    fn heisenberg_term_order() {
        let h = heisenberg_1d(3, false).unwrap();
        let labels: Vec<String> = h
            .pauli_terms()
            .unwrap()
            .iter()
            .map(|t| t.string.label(3))
            .collect();
        assert_eq!(labels, ["XXI", "YYI", "ZZI", "IXX", "IYY", "IZZ"]);
    }

    #[test]
    fn heisenberg_two_sites_matches_hand_matrix() {
        // XX + YY + ZZ on two qubits: diag(1, -1, -1, 1) plus 2 on the singlet/triplet flip.
        let h = heisenberg_1d(2, false).unwrap().dense();
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let two = C64::new(2.0, 0.0);
        let expected = DenseOperator::new(
            4,
            vec![one, o, o, o, o, -one, two, o, o, two, -one, o, o, o, o, one],
        )
        .unwrap();
        assert!(h.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn power_law_norms() {
        let h = power_law_lattice(4, 1, 2.0, 0).unwrap();
        let terms = h.pauli_terms().unwrap();
        // Order: (0,0) (0,1) (0,2) (0,3) (1,1) ...
        assert_eq!(terms.len(), 10);
        assert_eq!(terms[2].coefficient, 0.25);
        assert_eq!(terms[1].coefficient, 1.0);
        assert!((terms[3].coefficient - 1.0 / 9.0).abs() < 1e-15);
        // site 1: self 1, neighbours 1 + 1, distance two 1/4
        let induced = induced_one_norm(&h).unwrap();
        assert!((induced - 3.25).abs() < 1e-15);
        assert!(induced <= one_norm(&h));

        let h = power_law_lattice(9, 2, 1.0, 3).unwrap();
        let idx = |a: usize, b: usize| -> usize {
            // position of pair (a, b) with a < b in the emission order
            let mut k = 0;
            for i in 0..9 {
                for j in i..9 {
                    if (i, j) == (a, b) {
                        return k;
                    }
                    k += 1;
                }
            }
            unreachable!()
        };
        // (0,0) is site 0, (1,1) is site 4.
        let c = h.pauli_terms().unwrap()[idx(0, 4)].coefficient;
        assert!((c - 1.0 / 2f64.sqrt()).abs() < 1e-15);

        let h = power_law_lattice(4, 1, f64::INFINITY, 1).unwrap();
        let t = h.pauli_terms().unwrap();
        assert_eq!(t[1].coefficient, 1.0);
        assert_eq!(t[2].coefficient, 0.0);
        assert_eq!(t[3].coefficient, 0.0);

        assert!(matches!(power_law_lattice(5, 2, 1.0, 0), Err(Error::NotLattice { n: 5, d: 2 })));
    }

    #[test]
    fn power_law_is_deterministic_in_seed() {
        let a = power_law_lattice(4, 1, 1.5, 11).unwrap();
        let b = power_law_lattice(4, 1, 1.5, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn norms_of_simple_sums() {
        let h = HamiltonianSum::from_pauli_terms(1, vec![PauliTerm::new(2.0, PauliString::single(0, Pauli::X))]).unwrap();
        assert_eq!(one_norm(&h), 2.0);
        assert_eq!(induced_one_norm(&h).unwrap(), 2.0);
        let zero = heisenberg_1d(3, false).unwrap().scaled(0.0);
        assert_eq!(one_norm(&zero), 0.0);
        let dense = HamiltonianSum::from_dense_terms(vec![crate::operator::pauli_z()]).unwrap();
        assert!(matches!(induced_one_norm(&dense), Err(Error::NoGrouping)));
        assert!((one_norm(&dense) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_json_round_trip() {
        let spec = ModelSpec {
            model: ModelKind::PowerLaw,
            n: 4,
            periodic: false,
            d: 1,
            alpha: Some(2.0),
            seed: 5,
            terms: vec![],
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);

        let h = heisenberg_1d(3, true).unwrap();
        let custom = ModelSpec::from_hamiltonian(&h).unwrap();
        let text = serde_json::to_string(&custom).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap().dense(), h.dense());

        let bad = r#"{"model":"heisenberg1d","n":3,"bogus":1}"#;
        assert!(serde_json::from_str::<ModelSpec>(bad).is_err());
    }

    proptest! {
        #[test]
        fn builders_are_hermitian_and_induced_is_bounded(
            n in 2usize..6, periodic in any::<bool>(), alpha in 0.0f64..4.0, seed in 0u64..50
        ) {
            let h = heisenberg_1d(n, periodic).unwrap();
            prop_assert!(h.dense().hermitian_deviation() <= 1e-12);
            prop_assert!(induced_one_norm(&h).unwrap() <= one_norm(&h));
            let bonds = if periodic { n } else { n - 1 };
            prop_assert_eq!(h.gamma(), 3 * bonds);
            prop_assert_eq!(one_norm(&h), 3.0 * bonds as f64);

            let p = power_law_lattice(n, 1, alpha, seed).unwrap();
            prop_assert!(p.dense().hermitian_deviation() <= 1e-12);
            prop_assert!(induced_one_norm(&p).unwrap() <= one_norm(&p) + 1e-12);
            let mut k = 0;
            let terms = p.pauli_terms().unwrap();
            for i in 0..n {
                for j in i..n {
                    let expected = if i == j { 1.0 } else { ((j - i) as f64).powf(-alpha) };
                    prop_assert_eq!(terms[k].coefficient, expected);
                    k += 1;
                }
            }
        }
    }
}
