//! Trotter–Suzuki product formulas.
//!
//! A formula is unrolled into a flat list of stages `(γ, c)`; the operator is
//! the matrix product `∏_ξ exp(−i c_ξ t H_{γ_ξ})` with stage 0 leftmost.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSum, Term};
use crate::operator::{DenseOperator, HermitianEigen, Hint, StateVector, C64};

/// `s_p = (4 − 4^{1/(2p+1)})^{−1}`.
pub fn suzuki_coefficient(p: usize) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2 * p + 1) as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductFormulaSpec {
    order: usize,
    stages: Vec<(usize, f64)>,
}

impl ProductFormulaSpec {
    /// `e^{−itH_1} ⋯ e^{−itH_Γ}`.
    pub fn first_order(gamma: usize) -> Self {
        Self {
            order: 1,
            stages: (0..gamma).map(|g| (g, 1.0)).collect(),
        }
    }

    /// `e^{−itH_1/2} ⋯ e^{−itH_Γ/2} e^{−itH_Γ/2} ⋯ e^{−itH_1/2}`.
    pub fn second_order(gamma: usize) -> Self {
        let mut stages: Vec<(usize, f64)> = (0..gamma).map(|g| (g, 0.5)).collect();
        stages.extend((0..gamma).rev().map(|g| (g, 0.5)));
        Self { order: 2, stages }
    }

    /// Order `2p` formula from the Suzuki recursion.
    pub fn suzuki(gamma: usize, p: usize) -> Self {
        let mut spec = Self::second_order(gamma);
        for q in 1..p.max(1) {
            let s = suzuki_coefficient(q);
            let mid = 1.0 - 4.0 * s;
            let mut stages = Vec::with_capacity(spec.stages.len() * 5);
            for factor in [s, s, mid, s, s] {
                stages.extend(spec.stages.iter().map(|&(g, c)| (g, c * factor)));
            }
            spec = Self {
                order: 2 * q + 2,
                stages,
            };
        }
        spec
    }

    /// Formula of the given order: 1, or any even order.
    pub fn of_order(order: usize, gamma: usize) -> Result<Self> {
        match order {
            1 => Ok(Self::first_order(gamma)),
            o if o >= 2 && o % 2 == 0 => Ok(Self::suzuki(gamma, o / 2)),
            o => Err(Error::BadBaseOrder(o)),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn stages(&self) -> &[(usize, f64)] {
        &self.stages
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn evaluate(&self, h: &HamiltonianSum, t: f64) -> DenseOperator {
        let mut ev = Evaluator::new(h);
        let mut m = DMatrix::<C64>::identity(h.dim(), h.dim());
        ev.left_apply(&self.stages, t, &mut m);
        DenseOperator::from_matrix_unchecked(m, Hint::Unitary)
    }

    /// Applies the formula to a state without forming the operator.
    pub fn apply_state(&self, h: &HamiltonianSum, t: f64, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != h.dim() {
            return Err(Error::DimMismatch {
                left: h.dim(),
                right: psi.dim(),
            });
        }
        let mut ev = Evaluator::new(h);
        let mut m = DMatrix::<C64>::from_column_slice(psi.dim(), 1, psi.amplitudes().as_slice());
        ev.left_apply(&self.stages, t, &mut m);
        Ok(StateVector::from_vector(m.column(0).into_owned()))
    }
}

/// Per-evaluation exponential cache. Never shared between evaluations.
struct Evaluator<'a> {
    h: &'a HamiltonianSum,
    eigen: Vec<Option<HermitianEigen>>,
    cache: HashMap<(usize, u64), DMatrix<C64>>,
}

impl<'a> Evaluator<'a> {
    fn new(h: &'a HamiltonianSum) -> Self {
        Self {
            h,
            eigen: vec![None; h.gamma()],
            cache: HashMap::new(),
        }
    }

    fn dense_exp(&mut self, g: usize, d: &DenseOperator, theta: f64) -> &DMatrix<C64> {
        let eig = self.eigen[g].get_or_insert_with(|| HermitianEigen::new(d.matrix()));
        self.cache
            .entry((g, theta.to_bits()))
            .or_insert_with(|| eig.evolve(theta).into_matrix())
    }

    /// `M ← (∏ stages) · M`, merging adjacent stages on the same term.
    fn left_apply(&mut self, stages: &[(usize, f64)], t: f64, m: &mut DMatrix<C64>) {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(stages.len());
        for &(g, c) in stages {
            match merged.last_mut() {
                Some((lg, lc)) if *lg == g => *lc += c,
                _ => merged.push((g, c)),
            }
        }
        let h = self.h;
        for &(g, c) in merged.iter().rev() {
            match &h.terms()[g] {
                Term::Pauli(p) => p.string.left_apply_exp(c * t * p.coefficient, m),
                Term::Dense(d) => {
                    let e = self.dense_exp(g, d, c * t);
                    *m = e * &*m;
                }
            }
        }
    }
}

/// `∏_{γ=1}^{Γ} e^{−itH_γ}`.
pub fn trotter_u1(h: &HamiltonianSum, t: f64) -> DenseOperator {
    ProductFormulaSpec::first_order(h.gamma()).evaluate(h, t)
}

/// Symmetric second-order formula.
pub fn trotter_u2(h: &HamiltonianSum, t: f64) -> DenseOperator {
    ProductFormulaSpec::second_order(h.gamma()).evaluate(h, t)
}

/// Order-`2p` Suzuki formula; `p = 1` is [`trotter_u2`].
pub fn suzuki_u2p(h: &HamiltonianSum, t: f64, p: usize) -> DenseOperator {
    ProductFormulaSpec::suzuki(h.gamma(), p).evaluate(h, t)
}

/// `U_base(Δ/k)^k`.
pub fn powered_formula(
    h: &HamiltonianSum,
    delta: f64,
    k: u64,
    base: &ProductFormulaSpec,
) -> Result<DenseOperator> {
    if k == 0 {
        return Err(Error::NonPositive("k"));
    }
    Ok(base.evaluate(h, delta / k as f64).pow(k))
}
