//! Dense complex operators and state vectors.
//!
//! Everything here works on explicit `dim x dim` matrices backed by
//! [`nalgebra::DMatrix`]. Structural hints (unitary, Hermitian, ...) are
//! advisory: they are only checked when [`DenseOperator::verify_hint`] is
//! called, so hot loops pay nothing for them.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Absolute tolerance used by structural checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Largest dimension for which [`spectral_norm`] runs a full SVD.
pub const MAX_SVD_DIM: usize = 1024;

/// Structural tag carried alongside an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Hint {
    Unitary,
    Hermitian,
    AntiHermitian,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: DMatrix<C64>,
    hint: Hint,
}

impl DenseOperator {
    /// Builds a `dim x dim` operator from row-major entries.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::BadEntries {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(Self {
            mat: DMatrix::from_row_slice(dim, dim, &entries),
            hint: Hint::None,
        })
    }

    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::NonSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        Ok(Self {
            mat,
            hint: Hint::None,
        })
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>, hint: Hint) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat, hint }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
            hint: Hint::Unitary,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
            hint: Hint::None,
        }
    }

    /// Builds a real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        Self {
            mat: DMatrix::from_diagonal(&d),
            hint: Hint::Hermitian,
        }
    }

    pub fn with_hint(mut self, hint: Hint) -> Self {
        self.hint = hint;
        self
    }

    pub fn hint(&self) -> Hint {
        self.hint
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    /// Row-major copy of the entries.
    pub fn entries(&self) -> Vec<C64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                out.push(self.mat[(r, c)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let hint = match self.hint {
            Hint::Unitary => Hint::Unitary,
            Hint::Hermitian => Hint::Hermitian,
            Hint::AntiHermitian => Hint::AntiHermitian,
            Hint::None => Hint::None,
        };
        Self {
            mat: self.mat.adjoint(),
            hint,
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            mat: &self.mat * factor,
            hint: Hint::None,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        let hint = match self.hint {
            Hint::Hermitian | Hint::AntiHermitian => self.hint,
            _ => Hint::None,
        };
        Self {
            mat: &self.mat * C64::new(factor, 0.0),
            hint,
        }
    }

    /// `self += factor * other`, in place.
    pub fn axpy(&mut self, factor: C64, other: &DenseOperator) -> Result<()> {
        check_dims(self, other)?;
        self.mat.zip_apply(&other.mat, |a, b| *a += factor * b);
        self.hint = Hint::None;
        Ok(())
    }

    pub fn checked_mul(&self, other: &DenseOperator) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            mat: &self.mat * &other.mat,
            hint: Hint::None,
        })
    }

    pub fn checked_add(&self, other: &DenseOperator) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            mat: &self.mat + &other.mat,
            hint: Hint::None,
        })
    }

    pub fn checked_sub(&self, other: &DenseOperator) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            mat: &self.mat - &other.mat,
            hint: Hint::None,
        })
    }

    /// Integer power by binary exponentiation.
    pub fn pow(&self, k: u64) -> Self {
        let mut result: Option<DMatrix<C64>> = None;
        let mut base = self.mat.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => &r * &base,
                });
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        let hint = if self.hint == Hint::Unitary {
            Hint::Unitary
        } else {
            Hint::None
        };
        Self {
            mat: result.unwrap_or_else(|| DMatrix::identity(self.dim(), self.dim())),
            hint,
        }
    }

    /// Max entrywise |A - A†|.
    pub fn hermitian_deviation(&self) -> f64 {
        max_abs_diff(&self.mat, &self.mat.adjoint())
    }

    /// Max entrywise |A + A†|.
    pub fn anti_hermitian_deviation(&self) -> f64 {
        let sum = &self.mat + self.mat.adjoint();
        sum.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Spectral norm of A†A - I.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let g = self.mat.adjoint() * &self.mat - DMatrix::<C64>::identity(d, d);
        norm_of(&g)
    }

    /// Checks the structural hint, if any.
    pub fn verify_hint(&self) -> Result<()> {
        match self.hint {
            Hint::None => Ok(()),
            Hint::Hermitian => {
                let dev = self.hermitian_deviation();
                if dev > 1e-12 {
                    Err(Error::NotHermitian { deviation: dev })
                } else {
                    Ok(())
                }
            }
            Hint::AntiHermitian => {
                let dev = self.anti_hermitian_deviation();
                if dev > STRUCTURE_TOL {
                    Err(Error::NotAntiHermitian { deviation: dev })
                } else {
                    Ok(())
                }
            }
            Hint::Unitary => {
                let dev = self.unitarity_defect();
                if dev > STRUCTURE_TOL * self.dim() as f64 {
                    Err(Error::ConvergenceRisk(format!(
                        "unitary hint violated: |A^dag A - I| = {dev:.3e}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Max entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        max_abs_diff(&self.mat, &other.mat)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn determinant(&self) -> C64 {
        self.mat.clone().determinant()
    }
}

fn check_dims(a: &DenseOperator, b: &DenseOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

impl Add<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        self.checked_add(rhs).expect("dimension mismatch in add")
    }
}

impl Sub<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        self.checked_sub(rhs).expect("dimension mismatch in sub")
    }
}

impl Mul<&DenseOperator> for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        self.checked_mul(rhs).expect("dimension mismatch in mul")
    }
}

impl Neg for &DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        DenseOperator {
            mat: -self.mat.clone(),
            hint: self.hint,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    normalized: bool,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::BadEntries {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self {
            amplitudes: DVector::from_vec(amplitudes),
            normalized: false,
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self {
            amplitudes: v,
            normalized: true,
        }
    }

    /// Returns a unit-norm copy tagged as normalized.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            amplitudes: &self.amplitudes / C64::new(n, 0.0),
            normalized: true,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.amplitudes[i]
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.amplitudes - &other.amplitudes).norm()
    }

    pub(crate) fn from_vector(amplitudes: DVector<C64>) -> Self {
        Self {
            amplitudes,
            normalized: false,
        }
    }
}

/// Eigendecomposition `H = V diag(values) V†` of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    /// Decomposes a Hermitian matrix; the input is symmetrized first.
    pub fn new(h: &DMatrix<C64>) -> Self {
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fj = f(lam);
            scaled.column_mut(j).scale_mut_complex(fj);
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i t H)`.
    pub fn evolve(&self, t: f64) -> DenseOperator {
        let m = self.map(|lam| C64::from_polar(1.0, -lam * t));
        DenseOperator::from_matrix_unchecked(m, Hint::Unitary)
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, f: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleComplex
    for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_complex(&mut self, f: C64) {
        for z in self.iter_mut() {
            *z *= f;
        }
    }
}

/// `exp(A)` for anti-Hermitian `A`, via the eigendecomposition of `iA`.
pub fn matrix_exponential(a: &DenseOperator) -> Result<DenseOperator> {
    let dev = a.anti_hermitian_deviation();
    if dev > STRUCTURE_TOL {
        return Err(Error::NotAntiHermitian { deviation: dev });
    }
    // iA is Hermitian; A = -i (iA), so exp(A) = V exp(-i Λ) V†.
    let ia = &a.mat * I;
    Ok(HermitianEigen::new(&ia).evolve(1.0))
}

/// `exp(-i t H)` for Hermitian `H`.
pub fn exp_hermitian(h: &DenseOperator, t: f64) -> Result<DenseOperator> {
    let dev = h.hermitian_deviation();
    if dev > STRUCTURE_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(HermitianEigen::new(&h.mat).evolve(t))
}

fn norm_of(m: &DMatrix<C64>) -> f64 {
    if m.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(a: &DenseOperator) -> Result<f64> {
    if a.dim() > MAX_SVD_DIM {
        return Err(Error::DimTooLarge {
            dim: a.dim(),
            limit: MAX_SVD_DIM,
        });
    }
    Ok(norm_of(&a.mat))
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    check_dims(a, b)?;
    Ok(DenseOperator {
        mat: &a.mat * &b.mat - &b.mat * &a.mat,
        hint: Hint::None,
    })
}

/// `[A₁, [A₂, … [A_{n-1}, A_n]…]]`, evaluated right to left.
pub fn nested_commutator(ops: &[DenseOperator]) -> Result<DenseOperator> {
    let (last, rest) = ops.split_last().ok_or(Error::EmptyList)?;
    let mut acc = last.clone();
    for op in rest.iter().rev() {
        acc = commutator(op, &acc)?;
    }
    Ok(acc)
}

/// `A·ψ`, not renormalized.
pub fn apply(a: &DenseOperator, psi: &StateVector) -> Result<StateVector> {
    if a.dim() != psi.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: psi.dim(),
        });
    }
    Ok(StateVector::from_vector(&a.mat * &psi.amplitudes))
}

/// Principal logarithm of a unitary whose eigenphases avoid ±π.
///
/// Uses the Cayley transform `K = i(I - U)(I + U)⁻¹`, which is Hermitian with
/// eigenvalues `tan(θ/2)`; the logarithm is `V diag(iθ) V†`.
pub fn unitary_log(u: &DenseOperator) -> Result<DenseOperator> {
    let d = u.dim();
    let id = DMatrix::<C64>::identity(d, d);
    let plus = &id + &u.mat;
    let inv = plus.try_inverse().ok_or_else(|| {
        Error::ConvergenceRisk("unitary has an eigenvalue at -1; log branch undefined".into())
    })?;
    let k = (&id - &u.mat) * inv * I;
    let eig = HermitianEigen::new(&k);
    let m = eig.map(|kappa| C64::new(0.0, 2.0 * kappa.atan()));
    Ok(DenseOperator::from_matrix_unchecked(m, Hint::AntiHermitian))
}

/// Single-qubit Pauli matrices.
pub fn pauli_x() -> DenseOperator {
    DenseOperator::new(2, vec![ZERO, ONE, ONE, ZERO])
        .expect("static")
        .with_hint(Hint::Hermitian)
}

pub fn pauli_y() -> DenseOperator {
    DenseOperator::new(2, vec![ZERO, -I, I, ZERO])
        .expect("static")
        .with_hint(Hint::Hermitian)
}

pub fn pauli_z() -> DenseOperator {
    DenseOperator::new(2, vec![ONE, ZERO, ZERO, -ONE])
        .expect("static")
        .with_hint(Hint::Hermitian)
}

/// Random Hermitian operator with i.i.d. Gaussian-ish entries, spectral norm rescaled to `norm`.
pub fn random_hermitian<R: Rng>(dim: usize, norm: f64, rng: &mut R) -> DenseOperator {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let n = norm_of(&h);
    let scaled = if n > 0.0 { h * C64::new(norm / n, 0.0) } else { h };
    DenseOperator::from_matrix_unchecked(scaled, Hint::Hermitian)
}

/// Random anti-Hermitian operator `-i H` with `‖H‖ = norm`.
pub fn random_anti_hermitian<R: Rng>(dim: usize, norm: f64, rng: &mut R) -> DenseOperator {
    let h = random_hermitian(dim, norm, rng);
    DenseOperator::from_matrix_unchecked(h.mat * (-I), Hint::AntiHermitian)
}

/// Random complex operator with entries in the unit square.
pub fn random_general<R: Rng>(dim: usize, rng: &mut R) -> DenseOperator {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    DenseOperator::from_matrix_unchecked(g, Hint::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DenseOperator::zeros(2);
        let e = matrix_exponential(&z).unwrap();
        assert!(e.max_abs_diff(&DenseOperator::identity(2)) < 1e-15);
        assert_eq!(e.hint(), Hint::Unitary);
    }

    #[test]
    fn exp_of_rotated_z_is_diagonal_phase() {
        let a = pauli_z().scale(C64::new(0.0, -std::f64::consts::FRAC_PI_2));
        let e = matrix_exponential(&a).unwrap();
        let expected = DenseOperator::new(2, vec![-I, ZERO, ZERO, I]).unwrap();
        assert!(e.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn exp_of_random_anti_hermitian_is_unitary() {
        let a = random_anti_hermitian(8, 3.0, &mut rng());
        let e = matrix_exponential(&a).unwrap();
        assert!(e.unitarity_defect() <= 1e-10);
        e.verify_hint().unwrap();
    }

    #[test]
    fn exp_rejects_non_anti_hermitian() {
        let err = matrix_exponential(&pauli_x()).unwrap_err();
        assert!(matches!(err, Error::NotAntiHermitian { .. }));
    }

    #[test]
    fn exp_matches_taylor_series() {
        let a = random_anti_hermitian(6, 0.7, &mut rng());
        let e = matrix_exponential(&a).unwrap();
        let mut term = DMatrix::<C64>::identity(6, 6);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * a.matrix() / C64::new(k as f64, 0.0);
            sum += &term;
        }
        assert!(max_abs_diff(e.matrix(), &sum) < 1e-12);
    }

    #[test]
    fn non_square_is_rejected() {
        let m = DMatrix::<C64>::zeros(2, 3);
        assert!(matches!(
            DenseOperator::from_matrix(m),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
        assert!(DenseOperator::new(2, vec![ONE; 3]).is_err());
    }

    #[test]
    fn spectral_norm_simple_cases() {
        for d in [1, 2, 5, 16] {
            let n = spectral_norm(&DenseOperator::identity(d)).unwrap();
            assert!((n - 1.0).abs() < 1e-12);
        }
        let n = spectral_norm(&DenseOperator::diagonal(&[1.0, -3.0])).unwrap();
        assert!((n - 3.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&DenseOperator::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_power_iteration() {
        let a = random_general(16, &mut rng());
        // power iteration on A†A
        let ata = a.matrix().adjoint() * a.matrix();
        let mut v = DVector::<C64>::from_element(16, ONE);
        let mut lam = 0.0;
        for _ in 0..5000 {
            let w = &ata * &v;
            lam = w.norm() / v.norm();
            v = &w / C64::new(w.norm(), 0.0);
        }
        let oracle = lam.sqrt();
        let n = spectral_norm(&a).unwrap();
        assert!((n - oracle).abs() <= 1e-6 * oracle, "{n} vs {oracle}");
    }

    #[test]
    fn commutator_examples() {
        let x = pauli_x();
        let z = pauli_z();
        let xx = commutator(&x, &x).unwrap();
        assert!(xx.max_abs_diff(&DenseOperator::zeros(2)) == 0.0);
        let xz = commutator(&x, &z).unwrap();
        let expected = DenseOperator::new(2, vec![ZERO, -2.0 * ONE, 2.0 * ONE, ZERO]).unwrap();
        assert!(xz.max_abs_diff(&expected) < 1e-15);
        assert!(xz.max_abs_diff(&pauli_y().scale(-2.0 * I)) < 1e-15);
        let a = DenseOperator::diagonal(&[1.0, 2.0, 3.0]);
        let b = DenseOperator::diagonal(&[-1.0, 5.0, 0.5]);
        assert_eq!(commutator(&a, &b).unwrap().max_abs_diff(&DenseOperator::zeros(3)), 0.0);
        assert!(matches!(
            commutator(&a, &x),
            Err(Error::DimMismatch { left: 3, right: 2 })
        ));
    }

    #[test]
    fn nested_commutator_conventions() {
        let x = pauli_x();
        let z = pauli_z();
        let single = nested_commutator(std::slice::from_ref(&x)).unwrap();
        assert_eq!(single, x);
        let pair = nested_commutator(&[x.clone(), z.clone()]).unwrap();
        assert_eq!(pair, commutator(&x, &z).unwrap());
        // [Z, [X, Z]] = [Z, -2iY] = -2i·(-2iX) = -4X
        let triple = nested_commutator(&[z.clone(), x.clone(), z.clone()]).unwrap();
        assert!(triple.max_abs_diff(&x.scale_real(-4.0)) < 1e-14);
        assert!(matches!(nested_commutator(&[]), Err(Error::EmptyList)));
    }

    #[test]
    fn apply_examples() {
        let psi = StateVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let out = apply(&DenseOperator::identity(2), &psi).unwrap();
        assert_eq!(out.amplitudes(), psi.amplitudes());
        let flipped = apply(&pauli_x(), &StateVector::basis(2, 0)).unwrap();
        assert!(flipped.distance(&StateVector::basis(2, 1)) < 1e-15);

        let mut r = rng();
        let a = random_general(5, &mut r);
        let amps: Vec<C64> = (0..5)
            .map(|_| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        let psi = StateVector::new(amps.clone()).unwrap();
        let out = apply(&a, &psi).unwrap();
        for row in 0..5 {
            let mut acc = ZERO;
            for col in 0..5 {
                acc += a.entry(row, col) * amps[col];
            }
            assert!((acc - out.amplitude(row)).norm() < 1e-14);
        }
        assert!(apply(&a, &StateVector::basis(2, 0)).is_err());
    }

    #[test]
    fn hint_verification() {
        assert!(pauli_x().verify_hint().is_ok());
        let bad = pauli_x().with_hint(Hint::AntiHermitian);
        assert!(bad.verify_hint().is_err());
        let bad_u = pauli_x().scale_real(2.0).with_hint(Hint::Unitary);
        assert!(bad_u.verify_hint().is_err());
        let not_h = random_general(3, &mut rng()).with_hint(Hint::Hermitian);
        assert!(not_h.verify_hint().is_err());
    }

    #[test]
    fn unitary_log_inverts_exponential() {
        let a = random_anti_hermitian(6, 1.2, &mut rng());
        let u = matrix_exponential(&a).unwrap();
        let l = unitary_log(&u).unwrap();
        assert!(l.max_abs_diff(&a) < 1e-11);
    }

    #[test]
    fn power_by_squaring_matches_naive() {
        let a = random_general(4, &mut rng()).scale_real(0.5);
        let mut naive = DenseOperator::identity(4);
        for _ in 0..7 {
            naive = &naive * &a;
        }
        assert!(a.pow(7).max_abs_diff(&naive) < 1e-12);
        assert_eq!(a.pow(0), DenseOperator::identity(4).with_hint(Hint::None));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn exp_inverse_pair(seed in 0u64..1000, dim in 1usize..64, norm in 0.0f64..5.0) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let a = random_anti_hermitian(dim, norm, &mut r);
            let p = &matrix_exponential(&a).unwrap() * &matrix_exponential(&-&a).unwrap();
            proptest::prop_assert!(p.max_abs_diff(&DenseOperator::identity(dim)) <= 1e-9);
        }

        #[test]
        fn norm_is_submultiplicative(seed in 0u64..1000, dim in 1usize..12) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let a = random_general(dim, &mut r);
            let b = random_general(dim, &mut r);
            let ab = spectral_norm(&(&a * &b)).unwrap();
            proptest::prop_assert!(ab <= spectral_norm(&a).unwrap() * spectral_norm(&b).unwrap() + 1e-9);
        }

        #[test]
        fn commutator_antisymmetry_and_jacobi(seed in 0u64..1000, dim in 1usize..10) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let a = random_general(dim, &mut r);
            let b = random_general(dim, &mut r);
            let c = random_general(dim, &mut r);
            let ab = commutator(&a, &b).unwrap();
            let ba = commutator(&b, &a).unwrap();
            proptest::prop_assert!(ab.max_abs_diff(&-&ba) <= 1e-12);
            let j = &(&commutator(&a, &commutator(&b, &c).unwrap()).unwrap()
                + &commutator(&b, &commutator(&c, &a).unwrap()).unwrap())
                + &commutator(&c, &ab).unwrap();
            let scale = spectral_norm(&a).unwrap() * spectral_norm(&b).unwrap() * spectral_norm(&c).unwrap();
            proptest::prop_assert!(spectral_norm(&j).unwrap() <= 1e-9 * scale.max(1e-300) + 1e-15);
        }
    }
}
