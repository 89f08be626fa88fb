//! Pauli strings in the binary symplectic representation.
//!
//! A string is stored as two bit masks `(x, z)`; site `q` lives at bit `q`,
//! which is also its bit in the computational basis index. The represented
//! operator is the tensor product of the single-site factors with
//! `(x, z) = (1, 0) → X`, `(1, 1) → Y`, `(0, 1) → Z`. Phases of products are
//! returned separately as a power of `i`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{C64, I, ONE};

/// Largest qubit count a [`PauliString`] can address.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

/// Phase exponent `e` (product phase `i^e`) of a single-site product `a·b`.
fn site_phase(ax: bool, az: bool, bx: bool, bz: bool) -> u8 {
    // Index: 0 = I, 1 = X, 2 = Y, 3 = Z.
    let idx = |x: bool, z: bool| match (x, z) {
        (false, false) => 0,
        (true, false) => 1,
        (true, true) => 2,
        (false, true) => 3,
    };
    const TABLE: [[u8; 4]; 4] = [
        [0, 0, 0, 0],
        // XX = I, XY = iZ, XZ = -iY
        [0, 0, 1, 3],
        // YX = -iZ, YY = I, YZ = iX
        [0, 3, 0, 1],
        // ZX = iY, ZY = -iX, ZZ = I
        [0, 1, 3, 0],
    ];
    TABLE[idx(ax, az)][idx(bx, bz)]
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn single(site: usize, p: Pauli) -> Self {
        let mut s = Self::IDENTITY;
        s.set(site, Some(p));
        s
    }

    pub fn from_sites(sites: impl IntoIterator<Item = (usize, Pauli)>) -> Self {
        let mut s = Self::IDENTITY;
        for (q, p) in sites {
            s.set(q, Some(p));
        }
        s
    }

    pub fn set(&mut self, site: usize, p: Option<Pauli>) {
        let bit = 1u64 << site;
        self.x &= !bit;
        self.z &= !bit;
        if let Some(p) = p {
            let (bx, bz) = p.bits();
            if bx {
                self.x |= bit;
            }
            if bz {
                self.z |= bit;
            }
        }
    }

    pub fn get(&self, site: usize) -> Option<Pauli> {
        let bit = 1u64 << site;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
        }
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support() == 0
    }

    pub fn num_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Sites carrying a non-identity factor, ascending.
    pub fn sites(&self) -> Vec<usize> {
        let mut s = self.support();
        let mut out = Vec::with_capacity(s.count_ones() as usize);
        while s != 0 {
            out.push(s.trailing_zeros() as usize);
            s &= s - 1;
        }
        out
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 0
    }

    /// Returns `(e, s)` with `self · other = i^e · s`.
    pub fn mul(&self, other: &PauliString) -> (u8, PauliString) {
        let mut phase = 0u8;
        let mut both = self.support() & other.support();
        while both != 0 {
            let q = both.trailing_zeros();
            let b = 1u64 << q;
            phase += site_phase(
                self.x & b != 0,
                self.z & b != 0,
                other.x & b != 0,
                other.z & b != 0,
            );
            both &= both - 1;
        }
        (
            phase % 4,
            PauliString {
                x: self.x ^ other.x,
                z: self.z ^ other.z,
            },
        )
    }

    /// Diagonal sign and target row for the action on basis state `b`:
    /// `P|b⟩ = phase(b) |b ⊕ x⟩`.
    #[inline]
    fn basis_phase(&self, b: usize) -> C64 {
        let base = i_pow(self.num_y() as u8);
        if ((b as u64) & self.z).count_ones() % 2 == 1 {
            -base
        } else {
            base
        }
    }

    /// Dense matrix on `n` qubits.
    pub fn to_matrix(&self, n: usize) -> DMatrix<C64> {
        let dim = 1usize << n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for b in 0..dim {
            let row = b ^ self.x as usize;
            m[(row, b)] = self.basis_phase(b);
        }
        m
    }

    /// `P · M` in place of a fresh matrix, O(dim²).
    pub fn left_mul(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let dim = m.nrows();
        let x = self.x as usize;
        let mut out = DMatrix::<C64>::zeros(dim, m.ncols());
        for r in 0..dim {
            let src = r ^ x;
            let ph = self.basis_phase(src);
            for c in 0..m.ncols() {
                out[(r, c)] = ph * m[(src, c)];
            }
        }
        out
    }

    /// `M ← exp(-iθP) · M`, using `exp(-iθP) = cos θ − i sin θ P`.
    pub fn left_apply_exp(&self, theta: f64, m: &mut DMatrix<C64>) {
        let (s, c) = theta.sin_cos();
        if self.is_identity() {
            let f = C64::new(c, -s);
            for v in m.iter_mut() {
                *v *= f;
            }
            return;
        }
        let dim = m.nrows();
        let ncols = m.ncols();
        let x = self.x as usize;
        let mis = -I * s;
        if x == 0 {
            // Diagonal string: each row picks up a scalar.
            for r in 0..dim {
                let f = C64::new(c, 0.0) + mis * self.basis_phase(r);
                for col in 0..ncols {
                    m[(r, col)] *= f;
                }
            }
            return;
        }
        // Rows pair up as (r, r ⊕ x); update each pair once.
        let high = 1usize << (63 - (x as u64).leading_zeros());
        for r in 0..dim {
            if r & high != 0 {
                continue;
            }
            let r2 = r ^ x;
            // (P M)[r] = ph(r2) M[r2], (P M)[r2] = ph(r) M[r]
            let p_r = self.basis_phase(r2);
            let p_r2 = self.basis_phase(r);
            for col in 0..ncols {
                let a = m[(r, col)];
                let b = m[(r2, col)];
                m[(r, col)] = a * c + mis * p_r * b;
                m[(r2, col)] = b * c + mis * p_r2 * a;
            }
        }
    }

    pub fn label(&self, n: usize) -> String {
        (0..n)
            .map(|q| self.get(q).map_or('I', Pauli::as_char))
            .collect()
    }

    /// Site → letter map used by the JSON model format.
    pub fn to_site_map(&self) -> BTreeMap<String, String> {
        self.sites()
            .into_iter()
            .map(|q| (q.to_string(), self.get(q).expect("site in support").as_char().to_string()))
            .collect()
    }

    pub fn from_site_map(map: &BTreeMap<String, String>, n: usize) -> Result<Self> {
        let mut s = Self::IDENTITY;
        for (k, v) in map {
            let q: usize = k
                .parse()
                .map_err(|_| Error::InvalidModel(format!("bad site index {k:?}")))?;
            if q >= n || q >= MAX_QUBITS {
                return Err(Error::InvalidModel(format!("site {q} outside [0, {n})")));
            }
            let mut chars = v.chars();
            let p = match (chars.next().and_then(Pauli::from_char), chars.next()) {
                (Some(p), None) => p,
                _ => return Err(Error::InvalidModel(format!("bad Pauli letter {v:?}"))),
            };
            s.set(q, Some(p));
        }
        Ok(s)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        for q in self.sites() {
            write!(f, "{}{}", self.get(q).expect("site").as_char(), q)?;
        }
        Ok(())
    }
}

pub fn i_pow(e: u8) -> C64 {
    match e % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{pauli_x, pauli_y, pauli_z, DenseOperator};
    use proptest::prelude::*;

    fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a.kronecker(b)
    }

    #[test]
    fn single_site_matrices() {
        let x = PauliString::single(0, Pauli::X).to_matrix(1);
        let y = PauliString::single(0, Pauli::Y).to_matrix(1);
        let z = PauliString::single(0, Pauli::Z).to_matrix(1);
        assert_eq!(&x, pauli_x().matrix());
        assert_eq!(&y, pauli_y().matrix());
        assert_eq!(&z, pauli_z().matrix());
    }

    #[test]
    fn site_zero_is_least_significant() {
        // X on site 0 of two qubits is I ⊗ X in big-endian kron order.
        let s = PauliString::from_sites([(0, Pauli::X), (1, Pauli::Z)]);
        let expected = kron(pauli_z().matrix(), pauli_x().matrix());
        assert_eq!(s.to_matrix(2), expected);
    }

    #[test]
    fn products_match_hand_table() {
        let x = PauliString::single(0, Pauli::X);
        let y = PauliString::single(0, Pauli::Y);
        let z = PauliString::single(0, Pauli::Z);
        assert_eq!(x.mul(&y), (1, z));
        assert_eq!(y.mul(&x), (3, z));
        assert_eq!(z.mul(&x), (1, y));
        assert_eq!(y.mul(&z), (1, x));
        assert_eq!(x.mul(&x), (0, PauliString::IDENTITY));
    }

    #[test]
    fn commutation_rules() {
        let xx = PauliString::from_sites([(0, Pauli::X), (1, Pauli::X)]);
        let zz = PauliString::from_sites([(0, Pauli::Z), (1, Pauli::Z)]);
        let z0 = PauliString::single(0, Pauli::Z);
        assert!(xx.commutes_with(&zz));
        assert!(!xx.commutes_with(&z0));
        assert!(z0.commutes_with(&zz));
    }

    #[test]
    fn site_map_round_trip_and_errors() {
        let s = PauliString::from_sites([(0, Pauli::X), (3, Pauli::Y)]);
        let map = s.to_site_map();
        assert_eq!(PauliString::from_site_map(&map, 4).unwrap(), s);
        assert!(PauliString::from_site_map(&map, 3).is_err());
        let mut bad = BTreeMap::new();
        bad.insert("0".into(), "Q".into());
        assert!(PauliString::from_site_map(&bad, 2).is_err());
        assert_eq!(s.label(4), "XIIY");
        assert_eq!(s.to_string(), "X0Y3");
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        let mask = (1u64 << n) - 1;
        (any::<u64>(), any::<u64>()).prop_map(move |(x, z)| PauliString {
            x: x & mask,
            z: z & mask,
        })
    }

    proptest! {
        #[test]
        fn product_matches_dense(a in arb_string(3), b in arb_string(3)) {
            let (e, s) = a.mul(&b);
            let dense = a.to_matrix(3) * b.to_matrix(3);
            let expected = s.to_matrix(3) * i_pow(e);
            prop_assert!((dense - expected).norm() < 1e-12);
        }

        #[test]
        fn commutation_matches_dense(a in arb_string(3), b in arb_string(3)) {
            let ma = a.to_matrix(3);
            let mb = b.to_matrix(3);
            let comm = &ma * &mb - &mb * &ma;
            prop_assert_eq!(a.commutes_with(&b), comm.norm() < 1e-12);
        }

        #[test]
        fn left_apply_exp_matches_dense(a in arb_string(3), theta in -3.0f64..3.0) {
            let h = DenseOperator::from_matrix(a.to_matrix(3)).unwrap();
            let u = crate::operator::exp_hermitian(&h, theta).unwrap();
            let mut m = DMatrix::<C64>::identity(8, 8);
            a.left_apply_exp(theta, &mut m);
            prop_assert!((m - u.matrix()).norm() < 1e-10);
        }

        #[test]
        fn left_mul_matches_dense(a in arb_string(3)) {
            let m = DMatrix::<C64>::from_fn(8, 8, |r, c| C64::new(r as f64, c as f64 - 2.0));
            let expected = a.to_matrix(3) * &m;
            prop_assert!((a.left_mul(&m) - expected).norm() < 1e-12);
        }
    }
}
