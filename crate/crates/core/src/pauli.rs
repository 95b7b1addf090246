//! Pauli matrices and tensor-product embedding of single-site operators.
//!
//! Site 0 is the leftmost (most significant) factor of the Kronecker product,
//! so for two sites the basis order is `|uu>, |ud>, |du>, |dd>` with `u` the
//! `+1` eigenstate of `sigma_z`.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Matrix2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix2::new(l, o, o, l),
            Pauli::X => Matrix2::new(o, l, l, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(l, o, o, -l),
        }
    }

    /// Real representation; `None` for `Y`.
    pub fn real_matrix(self) -> Option<Matrix2<f64>> {
        match self {
            Pauli::I => Some(Matrix2::identity()),
            Pauli::X => Some(Matrix2::new(0.0, 1.0, 1.0, 0.0)),
            Pauli::Z => Some(Matrix2::new(1.0, 0.0, 0.0, -1.0)),
            Pauli::Y => None,
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Product of real single-site operators on a chain of `sites` spin-1/2
/// sites; sites not listed carry the identity.
pub fn real_string(sites: usize, factors: &[(usize, Pauli)]) -> DMatrix<f64> {
    let mut out = DMatrix::<f64>::identity(1, 1);
    for site in 0..sites {
        let op = factors.iter().find(|(s, _)| *s == site).map_or(Pauli::I, |(_, p)| *p);
        let m = op.real_matrix().expect("real Pauli string");
        out = out.kronecker(&m);
    }
    out
}

/// Complex two-site product `a (x) b`.
pub fn pair(a: Pauli, b: Pauli) -> nalgebra::Matrix4<Complex64> {
    let k = a.matrix().kronecker(&b.matrix());
    nalgebra::Matrix4::from_fn(|r, c| k[(r, c)])
}
