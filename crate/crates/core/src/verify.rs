//! Brute-force checks of the closed forms.
//!
//! The decimation step is rebuilt from scratch: diagonalize the block
//! Hamiltonian `h = -J (X1 X2 + g Z1)`, keep its two lowest states, project a
//! two-block chain onto the product of the kept spaces and read the effective
//! couplings off the Pauli expansion of the result.
//!
//! The block spectrum is `+-J sqrt(1 + g^2)`, each doubly degenerate (one
//! state per `Z1 Z2` parity sector), so the kept pair is only defined up to a
//! rotation inside the ground space. The extraction is therefore done with
//! rotation invariants: writing the traceless part of the projected
//! Hamiltonian as `sum M_ab s_a s_b + sum h_a (s_a I + I s_a)`, a
//! transverse-Ising form requires `M = -J' n n^T` with `h = -J' g' m` and
//! `m` orthogonal to `n`, giving `J' = -tr M` and `g' = |h| / J'`.

use nalgebra::{DMatrix, Matrix3, Matrix4, SMatrix, SymmetricEigen, Vector3, Vector4};

use crate::coupling::{renormalize_step, Coupling};
use crate::dynamics::{
    concurrence_closed_form, concurrence_wootters, evolve, initial_state, period, propagator_analytic,
    propagator_spectral,
};
use crate::error::{Error, Result};
use crate::pauli::{real_string, Pauli};

const ORTHO_TOL: f64 = 1e-12;
const PATTERN_TOL: f64 = 1e-10;

/// The two lowest eigenstates of a two-site block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    pub ground_state: Vector4<f64>,
    pub first_excited: Vector4<f64>,
    /// All four block energies, ascending.
    pub energies: [f64; 4],
    pub coupling: Coupling,
}

impl BlockSolution {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn first_excited_energy(&self) -> f64 {
        self.energies[1]
    }
}

/// `h = -J (X1 X2 + g Z1)`; the field acts on the first site of the block only.
pub fn block_hamiltonian(c: Coupling) -> Matrix4<f64> {
    let xx = real_string(2, &[(0, Pauli::X), (1, Pauli::X)]);
    let z1 = real_string(2, &[(0, Pauli::Z)]);
    let h = (xx + z1 * c.field()) * -c.exchange();
    Matrix4::from_fn(|r, col| h[(r, col)])
}

/// Flips the sign so that the largest-magnitude component is positive.
fn fix_sign(v: Vector4<f64>) -> Vector4<f64> {
    let lead = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

pub fn solve_block(c: Coupling) -> BlockSolution {
    let eig = SymmetricEigen::new(block_hamiltonian(c));
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = [0, 1, 2, 3].map(|i| eig.eigenvalues[order[i]]);
    let column = |i: usize| fix_sign(eig.eigenvectors.column(order[i]).into_owned());
    BlockSolution {
        ground_state: column(0),
        first_excited: column(1),
        energies,
        coupling: c,
    }
}

/// Isometry from a block onto one renormalized spin: row 0 is the state
/// mapped to up, row 1 the state mapped to down.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: SMatrix<f64, 2, 4>,
}

impl Projector {
    pub fn new(up: Vector4<f64>, down: Vector4<f64>) -> Result<Self> {
        let matrix = SMatrix::<f64, 2, 4>::from_rows(&[up.transpose(), down.transpose()]);
        let p = Self { matrix };
        let residual = p.isometry_residual();
        if residual > ORTHO_TOL {
            return Err(Error::InvalidArgument(format!(
                "kept states are not orthonormal (residual {residual:e})"
            )));
        }
        Ok(p)
    }

    /// `|psi0> -> |up'>`, `|psi1> -> |down'>`.
    pub fn from_block(block: &BlockSolution) -> Result<Self> {
        Self::new(block.ground_state, block.first_excited)
    }

    /// Same kept subspace, basis rotated by `angle`.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let (s, c) = angle.sin_cos();
        let up = self.matrix.row(0).transpose();
        let down = self.matrix.row(1).transpose();
        Self::new(up * c + down * s, down * c - up * s)
    }

    pub fn matrix(&self) -> &SMatrix<f64, 2, 4> {
        &self.matrix
    }

    /// Max deviation of `P P^T` from the 2x2 identity.
    pub fn isometry_residual(&self) -> f64 {
        (self.matrix * self.matrix.transpose() - nalgebra::Matrix2::identity()).amax()
    }
}

/// Two blocks (four sites) split as in the decimation: the intra-block parts
/// `h_1 + h_2` plus the bond between them and the fields on the second site
/// of each block.
pub fn two_block_hamiltonian(c: Coupling) -> DMatrix<f64> {
    let (j, g) = (c.exchange(), c.field());
    let xx = |a, b| real_string(4, &[(a, Pauli::X), (b, Pauli::X)]);
    let z = |a| real_string(4, &[(a, Pauli::Z)]);
    let blocks = (xx(0, 1) + z(0) * g) + (xx(2, 3) + z(2) * g);
    let inter = xx(1, 2) + (z(1) + z(3)) * g;
    (blocks + inter) * -j
}

/// Pauli expansion coefficients of a real two-site operator,
/// `coeff[a][b] = tr((s_a (x) s_b) H) / 4` with index order I, X, Y, Z.
pub fn pauli_coefficients(h: &Matrix4<f64>) -> [[f64; 4]; 4] {
    let hc = h.map(|x| num_complex::Complex64::new(x, 0.0));
    let mut out = [[0.0; 4]; 4];
    for (a, pa) in Pauli::ALL.into_iter().enumerate() {
        for (b, pb) in Pauli::ALL.into_iter().enumerate() {
            out[a][b] = (crate::pauli::pair(pa, pb) * hc).trace().re / 4.0;
        }
    }
    out
}

/// Projects the two-block chain with `P (x) P` and extracts `(J', g')`.
pub fn project_two_blocks(c: Coupling, projector: &Projector) -> Result<Coupling> {
    let p = projector.matrix;
    let w = DMatrix::from_fn(4, 16, |r, col| p[(r / 2, col / 4)] * p[(r % 2, col % 4)]);
    let projected = &w * two_block_hamiltonian(c) * w.transpose();
    let h = Matrix4::from_fn(|r, col| projected[(r, col)]);
    match_transverse_ising(&pauli_coefficients(&h), c.exchange())
}

fn match_transverse_ising(coeff: &[[f64; 4]; 4], scale: f64) -> Result<Coupling> {
    let two_body = Matrix3::from_fn(|a, b| coeff[a + 1][b + 1]);
    let left = Vector3::new(coeff[1][0], coeff[2][0], coeff[3][0]);
    let right = Vector3::new(coeff[0][1], coeff[0][2], coeff[0][3]);

    let exchange = -two_body.trace();
    let eig = SymmetricEigen::new((two_body + two_body.transpose()) * 0.5);
    let k = eig.eigenvalues.iamax();
    let axis = eig.eigenvectors.column(k).into_owned();

    let residual =
        (two_body + axis * axis.transpose() * exchange).amax() + (left - right).amax() + left.dot(&axis).abs();
    if residual > PATTERN_TOL * scale || !(exchange > 0.0) {
        return Err(Error::PatternMismatch { residual });
    }
    Coupling::new(exchange, left.norm() / exchange).map_err(|_| Error::PatternMismatch { residual })
}

/// Renormalized couplings by explicit projection.
pub fn effective_couplings(c: Coupling) -> Result<Coupling> {
    let projector = Projector::from_block(&solve_block(c))?;
    project_two_blocks(c, &projector)
}

/// `|C_wootters(U_spectral rho0 U_spectral^dagger) - C_closed(t)|`.
pub fn exact_two_site_check(c: Coupling, t: f64) -> Result<f64> {
    let rho = evolve(&initial_state(), &propagator_spectral(c, t));
    Ok((concurrence_wootters(&rho)? - concurrence_closed_form(c, t)).abs())
}

/// Fields of the dynamics oracle grid.
pub const ORACLE_FIELDS: [f64; 7] = [0.0, 0.25, 0.5, 0.9, 1.0, 1.5, 3.0];

fn oracle_grid(times_per_period: usize) -> impl Iterator<Item = (Coupling, f64)> {
    ORACLE_FIELDS.into_iter().flat_map(move |g| {
        let c = Coupling::unit(g).expect("oracle fields are valid");
        let tp = period(c);
        (0..=times_per_period).map(move |i| (c, tp * i as f64 / times_per_period as f64))
    })
}

/// Largest deviation of a closed-form decimation rule from the projection
/// over `points` fields evenly spread on `[0.1, 5]`, in either coupling.
pub fn rg_grid_deviation<F>(points: usize, rule: F) -> Result<f64>
where
    F: Fn(Coupling) -> Coupling,
{
    let mut worst = 0.0f64;
    for g in crate::dynamics::linspace(0.1, 5.0, points) {
        let c = Coupling::unit(g)?;
        let projected = effective_couplings(c)?;
        let closed = rule(c);
        worst = worst
            .max((projected.exchange() - closed.exchange()).abs())
            .max((projected.field() - closed.field()).abs());
    }
    Ok(worst)
}

/// Same as [`rg_grid_deviation`] against [`renormalize_step`].
pub fn rg_grid_check(points: usize) -> Result<f64> {
    rg_grid_deviation(points, renormalize_step)
}

/// Max entrywise deviation between the analytic and spectral propagators
/// and max unitarity residual of either, over the oracle grid.
pub fn propagator_grid_check(times_per_period: usize) -> (f64, f64) {
    let mut entry = 0.0f64;
    let mut unitarity = 0.0f64;
    for (c, t) in oracle_grid(times_per_period) {
        let a = propagator_analytic(c, t);
        let b = propagator_spectral(c, t);
        entry = entry.max((a.matrix - b.matrix).camax());
        unitarity = unitarity.max(a.unitarity_residual()).max(b.unitarity_residual());
    }
    (entry, unitarity)
}

/// Max `|C_closed - C_wootters(U rho0 U^dagger)|` over the oracle grid with
/// the analytic propagator.
pub fn concurrence_grid_check(times_per_period: usize) -> Result<f64> {
    let rho0 = initial_state();
    let mut worst = 0.0f64;
    for (c, t) in oracle_grid(times_per_period) {
        let rho = evolve(&rho0, &propagator_analytic(c, t));
        worst = worst.max((concurrence_wootters(&rho)? - concurrence_closed_form(c, t)).abs());
    }
    Ok(worst)
}

/// [`exact_two_site_check`] on `count` low-discrepancy points of
/// `[0, 3] x [0, 10]`.
pub fn two_site_sweep(count: usize) -> Result<f64> {
    // Additive recurrence with the plastic-number constants.
    const A1: f64 = 0.754_877_666_246_692_8;
    const A2: f64 = 0.569_840_290_998_053_2;
    let mut worst = 0.0f64;
    for i in 0..count {
        let u = (0.5 + A1 * i as f64).fract();
        let v = (0.5 + A2 * i as f64).fract();
        worst = worst.max(exact_two_site_check(Coupling::unit(3.0 * u)?, 10.0 * v)?);
    }
    Ok(worst)
}
