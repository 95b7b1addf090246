//! Real-time evolution of the effective two-site system and its concurrence.
//!
//! The two renormalized sites evolve under
//!
//! ```text
//!          | 2g  0  0   1 |
//! H = -J * | 0   0  1   0 |      basis |uu>, |ud>, |du>, |dd>
//!          | 0   1  0   0 |
//!          | 1   0  0 -2g |
//! ```
//!
//! starting from the equal mixture of the two fully polarized `x` states,
//! which is separable. The even-parity block `{|uu>, |dd>}` precesses at
//! `omega = J sqrt(1 + 4 g^2)` and the odd block `{|ud>, |du>}` at `J`, which
//! gives the concurrence
//!
//! ```text
//! C(t) = 1/2 [ 1 - sqrt(1 - (4g / (1 + 4g^2))^2 sin^4(omega t)) ]
//! ```
//!
//! [`concurrence_wootters`] computes the same quantity from the density
//! matrix for any two-qubit state, and the two are cross-checked throughout
//! the test suite.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::coupling::{coupling_at, effective_size, Coupling};
use crate::error::{Error, Result};
use crate::pauli::{pair, Pauli};

/// Minimum samples per period accepted by [`concurrence_series`].
pub const MIN_SAMPLES_PER_PERIOD: usize = 200;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
/// Negative eigenvalues of `rho * rho_tilde` down to this are roundoff.
const CLAMP_TOL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteHamiltonian {
    pub matrix: Matrix4<f64>,
    pub coupling: Coupling,
}

pub fn build_hamiltonian(coupling: Coupling) -> TwoSiteHamiltonian {
    let j = coupling.exchange();
    let g = coupling.field();
    #[rustfmt::skip]
    let matrix = -j * Matrix4::new(
        2.0 * g, 0.0, 0.0, 1.0,
        0.0,     0.0, 1.0, 0.0,
        0.0,     1.0, 0.0, 0.0,
        1.0,     0.0, 0.0, -2.0 * g,
    );
    TwoSiteHamiltonian { matrix, coupling }
}

/// Time-evolution operator `exp(-i H t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    pub matrix: Matrix4<Complex64>,
    pub time: f64,
    pub coupling: Coupling,
}

impl Propagator {
    /// Frobenius norm of `U U^dagger - 1`.
    pub fn unitarity_residual(&self) -> f64 {
        (self.matrix * self.matrix.adjoint() - Matrix4::identity()).norm()
    }
}

/// Precession frequency of the even-parity block, `J sqrt(1 + 4 g^2)`.
pub fn even_frequency(coupling: Coupling) -> f64 {
    coupling.exchange() * (2.0 * coupling.field()).hypot(1.0)
}

/// Closed-form propagator.
pub fn propagator_analytic(coupling: Coupling, time: f64) -> Propagator {
    let j = coupling.exchange();
    let root = (2.0 * coupling.field()).hypot(1.0);
    let (s, co) = (j * root * time).sin_cos();
    let (s_odd, c_odd) = (j * time).sin_cos();

    let u11 = Complex64::new(co, 2.0 * coupling.field() / root * s);
    let u14 = Complex64::new(0.0, s / root);
    let u22 = c(c_odd);
    let u23 = Complex64::new(0.0, s_odd);
    let z = c(0.0);
    #[rustfmt::skip]
    let matrix = Matrix4::new(
        u11, z,   z,   u14,
        z,   u22, u23, z,
        z,   u23, u22, z,
        u14, z,   z,   u11.conj(),
    );
    Propagator { matrix, time, coupling }
}

/// Propagator from the eigendecomposition of the Hamiltonian,
/// `V exp(-i E t) V^T`. Independent of the closed form.
pub fn propagator_spectral(coupling: Coupling, time: f64) -> Propagator {
    let h = build_hamiltonian(coupling).matrix;
    let eig = SymmetricEigen::new(h);
    let v = eig.eigenvectors.map(c);
    let phases = Matrix4::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -e * time)));
    let matrix = v * phases * v.transpose();
    Propagator { matrix, time, coupling }
}

/// Two-qubit density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Matrix4<Complex64>,
}

impl DensityMatrix {
    /// Validates the density-matrix invariants.
    pub fn new(matrix: Matrix4<Complex64>) -> Result<Self> {
        let herm = (matrix - matrix.adjoint()).camax();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - c(1.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
        }
        let rho = Self { matrix };
        let min = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Projector onto a normalized pure state.
    pub fn pure(state: [Complex64; 4]) -> Result<Self> {
        let v = nalgebra::Vector4::from(state);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v = v / c(norm);
        Self::new(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let herm = (self.matrix + self.matrix.adjoint()) * c(0.5);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

/// Equal mixture of the two fully `x`-polarized states, the ground states of
/// the field-free Ising pair.
pub fn initial_state() -> DensityMatrix {
    let q = c(0.25);
    let z = c(0.0);
    #[rustfmt::skip]
    let matrix = Matrix4::new(
        q, z, z, q,
        z, q, q, z,
        z, q, q, z,
        q, z, z, q,
    );
    DensityMatrix { matrix }
}

/// `U rho U^dagger`.
pub fn evolve(rho: &DensityMatrix, u: &Propagator) -> DensityMatrix {
    DensityMatrix {
        matrix: u.matrix * rho.matrix * u.matrix.adjoint(),
    }
}

/// Wootters concurrence of an arbitrary two-qubit state.
///
/// `lambda_i` are the square roots of the eigenvalues of `rho * rho_tilde`
/// with `rho_tilde = (Y (x) Y) rho^* (Y (x) Y)`, sorted descending; the
/// concurrence is `max(0, lambda_1 - lambda_2 - lambda_3 - lambda_4)`.
pub fn concurrence_wootters(rho: &DensityMatrix) -> Result<f64> {
    let yy = pair(Pauli::Y, Pauli::Y);
    let flipped = yy * rho.matrix.conjugate() * yy;
    let product = rho.matrix * flipped;
    let eig = product.eigenvalues().ok_or(Error::ComplexSpectrum { imag: f64::NAN })?;
    // Eigenvalues are only determined to about eps * |R|; below that they are
    // zero, and taking their square root would inject ~1e-8 noise.
    let floor = 64.0 * f64::EPSILON * product.norm();

    let mut lambdas = [0.0f64; 4];
    for (slot, ev) in lambdas.iter_mut().zip(eig.iter()) {
        if ev.im.abs() > IMAG_TOL {
            return Err(Error::ComplexSpectrum { imag: ev.im });
        }
        if ev.re < -CLAMP_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "rho * rho_tilde has eigenvalue {:e}",
                ev.re
            )));
        }
        *slot = if ev.re <= floor { 0.0 } else { ev.re.sqrt() };
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Amplitude `4g / (1 + 4g^2)` multiplying `sin^2` in the concurrence.
pub fn concurrence_amplitude(field: f64) -> f64 {
    4.0 * field / (1.0 + 4.0 * field * field)
}

/// Height of every concurrence peak at field `g`,
/// `1/2 [1 - sqrt(1 - a^2)]` with `a` from [`concurrence_amplitude`].
pub fn concurrence_envelope(field: f64) -> f64 {
    let a = concurrence_amplitude(field);
    half_gap(a * a)
}

/// `1/2 [1 - sqrt(1 - x)]` without cancellation for small `x`.
fn half_gap(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x / (2.0 * (1.0 + (1.0 - x).sqrt()))
}

pub fn concurrence_closed_form(coupling: Coupling, time: f64) -> f64 {
    let a = concurrence_amplitude(coupling.field());
    let s2 = (even_frequency(coupling) * time).sin().powi(2);
    half_gap((a * s2).powi(2))
}

/// `2 pi / (J sqrt(1 + 4 g^2))`.
///
/// The concurrence depends on `sin^4`, so it actually repeats every half
/// period; zeros fall on every multiple of `period / 2`.
pub fn period(coupling: Coupling) -> f64 {
    2.0 * PI / even_frequency(coupling)
}

/// Concurrence sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcurrenceSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Coupling driving the evolution (the renormalized one at `rg_step`).
    pub coupling: Coupling,
    /// Bare coupling the flow started from.
    pub bare: Coupling,
    pub rg_step: usize,
}

impl ConcurrenceSeries {
    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn samples_per_period(&self) -> f64 {
        period(self.coupling) / self.step()
    }
}

/// Checks the [`MIN_SAMPLES_PER_PERIOD`] rule for a grid of `points` samples
/// on `[0, span]` with the given period.
pub fn check_resolution(period: f64, span: f64, points: usize) -> Result<()> {
    if points < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 points, got {points}")));
    }
    if !(span > 0.0 && span.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time span must be positive, got {span}"
        )));
    }
    let per_period = (points - 1) as f64 * period / span;
    if per_period < MIN_SAMPLES_PER_PERIOD as f64 {
        return Err(Error::UnderResolvedGrid {
            per_period,
            required: MIN_SAMPLES_PER_PERIOD,
        });
    }
    Ok(())
}

/// Evenly spaced grid of `points` values on `[lo, hi]`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * (i as f64 / last)
            }
        })
        .collect()
}

/// Closed-form concurrence on `points` samples of `[0, t_end]`.
pub fn concurrence_series(coupling: Coupling, t_end: f64, points: usize) -> Result<ConcurrenceSeries> {
    series_for(coupling, coupling, 0, t_end, points)
}

/// Concurrence after `n` RG steps from `bare`, in bare time units.
pub fn rg_concurrence_series(bare: Coupling, n: usize, t_end: f64, points: usize) -> Result<ConcurrenceSeries> {
    effective_size(n)?;
    let renormalized = coupling_at(bare, n)?;
    series_for(renormalized, bare, n, t_end, points)
}

fn series_for(
    coupling: Coupling,
    bare: Coupling,
    rg_step: usize,
    t_end: f64,
    points: usize,
) -> Result<ConcurrenceSeries> {
    check_resolution(period(coupling), t_end, points)?;
    let times = linspace(0.0, t_end, points);
    let values = times.iter().map(|&t| concurrence_closed_form(coupling, t)).collect();
    Ok(ConcurrenceSeries {
        times,
        values,
        coupling,
        bare,
        rg_step,
    })
}
