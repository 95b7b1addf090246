//! Couplings of the transverse-field Ising chain and their renormalization
//! group flow.
//!
//! Decimating the chain into two-site blocks and keeping the two lowest block
//! states maps the Hamiltonian onto itself with new couplings
//!
//! ```text
//! J' = J * 2q / (1 + q^2),   q = g + sqrt(g^2 + 1)
//! g' = g^2
//! ```
//!
//! The exchange ratio simplifies to `1 / sqrt(1 + g^2)`; both forms are
//! provided and tested against each other. After `n` steps the two surviving
//! sites stand for a chain of `N = 2^(n+1)` sites.
//!
//! The field map has fixed points at `g = 0` and at the critical field
//! `g = 1`. Below criticality the flow runs to zero, above it runs off to
//! infinity, doubling the exponent every step: `g_n = g^(2^n)`. Values of
//! `g_n` beyond [`MAX_FIELD`] are reported as [`Error::FlowOverflow`].

use crate::error::{Error, Result};

/// Critical transverse field, the unstable fixed point of `g -> g^2`.
pub const CRITICAL_FIELD: f64 = 1.0;

/// Largest renormalized field the library carries. Beyond it `1 + 4 g^2`
/// is no longer representable with useful precision.
pub const MAX_FIELD: f64 = 1e150;

/// Exchange energy and dimensionless transverse field at one RG step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    exchange: f64,
    field: f64,
}

impl Coupling {
    pub fn new(exchange: f64, field: f64) -> Result<Self> {
        if !(exchange.is_finite() && exchange > 0.0 && field.is_finite() && field >= 0.0) {
            return Err(Error::InvalidCoupling { exchange, field });
        }
        Ok(Self { exchange, field })
    }

    /// Coupling in units of the bare exchange, `J = 1`.
    pub fn unit(field: f64) -> Result<Self> {
        Self::new(1.0, field)
    }

    /// Exchange energy `J`.
    pub fn exchange(&self) -> f64 {
        self.exchange
    }

    /// Transverse field `g`, in units of `J`.
    pub fn field(&self) -> f64 {
        self.field
    }
}

/// `2q / (1 + q^2)` with `q = g + sqrt(g^2 + 1)`.
pub fn exchange_ratio(field: f64) -> f64 {
    let q = field + field.hypot(1.0);
    2.0 * q / (1.0 + q * q)
}

/// Reduced form of [`exchange_ratio`]: `1 / sqrt(1 + g^2)`.
pub fn exchange_ratio_reduced(field: f64) -> f64 {
    1.0 / field.hypot(1.0)
}

/// One decimation step.
pub fn renormalize_step(c: Coupling) -> Coupling {
    Coupling {
        exchange: c.exchange * exchange_ratio(c.field),
        field: c.field * c.field,
    }
}

fn checked_step(c: Coupling, step: usize) -> Result<Coupling> {
    let next = renormalize_step(c);
    if !(next.field <= MAX_FIELD && next.exchange.is_finite() && next.exchange > 0.0) {
        return Err(Error::FlowOverflow {
            step,
            field: next.field,
        });
    }
    Ok(next)
}

/// Couplings along the RG flow, `steps[0]` being the bare coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct RgTrajectory {
    steps: Vec<Coupling>,
}

impl RgTrajectory {
    pub fn bare(&self) -> Coupling {
        self.steps[0]
    }

    /// Coupling after the last computed step.
    pub fn last(&self) -> Coupling {
        *self.steps.last().expect("trajectory always holds the bare coupling")
    }

    pub fn at(&self, n: usize) -> Option<Coupling> {
        self.steps.get(n).copied()
    }

    pub fn steps(&self) -> &[Coupling] {
        &self.steps
    }

    /// Index of the last step, `n_max`.
    pub fn max_step(&self) -> usize {
        self.steps.len() - 1
    }
}

/// Iterates [`renormalize_step`] `max_step` times.
pub fn flow(bare: Coupling, max_step: usize) -> Result<RgTrajectory> {
    let mut steps = Vec::with_capacity(max_step + 1);
    steps.push(bare);
    let mut c = bare;
    for step in 1..=max_step {
        c = checked_step(c, step)?;
        steps.push(c);
    }
    Ok(RgTrajectory { steps })
}

/// Like [`flow`] but stops before the first overflowing step instead of
/// failing. Returns the trajectory and the number of steps that were dropped.
pub fn flow_truncated(bare: Coupling, max_step: usize) -> (RgTrajectory, usize) {
    let mut steps = vec![bare];
    let mut c = bare;
    for step in 1..=max_step {
        match checked_step(c, step) {
            Ok(next) => {
                c = next;
                steps.push(c);
            }
            Err(_) => return (RgTrajectory { steps }, max_step + 1 - step),
        }
    }
    (RgTrajectory { steps }, 0)
}

/// Coupling after `n` steps without keeping the intermediate ones.
pub fn coupling_at(bare: Coupling, n: usize) -> Result<Coupling> {
    (1..=n).try_fold(bare, checked_step)
}

/// Number of sites represented by the two renormalized sites after `n`
/// steps: `N = 2^(n+1)`.
pub fn effective_size(n: usize) -> Result<u64> {
    if n >= 63 {
        return Err(Error::SizeOverflow { step: n });
    }
    Ok(1u64 << (n + 1))
}

/// Largest bare field whose flow stays below [`MAX_FIELD`] through step `n`.
pub fn field_overflow_bound(n: usize) -> f64 {
    (MAX_FIELD.ln() * 0.5f64.powi(n as i32)).exp()
}

/// Derivatives of the step-`n` couplings with respect to the bare field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowDerivatives {
    /// `dJ_n / dg`.
    pub d_exchange: f64,
    /// `dg_n / dg`.
    pub d_field: f64,
}

/// Step-`n` coupling together with its derivatives in the bare field.
///
/// Chain rule through `g' = g^2` and `J' = J / sqrt(1 + g^2)`:
///
/// ```text
/// dg_{m+1} = 2 g_m dg_m
/// dJ_{m+1} = dJ_m / sqrt(1 + g_m^2) - J_m g_m (1 + g_m^2)^(-3/2) dg_m
/// ```
pub fn flow_with_derivatives(bare: Coupling, n: usize) -> Result<(Coupling, FlowDerivatives)> {
    let mut c = bare;
    let mut d = FlowDerivatives {
        d_exchange: 0.0,
        d_field: 1.0,
    };
    for step in 1..=n {
        let g = c.field;
        let s = 1.0 + g * g;
        let inv_sqrt = 1.0 / s.sqrt();
        d = FlowDerivatives {
            d_exchange: d.d_exchange * inv_sqrt - c.exchange * g * inv_sqrt / s * d.d_field,
            d_field: 2.0 * g * d.d_field,
        };
        c = checked_step(c, step)?;
        if !(d.d_field.is_finite() && d.d_exchange.is_finite()) {
            return Err(Error::FlowOverflow { step, field: c.field });
        }
    }
    Ok((c, d))
}

pub fn flow_derivatives(bare: Coupling, n: usize) -> Result<FlowDerivatives> {
    flow_with_derivatives(bare, n).map(|(_, d)| d)
}
