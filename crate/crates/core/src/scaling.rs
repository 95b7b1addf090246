//! Peak times of the concurrence and their finite-size scaling.
//!
//! Every maximum of `C(t)` sits where `sin^4(omega_n t) = 1`, so the `k`-th
//! one is at
//!
//! ```text
//! T_max^k = (2k - 1) pi / (2 J_n sqrt(1 + 4 g_n^2))
//! ```
//!
//! with `(J_n, g_n)` the couplings after `n` RG steps. Its derivative with
//! respect to the bare field develops a dip that sharpens and moves toward
//! the critical field as the effective size `N = 2^(n+1)` grows. This module
//! locates the dip, fits its depth and position against `N`, and maps the
//! curves for different sizes onto common scaling variables.
//!
//! Time can be measured in bare units or in units of the renormalized
//! exchange `1/J_n` ([`TimeUnit`]). The two differ by the factor `J_n`, which
//! itself depends on the field: in bare units the derivative picks up
//! `dJ_n/dg`, the dip sits above `g = 1` and deepens like `N^1.45`. In
//! renormalized units `T_max` depends on the field only through `g_n`, the
//! dip approaches `g = 1` from below as `1 - g_m ~ N^-1` and deepens like
//! `N^1`. The scaling pipeline defaults to renormalized units.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use crate::coupling::{coupling_at, effective_size, field_overflow_bound, flow_with_derivatives, Coupling};
use crate::dynamics::{concurrence_envelope, linspace, ConcurrenceSeries, MIN_SAMPLES_PER_PERIOD};
use crate::error::{Error, Result};

/// Relative step of the central finite difference in the bare field.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

/// Convergence width of the golden-section refinement of `g_m`.
pub const MINIMUM_TOLERANCE: f64 = 1e-10;

/// Concurrence values at or below this are not counted as peaks.
pub const PEAK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TimeUnit {
    /// Time in units of the bare `1/J`.
    Bare,
    /// Time in units of `1/J_n`, i.e. `tau = J_n t`.
    #[default]
    Renormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DerivativeMethod {
    #[default]
    Exact,
    FiniteDifference,
}

/// Time and height of the `k`-th concurrence maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakRecord {
    pub n: usize,
    pub size: u64,
    /// Bare field.
    pub field: f64,
    pub k: usize,
    pub t_max: f64,
    pub c_max: f64,
    pub unit: TimeUnit,
}

fn check_order(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("peak order k starts at 1".into()));
    }
    Ok(())
}

fn odd_quarter_turns(k: usize) -> f64 {
    (2 * k - 1) as f64 * PI / 2.0
}

fn peak_time(c: Coupling, k: usize, unit: TimeUnit) -> f64 {
    let t = odd_quarter_turns(k) / (2.0 * c.field()).hypot(1.0);
    match unit {
        TimeUnit::Bare => t / c.exchange(),
        TimeUnit::Renormalized => t,
    }
}

/// `k`-th maximum from the closed form.
pub fn t_max_analytic(bare: Coupling, n: usize, k: usize, unit: TimeUnit) -> Result<PeakRecord> {
    check_order(k)?;
    let size = effective_size(n)?;
    let c = coupling_at(bare, n)?;
    let c_max = concurrence_envelope(c.field());
    if !(c_max > 0.0) {
        return Err(Error::InsufficientPeaks { requested: k, found: 0 });
    }
    Ok(PeakRecord {
        n,
        size,
        field: bare.field(),
        k,
        t_max: peak_time(c, k, unit),
        c_max,
        unit,
    })
}

/// Indices of strict local maxima above `floor`, in order.
///
/// A sample counts when it rises above its left neighbour and is not
/// exceeded by its right one.
pub fn local_maxima(values: &[f64], floor: f64) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > floor && values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}

/// Vertex of the parabola through three equally spaced samples: offset in
/// units of the spacing, and the value there.
pub fn parabolic_vertex(y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature == 0.0 {
        return (0.0, y1);
    }
    let offset = 0.5 * (y0 - y2) / curvature;
    (offset, y1 - 0.25 * (y0 - y2) * offset)
}

/// Maps `C` to `(4C(1 - C))^(1/4) = sqrt(a) |sin(omega t)|`, which is smooth at
/// the peaks even where `C` itself has a cusp (`g = 1/2`).
fn amplitude_coordinate(c: f64) -> f64 {
    (4.0 * c * (1.0 - c)).max(0.0).powf(0.25)
}

fn from_amplitude_coordinate(s: f64) -> f64 {
    0.5 * (1.0 - (1.0 - s.powi(4).min(1.0)).sqrt())
}

/// `k`-th maximum located in sampled data.
///
/// Peaks are found by comparing neighbours in time order and refined with a
/// parabola through the three samples around the peak, fitted in the
/// coordinate `(4C(1 - C))^(1/4)` where the peak is locally quadratic.
pub fn t_max_numeric(series: &ConcurrenceSeries, k: usize) -> Result<PeakRecord> {
    check_order(k)?;
    if series.times.len() < 3 {
        return Err(Error::InsufficientPeaks { requested: k, found: 0 });
    }
    let per_period = series.samples_per_period();
    if per_period < MIN_SAMPLES_PER_PERIOD as f64 {
        return Err(Error::UnderResolvedGrid {
            per_period,
            required: MIN_SAMPLES_PER_PERIOD,
        });
    }
    let peaks = local_maxima(&series.values, PEAK_FLOOR);
    let &i = peaks.get(k - 1).ok_or(Error::InsufficientPeaks {
        requested: k,
        found: peaks.len(),
    })?;

    let [y0, y1, y2] = [i - 1, i, i + 1].map(|j| amplitude_coordinate(series.values[j]));
    let (offset, top) = parabolic_vertex(y0, y1, y2);
    Ok(PeakRecord {
        n: series.rg_step,
        size: effective_size(series.rg_step)?,
        field: series.bare.field(),
        k,
        t_max: series.times[i] + offset * series.step(),
        c_max: from_amplitude_coordinate(top),
        unit: TimeUnit::Bare,
    })
}

/// `dT_max^k / dg` with respect to the bare field.
pub fn dtmax_dg(bare: Coupling, n: usize, k: usize, method: DerivativeMethod, unit: TimeUnit) -> Result<f64> {
    check_order(k)?;
    let g = bare.field();
    if !(g > 0.0) {
        return Err(Error::InvalidArgument(format!("bare field must be > 0, got {g}")));
    }
    match method {
        DerivativeMethod::Exact => {
            let (c, d) = flow_with_derivatives(bare, n)?;
            let gn = c.field();
            let s2 = 1.0 + 4.0 * gn * gn;
            let t = peak_time(c, k, unit);
            let field_part = 4.0 * gn * d.d_field / s2;
            Ok(match unit {
                TimeUnit::Bare => -t * (d.d_exchange / c.exchange() + field_part),
                TimeUnit::Renormalized => -t * field_part,
            })
        }
        DerivativeMethod::FiniteDifference => {
            let h = FD_RELATIVE_STEP * g;
            let at = |field| -> Result<f64> {
                Ok(t_max_analytic(Coupling::new(bare.exchange(), field)?, n, k, unit)?.t_max)
            };
            Ok((at(g + h)? - at(g - h)?) / (2.0 * h))
        }
    }
}

/// Parameters of a field sweep of `dT_max^k/dg`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub exchange: f64,
    pub field_range: (f64, f64),
    pub points: usize,
    pub k: usize,
    pub unit: TimeUnit,
    pub method: DerivativeMethod,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            exchange: 1.0,
            field_range: (0.5, 1.1),
            points: 2001,
            k: 1,
            unit: TimeUnit::Renormalized,
            method: DerivativeMethod::Exact,
        }
    }
}

/// `dT_max^k/dg` on a uniform grid of bare fields at one RG step.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCurve {
    pub n: usize,
    pub size: u64,
    pub k: usize,
    pub exchange: f64,
    pub unit: TimeUnit,
    /// `(g, dT/dg)`, strictly increasing in `g`.
    pub points: Vec<(f64, f64)>,
}

impl DerivativeCurve {
    /// Exact derivative of this curve's family at an arbitrary field.
    pub fn evaluate(&self, field: f64) -> Result<f64> {
        dtmax_dg(
            Coupling::new(self.exchange, field)?,
            self.n,
            self.k,
            DerivativeMethod::Exact,
            self.unit,
        )
    }
}

pub fn derivative_curve(cfg: &SweepConfig, n: usize) -> Result<DerivativeCurve> {
    let (lo, hi) = cfg.field_range;
    if cfg.points < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 points, got {}",
            cfg.points
        )));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "field range {lo}..{hi} must satisfy 0 < lo < hi"
        )));
    }
    let bound = field_overflow_bound(n);
    if hi >= bound {
        return Err(Error::FlowOverflow {
            step: n,
            field: hi.powf(2f64.powi(n as i32)),
        });
    }
    let points = linspace(lo, hi, cfg.points)
        .into_iter()
        .map(|g| {
            Ok((
                g,
                dtmax_dg(Coupling::new(cfg.exchange, g)?, n, cfg.k, cfg.method, cfg.unit)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DerivativeCurve {
        n,
        size: effective_size(n)?,
        k: cfg.k,
        exchange: cfg.exchange,
        unit: cfg.unit,
        points,
    })
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is narrower than `tol`.
pub fn golden_section_minimize<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Location `g_m` and depth of the dip of a derivative curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub field: f64,
    pub value: f64,
}

/// Grid argmin refined by golden-section search on the exact derivative
/// between the two neighbouring grid points.
pub fn find_minimum(curve: &DerivativeCurve) -> Result<Minimum> {
    let pts = &curve.points;
    let (i, _) = pts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or(Error::InsufficientSamples { got: 0, need: 3 })?;
    if i == 0 || i + 1 == pts.len() {
        return Err(Error::MinimumOnBoundary { field: pts[i].0 });
    }
    let (field, value) = golden_section_minimize(|g| curve.evaluate(g), pts[i - 1].0, pts[i + 1].0, MINIMUM_TOLERANCE)?;
    if value <= pts[i].1 {
        Ok(Minimum { field, value })
    } else {
        Ok(Minimum {
            field: pts[i].0,
            value: pts[i].1,
        })
    }
}

/// Straight-line fit in log-log space.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square deviation of the fitted line in log space.
    pub residual: f64,
    /// `(N, value)` pairs the fit was made from.
    pub samples: Vec<(u64, f64)>,
}

fn fit_log_log(samples: &[(u64, f64)], ys: &[f64]) -> ScalingFit {
    let xs: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sq: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        residual: (sq / m).sqrt(),
        samples: samples.to_vec(),
    }
}

fn check_sizes(samples: &[(u64, f64)]) -> Result<()> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: 3,
        });
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) || samples[0].0 == 0 {
        return Err(Error::InvalidArgument(
            "sizes must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `ln |dT/dg at g_m|` against `ln N`; the slope estimates `theta = 1/nu`.
pub fn fit_theta(samples: &[(u64, f64)]) -> Result<ScalingFit> {
    check_sizes(samples)?;
    let ys = samples
        .iter()
        .enumerate()
        .map(|(index, &(_, value))| {
            if value > 0.0 && value.is_finite() {
                Ok(value.ln())
            } else {
                Err(Error::NonPositiveSample { index, value })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_log_log(samples, &ys))
}

/// `ln(1 - g_m)` against `ln N`; the slope estimates `-1/nu`.
pub fn fit_gm_drift(samples: &[(u64, f64)]) -> Result<ScalingFit> {
    check_sizes(samples)?;
    let ys = samples
        .iter()
        .enumerate()
        .map(|(index, &(_, field))| {
            if field < crate::coupling::CRITICAL_FIELD {
                Ok((crate::coupling::CRITICAL_FIELD - field).ln())
            } else {
                Err(Error::NotBelowCritical { index, field })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit_log_log(samples, &ys))
}

/// Curves, minima and both exponent fits over a range of RG steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingAnalysis {
    pub curves: Vec<DerivativeCurve>,
    pub minima: Vec<Minimum>,
    pub theta: ScalingFit,
    pub drift: ScalingFit,
}

pub fn scaling_analysis(cfg: &SweepConfig, steps: RangeInclusive<usize>) -> Result<ScalingAnalysis> {
    let curves = steps.map(|n| derivative_curve(cfg, n)).collect::<Result<Vec<_>>>()?;
    let minima = curves.iter().map(find_minimum).collect::<Result<Vec<_>>>()?;
    let depth: Vec<(u64, f64)> = curves
        .iter()
        .zip(&minima)
        .map(|(c, m)| (c.size, m.value.abs()))
        .collect();
    let position: Vec<(u64, f64)> = curves.iter().zip(&minima).map(|(c, m)| (c.size, m.field)).collect();
    Ok(ScalingAnalysis {
        theta: fit_theta(&depth)?,
        drift: fit_gm_drift(&position)?,
        curves,
        minima,
    })
}

/// Ordinate used for the data collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CollapseOrdinate {
    /// `dT/dg|_{g_m} - dT/dg`.
    #[default]
    Raw,
    /// The raw ordinate divided by `|dT/dg|_{g_m}|`.
    Amplitude,
}

/// One point of a collapsed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsePoint {
    /// `N (g - g_m)`.
    pub x: f64,
    pub y: f64,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseGroup {
    pub size: u64,
    pub points: Vec<CollapsePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collapse {
    pub groups: Vec<CollapseGroup>,
    /// Sup-norm difference of the two largest sizes on their common range,
    /// relative to the larger curve's ordinate range.
    pub metric: f64,
    /// Sizes compared by `metric`, smaller first.
    pub compared: (u64, u64),
    pub overlap: (f64, f64),
}

fn interpolate(points: &[CollapsePoint], x: f64) -> f64 {
    let j = points.partition_point(|p| p.x < x);
    if j == 0 {
        return points[0].y;
    }
    if j == points.len() {
        return points[j - 1].y;
    }
    let (a, b) = (points[j - 1], points[j]);
    if b.x == a.x {
        return a.y;
    }
    a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
}

/// Normalized sup-norm distance between two collapsed curves on their
/// overlapping abscissa range, relative to the ordinate range of `larger`.
pub fn collapse_distance(smaller: &[CollapsePoint], larger: &[CollapsePoint]) -> Result<(f64, (f64, f64))> {
    let span = |p: &[CollapsePoint]| (p.first().map(|q| q.x), p.last().map(|q| q.x));
    let (Some(a0), Some(a1)) = span(smaller) else {
        return Err(Error::NonOverlapping);
    };
    let (Some(b0), Some(b1)) = span(larger) else {
        return Err(Error::NonOverlapping);
    };
    let (lo, hi) = (a0.max(b0), a1.min(b1));
    if !(hi > lo) {
        return Err(Error::NonOverlapping);
    }
    let grid = linspace(lo, hi, smaller.len().max(larger.len()));
    let sup = grid
        .iter()
        .map(|&x| (interpolate(smaller, x) - interpolate(larger, x)).abs())
        .fold(0.0, f64::max);
    let (ymin, ymax) = larger.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), p| {
        (mn.min(p.y), mx.max(p.y))
    });
    let range = ymax - ymin;
    let metric = if sup == 0.0 {
        0.0
    } else if range > 0.0 {
        sup / range
    } else {
        f64::INFINITY
    };
    Ok((metric, (lo, hi)))
}

/// Maps each curve to `(N (g - g_m), dT/dg|_{g_m} - dT/dg)` and measures how
/// well the two largest sizes fall on each other.
pub fn collapse(curves: &[DerivativeCurve], minima: &[Minimum], ordinate: CollapseOrdinate) -> Result<Collapse> {
    if curves.len() != minima.len() {
        return Err(Error::InvalidArgument("one minimum per curve required".into()));
    }
    if curves.len() < 2 {
        return Err(Error::InsufficientSamples {
            got: curves.len(),
            need: 2,
        });
    }
    if curves.iter().any(|c| c.k != curves[0].k) {
        return Err(Error::InvalidArgument("curves must share the peak order k".into()));
    }
    let mut groups: Vec<CollapseGroup> = curves
        .iter()
        .zip(minima)
        .map(|(curve, m)| {
            let n = curve.size as f64;
            let scale = match ordinate {
                CollapseOrdinate::Raw => 1.0,
                CollapseOrdinate::Amplitude => m.value.abs(),
            };
            let points = curve
                .points
                .iter()
                .map(|&(g, v)| CollapsePoint {
                    x: n * (g - m.field),
                    y: (m.value - v) / scale,
                    size: curve.size,
                })
                .filter(|p| p.x.is_finite() && p.y.is_finite())
                .collect();
            CollapseGroup {
                size: curve.size,
                points,
            }
        })
        .collect();
    groups.sort_by_key(|g| g.size);

    let (a, b) = (&groups[groups.len() - 2], &groups[groups.len() - 1]);
    let (metric, overlap) = collapse_distance(&a.points, &b.points)?;
    let compared = (a.size, b.size);
    Ok(Collapse {
        groups,
        metric,
        compared,
        overlap,
    })
}
