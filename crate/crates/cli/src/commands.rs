//! One function per subcommand, each turning resolved options into a
//! [`Report`].

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::json;

use qrg_core::coupling::{coupling_at, effective_size, flow_derivatives, flow_truncated, renormalize_step, Coupling};
use qrg_core::dynamics::{
    check_resolution, concurrence_closed_form, concurrence_envelope, concurrence_wootters, initial_state, linspace,
    period,
};
use qrg_core::scaling::{
    collapse as collapse_curves, derivative_curve, find_minimum, local_maxima, scaling_analysis, t_max_analytic,
    CollapseOrdinate, DerivativeCurve, DerivativeMethod, Minimum, ScalingFit, SweepConfig, TimeUnit, PEAK_FLOOR,
};
use qrg_core::verify::{concurrence_grid_check, propagator_grid_check, rg_grid_deviation, two_site_sweep};
use qrg_core::Error;

use crate::config::{MethodArg, Options, Span, Steps, UnitArg};
use crate::output::{Artifact, Report, Table};
use crate::Invalid;

fn single(span: Option<Span>, default: f64, flag: &str) -> Result<f64> {
    match span {
        None => Ok(default),
        Some(s) if s.is_point() => Ok(s.lo),
        Some(s) => bail!(Invalid(format!("{flag} takes a single value here, got {s}"))),
    }
}

fn range(span: Option<Span>, default: Span, flag: &str) -> Result<Span> {
    match span {
        None => Ok(default),
        Some(s) if !s.is_point() => Ok(s),
        Some(s) => bail!(Invalid(format!("{flag} takes a range lo..hi here, got {s}"))),
    }
}

fn non_negative(s: Span, flag: &str) -> Result<()> {
    if s.lo < 0.0 {
        bail!(Invalid(format!("{flag} must be >= 0, got {s}")));
    }
    Ok(())
}

fn unit_arg(u: TimeUnit) -> UnitArg {
    match u {
        TimeUnit::Bare => UnitArg::Bare,
        TimeUnit::Renormalized => UnitArg::Renormalized,
    }
}

fn unit_name(u: TimeUnit) -> &'static str {
    match u {
        TimeUnit::Bare => "bare",
        TimeUnit::Renormalized => "renormalized",
    }
}

/// `n, N, J_n, g_n, dJ_n/dg, dg_n/dg` per RG step. A single `--n m` means
/// steps `0..=m`.
pub fn flow(o: &Options) -> Result<Report> {
    let j = o.exchange_or(1.0)?;
    let g = single(o.field, 1.0, "--g")?;
    let steps = match o.steps {
        Some(s) if s.is_single() => Steps { lo: 0, hi: s.hi },
        Some(s) => s,
        None => Steps { lo: 0, hi: 8 },
    };
    let bare = Coupling::new(j, g)?;
    let resolved = Options {
        exchange: Some(j),
        field: Some(Span::point(g)),
        steps: Some(steps),
        ..Options::default()
    };
    let mut report = Report::new("flow", resolved.to_pairs());

    let (trajectory, dropped) = flow_truncated(bare, steps.hi);
    let mut table = Table::new(&["n", "N", "J_n", "g_n", "dJn_dg", "dgn_dg"]);
    let mut truncated = dropped;
    for n in steps.lo..=steps.hi.min(trajectory.max_step()) {
        let Ok(size) = effective_size(n) else {
            truncated += 1;
            continue;
        };
        let c = trajectory.at(n).expect("step within trajectory");
        let d = flow_derivatives(bare, n)?;
        table.push(vec![
            n.into(),
            size.into(),
            c.exchange().into(),
            c.field().into(),
            d.d_exchange.into(),
            d.d_field.into(),
        ]);
    }
    if truncated > 0 {
        report.warnings.push(format!(
            "{truncated} rows truncated: flow overflows beyond the last row"
        ));
    }
    report.summary = json!({ "rows": table.rows.len(), "truncated_rows": truncated });
    report.artifacts.push(Artifact::csv("flow.csv", &table));
    Ok(report)
}

#[derive(Serialize)]
struct FirstPeak {
    n: usize,
    g: Option<f64>,
    c: Option<f64>,
}

#[derive(Serialize)]
struct SeriesMax {
    n: usize,
    sampled_max: f64,
    envelope: f64,
}

/// Concurrence at fixed time versus field (columns `g,n,C`) when `--g` is a
/// range, otherwise at fixed field versus time (columns `t,n,C`).
pub fn dynamics(o: &Options) -> Result<Report> {
    let j = o.exchange_or(1.0)?;
    let steps = o.steps.unwrap_or(Steps { lo: 0, hi: 4 });
    match o.field {
        Some(g) if !g.is_point() => dynamics_vs_field(o, j, g, steps),
        _ => dynamics_vs_time(o, j, steps),
    }
}

fn dynamics_vs_field(o: &Options, j: f64, g: Span, steps: Steps) -> Result<Report> {
    non_negative(g, "--g")?;
    let t = single(o.time, 1.5, "--t")?;
    let points = o.points_or(1001)?;
    let resolved = Options {
        exchange: Some(j),
        field: Some(g),
        time: Some(Span::point(t)),
        points: Some(points),
        steps: Some(steps),
        ..Options::default()
    };
    let mut report = Report::new("dynamics", resolved.to_pairs());
    if o.rescale_time {
        report.warnings.push("--rescale-time ignored for a field sweep".into());
    }
    let fields = linspace(g.lo, g.hi, points);
    let mut table = Table::new(&["g", "n", "C"]);
    let mut first_peaks = Vec::new();
    for n in steps.iter() {
        let values = fields
            .iter()
            .map(|&field| Ok(concurrence_closed_form(coupling_at(Coupling::new(j, field)?, n)?, t)))
            .collect::<Result<Vec<_>>>()?;
        for (&field, &c) in fields.iter().zip(&values) {
            table.push(vec![field.into(), n.into(), c.into()]);
        }
        let first = local_maxima(&values, PEAK_FLOOR).first().copied();
        first_peaks.push(FirstPeak {
            n,
            g: first.map(|i| fields[i]),
            c: first.map(|i| values[i]),
        });
    }
    report.summary = json!({ "mode": "field", "t": t, "first_peaks": first_peaks });
    report.artifacts.push(Artifact::csv("dynamics.csv", &table));
    Ok(report)
}

fn dynamics_vs_time(o: &Options, j: f64, steps: Steps) -> Result<Report> {
    let g = single(o.field, 1.0, "--g")?;
    let t = range(o.time, Span::range(0.0, 20.0), "--t")?;
    non_negative(t, "--t")?;
    let points = o.points_or(4001)?;
    let bare = Coupling::new(j, g)?;
    let resolved = Options {
        exchange: Some(j),
        field: Some(Span::point(g)),
        time: Some(t),
        points: Some(points),
        steps: Some(steps),
        rescale_time: o.rescale_time,
        ..Options::default()
    };
    let mut report = Report::new("dynamics", resolved.to_pairs());
    let times = linspace(t.lo, t.hi, points);
    let mut header = vec!["t", "n", "C"];
    if o.rescale_time {
        header.push("t_rescaled");
    }
    let mut table = Table::new(&header);
    let mut maxima = Vec::new();
    for n in steps.iter() {
        effective_size(n)?;
        let c = coupling_at(bare, n)?;
        check_resolution(period(c), t.hi - t.lo, points)?;
        let mut sampled_max = 0.0f64;
        for &time in &times {
            let value = concurrence_closed_form(c, time);
            sampled_max = sampled_max.max(value);
            let mut row = vec![time.into(), n.into(), value.into()];
            if o.rescale_time {
                row.push((time * c.exchange()).into());
            }
            table.push(row);
        }
        maxima.push(SeriesMax {
            n,
            sampled_max,
            envelope: concurrence_envelope(c.field()),
        });
    }
    report.summary = json!({ "mode": "time", "g": g, "maxima": maxima });
    report.artifacts.push(Artifact::csv("dynamics.csv", &table));
    Ok(report)
}

fn time_unit(o: &Options) -> TimeUnit {
    o.time_unit.map(TimeUnit::from).unwrap_or_default()
}

/// `n,N,g,k,t_max,c_max` from the closed form.
pub fn peaks(o: &Options) -> Result<Report> {
    let j = o.exchange_or(1.0)?;
    let g = o.field.unwrap_or(Span::point(1.0));
    non_negative(g, "--g")?;
    let points = if g.is_point() { 1 } else { o.points_or(101)? };
    let steps = o.steps.unwrap_or(Steps { lo: 0, hi: 8 });
    let k = o.k_or(1)?;
    let unit = time_unit(o);
    let resolved = Options {
        exchange: Some(j),
        field: Some(g),
        points: (!g.is_point()).then_some(points),
        steps: Some(steps),
        k: Some(k),
        time_unit: Some(unit_arg(unit)),
        ..Options::default()
    };
    let mut report = Report::new("peaks", resolved.to_pairs());
    let mut table = Table::new(&["n", "N", "g", "k", "t_max", "c_max"]);
    for n in steps.iter() {
        for field in linspace(g.lo, g.hi, points) {
            let p = t_max_analytic(Coupling::new(j, field)?, n, k, unit)?;
            table.push(vec![
                p.n.into(),
                p.size.into(),
                p.field.into(),
                p.k.into(),
                p.t_max.into(),
                p.c_max.into(),
            ]);
        }
    }
    report.summary = json!({ "time_unit": unit_name(unit) });
    report.artifacts.push(Artifact::csv("peaks.csv", &table));
    Ok(report)
}

struct Sweep {
    cfg: SweepConfig,
    steps: Steps,
    resolved: Options,
}

fn sweep(o: &Options, default_steps: Steps) -> Result<Sweep> {
    let j = o.exchange_or(1.0)?;
    let defaults = SweepConfig::default();
    let g = range(
        o.field,
        Span::range(defaults.field_range.0, defaults.field_range.1),
        "--g",
    )?;
    let points = o.points_or(defaults.points)?;
    let k = o.k_or(defaults.k)?;
    let unit = time_unit(o);
    let method = o.method.unwrap_or(MethodArg::Exact);
    let steps = o.steps.unwrap_or(default_steps);
    let cfg = SweepConfig {
        exchange: j,
        field_range: (g.lo, g.hi),
        points,
        k,
        unit,
        method: DerivativeMethod::from(method),
    };
    let resolved = Options {
        exchange: Some(j),
        field: Some(g),
        points: Some(points),
        steps: Some(steps),
        k: Some(k),
        method: Some(method),
        time_unit: Some(unit_arg(unit)),
        ..Options::default()
    };
    Ok(Sweep { cfg, steps, resolved })
}

#[derive(Serialize)]
struct MinimumEntry {
    n: usize,
    #[serde(rename = "N")]
    size: u64,
    g_m: Option<f64>,
    #[serde(rename = "dT_dg_min")]
    dt_dg_min: Option<f64>,
    interior: bool,
    grid_local_minima: usize,
}

fn grid_local_minima(curve: &DerivativeCurve) -> usize {
    let v: Vec<f64> = curve.points.iter().map(|p| p.1).collect();
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1])
        .count()
}

/// `n,N,g,dT_dg` per RG step, with the located minima as JSON.
pub fn derivative(o: &Options) -> Result<Report> {
    let s = sweep(o, Steps { lo: 3, hi: 8 })?;
    let mut report = Report::new("derivative", s.resolved.to_pairs());
    let mut table = Table::new(&["n", "N", "g", "dT_dg"]);
    let mut minima = Vec::new();
    for n in s.steps.iter() {
        let curve = derivative_curve(&s.cfg, n)?;
        for &(g, d) in &curve.points {
            table.push(vec![n.into(), curve.size.into(), g.into(), d.into()]);
        }
        let entry = match find_minimum(&curve) {
            Ok(m) => MinimumEntry {
                n,
                size: curve.size,
                g_m: Some(m.field),
                dt_dg_min: Some(m.value),
                interior: true,
                grid_local_minima: grid_local_minima(&curve),
            },
            Err(Error::MinimumOnBoundary { field }) => {
                report
                    .warnings
                    .push(format!("n = {n}: minimum on the range boundary g = {field}; widen --g"));
                MinimumEntry {
                    n,
                    size: curve.size,
                    g_m: None,
                    dt_dg_min: None,
                    interior: false,
                    grid_local_minima: grid_local_minima(&curve),
                }
            }
            Err(e) => return Err(e.into()),
        };
        minima.push(entry);
    }
    let summary = json!({
        "time_unit": unit_name(s.cfg.unit),
        "k": s.cfg.k,
        "minima": minima,
    });
    report.artifacts.push(Artifact::csv("derivative.csv", &table));
    report.artifacts.push(Artifact::json("derivative.json", &summary));
    report.summary = summary;
    Ok(report)
}

#[derive(Serialize)]
struct FitJson {
    exponent: f64,
    prefactor: f64,
    residual: f64,
}

impl From<&ScalingFit> for FitJson {
    fn from(f: &ScalingFit) -> Self {
        Self {
            exponent: f.exponent,
            prefactor: f.prefactor,
            residual: f.residual,
        }
    }
}

#[derive(Serialize)]
struct SampleJson {
    n: usize,
    #[serde(rename = "N")]
    size: u64,
    g_m: f64,
    #[serde(rename = "dT_dg_min")]
    dt_dg_min: f64,
}

fn samples(curves: &[DerivativeCurve], minima: &[Minimum]) -> Vec<SampleJson> {
    curves
        .iter()
        .zip(minima)
        .map(|(c, m)| SampleJson {
            n: c.n,
            size: c.size,
            g_m: m.field,
            dt_dg_min: m.value,
        })
        .collect()
}

/// Exponent fits of the dip depth and position against `N`, as JSON.
pub fn scaling(o: &Options) -> Result<Report> {
    let s = sweep(o, Steps { lo: 3, hi: 8 })?;
    let mut report = Report::new("scaling", s.resolved.to_pairs());
    let a = scaling_analysis(&s.cfg, s.steps.iter())?;
    let summary = json!({
        "time_unit": unit_name(s.cfg.unit),
        "k": s.cfg.k,
        "theta_fit": FitJson::from(&a.theta),
        "gm_drift_fit": FitJson::from(&a.drift),
        "samples": samples(&a.curves, &a.minima),
    });
    report.artifacts.push(Artifact::json("scaling.json", &summary));
    report.summary = summary;
    Ok(report)
}

/// Collapsed curves `N,x,y` with `x = N (g - g_m)`, `y = dT/dg|g_m - dT/dg`,
/// and the collapse metric of the two largest sizes as JSON.
pub fn collapse(o: &Options) -> Result<Report> {
    let s = sweep(o, Steps { lo: 5, hi: 8 })?;
    let mut report = Report::new("collapse", s.resolved.to_pairs());
    let curves = s
        .steps
        .iter()
        .map(|n| derivative_curve(&s.cfg, n))
        .collect::<qrg_core::Result<Vec<_>>>()?;
    let minima = curves.iter().map(find_minimum).collect::<qrg_core::Result<Vec<_>>>()?;
    let raw = collapse_curves(&curves, &minima, CollapseOrdinate::Raw)?;
    let scaled = collapse_curves(&curves, &minima, CollapseOrdinate::Amplitude)?;

    let mut table = Table::new(&["N", "x", "y"]);
    for group in &raw.groups {
        for p in &group.points {
            table.push(vec![p.size.into(), p.x.into(), p.y.into()]);
        }
    }
    let summary = json!({
        "time_unit": unit_name(s.cfg.unit),
        "k": s.cfg.k,
        "collapse_metric": raw.metric,
        "compared_sizes": [raw.compared.0, raw.compared.1],
        "overlap": [raw.overlap.0, raw.overlap.1],
        "amplitude_collapse_metric": scaled.metric,
        "samples": samples(&curves, &minima),
    });
    report.artifacts.push(Artifact::csv("collapse.csv", &table));
    report.artifacts.push(Artifact::json("collapse.json", &summary));
    report.summary = summary;
    Ok(report)
}

/// Outcome of one oracle suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn suite(name: &'static str, residual: f64, tolerance: f64) -> SuiteResult {
    SuiteResult {
        suite: name,
        max_residual: residual,
        tolerance,
        passed: residual <= tolerance,
    }
}

/// Every oracle suite with `rule` as the closed-form decimation step.
pub fn verify_suites<F>(grid_points: usize, rule: F) -> Result<Vec<SuiteResult>>
where
    F: Fn(Coupling) -> Coupling,
{
    let (entry, unitarity) = propagator_grid_check(grid_points);
    Ok(vec![
        suite("rg_recursion", rg_grid_deviation(grid_points, rule)?, 1e-10),
        suite("propagator_entries", entry, 1e-10),
        suite("propagator_unitarity", unitarity, 1e-12),
        suite("concurrence_pipeline", concurrence_grid_check(grid_points)?, 1e-9),
        suite("initial_concurrence", concurrence_wootters(&initial_state())?, 0.0),
        suite("two_site_sweep", two_site_sweep(grid_points * 10)?, 1e-9),
    ])
}

pub fn verify(o: &Options) -> Result<Report> {
    verify_with_rule(o, renormalize_step)
}

/// [`verify`] against an arbitrary decimation rule.
pub fn verify_with_rule<F>(o: &Options, rule: F) -> Result<Report>
where
    F: Fn(Coupling) -> Coupling,
{
    let grid_points = o.grid_points.unwrap_or(50);
    if grid_points < 2 {
        bail!(Invalid(format!("--grid-points must be >= 2, got {grid_points}")));
    }
    let resolved = Options {
        grid_points: Some(grid_points),
        ..Options::default()
    };
    let mut report = Report::new("verify", resolved.to_pairs());
    let results = verify_suites(grid_points, rule)?;

    let mut csv = String::from("suite,max_residual,tolerance,passed\n");
    for r in &results {
        let line = format!(
            "{:<22} {:>24} <= {:<8e} {}",
            r.suite,
            crate::output::float(r.max_residual),
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
        report.console.push_str(&line);
        report.console.push('\n');
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.suite,
            crate::output::float(r.max_residual),
            crate::output::float(r.tolerance),
            r.passed
        ));
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.suite).collect();
    if !failed.is_empty() {
        report.failure = Some(format!("verify failed: {}", failed.join(", ")));
    }
    report.summary = json!({ "suites": results });
    report.artifacts.push(Artifact {
        name: "verify.csv".into(),
        contents: csv.into_bytes(),
    });
    Ok(report)
}
