//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;

use qrg_cli::commands;
use qrg_cli::config::{Options, Span, Steps};
use qrg_core::coupling::{coupling_at, Coupling};
use qrg_core::dynamics::{
    concurrence_closed_form, concurrence_envelope, concurrence_wootters, initial_state, linspace, period,
    rg_concurrence_series,
};
use qrg_core::scaling::{
    collapse, derivative_curve, find_minimum, scaling_analysis, t_max_numeric, CollapseOrdinate, SweepConfig,
};
use qrg_core::verify::{concurrence_grid_check, propagator_grid_check, rg_grid_check, ORACLE_FIELDS};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rg_recursion() -> Outcome {
    let dev = rg_grid_check(50).map_err(|e| e.to_string())?;
    check(
        dev < 1e-10,
        format!("max |projection - closed form| over 50 fields = {dev:.3e} (< 1e-10)"),
    )
}

fn propagator_equivalence() -> Outcome {
    let (entry, unitarity) = propagator_grid_check(50);
    check(
        entry < 1e-10 && unitarity < 1e-12,
        format!("entrywise {entry:.3e} (< 1e-10), unitarity {unitarity:.3e} (< 1e-12)"),
    )
}

fn concurrence_pipeline() -> Outcome {
    let dev = concurrence_grid_check(50).map_err(|e| e.to_string())?;
    let c0 = concurrence_wootters(&initial_state()).map_err(|e| e.to_string())?;
    check(
        dev < 1e-9 && c0 == 0.0,
        format!("closed form vs Wootters {dev:.3e} (< 1e-9), C(rho0) = {c0}"),
    )
}

/// Zeros of sampled `C(t)`: local minima refined by a parabola through
/// `sqrt(C)`, which is quadratic in `t` around each zero.
fn located_zeros(times: &[f64], values: &[f64]) -> Vec<f64> {
    let h = times[1] - times[0];
    (1..values.len() - 1)
        .filter(|&i| values[i] < values[i - 1] && values[i] <= values[i + 1])
        .map(|i| {
            let [a, b, c] = [values[i - 1], values[i], values[i + 1]].map(f64::sqrt);
            let curvature = a - 2.0 * b + c;
            let offset = if curvature > 0.0 {
                0.5 * (a - c) / curvature
            } else {
                0.0
            };
            times[i] + offset * h
        })
        .collect()
}

fn period_law() -> Outcome {
    let mut worst = 0.0f64;
    for j in [1.0, 0.7] {
        for g in ORACLE_FIELDS {
            let c = Coupling::new(j, g).unwrap();
            let tp = period(c);
            let times = linspace(0.0, 3.1 * tp, 2001);
            let values: Vec<f64> = times.iter().map(|&t| concurrence_closed_form(c, t)).collect();
            if g == 0.0 {
                if values.iter().any(|&v| v != 0.0) {
                    return Err("C(t) not identically zero at g = 0".into());
                }
                continue;
            }
            let zeros = located_zeros(&times, &values);
            for m in 1..=3 {
                let target = m as f64 * tp;
                let miss = zeros.iter().map(|z| (z - target).abs()).fold(f64::INFINITY, f64::min);
                worst = worst.max(miss);
            }
        }
    }
    check(
        worst < 1e-6,
        format!("worst distance of a located zero from m * 2pi/(J sqrt(1+4g^2)) = {worst:.3e} (< 1e-6)"),
    )
}

fn max_concurrence(g: f64, n: usize, refined: bool) -> Result<f64, String> {
    let bare = Coupling::unit(g).unwrap();
    let c = coupling_at(bare, n).map_err(|e| e.to_string())?;
    let series = rg_concurrence_series(bare, n, 2.0 * period(c), 4001).map_err(|e| e.to_string())?;
    if refined {
        Ok(t_max_numeric(&series, 1).map_err(|e| e.to_string())?.c_max)
    } else {
        Ok(series.values.iter().copied().fold(0.0, f64::max))
    }
}

fn critical_envelope() -> Outcome {
    let mut worst = 0.0f64;
    for n in 0..=8 {
        worst = worst.max((max_concurrence(1.0, n, true)? - 0.2).abs());
    }
    let below: Vec<f64> = (0..=8)
        .map(|n| max_concurrence(0.9, n, false))
        .collect::<Result<_, _>>()?;
    let decreasing = below.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = below.iter().map(|v| format!("{v:.3e}")).collect();
    check(
        worst < 1e-9 && decreasing && below[6] < 1e-3,
        format!(
            "g=1: max |max_t C - 0.2| over n<=8 = {worst:.3e} (< 1e-9); g=0.9: strictly decreasing = {decreasing} (max_t C by n = [{}]), n=6 max = {:.3e} (< 1e-3)",
            shown.join(", "),
            below[6]
        ),
    )
}

fn divergence_exponent() -> Outcome {
    let a = scaling_analysis(&SweepConfig::default(), 3..=8).map_err(|e| e.to_string())?;
    let theta = a.theta.exponent;
    check((theta - 1.0).abs() <= 0.1, format!("theta = {theta:.4} (1.0 +- 0.1)"))
}

fn minimum_drift() -> Outcome {
    let a = scaling_analysis(&SweepConfig::default(), 3..=8).map_err(|e| e.to_string())?;
    let slope = a.drift.exponent;
    let below = a.minima.iter().all(|m| m.field < 1.0);
    check(
        (slope + 1.0).abs() <= 0.15 && below,
        format!("ln(1 - g_m) vs ln N slope = {slope:.4} (-1.0 +- 0.15), all g_m < 1 = {below}"),
    )
}

fn data_collapse() -> Outcome {
    let cfg = SweepConfig::default();
    let curves: Vec<_> = (7..=8)
        .map(|n| derivative_curve(&cfg, n))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let minima: Vec<_> = curves
        .iter()
        .map(find_minimum)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let raw = collapse(&curves, &minima, CollapseOrdinate::Raw).map_err(|e| e.to_string())?;
    let scaled = collapse(&curves, &minima, CollapseOrdinate::Amplitude).map_err(|e| e.to_string())?;
    check(
        raw.metric < 0.05,
        format!(
            "N = {} vs {}: normalized sup-norm difference = {:.4} (< 0.05); amplitude-normalized ordinate gives {:.4}",
            raw.compared.0, raw.compared.1, raw.metric, scaled.metric
        ),
    )
}

fn field_sweep() -> Outcome {
    let o = Options {
        field: Some(Span::range(0.0, 5.0)),
        time: Some(Span::point(1.5)),
        points: Some(5001),
        steps: Some(Steps { lo: 0, hi: 4 }),
        ..Options::default()
    };
    let report = commands::dynamics(&o).map_err(|e| e.to_string())?;
    let peaks: Vec<f64> = report.summary["first_peaks"]
        .as_array()
        .ok_or("no first_peaks")?
        .iter()
        .map(|p| p["g"].as_f64().ok_or("missing first peak"))
        .collect::<Result<_, _>>()?;
    let toward = peaks.windows(2).all(|w| (1.0 - w[1]).abs() < (1.0 - w[0]).abs()) && peaks.iter().all(|&g| g < 1.0);

    let mut vanish = true;
    let mut largest = 0.0f64;
    for n in 0..=4 {
        let at = |g: f64| coupling_at(Coupling::unit(g).unwrap(), n).unwrap();
        let c = concurrence_closed_form(at(100.0), 1.5);
        largest = largest.max(c);
        let env: Vec<f64> = [10.0, 30.0, 100.0]
            .iter()
            .map(|&g| concurrence_envelope(at(g).field()))
            .collect();
        vanish &= c < 1e-4 && env.windows(2).all(|w| w[1] < w[0]);
    }
    check(
        toward && vanish,
        format!(
            "first peak g by n = {peaks:.3?} (monotone toward 1 = {toward}); max C(g=100) = {largest:.2e} (< 1e-4)"
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_qrg"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove(qrg_cli::OUT_DIR_ENV)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "qrg {args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    Ok(())
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 8] = [
        &["flow", "--g", "0.9", "--steps", "12"],
        &["dynamics", "--g", "0..3", "--t", "1.5", "--points", "301"],
        &[
            "dynamics",
            "--g",
            "1",
            "--t-range",
            "0..10",
            "--points",
            "2001",
            "--rescale-time",
        ],
        &["peaks", "--g", "0.5..1.5", "--points", "11", "--k", "2"],
        &["derivative", "--n", "3..5", "--method", "fd"],
        &["scaling", "--n", "3..6", "--points", "501"],
        &["collapse", "--n", "5..6", "--points", "501"],
        &["verify", "--grid-points", "10"],
    ];
    let mut compared = 0;
    for args in runs {
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_cli(a.path(), args)?;
        run_cli(b.path(), args)?;
        let (fa, fb) = (data_files(a.path()), data_files(b.path()));
        if fa.is_empty() || fa != fb {
            return Err(format!("qrg {args:?}: data files differ between identical runs"));
        }
        compared += fa.len();
    }
    Ok(format!(
        "{} commands run twice, {compared} data files byte-identical",
        runs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("RG recursion oracle", rg_recursion),
        ("propagator equivalence", propagator_equivalence),
        ("concurrence pipeline", concurrence_pipeline),
        ("period law", period_law),
        ("critical-point envelope", critical_envelope),
        ("divergence exponent", divergence_exponent),
        ("minimum drift", minimum_drift),
        ("data collapse", data_collapse),
        ("field sweep at t = 1.5", field_sweep),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (status, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {status} {name}: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
