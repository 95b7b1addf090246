//! Run options: flags, flat `key = value` config files, and their merge.
//!
//! Flags override config-file keys, which override per-command defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use qrg_core::scaling::{DerivativeMethod, TimeUnit};

use crate::Invalid;

/// Upper limit on grid sizes.
pub const MAX_POINTS: usize = 10_000_000;

/// A value `a` or a closed range `a..b` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn range(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |x: &str| -> Result<f64, String> {
            let v: f64 = x.trim().parse().map_err(|_| format!("not a number: {x:?}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("not finite: {x:?}"))
            }
        };
        match s.split_once("..") {
            Some((a, b)) => {
                let (lo, hi) = (num(a)?, num(b)?);
                if lo >= hi {
                    return Err(format!("empty range {s:?}: need lo < hi"));
                }
                Ok(Self { lo, hi })
            }
            None => num(s).map(Self::point),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{:?}", self.lo)
        } else {
            write!(f, "{:?}..{:?}", self.lo, self.hi)
        }
    }
}

/// RG steps: `n` or the inclusive range `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Steps {
    pub lo: usize,
    pub hi: usize,
}

impl Steps {
    pub fn iter(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub fn is_single(&self) -> bool {
        self.lo == self.hi
    }
}

impl FromStr for Steps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num =
            |x: &str| -> Result<usize, String> { x.trim().parse().map_err(|_| format!("not a step count: {x:?}")) };
        match s.split_once("..") {
            Some((a, b)) => {
                let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
                if lo > hi {
                    return Err(format!("empty step range {s:?}"));
                }
                Ok(Self { lo, hi })
            }
            None => num(s).map(|n| Self { lo: n, hi: n }),
        }
    }
}

impl fmt::Display for Steps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_single() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Fd,
}

impl From<MethodArg> for DerivativeMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => DerivativeMethod::Exact,
            MethodArg::Fd => DerivativeMethod::FiniteDifference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Bare,
    Renormalized,
}

impl From<UnitArg> for TimeUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Bare => TimeUnit::Bare,
            UnitArg::Renormalized => TimeUnit::Renormalized,
        }
    }
}

fn enum_name<E: ValueEnum>(e: &E) -> String {
    e.to_possible_value()
        .map(|v| v.get_name().to_owned())
        .unwrap_or_default()
}

/// Options shared by every subcommand. All optional so that a config file
/// can fill what the flags leave out.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct Options {
    /// Bare exchange coupling
    #[arg(long = "J", value_name = "J")]
    pub exchange: Option<f64>,

    /// Bare transverse field, a value or a range `lo..hi`
    #[arg(long = "g", visible_alias = "g-range", value_name = "G")]
    pub field: Option<Span>,

    /// Time, a value or a range `lo..hi`
    #[arg(long = "t", visible_alias = "t-range", value_name = "T")]
    pub time: Option<Span>,

    /// Samples along the swept axis
    #[arg(long)]
    pub points: Option<usize>,

    /// RG step or inclusive range `a..b`
    #[arg(long = "n", visible_aliases = ["n-range", "steps"], value_name = "N")]
    pub steps: Option<Steps>,

    /// Order of the concurrence maximum (1 = first)
    #[arg(long)]
    pub k: Option<usize>,

    /// Derivative evaluation
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// Time unit for peak times: bare 1/J or renormalized 1/J_n
    #[arg(long = "time-unit", value_enum)]
    pub time_unit: Option<UnitArg>,

    /// Add a t_rescaled = t * J_n column to time series
    #[arg(long = "rescale-time")]
    pub rescale_time: bool,

    /// Grid size for the verify suites
    #[arg(long = "grid-points")]
    pub grid_points: Option<usize>,

    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Flat key = value config file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Invalid(format!("config key {key}: {e}")).into())
}

fn parse_enum<E: ValueEnum>(key: &str, value: &str) -> Result<E> {
    E::from_str(value, true).map_err(|e| Invalid(format!("config key {key}: {e}")).into())
}

impl Options {
    /// Parses a flat config: one `key = value` per line, `#` starts a comment.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut o = Options::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(Invalid(format!("config line {}: expected key = value", lineno + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            match key {
                "J" => o.exchange = Some(parse_value(key, value)?),
                "g" | "g-range" => o.field = Some(parse_value(key, value)?),
                "t" | "t-range" => o.time = Some(parse_value(key, value)?),
                "points" => o.points = Some(parse_value(key, value)?),
                "n" | "n-range" | "steps" => o.steps = Some(parse_value(key, value)?),
                "k" => o.k = Some(parse_value(key, value)?),
                "method" => o.method = Some(parse_enum(key, value)?),
                "time-unit" => o.time_unit = Some(parse_enum(key, value)?),
                "rescale-time" => o.rescale_time = parse_value(key, value)?,
                "grid-points" => o.grid_points = Some(parse_value(key, value)?),
                "out" => o.out = Some(PathBuf::from(value)),
                other => bail!(Invalid(format!("config line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        Ok(o)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_config_text(&text).with_context(|| format!("in {}", path.display()))
    }

    /// `self` wins over `fallback` key by key.
    pub fn over(self, fallback: Options) -> Options {
        Options {
            exchange: self.exchange.or(fallback.exchange),
            field: self.field.or(fallback.field),
            time: self.time.or(fallback.time),
            points: self.points.or(fallback.points),
            steps: self.steps.or(fallback.steps),
            k: self.k.or(fallback.k),
            method: self.method.or(fallback.method),
            time_unit: self.time_unit.or(fallback.time_unit),
            rescale_time: self.rescale_time || fallback.rescale_time,
            grid_points: self.grid_points.or(fallback.grid_points),
            out: self.out.or(fallback.out),
            config: self.config.or(fallback.config),
        }
    }

    /// Flags merged over the config file named by `--config`, if any.
    pub fn resolve_file(self) -> Result<Options> {
        match &self.config {
            Some(path) => {
                let file = Self::from_config_file(path)?;
                Ok(self.over(file))
            }
            None => Ok(self),
        }
    }

    /// Settings as config-file text; feeding it back via `--config`
    /// reproduces the run.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_owned(), v);
            }
        };
        put("J", self.exchange.map(|x| format!("{x:?}")));
        put("g", self.field.map(|s| s.to_string()));
        put("t", self.time.map(|s| s.to_string()));
        put("points", self.points.map(|p| p.to_string()));
        put("n", self.steps.map(|s| s.to_string()));
        put("k", self.k.map(|k| k.to_string()));
        put("method", self.method.as_ref().map(enum_name));
        put("time-unit", self.time_unit.as_ref().map(enum_name));
        put("rescale-time", self.rescale_time.then(|| "true".to_owned()));
        put("grid-points", self.grid_points.map(|p| p.to_string()));
        m
    }

    pub fn exchange_or(&self, default: f64) -> Result<f64> {
        let j = self.exchange.unwrap_or(default);
        if !(j > 0.0 && j.is_finite()) {
            bail!(Invalid(format!("--J must be positive and finite, got {j}")));
        }
        Ok(j)
    }

    pub fn points_or(&self, default: usize) -> Result<usize> {
        let p = self.points.unwrap_or(default);
        if !(2..=MAX_POINTS).contains(&p) {
            bail!(Invalid(format!("--points must lie in [2, {MAX_POINTS}], got {p}")));
        }
        Ok(p)
    }

    pub fn k_or(&self, default: usize) -> Result<usize> {
        let k = self.k.unwrap_or(default);
        if k == 0 {
            bail!(Invalid("--k starts at 1".into()));
        }
        Ok(k)
    }
}
