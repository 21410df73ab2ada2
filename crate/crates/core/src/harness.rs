//! Configuration-driven experiment runner.
//!
//! A config is line-oriented `key = value` text with `#` comments. Parsing
//! validates every key, applies defaults and stores normalized values, so
//! [`serialize_config`] emits a canonical sorted form. [`run`] computes all
//! outputs in memory; [`emit`] writes them, refusing to overwrite unless forced.
//!
//! Files written for prefix `P`:
//! - `P.eigs.csv` for single-instance kinds, `P.<label>.eigs.csv` otherwise;
//! - `P.summary.json`;
//! - `P.timing.json` (wall-clock time; the only nondeterministic output);
//! - `P.refine.csv`, `P.dilate.csv`, `P.plunge.csv`, `P.bounds.csv` per kind.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{self, BoundInputs, BoundReport};
use crate::exec::Execution;
use crate::frame::{self, FrameError, FrameSystem};
use crate::gabor::{self, GaborError, GaborSystem, TF_GAMMA};
use crate::geometry::{self, ContinuousDomain, DiscreteDomain, LatticeSpec};
use crate::io::{self, format_f64};
use crate::prolate::{self, CyclicInterval, PlungeRow, PlungeStudy, ProlateError};
use crate::spectral::{self, SpectralProfile};
use crate::testbed;

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "SPECLAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Spectrum,
    Refine,
    Dilate,
    Mixed,
    Prolate,
    ProlateStudy,
    Bounds,
}

impl Kind {
    pub const ALL: [Kind; 7] =
        [Kind::Spectrum, Kind::Refine, Kind::Dilate, Kind::Mixed, Kind::Prolate, Kind::ProlateStudy, Kind::Bounds];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::Refine => "refine",
            Kind::Dilate => "dilate",
            Kind::Mixed => "mixed",
            Kind::Prolate => "prolate",
            Kind::ProlateStudy => "prolate-study",
            Kind::Bounds => "bounds",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Validation { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Validation { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

/// Every problem found in a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

impl ConfigErrors {
    pub fn mentions(&self, field: &str) -> bool {
        self.0.iter().any(|e| matches!(e, ConfigError::Validation { field: f, .. } if f == field))
    }
}

/// A validated experiment: kind plus normalized values (defaults included).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub values: BTreeMap<String, String>,
    /// Directory against which relative `@file` references resolve.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn out(&self) -> &str {
        self.get("out").unwrap_or_default()
    }

    /// Builds from key/value pairs (as the CLI does) through the same validation.
    pub fn from_pairs(pairs: &[(&str, String)], base_dir: &Path) -> Result<Self, ConfigErrors> {
        let text: String = pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        parse_config(&text, base_dir)
    }
}

type Validator = fn(&str, &Path) -> Result<String, String>;

fn fmt_float(x: f64) -> String {
    format!("{x}")
}

fn float_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("cannot parse '{}' as a number", t.trim())))
        .collect()
}

fn v_pos_int(s: &str, _: &Path) -> Result<String, String> {
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n.to_string()),
        _ => Err(format!("expected a positive integer, got '{s}'")),
    }
}

fn v_seed(s: &str, _: &Path) -> Result<String, String> {
    s.parse::<u64>().map(|n| n.to_string()).map_err(|_| format!("expected an unsigned integer, got '{s}'"))
}

fn v_deltas(s: &str, _: &Path) -> Result<String, String> {
    let mut v = float_list(s)?;
    if let Some(bad) = v.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(format!("{bad} is outside (0, 1)"));
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v.iter().map(|d| fmt_float(*d)).collect::<Vec<_>>().join(","))
}

fn v_delta_half(s: &str, _: &Path) -> Result<String, String> {
    match s.parse::<f64>() {
        Ok(d) if d > 0.0 && d < 0.5 => Ok(fmt_float(d)),
        _ => Err(format!("expected a number in (0, 1/2), got '{s}'")),
    }
}

fn v_pos_float(s: &str, _: &Path) -> Result<String, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(fmt_float(x)),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

fn v_factors(s: &str, _: &Path) -> Result<String, String> {
    let v = float_list(s)?;
    if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err("factors must be positive".into());
    }
    Ok(v.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(","))
}

fn v_s_grid(s: &str, _: &Path) -> Result<String, String> {
    let mut v = float_list(s)?;
    if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err("s values must be positive".into());
    }
    v.sort_by(f64::total_cmp);
    v.dedup();
    Ok(v.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(","))
}

fn v_window(s: &str, base: &Path) -> Result<String, String> {
    io::parse_window_spec(s, base).map(|_| s.to_string()).map_err(|e| e.to_string())
}

fn v_shape(s: &str, base: &Path) -> Result<String, String> {
    io::parse_shape(s, base).map(|_| s.to_string()).map_err(|e| e.to_string())
}

fn v_domain(s: &str, base: &Path) -> Result<String, String> {
    if s.starts_with('@') {
        let path = io::resolve(base, s);
        let text = io::read_text(&path).map_err(|e| e.to_string())?;
        io::parse_mask(&text, &path.display().to_string()).map_err(|e| e.to_string())?;
        Ok(s.to_string())
    } else {
        v_shape(s, base)
    }
}

fn parse_random_frame(s: &str) -> Option<(usize, usize)> {
    let body = s.strip_prefix("random:")?;
    let (m, n) = body.split_once(',')?;
    let (m, n) = (m.trim().parse().ok()?, n.trim().parse().ok()?);
    (m > 0 && n > 0).then_some((m, n))
}

fn v_frame(s: &str, base: &Path) -> Result<String, String> {
    if let Some((m, n)) = parse_random_frame(s) {
        return Ok(format!("random:{m},{n}"));
    }
    if !s.starts_with('@') {
        return Err("expected '@file' or 'random:M,n'".into());
    }
    let path = io::resolve(base, s);
    let text = io::read_text(&path).map_err(|e| e.to_string())?;
    io::parse_frame(&text, &path.display().to_string()).map_err(|e| e.to_string())?;
    Ok(s.to_string())
}

fn parse_ladder(s: &str) -> Result<Vec<(usize, usize)>, String> {
    s.split(';')
        .map(|rung| {
            let (a, b) = rung.split_once(',').ok_or_else(|| format!("rung '{rung}' is not 'a,b'"))?;
            match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
                (Ok(a), Ok(b)) if a > 0 && b > 0 => Ok((a, b)),
                _ => Err(format!("rung '{rung}' needs positive integers")),
            }
        })
        .collect()
}

fn v_ladder(s: &str, _: &Path) -> Result<String, String> {
    let l = parse_ladder(s)?;
    Ok(l.iter().map(|(a, b)| format!("{a},{b}")).collect::<Vec<_>>().join(";"))
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("'{s}' is not 'k0,k1'"))?;
    match (a.trim().parse(), b.trim().parse()) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(format!("'{s}' needs nonnegative integers")),
    }
}

fn v_pair(s: &str, _: &Path) -> Result<String, String> {
    parse_pair(s).map(|(a, b)| format!("{a},{b}"))
}

fn v_lengths(s: &str, _: &Path) -> Result<String, String> {
    let v: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    match v {
        Ok(v) if v.iter().all(|&x| x > 0) => Ok(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
        _ => Err("expected positive integers".into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SizeSpec {
    Abs(usize),
    Frac(usize),
}

fn parse_sizes(s: &str) -> Result<Vec<SizeSpec>, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if let Some(k) = t.strip_prefix("L/") {
                match k.parse::<usize>() {
                    Ok(k) if k > 0 => Ok(SizeSpec::Frac(k)),
                    _ => Err(format!("bad size '{t}'")),
                }
            } else {
                match t.parse::<usize>() {
                    Ok(n) if n > 0 => Ok(SizeSpec::Abs(n)),
                    _ => Err(format!("bad size '{t}'")),
                }
            }
        })
        .collect()
}

fn v_sizes(s: &str, _: &Path) -> Result<String, String> {
    let v = parse_sizes(s)?;
    Ok(v.iter()
        .map(|x| match x {
            SizeSpec::Abs(n) => n.to_string(),
            SizeSpec::Frac(k) => format!("L/{k}"),
        })
        .collect::<Vec<_>>()
        .join(","))
}

fn v_file(s: &str, base: &Path) -> Result<String, String> {
    let path = io::resolve(base, s);
    if !path.is_file() {
        return Err(format!("file {} does not exist", path.display()));
    }
    Ok(format!("@{}", s.strip_prefix('@').unwrap_or(s)))
}

fn v_out(s: &str, _: &Path) -> Result<String, String> {
    if s.is_empty() {
        return Err("output prefix is empty".into());
    }
    Ok(s.to_string())
}

fn v_kind(s: &str, _: &Path) -> Result<String, String> {
    Kind::parse(s).map(|k| k.name().to_string()).ok_or_else(|| format!("unknown experiment kind '{s}'"))
}

/// `(key, validator, default)`.
type KeySpec = (&'static str, Validator, Option<&'static str>);

fn key_table(kind: Kind) -> Vec<KeySpec> {
    let mut keys: Vec<KeySpec> = vec![("kind", v_kind, None), ("out", v_out, None), ("seed", v_seed, Some("0"))];
    let gabor: [KeySpec; 4] = [
        ("length", v_pos_int, None),
        ("shift", v_pos_int, Some("1")),
        ("mod", v_pos_int, Some("1")),
        ("window", v_window, Some("gauss")),
    ];
    match kind {
        Kind::Spectrum | Kind::Bounds => {
            keys.extend(gabor);
            keys.extend([
                ("domain", v_domain as Validator, None),
                ("frame", v_frame, None),
                ("deltas", v_deltas, Some("0.5")),
                ("gamma", v_pos_float, None),
            ]);
            if kind == Kind::Bounds {
                keys.extend([("s_grid", v_s_grid as Validator, None), ("alpha", v_pos_float, None), ("beta", v_pos_float, None)]);
            }
        }
        Kind::Refine => keys.extend([
            ("length", v_pos_int as Validator, None),
            ("window", v_window, Some("gauss")),
            ("domain", v_shape, None),
            ("ladder", v_ladder, None),
            ("deltas", v_deltas, Some("0.5")),
        ]),
        Kind::Dilate => {
            keys.extend(gabor);
            keys.extend([
                ("domain", v_shape as Validator, None),
                ("factors", v_factors, None),
                ("deltas", v_deltas, Some("0.5")),
            ]);
        }
        Kind::Mixed => keys.extend([
            ("length", v_pos_int as Validator, None),
            ("windows", v_file, None),
            ("weights", v_file, None),
            ("domain", v_domain, None),
            ("deltas", v_deltas, Some("0.5")),
        ]),
        Kind::Prolate => keys.extend([
            ("length", v_pos_int as Validator, None),
            ("freq", v_pair, None),
            ("time", v_pair, None),
            ("delta", v_delta_half, Some("0.1")),
        ]),
        Kind::ProlateStudy => keys.extend([
            ("lengths", v_lengths as Validator, None),
            ("sizes", v_sizes, None),
            ("delta", v_delta_half, Some("0.1")),
        ]),
    }
    keys
}

fn required(kind: Kind, values: &BTreeMap<String, String>) -> Vec<&'static str> {
    match kind {
        Kind::Spectrum | Kind::Bounds => {
            if values.contains_key("frame") {
                vec!["domain"]
            } else {
                vec!["length", "domain"]
            }
        }
        Kind::Refine => vec!["length", "domain", "ladder"],
        Kind::Dilate => vec!["length", "domain", "factors"],
        Kind::Mixed => vec!["windows", "weights", "domain"],
        Kind::Prolate => vec!["length", "freq", "time"],
        Kind::ProlateStudy => vec!["lengths", "sizes"],
    }
}

fn verr(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.to_string(), message: message.into() }
}

/// Parses and validates config text, collecting every error.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            errors.push(ConfigError::Parse { line: ln, message: format!("expected 'key = value', got '{body}'") });
            continue;
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            errors.push(ConfigError::Parse { line: ln, message: "empty key".into() });
            continue;
        }
        if let Some((first, _)) = raw.get(&k) {
            errors.push(ConfigError::Parse { line: ln, message: format!("duplicate key '{k}' (first on line {first})") });
            continue;
        }
        raw.insert(k, (ln, v));
    }

    let kind = match raw.get("kind") {
        None => {
            errors.push(verr("kind", "missing"));
            return Err(ConfigErrors(errors));
        }
        Some((_, v)) => match Kind::parse(v) {
            Some(k) => k,
            None => {
                errors.push(verr("kind", format!("unknown experiment kind '{v}'")));
                return Err(ConfigErrors(errors));
            }
        },
    };

    let table = key_table(kind);
    let mut values = BTreeMap::new();
    for key in raw.keys() {
        if !table.iter().any(|(k, _, _)| k == key) {
            errors.push(verr(key, format!("not a valid key for kind '{}'", kind.name())));
        }
    }
    for (key, validate, default) in &table {
        match raw.get(*key) {
            Some((_, v)) => match validate(v, base_dir) {
                Ok(norm) => {
                    values.insert(key.to_string(), norm);
                }
                Err(m) => errors.push(verr(key, m)),
            },
            None => {
                if let Some(d) = default {
                    values.insert(key.to_string(), d.to_string());
                }
            }
        }
    }
    for key in std::iter::once("out").chain(required(kind, &values)) {
        if !raw.contains_key(key) {
            errors.push(verr(key, "missing"));
        }
    }
    cross_validate(kind, &values, &raw, base_dir, &mut errors);
    if errors.is_empty() {
        Ok(ExperimentConfig { kind, values, base_dir: base_dir.to_path_buf() })
    } else {
        Err(ConfigErrors(errors))
    }
}

fn cross_validate(
    kind: Kind,
    values: &BTreeMap<String, String>,
    raw: &BTreeMap<String, (usize, String)>,
    base: &Path,
    errors: &mut Vec<ConfigError>,
) {
    let length: Option<usize> = values.get("length").and_then(|v| v.parse().ok());
    let divides = |key: &str, errors: &mut Vec<ConfigError>| {
        if let (Some(l), Some(step)) = (length, values.get(key).and_then(|v| v.parse::<usize>().ok())) {
            if l % step != 0 {
                errors.push(verr(key, format!("{step} does not divide length {l}")));
            }
        }
    };
    match kind {
        Kind::Spectrum | Kind::Bounds => {
            if raw.contains_key("frame") {
                for k in ["length", "shift", "mod", "window"] {
                    if raw.contains_key(k) {
                        errors.push(verr(k, "not allowed together with 'frame'"));
                    }
                }
            } else {
                divides("shift", errors);
                divides("mod", errors);
            }
            if kind == Kind::Bounds && values.contains_key("alpha") != values.contains_key("beta") {
                errors.push(verr("alpha", "'alpha' and 'beta' must be given together"));
            }
        }
        Kind::Dilate => {
            divides("shift", errors);
            divides("mod", errors);
        }
        Kind::Refine => {
            if let (Some(l), Some(Ok(ladder))) = (length, values.get("ladder").map(|s| parse_ladder(s))) {
                for (a, b) in ladder {
                    if l % a != 0 || l % b != 0 {
                        errors.push(verr("ladder", format!("rung ({a},{b}) does not divide length {l}")));
                    }
                }
            }
        }
        Kind::Mixed => {
            if let (Some(l), Some(w)) = (length, values.get("windows")) {
                let path = io::resolve(base, w);
                if let Ok(ws) = io::read_text(&path).and_then(|t| io::parse_windows(&t, "windows")) {
                    if ws[0].len() != l {
                        errors.push(verr("length", format!("windows have length {}, not {l}", ws[0].len())));
                    }
                }
            }
        }
        Kind::Prolate => {
            if let Some(l) = length {
                for key in ["freq", "time"] {
                    if let Some(Ok((a, b))) = values.get(key).map(|s| parse_pair(s)) {
                        if a >= l || b >= l {
                            errors.push(verr(key, format!("endpoints must lie in [0, {l})")));
                        }
                    }
                }
            }
        }
        Kind::ProlateStudy => {
            if let (Some(ls), Some(ss)) = (values.get("lengths"), values.get("sizes")) {
                let nl = ls.split(',').count();
                let ns = ss.split(',').count();
                if nl != ns && nl != 1 && ns != 1 {
                    errors.push(verr("sizes", format!("{ns} sizes cannot be paired with {nl} lengths")));
                }
            }
        }
    }
}

/// Canonical form: one `key = value` line per key, sorted by key.
pub fn serialize_config(config: &ExperimentConfig) -> String {
    config.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountEntry {
    pub delta: f64,
    pub count: usize,
    pub plunge: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HankelNorms {
    pub p2: f64,
    pub p1: f64,
    pub p0_5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryReport {
    pub mask_size: usize,
    pub inflation: f64,
    pub lattice_perimeter: f64,
    pub isotropic_fineness: f64,
    pub continuous_perimeter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub label: String,
    pub status: String,
    pub dimension: Option<usize>,
    pub trace: Option<f64>,
    pub mu_omega: Option<f64>,
    pub counts: Vec<CountEntry>,
    pub hankel_schatten: Option<HankelNorms>,
    pub bounds: Option<BoundReport>,
    pub geometry: Option<GeometryReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineRow {
    pub a: usize,
    pub b: usize,
    pub status: String,
    pub delta: f64,
    pub mask_size: Option<usize>,
    pub count: Option<usize>,
    pub mu_omega: Option<f64>,
    pub deviation: Option<f64>,
    pub plunge: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilateRow {
    pub factor: f64,
    pub perimeter: f64,
    pub delta: f64,
    pub mask_size: usize,
    pub count: usize,
    pub mu_omega: f64,
    pub deviation: f64,
    pub plunge: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum StudySummary {
    Refine { rows: Vec<RefineRow> },
    Dilate { rows: Vec<DilateRow> },
    Plunge(PlungeStudy),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub library_version: String,
    pub kind: String,
    pub config: BTreeMap<String, String>,
    pub spectra: Vec<InstanceSummary>,
    pub study: Option<StudySummary>,
}

/// Everything a run produces, before anything touches the file system.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    /// `(path, contents)` in emission order, including the summary JSON.
    pub files: Vec<(PathBuf, String)>,
    pub wall_seconds: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("invalid configuration:\n{0}")]
    Config(ConfigErrors),
    #[error("input error: {0}")]
    Input(String),
    #[error("{0}")]
    NotAFrame(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("refusing to overwrite {0} (use --force)")]
    Exists(String),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

impl RunError {
    /// 2 for frame failures, 3 for input problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::NotAFrame(_) => 2,
            RunError::Config(_) | RunError::Input(_) | RunError::Exists(_) => 3,
            RunError::Numerical(_) | RunError::Write { .. } => 1,
        }
    }
}

impl From<GaborError> for RunError {
    fn from(e: GaborError) -> Self {
        match &e {
            GaborError::Frame(FrameError::NotAFrame { .. }) => RunError::NotAFrame(e.to_string()),
            GaborError::Frame(fe) => fe.clone().into(),
            GaborError::Spectral(_) => RunError::Numerical(e.to_string()),
            _ => RunError::Input(e.to_string()),
        }
    }
}

impl From<FrameError> for RunError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::NotAFrame { .. } => RunError::NotAFrame(e.to_string()),
            FrameError::Eigen(_) | FrameError::Spectral(_) | FrameError::NonPositiveOmega { .. } => {
                RunError::Numerical(e.to_string())
            }
            _ => RunError::Input(e.to_string()),
        }
    }
}

impl From<ProlateError> for RunError {
    fn from(e: ProlateError) -> Self {
        match e {
            ProlateError::Spectral(_) => RunError::Numerical(e.to_string()),
            _ => RunError::Input(e.to_string()),
        }
    }
}

impl From<io::IoError> for RunError {
    fn from(e: io::IoError) -> Self {
        RunError::Input(e.to_string())
    }
}

fn numerical(e: impl fmt::Display) -> RunError {
    RunError::Numerical(e.to_string())
}

fn input(e: impl fmt::Display) -> RunError {
    RunError::Input(e.to_string())
}

fn deltas_of(config: &ExperimentConfig) -> Vec<f64> {
    let key = if matches!(config.kind, Kind::Prolate | Kind::ProlateStudy) { "delta" } else { "deltas" };
    config.get(key).map(|s| float_list(s).unwrap_or_default()).unwrap_or_default()
}

fn usize_of(config: &ExperimentConfig, key: &str) -> Result<usize, RunError> {
    config.get(key).and_then(|v| v.parse().ok()).ok_or_else(|| RunError::Input(format!("missing '{key}'")))
}

fn instance_summary(label: &str, profile: &SpectralProfile, mu: f64, deltas: &[f64]) -> Result<InstanceSummary, RunError> {
    let counts = gabor::delta_stats(profile, mu, deltas)
        .into_iter()
        .map(|s| CountEntry { delta: s.delta, count: s.count, plunge: s.plunge, deviation: s.deviation })
        .collect();
    let h = |p| spectral::hankel_schatten(profile, p).map_err(numerical);
    Ok(InstanceSummary {
        label: label.to_string(),
        status: "ok".into(),
        dimension: Some(profile.dimension()),
        trace: Some(profile.source_trace()),
        mu_omega: Some(mu),
        counts,
        hankel_schatten: Some(HankelNorms { p2: h(2.0)?, p1: h(1.0)?, p0_5: h(0.5)? }),
        bounds: None,
        geometry: None,
    })
}

fn failed_summary(label: &str) -> InstanceSummary {
    InstanceSummary {
        label: label.to_string(),
        status: "not_a_frame".into(),
        dimension: None,
        trace: None,
        mu_omega: None,
        counts: Vec::new(),
        hankel_schatten: None,
        bounds: None,
        geometry: None,
    }
}

pub fn eigs_csv(profile: &SpectralProfile) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, l) in profile.eigenvalues().iter().enumerate() {
        s.push_str(&format!("{i},{}\n", format_f64(*l)));
    }
    s
}

fn opt_csv<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn opt_f64_csv(v: Option<f64>) -> String {
    v.map_or(String::new(), format_f64)
}

struct Emitter {
    prefix: String,
    files: Vec<(PathBuf, String)>,
}

impl Emitter {
    fn add(&mut self, suffix: &str, contents: String) {
        self.files.push((PathBuf::from(format!("{}.{suffix}", self.prefix)), contents));
    }
}

/// A mask together with the shape it came from, if any.
struct Mask {
    domain: DiscreteDomain,
    shape: Option<ContinuousDomain>,
}

fn gabor_mask(config: &ExperimentConfig, length: usize, a: usize, b: usize) -> Result<Mask, RunError> {
    let spec = config.get("domain").ok_or_else(|| input("missing 'domain'"))?;
    if spec.starts_with('@') {
        let path = io::resolve(&config.base_dir, spec);
        let m = io::parse_mask(&io::read_text(&path)?, &path.display().to_string())?;
        if m.dim != 2 {
            return Err(input("time-frequency masks must be two-dimensional"));
        }
        let (na, nb) = ((length / a) as i64, (length / b) as i64);
        if let Some(p) = m.points.iter().find(|p| p[0] >= na || p[1] >= nb) {
            return Err(input(format!("mask point {p:?} lies outside the {na}×{nb} lattice")));
        }
        Ok(Mask { domain: gabor::tf_lattice_domain(length, a, b, m.points)?, shape: None })
    } else {
        let shape = io::parse_shape(spec, &config.base_dir)?;
        Ok(Mask { domain: gabor::tf_mask(length, a, b, &shape)?, shape: Some(shape) })
    }
}

fn load_frame(config: &ExperimentConfig) -> Result<FrameSystem, RunError> {
    let spec = config.get("frame").ok_or_else(|| input("missing 'frame'"))?;
    let pairs = if let Some((m, n)) = parse_random_frame(spec) {
        let seed: u64 = config.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0);
        testbed::random_frame_pairs(&mut testbed::rng(seed), m, n)
    } else {
        let path = io::resolve(&config.base_dir, spec);
        io::parse_frame(&io::read_text(&path)?, &path.display().to_string())?
    };
    let d = pairs.first().map_or(1, |p| p.0.len());
    Ok(FrameSystem::from_pairs(LatticeSpec::identity(d), pairs)?)
}

fn frame_mask(config: &ExperimentConfig, frame: &FrameSystem) -> Result<(Vec<usize>, Option<ContinuousDomain>), RunError> {
    let spec = config.get("domain").ok_or_else(|| input("missing 'domain'"))?;
    if spec.starts_with('@') {
        let path = io::resolve(&config.base_dir, spec);
        let m = io::parse_mask(&io::read_text(&path)?, &path.display().to_string())?;
        let dom = DiscreteDomain::new(frame.index().lattice().clone(), m.points).map_err(input)?;
        Ok((frame.mask_indices(&dom)?, None))
    } else {
        let shape = io::parse_shape(spec, &config.base_dir)?;
        if shape.dim() != frame.index().lattice().dim() {
            return Err(input(format!(
                "shape dimension {} does not match frame index dimension {}",
                shape.dim(),
                frame.index().lattice().dim()
            )));
        }
        let idx = (0..frame.len()).filter(|&i| shape.contains(&frame.index().ambient(i))).collect();
        Ok((idx, Some(shape)))
    }
}

fn s_grids(config: &ExperimentConfig, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    match config.get("s_grid") {
        Some(s) => {
            let v = float_list(s).unwrap_or_default();
            (v.clone(), v)
        }
        None => (bounds::default_s_grid(gamma), bounds::default_s_grid(1.0)),
    }
}

fn exponential_params(config: &ExperimentConfig) -> Option<(f64, f64)> {
    let a = config.get("alpha")?.parse().ok()?;
    let b = config.get("beta")?.parse().ok()?;
    Some((a, b))
}

fn geometry_report(mask: &DiscreteDomain, inflation: f64, shape: Option<&ContinuousDomain>) -> GeometryReport {
    GeometryReport {
        mask_size: mask.len(),
        inflation,
        lattice_perimeter: geometry::lattice_perimeter(mask),
        isotropic_fineness: mask.lattice().fineness(),
        continuous_perimeter: shape.map(|s| s.perimeter()),
    }
}

fn bounds_csv(report: &BoundReport, counts: &[CountEntry]) -> String {
    let mut s = String::from("delta,count,deviation,s_star,rhs_main,rhs_doubling,rhs_exponential\n");
    for (i, c) in counts.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_f64(c.delta),
            c.count,
            format_f64(c.deviation),
            opt_f64_csv(report.s_star[i]),
            opt_f64_csv(report.rhs_main[i]),
            opt_f64_csv(report.rhs_doubling[i]),
            opt_f64_csv(report.rhs_exponential[i]),
        ));
    }
    s
}

fn run_spectrum(config: &ExperimentConfig, out: &mut Emitter) -> Result<Vec<InstanceSummary>, RunError> {
    let deltas = deltas_of(config);
    let with_bounds = config.kind == Kind::Bounds;
    let gamma_override: Option<f64> = config.get("gamma").and_then(|g| g.parse().ok());
    let mut summary;
    if config.get("frame").is_some() {
        let frame = load_frame(config)?;
        let (idx, shape) = frame_mask(config, &frame)?;
        let profile = frame::multiplier_spectrum(&frame, &idx)?;
        summary = instance_summary("spectrum", &profile, frame.mu(&idx), &deltas)?;
        out.add("eigs.csv", eigs_csv(&profile));
        if with_bounds {
            let gamma = gamma_override.unwrap_or(frame.index().lattice().dim() as f64);
            let kernel = frame::kernel_on_domain(&frame);
            let mut in_mask = vec![false; frame.len()];
            idx.iter().for_each(|&i| in_mask[i] = true);
            let inflation = geometry::inflation_constant_finite(
                frame.len(),
                |i, j| kernel.distance(i, j),
                kernel.masses(),
                &in_mask,
                gamma,
            );
            let weights: Vec<f64> = idx.iter().map(|&i| frame.omega()[i]).collect();
            let mask_dom = frame.index().filter(|i, _| in_mask[i]).with_weights(weights).map_err(input)?;
            let sandwich = geometry::perimeter_sandwich_check(&mask_dom, geometry::SANDWICH_SLACK);
            let inputs = BoundInputs {
                gamma,
                deltas: deltas.clone(),
                inflation,
                perimeter_proxy: Some(sandwich.proxy),
                exponential: exponential_params(config)
                    .map(|(a, b)| (a, b, bounds::exp_decay_constant(&kernel, a, b))),
                boundary_interaction: bounds::boundary_interaction(&kernel, &in_mask),
            };
            let (sm, sd) = s_grids(config, gamma);
            let report = bounds::bound_report(&inputs, &sm, &sd, |s| bounds::dyadic_decay(&kernel, s));
            out.add("bounds.csv", bounds_csv(&report, &summary.counts));
            summary.bounds = Some(report);
            summary.geometry = Some(geometry_report(&mask_dom, inflation, shape.as_ref()));
        }
    } else {
        let length = usize_of(config, "length")?;
        let (a, b) = (usize_of(config, "shift")?, usize_of(config, "mod")?);
        let window = io::parse_window_spec(config.get("window").unwrap_or("gauss"), &config.base_dir)?;
        let system = GaborSystem::new(length, a, b, &window)?;
        let mask = gabor_mask(config, length, a, b)?;
        let inst = gabor::gabor_instance(&system, &mask.domain)?;
        summary = instance_summary("spectrum", &inst.profile, inst.mu, &deltas)?;
        out.add("eigs.csv", eigs_csv(&inst.profile));
        if with_bounds {
            let gamma = gamma_override.unwrap_or(TF_GAMMA);
            let kernel = system.group_kernel();
            let idx = system.frame().mask_indices(&mask.domain)?;
            let mut in_mask = vec![false; kernel.len()];
            idx.iter().for_each(|&i| in_mask[i] = true);
            let inflation = geometry::inflation_constant(&mask.domain, gamma);
            let sandwich = geometry::perimeter_sandwich_check(&mask.domain, geometry::SANDWICH_SLACK);
            let inputs = BoundInputs {
                gamma,
                deltas: deltas.clone(),
                inflation,
                perimeter_proxy: Some(sandwich.proxy),
                exponential: exponential_params(config)
                    .map(|(al, be)| (al, be, bounds::group_exp_decay_constant(&kernel, al, be))),
                boundary_interaction: bounds::group_boundary_interaction(&kernel, &in_mask),
            };
            let (sm, sd) = s_grids(config, gamma);
            let report = bounds::bound_report(&inputs, &sm, &sd, |s| bounds::group_dyadic_decay(&kernel, s));
            out.add("bounds.csv", bounds_csv(&report, &summary.counts));
            summary.bounds = Some(report);
            summary.geometry = Some(geometry_report(&mask.domain, inflation, mask.shape.as_ref()));
        }
    }
    Ok(vec![summary])
}

fn run_refine(config: &ExperimentConfig, exec: Execution, out: &mut Emitter) -> Result<(Vec<InstanceSummary>, StudySummary), RunError> {
    let deltas = deltas_of(config);
    let length = usize_of(config, "length")?;
    let window = io::parse_window_spec(config.get("window").unwrap_or("gauss"), &config.base_dir)?;
    let shape = io::parse_shape(config.get("domain").unwrap_or_default(), &config.base_dir)?;
    let ladder = parse_ladder(config.get("ladder").unwrap_or_default()).map_err(input)?;
    let outcomes = gabor::refinement_study(&window, &shape, length, &ladder, &deltas, exec);
    let mut spectra = Vec::new();
    let mut rows = Vec::new();
    let mut csv = String::from("a,b,status,delta,mask_size,count,mu_omega,deviation,plunge\n");
    for o in outcomes {
        let label = format!("a{}_b{}", o.a, o.b);
        match o.result {
            Ok(r) => {
                out.add(&format!("{label}.eigs.csv"), eigs_csv(&r.instance.profile));
                spectra.push(instance_summary(&label, &r.instance.profile, r.instance.mu, &deltas)?);
                for s in &r.stats {
                    rows.push(RefineRow {
                        a: o.a,
                        b: o.b,
                        status: "ok".into(),
                        delta: s.delta,
                        mask_size: Some(r.instance.mask_size),
                        count: Some(s.count),
                        mu_omega: Some(r.instance.mu),
                        deviation: Some(s.deviation),
                        plunge: Some(s.plunge),
                    });
                }
            }
            Err(e) if e.is_not_a_frame() => {
                spectra.push(failed_summary(&label));
                for &delta in &deltas {
                    rows.push(RefineRow {
                        a: o.a,
                        b: o.b,
                        status: "not_a_frame".into(),
                        delta,
                        mask_size: None,
                        count: None,
                        mu_omega: None,
                        deviation: None,
                        plunge: None,
                    });
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.a,
            r.b,
            r.status,
            format_f64(r.delta),
            opt_csv(r.mask_size),
            opt_csv(r.count),
            opt_f64_csv(r.mu_omega),
            opt_f64_csv(r.deviation),
            opt_csv(r.plunge)
        ));
    }
    out.add("refine.csv", csv);
    Ok((spectra, StudySummary::Refine { rows }))
}

fn run_dilate(config: &ExperimentConfig, exec: Execution, out: &mut Emitter) -> Result<(Vec<InstanceSummary>, StudySummary), RunError> {
    let deltas = deltas_of(config);
    let length = usize_of(config, "length")?;
    let (a, b) = (usize_of(config, "shift")?, usize_of(config, "mod")?);
    let window = io::parse_window_spec(config.get("window").unwrap_or("gauss"), &config.base_dir)?;
    let shape = io::parse_shape(config.get("domain").unwrap_or_default(), &config.base_dir)?;
    let factors = float_list(config.get("factors").unwrap_or_default()).map_err(input)?;
    let system = GaborSystem::new(length, a, b, &window)?;
    let results = exec.map(&factors, |&r| -> Result<_, RunError> {
        let dilated = shape.dilated(r).map_err(input)?;
        let mask = system.tf_mask(&dilated)?;
        let inst = gabor::gabor_instance(&system, &mask)?;
        Ok((r, geometry::continuous_perimeter(&dilated), inst))
    });
    let mut spectra = Vec::new();
    let mut rows = Vec::new();
    let mut csv = String::from("factor,perimeter,delta,mask_size,count,mu_omega,deviation,plunge\n");
    for res in results {
        let (r, perimeter, inst) = res?;
        let label = format!("R{}", fmt_float(r));
        out.add(&format!("{label}.eigs.csv"), eigs_csv(&inst.profile));
        spectra.push(instance_summary(&label, &inst.profile, inst.mu, &deltas)?);
        for s in gabor::delta_stats(&inst.profile, inst.mu, &deltas) {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                format_f64(r),
                format_f64(perimeter),
                format_f64(s.delta),
                inst.mask_size,
                s.count,
                format_f64(inst.mu),
                format_f64(s.deviation),
                s.plunge
            ));
            rows.push(DilateRow {
                factor: r,
                perimeter,
                delta: s.delta,
                mask_size: inst.mask_size,
                count: s.count,
                mu_omega: inst.mu,
                deviation: s.deviation,
                plunge: s.plunge,
            });
        }
    }
    out.add("dilate.csv", csv);
    Ok((spectra, StudySummary::Dilate { rows }))
}

fn run_mixed(config: &ExperimentConfig, out: &mut Emitter) -> Result<Vec<InstanceSummary>, RunError> {
    let deltas = deltas_of(config);
    let wpath = io::resolve(&config.base_dir, config.get("windows").unwrap_or_default());
    let windows = io::parse_windows(&io::read_text(&wpath)?, &wpath.display().to_string())?;
    let vpath = io::resolve(&config.base_dir, config.get("weights").unwrap_or_default());
    let weights = io::parse_weights(&io::read_text(&vpath)?, &vpath.display().to_string())?;
    let length = windows[0].len();
    let mask = gabor_mask(config, length, 1, 1)?;
    let op = gabor::mixed_state_multiplier(&windows, &weights, &mask.domain)?;
    let profile = spectral::hermitian_eigenvalues(&op).map_err(numerical)?;
    let mu = mask.domain.len() as f64 / length as f64;
    out.add("eigs.csv", eigs_csv(&profile));
    Ok(vec![instance_summary("mixed", &profile, mu, &deltas)?])
}

fn plunge_csv(rows: &[PlungeRow]) -> String {
    let mut s = String::from("L,size_I,size_J,trace,count_half,plunge,log_regressor\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.length,
            r.size_i,
            r.size_j,
            format_f64(r.trace),
            r.count_half,
            r.plunge,
            format_f64(r.log_regressor)
        ));
    }
    s
}

fn run_prolate(config: &ExperimentConfig, out: &mut Emitter) -> Result<(Vec<InstanceSummary>, StudySummary), RunError> {
    let length = usize_of(config, "length")?;
    let delta = deltas_of(config)[0];
    let (k0, k1) = parse_pair(config.get("freq").unwrap_or_default()).map_err(input)?;
    let (t0, t1) = parse_pair(config.get("time").unwrap_or_default()).map_err(input)?;
    let inst = prolate::prolate_operator(
        length,
        CyclicInterval::inclusive(length, k0, k1)?,
        CyclicInterval::inclusive(length, t0, t1)?,
    )?;
    let profile = inst.spectrum()?;
    let mu = inst.expected_trace();
    let row = PlungeRow {
        length,
        size_i: inst.freq.len,
        size_j: inst.time.len,
        trace: profile.source_trace(),
        count_half: spectral::count_above(&profile, 0.5),
        plunge: spectral::plunge_count(&profile, delta).map_err(input)?,
        log_regressor: bounds::log_star(profile.source_trace() / delta).unwrap_or(1.0),
    };
    out.add("eigs.csv", eigs_csv(&profile));
    out.add("plunge.csv", plunge_csv(std::slice::from_ref(&row)));
    let summary = instance_summary("prolate", &profile, mu, &[delta])?;
    let study = PlungeStudy { delta, rows: vec![row], slope: None, intercept: None, r_squared: None, profiles: Vec::new() };
    Ok((vec![summary], StudySummary::Plunge(study)))
}

fn run_prolate_study(config: &ExperimentConfig, exec: Execution, out: &mut Emitter) -> Result<(Vec<InstanceSummary>, StudySummary), RunError> {
    let delta = deltas_of(config)[0];
    let lengths: Vec<usize> = config.get("lengths").unwrap_or_default().split(',').filter_map(|t| t.parse().ok()).collect();
    let specs = parse_sizes(config.get("sizes").unwrap_or_default()).map_err(input)?;
    let n = lengths.len().max(specs.len());
    let mut ls = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(n);
    for i in 0..n {
        let l = lengths[if lengths.len() == 1 { 0 } else { i }];
        let size = match specs[if specs.len() == 1 { 0 } else { i }] {
            SizeSpec::Abs(s) => s,
            SizeSpec::Frac(k) => {
                if !l.is_multiple_of(k) {
                    return Err(input(format!("L/{k} is not an integer for L = {l}")));
                }
                l / k
            }
        };
        ls.push(l);
        sizes.push(size);
    }
    let study = prolate::plunge_study(&ls, &sizes, delta, exec)?;
    let mut spectra = Vec::new();
    for (row, profile) in study.rows.iter().zip(&study.profiles) {
        let label = format!("L{}_I{}_J{}", row.length, row.size_i, row.size_j);
        out.add(&format!("{label}.eigs.csv"), eigs_csv(profile));
        let mu = (row.size_i * row.size_j) as f64 / row.length as f64;
        spectra.push(instance_summary(&label, profile, mu, &[delta])?);
    }
    out.add("plunge.csv", plunge_csv(&study.rows));
    Ok((spectra, StudySummary::Plunge(study)))
}

/// Runs a validated config; nothing is written.
pub fn run(config: &ExperimentConfig, exec: Execution) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let mut out = Emitter { prefix: config.out().to_string(), files: Vec::new() };
    let (spectra, study) = match config.kind {
        Kind::Spectrum | Kind::Bounds => (run_spectrum(config, &mut out)?, None),
        Kind::Mixed => (run_mixed(config, &mut out)?, None),
        Kind::Refine => {
            let (s, st) = run_refine(config, exec, &mut out)?;
            (s, Some(st))
        }
        Kind::Dilate => {
            let (s, st) = run_dilate(config, exec, &mut out)?;
            (s, Some(st))
        }
        Kind::Prolate => {
            let (s, st) = run_prolate(config, &mut out)?;
            (s, Some(st))
        }
        Kind::ProlateStudy => {
            let (s, st) = run_prolate_study(config, exec, &mut out)?;
            (s, Some(st))
        }
    };
    let summary = RunSummary {
        library_version: LIBRARY_VERSION.to_string(),
        kind: config.kind.name().to_string(),
        config: config.values.clone(),
        spectra,
        study,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(numerical)? + "\n";
    out.add("summary.json", json);
    Ok(RunOutput { summary, files: out.files, wall_seconds: start.elapsed().as_secs_f64() })
}

pub fn timing_path(prefix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.timing.json"))
}

/// Writes all outputs plus the timing sidecar. Paths are relative to `dir`.
pub fn emit(output: &RunOutput, prefix: &str, dir: &Path, force: bool) -> Result<Vec<PathBuf>, RunError> {
    let mut targets: Vec<(PathBuf, String)> = output.files.iter().map(|(p, c)| (dir.join(p), c.clone())).collect();
    let timing = serde_json::json!({ "wall_seconds": output.wall_seconds });
    targets.push((dir.join(timing_path(prefix)), format!("{timing:#}\n")));
    if !force {
        if let Some((p, _)) = targets.iter().find(|(p, _)| p.exists()) {
            return Err(RunError::Exists(p.display().to_string()));
        }
    }
    let mut written = Vec::new();
    for (path, contents) in targets {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .map_err(|e| RunError::Write { path: parent.display().to_string(), message: e.to_string() })?;
            }
        }
        fs::write(&path, contents).map_err(|e| RunError::Write { path: path.display().to_string(), message: e.to_string() })?;
        written.push(path);
    }
    Ok(written)
}

/// `SPECLAB_THREADS` as a positive integer, if set.
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

/// Parse-free entry point used by the CLI: run, then write into `dir`.
pub fn run_and_emit(config: &ExperimentConfig, dir: &Path, force: bool, exec: Execution) -> Result<RunOutput, RunError> {
    let output = crate::exec::with_thread_cap(thread_cap_from_env(), || run(config, exec))?;
    emit(&output, config.out(), dir, force)?;
    Ok(output)
}
