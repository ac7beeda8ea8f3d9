//! Correlation sweeps and their CSV output.
//!
//! A [`SweepSpec`] is read from a flat `key = value` file, optionally patched
//! with `key=value` overrides. Every `(rho, quantity, tc)` cell is evaluated
//! independently with a seed derived from `(seed, rho index, quantity, tc)`,
//! and rows are sorted before output, so results do not depend on the worker
//! count.
//!
//! CSV schema: `rho,quantity,tc,value_bits,stderr_bits,flags`, numbers with six
//! significant digits, rows ordered by quantity name, then `tc`, then `rho`.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::capacity::{db_to_linear, evaluate, ChannelConfig, GeneralModelStates, McSettings, Quantity};
use crate::entropy::{DEFAULT_MC_SAMPLES, MIN_MC_SAMPLES};
use crate::error::{Error, Result};
use crate::seed;
use crate::switch_model::{joint_from_marginals, SwitchJoint};

pub const CSV_HEADER: &str = "rho,quantity,tc,value_bits,stderr_bits,flags";

/// Recognized configuration keys.
pub const CONFIG_KEYS: [&str; 10] = [
    "p_t",
    "p_r",
    "rho_grid",
    "power_db",
    "tc_list",
    "quantities",
    "snr_good_db",
    "snr_bad_db",
    "mc_samples",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub p_t: f64,
    pub p_r: f64,
    pub rho_grid: Vec<f64>,
    pub power_db: f64,
    /// Linear power, converted from `power_db` once at parse time.
    pub power: f64,
    pub tc_list: Vec<usize>,
    pub quantities: Vec<Quantity>,
    pub states: Option<GeneralModelStates>,
    pub mc_samples: usize,
    pub seed: u64,
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub quantity: Quantity,
    pub tc: usize,
    /// `None` when the quantity is undefined for this cell.
    pub value_bits: Option<f64>,
    pub std_err_bits: Option<f64>,
    pub flags: Vec<String>,
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with("error="))
    }
}

/// Raw `key = value` settings with the place each came from.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
}

fn config_error(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        location: location.into(),
        message: message.into(),
    }
}

impl RawConfig {
    /// Parses a config file body. `#` starts a comment.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            raw.insert(line, format!("{source}:{}", i + 1))?;
        }
        Ok(raw)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        self.insert(assignment, format!("--set {assignment}"))
    }

    fn insert(&mut self, assignment: &str, location: String) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_error(&location, "expected `key = value`"))?;
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(config_error(
                &location,
                format!("unknown key `{key}` (expected one of {})", CONFIG_KEYS.join(", ")),
            ));
        }
        self.entries
            .insert(key.to_string(), (value.trim().to_string(), location));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, &str)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), l.as_str()))
    }
}

fn parse_f64(value: &str, key: &str, location: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| config_error(location, format!("`{key}`: `{value}` is not a finite number")))
}

fn parse_list<T>(value: &str, key: &str, location: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<_>>()?;
    if items.is_empty() && key != "quantities" {
        return Err(config_error(location, format!("`{key}` must not be empty")));
    }
    Ok(items)
}

/// `start:step:end` ranges or comma-separated values.
fn parse_rho_grid(value: &str, location: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() == 3 {
        let start = parse_f64(parts[0], "rho_grid", location)?;
        let step = parse_f64(parts[1], "rho_grid", location)?;
        let end = parse_f64(parts[2], "rho_grid", location)?;
        if !(step > 0.0) || end < start {
            return Err(config_error(
                location,
                "`rho_grid` range needs step > 0 and end >= start",
            ));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count)
            .map(|i| {
                let v = start + i as f64 * step;
                (v * 1e12).round() / 1e12
            })
            .collect());
    }
    parse_list(value, "rho_grid", location, |s| parse_f64(s, "rho_grid", location))
}

impl Default for SweepSpec {
    /// Lightly loaded system at 10 dB, the full correlation grid and `tc` in {1, 3, 5}.
    fn default() -> Self {
        Self {
            p_t: 0.9,
            p_r: 0.9,
            rho_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            power_db: 10.0,
            power: db_to_linear(10.0),
            tc_list: vec![1, 3, 5],
            quantities: vec![
                Quantity::Causal,
                Quantity::NoncausalInner,
                Quantity::Global,
                Quantity::RxFull,
                Quantity::TxFullCausal,
                Quantity::TxFullNoncausalInner,
            ],
            states: None,
            mc_samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

impl SweepSpec {
    /// Builds a spec from defaults overlaid with `raw`, then validates it.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut spec = Self::default();
        if let Some((v, loc)) = raw.get("p_t") {
            spec.p_t = parse_f64(v, "p_t", loc)?;
        }
        if let Some((v, loc)) = raw.get("p_r") {
            spec.p_r = parse_f64(v, "p_r", loc)?;
        }
        if let Some((v, loc)) = raw.get("rho_grid") {
            spec.rho_grid = parse_rho_grid(v, loc)?;
        }
        if let Some((v, loc)) = raw.get("power_db") {
            spec.power_db = parse_f64(v, "power_db", loc)?;
        }
        if let Some((v, loc)) = raw.get("tc_list") {
            spec.tc_list = parse_list(v, "tc_list", loc, |s| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&tc| tc >= 1)
                    .ok_or_else(|| config_error(loc, format!("`tc_list`: `{s}` is not a block length >= 1")))
            })?;
        }
        if let Some((v, loc)) = raw.get("quantities") {
            spec.quantities = parse_list(v, "quantities", loc, |s| {
                s.parse::<Quantity>()
                    .ok()
                    .filter(|q| *q != Quantity::MutualInformation)
                    .ok_or_else(|| config_error(loc, format!("`quantities`: unknown quantity `{s}`")))
            })?;
        }
        let snr_good = raw.get("snr_good_db");
        let snr_bad = raw.get("snr_bad_db");
        spec.states = match (snr_good, snr_bad) {
            (Some((g, gl)), Some((b, bl))) => {
                let good = parse_f64(g, "snr_good_db", gl)?;
                let bad = parse_f64(b, "snr_bad_db", bl)?;
                Some(GeneralModelStates::from_db(good, bad).map_err(|e| config_error(gl, e.to_string()))?)
            }
            (None, None) => None,
            (Some((_, loc)), None) | (None, Some((_, loc))) => {
                return Err(config_error(
                    loc,
                    "`snr_good_db` and `snr_bad_db` must be given together",
                ))
            }
        };
        if let Some((v, loc)) = raw.get("mc_samples") {
            spec.mc_samples = v
                .parse::<usize>()
                .map_err(|_| config_error(loc, format!("`mc_samples`: `{v}` is not a count")))?;
            if spec.mc_samples < MIN_MC_SAMPLES {
                return Err(config_error(
                    loc,
                    format!("`mc_samples` must be at least {MIN_MC_SAMPLES}"),
                ));
            }
        }
        if let Some((v, loc)) = raw.get("seed") {
            spec.seed = v
                .parse::<u64>()
                .map_err(|_| config_error(loc, format!("`seed`: `{v}` is not an unsigned integer")))?;
        }
        spec.power = db_to_linear(spec.power_db);
        spec.validate()?;
        Ok(spec)
    }

    /// Parses a config file body and applies overrides in order.
    pub fn parse(text: &str, source: &str, overrides: &[String]) -> Result<Self> {
        let mut raw = RawConfig::parse(text, source)?;
        for o in overrides {
            raw.set(o)?;
        }
        Self::from_raw(&raw)
    }

    pub fn validate(&self) -> Result<()> {
        for &rho in &self.rho_grid {
            joint_from_marginals(self.p_t, self.p_r, rho)?;
        }
        if !self.power_db.is_finite() {
            return Err(config_error("power_db", "must be finite"));
        }
        if self.tc_list.is_empty() {
            return Err(config_error("tc_list", "must not be empty"));
        }
        if self.quantities.contains(&Quantity::General) && self.states.is_none() {
            return Err(config_error(
                "quantities",
                "`general` needs `snr_good_db` and `snr_bad_db`",
            ));
        }
        Ok(())
    }

    fn joint(&self, rho: f64) -> Result<SwitchJoint> {
        joint_from_marginals(self.p_t, self.p_r, rho)
    }
}

fn quantity_index(q: Quantity) -> u64 {
    q as u64
}

/// Short error tag safe for the CSV flags column.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::InfeasibleCorrelation { .. } => "InfeasibleCorrelation",
        Error::DegenerateMarginal(_) => "DegenerateMarginal",
        Error::InvalidProbability { .. } => "InvalidProbability",
        Error::ConditionOnNullEvent => "ConditionOnNullEvent",
        Error::NonPositiveVariance(_) => "NonPositiveVariance",
        Error::InvalidWeights(_) => "InvalidWeights",
        Error::QuadratureNonConvergence { .. } => "QuadratureNonConvergence",
        Error::ModelMismatch(_) => "ModelMismatch",
        Error::InvalidArgument(_) => "InvalidArgument",
        Error::Config { .. } => "Config",
    }
}

fn evaluate_cell(spec: &SweepSpec, rho_index: usize, rho: f64, quantity: Quantity, tc: usize) -> Result<SweepRow> {
    let mut row = SweepRow {
        rho,
        quantity,
        tc,
        value_bits: None,
        std_err_bits: None,
        flags: Vec::new(),
    };
    if tc > 1 && !quantity.supports_blocks() {
        row.flags.push("tc_unsupported".into());
        return Ok(row);
    }
    let j = spec.joint(rho)?;
    let cell_seed = seed::derive(
        seed::derive(seed::derive(spec.seed, rho_index as u64), quantity_index(quantity)),
        tc as u64,
    );
    let cfg = ChannelConfig::new(spec.power, 1.0, tc)?.with_mc(McSettings {
        samples: spec.mc_samples,
        seed: cell_seed,
    });
    match evaluate(quantity, &j, &cfg, spec.states.as_ref()) {
        Ok(est) => {
            row.value_bits = Some(est.value);
            row.std_err_bits = Some(est.std_err);
            row.flags.push(est.method.name().into());
            if est.clipped {
                row.flags.push("clipped".into());
            }
        }
        Err(e) => row.flags.push(format!("error={}", error_code(&e))),
    }
    Ok(row)
}

fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(|a, b| {
        a.quantity
            .name()
            .cmp(b.quantity.name())
            .then(a.tc.cmp(&b.tc))
            .then(a.rho.total_cmp(&b.rho))
    });
}

/// Evaluates every `(rho, quantity, tc)` cell. Cells whose quantity is
/// undefined carry an `error=` flag instead of a value.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let tasks: Vec<(usize, f64, Quantity, usize)> = spec
        .rho_grid
        .iter()
        .enumerate()
        .flat_map(|(i, &rho)| {
            spec.quantities
                .iter()
                .flat_map(move |&q| spec.tc_list.iter().map(move |&tc| (i, rho, q, tc)))
        })
        .collect();
    let mut rows = tasks
        .into_par_iter()
        .map(|(i, rho, q, tc)| evaluate_cell(spec, i, rho, q, tc))
        .collect::<Result<Vec<_>>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// [`run_sweep`] on a pool with exactly `workers` threads.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run_sweep(spec))
}

/// Single-correlation evaluation; the spec's grid must hold exactly one value.
pub fn run_point(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.rho_grid.len() != 1 {
        return Err(config_error(
            "rho_grid",
            format!("`point` needs exactly one correlation, got {}", spec.rho_grid.len()),
        ));
    }
    run_sweep(spec)
}

/// Six significant digits in positional notation.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    let decimals = (5 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_sig6(r.rho),
            r.quantity.name(),
            r.tc,
            r.value_bits.map(format_sig6).unwrap_or_default(),
            r.std_err_bits.map(format_sig6).unwrap_or_default(),
            r.flags.join(";")
        )?;
    }
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}
