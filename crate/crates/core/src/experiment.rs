//! Config-driven experiments: JSON spec in, CSV rows and a JSON summary out.
//!
//! A config names a preset; every field it leaves out is taken from that
//! preset's defaults, and the fully resolved spec is embedded in the summary.
//! Trials draw `y` from `rng::stream(seed, trial)`, so the CSV depends only on
//! the resolved spec, never on the worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dimension::{block_measure, box_dimension, energy, frostman_exponent};
use crate::discrepancy::{block_discrepancy, decay_fit, discrepancy, min_gap};
use crate::dyadic::DyadicNumber;
use crate::error::{Error, Result};
use crate::limsup::{analytic_block_bounds, chung_erdos, measure_profile};
use crate::littlewood::{bad_certificate, cf_prefix_to_number, liminf_scan, ContinuedFraction};
use crate::measures::{fourier_decay_exponent, FrequencyGrid, MeasureModel};
use crate::sequences::{nth_term, orbit_from_spec, parse_rational, required_bits, IndexedPoints, SequenceSpec};
use crate::{rng, stats};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    MeasureGrowth,
    DimensionLacunary,
    DimensionBounds,
    FrostmanCertificate,
    FourierDecay,
    LittlewoodScan,
    ChungErdosBlocks,
    DiscrepancySweep,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::MeasureGrowth,
        Preset::DimensionLacunary,
        Preset::DimensionBounds,
        Preset::FrostmanCertificate,
        Preset::FourierDecay,
        Preset::LittlewoodScan,
        Preset::ChungErdosBlocks,
        Preset::DiscrepancySweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MeasureGrowth => "measure-growth",
            Preset::DimensionLacunary => "dimension-lacunary",
            Preset::DimensionBounds => "dimension-bounds",
            Preset::FrostmanCertificate => "frostman-certificate",
            Preset::FourierDecay => "fourier-decay",
            Preset::LittlewoodScan => "littlewood-scan",
            Preset::ChungErdosBlocks => "chung-erdos-blocks",
            Preset::DiscrepancySweep => "discrepancy-sweep",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Preset::MeasureGrowth => "Lebesgue measure of the truncated limsup set as N grows",
            Preset::DimensionLacunary => "box-counting slope and Riesz energy of block measures for lacunary orbits",
            Preset::DimensionBounds => "box-counting slope against the discrepancy-based lower bound",
            Preset::FrostmanCertificate => "Frostman ratio of block measures against the explicit constant",
            Preset::FourierDecay => "Fourier decay exponent of a measure on a frequency grid",
            Preset::LittlewoodScan => "running minima of q·‖qx‖·‖qy − γ‖ for a badly approximable x",
            Preset::ChungErdosBlocks => "exact Chung–Erdős moments on a block schedule",
            Preset::DiscrepancySweep => "discrepancy, block discrepancy and minimum gap over an N grid",
        }
    }

    /// The defaults a config is merged over.
    pub fn defaults(self) -> Value {
        let base = json!({
            "schema_version": SCHEMA_VERSION,
            "name": self.name(),
            "preset": self.name(),
            "measure": {"kind": "lebesgue01"},
            "seed": 1,
            "rng": rng::ALGORITHM,
            "bits": "auto",
            "workers": 1,
            "schedule": null,
            "outputs": {"dir": "out", "csv": format!("{}.csv", self.name()), "summary": format!("{}.summary.json", self.name())},
        });
        let specific = match self {
            Preset::MeasureGrowth => json!({
                "sequence": {"kind": "poly", "coeffs": [0, 0, 1]},
                "alpha": 0.8,
                "trials": 20,
                "bits": 128,
                "schedule": {"kind": "list", "values": [16, 64, 256, 1024, 4096, 16384, 65536, 100000]},
                "params": {"threshold": 0.95, "min_pass_fraction": 0.9},
            }),
            Preset::DimensionLacunary => json!({
                "sequence": {"kind": "geometric", "c": 1, "rho": 2},
                "alpha": [1.5, 2.0, 3.0],
                "trials": 10,
                "schedule": {"kind": "pow2", "lo": 6, "hi": 13},
                "params": {
                    "energy_schedule": {"kind": "pow2", "lo": 5, "hi": 12},
                    "t_factor": 0.8,
                    "tolerance": 0.05,
                    "growth_limit": 1.2,
                    "min_pass_fraction": 0.8,
                },
            }),
            Preset::DimensionBounds => json!({
                "sequence": {"kind": "poly", "coeffs": [0, 0, 1]},
                "alpha": 2.0,
                "trials": 10,
                "schedule": {"kind": "pow2", "lo": 6, "hi": 12},
                "params": {"tolerance": 0.05, "min_pass_fraction": 0.8},
            }),
            Preset::FrostmanCertificate => json!({
                "sequence": {"kind": "geometric", "c": 1, "rho": 2},
                "alpha": 4.0,
                "trials": 3,
                "schedule": {"kind": "pow2", "lo": 4, "hi": 12},
                "params": {},
            }),
            Preset::FourierDecay => json!({
                "sequence": null,
                "measure": {"kind": "cantor", "base": 3, "digits": [0, 2]},
                "alpha": null,
                "trials": 1,
                "params": {"xi_grid": "pow3:1:12", "expect_min": -0.05, "expect_max": 0.05},
            }),
            Preset::LittlewoodScan => json!({
                "sequence": null,
                "alpha": null,
                "trials": 10,
                "bits": 128,
                "params": {
                    "x_quotient": 1,
                    "gamma": "1/3",
                    "q_max": 1_000_000,
                    "eps": 0.1,
                    "min_pass_fraction": 0.8,
                    "certificate_target": 0.4472,
                    "certificate_tolerance": 0.001,
                },
            }),
            Preset::ChungErdosBlocks => json!({
                "sequence": {"kind": "poly", "coeffs": [0, 0, 1]},
                "alpha": 0.8,
                "trials": 5,
                "schedule": {"kind": "exp_power", "lo": 1, "hi": 7, "power": 1.1},
                "params": {"cross_constant": 1.0},
            }),
            Preset::DiscrepancySweep => json!({
                "sequence": {"kind": "geometric", "c": 1, "rho": 2},
                "alpha": null,
                "trials": 4,
                "schedule": {"kind": "pow2", "lo": 8, "hi": 16},
                "params": {"min_pass_fraction": 1.0},
            }),
        };
        let mut out = base;
        merge(&mut out, specific);
        out
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::schema("preset", format!("unknown preset `{s}`")))
    }
}

/// `alpha` may be one number or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Alpha {
    One(f64),
    Many(Vec<f64>),
}

impl Alpha {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Alpha::One(a) => vec![*a],
            Alpha::Many(v) => v.clone(),
        }
    }
}

/// Working precision for `y`: a bit count, or `"auto"` for the smallest
/// precision that keeps every orbit point exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bits {
    Auto,
    Fixed(u64),
}

impl Serialize for Bits {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bits::Auto => s.serialize_str("auto"),
            Bits::Fixed(b) => s.serialize_u64(*b),
        }
    }
}

impl<'de> Deserialize<'de> for Bits {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Ok(Bits::Fixed(b)),
            Raw::Text(t) if t == "auto" => Ok(Bits::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bits must be a number or \"auto\", got `{t}`"))),
        }
    }
}

/// Index schedules.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `2^lo, …, 2^hi`.
    Pow2 { lo: u32, hi: u32 },
    List { values: Vec<usize> },
    /// `⌊exp(j^power)⌋` for `j = lo..=hi`, duplicates dropped.
    ExpPower { lo: u32, hi: u32, power: f64 },
}

impl Schedule {
    pub fn values(&self) -> Result<Vec<usize>> {
        let v: Vec<usize> = match self {
            Schedule::Pow2 { lo, hi } => {
                if lo > hi || *hi > 40 {
                    return Err(Error::schema("schedule", "pow2 needs lo <= hi <= 40"));
                }
                (*lo..=*hi).map(|e| 1usize << e).collect()
            }
            Schedule::List { values } => values.clone(),
            Schedule::ExpPower { lo, hi, power } => {
                if lo > hi || !(*power > 0.0 && power.is_finite()) {
                    return Err(Error::schema("schedule", "exp_power needs lo <= hi and power > 0"));
                }
                let mut v: Vec<usize> = (*lo..=*hi).map(|j| (j as f64).powf(*power).exp().floor() as usize).collect();
                v.dedup();
                v
            }
        };
        if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::schema("schedule", "values must be positive and strictly increasing"));
        }
        Ok(v)
    }
}

/// Preset-specific knobs. Each preset reads only the ones it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pass_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_schedule: Option<Schedule>,
    /// Energy exponent as a multiple of `1/α`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_factor: Option<f64>,
    /// Largest allowed ratio of last-quartile to first-quartile mean energy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect_max: Option<f64>,
    /// `x = [0; a, a, a, …]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_quotient: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_constant: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub dir: PathBuf,
    pub csv: PathBuf,
    pub summary: PathBuf,
}

impl Outputs {
    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(&self.csv)
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(&self.summary)
    }
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub name: String,
    pub preset: Preset,
    pub sequence: Option<SequenceSpec>,
    pub measure: MeasureModel,
    pub alpha: Option<Alpha>,
    pub trials: usize,
    pub seed: u64,
    pub rng: String,
    pub bits: Bits,
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub params: Params,
    pub outputs: Outputs,
    pub workers: usize,
}

/// Top-level keys replace the preset's; `params` and `outputs` merge per key.
fn merge(base: &mut Value, over: Value) {
    let (Value::Object(b), Value::Object(o)) = (base, over) else {
        return;
    };
    for (k, v) in o {
        match (b.get_mut(&k), v) {
            (Some(Value::Object(inner)), Value::Object(v)) if k == "params" || k == "outputs" => {
                inner.extend(v);
            }
            (_, v) => {
                b.insert(k, v);
            }
        }
    }
}

impl ExperimentSpec {
    pub fn preset(preset: Preset) -> Self {
        serde_json::from_value(preset.defaults()).expect("preset defaults deserialize")
    }

    /// Parses a config and fills in the preset's defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::schema("config", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let Value::Object(obj) = &value else {
            return Err(Error::schema("config", "expected a JSON object"));
        };
        match obj.get("schema_version") {
            Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
            Some(v) => return Err(Error::schema("schema_version", format!("unsupported version {v}"))),
            None => return Err(Error::schema("schema_version", "missing")),
        }
        let preset: Preset = match obj.get("preset") {
            Some(Value::String(s)) => s.parse()?,
            Some(_) => return Err(Error::schema("preset", "expected a string")),
            None => return Err(Error::schema("preset", "missing")),
        };
        let mut merged = preset.defaults();
        merge(&mut merged, value);
        let spec: ExperimentSpec = serde_json::from_value(merged).map_err(|e| Error::schema("config", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.alpha.as_ref().map(Alpha::values).unwrap_or_default()
    }

    fn sequence(&self) -> Result<&SequenceSpec> {
        self.sequence
            .as_ref()
            .ok_or_else(|| Error::schema("sequence", format!("preset {} needs a sequence", self.preset)))
    }

    fn schedule_values(&self) -> Result<Vec<usize>> {
        self.schedule
            .as_ref()
            .ok_or_else(|| Error::schema("schedule", format!("preset {} needs a schedule", self.preset)))?
            .values()
    }

    fn min_pass(&self) -> usize {
        let frac = self.params.min_pass_fraction.unwrap_or(1.0);
        ((frac * self.trials as f64) - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let schema = |field: &str, reason: &str| Err(Error::schema(field, reason));
        if self.schema_version != SCHEMA_VERSION {
            return schema("schema_version", "unsupported version");
        }
        if self.name.is_empty() {
            return schema("name", "must not be empty");
        }
        if self.rng != rng::ALGORITHM {
            return Err(Error::schema("rng", format!("only `{}` is supported", rng::ALGORITHM)));
        }
        if self.trials == 0 {
            return schema("trials", "must be at least 1");
        }
        if self.workers == 0 {
            return schema("workers", "must be at least 1");
        }
        if let Bits::Fixed(b) = self.bits {
            if b < 64 {
                return schema("bits", "must be at least 64");
            }
        }
        self.measure
            .validate()
            .map_err(|e| Error::schema("measure", e.to_string()))?;
        let alphas = self.alphas();
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return schema("alpha", "every alpha must be a positive finite number");
        }
        if let Some(f) = self.params.min_pass_fraction {
            if !(0.0..=1.0).contains(&f) {
                return schema("params.min_pass_fraction", "must lie in [0, 1]");
            }
        }
        let needs_alpha = !matches!(
            self.preset,
            Preset::FourierDecay | Preset::LittlewoodScan | Preset::DiscrepancySweep
        );
        if needs_alpha && alphas.is_empty() {
            return schema("alpha", "this preset needs alpha");
        }
        match self.preset {
            Preset::DimensionLacunary | Preset::DimensionBounds | Preset::FrostmanCertificate => {
                if alphas.iter().any(|&a| a < 1.0) {
                    return schema("alpha", "dimension presets need alpha >= 1");
                }
                if self.schedule_values()?.len() < 3 {
                    return schema("schedule", "need at least three block sizes");
                }
            }
            Preset::ChungErdosBlocks => {
                if alphas.iter().any(|&a| a >= 1.0) {
                    return schema("alpha", "block bounds need 0 < alpha < 1");
                }
                if self.schedule_values()?.len() < 2 {
                    return schema("schedule", "need at least two block endpoints");
                }
            }
            Preset::MeasureGrowth | Preset::DiscrepancySweep => {
                self.schedule_values()?;
            }
            Preset::FourierDecay => {
                let grid = self.params.xi_grid.as_deref().unwrap_or("");
                FrequencyGrid::parse(grid).map_err(|e| Error::schema("params.xi_grid", e.to_string()))?;
            }
            Preset::LittlewoodScan => {
                if self.params.x_quotient == Some(0) {
                    return schema("params.x_quotient", "must be positive");
                }
                if let Some(g) = &self.params.gamma {
                    parse_rational(g).map_err(|e| Error::schema("params.gamma", e.to_string()))?;
                }
            }
        }
        if needs_alpha || self.preset == Preset::DiscrepancySweep {
            self.sequence()?;
        }
        Ok(())
    }
}

/// Mean, minimum and maximum of one per-trial metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Aggregate {
    fn of(xs: &[f64]) -> Self {
        Aggregate {
            count: xs.len(),
            mean: stats::mean(xs),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub header: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
    pub trials: Vec<TrialSummary>,
    pub aggregates: BTreeMap<String, Aggregate>,
    pub criteria: Vec<Criterion>,
    pub passed: bool,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the CSV and the summary under `outputs.dir` (or `dir`, if given).
    pub fn write(&self, dir: Option<&Path>) -> Result<(PathBuf, PathBuf)> {
        let mut outputs = self.spec.outputs.clone();
        if let Some(d) = dir {
            outputs.dir = d.to_path_buf();
        }
        std::fs::create_dir_all(&outputs.dir)?;
        let (csv_path, summary_path) = (outputs.csv_path(), outputs.summary_path());
        std::fs::write(&csv_path, self.csv_bytes()?)?;
        std::fs::write(&summary_path, self.summary_json()?)?;
        Ok((csv_path, summary_path))
    }

    pub fn criterion(&self, name: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.name == name)
    }
}

/// What one trial contributes.
#[derive(Default)]
struct TrialOutput {
    rows: Vec<Vec<String>>,
    metrics: BTreeMap<String, f64>,
}

impl TrialOutput {
    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Runs the experiment on `spec.workers` threads.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Degenerate(format!("cannot start worker pool: {e}")))?;
    let trials = if spec.preset == Preset::FourierDecay { 1 } else { spec.trials };
    let outputs: Vec<TrialOutput> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| run_trial(spec, t))
            .collect::<Result<Vec<_>>>()
    })?;
    let header = header(spec).into_iter().map(String::from).collect();
    let mut rows = Vec::new();
    let mut summaries = Vec::with_capacity(outputs.len());
    for (trial, out) in outputs.into_iter().enumerate() {
        rows.extend(out.rows);
        summaries.push(TrialSummary {
            trial,
            metrics: out.metrics,
        });
    }
    let mut keys: Vec<&String> = summaries.iter().flat_map(|t| t.metrics.keys()).collect();
    keys.sort();
    keys.dedup();
    let aggregates = keys
        .into_iter()
        .map(|k| {
            let xs: Vec<f64> = summaries.iter().filter_map(|t| t.metrics.get(k).copied()).collect();
            (k.clone(), Aggregate::of(&xs))
        })
        .collect();
    let criteria = criteria(spec, &summaries);
    Ok(ExperimentReport {
        spec: spec.clone(),
        header,
        rows,
        passed: criteria.iter().all(|c| c.passed),
        trials: summaries,
        aggregates,
        criteria,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

fn header(spec: &ExperimentSpec) -> Vec<&'static str> {
    match spec.preset {
        Preset::MeasureGrowth => vec!["trial", "alpha", "n", "measure", "subadditive_bound"],
        Preset::DimensionLacunary => vec!["trial", "alpha", "n", "delta", "box_count", "energy_t", "energy"],
        Preset::DimensionBounds => vec!["trial", "alpha", "n", "discrepancy", "delta", "box_count"],
        Preset::FrostmanCertificate => {
            vec!["trial", "alpha", "n", "discrepancy", "min_gap", "frostman_sup", "bound"]
        }
        Preset::FourierDecay => vec!["xi", "re", "im", "magnitude", "band_max"],
        Preset::LittlewoodScan => vec![
            "trial",
            "q",
            "qx_dist",
            "qy_gamma_dist",
            "product",
            "threshold",
            "below_threshold",
        ],
        Preset::ChungErdosBlocks => vec![
            "trial",
            "alpha",
            "block_m",
            "block_n",
            "S",
            "C",
            "bound",
            "exact_union",
            "holds",
            "second_moment_bound",
            "first_moment_bound",
        ],
        Preset::DiscrepancySweep => {
            vec!["trial", "n", "discrepancy", "block_discrepancy", "min_gap", "eta_running"]
        }
    }
}

/// Samples `y` for `trial` and its orbit `x_1..x_n`.
fn trial_orbit(spec: &ExperimentSpec, trial: usize, n: usize) -> Result<IndexedPoints> {
    let seq = spec.sequence()?;
    let bits = match spec.bits {
        Bits::Auto => required_bits(&nth_term(seq, n)?),
        Bits::Fixed(b) => b,
    };
    let mut rng = rng::stream(spec.seed, trial as u64);
    let y = spec.measure.sample(&mut rng, bits)?;
    orbit_from_spec(seq, &y, 1, n)
}

fn run_trial(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    match spec.preset {
        Preset::MeasureGrowth => measure_growth(spec, trial),
        Preset::DimensionLacunary => dimension_lacunary(spec, trial),
        Preset::DimensionBounds => dimension_bounds(spec, trial),
        Preset::FrostmanCertificate => frostman_certificate(spec, trial),
        Preset::FourierDecay => fourier(spec),
        Preset::LittlewoodScan => littlewood(spec, trial),
        Preset::ChungErdosBlocks => chung_erdos_blocks(spec, trial),
        Preset::DiscrepancySweep => discrepancy_sweep(spec, trial),
    }
}

fn measure_growth(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let checkpoints = spec.schedule_values()?;
    let last = *checkpoints.last().expect("nonempty schedule");
    let points = trial_orbit(spec, trial, last)?;
    let mut out = TrialOutput::default();
    for alpha in spec.alphas() {
        let profile = measure_profile(&points, alpha, 1, &checkpoints)?;
        let mut partial = 0.0;
        let mut from = 1;
        let mut monotone = true;
        for (i, (&n, m)) in checkpoints.iter().zip(&profile).enumerate() {
            let terms: Vec<f64> = (from..=n).map(|k| 2.0 * (k as f64).powf(-alpha)).collect();
            partial += stats::pairwise_sum(&terms);
            from = n + 1;
            monotone &= i == 0 || profile[i - 1] <= *m;
            out.rows.push(vec![
                trial.to_string(),
                num(alpha),
                n.to_string(),
                num(m.to_f64()),
                num(partial.min(1.0)),
            ]);
        }
        out.metric(format!("final_measure[{alpha}]"), profile.last().expect("nonempty").to_f64());
        out.metric(format!("monotone[{alpha}]"), monotone as u8 as f64);
    }
    Ok(out)
}

fn dimension_lacunary(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let box_ns = spec.schedule_values()?;
    let energy_ns = match &spec.params.energy_schedule {
        Some(s) => s.values().map_err(|e| Error::schema("params.energy_schedule", e.to_string()))?,
        None => Vec::new(),
    };
    let last = box_ns.iter().chain(&energy_ns).max().copied().expect("nonempty schedule");
    let points = trial_orbit(spec, trial, 2 * last)?;
    let t_factor = spec.params.t_factor.unwrap_or(0.8);
    let mut out = TrialOutput::default();
    for alpha in spec.alphas() {
        let est = box_dimension(&points, alpha, &box_ns)?;
        let t = t_factor / alpha;
        let energies = energy_ns
            .iter()
            .map(|&n| energy(&block_measure(&points, alpha, n)?, t))
            .collect::<Result<Vec<f64>>>()?;
        let mut ns: Vec<usize> = box_ns.iter().chain(&energy_ns).copied().collect();
        ns.sort_unstable();
        ns.dedup();
        for n in ns {
            let scale = est.scales.iter().find(|r| r.n == n);
            let e = energy_ns.iter().position(|&m| m == n).map(|i| energies[i]);
            out.rows.push(vec![
                trial.to_string(),
                num(alpha),
                n.to_string(),
                opt(scale.map(|r| r.delta)),
                scale.map(|r| r.count.to_string()).unwrap_or_default(),
                if e.is_some() { num(t) } else { String::new() },
                opt(e),
            ]);
        }
        out.metric(format!("slope[{alpha}]"), est.slope);
        if !energies.is_empty() {
            let (first, last) = stats::quartile_means(&energies);
            out.metric(format!("energy_growth[{alpha}]"), last / first);
            out.metric(
                format!("energy_max[{alpha}]"),
                energies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            );
        }
    }
    Ok(out)
}

fn dimension_bounds(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let ns = spec.schedule_values()?;
    let last = *ns.last().expect("nonempty schedule");
    let points = trial_orbit(spec, trial, 2 * last)?;
    let samples = ns
        .iter()
        .map(|&n| Ok((n, discrepancy(&points.points, n)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let fit = decay_fit(&samples)?;
    let mut out = TrialOutput::default();
    out.metric("eta", fit.eta);
    for alpha in spec.alphas() {
        let est = box_dimension(&points, alpha, &ns)?;
        for (row, &(_, d)) in est.scales.iter().zip(&samples) {
            out.rows.push(vec![
                trial.to_string(),
                num(alpha),
                row.n.to_string(),
                num(d),
                num(row.delta),
                row.count.to_string(),
            ]);
        }
        out.metric(format!("slope[{alpha}]"), est.slope);
    }
    Ok(out)
}

/// Exponents measured from the orbit: `D_N ≤ c·N^{1−η}` and `d_N ≈ N^{-β}`.
struct OrbitExponents {
    eta: f64,
    c: f64,
    beta: f64,
}

fn orbit_exponents(ns: &[usize], disc: &[f64], gaps: &[f64]) -> Result<OrbitExponents> {
    let samples: Vec<(usize, f64)> = ns.iter().copied().zip(disc.iter().copied()).collect();
    let eta = decay_fit(&samples)?.eta;
    let c = ns
        .iter()
        .zip(disc)
        .map(|(&n, &d)| d / (n as f64).powf(1.0 - eta))
        .fold(0.0, f64::max);
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| -g.ln()).collect();
    let beta = stats::least_squares(&xs, &ys).slope.max(1.0);
    Ok(OrbitExponents { eta, c, beta })
}

fn frostman_certificate(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let ns = spec.schedule_values()?;
    let last = *ns.last().expect("nonempty schedule");
    let points = trial_orbit(spec, trial, 2 * last)?;
    let disc = ns
        .iter()
        .map(|&n| Ok(discrepancy(&points.points, n)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let gaps = ns
        .iter()
        .map(|&n| Ok(min_gap(&points.points, n)?.to_f64()))
        .collect::<Result<Vec<f64>>>()?;
    if gaps.iter().any(|&g| g <= 0.0) {
        return Err(Error::Degenerate("orbit has repeated points; no gap exponent".into()));
    }
    let exps = orbit_exponents(&ns, &disc, &gaps)?;
    let mut out = TrialOutput::default();
    out.metric("eta", exps.eta);
    out.metric("beta", exps.beta);
    out.metric("c", exps.c);
    for alpha in spec.alphas() {
        let bound = 2f64.powf(alpha).max(3.0 * 2f64.powf(exps.beta)).max(3.0 + exps.c);
        let mut worst: f64 = 0.0;
        for (i, &n) in ns.iter().enumerate() {
            let report = frostman_exponent(&block_measure(&points, alpha, n)?, 1.0 / alpha)?;
            worst = worst.max(report.sup_ratio / bound);
            out.rows.push(vec![
                trial.to_string(),
                num(alpha),
                n.to_string(),
                num(disc[i]),
                num(gaps[i]),
                num(report.sup_ratio),
                num(bound),
            ]);
        }
        out.metric(format!("worst_ratio_to_bound[{alpha}]"), worst);
        out.metric(
            format!("hypothesis_holds[{alpha}]"),
            (exps.beta <= exps.eta * (alpha - 1.0) + 1.0) as u8 as f64,
        );
    }
    Ok(out)
}

fn fourier(spec: &ExperimentSpec) -> Result<TrialOutput> {
    let grid = FrequencyGrid::parse(spec.params.xi_grid.as_deref().unwrap_or(""))?;
    let report = fourier_decay_exponent(&spec.measure, &grid)?;
    let mut out = TrialOutput::default();
    for r in &report.rows {
        out.rows.push(vec![num(r.xi), num(r.re), num(r.im), num(r.magnitude), num(r.band_max)]);
    }
    out.metric("s_fit", report.s_fit);
    out.metric("slope", report.slope);
    out.metric("residual", report.residual);
    Ok(out)
}

/// `[0; a, a, …]` pinned down to `bits` bits.
pub fn constant_quotient_number(a: u64, bits: u64) -> Result<(ContinuedFraction, DyadicNumber)> {
    let cf = ContinuedFraction::constant_prefix(a, bits)?;
    let x = cf_prefix_to_number(&cf, bits)?;
    Ok((cf, x))
}

/// `γ` given as a rational in `[0, 1)`, rounded down to `bits` bits.
pub fn rational_point(text: &str, bits: u64) -> Result<DyadicNumber> {
    let r = parse_rational(text)?;
    let (Some(p), Some(q)) = (r.numer().to_biguint(), r.denom().to_biguint()) else {
        return Err(Error::param("gamma", "must be nonnegative"));
    };
    if p >= q {
        return Err(Error::param("gamma", "must lie in [0, 1)"));
    }
    DyadicNumber::from_ratio(&p, &q, bits)
}

fn littlewood(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let p = &spec.params;
    let q_max = p.q_max.unwrap_or(1_000_000);
    let bits = match spec.bits {
        Bits::Auto => 64 + 64 - q_max.leading_zeros() as u64,
        Bits::Fixed(b) => b,
    };
    let (cf, x) = constant_quotient_number(p.x_quotient.unwrap_or(1), bits)?;
    let gamma = rational_point(p.gamma.as_deref().unwrap_or("1/3"), bits)?;
    let mut rng = rng::stream(spec.seed, trial as u64);
    let y = spec.measure.sample(&mut rng, bits)?;
    let records = liminf_scan(&x, &y, &gamma, q_max, p.eps.unwrap_or(0.1))?;
    let mut out = TrialOutput::default();
    for r in &records {
        out.rows.push(vec![
            trial.to_string(),
            r.q.to_string(),
            num(r.qx_dist),
            num(r.qy_gamma_dist),
            num(r.product),
            num(r.threshold),
            r.below_threshold.to_string(),
        ]);
    }
    let decreasing = records.windows(2).all(|w| w[1].product < w[0].product);
    out.metric("records", records.len() as f64);
    out.metric("below_threshold", records.iter().filter(|r| r.below_threshold).count() as f64);
    out.metric(
        "below_threshold_q_ge_1000",
        records.iter().filter(|r| r.below_threshold && r.q >= 1000).count() as f64,
    );
    out.metric("final_product", records.last().map_or(f64::NAN, |r| r.product));
    out.metric("strictly_decreasing", decreasing as u8 as f64);
    out.metric("certificate_tail_min", bad_certificate(&cf)?.tail_min_product);
    Ok(out)
}

fn chung_erdos_blocks(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let ends = spec.schedule_values()?;
    let last = *ends.last().expect("nonempty schedule");
    let points = trial_orbit(spec, trial, last)?;
    let c = spec.params.cross_constant.unwrap_or(1.0);
    let mut out = TrialOutput::default();
    for alpha in spec.alphas() {
        let mut holds = true;
        let mut first_moment_ok = true;
        let mut ratio = f64::NAN;
        for w in ends.windows(2) {
            let (m, n) = (w[0], w[1]);
            let r = chung_erdos(&points, alpha, m, n)?;
            let b = analytic_block_bounds(alpha, m as u64, n as u64, c)?;
            holds &= r.holds;
            first_moment_ok &= b.s_exact >= b.first_moment_bound;
            ratio = r.s * r.s / r.c;
            out.rows.push(vec![
                trial.to_string(),
                num(alpha),
                m.to_string(),
                n.to_string(),
                num(r.s),
                num(r.c),
                num(r.bound),
                num(r.exact_union),
                r.holds.to_string(),
                num(b.second_moment_bound),
                num(b.first_moment_bound),
            ]);
        }
        out.metric(format!("holds[{alpha}]"), holds as u8 as f64);
        out.metric(format!("first_moment_ok[{alpha}]"), first_moment_ok as u8 as f64);
        out.metric(format!("last_s2_over_c[{alpha}]"), ratio);
    }
    Ok(out)
}

fn discrepancy_sweep(spec: &ExperimentSpec, trial: usize) -> Result<TrialOutput> {
    let ns = spec.schedule_values()?;
    let last = *ns.last().expect("nonempty schedule");
    let points = trial_orbit(spec, trial, 2 * last)?;
    let mut out = TrialOutput::default();
    let mut samples = Vec::new();
    let mut lemma = true;
    for &n in &ns {
        let d = discrepancy(&points.points, n)?;
        let d2 = discrepancy(&points.points, 2 * n)?;
        let block = block_discrepancy(&points.points, n)?;
        lemma &= block.raw <= d.raw + d2.raw;
        samples.push((n, d.value));
        let eta = if samples.len() >= 3 { Some(decay_fit(&samples)?.eta) } else { None };
        out.rows.push(vec![
            trial.to_string(),
            n.to_string(),
            num(d.value),
            num(block.value),
            num(min_gap(&points.points, n)?.to_f64()),
            opt(eta),
        ]);
    }
    let fit = decay_fit(&samples)?;
    out.metric("eta", fit.eta);
    out.metric("slope", fit.slope);
    out.metric("block_lemma", lemma as u8 as f64);
    Ok(out)
}

fn count_where(trials: &[TrialSummary], key: &str, pred: impl Fn(f64) -> bool) -> usize {
    trials
        .iter()
        .filter(|t| t.metrics.get(key).is_some_and(|&v| pred(v)))
        .count()
}

fn at_least(name: String, hits: usize, need: usize, total: usize) -> Criterion {
    Criterion {
        name,
        passed: hits >= need,
        detail: format!("{hits}/{total} trials (need {need})"),
    }
}

fn all_trials(name: String, trials: &[TrialSummary], key: &str) -> Criterion {
    let hits = count_where(trials, key, |v| v == 1.0);
    at_least(name, hits, trials.len(), trials.len())
}

fn criteria(spec: &ExperimentSpec, trials: &[TrialSummary]) -> Vec<Criterion> {
    let p = &spec.params;
    let total = trials.len();
    let need = spec.min_pass();
    let mut out = Vec::new();
    match spec.preset {
        Preset::MeasureGrowth => {
            let threshold = p.threshold.unwrap_or(0.95);
            for a in spec.alphas() {
                out.push(all_trials(format!("nondecreasing[{a}]"), trials, &format!("monotone[{a}]")));
                let hits = count_where(trials, &format!("final_measure[{a}]"), |v| v > threshold);
                out.push(at_least(format!("final_measure_above_{threshold}[{a}]"), hits, need, total));
            }
        }
        Preset::DimensionLacunary => {
            let tol = p.tolerance.unwrap_or(0.05);
            let growth = p.growth_limit.unwrap_or(1.2);
            for a in spec.alphas() {
                let target = 1.0 / a;
                let hits = count_where(trials, &format!("slope[{a}]"), |s| (s - target).abs() <= tol);
                out.push(at_least(format!("box_slope_near_inverse_alpha[{a}]"), hits, need, total));
                if p.energy_schedule.is_some() {
                    let hits = count_where(trials, &format!("energy_growth[{a}]"), |g| g <= growth);
                    out.push(at_least(format!("energy_bounded[{a}]"), hits, need, total));
                }
            }
        }
        Preset::DimensionBounds => {
            let tol = p.tolerance.unwrap_or(0.05);
            for a in spec.alphas() {
                let hits = trials
                    .iter()
                    .filter(|t| {
                        let (Some(&s), Some(&eta)) = (t.metrics.get(&format!("slope[{a}]")), t.metrics.get("eta")) else {
                            return false;
                        };
                        eta / a - tol <= s && s <= 1.0 / a + tol
                    })
                    .count();
                out.push(at_least(format!("slope_between_bounds[{a}]"), hits, need, total));
            }
        }
        Preset::FrostmanCertificate => {
            for a in spec.alphas() {
                let key = format!("worst_ratio_to_bound[{a}]");
                let hits = count_where(trials, &key, |r| r <= 1.0);
                out.push(at_least(format!("frostman_below_constant[{a}]"), hits, total, total));
            }
        }
        Preset::FourierDecay => {
            let (lo, hi) = (p.expect_min.unwrap_or(f64::NEG_INFINITY), p.expect_max.unwrap_or(f64::INFINITY));
            let s = trials.first().and_then(|t| t.metrics.get("s_fit").copied()).unwrap_or(f64::NAN);
            out.push(Criterion {
                name: "s_fit_in_range".into(),
                passed: lo <= s && s <= hi,
                detail: format!("s_fit = {s:.6}, expected [{lo}, {hi}]"),
            });
        }
        Preset::LittlewoodScan => {
            let hits = count_where(trials, "below_threshold", |c| c >= 1.0);
            out.push(at_least("sub_threshold_record".into(), hits, need, total));
            out.push(all_trials("running_minima_decreasing".into(), trials, "strictly_decreasing"));
            if let Some(target) = p.certificate_target {
                let tol = p.certificate_tolerance.unwrap_or(1e-3);
                let hits = count_where(trials, "certificate_tail_min", |v| (v - target).abs() <= tol);
                out.push(at_least("bad_certificate".into(), hits, total, total));
            }
        }
        Preset::ChungErdosBlocks => {
            for a in spec.alphas() {
                out.push(all_trials(format!("chung_erdos_holds[{a}]"), trials, &format!("holds[{a}]")));
                out.push(all_trials(
                    format!("first_moment_bound[{a}]"),
                    trials,
                    &format!("first_moment_ok[{a}]"),
                ));
            }
        }
        Preset::DiscrepancySweep => {
            let hits = count_where(trials, "eta", |e| e > 0.0 && e < 1.0);
            out.push(at_least("eta_in_unit_interval".into(), hits, need, total));
            out.push(all_trials("block_lemma".into(), trials, "block_lemma"));
        }
    }
    out
}

/// Runs `spec` and writes its outputs.
pub fn execute(spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<(ExperimentReport, PathBuf, PathBuf)> {
    let report = run(spec)?;
    let (csv, summary) = report.write(out_dir)?;
    Ok((report, csv, summary))
}
