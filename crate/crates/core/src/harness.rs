//! Monte Carlo sweeps over scenario parameters, CSV result tables and
//! heatmap output.

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    build_dictionary, default_lambda_grid, lasso_select, mp_select, omp_select, peak_select,
    LASSO_Q,
};
use crate::beam::{beam_gain, BeamParams};
use crate::error::{Error, Result};
use crate::geometry::{EcefVector, GeoPosition, VisibilityConfig};
use crate::inference::{estimate_active_set, synthesize_field, CandidateLooks, InferenceConfig};
use crate::io::RegionBounds;
use crate::metrics::{score_trial, TrialReport};
use crate::scenario::{generate_scenario, Scenario, ScenarioConfig};
use crate::select::SelectionScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Lasso,
    Mp,
    Omp,
    Peak,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Proposed,
        Method::Lasso,
        Method::Mp,
        Method::Omp,
        Method::Peak,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Lasso => "lasso",
            Method::Mp => "mp",
            Method::Omp => "omp",
            Method::Peak => "peak",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub inference: InferenceConfig,
    pub visibility: VisibilityConfig,
    pub peak_threshold: f64,
    pub stop_tol: f64,
    pub lambda_points: usize,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            inference: InferenceConfig::default(),
            visibility: VisibilityConfig::default(),
            peak_threshold: 0.3,
            stop_tol: 1e-4,
            lambda_points: 20,
        }
    }
}

/// One estimator's answer on one scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MethodOutput {
    pub selected: Vec<usize>,
    pub params: Vec<BeamParams>,
    pub scores: Vec<SelectionScore>,
    /// Estimated noiseless field at the stations.
    pub field: Vec<f64>,
}

fn field_from(
    selected: &[usize],
    params: &[BeamParams],
    candidates: &[CandidateLooks],
    m: usize,
) -> Vec<f64> {
    let mut field = vec![0.0; m];
    for (idx, p) in selected.iter().zip(params) {
        let c = candidates
            .iter()
            .find(|c| c.index == *idx)
            .expect("selected from screened set");
        for (f, l) in field.iter_mut().zip(&c.looks) {
            *f += p.amplitude * beam_gain(l, p);
        }
    }
    field
}

/// Runs one estimator on the screened candidates of `scenario`.
pub fn run_method(method: Method, scenario: &Scenario, cfg: &MethodConfig) -> Result<MethodOutput> {
    let y = scenario.observations();
    let m = y.len();
    let candidates = scenario.screened_candidates(&cfg.visibility)?;
    if candidates.is_empty() {
        return Ok(MethodOutput {
            field: vec![0.0; m],
            ..Default::default()
        });
    }
    let k_max = cfg.inference.k_max;
    let (selected, params, scores) = match method {
        Method::Proposed => {
            let est = estimate_active_set(&y, &candidates, &cfg.inference)?;
            (est.selected, est.params, est.round_scores)
        }
        Method::Peak => {
            let est = peak_select(
                &y,
                &candidates,
                &cfg.inference.bounds,
                &cfg.inference.loss,
                cfg.peak_threshold,
                k_max,
            )?;
            (est.selected, est.params, Vec::new())
        }
        Method::Lasso | Method::Mp | Method::Omp => {
            let dict =
                build_dictionary(&y, &candidates, &cfg.inference.bounds, &cfg.inference.loss)?;
            let est = match method {
                Method::Omp => omp_select(&y, &dict, k_max, cfg.stop_tol),
                Method::Mp => mp_select(&y, &dict, k_max, cfg.stop_tol),
                _ => lasso_select(
                    &y,
                    &dict,
                    &default_lambda_grid(&y, &dict, cfg.lambda_points),
                    LASSO_Q,
                )?,
            };
            (est.selected, est.params, Vec::new())
        }
    };
    let field = field_from(&selected, &params, &candidates, m);
    Ok(MethodOutput {
        selected,
        params,
        scores,
        field,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "k")]
    K,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::N => "n",
            SweepVariable::K => "k",
        }
    }

    /// Standard study values: SNR in dB, candidate count or active count.
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepVariable::SnrDb => vec![15.0, 20.0, 25.0, 30.0, 35.0],
            SweepVariable::N => vec![4.0, 6.0, 8.0, 10.0, 12.0],
            SweepVariable::K => vec![1.0, 2.0, 3.0, 4.0, 5.0],
        }
    }

    /// `base` with this variable set to `value`.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!(
                    "{} must be a nonnegative integer, got {value}",
                    self.name()
                )))
            }
        };
        let mut cfg = *base;
        match self {
            SweepVariable::SnrDb => cfg.snr_db = value,
            SweepVariable::N => cfg.n = count()?,
            SweepVariable::K => cfg.k = count()?,
        }
        Ok(cfg)
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "snr_db" | "snr" => Ok(SweepVariable::SnrDb),
            "n" => Ok(SweepVariable::N),
            "k" => Ok(SweepVariable::K),
            other => Err(Error::Config(format!("unknown sweep variable `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub fixed: ScenarioConfig,
    #[serde(default)]
    pub method_config: MethodConfig,
    /// Record estimator wall-clock time. Off by default so the CSV is
    /// reproducible byte for byte.
    #[serde(default)]
    pub timing: bool,
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("sweep needs at least one trial".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("sweep needs at least one method".into()));
        }
        self.method_config.inference.validate()?;
        for &v in &self.values {
            let cfg = self.variable.apply(&self.fixed, v)?;
            if cfg.k > cfg.n {
                return Err(Error::Config(format!(
                    "k = {} exceeds n = {} at value {v}",
                    cfg.k, cfg.n
                )));
            }
        }
        Ok(())
    }

    /// Seed of trial `r`, shared by every method and value.
    pub fn seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(1000 * trial as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub variable: SweepVariable,
    pub value: f64,
    pub trial: usize,
    pub seed: u64,
    pub report: TrialReport,
}

pub const CSV_HEADER: [&str; 17] = [
    "method",
    "variable",
    "value",
    "trial",
    "seed",
    "k_true",
    "k_hat",
    "precision",
    "recall",
    "f1",
    "rmse_rss",
    "pearson_corr",
    "az_err_deg",
    "el_err_deg",
    "beta_err_deg",
    "runtime_s",
    "flags",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = record
        .get(i)
        .ok_or_else(|| Error::Config(format!("missing column {}", CSV_HEADER[i])))?;
    raw.parse()
        .map_err(|_| Error::Config(format!("bad value `{raw}` in column {}", CSV_HEADER[i])))
}

impl ResultsTable {
    /// Writes the table. Floats use the shortest representation that parses
    /// back to the same value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            let r = &row.report;
            w.write_record([
                row.method.name().to_string(),
                row.variable.name().to_string(),
                row.value.to_string(),
                row.trial.to_string(),
                row.seed.to_string(),
                r.k_true.to_string(),
                r.k_hat.to_string(),
                r.precision.to_string(),
                r.recall.to_string(),
                r.f1.to_string(),
                r.rmse_rss.to_string(),
                r.pearson_corr.to_string(),
                r.az_err_deg.to_string(),
                r.el_err_deg.to_string(),
                r.beta_err_deg.to_string(),
                r.runtime_s.to_string(),
                r.flags.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(reader);
        let header = rd.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Config("unexpected results header".into()));
        }
        let mut rows = Vec::new();
        for record in rd.records() {
            let rec = record?;
            let flags = rec.get(16).unwrap_or("");
            rows.push(ResultRow {
                method: parse_field::<String>(&rec, 0)?.parse()?,
                variable: parse_field::<String>(&rec, 1)?.parse()?,
                value: parse_field(&rec, 2)?,
                trial: parse_field(&rec, 3)?,
                seed: parse_field(&rec, 4)?,
                report: TrialReport {
                    k_true: parse_field(&rec, 5)?,
                    k_hat: parse_field(&rec, 6)?,
                    precision: parse_field(&rec, 7)?,
                    recall: parse_field(&rec, 8)?,
                    f1: parse_field(&rec, 9)?,
                    rmse_rss: parse_field(&rec, 10)?,
                    pearson_corr: parse_field(&rec, 11)?,
                    az_err_deg: parse_field(&rec, 12)?,
                    el_err_deg: parse_field(&rec, 13)?,
                    beta_err_deg: parse_field(&rec, 14)?,
                    runtime_s: parse_field(&rec, 15)?,
                    flags: if flags.is_empty() {
                        Vec::new()
                    } else {
                        flags.split(';').map(str::to_string).collect()
                    },
                },
            });
        }
        Ok(Self { rows })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Mean and standard deviation of the main scores per (method, value),
    /// ignoring undefined entries.
    pub fn summarize(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(Method, u64), (f64, Vec<&TrialReport>)> = BTreeMap::new();
        for row in &self.rows {
            groups
                .entry((row.method, row.value.to_bits()))
                .or_insert_with(|| (row.value, Vec::new()))
                .1
                .push(&row.report);
        }
        let mut out: Vec<SummaryRow> = groups
            .into_iter()
            .map(|((method, _), (value, reports))| {
                let stat = |f: fn(&TrialReport) -> f64| MeanStd::of(reports.iter().map(|r| f(r)));
                SummaryRow {
                    method,
                    value,
                    trials: reports.len(),
                    f1: stat(|r| r.f1),
                    rmse_rss: stat(|r| r.rmse_rss),
                    pearson_corr: stat(|r| r.pearson_corr),
                    k_hat: stat(|r| r.k_hat as f64),
                }
            })
            .collect();
        out.sort_by(|a, b| a.method.cmp(&b.method).then(a.value.total_cmp(&b.value)));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                count: 0,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
            count: v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub value: f64,
    pub trials: usize,
    pub f1: MeanStd,
    pub rmse_rss: MeanStd,
    pub pearson_corr: MeanStd,
    pub k_hat: MeanStd,
}

/// Order-sensitive hash of a scenario's measurements and truth.
pub fn scenario_hash(s: &Scenario) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    for m in &s.measurements {
        m.position.latitude.to_bits().hash(&mut h);
        m.position.longitude.to_bits().hash(&mut h);
        m.rss_linear.to_bits().hash(&mut h);
    }
    s.truth_active.hash(&mut h);
    for p in &s.sat_positions {
        [p.x, p.y, p.z].map(f64::to_bits).hash(&mut h);
    }
    h.finish()
}

fn failure_flag(e: &Error) -> &'static str {
    match e {
        Error::ZeroField => "zero_field",
        Error::Generation(_) => "generation_failed",
        Error::Geometry(_) => "degenerate_geometry",
        _ => "estimator_failed",
    }
}

/// Runs every method on one scenario and scores it.
pub fn evaluate_trial(
    scenario: &Scenario,
    methods: &[Method],
    cfg: &MethodConfig,
    timing: bool,
) -> Vec<(Method, TrialReport)> {
    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let out = run_method(method, scenario, cfg);
            let runtime = if timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            };
            let report = out.and_then(|o| {
                score_trial(
                    &scenario.truth_active,
                    &scenario.truth_params,
                    &scenario.noiseless_field,
                    &o.selected,
                    &o.params,
                    &o.field,
                    runtime,
                )
            });
            let report = report.unwrap_or_else(|e| {
                let mut r = TrialReport::failed(scenario.truth_active.len(), failure_flag(&e));
                r.runtime_s = runtime;
                r
            });
            (method, report)
        })
        .collect()
}

/// Executes a sweep on `jobs` worker threads. Rows are sorted by (method,
/// value position, trial), so the output does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<ResultsTable> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let tasks: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.trials).map(move |t| (v, t)))
        .collect();

    let mut keyed: Vec<(usize, usize, usize, ResultRow)> = pool.install(|| {
        tasks
            .par_iter()
            .flat_map_iter(|&(vi, trial)| {
                let value = spec.values[vi];
                let seed = spec.seed(trial);
                let cfg = ScenarioConfig {
                    seed,
                    ..spec.variable.apply(&spec.fixed, value).expect("validated")
                };
                let reports = match generate_scenario(&cfg) {
                    Ok(s) => evaluate_trial(&s, &spec.methods, &spec.method_config, spec.timing),
                    Err(e) => spec
                        .methods
                        .iter()
                        .map(|&m| (m, TrialReport::failed(cfg.k, failure_flag(&e))))
                        .collect(),
                };
                reports.into_iter().map(move |(method, report)| {
                    let mi = spec
                        .methods
                        .iter()
                        .position(|&m| m == method)
                        .expect("requested method");
                    (
                        mi,
                        vi,
                        trial,
                        ResultRow {
                            method,
                            variable: spec.variable,
                            value,
                            trial,
                            seed,
                            report,
                        },
                    )
                })
            })
            .collect()
    });
    keyed.sort_by_key(|(mi, vi, t, _)| (*mi, *vi, *t));
    Ok(ResultsTable {
        rows: keyed.into_iter().map(|(_, _, _, r)| r).collect(),
    })
}

/// Uniform latitude / longitude grid over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub region: RegionBounds,
}

impl GridSpec {
    /// Grid points, row-major, latitude increasing with the row index.
    pub fn points(&self) -> Result<Vec<GeoPosition>> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2x2 points, got {}x{}",
                self.rows, self.cols
            )));
        }
        let r = self.region;
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            let lat = r.lat_min + (r.lat_max - r.lat_min) * i as f64 / (self.rows - 1) as f64;
            for j in 0..self.cols {
                let lon = r.lon_min + (r.lon_max - r.lon_min) * j as f64 / (self.cols - 1) as f64;
                out.push(GeoPosition::from_degrees(lat, lon, 0.0));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RasterScale {
    #[default]
    Linear,
    Decibel,
}

/// Evaluates the radio map of the given beams on `grid`.
///
/// `sat_positions` is aligned with `params`.
pub fn heatmap_values(
    params: &[BeamParams],
    sat_positions: &[EcefVector],
    grid: &GridSpec,
) -> Result<Vec<f64>> {
    synthesize_field(params, sat_positions, &grid.points()?)
}

/// Writes the grid as CSV: a `#` header line with the bounds, then one line
/// per grid row.
pub fn write_heatmap_csv<W: Write>(mut w: W, values: &[f64], grid: &GridSpec) -> Result<()> {
    let r = grid.region;
    writeln!(
        w,
        "# rows={} cols={} lat_min={} lat_max={} lon_min={} lon_max={}",
        grid.rows, grid.cols, r.lat_min, r.lat_max, r.lon_min, r.lon_max
    )?;
    for row in values.chunks(grid.cols) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Binary 8-bit PGM with min–max normalization; north is up.
pub fn write_heatmap_pgm<W: Write>(
    mut w: W,
    values: &[f64],
    grid: &GridSpec,
    scale: RasterScale,
) -> Result<()> {
    let peak = values.iter().copied().fold(0.0, f64::max);
    let mapped: Vec<f64> = match scale {
        RasterScale::Linear => values.to_vec(),
        RasterScale::Decibel => {
            let floor = if peak > 0.0 { peak * 1e-6 } else { 1e-30 };
            values.iter().map(|v| 10.0 * v.max(floor).log10()).collect()
        }
    };
    let lo = mapped.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mapped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    write!(w, "P5\n{} {}\n255\n", grid.cols, grid.rows)?;
    let mut bytes = Vec::with_capacity(values.len());
    for row in mapped.chunks(grid.cols).rev() {
        for v in row {
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            bytes.push((t * 255.0).round() as u8);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Evaluates the map and writes `heatmap.csv` (and `heatmap.pgm` when a
/// raster scale is given) into `out_dir`. Returns the grid values.
pub fn emit_heatmap(
    params: &[BeamParams],
    sat_positions: &[EcefVector],
    grid: &GridSpec,
    out_dir: &Path,
    raster: Option<RasterScale>,
) -> Result<Vec<f64>> {
    let values = heatmap_values(params, sat_positions, grid)?;
    let csv = std::io::BufWriter::new(std::fs::File::create(out_dir.join("heatmap.csv"))?);
    write_heatmap_csv(csv, &values, grid)?;
    if let Some(scale) = raster {
        let pgm = std::io::BufWriter::new(std::fs::File::create(out_dir.join("heatmap.pgm"))?);
        write_heatmap_pgm(pgm, &values, grid, scale)?;
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        SweepSpec {
            variable: SweepVariable::SnrDb,
            values: vec![25.0],
            trials: 1,
            base_seed: 11,
            methods: vec![Method::Proposed],
            fixed: ScenarioConfig {
                m: 80,
                n: 4,
                k: 2,
                ..Default::default()
            },
            method_config: MethodConfig::default(),
            timing: false,
        }
    }

    #[test]
    fn one_value_one_trial_one_row() {
        let t = run_sweep(&small_spec(), 1).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].seed, 11);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut spec = small_spec();
        spec.methods = vec![Method::Proposed, Method::Omp];
        spec.trials = 2;
        let t = run_sweep(&spec, 2).unwrap();
        let text = t.to_csv_string().unwrap();
        let back = ResultsTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.rows.len(), t.rows.len());
        for (a, b) in t.rows.iter().zip(&back.rows) {
            let fa = [
                a.report.f1,
                a.report.rmse_rss,
                a.report.pearson_corr,
                a.report.az_err_deg,
                a.value,
            ];
            let fb = [
                b.report.f1,
                b.report.rmse_rss,
                b.report.pearson_corr,
                b.report.az_err_deg,
                b.value,
            ];
            for (x, y) in fa.iter().zip(&fb) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
            assert_eq!(a.report.flags, b.report.flags);
            assert_eq!((a.method, a.trial, a.seed), (b.method, b.trial, b.seed));
        }
        assert_eq!(back.to_csv_string().unwrap(), text);
    }

    #[test]
    fn zero_active_trial_is_flagged_not_fatal() {
        let mut spec = small_spec();
        spec.variable = SweepVariable::K;
        spec.values = vec![0.0, 1.0];
        let t = run_sweep(&spec, 1).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].report.flags, vec!["zero_field".to_string()]);
        assert!(t.rows[0].report.f1.is_nan());
        assert!(t.rows[1].report.flags.iter().all(|f| f != "zero_field"));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = small_spec();
        spec.values.clear();
        assert!(run_sweep(&spec, 1).unwrap_err().is_config());
        let mut spec = small_spec();
        spec.trials = 0;
        assert!(run_sweep(&spec, 1).unwrap_err().is_config());
        let mut spec = small_spec();
        spec.variable = SweepVariable::K;
        spec.values = vec![9.0];
        assert!(run_sweep(&spec, 1).unwrap_err().is_config());
    }

    #[test]
    fn spec_json_defaults() {
        let spec: SweepSpec =
            serde_json::from_str(r#"{"variable": "snr_db", "values": [15, 20], "trials": 3}"#)
                .unwrap();
        assert_eq!(spec.methods.len(), 5);
        assert_eq!(spec.fixed.m, 200);
        assert!(!spec.timing);
        assert_eq!(spec.seed(2), 2000);
    }

    #[test]
    fn two_by_two_grid() {
        let grid = GridSpec {
            rows: 2,
            cols: 2,
            region: RegionBounds {
                lat_min: 30.0,
                lat_max: 31.0,
                lon_min: 100.0,
                lon_max: 101.0,
            },
        };
        let values = heatmap_values(&[], &[], &grid).unwrap();
        assert_eq!(values, vec![0.0; 4]);
        let mut buf = Vec::new();
        write_heatmap_csv(&mut buf, &values, &grid).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data.len(), 2);
        let mut pgm = Vec::new();
        write_heatmap_pgm(&mut pgm, &values, &grid, RasterScale::Decibel).unwrap();
        assert!(pgm.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(pgm.len(), 11 + 4);
        assert!(GridSpec { rows: 1, ..grid }.points().is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("ista".parse::<Method>().is_err());
    }
}
