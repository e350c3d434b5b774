//! C ABI over the `beamrm` estimator.
//!
//! Every fallible call returns a [`BeamrmStatus`]. On failure the message is
//! kept in thread-local storage and can be read with [`beamrm_last_error`].
//! Handles returned through out-pointers are owned by the caller and must be
//! released with the matching `_free` function. Angles are in degrees.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use beamrm::beam::{beam_gain, BeamParams};
use beamrm::error::Error;
use beamrm::geometry::{GeoPosition, LookAngles};
use beamrm::harness::{run_method, Method, MethodConfig};
use beamrm::inference::synthesize_field;
use beamrm::io::{BeamParamsDeg, EstimateDocument, ScenarioDocument};
use beamrm::scenario::{generate_scenario, Scenario, ScenarioConfig};
use beamrm::select::Criterion;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamrmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    Parse = 3,
    Generation = 4,
    Numeric = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamrmMethod {
    Proposed = 0,
    Lasso = 1,
    Mp = 2,
    Omp = 3,
    Peak = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamrmCriterion {
    Bic = 0,
    Aic = 1,
    Glrt = 2,
}

/// Scenario settings. Obtain defaults from [`beamrm_scenario_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamrmScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub snr_db: f64,
    pub beta_min_deg: f64,
    pub beta_max_deg: f64,
    pub region_size_m: f64,
    pub sat_altitude_m: f64,
    pub seed: u64,
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    pub psi_max_deg: f64,
    pub m_min: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamrmEstimateOptions {
    pub method: BeamrmMethod,
    pub criterion: BeamrmCriterion,
    pub alpha: f64,
    pub q: usize,
    pub k_max: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BeamrmBeamParams {
    pub az0_deg: f64,
    pub el0_deg: f64,
    pub beta_deg: f64,
    pub amplitude: f64,
}

/// Opaque scenario handle.
pub struct BeamrmScenario(Scenario);

/// Opaque estimate handle.
pub struct BeamrmEstimate(EstimateDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(BeamrmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => BeamrmStatus::InvalidConfig,
            Error::Json(_) => BeamrmStatus::Parse,
            Error::Generation(_) | Error::ZeroField => BeamrmStatus::Generation,
            Error::Io(_) | Error::Csv(_) => BeamrmStatus::Io,
            _ => BeamrmStatus::Numeric,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BeamrmStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("interior nul removed"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BeamrmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            BeamrmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            BeamrmStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(BeamrmStatus::Parse, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s)
        .expect("JSON has no interior nul")
        .into_raw()
}

fn method_of(m: BeamrmMethod) -> Method {
    match m {
        BeamrmMethod::Proposed => Method::Proposed,
        BeamrmMethod::Lasso => Method::Lasso,
        BeamrmMethod::Mp => Method::Mp,
        BeamrmMethod::Omp => Method::Omp,
        BeamrmMethod::Peak => Method::Peak,
    }
}

fn criterion_of(c: BeamrmCriterion) -> Criterion {
    match c {
        BeamrmCriterion::Bic => Criterion::Bic,
        BeamrmCriterion::Aic => Criterion::Aic,
        BeamrmCriterion::Glrt => Criterion::Glrt,
    }
}

impl From<&ScenarioConfig> for BeamrmScenarioConfig {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            m: c.m,
            n: c.n,
            k: c.k,
            snr_db: c.snr_db,
            beta_min_deg: c.beta_range[0].to_degrees(),
            beta_max_deg: c.beta_range[1].to_degrees(),
            region_size_m: c.region_size,
            sat_altitude_m: c.sat_altitude,
            seed: c.seed,
            center_lat_deg: c.center_lat_deg,
            center_lon_deg: c.center_lon_deg,
            psi_max_deg: c.visibility.psi_max.to_degrees(),
            m_min: c.visibility.m_min,
        }
    }
}

impl BeamrmScenarioConfig {
    fn to_core(self) -> ScenarioConfig {
        let mut c = ScenarioConfig {
            m: self.m,
            n: self.n,
            k: self.k,
            snr_db: self.snr_db,
            beta_range: [
                self.beta_min_deg.to_radians(),
                self.beta_max_deg.to_radians(),
            ],
            region_size: self.region_size_m,
            sat_altitude: self.sat_altitude_m,
            seed: self.seed,
            center_lat_deg: self.center_lat_deg,
            center_lon_deg: self.center_lon_deg,
            ..ScenarioConfig::default()
        };
        c.visibility.psi_max = self.psi_max_deg.to_radians();
        c.visibility.m_min = self.m_min;
        c
    }
}

impl From<&BeamParamsDeg> for BeamrmBeamParams {
    fn from(p: &BeamParamsDeg) -> Self {
        Self {
            az0_deg: p.az0_deg,
            el0_deg: p.el0_deg,
            beta_deg: p.beta_deg,
            amplitude: p.amplitude,
        }
    }
}

/// Message of the last failed call on this thread, or null if the last call
/// succeeded. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn beamrm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn beamrm_scenario_config_default() -> BeamrmScenarioConfig {
    BeamrmScenarioConfig::from(&ScenarioConfig::default())
}

#[no_mangle]
pub extern "C" fn beamrm_estimate_options_default() -> BeamrmEstimateOptions {
    let d = MethodConfig::default().inference;
    BeamrmEstimateOptions {
        method: BeamrmMethod::Proposed,
        criterion: BeamrmCriterion::Glrt,
        alpha: d.selection.alpha,
        q: d.selection.q,
        k_max: d.k_max,
    }
}

/// # Safety
/// `config` must point to a valid config and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn beamrm_scenario_generate(
    config: *const BeamrmScenarioConfig,
    out: *mut *mut BeamrmScenario,
) -> BeamrmStatus {
    guard(|| {
        let cfg = as_ref(config, "config")?.to_core();
        if out.is_null() {
            return Err(null("out"));
        }
        let s = generate_scenario(&cfg)?;
        *out = Box::into_raw(Box::new(BeamrmScenario(s)));
        Ok(())
    })
}

/// Parses a scenario document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn beamrm_scenario_from_json(
    json: *const c_char,
    out: *mut *mut BeamrmScenario,
) -> BeamrmStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let doc: ScenarioDocument = serde_json::from_str(text).map_err(Error::from)?;
        *out = Box::into_raw(Box::new(BeamrmScenario(doc.into_scenario()?)));
        Ok(())
    })
}

/// Serializes a scenario. Free the string with [`beamrm_string_free`].
///
/// # Safety
/// `scenario` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn beamrm_scenario_to_json(
    scenario: *const BeamrmScenario,
    out: *mut *mut c_char,
) -> BeamrmStatus {
    guard(|| {
        let s = as_ref(scenario, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&ScenarioDocument::from(&s.0)).map_err(Error::from)?;
        *out = into_c_string(text);
        Ok(())
    })
}

/// Number of measurements, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beamrm_scenario_measurement_count(
    scenario: *const BeamrmScenario,
) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.measurements.len())
}

/// Copies station latitude, longitude and linear RSS into arrays of length
/// `len`, which must be at least the measurement count.
///
/// # Safety
/// The arrays must hold `len` writable doubles each.
#[no_mangle]
pub unsafe extern "C" fn beamrm_scenario_measurements(
    scenario: *const BeamrmScenario,
    lat_deg: *mut f64,
    lon_deg: *mut f64,
    rss: *mut f64,
    len: usize,
) -> BeamrmStatus {
    guard(|| {
        let s = as_ref(scenario, "scenario")?;
        if lat_deg.is_null() || lon_deg.is_null() || rss.is_null() {
            return Err(null("output array"));
        }
        let m = s.0.measurements.len();
        if len < m {
            return Err(Failure(
                BeamrmStatus::BufferTooSmall,
                format!("need {m} entries, got {len}"),
            ));
        }
        for (i, meas) in s.0.measurements.iter().enumerate() {
            *lat_deg.add(i) = meas.position.latitude.to_degrees();
            *lon_deg.add(i) = meas.position.longitude.to_degrees();
            *rss.add(i) = meas.rss_linear;
        }
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beamrm_scenario_free(scenario: *mut BeamrmScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs an estimator on a scenario. A null `options` uses
/// [`beamrm_estimate_options_default`].
///
/// # Safety
/// `scenario` must be a live handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate(
    scenario: *const BeamrmScenario,
    options: *const BeamrmEstimateOptions,
    out: *mut *mut BeamrmEstimate,
) -> BeamrmStatus {
    guard(|| {
        let s = &as_ref(scenario, "scenario")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| beamrm_estimate_options_default());
        let mut cfg = MethodConfig {
            visibility: s.config.visibility,
            ..MethodConfig::default()
        };
        cfg.inference.selection.criterion = criterion_of(opts.criterion);
        cfg.inference.selection.alpha = opts.alpha;
        cfg.inference.selection.q = opts.q;
        cfg.inference.k_max = opts.k_max;
        cfg.inference.validate()?;
        let method = method_of(opts.method);
        let est = run_method(method, s, &cfg)?;
        let doc = EstimateDocument::new(method.name(), &est.selected, &est.params, est.scores, s);
        *out = Box::into_raw(Box::new(BeamrmEstimate(doc)));
        Ok(())
    })
}

/// Parses an estimate document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate_from_json(
    json: *const c_char,
    out: *mut *mut BeamrmEstimate,
) -> BeamrmStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let doc: EstimateDocument = serde_json::from_str(text).map_err(Error::from)?;
        if doc.params.len() != doc.selected.len() || doc.satellites.len() != doc.selected.len() {
            return Err(Failure(
                BeamrmStatus::InvalidConfig,
                "selected, params and satellites differ in length".into(),
            ));
        }
        *out = Box::into_raw(Box::new(BeamrmEstimate(doc)));
        Ok(())
    })
}

/// Estimated model order, or 0 for a null handle.
///
/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate_k_hat(estimate: *const BeamrmEstimate) -> usize {
    estimate.as_ref().map_or(0, |e| e.0.k_hat)
}

/// Copies the selected candidate indices into `out` (capacity `cap`).
///
/// # Safety
/// `out` must hold `cap` writable entries.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate_selected(
    estimate: *const BeamrmEstimate,
    out: *mut usize,
    cap: usize,
) -> BeamrmStatus {
    guard(|| {
        let e = &as_ref(estimate, "estimate")?.0;
        let k = e.selected.len();
        if cap < k {
            return Err(Failure(
                BeamrmStatus::BufferTooSmall,
                format!("need {k} entries, got {cap}"),
            ));
        }
        if k > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (i, &idx) in e.selected.iter().enumerate() {
            *out.add(i) = idx;
        }
        Ok(())
    })
}

/// Copies the beam parameters, aligned with the selected indices.
///
/// # Safety
/// `out` must hold `cap` writable entries.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate_params(
    estimate: *const BeamrmEstimate,
    out: *mut BeamrmBeamParams,
    cap: usize,
) -> BeamrmStatus {
    guard(|| {
        let e = &as_ref(estimate, "estimate")?.0;
        let k = e.params.len();
        if cap < k {
            return Err(Failure(
                BeamrmStatus::BufferTooSmall,
                format!("need {k} entries, got {cap}"),
            ));
        }
        if k > 0 && out.is_null() {
            return Err(null("out"));
        }
        for (i, p) in e.params.iter().enumerate() {
            *out.add(i) = BeamrmBeamParams::from(p);
        }
        Ok(())
    })
}

/// Evaluates the estimated radio map at `n` ground points.
///
/// # Safety
/// `lat_deg`, `lon_deg` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate_synthesize(
    estimate: *const BeamrmEstimate,
    lat_deg: *const f64,
    lon_deg: *const f64,
    n: usize,
    out: *mut f64,
) -> BeamrmStatus {
    guard(|| {
        let e = &as_ref(estimate, "estimate")?.0;
        if n == 0 {
            return Ok(());
        }
        if lat_deg.is_null() || lon_deg.is_null() || out.is_null() {
            return Err(null("point or output array"));
        }
        let lat = std::slice::from_raw_parts(lat_deg, n);
        let lon = std::slice::from_raw_parts(lon_deg, n);
        let points: Vec<GeoPosition> = lat
            .iter()
            .zip(lon)
            .map(|(&a, &b)| GeoPosition::from_degrees(a, b, 0.0))
            .collect();
        let values = synthesize_field(&e.beam_params(), &e.satellite_ecef(), &points)?;
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&values);
        Ok(())
    })
}

/// Serializes an estimate. Free the string with [`beamrm_string_free`].
///
/// # Safety
/// `estimate` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate_to_json(
    estimate: *const BeamrmEstimate,
    out: *mut *mut c_char,
) -> BeamrmStatus {
    guard(|| {
        let e = as_ref(estimate, "estimate")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = into_c_string(serde_json::to_string(&e.0).map_err(Error::from)?);
        Ok(())
    })
}

/// # Safety
/// `estimate` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beamrm_estimate_free(estimate: *mut BeamrmEstimate) {
    if !estimate.is_null() {
        drop(Box::from_raw(estimate));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn beamrm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normalized gain (peak 1, amplitude ignored) of a beam toward a body-frame
/// look direction.
///
/// # Safety
/// `params` must point to valid parameters.
#[no_mangle]
pub unsafe extern "C" fn beamrm_beam_gain(
    look_az_deg: f64,
    look_el_deg: f64,
    params: *const BeamrmBeamParams,
    out: *mut f64,
) -> BeamrmStatus {
    guard(|| {
        let p = as_ref(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(p.beta_deg > 0.0) {
            return Err(Failure(
                BeamrmStatus::InvalidConfig,
                format!("beta must be positive, got {}", p.beta_deg),
            ));
        }
        let look = LookAngles {
            azimuth: look_az_deg.to_radians(),
            elevation_offnadir: look_el_deg.to_radians(),
            range: 0.0,
        };
        let bp = BeamParams::new(
            p.az0_deg.to_radians(),
            p.el0_deg.to_radians(),
            p.beta_deg.to_radians(),
            1.0,
        );
        *out = beam_gain(&look, &bp);
        Ok(())
    })
}

/// Quantile of the F(d1, d2) distribution at `prob`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn beamrm_f_quantile(
    d1: usize,
    d2: usize,
    prob: f64,
    out: *mut f64,
) -> BeamrmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if d1 == 0 || d2 == 0 || !(prob > 0.0 && prob < 1.0) {
            return Err(Failure(
                BeamrmStatus::InvalidConfig,
                format!(
                    "need positive degrees of freedom and prob in (0, 1), got ({d1}, {d2}, {prob})"
                ),
            ));
        }
        *out = beamrm::select::f_quantile(d1, d2, prob);
        Ok(())
    })
}
