//! Single-satellite beam fitting: closed-form amplitude elimination, a
//! Huber (or Student-t) robust objective and bounded local search seeded at
//! the measurement with peak power.

use serde::{Deserialize, Serialize};

use crate::beam::{kernel, wrap_angle_diff, BeamParams};
use crate::error::{Error, Result};
use crate::geometry::LookAngles;
use crate::optim::{minimize_box, QuasiNewtonOptions};

/// Free continuous parameters per satellite once amplitude is eliminated.
pub const FREE_PARAMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub a_min: f64,
    pub a_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub el_max: f64,
    pub delta_az: f64,
    pub delta_el: f64,
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            a_min: 0.0,
            a_max: 1e6,
            beta_min: 4f64.to_radians(),
            beta_max: 20f64.to_radians(),
            el_max: 60f64.to_radians(),
            delta_az: 20f64.to_radians(),
            delta_el: 10f64.to_radians(),
        }
    }
}

impl FitBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = self.a_min >= 0.0
            && self.a_min < self.a_max
            && self.beta_min > 0.0
            && self.beta_min < self.beta_max
            && self.delta_az > 0.0
            && self.delta_el > 0.0
            && self.el_max > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid fit bounds {self:?}")))
        }
    }

    /// Same bounds with the local search half-widths replaced.
    pub fn with_search_window(self, delta_az: f64, delta_el: f64) -> Self {
        Self {
            delta_az,
            delta_el,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum LossKind {
    #[default]
    Huber,
    /// Student-t negative log-likelihood surrogate with `nu` degrees of
    /// freedom; `delta` acts as the scale.
    StudentT { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustLossConfig {
    pub delta: f64,
    pub lambda_beta: f64,
    pub epsilon: f64,
    pub kind: LossKind,
}

impl RobustLossConfig {
    /// Scale-adaptive defaults: `delta = 0.05 max(p)`, `lambda_beta =
    /// 1e3 median(p²)`, `epsilon = 1e-12`.
    pub fn adaptive(residual: &[f64], kind: LossKind) -> Self {
        let epsilon = 1e-12;
        let peak = residual.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let delta = (0.05 * peak).max(epsilon);
        let mut sq: Vec<f64> = residual.iter().map(|r| r * r).collect();
        let lambda_beta = 1e3 * median(&mut sq);
        Self {
            delta,
            lambda_beta,
            epsilon,
            kind,
        }
    }
}

/// How [`fit_single`] picks its loss configuration for a given residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossPolicy {
    Adaptive(LossKind),
    Fixed(RobustLossConfig),
}

impl Default for LossPolicy {
    fn default() -> Self {
        LossPolicy::Adaptive(LossKind::Huber)
    }
}

impl LossPolicy {
    pub fn resolve(&self, residual: &[f64]) -> RobustLossConfig {
        match self {
            LossPolicy::Adaptive(kind) => RobustLossConfig::adaptive(residual, *kind),
            LossPolicy::Fixed(cfg) => *cfg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleFitResult {
    pub params: BeamParams,
    pub rss_value: f64,
    pub loss_value: f64,
    pub converged: bool,
}

pub(crate) fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Weighted least-squares amplitude with weights `sqrt(max(p, eps))`,
/// projected onto `[a_min, a_max]`.
pub fn closed_form_amplitude(residual: &[f64], gains: &[f64], bounds: &FitBounds, eps: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&p, &g) in residual.iter().zip(gains) {
        let w = p.max(eps).sqrt();
        num += w * p * g;
        den += w * g * g;
    }
    (num / (den + eps)).clamp(bounds.a_min, bounds.a_max)
}

pub fn huber(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * (a - 0.5 * delta)
    }
}

fn student_t(r: f64, scale: f64, nu: f64) -> f64 {
    let s2 = nu * scale * scale;
    0.5 * s2 * (r * r / s2).ln_1p()
}

/// Quadratic penalty for `beta` outside `[beta_min, beta_max]`.
pub fn beta_penalty(beta: f64, bounds: &FitBounds) -> f64 {
    let below = (bounds.beta_min - beta).max(0.0);
    let above = (beta - bounds.beta_max).max(0.0);
    below * below + above * above
}

pub fn robust_objective(
    residuals: &[f64],
    beta: f64,
    cfg: &RobustLossConfig,
    bounds: &FitBounds,
) -> f64 {
    let data: f64 = match cfg.kind {
        LossKind::Huber => residuals.iter().map(|&r| huber(r, cfg.delta)).sum(),
        LossKind::StudentT { nu } => residuals.iter().map(|&r| student_t(r, cfg.delta, nu)).sum(),
    };
    data + cfg.lambda_beta * beta_penalty(beta, bounds)
}

/// Peak-power initialization. Ties resolve to the lowest index.
pub fn init_from_peak(residual: &[f64], looks: &[LookAngles], bounds: &FitBounds) -> BeamParams {
    let (m_star, peak) = argmax(residual);
    let look = looks[m_star];
    BeamParams {
        az0: look.azimuth,
        el0: look.elevation_offnadir,
        beta: 0.5 * (bounds.beta_min + bounds.beta_max),
        amplitude: peak.clamp(bounds.a_min, bounds.a_max),
    }
}

pub(crate) fn argmax(v: &[f64]) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

/// Gains of `(az0, el0, beta)` over `looks`, written into `out`.
pub(crate) fn fill_gains(out: &mut [f64], looks: &[LookAngles], az0: f64, el0: f64, beta: f64) {
    for (g, l) in out.iter_mut().zip(looks) {
        *g = kernel(
            wrap_angle_diff(l.azimuth, az0),
            l.elevation_offnadir - el0,
            beta,
        );
    }
}

/// Objective of a candidate `(az0, el0, beta)` with amplitude eliminated.
struct Profile<'a> {
    residual: &'a [f64],
    looks: &'a [LookAngles],
    bounds: &'a FitBounds,
    cfg: &'a RobustLossConfig,
}

impl Profile<'_> {
    fn evaluate(&self, phi: &[f64]) -> (f64, f64) {
        let mut gains = vec![0.0; self.residual.len()];
        fill_gains(&mut gains, self.looks, phi[0], phi[1], phi[2]);
        let amp = closed_form_amplitude(self.residual, &gains, self.bounds, self.cfg.epsilon);
        let mut data = 0.0;
        for (&p, &g) in self.residual.iter().zip(&gains) {
            let r = p - amp * g;
            data += match self.cfg.kind {
                LossKind::Huber => huber(r, self.cfg.delta),
                LossKind::StudentT { nu } => student_t(r, self.cfg.delta, nu),
            };
        }
        (
            data + self.cfg.lambda_beta * beta_penalty(phi[2], self.bounds),
            amp,
        )
    }
}

/// Search box for `(az0, el0, beta)` around a peak look.
pub(crate) fn search_box(init: &BeamParams, bounds: &FitBounds) -> ([f64; 3], [f64; 3]) {
    let el_hi = (init.el0 + bounds.delta_el).min(bounds.el_max);
    let el_lo = (init.el0 - bounds.delta_el).max(0.0).min(el_hi);
    (
        [init.az0 - bounds.delta_az, el_lo, bounds.beta_min],
        [init.az0 + bounds.delta_az, el_hi, bounds.beta_max],
    )
}

const AZ_STARTS: usize = 8;
const EL_STARTS: usize = 5;
const BETA_STARTS: usize = 4;
const LOCAL_RUNS: usize = 4;

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Robust bounded fit of one satellite's beam to `residual`.
///
/// The amplitude is re-derived in closed form at every candidate point. The
/// local solver runs from the peak initialization and from the best points
/// of a coarse grid over the search box; the best local minimum wins.
pub fn fit_single(
    residual: &[f64],
    looks: &[LookAngles],
    bounds: &FitBounds,
    cfg: &RobustLossConfig,
) -> Result<SingleFitResult> {
    if residual.len() < FREE_PARAMS + 1 {
        return Err(Error::InsufficientSamples {
            got: residual.len(),
            need: FREE_PARAMS + 1,
        });
    }
    debug_assert_eq!(residual.len(), looks.len());

    let init = init_from_peak(residual, looks, bounds);
    let (lo, hi) = search_box(&init, bounds);
    let mut init_phi = [init.az0, init.el0.clamp(lo[1], hi[1]), init.beta];
    // pin el to the box when the peak lies beyond el_max
    if lo[1] == hi[1] {
        init_phi[1] = lo[1];
    }
    let profile = Profile {
        residual,
        looks,
        bounds,
        cfg,
    };
    let objective = |phi: &[f64]| profile.evaluate(phi).0;

    let mut grid: Vec<([f64; 3], f64)> = Vec::with_capacity(AZ_STARTS * EL_STARTS * BETA_STARTS);
    for az in linspace(lo[0], hi[0], AZ_STARTS) {
        for el in linspace(lo[1], hi[1], EL_STARTS) {
            for beta in linspace(lo[2], hi[2], BETA_STARTS) {
                let phi = [az, el, beta];
                grid.push((phi, objective(&phi)));
            }
        }
    }
    grid.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut starts = vec![init_phi];
    starts.extend(grid.iter().take(LOCAL_RUNS).map(|(phi, _)| *phi));

    let opts = QuasiNewtonOptions::default();
    let mut best: Option<crate::optim::Minimum> = None;
    for start in &starts {
        let m = minimize_box(objective, start, &lo, &hi, &opts);
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");

    let (loss_value, amplitude) = profile.evaluate(&best.x);
    let params = BeamParams {
        az0: best.x[0].rem_euclid(std::f64::consts::TAU),
        el0: best.x[1],
        beta: best.x[2],
        amplitude,
    };
    let mut gains = vec![0.0; residual.len()];
    fill_gains(&mut gains, looks, params.az0, params.el0, params.beta);
    let rss_value = residual
        .iter()
        .zip(&gains)
        .map(|(p, g)| (p - amplitude * g).powi(2))
        .sum();
    Ok(SingleFitResult {
        params,
        rss_value,
        loss_value,
        converged: best.converged,
    })
}
