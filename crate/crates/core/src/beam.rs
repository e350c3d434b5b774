//! Separable squared-sinc beam kernel and the superposed RSS forward model.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::LookAngles;

/// Scale constant such that `sinc²(HALF_POWER_SCALE / 2)` is one half.
pub const HALF_POWER_SCALE: f64 = 0.886 * PI;

/// One satellite's beam parameters. Angles in radians, amplitude in linear
/// power units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Beam-center azimuth in the body frame.
    pub az0: f64,
    /// Beam-center off-nadir angle.
    pub el0: f64,
    /// 3 dB beamwidth.
    pub beta: f64,
    pub amplitude: f64,
}

impl BeamParams {
    pub fn new(az0: f64, el0: f64, beta: f64, amplitude: f64) -> Self {
        Self {
            az0,
            el0,
            beta,
            amplitude,
        }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }
}

/// How slant range enters the per-satellite contribution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum RangeScaling {
    /// Free-space loss folded into the amplitude.
    #[default]
    Absorbed,
    /// Explicit `(reference / range)²` factor.
    InverseSquare { reference: f64 },
}

/// Principal value of `a - b` in `(-π, π]`.
pub fn wrap_angle_diff(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Unnormalized sinc, `sin(x)/x` with `sinc(0) = 1`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Gain for given angular deviations from the beam center.
#[inline]
pub fn kernel(delta_az: f64, delta_el: f64, beta: f64) -> f64 {
    let a = HALF_POWER_SCALE / beta;
    let sa = sinc(a * delta_az);
    let se = sinc(a * delta_el);
    (sa * sa) * (se * se)
}

pub fn beam_gain(look: &LookAngles, p: &BeamParams) -> f64 {
    kernel(
        wrap_angle_diff(look.azimuth, p.az0),
        look.elevation_offnadir - p.el0,
        p.beta,
    )
}

/// Unit-amplitude gain vector of `p` over `looks`.
pub fn gain_vector(p: &BeamParams, looks: &[LookAngles]) -> Vec<f64> {
    looks.iter().map(|l| beam_gain(l, p)).collect()
}

pub fn signature(p: &BeamParams, looks: &[LookAngles]) -> Vec<f64> {
    looks
        .iter()
        .map(|l| p.amplitude * beam_gain(l, p))
        .collect()
}

pub fn signature_scaled(p: &BeamParams, looks: &[LookAngles], scaling: RangeScaling) -> Vec<f64> {
    match scaling {
        RangeScaling::Absorbed => signature(p, looks),
        RangeScaling::InverseSquare { reference } => looks
            .iter()
            .map(|l| {
                let f = reference / l.range;
                p.amplitude * f * f * beam_gain(l, p)
            })
            .collect(),
    }
}

/// Sum of per-satellite signatures. `looks[i]` are the look angles of the
/// satellite carrying `active[i]`; every entry must have length `m`.
pub fn predict_field(active: &[BeamParams], looks: &[&[LookAngles]], m: usize) -> Vec<f64> {
    debug_assert_eq!(active.len(), looks.len());
    let mut field = vec![0.0; m];
    for (p, l) in active.iter().zip(looks) {
        debug_assert_eq!(l.len(), m);
        for (f, look) in field.iter_mut().zip(l.iter()) {
            *f += p.amplitude * beam_gain(look, p);
        }
    }
    field
}
