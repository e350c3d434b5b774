//! Reproducible synthetic multi-satellite scenarios with SNR-calibrated
//! Gaussian noise.

use rand::seq::index::sample;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::beam::{beam_gain, predict_field, BeamParams};
use crate::error::{Error, Result};
use crate::geometry::{
    look_table, screen_candidates, tangent_offset_to_geodetic, EcefVector, GeoPosition, LookAngles,
    VisibilityConfig, EARTH_RADIUS,
};
use crate::inference::CandidateLooks;

const MAX_PLACEMENT_ATTEMPTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Measurement count.
    pub m: usize,
    /// Candidate satellite count.
    pub n: usize,
    /// Active satellite count.
    pub k: usize,
    pub snr_db: f64,
    /// Beamwidth range in radians.
    pub beta_range: [f64; 2],
    /// Side of the square region in meters.
    pub region_size: f64,
    pub sat_altitude: f64,
    pub seed: u64,
    pub center_lat_deg: f64,
    pub center_lon_deg: f64,
    /// Log-uniform amplitude range.
    pub amplitude_range: [f64; 2],
    /// Sub-satellite points are drawn over a square this many times the
    /// region side.
    pub sat_spread: f64,
    /// Stations an active beam must cover above half power.
    pub footprint_min_support: usize,
    pub visibility: VisibilityConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            m: 200,
            n: 8,
            k: 3,
            snr_db: 25.0,
            beta_range: [4f64.to_radians(), 20f64.to_radians()],
            region_size: 500_000.0,
            sat_altitude: 550_000.0,
            seed: 0,
            center_lat_deg: 35.0,
            center_lon_deg: 110.0,
            amplitude_range: [0.5, 2.0],
            sat_spread: 1.5,
            footprint_min_support: 1,
            visibility: VisibilityConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.k > self.n {
            return err(format!("k = {} exceeds n = {}", self.k, self.n));
        }
        if self.m == 0 {
            return err("m must be at least 1".into());
        }
        let [b0, b1] = self.beta_range;
        if !(b0 > 0.0 && b0 <= b1 && b1 < std::f64::consts::PI) {
            return err(format!(
                "beta_range must lie in (0, pi), got {:?}",
                self.beta_range
            ));
        }
        if !self.snr_db.is_finite() {
            return err("snr_db must be finite".into());
        }
        let [a0, a1] = self.amplitude_range;
        if !(a0 > 0.0 && a0 <= a1) {
            return err(format!(
                "invalid amplitude range {:?}",
                self.amplitude_range
            ));
        }
        if !(self.region_size > 0.0 && self.sat_altitude > 0.0 && self.sat_spread > 0.0) {
            return err("region_size, sat_altitude and sat_spread must be positive".into());
        }
        if self.footprint_min_support > self.m {
            return err(format!(
                "footprint_min_support {} exceeds m {}",
                self.footprint_min_support, self.m
            ));
        }
        self.visibility.validate(self.m)
    }

    pub fn center(&self) -> GeoPosition {
        GeoPosition::from_degrees(self.center_lat_deg, self.center_lon_deg, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub position: GeoPosition,
    pub rss_linear: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub measurements: Vec<Measurement>,
    /// Active candidate indices, ascending.
    pub truth_active: Vec<usize>,
    /// Beam parameters aligned with `truth_active`.
    pub truth_params: Vec<BeamParams>,
    pub sat_positions: Vec<EcefVector>,
    pub sigma_w: f64,
    pub noiseless_field: Vec<f64>,
}

impl Scenario {
    pub fn observations(&self) -> Vec<f64> {
        self.measurements.iter().map(|m| m.rss_linear).collect()
    }

    pub fn ground_ecef(&self) -> Vec<EcefVector> {
        self.measurements
            .iter()
            .map(|m| m.position.to_ecef())
            .collect()
    }

    /// Look angles indexed `[candidate][measurement]`.
    pub fn look_table(&self) -> Result<Vec<Vec<LookAngles>>> {
        look_table(&self.sat_positions, &self.ground_ecef())
    }

    /// Visibility-screened candidates with their look angles.
    pub fn screened_candidates(
        &self,
        visibility: &VisibilityConfig,
    ) -> Result<Vec<CandidateLooks>> {
        let table = self.look_table()?;
        let keep = screen_candidates(&table, visibility);
        let mut table: Vec<Option<Vec<LookAngles>>> = table.into_iter().map(Some).collect();
        Ok(keep
            .into_iter()
            .map(|index| CandidateLooks {
                index,
                looks: table[index].take().expect("screened once"),
            })
            .collect())
    }
}

/// Noise standard deviation that realizes `snr_db` for the given field.
pub fn calibrate_noise(noiseless: &[f64], snr_db: f64) -> Result<f64> {
    let power: f64 = noiseless.iter().map(|x| x * x).sum();
    if !(power > 0.0) {
        return Err(Error::ZeroField);
    }
    let m = noiseless.len() as f64;
    Ok((power / (m * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// SNR in dB of a field against a noise level.
pub fn snr_db(noiseless: &[f64], sigma_w: f64) -> f64 {
    let power: f64 = noiseless.iter().map(|x| x * x).sum();
    10.0 * (power / (noiseless.len() as f64 * sigma_w * sigma_w)).log10()
}

fn uniform_square(rng: &mut ChaCha8Rng, side: f64) -> (f64, f64) {
    let h = 0.5 * side;
    (rng.random_range(-h..h), rng.random_range(-h..h))
}

/// Draws one scenario. Deterministic for a fixed config (including seed).
///
/// Stations are uniform over the region square; sub-satellite points are
/// uniform over a square `sat_spread` times larger. Each active satellite
/// points its beam near the look direction of a random station it can see,
/// redrawn until the beam covers `footprint_min_support` stations above
/// half power.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let center = cfg.center();

    let stations: Vec<GeoPosition> = (0..cfg.m)
        .map(|_| {
            let (e, n) = uniform_square(&mut rng, cfg.region_size);
            tangent_offset_to_geodetic(&center, e, n, 0.0, EARTH_RADIUS)
        })
        .collect();
    let ground: Vec<EcefVector> = stations.iter().map(|p| p.to_ecef()).collect();

    let sat_positions: Vec<EcefVector> = (0..cfg.n)
        .map(|_| {
            let (e, n) = uniform_square(&mut rng, cfg.sat_spread * cfg.region_size);
            tangent_offset_to_geodetic(&center, e, n, cfg.sat_altitude, EARTH_RADIUS).to_ecef()
        })
        .collect();

    let mut truth_active = sample(&mut rng, cfg.n, cfg.k).into_vec();
    truth_active.sort_unstable();

    let mut truth_params = Vec::with_capacity(cfg.k);
    let mut active_looks = Vec::with_capacity(cfg.k);
    for &s in &truth_active {
        let looks: Vec<LookAngles> = look_table(&sat_positions[s..=s], &ground)?
            .pop()
            .expect("one row");
        let visible: Vec<usize> = (0..cfg.m)
            .filter(|&i| looks[i].elevation_offnadir <= cfg.visibility.psi_max)
            .collect();
        let pool: Vec<usize> = if visible.is_empty() {
            (0..cfg.m).collect()
        } else {
            visible
        };

        let beta = rng.random_range(cfg.beta_range[0]..=cfg.beta_range[1]);
        let [a0, a1] = cfg.amplitude_range;
        let amplitude = rng.random_range(a0.ln()..=a1.ln()).exp();
        let jitter = 0.25 * beta;
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let anchor = looks[pool[rng.random_range(0..pool.len())]];
            let el0 = (anchor.elevation_offnadir + rng.random_range(-jitter..=jitter)).abs();
            let az0 = (anchor.azimuth + rng.random_range(-jitter..=jitter))
                .rem_euclid(std::f64::consts::TAU);
            let p = BeamParams::new(az0, el0, beta, amplitude);
            let support = looks.iter().filter(|l| beam_gain(l, &p) >= 0.5).count();
            if support >= cfg.footprint_min_support {
                placed = Some(p);
                break;
            }
        }
        let p = placed.ok_or_else(|| {
            Error::Generation(format!(
                "satellite {s}: no beam placement covers {} stations after {MAX_PLACEMENT_ATTEMPTS} attempts",
                cfg.footprint_min_support
            ))
        })?;
        truth_params.push(p);
        active_looks.push(looks);
    }

    let look_refs: Vec<&[LookAngles]> = active_looks.iter().map(|l| l.as_slice()).collect();
    let noiseless_field = predict_field(&truth_params, &look_refs, cfg.m);
    let sigma_w = calibrate_noise(&noiseless_field, cfg.snr_db)?;
    let noise = Normal::new(0.0, sigma_w).map_err(|e| Error::Generation(e.to_string()))?;
    let measurements = stations
        .into_iter()
        .zip(&noiseless_field)
        .map(|(position, &x)| Measurement {
            position,
            rss_linear: x + noise.sample(&mut rng),
        })
        .collect();

    Ok(Scenario {
        config: *cfg,
        measurements,
        truth_active,
        truth_params,
        sat_positions,
        sigma_w,
        noiseless_field,
    })
}
