//! JSON documents for scenarios and estimates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beam::BeamParams;
use crate::error::{Error, Result};
use crate::geometry::{EcefVector, GeoPosition, EARTH_RADIUS};
use crate::scenario::{Measurement, Scenario, ScenarioConfig};
use crate::select::SelectionScore;

/// Beam parameters with angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParamsDeg {
    pub az0_deg: f64,
    pub el0_deg: f64,
    pub beta_deg: f64,
    pub amplitude: f64,
}

impl From<&BeamParams> for BeamParamsDeg {
    fn from(p: &BeamParams) -> Self {
        Self {
            az0_deg: p.az0.to_degrees(),
            el0_deg: p.el0.to_degrees(),
            beta_deg: p.beta.to_degrees(),
            amplitude: p.amplitude,
        }
    }
}

impl From<&BeamParamsDeg> for BeamParams {
    fn from(p: &BeamParamsDeg) -> Self {
        BeamParams::new(
            p.az0_deg.to_radians(),
            p.el0_deg.to_radians(),
            p.beta_deg.to_radians(),
            p.amplitude,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthBlock {
    pub active: Vec<usize>,
    pub params: Vec<BeamParamsDeg>,
    pub sigma_w: f64,
    pub noiseless_field: Vec<f64>,
}

/// Serialized scenario: stations as `[lat_deg, lon_deg, rss]`, satellites
/// as `[lat_deg, lon_deg, alt_m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub config: ScenarioConfig,
    pub stations: Vec<[f64; 3]>,
    pub satellites: Vec<[f64; 3]>,
    pub truth: TruthBlock,
}

fn geo_deg(p: &GeoPosition) -> [f64; 3] {
    [
        p.latitude.to_degrees(),
        p.longitude.to_degrees(),
        p.altitude,
    ]
}

impl From<&Scenario> for ScenarioDocument {
    fn from(s: &Scenario) -> Self {
        Self {
            config: s.config,
            stations: s
                .measurements
                .iter()
                .map(|m| {
                    let [lat, lon, _] = geo_deg(&m.position);
                    [lat, lon, m.rss_linear]
                })
                .collect(),
            satellites: s
                .sat_positions
                .iter()
                .map(|e| geo_deg(&e.to_geodetic(EARTH_RADIUS)))
                .collect(),
            truth: TruthBlock {
                active: s.truth_active.clone(),
                params: s.truth_params.iter().map(BeamParamsDeg::from).collect(),
                sigma_w: s.sigma_w,
                noiseless_field: s.noiseless_field.clone(),
            },
        }
    }
}

impl ScenarioDocument {
    pub fn into_scenario(self) -> Result<Scenario> {
        if self.truth.active.len() != self.truth.params.len() {
            return Err(Error::Config(
                "truth.active and truth.params differ in length".into(),
            ));
        }
        if self.truth.noiseless_field.len() != self.stations.len() {
            return Err(Error::Config(
                "truth.noiseless_field must have one entry per station".into(),
            ));
        }
        if let Some(&bad) = self
            .truth
            .active
            .iter()
            .find(|&&i| i >= self.satellites.len())
        {
            return Err(Error::Config(format!(
                "active index {bad} has no satellite"
            )));
        }
        Ok(Scenario {
            config: self.config,
            measurements: self
                .stations
                .iter()
                .map(|&[lat, lon, rss]| Measurement {
                    position: GeoPosition::from_degrees(lat, lon, 0.0),
                    rss_linear: rss,
                })
                .collect(),
            truth_active: self.truth.active,
            truth_params: self.truth.params.iter().map(BeamParams::from).collect(),
            sat_positions: self
                .satellites
                .iter()
                .map(|&[lat, lon, alt]| GeoPosition::from_degrees(lat, lon, alt).to_ecef())
                .collect(),
            sigma_w: self.truth.sigma_w,
            noiseless_field: self.truth.noiseless_field,
        })
    }
}

/// Latitude / longitude box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBounds {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl RegionBounds {
    /// Smallest box containing every station.
    pub fn of_stations(measurements: &[Measurement]) -> Self {
        let mut b = RegionBounds {
            lat_min: f64::INFINITY,
            lat_max: f64::NEG_INFINITY,
            lon_min: f64::INFINITY,
            lon_max: f64::NEG_INFINITY,
        };
        for m in measurements {
            let (lat, lon) = (
                m.position.latitude.to_degrees(),
                m.position.longitude.to_degrees(),
            );
            b.lat_min = b.lat_min.min(lat);
            b.lat_max = b.lat_max.max(lat);
            b.lon_min = b.lon_min.min(lon);
            b.lon_max = b.lon_max.max(lon);
        }
        b
    }
}

/// Serialized estimate, self-contained enough to render a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateDocument {
    pub method: String,
    pub selected: Vec<usize>,
    pub params: Vec<BeamParamsDeg>,
    pub k_hat: usize,
    pub scores: Vec<SelectionScore>,
    /// `[lat_deg, lon_deg, alt_m]` of each selected satellite.
    pub satellites: Vec<[f64; 3]>,
    pub region: RegionBounds,
}

impl EstimateDocument {
    pub fn new(
        method: &str,
        selected: &[usize],
        params: &[BeamParams],
        scores: Vec<SelectionScore>,
        scenario: &Scenario,
    ) -> Self {
        Self {
            method: method.to_string(),
            selected: selected.to_vec(),
            params: params.iter().map(BeamParamsDeg::from).collect(),
            k_hat: selected.len(),
            scores,
            satellites: selected
                .iter()
                .map(|&i| geo_deg(&scenario.sat_positions[i].to_geodetic(EARTH_RADIUS)))
                .collect(),
            region: RegionBounds::of_stations(&scenario.measurements),
        }
    }

    pub fn beam_params(&self) -> Vec<BeamParams> {
        self.params.iter().map(BeamParams::from).collect()
    }

    /// Satellite positions in ECEF, aligned with `selected`.
    pub fn satellite_ecef(&self) -> Vec<EcefVector> {
        self.satellites
            .iter()
            .map(|&[lat, lon, alt]| GeoPosition::from_degrees(lat, lon, alt).to_ecef())
            .collect()
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    read_json::<ScenarioDocument>(path)?.into_scenario()
}
