//! Spherical-Earth geometry: ECEF conversion, satellite body-frame look
//! angles and visibility screening of candidate satellites.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS: f64 = 6_371_000.0;

/// Threshold on |<nadir, polar axis>| above which the north axis is replaced
/// by the projection of ECEF +x.
const POLAR_TOLERANCE: f64 = 1e-9;

/// Geodetic position on a spherical Earth. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPosition {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude: f64,
}

impl GeoPosition {
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Self {
        Self {
            latitude,
            longitude,
            altitude,
        }
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, altitude: f64) -> Self {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), altitude)
    }

    pub fn to_ecef(&self) -> EcefVector {
        ecef_from_geodetic(self, EARTH_RADIUS)
    }
}

/// Earth-centered Earth-fixed position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// Inverse of [`ecef_from_geodetic`] for a sphere of radius `earth_radius`.
    pub fn to_geodetic(&self, earth_radius: f64) -> GeoPosition {
        let r = self.norm();
        let latitude = (self.z / r).clamp(-1.0, 1.0).asin();
        let mut longitude = self.y.atan2(self.x);
        if longitude >= PI {
            longitude -= TAU;
        }
        GeoPosition::new(latitude, longitude, r - earth_radius)
    }
}

/// Satellite body-frame look angles of a ground point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LookAngles {
    /// Azimuth around the nadir axis, measured from the north axis toward
    /// the body y axis, in `[0, 2π)`.
    pub azimuth: f64,
    /// Off-nadir angle in `[0, π]`; zero at the sub-satellite point.
    pub elevation_offnadir: f64,
    /// Slant range in meters.
    pub range: f64,
}

/// Off-nadir visibility screening thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityConfig {
    pub psi_max: f64,
    pub m_min: usize,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        Self {
            psi_max: 30f64.to_radians(),
            m_min: 10,
        }
    }
}

impl VisibilityConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.psi_max > 0.0 && self.psi_max <= FRAC_PI_2) {
            return Err(Error::Config(format!(
                "psi_max must lie in (0, pi/2], got {}",
                self.psi_max
            )));
        }
        if self.m_min == 0 || self.m_min > m {
            return Err(Error::Config(format!(
                "m_min must lie in [1, {m}], got {}",
                self.m_min
            )));
        }
        Ok(())
    }
}

pub fn ecef_from_geodetic(pos: &GeoPosition, earth_radius: f64) -> EcefVector {
    let r = earth_radius + pos.altitude;
    let (slat, clat) = pos.latitude.sin_cos();
    let (slon, clon) = pos.longitude.sin_cos();
    EcefVector::new(r * clat * clon, r * clat * slon, r * slat)
}

/// Orthonormal body frame `(x, y, z)` of a satellite: `z` points at the
/// Earth center, `x` is the north direction projected orthogonal to `z`,
/// and `y = z × x`.
pub fn body_frame(sat: &EcefVector) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let z = -sat.as_vector().normalize();
    let polar = Vector3::z();
    let reference = if z.dot(&polar).abs() > 1.0 - POLAR_TOLERANCE {
        Vector3::x()
    } else {
        polar
    };
    let x = (reference - z * z.dot(&reference)).normalize();
    let y = z.cross(&x);
    (x, y, z)
}

pub fn look_angles(sat: &EcefVector, ground: &EcefVector) -> Result<LookAngles> {
    let sat_v = sat.as_vector();
    let los = ground.as_vector() - sat_v;
    let range = los.norm();
    if !(range > 0.0) || sat_v.norm() == 0.0 {
        return Err(Error::Geometry(
            "satellite and ground point coincide".into(),
        ));
    }
    let u = los / range;
    let (x, y, z) = body_frame(sat);
    let azimuth = u.dot(&y).atan2(u.dot(&x)).rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    let azimuth = if azimuth >= TAU { 0.0 } else { azimuth };
    let elevation_offnadir = u.dot(&z).clamp(-1.0, 1.0).acos();
    Ok(LookAngles {
        azimuth,
        elevation_offnadir,
        range,
    })
}

/// Look angles for every `(satellite, ground)` pair, indexed `[s][m]`.
pub fn look_table(sats: &[EcefVector], grounds: &[EcefVector]) -> Result<Vec<Vec<LookAngles>>> {
    sats.iter()
        .map(|s| grounds.iter().map(|g| look_angles(s, g)).collect())
        .collect()
}

/// Indices of candidates visible (off-nadir ≤ `psi_max`) from at least
/// `m_min` ground points. `looks` is indexed `[s][m]`; order is preserved.
pub fn screen_candidates(looks: &[Vec<LookAngles>], cfg: &VisibilityConfig) -> Vec<usize> {
    looks
        .iter()
        .enumerate()
        .filter(|(_, per_ground)| {
            per_ground
                .iter()
                .filter(|l| l.elevation_offnadir <= cfg.psi_max)
                .count()
                >= cfg.m_min
        })
        .map(|(s, _)| s)
        .collect()
}

/// East/north unit vectors of the local tangent plane at `center`.
pub fn local_tangent_axes(center: &GeoPosition) -> (Vector3<f64>, Vector3<f64>) {
    let (slat, clat) = center.latitude.sin_cos();
    let (slon, clon) = center.longitude.sin_cos();
    let east = Vector3::new(-slon, clon, 0.0);
    let north = Vector3::new(-slat * clon, -slat * slon, clat);
    (east, north)
}

/// Maps a local tangent-plane offset (meters east, meters north) around
/// `center` radially onto the sphere at the given altitude.
pub fn tangent_offset_to_geodetic(
    center: &GeoPosition,
    east_m: f64,
    north_m: f64,
    altitude: f64,
    earth_radius: f64,
) -> GeoPosition {
    let (east, north) = local_tangent_axes(center);
    let c = ecef_from_geodetic(
        &GeoPosition::new(center.latitude, center.longitude, 0.0),
        earth_radius,
    );
    let p = c.as_vector() + east * east_m + north * north_m;
    let on_sphere = p.normalize() * (earth_radius + altitude);
    EcefVector::from_vector(&on_sphere).to_geodetic(earth_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ground(lat_deg: f64, lon_deg: f64) -> EcefVector {
        GeoPosition::from_degrees(lat_deg, lon_deg, 0.0).to_ecef()
    }

    fn sat(lat_deg: f64, lon_deg: f64) -> EcefVector {
        GeoPosition::from_degrees(lat_deg, lon_deg, 550_000.0).to_ecef()
    }

    #[test]
    fn ecef_axis_and_pole() {
        let e = ecef_from_geodetic(&GeoPosition::new(0.0, 0.0, 0.0), EARTH_RADIUS);
        assert_relative_eq!(e.x, 6_371_000.0);
        assert_eq!(e.y, 0.0);
        assert_eq!(e.z, 0.0);

        let p = ecef_from_geodetic(&GeoPosition::new(FRAC_PI_2, 0.0, 0.0), EARTH_RADIUS);
        assert!(p.x.abs() < 1e-6);
        assert_eq!(p.y, 0.0);
        assert_relative_eq!(p.z, 6_371_000.0);
    }

    #[test]
    fn ecef_matches_hand_spherical_evaluation() {
        let pos = GeoPosition::new(PI / 4.0, PI / 4.0, 550_000.0);
        let e = ecef_from_geodetic(&pos, EARTH_RADIUS);
        // r cos(lat) cos(lon) with cos(pi/4)^2 = 1/2
        let r = 6_921_000.0;
        assert_relative_eq!(e.x, r * 0.5, max_relative = 1e-12);
        assert_relative_eq!(e.y, r * 0.5, max_relative = 1e-12);
        assert_relative_eq!(
            e.z,
            r * std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-12
        );
        assert_relative_eq!(e.norm(), r, max_relative = 1e-12);
    }

    #[test]
    fn nadir_point_has_zero_offnadir() {
        let l = look_angles(&sat(0.0, 0.0), &ground(0.0, 0.0)).unwrap();
        assert!(l.elevation_offnadir.abs() < 1e-12);
        assert_relative_eq!(l.range, 550_000.0, max_relative = 1e-12);
    }

    #[test]
    fn due_north_has_zero_azimuth() {
        let l = look_angles(&sat(10.0, 20.0), &ground(10.01, 20.0)).unwrap();
        let az = if l.azimuth > PI {
            l.azimuth - TAU
        } else {
            l.azimuth
        };
        assert!(az.abs() < 1e-6, "azimuth {az}");
        let east = look_angles(&sat(10.0, 20.0), &ground(10.0, 20.01)).unwrap();
        assert_relative_eq!(east.azimuth, FRAC_PI_2, epsilon = 1e-3);
    }

    #[test]
    fn equatorial_offset_matches_dot_product_oracle() {
        // sat at (0,0,550 km), ground at (5 N, 0). Frame by hand: z = -x_ecef,
        // north = +z_ecef, y = z × x = +y_ecef.
        let s = Vector3::new(6_921_000.0, 0.0, 0.0);
        let lat = 5f64.to_radians();
        let g = Vector3::new(EARTH_RADIUS * lat.cos(), 0.0, EARTH_RADIUS * lat.sin());
        let d = g - s;
        let u = d / d.norm();
        let expected_el = (-u.x).acos();
        let expected_az = u.y.atan2(u.z).rem_euclid(TAU);
        let l = look_angles(&EcefVector::from_vector(&s), &EcefVector::from_vector(&g)).unwrap();
        assert_relative_eq!(l.elevation_offnadir, expected_el, epsilon = 1e-12);
        assert_relative_eq!(l.azimuth, expected_az, epsilon = 1e-12);
        assert_relative_eq!(l.range, d.norm(), max_relative = 1e-12);
    }

    #[test]
    fn polar_satellite_uses_fallback_axis() {
        let s = GeoPosition::new(FRAC_PI_2, 0.0, 550_000.0).to_ecef();
        let l = look_angles(&s, &ground(89.0, 0.0)).unwrap();
        assert!(l.azimuth.is_finite() && l.elevation_offnadir.is_finite());
        let (x, y, z) = body_frame(&s);
        assert!(x.dot(&z).abs() < 1e-12 && y.dot(&z).abs() < 1e-12 && x.dot(&y).abs() < 1e-12);
    }

    #[test]
    fn coincident_points_error() {
        let p = ground(0.0, 0.0);
        assert!(look_angles(&p, &p).is_err());
    }

    fn uniform_looks(offnadir_deg: f64, n: usize, m: usize) -> Vec<Vec<LookAngles>> {
        vec![
            vec![
                LookAngles {
                    azimuth: 0.0,
                    elevation_offnadir: offnadir_deg.to_radians(),
                    range: 1.0
                };
                m
            ];
            n
        ]
    }

    #[test]
    fn screening_examples() {
        let cfg = VisibilityConfig {
            psi_max: 30f64.to_radians(),
            m_min: 1,
        };
        assert_eq!(
            screen_candidates(&uniform_looks(10.0, 3, 4), &cfg),
            vec![0, 1, 2]
        );
        assert!(screen_candidates(&uniform_looks(40.0, 3, 4), &cfg).is_empty());

        // candidate 1 visible at exactly m_min = 2 points
        let mut looks = uniform_looks(40.0, 2, 4);
        looks[1][0].elevation_offnadir = 5f64.to_radians();
        looks[1][3].elevation_offnadir = 30f64.to_radians();
        let cfg = VisibilityConfig {
            psi_max: 30f64.to_radians(),
            m_min: 2,
        };
        assert_eq!(screen_candidates(&looks, &cfg), vec![1]);
    }

    #[test]
    fn visibility_config_validation() {
        assert!(VisibilityConfig {
            psi_max: 0.0,
            m_min: 1
        }
        .validate(10)
        .is_err());
        assert!(VisibilityConfig {
            psi_max: 0.5,
            m_min: 11
        }
        .validate(10)
        .is_err());
        assert!(VisibilityConfig::default().validate(200).is_ok());
    }

    proptest! {
        #[test]
        fn sub_satellite_point_is_nadir(lat in -80.0f64..80.0, lon in -179.0f64..179.0, alt in 300e3f64..2000e3) {
            let s = GeoPosition::from_degrees(lat, lon, alt).to_ecef();
            let g = GeoPosition::from_degrees(lat, lon, 0.0).to_ecef();
            let l = look_angles(&s, &g).unwrap();
            prop_assert!(l.elevation_offnadir < 1e-6);
            prop_assert!((l.range - alt).abs() < 1e-6 * alt);
        }

        #[test]
        fn rotation_about_polar_axis_is_invariant(
            lat in -60.0f64..60.0, dlat in -4.0f64..4.0, dlon in -4.0f64..4.0, rot in -180.0f64..180.0,
        ) {
            let a = look_angles(&sat(lat, 10.0), &ground(lat + dlat, 10.0 + dlon)).unwrap();
            let b = look_angles(&sat(lat, 10.0 + rot), &ground(lat + dlat, 10.0 + dlon + rot)).unwrap();
            prop_assert!((a.elevation_offnadir - b.elevation_offnadir).abs() < 1e-9);
            prop_assert!((a.range - b.range).abs() < 1e-6);
            let daz = (a.azimuth - b.azimuth).sin().atan2((a.azimuth - b.azimuth).cos());
            prop_assert!(daz.abs() < 1e-7);
        }

        #[test]
        fn offnadir_grows_along_great_circle(lat in -50.0f64..50.0, bearing in 0.0f64..360.0) {
            // walk away from the sub-satellite point along a great circle
            let s = sat(lat, 0.0);
            let center = GeoPosition::from_degrees(lat, 0.0, 0.0);
            let (east, north) = local_tangent_axes(&center);
            let c = center.to_ecef().as_vector() / EARTH_RADIUS;
            let b = bearing.to_radians();
            let dir = east * b.sin() + north * b.cos();
            let mut prev = -1.0;
            for step in 1..30 {
                let ang = step as f64 * 0.004;
                let p = (c * ang.cos() + dir * ang.sin()) * EARTH_RADIUS;
                let l = look_angles(&s, &EcefVector::from_vector(&p)).unwrap();
                prop_assert!(l.elevation_offnadir > prev);
                prev = l.elevation_offnadir;
            }
        }

        #[test]
        fn screening_is_subset_and_idempotent(
            offs in proptest::collection::vec(proptest::collection::vec(0.0f64..1.2, 6), 1..6),
            m_min in 1usize..6,
        ) {
            let looks: Vec<Vec<LookAngles>> = offs.iter()
                .map(|row| row.iter().map(|&e| LookAngles { azimuth: 0.0, elevation_offnadir: e, range: 1.0 }).collect())
                .collect();
            let cfg = VisibilityConfig { psi_max: 0.5, m_min };
            let kept = screen_candidates(&looks, &cfg);
            prop_assert!(kept.iter().all(|&s| s < looks.len()));
            let sub: Vec<_> = kept.iter().map(|&s| looks[s].clone()).collect();
            let again = screen_candidates(&sub, &cfg);
            prop_assert_eq!(again, (0..sub.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn tangent_offsets_round_trip_center() {
        let c = GeoPosition::from_degrees(30.0, 10.0, 0.0);
        let p = tangent_offset_to_geodetic(&c, 0.0, 0.0, 0.0, EARTH_RADIUS);
        assert_relative_eq!(p.latitude, c.latitude, epsilon = 1e-12);
        assert_relative_eq!(p.longitude, c.longitude, epsilon = 1e-12);
        let n = tangent_offset_to_geodetic(&c, 0.0, 10_000.0, 0.0, EARTH_RADIUS);
        assert!(n.latitude > c.latitude);
        assert!(n.altitude.abs() < 1e-6);
    }
}
