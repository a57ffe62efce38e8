//! Geodesy helpers: UTM projection on WGS-84, planar bearings, and surface
//! distances.

use std::f64::consts::PI;

use thiserror::Error;

pub const WGS84_A: f64 = 6_378_137.0;
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// Mean earth radius (IUGG), km.
pub const EARTH_RADIUS_KM: f64 = 6_371.008_8;

const UTM_K0: f64 = 0.9996;
const UTM_FALSE_EASTING: f64 = 500_000.0;
const UTM_FALSE_NORTHING_SOUTH: f64 = 10_000_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0}° is outside the UTM domain (|lat| < 84°)")]
    OutsideUtm(f64),
    #[error("invalid UTM zone {0}")]
    BadZone(u8),
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("coincident points have no bearing")]
    Coincident,
    #[error("zone mismatch: {0} vs {1}")]
    ZoneMismatch(u8, u8),
    #[error("zero wind vector has no direction")]
    Calm,
}

/// A UTM coordinate. Southern-hemisphere points carry the usual
/// 10 000 km false northing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub easting: f64,
    pub northing: f64,
    pub zone: u8,
    pub north: bool,
}

/// Standard 6° zone for a longitude (no Norway/Svalbard exceptions).
pub fn utm_zone(longitude: f64) -> u8 {
    let lon = (longitude + 180.0).rem_euclid(360.0);
    ((lon / 6.0).floor() as u8).min(59) + 1
}

pub fn central_meridian(zone: u8) -> f64 {
    f64::from(zone) * 6.0 - 183.0
}

/// Projects a geographic coordinate to UTM. With `forced_zone` the point is
/// projected relative to that zone's central meridian even when it lies
/// outside the zone.
pub fn to_utm(latitude: f64, longitude: f64, forced_zone: Option<u8>) -> Result<PlanarPoint, GeoError> {
    if !latitude.is_finite() || !longitude.is_finite() {
        return Err(GeoError::NonFinite(latitude, longitude));
    }
    if latitude.abs() >= 84.0 {
        return Err(GeoError::OutsideUtm(latitude));
    }
    let zone = match forced_zone {
        Some(z) if (1..=60).contains(&z) => z,
        Some(z) => return Err(GeoError::BadZone(z)),
        None => utm_zone(longitude),
    };

    let mut dlon = (longitude - central_meridian(zone)).to_radians();
    // Keep the longitude offset in (-π, π].
    if dlon > PI {
        dlon -= 2.0 * PI;
    } else if dlon <= -PI {
        dlon += 2.0 * PI;
    }
    let phi = latitude.to_radians();

    // Krüger series to sixth order in the third flattening.
    let n = WGS84_F / (2.0 - WGS84_F);
    let n2 = n * n;
    let n3 = n2 * n;
    let n4 = n3 * n;
    let n5 = n4 * n;
    let n6 = n5 * n;
    let rect = WGS84_A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    let alpha = [
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0
            + 7891.0 * n6 / 37800.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0
            - 1_983_433.0 * n6 / 1_935_360.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 + 167_603.0 * n6 / 181_440.0,
        49561.0 * n4 / 161_280.0 - 179.0 * n5 / 168.0 + 6_601_661.0 * n6 / 7_257_600.0,
        34729.0 * n5 / 80640.0 - 3_418_889.0 * n6 / 1_995_840.0,
        212_378_941.0 * n6 / 319_334_400.0,
    ];

    let e = (WGS84_F * (2.0 - WGS84_F)).sqrt();
    let sin_phi = phi.sin();
    let t = (sin_phi.atanh() - e * (e * sin_phi).atanh()).sinh();
    let xi_p = t.atan2(dlon.cos());
    let eta_p = (dlon.sin() / (1.0 + t * t).sqrt()).atanh();

    let mut xi = xi_p;
    let mut eta = eta_p;
    for (j, a) in alpha.iter().enumerate() {
        let k = 2.0 * (j as f64 + 1.0);
        xi += a * (k * xi_p).sin() * (k * eta_p).cosh();
        eta += a * (k * xi_p).cos() * (k * eta_p).sinh();
    }

    let north = latitude >= 0.0;
    let false_northing = if north { 0.0 } else { UTM_FALSE_NORTHING_SOUTH };
    Ok(PlanarPoint {
        easting: UTM_FALSE_EASTING + UTM_K0 * rect * eta,
        northing: false_northing + UTM_K0 * rect * xi,
        zone,
        north,
    })
}

/// Bearing of the segment `from → to` in the projected plane, measured
/// counter-clockwise from east, in (-π, π].
pub fn conductor_angle(from: &PlanarPoint, to: &PlanarPoint) -> Result<f64, GeoError> {
    if from.zone != to.zone {
        return Err(GeoError::ZoneMismatch(from.zone, to.zone));
    }
    // Both hemispheres share one plane only if the false northing agrees.
    let shift = match (from.north, to.north) {
        (true, false) => -UTM_FALSE_NORTHING_SOUTH,
        (false, true) => UTM_FALSE_NORTHING_SOUTH,
        _ => 0.0,
    };
    let dx = to.easting - from.easting;
    let dy = to.northing + shift - from.northing;
    if dx == 0.0 && dy == 0.0 {
        return Err(GeoError::Coincident);
    }
    Ok(half_open_angle(dy.atan2(dx)))
}

/// Direction the wind blows towards (counter-clockwise from east) and its
/// speed, from eastward/northward components.
pub fn wind_angle(v_x: f64, v_y: f64) -> Result<(f64, f64), GeoError> {
    if v_x == 0.0 && v_y == 0.0 {
        return Err(GeoError::Calm);
    }
    Ok((half_open_angle(v_y.atan2(v_x)), v_x.hypot(v_y)))
}

fn half_open_angle(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Spherical great-circle distance (haversine), km.
pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = p2 - p1;
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Ellipsoidal (WGS-84) geodesic distance by Vincenty's inverse method, km.
/// Falls back to the spherical distance for the rare nearly-antipodal pairs
/// where the iteration does not converge.
pub fn geodesic_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let a = WGS84_A;
    let f = WGS84_F;
    let b = a * (1.0 - f);
    let l = (lon2 - lon1).to_radians();
    let u1 = ((1.0 - f) * lat1.to_radians().tan()).atan();
    let u2 = ((1.0 - f) * lat2.to_radians().tan()).atan();
    let (sin_u1, cos_u1) = u1.sin_cos();
    let (sin_u2, cos_u2) = u2.sin_cos();

    let mut lambda = l;
    for _ in 0..200 {
        let (sin_l, cos_l) = lambda.sin_cos();
        let sin_sigma = ((cos_u2 * sin_l).powi(2)
            + (cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_l).powi(2))
        .sqrt();
        if sin_sigma == 0.0 {
            return 0.0;
        }
        let cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_l;
        let sigma = sin_sigma.atan2(cos_sigma);
        let sin_alpha = cos_u1 * cos_u2 * sin_l / sin_sigma;
        let cos2_alpha = 1.0 - sin_alpha * sin_alpha;
        let cos_2sm = if cos2_alpha == 0.0 {
            0.0
        } else {
            cos_sigma - 2.0 * sin_u1 * sin_u2 / cos2_alpha
        };
        let c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
        let prev = lambda;
        lambda = l
            + (1.0 - c)
                * f
                * sin_alpha
                * (sigma + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)));
        if (lambda - prev).abs() < 1e-12 {
            let u_sq = cos2_alpha * (a * a - b * b) / (b * b);
            let big_a = 1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
            let big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
            let delta_sigma = big_b
                * sin_sigma
                * (cos_2sm
                    + big_b / 4.0
                        * (cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
                            - big_b / 6.0
                                * cos_2sm
                                * (-3.0 + 4.0 * sin_sigma * sin_sigma)
                                * (-3.0 + 4.0 * cos_2sm * cos_2sm)));
            return b * big_a * (sigma - delta_sigma) / 1000.0;
        }
    }
    great_circle_km(lat1, lon1, lat2, lon2)
}
