//! Weather-dependent line ratings.
//!
//! The rating multiplier factors into a temperature term and a wind term,
//! each a ratio against the assumptions behind the static rating:
//!
//! ```text
//! η_T = √((T_C − T_A) / (T_C − T_A^SLR))
//! η_v = √(K(φ) / K(φ^SLR)) · (v / v_SLR)^0.26 · max{1, 0.566·(ρ/μ·D·v)^0.04}
//! AAR = η_T,   DLR = η_T · max{1, η_v}
//! ```
//!
//! `K` is the IEEE-738 angle factor. Only overhead lines shorter than the
//! eligibility length get a multiplier; transformers and long lines stay at
//! their static rating, as does any branch in an hour without weather.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{self, GeoError};
use crate::network::{format_hour, Branch, BranchKind, Network};
use crate::weather::{WeatherError, WeatherGrid, WeatherSample};

pub const KELVIN_OFFSET: f64 = 273.15;

#[derive(Debug, Error)]
pub enum RatingError {
    #[error("invalid rating parameters: {0}")]
    Params(String),
    #[error("ambient {ambient_k:.2} K is not below conductor limit {conductor_k:.2} K; rating would collapse")]
    RatingCollapse { ambient_k: f64, conductor_k: f64 },
    #[error("negative wind speed {0}")]
    NegativeSpeed(f64),
    #[error("branch {branch}: nonpositive ampacity {ampacity} A")]
    Ampacity { branch: u32, ampacity: f64 },
    #[error("branch {branch}: {source}")]
    Geometry {
        branch: u32,
        #[source]
        source: GeoError,
    },
    #[error("branch {branch} at {hour}: {source}")]
    Context {
        branch: u32,
        hour: String,
        #[source]
        source: Box<RatingError>,
    },
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error("config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Slr,
    Aar,
    Dlr,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Slr => "slr",
            Regime::Aar => "aar",
            Regime::Dlr => "dlr",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slr" => Ok(Regime::Slr),
            "aar" => Ok(Regime::Aar),
            "dlr" => Ok(Regime::Dlr),
            other => Err(format!("unknown rating regime '{other}'")),
        }
    }
}

/// Rating assumptions. Defaults other than the conductor temperature,
/// contingency ratio and eligibility length are common industry values and
/// should be set per study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatingParams {
    /// Maximum conductor temperature, °C.
    pub t_conductor_c: f64,
    /// Ambient temperature behind the static rating, °C.
    pub t_ambient_slr_c: f64,
    /// Wind speed behind the static rating, m/s.
    pub v_slr_ms: f64,
    /// Wind attack angle behind the static rating, degrees.
    pub phi_slr_deg: f64,
    /// kg/m³
    pub air_density: f64,
    /// kg/(m·s)
    pub air_viscosity: f64,
    pub contingency_ratio: f64,
    /// Lines at or above this length keep their static rating.
    pub eligibility_length_km: f64,
    /// Wind below this speed counts as calm.
    pub calm_threshold_ms: f64,
    /// Diameter fit `D = slope·I + intercept`, m/A.
    pub diameter_slope_m_per_a: f64,
    /// m
    pub diameter_intercept_m: f64,
}

impl Default for RatingParams {
    fn default() -> Self {
        Self {
            t_conductor_c: 100.0,
            t_ambient_slr_c: 40.0,
            v_slr_ms: 0.61,
            phi_slr_deg: 0.0,
            air_density: 1.029,
            air_viscosity: 2.043e-5,
            contingency_ratio: 1.146,
            eligibility_length_km: 100.0,
            calm_threshold_ms: 0.01,
            diameter_slope_m_per_a: 2.0e-5,
            diameter_intercept_m: 0.006,
        }
    }
}

impl RatingParams {
    pub fn validate(&self) -> Result<(), RatingError> {
        let bad = |m: &str| Err(RatingError::Params(m.to_string()));
        let all = [
            self.t_conductor_c,
            self.t_ambient_slr_c,
            self.v_slr_ms,
            self.phi_slr_deg,
            self.air_density,
            self.air_viscosity,
            self.contingency_ratio,
            self.eligibility_length_km,
            self.calm_threshold_ms,
            self.diameter_slope_m_per_a,
            self.diameter_intercept_m,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.t_conductor_c <= self.t_ambient_slr_c {
            return bad("t_conductor_c must exceed t_ambient_slr_c");
        }
        if self.v_slr_ms <= 0.0 {
            return bad("v_slr_ms must be positive");
        }
        if self.contingency_ratio < 1.0 {
            return bad("contingency_ratio must be at least 1");
        }
        if self.air_density <= 0.0 || self.air_viscosity <= 0.0 {
            return bad("air properties must be positive");
        }
        if self.calm_threshold_ms < 0.0 || self.eligibility_length_km < 0.0 {
            return bad("thresholds must be nonnegative");
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RatingError> {
        let p: RatingParams = toml::from_str(text).map_err(|e| RatingError::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn t_conductor_k(&self) -> f64 {
        self.t_conductor_c + KELVIN_OFFSET
    }

    pub fn t_ambient_slr_k(&self) -> f64 {
        self.t_ambient_slr_c + KELVIN_OFFSET
    }

    pub fn phi_slr(&self) -> f64 {
        self.phi_slr_deg.to_radians()
    }

    /// Angle factor under the static-rating assumptions.
    pub fn k_angle_slr(&self) -> f64 {
        k_angle(fold_attack_angle(self.phi_slr()))
    }
}

/// IEEE-738 wind direction factor.
pub fn k_angle(phi: f64) -> f64 {
    1.194 - phi.cos() + 0.194 * (2.0 * phi).cos() + 0.368 * (2.0 * phi).sin()
}

/// Reduces any angle between wind and conductor to the acute attack angle in
/// [0, π/2]. Wind along the line in either direction cools the same.
pub fn fold_attack_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(PI);
    r.min(PI - r).clamp(0.0, FRAC_PI_2)
}

/// Temperature factor. Falls below 1 when ambient exceeds the static
/// assumption; no floor is applied.
pub fn eta_temperature(t_ambient_k: f64, params: &RatingParams) -> Result<f64, RatingError> {
    let tc = params.t_conductor_k();
    if !(t_ambient_k < tc) {
        return Err(RatingError::RatingCollapse { ambient_k: t_ambient_k, conductor_k: tc });
    }
    Ok(((tc - t_ambient_k) / (tc - params.t_ambient_slr_k())).sqrt())
}

/// The `max{1, 0.566·Re^0.04}` forced-convection correction.
pub fn reynolds_factor(speed: f64, diameter_m: f64, params: &RatingParams) -> f64 {
    let re = params.air_density / params.air_viscosity * diameter_m * speed;
    (0.566 * re.powf(0.04)).max(1.0)
}

/// Wind factor for wind of `speed` at raw angle `phi` to the conductor.
/// Calm air returns 1, the value the formula gives under static assumptions.
pub fn eta_wind(speed: f64, phi: f64, diameter_m: f64, params: &RatingParams) -> Result<f64, RatingError> {
    if speed < 0.0 || speed.is_nan() {
        return Err(RatingError::NegativeSpeed(speed));
    }
    if speed < params.calm_threshold_ms {
        return Ok(1.0);
    }
    let angle = (k_angle(fold_attack_angle(phi)) / params.k_angle_slr()).sqrt();
    let speed_ratio = (speed / params.v_slr_ms).powf(0.26);
    Ok(angle * speed_ratio * reynolds_factor(speed, diameter_m, params))
}

/// Per-branch inputs to the multiplier that do not change hour to hour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRatingInfo {
    pub eligible: bool,
    /// Planar bearing of the conductor; `None` for coincident endpoints.
    pub bearing: Option<f64>,
    pub diameter_m: f64,
}

pub fn is_eligible(branch: &Branch, params: &RatingParams) -> bool {
    branch.kind == BranchKind::Line && branch.length_km < params.eligibility_length_km
}

/// Conductor diameter: the explicit value if given, else the linear fit on
/// ampacity derived from the MVA rating at the from-bus voltage.
pub fn estimate_diameter(branch: &Branch, network: &Network, params: &RatingParams) -> Result<f64, RatingError> {
    if let Some(d) = branch.diameter_m {
        return Ok(d);
    }
    let kv = network.buses[network.endpoints(branch).0].base_kv;
    let amps = ampacity_from_mva(branch.rating_mva, kv);
    if !(amps > 0.0) {
        return Err(RatingError::Ampacity { branch: branch.id.0, ampacity: amps });
    }
    Ok(params.diameter_slope_m_per_a * amps + params.diameter_intercept_m)
}

/// Three-phase current (A) for apparent power in MVA at line-to-line kV.
pub fn ampacity_from_mva(mva: f64, kv_ll: f64) -> f64 {
    mva * 1e3 / (3f64.sqrt() * kv_ll)
}

pub fn mva_from_ampacity(amps: f64, kv_ll: f64) -> f64 {
    3f64.sqrt() * kv_ll * amps / 1e3
}

/// Bearing of a branch with both ends projected into the from-bus zone.
pub fn branch_bearing(branch: &Branch, network: &Network) -> Result<Option<f64>, RatingError> {
    let (a, b) = network.endpoints(branch);
    let (a, b) = (&network.buses[a], &network.buses[b]);
    let geo_err = |source| RatingError::Geometry { branch: branch.id.0, source };
    let from = geo::to_utm(a.latitude, a.longitude, None).map_err(geo_err)?;
    let to = geo::to_utm(b.latitude, b.longitude, Some(from.zone)).map_err(geo_err)?;
    match geo::conductor_angle(&from, &to) {
        Ok(angle) => Ok(Some(angle)),
        Err(GeoError::Coincident) => Ok(None),
        Err(e) => Err(geo_err(e)),
    }
}

pub fn branch_info(network: &Network, params: &RatingParams) -> Result<Vec<BranchRatingInfo>, RatingError> {
    network
        .branches
        .iter()
        .map(|br| {
            let eligible = is_eligible(br, params);
            if !eligible {
                return Ok(BranchRatingInfo { eligible, bearing: None, diameter_m: f64::NAN });
            }
            Ok(BranchRatingInfo {
                eligible,
                bearing: branch_bearing(br, network)?,
                diameter_m: estimate_diameter(br, network, params)?,
            })
        })
        .collect()
}

/// Multiplier on the static rating for one branch in one hour.
pub fn branch_multiplier(
    sample: Option<&WeatherSample>,
    info: &BranchRatingInfo,
    regime: Regime,
    params: &RatingParams,
) -> Result<f64, RatingError> {
    let Some(w) = sample else { return Ok(1.0) };
    if regime == Regime::Slr || !info.eligible {
        return Ok(1.0);
    }
    let eta_t = eta_temperature(w.ambient_temp_k, params)?;
    if regime == Regime::Aar {
        return Ok(eta_t);
    }
    let speed = w.wind_u.hypot(w.wind_v);
    let eta_v = match (geo::wind_angle(w.wind_u, w.wind_v), info.bearing) {
        (Ok((wind_dir, _)), Some(bearing)) => eta_wind(speed, wind_dir - bearing, info.diameter_m, params)?,
        // Unknown attack angle: assume the static-rating angle.
        (Ok(_), None) => eta_wind(speed, params.phi_slr(), info.diameter_m, params)?,
        (Err(_), _) => 1.0,
    };
    Ok(eta_t * eta_v.max(1.0))
}

/// Limits for every (hour, branch) under one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingSeries {
    pub regime: Regime,
    pub hours: Vec<DateTime<Utc>>,
    /// `[hour][branch]`
    pub multiplier: Vec<Vec<f64>>,
    pub normal_limit: Vec<Vec<f64>>,
    pub contingency_limit: Vec<Vec<f64>>,
}

pub fn build_rating_series(
    network: &Network,
    weather: &WeatherGrid,
    hours: &[DateTime<Utc>],
    regime: Regime,
    params: &RatingParams,
) -> Result<RatingSeries, RatingError> {
    params.validate()?;
    let info = branch_info(network, params)?;
    let cells = weather.branch_cells(network);
    let multiplier = hours
        .par_iter()
        .map(|hour| hour_multipliers(network, weather, &info, &cells, hour, regime, params))
        .collect::<Result<Vec<_>, _>>()?;
    let normal_limit: Vec<Vec<f64>> = multiplier
        .iter()
        .map(|row| row.iter().zip(&network.branches).map(|(m, b)| m * b.rating_mva).collect())
        .collect();
    let contingency_limit = normal_limit
        .iter()
        .map(|row| row.iter().map(|l| l * params.contingency_ratio).collect())
        .collect();
    Ok(RatingSeries { regime, hours: hours.to_vec(), multiplier, normal_limit, contingency_limit })
}

fn hour_multipliers(
    network: &Network,
    weather: &WeatherGrid,
    info: &[BranchRatingInfo],
    cells: &[usize],
    hour: &DateTime<Utc>,
    regime: Regime,
    params: &RatingParams,
) -> Result<Vec<f64>, RatingError> {
    if regime == Regime::Slr {
        return Ok(vec![1.0; network.num_branches()]);
    }
    // Hours outside the weather span are treated like gaps inside it.
    let Ok(slot) = weather.hour_slot(hour) else {
        return Ok(vec![1.0; network.num_branches()]);
    };
    network
        .branches
        .iter()
        .enumerate()
        .map(|(b, br)| {
            let sample = weather.sample_cell(slot, cells[b]);
            branch_multiplier(sample.as_ref(), &info[b], regime, params).map_err(|e| RatingError::Context {
                branch: br.id.0,
                hour: format_hour(hour),
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub t_conductor_c: f64,
    pub phi_slr_deg: f64,
    /// Mean DLR multiplier over eligible branches and hours with weather;
    /// 1 when there are no such samples.
    pub mean_multiplier: f64,
    pub samples: usize,
}

/// Mean DLR multiplier for each `(T_C, φ^SLR)` pair, other parameters taken
/// from `base`.
pub fn sweep_parameters(
    network: &Network,
    weather: &WeatherGrid,
    hours: &[DateTime<Utc>],
    base: &RatingParams,
    grid: &[(f64, f64)],
) -> Result<Vec<SweepRow>, RatingError> {
    let cells = weather.branch_cells(network);
    grid.iter()
        .map(|&(tc, phi_deg)| {
            let params = RatingParams { t_conductor_c: tc, phi_slr_deg: phi_deg, ..base.clone() };
            params.validate()?;
            let info = branch_info(network, &params)?;
            let mut sum = 0.0;
            let mut samples = 0usize;
            for hour in hours {
                let Some(slot) = weather.hour_slot(hour).ok().filter(|&s| weather.is_present(s)) else {
                    continue;
                };
                for (b, inf) in info.iter().enumerate() {
                    if !inf.eligible {
                        continue;
                    }
                    let s = weather.sample_cell(slot, cells[b]);
                    sum += branch_multiplier(s.as_ref(), inf, Regime::Dlr, &params)?;
                    samples += 1;
                }
            }
            let mean_multiplier = if samples == 0 { 1.0 } else { sum / samples as f64 };
            Ok(SweepRow { t_conductor_c: tc, phi_slr_deg: phi_deg, mean_multiplier, samples })
        })
        .collect()
}

/// `time,branch_id,regime,multiplier,normal_limit_mva,contingency_limit_mva`
pub fn write_ratings_csv<W: Write>(series: &RatingSeries, network: &Network, mut out: W) -> std::io::Result<()> {
    writeln!(out, "time,branch_id,regime,multiplier,normal_limit_mva,contingency_limit_mva")?;
    for (h, hour) in series.hours.iter().enumerate() {
        let t = format_hour(hour);
        for (b, br) in network.branches.iter().enumerate() {
            writeln!(
                out,
                "{t},{},{},{},{},{}",
                br.id, series.regime, series.multiplier[h][b], series.normal_limit[h][b], series.contingency_limit[h][b]
            )?;
        }
    }
    Ok(())
}
