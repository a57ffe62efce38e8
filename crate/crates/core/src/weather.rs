//! Hourly gridded weather with nearest-cell lookup.
//!
//! Hours that fall inside the file's time span but have no rows are kept as
//! explicit gaps; lookups for them return `None` so callers fall back to the
//! static rating.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use thiserror::Error;

use crate::geo::great_circle_km;
use crate::network::{format_hour, parse_hour, Network};

/// Temperatures at or below this are treated as corrupt input.
pub const MIN_PLAUSIBLE_TEMP_K: f64 = 150.0;

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("weather csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("weather row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("hour {hour} has {found} cells, expected {expected}")]
    InconsistentCells { hour: String, found: usize, expected: usize },
    #[error("hour {0} lies outside the weather range")]
    OutOfRange(String),
    #[error("weather grid has no cells")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherSample {
    pub ambient_temp_k: f64,
    pub wind_u: f64,
    pub wind_v: f64,
    pub cell_index: usize,
}

/// Values for every cell at one hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourField {
    pub temp_k: Vec<f64>,
    pub wind_u: Vec<f64>,
    pub wind_v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherGrid {
    /// `(latitude, longitude)` in degrees.
    cells: Vec<(f64, f64)>,
    start: DateTime<Utc>,
    /// One slot per hour from `start`; `None` marks a missing hour.
    fields: Vec<Option<HourField>>,
}

impl WeatherGrid {
    pub fn new(
        cells: Vec<(f64, f64)>,
        start: DateTime<Utc>,
        fields: Vec<Option<HourField>>,
    ) -> Result<Self, WeatherError> {
        if cells.is_empty() {
            return Err(WeatherError::Empty);
        }
        for (h, field) in fields.iter().enumerate() {
            let Some(f) = field else { continue };
            let hour = format_hour(&(start + Duration::hours(h as i64)));
            for len in [f.temp_k.len(), f.wind_u.len(), f.wind_v.len()] {
                if len != cells.len() {
                    return Err(WeatherError::InconsistentCells { hour, found: len, expected: cells.len() });
                }
            }
            let bad = f
                .temp_k
                .iter()
                .zip(&f.wind_u)
                .zip(&f.wind_v)
                .position(|((t, u), v)| !(t.is_finite() && *t > MIN_PLAUSIBLE_TEMP_K && u.is_finite() && v.is_finite()));
            if let Some(c) = bad {
                return Err(WeatherError::Row {
                    row: 0,
                    message: format!("cell {c} at {hour} has implausible values"),
                });
            }
        }
        Ok(WeatherGrid { cells, start, fields })
    }

    pub fn cells(&self) -> &[(f64, f64)] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_hours(&self) -> usize {
        self.fields.len()
    }

    pub fn hours(&self) -> impl Iterator<Item = DateTime<Utc>> + '_ {
        (0..self.fields.len()).map(|h| self.start + Duration::hours(h as i64))
    }

    pub fn is_present(&self, h: usize) -> bool {
        matches!(self.fields.get(h), Some(Some(_)))
    }

    pub fn field(&self, h: usize) -> Option<&HourField> {
        self.fields.get(h).and_then(Option::as_ref)
    }

    /// Slot index of `hour`, or an error if the hour is outside the span.
    pub fn hour_slot(&self, hour: &DateTime<Utc>) -> Result<usize, WeatherError> {
        let offset = (*hour - self.start).num_hours();
        let on_grid = self.start + Duration::hours(offset) == *hour;
        if offset < 0 || offset as usize >= self.fields.len() || !on_grid {
            return Err(WeatherError::OutOfRange(format_hour(hour)));
        }
        Ok(offset as usize)
    }

    /// Whether the hour has weather, inside or outside the stored span.
    pub fn covers(&self, hour: &DateTime<Utc>) -> bool {
        self.hour_slot(hour).is_ok_and(|s| self.is_present(s))
    }

    /// Cell closest to the point by great-circle distance; the lowest index
    /// wins ties.
    pub fn nearest_cell(&self, latitude: f64, longitude: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &(lat, lon)) in self.cells.iter().enumerate() {
            let d = great_circle_km(latitude, longitude, lat, lon);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn sample_cell(&self, slot: usize, cell: usize) -> Option<WeatherSample> {
        self.field(slot).map(|f| WeatherSample {
            ambient_temp_k: f.temp_k[cell],
            wind_u: f.wind_u[cell],
            wind_v: f.wind_v[cell],
            cell_index: cell,
        })
    }

    /// Weather at the cell nearest to a point. `Ok(None)` for a missing hour.
    pub fn sample(&self, hour: &DateTime<Utc>, latitude: f64, longitude: f64) -> Result<Option<WeatherSample>, WeatherError> {
        let slot = self.hour_slot(hour)?;
        Ok(self.sample_cell(slot, self.nearest_cell(latitude, longitude)))
    }

    /// Nearest cell to each branch midpoint, in branch order.
    pub fn branch_cells(&self, network: &Network) -> Vec<usize> {
        network
            .branches
            .iter()
            .map(|br| {
                let (a, b) = network.endpoints(br);
                let (a, b) = (&network.buses[a], &network.buses[b]);
                self.nearest_cell((a.latitude + b.latitude) / 2.0, (a.longitude + b.longitude) / 2.0)
            })
            .collect()
    }
}

/// Reads `time,lat,lon,temp_k,wind_u_ms,wind_v_ms` rows.
pub fn load_weather(path: &Path) -> Result<WeatherGrid, WeatherError> {
    let file = File::open(path).map_err(|source| WeatherError::Io { path: path.to_path_buf(), source })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| WeatherError::Row { row: 0, message: format!("missing column '{name}'") })
    };
    let cols = [col("time")?, col("lat")?, col("lon")?, col("temp_k")?, col("wind_u_ms")?, col("wind_v_ms")?];

    // hour -> cell key -> (t, u, v)
    type Rows = BTreeMap<DateTime<Utc>, Vec<((u64, u64), [f64; 3])>>;
    let mut rows: Rows = BTreeMap::new();
    let mut cell_order: Vec<(f64, f64)> = Vec::new();
    let mut cell_index: HashMap<(u64, u64), usize> = HashMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec?;
        let get = |i: usize| {
            rec.get(cols[i]).ok_or_else(|| WeatherError::Row { row, message: "short row".into() })
        };
        let t = parse_hour(get(0)?).map_err(|message| WeatherError::Row { row, message })?;
        let mut nums = [0.0; 5];
        for (slot, i) in nums.iter_mut().zip(1..6) {
            let raw = get(i)?;
            *slot = raw
                .parse::<f64>()
                .map_err(|e| WeatherError::Row { row, message: format!("cannot parse '{raw}': {e}") })?;
        }
        let [lat, lon, temp, u, v] = nums;
        if !(lat.abs() <= 90.0 && lon.abs() <= 180.0) {
            return Err(WeatherError::Row { row, message: format!("bad coordinate ({lat}, {lon})") });
        }
        if !(temp.is_finite() && temp > MIN_PLAUSIBLE_TEMP_K && u.is_finite() && v.is_finite()) {
            return Err(WeatherError::Row { row, message: "implausible temperature or wind".into() });
        }
        let key = (lat.to_bits(), lon.to_bits());
        cell_index.entry(key).or_insert_with(|| {
            cell_order.push((lat, lon));
            cell_order.len() - 1
        });
        rows.entry(t).or_default().push((key, [temp, u, v]));
    }
    let (Some(&start), Some(&end)) = (rows.keys().next(), rows.keys().next_back()) else {
        return Err(WeatherError::Empty);
    };
    let n_cells = cell_order.len();
    let span = (end - start).num_hours() as usize + 1;
    let mut fields: Vec<Option<HourField>> = vec![None; span];
    for (t, entries) in rows {
        let hour = format_hour(&t);
        if entries.len() != n_cells {
            return Err(WeatherError::InconsistentCells { hour, found: entries.len(), expected: n_cells });
        }
        let mut f = HourField { temp_k: vec![f64::NAN; n_cells], wind_u: vec![0.0; n_cells], wind_v: vec![0.0; n_cells] };
        for (key, [temp, u, v]) in entries {
            let c = cell_index[&key];
            if !f.temp_k[c].is_nan() {
                return Err(WeatherError::Row { row: 0, message: format!("duplicate cell at {hour}") });
            }
            f.temp_k[c] = temp;
            f.wind_u[c] = u;
            f.wind_v[c] = v;
        }
        let offset = (t - start).num_hours();
        if start + Duration::hours(offset) != t {
            return Err(WeatherError::Row { row: 0, message: format!("hour {hour} is off the hourly grid") });
        }
        fields[offset as usize] = Some(f);
    }
    WeatherGrid::new(cell_order, start, fields)
}
