//! Network data model and plain-CSV case ingestion.
//!
//! A case directory holds `bus.csv`, `branch.csv` and `gen.csv`, plus the
//! hourly `demand.csv` and (optionally) `availability.csv`. See the README for
//! column layouts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenId(pub u32);

macro_rules! display_id {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    )*};
}
display_id!(BusId, BranchId, GenId);

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file} row {row}: {message}")]
    Invalid { file: String, row: usize, message: String },
}

impl CaseError {
    fn invalid(file: &str, row: usize, message: impl Into<String>) -> Self {
        CaseError::Invalid { file: file.to_string(), row, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub latitude: f64,
    pub longitude: f64,
    /// Line-to-line, kV.
    pub base_kv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Line,
    Transformer,
}

impl FromStr for BranchKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" => Ok(BranchKind::Line),
            "transformer" | "xfmr" => Ok(BranchKind::Transformer),
            other => Err(format!("unknown branch kind '{other}'")),
        }
    }
}

impl fmt::Display for BranchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchKind::Line => "line",
            BranchKind::Transformer => "transformer",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: BranchId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub reactance_pu: f64,
    pub rating_mva: f64,
    pub kind: BranchKind,
    pub length_km: f64,
    /// True when `length_km` was filled from endpoint coordinates.
    pub length_derived: bool,
    pub diameter_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fuel {
    Solar,
    Wind,
    NaturalGas,
    Coal,
    Nuclear,
    Hydro,
    Other,
}

impl Fuel {
    pub const ALL: [Fuel; 7] = [
        Fuel::Solar,
        Fuel::Wind,
        Fuel::NaturalGas,
        Fuel::Coal,
        Fuel::Nuclear,
        Fuel::Hydro,
        Fuel::Other,
    ];

    pub fn is_variable(self) -> bool {
        matches!(self, Fuel::Solar | Fuel::Wind)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Fuel::Solar => "solar",
            Fuel::Wind => "wind",
            Fuel::NaturalGas => "natural_gas",
            Fuel::Coal => "coal",
            Fuel::Nuclear => "nuclear",
            Fuel::Hydro => "hydro",
            Fuel::Other => "other",
        }
    }
}

impl FromStr for Fuel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "solar" => Ok(Fuel::Solar),
            "wind" => Ok(Fuel::Wind),
            "natural_gas" | "ng" | "gas" => Ok(Fuel::NaturalGas),
            "coal" => Ok(Fuel::Coal),
            "nuclear" => Ok(Fuel::Nuclear),
            "hydro" => Ok(Fuel::Hydro),
            "other" => Ok(Fuel::Other),
            other => Err(format!("unknown fuel '{other}'")),
        }
    }
}

impl fmt::Display for Fuel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One block of a piecewise-linear cost curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSegment {
    pub mw: f64,
    /// $/MWh
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: GenId,
    pub bus: BusId,
    pub fuel: Fuel,
    pub p_min: f64,
    pub p_max: f64,
    pub segments: Vec<CostSegment>,
}

impl Generator {
    /// Total cost ($/h) of producing `p` MW, filling cheapest blocks first.
    pub fn cost_at(&self, p: f64) -> f64 {
        let mut left = p.max(0.0);
        let mut total = 0.0;
        for seg in &self.segments {
            let take = left.min(seg.mw);
            total += take * seg.marginal_cost;
            left -= take;
            if left <= 0.0 {
                break;
            }
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    bus_index: HashMap<BusId, usize>,
    gen_index: HashMap<GenId, usize>,
}

impl Network {
    /// Validates raw tables and resolves cross references. Missing line
    /// lengths (NaN) are filled with the ellipsoidal distance between the
    /// endpoint buses.
    pub fn new(buses: Vec<Bus>, mut branches: Vec<Branch>, generators: Vec<Generator>) -> Result<Self, CaseError> {
        let mut bus_index = HashMap::new();
        for (k, b) in buses.iter().enumerate() {
            let row = k + 1;
            if bus_index.insert(b.id, k).is_some() {
                return Err(CaseError::invalid("bus.csv", row, format!("duplicate bus id {}", b.id)));
            }
            if !(b.latitude.abs() <= 90.0) || !(b.longitude.abs() <= 180.0) {
                return Err(CaseError::invalid(
                    "bus.csv",
                    row,
                    format!("coordinates ({}, {}) out of range", b.latitude, b.longitude),
                ));
            }
            if !(b.base_kv > 0.0) {
                return Err(CaseError::invalid("bus.csv", row, format!("base_kv {} must be positive", b.base_kv)));
            }
        }
        if buses.is_empty() {
            return Err(CaseError::invalid("bus.csv", 0, "no buses"));
        }

        let mut seen = HashSet::new();
        for (k, br) in branches.iter_mut().enumerate() {
            let row = k + 1;
            let file = "branch.csv";
            if !seen.insert(br.id) {
                return Err(CaseError::invalid(file, row, format!("duplicate branch id {}", br.id)));
            }
            let from = *bus_index
                .get(&br.from_bus)
                .ok_or_else(|| CaseError::invalid(file, row, format!("from_bus {} does not exist", br.from_bus)))?;
            let to = *bus_index
                .get(&br.to_bus)
                .ok_or_else(|| CaseError::invalid(file, row, format!("to_bus {} does not exist", br.to_bus)))?;
            if from == to {
                return Err(CaseError::invalid(file, row, "branch connects a bus to itself"));
            }
            if !(br.reactance_pu > 0.0) {
                return Err(CaseError::invalid(file, row, format!("reactance {} must be positive", br.reactance_pu)));
            }
            if !(br.rating_mva > 0.0) {
                return Err(CaseError::invalid(file, row, format!("rating {} must be positive", br.rating_mva)));
            }
            if let Some(d) = br.diameter_m {
                if !(d > 0.0) {
                    return Err(CaseError::invalid(file, row, format!("diameter {d} must be positive")));
                }
            }
            if br.length_km.is_nan() {
                let (a, b) = (&buses[from], &buses[to]);
                br.length_km = geo::geodesic_km(a.latitude, a.longitude, b.latitude, b.longitude);
                br.length_derived = true;
            } else if br.length_km < 0.0 {
                return Err(CaseError::invalid(file, row, format!("length {} is negative", br.length_km)));
            }
        }

        let mut gen_index = HashMap::new();
        for (k, g) in generators.iter().enumerate() {
            let row = k + 1;
            let file = "gen.csv";
            if gen_index.insert(g.id, k).is_some() {
                return Err(CaseError::invalid(file, row, format!("duplicate generator id {}", g.id)));
            }
            if !bus_index.contains_key(&g.bus) {
                return Err(CaseError::invalid(file, row, format!("bus {} does not exist", g.bus)));
            }
            if !(g.p_min >= 0.0 && g.p_min <= g.p_max) {
                return Err(CaseError::invalid(
                    file,
                    row,
                    format!("need 0 ≤ p_min ≤ p_max, got {} / {}", g.p_min, g.p_max),
                ));
            }
            if g.segments.is_empty() {
                return Err(CaseError::invalid(file, row, "cost curve has no segments"));
            }
            let mut total = 0.0;
            let mut last = f64::NEG_INFINITY;
            for s in &g.segments {
                if !(s.mw >= 0.0) || !s.marginal_cost.is_finite() {
                    return Err(CaseError::invalid(file, row, "cost segment must have finite cost and nonnegative MW"));
                }
                if s.marginal_cost < last {
                    return Err(CaseError::invalid(file, row, "marginal costs must be nondecreasing"));
                }
                last = s.marginal_cost;
                total += s.mw;
            }
            if (total - g.p_max).abs() > 1e-6 * g.p_max.max(1.0) {
                return Err(CaseError::invalid(
                    file,
                    row,
                    format!("segments sum to {total} MW but p_max is {}", g.p_max),
                ));
            }
        }

        Ok(Network { buses, branches, generators, bus_index, gen_index })
    }

    pub fn bus_position(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    pub fn gen_position(&self, id: GenId) -> Option<usize> {
        self.gen_index.get(&id).copied()
    }

    pub fn branch_position(&self, id: BranchId) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    /// Endpoint bus positions of a branch.
    pub fn endpoints(&self, branch: &Branch) -> (usize, usize) {
        (self.bus_index[&branch.from_bus], self.bus_index[&branch.to_bus])
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }
}

fn open_csv(dir: &Path, name: &str) -> Result<csv::Reader<File>, CaseError> {
    let path = dir.join(name);
    let file = File::open(&path).map_err(|source| CaseError::Io { path: path.clone(), source })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file))
}

/// Column lookup by header name for one CSV file.
struct Columns {
    file: String,
    names: HashMap<String, usize>,
}

impl Columns {
    fn new(file: &str, reader: &mut csv::Reader<File>) -> Result<Self, CaseError> {
        let headers = reader
            .headers()
            .map_err(|source| CaseError::Csv { file: file.to_string(), source })?;
        let names = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase(), i))
            .collect();
        Ok(Columns { file: file.to_string(), names })
    }

    fn require(&self, name: &str) -> Result<usize, CaseError> {
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| CaseError::invalid(&self.file, 0, format!("missing column '{name}'")))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.names.get(name).copied()
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, col: usize, row: usize) -> Result<&'r str, CaseError> {
        rec.get(col)
            .ok_or_else(|| CaseError::invalid(&self.file, row, format!("missing field {}", col + 1)))
    }

    fn parse<T: FromStr>(&self, rec: &csv::StringRecord, col: usize, row: usize) -> Result<T, CaseError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.field(rec, col, row)?;
        raw.parse::<T>()
            .map_err(|e| CaseError::invalid(&self.file, row, format!("cannot parse '{raw}': {e}")))
    }

    fn parse_opt(&self, rec: &csv::StringRecord, col: Option<usize>, row: usize) -> Result<Option<f64>, CaseError> {
        match col.and_then(|c| rec.get(c)) {
            None | Some("") => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|e| CaseError::invalid(&self.file, row, format!("cannot parse '{s}': {e}"))),
        }
    }
}

fn records(file: &str, reader: &mut csv::Reader<File>) -> Result<Vec<csv::StringRecord>, CaseError> {
    reader
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| CaseError::Csv { file: file.to_string(), source })
}

/// Reads `bus.csv`, `branch.csv` and `gen.csv` from a case directory.
pub fn load_network(case_dir: &Path) -> Result<Network, CaseError> {
    let mut rdr = open_csv(case_dir, "bus.csv")?;
    let cols = Columns::new("bus.csv", &mut rdr)?;
    let (c_id, c_lat, c_lon, c_kv) =
        (cols.require("id")?, cols.require("lat")?, cols.require("lon")?, cols.require("base_kv")?);
    let mut buses = Vec::new();
    for (k, rec) in records("bus.csv", &mut rdr)?.iter().enumerate() {
        let row = k + 1;
        buses.push(Bus {
            id: BusId(cols.parse(rec, c_id, row)?),
            latitude: cols.parse(rec, c_lat, row)?,
            longitude: cols.parse(rec, c_lon, row)?,
            base_kv: cols.parse(rec, c_kv, row)?,
        });
    }

    let mut rdr = open_csv(case_dir, "branch.csv")?;
    let cols = Columns::new("branch.csv", &mut rdr)?;
    let c_id = cols.require("id")?;
    let c_from = cols.require("from_bus")?;
    let c_to = cols.require("to_bus")?;
    let c_x = cols.require("reactance_pu")?;
    let c_rate = cols.require("rating_mva")?;
    let c_kind = cols.require("kind")?;
    let c_len = cols.optional("length_km");
    let c_diam = cols.optional("diameter_m");
    let mut branches = Vec::new();
    for (k, rec) in records("branch.csv", &mut rdr)?.iter().enumerate() {
        let row = k + 1;
        let length = cols.parse_opt(rec, c_len, row)?;
        branches.push(Branch {
            id: BranchId(cols.parse(rec, c_id, row)?),
            from_bus: BusId(cols.parse(rec, c_from, row)?),
            to_bus: BusId(cols.parse(rec, c_to, row)?),
            reactance_pu: cols.parse(rec, c_x, row)?,
            rating_mva: cols.parse(rec, c_rate, row)?,
            kind: cols.parse(rec, c_kind, row)?,
            length_km: length.unwrap_or(f64::NAN),
            length_derived: false,
            diameter_m: cols.parse_opt(rec, c_diam, row)?,
        });
    }

    let mut rdr = open_csv(case_dir, "gen.csv")?;
    let cols = Columns::new("gen.csv", &mut rdr)?;
    let c_id = cols.require("id")?;
    let c_bus = cols.require("bus")?;
    let c_fuel = cols.require("fuel")?;
    let c_pmin = cols.require("p_min_mw")?;
    let c_pmax = cols.require("p_max_mw")?;
    let mut seg_cols = Vec::new();
    for k in 1.. {
        match (cols.optional(&format!("seg{k}_mw")), cols.optional(&format!("seg{k}_cost"))) {
            (Some(a), Some(b)) => seg_cols.push((a, b)),
            (None, None) => break,
            _ => return Err(CaseError::invalid("gen.csv", 0, format!("segment {k} needs both mw and cost columns"))),
        }
    }
    let mut generators = Vec::new();
    for (k, rec) in records("gen.csv", &mut rdr)?.iter().enumerate() {
        let row = k + 1;
        let mut segments = Vec::new();
        for &(cm, cc) in &seg_cols {
            match (cols.parse_opt(rec, Some(cm), row)?, cols.parse_opt(rec, Some(cc), row)?) {
                (Some(mw), Some(marginal_cost)) => segments.push(CostSegment { mw, marginal_cost }),
                (None, None) => {}
                _ => return Err(CaseError::invalid("gen.csv", row, "half-filled cost segment")),
            }
        }
        generators.push(Generator {
            id: GenId(cols.parse(rec, c_id, row)?),
            bus: BusId(cols.parse(rec, c_bus, row)?),
            fuel: cols.parse(rec, c_fuel, row)?,
            p_min: cols.parse(rec, c_pmin, row)?,
            p_max: cols.parse(rec, c_pmax, row)?,
            segments,
        });
    }

    Network::new(buses, branches, generators)
}

/// Writes the network tables back in the input schema. Derived lengths are
/// written blank so a reload derives them again.
pub fn write_network(network: &Network, dir: &Path) -> Result<(), CaseError> {
    std::fs::create_dir_all(dir).map_err(|source| CaseError::Io { path: dir.to_path_buf(), source })?;
    let io = |path: &Path| {
        let p = path.to_path_buf();
        move |source| CaseError::Io { path: p.clone(), source }
    };

    let path = dir.join("bus.csv");
    let mut out = String::from("id,lat,lon,base_kv\n");
    for b in &network.buses {
        out += &format!("{},{},{},{}\n", b.id, b.latitude, b.longitude, b.base_kv);
    }
    File::create(&path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(io(&path))?;

    let path = dir.join("branch.csv");
    let mut out = String::from("id,from_bus,to_bus,reactance_pu,rating_mva,kind,length_km,diameter_m\n");
    for b in &network.branches {
        let len = if b.length_derived { String::new() } else { b.length_km.to_string() };
        let diam = b.diameter_m.map(|d| d.to_string()).unwrap_or_default();
        out += &format!(
            "{},{},{},{},{},{},{},{}\n",
            b.id, b.from_bus, b.to_bus, b.reactance_pu, b.rating_mva, b.kind, len, diam
        );
    }
    File::create(&path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(io(&path))?;

    let path = dir.join("gen.csv");
    let width = network.generators.iter().map(|g| g.segments.len()).max().unwrap_or(1);
    let mut out = String::from("id,bus,fuel,p_min_mw,p_max_mw");
    for k in 1..=width {
        out += &format!(",seg{k}_mw,seg{k}_cost");
    }
    out.push('\n');
    for g in &network.generators {
        out += &format!("{},{},{},{},{}", g.id, g.bus, g.fuel, g.p_min, g.p_max);
        for k in 0..width {
            match g.segments.get(k) {
                Some(s) => out += &format!(",{},{}", s.mw, s.marginal_cost),
                None => out += ",,",
            }
        }
        out.push('\n');
    }
    File::create(&path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(io(&path))?;
    Ok(())
}

/// Parses an hour key. Accepts RFC 3339 (`2016-01-01T05:00:00Z`) or a naive
/// `YYYY-MM-DD HH:MM[:SS]` / `YYYY-MM-DDTHH:MM[:SS]` taken as UTC.
pub fn parse_hour(raw: &str) -> Result<DateTime<Utc>, String> {
    let s = raw.trim();
    let t = if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        t.with_timezone(&Utc)
    } else {
        const FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"];
        FORMATS
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            .ok_or_else(|| format!("unrecognised timestamp '{s}'"))?
            .and_utc()
    };
    if t.minute() != 0 || t.second() != 0 || t.nanosecond() != 0 {
        return Err(format!("timestamp '{s}' is not on the hour"));
    }
    Ok(t)
}

pub fn format_hour(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Hourly demand and renewable availability aligned to a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub hours: Vec<DateTime<Utc>>,
    /// `demand[h][bus_position]`, MW.
    pub demand: Vec<Vec<f64>>,
    /// `availability[h][gen_position]`, MW. Units without rows carry `p_max`.
    pub availability: Vec<Vec<f64>>,
}

impl HourlySeries {
    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }

    pub fn total_demand(&self, h: usize) -> f64 {
        self.demand[h].iter().sum()
    }

    pub fn hour_position(&self, t: &DateTime<Utc>) -> Option<usize> {
        self.hours.binary_search(t).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SeriesOptions {
    /// Clamp availability above `p_max` instead of rejecting it.
    pub clamp_availability: bool,
}

type Table = BTreeMap<DateTime<Utc>, BTreeMap<u32, (f64, usize)>>;

fn read_series(dir: &Path, name: &str, id_col: &str) -> Result<Table, CaseError> {
    let mut rdr = open_csv(dir, name)?;
    let cols = Columns::new(name, &mut rdr)?;
    let (c_t, c_id, c_mw) = (cols.require("time")?, cols.require(id_col)?, cols.require("mw")?);
    let mut table: Table = BTreeMap::new();
    for (k, rec) in records(name, &mut rdr)?.iter().enumerate() {
        let row = k + 1;
        let t = parse_hour(cols.field(rec, c_t, row)?).map_err(|m| CaseError::invalid(name, row, m))?;
        let id: u32 = cols.parse(rec, c_id, row)?;
        let mw: f64 = cols.parse(rec, c_mw, row)?;
        if !(mw >= 0.0) || !mw.is_finite() {
            return Err(CaseError::invalid(name, row, format!("value {mw} must be finite and nonnegative")));
        }
        if table.entry(t).or_default().insert(id, (mw, row)).is_some() {
            return Err(CaseError::invalid(name, row, format!("duplicate entry for id {id}")));
        }
    }
    Ok(table)
}

fn check_contiguous(name: &str, hours: &[DateTime<Utc>]) -> Result<(), CaseError> {
    for w in hours.windows(2) {
        if w[1] - w[0] != Duration::hours(1) {
            return Err(CaseError::invalid(
                name,
                0,
                format!("hours are not contiguous: {} is followed by {}", format_hour(&w[0]), format_hour(&w[1])),
            ));
        }
    }
    Ok(())
}

/// Reads `demand.csv` and the optional `availability.csv`.
pub fn load_hourly_series(case_dir: &Path, network: &Network, opts: SeriesOptions) -> Result<HourlySeries, CaseError> {
    let demand_table = read_series(case_dir, "demand.csv", "bus_id")?;
    let hours: Vec<_> = demand_table.keys().copied().collect();
    if hours.is_empty() {
        return Err(CaseError::invalid("demand.csv", 0, "no demand rows"));
    }
    check_contiguous("demand.csv", &hours)?;

    let covered: BTreeSet<u32> = demand_table.values().flat_map(|m| m.keys().copied()).collect();
    let mut demand = Vec::with_capacity(hours.len());
    for (t, entries) in &demand_table {
        let mut row = vec![0.0; network.num_buses()];
        for (&id, &(mw, line)) in entries {
            let pos = network
                .bus_position(BusId(id))
                .ok_or_else(|| CaseError::invalid("demand.csv", line, format!("unknown bus {id}")))?;
            row[pos] = mw;
        }
        if let Some(missing) = covered.iter().find(|id| !entries.contains_key(id)) {
            return Err(CaseError::invalid(
                "demand.csv",
                0,
                format!("bus {missing} has no value at {}", format_hour(t)),
            ));
        }
        demand.push(row);
    }

    let static_caps: Vec<f64> = network.generators.iter().map(|g| g.p_max).collect();
    let mut availability = vec![static_caps; hours.len()];
    let avail_path = case_dir.join("availability.csv");
    if avail_path.exists() {
        let table = read_series(case_dir, "availability.csv", "gen_id")?;
        let covered: BTreeSet<u32> = table.values().flat_map(|m| m.keys().copied()).collect();
        for (t, entries) in &table {
            let h = hours.binary_search(t).map_err(|_| {
                CaseError::invalid("availability.csv", 0, format!("hour {} not in demand series", format_hour(t)))
            })?;
            for (&id, &(mw, line)) in entries {
                let pos = network
                    .gen_position(GenId(id))
                    .ok_or_else(|| CaseError::invalid("availability.csv", line, format!("unknown generator {id}")))?;
                let cap = network.generators[pos].p_max;
                let value = if mw > cap + 1e-9 {
                    if !opts.clamp_availability {
                        return Err(CaseError::invalid(
                            "availability.csv",
                            line,
                            format!("availability {mw} exceeds p_max {cap} of generator {id}"),
                        ));
                    }
                    cap
                } else {
                    mw.min(cap)
                };
                availability[h][pos] = value;
            }
        }
        for t in &hours {
            let entries = table.get(t);
            if let Some(missing) = covered.iter().find(|id| entries.is_none_or(|e| !e.contains_key(id))) {
                return Err(CaseError::invalid(
                    "availability.csv",
                    0,
                    format!("generator {missing} has no value at {}", format_hour(t)),
                ));
            }
        }
    }

    Ok(HourlySeries { hours, demand, availability })
}
