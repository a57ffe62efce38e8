//! Multi-hour, multi-regime study runs and their reports.
//!
//! Hours are independent, so each regime is solved as a parallel map over
//! hours on a dedicated thread pool. Aggregation happens afterwards in hour
//! order, which keeps every output byte-identical for any worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{solve_copperplate, HourData};
use crate::factors::{FactorError, SensitivityFactors};
use crate::lp::DenseSimplex;
use crate::network::{format_hour, load_hourly_series, load_network, BusId, CaseError, Fuel, HourlySeries, Network, SeriesOptions};
use crate::rating::{build_rating_series, write_ratings_csv, RatingError, RatingParams, RatingSeries, Regime};
use crate::scopf::{solve_scdcopf, ScopfOptions, ScopfStatus, TraceEntry};
use crate::weather::{load_weather, WeatherError, WeatherGrid};

/// Duals below this magnitude do not count as binding.
pub const BINDING_DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Factors(#[from] FactorError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyRegime {
    Slr,
    Aar,
    Dlr,
    Uncongested,
}

impl StudyRegime {
    pub fn rating(self) -> Option<Regime> {
        match self {
            StudyRegime::Slr => Some(Regime::Slr),
            StudyRegime::Aar => Some(Regime::Aar),
            StudyRegime::Dlr => Some(Regime::Dlr),
            StudyRegime::Uncongested => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StudyRegime::Slr => "slr",
            StudyRegime::Aar => "aar",
            StudyRegime::Dlr => "dlr",
            StudyRegime::Uncongested => "uncongested",
        }
    }
}

impl fmt::Display for StudyRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StudyRegime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uncongested" | "copperplate" => Ok(StudyRegime::Uncongested),
            other => other.parse::<Regime>().map(|r| match r {
                Regime::Slr => StudyRegime::Slr,
                Regime::Aar => StudyRegime::Aar,
                Regime::Dlr => StudyRegime::Dlr,
            }),
        }
    }
}

/// tCO₂ per MWh by fuel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionFactors(pub BTreeMap<Fuel, f64>);

impl Default for EmissionFactors {
    fn default() -> Self {
        EmissionFactors(BTreeMap::from([(Fuel::Coal, 1.0), (Fuel::NaturalGas, 0.42)]))
    }
}

impl EmissionFactors {
    pub fn factor(&self, fuel: Fuel) -> f64 {
        self.0.get(&fuel).copied().unwrap_or(0.0)
    }
}

/// Emissions in million tonnes CO₂ for generation given in MWh by fuel.
pub fn emissions_mmt(generation_mwh: &BTreeMap<Fuel, f64>, factors: &EmissionFactors) -> f64 {
    generation_mwh.iter().map(|(&f, &mwh)| factors.factor(f) * mwh).sum::<f64>() / 1e6
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case_dir: PathBuf,
    pub weather_file: PathBuf,
    /// Positions into the hourly series; `None` runs every hour.
    pub hours: Option<Range<usize>>,
    pub regimes: Vec<StudyRegime>,
    pub params: RatingParams,
    pub scopf: ScopfOptions,
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    pub emission_factors: EmissionFactors,
    pub slack_bus: Option<BusId>,
    pub series: SeriesOptions,
    /// Also write PTDF/LODF matrices.
    pub dump_factors: bool,
}

impl RunConfig {
    pub fn new(case_dir: impl Into<PathBuf>, weather_file: impl Into<PathBuf>) -> Self {
        RunConfig {
            case_dir: case_dir.into(),
            weather_file: weather_file.into(),
            hours: None,
            regimes: vec![StudyRegime::Slr, StudyRegime::Aar, StudyRegime::Dlr, StudyRegime::Uncongested],
            params: RatingParams::default(),
            scopf: ScopfOptions::default(),
            workers: 1,
            output_dir: None,
            emission_factors: EmissionFactors::default(),
            slack_bus: None,
            series: SeriesOptions::default(),
            dump_factors: false,
        }
    }
}

/// Loaded, validated inputs shared read-only by all workers.
#[derive(Debug, Clone)]
pub struct StudyInputs {
    pub network: Network,
    pub series: HourlySeries,
    pub weather: WeatherGrid,
    pub factors: SensitivityFactors,
}

impl StudyInputs {
    pub fn load(config: &RunConfig) -> Result<Self, PipelineError> {
        let network = load_network(&config.case_dir)?;
        let series = load_hourly_series(&config.case_dir, &network, config.series)?;
        let weather = load_weather(&config.weather_file)?;
        let factors = SensitivityFactors::compute(&network, config.slack_bus)?;
        Ok(StudyInputs { network, series, weather, factors })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BindingRow {
    pub monitored: usize,
    pub outage: Option<usize>,
    /// |dual|, $/MWh
    pub shadow_price: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourSolution {
    pub p_gen: Vec<f64>,
    pub flows: Vec<f64>,
    pub objective: f64,
    pub penalty_cost: f64,
    pub slack_mw: f64,
    pub iterations: usize,
    pub status: ScopfStatus,
    pub trace: Vec<TraceEntry>,
    pub binding: Vec<BindingRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourOutcome {
    pub position: usize,
    pub hour: DateTime<Utc>,
    pub solution: Result<HourSolution, String>,
}

impl HourOutcome {
    /// Feasible and, for rated regimes, not cut off by the iteration limit.
    pub fn usable(&self) -> bool {
        matches!(&self.solution, Ok(s) if s.status != ScopfStatus::IterationLimit)
    }
}

#[derive(Debug, Clone)]
pub struct RegimeRun {
    pub regime: StudyRegime,
    pub ratings: Option<RatingSeries>,
    pub hours: Vec<HourOutcome>,
}

fn solve_hour(
    inputs: &StudyInputs,
    ratings: Option<&RatingSeries>,
    k: usize,
    position: usize,
    opts: &ScopfOptions,
) -> HourOutcome {
    let solver = DenseSimplex::default();
    let data = HourData::from_series(&inputs.series, position);
    let hour = data.hour;
    let solution = match ratings {
        None => solve_copperplate(&inputs.network, &inputs.factors, &data, &solver)
            .map(|r| HourSolution {
                objective: r.objective,
                penalty_cost: 0.0,
                slack_mw: 0.0,
                iterations: 0,
                status: ScopfStatus::Converged,
                trace: vec![TraceEntry { iteration: 0, violations_added: 0, objective: r.objective }],
                binding: Vec::new(),
                p_gen: r.p_gen,
                flows: r.flows,
            })
            .map_err(|e| e.to_string()),
        Some(series) => solve_scdcopf(
            &inputs.network,
            &inputs.factors,
            &data,
            &series.normal_limit[k],
            &series.contingency_limit[k],
            opts,
            &solver,
        )
        .map(|out| {
            let binding = out
                .rows
                .iter()
                .zip(&out.result.row_duals)
                .filter(|(_, d)| d.abs() > BINDING_DUAL_TOL)
                .map(|(row, d)| BindingRow {
                    monitored: row.label.monitored,
                    outage: row.label.outage,
                    shadow_price: d.abs(),
                    limit: row.limit,
                })
                .collect();
            HourSolution {
                objective: out.result.objective,
                penalty_cost: out.result.penalty_cost,
                slack_mw: out.result.total_slack(),
                iterations: out.iterations,
                status: out.status,
                trace: out.trace,
                binding,
                p_gen: out.result.p_gen,
                flows: out.result.flows,
            }
        })
        .map_err(|e| e.to_string()),
    };
    HourOutcome { position, hour, solution }
}

/// Solves every requested regime over `positions` on a pool of `workers`.
pub fn run_regimes(
    inputs: &StudyInputs,
    positions: &[usize],
    regimes: &[StudyRegime],
    params: &RatingParams,
    opts: &ScopfOptions,
    workers: usize,
) -> Result<Vec<RegimeRun>, PipelineError> {
    if workers == 0 {
        return Err(PipelineError::Config("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let hours: Vec<DateTime<Utc>> = positions.iter().map(|&p| inputs.series.hours[p]).collect();
    pool.install(|| {
        regimes
            .iter()
            .map(|&regime| {
                let ratings = match regime.rating() {
                    Some(r) => Some(build_rating_series(&inputs.network, &inputs.weather, &hours, r, params)?),
                    None => None,
                };
                let outcomes = positions
                    .par_iter()
                    .enumerate()
                    .map(|(k, &p)| solve_hour(inputs, ratings.as_ref(), k, p, opts))
                    .collect();
                Ok(RegimeRun { regime, ratings, hours: outcomes })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchCongestion {
    pub branch_id: u32,
    /// Σ |shadow price| × row limit over hours and rows, $. A proxy for
    /// congestion rent attributed to the monitored branch.
    pub congestion_proxy_usd: f64,
    pub binding_hours: usize,
}

/// Per-monitored-branch congestion proxy, largest first.
pub fn congestion_by_branch<'a>(network: &Network, hours: impl IntoIterator<Item = &'a HourSolution>) -> Vec<BranchCongestion> {
    let mut metric: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for sol in hours {
        let mut seen = std::collections::BTreeSet::new();
        for row in &sol.binding {
            let e = metric.entry(row.monitored).or_insert((0.0, 0));
            e.0 += row.shadow_price * row.limit;
            if seen.insert(row.monitored) {
                e.1 += 1;
            }
        }
    }
    let mut table: Vec<BranchCongestion> = metric
        .into_iter()
        .map(|(b, (m, n))| BranchCongestion {
            branch_id: network.branches[b].id.0,
            congestion_proxy_usd: m,
            binding_hours: n,
        })
        .collect();
    table.sort_by(|a, b| b.congestion_proxy_usd.total_cmp(&a.congestion_proxy_usd).then(a.branch_id.cmp(&b.branch_id)));
    table
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub regime: StudyRegime,
    /// Sums below cover the common hour set only.
    pub total_cost_usd: f64,
    pub penalty_cost_usd: f64,
    /// Total cost minus the uncongested total.
    pub congestion_cost_usd: f64,
    pub generation_twh: BTreeMap<Fuel, f64>,
    pub curtailment_twh: BTreeMap<Fuel, f64>,
    pub emissions_mmt_co2: f64,
    pub binding_branches: usize,
    pub max_iterations: usize,
    pub infeasible_hours: Vec<String>,
    pub unconverged_hours: Vec<String>,
    pub slack_hours: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub hours_requested: usize,
    pub common_hours: Vec<String>,
    /// Hours rated at SLR for lack of weather.
    pub weather_missing_hours: Vec<String>,
    pub regimes: Vec<RegimeSummary>,
    pub congestion_metric: String,
    pub dual_caveat: String,
    pub all_hours_ok: bool,
}

/// Per-regime MWh by fuel, split into generation and curtailment.
fn energy_by_fuel(network: &Network, series: &HourlySeries, outcome: &HourOutcome) -> (BTreeMap<Fuel, f64>, BTreeMap<Fuel, f64>) {
    let mut gen = BTreeMap::new();
    let mut curt = BTreeMap::new();
    if let Ok(sol) = &outcome.solution {
        for (g, unit) in network.generators.iter().enumerate() {
            *gen.entry(unit.fuel).or_insert(0.0) += sol.p_gen[g];
            if unit.fuel.is_variable() {
                let avail = series.availability[outcome.position][g];
                *curt.entry(unit.fuel).or_insert(0.0) += (avail - sol.p_gen[g]).max(0.0);
            }
        }
    }
    (gen, curt)
}

pub fn summarize(inputs: &StudyInputs, runs: &[RegimeRun], factors: &EmissionFactors) -> RunSummary {
    let n = runs.first().map_or(0, |r| r.hours.len());
    let common: Vec<usize> = (0..n).filter(|&k| runs.iter().all(|r| r.hours[k].usable())).collect();
    let uncongested_total: Option<f64> = runs.iter().find(|r| r.regime == StudyRegime::Uncongested).map(|r| {
        common.iter().map(|&k| r.hours[k].solution.as_ref().map_or(0.0, |s| s.objective)).sum()
    });

    let regimes = runs
        .iter()
        .map(|run| {
            let mut total = 0.0;
            let mut penalty = 0.0;
            let mut gen_mwh: BTreeMap<Fuel, f64> = BTreeMap::new();
            let mut curt_mwh: BTreeMap<Fuel, f64> = BTreeMap::new();
            for &k in &common {
                let o = &run.hours[k];
                if let Ok(s) = &o.solution {
                    total += s.objective;
                    penalty += s.penalty_cost;
                }
                let (g, c) = energy_by_fuel(&inputs.network, &inputs.series, o);
                for (f, v) in g {
                    *gen_mwh.entry(f).or_insert(0.0) += v;
                }
                for (f, v) in c {
                    *curt_mwh.entry(f).or_insert(0.0) += v;
                }
            }
            let solved = common.iter().filter_map(|&k| run.hours[k].solution.as_ref().ok());
            let congestion = congestion_by_branch(&inputs.network, solved);
            let list = |pred: &dyn Fn(&HourOutcome) -> bool| -> Vec<String> {
                run.hours.iter().filter(|o| pred(o)).map(|o| format_hour(&o.hour)).collect()
            };
            RegimeSummary {
                regime: run.regime,
                total_cost_usd: total,
                penalty_cost_usd: penalty,
                congestion_cost_usd: uncongested_total.map_or(f64::NAN, |u| total - u),
                emissions_mmt_co2: emissions_mmt(&gen_mwh, factors),
                generation_twh: gen_mwh.into_iter().map(|(f, v)| (f, v / 1e6)).collect(),
                curtailment_twh: curt_mwh.into_iter().map(|(f, v)| (f, v / 1e6)).collect(),
                binding_branches: congestion.len(),
                max_iterations: run.hours.iter().filter_map(|o| o.solution.as_ref().ok()).map(|s| s.iterations).max().unwrap_or(0),
                infeasible_hours: list(&|o| o.solution.is_err()),
                unconverged_hours: list(&|o| matches!(&o.solution, Ok(s) if s.status == ScopfStatus::IterationLimit)),
                slack_hours: list(&|o| matches!(&o.solution, Ok(s) if s.slack_mw > 0.0)),
            }
        })
        .collect::<Vec<_>>();

    let all_hours_ok = runs.iter().all(|r| r.hours.iter().all(HourOutcome::usable));
    RunSummary {
        hours_requested: n,
        common_hours: common.iter().map(|&k| format_hour(&runs[0].hours[k].hour)).collect(),
        weather_missing_hours: runs
            .first()
            .map(|r| r.hours.iter().filter(|o| !inputs.weather.covers(&o.hour)).map(|o| format_hour(&o.hour)).collect())
            .unwrap_or_default(),
        regimes,
        congestion_metric: "proxy: sum over hours and rows of |shadow price| x row limit, by monitored branch".into(),
        dual_caveat: "shadow prices are vertex duals; under LP degeneracy they are one of several valid choices".into(),
        all_hours_ok,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Writes `summary.json` plus one directory of CSVs per regime.
pub fn write_outputs(dir: &Path, inputs: &StudyInputs, runs: &[RegimeRun], summary: &RunSummary) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let net = &inputs.network;

    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).map_err(|e| PipelineError::Config(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(io_err(&path))?;

    for run in runs {
        let rdir = dir.join(run.regime.as_str());
        fs::create_dir_all(&rdir).map_err(io_err(&rdir))?;

        let path = rdir.join("dispatch.csv");
        let mut out = create(&path)?;
        let w = io_err(&path);
        writeln!(out, "time,gen_id,mw").map_err(&w)?;
        for o in &run.hours {
            if let Ok(s) = &o.solution {
                let t = format_hour(&o.hour);
                for (g, unit) in net.generators.iter().enumerate() {
                    writeln!(out, "{t},{},{}", unit.id, s.p_gen[g]).map_err(&w)?;
                }
            }
        }
        out.flush().map_err(&w)?;

        let path = rdir.join("flows.csv");
        let mut out = create(&path)?;
        let w = io_err(&path);
        writeln!(out, "time,branch_id,flow_mw,limit_mw").map_err(&w)?;
        for (k, o) in run.hours.iter().enumerate() {
            if let Ok(s) = &o.solution {
                let t = format_hour(&o.hour);
                for (b, br) in net.branches.iter().enumerate() {
                    let limit = run.ratings.as_ref().map_or(f64::INFINITY, |r| r.normal_limit[k][b]);
                    writeln!(out, "{t},{},{},{}", br.id, s.flows[b], limit).map_err(&w)?;
                }
            }
        }
        out.flush().map_err(&w)?;

        if let Some(ratings) = &run.ratings {
            let path = rdir.join("ratings.csv");
            let mut out = create(&path)?;
            write_ratings_csv(ratings, net, &mut out).map_err(io_err(&path))?;
            out.flush().map_err(io_err(&path))?;
        }

        let path = rdir.join("congestion_by_branch.csv");
        let mut out = create(&path)?;
        let w = io_err(&path);
        writeln!(out, "branch_id,congestion_proxy_usd,binding_hours").map_err(&w)?;
        let usable = run.hours.iter().filter(|o| o.usable()).filter_map(|o| o.solution.as_ref().ok());
        for row in congestion_by_branch(net, usable) {
            writeln!(out, "{},{},{}", row.branch_id, row.congestion_proxy_usd, row.binding_hours).map_err(&w)?;
        }
        out.flush().map_err(&w)?;

        let path = rdir.join("iteration_trace.csv");
        let mut out = create(&path)?;
        let w = io_err(&path);
        writeln!(out, "hour,iteration,violations_added,objective").map_err(&w)?;
        for o in &run.hours {
            if let Ok(s) = &o.solution {
                let t = format_hour(&o.hour);
                for e in &s.trace {
                    writeln!(out, "{t},{},{},{}", e.iteration, e.violations_added, e.objective).map_err(&w)?;
                }
            }
        }
        out.flush().map_err(&w)?;

        let path = rdir.join("curtailment_by_hour.csv");
        let mut out = create(&path)?;
        let w = io_err(&path);
        writeln!(out, "time,solar_available_mw,solar_curtailed_mw,wind_available_mw,wind_curtailed_mw").map_err(&w)?;
        for o in &run.hours {
            let Ok(s) = &o.solution else { continue };
            let mut acc = [0.0; 4];
            for (g, unit) in net.generators.iter().enumerate() {
                let avail = inputs.series.availability[o.position][g];
                let slot = match unit.fuel {
                    Fuel::Solar => 0,
                    Fuel::Wind => 2,
                    _ => continue,
                };
                acc[slot] += avail;
                acc[slot + 1] += (avail - s.p_gen[g]).max(0.0);
            }
            writeln!(out, "{},{},{},{},{}", format_hour(&o.hour), acc[0], acc[1], acc[2], acc[3]).map_err(&w)?;
        }
        out.flush().map_err(&w)?;

        let failed: Vec<_> = run.hours.iter().filter_map(|o| o.solution.as_ref().err().map(|e| (o.hour, e))).collect();
        if !failed.is_empty() {
            let path = rdir.join("errors.csv");
            let mut out = create(&path)?;
            let w = io_err(&path);
            writeln!(out, "time,error").map_err(&w)?;
            for (t, e) in failed {
                writeln!(out, "{},\"{}\"", format_hour(&t), e.replace('"', "'")).map_err(&w)?;
            }
            out.flush().map_err(&w)?;
        }
    }
    Ok(())
}

/// Hour positions selected by the config, validated against the series.
pub fn select_hours(config: &RunConfig, series: &HourlySeries) -> Result<Vec<usize>, PipelineError> {
    let range = config.hours.clone().unwrap_or(0..series.len());
    if range.is_empty() || range.end > series.len() {
        return Err(PipelineError::Config(format!(
            "hour range {}..{} is empty or beyond the {} available hours",
            range.start,
            range.end,
            series.len()
        )));
    }
    Ok(range.collect())
}

/// Loads inputs, solves every regime and hour, and writes outputs when an
/// output directory is configured. The uncongested regime is always solved
/// because congestion cost is measured against it.
pub fn run(config: &RunConfig) -> Result<RunSummary, PipelineError> {
    config.params.validate()?;
    let inputs = StudyInputs::load(config)?;
    let positions = select_hours(config, &inputs.series)?;
    let mut regimes = config.regimes.clone();
    if regimes.is_empty() {
        return Err(PipelineError::Config("no regimes requested".into()));
    }
    regimes.sort();
    regimes.dedup();
    if !regimes.contains(&StudyRegime::Uncongested) {
        regimes.push(StudyRegime::Uncongested);
    }
    let runs = run_regimes(&inputs, &positions, &regimes, &config.params, &config.scopf, config.workers)?;
    let summary = summarize(&inputs, &runs, &config.emission_factors);
    if let Some(dir) = &config.output_dir {
        write_outputs(dir, &inputs, &runs, &summary)?;
        if config.dump_factors {
            let (pp, lp) = (dir.join("ptdf.csv"), dir.join("lodf.csv"));
            let mut a = create(&pp)?;
            let mut b = create(&lp)?;
            inputs.factors.write_csv(&inputs.network, &mut a, &mut b).map_err(io_err(dir))?;
            a.flush().map_err(io_err(&pp))?;
            b.flush().map_err(io_err(&lp))?;
        }
    }
    Ok(summary)
}
