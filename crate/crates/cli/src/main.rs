use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gridline::network::{load_hourly_series, load_network, BusId, HourlySeries, Network, SeriesOptions};
use gridline::pipeline::{run, RunConfig, RunSummary, StudyRegime};
use gridline::rating::{build_rating_series, sweep_parameters, write_ratings_csv, RatingParams, Regime};
use gridline::scopf::{ContingencyRowLimit, ScopfOptions};
use gridline::weather::{load_weather, WeatherGrid};

#[derive(Parser)]
#[command(name = "gridline", version, about = "Weather-dependent line ratings and N-1 secure DC dispatch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve hourly N-1 SC-DCOPF under each rating regime and report.
    Run(RunArgs),
    /// Write hourly branch limits for one regime as CSV.
    Ratings(RatingsArgs),
    /// Mean DLR multiplier over a grid of T_C and phi_SLR values.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Directory holding bus.csv, branch.csv, gen.csv, demand.csv, availability.csv
    #[arg(long)]
    case: PathBuf,
    /// Weather CSV: time,lat,lon,temp_k,wind_u_ms,wind_v_ms
    #[arg(long)]
    weather: PathBuf,
    /// Hour positions START..END (end exclusive) into the demand series
    #[arg(long, value_parser = parse_range)]
    hours: Option<Range<usize>>,
    /// Clamp availability above p_max instead of failing
    #[arg(long)]
    clamp_availability: bool,
}

#[derive(Args)]
struct ParamArgs {
    /// TOML file with rating parameters; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maximum conductor temperature, °C
    #[arg(long)]
    tc: Option<f64>,
    /// Ambient temperature behind the static rating, °C
    #[arg(long)]
    ta_slr: Option<f64>,
    /// Wind speed behind the static rating, m/s
    #[arg(long)]
    v_slr: Option<f64>,
    /// Wind attack angle behind the static rating, degrees
    #[arg(long)]
    phi_slr: Option<f64>,
    #[arg(long)]
    contingency_ratio: Option<f64>,
}

impl ParamArgs {
    fn resolve(&self) -> Result<RatingParams> {
        let mut p = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                RatingParams::from_toml_str(&text)?
            }
            None => RatingParams::default(),
        };
        if let Some(v) = self.tc {
            p.t_conductor_c = v;
        }
        if let Some(v) = self.ta_slr {
            p.t_ambient_slr_c = v;
        }
        if let Some(v) = self.v_slr {
            p.v_slr_ms = v;
        }
        if let Some(v) = self.phi_slr {
            p.phi_slr_deg = v;
        }
        if let Some(v) = self.contingency_ratio {
            p.contingency_ratio = v;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Comma-separated regimes; uncongested is always added
    #[arg(long, value_delimiter = ',', default_value = "slr,aar,dlr")]
    regimes: Vec<StudyRegime>,
    /// Slack penalty, $/MWh
    #[arg(long, default_value_t = 2000.0)]
    penalty: f64,
    /// Constraint-generation iteration cap per hour
    #[arg(long, default_value_t = 20)]
    max_iter: usize,
    /// Enforce appended contingency rows at the normal rather than the contingency limit
    #[arg(long)]
    normal_contingency_rows: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Slack bus id (default: lowest-numbered generator bus)
    #[arg(long)]
    slack_bus: Option<u32>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write ptdf.csv and lodf.csv to the output directory
    #[arg(long)]
    dump_factors: bool,
}

#[derive(Args)]
struct RatingsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value = "dlr")]
    regime: Regime,
    /// Output CSV (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Conductor temperatures to sweep, °C
    #[arg(long = "tc-list", value_delimiter = ',', default_value = "78,100,110")]
    tc_list: Vec<f64>,
    /// Static-rating attack angles to sweep, degrees
    #[arg(long = "phi-list", value_delimiter = ',', default_value = "0,45,90")]
    phi_list: Vec<f64>,
}

fn parse_range(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let start = a.trim().parse::<usize>().map_err(|e| e.to_string())?;
    let end = b.trim().parse::<usize>().map_err(|e| e.to_string())?;
    if end <= start {
        return Err(format!("empty range {s}"));
    }
    Ok(start..end)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_summary(s: &RunSummary) {
    println!("hours: {} requested, {} common", s.hours_requested, s.common_hours.len());
    if !s.weather_missing_hours.is_empty() {
        println!("hours without weather (rated at SLR): {}", s.weather_missing_hours.join(" "));
    }
    println!("{:<12} {:>16} {:>16} {:>12} {:>6} {:>6}", "regime", "cost_usd", "congestion_usd", "co2_mmt", "fail", "unconv");
    for r in &s.regimes {
        println!(
            "{:<12} {:>16.2} {:>16.2} {:>12.6} {:>6} {:>6}",
            r.regime.as_str(),
            r.total_cost_usd,
            r.congestion_cost_usd,
            r.emissions_mmt_co2,
            r.infeasible_hours.len(),
            r.unconverged_hours.len()
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = RunConfig::new(&args.input.case, &args.input.weather);
    cfg.hours = args.input.hours;
    cfg.series = SeriesOptions { clamp_availability: args.input.clamp_availability };
    cfg.params = args.params.resolve()?;
    cfg.regimes = args.regimes;
    cfg.scopf = ScopfOptions {
        max_iter: args.max_iter,
        penalty_price: args.penalty,
        row_limit: if args.normal_contingency_rows {
            ContingencyRowLimit::Normal
        } else {
            ContingencyRowLimit::Contingency
        },
        ..ScopfOptions::default()
    };
    cfg.workers = args.workers;
    cfg.slack_bus = args.slack_bus.map(BusId);
    cfg.output_dir = args.out;
    cfg.dump_factors = args.dump_factors;
    if cfg.dump_factors && cfg.output_dir.is_none() {
        bail!("--dump-factors needs --out");
    }
    let summary = run(&cfg)?;
    print_summary(&summary);
    Ok(if summary.all_hours_ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn load_inputs(input: &InputArgs) -> Result<(Network, HourlySeries, WeatherGrid)> {
    let net = load_network(&input.case)?;
    let series = load_hourly_series(&input.case, &net, SeriesOptions { clamp_availability: input.clamp_availability })?;
    let weather = load_weather(&input.weather)?;
    Ok((net, series, weather))
}

fn selected_hours(input: &InputArgs, series: &HourlySeries) -> Result<Range<usize>> {
    let range = input.hours.clone().unwrap_or(0..series.len());
    if range.end > series.len() {
        bail!("hour range ends at {} but the series has {} hours", range.end, series.len());
    }
    Ok(range)
}

fn cmd_ratings(args: RatingsArgs) -> Result<ExitCode> {
    let params = args.params.resolve()?;
    let (net, series, weather) = load_inputs(&args.input)?;
    let range = selected_hours(&args.input, &series)?;
    let ratings = build_rating_series(&net, &weather, &series.hours[range], args.regime, &params)?;
    let mut out = output(&args.out)?;
    write_ratings_csv(&ratings, &net, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let params = args.params.resolve()?;
    let (net, series, weather) = load_inputs(&args.input)?;
    let range = selected_hours(&args.input, &series)?;
    let grid: Vec<(f64, f64)> = args.tc_list.iter().flat_map(|&tc| args.phi_list.iter().map(move |&phi| (tc, phi))).collect();
    let rows = sweep_parameters(&net, &weather, &series.hours[range], &params, &grid)?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "t_conductor_c,phi_slr_deg,mean_dlr_multiplier,samples")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t_conductor_c, r.phi_slr_deg, r.mean_multiplier, r.samples)?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Ratings(a) => cmd_ratings(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
