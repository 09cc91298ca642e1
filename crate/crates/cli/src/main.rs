use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xxz_core::analysis::{
    compare, evaluate, limit_field, limit_temperature, reproduce_figure, run_sweep, write_csv, write_json,
    write_limit_csv, Axis, AxisVar, CurvePoint, LimitResult, SweepSpec, CSV_COLUMNS,
};
use xxz_core::{ModelParams, Status, Tier};

mod config;
use config::ConfigFile;

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_NOT_APPLICABLE: u8 = 4;

/// Thermal pairwise entanglement in the fully connected XXZ spin model.
///
/// Energies (b, T) are in units of v unless --v is given.
#[derive(Parser)]
#[command(name = "xxz", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Default)]
struct Common {
    /// key = value file with defaults for any of the flags below
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of spins
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Coupling strength
    #[arg(long, global = true)]
    v: Option<f64>,
    /// Anisotropy (gamma <= 1)
    #[arg(long, global = true, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Magnetic field
    #[arg(long, global = true, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Temperature
    #[arg(long = "T", global = true)]
    t: Option<f64>,
    /// Tier: bruteforce, exact, cspa, spa, cmfa, mfa
    #[arg(long, global = true)]
    tier: Option<Tier>,
    /// Grid axis "axis:min:max:count[:log]" with axis b or T (repeatable)
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Vec<String>,
    /// Approximation variant within the tier family: cspa|spa or cmfa|mfa
    #[arg(long, global = true)]
    mode: Option<Tier>,
    #[arg(long, global = true, value_enum)]
    out_format: Option<OutFormat>,
    /// Write files here instead of standard output
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum OutFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Collective moments <S_z>, <S_z^2>, <S^2> and ln Z at one point
    Moments,
    /// Concurrence and entanglement of formation at one point
    Concurrence,
    /// Evaluate a tier over a grid in b and/or T
    Sweep,
    /// Limit temperature at fixed b (or along a b grid)
    LimitTemp,
    /// Limit field at fixed T (or along a T grid)
    LimitField,
    /// Write the data and a gnuplot script for one figure
    Figure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        id: u8,
    },
    /// Run two tiers on one grid and report C differences
    Compare {
        /// The second tier
        #[arg(long)]
        against: Tier,
    },
}

struct Settings {
    params: ModelParams,
    t_given: bool,
    b_given: bool,
    tier: Tier,
    grid: Vec<Axis>,
    format: OutFormat,
    out_dir: Option<PathBuf>,
}

fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str) -> Result<Option<T>, String> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn apply_mode(tier: Tier, mode: Option<Tier>) -> Result<Tier, String> {
    let Some(mode) = mode else { return Ok(tier) };
    let family = |t: Tier| match t {
        Tier::Cspa | Tier::Spa => 1,
        Tier::Cmfa | Tier::Mfa => 2,
        _ => 0,
    };
    if family(mode) == 0 || family(mode) != family(tier) {
        return Err(format!("--mode {mode} does not apply to tier {tier}"));
    }
    Ok(mode)
}

fn resolve(c: &Common) -> Result<Settings, String> {
    let cfg = match &c.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let n = pick(c.n, &cfg, "n")?.unwrap_or(20);
    let v = pick(c.v, &cfg, "v")?.unwrap_or(1.0);
    let gamma = pick(c.gamma, &cfg, "gamma")?.unwrap_or(1.0);
    let b = pick(c.b, &cfg, "b")?;
    let t = pick(c.t, &cfg, "T")?;
    let tier = pick(c.tier, &cfg, "tier")?.unwrap_or(Tier::Exact);
    let tier = apply_mode(tier, pick(c.mode, &cfg, "mode")?)?;
    let format = match (c.out_format, cfg.values.get("out-format").map(String::as_str)) {
        (Some(f), _) => f,
        (None, None) => OutFormat::Csv,
        (None, Some("csv")) => OutFormat::Csv,
        (None, Some("json")) => OutFormat::Json,
        (None, Some(other)) => return Err(format!("config: bad out-format '{other}'")),
    };
    let out_dir = c.out_dir.clone().or_else(|| cfg.values.get("out-dir").map(PathBuf::from));
    let grid_specs = if c.grid.is_empty() { &cfg.grids } else { &c.grid };
    let grid = grid_specs
        .iter()
        .map(|g| g.parse::<Axis>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let params = ModelParams { n, v, gamma, b: b.unwrap_or(0.0), t: t.unwrap_or(1.0) };
    Ok(Settings { params, t_given: t.is_some(), b_given: b.is_some(), tier, grid, format, out_dir })
}

fn open_output(dir: &Option<PathBuf>, name: &str) -> io::Result<Box<dyn Write>> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Box::new(io::BufWriter::new(fs::File::create(d.join(name))?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn ext(f: OutFormat) -> &'static str {
    match f {
        OutFormat::Csv => "csv",
        OutFormat::Json => "json",
    }
}

fn emit_points<S: Serialize>(s: &Settings, name: &str, spec: &S, points: &[CurvePoint], columns: &[&str]) -> Result<(), String> {
    let file = format!("{name}.{}", ext(s.format));
    let out = open_output(&s.out_dir, &file).map_err(|e| e.to_string())?;
    match s.format {
        OutFormat::Csv => write_csv(out, points, columns),
        OutFormat::Json => write_json(out, spec, points),
    }
    .map_err(|e| e.to_string())
}

/// 0 if any point is ok, 4 if every point is not-applicable, 3 otherwise.
fn points_exit(points: &[CurvePoint]) -> u8 {
    for p in points.iter().filter(|p| p.status != Status::Ok) {
        if let Some(msg) = &p.message {
            eprintln!("{} at b = {}, T = {}: {}", p.status, p.params.b, p.params.t, msg);
        }
    }
    if points.iter().any(|p| p.status == Status::Ok) {
        0
    } else if points.iter().all(|p| p.status == Status::NotApplicable) {
        EXIT_NOT_APPLICABLE
    } else {
        EXIT_NUMERICAL
    }
}

fn require(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

#[derive(Serialize)]
struct PointSpec {
    tier: Tier,
    params: ModelParams,
}

fn single_point(s: &Settings, name: &str, columns: &[&str]) -> Result<u8, String> {
    require(s.t_given, "--T is required")?;
    require(s.grid.is_empty(), "--grid is only used by sweep, compare and the limit commands")?;
    s.params.validate().map_err(|e| e.to_string())?;
    let pt = evaluate(s.tier, &s.params);
    emit_points(s, name, &PointSpec { tier: s.tier, params: s.params }, std::slice::from_ref(&pt), columns)?;
    Ok(points_exit(std::slice::from_ref(&pt)))
}

fn sweep_spec(s: &Settings, tier: Tier) -> Result<SweepSpec, String> {
    require(!s.grid.is_empty(), "a --grid is required")?;
    for a in &s.grid {
        match a.var {
            AxisVar::T => require(!s.t_given, "--T conflicts with a T grid")?,
            AxisVar::B => require(!s.b_given, "--b conflicts with a b grid")?,
        }
    }
    let varies_t = s.grid.iter().any(|a| a.var == AxisVar::T);
    require(varies_t || s.t_given, "--T is required unless the grid varies T")?;
    let spec = SweepSpec { tier, grid: s.grid.clone(), fixed: s.params, outputs: vec![] };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

#[derive(Serialize)]
struct LimitDoc<'a> {
    kind: &'a str,
    rows: Vec<LimitRow>,
}

#[derive(Serialize)]
struct LimitRow {
    params: ModelParams,
    result: LimitResult,
}

fn limits(s: &Settings, temperature: bool) -> Result<u8, String> {
    let (scan, fixed_name, limit_name) = if temperature { (AxisVar::T, "b", "T_L") } else { (AxisVar::B, "T", "b_L") };
    let fixed_var = if temperature { AxisVar::B } else { AxisVar::T };
    require(s.grid.iter().all(|a| a.var == fixed_var), &format!("the {} command scans {} itself; --grid may only vary {fixed_name}",
        if temperature { "limit-temp" } else { "limit-field" },
        if scan == AxisVar::T { "T" } else { "b" }))?;
    require(s.grid.len() <= 1, "at most one --grid axis")?;
    if !temperature {
        require(s.t_given || !s.grid.is_empty(), "--T is required")?;
    }
    let values = match s.grid.first() {
        Some(a) => a.values(),
        None => vec![if temperature { s.params.b } else { s.params.t }],
    };
    let mut rows = Vec::new();
    for x in values {
        let p = if temperature { s.params.with_b(x) } else { s.params.with_t(x) };
        let r = if temperature { limit_temperature(&p, s.tier) } else { limit_field(&p, s.tier) }.map_err(|e| e.to_string())?;
        rows.push((p, r));
    }
    let name = if temperature { "limit_temperature" } else { "limit_field" };
    let out = open_output(&s.out_dir, &format!("{name}.{}", ext(s.format))).map_err(|e| e.to_string())?;
    match s.format {
        OutFormat::Csv => write_limit_csv(out, &rows, fixed_name, limit_name).map_err(|e| e.to_string())?,
        OutFormat::Json => {
            let doc = LimitDoc {
                kind: limit_name,
                rows: rows.iter().map(|(p, r)| LimitRow { params: *p, result: r.clone() }).collect(),
            };
            serde_json::to_writer_pretty(out, &doc).map_err(|e| e.to_string())?;
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct CompareDoc<'a> {
    spec: &'a SweepSpec,
    against: Tier,
    comparison: xxz_core::analysis::Comparison,
}

fn run(cli: Cli) -> Result<u8, String> {
    let s = resolve(&cli.common)?;
    match cli.command {
        Command::Moments => single_point(&s, "moments", &["tier", "n", "v", "gamma", "b", "T", "logZ", "Sz", "Sz2", "S2", "status"]),
        Command::Concurrence => single_point(&s, "concurrence", &["tier", "n", "v", "gamma", "b", "T", "C", "nC", "EoF", "status"]),
        Command::Sweep => {
            let spec = sweep_spec(&s, s.tier)?;
            let points = run_sweep(&spec).map_err(|e| e.to_string())?;
            emit_points(&s, "sweep", &spec, &points, &CSV_COLUMNS)?;
            Ok(points_exit(&points))
        }
        Command::LimitTemp => limits(&s, true),
        Command::LimitField => limits(&s, false),
        Command::Figure { id } => {
            let dir = s.out_dir.clone().unwrap_or_else(|| PathBuf::from("figures"));
            let files = reproduce_figure(id, &dir).map_err(|e| e.to_string())?;
            for f in files {
                println!("{}", display_path(&f));
            }
            Ok(0)
        }
        Command::Compare { against } => {
            let spec = sweep_spec(&s, s.tier)?;
            let (a, b, cmp) = compare(&spec, against).map_err(|e| e.to_string())?;
            if let Some(dir) = &s.out_dir {
                let both: Vec<CurvePoint> = a.iter().chain(&b).cloned().collect();
                let out = open_output(&Some(dir.clone()), "compare.csv").map_err(|e| e.to_string())?;
                write_csv(out, &both, &CSV_COLUMNS).map_err(|e| e.to_string())?;
            }
            match s.format {
                OutFormat::Csv => println!(
                    "{} vs {}: {} of {} points compared, max |dC| = {:e}, mean |dC| = {:e}",
                    s.tier, against, cmp.compared, cmp.points, cmp.max_abs_diff, cmp.mean_abs_diff
                ),
                OutFormat::Json => {
                    let doc = CompareDoc { spec: &spec, against, comparison: cmp };
                    println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?);
                }
            }
            if cmp.compared > 0 {
                Ok(0)
            } else {
                Ok(points_exit(&a).max(points_exit(&b)).max(EXIT_NUMERICAL))
            }
        }
    }
}

fn display_path(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
