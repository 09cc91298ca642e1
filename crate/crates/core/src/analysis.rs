//! Tier dispatch, parameter sweeps, limit temperatures and fields, figure data
//! and CSV/JSON output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bruteforce::{brute_force, pair_density_concurrence, BRUTE_FORCE_MAX_N};
use crate::cmfa::{cmfa_concurrence, cmfa_moments, critical_temperature, MeanFieldMode};
use crate::cspa::{cspa_moments, CspaMode};
use crate::entanglement::{
    concurrence, CollectiveMoments, ConcurrenceResult, PairState, Status, Tier,
};
use crate::error::{Error, Result};
use crate::exact::{exact_thermal, ground_state_moments};
use crate::model::ModelParams;
use crate::roots::{linspace, logspace, positive_intervals, PositiveInterval};

/// Column order of every CSV and JSON point record.
pub const CSV_COLUMNS: [&str; 14] = [
    "tier", "n", "v", "gamma", "b", "T", "logZ", "Sz", "Sz2", "S2", "C", "nC", "EoF", "status",
];

pub const LIMIT_PROBES: usize = 64;
pub const LIMIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub tier: Tier,
    pub params: ModelParams,
    pub moments: Option<CollectiveMoments>,
    pub concurrence: Option<ConcurrenceResult>,
    pub status: Status,
    pub message: Option<String>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CurvePoint {
    pub fn c(&self) -> Option<f64> {
        self.concurrence.map(|c| c.concurrence)
    }

    pub fn row(&self) -> PointRecord {
        let p = &self.params;
        let m = self.moments.as_ref();
        let finite = |x: f64| x.is_finite().then_some(x + 0.0);
        PointRecord {
            tier: self.tier.name().to_string(),
            n: p.n,
            v: p.v,
            gamma: p.gamma,
            b: p.b,
            t: p.t,
            log_z: m.and_then(|m| finite(m.log_z)),
            sz: m.and_then(|m| finite(m.sz)),
            sz2: m.and_then(|m| finite(m.sz2)),
            s2: m.and_then(|m| finite(m.s2)),
            c: self.c(),
            nc: self.c().map(|c| c * p.n as f64),
            eof: self.concurrence.map(|c| c.eof),
            status: self.status.name().to_string(),
        }
    }
}

/// One output row; `None` fields are written empty (CSV) or null (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub tier: String,
    pub n: usize,
    pub v: f64,
    pub gamma: f64,
    pub b: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "logZ")]
    pub log_z: Option<f64>,
    #[serde(rename = "Sz")]
    pub sz: Option<f64>,
    #[serde(rename = "Sz2")]
    pub sz2: Option<f64>,
    #[serde(rename = "S2")]
    pub s2: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "nC")]
    pub nc: Option<f64>,
    #[serde(rename = "EoF")]
    pub eof: Option<f64>,
    pub status: String,
}

pub fn status_of(err: &Error) -> Status {
    match err {
        Error::Breakdown { .. } | Error::RpaBreakdown { .. } => Status::Breakdown,
        Error::NotApplicable(_) | Error::TooLarge { .. } => Status::NotApplicable,
        _ => Status::Error,
    }
}

fn pair_concurrence(m: &CollectiveMoments, n: usize, tier: Tier) -> Result<ConcurrenceResult> {
    Ok(concurrence(&PairState::from_moments(m, n)?, tier))
}

fn evaluate_inner(tier: Tier, p: &ModelParams) -> Result<(Option<CollectiveMoments>, ConcurrenceResult)> {
    p.validate()?;
    match tier {
        Tier::Bruteforce => {
            let r = brute_force(p)?;
            let c = ConcurrenceResult::from_value(pair_density_concurrence(&r.rho2), tier);
            Ok((Some(r.moments), c))
        }
        Tier::Exact => {
            if p.t == 0.0 {
                let m = ground_state_moments(p);
                let c = pair_concurrence(&m, p.n, tier)?;
                Ok((Some(m), c))
            } else {
                let th = exact_thermal(p)?;
                Ok((Some(th.moments), concurrence(&th.pair, tier)))
            }
        }
        Tier::Cspa | Tier::Spa => {
            let mode = if tier == Tier::Cspa { CspaMode::Cspa } else { CspaMode::Spa };
            let m = cspa_moments(p, mode)?;
            let c = pair_concurrence(&m, p.n, tier)?;
            Ok((Some(m), c))
        }
        Tier::Cmfa | Tier::Mfa => {
            let mode = if tier == Tier::Cmfa { MeanFieldMode::Cmfa } else { MeanFieldMode::Mfa };
            let c = cmfa_concurrence(p, mode)?;
            if c.status != Status::Ok {
                return Ok((None, c));
            }
            Ok((Some(cmfa_moments(p, mode)?), c))
        }
    }
}

/// Evaluates one tier at one parameter point; failures are recorded in the
/// status rather than returned.
pub fn evaluate(tier: Tier, params: &ModelParams) -> CurvePoint {
    let start = Instant::now();
    let (moments, concurrence, status, message) = match evaluate_inner(tier, params) {
        Ok((m, c)) if c.status == Status::Ok => (m, Some(c), Status::Ok, None),
        Ok((m, c)) => (m, None, c.status, None),
        Err(e) => (None, None, status_of(&e), Some(e.to_string())),
    };
    CurvePoint {
        tier,
        params: *params,
        moments,
        concurrence,
        status,
        message,
        wall_time: start.elapsed(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisVar {
    #[serde(rename = "b")]
    B,
    #[serde(rename = "T")]
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub var: AxisVar,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

impl Axis {
    pub fn linear(var: AxisVar, min: f64, max: f64, count: usize) -> Self {
        Self { var, min, max, count, log: false }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.log {
            logspace(self.min, self.max, self.count)
        } else {
            linspace(self.min, self.max, self.count)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::Domain(format!("axis count must be >= 2, got {}", self.count)));
        }
        if !(self.min < self.max) {
            return Err(Error::Domain(format!("axis needs min < max, got {} .. {}", self.min, self.max)));
        }
        if self.log && self.min <= 0.0 {
            return Err(Error::Domain("log axis needs min > 0".into()));
        }
        Ok(())
    }
}

/// `axis:min:max:count[:log]`, axis one of `b`, `T`.
impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("bad grid '{s}', expected axis:min:max:count[:log]"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(bad());
        }
        let var = match parts[0] {
            "b" => AxisVar::B,
            "T" | "t" => AxisVar::T,
            _ => return Err(bad()),
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let count = parts[3].trim().parse::<usize>().map_err(|_| bad())?;
        let log = match parts.get(4) {
            None => false,
            Some(&"log") => true,
            Some(&"linear") | Some(&"lin") => false,
            Some(_) => return Err(bad()),
        };
        let axis = Axis { var, min: num(parts[1])?, max: num(parts[2])?, count, log };
        axis.validate()?;
        Ok(axis)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub tier: Tier,
    pub grid: Vec<Axis>,
    pub fixed: ModelParams,
    /// Requested columns, a subset of [`CSV_COLUMNS`]; empty means all.
    pub outputs: Vec<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Domain("sweep needs at least one axis".into()));
        }
        for a in &self.grid {
            a.validate()?;
        }
        if self.grid.len() == 2 && self.grid[0].var == self.grid[1].var || self.grid.len() > 2 {
            return Err(Error::Domain("sweep axes must be distinct, at most one each of b and T".into()));
        }
        if self.tier == Tier::Bruteforce && self.fixed.n > BRUTE_FORCE_MAX_N {
            return Err(Error::TooLarge { n: self.fixed.n, cap: BRUTE_FORCE_MAX_N });
        }
        for c in &self.outputs {
            if !CSV_COLUMNS.contains(&c.as_str()) {
                return Err(Error::Domain(format!("unknown output column '{c}'")));
            }
        }
        let mut probe = self.fixed;
        for a in &self.grid {
            match a.var {
                AxisVar::B => probe.b = a.min,
                AxisVar::T => probe.t = a.min,
            }
        }
        probe.validate()
    }

    /// Grid points in row-major order (first axis slowest).
    pub fn points(&self) -> Vec<ModelParams> {
        let mut out = vec![self.fixed];
        for a in &self.grid {
            let vals = a.values();
            out = out
                .iter()
                .flat_map(|p| {
                    vals.iter().map(move |&x| match a.var {
                        AxisVar::B => p.with_b(x),
                        AxisVar::T => p.with_t(x),
                    })
                })
                .collect();
        }
        out
    }

    pub fn columns(&self) -> Vec<&str> {
        if self.outputs.is_empty() {
            CSV_COLUMNS.to_vec()
        } else {
            CSV_COLUMNS.iter().copied().filter(|c| self.outputs.iter().any(|o| o == c)).collect()
        }
    }
}

/// Evaluates the tier at every grid point in parallel; the result is ordered
/// by grid index.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CurvePoint>> {
    spec.validate()?;
    Ok(spec.points().par_iter().map(|p| evaluate(spec.tier, p)).collect())
}

/// Entanglement margin: positive exactly when the pair is entangled, `None`
/// where the tier gives no answer.
pub fn entanglement_sign(tier: Tier, p: &ModelParams) -> Option<f64> {
    if tier.is_separable() {
        return Some(-1.0);
    }
    if tier == Tier::Exact && p.t > 0.0 {
        return exact_thermal(p).ok()?.log_pair.margin();
    }
    let pt = evaluate(tier, p);
    if pt.status != Status::Ok {
        return None;
    }
    if tier == Tier::Cmfa && pt.c() == Some(0.0) {
        return Some(-1.0);
    }
    PairState::from_moments(&pt.moments?, p.n).ok()?.margin()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitResult {
    pub tier: Tier,
    /// Entangled intervals of the scanned variable. A missing lower edge
    /// means entanglement from the bottom of the probe range; a missing upper
    /// edge means it persists past the top.
    pub intervals: Vec<(Option<f64>, Option<f64>)>,
    /// The limit value, `None` if no entanglement was found or it was not
    /// bounded within the probe range.
    pub limit: Option<f64>,
}

impl LimitResult {
    fn from_intervals(tier: Tier, iv: Vec<PositiveInterval>, limit: Option<f64>) -> Self {
        Self {
            tier,
            intervals: iv.into_iter().map(|i| (i.lower, i.upper)).collect(),
            limit,
        }
    }

    /// No entanglement anywhere on the probe range.
    pub fn is_zero_marker(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lower edges of entangled intervals (onset temperatures or fields).
    pub fn onsets(&self) -> Vec<f64> {
        self.intervals.iter().filter_map(|i| i.0).collect()
    }
}

/// Limit temperature: the largest T where C(T) drops to zero, probing a log
/// grid in [1e-3 v, v] and bisecting every sign change to 1e-6 v.
pub fn limit_temperature(params: &ModelParams, tier: Tier) -> Result<LimitResult> {
    params.with_t(1.0).validate()?;
    let v = params.v;
    let grid = logspace(1e-3 * v, v, LIMIT_PROBES);
    let sign = |t: f64| entanglement_sign(tier, &params.with_t(t));
    let iv = positive_intervals(sign, &grid, LIMIT_TOLERANCE * v);
    let limit = iv.last().and_then(|i| i.upper);
    Ok(LimitResult::from_intervals(tier, iv, limit))
}

/// Fraction of the symmetric-state bound 2/n below which the main band of a
/// limit-field scan is considered ended when C has no zero.
pub const APPRECIABLE_FRACTION: f64 = 1e-6;

/// Limit field at fixed T: the upper edge of the entangled band that starts
/// lowest in |b|, scanning b in [0, 2 max(gamma, 0.5) v + 10 T]. Further
/// bands (the weak far-field entanglement of the exact tier) are kept in
/// `intervals`. When the first band runs into the far-field tail without a
/// zero, the limit is where C falls below 1e-6 (2/n).
pub fn limit_field(params: &ModelParams, tier: Tier) -> Result<LimitResult> {
    params.with_b(0.0).validate()?;
    let v = params.v;
    let top = 2.0 * params.gamma.max(0.5) * v + 10.0 * params.t;
    let grid = linspace(0.0, top, 4 * LIMIT_PROBES + 1);
    let sign = |b: f64| entanglement_sign(tier, &params.with_b(b));
    let iv = positive_intervals(sign, &grid, LIMIT_TOLERANCE * v);
    let mut limit = iv.first().and_then(|i| i.upper);
    if limit.is_none() && !iv.is_empty() {
        let floor = APPRECIABLE_FRACTION * 2.0 / params.n as f64;
        let appreciable = |b: f64| evaluate(tier, &params.with_b(b)).c().map(|c| c - floor);
        limit = positive_intervals(appreciable, &grid, LIMIT_TOLERANCE * v).first().and_then(|i| i.upper);
    }
    Ok(LimitResult::from_intervals(tier, iv, limit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub points: usize,
    pub compared: usize,
    pub max_abs_diff: f64,
    pub mean_abs_diff: f64,
}

/// Runs two tiers on the same grid and compares C where both are ok.
pub fn compare(spec: &SweepSpec, other: Tier) -> Result<(Vec<CurvePoint>, Vec<CurvePoint>, Comparison)> {
    let a = run_sweep(spec)?;
    let b = run_sweep(&SweepSpec { tier: other, ..spec.clone() })?;
    let diffs: Vec<f64> = a
        .iter()
        .zip(&b)
        .filter_map(|(x, y)| Some((x.c()? - y.c()?).abs()))
        .collect();
    let cmp = Comparison {
        points: a.len(),
        compared: diffs.len(),
        max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
        mean_abs_diff: if diffs.is_empty() { 0.0 } else { diffs.iter().sum::<f64>() / diffs.len() as f64 },
    };
    Ok((a, b, cmp))
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("output error: {e}"))
}

/// Writes the records with the selected columns (schema order).
pub fn write_csv<W: Write>(out: W, points: &[CurvePoint], columns: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(csv_error)?;
    for p in points {
        let rec = p.row();
        let fmt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
        let fields: Vec<String> = columns
            .iter()
            .map(|c| match *c {
                "tier" => rec.tier.clone(),
                "n" => rec.n.to_string(),
                "v" => rec.v.to_string(),
                "gamma" => rec.gamma.to_string(),
                "b" => rec.b.to_string(),
                "T" => rec.t.to_string(),
                "logZ" => fmt(rec.log_z),
                "Sz" => fmt(rec.sz),
                "Sz2" => fmt(rec.sz2),
                "S2" => fmt(rec.s2),
                "C" => fmt(rec.c),
                "nC" => fmt(rec.nc),
                "EoF" => fmt(rec.eof),
                "status" => rec.status.clone(),
                _ => String::new(),
            })
            .collect();
        w.write_record(&fields).map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)?;
    Ok(())
}

/// `{"spec": ..., "points": [records]}` with all columns.
pub fn write_json<W: Write, S: Serialize>(out: W, spec: &S, points: &[CurvePoint]) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, S: Serialize> {
        spec: &'a S,
        points: Vec<PointRecord>,
    }
    let doc = Doc { spec, points: points.iter().map(CurvePoint::row).collect() };
    serde_json::to_writer_pretty(out, &doc).map_err(csv_error)
}

/// Limit-value rows: tier,n,v,gamma,<fixed var>,<limit>,intervals,status.
pub fn write_limit_csv<W: Write>(out: W, rows: &[(ModelParams, LimitResult)], fixed: &str, limit: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tier", "n", "v", "gamma", fixed, limit, "intervals", "status"]).map_err(csv_error)?;
    for (p, r) in rows {
        let x = if fixed == "b" { p.b } else { p.t };
        let edge = |e: Option<f64>| e.map(|x| x.to_string()).unwrap_or_default();
        let intervals = r
            .intervals
            .iter()
            .map(|(a, b)| format!("{}..{}", edge(*a), edge(*b)))
            .collect::<Vec<_>>()
            .join(";");
        let status = if r.is_zero_marker() { "no-entanglement" } else { "ok" };
        w.write_record([
            r.tier.name().to_string(),
            p.n.to_string(),
            p.v.to_string(),
            p.gamma.to_string(),
            x.to_string(),
            edge(r.limit),
            intervals,
            status.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(csv_error)?;
    Ok(())
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))
}

fn sweep_file(dir: &Path, name: &str, specs: &[SweepSpec]) -> Result<(PathBuf, Vec<CurvePoint>)> {
    let mut all = Vec::new();
    for s in specs {
        all.extend(run_sweep(s)?);
    }
    let path = dir.join(name);
    write_csv(create(&path)?, &all, &CSV_COLUMNS)?;
    Ok((path, all))
}

fn limit_file(dir: &Path, name: &str, rows: Vec<(ModelParams, Tier)>) -> Result<(PathBuf, Vec<(ModelParams, LimitResult)>)> {
    let results: Vec<(ModelParams, LimitResult)> = rows
        .par_iter()
        .map(|(p, tier)| {
            let r = limit_temperature(p, *tier).unwrap_or(LimitResult { tier: *tier, intervals: vec![], limit: None });
            (*p, r)
        })
        .collect();
    let path = dir.join(name);
    write_limit_csv(create(&path)?, &results, "b", "T_L")?;
    Ok((path, results))
}

fn base(n: usize, gamma: f64) -> ModelParams {
    ModelParams { n, v: 1.0, gamma, b: 0.0, t: 1.0 }
}

fn spec(tier: Tier, fixed: ModelParams, axis: Axis) -> SweepSpec {
    SweepSpec { tier, grid: vec![axis], fixed, outputs: vec![] }
}

/// Gnuplot script plotting `nC` (column 12) or `C` (column 11) against
/// column `x` of each CSV, one curve per tier present in the file.
fn script_block(out: &mut String, title: &str, file: &str, x: usize, xlabel: &str, y: usize, ylabel: &str, tiers: &[Tier], keys: &[String]) {
    let _ = writeln!(out, "set title '{title}'");
    let _ = writeln!(out, "set xlabel '{xlabel}'");
    let _ = writeln!(out, "set ylabel '{ylabel}'");
    let mut curves = Vec::new();
    for key in keys {
        for t in tiers {
            curves.push(format!(
                "'{file}' using (strcol(1) eq '{t}' && {key} ? ${x} : 1/0):{y} with lines title '{t} {label}'",
                t = t.name(),
                label = key_label(key),
            ));
        }
    }
    let _ = writeln!(out, "plot {}", curves.join(", \\\n     "));
}

fn key_label(key: &str) -> String {
    key.replace("abs($", "").replace(')', "").replace("$2", "n").replace("$6", "T").replace("$5", "b").replace("$4", "gamma")
}

const GNUPLOT_HEADER: &str = "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,1200\n";

/// Emits the data and a gnuplot script for figure `id` (1 to 5) into
/// `out_dir`; returns the written paths. Tier failures are kept in the
/// status column.
pub fn reproduce_figure(id: u8, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::Domain(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut files = Vec::new();
    let mut gp = String::from(GNUPLOT_HEADER);
    let _ = writeln!(gp, "set output 'fig{id}.png'");
    match id {
        1 => {
            let _ = writeln!(gp, "set multiplot layout 2,1");
            let tiers = [Tier::Exact, Tier::Cmfa];
            for (t, name) in [(0.005, "fig1_T0.005.csv"), (0.025, "fig1_T0.025.csv")] {
                let specs: Vec<SweepSpec> = tiers
                    .iter()
                    .map(|&tier| spec(tier, base(20, 1.0).with_t(t), Axis::linear(AxisVar::B, 0.0, 1.1, 441)))
                    .collect();
                let (path, _) = sweep_file(out_dir, name, &specs)?;
                files.push(path);
                script_block(&mut gp, &format!("n = 20, T/v = {t}"), name, 5, "b/v", 12, "nC", &tiers, &["1".into()]);
            }
        }
        2 => {
            let _ = writeln!(gp, "set multiplot layout 2,1");
            let tiers = [Tier::Exact, Tier::Cmfa, Tier::Cspa];
            let temps = [0.05, 0.1, 0.2];
            let mut specs = Vec::new();
            for &tier in &tiers {
                for &t in &temps {
                    specs.push(spec(tier, base(20, 1.0).with_t(t), Axis::linear(AxisVar::B, 0.0, 1.5, 151)));
                }
            }
            let (path, _) = sweep_file(out_dir, "fig2_field.csv", &specs)?;
            files.push(path);
            let keys: Vec<String> = temps.iter().map(|t| format!("abs($6-{t})<1e-12")).collect();
            script_block(&mut gp, "n = 20, C vs b", "fig2_field.csv", 5, "b/v", 11, "C", &tiers, &keys);
            let fields = [0.0, 0.5, 0.9, 1.1];
            let mut specs = Vec::new();
            for &tier in &tiers {
                for &b in &fields {
                    specs.push(spec(
                        tier,
                        base(20, 1.0).with_b(b),
                        Axis { var: AxisVar::T, min: 0.005, max: 0.6, count: 120, log: false },
                    ));
                }
            }
            let (path, _) = sweep_file(out_dir, "fig2_temperature.csv", &specs)?;
            files.push(path);
            let keys: Vec<String> = fields.iter().map(|b| format!("abs($5-{b})<1e-12")).collect();
            script_block(&mut gp, "n = 20, C vs T", "fig2_temperature.csv", 6, "T/v", 11, "C", &tiers, &keys);
        }
        3 => {
            let _ = writeln!(gp, "set multiplot layout 2,1");
            let tiers = [Tier::Exact, Tier::Cmfa, Tier::Cspa];
            let sizes = [20usize, 100, 1000, 8810];
            let mut specs = Vec::new();
            for &tier in &tiers {
                for &n in &sizes {
                    if tier == Tier::Cspa && n > 1000 {
                        continue;
                    }
                    specs.push(spec(tier, base(n, 1.0).with_t(0.1), Axis::linear(AxisVar::B, 0.0, 1.1, 111)));
                }
            }
            let (path, _) = sweep_file(out_dir, "fig3_field.csv", &specs)?;
            files.push(path);
            let keys: Vec<String> = sizes.iter().map(|n| format!("$2=={n}")).collect();
            script_block(&mut gp, "T/v = 0.1, C vs b", "fig3_field.csv", 5, "b/v", 11, "C", &tiers, &keys);
            let mut specs = Vec::new();
            for &tier in &[Tier::Exact, Tier::Cmfa] {
                for &n in &sizes[..3] {
                    specs.push(spec(tier, base(n, 1.0).with_b(0.5), Axis::linear(AxisVar::T, 0.005, 0.4, 80)));
                }
            }
            let (path, _) = sweep_file(out_dir, "fig3_temperature.csv", &specs)?;
            files.push(path);
            let keys: Vec<String> = sizes[..3].iter().map(|n| format!("$2=={n}")).collect();
            script_block(&mut gp, "b/v = 0.5, C vs T", "fig3_temperature.csv", 6, "T/v", 11, "C", &[Tier::Exact, Tier::Cmfa], &keys);
        }
        4 => {
            let fields = linspace(0.0, 2.0, 41);
            let sizes = [20usize, 100, 1000];
            let mut rows = Vec::new();
            for &n in &sizes {
                for &b in &fields {
                    rows.push((base(n, 1.0).with_b(b), Tier::Exact));
                    rows.push((base(n, 1.0).with_b(b), Tier::Cmfa));
                    if n <= 100 {
                        rows.push((base(n, 1.0).with_b(b), Tier::Cspa));
                    }
                }
            }
            let (path, _) = limit_file(out_dir, "fig4_limit_temperature.csv", rows)?;
            files.push(path);
            let tc_path = out_dir.join("fig4_critical_temperature.csv");
            let mut w = csv::Writer::from_writer(create(&tc_path)?);
            w.write_record(["b", "Tc"]).map_err(csv_error)?;
            for &b in &fields {
                w.write_record([b.to_string(), critical_temperature(b, 1.0).to_string()]).map_err(csv_error)?;
            }
            w.flush().map_err(csv_error)?;
            files.push(tc_path);
            let tiers = [Tier::Exact, Tier::Cmfa, Tier::Cspa];
            let keys: Vec<String> = sizes.iter().map(|n| format!("$2=={n}")).collect();
            script_block(&mut gp, "limit temperature", "fig4_limit_temperature.csv", 5, "b/v", 6, "T_L/v", &tiers, &keys);
            let _ = writeln!(gp, "replot 'fig4_critical_temperature.csv' using 1:2 with lines dashtype 3 title 'T_c'");
        }
        5 => {
            let _ = writeln!(gp, "set multiplot layout 2,1");
            let fields = linspace(0.0, 1.2, 25);
            let gammas = [0.25, 0.5, 0.75, 1.0];
            let mut rows = Vec::new();
            for &g in &gammas {
                for &b in &fields {
                    for tier in [Tier::Exact, Tier::Cmfa, Tier::Cspa] {
                        rows.push((base(100, g).with_b(b), tier));
                    }
                }
            }
            let (path, _) = limit_file(out_dir, "fig5_limit_temperature.csv", rows)?;
            files.push(path);
            let tiers = [Tier::Exact, Tier::Cmfa, Tier::Cspa];
            let keys: Vec<String> = gammas.iter().map(|g| format!("abs($4-{g})<1e-12")).collect();
            script_block(&mut gp, "n = 100, limit temperature", "fig5_limit_temperature.csv", 5, "b/v", 6, "T_L/v", &tiers, &keys);
            let mut specs = Vec::new();
            for &tier in &[Tier::Exact, Tier::Cmfa] {
                for &g in &[0.5, 1.0] {
                    for &n in &[20usize, 100, 1000] {
                        specs.push(spec(tier, base(n, g), Axis::linear(AxisVar::T, 0.005, 0.5, 100)));
                    }
                }
            }
            let (path, _) = sweep_file(out_dir, "fig5_temperature.csv", &specs)?;
            files.push(path);
            let keys: Vec<String> = [20, 100, 1000]
                .iter()
                .flat_map(|n| [0.5, 1.0].map(|g| format!("$2=={n} && abs($4-{g})<1e-12")))
                .collect();
            script_block(&mut gp, "b = 0, C vs T", "fig5_temperature.csv", 6, "T/v", 11, "C", &[Tier::Exact, Tier::Cmfa], &keys);
        }
        _ => return Err(Error::Domain(format!("figure id must be 1 to 5, got {id}"))),
    }
    if gp.contains("multiplot") {
        gp.push_str("unset multiplot\n");
    }
    let script = out_dir.join(format!("fig{id}.gp"));
    fs::write(&script, gp).map_err(|e| Error::Domain(format!("cannot write {}: {e}", script.display())))?;
    files.push(script);
    Ok(files)
}
