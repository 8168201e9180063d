use std::path::PathBuf;

use anyhow::{Context as _, Result};
use clap::Args;
use phi4::dynamics::{self, ComeDown, Coupling, InitialCondition, SimConfig, DEFAULT_BLOWUP};
use phi4::grid::DEFAULT_PERIOD;
use phi4::observables::{self, lp_norm};
use phi4::paraproduct::estimate_regularity;
use phi4::renorm;
use phi4::trees::{self, EnhancedNoise, TreeRun};
use phi4::{Field, Grid};
use phi4_graph::{format_gamma, gamma_range, parse_graphs, render_table, GammaRange, GammaRangeJson, GraphError};
use serde::Serialize;
use thiserror::Error;

use crate::output::{ConfigRecord, Output, RunManifest};

/// Missing or inconsistent options that clap cannot check on its own.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// The run stopped on a blow-up after writing what it had.
#[derive(Debug, Error)]
#[error("run stopped early: {0}")]
pub struct Stopped(pub String);

pub struct Context {
    pub out: PathBuf,
    pub config: Option<crate::config::ConfigFile>,
    pub flags: Vec<String>,
}

impl Context {
    fn manifest(&self, command: &str, resolved: &impl Serialize, seed: Option<u64>, stream: Option<u64>) -> Result<RunManifest> {
        let config = match &self.config {
            Some(c) => Some(ConfigRecord { path: c.path.display().to_string(), entries: c.entries_for(command)? }),
            None => None,
        };
        Ok(RunManifest {
            command: command.into(),
            version: concat!("phi4 ", env!("CARGO_PKG_VERSION")).into(),
            seed,
            stream,
            resolved: serde_json::to_value(resolved)?,
            config,
            flags: self.flags.clone(),
            outputs: Vec::new(),
            incomplete: None,
        })
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| UsageError(format!("bad number `{x}` in list `{s}`")).into()))
        .collect()
}

/// `lo:hi:count`, logarithmically spaced.
fn parse_log_range(s: &str) -> Result<Vec<f64>> {
    let bad = || UsageError(format!("expected lo:hi:count, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts.as_slice() else { return Err(bad().into()) };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return Err(UsageError(format!("range `{s}` needs 0 < lo <= hi and count >= 1")).into());
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    Ok((0..count).map(|i| if i == count - 1 { hi } else { lo * (step * i as f64).exp() }).collect())
}

fn parse_window(s: &str) -> Result<(i32, i32)> {
    let bad = || UsageError(format!("expected lo:hi levels, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn read_field(path: &PathBuf) -> Result<Field> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Field::read_from(std::io::BufReader::new(file))?)
}

/// Lattice and equation options shared by the dynamic subcommands.
#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LatticeArgs {
    /// Spatial dimension (2 or 3).
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Grid points per axis.
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    /// Torus side length.
    #[arg(long, default_value_t = DEFAULT_PERIOD)]
    pub period: f64,
    /// Noise regularization scale.
    #[arg(long, default_value_t = 0.01)]
    pub r: f64,
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Uniform coupling constant.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise stream id within the seed.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

impl LatticeArgs {
    fn config(&self, horizon: f64) -> SimConfig {
        let mut cfg = SimConfig::new(self.dim, self.n, self.r, self.dt, horizon);
        cfg.period = self.period;
        cfg.coupling = Coupling::Constant(self.lambda);
        cfg.seed = self.seed;
        cfg.stream = self.stream;
        cfg
    }
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lattice: LatticeArgs,
    /// Final time.
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Space-dependent coupling read from a field file (overrides --lambda).
    #[arg(long)]
    pub lambda_field: Option<PathBuf>,
    /// Drop the mass counterterm 3 lambda a u.
    #[arg(long)]
    pub no_mass: bool,
    /// Drop the logarithmic counterterm -3 lambda^2 b u.
    #[arg(long)]
    pub no_log: bool,
    /// Deterministic run without forcing.
    #[arg(long)]
    pub no_noise: bool,
    /// `zero`, `random:SIZE` (rough profile of the given C^{-1/2-eps} norm) or `file:PATH`.
    #[arg(long, default_value = "zero")]
    pub initial: String,
    /// Sup-norm threshold that aborts the run.
    #[arg(long, default_value_t = DEFAULT_BLOWUP)]
    pub blowup: f64,
    /// Steps between checkpoints (0 writes none).
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: usize,
    /// Steps between diagnostic rows.
    #[arg(long, default_value_t = 10)]
    pub diagnostics_every: usize,
}

#[derive(Serialize)]
struct DiagnosticCsv {
    t: f64,
    l2: f64,
    l8: f64,
    besov: f64,
    weighted: f64,
}

#[derive(Serialize)]
struct SnapshotCsv {
    index: usize,
    t: f64,
    file: String,
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> Result<()> {
    let mut cfg = a.lattice.config(a.horizon);
    cfg.mass_term = !a.no_mass;
    cfg.log_term = !a.no_log;
    cfg.noise = !a.no_noise;
    cfg.blowup_threshold = a.blowup;
    cfg.snapshot_every = a.snapshot_every;
    cfg.diagnostics_every = a.diagnostics_every;
    if let Some(path) = &a.lambda_field {
        cfg.coupling = Coupling::Field(read_field(path)?);
    }
    cfg.initial = match a.initial.split_once(':') {
        None if a.initial == "zero" => InitialCondition::Zero,
        Some(("random", size)) => InitialCondition::ScaledRandom {
            size: size.parse().map_err(|_| UsageError(format!("bad size in --initial {}", a.initial)))?,
        },
        Some(("file", path)) => InitialCondition::Given(read_field(&PathBuf::from(path))?),
        _ => return Err(UsageError(format!("--initial must be zero, random:SIZE or file:PATH, got {}", a.initial)).into()),
    };
    let traj = dynamics::simulate(&cfg)?;
    let mut out = Output::create(&ctx.out, "simulate", Some(cfg.seed), Some(cfg.stream))?;
    let rows: Vec<DiagnosticCsv> = traj
        .diagnostics
        .iter()
        .map(|d| DiagnosticCsv { t: d.t, l2: d.l2, l8: d.l8, besov: d.besov, weighted: d.weighted })
        .collect();
    out.csv("diagnostics.csv", &rows)?;
    let mut snaps = Vec::new();
    for (i, (t, f)) in traj.times.iter().zip(&traj.snapshots).enumerate() {
        let file = format!("snapshots/u_{i:05}.fld");
        out.field(&file, f)?;
        snaps.push(SnapshotCsv { index: i, t: *t, file });
    }
    if !snaps.is_empty() {
        out.csv("snapshots.csv", &snaps)?;
    }
    let mut manifest = ctx.manifest("simulate", &a, Some(cfg.seed), Some(cfg.stream))?;
    manifest.incomplete = traj.blow_up.clone();
    out.finish(manifest)?;
    if let Some(last) = rows.last() {
        println!("t = {}  L2 = {:.6e}  L8 = {:.6e}", last.t, last.l2, last.l8);
    }
    if let Some(msg) = traj.blow_up {
        return Err(Stopped(msg).into());
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TreesArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_PERIOD)]
    pub period: f64,
    #[arg(long, default_value_t = 0.01)]
    pub r: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Discarded time before the first snapshot (at least 5).
    #[arg(long, default_value_t = trees::MIN_BURN_IN)]
    pub burn_in: f64,
    /// Time between snapshots.
    #[arg(long, default_value_t = 0.1)]
    pub stride: f64,
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Keep the counterterms out of the trees.
    #[arg(long)]
    pub raw: bool,
    /// Comma-separated components to write as field files.
    #[arg(long, default_value = "X,W2,I3")]
    pub components: String,
    /// `lo:hi:count` sweep of r reporting raw against renormalized divergences.
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Serialize)]
struct TreeCsv<'a> {
    index: usize,
    t: f64,
    component: &'a str,
    mean: f64,
    l2: f64,
    file: String,
}

#[derive(Serialize)]
struct DivergenceCsv {
    r: f64,
    component: &'static str,
    raw_mean: f64,
    renormalized_mean: f64,
    raw_norm: f64,
    renormalized_norm: f64,
}

#[derive(Serialize)]
struct FitCsv {
    component: &'static str,
    raw_log_slope: f64,
    raw_power: f64,
    renormalized_log_slope: f64,
    renormalized_power: f64,
}

pub fn trees(ctx: &Context, a: TreesArgs) -> Result<()> {
    let grid = Grid::new(a.dim, a.n, a.period)?;
    let run = TreeRun {
        r: a.r,
        dt: a.dt,
        burn_in: a.burn_in,
        stride: a.stride,
        count: a.count,
        seed: a.seed,
        stream: a.stream,
        renormalized: !a.raw,
    };
    let mut out = Output::create(&ctx.out, "trees", Some(a.seed), Some(a.stream))?;
    if let Some(sweep) = &a.sweep {
        let rs = parse_log_range(sweep)?;
        let report = trees::tree_divergence_report(&grid, &rs, &run)?;
        let rows: Vec<DivergenceCsv> = report
            .rows
            .iter()
            .map(|r| DivergenceCsv {
                r: r.r,
                component: r.component,
                raw_mean: r.raw_mean,
                renormalized_mean: r.renormalized_mean,
                raw_norm: r.raw_norm,
                renormalized_norm: r.renormalized_norm,
            })
            .collect();
        let fits: Vec<FitCsv> = report
            .fits
            .iter()
            .map(|f| FitCsv {
                component: f.component,
                raw_log_slope: f.raw_log_slope,
                raw_power: f.raw_power,
                renormalized_log_slope: f.renormalized_log_slope,
                renormalized_power: f.renormalized_power,
            })
            .collect();
        out.csv("divergence.csv", &rows)?;
        out.csv("divergence_fits.csv", &fits)?;
        for f in &fits {
            println!(
                "{:<4} raw: log-slope {:.4e} power {:.3}  renormalized: log-slope {:.4e} power {:.3}",
                f.component, f.raw_log_slope, f.raw_power, f.renormalized_log_slope, f.renormalized_power
            );
        }
    } else {
        let wanted: Vec<String> = a.components.split(',').map(|s| s.trim().to_string()).collect();
        if let Some(bad) = wanted.iter().find(|c| !EnhancedNoise::COMPONENTS.contains(&c.as_str())) {
            return Err(UsageError(format!("unknown component {bad}; known: {}", EnhancedNoise::COMPONENTS.join(","))).into());
        }
        let snaps = trees::build_enhanced_noise(&grid, &run)?;
        let mut rows = Vec::new();
        for (i, s) in snaps.iter().enumerate() {
            for c in &wanted {
                let f = s.component(c).expect("checked above");
                let file = format!("trees/{c}_{i:04}.fld");
                out.field(&file, f)?;
                rows.push(TreeCsv { index: i, t: s.t, component: c, mean: f.mean(), l2: lp_norm(f, 2.0), file });
            }
        }
        out.csv("trees.csv", &rows)?;
        println!("{} snapshots of {} written to {}", snaps.len(), wanted.join(","), out.dir().display());
    }
    out.finish(ctx.manifest("trees", &a, Some(a.seed), Some(a.stream))?)?;
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RenormArgs {
    /// `lo:hi:count`, logarithmically spaced.
    #[arg(long, default_value = "1e-4:1e-2:8")]
    pub r: String,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Lattice size for the mode sum; by default the smallest admissible one per r.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_PERIOD)]
    pub period: f64,
}

#[derive(Serialize)]
struct RenormCsv {
    r: f64,
    a_closed: f64,
    a_numeric: f64,
    b_closed: f64,
    b_numeric: f64,
}

pub fn renorm_constants(ctx: &Context, a: RenormArgs) -> Result<()> {
    let rs = parse_log_range(&a.r)?;
    let rows = rs
        .iter()
        .map(|&r| {
            let n = match a.n {
                Some(n) => n,
                None => renorm::minimal_n(a.period, r)?,
            };
            Ok(RenormCsv {
                r,
                a_closed: renorm::a_closed(r)?,
                a_numeric: renorm::a_numeric_lattice(a.dim, n, a.period, r)?,
                b_closed: renorm::b_closed(r)?,
                b_numeric: renorm::b_numeric(r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Output::create(&ctx.out, "renorm-constants", None, None)?;
    let path = out.csv("renorm_constants.csv", &rows)?;
    out.finish(ctx.manifest("renorm-constants", &a, None, None)?)?;
    println!("r,a_closed,a_numeric,b_closed,b_numeric");
    for row in &rows {
        println!("{},{},{},{},{}", row.r, row.a_closed, row.a_numeric, row.b_closed, row.b_numeric);
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct PowercountArgs {
    /// Graph file (one or more `graph` sections).
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Emit the full verdict structure as JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

pub fn powercount(ctx: &Context, a: PowercountArgs) -> Result<()> {
    let path = a.file.clone().ok_or_else(|| UsageError("powercount needs --file".into()))?;
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let graphs = parse_graphs(&text).map_err(GraphError::from).with_context(|| format!("in {}", path.display()))?;
    let ranges: Vec<GammaRange> = graphs.iter().map(gamma_range).collect::<Result<_, _>>()?;
    let combined = GammaRange::combined(&ranges);
    let mut out = Output::create(&ctx.out, "powercount", None, None)?;
    if a.json {
        let views: Vec<GammaRangeJson> = graphs.iter().zip(&ranges).map(|(g, r)| GammaRangeJson::new(g, r)).collect();
        let value = serde_json::json!({ "graphs": views, "gamma_max": format_gamma(combined) });
        out.json("powercount.json", &value)?;
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        let mut text: Vec<String> = graphs.iter().zip(&ranges).map(|(g, r)| render_table(g, r)).collect();
        if graphs.len() > 1 {
            text.push(format!("combined over {} graphs\ngamma_max = {}", graphs.len(), format_gamma(combined)));
        }
        let body = text.join("\n\n");
        out.text("powercount.txt", &body)?;
        println!("{body}");
    }
    out.finish(ctx.manifest("powercount", &a, None, None)?)?;
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RegularityArgs {
    /// Tree component to sample (ignored with --fields).
    #[arg(long, default_value = "X")]
    pub component: String,
    /// Comma-separated field files to analyse instead of sampling trees.
    #[arg(long)]
    pub fields: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_PERIOD)]
    pub period: f64,
    #[arg(long, default_value_t = 0.01)]
    pub r: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = trees::MIN_BURN_IN)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 0.1)]
    pub stride: f64,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Dyadic level window `lo:hi` of the fit.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Serialize)]
struct LevelCsv {
    level: i32,
    mean_square: f64,
    stderr: f64,
    in_window: bool,
}

#[derive(Serialize)]
struct RegularityCsv<'a> {
    component: &'a str,
    gamma: f64,
    stderr: f64,
    slope: f64,
    window_lo: i32,
    window_hi: i32,
    samples: usize,
}

pub fn regularity(ctx: &Context, a: RegularityArgs) -> Result<()> {
    let window = a.window.as_deref().map(parse_window).transpose()?;
    let (samples, label) = match &a.fields {
        Some(list) => {
            let fields = list.split(',').map(|p| read_field(&PathBuf::from(p.trim()))).collect::<Result<Vec<_>>>()?;
            (fields, "fields".to_string())
        }
        None => {
            if !EnhancedNoise::COMPONENTS.contains(&a.component.as_str()) {
                return Err(UsageError(format!("unknown component {}", a.component)).into());
            }
            let grid = Grid::new(a.dim, a.n, a.period)?;
            let run = TreeRun {
                r: a.r,
                dt: a.dt,
                burn_in: a.burn_in,
                stride: a.stride,
                count: a.count,
                seed: a.seed,
                stream: a.stream,
                renormalized: true,
            };
            let snaps = trees::build_enhanced_noise(&grid, &run)?;
            let fields = snaps.iter().map(|s| s.component(&a.component).expect("checked above").clone()).collect();
            (fields, a.component.clone())
        }
    };
    let est = estimate_regularity(&samples, window)?;
    let mut out = Output::create(&ctx.out, "regularity", Some(a.seed), Some(a.stream))?;
    let levels: Vec<LevelCsv> = est
        .levels
        .iter()
        .map(|l| LevelCsv {
            level: l.level,
            mean_square: l.mean_square,
            stderr: l.stderr,
            in_window: l.level >= est.window.0 && l.level <= est.window.1,
        })
        .collect();
    out.csv("regularity_levels.csv", &levels)?;
    out.csv(
        "regularity.csv",
        &[RegularityCsv {
            component: &label,
            gamma: est.gamma,
            stderr: est.stderr,
            slope: est.slope,
            window_lo: est.window.0,
            window_hi: est.window.1,
            samples: samples.len(),
        }],
    )?;
    out.finish(ctx.manifest("regularity", &a, Some(a.seed), Some(a.stream))?)?;
    println!("{label}: gamma = {:.4} +- {:.4} (levels {}..={})", est.gamma, est.stderr, est.window.0, est.window.1);
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ComedownArgs {
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub r: f64,
    #[arg(long, default_value_t = 2.0)]
    pub horizon: f64,
    /// Comma-separated C^{-1/2-eps} sizes of the initial conditions.
    #[arg(long, default_value = "10,100,1000")]
    pub sizes: String,
    /// Even L^p exponent, at least 8.
    #[arg(long, default_value_t = 8.0)]
    pub p: f64,
    /// Comma-separated recording times (default: 0.05 to the horizon).
    #[arg(long)]
    pub times: Option<String>,
    /// Fixed time step (default 1e-3).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Noise, trees and counterterms off.
    #[arg(long)]
    pub deterministic: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Serialize)]
struct ComedownCsv {
    size: f64,
    t: f64,
    norm: f64,
}

#[derive(Serialize)]
struct ComedownRunCsv {
    size: f64,
    initial_besov: f64,
    constant: f64,
}

pub fn comedown(ctx: &Context, a: ComedownArgs) -> Result<()> {
    let times = match &a.times {
        Some(t) => parse_list(t)?,
        None => {
            let mut ts = vec![0.05, 0.1, 0.25, 0.5];
            let mut t = 0.75;
            while t <= a.horizon + 1e-12 {
                ts.push(t);
                t += 0.25;
            }
            ts.retain(|&t| t <= a.horizon + 1e-12);
            ts
        }
    };
    let cd = ComeDown {
        n: a.n,
        r: a.r,
        horizon: a.horizon,
        sizes: parse_list(&a.sizes)?,
        p: a.p,
        seed: a.seed,
        stream: a.stream,
        times,
        dt: a.dt,
        deterministic: a.deterministic,
    };
    let report = dynamics::coming_down_experiment(&cd)?;
    let mut out = Output::create(&ctx.out, "comedown", Some(a.seed), Some(a.stream))?;
    let mut rows = Vec::new();
    for run in &report.runs {
        for (t, norm) in report.times.iter().zip(&run.norms) {
            rows.push(ComedownCsv { size: run.size, t: *t, norm: *norm });
        }
    }
    out.csv("comedown.csv", &rows)?;
    let runs: Vec<ComedownRunCsv> = report
        .runs
        .iter()
        .map(|r| ComedownRunCsv { size: r.size, initial_besov: r.initial_besov, constant: r.constant })
        .collect();
    out.csv("comedown_runs.csv", &runs)?;
    out.finish(ctx.manifest("comedown", &a, Some(a.seed), Some(a.stream))?)?;
    println!(
        "dt = {:.3e}  spread at t=1: {:.3}  constant spread: {:.3}  C = {:.4e}",
        report.dt, report.spread_at_one, report.constant_spread, report.constant
    );
    Ok(())
}

/// Invariant-measure sampling options.
#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SamplingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lattice: LatticeArgs,
    /// Discarded time before the first sample (at least 5).
    #[arg(long, default_value_t = observables::MIN_BURN_IN)]
    pub burn_in: f64,
    /// Time between samples (at least 5 dt).
    #[arg(long, default_value_t = 0.05)]
    pub stride: f64,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CumulantArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
    /// Comma-separated probe smoothing scales.
    #[arg(long, default_value = "0.005,0.01,0.02,0.04")]
    pub probes: String,
}

#[derive(Serialize)]
struct CumulantCsv {
    r_probe: f64,
    c4: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct SlopeCsv {
    log_slope: f64,
    log_slope_stderr: f64,
    linear_slope: f64,
    linear_slope_stderr: f64,
    samples: usize,
    correlation_time: f64,
}

pub fn cumulant(ctx: &Context, a: CumulantArgs) -> Result<()> {
    let probes = parse_list(&a.probes)?;
    let s = &a.sampling;
    let cfg = s.lattice.config(0.0);
    let set = observables::birkhoff_sample(&cfg, s.burn_in, s.stride, s.count)?;
    if let Some(msg) = &set.blow_up {
        return Err(Stopped(format!("after {} samples: {msg}", set.fields.len())).into());
    }
    let scaling = observables::cumulant_scaling(&set.fields, &probes)?;
    let mut out = Output::create(&ctx.out, "cumulant", Some(cfg.seed), Some(cfg.stream))?;
    let rows: Vec<CumulantCsv> = scaling
        .r_probes
        .iter()
        .zip(&scaling.cumulants)
        .map(|(r, c)| CumulantCsv { r_probe: *r, c4: c.value, stderr: c.stderr })
        .collect();
    out.csv("cumulant.csv", &rows)?;
    out.csv(
        "cumulant_slope.csv",
        &[SlopeCsv {
            log_slope: scaling.log_slope.value,
            log_slope_stderr: scaling.log_slope.stderr,
            linear_slope: scaling.linear_slope.value,
            linear_slope_stderr: scaling.linear_slope.stderr,
            samples: set.fields.len(),
            correlation_time: set.correlation_time,
        }],
    )?;
    out.finish(ctx.manifest("cumulant", &a, Some(cfg.seed), Some(cfg.stream))?)?;
    for r in &rows {
        println!("r_probe = {:.4e}  C4 = {:.5e} +- {:.2e}", r.r_probe, r.c4, r.stderr);
    }
    println!("log slope = {:.3} +- {:.3}", scaling.log_slope.value, scaling.log_slope.stderr);
    Ok(())
}

#[derive(Args, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
    /// Only write the summary CSV, not the sample fields.
    #[arg(long)]
    pub no_fields: bool,
}

#[derive(Serialize)]
struct SampleCsv {
    index: usize,
    t: f64,
    mean: f64,
    l2: f64,
    l4: f64,
    file: String,
}

pub fn sample(ctx: &Context, a: SampleArgs) -> Result<()> {
    let s = &a.sampling;
    let cfg = s.lattice.config(0.0);
    let set = observables::birkhoff_sample(&cfg, s.burn_in, s.stride, s.count)?;
    let mut out = Output::create(&ctx.out, "sample", Some(cfg.seed), Some(cfg.stream))?;
    let mut rows = Vec::new();
    for (i, (t, f)) in set.times.iter().zip(&set.fields).enumerate() {
        let file = if a.no_fields {
            String::new()
        } else {
            let name = format!("samples/u_{i:05}.fld");
            out.field(&name, f)?;
            name
        };
        rows.push(SampleCsv { index: i, t: *t, mean: f.mean(), l2: lp_norm(f, 2.0), l4: lp_norm(f, 4.0), file });
    }
    out.csv("samples.csv", &rows)?;
    let mut manifest = ctx.manifest("sample", &a, Some(cfg.seed), Some(cfg.stream))?;
    manifest.incomplete = set.blow_up.clone();
    out.finish(manifest)?;
    let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let (m, se) = phi4::stats::mean_stderr(&means);
    println!(
        "{} samples, spatial mean {m:.4e} +- {se:.2e}, correlation time {:.3}{}",
        rows.len(),
        set.correlation_time,
        if set.stride_flagged { " (stride below correlation time)" } else { "" }
    );
    if let Some(msg) = set.blow_up {
        return Err(Stopped(msg).into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_range_endpoints() {
        let rs = parse_log_range("1e-4:1e-2:8").unwrap();
        assert_eq!(rs.len(), 8);
        assert_eq!(rs[0], 1e-4);
        assert_eq!(rs[7], 1e-2);
        assert!(rs.windows(2).all(|w| w[1] > w[0]));
        let ratio = rs[1] / rs[0];
        assert!((rs[5] / rs[4] - ratio).abs() < 1e-12);
        assert!(parse_log_range("1e-2:1e-4:3").is_err());
        assert!(parse_log_range("1:2").is_err());
    }

    #[test]
    fn window_and_list() {
        assert_eq!(parse_window("1:4").unwrap(), (1, 4));
        assert!(parse_window("1").is_err());
        assert_eq!(parse_list("0.1, 1,10").unwrap(), vec![0.1, 1.0, 10.0]);
        assert!(parse_list("1,x").is_err());
    }
}
