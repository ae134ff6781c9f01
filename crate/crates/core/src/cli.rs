//! The `ldtool` command line.
//!
//! Every subcommand writes its data files plus a run manifest: `#`-commented
//! key=value text holding the resolved configuration, the output paths and
//! the exact argument vector, so `ldtool rerun <manifest>` repeats the run.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{
    assess_series, detect_singularities, invariance_check, neighbor_variation, transect, ConvergenceSeries,
};
use crate::descriptor::{
    compute_field_with, partial_derivative, select_p, time_average, Axis, DescriptorKind, GridSpec, LDConfig,
    ScalarField,
};
use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, DEFAULT_MAX_STEPS, DEFAULT_SAFETY_BOX};
use crate::io::{read_field, write_field, write_matrix, write_series, write_transect, SeriesMeta};
use crate::systems::{SystemId, VectorFieldSpec};

#[derive(Debug, Parser)]
#[command(name = "ldtool", version, about = "Lagrangian descriptors over grids of initial conditions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptor field over a grid of initial conditions.
    Field(FieldArgs),
    /// Descriptor along a line, with singular-feature flags.
    Transect(TransectArgs),
    /// Running time averages and convergence verdicts.
    Converge(ConvergeArgs),
    /// Drift of a field's value along a trajectory.
    Invariance(InvarianceArgs),
    /// Regenerate the data behind one figure.
    Reproduce(ReproduceArgs),
    /// Repeat the run recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Builtin system id, e.g. `linear-saddle` or `abc`.
    #[arg(long)]
    pub system: String,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "param", value_name = "K=V", allow_hyphen_values = true)]
    pub params: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DescriptorArgs {
    #[arg(long, default_value = "mp", value_parser = ["mp", "arclength", "lavd"])]
    pub kind: String,
    /// Exponent of `mp`, in (0, 1].
    #[arg(long)]
    pub p: Option<f64>,
    /// Choose `p = 1 / (tau |lambda - mu|)`, clamped to 1.
    #[arg(long, conflicts_with = "p")]
    pub auto_p: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub t0: f64,
    /// Integrator step.
    #[arg(long, default_value_t = IntegratorConfig::default().step)]
    pub step: f64,
    /// Half-width of the box outside which trajectories are truncated.
    #[arg(long, default_value_t = DEFAULT_SAFETY_BOX)]
    pub safety_box: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Worker threads (default: all cores). Never changes outputs.
    #[arg(long)]
    pub threads: Option<usize>,
    /// RFC 3339 creation time recorded in outputs; defaults to
    /// `SOURCE_DATE_EPOCH`, then to the current time.
    #[arg(long)]
    pub created: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    /// Axis range `lo..hi:n`, one per non-sliced axis in axis order.
    #[arg(long = "grid", value_name = "LO..HI:N", allow_hyphen_values = true, required = true)]
    pub grids: Vec<String>,
    /// Fix an axis, `x=value` or `0=value` (repeatable).
    #[arg(long = "slice", value_name = "AXIS=V", allow_hyphen_values = true)]
    pub slices: Vec<String>,
    /// Store the time average `M / (2 tau)` instead of `M`.
    #[arg(long, conflicts_with = "derivative")]
    pub average: bool,
    /// Store the derivative of the descriptor along this axis.
    #[arg(long, value_name = "AXIS")]
    pub derivative: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Additional gnuplot matrix export (two free axes only).
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransectArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    /// Line centre, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub anchor: String,
    /// Line direction, comma separated; normalized.
    #[arg(long, allow_hyphen_values = true)]
    pub direction: String,
    #[arg(long)]
    pub half_width: f64,
    /// Odd sample count, at least 5.
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_KAPPA)]
    pub kappa: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
    /// Initial condition (repeatable); with `--line`, the base point.
    #[arg(long = "x0", allow_hyphen_values = true)]
    pub x0: Vec<String>,
    /// Initial conditions `from..to:n` along `--along`, other coordinates from `--x0`.
    #[arg(long, allow_hyphen_values = true, requires = "along")]
    pub line: Option<String>,
    #[arg(long)]
    pub along: Option<String>,
    #[arg(long, default_value_t = 500.0)]
    pub tau_max: f64,
    /// Number of uniformly spaced horizons in (0, tau-max]; default one per 0.1.
    #[arg(long)]
    pub tau_samples: Option<usize>,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_WINDOW)]
    pub window: f64,
    #[arg(long, default_value_t = crate::analysis::DEFAULT_EPS)]
    pub eps: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InvarianceArgs {
    /// Field file from `ldtool field`.
    #[arg(long)]
    pub field: PathBuf,
    /// System override; defaults to the one recorded in the field file.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long = "param", value_name = "K=V", allow_hyphen_values = true)]
    pub params: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub seed: String,
    #[arg(long)]
    pub t_span: f64,
    /// Absolute tolerance on the deviation.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Tolerance in units of the field's median neighbour variation, used
    /// when `--tol` is absent.
    #[arg(long, default_value_t = 3.0)]
    pub tol_cells: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// One of fig1 fig2 fig3 fig4 fig5 fig6 fig8 fig9 fig10 fig11 fig13 fig16 fig17.
    pub figure: String,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

/// What a run produced.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub manifests: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// More than half of the nodes were truncated.
    pub runtime_failure: bool,
}

impl Outcome {
    fn absorb(&mut self, other: Outcome) {
        self.manifests.extend(other.manifests);
        self.outputs.extend(other.outputs);
        self.runtime_failure |= other.runtime_failure;
    }
}

/// Runs `ldtool` and returns the process exit code: 0 on success, 1 on
/// invalid input, 2 when the numerics failed (blow-up dominated output).
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) if outcome.runtime_failure => {
            eprintln!("error: more than half of the nodes were truncated");
            2
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

/// Parses and runs one invocation in-process.
pub fn run<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let argv = reconstruct_argv(cli);
    match &cli.command {
        Command::Field(a) => cmd_field(a, &argv),
        Command::Transect(a) => cmd_transect(a, &argv),
        Command::Converge(a) => cmd_converge(a, &argv),
        Command::Invariance(a) => cmd_invariance(a, &argv),
        Command::Reproduce(a) => cmd_reproduce(a, &argv),
        Command::Rerun(a) => cmd_rerun(a),
    }
}

// The argument vector is recorded as given; clap keeps no copy, so it is
// captured from the process when available and rebuilt otherwise.
thread_local! {
    static ARGV: std::cell::RefCell<Option<Vec<String>>> = const { std::cell::RefCell::new(None) };
}

fn reconstruct_argv(_cli: &Cli) -> Vec<String> {
    ARGV.with(|a| a.borrow().clone()).unwrap_or_default()
}

/// Like [`run`], recording `args` in the manifests.
pub fn run_recorded(args: &[String]) -> Result<Outcome> {
    let previous = ARGV.with(|a| a.replace(Some(args.to_vec())));
    let result = run(args);
    ARGV.with(|a| *a.borrow_mut() = previous);
    result
}

/// Like [`main_with`], recording `args` in the manifests.
pub fn main_recorded(args: &[String]) -> i32 {
    let previous = ARGV.with(|a| a.replace(Some(args.to_vec())));
    let code = main_with(args);
    ARGV.with(|a| *a.borrow_mut() = previous);
    code
}

/// Creation timestamp: the explicit value, else `SOURCE_DATE_EPOCH`, else now.
pub fn resolve_created(explicit: Option<&str>) -> Result<String> {
    if let Some(s) = explicit {
        DateTime::parse_from_rfc3339(s).map_err(|e| Error::InvalidConfig(format!("bad --created `{s}`: {e}")))?;
        return Ok(s.to_string());
    }
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: i64 = epoch
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad SOURCE_DATE_EPOCH `{epoch}`")))?;
        let t = DateTime::<Utc>::from_timestamp(secs, 0)
            .ok_or_else(|| Error::InvalidConfig(format!("SOURCE_DATE_EPOCH out of range: {secs}")))?;
        return Ok(t.to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    Ok(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
}

fn parse_key_value(raw: &str) -> Result<(String, f64)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("expected name=value, got `{raw}`")))?;
    let v = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad number in `{raw}`")))?;
    Ok((k.trim().to_string(), v))
}

pub fn parse_system(system: &str, params: &[String]) -> Result<VectorFieldSpec> {
    let mut spec = VectorFieldSpec::builtin(system.parse::<SystemId>()?);
    for raw in params {
        let (k, v) = parse_key_value(raw)?;
        spec = spec.with(&k, v)?;
    }
    Ok(spec)
}

pub fn parse_point(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::InvalidConfig(format!("bad point `{raw}`")))
}

/// Parses `lo..hi:n`.
pub fn parse_range(raw: &str) -> Result<(f64, f64, usize)> {
    let bad = || Error::InvalidGrid(format!("expected lo..hi:n, got `{raw}`"));
    let (range, n) = raw.rsplit_once(':').ok_or_else(bad)?;
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
        n.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn parse_axis_name(raw: &str, dim: usize) -> Result<usize> {
    let axis = match raw.trim() {
        "x" => 0,
        "y" => 1,
        "z" => 2,
        other => other
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("unknown axis `{other}`")))?,
    };
    if axis >= dim {
        return Err(Error::InvalidConfig(format!("axis {raw} out of range for dimension {dim}")));
    }
    Ok(axis)
}

/// Builds the grid from `--grid` ranges filling the non-sliced axes in order.
pub fn build_grid(dim: usize, grids: &[String], slices: &[String]) -> Result<GridSpec> {
    let mut fixed: BTreeMap<usize, f64> = BTreeMap::new();
    for raw in slices {
        let (axis, value) = raw
            .split_once('=')
            .ok_or_else(|| Error::InvalidGrid(format!("expected axis=value, got `{raw}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidGrid(format!("bad slice value in `{raw}`")))?;
        if fixed.insert(parse_axis_name(axis, dim)?, value).is_some() {
            return Err(Error::InvalidGrid(format!("axis sliced twice in `{raw}`")));
        }
    }
    if grids.len() + fixed.len() != dim {
        return Err(Error::InvalidGrid(format!(
            "{} --grid ranges and {} slices do not cover dimension {dim}",
            grids.len(),
            fixed.len()
        )));
    }
    let mut ranges = grids.iter();
    let axes = (0..dim)
        .map(|i| match fixed.get(&i) {
            Some(v) => Ok(Axis::Fixed(*v)),
            None => {
                let (lo, hi, n) = parse_range(ranges.next().expect("counted above"))?;
                Ok(Axis::free(lo, hi, n))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    GridSpec::new(axes)
}

/// Resolves the descriptor flags into a configuration, with a note when
/// `--auto-p` had to clamp.
pub fn build_config(spec: &VectorFieldSpec, d: &DescriptorArgs, tau: f64) -> Result<(LDConfig, Option<String>)> {
    let mut note = None;
    let kind = match d.kind.as_str() {
        "mp" if d.auto_p => {
            let lambda = d.lambda.or_else(|| spec.param("lambda"));
            let mu = d.mu.or_else(|| spec.param("mu"));
            let (Some(lambda), Some(mu)) = (lambda, mu) else {
                return Err(Error::InvalidConfig("--auto-p needs --lambda and --mu".into()));
            };
            let s = select_p(lambda, mu, tau)?;
            if s.clamped {
                note = Some(format!("auto-p clamped {} to {}", s.raw, s.p));
            }
            DescriptorKind::Mp { p: s.p }
        }
        "mp" => DescriptorKind::Mp {
            p: d.p.ok_or_else(|| Error::InvalidConfig("--kind mp needs --p or --auto-p".into()))?,
        },
        other => DescriptorKind::from_parts(other, None)?,
    };
    let cfg = LDConfig {
        kind,
        tau,
        t0: d.t0,
        integrator: IntegratorConfig {
            step: d.step,
            max_steps: d.max_steps,
            safety_box: d.safety_box,
        },
    };
    cfg.validate()?;
    Ok((cfg, note))
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `#`-commented key=value manifest.
struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    fn new(subcommand: &str, argv: &[String], created: &str) -> Self {
        let mut m = Manifest { lines: Vec::new() };
        m.push("subcommand", subcommand);
        m.push("argv", serde_json::to_string(argv).expect("strings serialize"));
        m.push("created", created);
        m
    }

    fn push(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn config(&mut self, spec: &VectorFieldSpec, cfg: &LDConfig) {
        self.push("system", spec.id());
        for (k, v) in spec.params() {
            self.push(&format!("param.{k}"), v);
        }
        self.push("kind", cfg.kind.name());
        if let Some(p) = cfg.kind.p() {
            self.push("p", p);
        }
        self.push("tau", cfg.tau);
        self.push("t0", cfg.t0);
        self.push("h", cfg.integrator.step);
        self.push("safety_box", cfg.integrator.safety_box);
        self.push("max_steps", cfg.integrator.max_steps);
    }

    fn write(&self, path: &Path, started: Instant) -> Result<PathBuf> {
        let mut out = String::from("# ldtool run manifest\n");
        for (k, v) in &self.lines {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "# wall_time_s={:.3}", started.elapsed().as_secs_f64());
        fs::write(path, out)?;
        Ok(path.to_path_buf())
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".manifest");
    out.with_file_name(name)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(())
}

fn cmd_field(a: &FieldArgs, argv: &[String]) -> Result<Outcome> {
    let started = Instant::now();
    let spec = parse_system(&a.system.system, &a.system.params)?;
    let (cfg, note) = build_config(&spec, &a.descriptor, a.tau)?;
    let grid = build_grid(spec.id().dim(), &a.grids, &a.slices)?;
    let derivative = a
        .derivative
        .as_deref()
        .map(|axis| parse_axis_name(axis, grid.dim()))
        .transpose()?;
    if let Some(axis) = derivative {
        if !grid.free_axes().contains(&axis) || grid.axes()[axis].count() < 3 {
            return Err(Error::InvalidGrid(format!("derivative axis {axis} needs at least 3 free nodes")));
        }
    }
    let created = resolve_created(a.run.created.as_deref())?;
    if let Some(note) = &note {
        eprintln!("note: {note}");
    }

    let mut field: ScalarField =
        with_pool(a.run.threads, || compute_field_with(&spec, &grid, &cfg, spec.params().clone()))??;
    if a.average {
        field = field.to_average()?;
    }
    if let Some(axis) = derivative {
        field = partial_derivative(&field, axis)?;
    }
    field.meta.created = Some(created.clone());

    ensure_parent(&a.out)?;
    write_field(&field, &a.out)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(m) = &a.matrix_out {
        ensure_parent(m)?;
        write_matrix(&field, m)?;
        outputs.push(m.clone());
    }

    let mut manifest = Manifest::new("field", argv, &created);
    manifest.config(&spec, &cfg);
    for (i, axis) in grid.axes().iter().enumerate() {
        manifest.push(&format!("axis.{i}"), format!("{axis:?}"));
    }
    manifest.push("quantity", field.meta.quantity);
    manifest.push("threads", a.run.threads.map_or("auto".to_string(), |t| t.to_string()));
    if let Some(note) = note {
        manifest.push("note", note);
    }
    for (i, o) in outputs.iter().enumerate() {
        manifest.push(&format!("output.{i}"), o.display());
    }
    manifest.push("nodes", field.len());
    manifest.push("partial_nodes", field.partial_count());
    let m = manifest.write(&manifest_path(&a.out), started)?;
    Ok(Outcome {
        manifests: vec![m],
        runtime_failure: 2 * field.partial_count() > field.len(),
        outputs,
    })
}

fn cmd_transect(a: &TransectArgs, argv: &[String]) -> Result<Outcome> {
    let started = Instant::now();
    let spec = parse_system(&a.system.system, &a.system.params)?;
    let (cfg, note) = build_config(&spec, &a.descriptor, a.tau)?;
    let anchor = parse_point(&a.anchor)?;
    let direction = parse_point(&a.direction)?;
    let created = resolve_created(a.run.created.as_deref())?;
    let profile = with_pool(a.run.threads, || {
        transect(&spec, &cfg, &anchor, &direction, a.half_width, a.samples)
    })??;
    let report = detect_singularities(&profile, a.kappa)?;

    ensure_parent(&a.out)?;
    write_transect(&profile, &report, &a.out)?;
    println!(
        "flags: {}",
        report
            .flagged_offsets
            .iter()
            .zip(&report.jump_ratios)
            .map(|(o, r)| format!("{o} (ratio {r:.3e})"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let partial = profile.partial.iter().filter(|&&p| p).count();
    let mut manifest = Manifest::new("transect", argv, &created);
    manifest.config(&spec, &cfg);
    manifest.push("anchor", format!("{:?}", profile.anchor));
    manifest.push("direction", format!("{:?}", profile.direction));
    manifest.push("half_width", a.half_width);
    manifest.push("samples", a.samples);
    manifest.push("kappa", a.kappa);
    if let Some(note) = note {
        manifest.push("note", note);
    }
    manifest.push("flagged_offsets", format!("{:?}", report.flagged_offsets));
    manifest.push("output.0", a.out.display());
    manifest.push("partial_nodes", partial);
    let m = manifest.write(&manifest_path(&a.out), started)?;
    Ok(Outcome {
        manifests: vec![m],
        outputs: vec![a.out.clone()],
        runtime_failure: 2 * partial > profile.len(),
    })
}

/// Initial conditions of a converge run.
pub fn converge_points(a: &ConvergeArgs, dim: usize) -> Result<Vec<Vec<f64>>> {
    let points = match &a.line {
        Some(line) => {
            let [base] = a.x0.as_slice() else {
                return Err(Error::InvalidConfig("--line needs exactly one --x0 base point".into()));
            };
            let base = parse_point(base)?;
            let axis = parse_axis_name(a.along.as_deref().unwrap_or("x"), dim)?;
            let (from, to, n) = parse_range(line)?;
            if n < 1 {
                return Err(Error::InvalidConfig("--line needs at least one point".into()));
            }
            (0..n)
                .map(|i| {
                    let mut p = base.clone();
                    p[axis] = match (i, n) {
                        (0, _) => from,
                        (i, n) if i + 1 == n => to,
                        (i, n) => from + (to - from) * i as f64 / (n - 1) as f64,
                    };
                    p
                })
                .collect()
        }
        None => a.x0.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?,
    };
    if points.is_empty() {
        return Err(Error::InvalidConfig("no initial conditions: give --x0 or --line".into()));
    }
    for p in &points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    Ok(points)
}

fn cmd_converge(a: &ConvergeArgs, argv: &[String]) -> Result<Outcome> {
    let started = Instant::now();
    let spec = parse_system(&a.system.system, &a.system.params)?;
    let (cfg, note) = build_config(&spec, &a.descriptor, a.tau_max)?;
    let points = converge_points(a, spec.id().dim())?;
    let n = a.tau_samples.unwrap_or_else(|| ((a.tau_max / 0.1).round() as usize).max(1));
    let taus: Vec<f64> = (1..=n).map(|k| a.tau_max * k as f64 / n as f64).collect();
    let created = resolve_created(a.run.created.as_deref())?;

    let results: Vec<(ConvergenceSeries, bool)> = with_pool(a.run.threads, || {
        points
            .par_iter()
            .map(|x0| {
                let raw = time_average(&spec, x0, &cfg, &taus)?;
                let truncated = raw.valid.iter().any(|v| !v);
                Ok((assess_series(&raw, a.window, a.eps)?, truncated))
            })
            .collect::<Result<Vec<_>>>()
    })??;

    fs::create_dir_all(&a.out_dir)?;
    let meta = SeriesMeta {
        system: spec.id().to_string(),
        params: spec.params().clone(),
        config: cfg,
    };
    let mut outputs = Vec::new();
    let names = ["x", "y", "z"];
    let dim = spec.id().dim();
    let mut summary = String::from("index,");
    for name in names.iter().take(dim) {
        summary.push_str(name);
        summary.push(',');
    }
    summary.push_str("status,tau_converged,final_average\n");
    for (i, (series, truncated)) in results.iter().enumerate() {
        let path = a.out_dir.join(format!("series_{i:03}.csv"));
        write_series(series, &meta, &path)?;
        outputs.push(path);
        let status = match (series.converged, truncated) {
            (true, _) => "converged",
            (false, true) => "truncated",
            (false, false) => "budget-exhausted",
        };
        let coords: Vec<String> = series.x0.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            summary,
            "{i},{},{status},{},{}",
            coords.join(","),
            series.tau_converged.map(|t| t.to_string()).unwrap_or_default(),
            series.averages.last().copied().unwrap_or(f64::NAN)
        );
        println!(
            "{i}: x0={:?} {status}{}",
            series.x0,
            series.tau_converged.map(|t| format!(" at tau={t}")).unwrap_or_default()
        );
    }
    let summary_path = a.out_dir.join("summary.csv");
    fs::write(&summary_path, summary)?;
    outputs.push(summary_path);

    let truncated = results.iter().filter(|(_, t)| *t).count();
    let mut manifest = Manifest::new("converge", argv, &created);
    manifest.config(&spec, &cfg);
    manifest.push("tau_samples", n);
    manifest.push("window", a.window);
    manifest.push("eps", a.eps);
    if let Some(note) = note {
        manifest.push("note", note);
    }
    for (i, o) in outputs.iter().enumerate() {
        manifest.push(&format!("output.{i}"), o.display());
    }
    manifest.push("initial_conditions", points.len());
    manifest.push("truncated_series", truncated);
    let m = manifest.write(&a.out_dir.join("manifest.txt"), started)?;
    Ok(Outcome {
        manifests: vec![m],
        outputs,
        runtime_failure: 2 * truncated > points.len(),
    })
}

fn cmd_invariance(a: &InvarianceArgs, argv: &[String]) -> Result<Outcome> {
    let started = Instant::now();
    let field = read_field(&a.field)?;
    let spec = match &a.system {
        Some(system) => parse_system(system, &a.params)?,
        None => {
            let mut spec = VectorFieldSpec::new(field.meta.system.parse()?, field.meta.params.clone())?;
            for raw in &a.params {
                let (k, v) = parse_key_value(raw)?;
                spec = spec.with(&k, v)?;
            }
            spec
        }
    };
    let seed = parse_point(&a.seed)?;
    let variation = neighbor_variation(&field);
    let tol = a.tol.unwrap_or(a.tol_cells * variation);
    let created = resolve_created(a.run.created.as_deref())?;
    let report = invariance_check(&spec, &seed, a.t_span, &field, tol)?;

    let mut text = String::new();
    let _ = writeln!(text, "deviation={:.16e}", report.deviation);
    let _ = writeln!(text, "reference={:.16e}", report.reference);
    let _ = writeln!(text, "tol={:.16e}", report.tol);
    let _ = writeln!(text, "neighbor_variation={variation:.16e}");
    let _ = writeln!(text, "samples={}", report.samples);
    let _ = writeln!(text, "left_box={}", report.left_box);
    let _ = writeln!(text, "within_tol={}", report.within_tol);
    print!("{text}");
    ensure_parent(&a.out)?;
    fs::write(&a.out, text)?;

    let mut manifest = Manifest::new("invariance", argv, &created);
    manifest.push("field", a.field.display());
    manifest.push("system", spec.id());
    for (k, v) in spec.params() {
        manifest.push(&format!("param.{k}"), v);
    }
    manifest.push("seed", format!("{seed:?}"));
    manifest.push("t_span", a.t_span);
    manifest.push("tol", tol);
    manifest.push("output.0", a.out.display());
    let m = manifest.write(&manifest_path(&a.out), started)?;
    Ok(Outcome {
        manifests: vec![m],
        outputs: vec![a.out.clone()],
        runtime_failure: false,
    })
}

pub const FIGURES: [&str; 13] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig8", "fig9", "fig10", "fig11", "fig13", "fig16", "fig17",
];

const ABC_B: &str = "B=0.81649658092772603";
const ABC_C: &str = "C=0.57735026918962573";

/// Argument vectors (without program name) making up one figure preset.
/// `dir` prefixes every output path.
pub fn preset(figure: &str, dir: &Path) -> Result<Vec<Vec<String>>> {
    let p = |name: &str| dir.join(name).display().to_string();
    let s = |items: &[&str]| items.iter().map(|i| i.to_string()).collect::<Vec<String>>();
    let field = |system: &[&str], rest: &[&str], name: &str| {
        let mut v = s(&["field", "--system"]);
        v.extend(s(system));
        v.extend(s(rest));
        v.extend(["--out".into(), p(&format!("{name}.csv")), "--matrix-out".into(), p(&format!("{name}.dat"))]);
        v
    };
    let square = ["--grid", "-1..1:401", "--grid", "-1..1:401"];
    let mut runs = Vec::new();
    match figure {
        "fig1" => {
            let mut rest = s(&["--kind", "mp", "--p", "0.5", "--tau", "15", "--step", "0.1"]);
            rest.extend(s(&square));
            let rest: Vec<&str> = rest.iter().map(String::as_str).collect();
            runs.push(field(&["linear-saddle", "--param", "lambda=1"], &rest, "fig1_mp"));
            let mut t = s(&["transect", "--system", "linear-saddle", "--param", "lambda=1", "--kind", "mp", "--p", "0.5"]);
            t.extend(s(&["--tau", "15", "--step", "0.1", "--anchor", "0,0.5", "--direction", "1,0"]));
            t.extend(s(&["--half-width", "1", "--samples", "401"]));
            t.extend(["--out".into(), p("fig1_transect.csv")]);
            runs.push(t);
        }
        "fig2" => {
            for tau in ["0.005", "1", "2.5", "5"] {
                runs.push(field(
                    &["rotated-saddle"],
                    &["--kind", "mp", "--p", "0.5", "--tau", tau, "--step", "0.005", "--grid", "-1..1:401", "--grid", "-1..1:401"],
                    &format!("fig2_tau{tau}"),
                ));
            }
        }
        "fig3" => {
            for tau in ["0.005", "1", "2.5", "5"] {
                let mut t = s(&["transect", "--system", "rotated-saddle", "--kind", "mp", "--p", "0.5", "--tau", tau]);
                t.extend(s(&["--step", "0.005", "--anchor", "0,0.5", "--direction", "1,0", "--half-width", "1"]));
                t.extend(s(&["--samples", "401", "--out"]));
                t.push(p(&format!("fig3_tau{tau}.csv")));
                runs.push(t);
            }
        }
        "fig4" => {
            let grid = ["--grid", "-1..1:401", "--grid", "-1..1:401", "--step", "0.01"];
            let sys = ["nonham-saddle", "--param", "lambda=2", "--param", "mu=1"];
            let mut a = s(&["--kind", "mp", "--p", "0.5", "--tau", "15"]);
            a.extend(s(&grid));
            runs.push(field(&sys, &a.iter().map(String::as_str).collect::<Vec<_>>(), "fig4_p0.5"));
            let mut b = s(&["--kind", "mp", "--auto-p", "--tau", "15"]);
            b.extend(s(&grid));
            runs.push(field(&sys, &b.iter().map(String::as_str).collect::<Vec<_>>(), "fig4_pauto"));
            for axis in ["x", "y"] {
                let mut d = s(&["--kind", "mp", "--p", "0.5", "--tau", "15", "--derivative", axis]);
                d.extend(s(&grid));
                runs.push(field(&sys, &d.iter().map(String::as_str).collect::<Vec<_>>(), &format!("fig4_d{axis}")));
            }
        }
        "fig5" => {
            let grid = ["--grid", "-1..1:401", "--grid", "-1..1:401", "--step", "0.01", "--tau", "15"];
            let mut a = s(&["--kind", "mp", "--p", "0.5"]);
            a.extend(s(&grid));
            runs.push(field(&["global-attractor"], &a.iter().map(String::as_str).collect::<Vec<_>>(), "fig5_mp"));
            let mut b = s(&["--kind", "arclength"]);
            b.extend(s(&grid));
            runs.push(field(&["global-attractor"], &b.iter().map(String::as_str).collect::<Vec<_>>(), "fig5_arclength"));
        }
        "fig6" => {
            let grid = ["--grid", "-2..2:401", "--grid", "-2..2:401", "--step", "0.01", "--tau", "10"];
            let mut a = s(&["--kind", "arclength"]);
            a.extend(s(&grid));
            runs.push(field(&["harmonic-oscillator"], &a.iter().map(String::as_str).collect::<Vec<_>>(), "fig6_arclength"));
            let mut b = s(&["--kind", "mp", "--p", "1"]);
            b.extend(s(&grid));
            runs.push(field(&["harmonic-oscillator"], &b.iter().map(String::as_str).collect::<Vec<_>>(), "fig6_m1"));
        }
        "fig8" | "fig9" => {
            let planes: &[(&str, &str)] = if figure == "fig8" { &[("y", "y=0"), ("z", "z=0")] } else { &[("x", "x=0")] };
            let params: [(&str, Vec<&str>); 2] = [
                ("abc1", vec!["abc", "--param", "A=1", "--param", "B=1", "--param", "C=1"]),
                ("abc2", vec!["abc", "--param", "A=1", "--param", ABC_B, "--param", ABC_C]),
            ];
            for (label, sys) in &params {
                for (axis, slice) in planes {
                    for (kind, extra) in [("arclength", vec!["--kind", "arclength"]), ("m1", vec!["--kind", "mp", "--p", "1"])] {
                        let mut rest = extra.clone();
                        rest.extend(["--tau", "30", "--step", "0.05", "--slice", slice]);
                        rest.extend(["--grid", "0..6.2831853071795862:401", "--grid", "0..6.2831853071795862:401"]);
                        runs.push(field(sys, &rest, &format!("{figure}_{label}_{kind}_{axis}0")));
                    }
                }
            }
        }
        "fig10" | "fig11" => {
            let sys = ["--system", "abc", "--param", "A=1", "--param", ABC_B, "--param", ABC_C];
            let (kind, tau): (&[&str], &str) = if figure == "fig10" { (&["--kind", "arclength"], "75") } else { (&["--kind", "mp", "--p", "1"], "100") };
            let mut f = s(&["field"]);
            f.extend(s(&sys));
            f.extend(s(kind));
            f.extend(s(&["--tau", tau, "--step", "0.05", "--slice", "x=0", "--average"]));
            f.extend(s(&["--grid", "0..6.2831853071795862:401", "--grid", "0..6.2831853071795862:401"]));
            f.extend(["--out".into(), p(&format!("{figure}_plane.csv")), "--matrix-out".into(), p(&format!("{figure}_plane.dat"))]);
            runs.push(f);
            for budget in [tau, "500"] {
                let mut c = s(&["converge"]);
                c.extend(s(&sys));
                c.extend(s(kind));
                c.extend(s(&["--step", "0.05", "--x0", "0,3.2,0", "--line", "3.6..5.9:24", "--along", "z"]));
                c.extend(s(&["--tau-max", budget, "--window", "10", "--eps", "0.001", "--out-dir"]));
                c.push(p(&format!("{figure}_converge_tau{budget}")));
                runs.push(c);
            }
        }
        "fig13" => {
            let sys = ["--system", "abc", "--param", "A=1", "--param", ABC_B, "--param", ABC_C];
            let mut f = s(&["field"]);
            f.extend(s(&sys));
            f.extend(s(&["--kind", "mp", "--p", "1", "--tau", "200", "--step", "0.1", "--average"]));
            for _ in 0..3 {
                f.extend(s(&["--grid", "0..6.2831853071795862:101"]));
            }
            f.extend(["--out".into(), p("fig13_average3d.csv")]);
            runs.push(f);
            let mut i = s(&["invariance", "--field"]);
            i.push(p("fig13_average3d.csv"));
            i.extend(s(&["--seed", "0,3.2,4.1", "--t-span", "200", "--tol-cells", "3", "--out"]));
            i.push(p("fig13_invariance.txt"));
            runs.push(i);
        }
        "fig16" => {
            let grid = ["--grid", "-1..1:401", "--grid", "-1..1:401", "--step", "0.01", "--tau", "10"];
            for system in ["rest", "harmonic-oscillator"] {
                for (kind, extra) in [("arclength", vec!["--kind", "arclength"]), ("lavd", vec!["--kind", "lavd"])] {
                    let mut rest = extra.clone();
                    rest.extend(grid);
                    runs.push(field(&[system], &rest, &format!("fig16_{system}_{kind}")));
                }
            }
        }
        "fig17" => {
            for (label, t0) in [("t0", "0"), ("tpi8", "0.39269908169872415")] {
                runs.push(field(
                    &["rotating-saddle", "--param", "omega=2"],
                    &["--kind", "mp", "--p", "0.5", "--tau", "10", "--t0", t0, "--step", "0.01", "--grid", "-1..1:401", "--grid", "-1..1:401"],
                    &format!("fig17_{label}"),
                ));
                let mut t = s(&["transect", "--system", "rotating-saddle", "--param", "omega=2", "--kind", "mp", "--p", "0.5"]);
                t.extend(s(&["--tau", "10", "--t0", t0, "--step", "0.01", "--anchor", "0,0.5", "--direction", "1,0"]));
                t.extend(s(&["--half-width", "1", "--samples", "401", "--out"]));
                t.push(p(&format!("fig17_{label}_transect.csv")));
                runs.push(t);
            }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown figure `{other}`; expected one of {}",
                FIGURES.join(" ")
            )))
        }
    }
    Ok(runs)
}

fn cmd_reproduce(a: &ReproduceArgs, argv: &[String]) -> Result<Outcome> {
    let started = Instant::now();
    let runs = preset(&a.figure, &a.out_dir)?;
    let created = resolve_created(a.run.created.as_deref())?;
    fs::create_dir_all(&a.out_dir)?;
    let mut outcome = Outcome::default();
    for mut args in runs {
        args.insert(0, "ldtool".into());
        args.extend(["--created".into(), created.clone()]);
        if let Some(t) = a.run.threads {
            args.extend(["--threads".into(), t.to_string()]);
        }
        eprintln!("running: {}", args[1..].join(" "));
        outcome.absorb(run_recorded(&args)?);
    }
    let mut manifest = Manifest::new("reproduce", argv, &created);
    manifest.push("figure", &a.figure);
    for (i, m) in outcome.manifests.iter().enumerate() {
        manifest.push(&format!("step.{i}"), m.display());
    }
    let m = manifest.write(&a.out_dir.join(format!("{}.manifest", a.figure)), started)?;
    outcome.manifests.push(m);
    Ok(outcome)
}

/// Argument vector recorded in a manifest, with its creation time pinned.
pub fn manifest_argv(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    let mut argv: Option<Vec<String>> = None;
    let mut created = None;
    for (i, line) in text.lines().enumerate() {
        let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') else {
            continue;
        };
        match k {
            "argv" => {
                argv = Some(serde_json::from_str(v).map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("bad argv: {e}"),
                })?)
            }
            "created" => created = Some(v.to_string()),
            _ => {}
        }
    }
    let mut argv = argv.filter(|a| a.len() > 1).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: "manifest has no argv".into(),
    })?;
    if let Some(created) = created {
        if !argv.iter().any(|a| a == "--created") {
            argv.extend(["--created".into(), created]);
        }
    }
    Ok(argv)
}

fn cmd_rerun(a: &RerunArgs) -> Result<Outcome> {
    let argv = manifest_argv(&a.manifest)?;
    if argv.get(1).map(String::as_str) == Some("rerun") {
        return Err(Error::InvalidConfig("manifest records a rerun".into()));
    }
    run_recorded(&argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("ldtool").chain(s.split_whitespace()).map(String::from).collect()
    }

    #[test]
    fn range_and_grid_parsing() {
        assert_eq!(parse_range("-1..1:401").unwrap(), (-1.0, 1.0, 401));
        assert_eq!(parse_range("-2..-1:5").unwrap(), (-2.0, -1.0, 5));
        assert!(parse_range("1:3").is_err());
        let g = build_grid(3, &["0..1:3".into(), "0..2:5".into()], &["x=0.5".into()]).unwrap();
        assert_eq!(g.free_axes(), vec![1, 2]);
        assert_eq!(g.axes()[0], Axis::Fixed(0.5));
        assert!(build_grid(2, &["0..1:3".into()], &[]).is_err());
        assert!(build_grid(2, &["0..0:3".into(), "0..1:3".into()], &[]).is_err());
    }

    #[test]
    fn system_parsing() {
        let s = parse_system("nonham-saddle", &["lambda=3".into()]).unwrap();
        assert_eq!(s.param("lambda"), Some(3.0));
        assert_eq!(s.param("mu"), Some(1.0));
        assert!(parse_system("nope", &[]).is_err());
        assert!(parse_system("linear-saddle", &["lambda=-1".into()]).is_err());
        assert!(parse_system("linear-saddle", &["omega=1".into()]).is_err());
    }

    #[test]
    fn auto_p_uses_system_rates() {
        let spec = parse_system("nonham-saddle", &[]).unwrap();
        let cli = Cli::try_parse_from(args("field --system nonham-saddle --auto-p --tau 15 --grid 0..1:3 --grid 0..1:3 --out f")).unwrap();
        let Command::Field(a) = cli.command else { panic!() };
        let (cfg, note) = build_config(&spec, &a.descriptor, 15.0).unwrap();
        assert!((cfg.kind.p().unwrap() - 1.0 / 15.0).abs() < 1e-15);
        assert!(note.is_none());
        let (cfg, note) = build_config(&spec, &a.descriptor, 0.5).unwrap();
        assert_eq!(cfg.kind.p(), Some(1.0));
        assert!(note.is_some());
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("f.csv");
        let ok = format!(
            "field --system linear-saddle --p 0.5 --tau 1 --grid -1..1:3 --grid -1..1:3 --out {}",
            out.display()
        );
        assert_eq!(main_recorded(&args(&ok)), 0);
        assert!(out.exists() && manifest_path(&out).exists());
        let zero_area = format!("field --system linear-saddle --p 0.5 --tau 1 --grid 1..1:3 --grid -1..1:3 --out {}", out.display());
        assert_eq!(main_recorded(&args(&zero_area)), 1);
        assert_eq!(main_recorded(&args("field --system linear-saddle")), 1);
        let blown = format!(
            "field --system nonham-saddle --p 0.5 --tau 40 --grid -1..1:3 --grid -1..1:3 --out {}",
            out.display()
        );
        assert_eq!(main_recorded(&args(&blown)), 2);
    }

    #[test]
    fn created_resolution() {
        assert_eq!(resolve_created(Some("2020-05-01T00:00:00Z")).unwrap(), "2020-05-01T00:00:00Z");
        assert!(resolve_created(Some("yesterday")).is_err());
    }

    #[test]
    fn every_figure_has_a_preset() {
        for fig in FIGURES {
            let runs = preset(fig, Path::new("out")).unwrap();
            assert!(!runs.is_empty());
            for run in runs {
                let mut full = vec!["ldtool".to_string()];
                full.extend(run);
                Cli::try_parse_from(&full).unwrap_or_else(|e| panic!("{fig}: {e}"));
            }
        }
        assert!(preset("fig7", Path::new("out")).is_err());
    }
}
