//! `minforge`: certify ℝ-holomorphic functions and minimal level sets, solve
//! profile ODEs and mesh three-dimensional slices.
//!
//! Exit codes: 0 certified / success, 1 rejected, 2 inconclusive, 64 bad
//! configuration, 65 empty mesh, 66 ODE blow-up, 74 I/O failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{parse_range, ConfigError, RunConfig};
use minforge::classics::ode::{solve_f, step_halving_order, OdeError, DEFAULT_BLOWUP};
use minforge::classics::recover_y;
use minforge::meshgen::{extract_mesh, mesh_stats, sample_field, to_obj, MeshError};
use minforge::minimality::{self, certify_minimal};
use minforge::rholo::{self, certify_rholo};
use minforge::Verdict;

const EXIT_CONFIG: u8 = 64;
const EXIT_EMPTY_MESH: u8 = 65;
const EXIT_BLOWUP: u8 = 66;
const EXIT_IO: u8 = 74;

#[derive(Parser, Debug)]
#[command(name = "minforge", version, about = "Minimal hypersurfaces of the form Re h(z) = F(t)")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify that h is ℝ-holomorphic (exit 0 certified, 1 rejected, 2 inconclusive).
    Certify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Certify that Re h(z) = F(t) is minimal (exit 0 certified, 1 rejected, 2 inconclusive).
    Minimal {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Mesh a three-dimensional slice of the level set as OBJ plus a JSON sidecar.
    Mesh {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve F'' + Y(F) = 0 for a g-family and write the table {t, F, F'}.
    Ode {
        #[command(flatten)]
        ode: OdeArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug, Default)]
struct SourceArgs {
    /// Holomorphic expression, e.g. "z1^2 + z2^2".
    #[arg(long)]
    expr: Option<String>,
    /// Named surface: catenoid, helicoid, scherk, doubly-periodic, clifford, det3, lawson, arg-lift-helicoid.
    #[arg(long)]
    catalog: Option<String>,
    /// Reference level set: sphere3 or hyperplane.
    #[arg(long)]
    oracle: Option<String>,
    /// Number of complex variables (also the clifford dimension).
    #[arg(long)]
    m: Option<usize>,
    /// Number of real variables t.
    #[arg(long)]
    k: Option<usize>,
    /// Profile F: zero, identity, lncosh, affine:a1,..;b, arctan-cn:A,k, expr:<text> or table:<path>.
    #[arg(long = "F")]
    f: Option<String>,
    /// Lawson exponent p.
    #[arg(long)]
    p: Option<u32>,
    /// Lawson exponent q.
    #[arg(long)]
    q: Option<u32>,
    /// Lawson scalar c, or the phase of the sine family for ode.
    #[arg(long)]
    c: Option<String>,
    /// Elliptic modulus of the doubly periodic surface.
    #[arg(long)]
    modulus: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct SamplingArgs {
    /// Seed; defaults to $MINFORGE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct MeshArgs {
    /// Three coordinate axes, e.g. x1,y1,x2.
    #[arg(long)]
    slice: Option<String>,
    /// Base point of the slice, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    base: Option<Vec<f64>>,
    /// Slice box lo:hi on every axis.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Grid points per axis.
    #[arg(long)]
    res: Option<usize>,
    /// Write a header-only OBJ instead of failing when nothing is found.
    #[arg(long)]
    allow_empty: bool,
}

#[derive(Args, Debug, Default)]
struct OdeArgs {
    /// g-family: affine, affine-imag, exponential, sine, sinh.
    #[arg(long)]
    g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long = "F0", allow_hyphen_values = true)]
    f0: Option<f64>,
    #[arg(long = "dF0", allow_hyphen_values = true)]
    df0: Option<f64>,
    /// Time of the initial data; defaults to the start of the range.
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    /// Integration range lo:hi.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long)]
    step: Option<f64>,
    /// Blow-up bound on |F| and |F'|.
    #[arg(long)]
    bound: Option<f64>,
    /// Also report the observed order from runs at span/10, span/20 and span/40.
    #[arg(long)]
    halving: bool,
}

#[derive(Args, Debug, Default)]
struct OutputArgs {
    /// Output file; JSON results go to stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Mesh statistics file; defaults to the OBJ path with a .json extension.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

impl SourceArgs {
    fn apply(self, cfg: &mut RunConfig) {
        cfg.expr = self.expr;
        cfg.catalog = self.catalog;
        cfg.oracle = self.oracle;
        cfg.m = self.m;
        cfg.k = self.k;
        cfg.f = self.f;
        cfg.p = self.p;
        cfg.q = self.q;
        cfg.c = self.c;
        cfg.modulus = self.modulus;
    }
}

fn flags_config(command: Command) -> RunConfig {
    let mut cfg = RunConfig::default();
    let sampling = |cfg: &mut RunConfig, s: SamplingArgs| {
        cfg.seed = s.seed;
        cfg.samples = s.samples;
        cfg.tol = s.tol;
    };
    let output = |cfg: &mut RunConfig, o: OutputArgs| {
        cfg.output = o.output;
        cfg.sidecar = o.sidecar;
    };
    match command {
        Command::Certify { source, sampling: s, out } | Command::Minimal { source, sampling: s, out } => {
            source.apply(&mut cfg);
            sampling(&mut cfg, s);
            output(&mut cfg, out);
        }
        Command::Mesh { source, mesh, out } => {
            source.apply(&mut cfg);
            cfg.slice = mesh.slice;
            cfg.base = mesh.base;
            cfg.bounds = mesh.bounds;
            cfg.res = mesh.res;
            cfg.allow_empty = mesh.allow_empty.then_some(true);
            output(&mut cfg, out);
        }
        Command::Ode { ode, out } => {
            cfg.g = ode.g;
            cfg.a = ode.a;
            cfg.b = ode.b;
            cfg.c = ode.c;
            cfg.f0 = ode.f0;
            cfg.df0 = ode.df0;
            cfg.t0 = ode.t0;
            cfg.range = ode.range;
            cfg.step = ode.step;
            cfg.bound = ode.bound;
            cfg.halving = ode.halving.then_some(true);
            output(&mut cfg, out);
        }
    }
    cfg
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Certify { .. } => "certify",
        Command::Minimal { .. } => "minimal",
        Command::Mesh { .. } => "mesh",
        Command::Ode { .. } => "ode",
    }
}

enum Failure {
    Config(ConfigError),
    Io(String),
    Exit(u8),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

/// Result payload with the effective configuration alongside.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    result: T,
}

/// Writes through a temporary file in the destination directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn emit_json<T: Serialize>(cfg: &RunConfig, result: T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(&Report { config: cfg, result }).expect("serializable");
    text.push('\n');
    match &cfg.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Certified => 0,
        Verdict::Rejected => 1,
        Verdict::Inconclusive | Verdict::InsufficientSamples => 2,
    }
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v).ok().and_then(|x| x.as_str().map(str::to_owned)).unwrap_or_default()
}

fn run_certify(cfg: &mut RunConfig) -> Result<u8, Failure> {
    let h = cfg.holo_source()?;
    let seed = cfg.materialize_seed()?;
    let n = cfg.samples.unwrap_or(rholo::DEFAULT_SAMPLES);
    let tol = cfg.tol.unwrap_or(rholo::DEFAULT_TOL);
    let cert = certify_rholo(&h, n, seed, tol);
    let profile = cert.mu_profile();
    eprintln!(
        "{}: {} live samples, max residual {:e}, mu {}",
        verdict_name(cert.verdict),
        cert.samples.iter().filter(|s| !s.degenerate).count(),
        cert.max_residual(),
        serde_json::to_string(&profile.form).unwrap_or_default()
    );
    let code = verdict_code(cert.verdict);
    emit_json(cfg, cert)?;
    Ok(code)
}

fn run_minimal(cfg: &mut RunConfig) -> Result<u8, Failure> {
    let surface = cfg.surface()?;
    if let Some(h) = &surface.h {
        warn_lawson_gcd(h);
    }
    let seed = cfg.materialize_seed()?;
    let n = cfg.samples.unwrap_or(minimality::DEFAULT_SAMPLES);
    let tol = cfg.tol.unwrap_or(minimality::DEFAULT_TOL);
    let cert = certify_minimal(&surface, n, seed, tol);
    eprintln!(
        "{}: {} of {} samples survived, max residual {:e}{}",
        verdict_name(cert.verdict),
        cert.samples.len(),
        cert.n_samples,
        cert.max_residual,
        if cert.retried { " (after a rerun)" } else { "" }
    );
    let code = verdict_code(cert.verdict);
    emit_json(cfg, cert)?;
    Ok(code)
}

fn warn_lawson_gcd(h: &minforge::holo::HoloExpr) {
    use minforge::holo::Node;
    let Node::Product(factors) = h.root() else { return };
    let exps: Option<Vec<u32>> = factors
        .iter()
        .map(|f| match f {
            Node::Var(_) => Some(1),
            Node::RealPow(b, r) if matches!(**b, Node::Var(_)) && r.fract() == 0.0 && *r > 0.0 => Some(*r as u32),
            _ => None,
        })
        .collect();
    if let Some(e) = exps {
        let g = rholo::exponent_gcd(&e);
        if g > 1 {
            eprintln!("warning: exponents {e:?} share the factor {g}; the cone is covered {g} times");
        }
    }
}

fn run_mesh(cfg: &mut RunConfig) -> Result<u8, Failure> {
    let surface = cfg.surface()?;
    let slice = cfg.slice(&surface)?;
    let Some(out) = cfg.output.clone() else {
        return Err(ConfigError("mesh needs --output".into()).into());
    };
    let grid = sample_field(&surface, &slice);
    let mesh = match extract_mesh(&grid, 0.0) {
        Ok(m) => m,
        Err(MeshError::Empty) if cfg.allow_empty == Some(true) => Default::default(),
        Err(MeshError::Empty) => {
            eprintln!("error: the slice contains no part of the level set (use --allow-empty to write anyway)");
            return Ok(EXIT_EMPTY_MESH);
        }
        Err(e) => return Err(Failure::Io(e.to_string())),
    };
    let stats = mesh_stats(&surface, &slice, &mesh);
    let config_line = serde_json::to_string(&*cfg).expect("serializable");
    let obj = to_obj(&mesh);
    let (header, body) = obj.split_once('\n').unwrap_or((&obj, ""));
    let text = format!("{header}\n# config: {config_line}\n{body}");
    write_atomic(&out, text.as_bytes())?;
    let sidecar = cfg.sidecar.clone().unwrap_or_else(|| out.with_extension("json"));
    let mut side = serde_json::to_string_pretty(&Report { config: cfg, result: &stats }).expect("serializable");
    side.push('\n');
    write_atomic(&sidecar, side.as_bytes())?;
    eprintln!("{} vertices, {} triangles, max |f| {:e}", stats.vertex_count, stats.triangle_count, stats.max_abs_f);
    Ok(0)
}

#[derive(Serialize)]
struct OdeReport<'a> {
    g: minforge::classics::GFamily,
    #[serde(flatten)]
    profile: &'a minforge::classics::FProfile,
    grid_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<f64>,
}

fn run_ode(cfg: &mut RunConfig) -> Result<u8, Failure> {
    let g = cfg.g_family()?;
    let y = recover_y(&g).map_err(|e| ConfigError(e.to_string()))?;
    let (lo, hi) = parse_range(cfg.range.as_deref().unwrap_or("0:1"))?;
    let t0 = cfg.t0.unwrap_or(lo);
    let (f0, df0) = (cfg.f0.unwrap_or(0.0), cfg.df0.unwrap_or(0.0));
    let step = cfg.step.unwrap_or(1e-3);
    let bound = cfg.bound.unwrap_or(DEFAULT_BLOWUP);
    let on_err = |e: OdeError| match e {
        OdeError::BlowUp { .. } => {
            eprintln!("error: {e}");
            Failure::Exit(EXIT_BLOWUP)
        }
        other => Failure::Config(ConfigError(other.to_string())),
    };
    let profile = solve_f(&y, f0, df0, t0, (lo, hi), step, bound).map_err(on_err)?;
    let order = match cfg.halving {
        Some(true) => Some(step_halving_order(&y, f0, df0, t0, (lo, hi), (hi - lo) / 10.0, bound).map_err(on_err)?),
        _ => None,
    };
    let last = profile.table.t.len() - 1;
    eprintln!(
        "F({}) = {:.9}, grid residual {:e}{}",
        profile.table.t[last],
        profile.table.f[last],
        profile.grid_residual(),
        order.map_or(String::new(), |o| format!(", observed order {o:.3}"))
    );
    let report = OdeReport { g, profile: &profile, grid_residual: profile.grid_residual(), order };
    emit_json(cfg, report)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut flags = RunConfig::default();
    if let Some(c) = cli.command {
        let name = command_name(&c);
        flags = flags_config(c);
        flags.command = Some(name.to_string());
    }
    let mut cfg = file.merge(flags);
    match cfg.command.clone().as_deref() {
        Some("certify") => run_certify(&mut cfg),
        Some("minimal") => run_minimal(&mut cfg),
        Some("mesh") => run_mesh(&mut cfg),
        Some("ode") => run_ode(&mut cfg),
        Some(other) => Err(ConfigError(format!("unknown command '{other}'")).into()),
        None => Err(ConfigError("no command given (certify, minimal, mesh or ode)".into()).into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Err(Failure::Exit(code)) => ExitCode::from(code),
    }
}
