//! Command-line front end: configuration, subcommands and stamped outputs.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bosonization::counting::{counting_n_dot, gauss_circle};
use crate::bosonization::oracle::b_brute;
use crate::bosonization::{b_mollified, b_sharp, PairField};
use crate::collision::oracle::{q_brute, ORACLE_MAX_PF};
use crate::collision::{q_mollified, q_sharp};
use crate::distribution::{Distribution, SparseField};
use crate::error::{Error, Result};
use crate::evolution::{dominance_report, sweep, ScalingRegime, SweepSpec};
use crate::fit::{log_grid, loglog_slope};
use crate::lattice::{LatticeContext, Momentum};
use crate::model::{Energy, Model};
use crate::mollifier::{sharp_limit_error, KroneckerConvention};
use crate::states::{generate_slater, GeneratorOptions, SlaterData};

use config::{hash_bytes, hash_json, read_json, Overrides, PotentialConfig, RunConfig};

/// Relative conservation residual above which `eval` aborts with exit code 3.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

fn parse_lower<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "fermi-kinetics", version, about = "Kinetic operators near the Fermi ball on Z^d")]
pub struct Cli {
    /// JSON run configuration; flags below override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Fermi momentum; `sweep` accepts a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub pf: Vec<f64>,
    /// Support radius of the potential and width unit of the surface shell.
    #[arg(long, global = true)]
    pub r: Option<i64>,
    /// `indicator`, or a JSON file holding a potential table.
    #[arg(long, global = true)]
    pub potential: Option<String>,
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    #[arg(long = "kronecker-convention", global = true, value_parser = parse_lower::<KroneckerConvention>)]
    pub kronecker: Option<KroneckerConvention>,
    /// `ledger` or `raw`.
    #[arg(long, global = true, value_parser = parse_lower::<crate::lattice::Normalization>)]
    pub normalization: Option<crate::lattice::Normalization>,
    /// `full` or `free`.
    #[arg(long, global = true, value_parser = parse_lower::<crate::model::DispersionMode>)]
    pub dispersion: Option<crate::model::DispersionMode>,
    /// Weight exponent of the moment norms.
    #[arg(long, global = true)]
    pub m: Option<f64>,
    /// Constant in the remainder budgets.
    #[arg(long = "c", global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs serially. Defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample admissible Slater data and write it as JSON.
    GenState(GenStateArgs),
    /// Evaluate an operator on a state file.
    Eval(EvalArgs),
    /// Tabulate the lune counting function along a transfer direction.
    Counting(CountingArgs),
    /// Tabulate the Gauss circle remainder.
    Gauss(GaussArgs),
    /// Tabulate the sharp-limit deviation of the mollified delta.
    DeltaCheck(DeltaArgs),
    /// Dominance reports over a list of Fermi momenta.
    Sweep(SweepArgs),
    /// Dominance report for one state file.
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GenStateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    /// Particle band width beyond the surface shell, in units of r.
    #[arg(long, default_value_t = 3)]
    pub band: i64,
    /// Enforce `n <= N^(1/6)`.
    #[arg(long)]
    pub regime: bool,
    #[arg(long, default_value_t = 100_000)]
    pub attempts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Q,
    Qsharp,
    B,
    Bsharp,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(value_enum)]
    pub which: Which,
    /// Slater data or a distribution `[{"p": [..], "value": ..}, ..]`.
    #[arg(long)]
    #[serde(skip)]
    pub state: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Add a column recomputed from the literal definition.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct CountingArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Vec<i64>,
    /// Smallest `q·k` tabulated.
    #[arg(long, default_value_t = 1)]
    pub q_min: i64,
    /// Largest `q·k` tabulated; defaults to `⌈p_F⌉ |k|²`.
    #[arg(long)]
    pub q_max: Option<i64>,
}

#[derive(Args, Debug, Serialize)]
pub struct GaussArgs {
    #[arg(long, default_value_t = 0)]
    pub rmin: i64,
    #[arg(long)]
    pub rmax: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct DeltaArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1")]
    pub x: Vec<i64>,
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub t_max: f64,
    #[arg(long, default_value_t = 13)]
    pub points: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RegimeArgs {
    #[arg(long, default_value_t = 0.1)]
    pub delta1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta2: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    #[serde(rename = "T")]
    pub big_t: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long, default_value_t = 3)]
    pub band: i64,
    #[command(flatten)]
    #[serde(flatten)]
    pub regime: RegimeArgs,
    /// Also write the full reports as JSON.
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    #[serde(skip)]
    pub state: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub regime: RegimeArgs,
}

/// A state file: Slater data or a general distribution.
#[derive(Deserialize)]
#[serde(untagged)]
enum StateFile {
    Slater(SlaterData),
    General(Distribution),
}

fn load_state(path: &Path, ctx: &LatticeContext) -> Result<(Distribution, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let f = match read_json::<StateFile>(path)? {
        StateFile::Slater(s) => {
            s.validate(ctx)?;
            s.distribution()?
        }
        StateFile::General(f) => f,
    };
    f.check_dimension(ctx)?;
    Ok((f, bytes))
}

/// Shortest round-trip decimal, switching to exponent form for very small or large values.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn fmt_p(ctx: &LatticeContext, p: &Momentum) -> Vec<String> {
    p.components(ctx.d()).iter().map(|c| c.to_string()).collect()
}

fn p_header(ctx: &LatticeContext) -> Vec<String> {
    (1..=ctx.d()).map(|i| format!("p{i}")).collect()
}

/// Output text: a stamp line followed by the body.
struct Stamped {
    buf: Vec<u8>,
}

impl Stamped {
    fn new(hash: &str) -> Self {
        Stamped { buf: format!("# engine={} config={hash}\n", crate::VERSION).into_bytes() }
    }

    fn csv(&mut self) -> csv::Writer<&mut Vec<u8>> {
        csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut self.buf)
    }

    fn comment(&mut self, line: &str) {
        self.buf.extend_from_slice(format!("# {line}\n").as_bytes());
    }

    fn json(&mut self, value: &impl Serialize) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.buf, value)?;
        self.buf.push(b'\n');
        Ok(())
    }

    fn emit(&self, out: Option<&Path>) -> Result<()> {
        match out {
            Some(p) => std::fs::write(p, &self.buf)?,
            None => std::io::stdout().lock().write_all(&self.buf)?,
        }
        Ok(())
    }
}

fn write_rows(st: &mut Stamped, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = st.csv();
    w.write_record(&header).map_err(std::io::Error::from)?;
    for r in rows {
        w.write_record(&r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn overrides(cli: &Cli) -> Result<Overrides> {
    let potential = match cli.potential.as_deref() {
        None => None,
        Some("indicator") => Some(PotentialConfig::Indicator { amplitude: 1.0, radius: None }),
        Some(path) => Some(read_json::<PotentialConfig>(Path::new(path))?),
    };
    let p_f = match (&cli.command, cli.pf.as_slice()) {
        (Command::Sweep(_), [first, ..]) => Some(*first),
        (_, []) => None,
        (_, [one]) => Some(*one),
        _ => return Err(Error::Config("--pf takes a list only for sweep".into())),
    };
    Ok(Overrides {
        d: cli.d,
        p_f,
        r: cli.r,
        potential,
        amplitude: cli.amplitude,
        kronecker: cli.kronecker,
        normalization: cli.normalization,
        dispersion: cli.dispersion,
        m: cli.m,
        c: cli.c,
        seed: cli.seed,
    })
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides(cli)?)?;
    let parallel = match cli.jobs {
        Some(0) => return Err(Error::Config("--jobs must be at least 1".into())),
        Some(1) => false,
        Some(j) => {
            // a pool may already exist when running in-process more than once
            let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
            true
        }
        None => true,
    };
    let out = cli.out.as_deref();
    let stamp = |inputs: serde_json::Value| -> Result<String> {
        Ok(hash_json(&json!({ "config": cfg, "command": cli.command, "inputs": inputs })))
    };
    match &cli.command {
        Command::GenState(a) => {
            let ctx = cfg.lattice_at(cfg.lattice.p_f)?;
            let opts = GeneratorOptions { band: a.band, regime: a.regime, attempts: a.attempts };
            let data = generate_slater(&ctx, a.n, a.eps, cfg.seed, opts)?;
            data.validate(&ctx)?;
            let mut st = Stamped::new(&stamp(json!(null))?);
            st.json(&data)?;
            st.emit(out)?;
            eprintln!("valid: n = {}, holes = {}, particles = {}, N = {}", data.n(), data.holes.len(), data.particles.len(), ctx.particle_count());
        }
        Command::Eval(a) => {
            let model = cfg.model()?.with_parallel(parallel);
            let (f, bytes) = load_state(&a.state, &model.ctx)?;
            let st = eval(&model, &f, a, &stamp(json!({ "state": hash_bytes(&bytes) }))?)?;
            st.emit(out)?;
        }
        Command::Counting(a) => {
            let ctx = cfg.lattice_at(cfg.lattice.p_f)?;
            let k = Momentum::from_slice(&a.k)?;
            ctx.check_momentum(&k)?;
            if k == Momentum::ZERO {
                return Err(Error::ZeroTransfer);
            }
            let q_max = a.q_max.unwrap_or(ctx.p_f().ceil() as i64 * k.norm2());
            let mut rows = Vec::new();
            for c in a.q_min.max(1)..=q_max {
                let n = counting_n_dot(&ctx, c, &k);
                let comps = k.components(ctx.d()).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
                let ratio = n as f64 / (2.0 * std::f64::consts::PI * c as f64);
                rows.push(vec![num(ctx.p_f()), comps, c.to_string(), n.to_string(), num(ratio)]);
            }
            let mut st = Stamped::new(&stamp(json!(null))?);
            write_rows(&mut st, ["p_F", "k", "q_dot_k", "N", "ratio"].map(String::from).to_vec(), rows)?;
            st.emit(out)?;
        }
        Command::Gauss(a) => {
            if a.rmin < 0 || a.rmax < a.rmin {
                return Err(Error::Config(format!("need 0 <= rmin <= rmax, got {}..{}", a.rmin, a.rmax)));
            }
            let mut rows = Vec::new();
            for r in a.rmin..=a.rmax {
                let (n, e) = gauss_circle(r * r)?;
                let scaled = if r > 0 { num(e / (r as f64).powf(0.67)) } else { String::new() };
                rows.push(vec![r.to_string(), n.to_string(), num(e), scaled]);
            }
            let mut st = Stamped::new(&stamp(json!(null))?);
            write_rows(&mut st, ["r", "count", "remainder", "remainder_over_r067"].map(String::from).to_vec(), rows)?;
            st.emit(out)?;
        }
        Command::DeltaCheck(a) => {
            if !(a.t_min > 0.0 && a.t_max >= a.t_min && a.points >= 1) {
                return Err(Error::Config("need 0 < t_min <= t_max and at least one point".into()));
            }
            let ts = log_grid(a.t_min, a.t_max, a.points);
            let mut rows = Vec::new();
            let mut fits = Vec::new();
            for &x in &a.x {
                let mut devs = Vec::new();
                for &t in &ts {
                    let s = sharp_limit_error(x, a.y, a.lambda, t, cfg.kronecker)?;
                    devs.push(s.deviation);
                    let ratio = s.ratio().map(num).unwrap_or_default();
                    rows.push(vec![
                        x.to_string(),
                        num(a.y),
                        num(a.lambda),
                        num(t),
                        num(s.deviation),
                        num(s.off_resonance + s.on_resonance),
                        ratio,
                    ]);
                }
                fits.push((x, loglog_slope(&ts, &devs)));
            }
            let mut st = Stamped::new(&stamp(json!(null))?);
            write_rows(
                &mut st,
                ["x", "y", "lambda", "t", "deviation", "structure", "ratio"].map(String::from).to_vec(),
                rows,
            )?;
            st.emit(out)?;
            for (x, s) in fits {
                eprintln!("x = {x}: slope of log deviation vs log t = {}", s.map(num).unwrap_or("n/a".into()));
            }
        }
        Command::Sweep(a) => {
            let p_fs = if cli.pf.is_empty() { vec![cfg.lattice.p_f] } else { cli.pf.clone() };
            let spec = SweepSpec {
                p_fs,
                n: a.n,
                epsilon: a.eps,
                seed: cfg.seed,
                band: a.band,
                delta1: a.regime.delta1,
                delta2: a.regime.delta2,
                big_t: a.regime.big_t,
                m: cfg.m,
                c: cfg.c,
            };
            let hash = stamp(json!({ "p_F": spec.p_fs }))?;
            let result = sweep(&spec, |p_f| Ok(cfg.model_at(p_f)?.with_parallel(parallel)))?;
            let mut st = Stamped::new(&hash);
            let header = [
                "p_F",
                "N",
                "n",
                "b_linf_off_surface",
                "q_linf",
                "q_linf_off_surface",
                "q_over_n",
                "b_gain_on_support",
                "rem2_budget",
                "dominance",
            ];
            let rows = result
                .reports
                .iter()
                .zip(&result.q_over_n)
                .map(|(r, qn)| {
                    vec![
                        num(r.lattice.p_f),
                        r.lattice.n_particles.to_string(),
                        num(r.n),
                        num(r.b_sharp_linf_off_surface),
                        num(r.q_sharp_linf),
                        num(r.q_sharp_linf_off_surface),
                        num(*qn),
                        num(r.b_gain_on_support),
                        num(r.rem2_budget),
                        num(r.dominance),
                    ]
                })
                .collect();
            write_rows(&mut st, header.map(String::from).to_vec(), rows)?;
            let slope = result.b_slope.map(num).unwrap_or("n/a".into());
            st.comment(&format!("slope log b_linf_off_surface vs log N = {slope}"));
            st.emit(out)?;
            if let Some(path) = &a.report {
                let mut js = Stamped::new(&hash);
                js.json(&result)?;
                js.emit(Some(path))?;
            }
            eprintln!("slope log b_linf_off_surface vs log N = {slope}");
        }
        Command::Report(a) => {
            let model = cfg.model()?.with_parallel(parallel);
            let (f, bytes) = load_state(&a.state, &model.ctx)?;
            let regime = ScalingRegime::new(model.ctx.particle_count() as f64, a.regime.delta1, a.regime.delta2, a.regime.big_t)?;
            let report = dominance_report(&model, &f, &regime, cfg.m, cfg.c)?;
            let mut st = Stamped::new(&stamp(json!({ "state": hash_bytes(&bytes) }))?);
            st.json(&report)?;
            st.emit(out)?;
        }
    }
    Ok(())
}

fn relative(s: (f64, f64)) -> f64 {
    if s.1 == 0.0 {
        0.0
    } else {
        s.0.abs() / s.1
    }
}

fn check_residuals(named: &[(&str, f64)]) -> Result<()> {
    let line = named.iter().map(|(n, v)| format!("{n} = {v:e}")).collect::<Vec<_>>().join(", ");
    eprintln!("residuals: {line}");
    if let Some((n, v)) = named.iter().find(|(_, v)| !(*v <= RESIDUAL_LIMIT)) {
        return Err(Error::Invariant(format!("{n} residual {v:e} exceeds {RESIDUAL_LIMIT:e}")));
    }
    Ok(())
}

fn q_residuals(ctx: &LatticeContext, q: &SparseField, energy: bool) -> Result<()> {
    let sign = |p: &Momentum| if ctx.chi(p) { -1.0 } else { 1.0 };
    let mut named = vec![("number", relative(q.weighted_sums(|_| 1.0)))];
    for (i, name) in ["momentum_1", "momentum_2", "momentum_3"].iter().enumerate().take(ctx.d()) {
        named.push((name, relative(q.weighted_sums(|p| sign(p) * p.0[i] as f64))));
    }
    if energy {
        named.push(("energy", relative(q.weighted_sums(|p| sign(p) * p.norm2() as f64))));
    }
    check_residuals(&named)
}

fn b_residuals(b: &PairField) -> Result<()> {
    check_residuals(&[
        ("hole_sector", relative(b.hole.weighted_sums(|_| 1.0))),
        ("particle_sector", relative(b.particle.weighted_sums(|_| 1.0))),
    ])
}

fn eval(model: &Model, f: &Distribution, a: &EvalArgs, hash: &str) -> Result<Stamped> {
    let ctx = &model.ctx;
    if a.oracle && ctx.p_f() > ORACLE_MAX_PF {
        return Err(Error::OracleGuard { p_f: ctx.p_f(), limit: ORACLE_MAX_PF });
    }
    let energy = match a.which {
        Which::Q | Which::B => Energy::mollified(a.t, a.lambda)?,
        Which::Qsharp | Which::Bsharp => Energy::Sharp,
    };
    let mut header = p_header(ctx);
    header.push("value".into());
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut values: Vec<(Momentum, f64)> = Vec::new();
    match a.which {
        Which::Q | Which::Qsharp => {
            let q = match energy {
                Energy::Mollified { t, lambda } => q_mollified(model, f, lambda, t)?,
                Energy::Sharp => q_sharp(model, f)?.0,
            };
            q_residuals(ctx, &q, a.which == Which::Qsharp)?;
            for (p, v) in q.iter() {
                values.push((*p, v));
                let mut row = fmt_p(ctx, p);
                row.push(num(v));
                rows.push(row);
            }
        }
        Which::B | Which::Bsharp => {
            let b = match energy {
                Energy::Mollified { t, lambda } => b_mollified(model, f, lambda, t)?,
                Energy::Sharp => b_sharp(model, f)?,
            };
            b_residuals(&b)?;
            header.extend(["gain".into(), "loss".into()]);
            for (p, v) in b.total.iter() {
                values.push((*p, v));
                let mut row = fmt_p(ctx, p);
                row.extend([num(v), num(b.gain.get(p)), num(b.loss.get(p))]);
                rows.push(row);
            }
        }
    }
    if a.oracle {
        header.extend(["oracle".into(), "abs_diff".into()]);
        let mut worst: f64 = 0.0;
        for ((p, v), row) in values.iter().zip(rows.iter_mut()) {
            let o = match a.which {
                Which::Q | Which::Qsharp => q_brute(model, f, energy, p)?,
                Which::B | Which::Bsharp => b_brute(model, f, energy, p)?,
            };
            let diff = (v - o).abs();
            worst = worst.max(diff);
            row.extend([num(o), num(diff)]);
        }
        eprintln!("max_abs_diff = {worst:e}");
    }
    let mut st = Stamped::new(hash);
    write_rows(&mut st, header, rows)?;
    Ok(st)
}
