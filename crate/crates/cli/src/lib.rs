//! Command-line surface: argument parsing, table resolution, deterministic
//! report rendering and exit-status mapping.
//!
//! Exit status is 0 on success (including measured-and-reported outcomes),
//! 2 when an exact identity fails, and 1 on usage or resource errors.

use chowla_core::arith::{is_prime, primes_up_to, IntPolynomial};
use chowla_core::characters::{agreement_score, joka_bound, joka_sum, search_exceptional, QuadCharacter};
use chowla_core::decomposition::{assemble_s, legendre_table, weil_complete_sum_with};
use chowla_core::proxy::{correlation_report, proxy_gap, theorem_bound, BoundParams, ShiftSystem};
use chowla_core::sieve::{LiouvilleTable, TableConfig};
use chowla_core::weights::{build_weights, verify_envelope};
use clap::{ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const TOOL: &str = "chowla";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable naming the default table file.
pub const TABLE_ENV: &str = "LIOUVILLE_TABLE_PATH";

#[derive(Debug, Parser)]
#[command(name = "chowla", version, about = "Liouville correlations, quadratic characters and sieve identities")]
pub struct Cli {
    /// Worker threads (0 = one per core); never affects output.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format for commands offering both.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Liouville table file.
    #[arg(long, global = true, env = TABLE_ENV)]
    pub table: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a Liouville table and write it in the binary table format.
    SieveBuild {
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = 1 << 18)]
        segment: usize,
        /// Output file (defaults to --table).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlation of λ (and of λ_z when --z and --disc are given).
    Correlate {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        shifts: ShiftSystem,
        #[arg(long)]
        z: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        disc: Option<i64>,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Measured λ → λ_z transition gap against its bound.
    ProxyGap {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        z: f64,
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value = "0,1")]
        shifts: ShiftSystem,
    },
    /// Evaluate the conditional correlation bounds at x = q^V.
    Bound {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        eta: f64,
        #[arg(long = "V")]
        big_v: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = BoundParams::DEFAULT_C)]
        c: f64,
        #[arg(long, default_value_t = BoundParams::DEFAULT_C)]
        c_prime: f64,
        #[arg(long, default_value_t = BoundParams::DEFAULT_DELTA)]
        delta: f64,
    },
    /// Build sieve weights and verify them pointwise up to N.
    WeightsVerify {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        u: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long = "N")]
        n: u64,
    },
    /// Compare the restricted correlation with its tuple decomposition.
    DecomposeVerify {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        z: f64,
        #[arg(long)]
        u: f64,
        #[arg(long)]
        shifts: ShiftSystem,
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        /// Also run the tuple-enumeration path.
        #[arg(long)]
        enumerate: bool,
    },
    /// Complete Legendre-symbol sums of random polynomials against the Weil bound.
    WeilBench {
        #[arg(long)]
        p_min: u64,
        #[arg(long)]
        p_max: u64,
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long, default_value_t = 4)]
        deg: usize,
    },
    /// Rank fundamental discriminants by how often χ(p) = -1 for p <= z.
    SearchCharacters {
        #[arg(long, allow_negative_numbers = true)]
        min: i64,
        #[arg(long, allow_negative_numbers = true)]
        max: i64,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// The prime sum Σ_{z<p<=x} (1+χ(p))/p, with its bound when --eta is set.
    Joka {
        #[arg(long, allow_negative_numbers = true)]
        disc: i64,
        #[arg(long)]
        z: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        eta: Option<f64>,
    },
}

/// Exit status and captured streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] chowla_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

macro_rules! core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
core_error!(
    chowla_core::sieve::SieveError,
    chowla_core::characters::CharacterError,
    chowla_core::proxy::ProxyError,
    chowla_core::weights::WeightError,
    chowla_core::decomposition::DecompError,
    chowla_core::arith::ArithError
);

/// A rendered report plus whether an exact identity failed.
struct Report {
    body: String,
    identity_failed: bool,
}

type CmdResult = Result<Report, CliError>;

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => RunOutput {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => RunOutput {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            return RunOutput {
                code: 1,
                stdout: String::new(),
                stderr: e.to_string(),
            }
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let params = echo_params(&matches, name, sub);
    let ctx = Context {
        name: name.to_string(),
        params,
        seed: cli.seed,
        format: cli.format,
        table: cli.table.clone(),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => return failure(1, format!("error: thread pool: {e}\n")),
    };
    match pool.install(|| dispatch(&ctx, &cli.command)) {
        Ok(r) => RunOutput {
            code: if r.identity_failed { 2 } else { 0 },
            stdout: r.body,
            stderr: if r.identity_failed {
                format!("error: exact identity violated in `{name}`\n")
            } else {
                String::new()
            },
        },
        Err(e) => failure(1, format!("error: {e}\n")),
    }
}

fn failure(code: i32, stderr: String) -> RunOutput {
    RunOutput {
        code,
        stdout: String::new(),
        stderr,
    }
}

/// Raw values of every argument (defaults included) except `--threads`,
/// keyed by long flag name.
fn echo_params(top: &ArgMatches, name: &str, sub: &ArgMatches) -> Map<String, Value> {
    let root = Cli::command();
    let sub_cmd = root.find_subcommand(name).expect("known subcommand").clone();
    let mut out = Map::new();
    for (cmd, m) in [(&root, top), (&sub_cmd, sub)] {
        for arg in cmd.get_arguments() {
            let id = arg.get_id().as_str();
            let Some(long) = arg.get_long() else { continue };
            if id == "threads" || out.contains_key(long) {
                continue;
            }
            if let Ok(Some(vals)) = m.try_get_raw(id) {
                let vals: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
                let v = match vals.len() {
                    0 => Value::Null,
                    1 => Value::String(vals[0].clone()),
                    _ => Value::Array(vals.into_iter().map(Value::String).collect()),
                };
                out.insert(long.to_string(), v);
            }
        }
    }
    out
}

struct Context {
    name: String,
    params: Map<String, Value>,
    seed: u64,
    format: Option<Format>,
    table: Option<PathBuf>,
}

impl Context {
    fn json<T: Serialize>(&self, result: &T, identity_failed: bool) -> CmdResult {
        let mut result = serde_json::to_value(result).map_err(|e| usage(e.to_string()))?;
        round_floats(&mut result);
        let mut env = Map::new();
        env.insert("tool".into(), TOOL.into());
        env.insert("version".into(), VERSION.into());
        env.insert("command".into(), self.name.clone().into());
        env.insert("params".into(), Value::Object(self.params.clone()));
        env.insert("result".into(), result);
        let mut body = serde_json::to_string_pretty(&Value::Object(env)).map_err(|e| usage(e.to_string()))?;
        body.push('\n');
        Ok(Report {
            body,
            identity_failed,
        })
    }

    fn csv_header(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={}", v.as_str().map_or_else(|| v.to_string(), str::to_string)))
            .collect();
        format!("# {TOOL} {VERSION} {} {}\n", self.name, params.join(" "))
    }

    fn require_json(&self) -> Result<(), CliError> {
        match self.format {
            Some(Format::Csv) => Err(usage(format!("`{}` only supports JSON output", self.name))),
            _ => Ok(()),
        }
    }

    /// The configured table if it covers `needed`, else a fresh in-memory one.
    fn table_covering(&self, needed: u64) -> Result<LiouvilleTable, CliError> {
        let needed = needed.max(1);
        if let Some(path) = &self.table {
            if path.exists() {
                let t = LiouvilleTable::load(path)?;
                if t.limit() >= needed {
                    return Ok(t);
                }
            }
        }
        Ok(LiouvilleTable::build_with(needed, &TableConfig::for_limit(needed))?)
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

/// Rounds every float to 15 significant digits.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().unwrap();
            if let Some(r) = serde_json::Number::from_f64(round15(f)) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn round15(f: f64) -> f64 {
    if f.is_finite() {
        format!("{f:.14e}").parse().unwrap_or(f)
    } else {
        f
    }
}

fn character(d: i64, eta: Option<f64>) -> Result<QuadCharacter, CliError> {
    let chi = QuadCharacter::from_discriminant(d)?;
    Ok(match eta {
        Some(e) => chi.with_eta(e)?,
        None => chi,
    })
}

fn floor_arg(x: f64, name: &str) -> Result<u64, CliError> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(usage(format!("--{name} must be a finite non-negative number")));
    }
    Ok(x.floor() as u64)
}

fn dispatch(ctx: &Context, cmd: &Command) -> CmdResult {
    match cmd {
        Command::SieveBuild { limit, segment, out } => sieve_build(ctx, *limit, *segment, out.as_deref()),
        Command::Correlate {
            x,
            shifts,
            z,
            disc,
            eta,
        } => {
            ctx.require_json()?;
            let proxy = match (z, disc) {
                (Some(z), Some(d)) => Some((*z, character(*d, *eta)?)),
                (None, None) => None,
                _ => return Err(usage("--z and --disc must be given together".into())),
            };
            let t = ctx.table_covering(floor_arg(*x, "x")? + shifts.max_shift())?;
            let r = correlation_report(&t, shifts, *x, proxy.as_ref().map(|(z, c)| (*z, c)))?;
            ctx.json(&r, false)
        }
        Command::ProxyGap {
            x,
            z,
            disc,
            eta,
            shifts,
        } => {
            ctx.require_json()?;
            let chi = character(*disc, Some(*eta))?;
            let t = ctx.table_covering(floor_arg(*x, "x")? + shifts.max_shift())?;
            let g = proxy_gap(*x, *z, &chi, shifts, &t)?;
            ctx.json(&g, g.lhs_direct > g.lhs_expansion)
        }
        Command::Bound {
            q,
            eta,
            big_v,
            eps,
            k,
            c,
            c_prime,
            delta,
        } => {
            ctx.require_json()?;
            let b = theorem_bound(&BoundParams {
                q: *q,
                eta: *eta,
                big_v: *big_v,
                epsilon: *eps,
                k: *k,
                c: *c,
                c_prime: *c_prime,
                delta: *delta,
            })?;
            ctx.json(&b, false)
        }
        Command::WeightsVerify { z, u, beta, n } => {
            ctx.require_json()?;
            let w = build_weights(*z, *u, *beta)?;
            let t = ctx.table_covering(*n)?;
            let r = verify_envelope(&w, *n, &t)?;
            let failed = !(r.exact_outside_envelope && r.bounded_by_one && r.support_ok);
            ctx.json(&r, failed)
        }
        Command::DecomposeVerify {
            x,
            z,
            u,
            shifts,
            disc,
            enumerate,
        } => {
            ctx.require_json()?;
            let chi = character(*disc, None)?;
            let t = ctx.table_covering(floor_arg(*x, "x")? + shifts.max_shift())?;
            let r = assemble_s(*x, *z, *u, shifts, &chi, &t, *enumerate)?;
            ctx.json(&r, !r.identity_holds())
        }
        Command::WeilBench {
            p_min,
            p_max,
            trials,
            deg,
        } => weil_bench(ctx, *p_min, *p_max, *trials, *deg),
        Command::SearchCharacters { min, max, z, top } => {
            if min > max {
                return Err(usage("--min must not exceed --max".into()));
            }
            let ranked = search_exceptional(*min, *max, *z, *top);
            if ctx.format == Some(Format::Json) {
                return ctx.json(&ranked, false);
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| usage(e.to_string());
            w.write_record(["discriminant", "q", "penalty", "minus_count", "prime_count"])
                .map_err(io)?;
            for r in &ranked {
                w.write_record([
                    r.discriminant.to_string(),
                    r.modulus.to_string(),
                    round15(r.score.penalty).to_string(),
                    r.score.minus_count.to_string(),
                    r.score.prime_count.to_string(),
                ])
                .map_err(io)?;
            }
            csv_report(ctx, w)
        }
        Command::Joka { disc, z, x, eta } => {
            ctx.require_json()?;
            if !(*x > *z && *z > 1.0) {
                return Err(usage(format!("x > z > 1 required (x = {x}, z = {z})")));
            }
            let chi = character(*disc, *eta)?;
            let bound = match eta {
                Some(e) if chi.modulus() >= 2 => Some(joka_bound(chi.modulus(), *e, *z, *x)?),
                _ => None,
            };
            #[derive(Serialize)]
            struct Joka {
                sum: f64,
                agreement_below_z: chowla_core::characters::AgreementScore,
                bound: Option<chowla_core::characters::PrimeSumBound>,
            }
            ctx.json(
                &Joka {
                    sum: joka_sum(&chi, *z, *x),
                    agreement_below_z: agreement_score(&chi, *z),
                    bound,
                },
                false,
            )
        }
    }
}

fn csv_report(ctx: &Context, w: csv::Writer<Vec<u8>>) -> CmdResult {
    let bytes = w.into_inner().map_err(|e| usage(e.to_string()))?;
    let mut body = ctx.csv_header();
    body.push_str(&String::from_utf8_lossy(&bytes));
    Ok(Report {
        body,
        identity_failed: false,
    })
}

fn sieve_build(ctx: &Context, limit: u64, segment: usize, out: Option<&Path>) -> CmdResult {
    ctx.require_json()?;
    let config = TableConfig {
        segment_size: segment,
        keep_spf: false,
        ..TableConfig::for_limit(limit)
    };
    let t = LiouvilleTable::build_with(limit, &config)?;
    let mut bytes = Vec::new();
    t.write_to(&mut bytes)?;
    let path = out.map(Path::to_path_buf).or_else(|| ctx.table.clone());
    if let Some(p) = &path {
        std::fs::write(p, &bytes).map_err(CliError::Io)?;
    }
    #[derive(Serialize)]
    struct Built {
        limit: u64,
        bytes: usize,
        sha256: String,
        summatory: i64,
        path: Option<String>,
    }
    let digest = Sha256::digest(&bytes);
    ctx.json(
        &Built {
            limit,
            bytes: bytes.len(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            summatory: t.summatory(limit)?,
            path: path.map(|p| p.display().to_string()),
        },
        false,
    )
}

/// One row of the Weil benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct WeilRow {
    pub p: u64,
    pub f: String,
    pub abs_sum: u64,
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Random polynomials mod `p` of degree `1..=deg` that are not a constant
/// times a square, drawn from stream `p` of the seeded generator.
pub fn random_nonsquare_polys(p: u64, count: usize, deg: usize, seed: u64) -> Vec<IntPolynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let d = rng.gen_range(1..=deg.max(1));
        let mut c: Vec<i128> = (0..=d).map(|_| rng.gen_range(0..p) as i128).collect();
        c[d] = rng.gen_range(1..p) as i128;
        let f = IntPolynomial::new(c);
        if let Ok(class) = chowla_core::arith::is_square_multiple_mod_p(&f, p) {
            if !class.is_square_multiple() {
                out.push(f);
            }
        }
    }
    out
}

fn weil_bench(ctx: &Context, p_min: u64, p_max: u64, trials: u32, deg: usize) -> CmdResult {
    if p_max > 100_000 || p_min > p_max {
        return Err(usage("require p_min <= p_max <= 100000".into()));
    }
    if deg == 0 {
        return Err(usage("--deg must be at least 1".into()));
    }
    let primes: Vec<u64> = primes_up_to(p_max)
        .into_iter()
        .filter(|&p| p >= p_min.max(3) && is_prime(p))
        .collect();
    let rows: Vec<Result<Vec<WeilRow>, CliError>> = primes
        .par_iter()
        .map(|&p| {
            let table = legendre_table(p);
            random_nonsquare_polys(p, trials as usize, deg, ctx.seed)
                .iter()
                .map(|f| {
                    let w = weil_complete_sum_with(p, f, &table)?;
                    Ok(WeilRow {
                        p,
                        f: f.to_string(),
                        abs_sum: w.abs_sum,
                        bound: w.weil_bound,
                        ratio: if w.weil_bound > 0.0 {
                            w.abs_sum as f64 / w.weil_bound
                        } else {
                            0.0
                        },
                        holds: w.holds.unwrap_or(true),
                    })
                })
                .collect()
        })
        .collect();
    let mut all = Vec::new();
    for r in rows {
        all.extend(r?);
    }
    let failed = all.iter().any(|r| !r.holds);
    if ctx.format == Some(Format::Json) {
        return ctx.json(&all, failed);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| usage(e.to_string());
    w.write_record(["p", "f", "abs_sum", "bound", "ratio"]).map_err(io)?;
    for r in &all {
        w.write_record([
            r.p.to_string(),
            r.f.clone(),
            r.abs_sum.to_string(),
            round15(r.bound).to_string(),
            round15(r.ratio).to_string(),
        ])
        .map_err(io)?;
    }
    let mut rep = csv_report(ctx, w)?;
    rep.identity_failed = failed;
    Ok(rep)
}
