//! `newman`: command-line front end for the partition congruence toolkit.
//!
//! Every subcommand computes a deterministic report (no timestamps in
//! payloads), renders it as JSON or CSV, and appends it to an append-only
//! JSONL result cache keyed by a content hash of the experiment parameters.
//!
//! Exit codes: 0 success, 2 validation error, 3 exhausted search,
//! 4 truncation budget exceeded.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use newman_cli::cache;
use newman_cli::etaspec::parse_eta_spec;
use newman_cli::exit;

use newman_core::cusps::{
    cusp_meta, gauss_sweep, omega_set, valence_check, CuspExpansionMeta, OmegaSummary,
    ValenceCheck,
};
use newman_core::hecke::{
    build_f_ell_holomorphic, build_f_ell_treneer, eigencongruence_check, HeckeContext,
    HeckeError, HeckeReport,
};
use newman_core::newman::{
    bd_census, census, certify_m_partition, density_experiment, growth_diagnostic, prime_search,
    ramanujan_check, synthetic_eigen_stream, tcore_divisibility_check, BdCensus, CensusReport,
    DensityTable, EigenTarget, NewmanError, PrimeSearchConfig, PrimeSearchOutcome,
};
use newman_core::numtheory::{euler_phi, factorize, gcd_u64};
use newman_core::partitions::{stream, SequenceSpec, SequenceVariant};
use newman_core::qseries::{eta_expand, EtaQuotient, QSeries};

#[derive(Parser)]
#[command(
    name = "newman",
    version,
    about = "Partition congruence censuses, Hecke eigen checks, and density experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format; CSV is available for tabular reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Result cache path (JSONL). Defaults to $NEWMAN_CACHE, else
    /// ./newman-cache.jsonl.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    /// Serve an identical earlier experiment from the cache if present.
    #[arg(long, global = true)]
    cached: bool,

    /// Skip the cache entirely (no reads, no appends).
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum SeqName {
    Partition,
    Tcore,
    Frob,
}

#[derive(Subcommand)]
enum Command {
    /// Partition numbers p(n) mod M.
    Pn(StreamArgs),
    /// t-core partition numbers c_t(n) mod M.
    Tcore(TcoreArgs),
    /// h-colored Frobenius partition numbers cphi_h(n) mod M.
    Frob(FrobArgs),
    /// Residue census of a coefficient stream.
    Census(CensusArgs),
    /// Verify the Ramanujan congruences up to a horizon.
    Ramanujan {
        #[arg(long, default_value_t = 100_000)]
        limit: usize,
    },
    /// Eigen-congruence check f|T = lambda f (mod m) on a named form.
    HeckeCheck(HeckeCheckArgs),
    /// Build a twist-construction cusp form expansion.
    BuildFell(BuildFellArgs),
    /// Search for a prime satisfying the eigen and Kronecker conditions.
    #[command(subcommand)]
    PrimeSearch(PrimeSearchCmd),
    /// Certify a modulus via the partition-stream sufficient conditions.
    Certify {
        #[arg(long)]
        modulus: u64,
        #[arg(long, default_value_t = 10_000)]
        x_search: u64,
    },
    /// Almost-prime density ratios against the predicted limit.
    Density(DensityArgs),
    /// Count integers with exactly d distinct prime divisors.
    BdCensus {
        #[arg(long)]
        d: u32,
        #[arg(long)]
        limit: u64,
    },
    /// Cusp widths, leading exponents, pole classes of an eta quotient.
    CuspOrders(CuspOrdersArgs),
    /// Sweep the two-color Gauss factor for vanishing counterexamples.
    GaussSweep {
        #[arg(long, default_value_t = 48)]
        c_max: i64,
        #[arg(long, default_value_t = 24)]
        w_max: i64,
        #[arg(long, default_value_t = 5)]
        matrices: usize,
    },
    /// Check the squarefree-part divisibility argument for even t.
    TcoreDiv {
        #[arg(long, default_value_t = 10_000)]
        t_max: u64,
    },
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    limit: usize,
    #[arg(long)]
    modulus: u64,
}

#[derive(Args)]
struct TcoreArgs {
    #[arg(long)]
    t: u32,
    #[arg(long)]
    limit: usize,
    #[arg(long)]
    modulus: u64,
}

#[derive(Args)]
struct FrobArgs {
    #[arg(long)]
    colors: u32,
    #[arg(long)]
    limit: usize,
    #[arg(long)]
    modulus: u64,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, value_enum)]
    seq: SeqName,
    #[arg(long)]
    modulus: u64,
    #[arg(long)]
    limit: u64,
    /// t-core parameter (seq = tcore).
    #[arg(long)]
    t: Option<u32>,
    /// Color count (seq = frob, needs >= 2).
    #[arg(long)]
    colors: Option<u32>,
    /// CSV: emit (n, residue) rows instead of the per-residue summary.
    #[arg(long)]
    rows: bool,
    /// Attach the DIAGNOSTIC growth fits to the JSON report.
    #[arg(long)]
    growth: bool,
}

#[derive(Args)]
struct HeckeCheckArgs {
    /// delta | partition-fell | tcore-fell
    #[arg(long)]
    form: String,
    #[arg(long)]
    p: u64,
    #[arg(long)]
    lambda: u64,
    #[arg(long)]
    n_check: i64,
    /// Coefficient modulus the form is expanded over.
    #[arg(long)]
    modulus: u64,
    /// Comparison modulus; defaults to ell^e for twist forms, else modulus.
    #[arg(long)]
    check_mod: Option<u64>,
    #[arg(long)]
    ell: Option<u64>,
    #[arg(long, default_value_t = 1)]
    e: u32,
    #[arg(long)]
    beta: Option<u32>,
    /// t-core parameter (form = tcore-fell).
    #[arg(long)]
    t: Option<u32>,
    /// Expansion window in q-steps past the leading exponent.
    #[arg(long, default_value_t = 2_000)]
    trunc: usize,
    /// Kronecker discriminant of the base form's nebentypus.
    #[arg(long)]
    char_disc: Option<i64>,
}

#[derive(Args)]
struct BuildFellArgs {
    /// Eta-quotient spec: partition | delta | tcore:T | unit:L | d:r,...@N
    #[arg(long)]
    eta: String,
    #[arg(long)]
    ell: u64,
    #[arg(long, default_value_t = 1)]
    e: u32,
    /// Use the Treneer character slice instead of the trivial-twist route.
    #[arg(long)]
    treneer: bool,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    r1: i64,
    #[arg(long)]
    beta: Option<u32>,
    #[arg(long, default_value_t = 500)]
    trunc: usize,
    #[arg(long)]
    modulus: u64,
}

#[derive(Subcommand)]
enum PrimeSearchCmd {
    /// Forced eigen stream with a seeded prime; exercises the machinery.
    Synthetic(SyntheticSearchArgs),
    /// The genuine partition-stream search (documented long-running mode
    /// with checkpointed resume; the realistic progressions demand huge
    /// truncations and will exit 4 unless trunc covers p_max^2 n_check).
    Partition(PartitionSearchArgs),
}

#[derive(Args)]
struct SyntheticSearchArgs {
    #[arg(long)]
    ell: u64,
    #[arg(long)]
    seed_prime: u64,
    #[arg(long)]
    n0: u64,
    /// Defaults to seed_prime - 1, making the seeded prime the first
    /// candidate.
    #[arg(long)]
    progression: Option<u64>,
    #[arg(long)]
    p_max: Option<u64>,
    #[arg(long, default_value_t = 2)]
    n_check: i64,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long, default_value_t = 0x6e65776d616e)]
    seed: u64,
}

#[derive(Args)]
struct PartitionSearchArgs {
    #[arg(long)]
    modulus: u64,
    #[arg(long)]
    n0: u64,
    #[arg(long)]
    progression: u64,
    #[arg(long)]
    p_max: u64,
    #[arg(long, default_value_t = 1)]
    n_check: i64,
    /// Expansion window in q-steps; must reach 24 p_max^2 n_check.
    #[arg(long)]
    trunc: usize,
    /// Checkpoint file for resumable scans.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Candidates per checkpointed chunk.
    #[arg(long, default_value_t = 64)]
    chunk: u64,
}

#[derive(Args)]
struct DensityArgs {
    /// `all` or `A,Q` for the class p = A (mod Q).
    #[arg(long, default_value = "all")]
    class: String,
    /// Almost-prime orders, comma separated.
    #[arg(long, default_value = "1,2")]
    m: String,
    /// Horizons, comma separated.
    #[arg(long, default_value = "1000000")]
    xs: String,
    /// Predicted prime density; defaults to 1/phi(Q) for a class, 1 for all.
    #[arg(long)]
    target: Option<f64>,
}

#[derive(Args)]
struct CuspOrdersArgs {
    /// Eta-quotient spec: partition | delta | tcore:T | unit:L | d:r,...@N
    #[arg(long)]
    eta: String,
    /// Include the valence-formula check (holomorphic quotients).
    #[arg(long)]
    valence: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<NewmanError>()
                .map(newman_exit)
                .or_else(|| err.downcast_ref::<HeckeError>().map(hecke_exit))
                .unwrap_or(exit::VALIDATION);
            ExitCode::from(code as u8)
        }
    }
}

fn newman_exit(e: &NewmanError) -> i32 {
    match e {
        NewmanError::TruncationBudget { .. } => exit::TRUNCATION,
        NewmanError::Hecke(h) => hecke_exit(h),
        _ => exit::VALIDATION,
    }
}

fn hecke_exit(e: &HeckeError) -> i32 {
    match e {
        HeckeError::InsufficientReach { .. } => exit::TRUNCATION,
        _ => exit::VALIDATION,
    }
}

/// Payload plus the exit code its status implies.
struct Outcome {
    payload: Value,
    code: i32,
}

fn run(cli: &Cli) -> Result<i32> {
    let description = describe(&cli.command);
    let key = cache::cache_key(&description);
    let cache_path = resolve_cache_path(cli);

    let (payload, code, fresh) = if cli.cached && !cli.no_cache {
        match cache::lookup(&cache_path, &key) {
            Ok((Some(hit), skipped)) => {
                if skipped > 0 {
                    eprintln!("warning: skipped {skipped} corrupt cache line(s)");
                }
                let code = exit_from_payload(&hit);
                (hit, code, false)
            }
            Ok((None, skipped)) => {
                if skipped > 0 {
                    eprintln!("warning: skipped {skipped} corrupt cache line(s)");
                }
                let outcome = execute(&cli.command)?;
                (outcome.payload, outcome.code, true)
            }
            Err(e) => bail!("cache read failed: {e}"),
        }
    } else {
        let outcome = execute(&cli.command)?;
        (outcome.payload, outcome.code, true)
    };

    if fresh && !cli.no_cache {
        if let Err(e) = cache::append(&cache_path, &description, &key, &payload) {
            eprintln!("warning: cache append failed: {e}");
        }
    }

    let rendered = render(&cli.command, cli.format, &payload)?;
    match &cli.out {
        Some(path) => std::fs::write(path, rendered.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(rendered.as_bytes())?;
        }
    }
    Ok(code)
}

fn resolve_cache_path(cli: &Cli) -> PathBuf {
    cli.cache
        .clone()
        .or_else(|| std::env::var_os("NEWMAN_CACHE").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("newman-cache.jsonl"))
}

fn exit_from_payload(payload: &Value) -> i32 {
    match payload.get("status").and_then(Value::as_str) {
        Some("exhausted") | Some("none") => exit::EXHAUSTED,
        _ => exit::OK,
    }
}

/// Canonical experiment description for cache keying; rendering options
/// (format, out) intentionally excluded.
fn describe(cmd: &Command) -> String {
    match cmd {
        Command::Pn(a) => format!("pn limit={} modulus={}", a.limit, a.modulus),
        Command::Tcore(a) => format!("tcore t={} limit={} modulus={}", a.t, a.limit, a.modulus),
        Command::Frob(a) => format!(
            "frob colors={} limit={} modulus={}",
            a.colors, a.limit, a.modulus
        ),
        Command::Census(a) => format!(
            "census seq={:?} modulus={} limit={} t={:?} colors={:?} growth={}",
            a.seq, a.modulus, a.limit, a.t, a.colors, a.growth
        ),
        Command::Ramanujan { limit } => format!("ramanujan limit={limit}"),
        Command::HeckeCheck(a) => format!(
            "hecke-check form={} p={} lambda={} n_check={} modulus={} check_mod={:?} \
             ell={:?} e={} beta={:?} t={:?} trunc={} char_disc={:?}",
            a.form,
            a.p,
            a.lambda,
            a.n_check,
            a.modulus,
            a.check_mod,
            a.ell,
            a.e,
            a.beta,
            a.t,
            a.trunc,
            a.char_disc
        ),
        Command::BuildFell(a) => format!(
            "build-fell eta={} ell={} e={} treneer={} r1={} beta={:?} trunc={} modulus={}",
            a.eta, a.ell, a.e, a.treneer, a.r1, a.beta, a.trunc, a.modulus
        ),
        Command::PrimeSearch(PrimeSearchCmd::Synthetic(a)) => format!(
            "prime-search synthetic ell={} seed_prime={} n0={} progression={:?} p_max={:?} \
             n_check={} trunc={:?} seed={}",
            a.ell, a.seed_prime, a.n0, a.progression, a.p_max, a.n_check, a.trunc, a.seed
        ),
        Command::PrimeSearch(PrimeSearchCmd::Partition(a)) => format!(
            "prime-search partition modulus={} n0={} progression={} p_max={} n_check={} trunc={}",
            a.modulus, a.n0, a.progression, a.p_max, a.n_check, a.trunc
        ),
        Command::Certify { modulus, x_search } => {
            format!("certify modulus={modulus} x_search={x_search}")
        }
        Command::Density(a) => format!(
            "density class={} m={} xs={} target={:?}",
            a.class, a.m, a.xs, a.target
        ),
        Command::BdCensus { d, limit } => format!("bd-census d={d} limit={limit}"),
        Command::CuspOrders(a) => format!("cusp-orders eta={} valence={}", a.eta, a.valence),
        Command::GaussSweep {
            c_max,
            w_max,
            matrices,
        } => format!("gauss-sweep c_max={c_max} w_max={w_max} matrices={matrices}"),
        Command::TcoreDiv { t_max } => format!("tcore-div t_max={t_max}"),
    }
}

#[derive(Serialize, Deserialize)]
struct StreamReport {
    spec: SequenceSpec,
    limit: usize,
    values: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct CensusPayload {
    report: CensusReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    growth: Option<newman_core::newman::GrowthDiagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residues: Option<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct CuspOrdersPayload {
    quotient: EtaQuotient,
    cusps: Vec<CuspExpansionMeta>,
    omega: OmegaSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    valence: Option<ValenceCheck>,
}

fn census_spec(a: &CensusArgs) -> Result<SequenceSpec> {
    let variant = match a.seq {
        SeqName::Partition => SequenceVariant::Partition,
        SeqName::Tcore => {
            let t = a.t.ok_or_else(|| anyhow!("--t required for seq tcore"))?;
            if t < 2 {
                bail!("t-core parameter must be >= 2");
            }
            SequenceVariant::TCore(t)
        }
        SeqName::Frob => {
            let h = a
                .colors
                .ok_or_else(|| anyhow!("--colors required for seq frob"))?;
            if h < 2 {
                bail!("frobenius census needs --colors >= 2; use seq partition for h = 1");
            }
            SequenceVariant::Frobenius(h)
        }
    };
    Ok(SequenceSpec {
        variant,
        modulus: a.modulus,
    })
}

fn execute(cmd: &Command) -> Result<Outcome> {
    let ok = |payload: Value| Ok(Outcome {
        payload,
        code: exit::OK,
    });
    match cmd {
        Command::Pn(a) => {
            let spec = SequenceSpec {
                variant: SequenceVariant::Partition,
                modulus: a.modulus,
            };
            let values = stream(&spec, a.limit)?;
            ok(serde_json::to_value(StreamReport {
                spec,
                limit: a.limit,
                values,
            })?)
        }
        Command::Tcore(a) => {
            if a.t < 2 {
                bail!("t-core parameter must be >= 2");
            }
            let spec = SequenceSpec {
                variant: SequenceVariant::TCore(a.t),
                modulus: a.modulus,
            };
            let values = stream(&spec, a.limit)?;
            ok(serde_json::to_value(StreamReport {
                spec,
                limit: a.limit,
                values,
            })?)
        }
        Command::Frob(a) => {
            if a.colors < 1 {
                bail!("color count must be >= 1");
            }
            let spec = SequenceSpec {
                variant: SequenceVariant::Frobenius(a.colors),
                modulus: a.modulus,
            };
            let values = stream(&spec, a.limit)?;
            ok(serde_json::to_value(StreamReport {
                spec,
                limit: a.limit,
                values,
            })?)
        }
        Command::Census(a) => {
            let spec = census_spec(a)?;
            let report = census(&spec, a.limit)?;
            let growth = if a.growth {
                Some(growth_diagnostic(&report)?)
            } else {
                None
            };
            let residues = if a.rows {
                Some(stream(&spec, a.limit as usize)?)
            } else {
                None
            };
            ok(serde_json::to_value(CensusPayload {
                report,
                growth,
                residues,
            })?)
        }
        Command::Ramanujan { limit } => {
            let violations = ramanujan_check(*limit);
            ok(json!({
                "checked_to": limit,
                "violations": violations,
            }))
        }
        Command::HeckeCheck(a) => hecke_check(a),
        Command::BuildFell(a) => build_fell(a),
        Command::PrimeSearch(PrimeSearchCmd::Synthetic(a)) => synthetic_search(a),
        Command::PrimeSearch(PrimeSearchCmd::Partition(a)) => partition_search(a),
        Command::Certify { modulus, x_search } => {
            let cert = certify_m_partition(*modulus, *x_search)?;
            let found = cert.is_some();
            Ok(Outcome {
                payload: json!({
                    "status": if found { "ok" } else { "none" },
                    "modulus": modulus,
                    "x_search": x_search,
                    "certificate": cert,
                }),
                code: if found { exit::OK } else { exit::EXHAUSTED },
            })
        }
        Command::Density(a) => {
            let ms = parse_list::<u32>(&a.m)?;
            let xs = parse_list::<u64>(&a.xs)?;
            if ms.is_empty() || xs.is_empty() {
                bail!("density needs at least one m and one x");
            }
            let (label, pred, default_d): (String, Box<dyn Fn(u64) -> bool>, f64) =
                if a.class == "all" {
                    ("all primes".into(), Box::new(|_| true), 1.0)
                } else {
                    let (res, modu) = a
                        .class
                        .split_once(',')
                        .ok_or_else(|| anyhow!("class must be `all` or `A,Q`"))?;
                    let res: u64 = res.trim().parse().context("class residue")?;
                    let modu: u64 = modu.trim().parse().context("class modulus")?;
                    if modu == 0 || gcd_u64(res, modu) != 1 {
                        bail!("class residue must be coprime to its modulus");
                    }
                    (
                        format!("p = {res} mod {modu}"),
                        Box::new(move |p| p % modu == res % modu),
                        1.0 / euler_phi(modu) as f64,
                    )
                };
            let d = a.target.unwrap_or(default_d);
            let tables: Vec<DensityTable> = ms
                .iter()
                .map(|&m| density_experiment(&pred, &label, d, m, &xs))
                .collect();
            ok(serde_json::to_value(tables)?)
        }
        Command::BdCensus { d, limit } => ok(serde_json::to_value(bd_census(*d, *limit)?)?),
        Command::CuspOrders(a) => {
            let quotient = parse_eta_spec(&a.eta)?;
            let level = quotient.level();
            let cusps: Vec<CuspExpansionMeta> = (1..=level)
                .filter(|c| level % c == 0)
                .map(|c| cusp_meta(&quotient, c).expect("divisor"))
                .collect();
            let omega = omega_set(&quotient);
            let valence = a.valence.then(|| valence_check(&quotient));
            ok(serde_json::to_value(CuspOrdersPayload {
                quotient,
                cusps,
                omega,
                valence,
            })?)
        }
        Command::GaussSweep {
            c_max,
            w_max,
            matrices,
        } => {
            if *c_max < 1 || *w_max < 0 || *matrices < 1 {
                bail!("sweep bounds must be positive");
            }
            ok(serde_json::to_value(gauss_sweep(*c_max, *w_max, *matrices))?)
        }
        Command::TcoreDiv { t_max } => {
            let violations = tcore_divisibility_check(*t_max)?;
            ok(json!({
                "t_max": t_max,
                "violations": violations,
            }))
        }
    }
}

/// Builds the named form and its operator context for hecke-check.
fn named_form(a: &HeckeCheckArgs) -> Result<(QSeries, HeckeContext, u64)> {
    match a.form.as_str() {
        "delta" => {
            let f = eta_expand(&EtaQuotient::delta(), a.trunc, a.modulus)
                .map_err(|e| anyhow!("{e}"))?;
            let ctx = HeckeContext::integral(12, 1, 1)?;
            Ok((f, ctx, a.check_mod.unwrap_or(a.modulus)))
        }
        "partition-fell" => {
            let ell = a.ell.ok_or_else(|| anyhow!("--ell required"))?;
            let beta = a.beta.unwrap_or(a.e.saturating_sub(1));
            let base = eta_expand(&EtaQuotient::partition_stream(), a.trunc, a.modulus)
                .map_err(|e| anyhow!("{e}"))?;
            let f = build_f_ell_treneer(&base, 576, ell, a.e, -1, Some(beta))?;
            let ctx = HeckeContext::from_weight_num(-1, 576, a.char_disc.unwrap_or(12))?
                .after_unit_form_power(ell, beta)?;
            Ok((f, ctx, a.check_mod.unwrap_or(ell.pow(a.e))))
        }
        "tcore-fell" => {
            let ell = a.ell.ok_or_else(|| anyhow!("--ell required"))?;
            let t = a.t.ok_or_else(|| anyhow!("--t required"))?;
            if t < 2 {
                bail!("t-core parameter must be >= 2");
            }
            let base = eta_expand(&EtaQuotient::tcore_form(t), a.trunc, a.modulus)
                .map_err(|e| anyhow!("{e}"))?;
            let f = build_f_ell_holomorphic(&base, 576 * t as u64, ell, a.e)?;
            let ctx = HeckeContext::from_weight_num(
                t as i64 - 1,
                576 * t as u64,
                a.char_disc.unwrap_or(1),
            )?
            .after_unit_form_power(ell, a.e.saturating_sub(1))?;
            Ok((f, ctx, a.check_mod.unwrap_or(ell.pow(a.e))))
        }
        other => bail!("unknown form `{other}` (delta | partition-fell | tcore-fell)"),
    }
}

fn hecke_check(a: &HeckeCheckArgs) -> Result<Outcome> {
    let (f, ctx, check_mod) = named_form(a)?;
    let report: HeckeReport = eigencongruence_check(&f, &ctx, a.p, a.lambda, check_mod, a.n_check)?;
    Ok(Outcome {
        payload: serde_json::to_value(&report)?,
        code: exit::OK,
    })
}

fn build_fell(a: &BuildFellArgs) -> Result<Outcome> {
    let eq = parse_eta_spec(&a.eta)?;
    let base = eta_expand(&eq, a.trunc, a.modulus).map_err(|e| anyhow!("{e}"))?;
    let built = if a.treneer {
        build_f_ell_treneer(&base, eq.level(), a.ell, a.e, a.r1, a.beta)?
    } else {
        build_f_ell_holomorphic(&base, eq.level(), a.ell, a.e)?
    };
    Ok(Outcome {
        payload: serde_json::to_value(&built)?,
        code: exit::OK,
    })
}

fn synthetic_search(a: &SyntheticSearchArgs) -> Result<Outcome> {
    let p = a.seed_prime;
    let progression = a.progression.unwrap_or(p.saturating_sub(1));
    let p_max = a.p_max.unwrap_or(p + 1);
    let trunc = a
        .trunc
        .unwrap_or((p_max * p_max) as usize * a.n_check as usize + 1);
    let ctx = HeckeContext::half_integral(2, 4, 1)?;
    let form = synthetic_eigen_stream(a.ell, &ctx, p, 2, trunc + 1, a.seed, &[(a.n0, 1)])?;
    let outcome = prime_search(
        &[EigenTarget {
            ell: a.ell,
            exponent: 1,
            form,
            ctx,
        }],
        &PrimeSearchConfig {
            n0: a.n0,
            progression_modulus: progression,
            p_max,
            p_min: 0,
            n_check: a.n_check,
            level: 4,
            modulus: a.ell,
        },
    )?;
    Ok(search_outcome_payload(outcome))
}

fn partition_search(a: &PartitionSearchArgs) -> Result<Outcome> {
    if a.modulus % 2 == 0 || gcd_u64(a.modulus, 576) != 1 {
        bail!("modulus must be odd and coprime to 576");
    }
    let base = eta_expand(&EtaQuotient::partition_stream(), a.trunc, a.modulus)
        .map_err(|e| anyhow!("{e}"))?;
    let mut targets = Vec::new();
    for &(ell, e) in factorize(a.modulus).factors() {
        let form = build_f_ell_treneer(&base, 576, ell, e, -1, None)?;
        let ctx = HeckeContext::from_weight_num(-1, 576, 12)?
            .after_unit_form_power(ell, e.saturating_sub(1))?;
        targets.push(EigenTarget {
            ell,
            exponent: e,
            form,
            ctx,
        });
    }
    let mut p_min = match &a.resume {
        Some(path) if path.exists() => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| v.get("last_checked").and_then(Value::as_u64))
                .unwrap_or(0)
        }
        _ => 0,
    };
    loop {
        let chunk_hi = (p_min + a.progression * a.chunk).min(a.p_max);
        let outcome = prime_search(
            &targets,
            &PrimeSearchConfig {
                n0: a.n0,
                progression_modulus: a.progression,
                p_max: chunk_hi,
                p_min,
                n_check: a.n_check,
                level: 576,
                modulus: a.modulus,
            },
        )?;
        if let Some(path) = &a.resume {
            std::fs::write(path, json!({ "last_checked": chunk_hi }).to_string())?;
        }
        match outcome {
            PrimeSearchOutcome::Found(_) => return Ok(search_outcome_payload(outcome)),
            PrimeSearchOutcome::Exhausted(_) if chunk_hi >= a.p_max => {
                return Ok(search_outcome_payload(outcome))
            }
            PrimeSearchOutcome::Exhausted(_) => p_min = chunk_hi,
        }
    }
}

fn search_outcome_payload(outcome: PrimeSearchOutcome) -> Outcome {
    match outcome {
        PrimeSearchOutcome::Found(res) => Outcome {
            payload: json!({ "status": "ok", "result": res }),
            code: exit::OK,
        },
        PrimeSearchOutcome::Exhausted(rep) => Outcome {
            payload: json!({ "status": "exhausted", "report": rep }),
            code: exit::EXHAUSTED,
        },
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .filter(|chunk| !chunk.trim().is_empty())
        .map(|chunk| chunk.trim().parse::<T>().map_err(Into::into))
        .collect()
}

fn render(cmd: &Command, format: Format, payload: &Value) -> Result<String> {
    match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(payload)?;
            text.push('\n');
            Ok(text)
        }
        Format::Csv => render_csv(cmd, payload),
    }
}

fn render_csv(cmd: &Command, payload: &Value) -> Result<String> {
    let mut out = String::new();
    match cmd {
        Command::Pn(_) | Command::Tcore(_) | Command::Frob(_) => {
            let report: StreamReport = serde_json::from_value(payload.clone())?;
            out.push_str("n,value\n");
            for (n, v) in report.values.iter().enumerate() {
                out.push_str(&format!("{n},{v}\n"));
            }
        }
        Command::Census(a) => {
            let p: CensusPayload = serde_json::from_value(payload.clone())?;
            if a.rows {
                let residues = p
                    .residues
                    .ok_or_else(|| anyhow!("census rows missing from payload"))?;
                out.push_str("n,residue\n");
                for (n, r) in residues.iter().enumerate() {
                    out.push_str(&format!("{n},{r}\n"));
                }
            } else {
                out.push_str("r,count,first_witness\n");
                for (r, count) in p.report.counts.iter().enumerate() {
                    let witness = p.report.first_witness[r]
                        .map(|w| w.to_string())
                        .unwrap_or_default();
                    out.push_str(&format!("{r},{count},{witness}\n"));
                }
            }
        }
        Command::Density(_) => {
            let tables: Vec<DensityTable> = serde_json::from_value(payload.clone())?;
            out.push_str("m,x,selected,all,ratio,target\n");
            for t in &tables {
                for row in &t.rows {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        t.m, row.x, row.selected, row.all, row.ratio, t.target
                    ));
                }
            }
        }
        Command::BdCensus { .. } => {
            let b: BdCensus = serde_json::from_value(payload.clone())?;
            out.push_str("d,x,count,squarefree_count\n");
            out.push_str(&format!(
                "{},{},{},{}\n",
                b.d, b.x, b.count, b.squarefree_count
            ));
        }
        Command::CuspOrders(_) => {
            let p: CuspOrdersPayload = serde_json::from_value(payload.clone())?;
            out.push_str("c,width,leading_exponent,period\n");
            for meta in &p.cusps {
                out.push_str(&format!(
                    "{},{},{}/{},{}\n",
                    meta.c,
                    meta.width,
                    meta.leading_exponent.numer(),
                    meta.leading_exponent.denom(),
                    meta.period
                ));
            }
        }
        _ => bail!("csv output not available for this subcommand"),
    }
    Ok(out)
}
