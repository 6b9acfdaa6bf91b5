//! Single-binary command-line front end.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 I/O
//! error. The `--workers` flag caps Monte Carlo parallelism; outputs are
//! byte-identical for any value.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::ri_norms::{orlicz_exp_norm, pnorm_profile};
use crate::sequences::{lorentz_norm, KProfile, RealSequence};
use crate::series::{monte_carlo, SeriesKind};
use crate::verify::{parse_seed, run_scenario_checks, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const SEED_ENV: &str = "NC_TAILS_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "nc-tails",
    version,
    about = "Tail-distribution laboratory for rotation-invariant random matrix series"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Cap the number of Monte Carlo worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the K-functional profile of a sequence file.
    Kfunc(KfuncArgs),
    /// Draw Monte Carlo samples of one series kind and export them as CSV.
    Simulate(SimulateArgs),
    /// Run the empirical checks of a scenario and write a report.
    Verify(VerifyArgs),
    /// Compute norms of a samples CSV.
    Norms(NormsArgs),
}

#[derive(Debug, Args)]
struct KfuncArgs {
    /// Sequence file: one decimal number per line, `#` comments ignored.
    seq_file: PathBuf,

    /// Comma-separated grid of t values, e.g. `--t 0.5,1,2`.
    #[arg(long, value_delimiter = ',', required = true, value_name = "T,...")]
    t: Vec<f64>,

    /// Also write the CSV to a file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario config JSON (blocks, trials, seed, lambda).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Series kind: epsilon, gauss, gauss-trunc, gauss-split-trunc,
    /// or commutative.
    #[arg(long, value_name = "KIND")]
    kind: String,

    /// Override the scenario's trial count.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,

    /// Master seed, decimal or 0x-hex; falls back to the config seed, then
    /// the NC_TAILS_SEED environment variable.
    #[arg(long, value_name = "SEED")]
    seed: Option<String>,

    /// Output prefix: writes <out>.csv and <out>.meta.json.
    #[arg(long, value_name = "PREFIX")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Scenario config JSON.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Report JSON path; per-check CSV/TSV tables land next to it.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,

    /// Master seed override, decimal or 0x-hex.
    #[arg(long, value_name = "SEED")]
    seed: Option<String>,
}

#[derive(Debug, Args)]
struct NormsArgs {
    /// Samples CSV (`trial,value` rows as written by `simulate`, or one
    /// value per line).
    samples: PathBuf,

    /// Orlicz gauge exponent p for exp(t^p).
    #[arg(long = "orlicz-p", value_name = "P")]
    orlicz_p: Option<f64>,

    /// Lorentz indices `q r` of the sample sequence.
    #[arg(long, num_args = 2, value_names = ["Q", "R"])]
    lorentz: Option<Vec<f64>>,

    /// Comma-separated moment orders, e.g. `--pnorms 1,2,4`.
    #[arg(long, value_delimiter = ',', value_name = "P,...")]
    pnorms: Option<Vec<f64>>,
}

/// Parse argv and execute; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout (exit 0) and usage errors
            // on stderr (exit 2).
            let _ = e.print();
            return if e.exit_code() == 0 {
                EXIT_OK
            } else {
                EXIT_USAGE
            };
        }
    };
    let command = cli.command;
    let body = move || match dispatch(command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    };
    match cli.workers {
        Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(body),
        Some(_) => {
            eprintln!("error: --workers must be ≥ 1");
            EXIT_USAGE
        }
        None => body(),
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Kfunc(args) => cmd_kfunc(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Norms(args) => cmd_norms(args),
    }
}

fn cmd_kfunc(args: KfuncArgs) -> Result<i32> {
    if args.t.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("--t entries must be finite and ≥ 0"));
    }
    let seq = RealSequence::from_file(&args.seq_file)?;
    let profile = KProfile::compute(&seq, &args.t)?;
    let mut out = String::from("t,k_exact,k_holmstedt\n");
    for i in 0..profile.t_grid.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            profile.t_grid[i], profile.k_exact[i], profile.k_holmstedt[i]
        ));
    }
    print!("{out}");
    if let Some(path) = args.out {
        std::fs::write(&path, out).map_err(|e| Error::io(path, e))?;
    }
    Ok(EXIT_OK)
}

/// Seed precedence: --seed flag, then the config's own field, then the
/// NC_TAILS_SEED environment variable.
fn load_scenario(config: &Path, seed_flag: Option<&str>) -> Result<Scenario> {
    let override_seed = seed_flag.map(parse_seed).transpose()?;
    match Scenario::from_file(config, override_seed) {
        Ok(s) => Ok(s),
        // Only a *missing* seed falls back to the environment; a malformed
        // config seed stays an error.
        Err(Error::Config { field, message })
            if field == "seed" && message.starts_with("missing") =>
        {
            if let Ok(env) = std::env::var(SEED_ENV) {
                return Scenario::from_file(config, Some(parse_seed(&env)?));
            }
            Err(Error::Config { field, message })
        }
        Err(e) => Err(e),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<i32> {
    let scenario = load_scenario(&args.config, args.seed.as_deref())?;
    let kind = SeriesKind::parse(&args.kind, scenario.lambda)?;
    let trials = args.trials.unwrap_or(scenario.trials);
    if trials < 1 {
        return Err(Error::invalid("--trials must be ≥ 1"));
    }
    let set = monte_carlo(&scenario.blocks, &kind, trials, scenario.master_seed)?;

    // Append rather than `with_extension`: prefixes may contain dots.
    let mut csv_os = args.out.clone().into_os_string();
    csv_os.push(".csv");
    let csv_path = PathBuf::from(csv_os);
    let mut meta_os = args.out.clone().into_os_string();
    meta_os.push(".meta.json");
    let meta_path = PathBuf::from(meta_os);
    set.write_csv(&csv_path)?;
    set.write_metadata(&meta_path)?;
    println!(
        "kind={} trials={} seed={:#x} mean={:.6} std={:.6} min={:.6} max={:.6}",
        kind.name(),
        trials,
        scenario.master_seed,
        set.mean(),
        set.std(),
        set.min(),
        set.max()
    );
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let scenario = load_scenario(&args.config, args.seed.as_deref())?;
    let summary = run_scenario_checks(&scenario, &args.report)?;
    for check in &summary.report.checks {
        let verdict = if check.inconclusive {
            "INCONCLUSIVE"
        } else if check.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let constants: Vec<String> = check
            .fitted_constants
            .iter()
            .map(|(k, v)| format!("{k}={v:.4}"))
            .collect();
        println!(
            "check {}: {} ({})",
            check.check_id,
            verdict,
            constants.join(", ")
        );
    }
    println!("report written to {}", summary.report_path.display());
    Ok(if summary.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn parse_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed == "trial,value" {
            continue;
        }
        let field = trimmed.rsplit(',').next().unwrap_or(trimmed);
        let v: f64 = field.parse().map_err(|_| Error::SequenceParse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: format!("not a number: {field:?}"),
        })?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::invalid(format!(
            "{}: no samples found",
            path.display()
        )));
    }
    Ok(values)
}

fn cmd_norms(args: NormsArgs) -> Result<i32> {
    if args.orlicz_p.is_none() && args.lorentz.is_none() && args.pnorms.is_none() {
        return Err(Error::invalid(
            "nothing to compute: pass --orlicz-p, --lorentz, or --pnorms",
        ));
    }
    let samples = parse_samples_csv(&args.samples)?;
    println!("norm\tvalue\tflag");
    if let Some(p) = args.orlicz_p {
        let norm = orlicz_exp_norm(&samples, p)?;
        println!("orlicz_exp(p={p})\t{norm}\tok");
    }
    if let Some(qr) = args.lorentz {
        let (q, r) = (qr[0], qr[1]);
        let seq = RealSequence::new(samples.clone())?;
        let norm = lorentz_norm(&seq, q, r)?;
        println!("lorentz(q={q},r={r})\t{norm}\texact");
    }
    if let Some(ps) = args.pnorms {
        for entry in pnorm_profile(&samples, &ps)? {
            let flag = if entry.reliable {
                "reliable"
            } else {
                "unreliable"
            };
            println!("pnorm(p={})\t{}\t{}", entry.p, entry.norm, flag);
        }
    }
    Ok(EXIT_OK)
}
