//! Command-line driver: code construction, calibration, LLR budgets and
//! Monte Carlo sweeps.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polar_prune::harness::{emit_report, run_calibration, run_fer_sweep, to_csv, CalibrationConfig, SimConfig};
use polar_prune::pruning::{llr_budget, LlrBudgetFile, StaticTable};
use polar_prune::{
    evaluate_reliability_bec, evaluate_reliability_ga, select_information_set, CodeSpec, CrcDef, DecoderKind, LlrBudget,
    PrunePolicy, ReliabilityProfile,
};

#[derive(Parser, Debug)]
#[command(name = "polar-prune", version, about = "Polar codes with pruned CRC-aided list decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a code and print its JSON description.
    Construct {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate a static pruning table by Monte Carlo.
    Calibrate {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 32)]
        list_size: usize,
        /// Operating point in dB.
        #[arg(long, allow_hyphen_values = true)]
        ebn0: f64,
        #[arg(long, default_value_t = 100_000)]
        frames: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute per-level LLR budgets.
    Budget {
        #[command(flatten)]
        code: CodeArgs,
        /// Tail probability per level; defaults to 1e-9 / N.
        #[arg(long)]
        p_llr: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an FER / complexity sweep.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
struct CodeArgs {
    /// Code description written by `construct`; overrides the flags below.
    #[arg(long)]
    code: Option<PathBuf>,
    /// Code length N (a power of two).
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Information set size K, CRC bits included.
    #[arg(long, default_value_t = 512)]
    k: usize,
    /// `ccitt16`, `none`, or `poly:init:xorout` in hex (width from the poly digits).
    #[arg(long, default_value = "ccitt16")]
    crc: String,
    #[arg(long, value_enum, default_value_t = Reliability::Ga)]
    construction: Reliability,
    /// Design point for the Gaussian approximation, in dB.
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    design_ebn0: f64,
    /// Erasure probability for the BEC construction.
    #[arg(long, default_value_t = 0.5)]
    bec_epsilon: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Reliability {
    Ga,
    Bec,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DecoderArg {
    Sc,
    Scl,
    Cascl,
}

#[derive(Args, Debug, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, value_enum, default_value_t = DecoderArg::Cascl)]
    decoder: DecoderArg,
    #[arg(long, default_value_t = 32)]
    list_size: usize,
    /// `off`, `static:<table.json>`, `dynamic`, or `baseline:<beta>`.
    #[arg(long, default_value = "off")]
    prune: String,
    /// Tolerated loss for dynamic pruning.
    #[arg(long, default_value_t = 1e-5)]
    p_tol: f64,
    /// LLR tail probability for dynamic pruning; defaults to 1e-9 / N.
    #[arg(long)]
    p_llr: Option<f64>,
    /// Budget file written by `budget`, used instead of recomputing.
    #[arg(long)]
    budget: Option<PathBuf>,
    /// `start:step:stop` or a single value, in dB.
    #[arg(long, default_value = "1.0:0.5:2.5", allow_hyphen_values = true)]
    ebn0: String,
    #[arg(long, default_value_t = 100_000)]
    max_frames: u64,
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Output stem; writes `<out>.csv` and `<out>.json`. Prints CSV when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_hex(s: &str) -> Result<(u64, usize)> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    ensure!(!digits.is_empty(), "empty hex field in CRC spec");
    let v = u64::from_str_radix(digits, 16).with_context(|| format!("bad hex `{s}`"))?;
    Ok((v, digits.len()))
}

fn parse_crc(s: &str) -> Result<Option<CrcDef>> {
    match s {
        "none" => Ok(None),
        "ccitt16" => Ok(Some(CrcDef::CCITT16)),
        _ => {
            let fields: Vec<&str> = s.split(':').collect();
            ensure!(fields.len() == 3, "CRC must be ccitt16, none or poly:init:xorout, got `{s}`");
            let (poly, digits) = parse_hex(fields[0])?;
            let (init, _) = parse_hex(fields[1])?;
            let (xor_out, _) = parse_hex(fields[2])?;
            Ok(Some(CrcDef::new(poly, 4 * digits as u32, init, xor_out)?))
        }
    }
}

/// Inclusive `start:step:stop` grid, or one value.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in `{s}`")))
        .collect::<Result<_>>()?;
    match parts[..] {
        [x] => Ok(vec![x]),
        [start, step, stop] => {
            ensure!(step > 0.0, "grid step must be positive");
            ensure!(stop >= start, "grid stop below start");
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => bail!("expected start:step:stop or a single value, got `{s}`"),
    }
}

fn log2_len(n: usize) -> Result<u32> {
    ensure!(n >= 2 && n.is_power_of_two(), "code length {n} is not a power of two >= 2");
    Ok(n.trailing_zeros())
}

fn profile(args: &CodeArgs, log2: u32, rate: f64) -> Result<ReliabilityProfile> {
    Ok(match args.construction {
        Reliability::Ga => evaluate_reliability_ga(log2, rate, args.design_ebn0)?,
        Reliability::Bec => evaluate_reliability_bec(log2, args.bec_epsilon)?,
    })
}

fn load_code(args: &CodeArgs) -> Result<CodeSpec> {
    if let Some(path) = &args.code {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(CodeSpec::from_json(&text)?);
    }
    let log2 = log2_len(args.n)?;
    ensure!(args.k >= 1 && args.k < args.n, "K = {} outside 1..N", args.k);
    let p = profile(args, log2, args.k as f64 / args.n as f64)?;
    Ok(select_information_set(&p, args.k, None, parse_crc(&args.crc)?)?)
}

/// Budgets for `spec`, recomputed from its own construction.
fn compute_budget(spec: &CodeSpec, p_llr: Option<f64>) -> Result<LlrBudget> {
    let c = spec.construction();
    let p = ReliabilityProfile::from_construction(spec.log2_len(), spec.rate(), c)?;
    let p_llr = p_llr.unwrap_or(1e-9 / spec.len() as f64);
    Ok(llr_budget(&p, p_llr)?)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn prune_policy(args: &SimulateArgs, spec: &CodeSpec) -> Result<PrunePolicy> {
    let (kind, arg) = args.prune.split_once(':').unwrap_or((args.prune.as_str(), ""));
    match kind {
        "off" => Ok(PrunePolicy::Off),
        "static" => {
            ensure!(!arg.is_empty(), "static pruning needs a table file: static:<file>");
            let text = std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
            let table: StaticTable = serde_json::from_str(&text).context("parsing static table")?;
            Ok(table.policy_for(spec, args.list_size, None)?)
        }
        "dynamic" => {
            let budget = match &args.budget {
                Some(path) => {
                    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    let file: LlrBudgetFile = serde_json::from_str(&text).context("parsing budget file")?;
                    ensure!(file.code_hash == spec.hash_hex(), "budget file belongs to a different code");
                    file.into_budget()
                }
                None => compute_budget(spec, args.p_llr)?,
            };
            Ok(PrunePolicy::Dynamic { p_tol: args.p_tol, budget })
        }
        "baseline" => {
            let beta: f64 = arg.parse().with_context(|| format!("bad beta `{arg}`"))?;
            Ok(PrunePolicy::MaxRatio { beta })
        }
        _ => bail!("unknown pruning `{}`; use off, static:<file>, dynamic or baseline:<beta>", args.prune),
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let spec = load_code(&args.code)?;
    let decoder = match args.decoder {
        DecoderArg::Sc => DecoderKind::Sc,
        DecoderArg::Scl => DecoderKind::Scl { list_size: args.list_size },
        DecoderArg::Cascl => DecoderKind::CaScl { list_size: args.list_size },
    };
    let config = SimConfig {
        policy: prune_policy(args, &spec)?,
        spec,
        decoder,
        ebn0_db: parse_grid(&args.ebn0)?,
        master_seed: args.seed,
        max_frames: args.max_frames,
        min_frame_errors: args.min_errors,
        workers: args.workers,
    };
    let stats = run_fer_sweep(&config)?;
    match &args.out {
        Some(stem) => {
            let paths = emit_report(&stats, stem)?;
            log::info!("wrote {} and {}", paths.csv.display(), paths.json.display());
        }
        None => print!("{}", to_csv(&stats)),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Construct { code, out } => {
            let spec = load_code(&code)?;
            write_or_print(out.as_deref(), &spec.to_json()?)
        }
        Command::Calibrate {
            code,
            list_size,
            ebn0,
            frames,
            seed,
            out,
        } => {
            let spec = load_code(&code)?;
            let table = run_calibration(
                &CalibrationConfig {
                    spec,
                    list_size,
                    ebn0_db: ebn0,
                    n_frames: frames,
                    master_seed: seed,
                },
                None,
            )?;
            write_or_print(out.as_deref(), &serde_json::to_string_pretty(&table)?)
        }
        Command::Budget { code, p_llr, out } => {
            let spec = load_code(&code)?;
            let budget = compute_budget(&spec, p_llr)?;
            write_or_print(out.as_deref(), &serde_json::to_string_pretty(&budget.to_file(&spec.hash_hex()))?)
        }
        Command::Simulate(args) => simulate(&args),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
