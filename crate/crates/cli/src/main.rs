use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bfp_cli::bench::{append_csv, bench_modes, count_gates, BenchConfig, BENCH_CSV_HEADER};
use bfp_cli::config::parse_lane_width;
use bfp_cli::generate::generate;
use bfp_cli::transpose::{lane_dump, read_bfpraw};
use bfp_cli::verify::{run_verify, Strategy, VerifyRequest};
use bfp_cli::{
    load_config, resolve_lane_width, CliError, EXIT_OK, LANE_WIDTH_ENV,
};
use bfp_core::{FormatSpec, OpKind, Rounding};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bfp", version, about = "Bitslice floating point: generate, verify, benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the manifest and specialized source for a format.
    Gen {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compare the pipelines with the reference implementation.
    Verify(VerifyArgs),
    /// Time the pipelines against a scalar loop.
    Bench(BenchArgs),
    /// Print the lane layout of a .bfpraw file.
    Transpose {
        #[arg(short, long)]
        config: PathBuf,
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OpArg {
    Add,
    Sub,
    Mul,
    Div,
    All,
}

impl OpArg {
    fn ops(self) -> Vec<OpKind> {
        match self {
            OpArg::Add => vec![OpKind::Add],
            OpArg::Sub => vec![OpKind::Sub],
            OpArg::Mul => vec![OpKind::Mul],
            OpArg::Div => vec![OpKind::Div],
            OpArg::All => OpKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "RZ", alias = "rz")]
    Rz,
    #[value(name = "RN", alias = "rn")]
    Rn,
    #[value(name = "both")]
    Both,
}

fn modes(arg: Option<ModeArg>, spec: &FormatSpec) -> Vec<Rounding> {
    match arg {
        None => vec![spec.rounding()],
        Some(ModeArg::Rz) => vec![Rounding::TowardZero],
        Some(ModeArg::Rn) => vec![Rounding::NearestEven],
        Some(ModeArg::Both) => Rounding::ALL.to_vec(),
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("strategy").required(true).args(["exhaustive", "random", "ieee32"])))]
struct VerifyArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    op: OpArg,
    /// Defaults to the config's rounding mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Every encoding pair (formats of at most 16 bits).
    #[arg(long)]
    exhaustive: bool,
    /// N random pairs per op and mode.
    #[arg(long, value_name = "N")]
    random: Option<usize>,
    /// Compare (1,8,23) RN with the host's binary32 arithmetic.
    #[arg(long)]
    ieee32: bool,
    /// Pair count for --ieee32.
    #[arg(long, value_name = "N", default_value_t = 1_000_000)]
    pairs: usize,
    /// Mismatch CSV (header only when clean).
    #[arg(long, value_name = "CSV")]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    op: OpArg,
    /// Defaults to the config's rounding mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Elements per rep, a multiple of the lane width.
    #[arg(long, default_value_t = 1 << 16)]
    elements: usize,
    #[arg(long, default_value_t = 15)]
    reps: usize,
    /// Append rows here; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print lane-operation counts instead of timing.
    #[arg(long)]
    count_gates: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Overrides the config and BFP_LANE_WIDTH.
    #[arg(long)]
    lane_width: Option<String>,
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

fn lane_width(from_config: Option<usize>) -> Result<usize, CliError> {
    let env = std::env::var(LANE_WIDTH_ENV).ok();
    resolve_lane_width(from_config, env.as_deref())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Gen { config, out } => {
            let cfg = load_config(&config)?;
            let w = lane_width(cfg.lane_width)?;
            let manifest = generate(&cfg.spec, w, &out)?;
            println!(
                "{}: wrote {} and {} to {}",
                manifest.name,
                bfp_cli::generate::MANIFEST_FILE,
                manifest.source,
                out.display()
            );
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let cfg = load_config(&args.config)?;
            let strategy = if args.exhaustive {
                Strategy::Exhaustive
            } else if let Some(n) = args.random {
                Strategy::Random(n)
            } else {
                Strategy::Ieee32(args.pairs)
            };
            let req = VerifyRequest {
                modes: modes(args.mode, &cfg.spec),
                spec: cfg.spec,
                ops: args.op.ops(),
                strategy,
                seed: args.seed,
            };
            let outcome = run_verify(&req)?;
            for (op, mode, report) in &outcome.runs {
                println!(
                    "{} {op} {mode}: {} pairs, {} mismatches",
                    req.spec.name(),
                    report.checked,
                    report.mismatches.len()
                );
            }
            if let Some(path) = &args.report {
                outcome.write_report_file(path, &req.spec)?;
            }
            if outcome.is_clean() {
                println!("OK");
            } else {
                println!("FAILED: {} mismatches", outcome.mismatch_count());
            }
            Ok(outcome.exit_code())
        }
        Command::Bench(args) => {
            let cfg = load_config(&args.config)?;
            let w = match &args.lane_width {
                Some(text) => parse_lane_width(text)
                    .map_err(|reason| CliError::Usage(format!("--lane-width {text}: {reason}")))?,
                None => lane_width(cfg.lane_width)?,
            };
            let spec = cfg.spec;
            let ops = args.op.ops();
            let modes = modes(args.mode, &spec);
            if args.count_gates {
                for &op in &ops {
                    for &mode in &modes {
                        let c = count_gates(&spec, op, mode, w);
                        println!(
                            "{} {op} {mode} W={w}: {} lane ops (and {}, or {}, xor {}, not {}); {} bit operations, {} per element",
                            spec.name(),
                            c.total(),
                            c.and_count,
                            c.or_count,
                            c.xor_count,
                            c.not_count,
                            c.total() * w as u64,
                            c.total()
                        );
                    }
                }
                return Ok(EXIT_OK);
            }
            let bench_cfg = BenchConfig {
                elements: args.elements,
                reps: args.reps,
                threads: args.threads,
                seed: args.seed,
            };
            let mut records = Vec::new();
            for &op in &ops {
                for r in bench_modes(&spec, op, &modes, w, &bench_cfg)? {
                    eprintln!(
                        "{} {op} {} W={w}: median {:.2} ns/elem (best {:.2}), {:.2} Mops/s; \
                         baseline median {:.2} ns/elem (best {:.2}); baseline/bitslice {:.2}",
                        r.format,
                        r.rounding,
                        r.ns_per_elem,
                        r.best_ns_per_elem,
                        r.mops,
                        r.baseline_ns_per_elem,
                        r.baseline_best_ns_per_elem,
                        r.speedup()
                    );
                    records.push(r);
                }
            }
            match &args.csv {
                Some(path) => append_csv(path, &records)?,
                None => {
                    let mut out = std::io::stdout().lock();
                    let _ = writeln!(out, "{BENCH_CSV_HEADER}");
                    for r in &records {
                        let _ = writeln!(out, "{}", r.csv_row());
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Transpose { config, input } => {
            let cfg = load_config(&config)?;
            let w = lane_width(cfg.lane_width)?;
            let bytes = std::fs::read(&input).map_err(|source| CliError::Io {
                path: input.clone(),
                source,
            })?;
            let encodings = read_bfpraw(&bytes, &cfg.spec)?;
            print!("{}", lane_dump(&encodings, &cfg.spec, w));
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("bfp: {err}");
            err.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
