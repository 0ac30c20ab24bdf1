use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tilesched::kernels::HeuristicConfig;
use tilesched_bench::{
    parse_schedules, report_imbalance, run_single, run_sweep, BenchError, Kernel, RunOptions,
};

/// Run sparse kernels under different work schedules.
#[derive(Debug, Parser)]
#[command(name = "tilesched", version)]
struct Args {
    /// Matrix Market file to run.
    #[arg(short, long, required_unless_present = "sweep")]
    matrix: Option<PathBuf>,

    /// spmv, spmm, sssp or bfs.
    #[arg(long, default_value = "spmv")]
    kernel: Kernel,

    /// Comma-separated list of merge-path, thread-mapped, group-mapped, auto.
    #[arg(long, default_value = "merge-path")]
    schedule: String,

    /// Virtual lanes; defaults to 32 per worker thread.
    #[arg(long)]
    lanes: Option<usize>,

    /// Lanes per group for group-mapped.
    #[arg(long, default_value_t = 32)]
    group_size: usize,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,

    /// Compare against the serial reference and report mismatches.
    #[arg(long)]
    validate: bool,

    #[arg(short, long)]
    verbose: bool,

    /// Benchmark every .mtx file under this directory.
    #[arg(long, conflicts_with = "matrix")]
    sweep: Option<PathBuf>,

    /// Stop a sweep after this many matrices.
    #[arg(long, requires = "sweep")]
    limit: Option<usize>,

    /// CSV output for a sweep; standard output when omitted.
    #[arg(long, requires = "sweep")]
    out: Option<PathBuf>,

    /// Timed repetitions after one warmup run.
    #[arg(long, default_value_t = 5)]
    reps: usize,

    /// Seed for validation inputs.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Heuristic row/column threshold for auto.
    #[arg(long, default_value_t = 500)]
    alpha: usize,

    /// Heuristic nonzero threshold for auto.
    #[arg(long, default_value_t = 10_000)]
    beta: usize,

    /// Print per-schedule lane imbalance instead of running the kernel.
    #[arg(long, requires = "matrix")]
    imbalance: bool,
}

fn run(args: Args) -> Result<bool, BenchError> {
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    if threads == 0 || args.lanes == Some(0) || args.alpha == 0 || args.beta == 0 {
        return Err(BenchError::InvalidArgument(
            "threads, lanes, alpha and beta must be positive".into(),
        ));
    }
    let schedules = parse_schedules(&args.schedule, args.group_size)?;
    let opts = RunOptions {
        kernel: args.kernel,
        threads,
        lanes: args.lanes,
        heuristic: HeuristicConfig {
            alpha: args.alpha,
            beta: args.beta,
            ..HeuristicConfig::default()
        },
        seed: args.seed,
        reps: args.reps,
    };
    let stdout = io::stdout();

    if let Some(dir) = &args.sweep {
        let summary = match &args.out {
            Some(path) => run_sweep(
                dir,
                &schedules,
                &opts,
                args.limit,
                BufWriter::new(File::create(path)?),
                io::stderr(),
            )?,
            None => run_sweep(
                dir,
                &schedules,
                &opts,
                args.limit,
                stdout.lock(),
                io::stderr(),
            )?,
        };
        if args.verbose {
            eprintln!(
                "{} matrices, {} skipped, {} rows",
                summary.matrices, summary.skipped, summary.rows_written
            );
        }
        return Ok(true);
    }

    let path = args
        .matrix
        .as_deref()
        .expect("clap requires --matrix without --sweep");
    if args.imbalance {
        report_imbalance(path, &schedules, &opts, stdout.lock())?;
        return Ok(true);
    }
    let reports = run_single(path, &schedules, &opts, args.validate)?;
    let mut out = stdout.lock();
    let mut ok = true;
    for r in &reports {
        if args.verbose {
            r.write_verbose(&mut out)?;
        } else {
            writeln!(out, "{} {} ms", r.resolved, r.elapsed_ms)?;
        }
        if let Some(errors) = r.errors {
            if errors > 0 {
                ok = false;
                eprintln!("{}: {errors} mismatching entries", r.resolved);
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
