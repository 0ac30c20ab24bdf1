//! Load a Matrix Market file, run one kernel under one or more schedules,
//! check it against a serial reference, and emit timing records.

use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use walkdir::WalkDir;

use tilesched::executor::{imbalance, ExecutorConfig, DEFAULT_LANES_PER_THREAD};
use tilesched::kernels::{self, HeuristicConfig, KernelError};
use tilesched::reference;
use tilesched::schedule::{ScheduleError, ScheduleKind};
use tilesched::sparse::{
    coo_to_csr, read_matrix_market, CsrMatrix, DenseMatrix, DenseVector, Graph, MatrixMarketError,
    SparseError,
};
use tilesched::work::csr_tile_set;

/// Columns of the dense right-hand side used for SpMM runs.
pub const SPMM_COLUMNS: usize = 8;

pub const CSV_HEADER: [&str; 6] = ["kernel", "dataset", "rows", "cols", "nnzs", "elapsed"];

/// Relative tolerance for floating-point validation, scaled by `sum |a_ij x_j|`.
const VALIDATION_RTOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Matrix {
        path: PathBuf,
        source: MatrixMarketError,
    },
    #[error("{0}")]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Sparse(#[from] SparseError),
    #[error("{0}")]
    Schedule(#[from] ScheduleError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dataset directory {0} does not exist")]
    MissingDirectory(PathBuf),
    #[error("no parsable .mtx files under {0}")]
    NoMatrices(PathBuf),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Spmv,
    Spmm,
    Sssp,
    Bfs,
}

impl FromStr for Kernel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spmv" => Ok(Kernel::Spmv),
            "spmm" => Ok(Kernel::Spmm),
            "sssp" => Ok(Kernel::Sssp),
            "bfs" => Ok(Kernel::Bfs),
            other => Err(BenchError::InvalidArgument(format!(
                "unknown kernel {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Spmv => "spmv",
            Kernel::Spmm => "spmm",
            Kernel::Sssp => "sssp",
            Kernel::Bfs => "bfs",
        })
    }
}

/// A schedule as named on the command line. `Auto` defers to the size
/// heuristic per matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleChoice {
    Fixed(ScheduleKind),
    Auto,
}

impl ScheduleChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleChoice::Fixed(k) => k.name(),
            ScheduleChoice::Auto => "auto",
        }
    }

    pub fn resolve(
        &self,
        h: &HeuristicConfig,
        rows: usize,
        cols: usize,
        nnz: usize,
    ) -> ScheduleKind {
        match self {
            ScheduleChoice::Fixed(k) => *k,
            ScheduleChoice::Auto => h.choose(rows, cols, nnz),
        }
    }
}

/// Parses a comma-separated schedule list; `group_size` applies to
/// `group-mapped` entries.
pub fn parse_schedules(list: &str, group_size: usize) -> Result<Vec<ScheduleChoice>, BenchError> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let choice = match name {
            "auto" => ScheduleChoice::Auto,
            "group-mapped" => {
                let k = ScheduleKind::group_mapped(group_size);
                k.validate()?;
                ScheduleChoice::Fixed(k)
            }
            other => ScheduleChoice::Fixed(other.parse()?),
        };
        out.push(choice);
    }
    if out.is_empty() {
        return Err(BenchError::InvalidArgument("empty schedule list".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub kernel: Kernel,
    pub threads: usize,
    /// Defaults to `threads * 32` when unset.
    pub lanes: Option<usize>,
    pub heuristic: HeuristicConfig,
    pub seed: u64,
    pub reps: usize,
}

impl RunOptions {
    pub fn new(kernel: Kernel, threads: usize) -> Self {
        Self {
            kernel,
            threads,
            lanes: None,
            heuristic: HeuristicConfig::default(),
            seed: 7,
            reps: 5,
        }
    }

    fn config(&self, schedule: ScheduleKind) -> ExecutorConfig {
        let cfg = ExecutorConfig::new(schedule, self.threads);
        match self.lanes {
            Some(l) => cfg.with_lanes(l),
            None => cfg,
        }
    }

    pub fn lane_count(&self) -> usize {
        self.lanes
            .unwrap_or(self.threads * DEFAULT_LANES_PER_THREAD)
    }
}

/// Outcome of timing one kernel under one schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub schedule: &'static str,
    pub resolved: ScheduleKind,
    pub matrix: String,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub elapsed_ms: f64,
    /// Mismatching output entries; `None` when validation was not requested.
    pub errors: Option<usize>,
}

impl RunReport {
    pub fn write_verbose<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "Schedule:       {}", self.resolved)?;
        writeln!(w, "Elapsed (ms):   {}", self.elapsed_ms)?;
        writeln!(w, "Matrix:         {}", self.matrix)?;
        writeln!(
            w,
            "Dimensions:     {} x {} ({})",
            self.rows, self.cols, self.nnz
        )?;
        if let Some(e) = self.errors {
            writeln!(w, "Errors:         {e}")?;
        }
        Ok(())
    }
}

pub fn load_matrix(path: &Path) -> Result<CsrMatrix<f64>, BenchError> {
    let coo = read_matrix_market(path).map_err(|source| BenchError::Matrix {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(coo_to_csr(&coo))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn time_ms<R>(f: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let r = f();
    (r, start.elapsed().as_secs_f64() * 1e3)
}

fn close(got: f64, want: f64, scale: f64) -> bool {
    (got - want).abs() <= VALIDATION_RTOL * scale + f64::MIN_POSITIVE
}

/// Runs one kernel `1 + reps` times (one warmup) under `schedule` and
/// reports the median time. With `validate`, the last output is compared
/// with the serial reference.
pub fn run_matrix(
    m: &CsrMatrix<f64>,
    name: &str,
    choice: ScheduleChoice,
    opts: &RunOptions,
    validate: bool,
) -> Result<RunReport, BenchError> {
    if opts.reps == 0 {
        return Err(BenchError::InvalidArgument(
            "reps must be at least 1".into(),
        ));
    }
    let resolved = choice.resolve(&opts.heuristic, m.rows(), m.cols(), m.nnz());
    let cfg = opts.config(resolved);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut times = Vec::with_capacity(opts.reps);

    let errors = match opts.kernel {
        Kernel::Spmv => {
            let x = if validate {
                DenseVector::from(
                    (0..m.cols())
                        .map(|_| rng.gen_range(-1.0..=1.0))
                        .collect::<Vec<f64>>(),
                )
            } else {
                DenseVector::filled(m.cols(), 1.0)
            };
            let mut y = kernels::spmv(m, &x, &cfg)?;
            for _ in 0..opts.reps {
                let (r, t) = time_ms(|| kernels::spmv(m, &x, &cfg));
                y = r?;
                times.push(t);
            }
            validate.then(|| {
                let (want, scale) = reference::spmv(m, x.as_slice());
                count_mismatches(y.as_slice(), &want, &scale)
            })
        }
        Kernel::Spmm => {
            let data: Vec<f64> = if validate {
                (0..m.cols() * SPMM_COLUMNS)
                    .map(|_| rng.gen_range(-1.0..=1.0))
                    .collect()
            } else {
                vec![1.0; m.cols() * SPMM_COLUMNS]
            };
            let b = DenseMatrix::from_row_major(m.cols(), SPMM_COLUMNS, data)?;
            let mut c = kernels::spmm(m, &b, &cfg)?;
            for _ in 0..opts.reps {
                let (r, t) = time_ms(|| kernels::spmm(m, &b, &cfg));
                c = r?;
                times.push(t);
            }
            validate.then(|| {
                let (want, scale) = reference::spmm(m, &b);
                count_mismatches(c.as_slice(), &want, &scale)
            })
        }
        Kernel::Sssp => {
            let g = graph_of(m)?;
            let mut dist = kernels::sssp(&g, 0, &cfg)?;
            for _ in 0..opts.reps {
                let (r, t) = time_ms(|| kernels::sssp(&g, 0, &cfg));
                dist = r?;
                times.push(t);
            }
            validate.then(|| {
                let want = reference::dijkstra(&g, 0);
                dist.iter()
                    .zip(&want)
                    .filter(|&(&a, &b)| !(a == b || close(a, b, b)))
                    .count()
            })
        }
        Kernel::Bfs => {
            let g = graph_of(m)?;
            let mut depth = kernels::bfs(&g, 0, &cfg)?;
            for _ in 0..opts.reps {
                let (r, t) = time_ms(|| kernels::bfs(&g, 0, &cfg));
                depth = r?;
                times.push(t);
            }
            validate.then(|| {
                let want = reference::bfs(&g, 0);
                depth.iter().zip(&want).filter(|(a, b)| a != b).count()
            })
        }
    };

    Ok(RunReport {
        schedule: choice.name(),
        resolved,
        matrix: name.to_string(),
        rows: m.rows(),
        cols: m.cols(),
        nnz: m.nnz(),
        elapsed_ms: median(times),
        errors,
    })
}

fn count_mismatches(got: &[f64], want: &[f64], scale: &[f64]) -> usize {
    got.iter()
        .zip(want)
        .zip(scale)
        .filter(|&((&g, &w), &s)| !close(g, w, s))
        .count()
}

/// Traversal graphs use `|a_ij|` as edge weights and require a square matrix.
pub fn graph_of(m: &CsrMatrix<f64>) -> Result<Graph, BenchError> {
    if m.rows() == 0 {
        return Err(BenchError::InvalidArgument(
            "traversal needs at least one vertex".into(),
        ));
    }
    Ok(Graph::new(m.map_values(f64::abs))?)
}

/// Loads `path` and runs every schedule in `schedules` on it.
pub fn run_single(
    path: &Path,
    schedules: &[ScheduleChoice],
    opts: &RunOptions,
    validate: bool,
) -> Result<Vec<RunReport>, BenchError> {
    let m = load_matrix(path)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    schedules
        .iter()
        .map(|&s| run_matrix(&m, &name, s, opts, validate))
        .collect()
}

/// `.mtx` files under `dir`, recursively, in path order.
pub fn discover_matrices(dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    if !dir.is_dir() {
        return Err(BenchError::MissingDirectory(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(io::Error::from)?;
        let is_mtx = entry
            .path()
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("mtx"));
        if entry.file_type().is_file() && is_mtx {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub matrices: usize,
    pub skipped: usize,
    pub rows_written: usize,
}

/// Writes `kernel,dataset,rows,cols,nnzs,elapsed` followed by one row per
/// (schedule, matrix). Unparsable files, and non-square ones for traversal
/// kernels, are skipped with a warning on `warn`. `limit` caps the number of
/// matrices that are benchmarked.
pub fn run_sweep<W: Write, E: Write>(
    dir: &Path,
    schedules: &[ScheduleChoice],
    opts: &RunOptions,
    limit: Option<usize>,
    out: W,
    mut warn: E,
) -> Result<SweepSummary, BenchError> {
    let files = discover_matrices(dir)?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(CSV_HEADER)?;
    let mut summary = SweepSummary {
        matrices: 0,
        skipped: 0,
        rows_written: 0,
    };
    for path in files {
        if limit.is_some_and(|l| summary.matrices >= l) {
            break;
        }
        let m = match load_matrix(&path) {
            Ok(m) => m,
            Err(e) => {
                writeln!(warn, "warning: skipping {e}")?;
                summary.skipped += 1;
                continue;
            }
        };
        if matches!(opts.kernel, Kernel::Sssp | Kernel::Bfs) && m.rows() != m.cols() {
            writeln!(warn, "warning: skipping {}: not square", path.display())?;
            summary.skipped += 1;
            continue;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        summary.matrices += 1;
        for &choice in schedules {
            let r = run_matrix(&m, &stem, choice, opts, false)?;
            csv.write_record([
                r.schedule.to_string(),
                stem.clone(),
                r.rows.to_string(),
                r.cols.to_string(),
                r.nnz.to_string(),
                r.elapsed_ms.to_string(),
            ])?;
            summary.rows_written += 1;
        }
    }
    csv.flush()?;
    if summary.matrices == 0 {
        return Err(BenchError::NoMatrices(dir.to_path_buf()));
    }
    Ok(summary)
}

/// One line of the imbalance table.
#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceRow {
    pub schedule: &'static str,
    pub resolved: ScheduleKind,
    pub max: usize,
    pub mean: f64,
    pub factor: f64,
}

pub fn imbalance_rows(
    m: &CsrMatrix<f64>,
    schedules: &[ScheduleChoice],
    opts: &RunOptions,
) -> Result<Vec<ImbalanceRow>, BenchError> {
    let ts = csr_tile_set(m);
    schedules
        .iter()
        .map(|choice| {
            let resolved = choice.resolve(&opts.heuristic, m.rows(), m.cols(), m.nnz());
            let r = imbalance(&ts, &opts.config(resolved)).map_err(KernelError::from)?;
            Ok(ImbalanceRow {
                schedule: choice.name(),
                resolved,
                max: r.max,
                mean: r.mean,
                factor: r.imbalance_factor,
            })
        })
        .collect()
}

/// Prints per-lane atom balance for each schedule.
pub fn report_imbalance<W: Write>(
    path: &Path,
    schedules: &[ScheduleChoice],
    opts: &RunOptions,
    mut out: W,
) -> Result<Vec<ImbalanceRow>, BenchError> {
    let m = load_matrix(path)?;
    let rows = imbalance_rows(&m, schedules, opts)?;
    writeln!(out, "lanes: {}", opts.lane_count())?;
    writeln!(
        out,
        "{:<24} {:>10} {:>12} {:>10}",
        "schedule", "max", "mean", "imbalance"
    )?;
    for r in &rows {
        let label = match r.schedule {
            "auto" => format!("auto ({})", r.resolved),
            _ => r.resolved.to_string(),
        };
        writeln!(
            out,
            "{label:<24} {:>10} {:>12.2} {:>10.4}",
            r.max, r.mean, r.factor
        )?;
    }
    Ok(rows)
}
