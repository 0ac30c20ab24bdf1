//! SpMV, SpMM, SSSP and BFS written as consumers of balanced ranges.
//!
//! Every kernel produces the same result under every schedule; only the
//! assignment of work to lanes changes. The kernels own their outer loops
//! (SSSP/BFS drive passes until the frontier empties); the executor only
//! runs one pass at a time.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use thiserror::Error;

use crate::executor::{
    execute_merge_path, execute_merge_path_lanes, execute_merge_path_segments, execute_tile_major,
    fixup_combine, CarryOut, ExecutorConfig, ExecutorError, Sum,
};
use crate::scalar::{atomic_zeros, unwrap_atomics, AtomicF64, AtomicScalar, Scalar};
use crate::schedule::ScheduleKind;
use crate::sparse::{CsrMatrix, DenseMatrix, DenseVector, Graph};
use crate::work::{csr_tile_set, TileCounts, TileSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: {what} expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("source vertex {vertex} out of range for {vertices} vertices")]
    SourceOutOfRange { vertex: usize, vertices: usize },
    #[error("heuristic thresholds must be positive")]
    InvalidHeuristic,
    #[error(transparent)]
    Executor(#[from] ExecutorError),
}

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<(), KernelError> {
    if expected != found {
        return Err(KernelError::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// `y = A x`.
pub fn spmv<T: Scalar>(
    m: &CsrMatrix<T>,
    x: &DenseVector<T>,
    cfg: &ExecutorConfig,
) -> Result<DenseVector<T>, KernelError> {
    check_dim("x length", m.cols(), x.len())?;
    let ts = csr_tile_set(m);
    let (values, indices, x) = (m.values(), m.col_indices(), x.as_slice());
    let product = |nz: usize| values[nz] * x[indices[nz]];
    let y = atomic_zeros::<T>(m.rows());

    match cfg.schedule {
        ScheduleKind::ThreadMapped => execute_tile_major(cfg, &ts, |_, row, atoms| {
            let mut sum = T::ZERO;
            for nz in atoms {
                sum += product(nz);
            }
            y[row].store(sum);
        })?,
        ScheduleKind::GroupMapped { .. } => execute_tile_major(cfg, &ts, |_, row, atoms| {
            let mut sum = T::ZERO;
            for nz in atoms {
                sum += product(nz);
            }
            y[row].fetch_add(sum);
        })?,
        ScheduleKind::MergePath => {
            let carries = execute_merge_path(
                cfg,
                &ts,
                &Sum,
                |_, _, nz| product(nz),
                |_, row, sum| y[row].store(sum),
            )?;
            fixup_combine(carries, |row, partial| {
                y[row].fetch_add(partial);
            });
        }
    }
    Ok(unwrap_atomics::<T>(y).into())
}

/// `C = A B` with `B` dense; the column loop sits inside the tile loop.
pub fn spmm<T: Scalar>(
    m: &CsrMatrix<T>,
    b: &DenseMatrix<T>,
    cfg: &ExecutorConfig,
) -> Result<DenseMatrix<T>, KernelError> {
    check_dim("B rows", m.cols(), b.rows())?;
    let ts = csr_tile_set(m);
    let (values, indices) = (m.values(), m.col_indices());
    let bc = b.cols();
    let c = atomic_zeros::<T>(m.rows() * bc);

    let row_col_sum = |atoms: std::ops::Range<usize>, col: usize| {
        let mut sum = T::ZERO;
        for nz in atoms {
            sum += values[nz] * b.get(indices[nz], col);
        }
        sum
    };

    match cfg.schedule {
        ScheduleKind::ThreadMapped => execute_tile_major(cfg, &ts, |_, row, atoms| {
            for col in 0..bc {
                c[row * bc + col].store(row_col_sum(atoms.clone(), col));
            }
        })?,
        ScheduleKind::GroupMapped { .. } => execute_tile_major(cfg, &ts, |_, row, atoms| {
            for col in 0..bc {
                c[row * bc + col].fetch_add(row_col_sum(atoms.clone(), col));
            }
        })?,
        ScheduleKind::MergePath => {
            let carries = execute_merge_path_lanes(cfg, &ts, |_, slice| {
                let mut carry = CarryOut::sentinel(Vec::new());
                for seg in slice.segments(&ts) {
                    if seg.completes_tile {
                        for col in 0..bc {
                            c[seg.tile * bc + col].store(row_col_sum(seg.atoms.clone(), col));
                        }
                    } else {
                        let partial = (0..bc).map(|col| row_col_sum(seg.atoms.clone(), col));
                        carry = CarryOut {
                            tile: seg.tile,
                            partial: partial.collect(),
                        };
                    }
                }
                carry
            })?;
            fixup_combine(carries, |row, partial: Vec<T>| {
                for (col, p) in partial.into_iter().enumerate() {
                    c[row * bc + col].fetch_add(p);
                }
            });
        }
    }
    Ok(
        DenseMatrix::from_row_major(m.rows(), bc, unwrap_atomics::<T>(c))
            .expect("output sized rows x cols"),
    )
}

/// Active vertices as tiles, their out-edges as atoms.
struct FrontierTiles<'g> {
    graph: &'g Graph,
    vertices: Vec<usize>,
    counts: TileCounts,
}

impl<'g> FrontierTiles<'g> {
    fn new(graph: &'g Graph, vertices: Vec<usize>) -> Self {
        let degrees: Vec<usize> = vertices.iter().map(|&v| graph.out_degree(v)).collect();
        Self {
            graph,
            vertices,
            counts: TileCounts::from_counts(&degrees),
        }
    }

    /// Source vertex and edge index of frontier atom `atom` in tile `tile`.
    #[inline]
    fn edge(&self, tile: usize, atom: usize) -> (usize, usize) {
        let v = self.vertices[tile];
        let first = self.graph.adjacency().row_offsets()[v];
        (v, first + (atom - self.counts.atom_offset(tile)))
    }
}

impl TileSet for FrontierTiles<'_> {
    fn num_tiles(&self) -> usize {
        self.counts.num_tiles()
    }
    fn num_atoms(&self) -> usize {
        self.counts.num_atoms()
    }
    fn atom_offset(&self, tile: usize) -> usize {
        self.counts.atom_offset(tile)
    }
}

/// One traversal pass: `relax(source, edge)` for every out-edge of every
/// frontier vertex, distributed by `cfg.schedule`.
fn frontier_pass<F>(
    cfg: &ExecutorConfig,
    graph: &Graph,
    frontier: Vec<usize>,
    relax: F,
) -> Result<(), KernelError>
where
    F: Fn(usize, usize) + Sync,
{
    let ts = FrontierTiles::new(graph, frontier);
    let visit = |tile: usize, atoms: std::ops::Range<usize>| {
        for a in atoms {
            let (u, e) = ts.edge(tile, a);
            relax(u, e);
        }
    };
    match cfg.schedule {
        ScheduleKind::MergePath => {
            execute_merge_path_segments(cfg, &ts, |_, seg| visit(seg.tile, seg.atoms))?
        }
        _ => execute_tile_major(cfg, &ts, |_, tile, atoms| visit(tile, atoms))?,
    }
    Ok(())
}

fn check_source(graph: &Graph, source: usize) -> Result<(), KernelError> {
    if source >= graph.vertex_count() {
        return Err(KernelError::SourceOutOfRange {
            vertex: source,
            vertices: graph.vertex_count(),
        });
    }
    Ok(())
}

fn take_frontier(flags: &[AtomicBool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(v, f)| f.swap(false, Ordering::Relaxed).then_some(v))
        .collect()
}

/// Single-source shortest path state, advanced one relaxation pass at a
/// time by [`SsspState::relax_pass`].
#[derive(Debug)]
pub struct SsspState {
    dist: Vec<AtomicF64>,
    in_frontier: Vec<bool>,
    out_frontier: Vec<AtomicBool>,
    passes: usize,
}

impl SsspState {
    pub fn new(graph: &Graph, source: usize) -> Result<Self, KernelError> {
        check_source(graph, source)?;
        let n = graph.vertex_count();
        let dist: Vec<AtomicF64> = (0..n).map(|_| AtomicF64::new(f64::INFINITY)).collect();
        dist[source].store(0.0);
        let mut in_frontier = vec![false; n];
        in_frontier[source] = true;
        Ok(Self {
            dist,
            in_frontier,
            out_frontier: (0..n).map(|_| AtomicBool::new(false)).collect(),
            passes: 0,
        })
    }

    /// Relaxes every out-edge of the current frontier. Returns whether the
    /// next frontier is nonempty.
    pub fn relax_pass(&mut self, graph: &Graph, cfg: &ExecutorConfig) -> Result<bool, KernelError> {
        let frontier: Vec<usize> = (0..self.in_frontier.len())
            .filter(|&v| self.in_frontier[v])
            .collect();
        let (dist, out) = (&self.dist, &self.out_frontier);
        frontier_pass(cfg, graph, frontier, |u, e| {
            let v = graph.neighbor(e);
            let nd = dist[u].load() + graph.weight(e);
            // Weights are validated non-negative, so nd is too.
            let prev = dist[v].fetch_min_non_negative(nd + 0.0);
            if nd < prev {
                out[v].store(true, Ordering::Relaxed);
            }
        })?;
        self.passes += 1;
        self.in_frontier.iter_mut().for_each(|f| *f = false);
        let next = take_frontier(&self.out_frontier);
        for &v in &next {
            self.in_frontier[v] = true;
        }
        Ok(!next.is_empty())
    }

    pub fn frontier_is_empty(&self) -> bool {
        !self.in_frontier.iter().any(|&f| f)
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn distances(&self) -> Vec<f64> {
        self.dist.iter().map(AtomicScalar::load).collect()
    }
}

/// Shortest distances from `source`; unreachable vertices get `+inf`.
pub fn sssp(graph: &Graph, source: usize, cfg: &ExecutorConfig) -> Result<Vec<f64>, KernelError> {
    let mut state = SsspState::new(graph, source)?;
    while state.relax_pass(graph, cfg)? {}
    Ok(state.distances())
}

/// Depth of vertices [`bfs`] never reaches.
pub const UNREACHED: usize = usize::MAX;

/// Hop counts from `source`, the same frontier traversal as [`sssp`] with
/// unit weights and integer atomic-min on depths.
pub fn bfs(graph: &Graph, source: usize, cfg: &ExecutorConfig) -> Result<Vec<usize>, KernelError> {
    check_source(graph, source)?;
    let n = graph.vertex_count();
    let depth: Vec<AtomicUsize> = (0..n).map(|_| AtomicUsize::new(UNREACHED)).collect();
    depth[source].store(0, Ordering::Relaxed);
    let out: Vec<AtomicBool> = (0..n).map(|_| AtomicBool::new(false)).collect();

    let mut frontier = vec![source];
    while !frontier.is_empty() {
        frontier_pass(cfg, graph, frontier, |u, e| {
            let v = graph.neighbor(e);
            let nd = depth[u].load(Ordering::Relaxed) + 1;
            if nd < depth[v].fetch_min(nd, Ordering::AcqRel) {
                out[v].store(true, Ordering::Relaxed);
            }
        })?;
        frontier = take_frontier(&out);
    }
    Ok(depth.into_iter().map(AtomicUsize::into_inner).collect())
}

/// Size thresholds for picking an SpMV schedule.
///
/// Merge-path is used unless `(rows < alpha || cols < alpha) && nnz < beta`,
/// in which case `small_schedule` is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicConfig {
    pub alpha: usize,
    pub beta: usize,
    pub small_schedule: ScheduleKind,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            alpha: 500,
            beta: 10_000,
            small_schedule: ScheduleKind::ThreadMapped,
        }
    }
}

impl HeuristicConfig {
    pub fn choose(&self, rows: usize, cols: usize, nnz: usize) -> ScheduleKind {
        if (rows < self.alpha || cols < self.alpha) && nnz < self.beta {
            self.small_schedule
        } else {
            ScheduleKind::MergePath
        }
    }
}

/// [`spmv`] with the schedule picked by `h`; `cfg.schedule` is ignored.
pub fn spmv_auto<T: Scalar>(
    m: &CsrMatrix<T>,
    x: &DenseVector<T>,
    h: &HeuristicConfig,
    cfg: &ExecutorConfig,
) -> Result<(DenseVector<T>, ScheduleKind), KernelError> {
    if h.alpha == 0 || h.beta == 0 {
        return Err(KernelError::InvalidHeuristic);
    }
    let chosen = h.choose(m.rows(), m.cols(), m.nnz());
    let y = spmv(m, x, &cfg.with_schedule(chosen))?;
    Ok((y, chosen))
}
