//! Runs a schedule over a tile set on `P` virtual lanes multiplexed onto
//! worker threads.
//!
//! Lanes are sharded round-robin over threads. Groups of the group-mapped
//! schedule always live on one thread and are simulated phase by phase (plan
//! build, then member-stride execution), so no intra-group barrier is needed.
//! Merge-path passes return one [`CarryOut`] per lane for the tile left open
//! at the right edge of its slice; [`fixup_combine`] folds those into the
//! per-tile results after the pass.
//!
//! Every `execute_*` call spawns its workers in a thread scope and joins them
//! before returning.

use std::any::Any;
use std::ops::Range;
use std::thread;

use thiserror::Error;

use crate::scalar::{AtomicF64, AtomicScalar, Scalar};
use crate::schedule::{
    get_tile, group_plans, merge_path_partition, merge_path_slices, thread_mapped_tiles,
    MergePathSlice, ScheduleError, ScheduleKind, TileSegment,
};
use crate::work::{step_range, RangeError, TileSet};

/// Lanes per worker thread when the lane count is not given.
pub const DEFAULT_LANES_PER_THREAD: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecutorError {
    #[error("lane count and worker threads must be at least 1")]
    InvalidConfig,
    #[error("{operation} does not run the {found} schedule")]
    WrongSchedule {
        operation: &'static str,
        found: ScheduleKind,
    },
    #[error("worker panicked: {0}")]
    WorkerPanicked(String),
    #[error("atomic min needs a non-negative candidate, got {0}")]
    InvalidCandidate(f64),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Range(#[from] RangeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecutorConfig {
    pub lanes: usize,
    pub worker_threads: usize,
    pub schedule: ScheduleKind,
}

impl ExecutorConfig {
    /// `worker_threads * 32` lanes.
    pub fn new(schedule: ScheduleKind, worker_threads: usize) -> Self {
        Self {
            lanes: worker_threads.saturating_mul(DEFAULT_LANES_PER_THREAD),
            worker_threads,
            schedule,
        }
    }

    pub fn with_lanes(mut self, lanes: usize) -> Self {
        self.lanes = lanes;
        self
    }

    pub fn with_schedule(mut self, schedule: ScheduleKind) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<(), ExecutorError> {
        if self.lanes == 0 || self.worker_threads == 0 {
            return Err(ExecutorError::InvalidConfig);
        }
        Ok(self.schedule.validate()?)
    }
}

/// Identity and combine for merge-path accumulations.
pub trait Reduction<A>: Sync {
    fn identity(&self) -> A;
    fn combine(&self, acc: A, item: A) -> A;
}

/// Addition over a [`Scalar`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Sum;

impl<T: Scalar> Reduction<T> for Sum {
    #[inline]
    fn identity(&self) -> T {
        T::ZERO
    }

    #[inline]
    fn combine(&self, acc: T, item: T) -> T {
        acc + item
    }
}

/// Partial reduction of the tile a lane's slice leaves open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarryOut<A> {
    pub tile: usize,
    pub partial: A,
}

impl<A> CarryOut<A> {
    pub const SENTINEL_TILE: usize = usize::MAX;

    pub fn sentinel(identity: A) -> Self {
        Self {
            tile: Self::SENTINEL_TILE,
            partial: identity,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.tile == Self::SENTINEL_TILE
    }
}

fn panic_message(payload: Box<dyn Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

/// Runs `f` for every unit in `0..units`, unit `u` on worker `u % threads`.
/// Results come back ordered by unit.
fn shard<R, F>(units: usize, threads: usize, f: F) -> Result<Vec<R>, ExecutorError>
where
    R: Send,
    F: Fn(usize) -> Result<R, ExecutorError> + Sync,
{
    let workers = threads.min(units);
    let per_worker = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    step_range(w, units, workers)
                        .expect("workers >= 1")
                        .map(f)
                        .collect::<Result<Vec<R>, _>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .map_err(|p| ExecutorError::WorkerPanicked(panic_message(p)))
            })
            .collect::<Vec<_>>()
    });

    let mut outs: Vec<std::vec::IntoIter<R>> = Vec::with_capacity(workers);
    for r in per_worker {
        outs.push(r??.into_iter());
    }
    let mut results = Vec::with_capacity(units);
    for u in 0..units {
        results.push(outs[u % workers].next().expect("one result per unit"));
    }
    Ok(results)
}

/// Lanes of group `group`: `group * group_size ..`, capped by the lane count.
fn group_lanes(group: usize, group_size: usize, lanes: usize) -> Range<usize> {
    let begin = group * group_size;
    begin..(begin + group_size).min(lanes)
}

/// Runs a tile-major schedule (thread-mapped or group-mapped).
///
/// Thread-mapped calls `work_fn(lane, tile, atoms)` once per tile with the
/// whole atom range, empty tiles included. Group-mapped hands each member
/// the block-local atoms `member, member + members, ...` and attributes each
/// to its tile through [`get_tile`]; consecutive atoms of the same tile are
/// passed as one range, so single-member groups see whole tiles. Empty tiles
/// are never visited by group-mapped.
pub fn execute_tile_major<S, F>(
    cfg: &ExecutorConfig,
    ts: &S,
    work_fn: F,
) -> Result<(), ExecutorError>
where
    S: TileSet + ?Sized,
    F: Fn(usize, usize, Range<usize>) + Sync,
{
    cfg.validate()?;
    match cfg.schedule {
        ScheduleKind::ThreadMapped => {
            shard(cfg.lanes, cfg.worker_threads, |lane| {
                for tile in thread_mapped_tiles(ts, lane, cfg.lanes)? {
                    work_fn(lane, tile, ts.tile_atoms(tile));
                }
                Ok(())
            })?;
        }
        ScheduleKind::GroupMapped {
            group_size,
            tiles_per_block,
        } => {
            let groups = cfg.lanes.div_ceil(group_size);
            shard(groups, cfg.worker_threads, |group| {
                let lanes = group_lanes(group, group_size, cfg.lanes);
                let members = lanes.len();
                for plan in group_plans(ts, group, groups, tiles_per_block)? {
                    let plan = plan?;
                    for (member, lane) in lanes.clone().enumerate() {
                        let mut run: Option<(usize, Range<usize>)> = None;
                        for local in step_range(member, plan.total_atoms(), members)? {
                            let t = get_tile(&plan, local)?;
                            let tile = plan.tile_begin + t;
                            let atom = ts.atom_offset(tile) + (local - plan.prefix[t]);
                            match &mut run {
                                Some((rt, r)) if *rt == tile && r.end == atom => r.end += 1,
                                _ => {
                                    if let Some((rt, r)) = run.take() {
                                        work_fn(lane, rt, r);
                                    }
                                    run = Some((tile, atom..atom + 1));
                                }
                            }
                        }
                        if let Some((rt, r)) = run {
                            work_fn(lane, rt, r);
                        }
                    }
                }
                Ok(())
            })?;
        }
        found @ ScheduleKind::MergePath => {
            return Err(ExecutorError::WrongSchedule {
                operation: "execute_tile_major",
                found,
            })
        }
    }
    Ok(())
}

fn require_merge_path(cfg: &ExecutorConfig, operation: &'static str) -> Result<(), ExecutorError> {
    cfg.validate()?;
    match cfg.schedule {
        ScheduleKind::MergePath => Ok(()),
        found => Err(ExecutorError::WrongSchedule { operation, found }),
    }
}

/// Runs a merge-path pass at segment granularity and collects one value per
/// lane from `lane_fn(lane, slice)`.
pub fn execute_merge_path_lanes<S, R, F>(
    cfg: &ExecutorConfig,
    ts: &S,
    lane_fn: F,
) -> Result<Vec<R>, ExecutorError>
where
    S: TileSet + ?Sized,
    R: Send,
    F: Fn(usize, MergePathSlice) -> R + Sync,
{
    require_merge_path(cfg, "execute_merge_path")?;
    let slices = merge_path_slices(ts, cfg.lanes)?;
    shard(cfg.lanes, cfg.worker_threads, |lane| {
        Ok(lane_fn(lane, slices[lane]))
    })
}

/// Calls `segment_fn(lane, segment)` for every [`TileSegment`] of every lane.
pub fn execute_merge_path_segments<S, F>(
    cfg: &ExecutorConfig,
    ts: &S,
    segment_fn: F,
) -> Result<(), ExecutorError>
where
    S: TileSet + ?Sized,
    F: Fn(usize, TileSegment) + Sync,
{
    execute_merge_path_lanes(cfg, ts, |lane, slice| {
        for seg in slice.segments(ts) {
            segment_fn(lane, seg);
        }
    })?;
    Ok(())
}

/// Merge-path pass with per-tile reductions.
///
/// Each lane walks its slice in path order, folding `atom_fn` results with
/// `reduction` and resetting at every tile boundary. `tile_done` fires for
/// each tile whose end boundary falls inside the lane's slice, with the
/// lane's share of that tile. The tile left open at the slice's right edge
/// becomes the lane's carry; lanes ending exactly on a boundary return the
/// sentinel carry.
pub fn execute_merge_path<S, A, R, F, D>(
    cfg: &ExecutorConfig,
    ts: &S,
    reduction: &R,
    atom_fn: F,
    tile_done: D,
) -> Result<Vec<CarryOut<A>>, ExecutorError>
where
    S: TileSet + ?Sized,
    A: Send,
    R: Reduction<A>,
    F: Fn(usize, usize, usize) -> A + Sync,
    D: Fn(usize, usize, A) + Sync,
{
    execute_merge_path_lanes(cfg, ts, |lane, slice| {
        let mut carry = CarryOut::sentinel(reduction.identity());
        for seg in slice.segments(ts) {
            let tile = seg.tile;
            let acc = seg.atoms.fold(reduction.identity(), |acc, atom| {
                reduction.combine(acc, atom_fn(lane, tile, atom))
            });
            if seg.completes_tile {
                tile_done(lane, tile, acc);
            } else {
                carry = CarryOut { tile, partial: acc };
            }
        }
        carry
    })
}

/// Applies every non-sentinel carry once, in order.
pub fn fixup_combine<A, I, C>(carries: I, mut combine: C)
where
    I: IntoIterator<Item = CarryOut<A>>,
    C: FnMut(usize, A),
{
    for c in carries {
        if !c.is_sentinel() {
            combine(c.tile, c.partial);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImbalanceReport {
    pub per_lane_atoms: Vec<usize>,
    pub max: usize,
    pub mean: f64,
    /// `max / mean`, or 1.0 when there is no work.
    pub imbalance_factor: f64,
}

impl ImbalanceReport {
    fn from_counts(per_lane_atoms: Vec<usize>) -> Self {
        let max = per_lane_atoms.iter().copied().max().unwrap_or(0);
        let total: usize = per_lane_atoms.iter().sum();
        let mean = total as f64 / per_lane_atoms.len().max(1) as f64;
        let imbalance_factor = if mean == 0.0 { 1.0 } else { max as f64 / mean };
        Self {
            per_lane_atoms,
            max,
            mean,
            imbalance_factor,
        }
    }
}

/// Atoms assigned to each lane by `cfg.schedule`, computed from the
/// partition alone.
pub fn imbalance<S: TileSet + ?Sized>(
    ts: &S,
    cfg: &ExecutorConfig,
) -> Result<ImbalanceReport, ExecutorError> {
    cfg.validate()?;
    let lanes = cfg.lanes;
    let mut per_lane = vec![0usize; lanes];
    match cfg.schedule {
        ScheduleKind::ThreadMapped => {
            for (lane, count) in per_lane.iter_mut().enumerate() {
                *count = thread_mapped_tiles(ts, lane, lanes)?
                    .map(|t| ts.atoms_in_tile(t))
                    .sum();
            }
        }
        ScheduleKind::MergePath => {
            let coords = merge_path_partition(ts, lanes)?;
            for (count, w) in per_lane.iter_mut().zip(coords.windows(2)) {
                *count = w[1].atom - w[0].atom;
            }
        }
        ScheduleKind::GroupMapped {
            group_size,
            tiles_per_block,
        } => {
            let groups = lanes.div_ceil(group_size);
            for group in 0..groups {
                let lane_range = group_lanes(group, group_size, lanes);
                let members = lane_range.len();
                for plan in group_plans(ts, group, groups, tiles_per_block)? {
                    let total = plan?.total_atoms();
                    for (member, lane) in lane_range.clone().enumerate() {
                        per_lane[lane] += total / members + usize::from(member < total % members);
                    }
                }
            }
        }
    }
    Ok(ImbalanceReport::from_counts(per_lane))
}

/// Atomically lowers `slot` to `min(slot, candidate)` and returns the value
/// it held before.
///
/// Lock-free: for non-negative reals and `+inf` the IEEE bit patterns sort
/// like the values, so this is an integer `fetch_min` on the bits. Negative
/// and NaN candidates are rejected; `-0.0` is treated as `0.0`.
pub fn atomic_min_real(slot: &AtomicF64, candidate: f64) -> Result<f64, ExecutorError> {
    if candidate.is_nan() || candidate < 0.0 {
        return Err(ExecutorError::InvalidCandidate(candidate));
    }
    Ok(slot.fetch_min_non_negative(candidate + 0.0))
}

/// A distance slot initialized to `+inf`.
pub fn unreached_slot() -> AtomicF64 {
    AtomicF64::new(f64::INFINITY)
}
