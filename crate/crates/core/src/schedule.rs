//! Load-balancing schedules: pure maps from lane or group ids to the tiles
//! and atoms they own.
//!
//! * thread-mapped: one tile per lane, lane-strided over the tile set.
//! * merge-path: the staircase walk over (tile boundaries x atoms) is cut
//!   into equal-length pieces, one per lane, located by binary search on
//!   anti-diagonals.
//! * group-mapped: contiguous tile blocks go to groups of lanes; each group
//!   builds an exclusive prefix sum over its block and members stride over
//!   the block's atoms, recovering the tile with [`get_tile`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::work::{lane_stride_range, LaneStrideRange, RangeError, TileSet};

pub const WARP_SIZE: usize = 32;
pub const BLOCK_SIZE: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("diagonal {diagonal} is beyond total work {total}")]
    DiagonalOutOfRange { diagonal: usize, total: usize },
    #[error("lane count must be at least 1")]
    NoLanes,
    #[error("group {group_id} is not below group count {group_count}")]
    GroupOutOfRange { group_id: usize, group_count: usize },
    #[error("group size and tiles per block must be at least 1")]
    EmptyGroup,
    #[error("atom {atom} is outside the block's {total} atoms")]
    AtomOutOfRange { atom: usize, total: usize },
    #[error("prefix sum overflowed")]
    Overflow,
    #[error("unknown schedule {0:?}")]
    UnknownSchedule(String),
    #[error(transparent)]
    Range(#[from] RangeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    ThreadMapped,
    MergePath,
    /// `tiles_per_block` defaults to `group_size`.
    GroupMapped {
        group_size: usize,
        tiles_per_block: usize,
    },
}

impl ScheduleKind {
    pub fn group_mapped(group_size: usize) -> Self {
        Self::GroupMapped {
            group_size,
            tiles_per_block: group_size,
        }
    }

    pub fn warp_mapped() -> Self {
        Self::group_mapped(WARP_SIZE)
    }

    pub fn block_mapped() -> Self {
        Self::group_mapped(BLOCK_SIZE)
    }

    /// Overrides the block size of a group-mapped schedule; other kinds are
    /// returned unchanged.
    pub fn with_tiles_per_block(self, tiles: usize) -> Self {
        match self {
            Self::GroupMapped { group_size, .. } => Self::GroupMapped {
                group_size,
                tiles_per_block: tiles,
            },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        match *self {
            Self::GroupMapped {
                group_size,
                tiles_per_block,
            } if group_size == 0 || tiles_per_block == 0 => Err(ScheduleError::EmptyGroup),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ThreadMapped => "thread-mapped",
            Self::MergePath => "merge-path",
            Self::GroupMapped { .. } => "group-mapped",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `thread-mapped`, `merge-path`, `group-mapped` (warp-sized groups),
/// `warp-mapped` and `block-mapped`.
impl FromStr for ScheduleKind {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thread-mapped" => Ok(Self::ThreadMapped),
            "merge-path" => Ok(Self::MergePath),
            "group-mapped" | "warp-mapped" => Ok(Self::warp_mapped()),
            "block-mapped" => Ok(Self::block_mapped()),
            other => Err(ScheduleError::UnknownSchedule(other.to_string())),
        }
    }
}

/// Tiles owned by `lane`; the atoms of tile `t` are `ts.tile_atoms(t)`.
pub fn thread_mapped_tiles<S: TileSet + ?Sized>(
    ts: &S,
    lane: usize,
    lane_count: usize,
) -> Result<LaneStrideRange, ScheduleError> {
    Ok(lane_stride_range(lane, lane_count, ts.num_tiles())?)
}

/// A point on the merge path: tiles whose end boundary has been consumed,
/// and atoms consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct MergePathCoord {
    pub tile: usize,
    pub atom: usize,
}

impl MergePathCoord {
    pub fn diagonal(&self) -> usize {
        self.tile + self.atom
    }
}

/// Locates the merge-path point on anti-diagonal `diagonal`.
///
/// The path starts at (0, 0) and at each step consumes the current tile's end
/// boundary if `atom_offset(tile + 1) <= atom`, otherwise one atom. The point
/// reached after `diagonal` steps is the greatest `tile` in
/// `[diagonal - num_atoms, min(diagonal, num_tiles)]` with
/// `atom_offset(tile) <= diagonal - tile`; since `atom_offset(t) + t` is
/// strictly increasing this is a binary search.
pub fn merge_path_search<S: TileSet + ?Sized>(
    diagonal: usize,
    ts: &S,
) -> Result<MergePathCoord, ScheduleError> {
    let total = ts.num_tiles() + ts.num_atoms();
    if diagonal > total {
        return Err(ScheduleError::DiagonalOutOfRange { diagonal, total });
    }
    // Invariant: lo satisfies the predicate, hi + 1 does not (or is out of range).
    let mut lo = diagonal.saturating_sub(ts.num_atoms());
    let mut hi = diagonal.min(ts.num_tiles());
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if ts.atom_offset(mid) <= diagonal - mid {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(MergePathCoord {
        tile: lo,
        atom: diagonal - lo,
    })
}

/// `ceil((num_tiles + num_atoms) / lane_count)`.
pub fn merge_path_items_per_lane<S: TileSet + ?Sized>(ts: &S, lane_count: usize) -> usize {
    (ts.num_tiles() + ts.num_atoms()).div_ceil(lane_count.max(1))
}

/// Split points for `lane_count` lanes: `lane_count + 1` coordinates, lane `k`
/// owning the path between `coords[k]` and `coords[k + 1]`. Diagonals are
/// clamped to total work, so surplus lanes get empty slices.
pub fn merge_path_partition<S: TileSet + ?Sized>(
    ts: &S,
    lane_count: usize,
) -> Result<Vec<MergePathCoord>, ScheduleError> {
    if lane_count == 0 {
        return Err(ScheduleError::NoLanes);
    }
    let total = ts.num_tiles() + ts.num_atoms();
    let items = merge_path_items_per_lane(ts, lane_count);
    (0..=lane_count)
        .map(|k| merge_path_search(k.saturating_mul(items).min(total), ts))
        .collect()
}

/// One lane's share of the merge path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MergePathSlice {
    pub tile_begin: usize,
    pub atom_begin: usize,
    pub tile_end: usize,
    pub atom_end: usize,
}

impl MergePathSlice {
    pub fn between(start: MergePathCoord, end: MergePathCoord) -> Self {
        Self {
            tile_begin: start.tile,
            atom_begin: start.atom,
            tile_end: end.tile,
            atom_end: end.atom,
        }
    }

    /// Tile boundaries plus atoms consumed by this slice.
    pub fn work_items(&self) -> usize {
        (self.tile_end - self.tile_begin) + (self.atom_end - self.atom_begin)
    }

    pub fn atoms(&self) -> usize {
        self.atom_end - self.atom_begin
    }
}

/// A run of atoms from one tile inside a lane's slice.
///
/// `completes_tile` is set when the slice also consumes the tile's end
/// boundary ("complete" at its right edge). At most one segment per slice,
/// the last, leaves its tile open ("partial").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileSegment {
    pub tile: usize,
    pub atoms: std::ops::Range<usize>,
    pub completes_tile: bool,
}

/// Iterator over the [`TileSegment`]s of a slice, in path order.
#[derive(Debug, Clone)]
pub struct SliceSegments<'a, S: ?Sized> {
    ts: &'a S,
    tile: usize,
    atom: usize,
    tile_end: usize,
    atom_end: usize,
}

impl<S: TileSet + ?Sized> Iterator for SliceSegments<'_, S> {
    type Item = TileSegment;

    #[inline]
    fn next(&mut self) -> Option<TileSegment> {
        if self.tile < self.tile_end {
            let end = self.ts.atom_offset(self.tile + 1);
            let seg = TileSegment {
                tile: self.tile,
                atoms: self.atom..end,
                completes_tile: true,
            };
            self.tile += 1;
            self.atom = end;
            Some(seg)
        } else if self.atom < self.atom_end {
            let seg = TileSegment {
                tile: self.tile,
                atoms: self.atom..self.atom_end,
                completes_tile: false,
            };
            self.atom = self.atom_end;
            Some(seg)
        } else {
            None
        }
    }
}

impl MergePathSlice {
    pub fn segments<'a, S: TileSet + ?Sized>(&self, ts: &'a S) -> SliceSegments<'a, S> {
        SliceSegments {
            ts,
            tile: self.tile_begin,
            atom: self.atom_begin,
            tile_end: self.tile_end,
            atom_end: self.atom_end,
        }
    }
}

pub fn merge_path_slices<S: TileSet + ?Sized>(
    ts: &S,
    lane_count: usize,
) -> Result<Vec<MergePathSlice>, ScheduleError> {
    let coords = merge_path_partition(ts, lane_count)?;
    Ok(coords
        .windows(2)
        .map(|w| MergePathSlice::between(w[0], w[1]))
        .collect())
}

/// `out[0] = 0`, `out[i + 1] = out[i] + xs[i]`; overflow is an error.
pub fn exclusive_prefix_sum(xs: &[usize]) -> Result<Vec<usize>, ScheduleError> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    let mut acc = 0usize;
    out.push(acc);
    for &x in xs {
        acc = acc.checked_add(x).ok_or(ScheduleError::Overflow)?;
        out.push(acc);
    }
    Ok(out)
}

/// A group's tile block and the exclusive prefix sum of its tiles' atom
/// counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPlan {
    pub tile_begin: usize,
    pub prefix: Vec<usize>,
}

impl GroupPlan {
    /// Plan for block `block` of `tiles_per_block` consecutive tiles.
    pub fn for_block<S: TileSet + ?Sized>(
        ts: &S,
        block: usize,
        tiles_per_block: usize,
    ) -> Result<Self, ScheduleError> {
        if tiles_per_block == 0 {
            return Err(ScheduleError::EmptyGroup);
        }
        let begin = block.saturating_mul(tiles_per_block).min(ts.num_tiles());
        let end = begin.saturating_add(tiles_per_block).min(ts.num_tiles());
        let counts: Vec<usize> = (begin..end).map(|t| ts.atoms_in_tile(t)).collect();
        Ok(Self {
            tile_begin: begin,
            prefix: exclusive_prefix_sum(&counts)?,
        })
    }

    pub fn tile_count(&self) -> usize {
        self.prefix.len() - 1
    }

    pub fn total_atoms(&self) -> usize {
        self.prefix[self.prefix.len() - 1]
    }
}

pub fn block_count(num_tiles: usize, tiles_per_block: usize) -> usize {
    num_tiles.div_ceil(tiles_per_block.max(1))
}

/// Plans for every block owned by `group_id`: blocks `group_id`,
/// `group_id + group_count`, ...
pub fn group_plans<'a, S: TileSet + ?Sized>(
    ts: &'a S,
    group_id: usize,
    group_count: usize,
    tiles_per_block: usize,
) -> Result<impl Iterator<Item = Result<GroupPlan, ScheduleError>> + 'a, ScheduleError> {
    if group_id >= group_count {
        return Err(ScheduleError::GroupOutOfRange {
            group_id,
            group_count,
        });
    }
    if tiles_per_block == 0 {
        return Err(ScheduleError::EmptyGroup);
    }
    let blocks = block_count(ts.num_tiles(), tiles_per_block);
    Ok(lane_stride_range(group_id, group_count, blocks)?
        .map(move |b| GroupPlan::for_block(ts, b, tiles_per_block)))
}

/// Block-local tile holding block-local atom `local_atom`: the unique `t`
/// with `prefix[t] <= local_atom < prefix[t + 1]`. Empty tiles are skipped.
#[inline]
pub fn get_tile(plan: &GroupPlan, local_atom: usize) -> Result<usize, ScheduleError> {
    let total = plan.total_atoms();
    if local_atom >= total {
        return Err(ScheduleError::AtomOutOfRange {
            atom: local_atom,
            total,
        });
    }
    Ok(plan.prefix.partition_point(|&p| p <= local_atom) - 1)
}
