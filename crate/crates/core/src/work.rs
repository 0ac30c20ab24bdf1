//! Work atoms, tiles and tile sets, plus the ranges schedules hand out.
//!
//! An atom is the smallest schedulable unit of work and all atoms cost the
//! same. A tile groups a contiguous run of atoms (a matrix row, a vertex's
//! edge list). A tile set is the whole problem as independent tiles,
//! described only through accessors so that non-CSR sources can provide one
//! without materializing arrays.

use std::ops::Range;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Schedule-facing view of a sparse problem.
///
/// Implementations must satisfy `atom_offset(0) == 0`,
/// `atom_offset(num_tiles()) == num_atoms()` and be nondecreasing in between.
pub trait TileSet: Sync {
    fn num_tiles(&self) -> usize;
    fn num_atoms(&self) -> usize;
    /// Index of the first atom of `tile`, defined for `0..=num_tiles()`.
    fn atom_offset(&self, tile: usize) -> usize;

    #[inline]
    fn atoms_in_tile(&self, tile: usize) -> usize {
        self.atom_offset(tile + 1) - self.atom_offset(tile)
    }

    #[inline]
    fn tile_atoms(&self, tile: usize) -> Range<usize> {
        self.atom_offset(tile)..self.atom_offset(tile + 1)
    }
}

impl<S: TileSet + ?Sized> TileSet for &S {
    fn num_tiles(&self) -> usize {
        (**self).num_tiles()
    }
    fn num_atoms(&self) -> usize {
        (**self).num_atoms()
    }
    fn atom_offset(&self, tile: usize) -> usize {
        (**self).atom_offset(tile)
    }
}

/// Tile set backed by an offsets array (CSR `row_offsets` or equivalent).
#[derive(Debug, Clone, Copy)]
pub struct OffsetTiles<'a> {
    offsets: &'a [usize],
}

impl<'a> OffsetTiles<'a> {
    /// `offsets` must be nonempty, start at 0, and be nondecreasing.
    pub fn new(offsets: &'a [usize]) -> Result<Self, TileSetError> {
        if offsets.first() != Some(&0) {
            return Err(TileSetError::BadOrigin);
        }
        if let Some(t) = offsets.windows(2).position(|w| w[0] > w[1]) {
            return Err(TileSetError::Decreasing { tile: t });
        }
        Ok(Self { offsets })
    }

    pub fn offsets(&self) -> &'a [usize] {
        self.offsets
    }
}

impl TileSet for OffsetTiles<'_> {
    #[inline]
    fn num_tiles(&self) -> usize {
        self.offsets.len() - 1
    }
    #[inline]
    fn num_atoms(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }
    #[inline]
    fn atom_offset(&self, tile: usize) -> usize {
        self.offsets[tile]
    }
}

/// Owned offsets, built from per-tile atom counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileCounts {
    offsets: Vec<usize>,
}

impl TileCounts {
    pub fn from_counts(counts: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0);
        let mut acc = 0usize;
        for &c in counts {
            acc += c;
            offsets.push(acc);
        }
        Self { offsets }
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

impl TileSet for TileCounts {
    #[inline]
    fn num_tiles(&self) -> usize {
        self.offsets.len() - 1
    }
    #[inline]
    fn num_atoms(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }
    #[inline]
    fn atom_offset(&self, tile: usize) -> usize {
        self.offsets[tile]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TileSetError {
    #[error("tile offsets must start at 0")]
    BadOrigin,
    #[error("tile offsets decrease after tile {tile}")]
    Decreasing { tile: usize },
}

/// Rows as tiles, nonzeros as atoms.
pub fn csr_tile_set<T: Scalar>(m: &CsrMatrix<T>) -> OffsetTiles<'_> {
    OffsetTiles {
        offsets: m.row_offsets(),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RangeError {
    #[error("step must be at least 1")]
    ZeroStep,
    #[error("lane {lane} is not below lane count {lane_count}")]
    LaneOutOfRange { lane: usize, lane_count: usize },
}

/// `begin, begin + step, ...` strictly below `end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRange {
    next: usize,
    end: usize,
    step: usize,
}

pub fn step_range(begin: usize, end: usize, step: usize) -> Result<StepRange, RangeError> {
    if step == 0 {
        return Err(RangeError::ZeroStep);
    }
    Ok(StepRange {
        next: begin,
        end,
        step,
    })
}

impl Iterator for StepRange {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.next >= self.end {
            return None;
        }
        let cur = self.next;
        // Saturate so a step past usize::MAX still terminates.
        self.next = cur.saturating_add(self.step);
        Some(cur)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.end.saturating_sub(self.next).div_ceil(self.step);
        (n, Some(n))
    }
}

impl ExactSizeIterator for StepRange {}

/// Lane-strided walk over `[0, domain_end)`: `lane, lane + lane_count, ...`.
///
/// The CPU analogue of a grid-stride loop. The union over all lanes
/// partitions the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneStrideRange {
    inner: StepRange,
}

pub fn lane_stride_range(
    lane: usize,
    lane_count: usize,
    domain_end: usize,
) -> Result<LaneStrideRange, RangeError> {
    if lane >= lane_count {
        return Err(RangeError::LaneOutOfRange { lane, lane_count });
    }
    Ok(LaneStrideRange {
        inner: step_range(lane, domain_end, lane_count)?,
    })
}

impl Iterator for LaneStrideRange {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        self.inner.next()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

impl ExactSizeIterator for LaneStrideRange {}

/// `begin, begin + 1, ...` without bound; the consumer decides when to stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfiniteRange {
    next: usize,
}

pub fn infinite_range(begin: usize) -> InfiniteRange {
    InfiniteRange { next: begin }
}

impl Iterator for InfiniteRange {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        let cur = self.next;
        self.next = cur.checked_add(1).expect("infinite range exhausted usize");
        Some(cur)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (usize::MAX, None)
    }
}
