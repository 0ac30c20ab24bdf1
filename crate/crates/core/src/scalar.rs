//! Real-valued element types and their lock-free atomic cells.
//!
//! Reference paths run at `f64`; kernels can also be instantiated at `f32`
//! for benchmarking. Atomic cells store the IEEE bit pattern in an unsigned
//! atomic integer and implement read-modify-write ops with CAS loops.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

/// A real element type usable by the sparse kernels.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + Display
    + PartialOrd
    + Default
    + Add<Output = Self>
    + AddAssign
    + Mul<Output = Self>
    + Sum
    + 'static
{
    type Atomic: AtomicScalar<Self>;

    const ZERO: Self;
    const ONE: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

/// Shared cell holding a [`Scalar`].
pub trait AtomicScalar<T>: Send + Sync {
    fn new(v: T) -> Self;
    fn load(&self) -> T;
    fn store(&self, v: T);
    /// Adds `v` and returns the previous value.
    fn fetch_add(&self, v: T) -> T;
    fn into_inner(self) -> T;
}

macro_rules! atomic_float {
    ($name:ident, $float:ty, $bits:ty) => {
        #[derive(Debug, Default)]
        #[repr(transparent)]
        pub struct $name($bits);

        impl AtomicScalar<$float> for $name {
            fn new(v: $float) -> Self {
                Self(<$bits>::new(v.to_bits()))
            }

            #[inline]
            fn load(&self) -> $float {
                <$float>::from_bits(self.0.load(Ordering::Relaxed))
            }

            #[inline]
            fn store(&self, v: $float) {
                self.0.store(v.to_bits(), Ordering::Relaxed)
            }

            #[inline]
            fn fetch_add(&self, v: $float) -> $float {
                let mut cur = self.0.load(Ordering::Relaxed);
                loop {
                    let new = (<$float>::from_bits(cur) + v).to_bits();
                    match self.0.compare_exchange_weak(
                        cur,
                        new,
                        Ordering::AcqRel,
                        Ordering::Relaxed,
                    ) {
                        Ok(prev) => return <$float>::from_bits(prev),
                        Err(actual) => cur = actual,
                    }
                }
            }

            fn into_inner(self) -> $float {
                <$float>::from_bits(self.0.into_inner())
            }
        }
    };
}

atomic_float!(AtomicF32, f32, AtomicU32);
atomic_float!(AtomicF64, f64, AtomicU64);

impl AtomicF64 {
    /// Lowers the cell to `min(current, candidate)` and returns the previous
    /// value.
    ///
    /// Only valid while every value ever stored in the cell is a non-negative
    /// real or `+inf`: for those, the IEEE bit patterns order the same way as
    /// the values, so an integer `fetch_min` on the bits is a float min.
    #[inline]
    pub(crate) fn fetch_min_non_negative(&self, candidate: f64) -> f64 {
        debug_assert!(candidate >= 0.0 && candidate.is_sign_positive());
        f64::from_bits(self.0.fetch_min(candidate.to_bits(), Ordering::AcqRel))
    }
}

impl Scalar for f32 {
    type Atomic = AtomicF32;
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    type Atomic = AtomicF64;
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }
}

/// Allocates `len` zeroed atomic cells.
pub(crate) fn atomic_zeros<T: Scalar>(len: usize) -> Vec<T::Atomic> {
    (0..len).map(|_| T::Atomic::new(T::ZERO)).collect()
}

pub(crate) fn unwrap_atomics<T: Scalar>(cells: Vec<T::Atomic>) -> Vec<T> {
    cells.into_iter().map(AtomicScalar::into_inner).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fetch_add_returns_previous() {
        let c = AtomicF64::new(1.5);
        assert_eq!(c.fetch_add(2.0), 1.5);
        assert_eq!(c.load(), 3.5);
        let c = AtomicF32::new(1.0);
        c.fetch_add(0.25);
        assert_eq!(c.into_inner(), 1.25);
    }

    #[test]
    fn bit_min_matches_float_min_for_non_negative() {
        let vals = [0.0, 1e-300, 0.5, 1.0, 3.0, 1e300, f64::INFINITY];
        for &a in &vals {
            for &b in &vals {
                let c = AtomicF64::new(a);
                assert_eq!(c.fetch_min_non_negative(b), a);
                assert_eq!(c.load(), a.min(b));
            }
        }
    }
}
