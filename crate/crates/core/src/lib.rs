//! Load balancing for sparse, irregular, fine-grained parallel work.
//!
//! Work is described as atoms (equal-cost units) grouped into tiles, and a
//! tile set is any source that can report atom offsets per tile
//! ([`work::TileSet`]). Schedules ([`schedule`]) map virtual lanes to tiles
//! and atoms without looking at the computation; the [`executor`] runs a
//! schedule on worker threads and the [`kernels`] consume the resulting
//! ranges.
//!
//! ```
//! use tilesched::executor::ExecutorConfig;
//! use tilesched::kernels::spmv;
//! use tilesched::schedule::ScheduleKind;
//! use tilesched::sparse::{CsrMatrix, DenseVector};
//!
//! let a = CsrMatrix::from_parts(2, 2, vec![0, 2, 3], vec![0, 1, 1], vec![1.0, 2.0, 3.0]).unwrap();
//! let x = DenseVector::from(vec![1.0, 1.0]);
//! let cfg = ExecutorConfig::new(ScheduleKind::MergePath, 2);
//! assert_eq!(spmv(&a, &x, &cfg).unwrap().as_slice(), &[3.0, 3.0]);
//! ```

pub mod executor;
pub mod kernels;
pub mod reference;
pub mod scalar;
pub mod schedule;
pub mod sparse;
pub mod work;
