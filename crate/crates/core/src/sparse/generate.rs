//! Seeded synthetic matrices for tests and benchmarks.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CsrMatrix, SparseError};

fn sorted_columns(rng: &mut ChaCha8Rng, cols: usize, count: usize) -> Vec<usize> {
    let mut picked = index::sample(rng, cols, count).into_vec();
    picked.sort_unstable();
    picked
}

/// Uniformly random sparsity pattern with exactly `nnz_target` distinct
/// positions and values uniform in `[-1, 1]`. Deterministic per seed.
pub fn generate_random_csr(
    rows: usize,
    cols: usize,
    nnz_target: usize,
    seed: u64,
) -> Result<CsrMatrix<f64>, SparseError> {
    let capacity = rows.saturating_mul(cols);
    if nnz_target > capacity {
        return Err(SparseError::CapacityExceeded {
            requested: nnz_target,
            rows,
            cols,
            capacity,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = index::sample(&mut rng, capacity, nnz_target).into_vec();
    positions.sort_unstable();

    let mut row_offsets = vec![0usize; rows + 1];
    let mut col_indices = Vec::with_capacity(nnz_target);
    for &p in &positions {
        row_offsets[p / cols + 1] += 1;
        col_indices.push(p % cols);
    }
    for r in 0..rows {
        row_offsets[r + 1] += row_offsets[r];
    }
    let values = (0..nnz_target).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    CsrMatrix::from_parts(rows, cols, row_offsets, col_indices, values)
}

/// Square matrix whose row lengths follow a truncated Zipf law.
///
/// Raw lengths are drawn by inverse CDF from `P(k) ∝ k^-skew` on `[1, rows]`,
/// then scaled by `avg_degree / mean(raw)` with stochastic rounding so the
/// expected mean row length is `avg_degree`. Lengths are capped at `rows`.
pub fn generate_power_law_csr(
    rows: usize,
    avg_degree: f64,
    skew: f64,
    seed: u64,
) -> Result<CsrMatrix<f64>, SparseError> {
    if rows == 0 {
        return Err(SparseError::InvalidParameter("rows must be positive"));
    }
    if !(avg_degree > 0.0 && avg_degree.is_finite()) {
        return Err(SparseError::InvalidParameter("avg_degree must be positive"));
    }
    if !(skew > 0.0 && skew.is_finite()) {
        return Err(SparseError::InvalidParameter("skew must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut cdf = Vec::with_capacity(rows);
    let mut acc = 0.0;
    for k in 1..=rows {
        acc += (k as f64).powf(-skew);
        cdf.push(acc);
    }
    let raw: Vec<usize> = (0..rows)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            (cdf.partition_point(|&c| c < u) + 1).min(rows)
        })
        .collect();
    let raw_mean = raw.iter().sum::<usize>() as f64 / rows as f64;
    let scale = avg_degree / raw_mean;

    let mut row_offsets = Vec::with_capacity(rows + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::new();
    for &k in &raw {
        let target = k as f64 * scale;
        let mut len = target.floor() as usize;
        if rng.gen::<f64>() < target.fract() {
            len += 1;
        }
        let len = len.min(rows);
        col_indices.extend(sorted_columns(&mut rng, rows, len));
        row_offsets.push(col_indices.len());
    }
    let values = (0..col_indices.len())
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    CsrMatrix::from_parts(rows, rows, row_offsets, col_indices, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_over_mean(m: &CsrMatrix<f64>) -> f64 {
        let max = (0..m.rows()).map(|r| m.row_len(r)).max().unwrap_or(0);
        max as f64 / (m.nnz() as f64 / m.rows() as f64)
    }

    #[test]
    fn random_empty() {
        let m = generate_random_csr(4, 4, 0, 3).unwrap();
        assert_eq!(m.row_offsets(), &[0; 5]);
    }

    #[test]
    fn random_is_deterministic_and_exact() {
        let a = generate_random_csr(100, 100, 500, 7).unwrap();
        let b = generate_random_csr(100, 100, 500, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.nnz(), 500);
        a.validate().unwrap();
        assert!(a.values().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_ne!(a, generate_random_csr(100, 100, 500, 8).unwrap());
    }

    #[test]
    fn random_full_and_over_capacity() {
        assert_eq!(generate_random_csr(3, 4, 12, 1).unwrap().nnz(), 12);
        assert!(matches!(
            generate_random_csr(3, 4, 13, 1),
            Err(SparseError::CapacityExceeded { capacity: 12, .. })
        ));
    }

    #[test]
    fn power_law_row_length_ratios() {
        // Measured at seed 11: about 24.9 for the flat case, 14.9 for the steep
        // one. A heavy exponent shrinks the mean as fast as the maximum, so the
        // flat ratio is not smaller; it is bounded far below the row count.
        let flat = generate_power_law_csr(1000, 16.0, 3.0, 11).unwrap();
        let steep = generate_power_law_csr(10_000, 16.0, 1.1, 11).unwrap();
        flat.validate().unwrap();
        steep.validate().unwrap();
        assert!(max_over_mean(&flat) < 40.0, "{}", max_over_mean(&flat));
        assert!(max_over_mean(&steep) > 10.0, "{}", max_over_mean(&steep));
        let mean = steep.nnz() as f64 / steep.rows() as f64;
        assert!((mean - 16.0).abs() < 2.0, "mean {mean}");
    }

    #[test]
    fn power_law_boundaries() {
        assert!(generate_power_law_csr(10, 0.0, 1.0, 0).is_err());
        assert!(generate_power_law_csr(0, 1.0, 1.0, 0).is_err());
        assert!(generate_power_law_csr(10, 1.0, 0.0, 0).is_err());
        let one = generate_power_law_csr(1, 1.0, 1.0, 0).unwrap();
        assert_eq!((one.rows(), one.cols()), (1, 1));
        assert_eq!(
            generate_power_law_csr(50, 4.0, 1.5, 9).unwrap(),
            generate_power_law_csr(50, 4.0, 1.5, 9).unwrap()
        );
    }
}
