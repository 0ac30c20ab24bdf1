//! Serial reference implementations used to validate kernel output.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::kernels::UNREACHED;
use crate::scalar::Scalar;
use crate::sparse::{CsrMatrix, DenseMatrix, Graph};

/// Row-by-row `A x`. Also returns `sum |a_ij x_j|` per row, a scale for
/// rounding-error tolerances.
pub fn spmv<T: Scalar>(m: &CsrMatrix<T>, x: &[T]) -> (Vec<f64>, Vec<f64>) {
    let mut y = Vec::with_capacity(m.rows());
    let mut scale = Vec::with_capacity(m.rows());
    for row in 0..m.rows() {
        let (mut s, mut a) = (0.0f64, 0.0f64);
        for nz in m.row_range(row) {
            let p = m.values()[nz].to_f64() * x[m.col_indices()[nz]].to_f64();
            s += p;
            a += p.abs();
        }
        y.push(s);
        scale.push(a);
    }
    (y, scale)
}

pub fn spmm<T: Scalar>(m: &CsrMatrix<T>, b: &DenseMatrix<T>) -> (Vec<f64>, Vec<f64>) {
    let mut c = vec![0.0; m.rows() * b.cols()];
    let mut scale = vec![0.0; m.rows() * b.cols()];
    for row in 0..m.rows() {
        for nz in m.row_range(row) {
            let (v, k) = (m.values()[nz].to_f64(), m.col_indices()[nz]);
            for col in 0..b.cols() {
                let p = v * b.get(k, col).to_f64();
                c[row * b.cols() + col] += p;
                scale[row * b.cols() + col] += p.abs();
            }
        }
    }
    (c, scale)
}

/// Binary-heap Dijkstra; unreachable vertices get `+inf`.
pub fn dijkstra(g: &Graph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    // Non-negative f64 bit patterns order like the values.
    heap.push(Reverse((0.0f64.to_bits(), source)));
    while let Some(Reverse((bits, u))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[u] {
            continue;
        }
        for e in g.adjacency().row_range(u) {
            let v = g.neighbor(e);
            let nd = d + g.weight(e);
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd.to_bits(), v)));
            }
        }
    }
    dist
}

/// Queue-based BFS depths; unreachable vertices get [`UNREACHED`].
pub fn bfs(g: &Graph, source: usize) -> Vec<usize> {
    let mut depth = vec![UNREACHED; g.vertex_count()];
    let mut queue = VecDeque::from([source]);
    depth[source] = 0;
    while let Some(u) = queue.pop_front() {
        for e in g.adjacency().row_range(u) {
            let v = g.neighbor(e);
            if depth[v] == UNREACHED {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    depth
}
