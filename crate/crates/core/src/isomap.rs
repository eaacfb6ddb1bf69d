//! ISOMAP reduction of a multi-dimensional mirror to one dimension.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mds_mirror::{cmds, first_dimension};
use crate::spectral_embed::{DissimilarityKind, DissimilarityMatrix};

/// One-dimensional iso-mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoMirror {
    pub values: Vec<f64>,
    /// Neighbor count of the connecting k-NN graph; `None` when the input was
    /// already one-dimensional and no graph was built.
    pub k_used: Option<usize>,
}

/// Neighbor lists sorted by distance, ties to the lower index.
fn neighbor_order(dist: &Matrix) -> Vec<Vec<usize>> {
    let m = dist.rows();
    (0..m)
        .map(|i| {
            let mut order: Vec<usize> = (0..m).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
            order
        })
        .collect()
}

/// Union k-NN adjacency: `i ~ j` if either selects the other.
pub fn knn_union_graph(dist: &Matrix, k: usize) -> Vec<Vec<bool>> {
    union_from_order(&neighbor_order(dist), k)
}

fn union_from_order(order: &[Vec<usize>], k: usize) -> Vec<Vec<bool>> {
    let m = order.len();
    let mut adj = vec![vec![false; m]; m];
    for (i, nb) in order.iter().enumerate() {
        for &j in nb.iter().take(k) {
            adj[i][j] = true;
            adj[j][i] = true;
        }
    }
    adj
}

fn is_connected(adj: &[Vec<bool>]) -> bool {
    let m = adj.len();
    if m == 0 {
        return true;
    }
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for (v, &e) in adj[u].iter().enumerate() {
            if e && !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == m
}

/// Shortest-path distances on the smallest connecting union k-NN graph,
/// returned with that `k`.
pub fn geodesic_distances(points: &Matrix) -> Result<(Matrix, usize)> {
    let m = points.rows();
    if m < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 points, got {m}")));
    }
    let dist = DissimilarityMatrix::euclidean(points).values;
    let order = neighbor_order(&dist);
    let (k, adj) = (1..m)
        .map(|k| (k, union_from_order(&order, k)))
        .find(|(_, adj)| is_connected(adj))
        .expect("the complete graph is connected");
    let mut g = Matrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else if adj[i][j] {
            dist[(i, j)]
        } else {
            f64::INFINITY
        }
    });
    for via in 0..m {
        for i in 0..m {
            let gi = g[(i, via)];
            if gi.is_infinite() {
                continue;
            }
            for j in 0..m {
                let cand = gi + g[(via, j)];
                if cand < g[(i, j)] {
                    g[(i, j)] = cand;
                }
            }
        }
    }
    Ok((g, k))
}

/// Reduces `m` mirror points to one dimension by ISOMAP.
///
/// One-dimensional input skips the graph and returns the CMDS of the absolute
/// differences, which is the centered input up to sign.
pub fn iso_reduce(points: &Matrix) -> Result<IsoMirror> {
    let m = points.rows();
    if m < 3 {
        return Err(Error::InvalidInput(format!("iso_reduce needs at least 3 points, got {m}")));
    }
    if points.cols() == 1 {
        let me = cmds(&DissimilarityMatrix::euclidean(points), 1)?;
        return Ok(IsoMirror { values: first_dimension(&me), k_used: None });
    }
    let (g, k) = geodesic_distances(points)?;
    let me = cmds(&DissimilarityMatrix { values: g, kind: DissimilarityKind::Euclidean }, 1)?;
    Ok(IsoMirror { values: first_dimension(&me), k_used: Some(k) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn aligned(a: &[f64], b: &[f64]) -> f64 {
        let d = |s: f64| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - s * y).abs()));
        d(1.0).min(d(-1.0))
    }

    #[test]
    fn collinear_points() {
        let m = 10;
        // widening gaps, so every point's nearest neighbor is its predecessor
        let s: Vec<f64> = (0..m).map(|i| i as f64 + 0.05 * (i * i) as f64).collect();
        let pts = Matrix::from_fn(m, 2, |i, j| if j == 0 { 0.6 * s[i] } else { 0.8 * s[i] });
        let iso = iso_reduce(&pts).unwrap();
        assert_eq!(iso.k_used, Some(1));
        let mean = s.iter().sum::<f64>() / m as f64;
        let line: Vec<f64> = s.iter().map(|v| v - mean).collect();
        assert!(aligned(&iso.values, &line) < 1e-8);
    }

    #[test]
    fn quarter_circle_unrolls() {
        let m = 50;
        let theta = |i: usize| core::f64::consts::FRAC_PI_2 * i as f64 / (m - 1) as f64;
        let pts = Matrix::from_fn(m, 2, |i, j| if j == 0 { libm::cos(theta(i)) } else { libm::sin(theta(i)) });
        let iso = iso_reduce(&pts).unwrap();
        let arc = theta(1);
        for w in iso.values.windows(2) {
            let step = (w[1] - w[0]).abs();
            assert!((step - arc).abs() < 0.1 * arc, "{step} vs {arc}");
        }
    }

    #[test]
    fn one_dimensional_identity() {
        let x = [0.3, -1.0, 2.0, 0.1, 0.7];
        let iso = iso_reduce(&Matrix::column_vector(&x)).unwrap();
        assert_eq!(iso.k_used, None);
        let mean = x.iter().sum::<f64>() / 5.0;
        let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
        assert!(aligned(&iso.values, &centered) < 1e-8);
        assert!(iso.values.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn rejects_tiny_input_and_accepts_duplicates() {
        assert!(iso_reduce(&Matrix::zeros(2, 2)).is_err());
        let pts = Matrix::from_row_major(4, 2, vec![0., 0., 0., 0., 1., 1., 2., 2.]).unwrap();
        let iso = iso_reduce(&pts).unwrap();
        assert!((iso.values[0] - iso.values[1]).abs() < 1e-12);
    }

    #[test]
    fn geodesics_dominate_euclidean() {
        let mut r = crate::rng::stream(4, 0, 0, 0);
        let pts = Matrix::from_fn(30, 3, |_, _| crate::rng::uniform(&mut r));
        let (g, _) = geodesic_distances(&pts).unwrap();
        let e = DissimilarityMatrix::euclidean(&pts).values;
        for i in 0..30 {
            for j in 0..30 {
                assert!(g[(i, j)] >= e[(i, j)]);
                assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
    }

    #[test]
    fn rigid_motion_invariance() {
        let mut r = crate::rng::stream(5, 0, 0, 0);
        let pts = Matrix::from_fn(25, 3, |i, j| i as f64 * 0.1 + 0.05 * crate::rng::uniform(&mut r) * (j + 1) as f64);
        let q = linalg::polar_factor(&Matrix::from_fn(3, 3, |_, _| crate::rng::uniform(&mut r) - 0.5)).unwrap();
        let moved = pts.matmul(&q).unwrap();
        let moved = Matrix::from_fn(25, 3, |i, j| moved[(i, j)] + [1.0, -2.0, 0.5][j]);
        let a = iso_reduce(&pts).unwrap();
        let b = iso_reduce(&moved).unwrap();
        assert!(aligned(&a.values, &b.values) < 1e-8);
    }
}
