//! Bit-packed adjacency matrices and conditionally independent RDPG sampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SymmetricOperator};
use crate::lpp_sim::LatentTrajectorySet;
use crate::rng;

/// Probabilities this far outside `[0, 1]` are clamped, beyond it rejected.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Square binary matrix with rows packed into `u64` words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl core::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BitMatrix").field("n", &self.n).field("ones", &self.count_ones()).finish()
    }
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self { n, words, bits: vec![0; n * words] }
    }

    /// Complete graph without self-loops.
    pub fn complete(n: usize) -> Self {
        let mut a = Self::new(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    a.set(i, j, true);
                }
            }
        }
        a
    }

    /// Builds a matrix from `(u, v)` pairs; undirected input sets both entries.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], directed: bool) -> Result<Self> {
        let mut a = Self::new(n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::OutOfRange { index: u.max(v), len: n });
            }
            a.set(u, v, true);
            if !directed {
                a.set(v, u, true);
            }
        }
        Ok(a)
    }

    /// Thresholds a dense matrix at 0.5.
    pub fn from_dense(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
        }
        let mut a = Self::new(m.rows());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] > 0.5 {
                    a.set(i, j, true);
                }
            }
        }
        Ok(a)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let w = &mut self.bits[i * self.words + j / 64];
        let mask = 1u64 << (j % 64);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Column indices of the ones in row `i`, ascending.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row_words(i).iter().enumerate().flat_map(|(w, &word)| BitIter { word, base: w * 64 })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of ones, `1ᵀ A 1`.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.neighbors(i).all(|j| self.get(j, i)))
    }

    pub fn has_zero_diagonal(&self) -> bool {
        (0..self.n).all(|i| !self.get(i, i))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::new(self.n);
        for i in 0..self.n {
            for j in self.neighbors(i) {
                t.set(j, i, true);
            }
        }
        t
    }

    /// `A OR Aᵀ`.
    pub fn symmetrized(&self) -> Self {
        let mut s = self.transpose();
        for (d, w) in s.bits.iter_mut().zip(&self.bits) {
            *d |= w;
        }
        s
    }

    /// Number of positions where both matrices are one, `1ᵀ (A ∘ B) 1`.
    pub fn and_count(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Number of positions where the matrices differ.
    pub fn xor_count(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }

    /// Submatrix on `vertices`, relabelled `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Self {
        let mut s = Self::new(vertices.len());
        for (a, &u) in vertices.iter().enumerate() {
            for (b, &v) in vertices.iter().enumerate() {
                if self.get(u, v) {
                    s.set(a, b, true);
                }
            }
        }
        s
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| if self.get(i, j) { 1.0 } else { 0.0 })
    }

    /// Pairs `(u, v)` with `A[u][v] = 1`; for undirected output only `u < v`.
    pub fn edges(&self, directed: bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in self.neighbors(u) {
                if directed || u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

struct BitIter {
    word: u64,
    base: usize,
}

impl Iterator for BitIter {
    type Item = usize;
    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let tz = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(self.base + tz)
    }
}

impl SymmetricOperator for BitMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.neighbors(i).map(|j| x[j]).sum();
        }
    }

    fn to_dense(&self) -> Matrix {
        BitMatrix::to_dense(self)
    }
}

/// `m` binary graphs on a common vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyTimeSeries {
    pub n: usize,
    pub times: Vec<f64>,
    pub graphs: Vec<BitMatrix>,
}

impl AdjacencyTimeSeries {
    pub fn new(times: Vec<f64>, graphs: Vec<BitMatrix>) -> Result<Self> {
        if times.len() != graphs.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: graphs.len() });
        }
        let n = graphs.first().map_or(0, BitMatrix::n);
        if let Some(g) = graphs.iter().find(|g| g.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: g.n() });
        }
        Ok(Self { n, times, graphs })
    }

    pub fn m(&self) -> usize {
        self.graphs.len()
    }

    /// Keeps time indices `start..=end`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.m() {
            return Err(Error::OutOfRange { index: end, len: self.m() });
        }
        Self::new(self.times[start..=end].to_vec(), self.graphs[start..=end].to_vec())
    }
}

#[inline]
fn checked_probability(value: f64, row: usize, col: usize) -> Result<f64> {
    if !(-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { row, col, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Samples one undirected hollow RDPG per time from the latent positions.
///
/// The upper triangle of row `a` at time `t` is drawn from the stream keyed by
/// `(seed, t, a)`.
pub fn sample_tsg(latents: &LatentTrajectorySet, seed: u64) -> Result<AdjacencyTimeSeries> {
    let n = latents.n;
    if n < 2 {
        return Err(Error::InvalidInput("sample_tsg needs n >= 2".into()));
    }
    let m = latents.m();
    let mut graphs = Vec::with_capacity(m);
    for t in 0..m {
        let x = latents.positions.column(t);
        let mut g = BitMatrix::new(n);
        for a in 0..n {
            let mut r = rng::stream(seed, rng::TAG_EDGES, t as u64, a as u64);
            let xa = x[a];
            for (b, xb) in x.iter().enumerate().skip(a + 1) {
                let p = xa * xb;
                let p = if (0.0..=1.0).contains(&p) { p } else { checked_probability(p, a, b)? };
                if rng::uniform(&mut r) < p {
                    g.set(a, b, true);
                    g.set(b, a, true);
                }
            }
        }
        graphs.push(g);
    }
    AdjacencyTimeSeries::new(latents.times.clone(), graphs)
}

/// `X_t X_tᵀ` with the diagonal zeroed.
pub fn connection_probability_matrix(latents: &LatentTrajectorySet, time_index: usize) -> Result<Matrix> {
    let x = latents.at_time(time_index)?;
    let n = x.len();
    Ok(Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { x[i] * x[j] }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpp_sim::{simulate_walk, WalkConfig};

    fn constant_latents(n: usize, m: usize, value: f64) -> LatentTrajectorySet {
        let times = (1..=m).map(|i| i as f64 / m as f64).collect();
        LatentTrajectorySet::new(times, Matrix::from_fn(n, m, |_, _| value)).unwrap()
    }

    #[test]
    fn bit_ops() {
        let mut a = BitMatrix::new(130);
        a.set(0, 129, true);
        a.set(129, 0, true);
        a.set(5, 64, true);
        assert!(a.get(0, 129) && a.get(5, 64) && !a.get(64, 5));
        assert_eq!(a.neighbors(0).collect::<Vec<_>>(), [129]);
        assert_eq!(a.count_ones(), 3);
        assert!(!a.is_symmetric());
        assert!(a.symmetrized().is_symmetric());
        assert_eq!(a.transpose().transpose(), a);
        let s = a.induced(&[129, 0]);
        assert!(s.get(0, 1) && s.get(1, 0));
        a.set(5, 64, false);
        assert!(a.is_symmetric());
    }

    #[test]
    fn operator_matches_dense() {
        let l = simulate_walk(&WalkConfig::infill(3, 0.5, 0.5, 0.5, 4), 70).unwrap();
        let g = &sample_tsg(&l, 2).unwrap().graphs[2];
        let x: Vec<f64> = (0..70).map(|i| i as f64 * 0.1 - 2.0).collect();
        let mut y = vec![0.0; 70];
        g.apply(&x, &mut y);
        let mut z = vec![0.0; 70];
        g.to_dense().apply(&x, &mut z);
        assert_eq!(y, z);
    }

    #[test]
    fn extreme_latents() {
        let tsg = sample_tsg(&constant_latents(20, 3, 0.0), 1).unwrap();
        assert!(tsg.graphs.iter().all(|g| g.count_ones() == 0));
        let tsg = sample_tsg(&constant_latents(20, 3, 1.0), 1).unwrap();
        assert!(tsg.graphs.iter().all(|g| *g == BitMatrix::complete(20)));
    }

    #[test]
    fn invalid_probability_rejected_and_noise_clamped() {
        let l = constant_latents(3, 1, 1.2);
        assert!(matches!(sample_tsg(&l, 0), Err(Error::ProbabilityOutOfRange { .. })));
        let l = constant_latents(3, 1, 1.0 + 1e-14);
        let g = sample_tsg(&l, 0).unwrap();
        assert_eq!(g.graphs[0], BitMatrix::complete(3));
    }

    #[test]
    fn edge_density_half_latents() {
        let n = 2000;
        let tsg = sample_tsg(&constant_latents(n, 1, 0.5), 5).unwrap();
        let g = &tsg.graphs[0];
        assert!(g.is_symmetric() && g.has_zero_diagonal());
        let pairs = (n * (n - 1) / 2) as f64;
        let density = g.count_ones() as f64 / 2.0 / pairs;
        let se = libm::sqrt(0.25 * 0.75 / pairs);
        assert!((density - 0.25).abs() < 3.0 * se, "{density}");
    }

    #[test]
    fn deterministic_given_seed() {
        let l = simulate_walk(&WalkConfig::infill(4, 0.5, 0.3, 0.5, 8), 40).unwrap();
        assert_eq!(sample_tsg(&l, 3).unwrap(), sample_tsg(&l, 3).unwrap());
        assert_ne!(sample_tsg(&l, 3).unwrap(), sample_tsg(&l, 4).unwrap());
    }

    #[test]
    fn probability_matrix() {
        let l = simulate_walk(&WalkConfig::infill(5, 0.5, 0.5, 0.5, 2), 30).unwrap();
        let p = connection_probability_matrix(&l, 4).unwrap();
        let x = l.at_time(4).unwrap();
        for i in 0..30 {
            assert_eq!(p[(i, i)], 0.0);
            for j in 0..30 {
                assert!(p[(i, j)] <= 1.0);
                if i != j {
                    assert_eq!(p[(i, j)], x[i] * x[j]);
                }
            }
        }
        assert!(connection_probability_matrix(&l, 5).is_err());
        let z = connection_probability_matrix(&constant_latents(4, 1, 0.0), 0).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn window_selects_inclusive_range() {
        let l = simulate_walk(&WalkConfig::infill(6, 0.5, 0.5, 0.5, 2), 10).unwrap();
        let tsg = sample_tsg(&l, 1).unwrap();
        let w = tsg.window(1, 3).unwrap();
        assert_eq!(w.m(), 3);
        assert_eq!(w.graphs[0], tsg.graphs[1]);
        assert!(tsg.window(3, 6).is_err());
    }
}
