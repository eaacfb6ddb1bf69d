//! Adjacency spectral embedding and the estimated d_MV dissimilarity.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph_gen::{AdjacencyTimeSeries, BitMatrix};
use crate::linalg::{self, EigenMethod, Matrix, SymmetricOperator};

/// Scaled leading eigenvectors `U |S|^{1/2}` of an adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n x d`.
    pub coords: Matrix,
    /// The `d` largest-magnitude eigenvalues, in decreasing magnitude.
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.coords.rows()
    }

    pub fn d(&self) -> usize {
        self.coords.cols()
    }
}

/// ASE of a graph with the default eigensolver route.
pub fn ase(adjacency: &BitMatrix, d: usize) -> Result<Embedding> {
    if adjacency.count_ones() == 0 {
        check_dim(adjacency.n(), d)?;
        return Ok(Embedding { coords: Matrix::zeros(adjacency.n(), d), eigenvalues: alloc::vec![0.0; d] });
    }
    ase_with(adjacency, d, EigenMethod::Auto)
}

/// ASE of any symmetric operator, e.g. a probability matrix.
pub fn ase_with<O: SymmetricOperator + ?Sized>(op: &O, d: usize, method: EigenMethod) -> Result<Embedding> {
    let n = op.dim();
    check_dim(n, d)?;
    let eig = linalg::top_eigenpairs(op, d, method)?;
    let mut coords = eig.vectors;
    for (k, lambda) in eig.values.iter().enumerate() {
        let s = libm::sqrt(lambda.abs());
        for i in 0..n {
            coords[(i, k)] *= s;
        }
    }
    Ok(Embedding { coords, eigenvalues: eig.values })
}

fn check_dim(n: usize, d: usize) -> Result<()> {
    if d == 0 || d > n {
        return Err(Error::InvalidInput(format!("embedding dimension {d} must lie in 1..={n}")));
    }
    Ok(())
}

/// Elbow of a decreasing scree by profile likelihood.
///
/// Splits the values into a leading group of size `q` and the rest, models
/// both as normal with their own means and a pooled variance, and returns the
/// `q` with the largest likelihood. Ties go to the smaller `q`.
pub fn profile_likelihood_elbow(scree: &[f64]) -> usize {
    let p = scree.len();
    if p <= 2 {
        return 1;
    }
    let scale = scree.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-12 * scale * scale).max(1e-300);
    let mut best = 1;
    let mut best_ll = f64::NEG_INFINITY;
    for q in 1..p {
        let (a, b) = scree.split_at(q);
        let ss = sum_sq_dev(a) + sum_sq_dev(b);
        let var = (ss / (p - 2) as f64).max(floor);
        let ll = -0.5 * p as f64 * libm::log(var) - ss / (2.0 * var);
        if q == 1 || ll > best_ll + 1e-12 * best_ll.abs() {
            best_ll = ll;
            best = q;
        }
    }
    best
}

fn sum_sq_dev(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// Embedding dimension from the elbow of the top `max_d` eigenvalue magnitudes.
pub fn select_dimension<O: SymmetricOperator + ?Sized>(adjacency: &O, max_d: usize) -> Result<usize> {
    let n = adjacency.dim();
    if max_d <= 1 || n == 0 {
        return Ok(1);
    }
    let max_d = max_d.min(n);
    let eig = linalg::top_eigenpairs(adjacency, max_d, EigenMethod::Auto)?;
    let scree: Vec<f64> = eig.values.iter().map(|v| v.abs()).collect();
    Ok(profile_likelihood_elbow(&scree))
}

/// Where a dissimilarity matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissimilarityKind {
    TrueDmv,
    EstimatedDmv,
    Euclidean,
}

impl DissimilarityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TrueDmv => "true_dmv",
            Self::EstimatedDmv => "estimated_dmv",
            Self::Euclidean => "euclidean",
        }
    }
}

/// How the orthogonal alignment inside the estimated d_MV was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProcrustesMode {
    /// Frobenius-optimal polar factor, scored in the spectral norm.
    #[default]
    Frobenius,
    /// Frobenius start followed by Givens coordinate descent on the spectral norm.
    GivensRefined,
}

/// Alignment provenance recorded with a dissimilarity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    /// Exact (closed form, or sign enumeration in one dimension).
    Exact,
    /// Computed with a [`ProcrustesMode`] surrogate for the spectral minimum.
    Surrogate(ProcrustesMode),
}

/// Symmetric, nonnegative, hollow `m x m` matrix of pairwise dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    pub values: Matrix,
    pub kind: DissimilarityKind,
}

impl DissimilarityMatrix {
    /// Validates symmetry, nonnegativity, finiteness and the zero diagonal.
    pub fn new(values: Matrix, kind: DissimilarityKind) -> Result<Self> {
        let m = values.rows();
        if values.cols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: values.cols() });
        }
        let scale = values.max_abs().max(1.0);
        for i in 0..m {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..m {
                let v = values[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!("entry ({i}, {j}) = {v}")));
                }
                if (v - values[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { values, kind })
    }

    /// Pairwise Euclidean distances between the rows of `points`.
    pub fn euclidean(points: &Matrix) -> Self {
        let m = points.rows();
        let mut values = Matrix::zeros(m, m);
        for i in 0..m {
            for j in (i + 1)..m {
                let d: f64 = points.row(i).iter().zip(points.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                let d = libm::sqrt(d);
                values[(i, j)] = d;
                values[(j, i)] = d;
            }
        }
        Self { values, kind: DissimilarityKind::Euclidean }
    }

    pub fn m(&self) -> usize {
        self.values.rows()
    }
}

/// Estimated dissimilarity matrix together with its alignment provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedDissimilarity {
    pub matrix: DissimilarityMatrix,
    pub alignment: Alignment,
    pub embeddings: Vec<Embedding>,
}

/// Estimated d_MV with the default Frobenius alignment.
pub fn estimated_dmv(e1: &Embedding, e2: &Embedding) -> Result<f64> {
    estimated_dmv_with(e1, e2, ProcrustesMode::Frobenius)
}

/// `min_W ‖X_t − X_s W‖₂ / √n` over orthogonal `W`.
///
/// In one dimension `W = ±1` is enumerated exactly. Otherwise `W` comes from
/// `mode`, and the spectral norm is evaluated at it.
pub fn estimated_dmv_with(e1: &Embedding, e2: &Embedding, mode: ProcrustesMode) -> Result<f64> {
    let (xt, xs) = (&e1.coords, &e2.coords);
    if xt.rows() != xs.rows() {
        return Err(Error::DimensionMismatch { expected: xt.rows(), found: xs.rows() });
    }
    if xt.cols() != xs.cols() {
        return Err(Error::DimensionMismatch { expected: xt.cols(), found: xs.cols() });
    }
    let n = xt.rows();
    if n == 0 {
        return Ok(0.0);
    }
    let root_n = libm::sqrt(n as f64);
    if xt.cols() == 1 {
        let (mut minus, mut plus) = (0.0, 0.0);
        for (a, b) in xt.as_slice().iter().zip(xs.as_slice()) {
            minus += (a - b) * (a - b);
            plus += (a + b) * (a + b);
        }
        return Ok(libm::sqrt(minus.min(plus)) / root_n);
    }
    let mut w = linalg::polar_factor(&xs.tr_matmul(xt)?)?;
    if mode == ProcrustesMode::GivensRefined {
        w = givens_refine(xt, xs, w)?;
    }
    let residual = xt.sub(&xs.matmul(&w)?)?;
    Ok(residual.spectral_norm() / root_n)
}

// Coordinate descent over plane rotations `W <- W G(a, b, θ)` on the spectral
// norm, evaluated through the d x d Gram form of the residual.
fn givens_refine(xt: &Matrix, xs: &Matrix, w0: Matrix) -> Result<Matrix> {
    let d = xt.cols();
    let a = xt.tr_matmul(xt)?;
    let p = xs.tr_matmul(xt)?;
    let s = xs.tr_matmul(xs)?;
    let objective = |w: &Matrix| -> f64 {
        let pw = p.transpose().matmul(w).unwrap_or_else(|_| Matrix::zeros(d, d));
        let sw = s.matmul(w).unwrap_or_else(|_| Matrix::zeros(d, d));
        let wsw = w.tr_matmul(&sw).unwrap_or_else(|_| Matrix::zeros(d, d));
        let g = Matrix::from_fn(d, d, |i, j| a[(i, j)] - pw[(i, j)] - pw[(j, i)] + wsw[(i, j)]);
        match linalg::symmetric_eigen(&g) {
            Ok(e) => e.values.last().copied().unwrap_or(0.0).max(0.0),
            Err(_) => f64::INFINITY,
        }
    };
    let rotate = |w: &Matrix, i: usize, j: usize, theta: f64| -> Matrix {
        let (sn, cs) = (libm::sin(theta), libm::cos(theta));
        let mut out = w.clone();
        for r in 0..d {
            let (wi, wj) = (w[(r, i)], w[(r, j)]);
            out[(r, i)] = cs * wi - sn * wj;
            out[(r, j)] = sn * wi + cs * wj;
        }
        out
    };
    let mut w = w0;
    let mut best = objective(&w);
    for _sweep in 0..50 {
        let start = best;
        for i in 0..d {
            for j in (i + 1)..d {
                let f = |theta: f64| objective(&rotate(&w, i, j, theta));
                let (theta, value) = minimize_angle(f);
                if value < best {
                    best = value;
                    w = rotate(&w, i, j, theta);
                }
            }
        }
        if start - best <= 1e-14 * start.max(1e-300) {
            break;
        }
    }
    Ok(w)
}

// Grid search over [-π, π) followed by golden-section refinement.
fn minimize_angle(f: impl Fn(f64) -> f64) -> (f64, f64) {
    const GRID: usize = 72;
    let pi = core::f64::consts::PI;
    let step = 2.0 * pi / GRID as f64;
    let mut bt = 0.0;
    let mut bv = f(0.0);
    for k in 0..GRID {
        let t = -pi + k as f64 * step;
        let v = f(t);
        if v < bv {
            bt = t;
            bv = v;
        }
    }
    let golden = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut lo, mut hi) = (bt - step, bt + step);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = f(x2);
        }
    }
    let (t, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if v < bv {
        (t, v)
    } else {
        (bt, bv)
    }
}

/// Estimated d_MV matrix from precomputed embeddings.
pub fn dissimilarity_from_embeddings(embeddings: &[Embedding], mode: ProcrustesMode) -> Result<DissimilarityMatrix> {
    let m = embeddings.len();
    let mut values = Matrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = estimated_dmv_with(&embeddings[i], &embeddings[j], mode)?;
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    Ok(DissimilarityMatrix { values, kind: DissimilarityKind::EstimatedDmv })
}

/// ASE of every graph, then the estimated d_MV of every pair.
pub fn estimated_dissimilarity_matrix(tsg: &AdjacencyTimeSeries, d: usize) -> Result<DissimilarityMatrix> {
    Ok(estimate_dissimilarity(tsg, d, ProcrustesMode::Frobenius)?.matrix)
}

/// As [`estimated_dissimilarity_matrix`], keeping embeddings and provenance.
pub fn estimate_dissimilarity(
    tsg: &AdjacencyTimeSeries,
    d: usize,
    mode: ProcrustesMode,
) -> Result<EstimatedDissimilarity> {
    if d == 0 {
        return Err(Error::InvalidInput("embedding dimension must be at least 1".into()));
    }
    let embeddings = tsg.graphs.iter().map(|g| ase(g, d)).collect::<Result<Vec<_>>>()?;
    let matrix = dissimilarity_from_embeddings(&embeddings, mode)?;
    let alignment = if d == 1 { Alignment::Exact } else { Alignment::Surrogate(mode) };
    Ok(EstimatedDissimilarity { matrix, alignment, embeddings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_gen::sample_tsg;
    use crate::lpp_sim::{simulate_walk, LatentTrajectorySet, WalkConfig};
    use alloc::vec;

    fn rotation(d: usize, seed: u64) -> Matrix {
        let mut r = crate::rng::stream(seed, 0, 0, 0);
        let g = Matrix::from_fn(d, d, |_, _| crate::rng::uniform(&mut r) - 0.5);
        linalg::polar_factor(&g).unwrap()
    }

    fn point_cloud(n: usize, d: usize, seed: u64) -> Matrix {
        let mut r = crate::rng::stream(seed, 1, 0, 0);
        Matrix::from_fn(n, d, |_, _| crate::rng::uniform(&mut r))
    }

    #[test]
    fn rank_one_probability_recovers_latents() {
        let x: Vec<f64> = (0..80).map(|i| 0.2 + 0.005 * i as f64).collect();
        let p = Matrix::from_fn(80, 80, |i, j| x[i] * x[j]);
        let e = ase_with(&p, 1, EigenMethod::Auto).unwrap();
        for i in 0..80 {
            assert!((e.coords[(i, 0)] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_graph_gives_zero_coords() {
        let e = ase(&BitMatrix::new(30), 3).unwrap();
        assert_eq!(e.coords.max_abs(), 0.0);
        assert!(ase(&BitMatrix::new(3), 4).is_err());
    }

    #[test]
    fn constant_latent_ase() {
        let n = 1000;
        let l = LatentTrajectorySet::new(vec![1.0], Matrix::from_fn(n, 1, |_, _| 0.5)).unwrap();
        let g = &sample_tsg(&l, 4).unwrap().graphs[0];
        let e = ase(g, 1).unwrap();
        let mean = e.coords.as_slice().iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.05, "{mean}");
        // orthonormal eigenvector, column norm sqrt(|λ|)
        let col = e.coords.column(0);
        assert!((linalg::norm(&col) - libm::sqrt(e.eigenvalues[0].abs())).abs() < 1e-8);
    }

    #[test]
    fn dimension_selection() {
        let x: Vec<f64> = (0..60).map(|i| 0.3 + 0.01 * i as f64).collect();
        let p = Matrix::from_fn(60, 60, |i, j| x[i] * x[j]);
        assert_eq!(select_dimension(&p, 8).unwrap(), 1);
        // three-block SBM probability matrix with balanced blocks
        let block = |i: usize| i / 20;
        let b = [[0.8, 0.1, 0.15], [0.1, 0.7, 0.1], [0.15, 0.1, 0.75]];
        let p3 = Matrix::from_fn(60, 60, |i, j| b[block(i)][block(j)]);
        assert_eq!(select_dimension(&p3, 10).unwrap(), 3);
        assert_eq!(profile_likelihood_elbow(&[2.0; 6]), 1);
        assert_eq!(select_dimension(&p3, 1).unwrap(), 1);
    }

    #[test]
    fn dmv_identities() {
        let x = point_cloud(50, 1, 1);
        let e = Embedding { coords: x.clone(), eigenvalues: vec![1.0] };
        let neg = Embedding { coords: x.scale(-1.0), eigenvalues: vec![1.0] };
        assert_eq!(estimated_dmv(&e, &e).unwrap(), 0.0);
        assert_eq!(estimated_dmv(&e, &neg).unwrap(), 0.0);
        let other = Embedding { coords: point_cloud(40, 1, 2), eigenvalues: vec![1.0] };
        assert!(estimated_dmv(&e, &other).is_err());
    }

    #[test]
    fn dmv_rotation_invariance() {
        for d in 1..=3 {
            for seed in 0..5 {
                let x = point_cloud(60, d, seed);
                let q = rotation(d, seed + 10);
                let e1 = Embedding { coords: x.clone(), eigenvalues: vec![1.0; d] };
                let e2 = Embedding { coords: x.matmul(&q).unwrap(), eigenvalues: vec![1.0; d] };
                assert!(estimated_dmv(&e1, &e2).unwrap() < 1e-8);
                assert!(estimated_dmv(&e2, &e1).unwrap() < 1e-8);
            }
        }
    }

    #[test]
    fn dmv_symmetry_and_refinement() {
        let a = Embedding { coords: point_cloud(40, 2, 3), eigenvalues: vec![1.0; 2] };
        let b = Embedding { coords: point_cloud(40, 2, 4), eigenvalues: vec![1.0; 2] };
        let ab = estimated_dmv(&a, &b).unwrap();
        let ba = estimated_dmv(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-10);
        let refined = estimated_dmv_with(&a, &b, ProcrustesMode::GivensRefined).unwrap();
        assert!(refined <= ab + 1e-12);
        // brute force over both reflection classes
        let mut best = f64::INFINITY;
        for k in 0..20_000 {
            let t = k as f64 / 20_000.0 * 2.0 * core::f64::consts::PI;
            let (s, c) = (libm::sin(t), libm::cos(t));
            for w in [[c, -s, s, c], [c, s, s, -c]] {
                let w = Matrix::from_row_major(2, 2, w.to_vec()).unwrap();
                let r = a.coords.sub(&b.coords.matmul(&w).unwrap()).unwrap();
                best = best.min(r.spectral_norm() / libm::sqrt(40.0));
            }
        }
        assert!(refined <= best + 1e-6, "{refined} vs {best}");
    }

    #[test]
    fn identical_graphs_give_zero_matrix() {
        let l = simulate_walk(&WalkConfig::infill(1, 0.5, 0.5, 0.5, 3), 80).unwrap();
        let g = sample_tsg(&l, 1).unwrap().graphs.remove(0);
        let tsg = AdjacencyTimeSeries::new(vec![0.25, 0.5, 0.75], vec![g.clone(), g.clone(), g]).unwrap();
        for d in [1, 2] {
            let dm = estimated_dissimilarity_matrix(&tsg, d).unwrap();
            assert!(dm.values.max_abs() < 1e-12);
        }
    }

    #[test]
    fn matrix_is_valid() {
        let cfg = WalkConfig::scaled(5, 0.4, 0.2, 0.5, 0.1, 1);
        let tsg = sample_tsg(&simulate_walk(&cfg, 100).unwrap(), 2).unwrap();
        let est = estimate_dissimilarity(&tsg, 2, ProcrustesMode::Frobenius).unwrap();
        assert_eq!(est.alignment, Alignment::Surrogate(ProcrustesMode::Frobenius));
        DissimilarityMatrix::new(est.matrix.values.clone(), est.matrix.kind).unwrap();
        let two = tsg.window(0, 1).unwrap();
        let d2 = estimated_dissimilarity_matrix(&two, 1).unwrap();
        assert_eq!(d2.values[(0, 1)], d2.values[(1, 0)]);
    }
}
