//! Classical multidimensional scaling and realizability diagnostics.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::spectral_embed::DissimilarityMatrix;

/// CMDS coordinates together with the full spectrum of `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorEmbedding {
    /// `m x kept`; row `k` is the mirror at the `k`-th time.
    pub coords: Matrix,
    /// All `m` eigenvalues of `B`, decreasing.
    pub spectrum: Vec<f64>,
    pub kept: usize,
}

/// `B = -1/2 P D^(2) P` with `P = I - 11ᵀ/m`.
pub fn double_centered(dmat: &DissimilarityMatrix) -> Matrix {
    let d = &dmat.values;
    let m = d.rows();
    let sq = Matrix::from_fn(m, m, |i, j| d[(i, j)] * d[(i, j)]);
    let row_means: Vec<f64> = (0..m).map(|i| linalg::pairwise_sum(sq.row(i)) / m as f64).collect();
    let grand = linalg::pairwise_sum(&row_means) / m as f64;
    Matrix::from_fn(m, m, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand))
}

/// Classical MDS keeping `c` dimensions; negative kept eigenvalues contribute
/// zero columns.
pub fn cmds(dmat: &DissimilarityMatrix, c: usize) -> Result<MirrorEmbedding> {
    let m = dmat.m();
    if m < 2 {
        return Err(Error::InvalidInput(format!("cmds needs at least 2 points, got {m}")));
    }
    if c == 0 || c >= m {
        return Err(Error::InvalidInput(format!("cmds dimension {c} must lie in 1..={}", m - 1)));
    }
    let b = double_centered(dmat);
    let eig = linalg::symmetric_eigen(&b)?.sorted_descending().oriented();
    let mut coords = Matrix::zeros(m, c);
    for k in 0..c {
        let s = libm::sqrt(eig.values[k].max(0.0));
        for i in 0..m {
            coords[(i, k)] = eig.vectors[(i, k)] * s;
        }
    }
    Ok(MirrorEmbedding { coords, spectrum: eig.values, kept: c })
}

/// The first mirror coordinate at every time.
pub fn first_dimension(me: &MirrorEmbedding) -> Vec<f64> {
    me.coords.column(0)
}

/// Eigenvalue diagnostics of the doubly centered matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizabilityReport {
    /// Eigenvalues above `1e-8 * max(1, λ₁)`.
    pub positive_count: usize,
    pub most_negative: f64,
    pub lambda1: f64,
    pub lambda1_over_m: f64,
    /// `Σ_{i≥2} λ_i² / λ₁`.
    pub tail_ratio: f64,
    pub spectrum: Vec<f64>,
}

pub fn realizability_report(dmat: &DissimilarityMatrix) -> Result<RealizabilityReport> {
    let m = dmat.m();
    let spectrum = if m == 0 {
        Vec::new()
    } else {
        linalg::symmetric_eigen(&double_centered(dmat))?.sorted_descending().values
    };
    let lambda1 = spectrum.first().copied().unwrap_or(0.0);
    let tol = 1e-8 * lambda1.max(1.0);
    let positive_count = spectrum.iter().filter(|v| **v > tol).count();
    let most_negative = spectrum.last().copied().unwrap_or(0.0).min(0.0);
    let tail: f64 = spectrum.iter().skip(1).map(|v| v * v).sum();
    let tail_ratio = if lambda1 > 0.0 { tail / lambda1 } else { 0.0 };
    Ok(RealizabilityReport {
        positive_count,
        most_negative,
        lambda1,
        lambda1_over_m: if m > 0 { lambda1 / m as f64 } else { 0.0 },
        tail_ratio,
        spectrum,
    })
}

/// Linearly interpolated zero crossings of `ys` sampled at `ts`.
pub fn zero_crossings(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..ts.len().min(ys.len()).saturating_sub(1) {
        let (a, b) = (ys[i], ys[i + 1]);
        if a == 0.0 {
            out.push(ts[i]);
        } else if a * b < 0.0 {
            out.push(ts[i] + (ts[i + 1] - ts[i]) * a / (a - b));
        }
    }
    out
}

// Residual sum of squares of the best `a cos(wt) + b sin(wt)`.
fn sinusoid_rss(ts: &[f64], ys: &[f64], w: f64) -> f64 {
    let (mut cc, mut cs, mut ss, mut cy, mut sy, mut yy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in ts.iter().zip(ys) {
        let (s, c) = (libm::sin(w * t), libm::cos(w * t));
        cc += c * c;
        cs += c * s;
        ss += s * s;
        cy += c * y;
        sy += s * y;
        yy += y * y;
    }
    let det = cc * ss - cs * cs;
    if det.abs() <= 1e-300 {
        return yy;
    }
    let a = (ss * cy - cs * sy) / det;
    let b = (cc * sy - cs * cy) / det;
    yy - a * cy - b * sy
}

/// Angular frequency in `(0, w_max]` of the least-squares fit
/// `a cos(wt) + b sin(wt)` to `(ts, ys)`.
///
/// A 2000-point grid locates the basin, golden-section search refines it.
/// Consecutive zeros of the fitted curve lie `π / w` apart.
pub fn sinusoid_frequency(ts: &[f64], ys: &[f64], w_max: f64) -> Result<f64> {
    const GRID: usize = 2000;
    if ts.len() != ys.len() || ts.len() < 3 {
        return Err(Error::InvalidInput(format!("need matching samples, at least 3, got {} and {}", ts.len(), ys.len())));
    }
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err(Error::InvalidInput(format!("w_max {w_max} must be positive")));
    }
    let step = w_max / GRID as f64;
    let f = |w: f64| sinusoid_rss(ts, ys, w);
    let (mut bw, mut bv) = (step, f(step));
    for k in 2..=GRID {
        let w = k as f64 * step;
        let v = f(w);
        if v < bv {
            bw = w;
            bv = v;
        }
    }
    let golden = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut lo, mut hi) = ((bw - step).max(0.5 * step), (bw + step).min(w_max));
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
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
    let (w, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    Ok(if v < bv { w } else { bw })
}

/// Ratio of fitted zero-crossing gaps, `(0, t*]` over `(t*, 1]`, of one
/// mirror coordinate; the first `split` samples form the first regime.
pub fn frequency_break_ratio(ts: &[f64], ys: &[f64], split: usize, w_max: f64) -> Result<f64> {
    if split > ts.len() {
        return Err(Error::OutOfRange { index: split, len: ts.len() });
    }
    let pre = sinusoid_frequency(&ts[..split], &ys[..split], w_max)?;
    let post = sinusoid_frequency(&ts[split..], &ys[split..], w_max)?;
    Ok(post / pre)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpp_sim::{asymptotic_mirror, true_dmv_matrix, WalkConfig};
    use crate::spectral_embed::DissimilarityKind;

    fn line(points: &[f64]) -> DissimilarityMatrix {
        DissimilarityMatrix::euclidean(&Matrix::column_vector(points))
    }

    #[test]
    fn three_points_on_a_line() {
        let me = cmds(&line(&[0.0, 1.0, 2.0]), 1).unwrap();
        let x = first_dimension(&me);
        let sign = x[2].signum();
        for (a, b) in x.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a * sign - b).abs() < 1e-10);
        }
        assert!((me.spectrum[0] - 2.0).abs() < 1e-10);
        assert!(me.spectrum[1].abs() < 1e-10 && me.spectrum[2].abs() < 1e-10);
    }

    #[test]
    fn zero_matrix() {
        let d = DissimilarityMatrix { values: Matrix::zeros(4, 4), kind: DissimilarityKind::Euclidean };
        let me = cmds(&d, 2).unwrap();
        assert_eq!(me.coords.max_abs(), 0.0);
        let r = realizability_report(&d).unwrap();
        assert!(r.spectrum.iter().all(|v| *v == 0.0));
        assert_eq!(r.positive_count, 0);
    }

    #[test]
    fn one_realizable_is_rank_one() {
        let pts: Vec<f64> = (0..15).map(|i| 0.3 * i as f64 / 15.0 - 2.0).collect();
        let d = line(&pts);
        let r = realizability_report(&d).unwrap();
        assert_eq!(r.positive_count, 1);
        assert!(r.most_negative >= -1e-8);
        let me = cmds(&d, 1).unwrap();
        let x = first_dimension(&me);
        for i in 0..15 {
            for j in 0..15 {
                assert!(((x[i] - x[j]).abs() - d.values[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn invariants() {
        let cfg = WalkConfig::infill(30, 0.4, 0.2, 0.5, 0);
        let d = true_dmv_matrix(&cfg).unwrap();
        let me = cmds(&d, 3).unwrap();
        for k in 0..3 {
            let col = me.coords.column(k);
            assert!(col.iter().sum::<f64>().abs() < 1e-10);
            assert!((linalg::dot(&col, &col) - me.spectrum[k].max(0.0)).abs() < 1e-8);
            for k2 in (k + 1)..3 {
                assert!(linalg::dot(&col, &me.coords.column(k2)).abs() < 1e-8);
            }
        }
        assert!(realizability_report(&d).unwrap().positive_count > 1);
        assert!(cmds(&d, 30).is_err());
        assert!(cmds(&d, 0).is_err());
    }

    #[test]
    fn homogeneity() {
        let cfg = WalkConfig::infill(20, 0.4, 0.3, 0.5, 0);
        let d = true_dmv_matrix(&cfg).unwrap();
        let s = 3.7;
        let ds = DissimilarityMatrix { values: d.values.scale(s), kind: d.kind };
        let (a, b) = (cmds(&d, 2).unwrap(), cmds(&ds, 2).unwrap());
        assert!(b.coords.sub(&a.coords.scale(s)).unwrap().max_abs() < 1e-10);
        for (x, y) in a.spectrum.iter().zip(&b.spectrum) {
            assert!((y - s * s * x).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_identity() {
        let cfg = WalkConfig::infill(12, 0.5, 0.2, 0.4, 0);
        let d = true_dmv_matrix(&cfg).unwrap();
        let me = cmds(&d, 2).unwrap();
        let gram = me.coords.matmul(&me.coords.transpose()).unwrap();
        let eig = linalg::symmetric_eigen(&double_centered(&d)).unwrap().sorted_descending();
        let proj = Matrix::from_fn(12, 12, |i, j| {
            (0..2).map(|k| eig.values[k].max(0.0) * eig.vectors[(i, k)] * eig.vectors[(j, k)]).sum()
        });
        assert!(gram.sub(&proj).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn first_dimension_tracks_limit_mirror() {
        let cfg = WalkConfig::infill(40, 0.4, 0.2, 0.5, 0);
        let x = first_dimension(&cmds(&true_dmv_matrix(&cfg).unwrap(), 1).unwrap());
        let psi: Vec<f64> = cfg.times().iter().map(|t| asymptotic_mirror(0.4, 0.2, 0.5, *t)).collect();
        let gap = |w: f64| x.iter().zip(&psi).fold(0.0f64, |m, (a, b)| m.max((a - w * b).abs()));
        assert!(gap(1.0).min(gap(-1.0)) < 0.05);
    }

    #[test]
    fn two_points_symmetric() {
        let me = cmds(&line(&[0.0, 0.5]), 1).unwrap();
        let x = first_dimension(&me);
        assert!((x[0] + x[1]).abs() < 1e-15);
        assert!((x[0] - x[1]).abs() > 0.49);
        assert!(cmds(&line(&[1.0]), 1).is_err());
    }
    #[test]
    fn sinusoid_fit_recovers_frequency() {
        let ts: Vec<f64> = (0..80).map(|i| i as f64 / 80.0).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 0.3 * libm::cos(7.3 * t) - 1.1 * libm::sin(7.3 * t)).collect();
        let w = sinusoid_frequency(&ts, &ys, 40.0).unwrap();
        assert!((w - 7.3).abs() < 1e-6, "{w}");
        let z = zero_crossings(&ts, &ys);
        let gaps: Vec<f64> = z.windows(2).map(|p| p[1] - p[0]).collect();
        for g in gaps {
            assert!((g - core::f64::consts::PI / 7.3).abs() < 1e-3);
        }
    }

    #[test]
    fn piecewise_sinusoid_break() {
        let m = 120;
        let ts: Vec<f64> = (1..=m).map(|i| i as f64 / m as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| if t <= 0.5 { libm::cos(9.0 * t) } else { libm::sin(4.5 * t + 1.0) }).collect();
        let r = frequency_break_ratio(&ts, &ys, m / 2, 40.0).unwrap();
        assert!((r - 0.5).abs() < 1e-6, "{r}");
        assert!(frequency_break_ratio(&ts, &ys, m + 1, 40.0).is_err());
    }

    #[test]
    fn zero_crossing_edges() {
        assert_eq!(zero_crossings(&[0.0, 1.0, 2.0], &[0.0, 1.0, -1.0]), alloc::vec![0.0, 1.5]);
        assert!(zero_crossings(&[0.0], &[1.0]).is_empty());
    }
}
