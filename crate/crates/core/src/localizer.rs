//! l∞ (minimax) one-knot piecewise-linear changepoint localization.
//!
//! At knot `t_k` the fit is `f(t) = α + β_L min(t - t_k, 0) + β_R max(t - t_k, 0)`
//! and the knot score is `S_k = min max_i |f(t_i) - y_i|`. The minimax problem
//! is solved through its dual,
//!
//! ```text
//! max  Σ y_i (u_i - v_i)
//! s.t. Σ (u_i - v_i) a_i = 0,  Σ (u_i + v_i) = 1,  u, v ≥ 0,
//! ```
//!
//! with `a_i = (1, min(t_i - t_k, 0), max(t_i - t_k, 0))`, by a two-phase dense
//! simplex. The fit parameters are the simplex multipliers of the equality
//! rows, so they always come from a basic (vertex) solution.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Parameters and score of the minimax fit at one knot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnotFit {
    pub alpha: f64,
    pub beta_left: f64,
    pub beta_right: f64,
    pub objective: f64,
}

impl KnotFit {
    pub fn predict(&self, t_knot: f64, t: f64) -> f64 {
        let u = t - t_knot;
        self.alpha + self.beta_left * u.min(0.0) + self.beta_right * u.max(0.0)
    }
}

/// Result of scanning every interior knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFit {
    /// 0-based index of the chosen knot, in `1..=m-2`.
    pub t_hat_index: usize,
    pub t_hat: f64,
    pub alpha: f64,
    pub beta_left: f64,
    pub beta_right: f64,
    pub objective: f64,
    /// `S_k` for 0-based knots `1..=m-2`, in order.
    pub per_knot_objectives: Vec<f64>,
    /// Number of knots whose score tied the minimum.
    pub tied_knots: usize,
}

/// Relative tolerance, against the range of `ys`, within which knot scores tie.
pub const TIE_TOLERANCE: f64 = 1e-10;

fn check_inputs(ts: &[f64], ys: &[f64]) -> Result<()> {
    if ts.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: ts.len(), found: ys.len() });
    }
    if ts.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Minimax fit at the 0-based knot `k`, which must have samples on both sides.
pub fn fit_at_knot(ts: &[f64], ys: &[f64], k: usize) -> Result<KnotFit> {
    check_inputs(ts, ys)?;
    let m = ts.len();
    if k == 0 || k + 1 >= m {
        return Err(Error::InvalidInput(format!("knot {k} must lie in 1..={}", m.saturating_sub(2))));
    }
    solve_knot(ts, ys, k)
}

fn solve_knot(ts: &[f64], ys: &[f64], k: usize) -> Result<KnotFit> {
    let m = ts.len();
    let tk = ts[k];
    // columns 0..m are u_i, m..2m are v_i
    let mut a = Matrix::zeros(4, 2 * m);
    let mut cost = vec![0.0; 2 * m];
    for i in 0..m {
        let u = ts[i] - tk;
        let col = [1.0, u.min(0.0), u.max(0.0)];
        for r in 0..3 {
            a[(r, i)] = col[r];
            a[(r, m + i)] = -col[r];
        }
        a[(3, i)] = 1.0;
        a[(3, m + i)] = 1.0;
        cost[i] = -ys[i];
        cost[m + i] = ys[i];
    }
    let b = [0.0, 0.0, 0.0, 1.0];
    let scale = ys.iter().fold(0.0f64, |s, y| s.max(y.abs())).max(1e-300);
    let pi = simplex(&a, &b, &cost, scale).map_err(|reason| Error::LinearProgram { knot: k, reason })?;
    let fit = KnotFit { alpha: -pi[0], beta_left: -pi[1], beta_right: -pi[2], objective: 0.0 };
    let objective = ts.iter().zip(ys).map(|(t, y)| (fit.predict(tk, *t) - y).abs()).fold(0.0, f64::max);
    Ok(KnotFit { objective, ..fit })
}

/// Minimizes `cᵀx` over `Ax = b, x ≥ 0` (`b ≥ 0`) and returns the simplex
/// multipliers `π = c_Bᵀ B⁻¹` of the optimal basis.
fn simplex(a: &Matrix, b: &[f64], c: &[f64], cost_scale: f64) -> core::result::Result<Vec<f64>, &'static str> {
    let (rows, n) = (a.rows(), a.cols());
    let width = n + rows + 1;
    let rhs = width - 1;
    let mut t = Matrix::zeros(rows, width);
    for r in 0..rows {
        for j in 0..n {
            t[(r, j)] = a[(r, j)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, rhs)] = b[r];
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();
    let pivot_eps = 1e-11;

    // phase one: minimize the sum of artificials
    let mut phase_one = vec![0.0; n + rows];
    for v in phase_one.iter_mut().skip(n) {
        *v = 1.0;
    }
    run_phase(&mut t, &mut basis, &phase_one, n + rows, 1e-12, pivot_eps)?;
    let infeasibility: f64 = basis.iter().enumerate().filter(|(_, &j)| j >= n).map(|(r, _)| t[(r, rhs)]).sum();
    if infeasibility > 1e-9 {
        return Err("infeasible dual");
    }
    // drive zero-level artificials out where possible
    for r in 0..rows {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t[(r, j)].abs() > pivot_eps) {
                pivot(&mut t, &mut basis, r, j);
            }
        }
    }

    let mut full_cost = c.to_vec();
    full_cost.extend(core::iter::repeat_n(0.0, rows));
    run_phase(&mut t, &mut basis, &full_cost, n, 1e-12 * cost_scale, pivot_eps)?;
    Ok((0..rows).map(|r| (0..rows).map(|i| full_cost[basis[i]] * t[(i, n + r)]).sum()).collect())
}

fn pivot(t: &mut Matrix, basis: &mut [usize], row: usize, col: usize) {
    let width = t.cols();
    let p = t[(row, col)];
    for j in 0..width {
        t[(row, j)] /= p;
    }
    let prow: Vec<f64> = t.row(row).to_vec();
    for r in 0..t.rows() {
        if r == row {
            continue;
        }
        let f = t[(r, col)];
        if f != 0.0 {
            for (dst, src) in t.row_mut(r).iter_mut().zip(&prow) {
                *dst -= f * src;
            }
            t[(r, col)] = 0.0;
        }
    }
    basis[row] = col;
}

// Columns `0..enter_limit` may enter the basis. Dantzig pricing with
// lowest-index ties, switching to Bland's rule after a run of degenerate
// pivots.
fn run_phase(
    t: &mut Matrix,
    basis: &mut [usize],
    cost: &[f64],
    enter_limit: usize,
    cost_eps: f64,
    pivot_eps: f64,
) -> core::result::Result<(), &'static str> {
    let rows = t.rows();
    let rhs = t.cols() - 1;
    let max_iter = 50 * (enter_limit + rows);
    let mut degenerate_run = 0usize;
    let mut bland = false;
    for _ in 0..max_iter {
        let mut enter = None;
        let mut best = -cost_eps;
        for j in 0..enter_limit {
            if basis.contains(&j) {
                continue;
            }
            let d = cost[j] - (0..rows).map(|r| cost[basis[r]] * t[(r, j)]).sum::<f64>();
            if d < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = d;
            }
        }
        let Some(col) = enter else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let e = t[(r, col)];
            if e > pivot_eps {
                let ratio = t[(r, rhs)].max(0.0) / e;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let Some((row, ratio)) = leave else {
            return Err("unbounded dual");
        };
        if ratio <= 1e-15 {
            degenerate_run += 1;
            if degenerate_run > 2 * (enter_limit + rows) {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
        pivot(t, basis, row, col);
    }
    Err("iteration limit")
}

/// Fits every interior knot and keeps the smallest index attaining the minimum
/// score, up to [`TIE_TOLERANCE`].
pub fn localize(ts: &[f64], ys: &[f64]) -> Result<PiecewiseLinearFit> {
    check_inputs(ts, ys)?;
    let m = ts.len();
    if m < 4 {
        return Err(Error::InvalidInput(format!("localize needs at least 4 samples, got {m}")));
    }
    let fits = (1..m - 1).map(|k| solve_knot(ts, ys, k)).collect::<Result<Vec<_>>>()?;
    let per_knot_objectives: Vec<f64> = fits.iter().map(|f| f.objective).collect();
    let lo = per_knot_objectives.iter().copied().fold(f64::INFINITY, f64::min);
    let range = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ys.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOLERANCE * range;
    let tied: Vec<usize> = (0..fits.len()).filter(|&i| per_knot_objectives[i] <= lo + tol).collect();
    let best = tied[0];
    let f = fits[best];
    Ok(PiecewiseLinearFit {
        t_hat_index: best + 1,
        t_hat: ts[best + 1],
        alpha: f.alpha,
        beta_left: f.beta_left,
        beta_right: f.beta_right,
        objective: f.objective,
        per_knot_objectives,
        tied_knots: tied.len(),
    })
}

/// Slope change `|β_R − β_L|` at the chosen knot.
pub fn detection_statistic(fit: &PiecewiseLinearFit) -> f64 {
    (fit.beta_right - fit.beta_left).abs()
}

/// Continuum minimax value on `[0, horizon]` for a slope change `delta` at
/// `t_star` when the knot is forced to `t_hat`.
pub fn forced_knot_minimum(delta: f64, t_star: f64, t_hat: f64, horizon: f64) -> f64 {
    if t_hat <= t_star {
        delta.abs() * (t_star - t_hat) * (horizon - t_star) / (2.0 * (horizon - t_hat))
    } else {
        delta.abs() * (t_hat - t_star) * t_star / (2.0 * t_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpp_sim::asymptotic_mirror;

    fn grid(m: usize) -> Vec<f64> {
        (1..=m).map(|i| i as f64 / m as f64).collect()
    }

    #[test]
    fn exact_interpolation() {
        let ts = [0.0, 0.5, 1.0];
        let ys = [0.0, 0.0, 1.0];
        let f = fit_at_knot(&ts, &ys, 1).unwrap();
        assert!(f.objective < 1e-14);
        assert!((f.alpha).abs() < 1e-14 && f.beta_left.abs() < 1e-14 && (f.beta_right - 2.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear_recovers_slopes() {
        let ts = grid(20);
        let ys: Vec<f64> = ts.iter().map(|t| if *t <= 0.3 { 2.0 * t } else { 0.6 - 0.5 * (t - 0.3) }).collect();
        let f = fit_at_knot(&ts, &ys, 5).unwrap();
        assert!(f.objective < 1e-12);
        assert!((f.beta_left - 2.0).abs() < 1e-10 && (f.beta_right + 0.5).abs() < 1e-10);
        let fit = localize(&ts, &ys).unwrap();
        assert_eq!(fit.t_hat_index, 5);
    }

    #[test]
    fn constant_and_linear_data() {
        let ts = grid(10);
        let f = fit_at_knot(&ts, &[0.7; 10], 4).unwrap();
        assert!(f.objective < 1e-14 && f.beta_left.abs() < 1e-14 && f.beta_right.abs() < 1e-14);
        let ys: Vec<f64> = ts.iter().map(|t| 1.0 - 3.0 * t).collect();
        let fit = localize(&ts, &ys).unwrap();
        assert_eq!(fit.t_hat_index, 1);
        assert!(fit.per_knot_objectives.iter().all(|s| *s < 1e-12));
        assert!(detection_statistic(&fit) < 1e-10);
    }

    #[test]
    fn minimax_of_a_v() {
        // |t - 0.5| sampled at 5 points; a knot at 0.25 leaves a Chebyshev line
        // fit of (0, .25), (.25, 0), (.5, .25), (.75, .5) with error 1/6
        let ts = [0.0, 0.25, 0.5, 0.75, 1.0];
        let ys: Vec<f64> = ts.iter().map(|t| (t - 0.5f64).abs()).collect();
        let f = fit_at_knot(&ts, &ys, 1).unwrap();
        assert!((f.objective - 1.0 / 6.0).abs() < 1e-12, "{}", f.objective);
        let fit = localize(&ts, &ys).unwrap();
        assert_eq!(fit.t_hat_index, 2);
        assert!(fit.objective < 1e-14);
    }

    #[test]
    fn limit_mirror_on_grid() {
        let ts = grid(20);
        let ys: Vec<f64> = ts.iter().map(|t| asymptotic_mirror(0.4, 0.2, 0.5, *t)).collect();
        let fit = localize(&ts, &ys).unwrap();
        assert_eq!(fit.t_hat, 0.5);
        assert!(fit.objective < 1e-12);
        assert!((detection_statistic(&fit) - 0.2).abs() < 1e-8);
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        assert!((detection_statistic(&localize(&ts, &neg).unwrap()) - 0.2).abs() < 1e-8);
    }

    #[test]
    fn appendix_style_oracle() {
        let m = 2001;
        let ts: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let (p, q, ts_star) = (0.4, 0.2, 0.5);
        let ys: Vec<f64> = ts.iter().map(|t| asymptotic_mirror(p, q, ts_star, *t)).collect();
        for k in [400, 700, 950] {
            let f = fit_at_knot(&ts, &ys, k).unwrap();
            let want = forced_knot_minimum(p - q, ts_star, ts[k], 1.0);
            assert!((f.objective - want).abs() <= 2.0 / m as f64 * (p - q), "{k}: {} vs {want}", f.objective);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let ts = grid(5);
        assert!(fit_at_knot(&ts, &[0.0; 5], 0).is_err());
        assert!(fit_at_knot(&ts, &[0.0; 5], 4).is_err());
        assert!(localize(&ts[..3], &[0.0; 3]).is_err());
        assert!(localize(&[0.0, 0.2, 0.2, 0.5], &[0.0; 4]).is_err());
        assert!(localize(&ts, &[0.0; 4]).is_err());
    }
}
