//! Random-walk latent position processes with a first-order changepoint.
//!
//! Each vertex starts at `c` and, at every step `s = 1..m`, moves up by
//! `delta` with probability `p` when `s <= floor(t_star * m)` and `q`
//! afterwards. The position sampled at time `s / m` includes the jump drawn at
//! step `s`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;
use crate::spectral_embed::{DissimilarityKind, DissimilarityMatrix};

/// Parameters of a one-dimensional random-walk LPP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub m: usize,
    pub c: f64,
    pub delta: f64,
    pub p: f64,
    pub q: f64,
    pub t_star_frac: f64,
    pub seed: u64,
}

impl WalkConfig {
    /// Walk with start `c` and `delta = (1 - c) / m`, so the top of the range
    /// is reachable exactly at time one.
    pub fn scaled(m: usize, p: f64, q: f64, t_star_frac: f64, c: f64, seed: u64) -> Self {
        Self { m, c, delta: (1.0 - c) / m as f64, p, q, t_star_frac, seed }
    }

    /// The in-fill walk with `c = 0` and `delta = 1 / m`.
    pub fn infill(m: usize, p: f64, q: f64, t_star_frac: f64, seed: u64) -> Self {
        Self::scaled(m, p, q, t_star_frac, 0.0, seed)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return bad(format!("c = {} must be finite and >= 0", self.c));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return bad(format!("delta = {} must be finite and > 0", self.delta));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        if !(self.t_star_frac > 0.0 && self.t_star_frac < 1.0) {
            return bad(format!("t_star_frac = {} must lie in (0, 1)", self.t_star_frac));
        }
        let top = self.c + self.delta * self.m as f64;
        if top > 1.0 + 1e-12 {
            return bad(format!("c + delta*m = {top} exceeds 1"));
        }
        Ok(())
    }

    /// Last step drawn with probability `p`: `floor(t_star * m)`.
    pub fn changepoint_index(&self) -> usize {
        libm::floor(self.t_star_frac * self.m as f64) as usize
    }

    /// Jump probability used at 1-based step `s`.
    #[inline]
    pub fn jump_probability(&self, s: usize) -> f64 {
        if s <= self.changepoint_index() {
            self.p
        } else {
            self.q
        }
    }

    /// Sampled times `1/m, 2/m, ..., 1`.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.m).map(|i| i as f64 / self.m as f64).collect()
    }

    pub fn has_changepoint(&self) -> bool {
        self.p != self.q
    }
}

/// Latent trajectories of `n` vertices at `m` shared times.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTrajectorySet {
    pub n: usize,
    pub times: Vec<f64>,
    /// `n x m`; entry `(j, i)` is vertex `j` at `times[i]`.
    pub positions: Matrix,
    pub dim: usize,
}

impl LatentTrajectorySet {
    pub fn new(times: Vec<f64>, positions: Matrix) -> Result<Self> {
        if positions.cols() != times.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: positions.cols() });
        }
        Ok(Self { n: positions.rows(), times, positions, dim: 1 })
    }

    pub fn m(&self) -> usize {
        self.times.len()
    }

    /// Positions of every vertex at time index `t`.
    pub fn at_time(&self, t: usize) -> Result<Vec<f64>> {
        if t >= self.m() {
            return Err(Error::OutOfRange { index: t, len: self.m() });
        }
        Ok(self.positions.column(t))
    }
}

/// Draws `n` independent walk trajectories.
///
/// Vertex `j` reads its increments from its own keyed stream, so the output
/// does not depend on the order in which vertices are generated.
pub fn simulate_walk(cfg: &WalkConfig, n: usize) -> Result<LatentTrajectorySet> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let m = cfg.m;
    let mut positions = Matrix::zeros(n, m);
    for j in 0..n {
        let mut r = rng::stream(cfg.seed, rng::TAG_WALK, j as u64, 0);
        let row = positions.row_mut(j);
        let mut jumps = 0u32;
        for (i, x) in row.iter_mut().enumerate() {
            if rng::bernoulli(&mut r, cfg.jump_probability(i + 1)) {
                jumps += 1;
            }
            *x = (cfg.c + cfg.delta * jumps as f64).min(1.0);
        }
    }
    LatentTrajectorySet::new(cfg.times(), positions)
}

/// Exact squared d_MV between the positions at time indices `i` and `j`
/// (0-based, time `(i + 1) / m`).
///
/// The increment between the two times is `delta` times a sum of
/// `a1` Bernoulli(p) and `a2` Bernoulli(q) draws, so its second moment is
/// `delta^2 * ((p a1 + q a2)^2 + p(1-p) a1 + q(1-q) a2)`.
pub fn true_dmv_squared(cfg: &WalkConfig, i: usize, j: usize) -> f64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    let cp = cfg.changepoint_index();
    // steps lo+2 ..= hi+1 separate the two samples
    let first = lo + 2;
    let last = hi + 1;
    if first > last {
        return 0.0;
    }
    let pre_end = last.min(cp);
    let a1 = if pre_end >= first { (pre_end - first + 1) as f64 } else { 0.0 };
    let a2 = (last - first + 1) as f64 - a1;
    let (p, q) = (cfg.p, cfg.q);
    let mean = p * a1 + q * a2;
    cfg.delta * cfg.delta * (mean * mean + p * (1.0 - p) * a1 + q * (1.0 - q) * a2)
}

/// The `m x m` matrix of exact d_MV values.
pub fn true_dmv_matrix(cfg: &WalkConfig) -> Result<DissimilarityMatrix> {
    cfg.validate()?;
    let m = cfg.m;
    let mut values = Matrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = libm::sqrt(true_dmv_squared(cfg, i, j));
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    Ok(DissimilarityMatrix { values, kind: DissimilarityKind::TrueDmv })
}

/// Centering constant of the in-fill asymptotic mirror.
pub fn asymptotic_mirror_offset(p: f64, q: f64, t_star: f64) -> f64 {
    t_star * (p - q) * (t_star / 2.0 - 1.0) - q / 2.0
}

/// The piecewise-linear in-fill limit mirror, centered to integrate to zero
/// over `[0, 1]`.
pub fn asymptotic_mirror(p: f64, q: f64, t_star: f64, t: f64) -> f64 {
    let c0 = asymptotic_mirror_offset(p, q, t_star);
    if t <= t_star {
        p * t + c0
    } else {
        q * t + (p - q) * t_star + c0
    }
}

/// Mirror of a deterministic trajectory: its norm minus the time average.
pub fn deterministic_mirror(traj: &[f64]) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let mean = crate::linalg::pairwise_sum(traj) / traj.len() as f64;
    Ok(traj.iter().map(|x| x - mean).collect())
}
