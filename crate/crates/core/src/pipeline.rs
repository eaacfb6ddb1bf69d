//! End-to-end signals: from a graph series to a one-dimensional series that the
//! localizer consumes.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph_gen::{sample_tsg, AdjacencyTimeSeries};
use crate::isomap::{iso_reduce, IsoMirror};
use crate::linalg::Matrix;
use crate::localizer::{localize, PiecewiseLinearFit};
use crate::lpp_sim::{simulate_walk, WalkConfig};
use crate::mds_mirror::{cmds, MirrorEmbedding};
use crate::spectral_embed::{self, DissimilarityMatrix, ProcrustesMode};

/// One-dimensional summary of a graph series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    /// First CMDS coordinate of the estimated mirror.
    MirrorDim1,
    /// ISOMAP reduction of the `d`-dimensional CMDS mirror.
    IsoMirror(usize),
    /// `sqrt(2|E| / n)` per time.
    SqrtAvgDegree,
    /// `2|E| / (n(n-1))` per time.
    EdgeDensity,
}

impl Signal {
    pub fn label(&self) -> alloc::string::String {
        match self {
            Self::MirrorDim1 => "mirror_dim_1".into(),
            Self::IsoMirror(d) => format!("iso_mirror_{d}"),
            Self::SqrtAvgDegree => "sqrt_avg_degree".into(),
            Self::EdgeDensity => "edge_density".into(),
        }
    }

    fn mirror_dim(&self) -> usize {
        match self {
            Self::MirrorDim1 => 1,
            Self::IsoMirror(d) => *d,
            _ => 0,
        }
    }
}

/// Walk, then graphs, with independent seeds for the two stages.
pub fn simulate(cfg: &WalkConfig, n: usize, graph_seed: u64) -> Result<AdjacencyTimeSeries> {
    sample_tsg(&simulate_walk(cfg, n)?, graph_seed)
}

/// Per-time marginal statistic signals.
pub fn marginal_signal(tsg: &AdjacencyTimeSeries, signal: Signal) -> Result<Vec<f64>> {
    let n = tsg.n as f64;
    match signal {
        Signal::SqrtAvgDegree => Ok(tsg.graphs.iter().map(|g| libm::sqrt(g.count_ones() as f64 / n)).collect()),
        Signal::EdgeDensity => Ok(tsg.graphs.iter().map(|g| g.count_ones() as f64 / (n * (n - 1.0))).collect()),
        _ => Err(Error::InvalidInput(format!("{} is not a marginal signal", signal.label()))),
    }
}

/// The leading `d` mirror columns as a point set.
pub fn mirror_points(mirror: &MirrorEmbedding, d: usize) -> Matrix {
    Matrix::from_fn(mirror.coords.rows(), d, |i, j| mirror.coords[(i, j)])
}

/// Localizes each requested signal, sharing one estimated dissimilarity
/// matrix (ASE dimension `ase_dim`) and one CMDS across the mirror signals.
pub fn localize_signals(tsg: &AdjacencyTimeSeries, signals: &[Signal], ase_dim: usize) -> Result<Vec<PiecewiseLinearFit>> {
    let c = signals.iter().map(Signal::mirror_dim).max().unwrap_or(0);
    let mirror = if c > 0 {
        let dhat = spectral_embed::estimated_dissimilarity_matrix(tsg, ase_dim)?;
        Some(cmds(&dhat, c)?)
    } else {
        None
    };
    signals
        .iter()
        .map(|s| {
            let ys = match (s, &mirror) {
                (Signal::MirrorDim1, Some(me)) => me.coords.column(0),
                (Signal::IsoMirror(d), Some(me)) => iso_reduce(&mirror_points(me, *d))?.values,
                _ => marginal_signal(tsg, *s)?,
            };
            localize(&tsg.times, &ys)
        })
        .collect()
}

/// How the ASE dimension is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AseDim {
    Fixed(usize),
    /// Median over times of the profile-likelihood elbow, searching up to `max`.
    Auto { max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub ase_dim: AseDim,
    pub cmds_dim: usize,
    pub use_isomap: bool,
    pub procrustes: ProcrustesMode,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { ase_dim: AseDim::Fixed(1), cmds_dim: 1, use_isomap: false, procrustes: ProcrustesMode::Frobenius }
    }
}

/// Every intermediate of one analysis run.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub ase_dim: usize,
    pub dissimilarity: DissimilarityMatrix,
    pub mirror: MirrorEmbedding,
    pub iso: Option<IsoMirror>,
    /// The series handed to the localizer.
    pub signal: Vec<f64>,
    pub fit: PiecewiseLinearFit,
}

/// Resolves [`AseDim`] for a series.
pub fn resolve_ase_dim(tsg: &AdjacencyTimeSeries, choice: AseDim) -> Result<usize> {
    match choice {
        AseDim::Fixed(d) => Ok(d),
        AseDim::Auto { max } => {
            let mut dims = tsg
                .graphs
                .iter()
                .map(|g| spectral_embed::select_dimension(g, max))
                .collect::<Result<Vec<_>>>()?;
            dims.sort_unstable();
            Ok(dims.get(dims.len() / 2).copied().unwrap_or(1))
        }
    }
}

/// ASE, estimated d_MV, CMDS, optional ISOMAP, then localization.
pub fn analyze(tsg: &AdjacencyTimeSeries, opts: &AnalysisOptions) -> Result<Analysis> {
    if tsg.m() < 4 {
        return Err(Error::InvalidInput(format!("analysis needs at least 4 graphs, got {}", tsg.m())));
    }
    let ase_dim = resolve_ase_dim(tsg, opts.ase_dim)?;
    let est = spectral_embed::estimate_dissimilarity(tsg, ase_dim, opts.procrustes)?;
    let mirror = cmds(&est.matrix, opts.cmds_dim)?;
    let iso = if opts.use_isomap { Some(iso_reduce(&mirror_points(&mirror, opts.cmds_dim))?) } else { None };
    let signal = match &iso {
        Some(i) => i.values.clone(),
        None => mirror.coords.column(0),
    };
    let fit = localize(&tsg.times, &signal)?;
    Ok(Analysis { ase_dim, dissimilarity: est.matrix, mirror, iso, signal, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_analysis_matches_direct_pipeline() {
        let cfg = WalkConfig::scaled(12, 0.4, 0.2, 0.5, 0.1, 3);
        let tsg = simulate(&cfg, 200, 9).unwrap();
        let fits = localize_signals(&tsg, &[Signal::MirrorDim1, Signal::IsoMirror(1), Signal::IsoMirror(3)], 1).unwrap();
        let direct = analyze(&tsg, &AnalysisOptions::default()).unwrap();
        assert_eq!(fits[0].t_hat_index, direct.fit.t_hat_index);
        assert_eq!(fits[1].t_hat_index, direct.fit.t_hat_index);
        let iso3 = analyze(&tsg, &AnalysisOptions { cmds_dim: 3, use_isomap: true, ..Default::default() }).unwrap();
        assert_eq!(fits[2].t_hat_index, iso3.fit.t_hat_index);
    }

    #[test]
    fn marginal_signals() {
        let cfg = WalkConfig::scaled(6, 0.5, 0.5, 0.5, 0.1, 1);
        let tsg = simulate(&cfg, 50, 2).unwrap();
        let deg = marginal_signal(&tsg, Signal::SqrtAvgDegree).unwrap();
        let dens = marginal_signal(&tsg, Signal::EdgeDensity).unwrap();
        for t in 0..6 {
            assert!((deg[t] * deg[t] / 49.0 - dens[t]).abs() < 1e-12);
        }
        assert!(marginal_signal(&tsg, Signal::MirrorDim1).is_err());
    }

    #[test]
    fn auto_dimension_for_rank_one_walk() {
        let cfg = WalkConfig::scaled(5, 0.5, 0.5, 0.5, 0.1, 4);
        let tsg = simulate(&cfg, 300, 5).unwrap();
        assert_eq!(resolve_ase_dim(&tsg, AseDim::Auto { max: 8 }).unwrap(), 1);
    }
}
