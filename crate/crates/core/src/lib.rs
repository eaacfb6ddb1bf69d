//! Latent position process (LPP) network time series.
//!
//! This crate holds the numerical core: random-walk latent trajectories with a
//! first-order changepoint, conditionally independent random dot product graph
//! (RDPG) sampling, adjacency spectral embedding, the estimated maximum
//! directional variation dissimilarity, classical multidimensional scaling,
//! the ISOMAP iso-mirror, and the l∞ piecewise-linear changepoint localizer.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration,
//! the parallel Monte Carlo harness and the command line live in the companion
//! `lppmirror` crate.
//!
//! A typical pipeline, from simulated trajectories to a changepoint estimate:
//!
//! ```
//! use lppmirror_core::{graph_gen, localizer, lpp_sim, mds_mirror, spectral_embed};
//!
//! let cfg = lpp_sim::WalkConfig::scaled(12, 0.4, 0.2, 0.5, 0.1, 7);
//! let latents = lpp_sim::simulate_walk(&cfg, 300).unwrap();
//! let tsg = graph_gen::sample_tsg(&latents, 11).unwrap();
//! let dhat = spectral_embed::estimated_dissimilarity_matrix(&tsg, 1).unwrap();
//! let mirror = mds_mirror::cmds(&dhat, 1).unwrap();
//! let fit = localizer::localize(&tsg.times, &mds_mirror::first_dimension(&mirror)).unwrap();
//! assert!(fit.t_hat > 0.0 && fit.t_hat < 1.0);
//! ```
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod graph_gen;
pub mod isomap;
pub mod linalg;
pub mod localizer;
pub mod lpp_sim;
pub mod mds_mirror;
pub mod pipeline;
pub mod rng;
pub mod spectral_embed;
pub mod summaries;

pub use error::{Error, Result};
pub use graph_gen::{AdjacencyTimeSeries, BitMatrix};
pub use isomap::IsoMirror;
pub use linalg::Matrix;
pub use localizer::PiecewiseLinearFit;
pub use lpp_sim::{LatentTrajectorySet, WalkConfig};
pub use mds_mirror::MirrorEmbedding;
pub use spectral_embed::{DissimilarityKind, DissimilarityMatrix, Embedding};
