//! File formats, run configuration, Monte Carlo drivers and the `lppmirror`
//! command line, on top of [`lppmirror_core`].

pub mod config;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod manifest;

pub use error::{Error, Result};
pub use lppmirror_core as core;
