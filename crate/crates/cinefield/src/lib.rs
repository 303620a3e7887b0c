//! Unsupervised reconstruction of dynamic (cine) MRI from multi-coil
//! golden-angle radial k-space.
//!
//! The reconstruction represents the complex image series as a small
//! coordinate MLP over spatio-temporal Fourier features and fits it directly
//! to the measured spokes of a single acquisition. The forward model maps the
//! network through rotated line projections and a 1-D Fourier transform onto
//! each radial spoke, so no gridding or non-uniform FFT is involved. The
//! crate also ships a dynamic ellipse phantom, a coil simulator, brute-force
//! reference transforms for validation, image quality metrics, and a small
//! CLI around a directory-based dataset format.
//!
//! Entry points:
//! - [`phantom`] renders dynamic phantoms and simulates radial acquisitions,
//! - [`trajectory`] generates golden-angle schedules,
//! - [`encoding`] / [`network`] hold the coordinate representation,
//! - [`forward`] is the spoke forward model, [`training`] fits it,
//! - [`metrics`] scores reconstructions, [`io`] persists datasets and runs,
//! - [`cli`] wires everything into subcommands.

pub mod cli;
pub mod data;
pub mod encoding;
pub mod forward;
pub mod io;
pub mod metrics;
pub mod network;
pub mod phantom;
pub mod trajectory;
pub mod training;

mod engine;
mod error;
mod gemm;

pub use error::{Error, Result};

/// Number of worker threads to use for spoke-parallel work.
///
/// Reads the `NFCMRI_THREADS` environment variable; unset, empty or `0`
/// means "use all available cores". Invalid values are an error rather than
/// a silent fallback.
pub fn configured_threads() -> Result<usize> {
    match std::env::var("NFCMRI_THREADS") {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("NFCMRI_THREADS must be a non-negative integer, got {s:?}"))),
    }
}

/// Builds a rayon thread pool honouring [`configured_threads`].
pub fn build_thread_pool() -> Result<rayon::ThreadPool> {
    let n = configured_threads()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if n > 0 {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("failed to build thread pool: {e}")))
}
