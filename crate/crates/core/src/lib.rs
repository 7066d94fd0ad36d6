//! Trace weights modulo a prime and the sums built from them.
//!
//! The crate computes finite-field weights `K: F_p -> C` (characters,
//! Kloosterman and hyper-Kloosterman sums, fiber counts, ...), their
//! unitary Fourier transforms, correlation sums `C(K; gamma)` over
//! `PGL_2(F_p)` together with a structural classification of the matrices
//! where square-root cancellation fails, sums of cusp-form coefficients
//! twisted by these weights, the resonating-matrix identity of the
//! amplification method, and twisted Hecke orbits on the modular surface.
//!
//! Everything is brute force at desk scale (`p` up to a few thousand).

pub mod correlation;
mod error;
pub mod fp;
pub mod json;
pub mod modular;
pub mod orbits;
pub mod resonance;
pub mod weights;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Run `f` on a dedicated rayon pool with `threads` workers.
///
/// Every parallel routine in the crate collects into index-ordered buffers
/// before reducing, so results do not depend on `threads`.
pub fn with_threads<R, F>(threads: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
