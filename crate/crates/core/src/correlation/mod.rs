//! Correlation sums `C(K; g)` over `PGL_2(F_p)` and the structure of the
//! matrices where they fail to show square-root cancellation.

mod catalog;
mod classify;
mod pgl;
mod spectrum;

pub use catalog::{verify_sec16, CatalogCase, Sec16Report, VerifyStatus};
pub use classify::{classify_exceptional, GoodnessReport, PairReport, Partition};
pub use pgl::{fixed_points, mobius_action, pgl_enumerate, FixedPointData, P1Point, PairForm, PglElement};
pub use spectrum::{
    corr_sum, correlation_values, spectrum, threshold, CorrelationSpectrum, SpectrumEntry,
    FULL_SPECTRUM_MAX_P, THRESHOLD_GUARD,
};
