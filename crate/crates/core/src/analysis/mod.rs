//! Elevations, critical heights and spectral gaps.

mod elevation;
mod heights;
mod spectral;

pub use elevation::{bottleneck_from, minimax_elevation, ElevationTable};
pub use heights::{
    clamp_threshold, clipped_critical_height, critical_height_classical, critical_height_modified,
    critical_heights, critical_pairs, CriticalHeights,
};
pub use spectral::{
    gap_slope_vs_beta, spectral_decomposition, spectral_gap, SlopeReport, SpectralGap, MAX_DENSE_STATES,
    MIN_RESOLVABLE_GAP,
};
