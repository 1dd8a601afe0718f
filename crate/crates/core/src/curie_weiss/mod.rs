//! Curie–Weiss model with landscape modification.

mod dynamics;
mod mean_field;
pub mod rfcw;

pub use dynamics::{
    build_magnetization_generator, classical_wells, convexification_check, crossover_time, nearest_grid_index,
    ConvexificationReport, Crossover, MagnetizationChain, CONVEXIFICATION_GRID,
};
pub use mean_field::{
    cramer_rate, cramer_rate_finite, energy, grid_index, grid_point, CurieWeiss, CurveKind, FreeEnergyCurve,
    MeanFieldRoots, Root, Stationarity, Variant, ROOT_SCAN_POINTS,
};
