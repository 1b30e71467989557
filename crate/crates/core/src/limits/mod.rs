//! Steady states at the estimated limits (MS1, MS2, MS3) and MW margins.

mod margin;
mod reconstruct;

pub use margin::{compute_margins, MarginEntry, MarginReport, PointFailure};
pub use reconstruct::{
    reconstruct, reconstruct_ms1, reconstruct_ms2, reconstruct_ms3, SteadyStateAtLimit, Variant,
};
