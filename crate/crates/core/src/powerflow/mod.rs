//! Newton–Raphson AC power flow and the classic-machine model built on it.

mod classic;
mod newton;

pub use classic::{init_classic_model, internal_voltages, ReducedClassicModel};
pub use newton::{solve_power_flow, PfSolution};
