//! Modal-space analysis: paired eigen-decomposition of the equilibrium
//! Jacobian, generalized power-angle curves per oscillatory mode and the
//! search for their nearest extrema.

mod curve;
mod decomposition;
mod search;

pub use curve::{
    check_sdof_assumption, eval_generalized_power, modal_to_state, GeneralizedCurve,
    GeneralizedRates, SdofResiduals,
};
pub use decomposition::{decompose, relative_spectrum, ModalDecomposition};
pub use search::{find_limit_angle, find_limit_angles, LimitAngles, LimitPoint, Side};
