//! Case data model, bus admittance assembly and reduction of the network
//! (with loads and generator source reactances) to generator internal buses.

mod admittance;
mod augment;
mod case;
pub mod matpower;

pub use admittance::build_admittance;
pub use augment::{augment_and_reduce, load_admittance_from_pf, AugmentedNetwork};
pub use case::{parse_case, Branch, Bus, BusKind, Dispatch, Generator, PowerSystemCase};
