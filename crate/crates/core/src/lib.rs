//! Divergences, marginal perspective costs and discrete entropy-transport.
//!
//! The crate is organised bottom-up: [`entropy`] describes admissible entropy
//! functions, [`marginal_perspective`] and [`cone_cost`] build the homogeneous
//! costs from them, [`divergence_dynamics`] iterates the symmetrization map,
//! [`metric_check`] audits triangle inequalities and [`entropy_transport`]
//! solves small transport problems.

pub mod cone_cost;
pub mod divergence_dynamics;
pub mod entropy_transport;
pub mod entropy;
pub mod error;
pub mod extended;
pub mod io;
pub mod marginal_perspective;
pub mod measure;
pub mod metric_check;
pub mod optimize;
pub mod power_means;
pub mod tabulated;

pub use entropy::{Coefficients, EntropyDescriptor, Family};
pub use error::{Error, Result};
pub use extended::ExtendedValue;
pub use measure::{f_divergence, DiscreteMeasure};
pub use power_means::power_mean;
pub use tabulated::Tabulated;
