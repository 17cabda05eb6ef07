pub mod accel;
pub mod analysis;
pub mod error;
pub mod format;
pub mod hardy;
pub mod ode;
pub mod params;
pub mod potentials;
pub mod quad;
pub mod radial;
pub mod radial_ode;
pub mod scenario;
pub mod wolff;

pub use error::{Error, Result};
pub use params::{ProblemParams, Zeta};
