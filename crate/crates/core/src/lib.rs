//! Four-velocity planar Broadwell model on a rectangle: characteristic
//! transport operators, a-priori bound certificates, Picard iteration and an
//! independent upwind oracle.

pub mod bounds;
pub mod characteristics;
pub mod data;
pub mod error;
pub mod fields;
pub mod model;
pub mod oracle;
pub mod picard;
pub mod transport;

pub use error::{Error, Result};
pub use fields::{Field4, FieldPartials, GridSpec};
pub use model::{ModelParams, SpaceTimeBox, Species};
