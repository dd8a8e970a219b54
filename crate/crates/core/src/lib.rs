//! Radial numerics for the threshold dynamics of a 3-component cubic
//! Schrödinger system in four space dimensions.

pub mod error;
pub mod evolution;
pub mod field;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod linearized;
pub mod modulation;
pub mod plot;
pub mod special;
pub mod spectrum;
pub mod states;
pub mod virial;

pub use error::{LabError, Result};
pub use field::{Field3, MassTriple, RadialField, C64};
pub use grid::{Mapping, RadialGrid, Sector};
