//! Exact one-dimensional scattering through layered and smooth potential
//! profiles: transfer-matrix amplitudes, complex poles of the transmission
//! amplitude, pole expansions, dwell times and wave-packet propagation.
//!
//! Units are eV, nm and fs throughout.

pub mod error;
pub mod units;
pub mod potential;
pub mod config;
pub mod scatter;
pub mod poles;
pub mod expansion;
pub mod times;
pub mod packet;
pub mod sweep;
pub mod quad;
pub mod table;

pub use error::{Error, Result};
pub use potential::{Family, PotentialProfile, Preset, PtTerm, Slice};
pub use scatter::{ComplexK, ScatteringSolution, TransferMatrix};
pub use units::PhysicalParams;
