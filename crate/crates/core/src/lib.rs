//! Gradient echo memory simulation and cold-atom characterisation.
//!
//! * [`model`]: domain types and closed-form efficiency relations.
//! * [`solver`]: time-domain storage/recall integration, Raman line scans
//!   and storage-time sweeps.
//! * [`analysis`]: line-shape and decay fits, thermometry, heterodyne
//!   demodulation.
//! * [`imaging`]: absorption-image optical depth analysis.
//! * [`table`]: numeric CSV series used for every tabular input and output.

pub mod analysis;
pub mod imaging;
pub mod model;
pub mod solver;
pub mod table;
