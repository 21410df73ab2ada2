//! Spectral deviation of concentration operators built from discrete frames
//! and finite Gabor systems.

pub mod eigen;
pub mod exec;
pub mod geometry;
pub mod spectral;
pub mod bounds;
pub mod frame;
pub mod gabor;
pub mod prolate;
pub mod io;
pub mod testbed;
pub mod harness;
