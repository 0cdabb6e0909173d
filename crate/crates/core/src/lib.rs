pub mod approx;
pub mod bounds;
pub mod error;
pub mod experiment;
mod linalg;
pub mod measures;
pub mod potential;
pub mod random;
pub mod shift;
pub mod transfer;
