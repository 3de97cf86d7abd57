//! Exact symbolic-numeric engine for isochronous centers of planar polynomial
//! systems that reduce to Liénard type equations.

pub mod polyalg;
pub mod exprparse;
pub mod powerseries;
pub mod lienard;
pub mod calgorithm;
pub mod groebner;
pub mod numverify;
pub mod catalog;
