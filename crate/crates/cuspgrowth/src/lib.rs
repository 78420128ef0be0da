//! Cusp profiles, cuspidal functions, convolution volume formulas and
//! growth classification for negatively curved manifolds with cusps, plus an
//! exact orbit-counting oracle for the congruence lattice Γ(2).

pub mod asymptotics;
pub mod convolution;
pub mod error;
pub mod h2;
pub mod profiles;
pub mod quad;
pub mod series;
pub mod taxonomy;

pub use error::{Error, Result};
