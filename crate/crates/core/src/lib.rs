//! Numerical laboratory for node-opened maxfaces in Lorentz–Minkowski space.
//!
//! The crate is organised along the pipeline a configuration goes through:
//!
//! * [`config`] – configurations `(p, Q)`, neck sizes, level forms, forces and
//!   the residue functions `R^{(r)}` that drive the singularity analysis.
//! * [`balance`] – Newton balancing with gauge pins, rigidity, presets and
//!   the polynomial balance test.
//! * [`singularity`] – symmetry detection, asymptotic singularity prediction
//!   and finite-`t` classification of the governing function.
//! * [`surface`] – finite-`t` Weierstrass data on the glued surface, period
//!   and divisor defects, the immersion and mesh export.
//! * [`exact`] – exact rational evaluation of the two combinatorial
//!   identities behind the derivative formula of the governing function.

pub mod balance;
pub mod config;
pub mod error;
pub mod exact;
pub mod format;
pub mod quad;
pub mod series;
pub mod preset;
pub mod singularity;
pub mod surface;
pub mod testing;

pub use error::{MaxfaceError, Result};

/// Complex double used throughout the crate.
pub type C64 = num_complex::Complex64;
