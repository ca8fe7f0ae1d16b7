//! Numerical toolkit for the exact-growth Trudinger-Moser inequality on `R^2`.

pub mod certificate;
pub mod check;
pub mod error;
pub mod extremal;
pub mod families;
pub mod groundstate;
pub mod ode;
pub mod quadrature;
pub mod radial;
pub mod real;
pub mod verify;
pub mod witnesses;

pub use error::{Error, Result};
pub use real::Real;

pub type Profile = radial::RadialProfile<f64>;
pub type Growth = radial::GSpec<f64>;
pub type Profile32 = radial::RadialProfile<f32>;
pub type Growth32 = radial::GSpec<f32>;
