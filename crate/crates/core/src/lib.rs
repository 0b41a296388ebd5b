//! Novikov theory on flat tori: closed one-forms, Lyapunov flows, instantons,
//! closed orbits, the Novikov complex and Witten deformation.

pub mod cli;
pub mod error;
pub mod expr;
pub mod flow;
pub mod instanton;
pub mod novikov;
pub mod ode;
pub mod orbit;
pub mod system;
pub mod torus;
pub mod witten;

pub use error::{Error, Result};
pub use system::FieldSystem;
