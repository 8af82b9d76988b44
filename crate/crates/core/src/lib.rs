//! Finite-dimensional quantum dynamical maps: divisibility certification and
//! entropic / discrimination-based non-Markovianity witnesses.

pub mod discrimination;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod maps;
mod optimize;
pub mod quantum;
pub mod random;
pub mod scenario;
pub mod sdp;
pub mod witness;

pub use error::{Error, Result};
