pub mod bench;
pub mod channel;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod measurement;
pub mod rng;
pub mod state;
pub mod symplectic;

pub use channel::{apply_channel, compose_channels, GaussianChannel};
pub use error::{Error, Result};
pub use state::GaussianState;
pub use symplectic::{apply_symplectic, compose, SymplecticOp};
