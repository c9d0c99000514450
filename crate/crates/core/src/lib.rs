//! Device-to-device coded caching with one-shot delivery.

pub mod bits;
pub mod bounds;
pub mod cli;
pub mod combinatorics;
pub mod converse;
pub mod delivery;
pub mod erasure;
pub mod error;
pub mod gf;
pub mod inactivity;
pub mod placement;
pub mod reference;
pub mod repro;
pub mod subset;

pub use error::{Error, Result};
