//! Anonymity-notion games, reference protocols and closed-form bounds for
//! anonymous communication networks.

pub mod adversaries;
pub mod atlas;
pub mod bounds;
pub mod cli;
pub mod coins;
pub mod error;
pub mod game;
pub mod model;
pub mod notions;
pub mod protocols;

pub use error::{Error, Result};
