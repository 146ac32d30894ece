//! Combinatorics and piecewise-linear geometry of arboreal singularities.

pub mod config;
pub mod correspondence;
pub mod error;
pub mod expand;
pub mod linalg;
pub mod models;
pub mod quiver;
pub mod sections;
pub mod topology;
pub mod tree;

pub use error::{Error, Result};
