//! Emergent referential-game languages with short-term pragmatic reasoning.

pub mod dropcode;
pub mod emergence;
pub mod error;
pub mod eval;
pub mod gametheory;
pub mod pipeline;
pub mod policy;
pub mod pragmatics;
pub mod seed;
pub mod world;

pub use error::{Error, Result};
