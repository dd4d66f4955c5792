//! Damage-detection digital twin for an axially vibrating structure.
//!
//! The crate simulates a stochastic lumped physics-based model under
//! parametrized spring damage, generates labeled frequency-response
//! datasets, trains discriminant classifiers, and scripts the accuracy
//! and confusion experiments around them. A 40-element finite element
//! bar emulates the physical asset for FRF comparison.

pub mod bar;
pub mod classify;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lumped;
pub mod rng;

pub use error::{Error, Result};
