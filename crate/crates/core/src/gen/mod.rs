//! Seeded map generators.

pub mod train;
pub mod upf;
