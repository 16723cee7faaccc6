//! Concrete models: the top-coded linear model and the 2×2 entry game.

pub mod entry;
pub mod interval;
