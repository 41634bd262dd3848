//! Command-line front end for the ariadne planner.
//!
//! `ariadne plan` writes a [`PathFile`], `ariadne render` turns a scenario
//! and a path file into SVG, and `ariadne bench` runs seeded experiment
//! sweeps and prints a CSV table.

pub mod commands;
pub mod pathfile;
pub mod render;

pub use pathfile::PathFile;

/// Process exit statuses.
pub mod exit {
    pub const PATH: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const NO_PATH: i32 = 2;
    pub const EXHAUSTED: i32 = 3;
}
