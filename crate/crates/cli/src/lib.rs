//! Command-line harness around `lowrank-core`: run configuration, CSV
//! report writing, PGM/PPM image handling, and the experiment runners.

pub mod config;
pub mod csv;
pub mod experiments;
pub mod pixmap;
pub mod report;
