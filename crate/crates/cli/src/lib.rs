//! Command-line front end: CSV input, SVG charts, and the reference scenarios.

pub mod commands;
pub mod io;
pub mod render;
pub mod scenarios;
