//! Command-line front end: JSON file formats, result records and the
//! validation suites.

pub mod commands;
pub mod io;
pub mod record;
pub mod solver;
pub mod validate;

pub use commands::run;
