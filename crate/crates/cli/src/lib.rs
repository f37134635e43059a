//! Command-line front end: settings, tabular and image output, and one
//! pipeline per subcommand.

pub mod app;
pub mod error;
pub mod pipelines;
pub mod render;
pub mod settings;
pub mod tables;
