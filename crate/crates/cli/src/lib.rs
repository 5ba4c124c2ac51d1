//! Library half of the `nbundle` command: pipelines, output files, plots and
//! the figure checks, kept here so integration tests can drive them directly.

pub mod checks;
pub mod exit;
pub mod output;
pub mod pipeline;
pub mod reproduce;
pub mod svg;
