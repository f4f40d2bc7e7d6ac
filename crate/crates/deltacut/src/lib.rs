//! File formats, parallel drivers and the `deltacut` command line on top of
//! [`deltacut_core`].

pub mod cli;
pub mod formats;
pub mod parallel;

pub use deltacut_core as core;
