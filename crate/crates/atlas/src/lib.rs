//! Pipeline driver, HTTP service and synthetic corpus for the content atlas.

pub mod config;
pub mod pipeline;
pub mod provenance;
pub mod service;
pub mod synth;

pub use config::AtlasConfig;
pub use pipeline::{Artifacts, Pipeline, Report};
