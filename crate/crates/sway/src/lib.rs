//! Animation authoring engine for SVG data visualizations: SVG parsing,
//! clip generation through a model client, group coordination, timeline
//! composition, export, and session management over HTTP and the CLI.

pub mod api;
pub mod assistant;
pub mod canonical;
pub mod clip_json;
pub mod exporter;
pub mod session;
pub mod svg;

pub use sway_core as core;
