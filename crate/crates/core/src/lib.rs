//! Knowledge audit registry.
//!
//! Records a project and its inventory of knowledge resources, drives the
//! four-stage audit process as an event-sourced workflow, classifies
//! resources against systems-engineering knowledge taxonomies, exports
//! Dublin Core metadata, scores the five audit questions and produces
//! letters and reports.

pub mod assessment;
pub mod classification;
pub mod comms;
pub mod crosswalk;
pub mod model;
pub mod record;
pub mod reporting;
pub mod storage;
pub mod syntax;
pub mod workflow;
