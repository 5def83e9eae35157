//! Core library for collaborative building games: voxel world rules, action
//! tapes, dataset ingestion, structure taxonomy and evaluation metrics.

pub mod dataset;
pub mod metrics;
pub mod tape;
pub mod taxonomy;
pub mod voxel;
