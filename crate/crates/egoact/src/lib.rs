//! Modeling an embodied agent from ego-centric observations.
//!
//! The pipeline goes: raw IMU orientation streams are aligned to video
//! frames ([`ingest`]), per-frame-pair relative rotations are quantized
//! into discrete action classes by geodesic K-means ([`codebook`]), and
//! two recurrent models are trained on the resulting labels: an
//! encoder-decoder that predicts future actions from observed frames
//! ([`acting`]) and a planner that connects a start and end observation
//! with an action sequence ([`planning`]). [`sim`] generates synthetic
//! datasets in the same file formats, and [`eval`] holds the metrics and
//! baselines.

pub mod acting;
pub mod codebook;
pub mod config;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod net;
pub mod planning;
pub mod quat;
pub mod sim;

pub const NUM_JOINTS: usize = 6;
