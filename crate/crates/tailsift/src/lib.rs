//! Clean/noisy sample separation for noisy-labeled, intrinsically long-tailed
//! datasets.
//!
//! The core is a per-class two-stage selector. Stage one computes two
//! separation metrics for every sample of an observed class: a weighted
//! Jensen-Shannon divergence between the model's prediction and the observed
//! one-hot label (output view), and the cosine similarity between the sample's
//! feature and an adaptively purified class centroid (feature view). Stage two
//! fits a two-component Gaussian mixture on each metric axis, picks the axis
//! with better separability, and picks which of the two clusters is clean.
//!
//! The crate also ships a synthetic-data simulator (long-tailed class counts,
//! symmetric/asymmetric label noise, plausible model outputs) and an
//! evaluation harness that scores selections against ground truth, so the
//! whole pipeline is testable without training a network.
//!
//! Per-class work is data-parallel. With the default `parallel` feature the
//! hot loops run on rayon; without it everything falls back to sequential
//! code with identical results.

pub mod centroids;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod harness;
pub mod metrics;
pub mod mixture;
pub mod report;
pub mod selection;
pub mod simulator;

mod par;

pub use error::{Error, Result};
