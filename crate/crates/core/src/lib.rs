//! Gaze-scanpath analytics: spatiotemporal fixation encoding, traditional
//! eye-tracking features, and a cross-validated classification pipeline for
//! discriminating reader expertise.
//!
//! The central idea is the discretized vector encoding in [`encoding`]: a
//! trial's fixation sequence is split into contiguous temporal groups, each
//! group's fixations are counted into a spatial grid over the display
//! rectangle, and the per-group grids are flattened into one fixed-length
//! count vector. Those vectors (or the five classical per-trial features in
//! [`features`]) feed PCA/kernel-PCA reduction ([`dimred`]) and four
//! classifier families ([`classifiers`]), evaluated with stratified
//! cross-validation and rank-based AUC ([`evaluation`]).
//!
//! All randomness flows through explicit 64-bit seeds into ChaCha8 streams
//! (`rand_chacha::ChaCha8Rng`), so every result in the pipeline is a pure
//! function of its inputs.

// Validation predicates are written `!(x > 0.0)` so NaN fails them, and the
// numeric kernels index parallel arrays by position.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classifiers;
pub mod data;
pub mod dimred;
pub mod encoding;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod synth;

pub use data::{Dataset, FixationRecord, Label, Rect, SalientMask, Trial};
pub use encoding::{EncodedVector, EncodingConfig};
pub use linalg::Matrix;
