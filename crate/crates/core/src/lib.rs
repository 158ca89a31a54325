//! Group-level emotion recognition from per-face descriptors.
//!
//! Each group photo contributes a variable number of faces. Every face is
//! described by four embedding taps (avgpool/fc7 under RGB and BGR channel
//! order) plus max-normalized landmark distances. Per modality the faces are
//! pooled into one vector by a component-wise median, scored by a random
//! forest, and the five forest scores are fused with an optional whole-image
//! classifier score using accuracy weights. Photos without faces fall back to
//! the whole-image score alone.

pub mod ensemble;
pub mod error;
pub mod features;
pub mod forest;
pub mod io;
pub mod label;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use ensemble::{EnsembleModel, EvalReport, ImageRecord, SlotId};
pub use error::{Error, Result};
pub use features::{Aggregation, FeatureMatrix, FeatureVector, LandmarkSet, Modality};
pub use forest::{ForestParams, LabeledDataset, RandomForestModel};
pub use label::{Label, NUM_CLASSES};
