//! The six-member ensemble: four embedding forests, one landmark forest and an
//! externally scored whole-image classifier, fused with accuracy weights.

mod detect;
mod eval;
mod fusion;
mod model;
mod weights;

pub use detect::{detector_cascade_select, DetectionBundle, FaceBox};
pub use eval::{evaluate, EvalReport, SlotReport};
pub use fusion::fuse;
pub use model::{
    Classification, EnsembleModel, FullImageMode, ImageRecord, Predictor, SlotId,
    WeakPredictorSlot, DEFAULT_WEIGHTS,
};
pub use weights::{estimate_weights, slot_tallies, SlotTally, WeightPolicy};
