//! On-disk formats: feature and score files, split manifests, the run
//! configuration and the model bundle directory.

pub mod bundle;
pub mod config;
pub mod feature_file;
pub mod manifest;

pub use bundle::{load_bundle, save_bundle, Bundle, WeightsSource, BUNDLE_FILE};
pub use config::{Config, SlotWeights};
pub use feature_file::{
    format_feature_file, format_score_file, load_feature_file, load_score_file, parse_feature_file,
    parse_score_file, write_feature_file, write_score_file,
};
pub use manifest::{load_manifest, parse_manifest, Manifest, ManifestEntry, Split};
