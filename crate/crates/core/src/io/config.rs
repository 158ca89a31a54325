//! Run configuration (TOML). Every key is optional:
//!
//! ```toml
//! seed = 7
//! aggregation = "median"            # median | mean
//! fullimage_mode = "always"         # always | fallback_only
//! weight_policy = { kind = "accuracy" }   # accuracy | above_chance | softmax (+ temperature)
//!
//! [default_weights]                 # used until `weights` estimates real ones
//! rf_avgpool_bgr = 0.7011
//!
//! [forests.rf_fc7_rgb]              # ForestParams per slot
//! n_trees = 200
//! mtry = 64
//!
//! [synth]                           # synthetic fixture generator
//! n_train = 600
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{FullImageMode, SlotId, WeightPolicy, DEFAULT_WEIGHTS};
use crate::error::{Error, Result};
use crate::features::Aggregation;
use crate::forest::ForestParams;
use crate::rng::mix64;
use crate::synth::SynthConfig;

/// One weight per ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlotWeights {
    pub rf_avgpool_rgb: f64,
    pub rf_avgpool_bgr: f64,
    pub rf_fc7_rgb: f64,
    pub rf_fc7_bgr: f64,
    pub rf_landmarks: f64,
    pub fullimage_cnn: f64,
}

impl SlotWeights {
    pub fn from_array(w: [f64; 6]) -> Self {
        SlotWeights {
            rf_avgpool_rgb: w[0],
            rf_avgpool_bgr: w[1],
            rf_fc7_rgb: w[2],
            rf_fc7_bgr: w[3],
            rf_landmarks: w[4],
            fullimage_cnn: w[5],
        }
    }

    /// In [`SlotId::ALL`] order.
    pub fn to_array(self) -> [f64; 6] {
        [
            self.rf_avgpool_rgb,
            self.rf_avgpool_bgr,
            self.rf_fc7_rgb,
            self.rf_fc7_bgr,
            self.rf_landmarks,
            self.fullimage_cnn,
        ]
    }
}

impl Default for SlotWeights {
    fn default() -> Self {
        SlotWeights::from_array(DEFAULT_WEIGHTS)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub aggregation: Aggregation,
    pub fullimage_mode: FullImageMode,
    pub weight_policy: WeightPolicy,
    pub default_weights: SlotWeights,
    pub forests: BTreeMap<SlotId, ForestParams>,
    pub synth: SynthConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Forest parameters for `slot`. The effective seed mixes the global seed
    /// with the slot index and the slot's own `seed`, so the five forests
    /// never share a random stream.
    pub fn forest_params(&self, slot: SlotId) -> ForestParams {
        let mut p = self.forests.get(&slot).cloned().unwrap_or_default();
        p.seed ^= mix64(self.seed.wrapping_add(slot.index() as u64));
        p
    }
}
