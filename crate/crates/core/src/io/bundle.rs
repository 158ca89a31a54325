//! Model bundle directory: `bundle.toml` plus one `<slot>.forest` file per
//! face slot (see [`crate::forest`] for the binary layout).
//!
//! ```toml
//! format_version = 1
//! aggregation = "median"
//! fullimage_mode = "always"
//! weights_source = "validation"     # config | validation
//!
//! [weight_policy]
//! kind = "accuracy"
//!
//! [weights]
//! rf_avgpool_rgb = 0.71
//! ...
//!
//! [forests.rf_avgpool_rgb]
//! file = "rf_avgpool_rgb.forest"
//! fingerprint = "5f1c..."           # SHA-256 of training data + params
//! feature_dim = 512
//! n_trees = 100
//!
//! [validation.rf_avgpool_rgb]       # present once weights were estimated
//! scored = 2065
//! correct = 1448
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleModel, FullImageMode, SlotId, SlotTally, WeightPolicy};
use crate::error::{Error, Result};
use crate::features::Aggregation;
use crate::forest::RandomForestModel;

use super::config::SlotWeights;

pub const BUNDLE_FILE: &str = "bundle.toml";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsSource {
    Config,
    Validation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub model: EnsembleModel,
    pub weight_policy: WeightPolicy,
    pub weights_source: WeightsSource,
    pub validation: Option<[SlotTally; 6]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleDoc {
    format_version: u32,
    aggregation: Aggregation,
    fullimage_mode: FullImageMode,
    weights_source: WeightsSource,
    weight_policy: WeightPolicy,
    weights: SlotWeights,
    forests: BTreeMap<SlotId, ForestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    validation: Option<BTreeMap<SlotId, SlotTally>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestEntry {
    file: String,
    fingerprint: String,
    feature_dim: usize,
    n_trees: usize,
}

fn forest_file(slot: SlotId) -> String {
    format!("{}.forest", slot.tag())
}

pub fn save_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut forests = BTreeMap::new();
    for slot in SlotId::FORESTS {
        let model = bundle.model.forest(slot).expect("forest slot");
        let file = forest_file(slot);
        let path = dir.join(&file);
        fs::write(&path, model.to_bytes()).map_err(|e| Error::io(&path, e))?;
        forests.insert(
            slot,
            ForestEntry {
                file,
                fingerprint: model.fingerprint_hex(),
                feature_dim: model.feature_dim(),
                n_trees: model.trees().len(),
            },
        );
    }
    let doc = BundleDoc {
        format_version: BUNDLE_VERSION,
        aggregation: bundle.model.aggregation,
        fullimage_mode: bundle.model.fullimage_mode,
        weights_source: bundle.weights_source,
        weight_policy: bundle.weight_policy,
        weights: SlotWeights::from_array(bundle.model.weights()),
        forests,
        validation: bundle
            .validation
            .map(|t| SlotId::ALL.into_iter().zip(t).collect()),
    };
    let path = dir.join(BUNDLE_FILE);
    let text = toml::to_string(&doc).expect("bundle serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_bundle(dir: &Path) -> Result<Bundle> {
    let path = dir.join(BUNDLE_FILE);
    if !path.is_file() {
        return Err(Error::MissingModel(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let doc: BundleDoc =
        toml::from_str(&text).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    if doc.format_version != BUNDLE_VERSION {
        return Err(Error::Model(format!(
            "unsupported bundle version {}",
            doc.format_version
        )));
    }
    let mut forests = Vec::with_capacity(SlotId::FORESTS.len());
    for slot in SlotId::FORESTS {
        let entry = doc
            .forests
            .get(&slot)
            .ok_or_else(|| Error::Model(format!("bundle lacks forest {slot}")))?;
        let fpath = dir.join(&entry.file);
        let bytes = fs::read(&fpath).map_err(|e| Error::io(&fpath, e))?;
        let model = RandomForestModel::from_bytes(&bytes)
            .map_err(|e| Error::Model(format!("{}: {e}", fpath.display())))?;
        if model.fingerprint_hex() != entry.fingerprint
            || model.feature_dim() != entry.feature_dim
            || model.trees().len() != entry.n_trees
        {
            return Err(Error::Model(format!(
                "{} does not match its bundle entry",
                fpath.display()
            )));
        }
        forests.push(model);
    }
    let model = EnsembleModel::new(
        forests,
        doc.weights.to_array(),
        doc.fullimage_mode,
        doc.aggregation,
    )?;
    let validation = doc
        .validation
        .map(|v| SlotId::ALL.map(|s| v.get(&s).copied().unwrap_or_default()));
    Ok(Bundle {
        model,
        weight_policy: doc.weight_policy,
        weights_source: doc.weights_source,
        validation,
    })
}
