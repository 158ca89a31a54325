use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::Modality;
use crate::label::{argmax, Label, NUM_CLASSES};
use crate::rng::TreeRng;

use super::tree::{grow_tree, Tree};
use super::LabeledDataset;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until the other stopping rules fire.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(feature_dim))`.
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, feature_dim: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (feature_dim as f64).sqrt().ceil() as usize)
            .min(feature_dim)
    }

    pub fn validate(&self, feature_dim: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if feature_dim == 0 {
            return Err(Error::invalid("dataset has no features"));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > feature_dim {
                return Err(Error::invalid(format!(
                    "mtry must lie in 1..={feature_dim}, got {m}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel {
    pub(crate) trees: Vec<Tree>,
    pub(crate) params: ForestParams,
    pub(crate) feature_dim: usize,
    pub(crate) modality: Option<Modality>,
    pub(crate) fingerprint: [u8; 32],
}

impl RandomForestModel {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn modality(&self) -> Option<Modality> {
        self.modality
    }

    pub fn with_modality(mut self, modality: Modality) -> Self {
        self.modality = Some(modality);
        self
    }

    /// SHA-256 over the training data and parameters.
    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub fn fingerprint_hex(&self) -> String {
        self.fingerprint.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Assembles a model from prebuilt trees, e.g. for tests or importers.
    pub fn from_trees(trees: Vec<Tree>, feature_dim: usize, params: ForestParams) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("a forest needs at least one tree"));
        }
        let params = ForestParams {
            n_trees: trees.len(),
            ..params
        };
        Ok(RandomForestModel {
            trees,
            params,
            feature_dim,
            modality: None,
            fingerprint: [0; 32],
        })
    }
}

fn fingerprint(dataset: &LabeledDataset, params: &ForestParams) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"gaffect-forest-fingerprint-v1");
    h.update((dataset.feature_dim() as u64).to_le_bytes());
    h.update((dataset.len() as u64).to_le_bytes());
    for i in 0..dataset.len() {
        h.update([dataset.label(i) as u8]);
        for v in dataset.row(i) {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.update((params.n_trees as u64).to_le_bytes());
    h.update(params.max_depth.map_or(u64::MAX, |d| d as u64).to_le_bytes());
    h.update((params.min_samples_leaf as u64).to_le_bytes());
    h.update(params.mtry.map_or(0, |m| m as u64).to_le_bytes());
    h.update([params.bootstrap as u8]);
    h.update(params.seed.to_le_bytes());
    h.finalize().into()
}

fn build_tree(dataset: &LabeledDataset, params: &ForestParams, tree_index: usize) -> Tree {
    let mut rng = TreeRng::for_tree(params.seed, tree_index as u64);
    let n = dataset.len();
    let samples = if params.bootstrap {
        (0..n).map(|_| rng.below(n)).collect()
    } else {
        (0..n).collect()
    };
    grow_tree(dataset, samples, params, &mut rng)
}

fn check_training_input(dataset: &LabeledDataset, params: &ForestParams) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    params.validate(dataset.feature_dim())
}

/// Trains `params.n_trees` trees in parallel. Each tree draws from its own
/// stream keyed by `(seed, tree_index)`, so the result equals
/// [`train_forest_serial`] bit for bit.
pub fn train_forest(dataset: &LabeledDataset, params: &ForestParams) -> Result<RandomForestModel> {
    check_training_input(dataset, params)?;
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| build_tree(dataset, params, t))
        .collect();
    Ok(assemble(dataset, params, trees))
}

pub fn train_forest_serial(
    dataset: &LabeledDataset,
    params: &ForestParams,
) -> Result<RandomForestModel> {
    check_training_input(dataset, params)?;
    let trees = (0..params.n_trees)
        .map(|t| build_tree(dataset, params, t))
        .collect();
    Ok(assemble(dataset, params, trees))
}

fn assemble(dataset: &LabeledDataset, params: &ForestParams, trees: Vec<Tree>) -> RandomForestModel {
    RandomForestModel {
        trees,
        params: params.clone(),
        feature_dim: dataset.feature_dim(),
        modality: None,
        fingerprint: fingerprint(dataset, params),
    }
}

/// Mean of the per-tree leaf class distributions.
pub fn predict_proba(model: &RandomForestModel, x: &[f64]) -> Result<[f64; NUM_CLASSES]> {
    if x.len() != model.feature_dim {
        return Err(Error::invalid(format!(
            "probe has {} features, model expects {}",
            x.len(),
            model.feature_dim
        )));
    }
    let mut acc = [0.0; NUM_CLASSES];
    for tree in &model.trees {
        let dist = tree.leaf_distribution(x);
        for c in 0..NUM_CLASSES {
            acc[c] += dist[c];
        }
    }
    let n = model.trees.len() as f64;
    Ok(acc.map(|a| a / n))
}

pub fn predict(model: &RandomForestModel, x: &[f64]) -> Result<Label> {
    predict_proba(model, x).map(|p| argmax(&p))
}

#[cfg(test)]
mod tests {
    use super::super::Node;
    use super::*;

    fn leaf_tree(counts: [u32; 3]) -> Tree {
        Tree::from_nodes(vec![Node::Leaf { counts }])
    }

    #[test]
    fn pure_leaf_forest() {
        let m = RandomForestModel::from_trees(vec![leaf_tree([5, 0, 0])], 2, ForestParams::default())
            .unwrap();
        assert_eq!(predict_proba(&m, &[0.0, 0.0]).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(predict(&m, &[0.0, 0.0]).unwrap(), Label::Positive);
    }

    #[test]
    fn two_tree_average() {
        let m = RandomForestModel::from_trees(
            vec![leaf_tree([3, 0, 0]), leaf_tree([0, 4, 0])],
            1,
            ForestParams::default(),
        )
        .unwrap();
        assert_eq!(predict_proba(&m, &[0.0]).unwrap(), [0.5, 0.5, 0.0]);
        assert_eq!(predict(&m, &[0.0]).unwrap(), Label::Positive);
    }

    #[test]
    fn count_normalization() {
        let m = RandomForestModel::from_trees(vec![leaf_tree([2, 1, 1])], 1, ForestParams::default())
            .unwrap();
        assert_eq!(predict_proba(&m, &[0.0]).unwrap(), [0.5, 0.25, 0.25]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = RandomForestModel::from_trees(vec![leaf_tree([1, 0, 0])], 3, ForestParams::default())
            .unwrap();
        assert!(matches!(predict_proba(&m, &[0.0]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = LabeledDataset::new(4);
        assert!(matches!(
            train_forest(&ds, &ForestParams::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn bad_params_rejected() {
        let ds = LabeledDataset::from_rows(&[[0.0, 1.0]], &[Label::Neutral]).unwrap();
        for p in [
            ForestParams { n_trees: 0, ..Default::default() },
            ForestParams { mtry: Some(3), ..Default::default() },
            ForestParams { mtry: Some(0), ..Default::default() },
            ForestParams { min_samples_leaf: 0, ..Default::default() },
        ] {
            assert!(train_forest(&ds, &p).is_err(), "{p:?}");
        }
    }

    #[test]
    fn default_mtry_is_ceil_sqrt() {
        let p = ForestParams::default();
        assert_eq!(p.resolved_mtry(512), 23);
        assert_eq!(p.resolved_mtry(4096), 64);
        assert_eq!(p.resolved_mtry(2278), 48);
        assert_eq!(p.resolved_mtry(1), 1);
    }
}
