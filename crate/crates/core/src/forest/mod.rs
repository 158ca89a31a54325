//! Random forest classifier built from CART trees with Gini splits,
//! bootstrap resampling and per-node feature subsampling.

mod dataset;
mod model;
mod persist;
mod split;
mod tree;

pub use dataset::LabeledDataset;
pub use model::{predict, predict_proba, train_forest, train_forest_serial, ForestParams, RandomForestModel};
pub use persist::{FOREST_FORMAT_VERSION, FOREST_MAGIC};
pub use split::{best_split, gini_impurity, Split};
pub use tree::{grow_tree, Node, Tree};
