use crate::label::NUM_CLASSES;
use crate::rng::TreeRng;

use super::split::best_split;
use super::{ForestParams, LabeledDataset};

/// Tree node. Samples go to `left` iff `value <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: [u32; NUM_CLASSES],
    },
}

/// A CART tree stored as a flat node array; node 0 is the root and every
/// child index is greater than its parent's.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_counts(&self, x: &[f64]) -> [u32; NUM_CLASSES] {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    /// Class distribution of the leaf reached by `x`.
    pub fn leaf_distribution(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        let counts = self.leaf_counts(x);
        let total: u32 = counts.iter().sum();
        let t = total as f64;
        counts.map(|c| c as f64 / t)
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, left as usize).max(go(nodes, right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

fn class_counts(dataset: &LabeledDataset, samples: &[usize]) -> [u32; NUM_CLASSES] {
    let mut counts = [0u32; NUM_CLASSES];
    for &s in samples {
        counts[dataset.label(s).index()] += 1;
    }
    counts
}

/// Grows one tree on `samples` (indices into `dataset`, repeats allowed).
///
/// Nodes are expanded depth-first, left child before right, and each expanded
/// node draws `mtry` candidate features from `rng`, so the tree is a pure
/// function of its inputs and the stream position.
pub fn grow_tree(
    dataset: &LabeledDataset,
    samples: Vec<usize>,
    params: &ForestParams,
    rng: &mut TreeRng,
) -> Tree {
    assert!(!samples.is_empty(), "grow_tree needs at least one sample");
    let d = dataset.feature_dim();
    let mtry = params.resolved_mtry(d);
    let min_leaf = params.min_samples_leaf.max(1);

    let mut nodes = vec![Node::Leaf { counts: [0; NUM_CLASSES] }];
    let mut stack = vec![(0usize, samples, 0usize)];
    while let Some((slot, samples, depth)) = stack.pop() {
        let counts = class_counts(dataset, &samples);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = params.max_depth.is_some_and(|m| depth >= m);
        if pure || depth_capped || samples.len() < 2 * min_leaf || d == 0 {
            nodes[slot] = Node::Leaf { counts };
            continue;
        }
        let candidates = rng.sample_without_replacement(d, mtry);
        let Some(split) = best_split(dataset, &samples, &candidates, min_leaf) else {
            nodes[slot] = Node::Leaf { counts };
            continue;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| dataset.value(s, split.feature) <= split.threshold);
        let left_slot = nodes.len();
        nodes.push(Node::Leaf { counts: [0; NUM_CLASSES] });
        nodes.push(Node::Leaf { counts: [0; NUM_CLASSES] });
        nodes[slot] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left: left_slot as u32,
            right: left_slot as u32 + 1,
        };
        stack.push((left_slot + 1, right, depth + 1));
        stack.push((left_slot, left, depth + 1));
    }
    Tree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label::{self, *};

    fn params() -> ForestParams {
        ForestParams {
            n_trees: 1,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: None,
            bootstrap: false,
            seed: 0,
        }
    }

    #[test]
    fn pure_input_is_single_leaf() {
        let ds = LabeledDataset::from_rows(&[[0.0], [1.0], [2.0]], &[Neutral; 3]).unwrap();
        let t = grow_tree(&ds, vec![0, 1, 2], &params(), &mut TreeRng::for_tree(0, 0));
        assert_eq!(t.nodes(), &[Node::Leaf { counts: [0, 3, 0] }]);
    }

    #[test]
    fn two_samples_split_into_pure_leaves() {
        let ds = LabeledDataset::from_rows(&[[0.0], [1.0]], &[Positive, Negative]).unwrap();
        let p = ForestParams { mtry: Some(1), ..params() };
        let t = grow_tree(&ds, vec![0, 1], &p, &mut TreeRng::for_tree(0, 0));
        assert_eq!(
            t.nodes(),
            &[
                Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
                Node::Leaf { counts: [1, 0, 0] },
                Node::Leaf { counts: [0, 0, 1] },
            ]
        );
    }

    #[test]
    fn depth_zero_is_single_leaf() {
        let ds = LabeledDataset::from_rows(&[[0.0], [1.0], [2.0]], &[Positive, Neutral, Negative])
            .unwrap();
        let p = ForestParams { max_depth: Some(0), ..params() };
        let t = grow_tree(&ds, vec![0, 1, 2], &p, &mut TreeRng::for_tree(0, 0));
        assert_eq!(t.nodes(), &[Node::Leaf { counts: [1, 1, 1] }]);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn small_nodes_stop_at_twice_min_leaf() {
        let ds = LabeledDataset::from_rows(&[[0.0], [1.0], [2.0]], &[Positive, Neutral, Negative])
            .unwrap();
        let p = ForestParams { min_samples_leaf: 2, ..params() };
        let t = grow_tree(&ds, vec![0, 1, 2], &p, &mut TreeRng::for_tree(0, 0));
        assert_eq!(t.n_leaves(), 1);
    }

    #[test]
    fn leaves_respect_min_samples_leaf() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let labels: Vec<Label> = (0..40).map(|i| Label::ALL[(i * 3 + i / 7) % 3]).collect();
        let ds = LabeledDataset::from_rows(&rows, &labels).unwrap();
        let p = ForestParams { min_samples_leaf: 3, mtry: Some(2), ..params() };
        let t = grow_tree(&ds, (0..40).collect(), &p, &mut TreeRng::for_tree(9, 0));
        for n in t.nodes() {
            if let Node::Leaf { counts } = n {
                assert!(counts.iter().sum::<u32>() >= 3);
            }
        }
    }
}
