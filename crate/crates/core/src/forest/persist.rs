//! Binary forest serialization, version 1. All integers little-endian.
//!
//! ```text
//! magic        8 bytes   "GAFFRST\0"
//! version      u32       1
//! modality     u8        Modality index, 0xFF = unset
//! feature_dim  u64
//! max_depth    u64       u64::MAX = unlimited
//! min_leaf     u64
//! mtry         u64       0 = ceil(sqrt(feature_dim))
//! bootstrap    u8
//! seed         u64
//! fingerprint  32 bytes
//! n_trees      u32
//! per tree:    n_nodes u32, then n_nodes records
//!   leaf:      u8 0, counts 3 x u32
//!   split:     u8 1, feature u32, threshold f64 bits u64, left u32, right u32
//! ```

use crate::error::{Error, Result};
use crate::features::Modality;
use crate::label::NUM_CLASSES;

use super::model::{ForestParams, RandomForestModel};
use super::tree::{Node, Tree};

pub const FOREST_MAGIC: &[u8; 8] = b"GAFFRST\0";
pub const FOREST_FORMAT_VERSION: u32 = 1;

const NO_MODALITY: u8 = 0xFF;

impl RandomForestModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(FOREST_MAGIC);
        out.extend_from_slice(&FOREST_FORMAT_VERSION.to_le_bytes());
        out.push(self.modality.map_or(NO_MODALITY, |m| m.index() as u8));
        put_u64(&mut out, self.feature_dim as u64);
        put_u64(&mut out, self.params.max_depth.map_or(u64::MAX, |d| d as u64));
        put_u64(&mut out, self.params.min_samples_leaf as u64);
        put_u64(&mut out, self.params.mtry.map_or(0, |m| m as u64));
        out.push(self.params.bootstrap as u8);
        put_u64(&mut out, self.params.seed);
        out.extend_from_slice(&self.fingerprint);
        put_u32(&mut out, self.trees.len() as u32);
        for tree in &self.trees {
            put_u32(&mut out, tree.nodes.len() as u32);
            for node in &tree.nodes {
                match *node {
                    Node::Leaf { counts } => {
                        out.push(0);
                        for c in counts {
                            put_u32(&mut out, c);
                        }
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        out.push(1);
                        put_u32(&mut out, feature);
                        put_u64(&mut out, threshold.to_bits());
                        put_u32(&mut out, left);
                        put_u32(&mut out, right);
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != FOREST_MAGIC {
            return Err(Error::Model("not a forest file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FOREST_FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported forest format version {version}"
            )));
        }
        let modality = match r.u8()? {
            NO_MODALITY => None,
            i => Some(
                *Modality::ALL
                    .get(i as usize)
                    .ok_or_else(|| Error::Model(format!("bad modality code {i}")))?,
            ),
        };
        let feature_dim = r.u64()? as usize;
        let max_depth = match r.u64()? {
            u64::MAX => None,
            d => Some(d as usize),
        };
        let min_samples_leaf = r.u64()? as usize;
        let mtry = match r.u64()? {
            0 => None,
            m => Some(m as usize),
        };
        let bootstrap = match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(Error::Model(format!("bad bootstrap flag {b}"))),
        };
        let seed = r.u64()?;
        let fingerprint: [u8; 32] = r.take(32)?.try_into().unwrap();
        let n_trees = r.u32()? as usize;
        if n_trees == 0 {
            return Err(Error::Model("forest has no trees".into()));
        }
        let mut trees = Vec::with_capacity(n_trees.min(1 << 16));
        for _ in 0..n_trees {
            trees.push(read_tree(&mut r, feature_dim)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::Model("trailing bytes after forest".into()));
        }
        Ok(RandomForestModel {
            trees,
            params: ForestParams {
                n_trees,
                max_depth,
                min_samples_leaf,
                mtry,
                bootstrap,
                seed,
            },
            feature_dim,
            modality,
            fingerprint,
        })
    }
}

fn read_tree(r: &mut Reader<'_>, feature_dim: usize) -> Result<Tree> {
    let n_nodes = r.u32()? as usize;
    if n_nodes == 0 {
        return Err(Error::Model("tree has no nodes".into()));
    }
    let mut nodes = Vec::with_capacity(n_nodes.min(1 << 20));
    for i in 0..n_nodes {
        let node = match r.u8()? {
            0 => {
                let mut counts = [0u32; NUM_CLASSES];
                for c in &mut counts {
                    *c = r.u32()?;
                }
                if counts.iter().all(|&c| c == 0) {
                    return Err(Error::Model("empty leaf".into()));
                }
                Node::Leaf { counts }
            }
            1 => {
                let feature = r.u32()?;
                let threshold = f64::from_bits(r.u64()?);
                let left = r.u32()?;
                let right = r.u32()?;
                // children must come after the parent, which also rules out cycles
                let in_range = |c: u32| (c as usize) > i && (c as usize) < n_nodes;
                if feature as usize >= feature_dim || !in_range(left) || !in_range(right) {
                    return Err(Error::Model(format!("corrupt split node {i}")));
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }
            }
            t => return Err(Error::Model(format!("unknown node tag {t}"))),
        };
        nodes.push(node);
    }
    Ok(Tree::from_nodes(nodes))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Model("truncated forest file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{train_forest, LabeledDataset};
    use crate::label::Label;

    fn small_model() -> RandomForestModel {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [i as f64 * 0.3, ((i * 7) % 11) as f64]).collect();
        let labels: Vec<Label> = (0..30).map(|i| Label::ALL[i % 3]).collect();
        let ds = LabeledDataset::from_rows(&rows, &labels).unwrap();
        let p = ForestParams {
            n_trees: 5,
            seed: 11,
            ..Default::default()
        };
        train_forest(&ds, &p).unwrap().with_modality(Modality::Landmarks)
    }

    #[test]
    fn round_trip_is_exact() {
        let m = small_model();
        let bytes = m.to_bytes();
        let back = RandomForestModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = small_model().to_bytes();
        assert_eq!(&bytes[..8], b"GAFFRST\0");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(bytes[12], Modality::Landmarks.index() as u8);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = small_model().to_bytes();
        assert!(RandomForestModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(RandomForestModel::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(RandomForestModel::from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(RandomForestModel::from_bytes(&long).is_err());
    }

    #[test]
    fn self_referencing_split_rejected() {
        let tree = Tree::from_nodes(vec![Node::Split {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
        }]);
        let m = RandomForestModel::from_trees(vec![tree], 1, ForestParams::default()).unwrap();
        assert!(RandomForestModel::from_bytes(&m.to_bytes()).is_err());
    }
}
