//! Split manifests (TOML).
//!
//! ```toml
//! version = 1
//! split = "validation"            # train | validation | test
//!
//! [dims]                          # optional per-modality widths, default 512/4096/2278
//! landmarks = 2278
//!
//! [[entries]]
//! image_id = "val_0001"
//! label = "Positive"              # Positive | Neutral | Negative; optional for test
//! fullimage_score = "scores/val_0001.score"     # optional
//! [entries.features]
//! avgpool_rgb = "features/val_0001.avgpool_rgb.txt"
//! avgpool_bgr = "features/val_0001.avgpool_bgr.txt"
//! fc7_rgb = "features/val_0001.fc7_rgb.txt"
//! fc7_bgr = "features/val_0001.fc7_bgr.txt"
//! landmarks = "features/val_0001.landmarks.txt"
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Modality;
use crate::label::Label;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub label: Option<Label>,
    pub features: BTreeMap<Modality, PathBuf>,
    pub fullimage_score: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub split: Split,
    /// Expected row width per modality, indexed by [`Modality::index`].
    pub dims: [usize; 5],
    pub entries: Vec<ManifestEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    version: u32,
    split: Split,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    dims: BTreeMap<Modality, usize>,
    #[serde(default)]
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDoc {
    image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fullimage_score: Option<PathBuf>,
    #[serde(default)]
    features: BTreeMap<Modality, PathBuf>,
}

impl Manifest {
    pub fn new(split: Split) -> Self {
        Manifest {
            split,
            dims: Modality::ALL.map(Modality::canonical_dim),
            entries: Vec::new(),
        }
    }

    pub fn dim(&self, modality: Modality) -> usize {
        self.dims[modality.index()]
    }

    /// Serializes with paths made relative to `base` where possible.
    pub fn to_toml(&self, base: &Path) -> String {
        let rel = |p: &Path| p.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf());
        let dims = Modality::ALL
            .into_iter()
            .filter(|m| self.dim(*m) != m.canonical_dim())
            .map(|m| (m, self.dim(m)))
            .collect();
        let doc = ManifestDoc {
            version: MANIFEST_VERSION,
            split: self.split,
            dims,
            entries: self
                .entries
                .iter()
                .map(|e| EntryDoc {
                    image_id: e.image_id.clone(),
                    label: e.label.map(|l| l.name().to_string()),
                    fullimage_score: e.fullimage_score.as_deref().map(rel),
                    features: e.features.iter().map(|(m, p)| (*m, rel(p))).collect(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("manifest serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new("."));
        fs::write(path, self.to_toml(base)).map_err(|e| Error::io(path, e))
    }
}

/// Parses and validates a manifest; `base` resolves relative paths.
pub fn parse_manifest(text: &str, path: &Path, base: &Path, strict: bool) -> Result<Manifest> {
    let err = |message: String| Error::Manifest {
        path: path.to_path_buf(),
        message,
    };
    let doc: ManifestDoc = toml::from_str(text).map_err(|e| err(e.to_string()))?;
    if doc.version != MANIFEST_VERSION {
        return Err(err(format!("unsupported manifest version {}", doc.version)));
    }
    let mut manifest = Manifest::new(doc.split);
    for (m, d) in doc.dims {
        if d == 0 {
            return Err(err(format!("dimension of {m} must be positive")));
        }
        manifest.dims[m.index()] = d;
    }
    let mut seen = HashSet::new();
    for e in doc.entries {
        if !seen.insert(e.image_id.clone()) {
            return Err(err(format!("duplicate image_id `{}`", e.image_id)));
        }
        let label = e
            .label
            .as_deref()
            .map(|s| s.parse::<Label>())
            .transpose()
            .map_err(|_| err(format!("`{}`: unknown label `{}`", e.image_id, e.label.as_deref().unwrap_or(""))))?;
        if label.is_none() && doc.split != Split::Test {
            return Err(err(format!("`{}`: {} entries need a label", e.image_id, doc.split)));
        }
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let entry = ManifestEntry {
            image_id: e.image_id,
            label,
            features: e.features.into_iter().map(|(m, p)| (m, resolve(p))).collect(),
            fullimage_score: e.fullimage_score.map(resolve),
        };
        if strict {
            for p in entry.features.values().chain(entry.fullimage_score.iter()) {
                if !p.is_file() {
                    return Err(err(format!("`{}`: missing file {}", entry.image_id, p.display())));
                }
            }
        }
        manifest.entries.push(entry);
    }
    Ok(manifest)
}

pub fn load_manifest(path: &Path, strict: bool) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, path, base, strict)
}
