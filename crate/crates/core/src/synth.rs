//! Synthetic group-photo fixture with five correlated, noisy face views.
//!
//! Generative model, per image:
//!
//! * class `y` uniform over the three labels, image latent
//!   `z = mu_y + image_noise * N(0, I)`; the class means sit on an equilateral
//!   triangle of side `class_separation` in the first two latent axes, so no
//!   classifier can be perfect;
//! * `n_faces` uniform in `min_faces..=max_faces`, or zero with probability
//!   `noface_rate`; each face `u = z + face_noise * N(0, I)`, and with
//!   probability `outlier_rate` an extra `outlier_scale * N(0, I)` (a badly
//!   detected face);
//! * view `m` of a face is `W_m u + v_m + face_view_noise * N(0, I)`, with a
//!   fixed random projection `W_m` and an image-level corruption
//!   `v_m = view_noise[m] * N(0, I)` shared by all faces of that image but
//!   independent across views. Pooling faces cannot remove `v_m`; fusing
//!   views can;
//! * the whole-image score is `softmax(fullimage_gain * <z, mu_c> / |mu_c| + fullimage_noise * N(0, 1))`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensemble::ImageRecord;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Modality};
use crate::io::feature_file::{write_feature_file, write_score_file};
use crate::io::manifest::{Manifest, ManifestEntry, Split};
use crate::label::{Label, NUM_CLASSES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_validation: usize,
    pub latent_dim: usize,
    /// Row width per modality, in [`Modality::ALL`] order.
    pub dims: [usize; 5],
    pub class_separation: f64,
    pub image_noise: f64,
    pub face_noise: f64,
    pub outlier_rate: f64,
    pub outlier_scale: f64,
    pub min_faces: usize,
    pub max_faces: usize,
    pub noface_rate: f64,
    /// Image-level corruption per modality, in [`Modality::ALL`] order.
    pub view_noise: [f64; 5],
    pub face_view_noise: f64,
    pub fullimage_gain: f64,
    pub fullimage_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 2017,
            n_train: 600,
            n_validation: 300,
            latent_dim: 6,
            dims: [16, 16, 32, 32, 24],
            class_separation: 3.0,
            image_noise: 0.6,
            face_noise: 0.5,
            outlier_rate: 0.0,
            outlier_scale: 0.0,
            min_faces: 1,
            max_faces: 6,
            noface_rate: 0.05,
            view_noise: [1.6, 1.6, 1.8, 1.8, 2.0],
            face_view_noise: 0.5,
            fullimage_gain: 0.8,
            fullimage_noise: 1.5,
        }
    }
}

impl SynthConfig {
    /// Preset where a sizeable share of faces are gross outliers, for
    /// comparing median against mean pooling.
    pub fn heavy_tailed() -> Self {
        SynthConfig {
            outlier_rate: 0.3,
            outlier_scale: 8.0,
            min_faces: 3,
            max_faces: 7,
            ..SynthConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if self.n_train == 0 || self.n_validation == 0 {
            return bad("split sizes must be positive");
        }
        if self.latent_dim < 2 || self.dims.contains(&0) {
            return bad("latent_dim must be at least 2 and all dims positive");
        }
        if self.min_faces == 0 || self.min_faces > self.max_faces {
            return bad("need 1 <= min_faces <= max_faces");
        }
        let rates = [self.outlier_rate, self.noface_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return bad("rates must lie in [0, 1]");
        }
        let scales = [
            self.class_separation,
            self.image_noise,
            self.face_noise,
            self.outlier_scale,
            self.face_view_noise,
            self.fullimage_gain,
            self.fullimage_noise,
        ];
        if scales.iter().chain(&self.view_noise).any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("noise scales must be finite and non-negative");
        }
        Ok(())
    }
}

struct Generator {
    cfg: SynthConfig,
    means: [Vec<f64>; NUM_CLASSES],
    projections: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

impl Generator {
    fn new(cfg: &SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let l = cfg.latent_dim;
        // triangle with side `class_separation` centred on the origin
        let r = cfg.class_separation / 3f64.sqrt();
        let means = std::array::from_fn(|c| {
            let angle = std::f64::consts::FRAC_PI_2 + c as f64 * 2.0 * std::f64::consts::PI / 3.0;
            let mut mu = vec![0.0; l];
            mu[0] = r * angle.cos();
            mu[1] = r * angle.sin();
            mu
        });
        let scale = 1.0 / (l as f64).sqrt();
        let projections = cfg
            .dims
            .iter()
            .map(|&d| (0..d * l).map(|_| normal(&mut rng) * scale).collect())
            .collect();
        Generator {
            cfg: cfg.clone(),
            means,
            projections,
            rng,
        }
    }

    fn image(&mut self, image_id: String) -> ImageRecord {
        let cfg = &self.cfg;
        let l = cfg.latent_dim;
        let label = Label::ALL[self.rng.random_range(0..NUM_CLASSES)];
        let mu = &self.means[label.index()];
        let z: Vec<f64> = mu.iter().map(|m| m + cfg.image_noise * normal(&mut self.rng)).collect();

        let n_faces = if self.rng.random_bool(cfg.noface_rate) {
            0
        } else {
            self.rng.random_range(cfg.min_faces..=cfg.max_faces)
        };
        let faces: Vec<Vec<f64>> = (0..n_faces)
            .map(|_| {
                let outlier = self.rng.random_bool(cfg.outlier_rate);
                z.iter()
                    .map(|zi| {
                        let mut u = zi + cfg.face_noise * normal(&mut self.rng);
                        if outlier {
                            u += cfg.outlier_scale * normal(&mut self.rng);
                        }
                        u
                    })
                    .collect()
            })
            .collect();

        let mut record = ImageRecord::new(image_id.clone()).with_gold(label);
        for m in Modality::ALL {
            let d = cfg.dims[m.index()];
            let w = &self.projections[m.index()];
            let shared: Vec<f64> = (0..d).map(|_| cfg.view_noise[m.index()] * normal(&mut self.rng)).collect();
            let mut matrix = FeatureMatrix::empty(image_id.clone(), m, d);
            for u in &faces {
                let row: Vec<f64> = (0..d)
                    .map(|i| {
                        let proj: f64 = (0..l).map(|k| w[i * l + k] * u[k]).sum();
                        proj + shared[i] + cfg.face_view_noise * normal(&mut self.rng)
                    })
                    .collect();
                matrix.push_row(&row).expect("generated rows are finite");
            }
            record = record.with_faces(matrix);
        }

        let logits: [f64; NUM_CLASSES] = std::array::from_fn(|c| {
            let mu = &self.means[c];
            let norm = mu.iter().map(|x| x * x).sum::<f64>().sqrt();
            let proj = z.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() / norm;
            cfg.fullimage_gain * proj + cfg.fullimage_noise * normal(&mut self.rng)
        });
        record.with_fullimage_score(softmax(&logits))
    }
}

fn softmax(logits: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = logits.map(|x| (x - max).exp());
    let s: f64 = e.iter().sum();
    e.map(|x| x / s)
}

/// In-memory train and validation records.
pub fn generate_records(cfg: &SynthConfig) -> Result<(Vec<ImageRecord>, Vec<ImageRecord>)> {
    cfg.validate()?;
    let mut g = Generator::new(cfg);
    let train = (0..cfg.n_train).map(|i| g.image(format!("train_{i:05}"))).collect();
    let validation = (0..cfg.n_validation).map(|i| g.image(format!("val_{i:05}"))).collect();
    Ok((train, validation))
}

/// Paths of the manifests written by [`generate`].
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub train_manifest: PathBuf,
    pub validation_manifest: PathBuf,
}

/// Writes the fixture as feature/score files plus `train.toml` and `validation.toml`.
pub fn generate(cfg: &SynthConfig, out: &Path) -> Result<SynthOutput> {
    let (train, validation) = generate_records(cfg)?;
    let features = out.join("features");
    let scores = out.join("scores");
    for dir in [out, &features, &scores] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let write_split = |records: &[ImageRecord], split: Split, name: &str| -> Result<PathBuf> {
        let mut manifest = Manifest::new(split);
        manifest.dims = cfg.dims;
        for r in records {
            let mut entry = ManifestEntry {
                image_id: r.image_id.clone(),
                label: r.gold,
                features: Default::default(),
                fullimage_score: None,
            };
            for m in Modality::ALL {
                let path = features.join(format!("{}.{}.txt", r.image_id, m.tag()));
                write_feature_file(&path, r.faces(m).expect("all modalities generated"))?;
                entry.features.insert(m, path);
            }
            if let Some(score) = &r.fullimage_score {
                let path = scores.join(format!("{}.score", r.image_id));
                write_score_file(&path, score)?;
                entry.fullimage_score = Some(path);
            }
            manifest.entries.push(entry);
        }
        let path = out.join(name);
        manifest.save(&path)?;
        Ok(path)
    };
    Ok(SynthOutput {
        train_manifest: write_split(&train, Split::Train, "train.toml")?,
        validation_manifest: write_split(&validation, Split::Validation, "validation.toml")?,
    })
}
