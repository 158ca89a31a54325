use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Aggregation, FeatureMatrix, Modality};
use crate::forest::{predict_proba, RandomForestModel};
use crate::label::{argmax, Label, NUM_CLASSES};

use super::fusion::{check_distribution, fuse};

/// One ensemble member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotId {
    RfAvgpoolRgb,
    RfAvgpoolBgr,
    RfFc7Rgb,
    RfFc7Bgr,
    RfLandmarks,
    FullimageCnn,
}

impl SlotId {
    pub const ALL: [SlotId; 6] = [
        SlotId::RfAvgpoolRgb,
        SlotId::RfAvgpoolBgr,
        SlotId::RfFc7Rgb,
        SlotId::RfFc7Bgr,
        SlotId::RfLandmarks,
        SlotId::FullimageCnn,
    ];

    pub const FORESTS: [SlotId; 5] = [
        SlotId::RfAvgpoolRgb,
        SlotId::RfAvgpoolBgr,
        SlotId::RfFc7Rgb,
        SlotId::RfFc7Bgr,
        SlotId::RfLandmarks,
    ];

    /// Face modality scored by this slot; `None` for the whole-image classifier.
    pub fn modality(self) -> Option<Modality> {
        match self {
            SlotId::RfAvgpoolRgb => Some(Modality::AvgpoolRgb),
            SlotId::RfAvgpoolBgr => Some(Modality::AvgpoolBgr),
            SlotId::RfFc7Rgb => Some(Modality::Fc7Rgb),
            SlotId::RfFc7Bgr => Some(Modality::Fc7Bgr),
            SlotId::RfLandmarks => Some(Modality::Landmarks),
            SlotId::FullimageCnn => None,
        }
    }

    pub fn for_modality(modality: Modality) -> SlotId {
        SlotId::FORESTS[modality.index()]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn tag(self) -> &'static str {
        match self {
            SlotId::RfAvgpoolRgb => "rf_avgpool_rgb",
            SlotId::RfAvgpoolBgr => "rf_avgpool_bgr",
            SlotId::RfFc7Rgb => "rf_fc7_rgb",
            SlotId::RfFc7Bgr => "rf_fc7_bgr",
            SlotId::RfLandmarks => "rf_landmarks",
            SlotId::FullimageCnn => "fullimage_cnn",
        }
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SlotId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SlotId::ALL
            .into_iter()
            .find(|id| id.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown slot `{s}`")))
    }
}

/// Validation accuracies of the published ensemble members, in [`SlotId::ALL`] order.
pub const DEFAULT_WEIGHTS: [f64; 6] = [0.6978, 0.7011, 0.6762, 0.6818, 0.6516, 0.6589];

/// When the whole-image classifier takes part in fusion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullImageMode {
    /// Fused with the face slots whenever its score is present.
    #[default]
    Always,
    /// Used only for images without faces.
    FallbackOnly,
}

impl FromStr for FullImageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "always" => Ok(FullImageMode::Always),
            "fallback_only" => Ok(FullImageMode::FallbackOnly),
            other => Err(Error::invalid(format!("unknown full-image mode `{other}`"))),
        }
    }
}

impl fmt::Display for FullImageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FullImageMode::Always => "always",
            FullImageMode::FallbackOnly => "fallback_only",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Forest(RandomForestModel),
    /// Scores arrive precomputed with each image record.
    ExternalScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakPredictorSlot {
    pub id: SlotId,
    pub predictor: Predictor,
    pub weight: f64,
}

/// Everything known about one group photo.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    /// Indexed by [`Modality::index`]. `None` means the modality file is missing
    /// for this image; the matching slot then sits this image out.
    pub faces: [Option<FeatureMatrix>; 5],
    pub fullimage_score: Option<[f64; NUM_CLASSES]>,
    pub gold: Option<Label>,
}

impl ImageRecord {
    pub fn new(image_id: impl Into<String>) -> Self {
        ImageRecord {
            image_id: image_id.into(),
            faces: Default::default(),
            fullimage_score: None,
            gold: None,
        }
    }

    pub fn with_faces(mut self, matrix: FeatureMatrix) -> Self {
        let i = matrix.modality().index();
        self.faces[i] = Some(matrix);
        self
    }

    pub fn with_fullimage_score(mut self, score: [f64; NUM_CLASSES]) -> Self {
        self.fullimage_score = Some(score);
        self
    }

    pub fn with_gold(mut self, label: Label) -> Self {
        self.gold = Some(label);
        self
    }

    pub fn faces(&self, modality: Modality) -> Option<&FeatureMatrix> {
        self.faces[modality.index()].as_ref()
    }

    /// Face count shared by all present modalities (0 when none is present).
    pub fn n_faces(&self) -> usize {
        self.faces.iter().flatten().map(FeatureMatrix::n_rows).next().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_faces();
        for (i, m) in self.faces.iter().enumerate() {
            if let Some(m) = m {
                if m.modality().index() != i {
                    return Err(Error::invalid(format!(
                        "{}: {} matrix stored under the wrong modality",
                        self.image_id,
                        m.modality()
                    )));
                }
                if m.n_rows() != n {
                    return Err(Error::invalid(format!(
                        "{}: {} has {} faces, other modalities have {n}",
                        self.image_id,
                        m.modality(),
                        m.n_rows()
                    )));
                }
            }
        }
        if let Some(score) = &self.fullimage_score {
            check_distribution(score)
                .map_err(|_| Error::invalid(format!("{}: bad full-image score {score:?}", self.image_id)))?;
        }
        Ok(())
    }
}

/// Outcome of [`EnsembleModel::classify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: Label,
    pub fused: [f64; NUM_CLASSES],
    pub slots_used: Vec<SlotId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    slots: Vec<WeakPredictorSlot>,
    pub fullimage_mode: FullImageMode,
    pub aggregation: Aggregation,
}

impl EnsembleModel {
    /// Builds the full six-slot ensemble. `forests` must hold one model per
    /// face modality in [`SlotId::FORESTS`] order.
    pub fn new(
        forests: Vec<RandomForestModel>,
        weights: [f64; 6],
        fullimage_mode: FullImageMode,
        aggregation: Aggregation,
    ) -> Result<Self> {
        if forests.len() != SlotId::FORESTS.len() {
            return Err(Error::Model(format!(
                "expected {} forests, got {}",
                SlotId::FORESTS.len(),
                forests.len()
            )));
        }
        let mut slots: Vec<WeakPredictorSlot> = forests
            .into_iter()
            .zip(SlotId::FORESTS)
            .map(|(model, id)| {
                let modality = id.modality().unwrap();
                match model.modality() {
                    Some(m) if m != modality => Err(Error::Model(format!(
                        "slot {id} got a forest trained on {m}"
                    ))),
                    _ => Ok(WeakPredictorSlot {
                        id,
                        predictor: Predictor::Forest(model.with_modality(modality)),
                        weight: 0.0,
                    }),
                }
            })
            .collect::<Result<_>>()?;
        slots.push(WeakPredictorSlot {
            id: SlotId::FullimageCnn,
            predictor: Predictor::ExternalScore,
            weight: 0.0,
        });
        let mut model = EnsembleModel {
            slots,
            fullimage_mode,
            aggregation,
        };
        model.set_weights(weights)?;
        Ok(model)
    }

    pub fn slots(&self) -> &[WeakPredictorSlot] {
        &self.slots
    }

    pub fn forest(&self, id: SlotId) -> Option<&RandomForestModel> {
        match &self.slots[id.index()].predictor {
            Predictor::Forest(m) => Some(m),
            Predictor::ExternalScore => None,
        }
    }

    pub fn weights(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.slots[i].weight)
    }

    pub fn set_weights(&mut self, weights: [f64; 6]) -> Result<()> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Model(format!("weights must be finite and non-negative: {weights:?}")));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::NoUsablePredictor);
        }
        for (slot, w) in self.slots.iter_mut().zip(weights) {
            slot.weight = w;
        }
        Ok(())
    }

    /// Scores from every slot able to score `record`, ignoring weights and
    /// the full-image mode. Face slots need at least one face and their
    /// modality file; the whole-image slot needs its score.
    pub fn slot_scores(&self, record: &ImageRecord) -> Result<Vec<(SlotId, [f64; NUM_CLASSES])>> {
        let mut out = Vec::with_capacity(6);
        if record.n_faces() > 0 {
            for slot in &self.slots {
                let (Predictor::Forest(forest), Some(modality)) = (&slot.predictor, slot.id.modality())
                else {
                    continue;
                };
                if let Some(faces) = record.faces(modality) {
                    let pooled = self.aggregation.apply(faces)?;
                    out.push((slot.id, predict_proba(forest, &pooled.values)?));
                }
            }
        }
        if let Some(score) = record.fullimage_score {
            out.push((SlotId::FullimageCnn, score));
        }
        Ok(out)
    }

    /// Ensemble decision for one image.
    ///
    /// With no faces the whole-image score decides alone (its weight is
    /// irrelevant). Otherwise every available slot with positive weight is
    /// fused; the whole-image slot joins only in [`FullImageMode::Always`].
    pub fn classify(&self, record: &ImageRecord) -> Result<Classification> {
        record.validate()?;
        if record.n_faces() == 0 {
            let score = record
                .fullimage_score
                .ok_or_else(|| Error::Unclassifiable(record.image_id.clone()))?;
            return Ok(Classification {
                label: argmax(&score),
                fused: score,
                slots_used: vec![SlotId::FullimageCnn],
            });
        }
        let available: Vec<_> = self
            .slot_scores(record)?
            .into_iter()
            .filter(|(id, _)| {
                *id != SlotId::FullimageCnn || self.fullimage_mode == FullImageMode::Always
            })
            .collect();
        if available.is_empty() {
            return Err(Error::Unclassifiable(record.image_id.clone()));
        }
        let weighted: Vec<_> = available
            .iter()
            .map(|(id, s)| (*s, self.slots[id.index()].weight))
            .collect();
        let fused = fuse(&weighted)?;
        let slots_used = available
            .iter()
            .filter(|(id, _)| self.slots[id.index()].weight > 0.0)
            .map(|(id, _)| *id)
            .collect();
        Ok(Classification {
            label: argmax(&fused),
            fused,
            slots_used,
        })
    }
}
