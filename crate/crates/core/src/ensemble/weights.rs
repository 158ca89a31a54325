use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::argmax;

use super::model::{EnsembleModel, ImageRecord, SlotId};

/// Turns per-slot validation accuracy into a fusion weight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightPolicy {
    /// The raw accuracy.
    #[default]
    Accuracy,
    /// `max(accuracy - 1/3, 0)`: only skill above chance counts.
    AboveChance,
    /// `exp(accuracy / temperature)`, normalized over slots that scored anything.
    Softmax { temperature: f64 },
}

/// How often one slot was right on its own.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotTally {
    pub scored: usize,
    pub correct: usize,
}

impl SlotTally {
    pub fn accuracy(&self) -> Option<f64> {
        (self.scored > 0).then(|| self.correct as f64 / self.scored as f64)
    }
}

/// Per-slot stand-alone accuracy over the labeled records.
pub fn slot_tallies(model: &EnsembleModel, records: &[ImageRecord]) -> Result<[SlotTally; 6]> {
    let per_record: Vec<Vec<(SlotId, bool)>> = records
        .par_iter()
        .filter_map(|r| r.gold.map(|gold| (r, gold)))
        .map(|(r, gold)| {
            r.validate()?;
            Ok(model
                .slot_scores(r)?
                .into_iter()
                .map(|(id, score)| (id, argmax(&score) == gold))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut tallies = [SlotTally::default(); 6];
    for hits in per_record {
        for (id, ok) in hits {
            let t = &mut tallies[id.index()];
            t.scored += 1;
            t.correct += ok as usize;
        }
    }
    Ok(tallies)
}

/// Fusion weights from validation accuracy. Slots that scored no record get
/// weight 0. Weights are not renormalized; `fuse` divides by their sum.
pub fn estimate_weights(
    model: &EnsembleModel,
    validation: &[ImageRecord],
    policy: WeightPolicy,
) -> Result<([f64; 6], [SlotTally; 6])> {
    if validation.is_empty() {
        return Err(Error::EmptyInput("validation records"));
    }
    if validation.iter().all(|r| r.gold.is_none()) {
        return Err(Error::invalid("no validation record carries a gold label"));
    }
    let tallies = slot_tallies(model, validation)?;
    Ok((weights_from_tallies(&tallies, policy)?, tallies))
}

pub(crate) fn weights_from_tallies(tallies: &[SlotTally; 6], policy: WeightPolicy) -> Result<[f64; 6]> {
    let acc = tallies.map(|t| t.accuracy());
    Ok(match policy {
        WeightPolicy::Accuracy => acc.map(|a| a.unwrap_or(0.0)),
        WeightPolicy::AboveChance => acc.map(|a| a.map_or(0.0, |a| (a - 1.0 / 3.0).max(0.0))),
        WeightPolicy::Softmax { temperature } => {
            if !(temperature.is_finite() && temperature > 0.0) {
                return Err(Error::Config(format!("softmax temperature must be positive, got {temperature}")));
            }
            let raw = acc.map(|a| a.map_or(0.0, |a| (a / temperature).exp()));
            let total: f64 = raw.iter().sum();
            if total == 0.0 {
                raw
            } else {
                raw.map(|r| r / total)
            }
        }
    })
}
