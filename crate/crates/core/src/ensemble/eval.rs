use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{Label, NUM_CLASSES};

use super::model::SlotId;
use super::weights::SlotTally;

/// Stand-alone performance of one ensemble member on the evaluated split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot: SlotId,
    pub weight: f64,
    pub scored: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

impl SlotReport {
    pub fn new(slot: SlotId, weight: f64, tally: SlotTally) -> Self {
        SlotReport {
            slot,
            weight,
            scored: tally.scored,
            correct: tally.correct,
            accuracy: tally.accuracy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_images: usize,
    pub n_noface_images: usize,
    /// `trace(confusion) / n_images`.
    pub accuracy: f64,
    /// Recall per gold class; `None` when the class never occurs.
    pub per_class_recall: [Option<f64>; NUM_CLASSES],
    /// Rows are gold classes, columns predicted classes.
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
    /// Each row divided by its sum; all-zero rows stay zero.
    pub confusion_normalized: [[f64; NUM_CLASSES]; NUM_CLASSES],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<SlotReport>,
}

/// Accuracy and confusion matrix of `predictions` against `gold`.
pub fn evaluate(predictions: &[Label], gold: &[Label]) -> Result<EvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput("nothing to evaluate"));
    }
    let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
    for (p, g) in predictions.iter().zip(gold) {
        confusion[g.index()][p.index()] += 1;
    }
    let n = predictions.len();
    let trace: u64 = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
    let row_sums = confusion.map(|row| row.iter().sum::<u64>());
    let per_class_recall =
        std::array::from_fn(|c| (row_sums[c] > 0).then(|| confusion[c][c] as f64 / row_sums[c] as f64));
    let confusion_normalized = std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            if row_sums[r] == 0 {
                0.0
            } else {
                confusion[r][c] as f64 / row_sums[r] as f64
            }
        })
    });
    Ok(EvalReport {
        n_images: n,
        n_noface_images: 0,
        accuracy: trace as f64 / n as f64,
        per_class_recall,
        confusion,
        confusion_normalized,
        slots: Vec::new(),
    })
}

fn pct(x: f64) -> String {
    format!("{:.4} ({:.2}%)", x, 100.0 * x)
}

impl EvalReport {
    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|c| self.confusion[c][c]).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad report: {e}")))
    }

    /// Human-readable report: per-member accuracies followed by the confusion matrix.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if !self.slots.is_empty() {
            let _ = writeln!(out, "{:<18} {:>18} {:>8} {:>8}", "Method", "Accuracy", "Scored", "Weight");
            for s in &self.slots {
                let acc = s.accuracy.map_or_else(|| "n/a".to_string(), pct);
                let _ = writeln!(out, "{:<18} {:>18} {:>8} {:>8.4}", s.slot.tag(), acc, s.scored, s.weight);
            }
        }
        let _ = writeln!(out, "{:<18} {:>18} {:>8}", "ensemble", pct(self.accuracy), self.n_images);
        let _ = writeln!(out, "images without faces: {}", self.n_noface_images);
        let _ = writeln!(out);
        let _ = writeln!(out, "Confusion matrix (rows = gold, columns = predicted)");
        let header = |out: &mut String| {
            let _ = write!(out, "{:<10}", "");
            for l in Label::ALL {
                let _ = write!(out, " {:>9}", l.name());
            }
            let _ = writeln!(out, " {:>9}", "Recall");
        };
        header(&mut out);
        for l in Label::ALL {
            let _ = write!(out, "{:<10}", l.name());
            for c in 0..NUM_CLASSES {
                let _ = write!(out, " {:>9}", self.confusion[l.index()][c]);
            }
            let recall = self.per_class_recall[l.index()].map_or_else(|| "n/a".into(), |r| format!("{r:.4}"));
            let _ = writeln!(out, " {recall:>9}");
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Row-normalized");
        header(&mut out);
        for l in Label::ALL {
            let _ = write!(out, "{:<10}", l.name());
            for c in 0..NUM_CLASSES {
                let _ = write!(out, " {:>9.4}", self.confusion_normalized[l.index()][c]);
            }
            let _ = writeln!(out);
        }
        out
    }
}
