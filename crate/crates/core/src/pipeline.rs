//! End-to-end steps shared by the CLI and tests: load records from a
//! manifest, train the five forests, estimate weights, predict, evaluate.

use std::fmt::Write as _;

use log::warn;
use rayon::prelude::*;

use crate::ensemble::{
    estimate_weights, evaluate, slot_tallies, Classification, EnsembleModel, EvalReport,
    ImageRecord, SlotId, SlotReport,
};
use crate::error::{Error, Result};
use crate::forest::{train_forest, LabeledDataset};
use crate::io::{load_feature_file, load_score_file, Bundle, Config, Manifest, WeightsSource};
use crate::label::Label;

/// Reads every feature and score file named by `manifest`.
///
/// A referenced file that does not exist is an error under `strict`;
/// otherwise that modality (or score) is treated as absent for the image.
pub fn load_records(manifest: &Manifest, strict: bool) -> Result<Vec<ImageRecord>> {
    manifest
        .entries
        .par_iter()
        .map(|entry| {
            let mut record = ImageRecord::new(entry.image_id.clone());
            record.gold = entry.label;
            for (&m, path) in &entry.features {
                if !strict && !path.exists() {
                    warn!("{}: {} file {} missing, slot skipped", entry.image_id, m, path.display());
                    continue;
                }
                let matrix = load_feature_file(path, &entry.image_id, Some((m, manifest.dim(m))))?;
                record.faces[m.index()] = Some(matrix);
            }
            if let Some(path) = &entry.fullimage_score {
                if strict || path.exists() {
                    record.fullimage_score = Some(load_score_file(path)?);
                } else {
                    warn!("{}: score file {} missing", entry.image_id, path.display());
                }
            }
            record.validate()?;
            Ok(record)
        })
        .collect()
}

/// Pooled training set for one face slot: one row per labeled image with at
/// least one face and that modality present.
pub fn slot_dataset(
    records: &[ImageRecord],
    slot: SlotId,
    aggregation: crate::features::Aggregation,
) -> Result<LabeledDataset> {
    let modality = slot
        .modality()
        .ok_or_else(|| Error::invalid(format!("{slot} is not a forest slot")))?;
    let rows: Vec<(Vec<f64>, Label)> = records
        .par_iter()
        .filter_map(|r| {
            let gold = r.gold?;
            let faces = r.faces(modality).filter(|f| f.n_rows() > 0)?;
            Some(aggregation.apply(faces).map(|v| (v.values, gold)))
        })
        .collect::<Result<_>>()?;
    let Some(dim) = rows.first().map(|(v, _)| v.len()) else {
        return Err(Error::invalid(format!("no training images with faces for {slot}")));
    };
    let mut ds = LabeledDataset::new(dim);
    for (row, label) in rows {
        ds.push(&row, label)?;
    }
    Ok(ds)
}

/// Trains the five face forests. Weights start from `config.default_weights`.
pub fn train_ensemble(records: &[ImageRecord], config: &Config) -> Result<Bundle> {
    let forests = SlotId::FORESTS
        .iter()
        .map(|&slot| {
            let ds = slot_dataset(records, slot, config.aggregation)?;
            let params = config.forest_params(slot);
            log::info!("training {slot}: {} images x {} features", ds.len(), ds.feature_dim());
            Ok(train_forest(&ds, &params)?.with_modality(slot.modality().unwrap()))
        })
        .collect::<Result<Vec<_>>>()?;
    let model = EnsembleModel::new(
        forests,
        config.default_weights.to_array(),
        config.fullimage_mode,
        config.aggregation,
    )?;
    Ok(Bundle {
        model,
        weight_policy: config.weight_policy,
        weights_source: WeightsSource::Config,
        validation: None,
    })
}

/// Replaces the bundle weights with ones estimated on `validation`.
pub fn fit_weights(bundle: &mut Bundle, validation: &[ImageRecord]) -> Result<()> {
    let (weights, tallies) = estimate_weights(&bundle.model, validation, bundle.weight_policy)?;
    bundle.model.set_weights(weights)?;
    bundle.weights_source = WeightsSource::Validation;
    bundle.validation = Some(tallies);
    Ok(())
}

/// Checks that manifest row widths match what the forests were trained on,
/// for every modality the manifest references.
pub fn check_dims(model: &EnsembleModel, manifest: &Manifest) -> Result<()> {
    for slot in SlotId::FORESTS {
        let m = slot.modality().unwrap();
        if !manifest.entries.iter().any(|e| e.features.contains_key(&m)) {
            continue;
        }
        let forest = model.forest(slot).expect("forest slot");
        if forest.feature_dim() != manifest.dim(m) {
            return Err(Error::Model(format!(
                "{slot} was trained on {} features but the manifest declares {} for {m}",
                forest.feature_dim(),
                manifest.dim(m)
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub image_id: String,
    pub n_faces: usize,
    pub classification: Classification,
}

pub fn predict_records(model: &EnsembleModel, records: &[ImageRecord]) -> Result<Vec<Prediction>> {
    records
        .par_iter()
        .map(|r| {
            Ok(Prediction {
                image_id: r.image_id.clone(),
                n_faces: r.n_faces(),
                classification: model.classify(r)?,
            })
        })
        .collect()
}

/// CSV with one line per image: id, label, the three fused probabilities,
/// face count and the contributing slots joined by `+`.
pub fn predictions_csv(predictions: &[Prediction]) -> String {
    let mut out = String::from("image_id,label,p_positive,p_neutral,p_negative,n_faces,slots\n");
    for p in predictions {
        let c = &p.classification;
        let slots: Vec<&str> = c.slots_used.iter().map(|s| s.tag()).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.image_id,
            c.label,
            c.fused[0],
            c.fused[1],
            c.fused[2],
            p.n_faces,
            slots.join("+")
        );
    }
    out
}

/// Ensemble evaluation plus the stand-alone accuracy of every member.
pub fn evaluate_records(model: &EnsembleModel, records: &[ImageRecord]) -> Result<EvalReport> {
    let gold: Vec<Label> = records
        .iter()
        .map(|r| r.gold.ok_or_else(|| Error::invalid(format!("{} has no gold label", r.image_id))))
        .collect::<Result<_>>()?;
    let predictions = predict_records(model, records)?;
    let labels: Vec<Label> = predictions.iter().map(|p| p.classification.label).collect();
    let mut report = evaluate(&labels, &gold)?;
    report.n_noface_images = predictions.iter().filter(|p| p.n_faces == 0).count();
    let tallies = slot_tallies(model, records)?;
    let weights = model.weights();
    report.slots = SlotId::ALL
        .iter()
        .map(|&s| SlotReport::new(s, weights[s.index()], tallies[s.index()]))
        .collect();
    Ok(report)
}
