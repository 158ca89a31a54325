use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gaffect::io::{
    format_feature_file, load_bundle, load_manifest, parse_feature_file, save_bundle, Config,
    Manifest, ManifestEntry, Split,
};
use gaffect::pipeline::{evaluate_records, fit_weights, load_records, predict_records, train_ensemble};
use gaffect::synth::{generate, SynthConfig};
use gaffect::{FeatureMatrix, ForestParams, Label, Modality, SlotId};
use proptest::prelude::*;

fn small_synth(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        n_train: 90,
        n_validation: 45,
        ..SynthConfig::default()
    }
}

fn small_config() -> Config {
    let mut config = Config::default();
    for slot in SlotId::FORESTS {
        config.forests.insert(slot, ForestParams { n_trees: 10, ..ForestParams::default() });
    }
    config
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn train_size_manifest_loads() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = Manifest::new(Split::Train);
    let counts = [(Label::Positive, 1272), (Label::Negative, 1159), (Label::Neutral, 1199)];
    for (label, n) in counts {
        for i in 0..n {
            manifest.entries.push(ManifestEntry {
                image_id: format!("{}_{i:04}", label.name()),
                label: Some(label),
                features: Modality::ALL
                    .into_iter()
                    .map(|m| (m, PathBuf::from(format!("features/{}_{i}.{m}.txt", label.name()))))
                    .collect(),
                fullimage_score: Some(PathBuf::from(format!("scores/{}_{i}.score", label.name()))),
            });
        }
    }
    let path = dir.path().join("train.toml");
    manifest.save(&path).unwrap();
    let loaded = load_manifest(&path, false).unwrap();
    assert_eq!(loaded.entries.len(), 3630);
    let mut tally = BTreeMap::new();
    for e in &loaded.entries {
        *tally.entry(e.label.unwrap().index()).or_insert(0) += 1;
    }
    assert_eq!(tally.len(), 3);
    assert_eq!(tally[&Label::Positive.index()], 1272);
    assert_eq!(tally[&Label::Negative.index()], 1159);
    assert_eq!(tally[&Label::Neutral.index()], 1199);
    assert_eq!(loaded.entries[0].features[&Modality::Landmarks], dir.path().join("features/Positive_0.landmarks.txt"));
    // strict mode notices the referenced files do not exist
    assert!(load_manifest(&path, true).is_err());
}

#[test]
fn canonical_feature_file_examples() {
    let p = Path::new("x.txt");
    let row = vec!["0.5"; 512].join(",");
    let text = format!("# gaffect features v1 modality=avgpool_rgb dim=512\n{row}\n{row}\n");
    let m = parse_feature_file(&text, p, "x", Some((Modality::AvgpoolRgb, 512))).unwrap();
    assert_eq!(m.n_rows(), 2);

    let empty = "# gaffect features v1 modality=avgpool_rgb dim=512\n";
    assert_eq!(parse_feature_file(empty, p, "x", None).unwrap().n_rows(), 0);

    let short = vec!["0.5"; 511].join(",");
    let text = format!("# gaffect features v1 modality=avgpool_rgb dim=512\n{row}\n{short}\n");
    let err = parse_feature_file(&text, p, "x", None).unwrap_err();
    assert_eq!(err.to_string(), "x.txt:3: dimension mismatch: expected 512 values, found 511");
}

#[test]
fn bundle_round_trip_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(&small_synth(5), &dir.path().join("fx")).unwrap();
    let train = load_records(&load_manifest(&out.train_manifest, true).unwrap(), true).unwrap();
    let val = load_records(&load_manifest(&out.validation_manifest, true).unwrap(), true).unwrap();

    let mut bundle = train_ensemble(&train, &small_config()).unwrap();
    fit_weights(&mut bundle, &val).unwrap();
    let a = dir.path().join("a");
    save_bundle(&a, &bundle).unwrap();
    let loaded = load_bundle(&a).unwrap();
    assert_eq!(loaded, bundle);

    let before = predict_records(&bundle.model, &val).unwrap();
    let after = predict_records(&loaded.model, &val).unwrap();
    for (x, y) in before.iter().zip(&after) {
        assert_eq!(x.classification.fused.map(f64::to_bits), y.classification.fused.map(f64::to_bits));
    }

    let b = dir.path().join("b");
    save_bundle(&b, &loaded).unwrap();
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&b));

    let r1 = evaluate_records(&loaded.model, &val).unwrap();
    let r2 = evaluate_records(&load_bundle(&b).unwrap().model, &val).unwrap();
    assert_eq!(r1.to_json(), r2.to_json());
    assert_eq!(gaffect::EvalReport::from_json(&r1.to_json()).unwrap(), r1);
}

#[test]
fn missing_bundle_is_a_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_bundle(dir.path()).unwrap_err();
    assert_eq!(err.category(), gaffect::error::Category::Model);
}

#[test]
fn tampered_forest_file_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(&small_synth(6), &dir.path().join("fx")).unwrap();
    let train = load_records(&load_manifest(&out.train_manifest, true).unwrap(), true).unwrap();
    let bundle = train_ensemble(&train, &small_config()).unwrap();
    let b = dir.path().join("b");
    save_bundle(&b, &bundle).unwrap();
    let other = train_ensemble(&train, &Config { seed: 99, ..small_config() }).unwrap();
    let f = b.join("rf_fc7_rgb.forest");
    fs::write(&f, other.model.forest(SlotId::RfFc7Rgb).unwrap().to_bytes()).unwrap();
    assert!(load_bundle(&b).is_err());
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(&small_synth(3), &dir.path().join("a")).unwrap();
    let b = generate(&small_synth(3), &dir.path().join("b")).unwrap();
    assert_eq!(fs::read(&a.train_manifest).unwrap(), fs::read(&b.train_manifest).unwrap());
    let fa = read_dir_bytes(&dir.path().join("a/features"));
    let fb = read_dir_bytes(&dir.path().join("b/features"));
    assert_eq!(fa, fb);
}

proptest! {
    #[test]
    fn feature_file_round_trip(
        rows in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 7), 0..5)
    ) {
        let m = FeatureMatrix::from_rows("img", Modality::Fc7Bgr, 7, rows.clone()).unwrap();
        let text = format_feature_file(&m);
        let back = parse_feature_file(&text, Path::new("f"), "img", Some((Modality::Fc7Bgr, 7))).unwrap();
        prop_assert_eq!(back.n_rows(), rows.len());
        for (i, row) in rows.iter().enumerate() {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(back.row(i)), bits(row));
        }
    }
}
