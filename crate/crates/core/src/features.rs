//! Per-face feature construction and per-image face pooling.
//!
//! Landmark features are the unique pairwise Euclidean distances between the
//! 68 facial landmarks, emitted in lexicographic `(i, j)`, `i < j` order and
//! divided by their maximum. Deep-embedding features arrive precomputed from
//! the extraction toolchain. Either way, an image with several faces yields an
//! `n_faces x d` [`FeatureMatrix`] per modality, which [`Aggregation`] collapses
//! into one fixed-size vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of facial landmarks produced by the 68-point shape model.
pub const LANDMARK_COUNT: usize = 68;

/// `C(68, 2)`.
pub const LANDMARK_DISTANCE_DIM: usize = LANDMARK_COUNT * (LANDMARK_COUNT - 1) / 2;

pub const AVGPOOL_DIM: usize = 512;
pub const FC7_DIM: usize = 4096;

/// One face descriptor family. The first four are embedding taps of the
/// face-identification network under both channel orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    AvgpoolRgb,
    AvgpoolBgr,
    Fc7Rgb,
    Fc7Bgr,
    Landmarks,
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::AvgpoolRgb,
        Modality::AvgpoolBgr,
        Modality::Fc7Rgb,
        Modality::Fc7Bgr,
        Modality::Landmarks,
    ];

    /// Vector length of this modality in the production pipeline.
    pub fn canonical_dim(self) -> usize {
        match self {
            Modality::AvgpoolRgb | Modality::AvgpoolBgr => AVGPOOL_DIM,
            Modality::Fc7Rgb | Modality::Fc7Bgr => FC7_DIM,
            Modality::Landmarks => LANDMARK_DISTANCE_DIM,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Modality::AvgpoolRgb => "avgpool_rgb",
            Modality::AvgpoolBgr => "avgpool_bgr",
            Modality::Fc7Rgb => "fc7_rgb",
            Modality::Fc7Bgr => "fc7_bgr",
            Modality::Landmarks => "landmarks",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Modality::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown modality `{s}`")))
    }
}

/// 68 landmark coordinates in pixel units.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<[f64; 2]>,
}

impl LandmarkSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::invalid(format!(
                "expected {LANDMARK_COUNT} landmarks, got {}",
                points.len()
            )));
        }
        check_finite_points(&points)?;
        Ok(LandmarkSet { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }
}

fn check_finite_points(points: &[[f64; 2]]) -> Result<()> {
    match points
        .iter()
        .position(|p| !(p[0].is_finite() && p[1].is_finite()))
    {
        Some(i) => Err(Error::invalid(format!("landmark {i} has a non-finite coordinate"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub modality: Modality,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(modality: Modality, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature {i} is not finite")));
        }
        Ok(FeatureVector { modality, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Face descriptors of one modality for one image, stored row-major.
/// Zero rows is a legal state: no face was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub image_id: String,
    modality: Modality,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn empty(image_id: impl Into<String>, modality: Modality, dim: usize) -> Self {
        FeatureMatrix {
            image_id: image_id.into(),
            modality,
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_rows(
        image_id: impl Into<String>,
        modality: Modality,
        dim: usize,
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<Self> {
        let mut m = FeatureMatrix::empty(image_id, modality, dim);
        for row in rows {
            m.push_row(&row)?;
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::invalid(format!(
                "{} row has {} values, expected {}",
                self.modality,
                row.len(),
                self.dim
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature row contains a non-finite value"));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

/// Euclidean distances for every unordered point pair, `(0,1), (0,2), ..., (n-2,n-1)`.
pub fn pairwise_distances(points: &[[f64; 2]]) -> Result<Vec<f64>> {
    check_finite_points(points)?;
    let n = points.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            out.push((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    Ok(out)
}

/// Raw (unnormalized) landmark distance vector of length 2278.
pub fn pairwise_landmark_distances(landmarks: &LandmarkSet) -> Result<FeatureVector> {
    let values = pairwise_distances(landmarks.points())?;
    debug_assert_eq!(values.len(), LANDMARK_DISTANCE_DIM);
    Ok(FeatureVector {
        modality: Modality::Landmarks,
        values,
    })
}

/// Divides every distance by the largest one, making the vector independent of face size.
pub fn normalize_by_max(raw: &FeatureVector) -> Result<FeatureVector> {
    check_distances(raw)?;
    let max = raw.values.iter().copied().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(FeatureVector {
        modality: raw.modality,
        values: raw.values.iter().map(|d| d / max).collect(),
    })
}

/// Mean-distance normalization. Kept for comparison runs only.
pub fn normalize_by_mean(raw: &FeatureVector) -> Result<FeatureVector> {
    check_distances(raw)?;
    let mean = raw.values.iter().sum::<f64>() / raw.values.len() as f64;
    if mean == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    Ok(FeatureVector {
        modality: raw.modality,
        values: raw.values.iter().map(|d| d / mean).collect(),
    })
}

fn check_distances(raw: &FeatureVector) -> Result<()> {
    if raw.values.is_empty() {
        return Err(Error::EmptyInput("distance vector"));
    }
    if raw.values.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::invalid("distances must be finite and non-negative"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkNormalization {
    #[default]
    Max,
    Mean,
}

/// Normalized landmark descriptor for one face.
pub fn landmark_features(
    landmarks: &LandmarkSet,
    normalization: LandmarkNormalization,
) -> Result<FeatureVector> {
    let raw = pairwise_landmark_distances(landmarks)?;
    match normalization {
        LandmarkNormalization::Max => normalize_by_max(&raw),
        LandmarkNormalization::Mean => normalize_by_mean(&raw),
    }
}

/// How per-face rows are pooled into one image descriptor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Median,
    Mean,
}

impl Aggregation {
    pub fn apply(self, faces: &FeatureMatrix) -> Result<FeatureVector> {
        match self {
            Aggregation::Median => aggregate_median(faces),
            Aggregation::Mean => aggregate_mean(faces),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Median => "median",
            Aggregation::Mean => "mean",
        })
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Aggregation::Median),
            "mean" => Ok(Aggregation::Mean),
            other => Err(Error::invalid(format!("unknown aggregation `{other}`"))),
        }
    }
}

/// Component-wise median. Even row counts take the mean of the two middle values.
pub fn aggregate_median(faces: &FeatureMatrix) -> Result<FeatureVector> {
    pool_columns(faces, |col| {
        let n = col.len();
        if n % 2 == 1 {
            col[n / 2]
        } else {
            (col[n / 2 - 1] + col[n / 2]) / 2.0
        }
    })
}

/// Component-wise arithmetic mean.
pub fn aggregate_mean(faces: &FeatureMatrix) -> Result<FeatureVector> {
    // summing the sorted column keeps the result independent of row order
    pool_columns(faces, |col| col.iter().sum::<f64>() / col.len() as f64)
}

fn pool_columns(faces: &FeatureMatrix, reduce: impl Fn(&[f64]) -> f64) -> Result<FeatureVector> {
    let n = faces.n_rows();
    if n == 0 {
        return Err(Error::EmptyInput("feature matrix has no rows"));
    }
    let mut col = vec![0.0; n];
    let values = (0..faces.dim())
        .map(|j| {
            for (slot, row) in col.iter_mut().zip(faces.rows()) {
                *slot = row[j];
            }
            col.sort_unstable_by(f64::total_cmp);
            reduce(&col)
        })
        .collect();
    Ok(FeatureVector {
        modality: faces.modality(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> FeatureMatrix {
        let dim = rows.first().map_or(0, |r| r.len());
        FeatureMatrix::from_rows("img", Modality::AvgpoolRgb, dim, rows.iter().map(|r| r.to_vec()))
            .unwrap()
    }

    #[test]
    fn distance_dim_is_c68_2() {
        assert_eq!(LANDMARK_DISTANCE_DIM, 2278);
        let pts: Vec<[f64; 2]> = (0..68).map(|i| [i as f64, (i * i) as f64 * 0.1]).collect();
        let v = pairwise_landmark_distances(&LandmarkSet::new(pts).unwrap()).unwrap();
        assert_eq!(v.len(), 2278);
        assert_eq!(v.modality, Modality::Landmarks);
    }

    #[test]
    fn three_point_kernel_order() {
        let d = pairwise_distances(&[[0.0, 0.0], [3.0, 0.0], [6.0, 0.0]]).unwrap();
        assert_eq!(d, vec![3.0, 6.0, 3.0]);
    }

    #[test]
    fn coincident_landmarks_give_zero_vector_then_degenerate() {
        let set = LandmarkSet::new(vec![[4.0, 2.0]; 68]).unwrap();
        let raw = pairwise_landmark_distances(&set).unwrap();
        assert_eq!(raw.values, vec![0.0; 2278]);
        assert!(matches!(normalize_by_max(&raw), Err(Error::DegenerateGeometry)));
        assert!(matches!(
            landmark_features(&set, LandmarkNormalization::Max),
            Err(Error::DegenerateGeometry)
        ));
    }

    #[test]
    fn non_finite_landmark_rejected() {
        let mut pts = vec![[1.0, 1.0]; 68];
        pts[10] = [f64::NAN, 0.0];
        assert!(matches!(LandmarkSet::new(pts), Err(Error::InvalidInput(_))));
        assert!(pairwise_distances(&[[0.0, 0.0], [f64::INFINITY, 1.0]]).is_err());
        assert!(LandmarkSet::new(vec![[0.0, 0.0]; 67]).is_err());
    }

    #[test]
    fn max_normalization_examples() {
        let v = FeatureVector::new(Modality::Landmarks, vec![3.0, 6.0, 3.0]).unwrap();
        assert_eq!(normalize_by_max(&v).unwrap().values, vec![0.5, 1.0, 0.5]);
        let v = FeatureVector::new(Modality::Landmarks, vec![5.0]).unwrap();
        assert_eq!(normalize_by_max(&v).unwrap().values, vec![1.0]);
        let v = FeatureVector::new(Modality::Landmarks, vec![0.0; 3]).unwrap();
        assert!(matches!(normalize_by_max(&v), Err(Error::DegenerateGeometry)));
        let v = FeatureVector::new(Modality::Landmarks, vec![1.0, -1.0]).unwrap();
        assert!(matches!(normalize_by_max(&v), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn mean_normalization_variant() {
        let v = FeatureVector::new(Modality::Landmarks, vec![3.0, 6.0, 3.0]).unwrap();
        assert_eq!(normalize_by_mean(&v).unwrap().values, vec![0.75, 1.5, 0.75]);
    }

    #[test]
    fn median_examples() {
        assert_eq!(aggregate_median(&matrix(&[&[1.5, -2.0]])).unwrap().values, vec![1.5, -2.0]);
        assert_eq!(
            aggregate_median(&matrix(&[&[0.0, 10.0], &[2.0, 4.0], &[4.0, 0.0]])).unwrap().values,
            vec![2.0, 4.0]
        );
        assert_eq!(aggregate_median(&matrix(&[&[0.0], &[1.0]])).unwrap().values, vec![0.5]);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(aggregate_mean(&matrix(&[&[7.0]])).unwrap().values, vec![7.0]);
        assert_eq!(aggregate_mean(&matrix(&[&[0.0], &[1.0], &[5.0]])).unwrap().values, vec![2.0]);
        assert_eq!(
            aggregate_mean(&matrix(&[&[1.0, -1.0], &[-1.0, 1.0]])).unwrap().values,
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn zero_rows_is_representable_but_not_poolable() {
        let m = FeatureMatrix::empty("img", Modality::Fc7Bgr, 4096);
        assert_eq!(m.n_rows(), 0);
        assert!(matches!(aggregate_median(&m), Err(Error::EmptyInput(_))));
        assert!(matches!(aggregate_mean(&m), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn push_row_checks_dimension() {
        let mut m = FeatureMatrix::empty("img", Modality::AvgpoolRgb, 3);
        assert!(m.push_row(&[1.0, 2.0]).is_err());
        assert!(m.push_row(&[1.0, f64::NAN, 2.0]).is_err());
        m.push_row(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.n_rows(), 1);
    }

    #[test]
    fn modality_tags_round_trip() {
        for m in Modality::ALL {
            assert_eq!(m.tag().parse::<Modality>().unwrap(), m);
        }
        assert_eq!(Modality::Fc7Rgb.canonical_dim(), 4096);
        assert_eq!(Modality::AvgpoolBgr.canonical_dim(), 512);
    }
}
