use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned face box in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl FaceBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Result<Self> {
        let finite = [x, y, width, height].iter().all(|v| v.is_finite());
        if !finite || width <= 0.0 || height <= 0.0 {
            return Err(Error::invalid("face box needs finite coordinates and positive size"));
        }
        Ok(FaceBox {
            x,
            y,
            width,
            height,
        })
    }
}

/// Raw output of both face detectors for one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionBundle {
    /// Frontal (HOG) detector boxes.
    pub primary: Vec<FaceBox>,
    /// Haar cascade boxes, consulted only when the frontal detector finds nothing.
    pub fallback: Vec<FaceBox>,
}

/// Frontal detections if there are any, else the cascade's. An empty result
/// sends the image to the whole-image classifier.
pub fn detector_cascade_select(bundle: &DetectionBundle) -> &[FaceBox] {
    if !bundle.primary.is_empty() {
        &bundle.primary
    } else {
        &bundle.fallback
    }
}
