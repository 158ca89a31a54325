use crate::error::{Error, Result};
use crate::label::NUM_CLASSES;

/// Weighted mean of class-probability vectors.
///
/// Zero-weight entries are skipped outright, so they cannot perturb the
/// result even in the last bit.
pub fn fuse(scores: &[([f64; NUM_CLASSES], f64)]) -> Result<[f64; NUM_CLASSES]> {
    let mut acc = [0.0; NUM_CLASSES];
    let mut total = 0.0;
    for (score, weight) in scores {
        if !(weight.is_finite() && *weight >= 0.0) {
            return Err(Error::invalid(format!("fusion weight {weight} is not a finite non-negative number")));
        }
        check_distribution(score)?;
        if *weight == 0.0 {
            continue;
        }
        for c in 0..NUM_CLASSES {
            acc[c] += weight * score[c];
        }
        total += weight;
    }
    if total == 0.0 {
        return Err(Error::NoUsablePredictor);
    }
    Ok(acc.map(|a| a / total))
}

pub(crate) fn check_distribution(score: &[f64; NUM_CLASSES]) -> Result<()> {
    let sum: f64 = score.iter().sum();
    if score.iter().any(|p| !(p.is_finite() && (0.0..=1.0).contains(p))) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("{score:?} is not a probability vector")));
    }
    Ok(())
}
