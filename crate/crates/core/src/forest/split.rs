use crate::error::{Error, Result};
use crate::label::NUM_CLASSES;

use super::LabeledDataset;

/// `1 - sum_c p_c^2`.
pub fn gini_impurity(counts: &[u64; NUM_CLASSES]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::invalid("gini of an empty node"));
    }
    let t = total as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Parent Gini minus the size-weighted Gini of the children.
    pub impurity_decrease: f64,
}

/// Split quality `sum_c L_c^2 / n_L + sum_c R_c^2 / n_R` kept as an exact fraction.
/// Maximizing it is the same as maximizing the Gini decrease.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(left_sq: u64, n_left: u64, right_sq: u64, n_right: u64) -> Self {
        Score {
            num: left_sq as u128 * n_right as u128 + right_sq as u128 * n_left as u128,
            den: n_left as u128 * n_right as u128,
        }
    }

    fn beats(self, other: Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

fn sum_sq(counts: &[u64; NUM_CLASSES]) -> u64 {
    counts.iter().map(|c| c * c).sum()
}

/// Best threshold split of `samples` over `features`.
///
/// Thresholds are midpoints between consecutive distinct sorted values; both
/// children must keep at least `min_leaf` samples. Returns `None` when no
/// candidate strictly lowers the impurity. Ties go to the lowest feature index,
/// then the lowest threshold. `samples` may contain repeats (bootstrap draws).
pub fn best_split(
    dataset: &LabeledDataset,
    samples: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = samples.len();
    if n < 2 || features.is_empty() {
        return None;
    }
    let min_leaf = min_leaf.max(1) as u64;
    let mut parent = [0u64; NUM_CLASSES];
    for &s in samples {
        parent[dataset.label(s).index()] += 1;
    }
    let parent_sq = sum_sq(&parent);
    let n64 = n as u64;
    // positive decrease <=> score > parent_sq / n
    let floor = Score {
        num: parent_sq as u128,
        den: n64 as u128,
    };

    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    sorted_features.dedup();

    let mut column: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut best: Option<(usize, f64, Score)> = None;
    for &f in &sorted_features {
        column.clear();
        column.extend(samples.iter().map(|&s| (dataset.value(s, f), dataset.label(s).index())));
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0u64; NUM_CLASSES];
        for i in 0..n - 1 {
            left[column[i].1] += 1;
            let (lo, hi) = (column[i].0, column[i + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = (i + 1) as u64;
            let n_right = n64 - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let mut right = parent;
            for c in 0..NUM_CLASSES {
                right[c] -= left[c];
            }
            let score = Score::new(sum_sq(&left), n_left, sum_sq(&right), n_right);
            if !score.beats(floor) {
                continue;
            }
            if best.is_none_or(|(_, _, b)| score.beats(b)) {
                best = Some((f, midpoint(lo, hi), score));
            }
        }
    }

    best.map(|(feature, threshold, score)| {
        let nf = n as f64;
        let impurity_decrease =
            (score.num as f64 / score.den as f64) / nf - parent_sq as f64 / (nf * nf);
        Split {
            feature,
            threshold,
            impurity_decrease,
        }
    })
}

/// Midpoint of `lo < hi` that still satisfies `lo <= t < hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid.is_finite() && mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}
