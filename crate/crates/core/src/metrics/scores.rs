use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FixationSet, SaliencyMap};
use crate::error::{Error, Result};

/// Shuffled-AUC negatives are subsampled to at most this many per positive.
pub const SAUC_NEGATIVE_CAP: usize = 10;

fn is_constant(values: &[f64]) -> bool {
    let first = values[0];
    values.iter().all(|&v| v == first)
}

fn ensure_same_dims(a: &SaliencyMap, b: &SaliencyMap) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} map vs {}x{} map",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    Ok(())
}

fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Normalized scanpath saliency: mean z-score of the map at the fixations.
/// A constant map scores 0.
pub fn nss(map: &SaliencyMap, fix: &FixationSet) -> Result<f64> {
    if fix.is_empty() {
        return Err(Error::EmptyFixations);
    }
    let hits = fix
        .points
        .iter()
        .map(|&p| map.at(p))
        .collect::<Result<Vec<_>>>()?;
    if is_constant(map.values()) {
        return Ok(0.0);
    }
    let (mean, std) = mean_and_population_std(map.values());
    Ok(hits.iter().map(|v| (v - mean) / std).sum::<f64>() / hits.len() as f64)
}

/// Pearson correlation between two maps, `None` when either is constant.
pub fn cc(map: &SaliencyMap, gt: &SaliencyMap) -> Result<Option<f64>> {
    ensure_same_dims(map, gt)?;
    if is_constant(map.values()) || is_constant(gt.values()) {
        return Ok(None);
    }
    let (ma, sa) = mean_and_population_std(map.values());
    let (mb, sb) = mean_and_population_std(gt.values());
    let n = map.values().len() as f64;
    let r = map
        .values()
        .iter()
        .zip(gt.values())
        .map(|(a, b)| ((a - ma) / sa) * ((b - mb) / sb))
        .sum::<f64>()
        / n;
    Ok(Some(r.clamp(-1.0, 1.0)))
}

/// Histogram intersection of the two maps after normalising each to unit mass.
pub fn sim(map: &SaliencyMap, gt: &SaliencyMap) -> Result<f64> {
    ensure_same_dims(map, gt)?;
    let (sa, sb) = (map.sum(), gt.sum());
    if sa <= 0.0 || sb <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let s: f64 = map
        .values()
        .iter()
        .zip(gt.values())
        .map(|(a, b)| (a / sa).min(b / sb))
        .sum();
    Ok(s.clamp(0.0, 1.0))
}

/// Area under the ROC curve traced by thresholding at each distinct positive
/// value (descending). A sample counts as detected when it is `>=` the
/// threshold; the curve is anchored at (0,0) and (1,1) and integrated with
/// the trapezoid rule.
pub fn roc_area(positives: &[f64], negatives: &[f64]) -> f64 {
    assert!(!positives.is_empty() && !negatives.is_empty());
    let mut pos = positives.to_vec();
    let mut neg = negatives.to_vec();
    pos.sort_by(|a, b| b.total_cmp(a));
    neg.sort_by(|a, b| b.total_cmp(a));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);

    let mut area = 0.0;
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let (mut tp, mut fp) = (0usize, 0usize);
    while tp < pos.len() {
        let threshold = pos[tp];
        while tp < pos.len() && pos[tp] >= threshold {
            tp += 1;
        }
        while fp < neg.len() && neg[fp] >= threshold {
            fp += 1;
        }
        let (tpr, fpr) = (tp as f64 / np, fp as f64 / nn);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area += (1.0 - prev_fpr) * (1.0 + prev_tpr) / 2.0;
    area
}

fn values_at(map: &SaliencyMap, fix: &FixationSet) -> Result<Vec<f64>> {
    fix.points.iter().map(|&p| map.at(p)).collect()
}

/// AUC with the fixations as positives and every non-fixated pixel as a negative.
pub fn auc_judd(map: &SaliencyMap, fix: &FixationSet) -> Result<f64> {
    if fix.is_empty() {
        return Err(Error::EmptyFixations);
    }
    let positives = values_at(map, fix)?;
    let mut fixated = vec![false; map.values().len()];
    for &(r, c) in &fix.points {
        fixated[r * map.width() + c] = true;
    }
    let negatives: Vec<f64> = map
        .values()
        .iter()
        .zip(&fixated)
        .filter(|(_, &f)| !f)
        .map(|(&v, _)| v)
        .collect();
    if negatives.is_empty() {
        return Err(Error::AllFixated);
    }
    Ok(roc_area(&positives, &negatives))
}

/// AUC whose negatives are the map values at fixations drawn from other
/// frames. When the pool exceeds `SAUC_NEGATIVE_CAP` times the number of
/// fixations it is subsampled without replacement, seeded by `seed`.
pub fn shuffled_auc(
    map: &SaliencyMap,
    fix: &FixationSet,
    other_fix: &FixationSet,
    seed: u64,
) -> Result<f64> {
    if fix.is_empty() {
        return Err(Error::EmptyFixations);
    }
    if other_fix.is_empty() {
        return Err(Error::EmptyNegatives);
    }
    let positives = values_at(map, fix)?;
    let cap = SAUC_NEGATIVE_CAP * fix.len();
    let negatives = if other_fix.len() > cap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        index::sample(&mut rng, other_fix.len(), cap)
            .into_iter()
            .map(|i| map.at(other_fix.points[i]))
            .collect::<Result<Vec<_>>>()?
    } else {
        values_at(map, other_fix)?
    };
    Ok(roc_area(&positives, &negatives))
}
