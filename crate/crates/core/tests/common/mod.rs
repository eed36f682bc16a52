#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempsal_core::metrics::{FixationSet, SaliencyMap};
use tempsal_core::tensor::{Shape, Tensor4};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: Shape, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor4 {
    let data = (0..shape.len()).map(|_| rng.random_range(lo..hi)).collect();
    Tensor4::new(shape, data).unwrap()
}

/// `|a - n| / max(|a|, |n|, 1e-3)`; the floor keeps near-zero gradients from
/// turning rounding noise into large relative errors.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3)
}

/// Central difference of `f` with respect to `x[i]`.
pub fn central_diff(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let up = f(x);
    x[i] = orig - h;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * h)
}

/// Probability that a random positive outranks a random negative, ties
/// counting one half, by explicit pair counting.
pub fn mann_whitney(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// The threshold sweep recomputed from scratch: every distinct positive
/// value is a threshold, counts are taken by full scans.
pub fn sweep_oracle(pos: &[f64], neg: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = pos.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut pts = vec![(0.0, 0.0)];
    for t in thresholds {
        let tpr = pos.iter().filter(|&&p| p >= t).count() as f64 / pos.len() as f64;
        let fpr = neg.iter().filter(|&&n| n >= t).count() as f64 / neg.len() as f64;
        pts.push((fpr, tpr));
    }
    pts.push((1.0, 1.0));
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

/// Pearson correlation from two explicit passes.
pub fn cc_oracle(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

/// A map of up to 8x8 with distinct values and up to 10 distinct fixations,
/// leaving at least one pixel unfixated.
pub fn tie_free_instance(rng: &mut ChaCha8Rng) -> (SaliencyMap, FixationSet) {
    let h = rng.random_range(1..=8);
    let w = rng.random_range(if h == 1 { 2 } else { 1 }..=8);
    let n = h * w;
    let mut values: Vec<f64> = (0..n).map(|k| k as f64 + 1.0).collect();
    for i in (1..n).rev() {
        values.swap(i, rng.random_range(0..=i));
    }
    let scale: f64 = rng.random_range(0.01..10.0);
    values.iter_mut().for_each(|v| *v *= scale);
    let k = rng.random_range(1..=10.min(n - 1));
    let picks = rand::seq::index::sample(rng, n, k);
    let fix = FixationSet::new(picks.into_iter().map(|p| (p / w, p % w)).collect());
    (SaliencyMap::new(h, w, values).unwrap(), fix)
}

pub fn values_at(map: &SaliencyMap, fix: &FixationSet) -> Vec<f64> {
    fix.points.iter().map(|&(r, c)| map.get(r, c)).collect()
}

pub fn unfixated(map: &SaliencyMap, fix: &FixationSet) -> Vec<f64> {
    let mut out = Vec::new();
    for r in 0..map.height() {
        for c in 0..map.width() {
            if !fix.points.contains(&(r, c)) {
                out.push(map.get(r, c));
            }
        }
    }
    out
}
