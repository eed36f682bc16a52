use crate::metrics::{FixationSet, SaliencyMap};

/// Gaussian width used at 640x480.
pub const REFERENCE_SIGMA: f64 = 19.0;

/// [`REFERENCE_SIGMA`] scaled by the geometric mean of the two axis ratios.
pub fn default_sigma(height: usize, width: usize) -> f64 {
    REFERENCE_SIGMA * ((height * width) as f64 / (480.0 * 640.0)).sqrt()
}

/// Continuous ground truth: a unit-mass isotropic Gaussian per fixation,
/// truncated at 3 sigma, summed and normalised to a peak of 1. No fixations
/// give an all-zero map.
pub fn blur_fixations(fix: &FixationSet, dims: (usize, usize), sigma: f64) -> SaliencyMap {
    assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
    let (height, width) = dims;
    let mut values = vec![0.0; height * width];
    let radius = (3.0 * sigma).floor() as isize;
    let cutoff = (3.0 * sigma).powi(2);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
    for &(row, col) in &fix.points {
        let (r0, c0) = (row as isize, col as isize);
        for dy in -radius..=radius {
            let y = r0 + dy;
            if y < 0 || y >= height as isize {
                continue;
            }
            for dx in -radius..=radius {
                let x = c0 + dx;
                let d2 = (dy * dy + dx * dx) as f64;
                if x < 0 || x >= width as isize || d2 > cutoff {
                    continue;
                }
                values[y as usize * width + x as usize] += norm * (-d2 / (2.0 * sigma * sigma)).exp();
            }
        }
    }
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    SaliencyMap::new(height, width, values).expect("blurred map is finite and nonnegative")
}
