use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// Predictions are clamped to `[PROB_EPS, 1 - PROB_EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-7;

/// Mean per-pixel binary cross-entropy and its derivative with respect to `pred`.
pub fn bce_loss(pred: &Tensor4, target: &Tensor4) -> Result<(f64, Tensor4)> {
    if pred.shape() != target.shape() {
        return Err(Error::DimensionMismatch(format!(
            "bce_loss: prediction {} vs target {}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.data().len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.data().len());
    for (&p, &t) in pred.data().iter().zip(target.data()) {
        let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        grad.push((-t / p + (1.0 - t) / (1.0 - p)) / n);
    }
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("bce_loss"));
    }
    Ok((loss, Tensor4::checked(pred.shape(), grad, "bce_loss")?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    #[test]
    fn half_prediction_on_binary_target() {
        let p = Tensor4::full(Shape::new(1, 1, 2, 3), 0.5);
        let t = Tensor4::from_plane(2, 3, vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let (l, _) = bce_loss(&p, &t).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn stationary_where_prediction_matches_target() {
        let t = Tensor4::from_plane(1, 3, vec![0.5, 0.2, 0.9]).unwrap();
        let (l, g) = bce_loss(&t, &t).unwrap();
        let entropy: f64 = t
            .data()
            .iter()
            .map(|&q| -(q * q.ln() + (1.0 - q) * (1.0 - q).ln()))
            .sum::<f64>()
            / 3.0;
        assert!((l - entropy).abs() < 1e-15);
        assert_eq!(g.data()[0], 0.0);
        assert!(g.data().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn saturated_predictions_stay_finite() {
        let p = Tensor4::from_plane(1, 2, vec![0.0, 1.0]).unwrap();
        let t = Tensor4::from_plane(1, 2, vec![1.0, 0.0]).unwrap();
        let (l, g) = bce_loss(&p, &t).unwrap();
        assert!(l.is_finite() && g.data().iter().all(|v| v.is_finite()));
        assert!((l - -(PROB_EPS.ln())).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let p = Tensor4::full(Shape::new(1, 1, 2, 2), 0.5);
        let t = Tensor4::full(Shape::new(1, 1, 2, 3), 0.5);
        assert!(matches!(bce_loss(&p, &t), Err(Error::DimensionMismatch(_))));
    }
}
