//! Direct stride-1 convolution with symmetric zero padding.
//!
//! Every output element is accumulated sequentially in a fixed order
//! (input channel, kernel row, kernel column), so parallelising over output
//! planes never changes the result.

use super::{Shape, Tensor4};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2dParams {
    /// `out_channels x in_channels x kh x kw`.
    pub weights: Tensor4,
    pub bias: Vec<f64>,
    pub padding: usize,
}

impl Conv2dParams {
    pub fn new(weights: Tensor4, bias: Vec<f64>, padding: usize) -> Result<Self> {
        let w = weights.shape();
        if bias.len() != w.batch {
            return Err(Error::DimensionMismatch(format!(
                "bias of length {} for {} output channels",
                bias.len(),
                w.batch
            )));
        }
        if bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("Conv2dParams::new"));
        }
        Ok(Conv2dParams {
            weights,
            bias,
            padding,
        })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, kernel: usize, padding: usize) -> Self {
        Conv2dParams {
            weights: Tensor4::zeros(Shape::new(out_channels, in_channels, kernel, kernel)),
            bias: vec![0.0; out_channels],
            padding,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.weights.shape().batch
    }

    pub fn in_channels(&self) -> usize {
        self.weights.shape().channels
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let w = self.weights.shape();
        if input.channels != w.channels {
            return Err(Error::DimensionMismatch(format!(
                "conv2d expects {} input channels, got {}",
                w.channels, input.channels
            )));
        }
        let (ph, pw) = (input.height + 2 * self.padding, input.width + 2 * self.padding);
        if ph < w.height || pw < w.width {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} kernel does not fit {}x{} input with padding {}",
                w.height, w.width, input.height, input.width, self.padding
            )));
        }
        Ok(Shape::new(
            input.batch,
            w.batch,
            ph - w.height + 1,
            pw - w.width + 1,
        ))
    }
}

/// Valid output range `[lo, hi)` along one axis for kernel offset `k`:
/// output index `o` reads input index `o + k - pad`.
#[inline]
fn valid_range(k: usize, pad: usize, in_len: usize, out_len: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k);
    let hi = (in_len + pad).saturating_sub(k).min(out_len);
    (lo, hi.max(lo))
}

/// Adds `w * shift(src)` into `dst`, where `dst[y][x] += w * src[y + ky - pad][x + kx - pad]`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn accumulate_shifted(
    dst: &mut [f64],
    out_hw: (usize, usize),
    src: &[f64],
    in_hw: (usize, usize),
    ky: usize,
    kx: usize,
    pad: usize,
    w: f64,
) {
    let (oh, ow) = out_hw;
    let (ih, iw) = in_hw;
    let (y0, y1) = valid_range(ky, pad, ih, oh);
    let (x0, x1) = valid_range(kx, pad, iw, ow);
    for y in y0..y1 {
        let sy = y + ky - pad;
        let d = &mut dst[y * ow + x0..y * ow + x1];
        let s = &src[sy * iw + x0 + kx - pad..sy * iw + x1 + kx - pad];
        for (a, &b) in d.iter_mut().zip(s) {
            *a += w * b;
        }
    }
}

/// Runs `f(plane_index, plane)` over every contiguous plane of `out`.
fn for_each_plane<F>(out: &mut [f64], plane: usize, work: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if work >= PARALLEL_THRESHOLD {
            use rayon::prelude::*;
            out.par_chunks_mut(plane)
                .enumerate()
                .for_each(|(i, p)| f(i, p));
            return;
        }
    }
    let _ = work;
    for (i, p) in out.chunks_mut(plane).enumerate() {
        f(i, p);
    }
}

#[cfg(feature = "parallel")]
const PARALLEL_THRESHOLD: usize = 1 << 18;

pub fn conv2d_forward(input: &Tensor4, params: &Conv2dParams) -> Result<Tensor4> {
    let in_s = input.shape();
    let out_s = params.output_shape(in_s)?;
    let w_s = params.weights.shape();
    let pad = params.padding;
    let weights = params.weights.data();
    let src = input.data();
    let mut out = vec![0.0; out_s.len()];
    let work = out_s.len() * w_s.channels * w_s.height * w_s.width;

    for_each_plane(&mut out, out_s.plane(), work, |idx, plane| {
        let (b, oc) = (idx / out_s.channels, idx % out_s.channels);
        plane.fill(params.bias[oc]);
        for ic in 0..in_s.channels {
            let src_plane = &src[(b * in_s.channels + ic) * in_s.plane()..][..in_s.plane()];
            for ky in 0..w_s.height {
                for kx in 0..w_s.width {
                    let w = weights[((oc * w_s.channels + ic) * w_s.height + ky) * w_s.width + kx];
                    accumulate_shifted(
                        plane,
                        (out_s.height, out_s.width),
                        src_plane,
                        (in_s.height, in_s.width),
                        ky,
                        kx,
                        pad,
                        w,
                    );
                }
            }
        }
    });
    Tensor4::checked(out_s, out, "conv2d_forward")
}

fn check_grad_shape(input: &Tensor4, params: &Conv2dParams, grad_out: &Tensor4) -> Result<Shape> {
    let out_s = params.output_shape(input.shape())?;
    if grad_out.shape() != out_s {
        return Err(Error::DimensionMismatch(format!(
            "conv2d grad_out is {}, forward output is {out_s}",
            grad_out.shape()
        )));
    }
    Ok(out_s)
}

/// Gradient with respect to the convolution input only.
pub fn conv2d_grad_input(
    input_shape: Shape,
    params: &Conv2dParams,
    grad_out: &Tensor4,
) -> Result<Tensor4> {
    let out_s = params.output_shape(input_shape)?;
    if grad_out.shape() != out_s {
        return Err(Error::DimensionMismatch(format!(
            "conv2d grad_out is {}, forward output is {out_s}",
            grad_out.shape()
        )));
    }
    let in_s = input_shape;
    let w_s = params.weights.shape();
    let pad = params.padding;
    let weights = params.weights.data();
    let g = grad_out.data();
    let mut grad = vec![0.0; in_s.len()];
    let work = in_s.len() * w_s.batch * w_s.height * w_s.width;

    // dx[y][x] = sum_oc sum_k w[k] * g[y - ky + pad][x - kx + pad]; in "shift"
    // form that is a correlation of g with the flipped kernel and padding
    // (kh - 1 - pad).
    let (fpad_y, fpad_x) = (w_s.height - 1, w_s.width - 1);
    for_each_plane(&mut grad, in_s.plane(), work, |idx, plane| {
        let (b, ic) = (idx / in_s.channels, idx % in_s.channels);
        for oc in 0..out_s.channels {
            let g_plane = &g[(b * out_s.channels + oc) * out_s.plane()..][..out_s.plane()];
            for ky in 0..w_s.height {
                for kx in 0..w_s.width {
                    let w = weights[((oc * w_s.channels + ic) * w_s.height + ky) * w_s.width + kx];
                    // input (y, x) reads g at (y + pad - ky, x + pad - kx), i.e.
                    // shift offset (fy = kh-1-ky) with padding (kh-1-pad).
                    accumulate_shifted_padded(
                        plane,
                        (in_s.height, in_s.width),
                        g_plane,
                        (out_s.height, out_s.width),
                        (fpad_y - ky, fpad_x - kx),
                        (fpad_y as isize - pad as isize, fpad_x as isize - pad as isize),
                        w,
                    );
                }
            }
        }
    });
    Tensor4::checked(in_s, grad, "conv2d_grad_input")
}

/// Like [`accumulate_shifted`] but with a possibly negative padding per axis:
/// `dst[y][x] += w * src[y + k - pad]` for every in-range source index.
#[inline]
fn accumulate_shifted_padded(
    dst: &mut [f64],
    dst_hw: (usize, usize),
    src: &[f64],
    src_hw: (usize, usize),
    k: (usize, usize),
    pad: (isize, isize),
    w: f64,
) {
    let (dh, dw) = dst_hw;
    let (sh, sw) = src_hw;
    let range = |k: usize, pad: isize, src_len: usize, dst_len: usize| {
        // need 0 <= d + k - pad < src_len
        let off = k as isize - pad;
        let lo = (-off).max(0) as usize;
        let hi = (src_len as isize - off).clamp(0, dst_len as isize) as usize;
        (lo, hi.max(lo), off)
    };
    let (y0, y1, oy) = range(k.0, pad.0, sh, dh);
    let (x0, x1, ox) = range(k.1, pad.1, sw, dw);
    if x0 >= x1 {
        return;
    }
    for y in y0..y1 {
        let sy = (y as isize + oy) as usize;
        let sx0 = (x0 as isize + ox) as usize;
        let d = &mut dst[y * dw + x0..y * dw + x1];
        let s = &src[sy * sw + sx0..sy * sw + sx0 + (x1 - x0)];
        for (a, &b) in d.iter_mut().zip(s) {
            *a += w * b;
        }
    }
}

/// Gradients with respect to weights and bias only.
pub fn conv2d_grad_params(
    input: &Tensor4,
    params: &Conv2dParams,
    grad_out: &Tensor4,
) -> Result<(Tensor4, Vec<f64>)> {
    let out_s = check_grad_shape(input, params, grad_out)?;
    let in_s = input.shape();
    let w_s = params.weights.shape();
    let pad = params.padding;
    let src = input.data();
    let g = grad_out.data();
    let kernel_len = w_s.channels * w_s.height * w_s.width;
    let mut grad_w = vec![0.0; w_s.len()];
    let work = out_s.len() * kernel_len;

    for_each_plane(&mut grad_w, kernel_len, work, |oc, kernel| {
        for b in 0..in_s.batch {
            let g_plane = &g[(b * out_s.channels + oc) * out_s.plane()..][..out_s.plane()];
            for ic in 0..in_s.channels {
                let src_plane = &src[(b * in_s.channels + ic) * in_s.plane()..][..in_s.plane()];
                for ky in 0..w_s.height {
                    let (y0, y1) = valid_range(ky, pad, in_s.height, out_s.height);
                    for kx in 0..w_s.width {
                        let (x0, x1) = valid_range(kx, pad, in_s.width, out_s.width);
                        let mut acc = 0.0;
                        for y in y0..y1 {
                            let sy = y + ky - pad;
                            let gr = &g_plane[y * out_s.width + x0..y * out_s.width + x1];
                            let sr = &src_plane
                                [sy * in_s.width + x0 + kx - pad..sy * in_s.width + x1 + kx - pad];
                            acc += gr.iter().zip(sr).map(|(a, b)| a * b).sum::<f64>();
                        }
                        kernel[(ic * w_s.height + ky) * w_s.width + kx] += acc;
                    }
                }
            }
        }
    });

    let mut grad_b = vec![0.0; out_s.channels];
    for b in 0..out_s.batch {
        for (oc, gb) in grad_b.iter_mut().enumerate() {
            *gb += grad_out.plane(b, oc).iter().sum::<f64>();
        }
    }
    if grad_b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("conv2d_grad_params"));
    }
    Ok((Tensor4::checked(w_s, grad_w, "conv2d_grad_params")?, grad_b))
}

/// Exact analytic gradients `(d input, d weights, d bias)`.
pub fn conv2d_backward(
    input: &Tensor4,
    params: &Conv2dParams,
    grad_out: &Tensor4,
) -> Result<(Tensor4, Tensor4, Vec<f64>)> {
    let (gw, gb) = conv2d_grad_params(input, params, grad_out)?;
    let gx = conv2d_grad_input(input.shape(), params, grad_out)?;
    Ok((gx, gw, gb))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(values: [f64; 9]) -> Conv2dParams {
        Conv2dParams::new(
            Tensor4::new(Shape::new(1, 1, 3, 3), values.to_vec()).unwrap(),
            vec![0.0],
            1,
        )
        .unwrap()
    }

    /// Straight translation of the definition, used as a reference.
    fn naive(input: &Tensor4, p: &Conv2dParams) -> Tensor4 {
        let s = p.output_shape(input.shape()).unwrap();
        let ws = p.weights.shape();
        let is = input.shape();
        let mut out = Tensor4::zeros(s);
        for b in 0..s.batch {
            for oc in 0..s.channels {
                for y in 0..s.height {
                    for x in 0..s.width {
                        let mut acc = 0.0;
                        for ic in 0..ws.channels {
                            for ky in 0..ws.height {
                                for kx in 0..ws.width {
                                    let iy = y as isize + ky as isize - p.padding as isize;
                                    let ix = x as isize + kx as isize - p.padding as isize;
                                    if iy < 0 || ix < 0 || iy >= is.height as isize || ix >= is.width as isize {
                                        continue;
                                    }
                                    acc += p.weights.get(oc, ic, ky, kx)
                                        * input.get(b, ic, iy as usize, ix as usize);
                                }
                            }
                        }
                        let i = out.index(b, oc, y, x);
                        out.data_mut()[i] = acc + p.bias[oc];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_is_fixpoint() {
        let x = Tensor4::from_plane(3, 3, vec![0.3, -1.0, 2.5, 7.0, 0.0, -0.25, 1.0, 4.0, 9.0]).unwrap();
        let id = kernel([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(conv2d_forward(&x, &id).unwrap(), x);
    }

    #[test]
    fn all_ones_kernel_on_2x2() {
        let x = Tensor4::from_plane(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = conv2d_forward(&x, &kernel([1.0; 9])).unwrap();
        assert_eq!(y.data(), &[10.0, 10.0, 10.0, 10.0]);
    }

    #[test]
    fn zero_kernel_gives_bias() {
        let x = Tensor4::from_plane(4, 5, (0..20).map(|v| v as f64).collect()).unwrap();
        let mut p = Conv2dParams::zeros(2, 1, 3, 1);
        p.bias = vec![0.75, -2.0];
        let y = conv2d_forward(&x, &p).unwrap();
        assert!(y.plane(0, 0).iter().all(|&v| v == 0.75));
        assert!(y.plane(0, 1).iter().all(|&v| v == -2.0));
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let x = Tensor4::zeros(Shape::new(1, 2, 3, 3));
        let p = Conv2dParams::zeros(1, 1, 3, 1);
        assert!(matches!(conv2d_forward(&x, &p), Err(Error::DimensionMismatch(_))));
        let g = Tensor4::zeros(Shape::new(1, 1, 2, 2));
        let x = Tensor4::zeros(Shape::new(1, 1, 3, 3));
        assert!(matches!(conv2d_backward(&x, &p, &g), Err(Error::DimensionMismatch(_))));
        assert!(Conv2dParams::new(Tensor4::zeros(Shape::new(2, 1, 3, 3)), vec![0.0], 1).is_err());
    }

    #[test]
    fn matches_naive_for_odd_shapes() {
        let mut seed = 11u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for &(b, ic, oc, h, w, k, pad) in &[
            (1, 1, 1, 4, 4, 3, 1),
            (2, 3, 2, 5, 7, 3, 1),
            (1, 2, 3, 6, 6, 5, 2),
            (1, 2, 2, 5, 4, 1, 0),
            (2, 1, 2, 6, 5, 3, 0),
            (1, 1, 1, 3, 3, 5, 1),
        ] {
            let x = Tensor4::new(Shape::new(b, ic, h, w), (0..b * ic * h * w).map(|_| next()).collect()).unwrap();
            let weights = Tensor4::new(Shape::new(oc, ic, k, k), (0..oc * ic * k * k).map(|_| next()).collect()).unwrap();
            let p = Conv2dParams::new(weights, (0..oc).map(|_| next()).collect(), pad).unwrap();
            let fast = conv2d_forward(&x, &p).unwrap();
            let slow = naive(&x, &p);
            assert_eq!(fast.shape(), slow.shape());
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let x = Tensor4::from_plane(4, 4, (0..16).map(|v| v as f64 * 0.1).collect()).unwrap();
        let p = kernel([0.5, -1.0, 0.25, 1.0, 2.0, 0.0, -0.5, 0.1, 0.3]);
        let (gx, gw, gb) = conv2d_backward(&x, &p, &Tensor4::zeros(x.shape())).unwrap();
        assert!(gx.data().iter().chain(gw.data()).chain(&gb).all(|&v| v == 0.0));
    }

    #[test]
    fn identity_kernel_passes_gradient_through() {
        let x = Tensor4::from_plane(3, 3, vec![1.0; 9]).unwrap();
        let id = kernel([0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let g = Tensor4::from_plane(3, 3, (0..9).map(|v| v as f64 - 4.0).collect()).unwrap();
        let (gx, _, gb) = conv2d_backward(&x, &id, &g).unwrap();
        assert_eq!(gx, g);
        assert_eq!(gb, vec![0.0]);
    }
}
