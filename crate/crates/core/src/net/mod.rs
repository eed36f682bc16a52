//! Adaptation layers that refine a sequence of static saliency maps.
//!
//! Two variants share the same `1 -> hidden` 3x3 front end and a `hidden -> 1`
//! 1x1 head followed by a sigmoid:
//!
//! * `ConvOnly`: `sigmoid(head(relu(conv3x3(x))))`, applied to each frame independently.
//! * `ConvLstm`: a ConvLSTM cell (no peepholes) whose gate pre-activations are
//!   `conv3x3(x) + conv3x3(h)`; the head reads the hidden state.

mod sequence;

pub use sequence::{
    backward_sequence, conv_block_forward, convlstm_step, forward_sequence, ForwardCache,
    LstmState,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Conv2dParams, Shape, Tensor4};

/// Hidden width of the full-size adaptation layers.
pub const DEFAULT_HIDDEN: usize = 128;
pub const KERNEL: usize = 3;
pub const PADDING: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(rename = "conv")]
    ConvOnly,
    #[serde(rename = "convlstm")]
    ConvLstm,
}

impl Variant {
    pub fn code(self) -> u8 {
        match self {
            Variant::ConvOnly => 0,
            Variant::ConvLstm => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Variant::ConvOnly),
            1 => Some(Variant::ConvLstm),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::ConvOnly => "conv",
            Variant::ConvLstm => "convlstm",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conv" | "convonly" => Ok(Variant::ConvOnly),
            "convlstm" | "lstm" => Ok(Variant::ConvLstm),
            _ => Err(Error::Config(format!("unknown variant '{s}' (conv | convlstm)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Gate indices inside [`Body::Lstm`].
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_OUTPUT: usize = 2;
pub const GATE_CELL: usize = 3;
const GATE_NAMES: [&str; 4] = ["i", "f", "o", "g"];

/// One ConvLSTM gate: input-to-state kernel (carrying the gate bias) and a
/// bias-free state-to-state kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub input: Conv2dParams,
    pub recurrent: Tensor4,
}

impl Gate {
    fn recurrent_params(&self) -> Conv2dParams {
        Conv2dParams {
            weights: self.recurrent.clone(),
            bias: vec![0.0; self.recurrent.shape().batch],
            padding: PADDING,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Conv(Conv2dParams),
    Lstm(Box<[Gate; 4]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationModel {
    pub variant: Variant,
    pub hidden: usize,
    pub body: Body,
    pub head: Conv2dParams,
}

/// Gradients share the model's parameter layout.
pub type ParameterGradients = AdaptationModel;

/// Name and `4 x u32`-style dimensions of one parameter tensor. Biases are
/// reported as `n x 1 x 1 x 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamInfo {
    pub name: String,
    pub dims: [usize; 4],
}

impl AdaptationModel {
    /// Every parameter set to zero.
    pub fn zeros(variant: Variant, hidden: usize) -> Self {
        assert!(hidden > 0, "hidden width must be positive");
        let body = match variant {
            Variant::ConvOnly => Body::Conv(Conv2dParams::zeros(hidden, 1, KERNEL, PADDING)),
            Variant::ConvLstm => Body::Lstm(Box::new(std::array::from_fn(|_| Gate {
                input: Conv2dParams::zeros(hidden, 1, KERNEL, PADDING),
                recurrent: Tensor4::zeros(Shape::new(hidden, hidden, KERNEL, KERNEL)),
            }))),
        };
        AdaptationModel {
            variant,
            hidden,
            body,
            head: Conv2dParams::zeros(1, hidden, 1, 0),
        }
    }

    /// Kernels uniform in `[-s, s]` with `s = sqrt(1 / fan_in)`, biases zero
    /// except the forget gate bias, which starts at 1.
    pub fn init(variant: Variant, hidden: usize, seed: u64) -> Self {
        let mut model = Self::zeros(variant, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let infos = model.param_info();
        for (info, values) in infos.iter().zip(model.params_mut()) {
            if info.name.ends_with(".bias") {
                continue;
            }
            let [_, cin, kh, kw] = info.dims;
            let s = (1.0 / (cin * kh * kw) as f64).sqrt();
            for v in values.iter_mut() {
                *v = rng.random_range(-s..=s);
            }
        }
        if let Body::Lstm(gates) = &mut model.body {
            gates[GATE_FORGET].input.bias.fill(1.0);
        }
        model
    }

    pub fn gates(&self) -> Option<&[Gate; 4]> {
        match &self.body {
            Body::Lstm(g) => Some(g),
            Body::Conv(_) => None,
        }
    }

    pub fn param_info(&self) -> Vec<ParamInfo> {
        let conv = |prefix: &str, p: &Conv2dParams| {
            [
                ParamInfo {
                    name: format!("{prefix}.weight"),
                    dims: p.weights.shape().dims(),
                },
                ParamInfo {
                    name: format!("{prefix}.bias"),
                    dims: [p.bias.len(), 1, 1, 1],
                },
            ]
        };
        let mut out = Vec::new();
        match &self.body {
            Body::Conv(p) => out.extend(conv("feature", p)),
            Body::Lstm(gates) => {
                for (gate, name) in gates.iter().zip(GATE_NAMES) {
                    out.extend(conv(&format!("gate_{name}.input"), &gate.input));
                    out.push(ParamInfo {
                        name: format!("gate_{name}.recurrent.weight"),
                        dims: gate.recurrent.shape().dims(),
                    });
                }
            }
        }
        out.extend(conv("head", &self.head));
        out
    }

    /// Parameter buffers in the same order as [`param_info`](Self::param_info).
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        match &self.body {
            Body::Conv(p) => out.extend([p.weights.data(), &p.bias[..]]),
            Body::Lstm(gates) => {
                for g in gates.iter() {
                    out.extend([g.input.weights.data(), &g.input.bias[..], g.recurrent.data()]);
                }
            }
        }
        out.extend([self.head.weights.data(), &self.head.bias[..]]);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        match &mut self.body {
            Body::Conv(p) => out.extend([p.weights.data_mut(), &mut p.bias[..]]),
            Body::Lstm(gates) => {
                for g in gates.iter_mut() {
                    out.push(g.input.weights.data_mut());
                    out.push(&mut g.input.bias[..]);
                    out.push(g.recurrent.data_mut());
                }
            }
        }
        out.push(self.head.weights.data_mut());
        out.push(&mut self.head.bias[..]);
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Squared L2 norm over all parameters.
    pub fn norm_sq(&self) -> f64 {
        self.params()
            .iter()
            .flat_map(|p| p.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    /// A zeroed model with the same layout, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.variant, self.hidden)
    }
}
