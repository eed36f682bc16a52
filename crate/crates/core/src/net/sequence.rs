use super::{AdaptationModel, Body, Gate, ParameterGradients, Variant};
use crate::error::{Error, Result};
use crate::tensor::{
    conv2d_forward, conv2d_grad_input, conv2d_grad_params, relu, relu_backward, sigmoid,
    sigmoid_backward_from_output, tanh_act, tanh_backward_from_output, Conv2dParams, Shape,
    Tensor4,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Tensor4,
    pub cell: Tensor4,
}

impl LstmState {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        let s = Shape::new(1, channels, height, width);
        LstmState {
            hidden: Tensor4::zeros(s),
            cell: Tensor4::zeros(s),
        }
    }
}

fn check_frame(x: &Tensor4) -> Result<()> {
    let s = x.shape();
    if s.batch != 1 || s.channels != 1 {
        return Err(Error::DimensionMismatch(format!(
            "adaptation input must be 1x1xHxW, got {s}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct ConvStep {
    x: Tensor4,
    pre: Tensor4,
    act: Tensor4,
    y: Tensor4,
}

#[derive(Debug, Clone)]
struct LstmStep {
    x: Tensor4,
    h_prev: Tensor4,
    c_prev: Tensor4,
    /// Gate activations in `i, f, o, g` order.
    gates: [Tensor4; 4],
    c: Tensor4,
    tanh_c: Tensor4,
    h: Tensor4,
    y: Tensor4,
}

#[derive(Debug, Clone)]
enum Steps {
    Conv(Vec<ConvStep>),
    Lstm(Vec<LstmStep>),
}

/// Intermediates of one [`forward_sequence`] call, consumed by
/// [`backward_sequence`]. Memory grows linearly with sequence length.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    variant: Variant,
    hidden: usize,
    steps: Steps,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        match &self.steps {
            Steps::Conv(s) => s.len(),
            Steps::Lstm(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn outputs(&self) -> Vec<Tensor4> {
        match &self.steps {
            Steps::Conv(s) => s.iter().map(|st| st.y.clone()).collect(),
            Steps::Lstm(s) => s.iter().map(|st| st.y.clone()).collect(),
        }
    }
}

fn conv_step(x: &Tensor4, feature: &Conv2dParams, head: &Conv2dParams) -> Result<ConvStep> {
    check_frame(x)?;
    let pre = conv2d_forward(x, feature)?;
    let act = relu(&pre)?;
    let y = sigmoid(&conv2d_forward(&act, head)?)?;
    Ok(ConvStep {
        x: x.clone(),
        pre,
        act,
        y,
    })
}

/// `sigmoid(head(relu(feature(x))))` for a `1x1xHxW` map.
pub fn conv_block_forward(static_map: &Tensor4, model: &AdaptationModel) -> Result<Tensor4> {
    match &model.body {
        Body::Conv(feature) => Ok(conv_step(static_map, feature, &model.head)?.y),
        Body::Lstm(_) => Err(Error::Config(
            "conv_block_forward needs a ConvOnly model".into(),
        )),
    }
}

fn gate_preactivation(gate: &Gate, x: &Tensor4, h: &Tensor4) -> Result<Tensor4> {
    let mut a = conv2d_forward(x, &gate.input)?;
    a.add_assign(&conv2d_forward(h, &gate.recurrent_params())?)?;
    Ok(a)
}

fn lstm_step(
    x: &Tensor4,
    state: &LstmState,
    gates: &[Gate; 4],
    head: &Conv2dParams,
) -> Result<LstmStep> {
    check_frame(x)?;
    let xs = x.shape();
    let expected = Shape::new(1, gates[0].recurrent.shape().batch, xs.height, xs.width);
    if state.hidden.shape() != expected || state.cell.shape() != expected {
        return Err(Error::DimensionMismatch(format!(
            "LSTM state is {} / {}, expected {expected}",
            state.hidden.shape(),
            state.cell.shape()
        )));
    }
    let act = |k: usize| -> Result<Tensor4> {
        let a = gate_preactivation(&gates[k], x, &state.hidden)?;
        if k == super::GATE_CELL {
            tanh_act(&a)
        } else {
            sigmoid(&a)
        }
    };
    let acts = [act(0)?, act(1)?, act(2)?, act(3)?];
    let [i, f, o, g] = &acts;
    let c = f.mul(&state.cell)?.add(&i.mul(g)?)?;
    let tanh_c = tanh_act(&c)?;
    let h = o.mul(&tanh_c)?;
    let y = sigmoid(&conv2d_forward(&h, head)?)?;
    Ok(LstmStep {
        x: x.clone(),
        h_prev: state.hidden.clone(),
        c_prev: state.cell.clone(),
        gates: acts,
        c,
        tanh_c,
        h,
        y,
    })
}

/// One ConvLSTM step: returns the refined map and the next state.
pub fn convlstm_step(
    x: &Tensor4,
    state: &LstmState,
    model: &AdaptationModel,
) -> Result<(Tensor4, LstmState)> {
    let Body::Lstm(gates) = &model.body else {
        return Err(Error::Config("convlstm_step needs a ConvLstm model".into()));
    };
    let step = lstm_step(x, state, gates, &model.head)?;
    Ok((
        step.y,
        LstmState {
            hidden: step.h,
            cell: step.c,
        },
    ))
}

/// Runs the model over a sequence. The ConvOnly variant treats frames
/// independently; the ConvLSTM variant starts from a zero state.
pub fn forward_sequence(
    frames: &[Tensor4],
    model: &AdaptationModel,
) -> Result<(Vec<Tensor4>, ForwardCache)> {
    let first = frames.first().ok_or(Error::EmptySequence)?.shape();
    if let Some(bad) = frames.iter().find(|f| f.shape() != first) {
        return Err(Error::DimensionMismatch(format!(
            "sequence mixes {first} and {} frames",
            bad.shape()
        )));
    }
    let steps = match &model.body {
        Body::Conv(feature) => Steps::Conv(
            frames
                .iter()
                .map(|x| conv_step(x, feature, &model.head))
                .collect::<Result<_>>()?,
        ),
        Body::Lstm(gates) => {
            let mut state = LstmState::zeros(model.hidden, first.height, first.width);
            let mut steps = Vec::with_capacity(frames.len());
            for x in frames {
                let step = lstm_step(x, &state, gates, &model.head)?;
                state = LstmState {
                    cell: step.c.clone(),
                    hidden: step.h.clone(),
                };
                steps.push(step);
            }
            Steps::Lstm(steps)
        }
    };
    let cache = ForwardCache {
        variant: model.variant,
        hidden: model.hidden,
        steps,
    };
    Ok((cache.outputs(), cache))
}

fn accumulate_conv(
    acc: &mut Conv2dParams,
    input: &Tensor4,
    params: &Conv2dParams,
    grad_out: &Tensor4,
) -> Result<()> {
    let (gw, gb) = conv2d_grad_params(input, params, grad_out)?;
    acc.weights.add_assign(&gw)?;
    for (a, b) in acc.bias.iter_mut().zip(gb) {
        *a += b;
    }
    Ok(())
}

/// Reverse-time gradient of `sum_t <grad_outputs[t], y_t>` with respect to
/// every model parameter. Kernels shared across time accumulate their
/// per-step contributions.
pub fn backward_sequence(
    model: &AdaptationModel,
    cache: &ForwardCache,
    grad_outputs: &[Tensor4],
) -> Result<ParameterGradients> {
    if cache.is_empty() || cache.variant != model.variant || cache.hidden != model.hidden {
        return Err(Error::StaleCache);
    }
    if grad_outputs.len() != cache.len() {
        return Err(Error::LengthMismatch(format!(
            "{} output gradients for a sequence of {}",
            grad_outputs.len(),
            cache.len()
        )));
    }
    let mut grads = model.zeros_like();
    match (&model.body, &cache.steps) {
        (Body::Conv(feature), Steps::Conv(steps)) => {
            let Body::Conv(g_feature) = &mut grads.body else { unreachable!() };
            for (st, gy) in steps.iter().zip(grad_outputs) {
                if gy.shape() != st.y.shape() {
                    return Err(Error::DimensionMismatch(format!(
                        "output gradient {} for output {}",
                        gy.shape(),
                        st.y.shape()
                    )));
                }
                let dz = sigmoid_backward_from_output(&st.y, gy)?;
                accumulate_conv(&mut grads.head, &st.act, &model.head, &dz)?;
                let dact = conv2d_grad_input(st.act.shape(), &model.head, &dz)?;
                let dpre = relu_backward(&st.pre, &dact)?;
                accumulate_conv(g_feature, &st.x, feature, &dpre)?;
            }
        }
        (Body::Lstm(gates), Steps::Lstm(steps)) => {
            let Body::Lstm(g_gates) = &mut grads.body else { unreachable!() };
            let recurrent: Vec<Conv2dParams> = gates.iter().map(Gate::recurrent_params).collect();
            let state_shape = steps[0].h.shape();
            let mut dh_next = Tensor4::zeros(state_shape);
            let mut dc_next = Tensor4::zeros(state_shape);
            for (st, gy) in steps.iter().zip(grad_outputs).rev() {
                if gy.shape() != st.y.shape() {
                    return Err(Error::DimensionMismatch(format!(
                        "output gradient {} for output {}",
                        gy.shape(),
                        st.y.shape()
                    )));
                }
                let [i, f, o, g] = &st.gates;
                let dz = sigmoid_backward_from_output(&st.y, gy)?;
                accumulate_conv(&mut grads.head, &st.h, &model.head, &dz)?;
                let mut dh = conv2d_grad_input(st.h.shape(), &model.head, &dz)?;
                dh.add_assign(&dh_next)?;

                let d_o = dh.mul(&st.tanh_c)?;
                let mut dc = tanh_backward_from_output(&st.tanh_c, &dh.mul(o)?)?;
                dc.add_assign(&dc_next)?;

                let da = [
                    sigmoid_backward_from_output(i, &dc.mul(g)?)?,
                    sigmoid_backward_from_output(f, &dc.mul(&st.c_prev)?)?,
                    sigmoid_backward_from_output(o, &d_o)?,
                    tanh_backward_from_output(g, &dc.mul(i)?)?,
                ];
                dc_next = dc.mul(f)?;
                dh_next = Tensor4::zeros(state_shape);
                for k in 0..4 {
                    accumulate_conv(&mut g_gates[k].input, &st.x, &gates[k].input, &da[k])?;
                    let (gw, _) = conv2d_grad_params(&st.h_prev, &recurrent[k], &da[k])?;
                    g_gates[k].recurrent.add_assign(&gw)?;
                    dh_next.add_assign(&conv2d_grad_input(state_shape, &recurrent[k], &da[k])?)?;
                }
            }
        }
        _ => return Err(Error::StaleCache),
    }
    Ok(grads)
}
