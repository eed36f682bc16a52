//! Browser demo. One synthetic drifting-blob clip; a conv and a convlstm
//! adaptation model train side by side in the page and are scored with the
//! gaze metrics after every few steps.

use tempsal_core::data::{synth_video, SynthConfig, SynthVideo};
use tempsal_core::metrics::{evaluate_video, EvalOptions, FixationSet, Metric, SaliencyMap};
use tempsal_core::net::{forward_sequence, AdaptationModel, Variant};
use tempsal_core::tensor::Tensor4;
use tempsal_core::train::{dataset_loss, train_window, Hyper, OptimizerState, Sample};
use wasm_bindgen::prelude::*;

const HIDDEN: usize = 8;
const CLIP: usize = 16;
const GRAD_CLIP: f64 = 10.0;

struct Learner {
    model: AdaptationModel,
    optimizer: OptimizerState,
    outputs: Option<Vec<SaliencyMap>>,
}

impl Learner {
    fn new(variant: Variant, seed: u64, lr: f64) -> Self {
        let model = AdaptationModel::init(variant, HIDDEN, seed);
        let hyper = Hyper { lr0: lr, ..Hyper::default() };
        let optimizer = OptimizerState::new(&model, hyper);
        Learner { model, optimizer, outputs: None }
    }

    fn outputs(&mut self, inputs: &[Tensor4]) -> Result<&[SaliencyMap], JsError> {
        if self.outputs.is_none() {
            let (ys, _) = forward_sequence(inputs, &self.model).map_err(js)?;
            let maps = ys.iter().map(SaliencyMap::from_tensor).collect::<Result<Vec<_>, _>>().map_err(js)?;
            self.outputs = Some(maps);
        }
        Ok(self.outputs.as_deref().unwrap())
    }
}

fn js(e: tempsal_core::Error) -> JsError {
    JsError::new(&format!("{}: {e}", e.code()))
}

#[wasm_bindgen]
pub struct Demo {
    video: SynthVideo,
    /// Fixations of a second clip, used as shuffled-AUC negatives.
    pool: FixationSet,
    sample: Sample,
    learners: [Learner; 2],
    window: usize,
    steps: usize,
}

#[wasm_bindgen]
impl Demo {
    /// Builds a `size`x`size` clip of `frames` frames whose ground truth runs
    /// `lag` frames ahead of the noisy input.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, lag: u32, size: u32, frames: u32, lr: f64) -> Result<Demo, JsError> {
        let cfg = SynthConfig {
            videos: 2,
            frames: frames as usize,
            height: size as usize,
            width: size as usize,
            seed: seed as u64,
            lag: lag as usize,
            ..SynthConfig::default()
        };
        let video = synth_video(&cfg, 0).map_err(js)?;
        let other = synth_video(&cfg, 1).map_err(js)?;
        let pool = other.fixations.iter().flat_map(|f| f.points.iter().copied()).collect();
        let sample = video.to_sample();
        let s = seed as u64;
        Ok(Demo {
            video,
            pool,
            sample,
            learners: [Learner::new(Variant::ConvOnly, s, lr), Learner::new(Variant::ConvLstm, s, lr)],
            window: 0,
            steps: 0,
        })
    }

    pub fn frames(&self) -> usize {
        self.video.statics.len()
    }

    pub fn size(&self) -> usize {
        self.video.statics[0].height()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Runs `n` SGD steps on consecutive windows for both models and returns
    /// the last window losses `[conv, convlstm]`, averaged per frame.
    pub fn train(&mut self, n: usize) -> Result<Vec<f64>, JsError> {
        let len = self.sample.inputs.len();
        let mut last = vec![f64::NAN; 2];
        for _ in 0..n {
            let start = self.window * CLIP;
            let end = (start + CLIP).min(len);
            for (k, l) in self.learners.iter_mut().enumerate() {
                let loss = train_window(
                    &mut l.model,
                    &mut l.optimizer,
                    &self.sample.inputs[start..end],
                    &self.sample.targets[start..end],
                    Some(GRAD_CLIP),
                )
                .map_err(js)?;
                last[k] = loss / (end - start) as f64;
                l.outputs = None;
            }
            self.window = if end >= len { 0 } else { self.window + 1 };
            self.steps += 1;
        }
        Ok(last)
    }

    /// Mean per-frame BCE over the whole clip, `[conv, convlstm]`.
    pub fn loss(&self) -> Result<Vec<f64>, JsError> {
        let data = std::slice::from_ref(&self.sample);
        self.learners.iter().map(|l| dataset_loss(&l.model, data, CLIP).map_err(js)).collect()
    }

    /// RGBA pixels of one frame. `layer` is one of `static`, `gt`, `conv`,
    /// `convlstm`; fixations are drawn on top when `marks` is set.
    pub fn render(&mut self, layer: &str, frame: usize, marks: bool) -> Result<Vec<u8>, JsError> {
        let frame = frame.min(self.frames() - 1);
        let map = match layer {
            "static" => self.video.statics[frame].clone(),
            "gt" => self.video.gts[frame].clone(),
            "conv" => self.learners[0].outputs(&self.sample.inputs)?[frame].clone(),
            "convlstm" => self.learners[1].outputs(&self.sample.inputs)?[frame].clone(),
            other => return Err(JsError::new(&format!("unknown layer '{other}'"))),
        };
        let fix = if marks { Some(&self.video.fixations[frame]) } else { None };
        Ok(to_rgba(&map, fix))
    }

    /// Clip-level scores of the static input and both models as a JSON
    /// object `{layer: {metric: value | null}}`.
    pub fn scores(&mut self) -> Result<String, JsError> {
        let options = EvalOptions { metrics: Metric::ALL.into_iter().collect(), shuffle_seed: 42 };
        let mut out = serde_json::Map::new();
        let statics = self.video.statics.clone();
        let layers = [
            ("static", statics),
            ("conv", self.learners[0].outputs(&self.sample.inputs)?.to_vec()),
            ("convlstm", self.learners[1].outputs(&self.sample.inputs)?.to_vec()),
        ];
        for (name, maps) in layers {
            let ev = evaluate_video(&maps, &self.video.fixations, &self.video.gts, &self.pool, &options).map_err(js)?;
            let scores: serde_json::Map<String, serde_json::Value> =
                Metric::ALL.iter().map(|&m| (m.label().to_string(), ev.scores.get(m).into())).collect();
            out.insert(name.to_string(), scores.into());
        }
        Ok(serde_json::Value::Object(out).to_string())
    }
}

/// Maps `[0, 1]` to a dark-blue to yellow ramp; fixations become red pixels.
fn to_rgba(map: &SaliencyMap, fix: Option<&FixationSet>) -> Vec<u8> {
    let mut px = Vec::with_capacity(map.values().len() * 4);
    for &v in map.values() {
        let v = v.clamp(0.0, 1.0);
        let r = (255.0 * v.powf(0.8)) as u8;
        let g = (255.0 * v.powf(1.5)) as u8;
        let b = (90.0 + 100.0 * (1.0 - v) * v * 4.0).min(255.0) as u8;
        px.extend_from_slice(&[r, g, b, 255]);
    }
    if let Some(fix) = fix {
        for &(r, c) in &fix.points {
            let i = (r * map.width() + c) * 4;
            px[i..i + 4].copy_from_slice(&[255, 40, 40, 255]);
        }
    }
    px
}
