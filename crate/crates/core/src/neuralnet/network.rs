use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    conv_backward, conv_forward, dense_backward, dense_forward, maxpool_backward, maxpool_forward, relu,
    relu_backward,
};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::gridmap::{Action, LOCAL_CELLS};
use crate::math;
use crate::rng::{derive_seed, seeded};

pub const IMAGE_FEATURES: usize = 10;
pub const MAP_FEATURES: usize = LOCAL_CELLS;
pub const CONCAT_FEATURES: usize = IMAGE_FEATURES + MAP_FEATURES;
pub const N_ACTIONS: usize = 4;

pub type QValues = [f64; N_ACTIONS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureTag {
    Feedforward,
    Recurrent,
}

/// Layer sizes of the image branch. The map branch, the 110-wide
/// concatenation and the 4-way head are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// Side of the square grayscale input.
    pub input_size: usize,
    pub conv_filters: [usize; 3],
    pub conv_kernels: [usize; 3],
    pub dense_hidden: usize,
    pub dropout: f64,
    pub recurrent: bool,
}

impl Architecture {
    /// Full-size network: 84×84 input, 32/64/64 filters with 8/4/3 kernels,
    /// dense-256.
    pub fn table_i() -> Self {
        Self {
            input_size: 84,
            conv_filters: [32, 64, 64],
            conv_kernels: [8, 4, 3],
            dense_hidden: 256,
            dropout: 0.5,
            recurrent: false,
        }
    }

    /// Same topology with a 16×16 input and narrow image branch, for
    /// desk-scale training runs.
    pub fn compact() -> Self {
        Self { input_size: 16, conv_filters: [4, 8, 8], conv_kernels: [8, 4, 3], dense_hidden: 32, ..Self::table_i() }
    }

    pub fn with_recurrent(mut self, recurrent: bool) -> Self {
        self.recurrent = recurrent;
        self
    }

    pub fn tag(&self) -> ArchitectureTag {
        if self.recurrent {
            ArchitectureTag::Recurrent
        } else {
            ArchitectureTag::Feedforward
        }
    }

    /// Spatial side at each conv layer's input and after the last pool.
    pub fn spatial_chain(&self) -> [usize; 4] {
        let s0 = self.input_size;
        [s0, s0 / 2, s0 / 4, s0 / 8]
    }

    pub fn flatten_width(&self) -> usize {
        let s3 = self.spatial_chain()[3];
        s3 * s3 * self.conv_filters[2]
    }

    pub fn input_pixels(&self) -> usize {
        self.input_size * self.input_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size < 8 {
            return Err(Error::Config("input size must be at least 8 so three pools leave a pixel"));
        }
        if self.conv_filters.contains(&0) || self.conv_kernels.contains(&0) || self.dense_hidden == 0 {
            return Err(Error::Config("layer widths must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout rate must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout active; the mask is a pure function of the seed.
    Train { dropout_seed: u64 },
}

impl Mode {
    fn step(self, t: usize) -> Mode {
        match self {
            Mode::Eval => Mode::Eval,
            Mode::Train { dropout_seed } => Mode::Train { dropout_seed: derive_seed(dropout_seed, t as u64) },
        }
    }
}

/// Hidden and cell state of the recurrent cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros() -> Self {
        Self { h: vec![0.0; CONCAT_FEATURES], c: vec![0.0; CONCAT_FEATURES] }
    }

    pub fn norm_diff(&self, other: &LstmState) -> f64 {
        let sq: f64 = self
            .h
            .iter()
            .zip(&other.h)
            .chain(self.c.iter().zip(&other.c))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        math::sqrt(sq)
    }
}

/// One feedforward training example: inputs, the action taken, and its TD target.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSample<'a> {
    pub image: &'a [f64],
    pub map: &'a [f64],
    pub action: Action,
    pub target: f64,
}

/// One contiguous recurrent trace with a target per step.
#[derive(Debug, Clone)]
pub struct SequenceSample<'a> {
    pub steps: Vec<(&'a [f64], &'a [f64])>,
    pub actions: Vec<Action>,
    pub targets: Vec<f64>,
}

/// Full weight set of the Q-network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    arch: Architecture,
    tensors: Vec<Tensor>,
}

/// Gradients share the parameter layout.
pub type GradientSet = NetworkParams;

// Tensor slots in canonical order.
const CONV_W: [usize; 3] = [0, 2, 4];
const CONV_B: [usize; 3] = [1, 3, 5];
const D1_W: usize = 6;
const D1_B: usize = 7;
const D2_W: usize = 8;
const D2_B: usize = 9;
const MAP_W: [usize; 2] = [10, 13];
const MAP_B: [usize; 2] = [11, 14];
const PRELU: [usize; 2] = [12, 15];
const HEAD_W: usize = 16;
const HEAD_B: usize = 17;
const LSTM_WX: usize = 18;
const LSTM_WH: usize = 19;
const LSTM_B: usize = 20;

const NAMES: [&str; 21] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "conv3.weight",
    "conv3.bias",
    "dense1.weight",
    "dense1.bias",
    "dense2.weight",
    "dense2.bias",
    "map1.weight",
    "map1.bias",
    "map1.prelu_slope",
    "map2.weight",
    "map2.bias",
    "map2.prelu_slope",
    "head.weight",
    "head.bias",
    "lstm.input_weight",
    "lstm.hidden_weight",
    "lstm.bias",
];

/// Initial PReLU slope.
pub const PRELU_INIT: f64 = 0.25;

fn shapes(arch: &Architecture) -> Vec<Vec<usize>> {
    let [f1, f2, f3] = arch.conv_filters;
    let [k1, k2, k3] = arch.conv_kernels;
    let mut s = vec![
        vec![f1, 1, k1, k1],
        vec![f1],
        vec![f2, f1, k2, k2],
        vec![f2],
        vec![f3, f2, k3, k3],
        vec![f3],
        vec![arch.dense_hidden, arch.flatten_width()],
        vec![arch.dense_hidden],
        vec![IMAGE_FEATURES, arch.dense_hidden],
        vec![IMAGE_FEATURES],
        vec![MAP_FEATURES, MAP_FEATURES],
        vec![MAP_FEATURES],
        vec![1],
        vec![MAP_FEATURES, MAP_FEATURES],
        vec![MAP_FEATURES],
        vec![1],
        vec![N_ACTIONS, CONCAT_FEATURES],
        vec![N_ACTIONS],
    ];
    if arch.recurrent {
        s.push(vec![4 * CONCAT_FEATURES, CONCAT_FEATURES]);
        s.push(vec![4 * CONCAT_FEATURES, CONCAT_FEATURES]);
        s.push(vec![4 * CONCAT_FEATURES]);
    }
    s
}

struct TrunkCache {
    conv_in: [Vec<f64>; 3],
    conv_pre: [Vec<f64>; 3],
    pool_idx: [Vec<u32>; 3],
    flat: Vec<f64>,
    d1_pre: Vec<f64>,
    d1_mask: Option<Vec<f64>>,
    d1_out: Vec<f64>,
    d2_pre: Vec<f64>,
    /// Input to each map layer and its pre-activation.
    map_in: [Vec<f64>; 2],
    map_pre: [Vec<f64>; 2],
}

struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

impl NetworkParams {
    /// Seeded He-uniform initialisation (`±sqrt(6 / fan_in)`), zero biases,
    /// PReLU slope 0.25. The LSTM uses `±1/sqrt(110)` with forget bias 1.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seeded(seed);
        let mut tensors: Vec<Tensor> = shapes(&arch).iter().map(|s| Tensor::zeros(s)).collect();
        for (slot, t) in tensors.iter_mut().enumerate() {
            let bound = match slot {
                s if [0, 2, 4, D1_W, D2_W, MAP_W[0], MAP_W[1], HEAD_W].contains(&s) => {
                    let fan_in: usize = t.shape()[1..].iter().product();
                    math::sqrt(6.0 / fan_in as f64)
                }
                LSTM_WX | LSTM_WH => 1.0 / math::sqrt(CONCAT_FEATURES as f64),
                _ => 0.0,
            };
            if bound > 0.0 {
                for v in t.data_mut() {
                    *v = (rng.gen::<f64>() * 2.0 - 1.0) * bound;
                }
            }
        }
        for slot in PRELU {
            tensors[slot].data_mut()[0] = PRELU_INIT;
        }
        if arch.recurrent {
            tensors[LSTM_B].data_mut()[CONCAT_FEATURES..2 * CONCAT_FEATURES].fill(1.0);
        }
        Ok(Self { arch, tensors })
    }

    /// All-zero parameters (including the PReLU slope).
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self { arch, tensors: shapes(&arch).iter().map(|s| Tensor::zeros(s)).collect() })
    }

    pub fn zeros_like(&self) -> Self {
        Self { arch: self.arch, tensors: self.tensors.iter().map(Tensor::zeros_like).collect() }
    }

    /// Rebuild from named tensors, checking names and shapes against `arch`.
    pub fn from_named(arch: Architecture, named: Vec<(String, Tensor)>) -> Result<Self> {
        arch.validate()?;
        let expected = shapes(&arch);
        if named.len() != expected.len() {
            return Err(Error::Shape { expected: expected.len(), got: named.len() });
        }
        let mut tensors = Vec::with_capacity(named.len());
        for (slot, ((name, t), shape)) in named.into_iter().zip(&expected).enumerate() {
            if name != NAMES[slot] {
                return Err(Error::Config("checkpoint layer names do not match the architecture"));
            }
            if t.shape() != shape.as_slice() {
                return Err(Error::Shape { expected: shape.iter().product(), got: t.len() });
            }
            tensors.push(t);
        }
        Ok(Self { arch, tensors })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn named_tensors(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        NAMES.iter().copied().zip(self.tensors.iter())
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.named_tensors().find(|(n, _)| *n == name).map(|(_, t)| t)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let slot = NAMES.iter().position(|n| *n == name)?;
        self.tensors.get_mut(slot)
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Slopes of the two map-branch PReLU layers.
    pub fn prelu_slopes(&self) -> [f64; 2] {
        PRELU.map(|slot| self.tensors[slot].data()[0])
    }

    /// Deep copy; the target network.
    pub fn clone_params(&self) -> Self {
        self.clone()
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().all(|t| t.data().iter().all(|v| *v == 0.0))
    }

    fn check_inputs(&self, image: &[f64], map: &[f64]) -> Result<()> {
        if image.len() != self.arch.input_pixels() {
            return Err(Error::Shape { expected: self.arch.input_pixels(), got: image.len() });
        }
        if map.len() != MAP_FEATURES {
            return Err(Error::Shape { expected: MAP_FEATURES, got: map.len() });
        }
        Ok(())
    }

    fn w(&self, slot: usize) -> &[f64] {
        self.tensors[slot].data()
    }

    fn trunk_forward(&self, image: &[f64], map: &[f64], mode: Mode) -> (Vec<f64>, TrunkCache) {
        let a = &self.arch;
        let chain = a.spatial_chain();
        let mut x = image.to_vec();
        let mut channels = 1;
        let mut conv_in: [Vec<f64>; 3] = Default::default();
        let mut conv_pre: [Vec<f64>; 3] = Default::default();
        let mut pool_idx: [Vec<u32>; 3] = Default::default();
        for l in 0..3 {
            let pre = conv_forward(&x, channels, chain[l], self.w(CONV_W[l]), self.w(CONV_B[l]), a.conv_filters[l], a.conv_kernels[l]);
            let mut act = pre.clone();
            relu(&mut act);
            let (pooled, idx) = maxpool_forward(&act, a.conv_filters[l], chain[l]);
            conv_in[l] = core::mem::replace(&mut x, pooled);
            conv_pre[l] = pre;
            pool_idx[l] = idx;
            channels = a.conv_filters[l];
        }
        let flat = x;
        let d1_pre = dense_forward(&flat, self.w(D1_W), self.w(D1_B));
        let mut d1_out = d1_pre.clone();
        relu(&mut d1_out);
        let d1_mask = match mode {
            Mode::Eval => None,
            Mode::Train { dropout_seed } => {
                let mut rng = seeded(dropout_seed);
                let keep = 1.0 - a.dropout;
                let mask: Vec<f64> =
                    (0..a.dense_hidden).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect();
                for (v, m) in d1_out.iter_mut().zip(&mask) {
                    *v *= m;
                }
                Some(mask)
            }
        };
        let d2_pre = dense_forward(&d1_out, self.w(D2_W), self.w(D2_B));
        let slopes = self.prelu_slopes();
        let mut map_in: [Vec<f64>; 2] = Default::default();
        let mut map_pre: [Vec<f64>; 2] = Default::default();
        let mut m = map.to_vec();
        for l in 0..2 {
            let pre = dense_forward(&m, self.w(MAP_W[l]), self.w(MAP_B[l]));
            let out = pre.iter().map(|&v| if v > 0.0 { v } else { slopes[l] * v }).collect();
            map_in[l] = core::mem::replace(&mut m, out);
            map_pre[l] = pre;
        }
        let mut concat = Vec::with_capacity(CONCAT_FEATURES);
        concat.extend(d2_pre.iter().map(|v| v.max(0.0)));
        concat.extend(m);
        let cache = TrunkCache {
            conv_in,
            conv_pre,
            pool_idx,
            flat,
            d1_pre,
            d1_mask,
            d1_out,
            d2_pre,
            map_in,
            map_pre,
        };
        (concat, cache)
    }

    fn trunk_backward(&self, cache: &TrunkCache, dconcat: &[f64], grads: &mut GradientSet) {
        let a = &self.arch;
        let chain = a.spatial_chain();
        let (dimg, dmap) = dconcat.split_at(IMAGE_FEATURES);

        // map branch
        let slopes = self.prelu_slopes();
        let mut dout = dmap.to_vec();
        for l in (0..2).rev() {
            let mut dpre = vec![0.0; MAP_FEATURES];
            let mut dslope = 0.0;
            for ((d, &g), &p) in dpre.iter_mut().zip(&dout).zip(&cache.map_pre[l]) {
                if p > 0.0 {
                    *d = g;
                } else {
                    *d = g * slopes[l];
                    dslope += g * p;
                }
            }
            grads.tensors[PRELU[l]].data_mut()[0] += dslope;
            let mut din = vec![0.0; MAP_FEATURES];
            let (lo, hi) = grads.tensors.split_at_mut(MAP_B[l]);
            let dx = (l > 0).then_some(din.as_mut_slice());
            dense_backward(&cache.map_in[l], self.w(MAP_W[l]), &dpre, lo[MAP_W[l]].data_mut(), hi[0].data_mut(), dx);
            dout = din;
        }

        // image branch
        let mut d2 = dimg.to_vec();
        relu_backward(&cache.d2_pre, &mut d2);
        let mut dd1 = vec![0.0; a.dense_hidden];
        {
            let (lo, hi) = grads.tensors.split_at_mut(D2_B);
            dense_backward(&cache.d1_out, self.w(D2_W), &d2, lo[D2_W].data_mut(), hi[0].data_mut(), Some(&mut dd1));
        }
        if let Some(mask) = &cache.d1_mask {
            for (g, m) in dd1.iter_mut().zip(mask) {
                *g *= m;
            }
        }
        relu_backward(&cache.d1_pre, &mut dd1);
        let mut dflat = vec![0.0; cache.flat.len()];
        {
            let (lo, hi) = grads.tensors.split_at_mut(D1_B);
            dense_backward(&cache.flat, self.w(D1_W), &dd1, lo[D1_W].data_mut(), hi[0].data_mut(), Some(&mut dflat));
        }
        let mut dpooled = dflat;
        for l in (0..3).rev() {
            let size = chain[l];
            let c_out = a.conv_filters[l];
            let c_in = if l == 0 { 1 } else { a.conv_filters[l - 1] };
            let mut dconv = maxpool_backward(&dpooled, &cache.pool_idx[l], c_out * size * size);
            relu_backward(&cache.conv_pre[l], &mut dconv);
            let mut dinput = if l > 0 { Some(vec![0.0; c_in * size * size]) } else { None };
            let (lo, hi) = grads.tensors.split_at_mut(CONV_B[l]);
            conv_backward(
                &cache.conv_in[l],
                c_in,
                size,
                self.w(CONV_W[l]),
                c_out,
                a.conv_kernels[l],
                &dconv,
                lo[CONV_W[l]].data_mut(),
                hi[0].data_mut(),
                dinput.as_deref_mut(),
            );
            if let Some(d) = dinput {
                dpooled = d;
            }
        }
    }

    fn head_forward(&self, features: &[f64]) -> QValues {
        let q = dense_forward(features, self.w(HEAD_W), self.w(HEAD_B));
        [q[0], q[1], q[2], q[3]]
    }

    fn head_backward(&self, features: &[f64], dq: &QValues, grads: &mut GradientSet) -> Vec<f64> {
        let mut dfeat = vec![0.0; CONCAT_FEATURES];
        let (lo, hi) = grads.tensors.split_at_mut(HEAD_B);
        dense_backward(features, self.w(HEAD_W), dq, lo[HEAD_W].data_mut(), hi[0].data_mut(), Some(&mut dfeat));
        dfeat
    }

    fn lstm_forward(&self, x: &[f64], state: &LstmState) -> (LstmState, LstmCache) {
        let hsz = CONCAT_FEATURES;
        let zx = dense_forward(x, self.w(LSTM_WX), self.w(LSTM_B));
        let zh = dense_forward(&state.h, self.w(LSTM_WH), &[0.0; 4 * CONCAT_FEATURES]);
        let mut gates = vec![0.0; 4 * hsz];
        for (j, g) in gates.iter_mut().enumerate() {
            let z = zx[j] + zh[j];
            *g = if (2 * hsz..3 * hsz).contains(&j) { math::tanh(z) } else { math::sigmoid(z) };
        }
        let mut c = vec![0.0; hsz];
        let mut h = vec![0.0; hsz];
        for u in 0..hsz {
            let (i, f, g, o) = (gates[u], gates[hsz + u], gates[2 * hsz + u], gates[3 * hsz + u]);
            c[u] = f * state.c[u] + i * g;
            h[u] = o * math::tanh(c[u]);
        }
        let next = LstmState { h: h.clone(), c: c.clone() };
        let cache = LstmCache { x: x.to_vec(), h_prev: state.h.clone(), c_prev: state.c.clone(), gates, c, h };
        (next, cache)
    }

    /// Q-values for one observation. With the recurrent cell enabled this is
    /// a single step from the zero state.
    pub fn forward(&self, image: &[f64], map: &[f64], mode: Mode) -> Result<QValues> {
        self.check_inputs(image, map)?;
        if self.arch.recurrent {
            let (q, _) = self.forward_recurrent(&[(image, map)], &LstmState::zeros(), mode)?;
            return Ok(q[0]);
        }
        let (features, _) = self.trunk_forward(image, map, mode);
        Ok(self.head_forward(&features))
    }

    /// Runs the trunk at every step and threads the recurrent state. Returns
    /// per-step Q-values and the final state.
    pub fn forward_recurrent(
        &self,
        steps: &[(&[f64], &[f64])],
        initial: &LstmState,
        mode: Mode,
    ) -> Result<(Vec<QValues>, LstmState)> {
        if !self.arch.recurrent {
            return Err(Error::Config("network has no recurrent cell"));
        }
        if steps.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut state = initial.clone();
        let mut out = Vec::with_capacity(steps.len());
        for (t, (image, map)) in steps.iter().enumerate() {
            self.check_inputs(image, map)?;
            let (x, _) = self.trunk_forward(image, map, mode.step(t));
            let (next, _) = self.lstm_forward(&x, &state);
            state = next;
            let rect: Vec<f64> = state.h.iter().map(|v| v.max(0.0)).collect();
            out.push(self.head_forward(&rect));
        }
        Ok((out, state))
    }

    /// Output of the two branches before the head: `(image features, map features)`.
    pub fn branch_features(&self, image: &[f64], map: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_inputs(image, map)?;
        let (concat, _) = self.trunk_forward(image, map, Mode::Eval);
        let (img, m) = concat.split_at(IMAGE_FEATURES);
        Ok((img.to_vec(), m.to_vec()))
    }

    /// Masked MSE over a feedforward batch and its exact gradient with
    /// respect to every parameter. Sample `i` uses dropout seed
    /// `derive_seed(dropout_seed, i)` in train mode.
    pub fn loss_and_gradients(&self, batch: &[TrainingSample<'_>], mode: Mode) -> Result<(f64, GradientSet)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if self.arch.recurrent {
            return Err(Error::Config("recurrent networks train on sequences"));
        }
        let mut grads = self.zeros_like();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (i, s) in batch.iter().enumerate() {
            self.check_inputs(s.image, s.map)?;
            let (features, cache) = self.trunk_forward(s.image, s.map, mode.step(i));
            let q = self.head_forward(&features);
            let err = q[s.action.index()] - s.target;
            loss += err * err * scale;
            let mut dq = [0.0; N_ACTIONS];
            dq[s.action.index()] = 2.0 * err * scale;
            let dfeat = self.head_backward(&features, &dq, &mut grads);
            self.trunk_backward(&cache, &dfeat, &mut grads);
        }
        Ok((loss, grads))
    }

    /// Masked MSE averaged over every step of every sequence, with
    /// backpropagation through time. Each sequence starts from the zero state.
    pub fn sequence_loss_and_gradients(&self, batch: &[SequenceSample<'_>], mode: Mode) -> Result<(f64, GradientSet)> {
        if !self.arch.recurrent {
            return Err(Error::Config("network has no recurrent cell"));
        }
        let total: usize = batch.iter().map(|s| s.steps.len()).sum();
        if total == 0 {
            return Err(Error::EmptyBatch);
        }
        let scale = 1.0 / total as f64;
        let hsz = CONCAT_FEATURES;
        let mut grads = self.zeros_like();
        let mut loss = 0.0;
        for (b, seq) in batch.iter().enumerate() {
            if seq.actions.len() != seq.steps.len() || seq.targets.len() != seq.steps.len() {
                return Err(Error::Shape { expected: seq.steps.len(), got: seq.targets.len() });
            }
            let seq_mode = mode.step(b);
            let mut state = LstmState::zeros();
            let mut trunk_caches = Vec::with_capacity(seq.steps.len());
            let mut lstm_caches = Vec::with_capacity(seq.steps.len());
            let mut dh_out = Vec::with_capacity(seq.steps.len());
            for (t, (image, map)) in seq.steps.iter().enumerate() {
                self.check_inputs(image, map)?;
                let (x, tc) = self.trunk_forward(image, map, seq_mode.step(t));
                let (next, lc) = self.lstm_forward(&x, &state);
                state = next;
                let rect: Vec<f64> = lc.h.iter().map(|v| v.max(0.0)).collect();
                let q = self.head_forward(&rect);
                let a = seq.actions[t].index();
                let err = q[a] - seq.targets[t];
                loss += err * err * scale;
                let mut dq = [0.0; N_ACTIONS];
                dq[a] = 2.0 * err * scale;
                let mut dh = self.head_backward(&rect, &dq, &mut grads);
                relu_backward(&lc.h, &mut dh);
                dh_out.push(dh);
                trunk_caches.push(tc);
                lstm_caches.push(lc);
            }
            let mut dh_next = vec![0.0; hsz];
            let mut dc_next = vec![0.0; hsz];
            for t in (0..seq.steps.len()).rev() {
                let lc = &lstm_caches[t];
                let mut dz = vec![0.0; 4 * hsz];
                for u in 0..hsz {
                    let dh = dh_out[t][u] + dh_next[u];
                    let (i, f, g, o) = (lc.gates[u], lc.gates[hsz + u], lc.gates[2 * hsz + u], lc.gates[3 * hsz + u]);
                    let tc = math::tanh(lc.c[u]);
                    let dc = dh * o * (1.0 - tc * tc) + dc_next[u];
                    dz[u] = dc * g * i * (1.0 - i);
                    dz[hsz + u] = dc * lc.c_prev[u] * f * (1.0 - f);
                    dz[2 * hsz + u] = dc * i * (1.0 - g * g);
                    dz[3 * hsz + u] = dh * tc * o * (1.0 - o);
                    dc_next[u] = dc * f;
                }
                let mut dx = vec![0.0; hsz];
                {
                    let (lo, hi) = grads.tensors.split_at_mut(LSTM_B);
                    dense_backward(&lc.x, self.w(LSTM_WX), &dz, lo[LSTM_WX].data_mut(), hi[0].data_mut(), Some(&mut dx));
                }
                let mut dh_prev = vec![0.0; hsz];
                let mut scratch_bias = vec![0.0; 4 * hsz];
                dense_backward(
                    &lc.h_prev,
                    self.w(LSTM_WH),
                    &dz,
                    grads.tensors[LSTM_WH].data_mut(),
                    &mut scratch_bias,
                    Some(&mut dh_prev),
                );
                dh_next = dh_prev;
                self.trunk_backward(&trunk_caches[t], &dx, &mut grads);
            }
        }
        Ok((loss, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Architecture {
        Architecture { input_size: 12, conv_filters: [2, 3, 3], conv_kernels: [8, 4, 3], dense_hidden: 8, dropout: 0.5, recurrent: false }
    }

    fn inputs(arch: &Architecture, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = seeded(seed);
        let img = (0..arch.input_pixels()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let map = (0..MAP_FEATURES).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        (img, map)
    }

    #[test]
    fn table_i_spatial_chain() {
        let a = Architecture::table_i();
        assert_eq!(a.spatial_chain(), [84, 42, 21, 10]);
        assert_eq!(a.flatten_width(), 6400);
        assert_eq!(CONCAT_FEATURES, 110);
    }

    #[test]
    fn zero_weights_output_head_bias() {
        let mut p = NetworkParams::zeros(tiny()).unwrap();
        p.tensor_mut("head.bias").unwrap().data_mut().copy_from_slice(&[0.1, -0.2, 0.3, 0.4]);
        let (img, map) = inputs(&tiny(), 1);
        assert_eq!(p.forward(&img, &map, Mode::Eval).unwrap(), [0.1, -0.2, 0.3, 0.4]);
    }

    #[test]
    fn eval_is_deterministic_and_train_depends_on_seed() {
        let p = NetworkParams::init(tiny(), 3).unwrap();
        let (img, map) = inputs(&tiny(), 2);
        assert_eq!(p.forward(&img, &map, Mode::Eval).unwrap(), p.forward(&img, &map, Mode::Eval).unwrap());
        let t1 = p.forward(&img, &map, Mode::Train { dropout_seed: 9 }).unwrap();
        assert_eq!(t1, p.forward(&img, &map, Mode::Train { dropout_seed: 9 }).unwrap());
    }

    #[test]
    fn shape_mismatch_is_error() {
        let p = NetworkParams::init(tiny(), 3).unwrap();
        assert!(p.forward(&[0.0; 5], &[0.0; 100], Mode::Eval).is_err());
        assert!(p.forward(&[0.0; 144], &[0.0; 99], Mode::Eval).is_err());
    }

    #[test]
    fn branch_widths() {
        let p = NetworkParams::init(tiny(), 3).unwrap();
        let (img, map) = inputs(&tiny(), 2);
        let (i, m) = p.branch_features(&img, &map).unwrap();
        assert_eq!((i.len(), m.len()), (IMAGE_FEATURES, MAP_FEATURES));
    }

    #[test]
    fn map_raster_changes_output() {
        let p = NetworkParams::init(tiny(), 5).unwrap();
        let (img, map) = inputs(&tiny(), 2);
        let (_, map2) = inputs(&tiny(), 3);
        assert_ne!(p.forward(&img, &map, Mode::Eval).unwrap(), p.forward(&img, &map2, Mode::Eval).unwrap());
    }

    #[test]
    fn recurrent_requires_steps() {
        let p = NetworkParams::init(tiny().with_recurrent(true), 1).unwrap();
        assert_eq!(p.forward_recurrent(&[], &LstmState::zeros(), Mode::Eval).unwrap_err(), Error::EmptySequence);
    }

    #[test]
    fn zero_loss_gives_zero_gradients() {
        let p = NetworkParams::init(tiny(), 4).unwrap();
        let (img, map) = inputs(&tiny(), 2);
        let q = p.forward(&img, &map, Mode::Eval).unwrap();
        let batch = [TrainingSample { image: &img, map: &map, action: Action::East, target: q[2] }];
        let (loss, g) = p.loss_and_gradients(&batch, Mode::Eval).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.is_zero());
    }

    #[test]
    fn named_round_trip() {
        let p = NetworkParams::init(tiny().with_recurrent(true), 4).unwrap();
        let named = p.named_tensors().map(|(n, t)| (String::from(n), t.clone())).collect();
        assert_eq!(NetworkParams::from_named(*p.architecture(), named).unwrap(), p);
    }
}
