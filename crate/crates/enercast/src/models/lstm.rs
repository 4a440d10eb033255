//! A single-layer LSTM with two tanh dense layers and a linear scalar head,
//! trained by backpropagation-through-time with mini-batch RMSProp on MAE.
//!
//! All parameters live in one flat vector so the optimizer and the
//! finite-difference checks can treat the model as a plain parameter array.
//! Gate math is the standard formulation: `i,f,o = sigmoid(W.[h,x]+b)`,
//! `g = tanh(W.[h,x]+b)`, `c = f*c + i*g`, `h = o*tanh(c)`.

use super::rmsprop::{rmsprop_step, RmspropState};
use super::ModelError;
use crate::features::SequenceDataset;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub dense1: usize,
    pub dense2: usize,
}

impl LstmConfig {
    pub fn new(hidden: usize, dense1: usize, dense2: usize) -> Self {
        LstmConfig {
            input_dim: 5,
            hidden,
            dense1,
            dense2,
        }
    }

    fn gate_block(&self) -> usize {
        self.hidden * (self.hidden + self.input_dim) + self.hidden
    }

    pub fn param_count(&self) -> usize {
        4 * self.gate_block()
            + self.dense1 * self.hidden
            + self.dense1
            + self.dense2 * self.dense1
            + self.dense2
            + self.dense2
            + 1
    }

    // Flat-vector offsets. Gate order: input, forget, candidate, output.
    fn gate_w(&self, gate: usize) -> usize {
        gate * self.gate_block()
    }

    fn gate_b(&self, gate: usize) -> usize {
        self.gate_w(gate) + self.hidden * (self.hidden + self.input_dim)
    }

    fn d1_w(&self) -> usize {
        4 * self.gate_block()
    }

    fn d1_b(&self) -> usize {
        self.d1_w() + self.dense1 * self.hidden
    }

    fn d2_w(&self) -> usize {
        self.d1_b() + self.dense1
    }

    fn d2_b(&self) -> usize {
        self.d2_w() + self.dense2 * self.dense1
    }

    fn out_w(&self) -> usize {
        self.d2_b() + self.dense2
    }

    fn out_b(&self) -> usize {
        self.out_w() + self.dense2
    }
}

pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_CANDIDATE: usize = 2;
pub const GATE_OUTPUT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub params: Vec<f64>,
}

impl LstmModel {
    pub fn zeros(config: LstmConfig) -> Self {
        LstmModel {
            params: vec![0.0; config.param_count()],
            config,
        }
    }

    /// Seeded uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases,
    /// forget-gate bias 1.
    pub fn init(config: LstmConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(config);
        let c = config;
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, params: &mut [f64]| {
            let s = (1.0 / fan_in as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.gen_range(-s..s);
            }
        };
        for gate in 0..4 {
            fill(
                c.gate_w(gate)..c.gate_w(gate) + c.hidden * (c.hidden + c.input_dim),
                c.hidden + c.input_dim,
                &mut m.params,
            );
        }
        fill(c.d1_w()..c.d1_w() + c.dense1 * c.hidden, c.hidden, &mut m.params);
        fill(c.d2_w()..c.d2_w() + c.dense2 * c.dense1, c.dense1, &mut m.params);
        fill(c.out_w()..c.out_w() + c.dense2, c.dense2, &mut m.params);
        for b in &mut m.params[c.gate_b(GATE_FORGET)..c.gate_b(GATE_FORGET) + c.hidden] {
            *b = 1.0;
        }
        m
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-step activations kept for BPTT.
#[derive(Debug, Clone)]
struct StepCache {
    /// `[h_{t-1}, x_t]`
    z: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// All intermediates of one sample's forward pass.
#[derive(Debug, Clone)]
pub struct SampleCache {
    steps: Vec<StepCache>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    pub pred: f64,
}

fn forward_sample(m: &LstmModel, sequence: &[[f64; 5]]) -> SampleCache {
    let c = m.config;
    let h_dim = c.hidden;
    let z_dim = h_dim + c.input_dim;
    let p = &m.params;

    let mut h = vec![0.0; h_dim];
    let mut cell = vec![0.0; h_dim];
    let mut steps = Vec::with_capacity(sequence.len());

    for x in sequence {
        let mut z = Vec::with_capacity(z_dim);
        z.extend_from_slice(&h);
        z.extend_from_slice(&x[..c.input_dim]);

        let gate_pre = |gate: usize, unit: usize, z: &[f64]| -> f64 {
            let row = c.gate_w(gate) + unit * z_dim;
            let mut acc = p[c.gate_b(gate) + unit];
            for (k, &zv) in z.iter().enumerate() {
                acc += p[row + k] * zv;
            }
            acc
        };

        let mut step = StepCache {
            z,
            i: vec![0.0; h_dim],
            f: vec![0.0; h_dim],
            g: vec![0.0; h_dim],
            o: vec![0.0; h_dim],
            c: vec![0.0; h_dim],
            tanh_c: vec![0.0; h_dim],
            h: vec![0.0; h_dim],
        };
        for u in 0..h_dim {
            step.i[u] = sigmoid(gate_pre(GATE_INPUT, u, &step.z));
            step.f[u] = sigmoid(gate_pre(GATE_FORGET, u, &step.z));
            step.g[u] = gate_pre(GATE_CANDIDATE, u, &step.z).tanh();
            step.o[u] = sigmoid(gate_pre(GATE_OUTPUT, u, &step.z));
            step.c[u] = step.f[u] * cell[u] + step.i[u] * step.g[u];
            step.tanh_c[u] = step.c[u].tanh();
            step.h[u] = step.o[u] * step.tanh_c[u];
        }
        h = step.h.clone();
        cell = step.c.clone();
        steps.push(step);
    }

    let dense = |w_off: usize, b_off: usize, rows: usize, input: &[f64]| -> Vec<f64> {
        (0..rows)
            .map(|r| {
                let mut acc = p[b_off + r];
                for (k, &v) in input.iter().enumerate() {
                    acc += p[w_off + r * input.len() + k] * v;
                }
                acc.tanh()
            })
            .collect()
    };
    let a1 = dense(c.d1_w(), c.d1_b(), c.dense1, &h);
    let a2 = dense(c.d2_w(), c.d2_b(), c.dense2, &a1);
    let mut pred = p[c.out_b()];
    for (k, &v) in a2.iter().enumerate() {
        pred += p[c.out_w() + k] * v;
    }
    SampleCache { steps, a1, a2, pred }
}

/// Forward pass over a batch, returning predictions and the activation
/// caches needed by [`lstm_backward`]. Samples are independent, so batch
/// order does not affect per-sample outputs.
pub fn lstm_forward(
    m: &LstmModel,
    samples: &[crate::features::SequenceSample],
) -> Result<(Vec<f64>, Vec<SampleCache>), ModelError> {
    for s in samples {
        if s.sequence.is_empty() {
            return Err(ModelError::ShapeMismatch("empty sequence".into()));
        }
        if s.sequence.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(ModelError::NonFiniteInput);
        }
    }
    if m.config.input_dim != 5 {
        return Err(ModelError::ShapeMismatch(format!(
            "model expects input dim {}, sequences carry 5",
            m.config.input_dim
        )));
    }
    let caches: Vec<SampleCache> = samples
        .iter()
        .map(|s| forward_sample(m, &s.sequence))
        .collect();
    let preds = caches.iter().map(|c| c.pred).collect();
    Ok((preds, caches))
}

/// Exact analytic gradient of the sum over samples of
/// `loss_grad[s] * pred[s]`'s upstream loss, i.e. sum-reduction BPTT.
pub fn lstm_backward(
    m: &LstmModel,
    caches: &[SampleCache],
    loss_grads: &[f64],
) -> Result<Vec<f64>, ModelError> {
    if caches.len() != loss_grads.len() {
        return Err(ModelError::StaleCache);
    }
    let c = m.config;
    if caches.iter().any(|s| {
        s.steps.is_empty()
            || s.steps[0].h.len() != c.hidden
            || s.a1.len() != c.dense1
            || s.a2.len() != c.dense2
    }) {
        return Err(ModelError::StaleCache);
    }
    let h_dim = c.hidden;
    let z_dim = h_dim + c.input_dim;
    let p = &m.params;
    let mut grad = vec![0.0; c.param_count()];

    for (cache, &dpred) in caches.iter().zip(loss_grads) {
        if dpred == 0.0 {
            continue;
        }
        // Output head.
        grad[c.out_b()] += dpred;
        let mut da2 = vec![0.0; c.dense2];
        for k in 0..c.dense2 {
            grad[c.out_w() + k] += dpred * cache.a2[k];
            da2[k] = p[c.out_w() + k] * dpred;
        }
        // Dense 2 (tanh).
        let mut da1 = vec![0.0; c.dense1];
        for r in 0..c.dense2 {
            let dz = da2[r] * (1.0 - cache.a2[r] * cache.a2[r]);
            grad[c.d2_b() + r] += dz;
            for k in 0..c.dense1 {
                grad[c.d2_w() + r * c.dense1 + k] += dz * cache.a1[k];
                da1[k] += p[c.d2_w() + r * c.dense1 + k] * dz;
            }
        }
        // Dense 1 (tanh).
        let h_last = &cache.steps.last().unwrap().h;
        let mut dh = vec![0.0; h_dim];
        for r in 0..c.dense1 {
            let dz = da1[r] * (1.0 - cache.a1[r] * cache.a1[r]);
            grad[c.d1_b() + r] += dz;
            for k in 0..h_dim {
                grad[c.d1_w() + r * h_dim + k] += dz * h_last[k];
                dh[k] += p[c.d1_w() + r * h_dim + k] * dz;
            }
        }
        // Through time.
        let mut dc = vec![0.0; h_dim];
        for t in (0..cache.steps.len()).rev() {
            let step = &cache.steps[t];
            let c_prev = if t > 0 {
                cache.steps[t - 1].c.as_slice()
            } else {
                &[]
            };
            let mut dh_prev = vec![0.0; h_dim];
            for u in 0..h_dim {
                let d_o = dh[u] * step.tanh_c[u];
                let dct = dc[u] + dh[u] * step.o[u] * (1.0 - step.tanh_c[u] * step.tanh_c[u]);
                let d_i = dct * step.g[u];
                let d_g = dct * step.i[u];
                let d_f = dct * if t > 0 { c_prev[u] } else { 0.0 };
                dc[u] = dct * step.f[u];

                let dz_gates = [
                    d_i * step.i[u] * (1.0 - step.i[u]),
                    d_f * step.f[u] * (1.0 - step.f[u]),
                    d_g * (1.0 - step.g[u] * step.g[u]),
                    d_o * step.o[u] * (1.0 - step.o[u]),
                ];
                for (gate, &dz) in dz_gates.iter().enumerate() {
                    if dz == 0.0 {
                        continue;
                    }
                    let row = c.gate_w(gate) + u * z_dim;
                    grad[c.gate_b(gate) + u] += dz;
                    for (k, &zv) in step.z.iter().enumerate() {
                        grad[row + k] += dz * zv;
                    }
                    for (k, dhp) in dh_prev.iter_mut().enumerate() {
                        *dhp += p[row + k] * dz;
                    }
                }
            }
            dh = dh_prev;
        }
    }
    Ok(grad)
}

pub fn lstm_predict(
    m: &LstmModel,
    samples: &[crate::features::SequenceSample],
) -> Result<Vec<f64>, ModelError> {
    Ok(lstm_forward(m, samples)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub dense1: usize,
    pub dense2: usize,
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 32,
            dense1: 5,
            dense2: 5,
            batch: 64,
            epochs: 20,
            lr: 0.001,
            rho: 0.9,
            eps: 1e-8,
            seed: 42,
        }
    }
}

/// Mini-batch RMSProp on MAE loss. Batches are drawn in seeded shuffled
/// order each epoch; the last partial batch is kept. Returns the model and
/// the per-epoch mean training loss.
pub fn train_lstm(
    data: &SequenceDataset,
    cfg: &TrainConfig,
) -> Result<(LstmModel, Vec<f64>), ModelError> {
    if data.samples.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    assert!(cfg.batch >= 1 && cfg.epochs >= 1, "invalid training config");
    let mut model = LstmModel::init(LstmConfig::new(cfg.hidden, cfg.dense1, cfg.dense2), cfg.seed);
    let mut opt = RmspropState::new(model.params.len(), cfg.lr, cfg.rho, cfg.eps);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5DEE_CE66);
    let mut order: Vec<usize> = (0..data.samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<_> = chunk.iter().map(|&i| data.samples[i].clone()).collect();
            let (preds, caches) = lstm_forward(&model, &batch)?;
            let n = batch.len() as f64;
            let mut loss = 0.0;
            // MAE with the subgradient at zero residual defined as 0.
            let dpreds: Vec<f64> = preds
                .iter()
                .zip(&batch)
                .map(|(&p, s)| {
                    let r = p - s.target;
                    loss += r.abs() / n;
                    if r > 0.0 {
                        1.0 / n
                    } else if r < 0.0 {
                        -1.0 / n
                    } else {
                        0.0
                    }
                })
                .collect();
            if !loss.is_finite() {
                return Err(ModelError::DivergedTraining(epoch));
            }
            let grads = lstm_backward(&model, &caches, &dpreds)?;
            rmsprop_step(&mut model.params, &grads, &mut opt)?;
            epoch_loss += loss;
            batches += 1;
        }
        let mean = epoch_loss / batches as f64;
        if !mean.is_finite() || model.params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::DivergedTraining(epoch));
        }
        history.push(mean);
    }
    Ok((model, history))
}
