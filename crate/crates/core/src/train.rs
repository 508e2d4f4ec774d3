//! Feed-forward classifier trained on a precomputed embedding matrix.
//!
//! `H^{(l+1)} = σ(H^{(l)} W^{(l)} + b^{(l)})` with ReLU between layers and a
//! softmax (multi-class) or per-class logistic (multi-label) output. Rows
//! are independent, so training needs no graph access at all.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::Reader;
use crate::error::{Error, Result};
use crate::features::EmbeddingMatrix;
use crate::labels::{micro_f1, ClassSet, LabelSet, Task};

const MODEL_MAGIC: &[u8; 4] = b"SCML";
const MODEL_VERSION: u32 = 1;

/// Probability cut for multi-label predictions.
pub const MULTI_LABEL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub layers: usize,
    pub width: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub bias: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layers: 3,
            width: 128,
            batch_size: 64,
            max_epochs: 1000,
            learning_rate: 0.01,
            momentum: 0.9,
            patience: 50,
            bias: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.width == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "layers, width and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter(format!(
                "momentum {} not in [0, 1)",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// Dense layer; `weights` is `input x output`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub input: usize,
    pub output: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(input: usize, output: usize) -> Self {
        Layer {
            input,
            output,
            weights: vec![0.0; input * output],
            bias: vec![0.0; output],
        }
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.output..(i + 1) * self.output];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub task: Task,
    pub use_bias: bool,
    pub layers: Vec<Layer>,
}

impl Model {
    /// Glorot-uniform weights, zero biases.
    pub fn init(input_dim: usize, output_dim: usize, task: Task, cfg: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(cfg.width, cfg.layers - 1));
        dims.push(output_dim);
        let layers = dims
            .windows(2)
            .map(|d| {
                let mut layer = Layer::zeros(d[0], d[1]);
                let limit = (6.0 / (d[0] + d[1]).max(1) as f64).sqrt();
                for w in &mut layer.weights {
                    *w = rng.random_range(-limit..limit);
                }
                layer
            })
            .collect();
        Model {
            task,
            use_bias: cfg.bias,
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    /// Pre-activations of every layer for one input row.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut trace: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.output];
            layer.forward(&h, &mut z);
            if l + 1 < self.layers.len() {
                h = z.iter().map(|&v| v.max(0.0)).collect();
            }
            trace.push(z);
        }
        trace
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).pop().unwrap()
    }

    /// Class probabilities for one row.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        output_probabilities(self.task, &self.logits(x))
    }

    fn decide(&self, x: &[f64]) -> ClassSet {
        let logits = self.logits(x);
        match self.task {
            Task::MultiClass => {
                let mut best = 0;
                for (c, &z) in logits.iter().enumerate() {
                    if z > logits[best] {
                        best = c;
                    }
                }
                vec![best as u32]
            }
            Task::MultiLabel => logits
                .iter()
                .enumerate()
                .filter(|(_, &z)| sigmoid(z) > MULTI_LABEL_THRESHOLD)
                .map(|(c, _)| c as u32)
                .collect(),
        }
    }

    /// Mean loss over `rows` and the matching gradient, laid out like the
    /// layers.
    pub fn loss_and_grad(&self, rows: &[&[f64]], targets: &[&[u32]]) -> (f64, Vec<Layer>) {
        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.input, l.output)).collect();
        let mut total = 0.0;
        let scale = 1.0 / rows.len().max(1) as f64;
        for (x, t) in rows.iter().zip(targets) {
            let trace = self.forward_trace(x);
            let logits = trace.last().unwrap();
            let (loss, mut delta) = output_loss(self.task, logits, t);
            total += loss;
            for l in (0..self.layers.len()).rev() {
                let input: Vec<f64> = if l == 0 {
                    x.to_vec()
                } else {
                    trace[l - 1].iter().map(|&v| v.max(0.0)).collect()
                };
                let layer = &self.layers[l];
                let g = &mut grads[l];
                for (i, &hi) in input.iter().enumerate() {
                    if hi == 0.0 {
                        continue;
                    }
                    let row = &mut g.weights[i * layer.output..(i + 1) * layer.output];
                    for (gw, &d) in row.iter_mut().zip(&delta) {
                        *gw += scale * hi * d;
                    }
                }
                if self.use_bias {
                    for (gb, &d) in g.bias.iter_mut().zip(&delta) {
                        *gb += scale * d;
                    }
                }
                if l > 0 {
                    let prev = &trace[l - 1];
                    let mut back = vec![0.0; layer.input];
                    for (i, b) in back.iter_mut().enumerate() {
                        if prev[i] <= 0.0 {
                            continue;
                        }
                        let row = &layer.weights[i * layer.output..(i + 1) * layer.output];
                        *b = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                    }
                    delta = back;
                }
            }
        }
        (total * scale, grads)
    }

    pub fn loss(&self, rows: &[&[f64]], targets: &[&[u32]]) -> f64 {
        let total: f64 = rows
            .iter()
            .zip(targets)
            .map(|(x, t)| output_loss(self.task, &self.logits(x), t).0)
            .sum();
        total / rows.len().max(1) as f64
    }

    /// `SCML`, version, task, bias flag, layer count, `L + 1` dims, then per
    /// layer the row-major weights and (if present) the bias, all binary32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.push(match self.task {
            Task::MultiClass => 0,
            Task::MultiLabel => 1,
        });
        out.push(self.use_bias as u8);
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.input_dim() as u64).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.output as u64).to_le_bytes());
        }
        for l in &self.layers {
            for &w in &l.weights {
                out.extend_from_slice(&(w as f32).to_le_bytes());
            }
            if self.use_bias {
                for &b in &l.bias {
                    out.extend_from_slice(&(b as f32).to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(MODEL_MAGIC)?;
        let version = r.u32("version")?;
        if version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let task = match r.u8("task")? {
            0 => Task::MultiClass,
            1 => Task::MultiLabel,
            t => return Err(Error::Format(format!("unknown task tag {t}"))),
        };
        let use_bias = r.u8("bias flag")? != 0;
        let num_layers = r.u32("layer count")? as usize;
        if num_layers == 0 {
            return Err(Error::Format("model has no layers".into()));
        }
        let mut dims = Vec::with_capacity(num_layers + 1);
        for _ in 0..=num_layers {
            dims.push(r.usize("layer dim")?);
        }
        let mut layers = Vec::with_capacity(num_layers);
        for d in dims.windows(2) {
            let count = d[0]
                .checked_mul(d[1])
                .ok_or_else(|| Error::Format("layer size overflows".into()))?;
            let mut layer = Layer::zeros(d[0], d[1]);
            for w in layer.weights.iter_mut().take(count) {
                *w = r.f32("weight")? as f64;
            }
            if use_bias {
                for b in &mut layer.bias {
                    *b = r.f32("bias")? as f64;
                }
            }
            layers.push(layer);
        }
        r.finish()?;
        let m = Model { task, use_bias, layers };
        if m.layers
            .iter()
            .any(|l| l.weights.iter().chain(&l.bias).any(|x| !x.is_finite()))
        {
            return Err(Error::Format("model holds non-finite parameters".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn output_probabilities(task: Task, logits: &[f64]) -> Vec<f64> {
    match task {
        Task::MultiClass => softmax(logits),
        Task::MultiLabel => logits.iter().map(|&z| sigmoid(z)).collect(),
    }
}

/// Loss for one row and its gradient with respect to the logits.
fn output_loss(task: Task, logits: &[f64], target: &[u32]) -> (f64, Vec<f64>) {
    match task {
        Task::MultiClass => {
            let mut p = softmax(logits);
            let y = target[0] as usize;
            let loss = -(p[y].max(1e-300)).ln();
            p[y] -= 1.0;
            (loss, p)
        }
        Task::MultiLabel => {
            let mut loss = 0.0;
            let mut grad = Vec::with_capacity(logits.len());
            for (c, &z) in logits.iter().enumerate() {
                let y = if target.binary_search(&(c as u32)).is_ok() {
                    1.0
                } else {
                    0.0
                };
                loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
                grad.push(sigmoid(z) - y);
            }
            (loss, grad)
        }
    }
}

fn rows_of(p: &EmbeddingMatrix, idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&v| {
            let mut row = vec![0.0; p.num_cols()];
            p.row_into(v, &mut row);
            row
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the best validation score.
    pub model: Model,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub history: Vec<EpochLog>,
}

fn check_embedding(p: &EmbeddingMatrix, y: &LabelSet) -> Result<()> {
    if p.num_rows() != y.num_nodes() {
        return Err(Error::Dimension(format!(
            "embedding has {} rows but labels cover {} nodes",
            p.num_rows(),
            y.num_nodes()
        )));
    }
    Ok(())
}

/// Mini-batch SGD with momentum and early stopping on validation micro-F1
/// (training micro-F1 when there is no validation split), validation loss
/// breaking ties.
pub fn train(p: &EmbeddingMatrix, y: &LabelSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_embedding(p, y)?;
    if y.train.is_empty() {
        return Err(Error::Empty("training split is empty".into()));
    }
    let num_classes = y.num_classes.max(1);
    if y.task == Task::MultiClass && num_classes < 2 {
        return Err(Error::InvalidParameter("multi-class training needs two classes".into()));
    }
    let mut model = Model::init(p.num_cols(), num_classes, y.task, cfg);
    let mut velocity: Vec<Layer> = model.layers.iter().map(|l| Layer::zeros(l.input, l.output)).collect();

    let train_rows = rows_of(p, &y.train);
    let train_targets: Vec<&[u32]> = y.train.iter().map(|&v| y.classes(v)).collect();
    let (val_idx, val_rows) = if y.val.is_empty() {
        (&y.train, rows_of(p, &y.train))
    } else {
        (&y.val, rows_of(p, &y.val))
    };
    let val_truth: Vec<ClassSet> = val_idx.iter().map(|&v| y.classes(v).to_vec()).collect();
    let val_refs: Vec<&[f64]> = val_rows.iter().map(|r| r.as_slice()).collect();
    let val_targets: Vec<&[u32]> = val_truth.iter().map(|t| t.as_slice()).collect();
    // (micro-F1, loss); loss breaks ties once F1 saturates
    let score = |m: &Model| {
        let pred: Vec<ClassSet> = val_rows.iter().map(|r| m.decide(r)).collect();
        (micro_f1(&pred, &val_truth), m.loss(&val_refs, &val_targets))
    };

    let (f1, loss) = score(&model);
    let mut best = (model.clone(), 0usize, f1, loss);
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut since_best = 0usize;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let rows: Vec<&[f64]> = batch.iter().map(|&i| train_rows[i].as_slice()).collect();
            let targets: Vec<&[u32]> = batch.iter().map(|&i| train_targets[i]).collect();
            let (loss, grads) = model.loss_and_grad(&rows, &targets);
            epoch_loss += loss * batch.len() as f64;
            for ((layer, vel), g) in model.layers.iter_mut().zip(&mut velocity).zip(&grads) {
                for ((w, v), gw) in layer.weights.iter_mut().zip(&mut vel.weights).zip(&g.weights) {
                    *v = cfg.momentum * *v - cfg.learning_rate * gw;
                    *w += *v;
                }
                if model.use_bias {
                    for ((b, v), gb) in layer.bias.iter_mut().zip(&mut vel.bias).zip(&g.bias) {
                        *v = cfg.momentum * *v - cfg.learning_rate * gb;
                        *b += *v;
                    }
                }
            }
        }
        let (val_f1, val_loss) = score(&model);
        history.push(EpochLog {
            epoch,
            train_loss: epoch_loss / train_rows.len() as f64,
            val_f1,
        });
        if val_f1 > best.2 || (val_f1 == best.2 && val_loss < best.3) {
            best = (model.clone(), epoch, val_f1, val_loss);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        model: best.0,
        best_epoch: best.1,
        best_val_f1: best.2,
        history,
    })
}

fn check_model(m: &Model, p: &EmbeddingMatrix) -> Result<()> {
    if p.num_cols() != m.input_dim() {
        return Err(Error::Dimension(format!(
            "model expects {} input features but the embedding has {}",
            m.input_dim(),
            p.num_cols()
        )));
    }
    Ok(())
}

/// Predicted class sets for every row: argmax (lowest id on ties) for
/// multi-class, probability above [`MULTI_LABEL_THRESHOLD`] for multi-label.
pub fn predict(m: &Model, p: &EmbeddingMatrix) -> Result<Vec<ClassSet>> {
    predict_batched(m, p, p.num_rows().max(1))
}

pub fn predict_batched(m: &Model, p: &EmbeddingMatrix, batch_size: usize) -> Result<Vec<ClassSet>> {
    check_model(m, p)?;
    let all: Vec<usize> = (0..p.num_rows()).collect();
    let mut out = Vec::with_capacity(p.num_rows());
    for chunk in all.chunks(batch_size.max(1)) {
        out.extend(rows_of(p, chunk).iter().map(|r| m.decide(r)));
    }
    Ok(out)
}

/// Row-wise output probabilities.
pub fn predict_proba(m: &Model, p: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
    check_model(m, p)?;
    let all: Vec<usize> = (0..p.num_rows()).collect();
    Ok(rows_of(p, &all).iter().map(|r| m.probabilities(r)).collect())
}
