//! Feature learning: a fully-connected network with rectifier hidden
//! units, identity output, and a tanh head relaxing the sign function so
//! the pairwise loss has usable gradients.
//!
//! All training math is f64. The sign convention is sign(0) = +1
//! everywhere.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::coder::CodeMatrix;
use crate::dataset::FeatureMatrix;
use crate::supervision::{SampleSplit, SimilarityOracle};

/// Magic bytes of the model file format.
pub const MODEL_MAGIC: &[u8; 4] = b"DDNN";
/// Current model file format version.
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FeatnetError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite parameter in layer {layer}: training diverged")]
    Divergence { layer: usize },
    #[error("non-finite network output: training diverged")]
    NonFiniteOutput,
    #[error("anchor set is empty")]
    EmptyAnchors,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes in model file")]
    BadMagic,
    #[error("unsupported model version {0}")]
    BadVersion(u32),
}

/// One affine layer; weights are (out x in).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }
}

/// Feed-forward map F(x) with rectifier hidden activations and identity
/// output. The hash head applies tanh (training) or sign (encoding) on
/// top of the output.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNet {
    layers: Vec<DenseLayer>,
}

impl FeatureNet {
    /// Build from explicit layers; consecutive dimensions must chain.
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self, FeatnetError> {
        if layers.is_empty() {
            return Err(FeatnetError::BadConfig("network needs >= 1 layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[1].in_dim() != pair[0].out_dim() {
                return Err(FeatnetError::DimensionMismatch(format!(
                    "layer output {} feeds layer input {}",
                    pair[0].out_dim(),
                    pair[1].in_dim()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(FeatnetError::DimensionMismatch(format!(
                    "layer {i}: bias length {} != rows {}",
                    l.bias.len(),
                    l.out_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Symmetric uniform init with per-layer bound sqrt(6/(fan_in+fan_out)),
    /// zero biases. `sizes` lists [d, hidden.., c].
    pub fn glorot<R: Rng>(sizes: &[usize], rng: &mut R) -> Result<Self, FeatnetError> {
        if sizes.len() < 2 {
            return Err(FeatnetError::BadConfig(
                "need input and output sizes".into(),
            ));
        }
        if sizes.contains(&0) {
            return Err(FeatnetError::BadConfig("layer sizes must be >= 1".into()));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights =
                Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-bound..bound));
            layers.push(DenseLayer {
                weights,
                bias: Array1::zeros(fan_out),
            });
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access for parameter perturbation (finite-difference
    /// checks); dimensions must be left unchanged.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    fn trace(&self, x: ArrayView1<'_, f64>) -> Result<ForwardTrace, FeatnetError> {
        if x.len() != self.input_dim() {
            return Err(FeatnetError::DimensionMismatch(format!(
                "input length {} != network input {}",
                x.len(),
                self.input_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        acts.push(x.to_owned());
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.weights.dot(acts.last().unwrap()) + &layer.bias;
            let out = if l == last {
                z.clone()
            } else {
                z.mapv(|v| v.max(0.0))
            };
            pre.push(z);
            acts.push(out);
        }
        Ok(ForwardTrace { acts, pre })
    }

    /// Raw output z = F(x) and relaxed code a = tanh(z).
    pub fn forward(
        &self,
        x: ArrayView1<'_, f64>,
    ) -> Result<(Array1<f64>, Array1<f64>), FeatnetError> {
        let trace = self.trace(x)?;
        let z = trace.acts.last().unwrap().clone();
        if z.iter().any(|v| !v.is_finite()) {
            return Err(FeatnetError::NonFiniteOutput);
        }
        let a = z.mapv(f64::tanh);
        Ok((z, a))
    }

    /// Binary code sign(F(x)), with sign(0) = +1.
    pub fn encode(&self, x: ArrayView1<'_, f64>) -> Result<Vec<i8>, FeatnetError> {
        let (z, _) = self.forward(x)?;
        Ok(z.iter().map(|&v| if v >= 0.0 { 1i8 } else { -1i8 }).collect())
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatnetError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MODEL_MAGIC)?;
        w.write_u32::<LittleEndian>(MODEL_VERSION)?;
        w.write_u32::<LittleEndian>(self.layers.len() as u32)?;
        for layer in &self.layers {
            w.write_u64::<LittleEndian>(layer.out_dim() as u64)?;
            w.write_u64::<LittleEndian>(layer.in_dim() as u64)?;
            for v in layer.weights.iter() {
                w.write_f64::<LittleEndian>(*v)?;
            }
            for v in layer.bias.iter() {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeatnetError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(FeatnetError::BadMagic);
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != MODEL_VERSION {
            return Err(FeatnetError::BadVersion(version));
        }
        let count = r.read_u32::<LittleEndian>()? as usize;
        if count == 0 {
            return Err(FeatnetError::BadConfig("model has no layers".into()));
        }
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let rows = r.read_u64::<LittleEndian>()? as usize;
            let cols = r.read_u64::<LittleEndian>()? as usize;
            let mut weights = vec![0f64; rows * cols];
            r.read_f64_into::<LittleEndian>(&mut weights)?;
            let mut bias = vec![0f64; rows];
            r.read_f64_into::<LittleEndian>(&mut bias)?;
            layers.push(DenseLayer {
                weights: Array2::from_shape_vec((rows, cols), weights)
                    .expect("length fixed above"),
                bias: Array1::from_vec(bias),
            });
        }
        Self::from_layers(layers)
    }
}

struct ForwardTrace {
    /// acts[0] is the input; acts[l+1] is layer l's post-activation output.
    acts: Vec<Array1<f64>>,
    /// pre[l] is layer l's affine output before activation.
    pre: Vec<Array1<f64>>,
}

/// Per-parameter gradients shaped like a network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &FeatureNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| {
                    (
                        Array2::zeros((l.out_dim(), l.in_dim())),
                        Array1::zeros(l.out_dim()),
                    )
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.layers {
            w.mapv_inplace(|v| v * factor);
            b.mapv_inplace(|v| v * factor);
        }
    }
}

/// Gradient of the pairwise loss with respect to the relaxed code a:
/// sum over anchors of 2 w (a'b - target*s) b. Anchor codes are the rows
/// of `codes`; `sims` and `weights` run parallel to them.
pub fn loss_gradient_a(
    a: ArrayView1<'_, f64>,
    codes: &Array2<f64>,
    sims: ArrayView1<'_, f64>,
    weights: ArrayView1<'_, f64>,
    target: f64,
) -> Result<Array1<f64>, FeatnetError> {
    let na = codes.nrows();
    if na == 0 {
        return Err(FeatnetError::EmptyAnchors);
    }
    if codes.ncols() != a.len() || sims.len() != na || weights.len() != na {
        return Err(FeatnetError::DimensionMismatch(format!(
            "anchors {}x{}, a {}, sims {}, weights {}",
            na,
            codes.ncols(),
            a.len(),
            sims.len(),
            weights.len()
        )));
    }
    let mut coeff = codes.dot(&a);
    for (i, v) in coeff.iter_mut().enumerate() {
        *v = 2.0 * weights[i] * (*v - target * sims[i]);
    }
    Ok(codes.t().dot(&coeff))
}

/// Pairwise loss value matching loss_gradient_a.
pub fn pairwise_loss(
    a: ArrayView1<'_, f64>,
    codes: &Array2<f64>,
    sims: ArrayView1<'_, f64>,
    weights: ArrayView1<'_, f64>,
    target: f64,
) -> f64 {
    let dots = codes.dot(&a);
    dots.iter()
        .zip(sims.iter().zip(weights.iter()))
        .map(|(&d, (&s, &w))| {
            let e = d - target * s;
            w * e * e
        })
        .sum()
}

/// Back-propagate an upstream gradient on a = tanh(z): the tanh factor
/// (1 - a^2) converts it to dL/dz, then the chain rule walks the layers.
pub fn backward(
    net: &FeatureNet,
    x: ArrayView1<'_, f64>,
    upstream_a: ArrayView1<'_, f64>,
) -> Result<Gradients, FeatnetError> {
    if upstream_a.len() != net.output_dim() {
        return Err(FeatnetError::DimensionMismatch(format!(
            "upstream length {} != network output {}",
            upstream_a.len(),
            net.output_dim()
        )));
    }
    let trace = net.trace(x)?;
    let mut grads = Gradients::zeros_like(net);
    accumulate_backward(&mut grads, net, &trace, upstream_a);
    Ok(grads)
}

fn accumulate_backward(
    grads: &mut Gradients,
    net: &FeatureNet,
    trace: &ForwardTrace,
    upstream_a: ArrayView1<'_, f64>,
) {
    let last = net.layers.len() - 1;
    let z = &trace.pre[last];
    let mut delta = Array1::from_shape_fn(z.len(), |i| {
        let a = z[i].tanh();
        upstream_a[i] * (1.0 - a * a)
    });
    for l in (0..net.layers.len()).rev() {
        let input = &trace.acts[l];
        let (gw, gb) = &mut grads.layers[l];
        for (r, &d) in delta.iter().enumerate() {
            gw.row_mut(r).scaled_add(d, input);
        }
        *gb += &delta;
        if l > 0 {
            let mut back = net.layers[l].weights.t().dot(&delta);
            for (i, v) in back.iter_mut().enumerate() {
                if trace.pre[l - 1][i] <= 0.0 {
                    *v = 0.0;
                }
            }
            delta = back;
        }
    }
}

/// How minibatch gradients are reduced before the parameter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradReduction {
    #[default]
    Mean,
    Sum,
}

/// Plain SGD settings.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub grad_reduction: GradReduction,
}

impl OptimizerState {
    pub fn validate(&self) -> Result<(), FeatnetError> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(FeatnetError::BadConfig(
                "learning rate must be finite and non-negative".into(),
            ));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(FeatnetError::BadConfig(
                "weight decay must be finite and non-negative".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(FeatnetError::BadConfig("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// In-place SGD update with decoupled-from-bias weight decay:
/// w <- w - lr * (grad + decay * w), b <- b - lr * grad. Layers below
/// `frozen_layers` are left untouched.
pub fn sgd_step(
    net: &mut FeatureNet,
    grads: &Gradients,
    opt: &OptimizerState,
    frozen_layers: usize,
) -> Result<(), FeatnetError> {
    if grads.layers.len() != net.layers.len() {
        return Err(FeatnetError::DimensionMismatch(
            "gradient layer count mismatch".into(),
        ));
    }
    let lr = opt.learning_rate;
    let decay = opt.weight_decay;
    for (l, layer) in net.layers.iter_mut().enumerate().skip(frozen_layers) {
        let (gw, gb) = &grads.layers[l];
        ndarray::Zip::from(&mut layer.weights)
            .and(gw)
            .for_each(|w, &g| *w -= lr * (g + decay * *w));
        ndarray::Zip::from(&mut layer.bias)
            .and(gb)
            .for_each(|b, &g| *b -= lr * g);
        let finite = layer.weights.iter().all(|v| v.is_finite())
            && layer.bias.iter().all(|v| v.is_finite());
        if !finite {
            return Err(FeatnetError::Divergence { layer: l });
        }
    }
    Ok(())
}

/// One pass over the complement set: the indices are shuffled, consumed
/// in minibatches, and each batch does forward, pairwise gradient against
/// all sampled anchors, reduction, SGD step, then refreshes the batch's
/// code rows to sign(F(x)) under the updated parameters. Returns the
/// summed relaxed loss over all processed points (measured pre-step).
#[allow(clippy::too_many_arguments)]
pub fn train_epoch(
    net: &mut FeatureNet,
    codes: &mut CodeMatrix,
    split: &SampleSplit,
    features: &FeatureMatrix,
    sim: &SimilarityOracle,
    opt: &OptimizerState,
    target: f64,
    frozen_layers: usize,
    rng: &mut ChaCha20Rng,
) -> Result<f64, FeatnetError> {
    opt.validate()?;
    let n = split.n();
    if features.n() != n || codes.n() != n || sim.n() != n {
        return Err(FeatnetError::DimensionMismatch(format!(
            "features n={}, codes n={}, similarity n={}, split n={n}",
            features.n(),
            codes.n(),
            sim.n()
        )));
    }
    if features.d() != net.input_dim() || codes.c() != net.output_dim() {
        return Err(FeatnetError::DimensionMismatch(format!(
            "features d={} vs net input {}; codes c={} vs net output {}",
            features.d(),
            net.input_dim(),
            codes.c(),
            net.output_dim()
        )));
    }

    let omega = split.omega();
    let m = omega.len();
    let c = codes.c();
    let anchor_codes = Array2::from_shape_fn((m, c), |(a, k)| codes.get(omega[a], k) as f64);

    let mut order = split.gamma().to_vec();
    order.shuffle(rng);

    let mut epoch_loss = 0.0;
    for batch in order.chunks(opt.batch_size) {
        let mut grads = Gradients::zeros_like(net);
        for &j in batch {
            let x = features.row_f64(j);
            let trace = net.trace(x.view())?;
            let z = trace.acts.last().unwrap();
            if z.iter().any(|v| !v.is_finite()) {
                return Err(FeatnetError::NonFiniteOutput);
            }
            let a = z.mapv(f64::tanh);
            let mut sims = Array1::zeros(m);
            let mut weights = Array1::zeros(m);
            for (idx, &i) in omega.iter().enumerate() {
                let (s, w) = sim.pair(i, j);
                sims[idx] = s;
                weights[idx] = w;
            }
            epoch_loss += pairwise_loss(
                a.view(),
                &anchor_codes,
                sims.view(),
                weights.view(),
                target,
            );
            let g_a = loss_gradient_a(
                a.view(),
                &anchor_codes,
                sims.view(),
                weights.view(),
                target,
            )?;
            accumulate_backward(&mut grads, net, &trace, g_a.view());
        }
        if let GradReduction::Mean = opt.grad_reduction {
            // Mean over the pair gradients the batch contributed: each
            // point sums |omega| anchor terms, so the batch holds
            // batch_len * m of them. Dividing by both keeps the step size
            // independent of batch size and sampled-set size alike.
            grads.scale(1.0 / (batch.len() * m) as f64);
        }
        sgd_step(net, &grads, opt, frozen_layers)?;
        for &j in batch {
            let row = net.encode(features.row_f64(j).view())?;
            codes.set_row(j, &row);
        }
    }
    if !epoch_loss.is_finite() {
        return Err(FeatnetError::NonFiniteOutput);
    }
    Ok(epoch_loss)
}

/// Encode every row of the feature matrix.
pub fn encode_all(net: &FeatureNet, features: &FeatureMatrix) -> Result<CodeMatrix, FeatnetError> {
    let n = features.n();
    let c = net.output_dim();
    let mut entries = Array2::<i8>::ones((n, c));
    for i in 0..n {
        let row = net.encode(features.row_f64(i).view())?;
        for (k, &v) in row.iter().enumerate() {
            entries[[i, k]] = v;
        }
    }
    Ok(CodeMatrix::new(entries).expect("encode emits only +/-1"))
}

/// Distribution of |tanh(F(x))| entries over uniform bins on [0, 1].
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TanhHistogram {
    pub counts: Vec<u64>,
    pub total: u64,
    /// Share of entries with |a| > 0.8.
    pub saturation_fraction: f64,
}

pub fn tanh_saturation_histogram(
    net: &FeatureNet,
    features: &FeatureMatrix,
    bins: usize,
) -> Result<TanhHistogram, FeatnetError> {
    if bins == 0 {
        return Err(FeatnetError::BadConfig("need at least one bin".into()));
    }
    let mut counts = vec![0u64; bins];
    let mut saturated = 0u64;
    let mut total = 0u64;
    for i in 0..features.n() {
        let (_, a) = net.forward(features.row_f64(i).view())?;
        for &v in a.iter() {
            let mag = v.abs();
            let bin = ((mag * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
            if mag > 0.8 {
                saturated += 1;
            }
            total += 1;
        }
    }
    Ok(TanhHistogram {
        counts,
        total,
        saturation_fraction: saturated as f64 / total as f64,
    })
}
