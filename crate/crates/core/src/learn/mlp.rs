//! Fully connected network with ReLU hidden layers.
//!
//! Weights are stored flat, layer after layer; each layer is a row-major
//! `out x (in + 1)` matrix whose last column is the bias.
//!
//! On disk:
//!
//! ```text
//! magic    b"TLMP"
//! version  u16 LE (= 1)
//! tag      u8   (0 untagged, 1 online, 2 offline)
//! hidden   u8   (0 relu)
//! output   u8   (0 linear, 1 sigmoid)
//! n_dims   u16 LE
//! dims     n_dims x u32 LE
//! weights  f32 LE, in the flat order above
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"TLMP";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputKind {
    Linear,
    Sigmoid,
}

/// Which reinstatement variant a model was trained for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ModelTag {
    #[default]
    Untagged,
    Online,
    Offline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T = f32> {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<T>,
    pub activation: Activation,
    pub output: OutputKind,
    pub tag: ModelTag,
}

/// Activations kept by [`MlpModel::forward_cached`] for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// `layers[0]` is the input, `layers[l + 1]` the post-activation output of layer `l`.
    pub layers: Vec<Vec<T>>,
}

impl<T> ForwardCache<T> {
    pub fn output(&self) -> &[T] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

// Eight partial sums so the compiler can vectorise the reduction.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail = tail + *x * *y;
    }
    acc.iter().fold(tail, |s, v| s + *v)
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> MlpModel<T> {
    pub fn weight_count(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    pub fn zeros(dims: &[usize], output: OutputKind) -> Self {
        assert!(dims.len() >= 2, "a network needs at least an input and an output layer");
        Self {
            layer_dims: dims.to_vec(),
            weights: vec![T::zero(); Self::weight_count(dims)],
            activation: Activation::Relu,
            output,
            tag: ModelTag::Untagged,
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], output: OutputKind, rng: &mut R) -> Self {
        let mut m = Self::zeros(dims, output);
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for o in 0..fan_out {
                for i in 0..fan_in {
                    m.weights[offset + o * (fan_in + 1) + i] = T::lit(rng.random_range(-limit..limit));
                }
            }
            offset += (fan_in + 1) * fan_out;
        }
        m
    }

    pub fn with_tag(mut self, tag: ModelTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_cached(input)?.layers.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, input: &[T]) -> Result<ForwardCache<T>> {
        self.check_input(input)?;
        let n_layers = self.layer_dims.len() - 1;
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(input.to_vec());
        let mut offset = 0;
        for l in 0..n_layers {
            let (din, dout) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let x = &layers[l];
            let mut y = Vec::with_capacity(dout);
            for o in 0..dout {
                let row = &self.weights[offset + o * (din + 1)..offset + (o + 1) * (din + 1)];
                y.push(row[din] + dot(&row[..din], x));
            }
            let last = l + 1 == n_layers;
            for v in y.iter_mut() {
                *v = match (last, self.output) {
                    (false, _) => v.max(T::zero()),
                    (true, OutputKind::Linear) => *v,
                    (true, OutputKind::Sigmoid) => sigmoid(*v),
                };
            }
            layers.push(y);
            offset += (din + 1) * dout;
        }
        Ok(ForwardCache { layers })
    }

    /// Gradients of a scalar loss with respect to the weights and the input,
    /// given `grad_output` = d loss / d (network output).
    pub fn backward(&self, cache: &ForwardCache<T>, grad_output: &[T]) -> (Vec<T>, Vec<T>) {
        let mut grad_w = vec![T::zero(); self.weights.len()];
        let grad_x = self.backward_into(cache, grad_output, &mut grad_w);
        (grad_w, grad_x)
    }

    /// Like [`MlpModel::backward`] but adds the weight gradient into `grad_w`.
    pub fn backward_into(&self, cache: &ForwardCache<T>, grad_output: &[T], grad_w: &mut [T]) -> Vec<T> {
        let n_layers = self.layer_dims.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            offsets.push(offset);
            offset += (self.layer_dims[l] + 1) * self.layer_dims[l + 1];
        }
        // gradient with respect to the pre-activation of the current layer
        let out = cache.output();
        let mut delta: Vec<T> = match self.output {
            OutputKind::Linear => grad_output.to_vec(),
            OutputKind::Sigmoid => grad_output
                .iter()
                .zip(out)
                .map(|(g, y)| *g * *y * (T::one() - *y))
                .collect(),
        };
        for l in (0..n_layers).rev() {
            let (din, dout) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let x = &cache.layers[l];
            let off = offsets[l];
            let mut grad_x = vec![T::zero(); din];
            for o in 0..dout {
                let d = delta[o];
                if d == T::zero() {
                    continue;
                }
                let base = off + o * (din + 1);
                for (g, xi) in grad_w[base..base + din].iter_mut().zip(x) {
                    *g = *g + d * *xi;
                }
                for (g, w) in grad_x.iter_mut().zip(&self.weights[base..base + din]) {
                    *g = *g + d * *w;
                }
                grad_w[base + din] = grad_w[base + din] + d;
            }
            if l > 0 {
                // ReLU: pass gradient only where the activation was positive
                for (g, a) in grad_x.iter_mut().zip(x) {
                    if *a <= T::zero() {
                        *g = T::zero();
                    }
                }
            }
            delta = grad_x;
        }
        delta
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> MlpModel<U> {
        MlpModel {
            layer_dims: self.layer_dims.clone(),
            weights: self.weights.iter().map(|w| U::lit(w.to_f64_lossy())).collect(),
            activation: self.activation,
            output: self.output,
            tag: self.tag,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.layer_dims.len() + 4 * self.weights.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(match self.tag {
            ModelTag::Untagged => 0,
            ModelTag::Online => 1,
            ModelTag::Offline => 2,
        });
        out.push(match self.activation {
            Activation::Relu => 0,
        });
        out.push(match self.output {
            OutputKind::Linear => 0,
            OutputKind::Sigmoid => 1,
        });
        out.extend_from_slice(&(self.layer_dims.len() as u16).to_le_bytes());
        for d in &self.layer_dims {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for w in &self.weights {
            out.extend_from_slice(&(w.to_f64_lossy() as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::ModelFormat(m.to_string());
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(bad("truncated"));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        if take(4)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let tag = match take(1)?[0] {
            0 => ModelTag::Untagged,
            1 => ModelTag::Online,
            2 => ModelTag::Offline,
            t => return Err(Error::ModelFormat(format!("unknown tag {t}"))),
        };
        let activation = match take(1)?[0] {
            0 => Activation::Relu,
            a => return Err(Error::ModelFormat(format!("unknown activation {a}"))),
        };
        let output = match take(1)?[0] {
            0 => OutputKind::Linear,
            1 => OutputKind::Sigmoid,
            o => return Err(Error::ModelFormat(format!("unknown output kind {o}"))),
        };
        let n_dims = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        if n_dims < 2 {
            return Err(bad("need at least two layer sizes"));
        }
        let mut dims = Vec::with_capacity(n_dims);
        for _ in 0..n_dims {
            dims.push(u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize);
        }
        if dims.contains(&0) {
            return Err(bad("zero-width layer"));
        }
        let count = Self::weight_count(&dims);
        let raw = take(4 * count)?;
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let weights: Vec<T> = raw
            .chunks_exact(4)
            .map(|c| T::lit(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect();
        let model = Self {
            layer_dims: dims,
            weights,
            activation,
            output,
            tag,
        };
        if !model.is_finite() {
            return Err(bad("non-finite weights"));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
