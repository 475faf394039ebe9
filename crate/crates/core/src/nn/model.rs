use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    bce_loss, bce_sigmoid_grad, conv1d_backward, conv1d_forward, dense_sigmoid_forward,
    embedding_backward, embedding_forward, maxpool1d, maxpool1d_backward,
};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

pub const CONV1_KERNEL: usize = 3;
pub const CONV2_KERNEL: usize = 3;
pub const CONV3_KERNEL: usize = 5;

/// Layer widths of the embedding -> conv3 -> conv3 -> pool -> conv5 -> pool
/// -> dense network. Kernel sizes are fixed by the architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub pool1_window: usize,
    pub conv3_filters: usize,
    pub pool2_window: usize,
    pub input_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 23,
            embed_dim: 32,
            conv1_filters: 32,
            conv2_filters: 32,
            pool1_window: 5,
            conv3_filters: 32,
            pool2_window: 5,
            input_len: 1500,
        }
    }
}

/// Sequence length after each layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerLengths {
    pub input: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub pool1: usize,
    pub conv3: usize,
    pub pool2: usize,
}

impl ModelConfig {
    /// Lengths through the stack, or `None` if some layer would be empty.
    pub fn try_layer_lengths(&self) -> Option<LayerLengths> {
        let conv = |t: usize, k: usize| (t >= k).then(|| t - k + 1);
        let pool = |t: usize, w: usize| (w >= 1 && t >= w).then(|| t / w);
        let conv1 = conv(self.input_len, CONV1_KERNEL)?;
        let conv2 = conv(conv1, CONV2_KERNEL)?;
        let pool1 = pool(conv2, self.pool1_window)?;
        let conv3 = conv(pool1, CONV3_KERNEL)?;
        let pool2 = pool(conv3, self.pool2_window)?;
        Some(LayerLengths {
            input: self.input_len,
            conv1,
            conv2,
            pool1,
            conv3,
            pool2,
        })
    }

    pub fn layer_lengths(&self) -> LayerLengths {
        self.try_layer_lengths()
            .expect("config validated: every layer has output")
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.vocab_size,
            self.embed_dim,
            self.conv1_filters,
            self.conv2_filters,
            self.pool1_window,
            self.conv3_filters,
            self.pool2_window,
            self.input_len,
        ];
        if sizes.contains(&0) {
            return Err(Error::InvalidConfig("all model sizes must be at least 1".into()));
        }
        if self.try_layer_lengths().is_none() {
            return Err(Error::InvalidConfig(format!(
                "input length {} is too short for the layer stack",
                self.input_len
            )));
        }
        Ok(())
    }

    pub fn flatten_dim(&self) -> usize {
        self.layer_lengths().pool2 * self.conv3_filters
    }

    /// Shapes of all trainable tensors in declaration order.
    pub fn param_shapes(&self) -> [Vec<usize>; 9] {
        let (d, f1, f2, f3) = (
            self.embed_dim,
            self.conv1_filters,
            self.conv2_filters,
            self.conv3_filters,
        );
        [
            vec![self.vocab_size + 1, d],
            vec![CONV1_KERNEL, d, f1],
            vec![f1],
            vec![CONV2_KERNEL, f1, f2],
            vec![f2],
            vec![CONV3_KERNEL, f2, f3],
            vec![f3],
            vec![self.flatten_dim(), 1],
            vec![1],
        ]
    }
}

/// Closed-form trainable parameter count.
pub fn count_parameters(cfg: &ModelConfig) -> usize {
    let (v, d, f1, f2, f3) = (
        cfg.vocab_size,
        cfg.embed_dim,
        cfg.conv1_filters,
        cfg.conv2_filters,
        cfg.conv3_filters,
    );
    (v + 1) * d
        + f1 * (CONV1_KERNEL * d + 1)
        + f2 * (CONV2_KERNEL * f1 + 1)
        + f3 * (CONV3_KERNEL * f2 + 1)
        + (cfg.flatten_dim() + 1)
}

pub const PARAM_NAMES: [&str; 9] = [
    "embedding",
    "conv1_w",
    "conv1_b",
    "conv2_w",
    "conv2_b",
    "conv3_w",
    "conv3_b",
    "dense_w",
    "dense_b",
];

/// All trainable tensors. Also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub embedding: Tensor,
    pub conv1_w: Tensor,
    pub conv1_b: Tensor,
    pub conv2_w: Tensor,
    pub conv2_b: Tensor,
    pub conv3_w: Tensor,
    pub conv3_b: Tensor,
    pub dense_w: Tensor,
    pub dense_b: Tensor,
}

impl Parameters {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self::from_tensors(cfg.param_shapes().map(|s| Tensor::zeros(&s)))
    }

    /// Glorot-uniform kernels, zero biases, embedding uniform in ±0.05.
    pub fn init<R: Rng + ?Sized>(cfg: &ModelConfig, rng: &mut R) -> Self {
        let shapes = cfg.param_shapes();
        let mut glorot = |shape: &[usize], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Tensor::from_fn(shape, || rng.gen_range(-limit..=limit) as Real)
        };
        let conv_fans = |s: &[usize]| (s[0] * s[1], s[0] * s[2]);
        let (i1, o1) = conv_fans(&shapes[1]);
        let (i2, o2) = conv_fans(&shapes[3]);
        let (i3, o3) = conv_fans(&shapes[5]);
        let conv1_w = glorot(&shapes[1], i1, o1);
        let conv2_w = glorot(&shapes[3], i2, o2);
        let conv3_w = glorot(&shapes[5], i3, o3);
        let dense_w = glorot(&shapes[7], shapes[7][0], 1);
        let embedding = Tensor::from_fn(&shapes[0], || rng.gen_range(-0.05..=0.05) as Real);
        Self {
            embedding,
            conv1_w,
            conv1_b: Tensor::zeros(&shapes[2]),
            conv2_w,
            conv2_b: Tensor::zeros(&shapes[4]),
            conv3_w,
            conv3_b: Tensor::zeros(&shapes[6]),
            dense_w,
            dense_b: Tensor::zeros(&shapes[8]),
        }
    }

    pub fn from_tensors(t: [Tensor; 9]) -> Self {
        let [embedding, conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b, dense_w, dense_b] = t;
        Self {
            embedding,
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            conv3_w,
            conv3_b,
            dense_w,
            dense_b,
        }
    }

    pub fn tensors(&self) -> [&Tensor; 9] {
        [
            &self.embedding,
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.conv3_w,
            &self.conv3_b,
            &self.dense_w,
            &self.dense_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor; 9] {
        [
            &mut self.embedding,
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.conv3_w,
            &mut self.conv3_b,
            &mut self.dense_w,
            &mut self.dense_b,
        ]
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn add_assign(&mut self, other: &Parameters) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, factor: Real) {
        for t in self.tensors_mut() {
            t.scale(factor);
        }
    }

    pub fn matches(&self, cfg: &ModelConfig) -> bool {
        self.tensors()
            .iter()
            .zip(cfg.param_shapes())
            .all(|(t, s)| t.shape() == s.as_slice())
    }
}

/// Activations retained by [`Model::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub indices: Vec<u32>,
    pub embedded: Tensor,
    pub conv1: Tensor,
    pub conv2: Tensor,
    pub pool1: Tensor,
    pub pool1_argmax: Vec<usize>,
    pub conv3: Tensor,
    pub pool2: Tensor,
    pub pool2_argmax: Vec<usize>,
    pub logit: Real,
    pub prob: Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Parameters,
}

impl Model {
    pub fn new(config: ModelConfig, params: Parameters) -> Result<Self> {
        config.validate()?;
        if !params.matches(&config) {
            return Err(Error::InvalidConfig(
                "parameter shapes do not match the model config".into(),
            ));
        }
        Ok(Self { config, params })
    }

    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let params = Parameters::init(&config, rng);
        Ok(Self { config, params })
    }

    pub fn forward(&self, indices: &[u32]) -> Result<(Real, ForwardCache)> {
        if indices.len() != self.config.input_len {
            return Err(Error::ShapeMismatch {
                expected: vec![self.config.input_len],
                got: vec![indices.len()],
            });
        }
        let p = &self.params;
        let embedded = embedding_forward(indices, &p.embedding)?;
        let conv1 = conv1d_forward(&embedded, &p.conv1_w, &p.conv1_b)?;
        let conv2 = conv1d_forward(&conv1, &p.conv2_w, &p.conv2_b)?;
        let (pool1, pool1_argmax) = maxpool1d(&conv2, self.config.pool1_window)?;
        let conv3 = conv1d_forward(&pool1, &p.conv3_w, &p.conv3_b)?;
        let (pool2, pool2_argmax) = maxpool1d(&conv3, self.config.pool2_window)?;
        let (prob, logit) = dense_sigmoid_forward(pool2.data(), &p.dense_w, &p.dense_b)?;
        let cache = ForwardCache {
            indices: indices.to_vec(),
            embedded,
            conv1,
            conv2,
            pool1,
            pool1_argmax,
            conv3,
            pool2,
            pool2_argmax,
            logit,
            prob,
        };
        Ok((prob, cache))
    }

    pub fn predict_proba(&self, indices: &[u32]) -> Result<Real> {
        self.forward(indices).map(|(p, _)| p)
    }

    /// Loss and probability for one sample without keeping the cache.
    pub fn loss(&self, indices: &[u32], label: Real) -> Result<(Real, Real)> {
        let p = self.predict_proba(indices)?;
        Ok((bce_loss(p, label), p))
    }

    /// Gradients of the BCE loss at `label` for the sample behind `cache`.
    pub fn backward(&self, cache: &ForwardCache, label: Real) -> Result<Parameters> {
        let lens = self.config.layer_lengths();
        let expect = |t: &Tensor, rows: usize, what: &str| {
            if t.shape()[0] != rows {
                Err(Error::StaleCache(format!(
                    "{what} has {} rows, model expects {rows}",
                    t.shape()[0]
                )))
            } else {
                Ok(())
            }
        };
        expect(&cache.embedded, lens.input, "embedding output")?;
        expect(&cache.conv1, lens.conv1, "conv1 output")?;
        expect(&cache.conv2, lens.conv2, "conv2 output")?;
        expect(&cache.pool1, lens.pool1, "pool1 output")?;
        expect(&cache.conv3, lens.conv3, "conv3 output")?;
        expect(&cache.pool2, lens.pool2, "pool2 output")?;
        if cache.pool2.len() != self.config.flatten_dim()
            || cache.embedded.shape()[1] != self.config.embed_dim
        {
            return Err(Error::StaleCache("layer widths differ from the model".into()));
        }

        let p = &self.params;
        let mut g = Parameters::zeros(&self.config);
        let dz = bce_sigmoid_grad(cache.prob, label);

        g.dense_b.data_mut()[0] = dz;
        for (gw, x) in g.dense_w.data_mut().iter_mut().zip(cache.pool2.data()) {
            *gw = dz * x;
        }
        let dflat: Vec<Real> = p.dense_w.data().iter().map(|w| dz * w).collect();
        let dpool2 = Tensor::new(cache.pool2.shape().to_vec(), dflat)?;

        let dconv3 = maxpool1d_backward(&cache.pool2_argmax, &dpool2, cache.conv3.shape())?;
        let dpool1 = conv1d_backward(
            &cache.pool1,
            &p.conv3_w,
            &cache.conv3,
            &dconv3,
            &mut g.conv3_w,
            &mut g.conv3_b,
            true,
        )?
        .expect("dx requested");
        let dconv2 = maxpool1d_backward(&cache.pool1_argmax, &dpool1, cache.conv2.shape())?;
        let dconv1 = conv1d_backward(
            &cache.conv1,
            &p.conv2_w,
            &cache.conv2,
            &dconv2,
            &mut g.conv2_w,
            &mut g.conv2_b,
            true,
        )?
        .expect("dx requested");
        let dembedded = conv1d_backward(
            &cache.embedded,
            &p.conv1_w,
            &cache.conv1,
            &dconv1,
            &mut g.conv1_w,
            &mut g.conv1_b,
            true,
        )?
        .expect("dx requested");
        embedding_backward(&cache.indices, &dembedded, &mut g.embedding);
        Ok(g)
    }
}
