//! Lateness regressor: a learned time-of-day embedding concatenated with the
//! normalized segment attributes, an encoder, and a regression head.
//!
//! Everything is generic over the floating-point scalar; the pipeline uses
//! `f64` (see the aliases at the crate root).

mod gradcheck;
mod layers;
mod pca;
mod train;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{Dataset, DatasetRow, Normalizer};
use crate::network::{SegmentAttributes, TimePeriod};
use crate::scalar::Real;

pub use gradcheck::{gradient_check, GradCheck, GRADCHECK_FLOOR, GRADCHECK_STEP};
pub use layers::{Activation, Dense, Stack, StackGrads};
pub use pca::{embedding_coords, pca_2d, EmbeddingPoint};
pub use train::{
    compare_pretraining, pretrain_autoencoder, train_regressor, Adam, AeReport, Pretrained, RunCurve, TrainReport,
};

pub const N_NUMERIC: usize = SegmentAttributes::COUNT;
pub const N_PERIODS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_emb: usize,
    pub encoder_widths: Vec<usize>,
    pub head_widths: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub ae_epochs: usize,
    pub eps_w: f64,
    /// Initialize the encoder from an autoencoder before supervised training.
    pub pretrain: bool,
    /// Also train from scratch and record both curves.
    pub compare: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_emb: 4,
            encoder_widths: vec![32, 16],
            head_widths: vec![16],
            activation: Activation::Tanh,
            learning_rate: 1e-3,
            batch_size: 256,
            patience: 10,
            max_epochs: 200,
            ae_epochs: 50,
            eps_w: 0.1,
            pretrain: true,
            compare: true,
        }
    }
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        N_NUMERIC + self.d_emb
    }

    pub fn code_dim(&self) -> usize {
        *self.encoder_widths.last().unwrap_or(&self.input_dim())
    }

    fn encoder_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.encoder_widths.iter().copied())
            .collect()
    }

    fn head_dims(&self) -> Vec<usize> {
        std::iter::once(self.code_dim())
            .chain(self.head_widths.iter().copied())
            .chain(std::iter::once(1))
            .collect()
    }

    /// Same shape as the head, but reconstructing the full input.
    fn decoder_dims(&self) -> Vec<usize> {
        std::iter::once(self.code_dim())
            .chain(self.head_widths.iter().copied())
            .chain(std::iter::once(self.input_dim()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_emb == 0 || self.encoder_widths.is_empty() || self.batch_size == 0 {
            return Err(Error::Invalid(
                "model config needs d_emb > 0, an encoder and batch_size > 0".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.eps_w >= 0.0) {
            return Err(Error::Invalid(
                "learning_rate must be positive and eps_w non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One normalized training example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example<F> {
    pub features: [F; N_NUMERIC],
    pub period: TimePeriod,
    pub target: F,
}

/// Parametric function with a scalar loss over a batch.
pub trait Differentiable<F: Real> {
    fn params(&self) -> Vec<F>;
    fn set_params(&mut self, p: &[F]);
    /// Loss over `batch` and its gradient, flattened in [`Differentiable::params`] order.
    fn loss_and_grad(&self, batch: &[Example<F>]) -> (F, Vec<F>);
    fn loss(&self, batch: &[Example<F>]) -> F {
        self.loss_and_grad(batch).0
    }
}

/// `5 x d_emb` row-major lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<F> {
    pub dim: usize,
    pub table: Vec<F>,
}

impl<F: Real> Embedding<F> {
    fn init(dim: usize, rng: &mut impl rand::Rng) -> Self {
        let table = (0..N_PERIODS * dim)
            .map(|_| F::of(rng.gen_range(-0.05..0.05)))
            .collect();
        Self { dim, table }
    }

    pub fn row(&self, p: TimePeriod) -> &[F] {
        &self.table[p.index() * self.dim..(p.index() + 1) * self.dim]
    }

    fn input(&self, ex: &Example<F>) -> Vec<F> {
        let mut x = Vec::with_capacity(N_NUMERIC + self.dim);
        x.extend_from_slice(&ex.features);
        x.extend_from_slice(self.row(ex.period));
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatenessModel<F> {
    pub config: ModelConfig,
    pub embedding: Embedding<F>,
    pub encoder: Stack<F>,
    pub head: Stack<F>,
    pub normalizer: Normalizer,
    pub target_mean: f64,
    pub target_std: f64,
    pub seed: u64,
}

/// Embedding and encoder drawn first, then the head, so a pretraining run
/// seeded the same way starts from the identical encoder.
fn init_trunk<F: Real>(config: &ModelConfig, rng: &mut ChaCha8Rng) -> (Embedding<F>, Stack<F>) {
    let emb = Embedding::init(config.d_emb, rng);
    let enc = Stack::init(&config.encoder_dims(), config.activation, config.activation, rng);
    (emb, enc)
}

impl<F: Real> LatenessModel<F> {
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (embedding, encoder) = init_trunk(config, &mut rng);
        let head = Stack::init(&config.head_dims(), config.activation, Activation::Identity, &mut rng);
        Self {
            config: config.clone(),
            embedding,
            encoder,
            head,
            normalizer: Normalizer::default(),
            target_mean: 0.0,
            target_std: 1.0,
            seed,
        }
    }

    pub fn param_count(&self) -> usize {
        self.embedding.table.len() + self.encoder.param_count() + self.head.param_count()
    }

    /// Raw network output in normalized target units.
    pub fn forward(&self, ex: &Example<F>) -> F {
        let enc = self.encoder.forward(&self.embedding.input(ex));
        let head = self.head.forward(enc.last().expect("encoder output"));
        head.last().expect("head output")[0]
    }

    pub fn example(&self, features: &[f64; N_NUMERIC], period: TimePeriod, target_s: f64) -> Example<F> {
        let z = self.normalizer.apply(features);
        Example {
            features: z.map(F::of),
            period,
            target: F::of((target_s - self.target_mean) / self.target_std),
        }
    }

    pub fn example_from_row(&self, row: &DatasetRow) -> Example<F> {
        self.example(&row.features, row.period, row.label_s)
    }

    /// Unclamped prediction in seconds.
    pub fn predict_raw(&self, attrs: &SegmentAttributes, period: TimePeriod) -> Result<F> {
        let features = attrs.to_array();
        if let Some(j) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(SegmentAttributes::NAMES[j]));
        }
        let out = self.forward(&self.example(&features, period, self.target_mean));
        Ok(out * F::of(self.target_std) + F::of(self.target_mean))
    }

    /// Predicted lateness in seconds, floored at `eps_w`.
    pub fn predict(&self, attrs: &SegmentAttributes, period: TimePeriod) -> Result<F> {
        let raw = self.predict_raw(attrs, period)?;
        let eps = F::of(self.config.eps_w);
        // NaN maps to the floor as well
        Ok(if raw > eps { raw } else { eps })
    }

    /// RMSE in seconds over dataset rows.
    pub fn rmse_s<'a>(&self, rows: impl IntoIterator<Item = &'a DatasetRow>) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for r in rows {
            let ex = self.example_from_row(r);
            let d = (self.forward(&ex) - ex.target).as_f64();
            sum += d * d;
            n += 1;
        }
        if n == 0 {
            return f64::NAN;
        }
        (sum / n as f64).sqrt() * self.target_std
    }

    pub fn embedding_table(&self) -> Vec<Vec<f64>> {
        TimePeriod::ALL
            .iter()
            .map(|p| self.embedding.row(*p).iter().map(|v| v.as_f64()).collect())
            .collect()
    }

    /// Fit normalization statistics from a dataset's training split.
    pub fn attach_statistics(&mut self, ds: &Dataset) {
        self.normalizer = ds.normalizer;
        let train: Vec<f64> = ds.split(crate::labeling::Split::Train).map(|r| r.label_s).collect();
        let labels = if train.is_empty() {
            ds.rows.iter().map(|r| r.label_s).collect()
        } else {
            train
        };
        let n = labels.len().max(1) as f64;
        let mean = labels.iter().sum::<f64>() / n;
        let std = (labels.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        self.target_mean = mean;
        self.target_std = if std > 1e-12 { std } else { 1.0 };
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let layer = |l: &Dense<F>| LayerDoc {
            in_dim: l.in_dim,
            out_dim: l.out_dim,
            activation: l.activation,
            weights: l.weights.iter().map(|v| v.as_f64()).collect(),
            bias: l.bias.iter().map(|v| v.as_f64()).collect(),
        };
        Checkpoint {
            d_emb: self.config.d_emb,
            eps_w: self.config.eps_w,
            seed: self.seed,
            config: self.config.clone(),
            embedding: self.embedding.table.iter().map(|v| v.as_f64()).collect(),
            encoder: self.encoder.layers.iter().map(layer).collect(),
            head: self.head.layers.iter().map(layer).collect(),
            normalizer: self.normalizer,
            target_mean: self.target_mean,
            target_std: self.target_std,
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let stack = |docs: &[LayerDoc]| -> Result<Stack<F>> {
            let layers = docs
                .iter()
                .map(|d| {
                    if d.weights.len() != d.in_dim * d.out_dim || d.bias.len() != d.out_dim {
                        return Err(Error::Invalid("checkpoint layer shape mismatch".into()));
                    }
                    Ok(Dense {
                        in_dim: d.in_dim,
                        out_dim: d.out_dim,
                        activation: d.activation,
                        weights: d.weights.iter().map(|v| F::of(*v)).collect(),
                        bias: d.bias.iter().map(|v| F::of(*v)).collect(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if layers.is_empty() {
                return Err(Error::Invalid("checkpoint has an empty layer stack".into()));
            }
            Ok(Stack { layers })
        };
        if c.embedding.len() != N_PERIODS * c.d_emb {
            return Err(Error::Invalid("checkpoint embedding has the wrong size".into()));
        }
        let encoder = stack(&c.encoder)?;
        let head = stack(&c.head)?;
        if encoder.in_dim() != N_NUMERIC + c.d_emb || head.in_dim() != encoder.out_dim() || head.out_dim() != 1 {
            return Err(Error::Invalid("checkpoint layer dimensions do not chain".into()));
        }
        let mut config = c.config.clone();
        config.d_emb = c.d_emb;
        config.eps_w = c.eps_w;
        Ok(Self {
            config,
            embedding: Embedding {
                dim: c.d_emb,
                table: c.embedding.iter().map(|v| F::of(*v)).collect(),
            },
            encoder,
            head,
            normalizer: c.normalizer,
            target_mean: c.target_mean,
            target_std: c.target_std,
            seed: c.seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&serde_json::from_str(&text)?)
    }
}

impl<F: Real> Differentiable<F> for LatenessModel<F> {
    fn params(&self) -> Vec<F> {
        let mut p = self.embedding.table.clone();
        self.encoder.params_into(&mut p);
        self.head.params_into(&mut p);
        p
    }

    fn set_params(&mut self, p: &[F]) {
        let ne = self.embedding.table.len();
        self.embedding.table.copy_from_slice(&p[..ne]);
        let k = ne + self.encoder.set_params(&p[ne..]);
        self.head.set_params(&p[k..]);
    }

    /// Root-mean-square error over the batch.
    fn loss_and_grad(&self, batch: &[Example<F>]) -> (F, Vec<F>) {
        let n = F::of(batch.len() as f64);
        let passes: Vec<_> = batch
            .iter()
            .map(|ex| {
                let enc = self.encoder.forward(&self.embedding.input(ex));
                let head = self.head.forward(enc.last().expect("encoder output"));
                (enc, head)
            })
            .collect();
        let sq: F = batch
            .iter()
            .zip(&passes)
            .map(|(ex, (_, head))| {
                let d = head.last().expect("head output")[0] - ex.target;
                d * d
            })
            .sum();
        let loss = (sq / n).sqrt();

        let mut g_emb = vec![F::zero(); self.embedding.table.len()];
        let mut g_enc = self.encoder.zero_grads();
        let mut g_head = self.head.zero_grads();
        if loss > F::zero() {
            for (ex, (enc, head)) in batch.iter().zip(&passes) {
                let d_out = (head.last().expect("head output")[0] - ex.target) / (n * loss);
                let d_code = self.head.backward(head, &[d_out], &mut g_head);
                let d_in = self.encoder.backward(enc, &d_code, &mut g_enc);
                let off = ex.period.index() * self.embedding.dim;
                for (g, d) in g_emb[off..off + self.embedding.dim].iter_mut().zip(&d_in[N_NUMERIC..]) {
                    *g += *d;
                }
            }
        }
        let mut grad = g_emb;
        g_enc.flatten_into(&mut grad);
        g_head.flatten_into(&mut grad);
        (loss, grad)
    }
}

/// Encoder plus a decoder shaped like the regression head, reconstructing the
/// concatenated feature and embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder<F> {
    pub embedding: Embedding<F>,
    pub encoder: Stack<F>,
    pub decoder: Stack<F>,
}

impl<F: Real> Autoencoder<F> {
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (embedding, encoder) = init_trunk(config, &mut rng);
        let decoder = Stack::init(
            &config.decoder_dims(),
            config.activation,
            Activation::Identity,
            &mut rng,
        );
        Self {
            embedding,
            encoder,
            decoder,
        }
    }
}

impl<F: Real> Differentiable<F> for Autoencoder<F> {
    fn params(&self) -> Vec<F> {
        let mut p = self.embedding.table.clone();
        self.encoder.params_into(&mut p);
        self.decoder.params_into(&mut p);
        p
    }

    fn set_params(&mut self, p: &[F]) {
        let ne = self.embedding.table.len();
        self.embedding.table.copy_from_slice(&p[..ne]);
        let k = ne + self.encoder.set_params(&p[ne..]);
        self.decoder.set_params(&p[k..]);
    }

    /// Mean squared reconstruction error. The embedding appears on both the
    /// input and the target side and receives gradient through both.
    fn loss_and_grad(&self, batch: &[Example<F>]) -> (F, Vec<F>) {
        let dim = self.encoder.in_dim();
        let scale = F::of((batch.len() * dim) as f64);
        let two = F::of(2.0);
        let mut loss = F::zero();
        let mut g_emb = vec![F::zero(); self.embedding.table.len()];
        let mut g_enc = self.encoder.zero_grads();
        let mut g_dec = self.decoder.zero_grads();
        for ex in batch {
            let x = self.embedding.input(ex);
            let enc = self.encoder.forward(&x);
            let dec = self.decoder.forward(enc.last().expect("encoder output"));
            let recon = dec.last().expect("decoder output");
            let resid: Vec<F> = recon.iter().zip(&x).map(|(r, xi)| *r - *xi).collect();
            loss += resid.iter().map(|r| *r * *r).sum::<F>();
            let d_out: Vec<F> = resid.iter().map(|r| two * *r / scale).collect();
            let d_code = self.decoder.backward(&dec, &d_out, &mut g_dec);
            let d_in = self.encoder.backward(&enc, &d_code, &mut g_enc);
            let off = ex.period.index() * self.embedding.dim;
            for k in 0..self.embedding.dim {
                g_emb[off + k] += d_in[N_NUMERIC + k] - d_out[N_NUMERIC + k];
            }
        }
        let mut grad = g_emb;
        g_enc.flatten_into(&mut grad);
        g_dec.flatten_into(&mut grad);
        (loss / scale, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// JSON model checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub d_emb: usize,
    pub eps_w: f64,
    pub seed: u64,
    pub config: ModelConfig,
    /// Row-major `5 x d_emb`, rows in period order Morning..Night.
    pub embedding: Vec<f64>,
    pub encoder: Vec<LayerDoc>,
    pub head: Vec<LayerDoc>,
    pub normalizer: Normalizer,
    pub target_mean: f64,
    pub target_std: f64,
}
