//! Adam, autoencoder pretraining, supervised training with early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Autoencoder, Differentiable, Embedding, Example, LatenessModel, ModelConfig, Stack};
use crate::error::{Error, Result};
use crate::labeling::{Dataset, Split};
use crate::scalar::Real;

/// Adam with the usual defaults for the moment decay rates.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    pub lr: F,
    beta1: F,
    beta2: F,
    eps: F,
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
}

impl<F: Real> Adam<F> {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self {
            lr: F::of(lr),
            beta1: F::of(0.9),
            beta2: F::of(0.999),
            eps: F::of(1e-8),
            m: vec![F::zero(); n_params],
            v: vec![F::zero(); n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [F], grad: &[F]) {
        self.t += 1;
        let one = F::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Result of autoencoder pretraining: the trunk to transplant into the regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct Pretrained<F> {
    pub embedding: Embedding<F>,
    pub encoder: Stack<F>,
    pub report: AeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeReport {
    pub seed: u64,
    /// Mean squared reconstruction error after each epoch.
    pub loss: Vec<f64>,
}

/// Per-epoch curves of one supervised run, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCurve {
    pub pretrained: bool,
    pub seed: u64,
    pub train_rmse: Vec<f64>,
    pub val_rmse: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
    pub test_rmse: f64,
}

impl RunCurve {
    pub fn epochs(&self) -> usize {
        self.train_rmse.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub config: ModelConfig,
    pub autoencoder: Option<AeReport>,
    pub pretrained: Option<RunCurve>,
    pub scratch: Option<RunCurve>,
    /// `"pretrained"` or `"scratch"`: which run produced the returned model.
    pub selected: String,
    pub test_rmse: f64,
}

fn shuffled_batches(n: usize, batch: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch).map(<[usize]>::to_vec).collect()
}

fn gather<F: Copy>(all: &[Example<F>], idx: &[usize]) -> Vec<Example<F>> {
    idx.iter().map(|&i| all[i]).collect()
}

/// One pass of mini-batch Adam; errors if the loss stops being finite.
fn run_epoch<F: Real, M: Differentiable<F>>(
    model: &mut M,
    opt: &mut Adam<F>,
    examples: &[Example<F>],
    batch: usize,
    rng: &mut ChaCha8Rng,
    epoch: usize,
) -> Result<()> {
    let mut params = model.params();
    for b in shuffled_batches(examples.len(), batch, rng) {
        let (loss, grad) = model.loss_and_grad(&gather(examples, &b));
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        opt.step(&mut params, &grad);
        model.set_params(&params);
    }
    Ok(())
}

fn train_examples<F: Real>(probe: &LatenessModel<F>, ds: &Dataset, which: Split) -> Vec<Example<F>> {
    ds.split(which).map(|r| probe.example_from_row(r)).collect()
}

/// Train an autoencoder on the concatenated feature and embedding vector.
/// With `ae_epochs = 0` the returned trunk is the initialization.
pub fn pretrain_autoencoder<F: Real>(ds: &Dataset, config: &ModelConfig, seed: u64) -> Result<Pretrained<F>> {
    config.validate()?;
    if ds.is_empty() {
        return Err(Error::Invalid("cannot pretrain on an empty dataset".into()));
    }
    let mut probe = LatenessModel::<F>::init(config, seed);
    probe.attach_statistics(ds);
    let mut examples = train_examples(&probe, ds, Split::Train);
    if examples.is_empty() {
        examples = ds.rows.iter().map(|r| probe.example_from_row(r)).collect();
    }
    let mut ae = Autoencoder::<F>::init(config, seed);
    let mut opt = Adam::new(config.learning_rate, ae.params().len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xae);
    let mut loss = Vec::with_capacity(config.ae_epochs);
    for epoch in 0..config.ae_epochs {
        run_epoch(&mut ae, &mut opt, &examples, config.batch_size, &mut rng, epoch)?;
        let l = ae.loss(&examples).as_f64();
        if !l.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss.push(l);
    }
    Ok(Pretrained {
        embedding: ae.embedding,
        encoder: ae.encoder,
        report: AeReport { seed, loss },
    })
}

/// Supervised RMSE training with early stopping on validation RMSE; the
/// best-scoring weights are restored before returning.
pub fn train_regressor<F: Real>(
    ds: &Dataset,
    init: Option<&Pretrained<F>>,
    config: &ModelConfig,
    seed: u64,
) -> Result<(LatenessModel<F>, RunCurve)> {
    config.validate()?;
    let mut model = LatenessModel::<F>::init(config, seed);
    model.attach_statistics(ds);
    if let Some(p) = init {
        model.embedding = p.embedding.clone();
        model.encoder = p.encoder.clone();
    }
    let train = train_examples(&model, ds, Split::Train);
    if train.is_empty() {
        return Err(Error::Invalid("training split is empty".into()));
    }
    let mut val = train_examples(&model, ds, Split::Val);
    if val.is_empty() {
        val = train.clone();
    }
    let test = train_examples(&model, ds, Split::Test);
    let to_s = |m: &LatenessModel<F>, ex: &[Example<F>]| m.loss(ex).as_f64() * m.target_std;

    let mut opt = Adam::new(config.learning_rate, model.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e9);
    let mut curve = RunCurve {
        pretrained: init.is_some(),
        seed,
        train_rmse: Vec::new(),
        val_rmse: Vec::new(),
        best_epoch: 0,
        best_val_rmse: to_s(&model, &val),
        test_rmse: f64::NAN,
    };
    let mut best = model.params();
    let mut since_best = 0;
    for epoch in 0..config.max_epochs {
        run_epoch(&mut model, &mut opt, &train, config.batch_size, &mut rng, epoch)?;
        let (tr, va) = (to_s(&model, &train), to_s(&model, &val));
        if !tr.is_finite() || !va.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        curve.train_rmse.push(tr);
        curve.val_rmse.push(va);
        if va < curve.best_val_rmse {
            curve.best_val_rmse = va;
            curve.best_epoch = epoch + 1;
            best = model.params();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    model.set_params(&best);
    curve.test_rmse = if test.is_empty() { f64::NAN } else { to_s(&model, &test) };
    Ok((model, curve))
}

/// Full training as configured: optional pretraining, and in comparison mode
/// a from-scratch run with the same seed. The pretrained model is returned
/// whenever pretraining is enabled.
pub fn compare_pretraining<F: Real>(
    ds: &Dataset,
    config: &ModelConfig,
    seed: u64,
) -> Result<(LatenessModel<F>, TrainReport)> {
    let mut report = TrainReport {
        seed,
        config: config.clone(),
        autoencoder: None,
        pretrained: None,
        scratch: None,
        selected: String::new(),
        test_rmse: f64::NAN,
    };
    let mut chosen = None;
    if config.pretrain {
        let pre = pretrain_autoencoder::<F>(ds, config, seed)?;
        let (model, curve) = train_regressor(ds, Some(&pre), config, seed)?;
        report.autoencoder = Some(pre.report);
        report.test_rmse = curve.test_rmse;
        report.pretrained = Some(curve);
        report.selected = "pretrained".into();
        chosen = Some(model);
    }
    if config.compare || !config.pretrain {
        let (model, curve) = train_regressor::<F>(ds, None, config, seed)?;
        if chosen.is_none() {
            report.test_rmse = curve.test_rmse;
            report.selected = "scratch".into();
            chosen = Some(model);
        }
        report.scratch = Some(curve);
    }
    Ok((chosen.expect("at least one run"), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::DatasetRow;
    use crate::network::{SegmentAttributes, TimePeriod};
    use rand::Rng;

    fn row(i: usize, features: [f64; 6], label: f64) -> DatasetRow {
        DatasetRow {
            edge_id: crate::network::EdgeId(i as u32),
            period: TimePeriod::ALL[i % 5],
            features,
            label_s: label,
            split: match i % 10 {
                8 => Split::Val,
                9 => Split::Test,
                _ => Split::Train,
            },
        }
    }

    fn random_dataset(n: usize, seed: u64, label: impl Fn(&[f64; 6]) -> f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|i| {
                let f = [
                    rng.gen_range(20.0..400.0),
                    rng.gen_range(0..6) as f64,
                    rng.gen_range(0..3) as f64,
                    rng.gen_range(0..3) as f64,
                    rng.gen_range(0..2) as f64,
                    rng.gen_range(0..2) as f64,
                ];
                let y = label(&f);
                row(i, f, y)
            })
            .collect();
        Dataset::from_rows(rows, seed)
    }

    fn small_config() -> ModelConfig {
        ModelConfig {
            batch_size: 32,
            learning_rate: 5e-3,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut x = vec![3.0_f64, -2.0];
        let mut opt = Adam::new(0.1, 2);
        for _ in 0..500 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            opt.step(&mut x, &g);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-2), "{x:?}");
    }

    #[test]
    fn constant_dataset_reconstructs() {
        let rows = (0..64)
            .map(|i| row(i * 5, [100.0, 2.0, 1.0, 0.0, 1.0, 0.0], 40.0))
            .collect();
        let ds = Dataset::from_rows(rows, 1);
        let cfg = ModelConfig {
            ae_epochs: 50,
            ..small_config()
        };
        let pre = pretrain_autoencoder::<f64>(&ds, &cfg, 7).unwrap();
        assert_eq!(pre.report.loss.len(), 50);
        assert!(*pre.report.loss.last().unwrap() < 1e-3, "{:?}", pre.report.loss.last());
    }

    #[test]
    fn zero_epoch_pretraining_is_the_initialization() {
        let ds = random_dataset(50, 3, |_| 1.0);
        let cfg = ModelConfig {
            ae_epochs: 0,
            ..small_config()
        };
        let pre = pretrain_autoencoder::<f64>(&ds, &cfg, 11).unwrap();
        let init = LatenessModel::<f64>::init(&cfg, 11);
        assert_eq!(pre.encoder, init.encoder);
        assert_eq!(pre.embedding, init.embedding);
        assert!(pre.report.loss.is_empty());
    }

    #[test]
    fn ae_runs_are_stable_across_seeds() {
        let ds = random_dataset(500, 5, |f| f[1]);
        let cfg = ModelConfig {
            ae_epochs: 40,
            ..small_config()
        };
        let a = pretrain_autoencoder::<f64>(&ds, &cfg, 1).unwrap().report.loss;
        let b = pretrain_autoencoder::<f64>(&ds, &cfg, 2).unwrap().report.loss;
        let (la, lb) = (*a.last().unwrap(), *b.last().unwrap());
        assert!(la < a[0] && lb < b[0]);
        assert!((la - lb).abs() <= 0.2 * la.max(lb), "{la} vs {lb}");
    }

    #[test]
    fn planted_traffic_light_relation() {
        let ds = random_dataset(2000, 9, |f| 10.0 * f[1]);
        let (model, curve) = train_regressor::<f64>(&ds, None, &small_config(), 4).unwrap();
        assert!(curve.test_rmse < 5.0, "test rmse {}", curve.test_rmse);
        let attrs = SegmentAttributes {
            length_m: 150.0,
            n_traffic_lights: 3,
            ..Default::default()
        };
        let p = model.predict(&attrs, TimePeriod::Noon).unwrap();
        assert!((p - 30.0).abs() < 5.0, "predicted {p}");
    }

    #[test]
    fn constant_target() {
        let ds = random_dataset(400, 2, |_| 300.0);
        let (model, _) = train_regressor::<f64>(&ds, None, &small_config(), 1).unwrap();
        for r in &ds.rows {
            let attrs = SegmentAttributes::from_array(r.features);
            let p = model.predict(&attrs, r.period).unwrap();
            assert!((p - 300.0).abs() <= 10.0, "{p}");
        }
    }

    #[test]
    fn training_is_reproducible_and_curves_align() {
        let ds = random_dataset(300, 4, |f| 5.0 * f[2] + f[0] / 20.0);
        let cfg = ModelConfig {
            max_epochs: 15,
            ae_epochs: 5,
            ..small_config()
        };
        let (m1, r1) = compare_pretraining::<f64>(&ds, &cfg, 8).unwrap();
        let (m2, r2) = compare_pretraining::<f64>(&ds, &cfg, 8).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1, r2);
        for c in [r1.pretrained.unwrap(), r1.scratch.unwrap()] {
            assert_eq!(c.train_rmse.len(), c.val_rmse.len());
            assert!(c.epochs() <= 15);
        }
        assert_eq!(r1.selected, "pretrained");
    }

    #[test]
    fn divergence_is_reported() {
        let ds = random_dataset(100, 4, |f| f[0]);
        let cfg = ModelConfig {
            learning_rate: f64::INFINITY,
            ..small_config()
        };
        assert!(cfg.validate().is_ok());
        assert!(matches!(
            train_regressor::<f64>(&ds, None, &cfg, 1),
            Err(Error::Diverged { epoch: 0 })
        ));
    }

    #[test]
    fn single_precision_training() {
        let ds = random_dataset(500, 6, |f| 10.0 * f[1]);
        let cfg = ModelConfig {
            max_epochs: 60,
            ..small_config()
        };
        let (model, curve) = train_regressor::<f32>(&ds, None, &cfg, 2).unwrap();
        assert!(curve.test_rmse < 10.0, "{}", curve.test_rmse);
        let p = model
            .predict(
                &SegmentAttributes {
                    n_traffic_lights: 2,
                    length_m: 100.0,
                    ..Default::default()
                },
                TimePeriod::Morning,
            )
            .unwrap();
        assert!(p.is_finite() && p >= 0.1);
    }
}
