use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{mse, Image, Oversampling};
use crate::measurement::measure;
use crate::reconstruct::InitMode;
use crate::rng::{derive_seed, label, Rng};

use super::adam::AdamState;
use super::grad::loss_and_grad_u_end_to_end;
use super::trace::unrolled_forward;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub unroll_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Number of Adam updates.
    pub max_batches: usize,
    pub seed: u64,
    pub oversampling: Oversampling,
    /// Fraction of the dataset, taken from its end, held out for validation.
    pub validation_fraction: f64,
    /// Validation MSE is recorded every this many updates.
    pub validate_every: usize,
    /// Stop after this many validations without improvement.
    pub patience: Option<usize>,
}

/// Relative drop in validation MSE that counts as an improvement.
const PLATEAU_TOLERANCE: f64 = 1e-6;

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            unroll_steps: 15,
            batch_size: 10,
            learning_rate: 0.01,
            max_batches: 1000,
            seed: 0,
            oversampling: Oversampling::Double,
            validation_fraction: 0.1,
            validate_every: 5,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.unroll_steps == 0 {
            return Err(Error::invalid("unroll steps must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid("validation fraction must lie in (0, 1)"));
        }
        if self.validate_every == 0 {
            return Err(Error::invalid("validation interval must be positive"));
        }
        if self.patience == Some(0) {
            return Err(Error::invalid("patience must be positive"));
        }
        Ok(())
    }

    /// `(train, validation)` sizes for a dataset of `n` images.
    pub fn split(&self, n: usize) -> Result<(usize, usize)> {
        let val = ((n as f64) * self.validation_fraction).round().max(1.0) as usize;
        if n < 2 || val >= n {
            return Err(Error::invalid(format!(
                "dataset of {n} images is too small for a training/validation split"
            )));
        }
        Ok((n - val, val))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// Number of Adam updates applied before this record.
    pub step: usize,
    /// Mean batch loss of the update taken at this step.
    pub train_mse: Option<f64>,
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxBatches,
    Plateau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub reference: Image,
    pub adam: AdamState,
    pub history: Vec<HistoryRecord>,
    pub stop: StopReason,
}

/// Initial reference: uniform `[0, 1)` from the run seed.
pub fn initial_reference(d: usize, seed: u64) -> Image {
    InitMode::Uniform {
        seed: derive_seed(seed, label::REFERENCE_INIT, 0),
    }
    .initial_image(d)
}

fn solver_start(seed: u64, stream: u64, index: u64, d: usize) -> Image {
    InitMode::Uniform {
        seed: derive_seed(seed, stream, index),
    }
    .initial_image(d)
}

/// Mean MSE of the unrolled solver on held-out images, each with a fixed
/// seeded starting point.
pub fn validation_mse(images: &[Image], u: &Image, cfg: &TrainConfig) -> Result<f64> {
    let losses = images
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let x0 = solver_start(cfg.seed, label::VALIDATION_INIT, i as u64, x.side());
            let y = measure(x, Some(u), cfg.oversampling)?;
            let (xn, _) = unrolled_forward(&x0, u, &y, cfg.unroll_steps)?;
            mse(&xn, x)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Learns a reference by Adam on the unrolled GS reconstruction error.
///
/// The last `validation_fraction` of `dataset` is held out. Each update
/// draws the next batch of a per-epoch shuffle, measures every member with
/// the current reference, averages the end-to-end gradients and applies one
/// projected Adam step.
pub fn train_reference(dataset: &[Image], cfg: &TrainConfig) -> Result<TrainOutcome> {
    if dataset.is_empty() {
        return Err(Error::invalid("training dataset is empty"));
    }
    let d = dataset[0].side();
    if let Some(bad) = dataset.iter().find(|x| x.side() != d) {
        return Err(Error::SizeMismatch {
            expected: d,
            actual: bad.side(),
        });
    }
    train_reference_from(dataset, initial_reference(d, cfg.seed), cfg)
}

pub fn train_reference_from(
    dataset: &[Image],
    initial: Image,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (n_train, _) = cfg.split(dataset.len())?;
    let (train, val) = dataset.split_at(n_train);
    for x in dataset {
        x.check_side(initial.side())?;
        x.check_unit_range("training image")?;
    }
    initial.check_unit_range("initial reference")?;

    let d = initial.side();
    let mut u = initial;
    let mut adam = AdamState::new(d, cfg.learning_rate);
    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;
    let mut stop = StopReason::MaxBatches;

    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0usize;
    let mut epoch = 0u64;

    for step in 0..=cfg.max_batches {
        let val_mse = if step % cfg.validate_every == 0 || step == cfg.max_batches {
            let v = validation_mse(val, &u, cfg)?;
            debug!("step {step}: validation mse {v:.6e}");
            Some(v)
        } else {
            None
        };
        if let (Some(v), Some(patience)) = (val_mse, cfg.patience) {
            if v < best_val * (1.0 - PLATEAU_TOLERANCE) {
                best_val = v;
                stale = 0;
            } else {
                stale += 1;
            }
            if stale >= patience {
                history.push(HistoryRecord {
                    step,
                    train_mse: None,
                    val_mse,
                });
                stop = StopReason::Plateau;
                info!("validation plateau after {step} updates");
                break;
            }
        }
        if step == cfg.max_batches {
            history.push(HistoryRecord {
                step,
                train_mse: None,
                val_mse,
            });
            break;
        }

        let mut batch = Vec::with_capacity(cfg.batch_size);
        while batch.len() < cfg.batch_size.min(n_train) {
            if cursor == order.len() {
                order = (0..n_train).collect();
                Rng::derived(cfg.seed, label::BATCH_ORDER, epoch).shuffle(&mut order);
                epoch += 1;
                cursor = 0;
            }
            batch.push(order[cursor]);
            cursor += 1;
        }

        let base = (step * cfg.batch_size) as u64;
        let results = batch
            .par_iter()
            .enumerate()
            .map(|(j, &idx)| {
                let x = &train[idx];
                let x0 = solver_start(cfg.seed, label::TRAIN_INIT, base + j as u64, d);
                loss_and_grad_u_end_to_end(x, &x0, &u, cfg.oversampling, cfg.unroll_steps)
            })
            .collect::<Result<Vec<_>>>()?;

        let scale = 1.0 / results.len() as f64;
        let mut grad = vec![0.0; d * d];
        let mut loss = 0.0;
        for (l, g) in &results {
            loss += l * scale;
            for (acc, gi) in grad.iter_mut().zip(g.data()) {
                *acc += gi * scale;
            }
        }
        u = adam.step(&u, &Image::from_vec(d, grad)?)?;
        history.push(HistoryRecord {
            step,
            train_mse: Some(loss),
            val_mse,
        });
    }
    Ok(TrainOutcome {
        reference: u,
        adam,
        history,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n: usize, d: usize, seed: u64) -> Vec<Image> {
        let mut rng = Rng::new(seed);
        (0..n)
            .map(|_| {
                let cr = rng.below(d) as f64;
                let cc = rng.below(d) as f64;
                Image::from_vec(
                    d,
                    (0..d * d)
                        .map(|i| {
                            let dr = (i / d) as f64 - cr;
                            let dc = (i % d) as f64 - cc;
                            (-(dr * dr + dc * dc) / 4.0).exp()
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            unroll_steps: 3,
            batch_size: 4,
            max_batches: 6,
            validate_every: 2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn history_is_finite_and_ordered() {
        let data = blobs(20, 8, 1);
        let out = train_reference(&data, &small_cfg()).unwrap();
        assert!(!out.history.is_empty());
        for rec in &out.history {
            for v in rec.train_mse.iter().chain(rec.val_mse.iter()) {
                assert!(v.is_finite());
            }
        }
        assert!(out.history.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(out.adam.t, 6);
        assert!(out.reference.check_unit_range("u").is_ok());
    }

    #[test]
    fn deterministic_given_seed() {
        let data = blobs(20, 8, 2);
        let a = train_reference(&data, &small_cfg()).unwrap();
        let b = train_reference(&data, &small_cfg()).unwrap();
        let bits = |img: &Image| img.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.reference), bits(&b.reference));
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn zero_batches_keeps_initial_reference() {
        let data = blobs(10, 6, 3);
        let cfg = TrainConfig {
            max_batches: 0,
            ..small_cfg()
        };
        let out = train_reference(&data, &cfg).unwrap();
        assert_eq!(out.reference, initial_reference(6, cfg.seed));
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn bad_inputs() {
        assert!(train_reference(&[], &small_cfg()).is_err());
        let one = blobs(1, 6, 4);
        assert!(train_reference(&one, &small_cfg()).is_err());
        let mut mixed = blobs(4, 6, 5);
        mixed.push(Image::zeros(5));
        assert!(train_reference(&mixed, &small_cfg()).is_err());
    }

    #[test]
    fn plateau_stop_is_reported() {
        let data = blobs(12, 6, 6);
        let cfg = TrainConfig {
            max_batches: 400,
            validate_every: 1,
            patience: Some(1),
            learning_rate: 1e-12,
            ..small_cfg()
        };
        let out = train_reference(&data, &cfg).unwrap();
        assert_eq!(out.stop, StopReason::Plateau);
        assert!(out.adam.t < 400);
    }

    #[test]
    fn split_sizes() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.split(100).unwrap(), (90, 10));
        assert_eq!(cfg.split(20).unwrap(), (18, 2));
        assert_eq!(cfg.split(3).unwrap(), (2, 1));
        assert!(cfg.split(1).is_err());
    }
}
