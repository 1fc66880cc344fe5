//! Central finite-difference audit of the reference gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{mse, Image, Oversampling};
use crate::measurement::measure;
use crate::rng::{label, Rng};

use super::grad::{loss_and_grad_u_variant, VjpVariant};
use super::trace::unrolled_forward;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradcheckConfig {
    pub trials: usize,
    pub sizes: Vec<usize>,
    pub unrolls: Vec<usize>,
    pub oversampling: Vec<Oversampling>,
    pub seed: u64,
    /// Finite-difference step.
    pub step: f64,
    pub tolerance: f64,
    /// Instances with a clamp input or a spectrum magnitude closer than this
    /// to its kink are resampled.
    pub kink_margin: f64,
    /// Per-pixel relative errors use `max(|analytic|, |numeric|, floor)` as
    /// the denominator.
    pub floor: f64,
    pub max_resamples: usize,
    #[serde(skip)]
    pub variant: VjpVariant,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            trials: 50,
            sizes: vec![4, 6, 8],
            unrolls: vec![1, 2, 3, 5],
            oversampling: vec![Oversampling::None, Oversampling::Double],
            seed: 0,
            step: 1e-6,
            tolerance: 1e-4,
            kink_margin: 1e-6,
            floor: 1e-8,
            max_resamples: 100,
            variant: VjpVariant::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub side: usize,
    pub unroll: usize,
    pub oversampling: Oversampling,
    pub max_rel_error: f64,
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub trials: Vec<TrialResult>,
    pub max_rel_error: f64,
    pub resampled: usize,
    pub tolerance: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

struct Instance {
    x_true: Image,
    x0: Image,
    u: Image,
}

fn uniform_image(d: usize, rng: &mut Rng) -> Image {
    Image::from_vec(d, (0..d * d).map(|_| rng.uniform()).collect()).expect("finite")
}

fn near_kink(inst: &Instance, s: Oversampling, n: usize, margin: f64) -> Result<bool> {
    let y = measure(&inst.x_true, Some(&inst.u), s)?;
    if y.data().iter().any(|&m| m <= margin) {
        return Ok(true);
    }
    let (_, trace) = unrolled_forward(&inst.x0, &inst.u, &y, n)?;
    Ok(trace.steps.iter().any(|step| {
        step.pre_activation.iter().any(|v| v.abs() <= margin)
            || step.spectrum.iter().any(|z| z.norm() <= margin)
    }))
}

/// Runs `cfg.trials` seeded instances cycling through sizes, unroll depths
/// and oversampling factors, comparing the analytic gradient with central
/// differences of the same loss (measurement held fixed).
pub fn gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    if cfg.trials > 0
        && (cfg.sizes.is_empty() || cfg.unrolls.is_empty() || cfg.oversampling.is_empty())
    {
        return Err(Error::invalid(
            "gradcheck needs at least one size, unroll and oversampling",
        ));
    }
    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let d = cfg.sizes[t % cfg.sizes.len()];
        let n = cfg.unrolls[(t / cfg.sizes.len()) % cfg.unrolls.len()];
        let s = cfg.oversampling[t % cfg.oversampling.len()];

        let mut resamples = 0;
        let inst = loop {
            let mut rng = Rng::derived(
                cfg.seed,
                label::GRADCHECK,
                ((t as u64) << 32) | resamples as u64,
            );
            let inst = Instance {
                x_true: uniform_image(d, &mut rng),
                x0: uniform_image(d, &mut rng),
                u: uniform_image(d, &mut rng),
            };
            if !near_kink(&inst, s, n, cfg.kink_margin)? {
                break inst;
            }
            resamples += 1;
            if resamples > cfg.max_resamples {
                return Err(Error::invalid(format!(
                    "trial {t}: no kink-free instance after {resamples} draws"
                )));
            }
        };

        let y = measure(&inst.x_true, Some(&inst.u), s)?;
        let (_, grad) =
            loss_and_grad_u_variant(&inst.x_true, &inst.x0, &inst.u, &y, n, cfg.variant)?;
        let loss_at = |u: &Image| -> Result<f64> {
            let (xn, _) = unrolled_forward(&inst.x0, u, &y, n)?;
            mse(&xn, &inst.x_true)
        };
        let mut worst: f64 = 0.0;
        for i in 0..d * d {
            let mut plus = inst.u.clone();
            plus.data_mut()[i] += cfg.step;
            let mut minus = inst.u.clone();
            minus.data_mut()[i] -= cfg.step;
            let numeric = (loss_at(&plus)? - loss_at(&minus)?) / (2.0 * cfg.step);
            let analytic = grad.data()[i];
            let denom = analytic.abs().max(numeric.abs()).max(cfg.floor);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
        trials.push(TrialResult {
            side: d,
            unroll: n,
            oversampling: s,
            max_rel_error: worst,
            resamples,
        });
    }
    let max_rel_error = trials.iter().map(|t| t.max_rel_error).fold(0.0, f64::max);
    let resampled = trials.iter().map(|t| t.resamples).sum();
    Ok(GradcheckReport {
        trials,
        max_rel_error,
        resampled,
        tolerance: cfg.tolerance,
    })
}
