//! Phase retrieval solvers that know the reference.
//!
//! [`gs_run`] is Gerchberg-Saxton with the reference added before every
//! forward transform and subtracted after every inverse transform, followed
//! by the support and non-negativity constraints. [`gd_run`] is projected
//! gradient descent on the amplitude loss
//! `f(x) = 1/2 * sum((max(|F(x + u)|, eps) - y)^2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FftPlan;
use crate::image::{Image, Measurement, Oversampling};
use crate::rng::Rng;

pub const DEFAULT_EPSILON: f64 = 1e-12;
/// Step size of the gradient-descent baseline.
pub const DEFAULT_GD_STEP: f64 = 1.95;
pub const DEFAULT_TEST_ITERATIONS: usize = 500;
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitMode {
    Zeros,
    /// I.i.d. uniform `[0, 1)` pixels drawn from `Rng::new(seed)`.
    Uniform {
        seed: u64,
    },
}

impl Default for InitMode {
    fn default() -> Self {
        InitMode::Uniform { seed: 0 }
    }
}

impl InitMode {
    pub fn initial_image(self, side: usize) -> Image {
        match self {
            InitMode::Zeros => Image::zeros(side),
            InitMode::Uniform { seed } => {
                let mut rng = Rng::new(seed);
                Image::from_raw(side, (0..side * side).map(|_| rng.uniform()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsConfig {
    pub iterations: usize,
    pub epsilon: f64,
    pub oversampling: Oversampling,
    pub init: InitMode,
}

impl Default for GsConfig {
    fn default() -> Self {
        GsConfig {
            iterations: DEFAULT_TEST_ITERATIONS,
            epsilon: DEFAULT_EPSILON,
            oversampling: Oversampling::Double,
            init: InitMode::default(),
        }
    }
}

impl GsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("GS iterations must be at least 1"));
        }
        check_epsilon(self.epsilon)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1e-6) {
        return Err(Error::invalid(format!(
            "epsilon {epsilon} outside (0, 1e-6]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub iterations: usize,
    pub step_size: f64,
    pub epsilon: f64,
    pub oversampling: Oversampling,
    pub init: InitMode,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            iterations: DEFAULT_TEST_ITERATIONS,
            step_size: DEFAULT_GD_STEP,
            epsilon: DEFAULT_EPSILON,
            oversampling: Oversampling::Double,
            init: InitMode::default(),
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::invalid("GD iterations must be at least 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!(
                "step size {} must be positive",
                self.step_size
            )));
        }
        check_epsilon(self.epsilon)
    }
}

pub(crate) fn check_compatible(
    x: &Image,
    u: Option<&Image>,
    y: &Measurement,
    s: Oversampling,
) -> Result<()> {
    if y.oversampling() != s {
        return Err(Error::invalid(format!(
            "measurement oversampling {} does not match configured {}",
            y.oversampling(),
            s
        )));
    }
    x.check_side(y.image_side())?;
    if let Some(u) = u {
        u.check_side(y.image_side())?;
    }
    Ok(())
}

/// Intermediates of one GS iteration, recorded for the reverse pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GsIntermediates {
    /// Spectrum `F(embed(x_k + u))` before the magnitude guard.
    pub spectrum: Vec<Complex64>,
    /// Guarded magnitude `max(|z|, eps)`.
    pub magnitude: Vec<f64>,
    /// Phase estimate `z / max(|z|, eps)`.
    pub phase: Vec<Complex64>,
    /// Image after subtracting the reference, before the non-negativity clamp.
    pub pre_activation: Vec<f64>,
}

/// One GS iteration on raw buffers. Returns `x_{k+1}` and, when asked, the
/// intermediates.
pub(crate) fn gs_iteration(
    plan: &FftPlan,
    x: &[f64],
    u: Option<&[f64]>,
    y: &[f64],
    d: usize,
    epsilon: f64,
    record: bool,
) -> Result<(Vec<f64>, Option<GsIntermediates>)> {
    let big = plan.side();
    let mut buf = vec![Complex64::new(0.0, 0.0); big * big];
    for r in 0..d {
        for c in 0..d {
            let i = r * d + c;
            buf[r * big + c] = Complex64::new(x[i] + u.map_or(0.0, |u| u[i]), 0.0);
        }
    }
    plan.forward_in_place(&mut buf)?;

    let spectrum = record.then(|| buf.clone());
    let mut magnitude = Vec::new();
    let mut phase = Vec::new();
    if record {
        magnitude.reserve(buf.len());
        phase.reserve(buf.len());
    }
    for (z, &yk) in buf.iter_mut().zip(y) {
        let m = z.norm().max(epsilon);
        let p = *z / m;
        if record {
            magnitude.push(m);
            phase.push(p);
        }
        *z = p * yk;
    }
    plan.inverse_in_place(&mut buf)?;

    let mut pre = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            let i = r * d + c;
            pre[i] = buf[r * big + c].re - u.map_or(0.0, |u| u[i]);
        }
    }
    if let Some(index) = pre.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            context: "GS iterate (check epsilon)",
        });
    }
    let next = pre.iter().map(|&v| v.max(0.0)).collect();
    let intermediates = spectrum.map(|spectrum| GsIntermediates {
        spectrum,
        magnitude,
        phase,
        pre_activation: pre,
    });
    Ok((next, intermediates))
}

/// A single reference-aware GS iteration from `x_k`.
pub fn gs_step(x_k: &Image, u: Option<&Image>, y: &Measurement, cfg: &GsConfig) -> Result<Image> {
    check_epsilon(cfg.epsilon)?;
    check_compatible(x_k, u, y, cfg.oversampling)?;
    let plan = FftPlan::cached(y.side())?;
    let (next, _) = gs_iteration(
        &plan,
        x_k.data(),
        u.map(Image::data),
        y.data(),
        x_k.side(),
        cfg.epsilon,
        false,
    )?;
    Ok(Image::from_raw(x_k.side(), next))
}

/// Runs `cfg.iterations` GS steps from the configured initialization.
pub fn gs_run(y: &Measurement, u: Option<&Image>, cfg: &GsConfig) -> Result<Image> {
    let x0 = cfg.init.initial_image(y.image_side());
    gs_run_from(&x0, y, u, cfg)
}

/// Runs `cfg.iterations` GS steps from an explicit starting point.
pub fn gs_run_from(
    x0: &Image,
    y: &Measurement,
    u: Option<&Image>,
    cfg: &GsConfig,
) -> Result<Image> {
    cfg.validate()?;
    check_compatible(x0, u, y, cfg.oversampling)?;
    let plan = FftPlan::cached(y.side())?;
    let d = x0.side();
    let mut x = x0.data().to_vec();
    for _ in 0..cfg.iterations {
        x = gs_iteration(
            &plan,
            &x,
            u.map(Image::data),
            y.data(),
            d,
            cfg.epsilon,
            false,
        )?
        .0;
    }
    Ok(Image::from_raw(d, x))
}

/// Amplitude loss and its gradient with respect to `x` (on the `d x d`
/// support).
pub fn amplitude_loss_and_grad(
    x: &Image,
    u: Option<&Image>,
    y: &Measurement,
    epsilon: f64,
) -> Result<(f64, Image)> {
    check_compatible(x, u, y, y.oversampling())?;
    let plan = FftPlan::cached(y.side())?;
    let (loss, grad, _) = amplitude_grad_raw(
        &plan,
        x.data(),
        u.map(Image::data),
        y.data(),
        x.side(),
        epsilon,
    )?;
    Ok((loss, Image::from_raw(x.side(), grad)))
}

/// Returns `(loss, gradient, residual)` where the residual is the mean
/// squared magnitude mismatch of the unguarded modulus.
fn amplitude_grad_raw(
    plan: &FftPlan,
    x: &[f64],
    u: Option<&[f64]>,
    y: &[f64],
    d: usize,
    epsilon: f64,
) -> Result<(f64, Vec<f64>, f64)> {
    let big = plan.side();
    let mut buf = vec![Complex64::new(0.0, 0.0); big * big];
    for r in 0..d {
        for c in 0..d {
            let i = r * d + c;
            buf[r * big + c] = Complex64::new(x[i] + u.map_or(0.0, |u| u[i]), 0.0);
        }
    }
    plan.forward_in_place(&mut buf)?;
    let mut loss = 0.0;
    let mut residual = 0.0;
    for (z, &yk) in buf.iter_mut().zip(y) {
        let norm = z.norm();
        let m = norm.max(epsilon);
        loss += 0.5 * (m - yk) * (m - yk);
        residual += (norm - yk) * (norm - yk);
        // max(|z|, eps) is flat below the guard
        *z = if norm > epsilon {
            *z * ((m - yk) / norm)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    plan.inverse_in_place(&mut buf)?;
    let mut grad = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            grad[r * d + c] = buf[r * big + c].re;
        }
    }
    Ok((loss, grad, residual / y.len() as f64))
}

/// Projected gradient descent on the amplitude loss.
pub fn gd_run(y: &Measurement, u: Option<&Image>, cfg: &GdConfig) -> Result<Image> {
    gd_run_logged(y, u, cfg).map(|(x, _)| x)
}

/// Like [`gd_run`], also returning the residual observed before each update.
pub fn gd_run_logged(
    y: &Measurement,
    u: Option<&Image>,
    cfg: &GdConfig,
) -> Result<(Image, Vec<f64>)> {
    cfg.validate()?;
    let d = y.image_side();
    let x0 = cfg.init.initial_image(d);
    check_compatible(&x0, u, y, cfg.oversampling)?;
    let plan = FftPlan::cached(y.side())?;
    let mut x = x0.into_vec();
    let mut residuals = Vec::with_capacity(cfg.iterations);
    for iteration in 0..cfg.iterations {
        let (_, grad, residual) =
            amplitude_grad_raw(&plan, &x, u.map(Image::data), y.data(), d, cfg.epsilon)?;
        if residual.is_nan() || residual > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                iteration,
                residual,
            });
        }
        residuals.push(residual);
        for (xi, gi) in x.iter_mut().zip(&grad) {
            *xi = (*xi - cfg.step_size * gi).max(0.0);
        }
    }
    Ok((Image::from_raw(d, x), residuals))
}
