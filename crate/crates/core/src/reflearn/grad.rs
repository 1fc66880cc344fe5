//! Reverse pass through the unrolled solver.
//!
//! Complex intermediates are treated as pairs of real variables and carry
//! gradients `dL/dRe + i dL/dIm`. With that convention the adjoint of a
//! complex-linear map is its conjugate transpose, so the unitary forward
//! transform pulls back through the inverse transform and vice versa.
//!
//! Local conventions at non-smooth points:
//! * the non-negativity clamp passes gradient only where its input is
//!   strictly positive;
//! * where the magnitude guard is active (`|z| <= eps`) the phase map is
//!   `z / eps`, a linear map.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::FftPlan;
use crate::image::{mse, Image, Measurement, Oversampling};
use crate::measurement::{forward_spectrum, measure};

use super::trace::{unrolled_forward, UnrollTrace};

/// Which vector-Jacobian product to use. Anything but `Exact` exists only to
/// prove that the gradient checker catches a broken reverse pass.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VjpVariant {
    #[default]
    Exact,
    /// Drops the reference's subtraction site.
    DropSubtraction,
}

pub(crate) struct Backward {
    pub grad_u: Vec<f64>,
    pub grad_y: Option<Vec<f64>>,
}

/// Pulls `upstream = dL/dx_n` back to the reference (and optionally to the
/// measurement).
pub(crate) fn backward(
    trace: &UnrollTrace,
    upstream: &[f64],
    want_grad_y: bool,
    variant: VjpVariant,
) -> Result<Backward> {
    let y = &trace.measurement;
    let big = y.side();
    let d = trace.x0.side();
    let eps = trace.epsilon;
    let plan = FftPlan::cached(big)?;

    let mut grad_u = vec![0.0; d * d];
    let mut grad_y = want_grad_y.then(|| vec![0.0; big * big]);
    let mut g = upstream.to_vec();
    let mut buf = vec![Complex64::new(0.0, 0.0); big * big];

    for step in trace.steps.iter().rev() {
        // x_{k+1} = max(0, pre)
        for (gi, &pre) in g.iter_mut().zip(&step.pre_activation) {
            if pre <= 0.0 {
                *gi = 0.0;
            }
        }
        // pre = extract(Re w) - u
        if variant != VjpVariant::DropSubtraction {
            for (gu, gi) in grad_u.iter_mut().zip(&g) {
                *gu -= gi;
            }
        }
        buf.fill(Complex64::new(0.0, 0.0));
        for r in 0..d {
            for c in 0..d {
                buf[r * big + c] = Complex64::new(g[r * d + c], 0.0);
            }
        }
        // w = F^-1 q
        plan.forward_in_place(&mut buf)?;
        // q = p * y, p = z / max(|z|, eps)
        for (k, gq) in buf.iter_mut().enumerate() {
            let p = step.phase[k];
            if let Some(gy) = grad_y.as_mut() {
                gy[k] += (p.conj() * *gq).re;
            }
            let gp = *gq * y.data()[k];
            let z = step.spectrum[k];
            *gq = if z.norm() > eps {
                Complex64::i() * p * ((p.conj() * gp).im / step.magnitude[k])
            } else {
                gp / eps
            };
        }
        // z = F a, a = embed(x_k + u)
        plan.inverse_in_place(&mut buf)?;
        for r in 0..d {
            for c in 0..d {
                let i = r * d + c;
                let v = buf[r * big + c].re;
                g[i] = v;
                grad_u[i] += v;
            }
        }
    }
    if let Some(index) = grad_u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            context: "reference gradient",
        });
    }
    Ok(Backward { grad_u, grad_y })
}

fn loss_seed(xn: &Image, x_true: &Image) -> Vec<f64> {
    let scale = 2.0 / xn.len() as f64;
    xn.data()
        .iter()
        .zip(x_true.data())
        .map(|(a, b)| scale * (a - b))
        .collect()
}

/// MSE after `n` GS iterations and its gradient with respect to `u`, for a
/// fixed measurement `y`.
pub fn loss_and_grad_u(
    x_true: &Image,
    x0: &Image,
    u: &Image,
    y: &Measurement,
    n: usize,
) -> Result<(f64, Image)> {
    loss_and_grad_u_variant(x_true, x0, u, y, n, VjpVariant::Exact)
}

#[doc(hidden)]
pub fn loss_and_grad_u_variant(
    x_true: &Image,
    x0: &Image,
    u: &Image,
    y: &Measurement,
    n: usize,
    variant: VjpVariant,
) -> Result<(f64, Image)> {
    x_true.check_side(x0.side())?;
    let (xn, trace) = unrolled_forward(x0, u, y, n)?;
    let loss = mse(&xn, x_true)?;
    let back = backward(&trace, &loss_seed(&xn, x_true), false, variant)?;
    Ok((loss, Image::from_raw(u.side(), back.grad_u)))
}

/// Like [`loss_and_grad_u`], but the measurement is taken inside the
/// differentiated function: `y = |F(embed(x_true + u, s))|`. The gradient
/// then also includes the path through `y`, which is the objective a
/// reference actually faces when it is added before measuring.
pub fn loss_and_grad_u_end_to_end(
    x_true: &Image,
    x0: &Image,
    u: &Image,
    s: Oversampling,
    n: usize,
) -> Result<(f64, Image)> {
    x_true.check_side(x0.side())?;
    u.check_side(x0.side())?;
    let y = measure(x_true, Some(u), s)?;
    let (xn, trace) = unrolled_forward(x0, u, &y, n)?;
    let loss = mse(&xn, x_true)?;
    let back = backward(&trace, &loss_seed(&xn, x_true), true, VjpVariant::Exact)?;
    let mut grad_u = back.grad_u;
    let grad_y = back.grad_y.expect("requested");

    // y = |z_m| with z_m = F(embed(x_true + u))
    let z = forward_spectrum(x_true, Some(u), s)?;
    let big = z.side();
    let d = u.side();
    let mut buf: Vec<Complex64> = z
        .data()
        .iter()
        .zip(&grad_y)
        .map(|(z, &gy)| {
            let norm = z.norm();
            if norm > trace.epsilon {
                *z * (gy / norm)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlan::cached(big)?.inverse_in_place(&mut buf)?;
    for r in 0..d {
        for c in 0..d {
            grad_u[r * d + c] += buf[r * big + c].re;
        }
    }
    if let Some(index) = grad_u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            context: "reference gradient",
        });
    }
    Ok((loss, Image::from_raw(d, grad_u)))
}
