//! Hand-constructed reference images: uniform noise, binary noise and the
//! "simple" reference (a blurred, noise-perturbed, binarized corner square).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::Rng;

pub fn random_reference(d: usize, rng: &mut Rng) -> Result<Image> {
    if d == 0 {
        return Err(Error::invalid("reference side must be at least 1"));
    }
    Ok(Image::from_raw(
        d,
        (0..d * d).map(|_| rng.uniform()).collect(),
    ))
}

pub fn random_binary_reference(d: usize, rng: &mut Rng) -> Result<Image> {
    if d == 0 {
        return Err(Error::invalid("reference side must be at least 1"));
    }
    Ok(Image::from_raw(
        d,
        (0..d * d)
            .map(|_| if rng.bernoulli(0.5) { 1.0 } else { 0.0 })
            .collect(),
    ))
}

/// Parameters of [`simple_reference`]. `None` fields resolve from the image
/// side: square side `ceil(d / 2)`, blur width `d / 10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimpleRefParams {
    pub square_side: Option<usize>,
    pub sigma: Option<f64>,
    pub noise_weight: f64,
    pub poisson_rate: f64,
    pub threshold: f64,
}

impl Default for SimpleRefParams {
    fn default() -> Self {
        SimpleRefParams {
            square_side: None,
            sigma: None,
            noise_weight: 0.3,
            poisson_rate: 1.0,
            threshold: 0.5,
        }
    }
}

impl SimpleRefParams {
    pub fn square_side_for(&self, d: usize) -> usize {
        self.square_side.unwrap_or(d.div_ceil(2))
    }

    pub fn sigma_for(&self, d: usize) -> f64 {
        self.sigma.unwrap_or(d as f64 / 10.0)
    }

    fn validate(&self, d: usize) -> Result<()> {
        let side = self.square_side_for(d);
        if side == 0 || side > d {
            return Err(Error::invalid(format!(
                "square side {side} outside [1, {d}]"
            )));
        }
        let sigma = self.sigma_for(d);
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma {sigma} must be positive")));
        }
        if !(self.noise_weight >= 0.0 && self.noise_weight.is_finite()) {
            return Err(Error::invalid("noise weight must be non-negative"));
        }
        if !(self.poisson_rate > 0.0 && self.poisson_rate <= 10.0) {
            return Err(Error::invalid("poisson rate must lie in (0, 10]"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::invalid("threshold must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Normalized 1D Gaussian taps on `[-ceil(3 sigma), ceil(3 sigma)]`.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable convolution with zero padding outside the grid.
fn blur(data: &[f64], d: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let d_i = d as isize;
    let pass = |src: &[f64], along_rows: bool| -> Vec<f64> {
        let mut out = vec![0.0; d * d];
        for r in 0..d_i {
            for c in 0..d_i {
                let mut acc = 0.0;
                for (t, &w) in kernel.iter().enumerate() {
                    let off = t as isize - radius;
                    let (rr, cc) = if along_rows {
                        (r, c + off)
                    } else {
                        (r + off, c)
                    };
                    if (0..d_i).contains(&rr) && (0..d_i).contains(&cc) {
                        acc += w * src[(rr * d_i + cc) as usize];
                    }
                }
                out[(r * d_i + c) as usize] = acc;
            }
        }
        out
    };
    let horizontal = pass(data, true);
    pass(&horizontal, false)
}

/// Builds the simple reference:
///
/// 1. black image with a white square whose bottom-right corner is the
///    bottom-right pixel,
/// 2. truncated Gaussian blur with zero padding,
/// 3. division by the maximum,
/// 4. per-pixel `noise_weight * Poisson(poisson_rate)` added,
/// 5. pixels above `threshold` become 1, the rest 0.
pub fn simple_reference(d: usize, params: &SimpleRefParams, rng: &mut Rng) -> Result<Image> {
    if d < 4 {
        return Err(Error::invalid(format!(
            "simple reference needs side >= 4, got {d}"
        )));
    }
    params.validate(d)?;
    let side = params.square_side_for(d);
    let mut square = vec![0.0; d * d];
    for r in d - side..d {
        for c in d - side..d {
            square[r * d + c] = 1.0;
        }
    }
    let mut blurred = blur(&square, d, &gaussian_kernel(params.sigma_for(d)));
    let max = blurred.iter().cloned().fold(0.0, f64::max);
    for v in &mut blurred {
        *v /= max;
    }
    let out = blurred
        .into_iter()
        .map(|v| {
            let noisy = v + params.noise_weight * rng.poisson(params.poisson_rate) as f64;
            if noisy > params.threshold {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(Image::from_raw(d, out))
}
