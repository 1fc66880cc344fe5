//! Unitary 2D DFT and the zero-padding used for oversampled measurements.
//!
//! Both directions carry a `1/D` factor, so the forward transform is unitary
//! and its adjoint is the inverse transform. The reverse pass in
//! [`crate::reflearn`] relies on that identity.
//!
//! One-dimensional transforms come from `rustfft` (mixed radix with a
//! Bluestein fallback, so any side works); this module applies them along
//! rows and columns.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{Image, Oversampling, Spectrum};

pub struct FftPlan {
    side: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("side", &self.side).finish()
    }
}

impl FftPlan {
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::invalid("FFT side must be at least 1"));
        }
        let mut planner = FftPlanner::new();
        Ok(FftPlan {
            side,
            scale: 1.0 / side as f64,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        })
    }

    /// Shared plan for `side`, built on first use.
    pub fn cached(side: usize) -> Result<Arc<FftPlan>> {
        static PLANS: OnceLock<Mutex<HashMap<usize, Arc<FftPlan>>>> = OnceLock::new();
        let plans = PLANS.get_or_init(Default::default);
        let mut plans = plans.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(plan) = plans.get(&side) {
            return Ok(Arc::clone(plan));
        }
        let plan = Arc::new(FftPlan::new(side)?);
        plans.insert(side, Arc::clone(&plan));
        Ok(plan)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.side * self.side {
            return Err(Error::SizeMismatch {
                expected: self.side,
                actual: (len as f64).sqrt() as usize,
            });
        }
        Ok(())
    }

    fn transform(&self, fft: &dyn Fft<f64>, buf: &mut [Complex64]) {
        let n = self.side;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // rows, then columns through a transpose
        fft.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        fft.process_with_scratch(buf, &mut scratch);
        transpose_square(buf, n);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }

    /// Unitary forward transform of a `side * side` buffer, in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check_len(buf.len())?;
        self.transform(self.forward.as_ref(), buf);
        Ok(())
    }

    /// Unitary inverse transform of a `side * side` buffer, in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check_len(buf.len())?;
        self.transform(self.inverse.as_ref(), buf);
        Ok(())
    }

    pub fn dft2(&self, grid: &Image) -> Result<Spectrum> {
        let mut spec = Spectrum::from(grid);
        self.forward_in_place(spec.data_mut())?;
        Ok(spec)
    }

    pub fn dft2_complex(&self, spec: &Spectrum) -> Result<Spectrum> {
        let mut out = spec.clone();
        self.forward_in_place(out.data_mut())?;
        Ok(out)
    }

    pub fn idft2(&self, spec: &Spectrum) -> Result<Spectrum> {
        let mut out = spec.clone();
        self.inverse_in_place(out.data_mut())?;
        Ok(out)
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// Unitary forward DFT of a real grid.
pub fn dft2(grid: &Image) -> Result<Spectrum> {
    FftPlan::cached(grid.side())?.dft2(grid)
}

/// Unitary inverse DFT.
pub fn idft2(spec: &Spectrum) -> Result<Spectrum> {
    FftPlan::cached(spec.side())?.idft2(spec)
}

/// Copies `img` into the top-left corner of a zero grid of side `s * d`.
pub fn embed(img: &Image, oversampling: Oversampling) -> Image {
    let d = img.side();
    let big = d * oversampling.factor();
    if big == d {
        return img.clone();
    }
    let mut out = vec![0.0; big * big];
    for (r, row) in img.data().chunks_exact(d).enumerate() {
        out[r * big..r * big + d].copy_from_slice(row);
    }
    Image::from_raw(big, out)
}

/// Top-left `d x d` block of `grid`.
pub fn extract(grid: &Image, d: usize) -> Result<Image> {
    let big = grid.side();
    if d == 0 || !big.is_multiple_of(d) {
        return Err(Error::invalid(format!(
            "cannot extract a {d}x{d} block from a {big}x{big} grid"
        )));
    }
    let mut out = Vec::with_capacity(d * d);
    for r in 0..d {
        out.extend_from_slice(&grid.data()[r * big..r * big + d]);
    }
    Ok(Image::from_raw(d, out))
}
