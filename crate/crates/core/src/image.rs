//! Square grids: real images, complex spectra and magnitude measurements.
//!
//! All grids are row-major with the origin at the top-left; pixel `(r, c)`
//! lives at `data[r * side + c]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A square grid of real values.
///
/// Signals and references carry intensities in `[0, 1]`; solver
/// intermediates use the same type without that restriction. Construction
/// only guarantees finiteness and a consistent shape; use
/// [`Image::check_unit_range`] where the `[0, 1]` contract matters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    side: usize,
    data: Vec<f64>,
}

impl Image {
    /// Constant image. `fill` must lie in `[0, 1]`.
    pub fn new(side: usize, fill: f64) -> Result<Self> {
        if side == 0 {
            return Err(Error::invalid("image side must be at least 1"));
        }
        if !(0.0..=1.0).contains(&fill) {
            return Err(Error::invalid(format!("fill {fill} outside [0, 1]")));
        }
        Ok(Image {
            side,
            data: vec![fill; side * side],
        })
    }

    pub fn zeros(side: usize) -> Self {
        Image {
            side,
            data: vec![0.0; side * side],
        }
    }

    pub fn from_vec(side: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::invalid("image side must be at least 1"));
        }
        if data.len() != side * side {
            return Err(Error::invalid(format!(
                "{} values do not form a {side}x{side} grid",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "image data",
            });
        }
        Ok(Image { side, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(Error::invalid("rows do not form a square grid"));
        }
        Image::from_vec(side, rows.concat())
    }

    /// Trusted constructor for internal hot paths.
    pub(crate) fn from_raw(side: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), side * side);
        Image { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.side + col] = value;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_unit_range(&self, context: &'static str) -> Result<()> {
        match self.data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            Some(index) => Err(Error::OutOfRange {
                index,
                value: self.data[index],
                context,
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn check_side(&self, expected: usize) -> Result<()> {
        if self.side != expected {
            return Err(Error::SizeMismatch {
                expected,
                actual: self.side,
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(self.side, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        other.check_side(self.side)?;
        Ok(Image::from_raw(
            self.side,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }
}

/// Projects every entry onto `[0, 1]`.
pub fn clip01(img: &Image) -> Result<Image> {
    if let Some(index) = img.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            context: "clip01 input",
        });
    }
    Ok(img.map(|v| v.clamp(0.0, 1.0)))
}

/// Mean squared error over all pixels.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    b.check_side(a.side)?;
    let total: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(total / a.len() as f64)
}

/// A square grid of complex values, typically a Fourier spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    side: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(side: usize) -> Self {
        Spectrum {
            side,
            data: vec![Complex64::new(0.0, 0.0); side * side],
        }
    }

    pub fn from_vec(side: usize, data: Vec<Complex64>) -> Result<Self> {
        if side == 0 || data.len() != side * side {
            return Err(Error::invalid(format!(
                "{} values do not form a {side}x{side} grid",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "spectrum data",
            });
        }
        Ok(Spectrum { side, data })
    }

    pub(crate) fn from_raw(side: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), side * side);
        Spectrum { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.side + col]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm()).collect()
    }

    /// Real parts as an image.
    pub fn real(&self) -> Image {
        Image::from_raw(self.side, self.data.iter().map(|z| z.re).collect())
    }
}

impl From<&Image> for Spectrum {
    fn from(img: &Image) -> Self {
        Spectrum::from_raw(
            img.side(),
            img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

/// Oversampling factor per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Oversampling {
    None,
    Double,
}

impl TryFrom<usize> for Oversampling {
    type Error = Error;

    fn try_from(s: usize) -> Result<Self> {
        Oversampling::from_factor(s)
    }
}

impl From<Oversampling> for usize {
    fn from(s: Oversampling) -> usize {
        s.factor()
    }
}

impl Oversampling {
    pub fn factor(self) -> usize {
        match self {
            Oversampling::None => 1,
            Oversampling::Double => 2,
        }
    }

    pub fn from_factor(s: usize) -> Result<Self> {
        match s {
            1 => Ok(Oversampling::None),
            2 => Ok(Oversampling::Double),
            _ => Err(Error::invalid(format!(
                "oversampling must be 1 or 2, got {s}"
            ))),
        }
    }
}

impl std::fmt::Display for Oversampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.factor())
    }
}

/// Fourier magnitudes on a `D x D` grid with `D = s * d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    side: usize,
    oversampling: Oversampling,
    data: Vec<f64>,
}

impl Measurement {
    pub fn new(side: usize, oversampling: Oversampling, data: Vec<f64>) -> Result<Self> {
        if side == 0 || data.len() != side * side {
            return Err(Error::invalid(format!(
                "{} values do not form a {side}x{side} measurement",
                data.len()
            )));
        }
        if !side.is_multiple_of(oversampling.factor()) {
            return Err(Error::invalid(format!(
                "measurement side {side} not divisible by oversampling {oversampling}"
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Format(format!(
                "measurement entry {index} is {} (must be finite and >= 0)",
                data[index]
            )));
        }
        Ok(Measurement {
            side,
            oversampling,
            data,
        })
    }

    pub(crate) fn from_raw(side: usize, oversampling: Oversampling, data: Vec<f64>) -> Self {
        Measurement {
            side,
            oversampling,
            data,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn oversampling(&self) -> Oversampling {
        self.oversampling
    }

    /// Side `d` of the images this measurement belongs to.
    pub fn image_side(&self) -> usize {
        self.side / self.oversampling.factor()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}
