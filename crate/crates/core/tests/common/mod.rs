//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use refphase::{Image, Rng};

/// Unitary 2D DFT by the direct double sum, O(D^4).
pub fn naive_dft2(data: &[Complex64], d: usize, inverse: bool) -> Vec<Complex64> {
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for k in 0..d {
        for l in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..d {
                for n in 0..d {
                    // reduce the phase index first to keep the angle small
                    let idx = ((k * m + l * n) % d) as f64;
                    acc += data[m * d + n]
                        * Complex64::from_polar(1.0, sign * 2.0 * PI * idx / d as f64);
                }
            }
            out[k * d + l] = acc / d as f64;
        }
    }
    out
}

pub fn real_to_complex(data: &[f64]) -> Vec<Complex64> {
    data.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn max_abs(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn uniform_image(d: usize, rng: &mut Rng) -> Image {
    Image::from_vec(d, (0..d * d).map(|_| rng.uniform()).collect()).unwrap()
}

/// Uniform in `[lo, hi)`, away from the box constraints.
pub fn interior_image(d: usize, lo: f64, hi: f64, rng: &mut Rng) -> Image {
    Image::from_vec(
        d,
        (0..d * d).map(|_| lo + (hi - lo) * rng.uniform()).collect(),
    )
    .unwrap()
}

pub fn complex_grid(d: usize, rng: &mut Rng) -> Vec<Complex64> {
    (0..d * d)
        .map(|_| Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5))
        .collect()
}

/// The vendored 1000-image MNIST subset.
pub fn mnist_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-1k-images-idx3-ubyte.gz")
}
