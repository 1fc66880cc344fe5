//! Forward model: Fourier magnitudes of an image with a known reference
//! added before the transform.

use num_complex::Complex64;

use crate::error::Result;
use crate::fourier::FftPlan;
use crate::image::{Image, Measurement, Oversampling, Spectrum};

/// `F(embed(x + u, s))`, with `u = None` meaning no reference.
pub fn forward_spectrum(x: &Image, u: Option<&Image>, s: Oversampling) -> Result<Spectrum> {
    let d = x.side();
    if let Some(u) = u {
        u.check_side(d)?;
    }
    let big = d * s.factor();
    let plan = FftPlan::cached(big)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); big * big];
    for r in 0..d {
        for c in 0..d {
            let v = x.get(r, c) + u.map_or(0.0, |u| u.get(r, c));
            buf[r * big + c] = Complex64::new(v, 0.0);
        }
    }
    plan.forward_in_place(&mut buf)?;
    Ok(Spectrum::from_raw(big, buf))
}

/// Magnitude measurement `|F(embed(x + u, s))|`.
///
/// Both `x` and `u` must hold intensities in `[0, 1]`.
pub fn measure(x: &Image, u: Option<&Image>, s: Oversampling) -> Result<Measurement> {
    x.check_unit_range("measured image")?;
    if let Some(u) = u {
        u.check_side(x.side())?;
        u.check_unit_range("reference")?;
    }
    let z = forward_spectrum(x, u, s)?;
    Ok(Measurement::from_raw(z.side(), s, z.magnitudes()))
}

/// Mean squared deviation between the magnitudes produced by `x` and `y`.
pub fn residual(x: &Image, u: Option<&Image>, y: &Measurement) -> Result<f64> {
    x.check_side(y.image_side())?;
    let z = forward_spectrum(x, u, y.oversampling())?;
    Ok(magnitude_residual(z.data(), y.data()))
}

pub(crate) fn magnitude_residual(z: &[Complex64], y: &[f64]) -> f64 {
    let total: f64 = z
        .iter()
        .zip(y)
        .map(|(z, &y)| {
            let diff = z.norm() - y;
            diff * diff
        })
        .sum();
    total / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::mse;
    use crate::registration::shift;
    use crate::rng::Rng;

    fn random_image(side: usize, seed: u64) -> Image {
        let mut rng = Rng::new(seed);
        Image::from_vec(side, (0..side * side).map(|_| rng.uniform()).collect()).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_measurement() {
        let zero = Image::zeros(4);
        let y = measure(&zero, Some(&zero), Oversampling::Double).unwrap();
        assert_eq!(y.side(), 8);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_gives_flat_magnitude() {
        let x = Image::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
        let y = measure(&x, None, Oversampling::None).unwrap();
        for v in y.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn side_and_range_checks() {
        let x = Image::zeros(4);
        assert!(measure(&x, Some(&Image::zeros(3)), Oversampling::None).is_err());
        let bright = Image::from_vec(1, vec![1.5]).unwrap();
        assert!(measure(&bright, None, Oversampling::None).is_err());
        let y = measure(&x, None, Oversampling::Double).unwrap();
        assert!(residual(&Image::zeros(3), None, &y).is_err());
    }

    #[test]
    fn residual_examples() {
        let x = random_image(5, 1);
        let u = random_image(5, 2);
        for s in [Oversampling::None, Oversampling::Double] {
            let y = measure(&x, Some(&u), s).unwrap();
            assert!(residual(&x, Some(&u), &y).unwrap() < 1e-28);

            let zero = Image::zeros(5);
            let expected = y.data().iter().map(|v| v * v).sum::<f64>() / y.data().len() as f64;
            let got = residual(&zero, None, &y).unwrap();
            assert!((got - expected).abs() < 1e-14 * expected.max(1.0));
        }
    }

    #[test]
    fn residual_matches_measure_then_mse() {
        let x = random_image(6, 3);
        let u = random_image(6, 4);
        let other = random_image(6, 5);
        let y = measure(&x, Some(&u), Oversampling::Double).unwrap();
        let y_other = measure(&other, Some(&u), Oversampling::Double).unwrap();
        let a = Image::from_vec(12, y.data().to_vec()).unwrap();
        let b = Image::from_vec(12, y_other.data().to_vec()).unwrap();
        let expected = mse(&a, &b).unwrap();
        let got = residual(&other, Some(&u), &y).unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn translation_invariance_without_reference() {
        let x = random_image(6, 7);
        let base = measure(&x, None, Oversampling::None).unwrap();
        for (r, c) in [(1, 0), (0, 3), (4, 5)] {
            let shifted = measure(&shift(&x, r, c), None, Oversampling::None).unwrap();
            let err = base
                .data()
                .iter()
                .zip(shifted.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn reference_breaks_translation_invariance() {
        let x = random_image(6, 8);
        let u = random_image(6, 9);
        let base = measure(&x, Some(&u), Oversampling::None).unwrap();
        let shifted = measure(&shift(&x, 2, 1), Some(&u), Oversampling::None).unwrap();
        let diff = base
            .data()
            .iter()
            .zip(shifted.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff > 1e-6);
    }
}
