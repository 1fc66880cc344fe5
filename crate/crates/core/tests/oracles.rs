//! Library results checked against independent, deliberately naive
//! implementations.

mod common;

use std::io::Read;

use common::{complex_grid, max_abs, mnist_path, naive_dft2, real_to_complex, uniform_image};
use num_complex::Complex64;
use proptest::prelude::*;
use refphase::dataio::read_idx_images;
use refphase::reconstruct::{amplitude_loss_and_grad, DEFAULT_EPSILON};
use refphase::registration::Orientation;
use refphase::{
    dft2, gs_step, idft2, measure, register, GsConfig, Image, Oversampling, Rng, Spectrum,
};

fn padded(x: &Image, u: Option<&Image>, s: usize) -> (usize, Vec<Complex64>) {
    let d = x.side();
    let big = d * s;
    let mut grid = vec![Complex64::new(0.0, 0.0); big * big];
    for r in 0..d {
        for c in 0..d {
            grid[r * big + c].re = x.get(r, c) + u.map_or(0.0, |u| u.get(r, c));
        }
    }
    (big, grid)
}

#[test]
fn dft_matches_double_sum() {
    let mut rng = Rng::new(11);
    for d in [1, 2, 3, 5, 8, 12, 16] {
        let x = uniform_image(d, &mut rng);
        let ours = dft2(&x).unwrap();
        assert!(
            max_abs(
                ours.data(),
                &naive_dft2(&real_to_complex(x.data()), d, false)
            ) < 1e-12
        );
        let a = complex_grid(d, &mut rng);
        let back = idft2(&Spectrum::from_vec(d, a.clone()).unwrap()).unwrap();
        assert!(max_abs(back.data(), &naive_dft2(&a, d, true)) < 1e-12);
    }
}

#[test]
fn measurement_matches_double_sum() {
    let mut rng = Rng::new(12);
    for (d, s) in [
        (5, Oversampling::None),
        (5, Oversampling::Double),
        (8, Oversampling::Double),
    ] {
        let x = uniform_image(d, &mut rng);
        let u = uniform_image(d, &mut rng);
        let (big, grid) = padded(&x, Some(&u), s.factor());
        let expected: Vec<f64> = naive_dft2(&grid, big, false)
            .iter()
            .map(|z| z.norm())
            .collect();
        let y = measure(&x, Some(&u), s).unwrap();
        let worst = y
            .data()
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "d={d} s={s}: {worst:e}");
    }
}

/// One GS iteration written out with the double-sum DFT.
fn naive_gs_step(x: &Image, u: &Image, y: &[f64], s: usize) -> Vec<f64> {
    let d = x.side();
    let (big, grid) = padded(x, Some(u), s);
    let z = naive_dft2(&grid, big, false);
    let projected: Vec<Complex64> = z
        .iter()
        .zip(y)
        .map(|(z, &m)| z / z.norm().max(DEFAULT_EPSILON) * m)
        .collect();
    let w = naive_dft2(&projected, big, true);
    (0..d * d)
        .map(|i| (w[(i / d) * big + i % d].re - u.data()[i]).max(0.0))
        .collect()
}

#[test]
fn gs_step_matches_transcription() {
    let mut rng = Rng::new(13);
    for (d, s) in [
        (4, Oversampling::None),
        (6, Oversampling::Double),
        (7, Oversampling::Double),
    ] {
        let truth = uniform_image(d, &mut rng);
        let u = uniform_image(d, &mut rng);
        let y = measure(&truth, Some(&u), s).unwrap();
        let cfg = GsConfig {
            oversampling: s,
            ..GsConfig::default()
        };
        for x0 in [Image::zeros(d), uniform_image(d, &mut rng)] {
            let ours = gs_step(&x0, Some(&u), &y, &cfg).unwrap();
            let expected = naive_gs_step(&x0, &u, y.data(), s.factor());
            let worst = ours
                .data()
                .iter()
                .zip(&expected)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12, "d={d} s={s}: {worst:e}");
        }
    }
}

fn naive_transform(img: &Image, flip: bool, dr: usize, dc: usize) -> Image {
    let d = img.side();
    let mut out = Image::zeros(d);
    for r in 0..d {
        for c in 0..d {
            let (sr, sc) = if flip {
                ((d - r) % d, (d - c) % d)
            } else {
                (r, c)
            };
            out.set((r + dr) % d, (c + dc) % d, img.get(sr, sc));
        }
    }
    out
}

fn naive_mse(a: &Image, b: &Image) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64
}

#[test]
fn registration_agrees_with_exhaustive_search() {
    let mut rng = Rng::new(14);
    let d = 8;
    for _ in 0..20 {
        let target = uniform_image(d, &mut rng);
        let flip = rng.bernoulli(0.5);
        let (dr, dc) = (rng.below(d), rng.below(d));
        let mut noisy = naive_transform(&target, flip, dr, dc);
        for v in noisy.data_mut() {
            *v = (*v + 0.2 * (rng.uniform() - 0.5)).clamp(0.0, 1.0);
        }

        let mut best = (f64::INFINITY, false, 0, 0);
        for f in [false, true] {
            for r in 0..d {
                for c in 0..d {
                    let e = naive_mse(&naive_transform(&noisy, f, r, c), &target);
                    if e < best.0 {
                        best = (e, f, r, c);
                    }
                }
            }
        }
        let reg = register(&noisy, &target).unwrap();
        assert!(
            (reg.mse - best.0).abs() < 1e-14,
            "{} vs {}",
            reg.mse,
            best.0
        );
        let flipped = reg.transform.orientation == Orientation::Flip;
        assert_eq!(
            (flipped, reg.transform.row, reg.transform.col),
            (best.1, best.2, best.3)
        );
    }
}

/// Second IDX decoder, independent of the library's.
fn decode_idx(path: &std::path::Path) -> (usize, usize, Vec<Vec<u8>>) {
    let mut raw = Vec::new();
    flate2::read::GzDecoder::new(std::fs::File::open(path).unwrap())
        .read_to_end(&mut raw)
        .unwrap();
    assert_eq!(&raw[..4], &[0, 0, 8, 3]);
    let be = |o: usize| u32::from_be_bytes([raw[o], raw[o + 1], raw[o + 2], raw[o + 3]]) as usize;
    let (n, rows, cols) = (be(4), be(8), be(12));
    let items = raw[16..].chunks(rows * cols).map(<[u8]>::to_vec).collect();
    (n, rows, items)
}

#[test]
fn idx_loader_agrees_with_second_decoder() {
    let path = mnist_path();
    let (n, side, items) = decode_idx(&path);
    let ours = read_idx_images(&path).unwrap();
    assert_eq!(ours.count, n);
    assert_eq!(ours.rows, side);
    assert_eq!(ours.items.len(), items.len());
    for (img, raw) in ours.items.iter().zip(&items) {
        for (v, &b) in img.data().iter().zip(raw) {
            assert_eq!(*v, b as f64 / 255.0);
        }
    }
}

#[test]
fn amplitude_gradient_matches_finite_differences() {
    let h = 1e-6;
    for seed in 0..50u64 {
        let mut rng = Rng::new(1000 + seed);
        let d = 3 + (seed as usize % 4);
        let s = if seed % 2 == 0 {
            Oversampling::Double
        } else {
            Oversampling::None
        };
        let truth = uniform_image(d, &mut rng);
        let u = uniform_image(d, &mut rng);
        let x = uniform_image(d, &mut rng);
        let y = measure(&truth, Some(&u), s).unwrap();
        let (_, grad) = amplitude_loss_and_grad(&x, Some(&u), &y, DEFAULT_EPSILON).unwrap();
        for i in 0..d * d {
            let mut plus = x.clone();
            plus.data_mut()[i] += h;
            let mut minus = x.clone();
            minus.data_mut()[i] -= h;
            let fp = amplitude_loss_and_grad(&plus, Some(&u), &y, DEFAULT_EPSILON)
                .unwrap()
                .0;
            let fm = amplitude_loss_and_grad(&minus, Some(&u), &y, DEFAULT_EPSILON)
                .unwrap()
                .0;
            let fd = (fp - fm) / (2.0 * h);
            let a = grad.data()[i];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-5, "seed {seed} pixel {i}: analytic {a} fd {fd}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_is_linear(seed in any::<u64>(), d in 1usize..10, alpha in -2.0f64..2.0) {
        let mut rng = Rng::new(seed);
        let a = complex_grid(d, &mut rng);
        let b = complex_grid(d, &mut rng);
        let combo: Vec<Complex64> = a.iter().zip(&b).map(|(p, q)| p * alpha + q).collect();
        let f = |v: &[Complex64]| {
            refphase::fourier::FftPlan::new(d).unwrap()
                .dft2_complex(&Spectrum::from_vec(d, v.to_vec()).unwrap()).unwrap().into_vec()
        };
        let (fa, fb, fc) = (f(&a), f(&b), f(&combo));
        let expected: Vec<Complex64> = fa.iter().zip(&fb).map(|(p, q)| p * alpha + q).collect();
        prop_assert!(max_abs(&fc, &expected) < 1e-10);
    }

    #[test]
    fn round_trip_is_identity(seed in any::<u64>(), d in 1usize..20) {
        let mut rng = Rng::new(seed);
        let x = uniform_image(d, &mut rng);
        let back = idft2(&dft2(&x).unwrap()).unwrap();
        prop_assert!(max_abs(back.data(), &real_to_complex(x.data())) < 1e-12);
    }

    #[test]
    fn registered_mse_never_exceeds_raw(seed in any::<u64>(), d in 2usize..9) {
        let mut rng = Rng::new(seed);
        let a = uniform_image(d, &mut rng);
        let b = uniform_image(d, &mut rng);
        prop_assert!(register(&a, &b).unwrap().mse <= naive_mse(&a, &b) + 1e-15);
    }
}
