//! Fixtures shared by the benchmarks.

use refphase::{measure, Image, Measurement, Oversampling, Rng};

/// A seeded problem instance: image, reference and their measurement.
pub struct Fixture {
    pub x: Image,
    pub u: Image,
    pub y: Measurement,
}

pub fn uniform(d: usize, rng: &mut Rng) -> Image {
    Image::from_vec(d, (0..d * d).map(|_| rng.uniform()).collect()).expect("values in [0, 1)")
}

pub fn fixture(d: usize, s: Oversampling, seed: u64) -> Fixture {
    let mut rng = Rng::new(seed);
    let x = uniform(d, &mut rng);
    let u = uniform(d, &mut rng);
    let y = measure(&x, Some(&u), s).expect("consistent fixture");
    Fixture { x, u, y }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_consistent() {
        let f = fixture(6, Oversampling::Double, 1);
        assert_eq!(f.y.side(), 12);
        assert_eq!(refphase::residual(&f.x, Some(&f.u), &f.y).unwrap(), 0.0);
    }
}
