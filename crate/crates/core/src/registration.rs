//! Alignment over the trivial ambiguities of Fourier magnitudes: circular
//! translations and the 180 degree flip.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fourier::FftPlan;
use crate::image::{mse, Image};

/// Circular shift: `out[(i + r) mod d][(j + c) mod d] = img[i][j]`.
pub fn shift(img: &Image, r: isize, c: isize) -> Image {
    let d = img.side();
    let r = r.rem_euclid(d as isize) as usize;
    let c = c.rem_euclid(d as isize) as usize;
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        let oi = (i + r) % d;
        for j in 0..d {
            out[oi * d + (j + c) % d] = img.get(i, j);
        }
    }
    Image::from_raw(d, out)
}

/// `out[i][j] = img[(-i) mod d][(-j) mod d]`.
pub fn flip180(img: &Image) -> Image {
    let d = img.side();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = img.get((d - i) % d, (d - j) % d);
        }
    }
    Image::from_raw(d, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Identity,
    Flip,
}

/// `aligned = shift(orient(recon), row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transform {
    pub orientation: Orientation,
    pub row: usize,
    pub col: usize,
}

impl Transform {
    pub fn apply(&self, img: &Image) -> Image {
        let oriented = match self.orientation {
            Orientation::Identity => img.clone(),
            Orientation::Flip => flip180(img),
        };
        shift(&oriented, self.row as isize, self.col as isize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub aligned: Image,
    pub transform: Transform,
    pub mse: f64,
}

/// Circular cross-correlation `cc[a][b] = sum_ij o[i - a][j - b] * t[i][j]`
/// through the unitary FFT.
fn cross_correlation(plan: &FftPlan, oriented: &Image, target: &Image) -> Result<Vec<f64>> {
    let fo = plan.dft2(oriented)?;
    let mut prod = plan.dft2(target)?;
    for (t, o) in prod.data_mut().iter_mut().zip(fo.data()) {
        *t *= o.conj();
    }
    let cc = plan.idft2(&prod)?;
    let scale = plan.side() as f64;
    Ok(cc.data().iter().map(|z: &Complex64| z.re * scale).collect())
}

/// Finds the orientation and circular shift of `recon` closest to `target`
/// in MSE.
///
/// For each orientation the correlation peak is located by FFT; every shift
/// whose correlation is within rounding of the peak is then scored with a
/// direct MSE so that near-ties resolve on exact values. Remaining ties go
/// to the smallest `(orientation, row, col)` with identity before flip.
pub fn register(recon: &Image, target: &Image) -> Result<Registration> {
    target.check_side(recon.side())?;
    let d = recon.side();
    let plan = FftPlan::cached(d)?;
    let norm_t: f64 = target.data().iter().map(|v| v * v).sum();

    let mut best: Option<Registration> = None;
    for orientation in [Orientation::Identity, Orientation::Flip] {
        let oriented = match orientation {
            Orientation::Identity => recon.clone(),
            Orientation::Flip => flip180(recon),
        };
        let norm_o: f64 = oriented.data().iter().map(|v| v * v).sum();
        let cc = cross_correlation(&plan, &oriented, target)?;
        let peak = cc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tolerance = 1e-9 * (norm_o + norm_t).max(1e-300);
        for (k, _) in cc
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= peak - tolerance)
        {
            let transform = Transform {
                orientation,
                row: k / d,
                col: k % d,
            };
            let aligned = transform.apply(recon);
            let err = mse(&aligned, target)?;
            if best.as_ref().is_none_or(|b| err < b.mse) {
                best = Some(Registration {
                    aligned,
                    transform,
                    mse: err,
                });
            }
        }
    }
    Ok(best.expect("at least one candidate per orientation"))
}
