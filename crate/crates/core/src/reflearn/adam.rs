use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{clip01, Image};

/// Adam moments for a `side x side` reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub side: usize,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(side: usize, learning_rate: f64) -> Self {
        AdamState {
            side,
            m: vec![0.0; side * side],
            v: vec![0.0; side * side],
            t: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One bias-corrected Adam update followed by projection onto `[0, 1]`.
    pub fn step(&mut self, u: &Image, grad: &Image) -> Result<Image> {
        u.check_side(self.side)?;
        grad.check_side(self.side)?;
        if let Some(index) = grad.data().iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                index,
                context: "Adam gradient",
            });
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let mut next = u.data().to_vec();
        for (i, &g) in grad.data().iter().enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            next[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        clip01(&Image::from_vec(self.side, next)?)
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, u: &Image, grad: &Image) -> Result<(AdamState, Image)> {
    let mut next = state.clone();
    let u = next.step(u, grad)?;
    Ok((next, u))
}
