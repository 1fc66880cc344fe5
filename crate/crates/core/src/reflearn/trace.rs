use crate::error::{Error, Result};
use crate::fourier::FftPlan;
use crate::image::{Image, Measurement};
use crate::reconstruct::{check_compatible, gs_iteration, GsIntermediates, DEFAULT_EPSILON};

/// Everything the reverse pass needs from an unrolled GS run.
#[derive(Debug, Clone, PartialEq)]
pub struct UnrollTrace {
    pub x0: Image,
    pub reference: Image,
    pub measurement: Measurement,
    pub epsilon: f64,
    /// Entry `k` holds the intermediates that produced `x_{k+1}`.
    pub steps: Vec<GsIntermediates>,
}

impl UnrollTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `x_n` rebuilt from the stored pre-activations.
    pub fn final_iterate(&self) -> Image {
        match self.steps.last() {
            Some(step) => Image::from_raw(
                self.x0.side(),
                step.pre_activation.iter().map(|&v| v.max(0.0)).collect(),
            ),
            None => self.x0.clone(),
        }
    }

    /// Re-runs the forward pass from the stored inputs and checks every
    /// recorded intermediate bit for bit.
    pub fn replay(&self) -> Result<Image> {
        let (x, again) = unrolled_forward_eps(
            &self.x0,
            &self.reference,
            &self.measurement,
            self.steps.len(),
            self.epsilon,
        )?;
        if again.steps != self.steps {
            return Err(Error::Format(
                "trace replay diverged from the record".into(),
            ));
        }
        Ok(x)
    }
}

/// `n` GS iterations from `x0`, recording the intermediates.
pub fn unrolled_forward(
    x0: &Image,
    u: &Image,
    y: &Measurement,
    n: usize,
) -> Result<(Image, UnrollTrace)> {
    unrolled_forward_eps(x0, u, y, n, DEFAULT_EPSILON)
}

pub fn unrolled_forward_eps(
    x0: &Image,
    u: &Image,
    y: &Measurement,
    n: usize,
    epsilon: f64,
) -> Result<(Image, UnrollTrace)> {
    check_compatible(x0, Some(u), y, y.oversampling())?;
    let plan = FftPlan::cached(y.side())?;
    let d = x0.side();
    let mut x = x0.data().to_vec();
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        let (next, record) = gs_iteration(&plan, &x, Some(u.data()), y.data(), d, epsilon, true)?;
        steps.push(record.expect("recording requested"));
        x = next;
    }
    let trace = UnrollTrace {
        x0: x0.clone(),
        reference: u.clone(),
        measurement: y.clone(),
        epsilon,
        steps,
    };
    Ok((Image::from_raw(d, x), trace))
}
