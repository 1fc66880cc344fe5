//! Command-line arguments. Every option is optional at parse time so that a
//! JSON config section can fill in whatever the command line leaves unset;
//! built-in defaults apply last.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "refphase",
    version,
    about = "Fourier phase retrieval with a known reference"
)]
pub struct Cli {
    /// JSON file whose sections (`measure`, `make_ref`, `reconstruct`,
    /// `train_ref`, `evaluate`, `gradcheck`) mirror the command flags. Without
    /// a subcommand every section present is run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Log progress at debug level.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Record the Fourier magnitudes of an image plus reference.
    Measure(MeasureArgs),
    /// Generate a baseline reference image.
    MakeRef(MakeRefArgs),
    /// Reconstruct an image from a measurement file.
    Reconstruct(ReconstructArgs),
    /// Learn a reference by unrolled GS training.
    TrainRef(TrainRefArgs),
    /// Compare references on a test set.
    Evaluate(EvaluateArgs),
    /// Check reference gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MeasureArgs {
    /// PGM image, or IDX dataset together with --index.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Item of an IDX dataset [default: 0].
    #[arg(long)]
    pub index: Option<usize>,
    /// Reference as PGM or checkpoint JSON, or `none` [default: none].
    #[arg(long)]
    pub reference: Option<String>,
    /// Oversampling factor, 1 or 2 [default: 2].
    #[arg(long)]
    pub oversample: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, Args, Serialize, Deserialize)]
pub struct SimpleArgs {
    /// Simple reference: side of the corner square [default: ceil(d/2)].
    #[arg(long)]
    pub square_side: Option<usize>,
    /// Simple reference: Gaussian blur width in pixels [default: d/10].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Simple reference: weight of the Poisson noise [default: 0.3].
    #[arg(long)]
    pub noise_weight: Option<f64>,
    /// Simple reference: Poisson rate [default: 1].
    #[arg(long)]
    pub poisson_rate: Option<f64>,
    /// Simple reference: binarization threshold [default: 0.5].
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MakeRefArgs {
    /// random, binary or simple.
    #[arg(long)]
    pub kind: Option<String>,
    /// Image side [default: 28].
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub simple: SimpleArgs,
    /// Output PGM (or PNG when the name ends in .png).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ReconstructArgs {
    /// Measurement file written by `measure`.
    #[arg(long)]
    pub measurement: Option<PathBuf>,
    /// Reference used for the measurement, or `none` [default: none].
    #[arg(long)]
    pub reference: Option<String>,
    /// gs or gd [default: gs].
    #[arg(long)]
    pub solver: Option<String>,
    /// Solver iterations [default: 500].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Step size of the gd solver [default: 1.95].
    #[arg(long)]
    pub gd_step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Ground truth (PGM); when given the registered MSE is reported and
    /// the output is registered against it.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TrainRefArgs {
    /// IDX dataset (optionally gzipped) or directory of PGM files.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Leading dataset items to skip [default: 0].
    #[arg(long)]
    pub skip: Option<usize>,
    /// Images used, training and validation together [default: 100].
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Unrolled GS iterations [default: 15].
    #[arg(long)]
    pub unroll: Option<usize>,
    /// Batch size [default: 10].
    #[arg(long)]
    pub batch: Option<usize>,
    /// Adam learning rate [default: 0.01].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Adam updates [default: 1000].
    #[arg(long)]
    pub max_batches: Option<usize>,
    /// Updates between validations [default: 5].
    #[arg(long)]
    pub validate_every: Option<usize>,
    /// Stop after this many validations without improvement [default: off].
    #[arg(long)]
    pub patience: Option<usize>,
    /// Fraction of the images held out for validation [default: 0.1].
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Oversampling factor, 1 or 2 [default: 2].
    #[arg(long)]
    pub oversample: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    /// IDX dataset (optionally gzipped) or directory of PGM files.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Leading dataset items to skip, e.g. the training images [default: 0].
    #[arg(long)]
    pub skip: Option<usize>,
    /// Test images [default: 1000].
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Comma list of none, random, binary, simple, learned:<path>
    /// [default: none,simple].
    #[arg(long)]
    pub methods: Option<String>,
    /// gs or gd [default: gs].
    #[arg(long)]
    pub solver: Option<String>,
    /// Solver iterations [default: 500].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Step size of the gd solver [default: 1.95].
    #[arg(long)]
    pub gd_step: Option<f64>,
    /// 1, 2 or both [default: both].
    #[arg(long)]
    pub oversample: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores [default: 0].
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub simple: SimpleArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GradcheckArgs {
    /// Random instances [default: 50].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma list of image sides [default: 4,6,8].
    #[arg(long)]
    pub sizes: Option<String>,
    /// Comma list of unroll depths [default: 1,2,3,5].
    #[arg(long)]
    pub unrolls: Option<String>,
    /// 1, 2 or both [default: both].
    #[arg(long)]
    pub oversample: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Check a deliberately broken gradient (detector test).
    #[arg(long, hide = true)]
    #[serde(skip)]
    pub corrupt_vjp: bool,
}

/// Fills the unset fields of `self` from `base`.
pub trait Overlay {
    fn overlay(self, base: Self) -> Self;
}

macro_rules! overlay {
    ($ty:ident { $($field:ident),* } $(keep { $($kept:ident),* })?) => {
        impl Overlay for $ty {
            fn overlay(self, base: Self) -> Self {
                $ty {
                    $($field: self.$field.or(base.$field),)*
                    $($($kept: self.$kept,)*)?
                }
            }
        }
    };
}

overlay!(MeasureArgs {
    image,
    index,
    reference,
    oversample,
    out
});
overlay!(SimpleArgs {
    square_side,
    sigma,
    noise_weight,
    poisson_rate,
    threshold
});
overlay!(ReconstructArgs {
    measurement,
    reference,
    solver,
    steps,
    gd_step,
    seed,
    truth,
    out
});
overlay!(TrainRefArgs {
    data,
    skip,
    n_train,
    unroll,
    batch,
    lr,
    max_batches,
    validate_every,
    patience,
    validation_fraction,
    oversample,
    seed,
    out
});
overlay!(GradcheckArgs { trials, sizes, unrolls, oversample, seed } keep { corrupt_vjp });

impl Overlay for MakeRefArgs {
    fn overlay(self, base: Self) -> Self {
        MakeRefArgs {
            kind: self.kind.or(base.kind),
            size: self.size.or(base.size),
            seed: self.seed.or(base.seed),
            simple: self.simple.overlay(base.simple),
            out: self.out.or(base.out),
        }
    }
}

impl Overlay for EvaluateArgs {
    fn overlay(self, base: Self) -> Self {
        EvaluateArgs {
            data: self.data.or(base.data),
            skip: self.skip.or(base.skip),
            n_test: self.n_test.or(base.n_test),
            methods: self.methods.or(base.methods),
            solver: self.solver.or(base.solver),
            steps: self.steps.or(base.steps),
            gd_step: self.gd_step.or(base.gd_step),
            oversample: self.oversample.or(base.oversample),
            seed: self.seed.or(base.seed),
            jobs: self.jobs.or(base.jobs),
            simple: self.simple.overlay(base.simple),
            out_dir: self.out_dir.or(base.out_dir),
        }
    }
}
