//! Evaluation protocol: measure every test image with a given reference,
//! reconstruct, register against the ground truth and average the MSE.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{read_pgm, Checkpoint, MetricRecord};
use crate::error::{Error, Result};
use crate::image::{Image, Oversampling};
use crate::measurement::measure;
use crate::reconstruct::{
    gd_run, gs_run, GdConfig, GsConfig, InitMode, DEFAULT_EPSILON, DEFAULT_GD_STEP,
};
use crate::references::{
    random_binary_reference, random_reference, simple_reference, SimpleRefParams,
};
use crate::registration::register;
use crate::rng::{derive_seed, label, Rng};

/// A reference strategy as named on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodSpec {
    NoReference,
    Random,
    Binary,
    Simple,
    /// A trained reference: a checkpoint (`.json`) or an image (`.pgm`).
    Learned(PathBuf),
}

impl MethodSpec {
    pub fn parse(token: &str) -> Result<Self> {
        match token.trim() {
            "none" => Ok(MethodSpec::NoReference),
            "random" => Ok(MethodSpec::Random),
            "binary" => Ok(MethodSpec::Binary),
            "simple" => Ok(MethodSpec::Simple),
            t => match t.strip_prefix("learned:") {
                Some(path) if !path.is_empty() => Ok(MethodSpec::Learned(PathBuf::from(path))),
                _ => Err(Error::invalid(format!(
                    "unknown method {t:?} (expected none, random, binary, simple or learned:<path>)"
                ))),
            },
        }
    }

    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        list.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(MethodSpec::parse)
            .collect()
    }

    pub fn name(&self) -> String {
        match self {
            MethodSpec::NoReference => "none".into(),
            MethodSpec::Random => "random".into(),
            MethodSpec::Binary => "binary".into(),
            MethodSpec::Simple => "simple".into(),
            MethodSpec::Learned(path) => format!("learned:{}", path.display()),
        }
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        MethodSpec::parse(&s)
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.name()
    }
}

/// Reference image stored in a checkpoint or a PGM file.
pub fn load_reference(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let reference = if is_json {
        Checkpoint::load(path)?.reference
    } else {
        read_pgm(path)?
    };
    reference.check_unit_range("reference")?;
    Ok(reference)
}

/// A method with its reference materialized for side `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub reference: Option<Image>,
}

impl Method {
    pub fn resolve(
        spec: &MethodSpec,
        d: usize,
        seed: u64,
        simple: &SimpleRefParams,
    ) -> Result<Self> {
        let reference = match spec {
            MethodSpec::NoReference => None,
            MethodSpec::Random => Some(random_reference(
                d,
                &mut Rng::derived(seed, label::RANDOM_REFERENCE, 0),
            )?),
            MethodSpec::Binary => Some(random_binary_reference(
                d,
                &mut Rng::derived(seed, label::BINARY_REFERENCE, 0),
            )?),
            MethodSpec::Simple => Some(simple_reference(
                d,
                simple,
                &mut Rng::derived(seed, label::SIMPLE_REFERENCE, 0),
            )?),
            MethodSpec::Learned(path) => {
                let u = load_reference(path)?;
                u.check_side(d)?;
                Some(u)
            }
        };
        Ok(Method {
            name: spec.name(),
            reference,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Gs,
    Gd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub steps: usize,
    pub solver: Solver,
    pub seed: u64,
    pub gd_step: f64,
    pub epsilon: f64,
    /// Number of registered reconstructions kept per cell.
    pub keep: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            steps: 500,
            solver: Solver::Gs,
            seed: 0,
            gd_step: DEFAULT_GD_STEP,
            epsilon: DEFAULT_EPSILON,
            keep: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub mses: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    /// Registered reconstructions of the first `keep` test images.
    pub reconstructions: Vec<Image>,
}

/// Starting point of the solver for test image `index`, shared by all
/// methods so they are compared from identical initializations.
pub fn solver_init(seed: u64, index: usize) -> InitMode {
    InitMode::Uniform {
        seed: derive_seed(seed, label::SOLVER_INIT, index as u64),
    }
}

/// Reconstructs one image from its measurement and returns the registered
/// reconstruction and its MSE.
pub fn reconstruct_one(
    x: &Image,
    reference: Option<&Image>,
    s: Oversampling,
    init: InitMode,
    cfg: &EvalConfig,
) -> Result<(Image, f64)> {
    let y = measure(x, reference, s)?;
    let recon = match cfg.solver {
        Solver::Gs => gs_run(
            &y,
            reference,
            &GsConfig {
                iterations: cfg.steps,
                epsilon: cfg.epsilon,
                oversampling: s,
                init,
            },
        )?,
        Solver::Gd => gd_run(
            &y,
            reference,
            &GdConfig {
                iterations: cfg.steps,
                step_size: cfg.gd_step,
                epsilon: cfg.epsilon,
                oversampling: s,
                init,
            },
        )?,
    };
    let reg = register(&recon, x)?;
    Ok((reg.aligned, reg.mse))
}

pub fn evaluate_cell(
    test: &[Image],
    reference: Option<&Image>,
    s: Oversampling,
    cfg: &EvalConfig,
) -> Result<CellResult> {
    if test.is_empty() {
        return Err(Error::invalid("no test images"));
    }
    let results = test
        .par_iter()
        .enumerate()
        .map(|(i, x)| reconstruct_one(x, reference, s, solver_init(cfg.seed, i), cfg))
        .collect::<Result<Vec<_>>>()?;
    let mses: Vec<f64> = results.iter().map(|(_, m)| *m).collect();
    let n = mses.len() as f64;
    let mean = mses.iter().sum::<f64>() / n;
    let var = mses.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n;
    let reconstructions = results
        .into_iter()
        .take(cfg.keep)
        .map(|(img, _)| img)
        .collect();
    Ok(CellResult {
        mses,
        mean,
        stddev: var.sqrt(),
        reconstructions,
    })
}

/// One evaluated (method, oversampling) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub record: MetricRecord,
    pub result: CellResult,
}

/// Evaluates every method at every oversampling factor, in the given order.
pub fn evaluate(
    dataset: &str,
    test: &[Image],
    methods: &[Method],
    oversampling: &[Oversampling],
    cfg: &EvalConfig,
) -> Result<Vec<Cell>> {
    let mut cells = Vec::with_capacity(methods.len() * oversampling.len());
    for &s in oversampling {
        for method in methods {
            let result = evaluate_cell(test, method.reference.as_ref(), s, cfg)?;
            log::info!(
                "{dataset} {} s={s}: mean mse {:.6e} over {} images",
                method.name,
                result.mean,
                test.len()
            );
            cells.push(Cell {
                record: MetricRecord {
                    dataset: dataset.to_string(),
                    method: method.name.clone(),
                    oversampling: s.factor(),
                    mse_mean: result.mean,
                    mse_stddev: result.stddev,
                    n_images: test.len(),
                    seed: cfg.seed,
                },
                result,
            });
        }
    }
    Ok(cells)
}
