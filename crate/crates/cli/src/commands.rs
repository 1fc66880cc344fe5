//! Subcommand implementations. Each one loads and validates everything it
//! needs before the first file is written.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use refphase::dataio::{
    load_images, read_idx_images, read_measurement, read_pgm, write_history_csv, write_measurement,
    write_metrics_csv, write_pgm, write_png, Checkpoint, PgmDepth,
};
use refphase::eval::{
    evaluate, load_reference, solver_init, EvalConfig, Method, MethodSpec, Solver,
};
use refphase::reflearn::{gradcheck, train_reference, GradcheckConfig, TrainConfig, VjpVariant};
use refphase::{
    gd_run, gs_run, measure, register, GdConfig, GsConfig, Image, Oversampling, SimpleRefParams,
};

use crate::args::{
    EvaluateArgs, GradcheckArgs, MakeRefArgs, MeasureArgs, ReconstructArgs, SimpleArgs,
    TrainRefArgs,
};

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| anyhow!("missing required --{flag}"))
}

fn oversampling(factor: usize) -> Result<Oversampling> {
    Oversampling::from_factor(factor)
        .map_err(|_| anyhow!("--oversample must be 1 or 2, got {factor}"))
}

fn oversampling_list(text: &str) -> Result<Vec<Oversampling>> {
    match text.trim() {
        "both" => Ok(vec![Oversampling::None, Oversampling::Double]),
        t => t
            .split(',')
            .map(|f| {
                let f: usize = f
                    .trim()
                    .parse()
                    .map_err(|_| anyhow!("bad --oversample value {f:?}"))?;
                oversampling(f)
            })
            .collect(),
    }
}

fn usize_list(text: &str, flag: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| anyhow!("bad --{flag} entry {t:?}"))
        })
        .collect()
}

fn solver(name: Option<&str>) -> Result<Solver> {
    match name.unwrap_or("gs") {
        "gs" => Ok(Solver::Gs),
        "gd" => Ok(Solver::Gd),
        other => bail!("unknown solver {other:?} (expected gs or gd)"),
    }
}

fn simple_params(args: &SimpleArgs) -> SimpleRefParams {
    let base = SimpleRefParams::default();
    SimpleRefParams {
        square_side: args.square_side.or(base.square_side),
        sigma: args.sigma.or(base.sigma),
        noise_weight: args.noise_weight.unwrap_or(base.noise_weight),
        poisson_rate: args.poisson_rate.unwrap_or(base.poisson_rate),
        threshold: args.threshold.unwrap_or(base.threshold),
    }
}

fn optional_reference(arg: Option<&str>) -> Result<Option<Image>> {
    match arg {
        None | Some("none") => Ok(None),
        Some(path) => Ok(Some(
            load_reference(path).with_context(|| format!("loading reference {path}"))?,
        )),
    }
}

fn is_pgm(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Fails early if a file cannot be created at `path`.
fn check_writable_file(path: &Path) -> Result<()> {
    if path.is_dir() {
        bail!("output {} is a directory", path.display());
    }
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() && !parent.is_dir() => {
            bail!("output directory {} does not exist", parent.display())
        }
        _ => Ok(()),
    }
}

fn check_output_dir(path: &Path) -> Result<()> {
    if path.exists() && !path.is_dir() {
        bail!("output {} exists and is not a directory", path.display());
    }
    Ok(())
}

fn select(images: Vec<Image>, skip: usize, n: usize, path: &Path) -> Result<Vec<Image>> {
    if n == 0 {
        bail!("requested zero images");
    }
    if images.len() < skip + n {
        bail!(
            "dataset {} holds {} images, fewer than the {} skipped plus {} requested",
            path.display(),
            images.len(),
            skip,
            n
        );
    }
    Ok(images.into_iter().skip(skip).take(n).collect())
}

fn slug(name: &str) -> String {
    let name = match name.strip_prefix("learned:") {
        Some(path) => format!(
            "learned_{}",
            Path::new(path)
                .file_stem()
                .map_or("ref".into(), |s| s.to_string_lossy())
        ),
        None => name.to_string(),
    };
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn measure_cmd(args: MeasureArgs) -> Result<bool> {
    let path = require(args.image, "image")?;
    let out = require(args.out, "out")?;
    let s = oversampling(args.oversample.unwrap_or(2))?;
    let x = if is_pgm(&path) {
        if args.index.unwrap_or(0) != 0 {
            bail!("--index applies to IDX datasets only");
        }
        read_pgm(&path).with_context(|| format!("loading image {}", path.display()))?
    } else {
        let index = args.index.unwrap_or(0);
        let data =
            read_idx_images(&path).with_context(|| format!("loading image {}", path.display()))?;
        let count = data.items.len();
        data.items
            .into_iter()
            .nth(index)
            .ok_or_else(|| anyhow!("--index {index} out of range for {count} images"))?
    };
    let u = optional_reference(args.reference.as_deref())?;
    check_writable_file(&out)?;
    let y = measure(&x, u.as_ref(), s)?;
    write_measurement(&y, &out)?;
    info!(
        "wrote {}x{} magnitudes to {}",
        y.side(),
        y.side(),
        out.display()
    );
    Ok(true)
}

pub fn make_ref_cmd(args: MakeRefArgs) -> Result<bool> {
    let kind = require(args.kind, "kind")?;
    let out = require(args.out, "out")?;
    let spec = match kind.as_str() {
        "random" => MethodSpec::Random,
        "binary" => MethodSpec::Binary,
        "simple" => MethodSpec::Simple,
        other => bail!("unknown reference kind {other:?} (expected random, binary or simple)"),
    };
    let d = args.size.unwrap_or(28);
    if d == 0 {
        bail!("--size must be positive");
    }
    let seed = args.seed.unwrap_or(0);
    let params = simple_params(&args.simple);
    check_writable_file(&out)?;
    let method = Method::resolve(&spec, d, seed, &params)?;
    let u = method
        .reference
        .expect("baseline kinds produce a reference");
    if spec == MethodSpec::Simple {
        info!(
            "simple reference d={d} seed={seed}: square side {}, sigma {}, noise weight {}, poisson rate {}, threshold {}",
            params.square_side_for(d),
            params.sigma_for(d),
            params.noise_weight,
            params.poisson_rate,
            params.threshold
        );
    } else {
        info!("{kind} reference d={d} seed={seed}");
    }
    if is_png(&out) {
        write_png(&u, &out)?;
    } else {
        write_pgm(&u, &out, PgmDepth::Sixteen)?;
    }
    Ok(true)
}

pub fn reconstruct_cmd(args: ReconstructArgs) -> Result<bool> {
    let path = require(args.measurement, "measurement")?;
    let out = require(args.out, "out")?;
    let y = read_measurement(&path)
        .with_context(|| format!("loading measurement {}", path.display()))?;
    let u = optional_reference(args.reference.as_deref())?;
    if let Some(u) = &u {
        if u.side() != y.image_side() {
            bail!(
                "reference side {} does not match measured image side {}",
                u.side(),
                y.image_side()
            );
        }
    }
    let truth = args
        .truth
        .as_deref()
        .map(|p| read_pgm(p).with_context(|| format!("loading truth {}", p.display())))
        .transpose()?;
    if let Some(t) = &truth {
        if t.side() != y.image_side() {
            bail!(
                "truth side {} does not match measured image side {}",
                t.side(),
                y.image_side()
            );
        }
    }
    let steps = args.steps.unwrap_or(500);
    let init = solver_init(args.seed.unwrap_or(0), 0);
    let s = y.oversampling();
    check_writable_file(&out)?;
    let recon = match solver(args.solver.as_deref())? {
        Solver::Gs => gs_run(
            &y,
            u.as_ref(),
            &GsConfig {
                iterations: steps,
                oversampling: s,
                init,
                ..GsConfig::default()
            },
        )?,
        Solver::Gd => gd_run(
            &y,
            u.as_ref(),
            &GdConfig {
                iterations: steps,
                step_size: args
                    .gd_step
                    .unwrap_or(refphase::reconstruct::DEFAULT_GD_STEP),
                oversampling: s,
                init,
                ..GdConfig::default()
            },
        )?,
    };
    let result = match &truth {
        Some(t) => {
            let reg = register(&recon, t)?;
            println!("registered mse {:e}", reg.mse);
            reg.aligned
        }
        None => recon,
    };
    write_pgm(&result, &out, PgmDepth::Sixteen)?;
    Ok(true)
}

pub fn train_ref_cmd(args: TrainRefArgs) -> Result<bool> {
    let data = require(args.data, "data")?;
    let out = require(args.out, "out")?;
    let base = TrainConfig::default();
    let cfg = TrainConfig {
        unroll_steps: args.unroll.unwrap_or(base.unroll_steps),
        batch_size: args.batch.unwrap_or(base.batch_size),
        learning_rate: args.lr.unwrap_or(base.learning_rate),
        max_batches: args.max_batches.unwrap_or(base.max_batches),
        seed: args.seed.unwrap_or(base.seed),
        oversampling: oversampling(args.oversample.unwrap_or(2))?,
        validation_fraction: args.validation_fraction.unwrap_or(base.validation_fraction),
        validate_every: args.validate_every.unwrap_or(base.validate_every),
        patience: args.patience.or(base.patience),
    };
    cfg.validate()?;
    let n = args.n_train.unwrap_or(100);
    if n == 0 {
        bail!("--n-train must be positive");
    }
    cfg.split(n)?;
    check_output_dir(&out)?;
    let images =
        load_images(&data).with_context(|| format!("loading dataset {}", data.display()))?;
    let images = select(images, args.skip.unwrap_or(0), n, &data)?;

    let outcome = train_reference(&images, &cfg)?;
    let last_val = outcome.history.iter().rev().find_map(|h| h.val_mse);
    info!(
        "trained {} updates ({:?}), final validation mse {}",
        outcome.adam.t,
        outcome.stop,
        last_val.map_or("n/a".into(), |v| format!("{v:e}"))
    );
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    write_pgm(
        &outcome.reference,
        out.join("reference.pgm"),
        PgmDepth::Sixteen,
    )?;
    write_png(&outcome.reference, out.join("reference.png"))?;
    write_history_csv(&outcome.history, out.join("history.csv"))?;
    let dataset = data.display().to_string();
    Checkpoint::new(dataset, cfg, outcome).save(out.join("checkpoint.json"))?;
    println!("{}", out.join("checkpoint.json").display());
    Ok(true)
}

pub fn evaluate_cmd(args: EvaluateArgs) -> Result<bool> {
    let data = require(args.data, "data")?;
    let out_dir = require(args.out_dir, "out-dir")?;
    let specs = MethodSpec::parse_list(args.methods.as_deref().unwrap_or("none,simple"))?;
    if specs.is_empty() {
        bail!("--methods is empty");
    }
    let factors = oversampling_list(args.oversample.as_deref().unwrap_or("both"))?;
    let cfg = EvalConfig {
        steps: args.steps.unwrap_or(500),
        solver: solver(args.solver.as_deref())?,
        seed: args.seed.unwrap_or(0),
        gd_step: args
            .gd_step
            .unwrap_or(refphase::reconstruct::DEFAULT_GD_STEP),
        ..EvalConfig::default()
    };
    let n = args.n_test.unwrap_or(1000);
    check_output_dir(&out_dir)?;
    let images =
        load_images(&data).with_context(|| format!("loading dataset {}", data.display()))?;
    let test = select(images, args.skip.unwrap_or(0), n, &data)?;
    let d = test[0].side();
    let params = simple_params(&args.simple);
    let methods = specs
        .iter()
        .map(|spec| {
            Method::resolve(spec, d, cfg.seed, &params)
                .with_context(|| format!("method {}", spec.name()))
        })
        .collect::<Result<Vec<_>>>()?;
    if n < 1000 {
        info!("evaluating on {n} test images (reduced from the default 1000)");
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()?;
    let dataset = data.file_name().map_or_else(
        || data.display().to_string(),
        |f| f.to_string_lossy().into_owned(),
    );
    let cells = pool.install(|| evaluate(&dataset, &test, &methods, &factors, &cfg))?;

    let recon_dir = out_dir.join("reconstructions");
    std::fs::create_dir_all(&recon_dir)
        .with_context(|| format!("creating {}", recon_dir.display()))?;
    for (i, x) in test.iter().take(cfg.keep).enumerate() {
        write_pgm(
            x,
            recon_dir.join(format!("truth_{i}.pgm")),
            PgmDepth::Sixteen,
        )?;
    }
    for cell in &cells {
        let stem = format!(
            "{}_s{}",
            slug(&cell.record.method),
            cell.record.oversampling
        );
        for (i, img) in cell.result.reconstructions.iter().enumerate() {
            write_pgm(
                img,
                recon_dir.join(format!("{stem}_{i}.pgm")),
                PgmDepth::Sixteen,
            )?;
        }
    }
    let records: Vec<_> = cells.into_iter().map(|c| c.record).collect();
    let metrics: PathBuf = out_dir.join("metrics.csv");
    write_metrics_csv(&records, &metrics)?;
    print!("{}", refphase::dataio::metrics_csv(&records));
    Ok(true)
}

pub fn gradcheck_cmd(args: GradcheckArgs) -> Result<bool> {
    let base = GradcheckConfig::default();
    let cfg = GradcheckConfig {
        trials: args.trials.unwrap_or(base.trials),
        sizes: args
            .sizes
            .as_deref()
            .map_or(Ok(base.sizes.clone()), |s| usize_list(s, "sizes"))?,
        unrolls: args
            .unrolls
            .as_deref()
            .map_or(Ok(base.unrolls.clone()), |s| usize_list(s, "unrolls"))?,
        oversampling: args
            .oversample
            .as_deref()
            .map_or(Ok(base.oversampling.clone()), oversampling_list)?,
        seed: args.seed.unwrap_or(base.seed),
        variant: if args.corrupt_vjp {
            VjpVariant::DropSubtraction
        } else {
            VjpVariant::Exact
        },
        ..base
    };
    if cfg.sizes.contains(&0) || cfg.unrolls.contains(&0) {
        bail!("--sizes and --unrolls entries must be positive");
    }
    if cfg.trials == 0 {
        warn!("no trials requested; the check passes vacuously");
    }
    let report = gradcheck(&cfg)?;
    println!(
        "max relative error {:e} over {} trials, {} kink resamples, tolerance {:e}",
        report.max_rel_error,
        report.trials.len(),
        report.resampled,
        report.tolerance
    );
    let passed = report.passed();
    println!("{}", if passed { "PASS" } else { "FAIL" });
    Ok(passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("simple"), "simple");
        assert_eq!(slug("learned:runs/a b/ref.json"), "learned_ref");
    }

    #[test]
    fn oversample_lists() {
        assert_eq!(oversampling_list("both").unwrap().len(), 2);
        assert_eq!(oversampling_list("2").unwrap(), vec![Oversampling::Double]);
        assert!(oversampling_list("3").is_err());
    }
}
