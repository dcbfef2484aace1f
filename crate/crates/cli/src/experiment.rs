//! Input preparation, per-method evaluation and artifact emission.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::DMatrix;
use s3fse::eval::{
    class_accuracies, colgp_fit, kappa, knn_classify, overall_accuracy, pca_fit, ConfusionMatrix,
    PcaModel,
};
use s3fse::imaging::{dmp_features, gabor_texture, spectral_view, DmpSpec, GaborBankSpec};
use s3fse::io::{read_cube, read_labels, read_view_csv, write_pgm};
use s3fse::solver::{read_projection, write_projection, write_trace_csv, RowSupport};
use s3fse::synth::synth_generate;
use s3fse::{
    fit, normalize_views, project, row_support, stack_views, HyperspectralCube, LabelVector,
    MultiViewDataset, ProjectionMatrix, S3fseConfig, SolveTrace, ViewKind, ViewMatrix,
};

use crate::config::{join, ExperimentConfig, InputSource, Method};

/// Normalized views of every pixel of a cube, for map prediction.
pub struct PixelGrid {
    pub width: usize,
    pub height: usize,
    pub views: MultiViewDataset,
}

/// Normalized labelled samples and their train/test partition.
pub struct Prepared {
    pub train: MultiViewDataset,
    pub test: MultiViewDataset,
    /// Original label code of each class id (index `id - 1`).
    pub class_codes: Vec<i64>,
    /// Planted noise columns per view, synthetic input only.
    pub noise_columns: Option<Vec<Vec<usize>>>,
    pub pixels: Option<PixelGrid>,
}

/// Spectral, Gabor texture and morphological-profile views of a cube, one
/// row per pixel in raster order.
pub fn extract_views(
    cube: &HyperspectralCube,
    gabor: &GaborBankSpec,
    dmp: &DmpSpec,
) -> Result<Vec<ViewMatrix>> {
    let spectral = spectral_view(cube);
    let texture = gabor_texture(cube, gabor).context("imaging: Gabor texture view")?;
    let morph = dmp_features(cube, dmp).context("imaging: morphological profile view")?;
    Ok(vec![spectral, texture, morph])
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let (dataset, class_codes, noise_columns, pixels) = match &cfg.input {
        InputSource::Synthetic(spec) => {
            let data = synth_generate(spec).context("data: synthetic generation")?;
            let ds = normalize_views(&data.dataset).context("data: normalization")?;
            let codes = (1..=spec.classes as i64).collect();
            (ds, codes, Some(data.noise_columns), None)
        }
        InputSource::Views { paths, labels } => {
            let views = paths
                .iter()
                .map(|p| {
                    let kind = ViewKind::parse(&view_name(p));
                    read_view_csv(p, kind)
                        .with_context(|| format!("data: reading view {}", p.display()))
                })
                .collect::<Result<Vec<_>>>()?;
            let codes = read_labels(labels)
                .with_context(|| format!("data: reading labels {}", labels.display()))?;
            let (all, _) = normalize_all(views)?;
            let (ds, class_codes) = labelled_subset(&all, &codes)?;
            (ds, class_codes, None, None)
        }
        InputSource::Cube {
            header,
            labels,
            gabor,
            dmp,
        } => {
            let cube = read_cube(header)
                .with_context(|| format!("data: reading cube {}", header.display()))?;
            let codes = read_labels(labels)
                .with_context(|| format!("data: reading labels {}", labels.display()))?;
            ensure!(
                codes.len() == cube.n_pixels(),
                "data: label file has {} entries but the cube has {} pixels",
                codes.len(),
                cube.n_pixels()
            );
            let (all, _) = normalize_all(extract_views(&cube, gabor, dmp)?)?;
            let (ds, class_codes) = labelled_subset(&all, &codes)?;
            let grid = PixelGrid {
                width: cube.width(),
                height: cube.height(),
                views: all,
            };
            (ds, class_codes, None, Some(grid))
        }
    };
    let split = s3fse::data::split_indices(dataset.labels(), cfg.split)
        .context("data: stratified split")?;
    Ok(Prepared {
        train: dataset.subset(&split.train),
        test: dataset.subset(&split.test),
        class_codes,
        noise_columns,
        pixels,
    })
}

fn view_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "view".into())
}

/// Z-scores every row of the given views together, labelled or not.
fn normalize_all(views: Vec<ViewMatrix>) -> Result<(MultiViewDataset, usize)> {
    let n = views.first().map(|v| v.n_samples()).unwrap_or(0);
    let placeholder = LabelVector::new(vec![1; n], 1).context("data: no samples")?;
    let ds = MultiViewDataset::new(views, placeholder).context("data: assembling views")?;
    Ok((normalize_views(&ds).context("data: normalization")?, n))
}

/// Keeps the rows whose label code is non-zero and remaps codes to `1..=C`.
fn labelled_subset(all: &MultiViewDataset, codes: &[i64]) -> Result<(MultiViewDataset, Vec<i64>)> {
    ensure!(
        codes.len() == all.n_samples(),
        "data: {} labels for {} samples",
        codes.len(),
        all.n_samples()
    );
    let rows: Vec<usize> = (0..codes.len()).filter(|&i| codes[i] != 0).collect();
    ensure!(
        !rows.is_empty(),
        "data: every sample is unlabelled (code 0)"
    );
    let kept: Vec<i64> = rows.iter().map(|&i| codes[i]).collect();
    let (labels, mapping) = LabelVector::from_codes(&kept).context("data: labels")?;
    let views = all.views().iter().map(|v| v.select_rows(&rows)).collect();
    Ok((
        MultiViewDataset::new(views, labels).context("data: labelled subset")?,
        mapping,
    ))
}

/// How a method maps a dataset into its feature space.
pub enum Embedding {
    Projection(ProjectionMatrix),
    Pca(PcaModel),
    Stacked,
}

impl Embedding {
    pub fn apply(&self, ds: &MultiViewDataset) -> Result<DMatrix<f64>> {
        Ok(match self {
            Embedding::Projection(p) => project(ds, p)?,
            Embedding::Pca(model) => model.transform(stack_views(ds)?.values()),
            Embedding::Stacked => stack_views(ds)?.into_values(),
        })
    }
}

pub struct MethodOutcome {
    pub method: Method,
    pub confusion: ConfusionMatrix,
    pub overall_accuracy: f64,
    pub kappa: Option<f64>,
    pub class_accuracy: Vec<Option<f64>>,
    /// Wall clock of learning, projecting and classifying.
    pub runtime_seconds: f64,
    pub embedding: Embedding,
    pub trace: Option<SolveTrace>,
    train_features: DMatrix<f64>,
}

pub fn learn(
    method: Method,
    train: &MultiViewDataset,
    solver: &S3fseConfig,
) -> Result<(Embedding, Option<SolveTrace>)> {
    Ok(match method {
        Method::S3fse => {
            let (p, trace) = fit(train, solver).context("solver: s3fse fit")?;
            (Embedding::Projection(p), Some(trace))
        }
        Method::Colgp => (
            Embedding::Projection(colgp_fit(train, solver).context("solver: colgp fit")?),
            None,
        ),
        Method::Pca => {
            let stacked = stack_views(train)?;
            (
                Embedding::Pca(pca_fit(&stacked, solver.d).context("eval: pca fit")?),
                None,
            )
        }
        Method::Baseline => (Embedding::Stacked, None),
    })
}

/// Classifies the test split with an already learned embedding.
pub fn evaluate(
    method: Method,
    prep: &Prepared,
    embedding: Embedding,
    trace: Option<SolveTrace>,
    k_cls: usize,
    started: Instant,
) -> Result<MethodOutcome> {
    let train_features = embedding
        .apply(&prep.train)
        .context("eval: embedding training split")?;
    let test_features = embedding
        .apply(&prep.test)
        .context("eval: embedding test split")?;
    let predicted = knn_classify(
        &train_features,
        prep.train.labels().classes(),
        &test_features,
        k_cls,
    )
    .context("eval: kNN classification")?;
    let runtime_seconds = started.elapsed().as_secs_f64();
    let c = prep.train.labels().num_classes();
    let confusion = ConfusionMatrix::from_labels(prep.test.labels().classes(), &predicted, c)?;
    let oa = overall_accuracy(&confusion).context("eval: overall accuracy")?;
    let kappa = match kappa(&confusion) {
        Ok(k) => Some(k),
        Err(e) => {
            log::warn!("{method}: {e}");
            None
        }
    };
    Ok(MethodOutcome {
        method,
        class_accuracy: class_accuracies(&confusion),
        confusion,
        overall_accuracy: oa,
        kappa,
        runtime_seconds,
        embedding,
        trace,
        train_features,
    })
}

pub fn run_method(
    prep: &Prepared,
    method: Method,
    solver: &S3fseConfig,
    k_cls: usize,
) -> Result<MethodOutcome> {
    let started = Instant::now();
    let (embedding, trace) = learn(method, &prep.train, solver)?;
    evaluate(method, prep, embedding, trace, k_cls, started)
}

/// Predicted class id of every pixel.
pub fn predict_map(prep: &Prepared, outcome: &MethodOutcome, k_cls: usize) -> Result<Vec<usize>> {
    let Some(grid) = &prep.pixels else {
        bail!("map prediction needs cube input");
    };
    let features = outcome
        .embedding
        .apply(&grid.views)
        .context("eval: embedding pixels")?;
    Ok(knn_classify(
        &outcome.train_features,
        prep.train.labels().classes(),
        &features,
        k_cls,
    )?)
}

/// Gray level encoding class id `id` out of `classes`.
pub fn gray_level(id: usize, classes: usize) -> u8 {
    ((id * 255) as f64 / classes as f64).round() as u8
}

/// Runs every configured method and writes the artifacts into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MethodOutcome>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let prep = prepare(cfg)?;
    let mut outcomes = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        log::info!("running {method}");
        outcomes.push(run_method(&prep, method, &cfg.solver, cfg.k_cls)?);
    }
    let out = &cfg.out_dir;
    write_metrics(&out.join("metrics.csv"), &outcomes, &prep.class_codes)?;
    if let Some(s3) = outcomes.iter().find(|o| o.method == Method::S3fse) {
        if let (Embedding::Projection(p), Some(trace)) = (&s3.embedding, &s3.trace) {
            write_trace_csv(&out.join("trace.csv"), trace)?;
            write_projection(&out.join("projection.txt"), p, Some(&cfg.solver))?;
            let support = row_support(p, cfg.solver.sparsity_tau)?;
            write_sparsity(
                &out.join("sparsity.txt"),
                p,
                &support,
                prep.noise_columns.as_deref(),
            )?;
        }
    }
    if let Some(grid) = &prep.pixels {
        let c = prep.train.labels().num_classes();
        for (i, outcome) in outcomes.iter().enumerate() {
            let ids = predict_map(&prep, outcome, cfg.k_cls)?;
            let pixels: Vec<u8> = ids.iter().map(|&id| gray_level(id, c)).collect();
            write_pgm(
                &out.join(format!("map_{}.pgm", outcome.method)),
                grid.width,
                grid.height,
                &pixels,
            )?;
            if i == 0 {
                write_pgm(&out.join("map.pgm"), grid.width, grid.height, &pixels)?;
            }
        }
    }
    write_manifest(&out.join("manifest.txt"), cfg, &prep, &[])?;
    Ok(outcomes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub d: usize,
    pub overall_accuracy: f64,
}

/// Re-fits every method for each target dimensionality and writes `sweep.csv`.
pub fn sweep_dimension(cfg: &ExperimentConfig, d_values: &[usize]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    ensure!(!d_values.is_empty(), "no d values to sweep");
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let prep = prepare(cfg)?;
    let m = prep.train.total_dim();
    if let Some(&bad) = d_values.iter().find(|&&d| d == 0 || d > m) {
        bail!("d = {bad} outside 1..={m}");
    }
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for &d in d_values {
            let solver = S3fseConfig {
                d,
                ..cfg.solver.clone()
            };
            let outcome = run_method(&prep, method, &solver, cfg.k_cls)?;
            log::info!("{method} d={d}: OA {:.4}", outcome.overall_accuracy);
            rows.push(SweepRow {
                method,
                d,
                overall_accuracy: outcome.overall_accuracy,
            });
        }
    }
    let mut f = std::io::BufWriter::new(fs::File::create(cfg.out_dir.join("sweep.csv"))?);
    writeln!(f, "method,d,OA")?;
    for r in &rows {
        writeln!(f, "{},{},{}", r.method, r.d, r.overall_accuracy)?;
    }
    f.flush()?;
    write_manifest(
        &cfg.out_dir.join("manifest.txt"),
        cfg,
        &prep,
        &[("d_values", join(d_values))],
    )?;
    Ok(rows)
}

/// `method,class,accuracy,OA,kappa,runtime_seconds`: one row per class with
/// its producer's accuracy, then an `overall` row per method.
pub fn write_metrics(path: &Path, outcomes: &[MethodOutcome], class_codes: &[i64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "method,class,accuracy,OA,kappa,runtime_seconds")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for o in outcomes {
        for (i, acc) in o.class_accuracy.iter().enumerate() {
            writeln!(f, "{},{},{},,,", o.method, class_codes[i], opt(*acc))?;
        }
        writeln!(
            f,
            "{},overall,{},{},{},{}",
            o.method,
            o.overall_accuracy,
            o.overall_accuracy,
            opt(o.kappa),
            o.runtime_seconds
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Row-support report as `key=value` lines.
pub fn write_sparsity(
    path: &Path,
    p: &ProjectionMatrix,
    support: &RowSupport,
    noise_columns: Option<&[Vec<usize>]>,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    let total: usize = support.dims.iter().sum();
    let selected: usize = support.selected.iter().map(|s| s.len()).sum();
    writeln!(f, "tau={}", support.tau)?;
    writeln!(f, "rows={total}")?;
    writeln!(f, "selected_rows={selected}")?;
    writeln!(f, "row_sparsity={}", support.row_sparsity)?;
    writeln!(f, "entry_sparsity={}", support.entry_sparsity)?;
    for (v, name) in p.view_names().iter().enumerate() {
        let prefix = format!("view{v}.{name}");
        writeln!(f, "{prefix}.rows={}", support.dims[v])?;
        writeln!(f, "{prefix}.selected_rows={}", support.selected[v].len())?;
        writeln!(f, "{prefix}.row_sparsity={}", support.view_row_sparsity[v])?;
        writeln!(
            f,
            "{prefix}.entry_sparsity={}",
            support.view_entry_sparsity[v]
        )?;
        writeln!(f, "{prefix}.selected={}", join(&support.selected[v]))?;
    }
    if let Some(noise) = noise_columns {
        let planted: usize = noise.iter().map(|n| n.len()).sum();
        let dropped: usize = noise
            .iter()
            .zip(&support.selected)
            .map(|(n, s)| n.iter().filter(|j| s.binary_search(j).is_err()).count())
            .sum();
        writeln!(f, "noise_columns_planted={planted}")?;
        writeln!(f, "noise_columns_dropped={dropped}")?;
    }
    f.flush()?;
    Ok(())
}

fn write_manifest(
    path: &Path,
    cfg: &ExperimentConfig,
    prep: &Prepared,
    extra: &[(&str, String)],
) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "# s3fse experiment manifest")?;
    for (k, v) in cfg.manifest_entries() {
        writeln!(f, "{k}={v}")?;
    }
    for (k, v) in extra {
        writeln!(f, "{k}={v}")?;
    }
    writeln!(f, "train_samples={}", prep.train.n_samples())?;
    writeln!(f, "test_samples={}", prep.test.n_samples())?;
    writeln!(f, "view_dims={}", join(&prep.train.view_dims()))?;
    let c = prep.class_codes.len();
    for (i, code) in prep.class_codes.iter().enumerate() {
        writeln!(
            f,
            "class.{}=label {code}, gray {}",
            i + 1,
            gray_level(i + 1, c)
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Learns the s3fse projection on the training split and writes
/// `projection.txt`, `trace.csv`, `sparsity.txt` and the manifest.
pub fn fit_only(cfg: &ExperimentConfig) -> Result<(ProjectionMatrix, SolveTrace)> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let prep = prepare(cfg)?;
    let (p, trace) = fit(&prep.train, &cfg.solver).context("solver: s3fse fit")?;
    let out = &cfg.out_dir;
    write_projection(&out.join("projection.txt"), &p, Some(&cfg.solver))?;
    write_trace_csv(&out.join("trace.csv"), &trace)?;
    let support = row_support(&p, cfg.solver.sparsity_tau)?;
    write_sparsity(
        &out.join("sparsity.txt"),
        &p,
        &support,
        prep.noise_columns.as_deref(),
    )?;
    write_manifest(&out.join("manifest.txt"), cfg, &prep, &[])?;
    Ok((p, trace))
}

/// Classifies the test split with a saved projection and writes `metrics.csv`.
pub fn eval_projection(cfg: &ExperimentConfig, projection: &Path) -> Result<MethodOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    let prep = prepare(cfg)?;
    let (p, _) =
        read_projection(projection).with_context(|| format!("reading {}", projection.display()))?;
    ensure!(
        p.dims() == prep.train.view_dims().as_slice(),
        "projection blocks {:?} do not match the data's view widths {:?}",
        p.dims(),
        prep.train.view_dims()
    );
    let outcome = evaluate(
        Method::S3fse,
        &prep,
        Embedding::Projection(p),
        None,
        cfg.k_cls,
        Instant::now(),
    )?;
    write_metrics(
        &cfg.out_dir.join("metrics.csv"),
        std::slice::from_ref(&outcome),
        &prep.class_codes,
    )?;
    write_manifest(
        &cfg.out_dir.join("manifest.txt"),
        cfg,
        &prep,
        &[("projection", projection.display().to_string())],
    )?;
    Ok(outcome)
}
