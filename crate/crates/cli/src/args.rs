//! Command-line surface. Flags mirror the experiment configuration fields;
//! `--config FILE` supplies `key=value` lines that explicit flags override.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use s3fse::imaging::{DmpSpec, GaborBankSpec};
use s3fse::synth::SyntheticSpec;
use s3fse::{S3fseConfig, SplitSpec};

use crate::config::{parse_methods, ExperimentConfig, InputSource};

#[derive(Debug, Parser)]
#[command(
    name = "s3fse",
    version,
    about = "Multi-view feature selection and extraction for hyperspectral classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic multi-view dataset as view CSVs.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Extract spectral, texture and morphological views from a cube.
    #[command(args_override_self = true)]
    Features(FeaturesArgs),
    /// Learn a projection on the training split.
    #[command(args_override_self = true)]
    Fit(ExperimentArgs),
    /// Classify the test split with a saved projection.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Fit and evaluate every configured method, writing all artifacts.
    #[command(args_override_self = true)]
    Run(ExperimentArgs),
    /// Overall accuracy against target dimensionality.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    #[arg(long, default_value_t = 40)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Comma-separated view widths.
    #[arg(long, default_value = "30,20,25")]
    pub view_dims: String,
    #[arg(long, default_value_t = 1.0)]
    pub class_separation: f64,
    #[arg(long, default_value_t = 0.5)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.4)]
    pub redundant_frac: f64,
    #[arg(long, default_value_t = 5)]
    pub latent_dim: usize,
}

impl SyntheticArgs {
    pub fn spec(&self, seed: u64) -> Result<SyntheticSpec> {
        Ok(SyntheticSpec {
            n_per_class: self.n_per_class,
            classes: self.classes,
            view_dims: parse_list(&self.view_dims, "view_dims")?,
            class_separation: self.class_separation,
            noise_sigma: self.noise_sigma,
            redundant_frac: self.redundant_frac,
            latent_dim: self.latent_dim,
            seed,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ImagingArgs {
    /// Gabor kernel support (odd).
    #[arg(long, default_value_t = 31)]
    pub gabor_kernel_size: usize,
    #[arg(long, default_value = "0,1,2,3,4")]
    pub gabor_scales: String,
    #[arg(long, default_value = "0,1,2,3,4,5,6,7,8,9,10,11")]
    pub gabor_directions: String,
    #[arg(long, default_value = "2,4,6,8")]
    pub dmp_radii: String,
    #[arg(long, default_value_t = 10)]
    pub dmp_pcs: usize,
}

impl ImagingArgs {
    pub fn specs(&self) -> Result<(GaborBankSpec, DmpSpec)> {
        let gabor = GaborBankSpec {
            kernel_size: self.gabor_kernel_size,
            scales: parse_list(&self.gabor_scales, "gabor_scales")?,
            directions: parse_list(&self.gabor_directions, "gabor_directions")?,
            ..Default::default()
        };
        let dmp = DmpSpec {
            radii: parse_list(&self.dmp_radii, "dmp_radii")?,
            num_pcs: self.dmp_pcs,
        };
        Ok((gabor, dmp))
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Target subspace dimensionality.
    #[arg(long, default_value_t = 10)]
    pub d: usize,
    /// Neighbours of the per-view graphs.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Heat-kernel width.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 30)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps_row: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
    /// Row-norm threshold for the sparsity report.
    #[arg(long, default_value_t = 1e-6)]
    pub sparsity_tau: f64,
}

impl SolverArgs {
    pub fn config(&self, seed: u64) -> S3fseConfig {
        S3fseConfig {
            alpha: self.alpha,
            beta: self.beta,
            d: self.d,
            k: self.k,
            t: self.t,
            max_iter: self.max_iter,
            tol: self.tol,
            eps_row: self.eps_row,
            ridge: self.ridge,
            sparsity_tau: self.sparsity_tau,
            seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Cube header; requires --labels.
    #[arg(long, conflicts_with = "views")]
    pub cube: Option<PathBuf>,
    /// Comma-separated view CSVs; requires --labels.
    #[arg(long)]
    pub views: Option<String>,
    /// One label code per sample or pixel, 0 for unlabelled.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[command(flatten)]
    pub imaging: ImagingArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 30)]
    pub per_class_train: usize,
    /// Drives the split, the solver initialization and synthetic data.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "s3fse,colgp,pca,baseline")]
    pub methods: String,
    /// Neighbours of the kNN classifier.
    #[arg(long, default_value_t = 5)]
    pub k_cls: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl ExperimentArgs {
    pub fn input(&self) -> Result<InputSource> {
        match (&self.cube, &self.views, &self.labels) {
            (Some(header), None, Some(labels)) => {
                let (gabor, dmp) = self.imaging.specs()?;
                Ok(InputSource::Cube {
                    header: header.clone(),
                    labels: labels.clone(),
                    gabor,
                    dmp,
                })
            }
            (None, Some(list), Some(labels)) => Ok(InputSource::Views {
                paths: list.split(',').map(|s| PathBuf::from(s.trim())).collect(),
                labels: labels.clone(),
            }),
            (None, None, None) => Ok(InputSource::Synthetic(self.synthetic.spec(self.seed)?)),
            (_, _, None) => bail!("--cube and --views need --labels"),
            (None, None, Some(_)) => bail!("--labels needs --cube or --views"),
            _ => bail!("--cube and --views are mutually exclusive"),
        }
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            input: self.input()?,
            split: SplitSpec {
                per_class_train: self.per_class_train,
                seed: self.seed,
            },
            solver: self.solver.config(self.seed),
            methods: parse_methods(&self.methods)?,
            out_dir: self.out.clone(),
            k_cls: self.k_cls,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub cube: PathBuf,
    #[command(flatten)]
    pub imaging: ImagingArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Projection file written by `fit` or `run`.
    #[arg(long)]
    pub projection: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Comma-separated list; ranges like `1-20` are expanded.
    #[arg(long, default_value = "1-20")]
    pub d_values: String,
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| anyhow::anyhow!("{what}: '{s}': {e}"))
        })
        .collect()
}

/// Expands `a-b` ranges inside a comma-separated list of dimensionalities.
pub fn parse_d_values(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo
                    .trim()
                    .parse()
                    .with_context(|| format!("d_values: '{part}'"))?;
                let hi: usize = hi
                    .trim()
                    .parse()
                    .with_context(|| format!("d_values: '{part}'"))?;
                if lo > hi {
                    bail!("d_values: empty range '{part}'");
                }
                out.extend(lo..=hi);
            }
            None => out.push(
                part.parse()
                    .with_context(|| format!("d_values: '{part}'"))?,
            ),
        }
    }
    Ok(out)
}

/// Inlines `--config FILE` as `--key=value` arguments placed right after the
/// subcommand, so flags given on the command line come later and win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let path = iter.next().context("--config needs a file")?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text =
        fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let mut injected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), lineno + 1);
        };
        let flag = key.trim().replace('_', "-");
        injected.push(OsString::from(format!("--{flag}={}", value.trim())));
    }
    // program name and subcommand stay in front
    let split = rest.len().min(2);
    let mut out: Vec<OsString> = rest[..split].to_vec();
    out.extend(injected);
    out.extend_from_slice(&rest[split..]);
    Ok(out)
}
