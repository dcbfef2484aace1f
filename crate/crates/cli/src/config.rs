//! Effective experiment configuration, independent of how it was parsed.

use std::fmt;
use std::path::PathBuf;

use anyhow::{bail, Result};
use s3fse::imaging::{DmpSpec, GaborBankSpec};
use s3fse::synth::SyntheticSpec;
use s3fse::{S3fseConfig, SplitSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Synthetic(SyntheticSpec),
    /// Cube header plus a per-pixel label file; views are extracted here.
    Cube {
        header: PathBuf,
        labels: PathBuf,
        gabor: GaborBankSpec,
        dmp: DmpSpec,
    },
    /// Pre-computed views, one CSV per view, rows aligned with `labels`.
    Views {
        paths: Vec<PathBuf>,
        labels: PathBuf,
    },
}

impl InputSource {
    pub fn kind(&self) -> &'static str {
        match self {
            InputSource::Synthetic(_) => "synthetic",
            InputSource::Cube { .. } => "cube",
            InputSource::Views { .. } => "views",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    S3fse,
    Colgp,
    Pca,
    Baseline,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "s3fse" => Ok(Method::S3fse),
            "colgp" => Ok(Method::Colgp),
            "pca" => Ok(Method::Pca),
            "baseline" => Ok(Method::Baseline),
            other => bail!("unknown method '{other}' (expected s3fse, colgp, pca or baseline)"),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::S3fse => "s3fse",
            Method::Colgp => "colgp",
            Method::Pca => "pca",
            Method::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parses a comma-separated method list, keeping first occurrences only.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for name in list.split(',').filter(|s| !s.trim().is_empty()) {
        let m = Method::parse(name)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    Ok(methods)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: InputSource,
    pub split: SplitSpec,
    pub solver: S3fseConfig,
    pub methods: Vec<Method>,
    pub out_dir: PathBuf,
    /// Neighbours used by the kNN classifier.
    pub k_cls: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("at least one method is required");
        }
        if self.k_cls == 0 {
            bail!("k_cls must be at least 1");
        }
        if self.split.per_class_train == 0 {
            bail!("per_class_train must be at least 1");
        }
        Ok(())
    }

    /// Every effective parameter, defaults included, in a stable order.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![
            ("input".into(), self.input.kind().into()),
            ("seed".into(), self.seed.to_string()),
        ];
        match &self.input {
            InputSource::Synthetic(spec) => {
                out.push(("n_per_class".into(), spec.n_per_class.to_string()));
                out.push(("classes".into(), spec.classes.to_string()));
                out.push(("view_dims".into(), join(&spec.view_dims)));
                out.push(("class_separation".into(), spec.class_separation.to_string()));
                out.push(("noise_sigma".into(), spec.noise_sigma.to_string()));
                out.push(("redundant_frac".into(), spec.redundant_frac.to_string()));
                out.push(("latent_dim".into(), spec.latent_dim.to_string()));
                out.push(("synth_seed".into(), spec.seed.to_string()));
            }
            InputSource::Cube {
                header,
                labels,
                gabor,
                dmp,
            } => {
                out.push(("cube".into(), header.display().to_string()));
                out.push(("labels".into(), labels.display().to_string()));
                out.push(("gabor_scales".into(), join(&gabor.scales)));
                out.push(("gabor_directions".into(), join(&gabor.directions)));
                out.push(("gabor_orientations".into(), gabor.orientations.to_string()));
                out.push(("gabor_kernel_size".into(), gabor.kernel_size.to_string()));
                out.push((
                    "gabor_base_wavelength".into(),
                    gabor.base_wavelength.to_string(),
                ));
                out.push((
                    "gabor_sigma_per_wavelength".into(),
                    gabor.sigma_per_wavelength.to_string(),
                ));
                out.push(("dmp_radii".into(), join(&dmp.radii)));
                out.push(("dmp_pcs".into(), dmp.num_pcs.to_string()));
            }
            InputSource::Views { paths, labels } => {
                let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                out.push(("views".into(), names.join(",")));
                out.push(("labels".into(), labels.display().to_string()));
            }
        }
        out.push((
            "per_class_train".into(),
            self.split.per_class_train.to_string(),
        ));
        out.push(("split_seed".into(), self.split.seed.to_string()));
        for (k, v) in self.solver.entries() {
            let key = if k == "seed" { "solver_seed" } else { k };
            out.push((key.into(), v));
        }
        let methods: Vec<&str> = self.methods.iter().map(|m| m.as_str()).collect();
        out.push(("methods".into(), methods.join(",")));
        out.push(("k_cls".into(), self.k_cls.to_string()));
        out.push(("out".into(), self.out_dir.display().to_string()));
        out
    }
}

pub(crate) fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
