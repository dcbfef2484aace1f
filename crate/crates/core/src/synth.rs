//! Labelled multi-view data with planted pure-noise columns.
//!
//! Every class owns one latent point. Each view maps it through its own
//! random linear map and adds isotropic Gaussian noise; a fixed fraction of
//! each view's columns is then overwritten by pure noise that carries no
//! class information.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{LabelVector, MultiViewDataset, ViewKind, ViewMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_per_class: usize,
    pub classes: usize,
    pub view_dims: Vec<usize>,
    /// Standard deviation of the class latent points.
    pub class_separation: f64,
    /// Standard deviation of the per-sample noise on informative columns.
    pub noise_sigma: f64,
    /// Fraction of each view's columns replaced by pure noise.
    pub redundant_frac: f64,
    pub latent_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// The reference configuration used by the acceptance suite.
    fn default() -> Self {
        Self {
            n_per_class: 40,
            classes: 4,
            view_dims: vec![30, 20, 25],
            class_separation: 1.0,
            noise_sigma: 0.5,
            redundant_frac: 0.4,
            latent_dim: 5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 || self.classes == 0 || self.latent_dim == 0 {
            return Err(Error::invalid(
                "n_per_class, classes and latent_dim must be positive",
            ));
        }
        if self.view_dims.is_empty() || self.view_dims.contains(&0) {
            return Err(Error::invalid("every view needs at least one column"));
        }
        if !(0.0..1.0).contains(&self.redundant_frac) {
            return Err(Error::invalid("redundant_frac must lie in [0, 1)"));
        }
        if !(self.class_separation >= 0.0 && self.noise_sigma >= 0.0) {
            return Err(Error::invalid(
                "class_separation and noise_sigma must be non-negative",
            ));
        }
        Ok(())
    }

    /// Pure-noise columns in a view of width `dim`.
    pub fn noise_count(&self, dim: usize) -> usize {
        ((self.redundant_frac * dim as f64).round() as usize).min(dim - 1)
    }
}

/// Generated data plus the planted ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: MultiViewDataset,
    /// Sorted pure-noise column indices, per view.
    pub noise_columns: Vec<Vec<usize>>,
    pub informative_columns: Vec<Vec<usize>>,
}

pub fn synth_generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let n = spec.n_per_class * spec.classes;
    // samples grouped by class, class-major
    let classes: Vec<usize> = (0..n).map(|i| 1 + i / spec.n_per_class).collect();
    let latents: Vec<DVector<f64>> = (0..spec.classes)
        .map(|_| {
            DVector::from_fn(spec.latent_dim, |_, _| {
                spec.class_separation * gauss(&mut rng)
            })
        })
        .collect();

    let mut views = Vec::with_capacity(spec.view_dims.len());
    let mut noise_columns = Vec::with_capacity(spec.view_dims.len());
    let mut informative_columns = Vec::with_capacity(spec.view_dims.len());
    for (v, &dim) in spec.view_dims.iter().enumerate() {
        let scale = 1.0 / (spec.latent_dim as f64).sqrt();
        let map = DMatrix::from_fn(dim, spec.latent_dim, |_, _| scale * gauss(&mut rng));
        let mut x = DMatrix::zeros(n, dim);
        for i in 0..n {
            let clean = &map * &latents[classes[i] - 1];
            for j in 0..dim {
                x[(i, j)] = clean[j] + spec.noise_sigma * gauss(&mut rng);
            }
        }
        let mut noisy: Vec<usize> = sample(&mut rng, dim, spec.noise_count(dim)).into_vec();
        noisy.sort_unstable();
        let noise_scale = spec.class_separation.max(spec.noise_sigma).max(1e-3);
        for &j in &noisy {
            for i in 0..n {
                x[(i, j)] = noise_scale * gauss(&mut rng);
            }
        }
        let informative = (0..dim)
            .filter(|j| noisy.binary_search(j).is_err())
            .collect();
        views.push(ViewMatrix::new(ViewKind::Custom(format!("view{v}")), x)?);
        noise_columns.push(noisy);
        informative_columns.push(informative);
    }
    let labels = LabelVector::new(classes, spec.classes)?;
    Ok(SyntheticData {
        dataset: MultiViewDataset::new(views, labels)?,
        noise_columns,
        informative_columns,
    })
}
