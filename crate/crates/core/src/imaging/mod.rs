//! Per-pixel views derived from a hyperspectral cube.

mod gabor;
mod morphology;

pub use gabor::{gabor_bank, gabor_magnitudes, gabor_texture, GaborBankSpec, GaborKernel};
pub use morphology::{
    closing, differential_profile, dilate, disk, dmp_features, erode, opening, DmpSpec,
};

use nalgebra::DMatrix;

use crate::data::{HyperspectralCube, ViewKind, ViewMatrix};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_sorted;

/// A single-channel image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "image buffer has {} values, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Extends the image by `pad` pixels on every side using symmetric
    /// reflection (`c b a | a b c | c b a`). Handles pads wider than the image.
    pub fn pad_reflect(&self, pad: usize) -> GrayImage {
        let w = self.width + 2 * pad;
        let h = self.height + 2 * pad;
        let mut data = Vec::with_capacity(w * h);
        for r in 0..h {
            let sr = reflect_index(r as isize - pad as isize, self.height);
            for c in 0..w {
                let sc = reflect_index(c as isize - pad as isize, self.width);
                data.push(self.data[sr * self.width + sc]);
            }
        }
        GrayImage {
            width: w,
            height: h,
            data,
        }
    }

    /// Removes `pad` pixels from every side.
    pub fn crop(&self, pad: usize) -> GrayImage {
        let w = self.width - 2 * pad;
        let h = self.height - 2 * pad;
        let mut data = Vec::with_capacity(w * h);
        for r in pad..pad + h {
            data.extend_from_slice(&self.data[r * self.width + pad..r * self.width + pad + w]);
        }
        GrayImage {
            width: w,
            height: h,
            data,
        }
    }
}

/// Symmetric reflection of `i` into `0..n`, periodic with period `2n`.
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let j = i.rem_euclid(period) as usize;
    if j < n {
        j
    } else {
        2 * n - 1 - j
    }
}

/// Band vector of every pixel, raster row-major.
pub fn spectral_view(cube: &HyperspectralCube) -> ViewMatrix {
    let n = cube.n_pixels();
    let values = DMatrix::from_fn(n, cube.bands(), |p, b| cube.band(b)[p]);
    ViewMatrix::new(ViewKind::Spectral, values).expect("cube values are finite")
}

/// Scores of the first `q` principal components of the band vectors, as
/// images. Pixels are centered by the band means before projection; each
/// eigenvector's largest-magnitude entry is positive.
pub fn pca_images(cube: &HyperspectralCube, q: usize) -> Result<Vec<GrayImage>> {
    let bands = cube.bands();
    if q == 0 || q > bands {
        return Err(Error::invalid(format!(
            "requested {q} components from {bands} bands"
        )));
    }
    let n = cube.n_pixels();
    if n < 2 {
        return Err(Error::invalid("PCA needs at least 2 pixels"));
    }
    let mut centered = DMatrix::from_fn(n, bands, |p, b| cube.band(b)[p]);
    for mut col in centered.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    let (_, vectors) = symmetric_eigen_sorted(&cov, true);
    let scores = &centered * vectors.columns(0, q);
    Ok(scores
        .column_iter()
        .map(|col| GrayImage {
            width: cube.width(),
            height: cube.height(),
            data: col.iter().copied().collect(),
        })
        .collect())
}
