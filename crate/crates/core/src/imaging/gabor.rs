//! Complex Gabor filter bank applied to the first principal-component image.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{pca_images, GrayImage};
use crate::data::{HyperspectralCube, ViewKind, ViewMatrix};
use crate::error::{Error, Result};

/// Bank layout. Scale `s` has wavelength `base_wavelength * 2^(s/2)` and
/// envelope `sigma = sigma_per_wavelength * wavelength`; direction `d` has
/// orientation `d * pi / orientations`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborBankSpec {
    pub scales: Vec<u32>,
    pub directions: Vec<u32>,
    pub kernel_size: usize,
    pub orientations: u32,
    pub base_wavelength: f64,
    pub sigma_per_wavelength: f64,
}

impl Default for GaborBankSpec {
    fn default() -> Self {
        Self {
            scales: (0..5).collect(),
            directions: (0..12).collect(),
            kernel_size: 31,
            orientations: 12,
            base_wavelength: 4.0,
            sigma_per_wavelength: 0.56,
        }
    }
}

impl GaborBankSpec {
    pub fn n_filters(&self) -> usize {
        self.scales.len() * self.directions.len()
    }

    fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.kernel_size.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "kernel_size must be odd, got {}",
                self.kernel_size
            )));
        }
        if self.n_filters() == 0 {
            return Err(Error::invalid(
                "Gabor bank needs at least one scale and one direction",
            ));
        }
        if self.orientations == 0 || self.base_wavelength <= 0.0 || self.sigma_per_wavelength <= 0.0
        {
            return Err(Error::invalid(
                "Gabor orientations, wavelength and sigma must be positive",
            ));
        }
        Ok(())
    }
}

/// A square complex kernel, row-major, centred at `(size/2, size/2)`.
#[derive(Debug, Clone)]
pub struct GaborKernel {
    pub size: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl GaborKernel {
    /// Envelope normalized to unit sum; the real part is made zero-mean so the
    /// filter ignores flat fields.
    pub fn new(wavelength: f64, orientation: f64, sigma: f64, size: usize) -> Self {
        let half = (size / 2) as isize;
        let (sin_t, cos_t) = orientation.sin_cos();
        let mut env = Vec::with_capacity(size * size);
        let mut phase = Vec::with_capacity(size * size);
        for y in -half..=half {
            for x in -half..=half {
                let (x, y) = (x as f64, y as f64);
                let xr = x * cos_t + y * sin_t;
                let yr = -x * sin_t + y * cos_t;
                env.push((-(xr * xr + yr * yr) / (2.0 * sigma * sigma)).exp());
                phase.push(2.0 * PI * xr / wavelength);
            }
        }
        let total: f64 = env.iter().sum();
        let mut re: Vec<f64> = env
            .iter()
            .zip(&phase)
            .map(|(e, p)| e / total * p.cos())
            .collect();
        let im = env
            .iter()
            .zip(&phase)
            .map(|(e, p)| e / total * p.sin())
            .collect();
        let mean = re.iter().sum::<f64>() / re.len() as f64;
        re.iter_mut().for_each(|v| *v -= mean);
        Self { size, re, im }
    }

    pub fn magnitude_at(&self, dy: isize, dx: isize) -> f64 {
        let half = (self.size / 2) as isize;
        let idx = ((dy + half) as usize) * self.size + (dx + half) as usize;
        self.re[idx].hypot(self.im[idx])
    }
}

/// Filters in output-column order: scale-major, direction-minor.
pub fn gabor_bank(spec: &GaborBankSpec) -> Result<Vec<GaborKernel>> {
    spec.validate()?;
    let mut bank = Vec::with_capacity(spec.n_filters());
    for &s in &spec.scales {
        let wavelength = spec.base_wavelength * 2f64.powf(s as f64 / 2.0);
        let sigma = spec.sigma_per_wavelength * wavelength;
        for &d in &spec.directions {
            let theta = d as f64 * PI / spec.orientations as f64;
            bank.push(GaborKernel::new(wavelength, theta, sigma, spec.kernel_size));
        }
    }
    Ok(bank)
}

/// Per-pixel magnitude of every filter response, boundaries reflected.
/// Returns an `n_pixels × n_filters` matrix in raster order.
pub fn gabor_magnitudes(img: &GrayImage, spec: &GaborBankSpec) -> Result<DMatrix<f64>> {
    let bank = gabor_bank(spec)?;
    if spec.kernel_size > img.width || spec.kernel_size > img.height {
        return Err(Error::invalid(format!(
            "Gabor kernel {} exceeds image {}x{}",
            spec.kernel_size, img.width, img.height
        )));
    }
    let half = spec.kernel_size / 2;
    let padded = img.pad_reflect(half);
    let columns: Vec<Vec<f64>> = bank
        .par_iter()
        .map(|k| filter_magnitude(&padded, k, img))
        .collect();
    Ok(DMatrix::from_fn(
        img.width * img.height,
        bank.len(),
        |p, f| columns[f][p],
    ))
}

fn filter_magnitude(padded: &GrayImage, kernel: &GaborKernel, img: &GrayImage) -> Vec<f64> {
    let k = kernel.size;
    let mut out = Vec::with_capacity(img.width * img.height);
    for r in 0..img.height {
        for c in 0..img.width {
            let (mut re, mut im) = (0.0, 0.0);
            for i in 0..k {
                let row = &padded.data[(r + i) * padded.width + c..(r + i) * padded.width + c + k];
                let kr = &kernel.re[i * k..(i + 1) * k];
                let ki = &kernel.im[i * k..(i + 1) * k];
                for j in 0..k {
                    re += kr[j] * row[j];
                    im += ki[j] * row[j];
                }
            }
            out.push(re.hypot(im));
        }
    }
    out
}

/// Texture view: Gabor magnitudes of the first principal-component image.
pub fn gabor_texture(cube: &HyperspectralCube, spec: &GaborBankSpec) -> Result<ViewMatrix> {
    let pc1 = pca_images(cube, 1)?.remove(0);
    ViewMatrix::new(ViewKind::Texture, gabor_magnitudes(&pc1, spec)?)
}
