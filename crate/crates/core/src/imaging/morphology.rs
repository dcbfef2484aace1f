//! Grayscale morphology with disk structuring elements and the differential
//! morphological profile.
//!
//! All operators extend the image by symmetric reflection, run on the
//! extended domain and crop back, so opening stays anti-extensive and closing
//! extensive up to the border.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{pca_images, GrayImage};
use crate::data::{HyperspectralCube, ViewKind, ViewMatrix};
use crate::error::{Error, Result};

/// Radii and principal-component count for the profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DmpSpec {
    pub radii: Vec<usize>,
    pub num_pcs: usize,
}

impl Default for DmpSpec {
    fn default() -> Self {
        Self {
            radii: vec![2, 4, 6, 8],
            num_pcs: 10,
        }
    }
}

impl DmpSpec {
    pub fn output_dim(&self) -> usize {
        self.num_pcs * 2 * self.radii.len()
    }
}

/// Offsets `(dy, dx)` with `dx² + dy² <= r²`.
pub fn disk(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dy, dx));
            }
        }
    }
    out
}

/// Min (or max) over the element, evaluated on the interior of `src` that
/// stays `margin` pixels from its edge.
fn rank_filter(
    src: &GrayImage,
    element: &[(isize, isize)],
    margin: usize,
    take_max: bool,
) -> GrayImage {
    let w = src.width - 2 * margin;
    let h = src.height - 2 * margin;
    let mut data = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (cr, cc) = ((r + margin) as isize, (c + margin) as isize);
            let mut acc = if take_max {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            for &(dy, dx) in element {
                let v = src.data[(cr + dy) as usize * src.width + (cc + dx) as usize];
                acc = if take_max { acc.max(v) } else { acc.min(v) };
            }
            data.push(acc);
        }
    }
    GrayImage {
        width: w,
        height: h,
        data,
    }
}

pub fn erode(img: &GrayImage, radius: usize) -> GrayImage {
    rank_filter(&img.pad_reflect(radius), &disk(radius), radius, false)
}

pub fn dilate(img: &GrayImage, radius: usize) -> GrayImage {
    rank_filter(&img.pad_reflect(radius), &disk(radius), radius, true)
}

/// Dilation of the erosion, both taken on the reflected extension.
pub fn opening(img: &GrayImage, radius: usize) -> GrayImage {
    let se = disk(radius);
    let ext = img.pad_reflect(2 * radius);
    let eroded = rank_filter(&ext, &se, radius, false);
    rank_filter(&eroded, &se, radius, true)
}

/// Erosion of the dilation, both taken on the reflected extension.
pub fn closing(img: &GrayImage, radius: usize) -> GrayImage {
    let se = disk(radius);
    let ext = img.pad_reflect(2 * radius);
    let dilated = rank_filter(&ext, &se, radius, true);
    rank_filter(&dilated, &se, radius, false)
}

/// `|profile(r) - profile(r-1)|` for each radius, with `profile(0) = img`.
/// Returns `(opening differentials, closing differentials)`.
pub fn differential_profile(img: &GrayImage, radii: &[usize]) -> (Vec<GrayImage>, Vec<GrayImage>) {
    let diffs = |op: fn(&GrayImage, usize) -> GrayImage| {
        let mut prev = img.clone();
        radii
            .iter()
            .map(|&r| {
                let cur = op(img, r);
                let d = GrayImage {
                    width: img.width,
                    height: img.height,
                    data: cur
                        .data
                        .iter()
                        .zip(&prev.data)
                        .map(|(a, b)| (a - b).abs())
                        .collect(),
                };
                prev = cur;
                d
            })
            .collect::<Vec<_>>()
    };
    (diffs(opening), diffs(closing))
}

/// Morphological view: per pixel, for each PC image, the opening
/// differentials followed by the closing differentials.
pub fn dmp_features(cube: &HyperspectralCube, spec: &DmpSpec) -> Result<ViewMatrix> {
    if spec.radii.is_empty() || spec.radii[0] == 0 || spec.radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!(
            "DMP radii must be positive and strictly increasing, got {:?}",
            spec.radii
        )));
    }
    if spec.num_pcs == 0 || spec.num_pcs > cube.bands() {
        return Err(Error::invalid(format!(
            "DMP wants {} PCs from {} bands",
            spec.num_pcs,
            cube.bands()
        )));
    }
    let pcs = pca_images(cube, spec.num_pcs)?;
    let per_pc: Vec<Vec<GrayImage>> = pcs
        .par_iter()
        .map(|pc| {
            let (open, close) = differential_profile(pc, &spec.radii);
            open.into_iter().chain(close).collect()
        })
        .collect();
    let columns: Vec<&GrayImage> = per_pc.iter().flatten().collect();
    let values = DMatrix::from_fn(cube.n_pixels(), columns.len(), |p, f| columns[f].data[p]);
    ViewMatrix::new(ViewKind::Dmp, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::reflect_index;

    /// Brute-force min/max over the disk, reading the reflected image.
    fn oracle_rank(img: &GrayImage, r: usize, take_max: bool) -> GrayImage {
        // Direct evaluation on an explicitly extended image, then crop.
        let pad = 2 * r;
        let ext_w = img.width + 2 * pad;
        let ext_h = img.height + 2 * pad;
        let get = |y: isize, x: isize| {
            img.get(
                reflect_index(y - pad as isize, img.height),
                reflect_index(x - pad as isize, img.width),
            )
        };
        let ri = r as isize;
        let first: Vec<Vec<f64>> = (0..ext_h as isize)
            .map(|y| {
                (0..ext_w as isize)
                    .map(|x| {
                        let mut vals = Vec::new();
                        for dy in -ri..=ri {
                            for dx in -ri..=ri {
                                if dx * dx + dy * dy <= ri * ri {
                                    vals.push(get(y + dy, x + dx));
                                }
                            }
                        }
                        if take_max {
                            vals.into_iter().fold(f64::MIN, f64::max)
                        } else {
                            vals.into_iter().fold(f64::MAX, f64::min)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        for y in pad..pad + img.height {
            for x in pad..pad + img.width {
                let mut vals = Vec::new();
                for dy in -ri..=ri {
                    for dx in -ri..=ri {
                        if dx * dx + dy * dy <= ri * ri {
                            vals.push(
                                first[(y as isize + dy) as usize][(x as isize + dx) as usize],
                            );
                        }
                    }
                }
                out.push(if take_max {
                    vals.into_iter().fold(f64::MAX, f64::min)
                } else {
                    vals.into_iter().fold(f64::MIN, f64::max)
                });
            }
        }
        GrayImage::new(img.width, img.height, out).unwrap()
    }

    fn square_image() -> GrayImage {
        let mut img = GrayImage::filled(16, 16, 10.0);
        for r in 6..9 {
            for c in 6..9 {
                img.data[r * 16 + c] = 50.0;
            }
        }
        img
    }

    #[test]
    fn disk_membership() {
        assert_eq!(disk(1).len(), 5);
        assert_eq!(disk(2).len(), 13);
        assert!(disk(2).contains(&(2, 0)) && !disk(2).contains(&(2, 1)));
    }

    #[test]
    fn flat_image_is_fixed_point() {
        let img = GrayImage::filled(12, 12, 4.5);
        for r in [2, 4, 6, 8] {
            assert_eq!(opening(&img, r), img);
            assert_eq!(closing(&img, r), img);
        }
        let (o, c) = differential_profile(&img, &[2, 4, 6, 8]);
        assert!(o.iter().chain(&c).all(|d| d.data.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn opening_removes_small_bright_square() {
        let img = square_image();
        let open = opening(&img, 2);
        assert!(open.data.iter().all(|&v| v == 10.0));
        assert_eq!(open, oracle_rank(&img, 2, false));
        let (diffs, _) = differential_profile(&img, &[2, 4]);
        for r in 0..16 {
            for c in 0..16 {
                let inside = (6..9).contains(&r) && (6..9).contains(&c);
                assert_eq!(diffs[0].get(r, c), if inside { 40.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn closing_matches_oracle() {
        let img = GrayImage::new(11, 9, (0..99).map(|i| ((i * 31) % 13) as f64).collect()).unwrap();
        for r in [1, 2, 4] {
            assert_eq!(closing(&img, r), oracle_rank(&img, r, true));
            assert_eq!(opening(&img, r), oracle_rank(&img, r, false));
        }
    }

    #[test]
    fn default_dmp_is_eighty_wide() {
        let data: Vec<f64> = (0..20 * 18 * 12)
            .map(|i| ((i * 7919) % 257) as f64)
            .collect();
        let cube = HyperspectralCube::new(20, 18, 12, data).unwrap();
        let view = dmp_features(&cube, &DmpSpec::default()).unwrap();
        assert_eq!(view.dim(), 80);
        assert_eq!(view.n_samples(), 360);
    }

    #[test]
    fn dmp_rejects_bad_radii() {
        let cube = HyperspectralCube::new(4, 4, 2, vec![0.0; 32]).unwrap();
        let spec = DmpSpec {
            radii: vec![2, 2],
            num_pcs: 1,
        };
        assert!(dmp_features(&cube, &spec).is_err());
        let spec = DmpSpec {
            radii: vec![4, 2],
            num_pcs: 1,
        };
        assert!(dmp_features(&cube, &spec).is_err());
        let spec = DmpSpec {
            radii: vec![2],
            num_pcs: 3,
        };
        assert!(dmp_features(&cube, &spec).is_err());
    }

    #[test]
    fn erode_and_dilate_bracket_the_image() {
        let img = GrayImage::new(7, 7, (0..49).map(|i| ((i * 11) % 9) as f64).collect()).unwrap();
        let e = erode(&img, 2);
        let d = dilate(&img, 2);
        for i in 0..49 {
            assert!(e.data[i] <= img.data[i] && img.data[i] <= d.data[i]);
        }
    }
}
