//! Core data types shared by every stage: cubes, views, labels and splits.

use std::fmt;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A width × height × bands raster, stored band-sequential and row-major
/// within each band.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperspectralCube {
    width: usize,
    height: usize,
    bands: usize,
    data: Vec<f64>,
}

impl HyperspectralCube {
    pub fn new(width: usize, height: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::invalid(format!(
                "cube dimensions must be positive, got {width}x{height}x{bands}"
            )));
        }
        if data.len() != width * height * bands {
            return Err(Error::invalid(format!(
                "cube data length {} != {width}*{height}*{bands}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "cube value at offset {pos} is not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            bands,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One band as a row-major slice of `width * height` values.
    pub fn band(&self, b: usize) -> &[f64] {
        let len = self.n_pixels();
        &self.data[b * len..(b + 1) * len]
    }

    /// Value at pixel `(row, col)` in band `b`.
    pub fn get(&self, row: usize, col: usize, b: usize) -> f64 {
        self.data[b * self.n_pixels() + row * self.width + col]
    }
}

/// Identifier of a view.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ViewKind {
    Spectral,
    Texture,
    Dmp,
    Custom(String),
}

impl ViewKind {
    pub fn parse(name: &str) -> Self {
        match name {
            "spectral" => ViewKind::Spectral,
            "texture" => ViewKind::Texture,
            "dmp" => ViewKind::Dmp,
            other => ViewKind::Custom(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            ViewKind::Spectral => "spectral",
            ViewKind::Texture => "texture",
            ViewKind::Dmp => "dmp",
            ViewKind::Custom(s) => s,
        }
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An n × d_v feature matrix, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrix {
    kind: ViewKind,
    values: DMatrix<f64>,
}

impl ViewMatrix {
    pub fn new(kind: ViewKind, values: DMatrix<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "view '{kind}' contains non-finite entries"
            )));
        }
        Ok(Self { kind, values })
    }

    pub fn kind(&self) -> &ViewKind {
        &self.kind
    }

    pub fn name(&self) -> &str {
        self.kind.as_str()
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn select_rows(&self, rows: &[usize]) -> ViewMatrix {
        ViewMatrix {
            kind: self.kind.clone(),
            values: self.values.select_rows(rows),
        }
    }
}

/// Class ids in `1..=C`, one per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    classes: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    /// Validates that every id lies in `1..=num_classes` and that every class
    /// is populated.
    pub fn new(classes: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::invalid("label vector needs at least one class"));
        }
        let mut seen = vec![false; num_classes];
        for (i, &c) in classes.iter().enumerate() {
            if c == 0 || c > num_classes {
                return Err(Error::invalid(format!(
                    "label {c} at sample {i} outside 1..={num_classes}"
                )));
            }
            seen[c - 1] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!(
                "class {} has no samples",
                missing + 1
            )));
        }
        Ok(Self {
            classes,
            num_classes,
        })
    }

    /// Remaps arbitrary codes to contiguous ids `1..=C` in ascending code
    /// order. Returns the labels and the code for each id (index `id - 1`).
    pub fn from_codes(codes: &[i64]) -> Result<(Self, Vec<i64>)> {
        let mut mapping: Vec<i64> = codes.to_vec();
        mapping.sort_unstable();
        mapping.dedup();
        let classes = codes
            .iter()
            .map(|c| mapping.binary_search(c).map(|i| i + 1).unwrap())
            .collect();
        let labels = Self::new(classes, mapping.len())?;
        Ok((labels, mapping))
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Labels of a subset. Keeps the parent's class count even when some
    /// class is absent from the subset.
    pub fn subset(&self, rows: &[usize]) -> LabelVector {
        LabelVector {
            classes: rows.iter().map(|&r| self.classes[r]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &c in &self.classes {
            counts[c - 1] += 1;
        }
        counts
    }
}

/// Views sharing sample order, plus their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<ViewMatrix>,
    labels: LabelVector,
}

impl MultiViewDataset {
    pub fn new(views: Vec<ViewMatrix>, labels: LabelVector) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::invalid("dataset needs at least one view"));
        }
        let n = labels.len();
        for v in &views {
            if v.n_samples() != n {
                return Err(Error::invalid(format!(
                    "view '{}' has {} samples, labels have {n}",
                    v.name(),
                    v.n_samples()
                )));
            }
        }
        Ok(Self { views, labels })
    }

    pub fn views(&self) -> &[ViewMatrix] {
        &self.views
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.dim()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.views.iter().map(|v| v.dim()).sum()
    }

    pub fn subset(&self, rows: &[usize]) -> MultiViewDataset {
        MultiViewDataset {
            views: self.views.iter().map(|v| v.select_rows(rows)).collect(),
            labels: self.labels.subset(rows),
        }
    }
}

/// Per-class training count and the sampling seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub per_class_train: usize,
    pub seed: u64,
}

/// Train/test index sets into the parent dataset, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Z-scores every column over all samples (population std). Zero-variance
/// columns become zeros.
pub fn normalize_views(ds: &MultiViewDataset) -> Result<MultiViewDataset> {
    if ds.n_samples() < 2 {
        return Err(Error::invalid("normalization needs at least 2 samples"));
    }
    let views = ds
        .views
        .iter()
        .map(|v| ViewMatrix {
            kind: v.kind.clone(),
            values: zscore_columns(&v.values),
        })
        .collect();
    Ok(MultiViewDataset {
        views,
        labels: ds.labels.clone(),
    })
}

/// Column means and population standard deviations.
pub fn column_stats(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    m.column_iter()
        .map(|col| {
            let mean = col.sum() / n;
            let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .unzip()
}

fn zscore_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (means, stds) = column_stats(m);
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        // Relative floor so round-off in a constant column is not amplified.
        let scale = means[j].abs().max(1.0);
        if stds[j] <= 1e-12 * scale {
            col.fill(0.0);
        } else {
            col.apply(|x| *x = (*x - means[j]) / stds[j]);
        }
    }
    out
}

/// Horizontal concatenation of all views in stored order.
pub fn stack_views(ds: &MultiViewDataset) -> Result<ViewMatrix> {
    stack_matrices(ds.views.iter().map(|v| &v.values)).map(|values| {
        let kind = if ds.views.len() == 1 {
            ds.views[0].kind.clone()
        } else {
            ViewKind::Custom("stacked".into())
        };
        ViewMatrix { kind, values }
    })
}

pub(crate) fn stack_matrices<'a>(
    mats: impl IntoIterator<Item = &'a DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    let mats: Vec<_> = mats.into_iter().collect();
    let Some(first) = mats.first() else {
        return Err(Error::invalid("nothing to stack"));
    };
    let n = first.nrows();
    if mats.iter().any(|m| m.nrows() != n) {
        return Err(Error::invalid("views disagree on sample count"));
    }
    let m: usize = mats.iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(n, m);
    let mut offset = 0;
    for mat in mats {
        out.view_mut((0, offset), (n, mat.ncols())).copy_from(mat);
        offset += mat.ncols();
    }
    Ok(out)
}

/// Column offsets of each view block inside the stacked matrix; has one more
/// entry than `dims`.
pub fn block_offsets(dims: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(dims.len() + 1);
    offsets.push(0);
    let mut acc = 0;
    for &d in dims {
        acc += d;
        offsets.push(acc);
    }
    offsets
}

/// Chooses `per_class_train` samples of each class without replacement.
pub fn split_indices(labels: &LabelVector, spec: SplitSpec) -> Result<Split> {
    if spec.per_class_train == 0 {
        return Err(Error::invalid("per_class_train must be at least 1"));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); labels.num_classes()];
    for (i, &c) in labels.classes().iter().enumerate() {
        by_class[c - 1].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < spec.per_class_train {
            return Err(Error::invalid(format!(
                "class {} has {} samples, fewer than per_class_train = {}",
                c + 1,
                members.len(),
                spec.per_class_train
            )));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..spec.per_class_train]);
    }
    train.sort_unstable();
    let mut in_train = vec![false; labels.len()];
    for &i in &train {
        in_train[i] = true;
    }
    let test = (0..labels.len()).filter(|&i| !in_train[i]).collect();
    Ok(Split { train, test })
}

pub fn stratified_split(
    ds: &MultiViewDataset,
    spec: SplitSpec,
) -> Result<(MultiViewDataset, MultiViewDataset)> {
    let split = split_indices(ds.labels(), spec)?;
    Ok((ds.subset(&split.train), ds.subset(&split.test)))
}
