//! Datasets: CSV ingestion, unit-ball normalization, splits and a synthetic
//! teacher generator.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};
use crate::mlp::Mlp;
use crate::rng::{derive_seed, rng_from};

/// A regression vector or a class label.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Values(Vec<f64>),
    Class(usize),
}

impl Target {
    /// The class label, accepting a one-element integral vector as well.
    pub fn class_index(&self, row: usize) -> Result<usize> {
        match self {
            Target::Class(c) => Ok(*c),
            Target::Values(v) if v.len() == 1 && v[0] >= 0.0 && v[0].fract() == 0.0 => {
                Ok(v[0] as usize)
            }
            Target::Values(_) => Err(Error::NonIntegerTarget { row }),
        }
    }

    /// Values as a vector (class labels become a single number).
    pub fn as_values(&self) -> Vec<f64> {
        match self {
            Target::Values(v) => v.clone(),
            Target::Class(c) => vec![*c as f64],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Target>,
    /// Cumulative factor applied to the raw inputs.
    pub norm_scale: f64,
    pub split: Option<Split>,
    pub kind: TaskKind,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<Target>, kind: TaskKind) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "targets per input",
                expected: x.len(),
                found: y.len(),
            });
        }
        let d = x[0].len();
        for (row, xi) in x.iter().enumerate() {
            if xi.len() != d {
                return Err(Error::Malformed {
                    row,
                    col: xi.len().min(d),
                    msg: format!("expected {d} inputs, found {}", xi.len()),
                });
            }
            if xi.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dataset inputs"));
            }
        }
        Ok(Dataset {
            x,
            y,
            norm_scale: 1.0,
            split: None,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.x[0].len()
    }

    /// Width of a target row (1 for class labels).
    pub fn target_dim(&self) -> usize {
        match &self.y[0] {
            Target::Values(v) => v.len(),
            Target::Class(_) => 1,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.y
            .iter()
            .filter_map(|t| match t {
                Target::Class(c) => Some(c + 1),
                Target::Values(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Training rows; every row when no split has been applied.
    pub fn train_indices(&self) -> Vec<usize> {
        match &self.split {
            Some(s) => s.train.clone(),
            None => (0..self.len()).collect(),
        }
    }

    pub fn test_indices(&self) -> Vec<usize> {
        self.split.as_ref().map(|s| s.test.clone()).unwrap_or_default()
    }

    pub fn inputs(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        idx.iter().map(|i| self.x[*i].clone()).collect()
    }

    pub fn manifest(&self, source: Option<&str>) -> DatasetManifest {
        DatasetManifest {
            source: source.map(str::to_owned),
            rows: self.len(),
            input_dim: self.input_dim(),
            target_dim: self.target_dim(),
            kind: self.kind,
            norm_scale: self.norm_scale,
            split_seed: self.split.as_ref().map(|s| s.seed),
            train_rows: self.train_indices().len(),
            test_rows: self.test_indices().len(),
        }
    }
}

/// Summary written next to derived datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub source: Option<String>,
    pub rows: usize,
    pub input_dim: usize,
    pub target_dim: usize,
    pub kind: TaskKind,
    pub norm_scale: f64,
    pub split_seed: Option<u64>,
    pub train_rows: usize,
    pub test_rows: usize,
}

/// Reads a headed numeric CSV. Columns named in `target_cols` become the
/// target, all others the input. Classification expects one integral target
/// column.
pub fn load_csv(path: impl AsRef<Path>, target_cols: &[&str], kind: TaskKind) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let width = headers.len();
    let mut target_idx = Vec::with_capacity(target_cols.len());
    for name in target_cols {
        let pos = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::invalid(format!("no column named {name:?}")))?;
        target_idx.push(pos);
    }
    if target_idx.is_empty() {
        return Err(Error::invalid("at least one target column is required"));
    }
    if kind == TaskKind::Classification && target_idx.len() != 1 {
        return Err(Error::invalid("classification takes exactly one target column"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        // Data rows are numbered from 1, after the header.
        let row = r + 1;
        if rec.len() != width {
            return Err(Error::Malformed {
                row,
                col: rec.len().min(width),
                msg: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(width);
        for (col, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Malformed {
                row,
                col,
                msg: format!("not a number: {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Malformed {
                    row,
                    col,
                    msg: "non-finite value".into(),
                });
            }
            vals.push(v);
        }
        let x: Vec<f64> = (0..width)
            .filter(|c| !target_idx.contains(c))
            .map(|c| vals[c])
            .collect();
        let t: Vec<f64> = target_idx.iter().map(|c| vals[*c]).collect();
        let y = match kind {
            TaskKind::Regression => Target::Values(t),
            TaskKind::Classification => Target::Class(Target::Values(t).class_index(row)?),
        };
        xs.push(x);
        ys.push(y);
    }
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs[0].is_empty() {
        return Err(Error::invalid("no input columns left after removing targets"));
    }
    Dataset::new(xs, ys, kind)
}

/// Writes inputs as `x0..`, targets as `y0..` (or `class`).
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header: Vec<String> = (0..ds.input_dim()).map(|i| format!("x{i}")).collect();
    match ds.kind {
        TaskKind::Regression => header.extend((0..ds.target_dim()).map(|i| format!("y{i}"))),
        TaskKind::Classification => header.push("class".into()),
    }
    w.write_record(&header)?;
    for (x, y) in ds.x.iter().zip(&ds.y) {
        // `Display` for f64 prints the shortest string that parses back exactly.
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.extend(y.as_values().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(serde_json::to_string_pretty(manifest)?.as_bytes())?;
    Ok(())
}

/// Scales `v` by `s`, then shrinks `s` ulp by ulp until the norm is at most 1.
fn scale_into_ball(v: &[f64], mut s: f64) -> (Vec<f64>, f64) {
    loop {
        let out: Vec<f64> = v.iter().map(|a| a * s).collect();
        if norm(&out) <= 1.0 {
            return (out, s);
        }
        s = f64::from_bits(s.to_bits() - 1);
    }
}

/// Rescales all inputs by `1 / max ‖x‖` over the training rows.
///
/// Test rows that still land outside the unit ball are rescaled one by one
/// and reported in a warning. Data whose training maximum already sits
/// within a few ulps below 1 is left untouched, so the operation is
/// idempotent.
pub fn normalize_unit_ball(ds: &Dataset) -> Dataset {
    let train = ds.train_indices();
    let max = train.iter().map(|i| norm(&ds.x[*i])).fold(0.0_f64, f64::max);
    let mut out = ds.clone();
    if max == 0.0 || (1.0 - 4.0 * f64::EPSILON..=1.0).contains(&max) {
        return out;
    }
    let mut scale = 1.0 / max;
    // Settle on one scale under which every training row fits the ball.
    for i in &train {
        scale = scale_into_ball(&ds.x[*i], scale).1;
    }
    let mut clipped = 0;
    for x in out.x.iter_mut() {
        let mut v: Vec<f64> = x.iter().map(|a| a * scale).collect();
        let n = norm(&v);
        if n > 1.0 {
            clipped += 1;
            v = scale_into_ball(&v, 1.0 / n).0;
        }
        *x = v;
    }
    if clipped > 0 {
        log::warn!("{clipped} rows exceeded the unit ball after scaling and were rescaled individually");
    }
    out.norm_scale = ds.norm_scale * scale;
    out
}

/// Seeded 80/20 split with `⌈0.8 n⌉` training rows.
pub fn split_80_20(ds: &Dataset, seed: u64) -> Result<Dataset> {
    let n = ds.len();
    if n < 5 {
        return Err(Error::invalid(format!("an 80/20 split needs at least 5 rows, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from(derive_seed(seed, &[0x5350_4C49])));
    let n_train = (4 * n).div_ceil(5);
    let test = perm.split_off(n_train);
    let mut out = ds.clone();
    out.split = Some(Split {
        train: perm,
        test,
        seed,
    });
    Ok(out)
}

/// Uniform draw from the unit ball in `d` dimensions.
pub fn uniform_in_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&g);
        if n == 0.0 {
            continue;
        }
        let r = rng.random::<f64>().powf(1.0 / d as f64);
        return g.iter().map(|v| v * r / n).collect();
    }
}

/// Regression data from a fixed random two-layer tanh teacher plus Gaussian
/// noise of standard deviation `noise_sigma`. Returns the teacher too.
pub fn synthetic_teacher(
    dim_in: usize,
    dim_out: usize,
    width: usize,
    n: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(Dataset, Mlp)> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid("noise_sigma must be nonnegative"));
    }
    if dim_in == 0 || dim_out == 0 || width == 0 {
        return Err(Error::invalid("teacher dimensions must be positive"));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut wrng = rng_from(derive_seed(seed, &[0x5445_4143]));
    let first: Vec<f64> = (0..width * dim_in).map(|_| wrng.sample(StandardNormal)).collect();
    let out_dist = Normal::new(0.0, 1.0 / (width as f64).sqrt()).expect("valid std");
    let second: Vec<f64> = (0..dim_out * width).map(|_| out_dist.sample(&mut wrng)).collect();
    let teacher = Mlp::from_parts(
        vec![
            Matrix::new(width, dim_in, first)?,
            Matrix::new(dim_out, width, second)?,
        ],
        vec![Activation::Tanh, Activation::Identity],
    )?;
    let mut xrng = rng_from(derive_seed(seed, &[0x5841_4D50]));
    let mut nrng = rng_from(derive_seed(seed, &[0x4E4F_4953]));
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = uniform_in_ball(dim_in, &mut xrng);
        let mut y = teacher.output(&x)?;
        if noise_sigma > 0.0 {
            for v in y.iter_mut() {
                *v += noise_sigma * nrng.sample::<f64, _>(StandardNormal);
            }
        }
        xs.push(x);
        ys.push(Target::Values(y));
    }
    Ok((Dataset::new(xs, ys, TaskKind::Regression)?, teacher))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_fixture() {
        let f = write_tmp("a,b,y\n1,2,3\n4.5,-6,7\n0,0,1e-3\n");
        let ds = load_csv(f.path(), &["y"], TaskKind::Regression).unwrap();
        assert_eq!(ds.x, vec![vec![1.0, 2.0], vec![4.5, -6.0], vec![0.0, 0.0]]);
        assert_eq!(ds.y[2], Target::Values(vec![1e-3]));
    }

    #[test]
    fn load_errors() {
        let f = write_tmp("a,b,y\n");
        assert!(matches!(load_csv(f.path(), &["y"], TaskKind::Regression), Err(Error::EmptyDataset)));
        let f = write_tmp("a,b,y\n1,2,3\n1,2\n");
        assert!(matches!(
            load_csv(f.path(), &["y"], TaskKind::Regression),
            Err(Error::Malformed { row: 2, .. })
        ));
        let f = write_tmp("a,b,y\n1,x,3\n");
        assert!(matches!(
            load_csv(f.path(), &["y"], TaskKind::Regression),
            Err(Error::Malformed { row: 1, col: 1, .. })
        ));
        let f = write_tmp("a,b,c\n1,2,0.5\n");
        assert!(matches!(
            load_csv(f.path(), &["c"], TaskKind::Classification),
            Err(Error::NonIntegerTarget { row: 1 })
        ));
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let (ds, _) = synthetic_teacher(3, 2, 5, 20, 0.1, 4).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, f.path()).unwrap();
        let back = load_csv(f.path(), &["y0", "y1"], TaskKind::Regression).unwrap();
        assert_eq!(back.x.len(), ds.x.len());
        for (a, b) in back.x.iter().flatten().zip(ds.x.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.y, ds.y);
    }

    #[test]
    fn normalization_examples() {
        let ds = Dataset::new(vec![vec![3.0, 4.0]], vec![Target::Values(vec![0.0])], TaskKind::Regression).unwrap();
        let n = normalize_unit_ball(&ds);
        assert!((norm(&n.x[0]) - 1.0).abs() <= 2.0 * f64::EPSILON && norm(&n.x[0]) <= 1.0);

        let unit = Dataset::new(
            vec![vec![1.0, 0.0], vec![0.0, 0.5]],
            vec![Target::Class(0), Target::Class(1)],
            TaskKind::Classification,
        )
        .unwrap();
        assert_eq!(normalize_unit_ball(&unit), unit);

        let zero = Dataset::new(vec![vec![0.0; 3]; 2], vec![Target::Class(0); 2], TaskKind::Classification).unwrap();
        assert_eq!(normalize_unit_ball(&zero).norm_scale, 1.0);
    }

    #[test]
    fn normalization_bounds_test_rows_and_is_idempotent() {
        let mut rng = rng_from(3);
        let xs: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let ds = Dataset::new(xs, vec![Target::Values(vec![0.0]); 50], TaskKind::Regression).unwrap();
        let ds = split_80_20(&ds, 1).unwrap();
        let once = normalize_unit_ball(&ds);
        assert!(once.x.iter().all(|x| norm(x) <= 1.0));
        let max = once.train_indices().iter().map(|i| norm(&once.x[*i])).fold(0.0, f64::max);
        assert!((1.0 - max) <= 4.0 * f64::EPSILON);
        assert_eq!(normalize_unit_ball(&once), once);
    }

    #[test]
    fn split_sizes_and_cover() {
        let ds = Dataset::new(vec![vec![0.0]; 10], vec![Target::Class(0); 10], TaskKind::Classification).unwrap();
        let s = split_80_20(&ds, 7).unwrap();
        let sp = s.split.as_ref().unwrap();
        assert_eq!((sp.train.len(), sp.test.len()), (8, 2));
        let mut all: Vec<usize> = sp.train.iter().chain(&sp.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_80_20(&ds, 7).unwrap(), s);
        let d11 = Dataset::new(vec![vec![0.0]; 11], vec![Target::Class(0); 11], TaskKind::Classification).unwrap();
        assert_eq!(split_80_20(&d11, 0).unwrap().split.unwrap().train.len(), 9);
        let small = Dataset::new(vec![vec![0.0]; 4], vec![Target::Class(0); 4], TaskKind::Classification).unwrap();
        assert!(split_80_20(&small, 0).is_err());
    }

    #[test]
    fn teacher_noise_and_determinism() {
        let (clean, teacher) = synthetic_teacher(8, 1, 16, 100, 0.0, 5).unwrap();
        for (x, y) in clean.x.iter().zip(&clean.y) {
            assert!(norm(x) <= 1.0);
            assert_eq!(Target::Values(teacher.output(x).unwrap()), *y);
        }
        let (noisy, teacher) = synthetic_teacher(8, 1, 16, 10_000, 0.2, 5).unwrap();
        let var = noisy
            .x
            .iter()
            .zip(&noisy.y)
            .map(|(x, y)| (y.as_values()[0] - teacher.output(x).unwrap()[0]).powi(2))
            .sum::<f64>()
            / 10_000.0;
        assert!((var / 0.04 - 1.0).abs() <= 0.05, "{var}");
        assert_eq!(synthetic_teacher(8, 1, 16, 100, 0.2, 5).unwrap().0.x, synthetic_teacher(8, 1, 16, 100, 0.2, 5).unwrap().0.x);
    }
}
