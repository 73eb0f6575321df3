//! Labelled datasets: the synthetic four-quadrant generator, shuffled
//! splits and CSV I/O.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textio;

/// Points of a common dimension with labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("dataset must contain at least one point".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        let n = points[0].len();
        if n == 0 {
            return Err(Error::InvalidArgument("points must have at least one feature".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        validate_labels(&labels)?;
        Ok(Dataset { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Writes a header `x1,…,xn,y` followed by one row per point.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        let header: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",y\n");
        for (p, y) in self.points.iter().zip(&self.labels) {
            for v in p {
                write!(out, "{v},").expect("writing to a String cannot fail");
            }
            writeln!(out, "{}", *y as i64).expect("writing to a String cannot fail");
        }
        out
    }

    pub fn from_csv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "empty file"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols.last() != Some(&"y") {
            return Err(Error::parse(origin, 1, "header must be x1,...,xn,y"));
        }
        let n = cols.len() - 1;

        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (no, line) in lines {
            let line_no = no + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != n + 1 {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("expected {} fields, found {}", n + 1, fields.len()),
                ));
            }
            let mut row = Vec::with_capacity(n);
            for f in &fields[..n] {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::parse(origin, line_no, format!("not a number: {f:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(origin, line_no, format!("non-finite value {f:?}")));
                }
                row.push(v);
            }
            let y: f64 = fields[n]
                .parse()
                .map_err(|_| Error::parse(origin, line_no, format!("not a label: {:?}", fields[n])))?;
            if y != 1.0 && y != -1.0 {
                return Err(Error::parse(origin, line_no, format!("label must be +1 or -1, got {}", fields[n])));
            }
            points.push(row);
            labels.push(y);
        }
        if points.is_empty() {
            return Err(Error::parse(origin, 1, "no data rows"));
        }
        Dataset::new(points, labels)
    }
}

pub(crate) fn validate_labels(labels: &[f64]) -> Result<()> {
    for (index, &value) in labels.iter().enumerate() {
        if value != 1.0 && value != -1.0 {
            return Err(Error::InvalidLabel { index, value });
        }
    }
    Ok(())
}

/// Uniform points on `[-1, 1]²` that are at least `margin` away from both
/// axes, labelled `+1` in the first and third quadrants and `-1` otherwise.
pub fn gen_quadrant_data(m: usize, margin: f64, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if !(0.0..0.5).contains(&margin) {
        return Err(Error::InvalidArgument(format!("margin must lie in [0, 0.5), got {margin}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    while points.len() < m {
        let x1: f64 = rng.gen_range(-1.0..=1.0);
        let x2: f64 = rng.gen_range(-1.0..=1.0);
        if x1.abs() < margin || x2.abs() < margin || x1 * x2 == 0.0 {
            continue;
        }
        labels.push(if x1 * x2 > 0.0 { 1.0 } else { -1.0 });
        points.push(vec![x1, x2]);
    }
    Dataset::new(points, labels)
}

/// Shuffled split with `floor(m·train_fraction)` training rows.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let m = dataset.len();
    let n_train = (m as f64 * train_fraction).floor() as usize;
    if n_train == 0 || n_train == m {
        return Err(Error::InvalidArgument(format!(
            "split of {m} rows at fraction {train_fraction} leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((dataset.subset(&idx[..n_train]), dataset.subset(&idx[n_train..])))
}

pub fn read_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Dataset::from_csv(&text, path)
}

pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    textio::write_atomic(path, &dataset.to_csv())
}
