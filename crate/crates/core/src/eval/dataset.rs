use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Points with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub name: String,
}

impl LabeledDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<u32>, name: impl Into<String>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::InvalidDataset(format!("{} points but {} labels", points.len(), labels.len())));
        }
        let d = points.first().map_or(0, |p| p.len());
        if points.is_empty() || d == 0 {
            return Err(Error::InvalidDataset("empty dataset".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::InvalidDataset(format!("row {i} has {} features, expected {d}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {i} has a non-finite value")));
            }
        }
        Ok(Self {
            points,
            labels,
            name: name.into(),
        })
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

    /// Distinct labels in increasing order.
    pub fn classes(&self) -> Vec<u32> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn class_counts(&self) -> BTreeMap<u32, usize> {
        let mut m = BTreeMap::new();
        for &l in &self.labels {
            *m.entry(l).or_insert(0) += 1;
        }
        m
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            name: self.name.clone(),
        }
    }

    /// Reads `f1,...,fd,label` with a header row. Integer labels are kept;
    /// any other labels are numbered in sorted order.
    pub fn from_csv<R: Read>(reader: R, name: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        let mut raw_labels = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("row {}: need at least one feature and a label", row + 1)));
            }
            let feats = (0..rec.len() - 1)
                .map(|c| {
                    rec[c]
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("row {}, column {}: not a number: {:?}", row + 1, c + 1, &rec[c])))
                })
                .collect::<Result<Vec<f64>>>()?;
            points.push(feats);
            raw_labels.push(rec[rec.len() - 1].to_string());
        }
        let labels = match raw_labels.iter().map(|l| l.parse::<u32>()).collect::<std::result::Result<Vec<u32>, _>>() {
            Ok(l) => l,
            Err(_) => {
                let mut names = raw_labels.clone();
                names.sort();
                names.dedup();
                raw_labels
                    .iter()
                    .map(|l| names.binary_search(l).expect("label is present") as u32)
                    .collect()
            }
        };
        Self::new(points, labels, name)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Self::from_csv(file, name).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            Error::InvalidDataset(m) => Error::InvalidDataset(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for (p, l) in self.points.iter().zip(&self.labels) {
            let mut row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
            row.push(l.to_string());
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Multiplies coordinate `axis` of every point by `factor`.
    pub fn stretch(&self, axis: usize, factor: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.points {
            p[axis] *= factor;
        }
        out
    }
}

/// Iris, 150 points in 4 dimensions, 3 classes.
pub fn iris() -> LabeledDataset {
    LabeledDataset::from_csv(include_str!("../../data/iris.csv").as_bytes(), "iris").expect("bundled iris parses")
}

/// Wine, 178 points in 13 dimensions, 3 classes.
pub fn wine() -> LabeledDataset {
    LabeledDataset::from_csv(include_str!("../../data/wine.csv").as_bytes(), "wine").expect("bundled wine parses")
}

/// Stretch applied to the y axis of the synthetic data.
pub const SYNTH_STRETCH: f64 = 40.0;

/// 50 points from N((-3,0), I) with label 0 and 50 from N((3,0), I) with
/// label 1, before any stretching.
pub fn synth_two_gaussians_raw(seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(100);
    let mut labels = Vec::with_capacity(100);
    for (label, mx) in [(0u32, -3.0), (1, 3.0)] {
        for _ in 0..50 {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            points.push(vec![mx + x, y]);
            labels.push(label);
        }
    }
    LabeledDataset {
        points,
        labels,
        name: "synthetic".into(),
    }
}

/// The two-Gaussian data with its y axis stretched by 40.
pub fn synth_two_gaussians(seed: u64) -> LabeledDataset {
    synth_two_gaussians_raw(seed).stretch(1, SYNTH_STRETCH)
}

/// Appends five points from N((-100,0), I) labeled with the first class of
/// the unstretched synthetic data, then stretches y by 40.
pub fn poison_dataset(raw: &LabeledDataset, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x706f_6973_6f6e);
    let mut out = raw.clone();
    let first = raw.labels[0];
    for _ in 0..5 {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        out.points.push(vec![-100.0 + x, y]);
        out.labels.push(first);
    }
    out.name = format!("{}-poisoned", raw.name);
    out.stretch(1, SYNTH_STRETCH)
}
