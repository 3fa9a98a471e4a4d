//! File formats: model JSON and constraint CSV with its threshold sidecar.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::constraints::{build_constraint_set, PairSample};
use crate::eval::dataset::LabeledDataset;
use crate::metric::{ConstraintSet, MetricMatrix, PairKind};

/// A learned metric on disk. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    pub u: f64,
    pub l: f64,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
}

/// 17 significant digits, enough to restore any f64 exactly.
fn sig17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    format!("{x:.16e}")
}

impl ModelFile {
    pub fn from_metric(m: &MetricMatrix, u: f64, l: f64) -> Self {
        Self {
            d: m.dim(),
            a: row_major(&m.a),
            g: row_major(&m.g),
            u,
            l,
        }
    }

    pub fn metric(&self) -> Result<MetricMatrix> {
        let n = self.d * self.d;
        if self.d == 0 || self.a.len() != n || self.g.len() != n {
            return Err(Error::Parse(format!(
                "model with d = {} needs {n} entries in A and G, found {} and {}",
                self.d,
                self.a.len(),
                self.g.len()
            )));
        }
        if self.a.iter().chain(&self.g).any(|x| !x.is_finite()) {
            return Err(Error::Parse("model has non-finite entries".into()));
        }
        Ok(MetricMatrix {
            a: DMatrix::from_row_slice(self.d, self.d, &self.a),
            g: DMatrix::from_row_slice(self.d, self.d, &self.g),
        })
    }

    pub fn to_json(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|&x| sig17(x)).collect::<Vec<_>>().join(", ");
        format!(
            "{{\"d\": {}, \"A\": [{}], \"G\": [{}], \"u\": {}, \"l\": {}}}\n",
            self.d,
            list(&self.a),
            list(&self.g),
            sig17(self.u),
            sig17(self.l)
        )
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("model JSON: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&s).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Thresholds stored next to a constraint CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub u: f64,
    pub l: f64,
    pub d: usize,
}

/// Rows `kind,index_p,index_q` with `kind` one of `S` or `D`. A header row
/// is accepted if present.
pub fn read_pairs<R: Read>(reader: R) -> Result<PairSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = PairSample::default();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", row + 1)))?;
        if row == 0 && rec.get(0).is_some_and(|k| k.eq_ignore_ascii_case("kind")) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::Parse(format!("row {}: expected kind,index_p,index_q", row + 1)));
        }
        let idx = |c: usize| {
            rec[c]
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("row {}: bad index {:?}", row + 1, &rec[c])))
        };
        let pair = (idx(1)?, idx(2)?);
        match &rec[0] {
            "S" | "s" => out.similar.push(pair),
            "D" | "d" => out.dissimilar.push(pair),
            k => return Err(Error::Parse(format!("row {}: kind must be S or D, got {k:?}", row + 1))),
        }
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(pairs: &PairSample, mut out: W) -> Result<()> {
    writeln!(out, "kind,index_p,index_q")?;
    for (kind, p, q) in pairs.iter() {
        let k = match kind {
            PairKind::Similar => 'S',
            PairKind::Dissimilar => 'D',
        };
        writeln!(out, "{k},{p},{q}")?;
    }
    Ok(())
}

/// Loads a constraint CSV and its sidecar against the points of `ds`.
pub fn load_constraints(ds: &LabeledDataset, csv_path: &Path, sidecar: &Path) -> Result<(PairSample, ConstraintSet)> {
    let file = std::fs::File::open(csv_path).map_err(|e| Error::Io(format!("{}: {e}", csv_path.display())))?;
    let pairs = read_pairs(file).map_err(|e| Error::Parse(format!("{}: {e}", csv_path.display())))?;
    if pairs.is_empty() {
        return Err(Error::InvalidConstraint(format!("{}: no constraints", csv_path.display())));
    }
    let side = std::fs::read_to_string(sidecar).map_err(|e| Error::Io(format!("{}: {e}", sidecar.display())))?;
    let th: Thresholds = serde_json::from_str(&side).map_err(|e| Error::Parse(format!("{}: {e}", sidecar.display())))?;
    if th.d != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            got: th.d,
        });
    }
    let cs = build_constraint_set(ds, &pairs, th.u, th.l).map_err(|e| match e {
        Error::InvalidConstraint(m) => Error::InvalidConstraint(format!("{}: {m}", csv_path.display())),
        other => other,
    })?;
    Ok((pairs, cs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::factor_transform;

    #[test]
    fn model_round_trip_is_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 0.1, 0.1, std::f64::consts::PI]);
        let m = factor_transform(&a).unwrap();
        let f = ModelFile::from_metric(&m, 2.0f64.sqrt(), 1e-300);
        let back = ModelFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.metric().unwrap(), m);
    }

    #[test]
    fn pairs_round_trip() {
        let p = PairSample {
            similar: vec![(0, 1), (2, 3)],
            dissimilar: vec![(1, 4)],
        };
        let mut buf = Vec::new();
        write_pairs(&p, &mut buf).unwrap();
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), p);
        assert_eq!(read_pairs("S,0,1\nD,2,3\n".as_bytes()).unwrap().len(), 2);
        assert!(read_pairs("X,0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn model_shape_checked() {
        let f = ModelFile {
            d: 2,
            a: vec![1.0; 3],
            g: vec![1.0; 4],
            u: 1.0,
            l: 1.0,
        };
        assert!(f.metric().is_err());
    }
}
