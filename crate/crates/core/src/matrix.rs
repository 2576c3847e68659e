//! Symmetric dissimilarity matrices and their CSV representation.

use std::collections::HashSet;
use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// What the entries of a [`DissimilarityMatrix`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissimilarityKind {
    /// Posterior probability that a pair is *not* co-clustered; entries in `[0, 1]`.
    Posterior,
    /// Any other nonnegative dissimilarity (Euclidean distance, external input).
    Metric,
}

impl DissimilarityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DissimilarityKind::Posterior => "posterior",
            DissimilarityKind::Metric => "metric",
        }
    }
}

/// Symmetric `n x n` matrix with zero diagonal, keyed by observation ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    ids: Vec<String>,
    data: Vec<f64>,
    kind: DissimilarityKind,
}

impl DissimilarityMatrix {
    /// Builds a matrix from row-major entries, validating symmetry, the zero
    /// diagonal, finiteness and (for posterior matrices) the `[0, 1]` range.
    pub fn new(ids: Vec<String>, data: Vec<f64>, kind: DissimilarityKind) -> Result<Self> {
        let n = ids.len();
        if n < 1 {
            return Err(Error::InvalidInput("dissimilarity matrix needs at least one id".into()));
        }
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for {n} ids, got {}",
                n * n,
                data.len()
            )));
        }
        check_unique(&ids)?;
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidInput(format!("diagonal entry for `{}` is not zero", ids[i])));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "entry ({}, {}) = {v} is not a finite nonnegative number",
                        ids[i], ids[j]
                    )));
                }
                if v != data[j * n + i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({}, {})",
                        ids[i], ids[j]
                    )));
                }
                if kind == DissimilarityKind::Posterior && v > 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "posterior dissimilarity ({}, {}) = {v} exceeds 1",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        Ok(Self { ids, data, kind })
    }

    /// Builds a matrix from a pairwise function evaluated on `i < j`.
    pub fn from_fn(
        ids: Vec<String>,
        kind: DissimilarityKind,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let n = ids.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::new(ids, data, kind)
    }

    /// Euclidean distances between the rows of `values`.
    pub fn euclidean(ids: Vec<String>, values: &DMatrix<f64>) -> Result<Self> {
        if ids.len() != values.nrows() {
            return Err(Error::InvalidInput("ids and rows differ in length".into()));
        }
        Self::from_fn(ids, DissimilarityKind::Metric, |i, j| {
            (values.row(i) - values.row(j)).norm()
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ids.len() + j]
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn kind(&self) -> DissimilarityKind {
        self.kind
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entries above the diagonal in row-major order `(0,1), (0,2), ..., (n-2,n-1)`.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Matrix restricted (and reordered) to `rows`.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        let m = rows.len();
        let mut data = vec![0.0; m * m];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in rows.iter().enumerate() {
                data[a * m + b] = self.get(i, j);
            }
        }
        Self::new(ids, data, self.kind)
    }

    /// Multiplies every entry by `c > 0`; the result is always a metric matrix.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let data = self.data.iter().map(|v| v * c).collect();
        Self::new(self.ids.clone(), data, DissimilarityKind::Metric)
    }

    /// Writes the matrix as CSV: the header row holds the kind followed by the
    /// ids, each body row holds an id followed by entries with 6 decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![self.kind.as_str().to_string()];
        header.extend(self.ids.iter().cloned());
        w.write_record(&header)?;
        let n = self.n();
        for i in 0..n {
            let mut row = Vec::with_capacity(n + 1);
            row.push(self.ids[i].clone());
            row.extend((0..n).map(|j| format!("{:.6}", self.get(i, j))));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`write_csv`](Self::write_csv). A
    /// top-left cell of `id` is accepted and read as a metric matrix.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut records = r.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Parse { line: 1, message: "empty file".into() })??;
        let kind = match header.get(0).map(str::trim) {
            Some("posterior") => DissimilarityKind::Posterior,
            Some("metric") | Some("id") | Some("") => DissimilarityKind::Metric,
            Some(other) => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unknown matrix kind `{other}`"),
                })
            }
            None => unreachable!(),
        };
        let ids: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        let n = ids.len();
        let mut data = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (offset, rec) in records.enumerate() {
            let line = offset + 2;
            let rec = rec?;
            if rec.len() != n + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", n + 1, rec.len()),
                });
            }
            if rec[0].trim() != ids.get(rows).map(String::as_str).unwrap_or("") {
                return Err(Error::Parse {
                    line,
                    message: format!("row id `{}` does not match column order", &rec[0]),
                });
            }
            for field in rec.iter().skip(1) {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{field}` is not a number"),
                })?;
                data.push(v);
            }
            rows += 1;
        }
        if rows != n {
            return Err(Error::Parse {
                line: rows + 1,
                message: format!("expected {n} rows, found {rows}"),
            });
        }
        Self::new(ids, data, kind)
    }
}

pub(crate) fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate id `{id}`")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("o{i}")).collect()
    }

    #[test]
    fn rejects_asymmetric_and_posterior_range() {
        let err = DissimilarityMatrix::new(ids(2), vec![0.0, 1.0, 2.0, 0.0], DissimilarityKind::Metric);
        assert!(err.is_err());
        let err = DissimilarityMatrix::new(ids(2), vec![0.0, 1.5, 1.5, 0.0], DissimilarityKind::Posterior);
        assert!(err.is_err());
        let ok = DissimilarityMatrix::new(ids(2), vec![0.0, 0.5, 0.5, 0.0], DissimilarityKind::Posterior);
        assert!(ok.is_ok());
    }

    #[test]
    fn euclidean_pair() {
        let v = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 3.0, 0.0]);
        let d = DissimilarityMatrix::euclidean(ids(2), &v).unwrap();
        assert_eq!(d.get(0, 1), 3.0);
    }

    #[test]
    fn csv_roundtrip_six_decimals() {
        let d = DissimilarityMatrix::from_fn(ids(3), DissimilarityKind::Posterior, |i, j| {
            (i + j) as f64 / 7.0
        })
        .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("posterior,o0,o1,o2\n"));
        assert!(text.contains("0.142857"));
        let back = DissimilarityMatrix::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.kind(), DissimilarityKind::Posterior);
        for i in 0..3 {
            for j in 0..3 {
                assert!((back.get(i, j) - d.get(i, j)).abs() < 5e-7);
            }
        }
    }

    #[test]
    fn csv_reports_line_of_bad_field() {
        let text = "metric,a,b\na,0,x\nb,1,0\n";
        match DissimilarityMatrix::read_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
