//! Variable transforms, standardization, VIF pruning and percentile (PIT)
//! representations.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::check_unique;
use crate::stats::average_ranks;

/// How a raw column is mapped onto the continuous scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariableKind {
    Continuous,
    Proportion,
    SkewedPositive,
}

impl VariableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Continuous => "continuous",
            VariableKind::Proportion => "proportion",
            VariableKind::SkewedPositive => "skewed_positive",
        }
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "continuous" => Ok(VariableKind::Continuous),
            "proportion" => Ok(VariableKind::Proportion),
            "skewed_positive" => Ok(VariableKind::SkewedPositive),
            other => Err(Error::Config(format!(
                "unknown variable kind `{other}` (expected continuous, proportion or skewed_positive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
}

/// Center and scale applied to one standardized column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnScaling {
    pub center: f64,
    pub scale: f64,
}

/// Per-organisation variables: `n` rows (ids) by `d` columns (specs).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    specs: Vec<VariableSpec>,
    values: DMatrix<f64>,
    scaling: Option<Vec<ColumnScaling>>,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>, specs: Vec<VariableSpec>, values: DMatrix<f64>) -> Result<Self> {
        if ids.len() < 2 {
            return Err(Error::InvalidInput("a feature table needs at least 2 rows".into()));
        }
        if specs.is_empty() {
            return Err(Error::InvalidInput("a feature table needs at least 1 variable".into()));
        }
        if values.nrows() != ids.len() || values.ncols() != specs.len() {
            return Err(Error::InvalidInput(format!(
                "values are {}x{} but there are {} ids and {} variables",
                values.nrows(),
                values.ncols(),
                ids.len(),
                specs.len()
            )));
        }
        check_unique(&ids)?;
        let names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
        check_unique(&names).map_err(|_| Error::InvalidInput("variable names must be unique".into()))?;
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::Domain {
                        variable: specs[j].name.clone(),
                        row: i + 1,
                        message: "missing or non-finite value".into(),
                    });
                }
            }
        }
        Ok(Self {
            ids,
            specs,
            values,
            scaling: None,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn d(&self) -> usize {
        self.specs.len()
    }

    pub fn is_standardized(&self) -> bool {
        self.scaling.is_some()
    }

    pub fn scaling(&self) -> Option<&[ColumnScaling]> {
        self.scaling.as_deref()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    /// Keeps the columns at `cols`, in that order. Scaling parameters follow their columns.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let values = self.values.select_columns(cols);
        Self {
            ids: self.ids.clone(),
            specs: cols.iter().map(|&c| self.specs[c].clone()).collect(),
            values,
            scaling: self
                .scaling
                .as_ref()
                .map(|s| cols.iter().map(|&c| s[c]).collect()),
        }
    }

    /// Keeps the rows at `rows`, in that order. The standardized flag and
    /// scaling are retained; the subset is not re-standardized.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            specs: self.specs.clone(),
            values: self.values.select_rows(rows),
            scaling: self.scaling.clone(),
        }
    }

    /// Maps standardized values back to the transformed scale.
    pub fn destandardized(&self) -> Result<DMatrix<f64>> {
        let scaling = self.scaling.as_ref().ok_or(Error::NotStandardized)?;
        let mut out = self.values.clone();
        for (j, s) in scaling.iter().enumerate() {
            for v in out.column_mut(j).iter_mut() {
                *v = *v * s.scale + s.center;
            }
        }
        Ok(out)
    }

    /// Applies [`transform_variable`] to every column.
    pub fn transformed(&self) -> Result<Self> {
        if self.is_standardized() {
            return Err(Error::AlreadyStandardized);
        }
        let mut values = self.values.clone();
        for (j, spec) in self.specs.iter().enumerate() {
            let col = transform_variable(&self.column(j), spec.kind, &spec.name)?;
            values.set_column(j, &DVector::from_vec(col));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    /// Reads a table whose header is `id,<var>,...`; every variable must have
    /// a kind in `kinds`.
    pub fn read_csv<R: Read>(input: R, kinds: &HashMap<String, VariableKind>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 2 || header[0].trim() != "id" {
            return Err(Error::Parse {
                line: 1,
                message: "header must start with `id` followed by at least one variable".into(),
            });
        }
        let mut specs = Vec::with_capacity(header.len() - 1);
        for name in header.iter().skip(1) {
            let name = name.trim().to_string();
            let kind = *kinds
                .get(&name)
                .ok_or_else(|| Error::Config(format!("no kind configured for variable `{name}`")))?;
            specs.push(VariableSpec { name, kind });
        }
        for name in kinds.keys() {
            if !specs.iter().any(|s| &s.name == name) {
                return Err(Error::Config(format!("kind configured for unknown variable `{name}`")));
            }
        }
        let d = specs.len();
        let mut ids = Vec::new();
        let mut flat = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != d + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", d + 1, rec.len()),
                });
            }
            let id = rec[0].trim().to_string();
            if ids.contains(&id) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate id `{id}`"),
                });
            }
            ids.push(id);
            for (j, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{field}` in column `{}` is not a number", specs[j].name),
                })?;
                flat.push(v);
            }
        }
        let values = DMatrix::from_row_slice(ids.len(), d, &flat);
        Self::new(ids, specs, values)
    }

    /// Writes `id,<var>,...` with values at full precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        header.extend(self.names());
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut row = vec![self.ids[i].clone()];
            row.extend((0..self.d()).map(|j| format!("{}", self.values[(i, j)])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Marks a table read back from disk as standardized after checking that
    /// every column has mean 0 and standard deviation 1 within `tol`.
    pub fn assume_standardized(mut self, tol: f64) -> Result<Self> {
        if self.is_standardized() {
            return Ok(self);
        }
        let mut scaling = Vec::with_capacity(self.d());
        for j in 0..self.d() {
            let (m, s) = mean_sd(&self.column(j));
            if m.abs() > tol || (s - 1.0).abs() > tol {
                return Err(Error::NotStandardized);
            }
            scaling.push(ColumnScaling { center: 0.0, scale: 1.0 });
        }
        self.scaling = Some(scaling);
        Ok(self)
    }
}

/// Parses `name=kind` lines; blank lines and `#` comments are ignored.
pub fn parse_kinds(text: &str) -> Result<HashMap<String, VariableKind>> {
    let mut kinds = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, kind) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected `name=kind`, found `{line}`"),
        })?;
        let kind: VariableKind = kind.parse().map_err(|e: Error| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if kinds.insert(name.trim().to_string(), kind).is_some() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("variable `{}` configured twice", name.trim()),
            });
        }
    }
    Ok(kinds)
}

/// Maps a raw column onto the continuous scale.
///
/// Proportions go through a logit after moving exact 0 and 1 to `1/(2n)` and
/// `1 - 1/(2n)`; skewed positive values are logged; continuous values pass through.
pub fn transform_variable(values: &[f64], kind: VariableKind, name: &str) -> Result<Vec<f64>> {
    let n = values.len();
    let domain = |row: usize, message: String| Error::Domain {
        variable: name.to_string(),
        row: row + 1,
        message,
    };
    match kind {
        VariableKind::Continuous => Ok(values.to_vec()),
        VariableKind::SkewedPositive => values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(domain(i, format!("{v} is not positive")))
                }
            })
            .collect(),
        VariableKind::Proportion => {
            let shift = 1.0 / (2.0 * n as f64);
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(domain(i, format!("{v} is outside [0, 1]")));
                    }
                    let v = if v == 0.0 {
                        shift
                    } else if v == 1.0 {
                        1.0 - shift
                    } else {
                        v
                    };
                    Ok((v / (1.0 - v)).ln())
                })
                .collect()
        }
    }
}

fn mean_sd(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let m = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

/// Centers each column by its mean and divides by its sample standard
/// deviation (denominator `n - 1`).
pub fn standardize(table: &FeatureTable) -> Result<FeatureTable> {
    if table.is_standardized() {
        return Err(Error::AlreadyStandardized);
    }
    let mut values = table.values.clone();
    let mut scaling = Vec::with_capacity(table.d());
    for (j, spec) in table.specs.iter().enumerate() {
        let (center, scale) = mean_sd(&table.column(j));
        let spread = table.column(j).iter().fold(0.0f64, |acc, v| acc.max((v - center).abs()));
        if !(scale > 0.0) || spread <= 1e-12 * center.abs().max(1.0) {
            return Err(Error::ZeroVariance(spec.name.clone()));
        }
        for v in values.column_mut(j).iter_mut() {
            *v = (*v - center) / scale;
        }
        scaling.push(ColumnScaling { center, scale });
    }
    Ok(FeatureTable {
        values,
        scaling: Some(scaling),
        ..table.clone()
    })
}

/// One event in the VIF pruning trace.
#[derive(Debug, Clone, PartialEq)]
pub enum VifStep {
    /// `variable` was removed with the given VIF (possibly infinite).
    Removed { variable: String, vif: f64 },
    /// Pruning stopped because fewer than three variables remain, although
    /// `variable` still exceeds the threshold.
    Stopped { remaining: usize, variable: String, vif: f64 },
}

impl fmt::Display for VifStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VifStep::Removed { variable, vif } => write!(f, "removed {variable} (VIF {})", fmt_vif(*vif)),
            VifStep::Stopped { remaining, variable, vif } => write!(
                f,
                "warning: stopped with {remaining} variables remaining; {variable} still has VIF {}",
                fmt_vif(*vif)
            ),
        }
    }
}

fn fmt_vif(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}

/// `1 - R^2` below this counts as exact collinearity (infinite VIF).
const COLLINEAR_TOL: f64 = 1e-12;

/// Variance inflation factor of every column, each regressed (with
/// intercept) on all the others. Exact collinearity yields `+inf`.
pub fn vif_values(values: &DMatrix<f64>) -> Vec<f64> {
    let (n, d) = values.shape();
    let mut centered = values.clone();
    for j in 0..d {
        let m = centered.column(j).mean();
        for v in centered.column_mut(j).iter_mut() {
            *v -= m;
        }
    }
    (0..d)
        .map(|j| {
            if d == 1 {
                return 1.0;
            }
            let y = centered.column(j).into_owned();
            let tss = y.norm_squared();
            let others: Vec<usize> = (0..d).filter(|&c| c != j).collect();
            let x = centered.select_columns(&others);
            let svd = x.clone().svd(true, true);
            let max_sv = svd.singular_values.max();
            let eps = max_sv * 1e-12 * (n.max(d) as f64);
            let beta = match svd.solve(&y, eps) {
                Ok(b) => b,
                Err(_) => return f64::INFINITY,
            };
            let rss = (&y - x * beta).norm_squared();
            let unexplained = rss / tss;
            if unexplained < COLLINEAR_TOL {
                f64::INFINITY
            } else {
                1.0 / unexplained
            }
        })
        .collect()
}

/// Iteratively removes the variable with the largest VIF while it exceeds
/// `threshold`, recomputing after each removal. Among tied maxima the
/// earliest column is kept, so the latest tied column is removed.
pub fn vif_prune(table: &FeatureTable, threshold: f64) -> Result<(FeatureTable, Vec<VifStep>)> {
    if !table.is_standardized() {
        return Err(Error::NotStandardized);
    }
    if !(threshold > 1.0) {
        return Err(Error::Config(format!("VIF threshold must exceed 1, got {threshold}")));
    }
    let mut keep: Vec<usize> = (0..table.d()).collect();
    let mut trace = Vec::new();
    loop {
        let current = table.values.select_columns(&keep);
        let vifs = vif_values(&current);
        let mut worst = 0;
        for (pos, &v) in vifs.iter().enumerate() {
            if v >= vifs[worst] {
                worst = pos;
            }
        }
        let vif = vifs[worst];
        if !(vif > threshold) {
            break;
        }
        let variable = table.specs[keep[worst]].name.clone();
        if keep.len() < 3 {
            trace.push(VifStep::Stopped {
                remaining: keep.len(),
                variable,
                vif,
            });
            break;
        }
        trace.push(VifStep::Removed { variable, vif });
        keep.remove(worst);
    }
    Ok((table.select_columns(&keep), trace))
}

/// Rank-based percentiles `(r - 0.5) / n` with average ranks for ties.
pub fn pit(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    average_ranks(values).into_iter().map(|r| (r - 0.5) / n).collect()
}

/// Quintile descriptors, lowest bin first.
pub const QUINTILE_LABELS: [&str; 5] = [
    "lowest 0-20%",
    "low 20-40%",
    "middle 40-60%",
    "high 60-80%",
    "highest 80-100%",
];

/// Quintile assignment for one variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuintileBins {
    /// Labels in `1..=5`, one per observation.
    pub bins: Vec<u8>,
    /// Every value tied; all observations were placed in the middle bin.
    pub degenerate: bool,
}

/// Assigns quintile bins by rank. An observation with average rank `r`
/// (1-based) goes to bin `floor(5 (r - 1) / n) + 1`; without ties this gives
/// every bin `floor(n/5)` or `ceil(n/5)` members, the larger bins first
/// within each cycle (n = 7 gives sizes 2, 1, 2, 1, 1). A fully tied input
/// is placed in bin 3 and flagged.
pub fn quintile_bin(u: &[f64]) -> QuintileBins {
    let n = u.len();
    if n == 0 {
        return QuintileBins { bins: vec![], degenerate: false };
    }
    if u.iter().all(|&v| v == u[0]) {
        return QuintileBins {
            bins: vec![3; n],
            degenerate: true,
        };
    }
    let ranks = average_ranks(u);
    let bins = ranks
        .iter()
        .map(|&r| {
            let b = ((5.0 * (r - 1.0)) / n as f64).floor() as i64 + 1;
            b.clamp(1, 5) as u8
        })
        .collect();
    QuintileBins { bins, degenerate: false }
}

/// Percentiles and quintile bins for every variable of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileTable {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    /// `n x d` PIT values in `(0, 1)`.
    pub u: DMatrix<f64>,
    /// `n x d` quintile labels in `1..=5`.
    pub bins: DMatrix<u8>,
    /// Variables whose bins were degenerate (fully tied).
    pub degenerate: Vec<String>,
}

impl PercentileTable {
    pub fn from_table(table: &FeatureTable) -> Self {
        let (n, d) = (table.n(), table.d());
        let mut u = DMatrix::zeros(n, d);
        let mut bins = DMatrix::from_element(n, d, 0u8);
        let mut degenerate = Vec::new();
        for j in 0..d {
            let col = pit(&table.column(j));
            let qb = quintile_bin(&col);
            if qb.degenerate {
                degenerate.push(table.specs[j].name.clone());
            }
            for i in 0..n {
                u[(i, j)] = col[i];
                bins[(i, j)] = qb.bins[i];
            }
        }
        Self {
            ids: table.ids.clone(),
            names: table.names(),
            u,
            bins,
            degenerate,
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id)
    }

    /// Writes `id,<var>:pit,<var>:bin,...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id".to_string()];
        for name in &self.names {
            header.push(format!("{name}:pit"));
            header.push(format!("{name}:bin"));
        }
        w.write_record(&header)?;
        for i in 0..self.ids.len() {
            let mut row = vec![self.ids[i].clone()];
            for j in 0..self.names.len() {
                row.push(format!("{:.6}", self.u[(i, j)]));
                row.push(self.bins[(i, j)].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let bad_header = || Error::Parse {
            line: 1,
            message: "expected header `id,<var>:pit,<var>:bin,...`".into(),
        };
        if header.len() < 3 || header.len() % 2 != 1 || header[0].trim() != "id" {
            return Err(bad_header());
        }
        let mut names = Vec::new();
        for pair in header.iter().skip(1).collect::<Vec<_>>().chunks(2) {
            let name = pair[0].strip_suffix(":pit").ok_or_else(bad_header)?;
            if pair[1].strip_suffix(":bin") != Some(name) {
                return Err(bad_header());
            }
            names.push(name.to_string());
        }
        let d = names.len();
        let (mut ids, mut us, mut bs) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != 2 * d + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", 2 * d + 1, rec.len()),
                });
            }
            ids.push(rec[0].trim().to_string());
            for j in 0..d {
                let u: f64 = rec[1 + 2 * j].trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad percentile `{}`", &rec[1 + 2 * j]),
                })?;
                let b: u8 = rec[2 + 2 * j].trim().parse().ok().filter(|b| (1..=5).contains(b)).ok_or_else(|| {
                    Error::Parse {
                        line,
                        message: format!("bad quintile `{}`", &rec[2 + 2 * j]),
                    }
                })?;
                us.push(u);
                bs.push(b);
            }
        }
        check_unique(&ids)?;
        let n = ids.len();
        Ok(Self {
            ids,
            names,
            u: DMatrix::from_row_slice(n, d, &us),
            bins: DMatrix::from_row_slice(n, d, &bs),
            degenerate: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table(cols: &[&[f64]]) -> FeatureTable {
        let n = cols[0].len();
        let d = cols.len();
        let ids = (0..n).map(|i| format!("r{i}")).collect();
        let specs = (0..d)
            .map(|j| VariableSpec {
                name: format!("v{j}"),
                kind: VariableKind::Continuous,
            })
            .collect();
        let mut m = DMatrix::zeros(n, d);
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        FeatureTable::new(ids, specs, m).unwrap()
    }

    #[test]
    fn logit_examples() {
        let t = transform_variable(&[0.5, 0.8], VariableKind::Proportion, "p").unwrap();
        assert_eq!(t[0], 0.0);
        assert_abs_diff_eq!(t[1], 1.3862943611198906, epsilon = 1e-12);
        let mut col = vec![0.3; 50];
        col[0] = 0.0;
        let t = transform_variable(&col, VariableKind::Proportion, "p").unwrap();
        assert_abs_diff_eq!(t[0], -4.59511985013459, epsilon = 1e-12);
        col[1] = 1.0;
        let t = transform_variable(&col, VariableKind::Proportion, "p").unwrap();
        assert_abs_diff_eq!(t[1], 4.59511985013459, epsilon = 1e-12);
    }

    #[test]
    fn domain_errors_name_variable_and_row() {
        let err = transform_variable(&[0.2, 1.2], VariableKind::Proportion, "share").unwrap_err();
        assert!(matches!(err, Error::Domain { ref variable, row: 2, .. } if variable == "share"));
        let err = transform_variable(&[1.0, 0.0], VariableKind::SkewedPositive, "size").unwrap_err();
        assert!(matches!(err, Error::Domain { row: 2, .. }));
        assert_eq!(
            transform_variable(&[-3.0], VariableKind::Continuous, "x").unwrap(),
            vec![-3.0]
        );
    }

    #[test]
    fn standardize_examples() {
        let t = standardize(&table(&[&[1.0, 2.0, 3.0]])).unwrap();
        assert_eq!(t.column(0), vec![-1.0, 0.0, 1.0]);
        let err = standardize(&table(&[&[5.0, 5.0, 5.0]])).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(ref c) if c == "v0"));
        let already = [-1.0, 0.0, 1.0];
        let t = standardize(&table(&[&already])).unwrap();
        for (a, b) in t.column(0).iter().zip(already) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
        assert!(matches!(standardize(&t), Err(Error::AlreadyStandardized)));
    }

    #[test]
    fn vif_duplicate_keeps_earlier() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, -1.0, 2.0, 0.5, -0.3, 0.7];
        let t = standardize(&table(&[&a, &b, &a])).unwrap();
        let (kept, trace) = vif_prune(&t, 10.0).unwrap();
        assert_eq!(kept.names(), vec!["v0", "v1"]);
        assert_eq!(trace.len(), 1);
        assert!(matches!(&trace[0], VifStep::Removed { variable, vif } if variable == "v2" && vif.is_infinite()));
    }

    #[test]
    fn vif_orthogonal_is_one() {
        // Centered, mutually orthogonal columns.
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let c = [1.0, -1.0, -1.0, 1.0];
        let t = standardize(&table(&[&a, &b, &c])).unwrap();
        for v in vif_values(t.values()) {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        let (kept, trace) = vif_prune(&t, 10.0).unwrap();
        assert_eq!(kept.d(), 3);
        assert!(trace.is_empty());
    }

    #[test]
    fn vif_stops_below_three_variables() {
        let a = [1.0, 2.0, 3.0, 4.5];
        let t = standardize(&table(&[&a, &a])).unwrap();
        let (kept, trace) = vif_prune(&t, 10.0).unwrap();
        assert_eq!(kept.d(), 2);
        assert!(matches!(trace[0], VifStep::Stopped { remaining: 2, .. }));
    }

    #[test]
    fn pit_examples() {
        let u = pit(&[3.0, 1.0, 2.0]);
        assert_abs_diff_eq!(u[0], 5.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[1], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[2], 0.5, epsilon = 1e-15);
        assert_eq!(pit(&[7.0]), vec![0.5]);
        assert_eq!(pit(&[4.0, 4.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn quintile_examples() {
        let vals: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(quintile_bin(&pit(&vals)).bins, vec![1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
        let vals: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let qb = quintile_bin(&pit(&vals));
        let mut counts = [0; 5];
        for b in qb.bins {
            counts[b as usize - 1] += 1;
        }
        assert_eq!(counts, [2, 1, 2, 1, 1]);
        let tied = quintile_bin(&pit(&[2.0; 6]));
        assert!(tied.degenerate);
        assert_eq!(tied.bins, vec![3; 6]);
    }

    #[test]
    fn parse_kinds_reports_unknown_token() {
        let kinds = parse_kinds("a=continuous\n# note\nb = proportion\n").unwrap();
        assert_eq!(kinds["b"], VariableKind::Proportion);
        let err = parse_kinds("a=continuous\nb=ratio\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, ref message } if message.contains("`ratio`")));
    }

    #[test]
    fn read_csv_duplicate_id() {
        let kinds = parse_kinds("x=continuous").unwrap();
        let err = FeatureTable::read_csv("id,x\na,1\nb,2\na,3\n".as_bytes(), &kinds).unwrap_err();
        assert!(err.to_string().contains("duplicate id `a`"), "{err}");
        let err = FeatureTable::read_csv("id,x\na,1\nb,zz\n".as_bytes(), &kinds).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    proptest! {
        #[test]
        fn logit_strictly_increasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!(a < b);
            let t = transform_variable(&[a, b], VariableKind::Proportion, "p").unwrap();
            prop_assert!(t[0] < t[1]);
        }

        #[test]
        fn standardize_roundtrip(col in prop::collection::vec(-1e3f64..1e3, 3..40)) {
            let spread = col.iter().cloned().fold(f64::MIN, f64::max) - col.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let t = standardize(&table(&[&col])).unwrap();
            let (m, s) = mean_sd(&t.column(0));
            prop_assert!(m.abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
            let back = t.destandardized().unwrap();
            for (i, v) in col.iter().enumerate() {
                prop_assert!((back[(i, 0)] - v).abs() < 1e-9);
            }
        }

        #[test]
        fn pit_uniform_and_bins_balanced(vals in prop::collection::hash_set(-100_000i64..100_000, 5..300)) {
            let vals: Vec<f64> = vals.into_iter().map(|v| v as f64).collect();
            let n = vals.len();
            let mut u = pit(&vals);
            prop_assert!(u.iter().all(|&x| x > 0.0 && x < 1.0));
            let qb = quintile_bin(&u);
            let mut counts = [0usize; 5];
            for b in &qb.bins { counts[*b as usize - 1] += 1; }
            prop_assert_eq!(counts.iter().sum::<usize>(), n);
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            u.sort_by(f64::total_cmp);
            let ks = u.iter().enumerate().map(|(i, &x)| {
                let lo = (x - i as f64 / n as f64).abs();
                let hi = (x - (i + 1) as f64 / n as f64).abs();
                lo.max(hi)
            }).fold(0.0, f64::max);
            prop_assert!(ks < 1.36 / (n as f64).sqrt());
        }
    }
}
