//! Goodness-of-fit indices computed from a dissimilarity matrix and a
//! partition, and the proportion of connections retained (PCR) between two
//! partitions.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::DissimilarityMatrix;
use crate::partition::Partition;
use crate::stats::pearson;

/// Index used to choose among candidate partitions; larger is better for all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitIndex {
    /// Average silhouette width.
    Asw,
    /// Calinski-Harabasz.
    Ch,
    PearsonGamma,
}

impl FitIndex {
    pub fn as_str(self) -> &'static str {
        match self {
            FitIndex::Asw => "asw",
            FitIndex::Ch => "ch",
            FitIndex::PearsonGamma => "pg",
        }
    }

    pub fn evaluate(self, d: &DissimilarityMatrix, p: &Partition) -> Result<f64> {
        match self {
            FitIndex::Asw => silhouette(d, p).map(|s| s.asw),
            FitIndex::Ch => ch_index(d, p),
            FitIndex::PearsonGamma => pearson_gamma(d, p),
        }
    }
}

impl fmt::Display for FitIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asw" | "silhouette" => Ok(FitIndex::Asw),
            "ch" | "calinski-harabasz" => Ok(FitIndex::Ch),
            "pg" | "pearson-gamma" | "pearsongamma" => Ok(FitIndex::PearsonGamma),
            other => Err(Error::Config(format!(
                "unknown index `{other}` (expected asw, ch or pg)"
            ))),
        }
    }
}

fn check_ids(d: &DissimilarityMatrix, p: &Partition) -> Result<()> {
    if d.ids() != p.ids() {
        return Err(Error::IdMismatch(
            "partition ids differ from the dissimilarity matrix ids".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteResult {
    /// Mean dissimilarity to the other members of the own cluster.
    pub a: Vec<f64>,
    /// Smallest mean dissimilarity to another cluster.
    pub b: Vec<f64>,
    pub s: Vec<f64>,
    pub asw: f64,
}

/// Silhouette widths; members of singleton clusters get `s = 0`.
pub fn silhouette(d: &DissimilarityMatrix, p: &Partition) -> Result<SilhouetteResult> {
    check_ids(d, p)?;
    let k = p.k();
    if k < 2 {
        return Err(Error::Undefined("silhouette undefined for one cluster".into()));
    }
    let n = p.n();
    let sizes = p.sizes();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..n {
            if j != i {
                sums[p.label(j) - 1] += d.get(i, j);
            }
        }
        let own = p.label(i) - 1;
        let ai = if sizes[own] > 1 {
            sums[own] / (sizes[own] - 1) as f64
        } else {
            0.0
        };
        let bi = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        a[i] = ai;
        b[i] = bi;
        s[i] = if sizes[own] == 1 {
            0.0
        } else {
            let denom = ai.max(bi);
            if denom > 0.0 {
                (bi - ai) / denom
            } else {
                0.0
            }
        };
    }
    let asw = s.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteResult { a, b, s, asw })
}

/// Within- and total sums of squares from squared dissimilarities.
fn sum_of_squares(d: &DissimilarityMatrix, p: &Partition) -> (f64, f64) {
    let n = p.n();
    let sizes = p.sizes();
    let mut within = vec![0.0; p.k()];
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let sq = d.get(i, j) * d.get(i, j);
            total += sq;
            if p.same_cluster(i, j) {
                within[p.label(i) - 1] += sq;
            }
        }
    }
    let w = within
        .iter()
        .zip(&sizes)
        .map(|(s, &m)| s / m as f64)
        .sum::<f64>();
    (w, total / n as f64)
}

/// Calinski-Harabasz index via the pairwise squared-dissimilarity identity:
/// `W = sum_C (1/|C|) sum_{i<j in C} d_ij^2`, `T = (1/n) sum_{i<j} d_ij^2`,
/// `B = T - W`, `CH = (B / (k-1)) / (W / (n-k))`.
///
/// Returns `+inf` when `W = 0` and `B > 0` (clusters of duplicated points).
pub fn ch_index(d: &DissimilarityMatrix, p: &Partition) -> Result<f64> {
    check_ids(d, p)?;
    let (n, k) = (p.n(), p.k());
    if k < 2 || k >= n {
        return Err(Error::Undefined(format!(
            "CH index needs 2 <= k <= n-1 (k = {k}, n = {n})"
        )));
    }
    let (w, t) = sum_of_squares(d, p);
    let b = t - w;
    if w <= 0.0 {
        return if b > 0.0 {
            Ok(f64::INFINITY)
        } else {
            Err(Error::Degenerate("all dissimilarities are zero".into()))
        };
    }
    Ok((b / (k - 1) as f64) / (w / (n - k) as f64))
}

/// Pearson correlation between the dissimilarities and the indicator that a
/// pair lies in different clusters (0 = same, 1 = different), over `i < j`.
pub fn pearson_gamma(d: &DissimilarityMatrix, p: &Partition) -> Result<f64> {
    check_ids(d, p)?;
    if p.k() < 2 {
        return Err(Error::Undefined("Pearson-Gamma undefined for one cluster".into()));
    }
    let n = p.n();
    let mut dv = Vec::with_capacity(n * (n - 1) / 2);
    let mut iv = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dv.push(d.get(i, j));
            iv.push(if p.same_cluster(i, j) { 0.0 } else { 1.0 });
        }
    }
    if iv.iter().all(|&v| v == 1.0) {
        return Err(Error::Degenerate(
            "cluster indicator vector has zero variance (no co-clustered pairs)".into(),
        ));
    }
    pearson(&dv, &iv).ok_or_else(|| {
        Error::Degenerate("dissimilarity vector has zero variance".into())
    })
}

/// All three indices for one partition; `None` where an index is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub asw: Option<f64>,
    pub ch: Option<f64>,
    pub pearson_gamma: Option<f64>,
    pub k: usize,
    pub n: usize,
}

impl IndexReport {
    pub fn compute(d: &DissimilarityMatrix, p: &Partition) -> Self {
        Self {
            asw: silhouette(d, p).ok().map(|s| s.asw),
            ch: ch_index(d, p).ok(),
            pearson_gamma: pearson_gamma(d, p).ok(),
            k: p.k(),
            n: p.n(),
        }
    }

    pub fn get(&self, index: FitIndex) -> Option<f64> {
        match index {
            FitIndex::Asw => self.asw,
            FitIndex::Ch => self.ch,
            FitIndex::PearsonGamma => self.pearson_gamma,
        }
    }

    pub const CSV_HEADER: &'static str = "method,linkage,cap,k,asw,ch,pg";

    /// `method,linkage,cap,k,asw,ch,pg` with empty cells for undefined values.
    pub fn csv_row(&self, method: &str, linkage: &str, cap: Option<usize>) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{method},{linkage},{},{},{},{},{}",
            cap.map(|c| c.to_string()).unwrap_or_default(),
            self.k,
            f(self.asw),
            f(self.ch),
            f(self.pearson_gamma)
        )
    }
}

fn pairs(m: u64) -> u64 {
    m * m.saturating_sub(1) / 2
}

/// Proportion of connections retained: pairs co-clustered in both
/// partitions over pairs co-clustered in `previous`. Directional.
pub fn pcr(previous: &Partition, current: &Partition) -> Result<f64> {
    let current = if previous.ids() == current.ids() {
        current.clone()
    } else {
        current.reindexed(previous.ids())?
    };
    let connected_before: u64 = previous.sizes().iter().map(|&s| pairs(s as u64)).sum();
    if connected_before == 0 {
        return Err(Error::Undefined(
            "PCR undefined: the previous partition has no connected pairs".into(),
        ));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    for i in 0..previous.n() {
        *table.entry((previous.label(i), current.label(i))).or_default() += 1;
    }
    let retained: u64 = table.values().map(|&c| pairs(c)).sum();
    Ok(retained as f64 / connected_before as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DissimilarityKind;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("o{i}")).collect()
    }

    fn two_pairs() -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(ids(4), DissimilarityKind::Metric, |i, j| {
            if i / 2 == j / 2 {
                1.0
            } else {
                5.0
            }
        })
        .unwrap()
    }

    fn line(points: &[f64]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(ids(points.len()), DissimilarityKind::Metric, |i, j| {
            (points[i] - points[j]).abs()
        })
        .unwrap()
    }

    #[test]
    fn silhouette_two_pairs() {
        let p = Partition::from_labels(ids(4), &[1, 1, 2, 2]).unwrap();
        let s = silhouette(&two_pairs(), &p).unwrap();
        for v in &s.s {
            assert!((v - 0.8).abs() < 1e-15);
        }
        assert!((s.asw - 0.8).abs() < 1e-15);
    }

    #[test]
    fn silhouette_singleton_and_equidistant() {
        let p = Partition::from_labels(ids(4), &[1, 1, 2, 3]).unwrap();
        let s = silhouette(&two_pairs(), &p).unwrap();
        assert_eq!(s.s[2], 0.0);
        assert_eq!(s.s[3], 0.0);
        // point 1 at the midpoint of 0 and 2: a = b = 1
        let d = line(&[0.0, 1.0, 2.0]);
        let p = Partition::from_labels(ids(3), &[1, 1, 2]).unwrap();
        assert_eq!(silhouette(&d, &p).unwrap().s[1], 0.0);
        let one = Partition::from_labels(ids(3), &[1, 1, 1]).unwrap();
        assert!(silhouette(&d, &one).unwrap_err().to_string().contains("one cluster"));
    }

    #[test]
    fn ch_line_example() {
        let d = line(&[0.0, 1.0, 10.0, 11.0]);
        let p = Partition::from_labels(ids(4), &[1, 1, 2, 2]).unwrap();
        let (w, t) = sum_of_squares(&d, &p);
        assert!((w - 1.0).abs() < 1e-12);
        assert!((t - 101.0).abs() < 1e-12);
        assert!((ch_index(&d, &p).unwrap() - 200.0).abs() < 1e-9);
    }

    #[test]
    fn ch_degenerate_cases() {
        let d = line(&[0.0, 0.0, 5.0, 5.0]);
        let p = Partition::from_labels(ids(4), &[1, 1, 2, 2]).unwrap();
        assert_eq!(ch_index(&d, &p).unwrap(), f64::INFINITY);
        let all = Partition::singletons(ids(4)).unwrap();
        assert!(ch_index(&d, &all).is_err());
        let one = Partition::from_labels(ids(4), &[1, 1, 1, 1]).unwrap();
        assert!(ch_index(&d, &one).is_err());
    }

    #[test]
    fn pearson_gamma_examples() {
        let p = Partition::from_labels(ids(4), &[1, 1, 2, 2]).unwrap();
        assert!((pearson_gamma(&two_pairs(), &p).unwrap() - 1.0).abs() < 1e-12);
        let anti = Partition::from_labels(ids(4), &[1, 2, 1, 2]).unwrap();
        // pairs (0,2),(1,3) share a cluster at d = 5; others differ at d = 1 or 5
        let d = DissimilarityMatrix::from_fn(ids(4), DissimilarityKind::Metric, |i, j| {
            if i % 2 == j % 2 {
                5.0
            } else {
                1.0
            }
        })
        .unwrap();
        assert!((pearson_gamma(&d, &anti).unwrap() + 1.0).abs() < 1e-12);
        let all = Partition::singletons(ids(4)).unwrap();
        assert!(pearson_gamma(&two_pairs(), &all).is_err());
    }

    #[test]
    fn pearson_gamma_matches_textbook() {
        // only (0,1) shares a cluster; pair vector (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
        let dvals = [0.5, 2.0, 3.0, 1.5, 4.0, 2.5];
        let d = DissimilarityMatrix::from_fn(ids(4), DissimilarityKind::Metric, |i, j| {
            let idx = match (i, j) {
                (0, 1) => 0,
                (0, 2) => 1,
                (0, 3) => 2,
                (1, 2) => 3,
                (1, 3) => 4,
                _ => 5,
            };
            dvals[idx]
        })
        .unwrap();
        let p = Partition::from_labels(ids(4), &[1, 1, 2, 3]).unwrap();
        let ind = [0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let md = dvals.iter().sum::<f64>() / 6.0;
        let mi = ind.iter().sum::<f64>() / 6.0;
        let sxy: f64 = dvals.iter().zip(&ind).map(|(a, b)| (a - md) * (b - mi)).sum();
        let sxx: f64 = dvals.iter().map(|a| (a - md).powi(2)).sum();
        let syy: f64 = ind.iter().map(|b| (b - mi).powi(2)).sum();
        let expected = sxy / (sxx * syy).sqrt();
        assert!((pearson_gamma(&d, &p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn pcr_examples() {
        let names: Vec<String> = ["A", "B", "C", "D", "E"].iter().map(|s| s.to_string()).collect();
        let prev = Partition::from_labels(names.clone(), &[1, 1, 1, 2, 2]).unwrap();
        let cur = Partition::from_labels(names.clone(), &[1, 1, 2, 2, 2]).unwrap();
        assert_eq!(pcr(&prev, &prev).unwrap(), 1.0);
        assert_eq!(pcr(&prev, &cur).unwrap(), 0.5);
        let merged = Partition::from_labels(names.clone(), &[1; 5]).unwrap();
        assert_eq!(pcr(&prev, &merged).unwrap(), 1.0);
        // directional: cur has 4 connections, 2 retained by prev
        assert_eq!(pcr(&cur, &prev).unwrap(), 0.5);
        assert_eq!(pcr(&merged, &prev).unwrap(), 0.4);
        let single = Partition::singletons(names).unwrap();
        assert!(pcr(&single, &prev).is_err());
    }

    #[test]
    fn fit_index_parsing() {
        assert_eq!("CH".parse::<FitIndex>().unwrap(), FitIndex::Ch);
        assert_eq!("silhouette".parse::<FitIndex>().unwrap(), FitIndex::Asw);
        assert!("rand".parse::<FitIndex>().is_err());
    }
}
