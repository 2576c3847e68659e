//! Cluster assignments with canonical labelling.

use std::collections::HashMap;
use std::hash::Hash;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::check_unique;

/// Assignment of every observation to a cluster.
///
/// Labels are canonical: contiguous from 1 and numbered in order of each
/// cluster's smallest member index, so two partitions over the same id order
/// are equal exactly when they group the observations identically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    ids: Vec<String>,
    labels: Vec<usize>,
}

impl Partition {
    /// Relabels arbitrary cluster keys into canonical form.
    pub fn from_labels<T: Eq + Hash>(ids: Vec<String>, raw: &[T]) -> Result<Self> {
        if ids.len() != raw.len() {
            return Err(Error::InvalidInput(format!(
                "{} ids but {} labels",
                ids.len(),
                raw.len()
            )));
        }
        check_unique(&ids)?;
        let mut map: HashMap<&T, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|key| {
                let next = map.len() + 1;
                *map.entry(key).or_insert(next)
            })
            .collect();
        Ok(Self { ids, labels })
    }

    /// Builds a partition from disjoint index groups covering `0..ids.len()`.
    pub fn from_groups(ids: Vec<String>, groups: &[Vec<usize>]) -> Result<Self> {
        let n = ids.len();
        let mut raw = vec![usize::MAX; n];
        for (g, members) in groups.iter().enumerate() {
            for &i in members {
                if i >= n || raw[i] != usize::MAX {
                    return Err(Error::InvalidInput(format!(
                        "groups are not a partition of 0..{n} (index {i})"
                    )));
                }
                raw[i] = g;
            }
        }
        if raw.contains(&usize::MAX) {
            return Err(Error::InvalidInput("groups do not cover every observation".into()));
        }
        Self::from_labels(ids, &raw)
    }

    pub fn singletons(ids: Vec<String>) -> Result<Self> {
        let raw: Vec<usize> = (0..ids.len()).collect();
        Self::from_labels(ids, &raw)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Canonical labels, `1..=k`.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Cluster sizes indexed by `label - 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l - 1] += 1;
        }
        sizes
    }

    pub fn max_size(&self) -> usize {
        self.sizes().into_iter().max().unwrap_or(0)
    }

    /// Member indices per cluster, indexed by `label - 1`, each sorted ascending.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l - 1].push(i);
        }
        groups
    }

    #[inline]
    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Restriction to the observations at `rows`, relabelled canonically.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        let raw: Vec<usize> = rows.iter().map(|&r| self.labels[r]).collect();
        Self::from_labels(ids, &raw)
    }

    /// Same grouping expressed over `ids` (a permutation of this partition's ids).
    pub fn reindexed(&self, ids: &[String]) -> Result<Self> {
        if ids.len() != self.ids.len() {
            return Err(Error::IdMismatch(format!(
                "{} ids versus {} in the partition",
                ids.len(),
                self.ids.len()
            )));
        }
        let pos: HashMap<&str, usize> =
            self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let raw = ids
            .iter()
            .map(|id| {
                pos.get(id.as_str())
                    .map(|&p| self.labels[p])
                    .ok_or_else(|| Error::IdMismatch(format!("id `{id}` not in partition")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_labels(ids.to_vec(), &raw)
    }

    /// Writes `id,cluster` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "cluster"])?;
        for (id, l) in self.ids.iter().zip(&self.labels) {
            w.write_record([id.as_str(), &l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `id,cluster` CSV; cluster values may be any strings.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() != 2 || header[0].trim() != "id" {
            return Err(Error::Parse {
                line: 1,
                message: "expected header `id,cluster`".into(),
            });
        }
        let mut ids = Vec::new();
        let mut raw = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 fields, found {}", rec.len()),
                });
            }
            ids.push(rec[0].trim().to_string());
            raw.push(rec[1].trim().to_string());
        }
        Self::from_labels(ids, &raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("o{i}")).collect()
    }

    #[test]
    fn canonical_labels_follow_first_member() {
        let p = Partition::from_labels(ids(5), &[7, 3, 7, 9, 3]).unwrap();
        assert_eq!(p.labels(), &[1, 2, 1, 3, 2]);
        assert_eq!(p.sizes(), vec![2, 2, 1]);
        assert_eq!(p.k(), 3);
        let q = Partition::from_groups(ids(5), &[vec![3], vec![1, 4], vec![0, 2]]).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = Partition::from_labels(vec!["a".into(), "a".into()], &[1, 2]).unwrap_err();
        assert!(err.to_string().contains("`a`"));
    }

    #[test]
    fn csv_roundtrip() {
        let p = Partition::from_labels(ids(4), &["x", "y", "x", "z"]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "id,cluster\no0,1\no1,2\no2,1\no3,3\n"
        );
        assert_eq!(Partition::read_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn reindex_permutes() {
        let p = Partition::from_labels(ids(3), &[1, 1, 2]).unwrap();
        let order = vec!["o2".to_string(), "o0".to_string(), "o1".to_string()];
        let q = p.reindexed(&order).unwrap();
        assert_eq!(q.labels(), &[1, 2, 2]);
    }
}
