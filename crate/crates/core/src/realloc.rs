//! Re-clustering a new period under a stability floor.
//!
//! The worst-fitting observations under last period's grouping are freed as
//! singletons, capped agglomeration resumes from the retained clusters, and a
//! sweep over the freed proportion trades fit against the proportion of
//! connections retained (PCR).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hier::{select_on_tree, Agglomerator, CutCriterion, Linkage};
use crate::indices::{pcr, silhouette, FitIndex};
use crate::matrix::DissimilarityMatrix;
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq)]
pub struct ReallocConfig {
    /// Proportions of observations to free, ascending within `[0, 0.95]`.
    pub p_grid: Vec<f64>,
    pub pcr_min: f64,
    pub cap: usize,
    pub linkage: Linkage,
    pub criterion: CutCriterion,
}

impl ReallocConfig {
    /// `0, 0.05, ..., 0.95`.
    pub fn default_grid() -> Vec<f64> {
        (0..20).map(|i| i as f64 / 20.0).collect()
    }

    pub fn new(cap: usize, linkage: Linkage, criterion: impl Into<CutCriterion>) -> Self {
        Self {
            p_grid: Self::default_grid(),
            pcr_min: 0.90,
            cap,
            linkage,
            criterion: criterion.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() {
            return Err(Error::Config("the reallocation grid is empty".into()));
        }
        for &p in &self.p_grid {
            check_p(p)?;
        }
        if self.p_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("the reallocation grid must be strictly ascending".into()));
        }
        if !(0.0..=1.0).contains(&self.pcr_min) {
            return Err(Error::Config(format!("PCR floor {} is outside [0, 1]", self.pcr_min)));
        }
        if self.cap < 1 {
            return Err(Error::Config("size cap must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    // grid arithmetic such as 19.0 * 0.05 lands just above 0.95
    if !(0.0..=0.95 + 1e-9).contains(&p) {
        return Err(Error::Config(format!("reallocation proportion {p} is outside [0, 0.95]")));
    }
    Ok(())
}

/// Number of observations freed at proportion `p`. The small offset keeps
/// grid values such as `0.05 * 20` from rounding up past an integer.
pub fn flag_count(p: f64, n: usize) -> usize {
    ((p * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Clusters kept from the previous period plus the freed singletons.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPartition {
    /// `previous` expressed over the new matrix's id order.
    pub previous: Partition,
    /// Indices of freed observations, worst fit first.
    pub flagged: Vec<usize>,
    /// Retained clusters (nonempty) followed by one singleton per flagged index.
    pub groups: Vec<Vec<usize>>,
}

impl PartialPartition {
    pub fn as_partition(&self) -> Result<Partition> {
        Partition::from_groups(self.previous.ids().to_vec(), &self.groups)
    }
}

/// Frees the `ceil(p n)` observations with the lowest silhouette width in the
/// new dissimilarities under `previous`; ties go to the smaller id.
pub fn flag_for_reallocation(d_new: &DissimilarityMatrix, previous: &Partition, p: f64) -> Result<PartialPartition> {
    check_p(p)?;
    let previous = previous.reindexed(d_new.ids())?;
    let count = flag_count(p, d_new.n());
    if count == 0 {
        return Ok(PartialPartition {
            groups: previous.groups(),
            previous,
            flagged: Vec::new(),
        });
    }
    if previous.k() < 2 {
        return Err(Error::Undefined(
            "silhouette widths are undefined for a single previous cluster".into(),
        ));
    }
    let s = silhouette(d_new, &previous)?.s;
    let ids = d_new.ids();
    let mut order: Vec<usize> = (0..d_new.n()).collect();
    order.sort_by(|&a, &b| {
        s[a].partial_cmp(&s[b])
            .unwrap_or(Ordering::Equal)
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let flagged: Vec<usize> = order[..count].to_vec();
    let mut is_flagged = vec![false; d_new.n()];
    for &i in &flagged {
        is_flagged[i] = true;
    }
    let mut groups: Vec<Vec<usize>> = previous
        .groups()
        .into_iter()
        .map(|g| g.into_iter().filter(|&i| !is_flagged[i]).collect::<Vec<_>>())
        .filter(|g| !g.is_empty())
        .collect();
    groups.extend(flagged.iter().map(|&i| vec![i]));
    Ok(PartialPartition {
        previous,
        flagged,
        groups,
    })
}

/// Resumes capped agglomeration from the partial partition at `p` and cuts
/// the resulting tree where `index` is maximal. Retained clusters are never split.
pub fn reallocate(
    d_new: &DissimilarityMatrix,
    previous: &Partition,
    p: f64,
    linkage: Linkage,
    criterion: impl Into<CutCriterion>,
    cap: usize,
) -> Result<Partition> {
    let partial = flag_for_reallocation(d_new, previous, p)?;
    reallocate_from(d_new, partial, linkage, criterion.into(), cap)
}

fn reallocate_from(
    d_new: &DissimilarityMatrix,
    partial: PartialPartition,
    linkage: Linkage,
    criterion: CutCriterion,
    cap: usize,
) -> Result<Partition> {
    if let Some(big) = partial.groups.iter().map(Vec::len).max().filter(|&m| m > cap) {
        return Err(Error::Config(format!(
            "a retained cluster has {big} members, above the cap {cap}; \
             run a fresh constrained clustering instead of reallocating"
        )));
    }
    if partial.groups.len() < 2 {
        return partial.as_partition();
    }
    let tree = Agglomerator::from_groups(d_new, linkage, Some(cap), partial.groups)?.run();
    Ok(select_on_tree(d_new, tree, criterion)?.partition)
}

/// Observations whose final cluster, mapped to the previous cluster it
/// overlaps most (ties to the smaller previous label), is not their own.
pub fn reallocated_count(previous: &Partition, current: &Partition) -> Result<usize> {
    let current = current.reindexed(previous.ids())?;
    let mut overlap: HashMap<(usize, usize), usize> = HashMap::new();
    for i in 0..previous.n() {
        *overlap.entry((current.label(i), previous.label(i))).or_default() += 1;
    }
    let mut mapped = vec![0usize; current.k() + 1];
    let mut best = vec![0usize; current.k() + 1];
    for (&(c, prev), &count) in &overlap {
        if count > best[c] || (count == best[c] && prev < mapped[c]) {
            best[c] = count;
            mapped[c] = prev;
        }
    }
    Ok((0..previous.n())
        .filter(|&i| mapped[current.label(i)] != previous.label(i))
        .count())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub p: f64,
    pub pcr: Option<f64>,
    pub index: Option<f64>,
    pub k: Option<usize>,
    pub reallocated: Option<usize>,
    pub partition: Option<Partition>,
    /// Why this grid point produced no usable solution.
    pub error: Option<String>,
}

impl TradeoffRow {
    fn failed(p: f64, err: Error) -> Self {
        Self {
            p,
            pcr: None,
            index: None,
            k: None,
            reallocated: None,
            partition: None,
            error: Some(err.to_string()),
        }
    }

    pub fn is_usable(&self) -> bool {
        self.pcr.is_some_and(f64::is_finite) && self.index.is_some_and(|v| !v.is_nan())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    pub index: FitIndex,
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffCurve {
    /// Writes `p,pcr,index,k,reallocated,partition,error`; empty cells mark
    /// failed grid points. `partition_path` names each row's partition file.
    pub fn write_csv<W: Write>(&self, out: W, partition_path: impl Fn(usize, &TradeoffRow) -> String) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "pcr", "index", "k", "reallocated", "partition", "error"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for (i, row) in self.rows.iter().enumerate() {
            w.write_record([
                format!("{:.2}", row.p),
                opt(row.pcr),
                opt(row.index),
                row.k.map(|k| k.to_string()).unwrap_or_default(),
                row.reallocated.map(|k| k.to_string()).unwrap_or_default(),
                if row.partition.is_some() { partition_path(i, row) } else { String::new() },
                row.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs [`reallocate`] at every grid point, in parallel. Failures become
/// flagged rows rather than aborting the sweep.
pub fn tradeoff_grid(d_new: &DissimilarityMatrix, previous: &Partition, config: &ReallocConfig) -> Result<TradeoffCurve> {
    config.validate()?;
    let previous = previous.reindexed(d_new.ids())?;
    let rows = config
        .p_grid
        .par_iter()
        .map(|&p| {
            let run = || -> Result<TradeoffRow> {
                let part = reallocate(d_new, &previous, p, config.linkage, config.criterion, config.cap)?;
                let index = config.criterion.index.evaluate(d_new, &part).ok();
                Ok(TradeoffRow {
                    p,
                    pcr: Some(pcr(&previous, &part)?),
                    index,
                    k: Some(part.k()),
                    reallocated: Some(reallocated_count(&previous, &part)?),
                    partition: Some(part),
                    error: None,
                })
            };
            run().unwrap_or_else(|e| TradeoffRow::failed(p, e))
        })
        .collect();
    Ok(TradeoffCurve {
        index: config.criterion.index,
        rows,
    })
}

/// Best-fitting row whose PCR meets the floor; ties prefer larger PCR, then smaller p.
pub fn select_stable(curve: &TradeoffCurve, pcr_min: f64) -> Result<&TradeoffRow> {
    if curve.rows.is_empty() {
        return Err(Error::InvalidInput("the tradeoff curve is empty".into()));
    }
    let mut best: Option<&TradeoffRow> = None;
    for row in curve.rows.iter().filter(|r| r.is_usable()) {
        if row.pcr.unwrap() < pcr_min {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (ri, bi) = (row.index.unwrap(), b.index.unwrap());
                let (rp, bp) = (row.pcr.unwrap(), b.pcr.unwrap());
                ri > bi || (ri == bi && (rp > bp || (rp == bp && row.p < b.p)))
            }
        };
        if better {
            best = Some(row);
        }
    }
    if best.is_none() && !curve.rows.iter().any(TradeoffRow::is_usable) {
        let first = curve.rows.iter().find_map(|r| r.error.as_deref()).unwrap_or("index undefined everywhere");
        return Err(Error::InvalidInput(format!(
            "no grid point produced a usable solution (p = {:.2}: {first})",
            curve.rows[0].p
        )));
    }
    best.ok_or_else(|| Error::InfeasiblePcr {
        floor: pcr_min,
        max_pcr: curve
            .rows
            .iter()
            .filter_map(|r| r.pcr)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DissimilarityKind;

    fn line(points: &[f64]) -> DissimilarityMatrix {
        let ids = (0..points.len()).map(|i| format!("o{i:02}")).collect();
        DissimilarityMatrix::from_fn(ids, DissimilarityKind::Metric, |i, j| (points[i] - points[j]).abs()).unwrap()
    }

    fn row(p: f64, pcr: f64, index: f64) -> TradeoffRow {
        TradeoffRow {
            p,
            pcr: Some(pcr),
            index: Some(index),
            k: Some(2),
            reallocated: Some(0),
            partition: None,
            error: None,
        }
    }

    #[test]
    fn default_grid_has_twenty_points() {
        let g = ReallocConfig::default_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.0);
        assert!((g[19] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn flag_count_arithmetic() {
        assert_eq!(flag_count(0.0, 40), 0);
        assert_eq!(flag_count(0.05, 20), 1);
        assert_eq!(flag_count(0.05, 30), 2);
        assert_eq!(flag_count(0.95, 40), 38);
        assert_eq!(flag_count(0.95, 7), 7);
    }

    #[test]
    fn zero_p_keeps_previous() {
        let d = line(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        let prev = Partition::from_labels(d.ids().to_vec(), &[1, 1, 1, 2, 2, 2]).unwrap();
        let part = flag_for_reallocation(&d, &prev, 0.0).unwrap();
        assert!(part.flagged.is_empty());
        assert_eq!(part.as_partition().unwrap(), prev);
        let out = reallocate(&d, &prev, 0.0, Linkage::Average, FitIndex::Ch, 3).unwrap();
        assert_eq!(out, prev);
        assert_eq!(pcr(&prev, &out).unwrap(), 1.0);
    }

    #[test]
    fn misfit_is_flagged_first() {
        // o02 sits with the far group in `previous`
        let d = line(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        let prev = Partition::from_labels(d.ids().to_vec(), &[1, 1, 2, 2, 2, 2]).unwrap();
        let part = flag_for_reallocation(&d, &prev, 0.1).unwrap();
        assert_eq!(part.flagged, vec![2]);
        let out = reallocate(&d, &prev, 0.1, Linkage::Average, FitIndex::Ch, 3).unwrap();
        assert_eq!(out.labels(), &[1, 1, 1, 2, 2, 2]);
        assert_eq!(reallocated_count(&prev, &out).unwrap(), 1);
    }

    #[test]
    fn single_previous_cluster_errors() {
        let d = line(&[0.0, 1.0, 2.0]);
        let prev = Partition::from_labels(d.ids().to_vec(), &[1, 1, 1]).unwrap();
        assert!(flag_for_reallocation(&d, &prev, 0.5).is_err());
        // nothing to rank when nothing is freed
        assert!(flag_for_reallocation(&d, &prev, 0.0).unwrap().flagged.is_empty());
    }

    #[test]
    fn retained_cluster_above_cap_errors() {
        let d = line(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        let prev = Partition::from_labels(d.ids().to_vec(), &[1, 1, 1, 2, 2, 2]).unwrap();
        let err = reallocate(&d, &prev, 0.0, Linkage::Average, FitIndex::Ch, 2).unwrap_err();
        assert!(err.to_string().contains("fresh"));
    }

    #[test]
    fn selection_rules() {
        let curve = TradeoffCurve {
            index: FitIndex::Ch,
            rows: vec![row(0.0, 1.0, 5.0), row(0.05, 0.95, 7.0), row(0.1, 0.97, 7.0), row(0.15, 0.5, 9.0)],
        };
        assert_eq!(select_stable(&curve, 0.9).unwrap().p, 0.1);
        assert_eq!(select_stable(&curve, 1.0).unwrap().p, 0.0);
        assert_eq!(select_stable(&curve, 0.0).unwrap().p, 0.15);
        let strict = TradeoffCurve {
            index: FitIndex::Ch,
            rows: vec![row(0.1, 0.8, 1.0), row(0.2, 0.7, 2.0)],
        };
        match select_stable(&strict, 0.9) {
            Err(Error::InfeasiblePcr { max_pcr, .. }) => assert_eq!(max_pcr, 0.8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_of_zero_gives_pcr_one() {
        let d = line(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        let prev = Partition::from_labels(d.ids().to_vec(), &[1, 1, 1, 2, 2, 2]).unwrap();
        let mut cfg = ReallocConfig::new(3, Linkage::Average, FitIndex::Ch);
        cfg.p_grid = vec![0.0];
        let curve = tradeoff_grid(&d, &prev, &cfg).unwrap();
        assert_eq!(curve.rows.len(), 1);
        assert_eq!(curve.rows[0].pcr, Some(1.0));
    }
}
