//! Agglomerative clustering with Lance-Williams updates, the size-capped
//! kirigami algorithms, tree cutting and a PAM baseline.
//!
//! Tree nodes use the hclust convention: `-(g + 1)` is initial group `g`
//! (a single observation unless the agglomeration was seeded from a
//! partition) and `t >= 1` is the cluster created by the `t`-th merge.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::indices::FitIndex;
use crate::matrix::DissimilarityMatrix;
use crate::partition::Partition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linkage {
    Average,
    Ward,
    Complete,
    Single,
}

/// Lance-Williams coefficients for merging clusters `i` and `j` as seen from `k`:
/// `d(k, i+j) = alpha_i d(k,i) + alpha_j d(k,j) + beta d(i,j) + gamma |d(k,i) - d(k,j)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanceWilliams {
    pub alpha_i: f64,
    pub alpha_j: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [
        Linkage::Average,
        Linkage::Ward,
        Linkage::Complete,
        Linkage::Single,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Average => "average",
            Linkage::Ward => "ward",
            Linkage::Complete => "complete",
            Linkage::Single => "single",
        }
    }

    /// Coefficients given cluster sizes. Ward's apply to squared dissimilarities.
    pub fn coefficients(self, ni: usize, nj: usize, nk: usize) -> LanceWilliams {
        let (ni, nj, nk) = (ni as f64, nj as f64, nk as f64);
        match self {
            Linkage::Average => LanceWilliams {
                alpha_i: ni / (ni + nj),
                alpha_j: nj / (ni + nj),
                beta: 0.0,
                gamma: 0.0,
            },
            Linkage::Complete => LanceWilliams {
                alpha_i: 0.5,
                alpha_j: 0.5,
                beta: 0.0,
                gamma: 0.5,
            },
            Linkage::Single => LanceWilliams {
                alpha_i: 0.5,
                alpha_j: 0.5,
                beta: 0.0,
                gamma: -0.5,
            },
            Linkage::Ward => {
                let t = ni + nj + nk;
                LanceWilliams {
                    alpha_i: (ni + nk) / t,
                    alpha_j: (nj + nk) / t,
                    beta: -nk / t,
                    gamma: 0.0,
                }
            }
        }
    }
}

impl LanceWilliams {
    pub fn apply(&self, d_ki: f64, d_kj: f64, d_ij: f64) -> f64 {
        self.alpha_i * d_ki + self.alpha_j * d_kj + self.beta * d_ij + self.gamma * (d_ki - d_kj).abs()
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "average" => Ok(Linkage::Average),
            "ward" | "ward.d2" => Ok(Linkage::Ward),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(Error::Config(format!(
                "unknown linkage `{other}` (expected average, ward, complete or single)"
            ))),
        }
    }
}

/// One agglomeration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: i64,
    pub right: i64,
    pub height: f64,
    pub size: usize,
}

/// Recorded agglomeration history; a forest when a size cap stopped merging early.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTree {
    ids: Vec<String>,
    initial: Vec<Vec<usize>>,
    merges: Vec<Merge>,
    linkage: Linkage,
    cap: Option<usize>,
}

impl MergeTree {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn linkage(&self) -> Linkage {
        self.linkage
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    /// Observation groups the agglomeration started from.
    pub fn initial_groups(&self) -> &[Vec<usize>] {
        &self.initial
    }

    pub fn n_initial(&self) -> usize {
        self.initial.len()
    }

    /// Number of trees in the forest.
    pub fn n_roots(&self) -> usize {
        self.initial.len() - self.merges.len()
    }

    /// Nodes never consumed by a later merge, ascending by node id encoding
    /// (initial groups first).
    pub fn roots(&self) -> Vec<i64> {
        self.frontier(self.merges.len())
    }

    /// Nodes alive after the first `steps` merges.
    fn frontier(&self, steps: usize) -> Vec<i64> {
        let m = self.initial.len();
        let mut consumed_leaf = vec![false; m];
        let mut consumed_merge = vec![false; steps];
        for mg in &self.merges[..steps] {
            for node in [mg.left, mg.right] {
                if node < 0 {
                    consumed_leaf[(-node - 1) as usize] = true;
                } else {
                    consumed_merge[(node - 1) as usize] = true;
                }
            }
        }
        let mut out: Vec<i64> = (0..m)
            .filter(|&g| !consumed_leaf[g])
            .map(|g| -(g as i64) - 1)
            .collect();
        out.extend(
            (0..steps)
                .filter(|&t| !consumed_merge[t])
                .map(|t| t as i64 + 1),
        );
        out
    }

    /// Observation indices under `node`, sorted.
    pub fn members(&self, node: i64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(nd) = stack.pop() {
            if nd < 0 {
                out.extend_from_slice(&self.initial[(-nd - 1) as usize]);
            } else {
                let mg = &self.merges[(nd - 1) as usize];
                stack.push(mg.left);
                stack.push(mg.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// Children of a merge node; `None` for an initial group.
    pub fn children(&self, node: i64) -> Option<(i64, i64)> {
        if node < 0 {
            None
        } else {
            let mg = &self.merges[(node - 1) as usize];
            Some((mg.left, mg.right))
        }
    }

    pub fn node_size(&self, node: i64) -> usize {
        if node < 0 {
            self.initial[(-node - 1) as usize].len()
        } else {
            self.merges[(node - 1) as usize].size
        }
    }

    /// Partition formed by `nodes`, which must cover every observation once.
    pub fn partition_of(&self, nodes: &[i64]) -> Result<Partition> {
        let groups: Vec<Vec<usize>> = nodes.iter().map(|&nd| self.members(nd)).collect();
        Partition::from_groups(self.ids.clone(), &groups)
    }

    /// Undoes the last merges until exactly `k` clusters remain.
    pub fn cut(&self, k: usize) -> Result<Partition> {
        let m = self.initial.len();
        if k < self.n_roots() || k > m {
            return Err(Error::InvalidInput(format!(
                "cannot cut into {k} clusters: the tree spans {} to {m}",
                self.n_roots()
            )));
        }
        self.partition_of(&self.frontier(m - k))
    }

    /// Writes the tree as text: a header, one `node` line per initial group,
    /// then one `left right height size` line per merge.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# merge tree")?;
        writeln!(out, "linkage {}", self.linkage)?;
        match self.cap {
            Some(c) => writeln!(out, "cap {c}")?,
            None => writeln!(out, "cap none")?,
        }
        for (g, members) in self.initial.iter().enumerate() {
            let names: Vec<&str> = members.iter().map(|&i| self.ids[i].as_str()).collect();
            writeln!(out, "node {} {}", -(g as i64) - 1, names.join(" "))?;
        }
        writeln!(out, "# left right height size")?;
        for mg in &self.merges {
            writeln!(out, "{} {} {} {}", mg.left, mg.right, mg.height, mg.size)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut linkage = None;
        let mut cap = None;
        let mut ids = Vec::new();
        let mut initial = Vec::new();
        let mut merges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let bad = |msg: &str| Error::Parse {
                line: lineno,
                message: msg.to_string(),
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("linkage") => {
                    linkage = Some(parts.next().ok_or_else(|| bad("missing linkage"))?.parse()?)
                }
                Some("cap") => {
                    cap = match parts.next() {
                        Some("none") => None,
                        Some(c) => Some(c.parse().map_err(|_| bad("bad cap"))?),
                        None => return Err(bad("missing cap")),
                    }
                }
                Some("node") => {
                    parts.next();
                    let group: Vec<usize> = parts
                        .map(|id| {
                            ids.push(id.to_string());
                            ids.len() - 1
                        })
                        .collect();
                    initial.push(group);
                }
                Some(first) => {
                    let fields: Vec<&str> = std::iter::once(first).chain(parts).collect();
                    if fields.len() != 4 {
                        return Err(bad("expected `left right height size`"));
                    }
                    merges.push(Merge {
                        left: fields[0].parse().map_err(|_| bad("bad left node"))?,
                        right: fields[1].parse().map_err(|_| bad("bad right node"))?,
                        height: fields[2].parse().map_err(|_| bad("bad height"))?,
                        size: fields[3].parse().map_err(|_| bad("bad size"))?,
                    });
                }
                None => {}
            }
        }
        let linkage = linkage.ok_or(Error::Parse {
            line: 0,
            message: "missing linkage line".into(),
        })?;
        Ok(Self {
            ids,
            initial,
            merges,
            linkage,
            cap,
        })
    }
}

/// Step-wise agglomeration over a dissimilarity matrix.
///
/// Stored inter-cluster values depend on the linkage: single and complete
/// keep the dissimilarity itself (their Lance-Williams updates reduce to
/// `min`/`max`), average keeps the unnormalised sum of pairwise
/// dissimilarities (the average recurrence multiplied through by
/// `|i+j| |k|`), and Ward keeps its criterion on the squared scale.
pub struct Agglomerator<'a> {
    d: &'a DissimilarityMatrix,
    linkage: Linkage,
    cap: Option<usize>,
    active: Vec<bool>,
    size: Vec<usize>,
    members: Vec<Vec<usize>>,
    node: Vec<i64>,
    value: Vec<f64>,
    slots: usize,
    initial: Vec<Vec<usize>>,
    merges: Vec<Merge>,
}

impl<'a> Agglomerator<'a> {
    /// Starts from singletons.
    pub fn new(d: &'a DissimilarityMatrix, linkage: Linkage, cap: Option<usize>) -> Result<Self> {
        let groups: Vec<Vec<usize>> = (0..d.n()).map(|i| vec![i]).collect();
        Self::from_groups(d, linkage, cap, groups)
    }

    /// Starts from disjoint `groups` covering every observation.
    pub fn from_groups(
        d: &'a DissimilarityMatrix,
        linkage: Linkage,
        cap: Option<usize>,
        groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if cap == Some(0) {
            return Err(Error::Config("size cap must be at least 1".into()));
        }
        if d.n() < 2 {
            return Err(Error::InvalidInput("agglomeration needs at least 2 observations".into()));
        }
        // validates coverage
        Partition::from_groups(d.ids().to_vec(), &groups)?;
        if let Some(c) = cap {
            if let Some(g) = groups.iter().find(|g| g.len() > c) {
                return Err(Error::Config(format!(
                    "an initial group of size {} already exceeds the cap {c}",
                    g.len()
                )));
            }
        }
        let m = groups.len();
        let mut value = vec![0.0; m * m];
        for a in 0..m {
            for b in (a + 1)..m {
                let v = initial_value(d, linkage, &groups[a], &groups[b]);
                value[a * m + b] = v;
                value[b * m + a] = v;
            }
        }
        Ok(Self {
            d,
            linkage,
            cap,
            active: vec![true; m],
            size: groups.iter().map(Vec::len).collect(),
            members: groups.clone(),
            node: (0..m).map(|g| -(g as i64) - 1).collect(),
            value,
            slots: m,
            initial: groups,
            merges: Vec::new(),
        })
    }

    /// Active slots and their members.
    pub fn active_clusters(&self) -> Vec<(usize, &[usize])> {
        (0..self.slots)
            .filter(|&s| self.active[s])
            .map(|s| (s, self.members[s].as_slice()))
            .collect()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Current inter-cluster dissimilarity between two active slots, on the
    /// linkage's own scale (squared for Ward).
    pub fn cluster_dissimilarity(&self, a: usize, b: usize) -> f64 {
        let v = self.value[a * self.slots + b];
        match self.linkage {
            Linkage::Average => v / (self.size[a] * self.size[b]) as f64,
            _ => v,
        }
    }

    fn height(&self, a: usize, b: usize) -> f64 {
        match self.linkage {
            Linkage::Ward => self.cluster_dissimilarity(a, b).max(0.0).sqrt(),
            _ => self.cluster_dissimilarity(a, b),
        }
    }

    /// Feasible pair with the smallest dissimilarity; ties go to the
    /// lexicographically smallest slot pair.
    fn best_pair(&self) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.slots {
            if !self.active[i] {
                continue;
            }
            for j in (i + 1)..self.slots {
                if !self.active[j] {
                    continue;
                }
                if let Some(cap) = self.cap {
                    if self.size[i] + self.size[j] > cap {
                        continue;
                    }
                }
                let v = self.cluster_dissimilarity(i, j);
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                }
            }
        }
        best.map(|(_, i, j)| (i, j))
    }

    /// Performs the next feasible merge, or returns `None` when none remains.
    pub fn step(&mut self) -> Option<Merge> {
        let (i, j) = self.best_pair()?;
        let m = self.slots;
        let height = self.height(i, j);
        let (ni, nj) = (self.size[i], self.size[j]);
        let v_ij = self.value[i * m + j];
        for k in 0..m {
            if !self.active[k] || k == i || k == j {
                continue;
            }
            let (v_ki, v_kj) = (self.value[k * m + i], self.value[k * m + j]);
            let updated = match self.linkage {
                Linkage::Single => v_ki.min(v_kj),
                Linkage::Complete => v_ki.max(v_kj),
                Linkage::Average => v_ki + v_kj,
                Linkage::Ward => self
                    .linkage
                    .coefficients(ni, nj, self.size[k])
                    .apply(v_ki, v_kj, v_ij),
            };
            self.value[k * m + i] = updated;
            self.value[i * m + k] = updated;
        }
        let merge = Merge {
            left: self.node[i],
            right: self.node[j],
            height,
            size: ni + nj,
        };
        self.active[j] = false;
        self.size[i] = ni + nj;
        let moved = std::mem::take(&mut self.members[j]);
        self.members[i].extend(moved);
        self.members[i].sort_unstable();
        self.merges.push(merge);
        self.node[i] = self.merges.len() as i64;
        Some(merge)
    }

    /// Merges until no feasible pair remains.
    pub fn run(mut self) -> MergeTree {
        while self.step().is_some() {}
        self.into_tree()
    }

    pub fn into_tree(self) -> MergeTree {
        MergeTree {
            ids: self.d.ids().to_vec(),
            initial: self.initial,
            merges: self.merges,
            linkage: self.linkage,
            cap: self.cap,
        }
    }
}

fn initial_value(d: &DissimilarityMatrix, linkage: Linkage, a: &[usize], b: &[usize]) -> f64 {
    let cross = a.iter().flat_map(|&i| b.iter().map(move |&j| d.get(i, j)));
    match linkage {
        Linkage::Single => cross.fold(f64::INFINITY, f64::min),
        Linkage::Complete => cross.fold(0.0, f64::max),
        Linkage::Average => cross.sum(),
        Linkage::Ward => {
            // twice the increase in within-cluster sum of squares
            let sq = |g: &[usize], h: &[usize]| -> f64 {
                g.iter()
                    .flat_map(|&i| h.iter().map(move |&j| d.get(i, j) * d.get(i, j)))
                    .sum()
            };
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let (s_ab, s_aa, s_bb) = (sq(a, b), sq(a, a), sq(b, b));
            (s_aa + s_bb + 2.0 * s_ab) / (na + nb) - s_aa / na - s_bb / nb
        }
    }
}

/// Agglomerates from singletons; with a cap, any merge exceeding it is
/// skipped and merging stops once no feasible pair remains.
pub fn agglomerate(d: &DissimilarityMatrix, linkage: Linkage, size_cap: Option<usize>) -> Result<MergeTree> {
    Ok(Agglomerator::new(d, linkage, size_cap)?.run())
}

pub fn cut_tree(tree: &MergeTree, k: usize) -> Result<Partition> {
    tree.cut(k)
}

/// Index value at each cluster count from the coarsest cut up to `max_k`
/// (or the finest cut, if smaller). Undefined values are `None`.
pub fn index_profile(
    d: &DissimilarityMatrix,
    tree: &MergeTree,
    index: FitIndex,
    max_k: usize,
) -> Result<Vec<(usize, Option<f64>)>> {
    (tree.n_roots()..=tree.n_initial().min(max_k.max(tree.n_roots())))
        .map(|k| Ok((k, index.evaluate(d, &tree.cut(k)?).ok())))
        .collect()
}

/// How the final cut of a tree is chosen.
///
/// Cluster counts are searched from 2 (or the number of roots of a capped
/// forest) up to `max_k`. The bound matters for CH: splitting off the
/// closest pair drives the within-cluster term towards zero, so an unbounded
/// search almost always lands on `n - 1` clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutCriterion {
    pub index: FitIndex,
    /// Largest cluster count considered, unless the forest has more roots.
    pub max_k: usize,
}

impl CutCriterion {
    pub const DEFAULT_MAX_K: usize = 10;

    pub fn new(index: FitIndex, max_k: usize) -> Self {
        Self { index, max_k }
    }

    /// Searched range for a tree with `roots` roots over `m` initial groups of `n` observations.
    fn range(&self, roots: usize, m: usize, n: usize) -> (usize, usize) {
        let lo = roots.max(2);
        (lo, self.max_k.max(lo).min(m).min(n - 1))
    }
}

impl From<FitIndex> for CutCriterion {
    fn from(index: FitIndex) -> Self {
        Self::new(index, Self::DEFAULT_MAX_K)
    }
}

/// Cluster count in `k_min..=k_max` maximising `index`; ties go to the smaller count.
fn best_cut(
    d: &DissimilarityMatrix,
    tree: &MergeTree,
    index: FitIndex,
    k_min: usize,
    k_max: usize,
) -> Result<Option<(usize, f64, Partition)>> {
    let mut best: Option<(usize, f64, Partition)> = None;
    for k in k_min..=k_max {
        let p = tree.cut(k)?;
        if let Ok(v) = index.evaluate(d, &p) {
            if v.is_nan() {
                continue;
            }
            if best.as_ref().is_none_or(|(_, bv, _)| v > *bv) {
                best = Some((k, v, p));
            }
        }
    }
    Ok(best)
}

/// Result of a size-constrained clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedClustering {
    pub partition: Partition,
    pub tree: MergeTree,
    /// Index value of `partition`, if defined.
    pub index_value: Option<f64>,
}

/// Top-down constraint: cut the unconstrained tree where the index is
/// maximal, then replace every cluster larger than `cap` by its two subtree
/// children until all clusters fit.
pub fn kirigami1(
    d: &DissimilarityMatrix,
    linkage: Linkage,
    criterion: impl Into<CutCriterion>,
    cap: usize,
) -> Result<ConstrainedClustering> {
    let criterion = criterion.into();
    if cap < 1 {
        return Err(Error::Config("size cap must be at least 1".into()));
    }
    let tree = agglomerate(d, linkage, None)?;
    let n = d.n();
    let (lo, hi) = criterion.range(1, n, n);
    let k0 = match best_cut(d, &tree, criterion.index, lo, hi)? {
        Some((k, _, _)) => k,
        None => lo.min(n),
    };
    let mut pending = tree.frontier(n - k0);
    let mut done = Vec::new();
    while let Some(node) = pending.pop() {
        if tree.node_size(node) > cap {
            let (l, r) = tree
                .children(node)
                .ok_or_else(|| Error::Invariant("oversize cluster has no children".into()))?;
            pending.push(l);
            pending.push(r);
        } else {
            done.push(node);
        }
    }
    let partition = tree.partition_of(&done)?;
    let index_value = criterion.index.evaluate(d, &partition).ok();
    Ok(ConstrainedClustering {
        partition,
        tree,
        index_value,
    })
}

/// Bottom-up constraint: agglomerate with merges above `cap` blocked, then
/// cut the capped tree where the index is maximal.
pub fn kirigami2(
    d: &DissimilarityMatrix,
    linkage: Linkage,
    criterion: impl Into<CutCriterion>,
    cap: usize,
) -> Result<ConstrainedClustering> {
    if cap < 1 {
        return Err(Error::Config("size cap must be at least 1".into()));
    }
    let tree = agglomerate(d, linkage, Some(cap))?;
    select_on_tree(d, tree, criterion.into())
}

/// Index-optimal cut of `tree` within the criterion's range. Falls back to
/// the coarsest cut when the index is undefined everywhere in it.
pub(crate) fn select_on_tree(d: &DissimilarityMatrix, tree: MergeTree, criterion: CutCriterion) -> Result<ConstrainedClustering> {
    let (k_min, k_max) = criterion.range(tree.n_roots(), tree.n_initial(), d.n());
    let chosen = if k_min <= k_max {
        best_cut(d, &tree, criterion.index, k_min, k_max)?
    } else {
        None
    };
    let partition = match chosen {
        Some((_, _, p)) => p,
        None => tree.cut(k_min.min(tree.n_initial()))?,
    };
    let index_value = criterion.index.evaluate(d, &partition).ok();
    Ok(ConstrainedClustering {
        partition,
        tree,
        index_value,
    })
}

/// Unconstrained index-optimal hierarchical clustering.
pub fn unconstrained(d: &DissimilarityMatrix, linkage: Linkage, criterion: impl Into<CutCriterion>) -> Result<ConstrainedClustering> {
    select_on_tree(d, agglomerate(d, linkage, None)?, criterion.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PamResult {
    pub partition: Partition,
    /// Medoid of each cluster, in label order.
    pub medoids: Vec<usize>,
    pub cost: f64,
}

fn pam_cost(d: &DissimilarityMatrix, medoids: &[usize]) -> f64 {
    (0..d.n())
        .map(|i| medoids.iter().map(|&m| d.get(i, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Build-and-swap partitioning around medoids. `seed` only fixes the order in
/// which candidates are scanned, which decides ties.
pub fn pam(d: &DissimilarityMatrix, k: usize, seed: u64) -> Result<PamResult> {
    let n = d.n();
    if k < 1 || k > n {
        return Err(Error::Config(format!("PAM needs 1 <= k <= n (k = {k}, n = {n})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut is_medoid = vec![false; n];
    while medoids.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for &c in &order {
            if is_medoid[c] {
                continue;
            }
            medoids.push(c);
            let cost = pam_cost(d, &medoids);
            medoids.pop();
            if best.is_none_or(|(bc, _)| cost < bc) {
                best = Some((cost, c));
            }
        }
        let (_, c) = best.expect("a non-medoid candidate exists while medoids < n");
        medoids.push(c);
        is_medoid[c] = true;
    }

    let mut cost = pam_cost(d, &medoids);
    let scale = cost.abs().max(1.0);
    for _ in 0..1_000 {
        let mut best: Option<(f64, usize, usize)> = None;
        for pos in 0..k {
            for &o in &order {
                if is_medoid[o] {
                    continue;
                }
                let old = medoids[pos];
                medoids[pos] = o;
                let c = pam_cost(d, &medoids);
                medoids[pos] = old;
                if best.is_none_or(|(bc, _, _)| c < bc) {
                    best = Some((c, pos, o));
                }
            }
        }
        match best {
            Some((c, pos, o)) if c < cost - 1e-12 * scale => {
                is_medoid[medoids[pos]] = false;
                is_medoid[o] = true;
                medoids[pos] = o;
                cost = c;
            }
            _ => break,
        }
    }

    let assign: Vec<usize> = (0..n)
        .map(|i| {
            if is_medoid[i] {
                return medoids.iter().position(|&m| m == i).unwrap();
            }
            let mut best = 0;
            for (pos, &m) in medoids.iter().enumerate() {
                if d.get(i, m) < d.get(i, medoids[best]) {
                    best = pos;
                }
            }
            best
        })
        .collect();
    let partition = Partition::from_labels(d.ids().to_vec(), &assign)?;
    medoids.sort_by_key(|&m| partition.label(m));
    Ok(PamResult {
        partition,
        medoids,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DissimilarityKind;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("o{i}")).collect()
    }

    fn line(points: &[f64]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_fn(ids(points.len()), DissimilarityKind::Metric, |i, j| {
            (points[i] - points[j]).abs()
        })
        .unwrap()
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

    #[test]
    fn single_linkage_line() {
        let tree = agglomerate(&line(&[0.0, 1.0, 3.0]), Linkage::Single, None).unwrap();
        assert_eq!(
            tree.merges(),
            &[
                Merge { left: -1, right: -2, height: 1.0, size: 2 },
                Merge { left: 1, right: -3, height: 2.0, size: 3 },
            ]
        );
        assert_eq!(tree.roots(), vec![2]);
        let p = cut_tree(&tree, 2).unwrap();
        assert_eq!(p.labels(), &[1, 1, 2]);
        assert_eq!(cut_tree(&tree, 3).unwrap().k(), 3);
        assert_eq!(cut_tree(&tree, 1).unwrap().k(), 1);
    }

    #[test]
    fn cap_blocks_cross_merge() {
        let tree = agglomerate(&two_pairs(), Linkage::Average, Some(2)).unwrap();
        assert_eq!(tree.n_roots(), 2);
        assert_eq!(tree.merges().len(), 2);
        let p = cut_tree(&tree, 2).unwrap();
        assert_eq!(p.labels(), &[1, 1, 2, 2]);
        assert!(cut_tree(&tree, 1).is_err());
    }

    #[test]
    fn cap_equal_n_matches_uncapped() {
        let d = line(&[0.0, 0.4, 1.9, 3.0, 7.5, 8.0]);
        for link in Linkage::ALL {
            let a = agglomerate(&d, link, None).unwrap();
            let b = agglomerate(&d, link, Some(6)).unwrap();
            assert_eq!(a.merges(), b.merges());
        }
    }

    #[test]
    fn zero_cap_is_config_error() {
        assert!(matches!(
            agglomerate(&two_pairs(), Linkage::Average, Some(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn tree_text_roundtrip() {
        let tree = agglomerate(&line(&[0.0, 1.0, 3.0, 10.0]), Linkage::Ward, Some(3)).unwrap();
        let mut buf = Vec::new();
        tree.write_text(&mut buf).unwrap();
        let back = MergeTree::read_text(buf.as_slice()).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn kirigami_cap_one_gives_singletons() {
        let d = line(&[0.0, 1.0, 3.0, 10.0, 11.0]);
        let k1 = kirigami1(&d, Linkage::Average, FitIndex::Ch, 1).unwrap();
        assert_eq!(k1.partition.k(), 5);
        let k2 = kirigami2(&d, Linkage::Average, FitIndex::Ch, 1).unwrap();
        assert_eq!(k2.partition.k(), 5);
    }

    #[test]
    fn kirigami2_two_pairs_forest() {
        let p = kirigami2(&two_pairs(), Linkage::Average, FitIndex::Ch, 2).unwrap();
        assert_eq!(p.partition.labels(), &[1, 1, 2, 2]);
    }

    #[test]
    fn pam_examples() {
        let d = two_pairs();
        let r = pam(&d, 2, 7).unwrap();
        assert_eq!(r.partition.labels(), &[1, 1, 2, 2]);
        let all = pam(&d, 4, 3).unwrap();
        assert_eq!(all.cost, 0.0);
        assert_eq!(all.partition.k(), 4);
        let d = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let one = pam(&d, 1, 0).unwrap();
        assert_eq!(one.medoids, vec![2]);
        assert!(pam(&d, 6, 0).is_err());
    }

    #[test]
    fn ward_coefficients() {
        let c = Linkage::Ward.coefficients(2, 3, 5);
        assert_eq!(c.alpha_i, 0.7);
        assert_eq!(c.alpha_j, 0.8);
        assert_eq!(c.beta, -0.5);
        // coefficient form reproduces min/max for single/complete
        let s = Linkage::Single.coefficients(1, 1, 1).apply(2.0, 5.0, 1.0);
        let m = Linkage::Complete.coefficients(1, 1, 1).apply(2.0, 5.0, 1.0);
        assert_eq!((s, m), (2.0, 5.0));
    }
}
