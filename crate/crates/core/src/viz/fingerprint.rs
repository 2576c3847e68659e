use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::preprocess::{PercentileTable, QUINTILE_LABELS};

use super::svg::{cluster_colour, fmt, Doc};

/// The observation singled out on a fingerprint plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Highlight {
    pub id: String,
    pub cluster: usize,
    /// Quintile bin (1-5) per plotted variable.
    pub bins: Vec<u8>,
}

/// Share of each cluster's members falling in each quintile of each variable.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintTable {
    pub variables: Vec<String>,
    /// Canonical cluster labels, ascending.
    pub clusters: Vec<usize>,
    pub sizes: Vec<usize>,
    /// `proportions[cluster][variable][bin]`.
    pub proportions: Vec<Vec<[f64; 5]>>,
    pub highlight: Option<Highlight>,
}

/// Apportions each selected variable's quintile bins over the clusters of
/// `partition`. The partition may cover a subset of the percentile table's rows.
pub fn fingerprint_table(
    percentiles: &PercentileTable,
    partition: &Partition,
    variables: &[String],
    highlight: Option<&str>,
) -> Result<FingerprintTable> {
    if variables.is_empty() {
        return Err(Error::InvalidInput("no variables selected for the fingerprint".into()));
    }
    let cols = variables
        .iter()
        .map(|v| {
            percentiles
                .column_index(v)
                .ok_or_else(|| Error::InvalidInput(format!("variable `{v}` is not in the percentile table")))
        })
        .collect::<Result<Vec<_>>>()?;
    let row_of: HashMap<&str, usize> = percentiles.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let rows = partition
        .ids()
        .iter()
        .map(|id| {
            row_of
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::IdMismatch(format!("id `{id}` is not in the percentile table")))
        })
        .collect::<Result<Vec<_>>>()?;

    let k = partition.k();
    let sizes = partition.sizes();
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidInput(format!("cluster {} is empty", c + 1)));
    }
    let mut counts = vec![vec![[0usize; 5]; cols.len()]; k];
    for (i, &row) in rows.iter().enumerate() {
        let c = partition.label(i) - 1;
        for (v, &col) in cols.iter().enumerate() {
            counts[c][v][percentiles.bins[(row, col)] as usize - 1] += 1;
        }
    }
    let proportions = counts
        .iter()
        .zip(&sizes)
        .map(|(per_var, &size)| {
            per_var
                .iter()
                .map(|cells| cells.map(|c| c as f64 / size as f64))
                .collect()
        })
        .collect();

    let highlight = match highlight {
        None => None,
        Some(id) => {
            let i = partition
                .ids()
                .iter()
                .position(|x| x == id)
                .ok_or_else(|| Error::InvalidInput(format!("highlight id `{id}` is not in the partition")))?;
            Some(Highlight {
                id: id.to_string(),
                cluster: partition.label(i),
                bins: cols.iter().map(|&c| percentiles.bins[(rows[i], c)]).collect(),
            })
        }
    };
    Ok(FingerprintTable {
        variables: variables.to_vec(),
        clusters: (1..=k).collect(),
        sizes,
        proportions,
        highlight,
    })
}

impl FingerprintTable {
    /// Cell opacity: proportion over the row maximum, so the modal bin is opaque.
    pub fn opacity(&self, cluster: usize, variable: usize, bin: usize) -> f64 {
        let row = &self.proportions[cluster][variable];
        let max = row.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            row[bin] / max
        } else {
            0.0
        }
    }

    /// Writes `cluster,size,variable,bin,descriptor,proportion`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cluster", "size", "variable", "bin", "descriptor", "proportion"])?;
        for (c, &label) in self.clusters.iter().enumerate() {
            for (v, name) in self.variables.iter().enumerate() {
                for b in 0..5 {
                    w.write_record([
                        label.to_string(),
                        self.sizes[c].to_string(),
                        name.clone(),
                        (b + 1).to_string(),
                        QUINTILE_LABELS[b].to_string(),
                        format!("{:.6}", self.proportions[c][v][b]),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

const CELL_W: f64 = 36.0;
const CELL_H: f64 = 22.0;
const LABEL_W: f64 = 140.0;
const PANEL_GAP: f64 = 24.0;
const TOP: f64 = 50.0;

/// Geometry of one fingerprint cell: `(x, y, width, height)`.
pub(crate) fn cell_box(cluster_pos: usize, variable: usize, bin: usize) -> (f64, f64, f64, f64) {
    let panel_x = LABEL_W + cluster_pos as f64 * (5.0 * CELL_W + PANEL_GAP);
    (
        panel_x + bin as f64 * CELL_W,
        TOP + variable as f64 * CELL_H,
        CELL_W,
        CELL_H,
    )
}

/// One panel per cluster, variables as rows and quintiles as columns; cell
/// opacity follows [`FingerprintTable::opacity`]. Column headers use the
/// quintile descriptors only.
pub fn render_fingerprint(table: &FingerprintTable) -> String {
    let k = table.clusters.len();
    let d = table.variables.len();
    let width = LABEL_W + k as f64 * (5.0 * CELL_W + PANEL_GAP) + 20.0;
    let height = TOP + d as f64 * CELL_H + 130.0;
    let mut doc = Doc::new(width, height);

    for (v, name) in table.variables.iter().enumerate() {
        let (_, y, _, h) = cell_box(0, v, 0);
        doc.text(LABEL_W - 8.0, y + h / 2.0 + 4.0, 11.0, "end", "", name);
    }
    for (pos, &label) in table.clusters.iter().enumerate() {
        let colour = cluster_colour(label);
        let (x0, _, _, _) = cell_box(pos, 0, 0);
        doc.text(
            x0 + 2.5 * CELL_W,
            TOP - 16.0,
            12.0,
            "middle",
            r#" font-weight="bold""#,
            &format!("Cluster {label} (n = {})", table.sizes[pos]),
        );
        doc.line(format!(r#"<g class="panel" id="panel-c{label}">"#));
        for v in 0..d {
            for b in 0..5 {
                let (x, y, w, h) = cell_box(pos, v, b);
                doc.line(format!(
                    r#"<rect id="cell-c{label}-v{v}-q{}" x="{}" y="{}" width="{}" height="{}" fill="{colour}" fill-opacity="{:.4}" stroke="{colour}" stroke-width="0.5"/>"#,
                    b + 1,
                    fmt(x),
                    fmt(y),
                    fmt(w),
                    fmt(h),
                    table.opacity(pos, v, b),
                ));
            }
        }
        doc.line("</g>");
        let base_y = TOP + d as f64 * CELL_H + 8.0;
        for (b, desc) in QUINTILE_LABELS.iter().enumerate() {
            let cx = x0 + (b as f64 + 0.5) * CELL_W;
            doc.text(
                cx,
                base_y,
                10.0,
                "end",
                &format!(r#" transform="rotate(-60 {} {})""#, fmt(cx), fmt(base_y)),
                desc,
            );
        }
    }

    if let Some(hl) = &table.highlight {
        if let Some(pos) = table.clusters.iter().position(|&c| c == hl.cluster) {
            doc.line(format!(r#"<g class="highlight" data-id="{}">"#, super::svg::escape(&hl.id)));
            for (v, &bin) in hl.bins.iter().enumerate() {
                let (x, y, w, h) = cell_box(pos, v, bin as usize - 1);
                let (cx, cy) = (x + w / 2.0, y + h / 2.0);
                doc.line(format!(
                    r##"<polygon id="highlight-v{v}" points="{},{} {},{} {},{}" fill="#000000" stroke="#ffffff" stroke-width="1"/>"##,
                    fmt(cx),
                    fmt(cy - 6.0),
                    fmt(cx - 6.0),
                    fmt(cy + 5.0),
                    fmt(cx + 6.0),
                    fmt(cy + 5.0),
                ));
            }
            doc.line("</g>");
        }
    }
    doc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn percentiles(bins: Vec<Vec<u8>>) -> PercentileTable {
        let n = bins.len();
        let d = bins[0].len();
        PercentileTable {
            ids: (0..n).map(|i| format!("o{i}")).collect(),
            names: (0..d).map(|j| format!("v{j}")).collect(),
            u: DMatrix::from_element(n, d, 0.5),
            bins: DMatrix::from_fn(n, d, |i, j| bins[i][j]),
            degenerate: vec![],
        }
    }

    #[test]
    fn top_quintile_cluster() {
        let bins: Vec<Vec<u8>> = (0..10).map(|i| vec![(i / 2 + 1) as u8]).collect();
        let pt = percentiles(bins);
        let raw: Vec<bool> = (0..10).map(|i| i >= 8).collect();
        let p = Partition::from_labels(pt.ids.clone(), &raw).unwrap();
        let t = fingerprint_table(&pt, &p, &["v0".into()], Some("o9")).unwrap();
        assert_eq!(t.proportions[1][0], [0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(t.proportions[0][0], [0.25, 0.25, 0.25, 0.25, 0.0]);
        let hl = t.highlight.as_ref().unwrap();
        assert_eq!((hl.cluster, hl.bins[0]), (2, 5));
        assert_eq!(t.opacity(1, 0, 4), 1.0);
        assert_eq!(t.opacity(1, 0, 0), 0.0);
    }

    #[test]
    fn missing_inputs_error() {
        let pt = percentiles(vec![vec![1], vec![2], vec![3]]);
        let p = Partition::from_labels(pt.ids.clone(), &[1, 1, 2]).unwrap();
        assert!(fingerprint_table(&pt, &p, &["nope".into()], None).is_err());
        assert!(fingerprint_table(&pt, &p, &["v0".into()], Some("zz")).is_err());
    }

    #[test]
    fn marker_inside_cell() {
        let pt = percentiles((0..10).map(|i| vec![(i / 2 + 1) as u8, (5 - i / 2) as u8]).collect());
        let p = Partition::from_labels(pt.ids.clone(), &[1, 1, 1, 2, 2, 2, 2, 3, 3, 3]).unwrap();
        let t = fingerprint_table(&pt, &p, &["v0".into(), "v1".into()], Some("o4")).unwrap();
        let svg = render_fingerprint(&t);
        let hl = t.highlight.as_ref().unwrap();
        for (v, &bin) in hl.bins.iter().enumerate() {
            let (x, y, w, h) = cell_box(1, v, bin as usize - 1);
            let tag = format!("id=\"highlight-v{v}\" points=\"");
            let start = svg.find(&tag).unwrap() + tag.len();
            let pts = &svg[start..start + svg[start..].find('"').unwrap()];
            for pair in pts.split(' ') {
                let (px, py) = pair.split_once(',').unwrap();
                let (px, py): (f64, f64) = (px.parse().unwrap(), py.parse().unwrap());
                assert!(px >= x && px <= x + w && py >= y && py <= y + h);
            }
        }
        assert_eq!(svg, render_fingerprint(&t));
    }
}
