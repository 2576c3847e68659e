use std::io::Write;

use crate::error::{Error, Result};
use crate::realloc::{TradeoffCurve, TradeoffRow};

use super::svg::{axes, cluster_colour, escape, fmt, Doc, Scale};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuideAxis {
    /// Vertical line at an x value.
    X,
    /// Horizontal line at a y value.
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuideStyle {
    Dashed,
    Dotted,
}

impl GuideStyle {
    fn dasharray(self) -> &'static str {
        match self {
            GuideStyle::Dashed => "6,4",
            GuideStyle::Dotted => "1,3",
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            GuideStyle::Dashed => "dashed",
            GuideStyle::Dotted => "dotted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Guide {
    pub axis: GuideAxis,
    pub value: f64,
    pub style: GuideStyle,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub guides: Vec<Guide>,
}

impl CurvePlot {
    /// Writes `series,x,y` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["series", "x", "y"])?;
        for s in &self.series {
            for &(x, y) in &s.points {
                w.write_record([s.name.clone(), format!("{x}"), format!("{y}")])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

const W: f64 = 620.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Line chart with one marker per point; series are coloured in order and
/// non-finite points are skipped.
pub fn render_curves(plot: &CurvePlot) -> Result<String> {
    if plot.series.is_empty() || plot.series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::InvalidInput("no series to plot".into()));
    }
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let all = || plot.series.iter().flat_map(|s| s.points.iter().filter(finite));
    let guide_vals = |axis| plot.guides.iter().filter(move |g| g.axis == axis).map(|g| g.value);
    let xs = Scale::fit(all().map(|p| p.0).chain(guide_vals(GuideAxis::X)), LEFT, W - RIGHT);
    let ys = Scale::fit(all().map(|p| p.1).chain(guide_vals(GuideAxis::Y)), H - BOTTOM, TOP);

    let mut doc = Doc::new(W, H);
    doc.text(W / 2.0, 22.0, 14.0, "middle", "", &plot.title);
    axes(&mut doc, &xs, &ys, &plot.x_label, &plot.y_label);

    for g in &plot.guides {
        let (x1, y1, x2, y2) = match g.axis {
            GuideAxis::X => (xs.map(g.value), TOP, xs.map(g.value), H - BOTTOM),
            GuideAxis::Y => (LEFT, ys.map(g.value), W - RIGHT, ys.map(g.value)),
        };
        doc.line(format!(
            r##"<line class="guide {}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#555555" stroke-dasharray="{}"/>"##,
            g.style.as_str(),
            fmt(x1),
            fmt(y1),
            fmt(x2),
            fmt(y2),
            g.style.dasharray()
        ));
        if let Some(label) = &g.label {
            let (tx, ty) = match g.axis {
                GuideAxis::X => (x1 + 3.0, TOP + 10.0),
                GuideAxis::Y => (W - RIGHT - 3.0, y1 - 3.0),
            };
            let anchor = if g.axis == GuideAxis::X { "start" } else { "end" };
            doc.text(tx, ty, 9.0, anchor, r##" fill="#555555""##, label);
        }
    }

    for (s, series) in plot.series.iter().enumerate() {
        let colour = cluster_colour(s + 1);
        let pts: Vec<(f64, f64)> = series.points.iter().filter(finite).map(|&(x, y)| (xs.map(x), ys.map(y))).collect();
        doc.line(format!(r#"<g class="series" data-name="{}">"#, escape(&series.name)));
        if pts.len() > 1 {
            let d: Vec<String> = pts.iter().map(|(x, y)| format!("{},{}", fmt(*x), fmt(*y))).collect();
            doc.line(format!(
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                d.join(" ")
            ));
        }
        for (x, y) in &pts {
            doc.line(format!(
                r#"<circle class="marker" cx="{}" cy="{}" r="3" fill="{colour}"/>"#,
                fmt(*x),
                fmt(*y)
            ));
        }
        doc.line("</g>");
        doc.text(W - RIGHT + 14.0, TOP + 14.0 + s as f64 * 16.0, 11.0, "start", &format!(r#" fill="{colour}""#), &series.name);
    }
    Ok(doc.finish())
}

/// Stability against fit across the reallocation grid. The chosen row gets
/// dashed guides at its PCR and index, and the floor a dotted vertical guide.
pub fn render_tradeoff(curve: &TradeoffCurve, chosen: Option<&TradeoffRow>, pcr_min: f64) -> Result<String> {
    let points: Vec<(f64, f64)> = curve
        .rows
        .iter()
        .filter(|r| r.is_usable())
        .map(|r| (r.pcr.unwrap(), r.index.unwrap()))
        .collect();
    if points.is_empty() {
        return Err(Error::InvalidInput("no usable rows in the tradeoff curve".into()));
    }
    let mut guides = vec![Guide {
        axis: GuideAxis::X,
        value: pcr_min,
        style: GuideStyle::Dotted,
        label: Some(format!("PCR floor {pcr_min:.2}")),
    }];
    if let Some(row) = chosen.filter(|r| r.is_usable()) {
        guides.push(Guide {
            axis: GuideAxis::X,
            value: row.pcr.unwrap(),
            style: GuideStyle::Dashed,
            label: Some(format!("chosen p = {:.2}", row.p)),
        });
        guides.push(Guide {
            axis: GuideAxis::Y,
            value: row.index.unwrap(),
            style: GuideStyle::Dashed,
            label: None,
        });
    }
    render_curves(&CurvePlot {
        title: "Stability against fit".into(),
        x_label: "proportion of connections retained".into(),
        y_label: curve.index.as_str().to_uppercase(),
        series: vec![Series {
            name: "reallocation grid".into(),
            points,
        }],
        guides,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::FitIndex;

    fn row(p: f64, pcr: f64, index: f64) -> TradeoffRow {
        TradeoffRow {
            p,
            pcr: Some(pcr),
            index: Some(index),
            k: Some(3),
            reallocated: Some(1),
            partition: None,
            error: None,
        }
    }

    #[test]
    fn empty_series_rejected() {
        let plot = CurvePlot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![],
            guides: vec![],
        };
        assert!(render_curves(&plot).is_err());
    }

    #[test]
    fn tradeoff_guides() {
        let curve = TradeoffCurve {
            index: FitIndex::Ch,
            rows: vec![row(0.0, 1.0, 10.0), row(0.05, 0.93, 12.0), row(0.1, 0.7, 15.0)],
        };
        let svg = render_tradeoff(&curve, Some(&curve.rows[1]), 0.9).unwrap();
        assert_eq!(svg.matches(r#"class="guide dashed""#).count(), 2);
        assert_eq!(svg.matches(r#"class="guide dotted""#).count(), 1);
        assert_eq!(svg.matches(r#"class="marker""#).count(), 3);
        assert_eq!(svg, render_tradeoff(&curve, Some(&curve.rows[1]), 0.9).unwrap());
    }
}
