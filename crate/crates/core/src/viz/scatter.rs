use crate::error::{Error, Result};
use crate::partition::Partition;

use super::svg::{axes, cluster_colour, escape, fmt, Doc, Scale};

/// 0.95 quantile of the chi-squared distribution with 2 degrees of freedom,
/// `-2 ln 0.05`.
pub const CHI2_2DF_95: f64 = 5.991464547107979;

/// 95% probability ellipse of a bivariate normal fitted to a point cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSpec {
    pub center: [f64; 2],
    /// Major then minor semi-axis.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the x-axis, radians in `(-pi/2, pi/2]`.
    pub rotation: f64,
}

/// Ellipse from the sample mean and covariance (`n - 1` denominator).
pub fn ellipse_95(points: &[[f64; 2]]) -> Result<EllipseSpec> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("an ellipse needs at least 3 points, got {n}")));
    }
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - mx, p[1] - my);
        a += dx * dx;
        b += dx * dy;
        c += dy * dy;
    }
    let m = (n - 1) as f64;
    let (a, b, c) = (a / m, b / m, c / m);
    let half_trace = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (major, minor) = (half_trace + radius, half_trace - radius);
    if !(minor > 1e-12 * major.max(1e-300)) {
        return Err(Error::Degenerate("points are collinear; the covariance is singular".into()));
    }
    let mut rotation = 0.5 * (2.0 * b).atan2(a - c);
    if rotation <= -std::f64::consts::FRAC_PI_2 {
        rotation += std::f64::consts::PI;
    }
    Ok(EllipseSpec {
        center: [mx, my],
        semi_axes: [(major * CHI2_2DF_95).sqrt(), (minor * CHI2_2DF_95).sqrt()],
        rotation,
    })
}

const W: f64 = 560.0;
const H: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

/// Points coloured by cluster, optionally with each cluster's 95% ellipse.
/// Clusters too small or too flat for an ellipse are drawn without one.
pub fn render_scatter(
    points: &[[f64; 2]],
    partition: &Partition,
    ellipses: bool,
    x_label: &str,
    y_label: &str,
) -> Result<String> {
    if points.is_empty() {
        return Err(Error::InvalidInput("nothing to plot".into()));
    }
    if points.len() != partition.n() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} partition entries",
            points.len(),
            partition.n()
        )));
    }
    let groups = partition.groups();
    let fitted: Vec<Option<EllipseSpec>> = groups
        .iter()
        .map(|g| {
            if ellipses {
                ellipse_95(&g.iter().map(|&i| points[i]).collect::<Vec<_>>()).ok()
            } else {
                None
            }
        })
        .collect();

    // keep ellipses inside the frame
    let mut xs_all: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let mut ys_all: Vec<f64> = points.iter().map(|p| p[1]).collect();
    for e in fitted.iter().flatten() {
        let r = e.semi_axes[0];
        xs_all.extend([e.center[0] - r, e.center[0] + r]);
        ys_all.extend([e.center[1] - r, e.center[1] + r]);
    }
    let xs = Scale::fit(xs_all, LEFT, W - RIGHT);
    let ys = Scale::fit(ys_all, H - BOTTOM, TOP);
    let mut doc = Doc::new(W, H);
    axes(&mut doc, &xs, &ys, x_label, y_label);

    for (g, members) in groups.iter().enumerate() {
        let label = g + 1;
        let colour = cluster_colour(label);
        doc.line(format!(r#"<g class="cluster" id="cluster-{label}">"#));
        for &i in members {
            doc.line(format!(
                r#"<circle class="point" data-id="{}" cx="{}" cy="{}" r="3" fill="{colour}" fill-opacity="0.8"/>"#,
                escape(&partition.ids()[i]),
                fmt(xs.map(points[i][0])),
                fmt(ys.map(points[i][1]))
            ));
        }
        if let Some(e) = fitted[g] {
            // pixel scales differ per axis, so draw the ellipse as a path
            let mut path = String::new();
            for step in 0..=72 {
                let t = step as f64 / 72.0 * std::f64::consts::TAU;
                let (u, v) = (e.semi_axes[0] * t.cos(), e.semi_axes[1] * t.sin());
                let (sr, cr) = e.rotation.sin_cos();
                let px = xs.map(e.center[0] + u * cr - v * sr);
                let py = ys.map(e.center[1] + u * sr + v * cr);
                path.push_str(&format!("{}{},{} ", if step == 0 { "M" } else { "L" }, fmt(px), fmt(py)));
            }
            doc.line(format!(
                r#"<path class="ellipse" data-center="{:.6},{:.6}" d="{}Z" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                e.center[0],
                e.center[1],
                path
            ));
        }
        doc.line("</g>");
        doc.text(W - RIGHT + 14.0, TOP + 14.0 + g as f64 * 16.0, 11.0, "start", &format!(r#" fill="{colour}""#), &format!("Cluster {label}"));
    }
    Ok(doc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn quantile_constant() {
        let q = ChiSquared::new(2.0).unwrap().inverse_cdf(0.95);
        assert!((q - CHI2_2DF_95).abs() < 1e-9);
        assert!((CHI2_2DF_95 + 2.0 * 0.05f64.ln()).abs() < 1e-12);
    }

    fn cross(sx: f64, sy: f64) -> Vec<[f64; 2]> {
        // four points whose sample covariance is diag(sx^2, sy^2)
        let k = (1.5f64).sqrt();
        vec![[sx * k, 0.0], [-sx * k, 0.0], [0.0, sy * k], [0.0, -sy * k]]
    }

    #[test]
    fn identity_covariance_gives_circle() {
        let e = ellipse_95(&cross(1.0, 1.0)).unwrap();
        let r = CHI2_2DF_95.sqrt();
        assert!((e.semi_axes[0] - r).abs() < 1e-12 && (e.semi_axes[1] - r).abs() < 1e-12);
        assert!((r - 2.4477).abs() < 1e-4);
    }

    #[test]
    fn axis_aligned_and_rotated() {
        let e = ellipse_95(&cross(2.0, 1.0)).unwrap();
        let r = CHI2_2DF_95.sqrt();
        assert!((e.semi_axes[0] - 2.0 * r).abs() < 1e-12);
        assert!((e.semi_axes[1] - r).abs() < 1e-12);
        assert!(e.rotation.abs() < 1e-12);
        let angle: f64 = 0.7;
        let (s, c) = angle.sin_cos();
        let rotated: Vec<[f64; 2]> = cross(2.0, 1.0)
            .iter()
            .map(|p| [p[0] * c - p[1] * s + 3.0, p[0] * s + p[1] * c - 1.0])
            .collect();
        let e = ellipse_95(&rotated).unwrap();
        assert!((e.rotation - angle).abs() < 1e-6);
        assert!((e.center[0] - 3.0).abs() < 1e-12 && (e.center[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_rejected() {
        assert!(ellipse_95(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
        assert!(ellipse_95(&[[0.0, 0.0], [1.0, 1.0]]).is_err());
    }

    #[test]
    fn single_point_single_marker() {
        let p = Partition::from_labels(vec!["a".into()], &[1]).unwrap();
        let svg = render_scatter(&[[1.0, 2.0]], &p, true, "x", "y").unwrap();
        assert_eq!(svg.matches(r#"class="point""#).count(), 1);
        assert_eq!(svg.matches(r#"class="ellipse""#).count(), 0);
    }
}
