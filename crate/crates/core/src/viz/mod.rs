//! Static SVG figures with companion CSVs. Every renderer is a pure function
//! of its input, so identical inputs give byte-identical documents.

mod curves;
mod fingerprint;
mod scatter;
mod svg;

pub use curves::{render_curves, render_tradeoff, CurvePlot, Guide, GuideAxis, GuideStyle, Series};
pub use fingerprint::{fingerprint_table, render_fingerprint, FingerprintTable, Highlight};
pub use scatter::{ellipse_95, render_scatter, EllipseSpec, CHI2_2DF_95};
pub use svg::{cluster_colour, PALETTE};
