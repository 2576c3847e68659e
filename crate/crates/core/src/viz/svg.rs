use std::fmt::Write;

/// Ten-colour categorical palette; cluster `c` always gets entry `(c - 1) % 10`.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

pub fn cluster_colour(label: usize) -> &'static str {
    PALETTE[(label.max(1) - 1) % PALETTE.len()]
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Coordinates with two decimals; avoids `-0.00`.
pub(crate) fn fmt(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Short tick label.
pub(crate) fn tick(v: f64) -> String {
    let s = if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub(crate) struct Doc {
    pub body: String,
}

impl Doc {
    pub fn new(width: f64, height: f64) -> Self {
        let mut body = String::new();
        let _ = writeln!(body, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
            w = fmt(width),
            h = fmt(height)
        );
        let _ = writeln!(
            body,
            r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
            fmt(width),
            fmt(height)
        );
        Self { body }
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.body.push_str(s.as_ref());
        self.body.push('\n');
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, extra: &str, content: &str) {
        self.line(format!(
            r#"<text x="{}" y="{}" font-size="{}" text-anchor="{anchor}"{extra}>{}</text>"#,
            fmt(x),
            fmt(y),
            fmt(size),
            escape(content)
        ));
    }

    pub fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Linear map from a data range onto a pixel range, padded by 5%.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scale {
    pub lo: f64,
    pub hi: f64,
    pub from: f64,
    pub to: f64,
}

impl Scale {
    pub fn fit(values: impl IntoIterator<Item = f64>, from: f64, to: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.into_iter().filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 1.0;
            hi += 1.0;
        }
        let pad = 0.05 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
            from,
            to,
        }
    }

    pub fn map(&self, v: f64) -> f64 {
        self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }

    pub fn ticks(&self, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (count - 1) as f64)
            .collect()
    }
}

/// Frame with ticks and axis titles for a plot area.
pub(crate) fn axes(doc: &mut Doc, xs: &Scale, ys: &Scale, x_label: &str, y_label: &str) {
    let (left, right) = (xs.from, xs.to);
    let (bottom, top) = (ys.from, ys.to);
    doc.line(format!(
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
        fmt(left),
        fmt(top),
        fmt(right - left),
        fmt(bottom - top)
    ));
    for t in xs.ticks(5) {
        let x = xs.map(t);
        doc.line(format!(
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#333333"/>"##,
            fmt(x),
            fmt(bottom),
            fmt(bottom + 4.0)
        ));
        doc.text(x, bottom + 16.0, 10.0, "middle", "", &tick(t));
    }
    for t in ys.ticks(5) {
        let y = ys.map(t);
        doc.line(format!(
            r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="#333333"/>"##,
            fmt(left - 4.0),
            fmt(y),
            fmt(left)
        ));
        doc.text(left - 6.0, y + 3.0, 10.0, "end", "", &tick(t));
    }
    doc.text((left + right) / 2.0, bottom + 34.0, 12.0, "middle", "", x_label);
    let cy = (top + bottom) / 2.0;
    doc.text(
        left - 46.0,
        cy,
        12.0,
        "middle",
        &format!(r#" transform="rotate(-90 {} {})""#, fmt(left - 46.0), fmt(cy)),
        y_label,
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escaping_and_numbers() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
        assert_eq!(fmt(-0.001), "0.00");
        assert_eq!(tick(2.5), "2.5");
        assert_eq!(tick(3.0), "3");
        assert_eq!(cluster_colour(11), PALETTE[0]);
    }
}
