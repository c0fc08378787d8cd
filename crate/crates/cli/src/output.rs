//! Schema v1 rows and the CSV / SVG writers.

use std::fmt::Write as _;

use serde::Serialize;

pub const SCHEMA: &str = "v1";
pub const CSV_HEADER: &str = "scheme,d,beta_d,beta,ebn0_db,snr,rate,route,stderr";

/// One row of a capacity, sweep or Monte Carlo table.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub scheme: String,
    pub d: Option<u32>,
    pub beta_d: Option<u32>,
    pub beta: f64,
    pub ebn0_db: Option<f64>,
    pub snr: Option<f64>,
    pub rate: f64,
    pub route: String,
    pub stderr: Option<f64>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Row {
    fn csv(&self) -> String {
        [
            self.scheme.clone(),
            opt(self.d),
            opt(self.beta_d),
            self.beta.to_string(),
            opt(self.ebn0_db),
            opt(self.snr),
            self.rate.to_string(),
            self.route.clone(),
            opt(self.stderr),
        ]
        .join(",")
    }
}

/// `# schema=v1`, any extra comment lines, the header, then the rows.
pub fn rows_csv(comments: &[String], rows: &[Row]) -> String {
    let mut out = format!("# schema={SCHEMA}\n");
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    pub markers: bool,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Single-file line plot: axes with ticks, one polyline per series, legend.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (820.0, 520.0);
    let (left, right, top, bottom) = (70.0, 200.0, 40.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let y1 = y1 * 1.05;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let sy = |y: f64| h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (w - right + left) / 2.0, escape(title));
    let (ax0, ay0, ax1, ay1) = (sx(x0), sy(y0), sx(x1), sy(y1));
    let _ = writeln!(s, r#"<path d="M{ax0:.1},{ay1:.1} L{ax0:.1},{ay0:.1} L{ax1:.1},{ay0:.1}" fill="none" stroke="black"/>"#);
    for i in 0..=5 {
        let xv = x0 + (x1 - x0) * i as f64 / 5.0;
        let yv = y0 + (y1 - y0) * i as f64 / 5.0;
        let _ = writeln!(s, r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="black"/><text x="{0:.1}" y="{3:.1}" text-anchor="middle">{4}</text>"#, sx(xv), ay0, ay0 + 5.0, ay0 + 18.0, tick(xv));
        let _ = writeln!(s, r#"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="black"/><text x="{3:.1}" y="{4:.1}" text-anchor="end">{5}</text>"#, ax0 - 5.0, sy(yv), ax0, ax0 - 8.0, sy(yv) + 4.0, tick(yv));
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (ax0 + ax1) / 2.0, h - 15.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="18" y="{0:.1}" text-anchor="middle" transform="rotate(-90 18 {0:.1})">{1}</text>"#, (ay0 + ay1) / 2.0, escape(y_label));

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="4 3""# } else { "" };
        if path.len() > 1 {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
        }
        if ser.markers || path.len() == 1 {
            for &(x, y) in &ser.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
            }
        }
        let ly = top + 18.0 * i as f64;
        let lx = w - right + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#, lx + 25.0, lx + 32.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_fields_for_missing_values() {
        let r = Row {
            scheme: "cover_wyner".into(),
            d: None,
            beta_d: None,
            beta: 1.5,
            ebn0_db: Some(10.0),
            snr: Some(2.0),
            rate: 3.25,
            route: "closed_form".into(),
            stderr: None,
        };
        assert_eq!(r.csv(), "cover_wyner,,,1.5,10,2,3.25,closed_form,");
        let text = rows_csv(&["note=1".into()], &[r]);
        assert!(text.starts_with("# schema=v1\n# note=1\nscheme,d,beta_d,"));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = svg_plot(
            "t",
            "x",
            "y",
            &[Series { name: "a<b".into(), points: vec![(0.0, 1.0), (1.0, 2.0)], dashed: true, markers: true }],
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("polyline") && s.contains("a&lt;b"));
    }
}
