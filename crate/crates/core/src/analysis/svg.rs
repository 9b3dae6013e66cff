//! Minimal static SVG bar charts.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    /// Optional (low, high) whisker per category.
    pub range: Option<Vec<(f64, f64)>>,
}

const PALETTE: [&str; 6] = ["#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grouped bar chart: one group per category, one bar per series.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], series: &[Series]) -> String {
    let (w, h) = (120.0 + 60.0 * categories.len().max(1) as f64 * series.len().max(1) as f64 / 2.0 + 40.0, 360.0);
    let (left, right, top, bottom) = (60.0, w - 20.0, 40.0, h - 90.0);
    let ymax = series
        .iter()
        .flat_map(|s| s.values.iter().copied().chain(s.range.iter().flatten().map(|r| r.1)))
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.1;
    let y = |v: f64| bottom - (bottom - top) * v / ymax;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, esc(title));
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right:.1}" y2="{bottom}" stroke="black"/>"#);
    for k in 0..=4 {
        let v = ymax * k as f64 / 4.0;
        let _ = writeln!(s, r##"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text><line x1="{left}" y1="{:.1}" x2="{right:.1}" y2="{:.1}" stroke="#ddd"/>"##, left - 4.0, y(v) + 4.0, y(v), y(v));
    }
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#, (top + bottom) / 2.0, (top + bottom) / 2.0, esc(y_label));
    let group = (right - left) / categories.len().max(1) as f64;
    let bar = group * 0.8 / series.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let gx = left + group * ci as f64 + group * 0.1;
        for (si, se) in series.iter().enumerate() {
            let v = se.values.get(ci).copied().unwrap_or(0.0);
            let x = gx + bar * si as f64;
            let _ = writeln!(s, r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#, y(v), bar * 0.9, bottom - y(v), PALETTE[si % PALETTE.len()]);
            if let Some((lo, hi)) = se.range.as_ref().and_then(|r| r.get(ci)) {
                let cx = x + bar * 0.45;
                let _ = writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, y(*lo), y(*hi));
            }
        }
        let lx = gx + group * 0.4;
        let _ = writeln!(s, r#"<text x="{lx:.1}" y="{:.1}" transform="rotate(45 {lx:.1} {:.1})">{}</text>"#, bottom + 14.0, bottom + 14.0, esc(cat));
    }
    for (si, se) in series.iter().enumerate() {
        let ly = top + 14.0 * si as f64;
        let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#, right - 110.0, ly - 9.0, PALETTE[si % PALETTE.len()], right - 96.0, ly, esc(&se.label));
    }
    s.push_str("</svg>\n");
    s
}

/// `<study>_<scheme>_<timestamp>.svg`
pub fn plot_file_name(study: &str, scheme: &str, timestamp: &str) -> String {
    format!("{study}_{scheme}_{timestamp}.svg")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_well_formed() {
        let cats = vec!["a<b".to_string(), "c".to_string()];
        let s = bar_chart("t", "y", &cats, &[Series { label: "x".into(), values: vec![0.5, 1.0], range: Some(vec![(0.4, 0.6), (0.9, 1.1)]) }]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<rect").count(), 1 + 2 + 1);
        assert_eq!(plot_file_name("permutation", "area", "20260101T000000Z"), "permutation_area_20260101T000000Z.svg");
    }
}
