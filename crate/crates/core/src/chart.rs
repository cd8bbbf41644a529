//! SVG line chart of deviation summaries over a sweep axis.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::{write_atomic, DeviationSummary, MetricsError};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// One polyline per (policy, entity) pair, x = axis value, y = mean
/// deviation. Non-numeric axis values are placed by first appearance.
pub fn render_summary_svg(summaries: &[DeviationSummary]) -> Result<String, MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::EmptyTable);
    }
    let numeric = summaries
        .iter()
        .all(|s| s.axis_value.parse::<f64>().is_ok());
    let mut categories: Vec<&str> = Vec::new();
    let mut series: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for s in summaries {
        let x = if numeric {
            s.axis_value.parse::<f64>().unwrap_or(0.0)
        } else {
            let pos = categories.iter().position(|c| *c == s.axis_value);
            pos.unwrap_or_else(|| {
                categories.push(&s.axis_value);
                categories.len() - 1
            }) as f64
        };
        series
            .entry((s.policy.clone(), s.entity.clone()))
            .or_default()
            .push((x, s.mean_deviation_mhz));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let xs = series.values().flatten().map(|p| p.0);
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    let y_max = series.values().flatten().map(|p| p.1).fold(0.0, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_top = if y_max > 0.0 { y_max * 1.1 } else { 1.0 };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| {
        if x_max > x_min {
            MARGIN_LEFT + (x - x_min) / x_span * plot_w
        } else {
            MARGIN_LEFT + plot_w / 2.0
        }
    };
    let py = |y: f64| MARGIN_TOP + plot_h - y / y_top * plot_h;
    let axis_name = escape(&summaries[0].axis_name);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (x0, y0, x1, y1) = (
        MARGIN_LEFT,
        MARGIN_TOP + plot_h,
        MARGIN_LEFT + plot_w,
        MARGIN_TOP,
    );
    let _ = writeln!(
        svg,
        r#"<path d="M {x0} {y1} L {x0} {y0} L {x1} {y0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = y_top * f64::from(i) / 5.0;
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let v = x_min + x_span * f64::from(i) / 5.0;
        let label = if categories.is_empty() {
            format!("{v:.3}")
        } else {
            categories
                .get(v.round() as usize)
                .map_or(String::new(), |c| escape(c))
        };
        let x = px(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">{axis_name}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">mean deviation (MHz)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, ((policy, entity), points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let name = escape(&format!("{policy} {entity}"));
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-series="{name}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        );
        for (x, y) in points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(*x),
                py(*y)
            );
        }
        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 20.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{name}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_summary_chart(
    summaries: &[DeviationSummary],
    path: &Path,
) -> Result<(), MetricsError> {
    write_atomic(path, render_summary_svg(summaries)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(policy: &str, entity: &str, x: &str, mean: f64) -> DeviationSummary {
        DeviationSummary {
            axis_name: "mno_user_count".into(),
            axis_value: x.into(),
            policy: policy.into(),
            level: "inter".into(),
            entity: entity.into(),
            window_count: 10,
            mean_deviation_mhz: mean,
            std_deviation_mhz: 1.0,
        }
    }

    #[test]
    fn one_polyline_per_policy_entity() {
        let mut s = Vec::new();
        for p in ["FR", "PR", "CS"] {
            for x in 0..6 {
                s.push(summary(p, "SI-I", &(5 * x).to_string(), x as f64));
            }
        }
        let svg = render_summary_svg(&s).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let lines: Vec<_> = doc
            .descendants()
            .filter(|n| n.has_tag_name("polyline"))
            .collect();
        assert_eq!(lines.len(), 3);
        for l in lines {
            assert_eq!(l.attribute("points").unwrap().split(' ').count(), 6);
        }
    }

    #[test]
    fn single_point_and_categories() {
        let svg = render_summary_svg(&[summary("PR", "SI-I", "5", 0.0)]).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(
            doc.descendants()
                .filter(|n| n.has_tag_name("circle"))
                .count(),
            1
        );

        let cats = [
            summary("PR", "SI-I", "FR", 1.0),
            summary("PR", "SI-I", "CS", 2.0),
        ];
        roxmltree::Document::parse(&render_summary_svg(&cats).unwrap()).unwrap();
        assert!(matches!(
            render_summary_svg(&[]),
            Err(MetricsError::EmptyTable)
        ));
    }
}
