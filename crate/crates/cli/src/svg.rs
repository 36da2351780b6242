//! Static small-multiples plot of stability series.

use std::fmt::Write as _;

use chrono::{DateTime, Utc};

/// Level of the horizontal reference line in every panel.
pub const REFERENCE_LEVEL: f64 = 0.5;

const COLUMNS: usize = 4;
const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 170.0;
const HEADER_H: f64 = 56.0;
const FOOTER_H: f64 = 28.0;
const PLOT_LEFT: f64 = 30.0;
const PLOT_RIGHT: f64 = 10.0;
const PLOT_TOP: f64 = 22.0;
const PLOT_BOTTOM: f64 = 22.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PanelLine {
    pub label: String,
    /// CSS class of the path, also selects its colour.
    pub class: String,
    pub points: Vec<(DateTime<Utc>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    /// Marks queries that are missing from one of the sources.
    pub flagged: bool,
    pub lines: Vec<PanelLine>,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
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

fn colour(class: &str) -> &'static str {
    match class {
        "results" => "#1f5fa8",
        "suggestions" => "#d9731a",
        _ => "#444444",
    }
}

/// Renders the panels on a grid, all sharing the same time axis and a 0..1
/// value axis, each with one reference line at `reference`.
pub fn render_grid(title: &str, panels: &[Panel], reference: f64) -> String {
    let rows = panels.len().div_ceil(COLUMNS).max(1);
    let cols = panels.len().clamp(1, COLUMNS);
    let width = cols as f64 * PANEL_W;
    let height = HEADER_H + rows as f64 * PANEL_H + FOOTER_H;

    let all_times = panels
        .iter()
        .flat_map(|p| p.lines.iter())
        .flat_map(|l| l.points.iter().map(|(t, _)| *t));
    let (t_min, t_max) = all_times.fold(
        (None, None),
        |(lo, hi): (Option<DateTime<Utc>>, Option<DateTime<Utc>>), t| {
            (
                Some(lo.map_or(t, |lo| lo.min(t))),
                Some(hi.map_or(t, |hi| hi.max(t))),
            )
        },
    );
    let span = match (t_min, t_max) {
        (Some(lo), Some(hi)) if hi > lo => (hi - lo).num_seconds() as f64,
        _ => 1.0,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="22" font-size="15" font-weight="bold">{}</text>"#,
        escape(title)
    );

    // Legend from the distinct line classes.
    let mut classes: Vec<(&str, &str)> = Vec::new();
    for line in panels.iter().flat_map(|p| &p.lines) {
        if !classes.iter().any(|(c, _)| *c == line.class) {
            classes.push((&line.class, &line.label));
        }
    }
    for (i, (class, label)) in classes.iter().enumerate() {
        let x = 10.0 + i as f64 * 220.0;
        let _ = writeln!(
            svg,
            r#"<line class="legend" x1="{x}" y1="40" x2="{}" y2="40" stroke="{}" stroke-width="2"/><text x="{}" y="44" font-size="11">{}</text>"#,
            x + 18.0,
            colour(class),
            x + 24.0,
            escape(label)
        );
    }

    let plot_w = PANEL_W - PLOT_LEFT - PLOT_RIGHT;
    let plot_h = PANEL_H - PLOT_TOP - PLOT_BOTTOM;
    for (i, panel) in panels.iter().enumerate() {
        let ox = (i % COLUMNS) as f64 * PANEL_W;
        let oy = HEADER_H + (i / COLUMNS) as f64 * PANEL_H;
        let x0 = ox + PLOT_LEFT;
        let y0 = oy + PLOT_TOP;
        let y_of = |v: f64| y0 + (1.0 - v.clamp(0.0, 1.0)) * plot_h;
        let x_of = |t: DateTime<Utc>| match t_min {
            Some(lo) => x0 + (t - lo).num_seconds() as f64 / span * plot_w,
            None => x0,
        };

        let _ = writeln!(
            svg,
            r#"<g class="panel" data-query="{}">"#,
            escape(&panel.title)
        );
        let flag = if panel.flagged { "*" } else { "" };
        let _ = writeln!(
            svg,
            r#"<text class="panel-title" x="{}" y="{}" font-size="12">{}{flag}</text>"#,
            x0,
            oy + 15.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            svg,
            r##"<rect class="frame" x="{x0}" y="{y0}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999999" stroke-width="0.5"/>"##
        );
        for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
            let _ = writeln!(
                svg,
                r#"<text class="tick" x="{}" y="{:.2}" font-size="9" text-anchor="end">{label}</text>"#,
                x0 - 4.0,
                y_of(v) + 3.0
            );
        }
        let ry = y_of(reference);
        let _ = writeln!(
            svg,
            r##"<line class="ref-line" data-value="{reference}" x1="{x0}" y1="{ry:.2}" x2="{:.2}" y2="{ry:.2}" stroke="#aaaaaa" stroke-width="1"/>"##,
            x0 + plot_w
        );
        if let (Some(lo), Some(hi)) = (t_min, t_max) {
            let _ = writeln!(
                svg,
                r#"<text class="tick" x="{x0}" y="{:.2}" font-size="9">{}</text><text class="tick" x="{:.2}" y="{:.2}" font-size="9" text-anchor="end">{}</text>"#,
                y0 + plot_h + 12.0,
                lo.format("%Y-%m-%d"),
                x0 + plot_w,
                y0 + plot_h + 12.0,
                hi.format("%Y-%m-%d")
            );
        }
        for line in &panel.lines {
            if line.points.is_empty() {
                continue;
            }
            let mut d = String::new();
            for (j, (t, v)) in line.points.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2}",
                    if j == 0 { "M" } else { " L" },
                    x_of(*t),
                    y_of(*v)
                );
            }
            let _ = writeln!(
                svg,
                r#"<path class="series {}" d="{d}" fill="none" stroke="{}" stroke-width="1.2"/>"#,
                escape(&line.class),
                colour(&line.class)
            );
        }
        svg.push_str("</g>\n");
    }

    if panels.iter().any(|p| p.flagged) {
        let _ = writeln!(
            svg,
            r#"<text class="footnote" x="10" y="{:.2}" font-size="10">* query missing from at least one source</text>"#,
            height - 10.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
