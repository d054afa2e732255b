//! Markdown tables and standalone SVG bar charts.

use std::fmt::Write as _;

use crate::analytics::{dominant_failure, BreakdownSet, IndustryBreakdown};
use crate::evaluation::{format_fraction, permille_half_up, ConfusionMatrix, MetricsReport};
use crate::taxonomy::{canonical_order, FailureType};

pub const Y_LABEL: &str = "Number of failures";
pub const X_LABEL: &str = "Failure Type";

/// Chart geometry, in SVG user units.
mod geometry {
    pub const WIDTH: f64 = 640.0;
    pub const HEIGHT: f64 = 440.0;
    pub const MARGIN_LEFT: f64 = 72.0;
    pub const MARGIN_RIGHT: f64 = 24.0;
    pub const MARGIN_TOP: f64 = 56.0;
    pub const MARGIN_BOTTOM: f64 = 170.0;
    pub const BAR_WIDTH: f64 = 28.0;
    pub const TICK_LABEL_ROTATION: f64 = -45.0;
    pub const Y_TICKS: u64 = 5;
    pub const FONT: &str = "sans-serif";
    pub const BAR_FILL: &str = "#6666ff";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartSpec {
    pub title: String,
    pub x_labels: Vec<String>,
    pub values: Vec<u64>,
    pub y_label: String,
    pub x_label: String,
}

/// "In Finance Industry"; names already ending in Industry or Sector are
/// used as they are.
pub fn chart_title(industry: &str) -> String {
    let lower = industry.to_lowercase();
    if lower.ends_with(" industry") || lower.ends_with(" sector") {
        format!("In {industry}")
    } else {
        format!("In {industry} Industry")
    }
}

impl ChartSpec {
    pub fn new(title: impl Into<String>, counts: [u64; FailureType::COUNT]) -> Self {
        ChartSpec {
            title: title.into(),
            x_labels: canonical_order()
                .iter()
                .map(|f| f.display_text().to_string())
                .collect(),
            values: counts.to_vec(),
            y_label: Y_LABEL.to_string(),
            x_label: X_LABEL.to_string(),
        }
    }

    pub fn for_breakdown(b: &IndustryBreakdown) -> Self {
        ChartSpec::new(chart_title(b.industry.name()), b.counts())
    }
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
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

/// Smallest 1/2/5 x 10^k step that covers `max` in `ticks` steps.
fn tick_step(max: u64, ticks: u64) -> u64 {
    let mut magnitude = 1u64;
    loop {
        for m in [1, 2, 5] {
            let step = m * magnitude;
            if step * ticks >= max {
                return step;
            }
        }
        magnitude *= 10;
    }
}

/// Renders a bar chart with one bar per label, value labels above the bars
/// and rotated x tick labels. Identical specs give identical bytes.
pub fn render_chart(spec: &ChartSpec) -> String {
    use geometry::*;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let base_y = MARGIN_TOP + plot_h;
    let max = spec.values.iter().copied().max().unwrap_or(0).max(1);
    let step = tick_step(max, Y_TICKS);
    let y_max = step * max.div_ceil(step);
    let slot = plot_w / spec.values.len().max(1) as f64;
    let scale = |v: u64| v as f64 / y_max as f64 * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="{FONT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text class="title" x="{:.2}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape_xml(&spec.title)
    );

    // Y axis with gridlines.
    let mut tick = 0;
    while tick <= y_max {
        let y = base_y - scale(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text class="ytick" x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{tick}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 3.5
        );
        tick += step;
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{MARGIN_TOP:.2}\" x2=\"{MARGIN_LEFT:.2}\" y2=\"{base_y:.2}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{base_y:.2}\" x2=\"{:.2}\" y2=\"{base_y:.2}\" stroke=\"black\"/>",
        MARGIN_LEFT + plot_w
    );

    for (i, (label, &value)) in spec.x_labels.iter().zip(&spec.values).enumerate() {
        let cx = MARGIN_LEFT + slot * (i as f64 + 0.5);
        let h = scale(value);
        let _ = writeln!(
            svg,
            r#"<rect class="bar" x="{:.2}" y="{:.2}" width="{BAR_WIDTH:.2}" height="{h:.2}" fill="{BAR_FILL}"/>"#,
            cx - BAR_WIDTH / 2.0,
            base_y - h
        );
        let _ = writeln!(
            svg,
            r#"<text class="value" x="{cx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{value}</text>"#,
            base_y - h - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text class="xtick" x="{cx:.2}" y="{:.2}" text-anchor="end" font-size="10" transform="rotate({TICK_LABEL_ROTATION} {cx:.2} {:.2})">{}</text>"#,
            base_y + 14.0,
            base_y + 14.0,
            escape_xml(label)
        );
    }

    let _ = writeln!(
        svg,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape_xml(&spec.x_label)
    );
    let ylabel_y = MARGIN_TOP + plot_h / 2.0;
    let _ = writeln!(
        svg,
        r#"<text class="ylabel" x="18" y="{ylabel_y:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {ylabel_y:.2})">{}</text>"#,
        escape_xml(&spec.y_label)
    );
    svg.push_str("</svg>\n");
    svg
}

fn percent_tenths(count: u64, total: u64) -> String {
    let tenths = permille_half_up(count, total);
    format!("{}.{}%", tenths / 10, tenths % 10)
}

fn write_matrix_table(out: &mut String, cm: &ConfusionMatrix) {
    out.push_str("| Gold \\ Predicted |");
    for ft in canonical_order() {
        let _ = write!(out, " {ft} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(FailureType::COUNT));
    out.push('\n');
    for gold in canonical_order() {
        let _ = write!(out, "| {gold} |");
        for predicted in canonical_order() {
            let _ = write!(out, " {} |", cm.get(gold, predicted));
        }
        out.push('\n');
    }
}

/// Per-industry tables, dominant-failure lines and an optional metrics
/// section.
pub fn render_markdown_report(
    breakdowns: &BreakdownSet,
    metrics: Option<(&MetricsReport, Option<&ConfusionMatrix>)>,
) -> String {
    let mut out = String::from("# Software failure types by industry\n\n");
    if breakdowns.is_empty() {
        out.push_str("No data.\n");
    }
    for b in breakdowns.breakdowns() {
        let _ = writeln!(out, "## {} ({} failures)\n", b.industry.name(), b.total());
        out.push_str("| Failure Type | Count | Percent |\n|---|---:|---:|\n");
        for (ft, n) in b.iter() {
            let _ = writeln!(out, "| {ft} | {n} | {} |", percent_tenths(n, b.total()));
        }
        if let Ok(dominant) = dominant_failure(b) {
            let _ = writeln!(out, "\nDominant failure: {dominant}");
        }
        out.push('\n');
    }
    if let Some((m, cm)) = metrics {
        out.push_str("## Evaluation\n\n");
        let _ = writeln!(out, "Overall accuracy: {}", m.accuracy_display());
        let _ = writeln!(out, "Correct: {} of {}", m.correct, m.total);
        let _ = writeln!(out, "Macro accuracy: {:.4}\n", m.macro_accuracy);
        out.push_str("| Failure Type | Precision | Recall | Support |\n|---|---:|---:|---:|\n");
        for c in &m.per_class {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                c.label,
                format_fraction(c.precision),
                format_fraction(c.recall),
                c.support
            );
        }
        if let Some(cm) = cm {
            out.push_str("\n### Confusion matrix\n\n");
            write_matrix_table(&mut out, cm);
        }
        out.push('\n');
    }
    while out.ends_with("\n\n") {
        out.pop();
    }
    out
}
