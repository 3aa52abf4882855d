//! Report rendering: one section per metric, Max/Min/Mean/Std rows, one
//! column per model. Percent metrics print as percentages with their spread
//! in percentage points; the squared error prints raw.

use std::fmt::Write;

use crate::harness::runner::{MetricSummary, ReportBundle};

const METRICS: [(&str, fn(&ReportBundle) -> &MetricSummary, bool); 5] = [
    ("Accuracy", |b| &b.accuracy, true),
    ("Precision", |b| &b.precision, true),
    ("Recall", |b| &b.recall, true),
    ("F1", |b| &b.f1, true),
    ("MSE", |b| &b.mse, false),
];

const STATS: [(&str, fn(&MetricSummary) -> f64); 4] = [
    ("Max", |s| s.max),
    ("Min", |s| s.min),
    ("Mean", |s| s.mean),
    ("Std", |s| s.std),
];

fn cell(value: f64, percent: bool, stat: &str) -> String {
    if percent {
        if stat == "Std" {
            // Spread in percentage points.
            format!("{:.4}", value * 100.0)
        } else {
            format!("{:.2}%", value * 100.0)
        }
    } else if stat == "Std" {
        format!("{:.4}", value)
    } else {
        format!("{:.5}", value)
    }
}

/// Fixed-width text table.
pub fn render_text(bundles: &[ReportBundle]) -> String {
    let mut widths: Vec<usize> = bundles.iter().map(|b| b.model.len().max(8)).collect();
    for (i, b) in bundles.iter().enumerate() {
        for (_, get, percent) in METRICS {
            for (stat, pick) in STATS {
                widths[i] = widths[i].max(cell(pick(get(b)), percent, stat).len());
            }
        }
    }
    let mut out = String::new();
    write!(out, "{:<6}", "No.").unwrap();
    for (b, w) in bundles.iter().zip(&widths) {
        write!(out, "  {:>w$}", b.model, w = w).unwrap();
    }
    out.push('\n');
    for (name, get, percent) in METRICS {
        writeln!(out, "-- {name} --").unwrap();
        for (stat, pick) in STATS {
            write!(out, "{stat:<6}").unwrap();
            for (b, w) in bundles.iter().zip(&widths) {
                write!(out, "  {:>w$}", cell(pick(get(b)), percent, stat), w = w).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Machine-readable table: `metric,stat,<model...>` header, raw fractions.
pub fn render_csv(bundles: &[ReportBundle]) -> String {
    let mut out = String::from("metric,stat");
    for b in bundles {
        write!(out, ",{}", b.model).unwrap();
    }
    out.push('\n');
    for (name, get, _) in METRICS {
        for (stat, pick) in STATS {
            write!(out, "{},{}", name.to_lowercase(), stat.to_lowercase()).unwrap();
            for b in bundles {
                write!(out, ",{}", pick(get(b))).unwrap();
            }
            out.push('\n');
        }
    }
    out
}
