//! Sweep artifacts: `sweep.csv`, `chain.txt`, `sweep.svg` and `meta.txt`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sweep::{SweepResult, SweepRow};

pub const CSV_COLUMNS: [&str; 12] = [
    "word",
    "complexity",
    "removed_edge",
    "p_value",
    "overall",
    "lower_bound",
    "recall",
    "precision_paper",
    "precision_ratio",
    "misclassification",
    "form_measure",
    "featureset_measure",
];

pub fn sweep_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for row in &result.rows {
        row.measures.validate()?;
        let m = &row.measures;
        w.write_record([
            result.word.clone(),
            row.complexity.to_string(),
            row.removed_edge.clone().unwrap_or_default(),
            row.p_value.map(|p| format!("{p:e}")).unwrap_or_default(),
            m.overall.to_string(),
            m.lower_bound.to_string(),
            m.recall.to_string(),
            m.precision_paper.to_string(),
            m.precision_ratio.map(|p| p.to_string()).unwrap_or_default(),
            m.misclassification.to_string(),
            m.form_measure.to_string(),
            m.featureset_measure.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

pub fn chain_text(result: &SweepResult) -> String {
    let mut s = String::new();
    for link in &result.chain {
        let form = link.form();
        let _ = writeln!(s, "# complexity {}", form.complexity());
        if let Some(step) = &link.step {
            let _ = writeln!(
                s,
                "# removed {} statistic={} df={} p={:e} blocked={}",
                step.edge_name,
                step.test.statistic,
                step.test.df,
                step.p_value(),
                step.blocked
            );
        }
        s.push_str(&form.edge_list());
        s.push('\n');
    }
    s
}

pub fn meta_text(result: &SweepResult, lines: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in lines {
        let _ = writeln!(s, "{k}: {v}");
    }
    let _ = writeln!(s, "train_size: {}", result.train_size);
    let _ = writeln!(s, "test_size: {}", result.test_size);
    let _ = writeln!(s, "variables: {}", result.domain.names().join(" "));
    if let Some(schema) = &result.schema {
        let _ = writeln!(s, "collocations: {}", schema.collocations.join(" "));
    }
    let binding = result
        .chain
        .iter()
        .filter(|l| l.step.as_ref().is_some_and(|s| s.blocked > 0))
        .count();
    let _ = writeln!(
        s,
        "steps_with_chordality_blocked_edges: {binding} of {}",
        result.chain.len().saturating_sub(1)
    );
    for w in &result.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub mod svg {
    //! Line chart of the measures against complexity. Complexity decreases
    //! from left to right; y is percent correct.

    use super::*;

    pub const WIDTH: f64 = 800.0;
    pub const HEIGHT: f64 = 500.0;
    pub const LEFT: f64 = 70.0;
    pub const RIGHT: f64 = 180.0;
    pub const TOP: f64 = 40.0;
    pub const BOTTOM: f64 = 60.0;

    pub const SERIES: [(&str, &str); 3] = [
        ("overall", "#1f77b4"),
        ("recall", "#2ca02c"),
        ("form_measure", "#d62728"),
    ];
    pub const RULES: [(&str, &str); 2] = [
        ("lower_bound", "#7f7f7f"),
        ("featureset_measure", "#9467bd"),
    ];

    pub fn x_of(complexity: usize, max: usize, min: usize) -> f64 {
        let span = WIDTH - LEFT - RIGHT;
        if max == min {
            LEFT + span / 2.0
        } else {
            LEFT + span * (max - complexity) as f64 / (max - min) as f64
        }
    }

    /// `fraction` in `[0, 1]` to a y coordinate.
    pub fn y_of(fraction: f64) -> f64 {
        TOP + (HEIGHT - TOP - BOTTOM) * (1.0 - fraction)
    }

    pub fn value(row: &SweepRow, name: &str) -> f64 {
        let m = &row.measures;
        match name {
            "overall" => m.overall,
            "recall" => m.recall,
            "form_measure" => m.form_measure,
            "lower_bound" => m.lower_bound,
            "featureset_measure" => m.featureset_measure,
            _ => unreachable!("unknown series {name}"),
        }
    }

    fn escape(s: &str) -> String {
        s.replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;")
            .replace('"', "&quot;")
    }

    pub fn render(result: &SweepResult) -> String {
        let rows = &result.rows;
        let max = rows.iter().map(|r| r.complexity).max().unwrap_or(0);
        let min = rows.iter().map(|r| r.complexity).min().unwrap_or(0);
        let x0 = LEFT;
        let x1 = WIDTH - RIGHT;
        let y0 = y_of(0.0);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(&result.word)
        );
        // axes
        let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
        let _ = writeln!(
            s,
            r#"<line x1="{x0}" y1="{}" x2="{x0}" y2="{y0}"/>"#,
            y_of(1.0)
        );
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g class="ticks" fill="black">"#);
        for pct in (0..=100).step_by(20) {
            let y = y_of(pct as f64 / 100.0);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{pct}</text>"#,
                x0 - 6.0,
                y + 4.0
            );
        }
        let step = ((max - min) / 10).max(1);
        for r in rows.iter().filter(|r| (max - r.complexity) % step == 0) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                x_of(r.complexity, max, min),
                y0 + 18.0,
                r.complexity
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">model complexity (pairwise interdependencies)</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">percent correct</text>"#,
            (TOP + y0) / 2.0,
            (TOP + y0) / 2.0
        );

        for (name, color) in RULES {
            let v = rows.first().map(|r| value(r, name)).unwrap_or(0.0);
            let y = y_of(v);
            let _ = writeln!(
                s,
                r#"<line class="{name}" x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#
            );
        }
        for (name, color) in SERIES {
            let points: Vec<String> = rows
                .iter()
                .map(|r| {
                    format!(
                        "{:.2},{:.2}",
                        x_of(r.complexity, max, min),
                        y_of(value(r, name))
                    )
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline class="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                points.join(" ")
            );
        }
        let _ = writeln!(s, r#"<g class="legend">"#);
        let legend = SERIES
            .iter()
            .map(|&(n, c)| (n, c, false))
            .chain(RULES.iter().map(|&(n, c)| (n, c, true)));
        for (i, (name, color, dashed)) in legend.enumerate() {
            let y = TOP + 10.0 + 20.0 * i as f64;
            let lx = x1 + 15.0;
            let dash = if dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                s,
                r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#,
                lx + 24.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{name}</text>"#,
                lx + 30.0,
                y + 4.0
            );
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        s
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Writes all four artifacts into `dir`, creating it if needed.
pub fn write_sweep(dir: &Path, result: &SweepResult, meta: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join("sweep.csv"), &sweep_csv(result)?)?;
    write_atomic(&dir.join("chain.txt"), &chain_text(result))?;
    write_atomic(&dir.join("sweep.svg"), &svg::render(result))?;
    write_atomic(&dir.join("meta.txt"), &meta_text(result, meta))?;
    Ok(())
}
