//! Alignment tables and diagnostic traces as files: comma-separated tables at
//! full precision and a fixed-width text table for reading.

use std::fmt::Write as _;
use std::path::Path;

use crate::diagnostics::{AlignmentReport, RhatTrace};
use crate::sampler::Method;

fn ensure_parent(path: &Path) -> std::io::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p),
        _ => Ok(()),
    }
}

fn methods_in_order(report: &AlignmentReport) -> Vec<Method> {
    let present = report.methods();
    Method::ALL.into_iter().filter(|m| present.contains(m)).collect()
}

/// One row per object and a `<method>_hellinger`, `<method>_mode` column pair
/// per method. Absent cells are empty.
pub fn report_csv(report: &AlignmentReport) -> String {
    let methods = methods_in_order(report);
    let mut out = String::from("object");
    for m in &methods {
        let _ = write!(out, ",{m}_hellinger,{m}_mode");
    }
    out.push('\n');
    for object in report.objects() {
        out.push_str(&csv_field(&object));
        for m in &methods {
            match report.row(&object, *m) {
                Some(r) => {
                    let _ = write!(out, ",{},{}", r.hellinger, r.mode_distance);
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Hellinger distance to two decimals without the leading zero, as in ".85".
pub fn format_hellinger(v: f64) -> String {
    let s = format!("{v:.2}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

/// A "distance (mode)" cell such as ".85 (4.0)".
pub fn format_cell(hellinger: f64, mode: f64) -> String {
    format!("{} ({mode:.1})", format_hellinger(hellinger))
}

/// Text table with the smallest value of each row marked with `*`, separately
/// for the distributional and mode columns. Nothing is marked when a row has a
/// single method.
pub fn report_text(report: &AlignmentReport) -> String {
    let methods = methods_in_order(report);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["object".to_string()];
    header.extend(methods.iter().map(|m| m.to_string()));
    rows.push(header);
    for object in report.objects() {
        let cells: Vec<Option<(f64, f64)>> =
            methods.iter().map(|m| report.row(&object, *m).map(|r| (r.hellinger, r.mode_distance))).collect();
        let present: Vec<(f64, f64)> = cells.iter().flatten().copied().collect();
        let mark = present.len() > 1;
        let min_h = present.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let min_m = present.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let mut row = vec![object.clone()];
        for cell in cells {
            row.push(match cell {
                None => "-".into(),
                Some((h, m)) => {
                    let hs = format_hellinger(h) + if mark && h == min_h { "*" } else { "" };
                    let ms = format!("{m:.1}") + if mark && m == min_m { "*" } else { "" };
                    format!("{hs} ({ms})")
                }
            });
        }
        rows.push(row);
    }
    let widths: Vec<usize> =
        (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    let _ = writeln!(out, "\n* smallest value in the row; cells are hellinger (mode distance, {} hue)", report.hue_metric);
    out
}

pub fn progression_csv(report: &AlignmentReport) -> String {
    let mut out = String::from("object,method,iteration,hellinger_mean,hellinger_sem,mode_mean,mode_sem,chains\n");
    for p in &report.progressions {
        for pt in &p.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&p.object),
                p.method,
                pt.iteration,
                pt.hellinger_mean,
                pt.hellinger_sem,
                pt.mode_mean,
                pt.mode_sem,
                pt.chains
            );
        }
    }
    out
}

pub fn rhat_csv(trace: &RhatTrace) -> String {
    let mut out = String::from("iteration,rhat,rhat_h,rhat_s,rhat_l,degenerate\n");
    for (i, v) in trace.values.iter().enumerate() {
        let [h, s, l] = trace.components[i];
        let _ = writeln!(out, "{},{v},{h},{s},{l},{}", RhatTrace::iteration_at(i), trace.degenerate[i]);
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.txt` next to each other.
pub fn export_report(report: &AlignmentReport, csv_path: &Path) -> std::io::Result<()> {
    ensure_parent(csv_path)?;
    std::fs::write(csv_path, report_csv(report))?;
    std::fs::write(csv_path.with_extension("txt"), report_text(report))
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{AlignmentRow, HueMetric};

    fn report(methods: &[Method]) -> AlignmentReport {
        let mut rows = Vec::new();
        for (oi, object) in ["Chocolate", "Lemon"].iter().enumerate() {
            for (mi, m) in methods.iter().enumerate() {
                rows.push(AlignmentRow {
                    object: object.to_string(),
                    method: *m,
                    hellinger: 0.5 + 0.1 * mi as f64 + 0.01 * oi as f64 + 1e-9,
                    mode_distance: 40.0 - 10.0 * mi as f64,
                    repetitions: 4,
                });
            }
        }
        AlignmentReport { hue_metric: HueMetric::Linear, rows, progressions: Vec::new() }
    }

    #[test]
    fn cell_format() {
        assert_eq!(format_cell(0.85, 4.0), ".85 (4.0)");
        assert_eq!(format_cell(1.0, 13.52), "1.00 (13.5)");
    }

    #[test]
    fn csv_shape_and_precision() {
        let csv = report_csv(&report(&Method::ALL));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 9);
        assert!(lines[0].starts_with("object,direct_prompting_hellinger,direct_prompting_mode,"));
        assert!(lines[1].contains("0.500000001"));
    }

    #[test]
    fn text_marks_row_minimums() {
        let text = report_text(&report(&Method::ALL));
        let choc = text.lines().find(|l| l.starts_with("Chocolate")).unwrap();
        assert!(choc.contains(".50* (40.0)"), "{choc}");
        assert!(choc.contains(".80 (10.0*)"), "{choc}");
        let single = report_text(&report(&[Method::Mcmc]));
        assert!(!single.lines().any(|l| l.starts_with("Lemon") && l.contains('*')));
    }

    #[test]
    fn rhat_csv_writes_inf() {
        let trace = RhatTrace {
            values: vec![f64::INFINITY, 1.05],
            components: vec![[f64::INFINITY, 1.0, 1.0], [1.05, 1.0, 1.01]],
            degenerate: vec![true, false],
        };
        let csv = rhat_csv(&trace);
        assert!(csv.contains("\n2,inf,inf,1,1,true\n"));
        assert!(csv.contains("\n3,1.05,"));
    }
}
