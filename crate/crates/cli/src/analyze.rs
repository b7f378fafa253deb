use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use padbench_core::metrics::{
    fit_linear, learning_curve, mean, motion_accounting, mt_points, pooled, summary_table,
    CurvePoint, MotionSummary, RegressionFit, RunLog, SummaryTable, WARMUP_TRIALS,
};
use serde::Serialize;

use crate::error::CliError;
use crate::inputs::{emit, load_logs};
use crate::Format;

#[derive(clap::Args, Debug)]
pub struct AnalyzeArgs {
    /// CSV logs, or directories containing them.
    pub inputs: Vec<PathBuf>,
    /// Drop this many leading trials of every run before summarising.
    #[arg(long, default_value_t = WARMUP_TRIALS)]
    pub exclude_warmup: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Serialize)]
struct ConditionReport {
    condition: String,
    runs: usize,
    mean_mt_ms: f64,
    /// Movement time against ID; absent when the data cannot support a fit.
    regression: Option<RegressionFit>,
    regression_note: Option<String>,
    motion: MotionSummary,
    /// Normalised movement time per trial ordinal, computed before warm-up
    /// exclusion.
    learning_curve: Option<Vec<CurvePoint>>,
}

#[derive(Serialize)]
struct Report {
    exclude_warmup: u32,
    skipped_files: usize,
    table: SummaryTable,
    conditions: Vec<ConditionReport>,
    warnings: Vec<String>,
}

fn build(args: &AnalyzeArgs) -> Result<Report, CliError> {
    let loaded = load_logs(&args.inputs)?;
    let groups = loaded.without_warmup(args.exclude_warmup);
    let table = summary_table(&groups).map_err(|e| CliError::Data(format!("summary: {e}")))?;
    let warnings = groups
        .iter()
        .flat_map(|(_, logs)| logs.iter().filter_map(|l| l.warning.clone()))
        .collect();

    let conditions = groups
        .iter()
        .map(|(name, logs)| {
            let records = pooled(logs);
            let (regression, regression_note) = match fit_linear(&mt_points(&records)) {
                Ok(fit) => (Some(fit), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let raw: &[RunLog] = &loaded.groups[name];
            ConditionReport {
                condition: name.clone(),
                runs: logs.len(),
                mean_mt_ms: mean(&records.iter().map(|r| r.mt_ms).collect::<Vec<_>>()),
                regression,
                regression_note,
                motion: motion_accounting(&records),
                learning_curve: learning_curve(raw).ok(),
            }
        })
        .collect();

    Ok(Report {
        exclude_warmup: args.exclude_warmup,
        skipped_files: loaded.skipped,
        table,
        conditions,
        warnings,
    })
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "== Summary (first {} trials of each run excluded) ==",
        report.exclude_warmup
    );
    out.push_str(&report.table.render_text());

    out.push_str("\n== Mean movement time ==\n");
    for c in &report.conditions {
        let _ = writeln!(
            out,
            "{}: {:.1} ms over {} runs",
            c.condition, c.mean_mt_ms, c.runs
        );
    }

    out.push_str("\n== Movement time vs ID (ms = a + b * ID) ==\n");
    for c in &report.conditions {
        match &c.regression {
            Some(f) => {
                let _ = writeln!(
                    out,
                    "{}: b = {:.1} [{:.1},{:.1}] ms/bit, a = {:.1} [{:.1},{:.1}] ms, R2 = {:.3}, n = {}",
                    c.condition,
                    f.slope,
                    f.slope_ci95.lo,
                    f.slope_ci95.hi,
                    f.intercept,
                    f.intercept_ci95.lo,
                    f.intercept_ci95.hi,
                    f.r2,
                    f.n
                );
            }
            None => {
                let note = c.regression_note.as_deref().unwrap_or("");
                let _ = writeln!(out, "{}: no fit ({note})", c.condition);
            }
        }
    }

    out.push_str("\n== Errors, strokes and motion ==\n");
    for (c, col) in report.conditions.iter().zip(&report.table.columns) {
        let e = &col.errors;
        let saved = c
            .motion
            .saved_per_accept_px
            .map_or("n/a".to_string(), |v| format!("{v:.1} px/accept"));
        let _ = writeln!(
            out,
            "{}: errors {}/{} = {:.1}% [{:.1},{:.1}], strokes {:.2} ({}..{}), travel {:.0} px, saved {:.0} px over {} accepts ({saved})",
            c.condition,
            e.errors,
            e.n,
            100.0 * e.rate,
            100.0 * e.ci95.lo,
            100.0 * e.ci95.hi,
            col.strokes.mean,
            col.strokes.min,
            col.strokes.max,
            c.motion.total_travel_px,
            c.motion.total_saved_px,
            c.motion.accepts
        );
    }

    out.push_str("\n== Learning curve (all trials, MT / mean MT after warm-up) ==\n");
    let curves: BTreeMap<&str, &Vec<CurvePoint>> = report
        .conditions
        .iter()
        .filter_map(|c| c.learning_curve.as_ref().map(|v| (c.condition.as_str(), v)))
        .collect();
    if curves.is_empty() {
        out.push_str("(runs too short for a curve)\n");
    } else {
        let max_ordinal = curves
            .values()
            .flat_map(|v| v.iter().map(|p| p.ordinal))
            .max()
            .unwrap_or(0);
        let _ = write!(out, "trial");
        for name in curves.keys() {
            let _ = write!(out, "  {name:>12}");
        }
        out.push('\n');
        for ordinal in 1..=max_ordinal {
            let _ = write!(out, "{ordinal:>5}");
            for curve in curves.values() {
                match curve.iter().find(|p| p.ordinal == ordinal) {
                    Some(p) => {
                        let _ = write!(out, "  {:>12.3}", p.normalized_mt);
                    }
                    None => {
                        let _ = write!(out, "  {:>12}", "-");
                    }
                }
            }
            out.push('\n');
        }
    }

    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    if report.skipped_files > 0 {
        let _ = writeln!(out, "warning: {} input files skipped", report.skipped_files);
    }
    out
}

pub fn run(args: &AnalyzeArgs) -> Result<(), CliError> {
    let report = build(args)?;
    let text = match args.format {
        Format::Text => render_text(&report),
        Format::Json => serde_json::to_string_pretty(&report).expect("plain data") + "\n",
    };
    emit(&text)
}
