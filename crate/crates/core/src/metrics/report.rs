use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::log::{RunLog, TrialRecord};
use super::stats::{
    error_rate, stroke_stats, throughput, ErrorRate, StatsError, StrokeStats, ThroughputSummary,
};

/// Trials up to this ordinal are treated as warm-up.
pub const WARMUP_TRIALS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ordinal: u32,
    pub normalized_mt: f64,
    pub n: usize,
}

/// Mean movement time at each trial ordinal, divided by the mean over all
/// post-warm-up ordinals.
pub fn learning_curve(logs: &[RunLog]) -> Result<Vec<CurvePoint>, StatsError> {
    let mut by_ordinal: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in logs.iter().flat_map(|l| &l.records) {
        by_ordinal.entry(r.trial_idx).or_default().push(r.mt_ms);
    }
    let stable: Vec<f64> = by_ordinal
        .range(WARMUP_TRIALS + 1..)
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    if stable.is_empty() {
        return Err(StatsError::Empty);
    }
    let baseline = stable.iter().sum::<f64>() / stable.len() as f64;
    Ok(by_ordinal
        .into_iter()
        .map(|(ordinal, v)| CurvePoint {
            ordinal,
            normalized_mt: v.iter().sum::<f64>() / v.len() as f64 / baseline,
            n: v.len(),
        })
        .collect())
}

pub fn pooled(logs: &[RunLog]) -> Vec<TrialRecord> {
    logs.iter()
        .flat_map(|l| l.records.iter().cloned())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub n_trials: usize,
    pub strokes: StrokeStats,
    pub throughput: ThroughputSummary,
    pub errors: ErrorRate,
}

impl ConditionSummary {
    pub fn from_records(condition: &str, records: &[TrialRecord]) -> Result<Self, StatsError> {
        Ok(ConditionSummary {
            condition: condition.to_string(),
            n_trials: records.len(),
            strokes: stroke_stats(records)?,
            throughput: throughput(records)?,
            errors: error_rate(records)?,
        })
    }
}

pub const ROW_LABELS: [&str; 7] = [
    "N trials",
    "Mean stroke",
    "Min stroke count",
    "Max stroke count",
    "mean TP 95% CI (bps)",
    "Median TP (bps)",
    "SD TP (bps)",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub columns: Vec<ConditionSummary>,
    /// Set when at least one input log still contains its warm-up trials.
    pub includes_warmup: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub values: Vec<String>,
}

/// One column per condition, in the order given.
pub fn summary_table(groups: &[(String, Vec<RunLog>)]) -> Result<SummaryTable, StatsError> {
    if groups.is_empty() {
        return Err(StatsError::Empty);
    }
    let columns = groups
        .iter()
        .map(|(name, logs)| ConditionSummary::from_records(name, &pooled(logs)))
        .collect::<Result<Vec<_>, _>>()?;
    let includes_warmup = groups
        .iter()
        .flat_map(|(_, logs)| logs)
        .any(|l| l.warmup_excluded.unwrap_or(0) == 0);
    Ok(SummaryTable {
        columns,
        includes_warmup,
    })
}

impl SummaryTable {
    pub fn rows(&self) -> Vec<SummaryRow> {
        let cells: [fn(&ConditionSummary) -> String; 7] = [
            |c| c.n_trials.to_string(),
            |c| format!("{:.2}", c.strokes.mean),
            |c| c.strokes.min.to_string(),
            |c| c.strokes.max.to_string(),
            |c| {
                format!(
                    "{:.1} [{:.1},{:.1}]",
                    c.throughput.mean_bps, c.throughput.ci95.lo, c.throughput.ci95.hi
                )
            },
            |c| format!("{:.1}", c.throughput.median_bps),
            |c| format!("{:.1}", c.throughput.sd_bps),
        ];
        ROW_LABELS
            .iter()
            .zip(cells.iter())
            .map(|(label, cell)| SummaryRow {
                label: label.to_string(),
                values: self.columns.iter().map(cell).collect(),
            })
            .collect()
    }

    pub fn render_text(&self) -> String {
        let rows = self.rows();
        let label_w = ROW_LABELS.iter().map(|l| l.len()).max().unwrap_or(0);
        let col_w: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                rows.iter()
                    .map(|r| r.values[i].len())
                    .chain([c.condition.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();

        let mut out = String::new();
        if self.includes_warmup {
            out.push_str("note: includes warm-up trials\n");
        }
        let _ = write!(out, "{:label_w$}", "");
        for (c, w) in self.columns.iter().zip(&col_w) {
            let _ = write!(out, "  {:>w$}", c.condition);
        }
        out.push('\n');
        for row in rows {
            let _ = write!(out, "{:label_w$}", row.label);
            for (v, w) in row.values.iter().zip(&col_w) {
                let _ = write!(out, "  {v:>w$}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::log::{Device, RunHeader};

    fn log(condition: &str, mts: &[f64]) -> RunLog {
        RunLog::new(
            RunHeader {
                run_id: "r".into(),
                condition: condition.into(),
                device: Device::Trackpad,
                profile: None,
                seed: 0,
            },
            mts.iter()
                .enumerate()
                .map(|(i, &mt)| TrialRecord {
                    trial_idx: i as u32 + 1,
                    id_bits: 5.0,
                    mt_ms: mt,
                    strokes: 1,
                    clicks: 1,
                    ..Default::default()
                })
                .collect(),
        )
    }

    #[test]
    fn flat_curve() {
        let curve = learning_curve(&[log("a", &[800.0; 22])]).unwrap();
        assert_eq!(curve.len(), 22);
        assert!(curve.iter().all(|p| (p.normalized_mt - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_log_curve_is_its_normalized_series() {
        let mts: Vec<f64> = (1..=10).map(|j| 1000.0 + 10.0 * j as f64).collect();
        let curve = learning_curve(&[log("a", &mts)]).unwrap();
        let base = mts[5..].iter().sum::<f64>() / 5.0;
        for (p, mt) in curve.iter().zip(&mts) {
            assert!((p.normalized_mt - mt / base).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_needs_post_warmup_trials() {
        assert!(learning_curve(&[log("a", &[1.0; 5])]).is_err());
    }

    #[test]
    fn table_shape_and_warmup_flag() {
        let groups = vec![
            ("x".to_string(), vec![log("x", &[1000.0; 22])]),
            ("y".to_string(), vec![log("y", &[500.0; 22])]),
        ];
        let t = summary_table(&groups).unwrap();
        assert!(t.includes_warmup);
        let rows = t.rows();
        assert_eq!(rows.len(), ROW_LABELS.len());
        assert!(rows.iter().all(|r| r.values.len() == 2));
        assert_eq!(rows[4].values[0], "5.0 [5.0,5.0]");
        assert!(t.render_text().starts_with("note: includes warm-up"));

        let trimmed = vec![(
            "x".to_string(),
            vec![log("x", &[1000.0; 22]).exclude_warmup(5)],
        )];
        let t = summary_table(&trimmed).unwrap();
        assert!(!t.includes_warmup);
        assert_eq!(t.columns[0].n_trials, 17);
        assert!(summary_table(&[]).is_err());
    }
}
