//! CSV series for the figures: one row per plotted point, ready for any
//! plotting tool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use padbench_core::metrics::{
    error_rate, fit_linear, format_float, learning_curve, mt_points, pooled, stroke_stats,
    throughput, RunLog, TrialRecord, WARMUP_TRIALS,
};

use crate::error::CliError;
use crate::inputs::{emit, load_logs};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Learning curve: normalised movement time per trial ordinal.
    F6,
    /// Movement time against ID with the fitted line and its 95% band.
    F7,
    /// Throughput per ID with 95% CI.
    F8,
    /// Mean strokes per ID.
    F9,
    /// Error rate per ID with Wilson 95% CI.
    F10,
}

#[derive(clap::Args, Debug)]
pub struct PlotdataArgs {
    /// CSV logs, or directories containing them.
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub figure: Figure,
    /// Leading trials dropped per run (ignored by the learning curve).
    #[arg(long, default_value_t = WARMUP_TRIALS)]
    pub exclude_warmup: u32,
}

/// Points evaluated along the fitted line.
const FIT_STEPS: usize = 20;

fn by_id(records: &[TrialRecord]) -> BTreeMap<u64, Vec<TrialRecord>> {
    // Positive finite floats order the same as their bit patterns.
    let mut out: BTreeMap<u64, Vec<TrialRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.id_bits.to_bits()).or_default().push(r.clone());
    }
    out
}

fn f(x: f64) -> String {
    format_float(x)
}

fn render(figure: Figure, raw: &BTreeMap<String, Vec<RunLog>>, k: u32) -> Result<String, CliError> {
    let stats_err =
        |name: &str, e: padbench_core::metrics::StatsError| CliError::Data(format!("{name}: {e}"));
    let mut out = String::new();
    match figure {
        Figure::F6 => {
            out.push_str("condition,trial,normalized_mt,n\n");
            for (name, logs) in raw {
                for p in learning_curve(logs).map_err(|e| stats_err(name, e))? {
                    let _ = writeln!(out, "{name},{},{},{}", p.ordinal, f(p.normalized_mt), p.n);
                }
            }
        }
        Figure::F7 => {
            out.push_str("condition,kind,id_bits,mt_ms,lo_ms,hi_ms\n");
            for (name, logs) in raw {
                let records = pooled(&exclude(logs, k));
                let points = mt_points(&records);
                for &(x, y) in &points {
                    let _ = writeln!(out, "{name},trial,{},{},,", f(x), f(y));
                }
                let fit = fit_linear(&points).map_err(|e| stats_err(name, e))?;
                let (lo, hi) = points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                        (lo.min(p.0), hi.max(p.0))
                    });
                for i in 0..=FIT_STEPS {
                    let x = lo + (hi - lo) * i as f64 / FIT_STEPS as f64;
                    let band = fit.mean_band(x);
                    let _ = writeln!(
                        out,
                        "{name},fit,{},{},{},{}",
                        f(x),
                        f(fit.predict(x)),
                        f(band.lo),
                        f(band.hi)
                    );
                }
            }
        }
        Figure::F8 => {
            out.push_str("condition,id_bits,n,mean_tp_bps,ci_lo,ci_hi\n");
            for (name, logs) in raw {
                for rs in by_id(&pooled(&exclude(logs, k))).values() {
                    let tp = throughput(rs).map_err(|e| stats_err(name, e))?;
                    let _ = writeln!(
                        out,
                        "{name},{},{},{},{},{}",
                        f(rs[0].id_bits),
                        tp.n,
                        f(tp.mean_bps),
                        f(tp.ci95.lo),
                        f(tp.ci95.hi)
                    );
                }
            }
        }
        Figure::F9 => {
            out.push_str("condition,id_bits,n,mean_strokes,min_strokes,max_strokes\n");
            for (name, logs) in raw {
                for rs in by_id(&pooled(&exclude(logs, k))).values() {
                    let s = stroke_stats(rs).map_err(|e| stats_err(name, e))?;
                    let _ = writeln!(
                        out,
                        "{name},{},{},{},{},{}",
                        f(rs[0].id_bits),
                        rs.len(),
                        f(s.mean),
                        s.min,
                        s.max
                    );
                }
            }
        }
        Figure::F10 => {
            out.push_str("condition,id_bits,n,errors,rate,ci_lo,ci_hi\n");
            for (name, logs) in raw {
                for rs in by_id(&pooled(&exclude(logs, k))).values() {
                    let e = error_rate(rs).map_err(|e| stats_err(name, e))?;
                    let _ = writeln!(
                        out,
                        "{name},{},{},{},{},{},{}",
                        f(rs[0].id_bits),
                        e.n,
                        e.errors,
                        f(e.rate),
                        f(e.ci95.lo),
                        f(e.ci95.hi)
                    );
                }
            }
        }
    }
    Ok(out)
}

fn exclude(logs: &[RunLog], k: u32) -> Vec<RunLog> {
    logs.iter().map(|l| l.exclude_warmup(k)).collect()
}

pub fn run(args: &PlotdataArgs) -> Result<(), CliError> {
    let loaded = load_logs(&args.inputs)?;
    emit(&render(args.figure, &loaded.groups, args.exclude_warmup)?)
}
