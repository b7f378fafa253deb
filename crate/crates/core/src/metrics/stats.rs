use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::log::TrialRecord;

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("no trials to summarise")]
    Empty,
    #[error("trial {trial_idx} has non-positive id_bits or mt_ms")]
    NonPositive { trial_idx: u32 },
    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("regression needs at least two distinct x values")]
    DegenerateX,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSummary {
    pub n: usize,
    pub mean_bps: f64,
    pub median_bps: f64,
    pub sd_bps: f64,
    pub ci95: Interval,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample standard deviation (n − 1); zero for a single value.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Per-trial throughput ID/MT averaged over trials, with a normal-approximation
/// interval on the mean.
pub fn throughput(records: &[TrialRecord]) -> Result<ThroughputSummary, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let tps = records
        .iter()
        .map(|r| {
            if r.id_bits > 0.0 && r.mt_ms > 0.0 {
                Ok(r.throughput())
            } else {
                Err(StatsError::NonPositive {
                    trial_idx: r.trial_idx,
                })
            }
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let n = tps.len();
    let mean_bps = mean(&tps);
    let sd_bps = sample_sd(&tps);
    let half = Z95 * sd_bps / (n as f64).sqrt();
    Ok(ThroughputSummary {
        n,
        mean_bps,
        median_bps: median(&tps),
        sd_bps,
        ci95: Interval {
            lo: mean_bps - half,
            hi: mean_bps + half,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    /// ms per bit
    pub slope: f64,
    /// ms
    pub intercept: f64,
    pub r2: f64,
    pub slope_ci95: Interval,
    pub intercept_ci95: Interval,
    pub n: usize,
    pub residual_se: f64,
    pub mean_x: f64,
    pub sxx: f64,
    pub t_crit: f64,
}

impl RegressionFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// 95% confidence band for the mean response at `x`.
    pub fn mean_band(&self, x: f64) -> Interval {
        let y = self.predict(x);
        let dx = x - self.mean_x;
        let half =
            self.t_crit * self.residual_se * (1.0 / self.n as f64 + dx * dx / self.sxx).sqrt();
        Interval {
            lo: y - half,
            hi: y + half,
        }
    }
}

/// Ordinary least squares of y on x with t-based 95% intervals (n − 2 dof).
pub fn fit_linear(points: &[(f64, f64)]) -> Result<RegressionFit, StatsError> {
    let n = points.len();
    if n < 3 {
        return Err(StatsError::TooFewPoints(n));
    }
    let nf = n as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= f64::EPSILON * mean_x.abs().max(1.0) * nf {
        return Err(StatsError::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let dof = nf - 2.0;
    let residual_se = (sse / dof).sqrt();
    let t_crit = StudentsT::new(0.0, 1.0, dof)
        .expect("dof >= 1")
        .inverse_cdf(0.975);
    let slope_se = residual_se / sxx.sqrt();
    let intercept_se = residual_se * (1.0 / nf + mean_x * mean_x / sxx).sqrt();
    Ok(RegressionFit {
        slope,
        intercept,
        r2,
        slope_ci95: Interval {
            lo: slope - t_crit * slope_se,
            hi: slope + t_crit * slope_se,
        },
        intercept_ci95: Interval {
            lo: intercept - t_crit * intercept_se,
            hi: intercept + t_crit * intercept_se,
        },
        n,
        residual_se,
        mean_x,
        sxx,
        t_crit,
    })
}

/// (id_bits, mt_ms) pairs.
pub fn mt_points(records: &[TrialRecord]) -> Vec<(f64, f64)> {
    records.iter().map(|r| (r.id_bits, r.mt_ms)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRate {
    pub errors: usize,
    pub n: usize,
    pub rate: f64,
    /// Wilson score interval.
    pub ci95: Interval,
}

pub fn wilson_interval(successes: usize, n: usize, z: f64) -> Interval {
    if n == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Interval {
        lo: (center - half).max(0.0).min(p),
        hi: (center + half).min(1.0).max(p),
    }
}

pub fn error_rate(records: &[TrialRecord]) -> Result<ErrorRate, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let errors = records.iter().filter(|r| r.error).count();
    let n = records.len();
    Ok(ErrorRate {
        errors,
        n,
        rate: errors as f64 / n as f64,
        ci95: wilson_interval(errors, n, Z95),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeStats {
    pub mean: f64,
    pub min: u32,
    pub max: u32,
}

pub fn stroke_stats(records: &[TrialRecord]) -> Result<StrokeStats, StatsError> {
    let strokes: Vec<u32> = records.iter().map(|r| r.strokes).collect();
    let (Some(&min), Some(&max)) = (strokes.iter().min(), strokes.iter().max()) else {
        return Err(StatsError::Empty);
    };
    Ok(StrokeStats {
        mean: strokes.iter().map(|&s| f64::from(s)).sum::<f64>() / strokes.len() as f64,
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionSummary {
    pub total_travel_px: f64,
    pub total_saved_px: f64,
    pub accepts: u64,
    /// Absent when nothing was accepted.
    pub saved_per_accept_px: Option<f64>,
}

pub fn motion_accounting(records: &[TrialRecord]) -> MotionSummary {
    let total_travel_px = records.iter().map(|r| r.pointer_travel_px).sum();
    let total_saved_px: f64 = records.iter().map(|r| r.saved_px).sum();
    let accepts: u64 = records.iter().map(|r| u64::from(r.accepts())).sum();
    MotionSummary {
        total_travel_px,
        total_saved_px,
        accepts,
        saved_per_accept_px: (accepts > 0).then(|| total_saved_px / accepts as f64),
    }
}
