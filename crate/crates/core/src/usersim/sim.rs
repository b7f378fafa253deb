//! Trial- and run-level Monte Carlo.
//!
//! Trackpad trials follow Fitts's law with multiplicative log-normal noise.
//! PAD trials pay a decision cost instead of a pointing cost:
//!
//! ```text
//! mt = react + hick·log2(N + 1) + cycles·(cycle_press + verify)
//!      + fitts_b_pad·ID + release_gap            (× log-normal noise)
//! ```
//!
//! plus a full retry whenever the release gap overruns the window.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::params::{DecisionParams, MotorParams, SimParams};
use crate::metrics::{format_float, Device, RunHeader, RunLog, TrialRecord};
use crate::pad::{DEFAULT_MAX_CANDIDATES, DEFAULT_RELEASE_WINDOW_MS};
use crate::prediction::{AccuracyProfile, Rank};
use crate::rng::{derive_seed, seeded};
use crate::taskgen::{
    layout_for_id, trial_sequence, TaskError, TrialPlan, DEFAULT_TARGETS, DEFAULT_TRIALS,
    DEFAULT_WIDTH_PX,
};

/// Retries after accidental discards before the simulated user gets it right.
const MAX_RETRIES: u32 = 8;
/// Floor on simulated movement times.
const MIN_MT_MS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCondition {
    pub device: Device,
    /// Required for PAD.
    pub profile: Option<AccuracyProfile>,
    pub release_window_ms: u64,
    pub max_candidates: u32,
}

impl SimCondition {
    pub fn trackpad() -> Self {
        SimCondition {
            device: Device::Trackpad,
            profile: None,
            release_window_ms: DEFAULT_RELEASE_WINDOW_MS,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }

    pub fn pad(profile: AccuracyProfile) -> Self {
        SimCondition {
            device: Device::Pad,
            profile: Some(profile),
            release_window_ms: DEFAULT_RELEASE_WINDOW_MS,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }

    /// `trackpad` or `pad_<profile>`.
    pub fn name(&self) -> String {
        match (&self.device, &self.profile) {
            (Device::Pad, Some(p)) => format!("pad_{}", p.name()),
            (device, _) => device.to_string(),
        }
    }

    pub fn candidates(&self) -> u32 {
        self.profile
            .as_ref()
            .map_or(1, |p| (p.len() as u32).min(self.max_candidates).max(1))
    }
}

/// Geometry of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialGeometry {
    pub id_bits: f64,
    pub amplitude_px: f64,
    pub width_px: f64,
    /// Pointer-to-target distance at trial start.
    pub distance_px: f64,
}

impl TrialGeometry {
    /// Straight-across trial on a ring of width `width_px` at `id_bits`.
    pub fn nominal(id_bits: f64, width_px: f64) -> Self {
        let amplitude_px = width_px * (id_bits.exp2() - 1.0);
        TrialGeometry {
            id_bits,
            amplitude_px,
            width_px,
            distance_px: amplitude_px,
        }
    }
}

/// Multiplicative noise with mean 1 and the given coefficient of variation.
fn lognormal_factor(cv: f64, z: f64) -> f64 {
    if cv <= 0.0 {
        return 1.0;
    }
    let s2 = (1.0 + cv * cv).ln();
    (-0.5 * s2 + s2.sqrt() * z).exp()
}

fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

pub fn simulate_trackpad_trial<R: Rng + ?Sized>(
    geometry: TrialGeometry,
    params: &MotorParams,
    rng: &mut R,
) -> TrialRecord {
    let z = std_normal(rng);
    let missed = rng.random::<f64>() < params.miss_rate;
    let lambda = params.submovements_per_bit * geometry.id_bits;
    let extra = if lambda > 0.0 {
        Poisson::new(lambda).map_or(0.0, |d| d.sample(rng)) as u32
    } else {
        0
    };

    let mut mt = (params.fitts_a + params.fitts_b * geometry.id_bits)
        * lognormal_factor(params.mt_noise_cv, z);
    if missed {
        mt += params.correction_penalty_ms;
    }
    let corrections = extra + u32::from(missed);
    TrialRecord {
        trial_idx: 0,
        id_bits: geometry.id_bits,
        amplitude_px: geometry.amplitude_px,
        width_px: geometry.width_px,
        mt_ms: mt.max(MIN_MT_MS),
        error: missed,
        strokes: 1 + corrections,
        keypresses: 0,
        clicks: 1 + u32::from(missed),
        previews: 0,
        cycles: 0,
        discards: 0,
        pointer_travel_px: geometry.distance_px + f64::from(corrections) * geometry.width_px / 2.0,
        saved_px: 0.0,
    }
}

/// Outcome of the cycling phase before release.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Selection {
    cycles: u32,
    wrong_accept: bool,
    missed: bool,
    /// Cycles needed to reach the target again on a retry.
    cycles_to_target: u32,
}

fn select<R: Rng + ?Sized>(rank: Rank, n: u32, dparams: &DecisionParams, rng: &mut R) -> Selection {
    // Both variates are drawn on every trial so parameter changes do not
    // shift later draws.
    let u_over: f64 = rng.random();
    let verify_time = if dparams.verify_ms_per_option > 0.0 {
        Exp::new(1.0 / dparams.verify_ms_per_option).map_or(0.0, |d| d.sample(rng))
    } else {
        let _: f64 = rng.random();
        0.0
    };
    match rank {
        Rank::Miss => Selection {
            cycles: n - 1,
            wrong_accept: false,
            missed: true,
            cycles_to_target: 0,
        },
        Rank::Hit(k) => {
            let to_target = k - 1;
            if k >= 2 && u_over < dparams.overshoot_prob {
                // One press too many. The release was already on its way; it
                // is stopped only if the new preview is inspected first.
                if verify_time > dparams.cycle_press_ms {
                    Selection {
                        cycles: k,
                        wrong_accept: true,
                        missed: false,
                        cycles_to_target: to_target,
                    }
                } else {
                    Selection {
                        cycles: to_target + n,
                        wrong_accept: false,
                        missed: false,
                        cycles_to_target: to_target,
                    }
                }
            } else {
                Selection {
                    cycles: to_target,
                    wrong_accept: false,
                    missed: false,
                    cycles_to_target: to_target,
                }
            }
        }
    }
}

pub fn simulate_pad_trial<R: Rng + ?Sized>(
    geometry: TrialGeometry,
    condition: &SimCondition,
    params: &SimParams,
    rng: &mut R,
) -> TrialRecord {
    let d = &params.decision;
    let m = &params.motor;
    let n = condition.candidates();
    let window = condition.release_window_ms as f64;
    let profile = condition
        .profile
        .as_ref()
        .expect("PAD condition carries a profile");

    let rank = match profile.draw_rank(rng) {
        Rank::Hit(k) if k <= n => Rank::Hit(k),
        _ => Rank::Miss,
    };
    let z = std_normal(rng);
    let sel = select(rank, n, d, rng);
    let gap_dist = Normal::new(d.release_gap_mu_ms, d.release_gap_sigma_ms.max(0.0))
        .expect("finite gap parameters");
    let mut gap = || gap_dist.sample(rng).abs();

    let per_cycle = d.cycle_press_ms + d.verify_ms_per_option;
    let mut mt = d.react_ms
        + d.hick_ms_per_bit * f64::from(n + 1).log2()
        + f64::from(sel.cycles) * per_cycle
        + m.fitts_b_pad * geometry.id_bits;

    let mut previews = 1;
    let mut discards = 0;
    let mut cycles = sel.cycles;

    if sel.missed {
        // Nothing to accept: the user releases sequentially on purpose.
        mt += window + gap();
        discards += 1;
    } else {
        let mut g = gap();
        mt += g;
        let mut retries = 0;
        while g > window && retries < MAX_RETRIES {
            retries += 1;
            previews += 1;
            discards += 1;
            cycles += sel.cycles_to_target;
            g = gap();
            mt += d.react_ms + f64::from(sel.cycles_to_target) * per_cycle + g;
        }
    }
    mt *= lognormal_factor(d.time_noise_cv, z);

    let accepted = !sel.missed;
    TrialRecord {
        trial_idx: 0,
        id_bits: geometry.id_bits,
        amplitude_px: geometry.amplitude_px,
        width_px: geometry.width_px,
        mt_ms: mt.max(MIN_MT_MS),
        error: sel.wrong_accept || sel.missed,
        strokes: previews + cycles,
        keypresses: 2 * previews + cycles,
        clicks: 0,
        previews,
        cycles,
        discards,
        pointer_travel_px: 0.0,
        saved_px: if accepted { geometry.distance_px } else { 0.0 },
    }
}

pub fn simulate_trial<R: Rng + ?Sized>(
    geometry: TrialGeometry,
    condition: &SimCondition,
    params: &SimParams,
    rng: &mut R,
) -> TrialRecord {
    match condition.device {
        Device::Trackpad => simulate_trackpad_trial(geometry, &params.motor, rng),
        Device::Pad => simulate_pad_trial(geometry, condition, params, rng),
    }
}

/// Movement-time multiplier for trial `ordinal` (1-based): linear decay from
/// `1 + amplitude` at trial 1 to `1 + amplitude/5` at trial 5, then 1.
pub fn learning_multiplier(ordinal: u32, amplitude: f64) -> f64 {
    if ordinal == 0 || ordinal > 5 {
        1.0
    } else {
        1.0 + amplitude * f64::from(6 - ordinal) / 5.0
    }
}

/// Warm-up slowdown used unless a caller asks otherwise: the first trial
/// takes 50% longer, decaying to no slowdown from trial 6 on.
pub const DEFAULT_LEARNING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RunOptions {
    /// Warm-up slowdown amplitude; `None` disables the learning effect.
    pub learning: Option<f64>,
}

/// Seed of trial `trial_idx` (1-based) within a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial_idx: u32) -> u64 {
    derive_seed(seed, &[u64::from(trial_idx)])
}

/// Simulates one run over `plan`. Each trial draws from its own stream, so
/// records do not depend on evaluation order.
pub fn simulate_run(
    run_id: &str,
    condition: &SimCondition,
    plan: &TrialPlan,
    params: &SimParams,
    seed: u64,
    options: RunOptions,
) -> RunLog {
    let layout = plan.layout;
    let records = (0..plan.n_trials())
        .map(|j| {
            let trial_idx = j as u32 + 1;
            let mut rng = seeded(trial_seed(seed, trial_idx));
            let geometry = TrialGeometry {
                id_bits: layout.id_bits(),
                amplitude_px: layout.amplitude_px,
                width_px: layout.width_px,
                distance_px: plan.travel(j),
            };
            let mut r = simulate_trial(geometry, condition, params, &mut rng);
            r.trial_idx = trial_idx;
            if let Some(amp) = options.learning {
                r.mt_ms *= learning_multiplier(trial_idx, amp);
            }
            r
        })
        .collect();
    RunLog::new(
        RunHeader {
            run_id: run_id.to_string(),
            condition: condition.name(),
            device: condition.device,
            profile: condition.profile.as_ref().map(|p| p.name().to_string()),
            seed,
        },
        records,
    )
}

/// A set of runs at several IDs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub ids: Vec<f64>,
    pub runs_per_id: usize,
    pub n_trials: usize,
    pub width_px: f64,
}

impl BlockSpec {
    /// 22-trial runs on the default ring.
    pub fn new(ids: &[f64], runs_per_id: usize) -> Self {
        BlockSpec {
            ids: ids.to_vec(),
            runs_per_id,
            n_trials: DEFAULT_TRIALS,
            width_px: DEFAULT_WIDTH_PX,
        }
    }
}

/// All runs of `block`, ordered by ID then run. Run `r` at the `k`-th ID is
/// seeded with `derive_seed(seed, [k, r])` and named `<condition>_<id>_<r + 1>`.
pub fn simulate_block(
    condition: &SimCondition,
    block: &BlockSpec,
    params: &SimParams,
    seed: u64,
    options: RunOptions,
) -> Result<Vec<RunLog>, TaskError> {
    let mut logs = Vec::with_capacity(block.ids.len() * block.runs_per_id);
    for (k, &id) in block.ids.iter().enumerate() {
        let layout = layout_for_id(id, block.width_px, DEFAULT_TARGETS)?;
        let plan = trial_sequence(layout, block.n_trials);
        for r in 0..block.runs_per_id {
            let run_id = format!("{}_{}_{}", condition.name(), format_float(id), r + 1);
            let run_seed = derive_seed(seed, &[k as u64, r as u64]);
            logs.push(simulate_run(
                &run_id, condition, &plan, params, run_seed, options,
            ));
        }
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgen::{layout_for_id, trial_sequence};

    fn noiseless_motor() -> MotorParams {
        MotorParams {
            fitts_a: 0.0,
            fitts_b: 200.0,
            mt_noise_cv: 0.0,
            miss_rate: 0.0,
            correction_penalty_ms: 0.0,
            submovements_per_bit: 0.0,
            fitts_b_pad: 0.0,
        }
    }

    fn quiet_params() -> SimParams {
        let mut p = SimParams::shipped();
        p.motor = noiseless_motor();
        p.decision.overshoot_prob = 0.0;
        p.decision.release_gap_sigma_ms = 0.0;
        p.decision.release_gap_mu_ms = 20.0;
        p.decision.time_noise_cv = 0.0;
        p
    }

    #[test]
    fn noiseless_fitts() {
        let mut rng = seeded(1);
        let r = simulate_trackpad_trial(
            TrialGeometry::nominal(5.0, 50.0),
            &noiseless_motor(),
            &mut rng,
        );
        assert_eq!(r.mt_ms, 1000.0);
        assert_eq!(r.strokes, 1);
        assert!(!r.error);
        assert_eq!(r.saved_px, 0.0);
        assert_eq!(r.clicks, 1);
    }

    #[test]
    fn zero_miss_rate_never_errs() {
        let mut m = SimParams::shipped().motor;
        m.miss_rate = 0.0;
        let mut rng = seeded(2);
        assert!((0..2000).all(|_| !simulate_trackpad_trial(
            TrialGeometry::nominal(6.0, 50.0),
            &m,
            &mut rng
        )
        .error));
    }

    #[test]
    fn lognormal_factor_has_unit_mean() {
        let mut rng = seeded(3);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| lognormal_factor(0.3, std_normal(&mut rng)))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "{mean}");
        assert_eq!(lognormal_factor(0.0, 2.0), 1.0);
    }

    #[test]
    fn pad_strokes_equal_rank_without_noise() {
        let params = quiet_params();
        for k in 1..=3u32 {
            let mut p = vec![0.0; 3];
            p[k as usize - 1] = 1.0;
            let cond = SimCondition::pad(AccuracyProfile::new("fixed", p).unwrap());
            let mut rng = seeded(k as u64);
            let r = simulate_pad_trial(TrialGeometry::nominal(5.0, 50.0), &cond, &params, &mut rng);
            assert_eq!(r.strokes, k);
            assert_eq!(r.cycles, k - 1);
            assert_eq!(r.keypresses, 2 + k - 1);
            assert_eq!((r.previews, r.discards, r.clicks), (1, 0, 0));
            assert!(!r.error);
            assert_eq!(r.saved_px, 1550.0);
            let d = &params.decision;
            let expect = d.react_ms
                + d.hick_ms_per_bit * 2.0
                + f64::from(k - 1) * (d.cycle_press_ms + d.verify_ms_per_option)
                + 20.0;
            assert!((r.mt_ms - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn wide_gaps_cause_retries_not_errors() {
        let mut params = quiet_params();
        params.decision.release_gap_mu_ms = 100.0;
        params.decision.release_gap_sigma_ms = 100.0;
        let cond = SimCondition::pad(AccuracyProfile::uniform3());
        let mut rng = seeded(4);
        let rs: Vec<_> = (0..3000)
            .map(|_| {
                simulate_pad_trial(TrialGeometry::nominal(4.0, 50.0), &cond, &params, &mut rng)
            })
            .collect();
        let retried = rs.iter().filter(|r| r.discards > 0).count();
        assert!(retried > 100);
        assert!(rs.iter().all(|r| !r.error && r.accepts() == 1));
        assert!(rs.iter().all(|r| r.strokes == r.previews + r.cycles));
    }

    #[test]
    fn miss_draw_is_an_error_with_discard() {
        let params = quiet_params();
        let cond = SimCondition::pad(AccuracyProfile::new("never", vec![0.0, 0.0, 0.0]).unwrap());
        let mut rng = seeded(5);
        let r = simulate_pad_trial(TrialGeometry::nominal(4.0, 50.0), &cond, &params, &mut rng);
        assert!(r.error);
        assert_eq!((r.discards, r.accepts(), r.cycles), (1, 0, 2));
        assert_eq!(r.saved_px, 0.0);
    }

    #[test]
    fn run_has_requested_trials_and_is_deterministic() {
        let plan = trial_sequence(layout_for_id(5.0, 50.0, 9).unwrap(), 22);
        let cond = SimCondition::pad(AccuracyProfile::ideal());
        let params = SimParams::shipped();
        let a = simulate_run("r0", &cond, &plan, &params, 99, RunOptions::default());
        let b = simulate_run("r0", &cond, &plan, &params, 99, RunOptions::default());
        assert_eq!(a.len(), 22);
        assert_eq!(a, b);
        assert_eq!(a.header.condition, "pad_ideal");
        assert!(a
            .records
            .iter()
            .enumerate()
            .all(|(i, r)| r.trial_idx == i as u32 + 1));
        let c = simulate_run("r0", &cond, &plan, &params, 100, RunOptions::default());
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn learning_multiplier_shape() {
        assert_eq!(learning_multiplier(1, 0.5), 1.5);
        assert!((learning_multiplier(5, 0.5) - 1.1).abs() < 1e-12);
        assert_eq!(learning_multiplier(6, 0.5), 1.0);
        let plan = trial_sequence(layout_for_id(4.0, 50.0, 9).unwrap(), 22);
        let cond = SimCondition::trackpad();
        let params = SimParams::shipped();
        let plain = simulate_run("r", &cond, &plan, &params, 5, RunOptions::default());
        let slow = simulate_run(
            "r",
            &cond,
            &plan,
            &params,
            5,
            RunOptions {
                learning: Some(0.5),
            },
        );
        for (p, s) in plain.records.iter().zip(&slow.records) {
            let m = learning_multiplier(p.trial_idx, 0.5);
            assert!((s.mt_ms - p.mt_ms * m).abs() < 1e-9);
        }
    }
}
