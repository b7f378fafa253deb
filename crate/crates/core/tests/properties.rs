use std::collections::HashSet;

use proptest::prelude::*;

use padbench_core::metrics::{
    export_csv, fit_linear, format_float, parse_csv, wilson_interval, Z95,
};
use padbench_core::pad::{replay, step, Edge, KeyEvent, KeyId, PadAction, PadConfig, PadState};
use padbench_core::prediction::{rank_targets, AccuracyProfile, Rank, Screen, Target};
use padbench_core::rng::seeded;
use padbench_core::taskgen::{layout_for_id, trial_sequence};
use padbench_core::usersim::{
    simulate_pad_trial, simulate_run, RunOptions, SimCondition, SimParams, TrialGeometry,
};

const KEYS: [KeyId; 5] = [
    KeyId::ModA,
    KeyId::ModB,
    KeyId::CycleKey,
    KeyId::Other(65),
    KeyId::Timeout,
];

/// Valid event streams: time never decreases and each key alternates
/// down/up (timeouts are always down).
fn stream(max_len: usize) -> impl Strategy<Value = Vec<KeyEvent>> {
    prop::collection::vec((0usize..KEYS.len(), 0u64..400), 0..max_len).prop_map(|picks| {
        let mut held = HashSet::new();
        let mut t = 0;
        picks
            .into_iter()
            .map(|(k, dt)| {
                t += dt;
                let key = KEYS[k];
                let edge = if key == KeyId::Timeout || held.insert(key) {
                    Edge::Down
                } else {
                    held.remove(&key);
                    Edge::Up
                };
                KeyEvent { key, edge, t }
            })
            .collect()
    })
}

fn config() -> impl Strategy<Value = PadConfig> {
    (1u64..400, 1u32..8, any::<bool>()).prop_map(|(w, n, timeout)| PadConfig {
        release_window_ms: w,
        max_candidates: n,
        emit_discard_on_timeout: timeout,
    })
}

proptest! {
    #[test]
    fn replay_is_a_fold_of_step(events in stream(60), cfg in config()) {
        let first = replay(&events, &cfg).unwrap();
        prop_assert_eq!(&first, &replay(&events, &cfg).unwrap());
        let mut state = PadState::Idle;
        let mut folded = Vec::new();
        for e in &events {
            let (next, action) = step(state, *e, &cfg);
            state = next;
            if action != PadAction::Noop {
                folded.push(action);
            }
        }
        prop_assert_eq!(first.iter().map(|a| a.action).collect::<Vec<_>>(), folded);
    }

    #[test]
    fn n_cycles_return_to_start(n in 1u32..10, start in 1u32..10) {
        let start = (start - 1) % n + 1;
        let cfg = PadConfig { max_candidates: n, ..PadConfig::default() };
        let mut state = PadState::Preview { index: start };
        for k in 0..n {
            let (next, action) = step(state, KeyEvent::down(KeyId::CycleKey, k as u64), &cfg);
            prop_assert!(matches!(action, PadAction::Cycle { .. }), "expected a cycle");
            let (next, _) = step(next, KeyEvent::up(KeyId::CycleKey, k as u64), &cfg);
            state = next;
        }
        prop_assert_eq!(state, PadState::Preview { index: start });
    }

    #[test]
    fn at_most_one_commitment_per_preview(events in stream(80), cfg in config()) {
        let mut open = false;
        for a in replay(&events, &cfg).unwrap() {
            match a.action {
                PadAction::EnterPreview { .. } => open = true,
                PadAction::Accept { .. } | PadAction::Discard => {
                    prop_assert!(open, "commitment without an open preview");
                    open = false;
                }
                _ => {}
            }
        }
    }

    #[test]
    fn accept_carries_the_last_shown_index(events in stream(80), cfg in config()) {
        let mut shown = None;
        for a in replay(&events, &cfg).unwrap() {
            match a.action {
                PadAction::EnterPreview { index } => shown = Some(index),
                PadAction::Cycle { new_index } => shown = Some(new_index),
                PadAction::Accept { index } => prop_assert_eq!(Some(index), shown),
                _ => {}
            }
            if let Some(i) = shown {
                prop_assert!((1..=cfg.max_candidates).contains(&i));
            }
        }
    }

    #[test]
    fn no_actions_without_both_modifiers(events in stream(80), cfg in config()) {
        // Drop every ModB event: the chord can never form.
        let typing: Vec<KeyEvent> =
            events.into_iter().filter(|e| e.key != KeyId::ModB).collect();
        prop_assert!(replay(&typing, &cfg).unwrap().is_empty());
    }

    #[test]
    fn float_format_is_a_fixed_point(x in -1e7f64..1e7) {
        let once = format_float(x);
        let again = format_float(once.parse().unwrap());
        prop_assert_eq!(once, again);
    }

    #[test]
    fn simulated_logs_reexport_identically(
        seed in any::<u64>(),
        cond in 0usize..3,
        id in 2.0f64..7.0,
        learning in prop::option::of(0.0f64..1.0),
    ) {
        let condition = [
            SimCondition::trackpad(),
            SimCondition::pad(AccuracyProfile::ideal()),
            SimCondition::pad(AccuracyProfile::uniform3()),
        ][cond].clone();
        let plan = trial_sequence(layout_for_id(id, 50.0, 9).unwrap(), 22);
        let log = simulate_run("p", &condition, &plan, &SimParams::shipped(), seed,
            RunOptions { learning });
        let text = export_csv(&log).unwrap();
        let parsed = parse_csv(&text).unwrap();
        prop_assert_eq!(export_csv(&parsed).unwrap(), text);
        prop_assert!(parsed.warning.is_none());
        let trimmed = log.exclude_warmup(5);
        prop_assert_eq!(trimmed.exclude_warmup(5), trimmed.clone());
        prop_assert!(trimmed.records.iter().all(|r| r.trial_idx > 5));
    }

    #[test]
    fn regression_ignores_point_order(
        pts in prop::collection::vec((0.0f64..10.0, -1e3f64..1e4), 3..40),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let Ok(a) = fit_linear(&pts) else { return Ok(()); };
        let mut shuffled = pts.clone();
        shuffled.shuffle(&mut seeded(seed));
        let b = fit_linear(&shuffled).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
        prop_assert!(close(a.slope, b.slope));
        prop_assert!(close(a.intercept, b.intercept));
        prop_assert!(close(a.r2, b.r2));
    }

    #[test]
    fn wilson_brackets_the_estimate(n in 1usize..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as usize;
        let ci = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= ci.lo && ci.lo <= p && p <= ci.hi && ci.hi <= 1.0);
    }

    #[test]
    fn suggestions_are_distinct_and_place_the_truth(
        n_targets in 1usize..9,
        cap in 1u32..8,
        truth in 0usize..9,
        seed in any::<u64>(),
    ) {
        let truth_id = format!("t{}", truth % n_targets);
        let screen = Screen {
            name: "s".into(),
            max_candidates: cap,
            cursor: None,
            targets: (0..n_targets)
                .map(|i| Target {
                    id: format!("t{i}"),
                    label: String::new(),
                    x: i as f64,
                    y: 0.0,
                    w: 10.0,
                    h: 10.0,
                })
                .collect(),
            transitions: Default::default(),
            scripted_ranking: None,
        };
        let profile = AccuracyProfile::new("p", vec![0.5, 0.2, 0.1, 0.1]).unwrap();
        let s = rank_targets(&screen, &truth_id, &profile, &mut seeded(seed)).unwrap();
        let ids: HashSet<_> = s.targets.iter().map(|t| &t.id).collect();
        prop_assert_eq!(ids.len(), s.targets.len());
        prop_assert!(s.targets.len() <= (cap as usize).min(profile.len()));
        match s.true_rank {
            Rank::Hit(r) => prop_assert_eq!(&s.at(r).unwrap().id, &truth_id),
            Rank::Miss => prop_assert!(!ids.contains(&truth_id), "missed target listed"),
        }
    }

    #[test]
    fn wider_window_never_adds_discards(
        seed in any::<u64>(),
        narrow in 20u64..170,
        extra in 0u64..300,
        id in 3.0f64..7.0,
    ) {
        let mut params = SimParams::shipped();
        params.decision.release_gap_mu_ms = 120.0;
        params.decision.release_gap_sigma_ms = 80.0;
        let geometry = TrialGeometry::nominal(id, 50.0);
        let run = |window| {
            let mut c = SimCondition::pad(AccuracyProfile::uniform3());
            c.release_window_ms = window;
            simulate_pad_trial(geometry, &c, &params, &mut seeded(seed))
        };
        let tight = run(narrow);
        let loose = run(narrow + extra);
        prop_assert!(loose.discards <= tight.discards);
        prop_assert!(loose.mt_ms <= tight.mt_ms + 1e-9);
    }
}
