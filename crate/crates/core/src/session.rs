//! Driving the chord engine through a scripted scenario.
//!
//! A session feeds a recorded key-event stream to a [`PadEngine`] while
//! tracking which screen of a [`Scenario`] is showing and which suggestions it
//! offers. Every accepted chord closes one trial: the pointer never moves, so
//! the distance from the screen's cursor to the accepted target counts as
//! saved travel and no click is logged.

use std::collections::BTreeMap;

use crate::metrics::{Device, RunHeader, RunLog, TrialRecord};
use crate::pad::{
    Edge, KeyEvent, KeyId, Millis, PadAction, PadConfig, PadEngine, StreamError, TimedAction,
    DEFAULT_RELEASE_WINDOW_MS,
};
use crate::prediction::{rank_targets, AccuracyProfile, RankError, RankedSuggestions, Scenario};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub run_id: String,
    pub condition: String,
    pub release_window_ms: Millis,
    /// Profile for screens without a scripted ranking.
    pub profile: Option<AccuracyProfile>,
    /// Intended target per screen; screens not listed aim at the first entry
    /// of their scripted ranking.
    pub goals: BTreeMap<String, String>,
    pub seed: u64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            run_id: "session".into(),
            condition: "scenario".into(),
            release_window_ms: DEFAULT_RELEASE_WINDOW_MS,
            profile: None,
            goals: BTreeMap::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("screen `{0}` has no goal and no scripted ranking")]
    NoGoal(String),
    #[error("screen `{0}` has no scripted ranking and no profile was given")]
    NoProfile(String),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("event {index} arrives after the scenario ended")]
    AfterEnd { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    /// One record per accepted chord. Activity after the last accept is not
    /// a trial and is dropped.
    pub log: RunLog,
    pub actions: Vec<TimedAction>,
    /// Whether a terminal transition was reached.
    pub finished: bool,
    /// Screen showing when the stream ended.
    pub final_screen: String,
}

/// Counters for the trial in progress.
#[derive(Default)]
struct Pending {
    start: Option<Millis>,
    keypresses: u32,
    previews: u32,
    cycles: u32,
    discards: u32,
}

struct Visit {
    screen: usize,
    goal: String,
    suggestions: RankedSuggestions,
}

fn visit(
    scenario: &Scenario,
    screen: usize,
    n: u64,
    options: &SessionOptions,
) -> Result<Visit, SessionError> {
    let s = &scenario.screens[screen];
    let goal = match (options.goals.get(&s.name), &s.scripted_ranking) {
        (Some(g), _) => g.clone(),
        (None, Some(script)) if !script.is_empty() => script[0].clone(),
        _ => return Err(SessionError::NoGoal(s.name.clone())),
    };
    let profile = match (&options.profile, &s.scripted_ranking) {
        (Some(p), _) => p.clone(),
        // Ignored by `rank_targets` for scripted screens.
        (None, Some(_)) => AccuracyProfile::ideal(),
        (None, None) => return Err(SessionError::NoProfile(s.name.clone())),
    };
    let mut rng = seeded(derive_seed(options.seed, &[n]));
    let suggestions = rank_targets(s, &goal, &profile, &mut rng)?;
    Ok(Visit {
        screen,
        goal,
        suggestions,
    })
}

fn engine_for(visit: &Visit, scenario: &Scenario, window: Millis) -> PadEngine {
    let cap = scenario.screens[visit.screen].max_candidates;
    let n = (visit.suggestions.len() as u32).min(cap).max(1);
    PadEngine::new(PadConfig {
        release_window_ms: window,
        max_candidates: n,
        emit_discard_on_timeout: true,
    })
}

/// Replays `events` through `scenario`.
pub fn run_session(
    scenario: &Scenario,
    events: &[KeyEvent],
    options: &SessionOptions,
) -> Result<SessionOutcome, SessionError> {
    let index_of = |name: &str| {
        scenario
            .screens
            .iter()
            .position(|s| s.name == name)
            .expect("validated scenario")
    };
    let mut visits = 0u64;
    let mut current = visit(scenario, index_of(&scenario.start), visits, options)?;
    let mut engine = engine_for(&current, scenario, options.release_window_ms);
    let mut pending = Pending::default();
    let mut records = Vec::new();
    let mut actions = Vec::new();
    let mut finished = false;
    let mut last_t: Option<Millis> = None;

    for (index, &event) in events.iter().enumerate() {
        if finished {
            return Err(SessionError::AfterEnd { index });
        }
        // Screen changes swap engines, so time order is checked here too.
        if let Some(last) = last_t.filter(|&last| event.t < last) {
            return Err(StreamError::AtEvent {
                index,
                source: Box::new(StreamError::NonMonotonic { t: event.t, last }),
            }
            .into());
        }
        last_t = Some(event.t);
        let action = engine.apply(event).map_err(|e| StreamError::AtEvent {
            index,
            source: Box::new(e),
        })?;
        pending.start.get_or_insert(event.t);
        if event.edge == Edge::Down && event.key != KeyId::Timeout {
            pending.keypresses += 1;
        }
        match action {
            PadAction::Noop => continue,
            PadAction::EnterPreview { .. } => pending.previews += 1,
            PadAction::Cycle { .. } => pending.cycles += 1,
            PadAction::Discard => pending.discards += 1,
            PadAction::Accept { index } => {
                let screen = &scenario.screens[current.screen];
                let cursor = screen.cursor();
                let chosen = current.suggestions.at(index);
                let distance = chosen.map_or(0.0, |t| cursor.distance(t.center()));
                let width = chosen.map_or(0.0, |t| t.w.min(t.h));
                let start = pending.start.unwrap_or(event.t);
                records.push(TrialRecord {
                    trial_idx: records.len() as u32 + 1,
                    id_bits: if width > 0.0 {
                        (distance / width + 1.0).log2()
                    } else {
                        0.0
                    },
                    amplitude_px: distance,
                    width_px: width,
                    mt_ms: (event.t.saturating_sub(start)).max(1) as f64,
                    error: chosen.is_none_or(|t| t.id != current.goal),
                    strokes: pending.previews + pending.cycles,
                    keypresses: pending.keypresses,
                    clicks: 0,
                    previews: pending.previews,
                    cycles: pending.cycles,
                    discards: pending.discards,
                    pointer_travel_px: 0.0,
                    saved_px: distance,
                });
                pending = Pending::default();

                let next = chosen.map(|t| t.id.as_str());
                if next.is_some_and(|id| screen.is_terminal(id)) {
                    finished = true;
                } else if let Some(name) = next.and_then(|id| screen.next_screen(id)) {
                    visits += 1;
                    current = visit(scenario, index_of(name), visits, options)?;
                    // Accept leaves the engine idle with both modifiers up,
                    // so a fresh engine loses no state.
                    engine = engine_for(&current, scenario, options.release_window_ms);
                }
            }
        }
        actions.push(TimedAction { t: event.t, action });
    }

    let final_screen = scenario.screens[current.screen].name.clone();
    Ok(SessionOutcome {
        log: RunLog::new(
            RunHeader {
                run_id: options.run_id.clone(),
                condition: options.condition.clone(),
                device: Device::Pad,
                profile: Some(
                    options
                        .profile
                        .as_ref()
                        .map_or("scripted", |p| p.name())
                        .to_string(),
                ),
                seed: options.seed,
            },
            records,
        ),
        actions,
        finished,
        final_screen,
    })
}

/// Key events for one accepted chord on the top suggestion, starting at `t`:
/// chord at `t`/`t+50`, simultaneous release at `t+hold`/`t+hold+30`.
pub fn accept_chord(t: Millis, hold: Millis, cycles: u32) -> Vec<KeyEvent> {
    let mut events = vec![
        KeyEvent::down(KeyId::ModA, t),
        KeyEvent::down(KeyId::ModB, t + 50),
    ];
    for c in 0..cycles as u64 {
        let at = t + 100 + 100 * c;
        events.push(KeyEvent::down(KeyId::CycleKey, at));
        events.push(KeyEvent::up(KeyId::CycleKey, at + 40));
    }
    let release = t + hold.max(100 + 100 * cycles as u64);
    events.push(KeyEvent::up(KeyId::ModA, release));
    events.push(KeyEvent::up(KeyId::ModB, release + 30));
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::motion_accounting;

    fn email_events() -> Vec<KeyEvent> {
        let mut e = accept_chord(0, 900, 0);
        e.extend(accept_chord(2000, 700, 0));
        e
    }

    #[test]
    fn scripted_reply_and_send() {
        let out = run_session(
            &Scenario::email_mockup(),
            &email_events(),
            &Default::default(),
        )
        .unwrap();
        assert!(out.finished);
        assert_eq!(out.log.records.len(), 2);
        assert!(out.log.records.iter().all(|r| r.clicks == 0 && !r.error));
        let m = motion_accounting(&out.log.records);
        assert_eq!(m.accepts, 2);
        assert!((m.total_saved_px - 1200.0).abs() < 1e-9);
        assert_eq!(out.log.records[0].mt_ms, 930.0);
        assert_eq!(out.log.records[0].keypresses, 2);
    }

    #[test]
    fn time_order_checked_across_screens() {
        let mut e = accept_chord(1000, 500, 0);
        e.extend(accept_chord(0, 500, 0));
        let err = run_session(&Scenario::email_mockup(), &e, &Default::default()).unwrap_err();
        assert!(matches!(err, SessionError::Stream(ref s) if s.index() == Some(4)));
    }

    #[test]
    fn events_after_end_rejected() {
        let mut e = email_events();
        e.push(KeyEvent::down(KeyId::ModA, 9000));
        assert_eq!(
            run_session(&Scenario::email_mockup(), &e, &Default::default()),
            Err(SessionError::AfterEnd { index: 8 })
        );
    }

    #[test]
    fn discard_keeps_screen_and_counts() {
        let e = vec![
            KeyEvent::down(KeyId::ModA, 0),
            KeyEvent::down(KeyId::ModB, 10),
            KeyEvent::up(KeyId::ModA, 500),
            KeyEvent::up(KeyId::ModB, 900),
        ];
        let out = run_session(&Scenario::email_mockup(), &e, &Default::default()).unwrap();
        assert!(!out.finished);
        assert_eq!(out.final_screen, "inbox");
        assert!(out.log.records.is_empty());
        let mut e2 = e.clone();
        e2.extend(accept_chord(1000, 500, 0));
        let out = run_session(&Scenario::email_mockup(), &e2, &Default::default()).unwrap();
        let r = &out.log.records[0];
        assert_eq!((r.previews, r.discards, r.accepts()), (2, 1, 1));
        assert_eq!(out.final_screen, "compose");
    }

    #[test]
    fn cycling_to_wrong_target_is_an_error() {
        // Second inbox suggestion is reply_all, which also leads to compose.
        let out = run_session(
            &Scenario::email_mockup(),
            &accept_chord(0, 500, 1),
            &Default::default(),
        )
        .unwrap();
        let r = &out.log.records[0];
        assert!(r.error);
        assert_eq!(r.cycles, 1);
        assert_eq!(r.strokes, 2);
        assert_eq!(out.final_screen, "compose");
    }

    #[test]
    fn unscripted_screen_needs_profile() {
        let mut s = Scenario::email_mockup();
        s.screens[0].scripted_ranking = None;
        let opts = SessionOptions {
            goals: [("inbox".to_string(), "reply".to_string())].into(),
            ..Default::default()
        };
        assert!(matches!(
            run_session(&s, &[], &opts),
            Err(SessionError::NoProfile(_))
        ));
        let opts = SessionOptions {
            profile: Some(AccuracyProfile::new("sure", vec![1.0]).unwrap()),
            ..opts
        };
        let out = run_session(&s, &accept_chord(0, 400, 0), &opts).unwrap();
        assert!(!out.log.records[0].error);
    }
}
