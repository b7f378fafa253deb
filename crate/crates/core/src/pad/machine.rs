use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Edge, KeyEvent, KeyId, Millis, Modifier, PadAction, PadConfig, PadState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReleaseKind {
    Simultaneous,
    Sequential,
}

/// The window is inclusive: a gap equal to the window still accepts.
pub fn classify_release(delta_ms: Millis, window_ms: Millis) -> ReleaseKind {
    if delta_ms <= window_ms {
        ReleaseKind::Simultaneous
    } else {
        ReleaseKind::Sequential
    }
}

/// Time at which a scheduler should inject a [`KeyId::Timeout`] event, if any.
pub fn next_deadline(state: &PadState, config: &PadConfig) -> Option<Millis> {
    match *state {
        PadState::ReleasePending {
            first_release_t, ..
        } if config.emit_discard_on_timeout => {
            Some(first_release_t.saturating_add(config.release_window_ms))
        }
        _ => None,
    }
}

/// Pure transition function. Stream validity is the caller's job (see
/// [`PadEngine`]); malformed input simply maps to `Noop`.
pub fn step(state: PadState, event: KeyEvent, config: &PadConfig) -> (PadState, PadAction) {
    use PadAction::*;

    let n = config.max_candidates.max(1);
    let modifier = event.key.modifier();

    match (state, event.edge) {
        (PadState::Idle, Edge::Down) => match modifier {
            Some(which) => (
                PadState::Armed {
                    which,
                    t_down: event.t,
                },
                Noop,
            ),
            None => (state, Noop),
        },

        (PadState::Armed { which, .. }, Edge::Down) if modifier == Some(which.other()) => {
            (PadState::Preview { index: 1 }, EnterPreview { index: 1 })
        }
        (PadState::Armed { which, .. }, Edge::Up) if modifier == Some(which) => {
            (PadState::Idle, Noop)
        }

        (PadState::Preview { index }, Edge::Down) if event.key == KeyId::CycleKey => {
            let new_index = index % n + 1;
            (PadState::Preview { index: new_index }, Cycle { new_index })
        }
        (PadState::Preview { index }, Edge::Up) => match modifier {
            Some(released) => (
                PadState::ReleasePending {
                    index,
                    first_release_t: event.t,
                    remaining: released.other(),
                },
                Noop,
            ),
            None => (state, Noop),
        },

        (
            PadState::ReleasePending {
                index,
                first_release_t,
                remaining,
            },
            edge,
        ) => match (edge, event.key) {
            (Edge::Up, key) if key == remaining.key() => {
                let delta = event.t.saturating_sub(first_release_t);
                match classify_release(delta, config.release_window_ms) {
                    ReleaseKind::Simultaneous => (PadState::Idle, Accept { index }),
                    ReleaseKind::Sequential => (PadState::Idle, Discard),
                }
            }
            (Edge::Down, key) if key == remaining.other().key() => {
                (PadState::Preview { index }, Noop)
            }
            (Edge::Down, KeyId::Timeout)
                if config.emit_discard_on_timeout
                    && event.t >= first_release_t.saturating_add(config.release_window_ms) =>
            {
                (PadState::Expired { remaining }, Discard)
            }
            _ => (state, Noop),
        },

        (PadState::Expired { remaining }, Edge::Up) if event.key == remaining.key() => {
            (PadState::Idle, Noop)
        }
        // Both modifiers held again after an expired release: a fresh preview.
        (PadState::Expired { remaining }, Edge::Down) if event.key == remaining.other().key() => {
            (PadState::Preview { index: 1 }, EnterPreview { index: 1 })
        }

        _ => (state, Noop),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("timestamp {t} ms precedes previous event at {last} ms")]
    NonMonotonic { t: Millis, last: Millis },
    #[error("{key:?} pressed at {t} ms while already down")]
    AlreadyDown { key: KeyId, t: Millis },
    #[error("event {index}: {source}")]
    AtEvent {
        index: usize,
        #[source]
        source: Box<StreamError>,
    },
}

impl StreamError {
    /// Zero-based index of the offending event, when known.
    pub fn index(&self) -> Option<usize> {
        match self {
            StreamError::AtEvent { index, .. } => Some(*index),
            _ => None,
        }
    }
}

/// An action stamped with the time of the event that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedAction {
    pub t: Millis,
    pub action: PadAction,
}

impl std::fmt::Display for TimedAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.action, self.t)
    }
}

/// Stateful wrapper that validates the event stream before stepping.
#[derive(Debug, Clone, Default)]
pub struct PadEngine {
    config: PadConfig,
    state: PadState,
    last_t: Option<Millis>,
    held: BTreeSet<KeyId>,
}

impl PadEngine {
    pub fn new(config: PadConfig) -> Self {
        PadEngine {
            config,
            ..Default::default()
        }
    }

    pub fn state(&self) -> PadState {
        self.state
    }

    pub fn config(&self) -> &PadConfig {
        &self.config
    }

    pub fn next_deadline(&self) -> Option<Millis> {
        next_deadline(&self.state, &self.config)
    }

    /// Applies one event. A rejected event leaves the engine untouched.
    pub fn apply(&mut self, event: KeyEvent) -> Result<PadAction, StreamError> {
        if let Some(last) = self.last_t {
            if event.t < last {
                return Err(StreamError::NonMonotonic { t: event.t, last });
            }
        }
        if event.key != KeyId::Timeout {
            match event.edge {
                Edge::Down if self.held.contains(&event.key) => {
                    return Err(StreamError::AlreadyDown {
                        key: event.key,
                        t: event.t,
                    });
                }
                Edge::Down => {
                    self.held.insert(event.key);
                }
                Edge::Up => {
                    self.held.remove(&event.key);
                }
            }
        }
        self.last_t = Some(event.t);
        let (next, action) = step(self.state, event, &self.config);
        self.state = next;
        Ok(action)
    }

    pub fn is_held(&self, key: KeyId) -> bool {
        self.held.contains(&key)
    }

    pub fn held_modifiers(&self) -> impl Iterator<Item = Modifier> + '_ {
        self.held.iter().filter_map(|k| k.modifier())
    }
}

/// Folds `events` through a fresh engine, dropping `Noop`s.
pub fn replay(events: &[KeyEvent], config: &PadConfig) -> Result<Vec<TimedAction>, StreamError> {
    let mut engine = PadEngine::new(*config);
    let mut out = Vec::new();
    for (index, &event) in events.iter().enumerate() {
        let action = engine.apply(event).map_err(|e| StreamError::AtEvent {
            index,
            source: Box::new(e),
        })?;
        if action != PadAction::Noop {
            out.push(TimedAction { t: event.t, action });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use KeyId::*;

    fn cfg() -> PadConfig {
        PadConfig::default()
    }

    fn actions(events: &[KeyEvent]) -> Vec<PadAction> {
        replay(events, &cfg())
            .unwrap()
            .into_iter()
            .map(|a| a.action)
            .collect()
    }

    #[test]
    fn chord_enters_preview() {
        let s = PadState::Idle;
        let (s, a1) = step(s, KeyEvent::down(ModA, 0), &cfg());
        let (s, a2) = step(s, KeyEvent::down(ModB, 50), &cfg());
        assert_eq!(s, PadState::Preview { index: 1 });
        assert_eq!(a1, PadAction::Noop);
        assert_eq!(a2, PadAction::EnterPreview { index: 1 });
    }

    #[test]
    fn cycle_wraps() {
        let (s, a) = step(
            PadState::Preview { index: 1 },
            KeyEvent::down(CycleKey, 10),
            &cfg(),
        );
        assert_eq!(
            (s, a),
            (
                PadState::Preview { index: 2 },
                PadAction::Cycle { new_index: 2 }
            )
        );
        let (s, a) = step(
            PadState::Preview { index: 6 },
            KeyEvent::down(CycleKey, 10),
            &cfg(),
        );
        assert_eq!(
            (s, a),
            (
                PadState::Preview { index: 1 },
                PadAction::Cycle { new_index: 1 }
            )
        );
    }

    #[test]
    fn release_gap_decides() {
        let accept = [
            KeyEvent::down(ModA, 0),
            KeyEvent::down(ModB, 50),
            KeyEvent::down(CycleKey, 300),
            KeyEvent::up(CycleKey, 350),
            KeyEvent::up(ModA, 1000),
            KeyEvent::up(ModB, 1100),
        ];
        assert_eq!(
            actions(&accept),
            vec![
                PadAction::EnterPreview { index: 1 },
                PadAction::Cycle { new_index: 2 },
                PadAction::Accept { index: 2 }
            ]
        );
        let mut discard = accept;
        discard[5].t = 1300;
        assert_eq!(actions(&discard)[2], PadAction::Discard);
    }

    #[test]
    fn boundary_sweep() {
        for (delta, expect) in [
            (169, PadAction::Accept { index: 3 }),
            (170, PadAction::Accept { index: 3 }),
            (171, PadAction::Discard),
        ] {
            let s = PadState::Preview { index: 3 };
            let (s, _) = step(s, KeyEvent::up(ModA, 1000), &cfg());
            let (s, a) = step(s, KeyEvent::up(ModB, 1000 + delta), &cfg());
            assert_eq!(s, PadState::Idle);
            assert_eq!(a, expect, "delta {delta}");
        }
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(classify_release(0, 170), ReleaseKind::Simultaneous);
        assert_eq!(classify_release(170, 170), ReleaseKind::Simultaneous);
        assert_eq!(classify_release(171, 170), ReleaseKind::Sequential);
    }

    #[test]
    fn timeout_discards_then_release_is_silent() {
        let events = [
            KeyEvent::down(ModB, 0),
            KeyEvent::down(ModA, 20),
            KeyEvent::up(ModB, 500),
            KeyEvent::down(Timeout, 600),
            KeyEvent::down(Timeout, 670),
            KeyEvent::up(ModA, 2000),
        ];
        assert_eq!(
            actions(&events),
            vec![PadAction::EnterPreview { index: 1 }, PadAction::Discard]
        );
    }

    #[test]
    fn deadline_only_while_pending() {
        let pending = PadState::ReleasePending {
            index: 1,
            first_release_t: 400,
            remaining: Modifier::A,
        };
        assert_eq!(next_deadline(&pending, &cfg()), Some(570));
        assert_eq!(next_deadline(&PadState::Preview { index: 1 }, &cfg()), None);
        let quiet = PadConfig {
            emit_discard_on_timeout: false,
            ..cfg()
        };
        assert_eq!(next_deadline(&pending, &quiet), None);
        let (s, a) = step(pending, KeyEvent::down(Timeout, 900), &quiet);
        assert_eq!((s, a), (pending, PadAction::Noop));
    }

    #[test]
    fn repress_restores_preview() {
        let events = [
            KeyEvent::down(ModA, 0),
            KeyEvent::down(ModB, 10),
            KeyEvent::down(CycleKey, 100),
            KeyEvent::up(ModA, 200),
            KeyEvent::down(ModA, 260),
            KeyEvent::up(ModA, 900),
            KeyEvent::up(ModB, 950),
        ];
        assert_eq!(
            actions(&events),
            vec![
                PadAction::EnterPreview { index: 1 },
                PadAction::Cycle { new_index: 2 },
                PadAction::Accept { index: 2 }
            ]
        );
    }

    #[test]
    fn single_modifier_is_inert() {
        let events = [
            KeyEvent::down(ModA, 0),
            KeyEvent::down(CycleKey, 10),
            KeyEvent::up(CycleKey, 20),
            KeyEvent::up(ModA, 30),
            KeyEvent::down(ModB, 40),
            KeyEvent::up(ModB, 50),
        ];
        assert!(actions(&events).is_empty());
    }

    #[test]
    fn stream_errors_leave_state() {
        let mut engine = PadEngine::new(cfg());
        engine.apply(KeyEvent::down(ModA, 100)).unwrap();
        let before = engine.state();
        assert_eq!(
            engine.apply(KeyEvent::down(ModB, 50)),
            Err(StreamError::NonMonotonic { t: 50, last: 100 })
        );
        assert_eq!(
            engine.apply(KeyEvent::down(ModA, 120)),
            Err(StreamError::AlreadyDown { key: ModA, t: 120 })
        );
        assert_eq!(engine.state(), before);
        assert_eq!(
            engine.apply(KeyEvent::down(ModB, 120)),
            Ok(PadAction::EnterPreview { index: 1 })
        );
    }

    #[test]
    fn replay_reports_index() {
        let events = [KeyEvent::down(ModA, 10), KeyEvent::down(Other(65), 5)];
        let err = replay(&events, &cfg()).unwrap_err();
        assert_eq!(err.index(), Some(1));
    }

    #[test]
    fn empty_stream() {
        assert!(replay(&[], &cfg()).unwrap().is_empty());
    }
}
