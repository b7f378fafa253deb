//! Preview-Accept-Discard chord grammar.
//!
//! Holding both modifiers previews the top-ranked target, each press of the
//! cycle key advances to the next candidate, and the gap between the two
//! modifier releases decides the outcome:
//!
//! ```text
//!          ModX down          other Mod down
//!  Idle ─────────────▶ Armed ───────────────▶ Preview{i} ◀──┐ CycleKey down
//!   ▲                    │                      │    └──────┘ i = (i mod N) + 1
//!   │     same Mod up    │                      │ Mod up
//!   ├────────────────────┘                      ▼
//!   │   remaining Mod up, Δ ≤ window      ReleasePending{i} ── released Mod down ─▶ Preview{i}
//!   ├───────────── Accept{i} ◀──────────────────┤
//!   │   remaining Mod up, Δ > window            │ Timeout, t ≥ deadline
//!   ├───────────── Discard ◀────────────────────┤
//!   │                                           ▼
//!   └──────────── remaining Mod up ────────  Expired (Discard already emitted)
//! ```
//!
//! [`step`] is the pure transition function. [`PadEngine`] wraps it with the
//! stream checks (monotonic time, no double key-down) and [`replay`] folds a
//! whole event stream.

mod event_log;
mod machine;

pub use event_log::{format_actions, parse_event_log, write_event_log, EventLogError};
pub use machine::{
    classify_release, next_deadline, replay, step, PadEngine, ReleaseKind, StreamError, TimedAction,
};

use serde::{Deserialize, Serialize};

/// Milliseconds on the event clock.
pub type Millis = u64;

/// The two chord modifiers (Z/X or Q/W on a real keyboard).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modifier {
    A,
    B,
}

impl Modifier {
    pub fn other(self) -> Modifier {
        match self {
            Modifier::A => Modifier::B,
            Modifier::B => Modifier::A,
        }
    }

    pub fn key(self) -> KeyId {
        match self {
            Modifier::A => KeyId::ModA,
            Modifier::B => KeyId::ModB,
        }
    }
}

/// Semantic role of a key. Physical key codes are mapped by the host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeyId {
    ModA,
    ModB,
    CycleKey,
    /// Synthetic key injected by a scheduler once [`next_deadline`] passes.
    Timeout,
    Other(u32),
}

impl KeyId {
    pub fn modifier(self) -> Option<Modifier> {
        match self {
            KeyId::ModA => Some(Modifier::A),
            KeyId::ModB => Some(Modifier::B),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KeyEvent {
    pub key: KeyId,
    pub edge: Edge,
    pub t: Millis,
}

impl KeyEvent {
    pub fn down(key: KeyId, t: Millis) -> Self {
        KeyEvent {
            key,
            edge: Edge::Down,
            t,
        }
    }

    pub fn up(key: KeyId, t: Millis) -> Self {
        KeyEvent {
            key,
            edge: Edge::Up,
            t,
        }
    }
}

/// Parameters of the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadConfig {
    /// Largest modifier release gap still read as simultaneous.
    pub release_window_ms: Millis,
    /// Number of ranked candidates the cycle key walks through.
    pub max_candidates: u32,
    pub emit_discard_on_timeout: bool,
}

pub const DEFAULT_RELEASE_WINDOW_MS: Millis = 170;
pub const DEFAULT_MAX_CANDIDATES: u32 = 6;

impl Default for PadConfig {
    fn default() -> Self {
        PadConfig {
            release_window_ms: DEFAULT_RELEASE_WINDOW_MS,
            max_candidates: DEFAULT_MAX_CANDIDATES,
            emit_discard_on_timeout: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("release window must be positive")]
    ZeroWindow,
    #[error("max_candidates must be at least 1")]
    NoCandidates,
}

impl PadConfig {
    pub fn new(release_window_ms: Millis, max_candidates: u32) -> Result<Self, ConfigError> {
        let config = PadConfig {
            release_window_ms,
            max_candidates,
            ..PadConfig::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.release_window_ms == 0 {
            return Err(ConfigError::ZeroWindow);
        }
        if self.max_candidates == 0 {
            return Err(ConfigError::NoCandidates);
        }
        Ok(())
    }
}

/// Position in the grammar. Candidate indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum PadState {
    #[default]
    Idle,
    Armed {
        which: Modifier,
        t_down: Millis,
    },
    Preview {
        index: u32,
    },
    ReleasePending {
        index: u32,
        first_release_t: Millis,
        remaining: Modifier,
    },
    Expired {
        remaining: Modifier,
    },
}

impl PadState {
    pub fn in_pad_mode(&self) -> bool {
        matches!(
            self,
            PadState::Preview { .. } | PadState::ReleasePending { .. }
        )
    }
}

/// Semantic output of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PadAction {
    EnterPreview { index: u32 },
    Cycle { new_index: u32 },
    Accept { index: u32 },
    Discard,
    Noop,
}

impl std::fmt::Display for PadAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PadAction::EnterPreview { .. } => write!(f, "EnterPreview"),
            PadAction::Cycle { new_index } => write!(f, "Cycle{{{new_index}}}"),
            PadAction::Accept { index } => write!(f, "Accept{{{index}}}"),
            PadAction::Discard => write!(f, "Discard"),
            PadAction::Noop => write!(f, "Noop"),
        }
    }
}
