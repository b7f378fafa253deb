//! Simulated predictive layer.
//!
//! There is no learned model here: the rank of the correct target is drawn
//! from an [`AccuracyProfile`] and the other slots are filled with distinct
//! distractors, or a screen's scripted ranking is returned as is.

mod profile;
mod scenario;

pub use profile::{AccuracyProfile, ProfileError, Rank};
pub use scenario::{
    load_scenario, Point, Scenario, ScenarioError, Screen, Target, EMAIL_MOCKUP, SCENARIO_VERSION,
    TERMINAL,
};

use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSuggestions {
    pub targets: Vec<Target>,
    pub true_rank: Rank,
}

impl RankedSuggestions {
    /// Candidate shown at 1-based `index`.
    pub fn at(&self, index: u32) -> Option<&Target> {
        index
            .checked_sub(1)
            .and_then(|i| self.targets.get(i as usize))
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankError {
    #[error("target `{0}` is not on screen `{1}`")]
    UnknownTarget(String, String),
}

/// Builds the suggestion list for one selection on `screen`.
///
/// The list holds at most `min(profile length, screen.max_candidates)`
/// entries. A drawn rank beyond that cap counts as a miss.
pub fn rank_targets<R: Rng + ?Sized>(
    screen: &Screen,
    true_target: &str,
    profile: &AccuracyProfile,
    rng: &mut R,
) -> Result<RankedSuggestions, RankError> {
    let truth = screen
        .target(true_target)
        .ok_or_else(|| RankError::UnknownTarget(true_target.into(), screen.name.clone()))?;

    if let Some(script) = &screen.scripted_ranking {
        let targets: Vec<Target> = script
            .iter()
            .filter_map(|id| screen.target(id).cloned())
            .collect();
        let true_rank = targets
            .iter()
            .position(|t| t.id == truth.id)
            .map_or(Rank::Miss, |i| Rank::Hit(i as u32 + 1));
        return Ok(RankedSuggestions { targets, true_rank });
    }

    let n = profile.len().min(screen.max_candidates as usize);
    let rank = match profile.draw_rank(rng) {
        Rank::Hit(r) if r as usize <= n => Rank::Hit(r),
        _ => Rank::Miss,
    };

    let others: Vec<&Target> = screen.targets.iter().filter(|t| t.id != truth.id).collect();
    let n_fillers = match rank {
        Rank::Hit(_) => n - 1,
        Rank::Miss => n,
    }
    .min(others.len());
    let fillers = index::sample(rng, others.len(), n_fillers);

    let mut targets: Vec<Target> = fillers.iter().map(|i| others[i].clone()).collect();
    let true_rank = match rank {
        Rank::Hit(r) => {
            let pos = (r as usize - 1).min(targets.len());
            targets.insert(pos, truth.clone());
            Rank::Hit(pos as u32 + 1)
        }
        Rank::Miss => Rank::Miss,
    };
    Ok(RankedSuggestions { targets, true_rank })
}
