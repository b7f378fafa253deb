use rand::Rng;
use serde::{Deserialize, Serialize};

/// Where the correct target landed in a suggestion list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rank {
    /// 1-based position.
    Hit(u32),
    Miss,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("profile has no ranks")]
    Empty,
    #[error("probability for rank {rank} is {value}, must be finite and non-negative")]
    BadEntry { rank: usize, value: f64 },
    #[error("probabilities sum to {0}, must not exceed 1")]
    MassExceedsOne(f64),
}

const MASS_TOLERANCE: f64 = 1e-9;

/// Probability that the correct target is ranked 1, 2, ... N.
/// Whatever mass is left over is the chance it is not suggested at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct AccuracyProfile {
    name: String,
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    name: String,
    p: Vec<f64>,
}

impl TryFrom<RawProfile> for AccuracyProfile {
    type Error = ProfileError;
    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        AccuracyProfile::new(raw.name, raw.p)
    }
}

impl From<AccuracyProfile> for RawProfile {
    fn from(p: AccuracyProfile) -> Self {
        RawProfile {
            name: p.name,
            p: p.p,
        }
    }
}

impl AccuracyProfile {
    pub fn new(name: impl Into<String>, p: Vec<f64>) -> Result<Self, ProfileError> {
        if p.is_empty() {
            return Err(ProfileError::Empty);
        }
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(ProfileError::BadEntry {
                    rank: i + 1,
                    value: v,
                });
            }
        }
        let total: f64 = p.iter().sum();
        if total > 1.0 + MASS_TOLERANCE {
            return Err(ProfileError::MassExceedsOne(total));
        }
        Ok(AccuracyProfile {
            name: name.into(),
            p,
        })
    }

    /// Spell-checker-like accuracy: 95% / 4% / 1%.
    pub fn ideal() -> Self {
        AccuracyProfile {
            name: "ideal".into(),
            p: vec![0.95, 0.04, 0.01],
        }
    }

    /// Top-3 always correct but the first suggestion only a third of the time.
    pub fn uniform3() -> Self {
        let third = 1.0 / 3.0;
        AccuracyProfile {
            name: "uniform3".into(),
            p: vec![third; 3],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ideal" => Some(Self::ideal()),
            "uniform3" => Some(Self::uniform3()),
            _ => None,
        }
    }

    pub const PRESET_NAMES: [&'static str; 2] = ["ideal", "uniform3"];

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn miss_mass(&self) -> f64 {
        (1.0 - self.p.iter().sum::<f64>()).max(0.0)
    }

    /// Mean rank conditional on a hit.
    pub fn expected_rank(&self) -> f64 {
        let hit: f64 = self.p.iter().sum();
        self.p
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum::<f64>()
            / hit
    }

    /// Inverse-CDF draw from one uniform variate.
    pub fn draw_rank<R: Rng + ?Sized>(&self, rng: &mut R) -> Rank {
        let u: f64 = rng.random();
        self.rank_for_quantile(u)
    }

    pub fn rank_for_quantile(&self, u: f64) -> Rank {
        let mut acc = 0.0;
        for (i, &p) in self.p.iter().enumerate() {
            acc += p;
            if u < acc {
                return Rank::Hit(i as u32 + 1);
            }
        }
        // Rounding can leave the cumulative sum a hair below 1 for a profile
        // that has no miss mass.
        if self.miss_mass() <= MASS_TOLERANCE {
            let last = self.p.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            Rank::Hit(last as u32 + 1)
        } else {
            Rank::Miss
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn construction_rejects_bad_mass() {
        assert!(matches!(
            AccuracyProfile::new("x", vec![0.6, 0.6]),
            Err(ProfileError::MassExceedsOne(_))
        ));
        assert!(matches!(
            AccuracyProfile::new("x", vec![0.5, -0.1]),
            Err(ProfileError::BadEntry { rank: 2, .. })
        ));
        assert_eq!(AccuracyProfile::new("x", vec![]), Err(ProfileError::Empty));
        assert!(AccuracyProfile::new("x", vec![0.5, 0.2]).is_ok());
    }

    #[test]
    fn degenerate_profile_always_first() {
        let p = AccuracyProfile::new("one", vec![1.0]).unwrap();
        let mut rng = seeded(1);
        assert!((0..1000).all(|_| p.draw_rank(&mut rng) == Rank::Hit(1)));
    }

    #[test]
    fn miss_mass_is_drawn() {
        let p = AccuracyProfile::new("half", vec![0.5]).unwrap();
        assert_eq!(p.rank_for_quantile(0.49), Rank::Hit(1));
        assert_eq!(p.rank_for_quantile(0.5), Rank::Miss);
        assert!((p.miss_mass() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_top_quantile_is_a_hit() {
        let p = AccuracyProfile::uniform3();
        assert_eq!(p.rank_for_quantile(1.0 - f64::EPSILON), Rank::Hit(3));
    }

    #[test]
    fn ideal_expected_rank() {
        assert!((AccuracyProfile::ideal().expected_rank() - 1.06).abs() < 1e-12);
        assert!((AccuracyProfile::uniform3().expected_rank() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"name":"x","p":[0.9,0.2]}"#;
        assert!(serde_json::from_str::<AccuracyProfile>(bad).is_err());
        let ok: AccuracyProfile = serde_json::from_str(r#"{"name":"x","p":[0.9,0.1]}"#).unwrap();
        assert_eq!(ok.len(), 2);
    }
}
