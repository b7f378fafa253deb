use serde::{Deserialize, Serialize};

pub const PARAMS_VERSION: u32 = 1;

/// The shipped calibrated parameter file.
pub const DEFAULT_PARAMS: &str = include_str!("../../data/default_params.json");

/// Pointing-side parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorParams {
    /// Fitts intercept (ms).
    pub fitts_a: f64,
    /// Fitts slope (ms/bit).
    pub fitts_b: f64,
    /// Coefficient of variation of the multiplicative movement-time noise.
    pub mt_noise_cv: f64,
    pub miss_rate: f64,
    pub correction_penalty_ms: f64,
    /// Expected extra corrective segments per bit of difficulty.
    pub submovements_per_bit: f64,
    /// Residual distance-dependent verification cost in PAD trials (ms/bit).
    pub fitts_b_pad: f64,
}

/// Selection-side parameters for PAD trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionParams {
    /// Cue to chord press.
    pub react_ms: f64,
    /// Entry cost per bit of log2(N + 1) over the candidate count.
    pub hick_ms_per_bit: f64,
    /// Inspection time for each additional candidate.
    pub verify_ms_per_option: f64,
    pub cycle_press_ms: f64,
    pub release_gap_mu_ms: f64,
    pub release_gap_sigma_ms: f64,
    /// Chance of cycling past the correct suggestion once cycling is needed.
    pub overshoot_prob: f64,
    /// Coefficient of variation of the multiplicative trial-time noise.
    pub time_noise_cv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub version: u32,
    pub motor: MotorParams,
    pub decision: DecisionParams,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamsError {
    #[error("malformed parameter file: {0}")]
    Syntax(String),
    #[error("unsupported parameter file version {0}")]
    Version(u32),
    #[error("parameter `{name}` = {value}: {rule}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error("unknown parameter `{0}`")]
    Unknown(String),
}

/// Names accepted by [`SimParams::get`] / [`SimParams::set`].
pub const PARAM_NAMES: [&str; 15] = [
    "fitts_a",
    "fitts_b",
    "mt_noise_cv",
    "miss_rate",
    "correction_penalty_ms",
    "submovements_per_bit",
    "fitts_b_pad",
    "react_ms",
    "hick_ms_per_bit",
    "verify_ms_per_option",
    "cycle_press_ms",
    "release_gap_mu_ms",
    "release_gap_sigma_ms",
    "overshoot_prob",
    "time_noise_cv",
];

impl SimParams {
    pub fn shipped() -> Self {
        Self::from_json(DEFAULT_PARAMS).expect("shipped parameters are valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ParamsError> {
        let p: SimParams =
            serde_json::from_str(text).map_err(|e| ParamsError::Syntax(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.version != PARAMS_VERSION {
            return Err(ParamsError::Version(self.version));
        }
        for name in PARAM_NAMES {
            let v = self.get(name).expect("listed name");
            if !v.is_finite() || v < 0.0 {
                return Err(ParamsError::OutOfRange {
                    name,
                    value: v,
                    rule: "must be finite and non-negative",
                });
            }
        }
        let m = &self.motor;
        let d = &self.decision;
        let checks: [(&'static str, f64, bool, &'static str); 4] = [
            ("fitts_b", m.fitts_b, m.fitts_b > 0.0, "must be positive"),
            (
                "miss_rate",
                m.miss_rate,
                m.miss_rate < 1.0,
                "must be below 1",
            ),
            (
                "fitts_b_pad",
                m.fitts_b_pad,
                m.fitts_b_pad < m.fitts_b,
                "must be below fitts_b",
            ),
            (
                "overshoot_prob",
                d.overshoot_prob,
                d.overshoot_prob < 1.0,
                "must be below 1",
            ),
        ];
        for (name, value, ok, rule) in checks {
            if !ok {
                return Err(ParamsError::OutOfRange { name, value, rule });
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let (m, d) = (&self.motor, &self.decision);
        Some(match name {
            "fitts_a" => m.fitts_a,
            "fitts_b" => m.fitts_b,
            "mt_noise_cv" => m.mt_noise_cv,
            "miss_rate" => m.miss_rate,
            "correction_penalty_ms" => m.correction_penalty_ms,
            "submovements_per_bit" => m.submovements_per_bit,
            "fitts_b_pad" => m.fitts_b_pad,
            "react_ms" => d.react_ms,
            "hick_ms_per_bit" => d.hick_ms_per_bit,
            "verify_ms_per_option" => d.verify_ms_per_option,
            "cycle_press_ms" => d.cycle_press_ms,
            "release_gap_mu_ms" => d.release_gap_mu_ms,
            "release_gap_sigma_ms" => d.release_gap_sigma_ms,
            "overshoot_prob" => d.overshoot_prob,
            "time_noise_cv" => d.time_noise_cv,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamsError> {
        let (m, d) = (&mut self.motor, &mut self.decision);
        let slot = match name {
            "fitts_a" => &mut m.fitts_a,
            "fitts_b" => &mut m.fitts_b,
            "mt_noise_cv" => &mut m.mt_noise_cv,
            "miss_rate" => &mut m.miss_rate,
            "correction_penalty_ms" => &mut m.correction_penalty_ms,
            "submovements_per_bit" => &mut m.submovements_per_bit,
            "fitts_b_pad" => &mut m.fitts_b_pad,
            "react_ms" => &mut d.react_ms,
            "hick_ms_per_bit" => &mut d.hick_ms_per_bit,
            "verify_ms_per_option" => &mut d.verify_ms_per_option,
            "cycle_press_ms" => &mut d.cycle_press_ms,
            "release_gap_mu_ms" => &mut d.release_gap_mu_ms,
            "release_gap_sigma_ms" => &mut d.release_gap_sigma_ms,
            "overshoot_prob" => &mut d.overshoot_prob,
            "time_noise_cv" => &mut d.time_noise_cv,
            other => return Err(ParamsError::Unknown(other.to_string())),
        };
        *slot = value;
        Ok(())
    }

    /// Whether a parameter can change trackpad trials (otherwise it only
    /// affects PAD trials).
    pub fn affects_trackpad(name: &str) -> bool {
        matches!(
            name,
            "fitts_a"
                | "fitts_b"
                | "mt_noise_cv"
                | "miss_rate"
                | "correction_penalty_ms"
                | "submovements_per_bit"
        )
    }
}
