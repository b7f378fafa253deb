//! Synthetic users for the ISO 9241-9 comparison.
//!
//! The decision-plus-pointing decomposition in [`sim`] is a model fitted to
//! published summary statistics, not a claim about human cognition.

mod calibrate;
mod params;
mod sim;

pub use calibrate::{
    calibrate, evaluate_condition, CalibrationError, CalibrationResult, CalibrationTargets,
    ConditionMetrics, ConditionTarget, EvalSpec, Residual, Robustness, SearchSpace, TpGap,
    CALIBRATION_VERSION, DEFAULT_SEARCH, REFERENCE_TARGETS,
};
pub use params::{
    DecisionParams, MotorParams, ParamsError, SimParams, DEFAULT_PARAMS, PARAMS_VERSION,
    PARAM_NAMES,
};
pub use sim::{
    learning_multiplier, simulate_block, simulate_pad_trial, simulate_run, simulate_trackpad_trial,
    simulate_trial, trial_seed, BlockSpec, RunOptions, SimCondition, TrialGeometry,
    DEFAULT_LEARNING,
};
