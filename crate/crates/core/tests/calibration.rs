use std::collections::BTreeMap;

use padbench_core::metrics::Device;
use padbench_core::prediction::AccuracyProfile;
use padbench_core::usersim::{
    calibrate, evaluate_condition, CalibrationTargets, ConditionTarget, EvalSpec, SearchSpace,
    SimCondition, SimParams,
};

/// The shipped parameter file is exactly what the shipped calibration
/// produces; nothing in it was tuned by hand.
#[test]
fn shipped_params_are_the_calibration_output() {
    let result = calibrate(&CalibrationTargets::reference(), &SearchSpace::shipped(), 2026).unwrap();
    assert!(result.within_tolerance, "{}", result.render_text());
    assert_eq!(result.params, SimParams::shipped());
    assert_eq!(
        result.params.to_json(),
        include_str!("../data/default_params.json")
    );
}

/// Targets generated by the simulator itself, at the calibration seed, must
/// lead the search back to the generating parameters.
#[test]
fn recovers_generating_parameters() {
    let seed = 11;
    let eval = EvalSpec {
        ids: vec![4.0, 6.0],
        trials_per_id: 300,
        width_px: 50.0,
        n_targets: 9,
    };
    let mut truth = SimParams::shipped();
    truth.set("fitts_b", 260.0).unwrap();
    truth.set("react_ms", 600.0).unwrap();
    truth.set("cycle_press_ms", 350.0).unwrap();

    let conditions = [
        (
            SimCondition::pad(AccuracyProfile::uniform3()),
            Some("uniform3"),
        ),
        (SimCondition::trackpad(), None),
    ];
    let targets = CalibrationTargets {
        version: 1,
        conditions: conditions
            .iter()
            .map(|(cond, profile)| {
                let m = evaluate_condition(cond, &truth, &eval, seed);
                ConditionTarget {
                    device: cond.device,
                    profile: profile.map(str::to_string),
                    mean_tp: m.mean_tp,
                    mean_strokes: m.mean_strokes,
                    error_rate: (cond.device == Device::Trackpad).then_some(m.error_rate),
                }
            })
            .collect(),
        tp_gap: None,
        robustness: None,
        tolerance: 0.01,
    };

    let mut base = SimParams::shipped();
    base.set("fitts_b", 200.0).unwrap();
    base.set("react_ms", 400.0).unwrap();
    base.set("cycle_press_ms", 200.0).unwrap();
    let grid: BTreeMap<String, Vec<f64>> = [
        ("fitts_b", vec![200.0, 230.0, 260.0, 290.0]),
        ("react_ms", vec![400.0, 500.0, 600.0, 700.0]),
        ("cycle_press_ms", vec![200.0, 275.0, 350.0, 425.0]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let search = SearchSpace {
        version: 1,
        base,
        grid,
        eval,
        max_sweeps: 12,
        restarts: 2,
    };

    let result = calibrate(&targets, &search, seed).unwrap();
    for name in ["fitts_b", "react_ms", "cycle_press_ms"] {
        assert_eq!(result.params.get(name), truth.get(name), "{name}");
    }
    assert!(result.objective < 1e-12, "objective {}", result.objective);
}
