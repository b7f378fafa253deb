//! Shipped event traces must replay to their frozen action sequences.

use std::fs;
use std::path::PathBuf;

use padbench_core::pad::{format_actions, parse_event_log, replay, PadConfig};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../testdata/golden")
}

#[test]
fn every_trace_matches_its_expected_actions() {
    let mut checked = 0;
    let mut entries: Vec<_> = fs::read_dir(golden_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "events"))
        .collect();
    entries.sort();
    for path in entries {
        let events = parse_event_log(&fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let expected = fs::read_to_string(path.with_extension("expected")).unwrap();
        let got = format_actions(&replay(&events, &PadConfig::default()).unwrap());
        assert_eq!(got, expected.trim_end(), "{}", path.display());
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} traces found");
}

#[test]
fn accept_basic_is_the_reference_chord() {
    let text = fs::read_to_string(golden_dir().join("accept_basic.events")).unwrap();
    let actions = replay(&parse_event_log(&text).unwrap(), &PadConfig::default()).unwrap();
    assert_eq!(format_actions(&actions), "EnterPreview@50\nAccept{1}@1100");
}
