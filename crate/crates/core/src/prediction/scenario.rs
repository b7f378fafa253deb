//! Scripted multi-screen scenarios (e.g. the email reply-and-send mockup).

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub const SCENARIO_VERSION: u32 = 1;
pub const TERMINAL: &str = "END";

/// The shipped two-screen email mockup.
pub const EMAIL_MOCKUP: &str = include_str!("../../data/email_mockup.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub id: String,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Target {
    pub fn center(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Screen {
    pub name: String,
    pub max_candidates: u32,
    /// Pointer position when the screen appears.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cursor: Option<Point>,
    pub targets: Vec<Target>,
    #[serde(default)]
    pub transitions: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scripted_ranking: Option<Vec<String>>,
}

impl Screen {
    pub fn target(&self, id: &str) -> Option<&Target> {
        self.targets.iter().find(|t| t.id == id)
    }

    pub fn cursor(&self) -> Point {
        self.cursor.unwrap_or(Point::new(0.0, 0.0))
    }

    /// Next screen name, `None` when the target ends the scenario or has no
    /// transition.
    pub fn next_screen(&self, target_id: &str) -> Option<&str> {
        self.transitions
            .get(target_id)
            .map(String::as_str)
            .filter(|s| *s != TERMINAL)
    }

    pub fn is_terminal(&self, target_id: &str) -> bool {
        self.transitions.get(target_id).map(String::as_str) == Some(TERMINAL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub start: String,
    pub screens: Vec<Screen>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

impl Scenario {
    pub fn email_mockup() -> Self {
        load_scenario(EMAIL_MOCKUP).expect("shipped email mockup is valid")
    }

    pub fn screen(&self, name: &str) -> Option<&Screen> {
        self.screens.iter().find(|s| s.name == name)
    }

    pub fn start_screen(&self) -> &Screen {
        self.screen(&self.start).expect("validated start screen")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.version != SCENARIO_VERSION {
            return Err(invalid(
                "version",
                format!(
                    "unsupported version {}, expected {SCENARIO_VERSION}",
                    self.version
                ),
            ));
        }
        if self.screens.is_empty() {
            return Err(invalid("screens", "at least one screen is required"));
        }

        let mut names = HashSet::new();
        for (i, screen) in self.screens.iter().enumerate() {
            if !names.insert(screen.name.as_str()) {
                return Err(invalid(
                    format!("screens[{i}].name"),
                    format!("duplicate screen name `{}`", screen.name),
                ));
            }
        }
        if !names.contains(self.start.as_str()) {
            return Err(invalid(
                "start",
                format!("start screen `{}` does not exist", self.start),
            ));
        }

        for (i, screen) in self.screens.iter().enumerate() {
            let at = format!("screens[{i}]");
            if screen.targets.is_empty() {
                return Err(invalid(format!("{at}.targets"), "screen has no targets"));
            }
            let mut ids = HashSet::new();
            for (j, t) in screen.targets.iter().enumerate() {
                if !ids.insert(t.id.as_str()) {
                    return Err(invalid(
                        format!("{at}.targets[{j}].id"),
                        format!("duplicate target id `{}`", t.id),
                    ));
                }
                if !(t.w > 0.0 && t.h > 0.0) {
                    return Err(invalid(
                        format!("{at}.targets[{j}]"),
                        "width and height must be positive",
                    ));
                }
            }
            if screen.max_candidates == 0 || screen.max_candidates as usize > screen.targets.len() {
                return Err(invalid(
                    format!("{at}.max_candidates"),
                    format!(
                        "must be between 1 and the target count ({})",
                        screen.targets.len()
                    ),
                ));
            }
            for (source, dest) in &screen.transitions {
                if !ids.contains(source.as_str()) {
                    return Err(invalid(
                        format!("{at}.transitions.{source}"),
                        format!("unknown target `{source}`"),
                    ));
                }
                if dest != TERMINAL && !names.contains(dest.as_str()) {
                    return Err(invalid(
                        format!("{at}.transitions.{source}"),
                        format!("unknown screen `{dest}`"),
                    ));
                }
            }
            if let Some(ranking) = &screen.scripted_ranking {
                let mut seen = HashSet::new();
                for (k, id) in ranking.iter().enumerate() {
                    if !ids.contains(id.as_str()) {
                        return Err(invalid(
                            format!("{at}.scripted_ranking[{k}]"),
                            format!("unknown target `{id}`"),
                        ));
                    }
                    if !seen.insert(id.as_str()) {
                        return Err(invalid(
                            format!("{at}.scripted_ranking[{k}]"),
                            format!("target `{id}` listed twice"),
                        ));
                    }
                }
                if ranking.len() > screen.max_candidates as usize {
                    return Err(invalid(
                        format!("{at}.scripted_ranking"),
                        "longer than max_candidates",
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario =
        serde_json::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mockup_json() -> serde_json::Value {
        serde_json::from_str(EMAIL_MOCKUP).unwrap()
    }

    fn load_value(v: &serde_json::Value) -> Result<Scenario, ScenarioError> {
        load_scenario(&v.to_string())
    }

    #[test]
    fn shipped_mockup_loads() {
        let s = Scenario::email_mockup();
        assert_eq!(s.screens.len(), 2);
        assert_eq!(s.start, "inbox");
        let inbox = s.screen("inbox").unwrap();
        let compose = s.screen("compose").unwrap();
        assert_eq!(inbox.max_candidates, 6);
        assert_eq!(compose.max_candidates, 2);
        assert_eq!(inbox.next_screen("reply"), Some("compose"));
        assert!(compose.is_terminal("send"));
    }

    #[test]
    fn empty_screens_rejected() {
        let mut v = mockup_json();
        v["screens"] = serde_json::json!([]);
        let err = load_value(&v).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref path, .. } if path == "screens"));
    }

    #[test]
    fn dangling_transition_names_screen() {
        let mut v = mockup_json();
        v["screens"][0]["transitions"]["reply"] = "drafts".into();
        let err = load_value(&v).unwrap_err().to_string();
        assert!(err.contains("drafts"), "{err}");
        assert!(err.contains("screens[0].transitions.reply"), "{err}");
    }

    #[test]
    fn duplicate_target_rejected() {
        let mut v = mockup_json();
        let first = v["screens"][0]["targets"][0].clone();
        v["screens"][0]["targets"]
            .as_array_mut()
            .unwrap()
            .push(first);
        let err = load_value(&v).unwrap_err().to_string();
        assert!(err.contains("duplicate target id"), "{err}");
    }

    #[test]
    fn scripted_ranking_must_reference_targets() {
        let mut v = mockup_json();
        v["screens"][1]["scripted_ranking"] = serde_json::json!(["send", "nope"]);
        let err = load_value(&v).unwrap_err().to_string();
        assert!(err.contains("scripted_ranking[1]"), "{err}");
    }

    #[test]
    fn unknown_fields_and_versions() {
        let mut v = mockup_json();
        v["version"] = 2.into();
        assert!(load_value(&v).unwrap_err().to_string().contains("version"));
        let mut v = mockup_json();
        v["colour"] = "blue".into();
        assert!(matches!(load_value(&v), Err(ScenarioError::Syntax(_))));
    }

    #[test]
    fn candidate_cap_bounded_by_targets() {
        let mut v = mockup_json();
        v["screens"][1]["max_candidates"] = 40.into();
        let err = load_value(&v).unwrap_err().to_string();
        assert!(err.contains("screens[1].max_candidates"), "{err}");
    }
}
