use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{find_points, Action, PointError, RotateDir, TaskKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseFailure {
    #[error("no action found")]
    NoAction,
    #[error("coordinate out of range: ({x}, {y})")]
    OutOfRange { x: f64, y: f64 },
    #[error("move needs a pick and a place point, found {found}")]
    IncompleteMove { found: usize },
}

fn rotate_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:turn|rotate)\s+(?:to\s+the\s+)?(left|right)\b").expect("rotate regex"))
}

fn done_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:i\s+have\s+finished|i\s+am\s+done|finished|done|task\s+(?:is\s+)?complete(?:d)?|stop)\b")
            .expect("done regex")
    })
}

fn action_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\baction\s*:").expect("action marker"))
}

fn thought_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*thought\s*:").expect("thought marker"))
}

/// Splits `Thought: ... Action: ...` into its rationale and action text.
/// Without an `Action:` marker the whole text is the action.
fn split_markers(raw: &str) -> (Option<String>, &str) {
    let Some(m) = action_marker().find_iter(raw).last() else {
        return (None, raw);
    };
    let before = &raw[..m.start()];
    let before = match thought_marker().find(before) {
        Some(t) => &before[t.end()..],
        None => before,
    };
    let rationale = before.trim();
    let rationale = (!rationale.is_empty()).then(|| rationale.to_string());
    (rationale, &raw[m.end()..])
}

/// Reads a planner reply in either the bare-action or the
/// `Thought:`/`Action:` form.
///
/// Navigation: the first point is a subgoal, otherwise "turn left/right" is
/// a rotation. Manipulation: the first two points are pick and place,
/// otherwise a finishing phrase is `Done`.
pub fn parse_response(raw: &str, kind: TaskKind) -> Result<ParsedResponse, ParseFailure> {
    let (rationale, action_text) = split_markers(raw);
    let points = find_points(action_text);
    let range_err = |e: &PointError| match e {
        PointError::Range { x, y } => ParseFailure::OutOfRange { x: *x, y: *y },
        PointError::Parse(_) => ParseFailure::NoAction,
    };
    let action = match kind {
        TaskKind::Nav => match points.first() {
            Some(m) => Action::Subgoal { point: m.point.as_ref().map_err(range_err)?.to_owned() },
            None => {
                let c = rotate_regex().captures(action_text).ok_or(ParseFailure::NoAction)?;
                let direction = if c[1].eq_ignore_ascii_case("left") { RotateDir::Left } else { RotateDir::Right };
                Action::Rotate { direction }
            }
        },
        TaskKind::Manip => match points.len() {
            0 if done_regex().is_match(action_text) => Action::Done,
            0 => return Err(ParseFailure::NoAction),
            1 => return Err(ParseFailure::IncompleteMove { found: 1 }),
            _ => {
                let pick = *points[0].point.as_ref().map_err(range_err)?;
                let place = *points[1].point.as_ref().map_err(range_err)?;
                Action::Move { pick, place }
            }
        },
    };
    Ok(ParsedResponse { rationale, action })
}
