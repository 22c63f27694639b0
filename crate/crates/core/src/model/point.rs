//! Normalized image coordinates and their canonical `(x, y)` text form.

use std::fmt;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when snapping to the two-decimal lattice, so that decimal
/// literals such as `0.305` round the way their decimal spelling says.
const LATTICE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointError {
    #[error("no (x, y) point found in {0:?}")]
    Parse(String),
    #[error("coordinate out of range [0, 1]: ({x}, {y})")]
    Range { x: f64, y: f64 },
}

/// A point in image space: `x` rightward and `y` downward, both as fractions
/// of the image extent, origin at the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct NormPoint {
    x: f64,
    y: f64,
}

impl NormPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, PointError> {
        if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) {
            Ok(Self { x, y })
        } else {
            Err(PointError::Range { x, y })
        }
    }

    /// Builds a point, clamping each coordinate into the unit square.
    pub fn clamped(x: f64, y: f64) -> Self {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        Self { x: c(x), y: c(y) }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// The point as it reads after serialization: both coordinates rounded
    /// half-up to two decimals.
    pub fn quantized(self) -> Self {
        Self {
            x: round_half_up_2(self.x),
            y: round_half_up_2(self.y),
        }
    }

    pub fn is_quantized(&self) -> bool {
        *self == self.quantized()
    }

    pub fn distance(&self, other: &NormPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl TryFrom<[f64; 2]> for NormPoint {
    type Error = PointError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        NormPoint::new(v[0], v[1])
    }
}

impl From<NormPoint> for [f64; 2] {
    fn from(p: NormPoint) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for NormPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = self.quantized();
        write!(f, "({:.2}, {:.2})", q.x, q.y)
    }
}

/// Half-up rounding to two decimals for values in `[0, 1]`.
pub fn round_half_up_2(v: f64) -> f64 {
    ((v * 100.0) + 0.5 + LATTICE_EPS).floor() / 100.0
}

/// Index of the two-decimal lattice value `v` lies on or just after.
pub(crate) fn lattice_floor(v: f64) -> i64 {
    (v * 100.0 + LATTICE_EPS).floor() as i64
}

pub fn format_point(p: &NormPoint) -> String {
    p.to_string()
}

fn point_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\(\s*(-?\d+\.\d{1,3})\s*,\s*(-?\d+\.\d{1,3})\s*\)").expect("point regex")
    })
}

/// A point-shaped substring found in free text.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMatch {
    pub span: Range<usize>,
    pub text: String,
    pub point: Result<NormPoint, PointError>,
}

/// All non-overlapping `(x, y)` substrings of `s`, left to right.
pub fn find_points(s: &str) -> Vec<PointMatch> {
    point_regex()
        .captures_iter(s)
        .map(|c| {
            let m = c.get(0).expect("whole match");
            let x: f64 = c[1].parse().unwrap_or(f64::NAN);
            let y: f64 = c[2].parse().unwrap_or(f64::NAN);
            PointMatch {
                span: m.range(),
                text: m.as_str().to_string(),
                point: NormPoint::new(x, y),
            }
        })
        .collect()
}

/// Extracts the first `(x, y)` pattern in `s`. Nothing is clamped: a first
/// match with a coordinate outside `[0, 1]` is a range error.
pub fn parse_point(s: &str) -> Result<NormPoint, PointError> {
    find_points(s)
        .into_iter()
        .next()
        .map(|m| m.point)
        .unwrap_or_else(|| Err(PointError::Parse(s.to_string())))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference half-up rounding working on the decimal spelling of `v`.
    fn decimal_half_up(v: f64) -> String {
        let s = format!("{v}");
        let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
        let digits: Vec<u32> = frac.chars().map(|c| c.to_digit(10).unwrap()).collect();
        let mut cents = int.parse::<u32>().unwrap() * 100
            + digits.first().copied().unwrap_or(0) * 10
            + digits.get(1).copied().unwrap_or(0);
        if digits.get(2).copied().unwrap_or(0) >= 5 {
            cents += 1;
        }
        format!("{}.{:02}", cents / 100, cents % 100)
    }

    #[test]
    fn formats_appendix_point() {
        let p = NormPoint::new(0.06, 0.78).unwrap();
        assert_eq!(format_point(&p), "(0.06, 0.78)");
    }

    #[test]
    fn formats_boundaries() {
        assert_eq!(format_point(&NormPoint::new(0.0, 1.0).unwrap()), "(0.00, 1.00)");
    }

    #[test]
    fn half_up_matches_decimal_reference() {
        let p = NormPoint::new(0.305, 0.824999).unwrap();
        let expected = format!("({}, {})", decimal_half_up(0.305), decimal_half_up(0.824999));
        assert_eq!(expected, "(0.31, 0.82)");
        assert_eq!(format_point(&p), expected);
        for i in 0..=1000 {
            let v = i as f64 / 1000.0;
            let q = NormPoint::new(v, v).unwrap();
            assert_eq!(
                format_point(&q),
                format!("({}, {})", decimal_half_up(v), decimal_half_up(v)),
                "v = {v}"
            );
        }
    }

    #[test]
    fn parses_navigation_response() {
        let p = parse_point("I should go to (0.30, 0.82) to find the dishwasher.").unwrap();
        assert_eq!((p.x(), p.y()), (0.30, 0.82));
        let c = parse_point("(1.00, 0.00)").unwrap();
        assert_eq!((c.x(), c.y()), (1.0, 0.0));
    }

    #[test]
    fn out_of_range_is_range_error() {
        assert!(matches!(parse_point("go to (1.20, 0.5)"), Err(PointError::Range { .. })));
        assert!(matches!(parse_point("(-0.10, 0.5)"), Err(PointError::Range { .. })));
    }

    #[test]
    fn missing_point_is_parse_error() {
        assert!(matches!(parse_point("go north"), Err(PointError::Parse(_))));
        assert!(matches!(parse_point("(0.1234, 0.5)"), Err(PointError::Parse(_))));
        assert!(matches!(parse_point("(1, 0)"), Err(PointError::Parse(_))));
    }

    #[test]
    fn serde_rejects_out_of_range() {
        assert!(serde_json::from_str::<NormPoint>("[0.5, 1.5]").is_err());
        let p: NormPoint = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), "[0.25,0.75]");
    }

    proptest::proptest! {
        #[test]
        fn format_parse_is_canonical(
            a in 0u32..=100, b in 0u32..=100,
            pre in "[a-z ]{0,12}", post in "[a-z .]{0,12}",
            sx in 0usize..3, sy in 0usize..3,
        ) {
            let pad = |n: usize| " ".repeat(n);
            let s = format!("{pre}({}{}.{:02},{}{}.{:02}{}){post}",
                pad(sx), a / 100, a % 100, pad(sy), b / 100, b % 100, pad(sx));
            let canonical = format!("({}.{:02}, {}.{:02})", a / 100, a % 100, b / 100, b % 100);
            let p = parse_point(&s).unwrap();
            proptest::prop_assert_eq!(format_point(&p), canonical.clone());
            proptest::prop_assert_eq!(format_point(&parse_point(&canonical).unwrap()), canonical);
        }

        #[test]
        fn parse_never_panics(s in "\\PC{0,40}") {
            let _ = parse_point(&s);
        }
    }
}
