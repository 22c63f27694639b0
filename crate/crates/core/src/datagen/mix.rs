use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::align::{AlignCategory, Direction};
use super::DatagenError;

/// Splits `total` in proportion to `weights`, largest remainder first
/// (earlier entries win ties).
pub(crate) fn apportion(weights: &[u64], total: usize) -> Vec<usize> {
    let sum: u64 = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<(usize, u128)> = weights
        .iter()
        .map(|w| {
            let num = *w as u128 * total as u128;
            ((num / sum as u128) as usize, num % sum as u128)
        })
        .collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.0).collect();
    let mut left = total - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|a, b| exact[*b].1.cmp(&exact[*a].1).then(a.cmp(b)));
    for i in order {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Requested sample count per (category, direction).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, usize>", into = "BTreeMap<String, usize>")]
pub struct AlignmentMix {
    cells: BTreeMap<(AlignCategory, Direction), usize>,
}

const ALIGN_TABLE: [(AlignCategory, u64, u64); 4] = [
    (AlignCategory::ObjectUnderstanding, 137, 127),
    (AlignCategory::Affordance, 40, 24),
    (AlignCategory::SpatialRelationship, 40, 40),
    (AlignCategory::SpatialCompatibility, 40, 40),
];

impl AlignmentMix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, category: AlignCategory, direction: Direction, n: usize) -> Self {
        self.set(category, direction, n);
        self
    }

    pub fn set(&mut self, category: AlignCategory, direction: Direction, n: usize) {
        if n == 0 {
            self.cells.remove(&(category, direction));
        } else {
            self.cells.insert((category, direction), n);
        }
    }

    pub fn get(&self, category: AlignCategory, direction: Direction) -> usize {
        self.cells.get(&(category, direction)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.cells.values().sum()
    }

    pub fn cells(&self) -> impl Iterator<Item = (AlignCategory, Direction, usize)> + '_ {
        self.cells.iter().map(|((c, d), n)| (*c, *d, *n))
    }

    /// Proportions of the reference alignment corpus (264k/64k/80k/80k with
    /// the understanding/generation split of each), scaled to `total`.
    pub fn reference_proportions(total: usize) -> Self {
        let weights: Vec<u64> = ALIGN_TABLE.iter().flat_map(|(_, u, g)| [*u, *g]).collect();
        let counts = apportion(&weights, total);
        let mut mix = Self::new();
        for (k, (cat, _, _)) in ALIGN_TABLE.iter().enumerate() {
            mix.set(*cat, Direction::Understanding, counts[2 * k]);
            mix.set(*cat, Direction::Generation, counts[2 * k + 1]);
        }
        mix
    }

    pub fn preset(name: &str, total: usize) -> Result<Self, DatagenError> {
        match name {
            "reference" => Ok(Self::reference_proportions(total)),
            "uniform" => {
                let counts = apportion(&[1; 8], total);
                let mut mix = Self::new();
                for (k, cat) in AlignCategory::ALL.iter().enumerate() {
                    mix.set(*cat, Direction::Understanding, counts[2 * k]);
                    mix.set(*cat, Direction::Generation, counts[2 * k + 1]);
                }
                Ok(mix)
            }
            other => Err(DatagenError::Mix(format!("unknown preset {other:?}"))),
        }
    }
}

/// Keys are `category/direction`, or a bare `category` whose count is split
/// evenly between the two directions (understanding takes the odd one).
impl TryFrom<BTreeMap<String, usize>> for AlignmentMix {
    type Error = DatagenError;

    fn try_from(spec: BTreeMap<String, usize>) -> Result<Self, Self::Error> {
        let mut mix = Self::new();
        for (key, n) in spec {
            let (cat, dir) = match key.split_once('/') {
                Some((c, d)) => (c, Some(d)),
                None => (key.as_str(), None),
            };
            let cat = AlignCategory::parse(cat).ok_or_else(|| DatagenError::Mix(format!("unknown category {cat:?}")))?;
            match dir {
                Some(d) => {
                    let d = Direction::parse(d).ok_or_else(|| DatagenError::Mix(format!("unknown direction {d:?}")))?;
                    let prev = mix.get(cat, d);
                    mix.set(cat, d, prev + n);
                }
                None => {
                    let u = mix.get(cat, Direction::Understanding);
                    let g = mix.get(cat, Direction::Generation);
                    mix.set(cat, Direction::Understanding, u + n.div_ceil(2));
                    mix.set(cat, Direction::Generation, g + n / 2);
                }
            }
        }
        Ok(mix)
    }
}

impl From<AlignmentMix> for BTreeMap<String, usize> {
    fn from(m: AlignmentMix) -> Self {
        m.cells
            .into_iter()
            .map(|((c, d), n)| (format!("{}/{}", c.as_str(), d.as_str()), n))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    Navigation,
    Manipulation,
}

impl TaskFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskFamily::Navigation => "navigation",
            TaskFamily::Manipulation => "manipulation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoTCell {
    pub family: TaskFamily,
    pub with_rationale: bool,
}

impl CoTCell {
    pub fn key(&self) -> String {
        let r = if self.with_rationale { "with_rationale" } else { "without_rationale" };
        format!("{}/{r}", self.family.as_str())
    }

    pub fn parse(key: &str) -> Option<Self> {
        let (f, r) = key.split_once('/')?;
        let family = match f {
            "navigation" => TaskFamily::Navigation,
            "manipulation" => TaskFamily::Manipulation,
            _ => return None,
        };
        let with_rationale = match r {
            "with_rationale" => true,
            "without_rationale" => false,
            _ => return None,
        };
        Some(Self { family, with_rationale })
    }
}

/// Requested rationale/action sample counts per task family.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, usize>", into = "BTreeMap<String, usize>")]
pub struct CoTMix {
    cells: BTreeMap<CoTCell, usize>,
}

impl CoTMix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, family: TaskFamily, with_rationale: bool, n: usize) -> Self {
        self.cells.insert(CoTCell { family, with_rationale }, n);
        self
    }

    pub fn get(&self, family: TaskFamily, with_rationale: bool) -> usize {
        self.cells.get(&CoTCell { family, with_rationale }).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.cells.values().sum()
    }

    /// Navigation 50k/15k and manipulation 260k/260k (without/with
    /// rationale), scaled to `total`.
    pub fn reference_proportions(total: usize) -> Self {
        let c = apportion(&[50, 15, 260, 260], total);
        Self::new()
            .with(TaskFamily::Navigation, false, c[0])
            .with(TaskFamily::Navigation, true, c[1])
            .with(TaskFamily::Manipulation, false, c[2])
            .with(TaskFamily::Manipulation, true, c[3])
    }
}

impl TryFrom<BTreeMap<String, usize>> for CoTMix {
    type Error = DatagenError;

    fn try_from(spec: BTreeMap<String, usize>) -> Result<Self, Self::Error> {
        let mut cells = BTreeMap::new();
        for (k, n) in spec {
            let cell = CoTCell::parse(&k).ok_or_else(|| DatagenError::Mix(format!("unknown cell {k:?}")))?;
            cells.insert(cell, n);
        }
        Ok(Self { cells })
    }
}

impl From<CoTMix> for BTreeMap<String, usize> {
    fn from(m: CoTMix) -> Self {
        m.cells.into_iter().map(|(c, n)| (c.key(), n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_sums_to_total() {
        for total in [0, 1, 7, 100, 488, 1001] {
            assert_eq!(apportion(&[137, 127, 40, 24, 40, 40, 40, 40], total).iter().sum::<usize>(), total);
        }
        assert_eq!(apportion(&[1, 1, 1], 4), vec![2, 1, 1]);
    }

    #[test]
    fn reference_mix_at_full_scale() {
        let m = AlignmentMix::reference_proportions(488);
        assert_eq!(m.get(AlignCategory::ObjectUnderstanding, Direction::Understanding), 137);
        assert_eq!(m.get(AlignCategory::Affordance, Direction::Generation), 24);
        assert_eq!(m.total(), 488);
        let c = CoTMix::reference_proportions(585);
        assert_eq!(c.get(TaskFamily::Navigation, true), 15);
        assert_eq!(c.get(TaskFamily::Manipulation, false), 260);
    }

    #[test]
    fn bare_category_splits() {
        let m: AlignmentMix =
            serde_json::from_str(r#"{"object_understanding": 5, "affordance/generation": 2}"#).unwrap();
        assert_eq!(m.get(AlignCategory::ObjectUnderstanding, Direction::Understanding), 3);
        assert_eq!(m.get(AlignCategory::ObjectUnderstanding, Direction::Generation), 2);
        assert_eq!(m.total(), 7);
        assert!(serde_json::from_str::<AlignmentMix>(r#"{"bogus": 1}"#).is_err());
    }
}
