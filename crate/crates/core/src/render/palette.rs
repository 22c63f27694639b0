use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub const PALETTE_JSON: &str = include_str!("../../assets/palette.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub version: u32,
    pub table: [u8; 3],
    pub floor: [u8; 3],
    pub wall: [u8; 3],
    pub background: [u8; 3],
    pub colors: Vec<[u8; 3]>,
    /// Fixed slot per known category.
    pub categories: BTreeMap<String, usize>,
}

impl Palette {
    pub fn builtin() -> &'static Palette {
        static P: OnceLock<Palette> = OnceLock::new();
        P.get_or_init(|| serde_json::from_str(PALETTE_JSON).expect("bundled palette parses"))
    }

    pub fn slot_of(&self, category: &str) -> usize {
        match self.categories.get(category) {
            Some(&s) if s < self.colors.len() => s,
            _ => {
                let mut h: u64 = 0xcbf2_9ce4_8422_2325;
                for b in category.bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
                (h % self.colors.len() as u64) as usize
            }
        }
    }

    pub fn color_of(&self, category: &str) -> [u8; 3] {
        self.colors[self.slot_of(category)]
    }
}
