#![allow(dead_code)]

pub mod properties;

use std::sync::OnceLock;

use prolab::gamut::{build_d65_gamut, GamutHull};

/// D65 hull at the resolution used by the comparison table.
pub fn hull() -> &'static GamutHull {
    static CELL: OnceLock<GamutHull> = OnceLock::new();
    CELL.get_or_init(|| build_d65_gamut(100).expect("bundled data builds a hull"))
}

/// Smaller hull for property suites.
pub fn small_hull() -> &'static GamutHull {
    static CELL: OnceLock<GamutHull> = OnceLock::new();
    CELL.get_or_init(|| build_d65_gamut(32).expect("bundled data builds a hull"))
}
