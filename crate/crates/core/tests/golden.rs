//! Byte-level pins for rendered artifacts.
//!
//! Set `NNCS_BLESS=1` to rewrite the golden files after an intentional
//! rendering change.

mod common;

use common::{golden_path, pinned_grid};
use nncs_core::expharness::render_heatmap;

#[test]
fn heatmap_matches_golden_file() {
    let svg = render_heatmap(&pinned_grid()).unwrap();
    let path = golden_path();
    if std::env::var_os("NNCS_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &svg).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file present");
    assert_eq!(svg, golden);
}

#[test]
fn pinned_grid_has_an_empty_bin() {
    let g = pinned_grid();
    assert_eq!(g.fraction(1, 1), None);
    assert_eq!(g.fraction(2, 2), Some(1.0));
    assert_eq!(g.total(), 2 + 2 + 2 + 3 + 3 + 1 + 4 + 3);
}
