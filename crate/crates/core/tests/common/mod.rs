use std::path::PathBuf;

use nncs_core::expharness::PhaseGrid;

/// 3×3 grid with one empty bin and fractions 0, ½, 1 and thirds.
pub fn pinned_grid() -> PhaseGrid {
    let mut g = PhaseGrid::new(3);
    let centers = [1.0 / 6.0, 0.5, 5.0 / 6.0];
    let pattern: [[(usize, usize); 3]; 3] = [[(2, 0), (2, 1), (2, 2)], [(3, 1), (0, 0), (3, 2)], [(1, 1), (4, 4), (3, 3)]];
    for (j, row) in pattern.iter().enumerate() {
        for (i, &(count, succ)) in row.iter().enumerate() {
            for k in 0..count {
                g.add(centers[i], centers[j], k < succ);
            }
        }
    }
    g
}

pub fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/heatmap_3x3.svg")
}
