use std::fmt::Write as _;

use super::{ExpError, PhaseGrid};

/// Canvas edge in pixels.
pub const CANVAS: u32 = 800;
/// Fill of bins without trials, under the hatch pattern.
pub const EMPTY_FILL: &str = "#d9d9d9";

const PLOT_X: f64 = 90.0;
const PLOT_Y: f64 = 80.0;
const PLOT_SIZE: f64 = 560.0;
const LEGEND_X: f64 = 690.0;
const LEGEND_W: f64 = 24.0;
const RAMP_LO: [u32; 3] = [247, 251, 255];
const RAMP_HI: [u32; 3] = [8, 48, 107];

/// Color of a success fraction on the 256-step ramp.
///
/// Step `k = round(255·f)`; each channel is `(lo·(255−k) + hi·k)/255`
/// rounded, from `#f7fbff` at 0 to `#08306b` at 1.
pub fn ramp_color(fraction: f64) -> String {
    let k = (fraction.clamp(0.0, 1.0) * 255.0).round() as u32;
    let c = |i: usize| (RAMP_LO[i] * (255 - k) + RAMP_HI[i] * k + 127) / 255;
    format!("#{:02x}{:02x}{:02x}", c(0), c(1), c(2))
}

/// Standalone SVG 1.1 heatmap of the success fractions; `δ` runs right and
/// `r` runs up.
pub fn render_heatmap(grid: &PhaseGrid) -> Result<String, ExpError> {
    if grid.total() == 0 {
        return Err(ExpError::Config("cannot render a grid without trials".into()));
    }
    let g = grid.g;
    let cell = PLOT_SIZE / g as f64;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(
        w,
        r##"<defs><pattern id="hatch" width="8" height="8" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="8" height="8" fill="{EMPTY_FILL}"/><line x1="0" y1="0" x2="0" y2="8" stroke="#969696" stroke-width="2"/></pattern></defs>"##
    );
    let _ = writeln!(w, r##"<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="#ffffff"/>"##);
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="45" font-family="sans-serif" font-size="20" text-anchor="middle">Recovery success fraction</text>"#,
        PLOT_X + PLOT_SIZE / 2.0
    );
    for j in 0..g {
        for i in 0..g {
            let x = PLOT_X + i as f64 * cell;
            let y = PLOT_Y + (g - 1 - j) as f64 * cell;
            let fill = grid.fraction(i, j).map_or_else(|| "url(#hatch)".to_string(), ramp_color);
            let _ = writeln!(w, r#"<rect x="{x:.3}" y="{y:.3}" width="{cell:.3}" height="{cell:.3}" fill="{fill}"/>"#);
        }
    }
    let _ = writeln!(
        w,
        r##"<rect x="{PLOT_X:.1}" y="{PLOT_Y:.1}" width="{PLOT_SIZE:.1}" height="{PLOT_SIZE:.1}" fill="none" stroke="#000000" stroke-width="1"/>"##
    );
    let bottom = PLOT_Y + PLOT_SIZE;
    for (t, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let x = PLOT_X + t * PLOT_SIZE;
        let y = bottom - t * PLOT_SIZE;
        let _ = writeln!(
            w,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="middle">{label}</text>"#,
            bottom + 22.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="14" text-anchor="end">{label}</text>"#,
            PLOT_X - 8.0,
            y + 5.0
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="18" text-anchor="middle">δ = m/n</text>"#,
        PLOT_X + PLOT_SIZE / 2.0,
        bottom + 55.0
    );
    let _ = writeln!(
        w,
        r#"<text x="35" y="{0:.1}" font-family="sans-serif" font-size="18" text-anchor="middle" transform="rotate(-90 35 {0:.1})">r = s/m</text>"#,
        PLOT_Y + PLOT_SIZE / 2.0
    );
    // legend: step k occupies row 255 − k so that 1 is on top
    let step = PLOT_SIZE / 256.0;
    for k in 0..256u32 {
        let y = PLOT_Y + (255 - k) as f64 * step;
        let _ = writeln!(
            w,
            r#"<rect x="{LEGEND_X:.1}" y="{y:.4}" width="{LEGEND_W:.1}" height="{step:.4}" fill="{}"/>"#,
            ramp_color(k as f64 / 255.0)
        );
    }
    let lx = LEGEND_X + LEGEND_W + 6.0;
    let _ = writeln!(w, r#"<text x="{lx:.1}" y="{:.1}" font-family="sans-serif" font-size="14">1</text>"#, PLOT_Y + 10.0);
    let _ = writeln!(w, r#"<text x="{lx:.1}" y="{bottom:.1}" font-family="sans-serif" font-size="14">0</text>"#);
    let _ = writeln!(
        w,
        r##"<rect x="{LEGEND_X:.1}" y="{:.1}" width="{LEGEND_W:.1}" height="{LEGEND_W:.1}" fill="url(#hatch)" stroke="#000000" stroke-width="0.5"/>"##,
        bottom + 30.0
    );
    let _ = writeln!(
        w,
        r#"<text x="{lx:.1}" y="{:.1}" font-family="sans-serif" font-size="14">empty</text>"#,
        bottom + 47.0
    );
    let _ = writeln!(w, "</svg>");
    Ok(out)
}
