use super::ssm::SquareMatrix;

fn pixel(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0 + 0.5).floor() as u8
}

/// Binary PGM (P5, maxval 255); row 0 at the top.
pub fn render_pgm(m: &SquareMatrix) -> Vec<u8> {
    let n = m.n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(m.data().iter().map(|&v| pixel(v)));
    out
}

const PANEL_GAP: usize = 4;

/// Panels side by side, separated by white gutters. Panels may differ in
/// size; shorter ones are top-aligned on a black background.
pub fn render_panels(panels: &[&SquareMatrix]) -> Vec<u8> {
    let height = panels.iter().map(|p| p.n()).max().unwrap_or(0);
    let width = panels.iter().map(|p| p.n()).sum::<usize>() + PANEL_GAP * panels.len().saturating_sub(1);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in 0..height {
        for (k, p) in panels.iter().enumerate() {
            if k > 0 {
                out.extend(std::iter::repeat_n(255u8, PANEL_GAP));
            }
            if row < p.n() {
                out.extend(p.row(row).iter().map(|&v| pixel(v)));
            } else {
                out.extend(std::iter::repeat_n(0u8, p.n()));
            }
        }
    }
    out
}
