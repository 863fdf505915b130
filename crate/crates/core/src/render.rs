//! Plain-text netpbm export: P2 for two colors, P3 otherwise.

use std::fmt::Write as _;

use thiserror::Error;

use crate::lattice::LatticeState;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("palette has {have} colors, state needs {need}")]
    PaletteTooSmall { have: usize, need: usize },
    #[error("scale must be at least 1")]
    ZeroScale,
    #[error("palette colors must be distinct and at least two")]
    BadPalette,
}

pub type Rgb = [u8; 3];

const DEFAULT_COLORS: [Rgb; 12] = [
    [255, 255, 255],
    [0, 0, 0],
    [200, 30, 40],
    [30, 90, 200],
    [240, 170, 20],
    [30, 150, 70],
    [130, 50, 160],
    [0, 170, 190],
    [230, 100, 160],
    [120, 80, 40],
    [150, 150, 150],
    [170, 210, 60],
];

/// One color per residue class; residue 0 is the background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    colors: Vec<Rgb>,
}

impl Palette {
    pub fn new(colors: Vec<Rgb>) -> Result<Palette, RenderError> {
        let distinct = colors.iter().enumerate().all(|(i, c)| !colors[..i].contains(c));
        if colors.len() < 2 || !distinct {
            return Err(RenderError::BadPalette);
        }
        Ok(Palette { colors })
    }

    /// Fixed colors for `k <= 12`, generated ones beyond.
    pub fn for_modulus(k: usize) -> Palette {
        let k = k.max(2);
        if k <= DEFAULT_COLORS.len() {
            return Palette { colors: DEFAULT_COLORS[..k].to_vec() };
        }
        Palette::generated(k)
    }

    /// White background, then `k − 1` hues spaced around the wheel at alternating lightness.
    pub fn generated(k: usize) -> Palette {
        let mut colors = vec![[255, 255, 255]];
        let n = k.max(2) - 1;
        for i in 0..n {
            let hue = i as f64 / n as f64;
            let light = if i % 2 == 0 { 0.35 } else { 0.6 };
            colors.push(hsl(hue, 0.75, light));
        }
        let mut i = 1;
        while i < colors.len() {
            if colors[..i].contains(&colors[i]) {
                colors[i][2] = colors[i][2].wrapping_add(1);
            } else {
                i += 1;
            }
        }
        Palette { colors }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn color(&self, residue: u8) -> Rgb {
        self.colors[usize::from(residue)]
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }
}

fn hsl(h: f64, s: f64, l: f64) -> Rgb {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h * 6.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [to(r), to(g), to(b)]
}

fn luma(c: Rgb) -> u8 {
    let y = (299 * u32::from(c[0]) + 587 * u32::from(c[1]) + 114 * u32::from(c[2]) + 500) / 1000;
    y as u8
}

/// The bounding box plus a one-cell margin on every side, each cell drawn as a
/// `scale`×`scale` block, +y up. An empty state is a single background pixel.
pub fn render_pgm(state: &LatticeState, palette: &Palette, scale: usize) -> Result<Vec<u8>, RenderError> {
    if scale == 0 {
        return Err(RenderError::ZeroScale);
    }
    let need = usize::from(state.modulus_bound()).max(usize::from(state.max_value()) + 1);
    if palette.len() < need {
        return Err(RenderError::PaletteTooSmall { have: palette.len(), need });
    }
    let gray = palette.len() == 2;
    let bg = palette.color(0);
    let Some(b) = state.bounding_box() else {
        return Ok(if gray {
            format!("P2\n1 1\n255\n{}\n", luma(bg)).into_bytes()
        } else {
            format!("P3\n1 1\n255\n{} {} {}\n", bg[0], bg[1], bg[2]).into_bytes()
        });
    };
    let cols = b.width() + 2;
    let rows = b.height() + 2;
    let (w, h) = (cols * scale, rows * scale);
    let mut out = String::with_capacity(w * h * if gray { 4 } else { 12 });
    let _ = write!(out, "{}\n{w} {h}\n255\n", if gray { "P2" } else { "P3" });
    let mut line = String::new();
    for r in 0..rows {
        line.clear();
        let y = b.max_y + 1 - r as i64;
        for c in 0..cols {
            let x = b.min_x - 1 + c as i64;
            let col = palette.color(state.get(crate::lattice::Point::new(x, y)));
            for _ in 0..scale {
                if !line.is_empty() {
                    line.push(' ');
                }
                if gray {
                    let _ = write!(line, "{}", luma(col));
                } else {
                    let _ = write!(line, "{} {} {}", col[0], col[1], col[2]);
                }
            }
        }
        for _ in 0..scale {
            out.push_str(&line);
            out.push('\n');
        }
    }
    Ok(out.into_bytes())
}
