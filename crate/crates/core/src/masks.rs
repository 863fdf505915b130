//! Neighborhood masks and reflection symmetry signatures.
//!
//! Mask files are drawn like figures (+y up) with `o` at the origin, `X` on
//! every neighbor offset and `.` elsewhere. A leading `# name: <label>` line
//! names the mask.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{BoundingBox, Point};

const BUILTIN: &[(&str, &str)] = &[
    ("von-neumann", include_str!("../data/masks/von-neumann.mask")),
    ("diag-neumann", include_str!("../data/masks/diag-neumann.mask")),
    ("moore", include_str!("../data/masks/moore.mask")),
    ("hexagonal", include_str!("../data/masks/hexagonal.mask")),
    ("tannenbaum", include_str!("../data/masks/tannenbaum.mask")),
    ("kite", include_str!("../data/masks/kite.mask")),
    ("rocket", include_str!("../data/masks/rocket.mask")),
    ("roof", include_str!("../data/masks/roof.mask")),
    ("l-shaped", include_str!("../data/masks/l-shaped.mask")),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("unknown mask {0:?}")]
    UnknownName(String),
    #[error("mask has no origin cell 'o'")]
    NoOrigin,
    #[error("mask has more than one origin cell 'o'")]
    MultipleOrigins,
    #[error("origin cannot be a neighbor")]
    OriginAsNeighbor,
    #[error("mask has no neighbor offsets")]
    EmptyMask,
    #[error("line {line}: unexpected character {ch:?}")]
    BadCharacter { line: usize, ch: char },
}

/// Reflection flags about the bounding-box center of a cell set.
///
/// `horizontal` is the mirror in the horizontal axis (`y` flipped), `vertical`
/// the mirror in the vertical axis (`x` flipped), `diagonal` swaps the box's
/// axes along its main diagonal and `anti_diagonal` along the other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SymmetrySignature {
    pub horizontal: bool,
    pub vertical: bool,
    pub diagonal: bool,
    pub anti_diagonal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryClass {
    DoubleSymmetric,
    SingleAxis,
    Asymmetric,
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymmetryClass::DoubleSymmetric => "double-symmetric",
            SymmetryClass::SingleAxis => "single-axis",
            SymmetryClass::Asymmetric => "asymmetric",
        })
    }
}

impl SymmetrySignature {
    pub const FULL: SymmetrySignature =
        SymmetrySignature { horizontal: true, vertical: true, diagonal: true, anti_diagonal: true };

    /// Double-symmetric needs all four reflections. Otherwise the orthogonal
    /// pair and the diagonal pair are the two reflection families; a set
    /// invariant under mirrors from both families is invariant under all four.
    pub fn class(&self) -> SymmetryClass {
        let orthogonal = self.horizontal || self.vertical;
        let diagonal = self.diagonal || self.anti_diagonal;
        match (orthogonal, diagonal) {
            (true, true) if self.count() == 4 => SymmetryClass::DoubleSymmetric,
            (false, false) => SymmetryClass::Asymmetric,
            _ => SymmetryClass::SingleAxis,
        }
    }

    pub fn count(&self) -> usize {
        [self.horizontal, self.vertical, self.diagonal, self.anti_diagonal].iter().filter(|&&f| f).count()
    }

    pub fn any(&self) -> bool {
        self.count() > 0
    }
}

/// Reflections of `p` about the center of `b`, in signature field order.
/// Diagonal images are only meaningful for square boxes.
pub(crate) fn reflections(b: &BoundingBox, p: Point) -> [Point; 4] {
    let (x0, y0, x1, y1) = (b.min_x, b.min_y, b.max_x, b.max_y);
    [
        Point::new(p.x, y0 + y1 - p.y),
        Point::new(x0 + x1 - p.x, p.y),
        Point::new(x0 + (p.y - y0), y0 + (p.x - x0)),
        Point::new(x0 + (y1 - p.y), y0 + (x1 - p.x)),
    ]
}

/// Signature of weighted cells; values must match under reflection.
pub fn weighted_symmetry(cells: &HashMap<Point, u8>) -> SymmetrySignature {
    let mut it = cells.keys();
    let Some(&first) = it.next() else { return SymmetrySignature::FULL };
    let mut b = BoundingBox::from_point(first);
    for &p in it {
        b.include(p);
    }
    let square = b.width() == b.height();
    let mut flags = [true, true, square, square];
    for (&p, &v) in cells {
        let imgs = reflections(&b, p);
        for (f, q) in flags.iter_mut().zip(imgs) {
            if *f && cells.get(&q) != Some(&v) {
                *f = false;
            }
        }
        if !flags.iter().any(|&f| f) {
            break;
        }
    }
    SymmetrySignature { horizontal: flags[0], vertical: flags[1], diagonal: flags[2], anti_diagonal: flags[3] }
}

/// Signature of a plain offset or support set.
pub fn symmetry<'a, I: IntoIterator<Item = &'a Point>>(points: I) -> SymmetrySignature {
    weighted_symmetry(&points.into_iter().map(|&p| (p, 1u8)).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    name: String,
    offsets: Vec<Point>,
}

impl Mask {
    /// Mask from explicit offsets; duplicates are merged.
    pub fn new(name: impl Into<String>, offsets: impl IntoIterator<Item = Point>) -> Result<Mask, MaskError> {
        let set: BTreeSet<(i64, i64)> = offsets.into_iter().map(|p| p.scan_key()).collect();
        if set.contains(&(0, 0)) {
            return Err(MaskError::OriginAsNeighbor);
        }
        if set.is_empty() {
            return Err(MaskError::EmptyMask);
        }
        Ok(Mask { name: name.into(), offsets: set.into_iter().map(|(y, x)| Point::new(x, y)).collect() })
    }

    pub fn builtin(name: &str) -> Result<Mask, MaskError> {
        let (_, text) = BUILTIN.iter().find(|(n, _)| *n == name).ok_or_else(|| MaskError::UnknownName(name.into()))?;
        Mask::from_text(text)
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    /// Resolves a catalog name, or parses a file when `name` is a path to one.
    pub fn resolve(name: &str) -> Result<Mask, MaskError> {
        match Mask::builtin(name) {
            Ok(m) => Ok(m),
            Err(e) => match std::fs::read_to_string(name) {
                Ok(text) => Mask::from_text(&text),
                Err(_) => Err(e),
            },
        }
    }

    pub fn from_text(text: &str) -> Result<Mask, MaskError> {
        let mut name = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if let Some(c) = t.strip_prefix('#') {
                if let Some(n) = c.trim().strip_prefix("name:") {
                    name.get_or_insert_with(|| n.trim().to_string());
                }
                continue;
            }
            if t.is_empty() {
                continue;
            }
            rows.push((i + 1, t));
        }
        let mut origin = None;
        let mut marks = Vec::new();
        let n = rows.len() as i64;
        for (r, (lineno, row)) in rows.iter().enumerate() {
            let y = n - 1 - r as i64;
            for (x, ch) in row.chars().enumerate() {
                let p = Point::new(x as i64, y);
                match ch {
                    'o' | 'O' => {
                        if origin.replace(p).is_some() {
                            return Err(MaskError::MultipleOrigins);
                        }
                    }
                    'X' | 'x' => marks.push(p),
                    '.' => {}
                    _ => return Err(MaskError::BadCharacter { line: *lineno, ch }),
                }
            }
        }
        let o = origin.ok_or(MaskError::NoOrigin)?;
        Mask::new(name.unwrap_or_else(|| "custom".into()), marks.into_iter().map(|p| p - o))
    }

    /// Grid text over the box of the offsets and the origin.
    pub fn to_text(&self) -> String {
        let mut b = BoundingBox::from_point(Point::ORIGIN);
        for &p in &self.offsets {
            b.include(p);
        }
        let mut s = format!("# name: {}\n", self.name);
        for y in (b.min_y..=b.max_y).rev() {
            for x in b.min_x..=b.max_x {
                let p = Point::new(x, y);
                s.push(if p == Point::ORIGIN {
                    'o'
                } else if self.offsets.binary_search_by_key(&p.scan_key(), |q| q.scan_key()).is_ok() {
                    'X'
                } else {
                    '.'
                });
            }
            s.push('\n');
        }
        s
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Offsets in scan order.
    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    pub fn degree(&self) -> usize {
        self.offsets.len()
    }

    pub fn radius(&self) -> usize {
        self.offsets.iter().map(|p| p.x.unsigned_abs().max(p.y.unsigned_abs())).max().unwrap_or(0) as usize
    }

    pub fn symmetry(&self) -> SymmetrySignature {
        symmetry(&self.offsets)
    }
}
