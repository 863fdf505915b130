//! Finite windows of residues on the unbounded square lattice.
//!
//! A [`LatticeState`] stores a dense row-major window. Everything outside the
//! window is zero, so padding is never observable: equality, supports and
//! bounding boxes only see nonzero cells.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A lattice coordinate or a translation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Point { x, y }
    }

    /// Row-major scan order key (y first, then x).
    pub fn scan_key(self) -> (i64, i64) {
        (self.y, self.x)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Inclusive axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: i64,
    pub min_y: i64,
    pub max_x: i64,
    pub max_y: i64,
}

impl BoundingBox {
    pub fn from_point(p: Point) -> Self {
        BoundingBox { min_x: p.x, min_y: p.y, max_x: p.x, max_y: p.y }
    }

    pub fn width(&self) -> usize {
        (self.max_x - self.min_x + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.max_y - self.min_y + 1) as usize
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn include(&mut self, p: Point) {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.min_x <= other.max_x && other.min_x <= self.max_x && self.min_y <= other.max_y && other.min_y <= self.max_y
    }

    pub fn translated(&self, s: Point) -> BoundingBox {
        BoundingBox {
            min_x: self.min_x + s.x,
            min_y: self.min_y + s.y,
            max_x: self.max_x + s.x,
            max_y: self.max_y + s.y,
        }
    }

    pub fn min_corner(&self) -> Point {
        Point::new(self.min_x, self.min_y)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FigureError {
    #[error("line {line}: unexpected character {ch:?}")]
    BadCharacter { line: usize, ch: char },
    #[error("value {0} cannot be written in the figure format (max 35)")]
    ValueTooLarge(u8),
}

/// Residues on a dense window; cells outside the window are zero.
#[derive(Debug, Clone)]
pub struct LatticeState {
    origin: Point,
    width: usize,
    height: usize,
    values: Vec<u8>,
    modulus_bound: u16,
}

impl LatticeState {
    pub fn empty() -> Self {
        LatticeState { origin: Point::ORIGIN, width: 0, height: 0, values: Vec::new(), modulus_bound: 2 }
    }

    /// Zero window of the given geometry.
    pub fn zeros(origin: Point, width: usize, height: usize, modulus_bound: u16) -> Self {
        LatticeState { origin, width, height, values: vec![0; width * height], modulus_bound: modulus_bound.max(2) }
    }

    /// Builds a state from raw window data.
    ///
    /// Panics if `values.len() != width * height` or a value is not below `modulus_bound`.
    pub fn from_raw(origin: Point, width: usize, height: usize, values: Vec<u8>, modulus_bound: u16) -> Self {
        assert_eq!(values.len(), width * height, "window size mismatch");
        let modulus_bound = modulus_bound.max(2);
        assert!(values.iter().all(|&v| u16::from(v) < modulus_bound), "value exceeds modulus bound");
        LatticeState { origin, width, height, values, modulus_bound }
    }

    /// Tight state holding the given cells. Later duplicates overwrite earlier ones.
    pub fn from_cells<I: IntoIterator<Item = (Point, u8)>>(cells: I) -> Self {
        let cells: Vec<(Point, u8)> = cells.into_iter().collect();
        let mut bbox: Option<BoundingBox> = None;
        for &(p, _) in &cells {
            match bbox.as_mut() {
                Some(b) => b.include(p),
                None => bbox = Some(BoundingBox::from_point(p)),
            }
        }
        let Some(b) = bbox else { return Self::empty() };
        let max = cells.iter().map(|c| c.1).max().unwrap_or(0);
        let mut s = Self::zeros(b.min_corner(), b.width(), b.height(), u16::from(max) + 1);
        for (p, v) in cells {
            s.set(p, v);
        }
        s
    }

    /// Single residue-1 cell at the origin.
    pub fn point() -> Self {
        Self::from_cells([(Point::ORIGIN, 1)])
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn modulus_bound(&self) -> u16 {
        self.modulus_bound
    }

    pub fn set_modulus_bound(&mut self, k: u16) {
        let k = k.max(2);
        assert!(self.values.iter().all(|&v| u16::from(v) < k), "value exceeds modulus bound");
        self.modulus_bound = k;
    }

    /// Window rectangle, or `None` for a zero-sized window.
    pub fn window(&self) -> Option<BoundingBox> {
        (self.width > 0 && self.height > 0).then(|| BoundingBox {
            min_x: self.origin.x,
            min_y: self.origin.y,
            max_x: self.origin.x + self.width as i64 - 1,
            max_y: self.origin.y + self.height as i64 - 1,
        })
    }

    fn index(&self, p: Point) -> Option<usize> {
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        (dx >= 0 && dy >= 0 && (dx as usize) < self.width && (dy as usize) < self.height)
            .then(|| dy as usize * self.width + dx as usize)
    }

    pub fn get(&self, p: Point) -> u8 {
        self.index(p).map_or(0, |i| self.values[i])
    }

    /// Writes a residue, growing the window if needed.
    pub fn set(&mut self, p: Point, v: u8) {
        if u16::from(v) >= self.modulus_bound {
            self.modulus_bound = u16::from(v) + 1;
        }
        if self.index(p).is_none() {
            if v == 0 {
                return;
            }
            let target = match self.window() {
                Some(w) => {
                    let mut w = w;
                    w.include(p);
                    w
                }
                None => BoundingBox::from_point(p),
            };
            *self = self.reframed(target);
        }
        let i = self.index(p).expect("cell inside window");
        self.values[i] = v;
    }

    /// Row `y` of the window as a slice (window-local row index).
    pub fn row(&self, y: usize) -> &[u8] {
        &self.values[y * self.width..(y + 1) * self.width]
    }

    /// Nonzero cells in scan order (y, then x).
    pub fn cells(&self) -> impl Iterator<Item = (Point, u8)> + '_ {
        let (ox, oy, w) = (self.origin.x, self.origin.y, self.width);
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(move |(i, &v)| (Point::new(ox + (i % w) as i64, oy + (i / w) as i64), v))
    }

    pub fn support(&self) -> BTreeSet<Point> {
        self.cells().map(|(p, _)| p).collect()
    }

    pub fn support_size(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let w = self.width;
        if w == 0 {
            return None;
        }
        let rows: Vec<usize> = (0..self.height).filter(|&y| self.row(y).iter().any(|&v| v != 0)).collect();
        let (&y0, &y1) = (rows.first()?, rows.last()?);
        let mut x0 = w;
        let mut x1 = 0;
        for &y in &rows {
            let r = self.row(y);
            if let Some(a) = r.iter().position(|&v| v != 0) {
                x0 = x0.min(a);
            }
            if let Some(b) = r.iter().rposition(|&v| v != 0) {
                x1 = x1.max(b);
            }
        }
        Some(BoundingBox {
            min_x: self.origin.x + x0 as i64,
            min_y: self.origin.y + y0 as i64,
            max_x: self.origin.x + x1 as i64,
            max_y: self.origin.y + y1 as i64,
        })
    }

    /// Copy of this state on an arbitrary window; cells outside `target` are dropped.
    pub fn reframed(&self, target: BoundingBox) -> LatticeState {
        let mut out = Self::zeros(target.min_corner(), target.width(), target.height(), self.modulus_bound);
        let Some(src) = self.window() else { return out };
        if !src.intersects(&target) {
            return out;
        }
        let x0 = src.min_x.max(target.min_x);
        let x1 = src.max_x.min(target.max_x);
        let y0 = src.min_y.max(target.min_y);
        let y1 = src.max_y.min(target.max_y);
        let n = (x1 - x0 + 1) as usize;
        for y in y0..=y1 {
            let si = self.index(Point::new(x0, y)).expect("inside source");
            let di = out.index(Point::new(x0, y)).expect("inside target");
            out.values[di..di + n].copy_from_slice(&self.values[si..si + n]);
        }
        out
    }

    /// Copy cropped to the tight bounding box (empty window for zero states).
    pub fn tightened(&self) -> LatticeState {
        match self.bounding_box() {
            Some(b) => self.reframed(b),
            None => LatticeState { modulus_bound: self.modulus_bound, ..Self::empty() },
        }
    }

    /// Copy with `n` zero cells added on every side.
    pub fn padded(&self, n: usize) -> LatticeState {
        let n = n as i64;
        let b = self.window().unwrap_or(BoundingBox::from_point(self.origin));
        self.reframed(BoundingBox { min_x: b.min_x - n, min_y: b.min_y - n, max_x: b.max_x + n, max_y: b.max_y + n })
    }

    pub fn translated(&self, s: Point) -> LatticeState {
        LatticeState { origin: self.origin + s, ..self.clone() }
    }

    /// Restriction to a rectangle, as a tight-free state framed on `b`.
    pub fn restricted(&self, b: BoundingBox) -> LatticeState {
        self.reframed(b)
    }

    /// Number of cells inside `b` holding each residue `0..k`.
    pub fn residue_counts(&self, b: &BoundingBox, k: usize) -> Vec<usize> {
        let mut counts = vec![0usize; k.max(usize::from(self.max_value()) + 1)];
        let mut inside = 0usize;
        if let Some(w) = self.window() {
            if w.intersects(b) {
                let x0 = w.min_x.max(b.min_x);
                let x1 = w.max_x.min(b.max_x);
                for y in w.min_y.max(b.min_y)..=w.max_y.min(b.max_y) {
                    let i = self.index(Point::new(x0, y)).expect("inside window");
                    for &v in &self.values[i..=i + (x1 - x0) as usize] {
                        counts[v as usize] += 1;
                        inside += 1;
                    }
                }
            }
        }
        counts[0] += b.area() - inside;
        counts
    }

    pub fn max_value(&self) -> u8 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Cell-wise sum modulo `k`.
    pub fn add_mod(&self, other: &LatticeState, k: u8) -> LatticeState {
        let k16 = u16::from(k);
        let target = match (self.window(), other.window()) {
            (Some(a), Some(b)) => a.union(&b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => return LatticeState { modulus_bound: k16, ..Self::empty() },
        };
        let mut out = Self::zeros(target.min_corner(), target.width(), target.height(), k16);
        for (p, v) in self.cells().chain(other.cells()) {
            let i = out.index(p).expect("inside union");
            out.values[i] = ((u16::from(out.values[i]) + u16::from(v)) % k16) as u8;
        }
        out
    }

    /// Parses the figure text format: '.' or '0' for zero, '1'-'9', 'a'-'z' for 10-35,
    /// one row per line, '#' comment lines ignored. Rows are drawn with +y pointing up:
    /// the first row has the largest `y`, and the last row is `y = 0`. Column `j` is `x = j`.
    pub fn from_text(text: &str) -> Result<LatticeState, FigureError> {
        let mut cells = Vec::new();
        let mut y = 0i64;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim_start().starts_with('#') {
                continue;
            }
            for (x, ch) in line.chars().enumerate() {
                let v = match ch {
                    '.' | '0' => 0,
                    '1'..='9' => ch as u8 - b'0',
                    'a'..='z' => ch as u8 - b'a' + 10,
                    _ => return Err(FigureError::BadCharacter { line: lineno + 1, ch }),
                };
                if v != 0 {
                    cells.push((Point::new(x as i64, -y), v));
                }
            }
            y += 1;
        }
        let rows = y - 1;
        Ok(Self::from_cells(cells.into_iter().map(|(p, v)| (Point::new(p.x, p.y + rows), v))))
    }

    /// Writes the bounding box in the figure text format. Empty states give an empty string.
    pub fn to_text(&self) -> Result<String, FigureError> {
        let Some(b) = self.bounding_box() else { return Ok(String::new()) };
        let mut s = String::with_capacity((b.width() + 1) * b.height());
        for y in (b.min_y..=b.max_y).rev() {
            for x in b.min_x..=b.max_x {
                s.push(residue_char(self.get(Point::new(x, y)))?);
            }
            s.push('\n');
        }
        Ok(s)
    }
}

pub fn residue_char(v: u8) -> Result<char, FigureError> {
    Ok(match v {
        0 => '.',
        1..=9 => (b'0' + v) as char,
        10..=35 => (b'a' + v - 10) as char,
        _ => return Err(FigureError::ValueTooLarge(v)),
    })
}

impl PartialEq for LatticeState {
    fn eq(&self, other: &Self) -> bool {
        translate_equal(self, other, Point::ORIGIN)
    }
}

impl Eq for LatticeState {}

/// True iff `b` equals `a` translated by `shift`.
pub fn translate_equal(a: &LatticeState, b: &LatticeState, shift: Point) -> bool {
    let (ba, bb) = (a.bounding_box(), b.bounding_box());
    match (ba, bb) {
        (None, None) => true,
        (Some(x), Some(y)) => {
            if x.translated(shift) != y {
                return false;
            }
            (x.min_y..=x.max_y).all(|yy| {
                (x.min_x..=x.max_x).all(|xx| {
                    let p = Point::new(xx, yy);
                    a.get(p) == b.get(p + shift)
                })
            })
        }
        _ => false,
    }
}
