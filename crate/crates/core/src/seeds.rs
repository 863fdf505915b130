//! Named seeds, size classes and pseudorandom seeds.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{FigureError, LatticeState, Point};
use crate::masks::{symmetry, SymmetrySignature};

const BUILTIN: &[(&str, &str)] = &[
    ("point", include_str!("../data/seeds/point.seed")),
    ("neumann", include_str!("../data/seeds/neumann.seed")),
    ("diag", include_str!("../data/seeds/diag.seed")),
    ("moore", include_str!("../data/seeds/moore.seed")),
    ("peano", include_str!("../data/seeds/peano.seed")),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeedError {
    #[error("unknown seed {0:?}")]
    UnknownName(String),
    #[error("seed has empty support")]
    Empty,
    #[error("seed box {0}x{1} exceeds 84x84")]
    TooLarge(usize, usize),
    #[error("fill probability must lie strictly between 0 and 1")]
    BadProbability,
    #[error(transparent)]
    Figure(#[from] FigureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    /// Side of the enclosing square.
    pub fn bound(self) -> usize {
        match self {
            SizeClass::Small => 3,
            SizeClass::Medium => 18,
            SizeClass::Large => 84,
        }
    }

    /// Smallest class whose square holds a `w`×`h` box.
    pub fn of_extent(w: usize, h: usize) -> Option<SizeClass> {
        let side = w.max(h);
        [SizeClass::Small, SizeClass::Medium, SizeClass::Large].into_iter().find(|c| side <= c.bound())
    }
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        })
    }
}

impl FromStr for SizeClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "small" => Ok(SizeClass::Small),
            "medium" => Ok(SizeClass::Medium),
            "large" => Ok(SizeClass::Large),
            _ => Err(format!("unknown size class {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    name: String,
    figure: LatticeState,
    size_class: SizeClass,
}

impl Seed {
    /// Wraps a figure, centering its bounding box on the origin (rounding toward the min corner).
    pub fn new(name: impl Into<String>, figure: &LatticeState) -> Result<Seed, SeedError> {
        let b = figure.bounding_box().ok_or(SeedError::Empty)?;
        let size_class =
            SizeClass::of_extent(b.width(), b.height()).ok_or(SeedError::TooLarge(b.width(), b.height()))?;
        let shift = Point::new(-b.min_x - (b.width() as i64 - 1) / 2, -b.min_y - (b.height() as i64 - 1) / 2);
        Ok(Seed { name: name.into(), figure: figure.tightened().translated(shift), size_class })
    }

    pub fn builtin(name: &str) -> Result<Seed, SeedError> {
        let (_, text) = BUILTIN.iter().find(|(n, _)| *n == name).ok_or_else(|| SeedError::UnknownName(name.into()))?;
        Seed::from_text(text)
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN.iter().map(|(n, _)| *n)
    }

    /// Catalog name, or a path to a seed file.
    pub fn resolve(name: &str) -> Result<Seed, SeedError> {
        match Seed::builtin(name) {
            Ok(s) => Ok(s),
            Err(e) => match std::fs::read_to_string(name) {
                Ok(text) => Seed::from_text(&text),
                Err(_) => Err(e),
            },
        }
    }

    /// Figure text with an optional `# name: <label>` comment.
    pub fn from_text(text: &str) -> Result<Seed, SeedError> {
        let name = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix('#'))
            .find_map(|c| c.trim().strip_prefix("name:").map(|n| n.trim().to_string()))
            .unwrap_or_else(|| "custom".into());
        Seed::new(name, &LatticeState::from_text(text)?)
    }

    pub fn to_text(&self) -> Result<String, SeedError> {
        Ok(format!("# name: {}\n{}", self.name, self.figure.to_text()?))
    }

    /// Uniform fill of the class's square; resampled until nonempty.
    pub fn random(size_class: SizeClass, fill_probability: f64, rng_seed: u64) -> Result<Seed, SeedError> {
        if !(fill_probability > 0.0 && fill_probability < 1.0) {
            return Err(SeedError::BadProbability);
        }
        let side = size_class.bound();
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        loop {
            let values: Vec<u8> = (0..side * side).map(|_| u8::from(rng.gen_bool(fill_probability))).collect();
            let figure = LatticeState::from_raw(Point::ORIGIN, side, side, values, 2);
            if !figure.is_empty() {
                let mut s = Seed::new(format!("random-{size_class}-{rng_seed}"), &figure)?;
                s.size_class = size_class;
                return Ok(s);
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn figure(&self) -> &LatticeState {
        &self.figure
    }

    pub fn size_class(&self) -> SizeClass {
        self.size_class
    }

    /// Side of the seed's bounding box (its larger dimension).
    pub fn extent(&self) -> usize {
        let b = self.figure.bounding_box().expect("seeds are nonempty");
        b.width().max(b.height())
    }

    pub fn symmetry(&self) -> SymmetrySignature {
        symmetry(&self.figure.support())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masks::SymmetryClass;

    #[test]
    fn catalog() {
        for (name, size) in [("point", 1), ("neumann", 5), ("diag", 5), ("moore", 9), ("peano", 5)] {
            let s = Seed::builtin(name).unwrap();
            assert_eq!(s.figure().support_size(), size, "{name}");
            assert_eq!(s.size_class(), SizeClass::Small);
            assert_eq!(s.symmetry().class(), SymmetryClass::DoubleSymmetric, "{name}");
            assert!(s.figure().bounding_box().unwrap().contains(Point::ORIGIN));
        }
        assert_eq!(Seed::builtin("point").unwrap().figure(), &LatticeState::point());
        assert!(matches!(Seed::builtin("x"), Err(SeedError::UnknownName(_))));
    }

    #[test]
    fn neumann_is_centered_plus() {
        let s = Seed::builtin("neumann").unwrap();
        let want =
            LatticeState::from_cells([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)].map(|(x, y)| (Point::new(x, y), 1)));
        assert_eq!(s.figure(), &want);
    }

    #[test]
    fn file_round_trip() {
        for name in Seed::builtin_names() {
            let s = Seed::builtin(name).unwrap();
            let back = Seed::from_text(&s.to_text().unwrap()).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn random_is_deterministic() {
        let a = Seed::random(SizeClass::Small, 0.5, 42).unwrap();
        let b = Seed::random(SizeClass::Small, 0.5, 42).unwrap();
        assert_eq!(a, b);
        let m = Seed::random(SizeClass::Medium, 0.99, 3).unwrap();
        assert!(m.extent() <= 18 && m.figure().support_size() >= 1);
        let l7 = Seed::random(SizeClass::Large, 0.5, 7).unwrap();
        assert_eq!(l7, Seed::random(SizeClass::Large, 0.5, 7).unwrap());
        assert_eq!(l7.size_class(), SizeClass::Large);
        assert_eq!(Seed::random(SizeClass::Small, 1.0, 1), Err(SeedError::BadProbability));
    }

    #[test]
    fn size_classes() {
        assert_eq!(SizeClass::of_extent(3, 1), Some(SizeClass::Small));
        assert_eq!(SizeClass::of_extent(4, 4), Some(SizeClass::Medium));
        assert_eq!(SizeClass::of_extent(19, 2), Some(SizeClass::Large));
        assert_eq!(SizeClass::of_extent(85, 2), None);
    }
}
