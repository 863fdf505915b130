//! Outline descriptors: convex hull of the support, inertia anisotropy,
//! salient hull angles and the outline class; plus figure symmetry.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeState, Point};
use crate::masks::SymmetrySignature;
use crate::periodicity::MatchMode;

/// Exterior angles below this many degrees count as collinear.
pub const DEFAULT_MERGE_TOLERANCE_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlineClass {
    Square,
    Diamond,
    Triangle,
    Pentagon,
    Hexagon,
    Irregular,
}

impl fmt::Display for OutlineClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutlineClass::Square => "square",
            OutlineClass::Diamond => "diamond",
            OutlineClass::Triangle => "triangle",
            OutlineClass::Pentagon => "pentagon",
            OutlineClass::Hexagon => "hexagon",
            OutlineClass::Irregular => "irregular",
        })
    }
}

fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counterclockwise extreme points (monotone chain, integer orientation tests).
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Turning angle in degrees at each vertex of a closed polygon.
pub fn exterior_angles(poly: &[Point]) -> Vec<f64> {
    let n = poly.len();
    if n < 3 {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let a = poly[(i + n - 1) % n];
            let b = poly[i];
            let c = poly[(i + 1) % n];
            let (ux, uy) = ((b.x - a.x) as f64, (b.y - a.y) as f64);
            let (vx, vy) = ((c.x - b.x) as f64, (c.y - b.y) as f64);
            (ux * vy - uy * vx).atan2(ux * vx + uy * vy).abs().to_degrees()
        })
        .collect()
}

/// Drops the flattest vertex while its turning angle is below `tolerance_deg`, keeping at least three.
pub fn merge_collinear(hull: &[Point], tolerance_deg: f64) -> Vec<Point> {
    let mut poly = hull.to_vec();
    while poly.len() > 3 {
        let angles = exterior_angles(&poly);
        let (i, &a) = angles.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).expect("nonempty polygon");
        if a >= tolerance_deg {
            break;
        }
        poly.remove(i);
    }
    poly
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inertia {
    /// Unit vector of the major principal axis.
    pub major: (f64, f64),
    pub minor: (f64, f64),
    /// sqrt(λ_max / λ_min) of the second central moments; 1 for isotropic sets.
    pub anisotropy: f64,
}

pub fn inertia(points: &[Point]) -> Inertia {
    let n = points.len().max(1) as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.x as f64, b + p.y as f64));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p.x as f64 - mx, p.y as f64 - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (sxx, syy, sxy) = (sxx / n, syy / n, sxy / n);
    let tr = sxx + syy;
    let disc = ((sxx - syy).powi(2) / 4.0 + sxy * sxy).sqrt();
    let (l1, l2) = (tr / 2.0 + disc, (tr / 2.0 - disc).max(0.0));
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let anisotropy = if l1 <= 1e-12 {
        1.0
    } else if l2 <= 1e-12 * l1 {
        f64::INFINITY
    } else {
        (l1 / l2).sqrt()
    };
    Inertia { major: (theta.cos(), theta.sin()), minor: (-theta.sin(), theta.cos()), anisotropy }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlineDescriptor {
    pub hull: Vec<Point>,
    pub inertia: Inertia,
    /// Hull after collinear merging.
    pub salient: Vec<Point>,
    /// Turning angles (degrees) at the salient vertices.
    pub salient_angles: Vec<f64>,
    pub class: OutlineClass,
}

/// Axis-aligned when the mean edge deviation from the lattice axes is under 22.5°.
fn axis_aligned(poly: &[Point]) -> bool {
    let n = poly.len();
    let dev: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let ang = ((b.y - a.y) as f64).atan2((b.x - a.x) as f64).to_degrees().rem_euclid(90.0);
            ang.min(90.0 - ang)
        })
        .sum::<f64>()
        / n as f64;
    dev < 22.5
}

/// Class from the merged hull: vertex count, and axis alignment for quadrilaterals.
pub fn classify_outline(hull: &[Point], tolerance_deg: f64) -> OutlineClass {
    let merged = merge_collinear(hull, tolerance_deg);
    match merged.len() {
        3 => OutlineClass::Triangle,
        4 if axis_aligned(&merged) => OutlineClass::Square,
        4 => OutlineClass::Diamond,
        5 => OutlineClass::Pentagon,
        6 => OutlineClass::Hexagon,
        _ => OutlineClass::Irregular,
    }
}

/// Full descriptor of a state's support; `None` for empty states.
pub fn describe(state: &LatticeState, tolerance_deg: f64) -> Option<OutlineDescriptor> {
    let support: Vec<Point> = state.cells().map(|(p, _)| p).collect();
    if support.is_empty() {
        return None;
    }
    let hull = convex_hull(&support);
    let salient = merge_collinear(&hull, tolerance_deg);
    Some(OutlineDescriptor {
        inertia: inertia(&support),
        salient_angles: exterior_angles(&salient),
        class: classify_outline(&hull, tolerance_deg),
        salient,
        hull,
    })
}

pub const DESCRIPTOR_HEADER: &str = "t,class,hull_vertices,anisotropy";

pub fn descriptor_csv_line(t: usize, d: &OutlineDescriptor) -> String {
    format!("{t},{},{},{}", d.class, d.hull.len(), crate::metrics::format_sig9(d.inertia.anisotropy))
}

/// Reflection invariance about the bounding-box center; residues must match in exact mode.
/// Empty states are vacuously symmetric.
pub fn figure_symmetry(state: &LatticeState, mode: MatchMode) -> SymmetrySignature {
    let Some(b) = state.bounding_box() else { return SymmetrySignature::FULL };
    let s = state.reframed(b);
    let (w, h) = (b.width(), b.height());
    let v: Vec<u8> = match mode {
        MatchMode::Exact => s.values().to_vec(),
        MatchMode::SupportOnly => s.values().iter().map(|&x| u8::from(x != 0)).collect(),
    };
    let at = |x: usize, y: usize| v[y * w + x];
    let rows = |f: &dyn Fn(usize, usize) -> u8| (0..h).all(|y| (0..w).all(|x| at(x, y) == f(x, y)));
    let square = w == h;
    SymmetrySignature {
        horizontal: rows(&|x, y| at(x, h - 1 - y)),
        vertical: rows(&|x, y| at(w - 1 - x, y)),
        diagonal: square && rows(&|x, y| at(y, x)),
        anti_diagonal: square && rows(&|x, y| at(w - 1 - y, h - 1 - x)),
    }
}
