//! Naive reference implementations, kept simple enough to audit by eye.

use std::collections::{BTreeMap, BTreeSet};

use modlap::{LatticeState, Mask, Point, SymmetrySignature, UpdateRule};

/// One step by direct evaluation at every cell of the support grown by the mask radius.
pub fn oracle_step(state: &LatticeState, mask: &Mask, k: u8, rule: UpdateRule) -> LatticeState {
    let u: BTreeMap<Point, i64> = state.cells().map(|(p, v)| (p, i64::from(v))).collect();
    let get = |p: Point| *u.get(&p).unwrap_or(&0);
    let Some(b) = state.bounding_box() else { return LatticeState::empty() };
    let r = mask.radius() as i64;
    let mut out = Vec::new();
    for y in b.min_y - r..=b.max_y + r {
        for x in b.min_x - r..=b.max_x + r {
            let p = Point::new(x, y);
            let mut sum = 0i64;
            for &o in mask.offsets() {
                let g = p + o;
                sum += match rule {
                    UpdateRule::Laplacian => get(g) - get(p),
                    UpdateRule::IdentityPlusSum | UpdateRule::NeighborSum => get(g),
                };
            }
            if rule == UpdateRule::IdentityPlusSum {
                sum += get(p);
            }
            let v = sum.rem_euclid(i64::from(k));
            if v != 0 {
                out.push((p, v as u8));
            }
        }
    }
    LatticeState::from_cells(out)
}

#[derive(Debug, PartialEq, Eq)]
pub struct SizeLimitExceeded;

/// Every set of shifts whose translated copies of `f` tile `g` exactly, without overlap.
pub fn oracle_decompose(f: &LatticeState, g: &LatticeState) -> Result<Vec<Vec<Point>>, SizeLimitExceeded> {
    let fc: Vec<(Point, u8)> = f.cells().collect();
    let gc: BTreeMap<Point, u8> = g.cells().collect();
    if fc.len() > 64 || gc.len() > 64 {
        return Err(SizeLimitExceeded);
    }
    if fc.is_empty() || gc.is_empty() {
        return Ok(Vec::new());
    }
    let mut candidates = BTreeSet::new();
    for &q in gc.keys() {
        for &(p, _) in &fc {
            let t = q - p;
            if fc.iter().all(|&(c, v)| gc.get(&(c + t)) == Some(&v)) {
                candidates.insert(t);
            }
        }
    }
    let candidates: Vec<Point> = candidates.into_iter().collect();
    let mut found = Vec::new();
    let mut chosen = Vec::new();
    let mut covered = BTreeSet::new();
    cover(&fc, &gc, &candidates, &mut chosen, &mut covered, &mut found);
    Ok(found)
}

fn cover(
    fc: &[(Point, u8)],
    gc: &BTreeMap<Point, u8>,
    candidates: &[Point],
    chosen: &mut Vec<Point>,
    covered: &mut BTreeSet<Point>,
    found: &mut Vec<Vec<Point>>,
) {
    let Some(&target) = gc.keys().find(|p| !covered.contains(p)) else {
        let mut s = chosen.clone();
        s.sort();
        found.push(s);
        return;
    };
    for &t in candidates {
        let cells: Vec<Point> = fc.iter().map(|&(c, _)| c + t).collect();
        if !cells.contains(&target) || cells.iter().any(|c| covered.contains(c)) {
            continue;
        }
        chosen.push(t);
        covered.extend(cells.iter().copied());
        cover(fc, gc, candidates, chosen, covered, found);
        for c in &cells {
            covered.remove(c);
        }
        chosen.pop();
    }
}

fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    cross(a, b, p) == 0 && p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    if cross(a, b, c) == 0 {
        return false;
    }
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    let neg = d1 < 0 || d2 < 0 || d3 < 0;
    let pos = d1 > 0 || d2 > 0 || d3 > 0;
    !(neg && pos)
}

/// Points that do not lie in the convex hull of the remaining points.
pub fn brute_hull_vertices(points: &[Point]) -> BTreeSet<Point> {
    let pts: BTreeSet<Point> = points.iter().copied().collect();
    let v: Vec<Point> = pts.iter().copied().collect();
    let mut out = BTreeSet::new();
    for &p in &v {
        let others: Vec<Point> = v.iter().copied().filter(|&q| q != p).collect();
        let mut inside = false;
        'search: for i in 0..others.len() {
            for j in i + 1..others.len() {
                if on_segment(p, others[i], others[j]) {
                    inside = true;
                    break 'search;
                }
                for l in j + 1..others.len() {
                    if in_triangle(p, others[i], others[j], others[l]) {
                        inside = true;
                        break 'search;
                    }
                }
            }
        }
        if !inside {
            out.insert(p);
        }
    }
    out
}

/// Reflection symmetry checked cell by cell against the bounding box center.
pub fn brute_symmetry(state: &LatticeState) -> SymmetrySignature {
    let cells: BTreeMap<Point, u8> = state.cells().collect();
    let Some(b) = state.bounding_box() else { return SymmetrySignature::FULL };
    let (x0, y0, x1, y1) = (b.min_x, b.min_y, b.max_x, b.max_y);
    let square = x1 - x0 == y1 - y0;
    let holds = |f: &dyn Fn(Point) -> Point| cells.iter().all(|(&p, v)| cells.get(&f(p)) == Some(v));
    SymmetrySignature {
        horizontal: holds(&|p| Point::new(p.x, y0 + y1 - p.y)),
        vertical: holds(&|p| Point::new(x0 + x1 - p.x, p.y)),
        diagonal: square && holds(&|p| Point::new(x0 + p.y - y0, y0 + p.x - x0)),
        anti_diagonal: square && holds(&|p| Point::new(x0 + y1 - p.y, y0 + x1 - p.x)),
    }
}
