//! Signed transverse crossings of traced curves, including the sign rule at
//! the conical point.
//!
//! Interior crossings of two straight trajectories all carry the sign of
//! cross(d1, d2). At the 6*pi vertex the incoming and outgoing rays of the
//! first curve split the circle of directions into two arcs; a passage of
//! the second curve contributes +1, -1 or 0 according to whether its rays
//! are separated by the arcs, and in which orientation. This is the same
//! count a small perturbation off the singularity would produce, and it is
//! pinned down by reproducing the intersection matrix of the basis curves.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use thiserror::Error;

use crate::surface::{canonical_point, Corner, Origami, SurfacePoint, VertexTable};
use crate::tracer::{ConePassage, ConeRay, Segment, TracedCurve};
use crate::Rat;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PairError {
    /// The two curves share a segment; transverse counting is undefined and
    /// callers fall back to the homological form.
    #[error("degenerate pair: curves overlap along a segment")]
    DegeneratePair,
}

/// Cyclic order of rays at the cone: quadrant position first, then angle
/// within the quadrant (all directions of one quadrant span less than a
/// quarter turn, so the cross product decides).
fn ray_cmp(a: &ConeRay, b: &ConeRay) -> Ordering {
    a.qpos.cmp(&b.qpos).then_with(|| {
        let cr = cross_i(a.dir, b.dir);
        match cr.cmp(&0) {
            Ordering::Greater => Ordering::Less,
            Ordering::Less => Ordering::Greater,
            Ordering::Equal => Ordering::Equal,
        }
    })
}

fn cross_i(a: (i64, i64), b: (i64, i64)) -> i64 {
    a.0 * b.1 - a.1 * b.0
}

/// Strictly between `lo` and `hi` going counterclockwise.
fn in_open_arc(x: &ConeRay, lo: &ConeRay, hi: &ConeRay) -> bool {
    match ray_cmp(lo, hi) {
        Ordering::Less => ray_cmp(lo, x) == Ordering::Less && ray_cmp(x, hi) == Ordering::Less,
        Ordering::Greater => ray_cmp(lo, x) == Ordering::Less || ray_cmp(x, hi) == Ordering::Less,
        Ordering::Equal => false,
    }
}

/// Contribution of c2's passage through S to Int(c1, c2).
pub fn cone_contribution(p1: &ConePassage, p2: &ConePassage) -> Result<i64, PairError> {
    for x in [&p2.fwd, &p2.back] {
        for y in [&p1.fwd, &p1.back] {
            if ray_cmp(x, y) == Ordering::Equal {
                return Err(PairError::DegeneratePair);
            }
        }
    }
    let f2_left = in_open_arc(&p2.fwd, &p1.fwd, &p1.back);
    let b2_left = in_open_arc(&p2.back, &p1.fwd, &p1.back);
    Ok(match (f2_left, b2_left) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    })
}

/// Exact intersection of two closed segments. Returns the single common
/// point when the segments are transverse, `Overlap` when they share more
/// than a point, `None` otherwise.
enum SegMeet {
    None,
    Point((Rat, Rat)),
    Overlap,
}

fn seg_meet(a: (Rat, Rat), b: (Rat, Rat), c: (Rat, Rat), d: (Rat, Rat)) -> SegMeet {
    let ab = (b.0 - a.0, b.1 - a.1);
    let cd = (d.0 - c.0, d.1 - c.1);
    let denom = ab.0 * cd.1 - ab.1 * cd.0;
    let ca = (c.0 - a.0, c.1 - a.1);
    if denom.is_zero() {
        // parallel; collinear iff (c - a) x (b - a) == 0
        if !(ca.0 * ab.1 - ca.1 * ab.0).is_zero() {
            return SegMeet::None;
        }
        // collinear: order along the dominant axis
        let horiz = ab.0 != Rat::zero();
        let val = |p: (Rat, Rat)| if horiz { p.0 } else { p.1 };
        let (a1, b1) = (val(a).min(val(b)), val(a).max(val(b)));
        let (c1, d1) = (val(c).min(val(d)), val(c).max(val(d)));
        let lo = a1.max(c1);
        let hi = b1.min(d1);
        match lo.cmp(&hi) {
            Ordering::Less => SegMeet::Overlap,
            Ordering::Equal => SegMeet::None, // endpoint touch of parallel segments
            Ordering::Greater => SegMeet::None,
        }
    } else {
        let t = (ca.0 * cd.1 - ca.1 * cd.0) / denom;
        let u = (ca.0 * ab.1 - ca.1 * ab.0) / denom;
        let zero = Rat::zero();
        let one = Rat::from_integer(1);
        if t < zero || t > one || u < zero || u > one {
            return SegMeet::None;
        }
        SegMeet::Point((a.0 + t * ab.0, a.1 + t * ab.1))
    }
}

struct CrossingCount {
    signed: i64,
    unsigned: i64,
}

fn count_crossings(
    o: &Origami,
    vt: &VertexTable,
    c1: &TracedCurve,
    c2: &TracedCurve,
) -> Result<CrossingCount, PairError> {
    let d1 = oriented_dir(c1);
    let d2 = oriented_dir(c2);
    let cross_sign = cross_i(d1, d2).signum();

    // Interior and edge crossings, deduplicated by canonical surface point.
    let by_sq1 = c1.segments_by_square();
    let by_sq2 = c2.segments_by_square();
    let mut points: BTreeSet<SurfacePoint> = BTreeSet::new();
    for (sq, segs1) in &by_sq1 {
        let Some(segs2) = by_sq2.get(sq) else {
            continue;
        };
        for s1 in segs1 {
            for s2 in segs2 {
                match seg_meet(s1.0, s1.1, s2.0, s2.1) {
                    SegMeet::None => {}
                    SegMeet::Overlap => return Err(PairError::DegeneratePair),
                    SegMeet::Point((x, y)) => {
                        if Corner::from_coords(x, y).is_some() {
                            // grid vertex: handled by passage counting
                            continue;
                        }
                        points.insert(canonical_point(o, vt, SurfacePoint::new(*sq, x, y)));
                    }
                }
            }
        }
    }
    let mut signed = cross_sign * points.len() as i64;
    let mut unsigned = points.len() as i64;

    // Passages through regular vertices: straight lines through a 2*pi
    // point cross with sign cross(d1, d2).
    let mut v1: BTreeMap<usize, i64> = BTreeMap::new();
    for v in c1.regular_vertex_passages(vt) {
        *v1.entry(v).or_default() += 1;
    }
    if !v1.is_empty() {
        for v in c2.regular_vertex_passages(vt) {
            if let Some(&n1) = v1.get(&v) {
                if cross_sign == 0 {
                    // parallel trajectories through one point coincide
                    return Err(PairError::DegeneratePair);
                }
                signed += cross_sign * n1;
                unsigned += n1;
            }
        }
    }

    // Passage pair at the cone.
    if let (Some(p1), Some(p2)) = (&c1.s_passage, &c2.s_passage) {
        let c = cone_contribution(p1, p2)?;
        signed += c;
        unsigned += c.abs();
    }
    Ok(CrossingCount { signed, unsigned })
}

fn oriented_dir(c: &TracedCurve) -> (i64, i64) {
    (c.holonomy.0 / c.multiplier, c.holonomy.1 / c.multiplier)
}

/// Signed transverse crossing count of two traced closed geodesics;
/// antisymmetric; errors on overlapping parallel curves.
pub fn geometric_intersection(
    o: &Origami,
    vt: &VertexTable,
    c1: &TracedCurve,
    c2: &TracedCurve,
) -> Result<i64, PairError> {
    count_crossings(o, vt, c1, c2).map(|c| c.signed)
}

/// Unsigned geometric crossing count: every transverse crossing point
/// counts one, cone passages count the absolute value of their arc-rule
/// contribution.
pub fn unsigned_crossings(
    o: &Origami,
    vt: &VertexTable,
    c1: &TracedCurve,
    c2: &TracedCurve,
) -> Result<i64, PairError> {
    count_crossings(o, vt, c1, c2).map(|c| c.unsigned)
}

/// Unsigned transverse crossings of two sub-arcs given by explicit segment
/// lists (used for the pieces of the cutting procedure; the pieces avoid
/// S, so no cone rule is involved). Open arcs are treated as half-open:
/// a crossing exactly at an arc's terminal point is not counted, so the
/// piece-pair counts of a cut partition the whole-curve count exactly.
/// Crossings at grid vertices count once per passage pair.
pub fn subarc_crossings(
    o: &Origami,
    vt: &VertexTable,
    segs1: &[crate::tracer::Crossing],
    closed1: bool,
    segs2: &[crate::tracer::Crossing],
    closed2: bool,
) -> Result<i64, PairError> {
    let arc_end = |segs: &[crate::tracer::Crossing], closed: bool| -> Option<SurfacePoint> {
        if closed {
            return None;
        }
        let last = segs.last()?;
        Some(canonical_point(
            o,
            vt,
            SurfacePoint::new(last.sq, last.exit.0, last.exit.1),
        ))
    };
    let end1 = arc_end(segs1, closed1);
    let end2 = arc_end(segs2, closed2);
    let mut by_sq1: BTreeMap<usize, Vec<Segment>> = BTreeMap::new();
    for s in segs1 {
        by_sq1.entry(s.sq).or_default().push((s.entry, s.exit));
    }
    let mut by_sq2: BTreeMap<usize, Vec<Segment>> = BTreeMap::new();
    for s in segs2 {
        by_sq2.entry(s.sq).or_default().push((s.entry, s.exit));
    }
    let mut points: BTreeSet<SurfacePoint> = BTreeSet::new();
    for (sq, g1) in &by_sq1 {
        let Some(g2) = by_sq2.get(sq) else { continue };
        for s1 in g1 {
            for s2 in g2 {
                match seg_meet(s1.0, s1.1, s2.0, s2.1) {
                    SegMeet::None => {}
                    SegMeet::Overlap => return Err(PairError::DegeneratePair),
                    SegMeet::Point((x, y)) => {
                        if Corner::from_coords(x, y).is_some() {
                            continue;
                        }
                        let p = canonical_point(o, vt, SurfacePoint::new(*sq, x, y));
                        if Some(p) == end1 || Some(p) == end2 {
                            continue;
                        }
                        points.insert(p);
                    }
                }
            }
        }
    }
    let mut total = points.len() as i64;
    // vertex passages: exits of all segments; the terminal exit of an open
    // arc lies on a marked edge, never at a vertex, so no passage is lost
    let passage_vs = |segs: &[crate::tracer::Crossing]| -> BTreeMap<usize, i64> {
        let mut m = BTreeMap::new();
        for s in segs.iter() {
            if let Some(corner) = Corner::from_coords(s.exit.0, s.exit.1) {
                let v = vt.vertex_id(s.sq, corner);
                if Some(v) != vt.cone_id() {
                    *m.entry(v).or_default() += 1;
                }
            }
        }
        m
    };
    let v1 = passage_vs(segs1);
    if !v1.is_empty() {
        for (v, n2) in passage_vs(segs2) {
            if let Some(&n1) = v1.get(&v) {
                total += n1 * n2;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{class_of_named, int_form, Basis, INTERSECTION_MATRIX};
    use crate::rat;
    use crate::surface::{build_l_shape, validate, LShapeParams, MarkedCurve};
    use crate::tracer::trace_marked;

    fn l(a: usize, b: usize) -> (Origami, VertexTable) {
        let o = build_l_shape(LShapeParams::new(a, b).unwrap()).unwrap();
        let (_, vt) = validate(&o).unwrap();
        (o, vt)
    }

    #[test]
    fn seg_meet_transverse_and_parallel() {
        let p = |x: i64, y: i64| (rat(x, 1), rat(y, 1));
        match seg_meet(p(0, 0), p(1, 1), p(0, 1), p(1, 0)) {
            SegMeet::Point(pt) => assert_eq!(pt, (rat(1, 2), rat(1, 2))),
            _ => panic!("expected point"),
        }
        assert!(matches!(
            seg_meet(p(0, 0), p(1, 0), p(0, 1), p(1, 1)),
            SegMeet::None
        ));
        assert!(matches!(
            seg_meet(p(0, 0), p(2, 0), p(1, 0), p(3, 0)),
            SegMeet::Overlap
        ));
        // collinear endpoint touch is not a transverse crossing
        assert!(matches!(
            seg_meet(p(0, 0), p(1, 0), p(1, 0), p(2, 0)),
            SegMeet::None
        ));
    }

    #[test]
    fn e1_f2_intersect_once() {
        let (o, vt) = l(3, 3);
        let e1 = trace_marked(&o, &vt, MarkedCurve::E1);
        let f2 = trace_marked(&o, &vt, MarkedCurve::F2);
        assert_eq!(geometric_intersection(&o, &vt, &e1, &f2).unwrap(), 1);
        assert_eq!(geometric_intersection(&o, &vt, &f2, &e1).unwrap(), -1);
    }

    #[test]
    fn e1_e2_disjoint_classes() {
        let (o, vt) = l(3, 3);
        let e1 = trace_marked(&o, &vt, MarkedCurve::E1);
        let e2 = trace_marked(&o, &vt, MarkedCurve::E2);
        assert_eq!(geometric_intersection(&o, &vt, &e1, &e2).unwrap(), 0);
    }

    #[test]
    fn g_h_cancel_at_the_cone() {
        // g and h cross once inside the corner square; the cone passage
        // contributes the opposite sign, so the total is zero.
        let (o, vt) = l(3, 3);
        let g = trace_marked(&o, &vt, MarkedCurve::G);
        let h = trace_marked(&o, &vt, MarkedCurve::H);
        assert_eq!(geometric_intersection(&o, &vt, &g, &h).unwrap(), 0);
        assert_eq!(unsigned_crossings(&o, &vt, &g, &h).unwrap(), 2);
        let c = cone_contribution(&g.s_passage.unwrap(), &h.s_passage.unwrap()).unwrap();
        assert_eq!(c, -1);
    }

    #[test]
    fn matrix_reproduced_on_l44() {
        let (o, vt) = l(4, 4);
        let basis = Basis::trace(&o, &vt);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                assert_eq!(
                    geometric_intersection(&o, &vt, &basis.curves[i], &basis.curves[j]).unwrap(),
                    INTERSECTION_MATRIX[i][j]
                );
            }
        }
    }

    #[test]
    fn marked_pairs_match_their_classes() {
        let (o, vt) = l(3, 3);
        let all = MarkedCurve::ALL;
        for &m1 in &all {
            for &m2 in &all {
                let c1 = trace_marked(&o, &vt, m1);
                let c2 = trace_marked(&o, &vt, m2);
                if c1.canonical_key() == c2.canonical_key() {
                    continue;
                }
                let geo = geometric_intersection(&o, &vt, &c1, &c2).unwrap();
                let alg = int_form(class_of_named(m1), class_of_named(m2));
                assert_eq!(geo, alg, "{} vs {}", m1.name(), m2.name());
            }
        }
    }

    #[test]
    fn identical_curves_are_degenerate() {
        let (o, vt) = l(3, 3);
        let e1 = trace_marked(&o, &vt, MarkedCurve::E1);
        let again = trace_marked(&o, &vt, MarkedCurve::E1);
        assert_eq!(
            geometric_intersection(&o, &vt, &e1, &again),
            Err(PairError::DegeneratePair)
        );
    }
}
