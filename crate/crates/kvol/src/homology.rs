//! The homology basis (e2, f1, e1, f2), its antisymmetric intersection
//! form, and extraction of integer coordinates from traced curves.

use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::intersect::{geometric_intersection, PairError};
use crate::surface::{MarkedCurve, Origami, VertexTable};
use crate::tracer::{cylinders_in_direction, trace_marked, Direction, TracedCurve};

/// Integer 4-vector in the ordered basis (e2, f1, e1, f2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HomologyClass(pub [i64; 4]);

impl HomologyClass {
    pub const ZERO: HomologyClass = HomologyClass([0; 4]);

    pub fn e2() -> Self {
        HomologyClass([1, 0, 0, 0])
    }
    pub fn f1() -> Self {
        HomologyClass([0, 1, 0, 0])
    }
    pub fn e1() -> Self {
        HomologyClass([0, 0, 1, 0])
    }
    pub fn f2() -> Self {
        HomologyClass([0, 0, 0, 1])
    }

    pub fn coords(&self) -> [i64; 4] {
        self.0
    }
}

impl Add for HomologyClass {
    type Output = HomologyClass;
    fn add(self, rhs: HomologyClass) -> HomologyClass {
        let mut out = [0; 4];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(rhs.0.iter())) {
            *o = a + b;
        }
        HomologyClass(out)
    }
}

impl Sub for HomologyClass {
    type Output = HomologyClass;
    fn sub(self, rhs: HomologyClass) -> HomologyClass {
        self + (-rhs)
    }
}

impl Neg for HomologyClass {
    type Output = HomologyClass;
    fn neg(self) -> HomologyClass {
        HomologyClass([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
}

impl Mul<i64> for HomologyClass {
    type Output = HomologyClass;
    fn mul(self, k: i64) -> HomologyClass {
        HomologyClass([k * self.0[0], k * self.0[1], k * self.0[2], k * self.0[3]])
    }
}

/// The intersection form in the ordered basis (e2, f1, e1, f2):
/// Int(e2,f1) = 1, Int(e2,f2) = -1, Int(e1,f2) = 1, all other independent
/// entries zero. Antisymmetric, determinant 1.
pub const INTERSECTION_MATRIX: [[i64; 4]; 4] =
    [[0, 1, 0, -1], [-1, 0, 0, 0], [0, 0, 0, 1], [1, 0, -1, 0]];

/// Algebraic intersection number of two classes: x^T M y.
pub fn int_form(x: HomologyClass, y: HomologyClass) -> i64 {
    let mut acc = 0;
    for (i, row) in INTERSECTION_MATRIX.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            acc += x.0[i] * m * y.0[j];
        }
    }
    acc
}

/// Homology class of a named marked curve; g and h are the diagonals with
/// [g] = [e1] - [f1] and [h] = [e1] + [f1], the primed curves are
/// homotopic to their partners.
pub fn class_of_named(which: MarkedCurve) -> HomologyClass {
    match which {
        MarkedCurve::E1 | MarkedCurve::E1Prime => HomologyClass::e1(),
        MarkedCurve::E2 => HomologyClass::e2(),
        MarkedCurve::F1 | MarkedCurve::F1Prime => HomologyClass::f1(),
        MarkedCurve::F2 => HomologyClass::f2(),
        MarkedCurve::G => HomologyClass::e1() - HomologyClass::f1(),
        MarkedCurve::H => HomologyClass::e1() + HomologyClass::f1(),
    }
}

/// The four traced basis curves in matrix order.
#[derive(Clone, Debug)]
pub struct Basis {
    pub curves: [TracedCurve; 4],
}

impl Basis {
    pub fn trace(o: &Origami, vt: &VertexTable) -> Basis {
        Basis {
            curves: [
                trace_marked(o, vt, MarkedCurve::E2),
                trace_marked(o, vt, MarkedCurve::F1),
                trace_marked(o, vt, MarkedCurve::E1),
                trace_marked(o, vt, MarkedCurve::F2),
            ],
        }
    }
}

/// Homology coordinates of a closed traced curve, obtained from its
/// geometric pairings with the basis and the inverse of the form.
/// A curve overlapping e1 or f1 is paired against the parallel mid-cylinder
/// translate instead (homotopic, hence the same pairing); e2 and f2 have no
/// such translate but cannot partially overlap another geodesic either.
pub fn coords_of(
    o: &Origami,
    vt: &VertexTable,
    c: &TracedCurve,
    basis: &Basis,
) -> Result<HomologyClass, PairError> {
    let mut v = [0i64; 4];
    for (i, b) in basis.curves.iter().enumerate() {
        if c.canonical_key() == b.canonical_key() {
            v[i] = 0;
            continue;
        }
        v[i] = match geometric_intersection(o, vt, c, b) {
            Ok(n) => n,
            Err(PairError::DegeneratePair) => {
                let marked = match i {
                    1 => MarkedCurve::F1,
                    2 => MarkedCurve::E1,
                    _ => return Err(PairError::DegeneratePair),
                };
                let translate =
                    mid_cylinder_translate(o, vt, marked).ok_or(PairError::DegeneratePair)?;
                geometric_intersection(o, vt, c, &translate)?
            }
        };
    }
    Ok(solve_pairing(v))
}

/// Solve x^T M e_i = v_i for x, using the unimodularity of the form.
fn solve_pairing(v: [i64; 4]) -> HomologyClass {
    HomologyClass([v[1], -v[0] - v[2], v[1] + v[3], -v[2]])
}

/// Parallel translate of e1 (resp. f1) at the transverse midpoint of its
/// cylinder: region A for e1, region B for f1.
fn mid_cylinder_translate(
    o: &Origami,
    vt: &VertexTable,
    which: MarkedCurve,
) -> Option<TracedCurve> {
    o.lshape()?;
    let dir = match which {
        MarkedCurve::E1 => Direction { p: 1, q: 0 },
        MarkedCurve::F1 => Direction { p: 0, q: 1 },
        _ => return None,
    };
    // The cylinder of region A (resp. B) is the one avoiding the corner
    // square; the strip cylinder through C is the other one.
    cylinders_in_direction(o, vt, dir)
        .into_iter()
        .find(|cyl| cyl.core.segs.iter().all(|s| s.sq != 0))
        .map(|cyl| cyl.core)
}

/// Fill homology coordinates for every curve of a pool.
pub fn assign_classes(
    o: &Origami,
    vt: &VertexTable,
    pool: &mut [TracedCurve],
    basis: &Basis,
) -> Result<(), PairError> {
    let classes: Result<Vec<HomologyClass>, PairError> =
        pool.iter().map(|c| coords_of(o, vt, c, basis)).collect();
    for (c, cls) in pool.iter_mut().zip(classes?) {
        c.class = Some(cls);
    }
    Ok(())
}
