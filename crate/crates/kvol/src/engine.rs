//! KVol estimation over a curve pool, the lemma suites, the cutting
//! procedure with its torus closures, and the per-pair certifier.
//!
//! Every comparison on the acceptance path is exact: ratios are compared by
//! cross-multiplying squared integers, lengths of pieces are rational
//! multiples of one square root and are compared on the multipliers.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::homology::{assign_classes, class_of_named, int_form, Basis, HomologyClass};
use crate::intersect::{subarc_crossings, unsigned_crossings, PairError};
use crate::surface::{
    build_l_shape, validate, ConeReport, LShapeParams, MarkedCurve, Origami, SurfaceError,
    VertexTable,
};
use crate::torus::{torus_intersection, TorusModel, TorusSide};
use crate::tracer::{curve_pool_raw, trace_marked, Crossing, CurveKind, TracedCurve};
use crate::Rat;

pub type Rat128 = Ratio<i128>;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("surface is not in H(2): need exactly one 6*pi cone point")]
    NotInH2,
    #[error("operation requires L(n+1,n+1) with n >= 2")]
    NeedSquareLShape,
    #[error("empty curve pool (max_sq_len < 1)")]
    EmptyPool,
    #[error("degenerate curve pair")]
    Pair(#[from] PairError),
    #[error("sum-lemma instance has nonpositive denominators")]
    BadInstance,
    #[error("unknown curve id {0}")]
    UnknownCurve(String),
}

/// A surface prepared for pool computations.
pub struct Session {
    pub origami: Origami,
    pub vt: VertexTable,
    pub cone: ConeReport,
    pub basis: Option<Basis>,
}

impl Session {
    pub fn lshape(a: usize, b: usize) -> Result<Session, EngineError> {
        let params = LShapeParams::new(a, b)?;
        Session::from_origami(build_l_shape(params)?)
    }

    pub fn from_origami(origami: Origami) -> Result<Session, EngineError> {
        let (cone, vt) = validate(&origami)?;
        if !cone.in_h2 {
            return Err(EngineError::NotInH2);
        }
        let basis = origami.lshape().map(|_| Basis::trace(&origami, &vt));
        Ok(Session {
            origami,
            vt,
            cone,
            basis,
        })
    }

    /// n with L(n+1, n+1); errors for other shapes.
    pub fn lemma_n(&self) -> Result<i64, EngineError> {
        match self.origami.lshape() {
            Some(p) if p.a == p.b && p.a >= 3 => Ok(p.a as i64 - 1),
            _ => Err(EngineError::NeedSquareLShape),
        }
    }

    /// The curve pool with homology coordinates (when a basis exists).
    pub fn pool(&self, max_sq_len: i64) -> Result<Vec<TracedCurve>, EngineError> {
        if max_sq_len < 1 {
            return Err(EngineError::EmptyPool);
        }
        let mut pool = curve_pool_raw(&self.origami, &self.vt, max_sq_len);
        if let Some(basis) = &self.basis {
            assign_classes(&self.origami, &self.vt, &mut pool, basis)?;
        }
        Ok(pool)
    }
}

/// Pool-restricted KVol estimate: exact best squared ratio and witnesses.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub vol: i64,
    /// Reduced fraction num_sq/den_sq = (Vol * Int / (l1 l2))^2 of the best
    /// pair; 0/1 when no pair intersects.
    pub num_sq: i128,
    pub den_sq: i128,
    pub decimal: f64,
    pub witness: Vec<String>,
    pub witness_ties: Vec<(String, String)>,
}

impl Estimate {
    pub fn ratio_sq(&self) -> Rat128 {
        Ratio::new(self.num_sq, self.den_sq)
    }
}

fn gcd128(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.max(1)
    } else {
        gcd128(b, a % b)
    }
}

/// Maximum of Vol * |Int(a,b)| / (l(a) l(b)) over unordered pool pairs,
/// compared exactly on squares. The algebraic pairing of the homology
/// classes is used; on transverse pairs it equals the geometric count.
pub fn kvol_estimate(vol: i64, pool: &[TracedCurve]) -> Result<Estimate, EngineError> {
    if pool.is_empty() {
        return Err(EngineError::EmptyPool);
    }
    let classes: Vec<HomologyClass> = pool
        .iter()
        .map(|c| c.class.unwrap_or(HomologyClass::ZERO))
        .collect();
    #[derive(Clone)]
    struct Best {
        num: i128,
        den: i128,
        ties: Vec<(usize, usize)>,
    }
    let zero = Best {
        num: 0,
        den: 1,
        ties: Vec::new(),
    };
    let merge = |mut a: Best, mut b: Best| -> Best {
        match (a.num * b.den).cmp(&(b.num * a.den)) {
            std::cmp::Ordering::Greater => a,
            std::cmp::Ordering::Less => b,
            std::cmp::Ordering::Equal => {
                if a.num == 0 {
                    return a;
                }
                a.ties.append(&mut b.ties);
                a
            }
        }
    };
    let best = (0..pool.len())
        .into_par_iter()
        .fold(
            || zero.clone(),
            |acc, i| {
                let mut acc = acc;
                for j in (i + 1)..pool.len() {
                    let int = int_form(classes[i], classes[j]);
                    if int == 0 {
                        continue;
                    }
                    let num = (vol as i128 * vol as i128) * (int as i128 * int as i128);
                    let den = pool[i].sq_len as i128 * pool[j].sq_len as i128;
                    let cand = Best {
                        num,
                        den,
                        ties: vec![(i, j)],
                    };
                    acc = merge(acc, cand);
                }
                acc
            },
        )
        .reduce(|| zero.clone(), merge);
    let mut ties = best.ties;
    ties.sort();
    ties.dedup();
    let g = gcd128(best.num, best.den);
    let witness: Vec<String> = ties
        .first()
        .map(|&(i, j)| vec![pool[i].id.clone(), pool[j].id.clone()])
        .unwrap_or_default();
    Ok(Estimate {
        vol,
        num_sq: best.num / g,
        den_sq: best.den / g,
        decimal: ((best.num as f64) / (best.den as f64)).sqrt(),
        witness,
        witness_ties: ties
            .iter()
            .map(|&(i, j)| (pool[i].id.clone(), pool[j].id.clone()))
            .collect(),
    })
}

/// One lemma check outcome with offending curve ids.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaResult {
    pub pass: bool,
    pub counterexamples: Vec<String>,
}

/// l(curve)^2 >= n^2 * Int(curve, marked)^2 for every pool curve, with the
/// algebraic pairing.
pub fn check_lemma_inter(pool: &[TracedCurve], marked: MarkedCurve, n: i64) -> LemmaResult {
    let m = class_of_named(marked);
    let mut counterexamples = Vec::new();
    for c in pool {
        let Some(cls) = c.class else { continue };
        let int = int_form(cls, m);
        if (c.sq_len as i128) < (n * n) as i128 * (int * int) as i128 {
            counterexamples.push(c.id.clone());
        }
    }
    LemmaResult {
        pass: counterexamples.is_empty(),
        counterexamples,
    }
}

/// Is the curve one of the special short classes: g, h, or a curve
/// homotopic to e1 (horizontal, class ±[e1], inside the column strip) or
/// to f1 (vertical, class ±[f1], inside the bottom row)?
pub fn is_special_class(o: &Origami, vt: &VertexTable, c: &TracedCurve) -> bool {
    let Some(params) = o.lshape() else {
        return false;
    };
    let g = trace_marked(o, vt, MarkedCurve::G);
    let h = trace_marked(o, vt, MarkedCurve::H);
    if c.canonical_key() == g.canonical_key() || c.canonical_key() == h.canonical_key() {
        return true;
    }
    let Some(cls) = c.class else { return false };
    let e1 = HomologyClass::e1();
    let f1 = HomologyClass::f1();
    let a = params.a;
    if c.dir.as_tuple() == (1, 0) && (cls == e1 || cls == -e1) {
        return c.segs.iter().all(|s| s.sq == 0 || s.sq >= a);
    }
    if c.dir.as_tuple() == (0, 1) && (cls == f1 || cls == -f1) {
        return c.segs.iter().all(|s| s.sq < a);
    }
    false
}

/// Census of short curves: every pool curve with zero unsigned crossings
/// with both e1 and f1, and every pool curve with squared length < n^2,
/// must be one of the special classes.
pub fn check_lemma_short_curves(
    o: &Origami,
    vt: &VertexTable,
    pool: &[TracedCurve],
    n: i64,
) -> Result<LemmaResult, EngineError> {
    let e1 = trace_marked(o, vt, MarkedCurve::E1);
    let f1 = trace_marked(o, vt, MarkedCurve::F1);
    let mut counterexamples = Vec::new();
    for c in pool {
        if is_special_class(o, vt, c) {
            continue;
        }
        let short = c.sq_len < n * n;
        let zero_cross = {
            let xe = if c.canonical_key() == e1.canonical_key() {
                0
            } else {
                unsigned_crossings(o, vt, c, &e1)?
            };
            let xf = if c.canonical_key() == f1.canonical_key() {
                0
            } else {
                unsigned_crossings(o, vt, c, &f1)?
            };
            xe == 0 && xf == 0
        };
        if short || zero_cross {
            counterexamples.push(c.id.clone());
        }
    }
    Ok(LemmaResult {
        pass: counterexamples.is_empty(),
        counterexamples,
    })
}

/// A sum-lemma instance: nonnegative a, positive b and c.
#[derive(Clone, Debug)]
pub struct SumLemmaInstance {
    pub a: Vec<Vec<Rat>>,
    pub b: Vec<Rat>,
    pub c: Vec<Rat>,
}

fn r128(x: Rat) -> Rat128 {
    Ratio::new(*x.numer() as i128, *x.denom() as i128)
}

/// Exact check of sum(a) / (sum(b) sum(c)) <= max a_ij / (b_i c_j).
pub fn check_lemma_sommes(inst: &SumLemmaInstance) -> Result<bool, EngineError> {
    if inst.b.is_empty()
        || inst.c.is_empty()
        || inst.b.iter().any(|x| *x <= Rat::zero())
        || inst.c.iter().any(|x| *x <= Rat::zero())
    {
        return Err(EngineError::BadInstance);
    }
    let mut total = Rat128::zero();
    let mut best: Option<Rat128> = None;
    for (i, row) in inst.a.iter().enumerate() {
        for (j, aij) in row.iter().enumerate() {
            let v = r128(*aij);
            total += v;
            let ratio = v / (r128(inst.b[i]) * r128(inst.c[j]));
            best = Some(match best {
                Some(b) if b >= ratio => b,
                _ => ratio,
            });
        }
    }
    let sum_b: Rat128 = inst.b.iter().map(|x| r128(*x)).sum();
    let sum_c: Rat128 = inst.c.iter().map(|x| r128(*x)).sum();
    let lhs = total / (sum_b * sum_c);
    Ok(lhs <= best.unwrap_or_else(Rat128::zero))
}

/// Seeded randomized suite for the sum lemma.
#[derive(Clone, Debug, Serialize)]
pub struct SommesSuite {
    pub trials: usize,
    pub seed: u64,
    pub failures: usize,
}

pub fn random_sommes_suite(trials: usize, seed: u64) -> SommesSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let i = rng.gen_range(1..=6usize);
        let j = rng.gen_range(1..=6usize);
        let a = (0..i)
            .map(|_| {
                (0..j)
                    .map(|_| Rat::new(rng.gen_range(0..=20), rng.gen_range(1..=8)))
                    .collect()
            })
            .collect();
        let b = (0..i)
            .map(|_| Rat::new(rng.gen_range(1..=12), rng.gen_range(1..=8)))
            .collect();
        let c = (0..j)
            .map(|_| Rat::new(rng.gen_range(1..=12), rng.gen_range(1..=8)))
            .collect();
        let inst = SumLemmaInstance { a, b, c };
        if !check_lemma_sommes(&inst).unwrap() {
            failures += 1;
        }
    }
    SommesSuite {
        trials,
        seed,
        failures,
    }
}

/// Marked-curve crossing type along a core.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MarkType {
    E1,
    E1Prime,
    F1,
    F1Prime,
}

impl MarkType {
    pub fn is_e(self) -> bool {
        matches!(self, MarkType::E1 | MarkType::E1Prime)
    }
}

/// One piece of the cutting procedure.
#[derive(Clone, Debug)]
pub struct CutPiece {
    pub parent: String,
    pub index: usize,
    /// Sub-arc of the parent's crossing record (whole record when closed).
    pub segs: Vec<Crossing>,
    /// Length = t_len * sqrt(p^2 + q^2).
    pub t_len: Rat,
    pub norm_sq: i64,
    pub dir: (i64, i64),
    pub torus: Option<TorusSide>,
    /// True when the piece is the whole closed curve (no cuts).
    pub closed: bool,
    pub internal_marks: Vec<MarkType>,
}

impl CutPiece {
    /// Squared length, exact.
    pub fn sq_len(&self) -> Rat128 {
        let t = r128(self.t_len);
        t * t * Rat128::from_integer(self.norm_sq as i128)
    }
}

/// Marked crossings of a core in record order; the crossing at the entry of
/// segment k is reported with position k.
fn marked_crossings(o: &Origami, c: &TracedCurve) -> Vec<(usize, MarkType)> {
    let params = o.lshape().expect("cutting requires an l-shape");
    let a = params.a;
    let dir = (c.holonomy.0 / c.multiplier, c.holonomy.1 / c.multiplier);
    let (p, q) = dir;
    let zero = Rat::zero();
    let len = c.segs.len();
    let mut out: Vec<(usize, MarkType)> = Vec::new();
    for (k, seg) in c.segs.iter().enumerate() {
        if q > 0 && seg.entry.1 == zero {
            if seg.sq == 0 {
                out.push((k, MarkType::E1));
            } else if seg.sq == a {
                out.push((k, MarkType::E1Prime));
            }
        }
        if q < 0 && seg.exit.1 == zero {
            if seg.sq == 0 {
                out.push(((k + 1) % len, MarkType::E1));
            } else if seg.sq == a {
                out.push(((k + 1) % len, MarkType::E1Prime));
            }
        }
        if p > 0 && seg.entry.0 == zero {
            if seg.sq == 0 {
                out.push((k, MarkType::F1));
            } else if seg.sq == 1 {
                out.push((k, MarkType::F1Prime));
            }
        }
        if p < 0 && seg.exit.0 == zero {
            if seg.sq == 0 {
                out.push(((k + 1) % len, MarkType::F1));
            } else if seg.sq == 1 {
                out.push(((k + 1) % len, MarkType::F1Prime));
            }
        }
    }
    out.sort_by_key(|&(k, _)| k);
    out
}

/// Strip assignment when a piece has no internal marked crossings.
fn strip_of_squares(o: &Origami, segs: &[Crossing]) -> Option<TorusSide> {
    let params = o.lshape()?;
    let a = params.a;
    if segs.iter().all(|s| s.sq == 0 || s.sq >= a) {
        return Some(TorusSide::A);
    }
    if segs.iter().all(|s| s.sq < a) {
        return Some(TorusSide::B);
    }
    None
}

/// Cut a cylinder core at the marked-crossing transitions. Every cut point
/// lies on a grid edge, so pieces are contiguous runs of whole record
/// segments and their lengths sum exactly to the parent length.
pub fn cut_curve(o: &Origami, c: &TracedCurve) -> Vec<CutPiece> {
    assert_eq!(c.kind, CurveKind::CylinderCore, "only cores are cut");
    let dir = (c.holonomy.0 / c.multiplier, c.holonomy.1 / c.multiplier);
    let norm_sq = dir.0 * dir.0 + dir.1 * dir.1;
    let crossings = marked_crossings(o, c);
    let total_t: Rat = c.segs.iter().map(|s| s.t(dir)).sum();
    let mk_closed = |torus: Option<TorusSide>, internal: Vec<MarkType>| {
        vec![CutPiece {
            parent: c.id.clone(),
            index: 0,
            segs: c.segs.clone(),
            t_len: total_t,
            norm_sq,
            dir,
            torus,
            closed: true,
            internal_marks: internal,
        }]
    };
    if crossings.is_empty() {
        return mk_closed(strip_of_squares(o, &c.segs), Vec::new());
    }
    let cuts: Vec<usize> = (0..crossings.len())
        .filter(|&m| {
            let here = crossings[m].1.is_e();
            let next = crossings[(m + 1) % crossings.len()].1.is_e();
            here != next
        })
        .collect();
    if cuts.is_empty() {
        // uniform crossing type: single closed piece
        let marks: Vec<MarkType> = crossings.iter().map(|&(_, m)| m).collect();
        let torus = if marks[0].is_e() {
            Some(TorusSide::A)
        } else {
            Some(TorusSide::B)
        };
        return mk_closed(torus, marks);
    }
    let len = c.segs.len();
    let mut pieces = Vec::new();
    for (w, &cm) in cuts.iter().enumerate() {
        let cm_next = cuts[(w + 1) % cuts.len()];
        let k_from = crossings[cm].0;
        let k_to = crossings[cm_next].0;
        let mut segs = Vec::new();
        let mut k = k_from;
        loop {
            segs.push(c.segs[k].clone());
            k = (k + 1) % len;
            if k == k_to {
                break;
            }
        }
        let t_len: Rat = segs.iter().map(|s| s.t(dir)).sum();
        let mut internal = Vec::new();
        let mut m = (cm + 1) % crossings.len();
        while m != cm_next {
            internal.push(crossings[m].1);
            m = (m + 1) % crossings.len();
        }
        debug_assert!(
            internal.iter().all(|t| t.is_e()) || internal.iter().all(|t| !t.is_e()),
            "cut pieces have uniform internal type"
        );
        let torus = if internal.is_empty() {
            strip_of_squares(o, &segs)
        } else if internal[0].is_e() {
            Some(TorusSide::A)
        } else {
            Some(TorusSide::B)
        };
        // the assigned strip must actually contain the piece
        let torus = torus.filter(|side| {
            let model = TorusModel::new(*side, o.lshape().unwrap());
            segs.iter().all(|s| model.square_offset(o, s.sq).is_some())
        });
        pieces.push(CutPiece {
            parent: c.id.clone(),
            index: pieces.len(),
            segs,
            t_len,
            norm_sq,
            dir,
            torus,
            closed: false,
            internal_marks: internal,
        });
    }
    debug_assert_eq!(
        pieces.iter().map(|p| p.t_len).sum::<Rat>(),
        total_t,
        "piece lengths sum to the parent length"
    );
    pieces
}

/// A piece closed up in its torus.
#[derive(Clone, Debug, Serialize)]
pub struct ClosedTorusCurve {
    pub torus: TorusSide,
    pub class: (i64, i64),
    pub hat_sq_len: i64,
    /// Length of the closing arc along the marked edges (0 for closed
    /// pieces).
    pub closure_len: Rat,
}

/// Close a piece in its assigned torus: view it in the strip chart, join
/// end to start by the shortest path along the marked-edge images, and read
/// off the homotopy class of the closed-up loop.
pub fn torus_class_and_length(
    o: &Origami,
    piece: &CutPiece,
) -> Result<ClosedTorusCurve, EngineError> {
    let side = piece
        .torus
        .ok_or(EngineError::Pair(PairError::DegeneratePair))?;
    let params = o.lshape().ok_or(EngineError::NeedSquareLShape)?;
    let model = TorusModel::new(side, params);
    let (p, q) = piece.dir;
    let dev = (
        piece.t_len * Rat::from_integer(p),
        piece.t_len * Rat::from_integer(q),
    );
    let (w, closure_len) = if piece.closed {
        (dev, Rat::zero())
    } else {
        let first = piece.segs.first().unwrap();
        let last = piece.segs.last().unwrap();
        let start = model
            .embed(o, first.sq, first.entry.0, first.entry.1)
            .expect("piece start embeds");
        let end = model
            .embed(o, last.sq, last.exit.0, last.exit.1)
            .expect("piece end embeds");
        // wrap axis has period 1 (x for T_A, y for T_B); the arc axis
        // carries the length-1 marked arc (y for T_A, x for T_B)
        let (end_wrap, end_arc, start_wrap, start_arc) = match side {
            TorusSide::A => (end.0, end.1, start.0, start.1),
            TorusSide::B => (end.1, end.0, start.1, start.0),
        };
        let one = Rat::from_integer(1);
        let mut f = start_wrap - end_wrap;
        while f < Rat::zero() {
            f += one;
        }
        while f >= one {
            f -= one;
        }
        let dwrap = if f + f <= one { f } else { f - one };
        // normalize the arc coordinate of the end onto {0, 1}
        let arc_period = Rat::from_integer(match side {
            TorusSide::A => params.b as i64,
            TorusSide::B => params.a as i64,
        });
        let mut end_arc_n = end_arc;
        while end_arc_n > one {
            end_arc_n -= arc_period;
        }
        while end_arc_n < Rat::zero() {
            end_arc_n += arc_period;
        }
        debug_assert!(end_arc_n == Rat::zero() || end_arc_n == one);
        let darc = start_arc - end_arc_n;
        debug_assert!(darc.abs() <= one);
        let c = match side {
            TorusSide::A => (dwrap, darc),
            TorusSide::B => (darc, dwrap),
        };
        ((dev.0 + c.0, dev.1 + c.1), dwrap.abs() + darc.abs())
    };
    let (px, py) = model.periods();
    assert!(
        w.0.is_integer() && w.1.is_integer(),
        "closed loop is a lattice vector"
    );
    let (wx, wy) = (w.0.to_integer(), w.1.to_integer());
    assert_eq!(wx % px, 0);
    assert_eq!(wy % py, 0);
    let class = (wx / px, wy / py);
    Ok(ClosedTorusCurve {
        torus: side,
        class,
        hat_sq_len: wx * wx + wy * wy,
        closure_len,
    })
}

/// Check hat_sq <= (l + 1)^2 where l^2 = t^2 * norm is rational.
fn closure_bound_holds(hat_sq: i64, t_len: Rat, norm_sq: i64) -> bool {
    let l_sq = r128(t_len) * r128(t_len) * Rat128::from_integer(norm_sq as i128);
    let r = Rat128::from_integer(hat_sq as i128) - l_sq - Rat128::from_integer(1);
    if r <= Rat128::zero() {
        return true;
    }
    // r <= 2 l  <=>  r^2 <= 4 l^2
    r * r <= Rat128::from_integer(4) * l_sq
}

/// The per-pair bound R(n) = (1/(n+1) + 1/n^2) ((n+1)/n)^2.
pub fn per_pair_bound(n: i64) -> Rat128 {
    let n = n as i128;
    (Ratio::new(1, n + 1) + Ratio::new(1, n * n)) * Ratio::new(n + 1, n) * Ratio::new(n + 1, n)
}

/// U(n): the larger of the witness value 2 + 1/n and the upper-bound
/// expression Vol * R(n).
pub fn upper_u(n: i64) -> Rat128 {
    let lower = Ratio::new(2 * n as i128 + 1, n as i128);
    let upper = Rat128::from_integer(2 * n as i128 + 1) * per_pair_bound(n);
    lower.max(upper)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertOutcome {
    Verified,
    SpecialClass,
    Inconclusive,
    Failed,
}

/// Certificate for one pair of cylinder cores.
#[derive(Clone, Debug, Serialize)]
pub struct PairCertificate {
    pub pair: (String, String),
    pub n: i64,
    pub outcome: CertOutcome,
    pub pieces: (usize, usize),
    pub unembeddable_pieces: usize,
    /// Step 1: every piece has length >= n.
    pub piece_lengths_ok: bool,
    /// Step 1b: piece lengths sum to the parent lengths.
    pub sum_identity_ok: bool,
    /// Step 2: every closed-up curve satisfies l(hat) <= l(piece) + 1.
    pub closure_ok: bool,
    /// Step 3: crossings(piece_i, piece_j) <= |Int(hat_i, hat_j)| + 1 for
    /// pairs closed in the same torus.
    pub pair_plus_one_ok: bool,
    /// The same determinant check on cross-torus pairs (informational: the
    /// two classes live in different tori).
    pub cross_pair_plus_one_ok: bool,
    /// Step 4: every piece pair satisfies crossings / (l_i l_j) <= R(n).
    pub per_pair_ratio_ok: bool,
    /// Step 5: the sum lemma on the crossing matrix, the direct |Int| not
    /// exceeding the distributed sum, and the final ratio bound.
    pub assembled_ok: bool,
    pub notes: Vec<String>,
}

/// Run the proof chain on one pair of non-special cylinder cores.
pub fn certify_pair(
    session: &Session,
    ca: &TracedCurve,
    cb: &TracedCurve,
    n: i64,
) -> Result<PairCertificate, EngineError> {
    let o = &session.origami;
    let vt = &session.vt;
    let mut notes = Vec::new();

    let special_a = ca.kind != CurveKind::CylinderCore || is_special_class(o, vt, ca);
    let special_b = cb.kind != CurveKind::CylinderCore || is_special_class(o, vt, cb);
    if special_a || special_b {
        // lemma branch: Int/(l l) <= 1/n, checked as n^2 Int^2 <= l_a^2 l_b^2
        let int = int_form(
            ca.class.unwrap_or(HomologyClass::ZERO),
            cb.class.unwrap_or(HomologyClass::ZERO),
        );
        let ok = (n * n) as i128 * (int * int) as i128 <= ca.sq_len as i128 * cb.sq_len as i128;
        return Ok(PairCertificate {
            pair: (ca.id.clone(), cb.id.clone()),
            n,
            outcome: if ok {
                CertOutcome::SpecialClass
            } else {
                CertOutcome::Failed
            },
            pieces: (0, 0),
            unembeddable_pieces: 0,
            piece_lengths_ok: ok,
            sum_identity_ok: true,
            closure_ok: true,
            pair_plus_one_ok: true,
            cross_pair_plus_one_ok: true,
            per_pair_ratio_ok: ok,
            assembled_ok: ok,
            notes: vec!["special-class branch: Int/(l l) <= 1/n".into()],
        });
    }

    let pieces_a = cut_curve(o, ca);
    let pieces_b = cut_curve(o, cb);

    let sum_a: Rat = pieces_a.iter().map(|p| p.t_len).sum();
    let sum_b: Rat = pieces_b.iter().map(|p| p.t_len).sum();
    let sum_identity_ok =
        sum_a == Rat::from_integer(ca.multiplier) && sum_b == Rat::from_integer(cb.multiplier);

    let len_ok = |p: &CutPiece| p.sq_len() >= Rat128::from_integer((n * n) as i128);
    let piece_lengths_ok = pieces_a.iter().all(len_ok) && pieces_b.iter().all(len_ok);

    let mut unembeddable = 0usize;
    let mut closure_ok = true;
    let close_all = |pieces: &[CutPiece],
                     notes: &mut Vec<String>,
                     unembeddable: &mut usize,
                     closure_ok: &mut bool|
     -> Result<Vec<Option<ClosedTorusCurve>>, EngineError> {
        let mut hats = Vec::new();
        for p in pieces {
            if p.torus.is_none() {
                *unembeddable += 1;
                hats.push(None);
                continue;
            }
            let hat = torus_class_and_length(o, p)?;
            if !closure_bound_holds(hat.hat_sq_len, p.t_len, p.norm_sq) {
                *closure_ok = false;
                notes.push(format!(
                    "closure bound fails on piece {} of {}: hat_sq={} class={:?}",
                    p.index, p.parent, hat.hat_sq_len, hat.class
                ));
            }
            hats.push(Some(hat));
        }
        Ok(hats)
    };
    let hats_a = close_all(&pieces_a, &mut notes, &mut unembeddable, &mut closure_ok)?;
    let hats_b = close_all(&pieces_b, &mut notes, &mut unembeddable, &mut closure_ok)?;

    let rn = per_pair_bound(n);
    let mut pair_plus_one_ok = true;
    let mut cross_pair_plus_one_ok = true;
    let mut per_pair_ratio_ok = true;
    let mut a_matrix: Vec<Vec<Rat>> = Vec::new();
    for (i, pa) in pieces_a.iter().enumerate() {
        let mut row = Vec::new();
        for (j, pb) in pieces_b.iter().enumerate() {
            let crossings = subarc_crossings(o, vt, &pa.segs, pa.closed, &pb.segs, pb.closed)?;
            row.push(Rat::from_integer(crossings));
            if let (Some(ha), Some(hb)) = (&hats_a[i], &hats_b[j]) {
                let det = torus_intersection(ha.class, hb.class).abs();
                let bound_ok = crossings <= det + 1;
                if ha.torus == hb.torus {
                    if !bound_ok {
                        pair_plus_one_ok = false;
                        notes.push(format!(
                            "same-torus pair bound fails: pieces ({i},{j}), crossings={crossings}, det={det}"
                        ));
                    }
                } else if !bound_ok {
                    cross_pair_plus_one_ok = false;
                    notes.push(format!(
                        "cross-torus det bound fails: pieces ({i},{j}), crossings={crossings}, det={det}"
                    ));
                }
            }
            let lhs = Rat128::from_integer((crossings * crossings) as i128);
            let rhs = rn * rn * pa.sq_len() * pb.sq_len();
            if lhs > rhs {
                per_pair_ratio_ok = false;
                notes.push(format!(
                    "per-pair ratio bound fails: pieces ({i},{j}), crossings={crossings}"
                ));
            }
        }
        a_matrix.push(row);
    }

    let inst = SumLemmaInstance {
        a: a_matrix.clone(),
        b: pieces_a.iter().map(|p| p.t_len).collect(),
        c: pieces_b.iter().map(|p| p.t_len).collect(),
    };
    let sommes_ok = check_lemma_sommes(&inst)?;
    let direct = unsigned_crossings(o, vt, ca, cb)?;
    let total: Rat = a_matrix.iter().flatten().copied().sum();
    let direct_le_sum = Rat::from_integer(direct) <= total;
    let int_sq = Rat128::from_integer((direct * direct) as i128);
    let len_prod = Rat128::from_integer(ca.sq_len as i128 * cb.sq_len as i128);
    let final_ok = int_sq <= rn * rn * len_prod;
    let assembled_ok = sommes_ok && direct_le_sum && final_ok;
    if !assembled_ok {
        notes.push(format!(
            "assembled bound: sommes={sommes_ok} direct_le_sum={direct_le_sum} final={final_ok}"
        ));
    }

    // Failed is reserved for the sound chain; the same-torus det bound is
    // the sketch-level step and an unconfirmed instance is inconclusive,
    // like an unembeddable piece.
    let sound =
        piece_lengths_ok && sum_identity_ok && closure_ok && per_pair_ratio_ok && assembled_ok;
    let outcome = if !sound {
        CertOutcome::Failed
    } else if unembeddable > 0 || !pair_plus_one_ok {
        CertOutcome::Inconclusive
    } else {
        CertOutcome::Verified
    };
    Ok(PairCertificate {
        pair: (ca.id.clone(), cb.id.clone()),
        n,
        outcome,
        pieces: (pieces_a.len(), pieces_b.len()),
        unembeddable_pieces: unembeddable,
        piece_lengths_ok,
        sum_identity_ok,
        closure_ok,
        pair_plus_one_ok,
        cross_pair_plus_one_ok,
        per_pair_ratio_ok,
        assembled_ok,
        notes,
    })
}

/// Deterministically sample distinct non-special core pairs and certify
/// them.
pub fn certify_sample(
    session: &Session,
    pool: &[TracedCurve],
    n: i64,
    count: usize,
    seed: u64,
) -> Result<Vec<PairCertificate>, EngineError> {
    let cores: Vec<&TracedCurve> = pool
        .iter()
        .filter(|c| {
            c.kind == CurveKind::CylinderCore && !is_special_class(&session.origami, &session.vt, c)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut guard = 0;
    while out.len() < count && guard < count * 50 {
        guard += 1;
        if cores.len() < 2 {
            break;
        }
        let i = rng.gen_range(0..cores.len());
        let j = rng.gen_range(0..cores.len());
        if i == j {
            continue;
        }
        out.push(certify_pair(session, cores[i], cores[j], n)?);
    }
    Ok(out)
}

/// One row of the sweep over n.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub n: i64,
    pub max_sq_len: i64,
    pub pool_size: usize,
    pub estimate: Estimate,
    pub lower_num: i128,
    pub lower_den: i128,
    pub upper_u_decimal: f64,
    pub all_lemmas_pass: bool,
}

/// Default pool bound for the sweep.
pub fn default_sweep_bound(n: i64) -> i64 {
    let s = 3 * (n + 1);
    s * s
}

/// Summary of the lemma suites on one pool.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaSummary {
    pub inter_e1: LemmaResult,
    pub inter_f1: LemmaResult,
    pub inter_g: LemmaResult,
    pub inter_h: LemmaResult,
    pub short_curves: LemmaResult,
    pub sommes_trials: usize,
    pub sommes_failures: usize,
}

pub fn run_lemma_suite(
    session: &Session,
    pool: &[TracedCurve],
    n: i64,
    sommes_trials: usize,
    seed: u64,
) -> Result<LemmaSummary, EngineError> {
    let suite = random_sommes_suite(sommes_trials, seed);
    Ok(LemmaSummary {
        inter_e1: check_lemma_inter(pool, MarkedCurve::E1, n),
        inter_f1: check_lemma_inter(pool, MarkedCurve::F1, n),
        inter_g: check_lemma_inter(pool, MarkedCurve::G, n),
        inter_h: check_lemma_inter(pool, MarkedCurve::H, n),
        short_curves: check_lemma_short_curves(&session.origami, &session.vt, pool, n)?,
        sommes_trials,
        sommes_failures: suite.failures,
    })
}

impl LemmaSummary {
    pub fn all_pass(&self) -> bool {
        self.inter_e1.pass
            && self.inter_f1.pass
            && self.inter_g.pass
            && self.inter_h.pass
            && self.short_curves.pass
            && self.sommes_failures == 0
    }
}

/// Sweep L(n+1, n+1) over a range of n with the default bounds.
pub fn sweep(
    n_from: i64,
    n_to: i64,
    sommes_trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, EngineError> {
    let mut rows = Vec::new();
    for n in n_from..=n_to {
        let a = (n + 1) as usize;
        let session = Session::lshape(a, a)?;
        let bound = default_sweep_bound(n);
        let pool = session.pool(bound)?;
        let estimate = kvol_estimate(session.origami.volume() as i64, &pool)?;
        let lemmas = run_lemma_suite(&session, &pool, n, sommes_trials, seed)?;
        let u = upper_u(n);
        rows.push(SweepRow {
            n,
            max_sq_len: bound,
            pool_size: pool.len(),
            estimate,
            lower_num: 2 * n as i128 + 1,
            lower_den: n as i128,
            upper_u_decimal: (*u.numer() as f64) / (*u.denom() as f64),
            all_lemmas_pass: lemmas.all_pass(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn session(a: usize, b: usize) -> Session {
        Session::lshape(a, b).unwrap()
    }

    #[test]
    fn witness_pair_on_l33() {
        let s = session(3, 3);
        let pool = s.pool(4).unwrap();
        let est = kvol_estimate(5, &pool).unwrap();
        // ratio 5*1/(1*2) = 5/2, squared 25/4
        assert_eq!(est.ratio_sq(), Ratio::new(25, 4));
        assert!((est.decimal - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_curve_pool_estimates_zero() {
        let s = session(3, 3);
        let pool = s.pool(1).unwrap();
        let one = &pool[..1];
        let est = kvol_estimate(5, one).unwrap();
        assert_eq!(est.num_sq, 0);
        assert!(est.witness.is_empty());
    }

    #[test]
    fn empty_pool_is_an_error() {
        let s = session(3, 3);
        assert!(s.pool(0).is_err());
    }

    #[test]
    fn ratio_invariant_under_iteration() {
        // Int scales by k1 k2 and lengths scale by k1, k2: the ratio of a
        // pair is unchanged when curves are replaced by iterates.
        let x = HomologyClass([1, 0, 2, -1]);
        let y = HomologyClass([0, 3, -1, 1]);
        let base = int_form(x, y);
        for k1 in 1..4 {
            for k2 in 1..4 {
                assert_eq!(int_form(x * k1, y * k2), k1 * k2 * base);
            }
        }
    }

    #[test]
    fn lemma_inter_on_small_pools() {
        let s = session(4, 4);
        let pool = s.pool(36).unwrap();
        for m in [
            MarkedCurve::E1,
            MarkedCurve::F1,
            MarkedCurve::G,
            MarkedCurve::H,
        ] {
            let r = check_lemma_inter(&pool, m, 3);
            assert!(r.pass, "lemma fails for {:?}: {:?}", m, r.counterexamples);
        }
    }

    #[test]
    fn short_curve_census_l44() {
        let s = session(4, 4);
        let pool = s.pool(9).unwrap();
        let r = check_lemma_short_curves(&s.origami, &s.vt, &pool, 3).unwrap();
        assert!(r.pass, "unclassified: {:?}", r.counterexamples);
    }

    #[test]
    fn sommes_hand_cases() {
        let inst = SumLemmaInstance {
            a: vec![vec![rat(2, 1)]],
            b: vec![rat(1, 1)],
            c: vec![rat(1, 1)],
        };
        assert!(check_lemma_sommes(&inst).unwrap());
        let inst = SumLemmaInstance {
            a: vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)]],
            b: vec![rat(1, 1), rat(1, 1)],
            c: vec![rat(1, 1), rat(1, 1)],
        };
        assert!(check_lemma_sommes(&inst).unwrap());
        let bad = SumLemmaInstance {
            a: vec![vec![rat(1, 1)]],
            b: vec![rat(0, 1)],
            c: vec![rat(1, 1)],
        };
        assert!(check_lemma_sommes(&bad).is_err());
    }

    #[test]
    fn sommes_random_suite_passes() {
        let suite = random_sommes_suite(2000, 42);
        assert_eq!(suite.failures, 0);
    }

    #[test]
    fn upper_u_value_at_two() {
        // max(2.5, 5 * (1/3 + 1/4) * (9/4)) = 105/16 = 6.5625
        assert_eq!(upper_u(2), Ratio::new(105, 16));
    }

    #[test]
    fn cut_horizontal_core_single_piece() {
        let s = session(3, 3);
        let pool = s.pool(9).unwrap();
        // the bottom-row core: length 3, crosses f1 and f1' only
        let core = pool
            .iter()
            .find(|c| {
                c.kind == CurveKind::CylinderCore && c.dir.as_tuple() == (1, 0) && c.sq_len == 9
            })
            .unwrap();
        let pieces = cut_curve(&s.origami, core);
        assert_eq!(pieces.len(), 1);
        assert!(pieces[0].closed);
        assert_eq!(pieces[0].torus, Some(TorusSide::B));
        let hat = torus_class_and_length(&s.origami, &pieces[0]).unwrap();
        assert_eq!(hat.class.0.abs(), 1);
        assert_eq!(hat.class.1, 0);
        assert_eq!(hat.hat_sq_len, 9);
        assert_eq!(hat.closure_len, Rat::zero());
    }

    #[test]
    fn cut_diagonal_core_alternates() {
        let s = session(3, 3);
        let pool = s.pool(100).unwrap();
        let core = pool
            .iter()
            .find(|c| c.kind == CurveKind::CylinderCore && c.dir.as_tuple() == (1, 1))
            .expect("a diagonal core exists at bound 100");
        let pieces = cut_curve(&s.origami, core);
        assert!(pieces.len() >= 2);
        assert_eq!(pieces.len() % 2, 0, "pieces alternate between the tori");
        for w in pieces.windows(2) {
            assert_ne!(w[0].torus, w[1].torus);
        }
        let total: Rat = pieces.iter().map(|p| p.t_len).sum();
        assert_eq!(total, Rat::from_integer(core.multiplier));
    }

    #[test]
    fn cut_core_of_region_a_single_piece() {
        // a horizontal core inside region A never meets the marked curves
        let s = session(3, 3);
        let pool = s.pool(1).unwrap();
        let core = pool
            .iter()
            .find(|c| {
                c.kind == CurveKind::CylinderCore && c.dir.as_tuple() == (1, 0) && c.sq_len == 1
            })
            .unwrap();
        let pieces = cut_curve(&s.origami, core);
        assert_eq!(pieces.len(), 1);
        assert!(pieces[0].closed);
        assert!(pieces[0].internal_marks.is_empty());
        assert_eq!(pieces[0].torus, Some(TorusSide::A));
    }

    #[test]
    fn certify_diagonal_pair_on_l33() {
        let s = session(3, 3);
        let pool = s.pool(100).unwrap();
        let up = pool
            .iter()
            .find(|c| c.kind == CurveKind::CylinderCore && c.dir.as_tuple() == (1, 1))
            .unwrap();
        let down = pool
            .iter()
            .find(|c| c.kind == CurveKind::CylinderCore && c.dir.as_tuple() == (-1, 1))
            .unwrap();
        let cert = certify_pair(&s, up, down, 2).unwrap();
        assert_eq!(cert.outcome, CertOutcome::Verified, "{:?}", cert.notes);
        assert!(cert.sum_identity_ok && cert.closure_ok && cert.per_pair_ratio_ok);
    }

    #[test]
    fn certify_special_class_branch() {
        let s = session(3, 3);
        let pool = s.pool(4).unwrap();
        let e1 = pool.iter().find(|c| c.sq_len == 1).unwrap();
        let f2 = pool
            .iter()
            .find(|c| c.kind == CurveKind::SaddleConnection && c.sq_len == 4)
            .unwrap();
        let cert = certify_pair(&s, e1, f2, 2).unwrap();
        assert_eq!(cert.outcome, CertOutcome::SpecialClass);
    }
}
