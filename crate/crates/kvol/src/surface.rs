//! Square-tiled surfaces as permutation pairs and the L(a,b) family.
//!
//! A surface is `N` unit squares with a `right` and an `up` permutation
//! gluing each square to its neighbours. Vertices of the induced cell
//! structure are orbits of the "turn counterclockwise around the corner"
//! walk; their cone angles come out of the orbit lengths, with no floating
//! point involved.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::Rat;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("l-shape parameters must satisfy a >= 2 and b >= 2 (got a={a}, b={b})")]
    BadLShape { a: usize, b: usize },
    #[error("permutation is not a bijection on 1..={n}")]
    NotABijection { n: usize },
    #[error("right/up do not act transitively: surface is disconnected")]
    NotTransitive,
    #[error("operation requires an l-shape surface")]
    NotLShape,
    #[error("cannot parse origami file: {0}")]
    Parse(String),
}

/// Region tag for squares of an L-shape: `C` is the corner square, `B` the
/// rest of the bottom row, `A` the rest of the left column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    A,
    B,
    C,
}

/// Parameters of the L-shaped surface: `a` squares in the bottom row,
/// `b` squares in the left column, sharing the corner square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LShapeParams {
    pub a: usize,
    pub b: usize,
}

impl LShapeParams {
    pub fn new(a: usize, b: usize) -> Result<Self, SurfaceError> {
        if a < 2 || b < 2 {
            return Err(SurfaceError::BadLShape { a, b });
        }
        Ok(LShapeParams { a, b })
    }

    pub fn num_squares(&self) -> usize {
        self.a + self.b - 1
    }
}

/// Corner of a unit square. Order matters: it is the counterclockwise
/// order used by the vertex walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Corner {
    LL,
    LR,
    UR,
    UL,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::LL, Corner::LR, Corner::UR, Corner::UL];

    pub fn index(self) -> usize {
        match self {
            Corner::LL => 0,
            Corner::LR => 1,
            Corner::UR => 2,
            Corner::UL => 3,
        }
    }

    /// Local coordinates of the corner in its square.
    pub fn coords(self) -> (Rat, Rat) {
        let (x, y) = match self {
            Corner::LL => (0, 0),
            Corner::LR => (1, 0),
            Corner::UR => (1, 1),
            Corner::UL => (0, 1),
        };
        (Rat::from_integer(x), Rat::from_integer(y))
    }

    pub fn from_coords(x: Rat, y: Rat) -> Option<Corner> {
        let zero = Rat::zero();
        let one = Rat::from_integer(1);
        match ((x == zero, x == one), (y == zero, y == one)) {
            ((true, _), (true, _)) => Some(Corner::LL),
            ((_, true), (true, _)) => Some(Corner::LR),
            ((_, true), (_, true)) => Some(Corner::UR),
            ((true, _), (_, true)) => Some(Corner::UL),
            _ => None,
        }
    }
}

/// A point on the surface, held in the coordinates of one square.
/// `x` and `y` lie in [0,1]; boundary points have more than one
/// representation, `canonical` picks one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SurfacePoint {
    pub sq: usize,
    pub x: Rat,
    pub y: Rat,
}

impl SurfacePoint {
    pub fn new(sq: usize, x: Rat, y: Rat) -> Self {
        SurfacePoint { sq, x, y }
    }
}

impl fmt::Display for SurfacePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(sq {}, {}, {})", self.sq + 1, self.x, self.y)
    }
}

/// A square-tiled surface: `right[s]` is the square to the right of `s`,
/// `up[s]` the square above, both 0-indexed internally.
#[derive(Clone, Debug)]
pub struct Origami {
    n: usize,
    right: Vec<usize>,
    right_inv: Vec<usize>,
    up: Vec<usize>,
    up_inv: Vec<usize>,
    lshape: Option<LShapeParams>,
    labels: Option<Vec<Region>>,
}

impl Origami {
    pub fn new(right: Vec<usize>, up: Vec<usize>) -> Result<Self, SurfaceError> {
        let n = right.len();
        if n == 0 || up.len() != n {
            return Err(SurfaceError::NotABijection { n });
        }
        let right_inv = invert(&right).ok_or(SurfaceError::NotABijection { n })?;
        let up_inv = invert(&up).ok_or(SurfaceError::NotABijection { n })?;
        let o = Origami {
            n,
            right,
            right_inv,
            up,
            up_inv,
            lshape: None,
            labels: None,
        };
        if !o.is_connected() {
            return Err(SurfaceError::NotTransitive);
        }
        Ok(o)
    }

    pub fn num_squares(&self) -> usize {
        self.n
    }

    pub fn right(&self, s: usize) -> usize {
        self.right[s]
    }

    pub fn left(&self, s: usize) -> usize {
        self.right_inv[s]
    }

    pub fn up(&self, s: usize) -> usize {
        self.up[s]
    }

    pub fn down(&self, s: usize) -> usize {
        self.up_inv[s]
    }

    pub fn lshape(&self) -> Option<LShapeParams> {
        self.lshape
    }

    pub fn region(&self, s: usize) -> Option<Region> {
        self.labels.as_ref().map(|l| l[s])
    }

    /// Total flat area; every square has unit area.
    pub fn volume(&self) -> usize {
        self.n
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for t in [self.right[s], self.right_inv[s], self.up[s], self.up_inv[s]] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    /// Squares of the vertical strip (corner square plus left column) and
    /// the row index of each, for l-shapes.
    pub fn column_strip(&self) -> Option<Vec<usize>> {
        let p = self.lshape?;
        let mut strip = vec![0usize];
        strip.extend(p.a..p.num_squares());
        Some(strip)
    }

    /// Squares of the horizontal strip (the bottom row), for l-shapes.
    pub fn row_strip(&self) -> Option<Vec<usize>> {
        let p = self.lshape?;
        Some((0..p.a).collect())
    }

    /// Serialize in the origami text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("squares: {}\n", self.n);
        out.push_str(&format!("right: {}\n", cycles_to_string(&self.right)));
        out.push_str(&format!("up: {}\n", cycles_to_string(&self.up)));
        if let Some(p) = self.lshape {
            out.push_str(&format!("lshape: {} {}\n", p.a, p.b));
        }
        out
    }

    /// Parse the origami text format (`squares:`, `right:`, `up:` lines,
    /// optional `lshape: a b`).
    pub fn from_text(text: &str) -> Result<Self, SurfaceError> {
        let mut n = None;
        let mut right = None;
        let mut up = None;
        let mut lshape = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| {
                SurfaceError::Parse(format!("expected `key: value`, got {line:?}"))
            })?;
            let value = value.trim();
            match key.trim() {
                "squares" => {
                    n = Some(value.parse::<usize>().map_err(|e| {
                        SurfaceError::Parse(format!("bad square count {value:?}: {e}"))
                    })?)
                }
                "right" => right = Some(value.to_string()),
                "up" => up = Some(value.to_string()),
                "lshape" => {
                    let mut it = value.split_whitespace();
                    let a = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| SurfaceError::Parse("bad lshape line".into()))?;
                    let b = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| SurfaceError::Parse("bad lshape line".into()))?;
                    lshape = Some(LShapeParams::new(a, b)?);
                }
                other => return Err(SurfaceError::Parse(format!("unknown key {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| SurfaceError::Parse("missing `squares:` line".into()))?;
        let right = parse_cycles(
            &right.ok_or_else(|| SurfaceError::Parse("missing `right:`".into()))?,
            n,
        )?;
        let up = parse_cycles(
            &up.ok_or_else(|| SurfaceError::Parse("missing `up:`".into()))?,
            n,
        )?;
        let mut o = Origami::new(right, up)?;
        if let Some(p) = lshape {
            let expect = build_l_shape(p)?;
            if expect.right != o.right || expect.up != o.up {
                return Err(SurfaceError::Parse(
                    "lshape tag does not match the permutation data".into(),
                ));
            }
            o.lshape = expect.lshape;
            o.labels = expect.labels;
        }
        Ok(o)
    }
}

fn invert(p: &[usize]) -> Option<Vec<usize>> {
    let n = p.len();
    let mut inv = vec![usize::MAX; n];
    for (i, &v) in p.iter().enumerate() {
        if v >= n || inv[v] != usize::MAX {
            return None;
        }
        inv[v] = i;
    }
    Some(inv)
}

fn cycles_to_string(p: &[usize]) -> String {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut out = String::new();
    for start in 0..n {
        if seen[start] || p[start] == start {
            seen[start] = true;
            continue;
        }
        let mut cyc = vec![start];
        seen[start] = true;
        let mut cur = p[start];
        while cur != start {
            seen[cur] = true;
            cyc.push(cur);
            cur = p[cur];
        }
        out.push('(');
        out.push_str(
            &cyc.iter()
                .map(|s| (s + 1).to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        out.push(')');
    }
    if out.is_empty() {
        out.push_str("()");
    }
    out
}

fn parse_cycles(text: &str, n: usize) -> Result<Vec<usize>, SurfaceError> {
    let mut p: Vec<usize> = (0..n).collect();
    let text = text.trim();
    if text == "()" || text == "id" {
        return Ok(p);
    }
    let mut rest = text;
    while !rest.is_empty() {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        if !rest.starts_with('(') {
            return Err(SurfaceError::Parse(format!(
                "expected '(' in cycles: {rest:?}"
            )));
        }
        let close = rest
            .find(')')
            .ok_or_else(|| SurfaceError::Parse("unbalanced parenthesis in cycles".into()))?;
        let body = &rest[1..close];
        rest = &rest[close + 1..];
        let items: Result<Vec<usize>, _> = body
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect();
        let items = items.map_err(|e| SurfaceError::Parse(format!("bad cycle entry: {e}")))?;
        if items.iter().any(|&v| v == 0 || v > n) {
            return Err(SurfaceError::Parse(format!(
                "cycle entry out of range 1..={n}"
            )));
        }
        for w in 0..items.len() {
            let from = items[w] - 1;
            let to = items[(w + 1) % items.len()] - 1;
            p[from] = to;
        }
    }
    Ok(p)
}

/// Build the L(a,b) origami: bottom row squares 1..a right-cyclic, left
/// column squares 1, a+1, ..., a+b-1 up-cyclic. Square 1 is region C, the
/// rest of the bottom row region B, the column region A.
pub fn build_l_shape(params: LShapeParams) -> Result<Origami, SurfaceError> {
    let LShapeParams { a, b } = params;
    if a < 2 || b < 2 {
        return Err(SurfaceError::BadLShape { a, b });
    }
    let n = a + b - 1;
    let mut right: Vec<usize> = (0..n).collect();
    let mut up: Vec<usize> = (0..n).collect();
    for (s, r) in right.iter_mut().enumerate().take(a) {
        *r = (s + 1) % a;
    }
    up[0] = a;
    for k in 0..(b - 1) {
        up[a + k] = if k + 1 < b - 1 { a + k + 1 } else { 0 };
    }
    let mut labels = vec![Region::B; n];
    labels[0] = Region::C;
    for l in labels.iter_mut().take(n).skip(a) {
        *l = Region::A;
    }
    let mut o = Origami::new(right, up)?;
    o.lshape = Some(params);
    o.labels = Some(labels);
    Ok(o)
}

/// Vertex structure of the square complex: every (square, corner) pair is
/// assigned a vertex; each vertex knows its quadrant cycle in
/// counterclockwise order and its cone angle as a multiple of 2*pi.
#[derive(Clone, Debug)]
pub struct VertexTable {
    vertex_of: Vec<[usize; 4]>,
    vertices: Vec<Vertex>,
    cone: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Vertex {
    /// Quadrants around the vertex in ccw order; entry k covers total
    /// angle [k*pi/2, (k+1)*pi/2).
    pub cycle: Vec<(usize, Corner)>,
    /// Cone angle divided by 2*pi.
    pub angle_multiple: usize,
    /// Smallest square having this vertex as lower-left corner.
    pub rep_square: usize,
}

impl VertexTable {
    pub fn build(o: &Origami) -> VertexTable {
        let n = o.num_squares();
        let mut vertex_of = vec![[usize::MAX; 4]; n];
        let mut vertices = Vec::new();
        for s in 0..n {
            for c in Corner::ALL {
                if vertex_of[s][c.index()] != usize::MAX {
                    continue;
                }
                let id = vertices.len();
                let mut cycle = Vec::new();
                let (mut cs, mut cc) = (s, c);
                loop {
                    vertex_of[cs][cc.index()] = id;
                    cycle.push((cs, cc));
                    let (ns, nc) = next_ccw(o, cs, cc);
                    if (ns, nc) == (s, c) {
                        break;
                    }
                    (cs, cc) = (ns, nc);
                }
                debug_assert_eq!(cycle.len() % 4, 0);
                let rep_square = cycle
                    .iter()
                    .filter(|(_, c)| *c == Corner::LL)
                    .map(|(s, _)| *s)
                    .min()
                    .expect("every vertex has a lower-left representative");
                vertices.push(Vertex {
                    angle_multiple: cycle.len() / 4,
                    cycle,
                    rep_square,
                });
            }
        }
        let cones: Vec<usize> = vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.angle_multiple > 1)
            .map(|(i, _)| i)
            .collect();
        let cone = match cones.as_slice() {
            [single] if vertices[*single].angle_multiple == 3 => Some(*single),
            _ => None,
        };
        VertexTable {
            vertex_of,
            vertices,
            cone,
        }
    }

    pub fn vertex_id(&self, sq: usize, corner: Corner) -> usize {
        self.vertex_of[sq][corner.index()]
    }

    pub fn vertex(&self, id: usize) -> &Vertex {
        &self.vertices[id]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Id of the single 6*pi cone point, when the surface is in H(2).
    pub fn cone_id(&self) -> Option<usize> {
        self.cone
    }

    pub fn is_cone(&self, sq: usize, corner: Corner) -> bool {
        Some(self.vertex_id(sq, corner)) == self.cone
    }

    /// Position of a quadrant in its vertex cycle.
    pub fn quadrant_pos(&self, sq: usize, corner: Corner) -> usize {
        let v = &self.vertices[self.vertex_id(sq, corner)];
        v.cycle
            .iter()
            .position(|&(s, c)| (s, c) == (sq, corner))
            .expect("quadrant belongs to its vertex cycle")
    }
}

/// One step of the ccw walk around the vertex at the given corner.
fn next_ccw(o: &Origami, s: usize, c: Corner) -> (usize, Corner) {
    match c {
        Corner::LL => (o.left(s), Corner::LR),
        Corner::LR => (o.down(s), Corner::UR),
        Corner::UR => (o.right(s), Corner::UL),
        Corner::UL => (o.up(s), Corner::LL),
    }
}

/// Cone data of a validated origami.
#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    /// (representative point, cone angle as a multiple of 2*pi), sorted by
    /// decreasing angle then representative square.
    pub vertices: Vec<(usize, usize)>,
    pub genus: i64,
    pub in_h2: bool,
}

/// Check the origami invariants and compute its cone points.
pub fn validate(o: &Origami) -> Result<(ConeReport, VertexTable), SurfaceError> {
    if !o.is_connected() {
        return Err(SurfaceError::NotTransitive);
    }
    let vt = VertexTable::build(o);
    let mut vertices: Vec<(usize, usize)> = vt
        .vertices()
        .iter()
        .map(|v| (v.rep_square, v.angle_multiple))
        .collect();
    vertices.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let excess: i64 = vertices.iter().map(|&(_, k)| k as i64 - 1).sum();
    debug_assert_eq!(excess % 2, 0);
    let genus = (excess + 2) / 2;
    let in_h2 = vertices.iter().filter(|&&(_, k)| k == 3).count() == 1
        && vertices.iter().all(|&(_, k)| k == 3 || k == 1);
    Ok((
        ConeReport {
            vertices,
            genus,
            in_h2,
        },
        vt,
    ))
}

/// Named marked curve on an l-shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MarkedCurve {
    E1,
    E1Prime,
    E2,
    F1,
    F1Prime,
    F2,
    G,
    H,
}

impl MarkedCurve {
    pub const ALL: [MarkedCurve; 8] = [
        MarkedCurve::E1,
        MarkedCurve::E1Prime,
        MarkedCurve::E2,
        MarkedCurve::F1,
        MarkedCurve::F1Prime,
        MarkedCurve::F2,
        MarkedCurve::G,
        MarkedCurve::H,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MarkedCurve::E1 => "e1",
            MarkedCurve::E1Prime => "e1'",
            MarkedCurve::E2 => "e2",
            MarkedCurve::F1 => "f1",
            MarkedCurve::F1Prime => "f1'",
            MarkedCurve::F2 => "f2",
            MarkedCurve::G => "g",
            MarkedCurve::H => "h",
        }
    }

    pub fn parse(name: &str) -> Option<MarkedCurve> {
        match name {
            "e1" => Some(MarkedCurve::E1),
            "e1'" | "e1p" => Some(MarkedCurve::E1Prime),
            "e2" => Some(MarkedCurve::E2),
            "f1" => Some(MarkedCurve::F1),
            "f1'" | "f1p" => Some(MarkedCurve::F1Prime),
            "f2" => Some(MarkedCurve::F2),
            "g" => Some(MarkedCurve::G),
            "h" => Some(MarkedCurve::H),
            _ => None,
        }
    }
}

/// Exact segment description of one marked locus.
#[derive(Clone, Debug)]
pub struct Locus {
    pub segments: Vec<(SurfacePoint, SurfacePoint)>,
    pub sq_len: i64,
}

/// Table of the marked loci of an l-shape together with the singular point.
#[derive(Clone, Debug)]
pub struct LocusTable {
    pub loci: BTreeMap<MarkedCurve, Locus>,
    pub singular: SurfacePoint,
}

/// Exact endpoints of the marked curves e1, e1', e2, f1, f1', f2, g, h and
/// the position of the singular point.
pub fn marked_loci(o: &Origami) -> Result<LocusTable, SurfaceError> {
    let p = o.lshape().ok_or(SurfaceError::NotLShape)?;
    let (a, b) = (p.a, p.b);
    let seg = |sq: usize, x0: i64, y0: i64, x1: i64, y1: i64| {
        (
            SurfacePoint::new(sq, Rat::from_integer(x0), Rat::from_integer(y0)),
            SurfacePoint::new(sq, Rat::from_integer(x1), Rat::from_integer(y1)),
        )
    };
    let mut loci = BTreeMap::new();
    loci.insert(
        MarkedCurve::E1,
        Locus {
            segments: vec![seg(0, 0, 0, 1, 0)],
            sq_len: 1,
        },
    );
    loci.insert(
        MarkedCurve::E1Prime,
        Locus {
            segments: vec![seg(a, 0, 0, 1, 0)],
            sq_len: 1,
        },
    );
    loci.insert(
        MarkedCurve::E2,
        Locus {
            segments: (1..a).map(|s| seg(s, 0, 0, 1, 0)).collect(),
            sq_len: (a as i64 - 1) * (a as i64 - 1),
        },
    );
    loci.insert(
        MarkedCurve::F1,
        Locus {
            segments: vec![seg(0, 0, 0, 0, 1)],
            sq_len: 1,
        },
    );
    loci.insert(
        MarkedCurve::F1Prime,
        Locus {
            segments: vec![seg(1, 0, 0, 0, 1)],
            sq_len: 1,
        },
    );
    loci.insert(
        MarkedCurve::F2,
        Locus {
            segments: (a..a + b - 1).map(|s| seg(s, 0, 0, 0, 1)).collect(),
            sq_len: (b as i64 - 1) * (b as i64 - 1),
        },
    );
    loci.insert(
        MarkedCurve::G,
        Locus {
            segments: vec![seg(0, 0, 1, 1, 0)],
            sq_len: 2,
        },
    );
    loci.insert(
        MarkedCurve::H,
        Locus {
            segments: vec![seg(0, 0, 0, 1, 1)],
            sq_len: 2,
        },
    );
    Ok(LocusTable {
        loci,
        singular: SurfacePoint::new(0, Rat::zero(), Rat::zero()),
    })
}

/// Canonical representation of a point per the storage convention: shared
/// edges live in the square where they are the bottom or left edge, grid
/// vertices in the smallest square having them as lower-left corner.
pub fn canonical_point(o: &Origami, vt: &VertexTable, pt: SurfacePoint) -> SurfacePoint {
    let one = Rat::from_integer(1);
    let zero = Rat::zero();
    let SurfacePoint {
        mut sq,
        mut x,
        mut y,
    } = pt;
    let on_x = x == zero || x == one;
    let on_y = y == zero || y == one;
    if on_x && on_y {
        let corner = Corner::from_coords(x, y).expect("corner coordinates");
        let v = vt.vertex(vt.vertex_id(sq, corner));
        return SurfacePoint::new(v.rep_square, zero, zero);
    }
    if x == one {
        sq = o.right(sq);
        x = zero;
    }
    if y == one {
        sq = o.up(sq);
        y = zero;
    }
    SurfacePoint::new(sq, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm_of(o: &Origami, which: &str) -> Vec<usize> {
        let n = o.num_squares();
        (0..n)
            .map(|s| match which {
                "right" => o.right(s),
                _ => o.up(s),
            })
            .collect()
    }

    #[test]
    fn l33_permutations() {
        let o = build_l_shape(LShapeParams::new(3, 3).unwrap()).unwrap();
        assert_eq!(o.num_squares(), 5);
        // right = (1 2 3)(4)(5), up = (1 4 5)(2)(3) in 1-indexed cycles
        assert_eq!(perm_of(&o, "right"), vec![1, 2, 0, 3, 4]);
        assert_eq!(perm_of(&o, "up"), vec![3, 1, 2, 4, 0]);
        assert_eq!(o.region(0), Some(Region::C));
        assert_eq!(o.region(1), Some(Region::B));
        assert_eq!(o.region(2), Some(Region::B));
        assert_eq!(o.region(3), Some(Region::A));
        assert_eq!(o.region(4), Some(Region::A));
    }

    #[test]
    fn l22_and_l42_permutations() {
        let o = build_l_shape(LShapeParams::new(2, 2).unwrap()).unwrap();
        assert_eq!(o.num_squares(), 3);
        assert_eq!(perm_of(&o, "right"), vec![1, 0, 2]);
        assert_eq!(perm_of(&o, "up"), vec![2, 1, 0]);

        let o = build_l_shape(LShapeParams::new(4, 2).unwrap()).unwrap();
        assert_eq!(o.num_squares(), 5);
        assert_eq!(perm_of(&o, "right"), vec![1, 2, 3, 0, 4]);
        assert_eq!(perm_of(&o, "up"), vec![4, 1, 2, 3, 0]);
    }

    #[test]
    fn rejects_degenerate_lshape() {
        assert!(LShapeParams::new(1, 3).is_err());
        assert!(LShapeParams::new(3, 1).is_err());
        assert!(build_l_shape(LShapeParams { a: 1, b: 3 }).is_err());
    }

    #[test]
    fn l33_has_one_cone_of_angle_6pi() {
        let o = build_l_shape(LShapeParams::new(3, 3).unwrap()).unwrap();
        let (report, vt) = validate(&o).unwrap();
        assert!(report.in_h2);
        assert_eq!(report.genus, 2);
        let angles: Vec<usize> = report.vertices.iter().map(|&(_, k)| k).collect();
        assert_eq!(angles, vec![3, 1, 1]);
        let cone = vt.cone_id().unwrap();
        assert_eq!(vt.vertex(cone).cycle.len(), 12);
        // Every corner of the corner square is the singular point.
        for c in Corner::ALL {
            assert!(vt.is_cone(0, c));
        }
    }

    #[test]
    fn torus_is_not_in_h2() {
        let o = Origami::new(vec![0], vec![0]).unwrap();
        let (report, _) = validate(&o).unwrap();
        assert!(!report.in_h2);
        assert_eq!(report.genus, 1);
        assert_eq!(report.vertices, vec![(0, 1)]);
    }

    #[test]
    fn l55_euler_characteristic_by_independent_route() {
        // Independent count: glue corners with union-find driven directly by
        // the edge identifications, then compare V - E + F.
        let o = build_l_shape(LShapeParams::new(5, 5).unwrap()).unwrap();
        let n = o.num_squares();
        let mut parent: Vec<usize> = (0..4 * n).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            if p[i] != i {
                let r = find(p, p[i]);
                p[i] = r;
            }
            p[i]
        }
        let union = |p: &mut Vec<usize>, i: usize, j: usize| {
            let (ri, rj) = (find(p, i), find(p, j));
            if ri != rj {
                p[ri] = rj;
            }
        };
        let idx = |s: usize, c: Corner| 4 * s + c.index();
        for s in 0..n {
            let r = o.right(s);
            union(&mut parent, idx(s, Corner::LR), idx(r, Corner::LL));
            union(&mut parent, idx(s, Corner::UR), idx(r, Corner::UL));
            let u = o.up(s);
            union(&mut parent, idx(s, Corner::UL), idx(u, Corner::LL));
            union(&mut parent, idx(s, Corner::UR), idx(u, Corner::LR));
        }
        let mut roots: Vec<usize> = (0..4 * n).map(|i| find(&mut parent, i)).collect();
        roots.sort_unstable();
        roots.dedup();
        let v = roots.len() as i64;
        let chi = v - 2 * n as i64 + n as i64;
        assert_eq!(chi, -2);

        let (report, _) = validate(&o).unwrap();
        assert_eq!(report.vertices.len() as i64, v);
        assert!(report.in_h2);
        assert_eq!(report.genus, 2);
    }

    #[test]
    fn volume_is_square_count() {
        for (a, b) in [(3, 3), (2, 2), (7, 7), (4, 2)] {
            let o = build_l_shape(LShapeParams::new(a, b).unwrap()).unwrap();
            assert_eq!(o.volume(), a + b - 1);
        }
    }

    #[test]
    fn every_lshape_has_one_6pi_cone() {
        for a in 2..8 {
            for b in 2..8 {
                let o = build_l_shape(LShapeParams::new(a, b).unwrap()).unwrap();
                let (report, _) = validate(&o).unwrap();
                assert!(report.in_h2, "L({a},{b})");
                assert_eq!(report.genus, 2);
                assert_eq!(report.vertices.iter().filter(|&&(_, k)| k == 3).count(), 1);
            }
        }
    }

    #[test]
    fn composite_orbit_regression() {
        // right∘up and up∘right on fixed small cases, as forced by the gluing.
        let o = build_l_shape(LShapeParams::new(3, 3).unwrap()).unwrap();
        let ru: Vec<usize> = (0..5).map(|s| o.right(o.up(s))).collect();
        let ur: Vec<usize> = (0..5).map(|s| o.up(o.right(s))).collect();
        assert_eq!(ru, vec![3, 2, 0, 4, 1]);
        assert_eq!(ur, vec![1, 2, 3, 4, 0]);
    }

    #[test]
    fn marked_loci_lengths() {
        for (a, b) in [(3usize, 3usize), (4, 2), (5, 5)] {
            let o = build_l_shape(LShapeParams::new(a, b).unwrap()).unwrap();
            let table = marked_loci(&o).unwrap();
            let sq = |m: MarkedCurve| table.loci[&m].sq_len;
            assert_eq!(sq(MarkedCurve::E1), 1);
            assert_eq!(sq(MarkedCurve::F1), 1);
            assert_eq!(sq(MarkedCurve::E1Prime), 1);
            assert_eq!(sq(MarkedCurve::F1Prime), 1);
            assert_eq!(sq(MarkedCurve::E2), ((a - 1) * (a - 1)) as i64);
            assert_eq!(sq(MarkedCurve::F2), ((b - 1) * (b - 1)) as i64);
            assert_eq!(sq(MarkedCurve::G), 2);
            assert_eq!(sq(MarkedCurve::H), 2);
        }
    }

    #[test]
    fn marked_loci_requires_lshape() {
        let o = Origami::new(vec![0], vec![0]).unwrap();
        assert!(marked_loci(&o).is_err());
    }

    #[test]
    fn l33_f2_is_left_edges_of_region_a() {
        let o = build_l_shape(LShapeParams::new(3, 3).unwrap()).unwrap();
        let table = marked_loci(&o).unwrap();
        let f2 = &table.loci[&MarkedCurve::F2];
        let squares: Vec<usize> = f2.segments.iter().map(|(p, _)| p.sq).collect();
        assert_eq!(squares, vec![3, 4]);
        assert_eq!(f2.sq_len, 4);
    }

    #[test]
    fn text_format_round_trip() {
        let o = build_l_shape(LShapeParams::new(3, 3).unwrap()).unwrap();
        let text = o.to_text();
        assert!(text.contains("squares: 5"));
        assert!(text.contains("right: (1 2 3)"));
        assert!(text.contains("up: (1 4 5)"));
        assert!(text.contains("lshape: 3 3"));
        let o2 = Origami::from_text(&text).unwrap();
        assert_eq!(o2.to_text(), text);
    }

    #[test]
    fn parse_rejects_bad_data() {
        assert!(Origami::from_text("right: (1 2)\nup: (1 2)").is_err());
        assert!(Origami::from_text("squares: 2\nright: (1 2)\nup: (1 3)").is_err());
        // not transitive: two disjoint tori
        assert!(Origami::from_text("squares: 2\nright: ()\nup: ()").is_err());
    }
}
