//! The two flat tori obtained by regluing the strips of an l-shape.
//!
//! T_A is the vertical strip (corner square plus the left column) with
//! opposite sides glued: a 1 x b torus. T_B is the bottom row: a x 1.
//! Classes are integer pairs (horizontal wraps, vertical wraps).

use serde::Serialize;

use crate::surface::{LShapeParams, Origami};
use crate::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TorusSide {
    A,
    B,
}

impl TorusSide {
    pub fn name(&self) -> &'static str {
        match self {
            TorusSide::A => "A",
            TorusSide::B => "B",
        }
    }
}

/// One of the two strip tori of an l-shape.
#[derive(Clone, Copy, Debug)]
pub struct TorusModel {
    pub side: TorusSide,
    pub params: LShapeParams,
}

impl TorusModel {
    pub fn new(side: TorusSide, params: LShapeParams) -> TorusModel {
        TorusModel { side, params }
    }

    /// Flat area: b for T_A, a for T_B.
    pub fn area(&self) -> i64 {
        match self.side {
            TorusSide::A => self.params.b as i64,
            TorusSide::B => self.params.a as i64,
        }
    }

    /// Horizontal and vertical periods of the lattice.
    pub fn periods(&self) -> (i64, i64) {
        match self.side {
            TorusSide::A => (1, self.params.b as i64),
            TorusSide::B => (self.params.a as i64, 1),
        }
    }

    /// Offset of a strip square inside the torus chart, or None when the
    /// square is outside the strip.
    pub fn square_offset(&self, o: &Origami, sq: usize) -> Option<(i64, i64)> {
        let a = self.params.a;
        match self.side {
            TorusSide::A => {
                if sq == 0 {
                    Some((0, 0))
                } else if sq >= a && sq < o.num_squares() {
                    Some((0, (sq - a + 1) as i64))
                } else {
                    None
                }
            }
            TorusSide::B => {
                if sq < a {
                    Some((sq as i64, 0))
                } else {
                    None
                }
            }
        }
    }

    /// Chart coordinates of a surface point of the strip.
    pub fn embed(&self, o: &Origami, sq: usize, x: Rat, y: Rat) -> Option<(Rat, Rat)> {
        let (ox, oy) = self.square_offset(o, sq)?;
        Some((x + Rat::from_integer(ox), y + Rat::from_integer(oy)))
    }

    /// Squared length of the geodesic in class (p, q).
    pub fn class_sq_len(&self, class: (i64, i64)) -> i64 {
        let (px, py) = self.periods();
        let vx = class.0 * px;
        let vy = class.1 * py;
        vx * vx + vy * vy
    }
}

/// Algebraic intersection of two torus classes.
pub fn torus_intersection(c1: (i64, i64), c2: (i64, i64)) -> i64 {
    c1.0 * c2.1 - c2.0 * c1.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_l_shape, LShapeParams};

    #[test]
    fn areas_and_lengths() {
        let p = LShapeParams::new(3, 3).unwrap();
        let ta = TorusModel::new(TorusSide::A, p);
        let tb = TorusModel::new(TorusSide::B, p);
        assert_eq!(ta.area(), 3);
        assert_eq!(tb.area(), 3);
        // vertical generator of the 1 x 3 torus has squared length 9
        assert_eq!(ta.class_sq_len((0, 1)), 9);
        assert_eq!(ta.class_sq_len((1, 0)), 1);
        assert_eq!(tb.class_sq_len((1, 0)), 9);
        assert_eq!(tb.class_sq_len((0, 1)), 1);
    }

    #[test]
    fn generators_intersect_once() {
        assert_eq!(torus_intersection((1, 0), (0, 1)), 1);
        assert_eq!(torus_intersection((0, 1), (1, 0)), -1);
        assert_eq!(torus_intersection((2, 3), (2, 3)), 0);
    }

    #[test]
    fn torus_inequality_brute_force() {
        // area^2 * Int^2 <= l1^2 * l2^2 over all classes with |p|, |q| <= 10
        for n in 2..=6i64 {
            let p = LShapeParams::new((n + 1) as usize, (n + 1) as usize).unwrap();
            for side in [TorusSide::A, TorusSide::B] {
                let t = TorusModel::new(side, p);
                let area = t.area();
                for p1 in -10..=10i64 {
                    for q1 in -10..=10i64 {
                        for p2 in -10..=10i64 {
                            for q2 in -10..=10i64 {
                                let int = torus_intersection((p1, q1), (p2, q2));
                                let l1 = t.class_sq_len((p1, q1));
                                let l2 = t.class_sq_len((p2, q2));
                                assert!(
                                    (area * area) as i128 * (int * int) as i128
                                        <= l1 as i128 * l2 as i128
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn strip_offsets() {
        let p = LShapeParams::new(3, 3).unwrap();
        let o = build_l_shape(p).unwrap();
        let ta = TorusModel::new(TorusSide::A, p);
        assert_eq!(ta.square_offset(&o, 0), Some((0, 0)));
        assert_eq!(ta.square_offset(&o, 3), Some((0, 1)));
        assert_eq!(ta.square_offset(&o, 4), Some((0, 2)));
        assert_eq!(ta.square_offset(&o, 1), None);
        let tb = TorusModel::new(TorusSide::B, p);
        assert_eq!(tb.square_offset(&o, 2), Some((2, 0)));
        assert_eq!(tb.square_offset(&o, 4), None);
    }
}
