//! Exact geometry on L-shaped square-tiled translation surfaces.
//!
//! The crate models a surface as a pair of permutations on unit squares,
//! traces straight-line geodesics with rational arithmetic, computes
//! algebraic intersection numbers (including the sign rule at the conical
//! point), and estimates the scale-invariant quantity
//! `KVol = Vol * sup Int(a,b) / (l(a) l(b))` over a finite pool of closed
//! geodesics. Everything on the comparison path is integer or rational;
//! square roots only appear when printing decimals.

pub mod engine;
pub mod homology;
pub mod intersect;
pub mod report;
pub mod surface;
pub mod torus;
pub mod tracer;

/// Exact scalar used for coordinates along traces.
pub type Rat = num_rational::Ratio<i64>;

pub use homology::HomologyClass;
pub use surface::{LShapeParams, Origami, SurfacePoint};
pub use tracer::{Direction, TracedCurve};

pub(crate) fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n, d)
}
