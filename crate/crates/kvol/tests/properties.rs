//! Property tests for the exactness and symmetry invariants.

use proptest::prelude::*;

use kvol::homology::{int_form, HomologyClass};
use kvol::intersect::geometric_intersection;
use kvol::surface::{build_l_shape, canonical_point, validate, LShapeParams, Origami};
use kvol::tracer::{step, FlowState, StepOutcome};
use kvol::Rat;

fn lshape_strategy() -> impl Strategy<Value = (usize, usize)> {
    (2usize..7, 2usize..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_format_round_trips((a, b) in lshape_strategy()) {
        let o = build_l_shape(LShapeParams::new(a, b).unwrap()).unwrap();
        let text = o.to_text();
        let back = Origami::from_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn random_origami_round_trips(perm1 in proptest::sample::subsequence((0usize..6).collect::<Vec<_>>(), 6), seed in 0u64..1000) {
        // build a random connected origami on 6 squares from two shuffles
        let _ = perm1;
        let mut rng_state = seed;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 33) as usize
        };
        let mut right: Vec<usize> = (0..6).collect();
        let mut up: Vec<usize> = (0..6).collect();
        for i in (1..6).rev() {
            right.swap(i, next() % (i + 1));
            up.swap(i, next() % (i + 1));
        }
        if let Ok(o) = Origami::new(right, up) {
            let text = o.to_text();
            let back = Origami::from_text(&text).unwrap();
            prop_assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn flow_reverses_exactly(
        (a, b) in lshape_strategy(),
        p in -5i64..=5,
        q in 0i64..=5,
        sq_pick in 0usize..100,
        num in 1i64..7,
        steps in 1usize..25,
    ) {
        prop_assume!(p != 0 || q > 0);
        let o = build_l_shape(LShapeParams::new(a, b).unwrap()).unwrap();
        let (_, vt) = validate(&o).unwrap();
        let sq = sq_pick % o.num_squares();
        let d = (p, q.max(if p == 0 { 1 } else { 0 }));
        // start on an edge with the direction pointing into the square
        let start = if d.0 > 0 {
            FlowState::new(sq, Rat::new(0, 1), Rat::new(num, 7))
        } else if d.0 < 0 {
            FlowState::new(sq, Rat::new(1, 1), Rat::new(num, 7))
        } else {
            FlowState::new(sq, Rat::new(num, 7), Rat::new(0, 1))
        };

        let mut state = start;
        let mut segs = Vec::new();
        for _ in 0..steps {
            match step(&o, &vt, state, d) {
                StepOutcome::Continue { seg, next } => {
                    segs.push(seg);
                    state = next;
                }
                StepOutcome::HitSingularity { .. } => break,
            }
        }
        prop_assume!(!segs.is_empty());
        let last = segs.last().unwrap().clone();
        let mut rev = FlowState::new(last.sq, last.exit.0, last.exit.1);
        let back = (-d.0, -d.1);
        for expect in segs.iter().rev() {
            match step(&o, &vt, rev, back) {
                StepOutcome::Continue { seg, next } => {
                    prop_assert_eq!(seg.sq, expect.sq);
                    prop_assert_eq!(seg.entry, expect.exit);
                    prop_assert_eq!(seg.exit, expect.entry);
                    rev = next;
                }
                StepOutcome::HitSingularity { seg, .. } => {
                    prop_assert_eq!(seg.exit, expect.entry);
                }
            }
        }
        prop_assert_eq!(
            canonical_point(&o, &vt, rev.point()),
            canonical_point(&o, &vt, start.point())
        );
    }

    #[test]
    fn form_is_antisymmetric_and_bilinear(
        x in proptest::array::uniform4(-5i64..=5),
        y in proptest::array::uniform4(-5i64..=5),
        k in -3i64..=3,
    ) {
        let cx = HomologyClass(x);
        let cy = HomologyClass(y);
        prop_assert_eq!(int_form(cx, cy), -int_form(cy, cx));
        prop_assert_eq!(int_form(cx, cx), 0);
        prop_assert_eq!(int_form(cx * k, cy), k * int_form(cx, cy));
        prop_assert_eq!(int_form(cx + cy, cy), int_form(cx, cy));
    }
}

#[test]
fn geometric_antisymmetry_over_a_pool() {
    use kvol::engine::Session;
    let s = Session::lshape(3, 3).unwrap();
    let pool = s.pool(16).unwrap();
    for i in 0..pool.len() {
        for j in (i + 1)..pool.len() {
            let ab = geometric_intersection(&s.origami, &s.vt, &pool[i], &pool[j]);
            let ba = geometric_intersection(&s.origami, &s.vt, &pool[j], &pool[i]);
            match (ab, ba) {
                (Ok(x), Ok(y)) => assert_eq!(x, -y, "{} vs {}", pool[i].id, pool[j].id),
                (Err(_), Err(_)) => {}
                _ => panic!("asymmetric degeneracy"),
            }
        }
    }
}
