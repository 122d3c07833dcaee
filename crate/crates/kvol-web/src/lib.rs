//! Browser demo for the L-shaped surfaces: renders the surface with its
//! marked curves, the cylinder decomposition in a chosen direction, and the
//! KVol report, all as strings the page can drop into the DOM.

use wasm_bindgen::prelude::wasm_bindgen;

use kvol::engine::{kvol_estimate, run_lemma_suite, Session};
use kvol::report;
use kvol::surface::{marked_loci, MarkedCurve};
use kvol::tracer::{cylinders_in_direction, Direction, TracedCurve};
use kvol::Rat;

const SCALE: f64 = 64.0;
const MARGIN: f64 = 14.0;

struct Canvas {
    a: usize,
    b: usize,
    body: String,
}

impl Canvas {
    fn new(a: usize, b: usize) -> Canvas {
        Canvas {
            a,
            b,
            body: String::new(),
        }
    }

    /// Grid cell of a square: bottom row first, then the column.
    fn cell(&self, sq: usize) -> (f64, f64) {
        if sq < self.a {
            (sq as f64, 0.0)
        } else {
            (0.0, (sq - self.a + 1) as f64)
        }
    }

    fn px(&self, sq: usize, x: f64, y: f64) -> (f64, f64) {
        let (cx, cy) = self.cell(sq);
        (
            MARGIN + (cx + x) * SCALE,
            MARGIN + (self.b as f64 - (cy + y)) * SCALE,
        )
    }

    fn grid(&mut self) {
        let n = self.a + self.b - 1;
        for sq in 0..n {
            let (x0, y0) = self.px(sq, 0.0, 1.0);
            self.body.push_str(&format!(
                "<rect x='{x0:.1}' y='{y0:.1}' width='{SCALE}' height='{SCALE}' \
                 fill='#fdfdf6' stroke='#999' stroke-width='1'/>"
            ));
            let (tx, ty) = self.px(sq, 0.5, 0.5);
            self.body.push_str(&format!(
                "<text x='{tx:.1}' y='{ty:.1}' fill='#bbb' font-size='13' \
                 text-anchor='middle'>{}</text>",
                sq + 1
            ));
        }
    }

    fn segment(&mut self, sq: usize, from: (Rat, Rat), to: (Rat, Rat), color: &str, width: f64) {
        let f = |r: Rat| *r.numer() as f64 / *r.denom() as f64;
        let (x0, y0) = self.px(sq, f(from.0), f(from.1));
        let (x1, y1) = self.px(sq, f(to.0), f(to.1));
        self.body.push_str(&format!(
            "<line x1='{x0:.2}' y1='{y0:.2}' x2='{x1:.2}' y2='{y1:.2}' \
             stroke='{color}' stroke-width='{width}' stroke-linecap='round'/>"
        ));
    }

    fn curve(&mut self, c: &TracedCurve, color: &str, width: f64) {
        for seg in &c.segs {
            self.segment(seg.sq, seg.entry, seg.exit, color, width);
        }
    }

    fn label(&mut self, sq: usize, x: f64, y: f64, text: &str, color: &str) {
        let (px, py) = self.px(sq, x, y);
        self.body.push_str(&format!(
            "<text x='{px:.1}' y='{py:.1}' fill='{color}' font-size='14' \
             font-weight='bold'>{text}</text>"
        ));
    }

    fn cone_dot(&mut self) {
        let (x, y) = self.px(0, 0.0, 0.0);
        self.body.push_str(&format!(
            "<circle cx='{x:.1}' cy='{y:.1}' r='5' fill='#d22'/>"
        ));
    }

    fn finish(self, note: &str) -> String {
        let w = MARGIN * 2.0 + self.a as f64 * SCALE;
        let h = MARGIN * 2.0 + self.b as f64 * SCALE + 18.0;
        format!(
            "<svg xmlns='http://www.w3.org/2000/svg' viewBox='0 0 {w:.0} {h:.0}' \
             width='{w:.0}' height='{h:.0}'>{}<text x='{MARGIN}' y='{:.0}' \
             font-size='12' fill='#444'>{note}</text></svg>",
            self.body,
            h - 5.0
        )
    }
}

fn error_svg(msg: &str) -> String {
    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='420' height='40'>\
         <text x='8' y='24' fill='#c00' font-size='14'>{msg}</text></svg>"
    )
}

/// The surface with its marked curves and the singular point.
#[wasm_bindgen]
pub fn surface_svg(a: usize, b: usize) -> String {
    let session = match Session::lshape(a, b) {
        Ok(s) => s,
        Err(e) => return error_svg(&e.to_string()),
    };
    let loci = match marked_loci(&session.origami) {
        Ok(l) => l,
        Err(e) => return error_svg(&e.to_string()),
    };
    let mut canvas = Canvas::new(a, b);
    canvas.grid();
    let colors = [
        (MarkedCurve::E1, "#d62728"),
        (MarkedCurve::E1Prime, "#ff9896"),
        (MarkedCurve::E2, "#ff7f0e"),
        (MarkedCurve::F1, "#1f77b4"),
        (MarkedCurve::F1Prime, "#aec7e8"),
        (MarkedCurve::F2, "#17becf"),
        (MarkedCurve::G, "#9467bd"),
        (MarkedCurve::H, "#2ca02c"),
    ];
    for (m, color) in colors {
        let locus = &loci.loci[&m];
        for (from, to) in &locus.segments {
            canvas.segment(from.sq, (from.x, from.y), (to.x, to.y), color, 3.0);
        }
        if let Some((from, _)) = locus.segments.first() {
            let dx: f64 = match m {
                MarkedCurve::F1 | MarkedCurve::F2 => -0.22,
                MarkedCurve::F1Prime => 0.08,
                _ => 0.42,
            };
            let dy: f64 = match m {
                MarkedCurve::E1 | MarkedCurve::E2 => -0.1,
                MarkedCurve::E1Prime => 0.14,
                MarkedCurve::G => 0.3,
                MarkedCurve::H => 0.68,
                _ => 0.5,
            };
            canvas.label(from.sq, dx, dy, m.name(), color);
        }
    }
    canvas.cone_dot();
    canvas.finish(&format!(
        "L({a},{b}): volume {}, one 6\u{03c0} cone point (red)",
        a + b - 1
    ))
}

/// Cylinder decomposition in direction (p, q): boundary saddle connections
/// in red, one core per cylinder in blue shades.
#[wasm_bindgen]
pub fn direction_svg(a: usize, b: usize, p: i64, q: i64) -> String {
    if p == 0 && q == 0 {
        return error_svg("direction must be nonzero");
    }
    let session = match Session::lshape(a, b) {
        Ok(s) => s,
        Err(e) => return error_svg(&e.to_string()),
    };
    let d = Direction::canonical(p, q);
    let cylinders = cylinders_in_direction(&session.origami, &session.vt, d);
    let mut canvas = Canvas::new(a, b);
    canvas.grid();
    let core_colors = ["#1f77b4", "#17becf", "#9467bd"];
    let mut note = format!(
        "direction ({}, {}): {} cylinder(s); ",
        d.p,
        d.q,
        cylinders.len()
    );
    for (i, cyl) in cylinders.iter().enumerate() {
        for boundary in &cyl.boundary {
            canvas.curve(boundary, "#d62728", 2.0);
        }
        canvas.curve(&cyl.core, core_colors[i % core_colors.len()], 2.5);
        note.push_str(&format!(
            "core {} length\u{00b2} {}, area {}; ",
            i + 1,
            cyl.core.sq_len,
            cyl.area
        ));
    }
    canvas.cone_dot();
    canvas.finish(&note)
}

/// The kvol report for L(a,b) at the given pool bound, as JSON, together
/// with an SVG of the witness pair.
#[wasm_bindgen]
pub fn kvol_json(a: usize, b: usize, max_sq_len: i64) -> String {
    let fail = |msg: &str| format!("{{\"error\": \"{msg}\"}}");
    let session = match Session::lshape(a, b) {
        Ok(s) => s,
        Err(e) => return fail(&e.to_string()),
    };
    let pool = match session.pool(max_sq_len) {
        Ok(p) => p,
        Err(e) => return fail(&e.to_string()),
    };
    let estimate = match kvol_estimate(session.origami.volume() as i64, &pool) {
        Ok(e) => e,
        Err(e) => return fail(&e.to_string()),
    };
    let (lemmas, n) = match session.lemma_n() {
        Ok(n) => match run_lemma_suite(&session, &pool, n, 300, 42) {
            Ok(l) => (Some(l), Some(n)),
            Err(e) => return fail(&e.to_string()),
        },
        Err(_) => (None, None),
    };
    let params = session.origami.lshape().unwrap();
    let mut value = report::kvol_report_json(
        params,
        max_sq_len,
        pool.len(),
        &estimate,
        lemmas.as_ref(),
        n,
        42,
    );
    // attach a drawing of the witness pair
    let witness_svg = {
        let mut canvas = Canvas::new(a, b);
        canvas.grid();
        let colors = ["#d62728", "#1f77b4"];
        for (slot, id) in estimate.witness.iter().enumerate() {
            if let Some(c) = pool.iter().find(|c| &c.id == id) {
                canvas.curve(c, colors[slot % 2], 3.0);
            }
        }
        canvas.cone_dot();
        canvas.finish(&format!("witness pair: {}", estimate.witness.join("  /  ")))
    };
    if let Some(obj) = value.as_object_mut() {
        obj.insert("witness_svg".into(), serde_json::json!(witness_svg));
    }
    serde_json::to_string_pretty(&value).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_svg_renders_l33() {
        let svg = surface_svg(3, 3);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("e1"));
        assert!(svg.contains("f2"));
        // 5 squares drawn
        assert_eq!(svg.matches("<rect").count(), 5);
    }

    #[test]
    fn surface_svg_rejects_bad_params() {
        assert!(surface_svg(1, 3).contains("a >= 2"));
    }

    #[test]
    fn direction_svg_shows_two_horizontal_cylinders() {
        let svg = direction_svg(3, 3, 1, 0);
        assert!(svg.contains("2 cylinder(s)"));
        assert!(svg.contains("area"));
    }

    #[test]
    fn kvol_json_reports_exact_witness_value() {
        let text = kvol_json(3, 3, 36);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["kvol"]["num_sq"], "25");
        assert_eq!(v["kvol"]["den_sq"], "4");
        assert_eq!(v["kvol"]["decimal"], "2.50000000000");
        assert!(v["witness_svg"].as_str().unwrap().starts_with("<svg"));
        assert_eq!(v["lemmas"]["short_curves"]["pass"], true);
    }

    #[test]
    fn kvol_json_surfaces_errors() {
        let text = kvol_json(3, 3, 0);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["error"].as_str().unwrap().contains("empty"));
    }
}
