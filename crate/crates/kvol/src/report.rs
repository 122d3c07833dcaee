//! Output formats: the kvol JSON report, enumeration and sweep CSVs.
//!
//! All outputs are deterministic for a fixed configuration except the
//! `generated_at_unix` field.

use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::engine::{Estimate, LemmaSummary, PairCertificate, SommesSuite, SweepRow};
use crate::surface::LShapeParams;
use crate::tracer::TracedCurve;

/// Format with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    format!("{:.*}", decimals, x)
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn lemmas_json(l: &LemmaSummary) -> Value {
    let one = |r: &crate::engine::LemmaResult| json!({ "pass": r.pass, "counterexamples": r.counterexamples });
    json!({
        "inter_e1": one(&l.inter_e1),
        "inter_f1": one(&l.inter_f1),
        "inter_g": one(&l.inter_g),
        "inter_h": one(&l.inter_h),
        "short_curves": one(&l.short_curves),
        "sommes_trials": l.sommes_trials,
        "sommes_failures": l.sommes_failures,
    })
}

/// The kvol report: surface, pool, exact best ratio, lemma outcomes and the
/// bounds (bounds require the square shape L(n+1,n+1)).
pub fn kvol_report_json(
    params: LShapeParams,
    max_sq_len: i64,
    pool_count: usize,
    estimate: &Estimate,
    lemmas: Option<&LemmaSummary>,
    n: Option<i64>,
    seed: u64,
) -> Value {
    let bounds = n.map(|n| {
        let u = crate::engine::upper_u(n);
        json!({
            "lower": format!("2+1/{n}"),
            "upper_U": sig12((*u.numer() as f64) / (*u.denom() as f64)),
        })
    });
    json!({
        "surface": { "a": params.a, "b": params.b },
        "pool": { "max_sq_len": max_sq_len, "count": pool_count },
        "kvol": {
            "num_sq": estimate.num_sq.to_string(),
            "den_sq": estimate.den_sq.to_string(),
            "decimal": sig12(estimate.decimal),
            "witness": estimate.witness,
            "witness_ties": estimate.witness_ties,
        },
        "lemmas": lemmas.map(lemmas_json),
        "bounds": bounds,
        "seed": seed,
        "generated_at_unix": timestamp(),
    })
}

/// CSV rows for the enumeration output; class cells stay empty when no
/// homology basis is available.
pub fn enumerate_csv(pool: &[TracedCurve]) -> String {
    let mut out = String::from("id,kind,p,q,hx,hy,sq_len,c_e2,c_f1,c_e1,c_f2\n");
    for c in pool {
        let class = c
            .class
            .map(|cl| {
                let v = cl.coords();
                format!("{},{},{},{}", v[0], v[1], v[2], v[3])
            })
            .unwrap_or_else(|| ",,,".to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.id,
            c.kind.name(),
            c.dir.p,
            c.dir.q,
            c.holonomy.0,
            c.holonomy.1,
            c.sq_len,
            class
        ));
    }
    out
}

pub fn enumerate_json(pool: &[TracedCurve], seed: u64) -> Value {
    let curves: Vec<Value> = pool
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "kind": c.kind.name(),
                "p": c.dir.p,
                "q": c.dir.q,
                "hx": c.holonomy.0,
                "hy": c.holonomy.1,
                "sq_len": c.sq_len,
                "class": c.class.map(|cl| cl.coords().to_vec()),
            })
        })
        .collect();
    json!({
        "count": pool.len(),
        "curves": curves,
        "seed": seed,
        "generated_at_unix": timestamp(),
    })
}

/// Sweep CSV with the documented columns.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "n,estimate_decimal,estimate_num_sq,estimate_den_sq,lower_2p1n,upper_U,pool_size,all_lemmas_pass\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            sig12(r.estimate.decimal),
            r.estimate.num_sq,
            r.estimate.den_sq,
            sig12(r.lower_num as f64 / r.lower_den as f64),
            sig12(r.upper_u_decimal),
            r.pool_size,
            r.all_lemmas_pass
        ));
    }
    out
}

pub fn sweep_json(rows: &[SweepRow], seed: u64) -> Value {
    json!({
        "rows": rows,
        "seed": seed,
        "generated_at_unix": timestamp(),
    })
}

pub fn certify_json(certs: &[PairCertificate], seed: u64) -> Value {
    use crate::engine::CertOutcome;
    let count_of = |o: CertOutcome| certs.iter().filter(|c| c.outcome == o).count();
    json!({
        "count": certs.len(),
        "verified": count_of(CertOutcome::Verified) + count_of(CertOutcome::SpecialClass),
        "inconclusive": count_of(CertOutcome::Inconclusive),
        "failed": count_of(CertOutcome::Failed),
        "certificates": certs,
        "seed": seed,
        "generated_at_unix": timestamp(),
    })
}

pub fn sommes_json(suite: &SommesSuite) -> Value {
    json!({
        "trials": suite.trials,
        "seed": suite.seed,
        "failures": suite.failures,
        "pass": suite.failures == 0,
        "generated_at_unix": timestamp(),
    })
}

/// Strip the run-dependent timestamp, for determinism comparisons.
pub fn strip_timestamp(v: &Value) -> Value {
    let mut v = v.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("generated_at_unix");
    }
    v
}
