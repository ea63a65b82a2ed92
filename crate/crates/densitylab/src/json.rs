//! JSON encodings. Rationals are strings `"p/q"`, big integers are decimal
//! strings, and every enum becomes an object tagged by `"type"`.
//! Object keys come out sorted, so equal values encode to equal bytes.

use densitylab_core::densities::{DensityValue, SupCertificate, SupTadValue};
use densitylab_core::families::PairCertificate;
use densitylab_core::ideals::{
    BlockBound, Certificate, ComponentRow, ConvergentTail, DivergentTail, UnknownReason, Verdict, Witness,
};
use densitylab_core::verify::{Check, Counts, Report};
use densitylab_core::Rational;
use serde_json::{json, Value};

pub fn rational(r: &Rational) -> Value {
    Value::String(format!("{}/{}", r.numer(), r.denom()))
}

/// Inverse of [`rational`]; also accepts plain integers.
pub fn parse_rational(s: &str) -> Option<Rational> {
    s.trim().parse().ok()
}

fn opt<T>(v: &Option<T>, f: impl Fn(&T) -> Value) -> Value {
    v.as_ref().map_or(Value::Null, f)
}

pub fn density(v: &DensityValue) -> Value {
    json!({ "kind": v.kind_name(), "lo": rational(&v.lo()), "hi": rational(&v.hi()) })
}

pub fn witness(w: &Witness) -> Value {
    match w {
        Witness::Progression { a, d, exceptions } => {
            json!({ "type": "progression", "a": a, "d": d, "exceptions": exceptions })
        }
        Witness::BlockCores {
            scheme,
            pattern,
            from,
            pad,
            residue,
            modulus,
            pattern_witness,
        } => json!({
            "type": "block-cores",
            "scheme": scheme.to_string(),
            "pattern": pattern.to_string(),
            "from": from,
            "pad": pad,
            "residue": residue,
            "modulus": modulus,
            "pattern_witness": witness(pattern_witness),
        }),
        Witness::Boundaries {
            scheme,
            pattern,
            from,
            offset,
            pattern_witness,
        } => json!({
            "type": "boundaries",
            "scheme": scheme.to_string(),
            "pattern": pattern.to_string(),
            "from": from,
            "offset": offset,
            "pattern_witness": witness(pattern_witness),
        }),
        Witness::CodePoints {
            branch,
            stride,
            shift,
            from_level,
            step,
        } => json!({
            "type": "code-points",
            "branch": branch.to_string(),
            "stride": stride,
            "shift": shift,
            "from_level": from_level,
            "step": step,
        }),
    }
}

fn block_bound(b: &BlockBound) -> Value {
    json!({ "block": b.block, "count": b.count, "bound": rational(&b.bound) })
}

fn divergent_tail(t: &DivergentTail) -> Value {
    match t {
        DivergentTail::Uniform { from, floor } => {
            json!({ "type": "uniform", "from": from, "floor": rational(floor) })
        }
        DivergentTail::Reciprocal {
            from,
            coeff,
            pattern_density,
        } => json!({
            "type": "reciprocal",
            "from": from,
            "coeff": rational(coeff),
            "pattern_density": rational(pattern_density),
        }),
    }
}

fn convergent_tail(t: &ConvergentTail) -> Value {
    match t {
        ConvergentTail::CodeLevels {
            stride,
            from_level,
            per_level,
        } => json!({
            "type": "code-levels",
            "stride": stride,
            "from_level": from_level,
            "per_level": per_level,
        }),
        ConvergentTail::Boundaries {
            scheme,
            from,
            per_block,
            offset,
        } => json!({
            "type": "boundaries",
            "scheme": scheme.to_string(),
            "from": from,
            "per_block": per_block,
            "offset": offset,
        }),
    }
}

fn component_row(r: &ComponentRow) -> Value {
    json!({ "piece": r.piece, "finite": r.finite, "witness": opt(&r.witness, witness) })
}

pub fn certificate(c: &Certificate) -> Value {
    match c {
        Certificate::Boundedness { bound, max, count } => json!({
            "type": "boundedness",
            "bound": bound.to_string(),
            "max": max,
            "count": count,
        }),
        Certificate::Infinite(w) => json!({ "type": "infinite", "witness": witness(w) }),
        Certificate::Divergence {
            scheme,
            pattern,
            blocks,
            running_sum,
            tail,
        } => json!({
            "type": "divergence",
            "scheme": scheme.to_string(),
            "pattern": pattern.to_string(),
            "blocks": blocks.iter().map(block_bound).collect::<Vec<_>>(),
            "running_sum": rational(running_sum),
            "tail": divergent_tail(tail),
        }),
        Certificate::Convergence {
            cutoff,
            head_sum_upper,
            tail,
            tail_upper,
        } => json!({
            "type": "convergence",
            "cutoff": cutoff.to_string(),
            "head_sum_upper": rational(head_sum_upper),
            "tail": convergent_tail(tail),
            "tail_upper": opt(tail_upper, rational),
        }),
        Certificate::ComponentTable { rows, rest_finite } => json!({
            "type": "component-table",
            "rows": rows.iter().map(component_row).collect::<Vec<_>>(),
            "rest_finite": rest_finite,
        }),
        Certificate::IntervalPattern {
            scheme,
            pattern,
            from,
            witness: w,
        } => json!({
            "type": "interval-pattern",
            "scheme": scheme.to_string(),
            "pattern": pattern.to_string(),
            "from": from,
            "witness": witness(w),
        }),
        Certificate::PositiveDensity { lower, witness: w } => json!({
            "type": "positive-density",
            "lower": rational(lower),
            "witness": opt(w, witness),
        }),
        Certificate::ZeroDensity {
            scheme,
            from,
            per_block,
            sparse_blocks,
        } => json!({
            "type": "zero-density",
            "scheme": scheme.to_string(),
            "from": from,
            "per_block": per_block,
            "sparse_blocks": opt(sparse_blocks, |e| Value::String(e.to_string())),
        }),
    }
}

pub fn unknown_reason(r: &UnknownReason) -> Value {
    match r {
        UnknownReason::Budget { limit } => json!({ "type": "budget", "limit": limit }),
        UnknownReason::Unsupported(what) => json!({ "type": "unsupported", "detail": what }),
        UnknownReason::Inconclusive { contained, probed } => {
            json!({ "type": "inconclusive", "contained": contained, "probed": probed })
        }
    }
}

pub fn verdict(v: &Verdict) -> Value {
    match v {
        Verdict::In(c) => json!({ "verdict": "in", "certificate": certificate(c) }),
        Verdict::NotIn(c) => json!({ "verdict": "not-in", "certificate": certificate(c) }),
        Verdict::Unknown(r) => json!({ "verdict": "unknown", "reason": unknown_reason(r) }),
    }
}

pub fn sup_certificate(c: &SupCertificate) -> Value {
    match c {
        SupCertificate::Finite => json!({ "type": "finite" }),
        SupCertificate::Equal { member, shift } => json!({ "type": "equal", "member": member, "shift": shift }),
        SupCertificate::Positive { member, shift } => {
            json!({ "type": "positive", "member": member, "shift": shift })
        }
    }
}

pub fn sup_tad(v: &SupTadValue) -> Value {
    json!({ "value": density(&v.value), "certificate": opt(&v.certificate, sup_certificate) })
}

pub fn pair_certificate(c: &PairCertificate) -> Value {
    json!({
        "scheme": c.scheme.to_string(),
        "shift": c.shift,
        "threshold": c.threshold,
        "bound": c.bound.to_string(),
        "blocks": c.blocks,
    })
}

fn check(c: &Check) -> Value {
    json!({
        "name": c.name,
        "input": c.input,
        "expected": c.expected,
        "got": c.got,
        "outcome": c.outcome.name(),
    })
}

pub fn counts(c: &Counts) -> Value {
    json!({ "pass": c.pass, "fail": c.fail, "unknown": c.unknown })
}

/// `{suite, checks, counts}`, plus `wall_time_ms` when a timing is given.
pub fn report(r: &Report, wall_time_ms: Option<u128>) -> Value {
    let mut v = json!({
        "suite": r.suite,
        "checks": r.checks.iter().map(check).collect::<Vec<_>>(),
        "counts": counts(&r.counts()),
    });
    if let Some(ms) = wall_time_ms {
        v["wall_time_ms"] = json!(ms as u64);
    }
    v
}
