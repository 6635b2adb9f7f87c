//! Fit files: per-arm, per-unit Normal mixtures with optional replicate
//! draws.
//!
//! ```json
//! {"prevalence": {"n0": 120, "n1": 80},
//!  "arms": [{"t": 0, "units": [{"weights": [1], "means": [0.2], "sds": [1.1]}],
//!            "other_units": [...]},
//!           {"t": 1, "units": [...]}],
//!  "draws": [{"prevalence": {...}, "arms": [...]}]}
//! ```
//!
//! A unit may also carry `"zero_atom"` (mass at exactly zero) and
//! `"support": "log"` (components describe log outcome). `other_units`
//! holds the arm model evaluated at the other arm's units. Output keys are
//! sorted, so serialization is canonical.

use std::path::Path;

use serde_json::{json, Map, Value};

use super::fit::{ArmFit, ObservedFit};
use crate::ef::{MixtureDist, Support, UnivariateEF};
use crate::error::{Error, Result};
use crate::selection::TreatmentPrevalence;

pub fn to_value(fit: &ObservedFit) -> Value {
    let mut top = fit_body(fit);
    if !fit.draws.is_empty() {
        top.insert("draws".into(), Value::Array(fit.draws.iter().map(|d| Value::Object(fit_body(d))).collect()));
    }
    Value::Object(top)
}

pub fn to_string(fit: &ObservedFit) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_value(fit))?)
}

pub fn write_path(fit: &ObservedFit, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_string(fit)? + "\n")?;
    Ok(())
}

pub fn read_path(path: impl AsRef<Path>) -> Result<ObservedFit> {
    from_str(&std::fs::read_to_string(path)?)
}

pub fn from_str(s: &str) -> Result<ObservedFit> {
    let v: Value = serde_json::from_str(s)
        .map_err(|e| Error::SchemaViolation { pointer: String::new(), message: format!("not valid JSON: {e}") })?;
    from_value(&v)
}

pub fn from_value(v: &Value) -> Result<ObservedFit> {
    let mut fit = parse_body(v, "")?;
    if let Some(draws) = v.get("draws") {
        let arr = draws.as_array().ok_or_else(|| schema("/draws", "expected an array"))?;
        fit.draws = arr
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let ptr = format!("/draws/{i}");
                if d.get("draws").is_some() {
                    return Err(schema(&format!("{ptr}/draws"), "draws cannot be nested"));
                }
                let mut draw = d.clone();
                if draw.get("prevalence").is_none() {
                    if let Some(obj) = draw.as_object_mut() {
                        obj.insert("prevalence".into(), v["prevalence"].clone());
                    }
                }
                parse_body(&draw, &ptr)
            })
            .collect::<Result<_>>()?;
    }
    Ok(fit)
}

fn fit_body(fit: &ObservedFit) -> Map<String, Value> {
    let mut m = Map::new();
    let [n0, n1] = fit.prevalence.counts();
    let prev = if n0 > 0 && n1 > 0 { json!({"n0": n0, "n1": n1}) } else { json!({"p1": fit.prevalence.p1()}) };
    m.insert("prevalence".into(), prev);
    let arms = fit
        .arms
        .iter()
        .enumerate()
        .map(|(t, a)| {
            let mut o = Map::new();
            o.insert("t".into(), json!(t));
            o.insert("units".into(), Value::Array(a.observed.iter().map(unit_value).collect()));
            if let Some(cf) = &a.counterfactual {
                o.insert("other_units".into(), Value::Array(cf.iter().map(unit_value).collect()));
            }
            Value::Object(o)
        })
        .collect();
    m.insert("arms".into(), Value::Array(arms));
    m
}

fn unit_value(mix: &MixtureDist) -> Value {
    let mut o = Map::new();
    o.insert("weights".into(), json!(mix.continuous_weights()));
    o.insert("means".into(), json!(mix.components().iter().map(|c| c.mean()).collect::<Vec<_>>()));
    o.insert("sds".into(), json!(mix.components().iter().map(|c| c.sd()).collect::<Vec<_>>()));
    if mix.zero_atom() > 0.0 {
        o.insert("zero_atom".into(), json!(mix.zero_atom()));
    }
    if mix.support() == Support::Log {
        o.insert("support".into(), json!("log"));
    }
    Value::Object(o)
}

fn schema(pointer: &str, message: impl Into<String>) -> Error {
    Error::SchemaViolation { pointer: pointer.to_string(), message: message.into() }
}

fn field<'a>(v: &'a Value, ptr: &str, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| schema(ptr, format!("missing field '{key}'")))
}

fn parse_count(v: &Value, ptr: &str) -> Result<usize> {
    v.as_u64().map(|c| c as usize).ok_or_else(|| schema(ptr, "expected a non-negative integer"))
}

fn parse_body(v: &Value, base: &str) -> Result<ObservedFit> {
    if !v.is_object() {
        return Err(schema(if base.is_empty() { "/" } else { base }, "expected an object"));
    }
    let pptr = format!("{base}/prevalence");
    let p = field(v, base, "prevalence")?;
    let prevalence = match (p.get("n0"), p.get("n1"), p.get("p1")) {
        (Some(n0), Some(n1), _) => {
            let n0 = parse_count(n0, &format!("{pptr}/n0"))?;
            let n1 = parse_count(n1, &format!("{pptr}/n1"))?;
            TreatmentPrevalence::from_counts(n0, n1).map_err(|e| schema(&pptr, e.to_string()))?
        }
        (None, None, Some(p1)) => {
            let p1 = p1.as_f64().ok_or_else(|| schema(&format!("{pptr}/p1"), "expected a number"))?;
            TreatmentPrevalence::new(p1).map_err(|e| schema(&format!("{pptr}/p1"), e.to_string()))?
        }
        _ => return Err(schema(&pptr, "expected {\"n0\", \"n1\"} or {\"p1\"}")),
    };
    let aptr = format!("{base}/arms");
    let arms = field(v, base, "arms")?.as_array().ok_or_else(|| schema(&aptr, "expected an array"))?;
    if arms.len() != 2 {
        return Err(schema(&aptr, format!("expected 2 arms, found {}", arms.len())));
    }
    let mut slots: [Option<ArmFit>; 2] = [None, None];
    for (i, a) in arms.iter().enumerate() {
        let ptr = format!("{aptr}/{i}");
        let t = field(a, &ptr, "t")?
            .as_u64()
            .filter(|&t| t <= 1)
            .ok_or_else(|| schema(&format!("{ptr}/t"), "expected 0 or 1"))? as usize;
        if slots[t].is_some() {
            return Err(schema(&format!("{ptr}/t"), format!("arm {t} listed twice")));
        }
        let observed = parse_units(field(a, &ptr, "units")?, &format!("{ptr}/units"))?;
        let counterfactual = match a.get("other_units") {
            Some(u) => Some(parse_units(u, &format!("{ptr}/other_units"))?),
            None => None,
        };
        let [n0, n1] = prevalence.counts();
        let (own, other) = if t == 0 { (n0, n1) } else { (n1, n0) };
        if own > 0 && observed.len() != 1 && observed.len() != own {
            return Err(schema(&format!("{ptr}/units"), format!("{} units for {own} observed units", observed.len())));
        }
        if let Some(cf) = &counterfactual {
            if other > 0 && cf.len() != other {
                return Err(schema(&format!("{ptr}/other_units"), format!("{} units for {other} units", cf.len())));
            }
        }
        slots[t] = Some(ArmFit { observed, counterfactual });
    }
    let [Some(a0), Some(a1)] = slots else {
        return Err(schema(&aptr, "both arms t = 0 and t = 1 are required"));
    };
    ObservedFit::new(prevalence, a0, a1)
}

fn parse_units(v: &Value, ptr: &str) -> Result<Vec<MixtureDist>> {
    let arr = v.as_array().ok_or_else(|| schema(ptr, "expected an array"))?;
    if arr.is_empty() {
        return Err(schema(ptr, "expected at least one unit"));
    }
    arr.iter().enumerate().map(|(i, u)| parse_unit(u, &format!("{ptr}/{i}"), i)).collect()
}

fn numbers(v: &Value, ptr: &str, key: &str) -> Result<Vec<f64>> {
    let p = format!("{ptr}/{key}");
    let arr = field(v, ptr, key)?.as_array().ok_or_else(|| schema(&p, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(j, x)| x.as_f64().ok_or_else(|| schema(&format!("{p}/{j}"), "expected a number")))
        .collect()
}

fn parse_unit(v: &Value, ptr: &str, unit: usize) -> Result<MixtureDist> {
    if !v.is_object() {
        return Err(schema(ptr, "expected an object"));
    }
    let weights = numbers(v, ptr, "weights")?;
    let means = numbers(v, ptr, "means")?;
    let sds = numbers(v, ptr, "sds")?;
    if weights.is_empty() || weights.len() != means.len() || means.len() != sds.len() {
        return Err(schema(ptr, "weights, means and sds must be non-empty and of equal length"));
    }
    let zero_atom = match v.get("zero_atom") {
        Some(z) => z.as_f64().ok_or_else(|| schema(&format!("{ptr}/zero_atom"), "expected a number"))?,
        None => 0.0,
    };
    let support = match v.get("support").map(|s| s.as_str()) {
        None => Support::Identity,
        Some(Some("identity")) => Support::Identity,
        Some(Some("log")) => Support::Log,
        Some(_) => return Err(schema(&format!("{ptr}/support"), "expected \"identity\" or \"log\"")),
    };
    let bad = |message: String| Error::InvariantViolation { unit, message };
    if let Some(s) = sds.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(bad(format!("sd {s} must be positive")));
    }
    if let Some(m) = means.iter().find(|m| !m.is_finite()) {
        return Err(bad(format!("mean {m} is not finite")));
    }
    let comps = means
        .iter()
        .zip(&sds)
        .map(|(&m, &s)| UnivariateEF::normal(m, s * s))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| bad(e.to_string()))?;
    MixtureDist::with_zero_atom(comps, weights, zero_atom, support).map_err(|e| bad(e.to_string()))
}
