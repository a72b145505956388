//! CSV and JSON output. Every float is written with 17 significant digits
//! so that files round-trip exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::field::Profile;
use crate::flow::Diagnostics;

pub const TRAJECTORY_HEADER: &str =
    "t,total_energy,dissipation,u_l2,u_linf,phi_min,phi_max,dist_to_zero,dist_to_star,div_residual";

/// `x` in scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number with 17 significant digits; `null` when not finite.
pub fn json17(x: f64) -> Value {
    if x.is_finite() {
        Number::from_str(&fmt17(x))
            .map(Value::Number)
            .unwrap_or(Value::Null)
    } else {
        Value::Null
    }
}

/// Serializes `value` and rewrites every non-integer number with
/// [`json17`].
pub fn to_json17<T: Serialize>(value: &T) -> serde_json::Result<Value> {
    let mut v = serde_json::to_value(value)?;
    rewrite_floats(&mut v);
    Ok(v)
}

fn rewrite_floats(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            *v = n.as_f64().map_or(Value::Null, json17);
        }
        Value::Array(items) => items.iter_mut().for_each(rewrite_floats),
        Value::Object(map) => map.values_mut().for_each(rewrite_floats),
        _ => {}
    }
}

pub fn trajectory_csv(samples: &[Diagnostics]) -> String {
    let mut out = String::with_capacity(256 * (samples.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in samples {
        let star = s.dist_to_star.map(fmt17).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt17(s.t),
            fmt17(s.total_energy),
            fmt17(s.dissipation),
            fmt17(s.u_l2),
            fmt17(s.u_linf),
            fmt17(s.phi_min),
            fmt17(s.phi_max),
            fmt17(s.dist_to_zero),
            star,
            fmt17(s.div_residual)
        );
    }
    out
}

pub fn profile_csv(profile: &Profile) -> String {
    let mut out = String::from("x3,phi\n");
    for (k, v) in profile.values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt17(profile.x3(k)), fmt17(*v));
    }
    out
}

/// Parses a file written by [`profile_csv`].
pub fn parse_profile_csv(text: &str) -> Option<Profile> {
    let mut lines = text.lines();
    if lines.next()? != "x3,phi" {
        return None;
    }
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let (x, v) = line.split_once(',')?;
        xs.push(x.parse::<f64>().ok()?);
        values.push(v.parse::<f64>().ok()?);
    }
    let d = *xs.last()?;
    (values.len() >= 2).then_some(Profile { d, values })
}
