//! Reading IFS descriptions from JSON documents (`"format": 1`).
//!
//! ```json
//! {
//!   "format": 1,
//!   "space": {"kind": "euclidean", "dim": 1},
//!   "maps": [
//!     {"type": "similarity", "ratio": 0.3333333333333333, "translation": [0.0]},
//!     {"type": "similarity", "ratio": 0.3333333333333333, "translation": [0.6666666666666666]}
//!   ],
//!   "probs": [0.5, 0.5],
//!   "seed_ball": {"center": [0.5], "radius": 0.5}
//! }
//! ```
//!
//! A sphere system gives `"space": {"kind": "sphere", "dim": n}` together with
//! `"chart": {"kind": "stereographic"}`; its maps and seed ball are then
//! planar data on the unit disk of `R^n`, conjugated by the chart.

use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{Ball, Space};
use crate::ifs::{ConformalMap, IfsSpec, SeedSet, Similarity};
use crate::manifolds::{conjugate_ifs, StereographicChart};

fn parse_err<T>(field: impl Into<String>, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse { field: field.into(), message: message.into() })
}

fn get<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    match obj.get(key) {
        Some(v) => Ok(v),
        None => parse_err(join(path, key), "missing field"),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn number(v: &Value, field: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => parse_err(field, format!("expected a number, found {v}")),
    }
}

fn numbers(v: &Value, field: &str) -> Result<Vec<f64>> {
    let Some(items) = v.as_array() else {
        return parse_err(field, format!("expected an array of numbers, found {v}"));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{field}[{i}]")))
        .collect()
}

fn count(v: &Value, field: &str) -> Result<usize> {
    match v.as_u64() {
        Some(n) if n >= 1 => Ok(n as usize),
        _ => parse_err(field, format!("expected a positive integer, found {v}")),
    }
}

fn similarity(v: &Value, dim: usize, field: &str) -> Result<Similarity> {
    let kind = get(v, "type", field)?;
    if kind.as_str() != Some("similarity") {
        return parse_err(join(field, "type"), format!("unsupported map type {kind}; expected \"similarity\""));
    }
    let ratio = number(get(v, "ratio", field)?, &join(field, "ratio"))?;
    let translation = numbers(get(v, "translation", field)?, &join(field, "translation"))?;
    if translation.len() != dim {
        return parse_err(
            join(field, "translation"),
            format!("expected {dim} coordinates, found {}", translation.len()),
        );
    }
    let rotation = match v.get("rotation") {
        None | Some(Value::Null) => Similarity::identity(dim).rotation().to_vec(),
        Some(Value::Array(rows)) if rows.iter().all(Value::is_array) => {
            let mut flat = Vec::new();
            for (i, row) in rows.iter().enumerate() {
                flat.extend(numbers(row, &format!("{field}.rotation[{i}]"))?);
            }
            flat
        }
        Some(other) => numbers(other, &join(field, "rotation"))?,
    };
    if rotation.len() != dim * dim {
        return parse_err(join(field, "rotation"), format!("expected a {dim}×{dim} matrix"));
    }
    Similarity::new(ratio, rotation, translation).map_err(|e| Error::Parse {
        field: field.to_string(),
        message: e.to_string(),
    })
}

/// Parses a format-1 document into a validated system.
pub fn parse_spec(text: &str) -> Result<IfsSpec> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        field: "<document>".into(),
        message: format!("line {}, column {}: {e}", e.line(), e.column()),
    })?;
    if !doc.is_object() {
        return parse_err("<document>", "expected a JSON object");
    }
    let format = get(&doc, "format", "")?;
    if format.as_u64() != Some(1) {
        return parse_err("format", format!("unsupported format {format}; expected 1"));
    }
    let space = get(&doc, "space", "")?;
    let kind = get(space, "kind", "space")?;
    let dim = count(get(space, "dim", "space")?, "space.dim")?;
    let chart = match doc.get("chart") {
        None | Some(Value::Null) => None,
        Some(c) => {
            let k = get(c, "kind", "chart")?;
            if k.as_str() != Some("stereographic") {
                return parse_err("chart.kind", format!("unsupported chart {k}; expected \"stereographic\""));
            }
            Some(StereographicChart::new(dim).map_err(|e| Error::Parse {
                field: "chart".into(),
                message: e.to_string(),
            })?)
        }
    };
    match (kind.as_str(), chart) {
        (Some("euclidean"), None) | (Some("sphere"), Some(_)) => {}
        (Some("sphere"), None) => return parse_err("chart", "a sphere system needs a stereographic chart"),
        (Some("euclidean"), Some(_)) => return parse_err("chart", "a chart applies only to sphere systems"),
        _ => return parse_err("space.kind", format!("unknown space {kind}; expected \"euclidean\" or \"sphere\"")),
    }
    let Some(map_values) = get(&doc, "maps", "")?.as_array() else {
        return parse_err("maps", "expected an array of maps");
    };
    let maps: Vec<Similarity> = map_values
        .iter()
        .enumerate()
        .map(|(i, m)| similarity(m, dim, &format!("maps[{i}]")))
        .collect::<Result<_>>()?;
    let probs = numbers(get(&doc, "probs", "")?, "probs")?;
    let seed = get(&doc, "seed_ball", "")?;
    let center = numbers(get(seed, "center", "seed_ball")?, "seed_ball.center")?;
    if center.len() != dim {
        return parse_err("seed_ball.center", format!("expected {dim} coordinates, found {}", center.len()));
    }
    let radius = number(get(seed, "radius", "seed_ball")?, "seed_ball.radius")?;
    let ball = Ball::new(center, radius).map_err(|e| Error::Parse {
        field: "seed_ball.radius".into(),
        message: e.to_string(),
    })?;
    let gamma = match doc.get("gamma") {
        None | Some(Value::Null) => None,
        Some(g) => Some(number(g, "gamma")?),
    };
    let planar = IfsSpec::new(
        Space::euclidean(dim),
        maps.into_iter().map(ConformalMap::Similarity).collect(),
        probs,
        SeedSet::Ball(ball),
        gamma,
    )?;
    match chart {
        None => Ok(planar),
        Some(c) => conjugate_ifs(&planar, c).map_err(|e| match e {
            Error::Domain(message) => Error::InvalidSpec { field: "seed_ball".into(), message },
            other => other,
        }),
    }
}

/// Reads and parses a spec file.
pub fn read_spec(path: &std::path::Path) -> Result<IfsSpec> {
    parse_spec(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANTOR: &str = r#"{
        "format": 1,
        "space": {"kind": "euclidean", "dim": 1},
        "maps": [
            {"type": "similarity", "ratio": 0.3333333333333333, "translation": [0.0]},
            {"type": "similarity", "ratio": 0.3333333333333333, "translation": [0.6666666666666666]}
        ],
        "probs": [0.5, 0.5],
        "seed_ball": {"center": [0.5], "radius": 0.5}
    }"#;

    fn field_of(text: &str) -> String {
        match parse_spec(text).unwrap_err() {
            Error::Parse { field, .. } | Error::InvalidSpec { field, .. } => field,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn reads_the_cantor_system() {
        let spec = parse_spec(CANTOR).unwrap();
        assert_eq!(spec.len(), 2);
        assert!((spec.diameter() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(&CANTOR.replace("[0.5, 0.5]", "[0.5, 0.6]")), "probs");
        assert_eq!(field_of(&CANTOR.replace("\"format\": 1", "\"format\": 2")), "format");
        assert_eq!(field_of(&CANTOR.replace("\"ratio\": 0.3333333333333333, \"translation\": [0.0]", "\"translation\": [0.0]")), "maps[0].ratio");
        assert_eq!(field_of(&CANTOR.replace("[0.6666666666666666]", "[0.6, 1.0]")), "maps[1].translation");
        assert_eq!(field_of("{\"format\": 1,"), "<document>");
    }

    #[test]
    fn sphere_systems_need_a_chart() {
        let text = r#"{
            "format": 1,
            "space": {"kind": "sphere", "dim": 2},
            "maps": [
                {"type": "similarity", "ratio": 0.3333333333333333, "rotation": [[1, 0], [0, 1]], "translation": [-0.26666666666666666, 0.0]},
                {"type": "similarity", "ratio": 0.3333333333333333, "translation": [0.26666666666666666, 0.0]}
            ],
            "probs": [0.5, 0.5],
            "seed_ball": {"center": [0.0, 0.0], "radius": 0.4},
            "chart": {"kind": "stereographic"}
        }"#;
        let spec = parse_spec(text).unwrap();
        assert!(spec.space().is_sphere());
        let without: String = text.replace(",\n            \"chart\": {\"kind\": \"stereographic\"}", "");
        assert_eq!(field_of(&without), "chart");
    }
}
