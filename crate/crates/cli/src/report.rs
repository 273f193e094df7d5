//! Ordered report tree with a JSON and a plain-text rendering.

use std::fmt::Write;

use entrans::ComplexMatrix;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

#[derive(Clone, Debug, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(u64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

/// 17 significant digits, so every `f64` survives a round trip.
pub fn format_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn nums(xs: &[f64]) -> Json {
        Json::Arr(xs.iter().map(|&x| Json::Num(x)).collect())
    }

    pub fn ints(xs: &[usize]) -> Json {
        Json::Arr(xs.iter().map(|&x| Json::Int(x as u64)).collect())
    }

    pub fn matrix(m: &ComplexMatrix) -> Json {
        Json::Arr(
            (0..m.rows())
                .map(|r| {
                    Json::Arr((0..m.cols()).map(|k| Json::nums(&[m.get(r, k).re, m.get(r, k).im])).collect())
                })
                .collect(),
        )
    }

    pub fn get(&self, key: &str) -> Option<&Json> {
        match self {
            Json::Obj(fields) => fields.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: Json) {
        if let Json::Obj(fields) = self {
            fields.push((key.into(), value));
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out, 0);
        out
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, Json::Arr(_) | Json::Obj(_))
    }

    fn inline(&self) -> Option<String> {
        match self {
            Json::Null => Some("-".into()),
            Json::Bool(b) => Some(b.to_string()),
            Json::Int(i) => Some(i.to_string()),
            Json::Num(x) => Some(format_num(*x)),
            Json::Str(s) => Some(s.clone()),
            Json::Arr(items) if items.iter().all(Json::is_scalar) => Some(format!(
                "[{}]",
                items.iter().filter_map(Json::inline).collect::<Vec<_>>().join(", ")
            )),
            _ => None,
        }
    }

    fn write_text(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        match self {
            Json::Obj(fields) => {
                for (k, v) in fields {
                    match v.inline() {
                        Some(s) => writeln!(out, "{pad}{k}: {s}").unwrap(),
                        None => {
                            writeln!(out, "{pad}{k}:").unwrap();
                            v.write_text(out, depth + 1);
                        }
                    }
                }
            }
            Json::Arr(items) => {
                for (i, v) in items.iter().enumerate() {
                    match v.inline() {
                        Some(s) => writeln!(out, "{pad}- {s}").unwrap(),
                        None => {
                            writeln!(out, "{pad}- [{i}]").unwrap();
                            v.write_text(out, depth + 1);
                        }
                    }
                }
            }
            scalar => writeln!(out, "{pad}{}", scalar.inline().unwrap_or_default()).unwrap(),
        }
    }
}

impl Serialize for Json {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Json::Null => s.serialize_unit(),
            Json::Bool(b) => s.serialize_bool(*b),
            Json::Int(i) => s.serialize_u64(*i),
            Json::Num(x) if x.is_finite() => RawValue::from_string(format_num(*x))
                .map_err(serde::ser::Error::custom)?
                .serialize(s),
            Json::Num(_) => s.serialize_unit(),
            Json::Str(v) => s.serialize_str(v),
            Json::Arr(items) => {
                let mut seq = s.serialize_seq(Some(items.len()))?;
                for v in items {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
            Json::Obj(fields) => {
                let mut map = s.serialize_map(Some(fields.len()))?;
                for (k, v) in fields {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

impl From<f64> for Json {
    fn from(x: f64) -> Self {
        Json::Num(x)
    }
}

impl From<usize> for Json {
    fn from(x: usize) -> Self {
        Json::Int(x as u64)
    }
}

impl From<u64> for Json {
    fn from(x: u64) -> Self {
        Json::Int(x)
    }
}

impl From<u32> for Json {
    fn from(x: u32) -> Self {
        Json::Int(x.into())
    }
}

impl From<bool> for Json {
    fn from(b: bool) -> Self {
        Json::Bool(b)
    }
}

impl From<&str> for Json {
    fn from(s: &str) -> Self {
        Json::Str(s.into())
    }
}

impl From<String> for Json {
    fn from(s: String) -> Self {
        Json::Str(s)
    }
}

impl<T: Into<Json>> From<Option<T>> for Json {
    fn from(v: Option<T>) -> Self {
        v.map_or(Json::Null, Into::into)
    }
}

/// One pass/fail invariant, by default `value <= tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
    /// Extra fields appended to the rendered check.
    pub detail: Vec<(String, Json)>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, tol, passed: value <= tol, detail: Vec::new() }
    }

    pub fn to_json(&self) -> Json {
        let mut j = Json::obj([
            ("name", self.name.clone().into()),
            ("value", self.value.into()),
            ("tol", self.tol.into()),
            ("pass", self.passed.into()),
        ]);
        for (k, v) in &self.detail {
            j.push(k.clone(), v.clone());
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        let j = Json::obj([("p", Json::Num(0.1 + 0.2)), ("n", Json::Int(3)), ("z", Json::Num(f64::NAN))]);
        let s = serde_json::to_string(&j).unwrap();
        assert_eq!(s, r#"{"p":3.0000000000000004e-1,"n":3,"z":null}"#);
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["p"].as_f64().unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn text_rendering_nests() {
        let j = Json::obj([
            ("a", Json::nums(&[1.0, 2.0])),
            ("b", Json::obj([("c", Json::Bool(true))])),
        ]);
        assert_eq!(j.to_text(), "a: [1.0000000000000000e0, 2.0000000000000000e0]\nb:\n  c: true\n");
    }
}
