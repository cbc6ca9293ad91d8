//! Text and JSON formats.
//!
//! Character files hold one character per line as strictly increasing
//! space-separated integers; an empty line is the identity character.
//! Supports are JSON objects tagged by `"kind"`:
//!
//! ```text
//! {"kind": "explicit",   "elements": [1, 3, 5]}
//! {"kind": "enumerated", "family": "geometric", "params": {"scale": 1, "ratio": 2}}
//! {"kind": "periodic",   "prefix": [1, 0], "pattern": [0, 1]}
//! ```
//!
//! Sequences for characterized subgroups use `{"family": …, "params": …}`
//! with the families of [`Family`] plus `"explicit"` with `{"terms": [...]}`.

use std::fmt;

use num_bigint::BigUint;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::circle::SequenceGen;
use crate::gf2::{Character, Coord, SupportSpec};
use crate::sequence::Family;

/// Largest integer emitted as a JSON number; larger ones become strings.
pub const MAX_SAFE_JSON_INT: u64 = 1 << 53;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub source: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Path of the offending item inside a JSON document, e.g. `[2]`.
    pub item: Option<String>,
    pub message: String,
}

impl ParseError {
    fn at_line(source: &str, line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            source: source.to_string(),
            line: Some(line),
            column: Some(column),
            item: None,
            message: message.into(),
        }
    }

    fn at_item(source: &str, item: String, message: impl Into<String>) -> Self {
        ParseError {
            source: source.to_string(),
            line: None,
            column: None,
            item: Some(item),
            message: message.into(),
        }
    }

    fn from_json(source: &str, e: &serde_json::Error) -> Self {
        ParseError::at_line(source, e.line(), e.column(), e.to_string())
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
            if let Some(col) = self.column {
                write!(f, ":{col}")?;
            }
        }
        if let Some(item) = &self.item {
            write!(f, " {item}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parses a character file. `source` names the input in error messages.
pub fn parse_characters(text: &str, source: &str) -> Result<Vec<Character>, ParseError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| parse_character_line(line, i + 1, source))
        .collect()
}

fn parse_character_line(line: &str, lineno: usize, source: &str) -> Result<Character, ParseError> {
    let mut coords: Vec<Coord> = Vec::new();
    let mut offset = 0;
    for token in line.split_whitespace() {
        let col = line[offset..].find(token).map_or(offset, |p| offset + p) + 1;
        offset = col - 1 + token.len();
        let value: Coord = token.parse().map_err(|_| {
            ParseError::at_line(source, lineno, col, format!("{token:?} is not a non-negative integer"))
        })?;
        if coords.last().is_some_and(|prev| *prev >= value) {
            return Err(ParseError::at_line(
                source,
                lineno,
                col,
                format!("coordinates must be strictly increasing ({value} after {})", coords.last().unwrap()),
            ));
        }
        coords.push(value);
    }
    Ok(Character::new(coords).expect("checked increasing"))
}

/// Writes characters in the line format.
pub fn format_characters(chars: &[Character]) -> String {
    chars
        .iter()
        .map(|c| {
            let mut line = c.coords().iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
            line.push('\n');
            line
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawSupport {
    Explicit { elements: Vec<Coord> },
    Enumerated {
        #[serde(flatten)]
        family: Family,
    },
    Periodic { prefix: Vec<u8>, pattern: Vec<u8> },
}

fn bits(v: &[u8], field: &str) -> Result<Vec<bool>, String> {
    v.iter()
        .enumerate()
        .map(|(i, b)| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(format!("{field}[{i}] = {other} is not a bit")),
        })
        .collect()
}

fn support_from_value(value: Value) -> Result<SupportSpec, String> {
    let raw: RawSupport = serde_json::from_value(value).map_err(|e| e.to_string())?;
    match raw {
        RawSupport::Explicit { elements } => SupportSpec::explicit(elements).map_err(|e| e.to_string()),
        RawSupport::Enumerated { family } => SupportSpec::enumerated(family).map_err(|e| e.to_string()),
        RawSupport::Periodic { prefix, pattern } => {
            SupportSpec::periodic(bits(&prefix, "prefix")?, bits(&pattern, "pattern")?)
                .map_err(|e| e.to_string())
        }
    }
}

/// Parses one support object.
pub fn parse_support(text: &str, source: &str) -> Result<SupportSpec, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::from_json(source, &e))?;
    support_from_value(value).map_err(|m| ParseError::at_item(source, "$".into(), m))
}

/// Parses an array of support objects, or a single object as a one-element list.
pub fn parse_supports(text: &str, source: &str) -> Result<Vec<SupportSpec>, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::from_json(source, &e))?;
    match value {
        Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, v)| support_from_value(v).map_err(|m| ParseError::at_item(source, format!("[{i}]"), m)))
            .collect(),
        v @ Value::Object(_) => Ok(vec![support_from_value(v).map_err(|m| ParseError::at_item(source, "$".into(), m))?]),
        _ => Err(ParseError::at_item(source, "$".into(), "expected a support object or an array of them")),
    }
}

/// Parses an array of `[support, support]` pairs.
pub fn parse_support_pairs(text: &str, source: &str) -> Result<Vec<(SupportSpec, SupportSpec)>, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::from_json(source, &e))?;
    let Value::Array(items) = value else {
        return Err(ParseError::at_item(source, "$".into(), "expected an array of pairs"));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Array(mut pair) if pair.len() == 2 => {
                let second = pair.pop().expect("len 2");
                let first = pair.pop().expect("len 2");
                let a = support_from_value(first).map_err(|m| ParseError::at_item(source, format!("[{i}][0]"), m))?;
                let b = support_from_value(second).map_err(|m| ParseError::at_item(source, format!("[{i}][1]"), m))?;
                Ok((a, b))
            }
            _ => Err(ParseError::at_item(source, format!("[{i}]"), "expected a two-element array")),
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitTerms {
    terms: Vec<Value>,
}

fn big_from_value(v: &Value) -> Option<BigUint> {
    match v {
        Value::Number(n) => n.as_u64().map(BigUint::from),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

/// Parses a sequence object `{"family": …, "params": …}`.
pub fn parse_sequence(text: &str, source: &str) -> Result<SequenceGen, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::from_json(source, &e))?;
    let err = |m: String| ParseError::at_item(source, "$".into(), m);
    if value.get("family").and_then(Value::as_str) == Some("explicit") {
        let params = value.get("params").cloned().unwrap_or(Value::Null);
        let raw: ExplicitTerms = serde_json::from_value(params).map_err(|e| err(e.to_string()))?;
        let terms = raw
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| big_from_value(t).ok_or_else(|| err(format!("terms[{i}] is not a non-negative integer"))))
            .collect::<Result<Vec<_>, _>>()?;
        return SequenceGen::explicit(terms).map_err(|e| err(e.to_string()));
    }
    let family: Family = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
    SequenceGen::from_family(family).map_err(|e| err(e.to_string()))
}

/// A JSON integer, as a decimal string above 2^53.
pub fn json_uint(n: u64) -> Value {
    if n > MAX_SAFE_JSON_INT {
        Value::String(n.to_string())
    } else {
        Value::from(n)
    }
}

pub fn json_big(n: &BigUint) -> Value {
    match u64::try_from(n) {
        Ok(v) => json_uint(v),
        Err(_) => Value::String(n.to_string()),
    }
}

pub fn json_coords(coords: &[Coord]) -> Value {
    Value::Array(coords.iter().map(|c| json_uint(*c)).collect())
}

/// Reads an integer written by [`json_uint`].
pub fn read_uint(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

/// JSON form of a support, in the input format.
pub fn support_to_json(x: &SupportSpec) -> Value {
    if let Some(elements) = x.as_explicit() {
        return json!({"kind": "explicit", "elements": json_coords(elements)});
    }
    if let Some(family) = x.family() {
        let mut v = serde_json::to_value(family).expect("family serializes");
        v["kind"] = json!("enumerated");
        return v;
    }
    let (prefix, pattern) = x.periodic_parts().expect("three representations");
    let bits = |b: &[bool]| b.iter().map(|x| u8::from(*x)).collect::<Vec<_>>();
    json!({"kind": "periodic", "prefix": bits(prefix), "pattern": bits(pattern)})
}

/// Re-checks every guarantee row of a witness report against its support.
/// Returns the number of mismatching rows.
pub fn reverify_witness_report(text: &str) -> Result<usize, ParseError> {
    let source = "report";
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::from_json(source, &e))?;
    let err = |item: &str, m: &str| ParseError::at_item(source, item.to_string(), m.to_string());
    let coords = |v: &Value, item: &str| -> Result<Vec<Coord>, ParseError> {
        v.as_array()
            .ok_or_else(|| err(item, "expected an integer array"))?
            .iter()
            .map(|c| read_uint(c).ok_or_else(|| err(item, "expected an integer")))
            .collect()
    };
    let support = SupportSpec::explicit(coords(&value["witness_support"], "witness_support")?)
        .map_err(|e| err("witness_support", &e.to_string()))?;
    let rows = value["guarantees"]
        .as_array()
        .ok_or_else(|| err("guarantees", "expected an array"))?;
    let mut mismatches = 0;
    for (i, row) in rows.iter().enumerate() {
        let item = format!("guarantees[{i}]");
        let chi = Character::new(coords(&row["character"], &item)?).map_err(|e| err(&item, &e.to_string()))?;
        let sign = row["sign"].as_i64().ok_or_else(|| err(&item, "sign must be 1 or -1"))?;
        if i64::from(chi.evaluate(&support).as_i8()) != sign {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}
