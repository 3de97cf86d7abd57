//! System documents: TOML files describing one planar system.
//!
//! ```toml
//! shape = "case1"                 # optional: case1 | case2
//! variables = ["x", "y"]          # optional, must be exactly this
//! parameters = ["a", "b"]
//! constants = ["sqrt33"]          # optional catalog constant ids
//! xdot = "-y*(1 - a*x)"
//! ydot = "x + b*y^2"
//! [defaults]                      # optional, used by `period`
//! a = "1/2"
//! [inverses]                      # optional: symbol = polynomial it inverts
//! ```
//!
//! Errors are reported as `line:col: message`, positions 1-based in the file.

use std::collections::BTreeMap;

use serde::Deserialize;
use toml::Spanned;

use isochron::catalog::{Catalog, SystemDocument};
use isochron::exprparse::{field_context, parse_poly_in};
use isochron::lienard::Shape;
use isochron::polyalg::{parse_rational, Q};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    shape: Option<Spanned<String>>,
    variables: Option<Spanned<Vec<String>>>,
    #[serde(default)]
    parameters: Vec<String>,
    #[serde(default)]
    constants: Vec<Spanned<String>>,
    #[serde(default)]
    inverses: BTreeMap<String, Spanned<String>>,
    #[serde(default)]
    defaults: BTreeMap<String, Spanned<DefaultValue>>,
    xdot: Spanned<String>,
    ydot: Spanned<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DefaultValue {
    Int(i64),
    Text(String),
}

/// 1-based line and column of a byte offset.
pub fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
    (line, col)
}

fn at(text: &str, offset: usize, msg: impl AsRef<str>) -> String {
    let (l, c) = line_col(text, offset);
    format!("{}:{}: {}", l, c, msg.as_ref())
}

/// Byte offset in the file of a (line, col) position inside a string value.
fn value_offset(text: &str, span: std::ops::Range<usize>, line: usize, col: usize) -> usize {
    let raw = &text[span.clone()];
    let mut start = span.start;
    if raw.starts_with("\"\"\"") || raw.starts_with("'''") {
        start += 3;
        if text[start..].starts_with('\n') {
            start += 1;
        } else if text[start..].starts_with("\r\n") {
            start += 2;
        }
    } else if raw.starts_with('"') || raw.starts_with('\'') {
        start += 1;
    }
    let mut off = start;
    for _ in 1..line {
        match text[off..span.end].find('\n') {
            Some(i) => off += i + 1,
            None => break,
        }
    }
    text[off..span.end].char_indices().nth(col.saturating_sub(1)).map(|(i, _)| off + i).unwrap_or(off)
}

pub fn parse_document(text: &str, cat: &Catalog) -> Result<SystemDocument, String> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        match e.span() {
            Some(s) => at(text, s.start, msg),
            None => format!("1:1: {}", msg),
        }
    })?;

    if let Some(v) = &raw.variables {
        if v.get_ref() != &["x".to_string(), "y".to_string()] {
            return Err(at(text, v.span().start, "variables must be [\"x\", \"y\"]"));
        }
    }
    let shape = match &raw.shape {
        None => None,
        Some(s) => match s.get_ref().to_ascii_lowercase().as_str() {
            "case1" => Some(Shape::Case1),
            "case2" => Some(Shape::Case2),
            other => return Err(at(text, s.span().start, format!("shape must be case1 or case2, got `{}`", other))),
        },
    };
    for c in &raw.constants {
        if cat.constant(c.get_ref()).is_err() {
            return Err(at(text, c.span().start, format!("unknown constant `{}`", c.get_ref())));
        }
    }
    let mut defaults = BTreeMap::new();
    for (k, v) in &raw.defaults {
        let q: Option<Q> = match v.get_ref() {
            DefaultValue::Int(i) => Some(Q::from_integer((*i).into())),
            DefaultValue::Text(s) => parse_rational(s.trim()),
        };
        let q = q.ok_or_else(|| at(text, v.span().start, format!("default for `{}` must be an integer or p/q", k)))?;
        defaults.insert(k.clone(), q);
    }

    // Parse here first so that errors point into the file.
    let mut names = raw.parameters.clone();
    names.extend(raw.constants.iter().map(|c| c.get_ref().clone()));
    names.extend(raw.inverses.keys().cloned());
    let ctx = field_context(&names).map_err(|e| format!("1:1: {}", e.message))?;
    let fields = [("xdot", &raw.xdot)].into_iter().chain([("ydot", &raw.ydot)]).chain(raw.inverses.iter().map(|(k, v)| (k.as_str(), v)));
    for (name, v) in fields {
        if let Err(e) = parse_poly_in(v.get_ref(), &ctx) {
            let off = value_offset(text, v.span(), e.line, e.col);
            return Err(at(text, off, format!("{}: {}", name, e.message)));
        }
    }

    Ok(SystemDocument {
        shape,
        parameters: raw.parameters,
        constants: raw.constants.into_iter().map(Spanned::into_inner).collect(),
        inverses: raw.inverses.into_iter().map(|(k, v)| (k, v.into_inner())).collect(),
        defaults,
        xdot: raw.xdot.into_inner(),
        ydot: raw.ydot.into_inner(),
    })
}

/// Identifier tokens of a polynomial line, in order of appearance.
pub fn identifiers(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_number = false;
    for ch in line.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_alphabetic() || ch == '_' || (!cur.is_empty() && ch.is_ascii_digit()) {
            if !in_number {
                cur.push(ch);
            }
        } else {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            in_number = ch.is_ascii_digit();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> Catalog {
        Catalog::builtin().unwrap()
    }

    #[test]
    fn parses_a_document() {
        let d = parse_document("parameters = [\"a\"]\nxdot = \"-y\"\nydot = \"x + a*x*y^2\"\n[defaults]\na = \"1/2\"\n", &cat()).unwrap();
        assert_eq!(d.parameters, vec!["a"]);
        assert_eq!(d.defaults["a"], Q::new(1.into(), 2.into()));
    }

    #[test]
    fn polynomial_errors_point_into_the_file() {
        let text = "parameters = []\nxdot = \"-y\"\nydot = \"x + q*y\"\n";
        let e = parse_document(text, &cat()).unwrap_err();
        assert!(e.starts_with("3:13:"), "{}", e);
    }

    #[test]
    fn toml_errors_carry_positions() {
        let e = parse_document("xdot = \"-y\"\nydot = \n", &cat()).unwrap_err();
        assert!(e.starts_with("2:"), "{}", e);
        let e = parse_document("xdot = \"-y\"\nydot = \"x\"\nvariables = [\"x\", \"z\"]\n", &cat()).unwrap_err();
        assert!(e.starts_with("3:13:"), "{}", e);
    }

    #[test]
    fn identifiers_skip_numbers() {
        assert_eq!(identifiers("2*a11*x^2 - b02 + 3*e"), vec!["a11", "x", "b02", "e"]);
    }
}
