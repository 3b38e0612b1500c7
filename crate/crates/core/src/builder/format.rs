//! Line-oriented `key = value` format for model specifications.
//!
//! Values are integers, reals, `True`/`False`, a bare `-` (unset),
//! parenthesized tuples and bracketed lists, nested freely. `#` starts a
//! comment line. Rendering is canonical: one space after each comma, one
//! space around `=`, tuples and lists keep their original brackets.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum SpecValue {
    Int(i64),
    Real(f64),
    Bool(bool),
    Unset,
    Tuple(Vec<SpecValue>),
    List(Vec<SpecValue>),
}

impl SpecValue {
    /// Items of a tuple or list.
    pub fn items(&self) -> Option<&[SpecValue]> {
        match self {
            SpecValue::Tuple(v) | SpecValue::List(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for SpecValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn seq(f: &mut fmt::Formatter<'_>, open: char, close: char, items: &[SpecValue]) -> fmt::Result {
            write!(f, "{open}")?;
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "{close}")
        }
        match self {
            SpecValue::Int(v) => write!(f, "{v}"),
            SpecValue::Real(v) if v.fract() == 0.0 && v.is_finite() => write!(f, "{v:.1}"),
            SpecValue::Real(v) => write!(f, "{v}"),
            SpecValue::Bool(true) => f.write_str("True"),
            SpecValue::Bool(false) => f.write_str("False"),
            SpecValue::Unset => f.write_str("-"),
            SpecValue::Tuple(items) => seq(f, '(', ')', items),
            SpecValue::List(items) => seq(f, '[', ']', items),
        }
    }
}

/// Ordered key/value entries with their source line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpecDocument {
    pub entries: Vec<(String, SpecValue, usize)>,
}

impl SpecDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, SpecValue, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::SpecParse { line: line_no, message: "expected `key = value`".into() })?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::SpecParse { line: line_no, message: format!("invalid key {key:?}") });
            }
            if entries.iter().any(|(k, _, _)| k == key) {
                return Err(Error::SpecParse { line: line_no, message: format!("duplicate key {key}") });
            }
            let mut p = Parser { s: value.trim().as_bytes(), pos: 0, line: line_no };
            let v = p.value()?;
            p.skip_ws();
            if p.pos != p.s.len() {
                return Err(p.err("trailing characters after value"));
            }
            entries.push((key.to_string(), v, line_no));
        }
        Ok(Self { entries })
    }

    pub fn push(&mut self, key: &str, value: SpecValue) {
        let line = self.entries.len() + 1;
        self.entries.push((key.to_string(), value, line));
    }

    pub fn get(&self, key: &str) -> Option<(&SpecValue, usize)> {
        self.entries.iter().find(|(k, _, _)| k == key).map(|(_, v, l)| (v, *l))
    }
}

impl fmt::Display for SpecDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v, _) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::SpecParse { line: self.line, message: format!("{msg} (column {})", self.pos + 1) }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn value(&mut self) -> Result<SpecValue> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => self.seq(b')').map(SpecValue::Tuple),
            Some(b'[') => self.seq(b']').map(SpecValue::List),
            Some(_) => self.atom(),
            None => Err(self.err("missing value")),
        }
    }

    fn seq(&mut self, close: u8) -> Result<Vec<SpecValue>> {
        self.pos += 1;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.value()?);
            self.skip_ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(items);
                }
                _ => return Err(self.err(&format!("expected ',' or '{}'", close as char))),
            }
        }
    }

    fn atom(&mut self) -> Result<SpecValue> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == b',' || c == b')' || c == b']' || c.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        let tok = std::str::from_utf8(&self.s[start..self.pos]).map_err(|_| self.err("non-UTF-8 token"))?;
        match tok {
            "-" => Ok(SpecValue::Unset),
            "True" | "true" => Ok(SpecValue::Bool(true)),
            "False" | "false" => Ok(SpecValue::Bool(false)),
            _ => {
                if let Ok(v) = tok.parse::<i64>() {
                    Ok(SpecValue::Int(v))
                } else if let Ok(v) = tok.parse::<f64>() {
                    if v.is_finite() {
                        Ok(SpecValue::Real(v))
                    } else {
                        Err(self.err("non-finite number"))
                    }
                } else {
                    Err(self.err(&format!("unrecognized token {tok:?}")))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_values() {
        let doc = SpecDocument::parse("pooling_list = [-1, [1, (1, 4)], -1]\n").unwrap();
        let (v, line) = doc.get("pooling_list").unwrap();
        assert_eq!(line, 1);
        assert_eq!(
            *v,
            SpecValue::List(vec![
                SpecValue::Int(-1),
                SpecValue::List(vec![SpecValue::Int(1), SpecValue::Tuple(vec![SpecValue::Int(1), SpecValue::Int(4)])]),
                SpecValue::Int(-1),
            ])
        );
    }

    #[test]
    fn canonical_rendering_normalizes_spacing() {
        let doc = SpecDocument::parse("# comment\n\n  x=[ (1,2),[3 ,4] ]\ny = -\nz = 0.5\nq = 2.0\n").unwrap();
        assert_eq!(doc.to_string(), "x = [(1, 2), [3, 4]]\ny = -\nz = 0.5\nq = 2.0\n");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = SpecDocument::parse("a = 1\nb = [1, 2\n").unwrap_err();
        assert!(matches!(err, Error::SpecParse { line: 2, .. }));
        assert!(SpecDocument::parse("a = 1\na = 2\n").is_err());
        assert!(SpecDocument::parse("a = foo\n").is_err());
        assert!(SpecDocument::parse("just text\n").is_err());
    }
}
