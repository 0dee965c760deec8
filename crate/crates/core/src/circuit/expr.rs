//! Linear flux expressions such as `"fz + 0.5*fx"` or `"0.25 Phi0 - fx"`.

use std::collections::BTreeMap;

use crate::units::{parse_quantity, Dim};
use crate::{Error, Result};

/// constant + sum(coeff * param), all in units of Phi0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(String, f64)>,
}

impl LinExpr {
    pub fn constant(v: f64) -> Self {
        LinExpr {
            constant: v,
            terms: Vec::new(),
        }
    }

    pub fn eval(&self, params: &BTreeMap<String, f64>) -> Result<f64> {
        let mut v = self.constant;
        for (name, k) in &self.terms {
            let p = params
                .get(name)
                .ok_or_else(|| Error::Netlist(format!("unknown parameter '{name}' in flux expression")))?;
            v += k * p;
        }
        Ok(v)
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|(n, _)| n.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let toks = tokenize(text)?;
        let mut out = LinExpr::default();
        let mut i = 0;
        let mut sign = 1.0;
        let mut expect_term = true;
        while i < toks.len() {
            match &toks[i] {
                Tok::Plus | Tok::Minus if expect_term => {
                    if toks[i] == Tok::Minus {
                        sign = -sign;
                    }
                    i += 1;
                }
                Tok::Plus | Tok::Minus => {
                    sign = if toks[i] == Tok::Minus { -1.0 } else { 1.0 };
                    expect_term = true;
                    i += 1;
                }
                _ if !expect_term => {
                    return Err(Error::Parse(format!("expected '+' or '-' in flux expression '{text}'")))
                }
                Tok::Num(s) => {
                    let x: f64 = s
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad number '{s}' in '{text}'")))?;
                    match (toks.get(i + 1), toks.get(i + 2)) {
                        (Some(Tok::Star), Some(Tok::Ident(name))) => {
                            out.terms.push((name.clone(), sign * x));
                            i += 3;
                        }
                        (Some(Tok::Ident(unit)), _) => {
                            let v = parse_quantity(&format!("{s} {unit}"), Dim::Flux)?;
                            out.constant += sign * v;
                            i += 2;
                        }
                        _ => {
                            return Err(Error::Parse(format!(
                                "flux constant '{s}' in '{text}' needs a unit suffix (Phi0)"
                            )))
                        }
                    }
                    sign = 1.0;
                    expect_term = false;
                }
                Tok::Ident(name) => {
                    out.terms.push((name.clone(), sign));
                    i += 1;
                    sign = 1.0;
                    expect_term = false;
                }
                Tok::Star => return Err(Error::Parse(format!("unexpected '*' in flux expression '{text}'"))),
            }
        }
        if expect_term {
            return Err(Error::Parse(format!("incomplete flux expression '{text}'")));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch == '+' {
            out.push(Tok::Plus);
            i += 1;
        } else if ch == '-' {
            out.push(Tok::Minus);
            i += 1;
        } else if ch == '*' {
            out.push(Tok::Star);
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent: e/E followed by digits (optionally signed)
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Tok::Num(chars[start..i].iter().collect()));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else {
            return Err(Error::Parse(format!(
                "unexpected character '{ch}' in flux expression '{text}'"
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_combinations() {
        let e = LinExpr::parse("fz + 0.5*fx").unwrap();
        assert_eq!(e.constant, 0.0);
        assert_eq!(e.terms, vec![("fz".into(), 1.0), ("fx".into(), 0.5)]);
        let e = LinExpr::parse("0.5 Phi0 - fx").unwrap();
        assert_eq!(e.constant, 0.5);
        assert_eq!(e.terms, vec![("fx".into(), -1.0)]);
        let e = LinExpr::parse("-1e-4 Phi0").unwrap();
        assert!((e.constant + 1e-4).abs() < 1e-18);
        let p = BTreeMap::from([("fz".to_string(), 0.5), ("fx".to_string(), 0.2)]);
        assert!((LinExpr::parse("fz - 0.5*fx").unwrap().eval(&p).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(LinExpr::parse("0.5").is_err());
        assert!(LinExpr::parse("fz +").is_err());
        assert!(LinExpr::parse("fz fx").is_err());
        assert!(LinExpr::parse("0.5 nH").is_err());
        assert!(LinExpr::parse("fz / 2").is_err());
    }
}
