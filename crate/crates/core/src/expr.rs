//! Text and JSON front-end for [`PhasePoly`].
//!
//! Grammar accepted by [`parse_poly`]:
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor ('*' factor)*
//! factor   := base ('^' nonneg-int)?
//! base     := 'q' | 'p' | 'hbar' | 'i' | rational | '(' expr ')' | '-' factor
//! rational := int ('/' posint)?
//! ```
//!
//! Whitespace is insignificant and multiplication must be explicit. `/` only
//! ever appears inside a rational literal.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeffs::{rational_to_string, GaussianRational};
use crate::poly::{Monomial, PhasePoly};

/// Largest exponent accepted after `^`.
pub const MAX_EXPONENT: u32 = 64;
/// Largest `(q, p)` or `ħ` degree a power may produce.
pub const MAX_POWER_DEGREE: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Exponent,
    Division,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?}Error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Q,
    P,
    Hbar,
    I,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("integer {}", n),
        Tok::Q => "'q'".into(),
        Tok::P => "'p'".into(),
        Tok::Hbar => "'hbar'".into(),
        Tok::I => "'i'".into(),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Caret => "'^'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Eof => "end of input".into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = src.char_indices().peekable();
    while let Some(&(start, ch)) = chars.peek() {
        let (tl, tc) = (line, column);
        if ch == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if ch.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        let simple = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            chars.next();
            column += 1;
            out.push(Token { tok, line: tl, column: tc });
            continue;
        }
        if ch.is_ascii_digit() {
            let mut end = start;
            while let Some(&(i, c)) = chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                end = i + c.len_utf8();
                chars.next();
                column += 1;
            }
            let n = BigInt::from_str(&src[start..end]).expect("digit run");
            out.push(Token { tok: Tok::Int(n), line: tl, column: tc });
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            let mut end = start;
            while let Some(&(i, c)) = chars.peek() {
                if !(c.is_ascii_alphanumeric() || c == '_') {
                    break;
                }
                end = i + c.len_utf8();
                chars.next();
                column += 1;
            }
            let tok = match &src[start..end] {
                "q" => Tok::Q,
                "p" => Tok::P,
                "hbar" => Tok::Hbar,
                "i" => Tok::I,
                other => {
                    return Err(ParseError {
                        kind: ParseErrorKind::Syntax,
                        line: tl,
                        column: tc,
                        message: format!("unknown identifier '{}'", other),
                    })
                }
            };
            out.push(Token { tok, line: tl, column: tc });
            continue;
        }
        return Err(ParseError {
            kind: ParseErrorKind::Syntax,
            line: tl,
            column: tc,
            message: format!("unexpected character {:?}", ch),
        });
    }
    out.push(Token { tok: Tok::Eof, line, column });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, kind: ParseErrorKind, at: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            line: at.line,
            column: at.column,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<PhasePoly, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<PhasePoly, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    acc = acc * self.factor()?;
                }
                Tok::Slash => {
                    let t = self.peek().clone();
                    return Err(self.err(
                        ParseErrorKind::Division,
                        &t,
                        "'/' may only join two integer literals; write (1/n)*expr",
                    ));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<PhasePoly, ParseError> {
        let base = self.base()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let t = self.bump();
        match t.tok {
            Tok::Int(ref n) => {
                let e = u32::try_from(n.clone())
                    .ok()
                    .filter(|e| *e <= MAX_EXPONENT)
                    .ok_or_else(|| {
                        self.err(
                            ParseErrorKind::Exponent,
                            &t,
                            format!("exponent {} exceeds the limit of {}", n, MAX_EXPONENT),
                        )
                    })?;
                let too_big = |d: u32| u64::from(d) * u64::from(e) > u64::from(MAX_POWER_DEGREE);
                if too_big(base.degree()) || too_big(base.hbar_degree()) {
                    return Err(self.err(
                        ParseErrorKind::Exponent,
                        &t,
                        format!("power would exceed degree {}", MAX_POWER_DEGREE),
                    ));
                }
                Ok(base.pow(e))
            }
            Tok::Minus | Tok::LParen => Err(self.err(
                ParseErrorKind::Exponent,
                &t,
                "exponent must be a non-negative integer literal",
            )),
            ref other => Err(self.err(
                ParseErrorKind::Exponent,
                &t,
                format!("expected exponent, found {}", describe(other)),
            )),
        }
    }

    fn base(&mut self) -> Result<PhasePoly, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Q => Ok(PhasePoly::q()),
            Tok::P => Ok(PhasePoly::p()),
            Tok::Hbar => Ok(PhasePoly::hbar()),
            Tok::I => Ok(PhasePoly::constant(GaussianRational::i())),
            Tok::Int(n) => {
                if self.peek().tok != Tok::Slash {
                    return Ok(PhasePoly::constant(BigRational::from_integer(n).into()));
                }
                self.bump();
                let d = self.bump();
                match d.tok {
                    Tok::Int(den) if !den.is_zero() => {
                        Ok(PhasePoly::constant(BigRational::new(n, den).into()))
                    }
                    Tok::Int(_) => Err(self.err(ParseErrorKind::Division, &d, "division by zero")),
                    ref other => Err(self.err(
                        ParseErrorKind::Division,
                        &d,
                        format!("'/' needs a positive integer denominator, found {}", describe(other)),
                    )),
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(self.err(
                        ParseErrorKind::Syntax,
                        &close,
                        format!("expected ')', found {}", describe(&close.tok)),
                    ));
                }
                Ok(inner)
            }
            Tok::Minus => Ok(-self.factor()?),
            Tok::Slash => Err(self.err(
                ParseErrorKind::Division,
                &t,
                "'/' may only join two integer literals; write (1/n)*expr",
            )),
            ref other => Err(self.err(
                ParseErrorKind::Syntax,
                &t,
                format!("unexpected {}", describe(other)),
            )),
        }
    }
}

/// Parses an expression into an exact polynomial.
pub fn parse_poly(src: &str) -> Result<PhasePoly, ParseError> {
    let toks = tokenize(src)?;
    let mut parser = Parser { toks, pos: 0 };
    let out = parser.expr()?;
    let t = parser.peek().clone();
    match t.tok {
        Tok::Eof => Ok(out),
        Tok::Slash => Err(parser.err(
            ParseErrorKind::Division,
            &t,
            "'/' may only join two integer literals; write (1/n)*expr",
        )),
        ref other => Err(parser.err(
            ParseErrorKind::Syntax,
            &t,
            format!("unexpected {} (multiplication must be explicit)", describe(other)),
        )),
    }
}

fn fmt_rational_factor(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("({}/{})", r.numer(), r.denom())
    }
}

fn fmt_rational_plain(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn fmt_monomial(m: &Monomial) -> Vec<String> {
    let mut parts = Vec::new();
    for (name, e) in [("p", m.p), ("q", m.q), ("hbar", m.hbar)] {
        match e {
            0 => {}
            1 => parts.push(name.to_string()),
            _ => parts.push(format!("{}^{}", name, e)),
        }
    }
    parts
}

/// Splits a nonzero coefficient into a sign and a factor string; the factor
/// is `None` when it is exactly 1.
fn fmt_coeff(c: &GaussianRational) -> (bool, Option<String>) {
    let (re, im) = (c.re(), c.im());
    let negative = re.is_negative() || (re.is_zero() && im.is_negative());
    let (re, im) = if negative {
        (-re.clone(), -im.clone())
    } else {
        (re.clone(), im.clone())
    };
    let s = if im.is_zero() {
        if re.is_one() {
            None
        } else {
            Some(fmt_rational_factor(&re))
        }
    } else if re.is_zero() {
        if im.is_one() {
            Some("i".to_string())
        } else {
            Some(format!("{}*i", fmt_rational_factor(&im)))
        }
    } else {
        let im_part = if im.abs().is_one() {
            "i".to_string()
        } else {
            format!("{}*i", fmt_rational_factor(&im.abs()))
        };
        let sep = if im.is_negative() { "-" } else { "+" };
        Some(format!("({} {} {})", fmt_rational_plain(&re), sep, im_part))
    };
    (negative, s)
}

/// Canonical text form; `parse_poly(&format_poly(f)) == f`.
pub fn format_poly(f: &PhasePoly) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (m, c)) in f.terms().enumerate() {
        let (negative, coeff) = fmt_coeff(c);
        let mut parts = fmt_monomial(m);
        match coeff {
            Some(s) => parts.insert(0, s),
            None if parts.is_empty() => parts.push("1".to_string()),
            None => {}
        }
        let body = parts.join("*");
        match (idx, negative) {
            (0, false) => out.push_str(&body),
            (0, true) => {
                out.push('-');
                out.push_str(&body);
            }
            (_, false) => {
                out.push_str(" + ");
                out.push_str(&body);
            }
            (_, true) => {
                out.push_str(" - ");
                out.push_str(&body);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SchemaError: {0}")]
pub struct SchemaError(pub String);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    q: u32,
    p: u32,
    hbar: u32,
    re: String,
    im: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyJson {
    terms: Vec<TermJson>,
}

/// JSON value `{"terms":[{"q":a,"p":b,"hbar":h,"re":"n/d","im":"n/d"}, ...]}`.
fn poly_doc(f: &PhasePoly) -> PolyJson {
    PolyJson {
        terms: f
            .terms()
            .map(|(m, c)| TermJson {
                q: m.q,
                p: m.p,
                hbar: m.hbar,
                re: rational_to_string(c.re()),
                im: rational_to_string(c.im()),
            })
            .collect(),
    }
}

pub fn poly_to_json(f: &PhasePoly) -> serde_json::Value {
    serde_json::to_value(poly_doc(f)).expect("serializable")
}

/// Compact JSON with keys in `q, p, hbar, re, im` order.
pub fn poly_to_json_string(f: &PhasePoly) -> String {
    serde_json::to_string(&poly_doc(f)).expect("serializable")
}

fn parse_json_rational(s: &str) -> Result<BigRational, SchemaError> {
    let bad = || SchemaError(format!("invalid rational {:?}", s));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let valid = |t: &str, signed: bool| {
        let digits = if signed { t.strip_prefix('-').unwrap_or(t) } else { t };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(n, true) || !valid(d, false) {
        return Err(bad());
    }
    let n = BigInt::from_str(n).map_err(|_| bad())?;
    let d = BigInt::from_str(d).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(SchemaError(format!("zero denominator in {:?}", s)));
    }
    Ok(BigRational::new(n, d))
}

pub fn poly_from_json(value: &serde_json::Value) -> Result<PhasePoly, SchemaError> {
    let doc: PolyJson =
        serde_json::from_value(value.clone()).map_err(|e| SchemaError(e.to_string()))?;
    let mut seen = std::collections::BTreeSet::new();
    let mut out = PhasePoly::zero();
    for t in doc.terms {
        let m = Monomial::new(t.q, t.p, t.hbar);
        if !seen.insert(m) {
            return Err(SchemaError(format!(
                "duplicate term q^{} p^{} hbar^{}",
                t.q, t.p, t.hbar
            )));
        }
        let c = GaussianRational::new(parse_json_rational(&t.re)?, parse_json_rational(&t.im)?);
        out = out + PhasePoly::monomial(m, c);
    }
    Ok(out)
}

pub fn poly_from_json_str(s: &str) -> Result<PhasePoly, SchemaError> {
    let v: serde_json::Value = serde_json::from_str(s).map_err(|e| SchemaError(e.to_string()))?;
    poly_from_json(&v)
}

/// Serialize then deserialize.
pub fn poly_json_roundtrip(f: &PhasePoly) -> Result<PhasePoly, SchemaError> {
    poly_from_json_str(&poly_to_json_string(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(s: &str) -> ParseErrorKind {
        parse_poly(s).unwrap_err().kind
    }

    #[test]
    fn parses_two_term_polynomial() {
        let f = parse_poly("p^3*q - (3/2)*hbar^2*q").unwrap();
        let expected = PhasePoly::from_terms([
            (Monomial::new(1, 3, 0), GaussianRational::one()),
            (Monomial::new(1, 0, 2), GaussianRational::ratio(-3, 2)),
        ]);
        assert_eq!(f, expected);
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn division_rules() {
        assert_eq!(kind("i*hbar/2"), ParseErrorKind::Division);
        assert_eq!(kind("(1/2)/3"), ParseErrorKind::Division);
        assert_eq!(kind("1/0"), ParseErrorKind::Division);
        assert_eq!(kind("1/q"), ParseErrorKind::Division);
        let f = parse_poly("(1/2)*i*hbar").unwrap();
        assert_eq!(
            f.coeff(Monomial::new(0, 0, 1)),
            GaussianRational::i().scale(&BigRational::new(1.into(), 2.into()))
        );
    }

    #[test]
    fn exponent_rules() {
        assert_eq!(kind("q^(-1)"), ParseErrorKind::Exponent);
        assert_eq!(kind("q^-1"), ParseErrorKind::Exponent);
        assert_eq!(kind("q^1/2"), ParseErrorKind::Division);
        assert_eq!(kind("q^p"), ParseErrorKind::Exponent);
        assert_eq!(kind("q^65"), ParseErrorKind::Exponent);
        assert_eq!(kind("((q^64)^64)^64"), ParseErrorKind::Exponent);
        assert_eq!(kind("(hbar^16)^17"), ParseErrorKind::Exponent);
        assert_eq!(parse_poly("(q^16)^16").unwrap().degree(), 256);
        assert_eq!(parse_poly("q^0").unwrap(), PhasePoly::one());
        assert_eq!(parse_poly("2/3^2").unwrap(), parse_poly("4/9").unwrap());
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let e = parse_poly("2q").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!((e.line, e.column), (1, 2));
        let e = parse_poly("q +\n  x").unwrap_err();
        assert_eq!((e.kind, e.line, e.column), (ParseErrorKind::Syntax, 2, 3));
        assert_eq!(kind("(q + p"), ParseErrorKind::Syntax);
        assert_eq!(kind(""), ParseErrorKind::Syntax);
        assert_eq!(kind("q $ p"), ParseErrorKind::Syntax);
        assert_eq!(kind("q^2^3"), ParseErrorKind::Syntax);
    }

    #[test]
    fn unary_minus_binds_a_factor() {
        assert_eq!(parse_poly("-q^2").unwrap(), -parse_poly("q^2").unwrap());
        assert_eq!(parse_poly("q*-p").unwrap(), parse_poly("-(q*p)").unwrap());
        assert_eq!(parse_poly("--q").unwrap(), PhasePoly::q());
    }

    #[test]
    fn formatting() {
        assert_eq!(format_poly(&PhasePoly::zero()), "0");
        let f = parse_poly("p*q - i*hbar/2 + 0").map(|_| ()).unwrap_err();
        assert_eq!(f.kind, ParseErrorKind::Division);
        let f = parse_poly("p*q - (1/2)*i*hbar").unwrap();
        assert_eq!(format_poly(&f), "p*q - (1/2)*i*hbar");
        let g = parse_poly("-q + 1 - i + (2/3 - (1/5)*i)*p^2*hbar").unwrap();
        let text = format_poly(&g);
        assert_eq!(text, "(2/3 - (1/5)*i)*p^2*hbar - q + (1 - i)");
        assert_eq!(parse_poly(&text).unwrap(), g);
        assert_eq!(format_poly(&parse_poly("-1").unwrap()), "-1");
        assert_eq!(format_poly(&parse_poly("-(3/2)*i").unwrap()), "-(3/2)*i");
    }

    #[test]
    fn json_roundtrip_and_schema_errors() {
        let f = parse_poly("p^3*q - (3/2)*i*hbar^2*q + 7").unwrap();
        assert_eq!(poly_json_roundtrip(&f).unwrap(), f);
        let json = poly_to_json_string(&parse_poly("-(3/2)*i*q").unwrap());
        assert_eq!(json, r#"{"terms":[{"q":1,"p":0,"hbar":0,"re":"0/1","im":"-3/2"}]}"#);
        assert!(poly_from_json_str(r#"{"terms":[]}"#).unwrap().is_zero());
        assert!(poly_from_json_str(r#"{"terms":[{"q":1,"p":0,"hbar":0,"re":"1/2"}]}"#).is_err());
        assert!(poly_from_json_str(r#"{"terms":[{"q":1,"p":0,"hbar":0,"re":"1/0","im":"0"}]}"#)
            .is_err());
        assert!(poly_from_json_str(r#"{"terms":[{"q":-1,"p":0,"hbar":0,"re":"1","im":"0"}]}"#)
            .is_err());
        assert!(poly_from_json_str("[1,2]").is_err());
    }
}
