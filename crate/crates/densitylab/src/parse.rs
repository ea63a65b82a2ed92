//! Text syntax for set expressions.
//!
//! ```text
//! E      := empty | full | fin{n, ...} | ap(a, d) | blocks(SCHEME, E)
//!         | union(E, E) | inter(E, E) | diff(E, E) | compl(E)
//!         | shift(E, k) | codes("head|cycle", stride)
//! SCHEME := geo(b[, c]) | poly(e) | tri | lin(c)
//! ```
//!
//! Whitespace is ignored between tokens. The printer is `Display` on
//! [`SetExpr`], and `parse_expr(&e.to_string()) == Ok(e)`.

use std::fmt;

use densitylab_core::{Branch, IntervalScheme, SetExpr};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn parse_expr(text: &str) -> Result<SetExpr, ParseError> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error_at(p.pos, "unexpected trailing input"));
    }
    Ok(e)
}

pub fn parse_scheme(text: &str) -> Result<IntervalScheme, ParseError> {
    let mut p = Parser { src: text, pos: 0 };
    let s = p.scheme()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error_at(p.pos, "unexpected trailing input"));
    }
    Ok(s)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error_at(&self, offset: usize, message: impl Into<String>) -> ParseError {
        let before = &self.src[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map_or(0, |i| i + 1);
        ParseError {
            line,
            column: before[line_start..].chars().count() + 1,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(got) => Err(self.error_at(self.pos, format!("expected '{c}', found '{got}'"))),
            None => Err(self.error_at(self.pos, format!("expected '{c}', found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<(usize, &'a str), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(match self.rest().chars().next() {
                Some(c) => self.error_at(start, format!("expected a name, found '{c}'")),
                None => self.error_at(start, "expected a name, found end of input"),
            });
        }
        self.pos += len;
        Ok((start, &self.src[start..start + len]))
    }

    fn integer(&mut self) -> Result<(usize, i128), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let mut len = 0;
        if self.rest().starts_with(['-', '+']) {
            len = 1;
        }
        let digits = self.rest()[len..]
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len() - len);
        if digits == 0 {
            return Err(match self.rest().chars().next() {
                Some(c) => self.error_at(start, format!("expected an integer, found '{c}'")),
                None => self.error_at(start, "expected an integer, found end of input"),
            });
        }
        let text = &self.rest()[..len + digits];
        let v = text
            .parse::<i128>()
            .ok()
            .filter(|v| i64::try_from(*v).is_ok() || u64::try_from(*v).is_ok())
            .ok_or_else(|| self.error_at(start, "integer out of range"))?;
        self.pos += len + digits;
        Ok((start, v))
    }

    fn natural(&mut self) -> Result<(usize, u64), ParseError> {
        let (at, v) = self.integer()?;
        u64::try_from(v)
            .map(|v| (at, v))
            .map_err(|_| self.error_at(at, "expected a non-negative integer"))
    }

    fn signed(&mut self) -> Result<i64, ParseError> {
        let (at, v) = self.integer()?;
        i64::try_from(v).map_err(|_| self.error_at(at, "shift out of range"))
    }

    /// `,` between arguments, or a precise arity error at the closing paren.
    fn separator(&mut self, name: &str, arity: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(',') => {
                self.pos += 1;
                Ok(())
            }
            Some(')') => Err(self.error_at(self.pos, format!("{name} takes {arity} arguments"))),
            _ => self.expect(','),
        }
    }

    fn close(&mut self, name: &str, arity: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(',') => Err(self.error_at(
                self.pos,
                format!("{name} takes {arity} argument{}", if arity == 1 { "" } else { "s" }),
            )),
            _ => self.expect(')'),
        }
    }

    fn expr(&mut self) -> Result<SetExpr, ParseError> {
        let (at, name) = self.ident()?;
        let range = |p: &Self, e: densitylab_core::Error| p.error_at(at, e.to_string());
        match name {
            "empty" => Ok(SetExpr::empty()),
            "full" => Ok(SetExpr::full()),
            "fin" => {
                self.expect('{')?;
                let mut v = Vec::new();
                if self.peek() != Some('}') {
                    loop {
                        v.push(self.natural()?.1);
                        if self.peek() != Some(',') {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                self.expect('}')?;
                SetExpr::finite(v).map_err(|e| range(self, e))
            }
            "ap" => {
                self.expect('(')?;
                let a = self.natural()?.1;
                self.separator(name, 2)?;
                let d = self.natural()?.1;
                self.close(name, 2)?;
                SetExpr::ap(a, d).map_err(|e| range(self, e))
            }
            "blocks" => {
                self.expect('(')?;
                let s = self.scheme()?;
                self.separator(name, 2)?;
                let e = self.expr()?;
                self.close(name, 2)?;
                Ok(SetExpr::blocks(s, e))
            }
            "union" | "inter" | "diff" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.separator(name, 2)?;
                let b = self.expr()?;
                self.close(name, 2)?;
                Ok(match name {
                    "union" => SetExpr::union(a, b),
                    "inter" => SetExpr::inter(a, b),
                    _ => SetExpr::diff(a, b),
                })
            }
            "compl" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.close(name, 1)?;
                Ok(SetExpr::complement(a))
            }
            "shift" => {
                self.expect('(')?;
                let a = self.expr()?;
                self.separator(name, 2)?;
                let k = self.signed()?;
                self.close(name, 2)?;
                Ok(SetExpr::translate(a, k))
            }
            "codes" => {
                self.expect('(')?;
                let b = self.branch()?;
                self.separator(name, 2)?;
                let s = self.natural()?.1;
                self.close(name, 2)?;
                SetExpr::codes(b, s).map_err(|e| range(self, e))
            }
            _ => Err(self.error_at(at, format!("unknown set constructor '{name}'"))),
        }
    }

    fn branch(&mut self) -> Result<Branch, ParseError> {
        self.expect('"')?;
        let start = self.pos;
        let len = self
            .rest()
            .find('"')
            .ok_or_else(|| self.error_at(start, "unterminated branch literal"))?;
        let text = &self.src[start..start + len];
        let b = text.parse().map_err(|e: densitylab_core::Error| self.error_at(start, e.to_string()))?;
        self.pos += len + 1;
        Ok(b)
    }

    fn scheme(&mut self) -> Result<IntervalScheme, ParseError> {
        let (at, name) = self.ident()?;
        let range = |p: &Self, e: densitylab_core::Error| p.error_at(at, e.to_string());
        match name {
            "tri" => Ok(IntervalScheme::Triangular),
            "geo" => {
                self.expect('(')?;
                let b = self.natural()?.1;
                let c = if self.peek() == Some(',') {
                    self.pos += 1;
                    self.natural()?.1
                } else {
                    0
                };
                self.close(name, 2)?;
                IntervalScheme::geometric(b, c).map_err(|e| range(self, e))
            }
            "poly" => {
                self.expect('(')?;
                let (eat, e) = self.natural()?;
                self.close(name, 1)?;
                let e = u32::try_from(e).map_err(|_| self.error_at(eat, "exponent out of range"))?;
                IntervalScheme::polynomial(e).map_err(|e| range(self, e))
            }
            "lin" => {
                self.expect('(')?;
                let c = self.natural()?.1;
                self.close(name, 1)?;
                IntervalScheme::linear(c).map_err(|e| range(self, e))
            }
            _ => Err(self.error_at(at, format!("unknown scheme '{name}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(s: &str) -> ParseError {
        parse_expr(s).unwrap_err()
    }

    #[test]
    fn examples() {
        let a = parse_expr("blocks(geo(2,1), ap(2,2))").unwrap();
        assert_eq!(a, densitylab_core::verify::a_star());
        assert_eq!(a.to_string(), "blocks(geo(2,1), ap(2,2))");
        let s = parse_expr("shift(fin{1,2}, -1)").unwrap();
        assert_eq!(s, SetExpr::translate(SetExpr::finite(vec![1, 2]).unwrap(), -1));
        assert!(err("ap(0,3)").message.contains("at least 1"));
    }

    #[test]
    fn whitespace_and_lines() {
        let e = parse_expr(" union (\n  ap( 1 ,2 ),\n\tcompl(empty) ) ").unwrap();
        assert_eq!(e.to_string(), "union(ap(1,2), compl(empty))");
        let x = err("union(ap(1,2),\n  bogus(3))");
        assert_eq!((x.line, x.column), (2, 3));
        assert_eq!(parse_expr("fin{}").unwrap(), SetExpr::finite(vec![]).unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        let x = err("union(full)");
        assert_eq!((x.line, x.column), (1, 11));
        assert!(x.message.contains("2 arguments"));
        let x = err("compl(full, empty)");
        assert_eq!(x.column, 11);
        assert_eq!(err("full full").column, 6);
        assert_eq!(err("fin{3,1}").column, 1);
        assert_eq!(err("blocks(lin(0), full)").column, 8);
        assert_eq!(err("codes(\"01\", 1)").column, 8);
        assert!(err("ap(1,").message.contains("end of input"));
        assert!(err("shift(full, 99999999999999999999)").message.contains("range"));
    }

    #[test]
    fn schemes() {
        assert_eq!(parse_scheme("geo(3)").unwrap(), IntervalScheme::geometric(3, 0).unwrap());
        assert_eq!(parse_scheme("tri").unwrap(), IntervalScheme::Triangular);
        assert!(parse_scheme("poly(1)").is_err());
        assert!(parse_scheme("geo(2,1,1)").is_err());
    }
}
