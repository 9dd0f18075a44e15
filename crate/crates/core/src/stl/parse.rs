//! Recursive-descent parser for the textual formula syntax.
//!
//! ```text
//! until   := or ( "U" interval until )?
//! or      := and ( "|" and )*
//! and     := unary ( "&" unary )*
//! unary   := "!" unary | "G" interval unary | "F" interval unary | atom
//! atom    := "p" digits | "(" until ")"
//! interval:= "[" digits "," digits "]"
//! ```

use super::formula::{Formula, Interval};
use crate::error::{Error, Result};

pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let f = p.until()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse { pos: start, msg: "number out of range".into() })
    }

    fn interval(&mut self) -> Result<Interval> {
        self.expect(b'[')?;
        let start = self.pos;
        let a = self.number()?;
        self.expect(b',')?;
        let b = self.number()?;
        self.expect(b']')?;
        Interval::new(a, b).map_err(|_| Error::Parse {
            pos: start,
            msg: format!("interval [{a},{b}] has lower bound above upper bound"),
        })
    }

    fn until(&mut self) -> Result<Formula> {
        let left = self.or()?;
        if self.eat(b'U') {
            let i = self.interval()?;
            let right = self.until()?;
            return Ok(Formula::until(i, left, right));
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while self.eat(b'|') {
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.eat(b'&') {
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(b'G') => {
                self.pos += 1;
                let i = self.interval()?;
                Ok(Formula::always(i, self.unary()?))
            }
            Some(b'F') => {
                self.pos += 1;
                let i = self.interval()?;
                Ok(Formula::eventually(i, self.unary()?))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(b'p') => {
                self.pos += 1;
                if !self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    return Err(self.error("expected predicate index after 'p'"));
                }
                Ok(Formula::pred(self.number()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let f = self.until()?;
                self.expect(b')')?;
                Ok(f)
            }
            Some(_) => Err(self.error("expected predicate, operator, or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: usize, b: usize) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn nested_until() {
        let f = parse_formula("G[0,3](p1 U[0,3] p0)").unwrap();
        let expected =
            Formula::always(iv(0, 3), Formula::until(iv(0, 3), Formula::pred(1), Formula::pred(0)));
        assert_eq!(f, expected);
    }

    #[test]
    fn atom() {
        assert_eq!(parse_formula("p0").unwrap(), Formula::pred(0));
        assert_eq!(parse_formula("  ( p12 ) ").unwrap(), Formula::pred(12));
    }

    #[test]
    fn reversed_interval_rejected() {
        assert!(matches!(parse_formula("G[3,1] p0"), Err(Error::Parse { .. })));
    }

    #[test]
    fn precedence() {
        let f = parse_formula("!p0 & p1 | p2 U[0,1] p3").unwrap();
        let expected = Formula::until(
            iv(0, 1),
            Formula::or(Formula::and(Formula::not(Formula::pred(0)), Formula::pred(1)), Formula::pred(2)),
            Formula::pred(3),
        );
        assert_eq!(f, expected);
        let g = parse_formula("G[0,2] p0 & p1").unwrap();
        assert_eq!(g, Formula::and(Formula::always(iv(0, 2), Formula::pred(0)), Formula::pred(1)));
    }

    #[test]
    fn errors_carry_position() {
        match parse_formula("p0 & ") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_formula("p0 p1").is_err());
        assert!(parse_formula("q0").is_err());
        assert!(parse_formula("G[0 p0").is_err());
        assert!(parse_formula("(p0").is_err());
    }

    #[test]
    fn pretty_print_reparses() {
        for text in [
            "G[0,3](p1 U[0,3] p0)",
            "G[0,2]((p1 | p2) U[0,3] p0) & F[0,3](p4 | p2)",
            "p0 & (p1 & p2)",
            "(p0 U[0,1] p1) U[1,2] p2",
            "!!p0",
            "G[0,1] !p0",
        ] {
            let f = parse_formula(text).unwrap();
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f, "{text} -> {f}");
        }
        assert_eq!(parse_formula("G[0,3](p1 U[0,3] p0)").unwrap().to_string(), "G[0,3](p1 U[0,3] p0)");
    }
}
