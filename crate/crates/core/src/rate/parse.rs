use super::{Piecewise, RateExpr};
use crate::error::ParseError;

type PResult<T> = std::result::Result<T, ParseError>;

/// Parses a rate expression. Whitespace is insignificant.
pub fn parse_rate(text: &str) -> PResult<RateExpr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(ParseError::Empty);
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(format!("unexpected `{}`", p.peek_char())));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> char {
        self.peek().map(char::from).unwrap_or('\0')
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> PResult<()> {
        if self.eat(c) {
            Ok(())
        } else if self.at_end() {
            Err(self.error(format!("expected `{}`, found end of input", c as char)))
        } else {
            Err(self.error(format!("expected `{}`, found `{}`", c as char, self.peek_char())))
        }
    }

    fn expr(&mut self) -> PResult<RateExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = lhs + self.term()?;
            } else if self.eat(b'-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> PResult<RateExpr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = lhs * self.factor()?;
            } else if self.eat(b'/') {
                lhs = lhs / self.factor()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> PResult<RateExpr> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                match self.factor()? {
                    RateExpr::Const(c) => Ok(RateExpr::Const(-c)),
                    other => Ok(-other),
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number().map(RateExpr::Const),
            Some(c) if c.is_ascii_alphabetic() => self.ident_factor(),
            Some(_) => Err(self.error(format!("unexpected `{}`", self.peek_char()))),
        }
    }

    fn ident_factor(&mut self) -> PResult<RateExpr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        match name {
            "t" => Ok(RateExpr::Time),
            "sin" | "cos" | "exp" => {
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(match name {
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    _ => arg.exp(),
                })
            }
            "piecewise" => self.piecewise(start),
            _ => Err(ParseError::UnknownIdentifier { pos: start, name: name.to_string() }),
        }
    }

    fn piecewise(&mut self, start: usize) -> PResult<RateExpr> {
        self.expect(b'[')?;
        let mut segments = Vec::new();
        loop {
            self.expect(b'(')?;
            let s = self.signed_number()?;
            self.expect(b',')?;
            let v = self.signed_number()?;
            self.expect(b')')?;
            segments.push((s, v));
            if !self.eat(b',') {
                break;
            }
        }
        self.expect(b']')?;
        Piecewise::new(segments)
            .map(RateExpr::Piecewise)
            .map_err(|e| ParseError::Syntax { pos: start, msg: e.to_string() })
    }

    fn signed_number(&mut self) -> PResult<f64> {
        self.skip_ws();
        let neg = self.eat(b'-');
        self.skip_ws();
        let x = self.number()?;
        Ok(if neg { -x } else { x })
    }

    /// Decimal literal with optional fraction and exponent.
    fn number(&mut self) -> PResult<f64> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("expected a number"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or(ParseError::Syntax { pos: start, msg: format!("invalid number `{text}`") })
    }
}
