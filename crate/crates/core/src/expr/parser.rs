//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' int)?
//! int    := '-'? digits | '(' '-'? digits ')'
//! base   := number | 'x'digits | '(' expr ')' | func '(' expr ')'
//! func   := exp | sin | cos
//! ```
//!
//! Whitespace is ignored. Numbers are decimal literals with an optional
//! fraction and exponent and are stored as exact rationals.

use num_rational::Rational64;

use super::{ExprError, Func, ScalarExpr};

/// Parses `text` as an expression over the coordinates `x1..x{n}`.
pub fn parse(text: &str, n: usize) -> Result<ScalarExpr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        dim: n,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(got) => {
                    Err(self.error(format!("expected `{}`, found `{}`", c as char, got as char)))
                }
                None => Err(self.error(format!("expected `{}`, found end of input", c as char))),
            }
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = ScalarExpr::add(acc, self.term()?);
            } else if self.eat(b'-') {
                acc = ScalarExpr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ExprError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = ScalarExpr::mul(acc, self.factor()?);
            } else if self.eat(b'/') {
                acc = ScalarExpr::div(acc, self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<ScalarExpr, ExprError> {
        if self.eat(b'-') {
            return Ok(ScalarExpr::neg(self.factor()?));
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let k = self.exponent()?;
            Ok(ScalarExpr::pow(base, k))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<i32, ExprError> {
        let paren = self.eat(b'(');
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mut k: i32 = digits.parse().map_err(|_| ExprError::Syntax {
            pos: start,
            msg: format!("exponent `{digits}` is too large"),
        })?;
        if negative {
            k = -k;
        }
        if paren {
            self.expect(b')')?;
        }
        Ok(k)
    }

    fn base(&mut self) -> Result<ScalarExpr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.symbol(),
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn symbol(&mut self) -> Result<ScalarExpr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(f) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(ScalarExpr::call(f, arg));
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.dim {
                    return Err(ExprError::CoordinateOutOfRange {
                        index,
                        dim: self.dim,
                        pos: start,
                    });
                }
                return Ok(ScalarExpr::var(index - 1));
            }
        }
        Err(ExprError::UnknownSymbol {
            name: name.to_string(),
            pos: start,
        })
    }

    fn number(&mut self) -> Result<ScalarExpr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            std::str::from_utf8(&p.src[s..p.pos]).unwrap().to_string()
        };
        let int_part = digits(self);
        let mut frac_part = String::new();
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            frac_part = digits(self);
        }
        if int_part.is_empty() && frac_part.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        let mut exp10: i32 = 0;
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            let mut negative = false;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                negative = self.src[self.pos] == b'-';
                self.pos += 1;
            }
            let e = digits(self);
            if e.is_empty() {
                // `2exp(...)` style input: leave the `e` for the caller to reject
                self.pos = save;
            } else {
                exp10 = e.parse().unwrap_or(i32::MAX);
                if negative {
                    exp10 = -exp10;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string();
        let overflow = || ExprError::ConstantOverflow {
            text: text.clone(),
            pos: start,
        };
        let mantissa: i64 = format!("{int_part}{frac_part}")
            .parse::<i64>()
            .map_err(|_| overflow())?;
        let scale = exp10
            .checked_sub(frac_part.len() as i32)
            .ok_or_else(overflow)?;
        let pow10 = |k: u32| 10i64.checked_pow(k).ok_or_else(overflow);
        let value = if scale >= 0 {
            let m = mantissa
                .checked_mul(pow10(scale as u32)?)
                .ok_or_else(overflow)?;
            Rational64::from_integer(m)
        } else {
            Rational64::new(mantissa, pow10(scale.unsigned_abs())?)
        };
        Ok(ScalarExpr::constant(value))
    }
}
