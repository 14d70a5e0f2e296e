//! Infix parser: `+ - * /` with the usual precedence, parentheses,
//! identifiers and numeric literals. `/` parses to protected division.
//! A leading `-` is only accepted directly before a numeric literal.

use std::str::FromStr;

use super::{ExpressionTree, Operator, Symbol};
use crate::error::{Error, Result};

impl FromStr for ExpressionTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, bytes: s.as_bytes(), pos: 0 };
        let tree = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(tree)
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::InvalidExpression(format!("{msg} at offset {} in `{}`", self.pos, self.src))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<ExpressionTree> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { Operator::Add } else { Operator::Sub };
            lhs = ExpressionTree::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExpressionTree> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            let op = if c == b'*' { Operator::Mul } else { Operator::Pdiv };
            lhs = ExpressionTree::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<ExpressionTree> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'-') => {
                self.pos += 1;
                match self.peek() {
                    Some(c) if c.is_ascii_digit() || c == b'.' => {
                        let v = self.number()?;
                        Ok(ExpressionTree::constant(-v))
                    }
                    _ => Err(self.error("unary minus is only supported on numeric literals")),
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(ExpressionTree::constant(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric() || matches!(self.bytes[self.pos], b'_' | b'.'))
                {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                ExpressionTree::from_preorder(vec![Symbol::Var(name.to_string())])
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            self.pos += 1;
            if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        let text = &self.src[start..self.pos];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error("invalid numeric literal")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let t: ExpressionTree = "B + C / D".parse().unwrap();
        assert_eq!(t.to_infix(), "(B + (C / D))");
        let t: ExpressionTree = "A - B - C".parse().unwrap();
        assert_eq!(t.to_infix(), "((A - B) - C)");
        let t: ExpressionTree = "B + (A + B) / (2 * A + 3)".parse().unwrap();
        assert_eq!(t.to_infix(), "(B + ((A + B) / ((2 * A) + 3)))");
    }

    #[test]
    fn negative_literals() {
        let t: ExpressionTree = "(X - -2.5)".parse().unwrap();
        assert_eq!(t.symbols()[2], Symbol::Const(-2.5));
        assert_eq!(t.to_infix(), "(X - -2.5)");
        assert!("-X".parse::<ExpressionTree>().is_err());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "A +", "(A + B", "A B", "A + $", "1e999"] {
            assert!(bad.parse::<ExpressionTree>().is_err(), "{bad}");
        }
    }
}
