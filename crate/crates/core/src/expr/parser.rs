//! Recursive-descent parser for the scalar-field expression grammar.
//!
//! Precedence (tightest first): `^` (right associative, integer exponents) >
//! unary `-` > `* /` > `+ -`. Binary operators other than `^` associate left.

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at offset {offset}")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

fn err<T>(message: impl Into<String>, offset: usize) -> Result<T, ParseError> {
    Err(ParseError {
        message: message.into(),
        offset,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, is_int: bool },
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.lex_number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos])
                .expect("identifier bytes are ascii")
                .to_string();
            return Ok((Tok::Ident(name), start));
        }
        err(format!("unexpected character '{}'", c as char), start)
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let mut saw_dot = false;
        let mut saw_exp = false;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() {
                self.pos += 1;
            } else if c == b'.' && !saw_dot && !saw_exp {
                saw_dot = true;
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && !saw_exp {
                // Exponent only if followed by digits (optionally signed);
                // otherwise it's the start of an identifier.
                let mut look = self.pos + 1;
                if look < self.src.len() && (self.src[look] == b'+' || self.src[look] == b'-') {
                    look += 1;
                }
                if look < self.src.len() && self.src[look].is_ascii_digit() {
                    saw_exp = true;
                    self.pos = look + 1;
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("digits are ascii");
        match text.parse::<f64>() {
            Ok(value) => Ok((
                Tok::Num {
                    value,
                    is_int: !saw_dot && !saw_exp,
                },
                start,
            )),
            Err(_) => err(format!("malformed number '{text}'"), start),
        }
    }
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    cursor: usize,
    arity: usize,
}

pub(super) fn parse(text: &str, arity: usize) -> Result<Expr, ParseError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let (tok, offset) = lexer.next()?;
        let end = tok == Tok::End;
        tokens.push((tok, offset));
        if end {
            break;
        }
    }
    if tokens.len() == 1 {
        return err("empty expression", 0);
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        arity,
    };
    let expr = parser.expression()?;
    let (tok, offset) = parser.peek();
    if tok != Tok::End {
        return err("unexpected trailing input", offset);
    }
    Ok(expr)
}

impl Parser {
    fn peek(&self) -> (Tok, usize) {
        self.tokens[self.cursor].clone()
    }

    fn advance(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().0 {
                Tok::Plus => {
                    self.advance();
                    let rhs = self.term()?;
                    lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.advance();
                    let rhs = self.term()?;
                    lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().0 {
                Tok::Star => {
                    self.advance();
                    let rhs = self.factor()?;
                    lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.advance();
                    let rhs = self.factor()?;
                    lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek().0 == Tok::Minus {
            self.advance();
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek().0 == Tok::Caret {
            self.advance();
            let k = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    /// Integer exponent: optionally signed integer literal, a parenthesized
    /// exponent, or a right-associative chain like `2^3`.
    fn exponent(&mut self) -> Result<i32, ParseError> {
        let (tok, offset) = self.peek();
        match tok {
            Tok::LParen => {
                self.advance();
                let k = self.exponent()?;
                let (close, close_off) = self.advance();
                if close != Tok::RParen {
                    return err("expected ')' after exponent", close_off);
                }
                Ok(k)
            }
            Tok::Minus => {
                self.advance();
                Ok(-self.exponent_magnitude()?)
            }
            Tok::Num { .. } => self.exponent_magnitude(),
            _ => err("expected an integer exponent after '^'", offset),
        }
    }

    fn exponent_magnitude(&mut self) -> Result<i32, ParseError> {
        let (tok, offset) = self.advance();
        let value = match tok {
            Tok::Num {
                value,
                is_int: true,
            } => value,
            Tok::Num { is_int: false, .. } => {
                return err("exponent must be an integer literal", offset)
            }
            _ => return err("expected an integer exponent after '^'", offset),
        };
        if value.abs() > i32::MAX as f64 {
            return err("exponent out of range", offset);
        }
        let mut k = value as i64;
        if self.peek().0 == Tok::Caret {
            // Right-associative integer tower, e.g. 2^3^2 = 2^(3^2).
            self.advance();
            let upper = self.exponent()?;
            if upper < 0 {
                return err("negative exponent inside an exponent chain", offset);
            }
            k = match k.checked_pow(upper as u32) {
                Some(v) => v,
                None => return err("exponent out of range", offset),
            };
        }
        if k.abs() > i32::MAX as i64 {
            return err("exponent out of range", offset);
        }
        Ok(k as i32)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.advance();
        match tok {
            Tok::Num { value, .. } => Ok(Expr::Num(value)),
            Tok::LParen => {
                let inner = self.expression()?;
                let (close, close_off) = self.advance();
                if close != Tok::RParen {
                    return err("expected ')'", close_off);
                }
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(&name, offset),
            Tok::End => err("unexpected end of expression", offset),
            _ => err("expected a value", offset),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        let func = match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sqrt" => Some(Func::Sqrt),
            "tanh" => Some(Func::Tanh),
            _ => None,
        };
        if let Some(func) = func {
            let (open, open_off) = self.advance();
            if open != Tok::LParen {
                return err(format!("expected '(' after function '{name}'"), open_off);
            }
            let arg = self.expression()?;
            let (close, close_off) = self.advance();
            if close != Tok::RParen {
                return err(format!("expected ')' closing call to '{name}'"), close_off);
            }
            return Ok(Expr::Fun(func, Box::new(arg)));
        }
        let index = match name {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => name
                .strip_prefix('x')
                .and_then(|digits| digits.parse::<usize>().ok())
                .and_then(|i| i.checked_sub(1)),
        };
        match index {
            Some(i) if i < self.arity => Ok(Expr::Var(i)),
            Some(i) => err(
                format!(
                    "variable '{name}' (coordinate {}) exceeds arity {}",
                    i + 1,
                    self.arity
                ),
                offset,
            ),
            None => err(format!("unknown identifier '{name}'"), offset),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::ScalarField;

    #[test]
    fn parses_paper_template_shape() {
        let f = ScalarField::parse("-(1+x^2)", 3).unwrap();
        assert_eq!(f.eval(&[2.0, 0.0, 0.0]).unwrap(), -5.0);
    }

    #[test]
    fn double_caret_is_a_syntax_error_at_offset_two() {
        let e = ScalarField::parse("x^^2", 3).unwrap_err();
        assert_eq!(e.offset, 2);
    }

    #[test]
    fn precedence_and_associativity() {
        let cases = [
            ("2+3*4", 14.0),
            ("2*3^2", 18.0),
            ("-3^2", -9.0),   // ^ binds tighter than unary minus
            ("2^3^2", 512.0), // right associative
            ("8/4/2", 1.0),   // left associative
            ("8-4-2", 2.0),   // left associative
            ("2*-3", -6.0),   // unary minus as a factor
            ("x^-2", 0.25),   // signed exponent
            ("(x+1)^2", 9.0), // parenthesized base
            ("x^(-2)", 0.25), // parenthesized exponent
            ("1.5e2", 150.0), // scientific literal
            ("sqrt(x^2)", 2.0),
        ];
        for (text, expect) in cases {
            let f = ScalarField::parse(text, 1).unwrap();
            let got = f.eval(&[2.0]).unwrap();
            assert!(
                (got - expect).abs() < 1e-12,
                "`{text}` gave {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScalarField::parse("", 3).is_err());
        assert!(ScalarField::parse("   ", 3).is_err());
        assert!(ScalarField::parse("x+", 3).is_err());
        assert!(ScalarField::parse("(x", 3).is_err());
        assert!(ScalarField::parse("x)", 3).is_err());
        assert!(ScalarField::parse("foo(x)", 3).is_err());
        assert!(ScalarField::parse("w", 3).is_err());
        assert!(ScalarField::parse("x4", 3).is_err()); // arity 3
        assert!(ScalarField::parse("x^2.5", 3).is_err());
        assert!(ScalarField::parse("sin x", 3).is_err());
        assert!(ScalarField::parse("x 2", 3).is_err());
    }

    #[test]
    fn aliases_and_indexed_variables_agree() {
        let a = ScalarField::parse("x*y+z", 3).unwrap();
        let b = ScalarField::parse("x1*x2+x3", 3).unwrap();
        let p = [0.3, -1.2, 0.77];
        assert_eq!(a.eval(&p).unwrap(), b.eval(&p).unwrap());
    }

    #[test]
    fn error_positions_point_at_the_problem() {
        let e = ScalarField::parse("x + foo", 3).unwrap_err();
        assert_eq!(e.offset, 4);
        let e = ScalarField::parse("1 + ", 3).unwrap_err();
        assert_eq!(e.offset, 4);
    }
}
