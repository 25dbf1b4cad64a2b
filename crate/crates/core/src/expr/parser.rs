//! Recursive-descent parser for the field grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' integer)?
//! unary  := '-'? atom
//! atom   := number | 'i' | 'pi' | 'e' | 'x' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'sin' | 'cos'
//! ```

use super::node::Node;
use super::FieldError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(u64),
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
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), FieldError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self
                .src
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                self.pos += 1;
            }
            let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok((Tok::Ident(name), start));
        }
        Err(FieldError::Syntax {
            offset: start,
            message: format!("unexpected character '{}'", c as char),
        })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), FieldError> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let int_digits = digits(self);
        let mut integral = true;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            integral = false;
            let frac = digits(self);
            if int_digits == 0 && frac == 0 {
                return Err(FieldError::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
        }
        // exponent only when digits follow, so "2e" is not swallowed
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            } else {
                integral = false;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if integral {
            if let Ok(v) = text.parse::<u64>() {
                return Ok((Tok::Int(v), start));
            }
        }
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| FieldError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })
    }
}

pub(super) struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str) -> Result<Self, FieldError> {
        let mut lexer = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let (tok, offset) = lexer.next()?;
        Ok(Self { lexer, tok, offset })
    }

    fn bump(&mut self) -> Result<(), FieldError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn unexpected(&self, what: &str) -> FieldError {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(v) => format!("number {v}"),
            t => format!("{t:?}"),
        };
        FieldError::Syntax {
            offset: self.offset,
            message: format!("expected {what}, found {found}"),
        }
    }

    pub(super) fn parse_all(mut self) -> Result<Node, FieldError> {
        let node = self.expr()?;
        if self.tok != Tok::End {
            return Err(self.unexpected("operator or end of input"));
        }
        Ok(node)
    }

    fn expr(&mut self) -> Result<Node, FieldError> {
        let mut lhs = self.term()?;
        loop {
            let ctor: fn(Box<Node>, Box<Node>) -> Node = match self.tok {
                Tok::Plus => Node::Add,
                Tok::Minus => Node::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = ctor(Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, FieldError> {
        let mut lhs = self.factor()?;
        loop {
            let ctor: fn(Box<Node>, Box<Node>) -> Node = match self.tok {
                Tok::Star => Node::Mul,
                Tok::Slash => Node::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = ctor(Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, FieldError> {
        let base = self.unary()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let Tok::Int(n) = self.tok else {
            return Err(self.unexpected("integer exponent"));
        };
        let n = u32::try_from(n).map_err(|_| FieldError::Syntax {
            offset: self.offset,
            message: "exponent too large".into(),
        })?;
        self.bump()?;
        Ok(Node::Pow(Box::new(base), n))
    }

    fn unary(&mut self) -> Result<Node, FieldError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            let inner = self.atom()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node, FieldError> {
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Node::Num(v))
            }
            Tok::Int(v) => {
                self.bump()?;
                Ok(Node::Num(v as f64))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.offset;
                let leaf = match name.as_str() {
                    "x" => Some(Node::X),
                    "i" => Some(Node::ImagUnit),
                    "pi" => Some(Node::Pi),
                    "e" => Some(Node::Euler),
                    _ => None,
                };
                if let Some(leaf) = leaf {
                    self.bump()?;
                    return Ok(leaf);
                }
                let func: fn(Box<Node>) -> Node = match name.as_str() {
                    "exp" => Node::Exp,
                    "sin" => Node::Sin,
                    "cos" => Node::Cos,
                    _ => return Err(FieldError::UnknownIdentifier { name, offset }),
                };
                self.bump()?;
                if self.tok != Tok::LParen {
                    return Err(self.unexpected("'(' after function name"));
                }
                self.bump()?;
                let arg = self.expr()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump()?;
                Ok(func(Box::new(arg)))
            }
            other => {
                self.tok = other;
                Err(self.unexpected("operand"))
            }
        }
    }
}
