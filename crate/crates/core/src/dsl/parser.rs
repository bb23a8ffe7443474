//! Tokenizer and recursive-descent parser.
//!
//! ```text
//! source := 'affine' '(' expr ',' expr ',' expr ')' | expr
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | 'p' | 'r' | 'q' | func '(' args ')' | '(' expr ')'
//! func   := 'log' | 'exp' | 'lnq' | 'pow'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus applies to
//! its atom, so `-p^2` is `(-p)^2`.

use super::ast::{BinOp, Expr, ExprKind, Func, SourceSpan, Var};
use super::{Affine, MeasureExpression, ParseError};

/// Deeper nesting is rejected rather than risking the stack.
pub const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(x) => format!("number {x}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token {
                tok,
                span: SourceSpan::new(start, start + 1),
            });
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            i = lex_number(src, i, &mut out)?;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                span: SourceSpan::new(start, i),
            });
        } else {
            let ch = src[start..].chars().next().expect("in bounds");
            return Err(ParseError {
                span: SourceSpan::new(start, start + ch.len_utf8()),
                message: format!("unexpected character {ch:?}"),
                expected: vec![],
            });
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::point(src.len()),
    });
    Ok(out)
}

fn lex_number(src: &str, start: usize, out: &mut Vec<Token>) -> Result<usize, ParseError> {
    let bytes = src.as_bytes();
    let digits = |mut i: usize| {
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    let mut i = digits(start);
    let int_digits = i - start;
    let mut frac_digits = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        let after = digits(i + 1);
        frac_digits = after - (i + 1);
        i = after;
    }
    if int_digits == 0 && frac_digits == 0 {
        return Err(ParseError {
            span: SourceSpan::new(start, i),
            message: "malformed number".into(),
            expected: vec!["digit".into()],
        });
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let end = digits(j);
        if end == j {
            return Err(ParseError {
                span: SourceSpan::new(start, end),
                message: "malformed exponent".into(),
                expected: vec!["digit".into()],
            });
        }
        i = end;
    }
    let value: f64 = src[start..i].parse().map_err(|_| ParseError {
        span: SourceSpan::new(start, i),
        message: "malformed number".into(),
        expected: vec![],
    })?;
    out.push(Token {
        tok: Tok::Number(value),
        span: SourceSpan::new(start, i),
    });
    Ok(i)
}

const ATOM_START: &[&str] = &["number", "'p'", "'r'", "'q'", "function", "'('", "'-'"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError {
            span: t.span,
            message: format!("unexpected {}", t.tok.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[&tok.describe()]))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError {
                span: self.peek().span,
                message: format!("expression nested deeper than {MAX_DEPTH} levels"),
                expected: vec![],
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let base = self.unary()?;
        let out = if self.peek().tok == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            binary(BinOp::Pow, base, exponent)
        } else {
            base
        };
        self.depth -= 1;
        Ok(out)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Minus {
            let minus = self.bump();
            let inner = self.atom()?;
            let span = minus.span.join(inner.span);
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Number(x) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Number(*x),
                    span: t.span,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                Ok(Expr {
                    kind: inner.kind,
                    span: t.span.join(close.span),
                })
            }
            Tok::Ident(name) => {
                let var = match name.as_str() {
                    "p" => Some(Var::P),
                    "r" => Some(Var::R),
                    "q" => Some(Var::Q),
                    _ => None,
                };
                if let Some(var) = var {
                    self.bump();
                    return Ok(Expr {
                        kind: ExprKind::Var(var),
                        span: t.span,
                    });
                }
                if let Some(func) = Func::from_name(name) {
                    self.bump();
                    return self.call(func, t.span);
                }
                if name == "affine" {
                    return Err(ParseError {
                        span: t.span,
                        message: "affine(a, b, expr) may only wrap the whole expression".into(),
                        expected: ATOM_START.iter().map(|s| s.to_string()).collect(),
                    });
                }
                Err(ParseError {
                    span: t.span,
                    message: format!("unknown identifier '{name}'"),
                    expected: ATOM_START.iter().map(|s| s.to_string()).collect(),
                })
            }
            _ => Err(self.unexpected(ATOM_START)),
        }
    }

    fn call(&mut self, func: Func, name_span: SourceSpan) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen)?;
        let args = self.args()?;
        let close = self.expect(Tok::RParen)?;
        let span = name_span.join(close.span);
        if args.len() != func.arity() {
            return Err(ParseError {
                span,
                message: format!(
                    "{} takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                ),
                expected: vec![],
            });
        }
        Ok(Expr {
            kind: ExprKind::Call { func, args },
            span,
        })
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = vec![self.expr()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        Ok(args)
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected(&["operator", "end of input"]))
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = lhs.span.join(rhs.span);
    Expr {
        kind: ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        span,
    }
}

pub(super) fn parse(source: &str) -> Result<MeasureExpression, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let is_affine = matches!(&parser.peek().tok, Tok::Ident(s) if s == "affine")
        && parser.tokens.get(1).map(|t| &t.tok) == Some(&Tok::LParen);
    if !is_affine {
        let body = parser.expr()?;
        parser.finish()?;
        return Ok(MeasureExpression {
            source: source.to_string(),
            body,
            affine: None,
        });
    }
    parser.bump();
    parser.bump();
    let scale = constant(parser.expr()?)?;
    parser.expect(Tok::Comma)?;
    let offset = constant(parser.expr()?)?;
    parser.expect(Tok::Comma)?;
    let body = parser.expr()?;
    parser.expect(Tok::RParen)?;
    parser.finish()?;
    Ok(MeasureExpression {
        source: source.to_string(),
        body,
        affine: Some(Affine { scale, offset }),
    })
}

/// Folds a variable-free expression to its value.
fn constant(e: Expr) -> Result<f64, ParseError> {
    let not_constant = |span| ParseError {
        span,
        message: "affine coefficients must be constant".into(),
        expected: vec!["number".into()],
    };
    if let Some(span) = e.find_var(Var::P).or(e.find_var(Var::R)).or(e.find_q_use()) {
        return Err(not_constant(span));
    }
    let value = super::eval::eval_node(&e, 0.0, 0.0, None).map_err(|m| ParseError {
        span: e.span,
        message: format!("cannot evaluate coefficient: {m}"),
        expected: vec![],
    })?;
    Ok(value)
}
