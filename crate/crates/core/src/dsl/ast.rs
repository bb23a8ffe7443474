use std::fmt;

use serde::Serialize;

/// Byte range `[start, end)` into the source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn point(at: usize) -> Self {
        Self { start: at, end: at }
    }

    pub fn join(self, other: SourceSpan) -> Self {
        Self {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    P,
    R,
    Q,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Func {
    Log,
    Exp,
    Lnq,
    Pow,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "log" => Some(Func::Log),
            "exp" => Some(Func::Exp),
            "lnq" => Some(Func::Lnq),
            "pow" => Some(Func::Pow),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Log => "log",
            Func::Exp => "exp",
            Func::Lnq => "lnq",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ExprKind {
    Number(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

impl Expr {
    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Number(_) | ExprKind::Var(_) => {}
            ExprKind::Neg(inner) => inner.visit(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.visit(f);
                rhs.visit(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.visit(f)),
        }
    }

    /// First node referencing `var`.
    pub fn find_var(&self, var: Var) -> Option<SourceSpan> {
        let mut found = None;
        self.visit(&mut |e| {
            if found.is_none() && e.kind == ExprKind::Var(var) {
                found = Some(e.span);
            }
        });
        found
    }

    /// First node that needs a q value: the variable `q` or a call to `lnq`.
    pub fn find_q_use(&self) -> Option<SourceSpan> {
        let mut found = None;
        self.visit(&mut |e| {
            if found.is_some() {
                return;
            }
            match e.kind {
                ExprKind::Var(Var::Q)
                | ExprKind::Call {
                    func: Func::Lnq, ..
                } => found = Some(e.span),
                _ => {}
            }
        });
        found
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Number(x) => write!(f, "{x}"),
            ExprKind::Var(Var::P) => f.write_str("p"),
            ExprKind::Var(Var::R) => f.write_str("r"),
            ExprKind::Var(Var::Q) => f.write_str("q"),
            ExprKind::Neg(inner) => write!(f, "(-{inner})"),
            ExprKind::Binary { op, lhs, rhs } => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({lhs}{sym}{rhs})")
            }
            ExprKind::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
