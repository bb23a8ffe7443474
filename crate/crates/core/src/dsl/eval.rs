use super::ast::{BinOp, Expr, ExprKind, Func, Var};
use crate::measures::{q_logarithm, QParameter};

/// Value of `e` with `p`, `r` bound to one index.
pub(super) fn eval_node(e: &Expr, p: f64, r: f64, q: Option<QParameter>) -> Result<f64, String> {
    let q_value = || q.ok_or_else(|| "q is referenced but no q value was supplied".to_string());
    let v = match &e.kind {
        ExprKind::Number(x) => *x,
        ExprKind::Var(Var::P) => p,
        ExprKind::Var(Var::R) => r,
        ExprKind::Var(Var::Q) => q_value()?.value(),
        ExprKind::Neg(inner) => -eval_node(inner, p, r, q)?,
        ExprKind::Binary { op, lhs, rhs } => {
            let a = eval_node(lhs, p, r, q)?;
            let b = eval_node(rhs, p, r, q)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err("division by zero".into());
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        ExprKind::Call { func, args } => {
            let a = eval_node(&args[0], p, r, q)?;
            match func {
                Func::Log => {
                    if a.is_nan() || a <= 0.0 {
                        return Err(format!("log of nonpositive argument {a}"));
                    }
                    a.ln()
                }
                Func::Exp => a.exp(),
                Func::Lnq => q_logarithm(a, q_value()?)
                    .map_err(|_| format!("lnq of nonpositive argument {a}"))?,
                Func::Pow => a.powf(eval_node(&args[1], p, r, q)?),
            }
        }
    };
    Ok(v)
}
