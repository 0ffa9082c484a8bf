//! Expression language for scalar fields on ℝⁿ.
//!
//! Grammar: variables `x1..xn` (aliases `x`, `y`, `z` for the first three
//! coordinates), literals, `+ - * /`, integer `^` (right associative, binds
//! tighter than unary minus), and the functions `sin cos exp sqrt tanh`.
//! Evaluation is generic over [`Scalar`], so gradients come from one dual
//! pass per coordinate instead of finite differences.

mod parser;

pub use parser::ParseError;

use std::fmt;

use crate::dual::{seed_point, Dual, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Fun(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("point has {found} coordinates, field expects {expected}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {value}")]
    NegativeSqrt { value: f64 },
    #[error("zero raised to negative power {exponent}")]
    ZeroToNegativePower { exponent: i32 },
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Parsed expression over `arity` variables, evaluable with exact
/// forward-mode gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    arity: usize,
    ast: Expr,
}

impl ScalarField {
    /// Parse `text` as a field on ℝⁿ with `n = arity` variables.
    pub fn parse(text: &str, arity: usize) -> Result<Self, ParseError> {
        let ast = parser::parse(text, arity)?;
        Ok(ScalarField { arity, ast })
    }

    /// The constant field with the given value.
    pub fn constant(value: f64, arity: usize) -> Self {
        ScalarField {
            arity,
            ast: Expr::Num(value),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_scalar(point)?;
        if !v.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(v)
    }

    /// Exact gradient via one dual pass per coordinate.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        let g = self.gradient_scalar(point)?;
        if g.iter().any(|c| !c.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        Ok(g)
    }

    /// Evaluate with any scalar type (dual numbers give derivatives).
    pub fn eval_scalar<T: Scalar>(&self, point: &[T]) -> Result<T, EvalError> {
        if point.len() != self.arity {
            return Err(EvalError::ArityMismatch {
                expected: self.arity,
                found: point.len(),
            });
        }
        eval_node(&self.ast, point)
    }

    /// Gradient in any scalar type; with `T = Dual` the entries carry the
    /// directional derivative of the gradient itself (exact Hessian action).
    pub fn gradient_scalar<T: Scalar>(&self, point: &[T]) -> Result<Vec<T>, EvalError> {
        if point.len() != self.arity {
            return Err(EvalError::ArityMismatch {
                expected: self.arity,
                found: point.len(),
            });
        }
        let mut grad = Vec::with_capacity(self.arity);
        for i in 0..self.arity {
            let seeded: Vec<Dual<T>> = seed_point(point, i);
            grad.push(eval_node(&self.ast, &seeded)?.du);
        }
        Ok(grad)
    }

    /// -(self^2 + c); the sign guarantees a negative orbit integral.
    pub(crate) fn negated_square_plus(&self, c: f64) -> Self {
        ScalarField {
            arity: self.arity,
            ast: Expr::Neg(Box::new(Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Pow(Box::new(self.ast.clone()), 2)),
                Box::new(Expr::Num(c)),
            ))),
        }
    }

    /// self^2 + c; the sign guarantees a positive orbit integral.
    pub(crate) fn square_plus(&self, c: f64) -> Self {
        ScalarField {
            arity: self.arity,
            ast: Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Pow(Box::new(self.ast.clone()), 2)),
                Box::new(Expr::Num(c)),
            ),
        }
    }
}

fn eval_node<T: Scalar>(node: &Expr, x: &[T]) -> Result<T, EvalError> {
    match node {
        Expr::Num(v) => Ok(T::from_f64(*v)),
        Expr::Var(i) => Ok(x[*i]),
        Expr::Neg(inner) => Ok(-eval_node(inner, x)?),
        Expr::Bin(op, a, b) => {
            let lhs = eval_node(a, x)?;
            let rhs = eval_node(b, x)?;
            match op {
                BinOp::Add => Ok(lhs + rhs),
                BinOp::Sub => Ok(lhs - rhs),
                BinOp::Mul => Ok(lhs * rhs),
                BinOp::Div => {
                    if rhs.value() == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    Ok(lhs / rhs)
                }
            }
        }
        Expr::Pow(base, k) => {
            let b = eval_node(base, x)?;
            if *k < 0 && b.value() == 0.0 {
                return Err(EvalError::ZeroToNegativePower { exponent: *k });
            }
            Ok(b.powi(*k))
        }
        Expr::Fun(f, arg) => {
            let a = eval_node(arg, x)?;
            match f {
                Func::Sin => Ok(a.sin()),
                Func::Cos => Ok(a.cos()),
                Func::Exp => Ok(a.exp()),
                Func::Tanh => Ok(a.tanh()),
                Func::Sqrt => {
                    if a.value() < 0.0 {
                        return Err(EvalError::NegativeSqrt { value: a.value() });
                    }
                    Ok(a.sqrt())
                }
            }
        }
    }
}

// Printing with minimal parentheses; parse(to_string()) evaluates
// identically (checked by a round-trip property test).

fn precedence(node: &Expr) -> u8 {
    match node {
        Expr::Num(v) if *v < 0.0 => 1, // prints with a leading '-'
        Expr::Num(_) | Expr::Var(_) | Expr::Fun(..) => 4,
        Expr::Pow(..) => 3,
        Expr::Neg(_) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, node: &Expr, min_prec: u8) -> fmt::Result {
    let prec = precedence(node);
    let parens = prec < min_prec;
    if parens {
        write!(f, "(")?;
    }
    match node {
        Expr::Num(v) => {
            if *v == v.trunc() && v.abs() < 1e15 {
                write!(f, "{v:.1}")?;
            } else {
                write!(f, "{v:.17e}")?;
            }
        }
        Expr::Var(i) => write!(f, "x{}", i + 1)?,
        Expr::Neg(inner) => {
            write!(f, "-")?;
            write_expr(f, inner, 2)?;
        }
        Expr::Bin(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => ("+", 0, 1),
                BinOp::Sub => ("-", 0, 1),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
            };
            write_expr(f, a, lp)?;
            write!(f, "{sym}")?;
            write_expr(f, b, rp)?;
        }
        Expr::Pow(base, k) => {
            write_expr(f, base, 4)?;
            if *k < 0 {
                write!(f, "^({k})")?;
            } else {
                write!(f, "^{k}")?;
            }
        }
        Expr::Fun(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, arg, 0)?;
            write!(f, ")")?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, &self.ast, 0)
    }
}
