//! Symbolic scalar expressions over chart coordinates.
//!
//! Expressions are immutable trees built from rational constants, the
//! coordinates `x1..xn`, the four arithmetic operators, integer powers and
//! `exp`/`sin`/`cos`. Partial differentiation is exact and closed over the
//! tree type, so every derivative of a metric or structure component that
//! enters a connection formula is analytic.
//!
//! Subtrees are reference counted, which keeps differentiation cheap and
//! lets expressions be shared between threads.

mod diff;
mod parser;

use std::fmt;
use std::sync::Arc;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, Zero};

use crate::scalar::Real;

pub use parser::parse;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("coordinate `x{index}` at position {pos} is outside the chart dimension {dim}")]
    CoordinateOutOfRange {
        index: usize,
        dim: usize,
        pos: usize,
    },
    #[error("constant `{text}` at position {pos} does not fit a 64-bit rational")]
    ConstantOverflow { text: String, pos: usize },
    #[error("division by zero in `{expr}`")]
    DivisionByZero { expr: String },
    #[error("non-finite value in `{expr}`")]
    NonFinite { expr: String },
    #[error("expression uses x{needed} but the point has {got} coordinates")]
    PointTooShort { needed: usize, got: usize },
    #[error("coordinate index {index} is outside 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// Elementary functions supported by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Rational64),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(ScalarExpr),
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    Pow(ScalarExpr, i32),
    Call(Func, ScalarExpr),
}

/// An immutable expression tree in the chart coordinates.
#[derive(Clone, PartialEq)]
pub struct ScalarExpr(Arc<Node>);

#[allow(clippy::should_implement_trait)]
impl ScalarExpr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: Rational64) -> Self {
        ScalarExpr(Arc::new(Node::Const(c)))
    }

    pub fn integer(c: i64) -> Self {
        Self::constant(Rational64::from_integer(c))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    /// Coordinate `x{index+1}` (zero-based index).
    pub fn var(index: usize) -> Self {
        ScalarExpr(Arc::new(Node::Var(index)))
    }

    pub fn as_constant(&self) -> Option<Rational64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    // Constructors below fold only exact identities (0 + a, 1 * a, rational
    // arithmetic on constants), so evaluated values never change.

    pub fn neg(a: ScalarExpr) -> Self {
        match a.node() {
            Node::Const(c) => Self::constant(-*c),
            Node::Neg(inner) => inner.clone(),
            _ => ScalarExpr(Arc::new(Node::Neg(a))),
        }
    }

    pub fn add(a: ScalarExpr, b: ScalarExpr) -> Self {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_constant(), b.as_constant()) {
            if let Some(z) = x.checked_add(&y) {
                return Self::constant(z);
            }
        }
        ScalarExpr(Arc::new(Node::Add(a, b)))
    }

    pub fn sub(a: ScalarExpr, b: ScalarExpr) -> Self {
        if b.is_zero() {
            return a;
        }
        if a.is_zero() {
            return Self::neg(b);
        }
        if let (Some(x), Some(y)) = (a.as_constant(), b.as_constant()) {
            if let Some(z) = x.checked_sub(&y) {
                return Self::constant(z);
            }
        }
        ScalarExpr(Arc::new(Node::Sub(a, b)))
    }

    pub fn mul(a: ScalarExpr, b: ScalarExpr) -> Self {
        if a.is_zero() || b.is_zero() {
            return Self::zero();
        }
        if a.is_one() {
            return b;
        }
        if b.is_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_constant(), b.as_constant()) {
            if let Some(z) = x.checked_mul(&y) {
                return Self::constant(z);
            }
        }
        ScalarExpr(Arc::new(Node::Mul(a, b)))
    }

    /// Quotient; a zero numerator is folded only when the denominator is a
    /// nonzero constant, so poles still surface at evaluation time.
    pub fn div(a: ScalarExpr, b: ScalarExpr) -> Self {
        if b.is_one() {
            return a;
        }
        if let (Some(x), Some(y)) = (a.as_constant(), b.as_constant()) {
            if !y.is_zero() {
                if let Some(z) = x.checked_div(&y) {
                    return Self::constant(z);
                }
            }
        }
        ScalarExpr(Arc::new(Node::Div(a, b)))
    }

    pub fn pow(a: ScalarExpr, k: i32) -> Self {
        if k == 1 {
            return a;
        }
        if k == 0 && a.as_constant().is_some_and(|c| !c.is_zero()) {
            return Self::one();
        }
        ScalarExpr(Arc::new(Node::Pow(a, k)))
    }

    pub fn call(f: Func, a: ScalarExpr) -> Self {
        if f == Func::Sin && a.is_zero() {
            return Self::zero();
        }
        if f != Func::Sin && a.is_zero() {
            return Self::one();
        }
        ScalarExpr(Arc::new(Node::Call(f, a)))
    }

    /// Largest one-based coordinate index used by the expression (0 if none).
    pub fn max_coordinate(&self) -> usize {
        match self.node() {
            Node::Const(_) => 0,
            Node::Var(i) => i + 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_coordinate(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_coordinate().max(b.max_coordinate())
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.size(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Evaluates the expression at `point`.
    ///
    /// Poles and overflow are reported as errors instead of yielding NaN or
    /// infinity.
    pub fn eval<T: Real>(&self, point: &[T]) -> Result<T, ExprError> {
        let needed = self.max_coordinate();
        if needed > point.len() {
            return Err(ExprError::PointTooShort {
                needed,
                got: point.len(),
            });
        }
        self.eval_unchecked(point)
    }

    fn eval_unchecked<T: Real>(&self, p: &[T]) -> Result<T, ExprError> {
        let v = match self.node() {
            Node::Const(c) => rational_to::<T>(*c),
            Node::Var(i) => p[*i],
            Node::Neg(a) => -a.eval_unchecked(p)?,
            Node::Add(a, b) => a.eval_unchecked(p)? + b.eval_unchecked(p)?,
            Node::Sub(a, b) => a.eval_unchecked(p)? - b.eval_unchecked(p)?,
            Node::Mul(a, b) => a.eval_unchecked(p)? * b.eval_unchecked(p)?,
            Node::Div(a, b) => {
                let den = b.eval_unchecked(p)?;
                if den.is_zero() {
                    return Err(ExprError::DivisionByZero {
                        expr: self.to_string(),
                    });
                }
                a.eval_unchecked(p)? / den
            }
            Node::Pow(a, k) => {
                let base = a.eval_unchecked(p)?;
                if *k < 0 && base.is_zero() {
                    return Err(ExprError::DivisionByZero {
                        expr: self.to_string(),
                    });
                }
                base.powi(*k)
            }
            Node::Call(f, a) => {
                let x = a.eval_unchecked(p)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                }
            }
        };
        if !v.is_finite() {
            return Err(ExprError::NonFinite {
                expr: self.to_string(),
            });
        }
        Ok(v)
    }
}

fn rational_to<T: Real>(c: Rational64) -> T {
    if c.is_integer() {
        T::from_i64(*c.numer()).unwrap_or_else(|| T::lit(*c.numer() as f64))
    } else {
        let num = T::from_i64(*c.numer()).unwrap_or_else(|| T::lit(*c.numer() as f64));
        let den = T::from_i64(*c.denom()).unwrap_or_else(|| T::lit(*c.denom() as f64));
        num / den
    }
}

/// Evaluates `e` at `p` (free-function form of [`ScalarExpr::eval`]).
pub fn eval<T: Real>(e: &ScalarExpr, p: &[T]) -> Result<T, ExprError> {
    e.eval(p)
}

/// Exact partial derivative with respect to the one-based coordinate `i`
/// of an `n`-dimensional chart.
pub fn diff(e: &ScalarExpr, i: usize, n: usize) -> Result<ScalarExpr, ExprError> {
    if i == 0 || i > n {
        return Err(ExprError::IndexOutOfRange { index: i, dim: n });
    }
    Ok(e.derivative(i - 1))
}

// Binding strength used by the printer; higher binds tighter.
fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if !c.is_integer() || c.is_negative() => 2,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => 5,
    }
}

struct Wrapped<'a>(&'a ScalarExpr, bool);

impl fmt::Display for Wrapped<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for ScalarExpr {
    /// Prints text that [`parse`] reads back to an equal-valued tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let me = precedence(self.node());
        let w = |e: &'_ ScalarExpr, min: u8| -> bool { precedence(e.node()) < min };
        match self.node() {
            Node::Const(c) => {
                if c.is_integer() {
                    write!(f, "{}", c.numer())
                } else {
                    write!(f, "{}/{}", c.numer(), c.denom())
                }
            }
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "-{}", Wrapped(a, w(a, me + 1))),
            Node::Add(a, b) => write!(f, "{} + {}", Wrapped(a, w(a, me)), Wrapped(b, w(b, me + 1))),
            Node::Sub(a, b) => write!(f, "{} - {}", Wrapped(a, w(a, me)), Wrapped(b, w(b, me + 1))),
            Node::Mul(a, b) => write!(f, "{}*{}", Wrapped(a, w(a, me)), Wrapped(b, w(b, me + 1))),
            Node::Div(a, b) => write!(f, "{}/{}", Wrapped(a, w(a, me)), Wrapped(b, w(b, me + 1))),
            Node::Pow(a, k) => {
                let base = Wrapped(a, w(a, me + 1));
                if *k < 0 {
                    write!(f, "{base}^({k})")
                } else {
                    write!(f, "{base}^{k}")
                }
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2};

    #[test]
    fn zero_constant() {
        let e = parse("0", 2).unwrap();
        assert!(e.is_zero());
        assert_eq!(e.eval(&[0.3, 0.4]).unwrap(), 0.0);
    }

    #[test]
    fn exp_at_origin_and_half() {
        let e = parse("exp(2*x1)", 4).unwrap();
        assert_eq!(e.eval(&[0.0; 4]).unwrap(), 1.0);
        let v: f64 = e.eval(&[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!((v - E).abs() <= 1e-15 * E);
    }

    #[test]
    fn power_times_sine() {
        let e = parse("x1^2 * sin(x2)", 2).unwrap();
        let v: f64 = e.eval(&[2.0, FRAC_PI_2]).unwrap();
        assert!((v - 4.0).abs() < 1e-15);
    }

    #[test]
    fn sum_of_coordinates() {
        let e = parse("x1+x2", 2).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0]).unwrap(), 3.0);
    }

    #[test]
    fn pole_is_reported() {
        let e = parse("1/x1", 2).unwrap();
        let err = e.eval(&[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, ExprError::DivisionByZero { .. }));
        let e = parse("x1^-2", 2).unwrap();
        assert!(matches!(
            e.eval(&[0.0, 1.0]),
            Err(ExprError::DivisionByZero { .. })
        ));
    }

    #[test]
    fn overflow_is_reported() {
        let e = parse("exp(x1)", 1).unwrap();
        assert!(matches!(
            e.eval(&[1000.0]),
            Err(ExprError::NonFinite { .. })
        ));
    }

    #[test]
    fn short_point_is_rejected() {
        let e = parse("x3", 4).unwrap();
        assert!(matches!(
            e.eval(&[1.0, 2.0]),
            Err(ExprError::PointTooShort { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let e = parse("7/3", 3).unwrap();
        for i in 1..=3 {
            assert!(diff(&e, i, 3).unwrap().is_zero());
        }
    }

    #[test]
    fn power_rule() {
        let e = parse("x1^2", 2).unwrap();
        let d = diff(&e, 1, 2).unwrap();
        assert_eq!(d.eval(&[3.0, 0.0]).unwrap(), 6.0);
    }

    #[test]
    fn product_with_exponential() {
        let e = parse("exp(2*x1)*x2", 2).unwrap();
        let d = diff(&e, 1, 2).unwrap();
        let v: f64 = d.eval(&[0.0, 5.0]).unwrap();
        assert!((v - 10.0).abs() < 1e-14);
        // central finite difference, step 1e-5
        let h = 1e-5;
        let fd = (e.eval(&[h, 5.0]).unwrap() - e.eval(&[-h, 5.0]).unwrap()) / (2.0 * h);
        assert!((v - fd).abs() <= 1e-6);
    }

    #[test]
    fn diff_index_range() {
        let e = parse("x1", 2).unwrap();
        assert!(matches!(
            diff(&e, 0, 2),
            Err(ExprError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            diff(&e, 3, 2),
            Err(ExprError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn display_round_trips() {
        for src in [
            "x1 - (x2 - x3)",
            "-x1^2",
            "(-x1)^3",
            "x1/(x2*x3)",
            "2/3*x1",
            "x1^(-2) + cos(x2 - 1/2)",
            "-(x1 + x2)*exp(-x3)",
        ] {
            let e = parse(src, 3).unwrap();
            let again = parse(&e.to_string(), 3).unwrap();
            let p = [0.3, -0.7, 1.1];
            let (a, b): (f64, f64) = (e.eval(&p).unwrap(), again.eval(&p).unwrap());
            assert_eq!(a, b, "{src} printed as {e}");
        }
    }

    #[test]
    fn f32_evaluation() {
        let e = parse("x1^2 * sin(x2)", 2).unwrap();
        let v: f32 = e.eval(&[2.0f32, std::f32::consts::FRAC_PI_2]).unwrap();
        assert!((v - 4.0).abs() < 1e-6);
    }
}
