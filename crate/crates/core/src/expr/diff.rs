use super::{Func, Node, ScalarExpr};

impl ScalarExpr {
    /// Exact partial derivative with respect to the zero-based coordinate `i`.
    pub fn derivative(&self, i: usize) -> ScalarExpr {
        match self.node() {
            Node::Const(_) => ScalarExpr::zero(),
            Node::Var(j) => {
                if *j == i {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            }
            Node::Neg(a) => ScalarExpr::neg(a.derivative(i)),
            Node::Add(a, b) => ScalarExpr::add(a.derivative(i), b.derivative(i)),
            Node::Sub(a, b) => ScalarExpr::sub(a.derivative(i), b.derivative(i)),
            Node::Mul(a, b) => ScalarExpr::add(
                ScalarExpr::mul(a.derivative(i), b.clone()),
                ScalarExpr::mul(a.clone(), b.derivative(i)),
            ),
            Node::Div(a, b) => {
                let da = a.derivative(i);
                let db = b.derivative(i);
                if db.is_zero() {
                    ScalarExpr::div(da, b.clone())
                } else {
                    // (a'b - ab') / b^2
                    ScalarExpr::div(
                        ScalarExpr::sub(
                            ScalarExpr::mul(da, b.clone()),
                            ScalarExpr::mul(a.clone(), db),
                        ),
                        ScalarExpr::pow(b.clone(), 2),
                    )
                }
            }
            Node::Pow(a, k) => {
                if *k == 0 {
                    return ScalarExpr::zero();
                }
                ScalarExpr::mul(
                    ScalarExpr::mul(
                        ScalarExpr::integer(*k as i64),
                        ScalarExpr::pow(a.clone(), k - 1),
                    ),
                    a.derivative(i),
                )
            }
            Node::Call(f, a) => {
                let outer = match f {
                    Func::Exp => self.clone(),
                    Func::Sin => ScalarExpr::call(Func::Cos, a.clone()),
                    Func::Cos => ScalarExpr::neg(ScalarExpr::call(Func::Sin, a.clone())),
                };
                ScalarExpr::mul(outer, a.derivative(i))
            }
        }
    }
}
