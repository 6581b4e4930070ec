//! Dense least squares with an explicit numerical-rank decision.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Thresholds deciding numerical rank and consistency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankPolicy {
    /// Singular values at or below `rel_cutoff · σ_max` count as zero.
    pub rel_cutoff: f64,
    /// Singular values with `σ/σ_max` in `(ambiguous_low, ambiguous_high)`
    /// are too close to the cutoff to classify.
    pub ambiguous_low: f64,
    pub ambiguous_high: f64,
    /// A solution is exact iff `max |Ax − b| <= residual_tol`.
    pub residual_tol: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy {
            rel_cutoff: 1e-10,
            ambiguous_low: 1e-13,
            ambiguous_high: 1e-7,
            residual_tol: 1e-9,
        }
    }
}

const REFINEMENT_STEPS: usize = 4;

#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    /// Minimum-norm least-squares solution of the rank-truncated system.
    pub solution: DVector<T>,
    /// `max |Ax − b|`.
    pub residual: T,
    pub rank: usize,
    pub unknowns: usize,
    pub equations: usize,
    /// Singular values, descending.
    pub singular_values: Vec<T>,
    /// Relative singular values `σ/σ_max` falling in the ambiguity band.
    pub ambiguous: Vec<T>,
}

impl<T: Real> LeastSquares<T> {
    pub fn kernel_dim(&self) -> usize {
        self.unknowns - self.rank
    }
}

/// Solves `min ‖Ax − b‖` by SVD, truncating singular values per `policy`.
pub fn least_squares<T: Real>(
    a: &DMatrix<T>,
    b: &DVector<T>,
    policy: &RankPolicy,
) -> LeastSquares<T> {
    let (m, p) = a.shape();
    assert_eq!(b.len(), m, "right-hand side length must match row count");
    if p == 0 || m == 0 {
        let residual = b.iter().fold(
            T::zero(),
            |acc, v| if v.abs() > acc { v.abs() } else { acc },
        );
        return LeastSquares {
            solution: DVector::zeros(p),
            residual,
            rank: 0,
            unknowns: p,
            equations: m,
            singular_values: Vec::new(),
            ambiguous: Vec::new(),
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let mut sv: Vec<(usize, T)> = svd.singular_values.iter().copied().enumerate().collect();
    sv.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal));
    let sigma_max = sv.first().map(|s| s.1).unwrap_or_else(T::zero);
    let cutoff = T::lit(policy.rel_cutoff) * sigma_max;

    let mut rank = 0;
    let mut ambiguous = Vec::new();
    let mut kept = Vec::new();
    for &(idx, s) in &sv {
        if sigma_max > T::zero() {
            let rel = s / sigma_max;
            if rel > T::lit(policy.ambiguous_low) && rel < T::lit(policy.ambiguous_high) {
                ambiguous.push(rel);
            }
        }
        if s > cutoff && s > T::zero() {
            rank += 1;
            kept.push((idx, s));
        }
    }
    // x = V_r Σ_r⁻¹ U_rᵀ y
    let apply_pinv = |y: &DVector<T>| {
        let mut x = DVector::zeros(p);
        for &(idx, s) in &kept {
            let coef = u.column(idx).dot(y) / s;
            x += v_t.row(idx).transpose() * coef;
        }
        x
    };
    let max_abs = |r: &DVector<T>| {
        r.iter().fold(
            T::zero(),
            |acc, v| if v.abs() > acc { v.abs() } else { acc },
        )
    };

    // The computed factors are occasionally accurate to only ~1e-7; a few
    // refinement sweeps x += A⁺(b − Ax) recover full precision.
    let mut x = apply_pinv(b);
    let mut r = a * &x - b;
    let mut residual = max_abs(&r);
    for _ in 0..REFINEMENT_STEPS {
        let candidate = &x - apply_pinv(&r);
        let r_new = a * &candidate - b;
        let res_new = max_abs(&r_new);
        if !(res_new < residual) {
            break;
        }
        x = candidate;
        r = r_new;
        residual = res_new;
    }
    LeastSquares {
        solution: x,
        residual,
        rank,
        unknowns: p,
        equations: m,
        singular_values: sv.into_iter().map(|s| s.1).collect(),
        ambiguous,
    }
}
