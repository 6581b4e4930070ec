//! Connections characterized by linear conditions rather than formulas.
//!
//! The Chern connection and the adapted connection with totally
//! skew-symmetric torsion are found by assembling the defining conditions
//! at a point as a linear system and solving it by SVD least squares.
//! Uniqueness is certified by the numerical kernel dimension.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{levi_civita, nabla_j, ConnectionCoeffs, Provenance, TorsionForm};
use crate::geometry::PointFrame;
use crate::linsolve::{least_squares, LeastSquares, RankPolicy};
use crate::scalar::Real;
use crate::tensor::{raise_first, Array3, Tensor03};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    /// Exact solution and trivial kernel.
    Unique,
    /// No exact solution: the best fit leaves a residual above tolerance.
    None,
    /// Exact solutions exist but are not unique, or the rank is ambiguous.
    Underdetermined,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Unique => "unique",
            SolveStatus::None => "none",
            SolveStatus::Underdetermined => "underdetermined",
        })
    }
}

/// Outcome of a pointwise constrained solve.
///
/// `solution` is always the minimum-norm least-squares fit; it is only a
/// certified answer when `status` is [`SolveStatus::Unique`].
#[derive(Debug, Clone)]
pub struct SolveReport<S> {
    pub status: SolveStatus,
    pub solution: S,
    /// `max |Ax − b|` of the fit.
    pub residual: f64,
    pub kernel_dim: usize,
    pub rank: usize,
    pub unknowns: usize,
    pub equations: usize,
    /// Smallest singular value relative to the largest.
    pub min_relative_singular_value: f64,
    pub diagnostic: Option<String>,
}

impl<S> SolveReport<S> {
    pub fn is_unique(&self) -> bool {
        self.status == SolveStatus::Unique
    }

    fn from_fit<T: Real>(ls: &LeastSquares<T>, policy: &RankPolicy, solution: S) -> Self {
        let residual = ls.residual.to_f64_lossy();
        let sigma_max = ls
            .singular_values
            .first()
            .map(|s| s.to_f64_lossy())
            .unwrap_or(0.0);
        let min_rel = if ls.singular_values.len() < ls.unknowns || sigma_max == 0.0 {
            0.0
        } else {
            ls.singular_values
                .last()
                .map(|s| s.to_f64_lossy())
                .unwrap_or(0.0)
                / sigma_max
        };
        let (status, diagnostic) = if !ls.ambiguous.is_empty() {
            let rel: Vec<String> = ls
                .ambiguous
                .iter()
                .map(|s| format!("{:e}", s.to_f64_lossy()))
                .collect();
            (
                SolveStatus::Underdetermined,
                Some(format!(
                    "ambiguous numerical rank: relative singular values [{}] lie between {:e} and {:e}",
                    rel.join(", "),
                    policy.ambiguous_low,
                    policy.ambiguous_high
                )),
            )
        } else if !(residual <= policy.residual_tol) {
            (
                SolveStatus::None,
                Some(format!("inconsistent system: residual {residual:e}")),
            )
        } else if ls.kernel_dim() > 0 {
            (
                SolveStatus::Underdetermined,
                Some(format!("solution space has dimension {}", ls.kernel_dim())),
            )
        } else {
            (SolveStatus::Unique, None)
        };
        SolveReport {
            status,
            solution,
            residual,
            kernel_dim: ls.kernel_dim(),
            rank: ls.rank,
            unknowns: ls.unknowns,
            equations: ls.equations,
            min_relative_singular_value: min_rel,
            diagnostic,
        }
    }
}

/// Solves for the Chern connection at the frame's point.
pub fn solve_chern<T: Real>(f: &PointFrame<T>) -> SolveReport<ConnectionCoeffs<T>> {
    solve_chern_with(f, &RankPolicy::default())
}

/// Unknowns `Γ^k_ij` (flattened as `Array3`), conditions
/// (a) `∇g = 0`, (b) `∇J = 0`, (c) `T(J·, J·) − αT = 0`.
pub fn solve_chern_with<T: Real>(
    f: &PointFrame<T>,
    policy: &RankPolicy,
) -> SolveReport<ConnectionCoeffs<T>> {
    let n = f.dim();
    let n3 = n * n * n;
    let var = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut a = DMatrix::<T>::zeros(3 * n3, n3);
    let mut b = DVector::<T>::zeros(3 * n3);

    // (a) −Γ^l_ki g_lj − Γ^l_kj g_il = −∂_k g_ij
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let row = var(k, i, j);
                for l in 0..n {
                    a[(row, var(l, k, i))] -= f.g[(l, j)];
                    a[(row, var(l, k, j))] -= f.g[(i, l)];
                }
                b[row] = -f.dg[(k, i, j)];
            }
        }
    }
    // (b) Γ^k_il J^l_j − Γ^l_ij J^k_l = −∂_i J^k_j
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let row = n3 + var(k, i, j);
                for l in 0..n {
                    a[(row, var(k, i, l))] += f.j[(l, j)];
                    a[(row, var(l, i, j))] -= f.j[(k, l)];
                }
                b[row] = -f.dj[(k, i, j)];
            }
        }
    }
    // (c) J^l_i J^m_j (Γ^k_lm − Γ^k_ml) − α(Γ^k_ij − Γ^k_ji) = 0
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let row = 2 * n3 + var(k, i, j);
                for l in 0..n {
                    for m in 0..n {
                        let c = f.j[(l, i)] * f.j[(m, j)];
                        a[(row, var(k, l, m))] += c;
                        a[(row, var(k, m, l))] -= c;
                    }
                }
                a[(row, var(k, i, j))] -= f.alpha;
                a[(row, var(k, j, i))] += f.alpha;
            }
        }
    }

    let ls = least_squares(&a, &b, policy);
    let coeffs = Array3::from_vec(n, ls.solution.iter().copied().collect())
        .expect("solution has n^3 entries");
    let gamma = ConnectionCoeffs::new(f.point.clone(), coeffs, Provenance::Chern);
    SolveReport::from_fit(&ls, policy, gamma)
}

/// Index triples `a < b < c` of the independent components of a 3-form,
/// in lexicographic order.
pub fn skew_unknowns(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Solves for the 3-form `H` such that `∇^g + ½T`, with `g(T(X,Y),Z) = H(X,Y,Z)`,
/// is adapted to `J`.
pub fn solve_skew<T: Real>(f: &PointFrame<T>) -> SolveReport<TorsionForm<T>> {
    solve_skew_with(f, &RankPolicy::default())
}

/// Unknowns: the `C(n,3)` components of `H`. Condition: `∇J = 0`, which is
/// linear in `H`; metricity holds for any skew `H`.
pub fn solve_skew_with<T: Real>(
    f: &PointFrame<T>,
    policy: &RankPolicy,
) -> SolveReport<TorsionForm<T>> {
    let n = f.dim();
    let n3 = n * n * n;
    let unknowns = skew_unknowns(n);
    let lc = levi_civita(f);
    let rhs = nabla_j(&lc, f);
    let mut a = DMatrix::<T>::zeros(n3, unknowns.len());
    let b = DVector::from_iterator(n3, rhs.array().as_slice().iter().map(|&x| -x));

    let half = T::lit(0.5);
    for (col, _) in unknowns.iter().enumerate() {
        let mut unit = vec![T::zero(); unknowns.len()];
        unit[col] = T::one();
        let basis = TorsionForm::from_components(n, &unit);
        // change of ∇J under Γ -> Γ + ½A: ½(A^k_il J^l_j − A^l_ij J^k_l)
        let shift = raise_first(basis.tensor(), &f.g_inv);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = T::zero();
                    for l in 0..n {
                        v += shift[(k, i, l)] * f.j[(l, j)] - shift[(l, i, j)] * f.j[(k, l)];
                    }
                    a[((k * n + i) * n + j, col)] = half * v;
                }
            }
        }
    }

    let ls = least_squares(&a, &b, policy);
    let values: Vec<T> = ls.solution.iter().copied().collect();
    let h = if unknowns.is_empty() {
        TorsionForm::new(Tensor03::zeros(n)).expect("zero form is skew")
    } else {
        TorsionForm::from_components(n, &values)
    };
    SolveReport::from_fit(&ls, policy, h)
}
