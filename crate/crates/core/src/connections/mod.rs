//! Linear connections at a point and the operations on them.
//!
//! A connection is represented by its coefficients `Γ^k_ij` in the
//! coordinate frame (`∇_{∂_i} ∂_j = Γ^k_ij ∂_k`). Coordinate vector fields
//! commute, so torsion is `T^k_ij = Γ^k_ij − Γ^k_ji` with no bracket term.
//!
//! Everything here is a pure function of [`PointFrame`] data; identities
//! between connections are therefore checked point by point.

mod solve;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::PointFrame;
use crate::scalar::Real;
use crate::tensor::{lower_first, raise_first, Array3, MaxAbs, Tensor03, Tensor12};

pub use solve::{
    skew_unknowns, solve_chern, solve_chern_with, solve_skew, solve_skew_with, SolveReport,
    SolveStatus,
};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("affine weights sum to {sum}, expected 1")]
    WeightsNotAffine { sum: f64 },
    #[error("affine combination of an empty list")]
    EmptyCombination,
    #[error("connections live at different points or dimensions")]
    Mismatch,
    #[error("3-form is not totally antisymmetric (defect {defect:e})")]
    NotSkew { defect: f64 },
}

/// Where a set of coefficients came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "t")]
pub enum Provenance {
    LeviCivita,
    FirstCanonical,
    Chern,
    SkewPlus,
    SkewMinus,
    Bismut,
    /// Point `t` of the canonical line `(1 − t)∇⁰ + t∇ᶜ`.
    Line(f64),
    Projected,
    JStar,
    Synthetic,
    Combo,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::LeviCivita => f.write_str("levi-civita"),
            Provenance::FirstCanonical => f.write_str("first-canonical"),
            Provenance::Chern => f.write_str("chern"),
            Provenance::SkewPlus => f.write_str("skew-plus"),
            Provenance::SkewMinus => f.write_str("skew-minus"),
            Provenance::Bismut => f.write_str("bismut"),
            Provenance::Line(t) => write!(f, "line({t})"),
            Provenance::Projected => f.write_str("projected"),
            Provenance::JStar => f.write_str("jstar"),
            Provenance::Synthetic => f.write_str("synthetic"),
            Provenance::Combo => f.write_str("combo"),
        }
    }
}

/// Connection coefficients `Γ^k_ij` at a point, stored at `(k, i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoeffs<T> {
    point: Vec<T>,
    coeffs: Array3<T>,
    provenance: Provenance,
}

impl<T: Real> ConnectionCoeffs<T> {
    pub fn new(point: Vec<T>, coeffs: Array3<T>, provenance: Provenance) -> Self {
        ConnectionCoeffs {
            point,
            coeffs,
            provenance,
        }
    }

    pub fn point(&self) -> &[T] {
        &self.point
    }

    pub fn coeffs(&self) -> &Array3<T> {
        &self.coeffs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    /// `Γ^k_ij`.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> T {
        self.coeffs[(k, i, j)]
    }

    /// `self − other`, a (1,2)-tensor.
    pub fn difference(&self, other: &Self) -> Tensor12<T> {
        Tensor12(self.coeffs.zip(&other.coeffs, |a, b| a - b))
    }

    /// `max_abs(self − other)`.
    pub fn distance(&self, other: &Self) -> T {
        self.difference(other).max_abs()
    }

    /// `self + A` for a (1,2)-tensor `A`.
    pub fn shifted(&self, a: &Tensor12<T>, provenance: Provenance) -> Self {
        ConnectionCoeffs::new(
            self.point.clone(),
            self.coeffs.zip(a.array(), |x, y| x + y),
            provenance,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.as_slice().iter().all(|x| x.is_finite())
    }
}

impl<T: Real> MaxAbs<T> for ConnectionCoeffs<T> {
    fn max_abs(&self) -> T {
        self.coeffs.max_abs()
    }
}

/// Christoffel symbols `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn levi_civita<T: Real>(f: &PointFrame<T>) -> ConnectionCoeffs<T> {
    let n = f.dim();
    let half = T::lit(0.5);
    // first-kind symbols Γ_lij
    let first = Array3::from_fn(n, |l, i, j| {
        half * (f.dg[(i, j, l)] + f.dg[(j, i, l)] - f.dg[(l, i, j)])
    });
    let coeffs = Array3::from_fn(n, |k, i, j| {
        (0..n).fold(T::zero(), |acc, l| acc + f.g_inv[(k, l)] * first[(l, i, j)])
    });
    ConnectionCoeffs::new(f.point.clone(), coeffs, Provenance::LeviCivita)
}

/// `(∇_k g)_ij = ∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il`, stored at `(k, i, j)`.
pub fn nabla_g<T: Real>(gamma: &ConnectionCoeffs<T>, f: &PointFrame<T>) -> Tensor03<T> {
    let n = f.dim();
    Tensor03::from_fn(n, |k, i, j| {
        let mut v = f.dg[(k, i, j)];
        for l in 0..n {
            v -= gamma.gamma(l, k, i) * f.g[(l, j)] + gamma.gamma(l, k, j) * f.g[(i, l)];
        }
        v
    })
}

/// `max_abs(∇g)`: zero iff the connection is metric.
pub fn nabla_g_defect<T: Real>(gamma: &ConnectionCoeffs<T>, f: &PointFrame<T>) -> T {
    nabla_g(gamma, f).max_abs()
}

/// `(∇_i J)^k_j = ∂_i J^k_j + Γ^k_il J^l_j − Γ^l_ij J^k_l`, stored at `(k, i, j)`.
pub fn nabla_j<T: Real>(gamma: &ConnectionCoeffs<T>, f: &PointFrame<T>) -> Tensor12<T> {
    let n = f.dim();
    Tensor12::from_fn(n, |k, i, j| {
        let mut v = f.dj[(k, i, j)];
        for l in 0..n {
            v += gamma.gamma(k, i, l) * f.j[(l, j)] - gamma.gamma(l, i, j) * f.j[(k, l)];
        }
        v
    })
}

/// `T^k_ij = Γ^k_ij − Γ^k_ji`.
pub fn torsion<T: Real>(gamma: &ConnectionCoeffs<T>) -> Tensor12<T> {
    let c = gamma.coeffs();
    Tensor12(c.zip(&c.permuted([0, 2, 1]), |a, b| a - b))
}

/// `max_abs(T(J·, J·) − αT)`; zero iff the torsion has the Chern type.
pub fn torsion_type_defect<T: Real>(t: &Tensor12<T>, f: &PointFrame<T>) -> T {
    let n = f.dim();
    let jj = Tensor12::from_fn(n, |k, i, j| {
        let mut v = T::zero();
        for l in 0..n {
            for m in 0..n {
                v += f.j[(l, i)] * f.j[(m, j)] * t[(k, l, m)];
            }
        }
        v
    });
    jj.sub(&t.scale(f.alpha)).max_abs()
}

/// Canonical involution: `(J*∇)_X Y = αJ(∇_X(JY))`, i.e.
/// `(J*Γ)^k_ij = α J^k_l (∂_i J^l_j + Γ^l_im J^m_j)`.
pub fn j_star<T: Real>(gamma: &ConnectionCoeffs<T>, f: &PointFrame<T>) -> ConnectionCoeffs<T> {
    let n = f.dim();
    // inner^l_ij = ∇_{∂_i}(J ∂_j) components
    let inner = Array3::from_fn(n, |l, i, j| {
        let mut v = f.dj[(l, i, j)];
        for m in 0..n {
            v += gamma.gamma(l, i, m) * f.j[(m, j)];
        }
        v
    });
    let coeffs = Array3::from_fn(n, |k, i, j| {
        let v = (0..n).fold(T::zero(), |acc, l| acc + f.j[(k, l)] * inner[(l, i, j)]);
        f.alpha * v
    });
    ConnectionCoeffs::new(gamma.point.clone(), coeffs, Provenance::JStar)
}

/// `π(∇) = ½∇ + ½J*(∇)`, the projection onto `J`-adapted connections.
pub fn project<T: Real>(gamma: &ConnectionCoeffs<T>, f: &PointFrame<T>) -> ConnectionCoeffs<T> {
    let half = T::lit(0.5);
    let js = j_star(gamma, f);
    ConnectionCoeffs::new(
        gamma.point.clone(),
        gamma.coeffs.zip(&js.coeffs, |a, b| half * a + half * b),
        Provenance::Projected,
    )
}

/// `S_∇(X, Y) = (−α/2)(∇_X J)JY`, i.e. `S^k_ij = (−α/2)(∇_i J)^k_m J^m_j`.
pub fn s_tensor<T: Real>(gamma: &ConnectionCoeffs<T>, f: &PointFrame<T>) -> Tensor12<T> {
    let n = f.dim();
    let nj = nabla_j(gamma, f);
    let c = -f.alpha * T::lit(0.5);
    Tensor12::from_fn(n, |k, i, j| {
        c * (0..n).fold(T::zero(), |acc, m| acc + nj[(k, i, m)] * f.j[(m, j)])
    })
}

/// `∇⁰ = ∇^g + (−α/2)(∇^g J)J`.
pub fn first_canonical<T: Real>(f: &PointFrame<T>) -> ConnectionCoeffs<T> {
    let lc = levi_civita(f);
    let s = s_tensor(&lc, f);
    lc.shifted(&s, Provenance::FirstCanonical)
}

/// `Σ λ_i Γ_i` with `Σ λ_i = 1` (to 1e-12).
pub fn affine_combine<T: Real>(
    terms: &[(T, &ConnectionCoeffs<T>)],
) -> Result<ConnectionCoeffs<T>, ConnectionError> {
    let (_, first) = terms.first().ok_or(ConnectionError::EmptyCombination)?;
    let sum = terms.iter().fold(T::zero(), |acc, (w, _)| acc + *w);
    if !((sum - T::one()).abs() <= T::lit(1e-12)) {
        return Err(ConnectionError::WeightsNotAffine {
            sum: sum.to_f64_lossy(),
        });
    }
    if terms
        .iter()
        .any(|(_, c)| c.dim() != first.dim() || c.point != first.point)
    {
        return Err(ConnectionError::Mismatch);
    }
    let mut acc = Array3::zeros(first.dim());
    for (w, c) in terms {
        acc = acc.zip(&c.coeffs, |a, b| a + *w * b);
    }
    Ok(ConnectionCoeffs::new(
        first.point.clone(),
        acc,
        Provenance::Combo,
    ))
}

/// Canonical line `∇ᵗ = (1 − t)∇⁰ + t∇ᶜ`.
pub fn canonical_line<T: Real>(
    first_canonical: &ConnectionCoeffs<T>,
    chern: &ConnectionCoeffs<T>,
    t: T,
) -> Result<ConnectionCoeffs<T>, ConnectionError> {
    let c = affine_combine(&[(T::one() - t, first_canonical), (t, chern)])?;
    Ok(c.with_provenance(Provenance::Line(t.to_f64_lossy())))
}

/// Bismut connection from the midpoint relation `∇⁰ = ½(∇ᵇ + ∇ᶜ)`:
/// `∇ᵇ = 2∇⁰ − ∇ᶜ`, the point `t = −1` of the canonical line.
pub fn bismut<T: Real>(
    first_canonical: &ConnectionCoeffs<T>,
    chern: &ConnectionCoeffs<T>,
) -> Result<ConnectionCoeffs<T>, ConnectionError> {
    let two = T::lit(2.0);
    let c = affine_combine(&[(two, first_canonical), (T::one() - two, chern)])?;
    Ok(c.with_provenance(Provenance::Bismut))
}

/// Totally antisymmetric (0,3)-tensor `H_ijk = g(T(∂_i, ∂_j), ∂_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionForm<T>(Tensor03<T>);

/// Antisymmetry tolerance accepted by [`TorsionForm::new`].
pub const SKEW_TOL: f64 = 1e-10;

impl<T: Real> TorsionForm<T> {
    pub fn new(h: Tensor03<T>) -> Result<Self, ConnectionError> {
        let defect = h.antisymmetry_defect();
        if !(defect <= T::lit(SKEW_TOL)) {
            return Err(ConnectionError::NotSkew {
                defect: defect.to_f64_lossy(),
            });
        }
        Ok(TorsionForm(h))
    }

    pub fn zero(n: usize) -> Self {
        TorsionForm(Tensor03::zeros(n))
    }

    /// Builds the form from its independent components `H_abc`, `a < b < c`,
    /// in lexicographic order.
    pub fn from_components(n: usize, values: &[T]) -> Self {
        let mut h = Tensor03::zeros(n);
        for (v, [a, b, c]) in values.iter().zip(skew_unknowns(n)) {
            for ([x, y, z], sign) in signed_permutations([a, b, c]) {
                h[(x, y, z)] = if sign { *v } else { -*v };
            }
        }
        TorsionForm(h)
    }

    pub fn components(&self) -> Vec<T> {
        skew_unknowns(self.dim())
            .into_iter()
            .map(|[a, b, c]| self.0[(a, b, c)])
            .collect()
    }

    pub fn tensor(&self) -> &Tensor03<T> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl<T: Real> MaxAbs<T> for TorsionForm<T> {
    fn max_abs(&self) -> T {
        self.0.max_abs()
    }
}

// The six orderings of (a, b, c) paired with "is even".
fn signed_permutations([a, b, c]: [usize; 3]) -> [([usize; 3], bool); 6] {
    [
        ([a, b, c], true),
        ([b, c, a], true),
        ([c, a, b], true),
        ([b, a, c], false),
        ([a, c, b], false),
        ([c, b, a], false),
    ]
}

/// Which of `∇± = ∇^g ± ½T^sk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewSign {
    Plus,
    Minus,
}

/// `Γ^± = Γ^g ± ½ g^kl H_lij`.
pub fn nabla_plus_minus<T: Real>(
    f: &PointFrame<T>,
    h: &TorsionForm<T>,
    sign: SkewSign,
) -> ConnectionCoeffs<T> {
    let half_t = raise_first(h.tensor(), &f.g_inv).scale(T::lit(0.5));
    let (shift, provenance) = match sign {
        SkewSign::Plus => (half_t, Provenance::SkewPlus),
        SkewSign::Minus => (half_t.scale(-T::one()), Provenance::SkewMinus),
    };
    levi_civita(f).shifted(&shift, provenance)
}

/// `Γ^g + A` with `A` uniform in `[−1, 1]` componentwise; a generic,
/// neither metric nor adapted, connection.
pub fn synthetic_connection<T: Real>(f: &PointFrame<T>, seed: u64) -> ConnectionCoeffs<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = f.dim();
    let a = Tensor12::from_fn(n, |_, _, _| T::lit(rng.gen_range(-1.0..=1.0)));
    levi_civita(f).shifted(&a, Provenance::Synthetic)
}

/// `Γ^g + A` where the lowered `A` satisfies `g(A(X,Y),Z) + g(A(X,Z),Y) = 0`,
/// so the result is metric.
pub fn synthetic_metric_connection<T: Real>(f: &PointFrame<T>, seed: u64) -> ConnectionCoeffs<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = f.dim();
    let r = Tensor03::from_fn(n, |_, _, _| T::lit(rng.gen_range(-1.0..=1.0)));
    // lowered L_kij = g(A(∂_i, ∂_j), ∂_k) must flip sign under k <-> j
    let l = Tensor03::from_fn(n, |k, i, j| r[(k, i, j)] - r[(j, i, k)]);
    let a = raise_first(&l, &f.g_inv);
    levi_civita(f).shifted(&a, Provenance::Synthetic)
}

/// `max |g(A(X,Y),Z) + g(A(X,Z),Y)|` for a (1,2)-tensor `A`.
pub fn metric_compatibility_defect<T: Real>(a: &Tensor12<T>, f: &PointFrame<T>) -> T {
    lower_first(a, &f.g).metric_compatibility_defect()
}

#[cfg(test)]
mod tests;
