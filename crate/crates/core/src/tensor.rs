//! Pointwise multilinear algebra on small dense arrays.
//!
//! Index conventions, fixed for the whole crate:
//!
//! * `Matrix` entries are `(row, col)`; for a (1,1)-tensor `J^k_j` the row is
//!   the upper index `k`.
//! * `Tensor12` stores `A^k_ij` at `(k, i, j)`.
//! * `Tensor03` stores `B_ijk` at `(i, j, k)`; lowering a `Tensor12` puts the
//!   lowered index first: `lower_first(A)_kij = g_kl A^l_ij`, i.e.
//!   `g(A(∂_i, ∂_j), ∂_k)`.
//! * Connection coefficients `Γ^k_ij` follow `∇_{∂_i} ∂_j = Γ^k_ij ∂_k`.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;

use crate::scalar::{max_abs_slice, Real};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("metric is singular (det = {det:e})")]
    SingularMetric { det: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Largest absolute component; the universal "equals zero" measure.
pub trait MaxAbs<T> {
    fn max_abs(&self) -> T;
}

/// Free-function form of [`MaxAbs::max_abs`].
pub fn max_abs<T, A: MaxAbs<T> + ?Sized>(a: &A) -> T {
    a.max_abs()
}

impl<T: Real> MaxAbs<T> for [T] {
    fn max_abs(&self) -> T {
        max_abs_slice(self)
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn diagonal(values: &[T]) -> Self {
        Self::from_fn(
            values.len(),
            |i, j| if i == j { values[i] } else { T::zero() },
        )
    }

    /// Builds from nested rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, TensorError> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(TensorError::DimensionMismatch {
                    expected: n,
                    got: r.len(),
                });
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| {
            (0..n).fold(T::zero(), |acc, l| acc + self[(i, l)] * other[(l, j)])
        })
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.n, other.n, "matrix dimension mismatch");
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn to_nalgebra(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<T>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn determinant(&self) -> T {
        self.to_nalgebra().determinant()
    }

    /// Max |a_ij − a_ji|.
    pub fn asymmetry(&self) -> T {
        self.sub(&self.transpose()).max_abs()
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let sym = self.add(&self.transpose()).scale(T::lit(0.5));
        let mut ev: Vec<T> = sym
            .to_nalgebra()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> MaxAbs<T> for Matrix<T> {
    fn max_abs(&self) -> T {
        max_abs_slice(&self.data)
    }
}

/// Metric signature: counts of positive and negative eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
}

/// Symmetric (0,2)-tensor at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric2<T> {
    components: Matrix<T>,
    signature: Signature,
}

impl<T: Real> Metric2<T> {
    /// Symmetrizes `m` (so `g_ij = g_ji` holds exactly) and records its signature.
    pub fn new(m: &Matrix<T>) -> Self {
        let half = T::lit(0.5);
        let components = Matrix::from_fn(m.dim(), |i, j| half * (m[(i, j)] + m[(j, i)]));
        let ev = components.symmetric_eigenvalues();
        let signature = Signature {
            positive: ev.iter().filter(|&&e| e > T::zero()).count(),
            negative: ev.iter().filter(|&&e| e < T::zero()).count(),
        };
        Metric2 {
            components,
            signature,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(&Matrix::identity(n))
    }

    pub fn diagonal(values: &[T]) -> Self {
        Self::new(&Matrix::diagonal(values))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.dim()
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn is_positive_definite(&self) -> bool {
        self.signature.positive == self.dim()
    }
}

impl<T> Index<(usize, usize)> for Metric2<T> {
    type Output = T;
    fn index(&self, idx: (usize, usize)) -> &T {
        &self.components[idx]
    }
}

/// Determinant threshold below which a metric is treated as singular.
pub const SINGULAR_DET: f64 = 1e-10;

/// Inverse metric `g^{ij}` (a symmetric (2,0)-tensor, stored as a `Metric2`).
pub fn invert_metric<T: Real>(g: &Metric2<T>) -> Result<Metric2<T>, TensorError> {
    let m = g.matrix().to_nalgebra();
    let det = m.determinant();
    if !(det.abs() > T::lit(SINGULAR_DET)) {
        return Err(TensorError::SingularMetric {
            det: det.to_f64_lossy(),
        });
    }
    let inv = m.lu().try_inverse().ok_or(TensorError::SingularMetric {
        det: det.to_f64_lossy(),
    })?;
    Ok(Metric2::new(&Matrix::from_nalgebra(&inv)))
}

/// Dense `n × n × n` array with `(a, b, c)` stored at `a·n² + b·n + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Array3<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Array3<T> {
    pub fn zeros(n: usize) -> Self {
        Array3 {
            n,
            data: vec![T::zero(); n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    data.push(f(a, b, c));
                }
            }
        }
        Array3 { n, data }
    }

    pub fn from_vec(n: usize, data: Vec<T>) -> Result<Self, TensorError> {
        if data.len() != n * n * n {
            return Err(TensorError::DimensionMismatch {
                expected: n * n * n,
                got: data.len(),
            });
        }
        Ok(Array3 { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Array3 {
            n: self.n,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.n, other.n, "array dimension mismatch");
        Array3 {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Permutes axes: `result(a0, a1, a2) = self(a_{p0}, a_{p1}, a_{p2})`.
    pub fn permuted(&self, p: [usize; 3]) -> Self {
        Self::from_fn(self.n, |a, b, c| {
            let idx = [a, b, c];
            self[(idx[p[0]], idx[p[1]], idx[p[2]])]
        })
    }

    /// Nested `[a][b][c]` vectors, as used by the JSON reports.
    pub fn to_nested(&self) -> Vec<Vec<Vec<T>>> {
        let n = self.n;
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| (0..n).map(|c| self[(a, b, c)]).collect())
                    .collect()
            })
            .collect()
    }
}

impl<T> Index<(usize, usize, usize)> for Array3<T> {
    type Output = T;
    fn index(&self, (a, b, c): (usize, usize, usize)) -> &T {
        &self.data[(a * self.n + b) * self.n + c]
    }
}

impl<T> IndexMut<(usize, usize, usize)> for Array3<T> {
    fn index_mut(&mut self, (a, b, c): (usize, usize, usize)) -> &mut T {
        &mut self.data[(a * self.n + b) * self.n + c]
    }
}

impl<T: Real> MaxAbs<T> for Array3<T> {
    fn max_abs(&self) -> T {
        max_abs_slice(&self.data)
    }
}

macro_rules! rank3_tensor {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T>(pub Array3<T>);

        impl<T: Real> $name<T> {
            pub fn zeros(n: usize) -> Self {
                $name(Array3::zeros(n))
            }

            pub fn from_fn(n: usize, f: impl FnMut(usize, usize, usize) -> T) -> Self {
                $name(Array3::from_fn(n, f))
            }

            pub fn dim(&self) -> usize {
                self.0.dim()
            }

            pub fn array(&self) -> &Array3<T> {
                &self.0
            }

            pub fn scale(&self, s: T) -> Self {
                $name(self.0.map(|x| x * s))
            }

            pub fn add(&self, other: &Self) -> Self {
                $name(self.0.zip(&other.0, |a, b| a + b))
            }

            pub fn sub(&self, other: &Self) -> Self {
                $name(self.0.zip(&other.0, |a, b| a - b))
            }
        }

        impl<T> Index<(usize, usize, usize)> for $name<T> {
            type Output = T;
            fn index(&self, idx: (usize, usize, usize)) -> &T {
                &self.0[idx]
            }
        }

        impl<T> IndexMut<(usize, usize, usize)> for $name<T> {
            fn index_mut(&mut self, idx: (usize, usize, usize)) -> &mut T {
                &mut self.0[idx]
            }
        }

        impl<T: Real> MaxAbs<T> for $name<T> {
            fn max_abs(&self) -> T {
                self.0.max_abs()
            }
        }
    };
}

rank3_tensor!(
    /// (1,2)-tensor `A^k_ij`, stored at `(k, i, j)`.
    Tensor12
);

rank3_tensor!(
    /// (0,3)-tensor `B_ijk`, stored at `(i, j, k)`.
    Tensor03
);

impl<T: Real> Tensor12<T> {
    /// `max |A^k_ij + A^k_ji|`: zero iff antisymmetric in the lower pair.
    pub fn lower_symmetry_defect(&self) -> T {
        self.0
            .zip(&self.0.permuted([0, 2, 1]), |a, b| a + b)
            .max_abs()
    }
}

impl<T: Real> Tensor03<T> {
    /// Largest violation of total antisymmetry over the three transpositions.
    pub fn antisymmetry_defect(&self) -> T {
        [[1, 0, 2], [0, 2, 1], [2, 1, 0]]
            .iter()
            .map(|&p| self.0.zip(&self.0.permuted(p), |a, b| a + b).max_abs())
            .fold(
                T::zero(),
                |acc, d| if d > acc || !d.is_finite() { d } else { acc },
            )
    }

    /// `max |B_kij + B_jik|`: zero iff `g(A(X,Y),Z) + g(A(X,Z),Y) = 0` for the
    /// `Tensor12` this was lowered from.
    pub fn metric_compatibility_defect(&self) -> T {
        self.0
            .zip(&self.0.permuted([2, 1, 0]), |a, b| a + b)
            .max_abs()
    }
}

/// `result_kij = g_kl A^l_ij`.
pub fn lower_first<T: Real>(a: &Tensor12<T>, g: &Metric2<T>) -> Tensor03<T> {
    let n = a.dim();
    Tensor03::from_fn(n, |k, i, j| {
        (0..n).fold(T::zero(), |acc, l| acc + g[(k, l)] * a[(l, i, j)])
    })
}

/// `result^k_ij = g^kl B_lij`; inverse of [`lower_first`] when `ginv = g⁻¹`.
pub fn raise_first<T: Real>(b: &Tensor03<T>, ginv: &Metric2<T>) -> Tensor12<T> {
    let n = b.dim();
    Tensor12::from_fn(n, |k, i, j| {
        (0..n).fold(T::zero(), |acc, l| acc + ginv[(k, l)] * b[(l, i, j)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> Metric2<f64> {
        loop {
            let a: Matrix<f64> = Matrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let m = a.add(&a.transpose());
            if m.determinant().abs() > 0.1f64 {
                return Metric2::new(&m);
            }
        }
    }

    #[test]
    fn identity_inverts_to_identity() {
        let g = Metric2::<f64>::identity(4);
        assert_eq!(invert_metric(&g).unwrap(), g);
    }

    #[test]
    fn split_signature_diagonal_is_involutive() {
        let g = Metric2::diagonal(&[1.0, -1.0, 1.0, -1.0]);
        let inv = invert_metric(&g).unwrap();
        assert_eq!(inv, g);
        assert_eq!(
            g.signature(),
            Signature {
                positive: 2,
                negative: 2
            }
        );
        assert!(!g.is_positive_definite());
    }

    #[test]
    fn conformal_diagonal_inverse() {
        let e2 = std::f64::consts::E.powi(2);
        let inv = invert_metric(&Metric2::diagonal(&[e2, e2])).unwrap();
        let expected = (-2.0f64).exp();
        for i in 0..2 {
            assert!((inv[(i, i)] - expected).abs() < 1e-15);
        }
        assert_eq!(inv[(0, 1)], 0.0);
    }

    #[test]
    fn singular_metric_reports_determinant() {
        let g = Metric2::diagonal(&[1.0, 0.0]);
        match invert_metric(&g) {
            Err(TensorError::SingularMetric { det }) => assert_eq!(det, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn random_metrics_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 3, 4, 6] {
            for _ in 0..50 {
                let g = random_metric(&mut rng, n);
                let inv = invert_metric(&g).unwrap();
                let defect = g
                    .matrix()
                    .matmul(inv.matrix())
                    .sub(&Matrix::identity(n))
                    .max_abs();
                assert!(defect <= 1e-10, "n={n}: {defect}");
            }
        }
    }

    #[test]
    fn lower_first_examples() {
        let zero = Tensor12::<f64>::zeros(2);
        assert_eq!(
            lower_first(&zero, &Metric2::diagonal(&[3.0, 1.0])).max_abs(),
            0.0
        );

        let a = Tensor12::from_fn(3, |k, i, j| (k * 9 + i * 3 + j) as f64);
        let l = lower_first(&a, &Metric2::identity(3));
        assert_eq!(l.array(), a.array());

        let mut a = Tensor12::zeros(2);
        a[(0, 0, 0)] = 2.0;
        let l = lower_first(&a, &Metric2::diagonal(&[3.0, 1.0]));
        assert_eq!(l[(0, 0, 0)], 6.0);
        assert_eq!(l.max_abs(), 6.0);
    }

    #[test]
    fn lower_then_raise_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let g = random_metric(&mut rng, 4);
            let ginv = invert_metric(&g).unwrap();
            let a = Tensor12::from_fn(4, |_, _, _| rng.gen_range(-1.0..1.0));
            let back = raise_first(&lower_first(&a, &g), &ginv);
            let scale = 1.0 + ginv.matrix().max_abs() * g.matrix().max_abs();
            assert!(back.sub(&a).max_abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn max_abs_examples() {
        assert_eq!(Array3::<f64>::zeros(3).max_abs(), 0.0);
        let mut a = Array3::zeros(2);
        a[(1, 0, 1)] = -3.0;
        assert_eq!(max_abs(&a), 3.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = Array3::from_fn(4, |_, _, _| rng.gen_range(-5.0..5.0));
        let mut brute = 0.0f64;
        for x in b.as_slice() {
            brute = brute.max(f64::abs(*x));
        }
        assert_eq!(b.max_abs(), brute);
    }

    #[test]
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn max_abs_does_not_hide_nan() {
        let mut a = Array3::<f64>::zeros(2);
        a[(0, 1, 1)] = f64::NAN;
        assert!(!(a.max_abs() <= 1.0));
    }

    #[test]
    fn antisymmetry_checks() {
        let h = Tensor03::from_fn(3, |i, j, k| {
            // Levi-Civita symbol
            let p = [i, j, k];
            if p[0] == p[1] || p[1] == p[2] || p[0] == p[2] {
                0.0
            } else if (p[0], p[1], p[2]) == (0, 1, 2)
                || (p[0], p[1], p[2]) == (1, 2, 0)
                || (p[0], p[1], p[2]) == (2, 0, 1)
            {
                1.0
            } else {
                -1.0
            }
        });
        assert_eq!(h.antisymmetry_defect(), 0.0);
        let mut bad = h.clone();
        bad[(0, 1, 2)] = 2.0;
        assert_eq!(bad.antisymmetry_defect(), 1.0);
    }
}
