//! (α,ε)-structures `(J, g)` on a single coordinate chart.
//!
//! A [`GeometryStructure`] holds the metric and structure components as
//! symbolic expressions together with their exact first derivatives. The
//! pointwise numeric data every connection formula needs is gathered into a
//! [`PointFrame`] by [`frame_at`].

mod file;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connections::{levi_civita, nabla_j};
use crate::expr::{ExprError, ScalarExpr};
use crate::scalar::Real;
use crate::tensor::{invert_metric, Matrix, MaxAbs, Metric2, Tensor03, Tensor12, TensorError};

pub use file::{load_structure, parse_structure, StructureFile};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("cannot read structure file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid structure JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("{field}[{row}][{col}]: {source}")]
    Expression {
        field: &'static str,
        row: usize,
        col: usize,
        #[source]
        source: ExprError,
    },
    #[error("geometry `{geometry}` requires (alpha, epsilon) = ({}, {}), got ({alpha}, {epsilon})", .expected.0, .expected.1)]
    InconsistentSigns {
        geometry: GeometryKind,
        expected: (i8, i8),
        alpha: i8,
        epsilon: i8,
    },
    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("point has {got} coordinates, chart dimension is {dim}")]
    PointDimension { got: usize, dim: usize },
    #[error("evaluation failed at {point:?}: {source}")]
    Evaluation {
        point: Vec<f64>,
        #[source]
        source: ExprError,
    },
    #[error("at {point:?}: {source}")]
    Singular {
        point: Vec<f64>,
        #[source]
        source: TensorError,
    },
}

/// The four (α,ε) geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeometryKind {
    #[serde(rename = "hermitian")]
    Hermitian,
    #[serde(rename = "norden")]
    Norden,
    #[serde(rename = "product")]
    Product,
    #[serde(rename = "para-hermitian")]
    ParaHermitian,
}

impl GeometryKind {
    pub const ALL: [GeometryKind; 4] = [
        GeometryKind::Hermitian,
        GeometryKind::Norden,
        GeometryKind::Product,
        GeometryKind::ParaHermitian,
    ];

    /// `(α, ε)` for this geometry.
    pub fn signs(self) -> (i8, i8) {
        match self {
            GeometryKind::Hermitian => (-1, 1),
            GeometryKind::Norden => (-1, -1),
            GeometryKind::Product => (1, 1),
            GeometryKind::ParaHermitian => (1, -1),
        }
    }

    pub fn from_signs(alpha: i8, epsilon: i8) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.signs() == (alpha, epsilon))
    }

    pub fn label(self) -> &'static str {
        match self {
            GeometryKind::Hermitian => "hermitian",
            GeometryKind::Norden => "norden",
            GeometryKind::Product => "product",
            GeometryKind::ParaHermitian => "para-hermitian",
        }
    }
}

impl std::fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A single coordinate chart: an axis-aligned closed box in ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    domain: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(domain: Vec<(f64, f64)>) -> Result<Self, GeometryError> {
        let n = domain.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(GeometryError::Schema(format!(
                "chart dimension must be even and at least 2, got {n}"
            )));
        }
        for (i, &(lo, hi)) in domain.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GeometryError::Schema(format!(
                    "domain interval {} is empty or non-finite: [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(Chart { domain })
    }

    /// The box `[lo, hi]ⁿ`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self, GeometryError> {
        Self::new(vec![(lo, hi); n])
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(&self.domain)
                .all(|(&x, &(lo, hi))| lo <= x && x <= hi)
    }
}

/// Deterministic uniform samples in the chart box; equal seeds give equal lists.
pub fn sample_points(chart: &Chart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            chart
                .domain()
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

/// An (α,ε)-structure on a chart, with symbolic components.
#[derive(Debug, Clone)]
pub struct GeometryStructure {
    name: String,
    kind: Option<GeometryKind>,
    alpha: i8,
    epsilon: i8,
    chart: Chart,
    metric: Vec<Vec<ScalarExpr>>,
    structure: Vec<Vec<ScalarExpr>>,
    // dmetric[k][i][j] = ∂_k g_ij
    dmetric: Vec<Vec<Vec<ScalarExpr>>>,
    // dstructure[i][k][j] = ∂_i J^k_j
    dstructure: Vec<Vec<Vec<ScalarExpr>>>,
}

impl GeometryStructure {
    /// Assembles a structure from parsed components.
    ///
    /// Only shape and sign consistency are checked here; the defining
    /// conditions are checked numerically by [`validate_structure`].
    pub fn new(
        name: impl Into<String>,
        kind: Option<GeometryKind>,
        alpha: i8,
        epsilon: i8,
        chart: Chart,
        metric: Vec<Vec<ScalarExpr>>,
        structure: Vec<Vec<ScalarExpr>>,
    ) -> Result<Self, GeometryError> {
        let n = chart.dim();
        for (label, v) in [("alpha", alpha), ("epsilon", epsilon)] {
            if v != 1 && v != -1 {
                return Err(GeometryError::Schema(format!(
                    "{label} must be -1 or 1, got {v}"
                )));
            }
        }
        if let Some(kind) = kind {
            if kind.signs() != (alpha, epsilon) {
                return Err(GeometryError::InconsistentSigns {
                    geometry: kind,
                    expected: kind.signs(),
                    alpha,
                    epsilon,
                });
            }
        }
        for (label, m) in [("metric", &metric), ("J", &structure)] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(GeometryError::Schema(format!(
                    "{label} must be a {n}x{n} array"
                )));
            }
            if m.iter().flatten().any(|e| e.max_coordinate() > n) {
                return Err(GeometryError::Schema(format!(
                    "{label} uses a coordinate beyond x{n}"
                )));
            }
        }
        let dmetric = (0..n)
            .map(|k| {
                metric
                    .iter()
                    .map(|row| row.iter().map(|e| e.derivative(k)).collect())
                    .collect()
            })
            .collect();
        let dstructure = (0..n)
            .map(|i| {
                structure
                    .iter()
                    .map(|row| row.iter().map(|e| e.derivative(i)).collect())
                    .collect()
            })
            .collect();
        Ok(GeometryStructure {
            name: name.into(),
            kind,
            alpha,
            epsilon,
            chart,
            metric,
            structure,
            dmetric,
            dstructure,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> Option<GeometryKind> {
        self.kind
            .or_else(|| GeometryKind::from_signs(self.alpha, self.epsilon))
    }

    pub fn alpha(&self) -> i8 {
        self.alpha
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn metric(&self) -> &[Vec<ScalarExpr>] {
        &self.metric
    }

    pub fn structure(&self) -> &[Vec<ScalarExpr>] {
        &self.structure
    }

    fn eval_matrix<T: Real>(&self, m: &[Vec<ScalarExpr>], p: &[T]) -> Result<Matrix<T>, ExprError> {
        let n = self.dim();
        let mut out = Matrix::zeros(n);
        for (i, row) in m.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                out[(i, j)] = e.eval(p)?;
            }
        }
        Ok(out)
    }

    /// Raw metric components at `p`, without symmetrization.
    pub fn metric_at<T: Real>(&self, p: &[T]) -> Result<Matrix<T>, ExprError> {
        self.eval_matrix(&self.metric, p)
    }

    pub fn structure_at<T: Real>(&self, p: &[T]) -> Result<Matrix<T>, ExprError> {
        self.eval_matrix(&self.structure, p)
    }
}

/// All pointwise data entering the connection formulas.
#[derive(Debug, Clone)]
pub struct PointFrame<T> {
    pub point: Vec<T>,
    pub g: Metric2<T>,
    pub g_inv: Metric2<T>,
    /// `∂_k g_ij` at `(k, i, j)`.
    pub dg: Tensor03<T>,
    /// `J^k_j` at `(k, j)`.
    pub j: Matrix<T>,
    /// `∂_i J^k_j` at `(k, i, j)`.
    pub dj: Tensor12<T>,
    pub alpha: T,
    pub epsilon: T,
}

impl<T: Real> PointFrame<T> {
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    /// Point coordinates as `f64`, for reports and error messages.
    pub fn point_f64(&self) -> Vec<f64> {
        self.point.iter().map(|x| x.to_f64_lossy()).collect()
    }

    /// `αε`
    pub fn alpha_epsilon(&self) -> T {
        self.alpha * self.epsilon
    }
}

/// Evaluates `s` and its first derivatives at `p`.
pub fn frame_at<T: Real>(s: &GeometryStructure, p: &[T]) -> Result<PointFrame<T>, GeometryError> {
    let n = s.dim();
    let pf: Vec<f64> = p.iter().map(|x| x.to_f64_lossy()).collect();
    if p.len() != n {
        return Err(GeometryError::PointDimension {
            got: p.len(),
            dim: n,
        });
    }
    if !s.chart.contains(&pf) {
        return Err(GeometryError::OutOfDomain { point: pf });
    }
    let eval_err = |source| GeometryError::Evaluation {
        point: pf.clone(),
        source,
    };
    let g = Metric2::new(&s.metric_at(p).map_err(eval_err)?);
    let g_inv = invert_metric(&g).map_err(|source| GeometryError::Singular {
        point: pf.clone(),
        source,
    })?;
    let j = s.structure_at(p).map_err(eval_err)?;
    let mut dg = Tensor03::zeros(n);
    let mut dj = Tensor12::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                // symmetrize ∂_a g so it matches the symmetrized g
                let d1: T = s.dmetric[a][b][c].eval(p).map_err(eval_err)?;
                let d2: T = s.dmetric[a][c][b].eval(p).map_err(eval_err)?;
                dg[(a, b, c)] = T::lit(0.5) * (d1 + d2);
                dj[(b, a, c)] = s.dstructure[a][b][c].eval(p).map_err(eval_err)?;
            }
        }
    }
    Ok(PointFrame {
        point: p.to_vec(),
        g,
        g_inv,
        dg,
        j,
        dj,
        alpha: T::lit(s.alpha as f64),
        epsilon: T::lit(s.epsilon as f64),
    })
}

/// Smallest allowed `|det g|` and smallest eigenvalue for a Riemannian metric.
pub const NONDEGENERACY_BOUND: f64 = 1e-10;

/// One checked condition of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRecord {
    pub condition: &'static str,
    /// `"max"`: pass iff `value <= threshold`; `"min"`: pass iff `value > threshold`.
    pub bound: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl ConditionRecord {
    fn upper(condition: &'static str, value: f64, threshold: f64) -> Self {
        ConditionRecord {
            condition,
            bound: "max",
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    fn lower(condition: &'static str, value: f64, threshold: f64) -> Self {
        ConditionRecord {
            condition,
            bound: "min",
            value,
            threshold,
            pass: value > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub structure: String,
    pub geometry: Option<GeometryKind>,
    pub alpha: i8,
    pub epsilon: i8,
    pub points: usize,
    pub conditions: Vec<ConditionRecord>,
    /// Points where evaluation failed outright (pole, overflow, singular metric).
    pub evaluation_failures: Vec<String>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.condition == name)
    }
}

/// Checks the defining conditions of an (α,ε)-structure at every sample point.
///
/// Mathematical failures are reported, never raised.
pub fn validate_structure(
    s: &GeometryStructure,
    points: &[Vec<f64>],
    tol: f64,
) -> ValidationReport {
    let n = s.dim();
    let alpha = s.alpha as f64;
    let epsilon = s.epsilon as f64;
    let mut symmetry = 0.0f64;
    let mut min_det = f64::INFINITY;
    let mut min_eig = f64::INFINITY;
    let mut j_squared = 0.0f64;
    let mut trace = 0.0f64;
    let mut compat = 0.0f64;
    let mut failures = Vec::new();
    let worst = |acc: f64, d: f64| if d > acc || d.is_nan() { d } else { acc };

    for p in points {
        let (g, j) = match (s.metric_at(p), s.structure_at(p)) {
            (Ok(g), Ok(j)) => (g, j),
            (Err(e), _) | (_, Err(e)) => {
                failures.push(format!("{p:?}: {e}"));
                continue;
            }
        };
        symmetry = worst(symmetry, g.asymmetry());
        let det = g.determinant().abs();
        min_det = min_det.min(det);
        if s.epsilon == 1 {
            let ev = g.symmetric_eigenvalues();
            min_eig = min_eig.min(ev[0]);
        }
        let jj = j.matmul(&j).sub(&Matrix::identity(n).scale(alpha));
        j_squared = worst(j_squared, jj.max_abs());
        trace = worst(trace, j.trace().abs());
        let jtgj = j.transpose().matmul(&g).matmul(&j);
        compat = worst(compat, jtgj.sub(&g.scale(epsilon)).max_abs());
    }

    let mut conditions = vec![
        ConditionRecord::upper("metric_symmetry", symmetry, tol),
        ConditionRecord::lower("metric_nondegeneracy", min_det, NONDEGENERACY_BOUND),
    ];
    if s.epsilon == 1 {
        conditions.push(ConditionRecord::lower(
            "metric_positive_definite",
            min_eig,
            NONDEGENERACY_BOUND,
        ));
    }
    conditions.extend([
        ConditionRecord::upper("j_squared", j_squared, tol),
        ConditionRecord::upper("j_trace", trace, tol),
        ConditionRecord::upper("compatibility", compat, tol),
    ]);
    let pass = failures.is_empty() && !points.is_empty() && conditions.iter().all(|c| c.pass);
    ValidationReport {
        structure: s.name.clone(),
        geometry: s.kind(),
        alpha: s.alpha,
        epsilon: s.epsilon,
        points: points.len(),
        conditions,
        evaluation_failures: failures,
        pass,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KahlerType {
    KahlerType,
    NonKahlerType,
}

/// Kähler type iff `∇^g J` vanishes (to `tol`) at every sample point.
pub fn classify_kahler_type(
    s: &GeometryStructure,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<KahlerType, GeometryError> {
    Ok(if max_levi_civita_nabla_j(s, points)? <= tol {
        KahlerType::KahlerType
    } else {
        KahlerType::NonKahlerType
    })
}

/// `max_p max_abs(∇^g J)` over the sample points.
pub fn max_levi_civita_nabla_j(
    s: &GeometryStructure,
    points: &[Vec<f64>],
) -> Result<f64, GeometryError> {
    let mut worst = 0.0f64;
    for p in points {
        let f = frame_at::<f64>(s, p)?;
        let d = nabla_j(&levi_civita(&f), &f).max_abs();
        if d > worst || d.is_nan() {
            worst = d;
        }
    }
    Ok(worst)
}
