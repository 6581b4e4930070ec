//! The invariant suite behind `connforge verify`.
//!
//! For a structure and a seeded set of sample points, every identity about
//! J*, π, S, ∇⁰, the Chern connection and ∇± that applies to the
//! structure's signs is evaluated pointwise and reduced to one record per
//! check. Report assembly is sequential and ordered by invariant id and
//! point index, so equal inputs give equal reports.

use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::catalog::{get_entry, list_entries, CatalogError};
use crate::connections::{
    affine_combine, bismut, canonical_line, first_canonical, j_star, levi_civita,
    metric_compatibility_defect, nabla_g_defect, nabla_j, nabla_plus_minus, project, s_tensor,
    solve_chern, solve_skew, synthetic_connection, synthetic_metric_connection, torsion,
    torsion_type_defect, ConnectionCoeffs, Provenance, SkewSign, SolveStatus,
};
use crate::geometry::{
    classify_kahler_type, frame_at, sample_points, validate_structure, GeometryKind,
    GeometryStructure, KahlerType,
};
use crate::tensor::MaxAbs;

/// Synthetic connections drawn per point for the generic invariants.
pub const SYNTHETIC_PER_POINT: usize = 5;
/// Parameters of the canonical line checked by invariant 9.
pub const LINE_PARAMETERS: [f64; 5] = [-1.0, 0.0, 0.5, 1.0, 3.0];
/// A connection with `max_abs(∇J)` at least this large counts as perturbed.
pub const PERTURBED_NABLA_J: f64 = 1e-3;
/// A perturbed connection must move under J* by more than this.
pub const PERTURBED_MOVE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            points: 50,
            seed: 0,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Pass iff the worst value is at most the threshold.
    Max,
    /// Pass iff the smallest value exceeds the threshold.
    Min,
}

/// One check of one invariant, reduced over all tested points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantRecord {
    /// 1–10 for the connection invariants, 0 for the structure's defining conditions.
    pub id: u8,
    pub check: &'static str,
    pub description: &'static str,
    pub points: usize,
    pub bound: Bound,
    /// Worst value over the tested points: a maximum for [`Bound::Max`], a minimum for [`Bound::Min`].
    pub value: f64,
    pub threshold: f64,
    /// Index of the point realizing `value`.
    pub worst_point: Option<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub unique: usize,
    pub none: usize,
    pub underdetermined: usize,
}

impl StatusCounts {
    fn add(&mut self, s: SolveStatus) {
        match s {
            SolveStatus::Unique => self.unique += 1,
            SolveStatus::None => self.none += 1,
            SolveStatus::Underdetermined => self.underdetermined += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverStatuses {
    pub chern: StatusCounts,
    pub skew: StatusCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub structure: String,
    pub geometry: Option<GeometryKind>,
    pub alpha: i8,
    pub epsilon: i8,
    pub kahler_type: Option<KahlerType>,
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
    pub timestamp: String,
    pub records: Vec<InvariantRecord>,
    pub solver_statuses: SolverStatuses,
    /// Invariants that do not apply to this structure, with the reason.
    pub skipped: Vec<String>,
    pub evaluation_failures: Vec<String>,
    pub pass: bool,
}

/// Reports for several structures, ordered by structure name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySuite {
    pub seed: u64,
    pub points: usize,
    pub tol: f64,
    pub timestamp: String,
    pub reports: Vec<VerifyReport>,
    pub pass: bool,
}

/// Current UTC time in RFC 3339 form.
pub fn timestamp_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

struct Acc {
    id: u8,
    check: &'static str,
    description: &'static str,
    bound: Bound,
    threshold: f64,
    value: Option<f64>,
    worst_point: Option<usize>,
    points: usize,
    last_point: Option<usize>,
}

impl Acc {
    fn observe(&mut self, point: usize, v: f64) {
        if self.last_point != Some(point) {
            self.points += 1;
            self.last_point = Some(point);
        }
        let worse = match (self.value, self.bound) {
            (None, _) => true,
            (Some(cur), _) if cur.is_nan() => false,
            (Some(_), _) if v.is_nan() => true,
            (Some(cur), Bound::Max) => v > cur,
            (Some(cur), Bound::Min) => v < cur,
        };
        if worse {
            self.value = Some(v);
            self.worst_point = Some(point);
        }
    }

    fn finish(self) -> Option<InvariantRecord> {
        let value = self.value?;
        let pass = match self.bound {
            Bound::Max => value <= self.threshold,
            Bound::Min => value > self.threshold,
        };
        Some(InvariantRecord {
            id: self.id,
            check: self.check,
            description: self.description,
            points: self.points,
            bound: self.bound,
            value,
            threshold: self.threshold,
            worst_point: self.worst_point,
            pass,
        })
    }
}

struct Recorder {
    tol: f64,
    accs: Vec<Acc>,
}

impl Recorder {
    fn acc(
        &mut self,
        id: u8,
        check: &'static str,
        description: &'static str,
        bound: Bound,
        threshold: f64,
    ) -> &mut Acc {
        if let Some(pos) = self
            .accs
            .iter()
            .position(|a| a.id == id && a.check == check)
        {
            return &mut self.accs[pos];
        }
        self.accs.push(Acc {
            id,
            check,
            description,
            bound,
            threshold,
            value: None,
            worst_point: None,
            points: 0,
            last_point: None,
        });
        self.accs.last_mut().expect("just pushed")
    }

    fn max(
        &mut self,
        id: u8,
        check: &'static str,
        description: &'static str,
        point: usize,
        v: f64,
    ) {
        let tol = self.tol;
        self.acc(id, check, description, Bound::Max, tol)
            .observe(point, v);
    }

    fn records(self) -> Vec<InvariantRecord> {
        let mut out: Vec<InvariantRecord> = self.accs.into_iter().filter_map(Acc::finish).collect();
        out.sort_by_key(|r| r.id);
        out
    }
}

fn synthetic_seeds(seed: u64, points: usize) -> Vec<[u64; SYNTHETIC_PER_POINT]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    (0..points)
        .map(|_| std::array::from_fn(|_| rng.next_u64()))
        .collect()
}

/// Runs every applicable invariant on `s` at `opts.points` seeded points.
pub fn verify_structure(
    s: &GeometryStructure,
    opts: &VerifyOptions,
    timestamp: &str,
) -> VerifyReport {
    let points = sample_points(s.chart(), opts.points, opts.seed);
    let seeds = synthetic_seeds(opts.seed, points.len());
    let validation = validate_structure(s, &points, opts.tol);
    let kahler = classify_kahler_type(s, &points, opts.tol).ok();
    let alpha_epsilon = s.alpha() * s.epsilon();
    let hermitian = (s.alpha(), s.epsilon()) == (-1, 1);
    let mut rec = Recorder {
        tol: opts.tol,
        accs: Vec::new(),
    };
    let mut statuses = SolverStatuses::default();
    let mut failures = validation.evaluation_failures.clone();
    let mut skipped = Vec::new();

    if alpha_epsilon == 1 && kahler == Some(KahlerType::KahlerType) {
        skipped
            .push("7: Chern non-existence is only asserted for non-Kähler-type structures".into());
    }
    if alpha_epsilon == 1 {
        skipped
            .push("9: the canonical line needs the Chern connection (alpha*epsilon = -1)".into());
    }
    if !hermitian {
        skipped.push("8: the nabla+/nabla- identities apply to almost Hermitian structures".into());
    }
    if kahler != Some(KahlerType::KahlerType) {
        skipped.push("10: structure is not of Kähler type".into());
    }

    for (idx, p) in points.iter().enumerate() {
        let f = match frame_at::<f64>(s, p) {
            Ok(f) => f,
            Err(e) => {
                failures.push(format!("point {idx}: {e}"));
                continue;
            }
        };
        let lc = levi_civita(&f);
        let c0 = first_canonical(&f);
        let synthetic: Vec<ConnectionCoeffs<f64>> = seeds[idx]
            .iter()
            .map(|&k| synthetic_connection(&f, k))
            .collect();
        let metric: Vec<ConnectionCoeffs<f64>> = seeds[idx]
            .iter()
            .map(|&k| synthetic_metric_connection(&f, k))
            .collect();
        let chern = solve_chern(&f);
        let skew = solve_skew(&f);
        statuses.chern.add(chern.status);
        statuses.skew.add(skew.status);

        let mut adapted = vec![c0.clone()];
        for g in &synthetic {
            let moved = j_star(g, &f).distance(g);
            rec.max(
                1,
                "involution",
                "J*(J*(G)) = G",
                idx,
                j_star(&j_star(g, &f), &f).distance(g),
            );
            if nabla_j(g, &f).max_abs() >= PERTURBED_NABLA_J {
                rec.acc(
                    2,
                    "perturbed_moved",
                    "max|nabla J| >= 1e-3 implies max|J*(G) - G| > 1e-6",
                    Bound::Min,
                    PERTURBED_MOVE,
                )
                .observe(idx, moved);
            }
            let pg = project(g, &f);
            rec.max(
                3,
                "project_adapted",
                "nabla J of pi(G) vanishes",
                idx,
                nabla_j(&pg, &f).max_abs(),
            );
            rec.max(
                3,
                "project_idempotent",
                "pi(pi(G)) = pi(G)",
                idx,
                project(&pg, &f).distance(&pg),
            );
            let shifted = g.shifted(&s_tensor(g, &f), Provenance::Combo);
            rec.max(
                5,
                "project_shift",
                "pi(G) = G + S_G",
                idx,
                pg.distance(&shifted),
            );
            adapted.push(pg);
        }
        if chern.is_unique() {
            adapted.push(chern.solution.clone());
        }
        for a in &adapted {
            rec.max(
                2,
                "adapted_fixed",
                "nabla J = 0 implies J*(G) = G",
                idx,
                j_star(a, &f).distance(a),
            );
        }
        rec.max(
            4,
            "project_levi_civita",
            "pi(levi-civita) = first canonical",
            idx,
            project(&lc, &f).distance(&c0),
        );
        for m in &metric {
            let pm = project(m, &f);
            rec.max(
                6,
                "project_metric",
                "pi preserves metric connections",
                idx,
                nabla_g_defect(&pm, &f),
            );
            rec.max(
                6,
                "s_antisymmetry",
                "lowered S of a metric connection is skew in its last two slots",
                idx,
                metric_compatibility_defect(&s_tensor(m, &f), &f),
            );
        }

        if alpha_epsilon == -1 {
            let unique_defect = if chern.is_unique() { 0.0 } else { 1.0 };
            rec.max(
                7,
                "chern_unique",
                "Chern solve is unique (1 marks a failing point)",
                idx,
                unique_defect,
            );
            if chern.is_unique() {
                let c = &chern.solution;
                rec.max(
                    7,
                    "chern_residual",
                    "Chern solve residual",
                    idx,
                    chern.residual,
                );
                rec.max(
                    7,
                    "chern_nabla_g",
                    "nabla g of the Chern connection",
                    idx,
                    nabla_g_defect(c, &f),
                );
                rec.max(
                    7,
                    "chern_nabla_j",
                    "nabla J of the Chern connection",
                    idx,
                    nabla_j(c, &f).max_abs(),
                );
                rec.max(
                    7,
                    "chern_torsion_type",
                    "T(J., J.) - alpha T of the Chern connection",
                    idx,
                    torsion_type_defect(&torsion(c), &f),
                );
                for t in LINE_PARAMETERS {
                    let line = canonical_line(&c0, c, t).expect("same point");
                    rec.max(
                        9,
                        "line_adapted",
                        "nabla J along the canonical line",
                        idx,
                        nabla_j(&line, &f).max_abs(),
                    );
                    rec.max(
                        9,
                        "line_metric",
                        "nabla g along the canonical line",
                        idx,
                        nabla_g_defect(&line, &f),
                    );
                }
            }
        } else if kahler == Some(KahlerType::NonKahlerType) {
            let unique_defect = if chern.is_unique() { 1.0 } else { 0.0 };
            rec.max(
                7,
                "chern_not_unique",
                "Chern solve is not unique (1 marks a failing point)",
                idx,
                unique_defect,
            );
        }

        if hermitian && chern.is_unique() && skew.is_unique() {
            let c = &chern.solution;
            let plus = nabla_plus_minus(&f, &skew.solution, SkewSign::Plus);
            let minus = nabla_plus_minus(&f, &skew.solution, SkewSign::Minus);
            rec.max(
                8,
                "project_plus",
                "pi(nabla+) = nabla+",
                idx,
                project(&plus, &f).distance(&plus),
            );
            rec.max(
                8,
                "project_minus",
                "pi(nabla-) = Chern",
                idx,
                project(&minus, &f).distance(c),
            );
            let mid = affine_combine(&[(0.5, &plus), (0.5, &minus)]).expect("affine weights");
            rec.max(
                8,
                "midpoint",
                "(nabla+ + nabla-)/2 = levi-civita",
                idx,
                mid.distance(&lc),
            );
            let b = bismut(&c0, c).expect("same point");
            rec.max(
                8,
                "bismut_plus",
                "2 first canonical - Chern = nabla+",
                idx,
                b.distance(&plus),
            );
        }

        if kahler == Some(KahlerType::KahlerType) {
            rec.max(
                10,
                "kahler_first_canonical",
                "levi-civita = first canonical",
                idx,
                lc.distance(&c0),
            );
            rec.max(
                10,
                "kahler_defects",
                "nabla g and nabla J of levi-civita",
                idx,
                nabla_g_defect(&lc, &f).max(nabla_j(&lc, &f).max_abs()),
            );
            if alpha_epsilon == -1 && chern.is_unique() {
                rec.max(
                    10,
                    "kahler_chern",
                    "levi-civita = Chern",
                    idx,
                    lc.distance(&chern.solution),
                );
            }
        }
    }

    if hermitian && statuses.skew.unique < points.len() {
        skipped.push(format!(
            "8: skipped at {} point(s) where the skew-torsion solve is not unique",
            points.len() - statuses.skew.unique
        ));
    }

    let mut records: Vec<InvariantRecord> = validation
        .conditions
        .iter()
        .map(|c| InvariantRecord {
            id: 0,
            check: c.condition,
            description: "defining condition of the structure",
            points: validation.points,
            bound: if c.bound == "min" {
                Bound::Min
            } else {
                Bound::Max
            },
            value: c.value,
            threshold: c.threshold,
            worst_point: None,
            pass: c.pass,
        })
        .collect();
    records.extend(rec.records());
    let pass = failures.is_empty() && !points.is_empty() && records.iter().all(|r| r.pass);
    VerifyReport {
        structure: s.name().to_string(),
        geometry: s.kind(),
        alpha: s.alpha(),
        epsilon: s.epsilon(),
        kahler_type: kahler,
        seed: opts.seed,
        points: points.len(),
        tol: opts.tol,
        timestamp: timestamp.to_string(),
        records,
        solver_statuses: statuses,
        skipped,
        evaluation_failures: failures,
        pass,
    }
}

/// Verifies every catalog entry, in name order.
pub fn verify_catalog(opts: &VerifyOptions, timestamp: &str) -> Result<VerifySuite, CatalogError> {
    let mut reports = Vec::new();
    for name in list_entries() {
        let entry = get_entry(name)?;
        reports.push(verify_structure(&entry.structure, opts, timestamp));
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(VerifySuite {
        seed: opts.seed,
        points: opts.points,
        tol: opts.tol,
        timestamp: timestamp.to_string(),
        reports,
        pass,
    })
}

/// Serializes `value` as pretty JSON with every non-integer number written
/// with 17 significant digits; non-finite numbers become `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut v = serde_json::to_value(value)?;
    canonicalize_numbers(&mut v);
    serde_json::to_string_pretty(&v)
}

fn canonicalize_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            *v = if x.is_finite() {
                Value::Number(
                    serde_json::Number::from_str(&format!("{x:.16e}")).expect("valid JSON number"),
                )
            } else {
                Value::Null
            };
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize_numbers),
        Value::Object(map) => map.values_mut().for_each(canonicalize_numbers),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_entry;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            points: 4,
            seed: 3,
            tol: 1e-9,
        }
    }

    fn ids(r: &VerifyReport) -> Vec<u8> {
        let mut ids: Vec<u8> = r.records.iter().map(|r| r.id).collect();
        ids.dedup();
        ids
    }

    #[test]
    fn hermitian_conformal_runs_all_but_kahler_checks() {
        let s = get_entry("hermitian_conformal_4d").unwrap().structure;
        let r = verify_structure(&s, &quick(), "t");
        assert!(
            r.pass,
            "{:#?}",
            r.records.iter().filter(|r| !r.pass).collect::<Vec<_>>()
        );
        assert_eq!(ids(&r), vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        assert_eq!(r.solver_statuses.chern.unique, 4);
        assert!(r.records.iter().all(|r| r.id == 0 || r.points == 4));
    }

    #[test]
    fn flat_norden_has_degeneracy_checks_but_no_chern() {
        let s = get_entry("flat_norden").unwrap().structure;
        let r = verify_structure(&s, &quick(), "t");
        assert!(r.pass);
        assert_eq!(ids(&r), vec![0, 1, 2, 3, 4, 5, 6, 10]);
        assert_eq!(r.solver_statuses.chern.underdetermined, 4);
    }

    #[test]
    fn product_riemannian_records_chern_failure_as_expected() {
        let s = get_entry("product_riemannian_4d").unwrap().structure;
        let r = verify_structure(&s, &quick(), "t");
        assert!(r.pass);
        let c = r
            .records
            .iter()
            .find(|r| r.check == "chern_not_unique")
            .unwrap();
        assert_eq!(c.value, 0.0);
        assert_eq!(r.solver_statuses.chern.unique, 0);
    }

    #[test]
    fn tolerance_squeeze_reports_failures() {
        let s = get_entry("hermitian_conformal_4d").unwrap().structure;
        let opts = VerifyOptions {
            tol: 1e-18,
            ..quick()
        };
        let r = verify_structure(&s, &opts, "t");
        assert!(!r.pass);
        assert!(r.records.iter().any(|r| !r.pass));
    }

    #[test]
    fn canonical_json_uses_17_digits() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: u32,
            c: f64,
            d: f64,
        }
        let out = to_canonical_json(&S {
            a: 0.1,
            b: 7,
            c: f64::NAN,
            d: 0.0,
        })
        .unwrap();
        assert!(out.contains("\"a\": 1.0000000000000001e-1"), "{out}");
        assert!(out.contains("\"b\": 7"));
        assert!(out.contains("\"c\": null"));
        assert!(out.contains("\"d\": 0.0000000000000000e+0"), "{out}");
        let back: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }

    #[test]
    fn reports_are_deterministic() {
        let s = get_entry("para_hermitian_4d").unwrap().structure;
        let a = to_canonical_json(&verify_structure(&s, &quick(), "t")).unwrap();
        let b = to_canonical_json(&verify_structure(&s, &quick(), "t")).unwrap();
        assert_eq!(a, b);
    }
}
