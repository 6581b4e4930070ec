//! Built-in example structures, one flat and one curved per geometry.
//!
//! All non-Kähler behaviour enters through a conformal or diagonal factor
//! in the metric while `J` stays constant. Every entry certifies its
//! declared flags against the solvers when it is fetched.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::Serialize;

use crate::connections::{solve_chern, solve_skew};
use crate::expr::parse;
use crate::geometry::{
    classify_kahler_type, frame_at, sample_points, validate_structure, Chart, GeometryError,
    GeometryKind, GeometryStructure, KahlerType,
};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("catalog entry `{name}` failed validation: {detail}")]
    Invalid { name: String, detail: String },
    #[error(
        "catalog entry `{name}` declares {flag} = {declared} but computation gives {computed}"
    )]
    FlagMismatch {
        name: String,
        flag: &'static str,
        declared: bool,
        computed: bool,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExpectedFlags {
    pub kahler_type: bool,
    /// The Chern solve is unique at every certification point.
    pub chern_exists: bool,
    /// The skew-torsion solve is unique at every certification point.
    pub skew_exists: bool,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub structure: GeometryStructure,
    pub doc: &'static str,
    pub flags: ExpectedFlags,
}

/// Points and seed used to certify entries.
pub const CERTIFY_POINTS: usize = 50;
pub const CERTIFY_SEED: u64 = 0;
pub const CERTIFY_TOL: f64 = 1e-9;

struct Recipe {
    name: &'static str,
    kind: GeometryKind,
    doc: &'static str,
    metric: [[&'static str; 4]; 4],
    structure: [[&'static str; 4]; 4],
    flags: ExpectedFlags,
}

const J_COMPLEX: [[&str; 4]; 4] = [
    ["0", "-1", "0", "0"],
    ["1", "0", "0", "0"],
    ["0", "0", "0", "-1"],
    ["0", "0", "1", "0"],
];
const J_PARA: [[&str; 4]; 4] = [
    ["0", "1", "0", "0"],
    ["1", "0", "0", "0"],
    ["0", "0", "0", "1"],
    ["0", "0", "1", "0"],
];
const J_PRODUCT: [[&str; 4]; 4] = [
    ["1", "0", "0", "0"],
    ["0", "1", "0", "0"],
    ["0", "0", "-1", "0"],
    ["0", "0", "0", "-1"],
];
const G_EUCLID: [[&str; 4]; 4] = [
    ["1", "0", "0", "0"],
    ["0", "1", "0", "0"],
    ["0", "0", "1", "0"],
    ["0", "0", "0", "1"],
];
const G_SPLIT: [[&str; 4]; 4] = [
    ["1", "0", "0", "0"],
    ["0", "-1", "0", "0"],
    ["0", "0", "1", "0"],
    ["0", "0", "0", "-1"],
];
const E2: &str = "exp(2*x1)";
const NEG_E2: &str = "-exp(2*x1)";
const E3: &str = "exp(2*x3)";

const RECIPES: [Recipe; 8] = [
    Recipe {
        name: "flat_hermitian",
        kind: GeometryKind::Hermitian,
        doc: "Euclidean R^4 with the standard complex structure.",
        metric: G_EUCLID,
        structure: J_COMPLEX,
        flags: ExpectedFlags {
            kahler_type: true,
            chern_exists: true,
            skew_exists: true,
        },
    },
    Recipe {
        name: "flat_norden",
        kind: GeometryKind::Norden,
        doc: "Split metric diag(1,-1,1,-1) with the standard complex structure (anti-isometry).",
        metric: G_SPLIT,
        structure: J_COMPLEX,
        flags: ExpectedFlags {
            kahler_type: true,
            chern_exists: false,
            skew_exists: true,
        },
    },
    Recipe {
        name: "flat_product",
        kind: GeometryKind::Product,
        doc: "Euclidean R^4 with the product structure diag(1,1,-1,-1).",
        metric: G_EUCLID,
        structure: J_PRODUCT,
        flags: ExpectedFlags {
            kahler_type: true,
            chern_exists: false,
            skew_exists: true,
        },
    },
    Recipe {
        name: "flat_para",
        kind: GeometryKind::ParaHermitian,
        doc:
            "Split metric diag(1,-1,1,-1) with the paracomplex structure swapping e1<->e2, e3<->e4.",
        metric: G_SPLIT,
        structure: J_PARA,
        flags: ExpectedFlags {
            kahler_type: true,
            chern_exists: true,
            skew_exists: true,
        },
    },
    Recipe {
        name: "hermitian_conformal_4d",
        kind: GeometryKind::Hermitian,
        doc: "Standard complex structure with the conformally flat metric exp(2 x1) Id.",
        metric: [
            [E2, "0", "0", "0"],
            ["0", E2, "0", "0"],
            ["0", "0", E2, "0"],
            ["0", "0", "0", E2],
        ],
        structure: J_COMPLEX,
        flags: ExpectedFlags {
            kahler_type: false,
            chern_exists: true,
            skew_exists: true,
        },
    },
    Recipe {
        name: "norden_4d",
        kind: GeometryKind::Norden,
        doc: "Standard complex structure with exp(2 x1) diag(1,-1,1,-1).",
        metric: [
            [E2, "0", "0", "0"],
            ["0", NEG_E2, "0", "0"],
            ["0", "0", E2, "0"],
            ["0", "0", "0", NEG_E2],
        ],
        structure: J_COMPLEX,
        flags: ExpectedFlags {
            kahler_type: false,
            chern_exists: false,
            skew_exists: false,
        },
    },
    Recipe {
        name: "product_riemannian_4d",
        kind: GeometryKind::Product,
        doc: "Product structure diag(1,1,-1,-1) with diag(exp(2 x3), exp(2 x3), 1, 1).",
        metric: [
            [E3, "0", "0", "0"],
            ["0", E3, "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "1"],
        ],
        structure: J_PRODUCT,
        flags: ExpectedFlags {
            kahler_type: false,
            chern_exists: false,
            skew_exists: false,
        },
    },
    Recipe {
        name: "para_hermitian_4d",
        kind: GeometryKind::ParaHermitian,
        doc: "Paracomplex structure swapping e1<->e2, e3<->e4 with exp(2 x1) diag(1,-1,1,-1).",
        metric: [
            [E2, "0", "0", "0"],
            ["0", NEG_E2, "0", "0"],
            ["0", "0", E2, "0"],
            ["0", "0", "0", NEG_E2],
        ],
        structure: J_PARA,
        flags: ExpectedFlags {
            kahler_type: false,
            chern_exists: true,
            skew_exists: true,
        },
    },
];

/// Names of all built-in entries, sorted.
pub fn list_entries() -> Vec<&'static str> {
    let mut names: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
    names.sort_unstable();
    names
}

fn build(r: &Recipe) -> GeometryStructure {
    let conv = |m: &[[&str; 4]; 4]| {
        m.iter()
            .map(|row| {
                row.iter()
                    .map(|s| parse(s, 4).expect("catalog expression parses"))
                    .collect()
            })
            .collect()
    };
    let (alpha, epsilon) = r.kind.signs();
    GeometryStructure::new(
        r.name,
        Some(r.kind),
        alpha,
        epsilon,
        Chart::cube(4, -1.0, 1.0).expect("catalog chart is valid"),
        conv(&r.metric),
        conv(&r.structure),
    )
    .expect("catalog recipe is well formed")
}

/// Fetches an entry and certifies it: the structure must validate at the
/// certification points and every declared flag must match computation.
/// Certified entries are cached for the lifetime of the process.
pub fn get_entry(name: &str) -> Result<CatalogEntry, CatalogError> {
    static CERTIFIED: OnceLock<Mutex<HashMap<&'static str, CatalogEntry>>> = OnceLock::new();
    let recipe = RECIPES
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| CatalogError::UnknownEntry(name.to_string()))?;
    let cache = CERTIFIED.get_or_init(Default::default);
    if let Some(entry) = cache.lock().expect("catalog cache").get(recipe.name) {
        return Ok(entry.clone());
    }
    let entry = CatalogEntry {
        structure: build(recipe),
        doc: recipe.doc,
        flags: recipe.flags,
    };
    certify(&entry)?;
    cache
        .lock()
        .expect("catalog cache")
        .insert(recipe.name, entry.clone());
    Ok(entry)
}

/// Recomputes the flags of `entry` and compares them to the declared ones.
pub fn certify(entry: &CatalogEntry) -> Result<(), CatalogError> {
    let s = &entry.structure;
    let points = sample_points(s.chart(), CERTIFY_POINTS, CERTIFY_SEED);
    let report = validate_structure(s, &points, CERTIFY_TOL);
    if !report.pass {
        return Err(CatalogError::Invalid {
            name: s.name().to_string(),
            detail: format!("{:?}", report.conditions),
        });
    }
    let computed = computed_flags(s, &points)?;
    let checks = [
        ("kahler_type", entry.flags.kahler_type, computed.kahler_type),
        (
            "chern_exists",
            entry.flags.chern_exists,
            computed.chern_exists,
        ),
        ("skew_exists", entry.flags.skew_exists, computed.skew_exists),
    ];
    for (flag, declared, computed) in checks {
        if declared != computed {
            return Err(CatalogError::FlagMismatch {
                name: s.name().to_string(),
                flag,
                declared,
                computed,
            });
        }
    }
    Ok(())
}

/// Flags as computed at `points`.
pub fn computed_flags(
    s: &GeometryStructure,
    points: &[Vec<f64>],
) -> Result<ExpectedFlags, GeometryError> {
    let kahler_type = classify_kahler_type(s, points, CERTIFY_TOL)? == KahlerType::KahlerType;
    let mut chern_exists = true;
    let mut skew_exists = true;
    for p in points {
        let f = frame_at::<f64>(s, p)?;
        chern_exists &= solve_chern(&f).is_unique();
        skew_exists &= solve_skew(&f).is_unique();
    }
    Ok(ExpectedFlags {
        kahler_type,
        chern_exists,
        skew_exists,
    })
}
