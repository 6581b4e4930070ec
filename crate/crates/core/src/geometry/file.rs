//! JSON structure files.
//!
//! ```json
//! {"name": "...", "geometry": "hermitian|norden|product|para-hermitian",
//!  "alpha": -1, "epsilon": 1, "dimension": 4,
//!  "domain": [[-1, 1], ...], "metric": [["exp(2*x1)", "0", ...], ...],
//!  "J": [["0", "-1", ...], ...]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Chart, GeometryError, GeometryKind, GeometryStructure};
use crate::expr::{parse, ScalarExpr};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryKind>,
    pub alpha: i8,
    pub epsilon: i8,
    pub dimension: usize,
    pub domain: Vec<[f64; 2]>,
    pub metric: Vec<Vec<String>>,
    #[serde(rename = "J")]
    pub structure: Vec<Vec<String>>,
}

impl StructureFile {
    pub fn into_structure(self) -> Result<GeometryStructure, GeometryError> {
        let n = self.dimension;
        if self.domain.len() != n {
            return Err(GeometryError::Schema(format!(
                "domain has {} intervals, dimension is {n}",
                self.domain.len()
            )));
        }
        let chart = Chart::new(self.domain.iter().map(|&[lo, hi]| (lo, hi)).collect())?;
        let metric = parse_matrix("metric", &self.metric, n)?;
        let structure = parse_matrix("J", &self.structure, n)?;
        GeometryStructure::new(
            self.name,
            self.geometry,
            self.alpha,
            self.epsilon,
            chart,
            metric,
            structure,
        )
    }
}

fn parse_matrix(
    field: &'static str,
    rows: &[Vec<String>],
    n: usize,
) -> Result<Vec<Vec<ScalarExpr>>, GeometryError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(GeometryError::Schema(format!(
            "{field} must be a {n}x{n} array"
        )));
    }
    rows.iter()
        .enumerate()
        .map(|(row, r)| {
            r.iter()
                .enumerate()
                .map(|(col, text)| {
                    parse(text, n).map_err(|source| GeometryError::Expression {
                        field,
                        row,
                        col,
                        source,
                    })
                })
                .collect()
        })
        .collect()
}

impl GeometryStructure {
    /// Exports to the file schema; loading the result reproduces an
    /// equal-valued structure.
    pub fn to_file(&self) -> StructureFile {
        let text = |m: &[Vec<ScalarExpr>]| -> Vec<Vec<String>> {
            m.iter()
                .map(|r| r.iter().map(|e| e.to_string()).collect())
                .collect()
        };
        StructureFile {
            name: self.name().to_string(),
            geometry: self.kind,
            alpha: self.alpha(),
            epsilon: self.epsilon(),
            dimension: self.dim(),
            domain: self
                .chart()
                .domain()
                .iter()
                .map(|&(lo, hi)| [lo, hi])
                .collect(),
            metric: text(self.metric()),
            structure: text(self.structure()),
        }
    }
}

/// Parses a structure from JSON text.
pub fn parse_structure(json: &str) -> Result<GeometryStructure, GeometryError> {
    let file: StructureFile = serde_json::from_str(json)?;
    file.into_structure()
}

/// Reads and parses a structure file.
pub fn load_structure(path: impl AsRef<Path>) -> Result<GeometryStructure, GeometryError> {
    parse_structure(&std::fs::read_to_string(path)?)
}
