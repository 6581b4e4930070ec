use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use connforge::catalog::{get_entry, list_entries, CatalogError, ExpectedFlags};
use connforge::connections::{
    bismut, canonical_line, first_canonical, levi_civita, nabla_g_defect, nabla_j,
    nabla_plus_minus, solve_chern, solve_skew, torsion, torsion_type_defect, ConnectionCoeffs,
    SkewSign, SolveStatus,
};
use connforge::geometry::{
    frame_at, load_structure, sample_points, validate_structure, GeometryKind, GeometryStructure,
};
use connforge::tensor::MaxAbs;
use connforge::verify::{
    timestamp_now, to_canonical_json, verify_catalog, verify_structure, VerifyOptions,
};

#[derive(Parser)]
#[command(
    name = "connforge",
    version,
    about = "Adapted connections on (J^2 = ±1)-metric manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct Sampling {
    /// Number of seeded sample points.
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Seed of the sample-point generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tolerance for every "equals zero" check.
    #[arg(long, env = "CONNFORGE_TOL", default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the defining conditions of a structure at sample points.
    Validate {
        /// Catalog entry name or path to a structure file.
        target: String,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Print connection coefficients at a point.
    Connection {
        /// Catalog entry name or path to a structure file.
        target: String,
        /// levi-civita, first-canonical, chern, plus, minus, bismut or line:<t>.
        #[arg(long, default_value = "levi-civita")]
        kind: String,
        /// Comma-separated coordinates; defaults to the center of the chart.
        #[arg(long)]
        at: Option<String>,
    },
    /// Run the invariant suite.
    Verify {
        /// Catalog entry name or path to a structure file.
        #[arg(required_unless_present = "all", conflicts_with = "all")]
        target: Option<String>,
        /// Verify every catalog entry.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        sampling: Sampling,
        /// Write the JSON report to this file instead of standard output.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
    },
    /// List the catalog entries.
    List,
}

/// Failure modes mapped onto exit codes.
enum Failure {
    /// Exit 1: the input was understood but a check or construction failed.
    Check(String),
    /// Exit 2: unusable input.
    Input(String),
}

impl From<CatalogError> for Failure {
    fn from(e: CatalogError) -> Self {
        match e {
            CatalogError::UnknownEntry(_) => Failure::Input(e.to_string()),
            _ => Failure::Check(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<bool, Failure> {
    match command {
        Command::Validate { target, sampling } => cmd_validate(&target, sampling),
        Command::Connection { target, kind, at } => cmd_connection(&target, &kind, at.as_deref()),
        Command::Verify {
            target,
            all,
            sampling,
            json,
        } => cmd_verify(target.as_deref(), all, sampling, json.as_deref()),
        Command::List => cmd_list(),
    }
}

fn resolve(target: &str) -> Result<GeometryStructure, Failure> {
    if list_entries().contains(&target) {
        return Ok(get_entry(target)?.structure);
    }
    if Path::new(target).exists() {
        return load_structure(target).map_err(|e| Failure::Input(format!("{target}: {e}")));
    }
    Err(Failure::Input(format!(
        "`{target}` is neither a catalog entry nor a readable file"
    )))
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Failure::Input(format!(
            "tolerance must be positive and finite, got {tol}"
        )))
    }
}

fn print_stdout(text: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Check(format!(
            "cannot write to standard output: {e}"
        ))),
        _ => Ok(()),
    }
}

fn emit<T: Serialize>(value: &T) -> Result<(), Failure> {
    let json = to_canonical_json(value).map_err(|e| Failure::Check(e.to_string()))?;
    print_stdout(&json)
}

fn cmd_validate(target: &str, sampling: Sampling) -> Result<bool, Failure> {
    check_tol(sampling.tol)?;
    let s = resolve(target)?;
    let points = sample_points(s.chart(), sampling.points, sampling.seed);
    let report = validate_structure(&s, &points, sampling.tol);
    emit(&report)?;
    for c in report.conditions.iter().filter(|c| !c.pass) {
        eprintln!(
            "{}: {} = {:e} (bound {} {:e})",
            report.structure, c.condition, c.value, c.bound, c.threshold
        );
    }
    for e in &report.evaluation_failures {
        eprintln!("{}: {e}", report.structure);
    }
    eprintln!(
        "{}: {}",
        report.structure,
        if report.pass { "valid" } else { "INVALID" }
    );
    Ok(report.pass)
}

#[derive(Serialize)]
struct Defects {
    nabla_g: f64,
    nabla_j: f64,
    torsion_type: f64,
}

#[derive(Serialize)]
struct ConnectionOutput {
    structure: String,
    kind: String,
    point: Vec<f64>,
    coefficients: Vec<Vec<Vec<f64>>>,
    defects: Defects,
}

fn parse_point(s: &GeometryStructure, at: Option<&str>) -> Result<Vec<f64>, Failure> {
    let Some(text) = at else {
        return Ok(s
            .chart()
            .domain()
            .iter()
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect());
    };
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Input(format!("bad coordinate `{x}` in --at")))
        })
        .collect()
}

fn cmd_connection(target: &str, kind: &str, at: Option<&str>) -> Result<bool, Failure> {
    let s = resolve(target)?;
    let p = parse_point(&s, at)?;
    let f = frame_at::<f64>(&s, &p).map_err(|e| Failure::Input(e.to_string()))?;
    let chern = || {
        let r = solve_chern(&f);
        if r.status == SolveStatus::Unique {
            Ok(r.solution)
        } else {
            Err(Failure::Check(format!(
                "chern unavailable for (alpha, epsilon) = ({}, {}): solver status {}{}",
                s.alpha(),
                s.epsilon(),
                r.status,
                r.diagnostic.map(|d| format!(" ({d})")).unwrap_or_default()
            )))
        }
    };
    let skew = |sign| {
        let r = solve_skew(&f);
        if r.status == SolveStatus::Unique {
            Ok(nabla_plus_minus(&f, &r.solution, sign))
        } else {
            Err(Failure::Check(format!(
                "skew-torsion connection unavailable: solver status {}{}",
                r.status,
                r.diagnostic.map(|d| format!(" ({d})")).unwrap_or_default()
            )))
        }
    };
    let gamma: ConnectionCoeffs<f64> = match kind {
        "levi-civita" => levi_civita(&f),
        "first-canonical" => first_canonical(&f),
        "chern" => chern()?,
        "plus" => skew(SkewSign::Plus)?,
        "minus" => skew(SkewSign::Minus)?,
        "bismut" => {
            bismut(&first_canonical(&f), &chern()?).map_err(|e| Failure::Check(e.to_string()))?
        }
        other => match other.strip_prefix("line:").map(str::parse::<f64>) {
            Some(Ok(t)) if t.is_finite() => canonical_line(&first_canonical(&f), &chern()?, t)
                .map_err(|e| Failure::Check(e.to_string()))?,
            _ => return Err(Failure::Input(format!("unknown connection kind `{other}`"))),
        },
    };
    let defects = Defects {
        nabla_g: nabla_g_defect(&gamma, &f),
        nabla_j: nabla_j(&gamma, &f).max_abs(),
        torsion_type: torsion_type_defect(&torsion(&gamma), &f),
    };
    eprintln!(
        "{} {kind} at {p:?}: nabla g {:e}, nabla J {:e}, torsion condition {:e}",
        s.name(),
        defects.nabla_g,
        defects.nabla_j,
        defects.torsion_type
    );
    emit(&ConnectionOutput {
        structure: s.name().to_string(),
        kind: kind.to_string(),
        point: p,
        coefficients: gamma.coeffs().to_nested(),
        defects,
    })?;
    Ok(true)
}

fn cmd_verify(
    target: Option<&str>,
    all: bool,
    sampling: Sampling,
    out: Option<&Path>,
) -> Result<bool, Failure> {
    check_tol(sampling.tol)?;
    let opts = VerifyOptions {
        points: sampling.points,
        seed: sampling.seed,
        tol: sampling.tol,
    };
    let timestamp = timestamp_now();
    let (json, reports) = if all {
        let suite = verify_catalog(&opts, &timestamp)?;
        let json = to_canonical_json(&suite).map_err(|e| Failure::Check(e.to_string()))?;
        (json, suite.reports)
    } else {
        let s = resolve(target.expect("clap requires a target without --all"))?;
        let report = verify_structure(&s, &opts, &timestamp);
        let json = to_canonical_json(&report).map_err(|e| Failure::Check(e.to_string()))?;
        (json, vec![report])
    };
    match out {
        Some(path) => std::fs::write(path, json + "\n")
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print_stdout(&json)?,
    }
    for r in &reports {
        let failed: Vec<String> = r
            .records
            .iter()
            .filter(|x| !x.pass)
            .map(|x| format!("{}:{}", x.id, x.check))
            .collect();
        if failed.is_empty() && r.pass {
            eprintln!("{}: PASS ({} records)", r.structure, r.records.len());
        } else {
            eprintln!("{}: FAIL [{}]", r.structure, failed.join(", "));
        }
    }
    Ok(reports.iter().all(|r| r.pass))
}

#[derive(Serialize)]
struct ListEntry {
    name: &'static str,
    geometry: Option<GeometryKind>,
    alpha: i8,
    epsilon: i8,
    doc: &'static str,
    flags: ExpectedFlags,
}

fn cmd_list() -> Result<bool, Failure> {
    let mut out = Vec::new();
    for name in list_entries() {
        let e = get_entry(name)?;
        eprintln!("{name}: {}", e.doc);
        out.push(ListEntry {
            name,
            geometry: e.structure.kind(),
            alpha: e.structure.alpha(),
            epsilon: e.structure.epsilon(),
            doc: e.doc,
            flags: e.flags,
        });
    }
    emit(&out)?;
    Ok(true)
}
