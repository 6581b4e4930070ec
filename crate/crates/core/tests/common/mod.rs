#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use connforge::geometry::{parse_structure, GeometryStructure};

/// Random expression text in `x1..xn`, free of poles and overflow on `[-1, 1]^n`.
pub fn random_expr_text(rng: &mut ChaCha8Rng, depth: u32, n: usize) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..4) {
            0 | 1 => format!("x{}", rng.gen_range(1..=n)),
            2 => format!("{}", rng.gen_range(-3..=3)),
            _ => format!("{}/{}", rng.gen_range(-5..=5), rng.gen_range(1..=4)),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr_text(rng, depth - 1, n);
    match rng.gen_range(0..10) {
        0 => format!("({} + {})", sub(rng), sub(rng)),
        1 => format!("({} - {})", sub(rng), sub(rng)),
        2 | 3 => format!("({} * {})", sub(rng), sub(rng)),
        4 => format!("({})^{}", sub(rng), rng.gen_range(2..=3)),
        5 => format!("exp({}/4)", sub(rng)),
        6 => format!("sin({})", sub(rng)),
        7 => format!("cos({})", sub(rng)),
        8 => format!("{} / (2 + sin({}))", sub(rng), sub(rng)),
        _ => format!("(1 + ({})^2)^(-1)", sub(rng)),
    }
}

/// Central difference of `f` along coordinate `i` (0-based).
pub fn central_difference(f: impl Fn(&[f64]) -> f64, p: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = p.to_vec();
    let mut minus = p.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// `g = Id`, `J` the standard complex structure rotated by the angle `x1`
/// in the (e2, e3) plane: almost Hermitian, not integrable, so no adapted
/// connection with totally skew-symmetric torsion exists.
pub const ROTATED_HERMITIAN: &str = include_str!("../fixtures/rotated_hermitian.json");

pub fn rotated_hermitian() -> GeometryStructure {
    parse_structure(ROTATED_HERMITIAN).expect("fixture parses")
}
