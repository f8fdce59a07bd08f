//! Randomized and exhaustive checks of the determinant identities.
//!
//! Closed forms are passed in as closures so a deliberately broken formula
//! can be run through the same harness and must be caught.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::replica_rng;
use crate::error::{usage, Result};
use crate::gradient::{det_gradient, gradient_matrix};
use crate::laplacian::{det_laplacian_full, det_laplacian_pinned, laplacian_matrix, monomial_determinant};
use crate::numerics::dense_determinant;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub max_rel_err: f64,
    /// Human-readable description of the first failing case.
    pub counterexample: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn positive_sequence(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    // spread over two decades so both large and small entries appear
    (0..len).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Tridiagonal identity on `cases` random sequences with matrix dimension
/// `1..=max_dim`.
pub fn gradient_identity_suite(
    max_dim: usize,
    cases: usize,
    seed: u64,
    tol: f64,
    closed_form: impl Fn(&[f64]) -> Result<f64>,
) -> Result<SuiteReport> {
    if max_dim == 0 {
        return Err(usage("max_dim must be positive"));
    }
    let mut report = SuiteReport { name: "gradient determinant".into(), cases, max_rel_err: 0.0, counterexample: None };
    for case in 0..cases {
        let mut rng = replica_rng(seed, case as u64);
        let dim = 1 + case % max_dim;
        let a = positive_sequence(&mut rng, dim + 1);
        let oracle = dense_determinant(&gradient_matrix(&a))?;
        let e = rel_err(closed_form(&a)?, oracle);
        report.max_rel_err = report.max_rel_err.max(e);
        if !(e <= tol) && report.counterexample.is_none() {
            report.counterexample = Some(format!("case {case}: a = {a:?}, relative error {e:e}"));
        }
    }
    Ok(report)
}

/// Pentadiagonal identity on `cases` random `b` with matrix dimension
/// `1..=max_dim`.
pub fn laplacian_identity_suite(
    max_dim: usize,
    cases: usize,
    seed: u64,
    tol: f64,
    closed_form: impl Fn(&[f64]) -> Result<f64>,
) -> Result<SuiteReport> {
    if max_dim == 0 {
        return Err(usage("max_dim must be positive"));
    }
    let mut report = SuiteReport { name: "laplacian determinant".into(), cases, max_rel_err: 0.0, counterexample: None };
    for case in 0..cases {
        let mut rng = replica_rng(seed ^ 0x5bd1_e995, case as u64);
        let dim = 1 + case % max_dim;
        let b = positive_sequence(&mut rng, dim + 2);
        let oracle = dense_determinant(&laplacian_matrix(&b, &[])?)?;
        let e = rel_err(closed_form(&b)?, oracle);
        report.max_rel_err = report.max_rel_err.max(e);
        if !(e <= tol) && report.counterexample.is_none() {
            report.counterexample = Some(format!("case {case}: b = {b:?}, relative error {e:e}"));
        }
    }
    Ok(report)
}

/// Every pinned subset for `N = 2..=max_n`: uniform degree `N - 1 - r`,
/// 0/1 exponents, positive coefficients, and agreement with the numeric
/// determinant at a random point.
pub fn monomial_structure_suite(max_n: usize, seed: u64, tol: f64) -> Result<SuiteReport> {
    let mut report = SuiteReport { name: "monomial structure".into(), cases: 0, max_rel_err: 0.0, counterexample: None };
    let mut rng = replica_rng(seed, u64::MAX);
    for n in 2..=max_n {
        let sites = n - 1;
        for mask in 0u32..1 << sites {
            let pinned: Vec<usize> = (1..n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            let poly = monomial_determinant(n, &pinned)?;
            let s = poly.structure();
            let x = positive_sequence(&mut rng, n + 1);
            let e = rel_err(poly.evaluate(&x), det_laplacian_pinned(&x, &pinned)?);
            report.cases += 1;
            report.max_rel_err = report.max_rel_err.max(e);
            let expected = n - 1 - pinned.len();
            let problem = if s.uniform_degree != Some(expected) {
                Some(format!("degree {:?}, expected {expected}", s.uniform_degree))
            } else if !s.zero_one_exponents {
                Some("exponent above one".to_string())
            } else if !s.positive_coefficients {
                Some("nonpositive coefficient".to_string())
            } else if !(e <= tol) {
                Some(format!("evaluation off by {e:e}"))
            } else {
                None
            };
            if let (Some(p), None) = (problem, &report.counterexample) {
                report.counterexample = Some(format!("N = {n}, pinned {pinned:?}: {p}"));
            }
        }
    }
    Ok(report)
}

/// All three suites with the library closed forms; monomial checks run up
/// to `min(max_dim + 1, 8)`.
pub fn verify_lemmas(max_dim: usize, cases: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        gradient_identity_suite(max_dim, cases, seed, DEFAULT_TOLERANCE, det_gradient)?,
        laplacian_identity_suite(max_dim, cases, seed, DEFAULT_TOLERANCE, det_laplacian_full)?,
        monomial_structure_suite((max_dim + 1).min(8), seed, 1e-9)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_forms_pass() {
        for r in verify_lemmas(12, 200, 5).unwrap() {
            assert!(r.passed(), "{}: {:?}", r.name, r.counterexample);
        }
    }

    #[test]
    fn corrupted_forms_fail() {
        let broken = |a: &[f64]| det_gradient(a).map(|v| if a.len() > 4 { v * (1.0 + 1e-6) } else { v });
        let r = gradient_identity_suite(12, 50, 1, DEFAULT_TOLERANCE, broken).unwrap();
        assert!(!r.passed());
        assert!(r.counterexample.unwrap().contains("relative error"));
        // drop the k^2 weight
        let plain = |b: &[f64]| -> Result<f64> {
            let n = b.len() - 1;
            let mut s = 0.0;
            for k in 1..=n {
                for i in 0..=n - k {
                    s += 1.0 / (b[i] * b[i + k]);
                }
            }
            Ok(b.iter().product::<f64>() * s)
        };
        assert!(!laplacian_identity_suite(12, 50, 1, DEFAULT_TOLERANCE, plain).unwrap().passed());
    }

    #[test]
    fn trivial_size() {
        for r in verify_lemmas(1, 10, 0).unwrap() {
            assert!(r.passed());
        }
    }
}
