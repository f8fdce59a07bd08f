//! Charge sequences and expectations over the disorder law.
//!
//! Every gradient-model expectation over a window of Rademacher charges is
//! a symmetric function of the window and therefore a function of the count
//! `k` of `+1` charges; those expectations are binomial sums, never `2^n`
//! enumerations.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, usage, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisorderLaw {
    Rademacher,
    StandardNormal,
}

/// A law together with the coupling strength it enters the model with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderLawParams {
    pub law: DisorderLaw,
    pub beta: f64,
}

impl DisorderLawParams {
    pub fn rademacher(beta: f64) -> Self {
        DisorderLawParams { law: DisorderLaw::Rademacher, beta }
    }

    pub fn gaussian(beta: f64) -> Self {
        DisorderLawParams { law: DisorderLaw::StandardNormal, beta }
    }

    /// The gradient model needs `1 + beta * omega > 0` for every charge.
    pub fn validate_gradient(&self) -> Result<()> {
        if self.law != DisorderLaw::Rademacher {
            return Err(domain("the gradient model uses Rademacher charges"));
        }
        check_gradient_beta(self.beta)
    }
}

pub(crate) fn check_gradient_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(domain(format!("beta must lie in [0, 1), got {beta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSequence {
    pub values: Vec<f64>,
    pub law: DisorderLaw,
    pub seed: u64,
    pub index_offset: u64,
}

impl DisorderSequence {
    /// A sequence given explicitly, e.g. a fixed test configuration.
    pub fn from_values(values: Vec<f64>, law: DisorderLaw) -> Self {
        DisorderSequence { values, law, seed: 0, index_offset: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Generator for replica `index` of master seed `seed`.
///
/// ChaCha's 64-bit stream id selects an independent keystream, so replicas
/// never overlap and do not depend on scheduling.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn sample(law: DisorderLaw, length: usize, seed: u64, index: u64) -> DisorderSequence {
    let mut rng = replica_rng(seed, index);
    let values = draw(law, length, &mut rng);
    DisorderSequence { values, law, seed, index_offset: index }
}

pub(crate) fn draw(law: DisorderLaw, length: usize, rng: &mut impl Rng) -> Vec<f64> {
    match law {
        DisorderLaw::Rademacher => (0..length).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        DisorderLaw::StandardNormal => (0..length).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
    }
}

/// `E exp(t omega)`.
pub fn mgf(law: DisorderLaw, t: f64) -> f64 {
    match law {
        DisorderLaw::Rademacher => t.cosh(),
        DisorderLaw::StandardNormal => (0.5 * t * t).exp(),
    }
}

/// `ln C(n, k) - n ln 2` for `k = 0..=n`, built incrementally.
pub fn binomial_log_weights(n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    let mut acc = -(n as f64) * std::f64::consts::LN_2;
    w.push(acc);
    for k in 1..=n {
        acc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        w.push(acc);
    }
    w
}

/// `E f(K)` with `K ~ Binomial(n, 1/2)` the number of `+1` charges among `n`.
pub fn rademacher_window_expectation(f: impl Fn(usize) -> f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(usage("window length must be at least 1"));
    }
    let w = binomial_log_weights(n);
    Ok(w.iter().enumerate().map(|(k, lw)| lw.exp() * f(k)).sum())
}

/// Smooth functions of the window mean `y = (2k - n)/n` whose Taylor
/// coefficients at 0 are all nonnegative and summable on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothWindow {
    /// `(1 - beta y)^-power`.
    InversePower { beta: f64, power: f64 },
    /// `-ln(1 - beta y)`.
    NegLog { beta: f64 },
}

/// An expectation with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMean {
    pub value: f64,
    pub abs_err: f64,
}

impl SmoothWindow {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            SmoothWindow::InversePower { beta, power } => (1.0 - beta * y).powf(-power),
            SmoothWindow::NegLog { beta } => -(-beta * y).ln_1p(),
        }
    }

    fn beta(&self) -> f64 {
        match *self {
            SmoothWindow::InversePower { beta, .. } | SmoothWindow::NegLog { beta } => beta,
        }
    }

    /// Taylor coefficients `c_0, c_1, ...` up to and including `c_m`.
    pub fn taylor(&self, m: usize) -> Vec<f64> {
        let mut c = Vec::with_capacity(m + 1);
        match *self {
            SmoothWindow::InversePower { beta, power } => {
                let mut cj = 1.0;
                c.push(cj);
                for j in 1..=m {
                    cj *= beta * (power + j as f64 - 1.0) / j as f64;
                    c.push(cj);
                }
            }
            SmoothWindow::NegLog { beta } => {
                c.push(0.0);
                let mut bj = 1.0;
                for j in 1..=m {
                    bj *= beta;
                    c.push(bj / j as f64);
                }
            }
        }
        c
    }

    /// Upper bound on `sup_{|y| <= 1} g''''(y) / 24`.
    pub fn fourth_taylor_sup(&self) -> f64 {
        let beta = self.beta();
        match *self {
            SmoothWindow::InversePower { power, .. } => {
                let c4 = self.taylor(4)[4];
                c4 * (1.0 - beta).powf(-power - 4.0)
            }
            SmoothWindow::NegLog { .. } => beta.powi(4) / 4.0 * (1.0 - beta).powi(-4),
        }
    }

    /// `E g(S_n / n)` for a Rademacher sum `S_n`.
    ///
    /// Exact binomial sum for `n <= switch`. Beyond, the even Taylor terms
    /// up to degree 8 are integrated against the exact central moments of
    /// `S_n`, and the remaining terms are bounded using `E S^{2j} <=
    /// (2j-1)!! n^j` (Rademacher sums are dominated by the Gaussian) and
    /// `|y| <= 1`.
    pub fn rademacher_mean(&self, n: usize, switch: usize) -> WindowMean {
        assert!(n >= 1);
        if n <= switch {
            let w = binomial_log_weights(n);
            let nf = n as f64;
            let value = w
                .iter()
                .enumerate()
                .map(|(k, lw)| lw.exp() * self.eval((2.0 * k as f64 - nf) / nf))
                .sum::<f64>();
            return WindowMean { value, abs_err: 1e-15 * n as f64 * value.abs() };
        }
        let nf = n as f64;
        let c = self.taylor(8);
        let m2 = nf;
        let m4 = 3.0 * nf * nf - 2.0 * nf;
        let m6 = 15.0 * nf.powi(3) - 30.0 * nf * nf + 16.0 * nf;
        let m8 = 105.0 * nf.powi(4) - 420.0 * nf.powi(3) + 588.0 * nf * nf - 272.0 * nf;
        let value = c[0]
            + c[2] * m2 / nf.powi(2)
            + c[4] * m4 / nf.powi(4)
            + c[6] * m6 / nf.powi(6)
            + c[8] * m8 / nf.powi(8);
        WindowMean { value, abs_err: self.remainder(n) + 1e-15 * value.abs() }
    }

    fn remainder(&self, n: usize) -> f64 {
        let beta = self.beta();
        let b2 = beta * beta;
        let nf = n as f64;
        // r = (2j-1)!!/n^j and cj = c_{2j}, starting at j = 5
        let mut r = 945.0 / nf.powi(5);
        let mut cj = self.taylor(10)[10];
        let mut sum = 0.0;
        let mut j = 5usize;
        loop {
            sum += cj * r.min(1.0);
            let a = (2 * j) as f64;
            // exact ratio c_{2j+2}/c_{2j}; later ratios never exceed max(q, beta^2)
            let ratio = match *self {
                SmoothWindow::InversePower { power, .. } => {
                    b2 * (power + a) * (power + a + 1.0) / ((a + 1.0) * (a + 2.0))
                }
                SmoothWindow::NegLog { .. } => b2 * a / (a + 2.0),
            };
            let q = ratio.max(b2);
            if q < 1.0 {
                let rest = cj * q / (1.0 - q);
                if rest < 1e-30 || j > 100_000 {
                    return sum + rest;
                }
            }
            cj *= ratio;
            j += 1;
            r *= (2 * j - 1) as f64 / nf;
        }
    }
}

/// Nodes and weights of `order`-point Gauss-Hermite quadrature for the
/// standard normal law (weights sum to one), via the Golub-Welsch
/// eigenproblem of the Jacobi matrix of probabilists' Hermite polynomials.
pub fn gauss_hermite_rule(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order < 2 {
        return Err(usage("Gauss-Hermite order must be at least 2"));
    }
    let mut j = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = (k as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

/// `E f(omega)` for standard normal `omega` at a fixed quadrature order.
pub fn gauss_hermite_expectation(f: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
    let (x, w) = gauss_hermite_rule(order)?;
    // add small contributions first
    let mut terms: Vec<f64> = x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).collect();
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    Ok(terms.iter().sum())
}

/// Order 60, checked against order 120; returns the higher-order value and
/// the difference as an error estimate.
pub fn gauss_hermite_checked(f: impl Fn(f64) -> f64) -> Result<WindowMean> {
    let a = gauss_hermite_expectation(&f, 60)?;
    let b = gauss_hermite_expectation(&f, 120)?;
    Ok(WindowMean { value: b, abs_err: (a - b).abs() })
}
