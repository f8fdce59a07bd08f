//! The (1+1)-dimensional Laplacian pinning model with Gaussian charges.
//!
//! Sites are `0..=N` with `phi(-1) = phi(0) = phi(N-1) = phi(N) = 0`; the
//! free coordinates are the interior sites `1..N-1`. With `b_i = e^{beta omega_i}`
//! the quadratic form is the symmetric pentadiagonal matrix
//!
//! ```text
//! L_ii = b_{i-1} + 4 b_i + b_{i+1},  L_{i,i+1} = -2 b_i - 2 b_{i+1},  L_{i,i+2} = b_{i+1}
//! ```
//!
//! and pinning a site deletes its row and column. Partition functions are
//! sums over the `2^{N-1}` pinned subsets, one banded determinant each.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::disorder::{gauss_hermite_checked, mgf, sample, DisorderLaw};
use crate::error::{domain, usage, Error, Result};
use crate::numerics::{
    bareiss_determinant, solve_rate, Bracketed, GeneratingSeries, LogWeight, PowerLawTail, TabulatedSeries,
};
use crate::stats::{replicate, Estimate};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Largest `N` for exact enumeration.
pub const MAX_EXACT_N: usize = 22;

/// Largest `N` for symbolic monomial expansion.
pub const MAX_MONOMIAL_N: usize = 10;

/// Power of `2 pi` attached to a configuration with `l` pinned sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Normalization {
    /// `(2 pi)^{-l/2}`.
    #[default]
    PerContact,
    /// `(2 pi)^{-(l+1)/2}`.
    WithBoundary,
}

impl Normalization {
    fn log_factor(self, l: usize) -> f64 {
        let k = match self {
            Normalization::PerContact => l as f64,
            Normalization::WithBoundary => l as f64 + 1.0,
        };
        -0.5 * k * TWO_PI.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacianParams {
    pub beta: f64,
    pub eps: f64,
    pub n: usize,
    pub normalization: Normalization,
}

impl LaplacianParams {
    pub fn new(beta: f64, eps: f64, n: usize) -> Self {
        LaplacianParams { beta, eps, n, normalization: Normalization::PerContact }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(domain(format!("beta must be finite and nonnegative, got {}", self.beta)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(domain(format!("eps must be finite and nonnegative, got {}", self.eps)));
        }
        if self.n < 2 {
            return Err(usage(format!("N must be at least 2, got {}", self.n)));
        }
        Ok(())
    }
}

fn check_b(b: &[f64]) -> Result<usize> {
    if b.len() < 3 {
        return Err(usage("need b_0..b_N with N >= 2"));
    }
    if b.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(domain("all b_i must be positive and finite"));
    }
    Ok(b.len() - 1)
}

/// Matrix entry between interior sites `i` and `j`.
#[inline]
fn entry(b: &[f64], i: usize, j: usize) -> f64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    match hi - lo {
        0 => b[lo - 1] + 4.0 * b[lo] + b[lo + 1],
        1 => -2.0 * b[lo] - 2.0 * b[lo + 1],
        2 => b[lo + 1],
        _ => 0.0,
    }
}

/// Dense `(N-1) x (N-1)` matrix with the listed interior sites deleted.
pub fn laplacian_matrix(b: &[f64], pinned: &[usize]) -> Result<Vec<Vec<f64>>> {
    let n = check_b(b)?;
    let kept = kept_sites(n, pinned)?;
    Ok(kept.iter().map(|&i| kept.iter().map(|&j| entry(b, i, j)).collect()).collect())
}

fn kept_sites(n: usize, pinned: &[usize]) -> Result<Vec<usize>> {
    if let Some(p) = pinned.iter().find(|&&p| p == 0 || p >= n) {
        return Err(usage(format!("pinned site {p} outside 1..{}", n - 1)));
    }
    Ok((1..n).filter(|i| !pinned.contains(i)).collect())
}

/// Closed form `prod b_i * sum_k sum_i k^2 / (b_i b_{i+k})`.
pub fn det_laplacian_full(b: &[f64]) -> Result<f64> {
    Ok(b.iter().product::<f64>() * lemma_bracket(b)?)
}

/// `sum_{k=1}^N sum_{i=0}^{N-k} k^2 / (b_i b_{i+k})`.
pub fn lemma_bracket(b: &[f64]) -> Result<f64> {
    let n = check_b(b)?;
    let inv: Vec<f64> = b.iter().map(|v| 1.0 / v).collect();
    let mut s = 0.0;
    for k in 1..=n {
        let k2 = (k * k) as f64;
        for i in 0..=n - k {
            s += k2 * inv[i] * inv[i + k];
        }
    }
    Ok(s)
}

/// `T_N = sum_{i<j} 1/(b_i b_j)`.
pub fn pair_sum(b: &[f64]) -> Result<f64> {
    check_b(b)?;
    let inv: Vec<f64> = b.iter().map(|v| 1.0 / v).collect();
    let total: f64 = inv.iter().sum();
    let squares: f64 = inv.iter().map(|v| v * v).sum();
    Ok(0.5 * (total * total - squares))
}

/// `ln det` of the band-2 matrix on `kept` sites; `None` if a pivot is not
/// positive.
fn penta_log_det(b: &[f64], kept: &[usize]) -> Option<f64> {
    let m = kept.len();
    let mut d = vec![0.0; m];
    let mut l1 = vec![0.0; m];
    let mut log_det = 0.0;
    for a in 0..m {
        let ka = kept[a];
        let mut l2a = 0.0;
        if a >= 2 {
            l2a = entry(b, ka, kept[a - 2]) / d[a - 2];
        }
        if a >= 1 {
            let mut v = entry(b, ka, kept[a - 1]);
            if a >= 2 {
                v -= l2a * l1[a - 1] * d[a - 2];
            }
            l1[a] = v / d[a - 1];
        }
        let mut da = entry(b, ka, ka);
        if a >= 1 {
            da -= l1[a] * l1[a] * d[a - 1];
        }
        if a >= 2 {
            da -= l2a * l2a * d[a - 2];
        }
        if !(da > 0.0) {
            return None;
        }
        d[a] = da;
        log_det += da.ln();
    }
    Some(log_det)
}

/// Determinant with pinned rows and columns deleted, by band LDL.
pub fn det_laplacian_pinned(b: &[f64], pinned: &[usize]) -> Result<f64> {
    Ok(log_det_laplacian_pinned(b, pinned)?.value())
}

pub fn log_det_laplacian_pinned(b: &[f64], pinned: &[usize]) -> Result<LogWeight> {
    let n = check_b(b)?;
    let kept = kept_sites(n, pinned)?;
    penta_log_det(b, &kept)
        .map(LogWeight::from_log)
        .ok_or_else(|| Error::Inconsistent("pinned Laplacian matrix is not positive definite".into()))
}

/// Integer matrix at `beta = 0` (all `b_i = 1`).
pub fn laplacian_integer_matrix(n: usize) -> Vec<Vec<i64>> {
    let ones = vec![1.0; n + 1];
    (1..n).map(|i| (1..n).map(|j| entry(&ones, i, j) as i64).collect()).collect()
}

/// Exact `beta = 0` determinant by fraction-free elimination.
pub fn det_laplacian_beta0_exact(n: usize) -> Result<i128> {
    if n < 2 {
        return Err(usage("N must be at least 2"));
    }
    bareiss_determinant(&laplacian_integer_matrix(n))
}

/// `N (N+1)^2 (N+2) / 12`.
pub fn det_beta0_formula(n: usize) -> i128 {
    let n = n as i128;
    n * (n + 1) * (n + 1) * (n + 2) / 12
}

/// `det(A) det(C - E* A^{-1} E)` against `det(A) det(C') + det(A') b_m det(C_{-1})`
/// where `m` is the largest pinned site, `m - 1` is free, `A` covers the free
/// sites below `m`, `C` those above, and primes set `b_m = 0`.
pub fn schur_identity_terms(b: &[f64], pinned: &[usize]) -> Result<(f64, f64)> {
    let n = check_b(b)?;
    let m = *pinned.iter().max().ok_or_else(|| usage("need a pinned site"))?;
    if m < 2 || m + 2 > n || pinned.contains(&(m - 1)) {
        return Err(usage("need 2 <= m <= N-2 with site m-1 free"));
    }
    let kept = kept_sites(n, pinned)?;
    let below: Vec<usize> = kept.iter().copied().filter(|&i| i < m).collect();
    let above: Vec<usize> = kept.iter().copied().filter(|&i| i > m).collect();
    let mut b0 = b.to_vec();
    b0[m] = 0.0;
    let det = |bb: &[f64], sites: &[usize]| -> Result<f64> {
        let rows: Vec<Vec<f64>> = sites.iter().map(|&i| sites.iter().map(|&j| entry(bb, i, j)).collect()).collect();
        crate::numerics::dense_determinant(&rows)
    };
    let lhs = det(b, &kept)?;
    let rhs = det(b, &below)? * det(&b0, &above)? + det(&b0, &below)? * b[m] * det(b, &above[1..])?;
    Ok((lhs, rhs))
}

/// Polynomial in `x_0..x_N` with integer coefficients, exponents stored per
/// variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialPolynomial {
    pub n: usize,
    pub terms: BTreeMap<Vec<u8>, i64>,
}

/// Structural facts about a `MonomialPolynomial`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonomialStructure {
    pub uniform_degree: Option<usize>,
    pub zero_one_exponents: bool,
    pub positive_coefficients: bool,
}

impl MonomialPolynomial {
    pub fn structure(&self) -> MonomialStructure {
        let mut degrees = self.terms.keys().map(|p| p.iter().map(|&e| e as usize).sum::<usize>());
        let first = degrees.next();
        let uniform_degree = match first {
            Some(d0) if degrees.all(|d| d == d0) => Some(d0),
            None => Some(0),
            _ => None,
        };
        MonomialStructure {
            uniform_degree,
            zero_one_exponents: self.terms.keys().all(|p| p.iter().all(|&e| e <= 1)),
            positive_coefficients: self.terms.values().all(|&c| c > 0),
        }
    }

    pub fn coefficient_sum(&self) -> i64 {
        self.terms.values().sum()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(p, &c)| c as f64 * p.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>())
            .sum()
    }
}

type Poly = HashMap<u64, i64>;

const BITS: u32 = 4;

fn var(i: usize) -> u64 {
    1u64 << (BITS as usize * i)
}

fn symbolic_entry(i: usize, j: usize) -> Vec<(u64, i64)> {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    match hi - lo {
        0 => vec![(var(lo - 1), 1), (var(lo), 4), (var(lo + 1), 1)],
        1 => vec![(var(lo), -2), (var(lo + 1), -2)],
        2 => vec![(var(lo + 1), 1)],
        _ => vec![],
    }
}

/// Determinant of the pinned matrix as a polynomial in `x_i = b_i`, by
/// expansion over permutations with a column-subset memo.
pub fn monomial_determinant(n: usize, pinned: &[usize]) -> Result<MonomialPolynomial> {
    if n > MAX_MONOMIAL_N {
        return Err(Error::TooLarge(format!("symbolic expansion limited to N <= {MAX_MONOMIAL_N}")));
    }
    if n < 2 {
        return Err(usage("N must be at least 2"));
    }
    let kept = kept_sites(n, pinned)?;
    let dim = kept.len();
    let mut layer: HashMap<u32, Poly> = HashMap::new();
    layer.insert(0, HashMap::from([(0u64, 1i64)]));
    for r in 0..dim {
        let mut next: HashMap<u32, Poly> = HashMap::new();
        for (mask, poly) in &layer {
            for c in 0..dim {
                if mask >> c & 1 == 1 {
                    continue;
                }
                let e = symbolic_entry(kept[r], kept[c]);
                if e.is_empty() {
                    continue;
                }
                let inversions = (mask >> (c + 1)).count_ones();
                let sign = if inversions % 2 == 0 { 1 } else { -1 };
                let target = next.entry(mask | 1 << c).or_default();
                for (&mono, &coef) in poly {
                    for &(em, ec) in &e {
                        *target.entry(mono + em).or_insert(0) += sign * coef * ec;
                    }
                }
            }
        }
        layer = next;
    }
    let full = if dim == 0 { 0 } else { (1u32 << dim) - 1 };
    let poly = layer.remove(&full).unwrap_or_default();
    let terms = poly
        .into_iter()
        .filter(|&(_, c)| c != 0)
        .map(|(mono, c)| {
            let p: Vec<u8> = (0..=n).map(|i| ((mono >> (BITS as usize * i)) & 0xf) as u8).collect();
            (p, c)
        })
        .collect();
    Ok(MonomialPolynomial { n, terms })
}

/// `c_l = sum_{|P| = l} (prod b / det L_P)^{1/2}` for `l = 0..N-1`.
pub fn partition_coefficients(b: &[f64]) -> Result<Vec<f64>> {
    let n = check_b(b)?;
    if n > MAX_EXACT_N {
        return Err(Error::TooLarge(format!("exact enumeration limited to N <= {MAX_EXACT_N}")));
    }
    let sites = n - 1;
    let log_prod: f64 = b.iter().map(|v| v.ln()).sum();
    let mut coeffs = vec![0.0; sites + 1];
    let mut kept = Vec::with_capacity(sites);
    for mask in 0u32..1 << sites {
        kept.clear();
        kept.extend((1..n).filter(|i| mask >> (i - 1) & 1 == 0));
        let log_det = penta_log_det(b, &kept)
            .ok_or_else(|| Error::Inconsistent(format!("pinned matrix not positive definite (mask {mask:#b})")))?;
        coeffs[mask.count_ones() as usize] += (0.5 * (log_prod - log_det)).exp();
    }
    Ok(coeffs)
}

fn eval_partition(coeffs: &[f64], eps: f64, norm: Normalization) -> LogWeight {
    let mut total = 0.0;
    for (l, c) in coeffs.iter().enumerate() {
        if *c == 0.0 || (l > 0 && eps == 0.0) {
            continue;
        }
        let eps_l = if l == 0 { 1.0 } else { eps.powi(l as i32) };
        total += eps_l * norm.log_factor(l).exp() * c;
    }
    LogWeight::from_value(total)
}

/// Adjusted partition function `prod e^{beta omega_i / 2} Z` by enumeration
/// of all pinned subsets; `omega` holds `omega_0..omega_N`.
pub fn laplacian_partition_exact(omega: &[f64], params: &LaplacianParams) -> Result<LogWeight> {
    params.validate()?;
    if omega.len() != params.n + 1 {
        return Err(usage(format!("need {} charges, got {}", params.n + 1, omega.len())));
    }
    let b: Vec<f64> = omega.iter().map(|w| (params.beta * w).exp()).collect();
    Ok(eval_partition(&partition_coefficients(&b)?, params.eps, params.normalization))
}

/// Homogeneous partition function (`beta = 0`).
pub fn homogeneous_partition(n: usize, eps: f64, norm: Normalization) -> Result<LogWeight> {
    let coeffs = partition_coefficients(&vec![1.0; n + 1])?;
    Ok(eval_partition(&coeffs, eps, norm))
}

/// Solves the no-double-return equation for `Zc_{0,n}` given `Z_{0,1..}`
/// (`z[0] = Z_{0,1}`), using `Z_{chi,n} = Z_{0,n-chi}`.
pub fn no_double_return_deconvolve(z: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(domain("eps must be positive"));
    }
    if z.len() < 2 {
        return Err(usage("need Z_{0,1} and Z_{0,2}"));
    }
    let mut zc = vec![z[0], 0.0];
    for n in 3..=z.len() {
        let zz = |m: usize| z[m - 1];
        let mut v = zz(n) - eps * zc[0] * zz(n - 1) - eps * zc[n - 2] * zz(1);
        for chi in 3..=n.saturating_sub(2) {
            v -= eps * eps * zc[chi - 1] * zz(n - chi);
        }
        let scale = zz(n);
        if v < -1e-10 * scale {
            return Err(Error::Inconsistent(format!("negative no-double-return weight at n = {n}: {v:e}")));
        }
        zc.push(v.max(0.0));
    }
    Ok(zc)
}

/// Reapplies the renewal equation to a `Zc` sequence.
pub fn no_double_return_convolve(zc: &[f64], z1: f64, eps: f64) -> Vec<f64> {
    let mut z = vec![z1, 1.0 / TWO_PI];
    for n in 3..=zc.len() {
        let mut v = zc[n - 1] + eps * zc[0] * z[n - 2] + eps * zc[n - 2] * z[0];
        for chi in 3..=n.saturating_sub(2) {
            v += eps * eps * zc[chi - 1] * z[n - chi - 1];
        }
        z.push(v);
    }
    z
}

/// Homogeneous `Z_{0,n}`, `n = 1..=n_max`, as polynomials in `eps`.
///
/// `Z_{0,1} = (2 pi)^{-1/2}`; for `n >= 2` the segment has boundary pairs
/// `(-1, 0)` and `(n-2, n-1)`, i.e. `Z_{0,n} = (2 pi)^{-1} Zadj_{N = n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousTable {
    /// `poly[n-1][l]` is the coefficient of `eps^l` in `Z_{0,n}`.
    pub poly: Vec<Vec<f64>>,
}

impl HomogeneousTable {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 3 || n_max > MAX_EXACT_N + 1 {
            return Err(usage(format!("n_max must lie in 3..={}", MAX_EXACT_N + 1)));
        }
        let mut poly = vec![vec![TWO_PI.powf(-0.5)], vec![1.0 / TWO_PI]];
        for n in 3..=n_max {
            let c = partition_coefficients(&vec![1.0; n])?;
            poly.push(
                c.iter()
                    .enumerate()
                    .map(|(l, v)| v * (Normalization::PerContact.log_factor(l)).exp() / TWO_PI)
                    .collect(),
            );
        }
        Ok(HomogeneousTable { poly })
    }

    pub fn n_max(&self) -> usize {
        self.poly.len()
    }

    pub fn z(&self, eps: f64) -> Vec<f64> {
        self.poly.iter().map(|p| p.iter().rev().fold(0.0, |acc, c| acc * eps + c)).collect()
    }

    pub fn z_check(&self, eps: f64) -> Result<Vec<f64>> {
        no_double_return_deconvolve(&self.z(eps), eps)
    }
}

/// `Zc_{0,n}` straight from configurations: no two consecutive pinned
/// sites, and neither site 1 nor site `n - 2` pinned.
pub fn no_double_return_oracle(n: usize, eps: f64) -> Result<f64> {
    if n < 3 || n > MAX_EXACT_N + 1 {
        return Err(usage("oracle covers 3 <= n <= 23"));
    }
    let big_n = n - 1;
    let b = vec![1.0; big_n + 1];
    let sites = big_n - 1;
    let mut total = 0.0;
    for mask in 0u32..1 << sites {
        if mask & (mask >> 1) != 0 || mask & 1 != 0 || mask >> (sites - 1) & 1 != 0 {
            continue;
        }
        let kept: Vec<usize> = (1..big_n).filter(|i| mask >> (i - 1) & 1 == 0).collect();
        let l = mask.count_ones() as usize;
        let log_det = penta_log_det(&b, &kept).ok_or_else(|| Error::Inconsistent("not positive definite".into()))?;
        total += eps.powi(l as i32) * (Normalization::PerContact.log_factor(l) - 0.5 * log_det).exp();
    }
    Ok(total / TWO_PI)
}

/// Window of the largest indices used to fit `Zc_n ~ C / (eps^2 n^2)`.
pub const TAIL_FIT_WINDOW: usize = 10;

/// Generating series `eps Zc_1 x + sum_{n>=2} eps^2 Zc_n x^n` with a fitted
/// `C / n^2` tail.
#[derive(Debug, Clone)]
pub struct LaplacianSeries {
    pub eps: f64,
    pub coeffs: Vec<f64>,
    /// Fitted amplitude `C` of `eps^2 Zc_n ~ C / n^2`.
    pub tail_amplitude: f64,
    /// Relative spread of `eps^2 Zc_n n^2` over the fit window.
    pub tail_spread: f64,
    series: TabulatedSeries,
}

impl LaplacianSeries {
    pub fn new(table: &HomogeneousTable, eps: f64) -> Result<Self> {
        let zc = table.z_check(eps)?;
        let n_max = zc.len();
        let mut coeffs = vec![eps * zc[0]];
        coeffs.extend(zc[1..].iter().map(|v| eps * eps * v));
        let lo = n_max.saturating_sub(TAIL_FIT_WINDOW - 1).max(3);
        let fit: Vec<f64> = (lo..=n_max).map(|n| coeffs[n - 1] * (n * n) as f64).collect();
        let amp = fit.iter().sum::<f64>() / fit.len() as f64;
        let spread = fit.iter().map(|v| (v / amp - 1.0).abs()).fold(0.0, f64::max);
        let tail = PowerLawTail::new(amp, 2.0, 0.0, 0.0).with_spread(spread);
        let series = TabulatedSeries::new(coeffs.clone()).with_power_tail(tail);
        Ok(LaplacianSeries { eps, coeffs, tail_amplitude: amp, tail_spread: spread, series })
    }
}

impl GeneratingSeries for LaplacianSeries {
    fn bounds(&self, t: f64) -> (f64, f64) {
        self.series.bounds(t)
    }

    fn central(&self, t: f64) -> f64 {
        self.series.central(t)
    }
}

/// Free energy `-ln x` of the homogeneous model from the generating
/// equation; zero when there is no root.
pub fn laplacian_nonrandom_free_energy(eps: f64, n_max: usize) -> Result<Bracketed> {
    let table = HomogeneousTable::new(n_max)?;
    free_energy_from_table(&table, eps)
}

pub fn free_energy_from_table(table: &HomogeneousTable, eps: f64) -> Result<Bracketed> {
    if !(eps > 0.0) {
        return Err(domain("eps must be positive"));
    }
    let series = LaplacianSeries::new(table, eps)?;
    Ok(match solve_rate(&series, 1e-14) {
        Ok(root) => Bracketed::new(root.rate, root.rate_lower, root.rate_upper),
        Err(_) => Bracketed::exact(0.0),
    })
}

/// `eps_c` where the series at `x = 1` equals one; the bracket comes from
/// the tail-fit spread.
pub fn laplacian_critical_point(table: &HomogeneousTable) -> Result<Bracketed> {
    let at_one = |eps: f64, which: usize| -> Result<f64> {
        let s = LaplacianSeries::new(table, eps)?;
        let (lo, hi) = s.bounds(0.0);
        Ok([lo, s.central(0.0), hi][which])
    };
    let solve = |which: usize| -> Result<f64> {
        let (mut lo, mut hi) = (1e-3, 1.0);
        while at_one(hi, which)? < 1.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Inconsistent("no critical point below 1e6".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at_one(mid, which)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    // larger series values mean a smaller critical point
    Ok(Bracketed::new(solve(1)?, solve(2)?, solve(0)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderProbe {
    pub eps_c: Bracketed,
    pub deltas: Vec<f64>,
    pub free_energy: Vec<Bracketed>,
    /// `g(delta) = f(eps_c e^delta) (-ln delta) / delta`.
    pub g: Vec<f64>,
    /// `max g / min g - 1`.
    pub variation: f64,
}

pub fn second_order_probe(deltas: &[f64], n_max: usize) -> Result<SecondOrderProbe> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(usage("deltas must lie in (0, 1)"));
    }
    let table = HomogeneousTable::new(n_max)?;
    let eps_c = laplacian_critical_point(&table)?;
    let mut free_energy = Vec::new();
    let mut g = Vec::new();
    for &delta in deltas {
        let f = free_energy_from_table(&table, eps_c.value * delta.exp())?;
        g.push(f.value * (-delta.ln()) / delta);
        free_energy.push(f);
    }
    let max = g.iter().cloned().fold(f64::MIN, f64::max);
    let min = g.iter().cloned().fold(f64::MAX, f64::min);
    Ok(SecondOrderProbe { eps_c, deltas: deltas.to_vec(), free_energy, g, variation: max / min - 1.0 })
}

/// `V_beta(x)` with `e^{-V} = E[e^{beta omega / 2} e^{-e^{beta omega} x^2 / 2}] / sqrt(2 pi)`.
pub fn effective_potential(beta: f64, x: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(domain("beta must be nonnegative"));
    }
    let m = gauss_hermite_checked(|w| (0.5 * beta * w - 0.5 * (beta * w).exp() * x * x).exp())?;
    Ok(-(m.value / TWO_PI.sqrt()).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub eps: f64,
    pub lower: f64,
    pub mean: Estimate,
    pub upper: f64,
}

impl Sandwich {
    /// `lower - k SE <= mean <= upper + k SE`, up to rounding.
    pub fn holds(&self, k: f64) -> bool {
        let slack = k * self.mean.std_error + crate::stats::ROUNDING * self.upper;
        self.lower - slack <= self.mean.mean && self.mean.mean <= self.upper + slack
    }
}

/// `M(t) = E e^{t omega}` for standard Gaussian charges.
pub fn gaussian_mgf(t: f64) -> f64 {
    mgf(DisorderLaw::StandardNormal, t)
}

/// Homogeneous bounds and a Monte Carlo mean of the adjusted partition
/// function for every `eps` in the list, all from the same replicas.
pub fn annealed_sandwich(beta: f64, eps: &[f64], n: usize, samples: usize, seed: u64) -> Result<Vec<Sandwich>> {
    LaplacianParams::new(beta, 0.0, n).validate()?;
    if n > 18 {
        return Err(Error::TooLarge("sandwich uses exact enumeration, N <= 18".into()));
    }
    if samples < 2 {
        return Err(usage("need at least two samples"));
    }
    if eps.iter().any(|e| !(*e >= 0.0)) {
        return Err(domain("eps must be nonnegative"));
    }
    let hom = partition_coefficients(&vec![1.0; n + 1])?;
    let per_sample = replicate(samples, |i| -> Result<Vec<f64>> {
        let omega = sample(DisorderLaw::StandardNormal, n + 1, seed, i);
        let b: Vec<f64> = omega.values.iter().map(|w| (beta * w).exp()).collect();
        partition_coefficients(&b)
    });
    let per_sample: Vec<Vec<f64>> = per_sample.into_iter().collect::<Result<_>>()?;
    let norm = Normalization::PerContact;
    let m_half = gaussian_mgf(beta / 2.0);
    let m_neg = gaussian_mgf(-beta);
    Ok(eps
        .iter()
        .map(|&e| {
            let values: Vec<f64> = per_sample.iter().map(|c| eval_partition(c, e, norm).value()).collect();
            Sandwich {
                eps: e,
                lower: eval_partition(&hom, e / m_neg.sqrt(), norm).value() / m_neg,
                mean: Estimate::from_values(&values),
                upper: eval_partition(&hom, e * m_half, norm).value() * m_half * m_half,
            }
        })
        .collect())
}

/// Per-replica `(1/N) ln Zadj` and their mean.
pub fn laplacian_quenched_fe_mc(params: &LaplacianParams, samples: usize, seed: u64) -> Result<Estimate> {
    params.validate()?;
    if samples < 2 {
        return Err(usage("need at least two samples"));
    }
    let values = replicate(samples, |i| {
        let omega = sample(DisorderLaw::StandardNormal, params.n + 1, seed, i);
        laplacian_partition_exact(&omega.values, params).map(|z| z.ln() / params.n as f64)
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    Ok(Estimate::from_values(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dense_determinant;

    #[test]
    fn determinant_examples() {
        assert!((det_laplacian_full(&[1.0; 4]).unwrap() - 20.0).abs() < 1e-12);
        let b = [0.7, 1.9, 2.3];
        assert!((det_laplacian_full(&b).unwrap() - (0.7 + 4.0 * 1.9 + 2.3)).abs() < 1e-12);
        assert!((det_laplacian_pinned(&[1.0; 7], &[4]).unwrap() - 280.0).abs() < 1e-9);
        let rows = laplacian_matrix(&[1.0; 7], &[4]).unwrap();
        assert!((dense_determinant(&rows).unwrap() - 280.0).abs() < 1e-9);
        assert!(det_laplacian_full(&[1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn beta0_exact_formula() {
        for n in 2..=40 {
            assert_eq!(det_laplacian_beta0_exact(n).unwrap(), det_beta0_formula(n));
        }
    }

    #[test]
    fn double_return_factorizes() {
        let b = [1.3, 0.4, 2.2, 0.9, 1.7, 0.6, 1.1, 2.5, 0.8];
        let whole = det_laplacian_pinned(&b, &[3, 4]).unwrap();
        let left = dense_determinant(&laplacian_matrix(&b, &[3, 4, 5, 6, 7]).unwrap()).unwrap();
        let right = dense_determinant(&laplacian_matrix(&b, &[1, 2, 3, 4]).unwrap()).unwrap();
        assert!((whole / (left * right) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schur_split() {
        let b = [1.3, 0.4, 2.2, 0.9, 1.7, 0.6, 1.1, 2.5, 0.8];
        for pinned in [vec![4], vec![2, 5], vec![1, 6]] {
            let (l, r) = schur_identity_terms(&b, &pinned).unwrap();
            assert!((l / r - 1.0).abs() < 1e-9, "{pinned:?}: {l} vs {r}");
        }
    }

    #[test]
    fn monomial_small_case() {
        let p = monomial_determinant(2, &[]).unwrap();
        assert_eq!(p.terms.len(), 3);
        assert_eq!(p.terms[&vec![1, 0, 0]], 1);
        assert_eq!(p.terms[&vec![0, 1, 0]], 4);
        assert_eq!(p.terms[&vec![0, 0, 1]], 1);
        let q = monomial_determinant(6, &[4]).unwrap();
        let s = q.structure();
        assert_eq!(s.uniform_degree, Some(4));
        assert!(s.zero_one_exponents && s.positive_coefficients);
        assert_eq!(q.coefficient_sum(), 280);
        assert!(monomial_determinant(11, &[]).is_err());
    }

    #[test]
    fn partition_examples() {
        let z0 = laplacian_partition_exact(&[0.0; 4], &LaplacianParams::new(0.0, 0.0, 3)).unwrap();
        assert!((z0.value() - 20f64.powf(-0.5)).abs() < 1e-14);
        let mut p = LaplacianParams::new(0.0, 0.0, 3);
        p.normalization = Normalization::WithBoundary;
        let z1 = laplacian_partition_exact(&[0.0; 4], &p).unwrap();
        assert!((z1.value() - TWO_PI.powf(-0.5) * 20f64.powf(-0.5)).abs() < 1e-14);
        // N = 3 by hand: {} -> 20, {1} -> L_22 = 6, {2} -> L_11 = 6, {1,2} -> 1
        let eps = 0.8;
        let hand = 20f64.powf(-0.5) + 2.0 * eps * TWO_PI.powf(-0.5) / 6f64.sqrt() + eps * eps / TWO_PI;
        let z = laplacian_partition_exact(&[0.0; 4], &LaplacianParams::new(0.0, eps, 3)).unwrap();
        assert!((z.value() / hand - 1.0).abs() < 1e-13);
        assert!(laplacian_partition_exact(&[0.0; 24], &LaplacianParams::new(0.0, 1.0, 23)).is_err());
    }

    #[test]
    fn deconvolution_base_cases_and_oracle() {
        let table = HomogeneousTable::new(14).unwrap();
        for eps in [0.5, 1.3, 4.0] {
            let z = table.z(eps);
            let zc = no_double_return_deconvolve(&z, eps).unwrap();
            assert!((zc[0] - TWO_PI.powf(-0.5)).abs() < 1e-15);
            assert_eq!(zc[1], 0.0);
            for n in 3..=14 {
                let o = no_double_return_oracle(n, eps).unwrap();
                assert!((zc[n - 1] / o - 1.0).abs() < 1e-10, "eps {eps} n {n}: {} vs {o}", zc[n - 1]);
            }
            let back = no_double_return_convolve(&zc, zc[0], eps);
            for (a, b) in back.iter().zip(&z) {
                assert!((a / b - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn effective_potential_examples() {
        let v = effective_potential(0.0, 0.7).unwrap();
        assert!((v - (0.245 + 0.5 * TWO_PI.ln())).abs() < 1e-12);
        let v0 = effective_potential(0.4, 0.0).unwrap();
        assert!((v0 - (0.5 * TWO_PI.ln() - (0.02f64).exp().ln())).abs() < 1e-12);
    }

    #[test]
    fn sandwich_degenerate_at_beta0() {
        let s = annealed_sandwich(0.0, &[1.0], 8, 4, 3).unwrap();
        assert!((s[0].lower / s[0].upper - 1.0).abs() < 1e-13);
        assert!((s[0].mean.mean / s[0].upper - 1.0).abs() < 1e-13);
        assert_eq!(s[0].mean.std_error, 0.0);
    }
}
