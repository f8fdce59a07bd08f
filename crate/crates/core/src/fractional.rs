//! Fractional moment bound for the quenched critical point of the gradient
//! model.
//!
//! In the renewal normalization `Z^ren_N = eps Z_N`, splitting every
//! configuration at the first renewal `b >= N - k` and the one before it,
//! `a = N - n < N - k`, gives
//!
//! ```text
//! Z^ren_N = lambda sum_{n>k} sum_{s<=k} Z^ren_{N-n} K(n-s) e^{psi(beta ybar)} Z^ren_{N-s,N}
//! ```
//!
//! with `lambda = e^Delta / R` at `eps = eps_c^a e^Delta`. Raising to a power
//! `gamma < 1`, using subadditivity and independence of disjoint windows,
//! `A_N = E (Z^ren_N)^gamma <= rho max_{j<N} A_j` where
//! `rho = lambda^gamma sum_{s<=k} A_s sum_{m>k-s} K(m)^gamma E_m` and
//! `E_m = E (1 - beta ybar_m)^{-gamma d/2}`. `rho <= 1` keeps `A_N` bounded,
//! which forces the quenched free energy to vanish at `eps_c^a e^Delta`.

use serde::{Deserialize, Serialize};

use crate::annealed::{annealed_critical_point, tilted_bundle, tilted_free_energy, TiltedKernelBundle, SWITCH};
use crate::disorder::{check_gradient_beta, sample, DisorderLaw, SmoothWindow};
use crate::error::{domain, usage, Error, Result};
use crate::numerics::Bracketed;
use crate::stats::replicate;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Default series truncation for `rho`.
pub const DEFAULT_N_TRUNCATION: usize = 1_000_000;

/// Relative increase of the minimal exponent used for `d = 3, 4`.
pub const EXPERIMENTAL_GAMMA_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmParameters {
    pub gamma: f64,
    pub delta: f64,
    pub k: Option<usize>,
    pub fbar: Bracketed,
}

fn gamma_for(d: u32, experimental: bool) -> Result<f64> {
    match d {
        5.. => Ok((2.0 + d as f64 / 2.0) / d as f64),
        3 | 4 if experimental => Ok((1.0 + d as f64 / 2.0) / d as f64 * (1.0 + EXPERIMENTAL_GAMMA_MARGIN)),
        _ => Err(Error::Unsupported(format!(
            "fractional moment parameters are defined for d >= 5 (d = 3, 4 behind the experimental flag), got d = {d}"
        ))),
    }
}

/// `gamma = (2 + d/2)/d`, `Delta = c beta^2`, `k = floor(1 / Fbar(Delta))`.
///
/// `k` is `None` when `Fbar(Delta) = 0`, i.e. at `beta = 0`.
pub fn choose_parameters(beta: f64, c: f64, d: u32) -> Result<FmParameters> {
    let bundle = tilted_bundle(beta, d, crate::annealed::DEFAULT_N_MAX)?;
    choose_parameters_with(&bundle, c, false)
}

pub fn choose_parameters_with(bundle: &TiltedKernelBundle, c: f64, experimental: bool) -> Result<FmParameters> {
    check_gradient_beta(bundle.beta)?;
    if !(c > 0.0 && c <= 1.0) {
        return Err(domain(format!("c must lie in (0, 1], got {c}")));
    }
    let gamma = gamma_for(bundle.d, experimental)?;
    let delta = c * bundle.beta * bundle.beta;
    let fbar = tilted_free_energy(bundle, delta)?;
    let k = if fbar.value > 0.0 { Some((1.0 / fbar.value).floor().max(1.0) as usize) } else { None };
    Ok(FmParameters { gamma, delta, k, fbar })
}

/// `(sum v)^gamma < sum v^gamma` for positive values and `0 < gamma < 1`.
pub fn subadditivity_inequality_check(values: &[f64], gamma: f64) -> Result<bool> {
    if values.len() < 2 {
        return Err(usage("need at least two values"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain("gamma must lie in (0, 1)"));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(domain("values must be positive"));
    }
    let lhs = values.iter().sum::<f64>().powf(gamma);
    let rhs: f64 = values.iter().map(|v| v.powf(gamma)).sum();
    Ok(lhs < rhs)
}

/// `x^{-d/2}` using square roots for odd `d`.
#[inline]
fn inv_pow_half(x: f64, d: u32) -> f64 {
    let whole = x.powi((d / 2) as i32);
    if d % 2 == 1 {
        1.0 / (whole * x.sqrt())
    } else {
        1.0 / whole
    }
}

/// `Z^ren_s` for `s = 0..=len` on one charge sequence (`Z^ren_0 = 1`), in
/// the linear domain; values stay of order `e^{Fbar s}` for `s <= k`.
pub fn renewal_profile(omega: &[f64], beta: f64, eps: f64, d: u32) -> Vec<f64> {
    let n = omega.len();
    let mut s = Vec::with_capacity(n + 1);
    s.push(0.0);
    for w in omega {
        s.push(s.last().unwrap() + 1.0 / (1.0 + beta * w));
    }
    let mut z = Vec::with_capacity(n + 1);
    z.push(1.0);
    for m in 1..=n {
        let mut acc = 0.0;
        for j in 0..m {
            acc += z[j] * inv_pow_half(TWO_PI * (s[m] - s[j]), d);
        }
        z.push(eps * acc);
    }
    z
}

/// How an `A_s` entry was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AMode {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AEntry {
    pub s: usize,
    pub value: f64,
    /// Standard error; zero for exact entries.
    pub se: f64,
    pub mode: AMode,
}

/// `A_s = E (eps Z_s)^gamma` for `s = 0..=max_s`, exact by enumerating
/// all `2^max_s` charge vectors. Refuses `max_s > 20`.
pub fn fractional_moments_exact(max_s: usize, beta: f64, d: u32, eps: f64, gamma: f64) -> Result<Vec<AEntry>> {
    if max_s > 20 {
        return Err(Error::TooLarge(format!("exact fractional moments limited to s <= 20, got {max_s}")));
    }
    let total = 1u64 << max_s;
    let sums = replicate(1usize << max_s.saturating_sub(10), |chunk| {
        let mut acc = vec![0.0; max_s + 1];
        let lo = chunk << 10;
        let hi = (lo + 1024).min(total);
        let mut omega = vec![0.0; max_s];
        for mask in lo..hi {
            for (i, w) in omega.iter_mut().enumerate() {
                *w = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            }
            let z = renewal_profile(&omega, beta, eps, d);
            for (a, v) in acc.iter_mut().zip(&z) {
                *a += v.powf(gamma);
            }
        }
        acc
    });
    let mut acc = vec![0.0; max_s + 1];
    for chunk in &sums {
        for (a, v) in acc.iter_mut().zip(chunk) {
            *a += v;
        }
    }
    Ok(acc
        .iter()
        .enumerate()
        .map(|(s, a)| AEntry { s, value: if s == 0 { 1.0 } else { a / total as f64 }, se: 0.0, mode: AMode::Exact })
        .collect())
}

/// Monte Carlo `A_s`, `s = 0..=max_s`: every replica contributes one full
/// profile, replica `i` drawn from stream `(seed, i)`.
pub fn fractional_moments_mc(
    max_s: usize,
    beta: f64,
    d: u32,
    eps: f64,
    gamma: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<AEntry>> {
    if samples < 2 {
        return Err(usage("need at least two samples"));
    }
    let profiles = replicate(samples, |i| {
        let omega = sample(DisorderLaw::Rademacher, max_s, seed, i);
        renewal_profile(&omega.values, beta, eps, d).into_iter().map(|z| z.powf(gamma)).collect::<Vec<f64>>()
    });
    let n = samples as f64;
    Ok((0..=max_s)
        .map(|s| {
            let mean = profiles.iter().map(|p| p[s]).sum::<f64>() / n;
            let var = profiles.iter().map(|p| (p[s] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            AEntry { s, value: mean, se: (var / n).sqrt(), mode: AMode::MonteCarlo }
        })
        .collect())
}

/// Single-entry interface: `A_s` exact (`s <= 20`) or by Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AComputation {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

pub fn fractional_moment_a(s: usize, beta: f64, d: u32, eps: f64, gamma: f64, mode: AComputation) -> Result<AEntry> {
    check_gradient_beta(beta)?;
    if s == 0 {
        return Ok(AEntry { s, value: 1.0, se: 0.0, mode: AMode::Exact });
    }
    let table = match mode {
        AComputation::Exact => fractional_moments_exact(s, beta, d, eps, gamma)?,
        AComputation::MonteCarlo { samples, seed } => fractional_moments_mc(s, beta, d, eps, gamma, samples, seed)?,
    };
    Ok(table[s])
}

/// Inputs of `rho` that do not depend on the `A` table.
#[derive(Debug, Clone)]
pub struct RhoKernel {
    pub d: u32,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub zeta: f64,
    pub r: f64,
    pub n_truncation: usize,
    /// `K(m)^gamma E_m` for `m = 1..=n_truncation` (index `m - 1`).
    pub terms: Vec<f64>,
    /// Suffix sums of `terms`: `suffix[m] = sum_{j >= m+1} terms[j-1]`.
    suffix: Vec<f64>,
}

impl RhoKernel {
    pub fn new(beta: f64, d: u32, gamma: f64, delta: f64, zeta: f64, r: f64, n_truncation: usize) -> Result<Self> {
        let p = gamma * d as f64 / 2.0;
        if p <= 1.0 {
            return Err(domain(format!("gamma d/2 = {p} <= 1: the rho series diverges")));
        }
        let g = SmoothWindow::InversePower { beta, power: p };
        let terms: Vec<f64> = (1..=n_truncation)
            .map(|m| (m as f64).powf(-p) * zeta.powf(-gamma) * g.rademacher_mean(m, SWITCH).value)
            .collect();
        let mut suffix = vec![0.0; n_truncation + 1];
        for m in (0..n_truncation).rev() {
            suffix[m] = suffix[m + 1] + terms[m];
        }
        Ok(RhoKernel { d, beta, gamma, delta, zeta, r, n_truncation, terms, suffix })
    }

    pub fn prefactor(&self) -> f64 {
        (self.delta.exp() / self.r).powf(self.gamma)
    }

    /// `sum_{m=lo}^{hi} K(m)^gamma E_m`.
    fn window(&self, lo: usize, hi: usize) -> f64 {
        if hi < lo {
            return 0.0;
        }
        self.suffix[lo - 1] - self.suffix[hi]
    }

    /// Coefficient multiplying `A_s` (before the prefactor).
    pub fn inner(&self, k: usize, s: usize) -> f64 {
        self.window(k - s + 1, self.n_truncation - s)
    }

    /// Bound on the omitted `m > n_truncation - s` part of `inner(k, s)`:
    /// `E_m <= (1 - beta)^{-gamma d/2}` and an integral bound on the power sum.
    pub fn inner_tail(&self, s: usize) -> f64 {
        let p = self.gamma * self.d as f64 / 2.0;
        let m = (self.n_truncation - s) as f64;
        self.zeta.powf(-self.gamma) * (1.0 - self.beta).powf(-p) * m.powf(1.0 - p) / (p - 1.0)
    }

    /// `(rho, tail)` for an `A` table covering `s = 0..=k`.
    pub fn rho(&self, k: usize, a: &[f64]) -> Result<(f64, f64)> {
        if a.len() < k + 1 {
            return Err(usage(format!("A table has {} entries, need {}", a.len(), k + 1)));
        }
        if k + 1 >= self.n_truncation {
            return Err(usage("truncation must exceed k"));
        }
        let pre = self.prefactor();
        let mut rho = 0.0;
        let mut tail = 0.0;
        for s in (0..=k).rev() {
            rho += a[s] * self.inner(k, s);
            tail += a[s] * self.inner_tail(s);
        }
        Ok((pre * rho, pre * tail))
    }
}

/// `rho` and its tail bound in one call.
#[allow(clippy::too_many_arguments)]
pub fn rho(
    beta: f64,
    d: u32,
    c: f64,
    k: usize,
    gamma: f64,
    a_table: &[f64],
    zeta: f64,
    r: f64,
    n_truncation: usize,
) -> Result<(f64, f64)> {
    let kernel = RhoKernel::new(beta, d, gamma, c * beta * beta, zeta, r, n_truncation)?;
    kernel.rho(k, a_table)
}

/// Both sides of the last-renewal decomposition of `Z^ren_N` for one charge
/// sequence at `eps = eps_c^a e^Delta`: `(direct, decomposed)`.
pub fn renewal_equation_check(omega: &[f64], bundle: &TiltedKernelBundle, delta: f64, k: usize) -> Result<(f64, f64)> {
    let (beta, d) = (bundle.beta, bundle.d);
    let n_total = omega.len();
    if k == 0 || k >= n_total {
        return Err(usage("need 1 <= k < N"));
    }
    let eps = crate::annealed::critical_point_from_bundle(bundle)?.value * delta.exp();
    let direct = *renewal_profile(omega, beta, eps, d).last().unwrap();
    let prefix = renewal_profile(omega, beta, eps, d);
    let lambda = delta.exp() / bundle.r.value;
    let mut total = 0.0;
    for n in k + 1..=n_total {
        let a = n_total - n;
        for s in 0..=k {
            let b = n_total - s;
            let m = b - a;
            let ybar = omega[a..b].iter().sum::<f64>() / m as f64;
            let bridge = lambda * bundle.k(m) * (1.0 - beta * ybar).powf(-(d as f64) / 2.0);
            let suffix = *renewal_profile(&omega[b..], beta, eps, d).last().unwrap();
            total += prefix[a] * bridge * suffix;
        }
    }
    Ok((direct, total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Certified,
    NotCertified,
}

/// Resources for `certify_gap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyBudget {
    pub exact_s_cutoff: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Largest `k` for which the Monte Carlo table is attempted.
    pub max_k: usize,
    pub n_truncation: usize,
    pub experimental: bool,
}

impl Default for CertifyBudget {
    fn default() -> Self {
        CertifyBudget {
            exact_s_cutoff: 14,
            mc_samples: 400,
            seed: 1,
            max_k: 8000,
            n_truncation: DEFAULT_N_TRUNCATION,
            experimental: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub beta: f64,
    pub d: u32,
    pub c: f64,
    pub delta: f64,
    pub gamma: f64,
    pub k: Option<usize>,
    pub eps: f64,
    pub eps_c_annealed: Bracketed,
    pub fbar: Bracketed,
    pub r: Bracketed,
    pub rho_value: Option<f64>,
    pub rho_tail_bound: Option<f64>,
    /// Increase of `rho` when every Monte Carlo entry is raised by 3 SE.
    pub mc_inflation: Option<f64>,
    pub a_table: Vec<AEntry>,
    pub verdict: Verdict,
    pub diagnostic: Option<String>,
    pub assumptions: Vec<String>,
    pub budget: CertifyBudget,
    pub experimental: bool,
    pub version: String,
}

impl GapCertificate {
    /// Recomputes the verdict from the stored numbers.
    pub fn recheck(&self) -> bool {
        match (self.rho_value, self.rho_tail_bound, self.mc_inflation) {
            (Some(r), Some(t), Some(m)) => r + t + m <= 1.0 && self.delta > 0.0,
            _ => false,
        }
    }
}

/// Runs the whole pipeline for one `c`.
pub fn certify_gap(beta: f64, d: u32, c: f64, budget: CertifyBudget) -> Result<GapCertificate> {
    check_gradient_beta(beta)?;
    if d < 5 && !(budget.experimental && d >= 3) {
        return Err(Error::Unsupported(format!("gap certificates need d >= 5, got d = {d}")));
    }
    let bundle = tilted_bundle(beta, d, crate::annealed::DEFAULT_N_MAX)?;
    let params = choose_parameters_with(&bundle, c, budget.experimental)?;
    let eps_c = annealed_critical_point(beta, d)?;
    let eps = eps_c.value * params.delta.exp();
    let mut cert = GapCertificate {
        beta,
        d,
        c,
        delta: params.delta,
        gamma: params.gamma,
        k: params.k,
        eps,
        eps_c_annealed: eps_c,
        fbar: params.fbar,
        r: bundle.r,
        rho_value: None,
        rho_tail_bound: None,
        mc_inflation: None,
        a_table: Vec::new(),
        verdict: Verdict::NotCertified,
        diagnostic: None,
        assumptions: vec![
            "rho <= 1 bounds E Z^gamma uniformly in N, which forces zero quenched free energy".into(),
            "the prefix, bridging segment and suffix use disjoint, hence independent, charge windows".into(),
        ],
        budget,
        experimental: d < 5,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let k = match params.k {
        Some(k) => k,
        None => {
            // Delta = 0: evaluate rho with the smallest window, claim nothing
            1
        }
    };
    if k > budget.max_k {
        cert.diagnostic = Some(format!("k = {k} exceeds the budget max_k = {}", budget.max_k));
        return Ok(cert);
    }
    if k + 1 >= budget.n_truncation {
        return Err(usage("n_truncation must exceed k + 1"));
    }
    let exact_to = budget.exact_s_cutoff.min(k).min(20);
    let mut table = fractional_moments_exact(exact_to, beta, d, eps, params.gamma)?;
    if k > exact_to {
        let mc = fractional_moments_mc(k, beta, d, eps, params.gamma, budget.mc_samples, budget.seed)?;
        table.extend(mc.into_iter().skip(exact_to + 1));
    }
    let kernel = RhoKernel::new(beta, d, params.gamma, params.delta, bundle.zeta.value, bundle.r.value, budget.n_truncation)?;
    let values: Vec<f64> = table.iter().map(|e| e.value).collect();
    let inflated: Vec<f64> = table.iter().map(|e| e.value + 3.0 * e.se).collect();
    let (rho_value, tail) = kernel.rho(k, &values)?;
    let (rho_inflated, tail_inflated) = kernel.rho(k, &inflated)?;
    // the prefactor uses the central R; its bracket width is far below 1e-9
    let r_slack = (bundle.r.value / bundle.r.lower).powf(params.gamma) - 1.0;
    let inflation = rho_inflated - rho_value + tail_inflated - tail + rho_inflated * r_slack;
    cert.rho_value = Some(rho_value);
    cert.rho_tail_bound = Some(tail);
    cert.mc_inflation = Some(inflation);
    cert.a_table = table;
    if params.k.is_none() {
        cert.diagnostic = Some("Delta = 0: no gap can be claimed".into());
    } else if rho_value + tail + inflation <= 1.0 {
        cert.verdict = Verdict::Certified;
    } else {
        cert.diagnostic = Some(format!("rho + tail + inflation = {:.6} > 1", rho_value + tail + inflation));
    }
    Ok(cert)
}
