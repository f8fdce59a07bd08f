//! The `(1+d)`-dimensional gradient pinning model with Rademacher charges.
//!
//! Segment weights: a stretch of the field from one zero at `i` to the next
//! at `j` contributes `w(i, j) = (2 pi (S_j - S_i))^{-d/2}` with
//! `S_k = sum_{n<k} (1 + beta omega_n)^{-1}`. The adjusted partition function
//! is `Z_N = sum over 0 = i_0 < ... < i_l = N of eps^{l-1} prod w(i_{j-1}, i_j)`.

use serde::{Deserialize, Serialize};

use crate::disorder::{check_gradient_beta, sample, DisorderLaw, DisorderSequence};
use crate::error::{domain, usage, Error, Result};
use crate::numerics::{log_sum_exp_raw, solve_rate, Bracketed, LogWeight, PowerLawTail, TabulatedSeries};
use crate::stats::{replicate, Estimate};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    Pinned,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientParams {
    pub d: u32,
    pub beta: f64,
    pub eps: f64,
    pub n: usize,
    pub endpoint: Endpoint,
}

impl GradientParams {
    pub fn pinned(d: u32, beta: f64, eps: f64, n: usize) -> Self {
        GradientParams { d, beta, eps, n, endpoint: Endpoint::Pinned }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(domain("dimension d must be positive"));
        }
        check_gradient_beta(self.beta)?;
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(domain(format!("eps must be finite and nonnegative, got {}", self.eps)));
        }
        if self.n == 0 {
            return Err(domain("N must be at least 1"));
        }
        Ok(())
    }

    fn half_d(&self) -> f64 {
        self.d as f64 / 2.0
    }
}

fn check_omega(omega: &DisorderSequence, n: usize) -> Result<()> {
    if omega.len() < n {
        return Err(usage(format!("disorder sequence has {} charges, need {n}", omega.len())));
    }
    Ok(())
}

/// `prod a_i * sum 1/a_i`: the determinant of the `(n-1) x (n-1)`
/// tridiagonal matrix with diagonal `a_i + a_{i+1}` and off-diagonal
/// `-a_{i+1}`.
pub fn det_gradient(a: &[f64]) -> Result<f64> {
    if a.is_empty() {
        return Err(usage("det_gradient needs at least one entry"));
    }
    if let Some(x) = a.iter().find(|x| !(**x > 0.0)) {
        return Err(domain(format!("entries must be positive, found {x}")));
    }
    let prod: f64 = a.iter().product();
    let inv: f64 = a.iter().map(|x| 1.0 / x).sum();
    Ok(prod * inv)
}

/// The tridiagonal matrix whose determinant `det_gradient` evaluates.
pub fn gradient_matrix(a: &[f64]) -> Vec<Vec<f64>> {
    let m = a.len().saturating_sub(1);
    let mut g = vec![vec![0.0; m]; m];
    for i in 0..m {
        g[i][i] = a[i] + a[i + 1];
        if i + 1 < m {
            g[i][i + 1] = -a[i + 1];
            g[i + 1][i] = -a[i + 1];
        }
    }
    g
}

/// Prefix sums `S_0 = 0, S_k = sum_{n<k} (1 + beta omega_n)^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseWeightPrefix {
    pub s: Vec<f64>,
}

impl InverseWeightPrefix {
    pub fn new(omega: &[f64], beta: f64) -> Self {
        let mut s = Vec::with_capacity(omega.len() + 1);
        let mut acc = 0.0;
        s.push(0.0);
        for w in omega {
            acc += 1.0 / (1.0 + beta * w);
            s.push(acc);
        }
        InverseWeightPrefix { s }
    }

    /// `ln w(i, j)` for the given dimension.
    pub fn log_segment(&self, i: usize, j: usize, half_d: f64) -> f64 {
        -half_d * (TWO_PI * (self.s[j] - self.s[i])).ln()
    }
}

/// `ln Z` of the raw model at `eps = 0`.
pub fn raw_partition_eps0(omega: &DisorderSequence, params: &GradientParams) -> Result<LogWeight> {
    params.validate()?;
    check_omega(omega, params.n)?;
    let a: Vec<f64> = omega.values[..params.n].iter().map(|w| 1.0 + params.beta * w).collect();
    let h = params.half_d();
    Ok(match params.endpoint {
        Endpoint::Pinned => {
            let log_det = a.iter().map(|x| x.ln()).sum::<f64>() + a.iter().map(|x| 1.0 / x).sum::<f64>().ln();
            LogWeight::from_log(-h * (TWO_PI.ln() + log_det))
        }
        Endpoint::Free => LogWeight::from_log(-h * a.iter().map(|x| x.ln()).sum::<f64>()),
    })
}

/// Almost-sure limit of `(1/N) ln Z` at `eps = 0`.
pub fn raw_free_energy_limit_eps0(beta: f64, d: u32) -> Result<f64> {
    check_gradient_beta(beta)?;
    Ok(-(d as f64) / 4.0 * (-beta * beta).ln_1p())
}

/// `ln Z_m` for `m = 1..=n` (pinned endpoint) by the `O(n^2)` recursion
/// `Z_m = w(0,m) + eps sum_{j=1}^{m-1} Z_j w(j,m)`.
pub fn pinned_profile(prefix: &InverseWeightPrefix, half_d: f64, eps: f64, n: usize) -> Vec<f64> {
    let log_eps = eps.ln();
    let mut z = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(n);
    for m in 1..=n {
        buf.clear();
        buf.push(prefix.log_segment(0, m, half_d));
        if eps > 0.0 {
            for j in 1..m {
                buf.push(log_eps + z[j - 1] + prefix.log_segment(j, m, half_d));
            }
        }
        z.push(log_sum_exp_raw(&buf));
    }
    z
}

/// Tail masses `T(n) = sum_{m>n} K(m)` of the renewal kernel
/// `K(n) = n^{-d/2} / zeta(d/2)`, for `n = 0..=max`.
pub(crate) fn kernel_tail_masses(d: u32, max: usize) -> Vec<f64> {
    let p = d as f64 / 2.0;
    let z = crate::numerics::riemann_zeta(p, 1e-15).expect("d >= 3").value;
    let mut t = vec![0.0; max + 1];
    // T(max) from the certified zeta tail, then downward recursion
    let head: f64 = (1..=max).rev().map(|m| (m as f64).powf(-p)).sum();
    t[max] = (z - head).max(0.0) / z;
    for n in (0..max).rev() {
        t[n] = t[n + 1] + ((n + 1) as f64).powf(-p) / z;
    }
    t
}

/// Adjusted partition function `ln Z_N`.
///
/// Pinned endpoint: the recursion above. Free endpoint (needs `d >= 3`,
/// `eps > 0`): in the renewal normalization `Z^ren = eps Z`, the last
/// excursion is left incomplete and weighted by the kernel tail,
/// `Z^{f,ren}_N = Z^ren_N + sum_{n=1}^{N} Z^ren_{N-n} T(n)` with
/// `Z^ren_0 = 1`; the returned value is `Z^{f,ren}_N / eps`.
pub fn adjusted_partition(omega: &DisorderSequence, params: &GradientParams) -> Result<LogWeight> {
    params.validate()?;
    check_omega(omega, params.n)?;
    let prefix = InverseWeightPrefix::new(&omega.values[..params.n], params.beta);
    let z = pinned_profile(&prefix, params.half_d(), params.eps, params.n);
    match params.endpoint {
        Endpoint::Pinned => Ok(LogWeight::from_log(z[params.n - 1])),
        Endpoint::Free => {
            if params.d < 3 || params.eps <= 0.0 {
                return Err(Error::Unsupported("free endpoint needs d >= 3 and eps > 0".into()));
            }
            let n = params.n;
            let le = params.eps.ln();
            let t = kernel_tail_masses(params.d, n);
            let mut terms = vec![le + z[n - 1]];
            for k in 1..n {
                terms.push(le + z[n - k - 1] + t[k].ln());
            }
            terms.push(t[n].ln());
            Ok(LogWeight::from_log(log_sum_exp_raw(&terms) - le))
        }
    }
}

/// Constant `C` with `0 <= ln Z^f_N - ln Z_N <= ln(1 + C N (N+1) / 2)`.
///
/// Each incomplete-excursion term is compared with the configuration that
/// closes the same excursion at `N`: `Z_N >= eps Z_{N-n} w(N-n, N)` and
/// `w >= (2 pi n / (1 - beta))^{-d/2}`, while `T(n) <= n^{1-d/2} /
/// ((d/2 - 1) zeta(d/2))`.
pub fn free_pinned_constant(d: u32, beta: f64, eps: f64) -> f64 {
    let h = d as f64 / 2.0;
    let zeta = crate::numerics::riemann_zeta(h, 1e-15).expect("d >= 3").value;
    let eps_c0 = TWO_PI.powf(h) / zeta;
    eps_c0 / ((h - 1.0) * eps * (1.0 - beta).powf(h))
}

/// Exhaustive sum over all `2^{N-1}` pinning sets; segment sums are
/// accumulated directly from the charges, independent of the prefix sums.
pub fn enumerate_partition_oracle(omega: &DisorderSequence, params: &GradientParams) -> Result<LogWeight> {
    params.validate()?;
    check_omega(omega, params.n)?;
    let n = params.n;
    if n > 20 {
        return Err(Error::TooLarge(format!("enumeration oracle limited to N <= 20, got {n}")));
    }
    if params.endpoint != Endpoint::Pinned {
        return Err(Error::Unsupported("the enumeration oracle covers the pinned endpoint".into()));
    }
    let h = params.half_d();
    let inv: Vec<f64> = omega.values[..n].iter().map(|w| 1.0 / (1.0 + params.beta * w)).collect();
    let mut logs = Vec::with_capacity(1 << (n - 1));
    for mask in 0u32..(1u32 << (n - 1)) {
        // bit i-1 set <=> site i in {1..N-1} pinned
        let l = mask.count_ones() + 1;
        if params.eps == 0.0 && l > 1 {
            continue;
        }
        let mut log_term = (l - 1) as f64 * if l > 1 { params.eps.ln() } else { 0.0 };
        let mut start = 0usize;
        for site in 1..=n {
            if site == n || mask & (1 << (site - 1)) != 0 {
                let seg: f64 = inv[start..site].iter().sum();
                log_term -= h * (TWO_PI * seg).ln();
                start = site;
            }
        }
        logs.push(log_term);
    }
    Ok(LogWeight::from_log(log_sum_exp_raw(&logs)))
}

/// How a replica's partition value is turned into a free-energy sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeEnergyNormalization {
    /// `(1/N) ln(Z_N / w(0, N))`: the ratio against the `eps = 0` value,
    /// which is identically zero at `eps = 0`.
    Ratio,
    /// `(1/N) ln Z_N`.
    Adjusted,
}

/// Per-replica free-energy samples `F_N(omega_i)`, replica `i` drawn from
/// stream `(seed, i)`.
pub fn quenched_samples(
    params: &GradientParams,
    samples: usize,
    seed: u64,
    norm: FreeEnergyNormalization,
) -> Result<Vec<f64>> {
    params.validate()?;
    let n = params.n;
    let p = *params;
    let out = replicate(samples, move |i| {
        let omega = sample(DisorderLaw::Rademacher, n, seed, i);
        let log_z = adjusted_partition(&omega, &p).map(|z| z.ln());
        log_z.map(|lz| {
            let base = match norm {
                FreeEnergyNormalization::Adjusted => 0.0,
                FreeEnergyNormalization::Ratio => {
                    InverseWeightPrefix::new(&omega.values, p.beta).log_segment(0, n, p.half_d())
                }
            };
            (lz - base) / n as f64
        })
    });
    out.into_iter().collect()
}

/// Monte Carlo estimate of `(1/N) E ln Z_N`.
pub fn quenched_free_energy_mc(
    params: &GradientParams,
    samples: usize,
    seed: u64,
    norm: FreeEnergyNormalization,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(usage("need at least two samples"));
    }
    Ok(Estimate::from_values(&quenched_samples(params, samples, seed, norm)?))
}

/// Homogeneous pinned model with segment weight `(2 pi n scale)^{-d/2}`.
///
/// `scale = 1/(1-beta)` bounds every disordered segment weight from below
/// (each `(1 + beta omega)^{-1} <= 1/(1-beta)`), so `ln Z_N >= ln Y_N`
/// holds for every charge sequence; `scale = 1/(1+beta)` bounds from above.
pub fn homogeneous_log_partition(d: u32, eps: f64, n: usize, scale: f64) -> Vec<f64> {
    let omega = vec![0.0; n];
    let mut prefix = InverseWeightPrefix::new(&omega, 0.0);
    for s in prefix.s.iter_mut() {
        *s *= scale;
    }
    pinned_profile(&prefix, d as f64 / 2.0, eps, n)
}

/// Free energy of the homogeneous model with kernel
/// `a_n = eps (2 pi n scale)^{-d/2}`; zero in the delocalized phase.
pub fn homogeneous_free_energy(d: u32, eps: f64, scale: f64) -> Bracketed {
    if eps == 0.0 {
        return Bracketed::exact(0.0);
    }
    let h = d as f64 / 2.0;
    let n_max = 100_000;
    let amp = eps * (TWO_PI * scale).powf(-h);
    let coeffs: Vec<f64> = (1..=n_max).map(|n| amp * (n as f64).powf(-h)).collect();
    let series = TabulatedSeries::new(coeffs).with_power_tail(PowerLawTail::new(amp, h, 0.0, 0.0));
    match solve_rate(&series, 1e-15) {
        Ok(r) => Bracketed::new(r.rate, r.rate_lower, r.rate_upper),
        Err(_) => Bracketed::exact(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dense_determinant;

    fn seq(v: &[f64]) -> DisorderSequence {
        DisorderSequence::from_values(v.to_vec(), DisorderLaw::Rademacher)
    }

    #[test]
    fn det_gradient_examples() {
        assert_eq!(det_gradient(&[1.0, 1.0]).unwrap(), 2.0);
        assert!((det_gradient(&[2.0, 3.0, 4.0]).unwrap() - 26.0).abs() < 1e-12);
        assert!((det_gradient(&[1.0; 7]).unwrap() - 7.0).abs() < 1e-12);
        assert!(det_gradient(&[1.0, 0.0]).is_err());
        let m = gradient_matrix(&[2.0, 3.0, 4.0]);
        assert_eq!(m, vec![vec![5.0, -3.0], vec![-3.0, 7.0]]);
        assert!((dense_determinant(&m).unwrap() - 26.0).abs() < 1e-12);
    }

    #[test]
    fn raw_partition_examples() {
        let p = GradientParams::pinned(1, 0.0, 0.0, 2);
        let z = raw_partition_eps0(&seq(&[1.0, -1.0]), &p).unwrap();
        assert!((z.ln() + 0.5 * (TWO_PI * 2.0).ln()).abs() < 1e-14);
        assert!((z.ln() + 1.265512).abs() < 1e-6);

        let free = GradientParams { endpoint: Endpoint::Free, ..GradientParams::pinned(3, 0.0, 0.0, 5) };
        assert_eq!(raw_partition_eps0(&seq(&[1.0; 5]), &free).unwrap().ln(), 0.0);

        let one = GradientParams::pinned(1, 0.5, 0.0, 1);
        let z = raw_partition_eps0(&seq(&[1.0]), &one).unwrap();
        assert!((z.ln() + 0.5 * TWO_PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn raw_limit_examples() {
        assert_eq!(raw_free_energy_limit_eps0(0.0, 3).unwrap(), 0.0);
        assert!((raw_free_energy_limit_eps0(0.5, 1).unwrap() - 0.071918).abs() < 1e-5);
        assert!((raw_free_energy_limit_eps0(0.5, 4).unwrap() - 0.287682).abs() < 1e-6);
        assert!(raw_free_energy_limit_eps0(1.0, 1).is_err());
    }

    #[test]
    fn adjusted_partition_examples() {
        for beta in [0.0, 0.4] {
            let p = GradientParams::pinned(3, beta, 0.7, 1);
            let z = adjusted_partition(&seq(&[-1.0]), &p).unwrap();
            let expect = (TWO_PI / (1.0 - beta)).powf(-1.5);
            assert!((z.value() - expect).abs() < 1e-14);
        }
        for eps in [0.0, 0.3, 2.0] {
            let p = GradientParams::pinned(1, 0.0, eps, 2);
            let z = adjusted_partition(&seq(&[1.0, 1.0]), &p).unwrap().value();
            let expect = (4.0 * std::f64::consts::PI).powf(-0.5) + eps / TWO_PI;
            assert!((z - expect).abs() < 1e-14, "{z} {expect}");
            let o = enumerate_partition_oracle(&seq(&[1.0, 1.0]), &p).unwrap().value();
            assert!((o - expect).abs() < 1e-14);
        }
        let omega = sample(DisorderLaw::Rademacher, 9, 1, 0);
        let p = GradientParams::pinned(2, 0.6, 0.0, 9);
        let z = adjusted_partition(&omega, &p).unwrap();
        let w = InverseWeightPrefix::new(&omega.values, 0.6).log_segment(0, 9, 1.0);
        assert_eq!(z.ln(), w);
    }

    #[test]
    fn recursion_matches_enumeration_at_n14() {
        let omega = sample(DisorderLaw::Rademacher, 14, 42, 3);
        let p = GradientParams::pinned(3, 0.3, 1.3, 14);
        let a = adjusted_partition(&omega, &p).unwrap().ln();
        let b = enumerate_partition_oracle(&omega, &p).unwrap().ln();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn oracle_refuses_large_n() {
        let omega = sample(DisorderLaw::Rademacher, 21, 0, 0);
        let p = GradientParams::pinned(1, 0.1, 1.0, 21);
        assert!(matches!(enumerate_partition_oracle(&omega, &p), Err(Error::TooLarge(_))));
    }

    #[test]
    fn mc_at_zero_eps_is_exactly_zero() {
        let p = GradientParams::pinned(3, 0.5, 0.0, 50);
        let e = quenched_free_energy_mc(&p, 8, 3, FreeEnergyNormalization::Ratio).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn kernel_tails_are_consistent() {
        let t = kernel_tail_masses(5, 50);
        assert!((t[0] - 1.0).abs() < 1e-13);
        assert!(t.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn free_endpoint_dominates_pinned() {
        let omega = sample(DisorderLaw::Rademacher, 40, 5, 0);
        for eps in [0.5, 5.0, 40.0] {
            let p = GradientParams::pinned(3, 0.5, eps, 40);
            let f = GradientParams { endpoint: Endpoint::Free, ..p };
            let diff = adjusted_partition(&omega, &f).unwrap().ln() - adjusted_partition(&omega, &p).unwrap().ln();
            let c = free_pinned_constant(3, 0.5, eps);
            assert!(diff >= 0.0 && diff <= (1.0 + c * 40.0 * 41.0 / 2.0).ln(), "eps={eps} diff={diff}");
        }
    }

    #[test]
    fn homogeneous_free_energy_d1_small_eps() {
        // a_n = eps (2 pi n)^{-1/2}: F ~ eps^2 / 2
        let f = homogeneous_free_energy(1, 0.01, 1.0);
        assert!((f.value / 5e-5 - 1.0).abs() < 0.1, "{f:?}");
        assert!(f.contains(f.value));
    }
}
