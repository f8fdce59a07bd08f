//! Annealed side of the gradient model.
//!
//! Averaging a segment weight over the charges gives the annealed kernel
//! `a_n = eps E (2 pi S_n)^{-d/2}` with `S_n = sum_{i<n} (1 + beta omega_i)^{-1}
//! = n (1 - beta y) / (1 - beta^2)`, `y` the window mean. Hence
//! `a_n = eps ((1 - beta^2) / (2 pi n))^{d/2} R_n` with
//! `R_n = E (1 - beta y)^{-d/2}`.
//!
//! Series over `n` are split three ways: exact binomial sums for
//! `n <= SWITCH`, a moment expansion with a rigorous remainder up to
//! `n_max`, and a power-law tail beyond with `R_n` enclosed in
//! `[1 + c_2/n, 1 + c_2/n + 3 K_4/n^2]`.

use serde::{Deserialize, Serialize};

use crate::disorder::{
    check_gradient_beta, rademacher_window_expectation, sample, DisorderLaw, DisorderSequence, SmoothWindow,
};
use crate::error::{domain, usage, Error, Result};
use crate::gradient::{adjusted_partition, GradientParams};
use crate::numerics::{
    log_sum_exp_raw, riemann_zeta, solve_rate, Bracketed, GeneratingSeries, PowerLawTail, TabulatedSeries,
};
use crate::stats::{replicate, Estimate};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Exact binomial evaluation up to this window length.
pub const SWITCH: usize = 1024;
/// Default number of explicitly tabulated series terms.
pub const DEFAULT_N_MAX: usize = 100_000;

/// `psi(x) = -(d/2) ln(1 - x)`.
pub fn psi(x: f64, d: u32) -> Result<f64> {
    if !(x < 1.0) {
        return Err(domain(format!("psi needs x < 1, got {x}")));
    }
    Ok(-(d as f64) / 2.0 * (-x).ln_1p())
}

/// `(d/2)(x + x^2/2 + x^3/3) <= psi(x)` for `0 <= x < 1`.
pub fn psi_cubic_lower(x: f64, d: u32) -> f64 {
    d as f64 / 2.0 * (x + x * x / 2.0 + x * x * x / 3.0)
}

fn check(beta: f64, d: u32) -> Result<()> {
    check_gradient_beta(beta)?;
    if d == 0 {
        return Err(domain("d must be positive"));
    }
    Ok(())
}

/// `E (2 pi S_n)^{-d/2}` by the binomial sum over the number of `+1`s.
fn unit_coefficient_exact(n: usize, beta: f64, d: u32) -> f64 {
    let h = d as f64 / 2.0;
    let (up, down) = (1.0 / (1.0 + beta), 1.0 / (1.0 - beta));
    rademacher_window_expectation(|k| (TWO_PI * (k as f64 * up + (n - k) as f64 * down)).powf(-h), n)
        .expect("n >= 1")
}

fn r_window(beta: f64, d: u32) -> SmoothWindow {
    SmoothWindow::InversePower { beta, power: d as f64 / 2.0 }
}

/// `a_n = eps E (2 pi S_n)^{-d/2}`.
pub fn annealed_coefficient(n: usize, beta: f64, eps: f64, d: u32) -> Result<f64> {
    check(beta, d)?;
    if n == 0 {
        return Err(usage("n must be at least 1"));
    }
    if n <= SWITCH {
        return Ok(eps * unit_coefficient_exact(n, beta, d));
    }
    let h = d as f64 / 2.0;
    let r = r_window(beta, d).rademacher_mean(n, 0);
    Ok(eps * ((1.0 - beta * beta) / (TWO_PI * n as f64)).powf(h) * r.value)
}

/// The annealed kernel at `eps = 1`: tabulated values with error bounds and
/// a power-law tail.
#[derive(Debug, Clone)]
pub struct AnnealedCoefficients {
    pub beta: f64,
    pub d: u32,
    pub unit: Vec<f64>,
    pub err: Vec<f64>,
    pub tail: PowerLawTail,
}

impl AnnealedCoefficients {
    pub fn new(beta: f64, d: u32, n_max: usize) -> Result<Self> {
        check(beta, d)?;
        if n_max < SWITCH {
            return Err(usage(format!("n_max must be at least {SWITCH}")));
        }
        let h = d as f64 / 2.0;
        let g = r_window(beta, d);
        let amp = ((1.0 - beta * beta) / TWO_PI).powf(h);
        let mut unit = Vec::with_capacity(n_max);
        let mut err = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            if n <= SWITCH {
                let v = unit_coefficient_exact(n, beta, d);
                unit.push(v);
                err.push(1e-15 * n as f64 * v);
            } else {
                let scale = amp * (n as f64).powf(-h);
                let r = g.rademacher_mean(n, 0);
                unit.push(scale * r.value);
                err.push(scale * r.abs_err);
            }
        }
        let c2 = g.taylor(2)[2];
        let tail = PowerLawTail::new(amp, h, c2, 3.0 * g.fourth_taylor_sup());
        Ok(AnnealedCoefficients { beta, d, unit, err, tail })
    }

    pub fn series(&self, eps: f64) -> TabulatedSeries {
        let mut tail = self.tail;
        tail.amplitude *= eps;
        TabulatedSeries::new(self.unit.iter().map(|v| v * eps).collect())
            .with_errors(self.err.iter().map(|v| v * eps).collect())
            .with_power_tail(tail)
    }

    /// Bracket on `sum_n E (2 pi S_n)^{-d/2}`; infinite for `d <= 2`.
    pub fn total(&self) -> Bracketed {
        let (lo, hi) = self.series(1.0).bounds(0.0);
        Bracketed::new(0.5 * (lo + hi), lo, hi)
    }
}

/// `eps_c(0) = (2 pi)^{d/2} / zeta(d/2)`, `d >= 3`.
pub fn homogeneous_critical_point(d: u32) -> Result<Bracketed> {
    if d < 3 {
        return Ok(Bracketed::exact(0.0));
    }
    let h = d as f64 / 2.0;
    let z = riemann_zeta(h, 1e-15)?;
    let c = TWO_PI.powf(h);
    Ok(Bracketed::new(c / z.value, c / z.upper, c / z.lower))
}

/// Annealed critical point as the inverse of the summed kernel; zero for
/// `d <= 2`, where the kernel is not summable.
pub fn annealed_critical_point(beta: f64, d: u32) -> Result<Bracketed> {
    annealed_critical_point_with(beta, d, DEFAULT_N_MAX)
}

pub fn annealed_critical_point_with(beta: f64, d: u32, n_max: usize) -> Result<Bracketed> {
    check(beta, d)?;
    if d <= 2 {
        return Ok(Bracketed::exact(0.0));
    }
    let total = AnnealedCoefficients::new(beta, d, n_max)?.total();
    Ok(total.map_monotone_decreasing(|s| 1.0 / s))
}

/// Tilted kernel `Kbar(n) = R_n K(n) / R` and its summary constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TiltedKernelBundle {
    pub beta: f64,
    pub d: u32,
    pub n_max: usize,
    pub zeta: Bracketed,
    pub r_n: Vec<f64>,
    pub r_err: Vec<f64>,
    /// `Q = sum_n R_n n^{-d/2} = zeta(d/2) R`.
    pub q: Bracketed,
    pub r: Bracketed,
    /// Mean `sum n Kbar(n)`; infinite for `d <= 4`.
    pub mean: Bracketed,
    /// `C(beta) = 1 / mean`.
    pub c_beta: Bracketed,
    #[serde(skip)]
    tail: Option<PowerLawTail>,
}

impl TiltedKernelBundle {
    fn half_d(&self) -> f64 {
        self.d as f64 / 2.0
    }

    /// `K(n) = n^{-d/2} / zeta(d/2)`.
    pub fn k(&self, n: usize) -> f64 {
        (n as f64).powf(-self.half_d()) / self.zeta.value
    }

    pub fn r_at(&self, n: usize) -> f64 {
        if n <= self.n_max {
            self.r_n[n - 1]
        } else {
            r_window(self.beta, self.d).rademacher_mean(n, 0).value
        }
    }

    pub fn kbar(&self, n: usize) -> f64 {
        self.r_at(n) * (n as f64).powf(-self.half_d()) / self.q.value
    }

    /// `e^Delta Kbar(n)` as a generating series in `exp(-F)`.
    pub fn tilted_series(&self, delta: f64) -> TabulatedSeries {
        let h = self.half_d();
        let s = delta.exp();
        let q = self.q;
        let rel = (q.upper - q.lower) / q.lower;
        let mut coeffs = Vec::with_capacity(self.n_max);
        let mut errs = Vec::with_capacity(self.n_max);
        for n in 1..=self.n_max {
            let pw = (n as f64).powf(-h);
            let c = s * self.r_n[n - 1] * pw / q.value;
            coeffs.push(c);
            errs.push(s * self.r_err[n - 1] * pw / q.lower + c * rel);
        }
        let mut tail = self.tail.expect("bundle built with tail");
        tail.amplitude = s / q.value;
        TabulatedSeries::new(coeffs).with_errors(errs).with_power_tail(tail.with_spread(rel))
    }
}

pub fn tilted_bundle(beta: f64, d: u32, n_max: usize) -> Result<TiltedKernelBundle> {
    check(beta, d)?;
    if d < 3 {
        return Err(Error::Unsupported("the tilted kernel needs d >= 3".into()));
    }
    if n_max < SWITCH {
        return Err(usage(format!("n_max must be at least {SWITCH}")));
    }
    let h = d as f64 / 2.0;
    let g = r_window(beta, d);
    let mut r_n = Vec::with_capacity(n_max);
    let mut r_err = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let m = g.rademacher_mean(n, SWITCH);
        r_n.push(m.value);
        r_err.push(m.abs_err);
    }
    let tail = PowerLawTail::new(1.0, h, g.taylor(2)[2], 3.0 * g.fourth_taylor_sup());

    // Q = sum R_n n^{-h}
    let q_series = TabulatedSeries::new((1..=n_max).map(|n| r_n[n - 1] * (n as f64).powf(-h)).collect())
        .with_errors((1..=n_max).map(|n| r_err[n - 1] * (n as f64).powf(-h)).collect())
        .with_power_tail(tail);
    let (qlo, qhi) = q_series.bounds(0.0);
    let q = Bracketed::new(0.5 * (qlo + qhi), qlo, qhi);

    let z = riemann_zeta(h, 1e-15)?;
    let zeta = Bracketed::new(z.value, z.lower, z.upper);
    let r = Bracketed::new(q.value / zeta.value, q.lower / zeta.upper, q.upper / zeta.lower);

    // mean: sum n R_n n^{-h} / Q
    let mean = if d <= 4 {
        Bracketed::exact(f64::INFINITY)
    } else {
        let mut mtail = tail;
        mtail.power = h - 1.0;
        let m_series =
            TabulatedSeries::new((1..=n_max).map(|n| r_n[n - 1] * (n as f64).powf(1.0 - h)).collect())
                .with_errors((1..=n_max).map(|n| r_err[n - 1] * (n as f64).powf(1.0 - h)).collect())
                .with_power_tail(mtail);
        let (mlo, mhi) = m_series.bounds(0.0);
        Bracketed::new(0.5 * (mlo + mhi) / q.value, mlo / q.upper, mhi / q.lower)
    };
    let c_beta = mean.map_monotone_decreasing(|m| 1.0 / m);
    Ok(TiltedKernelBundle { beta, d, n_max, zeta, r_n, r_err, q, r, mean, c_beta, tail: Some(tail) })
}

/// `eps_c(0) (1 - beta^2)^{-d/2} / R(beta)`, `d >= 3`.
pub fn annealed_critical_point_tilted_form(beta: f64, d: u32) -> Result<Bracketed> {
    let b = tilted_bundle(beta, d, DEFAULT_N_MAX)?;
    critical_point_from_bundle(&b)
}

pub fn critical_point_from_bundle(b: &TiltedKernelBundle) -> Result<Bracketed> {
    let c0 = homogeneous_critical_point(b.d)?;
    let f = (1.0 - b.beta * b.beta).powf(-b.half_d());
    Ok(Bracketed::new(c0.value * f / b.r.value, c0.lower * f / b.r.upper, c0.upper * f / b.r.lower))
}

/// `Fbar(Delta)`: the rate solving `sum_n e^{Delta - F n} Kbar(n) = 1`.
pub fn tilted_free_energy(bundle: &TiltedKernelBundle, delta: f64) -> Result<Bracketed> {
    if !(delta >= 0.0) {
        return Err(domain(format!("Delta must be nonnegative, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(Bracketed::exact(0.0));
    }
    let series = bundle.tilted_series(delta);
    match solve_rate(&series, 1e-15) {
        Ok(r) => Ok(Bracketed::new(r.rate, r.rate_lower, r.rate_upper)),
        Err(_) => Err(Error::Inconsistent("tilted series below one at Delta > 0".into())),
    }
}

/// `F^a(beta, eps)`: zero when the annealed kernel has total mass below one.
pub fn annealed_free_energy(beta: f64, eps: f64, d: u32) -> Result<Bracketed> {
    check(beta, d)?;
    if !(eps >= 0.0) {
        return Err(domain("eps must be nonnegative"));
    }
    if eps == 0.0 {
        return Ok(Bracketed::exact(0.0));
    }
    let coeffs = AnnealedCoefficients::new(beta, d, DEFAULT_N_MAX)?;
    Ok(free_energy_from(&coeffs, eps))
}

pub fn free_energy_from(coeffs: &AnnealedCoefficients, eps: f64) -> Bracketed {
    match solve_rate(&coeffs.series(eps), 1e-15) {
        Ok(r) => Bracketed::new(r.rate, r.rate_lower, r.rate_upper),
        Err(_) => Bracketed::exact(0.0),
    }
}

/// `ln E Z_m`, `m = 1..=n`, for the pinned adjusted partition function:
/// `E Z_m = E w(0,m) + eps sum_j E Z_j E w(j,m)` by independence of the
/// disjoint charge windows.
pub fn annealed_log_partition(beta: f64, eps: f64, d: u32, n: usize) -> Result<Vec<f64>> {
    check(beta, d)?;
    let lu: Vec<f64> = (1..=n).map(|m| unit_log_coefficient(m, beta, d)).collect();
    let le = eps.ln();
    let mut z: Vec<f64> = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(n);
    for m in 1..=n {
        buf.clear();
        buf.push(lu[m - 1]);
        if eps > 0.0 {
            for j in 1..m {
                buf.push(le + z[j - 1] + lu[m - j - 1]);
            }
        }
        z.push(log_sum_exp_raw(&buf));
    }
    Ok(z)
}

fn unit_log_coefficient(n: usize, beta: f64, d: u32) -> f64 {
    if n <= SWITCH {
        unit_coefficient_exact(n, beta, d).ln()
    } else {
        let h = d as f64 / 2.0;
        let r = r_window(beta, d).rademacher_mean(n, 0);
        h * ((1.0 - beta * beta) / (TWO_PI * n as f64)).ln() + r.value.ln()
    }
}

/// Direct `ln(eps Z_N)` and the same quantity written as a renewal
/// expectation, `sum over configurations of prod_j [lambda K(n_j)
/// e^{psi(beta ybar_j)}]` with `lambda = eps (1-beta^2)^{d/2} / eps_c(0)`.
/// Both sides are exhaustive sums; `N <= 14`.
pub fn renewal_representation_check(
    omega: &DisorderSequence,
    beta: f64,
    eps: f64,
    d: u32,
    n: usize,
) -> Result<(f64, f64)> {
    check(beta, d)?;
    if d < 3 {
        return Err(Error::Unsupported("the renewal kernel needs d >= 3".into()));
    }
    if n > 14 {
        return Err(Error::TooLarge(format!("renewal representation check limited to N <= 14, got {n}")));
    }
    if !(eps > 0.0) {
        return Err(domain("eps must be positive"));
    }
    let params = GradientParams::pinned(d, beta, eps, n);
    let direct = adjusted_partition(omega, &params)?.ln() + eps.ln();

    let h = d as f64 / 2.0;
    let zeta = riemann_zeta(h, 1e-15)?.value;
    let eps_c0 = TWO_PI.powf(h) / zeta;
    let log_lambda = eps.ln() + h * (1.0 - beta * beta).ln() - eps_c0.ln();
    let w = &omega.values[..n];
    let mut logs = Vec::with_capacity(1 << (n - 1));
    for mask in 0u32..(1u32 << (n - 1)) {
        let mut acc = 0.0;
        let mut start = 0usize;
        for site in 1..=n {
            if site == n || mask & (1 << (site - 1)) != 0 {
                let len = site - start;
                let ybar = w[start..site].iter().sum::<f64>() / len as f64;
                acc += log_lambda - h * (len as f64).ln() - zeta.ln() + psi(beta * ybar, d)?;
                start = site;
            }
        }
        logs.push(acc);
    }
    Ok((direct, log_sum_exp_raw(&logs)))
}

/// The three evaluations of `E[eps Z_N]` at `eps = eps_c^a e^Delta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnealedIdentity {
    pub eps: f64,
    pub fbar: Bracketed,
    /// `ln E[eps Z_N]` by the annealed recursion.
    pub log_exact: f64,
    /// `ln(e^{Fbar N} P(N in taubar))` by renewal convolution.
    pub log_renewal: f64,
    /// Monte Carlo average of `eps Z_N`.
    pub mc: Estimate,
}

pub fn annealed_identity_check(
    beta: f64,
    delta: f64,
    d: u32,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<AnnealedIdentity> {
    check(beta, d)?;
    if d < 3 {
        return Err(Error::Unsupported("the annealed identity needs d >= 3".into()));
    }
    if n == 0 || n > 64 {
        return Err(usage(format!("annealed identity check needs 1 <= N <= 64, got {n}")));
    }
    let eps_c = annealed_critical_point(beta, d)?;
    let eps = eps_c.value * delta.exp();
    let log_exact = annealed_log_partition(beta, eps, d, n)?[n - 1] + eps.ln();

    let bundle = tilted_bundle(beta, d, DEFAULT_N_MAX)?;
    let fbar = tilted_free_energy(&bundle, delta)?;
    let kt: Vec<f64> =
        (1..=n).map(|m| delta.exp() * bundle.kbar(m) * (-fbar.value * m as f64).exp()).collect();
    let mut u = vec![0.0; n + 1];
    u[0] = 1.0;
    for m in 1..=n {
        u[m] = (1..=m).map(|j| kt[j - 1] * u[m - j]).sum();
    }
    let log_renewal = fbar.value * n as f64 + u[n].ln();

    let params = GradientParams::pinned(d, beta, eps, n);
    let vals = replicate(samples, |i| {
        let omega = sample(DisorderLaw::Rademacher, n, seed, i);
        adjusted_partition(&omega, &params).map(|z| eps * z.value())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(AnnealedIdentity { eps, fbar, log_exact, log_renewal, mc: Estimate::from_values(&vals) })
}

/// Jensen lower bound `L(beta) = m_K^{-1} sum_n E psi(beta ybar_n) K(n)`
/// against `d zeta(d/2+1) beta^2 / (4 zeta(d/2-1))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JensenBoundCheck {
    /// Rigorous lower bound on `L(beta)` (truncated positive series).
    pub lower_bound: f64,
    /// Truncated series plus leading-order tail.
    pub estimate: f64,
    pub analytic: f64,
    pub holds: bool,
}

pub fn jensen_bound_check(beta: f64, d: u32) -> Result<JensenBoundCheck> {
    jensen_bound_check_with(beta, d, DEFAULT_N_MAX)
}

pub fn jensen_bound_check_with(beta: f64, d: u32, n_max: usize) -> Result<JensenBoundCheck> {
    check(beta, d)?;
    if d < 5 {
        return Err(Error::Unsupported("the Jensen bound check covers d >= 5".into()));
    }
    let h = d as f64 / 2.0;
    let z_hm1 = riemann_zeta(h - 1.0, 1e-15)?;
    let z_hp1 = riemann_zeta(h + 1.0, 1e-15)?;
    let analytic = d as f64 * z_hp1.value * beta * beta / (4.0 * z_hm1.value);
    if beta == 0.0 {
        return Ok(JensenBoundCheck { lower_bound: 0.0, estimate: 0.0, analytic, holds: true });
    }
    let g = SmoothWindow::NegLog { beta };
    let mut sum = 0.0;
    let mut err = 0.0;
    for n in (1..=n_max).rev() {
        let m = g.rademacher_mean(n, SWITCH);
        let k = (n as f64).powf(-h);
        sum += h * m.value * k;
        err += h * m.abs_err * k;
    }
    // m_K^{-1} K(n) = n^{-h} / zeta(h - 1)
    let lower_bound = (sum - err) / z_hm1.upper;
    let tail = h * beta * beta / 2.0 * crate::numerics::power_tail_bounds(h + 1.0, n_max).0;
    let estimate = (sum + tail) / z_hm1.value;
    Ok(JensenBoundCheck { lower_bound, estimate, analytic, holds: lower_bound >= analytic })
}

/// Mean of `(1 - beta ybar_n)^{-gamma d/2}` over a Rademacher window:
/// `E e^{gamma psi(beta ybar_n)}`.
pub fn fractional_window_mean(n: usize, beta: f64, power: f64) -> f64 {
    SmoothWindow::InversePower { beta, power }.rademacher_mean(n, SWITCH).value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0, 3).unwrap(), 0.0);
        assert!((psi(0.5, 2).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((psi(0.5, 3).unwrap() - 1.039721).abs() < 1e-6);
        assert!(psi(1.0, 3).is_err());
        for x in [0.0, 0.1, 0.5, 0.9] {
            assert!(psi_cubic_lower(x, 5) <= psi(x, 5).unwrap());
        }
    }

    #[test]
    fn coefficient_examples() {
        for n in [1, 5, 40] {
            let a = annealed_coefficient(n, 0.0, 0.7, 3).unwrap();
            assert!((a / (0.7 * (TWO_PI * n as f64).powf(-1.5)) - 1.0).abs() < 1e-13);
        }
        let a1 = annealed_coefficient(1, 0.5, 1.0, 2).unwrap();
        assert!((a1 - 1.0 / TWO_PI).abs() < 1e-15);
        for beta in [0.3, 0.6] {
            let n = 10_000;
            let a = annealed_coefficient(n, beta, 1.0, 3).unwrap();
            let ratio = a * (TWO_PI * n as f64).powf(1.5) / (1.0 - beta * beta).powf(1.5);
            assert!((ratio - 1.0).abs() < 0.01, "{ratio}");
        }
    }

    #[test]
    fn switch_index_paths_agree() {
        for (beta, d) in [(0.3, 3), (0.8, 5), (0.5, 1)] {
            let h = d as f64 / 2.0;
            let exact = unit_coefficient_exact(SWITCH + 1, beta, d);
            let r = r_window(beta, d).rademacher_mean(SWITCH + 1, 0).value;
            let approx = ((1.0 - beta * beta) / (TWO_PI * (SWITCH + 1) as f64)).powf(h) * r;
            assert!((exact / approx - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn critical_point_examples() {
        let c = annealed_critical_point(0.0, 4).unwrap();
        assert!(c.contains(24.0) || (c.value - 24.0).abs() < 1e-9, "{c:?}");
        assert!(c.width() <= 1e-6);
        let c3 = annealed_critical_point(0.0, 3).unwrap();
        assert!((c3.value - 6.0289).abs() < 1e-3, "{c3:?}");
        assert_eq!(annealed_critical_point(0.4, 2).unwrap().value, 0.0);
        let t = annealed_critical_point_tilted_form(0.0, 5).unwrap();
        let c0 = homogeneous_critical_point(5).unwrap();
        assert!((t.value / c0.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bundle_examples() {
        let b = tilted_bundle(0.0, 5, 2048).unwrap();
        let expect_c = riemann_zeta(2.5, 1e-14).unwrap().value / riemann_zeta(1.5, 1e-14).unwrap().value;
        assert!((b.c_beta.value / expect_c - 1.0).abs() < 1e-6, "{:?} {expect_c}", b.c_beta);
        assert!((b.r.value - 1.0).abs() < 1e-12);
        let r1 = SmoothWindow::InversePower { beta: 0.5, power: 1.0 }.rademacher_mean(1, SWITCH).value;
        assert!((r1 - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tilted_free_energy_d4_oracle() {
        let b = tilted_bundle(0.0, 4, 4096).unwrap();
        let f = tilted_free_energy(&b, 0.1).unwrap();
        // direct bisection on sum zeta(2)^{-1} n^{-2} e^{-F n} = e^{-0.1}
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let g = |t: f64| (1..2_000_000).map(|n| (n as f64).powi(-2) * (-t * n as f64).exp()).sum::<f64>() / z2;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > (-0.1f64).exp() { lo = mid } else { hi = mid }
        }
        assert!((f.value - 0.5 * (lo + hi)).abs() < 1e-9, "{f:?} {lo}");
        assert_eq!(tilted_free_energy(&b, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn jensen_bound_examples() {
        let c = jensen_bound_check_with(0.0, 5, 2048).unwrap();
        assert_eq!((c.lower_bound, c.analytic), (0.0, 0.0));
        let c = jensen_bound_check_with(0.3, 5, 4096).unwrap();
        assert!((c.analytic / 0.09 - 0.5391).abs() < 1e-4, "{c:?}");
        assert!(c.holds);
        assert!(jensen_bound_check(0.3, 4).is_err());
    }

    #[test]
    fn renewal_representation_small() {
        let omega = sample(DisorderLaw::Rademacher, 12, 9, 1);
        let (a, b) = renewal_representation_check(&omega, 0.3, 0.8, 3, 12).unwrap();
        assert!((a - b).abs() < 1e-9);
        let (a, b) = renewal_representation_check(&omega, 0.0, 2.0, 4, 1).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
