//! Root finding for generating equations `sum_n c_n x^n = 1` with rigorous
//! control of the omitted tail.
//!
//! The search variable is the rate `t = -ln x`, which is what free-energy
//! callers want and which stays well conditioned when the root sits
//! extremely close to `x = 1`.

use crate::error::{domain, usage, Result};

/// Rigorous bracket on `sum_{n > m} n^-p` for `p > 1`.
///
/// Both sides follow from convexity of `x^-p`: the trapezoid rule
/// underestimates and the midpoint rule overestimates the integral.
pub fn power_tail_bounds(p: f64, m: usize) -> (f64, f64) {
    debug_assert!(p > 1.0);
    let a = m as f64 + 1.0;
    let lower = a.powf(1.0 - p) / (p - 1.0) + 0.5 * a.powf(-p);
    let upper = (a - 0.5).powf(1.0 - p) / (p - 1.0);
    (lower, upper)
}

/// Truncation index of a series and an upper bound on everything beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTruncation {
    pub n_max: usize,
    pub tail_bound: f64,
}

/// A nonnegative power series in `x = exp(-t)`.
///
/// `bounds(t)` must return `(lo, hi)` with `lo <= G(t) <= hi`; both must be
/// nonincreasing in `t`. `central(t)` is the best available point estimate.
pub trait GeneratingSeries {
    fn bounds(&self, t: f64) -> (f64, f64);

    fn central(&self, t: f64) -> f64 {
        let (lo, hi) = self.bounds(t);
        0.5 * (lo + hi)
    }
}

/// The root of a generating equation, both as `x` and as `t = -ln x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratingRoot {
    /// Root of the central series.
    pub x: f64,
    /// Interval for the true root implied by the coefficient and tail errors.
    pub x_lower: f64,
    pub x_upper: f64,
    pub rate: f64,
    pub rate_lower: f64,
    pub rate_upper: f64,
}

/// No root in `(0, 1]`: even the upper bound on `G(1)` stays below one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoRoot {
    /// Upper bound on the series at `x = 1`.
    pub value_at_one: f64,
}

fn bisect(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    // smallest t with f(t) <= 1, f nonincreasing, f(0) >= 1 assumed
    if f(0.0) <= 1.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while f(hi) > 1.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (v - 1.0).abs() <= tol && hi - lo <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solve `G(t) = 1` for the rate `t >= 0`.
///
/// `tol` is the target residual of the central series. When the central
/// series at `t = 0` is below one but the upper bound is not, the central
/// root is reported as `t = 0`.
pub fn solve_rate(series: &dyn GeneratingSeries, tol: f64) -> std::result::Result<GeneratingRoot, NoRoot> {
    let (lo0, hi0) = series.bounds(0.0);
    if hi0 < 1.0 {
        return Err(NoRoot { value_at_one: hi0 });
    }
    let upper_fn = |t: f64| series.bounds(t).1;
    let lower_fn = |t: f64| series.bounds(t).0;
    let rate_upper = bisect(upper_fn, tol);
    let rate_lower = if lo0 <= 1.0 { 0.0 } else { bisect(lower_fn, tol) };
    let rate = bisect(|t| series.central(t), tol).clamp(rate_lower, rate_upper);
    Ok(GeneratingRoot {
        x: (-rate).exp(),
        x_lower: (-rate_upper).exp(),
        x_upper: (-rate_lower).exp(),
        rate,
        rate_lower,
        rate_upper,
    })
}

/// Simple form: explicit coefficients `coeff(1..=n_max)` plus a bound on
/// the omitted tail at `x = 1`, which also bounds it for every `x <= 1`.
pub fn solve_generating_equation(
    coeff: impl Fn(usize) -> f64,
    truncation: SeriesTruncation,
    tol: f64,
) -> Result<std::result::Result<GeneratingRoot, NoRoot>> {
    if truncation.n_max == 0 {
        return Err(usage("n_max must be positive"));
    }
    if !(truncation.tail_bound >= 0.0) || !(tol > 0.0) {
        return Err(usage("tail bound must be nonnegative and tol positive"));
    }
    let coeffs: Vec<f64> = (1..=truncation.n_max).map(coeff).collect();
    if coeffs.iter().any(|c| !(*c >= 0.0)) {
        return Err(domain("coefficients must be nonnegative"));
    }
    let series = TabulatedSeries::new(coeffs).with_flat_tail(truncation.tail_bound);
    let root = match solve_rate(&series, tol) {
        Ok(r) => r,
        Err(e) => return Ok(Err(e)),
    };
    // the truncated series alone is the lower envelope; report its root
    Ok(Ok(root_of_truncated(&series, root, tol)))
}

fn root_of_truncated(series: &TabulatedSeries, mut root: GeneratingRoot, tol: f64) -> GeneratingRoot {
    let rate = bisect(|t| series.truncated(t), tol);
    root.rate = rate.clamp(root.rate_lower, root.rate_upper);
    root.x = (-root.rate).exp();
    root
}

/// Coefficients that behave like `A n^-p (1 + b/n + O(n^-2))` for large `n`.
///
/// For `n >= first`, `c_n` must lie in `[lo(n), hi(n)]` with
/// `lo(n) = A n^-p (1 + b/n)` and `hi(n) = A n^-p (1 + b/n + e/n^2)`,
/// `b, e >= 0`; both envelopes are then nonincreasing in `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawTail {
    pub amplitude: f64,
    pub power: f64,
    pub b: f64,
    pub e: f64,
    /// Relative uncertainty of the amplitude itself.
    pub spread: f64,
    /// Relative growth of the summation blocks; smaller is tighter.
    pub block_growth: f64,
}

impl PowerLawTail {
    pub fn new(amplitude: f64, power: f64, b: f64, e: f64) -> Self {
        debug_assert!(amplitude >= 0.0 && b >= 0.0 && e >= 0.0);
        PowerLawTail { amplitude, power, b, e, spread: 0.0, block_growth: 2e-4 }
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.spread = spread;
        self
    }

    fn lo(&self, n: f64) -> f64 {
        (1.0 - self.spread) * self.amplitude * n.powf(-self.power) * (1.0 + self.b / n)
    }

    fn hi(&self, n: f64) -> f64 {
        (1.0 + self.spread) * self.amplitude * n.powf(-self.power) * (1.0 + self.b / n + self.e / (n * n))
    }

    /// Central estimate of a single coefficient.
    pub fn central_coeff(&self, n: f64) -> f64 {
        self.amplitude * n.powf(-self.power) * (1.0 + self.b / n + 0.5 * self.e / (n * n))
    }

    /// Bound on `sum_{n >= first} hi(n)` at `x = 1`; infinite for `p <= 1`.
    fn sum_at_one_upper(&self, first: usize) -> f64 {
        let p = self.power;
        if p <= 1.0 {
            return f64::INFINITY;
        }
        let m = first - 1;
        let t0 = power_tail_bounds(p, m).1;
        let t1 = power_tail_bounds(p + 1.0, m).1;
        let t2 = power_tail_bounds(p + 2.0, m).1;
        (1.0 + self.spread) * self.amplitude * (t0 + self.b * t1 + self.e * t2)
    }

    fn sum_at_one_lower(&self, first: usize) -> f64 {
        let p = self.power;
        if p <= 1.0 {
            return f64::INFINITY;
        }
        let m = first - 1;
        let t0 = power_tail_bounds(p, m).0;
        let t1 = power_tail_bounds(p + 1.0, m).0;
        (1.0 - self.spread) * self.amplitude * (t0 + self.b * t1)
    }

    /// `(lo, hi)` for `sum_{n >= first} c_n exp(-t n)`.
    pub fn bounds(&self, first: usize, t: f64) -> (f64, f64) {
        if self.amplitude == 0.0 {
            return (0.0, 0.0);
        }
        if t <= 0.0 {
            return (self.sum_at_one_lower(first), self.sum_at_one_upper(first));
        }
        let eta = self.block_growth;
        let mut lo_sum = 0.0;
        let mut hi_sum = 0.0;
        let mut n1 = first as f64;
        let q = -t; // log of x
        let denom = -(-t).exp_m1(); // 1 - x
        loop {
            // remainder bound from n1 on
            let geo_rest = self.hi(n1) * (q * n1).exp() / denom;
            let rest = geo_rest.min(self.sum_at_one_upper(n1 as usize));
            if rest <= 1e-18 * hi_sum || rest == 0.0 || n1 > 1e17 {
                hi_sum += rest;
                break;
            }
            let len = (n1 * eta).floor().max(1.0);
            let n2 = n1 + len - 1.0;
            // sum_{n=n1}^{n2} x^n = x^n1 (1 - x^len) / (1 - x)
            let geo = (q * n1).exp() * (-(q * len).exp_m1()) / denom;
            lo_sum += self.lo(n2) * geo;
            hi_sum += self.hi(n1) * geo;
            n1 = n2 + 1.0;
        }
        (lo_sum, hi_sum)
    }
}

/// Explicit coefficients `c_1..c_M` with optional per-coefficient absolute
/// errors, completed by a tail model for `n > M`.
#[derive(Debug, Clone)]
pub struct TabulatedSeries {
    coeffs: Vec<f64>,
    errors: Option<Vec<f64>>,
    tail: Tail,
}

#[derive(Debug, Clone)]
enum Tail {
    None,
    /// Bound on the tail at x = 1, used for every x.
    Flat(f64),
    Power(PowerLawTail),
}

impl TabulatedSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        TabulatedSeries { coeffs, errors: None, tail: Tail::None }
    }

    pub fn with_errors(mut self, errors: Vec<f64>) -> Self {
        assert_eq!(errors.len(), self.coeffs.len());
        self.errors = Some(errors);
        self
    }

    pub fn with_flat_tail(mut self, bound: f64) -> Self {
        self.tail = Tail::Flat(bound);
        self
    }

    pub fn with_power_tail(mut self, tail: PowerLawTail) -> Self {
        self.tail = Tail::Power(tail);
        self
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn weighted(&self, t: f64, v: &[f64]) -> f64 {
        // smallest terms last matter little here; refresh x^n periodically
        let x = (-t).exp();
        let mut s = 0.0;
        let mut xn = x;
        for (i, c) in v.iter().enumerate() {
            let n = i + 1;
            if n % 256 == 0 {
                xn = (-t * n as f64).exp();
            }
            s += c * xn;
            xn *= x;
        }
        s
    }

    /// Explicit part only.
    pub fn truncated(&self, t: f64) -> f64 {
        self.weighted(t, &self.coeffs)
    }

    fn explicit_error(&self, t: f64) -> f64 {
        let rounding = 1e-15 * self.coeffs.len() as f64;
        let main = self.truncated(t);
        let coeff_err = match &self.errors {
            Some(e) => self.weighted(t, e),
            None => 0.0,
        };
        coeff_err + rounding * main
    }

    fn tail_bounds(&self, t: f64) -> (f64, f64) {
        match &self.tail {
            Tail::None => (0.0, 0.0),
            Tail::Flat(b) => (0.0, *b),
            Tail::Power(p) => p.bounds(self.coeffs.len() + 1, t),
        }
    }
}

impl GeneratingSeries for TabulatedSeries {
    fn bounds(&self, t: f64) -> (f64, f64) {
        let main = self.truncated(t);
        let err = self.explicit_error(t);
        let (tl, th) = self.tail_bounds(t);
        ((main - err).max(0.0) + tl, main + err + th)
    }

    fn central(&self, t: f64) -> f64 {
        let main = self.truncated(t);
        match &self.tail {
            Tail::None => main,
            Tail::Flat(_) => main,
            Tail::Power(_) => {
                let (tl, th) = self.tail_bounds(t);
                main + 0.5 * (tl + th)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(coeff: impl Fn(usize) -> f64, n_max: usize, tail: f64) -> std::result::Result<GeneratingRoot, NoRoot> {
        solve_generating_equation(coeff, SeriesTruncation { n_max, tail_bound: tail }, 1e-13).unwrap()
    }

    #[test]
    fn single_unit_coefficient_gives_x_one() {
        let r = solve(|n| if n == 1 { 1.0 } else { 0.0 }, 10, 0.0).unwrap();
        assert!((r.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_example() {
        // sum 2 (x/2)^n = 1  =>  x = 2/3
        let r = solve(|n| 2.0 * 0.5f64.powi(n as i32), 200, 0.0).unwrap();
        assert!((r.x - 2.0 / 3.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn subcritical_is_no_root() {
        let r = solve(|n| if n == 1 { 0.9 } else { 0.0 }, 5, 0.0);
        assert!(r.is_err());
    }

    #[test]
    fn tail_widens_interval_not_root() {
        let r = solve(|n| 2.0 * 0.5f64.powi(n as i32), 30, 1e-6).unwrap();
        assert!(r.x_lower <= r.x && r.x <= r.x_upper);
        assert!(r.x_upper - r.x_lower > 0.0);
        assert!(r.x_lower <= 2.0 / 3.0 && 2.0 / 3.0 <= r.x_upper);
    }

    #[test]
    fn power_tail_bracket_contains_direct_sum() {
        for p in [1.5, 2.0, 2.5, 4.0] {
            let m = 50;
            let direct: f64 = (m + 1..2_000_000).rev().map(|n| (n as f64).powf(-p)).sum::<f64>()
                + power_tail_bounds(p, 2_000_000 - 1).0;
            let (lo, hi) = power_tail_bounds(p, m);
            assert!(lo <= direct && direct <= hi, "p={p} {lo} {direct} {hi}");
        }
    }

    #[test]
    fn power_law_tail_bounds_match_direct_sums() {
        let tail = PowerLawTail::new(0.3, 1.5, 0.2, 0.5);
        for t in [0.0, 1e-4, 1e-2, 0.3] {
            let first = 100;
            let mut direct_lo: f64 =
                (first..3_000_000).map(|n| tail.lo(n as f64) * (-t * n as f64).exp()).sum();
            if t == 0.0 {
                direct_lo += tail.sum_at_one_lower(3_000_000);
            }
            let direct_hi: f64 =
                (first..3_000_000).map(|n| tail.hi(n as f64) * (-t * n as f64).exp()).sum();
            let (lo, hi) = tail.bounds(first, t);
            assert!(lo <= direct_lo * (1.0 + 1e-12), "t={t} lo {lo} vs {direct_lo}");
            // the direct sum misses n >= 3e6, so only compare where that is negligible
            if t > 0.0 {
                assert!(hi >= direct_hi * (1.0 - 1e-12), "t={t} hi {hi} vs {direct_hi}");
                assert!((hi - lo) / hi < 2e-3);
            }
        }
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        let r = solve_generating_equation(|_| 1.0, SeriesTruncation { n_max: 3, tail_bound: 0.0 }, 0.0);
        assert!(r.is_err());
    }
}
