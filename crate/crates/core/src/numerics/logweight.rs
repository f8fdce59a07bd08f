//! Nonnegative reals carried as natural logarithms.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign};

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

/// A nonnegative real number stored as its natural logarithm.
///
/// `log_value == -inf` encodes zero. Multiplication adds logs, addition is a
/// two-term log-sum-exp, so partition values that grow or decay like
/// `exp(c N)` never overflow.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogWeight {
    log_value: f64,
}

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight { log_value: f64::NEG_INFINITY };
    pub const ONE: LogWeight = LogWeight { log_value: 0.0 };

    pub fn from_log(log_value: f64) -> Self {
        debug_assert!(!log_value.is_nan(), "NaN log weight");
        LogWeight { log_value }
    }

    /// Panics in debug builds if `value` is negative.
    pub fn from_value(value: f64) -> Self {
        debug_assert!(value >= 0.0, "negative weight {value}");
        LogWeight { log_value: value.ln() }
    }

    pub fn ln(self) -> f64 {
        self.log_value
    }

    /// The plain value; overflows to `inf` for logs above ~709.
    pub fn value(self) -> f64 {
        self.log_value.exp()
    }

    pub fn is_zero(self) -> bool {
        self.log_value == f64::NEG_INFINITY
    }

    /// `self^k`; `x^0 = 1` even for `x = 0`.
    pub fn powi(self, k: u32) -> Self {
        if k == 0 {
            LogWeight::ONE
        } else {
            LogWeight { log_value: self.log_value * k as f64 }
        }
    }

    /// `self^p` for real `p > 0`.
    pub fn powf(self, p: f64) -> Self {
        debug_assert!(p > 0.0);
        LogWeight { log_value: self.log_value * p }
    }
}

impl fmt::Debug for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogWeight(ln = {})", self.log_value)
    }
}

impl PartialOrd for LogWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.log_value.partial_cmp(&other.log_value)
    }
}

impl Add for LogWeight {
    type Output = LogWeight;

    fn add(self, rhs: LogWeight) -> LogWeight {
        let (hi, lo) = if self.log_value >= rhs.log_value {
            (self.log_value, rhs.log_value)
        } else {
            (rhs.log_value, self.log_value)
        };
        if lo == f64::NEG_INFINITY {
            return LogWeight { log_value: hi };
        }
        LogWeight { log_value: hi + (lo - hi).exp().ln_1p() }
    }
}

impl AddAssign for LogWeight {
    fn add_assign(&mut self, rhs: LogWeight) {
        *self = *self + rhs;
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;

    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            return LogWeight::ZERO;
        }
        LogWeight { log_value: self.log_value + rhs.log_value }
    }
}

impl MulAssign for LogWeight {
    fn mul_assign(&mut self, rhs: LogWeight) {
        *self = *self * rhs;
    }
}

impl Div for LogWeight {
    type Output = LogWeight;

    fn div(self, rhs: LogWeight) -> LogWeight {
        debug_assert!(!rhs.is_zero(), "division by zero weight");
        if self.is_zero() {
            return LogWeight::ZERO;
        }
        LogWeight { log_value: self.log_value - rhs.log_value }
    }
}

impl std::iter::Sum for LogWeight {
    fn sum<I: Iterator<Item = LogWeight>>(iter: I) -> LogWeight {
        let logs: Vec<f64> = iter.map(LogWeight::ln).collect();
        LogWeight::from_log(log_sum_exp_raw(&logs))
    }
}

impl std::iter::Product for LogWeight {
    fn product<I: Iterator<Item = LogWeight>>(iter: I) -> LogWeight {
        iter.fold(LogWeight::ONE, |acc, w| acc * w)
    }
}

/// `log(sum(exp(v)))` over raw log values; `-inf` for an empty slice.
pub(crate) fn log_sum_exp_raw(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = logs.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln()
}

/// Stable `log(sum(exp(v_i)))` of a nonempty list of weights.
pub fn log_sum_exp(values: &[LogWeight]) -> Result<LogWeight> {
    if values.is_empty() {
        return Err(usage("log_sum_exp of an empty list"));
    }
    Ok(values.iter().copied().sum())
}
