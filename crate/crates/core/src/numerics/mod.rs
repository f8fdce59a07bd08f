//! Numeric substrate: log-domain weights, zeta values with certified tails,
//! generating-equation root finding and determinant routines.

mod linalg;
mod logweight;
mod series;
mod zeta;

pub use linalg::{
    banded_ldl_determinant, bareiss_determinant, dense_determinant, BandedMatrixSpec, LdlDeterminant,
};
pub use logweight::{log_sum_exp, LogWeight};
pub(crate) use logweight::log_sum_exp_raw;
pub use series::{
    power_tail_bounds, solve_generating_equation, solve_rate, GeneratingRoot, GeneratingSeries,
    NoRoot, PowerLawTail, SeriesTruncation, TabulatedSeries,
};
pub use zeta::{riemann_zeta, ZetaValue};

use serde::{Deserialize, Serialize};

/// A point estimate together with an enclosing interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracketed {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Bracketed {
    pub fn new(value: f64, lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper, "inverted bracket [{lower}, {upper}]");
        Bracketed { value, lower, upper }
    }

    pub fn exact(value: f64) -> Self {
        Bracketed { value, lower: value, upper: value }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// True when the two intervals intersect.
    pub fn overlaps(&self, other: &Bracketed) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }

    pub fn map_monotone_increasing(&self, f: impl Fn(f64) -> f64) -> Bracketed {
        Bracketed::new(f(self.value), f(self.lower), f(self.upper))
    }

    pub fn map_monotone_decreasing(&self, f: impl Fn(f64) -> f64) -> Bracketed {
        Bracketed::new(f(self.value), f(self.upper), f(self.lower))
    }
}
