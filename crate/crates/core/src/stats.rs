use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative rounding allowance used when comparing against exact values.
pub const ROUNDING: f64 = 1e-12;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// Mean and standard error of `values`, reduced sequentially in index
    /// order so the result does not depend on how they were produced.
    pub fn from_values(values: &[f64]) -> Estimate {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Estimate { mean, std_error: f64::NAN, samples: n };
        }
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Estimate { mean, std_error: (var / n as f64).sqrt(), samples: n }
    }

    /// True when `x` lies within `k` standard errors of the mean, with a
    /// 1e-12 relative floor so zero-variance samples still match up to
    /// rounding.
    pub fn within(&self, x: f64, k: f64) -> bool {
        (self.mean - x).abs() <= k * self.std_error + ROUNDING * x.abs().max(self.mean.abs())
    }
}

/// Evaluates `f(0..samples)` on the rayon pool; output order is the index
/// order regardless of scheduling.
pub(crate) fn replicate<T: Send>(samples: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..samples as u64).into_par_iter().map(f).collect()
}
