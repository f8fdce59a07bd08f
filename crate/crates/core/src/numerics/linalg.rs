use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::LogWeight;
use crate::error::{usage, Error, Result};

/// Determinant of a square matrix given as rows (LU with partial pivoting).
pub fn dense_determinant(rows: &[Vec<f64>]) -> Result<f64> {
    let n = rows.len();
    if n == 0 {
        return Ok(1.0);
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(usage(format!("matrix is not square ({n} rows)")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(n, n, &flat).determinant())
}

/// Exact determinant of an integer matrix by fraction-free elimination.
///
/// Every intermediate is itself a minor of the input, so i128 suffices for
/// the matrices this crate builds; overflow is reported, never wrapped.
pub fn bareiss_determinant(rows: &[Vec<i64>]) -> Result<i128> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(usage("matrix is not square"));
    }
    if n == 0 {
        return Ok(1);
    }
    let overflow = || Error::TooLarge("integer determinant overflows i128".into());
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = a[i][j]
                    .checked_mul(a[k][k])
                    .and_then(|x| a[i][k].checked_mul(a[k][j]).and_then(|y| x.checked_sub(y)))
                    .ok_or_else(overflow)?;
                a[i][j] = t / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

/// A symmetric band matrix given by its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrixSpec {
    pub dimension: usize,
    pub bandwidth: usize,
    pub entries: BTreeMap<(usize, usize), f64>,
}

impl BandedMatrixSpec {
    /// Builds the band from a function of `(i, j)` evaluated for `j - i` in
    /// `0..=bandwidth`; the lower triangle is mirrored.
    pub fn from_upper(dimension: usize, bandwidth: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = BTreeMap::new();
        for i in 0..dimension {
            for j in i..(i + bandwidth + 1).min(dimension) {
                let v = f(i, j);
                if v != 0.0 {
                    entries.insert((i, j), v);
                    entries.insert((j, i), v);
                }
            }
        }
        BandedMatrixSpec { dimension, bandwidth, entries }
    }

    pub fn identity(dimension: usize) -> Self {
        Self::from_upper(dimension, 1, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(usage("banded matrix must have positive dimension"));
        }
        for (&(i, j), &v) in &self.entries {
            if i >= self.dimension || j >= self.dimension {
                return Err(usage(format!("entry ({i},{j}) outside dimension {}", self.dimension)));
            }
            if i.abs_diff(j) > self.bandwidth {
                return Err(usage(format!("entry ({i},{j}) outside bandwidth {}", self.bandwidth)));
            }
            if self.get(j, i) != v {
                return Err(usage(format!("entries ({i},{j}) and ({j},{i}) differ")));
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dimension;
        let mut m = vec![vec![0.0; n]; n];
        for (&(i, j), &v) in &self.entries {
            m[i][j] = v;
        }
        m
    }
}

/// Outcome of a band LDL factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlDeterminant {
    /// `sum ln |d_i|`.
    pub log_abs_det: f64,
    /// Sign of the determinant.
    pub sign: f64,
    /// All pivots strictly positive.
    pub positive_definite: bool,
    pub pivots: Vec<f64>,
}

impl LdlDeterminant {
    /// The determinant as a log weight; `None` when it is negative.
    pub fn log_det(&self) -> Option<LogWeight> {
        (self.sign > 0.0).then(|| LogWeight::from_log(self.log_abs_det))
    }
}

/// `O(n w^2)` LDL^T factorization of a symmetric band matrix without
/// pivoting. A zero pivot aborts with `NotPositiveDefinite`.
pub fn banded_ldl_determinant(spec: &BandedMatrixSpec) -> Result<LdlDeterminant> {
    spec.validate()?;
    let n = spec.dimension;
    let w = spec.bandwidth;
    // l[i][k] holds L(i, i - k - 1) for k < w
    let mut l = vec![vec![0.0; w]; n];
    let mut d = vec![0.0; n];
    for j in 0..n {
        let lo = j.saturating_sub(w);
        let mut dj = spec.get(j, j);
        for k in lo..j {
            let ljk = l[j][j - k - 1];
            dj -= ljk * ljk * d[k];
        }
        if dj == 0.0 || !dj.is_finite() {
            return Err(Error::NotPositiveDefinite { row: j, pivot: dj });
        }
        d[j] = dj;
        for i in j + 1..(j + w + 1).min(n) {
            let lo_i = i.saturating_sub(w);
            let mut v = spec.get(i, j);
            for k in lo_i.max(lo)..j {
                v -= l[i][i - k - 1] * l[j][j - k - 1] * d[k];
            }
            l[i][i - j - 1] = v / dj;
        }
    }
    let mut log_abs_det = 0.0;
    let mut sign = 1.0;
    for &p in &d {
        log_abs_det += p.abs().ln();
        if p < 0.0 {
            sign = -sign;
        }
    }
    Ok(LdlDeterminant { log_abs_det, sign, positive_definite: d.iter().all(|&p| p > 0.0), pivots: d })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_examples() {
        assert_eq!(dense_determinant(&[vec![5.0, -3.0], vec![-3.0, 7.0]]).unwrap().round(), 26.0);
        assert_eq!(dense_determinant(&[vec![2.0]]).unwrap(), 2.0);
        assert!((dense_determinant(&[vec![6.0, -4.0], vec![-4.0, 6.0]]).unwrap() - 20.0).abs() < 1e-12);
        assert!(dense_determinant(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn bareiss_matches_cofactor() {
        assert_eq!(bareiss_determinant(&[vec![5, -3], vec![-3, 7]]).unwrap(), 26);
        assert_eq!(bareiss_determinant(&[vec![0, 1], vec![1, 0]]).unwrap(), -1);
        assert_eq!(bareiss_determinant(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]).unwrap(), 0);
        assert_eq!(bareiss_determinant(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 2]]).unwrap(), 6);
    }

    #[test]
    fn ldl_identity() {
        let r = banded_ldl_determinant(&BandedMatrixSpec::identity(5)).unwrap();
        assert_eq!(r.log_det().unwrap().ln(), 0.0);
        assert!(r.positive_definite);
    }

    #[test]
    fn ldl_tridiagonal_example() {
        // diagonal a_{i-1} + a_i, off-diagonal -a_i with a = (2, 3, 4)
        let a = [2.0, 3.0, 4.0];
        let spec = BandedMatrixSpec::from_upper(2, 1, |i, j| if i == j { a[i] + a[i + 1] } else { -a[j] });
        let r = banded_ldl_determinant(&spec).unwrap();
        assert!((r.log_det().unwrap().ln() - 26f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ldl_pentadiagonal_all_ones() {
        // pinned Laplacian matrix with all b_i = 1 and N = 3 (dimension 2)
        let spec = BandedMatrixSpec::from_upper(2, 2, |i, j| match j - i {
            0 => 6.0,
            1 => -4.0,
            _ => 1.0,
        });
        let r = banded_ldl_determinant(&spec).unwrap();
        assert!((r.log_det().unwrap().ln() - 20f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let spec = BandedMatrixSpec::from_upper(2, 1, |i, j| if i == j { 0.0 } else { 1.0 });
        assert!(matches!(banded_ldl_determinant(&spec), Err(Error::NotPositiveDefinite { row: 0, .. })));
    }

    #[test]
    fn asymmetric_spec_rejected() {
        let mut spec = BandedMatrixSpec::identity(3);
        spec.entries.insert((0, 1), 0.5);
        assert!(banded_ldl_determinant(&spec).is_err());
    }
}
