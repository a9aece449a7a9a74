use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The triple (n, s, p) that fixes every kernel exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub s: f64,
    pub p: f64,
}

impl Params {
    /// The product p·s.
    pub fn ps(&self) -> f64 {
        self.p * self.s
    }

    /// Exponent n + p·s of the singular kernel.
    pub fn kernel_exponent(&self) -> f64 {
        self.n as f64 + self.ps()
    }

    /// True when 1 < p < n/s, the range needed for projection bodies.
    pub fn in_projection_range(&self) -> bool {
        self.p > 1.0 && self.p < self.n as f64 / self.s
    }
}

/// Checks (n, s, p). With `need_projection_range` the strict range 1 < p < n/s
/// is enforced, otherwise only p ≥ 1.
pub fn validate_params(n: usize, s: f64, p: f64, need_projection_range: bool) -> Result<Params> {
    if !(1..=3).contains(&n) {
        return Err(Error::Param(format!("n = {n} must be 1, 2 or 3")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Param(format!("s = {s} must satisfy 0 < s < 1")));
    }
    if !p.is_finite() {
        return Err(Error::Param(format!("p = {p} must be finite")));
    }
    if need_projection_range {
        if p <= 1.0 {
            return Err(Error::Param(format!("p = {p} must satisfy p > 1")));
        }
        let bound = n as f64 / s;
        if p >= bound {
            return Err(Error::Param(format!(
                "p = {p} must satisfy p < n/s = {bound}"
            )));
        }
    } else if p < 1.0 {
        return Err(Error::Param(format!("p = {p} must satisfy p >= 1")));
    }
    Ok(Params { n, s, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_range_examples() {
        assert!(validate_params(2, 0.5, 2.0, true).is_ok());
        let err = validate_params(1, 0.5, 2.0, true).unwrap_err();
        assert!(err.to_string().contains("n/s"), "{err}");
        assert!(validate_params(1, 0.25, 2.0, true).is_ok());
    }

    #[test]
    fn seminorm_range_allows_large_p() {
        assert!(validate_params(1, 0.5, 2.0, false).is_ok());
        assert!(validate_params(1, 0.5, 1.0, false).is_ok());
        assert!(validate_params(1, 0.5, 0.5, false).is_err());
    }

    #[test]
    fn rejects_bad_s_and_n() {
        assert!(validate_params(2, 0.0, 2.0, false).is_err());
        assert!(validate_params(2, 1.0, 2.0, false).is_err());
        assert!(validate_params(4, 0.5, 2.0, false).is_err());
        assert!(validate_params(0, 0.5, 2.0, false).is_err());
    }

    #[test]
    fn derived_exponent_between_n_and_2n() {
        for &(n, s, p) in &[(1, 0.25, 2.0), (2, 0.5, 3.9), (3, 0.9, 1.1)] {
            let prm = validate_params(n, s, p, true).unwrap();
            let e = prm.kernel_exponent();
            assert!(e > n as f64 && e < 2.0 * n as f64);
        }
    }
}
