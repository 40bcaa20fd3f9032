//! Real polynomials in one variable, monomial coefficients with the
//! constant term first. These drive the oscillatory phases and the
//! derivative-ratio cutoffs, so exact coefficient-level calculus matters
//! more than evaluation speed.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PolyError {
    #[error("degree {degree} exceeds the allowed bound {max}")]
    DegreeTooHigh { degree: usize, max: usize },
}

/// A real polynomial `c0 + c1 s + ... + cd s^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySpec {
    coeffs: Vec<f64>,
}

impl PolySpec {
    /// Trailing zero coefficients are stripped so that `degree` is honest;
    /// the zero polynomial is represented by a single zero coefficient.
    pub fn new(coeffs: &[f64]) -> Self {
        let mut c: Vec<f64> = coeffs.to_vec();
        while c.len() > 1 && c.last() == Some(&0.0) {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        PolySpec { coeffs: c }
    }

    pub fn zero() -> Self {
        PolySpec { coeffs: vec![0.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    pub fn derivative(&self) -> PolySpec {
        if self.coeffs.len() == 1 {
            return PolySpec::zero();
        }
        let d: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        PolySpec::new(&d)
    }

    /// k-th derivative as a polynomial.
    pub fn nth_derivative(&self, k: usize) -> PolySpec {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.derivative();
        }
        p
    }

    /// Coefficients of `p(a s)`.
    pub fn scale_arg(&self, a: f64) -> PolySpec {
        let mut pw = 1.0;
        let c: Vec<f64> = self
            .coeffs
            .iter()
            .map(|&ck| {
                let v = ck * pw;
                pw *= a;
                v
            })
            .collect();
        PolySpec::new(&c)
    }

    /// Coefficients of `a * p(s)`.
    pub fn scale(&self, a: f64) -> PolySpec {
        PolySpec::new(&self.coeffs.iter().map(|c| c * a).collect::<Vec<_>>())
    }

    /// Crude upper bound on the magnitude of any root (Cauchy bound).
    pub fn root_magnitude_bound(&self) -> f64 {
        let lead = *self.coeffs.last().unwrap();
        if lead == 0.0 {
            return 0.0;
        }
        1.0 + self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_coeff_diff(&self, other: &PolySpec) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or(0.0);
                let b = other.coeffs.get(k).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_and_derivatives() {
        let p = PolySpec::new(&[1.0, -2.0, 0.0, 3.0]); // 1 - 2s + 3s^3
        assert_eq!(p.degree(), 3);
        assert_relative_eq!(p.eval(2.0), 1.0 - 4.0 + 24.0);
        let dp = p.derivative();
        assert_eq!(dp.coeffs(), &[-2.0, 0.0, 9.0]);
        assert_eq!(p.nth_derivative(3).coeffs(), &[18.0]);
        assert_eq!(p.nth_derivative(4).coeffs(), &[0.0]);
    }

    #[test]
    fn trailing_zeros_stripped() {
        let p = PolySpec::new(&[0.5, 1.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
    }

    #[test]
    fn scaled_argument() {
        let p = PolySpec::new(&[0.0, 0.0, 1.0]); // s^2
        let q = p.scale_arg(2.0); // (2s)^2 = 4 s^2
        assert_eq!(q.coeffs(), &[0.0, 0.0, 4.0]);
        assert_relative_eq!(q.eval(3.0), p.eval(6.0));
    }
}
