//! The two phase functions of the oscillatory kernel and their closed-form
//! derivatives.
//!
//! With a real polynomial `p` of degree at most `n`, the kernel of the
//! singular oscillatory operator is built from
//!
//! ```text
//! beta(s)    = (1 + s^2/4)^(1/2)
//! Psi(x, y)  = (x1 - y1)(x2^2 + y2^2) - (x2 - y2) p(x1 + y1)
//! Xi(x, y)   = x2 + y2 + p'(x1 + y1)
//! theta(x,y) = beta(x1 - y1) |Xi(x, y)| (x2 - y2)
//! ```
//!
//! The derivative formulas below are valid away from the set `Xi = 0`
//! (where `theta` loses smoothness); `sgn(0)` is taken as `0`.

use crate::poly::PolySpec;

pub fn beta(s: f64) -> f64 {
    (1.0 + 0.25 * s * s).sqrt()
}

pub fn beta_prime(s: f64) -> f64 {
    s / (4.0 * beta(s))
}

pub fn beta_second(s: f64) -> f64 {
    let b = beta(s);
    1.0 / (4.0 * b * b * b)
}

pub fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn psi(x: [f64; 2], y: [f64; 2], p: &PolySpec) -> f64 {
    (x[0] - y[0]) * (x[1] * x[1] + y[1] * y[1]) - (x[1] - y[1]) * p.eval(x[0] + y[0])
}

pub fn xi(x: [f64; 2], y: [f64; 2], dp: &PolySpec) -> f64 {
    x[1] + y[1] + dp.eval(x[0] + y[0])
}

pub fn theta(x: [f64; 2], y: [f64; 2], p: &PolySpec) -> f64 {
    let dp = p.derivative();
    beta(x[0] - y[0]) * xi(x, y, &dp).abs() * (x[1] - y[1])
}

/// Precomputed derivative stack of `p`, shared by the formulas below.
#[derive(Debug, Clone)]
pub struct PhaseJet {
    pub p: PolySpec,
    pub dp: PolySpec,
    pub d2p: PolySpec,
    pub d3p: PolySpec,
}

impl PhaseJet {
    pub fn new(p: &PolySpec) -> Self {
        PhaseJet {
            p: p.clone(),
            dp: p.derivative(),
            d2p: p.nth_derivative(2),
            d3p: p.nth_derivative(3),
        }
    }

    pub fn psi(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        psi(x, y, &self.p)
    }

    pub fn xi(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        xi(x, y, &self.dp)
    }

    pub fn theta(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        beta(x[0] - y[0]) * self.xi(x, y).abs() * (x[1] - y[1])
    }

    pub fn psi_x1(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        2.0 * x[1] * x[1] - (x[1] - y[1]) * self.xi(x, y)
    }

    pub fn psi_x2(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        2.0 * x[1] * (x[0] - y[0]) - self.p.eval(x[0] + y[0])
    }

    pub fn theta_x1(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let s = x[0] - y[0];
        let xiv = self.xi(x, y);
        (x[1] - y[1])
            * (beta_prime(s) * xiv.abs()
                + beta(s) * self.d2p.eval(x[0] + y[0]) * sgn(xiv))
    }

    pub fn theta_x2(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let xiv = self.xi(x, y);
        beta(x[0] - y[0]) * (2.0 * x[1] + self.dp.eval(x[0] + y[0])) * sgn(xiv)
    }

    pub fn psi_x1y1(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        -(x[1] - y[1]) * self.d2p.eval(x[0] + y[0])
    }

    pub fn theta_x1y1(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let s = x[0] - y[0];
        let xiv = self.xi(x, y);
        (x[1] - y[1])
            * (beta(s) * self.d3p.eval(x[0] + y[0]) * sgn(xiv) - beta_second(s) * xiv.abs())
    }

    pub fn psi_x1y2(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        2.0 * y[1] + self.dp.eval(x[0] + y[0])
    }

    pub fn psi_x2y1(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        -(2.0 * x[1] + self.dp.eval(x[0] + y[0]))
    }

    pub fn theta_x1y2(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let s = x[0] - y[0];
        let u = x[0] + y[0];
        let xiv = self.xi(x, y);
        (-beta(s) * self.d2p.eval(u) - beta_prime(s) * (2.0 * y[1] + self.dp.eval(u))) * sgn(xiv)
    }

    pub fn theta_x2y1(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let s = x[0] - y[0];
        let u = x[0] + y[0];
        let xiv = self.xi(x, y);
        (beta(s) * self.d2p.eval(u) - beta_prime(s) * (2.0 * x[1] + self.dp.eval(u))) * sgn(xiv)
    }

    /// Third-order mixed derivative of `Psi`; identically `-2`.
    pub fn psi_x2x2y1(&self, _x: [f64; 2], _y: [f64; 2]) -> f64 {
        -2.0
    }

    pub fn theta_x2x2y1(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        -2.0 * beta_prime(x[0] - y[0]) * sgn(self.xi(x, y))
    }

    /// `Psi` and `theta` are jointly affine in `(x2, y2)` once the other
    /// variables are frozen, so the mixed `x2 y2` derivatives vanish.
    pub fn psi_x2y2(&self, _x: [f64; 2], _y: [f64; 2]) -> f64 {
        0.0
    }

    pub fn theta_x2y2(&self, _x: [f64; 2], _y: [f64; 2]) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psi_vanishes_on_diagonal_and_is_antisymmetric() {
        let p = PolySpec::new(&[0.3, -1.0, 0.0, 0.5]);
        let x = [1.3, -0.4];
        let y = [0.2, 2.1];
        assert_eq!(psi(x, x, &p), 0.0);
        assert_eq!(theta(x, x, &p), 0.0);
        assert_relative_eq!(psi(x, y, &p), -psi(y, x, &p), epsilon = 1e-12);
    }

    #[test]
    fn beta_asymptotics() {
        // |beta(s) - |s|/2| = 2/(2 beta(s) + |s|) <= 1/|s|
        for &s in &[1.0, 10.0, 100.0] {
            let gap = (beta(s) - s / 2.0).abs();
            assert_relative_eq!(gap, 2.0 / (2.0 * beta(s) + s), epsilon = 1e-12);
            assert!(gap <= 1.0 / s);
        }
    }

    #[test]
    fn beta_derivative_bound() {
        for &s in &[-7.0, -0.5, 0.0, 2.0, 40.0] {
            assert!((beta_prime(s) - 0.5 * sgn(s)).abs() <= 4.0 / (4.0 + s * s) + 1e-15);
        }
    }
}
