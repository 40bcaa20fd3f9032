//! Gauss-Legendre panel quadrature shared by the integration-heavy modules.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::Mutex;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre polynomial P_n; the usual
    /// cos-based initial guesses converge in a handful of steps.
    fn build(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }
}

/// Value and derivative of the Legendre polynomial P_n at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

static RULES: Lazy<Mutex<HashMap<usize, &'static GaussRule>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Cached Gauss-Legendre rule of the given order.
pub fn gauss_rule(order: usize) -> &'static GaussRule {
    let mut map = RULES.lock().unwrap();
    map.entry(order)
        .or_insert_with(|| Box::leak(Box::new(GaussRule::build(order))))
}

/// Integrate a real function over `[a, b]` with a single Gauss panel.
pub fn gauss_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, order: usize) -> f64 {
    let rule = gauss_rule(order);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(c + h * x);
    }
    acc * h
}

/// Complex-valued counterpart of [`gauss_panel`].
pub fn gauss_panel_c(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, order: usize) -> Complex64 {
    let rule = gauss_rule(order);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += f(c + h * x) * *w;
    }
    acc * h
}

/// Composite rule: `panels` equal Gauss panels over `[a, b]`.
pub fn composite(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gauss_panel(f, a + i as f64 * h, a + (i + 1) as f64 * h, order))
        .sum()
}

/// Complex composite rule.
pub fn composite_c(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> Complex64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gauss_panel_c(f, a + i as f64 * h, a + (i + 1) as f64 * h, order))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_exactness() {
        // order-n Gauss is exact through degree 2n-1
        let f = |x: f64| 3.0 * x.powi(5) - x.powi(3) + 2.0 * x * x + 1.0;
        let exact = 2.0 * (2.0 / 3.0 + 1.0); // odd parts vanish on [-1,1]
        assert_relative_eq!(gauss_panel(&f, -1.0, 1.0, 3), exact, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let f = |x: f64| (-x * x).exp();
        let v = composite(&f, -8.0, 8.0, 16, 12);
        assert_relative_eq!(v, std::f64::consts::PI.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn complex_phase_integral() {
        // int_0^1 e^{ix} dx = sin 1 + i(1 - cos 1)
        let f = |x: f64| Complex64::new(0.0, x).exp();
        let v = composite_c(&f, 0.0, 1.0, 4, 10);
        assert_relative_eq!(v.re, 1.0_f64.sin(), epsilon = 1e-13);
        assert_relative_eq!(v.im, 1.0 - 1.0_f64.cos(), epsilon = 1e-13);
    }
}
