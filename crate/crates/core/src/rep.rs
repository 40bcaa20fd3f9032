//! Characters, induced representations and the Plancherel isometry of the
//! distinguished solvable subgroup, together with the explicit
//! oscillatory kernel of the transformed convolution operators.
//!
//! Points of the subgroup are written `(b, u, t)` with `u` in the span of
//! the first `n+1` coordinates of `R^{2n}`; its product is
//!
//! ```text
//! (b, u, t)(b', u', t') = (b + b', u + P(b) u', t + t' + u^T B P(b) u')
//! ```
//!
//! with `P(b)` the unipotent matrices of [`crate::group`]. The abelian
//! normal subgroup `{(0, w, s): w in V_n}` carries the characters
//!
//! ```text
//! chi_{eta,zeta}(0, w, s) = exp(i (-1)^n eta s + i <zeta, w>),
//! ```
//!
//! and the representation induced from a character acts on functions of
//! the complementary slice `(c, v)`: a translation by `(b, u_{n+1})`
//! times two explicit unimodular phase factors ([`pi_apply`]). Slicing a
//! function against a character ([`plancherel_slice_at`]) is, fiber by
//! fiber, a Euclidean Fourier transform, and summing the sliced masses
//! over a frequency grid reproduces the squared norm — the Plancherel
//! identity probed by [`parseval_probe`].
//!
//! Finally [`dr_kernel`] gives the integral kernel of the compactly
//! truncated convolution operator after conjugation by the standard
//! multiplier: a singular oscillatory kernel which matches `pi` times
//! the kernel family of [`crate::oscillator`] with coupling `n/2` and
//! phase polynomial [`p_from_zeta`].

use crate::group::{alpha_coeffs, binomial, GroupElement, HeisenbergPoint, SL2Element};
use crate::phase;
use crate::poly::PolySpec;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RepError {
    #[error("zeta has length {len}, expected n = {n}")]
    BadZetaLength { len: usize, n: usize },
    #[error("u-vector has length {len}, expected n + 1 = {expected}")]
    BadVectorLength { len: usize, expected: usize },
    #[error("dimension mismatch between elements: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("the explicit kernel requires |eta| = 1, got {eta}")]
    EtaNotUnit { eta: f64 },
}

/// Frequency parameters `(eta, zeta)` of a character.
#[derive(Debug, Clone)]
pub struct RepParams {
    pub n: usize,
    pub eta: f64,
    pub zeta: Vec<f64>,
}

impl RepParams {
    pub fn new(n: usize, eta: f64, zeta: Vec<f64>) -> Result<Self, RepError> {
        if zeta.len() != n {
            return Err(RepError::BadZetaLength { len: zeta.len(), n });
        }
        Ok(RepParams { n, eta, zeta })
    }

    fn sign(&self) -> f64 {
        if self.n % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// `chi(w, s) = exp(i (-1)^n eta s + i <zeta, w>)`.
pub fn chi(params: &RepParams, w: &[f64], s: f64) -> Complex64 {
    debug_assert_eq!(w.len(), params.n);
    let inner: f64 = params.zeta.iter().zip(w).map(|(z, wi)| z * wi).sum();
    Complex64::from_polar(1.0, params.sign() * params.eta * s + inner)
}

// ---------------------------------------------------------------------------
// The subgroup

/// `(b, u, t)` with `u` of length `n + 1` (coordinates in `V_{n+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct H0Element {
    pub b: f64,
    pub u: Vec<f64>,
    pub t: f64,
}

impl H0Element {
    pub fn new(b: f64, u: Vec<f64>, t: f64, n: usize) -> Result<Self, RepError> {
        if u.len() != n + 1 {
            return Err(RepError::BadVectorLength { len: u.len(), expected: n + 1 });
        }
        Ok(H0Element { b, u, t })
    }

    pub fn identity(n: usize) -> Self {
        H0Element { b: 0.0, u: vec![0.0; n + 1], t: 0.0 }
    }

    /// The slice point `sigma(c, v) = (c, v e_{n+1}, 0)`.
    pub fn sigma(c: f64, v: f64, n: usize) -> Self {
        let mut u = vec![0.0; n + 1];
        u[n] = v;
        H0Element { b: c, u, t: 0.0 }
    }

    fn n(&self) -> usize {
        self.u.len() - 1
    }
}

/// `P(b)` applied to a vector supported on the first `n + 1` coordinates;
/// upper triangularity keeps the image there.
fn apply_p(b: f64, n: usize, x: &[f64]) -> Vec<f64> {
    let alpha = alpha_coeffs(n);
    let len = x.len();
    let mut out = vec![0.0; len];
    for i in 1..=len {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate().take(len).skip(i - 1) {
            let j = j + 1;
            if *xj == 0.0 {
                continue;
            }
            acc += alpha[j - 1] / alpha[i - 1]
                * binomial(j as i64 - 1, (j - i) as i64)
                * b.powi((j - i) as i32)
                * xj;
        }
        out[i - 1] = acc;
    }
    out
}

/// `u^T B w` for vectors supported on `V_{n+1}`: only the middle pair of
/// coordinates survives the alternating form.
fn pairing(u: &[f64], w: &[f64], n: usize) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * (u[n] * w[n - 1] - u[n - 1] * w[n])
}

pub fn h0_compose(g: &H0Element, h: &H0Element) -> Result<H0Element, RepError> {
    let n = g.n();
    if h.n() != n {
        return Err(RepError::DimensionMismatch { a: n, b: h.n() });
    }
    let pw = apply_p(g.b, n, &h.u);
    let t = g.t + h.t + pairing(&g.u, &pw, n);
    let u: Vec<f64> = g.u.iter().zip(&pw).map(|(a, b)| a + b).collect();
    Ok(H0Element { b: g.b + h.b, u, t })
}

pub fn h0_inverse(g: &H0Element) -> H0Element {
    let n = g.n();
    let pu = apply_p(-g.b, n, &g.u);
    H0Element { b: -g.b, u: pu.iter().map(|v| -v).collect(), t: -g.t }
}

/// Embedding into the ambient group (the unipotent slice of `SL(2,R)`).
pub fn h0_to_group(g: &H0Element, n: usize) -> GroupElement {
    let mut u = nalgebra::DVector::zeros(2 * n);
    for (i, v) in g.u.iter().enumerate() {
        u[i] = *v;
    }
    GroupElement {
        a: SL2Element::shear(g.b),
        h: HeisenbergPoint { u, t: g.t },
        n,
    }
}

/// Unique factorization `x = sigma(c, v) z(w, s)`:
/// `c = b`, `v = u_{n+1}`, `w = P(-b) proj u`, `s = t - (-1)^n u_{n+1} u_n`.
pub fn h0_decompose(x: &H0Element) -> ((f64, f64), (Vec<f64>, f64)) {
    let n = x.n();
    let mut proj = x.u[..n].to_vec();
    proj.push(0.0);
    let w_full = apply_p(-x.b, n, &proj);
    let w = w_full[..n].to_vec();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let s = x.t - sign * x.u[n] * x.u[n - 1];
    ((x.b, x.u[n]), (w, s))
}

// ---------------------------------------------------------------------------
// The induced representation on the slice

/// A function on the slice `(c, v)`, with a support box for grid-based
/// norms.
pub struct StateFunction {
    pub eval: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
    pub c_half: f64,
    pub v_half: f64,
}

impl StateFunction {
    pub fn new(
        eval: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
        c_half: f64,
        v_half: f64,
    ) -> Self {
        StateFunction { eval: Arc::new(eval), c_half, v_half }
    }

    pub fn eval_at(&self, c: f64, v: f64) -> Complex64 {
        (self.eval)(c, v)
    }
}

/// Action of `(b, u, t)` on a slice function:
///
/// ```text
/// (pi(g) xi)(c, v) = xi(c - b, v - u_{n+1})
///   * exp(i eta [(-1)^{n+1} t + n b (v - u_{n+1})^2 + u_n (2v - u_{n+1})])
///   * exp(i <zeta, P(-c)(v e_{n+1} - u) + P(b - c)(u_{n+1} - v) e_{n+1}>)
/// ```
pub fn pi_apply(g: &H0Element, xi: &StateFunction, params: &RepParams) -> Result<StateFunction, RepError> {
    let n = params.n;
    if g.n() != n {
        return Err(RepError::DimensionMismatch { a: g.n(), b: n });
    }
    let g = g.clone();
    let zeta = params.zeta.clone();
    let eta = params.eta;
    let sign = params.sign();
    let inner = move |vec: &[f64]| -> f64 {
        zeta.iter().zip(vec).map(|(z, x)| z * x).sum()
    };
    let xi_eval = xi.eval.clone();
    let c_half = xi.c_half + g.b.abs();
    let v_half = xi.v_half + g.u[n].abs();
    Ok(StateFunction {
        eval: Arc::new(move |c: f64, v: f64| {
            let un = g.u[n - 1];
            let un1 = g.u[n];
            let base = xi_eval(c - g.b, v - un1);
            // first phase: the Heisenberg frequency
            let ph1 = eta
                * (-sign * g.t + (n as f64) * g.b * (v - un1) * (v - un1)
                    + un * (2.0 * v - un1));
            // second phase: the zeta-pairing with two unipotent images
            let mut vec = vec![0.0; n + 1];
            for (i, gi) in g.u.iter().enumerate() {
                vec[i] = -gi;
            }
            vec[n] += v;
            let first = apply_p(-c, n, &vec);
            let mut e_n1 = vec![0.0; n + 1];
            e_n1[n] = un1 - v;
            let second = apply_p(g.b - c, n, &e_n1);
            let ph2 = inner(&first) + inner(&second);
            base * Complex64::from_polar(1.0, ph1 + ph2)
        }),
        c_half,
        v_half,
    })
}

// ---------------------------------------------------------------------------
// Plancherel machinery

/// Tensor trapezoid grid over the abelian fiber `(w, s)`.
#[derive(Debug, Clone)]
pub struct H1Grid {
    pub w_radius: f64,
    pub w_points: usize,
    pub s_radius: f64,
    pub s_points: usize,
}

impl Default for H1Grid {
    fn default() -> Self {
        H1Grid { w_radius: 6.0, w_points: 64, s_radius: 8.0, s_points: 64 }
    }
}

fn trapezoid_nodes(radius: f64, points: usize) -> Vec<(f64, f64)> {
    let h = 2.0 * radius / (points - 1) as f64;
    (0..points)
        .map(|k| {
            let x = -radius + k as f64 * h;
            let w = if k == 0 || k == points - 1 { 0.5 * h } else { h };
            (x, w)
        })
        .collect()
}

/// `Xi_chi(x) = int Xi(x z) conj(chi)(z) dz` over the abelian fiber,
/// evaluated at an arbitrary base point.
pub fn plancherel_slice_at(
    xi: &dyn Fn(&H0Element) -> Complex64,
    params: &RepParams,
    x: &H0Element,
    grid: &H1Grid,
) -> Complex64 {
    let n = params.n;
    let s_nodes = trapezoid_nodes(grid.s_radius, grid.s_points);
    let w_nodes = trapezoid_nodes(grid.w_radius, grid.w_points);
    // iterate the tensor grid over w in V_n
    let mut idx = vec![0usize; n];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let mut w = vec![0.0; n];
        let mut wt = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            w[d] = w_nodes[i].0;
            wt *= w_nodes[i].1;
        }
        for &(s, sw) in &s_nodes {
            let z = H0Element { b: 0.0, u: { let mut u = w.clone(); u.push(0.0); u }, t: s };
            let xz = h0_compose(x, &z).expect("dimensions agree");
            acc += xi(&xz) * chi(params, &w, s).conj() * (wt * sw);
        }
        // advance the multi-index
        let mut d = 0;
        loop {
            if d == n {
                return acc;
            }
            idx[d] += 1;
            if idx[d] < w_nodes.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Slice as a function on `(c, v)`.
pub fn plancherel_slice(
    xi: Arc<dyn Fn(&H0Element) -> Complex64 + Send + Sync>,
    params: &RepParams,
    grid: &H1Grid,
    c_half: f64,
    v_half: f64,
) -> StateFunction {
    let params = params.clone();
    let grid = grid.clone();
    let n = params.n;
    StateFunction {
        eval: Arc::new(move |c: f64, v: f64| {
            plancherel_slice_at(&*xi, &params, &H0Element::sigma(c, v, n), &grid)
        }),
        c_half,
        v_half,
    }
}

/// Configuration of the quadrature Plancherel check at `n = 1`.
#[derive(Debug, Clone)]
pub struct ParsevalConfig {
    pub b_width: f64,
    pub u1_width: f64,
    pub v_width: f64,
    pub t_width: f64,
    pub cv_points: usize,
    pub ws_points: usize,
    pub freq_points: usize,
}

impl Default for ParsevalConfig {
    fn default() -> Self {
        ParsevalConfig {
            b_width: 1.0,
            u1_width: 1.0,
            v_width: 0.5,
            t_width: 1.0,
            cv_points: 48,
            ws_points: 72,
            freq_points: 72,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParsevalReport {
    /// `int ||Xi_chi||^2 dchi / ||Xi||^2`; should be close to 1.
    pub ratio: f64,
    /// Largest boundary value of the frequency-side mass relative to its
    /// peak; certifies the frequency box captures the transform.
    pub edge_mass_ratio: f64,
}

/// Quadrature check of the Plancherel identity at `n = 1` for a separable
/// Gaussian bump: both sides are computed by independent quadratures (no
/// closed-form transforms are used).
pub fn parseval_probe(cfg: &ParsevalConfig) -> ParsevalReport {
    let gauss = |x: f64, w: f64| (-x * x / (2.0 * w * w)).exp();
    let bw = cfg.b_width;
    let uw = cfg.u1_width;
    let vw = cfg.v_width;
    let tw = cfg.t_width;
    // ||Xi||^2 by direct tensor quadrature
    let mass_1d = |w: f64, pts: usize| -> f64 {
        trapezoid_nodes(4.0 * w, pts)
            .iter()
            .map(|&(x, wt)| gauss(x, w).powi(2) * wt)
            .sum()
    };
    let denom = mass_1d(bw, 96) * mass_1d(uw, 96) * mass_1d(vw, 96) * mass_1d(tw, 96);

    // frequency boxes sized to the reciprocal widths plus the shear from
    // the group twist (the t-slot couples v and w)
    let eta_max = 8.0 / tw;
    let zeta_max = 8.0 / uw + eta_max * 4.0 * vw;
    let c_nodes = trapezoid_nodes(4.0 * bw, cfg.cv_points);
    let v_nodes = trapezoid_nodes(4.0 * vw, cfg.cv_points);
    let w_nodes = trapezoid_nodes(4.0 * uw, cfg.ws_points);
    let s_max = 4.0 * tw + 4.0 * vw * 4.0 * uw;
    let s_nodes = trapezoid_nodes(s_max, cfg.ws_points);
    let eta_nodes = trapezoid_nodes(eta_max, cfg.freq_points);
    let zeta_nodes = trapezoid_nodes(zeta_max, cfg.freq_points);

    // per (c, v): F[w][s] -> A[w][eta] -> Xi_chi[zeta][eta]
    let pairs: Vec<(usize, usize)> = (0..cfg.cv_points)
        .flat_map(|i| (0..cfg.cv_points).map(move |j| (i, j)))
        .collect();
    let phase_s: Vec<Vec<Complex64>> = eta_nodes
        .iter()
        .map(|&(eta, _)| {
            s_nodes
                .iter()
                // n = 1: conj(chi) carries exp(+i eta s)
                .map(|&(s, sw)| Complex64::from_polar(sw, eta * s))
                .collect()
        })
        .collect();
    let phase_w: Vec<Vec<Complex64>> = zeta_nodes
        .iter()
        .map(|&(z, _)| {
            w_nodes
                .iter()
                .map(|&(w, ww)| Complex64::from_polar(ww, -z * w))
                .collect()
        })
        .collect();

    let per_pair: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(ic, iv)| {
            let (c, cw) = c_nodes[ic];
            let (v, vwt) = v_nodes[iv];
            let fc = gauss(c, bw);
            let fv = gauss(v, vw);
            // fiber samples: Xi(c, w, v, s - v w)
            let fiber: Vec<Vec<f64>> = w_nodes
                .iter()
                .map(|&(w, _)| {
                    s_nodes
                        .iter()
                        .map(|&(s, _)| fc * fv * gauss(w, uw) * gauss(s - v * w, tw))
                        .collect()
                })
                .collect();
            // contract s -> eta
            let a: Vec<Vec<Complex64>> = (0..w_nodes.len())
                .map(|iw| {
                    phase_s
                        .iter()
                        .map(|ph| {
                            fiber[iw]
                                .iter()
                                .zip(ph)
                                .map(|(f, p)| p * *f)
                                .sum::<Complex64>()
                        })
                        .collect()
                })
                .collect();
            // contract w -> zeta and accumulate mass over the frequency grid
            let mut mass = 0.0;
            let mut edge: f64 = 0.0;
            let mut peak: f64 = 0.0;
            for (iz, pw) in phase_w.iter().enumerate() {
                for ie in 0..eta_nodes.len() {
                    let val: Complex64 = (0..w_nodes.len())
                        .map(|iw| pw[iw] * a[iw][ie])
                        .sum();
                    let m = val.norm_sqr();
                    peak = peak.max(m);
                    if iz == 0 || iz + 1 == phase_w.len() || ie == 0 || ie + 1 == eta_nodes.len()
                    {
                        edge = edge.max(m);
                    }
                    mass += m * eta_nodes[ie].1 * zeta_nodes[iz].1;
                }
            }
            (mass * cw * vwt, if peak > 0.0 { edge / peak } else { 0.0 })
        })
        .collect();

    let total: f64 = per_pair.iter().map(|p| p.0).sum();
    let edge_mass_ratio = per_pair.iter().map(|p| p.1).fold(0.0, f64::max);
    let two_pi = std::f64::consts::TAU;
    ParsevalReport { ratio: total / (two_pi * two_pi) / denom, edge_mass_ratio }
}

// ---------------------------------------------------------------------------
// The phase polynomial and the explicit kernel

/// `q(b) = n^{-1} <zeta, P(b) e_{n+1}>` as polynomial coefficients.
pub fn q_poly(params: &RepParams) -> PolySpec {
    let n = params.n;
    let alpha = alpha_coeffs(n);
    let mut coeffs = vec![0.0; n + 1];
    #[allow(clippy::needless_range_loop)]
    for k in 1..=n {
        let i = n + 1 - k;
        coeffs[k] = params.zeta[i - 1] * alpha[n] / alpha[i - 1]
            * binomial(n as i64, k as i64)
            / n as f64;
    }
    PolySpec::new(&coeffs)
}

/// `<zeta, P(b) e_n>` as polynomial coefficients; equals `q'` exactly.
pub fn q_prime_direct(params: &RepParams) -> PolySpec {
    let n = params.n;
    let alpha = alpha_coeffs(n);
    let mut coeffs = vec![0.0; n];
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        let i = n - k;
        coeffs[k] = params.zeta[i - 1] * alpha[n - 1] / alpha[i - 1]
            * binomial(n as i64 - 1, k as i64);
    }
    PolySpec::new(&coeffs)
}

/// `p(t) = 2 q(-t/2)`, the phase polynomial of the explicit kernel.
pub fn p_from_zeta(params: &RepParams) -> PolySpec {
    q_poly(params).scale_arg(-0.5).scale(2.0)
}

/// Integral kernel of the conjugated, truncated convolution operator for
/// a unit frequency `eta`:
///
/// ```text
/// K(x, y) = pi sin(beta(x1-y1)(x2-y2) |eta (x2+y2) + p'(x1+y1)|)
///           * exp(i n/2 [eta (x1-y1)(x2^2+y2^2) - (x2-y2) p(x1+y1)])
///           * [|x1-y1| <= R] / (beta(x1-y1)(x2-y2))
/// ```
///
/// with the diagonal `x2 = y2` extended by continuity.
pub fn dr_kernel(
    params: &RepParams,
    r: f64,
) -> Result<impl Fn([f64; 2], [f64; 2]) -> Complex64, RepError> {
    if (params.eta.abs() - 1.0).abs() > 1e-12 {
        return Err(RepError::EtaNotUnit { eta: params.eta });
    }
    let eta = params.eta;
    let n = params.n as f64;
    let p = p_from_zeta(params);
    let dp = p.derivative();
    Ok(move |x: [f64; 2], y: [f64; 2]| -> Complex64 {
        let d1 = x[0] - y[0];
        if d1.abs() > r {
            return Complex64::new(0.0, 0.0);
        }
        let w = x[1] - y[1];
        let bet = phase::beta(d1);
        let freq = (eta * (x[1] + y[1]) + dp.eval(x[0] + y[0])).abs();
        let ph = 0.5
            * n
            * (eta * d1 * (x[1] * x[1] + y[1] * y[1]) - w * p.eval(x[0] + y[0]));
        let osc = Complex64::from_polar(std::f64::consts::PI, ph);
        if w == 0.0 {
            osc * freq
        } else {
            osc * (bet * w * freq).sin() / (bet * w)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group;
    use crate::oscillator::{or_kernel, KernelSpec};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_params(rng: &mut ChaCha8Rng, n: usize) -> RepParams {
        RepParams::new(
            n,
            rng.gen_range(-2.0..2.0),
            (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        )
        .unwrap()
    }

    fn random_h0(rng: &mut ChaCha8Rng, n: usize) -> H0Element {
        H0Element {
            b: rng.gen_range(-1.0..1.0),
            u: (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            t: rng.gen_range(-1.0..1.0),
        }
    }

    #[test]
    fn character_basics() {
        let params = RepParams::new(2, 1.3, vec![0.5, -0.7]).unwrap();
        assert_eq!(chi(&params, &[0.0, 0.0], 0.0), Complex64::new(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let w = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let s = rng.gen_range(-3.0..3.0);
            assert_relative_eq!(chi(&params, &w, s).norm(), 1.0, epsilon = 1e-14);
        }
        // explicit value at n = 1
        let p1 = RepParams::new(1, 1.0, vec![2.0]).unwrap();
        let v = chi(&p1, &[0.5], PI);
        let expect = Complex64::from_polar(1.0, -PI + 1.0);
        assert!((v - expect).norm() < 1e-14);
    }

    #[test]
    fn subgroup_law_matches_ambient_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 1..=3 {
            for _ in 0..30 {
                let g = random_h0(&mut rng, n);
                let h = random_h0(&mut rng, n);
                let prod = h0_compose(&g, &h).unwrap();
                let ambient = group::compose(&h0_to_group(&g, n), &h0_to_group(&h, n)).unwrap();
                let diff = h0_to_group(&prod, n).max_abs_diff(&ambient);
                assert!(diff < 1e-10, "subgroup law off by {diff}");
                // inverse
                let inv = h0_inverse(&g);
                let e = h0_compose(&g, &inv).unwrap();
                let id = h0_to_group(&H0Element::identity(n), n);
                assert!(h0_to_group(&e, n).max_abs_diff(&id) < 1e-10);
            }
        }
    }

    #[test]
    fn slice_decomposition_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for n in 1..=3 {
            for _ in 0..30 {
                let x = random_h0(&mut rng, n);
                let ((c, v), (w, s)) = h0_decompose(&x);
                let sigma = H0Element::sigma(c, v, n);
                let mut wu = w.clone();
                wu.push(0.0);
                let z = H0Element { b: 0.0, u: wu, t: s };
                let back = h0_compose(&sigma, &z).unwrap();
                let diff = h0_to_group(&back, n).max_abs_diff(&h0_to_group(&x, n));
                assert!(diff < 1e-12, "factorization failed by {diff}");
            }
        }
    }

    fn gaussian_state() -> StateFunction {
        StateFunction::new(
            |c: f64, v: f64| Complex64::new((-(c * c + v * v)).exp(), 0.0),
            6.0,
            6.0,
        )
    }

    #[test]
    fn identity_acts_trivially() {
        let params = RepParams::new(2, 0.8, vec![0.4, -1.0]).unwrap();
        let xi = gaussian_state();
        let out = pi_apply(&H0Element::identity(2), &xi, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let c = rng.gen_range(-2.0..2.0);
            let v = rng.gen_range(-2.0..2.0);
            assert!((out.eval_at(c, v) - xi.eval_at(c, v)).norm() < 1e-13);
        }
    }

    #[test]
    fn action_is_unimodular_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=3 {
            let params = random_params(&mut rng, n);
            let g = random_h0(&mut rng, n);
            let xi = gaussian_state();
            let out = pi_apply(&g, &xi, &params).unwrap();
            for _ in 0..40 {
                let c = rng.gen_range(-2.0..2.0);
                let v = rng.gen_range(-2.0..2.0);
                let lhs = out.eval_at(c, v).norm();
                let rhs = xi.eval_at(c - g.b, v - g.u[n]).norm();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn action_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            let params = random_params(&mut rng, n);
            let g = random_h0(&mut rng, n);
            let h = random_h0(&mut rng, n);
            let xi = gaussian_state();
            let lhs = pi_apply(&g, &pi_apply(&h, &xi, &params).unwrap(), &params).unwrap();
            let rhs =
                pi_apply(&h0_compose(&g, &h).unwrap(), &xi, &params).unwrap();
            for _ in 0..34 {
                let c = rng.gen_range(-2.5..2.5);
                let v = rng.gen_range(-2.5..2.5);
                let diff = (lhs.eval_at(c, v) - rhs.eval_at(c, v)).norm();
                assert!(diff < 1e-9, "homomorphism off by {diff} at n={n}");
            }
        }
    }

    #[test]
    fn discrete_l2_norm_is_preserved() {
        // the action translates the slice; sampling the translated
        // function on the translated grid reproduces the values exactly
        let params = RepParams::new(1, 1.0, vec![0.7]).unwrap();
        let g = H0Element { b: 0.4, u: vec![-0.3, 0.9], t: 0.2 };
        let xi = gaussian_state();
        let out = pi_apply(&g, &xi, &params).unwrap();
        let pts = 64;
        let h = 8.0 / pts as f64;
        let mut base = 0.0;
        let mut moved = 0.0;
        for i in 0..pts {
            for k in 0..pts {
                let c = -4.0 + (i as f64 + 0.5) * h;
                let v = -4.0 + (k as f64 + 0.5) * h;
                base += xi.eval_at(c, v).norm_sqr();
                moved += out.eval_at(c + g.b, v + g.u[1]).norm_sqr();
            }
        }
        assert_relative_eq!(base, moved, max_relative = 1e-6);
    }

    #[test]
    fn slice_covariance_and_separable_value() {
        // Xi built as f(sigma) chi(z) window(z): slicing against the same
        // character returns f times the window mass, and the slice obeys
        // the covariance rule
        let n = 1;
        let params = RepParams::new(n, 0.9, vec![0.6]).unwrap();
        let pcl = params.clone();
        let window =
            |w: f64, s: f64| (-(w * w + s * s) / 8.0).exp();
        let f = |c: f64, v: f64| (-(c * c + v * v) / 2.0).exp();
        let xi = move |x: &H0Element| -> Complex64 {
            let ((c, v), (w, s)) = h0_decompose(x);
            chi(&pcl, &w, s) * f(c, v) * window(w[0], s)
        };
        let grid = H1Grid { w_radius: 14.0, w_points: 224, s_radius: 14.0, s_points: 224 };
        // window mass
        let mass: f64 = trapezoid_nodes(14.0, 224)
            .iter()
            .flat_map(|&(w, ww)| {
                trapezoid_nodes(14.0, 224)
                    .into_iter()
                    .map(move |(s, sw)| window(w, s) * ww * sw)
            })
            .sum();
        let at = H0Element::sigma(0.7, -0.4, n);
        let sliced = plancherel_slice_at(&xi, &params, &at, &grid);
        let expect = f(0.7, -0.4) * mass;
        assert_relative_eq!(sliced.re, expect, max_relative = 1e-6);
        assert!(sliced.im.abs() < 1e-9);

        // covariance: Xi_chi(x z') = chi(z') Xi_chi(x)
        let zp = H0Element { b: 0.0, u: vec![0.8, 0.0], t: -0.6 };
        let moved = plancherel_slice_at(&xi, &params, &h0_compose(&at, &zp).unwrap(), &grid);
        let expect = chi(&params, &[0.8], -0.6) * sliced;
        assert!((moved - expect).norm() < 1e-6 * (1.0 + sliced.norm()));

        // zero input
        let zero = |_: &H0Element| Complex64::new(0.0, 0.0);
        let z = plancherel_slice_at(&zero, &params, &at, &grid);
        assert_eq!(z, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn q_polynomial_cases() {
        // zeta = 0 kills both polynomials
        let p0 = RepParams::new(3, 1.0, vec![0.0; 3]).unwrap();
        assert!(q_poly(&p0).is_zero());
        assert!(p_from_zeta(&p0).is_zero());

        // n = 1: q(b) = zeta_1 b, p(t) = -zeta_1 t
        let p1 = RepParams::new(1, 1.0, vec![1.7]).unwrap();
        assert_eq!(q_poly(&p1).coeffs(), &[0.0, 1.7]);
        assert_eq!(p_from_zeta(&p1).coeffs(), &[0.0, -1.7]);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=5 {
            let params = random_params(&mut rng, n);
            let q = q_poly(&params);
            assert!(q.degree() <= n);
            // derivative identity, exact at the coefficient level
            let gap = q.derivative().max_abs_coeff_diff(&q_prime_direct(&params));
            assert!(gap <= 1e-12, "q' identity off by {gap} at n={n}");
        }
    }

    #[test]
    fn explicit_kernel_requires_unit_eta() {
        let params = RepParams::new(2, 0.5, vec![0.1, 0.2]).unwrap();
        assert!(matches!(dr_kernel(&params, 1.0), Err(RepError::EtaNotUnit { .. })));
    }

    #[test]
    fn explicit_kernel_matches_oscillator_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for n in 1..=3 {
            let mut params = random_params(&mut rng, n);
            params.eta = 1.0;
            let r = 3.0;
            let kern = dr_kernel(&params, r).unwrap();
            let p = p_from_zeta(&params);
            let spec =
                KernelSpec::new(n, n as f64 / 2.0, p, r, (n as f64 / 2.0).max(1.0)).unwrap();
            let jet = spec.jet();
            for _ in 0..10_000 {
                let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
                let y = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
                let a = kern(x, y);
                let b = or_kernel(&spec, &jet, x, y) * PI;
                assert!(
                    (a - b).norm() <= 1e-12 * (1.0 + a.norm()),
                    "kernel mismatch {} at n={n}",
                    (a - b).norm()
                );
            }
        }
    }

    #[test]
    fn kernel_truncation_and_conjugation() {
        let params = RepParams::new(2, 1.0, vec![0.3, -0.8]).unwrap();
        let kern = dr_kernel(&params, 2.0).unwrap();
        assert_eq!(
            kern([3.0, 0.5], [0.0, 0.1]),
            Complex64::new(0.0, 0.0),
            "kernel must vanish beyond the truncation radius"
        );
        // flipping eta and zeta conjugates the kernel
        let flipped = RepParams::new(2, -1.0, vec![-0.3, 0.8]).unwrap();
        let kern_f = dr_kernel(&flipped, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let y = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let a = kern(x, y);
            let b = kern_f(x, y).conj();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_ratio_near_one() {
        let rep = parseval_probe(&ParsevalConfig::default());
        assert!(rep.edge_mass_ratio < 1e-6, "frequency box too small: {}", rep.edge_mass_ratio);
        assert!(
            rep.ratio > 0.98 && rep.ratio < 1.02,
            "Plancherel ratio {} outside [0.98, 1.02]",
            rep.ratio
        );
    }
}
