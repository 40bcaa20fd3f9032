//! Dyadic cutoffs and the basic splitting of the oscillatory kernel.
//!
//! The building block is a smooth even cutoff `eta0` with `eta0 = 1` on
//! `|s| <= 1/2` and `eta0 = 0` on `|s| >= 3/4`; the annular bump
//! `eta(s) = eta0(s/2) - eta0(s)` is supported on `1/2 <= |s| <= 3/2`
//! and telescopes to a dyadic partition of unity. From these one builds
//! the two-variable cutoffs `chi_j`, the dyadic kernel pieces `T_j`, and
//! a four-way splitting
//!
//! ```text
//! T_j = H_j + U_j + W_j + sum_{r>0} V_j^r
//! ```
//!
//! driven by derivative-ratio cutoffs of the phase polynomial. The
//! splitting is an exact pointwise identity away from a measure-zero set
//! of cutoff boundaries, and [`reconstruct_sum`] reproduces `T_j` at
//! machine precision. The remaining items are numerical checks of the
//! closed-form phase derivatives, of polynomial rigidity on the cutoff
//! supports, of a sublevel-measure bound, and Schur-type row/column
//! integral probes for the scaling of the individual pieces.

use crate::oscillator::KernelSpec;
use crate::phase::{self, PhaseJet};
use crate::poly::PolySpec;
use crate::quad::gauss_rule;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("polynomial is identically zero")]
    DegeneratePolynomial,
    #[error("anchor {sigma} is outside the cutoff support")]
    OutsideSupport { sigma: f64 },
}

// ---------------------------------------------------------------------------
// The concrete smooth cutoff

/// Normalized transition profile `F(x) = int_0^x g / int_0^1 g` with
/// `g(t) = exp(-1/(t(1-t)))`; `F(0) = 0`, `F(1) = 1`, flat at both ends.
fn bump_g(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

const F_NODES: usize = 512;

/// Cumulative integrals of `bump_g` at `k / F_NODES` plus the total mass.
static F_TABLE: Lazy<(Vec<f64>, f64)> = Lazy::new(|| {
    let rule = gauss_rule(16);
    let h = 1.0 / F_NODES as f64;
    let mut prefix = Vec::with_capacity(F_NODES + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for k in 0..F_NODES {
        let a = k as f64 * h;
        let c = a + 0.5 * h;
        let mut panel = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            panel += w * bump_g(c + 0.5 * h * x);
        }
        acc += panel * 0.5 * h;
        prefix.push(acc);
    }
    (prefix, acc)
});

fn transition_f(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let (prefix, total) = &*F_TABLE;
    let h = 1.0 / F_NODES as f64;
    let k = ((x / h).floor() as usize).min(F_NODES - 1);
    let a = k as f64 * h;
    // small remainder panel keeps the evaluation a true integral
    let rule = gauss_rule(12);
    let c = 0.5 * (a + x);
    let half = 0.5 * (x - a);
    let mut tail = 0.0;
    for (xr, w) in rule.nodes.iter().zip(&rule.weights) {
        tail += w * bump_g(c + half * xr);
    }
    (prefix[k] + tail * half) / *total
}

/// Smooth even cutoff: 1 on `|s| <= 1/2`, 0 on `|s| >= 3/4`, with a
/// monotone bump-integral transition (its derivative has a single sign
/// interval per side).
pub fn eta0(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 0.75 {
        0.0
    } else {
        transition_f((0.75 - a) / 0.25)
    }
}

/// Annular bump `eta(s) = eta0(s/2) - eta0(s)`, supported on
/// `1/2 <= |s| <= 3/2`.
pub fn eta(s: f64) -> f64 {
    eta0(0.5 * s) - eta0(s)
}

/// `eta0` of a scaled ratio with the boundary conventions: a vanishing
/// denominator sends the argument to infinity (value 0) unless the
/// numerator also vanishes, in which case the factor is 1.
fn eta0_ratio(scale: f64, num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        eta0(scale * num / den)
    }
}

// ---------------------------------------------------------------------------
// Dyadic two-variable cutoffs

/// First-coordinate dyadic factor `(2^{j1} / beta(x1)) eta(2^{-j1} x1)`.
pub fn chi_1(x1: f64, j1: i32) -> f64 {
    let scale = 2.0_f64.powi(j1);
    let e = eta(x1 / scale);
    if e == 0.0 {
        0.0
    } else {
        scale / phase::beta(x1) * e
    }
}

/// Second-coordinate dyadic factor `(2^{j2} / x2) eta(2^{-j2} x2)`; odd,
/// and zero at `x2 = 0`.
pub fn chi_2(x2: f64, j2: i32) -> f64 {
    if x2 == 0.0 {
        return 0.0;
    }
    let scale = 2.0_f64.powi(j2);
    let e = eta(x2 / scale);
    if e == 0.0 {
        0.0
    } else {
        scale / x2 * e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicIndex {
    pub j1: i32,
    pub j2: i32,
}

pub fn chi_j(x: [f64; 2], j: DyadicIndex) -> f64 {
    chi_1(x[0], j.j1) * chi_2(x[1], j.j2)
}

/// `chi~_j = chi_j sgn(x2)`, the even companion of `chi_j`.
pub fn chi_tilde_j(x: [f64; 2], j: DyadicIndex) -> f64 {
    chi_j(x, j) * phase::sgn(x[1])
}

/// Dyadic kernel piece
/// `T_j(x,y) = 2^{-j1-j2} chi_j(x-y) e^{i gamma Psi} sin(theta)`;
/// requires `j1 > 10`.
pub fn t_j(spec: &KernelSpec, jet: &PhaseJet, j: DyadicIndex, x: [f64; 2], y: [f64; 2]) -> Complex64 {
    debug_assert!(j.j1 > 10, "dyadic piece defined for j1 > 10");
    let chi = chi_j([x[0] - y[0], x[1] - y[1]], j);
    if chi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let amp = 2.0_f64.powi(-j.j1 - j.j2) * chi * jet.theta(x, y).sin();
    Complex64::from_polar(1.0, spec.gamma * jet.psi(x, y)) * amp
}

/// Indices `10 < j1 <= log2(R)` whose dyadic windows can meet the
/// displacement `x - y`; at most four contribute at any point.
pub fn admissible_indices(spec: &KernelSpec, x: [f64; 2], y: [f64; 2]) -> Vec<DyadicIndex> {
    let j1_cap = spec.r.log2().floor() as i32;
    let d1 = (x[0] - y[0]).abs();
    let d2 = (x[1] - y[1]).abs();
    if d1 == 0.0 || d2 == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let c1 = d1.log2().floor() as i32;
    let c2 = d2.log2().floor() as i32;
    for j1 in (c1 - 1)..=(c1 + 1) {
        if j1 <= 10 || j1 > j1_cap {
            continue;
        }
        for j2 in (c2 - 1)..=(c2 + 1) {
            let j = DyadicIndex { j1, j2 };
            if chi_j([x[0] - y[0], x[1] - y[1]], j) != 0.0 {
                out.push(j);
            }
        }
    }
    out
}

/// The dyadic part of the truncated kernel at one point: the sum of
/// `T_j` over the admissible index set.
pub fn t_r_sum(spec: &KernelSpec, jet: &PhaseJet, x: [f64; 2], y: [f64; 2]) -> Complex64 {
    admissible_indices(spec, x, y)
        .into_iter()
        .map(|j| t_j(spec, jet, j, x, y))
        .sum()
}

// ---------------------------------------------------------------------------
// Derivative-ratio cutoffs and the basic splitting

/// Derivative stack of the phase polynomial up to vanishing order.
#[derive(Debug, Clone)]
pub struct PolyDerivs {
    pub d: Vec<PolySpec>,
}

impl PolyDerivs {
    pub fn new(p: &PolySpec) -> Self {
        let mut d = vec![p.clone()];
        while !d.last().unwrap().is_zero() {
            d.push(d.last().unwrap().derivative());
        }
        PolyDerivs { d }
    }

    pub fn eval(&self, k: usize, s: f64) -> f64 {
        self.d.get(k).map_or(0.0, |p| p.eval(s))
    }

    pub fn degree(&self) -> usize {
        self.d[0].degree()
    }
}

/// `a_m(sigma)`: product of `eta0(2^{m+10} p^{(nu+1)} / p^{(nu)})` over
/// `nu = 2 .. deg(p)-1`; identically 1 when `deg(p) <= 2`.
pub fn a_cutoff(pd: &PolyDerivs, m: i32, sigma: f64) -> f64 {
    let deg = pd.degree();
    if deg <= 2 {
        return 1.0;
    }
    let scale = 2.0_f64.powi(m + 10);
    let mut v = 1.0;
    for nu in 2..deg {
        v *= eta0_ratio(scale, pd.eval(nu + 1, sigma), pd.eval(nu, sigma));
        if v == 0.0 {
            return 0.0;
        }
    }
    v
}

/// `b_m(X1, X2) = eta0(2^{m+10} p''(X1) / (p'(X1) + X2))`.
pub fn b_cutoff(pd: &PolyDerivs, m: i32, x1: f64, x2: f64) -> f64 {
    let scale = 2.0_f64.powi(m + 10);
    eta0_ratio(scale, pd.eval(2, x1), pd.eval(1, x1) + x2)
}

/// `h_l(X1, X2) = eta0(2^{-l-10} (X2 + p'(X1)))`.
pub fn h_cutoff(pd: &PolyDerivs, l: i32, x1: f64, x2: f64) -> f64 {
    eta0(2.0_f64.powi(-l - 10) * (x2 + pd.eval(1, x1)))
}

/// `h_{l,r}(X1, X2) = eta(2^{-l+r-10} (X2 + p'(X1)))`.
pub fn h_r_cutoff(pd: &PolyDerivs, l: i32, r: i32, x1: f64, x2: f64) -> f64 {
    eta(2.0_f64.powi(-l + r - 10) * (x2 + pd.eval(1, x1)))
}

/// Truncation rank for the `V`-sum at a point: the smallest `r*` with
/// `2^{-j2+r-10} |Xi| > 3/2` for all larger `r`; at most two terms in the
/// sum are nonzero.
pub fn r_star(j2: i32, xi_abs: f64) -> i32 {
    if xi_abs == 0.0 {
        return 0;
    }
    let mut r = 1;
    while 2.0_f64.powi(-j2 + r - 10) * xi_abs <= 1.5 && r < 400 {
        r += 1;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceKind {
    /// `T_j (1 - a_{j1})`
    H,
    /// `T_j a_{j1} (1 - b_{j1})`
    U,
    /// `T_j a_{j1} b_{j1} h_{j2, r}`
    V { r: i32 },
    /// `T_j a_{j1} b_{j1} (1 - h_{j2})`
    W,
    /// `U_j` localized by `eta(2^{-L} p''(2 x1))`
    UL { l: i32 },
    /// `W_j` localized by `eta(2^{-M}(2 x2 + p'(2 x1))) eta(2^{-L} p''(2 x1))`
    WML { m: i32, l: i32 },
}

/// One piece of the basic splitting at a point.
pub fn piece(
    spec: &KernelSpec,
    jet: &PhaseJet,
    pd: &PolyDerivs,
    kind: PieceKind,
    j: DyadicIndex,
    x: [f64; 2],
    y: [f64; 2],
) -> Complex64 {
    let t = t_j(spec, jet, j, x, y);
    if t == Complex64::new(0.0, 0.0) {
        return t;
    }
    let x1s = x[0] + y[0];
    let x2s = x[1] + y[1];
    let a = a_cutoff(pd, j.j1, x1s);
    let factor = match kind {
        PieceKind::H => 1.0 - a,
        PieceKind::U => a * (1.0 - b_cutoff(pd, j.j1, x1s, x2s)),
        PieceKind::V { r } => {
            a * b_cutoff(pd, j.j1, x1s, x2s) * h_r_cutoff(pd, j.j2, r, x1s, x2s)
        }
        PieceKind::W => {
            a * b_cutoff(pd, j.j1, x1s, x2s) * (1.0 - h_cutoff(pd, j.j2, x1s, x2s))
        }
        PieceKind::UL { l } => {
            a * (1.0 - b_cutoff(pd, j.j1, x1s, x2s))
                * eta(2.0_f64.powi(-l) * pd.eval(2, 2.0 * x[0]))
        }
        PieceKind::WML { m, l } => {
            a * b_cutoff(pd, j.j1, x1s, x2s)
                * (1.0 - h_cutoff(pd, j.j2, x1s, x2s))
                * eta(2.0_f64.powi(-m) * (2.0 * x[1] + pd.eval(1, 2.0 * x[0])))
                * eta(2.0_f64.powi(-l) * pd.eval(2, 2.0 * x[0]))
        }
    };
    t * factor
}

/// `H_j + U_j + W_j + sum_{r=1}^{r*} V_j^r`; reproduces `T_j` exactly
/// away from `Xi = 0` and the cutoff boundaries.
pub fn reconstruct_sum(
    spec: &KernelSpec,
    jet: &PhaseJet,
    pd: &PolyDerivs,
    j: DyadicIndex,
    x: [f64; 2],
    y: [f64; 2],
) -> Complex64 {
    let mut acc = piece(spec, jet, pd, PieceKind::H, j, x, y)
        + piece(spec, jet, pd, PieceKind::U, j, x, y)
        + piece(spec, jet, pd, PieceKind::W, j, x, y);
    let xi_abs = jet.xi(x, y).abs();
    for r in 1..=r_star(j.j2, xi_abs) {
        acc += piece(spec, jet, pd, PieceKind::V { r }, j, x, y);
    }
    acc
}

// ---------------------------------------------------------------------------
// Derivative formula check

#[derive(Debug, Clone, Copy)]
pub struct DerivativeReport {
    /// Worst relative error over all first, mixed and third derivatives.
    pub worst_rel: f64,
    /// Deviation of the third derivative of `Psi` from its constant value.
    pub psi_x2x2y1_dev: f64,
    /// Absolute finite-difference sizes of the vanishing mixed derivatives.
    pub psi_x2y2_dev: f64,
    pub theta_x2y2_dev: f64,
}

fn richardson_first(f: &dyn Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let d = |hh: f64| (f(t + hh) - f(t - hh)) / (2.0 * hh);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// Compares every closed-form derivative of `Psi` and `theta` against
/// central finite differences (one Richardson level) at jittered sample
/// points bounded away from `Xi = 0`.
pub fn derivative_check(p: &PolySpec, samples: usize, seed: u64) -> DerivativeReport {
    let jet = PhaseJet::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut triple_dev: f64 = 0.0;
    let mut zero_dev_psi: f64 = 0.0;
    let mut zero_dev_theta: f64 = 0.0;

    let mut drawn = 0;
    while drawn < samples {
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let y = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        if jet.xi(x, y).abs() < 2.0 {
            continue;
        }
        drawn += 1;

        let step = |t: f64| 1e-4 * (1.0 + t.abs());
        let rel = |found: f64, exact: f64| (found - exact).abs() / exact.abs().max(1.0);

        // first derivatives
        let fd = richardson_first(&|t| jet.psi([t, x[1]], y), x[0], step(x[0]));
        worst = worst.max(rel(fd, jet.psi_x1(x, y)));
        let fd = richardson_first(&|t| jet.psi([x[0], t], y), x[1], step(x[1]));
        worst = worst.max(rel(fd, jet.psi_x2(x, y)));
        let fd = richardson_first(&|t| jet.theta([t, x[1]], y), x[0], step(x[0]));
        worst = worst.max(rel(fd, jet.theta_x1(x, y)));
        let fd = richardson_first(&|t| jet.theta([x[0], t], y), x[1], step(x[1]));
        worst = worst.max(rel(fd, jet.theta_x2(x, y)));

        // mixed second derivatives: outer FD of the closed-form firsts
        let fd = richardson_first(&|t| jet.psi_x1(x, [t, y[1]]), y[0], step(y[0]));
        worst = worst.max(rel(fd, jet.psi_x1y1(x, y)));
        let fd = richardson_first(&|t| jet.theta_x1(x, [t, y[1]]), y[0], step(y[0]));
        worst = worst.max(rel(fd, jet.theta_x1y1(x, y)));
        let fd = richardson_first(&|t| jet.psi_x1(x, [y[0], t]), y[1], step(y[1]));
        worst = worst.max(rel(fd, jet.psi_x1y2(x, y)));
        let fd = richardson_first(&|t| jet.psi_x2(x, [t, y[1]]), y[0], step(y[0]));
        worst = worst.max(rel(fd, jet.psi_x2y1(x, y)));
        let fd = richardson_first(&|t| jet.theta_x1(x, [y[0], t]), y[1], step(y[1]));
        worst = worst.max(rel(fd, jet.theta_x1y2(x, y)));
        let fd = richardson_first(&|t| jet.theta_x2(x, [t, y[1]]), y[0], step(y[0]));
        worst = worst.max(rel(fd, jet.theta_x2y1(x, y)));

        // third derivatives: exact second difference in x2 (both phases
        // are quadratic there within a fixed sign region), then a short
        // Richardson step in y1
        let h2 = 0.25;
        let second_x2 = |g: &dyn Fn([f64; 2], [f64; 2]) -> f64, yy: [f64; 2]| {
            (g([x[0], x[1] + h2], yy) - 2.0 * g(x, yy) + g([x[0], x[1] - h2], yy))
                / (h2 * h2)
        };
        let psi_fn = |a: [f64; 2], b: [f64; 2]| jet.psi(a, b);
        let theta_fn = |a: [f64; 2], b: [f64; 2]| jet.theta(a, b);
        let fd = richardson_first(
            &|t| second_x2(&psi_fn, [t, y[1]]),
            y[0],
            1e-2,
        );
        triple_dev = triple_dev.max((fd - (-2.0)).abs());
        let fd = richardson_first(
            &|t| second_x2(&theta_fn, [t, y[1]]),
            y[0],
            1e-2,
        );
        worst = worst.max(rel(fd, jet.theta_x2x2y1(x, y)));

        // vanishing mixed derivatives
        let fd = richardson_first(&|t| jet.psi_x2(x, [y[0], t]), y[1], step(y[1]));
        zero_dev_psi = zero_dev_psi.max(fd.abs());
        let fd = richardson_first(&|t| jet.theta_x2(x, [y[0], t]), y[1], step(y[1]));
        zero_dev_theta = zero_dev_theta.max(fd.abs());

        // beta derivatives against finite differences
        let s = x[0] - y[0];
        let fd = richardson_first(&phase::beta, s, 1e-4 * (1.0 + s.abs()));
        worst = worst.max(rel(fd, phase::beta_prime(s)));
        let fd = richardson_first(&phase::beta_prime, s, 1e-4 * (1.0 + s.abs()));
        worst = worst.max(rel(fd, phase::beta_second(s)));
    }
    DerivativeReport {
        worst_rel: worst,
        psi_x2x2y1_dev: triple_dev,
        psi_x2y2_dev: zero_dev_psi,
        theta_x2y2_dev: zero_dev_theta,
    }
}

// ---------------------------------------------------------------------------
// Polynomial rigidity on cutoff supports

/// The product cutoff driving the rigidity check:
/// `alpha_m(sigma) = prod_{nu=ell..deg} eta0(2^{m+10} P^{(nu)} / P^{(nu-1)})`.
pub fn alpha_cutoff(pd: &PolyDerivs, ell: usize, m: i32, sigma: f64) -> f64 {
    let deg = pd.degree();
    let scale = 2.0_f64.powi(m + 10);
    let mut v = 1.0;
    for nu in ell..=deg {
        v *= eta0_ratio(scale, pd.eval(nu, sigma), pd.eval(nu - 1, sigma));
        if v == 0.0 {
            return 0.0;
        }
    }
    v
}

#[derive(Debug, Clone, Copy)]
pub struct RigidityReport {
    pub violations: usize,
    /// Largest observed `|P^(nu)(tau) - P^(nu)(sigma)| / |P^(nu)(sigma)|`.
    pub max_ratio: f64,
}

/// On the support of `alpha_m`, every derivative `P^(nu)`, `nu >= ell`,
/// varies by at most a fifth of itself across `|tau - sigma| <= 2^{m+7}`.
pub fn rigidity_check(
    p: &PolySpec,
    ell: usize,
    m: i32,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<RigidityReport, DecompError> {
    let pd = PolyDerivs::new(p);
    if p.is_zero() {
        return Err(DecompError::DegeneratePolynomial);
    }
    if alpha_cutoff(&pd, ell, m, sigma) == 0.0 {
        return Err(DecompError::OutsideSupport { sigma });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = 2.0_f64.powi(m + 7);
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let tau = sigma + rng.gen_range(-radius..radius);
        for nu in ell..=pd.degree() {
            let base = pd.eval(nu, sigma).abs();
            let diff = (pd.eval(nu, tau) - pd.eval(nu, sigma)).abs();
            if base == 0.0 {
                if diff > 0.0 {
                    violations += 1;
                }
                continue;
            }
            max_ratio = max_ratio.max(diff / base);
            if diff > base / 5.0 {
                violations += 1;
            }
        }
    }
    Ok(RigidityReport { violations, max_ratio })
}

/// Measured maximum of `|alpha_m'|` over the support window around
/// `sigma`, by central differences; scaled by `2^m` for comparison with
/// the `C 2^{-m}` bound.
pub fn alpha_derivative_sup(pd: &PolyDerivs, ell: usize, m: i32, sigma: f64) -> f64 {
    let radius = 2.0_f64.powi(m + 9);
    let h = 2.0_f64.powi(m - 6);
    let mut sup: f64 = 0.0;
    let n = 4096;
    for k in 0..n {
        let s = sigma - radius + 2.0 * radius * k as f64 / n as f64;
        let d = (alpha_cutoff(pd, ell, m, s + h) - alpha_cutoff(pd, ell, m, s - h)) / (2.0 * h);
        sup = sup.max(d.abs());
    }
    sup
}

// ---------------------------------------------------------------------------
// Sublevel measure bound

#[derive(Debug, Clone, Copy)]
pub struct MeasureEstimate {
    pub measure: f64,
    pub std_error: f64,
    pub bound: f64,
}

/// Monte Carlo estimate of the measure of
/// `{(s,t): |s-t| <= rho, 1 - eta0(A rho P'(c1 s + c2 t)/P(c1 s + c2 t)) > 0}`
/// over the bounding box, against the bound `8 A m^2 rho^2 / |c1 + c2|`.
pub fn sublevel_measure(
    p: &PolySpec,
    rho: f64,
    a_scale: f64,
    c1: f64,
    c2: f64,
    samples: usize,
    seed: u64,
) -> Result<MeasureEstimate, DecompError> {
    if p.is_zero() {
        return Err(DecompError::DegeneratePolynomial);
    }
    let pd = PolyDerivs::new(p);
    let box_half = 10.0 * (1.0 + p.root_magnitude_bound());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let s = rng.gen_range(-box_half..box_half);
        let t = rng.gen_range(-box_half..box_half);
        if (s - t).abs() > rho {
            continue;
        }
        let sigma = c1 * s + c2 * t;
        let cutoff = eta0_ratio(a_scale * rho, pd.eval(1, sigma), pd.eval(0, sigma));
        if (1.0 - cutoff).abs() > 0.0 {
            hits += 1;
        }
    }
    let area = (2.0 * box_half) * (2.0 * box_half);
    let frac = hits as f64 / samples as f64;
    let measure = frac * area;
    let std_error = area * (frac * (1.0 - frac) / samples as f64).sqrt();
    let m = p.degree() as f64;
    let bound = 8.0 * a_scale * m * m * rho * rho / (c1 + c2).abs();
    Ok(MeasureEstimate { measure, std_error, bound })
}

// ---------------------------------------------------------------------------
// Schur-type probes

#[derive(Debug, Clone, Copy)]
pub struct SchurProbe {
    pub row_sup: f64,
    pub col_sup: f64,
}

/// Integral of `|piece(x, .)|` (row) or `|piece(., y)|` (column) with the
/// free second coordinate substituted by `w = Xi`, so that narrow
/// derivative-ratio windows are resolved; the free first coordinate runs
/// over the two dyadic annuli.
#[allow(clippy::too_many_arguments)]
fn piece_line_integral(
    spec: &KernelSpec,
    jet: &PhaseJet,
    pd: &PolyDerivs,
    kind: PieceKind,
    j: DyadicIndex,
    anchor: [f64; 2],
    row: bool,
    w_max: f64,
    w_nodes: usize,
) -> f64 {
    let scale1 = 2.0_f64.powi(j.j1);
    let n1_nodes = 48;
    let mut acc = 0.0;
    for side in [-1.0, 1.0] {
        // free first coordinate in anchor1 - side * 2^{j1} [1/2, 3/2]
        let lo = 0.5 * scale1;
        let hi = 1.5 * scale1;
        let h1 = (hi - lo) / n1_nodes as f64;
        for k1 in 0..n1_nodes {
            let off = lo + (k1 as f64 + 0.5) * h1;
            let free1 = anchor[0] - side * off;
            let sum1 = anchor[0] + free1;
            let dpe = pd.eval(1, sum1);
            // free second coordinate parametrized by w = anchor2 + free2 + p'(sum1)
            let hw = 2.0 * w_max / w_nodes as f64;
            let mut inner = 0.0;
            for kw in 0..w_nodes {
                let w = -w_max + (kw as f64 + 0.5) * hw;
                let free2 = w - anchor[1] - dpe;
                let (x, y) = if row {
                    (anchor, [free1, free2])
                } else {
                    ([free1, free2], anchor)
                };
                inner += piece(spec, jet, pd, kind, j, x, y).norm();
            }
            acc += inner * hw * h1;
        }
    }
    acc
}

/// Row and column sup-integrals of a piece, the two quantities entering
/// the Schur bound; suprema are taken over a caller-provided sample of
/// anchor points.
#[allow(clippy::too_many_arguments)]
pub fn schur_probe(
    spec: &KernelSpec,
    kind: PieceKind,
    j: DyadicIndex,
    anchors: &[[f64; 2]],
    w_max: f64,
    w_nodes: usize,
) -> SchurProbe {
    use rayon::prelude::*;
    let jet = spec.jet();
    let pd = PolyDerivs::new(&spec.p);
    let sups: Vec<(f64, f64)> = anchors
        .par_iter()
        .map(|&anchor| {
            (
                piece_line_integral(spec, &jet, &pd, kind, j, anchor, true, w_max, w_nodes),
                piece_line_integral(spec, &jet, &pd, kind, j, anchor, false, w_max, w_nodes),
            )
        })
        .collect();
    SchurProbe {
        row_sup: sups.iter().map(|s| s.0).fold(0.0, f64::max),
        col_sup: sups.iter().map(|s| s.1).fold(0.0, f64::max),
    }
}
