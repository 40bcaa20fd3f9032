//! Principal-value and iterated principal-value integration.
//!
//! The central object is the pair of tempered distributions on `R^2`
//!
//! ```text
//! D(psi) = p.v. iint psi(s1, s2) / (s2^2 - s1^2) ds1 ds2
//! ```
//!
//! evaluated as an iterated limit: for fixed `s2` the inner integral is a
//! sum of two one-dimensional principal values with poles at `s1 = -s2`
//! and `s1 = +s2`, carrying an outer factor `1/(2 s2)`; the outer
//! integral is then taken over `|s2| > eps`. Swapping the order of the
//! two variables gives the companion distribution `Dt`, and the two do
//! not agree: their sum is a point mass,
//!
//! ```text
//! D(psi) + Dt(psi) = pi^2 psi(0, 0).
//! ```
//!
//! [`fubini_defect`] measures how far a numerical evaluation is from that
//! identity. On the group side, pulling a test function back through the
//! section `Q_b` and integrating in `b` against `beta(b)^{-1}` produces
//! the compactly supported distribution evaluated by [`d_r_eval`];
//! [`k_average`] manufactures the rotation-bi-invariant inputs for which
//! that distribution collapses to a one-dimensional integral.

use crate::group::{self, GroupElement, HeisenbergPoint, SL2Element};
use crate::quad::gauss_rule;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PvError {
    #[error("integrand returned a non-finite sample at s = {at}")]
    NonFiniteSample { at: f64 },
}

/// Excision ladder and quadrature controls for principal values.
///
/// The excised integrals are computed on dyadic panels from `2^{-k_max}`
/// outward; the ladder of partial integrals `I(2^{-k})`,
/// `k = k_min..k_max`, is Richardson-extrapolated with an order-2 model.
#[derive(Debug, Clone)]
pub struct PVConfig {
    pub k_min: u32,
    pub k_max: u32,
    /// Outer truncation radius for bare 1-D principal values.
    pub truncation_radius: f64,
    /// Gauss order per dyadic panel.
    pub panel_order: usize,
}

impl Default for PVConfig {
    fn default() -> Self {
        PVConfig { k_min: 4, k_max: 14, truncation_radius: 6.0, panel_order: 8 }
    }
}

impl PVConfig {
    /// Ladder refined by two levels with a doubled truncation radius;
    /// used for self-consistency checks.
    pub fn refined(&self) -> PVConfig {
        PVConfig {
            k_min: self.k_min,
            k_max: self.k_max + 2,
            truncation_radius: self.truncation_radius * 2.0,
            panel_order: self.panel_order,
        }
    }
}

/// Value and a conservative error indicator (ladder spread plus bounds on
/// omitted pieces).
#[derive(Debug, Clone, Copy)]
pub struct PVResult {
    pub value: Complex64,
    pub error_estimate: f64,
}

/// A test function on `R^2` with a declared decay radius (beyond which it
/// is treated as numerically zero) and a claimed smoothness order, which
/// caps the number of extrapolation levels.
pub struct TestFunction2D {
    pub eval: Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>,
    pub decay_radius: f64,
    pub smoothness: u32,
}

impl TestFunction2D {
    pub fn new(
        eval: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
        decay_radius: f64,
        smoothness: u32,
    ) -> Self {
        TestFunction2D { eval: Arc::new(eval), decay_radius, smoothness }
    }

    pub fn from_real(
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        decay_radius: f64,
        smoothness: u32,
    ) -> Self {
        TestFunction2D {
            eval: Arc::new(move |a, b| Complex64::new(eval(a, b), 0.0)),
            decay_radius,
            smoothness,
        }
    }

    /// The argument swap `psi~(s1, s2) = psi(s2, s1)`.
    pub fn swapped(&self) -> TestFunction2D {
        let f = self.eval.clone();
        TestFunction2D {
            eval: Arc::new(move |a, b| f(b, a)),
            decay_radius: self.decay_radius,
            smoothness: self.smoothness,
        }
    }
}

/// Dyadic panel boundaries from `eps` out to `radius` (each panel at most
/// an octave wide).
fn dyadic_panels(eps: f64, radius: f64) -> Vec<(f64, f64)> {
    let mut panels = Vec::new();
    let mut left = eps;
    while left < radius {
        let right = (2.0 * left).min(radius);
        panels.push((left, right));
        left = right;
    }
    panels
}

/// One-dimensional principal value `p.v. int f(s) / (s - pole) ds`,
/// truncated at `|s - pole| <= cfg.truncation_radius`.
///
/// The excised integral over `delta < |s - pole| < U` is folded into the
/// symmetric form `int_delta^U (f(pole+u) - f(pole-u)) / u du`, computed
/// on dyadic panels; the ladder over `delta = 2^{-k}` is extrapolated.
pub fn pv_1d(
    f: &dyn Fn(f64) -> Complex64,
    pole: f64,
    cfg: &PVConfig,
) -> Result<PVResult, PvError> {
    pv_1d_radius(f, pole, cfg.truncation_radius, cfg, u32::MAX)
}

fn pv_1d_radius(
    f: &dyn Fn(f64) -> Complex64,
    pole: f64,
    radius: f64,
    cfg: &PVConfig,
    smoothness: u32,
) -> Result<PVResult, PvError> {
    let eps = 0.5_f64.powi(cfg.k_max as i32);
    let rule = gauss_rule(cfg.panel_order);
    let panels = dyadic_panels(eps, radius);
    // integral over each panel of (f(pole+u) - f(pole-u)) / u
    let mut panel_vals = Vec::with_capacity(panels.len());
    for &(a, b) in &panels {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = c + h * x;
            let v = (f(pole + u) - f(pole - u)) / u;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(PvError::NonFiniteSample { at: pole + u });
            }
            acc += v * *w;
        }
        panel_vals.push(acc * h);
    }
    // ladder of excised integrals I(2^{-k}), k = k_min..=k_max; panel
    // boundaries align with the dyadic excision radii by construction
    let mut ladder = Vec::new();
    for k in cfg.k_min..=cfg.k_max {
        let cut = 0.5_f64.powi(k as i32);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &(a, _)) in panels.iter().enumerate() {
            if a >= cut - 1e-300 {
                acc += panel_vals[i];
            }
        }
        ladder.push(acc);
    }
    Ok(extrapolate(&ladder, smoothness))
}

/// Richardson extrapolation of the excision ladder with the order-2 model
/// `I(eps) = I0 + a eps + b eps^2` (ladder ratio 2). The error estimate
/// is the largest successive difference in the final column.
fn extrapolate(ladder: &[Complex64], smoothness: u32) -> PVResult {
    let mut col: Vec<Complex64> = ladder.to_vec();
    let levels = 2.min(smoothness).min(col.len() as u32 - 1);
    for lvl in 0..levels {
        let factor = 2.0_f64.powi(lvl as i32 + 1);
        col = col
            .windows(2)
            .map(|w| (w[1] * factor - w[0]) / (factor - 1.0))
            .collect();
    }
    let value = *col.last().unwrap();
    let err = if col.len() >= 2 {
        col.windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    PVResult { value, error_estimate: err }
}

/// The iterated principal value `D(psi)`.
///
/// Inner integral (poles at `s1 = -s2` and `s1 = s2`):
/// `p.v. int psi/(s2+s1) ds1 + p.v. int psi/(s2-s1) ds1`; the bracket
/// vanishes at `s2 = 0`, so the outer integrand with its `1/(2 s2)`
/// factor extends continuously and is integrated over `|s2| > 2^{-k_max}`
/// with the omitted strip bounded into the error estimate.
pub fn d_dist(psi: &TestFunction2D, cfg: &PVConfig) -> Result<PVResult, PvError> {
    let radius = psi.decay_radius;
    let eps = 0.5_f64.powi(cfg.k_max as i32);
    let rule = gauss_rule(cfg.panel_order);
    let panels = dyadic_panels(eps, radius);

    let inner = |s2: f64| -> Result<(Complex64, f64), PvError> {
        let f = |s1: f64| (psi.eval)(s1, s2);
        let r_in = radius + s2.abs();
        let plus = pv_1d_radius(&f, -s2, r_in, cfg, psi.smoothness)?;
        let minus = pv_1d_radius(&f, s2, r_in, cfg, psi.smoothness)?;
        // p.v. int psi/(s2 - s1) ds1 = - p.v. with pole at +s2
        Ok((plus.value - minus.value, plus.error_estimate + minus.error_estimate))
    };

    // outer nodes, both signs of s2
    let mut tasks = Vec::new();
    for &(a, b) in &panels {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let u = c + h * x;
            tasks.push((u, w * h));
            tasks.push((-u, w * h));
        }
    }
    let results: Result<Vec<(Complex64, f64)>, PvError> = tasks
        .par_iter()
        .map(|&(s2, w)| {
            let (val, ierr) = inner(s2)?;
            Ok((val / (2.0 * s2) * w, w.abs() * ierr / (2.0 * s2.abs())))
        })
        .collect();
    let results = results?;
    let value: Complex64 = results.iter().map(|r| r.0).sum();
    let propagated: f64 = results.iter().map(|r| r.1).sum();

    // omitted strip |s2| <= eps: the integrand extends continuously, so
    // the strip is bounded by 2 eps times its size near the edge
    let (fp, _) = inner(eps)?;
    let (fm, _) = inner(-eps)?;
    let edge = (fp / (2.0 * eps)).norm().max((fm / (-2.0 * eps)).norm());
    let strip_bound = 2.0 * eps * edge * 2.0;

    Ok(PVResult { value, error_estimate: propagated + strip_bound })
}

/// The companion distribution `Dt(psi) = D(psi~)`.
pub fn d_tilde(psi: &TestFunction2D, cfg: &PVConfig) -> Result<PVResult, PvError> {
    d_dist(&psi.swapped(), cfg)
}

/// `|D(psi) + Dt(psi) - pi^2 psi(0,0)|`, the deviation from the
/// point-mass identity satisfied by the two iterated principal values.
pub fn fubini_defect(psi: &TestFunction2D, cfg: &PVConfig) -> Result<f64, PvError> {
    let d = d_dist(psi, cfg)?;
    let dt = d_tilde(psi, cfg)?;
    let target = (psi.eval)(0.0, 0.0) * std::f64::consts::PI.powi(2);
    Ok((d.value + dt.value - target).norm())
}

// ---------------------------------------------------------------------------
// Test functions on the group

/// A test function on `G_n`, sampled through the coordinates `(A, u, t)`,
/// vanishing outside `|u| <= u_radius` (Euclidean ball) and
/// `|t| <= t_radius`.
pub struct GTestFunction {
    pub eval: Arc<dyn Fn(&GroupElement) -> Complex64 + Send + Sync>,
    pub u_radius: f64,
    pub t_radius: f64,
}

impl GTestFunction {
    pub fn new(
        eval: impl Fn(&GroupElement) -> Complex64 + Send + Sync + 'static,
        u_radius: f64,
        t_radius: f64,
    ) -> Self {
        GTestFunction { eval: Arc::new(eval), u_radius, t_radius }
    }

    pub fn eval_at(&self, g: &GroupElement) -> Complex64 {
        (self.eval)(g)
    }
}

/// Pullback of `phi` through the section
/// `Q_b(s1, s2) = (n_b, P(b/2)(s1 e_n + s2 beta(b)^{-1} e_{n+1}), 0)`.
pub fn qb_pullback(phi: &Arc<GTestFunction>, b: f64, n: usize) -> TestFunction2D {
    let bet = group::beta(b);
    let col_n = group::p_column(b / 2.0, n, n);
    let col_n1 = group::p_column(b / 2.0, n, n + 1);
    let n_b = SL2Element::shear(b);
    let phi = phi.clone();
    // s-support radius implied by the u-ball: the (n+1)-coordinate of the
    // image is s2/beta and the n-coordinate is s1 + s2 (n b/2) / beta
    let rho = phi.u_radius;
    let decay = (rho * bet).max(rho * (1.0 + 0.5 * n as f64 * b.abs())) + 1.0;
    TestFunction2D {
        eval: Arc::new(move |s1: f64, s2: f64| {
            let u = &col_n * s1 + &col_n1 * (s2 / bet);
            let g = GroupElement { a: n_b, h: HeisenbergPoint { u, t: 0.0 }, n };
            phi.eval_at(&g)
        }),
        decay_radius: decay,
        smoothness: 10,
    }
}

/// `int_{-R}^{R} D(Q_b^* phi) beta(b)^{-1} db` by Gauss-Legendre panels
/// of width `min(0.25, R/64)` in `b`.
pub fn d_r_eval(
    phi: &Arc<GTestFunction>,
    r: f64,
    n: usize,
    cfg: &PVConfig,
    b_panel_order: usize,
) -> Result<PVResult, PvError> {
    assert!(r > 0.0);
    let width = (0.25_f64).min(r / 64.0);
    let panels = (2.0 * r / width).ceil() as usize;
    let h = 2.0 * r / panels as f64;
    let rule = gauss_rule(b_panel_order);
    let mut nodes = Vec::new();
    for i in 0..panels {
        let a = -r + i as f64 * h;
        let c = a + 0.5 * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push((c + 0.5 * h * x, 0.5 * h * w));
        }
    }
    let results: Result<Vec<(Complex64, f64)>, PvError> = nodes
        .par_iter()
        .map(|&(b, w)| {
            let psi = qb_pullback(phi, b, n);
            let d = d_dist(&psi, cfg)?;
            let scale = w / group::beta(b);
            Ok((d.value * scale, d.error_estimate * scale.abs()))
        })
        .collect();
    let results = results?;
    Ok(PVResult {
        value: results.iter().map(|r| r.0).sum(),
        error_estimate: results.iter().map(|r| r.1).sum(),
    })
}

/// Discrete average over `SO(2) x SO(2)`:
/// `phi.(g) = m^{-2} sum_{i,j} phi(k_i g k_j)` with uniform angle grids.
/// For smooth compactly supported `phi` the trapezoid average converges
/// spectrally, so moderate `m` already gives bi-invariance at high
/// accuracy.
pub fn k_average(phi: &Arc<GTestFunction>, n: usize, m: usize) -> GTestFunction {
    assert!(m >= 8, "angular grid too coarse");
    let rotations: Vec<(SL2Element, crate::group::RepMatrix)> = (0..m)
        .map(|i| {
            let angle = std::f64::consts::TAU * i as f64 / m as f64;
            let k = SL2Element::rotation(angle);
            (k, group::rep_z(&k, n))
        })
        .collect();
    let phi = phi.clone();
    let u_radius = phi.u_radius;
    let t_radius = phi.t_radius;
    GTestFunction {
        eval: Arc::new(move |g: &GroupElement| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (ki, zi) in &rotations {
                let a_left = ki.mul(&g.a);
                let zu = zi.apply(&g.h.u);
                for (kj, _) in &rotations {
                    let conj = GroupElement {
                        a: a_left.mul(kj),
                        h: HeisenbergPoint { u: zu.clone(), t: g.h.t },
                        n: g.n,
                    };
                    acc += phi.eval_at(&conj);
                }
            }
            acc / (rotations.len() * rotations.len()) as f64
        }),
        // Z of a rotation is orthogonal, so the Euclidean u-ball support
        // is preserved by the averaging
        u_radius,
        t_radius,
    }
}

/// Separable smooth bump on `G_n` in the global coordinates
/// `(a, b, c, d, u, t)`: Gaussian factors around the identity, truncated
/// at the declared radii.
pub fn separable_bump(sl2_width: f64, u_radius: f64, t_radius: f64) -> GTestFunction {
    GTestFunction::new(
        move |g: &GroupElement| {
            let unorm2: f64 = g.h.u.iter().map(|v| v * v).sum();
            if unorm2 > u_radius * u_radius || g.h.t.abs() > t_radius {
                return Complex64::new(0.0, 0.0);
            }
            let da = g.a.a - 1.0;
            let db = g.a.b;
            let dc = g.a.c;
            let dd = g.a.d - 1.0;
            let sl2 = -(da * da + db * db + dc * dc + dd * dd) / (2.0 * sl2_width * sl2_width);
            let rest = -unorm2 / (2.0 * (u_radius / 3.0).powi(2))
                - g.h.t * g.h.t / (2.0 * (t_radius / 3.0).powi(2));
            Complex64::new((sl2 + rest).exp(), 0.0)
        },
        u_radius,
        t_radius,
    )
}

/// Plateau function: approximately 1 on a large ball in the
/// rotation-invariant coordinates, with smooth Gaussian falloff. A
/// function of the Frobenius norm of the matrix part, the Euclidean
/// norm of the translation part and `|t|` is exactly bi-invariant under
/// the compact subgroup, so the one-dimensional reduction applies to it
/// without any averaging.
pub fn plateau_bump(flat_radius: f64, fall: f64) -> GTestFunction {
    let cut = move |x: f64| -> f64 {
        let e = (x.abs() - flat_radius) / fall;
        if e <= 0.0 {
            1.0
        } else {
            (-e * e).exp()
        }
    };
    let u_radius = flat_radius + 8.0 * fall;
    let t_radius = u_radius;
    GTestFunction::new(
        move |g: &GroupElement| {
            let fro = (g.a.a * g.a.a + g.a.b * g.a.b + g.a.c * g.a.c + g.a.d * g.a.d)
                .sqrt();
            let unorm = g.h.u.iter().map(|v| v * v).sum::<f64>().sqrt();
            Complex64::new(cut(fro) * cut(unorm) * cut(g.h.t), 0.0)
        },
        u_radius,
        t_radius,
    )
}

/// `Omega(n_b, u, t) = (n_{-b}, Z(k_b^+) u, t)`, the twist under which
/// restrictions of bi-invariant functions are invariant.
pub fn omega(g: &GroupElement) -> GroupElement {
    let b = g.a.b;
    debug_assert!(
        g.a.max_abs_diff(&SL2Element::shear(b)) < 1e-12,
        "omega is defined on the unipotent slice"
    );
    let se = group::special_elements(b);
    let z = group::rep_z(&se.k_plus, g.n);
    GroupElement {
        a: SL2Element::shear(-b),
        h: HeisenbergPoint { u: z.apply(&g.h.u), t: g.h.t },
        n: g.n,
    }
}

/// The standard random family for the point-mass checks: `count`
/// two-component Gaussian mixtures with bounded centers and widths.
pub fn random_gaussian_mixtures(count: usize, seed: u64) -> Vec<TestFunction2D> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let comps: Vec<(f64, f64, f64, f64, f64)> = (0..2)
                .map(|_| {
                    (
                        rng.gen_range(0.3..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.8..1.6),
                        rng.gen_range(0.8..1.6),
                    )
                })
                .collect();
            gaussian_mixture_2d(&comps)
        })
        .collect()
}

/// Sum of axis-aligned Gaussians `(amp, c1, c2, w1, w2)` on `R^2`.
pub fn gaussian_mixture_2d(components: &[(f64, f64, f64, f64, f64)]) -> TestFunction2D {
    let comps = components.to_vec();
    let radius = comps
        .iter()
        .map(|&(_, c1, c2, w1, w2)| c1.abs().max(c2.abs()) + 7.0 * w1.max(w2))
        .fold(1.0, f64::max);
    TestFunction2D::from_real(
        move |s1: f64, s2: f64| {
            comps
                .iter()
                .map(|&(a, c1, c2, w1, w2)| {
                    let z1 = (s1 - c1) / w1;
                    let z2 = (s2 - c2) / w2;
                    a * (-(z1 * z1 + z2 * z2)).exp()
                })
                .sum()
        },
        radius,
        20,
    )
}
