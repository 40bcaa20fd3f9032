//! Invariant suites behind the command-line `verify` runner: each check
//! re-measures one of the identities the modules are built on and
//! reports the measured defect against its threshold.

use crate::group::{self, GroupElement};
use crate::oscillator::{self, KernelSpec};

use crate::poly::PolySpec;
use crate::pv::{self, PVConfig};
use crate::rep::{self, H0Element, RepParams};
use crate::{decomp, quad};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

/// One measured invariant: `passed == (measured <= threshold)` except
/// for range checks, which pre-fold into `measured`.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn bound(name: &str, measured: f64, threshold: f64) -> Check {
        Check { name: name.to_string(), measured, threshold, passed: measured <= threshold }
    }
}

/// Scaled max-norm difference: machine-precision identities for the
/// representing matrices hold relative to their entry size.
fn scaled(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1.0)
}

pub fn group_suite(n_max: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut worst_hom: f64 = 0.0;
    let mut worst_symp: f64 = 0.0;
    let mut worst_transpose: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=n_max.min(5));
        let a = group::random_sl2(&mut rng);
        let b = group::random_sl2(&mut rng);
        let za = group::rep_z(&a, n);
        let zb = group::rep_z(&b, n);
        let zab = group::rep_z(&a.mul(&b), n);
        worst_hom = worst_hom.max(scaled(zab.max_abs_diff(&za.mul(&zb)), zab.max_abs()));
        let form = group::symplectic_form(n);
        let resid = za.transpose().mul(&form).mul(&za);
        worst_symp =
            worst_symp.max(scaled(resid.max_abs_diff(&form), za.max_abs() * za.max_abs()));
        let zt = group::rep_z(&a.transpose(), n);
        worst_transpose =
            worst_transpose.max(scaled(zt.max_abs_diff(&za.transpose()), za.max_abs()));
    }
    checks.push(Check::bound("group/representation-homomorphism", worst_hom, 1e-8));
    checks.push(Check::bound("group/symplectic-invariance", worst_symp, 1e-8));
    checks.push(Check::bound("group/transpose-compatibility", worst_transpose, 1e-10));

    let mut worst_p: f64 = 0.0;
    for n in 1..=n_max.min(6) {
        for _ in 0..8 {
            let b = rng.gen_range(-4.0..4.0);
            let p = group::p_of_b(b, n);
            let z = group::rep_z(&group::SL2Element::shear(b), n);
            worst_p = worst_p.max(scaled(p.max_abs_diff(&z), p.max_abs()));
        }
    }
    checks.push(Check::bound("group/unipotent-closed-form", worst_p, 1e-10));

    let mut worst_special: f64 = 0.0;
    for _ in 0..20 {
        let b = rng.gen_range(-3.0..3.0);
        let se = group::special_elements(b);
        let lhs = se.k_plus.mul(&se.n_b).mul(&se.k_minus);
        worst_special =
            worst_special.max(lhs.max_abs_diff(&group::SL2Element::shear(-b)));
        let half = group::SL2Element::shear(b / 2.0);
        worst_special =
            worst_special.max(half.mul(&se.k_plus).mul(&half).max_abs_diff(&se.h_b));
    }
    checks.push(Check::bound("group/rotation-shear-identities", worst_special, 1e-12));

    let mut comm_defect: f64 = 0.0;
    let mut form_dim_ok = true;
    let mut parity_ok = true;
    for n in 1..=n_max.min(8) {
        let r = group::sl2_irrep(n);
        let c = |a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>| a * b - b * a;
        comm_defect = comm_defect
            .max((c(&r.x, &r.y) - &r.h).amax())
            .max((c(&r.h, &r.x) - 2.0 * &r.x).amax())
            .max((c(&r.h, &r.y) + 2.0 * &r.y).amax());
        let basis = group::invariant_forms(n);
        form_dim_ok &= basis.len() == 1;
        if let Some(form) = basis.first() {
            let sym = (form - form.transpose()).amax();
            let skew = (form + form.transpose()).amax();
            parity_ok &= if n % 2 == 1 { sym < 1e-10 } else { skew < 1e-10 };
        }
    }
    checks.push(Check::bound("group/irrep-commutators", comm_defect, 0.0));
    checks.push(Check {
        name: "group/invariant-form-dimension".into(),
        measured: if form_dim_ok { 1.0 } else { 0.0 },
        threshold: 1.0,
        passed: form_dim_ok,
    });
    checks.push(Check {
        name: "group/invariant-form-parity".into(),
        measured: if parity_ok { 1.0 } else { 0.0 },
        threshold: 1.0,
        passed: parity_ok,
    });
    checks
}

pub fn pv_suite(count: usize, seed: u64) -> Vec<Check> {
    let cfg = PVConfig::default();
    let mut checks = Vec::new();

    let mut worst_defect: f64 = 0.0;
    let mut fallback_ok = true;
    for psi in pv::random_gaussian_mixtures(count, seed) {
        let d = pv::d_dist(&psi, &cfg).unwrap();
        let dt = pv::d_tilde(&psi, &cfg).unwrap();
        let target = (psi.eval)(0.0, 0.0) * PI * PI;
        let defect = (d.value + dt.value - target).norm();
        worst_defect = worst_defect.max(defect);
        fallback_ok &= defect
            <= (1e-3 * PI * PI).max(10.0 * (d.error_estimate + dt.error_estimate));
    }
    checks.push(Check::bound("pv/point-mass-identity", worst_defect, 1e-3 * PI * PI));
    checks.push(Check {
        name: "pv/defect-within-error-budget".into(),
        measured: if fallback_ok { 1.0 } else { 0.0 },
        threshold: 1.0,
        passed: fallback_ok,
    });

    // refinement stability on one mixture
    let psi = pv::gaussian_mixture_2d(&[(0.8, 0.3, -0.2, 1.1, 0.9)]);
    let d = pv::d_dist(&psi, &cfg).unwrap();
    let d2 = pv::d_dist(&psi, &cfg.refined()).unwrap();
    checks.push(Check::bound(
        "pv/ladder-refinement-stability",
        (d.value - d2.value).norm(),
        3.0 * d.error_estimate.max(1e-12),
    ));
    checks
}

/// Compare the compactly truncated distribution on a bi-invariant input
/// against its one-dimensional reduction; both sides by independent
/// quadratures. Heavier than the other suites.
pub fn dr_reduction_check(n: usize, r: f64, angles: usize) -> Check {
    let cfg = PVConfig { k_max: 12, panel_order: 6, ..Default::default() };
    let bump = Arc::new(pv::separable_bump(1.0, 2.0, 1.5));
    let avg = Arc::new(pv::k_average(&bump, n, angles));
    let lhs = pv::d_r_eval(&avg, r, n, &cfg, 4).unwrap();
    // rhs: (pi^2/2) int_{-R}^R phi(n_b, 0, 0) beta(b)^{-1} db
    let avg2 = avg.clone();
    let f = move |b: f64| -> f64 {
        let g = GroupElement::from_sl2(group::SL2Element::shear(b), n);
        avg2.eval_at(&g).re / group::beta(b)
    };
    let rhs = PI * PI / 2.0 * quad::composite(&f, -r, r, 64, 8);
    let rel = (lhs.value.re - rhs).abs() / rhs.abs().max(1e-12);
    Check::bound(&format!("pv/bi-invariant-reduction-n{n}"), rel, 5e-2)
}

pub fn rep_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut worst_hom: f64 = 0.0;
    let mut worst_mod: f64 = 0.0;
    for n in 1..=3 {
        let params = RepParams::new(
            n,
            rng.gen_range(-2.0..2.0),
            (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        )
        .unwrap();
        let xi = rep::StateFunction::new(
            |c: f64, v: f64| Complex64::new((-(c * c + v * v)).exp(), 0.0),
            6.0,
            6.0,
        );
        let g = H0Element {
            b: rng.gen_range(-1.0..1.0),
            u: (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            t: rng.gen_range(-1.0..1.0),
        };
        let h = H0Element {
            b: rng.gen_range(-1.0..1.0),
            u: (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            t: rng.gen_range(-1.0..1.0),
        };
        let lhs = rep::pi_apply(&g, &rep::pi_apply(&h, &xi, &params).unwrap(), &params).unwrap();
        let rhs = rep::pi_apply(&rep::h0_compose(&g, &h).unwrap(), &xi, &params).unwrap();
        for _ in 0..34 {
            let c = rng.gen_range(-2.0..2.0);
            let v = rng.gen_range(-2.0..2.0);
            worst_hom = worst_hom.max((lhs.eval_at(c, v) - rhs.eval_at(c, v)).norm());
            let tr = rep::pi_apply(&g, &xi, &params).unwrap();
            worst_mod = worst_mod
                .max((tr.eval_at(c, v).norm() - xi.eval_at(c - g.b, v - g.u[n]).norm()).abs());
        }

        // q' coefficient identity
        let gap = rep::q_poly(&params)
            .derivative()
            .max_abs_coeff_diff(&rep::q_prime_direct(&params));
        checks.push(Check::bound(&format!("rep/q-derivative-identity-n{n}"), gap, 1e-12));
    }
    checks.push(Check::bound("rep/action-homomorphism", worst_hom, 1e-9));
    checks.push(Check::bound("rep/action-unimodularity", worst_mod, 1e-9));

    // keystone: explicit kernel is pi times the oscillator family
    let mut worst_kernel: f64 = 0.0;
    for n in 1..=3 {
        let params = RepParams::new(
            n,
            1.0,
            (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        )
        .unwrap();
        let kern = rep::dr_kernel(&params, 3.0).unwrap();
        let spec = KernelSpec::new(
            n,
            n as f64 / 2.0,
            rep::p_from_zeta(&params),
            3.0,
            (n as f64 / 2.0).max(1.0),
        )
        .unwrap();
        let jet = spec.jet();
        for _ in 0..10_000 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let y = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let a = kern(x, y);
            let b = oscillator::or_kernel(&spec, &jet, x, y) * PI;
            worst_kernel = worst_kernel.max((a - b).norm() / (1.0 + a.norm()));
        }
    }
    checks.push(Check::bound("rep/explicit-kernel-keystone", worst_kernel, 1e-12));
    checks
}

pub fn decomp_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // exact reconstruction for random polynomials of degree 2..4
    let mut worst_rec: f64 = 0.0;
    for _ in 0..5 {
        let deg = rng.gen_range(2..=4usize);
        let mut coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if coeffs[deg].abs() < 0.2 {
            coeffs[deg] = 0.5;
        }
        let p = PolySpec::new(&coeffs);
        let spec =
            KernelSpec::new(deg, deg as f64 / 2.0, p, 2.0_f64.powi(16), (deg as f64).max(1.0))
                .unwrap();
        let jet = spec.jet();
        let pd = decomp::PolyDerivs::new(&spec.p);
        let mut done = 0;
        while done < 2000 {
            let j = decomp::DyadicIndex {
                j1: rng.gen_range(11..14),
                j2: rng.gen_range(-3..4),
            };
            let x = [rng.gen_range(-6000.0..6000.0), rng.gen_range(-6.0..6.0)];
            let d1 = rng.gen_range(0.4..1.6) * 2.0_f64.powi(j.j1)
                * [1.0, -1.0][rng.gen_range(0..2)];
            let d2 = rng.gen_range(0.4..1.6) * 2.0_f64.powi(j.j2)
                * [1.0, -1.0][rng.gen_range(0..2)];
            let y = [x[0] - d1, x[1] - d2];
            if jet.xi(x, y).abs() < 1e-6 {
                continue;
            }
            done += 1;
            let t = decomp::t_j(&spec, &jet, j, x, y);
            let s = decomp::reconstruct_sum(&spec, &jet, &pd, j, x, y);
            worst_rec = worst_rec.max((t - s).norm() / (1.0 + t.norm()));
        }
    }
    checks.push(Check::bound("decomp/exact-reconstruction", worst_rec, 1e-10));

    // partitions of unity
    let mut worst_part: f64 = 0.0;
    for _ in 0..50 {
        let s = rng.gen_range(0.05..3000.0_f64);
        let total: f64 = (-60..=60).map(|j| decomp::eta(s / 2.0_f64.powi(j))).sum();
        worst_part = worst_part.max((total - 1.0).abs());
    }
    checks.push(Check::bound("decomp/dyadic-partition-of-unity", worst_part, 1e-12));

    // cancellation of the odd dyadic factor
    let mut worst_cancel: f64 = 0.0;
    for &j2 in &[-2i32, 0, 3] {
        let f = |x2: f64| decomp::chi_2(x2, j2);
        let scale = 2.0_f64.powi(j2);
        worst_cancel =
            worst_cancel.max(quad::composite(&f, -2.0 * scale, 2.0 * scale, 64, 10).abs());
    }
    checks.push(Check::bound("decomp/odd-factor-cancellation", worst_cancel, 1e-10));

    // derivative formulas
    let p = PolySpec::new(&[0.4, -1.0, 0.3, 0.5]);
    let report = decomp::derivative_check(&p, 1000, seed ^ 0xabc);
    checks.push(Check::bound("decomp/derivative-closed-forms", report.worst_rel, 1e-6));
    checks.push(Check::bound(
        "decomp/third-derivative-constant",
        report.psi_x2x2y1_dev,
        1e-7,
    ));
    checks.push(Check::bound(
        "decomp/vanishing-mixed-derivatives",
        report.psi_x2y2_dev.max(report.theta_x2y2_dev),
        1e-7,
    ));
    checks
}

pub fn oscillator_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // pointwise kernel bound |K| <= |Xi|
    let spec = KernelSpec::with_default_bound(2, 1.0, PolySpec::new(&[0.1, 0.4, 0.2]), 2.0)
        .unwrap();
    let jet = spec.jet();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let y = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
        let k = oscillator::or_kernel(&spec, &jet, x, y).norm();
        worst = worst.max(k - jet.xi(x, y).abs());
    }
    checks.push(Check::bound("oscillator/kernel-pointwise-bound", worst, 1e-12));

    // norm estimator against a dense oracle on a small grid
    let grid = oscillator::Grid2 { x1_half: 1.2, x2_half: 1.0, n1: 15, n2: 18 };
    let sp = spec.clone();
    let jet2 = spec.jet();
    let op = oscillator::discretize_kernel(grid.clone(), move |x, y| {
        oscillator::or_kernel(&sp, &jet2, x, y)
    });
    let est = oscillator::op_norm(&op, 1e-12).unwrap();
    let npts = grid.len();
    let mut m = nalgebra::DMatrix::from_element(npts, npts, Complex64::new(0.0, 0.0));
    for i1 in 0..grid.n1 {
        for i2 in 0..grid.n2 {
            for j1 in 0..grid.n1 {
                for j2 in 0..grid.n2 {
                    m[(i1 * grid.n2 + i2, j1 * grid.n2 + j2)] = op.kernel_at(
                        [grid.x1(i1), grid.x2(i2)],
                        [grid.x1(j1), grid.x2(j2)],
                    ) * grid.weight();
                }
            }
        }
    }
    let smax = m.svd(false, false).singular_values.iter().cloned().fold(0.0_f64, f64::max);
    checks.push(Check::bound(
        "oscillator/norm-vs-dense-svd",
        (est.value - smax).abs() / smax.max(1e-300),
        1e-8,
    ));

    // adjoint symmetry of the estimated norm
    let adj = oscillator::op_norm(&oscillator::AdjointOp(&op), 1e-10).unwrap();
    checks.push(Check::bound(
        "oscillator/adjoint-norm-symmetry",
        (est.value - adj.value).abs() / est.value.max(1e-300),
        1e-6,
    ));

    // commutative symbol against the closed form
    let mut worst_comm: f64 = 0.0;
    for &r in &[4.0, 16.0, 64.0] {
        let (exact, numeric) = oscillator::commutative_norm(r);
        worst_comm = worst_comm.max((numeric / exact - 1.0).abs());
    }
    checks.push(Check::bound("oscillator/commutative-symbol", worst_comm, 1e-3));
    checks
}

/// Everything the fast `verify` command runs, grouped by module.
pub fn all_suites(n_max: usize, seed: u64) -> Vec<(&'static str, Vec<Check>)> {
    vec![
        ("group", group_suite(n_max, seed)),
        ("pv", pv_suite(8, seed.wrapping_add(1))),
        ("rep", rep_suite(seed.wrapping_add(2))),
        ("decomp", decomp_suite(seed.wrapping_add(3))),
        ("oscillator", oscillator_suite(seed.wrapping_add(4))),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseJet;

    #[test]
    fn quick_suites_pass() {
        for (module, checks) in all_suites(4, 7) {
            for c in checks {
                assert!(
                    c.passed,
                    "{module}: {} failed ({} > {})",
                    c.name, c.measured, c.threshold
                );
            }
        }
    }

    #[test]
    fn phase_jet_reexport_consistency() {
        // the suite relies on jets being cheap to rebuild
        let p = PolySpec::new(&[1.0, 2.0]);
        let jet = PhaseJet::new(&p);
        assert_eq!(jet.dp.coeffs(), &[2.0]);
    }
}
