//! Arithmetic for the semidirect products `G_n = SL(2,R) x| H^n`.
//!
//! `SL(2,R)` acts on the Heisenberg group `H^n = R^{2n} x R` through its
//! unique `2n`-dimensional irreducible representation `Z`, realized on
//! homogeneous polynomials of degree `2n-1` in two variables. With
//! `alpha_j = C(2n-1, j-1)^{1/2}` the matrix entries are
//!
//! ```text
//! Z(A)_{ij} = sum_l C(j-1, l) C(2n-j, 2n-i-l) (alpha_j / alpha_i)
//!             a^{2n-i-l} b^l c^{i+l-j} d^{j-l-1}
//! ```
//!
//! (1-indexed, binomials vanishing out of range). `Z` preserves the
//! alternating form `B_{ij} = (-1)^j [i + j = 2n+1]`, which is what makes
//! the twisted product on `R^{2n} x R` a group `SL(2,R)` acts on:
//!
//! ```text
//! (A, u, t)(A', u', t') = (A A', u + Z(A) u', t + t' + u^T B Z(A) u')
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GroupError {
    #[error("matrix is not unimodular: det = {det}")]
    NotUnimodular { det: f64 },
    #[error("dimension mismatch: expected n = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector length {len} does not match 2n = {expected}")]
    BadVectorLength { len: usize, expected: usize },
}

/// Largest supported `n`; binomials C(2n-1, k) stay exactly representable
/// in f64 well past this point.
pub const MAX_N: usize = 16;

/// Pascal-recurrence binomial, exact in f64 for every argument used here.
pub fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || k > n || n < 0 {
        return 0.0;
    }
    let mut row = vec![1.0_f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row[k as usize]
}

/// Weights `alpha_j = C(2n-1, j-1)^{1/2}`, `j = 1..2n`, of the polynomial
/// model of the representation.
pub fn alpha_coeffs(n: usize) -> Vec<f64> {
    assert!(n >= 1 && n <= MAX_N, "n out of supported range");
    (1..=2 * n)
        .map(|j| binomial(2 * n as i64 - 1, j as i64 - 1).sqrt())
        .collect()
}

// ---------------------------------------------------------------------------
// SL(2,R)

/// A 2x2 real matrix of determinant one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SL2Element {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SL2Element {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, GroupError> {
        let det = a * d - b * c;
        if (det - 1.0).abs() > 1e-12 * (1.0 + a.abs() * d.abs() + b.abs() * c.abs()) {
            return Err(GroupError::NotUnimodular { det });
        }
        Ok(SL2Element { a, b, c, d })
    }

    pub fn identity() -> Self {
        SL2Element { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        SL2Element { a: c, b: s, c: -s, d: c }
    }

    /// Upper-triangular unipotent `n_b`.
    pub fn shear(b: f64) -> Self {
        SL2Element { a: 1.0, b, c: 0.0, d: 1.0 }
    }

    pub fn diagonal(lambda: f64) -> Self {
        SL2Element { a: lambda, b: 0.0, c: 0.0, d: 1.0 / lambda }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &SL2Element) -> SL2Element {
        SL2Element {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Exact adjugate inverse.
    pub fn inverse(&self) -> SL2Element {
        SL2Element { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn transpose(&self) -> SL2Element {
        SL2Element { a: self.a, b: self.c, c: self.b, d: self.d }
    }

    pub fn max_abs_diff(&self, o: &SL2Element) -> f64 {
        (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs())
    }
}

/// `beta(b) = (1 + b^2/4)^{1/2}`, the normalization of the rotations below.
pub fn beta(b: f64) -> f64 {
    crate::phase::beta(b)
}

/// The distinguished elements `k_b^+`, `k_b^-`, `n_b`, `h_b` together with
/// `beta(b)`. They satisfy `k_b^+ n_b k_b^- = n_{-b}` and
/// `n_{b/2} k_b^+ n_{b/2} = h_b`.
pub struct SpecialElements {
    pub k_plus: SL2Element,
    pub k_minus: SL2Element,
    pub n_b: SL2Element,
    pub h_b: SL2Element,
    pub beta: f64,
}

pub fn special_elements(b: f64) -> SpecialElements {
    let bet = beta(b);
    let k_plus = SL2Element {
        a: 0.5 * b / bet,
        b: 1.0 / bet,
        c: -1.0 / bet,
        d: 0.5 * b / bet,
    };
    let k_minus = SL2Element {
        a: -0.5 * b / bet,
        b: -1.0 / bet,
        c: 1.0 / bet,
        d: -0.5 * b / bet,
    };
    let h_b = SL2Element { a: 0.0, b: bet, c: -1.0 / bet, d: 0.0 };
    SpecialElements { k_plus, k_minus, n_b: SL2Element::shear(b), h_b, beta: bet }
}

// ---------------------------------------------------------------------------
// The 2n-dimensional representation

/// A `2n x 2n` matrix acting on the translation part of `H^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrix {
    pub n: usize,
    pub mat: DMatrix<f64>,
}

impl RepMatrix {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.mat * v
    }

    pub fn mul(&self, o: &RepMatrix) -> RepMatrix {
        RepMatrix { n: self.n, mat: &self.mat * &o.mat }
    }

    pub fn transpose(&self) -> RepMatrix {
        RepMatrix { n: self.n, mat: self.mat.transpose() }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, o: &RepMatrix) -> f64 {
        (&self.mat - &o.mat).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// The alternating form: `B_{ij} = (-1)^j` when `i + j = 2n + 1`, else 0.
pub fn symplectic_form(n: usize) -> RepMatrix {
    let dim = 2 * n;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 1..=dim {
        let j = 2 * n + 1 - i;
        m[(i - 1, j - 1)] = if j % 2 == 0 { 1.0 } else { -1.0 };
    }
    RepMatrix { n, mat: m }
}

fn ipow(x: f64, k: i64) -> f64 {
    debug_assert!(k >= 0);
    match k {
        0 => 1.0,
        1 => x,
        _ => x.powi(k as i32),
    }
}

/// The representing matrix `Z(A)` on `R^{2n}`.
pub fn rep_z(a: &SL2Element, n: usize) -> RepMatrix {
    assert!(n >= 1 && n <= MAX_N);
    let dim = 2 * n as i64;
    let alpha = alpha_coeffs(n);
    let mut m = DMatrix::zeros(dim as usize, dim as usize);
    for i in 1..=dim {
        for j in 1..=dim {
            // the binomials restrict l to a window where every exponent
            // below is nonnegative
            let lo = 0.max(j - i);
            let hi = (j - 1).min(dim - i);
            let mut acc = 0.0;
            for l in lo..=hi {
                acc += binomial(j - 1, l)
                    * binomial(dim - j, dim - i - l)
                    * ipow(a.a, dim - i - l)
                    * ipow(a.b, l)
                    * ipow(a.c, i + l - j)
                    * ipow(a.d, j - l - 1);
            }
            m[(i as usize - 1, j as usize - 1)] =
                acc * alpha[j as usize - 1] / alpha[i as usize - 1];
        }
    }
    RepMatrix { n, mat: m }
}

/// Closed-form `Z(n_b)`: upper triangular with
/// `P(b)_{ij} = (alpha_j / alpha_i) C(j-1, j-i) b^{j-i}` for `j >= i`.
pub fn p_of_b(b: f64, n: usize) -> RepMatrix {
    assert!(n >= 1 && n <= MAX_N);
    let dim = 2 * n;
    let alpha = alpha_coeffs(n);
    let mut m = DMatrix::zeros(dim, dim);
    for i in 1..=dim {
        for j in i..=dim {
            m[(i - 1, j - 1)] = alpha[j - 1] / alpha[i - 1]
                * binomial(j as i64 - 1, (j - i) as i64)
                * ipow(b, (j - i) as i64);
        }
    }
    RepMatrix { n, mat: m }
}

/// Single column `P(b) e_col` (1-indexed column), used by the induced
/// representation where only a few columns enter the phases.
pub fn p_column(b: f64, n: usize, col: usize) -> DVector<f64> {
    let dim = 2 * n;
    assert!(col >= 1 && col <= dim);
    let alpha = alpha_coeffs(n);
    let mut v = DVector::zeros(dim);
    for i in 1..=col {
        v[i - 1] = alpha[col - 1] / alpha[i - 1]
            * binomial(col as i64 - 1, (col - i) as i64)
            * ipow(b, (col - i) as i64);
    }
    v
}

// ---------------------------------------------------------------------------
// The semidirect product

#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergPoint {
    pub u: DVector<f64>,
    pub t: f64,
}

impl HeisenbergPoint {
    pub fn new(u: DVector<f64>, t: f64, n: usize) -> Result<Self, GroupError> {
        if u.len() != 2 * n {
            return Err(GroupError::BadVectorLength { len: u.len(), expected: 2 * n });
        }
        Ok(HeisenbergPoint { u, t })
    }

    pub fn zero(n: usize) -> Self {
        HeisenbergPoint { u: DVector::zeros(2 * n), t: 0.0 }
    }
}

/// A point `(A, u, t)` of `G_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub a: SL2Element,
    pub h: HeisenbergPoint,
    pub n: usize,
}

impl GroupElement {
    pub fn new(a: SL2Element, h: HeisenbergPoint, n: usize) -> Result<Self, GroupError> {
        if h.u.len() != 2 * n {
            return Err(GroupError::BadVectorLength { len: h.u.len(), expected: 2 * n });
        }
        Ok(GroupElement { a, h, n })
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { a: SL2Element::identity(), h: HeisenbergPoint::zero(n), n }
    }

    /// `(A, 0, 0)` for `A` in `SL(2,R)`.
    pub fn from_sl2(a: SL2Element, n: usize) -> Self {
        GroupElement { a, h: HeisenbergPoint::zero(n), n }
    }

    pub fn max_abs_diff(&self, o: &GroupElement) -> f64 {
        let mu = (&self.h.u - &o.h.u).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.a.max_abs_diff(&o.a).max(mu).max((self.h.t - o.h.t).abs())
    }
}

/// `u^T B v` for the alternating form in dimension `2n`.
pub fn symplectic_pairing(u: &DVector<f64>, v: &DVector<f64>, n: usize) -> f64 {
    let dim = 2 * n;
    let mut acc = 0.0;
    for i in 1..=dim {
        let j = 2 * n + 1 - i;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += u[i - 1] * sign * v[j - 1];
    }
    acc
}

/// Product `(A A', u + Z(A) u', t + t' + u^T B Z(A) u')`.
pub fn compose(g: &GroupElement, h: &GroupElement) -> Result<GroupElement, GroupError> {
    if g.n != h.n {
        return Err(GroupError::DimensionMismatch { expected: g.n, got: h.n });
    }
    let n = g.n;
    let z = rep_z(&g.a, n);
    let zu = z.apply(&h.h.u);
    let t = g.h.t + h.h.t + symplectic_pairing(&g.h.u, &zu, n);
    Ok(GroupElement {
        a: g.a.mul(&h.a),
        h: HeisenbergPoint { u: &g.h.u + &zu, t },
        n,
    })
}

/// Inverse `(A^{-1}, -Z(A^{-1}) u, -t)`.
pub fn inverse(g: &GroupElement) -> GroupElement {
    let ainv = g.a.inverse();
    let z = rep_z(&ainv, g.n);
    GroupElement {
        a: ainv,
        h: HeisenbergPoint { u: -z.apply(&g.h.u), t: -g.h.t },
        n: g.n,
    }
}

/// Random element with Iwasawa coordinates drawn as: angle uniform in
/// `[0, 2pi)`, log-scale uniform in `[-1, 1]`, shear uniform in `[-2, 2]`.
/// Keeps `Z(A)` numerically tame for small `n`.
pub fn random_sl2<R: Rng>(rng: &mut R) -> SL2Element {
    let angle = rng.gen_range(0.0..std::f64::consts::TAU);
    let s: f64 = rng.gen_range(-1.0..1.0);
    let x = rng.gen_range(-2.0..2.0);
    SL2Element::rotation(angle)
        .mul(&SL2Element::diagonal(s.exp()))
        .mul(&SL2Element::shear(x))
}

pub fn random_group_element<R: Rng>(rng: &mut R, n: usize) -> GroupElement {
    let a = random_sl2(rng);
    let u = DVector::from_fn(2 * n, |_, _| rng.gen_range(-1.0..1.0));
    let t = rng.gen_range(-1.0..1.0);
    GroupElement { a, h: HeisenbergPoint { u, t }, n }
}

// ---------------------------------------------------------------------------
// The n-dimensional irreducible representation of sl(2,R)

/// Matrices of the standard basis `{H, X, Y}` of `sl(2,R)` in the unique
/// irreducible representation of dimension `n`, on a weight basis
/// `E_0, ..., E_{n-1}`:
///
/// ```text
/// H E_j = (n - 1 - 2j) E_j
/// X E_j = j (n - j) E_{j-1}      (X E_0 = 0)
/// Y E_j = E_{j+1}                (Y E_{n-1} = 0)
/// ```
///
/// With these conventions the defining relations `[X, Y] = H`,
/// `[H, X] = 2X`, `[H, Y] = -2Y` hold exactly in integer arithmetic.
#[derive(Debug, Clone)]
pub struct Sl2Irrep {
    pub n: usize,
    pub h: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

pub fn sl2_irrep(n: usize) -> Sl2Irrep {
    assert!(n >= 1);
    let mut h = DMatrix::zeros(n, n);
    let mut x = DMatrix::zeros(n, n);
    let mut y = DMatrix::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = (n as f64 - 1.0) - 2.0 * j as f64;
        if j >= 1 {
            // raising operator: E_j -> j (n - j) E_{j-1}
            x[(j - 1, j)] = j as f64 * (n - j) as f64;
        }
        if j + 1 < n {
            // lowering operator: E_j -> E_{j+1}
            y[(j + 1, j)] = 1.0;
        }
    }
    Sl2Irrep { n, h, x, y }
}

/// Orthonormal basis of the space of bilinear forms `B` on `R^n` with
/// `B(pi(U) v, w) + B(v, pi(U) w) = 0` for `U` in `{H, X, Y}`, i.e. the
/// joint null space of `U^T B + B U`. Numerically: SVD null space with
/// threshold `1e-10` relative to the top singular value.
pub fn invariant_forms(n: usize) -> Vec<DMatrix<f64>> {
    let rep = sl2_irrep(n);
    let n2 = n * n;
    let mut sys = DMatrix::zeros(3 * n2, n2);
    for (blk, u) in [&rep.h, &rep.x, &rep.y].into_iter().enumerate() {
        // map B -> U^T B + B U, vectorized column-major:
        // vec(U^T B) = (I (x) U^T) vec B,  vec(B U) = (U^T (x) I) vec B
        for p in 0..n {
            for q in 0..n {
                let row = blk * n2 + q * n + p;
                for r in 0..n {
                    sys[(row, q * n + r)] += u[(r, p)];
                    sys[(row, r * n + p)] += u[(r, q)];
                }
            }
        }
    }
    let svd = sys.svd(false, true);
    let v_t = svd.v_t.expect("svd with V requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = 1e-10 * smax.max(1.0);
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s < tol {
            let row = v_t.row(k);
            let mut b = DMatrix::zeros(n, n);
            for q in 0..n {
                for p in 0..n {
                    b[(p, q)] = row[q * n + p];
                }
            }
            basis.push(b);
        }
    }
    // rows of V^T beyond the singular-value count are also null directions
    for k in svd.singular_values.len()..v_t.nrows() {
        let row = v_t.row(k);
        let mut b = DMatrix::zeros(n, n);
        for q in 0..n {
            for p in 0..n {
                b[(p, q)] = row[q * n + p];
            }
        }
        basis.push(b);
    }
    basis
}
