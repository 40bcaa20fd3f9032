//! Numerical laboratory for a family of singular oscillatory integral
//! operators arising from the action of `SL(2,R)` on Heisenberg groups.
//!
//! The crate implements, at desk scale and with machine-precision checks:
//!
//! - exact arithmetic for the semidirect products `G_n = SL(2,R) x| H^n`,
//!   the symplectic representation on `R^{2n}`, and the irreducible
//!   `sl(2,R)` representation with its invariant bilinear forms
//!   ([`group`]);
//! - principal-value and iterated principal-value integration, including
//!   the two iterated distributions whose order of integration does not
//!   commute, and bi-invariant averaging ([`pv`]);
//! - characters and induced representations of a distinguished solvable
//!   subgroup, a Plancherel isometry, and the explicit oscillatory kernel
//!   of the transformed convolution operators ([`rep`]);
//! - the singular oscillatory operator family, Nystrom discretization,
//!   matrix-free operator-norm estimation, norm-growth sweeps, and the
//!   commutative comparison operator ([`oscillator`]);
//! - dyadic cutoffs, the kernel splitting with its exact reconstruction
//!   identity, derivative formulas, and scaling probes ([`decomp`]).

pub mod decomp;
pub mod group;
pub mod oscillator;
pub mod phase;
pub mod poly;
pub mod pv;
pub mod quad;
pub mod rep;
pub mod suite;

pub use oscillator::{DiscretizedOperator, KernelSpec, NormEstimate};
pub use pv::{GTestFunction, PVConfig, PVResult, TestFunction2D};
pub use rep::{H0Element, RepParams, StateFunction};
pub use group::{GroupElement, HeisenbergPoint, RepMatrix, SL2Element, Sl2Irrep};

pub use poly::PolySpec;


