//! Commuting Hamiltonian families from separation relations.
//!
//! A separation system ties each Hamiltonian-valued unknown `H_j` to point data
//! `(a_i, b_i)` through relations that involve only one pair each. Solving for
//! `H` at a configuration (exactly over rationals, or in `f64`) and carrying
//! dual numbers through the solve yields the full Jacobian `dH/d(a, b)`, from
//! which the Poisson brackets `{H_i, H_j}` under any separation-local weighted
//! bracket are evaluated and checked to vanish.

pub mod cli;
pub mod dual;
pub mod error;
pub mod families;
pub mod fiber;
pub mod laurent;
pub mod linalg;
pub mod linear;
pub mod nonlinear;
pub mod par;
pub mod poisson;
pub mod scalar;
pub mod verify;

pub use dual::{dual_arith, make_variable, Dual, DualOp};
pub use error::{Error, Result};
pub use families::{FamilySpec, WeierstrassSpec};
pub use laurent::LaurentPoly2;
pub use linear::{LinearSeparationSystem, PointConfiguration, RankReport, SolutionWithJacobian};
pub use nonlinear::{MultiPoly, NonlinearSeparationSystem};
pub use poisson::PoissonStructure;
pub use scalar::{JsonScalar, Mode, Rational, Scalar};
