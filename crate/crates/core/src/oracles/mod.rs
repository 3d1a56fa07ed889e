//! Independent reference implementations.
//!
//! Everything in this module exists to check the fast paths from the outside:
//! the analytic pendulum ([`elliptic`]), a minimal-coordinate RK4 rigid-body
//! integrator ([`rigid`]), a dense factorization of the full KKT system
//! ([`dense_kkt`]), and the non-prefactorized single-body stepping path
//! ([`vanilla`]). None of these share solver code with the engine.

pub mod dense_kkt;
pub mod elliptic;
pub mod rigid;
pub mod vanilla;

pub use dense_kkt::dense_kkt_solve;
pub use elliptic::{elliptic_k, jacobi_sn, pendulum_theta, PendulumParams};
pub use rigid::{rk4_rigid_step, RigidReference};
