//! Multibody dynamics on affine body coordinates.
//!
//! Each near-rigid link carries 12 affine DOFs; rigidity comes from a stiff
//! co-rotated elastic energy whose system matrix is constant and factorized
//! once, so implicit stepping never refactorizes. Joints are expressed as
//! equality constraints on control-point coordinates and enforced exactly
//! through a dual-space KKT solve, with solvers specialized by joint topology
//! (chain, tree, loop, general graph).
//!
//! Modules:
//! - [`body`]: single-body precomputation, the pre-factorized Newton step,
//!   twist/wrench maps.
//! - [`joints`]: control-point reparameterization, the joint constraint
//!   families, residuals and gradients, joint limits.
//! - [`solvers`]: dual-system assembly, topology classification, and the
//!   specialized dual solvers.
//! - [`scene`]: scene documents, the time-stepping loop, trajectory recording.
//! - [`oracles`]: independent reference implementations used by tests and the
//!   benchmark suite (analytic pendulum, RK4 rigid-body integrator, dense KKT,
//!   non-prefactorized stepping).
//! - [`fixtures`]: bundled benchmark scenes and deterministic random instance
//!   generators.

pub mod bench;
pub mod body;
pub mod fixtures;
pub mod math;
pub mod mesh;
pub mod oracles;
pub mod scene;
pub mod solvers;

pub mod joints;

pub use body::{AffineState, BodyModel, Material, SpatialTwist, SpatialWrench};
