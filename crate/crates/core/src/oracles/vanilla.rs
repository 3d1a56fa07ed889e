//! Non-prefactorized single-body stepping path.
//!
//! The baseline implicit step assembles the 12×12 system matrix at the
//! current rotation and factorizes it from scratch every call — the cost the
//! co-rotated formulation removes. Produces the same increment as
//! [`crate::body::newton_step_single`] with `use_polar = true`; used by the
//! relative-performance benchmark and as a correctness cross-check.
//!
//! Also hosts the quartic orthogonality energy `k_A ‖A Aᵀ − I‖²_F`, kept out
//! of the fast path but useful to sanity-check the co-rotated elasticity.

use crate::body::{polar_rotation, AffineState, BodyError, BodyModel};
use crate::math::{a_from_q, conjugate_blocks, Mat3, Vec12};

/// One implicit Newton step with per-call assembly and factorization.
pub fn vanilla_newton_step(
    model: &BodyModel,
    state: &AffineState,
    f_a: &Vec12,
    h: f64,
) -> Result<Vec12, BodyError> {
    let r = polar_rotation(&state.a())?;
    let hessian =
        model.mass / (h * h) + conjugate_blocks(&r, &model.stiffness);
    let chol = hessian.cholesky().ok_or(BodyError::NonSpd)?;
    Ok(chol.solve(f_a))
}

/// Orthogonality energy `k_A ‖A Aᵀ − I₃‖²_F`.
pub fn orthogonality_energy(q: &Vec12, k_a: f64) -> f64 {
    let a = a_from_q(q);
    let dev = a * a.transpose() - Mat3::identity();
    k_a * dev.norm_squared()
}

/// Gradient of the orthogonality energy w.r.t. `q` (translation block zero):
/// `∂Ψ/∂A = 4 k_A (A Aᵀ − I) A`.
pub fn orthogonality_gradient(q: &Vec12, k_a: f64) -> Vec12 {
    let a = a_from_q(q);
    let dev = a * a.transpose() - Mat3::identity();
    let grad = dev * a * (4.0 * k_a);
    let mut out = Vec12::zeros();
    for j in 0..3 {
        out.fixed_rows_mut::<3>(3 * j).copy_from(&grad.column(j));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{newton_step_single, Material};
    use crate::math::{q_from_parts, rotation_from_quat, Vec3};
    use crate::mesh::box_mesh;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vanilla_matches_prefactored_step() {
        let model = BodyModel::precompute(
            &box_mesh(&Vec3::new(0.1, 0.1, 0.1)),
            Material {
                density: 1e3,
                youngs: 1e9,
                poisson: 0.3,
            },
            1e-3,
            None,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let r = rotation_from_quat(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            );
            let state = AffineState::from_pose(&r, &Vec3::zeros());
            let f = Vec12::from_fn(|_, _| rng.gen::<f64>() - 0.5);
            let fast = newton_step_single(&model, &state, &f, 1e-3, true).unwrap();
            let slow = vanilla_newton_step(&model, &state, &f, 1e-3).unwrap();
            assert_relative_eq!(fast, slow, max_relative = 1e-10);
        }
    }

    #[test]
    fn orthogonality_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let q = q_from_parts(
            &Mat3::from_fn(|_, _| 1.0 + 0.1 * (rng.gen::<f64>() - 0.5)),
            &Vec3::zeros(),
        );
        let k_a = 2.5;
        let g = orthogonality_gradient(&q, k_a);
        let step = 1e-6;
        for l in 0..12 {
            let mut plus = q;
            plus[l] += step;
            let mut minus = q;
            minus[l] -= step;
            let fd =
                (orthogonality_energy(&plus, k_a) - orthogonality_energy(&minus, k_a))
                    / (2.0 * step);
            assert_relative_eq!(g[l], fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn orthogonality_zero_on_rotations() {
        let r = rotation_from_quat(0.4, -0.2, 0.8, 0.1);
        let q = q_from_parts(&r, &Vec3::new(1.0, 2.0, 3.0));
        assert!(orthogonality_energy(&q, 3.0).abs() < 1e-12);
        assert!(orthogonality_gradient(&q, 3.0).norm() < 1e-10);
    }
}
