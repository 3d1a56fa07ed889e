//! Minimal-coordinate rigid-body reference integrator.
//!
//! Classical RK4 on Euler's equations plus quaternion kinematics, with the
//! quaternion renormalized every step. Supports a free body (force/torque
//! about the center of mass) and a body pivoted at a fixed point (gravity
//! torque about the pivot), which covers the single-body benchmarks.

use crate::math::{Mat3, Vec3};
use nalgebra::Vector4;

/// Reference rigid state. `rotation` maps body to world; `omega` is the
/// body-frame angular velocity; `inertia` is expressed in the body frame
/// about the reference point (center of mass for free bodies, the pivot for
/// pivoted ones).
#[derive(Debug, Clone, Copy)]
pub struct RigidReference {
    /// Unit quaternion (w, x, y, z).
    pub quat: Vector4<f64>,
    pub position: Vec3,
    pub omega_body: Vec3,
    pub velocity: Vec3,
    pub inertia_body: Mat3,
    pub mass: f64,
}

/// External load for one step of the reference integrator.
#[derive(Debug, Clone, Copy)]
pub enum RigidLoad {
    /// Torque-free motion.
    Free,
    /// Constant world torque about the reference point plus a force.
    Wrench { tau_world: Vec3, f_world: Vec3 },
    /// Fixed pivot under gravity: the center of mass sits at `com_offset`
    /// from the pivot in body coordinates.
    Pivot { gravity: Vec3, com_offset: Vec3 },
}

pub fn quat_to_rotation(q: &Vector4<f64>) -> Mat3 {
    crate::math::rotation_from_quat(q[0], q[1], q[2], q[3])
}

fn quat_derivative(q: &Vector4<f64>, omega_body: &Vec3) -> Vector4<f64> {
    // q̇ = ½ q ⊗ (0, ω_body)
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let (ox, oy, oz) = (omega_body.x, omega_body.y, omega_body.z);
    0.5 * Vector4::new(
        -x * ox - y * oy - z * oz,
        w * ox + y * oz - z * oy,
        w * oy + z * ox - x * oz,
        w * oz + x * oy - y * ox,
    )
}

struct Derivative {
    dq: Vector4<f64>,
    domega: Vec3,
    dpos: Vec3,
    dvel: Vec3,
}

fn derivative(state: &RigidReference, load: &RigidLoad) -> Derivative {
    let r = quat_to_rotation(&state.quat);
    let (tau_body, accel) = match load {
        RigidLoad::Free => (Vec3::zeros(), Vec3::zeros()),
        RigidLoad::Wrench { tau_world, f_world } => {
            (r.transpose() * tau_world, f_world / state.mass)
        }
        RigidLoad::Pivot {
            gravity,
            com_offset,
        } => {
            // torque about the pivot, expressed in the body frame
            let g_body = r.transpose() * gravity;
            (state.mass * com_offset.cross(&g_body), Vec3::zeros())
        }
    };
    let i = &state.inertia_body;
    let i_inv = i.try_inverse().expect("SPD inertia");
    let domega = i_inv * (tau_body - state.omega_body.cross(&(i * state.omega_body)));
    Derivative {
        dq: quat_derivative(&state.quat, &state.omega_body),
        domega,
        dpos: state.velocity,
        dvel: accel,
    }
}

fn advanced(state: &RigidReference, d: &Derivative, h: f64) -> RigidReference {
    RigidReference {
        quat: state.quat + d.dq * h,
        position: state.position + d.dpos * h,
        omega_body: state.omega_body + d.domega * h,
        velocity: state.velocity + d.dvel * h,
        inertia_body: state.inertia_body,
        mass: state.mass,
    }
}

/// One classical RK4 step; the quaternion is renormalized afterwards.
pub fn rk4_rigid_step(state: &RigidReference, load: &RigidLoad, h: f64) -> RigidReference {
    let k1 = derivative(state, load);
    let s2 = advanced(state, &k1, h / 2.0);
    let k2 = derivative(&s2, load);
    let s3 = advanced(state, &k2, h / 2.0);
    let k3 = derivative(&s3, load);
    let s4 = advanced(state, &k3, h);
    let k4 = derivative(&s4, load);
    let mut next = RigidReference {
        quat: state.quat
            + (k1.dq + k2.dq * 2.0 + k3.dq * 2.0 + k4.dq) * (h / 6.0),
        position: state.position
            + (k1.dpos + k2.dpos * 2.0 + k3.dpos * 2.0 + k4.dpos) * (h / 6.0),
        omega_body: state.omega_body
            + (k1.domega + k2.domega * 2.0 + k3.domega * 2.0 + k4.domega) * (h / 6.0),
        velocity: state.velocity
            + (k1.dvel + k2.dvel * 2.0 + k3.dvel * 2.0 + k4.dvel) * (h / 6.0),
        inertia_body: state.inertia_body,
        mass: state.mass,
    };
    next.quat /= next.quat.norm();
    next
}

impl RigidReference {
    pub fn new(inertia_body: Mat3, mass: f64) -> RigidReference {
        RigidReference {
            quat: Vector4::new(1.0, 0.0, 0.0, 0.0),
            position: Vec3::zeros(),
            omega_body: Vec3::zeros(),
            velocity: Vec3::zeros(),
            inertia_body,
            mass,
        }
    }

    pub fn rotation(&self) -> Mat3 {
        quat_to_rotation(&self.quat)
    }

    /// Rotational kinetic energy `½ ωᵀ I ω`.
    pub fn rotational_energy(&self) -> f64 {
        0.5 * self.omega_body.dot(&(self.inertia_body * self.omega_body))
    }

    /// Angular momentum in world coordinates.
    pub fn angular_momentum_world(&self) -> Vec3 {
        self.rotation() * (self.inertia_body * self.omega_body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn torque_free_symmetric_body_keeps_omega() {
        let mut s = RigidReference::new(Mat3::identity() * 0.2, 1.0);
        s.omega_body = Vec3::new(0.3, -1.1, 0.8);
        let w0 = s.omega_body;
        for _ in 0..1000 {
            s = rk4_rigid_step(&s, &RigidLoad::Free, 1e-3);
            assert_relative_eq!(s.omega_body, w0, epsilon = 1e-10);
        }
    }

    #[test]
    fn torque_free_asymmetric_conserves_energy_and_momentum() {
        let inertia = Mat3::from_diagonal(&Vec3::new(0.1, 0.35, 0.6));
        let mut s = RigidReference::new(inertia, 1.0);
        s.omega_body = Vec3::new(1.5, 2.0, -1.0);
        let e0 = s.rotational_energy();
        let l0 = s.angular_momentum_world().norm();
        for _ in 0..100_000 {
            s = rk4_rigid_step(&s, &RigidLoad::Free, 1e-4);
        }
        assert_relative_eq!(s.rotational_energy(), e0, max_relative = 1e-8);
        assert_relative_eq!(s.angular_momentum_world().norm(), l0, max_relative = 1e-8);
        assert_relative_eq!(s.quat.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn intermediate_axis_flips_sign() {
        // distinct moments with a slight asymmetry; spin about the middle axis
        let inertia = Mat3::from_diagonal(&Vec3::new(0.1, 0.2 * 1.01, 0.4));
        let mut s = RigidReference::new(inertia, 1.0);
        s.omega_body = Vec3::new(1e-3, 3.0, 1e-3);
        let mut flips = 0;
        let mut sign = s.omega_body.y.signum();
        for _ in 0..400_000 {
            s = rk4_rigid_step(&s, &RigidLoad::Free, 1e-4);
            let current = s.omega_body.y.signum();
            if current != sign && s.omega_body.y.abs() > 0.5 {
                flips += 1;
                sign = current;
            }
        }
        assert!(flips >= 2, "expected tumbling, saw {flips} flips");
    }

    #[test]
    fn pivoted_top_conserves_energy() {
        // squat disc pivoted below the center of mass, spun about the axis
        let inertia_com = Mat3::from_diagonal(&Vec3::new(5e-4, 9.8e-4, 5e-4));
        let m = 0.0785;
        let d = 0.02;
        // inertia about the pivot (parallel axis along y offsets x/z moments)
        let inertia_pivot =
            inertia_com + m * Mat3::from_diagonal(&Vec3::new(d * d, 0.0, d * d));
        let mut s = RigidReference::new(inertia_pivot, m);
        let tilt = 5.0_f64.to_radians();
        s.quat = Vector4::new((tilt / 2.0).cos(), (tilt / 2.0).sin(), 0.0, 0.0);
        s.omega_body = Vec3::new(0.0, 10.0, 0.0);
        let g = Vec3::new(0.0, -9.81, 0.0);
        let load = RigidLoad::Pivot {
            gravity: g,
            com_offset: Vec3::new(0.0, d, 0.0),
        };
        let energy = |s: &RigidReference| {
            let com_world = s.rotation() * Vec3::new(0.0, d, 0.0);
            0.5 * s.omega_body.dot(&(s.inertia_body * s.omega_body)) - m * g.dot(&com_world)
        };
        let e0 = energy(&s);
        for _ in 0..30_000 {
            s = rk4_rigid_step(&s, &load, 1e-4);
        }
        assert_relative_eq!(energy(&s), e0, max_relative = 1e-8);
    }
}
