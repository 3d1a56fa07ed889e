//! Small-matrix helpers shared across the engine.
//!
//! The affine generalized coordinate `q ∈ R¹²` stacks the three columns of the
//! linear map `A` followed by the translation `t` (column-major `vec(A)`).
//! Several operations below act block-wise on the four 3-vectors of `q`.

use nalgebra::{Matrix3, Matrix3x4, SMatrix, SVector, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec12 = SVector<f64, 12>;
pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Mat3x4 = Matrix3x4<f64>;
pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Vec6 = SVector<f64, 6>;

/// Cross-product matrix: `skew(v) * u == v × u`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Extract `A` from `q` (columns `q[0..3]`, `q[3..6]`, `q[6..9]`).
pub fn a_from_q(q: &Vec12) -> Mat3 {
    Mat3::from_columns(&[
        q.fixed_rows::<3>(0).into_owned(),
        q.fixed_rows::<3>(3).into_owned(),
        q.fixed_rows::<3>(6).into_owned(),
    ])
}

/// Extract `t` from `q`.
pub fn t_from_q(q: &Vec12) -> Vec3 {
    q.fixed_rows::<3>(9).into_owned()
}

/// Pack `(A, t)` into `q`.
pub fn q_from_parts(a: &Mat3, t: &Vec3) -> Vec12 {
    let mut q = Vec12::zeros();
    for j in 0..3 {
        q.fixed_rows_mut::<3>(3 * j).copy_from(&a.column(j));
    }
    q.fixed_rows_mut::<3>(9).copy_from(t);
    q
}

/// Apply `diag₄(R)` to the four 3-blocks of `v`.
pub fn rotate_blocks(r: &Mat3, v: &Vec12) -> Vec12 {
    let mut out = Vec12::zeros();
    for k in 0..4 {
        let b = r * v.fixed_rows::<3>(3 * k);
        out.fixed_rows_mut::<3>(3 * k).copy_from(&b);
    }
    out
}

/// Dense `diag₄(R)` as a 12×12 matrix.
pub fn diag4(r: &Mat3) -> Mat12 {
    let mut m = Mat12::zeros();
    for k in 0..4 {
        m.fixed_view_mut::<3, 3>(3 * k, 3 * k).copy_from(r);
    }
    m
}

/// `diag₄(R) · M · diag₄(Rᵀ)` computed block-wise.
pub fn conjugate_blocks(r: &Mat3, m: &Mat12) -> Mat12 {
    let mut out = Mat12::zeros();
    for bi in 0..4 {
        for bj in 0..4 {
            let blk = r * m.fixed_view::<3, 3>(3 * bi, 3 * bj) * r.transpose();
            out.fixed_view_mut::<3, 3>(3 * bi, 3 * bj).copy_from(&blk);
        }
    }
    out
}

/// Rotation from a unit quaternion-like 4-vector (used by deterministic fixtures).
pub fn rotation_from_quat(w: f64, x: f64, y: f64, z: f64) -> Mat3 {
    let n = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / n, x / n, y / n, z / n);
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Rodrigues rotation about a unit axis.
pub fn rotation_about_axis(axis: &Vec3, angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::identity() * c + (axis * axis.transpose()) * (1.0 - c) + skew(axis) * s
}

/// Shortest rotation taking unit vector `from` to unit vector `to`.
pub fn rotation_between(from: &Vec3, to: &Vec3) -> Mat3 {
    nalgebra::Rotation3::rotation_between(from, to)
        .map(|r| r.into_inner())
        .unwrap_or_else(|| {
            // anti-parallel: π about any orthogonal axis
            rotation_about_axis(&orthogonal_unit(from), std::f64::consts::PI)
        })
}

/// Any unit vector orthogonal to `v` (‖v‖ > 0).
pub fn orthogonal_unit(v: &Vec3) -> Vec3 {
    let candidate = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let w = v.cross(&candidate);
    w / w.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn q_roundtrip() {
        let a = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        let t = Vec3::new(-1.0, 0.5, 2.0);
        let q = q_from_parts(&a, &t);
        // column-major stacking: q[0..3] is the first column of A
        assert_eq!(q[0], 1.0);
        assert_eq!(q[1], 4.0);
        assert_eq!(q[2], 7.0);
        assert_eq!(a_from_q(&q), a);
        assert_eq!(t_from_q(&q), t);
    }

    #[test]
    fn skew_is_cross() {
        let v = Vec3::new(0.3, -1.2, 2.0);
        let u = Vec3::new(1.0, 0.7, -0.4);
        assert_relative_eq!(skew(&v) * u, v.cross(&u), epsilon = 1e-15);
    }

    #[test]
    fn conjugation_matches_dense() {
        let r = rotation_from_quat(0.9, 0.1, -0.3, 0.2);
        let mut m = Mat12::zeros();
        for i in 0..12 {
            for j in 0..12 {
                m[(i, j)] = ((i * 13 + j * 7) % 11) as f64 - 5.0;
            }
        }
        let dense = diag4(&r) * m * diag4(&r).transpose();
        assert_relative_eq!(conjugate_blocks(&r, &m), dense, epsilon = 1e-12);
    }

    #[test]
    fn axis_rotation_rotates() {
        let axis = Vec3::new(0.0, 0.0, 1.0);
        let r = rotation_about_axis(&axis, std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(r * Vec3::x(), Vec3::y(), epsilon = 1e-14);
    }
}
