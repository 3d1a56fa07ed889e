//! Rest geometry: tetrahedral meshes, primitive solids, and their volume moments.
//!
//! The generalized mass matrix of an affine body only needs the zeroth, first,
//! and second volume moments of the rest shape,
//! `V = ∫ dΩ`, `∫ x̄ dΩ`, `∫ x̄ x̄ᵀ dΩ`.
//! Meshes integrate these exactly per linear tetrahedron; box, cylinder, and
//! capsule primitives use closed-form moments.

use crate::math::{Mat3, Vec3};

/// Volume moments of a rest shape (density not applied).
#[derive(Debug, Clone, Copy)]
pub struct MassMoments {
    /// `∫ dΩ`, m³.
    pub volume: f64,
    /// `∫ x̄ dΩ`, m⁴.
    pub first: Vec3,
    /// `∫ x̄ x̄ᵀ dΩ`, m⁵.
    pub second: Mat3,
}

impl MassMoments {
    /// Centroid of the shape.
    pub fn centroid(&self) -> Vec3 {
        self.first / self.volume
    }

    /// Translate the shape by `d`: moments of `{x̄ + d}`.
    pub fn translated(&self, d: &Vec3) -> MassMoments {
        let second = self.second
            + self.first * d.transpose()
            + d * self.first.transpose()
            + d * d.transpose() * self.volume;
        MassMoments {
            volume: self.volume,
            first: self.first + d * self.volume,
            second,
        }
    }

    /// Merge two disjoint shapes.
    pub fn merged(&self, other: &MassMoments) -> MassMoments {
        MassMoments {
            volume: self.volume + other.volume,
            first: self.first + other.first,
            second: self.second + other.second,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    /// A tetrahedron has non-positive signed volume.
    DegenerateTet { index: usize, volume: f64 },
    Empty,
}

impl std::fmt::Display for MeshError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeshError::DegenerateTet { index, volume } => {
                write!(f, "tet {index} has non-positive volume {volume:.3e}")
            }
            MeshError::Empty => write!(f, "mesh has no tetrahedra"),
        }
    }
}

impl std::error::Error for MeshError {}

/// A linear tetrahedral mesh in rest coordinates.
#[derive(Debug, Clone)]
pub struct TetMesh {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
}

impl TetMesh {
    /// Exact volume moments, summed per tetrahedron.
    ///
    /// Per-tet second moments use the closed form
    /// `∫_T x xᵀ = V/20 (Σₐ vₐvₐᵀ + s sᵀ)` with `s = Σₐ vₐ`.
    pub fn moments(&self) -> Result<MassMoments, MeshError> {
        if self.tets.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut volume = 0.0;
        let mut first = Vec3::zeros();
        let mut second = Mat3::zeros();
        for (index, tet) in self.tets.iter().enumerate() {
            let v = [
                self.vertices[tet[0]],
                self.vertices[tet[1]],
                self.vertices[tet[2]],
                self.vertices[tet[3]],
            ];
            let vol = (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0])) / 6.0;
            if vol <= 0.0 {
                return Err(MeshError::DegenerateTet { index, volume: vol });
            }
            let s: Vec3 = v[0] + v[1] + v[2] + v[3];
            let mut sum_outer = Mat3::zeros();
            for a in &v {
                sum_outer += a * a.transpose();
            }
            volume += vol;
            first += s * (vol / 4.0);
            second += (sum_outer + s * s.transpose()) * (vol / 20.0);
        }
        Ok(MassMoments {
            volume,
            first,
            second,
        })
    }
}

/// Axis-aligned box of full side lengths `size`, centered at the origin,
/// split into six tetrahedra.
pub fn box_mesh(size: &Vec3) -> TetMesh {
    let h = size / 2.0;
    let corner = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { -h.x } else { h.x },
            if i & 2 == 0 { -h.y } else { h.y },
            if i & 4 == 0 { -h.z } else { h.z },
        )
    };
    let vertices: Vec<Vec3> = (0..8).map(corner).collect();
    // standard 6-tet split of a hexahedron along the 0-7 diagonal
    let tets = vec![
        [0, 1, 3, 7],
        [0, 3, 2, 7],
        [0, 2, 6, 7],
        [0, 6, 4, 7],
        [0, 4, 5, 7],
        [0, 5, 1, 7],
    ];
    let mut mesh = TetMesh { vertices, tets };
    // fix orientation: flip any negatively oriented tet
    for tet in &mut mesh.tets {
        let v = [
            mesh.vertices[tet[0]],
            mesh.vertices[tet[1]],
            mesh.vertices[tet[2]],
            mesh.vertices[tet[3]],
        ];
        let vol = (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0]));
        if vol < 0.0 {
            tet.swap(2, 3);
        }
    }
    mesh
}

/// Closed-form moments of a centered box with full side lengths `size`.
pub fn box_moments(size: &Vec3) -> MassMoments {
    let volume = size.x * size.y * size.z;
    let second = Mat3::from_diagonal(&Vec3::new(
        volume * size.x * size.x / 12.0,
        volume * size.y * size.y / 12.0,
        volume * size.z * size.z / 12.0,
    ));
    MassMoments {
        volume,
        first: Vec3::zeros(),
        second,
    }
}

/// Closed-form moments of a solid cylinder along the y axis (centered).
pub fn cylinder_moments(radius: f64, height: f64) -> MassMoments {
    let volume = std::f64::consts::PI * radius * radius * height;
    let xr = volume * radius * radius / 4.0;
    let second = Mat3::from_diagonal(&Vec3::new(xr, volume * height * height / 12.0, xr));
    MassMoments {
        volume,
        first: Vec3::zeros(),
        second,
    }
}

/// Closed-form moments of a capsule along the y axis (cylinder of the given
/// `height` plus two hemispherical caps of `radius`, centered).
pub fn capsule_moments(radius: f64, height: f64) -> MassMoments {
    let cyl = cylinder_moments(radius, height);
    // solid hemisphere, flat face at y=0, dome toward +y:
    // V = 2πr³/3, ∫y = πr⁴/4, ∫y² = 2πr⁵/15, ∫x² = ∫z² = 2πr⁵/15
    let r = radius;
    let vol = 2.0 * std::f64::consts::PI * r.powi(3) / 3.0;
    let first_y = std::f64::consts::PI * r.powi(4) / 4.0;
    let diag = 2.0 * std::f64::consts::PI * r.powi(5) / 15.0;
    let hemi = MassMoments {
        volume: vol,
        first: Vec3::new(0.0, first_y, 0.0),
        second: Mat3::from_diagonal(&Vec3::new(diag, diag, diag)),
    };
    let top = hemi.translated(&Vec3::new(0.0, height / 2.0, 0.0));
    // mirrored cap: flip y of the hemisphere then shift down
    let mut bottom = hemi;
    bottom.first.y = -bottom.first.y;
    let bottom = bottom.translated(&Vec3::new(0.0, -height / 2.0, 0.0));
    cyl.merged(&top).merged(&bottom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_mesh_matches_closed_form() {
        let size = Vec3::new(0.1, 0.25, 0.4);
        let m = box_mesh(&size).moments().unwrap();
        let c = box_moments(&size);
        assert_relative_eq!(m.volume, c.volume, max_relative = 1e-13);
        assert_relative_eq!(m.first, c.first, epsilon = 1e-15);
        assert_relative_eq!(m.second, c.second, max_relative = 1e-12);
    }

    #[test]
    fn translated_moments_match_shifted_mesh() {
        let size = Vec3::new(0.2, 0.1, 0.3);
        let d = Vec3::new(0.5, -0.4, 0.2);
        let mut mesh = box_mesh(&size);
        for v in &mut mesh.vertices {
            *v += d;
        }
        let shifted = mesh.moments().unwrap();
        let expect = box_moments(&size).translated(&d);
        assert_relative_eq!(shifted.first, expect.first, epsilon = 1e-12);
        assert_relative_eq!(shifted.second, expect.second, max_relative = 1e-11);
    }

    #[test]
    fn capsule_reduces_to_sphere_plus_cylinder_volume() {
        let m = capsule_moments(0.1, 0.4);
        let expect = std::f64::consts::PI * 0.01 * 0.4 + 4.0 / 3.0 * std::f64::consts::PI * 1e-3;
        assert_relative_eq!(m.volume, expect, max_relative = 1e-13);
        // symmetric: centroid at origin
        assert_relative_eq!(m.first, Vec3::zeros(), epsilon = 1e-16);
    }

    #[test]
    fn degenerate_tet_rejected() {
        let mesh = TetMesh {
            vertices: vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::x() + Vec3::y()],
            tets: vec![[0, 1, 2, 3]],
        };
        assert!(matches!(
            mesh.moments(),
            Err(MeshError::DegenerateTet { .. })
        ));
    }
}
