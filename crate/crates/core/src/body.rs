//! Single-body dynamics on affine coordinates.
//!
//! A body carries 12 generalized DOFs `q = [vec(A); t]` (column-major `A` plus
//! translation). Rigidity is enforced by a stiff linear-elastic energy
//! evaluated in the co-rotated frame `Ā = Rᵀ A`, where `R` is the polar
//! rotation of `A`. Factoring the rotation out of the stiffness leaves the
//! constant system matrix
//!
//! ```text
//! H̄_A = M_A / h² + K̄_A
//! ```
//!
//! which is Cholesky-factorized once per (body, h) pair. One Newton step then
//! reduces to rotating the right-hand side into the body frame, two triangular
//! solves, and rotating back ([`newton_step_single`]). When `use_polar` is
//! off, the per-block rotation by `Aᵀ`/`A` is combined with a length-preserving
//! renormalization instead of an exact polar rotation.

use crate::math::{
    a_from_q, conjugate_blocks, q_from_parts, rotate_blocks, skew, t_from_q, Mat12, Mat3, Mat3x4,
    Mat6, Vec12, Vec3, Vec6,
};
use crate::mesh::{MassMoments, MeshError, TetMesh};
use nalgebra::{Cholesky, Const, SMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum BodyError {
    /// Mesh contains an inverted or flat tetrahedron.
    DegenerateMesh(String),
    /// The assembled `H̄_A` failed to factorize; signals bad inputs.
    NonSpd,
    /// `det(A)` at or below the polar-decomposition threshold.
    NearSingular { det: f64 },
    /// Control tetrahedron too flat to invert.
    DegenerateControlTet { det: f64 },
}

impl std::fmt::Display for BodyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BodyError::DegenerateMesh(msg) => write!(f, "degenerate mesh: {msg}"),
            BodyError::NonSpd => write!(f, "system matrix is not positive definite"),
            BodyError::NearSingular { det } => {
                write!(f, "affine map nearly singular (det = {det:.3e})")
            }
            BodyError::DegenerateControlTet { det } => {
                write!(f, "control tetrahedron degenerate (det = {det:.3e})")
            }
        }
    }
}

impl std::error::Error for BodyError {}

impl From<MeshError> for BodyError {
    fn from(e: MeshError) -> Self {
        BodyError::DegenerateMesh(e.to_string())
    }
}

/// Generalized state of one affine body.
#[derive(Debug, Clone, Copy)]
pub struct AffineState {
    /// `[vec(A); t]`, column-major `A`.
    pub q: Vec12,
    /// Generalized velocity.
    pub qdot: Vec12,
}

impl AffineState {
    pub fn rest() -> AffineState {
        AffineState {
            q: q_from_parts(&Mat3::identity(), &Vec3::zeros()),
            qdot: Vec12::zeros(),
        }
    }

    pub fn from_pose(a: &Mat3, t: &Vec3) -> AffineState {
        AffineState {
            q: q_from_parts(a, t),
            qdot: Vec12::zeros(),
        }
    }

    pub fn a(&self) -> Mat3 {
        a_from_q(&self.q)
    }

    pub fn t(&self) -> Vec3 {
        t_from_q(&self.q)
    }
}

/// Rigid velocity `[ω; v]`; `v` is the velocity of the body-origin material
/// point, world axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialTwist {
    pub omega: Vec3,
    pub v: Vec3,
}

/// Rigid load `[τ; f]`; torque about the current body-origin point, world axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialWrench {
    pub tau: Vec3,
    pub f: Vec3,
}

impl SpatialWrench {
    pub fn zero() -> SpatialWrench {
        SpatialWrench {
            tau: Vec3::zeros(),
            f: Vec3::zeros(),
        }
    }

    /// Wrench from a force `f` applied at world point `p`, referenced to the
    /// body-origin point `t`.
    pub fn force_at_point(f: &Vec3, p: &Vec3, t: &Vec3) -> SpatialWrench {
        SpatialWrench {
            tau: (p - t).cross(f),
            f: *f,
        }
    }
}

/// Material parameters of a near-rigid body.
#[derive(Debug, Clone, Copy)]
pub struct Material {
    pub density: f64,
    pub youngs: f64,
    pub poisson: f64,
}

impl Material {
    pub fn lame(&self) -> (f64, f64) {
        let e = self.youngs;
        let nu = self.poisson;
        let mu = e / (2.0 * (1.0 + nu));
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        (mu, lambda)
    }
}

/// Cholesky factor of `H̄_A` tagged with the step size it was built for.
#[derive(Debug, Clone)]
pub struct Prefactored {
    pub h: f64,
    chol: Cholesky<f64, Const<12>>,
}

/// Precomputed per-body constants. Immutable after construction.
#[derive(Debug, Clone)]
pub struct BodyModel {
    /// Generalized mass `M_A` (SPD).
    pub mass: Mat12,
    mass_chol: Cholesky<f64, Const<12>>,
    /// Rest-shape generalized stiffness `K̄_A` (PSD).
    pub stiffness: Mat12,
    /// Factor of `M_A/h² + K̄_A` for a fixed `h`.
    pub factor: Prefactored,
    /// Volume-weighted Jacobian `J̄ = Σ_e V_e J_e`; maps the aggregated
    /// gradient density to the affine coordinate. Equal to `V·I₁₂` for a
    /// purely affine mesh.
    pub jbar: Mat12,
    pub volume: f64,
    pub material: Material,
    pub mu: f64,
    pub lambda: f64,
    /// Rest control-point positions `Y` (columns).
    pub rest_ct: Mat3x4,
    /// Geometric volume moments of the rest shape.
    pub moments: MassMoments,
}

const POLAR_DET_THRESHOLD: f64 = 1e-9;

/// Rotation factor of the polar decomposition, `R = A (AᵀA)^(-1/2)`, via a
/// symmetric eigendecomposition of `AᵀA`.
pub fn polar_rotation(a: &Mat3) -> Result<Mat3, BodyError> {
    let det = a.determinant();
    if det <= POLAR_DET_THRESHOLD {
        return Err(BodyError::NearSingular { det });
    }
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigen();
    let mut inv_sqrt = Mat3::zeros();
    for i in 0..3 {
        // eigenvalues of AᵀA are nonnegative up to roundoff; clamp the
        // inverse square root when one collapses below threshold
        let ev = eig.eigenvalues[i].max(1e-12);
        inv_sqrt += eig.eigenvectors.column(i) * eig.eigenvectors.column(i).transpose()
            / ev.sqrt();
    }
    let r = a * inv_sqrt;
    // one Newton sweep toward the orthogonal manifold: the eigen route
    // leaves ~1e-12 of orthonormality error, which long momentum runs see
    match r.try_inverse() {
        Some(r_inv) => Ok((r + r_inv.transpose()) * 0.5),
        None => Ok(r),
    }
}

/// `R a ≈ (‖a‖/‖A a‖) A a`: rotate by `A` while preserving the length of `a`.
pub fn length_preserving_rotate(a_mat: &Mat3, a: &Vec3) -> Vec3 {
    let n = a.norm();
    if n == 0.0 {
        return Vec3::zeros();
    }
    let mapped = a_mat * a;
    let mn = mapped.norm();
    if mn <= 1e-12 {
        return Vec3::zeros();
    }
    mapped * (n / mn)
}

fn mass_from_moments(moments: &MassMoments, density: f64) -> Mat12 {
    let mut m = Mat12::zeros();
    let second = moments.second * density;
    let first = moments.first * density;
    let total = moments.volume * density;
    for i in 0..3 {
        for j in 0..3 {
            m.fixed_view_mut::<3, 3>(3 * i, 3 * j)
                .copy_from(&(Mat3::identity() * second[(i, j)]));
        }
        m.fixed_view_mut::<3, 3>(3 * i, 9)
            .copy_from(&(Mat3::identity() * first[i]));
        m.fixed_view_mut::<3, 3>(9, 3 * i)
            .copy_from(&(Mat3::identity() * first[i]));
    }
    m.fixed_view_mut::<3, 3>(9, 9)
        .copy_from(&(Mat3::identity() * total));
    m
}

fn stiffness_rest(volume: f64, mu: f64, lambda: f64) -> Mat12 {
    // H_lin = μ (I₉ + T₉) + λ vec(I₃) vec(I₃)ᵀ on the A block, zero elsewhere
    let mut k = Mat12::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let row = 3 * j + i; // vec(A) position of A_ij
            let col_t = 3 * i + j; // vec(A) position of A_ji
            k[(row, row)] += mu;
            k[(row, col_t)] += mu;
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            k[(4 * i, 4 * j)] += lambda; // vec(I₃) has ones at 0, 4, 8
        }
    }
    k * volume
}

/// Default control tetrahedron: rest centroid plus unit offsets along the
/// three principal axes of the mass distribution.
fn default_control_tet(moments: &MassMoments) -> Mat3x4 {
    let c = moments.centroid();
    let central = moments.second / moments.volume - c * c.transpose();
    let eig = central.symmetric_eigen();
    let mut u = eig.eigenvectors;
    if u.determinant() < 0.0 {
        let col = -u.column(2).into_owned();
        u.set_column(2, &col);
    }
    Mat3x4::from_columns(&[
        c,
        c + u.column(0),
        c + u.column(1),
        c + u.column(2),
    ])
}

fn check_control_tet(ct: &Mat3x4) -> Result<(), BodyError> {
    let e1 = ct.column(1) - ct.column(0);
    let e2 = ct.column(2) - ct.column(0);
    let e3 = ct.column(3) - ct.column(0);
    let det = e1.cross(&e2).dot(&e3);
    if det.abs() <= 1e-12 {
        return Err(BodyError::DegenerateControlTet { det });
    }
    Ok(())
}

impl BodyModel {
    /// Build per-body constants from a tetrahedral rest mesh.
    pub fn precompute(
        mesh: &TetMesh,
        material: Material,
        h: f64,
        control_tet: Option<Mat3x4>,
    ) -> Result<BodyModel, BodyError> {
        let moments = mesh.moments()?;
        BodyModel::from_moments(moments, material, h, control_tet)
    }

    /// Build per-body constants from closed-form volume moments (primitives).
    pub fn from_moments(
        moments: MassMoments,
        material: Material,
        h: f64,
        control_tet: Option<Mat3x4>,
    ) -> Result<BodyModel, BodyError> {
        assert!(h > 0.0 && material.density > 0.0 && material.youngs > 0.0);
        assert!(material.poisson > -1.0 && material.poisson < 0.5);
        let (mu, lambda) = material.lame();
        let mass = mass_from_moments(&moments, material.density);
        let mass_chol = Cholesky::new(mass).ok_or(BodyError::NonSpd)?;
        let stiffness = stiffness_rest(moments.volume, mu, lambda);
        let hbar = mass / (h * h) + stiffness;
        let chol = Cholesky::new(hbar).ok_or(BodyError::NonSpd)?;
        let rest_ct = match control_tet {
            Some(ct) => ct,
            None => default_control_tet(&moments),
        };
        check_control_tet(&rest_ct)?;
        Ok(BodyModel {
            mass,
            mass_chol,
            stiffness,
            factor: Prefactored { h, chol },
            jbar: Mat12::identity() * moments.volume,
            volume: moments.volume,
            material,
            mu,
            lambda,
            rest_ct,
            moments,
        })
    }

    /// Re-factorize `H̄_A` for a new step size.
    pub fn refactor(&mut self, h: f64) -> Result<(), BodyError> {
        let hbar = self.mass / (h * h) + self.stiffness;
        let chol = Cholesky::new(hbar).ok_or(BodyError::NonSpd)?;
        self.factor = Prefactored { h, chol };
        Ok(())
    }

    /// Total mass, kg.
    pub fn total_mass(&self) -> f64 {
        self.moments.volume * self.material.density
    }

    /// `ρ ∫ x̄`, the density-weighted first moment.
    pub fn first_moment(&self) -> Vec3 {
        self.moments.first * self.material.density
    }

    /// `ρ ∫ x̄ x̄ᵀ`, the density-weighted second moment.
    pub fn second_moment(&self) -> Mat3 {
        self.moments.second * self.material.density
    }

    /// Back-substitute through the prefactored `H̄_A`.
    pub fn solve_hbar(&self, rhs: &Vec12) -> Vec12 {
        self.factor.chol.solve(rhs)
    }

    /// `M_A⁻¹ rhs` through the cached mass factorization.
    pub fn solve_mass(&self, rhs: &Vec12) -> Vec12 {
        self.mass_chol.solve(rhs)
    }

    /// Dense `H_A = diag₄(R) H̄_A diag₄(Rᵀ)` at the given rotation.
    pub fn dense_hessian(&self, rot: &Mat3) -> Mat12 {
        let hbar = self.mass / (self.factor.h * self.factor.h) + self.stiffness;
        conjugate_blocks(rot, &hbar)
    }

    /// `H_A⁻¹ rhs` via the prefactored solve conjugated by `diag₄(R)`.
    pub fn solve_rotated(&self, rot: &Mat3, rhs: &Vec12) -> Vec12 {
        let local = rotate_blocks(&rot.transpose(), rhs);
        let sol = self.solve_hbar(&local);
        rotate_blocks(rot, &sol)
    }

    /// Rigid spatial inertia (6×6) about the body-origin point in world axes,
    /// assembled from the rest moments at orientation `A`.
    pub fn spatial_inertia(&self, a: &Mat3) -> Mat6 {
        let rho = self.material.density;
        let sw = a * (self.moments.second * rho) * a.transpose();
        let cw = a * (self.moments.first * rho);
        let mut i6 = Mat6::zeros();
        i6.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&(Mat3::identity() * sw.trace() - sw));
        i6.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew(&cw));
        i6.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&skew(&cw).transpose());
        i6.fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(Mat3::identity() * self.total_mass()));
        i6
    }
}

/// One Newton step of the pre-factorized single-body system: rotate the four
/// 3-blocks of `f_A` into the body frame, back-substitute, and rotate back.
///
/// With `use_polar` the step exactly solves
/// `diag₄(R) H̄_A diag₄(Rᵀ) δq = f_A`; without it, the per-block rotation uses
/// `Aᵀ`/`A` with length-preserving renormalization.
pub fn newton_step_single(
    model: &BodyModel,
    state: &AffineState,
    f_a: &Vec12,
    h: f64,
    use_polar: bool,
) -> Result<Vec12, BodyError> {
    assert_eq!(
        model.factor.h, h,
        "prefactored Hessian was built for h = {}, step uses h = {}",
        model.factor.h, h
    );
    let a = state.a();
    if use_polar {
        let r = polar_rotation(&a)?;
        Ok(model.solve_rotated(&r, f_a))
    } else {
        let at = a.transpose();
        let mut local = Vec12::zeros();
        for k in 0..4 {
            let blk = f_a.fixed_rows::<3>(3 * k).into_owned();
            local
                .fixed_rows_mut::<3>(3 * k)
                .copy_from(&length_preserving_rotate(&at, &blk));
        }
        let sol = model.solve_hbar(&local);
        let mut out = Vec12::zeros();
        for k in 0..4 {
            let blk = sol.fixed_rows::<3>(3 * k).into_owned();
            out.fixed_rows_mut::<3>(3 * k)
                .copy_from(&length_preserving_rotate(&a, &blk));
        }
        Ok(out)
    }
}

/// First Piola stress of co-rotated linear elasticity at the local frame
/// `Ā = Rᵀ A`: `μ(Ā + Āᵀ − 2I) + λ tr(Ā − I) I`.
fn local_stress(mu: f64, lambda: f64, a_bar: &Mat3) -> Mat3 {
    a_bar * mu + a_bar.transpose() * mu - Mat3::identity() * (2.0 * mu)
        + Mat3::identity() * (lambda * (a_bar.trace() - 3.0))
}

/// Gradient of the co-rotated elastic energy w.r.t. `q` (translation block is
/// zero; the stress is rotated back to world on the A blocks).
pub fn elastic_gradient(model: &BodyModel, state: &AffineState) -> Result<Vec12, BodyError> {
    let a = state.a();
    let r = polar_rotation(&a)?;
    let a_bar = r.transpose() * a;
    let world_stress = r * local_stress(model.mu, model.lambda, &a_bar);
    let mut density = Vec12::zeros();
    for j in 0..3 {
        density
            .fixed_rows_mut::<3>(3 * j)
            .copy_from(&world_stress.column(j));
    }
    Ok(model.jbar.transpose() * density)
}

/// Co-rotated elastic energy `V · Ψ(Ā)`, J.
pub fn elastic_energy(model: &BodyModel, state: &AffineState) -> Result<f64, BodyError> {
    let a = state.a();
    let r = polar_rotation(&a)?;
    let a_bar = r.transpose() * a;
    let strain = (a_bar + a_bar.transpose()) / 2.0 - Mat3::identity();
    let psi = model.mu * strain.norm_squared()
        + 0.5 * model.lambda * strain.trace() * strain.trace();
    Ok(model.volume * psi)
}

/// `G(A)`: maps `q̇` to the spatial twist `[ω; v]`.
///
/// `ω = ½ Σᵢ qᵢ × q̇ᵢ`, `v = ṫ`.
pub fn twist_matrix(state: &AffineState) -> SMatrix<f64, 6, 12> {
    let mut g = SMatrix::<f64, 6, 12>::zeros();
    for i in 0..3 {
        let qi = state.q.fixed_rows::<3>(3 * i).into_owned();
        g.fixed_view_mut::<3, 3>(0, 3 * i)
            .copy_from(&(skew(&qi) * 0.5));
    }
    g.fixed_view_mut::<3, 3>(3, 9).copy_from(&Mat3::identity());
    g
}

/// `E(A)`: rigid-motion embedding, `q̇ = E(A) V`.
pub fn embedding_matrix(state: &AffineState) -> SMatrix<f64, 12, 6> {
    let mut e = SMatrix::<f64, 12, 6>::zeros();
    for i in 0..3 {
        let qi = state.q.fixed_rows::<3>(3 * i).into_owned();
        e.fixed_view_mut::<3, 3>(3 * i, 0).copy_from(&(-skew(&qi)));
    }
    e.fixed_view_mut::<3, 3>(9, 3).copy_from(&Mat3::identity());
    e
}

/// Twist of the current generalized velocity.
pub fn twist_map(state: &AffineState) -> SpatialTwist {
    let mut omega = Vec3::zeros();
    for i in 0..3 {
        let qi = state.q.fixed_rows::<3>(3 * i);
        let qdi = state.qdot.fixed_rows::<3>(3 * i);
        omega += qi.cross(&qdi) * 0.5;
    }
    SpatialTwist {
        omega,
        v: t_from_q(&state.qdot),
    }
}

/// Affine force equivalent to a spatial wrench: `f_A = G(A)ᵀ W`.
pub fn wrench_to_affine(state: &AffineState, w: &SpatialWrench) -> Vec12 {
    let mut f = Vec12::zeros();
    for i in 0..3 {
        let qi = state.q.fixed_rows::<3>(3 * i).into_owned();
        // (½[qᵢ]×)ᵀ τ = −½ qᵢ × τ
        f.fixed_rows_mut::<3>(3 * i)
            .copy_from(&(qi.cross(&w.tau) * -0.5));
    }
    f.fixed_rows_mut::<3>(9).copy_from(&w.f);
    f
}

/// Rigid-motion embedding of a twist: `q̇ = E(A) V`.
pub fn embedding_map(state: &AffineState, v: &SpatialTwist) -> Vec12 {
    let mut qd = Vec12::zeros();
    for i in 0..3 {
        let qi = state.q.fixed_rows::<3>(3 * i).into_owned();
        qd.fixed_rows_mut::<3>(3 * i)
            .copy_from(&v.omega.cross(&qi));
    }
    qd.fixed_rows_mut::<3>(9).copy_from(&v.v);
    qd
}

/// Companion diagnostic for [`embedding_map`]: the 6×6 product `G(A) E(A)`,
/// equal to `I₆` whenever `A` is a rotation.
pub fn ge_product(state: &AffineState) -> Mat6 {
    twist_matrix(state) * embedding_matrix(state)
}

/// Spatial force cross product `V ×* F` for `V = [ω; v]`, `F = [n; f]`.
fn cross_star(v: &Vec6, f: &Vec6) -> Vec6 {
    let (omega, vel) = (v.fixed_rows::<3>(0), v.fixed_rows::<3>(3));
    let (n, fl) = (f.fixed_rows::<3>(0), f.fixed_rows::<3>(3));
    let mut out = Vec6::zeros();
    out.fixed_rows_mut::<3>(0)
        .copy_from(&(omega.cross(&n) + vel.cross(&fl)));
    out.fixed_rows_mut::<3>(3).copy_from(&omega.cross(&fl));
    out
}

/// Fixed-origin rigid embedding: `q̇ = E₀(q) V₀` with the twist referenced at
/// the world origin (`v₀` = velocity of the body point at the origin).
fn embedding_matrix_origin(q: &Vec12) -> SMatrix<f64, 12, 6> {
    let mut e = embedding_matrix_origin_rate(q);
    e.fixed_view_mut::<3, 3>(9, 3).copy_from(&Mat3::identity());
    e
}

/// Trajectory derivative `Ė₀` evaluated at a rate vector (the constant
/// identity block of `E₀` drops out).
fn embedding_matrix_origin_rate(qdot: &Vec12) -> SMatrix<f64, 12, 6> {
    let mut e = SMatrix::<f64, 12, 6>::zeros();
    for i in 0..4 {
        let qi = qdot.fixed_rows::<3>(3 * i).into_owned();
        e.fixed_view_mut::<3, 3>(3 * i, 0).copy_from(&(-skew(&qi)));
    }
    e
}

fn twist_matrix_origin(q: &Vec12) -> SMatrix<f64, 6, 12> {
    let t = t_from_q(q);
    let mut g = SMatrix::<f64, 6, 12>::zeros();
    for i in 0..3 {
        let qi = q.fixed_rows::<3>(3 * i).into_owned();
        let half = skew(&qi) * 0.5;
        g.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(&half);
        g.fixed_view_mut::<3, 3>(3, 3 * i)
            .copy_from(&(skew(&t) * half));
    }
    g.fixed_view_mut::<3, 3>(3, 9).copy_from(&Mat3::identity());
    g
}

/// Gyroscopic cancellation residual.
///
/// The spatial bias wrench must cancel the inertia-map rate when pulled back
/// to affine coordinates: with the origin-referenced rigid embedding `E₀` and
/// the pullback inertia `I₀(q) = E₀ᵀ M_A E₀`, rigid states satisfy
/// `İ₀ V₀ = V₀ ×* (I₀ V₀)` exactly, so no explicit gyroscopic force is needed
/// in the equations of motion. Returns `G₀ᵀ (İ₀ V₀ − V₀ ×* (I₀ V₀))`, which is
/// at roundoff level for rigid states (`A` orthogonal, `q̇` a rigid rate) and
/// generally nonzero for deforming states with nonzero twist.
pub fn gyroscopic_residual(model: &BodyModel, state: &AffineState) -> Vec12 {
    let e0 = embedding_matrix_origin(&state.q);
    let e0_dot = embedding_matrix_origin_rate(&state.qdot);
    let g0 = twist_matrix_origin(&state.q);
    let v0 = g0 * state.qdot;
    let i0 = e0.transpose() * model.mass * e0;
    let i0_dot =
        e0_dot.transpose() * model.mass * e0 + e0.transpose() * model.mass * e0_dot;
    let bias = i0_dot * v0 - cross_star(&v0, &(i0 * v0));
    g0.transpose() * bias
}

/// Angular momentum about the world origin, exact for the affine kinematics:
/// `L = Σⱼₖ Σ̄ⱼₖ (aⱼ × ȧₖ) + (A p̄) × ṫ + t × (Ȧ p̄) + m t × ṫ`
/// with `Σ̄ = ρ∫x̄x̄ᵀ` and `p̄ = ρ∫x̄`.
pub fn angular_momentum(model: &BodyModel, state: &AffineState) -> Vec3 {
    let second = model.second_moment();
    let first = model.first_moment();
    let m = model.total_mass();
    let a = state.a();
    let adot = a_from_q(&state.qdot);
    let t = state.t();
    let tdot = t_from_q(&state.qdot);
    let mut l = Vec3::zeros();
    for j in 0..3 {
        for k in 0..3 {
            l += a.column(j).cross(&adot.column(k)) * second[(j, k)];
        }
    }
    l += (a * first).cross(&tdot);
    l += t.cross(&(adot * first));
    l += t.cross(&tdot) * m;
    l
}

/// Linear momentum `p = ρ∫ẋ = Ȧ p̄ + m ṫ`.
pub fn linear_momentum(model: &BodyModel, state: &AffineState) -> Vec3 {
    let adot = a_from_q(&state.qdot);
    adot * model.first_moment() + t_from_q(&state.qdot) * model.total_mass()
}

/// Kinetic energy `½ q̇ᵀ M_A q̇`.
pub fn kinetic_energy(model: &BodyModel, state: &AffineState) -> f64 {
    0.5 * (state.qdot.transpose() * model.mass * state.qdot)[(0, 0)]
}

/// Velocity initialization from a target twist: `q̇ = E(A) V`.
pub fn set_twist(state: &mut AffineState, twist: &SpatialTwist) {
    state.qdot = embedding_map(state, twist);
}

/// Velocity initialization from momenta: `v_com = p/m`, `ω = I_c⁻¹ L_com`,
/// using the rigid inertia about the center of mass at the current pose.
pub fn set_momentum(state: &mut AffineState, model: &BodyModel, p: &Vec3, l_com: &Vec3) {
    let m = model.total_mass();
    let a = state.a();
    let c_bar = model.moments.centroid();
    let central =
        model.second_moment() - model.first_moment() * model.first_moment().transpose() / m;
    let sw = a * central * a.transpose();
    let i_com = Mat3::identity() * sw.trace() - sw;
    let omega = i_com
        .try_inverse()
        .expect("central inertia is invertible for solid bodies")
        * l_com;
    let v_com = p / m;
    let v_origin = v_com - omega.cross(&(a * c_bar));
    set_twist(
        state,
        &SpatialTwist {
            omega,
            v: v_origin,
        },
    );
}
