//! Joint constraints on control-point coordinates.
//!
//! Every joint owns a virtual control tetrahedron (CT) per incident body,
//! placed at scene build so that the designated control points realize the
//! joint geometry (ball: shared CP; hinge/prismatic: a CT edge along the
//! axis; universal: two orthogonal CT edges along the two axes). The CP
//! coordinate `y = T q` is linear in the body's affine coordinate, so a ball
//! joint is a linear constraint, while the compact hinge / universal /
//! prismatic forms apply a joint rotation `R_J` that re-aligns the axis with
//! the local frame and therefore varies with the carrier body's rotation:
//!
//! ```text
//! C = S_a diag₄(R_J) T_a q_a − S_b diag₄(R_J) T_b q_b − c₀,   R_J = ΔR Rᵀ
//! ```
//!
//! Gradients use the constant-`R_J` explicit part plus a rotation part whose
//! per-DOF 3×3 slices are skew-symmetrized in the joint-local frame; only the
//! three independent entries of each slice are kept.

use crate::body::{polar_rotation, AffineState, BodyError};
use crate::math::{skew, Mat12, Mat3, Mat3x4, Vec3};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub enum JointError {
    /// Control tetrahedron too flat to invert.
    DegenerateCt { det: f64 },
    /// Axis anti-parallel to the alignment target; caller must pre-rotate.
    AntiParallelAxis,
    /// Evaluation called with a body-count mismatch.
    WrongBodies,
    /// Limit query on a joint without limits.
    NoLimitDefined,
    NonUnitAxis { norm: f64 },
    NonOrthogonalAxes { dot: f64 },
    Body(BodyError),
}

impl std::fmt::Display for JointError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            JointError::DegenerateCt { det } => {
                write!(f, "degenerate control tetrahedron (det = {det:.3e})")
            }
            JointError::AntiParallelAxis => write!(f, "axis anti-parallel to alignment target"),
            JointError::WrongBodies => write!(f, "joint evaluated with wrong body count"),
            JointError::NoLimitDefined => write!(f, "joint has no limits"),
            JointError::NonUnitAxis { norm } => write!(f, "axis is not unit length (‖a‖ = {norm})"),
            JointError::NonOrthogonalAxes { dot } => {
                write!(f, "universal axes not orthogonal (a₁·a₂ = {dot:.3e})")
            }
            JointError::Body(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for JointError {}

impl From<BodyError> for JointError {
    fn from(e: BodyError) -> Self {
        JointError::Body(e)
    }
}

/// Bijective map between the affine coordinate and the CP coordinate of one
/// control tetrahedron: `y = T q`, `q = T⁻¹ y`.
#[derive(Debug, Clone)]
pub struct ControlMap {
    pub rest_ct: Mat3x4,
    pub t_mat: Mat12,
    pub t_inv: Mat12,
}

/// `T = [Yᵀ ⊗ I₃, 1₄ₓ₁ ⊗ I₃]` for rest CPs `Y` (columns).
pub fn build_control_map(rest_ct: &Mat3x4) -> Result<ControlMap, JointError> {
    let e1 = rest_ct.column(1) - rest_ct.column(0);
    let e2 = rest_ct.column(2) - rest_ct.column(0);
    let e3 = rest_ct.column(3) - rest_ct.column(0);
    let det = e1.cross(&e2).dot(&e3);
    if det.abs() <= 1e-12 {
        return Err(JointError::DegenerateCt { det });
    }
    let mut t = Mat12::zeros();
    for cp in 0..4 {
        for j in 0..3 {
            let block = Mat3::identity() * rest_ct[(j, cp)];
            t.fixed_view_mut::<3, 3>(3 * cp, 3 * j).copy_from(&block);
        }
        t.fixed_view_mut::<3, 3>(3 * cp, 9)
            .copy_from(&Mat3::identity());
    }
    let t_inv = t.try_inverse().ok_or(JointError::DegenerateCt { det })?;
    Ok(ControlMap {
        rest_ct: *rest_ct,
        t_mat: t,
        t_inv,
    })
}

impl ControlMap {
    /// Deformed world positions of the four control points.
    pub fn world_cps(&self, state: &AffineState) -> Mat3x4 {
        let a = state.a();
        let t = state.t();
        let mut out = Mat3x4::zeros();
        for cp in 0..4 {
            let y = a * self.rest_ct.column(cp) + t;
            out.set_column(cp, &y);
        }
        out
    }
}

/// `R` with `R a = e_y`: `R = I + [v]× + [v]×²/(1 + a_y)`, `v = a × e_y`.
pub fn axis_alignment_rotation(a: &Vec3) -> Result<Mat3, JointError> {
    let norm = a.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(JointError::NonUnitAxis { norm });
    }
    if a.y <= -1.0 + 1e-9 {
        return Err(JointError::AntiParallelAxis);
    }
    let v = a.cross(&Vec3::y());
    let vx = skew(&v);
    Ok(Mat3::identity() + vx + vx * vx / (1.0 + a.y))
}

/// Alignment rotation that also handles the anti-parallel case by
/// pre-rotating π about x.
fn axis_alignment_any(a: &Vec3) -> Result<Mat3, JointError> {
    match axis_alignment_rotation(a) {
        Ok(r) => Ok(r),
        Err(JointError::AntiParallelAxis) => {
            let pre = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
            Ok(axis_alignment_rotation(&(pre * a))? * pre)
        }
        Err(e) => Err(e),
    }
}

/// Skew-symmetrize a 3×3 slice (column-major entry numbering): zero the
/// diagonal; set each off-diagonal pair to ±½(|sᵢ|+|sⱼ|) with the sign taken
/// from the larger-magnitude member (exact ties: the lower-index entry).
pub fn skew_symmetrize(m: &Mat3) -> Mat3 {
    let mut s = [
        m[(0, 0)],
        m[(1, 0)],
        m[(2, 0)],
        m[(0, 1)],
        m[(1, 1)],
        m[(2, 1)],
        m[(0, 2)],
        m[(1, 2)],
        m[(2, 2)],
    ];
    s[0] = 0.0;
    s[4] = 0.0;
    s[8] = 0.0;
    for (i, j) in [(1usize, 3usize), (2, 6), (5, 7)] {
        let mag = 0.5 * (s[i].abs() + s[j].abs());
        let sign = if s[i].abs() > s[j].abs() {
            s[i].signum()
        } else if s[j].abs() > s[i].abs() {
            -s[j].signum()
        } else if s[i] != 0.0 {
            s[i].signum()
        } else {
            0.0
        };
        s[i] = sign * mag;
        s[j] = -sign * mag;
    }
    Mat3::new(s[0], s[3], s[6], s[1], s[4], s[7], s[2], s[5], s[8])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Ball,
    Hinge,
    Universal,
    Prismatic,
    Anchor,
}

/// One selection-matrix row: picks `sign · y[cp][coord]`.
#[derive(Debug, Clone, Copy)]
pub struct SelRow {
    pub cp: usize,
    pub coord: usize,
    pub sign: f64,
}

/// How the joint rotation `R_J` is carried.
#[derive(Debug, Clone)]
pub enum JointFrame {
    /// `R_J = ΔR_a · Rᵀ(A_a)`, recomputed from body a's rotation. `ΔR_b` is
    /// the equivalent constant for the b side (`R_J = ΔR_b Rᵀ(A_b)` holds
    /// whenever the constraint is satisfied).
    FollowBodyA {
        delta_r_a: Mat3,
        delta_r_b: Option<Mat3>,
    },
    /// Constant `R_J` (world-anchored joints and ball joints).
    Fixed { r_joint: Mat3 },
}

#[derive(Debug, Clone, Copy)]
pub struct JointLimits {
    pub min: f64,
    pub max: f64,
    pub stiffness: f64,
}

/// A built joint: constraint rows over the CP coordinates of one or two
/// bodies. Immutable after construction.
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub kind: JointKind,
    pub body_a: usize,
    /// `None` = constrained against the world.
    pub body_b: Option<usize>,
    pub rank: usize,
    pub rows_a: Vec<Option<SelRow>>,
    pub rows_b: Vec<Option<SelRow>>,
    pub map_a: ControlMap,
    pub map_b: Option<ControlMap>,
    /// World CP positions standing in for the `b` side of anchored joints.
    pub world_cps_b: Option<Mat3x4>,
    pub frame: JointFrame,
    /// Constant row offsets (structural pins, anchor targets).
    pub offset: DVector<f64>,
    /// Joint axis in body a's build frame (hinge / prismatic / universal `a₁`).
    pub axis_local_a: Option<Vec3>,
    /// Reference relative rotation `R_a⁰ᵀ R_b⁰` for the joint coordinate.
    pub rest_rel: Option<Mat3>,
    pub limits: Option<JointLimits>,
}

/// Residual and gradients of one joint at the current states.
#[derive(Debug, Clone)]
pub struct ConstraintBlock {
    pub residual: DVector<f64>,
    pub grad_a: DMatrix<f64>,
    pub grad_b: Option<DMatrix<f64>>,
}

fn rest_ct_of(pose: &AffineState, world_ct: &Mat3x4) -> Result<Mat3x4, JointError> {
    let a_inv = pose
        .a()
        .try_inverse()
        .ok_or(JointError::Body(BodyError::NearSingular {
            det: pose.a().determinant(),
        }))?;
    let t = pose.t();
    let mut rest = Mat3x4::zeros();
    for cp in 0..4 {
        rest.set_column(cp, &(a_inv * (world_ct.column(cp) - t)));
    }
    Ok(rest)
}

fn unit_axis(a: &Vec3) -> Result<Vec3, JointError> {
    let norm = a.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(JointError::NonUnitAxis { norm });
    }
    Ok(a / norm)
}

/// Canonical CT with CP₁ at `p` and unit edges along the world axes.
fn point_ct(p: &Vec3) -> Mat3x4 {
    Mat3x4::from_columns(&[*p, p + Vec3::x(), p + Vec3::y(), p + Vec3::z()])
}

/// CT with the CP₁→CP₂ edge along `axis` through `p`.
fn axis_ct(p: &Vec3, axis: &Vec3) -> Mat3x4 {
    let b = crate::math::orthogonal_unit(axis);
    let c = axis.cross(&b);
    Mat3x4::from_columns(&[*p, p + axis, p + b, p + c])
}

fn follow_frame(
    r_joint0: &Mat3,
    pose_a: &AffineState,
    pose_b: Option<&AffineState>,
) -> Result<JointFrame, JointError> {
    let r_a0 = polar_rotation(&pose_a.a())?;
    let delta_r_b = match pose_b {
        Some(p) => Some(r_joint0 * polar_rotation(&p.a())?),
        None => None,
    };
    Ok(JointFrame::FollowBodyA {
        delta_r_a: r_joint0 * r_a0,
        delta_r_b,
    })
}

fn rest_rel_of(
    pose_a: &AffineState,
    pose_b: Option<&AffineState>,
) -> Result<Option<Mat3>, JointError> {
    let r_a = polar_rotation(&pose_a.a())?;
    let r_b = match pose_b {
        Some(p) => polar_rotation(&p.a())?,
        None => Mat3::identity(),
    };
    Ok(Some(r_a.transpose() * r_b))
}

/// Ball joint: the shared CP₁ of both CTs is pinned together (3 rows).
/// With `body_b = None` this is a point anchor against the world.
pub fn ball_joint(
    body_a: usize,
    pose_a: &AffineState,
    body_b: Option<(usize, &AffineState)>,
    point: &Vec3,
) -> Result<JointSpec, JointError> {
    let ct = point_ct(point);
    let rows: Vec<Option<SelRow>> = (0..3)
        .map(|coord| {
            Some(SelRow {
                cp: 0,
                coord,
                sign: 1.0,
            })
        })
        .collect();
    Ok(JointSpec {
        kind: if body_b.is_some() {
            JointKind::Ball
        } else {
            JointKind::Anchor
        },
        body_a,
        body_b: body_b.map(|(id, _)| id),
        rank: 3,
        rows_a: rows.clone(),
        rows_b: rows,
        map_a: build_control_map(&rest_ct_of(pose_a, &ct)?)?,
        map_b: match body_b {
            Some((_, pose)) => Some(build_control_map(&rest_ct_of(pose, &ct)?)?),
            None => None,
        },
        world_cps_b: if body_b.is_none() { Some(ct) } else { None },
        frame: JointFrame::Fixed {
            r_joint: Mat3::identity(),
        },
        offset: DVector::zeros(3),
        axis_local_a: None,
        rest_rel: rest_rel_of(pose_a, body_b.map(|(_, p)| p))?,
        limits: None,
    })
}

/// Full-CP anchor: welds all four control points to their world positions
/// (12 rows).
pub fn weld_anchor(
    body_a: usize,
    pose_a: &AffineState,
    point: &Vec3,
) -> Result<JointSpec, JointError> {
    let ct = point_ct(point);
    let rows: Vec<Option<SelRow>> = (0..12)
        .map(|r| {
            Some(SelRow {
                cp: r / 3,
                coord: r % 3,
                sign: 1.0,
            })
        })
        .collect();
    Ok(JointSpec {
        kind: JointKind::Anchor,
        body_a,
        body_b: None,
        rank: 12,
        rows_a: rows.clone(),
        rows_b: rows,
        map_a: build_control_map(&rest_ct_of(pose_a, &ct)?)?,
        map_b: None,
        world_cps_b: Some(ct),
        frame: JointFrame::Fixed {
            r_joint: Mat3::identity(),
        },
        offset: DVector::zeros(12),
        axis_local_a: None,
        rest_rel: rest_rel_of(pose_a, None)?,
        limits: None,
    })
}

/// Hinge: CP₁ of both CTs pinned, CP₂ constrained to the axis line (local x̃
/// and z̃ of the CP₂ difference), 5 rows. The bodies may rotate relative to
/// each other only about the axis.
pub fn hinge_joint(
    body_a: usize,
    pose_a: &AffineState,
    body_b: Option<(usize, &AffineState)>,
    point: &Vec3,
    axis: &Vec3,
    limits: Option<JointLimits>,
) -> Result<JointSpec, JointError> {
    let axis = unit_axis(axis)?;
    let ct = axis_ct(point, &axis);
    let r_joint0 = axis_alignment_any(&axis)?;
    let rows: Vec<Option<SelRow>> = vec![
        Some(SelRow { cp: 0, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 0, coord: 1, sign: 1.0 }),
        Some(SelRow { cp: 0, coord: 2, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 2, sign: 1.0 }),
    ];
    let frame = match body_b {
        Some((_, pose)) => follow_frame(&r_joint0, pose_a, Some(pose))?,
        None => JointFrame::Fixed { r_joint: r_joint0 },
    };
    let mut offset = DVector::zeros(5);
    if body_b.is_none() {
        for (c, row) in rows.iter().enumerate() {
            let r = row.as_ref().unwrap();
            offset[c] = r.sign * (r_joint0 * ct.column(r.cp))[r.coord];
        }
    }
    Ok(JointSpec {
        kind: JointKind::Hinge,
        body_a,
        body_b: body_b.map(|(id, _)| id),
        rank: 5,
        rows_a: rows.clone(),
        rows_b: if body_b.is_some() {
            rows
        } else {
            vec![None; 5]
        },
        map_a: build_control_map(&rest_ct_of(pose_a, &ct)?)?,
        map_b: match body_b {
            Some((_, pose)) => Some(build_control_map(&rest_ct_of(pose, &ct)?)?),
            None => None,
        },
        world_cps_b: if body_b.is_none() { Some(ct) } else { None },
        frame,
        offset,
        axis_local_a: Some(polar_rotation(&pose_a.a())?.transpose() * axis),
        rest_rel: rest_rel_of(pose_a, body_b.map(|(_, p)| p))?,
        limits,
    })
}

/// Universal joint: shared CP₂ pinned (3 rows) plus one row keeping body b's
/// CT edge orthogonal to `a₁` (4 rows total). `a₁` is materially attached to
/// body a, `a₂` to body b.
pub fn universal_joint(
    body_a: usize,
    pose_a: &AffineState,
    body_b: Option<(usize, &AffineState)>,
    point: &Vec3,
    axis1: &Vec3,
    axis2: &Vec3,
) -> Result<JointSpec, JointError> {
    let a1 = unit_axis(axis1)?;
    let a2 = unit_axis(axis2)?;
    let dot = a1.dot(&a2);
    if dot.abs() > 1e-10 {
        return Err(JointError::NonOrthogonalAxes { dot });
    }
    // CT: CP₂ at the joint point, CP₁ = p + a₂ (the constrained edge on b),
    // CP₃ = p + a₁, CP₄ completes the frame
    let ct = Mat3x4::from_columns(&[point + a2, *point, point + a1, point + a1.cross(&a2)]);
    // rows of R_U: (a₁×a₂)ᵀ, a₁ᵀ, a₂ᵀ — maps a₁ ↦ e_y, a₂ ↦ e_z
    let r_joint0 = Mat3::from_rows(&[
        a1.cross(&a2).transpose(),
        a1.transpose(),
        a2.transpose(),
    ]);
    let rows_a: Vec<Option<SelRow>> = vec![
        Some(SelRow { cp: 1, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 1, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 2, sign: 1.0 }),
        // (ỹ₂ᵅ)_y − (ỹ₁ᵝ)_y = 0: shared-CP substitution of ỹ₁ᵝ_y = ỹ₂ᵝ_y
        Some(SelRow { cp: 1, coord: 1, sign: 1.0 }),
    ];
    let rows_b: Vec<Option<SelRow>> = vec![
        Some(SelRow { cp: 1, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 1, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 2, sign: 1.0 }),
        Some(SelRow { cp: 0, coord: 1, sign: 1.0 }),
    ];
    let frame = match body_b {
        Some((_, pose)) => follow_frame(&r_joint0, pose_a, Some(pose))?,
        None => JointFrame::Fixed { r_joint: r_joint0 },
    };
    let mut offset = DVector::zeros(4);
    let rows_b = if body_b.is_some() {
        rows_b
    } else {
        // world side: fold the constant CP terms into the offsets
        for (c, row) in rows_b.iter().enumerate() {
            let r = row.as_ref().unwrap();
            offset[c] += r.sign * (r_joint0 * ct.column(r.cp))[r.coord];
        }
        vec![None; 4]
    };
    Ok(JointSpec {
        kind: JointKind::Universal,
        body_a,
        body_b: body_b.map(|(id, _)| id),
        rank: 4,
        rows_a,
        rows_b,
        map_a: build_control_map(&rest_ct_of(pose_a, &ct)?)?,
        map_b: match body_b {
            Some((_, pose)) => Some(build_control_map(&rest_ct_of(pose, &ct)?)?),
            None => None,
        },
        world_cps_b: if body_b.is_none() { Some(ct) } else { None },
        frame,
        offset,
        axis_local_a: Some(polar_rotation(&pose_a.a())?.transpose() * a1),
        rest_rel: rest_rel_of(pose_a, body_b.map(|(_, p)| p))?,
        limits: None,
    })
}

/// Prismatic joint: local x̃/z̃ of the three axis CPs (CP₂ᵅ, CP₁ᵝ, CP₂ᵝ)
/// matched pairwise through CP₂ᵅ (4 rows) plus one row pinning x̃ of CP₃ᵝ to
/// its build value, 5 rows. Only relative sliding along the axis remains.
pub fn prismatic_joint(
    body_a: usize,
    pose_a: &AffineState,
    body_b: Option<(usize, &AffineState)>,
    point: &Vec3,
    axis: &Vec3,
    limits: Option<JointLimits>,
) -> Result<JointSpec, JointError> {
    let axis = unit_axis(axis)?;
    let ct = axis_ct(point, &axis);
    let r_joint0 = axis_alignment_any(&axis)?;
    let mut rows_a: Vec<Option<SelRow>> = vec![
        Some(SelRow { cp: 1, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 2, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 2, sign: 1.0 }),
        None,
    ];
    let mut rows_b: Vec<Option<SelRow>> = vec![
        Some(SelRow { cp: 0, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 0, coord: 2, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 0, sign: 1.0 }),
        Some(SelRow { cp: 1, coord: 2, sign: 1.0 }),
        Some(SelRow { cp: 2, coord: 0, sign: -1.0 }),
    ];
    let mut offset = DVector::zeros(5);
    offset[4] = (r_joint0 * ct.column(2))[0];
    if body_b.is_none() {
        // world-anchored: every row constrains the body side directly
        rows_a = rows_b
            .iter()
            .map(|r| r.map(|mut s| {
                s.sign = s.sign.abs();
                s
            }))
            .collect();
        for (c, row) in rows_a.iter().enumerate() {
            let r = row.as_ref().unwrap();
            offset[c] = r.sign * (r_joint0 * ct.column(r.cp))[r.coord];
        }
        rows_b = vec![None; 5];
    }
    let frame = match body_b {
        Some((_, pose)) => follow_frame(&r_joint0, pose_a, Some(pose))?,
        None => JointFrame::Fixed { r_joint: r_joint0 },
    };
    Ok(JointSpec {
        kind: JointKind::Prismatic,
        body_a,
        body_b: body_b.map(|(id, _)| id),
        rank: 5,
        rows_a,
        rows_b,
        map_a: build_control_map(&rest_ct_of(pose_a, &ct)?)?,
        map_b: match body_b {
            Some((_, pose)) => Some(build_control_map(&rest_ct_of(pose, &ct)?)?),
            None => None,
        },
        world_cps_b: if body_b.is_none() { Some(ct) } else { None },
        frame,
        offset,
        axis_local_a: Some(polar_rotation(&pose_a.a())?.transpose() * axis),
        rest_rel: rest_rel_of(pose_a, body_b.map(|(_, p)| p))?,
        limits,
    })
}

/// Current joint rotation `R_J`.
pub fn joint_rotation(spec: &JointSpec, state_a: &AffineState) -> Result<Mat3, JointError> {
    match &spec.frame {
        JointFrame::Fixed { r_joint } => Ok(*r_joint),
        JointFrame::FollowBodyA { delta_r_a, .. } => {
            Ok(delta_r_a * polar_rotation(&state_a.a())?.transpose())
        }
    }
}

fn side_cps(spec: &JointSpec, state_b: Option<&AffineState>) -> Result<Mat3x4, JointError> {
    match (&spec.map_b, state_b, &spec.world_cps_b) {
        (Some(map), Some(state), _) => Ok(map.world_cps(state)),
        (None, None, Some(world)) => Ok(*world),
        _ => Err(JointError::WrongBodies),
    }
}

/// Constraint residual `C(q_a, q_b)`.
pub fn eval_constraint(
    spec: &JointSpec,
    state_a: &AffineState,
    state_b: Option<&AffineState>,
) -> Result<DVector<f64>, JointError> {
    if spec.body_b.is_some() != state_b.is_some() {
        return Err(JointError::WrongBodies);
    }
    let r_j = joint_rotation(spec, state_a)?;
    let y_a = spec.map_a.world_cps(state_a);
    let y_b = side_cps(spec, state_b)?;
    let mut r = DVector::zeros(spec.rank);
    for c in 0..spec.rank {
        let mut val = -spec.offset[c];
        if let Some(row) = &spec.rows_a[c] {
            val += row.sign * (r_j * y_a.column(row.cp))[row.coord];
        }
        if let Some(row) = &spec.rows_b[c] {
            val -= row.sign * (r_j * y_b.column(row.cp))[row.coord];
        }
        r[c] = val;
    }
    Ok(r)
}

/// Residual plus gradients w.r.t. both bodies' `q`.
///
/// The explicit part treats `R_J` as constant; the rotation part contracts
/// `∂C/∂vec(R_J)` with per-DOF slices `R_J · skew_symmetrize(R e_j e_iᵀ)`,
/// the joint-local skew-symmetrization of the `R ≈ A` rotation gradient.
/// Ball and world-anchored joints have constant gradients and skip the
/// rotation part.
pub fn eval_gradient(
    spec: &JointSpec,
    state_a: &AffineState,
    state_b: Option<&AffineState>,
) -> Result<ConstraintBlock, JointError> {
    let residual = eval_constraint(spec, state_a, state_b)?;
    let r_j = joint_rotation(spec, state_a)?;
    let y_a = spec.map_a.world_cps(state_a);
    let y_b = side_cps(spec, state_b)?;

    let mut grad_a = DMatrix::zeros(spec.rank, 12);
    let mut grad_b = spec.map_b.as_ref().map(|_| DMatrix::zeros(spec.rank, 12));

    let fill_explicit =
        |grad: &mut DMatrix<f64>, rows: &[Option<SelRow>], rest_ct: &Mat3x4, sign_flip: f64| {
            for (c, row) in rows.iter().enumerate() {
                let Some(row) = row else { continue };
                for i in 0..3 {
                    let coeff = sign_flip * row.sign * r_j[(row.coord, i)];
                    for j in 0..3 {
                        grad[(c, 3 * j + i)] += coeff * rest_ct[(j, row.cp)];
                    }
                    grad[(c, 9 + i)] += coeff;
                }
            }
        };
    fill_explicit(&mut grad_a, &spec.rows_a, &spec.map_a.rest_ct, 1.0);
    if let (Some(gb), Some(map_b)) = (grad_b.as_mut(), spec.map_b.as_ref()) {
        fill_explicit(gb, &spec.rows_b, &map_b.rest_ct, -1.0);
    }

    if let JointFrame::FollowBodyA { .. } = &spec.frame {
        let r = polar_rotation(&state_a.a())?;
        // slice for q_l = A_ij (l = 3j + i): R_J · skew_symmetrize(R e_j e_iᵀ)
        for j in 0..3 {
            for i in 0..3 {
                let naive = r.column(j) * Mat3::identity().column(i).transpose();
                let slice = r_j * skew_symmetrize(&naive);
                let l = 3 * j + i;
                for c in 0..spec.rank {
                    let mut d = Vec3::zeros();
                    let mut coord = 0;
                    if let Some(row) = &spec.rows_a[c] {
                        d += y_a.column(row.cp) * row.sign;
                        coord = row.coord;
                    }
                    if let Some(row) = &spec.rows_b[c] {
                        d -= y_b.column(row.cp) * row.sign;
                        coord = row.coord;
                    }
                    grad_a[(c, l)] += (slice * d)[coord];
                }
            }
        }
    }

    Ok(ConstraintBlock {
        residual,
        grad_a,
        grad_b,
    })
}

/// Scalar joint coordinate: hinge angle about the axis (wrapped to ±π) or
/// prismatic displacement along the axis.
pub fn joint_coordinate(
    spec: &JointSpec,
    state_a: &AffineState,
    state_b: Option<&AffineState>,
) -> Result<f64, JointError> {
    let axis = spec.axis_local_a.ok_or(JointError::NoLimitDefined)?;
    match spec.kind {
        JointKind::Hinge => {
            let r_a = polar_rotation(&state_a.a())?;
            let r_b = match state_b {
                Some(s) => polar_rotation(&s.a())?,
                None => Mat3::identity(),
            };
            let rest_rel = spec.rest_rel.unwrap_or_else(Mat3::identity);
            let d = rest_rel.transpose() * r_a.transpose() * r_b;
            let u = crate::math::orthogonal_unit(&axis);
            let w = axis.cross(&u);
            let du = d * u;
            Ok(du.dot(&w).atan2(du.dot(&u)))
        }
        JointKind::Prismatic => {
            let axis_world = polar_rotation(&state_a.a())? * axis;
            let y_a = spec.map_a.world_cps(state_a);
            let y_b = side_cps(spec, state_b)?;
            Ok((y_b.column(0) - y_a.column(0)).dot(&axis_world))
        }
        _ => Err(JointError::NoLimitDefined),
    }
}

/// Outcome of a joint-limit check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOutcome {
    pub clamped: bool,
    pub theta: f64,
    /// Nearest valid coordinate.
    pub theta_hat: f64,
    /// Dual-space penalty magnitude `k_limit (θ − θ̂)`, zero inside the range.
    pub penalty: f64,
}

/// Clamp the joint coordinate to its limit range and emit the penalty force.
/// The interval is closed: a coordinate exactly at a bound is not clamped.
pub fn apply_joint_limits(
    spec: &JointSpec,
    state_a: &AffineState,
    state_b: Option<&AffineState>,
) -> Result<LimitOutcome, JointError> {
    let limits = spec.limits.ok_or(JointError::NoLimitDefined)?;
    let theta = joint_coordinate(spec, state_a, state_b)?;
    let theta_hat = theta.clamp(limits.min, limits.max);
    let clamped = theta != theta_hat;
    Ok(LimitOutcome {
        clamped,
        theta,
        theta_hat,
        penalty: limits.stiffness * (theta - theta_hat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{q_from_parts, rotation_about_axis, rotation_from_quat, Vec12};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
        rotation_from_quat(
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        )
    }

    fn rand_pose(rng: &mut ChaCha8Rng) -> AffineState {
        AffineState::from_pose(
            &rand_rotation(rng),
            &Vec3::new(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            ),
        )
    }

    /// Near-rigid state: random rotation times a small symmetric stretch.
    fn near_rigid(rng: &mut ChaCha8Rng, strain: f64) -> AffineState {
        let r = rand_rotation(rng);
        let mut s = Mat3::identity();
        for i in 0..3 {
            for j in 0..3 {
                s[(i, j)] += strain * (rng.gen::<f64>() - 0.5);
            }
        }
        let a = r * (s + s.transpose()) * 0.5;
        AffineState::from_pose(
            &a,
            &Vec3::new(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            ),
        )
    }

    #[test]
    fn control_map_roundtrip() {
        let ct = point_ct(&Vec3::new(0.2, -0.4, 0.7));
        let map = build_control_map(&ct).unwrap();
        assert_relative_eq!(map.t_mat * map.t_inv, Mat12::identity(), epsilon = 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let q = Vec12::from_fn(|_, _| rng.gen::<f64>() - 0.5);
            let back = map.t_inv * (map.t_mat * q);
            assert_relative_eq!(back, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn control_points_at_rest_and_translated() {
        let ct = point_ct(&Vec3::zeros());
        let map = build_control_map(&ct).unwrap();
        let rest = AffineState::rest();
        assert_relative_eq!(map.world_cps(&rest), ct, epsilon = 1e-15);
        let shifted = AffineState {
            q: q_from_parts(&Mat3::identity(), &Vec3::new(1.0, 2.0, 3.0)),
            qdot: Vec12::zeros(),
        };
        let cps = map.world_cps(&shifted);
        for cp in 0..4 {
            assert_relative_eq!(
                cps.column(cp).into_owned(),
                ct.column(cp).into_owned() + Vec3::new(1.0, 2.0, 3.0),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn degenerate_ct_rejected() {
        let flat = Mat3x4::from_columns(&[
            Vec3::zeros(),
            Vec3::x(),
            Vec3::y(),
            Vec3::x() + Vec3::y(),
        ]);
        assert!(matches!(
            build_control_map(&flat),
            Err(JointError::DegenerateCt { .. })
        ));
    }

    #[test]
    fn axis_alignment_cases() {
        assert_relative_eq!(
            axis_alignment_rotation(&Vec3::y()).unwrap(),
            Mat3::identity(),
            epsilon = 1e-14
        );
        let r = axis_alignment_rotation(&Vec3::x()).unwrap();
        let expect = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(r, expect, epsilon = 1e-14);
        assert!(matches!(
            axis_alignment_rotation(&(-Vec3::y())),
            Err(JointError::AntiParallelAxis)
        ));
        // generic axes land on e_y
        let a = Vec3::new(0.3, -0.5, 0.81).normalize();
        let r = axis_alignment_rotation(&a).unwrap();
        assert_relative_eq!(r * a, Vec3::y(), epsilon = 1e-12);
        // the pre-rotated fallback covers the anti-parallel case
        let r = axis_alignment_any(&(-Vec3::y())).unwrap();
        assert_relative_eq!(r * -Vec3::y(), Vec3::y(), epsilon = 1e-12);
    }

    #[test]
    fn skew_symmetrize_reference_case() {
        let m = Mat3::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0);
        let s = skew_symmetrize(&m);
        assert_eq!(s[(0, 0)], 0.0);
        assert_eq!(s[(1, 1)], 0.0);
        assert_eq!(s[(2, 2)], 0.0);
        // column-major s₂ = M₂₁, s₄ = M₁₂: magnitudes average to 3
        assert_eq!(s[(1, 0)], 3.0);
        assert_eq!(s[(0, 1)], -3.0);
        assert_eq!(s.transpose(), -s);
    }

    fn all_kinds(
        rng: &mut ChaCha8Rng,
    ) -> Vec<(JointSpec, AffineState, AffineState)> {
        let pose_a = rand_pose(rng);
        let pose_b = rand_pose(rng);
        let p = Vec3::new(0.3, -0.2, 0.5);
        let axis = Vec3::new(1.0, 2.0, -0.5).normalize();
        let a2 = crate::math::orthogonal_unit(&axis);
        vec![
            (
                ball_joint(0, &pose_a, Some((1, &pose_b)), &p).unwrap(),
                pose_a,
                pose_b,
            ),
            (
                hinge_joint(0, &pose_a, Some((1, &pose_b)), &p, &axis, None).unwrap(),
                pose_a,
                pose_b,
            ),
            (
                universal_joint(0, &pose_a, Some((1, &pose_b)), &p, &axis, &a2).unwrap(),
                pose_a,
                pose_b,
            ),
            (
                prismatic_joint(0, &pose_a, Some((1, &pose_b)), &p, &axis, None).unwrap(),
                pose_a,
                pose_b,
            ),
        ]
    }

    #[test]
    fn constructed_scenes_are_satisfied() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            for (spec, pose_a, pose_b) in all_kinds(&mut rng) {
                let r = eval_constraint(&spec, &pose_a, Some(&pose_b)).unwrap();
                assert!(
                    r.amax() <= 1e-12,
                    "{:?} residual at build: {:.3e}",
                    spec.kind,
                    r.amax()
                );
            }
            // anchored variants
            let pose = rand_pose(&mut rng);
            let p = Vec3::new(-0.1, 0.4, 0.2);
            let axis = Vec3::new(0.2, 0.5, -1.0).normalize();
            for spec in [
                ball_joint(0, &pose, None, &p).unwrap(),
                weld_anchor(0, &pose, &p).unwrap(),
                hinge_joint(0, &pose, None, &p, &axis, None).unwrap(),
                prismatic_joint(0, &pose, None, &p, &axis, None).unwrap(),
            ] {
                let r = eval_constraint(&spec, &pose, None).unwrap();
                assert!(r.amax() <= 1e-12, "{:?}: {:.3e}", spec.kind, r.amax());
            }
        }
    }

    #[test]
    fn ball_translation_gives_negative_displacement() {
        let pose_a = AffineState::rest();
        let pose_b = AffineState::rest();
        let p = Vec3::new(0.5, 0.0, 0.0);
        let spec = ball_joint(0, &pose_a, Some((1, &pose_b)), &p).unwrap();
        let d = Vec3::new(0.01, -0.02, 0.03);
        let moved = AffineState::from_pose(&Mat3::identity(), &d);
        let r = eval_constraint(&spec, &pose_a, Some(&moved)).unwrap();
        assert_relative_eq!(Vec3::new(r[0], r[1], r[2]), -d, epsilon = 1e-14);
    }

    #[test]
    fn hinge_invariant_under_axis_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let pose_a = rand_pose(&mut rng);
        let pose_b = rand_pose(&mut rng);
        let p = Vec3::new(0.3, -0.2, 0.5);
        let axis = Vec3::new(1.0, 2.0, -0.5).normalize();
        let spec = hinge_joint(0, &pose_a, Some((1, &pose_b)), &p, &axis, None).unwrap();
        for angle in [0.3, 1.2, 2.9, -0.7] {
            let rot = rotation_about_axis(&axis, angle);
            let moved = AffineState::from_pose(&(rot * pose_b.a()), &(rot * (pose_b.t() - p) + p));
            let r = eval_constraint(&spec, &pose_a, Some(&moved)).unwrap();
            assert!(r.amax() <= 1e-10, "hinge residual {:.3e}", r.amax());
        }
    }

    #[test]
    fn prismatic_invariant_under_axis_slide() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let pose_a = rand_pose(&mut rng);
        let pose_b = rand_pose(&mut rng);
        let p = Vec3::new(0.1, 0.2, -0.4);
        let axis = Vec3::new(-0.3, 1.0, 0.7).normalize();
        let spec = prismatic_joint(0, &pose_a, Some((1, &pose_b)), &p, &axis, None).unwrap();
        for slide in [0.2, -0.5, 1.4] {
            let moved = AffineState::from_pose(&pose_b.a(), &(pose_b.t() + axis * slide));
            let r = eval_constraint(&spec, &pose_a, Some(&moved)).unwrap();
            assert!(r.amax() <= 1e-10, "prismatic residual {:.3e}", r.amax());
            let coord = joint_coordinate(&spec, &pose_a, Some(&moved)).unwrap();
            assert_relative_eq!(coord, slide, epsilon = 1e-10);
        }
    }

    #[test]
    fn universal_invariant_under_both_axis_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let pose_a = rand_pose(&mut rng);
        let pose_b = rand_pose(&mut rng);
        let p = Vec3::new(0.6, -0.1, 0.3);
        let a1 = Vec3::new(0.4, 0.7, -0.2).normalize();
        let a2 = crate::math::orthogonal_unit(&a1);
        let spec = universal_joint(0, &pose_a, Some((1, &pose_b)), &p, &a1, &a2).unwrap();
        // rotation of body b about a₂ (its own axis) through the joint point
        for angle in [0.4, -1.1] {
            let rot = rotation_about_axis(&a2, angle);
            let moved = AffineState::from_pose(&(rot * pose_b.a()), &(rot * (pose_b.t() - p) + p));
            let r = eval_constraint(&spec, &pose_a, Some(&moved)).unwrap();
            assert!(r.amax() <= 1e-10, "universal a₂ residual {:.3e}", r.amax());
        }
        // rotation of body b about a₁ (body a's axis) through the joint point
        for angle in [0.5, -0.9] {
            let rot = rotation_about_axis(&a1, angle);
            let moved = AffineState::from_pose(&(rot * pose_b.a()), &(rot * (pose_b.t() - p) + p));
            let r = eval_constraint(&spec, &pose_a, Some(&moved)).unwrap();
            assert!(r.amax() <= 1e-10, "universal a₁ residual {:.3e}", r.amax());
        }
    }

    #[test]
    fn ball_gradient_is_bitwise_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let pose_a = rand_pose(&mut rng);
        let pose_b = rand_pose(&mut rng);
        let spec = ball_joint(0, &pose_a, Some((1, &pose_b)), &Vec3::new(0.2, 0.1, 0.4)).unwrap();
        let first = eval_gradient(&spec, &pose_a, Some(&pose_b)).unwrap();
        for _ in 0..10 {
            let sa = rand_pose(&mut rng);
            let sb = rand_pose(&mut rng);
            let block = eval_gradient(&spec, &sa, Some(&sb)).unwrap();
            assert_eq!(block.grad_a, first.grad_a);
            assert_eq!(block.grad_b, first.grad_b);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let step = 1e-6;
        for trial in 0..25 {
            for (mut spec, _, _) in all_kinds(&mut rng) {
                // evaluate far from the satisfied configuration: random
                // near-rigid states for both bodies
                let sa = near_rigid(&mut rng, 1e-5);
                let sb = near_rigid(&mut rng, 1e-5);
                spec.limits = None;
                let block = eval_gradient(&spec, &sa, Some(&sb)).unwrap();
                let mut fd_a = DMatrix::zeros(spec.rank, 12);
                let mut fd_b = DMatrix::zeros(spec.rank, 12);
                for l in 0..12 {
                    let mut plus = sa;
                    plus.q[l] += step;
                    let mut minus = sa;
                    minus.q[l] -= step;
                    let col = (eval_constraint(&spec, &plus, Some(&sb)).unwrap()
                        - eval_constraint(&spec, &minus, Some(&sb)).unwrap())
                        / (2.0 * step);
                    fd_a.set_column(l, &col);
                    let mut plus = sb;
                    plus.q[l] += step;
                    let mut minus = sb;
                    minus.q[l] -= step;
                    let col = (eval_constraint(&spec, &sa, Some(&plus)).unwrap()
                        - eval_constraint(&spec, &sa, Some(&minus)).unwrap())
                        / (2.0 * step);
                    fd_b.set_column(l, &col);
                }
                let denom = fd_a.norm().max(1.0);
                assert!(
                    (&block.grad_a - &fd_a).norm() <= 1e-4 * denom,
                    "{:?} grad_a FD mismatch {:.3e} (trial {trial})",
                    spec.kind,
                    (&block.grad_a - &fd_a).norm() / denom
                );
                let gb = block.grad_b.unwrap();
                let denom = fd_b.norm().max(1.0);
                assert!(
                    (&gb - &fd_b).norm() <= 1e-4 * denom,
                    "{:?} grad_b FD mismatch {:.3e}",
                    spec.kind,
                    (&gb - &fd_b).norm() / denom
                );
            }
        }
    }

    #[test]
    fn selection_rows_are_sparse_unit_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for (spec, _, _) in all_kinds(&mut rng) {
            assert_eq!(spec.rows_a.len(), spec.rank);
            assert_eq!(spec.rows_b.len(), spec.rank);
            for c in 0..spec.rank {
                for row in [&spec.rows_a[c], &spec.rows_b[c]].into_iter().flatten() {
                    assert!(row.cp < 4 && row.coord < 3);
                    assert_eq!(row.sign.abs(), 1.0);
                }
                assert!(
                    spec.rows_a[c].is_some() || spec.rows_b[c].is_some(),
                    "row {c} of {:?} selects nothing",
                    spec.kind
                );
            }
        }
    }

    #[test]
    fn joint_rank_matches_kind_and_gradient_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        for (spec, _, _) in all_kinds(&mut rng) {
            let expected = match spec.kind {
                JointKind::Ball => 3,
                JointKind::Hinge | JointKind::Prismatic => 5,
                JointKind::Universal => 4,
                JointKind::Anchor => spec.rank,
            };
            assert_eq!(spec.rank, expected);
            // generic-state gradient has full row rank: the two-body system
            // keeps 24 − C_k independent motions
            let sa = near_rigid(&mut rng, 1e-4);
            let sb = near_rigid(&mut rng, 1e-4);
            let block = eval_gradient(&spec, &sa, Some(&sb)).unwrap();
            let mut full = DMatrix::zeros(spec.rank, 24);
            full.view_mut((0, 0), (spec.rank, 12)).copy_from(&block.grad_a);
            full.view_mut((0, 12), (spec.rank, 12))
                .copy_from(block.grad_b.as_ref().unwrap());
            let svd = full.svd(false, false);
            let rank = svd
                .singular_values
                .iter()
                .filter(|&&s| s > 1e-9 * svd.singular_values[0])
                .count();
            assert_eq!(rank, spec.rank, "{:?} gradient rank deficient", spec.kind);
        }
    }

    #[test]
    fn delta_r_consistency_between_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let pose_a = rand_pose(&mut rng);
        let pose_b = rand_pose(&mut rng);
        let axis = Vec3::new(0.6, -0.3, 0.9).normalize();
        let spec = hinge_joint(
            0,
            &pose_a,
            Some((1, &pose_b)),
            &Vec3::new(0.2, 0.2, 0.2),
            &axis,
            None,
        )
        .unwrap();
        let JointFrame::FollowBodyA {
            delta_r_a,
            delta_r_b,
        } = &spec.frame
        else {
            panic!("expected body-carried frame");
        };
        // both reconstructions give the same R_J at the build configuration
        let ra = polar_rotation(&pose_a.a()).unwrap();
        let rb = polar_rotation(&pose_b.a()).unwrap();
        assert_relative_eq!(
            delta_r_a * ra.transpose(),
            delta_r_b.unwrap() * rb.transpose(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn hinge_coordinate_tracks_rotation() {
        let pose_a = AffineState::rest();
        let pose_b = AffineState::rest();
        let p = Vec3::new(0.0, 0.5, 0.0);
        let axis = Vec3::z();
        let spec = hinge_joint(0, &pose_a, Some((1, &pose_b)), &p, &axis, None).unwrap();
        for angle in [0.3, -1.2, 2.5] {
            let rot = rotation_about_axis(&axis, angle);
            let moved = AffineState::from_pose(&rot, &(rot * (pose_b.t() - p) + p));
            let theta = joint_coordinate(&spec, &pose_a, Some(&moved)).unwrap();
            assert_relative_eq!(theta, angle, epsilon = 1e-12);
        }
    }

    #[test]
    fn limit_examples() {
        let pose_a = AffineState::rest();
        let pose_b = AffineState::rest();
        let p = Vec3::new(0.0, 0.5, 0.0);
        let limits = JointLimits {
            min: -1.0,
            max: 1.0,
            stiffness: 10.0,
        };
        let spec =
            hinge_joint(0, &pose_a, Some((1, &pose_b)), &p, &Vec3::z(), Some(limits)).unwrap();
        let at = |angle: f64| {
            let rot = rotation_about_axis(&Vec3::z(), angle);
            AffineState::from_pose(&rot, &(rot * (pose_b.t() - p) + p))
        };
        let inside = apply_joint_limits(&spec, &pose_a, Some(&at(0.5))).unwrap();
        assert!(!inside.clamped);
        assert_eq!(inside.penalty, 0.0);

        let beyond = apply_joint_limits(&spec, &pose_a, Some(&at(1.2))).unwrap();
        assert!(beyond.clamped);
        assert_relative_eq!(beyond.theta_hat, 1.0, epsilon = 1e-12);
        assert_relative_eq!(beyond.penalty, 10.0 * 0.2, epsilon = 1e-9);

        let boundary = apply_joint_limits(&spec, &pose_a, Some(&at(1.0))).unwrap();
        assert!(!boundary.clamped);

        let unlimited =
            hinge_joint(0, &pose_a, Some((1, &pose_b)), &p, &Vec3::z(), None).unwrap();
        assert!(matches!(
            apply_joint_limits(&unlimited, &pose_a, Some(&pose_b)),
            Err(JointError::NoLimitDefined)
        ));
    }

    #[test]
    fn wrong_bodies_rejected() {
        let pose = AffineState::rest();
        let spec = ball_joint(0, &pose, None, &Vec3::zeros()).unwrap();
        assert!(matches!(
            eval_constraint(&spec, &pose, Some(&pose)),
            Err(JointError::WrongBodies)
        ));
    }
}
