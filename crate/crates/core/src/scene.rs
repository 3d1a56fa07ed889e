//! Scene documents, the time-stepping loop, and trajectory recording.
//!
//! A scene is authored as a versioned JSON document (bodies with primitive or
//! mesh geometry, joints and anchors in world coordinates, an external-wrench
//! schedule, integrator settings). Building it places per-joint control
//! tetrahedra, precomputes the per-body constants for the configured step
//! size, and splits bodies into islands.
//!
//! Each step performs the configured number of Newton iterations: assemble
//! per-body right-hand sides (inertia residual against
//! `q̂ = qⁿ + h q̇ⁿ + h² M⁻¹ f_ext`, elastic gradient, scheduled wrenches,
//! joint-limit penalties), dispatch every island to its topology solver,
//! apply the increments, then update velocities as `q̇ⁿ⁺¹ = (qⁿ⁺¹ − qⁿ)/h`.
//! Runs are deterministic: identical inputs produce identical trajectories.

use crate::body::{
    self, elastic_energy, elastic_gradient, newton_step_single, polar_rotation, AffineState,
    BodyError, BodyModel, Material, SpatialWrench,
};
use crate::joints::{
    self, apply_joint_limits, ball_joint, eval_constraint, eval_gradient, hinge_joint,
    prismatic_joint, universal_joint, weld_anchor, JointError, JointFrame,
    JointKind, JointLimits, JointSpec,
};
use crate::math::{rotation_about_axis, Mat3, Vec12, Vec3};
use crate::mesh::{box_moments, capsule_moments, cylinder_moments, TetMesh};
use crate::solvers::{solve_island, BodyCtx, JointCtx, SolveOptions, SolverChoice, SolverError};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// description

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeometryDesc {
    Box { size: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
    Capsule { radius: f64, height: f64 },
    Mesh {
        vertices: Vec<[f64; 3]>,
        tets: Vec<[usize; 4]>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct PoseDesc {
    /// Row-major 3×3 linear map; identity when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub t: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VelocityDesc {
    /// Spatial twist: `omega` rad/s, `v` = body-origin velocity m/s.
    Twist { omega: [f64; 3], v: [f64; 3] },
    /// Linear momentum `p` kg·m/s and angular momentum about the center of
    /// mass `l` kg·m²/s, converted through the rigid inertia at `t = 0`.
    Momentum { p: [f64; 3], l: [f64; 3] },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodyDesc {
    pub name: String,
    pub geometry: GeometryDesc,
    pub density: f64,
    pub youngs: f64,
    pub poisson: f64,
    #[serde(default)]
    pub pose: PoseDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<VelocityDesc>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LimitsDesc {
    pub min: f64,
    pub max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffness: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JointDesc {
    Ball {
        body_a: String,
        body_b: String,
        point: [f64; 3],
    },
    Hinge {
        body_a: String,
        body_b: String,
        point: [f64; 3],
        axis: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limits: Option<LimitsDesc>,
    },
    Universal {
        body_a: String,
        body_b: String,
        point: [f64; 3],
        axis_a: [f64; 3],
        axis_b: [f64; 3],
    },
    Prismatic {
        body_a: String,
        body_b: String,
        point: [f64; 3],
        axis: [f64; 3],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limits: Option<LimitsDesc>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnchorDesc {
    /// Pin one control point to a world position (3 rows).
    Ball { body: String, point: [f64; 3] },
    /// Pin the full control tetrahedron (12 rows).
    Weld { body: String, point: [f64; 3] },
    /// World-fixed hinge (5 rows).
    Hinge {
        body: String,
        point: [f64; 3],
        axis: [f64; 3],
    },
    /// World-fixed slider (5 rows).
    Prismatic {
        body: String,
        point: [f64; 3],
        axis: [f64; 3],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WrenchDesc {
    pub body: String,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub tau: [f64; 3],
    #[serde(default)]
    pub f: [f64; 3],
    /// World application point of the force; body origin when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverDesc {
    #[default]
    Auto,
    Dense,
    Chain,
    Aba,
    Loop,
    Gs,
}

impl SolverDesc {
    pub fn to_choice(self) -> SolverChoice {
        match self {
            SolverDesc::Auto => SolverChoice::Auto,
            SolverDesc::Dense => SolverChoice::DenseDual,
            SolverDesc::Chain => SolverChoice::Chain,
            SolverDesc::Aba => SolverChoice::Tree,
            SolverDesc::Loop => SolverChoice::Loop,
            SolverDesc::Gs => SolverChoice::GaussSeidel,
        }
    }
}

fn default_newton_iters() -> usize {
    1
}
fn default_use_polar() -> bool {
    true
}
fn default_gs_tol() -> f64 {
    1e-6
}
fn default_gs_max_sweeps() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegratorDesc {
    pub h: f64,
    #[serde(default = "default_newton_iters")]
    pub newton_iters: usize,
    #[serde(default)]
    pub solver: SolverDesc,
    #[serde(default = "default_use_polar")]
    pub use_polar: bool,
    #[serde(default = "default_gs_tol")]
    pub gs_tol: f64,
    #[serde(default = "default_gs_max_sweeps")]
    pub gs_max_sweeps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneDescription {
    pub schema_version: u32,
    #[serde(default)]
    pub gravity: [f64; 3],
    pub bodies: Vec<BodyDesc>,
    #[serde(default)]
    pub joints: Vec<JointDesc>,
    #[serde(default)]
    pub anchors: Vec<AnchorDesc>,
    #[serde(default)]
    pub schedule: Vec<WrenchDesc>,
    pub integrator: IntegratorDesc,
}

// ---------------------------------------------------------------------------
// errors

#[derive(Debug)]
pub enum SceneError {
    Parse(String),
    Validation(String),
    Body(BodyError),
    Joint(JointError),
    Solver { step: usize, error: SolverError },
}

impl std::fmt::Display for SceneError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SceneError::Parse(msg) => write!(f, "parse error: {msg}"),
            SceneError::Validation(msg) => write!(f, "validation error: {msg}"),
            SceneError::Body(e) => write!(f, "body error: {e}"),
            SceneError::Joint(e) => write!(f, "joint error: {e}"),
            SceneError::Solver { step, error } => {
                write!(f, "solver failure at step {step}: {error}")
            }
        }
    }
}

impl std::error::Error for SceneError {}

impl From<BodyError> for SceneError {
    fn from(e: BodyError) -> Self {
        SceneError::Body(e)
    }
}

impl From<JointError> for SceneError {
    fn from(e: JointError) -> Self {
        SceneError::Joint(e)
    }
}

/// Parse a scene document (schema above).
pub fn load_scene(text: &str) -> Result<SceneDescription, SceneError> {
    let desc: SceneDescription =
        serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
    if desc.schema_version != 1 {
        return Err(SceneError::Parse(format!(
            "unsupported schema_version {}",
            desc.schema_version
        )));
    }
    Ok(desc)
}

// ---------------------------------------------------------------------------
// runtime

struct WrenchWindow {
    body: usize,
    t_start: f64,
    t_end: f64,
    tau: Vec3,
    f: Vec3,
    at: Option<Vec3>,
}

struct Island {
    bodies: Vec<usize>,
    joints: Vec<usize>,
}

/// A built scene ready to step.
pub struct Scene {
    pub names: Vec<String>,
    pub models: Vec<BodyModel>,
    pub states: Vec<AffineState>,
    pub joints: Vec<JointSpec>,
    pub gravity: Vec3,
    schedule: Vec<WrenchWindow>,
    pub config: IntegratorDesc,
    islands: Vec<Island>,
    pub time: f64,
    pub step_index: usize,
    /// Record wall-clock per step (off keeps trajectories byte-identical).
    pub collect_timing: bool,
}

fn vec3(v: &[f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

fn mat3_row_major(m: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    )
}

fn build_model(desc: &BodyDesc, h: f64) -> Result<BodyModel, SceneError> {
    let material = Material {
        density: desc.density,
        youngs: desc.youngs,
        poisson: desc.poisson,
    };
    let model = match &desc.geometry {
        GeometryDesc::Box { size } => {
            let s = vec3(size);
            if s.iter().any(|&x| x <= 0.0) {
                return Err(SceneError::Validation(format!(
                    "body '{}': box size must be positive",
                    desc.name
                )));
            }
            BodyModel::from_moments(box_moments(&s), material, h, None)?
        }
        GeometryDesc::Cylinder { radius, height } => {
            if *radius <= 0.0 || *height <= 0.0 {
                return Err(SceneError::Validation(format!(
                    "body '{}': cylinder dimensions must be positive",
                    desc.name
                )));
            }
            BodyModel::from_moments(cylinder_moments(*radius, *height), material, h, None)?
        }
        GeometryDesc::Capsule { radius, height } => {
            if *radius <= 0.0 || *height <= 0.0 {
                return Err(SceneError::Validation(format!(
                    "body '{}': capsule dimensions must be positive",
                    desc.name
                )));
            }
            BodyModel::from_moments(capsule_moments(*radius, *height), material, h, None)?
        }
        GeometryDesc::Mesh { vertices, tets } => {
            let mesh = TetMesh {
                vertices: vertices.iter().map(vec3).collect(),
                tets: tets.clone(),
            };
            BodyModel::precompute(&mesh, material, h, None)?
        }
    };
    Ok(model)
}

fn unit_checked(v: &Vec3, what: &str) -> Result<Vec3, SceneError> {
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(SceneError::Validation(format!(
            "{what}: axis {:?} is not unit length",
            [v.x, v.y, v.z]
        )));
    }
    Ok(*v)
}

impl Scene {
    /// Build the runtime scene: models for the configured `h`, initial
    /// states, per-joint control maps, islands.
    pub fn build(desc: &SceneDescription) -> Result<Scene, SceneError> {
        if desc.integrator.h <= 0.0 {
            return Err(SceneError::Validation("integrator.h must be positive".into()));
        }
        if desc.integrator.newton_iters == 0 {
            return Err(SceneError::Validation(
                "integrator.newton_iters must be at least 1".into(),
            ));
        }
        let h = desc.integrator.h;
        let mut names = Vec::new();
        let mut models = Vec::new();
        let mut states = Vec::new();
        for body in &desc.bodies {
            if names.contains(&body.name) {
                return Err(SceneError::Validation(format!(
                    "duplicate body name '{}'",
                    body.name
                )));
            }
            let model = build_model(body, h)?;
            let a = body
                .pose
                .a
                .map(|m| mat3_row_major(&m))
                .unwrap_or_else(Mat3::identity);
            if a.determinant() <= 0.0 {
                return Err(SceneError::Validation(format!(
                    "body '{}': pose must have positive determinant",
                    body.name
                )));
            }
            let mut state = AffineState::from_pose(&a, &vec3(&body.pose.t));
            match &body.velocity {
                Some(VelocityDesc::Twist { omega, v }) => body::set_twist(
                    &mut state,
                    &crate::body::SpatialTwist {
                        omega: vec3(omega),
                        v: vec3(v),
                    },
                ),
                Some(VelocityDesc::Momentum { p, l }) => {
                    body::set_momentum(&mut state, &model, &vec3(p), &vec3(l))
                }
                None => {}
            }
            names.push(body.name.clone());
            models.push(model);
            states.push(state);
        }
        let index_of = |name: &str, what: &str| -> Result<usize, SceneError> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| SceneError::Validation(format!("{what}: unknown body '{name}'")))
        };

        let mut joints = Vec::new();
        for (i, joint) in desc.joints.iter().enumerate() {
            let what = format!("joint {i}");
            let spec = match joint {
                JointDesc::Ball {
                    body_a,
                    body_b,
                    point,
                } => {
                    let a = index_of(body_a, &what)?;
                    let b = index_of(body_b, &what)?;
                    ball_joint(a, &states[a], Some((b, &states[b])), &vec3(point))?
                }
                JointDesc::Hinge {
                    body_a,
                    body_b,
                    point,
                    axis,
                    limits,
                } => {
                    let a = index_of(body_a, &what)?;
                    let b = index_of(body_b, &what)?;
                    let axis = unit_checked(&vec3(axis), &what)?;
                    hinge_joint(
                        a,
                        &states[a],
                        Some((b, &states[b])),
                        &vec3(point),
                        &axis,
                        resolve_limits(limits, &models[a], &models[b]),
                    )?
                }
                JointDesc::Universal {
                    body_a,
                    body_b,
                    point,
                    axis_a,
                    axis_b,
                } => {
                    let a = index_of(body_a, &what)?;
                    let b = index_of(body_b, &what)?;
                    universal_joint(
                        a,
                        &states[a],
                        Some((b, &states[b])),
                        &vec3(point),
                        &unit_checked(&vec3(axis_a), &what)?,
                        &unit_checked(&vec3(axis_b), &what)?,
                    )?
                }
                JointDesc::Prismatic {
                    body_a,
                    body_b,
                    point,
                    axis,
                    limits,
                } => {
                    let a = index_of(body_a, &what)?;
                    let b = index_of(body_b, &what)?;
                    let axis = unit_checked(&vec3(axis), &what)?;
                    prismatic_joint(
                        a,
                        &states[a],
                        Some((b, &states[b])),
                        &vec3(point),
                        &axis,
                        resolve_limits(limits, &models[a], &models[b]),
                    )?
                }
            };
            joints.push(spec);
        }
        for (i, anchor) in desc.anchors.iter().enumerate() {
            let what = format!("anchor {i}");
            let spec = match anchor {
                AnchorDesc::Ball { body, point } => {
                    let a = index_of(body, &what)?;
                    ball_joint(a, &states[a], None, &vec3(point))?
                }
                AnchorDesc::Weld { body, point } => {
                    let a = index_of(body, &what)?;
                    weld_anchor(a, &states[a], &vec3(point))?
                }
                AnchorDesc::Hinge { body, point, axis } => {
                    let a = index_of(body, &what)?;
                    let axis = unit_checked(&vec3(axis), &what)?;
                    hinge_joint(a, &states[a], None, &vec3(point), &axis, None)?
                }
                AnchorDesc::Prismatic { body, point, axis } => {
                    let a = index_of(body, &what)?;
                    let axis = unit_checked(&vec3(axis), &what)?;
                    prismatic_joint(a, &states[a], None, &vec3(point), &axis, None)?
                }
            };
            joints.push(spec);
        }

        let mut schedule = Vec::new();
        for (i, w) in desc.schedule.iter().enumerate() {
            let body = index_of(&w.body, &format!("schedule entry {i}"))?;
            schedule.push(WrenchWindow {
                body,
                t_start: w.t_start,
                t_end: w.t_end,
                tau: vec3(&w.tau),
                f: vec3(&w.f),
                at: w.at.as_ref().map(vec3),
            });
        }

        let islands = compute_islands(names.len(), &joints);
        Ok(Scene {
            names,
            models,
            states,
            joints,
            gravity: vec3(&desc.gravity),
            schedule,
            config: desc.integrator.clone(),
            islands,
            time: 0.0,
            step_index: 0,
            collect_timing: false,
        })
    }

    /// Re-factorize every body for a new step size.
    pub fn set_h(&mut self, h: f64) -> Result<(), SceneError> {
        for model in &mut self.models {
            model.refactor(h)?;
        }
        self.config.h = h;
        Ok(())
    }

    fn external_wrenches(&self, extra: &[(usize, SpatialWrench)]) -> Vec<Vec12> {
        let mut f_ext = vec![Vec12::zeros(); self.models.len()];
        for (j, (model, state)) in self.models.iter().zip(&self.states).enumerate() {
            // gravity as a wrench at the center of mass
            let m = model.total_mass();
            let com_offset = state.a() * model.moments.centroid();
            let w = SpatialWrench {
                tau: com_offset.cross(&(self.gravity * m)),
                f: self.gravity * m,
            };
            f_ext[j] += body::wrench_to_affine(state, &w);
        }
        for w in &self.schedule {
            if self.time >= w.t_start && self.time < w.t_end {
                let state = &self.states[w.body];
                let wrench = match &w.at {
                    Some(p) => SpatialWrench {
                        tau: w.tau + (p - state.t()).cross(&w.f),
                        f: w.f,
                    },
                    None => SpatialWrench { tau: w.tau, f: w.f },
                };
                f_ext[w.body] += body::wrench_to_affine(state, &wrench);
            }
        }
        for (body_index, wrench) in extra {
            f_ext[*body_index] += body::wrench_to_affine(&self.states[*body_index], wrench);
        }
        f_ext
    }

    /// Clamp limited joints to their nearest valid coordinate, remove the
    /// outward relative velocity (an inelastic stop), and emit the penalty
    /// wrenches for this step. The penalty magnitude is capped at the
    /// explicit-integration stability bound of the target body so the stop
    /// resists without injecting energy.
    fn enforce_limits(&mut self) -> Result<Vec<(usize, SpatialWrench)>, SceneError> {
        let mut extra = Vec::new();
        let h = self.config.h;
        for k in 0..self.joints.len() {
            if self.joints[k].limits.is_none() {
                continue;
            }
            let spec = &self.joints[k];
            let state_b = spec.body_b.map(|b| self.states[b]);
            let outcome = apply_joint_limits(spec, &self.states[spec.body_a], state_b.as_ref())?;
            if !outcome.clamped {
                continue;
            }
            let axis_world = match &spec.frame {
                JointFrame::Fixed { r_joint } => r_joint.transpose() * Vec3::y(),
                JointFrame::FollowBodyA { .. } => {
                    polar_rotation(&self.states[spec.body_a].a())?
                        * spec.axis_local_a.expect("limited joints carry an axis")
                }
            };
            let delta = outcome.theta_hat - outcome.theta;
            let outward = -delta.signum(); // direction that violates further
            let point = spec
                .map_a
                .world_cps(&self.states[spec.body_a])
                .column(0)
                .into_owned();
            let target = if let Some(b) = spec.body_b { b } else { spec.body_a };
            let sign = if spec.body_b.is_some() { 1.0 } else { -1.0 };
            match spec.kind {
                JointKind::Hinge => {
                    // position: rotate the offending body back onto the bound
                    let rot = rotation_about_axis(&axis_world, sign * delta);
                    let s = &mut self.states[target];
                    let a = rot * s.a();
                    let t = rot * (s.t() - point) + point;
                    s.q = crate::math::q_from_parts(&a, &t);
                    // velocity: remove the outward relative rate about the axis
                    let omega_other = if spec.body_b.is_some() {
                        body::twist_map(&self.states[spec.body_a]).omega
                    } else {
                        Vec3::zeros()
                    };
                    let tw_t = body::twist_map(&self.states[target]);
                    let theta_dot = sign * (tw_t.omega - omega_other).dot(&axis_world);
                    if theta_dot * outward > 0.0 {
                        let s = &mut self.states[target];
                        let mut tw = body::twist_map(s);
                        let removed = axis_world * (sign * theta_dot);
                        tw.omega -= removed;
                        // keep the instantaneous rotation centered on the joint
                        tw.v -= removed.cross(&(s.t() - point));
                        body::set_twist(s, &tw);
                    }
                    // penalty torque, capped for explicit stability
                    let model = &self.models[target];
                    let d = self.states[target].t() - point;
                    let i_rot = model.spatial_inertia(&self.states[target].a())
                        .fixed_view::<3, 3>(0, 0)
                        .into_owned()
                        + Mat3::identity() * (model.total_mass() * d.norm_squared());
                    let i_axis = axis_world.dot(&(i_rot * axis_world)).abs().max(1e-12);
                    let cap = 0.25 * i_axis * delta.abs() / (h * h);
                    let magnitude = outcome.penalty.abs().min(cap);
                    let tau = axis_world * (-outcome.penalty.signum() * magnitude);
                    extra.push((
                        target,
                        SpatialWrench {
                            tau: tau * sign,
                            f: Vec3::zeros(),
                        },
                    ));
                    if spec.body_b.is_some() {
                        extra.push((
                            spec.body_a,
                            SpatialWrench {
                                tau: -tau,
                                f: Vec3::zeros(),
                            },
                        ));
                    }
                }
                JointKind::Prismatic => {
                    let s = &mut self.states[target];
                    let t = s.t() + axis_world * (sign * delta);
                    s.q = crate::math::q_from_parts(&s.a(), &t);
                    let mut tw = body::twist_map(s);
                    let v_rel = tw.v.dot(&axis_world) * sign;
                    if v_rel * outward > 0.0 {
                        tw.v -= axis_world * (v_rel * sign);
                        body::set_twist(s, &tw);
                    }
                    let m = self.models[target].total_mass();
                    let cap = 0.25 * m * delta.abs() / (h * h);
                    let magnitude = outcome.penalty.abs().min(cap);
                    let f = axis_world * (-outcome.penalty.signum() * magnitude);
                    extra.push((
                        target,
                        SpatialWrench {
                            tau: Vec3::zeros(),
                            f: f * sign,
                        },
                    ));
                    if spec.body_b.is_some() {
                        extra.push((
                            spec.body_a,
                            SpatialWrench {
                                tau: Vec3::zeros(),
                                f: -f,
                            },
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(extra)
    }

    /// Advance one step; returns the recorded row.
    pub fn step(&mut self) -> Result<StepRow, SceneError> {
        let started = std::time::Instant::now();
        let h = self.config.h;
        let limit_wrenches = self.enforce_limits()?;
        let f_ext = self.external_wrenches(&limit_wrenches);

        // q̂ = qⁿ + h q̇ⁿ + h² M⁻¹ f_ext
        let q_prev: Vec<Vec12> = self.states.iter().map(|s| s.q).collect();
        let q_hat: Vec<Vec12> = self
            .states
            .iter()
            .zip(&self.models)
            .zip(&f_ext)
            .map(|((s, m), f)| s.q + s.qdot * h + m.solve_mass(f) * (h * h))
            .collect();

        let opts = SolveOptions {
            choice: self.config.solver.to_choice(),
            feedback: true,
            gs_tol: self.config.gs_tol,
            gs_max_sweeps: self.config.gs_max_sweeps,
            max_breakers: 4,
        };

        for _ in 0..self.config.newton_iters {
            // per-body right-hand side at the current iterate
            let mut f_a = Vec::with_capacity(self.models.len());
            for ((model, state), qh) in self.models.iter().zip(&self.states).zip(&q_hat) {
                let inertia = model.mass * (qh - state.q) / (h * h);
                let elastic = elastic_gradient(model, state)?;
                f_a.push(inertia - elastic);
            }
            for island in &self.islands {
                if island.joints.is_empty() {
                    for &b in &island.bodies {
                        let dq = newton_step_single(
                            &self.models[b],
                            &self.states[b],
                            &f_a[b],
                            h,
                            self.config.use_polar,
                        )?;
                        self.states[b].q += dq;
                    }
                    continue;
                }
                let mut local_of = vec![usize::MAX; self.models.len()];
                for (local, &b) in island.bodies.iter().enumerate() {
                    local_of[b] = local;
                }
                let bodies: Vec<BodyCtx> = island
                    .bodies
                    .iter()
                    .map(|&b| {
                        Ok(BodyCtx {
                            model: &self.models[b],
                            rotation: polar_rotation(&self.states[b].a())?,
                            f_a: f_a[b],
                        })
                    })
                    .collect::<Result<_, BodyError>>()?;
                let joint_ctxs: Vec<JointCtx> = island
                    .joints
                    .iter()
                    .map(|&k| {
                        let spec = &self.joints[k];
                        let state_b = spec.body_b.map(|b| self.states[b]);
                        let block =
                            eval_gradient(spec, &self.states[spec.body_a], state_b.as_ref())?;
                        Ok(JointCtx {
                            body_a: local_of[spec.body_a],
                            body_b: spec.body_b.map(|b| local_of[b]),
                            rank: spec.rank,
                            grad_a: block.grad_a,
                            grad_b: block.grad_b,
                            residual: block.residual,
                        })
                    })
                    .collect::<Result<_, JointError>>()?;
                let solution = solve_island(&bodies, &joint_ctxs, &opts).map_err(|error| {
                    SceneError::Solver {
                        step: self.step_index,
                        error,
                    }
                })?;
                for (local, &b) in island.bodies.iter().enumerate() {
                    self.states[b].q += solution.dq[local];
                }
            }
        }

        for (state, prev) in self.states.iter_mut().zip(&q_prev) {
            state.qdot = (state.q - prev) / h;
        }
        self.time += h;
        self.step_index += 1;

        let elapsed_us = if self.collect_timing {
            started.elapsed().as_secs_f64() * 1e6
        } else {
            0.0
        };
        Ok(self.record_row(elapsed_us))
    }

    fn record_row(&self, us_per_step: f64) -> StepRow {
        let diagnostics = self.momentum_energy();
        StepRow {
            time: self.time,
            states: self.states.clone(),
            joint_residuals: self.joint_residual_norms(),
            linear_momentum: diagnostics.linear_momentum,
            angular_momentum: diagnostics.angular_momentum,
            energy: diagnostics.energy,
            us_per_step,
        }
    }

    /// Per-joint residual ∞-norms at the current states.
    pub fn joint_residual_norms(&self) -> Vec<f64> {
        self.joints
            .iter()
            .map(|spec| {
                let state_b = spec.body_b.map(|b| self.states[b]);
                eval_constraint(spec, &self.states[spec.body_a], state_b.as_ref())
                    .map(|r| r.amax())
                    .unwrap_or(f64::NAN)
            })
            .collect()
    }

    /// Total linear momentum, angular momentum about the world origin, and
    /// kinetic + elastic energy.
    pub fn momentum_energy(&self) -> Diagnostics {
        let mut p = Vec3::zeros();
        let mut l = Vec3::zeros();
        let mut energy = 0.0;
        for (model, state) in self.models.iter().zip(&self.states) {
            p += body::linear_momentum(model, state);
            l += body::angular_momentum(model, state);
            energy += body::kinetic_energy(model, state)
                + elastic_energy(model, state).unwrap_or(f64::NAN);
        }
        Diagnostics {
            linear_momentum: p,
            angular_momentum: l,
            energy,
        }
    }

    /// Run `n_steps`, recording the initial state plus every step.
    pub fn run(&mut self, n_steps: usize) -> Result<TrajectoryRecord, SceneError> {
        let mut rows = Vec::with_capacity(n_steps + 1);
        rows.push(self.record_row(0.0));
        for _ in 0..n_steps {
            rows.push(self.step()?);
        }
        Ok(TrajectoryRecord { rows })
    }

    /// Topology classification string plus joint count per island, and the
    /// maximum constraint residual at the current states.
    pub fn validate_report(&self) -> Result<ValidationReport, SceneError> {
        let mut islands = Vec::new();
        for island in &self.islands {
            if island.joints.is_empty() {
                islands.push(("Unconstrained".to_string(), 0));
                continue;
            }
            let mut local_of = vec![usize::MAX; self.models.len()];
            for (local, &b) in island.bodies.iter().enumerate() {
                local_of[b] = local;
            }
            let joint_ctxs: Vec<JointCtx> = island
                .joints
                .iter()
                .map(|&k| {
                    let spec = &self.joints[k];
                    let state_b = spec.body_b.map(|b| self.states[b]);
                    let block = eval_gradient(spec, &self.states[spec.body_a], state_b.as_ref())?;
                    Ok(JointCtx {
                        body_a: local_of[spec.body_a],
                        body_b: spec.body_b.map(|b| local_of[b]),
                        rank: spec.rank,
                        grad_a: block.grad_a,
                        grad_b: block.grad_b,
                        residual: block.residual,
                    })
                })
                .collect::<Result<_, JointError>>()?;
            let topo =
                crate::solvers::classify_topology(island.bodies.len(), &joint_ctxs, 4)
                    .map_err(|error| SceneError::Solver { step: 0, error })?;
            islands.push((topo.to_string(), island.joints.len()));
        }
        let max_residual = self
            .joint_residual_norms()
            .into_iter()
            .fold(0.0_f64, f64::max);
        Ok(ValidationReport {
            islands,
            max_residual,
        })
    }
}

fn resolve_limits(
    limits: &Option<LimitsDesc>,
    model_a: &BodyModel,
    model_b: &BodyModel,
) -> Option<JointLimits> {
    limits.as_ref().map(|l| JointLimits {
        min: l.min,
        max: l.max,
        stiffness: l.stiffness.unwrap_or_else(|| {
            // default 10 × an E·V/L² force scale of the stiffer body
            let scale = |m: &BodyModel| m.material.youngs * m.volume / m.volume.cbrt().powi(2);
            10.0 * scale(model_a).max(scale(model_b))
        }),
    })
}

fn compute_islands(n_bodies: usize, joints: &[JointSpec]) -> Vec<Island> {
    let mut parent: Vec<usize> = (0..n_bodies).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in joints {
        if let Some(b) = j.body_b {
            let (ra, rb) = (find(&mut parent, j.body_a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut islands: std::collections::BTreeMap<usize, Island> = std::collections::BTreeMap::new();
    for b in 0..n_bodies {
        let root = find(&mut parent, b);
        islands
            .entry(root)
            .or_insert_with(|| Island {
                bodies: Vec::new(),
                joints: Vec::new(),
            })
            .bodies
            .push(b);
    }
    for (k, j) in joints.iter().enumerate() {
        let root = find(&mut parent, j.body_a);
        islands.get_mut(&root).expect("body islands cover joints").joints.push(k);
    }
    islands.into_values().collect()
}

/// Global diagnostics of one recorded step.
#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    pub linear_momentum: Vec3,
    pub angular_momentum: Vec3,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// (topology, joint count) per island.
    pub islands: Vec<(String, usize)>,
    pub max_residual: f64,
}

/// One recorded step.
#[derive(Debug, Clone)]
pub struct StepRow {
    pub time: f64,
    pub states: Vec<AffineState>,
    pub joint_residuals: Vec<f64>,
    pub linear_momentum: Vec3,
    pub angular_momentum: Vec3,
    pub energy: f64,
    pub us_per_step: f64,
}

/// Recorded trajectory: initial state plus one row per step.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub rows: Vec<StepRow>,
}

impl TrajectoryRecord {
    /// CSV serialization. Columns: `time`, per body `A00..A22,tx,ty,tz`
    /// (row-major `A`), per joint `joint<k>_residual`, then
    /// `px,py,pz,Lx,Ly,Lz,energy,us_per_step`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let n_bodies = self.rows.first().map(|r| r.states.len()).unwrap_or(0);
        let n_joints = self
            .rows
            .first()
            .map(|r| r.joint_residuals.len())
            .unwrap_or(0);
        out.push_str("time");
        for b in 0..n_bodies {
            for i in 0..3 {
                for j in 0..3 {
                    out.push_str(&format!(",body{b}_A{i}{j}"));
                }
            }
            out.push_str(&format!(",body{b}_tx,body{b}_ty,body{b}_tz"));
        }
        for k in 0..n_joints {
            out.push_str(&format!(",joint{k}_residual"));
        }
        out.push_str(",px,py,pz,Lx,Ly,Lz,energy,us_per_step\n");
        for row in &self.rows {
            out.push_str(&format!("{}", row.time));
            for state in &row.states {
                let a = state.a();
                for i in 0..3 {
                    for j in 0..3 {
                        out.push_str(&format!(",{}", a[(i, j)]));
                    }
                }
                let t = state.t();
                out.push_str(&format!(",{},{},{}", t.x, t.y, t.z));
            }
            for r in &row.joint_residuals {
                out.push_str(&format!(",{r}"));
            }
            out.push_str(&format!(
                ",{},{},{},{},{},{},{},{}\n",
                row.linear_momentum.x,
                row.linear_momentum.y,
                row.linear_momentum.z,
                row.angular_momentum.x,
                row.angular_momentum.y,
                row.angular_momentum.z,
                row.energy,
                row.us_per_step,
            ));
        }
        out
    }

    pub fn final_states(&self) -> &[AffineState] {
        &self.rows.last().expect("record has the initial row").states
    }

    /// Maximum joint residual across all recorded steps.
    pub fn max_joint_residual(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.joint_residuals.iter().copied())
            .fold(0.0, f64::max)
    }
}

// re-export used by fixture authoring
pub use joints::JointSpec as BuiltJoint;
