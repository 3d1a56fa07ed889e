//! Deterministic instance generators for benchmarks and solver tests.
//!
//! A [`KktInstance`] is a frozen snapshot of one Newton step: body models,
//! current states, per-body right-hand sides, and built joints. The same
//! snapshot feeds both the specialized solvers and the dense KKT reference,
//! which is what the oracle-equivalence checks compare.

use crate::body::{polar_rotation, AffineState, BodyModel, Material};
use crate::joints::{
    ball_joint, eval_gradient, hinge_joint, prismatic_joint, universal_joint, JointSpec,
};
use crate::math::{rotation_from_quat, Mat3, Vec12, Vec3};
use crate::mesh::{box_mesh, box_moments, TetMesh};
use crate::oracles::elliptic::PendulumParams;
use crate::scene::{
    AnchorDesc, BodyDesc, GeometryDesc, IntegratorDesc, JointDesc, PoseDesc, SceneDescription,
    SolverDesc, VelocityDesc,
};
use crate::solvers::{BodyCtx, JointCtx};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One frozen multibody Newton step.
pub struct KktInstance {
    pub models: Vec<BodyModel>,
    pub states: Vec<AffineState>,
    pub f_a: Vec<Vec12>,
    pub joints: Vec<JointSpec>,
    pub h: f64,
}

impl KktInstance {
    /// Per-body solver contexts (rotations from the current states).
    pub fn body_ctxs(&self) -> Vec<BodyCtx<'_>> {
        self.models
            .iter()
            .zip(&self.states)
            .zip(&self.f_a)
            .map(|((model, state), f)| BodyCtx {
                model,
                rotation: polar_rotation(&state.a()).expect("states stay non-degenerate"),
                f_a: *f,
            })
            .collect()
    }

    /// Per-joint contexts with gradients at the current states.
    pub fn joint_ctxs(&self) -> Vec<JointCtx> {
        self.joints
            .iter()
            .map(|spec| {
                let state_b = spec.body_b.map(|b| &self.states[b]);
                let block = eval_gradient(spec, &self.states[spec.body_a], state_b)
                    .expect("instance joints evaluate");
                JointCtx {
                    body_a: spec.body_a,
                    body_b: spec.body_b,
                    rank: spec.rank,
                    grad_a: block.grad_a,
                    grad_b: block.grad_b,
                    residual: block.residual,
                }
            })
            .collect()
    }
}

fn rand_rotation(rng: &mut ChaCha8Rng) -> crate::math::Mat3 {
    rotation_from_quat(
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
    )
}

fn small_rotation(rng: &mut ChaCha8Rng, angle: f64) -> crate::math::Mat3 {
    let axis = Vec3::new(
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
    )
    .normalize();
    crate::math::rotation_about_axis(&axis, angle * (rng.gen::<f64>() - 0.5))
}

fn link_model(rng: &mut ChaCha8Rng, h: f64) -> BodyModel {
    let size = Vec3::new(
        0.08 + 0.08 * rng.gen::<f64>(),
        0.08 + 0.08 * rng.gen::<f64>(),
        0.08 + 0.08 * rng.gen::<f64>(),
    );
    BodyModel::from_moments(
        box_moments(&size),
        Material {
            density: 800.0 + 400.0 * rng.gen::<f64>(),
            youngs: 1e9,
            poisson: 0.3,
        },
        h,
        None,
    )
    .expect("box moments are SPD")
}

/// Perturb states off the build pose (near-rigid) and draw step-scaled
/// right-hand sides; builds the snapshot after joints were authored at the
/// unperturbed poses.
fn finish_instance(
    rng: &mut ChaCha8Rng,
    models: Vec<BodyModel>,
    mut states: Vec<AffineState>,
    joints: Vec<JointSpec>,
    h: f64,
) -> KktInstance {
    for state in &mut states {
        let r = small_rotation(rng, 0.12);
        let a = r * state.a();
        let t = state.t()
            + Vec3::new(
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
                rng.gen::<f64>() - 0.5,
            ) * 0.01;
        *state = AffineState::from_pose(&a, &t);
    }
    let f_a = models
        .iter()
        .map(|m| {
            let qdot = Vec12::from_fn(|_, _| 0.4 * (rng.gen::<f64>() - 0.5));
            m.mass * qdot / h
        })
        .collect();
    KktInstance {
        models,
        states,
        f_a,
        joints,
        h,
    }
}

/// Chain of `k_joints + 1` links along +x connected by a deterministic mix
/// of ball / hinge / universal / prismatic joints.
pub fn chain_instance(seed: u64, k_joints: usize, h: f64) -> KktInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k_joints + 1;
    let spacing = 0.25;
    let models: Vec<BodyModel> = (0..n).map(|_| link_model(&mut rng, h)).collect();
    let states: Vec<AffineState> = (0..n)
        .map(|j| AffineState::from_pose(
            &crate::math::Mat3::identity(),
            &Vec3::new(spacing * j as f64, 0.0, 0.0),
        ))
        .collect();
    let mut joints = Vec::with_capacity(k_joints);
    for k in 0..k_joints {
        let point = Vec3::new(spacing * (k as f64 + 0.5), 0.0, 0.0);
        let axis = Vec3::new(0.3 * (rng.gen::<f64>() - 0.5), 1.0, 0.3 * (rng.gen::<f64>() - 0.5))
            .normalize();
        let spec = match k % 4 {
            0 => ball_joint(k, &states[k], Some((k + 1, &states[k + 1])), &point),
            1 => hinge_joint(k, &states[k], Some((k + 1, &states[k + 1])), &point, &axis, None),
            2 => universal_joint(
                k,
                &states[k],
                Some((k + 1, &states[k + 1])),
                &point,
                &axis,
                &crate::math::orthogonal_unit(&axis),
            ),
            _ => prismatic_joint(k, &states[k], Some((k + 1, &states[k + 1])), &point, &axis, None),
        }
        .expect("chain joints build");
        joints.push(spec);
    }
    finish_instance(&mut rng, models, states, joints, h)
}

/// Random tree of ball joints: each body `j ≥ 1` attaches to a random earlier
/// parent at the midpoint between their centers.
pub fn tree_instance(seed: u64, n_bodies: usize, h: f64) -> KktInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<BodyModel> = (0..n_bodies).map(|_| link_model(&mut rng, h)).collect();
    let mut positions = vec![Vec3::zeros()];
    let mut parents = vec![usize::MAX];
    for j in 1..n_bodies {
        let parent = rng.gen_range(0..j);
        parents.push(parent);
        let offset = Vec3::new(
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        )
        .normalize()
            * 0.3;
        positions.push(positions[parent] + offset);
    }
    let states: Vec<AffineState> = positions
        .iter()
        .map(|p| AffineState::from_pose(&rand_rotation(&mut rng), p))
        .collect();
    let mut joints = Vec::with_capacity(n_bodies.saturating_sub(1));
    for j in 1..n_bodies {
        let parent = parents[j];
        let point = (positions[parent] + positions[j]) / 2.0;
        joints.push(
            ball_joint(parent, &states[parent], Some((j, &states[j])), &point)
                .expect("tree joints build"),
        );
    }
    finish_instance(&mut rng, models, states, joints, h)
}

/// Ring of `n` links closed by ball joints (a single loop).
pub fn ring_instance(seed: u64, n: usize, h: f64) -> KktInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let models: Vec<BodyModel> = (0..n).map(|_| link_model(&mut rng, h)).collect();
    let radius = 0.5;
    let states: Vec<AffineState> = (0..n)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            AffineState::from_pose(
                &crate::math::Mat3::identity(),
                &Vec3::new(radius * angle.cos(), radius * angle.sin(), 0.0),
            )
        })
        .collect();
    let mut joints = Vec::with_capacity(n);
    for j in 0..n {
        let next = (j + 1) % n;
        let point = (states[j].t() + states[next].t()) / 2.0;
        joints
            .push(ball_joint(j, &states[j], Some((next, &states[next])), &point).expect("ring"));
    }
    finish_instance(&mut rng, models, states, joints, h)
}

/// `rows × cols` grid of bodies joined to their right and lower neighbors by
/// ball joints (a dense joint graph).
pub fn net_instance(seed: u64, rows: usize, cols: usize, h: f64) -> KktInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows * cols;
    let spacing = 0.3;
    let models: Vec<BodyModel> = (0..n).map(|_| link_model(&mut rng, h)).collect();
    let at = |r: usize, c: usize| r * cols + c;
    let states: Vec<AffineState> = (0..n)
        .map(|j| {
            let (r, c) = (j / cols, j % cols);
            AffineState::from_pose(
                &crate::math::Mat3::identity(),
                &Vec3::new(spacing * c as f64, -spacing * r as f64, 0.0),
            )
        })
        .collect();
    let mut joints = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let j = at(r, c);
            if c + 1 < cols {
                let other = at(r, c + 1);
                let point = (states[j].t() + states[other].t()) / 2.0;
                joints.push(
                    ball_joint(j, &states[j], Some((other, &states[other])), &point)
                        .expect("net joint"),
                );
            }
            if r + 1 < rows {
                let other = at(r + 1, c);
                let point = (states[j].t() + states[other].t()) / 2.0;
                joints.push(
                    ball_joint(j, &states[j], Some((other, &states[other])), &point)
                        .expect("net joint"),
                );
            }
        }
    }
    finish_instance(&mut rng, models, states, joints, h)
}

// ---------------------------------------------------------------------------
// benchmark scenes

fn default_integrator(h: f64) -> IntegratorDesc {
    IntegratorDesc {
        h,
        newton_iters: 1,
        solver: SolverDesc::Auto,
        use_polar: true,
        gs_tol: 1e-6,
        gs_max_sweeps: 200,
    }
}

fn row_major(a: &Mat3) -> [[f64; 3]; 3] {
    [
        [a[(0, 0)], a[(0, 1)], a[(0, 2)]],
        [a[(1, 0)], a[(1, 1)], a[(1, 2)]],
        [a[(2, 0)], a[(2, 1)], a[(2, 2)]],
    ]
}

/// Free 0.1 m cube (ρ = 10³, E = 10⁹, ν = 0.3) with p₀ = [100,0,0] kg·m/s and
/// L₀ = [0,100,0] kg·m²/s, no gravity.
pub fn cube_momentum_scene(h: f64) -> SceneDescription {
    SceneDescription {
        schema_version: 1,
        gravity: [0.0, 0.0, 0.0],
        bodies: vec![BodyDesc {
            name: "cube".into(),
            geometry: GeometryDesc::Box {
                size: [0.1, 0.1, 0.1],
            },
            density: 1e3,
            youngs: 1e9,
            poisson: 0.3,
            pose: PoseDesc::default(),
            velocity: Some(VelocityDesc::Momentum {
                p: [100.0, 0.0, 0.0],
                l: [0.0, 100.0, 0.0],
            }),
        }],
        joints: Vec::new(),
        anchors: Vec::new(),
        schedule: Vec::new(),
        integrator: default_integrator(h),
    }
}

/// Physical pendulum: stiff rod hinged to the world about z through the
/// origin, released horizontal. Returns the scene plus the analytic
/// parameters of the elliptic reference.
pub fn pendulum_scene(h: f64) -> (SceneDescription, PendulumParams) {
    let length = 0.4;
    let width = 0.04;
    let density = 1e3;
    let gravity = 9.81;
    let desc = SceneDescription {
        schema_version: 1,
        gravity: [0.0, -gravity, 0.0],
        bodies: vec![BodyDesc {
            name: "rod".into(),
            geometry: GeometryDesc::Box {
                size: [length, width, width],
            },
            density,
            youngs: 1e9,
            poisson: 0.3,
            pose: PoseDesc {
                a: None,
                t: [length / 2.0, 0.0, 0.0],
            },
            velocity: None,
        }],
        joints: Vec::new(),
        anchors: vec![
            AnchorDesc::Ball {
                body: "rod".into(),
                point: [0.0, 0.0, 0.0],
            },
            // second point of the rotation axis, one unit along z: together
            // with the ball anchor this leaves exactly the swing about z
            AnchorDesc::Hinge {
                body: "rod".into(),
                point: [0.0, 0.0, 1.0],
                axis: [0.0, 0.0, 1.0],
            },
        ],
        schedule: Vec::new(),
        integrator: default_integrator(h),
    };
    let mass = density * length * width * width;
    let d = length / 2.0;
    let i_com_z = mass * (length * length + width * width) / 12.0;
    let i_pivot = i_com_z + mass * d * d;
    (
        desc,
        PendulumParams::horizontal_release(mass, gravity, d, i_pivot),
    )
}

/// Swing angle of the pendulum fixture below the horizontal, measured from
/// the rod's center-of-mass direction.
pub fn pendulum_angle(state: &AffineState) -> f64 {
    let com = state.t();
    let phi = com.x.atan2(-com.y); // angle from the downward vertical
    std::f64::consts::FRAC_PI_2 - phi
}

/// T-handle reference data shared with the RK4 oracle.
pub struct THandleInfo {
    /// Body-frame inertia about the center of mass (diagonal by symmetry).
    pub inertia_com: Mat3,
    pub mass: f64,
    /// Initial body-frame angular velocity: 3 rad/s about the intermediate
    /// principal axis plus a 10⁻³ transverse perturbation.
    pub omega0: Vec3,
    /// Index of the intermediate principal axis (0 = x, 1 = y, 2 = z).
    pub intermediate_axis: usize,
    /// Center of mass in mesh coordinates (the body origin of the scene).
    pub com: Vec3,
}

fn t_handle_mesh() -> TetMesh {
    // crossbar along x plus a stem hanging in −y, touching at y = −0.01
    let crossbar = box_mesh(&Vec3::new(0.2, 0.02, 0.02));
    let mut stem = box_mesh(&Vec3::new(0.02, 0.15, 0.02));
    for v in &mut stem.vertices {
        *v += Vec3::new(0.0, -0.085, 0.0);
    }
    let offset = crossbar.vertices.len();
    let mut vertices = crossbar.vertices;
    vertices.extend(stem.vertices);
    let mut tets = crossbar.tets;
    tets.extend(stem.tets.iter().map(|t| {
        [t[0] + offset, t[1] + offset, t[2] + offset, t[3] + offset]
    }));
    TetMesh { vertices, tets }
}

/// Free T-handle spun about its intermediate principal axis, zero gravity.
pub fn t_handle_scene(h: f64) -> (SceneDescription, THandleInfo) {
    let mesh = t_handle_mesh();
    let density = 1e3;
    let moments = mesh.moments().expect("T-handle mesh is valid");
    let mass = density * moments.volume;
    let com = moments.centroid();
    // inertia about the center of mass (principal axes are x, y, z by
    // construction: the shape is mirror-symmetric in x and z)
    let central = (moments.second - moments.first * moments.first.transpose() / moments.volume)
        * density;
    let inertia_com = Mat3::identity() * central.trace() - central;
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        inertia_com[(a, a)]
            .partial_cmp(&inertia_com[(b, b)])
            .expect("finite moments")
    });
    let intermediate = order[1];
    let other = order[0];
    let mut omega0 = Vec3::zeros();
    omega0[intermediate] = 3.0;
    omega0[other] = 1e-3;

    // author the body with its origin at the COM so the twist map is simple
    let shifted: Vec<[f64; 3]> = mesh
        .vertices
        .iter()
        .map(|v| {
            let p = v - com;
            [p.x, p.y, p.z]
        })
        .collect();
    let desc = SceneDescription {
        schema_version: 1,
        gravity: [0.0, 0.0, 0.0],
        bodies: vec![BodyDesc {
            name: "t_handle".into(),
            geometry: GeometryDesc::Mesh {
                vertices: shifted,
                tets: mesh.tets.clone(),
            },
            density,
            youngs: 1e9,
            poisson: 0.3,
            pose: PoseDesc::default(),
            velocity: Some(VelocityDesc::Twist {
                omega: [omega0.x, omega0.y, omega0.z],
                v: [0.0, 0.0, 0.0],
            }),
        }],
        joints: Vec::new(),
        anchors: Vec::new(),
        schedule: Vec::new(),
        integrator: default_integrator(h),
    };
    (
        desc,
        THandleInfo {
            inertia_com,
            mass,
            omega0,
            intermediate_axis: intermediate,
            com,
        },
    )
}

/// Heavy-top reference data shared with the RK4 oracle.
pub struct HeavyTopInfo {
    /// Body-frame inertia about the pivot.
    pub inertia_pivot: Mat3,
    pub mass: f64,
    /// Pivot-to-center-of-mass offset in body coordinates.
    pub com_offset: Vec3,
    pub tilt: f64,
    pub spin: f64,
    pub gravity: Vec3,
    /// Initial rotation (tilt about x).
    pub rotation0: Mat3,
}

/// Spinning disc on a fixed pivot under gravity: 10 rad/s spin, 5° tilt.
pub fn heavy_top_scene(h: f64) -> (SceneDescription, HeavyTopInfo) {
    let radius = 0.05;
    let height = 0.01;
    let density = 1e3;
    let d = 0.002; // pivot just below the center of mass
    let tilt = 5.0_f64.to_radians();
    let spin = 10.0;
    let gravity = Vec3::new(0.0, -9.81, 0.0);
    let mass = std::f64::consts::PI * radius * radius * height * density;
    let i_spin = 0.5 * mass * radius * radius;
    let i_trans = mass * (3.0 * radius * radius + height * height) / 12.0;
    let inertia_pivot = Mat3::from_diagonal(&Vec3::new(
        i_trans + mass * d * d,
        i_spin,
        i_trans + mass * d * d,
    ));
    let rotation0 = crate::math::rotation_about_axis(&Vec3::x(), tilt);
    let t0 = rotation0 * Vec3::new(0.0, d, 0.0);
    let omega_world = rotation0 * Vec3::new(0.0, spin, 0.0);
    let desc = SceneDescription {
        schema_version: 1,
        gravity: [gravity.x, gravity.y, gravity.z],
        bodies: vec![BodyDesc {
            name: "top".into(),
            geometry: GeometryDesc::Cylinder { radius, height },
            density,
            youngs: 1e9,
            poisson: 0.3,
            pose: PoseDesc {
                a: Some(row_major(&rotation0)),
                t: [t0.x, t0.y, t0.z],
            },
            velocity: Some(VelocityDesc::Twist {
                omega: [omega_world.x, omega_world.y, omega_world.z],
                v: [0.0, 0.0, 0.0],
            }),
        }],
        joints: Vec::new(),
        anchors: vec![AnchorDesc::Ball {
            body: "top".into(),
            point: [0.0, 0.0, 0.0],
        }],
        schedule: Vec::new(),
        integrator: default_integrator(h),
    };
    (
        desc,
        HeavyTopInfo {
            inertia_pivot,
            mass,
            com_offset: Vec3::new(0.0, d, 0.0),
            tilt,
            spin,
            gravity,
            rotation0,
        },
    )
}

fn link_between(name: String, p1: Vec3, p2: Vec3, thickness: f64) -> BodyDesc {
    let dir = p2 - p1;
    let length = dir.norm();
    let dir = dir / length;
    let rotation = crate::math::rotation_between(&Vec3::x(), &dir);
    let center = (p1 + p2) / 2.0;
    BodyDesc {
        name,
        geometry: GeometryDesc::Box {
            size: [length, thickness, thickness],
        },
        density: 1e3,
        youngs: 1e9,
        poisson: 0.3,
        pose: PoseDesc {
            a: Some(row_major(&rotation)),
            t: [center.x, center.y, center.z],
        },
        velocity: None,
    }
}

/// Hanging `nodes × nodes` ball-joint net in the xy-plane, pinned along the
/// top row, under gravity.
pub fn hanging_net_scene(nodes: usize, h: f64) -> SceneDescription {
    assert!(nodes >= 2);
    let spacing = 0.12;
    let thickness = 0.015;
    let node_pos = |r: usize, c: usize| {
        Vec3::new(spacing * c as f64, -spacing * r as f64, 0.0)
    };
    let mut bodies = Vec::new();
    // link index per edge: (node, direction) → body name
    let mut horizontal = std::collections::BTreeMap::new();
    let mut vertical = std::collections::BTreeMap::new();
    for r in 0..nodes {
        for c in 0..nodes {
            if c + 1 < nodes {
                let name = format!("h_{r}_{c}");
                horizontal.insert((r, c), name.clone());
                bodies.push(link_between(name, node_pos(r, c), node_pos(r, c + 1), thickness));
            }
            if r + 1 < nodes {
                let name = format!("v_{r}_{c}");
                vertical.insert((r, c), name.clone());
                bodies.push(link_between(name, node_pos(r, c), node_pos(r + 1, c), thickness));
            }
        }
    }
    let mut joints = Vec::new();
    let mut anchors = Vec::new();
    for r in 0..nodes {
        for c in 0..nodes {
            // links incident to this node, deterministic order
            let mut incident: Vec<String> = Vec::new();
            if c > 0 {
                incident.push(horizontal[&(r, c - 1)].clone());
            }
            if c + 1 < nodes {
                incident.push(horizontal[&(r, c)].clone());
            }
            if r > 0 {
                incident.push(vertical[&(r - 1, c)].clone());
            }
            if r + 1 < nodes {
                incident.push(vertical[&(r, c)].clone());
            }
            let p = node_pos(r, c);
            for pair in incident.windows(2) {
                joints.push(JointDesc::Ball {
                    body_a: pair[0].clone(),
                    body_b: pair[1].clone(),
                    point: [p.x, p.y, p.z],
                });
            }
            if r == 0 {
                anchors.push(AnchorDesc::Ball {
                    body: incident[0].clone(),
                    point: [p.x, p.y, p.z],
                });
            }
        }
    }
    SceneDescription {
        schema_version: 1,
        gravity: [0.0, -9.81, 0.0],
        bodies,
        joints,
        anchors,
        schedule: Vec::new(),
        integrator: default_integrator(h),
    }
}

/// Vertical hanging chain of `links` rods, ball-jointed, anchored at the top.
pub fn hanging_chain_scene(links: usize, h: f64) -> SceneDescription {
    let spacing = 0.1;
    let thickness = 0.012;
    let mut bodies = Vec::new();
    let mut joints = Vec::new();
    for j in 0..links {
        let top = Vec3::new(0.0, -(j as f64) * spacing, 0.0);
        let bottom = Vec3::new(0.0, -((j + 1) as f64) * spacing, 0.0);
        bodies.push(link_between(format!("link{j}"), top, bottom, thickness));
        if j > 0 {
            joints.push(JointDesc::Ball {
                body_a: format!("link{}", j - 1),
                body_b: format!("link{j}"),
                point: [top.x, top.y, top.z],
            });
        }
    }
    SceneDescription {
        schema_version: 1,
        gravity: [0.0, -9.81, 0.0],
        bodies,
        joints,
        anchors: vec![AnchorDesc::Ball {
            body: "link0".into(),
            point: [0.0, 0.0, 0.0],
        }],
        schedule: Vec::new(),
        integrator: default_integrator(h),
    }
}

/// Closed ring of `links` rods joined by ball joints, free-falling.
pub fn ring_scene(links: usize, h: f64) -> SceneDescription {
    assert!(links >= 3);
    let radius = 0.3;
    let thickness = 0.015;
    let node = |j: usize| {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / links as f64;
        Vec3::new(radius * angle.cos(), radius * angle.sin(), 0.0)
    };
    let mut bodies = Vec::new();
    let mut joints = Vec::new();
    for j in 0..links {
        bodies.push(link_between(
            format!("seg{j}"),
            node(j),
            node((j + 1) % links),
            thickness,
        ));
    }
    for j in 0..links {
        let p = node(j);
        joints.push(JointDesc::Ball {
            body_a: format!("seg{}", (j + links - 1) % links),
            body_b: format!("seg{j}"),
            point: [p.x, p.y, p.z],
        });
    }
    SceneDescription {
        schema_version: 1,
        gravity: [0.0, -9.81, 0.0],
        bodies,
        joints,
        anchors: Vec::new(),
        schedule: Vec::new(),
        integrator: default_integrator(h),
    }
}

/// Hinged pendulum with joint limits, for the limit-clamp behavior test.
pub fn limited_pendulum_scene(h: f64, min: f64, max: f64) -> SceneDescription {
    let (mut desc, _) = pendulum_scene(h);
    // replace the world hinge by a limited body-body hinge against a welded base
    desc.bodies.push(BodyDesc {
        name: "base".into(),
        geometry: GeometryDesc::Box {
            size: [0.05, 0.05, 0.05],
        },
        density: 1e3,
        youngs: 1e9,
        poisson: 0.3,
        pose: PoseDesc {
            a: None,
            t: [0.0, 0.1, 0.0],
        },
        velocity: None,
    });
    desc.anchors = vec![
        AnchorDesc::Weld {
            body: "base".into(),
            point: [0.0, 0.1, 0.0],
        },
    ];
    desc.joints = vec![JointDesc::Hinge {
        body_a: "base".into(),
        body_b: "rod".into(),
        point: [0.0, 0.0, 0.0],
        axis: [0.0, 0.0, 1.0],
        limits: Some(crate::scene::LimitsDesc {
            min,
            max,
            stiffness: None,
        }),
    }];
    desc
}
