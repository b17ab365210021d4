//! Configuration-space collision costing through control spheres attached to
//! chain links.

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::kinematics::ChainSpec;
use crate::par;
use crate::scene::{Obstacles, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsdfParams {
    /// Safety threshold (m).
    pub rho: f64,
    /// Outer radius of the cost ramp (m).
    pub r_outer: f64,
    /// Cost per control point closer than `rho`.
    pub big: f64,
}

impl Default for CsdfParams {
    fn default() -> Self {
        Self {
            rho: 0.02,
            r_outer: 0.05,
            big: 1e6,
        }
    }
}

impl CsdfParams {
    pub fn ramp_slope(&self) -> f64 {
        1.0 / (self.r_outer - self.rho)
    }

    /// Per-point cost of clearance `d`.
    pub fn point_cost(&self, d: f64) -> f64 {
        if d < self.rho {
            self.big
        } else if d < self.r_outer {
            (self.r_outer - d) / (self.r_outer - self.rho)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlPoint {
    pub link: usize,
    pub offset: Vector3<f64>,
    pub radius: f64,
}

/// Sphere in world coordinates; clearance is the SDF at the center minus the radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlSphere {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub link: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ControlPointSet {
    pub points: Vec<ControlPoint>,
}

/// Layout rule for generating control points along a chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlLayout {
    pub per_link: usize,
    pub radius: f64,
    /// Links longer than `per_link * max_spacing` get extra points.
    pub max_spacing: f64,
    /// Length at the tip of the end segment left uncovered (tool contact zone).
    pub tip_clearance: f64,
    pub tip_radius: f64,
}

impl Default for ControlLayout {
    fn default() -> Self {
        Self {
            per_link: 4,
            radius: 0.05,
            max_spacing: 0.1,
            tip_clearance: 0.08,
            tip_radius: 0.035,
        }
    }
}

impl ControlPointSet {
    /// Points on each link segment between consecutive joint frames; the
    /// last link runs to the tool frame minus `tip_clearance`.
    pub fn along_links(chain: &ChainSpec, layout: &ControlLayout) -> Self {
        let n = chain.dof();
        let mut points = Vec::new();
        for link in 0..n {
            let is_last = link + 1 == n;
            let mut seg = if is_last {
                chain.tool.translation
            } else {
                chain.joints[link + 1].origin.translation
            };
            let mut radius = layout.radius;
            if is_last {
                let len = seg.norm();
                if len <= layout.tip_clearance {
                    continue;
                }
                seg *= (len - layout.tip_clearance) / len;
                radius = layout.tip_radius;
            }
            let len = seg.norm();
            if len < 1e-9 {
                continue;
            }
            let count = layout
                .per_link
                .max((len / layout.max_spacing).ceil() as usize + 1)
                .max(2);
            for k in 0..count {
                let f = k as f64 / (count - 1) as f64;
                points.push(ControlPoint {
                    link,
                    offset: seg * f,
                    radius,
                });
            }
        }
        Self { points }
    }

    /// `count` points on each limb capsule, starting `start` meters along the
    /// first segment so the shoulder region inside the torso is not sampled.
    pub fn for_limb(scene: &Scene, count: usize, start: f64) -> Self {
        use crate::scene::{Segment, Shape};
        let mut points = Vec::new();
        for a in &scene.attachments {
            let Shape::Capsule { length, radius } = scene.primitives[a.primitive].shape else {
                continue;
            };
            let from = if a.segment == Segment::UpperArm {
                start.min(length)
            } else {
                0.0
            };
            let axis = a.local.rotation.column(0).into_owned();
            let origin = a.local.translation - axis * (0.5 * length);
            for k in 0..count {
                let f = if count == 1 {
                    0.5
                } else {
                    k as f64 / (count - 1) as f64
                };
                points.push(ControlPoint {
                    link: a.link,
                    offset: origin + axis * (from + f * (length - from)),
                    radius,
                });
            }
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Control spheres in world coordinates given precomputed link frames.
    pub fn place(&self, frames: &[Pose]) -> Vec<ControlSphere> {
        self.points
            .iter()
            .map(|p| ControlSphere {
                center: frames[p.link].transform_point(&p.offset),
                radius: p.radius,
                link: p.link,
            })
            .collect()
    }
}

pub fn world_points(set: &ControlPointSet, chain: &ChainSpec, q: &[f64]) -> Vec<ControlSphere> {
    set.place(&chain.forward_kinematics(q))
}

/// Batched evaluation over many configurations, in input order.
pub fn world_points_batch(
    set: &ControlPointSet,
    chain: &ChainSpec,
    qs: &[DVector<f64>],
) -> Vec<Vec<ControlSphere>> {
    par::map(qs, |q| world_points(set, chain, q.as_slice()))
}

pub fn clearance(sphere: &ControlSphere, obstacles: &Obstacles<'_>) -> f64 {
    obstacles.distance(&sphere.center) - sphere.radius
}

/// Smallest clearance over all spheres; `+∞` when nothing is included.
pub fn min_clearance(spheres: &[ControlSphere], obstacles: &Obstacles<'_>) -> f64 {
    spheres
        .iter()
        .map(|s| clearance(s, obstacles))
        .fold(f64::INFINITY, f64::min)
}

pub fn collision_cost(
    spheres: &[ControlSphere],
    obstacles: &Obstacles<'_>,
    params: &CsdfParams,
) -> f64 {
    spheres
        .iter()
        .map(|s| params.point_cost(clearance(s, obstacles)))
        .sum()
}

/// Joint-space direction that increases clearance of every sphere inside the
/// ramp band. Each sphere contributes `J_pᵀ ∇d` weighted by the ramp slope
/// times its normalized ramp value, so contributions fade to zero at `r_outer`.
pub fn repulsion_gradient(
    set: &ControlPointSet,
    chain: &ChainSpec,
    q: &[f64],
    obstacles: &Obstacles<'_>,
    params: &CsdfParams,
) -> DVector<f64> {
    let frames = chain.forward_kinematics(q);
    let mut out = DVector::zeros(chain.dof());
    for (p, s) in set.points.iter().zip(set.place(&frames)) {
        let sample = obstacles.query(&s.center);
        let d = sample.distance - s.radius;
        if d >= params.r_outer {
            continue;
        }
        let ramp = ((params.r_outer - d) / (params.r_outer - params.rho)).min(1.0);
        let weight = params.ramp_slope() * ramp;
        let jac = chain.jacobian_at(&frames, p.link, &s.center);
        let lin = jac.fixed_rows::<3>(0);
        out += lin.transpose() * sample.gradient * weight;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_robot_chain;
    use crate::geometry::Pose;
    use crate::kinematics::{ChainSpec, Joint};
    use crate::scene::{Posture, Primitive, Shape};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn floor_scene(top: f64) -> Scene {
        Scene::new(
            vec![Primitive::new(
                Shape::Box {
                    half_extents: Vector3::new(5.0, 5.0, 0.5),
                },
                Pose::from_translation(Vector3::new(0.0, 0.0, top - 0.5)),
                "floor",
            )],
            vec![],
            Posture::Supine,
        )
    }

    #[test]
    fn zero_offsets_give_link_origins_and_rotation_is_applied() {
        let chain = ChainSpec::new(
            "z",
            Pose::identity(),
            vec![Joint::revolute(
                "a",
                Vector3::z(),
                Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)),
                (-4.0, 4.0),
            )],
            Pose::identity(),
        )
        .unwrap();
        let set = ControlPointSet {
            points: vec![
                ControlPoint {
                    link: 0,
                    offset: Vector3::zeros(),
                    radius: 0.0,
                },
                ControlPoint {
                    link: 0,
                    offset: Vector3::x(),
                    radius: 0.0,
                },
            ],
        };
        let w = world_points(&set, &chain, &[std::f64::consts::FRAC_PI_2]);
        assert_relative_eq!(w[0].center, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(w[1].center, Vector3::new(0.0, 1.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn batch_equals_sequential() {
        let chain = default_robot_chain(Pose::identity());
        let set = ControlPointSet::along_links(&chain, &ControlLayout::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let qs: Vec<_> = (0..16).map(|_| chain.sample_uniform(&mut rng)).collect();
        let batch = world_points_batch(&set, &chain, &qs);
        for (q, b) in qs.iter().zip(&batch) {
            assert_eq!(&world_points(&set, &chain, q.as_slice()), b);
        }
    }

    #[test]
    fn every_link_with_geometry_has_two_points() {
        let chain = default_robot_chain(Pose::identity());
        let set = ControlPointSet::along_links(&chain, &ControlLayout::default());
        for link in 0..chain.dof() {
            let c = set.points.iter().filter(|p| p.link == link).count();
            assert!(c == 0 || c >= 2);
        }
        assert!(set.len() >= 4 * 4);
    }

    #[test]
    fn clearance_brute_force_and_sentinel() {
        let scene = floor_scene(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spheres: Vec<_> = (0..100)
            .map(|_| ControlSphere {
                center: Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.2..1.0),
                ),
                radius: 0.01,
                link: 0,
            })
            .collect();
        let obs = scene.obstacles(&[]);
        let oracle = spheres
            .iter()
            .flat_map(|s| {
                scene
                    .primitives
                    .iter()
                    .map(move |p| p.sdf(&s.center).0 - s.radius)
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min_clearance(&spheres, &obs), oracle);
        let inside = [ControlSphere {
            center: Vector3::new(0.0, 0.0, -0.1),
            radius: 0.0,
            link: 0,
        }];
        assert!(min_clearance(&inside, &obs) < 0.0);
        assert!(min_clearance(&spheres, &scene.obstacles(&["floor"])).is_infinite());
    }

    #[test]
    fn cost_ramp_values() {
        let p = CsdfParams::default();
        assert_eq!(p.point_cost(0.05), 0.0);
        assert_eq!(p.point_cost(1.0), 0.0);
        assert_relative_eq!(p.point_cost(p.rho), 1.0);
        assert_relative_eq!(
            p.point_cost((p.rho + p.r_outer) / 2.0),
            0.5,
            epsilon = 1e-12
        );
        assert_eq!(p.point_cost(0.0), p.big);
        let scene = floor_scene(0.0);
        let obs = scene.obstacles(&[]);
        let far = [ControlSphere {
            center: Vector3::new(0.0, 0.0, 0.3),
            radius: 0.0,
            link: 0,
        }];
        assert_eq!(collision_cost(&far, &obs, &p), 0.0);
    }

    #[test]
    fn repulsion_lifts_point_above_plane() {
        // planar 2-link arm in the x-z plane, tip near the floor
        let chain = ChainSpec::new(
            "planar",
            Pose::from_translation(Vector3::new(0.0, 0.0, 0.5)),
            vec![
                Joint::revolute("a", Vector3::y(), Pose::identity(), (-4.0, 4.0)),
                Joint::revolute(
                    "b",
                    Vector3::y(),
                    Pose::from_translation(Vector3::new(0.3, 0.0, 0.0)),
                    (-4.0, 4.0),
                ),
            ],
            Pose::from_translation(Vector3::new(0.3, 0.0, 0.0)),
        )
        .unwrap();
        let set = ControlPointSet {
            points: vec![ControlPoint {
                link: 1,
                offset: Vector3::new(0.3, 0.0, 0.0),
                radius: 0.0,
            }],
        };
        let scene = floor_scene(0.0);
        let obs = scene.obstacles(&[]);
        let params = CsdfParams::default();
        // tip height 0.5 - 0.6 sin(q) ≈ 0.03
        let q0 = (0.47f64 / 0.6).asin();
        let q = [q0, 0.0];
        let before = world_points(&set, &chain, &q)[0].center;
        assert!(before.z > params.rho && before.z < params.r_outer);
        let g = repulsion_gradient(&set, &chain, &q, &obs, &params);
        assert!(g.norm() > 0.0);
        let step = g.normalize() * 1e-4;
        let q1 = [q[0] + step[0], q[1] + step[1]];
        let after = world_points(&set, &chain, &q1)[0].center;
        assert!(after.z - before.z > 0.0);

        let clear = [0.0, 0.0];
        assert_eq!(
            repulsion_gradient(&set, &chain, &clear, &obs, &params).norm(),
            0.0
        );
    }

    #[test]
    fn repulsion_fades_at_outer_radius() {
        let chain = ChainSpec::new(
            "slider",
            Pose::identity(),
            vec![Joint::prismatic(
                "z",
                Vector3::z(),
                Pose::identity(),
                (-1.0, 1.0),
            )],
            Pose::identity(),
        )
        .unwrap();
        let set = ControlPointSet {
            points: vec![ControlPoint {
                link: 0,
                offset: Vector3::zeros(),
                radius: 0.0,
            }],
        };
        let scene = floor_scene(0.0);
        let obs = scene.obstacles(&[]);
        let params = CsdfParams::default();
        let step = 1e-4;
        let mut prev = repulsion_gradient(&set, &chain, &[0.03], &obs, &params).norm();
        let mut z = 0.03;
        while z < 0.06 {
            z += step;
            let g = repulsion_gradient(&set, &chain, &[z], &obs, &params).norm();
            assert!((g - prev).abs() <= params.ramp_slope() * params.ramp_slope() * step + 1e-9);
            prev = g;
        }
        assert_eq!(prev, 0.0);
    }
}
