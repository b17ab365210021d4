//! Analytic signed-distance world: boxes, capsules and spheres, plus the
//! limb capsules that follow the arm configuration.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::kinematics::ChainSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Box {
        half_extents: Vector3<f64>,
    },
    /// Segment along local x from `-length/2` to `+length/2`.
    Capsule {
        length: f64,
        radius: f64,
    },
    Sphere {
        radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub pose: Pose,
    pub tag: String,
    inv: Pose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    UpperArm,
    Forearm,
}

impl Segment {
    pub fn label(self) -> &'static str {
        match self {
            Segment::UpperArm => "upper_arm",
            Segment::Forearm => "forearm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Posture {
    #[default]
    Supine,
    Sitting,
}

impl std::str::FromStr for Posture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "supine" => Ok(Posture::Supine),
            "sitting" => Ok(Posture::Sitting),
            other => Err(format!("unknown posture `{other}`")),
        }
    }
}

impl std::fmt::Display for Posture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Posture::Supine => "supine",
            Posture::Sitting => "sitting",
        })
    }
}

/// A capsule rigidly attached to a limb link.
#[derive(Clone, Debug, PartialEq)]
pub struct LimbAttachment {
    pub primitive: usize,
    pub link: usize,
    pub segment: Segment,
    /// Capsule pose in the link frame.
    pub local: Pose,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdfSample {
    pub distance: f64,
    pub gradient: Vector3<f64>,
    /// Index of the minimizing primitive, `None` when nothing is included.
    pub primitive: Option<usize>,
}

impl SdfSample {
    pub fn empty() -> Self {
        Self {
            distance: f64::INFINITY,
            gradient: Vector3::zeros(),
            primitive: None,
        }
    }
}

impl Primitive {
    pub fn new(shape: Shape, pose: Pose, tag: &str) -> Self {
        Self {
            shape,
            pose,
            tag: tag.to_string(),
            inv: pose.inverse(),
        }
    }

    pub fn set_pose(&mut self, pose: Pose) {
        self.pose = pose;
        self.inv = pose.inverse();
    }

    /// Signed distance and its (unit) gradient in world coordinates.
    pub fn sdf(&self, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let local = self.inv.transform_point(p);
        let (d, g) = match self.shape {
            Shape::Sphere { radius } => {
                let n = local.norm();
                let g = if n > 1e-12 { local / n } else { Vector3::z() };
                (n - radius, g)
            }
            Shape::Capsule { length, radius } => {
                let h = 0.5 * length;
                let c = Vector3::new(local.x.clamp(-h, h), 0.0, 0.0);
                let v = local - c;
                let n = v.norm();
                let g = if n > 1e-12 {
                    v / n
                } else if local.x.abs() >= h {
                    Vector3::x() * local.x.signum()
                } else {
                    Vector3::y()
                };
                (n - radius, g)
            }
            Shape::Box { half_extents } => box_sdf(&local, &half_extents),
        };
        (d, self.pose.rotation * g)
    }

    pub fn matches(&self, filter: &str) -> bool {
        self.tag == filter
            || (self.tag.len() > filter.len()
                && self.tag.starts_with(filter)
                && self.tag.as_bytes()[filter.len()] == b'.')
    }
}

fn box_sdf(p: &Vector3<f64>, h: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let q = p.abs() - h;
    let outside = q.map(|v| v.max(0.0));
    let on = outside.norm();
    if on > 0.0 {
        let g = Vector3::new(
            outside.x * p.x.signum(),
            outside.y * p.y.signum(),
            outside.z * p.z.signum(),
        ) / on;
        return (on, g);
    }
    let axis = q.imax();
    let mut g = Vector3::zeros();
    g[axis] = if p[axis] >= 0.0 { 1.0 } else { -1.0 };
    (q[axis], g)
}

/// Immutable obstacle world. Limb capsules are re-posed by building a new
/// scene with [`Scene::posed`].
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    pub attachments: Vec<LimbAttachment>,
    pub posture: Posture,
}

/// Included-primitive mask derived from a tag exclusion list.
#[derive(Clone, Debug, PartialEq)]
pub struct Obstacles<'a> {
    scene: &'a Scene,
    included: Vec<usize>,
}

impl<'a> Obstacles<'a> {
    pub fn query(&self, p: &Vector3<f64>) -> SdfSample {
        let mut best = SdfSample::empty();
        for &i in &self.included {
            let (d, g) = self.scene.primitives[i].sdf(p);
            // strict comparison keeps the first-listed primitive on ties
            if d < best.distance {
                best = SdfSample {
                    distance: d,
                    gradient: g,
                    primitive: Some(i),
                };
            }
        }
        best
    }

    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.included
            .iter()
            .map(|&i| self.scene.primitives[i].sdf(p).0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn scene(&self) -> &'a Scene {
        self.scene
    }
}

impl Scene {
    pub fn new(
        primitives: Vec<Primitive>,
        attachments: Vec<LimbAttachment>,
        posture: Posture,
    ) -> Self {
        Self {
            primitives,
            attachments,
            posture,
        }
    }

    pub fn obstacles(&self, exclude: &[&str]) -> Obstacles<'_> {
        let included = self
            .primitives
            .iter()
            .enumerate()
            .filter(|(_, p)| !exclude.iter().any(|e| p.matches(e)))
            .map(|(i, _)| i)
            .collect();
        Obstacles {
            scene: self,
            included,
        }
    }

    pub fn sdf_query(&self, point: &Vector3<f64>, exclude: &[&str]) -> SdfSample {
        self.obstacles(exclude).query(point)
    }

    /// Copy of the scene with every limb capsule placed for configuration `q`.
    pub fn posed(&self, limb: &ChainSpec, q: &[f64]) -> Scene {
        let frames = limb.forward_kinematics(q);
        let mut out = self.clone();
        for a in &self.attachments {
            out.primitives[a.primitive].set_pose(frames[a.link].compose(&a.local));
        }
        out
    }

    /// Appends primitives (e.g. a frozen robot) and returns the new scene.
    pub fn with_extra(&self, extra: impl IntoIterator<Item = Primitive>) -> Scene {
        let mut out = self.clone();
        out.primitives.extend(extra);
        out
    }

    pub fn attachment(&self, segment: Segment) -> Option<&LimbAttachment> {
        self.attachments.iter().find(|a| a.segment == segment)
    }

    pub fn limb_capsule(&self, segment: Segment) -> Option<(f64, f64)> {
        let a = self.attachment(segment)?;
        match self.primitives[a.primitive].shape {
            Shape::Capsule { length, radius } => Some((length, radius)),
            _ => None,
        }
    }
}

/// Capsules between consecutive frame origins of a chain at `q`, for use as
/// obstacles (e.g. a robot frozen while another one moves).
pub fn chain_capsules(chain: &ChainSpec, q: &[f64], radius: f64, tag: &str) -> Vec<Primitive> {
    let mut points = vec![chain.base.translation];
    points.extend(chain.forward_kinematics(q).iter().map(|f| f.translation));
    points
        .windows(2)
        .filter_map(|w| {
            let d = w[1] - w[0];
            let length = d.norm();
            if length < 1e-6 {
                return None;
            }
            let x = d / length;
            let y = crate::geometry::any_orthogonal(&x);
            let rotation = nalgebra::Matrix3::from_columns(&[x, y, x.cross(&y)]);
            Some(Primitive::new(
                Shape::Capsule { length, radius },
                Pose::new(rotation, 0.5 * (w[0] + w[1])),
                tag,
            ))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub segment: Segment,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SurfacePointCloud {
    pub points: Vec<SurfacePoint>,
}

/// Seeded samples on the lateral surfaces of the limb capsules at `q`.
///
/// Each segment is split into `n_per_segment` axial bands with one point per
/// band at a uniformly drawn azimuth. Points that fall inside another limb
/// capsule (around a flexed elbow) are redrawn, and dropped after a few tries.
pub fn sample_limb_surface(
    limb: &ChainSpec,
    scene: &Scene,
    q: &[f64],
    n_per_segment: usize,
    seed: u64,
) -> SurfacePointCloud {
    let posed = scene.posed(limb, q);
    let limb_only: Vec<usize> = posed.attachments.iter().map(|a| a.primitive).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_per_segment * posed.attachments.len());
    for a in &posed.attachments {
        let prim = &posed.primitives[a.primitive];
        let Shape::Capsule { length, radius } = prim.shape else {
            continue;
        };
        let axis = prim.pose.rotation.column(0).into_owned();
        let ref_dir = prim.pose.rotation.column(1).into_owned();
        let other_dir = axis.cross(&ref_dir);
        for band in 0..n_per_segment {
            for _attempt in 0..16 {
                let s = (band as f64 + rng.random::<f64>()) / n_per_segment as f64;
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                let normal = ref_dir * theta.cos() + other_dir * theta.sin();
                let center = prim.pose.translation + axis * ((s - 0.5) * length);
                let position = center + normal * radius;
                let buried = limb_only
                    .iter()
                    .filter(|&&j| j != a.primitive)
                    .any(|&j| posed.primitives[j].sdf(&position).0 < 0.0);
                if !buried {
                    points.push(SurfacePoint {
                        position,
                        normal,
                        segment: a.segment,
                    });
                    break;
                }
            }
        }
    }
    SurfacePointCloud { points }
}
