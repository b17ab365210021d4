//! Structured-text (TOML) loaders for chains and scenes.
//!
//! Every semantic check reports the 1-based line of the offending table.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;
use toml::Spanned;

use crate::error::ConfigError;
use crate::geometry::Pose;
use crate::kinematics::{ChainSpec, Joint, JointKind};
use crate::scene::{LimbAttachment, Posture, Primitive, Scene, Segment, Shape};

const IDENTITY: [f64; 7] = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];

/// Byte offset → 1-based line number.
pub fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

fn invalid(path: &str, text: &str, offset: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        line: line_of(text, offset),
        message: message.into(),
    }
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        ConfigError::Invalid {
            path: path.to_string(),
            line,
            message: e.message().to_string(),
        }
    })
}

pub fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn pose_at(
    path: &str,
    text: &str,
    offset: usize,
    field: &str,
    v: [f64; 7],
) -> Result<Pose, ConfigError> {
    Pose::from_array(v).map_err(|e| invalid(path, text, offset, format!("{field}: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    name: String,
    #[serde(default = "identity_array")]
    base: [f64; 7],
    #[serde(default = "identity_array")]
    tool: [f64; 7],
    joint: Vec<Spanned<JointFile>>,
    #[serde(default)]
    frames: BTreeMap<String, usize>,
}

fn identity_array() -> [f64; 7] {
    IDENTITY
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    name: String,
    #[serde(default)]
    kind: JointKind,
    axis: [f64; 3],
    #[serde(default = "identity_array")]
    origin: [f64; 7],
    limits: [f64; 2],
}

/// Parses a chain definition. `origin`, `base` and `tool` are 7-number poses
/// `[x, y, z, qw, qx, qy, qz]`.
pub fn parse_chain(path: &str, text: &str) -> Result<ChainSpec, ConfigError> {
    let file: ChainFile = parse_toml(path, text)?;
    let mut joints = Vec::with_capacity(file.joint.len());
    for spanned in &file.joint {
        let at = spanned.span().start;
        let j = spanned.get_ref();
        let axis = Vector3::from(j.axis);
        if !(axis.norm() > 1e-9) {
            return Err(invalid(
                path,
                text,
                at,
                format!("joint `{}`: axis must be non-zero", j.name),
            ));
        }
        if !(j.limits[0] < j.limits[1]) {
            return Err(invalid(
                path,
                text,
                at,
                format!(
                    "joint `{}`: limits [{}, {}] must satisfy lo < hi",
                    j.name, j.limits[0], j.limits[1]
                ),
            ));
        }
        let origin = pose_at(path, text, at, "origin", j.origin)?;
        let mut joint = Joint::revolute(&j.name, axis, origin, (j.limits[0], j.limits[1]));
        joint.kind = j.kind;
        joints.push(joint);
    }
    let base = pose_at(path, text, 0, "base", file.base)?;
    let tool = pose_at(path, text, 0, "tool", file.tool)?;
    let mut chain =
        ChainSpec::new(&file.name, base, joints, tool).map_err(|e| ConfigError::Semantic {
            path: path.to_string(),
            message: e.to_string(),
        })?;
    for (name, link) in file.frames {
        if link > chain.dof() {
            return Err(ConfigError::Semantic {
                path: path.to_string(),
                message: format!(
                    "frame `{name}` refers to link {link} of a {}-joint chain",
                    chain.dof()
                ),
            });
        }
        chain.frames.insert(name, link);
    }
    Ok(chain)
}

pub fn load_chain(path: &Path) -> Result<ChainSpec, ConfigError> {
    parse_chain(&path.display().to_string(), &read_file(path)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    posture: Posture,
    limb_base: [f64; 7],
    #[serde(default)]
    primitive: Vec<Spanned<PrimitiveFile>>,
    #[serde(default)]
    limb_segment: Vec<Spanned<LimbSegmentFile>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrimitiveFile {
    tag: String,
    kind: String,
    #[serde(default = "identity_array")]
    pose: [f64; 7],
    half_extents: Option<[f64; 3]>,
    length: Option<f64>,
    radius: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LimbSegmentFile {
    tag: String,
    segment: Segment,
    link: usize,
    length: f64,
    radius: f64,
}

/// A loaded scene together with the world pose of the limb base (shoulder).
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub scene: Scene,
    pub limb_base: Pose,
}

fn positive(
    path: &str,
    text: &str,
    at: usize,
    tag: &str,
    field: &str,
    v: Option<f64>,
) -> Result<f64, ConfigError> {
    match v {
        None => Err(invalid(
            path,
            text,
            at,
            format!("primitive `{tag}`: missing `{field}`"),
        )),
        Some(x) if !(x > 0.0) => Err(invalid(
            path,
            text,
            at,
            format!("primitive `{tag}`: `{field}` must be strictly positive, got {x}"),
        )),
        Some(x) => Ok(x),
    }
}

/// Tolerance for the shoulder sitting on top of support surfaces.
const BASE_OVERLAP_TOL: f64 = 0.005;

pub fn parse_scene(path: &str, text: &str) -> Result<SceneSpec, ConfigError> {
    let file: SceneFile = parse_toml(path, text)?;
    let limb_base = pose_at(path, text, 0, "limb_base", file.limb_base)?;
    let mut primitives = Vec::new();
    for spanned in &file.primitive {
        let at = spanned.span().start;
        let p = spanned.get_ref();
        let shape = match p.kind.as_str() {
            "box" => {
                let h = p.half_extents.ok_or_else(|| {
                    invalid(
                        path,
                        text,
                        at,
                        format!("primitive `{}`: missing `half_extents`", p.tag),
                    )
                })?;
                for v in h {
                    positive(path, text, at, &p.tag, "half_extents", Some(v))?;
                }
                Shape::Box {
                    half_extents: Vector3::from(h),
                }
            }
            "capsule" => Shape::Capsule {
                length: positive(path, text, at, &p.tag, "length", p.length)?,
                radius: positive(path, text, at, &p.tag, "radius", p.radius)?,
            },
            "sphere" => Shape::Sphere {
                radius: positive(path, text, at, &p.tag, "radius", p.radius)?,
            },
            other => {
                return Err(invalid(
                    path,
                    text,
                    at,
                    format!(
                        "primitive `{}`: unknown kind `{other}` (box, capsule, sphere)",
                        p.tag
                    ),
                ))
            }
        };
        let pose = pose_at(path, text, at, "pose", p.pose)?;
        primitives.push(Primitive::new(shape, pose, &p.tag));
    }
    let obstacle_count = primitives.len();
    let mut attachments = Vec::new();
    for spanned in &file.limb_segment {
        let at = spanned.span().start;
        let s = spanned.get_ref();
        let length = positive(path, text, at, &s.tag, "length", Some(s.length))?;
        let radius = positive(path, text, at, &s.tag, "radius", Some(s.radius))?;
        let local = Pose::from_translation(Vector3::new(0.5 * length, 0.0, 0.0));
        attachments.push(LimbAttachment {
            primitive: primitives.len(),
            link: s.link,
            segment: s.segment,
            local,
        });
        primitives.push(Primitive::new(
            Shape::Capsule { length, radius },
            limb_base.compose(&local),
            &s.tag,
        ));
    }
    let scene = Scene::new(primitives, attachments, file.posture);
    for (i, prim) in scene.primitives.iter().take(obstacle_count).enumerate() {
        let d = prim.sdf(&limb_base.translation).0;
        if d < -BASE_OVERLAP_TOL {
            let at = file.primitive[i].span().start;
            return Err(invalid(
                path,
                text,
                at,
                format!(
                    "limb base lies {:.3} m inside primitive `{}`; move the shoulder or the obstacle",
                    -d, prim.tag
                ),
            ));
        }
    }
    Ok(SceneSpec { scene, limb_base })
}

pub fn load_scene(path: &Path) -> Result<SceneSpec, ConfigError> {
    parse_scene(&path.display().to_string(), &read_file(path)?)
}

/// UR5-class arm (≈0.85 m reach) with a 15 cm gripper TCP. Mirrors
/// `configs/ur5.toml`.
pub fn default_robot_chain(base: Pose) -> ChainSpec {
    use std::f64::consts::FRAC_1_SQRT_2 as H;
    let ry = |t: [f64; 3]| Pose::from_array([t[0], t[1], t[2], H, 0.0, H, 0.0]).unwrap();
    let tr = |t: [f64; 3]| Pose::from_translation(Vector3::from(t));
    let full = (-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI);
    let elbow = (-std::f64::consts::PI, std::f64::consts::PI);
    let joints = vec![
        Joint::revolute("shoulder_pan", Vector3::z(), tr([0.0, 0.0, 0.089159]), full),
        Joint::revolute("shoulder_lift", Vector3::y(), ry([0.0, 0.13585, 0.0]), full),
        Joint::revolute("elbow", Vector3::y(), tr([0.0, -0.1197, 0.425]), elbow),
        Joint::revolute("wrist_1", Vector3::y(), ry([0.0, 0.0, 0.39225]), full),
        Joint::revolute("wrist_2", Vector3::z(), tr([0.0, 0.093, 0.0]), full),
        Joint::revolute("wrist_3", Vector3::y(), tr([0.0, 0.0, 0.09465]), full),
    ];
    let tool = Pose::from_array([0.0, 0.2323, 0.0, H, -H, 0.0, 0.0]).unwrap();
    ChainSpec::new("ur5", base, joints, tool).expect("built-in limits are non-empty")
}
