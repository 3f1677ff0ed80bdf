//! Built-in procedural scenes: spheres over a checkerboard ground plane lit
//! by one directional light.

use std::fmt;
use std::str::FromStr;

use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SceneId {
    /// Nothing but background.
    Empty = 0,
    /// A handful of spheres around the origin.
    #[default]
    Spheres = 1,
    /// A courtyard-like ring of spheres, heavier to shade.
    Atrium = 2,
}

impl SceneId {
    pub fn from_u8(v: u8) -> Option<SceneId> {
        match v {
            0 => Some(SceneId::Empty),
            1 => Some(SceneId::Spheres),
            2 => Some(SceneId::Atrium),
            _ => None,
        }
    }
}

impl fmt::Display for SceneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SceneId::Empty => "empty",
            SceneId::Spheres => "spheres",
            SceneId::Atrium => "atrium",
        })
    }
}

impl FromStr for SceneId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "empty" => Ok(SceneId::Empty),
            "spheres" => Ok(SceneId::Spheres),
            "atrium" => Ok(SceneId::Atrium),
            other => Err(format!("unknown scene `{other}` (expected empty, spheres or atrium)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneConfig {
    pub scene_id: SceneId,
    pub background: [u8; 3],
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig { scene_id: SceneId::default(), background: [112, 156, 204] }
    }
}

impl SceneConfig {
    pub fn new(scene_id: SceneId) -> Self {
        SceneConfig { scene_id, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Sphere {
    center: Vec3,
    radius: f32,
    albedo: Vec3,
}

#[derive(Debug, Clone)]
pub(crate) struct Scene {
    spheres: Vec<Sphere>,
    ground: bool,
    light_dir: Vec3,
    ambient: f32,
    pub(crate) background: [u8; 3],
}

const CHECKER_LIGHT: Vec3 = Vec3::new(0.85, 0.82, 0.76);
const CHECKER_DARK: Vec3 = Vec3::new(0.25, 0.24, 0.27);
const HIT_EPSILON: f32 = 1e-4;

impl Scene {
    pub(crate) fn build(config: &SceneConfig) -> Scene {
        let sphere = |x: f32, y: f32, z: f32, r: f32, rgb: [f32; 3]| Sphere {
            center: Vec3::new(x, y, z),
            radius: r,
            albedo: Vec3::from(rgb),
        };
        let (spheres, ground) = match config.scene_id {
            SceneId::Empty => (Vec::new(), false),
            SceneId::Spheres => (
                vec![
                    sphere(0.0, 1.0, 0.0, 1.0, [0.9, 0.2, 0.15]),
                    sphere(2.2, 0.6, 0.8, 0.6, [0.2, 0.7, 0.25]),
                    sphere(-1.8, 0.7, -1.2, 0.7, [0.2, 0.35, 0.9]),
                    sphere(-0.6, 0.35, 2.0, 0.35, [0.95, 0.85, 0.2]),
                    sphere(1.0, 0.45, -2.3, 0.45, [0.8, 0.3, 0.8]),
                ],
                true,
            ),
            SceneId::Atrium => {
                let mut v = vec![sphere(0.0, 1.2, 0.0, 1.2, [0.85, 0.85, 0.9])];
                let n = 20;
                for i in 0..n {
                    let a = std::f64::consts::TAU * i as f64 / n as f64;
                    let (x, z) = ((4.0 * a.cos()) as f32, (4.0 * a.sin()) as f32);
                    let tint = if i % 2 == 0 { [0.8, 0.55, 0.3] } else { [0.55, 0.5, 0.45] };
                    v.push(sphere(x, 0.5, z, 0.5, tint));
                    v.push(sphere(x, 1.4, z, 0.4, tint));
                }
                (v, true)
            }
        };
        Scene {
            spheres,
            ground,
            light_dir: Vec3::new(0.4, 1.0, 0.3).normalized(),
            ambient: 0.15,
            background: config.background,
        }
    }

    /// Shades the ray `origin + t * dir` (dir unit length). Hits whose
    /// distance along `forward` is below `near` are clipped.
    pub(crate) fn shade(&self, origin: Vec3, dir: Vec3, forward: Vec3, near: f32) -> [u8; 3] {
        let min_t = near / dir.dot(forward).max(1e-6);
        match self.closest_hit(origin, dir, min_t) {
            None => self.background,
            Some(hit) => {
                let point = origin + dir * hit.t;
                let (normal, albedo) = match hit.surface {
                    Surface::Ground => (Vec3::Y, checker(point)),
                    Surface::Sphere(i) => {
                        let s = &self.spheres[i];
                        ((point - s.center) * (1.0 / s.radius), s.albedo)
                    }
                };
                let lambert = normal.dot(self.light_dir).max(0.0);
                let lit = if lambert > 0.0 && self.occluded(point + normal * HIT_EPSILON) {
                    0.0
                } else {
                    lambert
                };
                let k = self.ambient + (1.0 - self.ambient) * lit;
                [quantize(albedo.x * k), quantize(albedo.y * k), quantize(albedo.z * k)]
            }
        }
    }

    fn closest_hit(&self, origin: Vec3, dir: Vec3, min_t: f32) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut consider = |t: f32, surface: Surface| {
            if t > min_t && best.as_ref().map_or(true, |b| t < b.t) {
                best = Some(Hit { t, surface });
            }
        };
        if self.ground && dir.y != 0.0 {
            let t = -origin.y / dir.y;
            if t > 0.0 {
                consider(t, Surface::Ground);
            }
        }
        for (i, s) in self.spheres.iter().enumerate() {
            if let Some(t) = intersect_sphere(s, origin, dir, min_t) {
                consider(t, Surface::Sphere(i));
            }
        }
        best
    }

    fn occluded(&self, origin: Vec3) -> bool {
        self.spheres
            .iter()
            .any(|s| intersect_sphere(s, origin, self.light_dir, HIT_EPSILON).is_some())
    }
}

#[derive(Debug, Clone, Copy)]
enum Surface {
    Ground,
    Sphere(usize),
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f32,
    surface: Surface,
}

fn intersect_sphere(s: &Sphere, origin: Vec3, dir: Vec3, min_t: f32) -> Option<f32> {
    let oc = origin - s.center;
    let b = oc.dot(dir);
    let c = oc.dot(oc) - s.radius * s.radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let near = -b - root;
    if near > min_t {
        return Some(near);
    }
    let far = -b + root;
    (far > min_t).then_some(far)
}

fn checker(p: Vec3) -> Vec3 {
    let parity = (p.x.floor() as i64 + p.z.floor() as i64).rem_euclid(2);
    if parity == 0 {
        CHECKER_LIGHT
    } else {
        CHECKER_DARK
    }
}

/// Maps a linear channel value in [0, 1] to a byte: floor(c * 255 + 0.5), clamped.
pub fn quantize(c: f32) -> u8 {
    let v = (c * 255.0 + 0.5).floor();
    if v.is_nan() || v <= 0.0 {
        0
    } else if v >= 255.0 {
        255
    } else {
        v as u8
    }
}
