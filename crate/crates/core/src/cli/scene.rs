//! Single-file OBJ export of a grasp: object mesh, tessellated hand
//! primitives and contact markers, in groups `object`, `links`, `contacts`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::collision::{posed_primitives, Shape};
use crate::error::{Error, Result};
use crate::kinematics::{GraspState, HandModel, Pose};
use crate::surface::SurfaceModel;

const MARKER_RADIUS: f64 = 0.002;
const SEGMENTS: usize = 16;

/// Element counts of an exported scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneCounts {
    pub vertices: usize,
    pub faces: usize,
    pub markers: usize,
}

#[derive(Default)]
struct Group {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
}

impl Group {
    fn add(&mut self, pose: &Pose, vertices: &[Vector3<f64>], faces: &[[usize; 3]]) {
        let base = self.vertices.len();
        self.vertices.extend(vertices.iter().map(|v| pose.transform_point(v)));
        self.faces.extend(faces.iter().map(|f| f.map(|i| i + base)));
    }
}

fn capsule(radius: f64, half_length: f64) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    // rings of the two hemispheres; the equator ring appears once per cap
    let per_cap = SEGMENTS / 4;
    let mut rings = Vec::new();
    for k in 1..=per_cap {
        let a = 0.5 * PI * k as f64 / per_cap as f64;
        rings.push((half_length + radius * a.cos(), radius * a.sin()));
    }
    for k in (1..=per_cap).rev() {
        let a = 0.5 * PI * k as f64 / per_cap as f64;
        rings.push((-half_length - radius * a.cos(), radius * a.sin()));
    }
    let mut v = vec![Vector3::new(0.0, 0.0, half_length + radius)];
    for &(z, rho) in &rings {
        for j in 0..SEGMENTS {
            let phi = 2.0 * PI * j as f64 / SEGMENTS as f64;
            v.push(Vector3::new(rho * phi.cos(), rho * phi.sin(), z));
        }
    }
    v.push(Vector3::new(0.0, 0.0, -half_length - radius));
    let n_rings = rings.len();
    let ring = |i: usize, j: usize| 1 + i * SEGMENTS + j % SEGMENTS;
    let south = v.len() - 1;
    let mut f = Vec::new();
    for j in 0..SEGMENTS {
        f.push([0, ring(0, j), ring(0, j + 1)]);
        f.push([south, ring(n_rings - 1, j + 1), ring(n_rings - 1, j)]);
    }
    for i in 0..n_rings - 1 {
        for j in 0..SEGMENTS {
            f.push([ring(i, j), ring(i + 1, j), ring(i, j + 1)]);
            f.push([ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1)]);
        }
    }
    (v, f)
}

fn cuboid(half: &Vector3<f64>) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let raw = crate::surface::shapes::cube_raw(2.0);
    (
        raw.positions.iter().map(|p| p.component_mul(half)).collect(),
        raw.triangles,
    )
}

fn icosahedron(radius: f64) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .map(|(x, y, z)| Vector3::new(x, y, z).normalize() * radius);
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (v.to_vec(), f)
}

/// Writes the scene in the model frame and returns what was written.
pub fn export_scene(state: &GraspState, hand: &HandModel, surface: &SurfaceModel, path: &Path) -> Result<SceneCounts> {
    let mut object = Group::default();
    object.add(&Pose::identity(), surface.vertices(), surface.triangles());

    let mut links = Group::default();
    for (pose, prim) in posed_primitives(hand, &state.palm_in_object(), &state.q) {
        let (v, f) = match prim.shape {
            Shape::Capsule { radius, half_length } => capsule(radius, half_length),
            Shape::Box { half_extents } => cuboid(&half_extents),
        };
        links.add(&pose, &v, &f);
    }

    let mut contacts = Group::default();
    let (v, f) = icosahedron(MARKER_RADIUS);
    for c in &state.contacts {
        contacts.add(&Pose::from_translation(c.position), &v, &f);
    }

    let mut text = String::from("# fingersplit grasp scene, model frame, meters\n");
    let mut offset = 1;
    let mut counts = SceneCounts {
        vertices: 0,
        faces: 0,
        markers: state.contacts.len(),
    };
    for (name, g) in [("object", &object), ("links", &links), ("contacts", &contacts)] {
        let _ = writeln!(text, "g {name}");
        for p in &g.vertices {
            let _ = writeln!(text, "v {} {} {}", p.x, p.y, p.z);
        }
        for t in &g.faces {
            let _ = writeln!(text, "f {} {} {}", t[0] + offset, t[1] + offset, t[2] + offset);
        }
        offset += g.vertices.len();
        counts.vertices += g.vertices.len();
        counts.faces += g.faces.len();
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_mesh, MeshFormat};

    fn closed(faces: &[[usize; 3]]) -> bool {
        use std::collections::HashMap;
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for f in faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
        }
        // every edge used once in each direction
        edges.values().all(|&c| c == 0)
    }

    #[test]
    fn primitive_meshes_are_closed_and_sized() {
        let (v, f) = capsule(0.01, 0.02);
        assert!(closed(&f));
        let zmax = v.iter().map(|p| p.z).fold(f64::MIN, f64::max);
        assert!((zmax - 0.03).abs() < 1e-15);
        assert!(v.iter().all(|p| (p.x * p.x + p.y * p.y).sqrt() <= 0.01 + 1e-15));
        let (_, f) = icosahedron(1.0);
        assert!(closed(&f) && f.len() == 20);
        let (v, f) = cuboid(&Vector3::new(0.1, 0.2, 0.3));
        assert!(closed(&f));
        assert!(v.iter().all(|p| (p.y.abs() - 0.2).abs() < 1e-15));
    }

    #[test]
    fn scene_has_named_groups_and_untouched_object() {
        let hand = HandModel::default_barrett();
        let surface = crate::surface::shapes::uv_sphere(0.04, 12, 24);
        let q = hand.midpoints();
        let palm = Pose::from_translation(Vector3::new(0.0, 0.0, -0.12));
        let contacts = hand
            .fk_fingertips(&palm, &q)
            .iter()
            .map(|t| surface.nearest_neighbor(&t.translation))
            .collect();
        let state = GraspState {
            palm,
            q,
            contacts,
            object_pose: Pose::identity(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.obj");
        let counts = export_scene(&state, &hand, &surface, &path).unwrap();
        assert_eq!(counts.markers, 3);
        let text = std::fs::read_to_string(&path).unwrap();
        let groups: Vec<&str> = text.lines().filter_map(|l| l.strip_prefix("g ")).collect();
        assert_eq!(groups, ["object", "links", "contacts"]);
        let object: String = text
            .lines()
            .skip_while(|l| *l != "g object")
            .skip(1)
            .take_while(|l| !l.starts_with("g "))
            .map(|l| format!("{l}\n"))
            .collect();
        let raw = parse_mesh(object.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(raw.positions, surface.vertices());
        assert_eq!(raw.triangles, surface.triangles());
        let whole = parse_mesh(text.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(whole.positions.len(), counts.vertices);
        assert_eq!(whole.triangles.len(), counts.faces);
    }
}
