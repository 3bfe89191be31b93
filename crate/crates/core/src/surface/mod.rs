//! Object surface: an immutable, indexed triangle mesh.

mod io;
mod kdtree;
pub mod shapes;

use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_mesh, parse_mesh, MeshFormat, RawMesh};
pub use kdtree::{dist2, KdTree};

/// Axis-aligned bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn from_points(points: &[Vector3<f64>]) -> Self {
        let mut min = Vector3::repeat(f64::INFINITY);
        let mut max = Vector3::repeat(f64::NEG_INFINITY);
        for p in points {
            min = min.inf(p);
            max = max.sup(p);
        }
        Aabb { min, max }
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.min + self.max) * 0.5
    }
}

/// A contact location snapped to a mesh vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub position: Vector3<f64>,
    /// Unit outward normal.
    pub normal: Vector3<f64>,
    pub vertex_id: usize,
}

#[derive(Debug, Clone)]
pub struct SurfaceModel {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    vertex_normals: Vec<Vector3<f64>>,
    index: KdTree,
    bbox: Aabb,
    offset: Vector3<f64>,
}

impl SurfaceModel {
    /// Builds a model from raw geometry: merges bit-identical vertices,
    /// estimates missing normals from area-weighted face normals, and
    /// translates the vertex centroid to the origin.
    pub fn from_raw(raw: RawMesh) -> Result<Self> {
        let RawMesh {
            positions,
            triangles,
            normals,
        } = raw;
        if triangles.is_empty() {
            return Err(Error::DegenerateMesh("mesh has no triangles".into()));
        }
        if let Some(n) = &normals {
            if n.len() != positions.len() {
                return Err(Error::DegenerateMesh(format!(
                    "{} normals for {} vertices",
                    n.len(),
                    positions.len()
                )));
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= positions.len()) {
                return Err(Error::DegenerateMesh(format!(
                    "triangle {t} references vertex {bad} of {}",
                    positions.len()
                )));
            }
        }

        // merge duplicates
        let key = |p: &Vector3<f64>| {
            // +0.0 and -0.0 must hash the same
            [p.x + 0.0, p.y + 0.0, p.z + 0.0].map(f64::to_bits)
        };
        let mut remap = Vec::with_capacity(positions.len());
        let mut seen: HashMap<[u64; 3], usize> = HashMap::with_capacity(positions.len());
        let mut vertices = Vec::with_capacity(positions.len());
        let mut given: Vec<Vector3<f64>> = Vec::new();
        for (i, p) in positions.iter().enumerate() {
            let id = *seen.entry(key(p)).or_insert_with(|| {
                vertices.push(*p);
                if normals.is_some() {
                    given.push(Vector3::zeros());
                }
                vertices.len() - 1
            });
            if let Some(n) = &normals {
                given[id] += n[i];
            }
            remap.push(id);
        }
        let triangles: Vec<[usize; 3]> = triangles
            .iter()
            .map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]])
            .collect();

        let centroid = vertices.iter().fold(Vector3::zeros(), |a, v| a + v) / vertices.len() as f64;
        for v in &mut vertices {
            *v -= centroid;
        }

        let estimated = estimate_normals(&vertices, &triangles);
        let vertex_normals = (0..vertices.len())
            .map(|i| {
                let candidate = given.get(i).copied().unwrap_or_else(Vector3::zeros);
                if let Some(n) = candidate.try_normalize(1e-300) {
                    return n;
                }
                if let Some(n) = estimated[i].try_normalize(1e-300) {
                    return n;
                }
                vertices[i].try_normalize(1e-300).unwrap_or_else(Vector3::z)
            })
            .collect();

        let index = KdTree::build(&vertices);
        let bbox = Aabb::from_points(&vertices);
        Ok(SurfaceModel {
            vertices,
            triangles,
            vertex_normals,
            index,
            bbox,
            offset: centroid,
        })
    }

    /// Uniformly scales the model about the origin.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
        }
        let mut out = Self::from_raw(RawMesh {
            positions: self.vertices.iter().map(|v| v * scale).collect(),
            triangles: self.triangles.clone(),
            normals: Some(self.vertex_normals.clone()),
        })?;
        out.offset += self.offset * scale;
        Ok(out)
    }

    /// Translation removed when centring: a model-frame point `p` sits at
    /// `p + offset()` in the source file's frame.
    pub fn offset(&self) -> Vector3<f64> {
        self.offset
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> &[Vector3<f64>] {
        &self.vertex_normals
    }

    pub fn bbox(&self) -> &Aabb {
        &self.bbox
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn point(&self, vertex_id: usize) -> SurfacePoint {
        SurfacePoint {
            position: self.vertices[vertex_id],
            normal: self.vertex_normals[vertex_id],
            vertex_id,
        }
    }

    /// Closest mesh vertex to `p`; ties go to the lowest vertex id.
    pub fn nearest_neighbor(&self, p: &Vector3<f64>) -> SurfacePoint {
        let (id, _) = self
            .index
            .nearest(&self.vertices, p)
            .expect("surface models always hold at least one vertex");
        self.point(id)
    }

    /// Voxel-grid centroids: one point per occupied cell of edge `cell`,
    /// ordered by cell index.
    pub fn downsample(&self, cell: f64) -> Result<Vec<Vector3<f64>>> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::Parameter(format!("downsample cell must be > 0, got {cell}")));
        }
        let mut cells: BTreeMap<[i64; 3], (Vector3<f64>, usize)> = BTreeMap::new();
        for v in &self.vertices {
            let rel = (v - self.bbox.min) / cell;
            let k = [rel.x.floor() as i64, rel.y.floor() as i64, rel.z.floor() as i64];
            let e = cells.entry(k).or_insert((Vector3::zeros(), 0));
            e.0 += v;
            e.1 += 1;
        }
        Ok(cells.into_values().map(|(s, n)| s / n as f64).collect())
    }
}

/// Area-weighted vertex normals (unnormalised sums of face cross products).
fn estimate_normals(vertices: &[Vector3<f64>], triangles: &[[usize; 3]]) -> Vec<Vector3<f64>> {
    let mut acc = vec![Vector3::zeros(); vertices.len()];
    for t in triangles {
        let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        let n = (b - a).cross(&(c - a));
        for &i in t {
            acc[i] += n;
        }
    }
    acc
}
