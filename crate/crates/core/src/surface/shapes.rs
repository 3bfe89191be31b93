//! Procedural test objects. All shapes are built around the origin with
//! outward (counter-clockwise) winding, in meters.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RawMesh, SurfaceModel};
use crate::hull::ConvexHull;

fn build(raw: RawMesh) -> SurfaceModel {
    SurfaceModel::from_raw(raw).expect("procedural meshes are well formed")
}

/// Axis-aligned cube of edge `side`: 8 vertices, 12 triangles.
pub fn cube_raw(side: f64) -> RawMesh {
    let h = side / 2.0;
    let positions = (0..8)
        .map(|i| {
            Vector3::new(
                if i & 1 == 0 { -h } else { h },
                if i & 2 == 0 { -h } else { h },
                if i & 4 == 0 { -h } else { h },
            )
        })
        .collect();
    let triangles = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    RawMesh {
        positions,
        triangles,
        normals: None,
    }
}

pub fn cube(side: f64) -> SurfaceModel {
    build(cube_raw(side))
}

/// Surface of revolution about the z axis from a profile `t -> (z, rho)`
/// sampled at `n_lat + 1` points with poles at both ends.
fn revolve(n_lat: usize, n_lon: usize, profile: impl Fn(f64) -> (f64, f64)) -> RawMesh {
    assert!(n_lat >= 2 && n_lon >= 3);
    let mut positions = Vec::with_capacity((n_lat - 1) * n_lon + 2);
    let (z0, _) = profile(0.0);
    positions.push(Vector3::new(0.0, 0.0, z0));
    for i in 1..n_lat {
        let (z, rho) = profile(i as f64 / n_lat as f64);
        for j in 0..n_lon {
            let phi = 2.0 * PI * j as f64 / n_lon as f64;
            positions.push(Vector3::new(rho * phi.cos(), rho * phi.sin(), z));
        }
    }
    let (z1, _) = profile(1.0);
    positions.push(Vector3::new(0.0, 0.0, z1));
    let south = positions.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * n_lon + (j % n_lon);

    let mut triangles = Vec::new();
    // profile runs from +z (t=0) down to -z (t=1)
    for j in 0..n_lon {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..n_lat - 1 {
        for j in 0..n_lon {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, b]);
            triangles.push([b, c, d]);
        }
    }
    for j in 0..n_lon {
        triangles.push([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)]);
    }
    RawMesh {
        positions,
        triangles,
        normals: None,
    }
}

/// Latitude/longitude sphere with `(n_lat - 1) * n_lon + 2` vertices.
pub fn uv_sphere_raw(radius: f64, n_lat: usize, n_lon: usize) -> RawMesh {
    revolve(n_lat, n_lon, |t| {
        let theta = PI * t;
        (radius * theta.cos(), radius * theta.sin())
    })
}

pub fn uv_sphere(radius: f64, n_lat: usize, n_lon: usize) -> SurfaceModel {
    build(uv_sphere_raw(radius, n_lat, n_lon))
}

/// Sphere sampled at exactly `n` near-uniform points (Fibonacci lattice),
/// triangulated by its convex hull.
pub fn fibonacci_sphere(radius: f64, n: usize) -> SurfaceModel {
    assert!(n >= 4);
    let golden = PI * (3.0 - 5f64.sqrt());
    let positions: Vec<Vector3<f64>> = (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z) * radius
        })
        .collect();
    let hull = ConvexHull::<3>::build(&positions, 1e-12).expect("sphere samples span 3-d");
    let triangles = hull
        .facets
        .iter()
        .map(|f| {
            let [a, b, c] = f.vertices;
            let n = (positions[b] - positions[a]).cross(&(positions[c] - positions[a]));
            if n.dot(&f.normal) >= 0.0 {
                [a, b, c]
            } else {
                [a, c, b]
            }
        })
        .collect();
    build(RawMesh {
        positions,
        triangles,
        normals: None,
    })
}

/// Box with each face split into a grid of roughly `spacing`-sized cells.
pub fn box_raw(half: Vector3<f64>, spacing: f64) -> RawMesh {
    let steps = half.map(|h| ((2.0 * h / spacing).ceil() as usize).max(1));
    let coord = |axis: usize, k: usize| -half[axis] + 2.0 * half[axis] * k as f64 / steps[axis] as f64;
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for sign in [-1.0, 1.0] {
            let base = positions.len();
            for i in 0..=steps[u] {
                for j in 0..=steps[v] {
                    let mut p = Vector3::zeros();
                    p[axis] = sign * half[axis];
                    p[u] = coord(u, i);
                    p[v] = coord(v, j);
                    positions.push(p);
                }
            }
            let idx = |i: usize, j: usize| base + i * (steps[v] + 1) + j;
            for i in 0..steps[u] {
                for j in 0..steps[v] {
                    let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                    // (u x v) is +axis, so this order faces +axis
                    if sign > 0.0 {
                        triangles.push([a, b, d]);
                        triangles.push([a, d, c]);
                    } else {
                        triangles.push([a, d, b]);
                        triangles.push([a, c, d]);
                    }
                }
            }
        }
    }
    RawMesh {
        positions,
        triangles,
        normals: None,
    }
}

pub fn box_mesh(half: Vector3<f64>, spacing: f64) -> SurfaceModel {
    build(box_raw(half, spacing))
}

/// Torus in the xy plane.
pub fn torus(major: f64, minor: f64, n_major: usize, n_minor: usize) -> SurfaceModel {
    let mut positions = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = 2.0 * PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = 2.0 * PI * j as f64 / n_minor as f64;
            let rho = major + minor * v.cos();
            positions.push(Vector3::new(rho * u.cos(), rho * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut triangles = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    build(RawMesh {
        positions,
        triangles,
        normals: None,
    })
}

/// Irregular closed blob standing in for a scanned organic object: a lumpy,
/// anisotropic sphere with a little per-vertex scanner noise.
/// Vertex count is `(n_lat - 1) * n_lon + 2`.
pub fn scan_blob_raw(n_lat: usize, n_lon: usize, seed: u64) -> RawMesh {
    let mut raw = uv_sphere_raw(1.0, n_lat, n_lon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = raw.positions.len() - 1;
    for (i, p) in raw.positions.iter_mut().enumerate() {
        let theta = p.z.clamp(-1.0, 1.0).acos();
        let phi = p.y.atan2(p.x);
        let lump = 1.0
            + 0.12 * (2.0 * theta).cos() * (phi).cos()
            + 0.08 * (3.0 * phi).sin() * theta.sin()
            + 0.05 * (4.0 * theta + phi).cos();
        let noise = if i == 0 || i == last {
            0.0
        } else {
            rng.random_range(-1.0..1.0) * 2e-3
        };
        let r = lump + noise;
        *p = Vector3::new(0.045 * r * p.x, 0.036 * r * p.y, 0.04 * r * p.z);
    }
    raw
}

pub fn scan_blob(n_lat: usize, n_lon: usize, seed: u64) -> SurfaceModel {
    build(scan_blob_raw(n_lat, n_lon, seed))
}

/// Screwdriver-like tool along the z axis: a fat handle tapering into a
/// thin shaft.
pub fn tool(length: f64, handle_radius: f64, shaft_radius: f64, n_lat: usize, n_lon: usize) -> SurfaceModel {
    let raw = revolve(n_lat, n_lon, |t| {
        let s = PI * t;
        let z = length / 2.0 * s.cos();
        // handle occupies z > 0, shaft z < 0
        let blend = 1.0 / (1.0 + (-(z - 0.05 * length) / (0.04 * length)).exp());
        let rho = shaft_radius + (handle_radius - shaft_radius) * blend;
        (z, rho * s.sin().powf(0.3))
    });
    build(raw)
}

/// Thin rectangular plate in the xy plane.
pub fn plate(width: f64, depth: f64, thickness: f64, spacing: f64) -> SurfaceModel {
    box_mesh(Vector3::new(width / 2.0, depth / 2.0, thickness / 2.0), spacing)
}

/// The five reference objects used by the acceptance suite, benches and
/// examples: sphere, box, torus, scanned blob (about 45K vertices) and an
/// elongated tool.
pub fn fixture_set() -> Vec<(&'static str, SurfaceModel)> {
    vec![
        ("sphere", uv_sphere(0.04, 120, 240)),
        ("box", box_mesh(Vector3::new(0.03, 0.025, 0.05), 0.002)),
        ("torus", torus(0.04, 0.015, 240, 90)),
        ("blob", scan_blob(151, 300, 7)),
        ("tool", tool(0.24, 0.035, 0.008, 200, 64)),
    ]
}
