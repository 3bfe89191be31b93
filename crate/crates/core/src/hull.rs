//! Incremental convex hull in `D` dimensions (beneath-beyond with simplicial
//! facets). Used for the Ferrari–Canny metric in wrench space (`D = 6`) and
//! to triangulate point-sampled spheres (`D = 3`).

use std::collections::HashMap;

use nalgebra::{DMatrix, SVector};

/// A hull facet: `D` vertex indices and the supporting hyperplane
/// `normal · x = offset`, with `normal` unit length and pointing outward.
#[derive(Debug, Clone)]
pub struct Facet<const D: usize> {
    pub vertices: [usize; D],
    pub normal: SVector<f64, D>,
    pub offset: f64,
}

impl<const D: usize> Facet<D> {
    #[inline]
    pub fn signed_distance(&self, p: &SVector<f64, D>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

#[derive(Debug, Clone)]
pub struct ConvexHull<const D: usize> {
    pub facets: Vec<Facet<D>>,
    pub interior: SVector<f64, D>,
}

/// Unnormalised normal of the hyperplane through `D` points: the generalised
/// cross product of the edge vectors, computed by cofactor expansion.
pub fn hyperplane_normal<const D: usize>(pts: &[SVector<f64, D>; D]) -> SVector<f64, D> {
    let mut edges = DMatrix::<f64>::zeros(D - 1, D);
    for k in 1..D {
        for j in 0..D {
            edges[(k - 1, j)] = pts[k][j] - pts[0][j];
        }
    }
    let mut n = SVector::<f64, D>::zeros();
    for j in 0..D {
        let minor = edges.clone().remove_column(j);
        let det = minor.determinant();
        n[j] = if j % 2 == 0 { det } else { -det };
    }
    n
}

impl<const D: usize> ConvexHull<D> {
    /// Builds the hull, or returns `None` when the points span fewer than `D`
    /// affine dimensions (relative tolerance `eps`).
    pub fn build(points: &[SVector<f64, D>], eps: f64) -> Option<Self> {
        if points.len() < D + 1 {
            return None;
        }
        let scale = points.iter().map(|p| p.norm()).fold(1e-300, f64::max);
        let tol = eps * scale;
        let simplex = initial_simplex(points, tol)?;
        let interior = simplex
            .iter()
            .fold(SVector::<f64, D>::zeros(), |acc, &i| acc + points[i])
            / (D as f64 + 1.0);

        let mut hull = ConvexHull {
            facets: Vec::new(),
            interior,
        };
        for skip in 0..=D {
            let mut verts = [0usize; D];
            let mut k = 0;
            for (i, &v) in simplex.iter().enumerate() {
                if i != skip {
                    verts[k] = v;
                    k += 1;
                }
            }
            hull.facets.push(hull.make_facet(points, verts)?);
        }

        let in_simplex = |i: usize| simplex.contains(&i);
        for (pi, p) in points.iter().enumerate() {
            if in_simplex(pi) {
                continue;
            }
            let visible: Vec<usize> = hull
                .facets
                .iter()
                .enumerate()
                .filter(|(_, f)| f.signed_distance(p) > tol)
                .map(|(i, _)| i)
                .collect();
            if visible.is_empty() {
                continue;
            }
            let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
            for &fi in &visible {
                let verts = hull.facets[fi].vertices;
                for skip in 0..D {
                    let mut ridge: Vec<usize> = (0..D).filter(|&k| k != skip).map(|k| verts[k]).collect();
                    ridge.sort_unstable();
                    *ridges.entry(ridge).or_insert(0) += 1;
                }
            }
            let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
            horizon.sort();

            let mut keep = vec![true; hull.facets.len()];
            for &fi in &visible {
                keep[fi] = false;
            }
            let mut k = 0;
            hull.facets.retain(|_| {
                let r = keep[k];
                k += 1;
                r
            });
            for ridge in horizon {
                let mut verts = [0usize; D];
                verts[..D - 1].copy_from_slice(&ridge);
                verts[D - 1] = pi;
                if let Some(f) = hull.make_facet(points, verts) {
                    hull.facets.push(f);
                }
            }
        }
        Some(hull)
    }

    fn make_facet(&self, points: &[SVector<f64, D>], vertices: [usize; D]) -> Option<Facet<D>> {
        let pts: [SVector<f64, D>; D] = std::array::from_fn(|k| points[vertices[k]]);
        let raw = hyperplane_normal(&pts);
        let len = raw.norm();
        if len == 0.0 || !len.is_finite() {
            return None;
        }
        let mut normal = raw / len;
        let mut offset = normal.dot(&pts[0]);
        if normal.dot(&self.interior) - offset > 0.0 {
            normal = -normal;
            offset = -offset;
        }
        Some(Facet {
            vertices,
            normal,
            offset,
        })
    }

    /// Radius of the largest origin-centred ball inside the hull; zero when
    /// the origin is not strictly interior.
    pub fn inscribed_radius_at_origin(&self, tol: f64) -> f64 {
        let mut r = f64::INFINITY;
        for f in &self.facets {
            // distance from origin to the facet plane, positive inside
            let d = f.offset;
            if d <= tol {
                return 0.0;
            }
            r = r.min(d);
        }
        if r.is_finite() {
            r
        } else {
            0.0
        }
    }
}

/// Picks `D + 1` affinely independent points greedily, each maximising the
/// distance to the affine hull of those already chosen.
fn initial_simplex<const D: usize>(points: &[SVector<f64, D>], tol: f64) -> Option<Vec<usize>> {
    let first = 0usize;
    let mut chosen = vec![first];
    // orthonormal basis of the current affine span (relative to points[first])
    let mut basis: Vec<SVector<f64, D>> = Vec::new();
    while chosen.len() < D + 1 {
        let mut best = (usize::MAX, tol);
        for (i, p) in points.iter().enumerate() {
            let mut r = p - points[first];
            for b in &basis {
                r -= b * b.dot(&r);
            }
            let d = r.norm();
            if d > best.1 {
                best = (i, d);
            }
        }
        if best.0 == usize::MAX {
            return None;
        }
        let mut r = points[best.0] - points[first];
        for b in &basis {
            r -= b * b.dot(&r);
        }
        basis.push(r.normalize());
        chosen.push(best.0);
    }
    Some(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn cube_hull_has_twelve_triangles() {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Vector3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            ));
        }
        pts.push(Vector3::new(0.1, 0.2, -0.3));
        let hull = ConvexHull::<3>::build(&pts, 1e-12).unwrap();
        assert_eq!(hull.facets.len(), 12);
        assert!((hull.inscribed_radius_at_origin(1e-12) - 1.0).abs() < 1e-12);
        for f in &hull.facets {
            assert!(!f.vertices.contains(&8));
        }
    }

    #[test]
    fn flat_point_set_is_rejected() {
        let pts: Vec<_> = (0..10).map(|i| Vector3::new(i as f64, (i * i) as f64, 0.0)).collect();
        assert!(ConvexHull::<3>::build(&pts, 1e-12).is_none());
    }

    #[test]
    fn origin_outside_gives_zero_radius() {
        let pts = vec![
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(2.0, 0.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(1.0, 0.0, 1.0),
        ];
        let hull = ConvexHull::<3>::build(&pts, 1e-12).unwrap();
        assert_eq!(hull.inscribed_radius_at_origin(1e-12), 0.0);
    }
}
