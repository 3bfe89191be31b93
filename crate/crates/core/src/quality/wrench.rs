use nalgebra::{DMatrix, SVector, Vector3, Vector6};

use crate::hull::ConvexHull;
use crate::kinematics::contact_frame;

pub fn grasp_isotropy(g: &DMatrix<f64>) -> f64 {
    let sv = g.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max <= 0.0 {
        return 0.0;
    }
    (sv.min() / max).clamp(0.0, 1.0)
}

pub fn wrench_volume(g: &DMatrix<f64>) -> f64 {
    let det = (g * g.transpose()).determinant();
    if det <= 0.0 {
        0.0
    } else {
        det.sqrt()
    }
}

/// Unit forces along `m_edges` edges of the friction cone of a contact with
/// outward normal `normal`.
pub fn friction_edges(normal: &Vector3<f64>, mu: f64, m_edges: usize) -> Option<Vec<Vector3<f64>>> {
    let frame = contact_frame(&-normal)?;
    let (t1, t2, n) = (frame.column(0), frame.column(1), frame.column(2));
    Some(
        (0..m_edges)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m_edges as f64;
                (n + (t1 * a.cos() + t2 * a.sin()) * mu).normalize()
            })
            .collect(),
    )
}

/// Primitive contact wrenches with torques scaled by the inverse of the
/// largest contact radius.
pub fn wrench_points(
    contacts: &[Vector3<f64>],
    normals: &[Vector3<f64>],
    mu: f64,
    m_edges: usize,
) -> Option<Vec<Vector6<f64>>> {
    let radius = contacts.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale = if radius > 0.0 { 1.0 / radius } else { 1.0 };
    let mut out = Vec::with_capacity(contacts.len() * m_edges);
    for (c, n) in contacts.iter().zip(normals) {
        for f in friction_edges(n, mu, m_edges)? {
            let t = c.cross(&f) * scale;
            out.push(Vector6::new(f.x, f.y, f.z, t.x, t.y, t.z));
        }
    }
    Some(out)
}

/// Radius of the largest origin-centred ball inside the convex hull of the
/// discretised contact wrenches; zero when the origin is outside or the hull
/// is degenerate.
pub fn ferrari_canny(contacts: &[Vector3<f64>], normals: &[Vector3<f64>], mu: f64, m_edges: usize) -> f64 {
    assert!(mu > 0.0 && m_edges >= 3, "ferrari_canny needs mu > 0 and m_edges >= 3");
    let Some(points) = wrench_points(contacts, normals, mu, m_edges) else {
        return 0.0;
    };
    let points: Vec<SVector<f64, 6>> = points.into_iter().collect();
    match ConvexHull::<6>::build(&points, 1e-10) {
        Some(hull) => hull.inscribed_radius_at_origin(1e-12),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::hyperplane_normal;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_g(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(6, 9, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn orthonormal_rows_give_unit_metrics() {
        let mut g = DMatrix::zeros(6, 9);
        for i in 0..6 {
            g[(i, i + 1)] = 1.0;
        }
        assert!((grasp_isotropy(&g) - 1.0).abs() < 1e-12);
        assert!((wrench_volume(&g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = random_g(&mut rng);
        let row = g.row(0).into_owned();
        g.row_mut(5).copy_from(&row);
        assert!(grasp_isotropy(&g) < 1e-12);
        assert!(wrench_volume(&g) < 1e-6);
        assert_eq!(grasp_isotropy(&DMatrix::zeros(6, 9)), 0.0);
        assert_eq!(wrench_volume(&DMatrix::zeros(6, 9)), 0.0);
    }

    #[test]
    fn isotropy_matches_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let g = random_g(&mut rng);
            let eig = SymmetricEigen::new(&g * g.transpose()).eigenvalues;
            let expected = (eig.min() / eig.max()).sqrt();
            assert!((grasp_isotropy(&g) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn volume_matches_singular_value_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g = random_g(&mut rng);
            let prod: f64 = g.clone().svd(false, false).singular_values.iter().product();
            assert!((wrench_volume(&g) - prod).abs() <= 1e-9 * prod.max(1.0));
        }
    }

    #[test]
    fn cone_edges_lie_on_the_cone() {
        let n = Vector3::new(0.2, -0.5, 0.8).normalize();
        for f in friction_edges(&n, 0.5, 8).unwrap() {
            assert!((f.norm() - 1.0).abs() < 1e-12);
            let cos = f.dot(&-n);
            assert!((cos - 1.0 / (1.0f64 + 0.25).sqrt()).abs() < 1e-12);
        }
    }

    /// Exhaustive oracle: every 6-subset whose hyperplane supports the whole
    /// point set is a candidate facet; the inscribed radius is the smallest
    /// origin distance among them.
    fn brute_force_radius(points: &[Vector6<f64>]) -> f64 {
        let n = points.len();
        let mut best = f64::INFINITY;
        let mut idx = [0usize, 1, 2, 3, 4, 5];
        loop {
            let pts: [SVector<f64, 6>; 6] = std::array::from_fn(|k| points[idx[k]]);
            let normal = hyperplane_normal(&pts);
            let len = normal.norm();
            if len > 1e-10 {
                let u = normal / len;
                let off = u.dot(&pts[0]);
                let side: Vec<f64> = points.iter().map(|p| u.dot(p) - off).collect();
                let tol = 1e-9;
                let (above, below) = (side.iter().all(|&s| s <= tol), side.iter().all(|&s| s >= -tol));
                if above {
                    best = best.min(if off > 0.0 { off } else { 0.0 });
                } else if below {
                    best = best.min(if off < 0.0 { -off } else { 0.0 });
                }
            }
            // next combination
            let mut i = 6;
            loop {
                if i == 0 {
                    return if best.is_finite() { best } else { 0.0 };
                }
                i -= 1;
                if idx[i] < n - 6 + i {
                    idx[i] += 1;
                    for j in i + 1..6 {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn tripod() -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
        let c: Vec<_> = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                Vector3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        (c.clone(), c)
    }

    #[test]
    fn tripod_matches_facet_enumeration() {
        let (c, n) = tripod();
        let fc = ferrari_canny(&c, &n, 0.5, 8);
        let oracle = brute_force_radius(&wrench_points(&c, &n, 0.5, 8).unwrap());
        assert!(fc > 0.0);
        assert!((fc - oracle).abs() < 1e-6, "{fc} vs {oracle}");
    }

    #[test]
    fn antipodal_pair_has_no_margin() {
        let c = vec![Vector3::x(), -Vector3::x()];
        let fc = ferrari_canny(&c, &c, 0.5, 8);
        assert_eq!(fc, 0.0);
        let pts = wrench_points(&c, &c, 0.5, 8).unwrap();
        assert!(ConvexHull::<6>::build(&pts, 1e-10).is_none());
    }

    #[test]
    fn random_grasps_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..4 {
            let c: Vec<_> = (0..3)
                .map(|_| {
                    Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-0.3..0.3),
                    )
                })
                .collect();
            let n: Vec<_> = c
                .iter()
                .map(|p| p + Vector3::new(rng.random_range(-0.3..0.3), 0.0, 0.0))
                .collect();
            let fc = ferrari_canny(&c, &n, 0.6, 8);
            let oracle = brute_force_radius(&wrench_points(&c, &n, 0.6, 8).unwrap());
            assert!((fc - oracle).abs() < 1e-6, "{fc} vs {oracle}");
        }
    }

    #[test]
    fn larger_friction_never_hurts() {
        let (c, n) = tripod();
        let mut last = 0.0;
        for mu in [0.2, 0.3, 0.5, 0.8, 1.2] {
            let fc = ferrari_canny(&c, &n, mu, 8);
            assert!(fc >= last - 1e-12);
            last = fc;
        }
    }
}
