//! Static 3-d tree over mesh vertices with exact nearest-neighbour queries.
//!
//! Ties are broken toward the lowest point index so results are reproducible
//! regardless of build order.

use nalgebra::Vector3;

const LEAF_SIZE: usize = 8;

/// Squared Euclidean distance. Every nearest-neighbour comparison in the
/// crate goes through this so brute-force checks agree bit for bit.
#[inline]
pub fn dist2(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl KdTree {
    pub fn build(points: &[Vector3<f64>]) -> Self {
        let mut tree = KdTree {
            nodes: Vec::new(),
            order: (0..points.len()).collect(),
        };
        if !points.is_empty() {
            let n = points.len();
            tree.build_node(points, 0, n);
        }
        tree
    }

    fn build_node(&mut self, points: &[Vector3<f64>], start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[start..end] {
            lo = lo.inf(&points[i]);
            hi = hi.sup(&points[i]);
        }
        let axis = (hi - lo).imax();
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][axis].total_cmp(&points[b][axis]).then(a.cmp(&b))
        });
        let value = points[self.order[mid]][axis];
        self.nodes.push(Node::Split {
            axis,
            value,
            left: 0,
            right: 0,
        });
        let left = self.build_node(points, start, mid);
        let right = self.build_node(points, mid, end);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id] {
            *l = left;
            *r = right;
        }
        id
    }

    /// Index and squared distance of the point nearest to `query`.
    /// Returns `None` only for an empty tree.
    pub fn nearest(&self, points: &[Vector3<f64>], query: &Vector3<f64>) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, points, query, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, points: &[Vector3<f64>], q: &Vector3<f64>, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d = dist2(&points[i], q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, points, q, best);
                // `<=` keeps equal-distance candidates on the far side reachable
                if diff * diff <= best.1 {
                    self.search(far, points, q, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[Vector3<f64>], q: &Vector3<f64>) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }

    #[test]
    fn matches_brute_force_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..2000)
            .map(|_| Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..500 {
            let q = Vector3::new(
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
                rng.random_range(-0.5..1.5),
            );
            assert_eq!(tree.nearest(&pts, &q).unwrap(), brute(&pts, &q));
        }
    }

    #[test]
    fn duplicate_points_resolve_to_lowest_index() {
        let mut pts = vec![Vector3::new(1.0, 1.0, 1.0); 40];
        pts.push(Vector3::zeros());
        let tree = KdTree::build(&pts);
        assert_eq!(tree.nearest(&pts, &Vector3::new(0.9, 1.0, 1.0)).unwrap().0, 0);
    }

    #[test]
    fn empty_tree_has_no_neighbour() {
        let tree = KdTree::build(&[]);
        assert!(tree.nearest(&[], &Vector3::zeros()).is_none());
    }
}
