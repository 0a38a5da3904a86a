use super::{closest_point_on_triangle, Vec3};

const LEAF_SIZE: usize = 4;

/// Distances closer than this are treated as ties and resolved by face id.
pub(crate) const TIE_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            lo: self.lo.inf(&o.lo),
            hi: self.hi.sup(&o.hi),
        }
    }

    fn distance_sq(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.lo[k] {
                self.lo[k] - p[k]
            } else if p[k] > self.hi[k] {
                p[k] - self.hi[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, len: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Axis-aligned bounding-volume hierarchy over mesh faces, median split,
/// at most four faces per leaf.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(vertices: &[Vec3], faces: &[[usize; 3]]) -> Self {
        let boxes: Vec<Aabb> = faces
            .iter()
            .map(|t| {
                let mut b = Aabb::empty();
                for &v in t {
                    b.grow(&vertices[v]);
                }
                b
            })
            .collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| (b.lo + b.hi) * 0.5).collect();
        let mut order: Vec<usize> = (0..faces.len()).collect();
        let mut nodes = Vec::with_capacity(2 * faces.len() / LEAF_SIZE + 1);
        Self::split(&mut nodes, &mut order, 0, &boxes, &centroids);
        Bvh { nodes, order }
    }

    fn split(
        nodes: &mut Vec<Node>,
        order: &mut [usize],
        offset: usize,
        boxes: &[Aabb],
        centroids: &[Vec3],
    ) -> usize {
        let bounds = order
            .iter()
            .fold(Aabb::empty(), |acc, &f| acc.union(&boxes[f]));
        let id = nodes.len();
        if order.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                bounds,
                start: offset,
                len: order.len(),
            });
            return id;
        }
        let mut cb = Aabb::empty();
        for &f in order.iter() {
            cb.grow(&centroids[f]);
        }
        let ext = cb.hi - cb.lo;
        let axis = ext.imax();
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        // placeholder, patched once both children exist
        nodes.push(Node::Leaf {
            bounds,
            start: 0,
            len: 0,
        });
        let (lo, hi) = order.split_at_mut(mid);
        let left = Self::split(nodes, lo, offset, boxes, centroids);
        let right = Self::split(nodes, hi, offset + mid, boxes, centroids);
        nodes[id] = Node::Inner {
            bounds,
            left,
            right,
        };
        id
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let b = self.nodes[0].bounds();
        (b.lo, b.hi)
    }

    /// Closest face and barycentric weights for `p`.
    pub fn closest(
        &self,
        vertices: &[Vec3],
        faces: &[[usize; 3]],
        p: &Vec3,
    ) -> (usize, [f64; 3]) {
        let mut best_d = f64::INFINITY;
        let mut best = (usize::MAX, [1.0, 0.0, 0.0]);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let bd = node.bounds().distance_sq(p).sqrt();
            if bd > best_d + TIE_TOLERANCE {
                continue;
            }
            match *node {
                Node::Leaf { start, len, .. } => {
                    for &f in &self.order[start..start + len] {
                        let [a, b, c] = faces[f].map(|v| vertices[v]);
                        let (q, bary) = closest_point_on_triangle(p, &a, &b, &c);
                        let d = (q - p).norm();
                        let better = d < best_d - TIE_TOLERANCE
                            || (d <= best_d + TIE_TOLERANCE && f < best.0);
                        if better {
                            best_d = best_d.min(d);
                            best = (f, bary);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_sq(p);
                    let dr = self.nodes[right].bounds().distance_sq(p);
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }
}
