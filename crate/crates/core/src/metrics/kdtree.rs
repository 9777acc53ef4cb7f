use crate::geom::{Aabb, Vec3};

const LEAF: usize = 8;

enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Static 3D kd-tree for exact nearest-neighbor queries.
///
/// Ties on distance resolve to the lowest point index.
pub struct KdTree {
    points: Vec<Vec3>,
    order: Vec<u32>,
    nodes: Vec<Node>,
    bounds: Vec<Aabb>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let bounds = Aabb::from_points(self.order[start..end].iter().map(|&i| &self.points[i as usize]));
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        self.bounds.push(bounds);
        if end - start <= LEAF {
            return id;
        }
        let axis = bounds.extent().imax();
        let mid = (start + end) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize][axis].total_cmp(&points[b as usize][axis]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid] as usize][axis];
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Squared distance to and index of the nearest point, `None` if empty.
    pub fn nearest(&self, q: &Vec3) -> Option<(f64, usize)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if self.bounds[id].distance_squared(q) > best.0 {
                continue;
            }
            match self.nodes[id] {
                Node::Leaf { start, end } => {
                    for &i in &self.order[start..end] {
                        let d = (self.points[i as usize] - q).norm_squared();
                        if (d, i as usize) < best {
                            best = (d, i as usize);
                        }
                    }
                }
                Node::Split { axis, value, left, right } => {
                    let (near, far) = if q[axis] < value { (left, right) } else { (right, left) };
                    stack.push(far);
                    stack.push(near);
                }
            }
        }
        Some(best)
    }
}
