use crate::geom::{closest_point_on_triangle, Aabb, Vec3};
use crate::mesh_io::TriangleMesh;

const LEAF: usize = 4;

struct Node {
    bounds: Aabb,
    /// Leaf: range into `faces`; inner: `start` is the left child, `end` the right.
    start: usize,
    end: usize,
    leaf: bool,
}

/// Closest-point hit on a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceHit {
    pub point: Vec3,
    pub distance_squared: f64,
    pub face: u32,
    pub barycentric: [f64; 3],
}

/// Bounding volume hierarchy over a subset of a mesh's faces for exact
/// closest-point queries. Ties resolve to the lowest face index.
pub struct TriangleBvh {
    tris: Vec<[Vec3; 3]>,
    faces: Vec<u32>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(mesh: &TriangleMesh) -> Self {
        Self::with_faces(mesh, (0..mesh.faces.len() as u32).collect())
    }

    pub fn with_faces(mesh: &TriangleMesh, faces: Vec<u32>) -> Self {
        let mut faces = faces;
        let centroids: Vec<Vec3> = (0..mesh.faces.len())
            .map(|f| {
                let t = mesh.triangle(f);
                (t[0] + t[1] + t[2]) / 3.0
            })
            .collect();
        let mut nodes = Vec::new();
        if !faces.is_empty() {
            let n = faces.len();
            build(mesh, &centroids, &mut faces, 0, n, &mut nodes);
        }
        let tris = faces.iter().map(|&f| mesh.triangle(f as usize)).collect();
        TriangleBvh { tris, faces, nodes }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn closest(&self, p: &Vec3) -> Option<SurfaceHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<SurfaceHit> = None;
        let mut best_d = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.bounds.distance_squared(p) > best_d {
                continue;
            }
            if node.leaf {
                for slot in node.start..node.end {
                    let t = &self.tris[slot];
                    let (q, bary) = closest_point_on_triangle(p, &t[0], &t[1], &t[2]);
                    let d = (q - p).norm_squared();
                    let face = self.faces[slot];
                    let better = match &best {
                        None => true,
                        Some(b) => d < best_d || (d == best_d && face < b.face),
                    };
                    if better {
                        best_d = d;
                        best = Some(SurfaceHit {
                            point: q,
                            distance_squared: d,
                            face,
                            barycentric: bary,
                        });
                    }
                }
            } else {
                let (l, r) = (node.start, node.end);
                let dl = self.nodes[l].bounds.distance_squared(p);
                let dr = self.nodes[r].bounds.distance_squared(p);
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }
}

fn build(
    mesh: &TriangleMesh,
    centroids: &[Vec3],
    faces: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &f in &faces[start..end] {
        for v in mesh.triangle(f as usize) {
            bounds.grow(&v);
        }
        cbounds.grow(&centroids[f as usize]);
    }
    let id = nodes.len();
    nodes.push(Node {
        bounds,
        start,
        end,
        leaf: true,
    });
    if end - start <= LEAF {
        return id;
    }
    let axis = cbounds.extent().imax();
    let mid = (start + end) / 2;
    faces[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let left = build(mesh, centroids, faces, start, mid, nodes);
    let right = build(mesh, centroids, faces, mid, end, nodes);
    nodes[id] = Node {
        bounds,
        start: left,
        end: right,
        leaf: false,
    };
    id
}
