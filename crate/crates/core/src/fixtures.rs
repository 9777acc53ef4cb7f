//! Deterministic analytic meshes with known true surfaces.
//!
//! Placements are deliberately offset from the voxel lattice of power-of-two
//! resolutions so that no fixture face lies exactly on a grid plane.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh_io::TriangleMesh;

/// The fixture suite. [`make_fixture`] also accepts `hollow_cube`, which is
/// only used for visibility editing.
pub const FIXTURE_NAMES: [&str; 9] = [
    "plane",
    "disk",
    "cube",
    "sphere",
    "torus",
    "two_spheres",
    "nested_spheres",
    "thin_slab",
    "non_manifold_fan",
];

pub const PLANE_HEIGHT: f64 = 0.1;
pub const PLANE_HALF_EXTENT: f64 = 0.9;
pub const DISK_CENTER: [f64; 3] = [0.013, -0.021, 0.1];
pub const DISK_RADIUS: f64 = 0.7;
pub const CUBE_HALF: f64 = 0.51;
pub const SPHERE_RADIUS: f64 = 0.8;
pub const SPHERE_SUBDIVISIONS: u32 = 5;
pub const NESTED_INNER_RADIUS: f64 = 0.4;
pub const FAN_EDGE: [f64; 2] = [0.0123, 0.0371];

pub fn make_fixture(name: &str) -> Result<TriangleMesh> {
    Ok(match name {
        "plane" => plane(PLANE_HEIGHT),
        "disk" => disk(Vec3::from(DISK_CENTER), DISK_RADIUS, 96),
        "cube" => cube(),
        "sphere" => sphere(Vec3::zeros(), SPHERE_RADIUS, SPHERE_SUBDIVISIONS),
        "torus" => torus(Vec3::new(0.011, -0.007, 0.013), 0.55, 0.2, 128, 64),
        "two_spheres" => two_spheres(),
        "nested_spheres" => nested_spheres(),
        "thin_slab" => axis_box(Vec3::new(-0.6, -0.5, 0.013), Vec3::new(0.6, 0.5, 0.053)),
        "non_manifold_fan" => non_manifold_fan(),
        "hollow_cube" => hollow_cube(),
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

/// Axis-aligned square `[-0.9, 0.9]^2` at height `z`, normal `+z`.
pub fn plane(z: f64) -> TriangleMesh {
    let e = PLANE_HALF_EXTENT;
    TriangleMesh {
        vertices: vec![
            Vec3::new(-e, -e, z),
            Vec3::new(e, -e, z),
            Vec3::new(e, e, z),
            Vec3::new(-e, e, z),
        ],
        faces: vec![[0, 1, 2], [0, 2, 3]],
        ..Default::default()
    }
}

/// Flat open disk in the plane `z = center.z`, normal `+z`.
pub fn disk(center: Vec3, radius: f64, segments: u32) -> TriangleMesh {
    let mut vertices = vec![center];
    for s in 0..segments {
        let a = std::f64::consts::TAU * s as f64 / segments as f64;
        vertices.push(center + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0));
    }
    let faces = (0..segments)
        .map(|s| [0, 1 + s, 1 + (s + 1) % segments])
        .collect();
    TriangleMesh {
        vertices,
        faces,
        ..Default::default()
    }
}

/// Closed outward-oriented box.
pub fn axis_box(min: Vec3, max: Vec3) -> TriangleMesh {
    let v = |x: bool, y: bool, z: bool| {
        Vec3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = (0..8)
        .map(|i| v(i & 4 != 0, i & 2 != 0, i & 1 != 0))
        .collect();
    // Corner id = 4x + 2y + z.
    let faces = vec![
        [0, 1, 3],
        [0, 3, 2], // -x
        [4, 6, 7],
        [4, 7, 5], // +x
        [0, 4, 5],
        [0, 5, 1], // -y
        [2, 3, 7],
        [2, 7, 6], // +y
        [0, 2, 6],
        [0, 6, 4], // -z
        [1, 5, 7],
        [1, 7, 3], // +z
    ];
    TriangleMesh {
        vertices,
        faces,
        ..Default::default()
    }
}

pub fn cube_with(center: Vec3, half: f64) -> TriangleMesh {
    axis_box(center - Vec3::repeat(half), center + Vec3::repeat(half))
}

/// The default cube: half-size 0.51 centered at the origin.
pub fn cube() -> TriangleMesh {
    cube_with(Vec3::zeros(), CUBE_HALF)
}

pub fn cube_corners() -> Vec<Vec3> {
    cube().vertices
}

/// Icosphere with `subdivisions` midpoint refinements; every vertex lies on
/// the sphere, faces are outward oriented.
pub fn sphere(center: Vec3, radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut dirs: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|c| Vec3::from(*c).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
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
    for _ in 0..subdivisions {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, dirs: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                dirs.push(((dirs[a as usize] + dirs[b as usize]) * 0.5).normalize());
                (dirs.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut dirs);
            let bc = midpoint(b, c, &mut dirs);
            let ca = midpoint(c, a, &mut dirs);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh {
        vertices: dirs.iter().map(|d| center + d * radius).collect(),
        faces,
        ..Default::default()
    }
}

/// Torus around the `z` axis.
pub fn torus(center: Vec3, major: f64, minor: f64, rings: u32, sides: u32) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((rings * sides) as usize);
    for r in 0..rings {
        let u = std::f64::consts::TAU * r as f64 / rings as f64;
        for s in 0..sides {
            let v = std::f64::consts::TAU * s as f64 / sides as f64;
            let rad = major + minor * v.cos();
            vertices.push(center + Vec3::new(rad * u.cos(), rad * u.sin(), minor * v.sin()));
        }
    }
    let id = |r: u32, s: u32| (r % rings) * sides + (s % sides);
    let mut faces = Vec::with_capacity((2 * rings * sides) as usize);
    for r in 0..rings {
        for s in 0..sides {
            let (a, b, c, d) = (id(r, s), id(r + 1, s), id(r + 1, s + 1), id(r, s + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh {
        vertices,
        faces,
        ..Default::default()
    }
}

pub const TWO_SPHERES: [([f64; 3], f64); 2] = [([-0.45, 0.02, 0.01], 0.35), ([0.45, -0.01, 0.03], 0.35)];

pub fn two_spheres() -> TriangleMesh {
    let [(c0, r0), (c1, r1)] = TWO_SPHERES;
    sphere(Vec3::from(c0), r0, 4).merged(&sphere(Vec3::from(c1), r1, 4))
}

/// Outer sphere (outward) enclosing an inner cavity sphere (inward normals).
pub fn nested_spheres() -> TriangleMesh {
    let outer = sphere(Vec3::zeros(), SPHERE_RADIUS, SPHERE_SUBDIVISIONS);
    let inner = sphere(Vec3::zeros(), NESTED_INNER_RADIUS, 4).flipped();
    outer.merged(&inner)
}

/// Three triangles sharing one vertical edge: an open, non-manifold fan.
pub fn non_manifold_fan() -> TriangleMesh {
    let [x, y] = FAN_EDGE;
    let mut vertices = vec![Vec3::new(x, y, -0.6), Vec3::new(x, y, 0.6)];
    let mut faces = Vec::new();
    for (i, deg) in [10.0f64, 130.0, 250.0].into_iter().enumerate() {
        let a = deg.to_radians();
        vertices.push(Vec3::new(x + 0.7 * a.cos(), y + 0.7 * a.sin(), 0.05));
        faces.push([0, 1, 2 + i as u32]);
    }
    TriangleMesh {
        vertices,
        faces,
        ..Default::default()
    }
}

/// Closed cube shell with a small closed cube floating at its center.
pub fn hollow_cube() -> TriangleMesh {
    cube().merged(&cube_with(Vec3::new(0.013, -0.011, 0.017), 0.05))
}
