use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fct::FctEncoding;
use crate::geom::Vec3;
use crate::voxelizer::{VoxelGrid, VoxelIndex};

pub const DEFAULT_DIRECTIONS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityReport {
    /// Unoccluded fraction of directions, per token in encoding order.
    pub probabilities: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

/// `n` near-uniform unit vectors on a golden-angle spiral, rotated by a
/// uniformly random rotation drawn from `seed`.
pub fn fibonacci_directions(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let tau = std::f64::consts::TAU;
    let q = Quaternion::new(
        (1.0 - u1).sqrt() * (tau * u2).sin(),
        (1.0 - u1).sqrt() * (tau * u2).cos(),
        u1.sqrt() * (tau * u3).sin(),
        u1.sqrt() * (tau * u3).cos(),
    );
    let rot = UnitQuaternion::from_quaternion(q);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            rot * Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

/// Walks the voxels pierced by the ray from the center of `start` along
/// `dir` (Amanatides–Woo). Returns `true` when the ray leaves the grid
/// without entering an occupied voxel other than `start`.
fn ray_escapes(grid: &VoxelGrid, occupied: &[u64], start: VoxelIndex, dir: &Vec3) -> bool {
    let r = grid.resolution() as i64;
    let mut cell = [start.i as i64, start.j as i64, start.k as i64];
    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for a in 0..3 {
        if dir[a] > 0.0 {
            step[a] = 1;
        } else if dir[a] < 0.0 {
            step[a] = -1;
        }
        if step[a] != 0 {
            // Grid units: the origin sits half a cell from either boundary.
            t_delta[a] = 1.0 / dir[a].abs();
            t_max[a] = 0.5 * t_delta[a];
        }
    }
    loop {
        let a = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
            0
        } else if t_max[1] <= t_max[2] {
            1
        } else {
            2
        };
        if step[a] == 0 {
            return true;
        }
        cell[a] += step[a];
        t_max[a] += t_delta[a];
        if cell[a] < 0 || cell[a] >= r {
            return true;
        }
        let v = VoxelIndex::new(cell[0] as u32, cell[1] as u32, cell[2] as u32);
        if occupied.binary_search(&grid.linear(v)).is_ok() {
            return false;
        }
    }
}

/// Per-token probability that a ray from the voxel center escapes the
/// active-voxel occupancy grid.
pub fn visibility(enc: &FctEncoding, directions: usize, seed: u64) -> Result<VisibilityReport> {
    if directions == 0 {
        return Err(Error::InvalidParameter("visibility needs at least one direction".into()));
    }
    let dirs = fibonacci_directions(directions, seed);
    let occupied: Vec<u64> = enc.linear_indices().collect();
    let probabilities = enc
        .tokens
        .par_iter()
        .map(|t| {
            let free = dirs.iter().filter(|d| ray_escapes(&enc.grid, &occupied, t.voxel, d)).count();
            free as f64 / directions as f64
        })
        .collect();
    Ok(VisibilityReport {
        probabilities,
        directions,
        seed,
    })
}

/// Removes tokens whose visibility probability is below `threshold`.
pub fn filter_hidden(
    enc: &FctEncoding,
    threshold: f64,
    directions: usize,
    seed: u64,
) -> Result<(FctEncoding, VisibilityReport)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} outside [0, 1]")));
    }
    let report = visibility(enc, directions, seed)?;
    let mut out = enc.clone();
    out.tokens = enc
        .tokens
        .iter()
        .zip(&report.probabilities)
        .filter(|(_, &p)| p >= threshold)
        .map(|(t, _)| t.clone())
        .collect();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fct::FctToken;

    fn tokens_at(grid: VoxelGrid, voxels: &[VoxelIndex]) -> FctEncoding {
        let mut e = FctEncoding::empty(grid);
        e.tokens = voxels.iter().map(|&voxel| FctToken { voxel, ..Default::default() }).collect();
        e.canonicalize();
        e
    }

    #[test]
    fn directions_are_unit_and_balanced() {
        let d = fibonacci_directions(256, 3);
        assert!(d.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!(d.iter().sum::<Vec3>().norm() < 0.05 * 256.0);
    }

    #[test]
    fn lone_voxel_is_fully_visible() {
        let e = tokens_at(VoxelGrid::new(8).unwrap(), &[VoxelIndex::new(3, 4, 5)]);
        let r = visibility(&e, 64, 1).unwrap();
        assert_eq!(r.probabilities, vec![1.0]);
        assert_eq!(filter_hidden(&e, 1.0, 64, 1).unwrap().0.len(), 1);
    }

    #[test]
    fn enclosed_voxel_is_hidden() {
        let mut shell = Vec::new();
        for i in 2..7 {
            for j in 2..7 {
                for k in 2..7 {
                    if [i, j, k].iter().any(|&x| x == 2 || x == 6) {
                        shell.push(VoxelIndex::new(i, j, k));
                    }
                }
            }
        }
        shell.push(VoxelIndex::new(4, 4, 4));
        let e = tokens_at(VoxelGrid::new(8).unwrap(), &shell);
        let (kept, r) = filter_hidden(&e, 0.01, 64, 9).unwrap();
        let center = e.find(VoxelIndex::new(4, 4, 4)).unwrap();
        assert_eq!(r.probabilities[center], 0.0);
        assert_eq!(kept.len(), e.len() - 1);
        assert_eq!(filter_hidden(&e, 0.0, 64, 9).unwrap().0.len(), e.len());
    }
}
