//! Regularized quadric anchor fitting.
//!
//! Position: `argmin_x sum w_i (n_i . (x - c_i))^2 + lambda |x - cbar|^2`,
//! solved through the 3x3 normal equations with an LDL^T factorization.
//! Normal: Tikhonov solution `(C + mu I)^-1 (mu nbar)` normalized, with
//! `C = sum w_i v_i v_i^T`, `v_i = x* - c_i`.
//!
//! Weights enter relative to their mean. [`fit_cell`] works in cell-local
//! coordinates (the cell mapped to `[0,1]^3`) so both regularizers mean the
//! same thing at every resolution.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Mat3, Vec3};
use crate::voxelizer::SurfaceSample;

pub const DEFAULT_LAMBDA: f64 = 1e-2;
pub const DEFAULT_MU: f64 = 1e-2;
/// Clamping inset, as a fraction of the cell size.
pub const CLAMP_INSET: f64 = 1e-6;
/// Cell-local residual above which an anchor is reported as ambiguous.
pub const RESIDUAL_FLAG: f64 = 4.0;

const SINGULAR_REL: f64 = 1e-12;
const ZERO_MEAN_NORMAL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct AnchorFitProblem {
    pub samples: Vec<SurfaceSample>,
    pub bounds: Aabb,
    pub lambda: f64,
    pub mu: f64,
    /// Use `sample.weight` (relative to the mean) as `w_i`; otherwise every
    /// `w_i = 1`.
    pub weighted: bool,
}

impl AnchorFitProblem {
    pub fn new(samples: Vec<SurfaceSample>, bounds: Aabb, lambda: f64, mu: f64) -> Self {
        AnchorFitProblem {
            samples,
            bounds,
            lambda,
            mu,
            weighted: true,
        }
    }

    /// Per-sample weights `w_i`, divided by their mean so that only relative
    /// weights matter (unit weights are unchanged).
    pub fn weights(&self) -> Vec<f64> {
        if !self.weighted {
            return vec![1.0; self.samples.len()];
        }
        let mean = self.samples.iter().map(|s| s.weight).sum::<f64>() / self.samples.len().max(1) as f64;
        self.samples
            .iter()
            .map(|s| if mean > 0.0 { s.weight / mean } else { 1.0 })
            .collect()
    }

    /// Unweighted centroid mean `cbar`.
    pub fn centroid_mean(&self) -> Vec3 {
        let n = self.samples.len().max(1) as f64;
        self.samples.iter().map(|s| s.centroid).sum::<Vec3>() / n
    }

    /// Weighted normal mean `nbar`.
    pub fn normal_mean(&self) -> Vec3 {
        let (sum, wsum) = self
            .samples
            .iter()
            .zip(self.weights())
            .fold((Vec3::zeros(), 0.0), |(acc, ws), (s, w)| (acc + s.normal * w, ws + w));
        if wsum > 0.0 {
            sum / wsum
        } else {
            Vec3::zeros()
        }
    }

    /// `(M^T W M + lambda I, M^T W d + lambda cbar)`.
    pub fn normal_equations(&self) -> (Mat3, Vec3) {
        let mut a = Mat3::identity() * self.lambda;
        let mut b = self.centroid_mean() * self.lambda;
        for (s, w) in self.samples.iter().zip(self.weights()) {
            a += s.normal * s.normal.transpose() * w;
            b += s.normal * (w * s.normal.dot(&s.centroid));
        }
        (a, b)
    }

    pub fn position_objective(&self, x: &Vec3) -> f64 {
        let fit: f64 = self
            .samples
            .iter()
            .zip(self.weights())
            .map(|(s, w)| w * s.normal.dot(&(x - s.centroid)).powi(2))
            .sum();
        fit + self.lambda * (x - self.centroid_mean()).norm_squared()
    }

    /// `C = sum w_i v_i v_i^T` about `x`.
    pub fn scatter(&self, x: &Vec3) -> Mat3 {
        self.samples.iter().zip(self.weights()).fold(Mat3::zeros(), |acc, (s, w)| {
            let v = x - s.centroid;
            acc + v * v.transpose() * w
        })
    }

    pub fn normal_objective(&self, x: &Vec3, n: &Vec3) -> f64 {
        (n.transpose() * self.scatter(x) * n)[0] + self.mu * (n - self.normal_mean()).norm_squared()
    }
}

/// Solves the symmetric 3x3 system `a x = b` by LDL^T.
///
/// Returns the solution and the three pivots. With `lambda > 0` the matrix is
/// `>= lambda I`, so a pivot below `lambda / 2` means the factorization has
/// lost accuracy; with `lambda == 0` a pivot below `1e-12 trace(a)` means the
/// system is singular. Both report [`Error::IllPosed`].
pub fn ldlt_solve(a: &Mat3, b: &Vec3, lambda: f64) -> Result<(Vec3, [f64; 3])> {
    let floor = if lambda > 0.0 {
        0.5 * lambda
    } else {
        SINGULAR_REL * a.trace().abs().max(f64::MIN_POSITIVE)
    };
    let d0 = a[(0, 0)];
    if !(d0 > floor) {
        return Err(Error::IllPosed);
    }
    let l10 = a[(1, 0)] / d0;
    let l20 = a[(2, 0)] / d0;
    let d1 = a[(1, 1)] - l10 * l10 * d0;
    if !(d1 > floor) {
        return Err(Error::IllPosed);
    }
    let l21 = (a[(2, 1)] - l20 * l10 * d0) / d1;
    let d2 = a[(2, 2)] - l20 * l20 * d0 - l21 * l21 * d1;
    if !(d2 > floor) {
        return Err(Error::IllPosed);
    }
    let y0 = b[0];
    let y1 = b[1] - l10 * y0;
    let y2 = b[2] - l20 * y0 - l21 * y1;
    let z = [y0 / d0, y1 / d1, y2 / d2];
    let x2 = z[2];
    let x1 = z[1] - l21 * x2;
    let x0 = z[0] - l10 * x1 - l20 * x2;
    Ok((Vec3::new(x0, x1, x2), [d0, d1, d2]))
}

/// Unclamped minimizer of the position objective.
pub fn solve_position(p: &AnchorFitProblem) -> Result<Vec3> {
    if p.samples.is_empty() {
        return Err(Error::InvalidParameter("anchor fit needs at least one sample".into()));
    }
    if !(p.lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", p.lambda)));
    }
    let (a, b) = p.normal_equations();
    ldlt_solve(&a, &b, p.lambda).map(|(x, _)| x)
}

/// Minimizer of the position objective clamped into the problem's box
/// (inset by [`CLAMP_INSET`] of the box size).
pub fn fit_position(p: &AnchorFitProblem) -> Result<Vec3> {
    let x = solve_position(p)?;
    let size = p.bounds.extent().max();
    Ok(p.bounds.inset(CLAMP_INSET * size).clamp(&x))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalFit {
    pub normal: Vec3,
    /// The mean normal vanished and the smallest scatter eigenvector was used.
    pub fallback: bool,
}

/// Normalized Tikhonov normal at anchor position `x`.
pub fn fit_normal(p: &AnchorFitProblem, x: &Vec3) -> Result<NormalFit> {
    if p.samples.is_empty() {
        return Err(Error::InvalidParameter("normal fit needs at least one sample".into()));
    }
    if !(p.mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be > 0, got {}", p.mu)));
    }
    let c = p.scatter(x);
    let nbar = p.normal_mean();
    if nbar.norm() > ZERO_MEAN_NORMAL {
        let rhs = nbar * p.mu;
        if let Ok((n, _)) = ldlt_solve(&(c + Mat3::identity() * p.mu), &rhs, p.mu) {
            let len = n.norm();
            if len > 0.0 && len.is_finite() {
                return Ok(NormalFit {
                    normal: n / len,
                    fallback: false,
                });
            }
        }
    }
    Ok(NormalFit {
        normal: smallest_eigenvector(p, &c),
        fallback: true,
    })
}

fn smallest_eigenvector(p: &AnchorFitProblem, c: &Mat3) -> Vec3 {
    let eig = SymmetricEigen::new(*c);
    let k = eig.eigenvalues.imin();
    let mut n: Vec3 = eig.eigenvectors.column(k).into_owned();
    let votes: i64 = p
        .samples
        .iter()
        .map(|s| match s.normal.dot(&n) {
            d if d > 0.0 => 1,
            d if d < 0.0 => -1,
            _ => 0,
        })
        .sum();
    if votes < 0 {
        n = -n;
    }
    n.normalize()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnchorConfig {
    pub lambda: f64,
    pub mu: f64,
    pub weighted: bool,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        AnchorConfig {
            lambda: DEFAULT_LAMBDA,
            mu: DEFAULT_MU,
            weighted: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    /// World-space position.
    pub position: Vec3,
    /// Position relative to the cell, cell mapped to `[0,1]^3`.
    pub local: Vec3,
    pub normal: Vec3,
    pub sample_count: usize,
    /// Cell-local position objective at the clamped anchor.
    pub residual: f64,
    pub ambiguous: bool,
    pub normal_fallback: bool,
}

/// Fits the anchor of one cell from its world-space samples, or `None`
/// without samples. `cell` must be a cube.
pub fn fit_cell(samples: &[SurfaceSample], cell: &Aabb, config: &AnchorConfig) -> Result<Option<Anchor>> {
    if samples.is_empty() {
        return Ok(None);
    }
    let h = cell.extent().x;
    let local: Vec<SurfaceSample> = samples
        .iter()
        .map(|s| SurfaceSample {
            centroid: (s.centroid - cell.min) / h,
            ..*s
        })
        .collect();
    let mut problem = AnchorFitProblem::new(
        local,
        Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
        config.lambda,
        config.mu,
    );
    problem.weighted = config.weighted;
    let x = match fit_position(&problem) {
        Ok(x) => x,
        Err(Error::IllPosed) if config.lambda == 0.0 => {
            problem.lambda = DEFAULT_LAMBDA;
            let x = fit_position(&problem)?;
            problem.lambda = 0.0;
            x
        }
        Err(e) => return Err(e),
    };
    let nf = fit_normal(&problem, &x)?;
    let residual = problem.position_objective(&x);
    Ok(Some(Anchor {
        position: cell.min + x * h,
        local: x,
        normal: nf.normal,
        sample_count: samples.len(),
        residual,
        ambiguous: residual > RESIDUAL_FLAG,
        normal_fallback: nf.fallback,
    }))
}
