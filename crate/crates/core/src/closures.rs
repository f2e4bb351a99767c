//! Structural closure models evaluated from a coarse velocity field: the
//! non-symmetric tensor-basis family built from the strain and rotation
//! tensors, and the 1D Smagorinsky reference model.
//!
//! The basis is evaluated pointwise at cell centers from a collocated
//! velocity gradient; off-diagonal model entries are then interpolated back
//! to their staggered edge positions. Collocating at centers is this
//! library's convention — the models themselves are defined pointwise.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::grid::{Field1, Field3, Grid3D, StaggerLocation, TensorField, VectorField};
use crate::ops1d::diff_1d;
use crate::ops3d::{diff_3d, interp_3d};
use crate::{Error, Result};

/// Collocated velocity gradient at one cell center, split into strain and
/// rotation parts: `s = (g + gᵀ)/2`, `r = (g − gᵀ)/2`.
#[derive(Debug, Clone, Copy)]
pub struct PointGradient {
    pub g: Matrix3<f64>,
    pub s: Matrix3<f64>,
    pub r: Matrix3<f64>,
}

impl PointGradient {
    pub fn new(g: Matrix3<f64>) -> Self {
        let s = 0.5 * (g + g.transpose());
        let r = 0.5 * (g - g.transpose());
        Self { g, s, r }
    }
}

/// Velocity gradients at every cell center of a grid, row-major like
/// [`Field3`].
pub struct GradientField {
    pub grid: Grid3D,
    pub values: Vec<PointGradient>,
}

impl GradientField {
    pub fn idx(&self, i1: usize, i2: usize, i3: usize) -> usize {
        (i1 * self.grid.n + i2) * self.grid.n + i3
    }
}

/// Collocates `δ_j w_i` at cell centers: diagonal entries land there
/// directly, off-diagonal entries need two interpolations from their edge.
pub fn collocate_gradient(w: &VectorField) -> Result<GradientField> {
    let grid = w.grid();
    let mut entries: [[Option<Vec<f64>>; 3]; 3] = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            let d = diff_3d(&w.components[i], j)?;
            let at_center = if i == j {
                d
            } else {
                interp_3d(&interp_3d(&d, i)?, j)?
            };
            debug_assert_eq!(at_center.location, StaggerLocation::Center);
            entries[i][j] = Some(at_center.values);
        }
    }
    let entries: [[Vec<f64>; 3]; 3] = entries.map(|row| row.map(Option::unwrap));
    let values = (0..grid.points())
        .map(|p| {
            PointGradient::new(Matrix3::from_fn(|i, j| entries[i][j][p]))
        })
        .collect();
    Ok(GradientField { grid, values })
}

fn dev(m: Matrix3<f64>) -> Matrix3<f64> {
    m - Matrix3::identity() * (m.trace() / 3.0)
}

/// Symmetric basis tensors `A₁..A₁₀`, antisymmetric basis tensors `B₁..B₆`,
/// and the five invariants `λ₁..λ₅` of one collocated gradient.
pub fn tensor_basis(
    p: &PointGradient,
) -> ([Matrix3<f64>; 10], [Matrix3<f64>; 6], [f64; 5]) {
    let s = p.s;
    let r = p.r;
    let s2 = s * s;
    let r2 = r * r;
    let sr = s * r;
    let rs = r * s;

    let a = [
        s,
        sr - rs,
        dev(s2),
        dev(r2),
        s2 * r - r * s2,
        dev(s * r2 + r2 * s),
        r * s * r2 - r2 * s * r,
        s * r * s2 - s2 * r * s,
        dev(s2 * r2 + r2 * s2),
        r * s2 * r2 - r2 * s2 * r,
    ];
    let b = [
        r,
        sr + rs,
        s2 * r + r * s2,
        s * r2 - r2 * s,
        s2 * r2 - r2 * s2,
        s2 * r2 * s - s * r2 * s2,
    ];
    let lambda = [
        s2.trace(),
        r2.trace(),
        (s2 * s).trace(),
        (s * r2).trace(),
        (s2 * r2).trace(),
    ];
    (a, b, lambda)
}

/// Coefficients of a tensor-basis model: functions of the five invariants,
/// plus the filter width `Δ` (`None` means the coarse grid spacing).
pub struct BasisCoefficients {
    pub alpha: Box<dyn Fn([f64; 5]) -> [f64; 10] + Send + Sync>,
    pub beta: Box<dyn Fn([f64; 5]) -> [f64; 6] + Send + Sync>,
    pub width: Option<f64>,
}

impl BasisCoefficients {
    /// Invariant-independent coefficients.
    pub fn constant(alpha: [f64; 10], beta: [f64; 6], width: Option<f64>) -> Self {
        Self {
            alpha: Box::new(move |_| alpha),
            beta: Box::new(move |_| beta),
            width,
        }
    }

    /// Linear eddy-viscosity model `m = −2 ν_T S`, expressed in the basis as
    /// `α₁ = −2 ν_T / Δ²` with every other coefficient zero.
    pub fn eddy_viscosity(nu_t: f64, width: f64) -> Self {
        let mut alpha = [0.0; 10];
        alpha[0] = -2.0 * nu_t / (width * width);
        Self::constant(alpha, [0.0; 6], Some(width))
    }
}

/// Evaluates `m = Δ² (Σ α_k A_k + Σ β_k B_k)` at cell centers and
/// redistributes it to the staggered tensor layout (off-diagonal entries are
/// interpolated to their edges).
pub fn tensor_basis_model(w: &VectorField, coeffs: &BasisCoefficients) -> Result<TensorField> {
    let grid = w.grid();
    let width = coeffs.width.unwrap_or(grid.h);
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Config(format!(
            "tensor-basis width must be positive and finite, got {width}"
        )));
    }
    let d2 = width * width;
    let grads = collocate_gradient(w)?;

    let mut per_point: Vec<[f64; 9]> = Vec::new();
    grads
        .values
        .par_iter()
        .map(|grad| {
            let (a, b, lambda) = tensor_basis(grad);
            let alpha = (coeffs.alpha)(lambda);
            let beta = (coeffs.beta)(lambda);
            let mut m = Matrix3::zeros();
            for (k, ak) in a.iter().enumerate() {
                m += *ak * alpha[k];
            }
            for (k, bk) in b.iter().enumerate() {
                m += *bk * beta[k];
            }
            m *= d2;
            std::array::from_fn(|e| m[(e / 3, e % 3)])
        })
        .collect_into_vec(&mut per_point);

    let mut out = TensorField::zeros(grid);
    for i in 0..3 {
        for j in 0..3 {
            let values = per_point.iter().map(|entries| entries[i * 3 + j]).collect();
            let center = Field3::new(grid, StaggerLocation::Center, values)?;
            out.components[i][j] = if i == j {
                center
            } else {
                interp_3d(&interp_3d(&center, i)?, j)?
            };
        }
    }
    Ok(out)
}

/// 1D Smagorinsky model `m = −(θΔ)² |δw| δw` at faces.
pub fn smagorinsky_1d(w: &Field1, theta: f64, width: f64) -> Result<Field1> {
    if w.location != StaggerLocation::Center {
        return Err(Error::InvalidLocation {
            location: w.location,
            context: "the Smagorinsky velocity (cell centers)",
        });
    }
    let c = (theta * width) * (theta * width);
    let mut out = diff_1d(w);
    for v in &mut out.values {
        *v = -c * v.abs() * *v;
    }
    Ok(out)
}
