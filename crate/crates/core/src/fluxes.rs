//! Staggered fluxes and right-hand sides for viscous Burgers and
//! incompressible Navier-Stokes at a single grid level.
//!
//! The Burgers flux lives at faces and is built from two-point interpolation
//! and differencing of the center velocity; the Navier-Stokes stress follows
//! the classical staggered (marker-and-cell) placement: diagonal entries at
//! cell centers, off-diagonal entries at the shared edges. The momentum
//! right-hand side uses the pressure-projected stress, which keeps the
//! velocity divergence-free without a separate pressure variable.

use crate::grid::{Field1, Field3, StaggerLocation, TensorField, VectorField};
use crate::ops1d::{diff_1d, interp_1d};
use crate::ops3d::{diff_3d, interp_3d};
use crate::projection::{project_tensor, tensor_divergence, PoissonSolver};
use crate::{Error, Result};

/// Physical parameters of the viscous Burgers equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersParams {
    pub nu: f64,
}

impl BurgersParams {
    pub fn new(nu: f64) -> Result<Self> {
        check_viscosity(nu)?;
        Ok(Self { nu })
    }
}

/// Physical parameters of incompressible Navier-Stokes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NSParams {
    pub nu: f64,
}

impl NSParams {
    pub fn new(nu: f64) -> Result<Self> {
        check_viscosity(nu)?;
        Ok(Self { nu })
    }
}

fn check_viscosity(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Config(format!(
            "viscosity must be positive and finite, got {nu}"
        )));
    }
    Ok(())
}

/// Burgers flux `r(u) = (η u)²/2 − ν δu` at faces, from the center velocity.
///
/// The flux at face `i` depends only on `u[i]` and `u[i+1]`.
pub fn burgers_flux(u: &Field1, p: BurgersParams) -> Result<Field1> {
    if u.location != StaggerLocation::Center {
        return Err(Error::InvalidLocation {
            location: u.location,
            context: "the Burgers velocity (cell centers)",
        });
    }
    let eta = interp_1d(u);
    let du = diff_1d(u);
    let values = eta
        .values
        .iter()
        .zip(&du.values)
        .map(|(e, d)| 0.5 * e * e - p.nu * d)
        .collect();
    Field1::new(u.grid, StaggerLocation::Face(0), values)
}

/// Spatial right-hand side of Burgers: `du/dt = −δ r(u)`, at centers.
pub fn burgers_rhs(u: &Field1, p: BurgersParams) -> Result<Field1> {
    let r = burgers_flux(u, p)?;
    let mut out = diff_1d(&r);
    for v in &mut out.values {
        *v = -*v;
    }
    Ok(out)
}

fn stress_with_viscosity(v: &VectorField, nu: f64) -> Result<TensorField> {
    let grid = v.grid();
    let mut out = TensorField::zeros(grid);
    for i in 0..3 {
        let eta = interp_3d(&v.components[i], i)?;
        let du = diff_3d(&v.components[i], i)?;
        let values = eta
            .values
            .iter()
            .zip(&du.values)
            .map(|(e, d)| e * e - 2.0 * nu * d)
            .collect();
        out.components[i][i] = Field3::new(grid, StaggerLocation::Center, values)?;
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let ei = interp_3d(&v.components[i], j)?;
            let ej = interp_3d(&v.components[j], i)?;
            let di = diff_3d(&v.components[i], j)?;
            let dj = diff_3d(&v.components[j], i)?;
            let values = ei
                .values
                .iter()
                .zip(&ej.values)
                .zip(di.values.iter().zip(&dj.values))
                .map(|((a, b), (da, db))| a * b - nu * (da + db))
                .collect();
            let entry = Field3::new(grid, StaggerLocation::edge(i, j), values)?;
            out.components[j][i] = entry.clone();
            out.components[i][j] = entry;
        }
    }
    Ok(out)
}

/// Convective-diffusive stress `σ_ij = (η_j v_i)(η_i v_j) − ν(δ_j v_i + δ_i v_j)`.
pub fn ns_stress(v: &VectorField, p: NSParams) -> Result<TensorField> {
    stress_with_viscosity(v, p.nu)
}

/// Convective part of [`ns_stress`] alone (the ν=0 stress), exposed so the
/// discrete energy-conservation property can be checked in isolation.
pub fn ns_convective_stress(v: &VectorField) -> Result<TensorField> {
    stress_with_viscosity(v, 0.0)
}

/// Pressure-projected stress `r = π σ`; only the diagonal differs from `σ`.
pub fn ns_projected_stress(
    solver: &PoissonSolver,
    v: &VectorField,
    p: NSParams,
) -> Result<TensorField> {
    project_tensor(solver, &ns_stress(v, p)?)
}

/// Momentum right-hand side `dv_i/dt = −δ_j r_ij(v)` with the projected
/// stress; the result is discretely divergence-free.
pub fn ns_rhs(solver: &PoissonSolver, v: &VectorField, p: NSParams) -> Result<VectorField> {
    let r = ns_projected_stress(solver, v, p)?;
    let mut out = tensor_divergence(&r)?;
    for c in &mut out.components {
        for v in &mut c.values {
            *v = -*v;
        }
    }
    Ok(out)
}

/// Discrete energy inner product `h Σ_i a_i b_i` of two 1D fields at the same
/// location. Summation order is fixed (ascending index) for reproducibility.
pub fn energy_inner_product_1d(a: &Field1, b: &Field1) -> Result<f64> {
    if a.grid != b.grid || a.location != b.location {
        return Err(Error::GridMismatch(
            "energy inner product needs matching grids and locations".into(),
        ));
    }
    let mut acc = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        acc += x * y;
    }
    Ok(a.grid.h * acc)
}

/// Discrete energy inner product `h³ Σ_i Σ_x a_i b_i` of two staggered vector
/// fields. Summation order is fixed (component-major, ascending index).
pub fn energy_inner_product_3d(a: &VectorField, b: &VectorField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(
            "energy inner product needs matching grids".into(),
        ));
    }
    let h = a.grid().h;
    let mut acc = 0.0;
    for i in 0..3 {
        for (x, y) in a.components[i].values.iter().zip(&b.components[i].values) {
            acc += x * y;
        }
    }
    Ok(h * h * h * acc)
}
