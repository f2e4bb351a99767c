//! Sub-filter stress closures for the coarse-grid momentum equation.
//!
//! Every closure here is a two-grid commutator: a filtered fine-grid flux
//! minus the coarse-grid flux of the filtered velocity. The `Swap` variants
//! filter the fine flux with the reduced filter that the coarse difference
//! operator exchanges with, which closes the filtered momentum budget to
//! machine precision; the `Classic` variants apply the velocity filter to
//! the flux as well, which only closes it to the filter's truncation error.

use crate::fluxes::{burgers_flux, ns_projected_stress, BurgersParams, NSParams};
use crate::grid::{
    Field1, Field3, GridPair1, GridPair3, StaggerLocation, TensorField, VectorField,
};
use crate::ops1d::{restrict_1d, twogrid_filter_1d};
use crate::ops3d::{
    diff_3d, diff_span, filter_scalar, filter_vector, line_filter, restrict_3d, FilterKind,
    VectorFilterKind,
};
use crate::projection::{project_tensor, PoissonSolver};
use crate::{Error, Result};

/// Which sub-filter stress a DNS-aided coarse run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureKind {
    /// No model: the coarse equation runs unclosed.
    NoModel,
    /// Classic commutator: the same filter that coarsens the velocity is
    /// applied to the fine flux.
    Classic,
    /// Filter-swap commutator: the fine flux is filtered with the reduced
    /// filter that the coarse difference exchanges with.
    Swap,
    /// Symmetrized filter-swap commutator.
    SwapSymmetric,
}

impl ClosureKind {
    pub const ALL: [ClosureKind; 4] = [
        ClosureKind::NoModel,
        ClosureKind::Classic,
        ClosureKind::SwapSymmetric,
        ClosureKind::Swap,
    ];

    /// Stable name used in CSV columns and config files.
    pub fn name(&self) -> &'static str {
        match self {
            ClosureKind::NoModel => "no_model",
            ClosureKind::Classic => "classic",
            ClosureKind::Swap => "swap",
            ClosureKind::SwapSymmetric => "swap_sym",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "no_model" => Some(ClosureKind::NoModel),
            "classic" => Some(ClosureKind::Classic),
            "swap" => Some(ClosureKind::Swap),
            "swap_sym" => Some(ClosureKind::SwapSymmetric),
            _ => None,
        }
    }
}

/// Poisson solvers for both levels of a grid pair.
pub struct SolverPair {
    pub fine: PoissonSolver,
    pub coarse: PoissonSolver,
}

impl SolverPair {
    pub fn new(pair: &GridPair3) -> Self {
        Self {
            fine: PoissonSolver::new(pair.fine),
            coarse: PoissonSolver::new(pair.coarse),
        }
    }
}

/// Burgers sub-filter stress at coarse faces, computed from fine data.
pub fn burgers_sfs(
    pair: &GridPair1,
    v: &Field1,
    p: BurgersParams,
    kind: ClosureKind,
) -> Result<Field1> {
    if v.grid != pair.fine {
        return Err(Error::GridMismatch(format!(
            "velocity on grid N={} is not the pair's fine grid N={}",
            v.grid.n, pair.fine.n
        )));
    }
    if kind == ClosureKind::NoModel {
        return Ok(Field1::zeros(pair.coarse, StaggerLocation::Face(0)));
    }
    let r_fine = burgers_flux(v, p)?;
    let vbar = twogrid_filter_1d(pair, v)?;
    let r_coarse = burgers_flux(&vbar, p)?;
    let first = match kind {
        ClosureKind::Classic => twogrid_filter_1d(pair, &r_fine)?,
        // In one dimension there is no tensor to symmetrize, so the
        // symmetrized variant coincides with the plain swap.
        ClosureKind::Swap | ClosureKind::SwapSymmetric => restrict_1d(pair, &r_fine)?,
        ClosureKind::NoModel => unreachable!(),
    };
    let values = first
        .values
        .iter()
        .zip(&r_coarse.values)
        .map(|(a, b)| a - b)
        .collect();
    Field1::new(pair.coarse, StaggerLocation::Face(0), values)
}

fn check_fine_vector(pair: &GridPair3, v: &VectorField) -> Result<()> {
    if v.grid() != pair.fine {
        return Err(Error::GridMismatch(format!(
            "velocity on grid N={} is not the pair's fine grid N={}",
            v.grid().n,
            pair.fine.n
        )));
    }
    Ok(())
}

fn tensor_sub(a: &TensorField, b: &TensorField) -> Result<TensorField> {
    let mut out = TensorField::zeros(a.grid());
    for i in 0..3 {
        for j in 0..3 {
            let values = a.components[i][j]
                .values
                .iter()
                .zip(&b.components[i][j].values)
                .map(|(x, y)| x - y)
                .collect();
            out.components[i][j] =
                Field3::new(a.grid(), a.components[i][j].location, values)?;
        }
    }
    Ok(out)
}

fn symmetrize(t: &TensorField) -> Result<TensorField> {
    let mut out = t.clone();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let values: Vec<f64> = t.components[i][j]
                .values
                .iter()
                .zip(&t.components[j][i].values)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let entry = Field3::new(t.grid(), t.components[i][j].location, values)?;
            out.components[j][i] = entry.clone();
            out.components[i][j] = entry;
        }
    }
    Ok(out)
}

// First commutator term for the swap closures: each stress entry is filtered
// with the reduced filter that the coarse difference along its divergence
// axis exchanges with.
fn swap_first_term(
    pair: &GridPair3,
    r_fine: &TensorField,
    filter: VectorFilterKind,
    coarse_solver: &PoissonSolver,
) -> Result<TensorField> {
    let mut out = TensorField::zeros(pair.coarse);
    match filter {
        VectorFilterKind::VolumeAverage | VectorFilterKind::ProjectedVolumeAverage => {
            for i in 0..3 {
                for j in 0..3 {
                    out.components[i][j] =
                        filter_scalar(pair, &r_fine.components[i][j], FilterKind::Surface(j))?;
                }
            }
            if filter == VectorFilterKind::ProjectedVolumeAverage {
                out = project_tensor(coarse_solver, &out)?;
            }
        }
        VectorFilterKind::SurfaceAverage => {
            for i in 0..3 {
                out.components[i][i] =
                    filter_scalar(pair, &r_fine.components[i][i], FilterKind::Surface(i))?;
            }
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let entry =
                        filter_scalar(pair, &r_fine.components[i][j], FilterKind::line(i, j))?;
                    out.components[j][i] = entry.clone();
                    out.components[i][j] = entry;
                }
            }
        }
    }
    Ok(out)
}

// First commutator term for the classic closures: the velocity filter itself
// (volume for the volume-average family, per-row surface for the surface
// average) applied to every stress entry.
fn classic_first_term(
    pair: &GridPair3,
    r_fine: &TensorField,
    filter: VectorFilterKind,
    coarse_solver: &PoissonSolver,
) -> Result<TensorField> {
    let mut out = TensorField::zeros(pair.coarse);
    match filter {
        VectorFilterKind::VolumeAverage | VectorFilterKind::ProjectedVolumeAverage => {
            for i in 0..3 {
                out.components[i][i] =
                    filter_scalar(pair, &r_fine.components[i][i], FilterKind::Volume)?;
            }
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let entry =
                        filter_scalar(pair, &r_fine.components[i][j], FilterKind::Volume)?;
                    out.components[j][i] = entry.clone();
                    out.components[i][j] = entry;
                }
            }
            if filter == VectorFilterKind::ProjectedVolumeAverage {
                out = project_tensor(coarse_solver, &out)?;
            }
        }
        VectorFilterKind::SurfaceAverage => {
            for i in 0..3 {
                for j in 0..3 {
                    out.components[i][j] =
                        filter_scalar(pair, &r_fine.components[i][j], FilterKind::Surface(i))?;
                }
            }
        }
    }
    Ok(out)
}

/// Navier-Stokes sub-filter stress on the coarse grid, from fine data.
pub fn ns_sfs(
    pair: &GridPair3,
    solvers: &SolverPair,
    v: &VectorField,
    p: NSParams,
    filter: VectorFilterKind,
    kind: ClosureKind,
) -> Result<TensorField> {
    check_fine_vector(pair, v)?;
    if kind == ClosureKind::NoModel {
        return Ok(TensorField::zeros(pair.coarse));
    }
    let r_fine = ns_projected_stress(&solvers.fine, v, p)?;
    ns_sfs_from_stress(pair, solvers, &r_fine, v, p, filter, kind)
}

/// [`ns_sfs`] with the fine projected stress already computed, so one stress
/// evaluation can feed several filters and closure kinds per time step.
pub fn ns_sfs_from_stress(
    pair: &GridPair3,
    solvers: &SolverPair,
    r_fine: &TensorField,
    v: &VectorField,
    p: NSParams,
    filter: VectorFilterKind,
    kind: ClosureKind,
) -> Result<TensorField> {
    check_fine_vector(pair, v)?;
    if kind == ClosureKind::NoModel {
        return Ok(TensorField::zeros(pair.coarse));
    }
    let vbar = filter_vector(pair, v, filter, &solvers.coarse)?;
    let r_coarse = ns_projected_stress(&solvers.coarse, &vbar, p)?;
    let first = match kind {
        ClosureKind::Classic => classic_first_term(pair, r_fine, filter, &solvers.coarse)?,
        ClosureKind::Swap | ClosureKind::SwapSymmetric => {
            swap_first_term(pair, r_fine, filter, &solvers.coarse)?
        }
        ClosureKind::NoModel => unreachable!(),
    };
    let tau = tensor_sub(&first, &r_coarse)?;
    if kind == ClosureKind::SwapSymmetric {
        symmetrize(&tau)
    } else {
        Ok(tau)
    }
}

/// Non-structural remainder of the surface-averaged momentum budget.
///
/// The surface average of the diagonal flux difference `δ_i r_ii` is a *fine*
/// difference of transversally averaged data; the coarse equation can only
/// apply the coarse difference. `μ_i` is that defect:
/// `μ_i = (δ_i over h − δ_i over H)` applied to the surface(i)-filtered
/// `r_ii`, evaluated at coarse faces.
pub fn ns_mu_star(
    pair: &GridPair3,
    solvers: &SolverPair,
    v: &VectorField,
    p: NSParams,
) -> Result<VectorField> {
    let r_fine = ns_projected_stress(&solvers.fine, v, p)?;
    ns_mu_star_from_stress(pair, &r_fine)
}

/// [`ns_mu_star`] with the fine projected stress already computed.
pub fn ns_mu_star_from_stress(pair: &GridPair3, r_fine: &TensorField) -> Result<VectorField> {
    if r_fine.grid() != pair.fine {
        return Err(Error::GridMismatch(format!(
            "stress on grid N={} is not the pair's fine grid N={}",
            r_fine.grid().n,
            pair.fine.n
        )));
    }
    let mut components = Vec::with_capacity(3);
    for i in 0..3 {
        // Transverse moving average of r_ii, still on the fine grid.
        let mut g = r_fine.components[i][i].clone();
        for axis in 0..3 {
            if axis != i {
                g = line_filter(pair, &g, axis)?;
            }
        }
        let fine_diff = diff_3d(&g, i)?;
        let coarse_diff = diff_span(&g, i, pair.factor)?;
        let defect = Field3::new(
            pair.fine,
            fine_diff.location,
            fine_diff
                .values
                .iter()
                .zip(&coarse_diff.values)
                .map(|(a, b)| a - b)
                .collect(),
        )?;
        components.push(restrict_3d(pair, &defect)?);
    }
    let components: [Field3; 3] = components.try_into().expect("three components");
    VectorField::from_components(components)
}
