//! Finite-volume operators for large-eddy simulation on staggered periodic
//! grids, built so that coarse-grid operators commute exactly with two-grid
//! top-hat filters.
//!
//! The crate provides the building blocks for "DNS-aided" LES experiments in
//! which a fine-grid solution drives the sub-filter stress of a coarse-grid
//! solution:
//!
//! * [`grid`] — grids, staggered field containers, grid pairs, snapshot I/O
//! * [`ops1d`] / [`ops3d`] — difference, interpolation and two-grid filters
//! * [`projection`] — FFT Poisson solver, vector and tensor projectors
//! * [`fluxes`] — staggered Burgers and Navier-Stokes fluxes
//! * [`sfs`] — sub-filter stress commutators (classic and filter-swap forms)
//! * [`closures`] — gradient collocation, tensor-basis models
//! * [`simulate`] — CFL control, Euler pair stepping, RK3, initial fields
//! * [`diagnostics`] — spectra, dissipation coefficients, KDE, statistics
//! * [`spectral1d`] — pseudo-spectral counterpart of the 1D machinery
//! * [`experiment`] — reproducible experiment harness used by the CLI

pub mod closures;
pub mod diagnostics;
pub mod experiment;
mod fft;
pub mod fluxes;
pub mod grid;
pub mod ops1d;
pub mod ops3d;
pub mod projection;
pub mod sfs;
pub mod simulate;
pub mod spectral1d;
#[cfg(test)]
pub(crate) mod testutil;

pub use grid::{
    coincident_fine_index_axis, make_grid_pair_1d, make_grid_pair_3d, read_snapshot,
    read_snapshot_1d, read_snapshot_3d, write_snapshot_1d, write_snapshot_3d, Field1, Field3,
    Grid1D, Grid3D, GridPair1, GridPair3, Snapshot, StaggerLocation, TensorField, VectorField,
};
pub use ops3d::{FilterKind, VectorFilterKind};
pub use sfs::ClosureKind;

/// Errors produced by grid construction, operator application and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid needs at least 3 points per axis, got {0}")]
    GridTooSmall(usize),
    #[error("grid length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("grids N_fine={n_fine}, N_coarse={n_coarse}: compression factor must be an odd integer (>= 1)")]
    IncompatiblePair { n_fine: usize, n_coarse: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("location {location:?} is not valid for {context}")]
    InvalidLocation {
        location: StaggerLocation,
        context: &'static str,
    },
    #[error("no stagger location for {op} along axis {axis} from {location:?}")]
    StaggerNotClosed {
        location: StaggerLocation,
        op: &'static str,
        axis: usize,
    },
    #[error("value count {got} does not match grid size {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("snapshot {path}: {reason}")]
    BadSnapshot { path: String, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error("solution became non-finite at step {step}")]
    NonFinite { step: usize },
    #[error("spectral band K={band} cannot be filtered/dealiased at {requested}")]
    BadBand { band: usize, requested: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
