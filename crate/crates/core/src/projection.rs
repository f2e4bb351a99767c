//! FFT-based Poisson solver and the discrete vector/tensor projectors.
//!
//! The solver inverts the staggered Laplacian (the composition of the two
//! staggered differences along each axis) in Fourier space using its exact
//! eigenvalues, so projections are consistent with the difference operators
//! to machine precision. The pressure gauge is fixed by forcing a zero-mean
//! solution.

use rustfft::num_complex::Complex64;

use crate::fft::{to_complex, Fft3, FftPlan};
use crate::grid::{Field1, Field3, Grid1D, Grid3D, StaggerLocation, TensorField, VectorField};
use crate::ops3d::diff_3d;
use crate::{Error, Result};

/// Spectral inverse of the staggered Laplacian on a cubic grid.
pub struct PoissonSolver {
    pub grid: Grid3D,
    fft: Fft3,
    eigenvalues: Vec<f64>,
}

impl PoissonSolver {
    pub fn new(grid: Grid3D) -> Self {
        let n = grid.n;
        let scale = -4.0 / (grid.h * grid.h);
        let axis: Vec<f64> = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
                s * s
            })
            .collect();
        let mut eigenvalues = Vec::with_capacity(n * n * n);
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    eigenvalues.push(scale * (axis[k1] + axis[k2] + axis[k3]));
                }
            }
        }
        Self {
            grid,
            fft: Fft3::new(n),
            eigenvalues,
        }
    }

    fn check_center(&self, f: &Field3, what: &'static str) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch(format!(
                "{what} on grid N={} but solver built for N={}",
                f.grid.n, self.grid.n
            )));
        }
        if f.location != StaggerLocation::Center {
            return Err(Error::InvalidLocation {
                location: f.location,
                context: "a Poisson right-hand side (cell centers)",
            });
        }
        Ok(())
    }
}

/// Solves `laplacian(p) = rhs - mean(rhs)` for the zero-mean pressure `p` at
/// cell centers.
pub fn poisson_solve(solver: &PoissonSolver, rhs: &Field3) -> Result<Field3> {
    solver.check_center(rhs, "Poisson right-hand side")?;
    let mut data = to_complex(&rhs.values);
    solver.fft.forward(&mut data);
    data[0] = Complex64::default();
    for (value, &lambda) in data.iter_mut().zip(&solver.eigenvalues).skip(1) {
        *value /= lambda;
    }
    solver.fft.inverse(&mut data);
    let norm = 1.0 / solver.grid.points() as f64;
    let values = data.iter().map(|c| c.re * norm).collect();
    Field3::new(solver.grid, StaggerLocation::Center, values)
}

/// Divergence of a staggered velocity field, at cell centers.
pub fn divergence(v: &VectorField) -> Result<Field3> {
    let mut out = diff_3d(&v.components[0], 0)?;
    for axis in 1..3 {
        let d = diff_3d(&v.components[axis], axis)?;
        for (o, d) in out.values.iter_mut().zip(&d.values) {
            *o += d;
        }
    }
    Ok(out)
}

/// Removes the discrete-gradient part of `v`: the result has zero staggered
/// divergence and the same mean.
pub fn project_vector(solver: &PoissonSolver, v: &VectorField) -> Result<VectorField> {
    if v.grid() != solver.grid {
        return Err(Error::GridMismatch(
            "velocity grid does not match the solver grid".into(),
        ));
    }
    let p = poisson_solve(solver, &divergence(v)?)?;
    let mut out = v.clone();
    for axis in 0..3 {
        let grad = diff_3d(&p, axis)?;
        for (o, g) in out.components[axis].values.iter_mut().zip(&grad.values) {
            *o -= g;
        }
    }
    Ok(out)
}

/// Double divergence `delta_i delta_j sigma_ij` of a staggered tensor, at
/// cell centers.
pub fn double_divergence(sigma: &TensorField) -> Result<Field3> {
    let grid = sigma.grid();
    let mut out = Field3::zeros(grid, StaggerLocation::Center);
    for i in 0..3 {
        for j in 0..3 {
            let dd = diff_3d(&diff_3d(&sigma.components[i][j], j)?, i)?;
            for (o, d) in out.values.iter_mut().zip(&dd.values) {
                *o += d;
            }
        }
    }
    Ok(out)
}

/// Tensor projector: adds the isotropic correction `q I` that makes the
/// tensor's divergence divergence-free. Only the diagonal changes;
/// off-diagonal components are returned bit-identical.
pub fn project_tensor(solver: &PoissonSolver, sigma: &TensorField) -> Result<TensorField> {
    if sigma.grid() != solver.grid {
        return Err(Error::GridMismatch(
            "tensor grid does not match the solver grid".into(),
        ));
    }
    let q = poisson_solve(solver, &double_divergence(sigma)?)?;
    let mut out = sigma.clone();
    for i in 0..3 {
        for (o, &qv) in out.components[i][i].values.iter_mut().zip(&q.values) {
            *o -= qv;
        }
    }
    Ok(out)
}

/// Divergence of a staggered tensor: component `i` collects
/// `delta_j sigma_ij` on the faces of axis `i`.
pub fn tensor_divergence(sigma: &TensorField) -> Result<VectorField> {
    let grid = sigma.grid();
    let mut components = Vec::with_capacity(3);
    for i in 0..3 {
        let mut c = Field3::zeros(grid, StaggerLocation::Face(i));
        for j in 0..3 {
            let d = diff_3d(&sigma.components[i][j], j)?;
            for (o, d) in c.values.iter_mut().zip(&d.values) {
                *o += d;
            }
        }
        components.push(c);
    }
    VectorField::from_components(components.try_into().expect("three components"))
}

/// 1D counterpart of [`PoissonSolver`], used only as a degenerate harness in
/// tests.
pub struct PoissonSolver1D {
    pub grid: Grid1D,
    fft: FftPlan,
    eigenvalues: Vec<f64>,
}

impl PoissonSolver1D {
    pub fn new(grid: Grid1D) -> Self {
        let n = grid.n;
        let scale = -4.0 / (grid.h * grid.h);
        let eigenvalues = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
                scale * s * s
            })
            .collect();
        Self {
            grid,
            fft: FftPlan::new(n),
            eigenvalues,
        }
    }
}

pub fn poisson_solve_1d(solver: &PoissonSolver1D, rhs: &Field1) -> Result<Field1> {
    if rhs.grid != solver.grid {
        return Err(Error::GridMismatch("1D Poisson grid mismatch".into()));
    }
    if rhs.location != StaggerLocation::Center {
        return Err(Error::InvalidLocation {
            location: rhs.location,
            context: "a Poisson right-hand side (cell centers)",
        });
    }
    let mut data = to_complex(&rhs.values);
    solver.fft.forward(&mut data);
    data[0] = Complex64::default();
    for (value, &lambda) in data.iter_mut().zip(&solver.eigenvalues).skip(1) {
        *value /= lambda;
    }
    solver.fft.inverse(&mut data);
    let norm = 1.0 / solver.grid.n as f64;
    let values = data.iter().map(|c| c.re * norm).collect();
    Field1::new(solver.grid, StaggerLocation::Center, values)
}
