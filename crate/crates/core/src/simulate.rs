//! Time integration and random initial conditions.
//!
//! DNS-aided runs advance the fine and coarse solutions with forward Euler
//! and a shared time step; the closure term is evaluated from the fine state
//! *before* either grid is updated, so a filtered fine solution and an
//! exactly-closed coarse solution stay identical to machine precision.
//! Warm-up uses Wray's low-storage third-order Runge-Kutta scheme with a
//! pressure projection after every stage.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::fft::{shell_count, shell_index, to_complex, Fft3, FftPlan};
use crate::fluxes::{burgers_rhs, ns_rhs, BurgersParams, NSParams};
use crate::grid::{Field1, Field3, Grid1D, Grid3D, GridPair1, GridPair3, StaggerLocation};
use crate::grid::{TensorField, VectorField};
use crate::ops1d::diff_1d;
use crate::ops3d::VectorFilterKind;
use crate::projection::{project_vector, tensor_divergence, PoissonSolver};
use crate::sfs::{burgers_sfs, ns_sfs, ClosureKind, SolverPair};
use crate::{Error, Result};

/// CFL constant for forward-Euler Burgers runs.
pub const BURGERS_CFL: f64 = 0.4;
/// CFL constant for forward-Euler Navier-Stokes runs.
pub const NS_CFL: f64 = 0.15;
/// Peak wavenumber of the Burgers initial spectrum.
pub const BURGERS_INIT_K0: f64 = 10.0;
/// Peak wavenumber of the Navier-Stokes initial energy profile.
pub const NS_INIT_KAPPA0: f64 = 5.0;

/// A solution together with its physical time and step count.
#[derive(Debug, Clone)]
pub struct TimeState<S> {
    pub t: f64,
    pub step: usize,
    pub state: S,
}

impl<S> TimeState<S> {
    pub fn new(state: S) -> Self {
        Self {
            t: 0.0,
            step: 0,
            state,
        }
    }
}

/// Seeded random stream with a platform-independent bit sequence.
///
/// Consumers draw in a documented order (e.g. phases in increasing
/// wavenumber, normal samples component-major), so a seed pins the entire
/// initial condition.
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform sample in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen()
    }

    /// Standard normal sample.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Euler-stable time step `C · min(h/max|v|, h²/ν)` for Burgers.
///
/// A zero velocity falls back to the viscous bound alone.
pub fn cfl_dt_burgers(v: &Field1, nu: f64, h: f64, c: f64) -> f64 {
    cfl_dt(max_abs_slice(&v.values), nu, 1.0, h, c)
}

/// Euler-stable time step `C · min(h/max|v|, h²/(6ν))` for Navier-Stokes.
pub fn cfl_dt_ns(v: &VectorField, nu: f64, h: f64, c: f64) -> f64 {
    let vmax = v
        .components
        .iter()
        .map(|c| max_abs_slice(&c.values))
        .fold(0.0, f64::max);
    cfl_dt(vmax, nu, 6.0, h, c)
}

fn cfl_dt(vmax: f64, nu: f64, viscous_factor: f64, h: f64, c: f64) -> f64 {
    let viscous = h * h / (viscous_factor * nu);
    if vmax > 0.0 {
        c * (h / vmax).min(viscous)
    } else {
        c * viscous
    }
}

fn max_abs_slice(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

fn ensure_finite(values: &[f64], step: usize) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

fn axpy(state: &mut [f64], dt: f64, rhs: &[f64]) {
    for (x, &r) in state.iter_mut().zip(rhs) {
        *x += dt * r;
    }
}

/// One forward-Euler step of the fine-grid Burgers solution.
pub fn burgers_dns_step(state: &mut TimeState<Field1>, p: BurgersParams, dt: f64) -> Result<()> {
    let rhs = burgers_rhs(&state.state, p)?;
    axpy(&mut state.state.values, dt, &rhs.values);
    state.t += dt;
    state.step += 1;
    ensure_finite(&state.state.values, state.step)
}

/// One forward-Euler step of a coarse Burgers solution driven by a model
/// flux: `w ← w − Δt δ(r(w) + m)`, with `m` at the coarse faces.
pub fn burgers_les_step(
    state: &mut TimeState<Field1>,
    p: BurgersParams,
    model: &Field1,
    dt: f64,
) -> Result<()> {
    if model.grid != state.state.grid {
        return Err(Error::GridMismatch(
            "model flux on a different grid than the coarse solution".into(),
        ));
    }
    if model.location != StaggerLocation::Face(0) {
        return Err(Error::InvalidLocation {
            location: model.location,
            context: "a Burgers model flux (face field)",
        });
    }
    let mut rhs = burgers_rhs(&state.state, p)?;
    let model_div = diff_1d(model);
    for (r, d) in rhs.values.iter_mut().zip(&model_div.values) {
        *r -= d;
    }
    axpy(&mut state.state.values, dt, &rhs.values);
    state.t += dt;
    state.step += 1;
    ensure_finite(&state.state.values, state.step)
}

/// Advances the Burgers DNS and its aided coarse run by one shared Euler
/// step, evaluating the closure from the fine state before either update.
pub fn euler_step_pair_burgers(
    pair: &GridPair1,
    dns: &mut TimeState<Field1>,
    les: &mut TimeState<Field1>,
    p: BurgersParams,
    kind: ClosureKind,
    dt: f64,
) -> Result<()> {
    debug_assert!((dns.t - les.t).abs() <= 1e-12 * dns.t.abs().max(1.0));
    let model = burgers_sfs(pair, &dns.state, p, kind)?;
    burgers_dns_step(dns, p, dt)?;
    burgers_les_step(les, p, &model, dt)
}

/// One forward-Euler step of the fine-grid Navier-Stokes solution.
pub fn ns_dns_step(
    solver: &PoissonSolver,
    state: &mut TimeState<VectorField>,
    p: NSParams,
    dt: f64,
) -> Result<()> {
    let rhs = ns_rhs(solver, &state.state, p)?;
    for (c, r) in state.state.components.iter_mut().zip(&rhs.components) {
        axpy(&mut c.values, dt, &r.values);
    }
    state.t += dt;
    state.step += 1;
    for c in &state.state.components {
        ensure_finite(&c.values, state.step)?;
    }
    Ok(())
}

/// One forward-Euler step of a coarse Navier-Stokes solution driven by a
/// model tensor: `w ← w − Δt δ·(r(w) + m)`.
pub fn ns_les_step(
    solver: &PoissonSolver,
    state: &mut TimeState<VectorField>,
    p: NSParams,
    model: &TensorField,
    dt: f64,
) -> Result<()> {
    if model.grid() != state.state.grid() {
        return Err(Error::GridMismatch(
            "model tensor on a different grid than the coarse solution".into(),
        ));
    }
    let mut rhs = ns_rhs(solver, &state.state, p)?;
    let model_div = tensor_divergence(model)?;
    for (r, d) in rhs.components.iter_mut().zip(&model_div.components) {
        for (x, &y) in r.values.iter_mut().zip(&d.values) {
            *x -= y;
        }
    }
    for (c, r) in state.state.components.iter_mut().zip(&rhs.components) {
        axpy(&mut c.values, dt, &r.values);
    }
    state.t += dt;
    state.step += 1;
    for c in &state.state.components {
        ensure_finite(&c.values, state.step)?;
    }
    Ok(())
}

/// Advances the Navier-Stokes DNS and its aided coarse run by one shared
/// Euler step, evaluating the closure from the fine state before either
/// update.
#[allow(clippy::too_many_arguments)]
pub fn euler_step_pair_ns(
    pair: &GridPair3,
    solvers: &SolverPair,
    dns: &mut TimeState<VectorField>,
    les: &mut TimeState<VectorField>,
    p: NSParams,
    filter: VectorFilterKind,
    kind: ClosureKind,
    dt: f64,
) -> Result<()> {
    debug_assert!((dns.t - les.t).abs() <= 1e-12 * dns.t.abs().max(1.0));
    let model = ns_sfs(pair, solvers, &dns.state, p, filter, kind)?;
    ns_dns_step(&solvers.fine, dns, p, dt)?;
    ns_les_step(&solvers.coarse, les, p, &model, dt)
}

/// One step of Wray's low-storage third-order Runge-Kutta scheme, with the
/// supplied projection applied after every stage.
pub fn rk3_wray_step<R, P>(
    state: &mut TimeState<VectorField>,
    dt: f64,
    mut rhs: R,
    mut projector: P,
) -> Result<()>
where
    R: FnMut(&VectorField) -> Result<VectorField>,
    P: FnMut(&VectorField) -> Result<VectorField>,
{
    const A: [f64; 3] = [8.0 / 15.0, 5.0 / 12.0, 3.0 / 4.0];
    const B: [f64; 3] = [0.0, -17.0 / 60.0, -5.0 / 12.0];

    let mut prev = VectorField::zeros(state.state.grid());
    for stage in 0..3 {
        let f = rhs(&state.state)?;
        let mut u = state.state.clone();
        for c in 0..3 {
            let fc = &f.components[c].values;
            let pc = &prev.components[c].values;
            for (i, x) in u.components[c].values.iter_mut().enumerate() {
                *x += dt * (A[stage] * fc[i] + B[stage] * pc[i]);
            }
        }
        state.state = projector(&u)?;
        prev = f;
    }
    state.t += dt;
    state.step += 1;
    for c in &state.state.components {
        ensure_finite(&c.values, state.step)?;
    }
    Ok(())
}

/// Random Burgers initial condition with spectrum
/// `v̂_k = a (k/k₀)² exp(−(k/k₀)²/2 + 2πi ε_k)`, `a = 2(3k₀√π)^{−1/2}`,
/// `k₀ = 10`, and independent uniform phases `ε_k` drawn in increasing `k`.
///
/// Conjugate mirroring makes the field real; the mean mode (and, on even
/// grids, the unmatched highest mode) is zero. The analytic amplitude puts
/// the energy `Σ_k |v̂_k|²` within a percent of 1/2; `exact_energy` rescales
/// the spectrum to exactly 1/2 instead.
pub fn burgers_init(grid: Grid1D, rng: &mut RngStream, exact_energy: bool) -> Field1 {
    let n = grid.n;
    let amplitude = 2.0 / (3.0 * BURGERS_INIT_K0 * PI.sqrt()).sqrt();
    let kmax = (n - 1) / 2;
    let mut hat = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=kmax {
        let eps = rng.uniform();
        let s = k as f64 / BURGERS_INIT_K0;
        let modulus = amplitude * s * s * (-0.5 * s * s).exp();
        hat[k] = Complex64::from_polar(modulus, 2.0 * PI * eps);
        hat[n - k] = hat[k].conj();
    }
    if exact_energy {
        let half_sum: f64 = hat[1..=kmax].iter().map(|c| c.norm_sqr()).sum();
        let scale = (0.5 / half_sum).sqrt();
        for c in &mut hat {
            *c *= scale;
        }
    }
    FftPlan::new(n).inverse(&mut hat);
    let values = hat.iter().map(|c| c.re).collect();
    Field1::new(grid, StaggerLocation::Center, values).expect("spectrum sized to the grid")
}

/// Random solenoidal Navier-Stokes initial condition with shell energies
/// following `P(κ) = κ⁴ exp(−2(κ/κ₀)²)` and total energy exactly 1/2.
///
/// The construction samples standard normal components (component-major,
/// row-major within a component), projects, rescales each integer shell
/// `κ ≤ ‖k‖ < κ+1` in Fourier space to the target profile, transforms back,
/// reprojects, and finally rescales the total energy `½⟨|v|²⟩` to 1/2.
/// Shells with no energy are left untouched; shells with zero target
/// (including the mean mode) are zeroed.
pub fn ns_init(
    grid: Grid3D,
    solver: &PoissonSolver,
    rng: &mut RngStream,
    kappa0: f64,
) -> Result<VectorField> {
    if solver.grid != grid {
        return Err(Error::GridMismatch(
            "Poisson solver built for a different grid".into(),
        ));
    }
    let n = grid.n;
    let total = grid.points();

    let components = std::array::from_fn(|i| {
        let values = (0..total).map(|_| rng.standard_normal()).collect();
        Field3::new(grid, StaggerLocation::Face(i), values).expect("sampled to the grid size")
    });
    let v = VectorField::from_components(components)?;
    let v = project_vector(solver, &v)?;

    let fft = Fft3::new(n);
    let mut hats: Vec<Vec<Complex64>> = v
        .components
        .iter()
        .map(|c| {
            let mut data = to_complex(&c.values);
            fft.forward(&mut data);
            let norm = 1.0 / total as f64;
            for z in &mut data {
                *z *= norm;
            }
            data
        })
        .collect();

    let mut energy = vec![0.0f64; shell_count(n)];
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                let m = (i1 * n + i2) * n + i3;
                let e: f64 = hats.iter().map(|h| h[m].norm_sqr()).sum();
                energy[shell_index(i1, i2, i3, n)] += 0.5 * e;
            }
        }
    }
    let factor: Vec<f64> = energy
        .iter()
        .enumerate()
        .map(|(kappa, &e)| {
            let k = kappa as f64;
            let target = k.powi(4) * (-2.0 * (k / kappa0).powi(2)).exp();
            if target == 0.0 {
                0.0
            } else if e == 0.0 {
                1.0
            } else {
                (target / e).sqrt()
            }
        })
        .collect();
    for i1 in 0..n {
        for i2 in 0..n {
            for i3 in 0..n {
                let m = (i1 * n + i2) * n + i3;
                let f = factor[shell_index(i1, i2, i3, n)];
                for h in &mut hats {
                    h[m] *= f;
                }
            }
        }
    }

    let components = std::array::from_fn(|i| {
        let mut data = std::mem::take(&mut hats[i]);
        fft.inverse(&mut data);
        let values = data.iter().map(|z| z.re).collect();
        Field3::new(grid, StaggerLocation::Face(i), values).expect("transform preserves size")
    });
    let v = VectorField::from_components(components)?;
    let mut v = project_vector(solver, &v)?;

    let sum_sq: f64 = v
        .components
        .iter()
        .flat_map(|c| c.values.iter())
        .map(|x| x * x)
        .sum();
    let scale = (total as f64 / sum_sq).sqrt();
    for c in &mut v.components {
        for x in &mut c.values {
            *x *= scale;
        }
    }
    Ok(v)
}
