//! Diagnostics: shell energy spectra, turbulence statistics, sub-filter
//! dissipation coefficients with kernel density estimates, relative errors,
//! the Q-criterion, and the CSV formats the experiment harness emits.
//!
//! Spectra use the transform convention `û = FFT(u) / N^d`, under which the
//! shell sum satisfies Parseval's identity `Σ_κ E(κ) = ½⟨‖v‖²⟩` with the
//! domain-averaged square on the right.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::closures::collocate_gradient;
use crate::fft::{shell_count, shell_index, to_complex, Fft3, FftPlan};
use crate::grid::{Field1, Field3, StaggerLocation, TensorField, VectorField};
use crate::ops1d::diff_1d;
use crate::ops3d::{diff_3d, interp_3d};
use crate::{Error, Result};

/// Kolmogorov constant of the inertial-range reference spectrum.
pub const KOLMOGOROV_CONSTANT: f64 = 0.5;
/// Number of evaluation points of a kernel density estimate.
pub const KDE_POINTS: usize = 512;
/// Densities below this value are marked as not visible (too few samples to
/// trust the estimate there).
pub const KDE_VISIBILITY_FLOOR: f64 = 1e-4;

/// Shell-binned kinetic energy: `energy[κ] = ½ Σ_{κ ≤ ‖k‖ < κ+1} ‖û(k)‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energy: Vec<f64>,
}

impl Spectrum {
    /// Total energy `Σ_κ E(κ)`.
    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }
}

/// Energy spectrum of a periodic 1D field; shell `κ` collects `k = ±κ`.
pub fn energy_spectrum_1d(u: &Field1) -> Spectrum {
    let n = u.grid.n;
    let mut hat = to_complex(&u.values);
    FftPlan::new(n).forward(&mut hat);
    let norm = 1.0 / n as f64;
    let mut energy = vec![0.0; n / 2 + 1];
    for (i, z) in hat.iter().enumerate() {
        let k = if 2 * i <= n { i } else { n - i };
        energy[k] += 0.5 * (z * norm).norm_sqr();
    }
    Spectrum { energy }
}

/// Energy spectrum of a periodic velocity field over integer shells
/// `κ ≤ ‖k‖ < κ+1`, including the partially filled shells beyond `N/2`.
pub fn energy_spectrum(v: &VectorField) -> Spectrum {
    let n = v.grid().n;
    let fft = Fft3::new(n);
    let norm = 1.0 / v.grid().points() as f64;
    let mut energy = vec![0.0; shell_count(n)];
    for c in &v.components {
        let mut hat = to_complex(&c.values);
        fft.forward(&mut hat);
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let z = hat[(i1 * n + i2) * n + i3] * norm;
                    energy[shell_index(i1, i2, i3, n)] += 0.5 * z.norm_sqr();
                }
            }
        }
    }
    Spectrum { energy }
}

/// Inertial-range reference spectrum `κ ↦ C ε^{2/3} κ^{−5/3}`.
pub fn kolmogorov_reference(epsilon: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |kappa: f64| c * epsilon.powf(2.0 / 3.0) * kappa.powf(-5.0 / 3.0)
}

/// Turbulence statistics of a velocity field; all quantities use the
/// domain-averaged dissipation rate `ε = ν⟨(δ_j v_i)(δ_j v_i)⟩`.
///
/// A zero field (or zero dissipation) has no meaningful scales; the struct
/// then carries zeros and `degenerate` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbStats {
    pub v_rms: f64,
    pub epsilon: f64,
    pub l_int: f64,
    pub l_tay: f64,
    pub t_int: f64,
    pub t_tay: f64,
    pub re_int: f64,
    pub re_tay: f64,
    pub degenerate: bool,
}

/// Root-mean-square velocity, dissipation rate, integral and Taylor scales,
/// and their Reynolds numbers.
pub fn turbulence_stats(v: &VectorField, nu: f64) -> Result<TurbStats> {
    let mean_sq = |values: &[f64]| -> f64 {
        values.iter().map(|x| x * x).sum::<f64>() / values.len() as f64
    };
    let v_rms = v
        .components
        .iter()
        .map(|c| mean_sq(&c.values))
        .sum::<f64>()
        .sqrt();
    let mut grad_sq = 0.0;
    for c in &v.components {
        for axis in 0..3 {
            grad_sq += mean_sq(&diff_3d(c, axis)?.values);
        }
    }
    let epsilon = nu * grad_sq;
    if !(v_rms > 0.0 && epsilon > 0.0) {
        return Ok(TurbStats {
            v_rms: 0.0,
            epsilon: 0.0,
            l_int: 0.0,
            l_tay: 0.0,
            t_int: 0.0,
            t_tay: 0.0,
            re_int: 0.0,
            re_tay: 0.0,
            degenerate: true,
        });
    }
    let l_int = v_rms.powi(3) / epsilon;
    let l_tay = (nu / epsilon).sqrt() * v_rms;
    Ok(TurbStats {
        v_rms,
        epsilon,
        l_int,
        l_tay,
        t_int: l_int / v_rms,
        t_tay: l_tay / v_rms,
        re_int: v_rms * l_int / nu,
        re_tay: v_rms * l_tay / nu,
        degenerate: false,
    })
}

/// Discrete relative L2 error `‖w − ref‖ / ‖ref‖` of a 1D field.
pub fn relative_error_1d(w: &Field1, reference: &Field1) -> Result<f64> {
    if w.grid != reference.grid || w.location != reference.location {
        return Err(Error::GridMismatch(
            "relative error needs both fields on the same grid and location".into(),
        ));
    }
    Ok(norm_ratio(
        sq_diff(&w.values, &reference.values),
        sq_sum(&reference.values),
    ))
}

/// Discrete relative L2 error over all velocity components and points.
pub fn relative_error(w: &VectorField, reference: &VectorField) -> Result<f64> {
    if w.grid() != reference.grid() {
        return Err(Error::GridMismatch(
            "relative error needs both fields on the same grid".into(),
        ));
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (a, b) in w.components.iter().zip(&reference.components) {
        diff += sq_diff(&a.values, &b.values);
        norm += sq_sum(&b.values);
    }
    Ok(norm_ratio(diff, norm))
}

fn sq_sum(values: &[f64]) -> f64 {
    values.iter().map(|x| x * x).sum()
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm_ratio(diff: f64, norm: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        (diff / norm).sqrt()
    }
}

/// Collocates a staggered scalar to cell centers by interpolating along every
/// whole-offset axis.
fn collocate_to_center(f: &Field3) -> Result<Field3> {
    let mut out = f.clone();
    for axis in 0..3 {
        if out.location.is_whole(axis) {
            out = interp_3d(&out, axis)?;
        }
    }
    Ok(out)
}

/// Sub-filter dissipation coefficient `D = m_ij δ_j w_i` at cell centers.
///
/// Both the model tensor and the velocity gradient are collocated with the
/// same interpolation stencils, so a zero model gives a bit-exact zero field.
pub fn dissipation_coefficient(m: &TensorField, w: &VectorField) -> Result<Field3> {
    if m.grid() != w.grid() {
        return Err(Error::GridMismatch(
            "model tensor and velocity on different grids".into(),
        ));
    }
    let grads = collocate_gradient(w)?;
    let mut collocated = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            collocated.push(collocate_to_center(&m.components[i][j])?);
        }
    }
    let mut out = Field3::zeros(w.grid(), StaggerLocation::Center);
    for (p, d) in out.values.iter_mut().enumerate() {
        let g = &grads.values[p].g;
        let mut sum = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                sum += collocated[3 * i + j].values[p] * g[(i, j)];
            }
        }
        *d = sum;
    }
    Ok(out)
}

/// Burgers sub-filter dissipation coefficient `D/H² = m δw / H²` at the
/// coarse faces, normalized by the squared coarse spacing.
pub fn dissipation_coefficient_1d(m: &Field1, w: &Field1) -> Result<Field1> {
    if m.grid != w.grid {
        return Err(Error::GridMismatch(
            "model flux and velocity on different grids".into(),
        ));
    }
    if m.location != StaggerLocation::Face(0) {
        return Err(Error::InvalidLocation {
            location: m.location,
            context: "a Burgers model flux (face field)",
        });
    }
    let dw = diff_1d(w);
    let h2 = w.grid.h * w.grid.h;
    let values = m
        .values
        .iter()
        .zip(&dw.values)
        .map(|(a, b)| a * b / h2)
        .collect();
    Field1::new(m.grid, StaggerLocation::Face(0), values)
}

/// Q-criterion `Q = −½ tr(G²)` at cell centers from the collocated velocity
/// gradient.
pub fn q_criterion(v: &VectorField) -> Result<Field3> {
    let grads = collocate_gradient(v)?;
    let mut out = Field3::zeros(v.grid(), StaggerLocation::Center);
    for (q, p) in out.values.iter_mut().zip(&grads.values) {
        *q = -0.5 * (p.g * p.g).trace();
    }
    Ok(out)
}

/// Gaussian kernel density estimate on a uniform evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
    /// Whether the density exceeds [`KDE_VISIBILITY_FLOOR`] at each point.
    pub visible: Vec<bool>,
    pub bandwidth: f64,
}

/// Gaussian kernel density estimate with Silverman's bandwidth
/// `0.9·min(σ̂, IQR/1.34)·n^{−1/5}` unless one is supplied. The density is
/// evaluated on [`KDE_POINTS`] uniform points spanning the samples plus three
/// bandwidths on either side. Degenerate samples (zero spread) fall back to a
/// narrow kernel around the repeated value.
pub fn kde(samples: &[f64], bandwidth: Option<f64>) -> Result<DensityEstimate> {
    if samples.is_empty() {
        return Err(Error::Config("kde needs at least one sample".into()));
    }
    let bw = bandwidth.unwrap_or_else(|| silverman_bandwidth(samples));
    if !(bw >= 0.0 && bw.is_finite()) {
        return Err(Error::Config(format!(
            "kde bandwidth must be nonnegative and finite, got {bw}"
        )));
    }
    let bw = if bw > 0.0 {
        bw
    } else {
        1e-3 * (1.0 + samples[0].abs())
    };

    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * bw;
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * bw;
    let dx = (hi - lo) / (KDE_POINTS - 1) as f64;
    let x: Vec<f64> = (0..KDE_POINTS).map(|i| lo + i as f64 * dx).collect();
    let norm = 1.0 / (samples.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let density: Vec<f64> = x
        .par_iter()
        .map(|&xi| {
            let sum: f64 = samples
                .iter()
                .map(|&s| {
                    let z = (xi - s) / bw;
                    (-0.5 * z * z).exp()
                })
                .sum();
            norm * sum
        })
        .collect();
    let visible = density.iter().map(|&d| d >= KDE_VISIBILITY_FLOOR).collect();
    Ok(DensityEstimate {
        x,
        density,
        visible,
        bandwidth: bw,
    })
}

fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    0.9 * var.sqrt().min(iqr / 1.34) * n.powf(-0.2)
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Writes `spectrum.csv`: shell number plus one energy column per labeled
/// spectrum. The header comment records the transform normalization.
pub fn write_spectrum_csv(path: &Path, columns: &[(&str, &Spectrum)]) -> Result<()> {
    let shells = columns.first().map_or(0, |(_, s)| s.energy.len());
    if columns.iter().any(|(_, s)| s.energy.len() != shells) {
        return Err(Error::Config(
            "spectrum columns have different shell counts".into(),
        ));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(
        out,
        "# E(kappa) = 0.5 * sum over kappa <= |k| < kappa+1 of |u_hat(k)|^2, u_hat = FFT(u)/N^d"
    )?;
    write!(out, "kappa")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for kappa in 0..shells {
        write!(out, "{kappa}")?;
        for (_, s) in columns {
            write!(out, ",{:e}", s.energy[kappa])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `errors.csv` rows `(t, err_no_model, err_classic, err_swap_sym,
/// err_swap)`.
pub fn write_errors_csv(path: &Path, rows: &[(f64, [f64; 4])]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,err_no_model,err_classic,err_swap_sym,err_swap")?;
    for (t, errs) in rows {
        write!(out, "{t:e}")?;
        for e in errs {
            write!(out, ",{e:e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `dissipation.csv` rows `(value, density, model)`, dropping points
/// below the visibility floor.
pub fn write_dissipation_csv(path: &Path, blocks: &[(&str, &DensityEstimate)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "value,density,model")?;
    for (model, estimate) in blocks {
        for ((x, d), visible) in estimate
            .x
            .iter()
            .zip(&estimate.density)
            .zip(&estimate.visible)
        {
            if *visible {
                writeln!(out, "{x:e},{d:e},{model}")?;
            }
        }
    }
    Ok(())
}
