//! Pseudo-spectral viscous Burgers in Fourier-coefficient space: dealiased
//! numerical flux, spectral cutoff filter, and the cutoff-filter commutator
//! that closes a band-limited run against a wider-band reference run.
//!
//! The conservation law is `∂_t u + ik·r(u) = 0` on the coefficients
//! `u(k)`, `|k| ≤ K`, over a periodic domain of length 2π. The quadratic
//! term is evaluated pointwise on `2K+1` physical samples after truncating
//! the inputs to the dealiasing band `θ` (two-thirds rule by default).

use std::f64::consts::PI;

pub use rustfft::num_complex::Complex64;

use crate::diagnostics::Spectrum;
use crate::fft::FftPlan;
use crate::sfs::ClosureKind;
use crate::simulate::{RngStream, TimeState, BURGERS_INIT_K0};
use crate::{Error, Result};

/// Band-limited complex Fourier coefficients `u(k)` for `k = −K..K`,
/// Hermitian so that the underlying physical field is real.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    band: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Wraps coefficients (length `2K+1`, mode `k` at index `K+k`),
    /// rejecting non-Hermitian data.
    pub fn new(band: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * band + 1 {
            return Err(Error::ShapeMismatch {
                got: coeffs.len(),
                want: 2 * band + 1,
            });
        }
        let field = Self { band, coeffs };
        let scale = field
            .coeffs
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
            .max(1e-300);
        if field.hermitian_defect() > 1e-14 * scale {
            return Err(Error::Config(
                "spectral coefficients are not Hermitian".into(),
            ));
        }
        Ok(field)
    }

    pub fn zeros(band: usize) -> Self {
        Self {
            band,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * band + 1],
        }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Coefficient of mode `k`; zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let b = self.band as i64;
        if k.abs() > b {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + b) as usize]
        }
    }

    /// All coefficients, mode `k` at index `band + k`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Largest violation of `u(−k) = conj(u(k))` (twice the imaginary part
    /// at `k = 0`).
    pub fn hermitian_defect(&self) -> f64 {
        let b = self.band as i64;
        let mut worst = 0.0f64;
        for k in 0..=b {
            let defect = (self.coeff(k) - self.coeff(-k).conj()).norm();
            worst = worst.max(defect);
        }
        worst
    }

    /// Energy `Σ_k |u(k)|²` over the whole band.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Physical samples `u(x_j)`, `x_j = 2πj/(2K+1)`, via an inverse transform.
fn to_physical(u: &SpectralField) -> Vec<Complex64> {
    let m = 2 * u.band + 1;
    let mut bins = vec![Complex64::new(0.0, 0.0); m];
    bins[0] = u.coeff(0);
    for k in 1..=u.band {
        bins[k] = u.coeff(k as i64);
        bins[m - k] = u.coeff(-(k as i64));
    }
    FftPlan::new(m).inverse(&mut bins);
    bins
}

/// Coefficients of `2K+1` physical samples via a forward transform.
fn to_spectral(mut samples: Vec<Complex64>, band: usize) -> SpectralField {
    let m = 2 * band + 1;
    debug_assert_eq!(samples.len(), m);
    FftPlan::new(m).forward(&mut samples);
    let norm = 1.0 / m as f64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
    coeffs[band] = samples[0] * norm;
    for k in 1..=band {
        coeffs[band + k] = samples[k] * norm;
        coeffs[band - k] = samples[m - k] * norm;
    }
    SpectralField { band, coeffs }
}

/// Spectral cutoff: zeroes all modes with `|k| > K`. The result lives on the
/// band `min(K, band)`, so a cutoff at or above the band is the identity.
pub fn cutoff_filter(u: &SpectralField, k_cut: usize) -> SpectralField {
    let band = k_cut.min(u.band);
    let mut out = SpectralField::zeros(band);
    for k in -(band as i64)..=(band as i64) {
        out.coeffs[(k + band as i64) as usize] = u.coeff(k);
    }
    out
}

/// Dealiased numerical Burgers flux
/// `r(u) = ½·DFT((IDFT ū^θ)²) − ν i k u` on the band of `u`.
///
/// `theta` defaults to the two-thirds rule `⌊2K/3⌋` and may not exceed the
/// band.
pub fn spectral_flux(u: &SpectralField, nu: f64, theta: Option<usize>) -> Result<SpectralField> {
    let band = u.band;
    let theta = theta.unwrap_or(2 * band / 3);
    if theta > band {
        return Err(Error::BadBand {
            band,
            requested: theta,
        });
    }
    let mut truncated = u.clone();
    for k in -(band as i64)..=(band as i64) {
        if k.abs() > theta as i64 {
            truncated.coeffs[(k + band as i64) as usize] = Complex64::new(0.0, 0.0);
        }
    }
    let mut samples = to_physical(&truncated);
    for z in &mut samples {
        *z = *z * *z;
    }
    let quadratic = to_spectral(samples, band);
    let mut out = SpectralField::zeros(band);
    for k in -(band as i64)..=(band as i64) {
        let i = (k + band as i64) as usize;
        let ik = Complex64::new(0.0, k as f64);
        out.coeffs[i] = 0.5 * quadratic.coeffs[i] - nu * ik * u.coeffs[i];
    }
    Ok(out)
}

/// Cutoff-filter flux commutator `τ = cutoff_K(r(u)) − r(cutoff_K(u))`
/// between a wide-band reference field and its band-`K` cutoff, both fluxes
/// dealiased with their own two-thirds bands.
pub fn spectral_sfs(u: &SpectralField, k_les: usize, nu: f64) -> Result<SpectralField> {
    let r_fine = spectral_flux(u, nu, None)?;
    let filtered = cutoff_filter(&r_fine, k_les);
    let ubar = cutoff_filter(u, k_les);
    let r_coarse = spectral_flux(&ubar, nu, None)?;
    let mut out = SpectralField::zeros(filtered.band);
    for (o, (a, b)) in out
        .coeffs
        .iter_mut()
        .zip(filtered.coeffs.iter().zip(&r_coarse.coeffs))
    {
        *o = a - b;
    }
    Ok(out)
}

/// The commutator model a band-limited run adds to its flux. Supported
/// closures: `no_model` (zero) and `swap` (the exact cutoff commutator).
pub fn spectral_model(
    dns: &SpectralField,
    band: usize,
    nu: f64,
    kind: ClosureKind,
) -> Result<SpectralField> {
    match kind {
        ClosureKind::NoModel => Ok(SpectralField::zeros(band)),
        ClosureKind::Swap => spectral_sfs(dns, band, nu),
        other => Err(Error::Config(format!(
            "spectral runs support the no_model and swap closures, got {}",
            other.name()
        ))),
    }
}

/// One forward-Euler step of `∂_t u = −ik r(u)` with the dealiased flux.
pub fn spectral_dns_step(state: &mut TimeState<SpectralField>, nu: f64, dt: f64) -> Result<()> {
    let flux = spectral_flux(&state.state, nu, None)?;
    advance(&mut state.state, &flux, None, dt);
    state.t += dt;
    state.step += 1;
    ensure_finite(&state.state, state.step)
}

/// One forward-Euler step of a band-limited run driven by a model term:
/// `w ← w − Δt·ik(r(w) + m)`.
pub fn spectral_les_step(
    state: &mut TimeState<SpectralField>,
    nu: f64,
    model: &SpectralField,
    dt: f64,
) -> Result<()> {
    if model.band != state.state.band {
        return Err(Error::BadBand {
            band: state.state.band,
            requested: model.band,
        });
    }
    let flux = spectral_flux(&state.state, nu, None)?;
    advance(&mut state.state, &flux, Some(model), dt);
    state.t += dt;
    state.step += 1;
    ensure_finite(&state.state, state.step)
}

/// Advances a wide-band reference run and an aided band-limited run by one
/// shared Euler step, with the commutator model evaluated from the reference
/// state before either update.
pub fn spectral_step_pair(
    dns: &mut TimeState<SpectralField>,
    les: &mut TimeState<SpectralField>,
    nu: f64,
    kind: ClosureKind,
    dt: f64,
) -> Result<()> {
    debug_assert!((dns.t - les.t).abs() <= 1e-12 * dns.t.abs().max(1.0));
    let model = spectral_model(&dns.state, les.state.band, nu, kind)?;
    spectral_dns_step(dns, nu, dt)?;
    spectral_les_step(les, nu, &model, dt)
}

fn advance(u: &mut SpectralField, flux: &SpectralField, model: Option<&SpectralField>, dt: f64) {
    let band = u.band as i64;
    for k in -band..=band {
        let i = (k + band) as usize;
        let mut r = flux.coeffs[i];
        if let Some(m) = model {
            r += m.coeffs[i];
        }
        u.coeffs[i] -= dt * Complex64::new(0.0, k as f64) * r;
    }
}

fn ensure_finite(u: &SpectralField, step: usize) -> Result<()> {
    if u.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

/// Euler-stable time step for a spectral run, using the collocation spacing
/// `2π/(2K+1)` in the usual `C·min(h/max|u|, h²/ν)` bound.
pub fn spectral_cfl_dt(u: &SpectralField, nu: f64, c: f64) -> f64 {
    let h = 2.0 * PI / (2 * u.band + 1) as f64;
    let vmax = to_physical(u)
        .iter()
        .fold(0.0f64, |m, z| m.max(z.re.abs()));
    let viscous = h * h / nu;
    if vmax > 0.0 {
        c * (h / vmax).min(viscous)
    } else {
        c * viscous
    }
}

/// Random initial coefficients with the same spectrum as the physical-space
/// Burgers initializer: `u(k) = a (k/k₀)² exp(−(k/k₀)²/2 + 2πi ε_k)` with
/// conjugate mirroring, zero mean mode, and optional exact rescale of the
/// one-sided energy `Σ_{k≥1} |u(k)|²` to 1/2.
pub fn spectral_init(band: usize, rng: &mut RngStream, exact_energy: bool) -> SpectralField {
    let amplitude = 2.0 / (3.0 * BURGERS_INIT_K0 * PI.sqrt()).sqrt();
    let mut out = SpectralField::zeros(band);
    for k in 1..=band {
        let eps = rng.uniform();
        let s = k as f64 / BURGERS_INIT_K0;
        let modulus = amplitude * s * s * (-0.5 * s * s).exp();
        let z = Complex64::from_polar(modulus, 2.0 * PI * eps);
        out.coeffs[band + k] = z;
        out.coeffs[band - k] = z.conj();
    }
    if exact_energy {
        let scale = (1.0 / out.energy()).sqrt();
        for z in &mut out.coeffs {
            *z *= scale;
        }
    }
    out
}

/// Shell spectrum `E(κ) = ½ Σ_{|k| = κ} |u(k)|²` of a spectral field.
pub fn spectral_spectrum(u: &SpectralField) -> Spectrum {
    let mut energy = vec![0.0; u.band + 1];
    let band = u.band as i64;
    for k in -band..=band {
        energy[k.unsigned_abs() as usize] += 0.5 * u.coeff(k).norm_sqr();
    }
    Spectrum { energy }
}

/// Relative coefficient-space L2 error `‖w − ref‖ / ‖ref‖`.
pub fn spectral_relative_error(w: &SpectralField, reference: &SpectralField) -> Result<f64> {
    if w.band != reference.band {
        return Err(Error::BadBand {
            band: reference.band,
            requested: w.band,
        });
    }
    let diff: f64 = w
        .coeffs
        .iter()
        .zip(&reference.coeffs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    if diff == 0.0 {
        return Ok(0.0);
    }
    Ok((diff / reference.energy()).sqrt())
}
