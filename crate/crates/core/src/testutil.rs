//! Helpers shared by the unit tests: deterministic random fields, sup-norm
//! comparisons, and observed-order estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Field1, Field3, Grid1D, Grid3D, StaggerLocation, TensorField, VectorField};

pub(crate) fn random_field_1d(grid: Grid1D, location: StaggerLocation, seed: u64) -> Field1 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field1::new(grid, location, values).unwrap()
}

pub(crate) fn random_field(grid: Grid3D, location: StaggerLocation, seed: u64) -> Field3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.points()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field3::new(grid, location, values).unwrap()
}

pub(crate) fn random_vector(grid: Grid3D, seed: u64) -> VectorField {
    VectorField::from_components(std::array::from_fn(|i| {
        random_field(grid, StaggerLocation::Face(i), seed + i as u64)
    }))
    .unwrap()
}

pub(crate) fn max_abs(a: &Field3) -> f64 {
    a.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

pub(crate) fn max_abs_diff(a: &Field3, b: &Field3) -> f64 {
    assert_eq!(a.values.len(), b.values.len());
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn max_abs_1d(a: &Field1) -> f64 {
    a.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

pub(crate) fn max_abs_diff_1d(a: &Field1, b: &Field1) -> f64 {
    assert_eq!(a.values.len(), b.values.len());
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn tensor_max_abs(t: &TensorField) -> f64 {
    t.components
        .iter()
        .flatten()
        .map(max_abs)
        .fold(0.0, f64::max)
}

pub(crate) fn vector_max_abs(v: &VectorField) -> f64 {
    v.components.iter().map(max_abs).fold(0.0, f64::max)
}

pub(crate) fn vector_max_abs_diff(a: &VectorField, b: &VectorField) -> f64 {
    (0..3)
        .map(|i| max_abs_diff(&a.components[i], &b.components[i]))
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log(error)` against `log(h) ~ -log(n)`.
pub(crate) fn fit_log_slope(sizes: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = sizes.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
