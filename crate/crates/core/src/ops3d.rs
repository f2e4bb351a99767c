//! 3D staggered operators: per-axis differences and interpolations, fine-grid
//! moving averages, and fused two-grid filters onto the coarse grid.
//!
//! Differencing or interpolating along an axis toggles that axis between the
//! half-offset (center-class) and whole-offset (face-class) positions, so the
//! stagger algebra is closed on center/face/edge locations; the corner
//! pattern (whole along all three axes) is unreachable by the fields used
//! here and is rejected.
//!
//! Filters never interpolate: along averaged axes they sum `2n+1` fine
//! samples centered on the coincident fine point, along unaveraged axes they
//! read the coincident fine point directly. Summation order is fixed (axis 0
//! outermost, offsets ascending) so results are bit-reproducible.

use rayon::prelude::*;

use crate::grid::{Field3, GridPair3, StaggerLocation, VectorField};
use crate::projection::{project_vector, PoissonSolver};
use crate::{Error, Result};

/// Two-grid filter footprint for scalar fields.
///
/// `Volume` averages along all three axes, `Surface(i)` along every axis
/// except `i`, and `Line(i, j)` along the single axis complementary to the
/// pair (`Line` is unordered).
#[derive(Debug, Clone, Copy)]
pub enum FilterKind {
    Volume,
    Surface(usize),
    Line(usize, usize),
}

impl FilterKind {
    pub fn line(a: usize, b: usize) -> Self {
        assert!(a < 3 && b < 3 && a != b, "bad line axes: {a}, {b}");
        Self::Line(a.min(b), a.max(b))
    }

    /// Which axes the filter averages along.
    pub fn averaged_axes(&self) -> [bool; 3] {
        match *self {
            Self::Volume => [true; 3],
            Self::Surface(i) => {
                assert!(i < 3, "axis out of range: {i}");
                let mut m = [true; 3];
                m[i] = false;
                m
            }
            Self::Line(i, j) => {
                assert!(i < 3 && j < 3 && i != j, "bad line axes: {i}, {j}");
                let mut m = [true; 3];
                m[i] = false;
                m[j] = false;
                m
            }
        }
    }
}

impl PartialEq for FilterKind {
    fn eq(&self, other: &Self) -> bool {
        self.averaged_axes() == other.averaged_axes()
    }
}

impl Eq for FilterKind {}

/// How a velocity field is carried to the coarse grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFilterKind {
    /// Volume filter on every component. Does not preserve zero divergence.
    VolumeAverage,
    /// Volume filter followed by the coarse vector projector. Divergence
    /// free, but mixes components.
    ProjectedVolumeAverage,
    /// Component `i` filtered with `Surface(i)`. Divergence free without
    /// projection.
    SurfaceAverage,
}

impl VectorFilterKind {
    pub const ALL: [VectorFilterKind; 3] = [
        VectorFilterKind::VolumeAverage,
        VectorFilterKind::ProjectedVolumeAverage,
        VectorFilterKind::SurfaceAverage,
    ];

    /// Stable name used in CSV columns and config files.
    pub fn name(&self) -> &'static str {
        match self {
            VectorFilterKind::VolumeAverage => "va",
            VectorFilterKind::ProjectedVolumeAverage => "pva",
            VectorFilterKind::SurfaceAverage => "sa",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "va" => Some(VectorFilterKind::VolumeAverage),
            "pva" => Some(VectorFilterKind::ProjectedVolumeAverage),
            "sa" => Some(VectorFilterKind::SurfaceAverage),
            _ => None,
        }
    }
}

fn toggled(location: StaggerLocation, axis: usize, op: &'static str) -> Result<StaggerLocation> {
    assert!(axis < 3, "axis out of range: {axis}");
    let mut mask = location.whole_mask();
    mask[axis] = !mask[axis];
    StaggerLocation::from_whole_mask(mask).ok_or(Error::StaggerNotClosed { location, op, axis })
}

/// Applies `f(lower, upper)` to the two samples at `x - h/2` and `x + h/2`
/// along `axis`, producing the toggled stagger class.
fn two_point_axis<F>(u: &Field3, axis: usize, f: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let n = u.grid.n;
    let v = &u.values;
    let whole_input = u.location.is_whole(axis);
    let mut out = vec![0.0; v.len()];
    match axis {
        0 => {
            out.par_chunks_mut(n * n).enumerate().for_each(|(i1, slab)| {
                // half input: (lower, upper) slabs are (i1, i1+1);
                // whole input: (i1-1, i1).
                let (lo, hi) = if whole_input {
                    ((i1 + n - 1) % n, i1)
                } else {
                    (i1, (i1 + 1) % n)
                };
                let lo_slab = &v[lo * n * n..(lo + 1) * n * n];
                let hi_slab = &v[hi * n * n..(hi + 1) * n * n];
                for j in 0..n * n {
                    slab[j] = f(lo_slab[j], hi_slab[j]);
                }
            });
        }
        1 => {
            out.par_chunks_mut(n * n).enumerate().for_each(|(i1, slab)| {
                let base = &v[i1 * n * n..(i1 + 1) * n * n];
                for i2 in 0..n {
                    let (lo, hi) = if whole_input {
                        ((i2 + n - 1) % n, i2)
                    } else {
                        (i2, (i2 + 1) % n)
                    };
                    for i3 in 0..n {
                        slab[i2 * n + i3] = f(base[lo * n + i3], base[hi * n + i3]);
                    }
                }
            });
        }
        _ => {
            out.par_chunks_mut(n * n).enumerate().for_each(|(i1, slab)| {
                let base = &v[i1 * n * n..(i1 + 1) * n * n];
                for i2 in 0..n {
                    for i3 in 0..n {
                        let (lo, hi) = if whole_input {
                            ((i3 + n - 1) % n, i3)
                        } else {
                            (i3, (i3 + 1) % n)
                        };
                        slab[i2 * n + i3] = f(base[i2 * n + lo], base[i2 * n + hi]);
                    }
                }
            });
        }
    }
    out
}

/// Staggered difference along `axis`: `(u(x + h/2) - u(x - h/2)) / h`.
pub fn diff_3d(u: &Field3, axis: usize) -> Result<Field3> {
    let location = toggled(u.location, axis, "difference")?;
    let h = u.grid.h;
    let values = two_point_axis(u, axis, |lo, hi| (hi - lo) / h);
    Field3::new(u.grid, location, values)
}

/// Staggered interpolation along `axis`: `(u(x - h/2) + u(x + h/2)) / 2`.
pub fn interp_3d(u: &Field3, axis: usize) -> Result<Field3> {
    let location = toggled(u.location, axis, "interpolation")?;
    let values = two_point_axis(u, axis, |lo, hi| 0.5 * (lo + hi));
    Field3::new(u.grid, location, values)
}

/// Difference over a widened stencil `(u(x + s h/2) - u(x - s h/2)) / (s h)`
/// for odd `span` `s`, still on the fine grid. `span = 1` is [`diff_3d`].
pub(crate) fn diff_span(u: &Field3, axis: usize, span: usize) -> Result<Field3> {
    assert!(span % 2 == 1, "span must be odd");
    let location = toggled(u.location, axis, "difference")?;
    let n = u.grid.n;
    let denom = span as f64 * u.grid.h;
    let half = (span - 1) / 2;
    // Sample offsets along the axis, relative to the output index (derived
    // exactly like the coincident-index formulas).
    let (lo_shift, hi_shift) = if u.location.is_whole(axis) {
        (n - half - 1, half)
    } else {
        (n - half, half + 1)
    };
    let v = &u.values;
    let mut out = vec![0.0; v.len()];
    out.par_chunks_mut(n * n).enumerate().for_each(|(i1, slab)| {
        for i2 in 0..n {
            for i3 in 0..n {
                let pos = [i1, i2, i3];
                let lo = (pos[axis] + lo_shift) % n;
                let hi = (pos[axis] + hi_shift) % n;
                let from = |along: usize| {
                    let mut p = pos;
                    p[axis] = along;
                    v[(p[0] * n + p[1]) * n + p[2]]
                };
                slab[i2 * n + i3] = (from(hi) - from(lo)) / denom;
            }
        }
    });
    Field3::new(u.grid, location, out)
}

fn check_fine_3d(pair: &GridPair3, u: &Field3) -> Result<()> {
    if u.grid != pair.fine {
        return Err(Error::GridMismatch(format!(
            "field grid N={} is not the pair's fine grid N={}",
            u.grid.n, pair.fine.n
        )));
    }
    Ok(())
}

/// Moving `2n+1`-point average along one axis, staying on the fine grid.
/// Composing it over all three axes gives the volume filter (up to the final
/// restriction that [`filter_scalar`] fuses in).
pub fn line_filter(pair: &GridPair3, u: &Field3, axis: usize) -> Result<Field3> {
    assert!(axis < 3, "axis out of range: {axis}");
    check_fine_3d(pair, u)?;
    let n = u.grid.n;
    let factor = pair.factor;
    let half = (factor - 1) / 2;
    let inv = 1.0 / factor as f64;
    let v = &u.values;
    let mut out = vec![0.0; v.len()];
    out.par_chunks_mut(n * n).enumerate().for_each(|(i1, slab)| {
        for i2 in 0..n {
            for i3 in 0..n {
                let pos = [i1, i2, i3];
                let mut sum = 0.0;
                for offset in 0..factor {
                    let mut p = pos;
                    p[axis] = (pos[axis] + n - half + offset) % n;
                    sum += v[(p[0] * n + p[1]) * n + p[2]];
                }
                slab[i2 * n + i3] = sum * inv;
            }
        }
    });
    Field3::new(u.grid, u.location, out)
}

/// Two-grid filter onto the coarse grid. Averaged axes sum `2n+1` fine
/// samples centered on the coincident fine point; unaveraged axes read the
/// coincident fine point directly. Every (kind, location) pair is admissible
/// because coarse points of every stagger class coincide with fine points of
/// the same class.
pub fn filter_scalar(pair: &GridPair3, u: &Field3, kind: FilterKind) -> Result<Field3> {
    check_fine_3d(pair, u)?;
    let nf = pair.fine.n;
    let nc = pair.coarse.n;
    let factor = pair.factor;
    let half = (factor - 1) / 2;
    let averaged = kind.averaged_axes();
    let counts: [usize; 3] = std::array::from_fn(|a| if averaged[a] { factor } else { 1 });
    let weight = 1.0 / (counts[0] * counts[1] * counts[2]) as f64;

    let v = &u.values;
    let mut out = vec![0.0; nc * nc * nc];
    out.par_chunks_mut(nc * nc)
        .enumerate()
        .for_each(|(c1, slab)| {
            for c2 in 0..nc {
                for c3 in 0..nc {
                    let coarse_index = [c1, c2, c3];
                    let center = pair.coincident_fine_index(u.location, coarse_index);
                    // First fine sample along each axis (mod nf).
                    let base: [usize; 3] = std::array::from_fn(|a| {
                        if averaged[a] {
                            (center[a] + nf - half) % nf
                        } else {
                            center[a]
                        }
                    });
                    let mut sum = 0.0;
                    for o1 in 0..counts[0] {
                        let i1 = (base[0] + o1) % nf;
                        for o2 in 0..counts[1] {
                            let i2 = (base[1] + o2) % nf;
                            let row = (i1 * nf + i2) * nf;
                            for o3 in 0..counts[2] {
                                let i3 = (base[2] + o3) % nf;
                                sum += v[row + i3];
                            }
                        }
                    }
                    slab[c2 * nc + c3] = sum * weight;
                }
            }
        });
    Field3::new(pair.coarse, u.location, out)
}

/// Restriction onto the coarse grid: reads the fine field at coincident
/// points, no averaging.
pub fn restrict_3d(pair: &GridPair3, u: &Field3) -> Result<Field3> {
    check_fine_3d(pair, u)?;
    let nf = pair.fine.n;
    let nc = pair.coarse.n;
    let v = &u.values;
    let mut out = vec![0.0; nc * nc * nc];
    out.par_chunks_mut(nc * nc)
        .enumerate()
        .for_each(|(c1, slab)| {
            for c2 in 0..nc {
                for c3 in 0..nc {
                    let f = pair.coincident_fine_index(u.location, [c1, c2, c3]);
                    slab[c2 * nc + c3] = v[(f[0] * nf + f[1]) * nf + f[2]];
                }
            }
        });
    Field3::new(pair.coarse, u.location, out)
}

/// Carries a fine staggered velocity field to the coarse grid.
///
/// `coarse_solver` must belong to the pair's coarse grid; it is only used by
/// the projected variant.
pub fn filter_vector(
    pair: &GridPair3,
    v: &VectorField,
    kind: VectorFilterKind,
    coarse_solver: &PoissonSolver,
) -> Result<VectorField> {
    let filtered = |component_kind: fn(usize) -> FilterKind| -> Result<VectorField> {
        let components: Vec<Field3> = (0..3)
            .map(|i| filter_scalar(pair, &v.components[i], component_kind(i)))
            .collect::<Result<_>>()?;
        VectorField::from_components(components.try_into().expect("three components"))
    };
    match kind {
        VectorFilterKind::VolumeAverage => filtered(|_| FilterKind::Volume),
        VectorFilterKind::ProjectedVolumeAverage => {
            let va = filtered(|_| FilterKind::Volume)?;
            project_vector(coarse_solver, &va)
        }
        VectorFilterKind::SurfaceAverage => filtered(FilterKind::Surface),
    }
}
