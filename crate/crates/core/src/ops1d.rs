//! 1D staggered difference, interpolation and two-grid filtering.
//!
//! The difference and interpolation stencils read the two neighbours at
//! `x - h/2` and `x + h/2`, so both operators move a field between the center
//! and face stagger classes. The two-grid filter averages `2n+1` fine values
//! centered on the coincident fine point and is evaluated only at coarse
//! points; because the coarse spacing is an odd multiple of the fine spacing
//! no interpolation is involved anywhere.

use crate::grid::{Field1, GridPair1, StaggerLocation};
use crate::{Error, Result};

fn toggled_1d(location: StaggerLocation) -> StaggerLocation {
    match location {
        StaggerLocation::Center => StaggerLocation::Face(0),
        _ => StaggerLocation::Center,
    }
}

/// Staggered difference `(u(x + h/2) - u(x - h/2)) / h`.
pub fn diff_1d(u: &Field1) -> Field1 {
    let n = u.grid.n;
    let h = u.grid.h;
    let mut out = Field1::zeros(u.grid, toggled_1d(u.location));
    if u.location.is_whole(0) {
        // Face input: output center i sits between faces i-1 and i.
        for i in 0..n {
            let prev = if i == 0 { n - 1 } else { i - 1 };
            out.values[i] = (u.values[i] - u.values[prev]) / h;
        }
    } else {
        // Center input: output face i sits between centers i and i+1.
        for i in 0..n {
            let next = if i + 1 == n { 0 } else { i + 1 };
            out.values[i] = (u.values[next] - u.values[i]) / h;
        }
    }
    out
}

/// Staggered interpolation `(u(x - h/2) + u(x + h/2)) / 2`.
pub fn interp_1d(u: &Field1) -> Field1 {
    let n = u.grid.n;
    let mut out = Field1::zeros(u.grid, toggled_1d(u.location));
    if u.location.is_whole(0) {
        for i in 0..n {
            let prev = if i == 0 { n - 1 } else { i - 1 };
            out.values[i] = 0.5 * (u.values[i] + u.values[prev]);
        }
    } else {
        for i in 0..n {
            let next = if i + 1 == n { 0 } else { i + 1 };
            out.values[i] = 0.5 * (u.values[next] + u.values[i]);
        }
    }
    out
}

fn check_fine(pair: &GridPair1, u: &Field1) -> Result<()> {
    if u.grid != pair.fine {
        return Err(Error::GridMismatch(format!(
            "field grid N={} is not the pair's fine grid N={}",
            u.grid.n, pair.fine.n
        )));
    }
    Ok(())
}

/// Two-grid top-hat filter: the `2n+1`-point average of the fine field
/// centered on the fine point coincident with each coarse point. Samples are
/// summed left to right and divided once, so results are bit-reproducible.
pub fn twogrid_filter_1d(pair: &GridPair1, u: &Field1) -> Result<Field1> {
    check_fine(pair, u)?;
    let nf = pair.fine.n;
    let factor = pair.factor;
    let half = (factor - 1) / 2;
    let mut out = Field1::zeros(pair.coarse, u.location);
    for i in 0..pair.coarse.n {
        let center = pair.coincident_fine_index(u.location, i);
        let mut sum = 0.0;
        for offset in 0..factor {
            let idx = (center + nf - half + offset) % nf;
            sum += u.values[idx];
        }
        out.values[i] = sum / factor as f64;
    }
    Ok(out)
}

/// Restriction: reads the fine field at the points coincident with the
/// coarse grid (no averaging).
pub fn restrict_1d(pair: &GridPair1, u: &Field1) -> Result<Field1> {
    check_fine(pair, u)?;
    let mut out = Field1::zeros(pair.coarse, u.location);
    for i in 0..pair.coarse.n {
        out.values[i] = u.values[pair.coincident_fine_index(u.location, i)];
    }
    Ok(out)
}

/// Continuous top-hat filter `(1/w) \int_{x-w/2}^{x+w/2} u(y) dy` evaluated
/// by composite Simpson quadrature. This is the test oracle for filter
/// identities; it never touches grid data.
///
/// `quad_points` is the minimum number of panels (at least 64; rounded up to
/// an even count).
pub fn tophat_filter_analytic(u: impl Fn(f64) -> f64, width: f64, x: f64, quad_points: usize) -> f64 {
    assert!(width > 0.0, "filter width must be positive");
    assert!(quad_points >= 64, "use at least 64 quadrature panels");
    let panels = quad_points + quad_points % 2;
    let a = x - 0.5 * width;
    let step = width / panels as f64;
    let mut sum = u(a) + u(a + width);
    for i in 1..panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * u(a + i as f64 * step);
    }
    sum * step / 3.0 / width
}
