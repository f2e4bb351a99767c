//! Internal rustfft wrappers: cached plans plus batched 1D and 3D complex
//! transforms. Transforms are unnormalized in both directions (a forward
//! followed by an inverse multiplies by the point count); callers apply
//! whatever normalization they need.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct FftPlan {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, line: &mut [Complex64]) {
        debug_assert_eq!(line.len(), self.n);
        self.fwd.process(line);
    }

    pub fn inverse(&self, line: &mut [Complex64]) {
        debug_assert_eq!(line.len(), self.n);
        self.inv.process(line);
    }
}

/// Signed wavenumber for DFT bin `i` of an `n`-point transform.
pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if 2 * i <= n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Integer shell number `⌊‖k‖⌋` of the 3D DFT bin `(i1, i2, i3)`.
pub(crate) fn shell_index(i1: usize, i2: usize, i3: usize, n: usize) -> usize {
    let k1 = wavenumber(i1, n) as f64;
    let k2 = wavenumber(i2, n) as f64;
    let k3 = wavenumber(i3, n) as f64;
    (k1 * k1 + k2 * k2 + k3 * k3).sqrt().floor() as usize
}

/// Number of shells a cube of side `n` can touch: `⌊√3·(n/2)⌋ + 1`.
pub(crate) fn shell_count(n: usize) -> usize {
    ((3.0f64).sqrt() * (n / 2) as f64).floor() as usize + 1
}

/// 3D transform over a cube of side `n`, stored row-major with axis 0
/// slowest. Lines are transformed axis by axis; the strided axis-0 pass goes
/// through an explicit transpose so every FFT runs on contiguous memory.
pub(crate) struct Fft3 {
    pub n: usize,
    line: FftPlan,
}

enum Direction {
    Forward,
    Inverse,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            line: FftPlan::new(n),
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, Direction::Forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, Direction::Inverse);
    }

    fn transform(&self, data: &mut [Complex64], direction: Direction) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let fft = match direction {
            Direction::Forward => &self.line.fwd,
            Direction::Inverse => &self.line.inv,
        };
        let scratch_len = fft.get_inplace_scratch_len();

        // Axis 2: lines are contiguous.
        data.par_chunks_mut(n * n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, slab| {
                for line in slab.chunks_exact_mut(n) {
                    fft.process_with_scratch(line, scratch);
                }
            },
        );

        // Axis 1: stride-n lines within each axis-0 slab.
        data.par_chunks_mut(n * n).for_each_init(
            || {
                (
                    vec![Complex64::default(); n],
                    vec![Complex64::default(); scratch_len],
                )
            },
            |(line, scratch), slab| {
                for i3 in 0..n {
                    for i2 in 0..n {
                        line[i2] = slab[i2 * n + i3];
                    }
                    fft.process_with_scratch(line, scratch);
                    for i2 in 0..n {
                        slab[i2 * n + i3] = line[i2];
                    }
                }
            },
        );

        // Axis 0: transpose axes 0 and 2, transform contiguously, transpose
        // back.
        let mut tmp = vec![Complex64::default(); n * n * n];
        transpose02(data, &mut tmp, n);
        tmp.par_chunks_mut(n * n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, slab| {
                for line in slab.chunks_exact_mut(n) {
                    fft.process_with_scratch(line, scratch);
                }
            },
        );
        transpose02(&tmp, data, n);
    }
}

fn transpose02(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    dst.par_chunks_mut(n * n)
        .enumerate()
        .for_each(|(i3, slab)| {
            for i2 in 0..n {
                for i1 in 0..n {
                    slab[i2 * n + i1] = src[(i1 * n + i2) * n + i3];
                }
            }
        });
}

pub(crate) fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
