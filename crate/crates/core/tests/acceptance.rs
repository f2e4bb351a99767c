//! End-to-end acceptance checks: closure errors of the aided 1D, 3D and
//! spectral runs, budget identities on a stored snapshot, operator exchange
//! identities, conservation invariants, and the tensor basis. Each check
//! prints one `PASS:`/`FAIL:` line (run with `--nocapture` to see them all);
//! every tolerance is pinned in the constants below.
//!
//! Run the 3D check alone with
//! `cargo test --test acceptance aided_ns3d -- --nocapture`; it integrates
//! the full desk-scale configuration and dominates the suite's runtime.

use std::fmt::Write as _;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dles_core::closures::{tensor_basis, PointGradient};
use dles_core::diagnostics::{energy_spectrum, energy_spectrum_1d};
use dles_core::experiment::{run_experiment, ExperimentConfig, ExperimentKind, NS_LENGTH};
use dles_core::fluxes::{
    energy_inner_product_3d, ns_convective_stress, ns_projected_stress, NSParams,
};
use dles_core::grid::{
    make_grid_pair_1d, make_grid_pair_3d, read_snapshot_3d, Field1, Field3, Grid1D, Grid3D,
    StaggerLocation, TensorField, VectorField,
};
use dles_core::ops1d::{diff_1d, restrict_1d, tophat_filter_analytic, twogrid_filter_1d};
use dles_core::ops3d::{diff_3d, filter_scalar, filter_vector, line_filter, restrict_3d};
use dles_core::projection::{
    divergence, double_divergence, project_tensor, project_vector, tensor_divergence,
    PoissonSolver,
};
use dles_core::sfs::{ns_mu_star, ns_sfs, SolverPair};
use dles_core::simulate::{ns_init, RngStream, NS_INIT_KAPPA0};
use dles_core::spectral1d::{spectral_flux, Complex64, SpectralField};
use dles_core::{ClosureKind, Error, FilterKind, VectorFilterKind};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Mean final swap-closure error of the 1D ensemble.
const SWAP_TOL_1D: f64 = 1e-12;
/// The mean classic-closure error must land within this factor of the
/// published ensemble values (both directions).
const CLASSIC_FACTOR_1D: f64 = 3.0;
/// Published classic-closure ensemble errors per coarse size.
const CLASSIC_REFERENCE_1D: [(usize, f64); 3] = [(243, 0.144), (729, 0.0679), (2187, 0.0174)];
/// Final swap-closure error of the 3D run, volume and projected filters.
const SWAP_TOL_3D: f64 = 1e-11;
/// Filtered-budget residual on a stored snapshot.
const RESIDUAL_TOL: f64 = 1e-11;
/// The surface-average budget must stay at least this far open without μ.
const RESIDUAL_FLOOR_SA: f64 = 1e-6;
/// Filter-swap exchange identities, relative sup norm.
const FILTER_SWAP_TOL: f64 = 1e-13;
/// Projector idempotence and annihilation of gradients.
const PROJECTOR_TOL: f64 = 1e-12;
/// Double divergence left after tensor projection, relative to before.
const DOUBLE_DIVERGENCE_TOL: f64 = 1e-10;
/// Projection/divergence exchange on stress tensors.
const COMMUTATION_TOL: f64 = 1e-11;
/// Observed decay order of the coarse-difference-vs-filtered-derivative
/// defect (an O(h²) quantity that never reaches zero).
const NONCOMMUTATION_SLOPE: (f64, f64) = (1.9, 2.1);
/// Convective energy-conservation cancellation, relative to the gross sum.
const CONSERVATION_TOL: f64 = 1e-12;
/// Initial-condition energy and divergence.
const INIT_TOL: f64 = 1e-12;
/// Shell-spectrum total vs. the physical energy.
const PARSEVAL_TOL: f64 = 1e-10;
/// Basis symmetry classes and deviatoric traces (unit-norm gradients).
const BASIS_SYMMETRY_TOL: f64 = 1e-14;
/// Basis equivariance under orthogonal conjugation.
const BASIS_EQUIVARIANCE_TOL: f64 = 1e-12;
/// Mean final swap-closure error of the spectral ensemble.
const SWAP_TOL_SPECTRAL: f64 = 1e-12;
/// Dealiased quadratic term vs. the exact convolution of band-limited input.
const DEALIAS_TOL: f64 = 1e-13;

fn report(index: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("{verdict}: acceptance {index} ({name}) — {detail}");
    assert!(pass, "acceptance {index} ({name}) — {detail}");
}

fn max_abs(f: &Field3) -> f64 {
    f.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
}

fn max_abs_diff(a: &Field3, b: &Field3) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn vector_max_abs(v: &VectorField) -> f64 {
    v.components.iter().map(max_abs).fold(0.0, f64::max)
}

fn l2(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vector_l2(v: &VectorField) -> f64 {
    v.components
        .iter()
        .map(|c| l2(&c.values).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn random_field(grid: Grid3D, location: StaggerLocation, seed: u64) -> Field3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.points()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field3::new(grid, location, values).unwrap()
}

fn random_vector(grid: Grid3D, seed: u64) -> VectorField {
    VectorField::from_components(std::array::from_fn(|i| {
        random_field(grid, StaggerLocation::Face(i), seed + i as u64)
    }))
    .unwrap()
}

fn random_tensor(grid: Grid3D, seed: u64) -> TensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sigma = TensorField::zeros(grid);
    for i in 0..3 {
        for j in 0..3 {
            for x in &mut sigma.components[i][j].values {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
    }
    sigma
}

/// Least-squares slope of `log(error)` against `log(h) ~ -log(n)`.
fn fit_log_slope(sizes: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = sizes.iter().map(|&n| -(n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn final_errors(records: &[dles_core::experiment::RunRecord]) -> Vec<[f64; 4]> {
    records
        .iter()
        .map(|r| r.errors.last().expect("runs produce error rows").errors)
        .collect()
}

#[test]
fn aided_burgers_ensemble_reaches_machine_closure() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk_default(ExperimentKind::Burgers);
    cfg.n_les = vec![243, 729, 2187];
    cfg.output_dir = dir.path().join("out");
    let records = run_experiment(&cfg).unwrap();

    let mut pass = true;
    let mut detail = String::new();
    for (n, reference) in CLASSIC_REFERENCE_1D {
        let finals = final_errors(
            &records
                .iter()
                .filter(|r| r.n_les == n)
                .cloned()
                .collect::<Vec<_>>(),
        );
        assert_eq!(finals.len(), cfg.seeds.len());
        let mean =
            |slot: usize| finals.iter().map(|e| e[slot]).sum::<f64>() / finals.len() as f64;
        let (no_model, classic, swap) = (mean(0), mean(1), mean(3));
        pass &= swap <= SWAP_TOL_1D;
        pass &= classic <= CLASSIC_FACTOR_1D * reference
            && classic >= reference / CLASSIC_FACTOR_1D;
        pass &= no_model > classic;
        let _ = write!(
            detail,
            "N={n}: swap {swap:.1e}, classic {classic:.3} (ref {reference}), no-model {no_model:.3}; "
        );
    }
    report(1, "aided burgers ensemble", pass, detail.trim_end_matches("; "));
}

#[test]
fn aided_ns3d_run_reaches_machine_closure() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk_default(ExperimentKind::Ns3d);
    cfg.output_dir = dir.path().join("out");
    let records = run_experiment(&cfg).unwrap();
    assert_eq!(records.len(), cfg.filters.len() * cfg.n_les.len());

    let mut pass = true;
    let mut detail = String::new();
    for r in &records {
        let filter = r.filter.expect("3D runs carry a filter");
        let [no_model, classic, swap_sym, swap] =
            r.errors.last().expect("runs produce error rows").errors;
        match filter {
            VectorFilterKind::VolumeAverage | VectorFilterKind::ProjectedVolumeAverage => {
                pass &= swap <= SWAP_TOL_3D;
                pass &= no_model > classic && classic > swap_sym && swap_sym >= swap;
            }
            VectorFilterKind::SurfaceAverage => {
                // The structural swap model coincides with its symmetrized
                // form here, and neither closes the budget exactly.
                pass &= r
                    .errors
                    .iter()
                    .all(|row| row.errors[2].to_bits() == row.errors[3].to_bits());
                pass &= swap < classic;
            }
        }
        let _ = write!(
            detail,
            "{} N={}: swap {swap:.1e}, swap-sym {swap_sym:.1e}, classic {classic:.2}, no-model {no_model:.2}; ",
            filter.name(),
            r.n_les
        );
    }
    let _ = write!(detail, "seed wall time {:.0}s", records[0].wall_time);
    report(2, "aided 3d run", pass, &detail);
}

#[test]
fn residual_identities_close_on_a_stored_snapshot() {
    // A short aided run that stores its warmed-up DNS field, read back from
    // disk so the budget is evaluated on snapshot data alone.
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk_default(ExperimentKind::Ns3d);
    cfg.n_dns = 15;
    cfg.n_les = vec![5];
    cfg.nu = 2e-3;
    cfg.t_warmup = 4e-3;
    cfg.t_end = 2e-3;
    cfg.snapshot_every = 1_000_000;
    cfg.output_dir = dir.path().join("out");
    run_experiment(&cfg).unwrap();

    let snaps = cfg.output_dir.join("snapshots").join("seed0");
    let v = VectorField::from_components(std::array::from_fn(|c| {
        read_snapshot_3d(&snaps.join(format!("dns_step000000_v{c}.bin")), NS_LENGTH).unwrap()
    }))
    .unwrap();

    let pair = make_grid_pair_3d(
        Grid3D::new(cfg.n_dns, NS_LENGTH).unwrap(),
        Grid3D::new(cfg.n_les[0], NS_LENGTH).unwrap(),
    )
    .unwrap();
    let solvers = SolverPair::new(&pair);
    let p = NSParams::new(cfg.nu).unwrap();

    let r_fine = ns_projected_stress(&solvers.fine, &v, p).unwrap();
    let fine_div = tensor_divergence(&r_fine).unwrap();

    // Filtered fine acceleration minus the coarse acceleration of the
    // filtered field minus the model divergence, per filter.
    let budget = |filter: VectorFilterKind| -> (VectorField, f64) {
        let filtered_div = filter_vector(&pair, &fine_div, filter, &solvers.coarse).unwrap();
        let vbar = filter_vector(&pair, &v, filter, &solvers.coarse).unwrap();
        let coarse_div =
            tensor_divergence(&ns_projected_stress(&solvers.coarse, &vbar, p).unwrap()).unwrap();
        let tau_div = tensor_divergence(
            &ns_sfs(&pair, &solvers, &v, p, filter, ClosureKind::Swap).unwrap(),
        )
        .unwrap();
        let mut residual = filtered_div.clone();
        for i in 0..3 {
            for ((r, c), t) in residual.components[i]
                .values
                .iter_mut()
                .zip(&coarse_div.components[i].values)
                .zip(&tau_div.components[i].values)
            {
                *r -= c + t;
            }
        }
        let scale = vector_max_abs(&filtered_div).max(1.0);
        (residual, scale)
    };

    let sup = |v: &VectorField| vector_max_abs(v);

    let (res_va, scale_va) = budget(VectorFilterKind::VolumeAverage);
    let va = sup(&res_va) / scale_va;
    let (res_pva, scale_pva) = budget(VectorFilterKind::ProjectedVolumeAverage);
    let pva = sup(&res_pva) / scale_pva;

    let (mut res_sa, scale_sa) = budget(VectorFilterKind::SurfaceAverage);
    let sa_without = sup(&res_sa) / scale_sa;
    let mu = ns_mu_star(&pair, &solvers, &v, p).unwrap();
    for i in 0..3 {
        for (r, m) in res_sa.components[i].values.iter_mut().zip(&mu.components[i].values) {
            *r -= m;
        }
    }
    let sa_with = sup(&res_sa) / scale_sa;

    let pass = va <= RESIDUAL_TOL
        && pva <= RESIDUAL_TOL
        && sa_with <= RESIDUAL_TOL
        && sa_without > RESIDUAL_FLOOR_SA;
    report(
        3,
        "stored-snapshot budget",
        pass,
        &format!("va {va:.1e}, pva {pva:.1e}, sa {sa_with:.1e} with μ ({sa_without:.1e} without)"),
    );
}

#[test]
fn operator_exchange_identities_hold() {
    // Filter-swap, 1D: the coarse difference of the restriction equals the
    // two-grid filter of the fine difference.
    let fine1 = Grid1D::new(35, TAU).unwrap();
    let coarse1 = Grid1D::new(7, TAU).unwrap();
    let pair1 = make_grid_pair_1d(fine1, coarse1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_1d = 0.0f64;
    for location in [StaggerLocation::Center, StaggerLocation::Face(0)] {
        let values = (0..fine1.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = Field1::new(fine1, location, values).unwrap();
        let lhs = diff_1d(&restrict_1d(&pair1, &u).unwrap());
        let rhs = twogrid_filter_1d(&pair1, &diff_1d(&u)).unwrap();
        let scale = rhs.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for (a, b) in lhs.values.iter().zip(&rhs.values) {
            worst_1d = worst_1d.max((a - b).abs() / scale);
        }
    }

    // Filter-swap, 3D: the three exchange forms behind the swap closures, on
    // random fields at every usable stagger location.
    let fine = Grid3D::new(15, TAU).unwrap();
    let coarse = Grid3D::new(3, TAU).unwrap();
    let pair = make_grid_pair_3d(fine, coarse).unwrap();
    let locations = [
        StaggerLocation::Center,
        StaggerLocation::Face(0),
        StaggerLocation::Face(1),
        StaggerLocation::Face(2),
        StaggerLocation::edge(0, 1),
        StaggerLocation::edge(0, 2),
        StaggerLocation::edge(1, 2),
    ];
    let mut worst_3d = 0.0f64;
    let mut seed = 500;
    for location in locations {
        for i in 0..3 {
            seed += 1;
            let u = random_field(fine, location, seed);
            let du = match diff_3d(&u, i) {
                Ok(du) => du,
                Err(Error::StaggerNotClosed { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let lhs = diff_3d(&restrict_3d(&pair, &u).unwrap(), i).unwrap();
            let rhs = restrict_3d(&pair, &line_filter(&pair, &du, i).unwrap()).unwrap();
            worst_3d = worst_3d.max(max_abs_diff(&lhs, &rhs) / max_abs(&rhs).max(1e-30));

            let lhs =
                diff_3d(&filter_scalar(&pair, &u, FilterKind::Surface(i)).unwrap(), i).unwrap();
            let rhs = filter_scalar(&pair, &du, FilterKind::Volume).unwrap();
            worst_3d = worst_3d.max(max_abs_diff(&lhs, &rhs) / max_abs(&rhs).max(1e-30));

            for j in 0..3 {
                if j == i {
                    continue;
                }
                let lhs =
                    diff_3d(&filter_scalar(&pair, &u, FilterKind::line(i, j)).unwrap(), i)
                        .unwrap();
                let rhs = filter_scalar(&pair, &du, FilterKind::Surface(j)).unwrap();
                worst_3d = worst_3d.max(max_abs_diff(&lhs, &rhs) / max_abs(&rhs).max(1e-30));
            }
        }
    }

    // Projector idempotence and annihilation of discrete gradients.
    let grid = Grid3D::new(12, 1.0).unwrap();
    let solver = PoissonSolver::new(grid);
    let phi = random_field(grid, StaggerLocation::Center, 77);
    let mut grad = VectorField::zeros(grid);
    for axis in 0..3 {
        grad.components[axis] = diff_3d(&phi, axis).unwrap();
    }
    let killed = project_vector(&solver, &grad).unwrap();
    let annihilation = vector_l2(&killed) / vector_l2(&grad);

    let v = random_vector(grid, 78);
    let once = project_vector(&solver, &v).unwrap();
    let twice = project_vector(&solver, &once).unwrap();
    let mut idempotence = 0.0f64;
    for axis in 0..3 {
        idempotence = idempotence.max(max_abs_diff(&once.components[axis], &twice.components[axis]));
    }
    idempotence /= vector_l2(&once).max(1.0);

    // Tensor projection kills the double divergence and exchanges with the
    // tensor divergence.
    let sigma = random_tensor(grid, 79);
    let projected = project_tensor(&solver, &sigma).unwrap();
    let dd_before = l2(&double_divergence(&sigma).unwrap().values);
    let dd_after = l2(&double_divergence(&projected).unwrap().values);
    let dd_ratio = dd_after / dd_before;

    let lhs = tensor_divergence(&projected).unwrap();
    let rhs = project_vector(&solver, &tensor_divergence(&sigma).unwrap()).unwrap();
    let mut commutation = 0.0f64;
    for axis in 0..3 {
        for (a, b) in lhs.components[axis].values.iter().zip(&rhs.components[axis].values) {
            commutation += (a - b) * (a - b);
        }
    }
    let commutation = commutation.sqrt() / vector_l2(&rhs);

    // Coarse differencing a fixed-width filtered field does not reproduce
    // the filtered derivative; the defect decays at second order.
    let width = 0.5;
    let sizes = [16usize, 32, 64, 128, 256];
    let mut errors = Vec::new();
    for &n in &sizes {
        let grid = Grid1D::new(n, TAU).unwrap();
        let values = (0..n)
            .map(|i| {
                tophat_filter_analytic(f64::sin, width, grid.coordinate(StaggerLocation::Center, i), 256)
            })
            .collect();
        let filtered = Field1::new(grid, StaggerLocation::Center, values).unwrap();
        let d = diff_1d(&filtered);
        let sup = (0..n)
            .map(|i| {
                let oracle = tophat_filter_analytic(f64::cos, width, d.coordinate(i), 256);
                (d.values[i] - oracle).abs()
            })
            .fold(0.0, f64::max);
        errors.push(sup);
    }
    let slope = fit_log_slope(&sizes, &errors);
    let defect_visible = errors[0] > 1e-6;

    let pass = worst_1d <= FILTER_SWAP_TOL
        && worst_3d <= FILTER_SWAP_TOL
        && idempotence <= PROJECTOR_TOL
        && annihilation <= PROJECTOR_TOL
        && dd_ratio <= DOUBLE_DIVERGENCE_TOL
        && commutation <= COMMUTATION_TOL
        && (NONCOMMUTATION_SLOPE.0..=NONCOMMUTATION_SLOPE.1).contains(&slope)
        && defect_visible;
    report(
        4,
        "operator exchange identities",
        pass,
        &format!(
            "filter-swap {worst_1d:.1e} (1d) / {worst_3d:.1e} (3d); projector idempotence {idempotence:.1e}, annihilation {annihilation:.1e}; double-divergence {dd_ratio:.1e}; divergence exchange {commutation:.1e}; coarse-grain defect slope {slope:.2}"
        ),
    );
}

#[test]
fn conservation_and_normalization_invariants_hold() {
    // Convection moves energy without creating it on a divergence-free
    // field: the signed sum cancels against its gross (all-positive) scale.
    let grid = Grid3D::new(16, TAU).unwrap();
    let mut tg = VectorField::zeros(grid);
    for (i, f) in [
        &(|x: f64, y: f64, z: f64| x.sin() * y.cos() * z.cos()) as &dyn Fn(f64, f64, f64) -> f64,
        &|x, y, z| -(x.cos() * y.sin() * z.cos()),
        &|_, _, _| 0.0,
    ]
    .iter()
    .enumerate()
    {
        let c = &mut tg.components[i];
        for i1 in 0..grid.n {
            for i2 in 0..grid.n {
                for i3 in 0..grid.n {
                    let [x, y, z] = grid.coordinate(c.location, [i1, i2, i3]);
                    let idx = c.idx(i1, i2, i3);
                    c.values[idx] = f(x, y, z);
                }
            }
        }
    }
    let conv = tensor_divergence(&ns_convective_stress(&tg).unwrap()).unwrap();
    let signed = energy_inner_product_3d(&tg, &conv).unwrap();
    let h3 = grid.h.powi(3);
    let mut gross = 0.0;
    for i in 0..3 {
        for (x, y) in tg.components[i].values.iter().zip(&conv.components[i].values) {
            gross += h3 * (x * y).abs();
        }
    }
    let conservation = signed.abs() / gross;

    // The shaped random initial condition hits energy 1/2 exactly and is
    // discretely divergence-free.
    let grid = Grid3D::new(24, NS_LENGTH).unwrap();
    let solver = PoissonSolver::new(grid);
    let v = ns_init(grid, &solver, &mut RngStream::new(0), NS_INIT_KAPPA0).unwrap();
    let points = grid.points() as f64;
    let energy = 0.5
        * v.components
            .iter()
            .flat_map(|c| c.values.iter())
            .map(|x| x * x)
            .sum::<f64>()
        / points;
    let energy_defect = (energy - 0.5).abs();
    let div = divergence(&v).unwrap();
    let div_scale = (vector_max_abs(&v) / grid.h).max(1.0);
    let divergence_rel = max_abs(&div) / div_scale;

    // Shell spectra resolve the same energy (both dimensions).
    let spectrum_total = energy_spectrum(&v).total();
    let parseval_3d = (spectrum_total - energy).abs() / energy;

    let grid1 = Grid1D::new(243, TAU).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let values = (0..grid1.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u = Field1::new(grid1, StaggerLocation::Center, values).unwrap();
    let physical = 0.5 * u.values.iter().map(|x| x * x).sum::<f64>() / grid1.n as f64;
    let parseval_1d = (energy_spectrum_1d(&u).total() - physical).abs() / physical;

    let pass = conservation <= CONSERVATION_TOL
        && energy_defect <= INIT_TOL
        && divergence_rel <= INIT_TOL
        && parseval_3d <= PARSEVAL_TOL
        && parseval_1d <= PARSEVAL_TOL;
    report(
        5,
        "conservation and normalization",
        pass,
        &format!(
            "convective cancellation {conservation:.1e}; init energy defect {energy_defect:.1e}, divergence {divergence_rel:.1e}; parseval {parseval_1d:.1e} (1d) / {parseval_3d:.1e} (3d)"
        ),
    );
}

#[test]
fn tensor_basis_has_symmetry_traces_and_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let frob = |m: &Matrix3<f64>| m.iter().map(|v| v * v).sum::<f64>().sqrt();
    let random_orthogonal = |rng: &mut ChaCha8Rng, improper: bool| -> Matrix3<f64> {
        let axis = loop {
            let v = nalgebra::Vector3::new(
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if v.norm() > 0.1 {
                break v / v.norm();
            }
        };
        let theta = rng.gen_range(0.0..TAU);
        let k = Matrix3::new(
            0.0, -axis[2], axis[1], //
            axis[2], 0.0, -axis[0], //
            -axis[1], axis[0], 0.0,
        );
        let q = Matrix3::identity() + k * theta.sin() + k * k * (1.0 - theta.cos());
        if improper {
            q * Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, -1.0))
        } else {
            q
        }
    };

    let mut worst_symmetry = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_equivariance = 0.0f64;
    let mut worst_invariant = 0.0f64;
    for trial in 0..100 {
        // Unit-norm gradients keep every basis product O(1), so the
        // tolerances below are effectively absolute.
        let g = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let g = g / frob(&g);
        let q = random_orthogonal(&mut rng, trial % 2 == 1);
        let (a, b, lambda) = tensor_basis(&PointGradient::new(g));
        let (aq, bq, lambda_q) = tensor_basis(&PointGradient::new(q * g * q.transpose()));

        for k in 0..10 {
            worst_symmetry = worst_symmetry.max(frob(&(a[k] - a[k].transpose())));
            let expect = q * a[k] * q.transpose();
            worst_equivariance =
                worst_equivariance.max(frob(&(aq[k] - expect)) / frob(&expect).max(1.0));
        }
        for k in 0..6 {
            worst_symmetry = worst_symmetry.max(frob(&(b[k] + b[k].transpose())));
            let expect = q * b[k] * q.transpose();
            worst_equivariance =
                worst_equivariance.max(frob(&(bq[k] - expect)) / frob(&expect).max(1.0));
        }
        // The explicitly deviatoric entries A3, A4, A6, A9.
        for k in [2usize, 3, 5, 8] {
            worst_trace = worst_trace.max(a[k].trace().abs());
        }
        for k in 0..5 {
            worst_invariant = worst_invariant
                .max((lambda[k] - lambda_q[k]).abs() / lambda[k].abs().max(1.0));
        }
    }

    let pass = worst_symmetry <= BASIS_SYMMETRY_TOL
        && worst_trace <= BASIS_SYMMETRY_TOL
        && worst_equivariance <= BASIS_EQUIVARIANCE_TOL
        && worst_invariant <= BASIS_EQUIVARIANCE_TOL;
    report(
        6,
        "tensor basis",
        pass,
        &format!(
            "symmetry {worst_symmetry:.1e}, deviatoric trace {worst_trace:.1e}, equivariance {worst_equivariance:.1e}, invariants {worst_invariant:.1e} over 100 gradients"
        ),
    );
}

#[test]
fn spectral_swap_closure_tracks_the_cutoff_dns() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::desk_default(ExperimentKind::Spectral1d);
    cfg.output_dir = dir.path().join("out");
    let records = run_experiment(&cfg).unwrap();
    let finals = final_errors(&records);
    assert_eq!(finals.len(), cfg.seeds.len());
    let swap_mean = finals.iter().map(|e| e[3]).sum::<f64>() / finals.len() as f64;
    let no_model_mean = finals.iter().map(|e| e[0]).sum::<f64>() / finals.len() as f64;

    // The dealiased quadratic term is exact below the truncation band: it
    // matches the full convolution of the band-limited coefficients.
    let band = 24usize;
    let theta = 2 * band / 3;
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
    for k in 1..=theta {
        let z = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        coeffs[band + k] = z;
        coeffs[band - k] = z.conj();
    }
    coeffs[band] = Complex64::new(rng.gen_range(-0.5..0.5), 0.0);
    let u = SpectralField::new(band, coeffs).unwrap();
    let nu = 1e-2;
    let flux = spectral_flux(&u, nu, None).unwrap();
    let scale = (0..=band as i64)
        .map(|k| u.coeff(k).norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let mut worst_dealias = 0.0f64;
    for k in -(theta as i64)..=(theta as i64) {
        let mut convolution = Complex64::new(0.0, 0.0);
        for p in -(band as i64)..=(band as i64) {
            convolution += u.coeff(p) * u.coeff(k - p);
        }
        let want = 0.5 * convolution - nu * Complex64::new(0.0, k as f64) * u.coeff(k);
        worst_dealias = worst_dealias.max((flux.coeff(k) - want).norm() / scale);
    }

    let pass = swap_mean <= SWAP_TOL_SPECTRAL
        && no_model_mean > 1e-6
        && worst_dealias <= DEALIAS_TOL;
    report(
        7,
        "spectral swap closure",
        pass,
        &format!(
            "mean swap {swap_mean:.1e} (no-model {no_model_mean:.1e}) over {} seeds; dealiased product vs convolution {worst_dealias:.1e}",
            finals.len()
        ),
    );
}

#[test]
fn full_scale_reference_values_are_declared_not_reproduced() {
    // The published full-scale table (810³ aided runs, Re_λ ≈ 66.3, Taylor
    // microscale ≈ 3.73e-3) needs cluster hardware; its values are shipped
    // as reference numbers only. The identities and error orderings behind
    // that table are what the other checks verify at desk sizes.
    report(
        8,
        "full-scale reference declared",
        true,
        "810³ table values and flow statistics are reference-only; identities and orderings are covered at 90³ and below by acceptance 1-7",
    );
}
