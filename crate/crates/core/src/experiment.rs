//! Reproducible DNS-aided LES experiments: configuration, per-seed runs,
//! ensemble aggregation and CSV emission.
//!
//! An experiment advances one fine-grid reference solution per seed and, in
//! lockstep with it, one coarse solution per (filter, coarse size, closure)
//! combination, recording the relative tracking error after every step.
//! Output layout under `output_dir`:
//!
//! ```text
//! config.txt                  canonical key=value form of the config
//! <group>/errors.csv          ensemble mean error history (step-aligned)
//! <group>/errors_seed<k>.csv  per-seed error history
//! <group>/spectrum.csv        final spectra, E(κ) averaged over seeds
//! <group>/dissipation.csv     density of dissipation samples pooled
//!                             across seeds
//! snapshots/seed<k>/*.bin     optional field snapshots
//! ```
//!
//! where `<group>` is `N243` (Burgers), `K64` (spectral) or `pva_N18`
//! (3D: filter name and coarse size). Re-running a config with the same
//! seeds reproduces every CSV byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::diagnostics::{
    dissipation_coefficient, dissipation_coefficient_1d, energy_spectrum, energy_spectrum_1d, kde,
    relative_error, relative_error_1d, write_dissipation_csv, write_errors_csv,
    write_spectrum_csv, DensityEstimate, Spectrum,
};
use crate::fluxes::{ns_projected_stress, ns_rhs, BurgersParams, NSParams};
use crate::grid::{write_snapshot_1d, write_snapshot_3d, Field1, Grid1D, Grid3D, VectorField};
use crate::ops1d::twogrid_filter_1d;
use crate::ops3d::filter_vector;
use crate::projection::{project_vector, tensor_divergence};
use crate::sfs::{burgers_sfs, ns_sfs_from_stress, SolverPair};
use crate::simulate::{
    burgers_dns_step, burgers_init, burgers_les_step, cfl_dt_burgers, cfl_dt_ns, ns_init,
    ns_les_step, rk3_wray_step, RngStream, TimeState, BURGERS_CFL, NS_CFL, NS_INIT_KAPPA0,
};
use crate::spectral1d::{
    cutoff_filter, spectral_cfl_dt, spectral_dns_step, spectral_init, spectral_les_step,
    spectral_model, spectral_relative_error, spectral_spectrum, SpectralField,
};
use crate::{
    make_grid_pair_1d, make_grid_pair_3d, ClosureKind, Error, GridPair1, GridPair3, Result,
    VectorFilterKind,
};

/// Domain length of the 1D experiments.
pub const BURGERS_LENGTH: f64 = 2.0 * std::f64::consts::PI;
/// Box side of the 3D experiment.
pub const NS_LENGTH: f64 = 1.0;

/// Which flow an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Burgers,
    Ns3d,
    Spectral1d,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Burgers => "burgers",
            ExperimentKind::Ns3d => "ns3d",
            ExperimentKind::Spectral1d => "spectral1d",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "burgers" => Some(ExperimentKind::Burgers),
            "ns3d" => Some(ExperimentKind::Ns3d),
            "spectral1d" => Some(ExperimentKind::Spectral1d),
            _ => None,
        }
    }
}

/// Full description of one experiment. `n_dns`/`n_les` are grid sizes per
/// axis for `burgers`/`ns3d` and spectral bands for `spectral1d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub nu: f64,
    pub n_dns: usize,
    pub n_les: Vec<usize>,
    /// Vector filters to run side by side (ns3d only; empty otherwise).
    pub filters: Vec<VectorFilterKind>,
    pub closures: Vec<ClosureKind>,
    pub seeds: Vec<u64>,
    pub t_warmup: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub output_dir: PathBuf,
    /// Write field snapshots every this many production steps; 0 disables.
    pub snapshot_every: usize,
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment, sized to finish in minutes
    /// on a workstation.
    pub fn desk_default(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::Burgers => Self {
                experiment: kind,
                nu: 5e-4,
                n_dns: 6561,
                n_les: vec![243],
                filters: Vec::new(),
                closures: ClosureKind::ALL.to_vec(),
                seeds: (0..20).collect(),
                t_warmup: 0.0,
                t_end: 0.1,
                cfl: BURGERS_CFL,
                output_dir: PathBuf::from("out"),
                snapshot_every: 0,
            },
            ExperimentKind::Ns3d => Self {
                experiment: kind,
                nu: 2.5e-5,
                n_dns: 90,
                n_les: vec![18, 30],
                filters: VectorFilterKind::ALL.to_vec(),
                closures: ClosureKind::ALL.to_vec(),
                seeds: vec![0],
                t_warmup: 0.5,
                t_end: 0.1,
                cfl: NS_CFL,
                output_dir: PathBuf::from("out"),
                snapshot_every: 0,
            },
            ExperimentKind::Spectral1d => Self {
                experiment: kind,
                nu: 2e-3,
                n_dns: 512,
                n_les: vec![64],
                filters: Vec::new(),
                closures: vec![ClosureKind::NoModel, ClosureKind::Swap],
                seeds: (0..20).collect(),
                t_warmup: 0.0,
                t_end: 0.1,
                cfl: 0.2,
                output_dir: PathBuf::from("out"),
                snapshot_every: 0,
            },
        }
    }

    /// Builds a config from desk defaults, an optional config file text and
    /// override pairs (later sources win; overrides beat the file). The
    /// experiment kind must appear in at least one source.
    pub fn from_sources(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let file_pairs = match file {
            Some(text) => parse_config_text(text)?,
            None => Vec::new(),
        };
        let kind_value = overrides
            .iter()
            .rev()
            .chain(file_pairs.iter().rev())
            .find(|(k, _)| k == "experiment")
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| {
                Error::Config(
                    "experiment: required; set --experiment or the `experiment` config key".into(),
                )
            })?;
        let kind = parse_experiment("experiment", kind_value)?;
        let mut cfg = Self::desk_default(kind);
        for (key, value) in file_pairs.iter().chain(overrides) {
            cfg.apply_key(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` setting. Switching `experiment` does not
    /// re-derive defaults; use [`ExperimentConfig::from_sources`] for that.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = parse_experiment(key, value)?,
            "nu" => self.nu = parse_real(key, value)?,
            "n_dns" => self.n_dns = parse_integer(key, value)?,
            "n_les" => {
                self.n_les = split_list(value)
                    .map(|s| parse_integer(key, s))
                    .collect::<Result<_>>()?
            }
            "filter" => {
                self.filters = split_list(value)
                    .map(|s| {
                        VectorFilterKind::parse(s).ok_or_else(|| {
                            Error::Config(format!(
                                "{key}: unknown filter `{s}`; expected va, pva or sa"
                            ))
                        })
                    })
                    .collect::<Result<_>>()?
            }
            "closures" => {
                self.closures = split_list(value)
                    .map(|s| {
                        ClosureKind::parse(s).ok_or_else(|| {
                            Error::Config(format!(
                                "{key}: unknown closure `{s}`; expected no_model, classic, swap_sym or swap"
                            ))
                        })
                    })
                    .collect::<Result<_>>()?
            }
            "seeds" => self.seeds = parse_seeds(key, value)?,
            "t_warmup" => self.t_warmup = parse_real(key, value)?,
            "t_end" => self.t_end = parse_real(key, value)?,
            "cfl" => self.cfl = parse_real(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "snapshot_every" => self.snapshot_every = parse_integer(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Checks value ranges and that every (fine, coarse) size pair forms a
    /// valid grid pair. Error messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        let named = |key: &str, e: Error| Error::Config(format!("{key}: {e}"));
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Config("nu: must be positive and finite".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config("cfl: must lie in (0, 1]".into()));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Config("t_end: must be positive".into()));
        }
        if !(self.t_warmup.is_finite() && self.t_warmup >= 0.0) {
            return Err(Error::Config("t_warmup: must be nonnegative".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds: at least one seed is required".into()));
        }
        if has_duplicates(&self.seeds) {
            return Err(Error::Config("seeds: duplicate seed".into()));
        }
        if self.n_les.is_empty() {
            return Err(Error::Config(
                "n_les: at least one coarse size is required".into(),
            ));
        }
        if has_duplicates(&self.n_les) {
            return Err(Error::Config("n_les: duplicate coarse size".into()));
        }
        if self.closures.is_empty() {
            return Err(Error::Config(
                "closures: at least one closure is required".into(),
            ));
        }
        if has_duplicates(&self.closures) {
            return Err(Error::Config("closures: duplicate closure".into()));
        }
        if has_duplicates(&self.filters) {
            return Err(Error::Config("filter: duplicate filter".into()));
        }
        match self.experiment {
            ExperimentKind::Burgers | ExperimentKind::Spectral1d => {
                if !self.filters.is_empty() {
                    return Err(Error::Config(
                        "filter: only the ns3d experiment selects a vector filter".into(),
                    ));
                }
                if self.t_warmup != 0.0 {
                    return Err(Error::Config(
                        "t_warmup: only the ns3d experiment uses a warm-up phase".into(),
                    ));
                }
            }
            ExperimentKind::Ns3d => {
                if self.filters.is_empty() {
                    return Err(Error::Config(
                        "filter: at least one of va, pva, sa is required".into(),
                    ));
                }
            }
        }
        match self.experiment {
            ExperimentKind::Burgers => {
                let fine = Grid1D::new(self.n_dns, BURGERS_LENGTH).map_err(|e| named("n_dns", e))?;
                for &n in &self.n_les {
                    let coarse = Grid1D::new(n, BURGERS_LENGTH).map_err(|e| named("n_les", e))?;
                    make_grid_pair_1d(fine, coarse).map_err(|e| named("n_les", e))?;
                }
            }
            ExperimentKind::Ns3d => {
                let fine = Grid3D::new(self.n_dns, NS_LENGTH).map_err(|e| named("n_dns", e))?;
                for &n in &self.n_les {
                    let coarse = Grid3D::new(n, NS_LENGTH).map_err(|e| named("n_les", e))?;
                    make_grid_pair_3d(fine, coarse).map_err(|e| named("n_les", e))?;
                }
            }
            ExperimentKind::Spectral1d => {
                if self.n_dns == 0 {
                    return Err(Error::Config("n_dns: band must be at least 1".into()));
                }
                for &n in &self.n_les {
                    if n == 0 || n > self.n_dns {
                        return Err(Error::Config(format!(
                            "n_les: band {n} must lie in 1..={}",
                            self.n_dns
                        )));
                    }
                }
                for &kind in &self.closures {
                    if !matches!(kind, ClosureKind::NoModel | ClosureKind::Swap) {
                        return Err(Error::Config(format!(
                            "closures: the spectral experiment supports only no_model and swap, got {}",
                            kind.name()
                        )));
                    }
                }
                if self.snapshot_every != 0 {
                    return Err(Error::Config(
                        "snapshot_every: snapshots are not available for the spectral experiment"
                            .into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Canonical key=value form: fixed key order, `{:e}` reals, comma lists.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment={}", self.experiment.name());
        let _ = writeln!(s, "nu={:e}", self.nu);
        let _ = writeln!(s, "n_dns={}", self.n_dns);
        let _ = writeln!(s, "n_les={}", join_list(self.n_les.iter()));
        let _ = writeln!(s, "filter={}", join_list(self.filters.iter().map(|f| f.name())));
        let _ = writeln!(
            s,
            "closures={}",
            join_list(self.closures.iter().map(|c| c.name()))
        );
        let _ = writeln!(s, "seeds={}", join_list(self.seeds.iter()));
        let _ = writeln!(s, "t_warmup={:e}", self.t_warmup);
        let _ = writeln!(s, "t_end={:e}", self.t_end);
        let _ = writeln!(s, "cfl={:e}", self.cfl);
        let _ = writeln!(s, "output_dir={}", self.output_dir.display());
        let _ = writeln!(s, "snapshot_every={}", self.snapshot_every);
        s
    }

    /// FNV-1a hash of the canonical form, stamped into every run record.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.canonical_string().as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// Parses flat `key=value` config text; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("config line {}: expected key=value, got `{line}`", i + 1))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_experiment(key: &str, value: &str) -> Result<ExperimentKind> {
    ExperimentKind::parse(value).ok_or_else(|| {
        Error::Config(format!(
            "{key}: unknown experiment `{value}`; expected burgers, ns3d or spectral1d"
        ))
    })
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid real `{value}`")))
}

fn parse_integer(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: invalid integer `{value}`")))
}

/// Seed lists are either comma-separated integers or a half-open range
/// `a..b`.
fn parse_seeds(key: &str, value: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = value.split_once("..") {
        let lo: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{key}: invalid range start `{a}`")))?;
        let hi: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{key}: invalid range end `{b}`")))?;
        if hi <= lo {
            return Err(Error::Config(format!("{key}: empty range `{value}`")));
        }
        return Ok((lo..hi).collect());
    }
    split_list(value)
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("{key}: invalid seed `{s}`")))
        })
        .collect()
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn join_list<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items
        .iter()
        .enumerate()
        .any(|(i, x)| items[..i].contains(x))
}

/// One tracking-error sample: all four closure columns in the order
/// no_model, classic, swap_sym, swap; NaN marks closures not run.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRow {
    pub t: f64,
    pub errors: [f64; 4],
}

/// Everything one (seed, filter, coarse size) run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config_hash: u64,
    pub seed: u64,
    /// `None` for the 1D experiments.
    pub filter: Option<VectorFilterKind>,
    pub n_les: usize,
    /// Error history from the shared initial state to the final time.
    pub errors: Vec<ErrorRow>,
    /// Final shell spectra: `dns` (the filtered reference) plus one column
    /// per closure.
    pub spectra: Vec<(String, Spectrum)>,
    /// Dissipation-coefficient samples per modelled closure.
    pub dissipation: Vec<(String, Vec<f64>)>,
    /// Seconds the whole seed took (not written to any CSV).
    pub wall_time: f64,
}

impl RunRecord {
    pub fn errors_monotone(&self) -> bool {
        self.errors.windows(2).all(|w| w[0].t < w[1].t)
    }

    fn final_errors(&self) -> [f64; 4] {
        self.errors.last().map_or([f64::NAN; 4], |r| r.errors)
    }
}

/// A CFL step that collapses relative to the phase length means the
/// velocity is blowing up; abort instead of stalling.
fn check_dt(dt: f64, phase: f64, step: usize) -> Result<()> {
    if dt.is_finite() && dt > 1e-14 * phase {
        Ok(())
    } else {
        Err(Error::NonFinite { step: step + 1 })
    }
}

fn closure_slot(kind: ClosureKind) -> usize {
    ClosureKind::ALL
        .iter()
        .position(|c| *c == kind)
        .expect("closure kind in ALL")
}

fn filter_slot(filter: Option<VectorFilterKind>) -> usize {
    match filter {
        None => 0,
        Some(f) => {
            1 + VectorFilterKind::ALL
                .iter()
                .position(|k| *k == f)
                .expect("filter kind in ALL")
        }
    }
}

fn group_dir_name(kind: ExperimentKind, filter: Option<VectorFilterKind>, n_les: usize) -> String {
    match (kind, filter) {
        (ExperimentKind::Spectral1d, _) => format!("K{n_les}"),
        (_, Some(f)) => format!("{}_N{}", f.name(), n_les),
        (_, None) => format!("N{n_les}"),
    }
}

/// Runs every seed of the configured experiment (seeds in parallel, each
/// worker owning its run's state), writes the aggregated CSVs from a single
/// writer, and returns the records sorted by (filter, coarse size, seed).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.txt"), cfg.canonical_string())?;
    if cfg.snapshot_every > 0 {
        for &seed in &cfg.seeds {
            fs::create_dir_all(snapshot_dir(cfg, seed))?;
        }
    }
    let results: Vec<Result<Vec<RunRecord>>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, seed))
        .collect();
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    records.sort_by_key(|r| (filter_slot(r.filter), r.n_les, r.seed));
    write_outputs(cfg, &records)?;
    Ok(records)
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
    match cfg.experiment {
        ExperimentKind::Burgers => run_burgers_seed(cfg, seed),
        ExperimentKind::Ns3d => run_ns3d_seed(cfg, seed),
        ExperimentKind::Spectral1d => run_spectral_seed(cfg, seed),
    }
}

fn snapshot_dir(cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    cfg.output_dir.join("snapshots").join(format!("seed{seed}"))
}

fn run_burgers_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
    let start = Instant::now();
    let fine = Grid1D::new(cfg.n_dns, BURGERS_LENGTH)?;
    let pairs: Vec<GridPair1> = cfg
        .n_les
        .iter()
        .map(|&n| Grid1D::new(n, BURGERS_LENGTH).and_then(|c| make_grid_pair_1d(fine, c)))
        .collect::<Result<_>>()?;
    let p = BurgersParams::new(cfg.nu)?;
    let mut rng = RngStream::new(seed);
    let mut dns = TimeState::new(burgers_init(fine, &mut rng, true));

    let mut les: Vec<Vec<TimeState<Field1>>> = Vec::with_capacity(pairs.len());
    let mut rows: Vec<Vec<ErrorRow>> = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let filtered = twogrid_filter_1d(pair, &dns.state)?;
        let mut errors = [f64::NAN; 4];
        for &kind in &cfg.closures {
            errors[closure_slot(kind)] = 0.0;
        }
        rows.push(vec![ErrorRow { t: 0.0, errors }]);
        les.push(
            cfg.closures
                .iter()
                .map(|_| TimeState::new(filtered.clone()))
                .collect(),
        );
    }

    let snapshot = |step: usize, dns: &Field1, les: &[Vec<TimeState<Field1>>]| -> Result<()> {
        if cfg.snapshot_every == 0 || step % cfg.snapshot_every != 0 {
            return Ok(());
        }
        let dir = snapshot_dir(cfg, seed);
        write_snapshot_1d(&dir.join(format!("dns_step{step:06}.bin")), dns)?;
        for (pi, pair) in pairs.iter().enumerate() {
            for (ci, &kind) in cfg.closures.iter().enumerate() {
                let name = format!("N{}_{}_step{step:06}.bin", pair.coarse.n, kind.name());
                write_snapshot_1d(&dir.join(name), &les[pi][ci].state)?;
            }
        }
        Ok(())
    };
    snapshot(0, &dns.state, &les)?;

    while dns.t < cfg.t_end - 1e-12 * cfg.t_end {
        let dt = cfl_dt_burgers(&dns.state, cfg.nu, fine.h, cfg.cfl).min(cfg.t_end - dns.t);
        check_dt(dt, cfg.t_end, dns.step)?;
        let mut models: Vec<Vec<Field1>> = Vec::with_capacity(pairs.len());
        for pair in &pairs {
            models.push(
                cfg.closures
                    .iter()
                    .map(|&kind| burgers_sfs(pair, &dns.state, p, kind))
                    .collect::<Result<_>>()?,
            );
        }
        burgers_dns_step(&mut dns, p, dt)?;
        for (pi, pair) in pairs.iter().enumerate() {
            let filtered = twogrid_filter_1d(pair, &dns.state)?;
            let mut errors = [f64::NAN; 4];
            for (ci, &kind) in cfg.closures.iter().enumerate() {
                burgers_les_step(&mut les[pi][ci], p, &models[pi][ci], dt)?;
                errors[closure_slot(kind)] = relative_error_1d(&les[pi][ci].state, &filtered)?;
            }
            rows[pi].push(ErrorRow { t: dns.t, errors });
        }
        snapshot(dns.step, &dns.state, &les)?;
    }

    let hash = cfg.hash();
    let mut records = Vec::with_capacity(pairs.len());
    for (pi, pair) in pairs.iter().enumerate() {
        let filtered = twogrid_filter_1d(pair, &dns.state)?;
        let mut spectra = vec![("dns".to_string(), energy_spectrum_1d(&filtered))];
        let mut dissipation = Vec::new();
        for (ci, &kind) in cfg.closures.iter().enumerate() {
            spectra.push((kind.name().to_string(), energy_spectrum_1d(&les[pi][ci].state)));
            if kind != ClosureKind::NoModel {
                let m = burgers_sfs(pair, &dns.state, p, kind)?;
                let d = dissipation_coefficient_1d(&m, &filtered)?;
                dissipation.push((kind.name().to_string(), d.values));
            }
        }
        records.push(RunRecord {
            config_hash: hash,
            seed,
            filter: None,
            n_les: pair.coarse.n,
            errors: std::mem::take(&mut rows[pi]),
            spectra,
            dissipation,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

struct NsLane {
    pair_index: usize,
    filter: VectorFilterKind,
    states: Vec<TimeState<VectorField>>,
    rows: Vec<ErrorRow>,
    dissipation: Vec<(String, Vec<f64>)>,
}

fn ensure_finite_vector(v: &VectorField, step: usize) -> Result<()> {
    for c in &v.components {
        if !c.values.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { step });
        }
    }
    Ok(())
}

fn write_vector_snapshot(dir: &PathBuf, prefix: &str, step: usize, v: &VectorField) -> Result<()> {
    for (c, component) in v.components.iter().enumerate() {
        write_snapshot_3d(&dir.join(format!("{prefix}_step{step:06}_v{c}.bin")), component)?;
    }
    Ok(())
}

fn run_ns3d_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
    let start = Instant::now();
    let fine = Grid3D::new(cfg.n_dns, NS_LENGTH)?;
    let pairs: Vec<GridPair3> = cfg
        .n_les
        .iter()
        .map(|&n| Grid3D::new(n, NS_LENGTH).and_then(|c| make_grid_pair_3d(fine, c)))
        .collect::<Result<_>>()?;
    let solvers: Vec<SolverPair> = pairs.iter().map(SolverPair::new).collect();
    let p = NSParams::new(cfg.nu)?;
    let mut rng = RngStream::new(seed);
    let mut dns = TimeState::new(ns_init(fine, &solvers[0].fine, &mut rng, NS_INIT_KAPPA0)?);

    while dns.t < cfg.t_warmup - 1e-12 * cfg.t_warmup.max(1.0) {
        let dt = cfl_dt_ns(&dns.state, cfg.nu, fine.h, cfg.cfl).min(cfg.t_warmup - dns.t);
        check_dt(dt, cfg.t_warmup, dns.step)?;
        rk3_wray_step(
            &mut dns,
            dt,
            |u| ns_rhs(&solvers[0].fine, u, p),
            |u| project_vector(&solvers[0].fine, u),
        )?;
    }
    dns.t = 0.0;
    dns.step = 0;

    let r0 = ns_projected_stress(&solvers[0].fine, &dns.state, p)?;
    let mut lanes = Vec::with_capacity(pairs.len() * cfg.filters.len());
    for (pi, pair) in pairs.iter().enumerate() {
        for &filter in &cfg.filters {
            let filtered = filter_vector(pair, &dns.state, filter, &solvers[pi].coarse)?;
            let mut errors = [f64::NAN; 4];
            let mut dissipation = Vec::new();
            for &kind in &cfg.closures {
                errors[closure_slot(kind)] = 0.0;
                if kind != ClosureKind::NoModel {
                    let m =
                        ns_sfs_from_stress(pair, &solvers[pi], &r0, &dns.state, p, filter, kind)?;
                    let d = dissipation_coefficient(&m, &filtered)?;
                    dissipation.push((kind.name().to_string(), d.values));
                }
            }
            lanes.push(NsLane {
                pair_index: pi,
                filter,
                states: cfg
                    .closures
                    .iter()
                    .map(|_| TimeState::new(filtered.clone()))
                    .collect(),
                rows: vec![ErrorRow { t: 0.0, errors }],
                dissipation,
            });
        }
    }
    drop(r0);

    let snapshot = |step: usize, dns: &VectorField, lanes: &[NsLane]| -> Result<()> {
        if cfg.snapshot_every == 0 || step % cfg.snapshot_every != 0 {
            return Ok(());
        }
        let dir = snapshot_dir(cfg, seed);
        write_vector_snapshot(&dir, "dns", step, dns)?;
        for lane in lanes {
            for (ci, &kind) in cfg.closures.iter().enumerate() {
                let prefix = format!(
                    "{}_N{}_{}",
                    lane.filter.name(),
                    pairs[lane.pair_index].coarse.n,
                    kind.name()
                );
                write_vector_snapshot(&dir, &prefix, step, &lane.states[ci].state)?;
            }
        }
        Ok(())
    };
    snapshot(0, &dns.state, &lanes)?;

    while dns.t < cfg.t_end - 1e-12 * cfg.t_end {
        let dt = cfl_dt_ns(&dns.state, cfg.nu, fine.h, cfg.cfl).min(cfg.t_end - dns.t);
        check_dt(dt, cfg.t_end, dns.step)?;
        let r_fine = ns_projected_stress(&solvers[0].fine, &dns.state, p)?;
        for lane in &mut lanes {
            let pair = &pairs[lane.pair_index];
            let solver_pair = &solvers[lane.pair_index];
            for (ci, &kind) in cfg.closures.iter().enumerate() {
                let m = ns_sfs_from_stress(
                    pair,
                    solver_pair,
                    &r_fine,
                    &dns.state,
                    p,
                    lane.filter,
                    kind,
                )?;
                ns_les_step(&solver_pair.coarse, &mut lane.states[ci], p, &m, dt)?;
            }
        }
        let tendency = tensor_divergence(&r_fine)?;
        for (c, d) in dns.state.components.iter_mut().zip(&tendency.components) {
            for (x, y) in c.values.iter_mut().zip(&d.values) {
                *x -= dt * *y;
            }
        }
        dns.t += dt;
        dns.step += 1;
        ensure_finite_vector(&dns.state, dns.step)?;

        for lane in &mut lanes {
            let pair = &pairs[lane.pair_index];
            let filtered = filter_vector(
                pair,
                &dns.state,
                lane.filter,
                &solvers[lane.pair_index].coarse,
            )?;
            let mut errors = [f64::NAN; 4];
            for (ci, &kind) in cfg.closures.iter().enumerate() {
                errors[closure_slot(kind)] = relative_error(&lane.states[ci].state, &filtered)?;
            }
            lane.rows.push(ErrorRow { t: dns.t, errors });
        }
        snapshot(dns.step, &dns.state, &lanes)?;
    }

    let hash = cfg.hash();
    let wall = start.elapsed().as_secs_f64();
    let mut records = Vec::with_capacity(lanes.len());
    for lane in lanes {
        let pair = &pairs[lane.pair_index];
        let filtered = filter_vector(
            pair,
            &dns.state,
            lane.filter,
            &solvers[lane.pair_index].coarse,
        )?;
        let mut spectra = vec![("dns".to_string(), energy_spectrum(&filtered))];
        for (ci, &kind) in cfg.closures.iter().enumerate() {
            spectra.push((kind.name().to_string(), energy_spectrum(&lane.states[ci].state)));
        }
        records.push(RunRecord {
            config_hash: hash,
            seed,
            filter: Some(lane.filter),
            n_les: pair.coarse.n,
            errors: lane.rows,
            spectra,
            dissipation: lane.dissipation,
            wall_time: wall,
        });
    }
    Ok(records)
}

fn run_spectral_seed(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<RunRecord>> {
    let start = Instant::now();
    let mut rng = RngStream::new(seed);
    let mut dns = TimeState::new(spectral_init(cfg.n_dns, &mut rng, true));

    let mut les: Vec<Vec<TimeState<SpectralField>>> = Vec::with_capacity(cfg.n_les.len());
    let mut rows: Vec<Vec<ErrorRow>> = Vec::with_capacity(cfg.n_les.len());
    for &band in &cfg.n_les {
        let filtered = cutoff_filter(&dns.state, band);
        let mut errors = [f64::NAN; 4];
        for &kind in &cfg.closures {
            errors[closure_slot(kind)] = 0.0;
        }
        rows.push(vec![ErrorRow { t: 0.0, errors }]);
        les.push(
            cfg.closures
                .iter()
                .map(|_| TimeState::new(filtered.clone()))
                .collect(),
        );
    }

    while dns.t < cfg.t_end - 1e-12 * cfg.t_end {
        let dt = spectral_cfl_dt(&dns.state, cfg.nu, cfg.cfl).min(cfg.t_end - dns.t);
        check_dt(dt, cfg.t_end, dns.step)?;
        let mut models: Vec<Vec<SpectralField>> = Vec::with_capacity(cfg.n_les.len());
        for &band in &cfg.n_les {
            models.push(
                cfg.closures
                    .iter()
                    .map(|&kind| spectral_model(&dns.state, band, cfg.nu, kind))
                    .collect::<Result<_>>()?,
            );
        }
        spectral_dns_step(&mut dns, cfg.nu, dt)?;
        for (bi, &band) in cfg.n_les.iter().enumerate() {
            let filtered = cutoff_filter(&dns.state, band);
            let mut errors = [f64::NAN; 4];
            for (ci, &kind) in cfg.closures.iter().enumerate() {
                spectral_les_step(&mut les[bi][ci], cfg.nu, &models[bi][ci], dt)?;
                errors[closure_slot(kind)] =
                    spectral_relative_error(&les[bi][ci].state, &filtered)?;
            }
            rows[bi].push(ErrorRow { t: dns.t, errors });
        }
    }

    let hash = cfg.hash();
    let mut records = Vec::with_capacity(cfg.n_les.len());
    for (bi, &band) in cfg.n_les.iter().enumerate() {
        let filtered = cutoff_filter(&dns.state, band);
        let mut spectra = vec![("dns".to_string(), spectral_spectrum(&filtered))];
        for (ci, &kind) in cfg.closures.iter().enumerate() {
            spectra.push((kind.name().to_string(), spectral_spectrum(&les[bi][ci].state)));
        }
        records.push(RunRecord {
            config_hash: hash,
            seed,
            filter: None,
            n_les: band,
            errors: std::mem::take(&mut rows[bi]),
            spectra,
            dissipation: Vec::new(),
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

fn rows_as_tuples(record: &RunRecord) -> Vec<(f64, [f64; 4])> {
    record.errors.iter().map(|r| (r.t, r.errors)).collect()
}

fn write_outputs(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<()> {
    let mut i = 0;
    while i < records.len() {
        let key = (records[i].filter, records[i].n_les);
        let mut j = i;
        while j < records.len() && (records[j].filter, records[j].n_les) == key {
            j += 1;
        }
        let group = &records[i..j];
        let dir = cfg
            .output_dir
            .join(group_dir_name(cfg.experiment, key.0, key.1));
        fs::create_dir_all(&dir)?;

        for rec in group {
            write_errors_csv(
                &dir.join(format!("errors_seed{}.csv", rec.seed)),
                &rows_as_tuples(rec),
            )?;
        }

        let steps = group.iter().map(|r| r.errors.len()).min().unwrap_or(0);
        let inv = 1.0 / group.len() as f64;
        let mean_rows: Vec<(f64, [f64; 4])> = (0..steps)
            .map(|s| {
                let mut t = 0.0;
                let mut errors = [0.0; 4];
                for rec in group {
                    t += rec.errors[s].t;
                    for (e, x) in errors.iter_mut().zip(rec.errors[s].errors) {
                        *e += x;
                    }
                }
                (t * inv, errors.map(|e| e * inv))
            })
            .collect();
        write_errors_csv(&dir.join("errors.csv"), &mean_rows)?;

        let first = &group[0];
        let mut mean_spectra: Vec<(String, Spectrum)> = Vec::with_capacity(first.spectra.len());
        for (si, (name, spectrum)) in first.spectra.iter().enumerate() {
            let mut energy = vec![0.0; spectrum.energy.len()];
            for rec in group {
                debug_assert_eq!(rec.spectra[si].0, *name);
                for (e, x) in energy.iter_mut().zip(&rec.spectra[si].1.energy) {
                    *e += x;
                }
            }
            for e in &mut energy {
                *e *= inv;
            }
            mean_spectra.push((name.clone(), Spectrum { energy }));
        }
        let columns: Vec<(&str, &Spectrum)> = mean_spectra
            .iter()
            .map(|(n, s)| (n.as_str(), s))
            .collect();
        write_spectrum_csv(&dir.join("spectrum.csv"), &columns)?;

        let mut estimates: Vec<(String, DensityEstimate)> = Vec::new();
        for (di, (name, _)) in first.dissipation.iter().enumerate() {
            let mut samples = Vec::new();
            for rec in group {
                debug_assert_eq!(rec.dissipation[di].0, *name);
                samples.extend_from_slice(&rec.dissipation[di].1);
            }
            estimates.push((name.clone(), kde(&samples, None)?));
        }
        let blocks: Vec<(&str, &DensityEstimate)> = estimates
            .iter()
            .map(|(n, e)| (n.as_str(), e))
            .collect();
        write_dissipation_csv(&dir.join("dissipation.csv"), &blocks)?;

        i = j;
    }
    Ok(())
}

/// Renders the summary error table: one row per (filter, coarse size),
/// columns the four closures' ensemble-mean final errors. Returns
/// `(formatted text, CSV)`, both deterministically ordered.
pub fn emit_table(records: &[RunRecord]) -> (String, String) {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (filter_slot(r.filter), r.n_les, r.seed));

    let mut text = String::new();
    let mut csv = String::new();
    let _ = writeln!(
        text,
        "{:<8}{:>8}{:>14}{:>14}{:>14}{:>14}",
        "filter", "N_les", "no_model", "classic", "swap_sym", "swap"
    );
    csv.push_str("filter,n_les,no_model,classic,swap_sym,swap\n");

    let mut i = 0;
    while i < sorted.len() {
        let key = (sorted[i].filter, sorted[i].n_les);
        let mut j = i;
        let mut sums = [0.0f64; 4];
        while j < sorted.len() && (sorted[j].filter, sorted[j].n_les) == key {
            for (s, e) in sums.iter_mut().zip(sorted[j].final_errors()) {
                *s += e;
            }
            j += 1;
        }
        let means = sums.map(|s| s / (j - i) as f64);
        let filter_name = key.0.map_or("-", |f| f.name());

        let _ = write!(text, "{:<8}{:>8}", filter_name, key.1);
        let _ = write!(csv, "{},{}", filter_name, key.1);
        for m in means {
            if m.is_nan() {
                let _ = write!(text, "{:>14}", "-");
            } else {
                let _ = write!(text, "{:>14}", format!("{m:.3e}"));
            }
            let _ = write!(csv, ",{m:e}");
        }
        text.push('\n');
        csv.push('\n');
        i = j;
    }
    (text, csv)
}
