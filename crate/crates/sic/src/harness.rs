//! Experiment orchestration: TOML configs, deterministic realization
//! averaging over a work pool, theory overlays, comparison reports and
//! CSV/JSON serialization.

use crate::circuits::{centered_region, run_trajectory, CircuitSpec, RegionSchedule};
use crate::dense::{build_interacting_aa, evolve as dense_evolve, neel_bell_state, InteractingAaParams};
use crate::gaussian::{self, ModelParams, ALPHA_GOLDEN};
use crate::stabilizer::EncodingScheme;
use crate::theory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("backend error{0}: {1}")]
    Backend(String, String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv parse error: {0}")]
    Csv(String),
    #[error("axis mismatch between series: {0}")]
    AxisMismatch(String),
    #[error("comparison beyond tolerance: max residual {0} > {1}")]
    BeyondTolerance(f64, f64),
}

impl HarnessError {
    /// Process exit code: 2 config, 3 backend/io, 4 comparison failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::BeyondTolerance(..) => 4,
            _ => 3,
        }
    }
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Clifford,
    Gaussian,
    Dense,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaPolicy {
    #[default]
    Fixed,
    Random,
}

fn default_j() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    ALPHA_GOLDEN
}
fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub l: usize,
    #[serde(default = "default_true")]
    pub periodic: bool,
    #[serde(default)]
    pub p_m: f64,
    #[serde(default)]
    pub floquet: bool,
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub w: f64,
    #[serde(default)]
    pub theta_policy: ThetaPolicy,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    OneToOne,
    OneToAll,
    ManyToMany,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EncodingConfig {
    pub scheme: SchemeName,
    /// Encoded site E (one-to-one only); defaults to L/2.
    #[serde(default)]
    pub e: Option<usize>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub l_a: Vec<usize>,
    /// Explicit observation times; alternative to the t_* grid fields.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default)]
    pub t_stop: Option<f64>,
    #[serde(default)]
    pub t_num: Option<usize>,
    /// Logarithmic grid (t_start must then be > 0).
    #[serde(default)]
    pub t_log: bool,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_realizations: usize,
    pub master_seed: u64,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub backend: Backend,
    #[serde(default)]
    pub theory_overlay: bool,
    pub model: ModelConfig,
    pub encoding: EncodingConfig,
    pub schedule: ScheduleConfig,
    pub sampling: SamplingConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn e_site(&self) -> usize {
        self.encoding.e.unwrap_or(self.model.l / 2)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let m = &self.model;
        if m.l < 2 {
            return cfg_err("model.l must be >= 2");
        }
        if self.sampling.n_realizations == 0 {
            return cfg_err("sampling.n_realizations must be >= 1");
        }
        if self.schedule.l_a.iter().any(|&la| la == 0 || la > m.l) {
            return cfg_err("schedule.l_a entries must lie in 1..=L");
        }
        if let Some(e) = self.encoding.e {
            if e >= m.l {
                return cfg_err("encoding.e out of range");
            }
        }
        if !(0.0..=1.0).contains(&m.p_m) {
            return cfg_err("model.p_m must lie in [0, 1]");
        }
        self.time_grid()?;
        match self.backend {
            Backend::Clifford => {
                if m.u != 0.0 || m.w != 0.0 || m.delta != 0.0 {
                    return cfg_err("clifford backend takes no Hamiltonian parameters (u, w, delta)");
                }
                for &t in &self.time_grid()? {
                    if (t - t.round()).abs() > 1e-9 || t < 0.0 {
                        return cfg_err(format!("clifford times must be non-negative integers, got {t}"));
                    }
                }
            }
            Backend::Gaussian => {
                if self.encoding.scheme != SchemeName::OneToOne {
                    return cfg_err("gaussian backend supports only the one_to_one encoding");
                }
                if m.u != 0.0 {
                    return cfg_err("u > 0 is not quadratic; use the dense backend");
                }
                if m.p_m != 0.0 || m.floquet {
                    return cfg_err("p_m and floquet apply only to the clifford backend");
                }
            }
            Backend::Dense => {
                if self.encoding.scheme != SchemeName::OneToOne {
                    return cfg_err("dense backend supports only the one_to_one encoding");
                }
                if m.l > 16 {
                    return cfg_err("dense backend limited to L <= 16");
                }
                if m.l % 2 != 0 {
                    return cfg_err("dense backend needs even L (Neel start)");
                }
                if m.delta != 0.0 {
                    return cfg_err("dense backend models the interacting AA chain (delta = 0)");
                }
                if m.p_m != 0.0 || m.floquet {
                    return cfg_err("p_m and floquet apply only to the clifford backend");
                }
            }
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<Vec<f64>, HarnessError> {
        let s = &self.schedule;
        let mut times = match (&s.times, s.t_start, s.t_stop, s.t_num) {
            (Some(ts), None, None, None) => ts.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n < 1 || b < a {
                    return cfg_err("bad t grid: need t_num >= 1 and t_stop >= t_start");
                }
                if s.t_log {
                    if a <= 0.0 {
                        return cfg_err("logarithmic grid needs t_start > 0");
                    }
                    (0..n)
                        .map(|i| {
                            let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                            (a.ln() + f * (b.ln() - a.ln())).exp()
                        })
                        .collect()
                } else {
                    (0..n)
                        .map(|i| {
                            let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                            a + f * (b - a)
                        })
                        .collect()
                }
            }
            _ => return cfg_err("schedule needs either `times` or all of t_start/t_stop/t_num"),
        };
        if times.is_empty() {
            return cfg_err("empty time grid");
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if times[0] < 0.0 {
            return cfg_err("negative observation time");
        }
        Ok(times)
    }

    fn encoding_scheme(&self) -> EncodingScheme {
        match self.encoding.scheme {
            SchemeName::OneToOne => EncodingScheme::OneToOne { e: self.e_site() },
            SchemeName::OneToAll => EncodingScheme::OneToAll,
            SchemeName::ManyToMany => EncodingScheme::ManyToMany,
        }
    }

    fn circuit_spec(&self, depth: usize) -> CircuitSpec {
        CircuitSpec {
            l: self.model.l,
            periodic: self.model.periodic,
            p_m: self.model.p_m,
            floquet: self.model.floquet,
            depth,
            encoding: self.encoding_scheme(),
        }
    }
}

/// The MI(x, t) data object: per-cell mean, standard error and realization
/// count on a shared (t, L_A) grid.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct SicSeries {
    pub times: Vec<f64>,
    pub l_a: Vec<usize>,
    /// mean[t_idx][la_idx]
    pub mi_mean: Vec<Vec<f64>>,
    pub mi_sem: Vec<Vec<f64>>,
    pub n_real: usize,
    pub provenance: String,
}

fn merge_realizations(grids: Vec<Vec<Vec<f64>>>, times: Vec<f64>, l_a: Vec<usize>, provenance: &str) -> SicSeries {
    let n = grids.len();
    let (nt, nl) = (times.len(), l_a.len());
    let mut mean = vec![vec![0.0; nl]; nt];
    let mut sem = vec![vec![0.0; nl]; nt];
    for g in &grids {
        for (ti, row) in g.iter().enumerate() {
            for (li, &v) in row.iter().enumerate() {
                mean[ti][li] += v;
            }
        }
    }
    for row in &mut mean {
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    if n > 1 {
        for g in &grids {
            for (ti, row) in g.iter().enumerate() {
                for (li, &v) in row.iter().enumerate() {
                    let d = v - mean[ti][li];
                    sem[ti][li] += d * d;
                }
            }
        }
        for row in &mut sem {
            for v in row.iter_mut() {
                *v = (*v / ((n - 1) as f64 * n as f64)).sqrt();
            }
        }
    }
    SicSeries { times, l_a, mi_mean: mean, mi_sem: sem, n_real: n, provenance: provenance.into() }
}

fn realization_theta(config: &ExperimentConfig, index: u64) -> f64 {
    match config.model.theta_policy {
        ThetaPolicy::Fixed => config.model.theta,
        ThetaPolicy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.sampling.master_seed);
            rng.set_stream(index);
            rng.gen::<f64>() * 2.0 * std::f64::consts::PI
        }
    }
}

fn gaussian_realization(config: &ExperimentConfig, times: &[f64], index: u64) -> Result<Vec<Vec<f64>>, HarnessError> {
    let m = &config.model;
    let berr = |e: String| HarnessError::Backend(format!(" (realization {index})"), e);
    let params = ModelParams {
        j: m.j,
        w: m.w,
        theta: realization_theta(config, index),
        alpha: m.alpha,
        delta: m.delta,
        periodic: m.periodic,
    };
    let l = m.l;
    let h = if m.delta == 0.0 {
        gaussian::build_aa(&params, l, 1)
    } else {
        gaussian::build_ssh(&params, l, 1)
    }
    .map_err(|e| berr(e.to_string()))?;
    let e_site = config.e_site();
    let mut state = gaussian::neel_state(l, 1).map_err(|e| berr(e.to_string()))?;
    if e_site % 2 == 0 {
        // Neel occupies odd sites; keep the (E, R) pair half-filled.
        gaussian::set_occupation(&mut state, l, true).map_err(|e| berr(e.to_string()))?;
    }
    gaussian::bell_encode(&mut state, e_site, l).map_err(|e| berr(e.to_string()))?;
    let mut grid = Vec::with_capacity(times.len());
    for &t in times {
        let st = gaussian::evolve(&state, &h, t).map_err(|e| berr(e.to_string()))?;
        let mut row = Vec::with_capacity(config.schedule.l_a.len());
        for &la in &config.schedule.l_a {
            let a: Vec<usize> = centered_region(e_site, la, l).collect();
            row.push(gaussian::mutual_information(&st, &a, &[l]).map_err(|e| berr(e.to_string()))?);
        }
        grid.push(row);
    }
    Ok(grid)
}

fn dense_realization(config: &ExperimentConfig, times: &[f64], index: u64) -> Result<Vec<Vec<f64>>, HarnessError> {
    let m = &config.model;
    let berr = |e: String| HarnessError::Backend(format!(" (realization {index})"), e);
    let params = InteractingAaParams {
        j: m.j,
        u: m.u,
        w: m.w,
        theta: realization_theta(config, index),
        alpha: m.alpha,
        periodic: m.periodic,
    };
    let l = m.l;
    let e_site = config.e_site();
    let state0 = neel_bell_state(l, e_site).map_err(|e| berr(e.to_string()))?;
    let h = build_interacting_aa(l, &params, true, state0.basis.n_particles)
        .map_err(|e| berr(e.to_string()))?;
    let mut grid = Vec::with_capacity(times.len());
    for &t in times {
        let st = dense_evolve(&state0, &h, t);
        let mut row = Vec::with_capacity(config.schedule.l_a.len());
        for &la in &config.schedule.l_a {
            let a: Vec<usize> = centered_region(e_site, la, l).collect();
            row.push(crate::dense::mutual_information(&st, &a, &[l]).map_err(|e| berr(e.to_string()))?);
        }
        grid.push(row);
    }
    Ok(grid)
}

/// Run the configured experiment: n_realizations independent jobs with
/// per-realization RNG substreams, merged by index (order-independent).
pub fn run(config: &ExperimentConfig) -> Result<SicSeries, HarnessError> {
    config.validate()?;
    let times = config.time_grid()?;
    let n = config.sampling.n_realizations;
    let grids: Result<Vec<Vec<Vec<f64>>>, HarnessError> = match config.backend {
        Backend::Clifford => {
            let t_usize: Vec<usize> = times.iter().map(|&t| t.round() as usize).collect();
            let depth = *t_usize.iter().max().unwrap();
            let spec = config.circuit_spec(depth);
            let schedule = RegionSchedule { l_a: config.schedule.l_a.clone(), times: t_usize };
            (0..n as u64)
                .into_par_iter()
                .map(|i| {
                    run_trajectory(&spec, &schedule, config.sampling.master_seed, i)
                        .map(|g| g.mi)
                        .map_err(|e| HarnessError::Backend(format!(" (realization {i})"), e.to_string()))
                })
                .collect()
        }
        Backend::Gaussian => (0..n as u64)
            .into_par_iter()
            .map(|i| gaussian_realization(config, &times, i))
            .collect(),
        Backend::Dense => (0..n as u64)
            .into_par_iter()
            .map(|i| dense_realization(config, &times, i))
            .collect(),
    };
    Ok(merge_realizations(grids?, times, config.schedule.l_a.clone(), "simulation"))
}

/// Theory curves on the same axes: membrane predictions for the clifford
/// backend (unitary, non-Floquet), quasiparticle predictions for the clean
/// or SSH gaussian backend. Zero sem, provenance = "theory".
pub fn predict(config: &ExperimentConfig) -> Result<SicSeries, HarnessError> {
    config.validate()?;
    let times = config.time_grid()?;
    let m = &config.model;
    let mut mean = Vec::with_capacity(times.len());
    match config.backend {
        Backend::Clifford => {
            if m.p_m > 0.0 {
                return cfg_err("no membrane predictor with measurements (p_m > 0)");
            }
            if m.floquet {
                return cfg_err("no membrane predictor for Floquet (localized) circuits");
            }
            for &t in &times {
                let mut row = Vec::new();
                for &la in &config.schedule.l_a {
                    let v = match config.encoding.scheme {
                        SchemeName::OneToOne => theory::predict_one_to_one(m.l, la, t, 2),
                        SchemeName::OneToAll => theory::predict_one_to_all(m.l, la, t, 2),
                        SchemeName::ManyToMany => theory::predict_many_to_many(m.l, la, t, 2),
                    }
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                    row.push(v);
                }
                mean.push(row);
            }
        }
        Backend::Gaussian => {
            if m.w != 0.0 {
                return cfg_err("quasiparticle predictor covers only clean quenches (w = 0)");
            }
            let spec = if m.delta == 0.0 {
                if !m.periodic {
                    return cfg_err("clean quasiparticle predictor assumes periodic boundaries");
                }
                theory::QuasiparticleSpec::clean_pbc()
            } else {
                if m.periodic {
                    return cfg_err("SSH quasiparticle predictor assumes open boundaries");
                }
                theory::QuasiparticleSpec::ssh_obc(m.delta)
                    .map_err(|e| HarnessError::Config(e.to_string()))?
            };
            let e_site = config.e_site();
            for &t in &times {
                let mut row = Vec::new();
                for &la in &config.schedule.l_a {
                    let a = centered_region(e_site, la, m.l);
                    let v = theory::quasiparticle_mi(
                        m.l,
                        la,
                        e_site as f64 + 0.5,
                        a.start as f64,
                        t,
                        &spec,
                    )
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                    row.push(v);
                }
                mean.push(row);
            }
        }
        Backend::Dense => {
            return cfg_err("no closed-form predictor for the dense (interacting) backend");
        }
    }
    let nt = times.len();
    let nl = config.schedule.l_a.len();
    Ok(SicSeries {
        times,
        l_a: config.schedule.l_a.clone(),
        mi_mean: mean,
        mi_sem: vec![vec![0.0; nl]; nt],
        n_real: 1,
        provenance: "theory".into(),
    })
}

/// First observation time where MI drops below `threshold` for column
/// `la_idx`, or None if it never does.
pub fn first_crossing(series: &SicSeries, la_idx: usize, threshold: f64) -> Option<f64> {
    series
        .times
        .iter()
        .zip(series.mi_mean.iter())
        .find(|(_, row)| row[la_idx] < threshold)
        .map(|(&t, _)| t)
}

#[derive(Serialize, Debug, Clone)]
pub struct BreakpointReport {
    pub l_a: usize,
    pub threshold: f64,
    pub sim_t: Option<f64>,
    pub thy_t: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Serialize, Debug, Clone)]
pub struct CompareReport {
    pub max_abs_residual: f64,
    /// residuals[t_idx][la_idx] = sim - thy
    pub residuals: Vec<Vec<f64>>,
    pub breakpoints: Vec<BreakpointReport>,
}

/// Per-cell residuals plus breakpoint-time estimates (first crossings below
/// 1.9 and 0.1) and their relative error against the theory curve.
pub fn compare(sim: &SicSeries, thy: &SicSeries) -> Result<CompareReport, HarnessError> {
    if sim.times.len() != thy.times.len()
        || sim
            .times
            .iter()
            .zip(&thy.times)
            .any(|(a, b)| (a - b).abs() > 1e-9)
        || sim.l_a != thy.l_a
    {
        return Err(HarnessError::AxisMismatch(
            "compare requires identical time and L_A axes".into(),
        ));
    }
    let mut residuals = Vec::with_capacity(sim.times.len());
    let mut max_abs = 0.0f64;
    for (srow, trow) in sim.mi_mean.iter().zip(&thy.mi_mean) {
        let row: Vec<f64> = srow.iter().zip(trow).map(|(a, b)| a - b).collect();
        for &r in &row {
            max_abs = max_abs.max(r.abs());
        }
        residuals.push(row);
    }
    let mut breakpoints = Vec::new();
    for (li, &la) in sim.l_a.iter().enumerate() {
        for &threshold in &[1.9, 0.1] {
            let sim_t = first_crossing(sim, li, threshold);
            let thy_t = first_crossing(thy, li, threshold);
            let relative_error = match (sim_t, thy_t) {
                (Some(a), Some(b)) if b > 0.0 => Some((a - b).abs() / b),
                _ => None,
            };
            breakpoints.push(BreakpointReport { l_a: la, threshold, sim_t, thy_t, relative_error });
        }
    }
    Ok(CompareReport { max_abs_residual: max_abs, residuals, breakpoints })
}

/// Values a sweep axis may take; each value produces one run with the shared
/// master seed.
#[derive(Clone, Copy, Debug)]
pub enum SweepAxis {
    W,
    L,
    Delta,
    PM,
    U,
}

impl std::str::FromStr for SweepAxis {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "w" => Ok(SweepAxis::W),
            "l" => Ok(SweepAxis::L),
            "delta" => Ok(SweepAxis::Delta),
            "p_m" => Ok(SweepAxis::PM),
            "u" => Ok(SweepAxis::U),
            other => cfg_err(format!("unknown sweep axis `{other}` (w, l, delta, p_m, u)")),
        }
    }
}

pub fn apply_axis(config: &ExperimentConfig, axis: SweepAxis, value: f64) -> ExperimentConfig {
    let mut c = config.clone();
    match axis {
        SweepAxis::W => c.model.w = value,
        SweepAxis::L => c.model.l = value.round() as usize,
        SweepAxis::Delta => c.model.delta = value,
        SweepAxis::PM => c.model.p_m = value,
        SweepAxis::U => c.model.u = value,
    }
    c
}

/// One run per axis value; failures are reported per member without
/// aborting the siblings.
pub fn sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Vec<(f64, Result<SicSeries, HarnessError>)> {
    values
        .iter()
        .map(|&v| (v, run(&apply_axis(config, axis, v))))
        .collect()
}

fn sig10(x: f64) -> String {
    format!("{x:.9e}")
}

/// CSV with the exact header `t,L_A,mi_mean,mi_sem,n_real` and floats at 10
/// significant digits.
pub fn write_csv<W: std::io::Write>(series: &SicSeries, mut out: W) -> Result<(), HarnessError> {
    writeln!(out, "t,L_A,mi_mean,mi_sem,n_real")?;
    for (ti, &t) in series.times.iter().enumerate() {
        for (li, &la) in series.l_a.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                sig10(t),
                la,
                sig10(series.mi_mean[ti][li]),
                sig10(series.mi_sem[ti][li]),
                series.n_real
            )?;
        }
    }
    Ok(())
}

pub fn read_csv(text: &str) -> Result<SicSeries, HarnessError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| HarnessError::Csv("empty file".into()))?;
    if header.trim() != "t,L_A,mi_mean,mi_sem,n_real" {
        return Err(HarnessError::Csv(format!("unexpected header `{header}`")));
    }
    let mut times: Vec<f64> = Vec::new();
    let mut l_a: Vec<usize> = Vec::new();
    let mut cells: Vec<(f64, usize, f64, f64, usize)> = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(HarnessError::Csv(format!("line {}: expected 5 fields", ln + 2)));
        }
        let parse = |s: &str| -> Result<f64, HarnessError> {
            s.trim().parse().map_err(|_| HarnessError::Csv(format!("line {}: bad float `{s}`", ln + 2)))
        };
        let t = parse(parts[0])?;
        let la = parse(parts[1])? as usize;
        let mean = parse(parts[2])?;
        let sem = parse(parts[3])?;
        let n = parse(parts[4])? as usize;
        if !times.iter().any(|&x| (x - t).abs() < 1e-12) {
            times.push(t);
        }
        if !l_a.contains(&la) {
            l_a.push(la);
        }
        cells.push((t, la, mean, sem, n));
    }
    let n_real = cells.first().map(|c| c.4).unwrap_or(0);
    if cells.iter().any(|c| c.4 != n_real) {
        return Err(HarnessError::Csv("n_real varies across cells".into()));
    }
    if cells.len() != times.len() * l_a.len() {
        return Err(HarnessError::Csv("incomplete (t, L_A) grid".into()));
    }
    let mut mi_mean = vec![vec![0.0; l_a.len()]; times.len()];
    let mut mi_sem = vec![vec![0.0; l_a.len()]; times.len()];
    for (t, la, mean, sem, _) in cells {
        let ti = times.iter().position(|&x| (x - t).abs() < 1e-12).unwrap();
        let li = l_a.iter().position(|&x| x == la).unwrap();
        mi_mean[ti][li] = mean;
        mi_sem[ti][li] = sem;
    }
    Ok(SicSeries { times, l_a, mi_mean, mi_sem, n_real, provenance: "file".into() })
}

/// Sidecar manifest written next to each CSV.
#[derive(Serialize, Debug)]
pub struct Manifest<'a> {
    pub config: &'a ExperimentConfig,
    pub provenance: &'a str,
    pub version: &'a str,
    pub wall_time_s: f64,
}

pub fn write_outputs(
    series: &SicSeries,
    config: &ExperimentConfig,
    dir: &Path,
    stem: &str,
    wall_time_s: f64,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut f = std::fs::File::create(&csv_path)?;
    write_csv(series, &mut f)?;
    f.flush()?;
    let manifest = Manifest {
        config,
        provenance: &series.provenance,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s,
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| HarnessError::Csv(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}

// Exercised by both region helpers; kept public for the harness consumers.
pub use crate::circuits::region_a as clifford_region_a;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_clifford_toml() -> String {
        r#"
backend = "clifford"

[model]
l = 8
p_m = 0.0

[encoding]
scheme = "one_to_one"

[schedule]
l_a = [2, 4, 6]
times = [0.0, 4.0, 8.0]

[sampling]
n_realizations = 8
master_seed = 11
"#
        .to_string()
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let cfg = ExperimentConfig::from_toml(&small_clifford_toml()).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        let bad = small_clifford_toml().replace("master_seed", "master_sneed");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = small_clifford_toml() + "\nfavourite_colour = \"green\"\n";
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn config_compatibility_rules() {
        let mut cfg = ExperimentConfig::from_toml(&small_clifford_toml()).unwrap();
        cfg.backend = Backend::Gaussian;
        cfg.encoding.scheme = SchemeName::OneToAll;
        assert!(cfg.validate().is_err());
        cfg.encoding.scheme = SchemeName::OneToOne;
        assert!(cfg.validate().is_ok());
        cfg.model.u = 0.2;
        assert!(cfg.validate().is_err());
        cfg.backend = Backend::Dense;
        assert!(cfg.validate().is_ok());
        cfg.model.l = 18;
        assert!(cfg.validate().is_err());
        cfg.model.l = 8;
        cfg.model.p_m = 0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn time_grids() {
        let mut cfg = ExperimentConfig::from_toml(&small_clifford_toml()).unwrap();
        cfg.schedule.times = None;
        cfg.schedule.t_start = Some(1.0);
        cfg.schedule.t_stop = Some(100.0);
        cfg.schedule.t_num = Some(3);
        cfg.schedule.t_log = true;
        let g = cfg.time_grid().unwrap();
        assert_abs_diff_eq!(g[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g[2], 100.0, epsilon = 1e-9);
        cfg.schedule.t_log = false;
        let g = cfg.time_grid().unwrap();
        assert_abs_diff_eq!(g[1], 50.5, epsilon = 1e-12);
        // Non-integer clifford times rejected.
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_is_deterministic_and_sem_behaves() {
        let cfg = ExperimentConfig::from_toml(&small_clifford_toml()).unwrap();
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.mi_sem.iter().flatten().all(|&s| s >= 0.0));
        // t = 0 cell: MI = 2 exactly when E is inside A (L_A >= 2 centered).
        assert_abs_diff_eq!(a.mi_mean[0][1], 2.0, epsilon = 1e-12);
        let mut one = cfg.clone();
        one.sampling.n_realizations = 1;
        let s = run(&one).unwrap();
        assert!(s.mi_sem.iter().flatten().all(|&x| x == 0.0));
        // Different seed, different story at late times (with overwhelming
        // probability over 8 realizations of an L=8 circuit).
        let mut reseeded = cfg;
        reseeded.sampling.master_seed = 999;
        let c = run(&reseeded).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn merge_matches_serial_recompute() {
        let grids = vec![
            vec![vec![1.0, 2.0]],
            vec![vec![3.0, 2.0]],
            vec![vec![2.0, 2.0]],
        ];
        let s = merge_realizations(grids, vec![0.0], vec![1, 2], "simulation");
        assert_abs_diff_eq!(s.mi_mean[0][0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.mi_mean[0][1], 2.0, epsilon = 1e-15);
        // sem = sqrt(var / n) with var = sum d^2 / (n-1) = 1.
        assert_abs_diff_eq!(s.mi_sem[0][0], (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.mi_sem[0][1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_and_dense_backends_run() {
        let toml = r#"
backend = "gaussian"

[model]
l = 8
w = 0.5
theta_policy = "random"

[encoding]
scheme = "one_to_one"

[schedule]
l_a = [2, 4, 8]
times = [0.0, 1.5]

[sampling]
n_realizations = 3
master_seed = 5
"#;
        let cfg = ExperimentConfig::from_toml(toml).unwrap();
        let s = run(&cfg).unwrap();
        assert_abs_diff_eq!(s.mi_mean[0][2], 2.0, epsilon = 1e-9); // t=0, L_A=L
        assert!(s.mi_sem[1][1] >= 0.0);
        let mut dcfg = cfg.clone();
        dcfg.backend = Backend::Dense;
        dcfg.model.u = 0.2;
        let d = run(&dcfg).unwrap();
        assert_abs_diff_eq!(d.mi_mean[0][2], 2.0, epsilon = 1e-7);
        // At U = 0 and matching theta both backends agree to 1e-7.
        let mut g0 = cfg.clone();
        g0.model.theta_policy = ThetaPolicy::Fixed;
        g0.model.theta = 0.7;
        g0.sampling.n_realizations = 1;
        let mut d0 = g0.clone();
        d0.backend = Backend::Dense;
        let (sg, sd) = (run(&g0).unwrap(), run(&d0).unwrap());
        for (ra, rb) in sg.mi_mean.iter().zip(&sd.mi_mean) {
            for (a, b) in ra.iter().zip(rb) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn predict_and_compare() {
        let cfg = ExperimentConfig::from_toml(&small_clifford_toml()).unwrap();
        let thy = predict(&cfg).unwrap();
        assert_eq!(thy.provenance, "theory");
        assert!(thy.mi_sem.iter().flatten().all(|&x| x == 0.0));
        let report = compare(&thy, &thy).unwrap();
        assert_eq!(report.max_abs_residual, 0.0);
        assert!(report.residuals.iter().flatten().all(|&r| r == 0.0));
        // Axis mismatch rejected.
        let mut other = cfg.clone();
        other.schedule.l_a = vec![2, 4];
        let thy2 = predict(&other).unwrap();
        assert!(compare(&thy, &thy2).is_err());
        // Unsupported regimes.
        let mut pm = cfg.clone();
        pm.model.p_m = 0.1;
        assert!(matches!(predict(&pm), Err(HarnessError::Config(_))));
        let mut dn = cfg;
        dn.backend = Backend::Dense;
        assert!(predict(&dn).is_err());
    }

    #[test]
    fn breakpoint_detection() {
        let s = SicSeries {
            times: vec![0.0, 1.0, 2.0, 3.0],
            l_a: vec![4],
            mi_mean: vec![vec![2.0], vec![2.0], vec![1.2], vec![0.05]],
            mi_sem: vec![vec![0.0]; 4],
            n_real: 1,
            provenance: "simulation".into(),
        };
        assert_eq!(first_crossing(&s, 0, 1.9), Some(2.0));
        assert_eq!(first_crossing(&s, 0, 0.1), Some(3.0));
        assert_eq!(first_crossing(&s, 0, 0.01), None);
    }

    #[test]
    fn csv_round_trip() {
        let cfg = ExperimentConfig::from_toml(&small_clifford_toml()).unwrap();
        let s = run(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,L_A,mi_mean,mi_sem,n_real\n"));
        let back = read_csv(&text).unwrap();
        assert_eq!(back.times.len(), s.times.len());
        assert_eq!(back.l_a, s.l_a);
        assert_eq!(back.n_real, s.n_real);
        for (ra, rb) in s.mi_mean.iter().zip(&back.mi_mean) {
            for (a, b) in ra.iter().zip(rb) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        assert!(read_csv("nope\n1,2,3,4,5\n").is_err());
    }

    #[test]
    fn sweep_isolates_member_failures() {
        let cfg = ExperimentConfig::from_toml(&small_clifford_toml()).unwrap();
        let results = sweep(&cfg, SweepAxis::PM, &[0.0, 0.5, 1.5]);
        assert_eq!(results.len(), 3);
        assert!(results[0].1.is_ok());
        assert!(results[1].1.is_ok());
        assert!(results[2].1.is_err()); // p_m = 1.5 invalid
    }

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::Backend("".into(), "x".into()).exit_code(), 3);
        assert_eq!(HarnessError::BeyondTolerance(1.0, 0.1).exit_code(), 4);
    }
}
