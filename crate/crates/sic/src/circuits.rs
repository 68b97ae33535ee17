//! Brickwall random circuits and random Clifford Floquet circuits with
//! optional mid-circuit Z measurements, producing MI(x, t) trajectories.
//!
//! One time unit is an even-odd double layer; this convention gives a
//! lightcone speed of 2. Measurements happen after each half-layer, per site,
//! with probability `p_m`. Randomness is consumed in a fixed order (gates of a
//! half-layer left to right, then measurement sites ascending) so trajectories
//! are bit-for-bit reproducible from the seed.

use crate::clifford2::{sample_clifford2, CliffordGate2};
use crate::stabilizer::{init_encoded, EncodingScheme, Region, StabilizerError, StabilizerTableau};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("system size must be even, got {0}")]
    OddSystemSize(usize),
    #[error("measurement probability {0} outside [0, 1]")]
    BadMeasurementRate(f64),
    #[error("observation time {0} exceeds circuit depth {1}")]
    TimeBeyondDepth(usize, usize),
    #[error("averaging window [{0}, {1}] is empty or exceeds depth {2}")]
    BadWindow(usize, usize, usize),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
}

/// Static description of one monitored brickwall circuit.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    pub l: usize,
    pub periodic: bool,
    /// Measurement probability per site per half-layer.
    pub p_m: f64,
    /// Gates drawn once at t = 0 and replayed every unit.
    pub floquet: bool,
    /// Total time in even-odd double layers.
    pub depth: usize,
    pub encoding: EncodingScheme,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.l % 2 != 0 {
            return Err(CircuitError::OddSystemSize(self.l));
        }
        if !(0.0..=1.0).contains(&self.p_m) {
            return Err(CircuitError::BadMeasurementRate(self.p_m));
        }
        Ok(())
    }

    /// Default E placement: middle site for one-to-one.
    pub fn one_to_one_center(l: usize) -> EncodingScheme {
        EncodingScheme::OneToOne { e: l / 2 }
    }
}

/// Observation plan: contiguous regions A (centered on E) and times.
#[derive(Clone, Debug)]
pub struct RegionSchedule {
    pub l_a: Vec<usize>,
    /// Observation times in double layers, non-decreasing; 0 records the
    /// encoded initial state.
    pub times: Vec<usize>,
}

/// Contiguous region of size `l_a` centered on `center`, ties extended one
/// site to the left, clamped to the system.
pub fn centered_region(center: usize, l_a: usize, l: usize) -> std::ops::Range<usize> {
    assert!(l_a >= 1 && l_a <= l);
    let left = if l_a % 2 == 0 { l_a / 2 } else { l_a / 2 };
    let start = center.saturating_sub(left).min(l - l_a);
    start..start + l_a
}

/// Region A for a given encoding: centered on E (one-to-one), anywhere for
/// one-to-all (we also center it), centered on the chain for many-to-many.
pub fn region_a(spec: &CircuitSpec, l_a: usize) -> std::ops::Range<usize> {
    let center = match spec.encoding {
        EncodingScheme::OneToOne { e } => e,
        EncodingScheme::OneToAll => spec.l / 2,
        EncodingScheme::ManyToMany => spec.l / 2,
    };
    centered_region(center, l_a, spec.l)
}

/// Gate layout of one double layer: odd pairs then even pairs.
fn layer_pairs(l: usize, periodic: bool) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let odd: Vec<_> = (0..l / 2).map(|k| (2 * k, 2 * k + 1)).collect();
    let mut even: Vec<_> = (0..l / 2 - 1).map(|k| (2 * k + 1, 2 * k + 2)).collect();
    if periodic {
        even.push((l - 1, 0));
    }
    (odd, even)
}

/// Per-trajectory state: tableau plus the replay cache for Floquet runs.
pub struct Trajectory {
    pub state: StabilizerTableau,
    spec: CircuitSpec,
    rng: ChaCha8Rng,
    floquet_gates: Option<Vec<CliffordGate2>>,
    pub n_measurements: u64,
}

impl Trajectory {
    pub fn new(spec: CircuitSpec, seed: u64, stream: u64) -> Result<Self, CircuitError> {
        spec.validate()?;
        let state = init_encoded(spec.l, spec.encoding)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self { state, spec, rng, floquet_gates: None, n_measurements: 0 })
    }

    fn half_layer(
        &mut self,
        pairs: &[(usize, usize)],
        replay: Option<&[CliffordGate2]>,
        record: Option<&mut Vec<CliffordGate2>>,
    ) -> Result<(), CircuitError> {
        let mut recorded = Vec::new();
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let g = match replay {
                Some(gs) => gs[k],
                None => sample_clifford2(&mut self.rng),
            };
            if record.is_some() {
                recorded.push(g);
            }
            self.state.apply_gate(g, a, b)?;
        }
        if let Some(out) = record {
            out.extend(recorded);
        }
        if self.spec.p_m > 0.0 {
            for q in 0..self.spec.l {
                if self.rng.gen::<f64>() < self.spec.p_m {
                    self.state.measure_z(q, &mut self.rng)?;
                    self.n_measurements += 1;
                }
            }
        }
        Ok(())
    }

    /// Advance one double layer. `t_index` is the current time step, counted
    /// from 0; Floquet circuits draw gates at step 0 and replay them after.
    pub fn step(&mut self, t_index: usize) -> Result<(), CircuitError> {
        let (odd, even) = layer_pairs(self.spec.l, self.spec.periodic);
        if self.spec.floquet {
            if t_index == 0 && self.floquet_gates.is_none() {
                let mut gates = Vec::with_capacity(odd.len() + even.len());
                self.half_layer(&odd, None, Some(&mut gates))?;
                let split = gates.len();
                self.half_layer(&even, None, Some(&mut gates))?;
                debug_assert_eq!(split, odd.len());
                self.floquet_gates = Some(gates);
            } else {
                let gates = self.floquet_gates.clone().expect("floquet gates drawn at t=0");
                let (g_odd, g_even) = gates.split_at(odd.len());
                self.half_layer(&odd, Some(g_odd), None)?;
                self.half_layer(&even, Some(g_even), None)?;
            }
        } else {
            self.half_layer(&odd, None, None)?;
            self.half_layer(&even, None, None)?;
        }
        Ok(())
    }

    /// The gates replayed each period (Floquet only, after the first step).
    pub fn floquet_gate_ids(&self) -> Option<Vec<u16>> {
        self.floquet_gates.as_ref().map(|g| g.iter().map(|x| x.id).collect())
    }

    /// Reference region (all qubits past the system).
    pub fn reference(&self) -> Region {
        let n = self.state.n_qubits();
        Region::contiguous(self.spec.l..n, n).expect("reference in bounds")
    }

    /// MI(A:R) for a contiguous subsystem of size l_a, normalized so the
    /// full-information value is 2 (i.e. divided by L/2 for many-to-many).
    pub fn mi(&self, l_a: usize) -> Result<f64, CircuitError> {
        let n = self.state.n_qubits();
        let a = Region::contiguous(region_a(&self.spec, l_a), n)?;
        let raw = self.state.mutual_information(&a, &self.reference())? as f64;
        let norm = match self.spec.encoding {
            EncodingScheme::ManyToMany => self.spec.l as f64 / 2.0,
            _ => 1.0,
        };
        Ok(raw / norm)
    }
}

/// MI grid of one realization: rows indexed by observation time, columns by
/// subsystem size.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryGrid {
    pub times: Vec<usize>,
    pub l_a: Vec<usize>,
    /// mi[t_idx][la_idx]
    pub mi: Vec<Vec<f64>>,
}

/// Run a single realization, recording MI(A:R) for every scheduled (t, L_A).
pub fn run_trajectory(
    spec: &CircuitSpec,
    schedule: &RegionSchedule,
    seed: u64,
    stream: u64,
) -> Result<TrajectoryGrid, CircuitError> {
    if let Some(&t_max) = schedule.times.iter().max() {
        if t_max > spec.depth {
            return Err(CircuitError::TimeBeyondDepth(t_max, spec.depth));
        }
    }
    let mut traj = Trajectory::new(spec.clone(), seed, stream)?;
    let mut mi = Vec::with_capacity(schedule.times.len());
    let mut t_now = 0usize;
    for &t_obs in &schedule.times {
        while t_now < t_obs {
            traj.step(t_now)?;
            t_now += 1;
        }
        let row: Result<Vec<f64>, _> = schedule.l_a.iter().map(|&la| traj.mi(la)).collect();
        mi.push(row?);
    }
    Ok(TrajectoryGrid { times: schedule.times.clone(), l_a: schedule.l_a.clone(), mi })
}

/// Late-time average of MI over `t_window` (inclusive bounds, every double
/// layer), per subsystem size, for a single realization.
pub fn steady_sweep(
    spec: &CircuitSpec,
    l_a_list: &[usize],
    t_window: (usize, usize),
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>, CircuitError> {
    let (t0, t1) = t_window;
    if t1 > spec.depth || t0 > t1 {
        return Err(CircuitError::BadWindow(t0, t1, spec.depth));
    }
    let times: Vec<usize> = (t0..=t1).collect();
    let schedule = RegionSchedule { l_a: l_a_list.to_vec(), times };
    let grid = run_trajectory(spec, &schedule, seed, stream)?;
    let n_t = grid.times.len() as f64;
    Ok((0..l_a_list.len())
        .map(|j| grid.mi.iter().map(|row| row[j]).sum::<f64>() / n_t)
        .collect())
}

/// Default late-time averaging window: [L, 2L] for random circuits,
/// [2L, 4L] for Floquet (localized) runs.
pub fn default_steady_window(l: usize, floquet: bool) -> (usize, usize) {
    if floquet {
        (2 * l, 4 * l)
    } else {
        (l, 2 * l)
    }
}
