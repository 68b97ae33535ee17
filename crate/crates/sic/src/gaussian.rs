//! Free-fermion dynamics via single-particle correlation matrices.
//!
//! A Gaussian state on N modes is fully described by C_ij = <c_i^dag c_j>.
//! Quenches under a quadratic Hamiltonian h evolve C exactly through the
//! spectral decomposition of h, so any observation time costs one pair of
//! matrix products and there is no time-step error. The reference qubit is an
//! extra lattice mode, Bell-encoded by a pi/4 two-mode rotation and decoupled
//! from h during bulk evolution.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Incommensurate wavevector used for the quasiperiodic potential.
pub const ALPHA_GOLDEN: f64 = 0.6180339887498949; // (sqrt(5) - 1) / 2

const HERMITICITY_TOL: f64 = 1e-12;
const EIGENVALUE_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("bell pair sites must hold exactly one particle, found occupation {0}")]
    PairNotHalfFilled(f64),
    #[error("system size must be even, got {0}")]
    OddSystemSize(usize),
    #[error("site index {0} out of range for {1} modes")]
    IndexOutOfRange(usize, usize),
    #[error("shape mismatch: state has {0} modes, hamiltonian {1}")]
    ShapeMismatch(usize, usize),
    #[error("linear algebra backend failure: {0}")]
    Lapack(String),
}

/// Model parameters for the quadratic chains.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub j: f64,
    /// Quasiperiodic strength w (AA potential V_j = 2 w cos(2 pi alpha j + theta)).
    pub w: f64,
    pub theta: f64,
    pub alpha: f64,
    /// SSH dimerization.
    pub delta: f64,
    pub periodic: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { j: 1.0, w: 0.0, theta: 0.0, alpha: ALPHA_GOLDEN, delta: 0.0, periodic: true }
    }
}

/// Quadratic Hamiltonian on `n_modes` modes with a cached spectral
/// decomposition used by `evolve`. Ancilla rows/columns stay exactly zero.
#[derive(Clone, Debug)]
pub struct SingleParticleHamiltonian {
    h: Array2<f64>,
    evals: Array1<f64>,
    evecs: Array2<f64>,
}

impl SingleParticleHamiltonian {
    pub fn new(h: Array2<f64>) -> Result<Self, GaussianError> {
        let dev = (&h - &h.t())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if dev > HERMITICITY_TOL {
            return Err(GaussianError::NotHermitian(dev));
        }
        let (evals, evecs) = h
            .eigh(UPLO::Lower)
            .map_err(|e| GaussianError::Lapack(e.to_string()))?;
        Ok(Self { h, evals, evecs })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn n_modes(&self) -> usize {
        self.h.nrows()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.evals
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.evecs
    }

    /// Single-particle propagator M = exp(+i h t) as a complex matrix.
    fn propagator(&self, t: f64) -> Array2<C64> {
        let n = self.n_modes();
        let mut vd = Array2::<C64>::zeros((n, n));
        for (k, &e) in self.evals.iter().enumerate() {
            let phase = C64::from_polar(1.0, e * t);
            for i in 0..n {
                vd[[i, k]] = C64::new(self.evecs[[i, k]], 0.0) * phase;
            }
        }
        let vt = self.evecs.mapv(|x| C64::new(x, 0.0));
        vd.dot(&vt.t())
    }
}

/// Correlation matrix C_ij = <c_i^dag c_j> of a fermionic Gaussian state.
#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    pub c: Array2<C64>,
}

impl CorrelationMatrix {
    pub fn n_modes(&self) -> usize {
        self.c.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n_modes()).map(|i| self.c[[i, i]].re).sum()
    }

    /// Max deviation from Hermiticity, for invariant checks.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.n_modes();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                dev = dev.max((self.c[[i, j]] - self.c[[j, i]].conj()).norm());
            }
        }
        dev
    }
}

/// Neel state |0101...> on L system sites plus empty ancilla modes.
pub fn neel_state(l: usize, n_ancilla: usize) -> Result<CorrelationMatrix, GaussianError> {
    if l % 2 != 0 {
        return Err(GaussianError::OddSystemSize(l));
    }
    let n = l + n_ancilla;
    let mut c = Array2::<C64>::zeros((n, n));
    for i in 0..l {
        if i % 2 == 1 {
            c[[i, i]] = C64::new(1.0, 0.0);
        }
    }
    Ok(CorrelationMatrix { c })
}

/// Force the occupation of a single (decoupled) mode, used to load the
/// ancilla opposite to the E site before Bell encoding.
pub fn set_occupation(state: &mut CorrelationMatrix, site: usize, filled: bool) -> Result<(), GaussianError> {
    let n = state.n_modes();
    if site >= n {
        return Err(GaussianError::IndexOutOfRange(site, n));
    }
    state.c[[site, site]] = C64::new(if filled { 1.0 } else { 0.0 }, 0.0);
    Ok(())
}

/// Bell-encode the (e, r) pair: evolve the two-mode block under the hopping
/// h = |e><r| + |r><e| for time pi/4, turning |01> into (|01> - i|10>)/sqrt 2.
pub fn bell_encode(state: &mut CorrelationMatrix, e: usize, r: usize) -> Result<(), GaussianError> {
    let n = state.n_modes();
    for &q in &[e, r] {
        if q >= n {
            return Err(GaussianError::IndexOutOfRange(q, n));
        }
    }
    let occ = state.c[[e, e]].re + state.c[[r, r]].re;
    if (occ - 1.0).abs() > 1e-9 {
        return Err(GaussianError::PairNotHalfFilled(occ));
    }
    // U = exp(i t h_pair) restricted to the pair, t = pi/4:
    // U = cos t * I + i sin t * X.
    let t = std::f64::consts::FRAC_PI_4;
    let (ct, st) = (t.cos(), t.sin());
    let u = [
        [C64::new(ct, 0.0), C64::new(0.0, st)],
        [C64::new(0.0, st), C64::new(ct, 0.0)],
    ];
    let idx = [e, r];
    let mut block = [[C64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            block[a][b] = state.c[[idx[a], idx[b]]];
        }
    }
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..2 {
                for q in 0..2 {
                    acc += u[a][p] * block[p][q] * u[b][q].conj();
                }
            }
            out[a][b] = acc;
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            state.c[[idx[a], idx[b]]] = out[a][b];
        }
    }
    // Off-pair coherences would also rotate, but the encoding is only legal
    // on a pair that is decoupled and product with the rest.
    Ok(())
}

/// AA chain (quadratic part): H = J sum (c^dag_{j+1} c_j + h.c.) + sum V_j n_j
/// with V_j = 2 w cos(2 pi alpha j + theta), sites j = 1..L. Ancilla modes
/// (beyond L) are left decoupled.
pub fn build_aa(params: &ModelParams, l: usize, n_ancilla: usize) -> Result<SingleParticleHamiltonian, GaussianError> {
    let n = l + n_ancilla;
    let mut h = Array2::<f64>::zeros((n, n));
    for i in 0..l - 1 {
        h[[i, i + 1]] = params.j;
        h[[i + 1, i]] = params.j;
    }
    if params.periodic && l > 2 {
        h[[0, l - 1]] = params.j;
        h[[l - 1, 0]] = params.j;
    }
    for i in 0..l {
        let j_site = (i + 1) as f64;
        h[[i, i]] = 2.0 * params.w * (2.0 * std::f64::consts::PI * params.alpha * j_site + params.theta).cos();
    }
    SingleParticleHamiltonian::new(h)
}

/// SSH chain: H = -sum_j (1 - (-1)^j Delta) c^dag_j c_{j+1} + h.c.,
/// bonds j = 1..L-1 (open) or 1..L (periodic). Delta < 0 puts the weak bond
/// at the edge, hosting edge modes under OBC.
pub fn build_ssh(params: &ModelParams, l: usize, n_ancilla: usize) -> Result<SingleParticleHamiltonian, GaussianError> {
    let n = l + n_ancilla;
    let mut h = Array2::<f64>::zeros((n, n));
    let n_bonds = if params.periodic { l } else { l - 1 };
    for b in 0..n_bonds {
        let j_bond = (b + 1) as f64;
        let amp = -(1.0 - (-1.0f64).powf(j_bond) * params.delta);
        let (i, k) = (b, (b + 1) % l);
        h[[i, k]] += amp;
        h[[k, i]] += amp;
    }
    SingleParticleHamiltonian::new(h)
}

/// Exact quench evolution: C(t) = M C M^dag with M = exp(+i h t).
/// The sign convention is pinned by the two-site dense oracle test below.
pub fn evolve(state: &CorrelationMatrix, h: &SingleParticleHamiltonian, t: f64) -> Result<CorrelationMatrix, GaussianError> {
    if state.n_modes() != h.n_modes() {
        return Err(GaussianError::ShapeMismatch(state.n_modes(), h.n_modes()));
    }
    let m = h.propagator(t);
    let c = m.dot(&state.c).dot(&m.t().mapv(|v| v.conj()));
    Ok(CorrelationMatrix { c })
}

/// Binary (base-2) entropy of one fermionic mode occupation.
fn binary_entropy(nu: f64) -> f64 {
    let nu = nu.clamp(EIGENVALUE_CLAMP, 1.0 - EIGENVALUE_CLAMP);
    -nu * nu.log2() - (1.0 - nu) * (1.0 - nu).log2()
}

/// Von Neumann entropy (bits) of a mode subset, from the eigenvalues of the
/// region-restricted block of C.
pub fn entropy(state: &CorrelationMatrix, region: &[usize]) -> Result<f64, GaussianError> {
    let n = state.n_modes();
    if region.is_empty() {
        return Ok(0.0);
    }
    for &q in region {
        if q >= n {
            return Err(GaussianError::IndexOutOfRange(q, n));
        }
    }
    let m = region.len();
    let mut block = Array2::<C64>::zeros((m, m));
    for (a, &i) in region.iter().enumerate() {
        for (b, &j) in region.iter().enumerate() {
            block[[a, b]] = state.c[[i, j]];
        }
    }
    let (nu, _) = block
        .eigh(UPLO::Lower)
        .map_err(|e| GaussianError::Lapack(e.to_string()))?;
    Ok(nu.iter().map(|&v| binary_entropy(v)).sum())
}

/// I(A:R) = S_A + S_R - S_{AR} in bits; regions must be disjoint.
pub fn mutual_information(state: &CorrelationMatrix, a: &[usize], r: &[usize]) -> Result<f64, GaussianError> {
    let mut ar = a.to_vec();
    ar.extend_from_slice(r);
    let mut sorted = ar.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), ar.len(), "regions A and R must be disjoint");
    Ok(entropy(state, a)? + entropy(state, r)? - entropy(state, &ar)?)
}

/// Submatrix view helper used in tests and the SSH edge analysis.
pub fn system_block(h: &SingleParticleHamiltonian, l: usize) -> Array2<f64> {
    h.matrix().slice(s![..l, ..l]).to_owned()
}
