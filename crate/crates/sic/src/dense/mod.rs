//! Exact diagonalization in a fixed particle-number sector for the
//! interacting AA chain, plus brute-force oracles: OTOC identity, Holevo
//! information, Wick-violation and level-spacing diagnostics.
//!
//! Sector dimensions stay small enough (<= C(15, 8)) that one full spectral
//! decomposition per disorder realization is cheap and makes every
//! observation time exact.

pub mod qubit;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

pub use crate::gaussian::ALPHA_GOLDEN;

const ENTROPY_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("site count {0} exceeds the dense-backend limit of {1}")]
    TooManySites(usize, usize),
    #[error("site index {0} out of range for {1} sites")]
    IndexOutOfRange(usize, usize),
    #[error("system size must be even, got {0}")]
    OddSystemSize(usize),
    #[error("states live in incompatible bases ({0} vs {1} sites)")]
    BasisMismatch(usize, usize),
    #[error("linear algebra backend failure: {0}")]
    Lapack(String),
}

/// Occupation basis of a fixed particle-number sector, Jordan-Wigner ordered
/// (site 0 first, ancilla last).
#[derive(Debug)]
pub struct SectorBasis {
    pub n_sites: usize,
    pub n_particles: usize,
    pub masks: Vec<u32>,
    index: HashMap<u32, usize>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_particles: usize) -> Arc<Self> {
        assert!(n_sites <= 24 && n_particles <= n_sites);
        let mut masks = Vec::new();
        for m in 0u32..1 << n_sites {
            if m.count_ones() as usize == n_particles {
                masks.push(m);
            }
        }
        let index = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        Arc::new(Self { n_sites, n_particles, masks, index })
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    pub fn position(&self, mask: u32) -> Option<usize> {
        self.index.get(&mask).copied()
    }
}

/// Matrix element of c^dag_k c_i on mask `m` (JW sign included).
/// Returns (target mask, sign) or None if the hop annihilates the state.
fn hop_element(m: u32, i: usize, k: usize) -> Option<(u32, f64)> {
    if m >> i & 1 == 0 || (i != k && m >> k & 1 == 1) {
        return None;
    }
    // c_i: sign from occupied sites below i.
    let s1 = (m & ((1 << i) - 1)).count_ones();
    let m1 = m & !(1 << i);
    // c^dag_k on the intermediate state.
    let s2 = (m1 & ((1 << k) - 1)).count_ones();
    let m2 = m1 | (1 << k);
    Some((m2, if (s1 + s2) % 2 == 0 { 1.0 } else { -1.0 }))
}

/// Dense Hermitian Hamiltonian within a sector, with cached eigensystem.
pub struct SectorHamiltonian {
    pub basis: Arc<SectorBasis>,
    pub h: Array2<f64>,
    pub evals: Array1<f64>,
    pub evecs: Array2<f64>,
}

impl SectorHamiltonian {
    pub fn from_matrix(basis: Arc<SectorBasis>, h: Array2<f64>) -> Result<Self, DenseError> {
        let (evals, evecs) = symmetric_eigh(&h)?;
        let evals = Array1::from_vec(evals);
        Ok(Self { basis, h, evals, evecs })
    }
}

/// Parameters for the interacting AA chain (Eq. of the quadratic AA chain
/// plus U sum n_j n_{j+1}).
#[derive(Clone, Debug)]
pub struct InteractingAaParams {
    pub j: f64,
    pub u: f64,
    pub w: f64,
    pub theta: f64,
    pub alpha: f64,
    pub periodic: bool,
}

impl Default for InteractingAaParams {
    fn default() -> Self {
        Self { j: 1.0, u: 0.0, w: 0.0, theta: 0.0, alpha: ALPHA_GOLDEN, periodic: true }
    }
}

/// Build the interacting AA Hamiltonian on L sites (+ optional decoupled
/// ancilla as site L) in the given particle-number sector.
pub fn build_interacting_aa(
    l: usize,
    params: &InteractingAaParams,
    with_ancilla: bool,
    n_particles: usize,
) -> Result<SectorHamiltonian, DenseError> {
    let (basis, h) = build_aa_matrix_impl(l, params, with_ancilla, n_particles)?;
    SectorHamiltonian::from_matrix(basis, h)
}

fn build_aa_matrix_impl(
    l: usize,
    params: &InteractingAaParams,
    with_ancilla: bool,
    n_particles: usize,
) -> Result<(Arc<SectorBasis>, Array2<f64>), DenseError> {
    if l > 16 {
        return Err(DenseError::TooManySites(l, 16));
    }
    let n_sites = l + with_ancilla as usize;
    let basis = SectorBasis::new(n_sites, n_particles);
    let dim = basis.dim();
    let mut h = Array2::<f64>::zeros((dim, dim));

    let mut bonds: Vec<(usize, usize)> = (0..l - 1).map(|i| (i, i + 1)).collect();
    if params.periodic && l > 2 {
        bonds.push((l - 1, 0));
    }
    for (row, &m) in basis.masks.iter().enumerate() {
        // Diagonal: quasiperiodic potential + nearest-neighbor interaction.
        let mut diag = 0.0;
        for i in 0..l {
            if m >> i & 1 == 1 {
                let j_site = (i + 1) as f64;
                diag += 2.0
                    * params.w
                    * (2.0 * std::f64::consts::PI * params.alpha * j_site + params.theta).cos();
            }
        }
        for &(i, k) in &bonds {
            if m >> i & 1 == 1 && m >> k & 1 == 1 {
                diag += params.u;
            }
        }
        h[[row, row]] = diag;
        // Hopping J (c^dag_{j+1} c_j + h.c.).
        for &(i, k) in &bonds {
            for &(from, to) in &[(i, k), (k, i)] {
                if let Some((m2, sign)) = hop_element(m, from, to) {
                    let col = basis.position(m2).expect("hop stays in sector");
                    h[[col, row]] += params.j * sign;
                }
            }
        }
    }
    Ok((basis, h))
}

/// Sector state: complex amplitudes over the occupation basis.
#[derive(Clone)]
pub struct SectorState {
    pub basis: Arc<SectorBasis>,
    pub amps: Array1<C64>,
}

impl SectorState {
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn energy(&self, h: &SectorHamiltonian) -> f64 {
        let hv = h.h.mapv(|x| C64::new(x, 0.0)).dot(&self.amps);
        self.amps
            .iter()
            .zip(hv.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    pub fn density(&self, site: usize) -> f64 {
        self.basis
            .masks
            .iter()
            .zip(self.amps.iter())
            .filter(|(m, _)| *m >> site & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Neel pattern |0101...> on L sites with the (E, ancilla) pair Bell-encoded:
/// the pair evolves under a two-mode hop for t = pi/4, producing
/// (|01> - i|10>)/sqrt 2 on (E, R) consistent with the Neel occupancy at E.
pub fn neel_bell_state(l: usize, e: usize) -> Result<SectorState, DenseError> {
    if l % 2 != 0 {
        return Err(DenseError::OddSystemSize(l));
    }
    if e >= l {
        return Err(DenseError::IndexOutOfRange(e, l));
    }
    let n_sites = l + 1;
    let ancilla = l;
    let mut mask: u32 = 0;
    for i in (1..l).step_by(2) {
        mask |= 1 << i;
    }
    let e_occupied = mask >> e & 1 == 1;
    if !e_occupied {
        mask |= 1 << ancilla; // keep the pair half-filled
    }
    let n_particles = mask.count_ones() as usize;
    let basis = SectorBasis::new(n_sites, n_particles);
    let mut amps = Array1::<C64>::zeros(basis.dim());

    let pos0 = basis.position(mask).expect("Neel mask in sector");
    let t = std::f64::consts::FRAC_PI_4;
    // Pair rotation: exp(-i t (c^dag_e c_R + h.c.)) on the two-mode block.
    let (from, to) = if e_occupied { (e, ancilla) } else { (ancilla, e) };
    let (mask_swapped, sign) = hop_element(mask, from, to).expect("pair hop valid");
    let pos1 = basis.position(mask_swapped).expect("swapped mask in sector");
    amps[pos0] = C64::new(t.cos(), 0.0);
    amps[pos1] = C64::new(0.0, -t.sin()) * sign;
    Ok(SectorState { basis, amps })
}

/// Exact evolution |psi(t)> = V e^{-i eps t} V^T |psi>.
pub fn evolve(state: &SectorState, h: &SectorHamiltonian, t: f64) -> SectorState {
    assert_eq!(state.basis.dim(), h.basis.dim());
    let v = &h.evecs;
    let vc = v.mapv(|x| C64::new(x, 0.0));
    let mut coeff = vc.t().dot(&state.amps);
    for (k, &e) in h.evals.iter().enumerate() {
        coeff[k] *= C64::from_polar(1.0, -e * t);
    }
    SectorState { basis: state.basis.clone(), amps: vc.dot(&coeff) }
}

/// Jordan-Wigner reordering sign for pulling the region modes to the front:
/// parity of (rest-occupied, region-occupied) inversions.
fn reorder_sign(mask: u32, region_mask: u32) -> f64 {
    let mut swaps = 0u32;
    let mut rest_occ_below = 0u32;
    for i in 0..32 {
        let bit = 1u32 << i;
        if mask & bit != 0 {
            if region_mask & bit != 0 {
                swaps += rest_occ_below;
            } else {
                rest_occ_below += 1;
            }
        }
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Reduced density matrix on an arbitrary mode subset (2^|region| space),
/// with fermionic reordering signs.
pub fn rdm(state: &SectorState, region: &[usize]) -> Array2<C64> {
    rdm_from_components(
        state
            .basis
            .masks
            .iter()
            .zip(state.amps.iter())
            .map(|(&m, &a)| (m, a)),
        region,
    )
}

/// Same as [`rdm`] but over raw (occupation mask, amplitude) components, so
/// superpositions across particle-number sectors can be handled too.
pub fn rdm_from_components(
    components: impl Iterator<Item = (u32, C64)>,
    region: &[usize],
) -> Array2<C64> {
    let m = region.len();
    let dim_a = 1usize << m;
    let mut region_mask = 0u32;
    for &q in region {
        region_mask |= 1 << q;
    }
    let mut groups: HashMap<u32, Vec<(usize, C64)>> = HashMap::new();
    for (mask, amp) in components {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut ra = 0usize;
        for (j, &q) in region.iter().enumerate() {
            if mask >> q & 1 == 1 {
                ra |= 1 << j;
            }
        }
        let rest = mask & !region_mask;
        let signed = amp * reorder_sign(mask, region_mask);
        groups.entry(rest).or_default().push((ra, signed));
    }
    let mut rho = Array2::<C64>::zeros((dim_a, dim_a));
    for entries in groups.values() {
        for &(a, va) in entries {
            for &(b, vb) in entries {
                rho[[a, b]] += va * vb.conj();
            }
        }
    }
    rho
}

/// Von Neumann entropy (bits) of a density matrix.
pub fn spectrum_entropy_bits(rho: &Array2<C64>) -> Result<f64, DenseError> {
    let (evals, _) = rho
        .eigh(UPLO::Lower)
        .map_err(|e| DenseError::Lapack(e.to_string()))?;
    Ok(evals
        .iter()
        .map(|&p| {
            let p = p.clamp(ENTROPY_CLAMP, 1.0);
            -p * p.log2()
        })
        .sum())
}

/// Von Neumann entropy (bits) of a mode subset. Uses the complement for
/// large regions (pure-state symmetry) to keep the RDM small.
pub fn rdm_entropy(state: &SectorState, region: &[usize]) -> Result<f64, DenseError> {
    let n = state.basis.n_sites;
    for &q in region {
        if q >= n {
            return Err(DenseError::IndexOutOfRange(q, n));
        }
    }
    let use_region: Vec<usize> = if region.len() * 2 > n {
        (0..n).filter(|q| !region.contains(q)).collect()
    } else {
        region.to_vec()
    };
    spectrum_entropy_bits(&rdm(state, &use_region))
}

/// I(A:R) in bits for disjoint mode subsets.
pub fn mutual_information(state: &SectorState, a: &[usize], r: &[usize]) -> Result<f64, DenseError> {
    let mut ar = a.to_vec();
    ar.extend_from_slice(r);
    Ok(rdm_entropy(state, a)? + rdm_entropy(state, r)? - rdm_entropy(state, &ar)?)
}

/// Holevo information chi_A for the two-state ensemble {psi1, psi2} evolved
/// for time t: S((rho1 + rho2)/2) - (S(rho1) + S(rho2))/2. The two states may
/// live in different particle-number sectors; the RDMs meet in the common
/// occupation space of the region.
pub fn holevo(
    h1: &SectorHamiltonian,
    psi1: &SectorState,
    h2: &SectorHamiltonian,
    psi2: &SectorState,
    region: &[usize],
    t: f64,
) -> Result<f64, DenseError> {
    if psi1.basis.n_sites != psi2.basis.n_sites {
        return Err(DenseError::BasisMismatch(psi1.basis.n_sites, psi2.basis.n_sites));
    }
    let r1 = rdm(&evolve(psi1, h1, t), region);
    let r2 = rdm(&evolve(psi2, h2, t), region);
    let mixed = (&r1 + &r2) * C64::new(0.5, 0.0);
    Ok(spectrum_entropy_bits(&mixed)? - 0.5 * (spectrum_entropy_bits(&r1)? + spectrum_entropy_bits(&r2)?))
}

extern "C" {
    // LAPACK divide-and-conquer symmetric eigensolver; much faster than the
    // default QR driver when only eigenvalues are needed at dim ~ 3000.
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

/// Eigenvalues (ascending) of a real symmetric matrix, values-only driver.
pub fn symmetric_eigenvalues(h: &Array2<f64>) -> Result<Vec<f64>, DenseError> {
    Ok(dsyevd(h, false)?.0)
}

/// Full eigendecomposition (ascending) via the divide-and-conquer driver.
pub fn symmetric_eigh(h: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), DenseError> {
    let (w, v) = dsyevd(h, true)?;
    Ok((w, v.expect("vectors requested")))
}

fn dsyevd(h: &Array2<f64>, vectors: bool) -> Result<(Vec<f64>, Option<Array2<f64>>), DenseError> {
    let n = h.nrows() as i32;
    assert_eq!(h.nrows(), h.ncols());
    // Column-major copy; symmetric, so the raw layout works either way.
    let mut a: Vec<f64> = h.iter().copied().collect();
    let mut w = vec![0.0f64; n as usize];
    let (jobz, uplo) = (if vectors { b'V' } else { b'N' }, b'L');
    let mut info: i32 = 0;
    let (mut lwork_q, mut liwork_q) = (-1i32, -1i32);
    let (mut work_q, mut iwork_q) = (vec![0.0f64; 1], vec![0i32; 1]);
    unsafe {
        dsyevd_(&jobz, &uplo, &n, a.as_mut_ptr(), &n, w.as_mut_ptr(), work_q.as_mut_ptr(), &lwork_q, iwork_q.as_mut_ptr(), &liwork_q, &mut info);
    }
    if info != 0 {
        return Err(DenseError::Lapack(format!("dsyevd workspace query failed: info = {info}")));
    }
    lwork_q = work_q[0] as i32;
    liwork_q = iwork_q[0];
    let mut work = vec![0.0f64; lwork_q as usize];
    let mut iwork = vec![0i32; liwork_q as usize];
    unsafe {
        dsyevd_(&jobz, &uplo, &n, a.as_mut_ptr(), &n, w.as_mut_ptr(), work.as_mut_ptr(), &lwork_q, iwork.as_mut_ptr(), &liwork_q, &mut info);
    }
    if info != 0 {
        return Err(DenseError::Lapack(format!("dsyevd failed: info = {info}")));
    }
    let v = if vectors {
        // On exit the columns of `a` (column-major) are the eigenvectors.
        let vt = Array2::from_shape_vec((n as usize, n as usize), a).expect("square");
        Some(vt.reversed_axes())
    } else {
        None
    };
    Ok((w, v))
}

/// Hamiltonian matrix only (no eigendecomposition); for spectral statistics
/// where the cached eigensystem of `SectorHamiltonian` is wasted work.
pub fn build_interacting_aa_matrix(
    l: usize,
    params: &InteractingAaParams,
    with_ancilla: bool,
    n_particles: usize,
) -> Result<(Arc<SectorBasis>, Array2<f64>), DenseError> {
    build_aa_matrix_impl(l, params, with_ancilla, n_particles)
}

/// Mean adjacent-gap ratio statistics.
#[derive(Debug, Clone, Copy)]
pub struct LevelSpacingRatio {
    pub mean: f64,
    /// Number of gap pairs with a zero denominator, counted as ratio 0.
    pub degenerate_terms: usize,
}

/// <r> = mean of min(d_i, d_{i+1}) / max(d_i, d_{i+1}) over sorted gaps,
/// restricted to the central `window` fraction of the spectrum.
pub fn level_spacing_ratio(evals: &[f64], window: f64) -> LevelSpacingRatio {
    let mut e = evals.to_vec();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = e.len();
    let keep = ((d as f64) * window).round() as usize;
    let lo = (d - keep) / 2;
    let e = &e[lo..lo + keep];
    let gaps: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
    let mut sum = 0.0;
    let mut degenerate = 0usize;
    let mut count = 0usize;
    for w in gaps.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mn, mx) = (a.min(b), a.max(b));
        if mn == 0.0 {
            degenerate += 1; // ratio 0 contribution, flagged
        } else {
            sum += mn / mx;
        }
        count += 1;
    }
    LevelSpacingRatio { mean: sum / count as f64, degenerate_terms: degenerate }
}

/// Wick-violation check on the fermionic GHZ state
/// (|0101...> + |1010...>)/sqrt 2: expectation of O = c^dag_0 c_1 c^dag_2 c_3
/// ... evaluated exactly and via two-point Wick contractions.
pub fn wick_violation_check(l: usize) -> Result<(f64, f64), DenseError> {
    wick_check_on(l, true)
}

/// Same operator evaluated on the (Gaussian) Neel state: both answers vanish.
pub fn wick_check_neel(l: usize) -> Result<(f64, f64), DenseError> {
    wick_check_on(l, false)
}

fn wick_check_on(l: usize, ghz: bool) -> Result<(f64, f64), DenseError> {
    if l % 2 != 0 {
        return Err(DenseError::OddSystemSize(l));
    }
    if l > 12 {
        return Err(DenseError::TooManySites(l, 12));
    }
    let dim = 1usize << l;
    let mut mask_a: u32 = 0; // |0101...>: odd sites occupied
    for i in (1..l).step_by(2) {
        mask_a |= 1 << i;
    }
    let mask_b = mask_a ^ ((1 << l) - 1);
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    if ghz {
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[mask_a as usize] = amp;
        psi[mask_b as usize] = amp;
    } else {
        psi[mask_a as usize] = C64::new(1.0, 0.0);
    }

    // O = c^dag_0 c_1 c^dag_2 c_3 ... applied right-to-left in Fock space.
    let mut out = psi.clone();
    let mut ops: Vec<(usize, bool)> = Vec::new(); // (site, is_creation)
    for p in (0..l / 2).rev() {
        // rightmost factor pair first: ... c^dag_{2p} c_{2p+1}
        ops.push((2 * p + 1, false));
        ops.push((2 * p, true));
    }
    // Reorder: the full product left to right is (c^dag_0, c_1, c^dag_2, ...);
    // apply from the rightmost factor.
    ops.clear();
    for p in 0..l / 2 {
        ops.push((2 * p, true));
        ops.push((2 * p + 1, false));
    }
    for &(site, create) in ops.iter().rev() {
        let mut next = vec![C64::new(0.0, 0.0); dim];
        for (m, &a) in out.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let occ = m >> site & 1 == 1;
            if create == occ {
                continue; // annihilated
            }
            let sign = if (m as u32 & ((1u32 << site) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let m2 = m ^ (1 << site);
            next[m2] += a * sign;
        }
        out = next;
    }
    let exact: C64 = psi.iter().zip(out.iter()).map(|(a, b)| a.conj() * b).sum();

    // Two-point functions for the Wick expansion.
    let mut c2 = Array2::<C64>::zeros((l, l));
    for i in 0..l {
        for j in 0..l {
            // <c^dag_i c_j>
            let mut acc = C64::new(0.0, 0.0);
            for (m, &a) in psi.iter().enumerate() {
                if a.norm_sqr() == 0.0 || m >> j & 1 == 0 {
                    continue;
                }
                if let Some((m2, sign)) = hop_element(m as u32, j, i) {
                    acc += psi[m2 as usize].conj() * a * sign;
                }
            }
            c2[[i, j]] = acc;
        }
    }
    // Wick: <prod_k c^dag_{a_k} c_{b_k}> = det G, G_{kl} = <c^dag_{a_k} c_{b_l}>
    // (k <= l) or -(delta - <c^dag c>) = C - delta (k > l); indices here are
    // all distinct so the delta never enters.
    let pairs: Vec<(usize, usize)> = (0..l / 2).map(|p| (2 * p, 2 * p + 1)).collect();
    let k = pairs.len();
    let mut g = Array2::<C64>::zeros((k, k));
    for (r, &(a, _)) in pairs.iter().enumerate() {
        for (c, &(_, b)) in pairs.iter().enumerate() {
            g[[r, c]] = c2[[a, b]];
        }
    }
    let wick = det_complex(&g);
    Ok((exact.re, wick.re))
}

fn det_complex(m: &Array2<C64>) -> C64 {
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut p = col;
        for r in col..n {
            if a[[r, col]].norm() > a[[p, col]].norm() {
                p = r;
            }
        }
        if a[[p, col]].norm() < 1e-300 {
            return C64::new(0.0, 0.0);
        }
        if p != col {
            for c in 0..n {
                let tmp = a[[p, c]];
                a[[p, c]] = a[[col, c]];
                a[[col, c]] = tmp;
            }
            det = -det;
        }
        det *= a[[col, col]];
        for r in col + 1..n {
            let f = a[[r, col]] / a[[col, col]];
            for c in col..n {
                let v = a[[col, c]];
                a[[r, c]] -= f * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_size_and_order() {
        let b = SectorBasis::new(6, 3);
        assert_eq!(b.dim(), 20);
        assert!(b.masks.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_site_single_particle_spectrum() {
        // L=2, J=1, U=0, w=0, N=1 -> eigenvalues {-1, +1} (bond counted once).
        let p = InteractingAaParams { periodic: true, ..Default::default() };
        let h = build_interacting_aa(2, &p, false, 1).unwrap();
        assert_abs_diff_eq!(h.evals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.evals[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn free_spectrum_is_sum_of_single_particle_levels() {
        // U=0: many-body spectrum = sums of single-particle AA eigenvalues
        // over n-particle subsets (L=6, N=3).
        let p = InteractingAaParams { w: 0.7, theta: 0.4, ..Default::default() };
        let h = build_interacting_aa(6, &p, false, 3).unwrap();
        let gp = crate::gaussian::ModelParams { j: p.j, w: p.w, theta: p.theta, alpha: p.alpha, delta: 0.0, periodic: true };
        let h1 = crate::gaussian::build_aa(&gp, 6, 0).unwrap();
        let sp = h1.eigenvalues();
        let mut sums = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                for c in b + 1..6 {
                    sums.push(sp[a] + sp[b] + sp[c]);
                }
            }
        }
        sums.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (got, want) in h.evals.iter().zip(sums) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn diagonal_hamiltonian_keeps_neel() {
        let p = InteractingAaParams { j: 0.0, u: 0.3, w: 1.0, ..Default::default() };
        let h = build_interacting_aa(6, &p, false, 3).unwrap();
        for r in 0..h.basis.dim() {
            for c in 0..h.basis.dim() {
                if r != c {
                    assert_eq!(h.h[[r, c]], 0.0);
                }
            }
        }
    }

    #[test]
    fn neel_bell_state_properties() {
        for l in [2usize, 6] {
            for e in 0..l {
                let s = neel_bell_state(l, e).unwrap();
                assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
                let nonzero = s.amps.iter().filter(|a| a.norm() > 1e-12).count();
                assert_eq!(nonzero, 2);
                assert_abs_diff_eq!(rdm_entropy(&s, &[e]).unwrap(), 1.0, epsilon = 1e-9);
                assert_abs_diff_eq!(rdm_entropy(&s, &[l]).unwrap(), 1.0, epsilon = 1e-9);
                // Total density equals the particle number.
                let total: f64 = (0..=l).map(|q| s.density(q)).sum();
                assert_abs_diff_eq!(total, s.basis.n_particles as f64, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn evolve_conserves_norm_and_energy() {
        let p = InteractingAaParams { u: 0.2, w: 0.5, theta: 1.0, ..Default::default() };
        let s0 = neel_bell_state(6, 3).unwrap();
        let h = build_interacting_aa(6, &p, true, s0.basis.n_particles).unwrap();
        let e0 = s0.energy(&h);
        for &t in &[0.0, 0.7, 13.0, 400.0] {
            let st = evolve(&s0, &h, t);
            assert_abs_diff_eq!(st.norm(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(st.energy(&h), e0, epsilon = 1e-8);
        }
        // t = 0 is the identity.
        let st = evolve(&s0, &h, 0.0);
        for (a, b) in s0.amps.iter().zip(st.amps.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mi_conservation_under_unitary_evolution() {
        let p = InteractingAaParams { u: 0.2, w: 0.3, theta: 0.8, ..Default::default() };
        let s0 = neel_bell_state(8, 4).unwrap();
        let h = build_interacting_aa(8, &p, true, s0.basis.n_particles).unwrap();
        for &t in &[0.0, 2.5, 20.0] {
            let st = evolve(&s0, &h, t);
            for la in 1..8usize {
                let a: Vec<usize> = (0..la).collect();
                let abar: Vec<usize> = (la..8).collect();
                let tot = mutual_information(&st, &a, &[8]).unwrap()
                    + mutual_information(&st, &abar, &[8]).unwrap();
                assert_abs_diff_eq!(tot, 2.0, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn matches_gaussian_backend_at_u_zero() {
        // Dense MI(t) equals the correlation-matrix MI(t) for L <= 6 at U=0,
        // and the full two-point function matches.
        let l = 4;
        let e = 1; // occupied Neel site
        let p = InteractingAaParams { u: 0.0, w: 0.5, theta: 0.9, ..Default::default() };
        let s0 = neel_bell_state(l, e).unwrap();
        let h = build_interacting_aa(l, &p, true, s0.basis.n_particles).unwrap();

        let gp = crate::gaussian::ModelParams { j: p.j, w: p.w, theta: p.theta, alpha: p.alpha, delta: 0.0, periodic: true };
        let gh = crate::gaussian::build_aa(&gp, l, 1).unwrap();
        let mut gc = crate::gaussian::neel_state(l, 1).unwrap();
        crate::gaussian::bell_encode(&mut gc, e, l).unwrap();

        for &t in &[0.0, 0.8, 1.3, 5.0] {
            let st = evolve(&s0, &h, t);
            let ct = crate::gaussian::evolve(&gc, &gh, t).unwrap();
            // Two-point functions agree (pins the evolution convention).
            for i in 0..=l {
                for j in 0..=l {
                    let mut acc = C64::new(0.0, 0.0);
                    for (row, &m) in st.basis.masks.iter().enumerate() {
                        if m >> j & 1 == 0 {
                            continue;
                        }
                        if let Some((m2, sign)) = hop_element(m, j, i) {
                            let col = st.basis.position(m2).unwrap();
                            acc += st.amps[col].conj() * st.amps[row] * sign;
                        }
                    }
                    assert!((acc - ct.c[[i, j]]).norm() < 1e-8, "C[{i}{j}] t={t}: {acc} vs {}", ct.c[[i, j]]);
                }
            }
            for la in 1..=l {
                let a: Vec<usize> = (0..la).collect();
                let dm = mutual_information(&st, &a, &[l]).unwrap();
                let gm = crate::gaussian::mutual_information(&ct, &a, &[l]).unwrap();
                assert_abs_diff_eq!(dm, gm, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn early_interacting_dynamics_matches_free() {
        // Neel start: interactions are inert at early times.
        let l = 8;
        let e = 3;
        let free = InteractingAaParams { u: 0.0, w: 0.3, theta: 0.2, ..Default::default() };
        let int = InteractingAaParams { u: 0.2, ..free.clone() };
        let s0 = neel_bell_state(l, e).unwrap();
        let hf = build_interacting_aa(l, &free, true, s0.basis.n_particles).unwrap();
        let hi = build_interacting_aa(l, &int, true, s0.basis.n_particles).unwrap();
        let a: Vec<usize> = (2..6).collect();
        for &t in &[0.25, 0.5, 1.0] {
            let mf = mutual_information(&evolve(&s0, &hf, t), &a, &[l]).unwrap();
            let mi = mutual_information(&evolve(&s0, &hi, t), &a, &[l]).unwrap();
            assert!((mf - mi).abs() < 1e-2, "t={t}: {mf} vs {mi}");
        }
    }

    #[test]
    fn holevo_orthogonal_states_at_t_zero() {
        // One-to-one pair psi2 = X_E psi1 (occupation flip at E): region
        // containing E distinguishes them perfectly at t = 0.
        let l = 4;
        let e = 1;
        let base = InteractingAaParams::default();
        // psi1: Neel (no ancilla needed; bare system states).
        let b1 = SectorBasis::new(l, 2);
        let mut a1 = Array1::<C64>::zeros(b1.dim());
        let neel: u32 = 0b1010;
        a1[b1.position(neel).unwrap()] = C64::new(1.0, 0.0);
        let psi1 = SectorState { basis: b1.clone(), amps: a1 };
        // psi2: flip occupation at E (particle number drops by one).
        let b2 = SectorBasis::new(l, 1);
        let mut a2 = Array1::<C64>::zeros(b2.dim());
        a2[b2.position(neel ^ (1 << e)).unwrap()] = C64::new(1.0, 0.0);
        let psi2 = SectorState { basis: b2.clone(), amps: a2 };
        let h1 = build_interacting_aa(l, &base, false, 2).unwrap();
        let h2 = build_interacting_aa(l, &base, false, 1).unwrap();
        let chi = holevo(&h1, &psi1, &h2, &psi2, &[0, 1], 0.0).unwrap();
        assert_abs_diff_eq!(chi, 1.0, epsilon = 1e-9);
        // Range [0, 1] at later times.
        for &t in &[0.5, 2.0, 8.0] {
            let chi = holevo(&h1, &psi1, &h2, &psi2, &[0, 1], t).unwrap();
            assert!((-1e-9..=1.0 + 1e-9).contains(&chi), "chi = {chi}");
        }
    }

    #[test]
    fn level_spacing_limits() {
        // Equally spaced spectrum -> r = 1.
        let evals: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = level_spacing_ratio(&evals, 1.0);
        assert_abs_diff_eq!(r.mean, 1.0, epsilon = 1e-12);
        assert_eq!(r.degenerate_terms, 0);
        // Poisson (i.i.d. uniform) -> <r> ~ 2 ln 2 - 1.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut acc = 0.0;
        let reps = 300;
        for _ in 0..reps {
            let evals: Vec<f64> = (0..600).map(|_| rng.gen::<f64>()).collect();
            acc += level_spacing_ratio(&evals, 1.0).mean;
        }
        let poisson = 2.0 * (2.0f64).ln() - 1.0;
        assert!((acc / reps as f64 - poisson).abs() < 5e-3);
        // Degenerate spectrum flagged.
        let r = level_spacing_ratio(&[0.0, 1.0, 1.0, 2.0], 1.0);
        assert!(r.degenerate_terms > 0);
    }

    #[test]
    fn wick_violation_for_fermionic_ghz() {
        for l in [4usize, 6] {
            let (exact, wick) = wick_violation_check(l).unwrap();
            assert_abs_diff_eq!(exact, 0.5, epsilon = 1e-10);
            assert_abs_diff_eq!(wick, 0.0, epsilon = 1e-10);
            let (exact, wick) = wick_check_neel(l).unwrap();
            assert_abs_diff_eq!(exact, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(wick, 0.0, epsilon = 1e-10);
        }
    }
}
