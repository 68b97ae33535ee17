//! Brute-force qubit state vectors: an independent oracle for the stabilizer
//! backend (same gate set, forced measurement outcomes) and the OTOC-entropy
//! identity check.
//!
//! Indexing matches the tableau: basis index bit q is the Z eigenvalue of
//! qubit q, references sit after the system qubits.

use super::DenseError;
use crate::clifford2::CliffordGate2;
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use std::collections::HashMap;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone)]
pub struct QubitState {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl QubitState {
    pub fn zero_state(n: usize) -> Self {
        assert!(n <= 14);
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Self { n, amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply1(&mut self, q: usize, u: &[[C64; 2]; 2]) {
        let bit = 1usize << q;
        for m in 0..self.amps.len() {
            if m & bit != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[m], self.amps[m | bit]);
            self.amps[m] = u[0][0] * a0 + u[0][1] * a1;
            self.amps[m | bit] = u[1][0] * a0 + u[1][1] * a1;
        }
    }

    /// Apply a 4x4 unitary; the row/column index is (b_{q1} << 1) | b_{q2}.
    pub fn apply2(&mut self, q1: usize, q2: usize, u: &[[C64; 4]; 4]) {
        assert_ne!(q1, q2);
        let (b1, b2) = (1usize << q1, 1usize << q2);
        for m in 0..self.amps.len() {
            if m & b1 != 0 || m & b2 != 0 {
                continue;
            }
            let idx = [m, m | b2, m | b1, m | b1 | b2];
            let old: Vec<C64> = idx.iter().map(|&i| self.amps[i]).collect();
            for r in 0..4 {
                let mut acc = ZERO;
                for c in 0..4 {
                    acc += u[r][c] * old[c];
                }
                self.amps[idx[r]] = acc;
            }
        }
    }

    pub fn apply_gate(&mut self, gate: CliffordGate2, q1: usize, q2: usize) {
        self.apply2(q1, q2, &unitary4(gate));
    }

    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(m, _)| m & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Project qubit q onto `outcome` and renormalize; returns the outcome
    /// probability. Errors if the branch has zero weight.
    pub fn measure_forced(&mut self, q: usize, outcome: bool) -> Result<f64, DenseError> {
        let p1 = self.prob_one(q);
        let p = if outcome { p1 } else { 1.0 - p1 };
        if p < 1e-12 {
            return Err(DenseError::Lapack(format!(
                "forced outcome {outcome} on qubit {q} has probability {p:.3e}"
            )));
        }
        let bit = 1usize << q;
        let scale = C64::new(1.0 / p.sqrt(), 0.0);
        for (m, a) in self.amps.iter_mut().enumerate() {
            if (m & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
        Ok(p)
    }

    fn rdm(&self, region: &[usize]) -> Array2<C64> {
        let k = region.len();
        let mut region_mask = 0usize;
        for &q in region {
            region_mask |= 1 << q;
        }
        let mut groups: HashMap<usize, Vec<(usize, C64)>> = HashMap::new();
        for (m, &a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut ra = 0usize;
            for (j, &q) in region.iter().enumerate() {
                if m >> q & 1 == 1 {
                    ra |= 1 << j;
                }
            }
            groups.entry(m & !region_mask).or_default().push((ra, a));
        }
        let mut rho = Array2::<C64>::zeros((1 << k, 1 << k));
        for entries in groups.values() {
            for &(a, va) in entries {
                for &(b, vb) in entries {
                    rho[[a, b]] += va * vb.conj();
                }
            }
        }
        rho
    }

    /// Von Neumann entropy (bits); uses the smaller of region/complement.
    pub fn entropy(&self, region: &[usize]) -> Result<f64, DenseError> {
        let use_region: Vec<usize> = if region.len() * 2 > self.n {
            (0..self.n).filter(|q| !region.contains(q)).collect()
        } else {
            region.to_vec()
        };
        let rho = self.rdm(&use_region);
        let (evals, _) = rho
            .eigh(UPLO::Lower)
            .map_err(|e| DenseError::Lapack(e.to_string()))?;
        Ok(evals
            .iter()
            .map(|&p| {
                let p = p.clamp(1e-12, 1.0);
                -p * p.log2()
            })
            .sum())
    }

    pub fn renyi2(&self, region: &[usize]) -> f64 {
        let rho = self.rdm(region);
        let purity: f64 = rho.iter().map(|x| x.norm_sqr()).sum();
        -purity.log2()
    }

    pub fn mutual_information(&self, a: &[usize], r: &[usize]) -> Result<f64, DenseError> {
        let mut ar = a.to_vec();
        ar.extend_from_slice(r);
        Ok(self.entropy(a)? + self.entropy(r)? - self.entropy(&ar)?)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Primitive 4x4 unitaries in the (b1, b2) index convention, ordered as the
/// Clifford table generators: H1, S1, H2, S2, CX12, CX21.
fn primitive(idx: u8) -> [[C64; 4]; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = [[ZERO; 4]; 4];
    match idx {
        0 => {
            // H on qubit 1 (msb)
            for b2 in 0..2usize {
                m[b2][b2] = c(s, 0.0);
                m[b2][2 | b2] = c(s, 0.0);
                m[2 | b2][b2] = c(s, 0.0);
                m[2 | b2][2 | b2] = c(-s, 0.0);
            }
        }
        1 => {
            for i in 0..4usize {
                m[i][i] = if i & 2 != 0 { c(0.0, 1.0) } else { ONE };
            }
        }
        2 => {
            for b1 in 0..2usize {
                let base = b1 << 1;
                m[base][base] = c(s, 0.0);
                m[base][base | 1] = c(s, 0.0);
                m[base | 1][base] = c(s, 0.0);
                m[base | 1][base | 1] = c(-s, 0.0);
            }
        }
        3 => {
            for i in 0..4usize {
                m[i][i] = if i & 1 != 0 { c(0.0, 1.0) } else { ONE };
            }
        }
        4 => {
            // CNOT, control qubit 1: |b1 b2> -> |b1, b2 ^ b1>
            m[0][0] = ONE;
            m[1][1] = ONE;
            m[3][2] = ONE;
            m[2][3] = ONE;
        }
        5 => {
            // CNOT, control qubit 2
            m[0][0] = ONE;
            m[3][1] = ONE;
            m[2][2] = ONE;
            m[1][3] = ONE;
        }
        _ => unreachable!(),
    }
    m
}

fn mat4_mul(a: &[[C64; 4]; 4], b: &[[C64; 4]; 4]) -> [[C64; 4]; 4] {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for k in 0..4 {
            if a[r][k].norm_sqr() == 0.0 {
                continue;
            }
            for cidx in 0..4 {
                out[r][cidx] += a[r][k] * b[k][cidx];
            }
        }
    }
    out
}

/// 4x4 unitary of a table gate, reconstructed from its generator word.
pub fn unitary4(gate: CliffordGate2) -> [[C64; 4]; 4] {
    let mut u = [[ZERO; 4]; 4];
    for i in 0..4 {
        u[i][i] = ONE;
    }
    for &g in gate.word() {
        u = mat4_mul(&u, &primitive(g));
    }
    u
}

/// Dense matrix of a Hermitian Pauli string on `n` qubits; `codes[q]` in
/// {0: I, 1: X, 2: Z, 3: Y}.
pub fn pauli_matrix(n: usize, codes: &[u8]) -> Array2<C64> {
    assert_eq!(codes.len(), n);
    let mut xmask = 0usize;
    let dim = 1usize << n;
    for (q, &p) in codes.iter().enumerate() {
        if p == 1 || p == 3 {
            xmask |= 1 << q;
        }
    }
    let mut m = Array2::<C64>::zeros((dim, dim));
    for col in 0..dim {
        let mut w = ONE;
        for (q, &p) in codes.iter().enumerate() {
            let b = col >> q & 1;
            w *= match p {
                0 | 1 => ONE,
                2 => {
                    if b == 1 {
                        c(-1.0, 0.0)
                    } else {
                        ONE
                    }
                }
                3 => {
                    if b == 1 {
                        c(0.0, -1.0)
                    } else {
                        c(0.0, 1.0)
                    }
                }
                _ => unreachable!(),
            };
        }
        m[[col ^ xmask, col]] = w;
    }
    m
}

/// Dynamics for the OTOC identity check.
pub enum OtocDynamics {
    /// Brickwork-style list of (gate, q1, q2) on the system qubits.
    Clifford(Vec<(CliffordGate2, usize, usize)>),
    /// U = exp(-i t H), H = sum_j (X_j X_{j+1} + Y_j Y_{j+1}), open chain.
    XxChain { t: f64 },
}

fn system_unitary(l: usize, dynamics: &OtocDynamics) -> Result<Array2<C64>, DenseError> {
    let dim = 1usize << l;
    match dynamics {
        OtocDynamics::Clifford(gates) => {
            let mut u = Array2::<C64>::eye(dim);
            for &(g, q1, q2) in gates {
                let u4 = unitary4(g);
                for mut col in u.columns_mut() {
                    let mut st = QubitState { n: l, amps: col.to_vec() };
                    st.apply2(q1, q2, &u4);
                    for (dst, src) in col.iter_mut().zip(st.amps) {
                        *dst = src;
                    }
                }
            }
            Ok(u)
        }
        OtocDynamics::XxChain { t } => {
            let mut h = Array2::<C64>::zeros((dim, dim));
            for j in 0..l - 1 {
                for p in [1u8, 3] {
                    let mut codes = vec![0u8; l];
                    codes[j] = p;
                    codes[j + 1] = p;
                    h += &pauli_matrix(l, &codes);
                }
            }
            let (evals, evecs) = h
                .eigh(UPLO::Lower)
                .map_err(|e| DenseError::Lapack(e.to_string()))?;
            let mut u = Array2::<C64>::zeros((dim, dim));
            for k in 0..dim {
                let phase = C64::from_polar(1.0, -evals[k] * t);
                let vk = evecs.column(k);
                for r in 0..dim {
                    for cc in 0..dim {
                        u[[r, cc]] += vk[r] * phase * vk[cc].conj();
                    }
                }
            }
            Ok(u)
        }
    }
}

/// Both sides of the OTOC-entropy identity for a one-to-one encoding with
/// the reference Bell-paired to system site `e`, output region `a`:
/// lhs = 2^(-2|Abar| - 2|R|) sum_{P_i on E, P_j on Abar}
///       Tr[(P_j(t) (P_i tensor |0><0|_Ebar))^2],
/// rhs = 2^(|R| - |Abar| - S2(AR)).
pub fn otoc_identity_check(
    l: usize,
    e: usize,
    a: &[usize],
    dynamics: &OtocDynamics,
) -> Result<(f64, f64), DenseError> {
    if l > 6 {
        return Err(DenseError::TooManySites(l, 6));
    }
    if e >= l || a.iter().any(|&q| q >= l) {
        return Err(DenseError::IndexOutOfRange(l, l));
    }
    let dim = 1usize << l;
    let u = system_unitary(l, dynamics)?;
    let udag = {
        let mut m = Array2::<C64>::zeros((dim, dim));
        for r in 0..dim {
            for cc in 0..dim {
                m[[r, cc]] = u[[cc, r]].conj();
            }
        }
        m
    };

    // rhs: evolve the Bell-encoded state and take the Renyi-2 of A u R.
    let r_qubit = l;
    let mut psi = QubitState::zero_state(l + 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h1 = [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]];
    psi.apply1(e, &h1);
    // CNOT e -> R
    let (be, br) = (1usize << e, 1usize << r_qubit);
    let mut amps = vec![ZERO; psi.amps.len()];
    for (m, &v) in psi.amps.iter().enumerate() {
        let m2 = if m & be != 0 { m ^ br } else { m };
        amps[m2] = v;
    }
    psi.amps = amps;
    // Apply U on the system half of the index.
    let mut out = vec![ZERO; psi.amps.len()];
    for rbit in 0..2usize {
        for row in 0..dim {
            let mut acc = ZERO;
            for col in 0..dim {
                acc += u[[row, col]] * psi.amps[(rbit << l) | col];
            }
            out[(rbit << l) | row] = acc;
        }
    }
    psi.amps = out;
    let mut ar: Vec<usize> = a.to_vec();
    ar.push(r_qubit);
    let s2 = psi.renyi2(&ar);
    let abar: Vec<usize> = (0..l).filter(|q| !a.contains(q)).collect();
    let rhs = (1.0 - abar.len() as f64 - s2).exp2();

    // lhs: operator sum on the system Hilbert space.
    let ebar_mask: usize = (0..l).filter(|&q| q != e).map(|q| 1usize << q).sum();
    let mut lhs = 0.0;
    let n_abar = abar.len();
    for j_choice in 0..4usize.pow(n_abar as u32) {
        let mut codes = vec![0u8; l];
        let mut rem = j_choice;
        for &q in &abar {
            codes[q] = (rem % 4) as u8;
            rem /= 4;
        }
        let pj = pauli_matrix(l, &codes);
        let pj_t = udag.dot(&pj).dot(&u);
        for pi in 0..4u8 {
            let mut codes_i = vec![0u8; l];
            codes_i[e] = pi;
            let pi_mat = pauli_matrix(l, &codes_i);
            // M = P_j(t) * (P_i tensor |0><0|_Ebar): zero out columns with
            // support on occupied Ebar, then act with P_i.
            let mut op = pi_mat;
            for col in 0..dim {
                if col & ebar_mask != 0 {
                    for r in 0..dim {
                        op[[r, col]] = ZERO;
                    }
                }
            }
            let m = pj_t.dot(&op);
            let mut tr = ZERO;
            for aa in 0..dim {
                for bb in 0..dim {
                    tr += m[[aa, bb]] * m[[bb, aa]];
                }
            }
            lhs += tr.re;
        }
    }
    lhs *= (-2.0 * n_abar as f64 - 2.0).exp2();
    Ok((lhs, rhs))
}
