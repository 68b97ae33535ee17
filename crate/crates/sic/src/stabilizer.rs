//! Pure-state stabilizer simulator with bit-packed tableau rows.
//!
//! The tableau keeps n stabilizer generators plus n destabilizers in the
//! Aaronson-Gottesman layout, all rows in the Hermitian convention (Y carries
//! its own i, phases restricted to +-1). Entanglement entropy of a region is
//! the GF(2) rank of the stabilizer generator matrix restricted to the region
//! columns, minus the region size.

use crate::clifford2::CliffordGate2;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StabilizerError {
    #[error("qubit index {0} out of range for {1} qubits")]
    IndexOutOfRange(usize, usize),
    #[error("duplicate qubit index {0}")]
    DuplicateIndex(usize),
    #[error("regions overlap at qubit {0}")]
    RegionOverlap(usize),
    #[error("many-to-many encoding needs even L, got {0}")]
    OddSystemSize(usize),
    #[error("invalid tableau: {0}")]
    InvalidTableau(&'static str),
}

/// Subsystem: a sorted set of qubit indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    sites: Vec<usize>,
}

impl Region {
    pub fn new(mut sites: Vec<usize>, n_qubits: usize) -> Result<Self, StabilizerError> {
        sites.sort_unstable();
        for w in sites.windows(2) {
            if w[0] == w[1] {
                return Err(StabilizerError::DuplicateIndex(w[0]));
            }
        }
        if let Some(&max) = sites.last() {
            if max >= n_qubits {
                return Err(StabilizerError::IndexOutOfRange(max, n_qubits));
            }
        }
        Ok(Self { sites })
    }

    pub fn contiguous(range: std::ops::Range<usize>, n_qubits: usize) -> Result<Self, StabilizerError> {
        Self::new(range.collect(), n_qubits)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn union(&self, other: &Region) -> Result<Region, StabilizerError> {
        let mut sites = self.sites.clone();
        for &s in &other.sites {
            if self.sites.binary_search(&s).is_ok() {
                return Err(StabilizerError::RegionOverlap(s));
            }
            sites.push(s);
        }
        sites.sort_unstable();
        Ok(Region { sites })
    }
}

/// Encoding of the reference system into the circuit input state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncodingScheme {
    /// One reference qubit Bell-paired with system site `e`.
    OneToOne { e: usize },
    /// One reference qubit in a GHZ state with all system sites.
    OneToAll,
    /// L/2 reference qubits Bell-paired with the centered block of L/2 sites.
    ManyToMany,
}

impl EncodingScheme {
    /// Number of reference qubits the scheme appends after the system.
    pub fn n_reference(&self, l: usize) -> usize {
        match self {
            EncodingScheme::OneToOne { .. } | EncodingScheme::OneToAll => 1,
            EncodingScheme::ManyToMany => l / 2,
        }
    }

    /// System sites carrying encoded information (the region E).
    pub fn e_sites(&self, l: usize) -> Vec<usize> {
        match self {
            EncodingScheme::OneToOne { e } => vec![*e],
            EncodingScheme::OneToAll => (0..l).collect(),
            EncodingScheme::ManyToMany => (l / 4..l / 4 + l / 2).collect(),
        }
    }
}

/// Pure stabilizer state on `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    /// Words per row half (x or z block).
    w: usize,
    /// 2n rows (n destabilizers then n stabilizers), each w words.
    x: Vec<u64>,
    z: Vec<u64>,
    /// Sign bit per row: 0 -> +1, 1 -> -1.
    r: Vec<u8>,
}

impl StabilizerTableau {
    /// |0...0> on n qubits.
    pub fn zero_state(n: usize) -> Self {
        let w = n.div_ceil(64);
        let mut t = Self {
            n,
            w,
            x: vec![0; 2 * n * w],
            z: vec![0; 2 * n * w],
            r: vec![0; 2 * n],
        };
        for i in 0..n {
            t.x[i * w + i / 64] |= 1 << (i % 64); // destabilizer X_i
            t.z[(n + i) * w + i / 64] |= 1 << (i % 64); // stabilizer Z_i
        }
        t
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn bit(v: &[u64], w: usize, row: usize, q: usize) -> u64 {
        v[row * w + q / 64] >> (q % 64) & 1
    }

    #[inline]
    fn set_bit(v: &mut [u64], w: usize, row: usize, q: usize, b: u64) {
        let word = &mut v[row * w + q / 64];
        *word = (*word & !(1 << (q % 64))) | b << (q % 64);
    }

    /// row h <- row h * row i, tracking the Hermitian-convention sign.
    fn row_mul(&mut self, h: usize, i: usize) {
        let w = self.w;
        let (mut kp, mut km) = (0u32, 0u32);
        for k in 0..w {
            let x1 = self.x[h * w + k];
            let z1 = self.z[h * w + k];
            let x2 = self.x[i * w + k];
            let z2 = self.z[i * w + k];
            let d = (x1 & z2) ^ (z1 & x2);
            let plus = d & ((x1 & !z1 & x2 & z2) | (x1 & z1 & !x2 & z2) | (!x1 & z1 & x2 & !z2));
            kp += (plus).count_ones();
            km += (d & !plus).count_ones();
            self.x[h * w + k] = x1 ^ x2;
            self.z[h * w + k] = z1 ^ z2;
        }
        let k_tot = (kp.wrapping_sub(km)) & 3;
        debug_assert!(k_tot & 1 == 0, "row product must be Hermitian");
        self.r[h] ^= self.r[i] ^ (k_tot == 2) as u8;
    }

    // Primitive gates (Aaronson-Gottesman update rules, Hermitian convention).

    pub fn h(&mut self, q: usize) {
        let (n, w) = (self.n, self.w);
        assert!(q < n);
        for row in 0..2 * n {
            let xb = Self::bit(&self.x, w, row, q);
            let zb = Self::bit(&self.z, w, row, q);
            self.r[row] ^= (xb & zb) as u8;
            Self::set_bit(&mut self.x, w, row, q, zb);
            Self::set_bit(&mut self.z, w, row, q, xb);
        }
    }

    pub fn s(&mut self, q: usize) {
        let (n, w) = (self.n, self.w);
        assert!(q < n);
        for row in 0..2 * n {
            let xb = Self::bit(&self.x, w, row, q);
            let zb = Self::bit(&self.z, w, row, q);
            self.r[row] ^= (xb & zb) as u8;
            Self::set_bit(&mut self.z, w, row, q, zb ^ xb);
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let (n, w) = (self.n, self.w);
        assert!(c < n && t < n && c != t);
        for row in 0..2 * n {
            let xc = Self::bit(&self.x, w, row, c);
            let zc = Self::bit(&self.z, w, row, c);
            let xt = Self::bit(&self.x, w, row, t);
            let zt = Self::bit(&self.z, w, row, t);
            self.r[row] ^= (xc & zt & (xt ^ zc ^ 1)) as u8;
            Self::set_bit(&mut self.x, w, row, t, xt ^ xc);
            Self::set_bit(&mut self.z, w, row, c, zc ^ zt);
        }
    }

    pub fn x_gate(&mut self, q: usize) {
        let (n, w) = (self.n, self.w);
        for row in 0..2 * n {
            self.r[row] ^= Self::bit(&self.z, w, row, q) as u8;
        }
    }

    /// Apply a two-qubit Clifford gate on (q1, q2).
    pub fn apply_gate(&mut self, g: CliffordGate2, q1: usize, q2: usize) -> Result<(), StabilizerError> {
        if q1 == q2 {
            return Err(StabilizerError::DuplicateIndex(q1));
        }
        for &q in &[q1, q2] {
            if q >= self.n {
                return Err(StabilizerError::IndexOutOfRange(q, self.n));
            }
        }
        let lut = g.lut();
        let w = self.w;
        for row in 0..2 * self.n {
            let t = (Self::bit(&self.x, w, row, q1)
                | Self::bit(&self.z, w, row, q1) << 1
                | Self::bit(&self.x, w, row, q2) << 2
                | Self::bit(&self.z, w, row, q2) << 3) as usize;
            if t == 0 {
                continue;
            }
            let out = lut[t];
            Self::set_bit(&mut self.x, w, row, q1, (out & 1) as u64);
            Self::set_bit(&mut self.z, w, row, q1, (out >> 1 & 1) as u64);
            Self::set_bit(&mut self.x, w, row, q2, (out >> 2 & 1) as u64);
            Self::set_bit(&mut self.z, w, row, q2, (out >> 3 & 1) as u64);
            self.r[row] ^= out >> 4;
        }
        Ok(())
    }

    /// Projective Z measurement on qubit q. Random outcomes draw one fair
    /// coin from `rng`; deterministic outcomes consume no randomness.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<u8, StabilizerError> {
        if q >= self.n {
            return Err(StabilizerError::IndexOutOfRange(q, self.n));
        }
        let (n, w) = (self.n, self.w);
        let p = (n..2 * n).find(|&row| Self::bit(&self.x, w, row, q) == 1);
        match p {
            Some(p) => {
                let outcome: u8 = rng.gen_range(0..2);
                // Row p - n (the destabilizer paired with row p) is the one
                // row that anticommutes with row p; it is overwritten below,
                // so it is skipped rather than multiplied.
                for row in 0..2 * n {
                    if row != p && row != p - n && Self::bit(&self.x, w, row, q) == 1 {
                        self.row_mul(row, p);
                    }
                }
                // Old stabilizer row p becomes the destabilizer for Z_q.
                let d = p - n;
                for k in 0..w {
                    self.x[d * w + k] = self.x[p * w + k];
                    self.z[d * w + k] = self.z[p * w + k];
                    self.x[p * w + k] = 0;
                    self.z[p * w + k] = 0;
                }
                self.r[d] = self.r[p];
                Self::set_bit(&mut self.z, w, p, q, 1);
                self.r[p] = outcome;
                Ok(outcome)
            }
            None => {
                // Deterministic: accumulate the product of stabilizers whose
                // destabilizer partner anticommutes with Z_q.
                let mut sx = vec![0u64; w];
                let mut sz = vec![0u64; w];
                let mut sr = 0u8;
                let (mut kp, mut km) = (0u32, 0u32);
                for i in 0..n {
                    if Self::bit(&self.x, w, i, q) == 1 {
                        let s = n + i;
                        for k in 0..w {
                            let (x1, z1) = (sx[k], sz[k]);
                            let x2 = self.x[s * w + k];
                            let z2 = self.z[s * w + k];
                            let d = (x1 & z2) ^ (z1 & x2);
                            let plus = d & ((x1 & !z1 & x2 & z2) | (x1 & z1 & !x2 & z2) | (!x1 & z1 & x2 & !z2));
                            kp += plus.count_ones();
                            km += (d & !plus).count_ones();
                            sx[k] = x1 ^ x2;
                            sz[k] = z1 ^ z2;
                        }
                        sr ^= self.r[s];
                    }
                }
                let k_tot = (kp.wrapping_sub(km)) & 3;
                debug_assert!(k_tot & 1 == 0);
                Ok(sr ^ (k_tot == 2) as u8)
            }
        }
    }

    /// Entanglement entropy of a region in bits:
    /// rank_GF(2) of the stabilizer columns restricted to the region, minus
    /// the region size.
    pub fn entropy(&self, region: &Region) -> usize {
        let m = region.len();
        if m == 0 {
            return 0;
        }
        let (n, w) = (self.n, self.w);
        let rw = (2 * m).div_ceil(64);
        // Gather region columns (x block then z block) into packed scratch rows.
        let mut rows = vec![0u64; n * rw];
        for row in 0..n {
            let s = n + row;
            for (j, &q) in region.sites().iter().enumerate() {
                let xb = Self::bit(&self.x, w, s, q);
                let zb = Self::bit(&self.z, w, s, q);
                rows[row * rw + j / 64] |= xb << (j % 64);
                let jz = m + j;
                rows[row * rw + jz / 64] |= zb << (jz % 64);
            }
        }
        gf2_rank(&mut rows, n, rw) - m
    }

    /// I(A:R) = S_A + S_R - S_{A u R} in bits. Regions must be disjoint.
    pub fn mutual_information(&self, a: &Region, r: &Region) -> Result<i64, StabilizerError> {
        let ar = a.union(r)?;
        Ok(self.entropy(a) as i64 + self.entropy(r) as i64 - self.entropy(&ar) as i64)
    }

    /// Check tableau invariants: rows pairwise commute/anticommute correctly
    /// and the full 2n x 2n symplectic matrix has full rank.
    pub fn validate(&self) -> Result<(), StabilizerError> {
        let (n, w) = (self.n, self.w);
        let sym = |a: usize, b: usize| -> u32 {
            let mut acc = 0u32;
            for k in 0..w {
                acc ^= ((self.x[a * w + k] & self.z[b * w + k])
                    ^ (self.z[a * w + k] & self.x[b * w + k]))
                    .count_ones()
                    & 1;
            }
            acc
        };
        for i in 0..n {
            for j in 0..n {
                // Stabilizers commute among themselves; destabilizer i
                // anticommutes exactly with stabilizer i.
                if sym(n + i, n + j) != 0 {
                    return Err(StabilizerError::InvalidTableau("stabilizers do not commute"));
                }
                let want = (i == j) as u32;
                if sym(i, n + j) != want {
                    return Err(StabilizerError::InvalidTableau("destabilizer pairing broken"));
                }
            }
        }
        // Full rank of all 2n rows over GF(2) (x and z blocks concatenated).
        let rw = (2 * n).div_ceil(64);
        let mut rows = vec![0u64; 2 * n * rw];
        for row in 0..2 * n {
            for q in 0..n {
                rows[row * rw + q / 64] |= Self::bit(&self.x, w, row, q) << (q % 64);
                let qz = n + q;
                rows[row * rw + qz / 64] |= Self::bit(&self.z, w, row, q) << (qz % 64);
            }
        }
        if gf2_rank(&mut rows, 2 * n, rw) != 2 * n {
            return Err(StabilizerError::InvalidTableau("generators not independent"));
        }
        Ok(())
    }
}

/// In-place GF(2) row elimination; returns the rank.
fn gf2_rank(rows: &mut [u64], n_rows: usize, rw: usize) -> usize {
    let mut rank = 0;
    for col in 0..rw * 64 {
        let (wi, bi) = (col / 64, col % 64);
        let mut pivot = None;
        for row in rank..n_rows {
            if rows[row * rw + wi] >> bi & 1 == 1 {
                pivot = Some(row);
                break;
            }
        }
        let Some(p) = pivot else { continue };
        if p != rank {
            for k in 0..rw {
                rows.swap(p * rw + k, rank * rw + k);
            }
        }
        for row in 0..n_rows {
            if row != rank && rows[row * rw + wi] >> bi & 1 == 1 {
                for k in 0..rw {
                    let v = rows[rank * rw + k];
                    rows[row * rw + k] ^= v;
                }
            }
        }
        rank += 1;
        if rank == n_rows {
            break;
        }
    }
    rank
}

/// Build the encoded initial state: L system qubits followed by the
/// reference qubits of the scheme, Bell/GHZ entangled, everything else |0>.
pub fn init_encoded(l: usize, scheme: EncodingScheme) -> Result<StabilizerTableau, StabilizerError> {
    let n_ref = scheme.n_reference(l);
    let n = l + n_ref;
    let mut t = StabilizerTableau::zero_state(n);
    match scheme {
        EncodingScheme::OneToOne { e } => {
            if e >= l {
                return Err(StabilizerError::IndexOutOfRange(e, l));
            }
            t.h(e);
            t.cnot(e, l);
        }
        EncodingScheme::OneToAll => {
            t.h(l);
            for q in 0..l {
                t.cnot(l, q);
            }
        }
        EncodingScheme::ManyToMany => {
            if l % 2 != 0 {
                return Err(StabilizerError::OddSystemSize(l));
            }
            for (k, e) in scheme.e_sites(l).into_iter().enumerate() {
                t.h(e);
                t.cnot(e, l + k);
            }
        }
    }
    Ok(t)
}

pub use crate::clifford2::{sample_clifford2, CliffordGate2 as Gate2};
