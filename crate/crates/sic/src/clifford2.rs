//! Enumeration of the two-qubit Clifford group.
//!
//! The group has exactly 11520 elements. Each element is stored by its
//! conjugation action on the four Pauli generators X1, Z1, X2, Z2, with signs,
//! which is all a tableau update needs. The table is built once by closing the
//! generator set {H1, S1, H2, S2, CNOT12, CNOT21} under composition, in a
//! deterministic breadth-first order, so gate ids are stable across runs and
//! machines. Each entry also records one decomposition word over those six
//! primitives, used to reconstruct the 4x4 unitary for dense cross-checks.

use once_cell::sync::Lazy;
use rand::Rng;
use std::collections::HashMap;

/// Order of the two-qubit Clifford group (modulo global phase).
pub const CLIFFORD2_ORDER: usize = 11520;

/// Two-qubit Pauli as 4 bits: x1 | z1<<1 | x2<<2 | z2<<3 (Hermitian, Y = iXZ).
pub type Pauli2Bits = u8;

/// i-exponent picked up when multiplying single-qubit Hermitian Paulis,
/// indexed by code x + 2z (I=0, X=1, Z=2, Y=3).
const KLUT: [[u8; 4]; 4] = [
    [0, 0, 0, 0],
    [0, 0, 3, 1],
    [0, 1, 0, 3],
    [0, 3, 1, 0],
];

#[inline]
fn code1(bits: Pauli2Bits) -> usize {
    ((bits & 1) | ((bits >> 1) & 1) << 1) as usize
}

#[inline]
fn code2(bits: Pauli2Bits) -> usize {
    (((bits >> 2) & 1) | ((bits >> 3) & 1) << 1) as usize
}

/// Multiply two Hermitian two-qubit Paulis: returns (bits, i-exponent mod 4).
#[inline]
pub fn herm_mul(a: Pauli2Bits, b: Pauli2Bits) -> (Pauli2Bits, u8) {
    let k = KLUT[code1(a)][code1(b)] + KLUT[code2(a)][code2(b)];
    (a ^ b, k & 3)
}

/// Image of a Pauli generator under conjugation: bits | sign<<4.
type SignedPauli = u8;

/// A Clifford element, stored by the signed images of X1, Z1, X2, Z2.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct CliffordAction {
    pub img: [SignedPauli; 4],
}

impl CliffordAction {
    const IDENTITY: Self = Self { img: [0x1, 0x2, 0x4, 0x8] };

    /// Conjugate a signless Hermitian Pauli; returns (bits, sign flip).
    pub fn apply(&self, bits: Pauli2Bits) -> (Pauli2Bits, bool) {
        // P = i^m X1^x1 Z1^z1 X2^x2 Z2^z2 with m = number of Y factors.
        let mut k = ((bits & 1) & (bits >> 1)) + (((bits >> 2) & 1) & (bits >> 3));
        let mut acc: Pauli2Bits = 0;
        for g in 0..4 {
            if bits >> g & 1 == 1 {
                let im = self.img[g];
                let (b, kk) = herm_mul(acc, im & 0xF);
                acc = b;
                k = (k + kk + 2 * (im >> 4)) & 3;
            }
        }
        debug_assert!(k & 1 == 0, "conjugated Hermitian Pauli must stay Hermitian");
        (acc, k == 2)
    }

    /// Composition: (g.compose(f)) acts as conjugation by U_g U_f.
    fn compose(&self, f: &Self) -> Self {
        let mut img = [0u8; 4];
        for g in 0..4 {
            let (bits, flip) = self.apply(f.img[g] & 0xF);
            let sign = ((f.img[g] >> 4) ^ flip as u8) & 1;
            img[g] = bits | sign << 4;
        }
        Self { img }
    }
}

/// The six primitive generators, in the fixed enumeration order.
/// Indices: 0 = H1, 1 = S1, 2 = H2, 3 = S2, 4 = CNOT(1->2), 5 = CNOT(2->1).
const GENERATORS: [CliffordAction; 6] = [
    CliffordAction { img: [0x2, 0x1, 0x4, 0x8] },   // H1
    CliffordAction { img: [0x3, 0x2, 0x4, 0x8] },   // S1: X1 -> Y1
    CliffordAction { img: [0x1, 0x2, 0x8, 0x4] },   // H2
    CliffordAction { img: [0x1, 0x2, 0xC, 0x8] },   // S2: X2 -> Y2
    CliffordAction { img: [0x5, 0x2, 0x4, 0xA] },   // CX12: X1->X1X2, Z2->Z1Z2
    CliffordAction { img: [0x1, 0xA, 0x5, 0x8] },   // CX21: Z1->Z1Z2, X2->X1X2
];

pub struct Clifford2Table {
    pub actions: Vec<CliffordAction>,
    /// Decomposition words: unitary = product of primitives left to right.
    pub words: Vec<Vec<u8>>,
    /// Per-gate tableau update LUT: entry t -> out bits | sign<<4, t over the
    /// 16 (x1, z1, x2, z2) patterns in Hermitian convention.
    pub luts: Vec<[u8; 16]>,
}

fn build_table() -> Clifford2Table {
    let mut actions = vec![CliffordAction::IDENTITY];
    let mut words: Vec<Vec<u8>> = vec![vec![]];
    let mut index: HashMap<CliffordAction, usize> = HashMap::new();
    index.insert(CliffordAction::IDENTITY, 0);

    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &fi in &frontier {
            let f = actions[fi];
            for (gi, g) in GENERATORS.iter().enumerate() {
                let e = g.compose(&f);
                if !index.contains_key(&e) {
                    let mut word = vec![gi as u8];
                    word.extend_from_slice(&words[fi]);
                    index.insert(e, actions.len());
                    next.push(actions.len());
                    actions.push(e);
                    words.push(word);
                }
            }
        }
        frontier = next;
    }
    assert_eq!(actions.len(), CLIFFORD2_ORDER);

    let luts = actions
        .iter()
        .map(|a| {
            let mut lut = [0u8; 16];
            for t in 0..16u8 {
                let (bits, flip) = a.apply(t);
                lut[t as usize] = bits | (flip as u8) << 4;
            }
            lut
        })
        .collect();

    Clifford2Table { actions, words, luts }
}

pub static CLIFFORD2: Lazy<Clifford2Table> = Lazy::new(build_table);

/// A two-qubit Clifford gate, identified by its index in the global table.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CliffordGate2 {
    pub id: u16,
}

impl CliffordGate2 {
    pub fn new(id: u16) -> Self {
        assert!((id as usize) < CLIFFORD2_ORDER);
        Self { id }
    }

    pub fn action(&self) -> &'static CliffordAction {
        &CLIFFORD2.actions[self.id as usize]
    }

    pub fn lut(&self) -> &'static [u8; 16] {
        &CLIFFORD2.luts[self.id as usize]
    }

    pub fn word(&self) -> &'static [u8] {
        &CLIFFORD2.words[self.id as usize]
    }
}

/// Draw a uniform two-qubit Clifford gate from the table.
pub fn sample_clifford2<R: Rng + ?Sized>(rng: &mut R) -> CliffordGate2 {
    CliffordGate2 { id: rng.gen_range(0..CLIFFORD2_ORDER as u16) }
}
