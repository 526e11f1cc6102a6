//! Morgan (circular) fingerprints and Tanimoto similarity.
//!
//! Atom identifiers start from (element, heavy degree, charge, hydrogen
//! count, ring flag) and are refined once per radius with the sorted
//! (bond order, neighbor identifier) list. Every identifier from radius 0 up
//! to the requested radius sets bit `id % nbits`.
//!
//! Hashing is SplitMix64 finalization chained from [`HASH_SEED`], so bit
//! positions are stable across builds and platforms.

use crate::error::{ChemError, Result};
use crate::molecule::Molecule;

/// Seed of the identifier hash chain. Changing it invalidates saved indexes.
pub const HASH_SEED: u64 = 0x53594e_524f555445; // "SYNROUTE"

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn combine(h: u64, x: u64) -> u64 {
    splitmix64(h ^ splitmix64(x))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    nbits: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn empty(nbits: usize, radius: u32) -> Self {
        assert!(nbits > 0, "fingerprint width must be positive");
        Fingerprint {
            words: vec![0; nbits.div_ceil(64)],
            nbits,
            radius,
        }
    }

    pub fn from_bits(nbits: usize, radius: u32, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::empty(nbits, radius);
        for b in bits {
            fp.set(b % nbits);
        }
        fp
    }

    /// Rebuilds a fingerprint from its raw 64-bit words.
    pub fn from_words(nbits: usize, radius: u32, words: Vec<u64>) -> Self {
        assert_eq!(words.len(), nbits.div_ceil(64));
        Fingerprint { words, nbits, radius }
    }

    fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn contains(&self, bit: usize) -> bool {
        bit < self.nbits && self.words[bit / 64] & (1u64 << (bit % 64)) != 0
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(|&b| self.contains(b))
    }
}

/// Morgan fingerprint of `mol` folded to `nbits`. Explicit hydrogen atoms
/// are folded into their neighbors' hydrogen counts.
pub fn morgan_fingerprint(mol: &Molecule, radius: u32, nbits: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(nbits, radius);
    let heavy: Vec<usize> = (0..mol.num_atoms()).filter(|&i| mol.atom(i).element != 1).collect();
    let mut ids = vec![0u64; mol.num_atoms()];
    for &i in &heavy {
        let a = mol.atom(i);
        let mut h = combine(HASH_SEED, a.element as u64);
        h = combine(h, mol.heavy_degree(i) as u64);
        h = combine(h, (a.charge as i64) as u64);
        h = combine(h, mol.total_hydrogens(i) as u64);
        h = combine(h, mol.is_ring_atom(i) as u64);
        ids[i] = h;
        fp.set((h % nbits as u64) as usize);
    }
    for layer in 1..=radius {
        let mut next = ids.clone();
        for &i in &heavy {
            let mut env: Vec<(u8, u64)> = mol
                .neighbors(i)
                .iter()
                .filter(|&&(nb, _)| mol.atom(nb).element != 1)
                .map(|&(nb, bi)| (mol.bond(bi).order.code(), ids[nb]))
                .collect();
            env.sort_unstable();
            let mut h = combine(combine(HASH_SEED, layer as u64), ids[i]);
            for (order, id) in env {
                h = combine(combine(h, order as u64), id);
            }
            next[i] = h;
            fp.set((h % nbits as u64) as usize);
        }
        ids = next;
    }
    fp
}

/// |A ∩ B| / |A ∪ B|; 1.0 when both fingerprints are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    if a.nbits != b.nbits {
        return Err(ChemError::WidthMismatch {
            left: a.nbits,
            right: b.nbits,
        });
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}
