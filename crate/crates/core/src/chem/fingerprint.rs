use serde::{Deserialize, Serialize};

use super::Molecule;

pub const DEFAULT_NBITS: usize = 2048;
pub const DEFAULT_RADIUS: u32 = 2;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const HASH_SEED: u64 = 0x4c43_474c_5545_0001;

/// FNV-1a over the little-endian bytes of `words`, seeded, then passed
/// through the splitmix64 finalizer.
pub fn stable_hash(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET ^ HASH_SEED;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fixed-length bit vector. Bit `i` lives in byte `i / 8` at position
/// `i % 8` (least significant first) when serialised with [`Fingerprint::to_bytes`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    nbits: usize,
    radius: u32,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn zeros(nbits: usize, radius: u32) -> Fingerprint {
        Fingerprint {
            nbits,
            radius,
            words: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn on_bits(&self) -> Vec<usize> {
        (0..self.nbits).filter(|&i| self.get(i)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.nbits.div_ceil(8)];
        for i in self.on_bits() {
            out[i / 8] |= 1 << (i % 8);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], nbits: usize, radius: u32) -> Fingerprint {
        let mut fp = Fingerprint::zeros(nbits, radius);
        for i in 0..nbits.min(bytes.len() * 8) {
            if bytes[i / 8] >> (i % 8) & 1 == 1 {
                fp.set(i);
            }
        }
        fp
    }

    /// Dense 0/1 vector, handy for projections.
    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.nbits).map(|i| if self.get(i) { 1.0 } else { 0.0 }).collect()
    }
}

/// Hashed circular-environment fingerprint. Every atom contributes one bit
/// per radius `0..=radius`; the environment identifier at radius `r` hashes
/// the identifier at `r - 1` with the sorted (bond order, neighbour id) list.
///
/// Panics unless `nbits` is a power of two.
pub fn circular_fingerprint(m: &Molecule, radius: u32, nbits: usize) -> Fingerprint {
    assert!(nbits.is_power_of_two(), "fingerprint length must be a power of two");
    let mut fp = Fingerprint::zeros(nbits, radius);
    let n = m.atom_count();
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = &m.atoms()[i];
            let in_ring = m.neighbors(i).iter().any(|(_, bi)| m.bonds()[*bi].in_ring);
            stable_hash(&[
                a.element.atomic_number() as u64,
                m.heavy_degree(i) as u64,
                m.total_h(i) as u64,
                a.formal_charge as i64 as u64,
                a.aromatic as u64,
                in_ring as u64,
            ])
        })
        .collect();
    let mask = nbits as u64 - 1;
    for &id in &ids {
        fp.set((id & mask) as usize);
    }
    for r in 1..=radius {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut env: Vec<(u64, u64)> = m
                    .neighbors(i)
                    .iter()
                    .map(|(v, bi)| (m.bonds()[*bi].order.index() as u64, ids[*v]))
                    .collect();
                env.sort_unstable();
                let mut words = vec![r as u64, ids[i]];
                for (o, id) in env {
                    words.push(o);
                    words.push(id);
                }
                stable_hash(&words)
            })
            .collect();
        ids = next;
        for &id in &ids {
            fp.set((id & mask) as usize);
        }
    }
    fp
}

/// |A ∩ B| / |A ∪ B|; two empty fingerprints are identical (1.0).
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    assert_eq!(a.nbits, b.nbits, "fingerprint lengths differ");
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn fp(s: &str) -> Fingerprint {
        circular_fingerprint(&parse_smiles(s).unwrap(), DEFAULT_RADIUS, DEFAULT_NBITS)
    }

    #[test]
    fn representation_invariant() {
        assert_eq!(fp("CCO"), fp("OCC"));
        assert_eq!(tanimoto(&fp("CCO"), &fp("CCO")), 1.0);
    }

    #[test]
    fn benzene_vs_pyridine() {
        let (b, p) = (fp("c1ccccc1"), fp("c1ccncc1"));
        // benzene has 3 distinct environments (one per radius), pyridine more
        assert_eq!(b.popcount(), 3);
        let t = tanimoto(&b, &p);
        assert!(t < 1.0 && t > 0.0, "{t}");
        assert_eq!(t, tanimoto(&p, &b));
    }

    #[test]
    fn byte_layout_is_lsb_first() {
        let mut f = Fingerprint::zeros(16, 0);
        f.set(0);
        f.set(9);
        assert_eq!(f.to_bytes(), vec![0b0000_0001, 0b0000_0010]);
        assert_eq!(Fingerprint::from_bytes(&f.to_bytes(), 16, 0), f);
    }

    #[test]
    fn hash_is_pinned() {
        // guards cross-platform reproducibility of stored fingerprints
        assert_eq!(stable_hash(&[1, 2, 3]), 0x46cc_adae_0b2c_c716);
        assert_ne!(stable_hash(&[1]), stable_hash(&[2]));
    }
}
