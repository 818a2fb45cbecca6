//! Compact element sets over the groundset.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// A set of groundset elements, stored as a bitset.
///
/// Equality, hashing and ordering ignore capacity: `{0,3}` built over a
/// groundset of 4 equals `{0,3}` built over a groundset of 100. Ordering is
/// lexicographic on the ascending element sequence, so `{0,3} < {1,2}` and
/// `{0} < {0,1}`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ElemSet {
    blocks: Vec<u64>,
}

impl ElemSet {
    pub fn new() -> Self {
        ElemSet { blocks: Vec::new() }
    }

    pub fn singleton(e: u32) -> Self {
        let mut s = ElemSet::new();
        s.insert(e);
        s
    }

    pub fn insert(&mut self, e: u32) {
        let block = (e / 64) as usize;
        if block >= self.blocks.len() {
            self.blocks.resize(block + 1, 0);
        }
        self.blocks[block] |= 1u64 << (e % 64);
    }

    pub fn contains(&self, e: u32) -> bool {
        let block = (e / 64) as usize;
        block < self.blocks.len() && self.blocks[block] & (1u64 << (e % 64)) != 0
    }

    pub fn len(&self) -> u64 {
        self.blocks.iter().map(|b| b.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn union_with(&mut self, other: &ElemSet) {
        if other.blocks.len() > self.blocks.len() {
            self.blocks.resize(other.blocks.len(), 0);
        }
        for (dst, src) in self.blocks.iter_mut().zip(other.blocks.iter()) {
            *dst |= *src;
        }
        self.trim();
    }

    pub fn union(&self, other: &ElemSet) -> ElemSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection_len(&self, other: &ElemSet) -> u64 {
        self.blocks
            .iter()
            .zip(other.blocks.iter())
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn is_subset(&self, other: &ElemSet) -> bool {
        self.blocks
            .iter()
            .enumerate()
            .all(|(i, &b)| b & !other.blocks.get(i).copied().unwrap_or(0) == 0)
    }

    /// Largest element plus one; 0 for the empty set.
    pub fn span(&self) -> u32 {
        for (i, &b) in self.blocks.iter().enumerate().rev() {
            if b != 0 {
                return i as u32 * 64 + (64 - b.leading_zeros());
            }
        }
        0
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().enumerate().flat_map(|(i, &b)| {
            let base = i as u32 * 64;
            BitIter { bits: b, base }
        })
    }

    /// Stable 64-bit fingerprint (FNV-1a over the trimmed blocks).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in &self.blocks {
            for byte in b.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        }
        h
    }

    fn trim(&mut self) {
        while self.blocks.last() == Some(&0) {
            self.blocks.pop();
        }
    }
}

struct BitIter {
    bits: u64,
    base: u32,
}

impl Iterator for BitIter {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        if self.bits == 0 {
            return None;
        }
        let t = self.bits.trailing_zeros();
        self.bits &= self.bits - 1;
        Some(self.base + t)
    }
}

impl FromIterator<u32> for ElemSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut s = ElemSet::new();
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl PartialOrd for ElemSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ElemSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.iter();
        let mut b = other.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) => match x.cmp(&y) {
                    Ordering::Equal => continue,
                    ord => return ord,
                },
            }
        }
    }
}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
