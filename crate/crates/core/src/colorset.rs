//! Sets of colors drawn from `1..=k`.
//!
//! For `k <= 128` a set is a single `u128` bitmask; larger palettes fall
//! back to a sorted vector. The representation is picked from `k` alone,
//! so two sets over the same palette always share a variant and derived
//! equality is exact.

use serde::{Serialize, Serializer};

/// A color. Colors are 1-based: valid colors are `1..=k`.
pub type Color = u32;

const BITSET_MAX_K: u32 = 128;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ColorSet {
    Bits(u128),
    Sorted(Vec<Color>),
}

impl ColorSet {
    pub fn empty(k: u32) -> Self {
        if k <= BITSET_MAX_K {
            ColorSet::Bits(0)
        } else {
            ColorSet::Sorted(Vec::new())
        }
    }

    pub fn singleton(k: u32, c: Color) -> Self {
        let mut s = Self::empty(k);
        s.insert(c);
        s
    }

    /// The full palette `1..=k`.
    pub fn full(k: u32) -> Self {
        let mut s = Self::empty(k);
        for c in 1..=k {
            s.insert(c);
        }
        s
    }

    pub fn from_colors<I: IntoIterator<Item = Color>>(k: u32, colors: I) -> Self {
        let mut s = Self::empty(k);
        for c in colors {
            s.insert(c);
        }
        s
    }

    #[inline]
    pub fn contains(&self, c: Color) -> bool {
        match self {
            ColorSet::Bits(b) => (1..=BITSET_MAX_K).contains(&c) && (b >> (c - 1)) & 1 == 1,
            ColorSet::Sorted(v) => v.binary_search(&c).is_ok(),
        }
    }

    #[inline]
    pub fn insert(&mut self, c: Color) -> bool {
        debug_assert!(c >= 1);
        match self {
            ColorSet::Bits(b) => {
                let bit = 1u128 << (c - 1);
                let fresh = *b & bit == 0;
                *b |= bit;
                fresh
            }
            ColorSet::Sorted(v) => match v.binary_search(&c) {
                Ok(_) => false,
                Err(i) => {
                    v.insert(i, c);
                    true
                }
            },
        }
    }

    pub fn remove(&mut self, c: Color) -> bool {
        match self {
            ColorSet::Bits(b) => {
                let bit = 1u128 << (c - 1);
                let had = *b & bit != 0;
                *b &= !bit;
                had
            }
            ColorSet::Sorted(v) => match v.binary_search(&c) {
                Ok(i) => {
                    v.remove(i);
                    true
                }
                Err(_) => false,
            },
        }
    }

    pub fn union_with(&mut self, other: &ColorSet) {
        match (self, other) {
            (ColorSet::Bits(a), ColorSet::Bits(b)) => *a |= *b,
            (me, other) => {
                for c in other.iter() {
                    me.insert(c);
                }
            }
        }
    }

    pub fn union(&self, other: &ColorSet) -> ColorSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection(&self, other: &ColorSet) -> ColorSet {
        match (self, other) {
            (ColorSet::Bits(a), ColorSet::Bits(b)) => ColorSet::Bits(a & b),
            (ColorSet::Sorted(a), _) => {
                ColorSet::Sorted(a.iter().copied().filter(|&c| other.contains(c)).collect())
            }
            (me, ColorSet::Sorted(b)) => {
                ColorSet::Sorted(b.iter().copied().filter(|&c| me.contains(c)).collect())
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        match self {
            ColorSet::Bits(b) => b.count_ones() as usize,
            ColorSet::Sorted(v) => v.len(),
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Colors in ascending order.
    pub fn iter(&self) -> ColorIter<'_> {
        match self {
            ColorSet::Bits(b) => ColorIter::Bits(*b),
            ColorSet::Sorted(v) => ColorIter::Sorted(v.iter()),
        }
    }

    pub fn to_vec(&self) -> Vec<Color> {
        self.iter().collect()
    }

    /// Smallest color in the set.
    pub fn first(&self) -> Option<Color> {
        self.iter().next()
    }
}

pub enum ColorIter<'a> {
    Bits(u128),
    Sorted(std::slice::Iter<'a, Color>),
}

impl Iterator for ColorIter<'_> {
    type Item = Color;

    fn next(&mut self) -> Option<Color> {
        match self {
            ColorIter::Bits(b) => {
                if *b == 0 {
                    None
                } else {
                    let tz = b.trailing_zeros();
                    *b &= *b - 1;
                    Some(tz + 1)
                }
            }
            ColorIter::Sorted(it) => it.next().copied(),
        }
    }
}

impl Serialize for ColorSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}
