//! Multi-indices and total-degree index sets.
//!
//! Sets are stored in graded lexicographic order: total degree ascending,
//! then lexicographic on the components. This fixes the column order of
//! every sampling matrix built from a set.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A multi-index `nu` in `N_0^d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        Self(components)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// The unit index `e_j`.
    pub fn unit(d: usize, j: usize) -> Self {
        let mut c = vec![0; d];
        c[j] = 1;
        Self(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    /// `|nu|_1`
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Component-wise `self <= other`.
    pub fn le_componentwise(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `binomial(d + p, p)` in 64-bit arithmetic, `None` on overflow.
pub fn total_degree_cardinality(d: usize, p: usize) -> Option<u64> {
    let mut r: u128 = 1;
    for i in 1..=p as u128 {
        // r * (d + i) / i stays integral at every step
        r = r.checked_mul(d as u128 + i)? / i;
        if r > u64::MAX as u128 {
            return None;
        }
    }
    Some(r as u64)
}

/// An ordered, duplicate-free set of multi-indices of common dimension.
#[derive(Clone, Debug)]
pub struct IndexSet {
    dim: usize,
    order: u32,
    entries: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
}

impl IndexSet {
    /// All `nu` with `|nu|_1 <= p`, in graded lexicographic order.
    pub fn total_degree(d: usize, p: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("index set dimension must be at least 1".into()));
        }
        let card = total_degree_cardinality(d, p).ok_or(Error::CardinalityOverflow { d, p })?;
        let card = usize::try_from(card).map_err(|_| Error::CardinalityOverflow { d, p })?;
        let mut entries = Vec::with_capacity(card);
        let mut buf = vec![0u32; d];
        for k in 0..=p as u32 {
            compositions(&mut buf, 0, k, &mut entries);
        }
        debug_assert_eq!(entries.len(), card);
        Ok(Self::from_sorted(d, p as u32, entries))
    }

    fn from_sorted(dim: usize, order: u32, entries: Vec<MultiIndex>) -> Self {
        let positions = entries
            .iter()
            .enumerate()
            .map(|(i, nu)| (nu.clone(), i))
            .collect();
        Self {
            dim,
            order,
            entries,
            positions,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MultiIndex] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.entries.iter()
    }

    pub fn contains(&self, nu: &MultiIndex) -> bool {
        self.positions.contains_key(nu)
    }

    /// Position of `nu` in the ordering, or `None` if it is not a member.
    pub fn position_of(&self, nu: &MultiIndex) -> Result<Option<usize>> {
        if nu.dim() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: nu.dim(),
            });
        }
        Ok(self.positions.get(nu).copied())
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

// Appends every composition of `remaining` into buf[slot..] in lexicographic order.
fn compositions(buf: &mut [u32], slot: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if slot + 1 == buf.len() {
        buf[slot] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        buf[slot] = 0;
        return;
    }
    for v in 0..=remaining {
        buf[slot] = v;
        compositions(buf, slot + 1, remaining - v, out);
    }
    buf[slot] = 0;
}
