//! Ordered multi-indices `I = (i₁ < … < i_𝒫)` over `{1, …, n}` and the
//! permutation signs used to write the derivation matrix.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::symfunc::binomial;

/// Strictly increasing list of 1-based indices. The empty index stands for
/// the single element of `𝔍(0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>, n: usize) -> Result<Self> {
        for (pos, &e) in entries.iter().enumerate() {
            if e == 0 || e > n {
                return Err(Error::IndexOutOfRange { index: e, len: n });
            }
            if pos > 0 && entries[pos - 1] >= e {
                return Err(Error::InvalidParameter(format!(
                    "multi-index entries must be strictly increasing: {entries:?}"
                )));
            }
        }
        Ok(MultiIndex(entries))
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// 0-based positions, for indexing eigenvalue slices.
    pub fn zero_based(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i - 1)
    }

    /// `I − i`.
    pub fn remove(&self, i: usize) -> Option<MultiIndex> {
        let pos = self.0.binary_search(&i).ok()?;
        let mut v = self.0.clone();
        v.remove(pos);
        Some(MultiIndex(v))
    }

    /// `I + j`.
    pub fn add(&self, j: usize) -> Option<MultiIndex> {
        match self.0.binary_search(&j) {
            Ok(_) => None,
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, j);
                Some(MultiIndex(v))
            }
        }
    }
}

/// `Ī`: the increasing complement of `I` in `{1, …, n}`.
pub fn complement(index: &MultiIndex, n: usize) -> MultiIndex {
    MultiIndex((1..=n).filter(|i| !index.contains(*i)).collect())
}

/// Sign of the permutation sorting the concatenation `(I, J)`, by inversion
/// count. Empty arguments give `+1`.
pub fn perm_sign(first: &MultiIndex, second: &MultiIndex) -> Result<i32> {
    if let Some(&dup) = first.0.iter().find(|i| second.contains(**i)) {
        return Err(Error::OverlappingIndices(dup));
    }
    let inversions: usize = first
        .0
        .iter()
        .map(|a| second.0.iter().filter(|b| *b < a).count())
        .sum();
    Ok(if inversions.is_multiple_of(2) { 1 } else { -1 })
}

/// All of `𝔍(𝒫, n)` in lexicographic order together with a reverse lookup.
#[derive(Debug, Clone)]
pub struct IndexTable {
    p: usize,
    n: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl IndexTable {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `N = C(n, 𝒫)`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, pos: usize) -> Option<&MultiIndex> {
        self.indices.get(pos)
    }

    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        self.lookup.get(index).copied()
    }
}

/// Enumerate `𝔍(𝒫, n)` lexicographically.
pub fn enumerate(p: usize, n: usize) -> Result<IndexTable> {
    if p == 0 || p > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 ≤ 𝒫 ≤ n, got 𝒫 = {p}, n = {n}"
        )));
    }
    let mut indices = Vec::with_capacity(binomial(n, p));
    let mut current: Vec<usize> = (1..=p).collect();
    loop {
        indices.push(MultiIndex(current.clone()));
        // advance to the next combination in lexicographic order
        let mut pos = p;
        while pos > 0 && current[pos - 1] == n - p + pos {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        current[pos - 1] += 1;
        for j in pos..p {
            current[j] = current[j - 1] + 1;
        }
    }
    let lookup = indices
        .iter()
        .enumerate()
        .map(|(pos, idx)| (idx.clone(), pos))
        .collect();
    Ok(IndexTable {
        p,
        n,
        indices,
        lookup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[usize], n: usize) -> MultiIndex {
        MultiIndex::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn enumerate_examples() {
        let t = enumerate(2, 3).unwrap();
        assert_eq!(
            t.indices(),
            &[mi(&[1, 2], 3), mi(&[1, 3], 3), mi(&[2, 3], 3)]
        );
        let t = enumerate(1, 3).unwrap();
        assert_eq!(t.indices(), &[mi(&[1], 3), mi(&[2], 3), mi(&[3], 3)]);
        let t = enumerate(3, 3).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.indices()[0], mi(&[1, 2, 3], 3));
        assert!(enumerate(0, 3).is_err());
        assert!(enumerate(4, 3).is_err());
    }

    #[test]
    fn table_sizes_and_lookup() {
        for n in 2..=7 {
            for p in 1..=n {
                let t = enumerate(p, n).unwrap();
                assert_eq!(t.len(), binomial(n, p));
                for (pos, idx) in t.indices().iter().enumerate() {
                    assert_eq!(t.position(idx), Some(pos));
                    if pos > 0 {
                        assert!(t.indices()[pos - 1] < *idx);
                    }
                    let c = complement(idx, n);
                    assert_eq!(c.len(), n - p);
                    if p < n {
                        let ct = enumerate(n - p, n).unwrap();
                        let back = complement(&ct.indices()[ct.position(&c).unwrap()], n);
                        assert_eq!(&back, idx);
                    }
                }
            }
        }
    }

    #[test]
    fn complement_examples() {
        assert_eq!(complement(&mi(&[1, 3], 4), 4), mi(&[2, 4], 4));
        assert!(complement(&mi(&[1, 2, 3], 3), 3).is_empty());
        assert_eq!(complement(&mi(&[2], 2), 2), mi(&[1], 2));
    }

    #[test]
    fn perm_sign_examples() {
        assert_eq!(perm_sign(&mi(&[1], 3), &mi(&[2, 3], 3)).unwrap(), 1);
        assert_eq!(perm_sign(&mi(&[2], 3), &mi(&[1, 3], 3)).unwrap(), -1);
        assert_eq!(perm_sign(&mi(&[3], 3), &mi(&[1, 2], 3)).unwrap(), 1);
        assert_eq!(
            perm_sign(&MultiIndex::empty(), &MultiIndex::empty()).unwrap(),
            1
        );
        assert!(matches!(
            perm_sign(&mi(&[1, 2], 3), &mi(&[2], 3)),
            Err(Error::OverlappingIndices(2))
        ));
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(MultiIndex::new(vec![2, 1], 3).is_err());
        assert!(MultiIndex::new(vec![0, 1], 3).is_err());
        assert!(MultiIndex::new(vec![1, 4], 3).is_err());
    }

    proptest! {
        #[test]
        fn remove_then_add_roundtrips(n in 2usize..8, p_frac in 0.0f64..1.0, pick in 0usize..64) {
            let p = 1 + ((n - 1) as f64 * p_frac) as usize;
            let t = enumerate(p, n).unwrap();
            let idx = &t.indices()[pick % t.len()];
            for &i in idx.entries() {
                let back = idx.remove(i).unwrap().add(i).unwrap();
                prop_assert_eq!(&back, idx);
            }
        }

        #[test]
        fn sign_antisymmetry(n in 2usize..9, mask in 0u32..512, split in 0u32..512) {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for i in 1..=n {
                if mask & (1 << (i - 1)) == 0 { continue; }
                if split & (1 << (i - 1)) == 0 { a.push(i) } else { b.push(i) }
            }
            let a = MultiIndex::new(a, n).unwrap();
            let b = MultiIndex::new(b, n).unwrap();
            let lhs = perm_sign(&a, &b).unwrap() * perm_sign(&b, &a).unwrap();
            let rhs = if (a.len() * b.len()).is_multiple_of(2) { 1 } else { -1 };
            prop_assert_eq!(lhs, rhs);
        }
    }
}
