//! Finite multisets over an ordered carrier.
//!
//! Entries with count zero are never stored, so two multisets are equal
//! exactly when they agree on every element. Iteration follows the order of
//! the carrier, which makes the textual form canonical.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Multiplicity of an element.
pub type Count = u32;

/// A multiplicity exceeded [`Count::MAX`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("multiset count overflow")]
pub struct CountOverflow;

/// Stored as entries sorted by element with positive counts, so the
/// derived order is the lexicographic order on `(element, count)` runs.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset<T: Ord> {
    entries: Vec<(T, Count)>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
        }
    }
}

impl<T: Ord> Multiset<T> {
    fn find(&self, item: &T) -> Result<usize, usize> {
        self.entries.binary_search_by(|(k, _)| k.cmp(item))
    }
}

impl<T: Ord + Clone> Multiset<T> {
    /// The empty multiset.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(item: T, count: Count) -> Self {
        let mut m = Self::new();
        m.insert(item, count);
        m
    }

    pub fn get(&self, item: &T) -> Count {
        self.find(item).map(|i| self.entries[i].1).unwrap_or(0)
    }

    /// Adds `count` copies of `item`.
    ///
    /// Panics on overflow; see [`Multiset::try_insert`].
    pub fn insert(&mut self, item: T, count: Count) {
        self.try_insert(item, count)
            .expect("multiset count overflow");
    }

    pub fn try_insert(&mut self, item: T, count: Count) -> Result<(), CountOverflow> {
        if count == 0 {
            return Ok(());
        }
        match self.find(&item) {
            Ok(i) => {
                let c = &mut self.entries[i].1;
                *c = c.checked_add(count).ok_or(CountOverflow)?;
            }
            Err(i) => self.entries.insert(i, (item, count)),
        }
        Ok(())
    }

    /// Removes up to `count` copies of `item`, returning how many were removed.
    pub fn remove(&mut self, item: &T, count: Count) -> Count {
        match self.find(item) {
            Err(_) => 0,
            Ok(i) if self.entries[i].1 > count => {
                self.entries[i].1 -= count;
                count
            }
            Ok(i) => self.entries.remove(i).1,
        }
    }

    /// `self ⊕ other`. Panics on overflow; see [`Multiset::try_union`].
    pub fn union(&self, other: &Self) -> Self {
        self.try_union(other).expect("multiset count overflow")
    }

    pub fn try_union(&self, other: &Self) -> Result<Self, CountOverflow> {
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((
                        a[i].0.clone(),
                        a[i].1.checked_add(b[j].1).ok_or(CountOverflow)?,
                    ));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(Self { entries: out })
    }

    /// Truncated difference: `(m \ n)(s) = m(s) - n(s)` if positive, else 0.
    pub fn difference(&self, other: &Self) -> Self {
        let b = &other.entries;
        let mut j = 0;
        let mut out = Vec::with_capacity(self.entries.len());
        for (k, c) in &self.entries {
            while j < b.len() && b[j].0 < *k {
                j += 1;
            }
            let sub = if j < b.len() && b[j].0 == *k {
                b[j].1
            } else {
                0
            };
            if *c > sub {
                out.push((k.clone(), c - sub));
            }
        }
        Self { entries: out }
    }

    /// Exact difference, defined only when `other ⊆ self`.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        other.leq(self).then(|| self.difference(other))
    }

    /// `j · m`. Panics on overflow; see [`Multiset::try_scalar`].
    pub fn scalar(&self, j: Count) -> Self {
        self.try_scalar(j).expect("multiset count overflow")
    }

    pub fn try_scalar(&self, j: Count) -> Result<Self, CountOverflow> {
        if j == 0 {
            return Ok(Self::new());
        }
        let entries = self
            .entries
            .iter()
            .map(|(k, c)| {
                c.checked_mul(j)
                    .map(|c| (k.clone(), c))
                    .ok_or(CountOverflow)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { entries })
    }

    /// `self ⊆ other`.
    pub fn leq(&self, other: &Self) -> bool {
        let b = &other.entries;
        let mut j = 0;
        for (k, c) in &self.entries {
            while j < b.len() && b[j].0 < *k {
                j += 1;
            }
            if j == b.len() || b[j].0 != *k || b[j].1 < *c {
                return false;
            }
        }
        true
    }

    pub fn support(&self) -> BTreeSet<T> {
        self.entries.iter().map(|(k, _)| k.clone()).collect()
    }

    /// Image under a function, the multiset extension `μf`.
    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Multiset<U> {
        let mut out = Multiset::new();
        for (k, c) in &self.entries {
            out.insert(f(k), *c);
        }
        out
    }

    /// Keeps the elements satisfying `pred`.
    pub fn filter(&self, mut pred: impl FnMut(&T) -> bool) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(k, _)| pred(k))
            .cloned()
            .collect();
        Self { entries }
    }
}

impl<T: Ord> Multiset<T> {
    /// Cardinality `|m|`.
    pub fn len(&self) -> u64 {
        self.entries.iter().map(|(_, c)| u64::from(*c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct elements.
    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, Count)> + '_ {
        self.entries.iter().map(|(k, c)| (k, *c))
    }

    /// Elements repeated by multiplicity, in carrier order.
    pub fn elements(&self) -> impl Iterator<Item = &T> + '_ {
        self.entries
            .iter()
            .flat_map(|(k, c)| std::iter::repeat_n(k, *c as usize))
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Self::new();
        for x in iter {
            m.insert(x, 1);
        }
        m
    }
}

impl<T: Ord + Clone> FromIterator<(T, Count)> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = (T, Count)>>(iter: I) -> Self {
        let mut m = Self::new();
        for (x, c) in iter {
            m.insert(x, c);
        }
        m
    }
}

impl<T: Ord + fmt::Display> fmt::Display for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}:{c}")?;
        }
        f.write_str("}")
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.entries.iter().map(|(k, c)| (k, c)))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(pairs: &[(char, Count)]) -> Multiset<char> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn union_sums_componentwise() {
        assert_eq!(
            ms(&[('a', 1), ('b', 1)]).union(&ms(&[('b', 1)])),
            ms(&[('a', 1), ('b', 2)])
        );
        assert_eq!(ms(&[('a', 2)]).union(&ms(&[('a', 2)])), ms(&[('a', 4)]));
        let m = ms(&[('c', 3)]);
        assert_eq!(m.union(&Multiset::new()), m);
    }

    #[test]
    fn difference_truncates_at_zero() {
        assert_eq!(
            ms(&[('a', 3)]).difference(&ms(&[('a', 1)])),
            ms(&[('a', 2)])
        );
        assert_eq!(
            ms(&[('a', 1)]).difference(&ms(&[('a', 5)])),
            Multiset::new()
        );
        assert_eq!(
            ms(&[('a', 1), ('b', 1)]).difference(&ms(&[('b', 1)])),
            ms(&[('a', 1)])
        );
        assert_eq!(ms(&[('a', 1)]).checked_sub(&ms(&[('a', 2)])), None);
    }

    #[test]
    fn scalar_product() {
        assert_eq!(
            ms(&[('a', 1), ('b', 2)]).scalar(2),
            ms(&[('a', 2), ('b', 4)])
        );
        assert!(ms(&[('a', 7)]).scalar(0).is_empty());
        let m = ms(&[('x', 4), ('y', 1)]);
        assert_eq!(m.scalar(1), m);
    }

    #[test]
    fn inclusion_and_support() {
        assert!(ms(&[('a', 1)]).leq(&ms(&[('a', 1), ('b', 1)])));
        assert!(!ms(&[('a', 2)]).leq(&ms(&[('a', 1)])));
        assert!(Multiset::new().leq(&ms(&[('q', 1)])));
        assert_eq!(
            ms(&[('a', 3), ('b', 1)]).support(),
            ['a', 'b'].into_iter().collect()
        );
        assert!(Multiset::<char>::new().support().is_empty());
        assert_eq!(ms(&[('c', 1)]).support(), ['c'].into_iter().collect());
    }

    #[test]
    fn zero_counts_are_not_stored() {
        let mut m = ms(&[('a', 2)]);
        m.insert('b', 0);
        assert_eq!(m.distinct(), 1);
        assert_eq!(m.remove(&'a', 2), 2);
        assert!(m.is_empty());
        assert_eq!(m, Multiset::new());
    }

    #[test]
    fn overflow_is_reported() {
        let big = Multiset::singleton('a', Count::MAX);
        assert_eq!(big.try_union(&ms(&[('a', 1)])), Err(CountOverflow));
        assert_eq!(big.try_scalar(2), Err(CountOverflow));
    }

    #[test]
    fn canonical_text() {
        assert_eq!(ms(&[('b', 1), ('a', 2)]).to_string(), "{a:2, b:1}");
        assert_eq!(Multiset::<char>::new().to_string(), "{}");
    }

    fn arb() -> impl Strategy<Value = Multiset<u8>> {
        proptest::collection::vec((0u8..6, 0u32..5), 0..8).prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn union_is_commutative_monoid(a in arb(), b in arb(), c in arb()) {
            prop_assert_eq!(a.union(&b), b.union(&a));
            prop_assert_eq!(a.union(&b).union(&c), a.union(&b.union(&c)));
            prop_assert_eq!(a.union(&Multiset::new()), a.clone());
        }

        #[test]
        fn difference_undoes_union(a in arb(), b in arb()) {
            prop_assert_eq!(a.union(&b).difference(&b), a.clone());
            prop_assert!(a.leq(&a.union(&b)));
        }

        #[test]
        fn agrees_with_a_map_model(a in arb(), b in arb()) {
            use std::collections::BTreeMap;
            let model = |m: &Multiset<u8>| m.iter().map(|(k, c)| (*k, c)).collect::<BTreeMap<u8, Count>>();
            let (ma, mb) = (model(&a), model(&b));
            for k in 0u8..6 {
                let (x, y) = (ma.get(&k).copied().unwrap_or(0), mb.get(&k).copied().unwrap_or(0));
                prop_assert_eq!(a.union(&b).get(&k), x + y);
                prop_assert_eq!(a.difference(&b).get(&k), x.saturating_sub(y));
            }
            prop_assert_eq!(a.leq(&b), (0u8..6).all(|k| ma.get(&k).copied().unwrap_or(0) <= mb.get(&k).copied().unwrap_or(0)));
            prop_assert_eq!(a.cmp(&b), ma.iter().collect::<Vec<_>>().cmp(&mb.iter().collect::<Vec<_>>()));
        }

        #[test]
        fn scalar_scales_cardinality(a in arb(), j in 0u32..6) {
            prop_assert_eq!(a.scalar(j).len(), u64::from(j) * a.len());
        }
    }
}
