//! Prime event structures, event structures with simultaneity, slices of
//! an unfolding and the event structure extracted from a membrane net.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

use crate::compile::{rules_of_step, MembraneNet};
use crate::multiset::Count;
use crate::psystem::MembraneSystem;
use crate::semantics::VectorMultiRule;
use crate::unfold::{CondIx, EventIx, Node, Unfolding};
use crate::zsnet::{dot_escape, NetError, Step, TransIx, ZsNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EssError {
    #[error("more than {0} configurations")]
    Bound(usize),
    #[error("not a configuration: {0}")]
    NotAConfiguration(String),
    #[error("the unfolding bound cuts a round short")]
    Truncated,
    #[error("unknown event #{0}")]
    UnknownEvent(usize),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A prime event structure over events `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pes {
    /// `below[e] = {e' | e' ≤ e}`, including `e`.
    below: Vec<FixedBitSet>,
    conflict: Vec<FixedBitSet>,
}

impl Pes {
    /// Builds a PES from covering pairs `(e, e')` meaning `e ≤ e'` and
    /// conflict pairs. The order is closed reflexively and transitively,
    /// conflict symmetrically; heredity is not added, see [`Pes::violations`].
    pub fn new(n: usize, order: &[(usize, usize)], conflict: &[(usize, usize)]) -> Self {
        let mut below: Vec<FixedBitSet> = (0..n)
            .map(|e| {
                let mut b = FixedBitSet::with_capacity(n);
                b.insert(e);
                b
            })
            .collect();
        for &(a, b) in order {
            below[b].insert(a);
        }
        // Warshall on bitsets.
        for k in 0..n {
            let bk = below[k].clone();
            for row in below.iter_mut() {
                if row.contains(k) {
                    row.union_with(&bk);
                }
            }
        }
        let mut conf = vec![FixedBitSet::with_capacity(n); n];
        for &(a, b) in conflict {
            conf[a].insert(b);
            conf[b].insert(a);
        }
        Self {
            below,
            conflict: conf,
        }
    }

    pub fn len(&self) -> usize {
        self.below.len()
    }

    pub fn is_empty(&self) -> bool {
        self.below.is_empty()
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        self.below[b].contains(a)
    }

    pub fn below(&self, e: usize) -> &FixedBitSet {
        &self.below[e]
    }

    pub fn conflict(&self, a: usize, b: usize) -> bool {
        self.conflict[a].contains(b)
    }

    pub fn conflicts_of(&self, e: usize) -> &FixedBitSet {
        &self.conflict[e]
    }

    /// `e co e'`: distinct, unordered and not in conflict.
    pub fn co(&self, a: usize, b: usize) -> bool {
        a != b && !self.le(a, b) && !self.le(b, a) && !self.conflict(a, b)
    }

    /// Failures of antisymmetry, irreflexive symmetric conflict and
    /// conflict heredity.
    pub fn violations(&self) -> Vec<String> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            if self.conflict(a, a) {
                out.push(format!("event {a} is in conflict with itself"));
            }
            for b in 0..n {
                if a != b && self.le(a, b) && self.le(b, a) {
                    out.push(format!("events {a} and {b} precede each other"));
                }
                if self.conflict(a, b) && !self.conflict(b, a) {
                    out.push(format!("conflict {a}#{b} is not symmetric"));
                }
                if self.conflict(a, b) {
                    for c in 0..n {
                        if self.le(b, c) && !self.conflict(a, c) {
                            out.push(format!("{a}#{b} and {b}≤{c} but not {a}#{c}"));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_configuration(&self, x: &FixedBitSet) -> bool {
        x.ones()
            .all(|e| self.below[e].is_subset(x) && self.conflict[e].is_disjoint(x))
    }

    /// Every configuration, or an error past `bound` of them.
    pub fn configurations(&self, bound: usize) -> Result<Vec<FixedBitSet>, EssError> {
        let n = self.len();
        let order = self.linear_extension();
        let mut out = Vec::new();
        let mut x = FixedBitSet::with_capacity(n);
        self.configs_from(&order, 0, &mut x, &mut out, bound)?;
        out.sort_by_key(|s| (s.count_ones(..), s.ones().collect::<Vec<_>>()));
        Ok(out)
    }

    fn configs_from(
        &self,
        order: &[usize],
        k: usize,
        x: &mut FixedBitSet,
        out: &mut Vec<FixedBitSet>,
        bound: usize,
    ) -> Result<(), EssError> {
        if k == order.len() {
            if out.len() >= bound {
                return Err(EssError::Bound(bound));
            }
            out.push(x.clone());
            return Ok(());
        }
        let e = order[k];
        self.configs_from(order, k + 1, x, out, bound)?;
        let mut causes = self.below[e].clone();
        causes.set(e, false);
        if causes.is_subset(x) && self.conflict[e].is_disjoint(x) {
            x.insert(e);
            self.configs_from(order, k + 1, x, out, bound)?;
            x.set(e, false);
        }
        Ok(())
    }

    /// Events ordered so that causes come first.
    fn linear_extension(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&e| (self.below[e].count_ones(..), e));
        order
    }

    /// Covering pairs of `≤` (transitive reduction).
    pub fn covering_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for b in 0..n {
            for a in self.below[b].ones() {
                if a != b && !(0..n).any(|c| c != a && c != b && self.le(a, c) && self.le(c, b)) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Conflict pairs not inherited from a conflict between causes.
    pub fn immediate_conflicts(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in self.conflict[a].ones().filter(|&b| a < b) {
                let inherited = self.below[a].ones().any(|c| {
                    self.below[b]
                        .ones()
                        .any(|d| (c, d) != (a, b) && self.conflict(c, d))
                });
                if !inherited {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// `(E, F*, #)` restricted to the events of an occurrence net.
pub fn pes_of(unf: &Unfolding) -> Pes {
    let events: Vec<EventIx> = unf.occ.event_ixs().collect();
    restrict(unf, &events)
}

fn restrict(unf: &Unfolding, events: &[EventIx]) -> Pes {
    let n = events.len();
    let occ = &unf.occ;
    let mut below = vec![FixedBitSet::with_capacity(n); n];
    let mut conflict = vec![FixedBitSet::with_capacity(n); n];
    for (i, &a) in events.iter().enumerate() {
        for (j, &b) in events.iter().enumerate() {
            if occ.past(b).contains(a.ix()) {
                below[j].insert(i);
            }
            if occ
                .conflict(Node::Event(a), Node::Event(b))
                .expect("event of this unfolding")
            {
                conflict[i].insert(j);
            }
        }
    }
    Pes { below, conflict }
}

/// An event structure with simultaneity.
#[derive(Clone, Debug)]
pub struct Ess<L> {
    pub pes: Pes,
    /// Each class sorted, the family without duplicates.
    pub sim: Vec<Vec<usize>>,
    pub labels: Vec<L>,
}

/// A failed ESS axiom, numbered in the order they are checked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: u8,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "axiom {}: {}", self.axiom, self.message)
    }
}

impl<L: Clone> Ess<L> {
    pub fn new(pes: Pes, sim: impl IntoIterator<Item = Vec<usize>>, labels: Vec<L>) -> Self {
        let set: BTreeSet<Vec<usize>> = sim
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Self {
            pes,
            sim: set.into_iter().collect(),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.pes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pes.is_empty()
    }

    /// Checks, in order: (1) no empty class, (2) classes cover every
    /// event, (3) classes are pairwise concurrent, (4) overlapping classes
    /// do not contain each other, (5) overlapping classes differ only by
    /// conflicting events, (6) the PES itself is well formed.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let v = |axiom: u8, message: String| Violation { axiom, message };
        if self.sim.iter().any(Vec::is_empty) {
            out.push(v(1, "the empty set is a class".into()));
        }
        let covered: BTreeSet<usize> = self.sim.iter().flatten().copied().collect();
        for e in 0..self.len() {
            if !covered.contains(&e) {
                out.push(v(2, format!("event {e} is in no class")));
            }
        }
        for s in &self.sim {
            for (k, &a) in s.iter().enumerate() {
                for &b in &s[k + 1..] {
                    if !self.pes.co(a, b) {
                        out.push(v(
                            3,
                            format!("{a} and {b} share class {s:?} but are not concurrent"),
                        ));
                    }
                }
            }
        }
        for (i, s) in self.sim.iter().enumerate() {
            for t in &self.sim[i + 1..] {
                let inter: Vec<usize> = s.iter().filter(|e| t.contains(e)).copied().collect();
                if inter.is_empty() {
                    continue;
                }
                if inter.len() == s.len() || inter.len() == t.len() {
                    out.push(v(
                        4,
                        format!("overlapping classes {s:?} and {t:?} are nested"),
                    ));
                }
                for &a in s.iter().filter(|e| !t.contains(e)) {
                    for &b in t.iter().filter(|e| !s.contains(e)) {
                        if !self.pes.conflict(a, b) {
                            out.push(v(5, format!("classes {s:?} and {t:?} overlap but {a} and {b} are not in conflict")));
                        }
                    }
                }
            }
        }
        for m in self.pes.violations() {
            out.push(v(6, m));
        }
        out
    }

    /// A partition of `x` into pairwise disjoint classes with as few
    /// classes as possible, if one exists. Among equally small partitions
    /// the first in family order for the lowest uncovered event wins.
    pub fn partition(&self, x: &FixedBitSet) -> Option<Vec<usize>> {
        let mut best = None;
        let mut left = x.clone();
        self.cover(&mut left, &mut Vec::new(), &mut best);
        best
    }

    fn cover(
        &self,
        left: &mut FixedBitSet,
        chosen: &mut Vec<usize>,
        best: &mut Option<Vec<usize>>,
    ) {
        if best.as_ref().is_some_and(|b| chosen.len() + 1 > b.len()) && left.count_ones(..) > 0 {
            return;
        }
        let Some(e) = left.ones().next() else {
            if best.as_ref().is_none_or(|b| chosen.len() < b.len()) {
                *best = Some(chosen.clone());
            }
            return;
        };
        for (k, s) in self.sim.iter().enumerate() {
            if s.contains(&e) && s.iter().all(|&f| left.contains(f)) {
                for &f in s {
                    left.set(f, false);
                }
                chosen.push(k);
                self.cover(left, chosen, best);
                chosen.pop();
                for &f in s {
                    left.insert(f);
                }
            }
        }
    }

    /// Conflict-free, `≤`-closed and partitioned by classes.
    pub fn is_configuration(&self, x: &FixedBitSet) -> bool {
        self.pes.is_configuration(x) && self.partition(x).is_some()
    }

    /// Every configuration, or an error past `bound` of them.
    ///
    /// Grows conflict-free unions of disjoint classes and keeps the closed ones.
    pub fn configurations(&self, bound: usize) -> Result<Vec<FixedBitSet>, EssError> {
        let n = self.len();
        let empty = FixedBitSet::with_capacity(n);
        let mut seen: HashSet<FixedBitSet> = HashSet::from([empty.clone()]);
        let mut stack = vec![empty];
        let mut out = Vec::new();
        while let Some(x) = stack.pop() {
            if self.pes.is_configuration(&x) {
                if out.len() >= bound {
                    return Err(EssError::Bound(bound));
                }
                out.push(x.clone());
            }
            for s in &self.sim {
                if s.iter().any(|&e| x.contains(e)) {
                    continue;
                }
                if s.iter().any(|&e| !self.pes.conflicts_of(e).is_disjoint(&x)) {
                    continue;
                }
                let mut y = x.clone();
                for &e in s {
                    y.insert(e);
                }
                if seen.insert(y.clone()) {
                    if seen.len() > bound.saturating_mul(64) {
                        return Err(EssError::Bound(bound));
                    }
                    stack.push(y);
                }
            }
        }
        out.sort_by_key(|s| (s.count_ones(..), s.ones().collect::<Vec<_>>()));
        Ok(out)
    }

    /// Partition of a configuration into classes ordered by causal depth:
    /// `s` precedes `s'` when some event of `s` is below some event of `s'`,
    /// ties broken by the smallest event. Returns class indices.
    pub fn layered_partition(&self, x: &FixedBitSet) -> Result<Vec<usize>, EssError> {
        if !self.pes.is_configuration(x) {
            return Err(EssError::NotAConfiguration(
                "not conflict-free and closed".into(),
            ));
        }
        let parts = self
            .partition(x)
            .ok_or_else(|| EssError::NotAConfiguration("no partition into classes".into()))?;
        let before = |a: usize, b: usize| {
            self.sim[a]
                .iter()
                .any(|&e| self.sim[b].iter().any(|&f| e != f && self.pes.le(e, f)))
        };
        let mut placed: Vec<usize> = Vec::new();
        let mut rest = parts;
        while !rest.is_empty() {
            let ready: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|&s| !rest.iter().any(|&t| t != s && before(t, s)))
                .collect();
            let Some(&next) = ready.iter().min_by_key(|&&s| self.sim[s][0]) else {
                return Err(EssError::NotAConfiguration(
                    "classes are causally cyclic".into(),
                ));
            };
            placed.push(next);
            rest.retain(|&s| s != next);
        }
        Ok(placed)
    }
}

impl<L: Clone + Ord> Ess<L> {
    /// The classes of a configuration, by causal depth, each as the
    /// multiset of its labels.
    pub fn configuration_to_labels(
        &self,
        x: &FixedBitSet,
    ) -> Result<Vec<crate::Multiset<L>>, EssError> {
        Ok(self
            .layered_partition(x)?
            .into_iter()
            .map(|s| {
                self.sim[s]
                    .iter()
                    .map(|&e| self.labels[e].clone())
                    .collect()
            })
            .collect())
    }
}

/// Forgets simultaneity.
pub fn ess_to_pes<L>(ess: &Ess<L>) -> Pes {
    ess.pes.clone()
}

/// Singleton classes with identity labels.
pub fn pes_to_ess(pes: &Pes) -> Ess<usize> {
    Ess::new(
        pes.clone(),
        (0..pes.len()).map(|e| vec![e]),
        (0..pes.len()).collect(),
    )
}

/// Classification of a set of conditions, strongest label first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SliceClass {
    NotASlice,
    StableSlice,
    UnstableSlice,
    MaximalUnstable,
    MaximallySimultaneous,
}

fn heated_successor(unf: &Unfolding, slice: &[CondIx], fired: &[EventIx]) -> Option<Vec<CondIx>> {
    let occ = &unf.occ;
    let mut next: BTreeSet<CondIx> = slice.iter().copied().collect();
    for &e in fired {
        for b in &occ.event(e).preset {
            next.remove(b);
        }
    }
    for &e in fired {
        for &b in &occ.event(e).postset {
            if !occ.is_zero(b) {
                next.insert(b);
                continue;
            }
            let h = occ
                .consumers(b)
                .iter()
                .copied()
                .find(|h| occ.event(*h).preset.iter().all(|c| occ.is_zero(*c)))?;
            let hev = occ.event(h);
            if hev.preset != vec![b] || hev.postset.iter().any(|c| occ.is_zero(*c)) {
                return None;
            }
            next.extend(hev.postset.iter().copied());
        }
    }
    Some(next.into_iter().collect())
}

fn heats_of(unf: &Unfolding, zero: &[CondIx]) -> Option<Vec<EventIx>> {
    zero.iter()
        .map(|&b| unf.occ.consumers(b).first().copied())
        .collect()
}

/// Stable slices reachable from the initial one by stable transactions
/// inside the unfolding, found by firing maximal sets of enabled events
/// with disjoint presets and checking each against the net.
pub fn transaction_reachable_slices<P, T>(
    unf: &Unfolding,
    net: &ZsNet<P, T>,
) -> Result<BTreeSet<Vec<CondIx>>, NetError> {
    let occ = &unf.occ;
    let mut start: Vec<CondIx> = occ.initial().to_vec();
    start.sort();
    let mut all = BTreeSet::from([start.clone()]);
    let mut frontier = vec![start];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for s in &frontier {
            let marking = bitset_of(unf, s);
            let enabled = occ.enabled_events(&marking);
            for set in maximal_disjoint(unf, &enabled) {
                let zero: Vec<CondIx> = set
                    .iter()
                    .flat_map(|e| occ.event(*e).postset.iter().copied())
                    .filter(|b| occ.is_zero(*b))
                    .collect();
                let Some(heats) = heats_of(unf, &zero) else {
                    continue;
                };
                let m = unf.fold.fold_marking(s.iter().copied());
                let rule = unf.fold.fold_events(set.iter().copied());
                let heat = unf.fold.fold_events(heats.iter().copied());
                let seq: Vec<Step> = if heat.is_empty() {
                    vec![rule]
                } else {
                    vec![rule, heat]
                };
                if !net.check_stable_transaction(&m, &seq)? {
                    continue;
                }
                if let Some(s2) = heated_successor(unf, s, &set) {
                    if all.insert(s2.clone()) {
                        next.push(s2);
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(all)
}

fn bitset_of(unf: &Unfolding, s: &[CondIx]) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(unf.occ.conditions().len());
    for c in s {
        b.insert(c.ix());
    }
    b
}

/// Inclusion-maximal sets of events with pairwise disjoint presets.
fn maximal_disjoint(unf: &Unfolding, enabled: &[EventIx]) -> Vec<Vec<EventIx>> {
    fn go(
        unf: &Unfolding,
        enabled: &[EventIx],
        k: usize,
        used: &mut HashSet<CondIx>,
        chosen: &mut Vec<EventIx>,
        out: &mut Vec<Vec<EventIx>>,
    ) {
        if k == enabled.len() {
            let maximal = enabled.iter().all(|e| {
                chosen.contains(e) || unf.occ.event(*e).preset.iter().any(|b| used.contains(b))
            });
            if maximal && !chosen.is_empty() {
                out.push(chosen.clone());
            }
            return;
        }
        let e = enabled[k];
        let pre = &unf.occ.event(e).preset;
        if pre.iter().all(|b| !used.contains(b)) {
            used.extend(pre.iter().copied());
            chosen.push(e);
            go(unf, enabled, k + 1, used, chosen, out);
            chosen.pop();
            for b in pre {
                used.remove(b);
            }
        }
        go(unf, enabled, k + 1, used, chosen, out);
    }
    let mut out = Vec::new();
    go(
        unf,
        enabled,
        0,
        &mut HashSet::new(),
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Classifies a set of conditions of the unfolding of `net`.
pub fn classify_slice<P, T>(
    unf: &Unfolding,
    net: &ZsNet<P, T>,
    a: &[CondIx],
) -> Result<SliceClass, NetError> {
    let occ = &unf.occ;
    let mut a: Vec<CondIx> = a.to_vec();
    a.sort();
    a.dedup();
    if a.iter().any(|c| c.ix() >= occ.conditions().len()) || !occ.is_slice(&a) {
        return Ok(SliceClass::NotASlice);
    }
    let zero: Vec<CondIx> = a.iter().copied().filter(|b| occ.is_zero(*b)).collect();
    if zero.is_empty() {
        return Ok(SliceClass::StableSlice);
    }
    let producers: BTreeSet<EventIx> = zero.iter().filter_map(|b| occ.producer(*b)).collect();
    let Some(heats) = heats_of(unf, &zero) else {
        return Ok(SliceClass::UnstableSlice);
    };
    let mut before: BTreeSet<CondIx> = a.iter().copied().filter(|b| !occ.is_zero(*b)).collect();
    for e in &producers {
        before.extend(occ.event(*e).preset.iter().copied());
    }
    let before: Vec<CondIx> = before.into_iter().collect();
    let m = unf.fold.fold_marking(before.iter().copied());
    let rule = unf.fold.fold_events(producers.iter().copied());
    let heat = unf.fold.fold_events(heats.iter().copied());
    if !net.is_stable(&m) || !net.check_stable_transaction(&m, &[rule, heat])? {
        return Ok(SliceClass::UnstableSlice);
    }
    if transaction_reachable_slices(unf, net)?.contains(&before) {
        Ok(SliceClass::MaximallySimultaneous)
    } else {
        Ok(SliceClass::MaximalUnstable)
    }
}

/// A class of simultaneous events with the stable slice it fired from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimClass {
    pub events: Vec<EventIx>,
    pub slice: Vec<CondIx>,
    pub round: u32,
}

#[derive(Clone, Debug, Default)]
pub struct SimClasses {
    /// One entry per distinct event set, with its first provenance.
    pub classes: Vec<SimClass>,
    /// Every stable slice reached, in breadth-first order from the initial one.
    pub slices: Vec<Vec<CondIx>>,
    /// The event budget cut the unfolding short.
    pub truncated: bool,
}

/// Replays every stable transaction of the net, under every assignment of
/// individual tokens, from every stable slice reachable by transactions,
/// as long as the unfolding holds the events. Transactions reaching past
/// the unfolding's bound are skipped.
///
/// A class keeps the events that produce zero conditions; transactions of
/// consume-only rules contribute nothing.
pub fn sim_classes<P, T>(unf: &Unfolding, net: &ZsNet<P, T>) -> Result<SimClasses, NetError> {
    net.heating_shape()?;
    let occ = &unf.occ;
    let mut start: Vec<CondIx> = occ.initial().to_vec();
    start.sort();
    let mut out = SimClasses {
        truncated: unf.truncated,
        ..Default::default()
    };
    let mut seen_slices: HashSet<Vec<CondIx>> = HashSet::from([start.clone()]);
    let mut seen: HashSet<Vec<EventIx>> = HashSet::new();
    let mut frontier = vec![start];
    let mut round = 0;
    while !frontier.is_empty() {
        round += 1;
        let mut next = Vec::new();
        for s in &frontier {
            let m = unf.fold.fold_marking(s.iter().copied());
            let enabled = occ.enabled_events(&bitset_of(unf, s));
            for tx in net.enumerate_stable_transactions(&m)? {
                for set in assign(unf, &enabled, &tx.rule_step) {
                    let Some(s2) = heated_successor(unf, s, &set) else {
                        continue;
                    };
                    debug_assert_eq!(unf.fold.fold_marking(s2.iter().copied()), tx.target);
                    let mut class: Vec<EventIx> = set
                        .iter()
                        .copied()
                        .filter(|e| occ.event(*e).postset.iter().any(|b| occ.is_zero(*b)))
                        .collect();
                    class.sort();
                    if !class.is_empty() && seen.insert(class.clone()) {
                        out.classes.push(SimClass {
                            events: class,
                            slice: s.clone(),
                            round,
                        });
                    }
                    if seen_slices.insert(s2.clone()) {
                        next.push(s2);
                    }
                }
            }
        }
        out.slices.append(&mut frontier);
        frontier = next;
    }
    Ok(out)
}

/// Lifts a rule step fired at a stable slice to the unfolding: every
/// individual-token assignment, with the stable slice reached once all
/// produced zero conditions are heated. Assignments the unfolding cannot
/// heat are left out.
pub fn replay_step(
    unf: &Unfolding,
    slice: &[CondIx],
    rule_step: &Step,
) -> Vec<(Vec<EventIx>, Vec<CondIx>)> {
    let enabled = unf.occ.enabled_events(&bitset_of(unf, slice));
    assign(unf, &enabled, rule_step)
        .into_iter()
        .filter_map(|set| heated_successor(unf, slice, &set).map(|s2| (set, s2)))
        .collect()
}

/// Sets of enabled events with disjoint presets whose transitions make up `step`.
fn assign(unf: &Unfolding, enabled: &[EventIx], step: &Step) -> Vec<Vec<EventIx>> {
    let wanted: Vec<(TransIx, Count)> = step.iter().map(|(t, c)| (*t, c)).collect();
    let by_t: Vec<Vec<EventIx>> = wanted
        .iter()
        .map(|(t, _)| {
            enabled
                .iter()
                .copied()
                .filter(|e| unf.fold.eta[e.ix()] == *t)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    assign_from(
        unf,
        &wanted,
        &by_t,
        0,
        0,
        0,
        &mut HashSet::new(),
        &mut Vec::new(),
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn assign_from(
    unf: &Unfolding,
    wanted: &[(TransIx, Count)],
    by_t: &[Vec<EventIx>],
    k: usize,
    taken: Count,
    from: usize,
    used: &mut HashSet<CondIx>,
    chosen: &mut Vec<EventIx>,
    out: &mut Vec<Vec<EventIx>>,
) {
    if k == wanted.len() {
        out.push(chosen.clone());
        return;
    }
    if taken == wanted[k].1 {
        assign_from(unf, wanted, by_t, k + 1, 0, 0, used, chosen, out);
        return;
    }
    for idx in from..by_t[k].len() {
        let e = by_t[k][idx];
        let pre = &unf.occ.event(e).preset;
        if pre.iter().all(|b| !used.contains(b)) {
            used.extend(pre.iter().copied());
            chosen.push(e);
            assign_from(unf, wanted, by_t, k, taken + 1, idx + 1, used, chosen, out);
            chosen.pop();
            for b in pre {
                used.remove(b);
            }
        }
    }
}

/// The event structure of a membrane unfolding, with unfolding events
/// kept alongside.
#[derive(Clone, Debug)]
pub struct UnfoldingEss {
    pub ess: Ess<TransIx>,
    /// Unfolding event of each ESS event.
    pub events: Vec<EventIx>,
    /// Provenance of each class, aligned with `ess.sim`.
    pub provenance: Vec<SimClass>,
    pub truncated: bool,
}

impl UnfoldingEss {
    pub fn index_of(&self, e: EventIx) -> Option<usize> {
        self.events.binary_search(&e).ok()
    }

    /// ESS events of a set of unfolding events; `None` if one is not an ESS event.
    pub fn lift(&self, events: &[EventIx]) -> Option<FixedBitSet> {
        let mut x = FixedBitSet::with_capacity(self.events.len());
        for e in events {
            x.insert(self.index_of(*e)?);
        }
        Some(x)
    }
}

/// Events producing zero conditions, ordered and in conflict as in the
/// unfolding, classes from [`sim_classes`], labelled by transition.
pub fn ess_of<P, T>(unf: &Unfolding, net: &ZsNet<P, T>) -> Result<UnfoldingEss, NetError> {
    let occ = &unf.occ;
    let events: Vec<EventIx> = occ
        .event_ixs()
        .filter(|e| occ.event(*e).postset.iter().any(|b| occ.is_zero(*b)))
        .collect();
    let pes = restrict(unf, &events);
    let sims = sim_classes(unf, net)?;
    let index = |e: EventIx| {
        events
            .binary_search(&e)
            .expect("class events produce zero conditions")
    };
    let mut by_set: BTreeMap<Vec<usize>, SimClass> = BTreeMap::new();
    for c in sims.classes {
        let mut s: Vec<usize> = c.events.iter().map(|e| index(*e)).collect();
        s.sort_unstable();
        by_set.entry(s).or_insert(c);
    }
    let labels = events.iter().map(|e| unf.fold.eta[e.ix()]).collect();
    let ess = Ess::new(pes, by_set.keys().cloned(), labels);
    let provenance = ess.sim.iter().map(|s| by_set[s].clone()).collect();
    Ok(UnfoldingEss {
        ess,
        events,
        provenance,
        truncated: sims.truncated || unf.truncated,
    })
}

/// The vector multi-rules of a configuration, one per class, by causal depth.
pub fn configuration_to_rules(
    sys: &MembraneSystem,
    net: &MembraneNet,
    u: &UnfoldingEss,
    x: &FixedBitSet,
) -> Result<Vec<VectorMultiRule>, EssError> {
    Ok(u.ess
        .configuration_to_labels(x)?
        .iter()
        .map(|step| rules_of_step(sys, net, step))
        .collect())
}

impl UnfoldingEss {
    pub fn to_export<P: fmt::Display, T: fmt::Display>(
        &self,
        net: &ZsNet<P, T>,
        unf: &Unfolding,
    ) -> EssExport {
        let id = |i: usize| format!("e{}", self.events[i].0);
        let violations = self.ess.violations();
        EssExport {
            truncated: self.truncated,
            events: (0..self.events.len())
                .map(|i| EssEventExport {
                    id: id(i),
                    label: net.transition(self.ess.labels[i]).to_string(),
                    layer: unf.occ.event(self.events[i]).layer,
                })
                .collect(),
            order: self
                .ess
                .pes
                .covering_pairs()
                .into_iter()
                .map(|(a, b)| [id(a), id(b)])
                .collect(),
            conflicts: self
                .ess
                .pes
                .immediate_conflicts()
                .into_iter()
                .map(|(a, b)| [id(a), id(b)])
                .collect(),
            conflict_hereditary: !violations.iter().any(|v| v.axiom == 6),
            sim: self
                .ess
                .sim
                .iter()
                .zip(&self.provenance)
                .map(|(s, p)| SimExport {
                    events: s.iter().map(|&i| id(i)).collect(),
                    round: p.round,
                    slice: p.slice.iter().map(|c| format!("b{}", c.0)).collect(),
                })
                .collect(),
            violations,
        }
    }

    /// Events as boxes, causality solid, immediate conflict dashed, each
    /// class a dotted node joined to its members.
    pub fn to_dot<P: fmt::Display, T: fmt::Display>(&self, net: &ZsNet<P, T>) -> String {
        let mut out = String::from("digraph ess {\n  rankdir=TB;\n");
        for (i, e) in self.events.iter().enumerate() {
            let label = dot_escape(&net.transition(self.ess.labels[i]).to_string());
            out.push_str(&format!("  e{} [shape=box, label=\"{label}\"];\n", e.0));
        }
        for (a, b) in self.ess.pes.covering_pairs() {
            out.push_str(&format!(
                "  e{} -> e{};\n",
                self.events[a].0, self.events[b].0
            ));
        }
        for (a, b) in self.ess.pes.immediate_conflicts() {
            out.push_str(&format!(
                "  e{} -> e{} [style=dashed, dir=none, constraint=false, label=\"#\"];\n",
                self.events[a].0, self.events[b].0
            ));
        }
        for (k, s) in self.ess.sim.iter().enumerate() {
            out.push_str(&format!(
                "  sim{k} [shape=ellipse, style=dotted, label=\"sim {k}\"];\n"
            ));
            for &i in s {
                out.push_str(&format!(
                    "  sim{k} -> e{} [style=dotted, arrowhead=none, constraint=false];\n",
                    self.events[i].0
                ));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EssExport {
    pub truncated: bool,
    pub events: Vec<EssEventExport>,
    pub order: Vec<[String; 2]>,
    pub conflicts: Vec<[String; 2]>,
    pub conflict_hereditary: bool,
    pub sim: Vec<SimExport>,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EssEventExport {
    pub id: String,
    pub label: String,
    pub layer: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimExport {
    pub events: Vec<String>,
    pub round: u32,
    pub slice: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::{compile, transition_named};
    use crate::fixtures;
    use crate::psystem::parse;
    use crate::unfold::{unfold, UnfoldBounds};

    fn setup(text: &str, layers: u32) -> (MembraneNet, Unfolding) {
        let net = compile(&parse(text).unwrap());
        let unf = unfold(&net, UnfoldBounds::layers(layers));
        (net, unf)
    }

    fn labelled(unf: &Unfolding, net: &MembraneNet, name: &str) -> Vec<EventIx> {
        let t = transition_named(net, name).unwrap();
        unf.occ
            .event_ixs()
            .filter(|e| unf.fold.eta[e.ix()] == t)
            .collect()
    }

    fn class_labels(u: &UnfoldingEss, net: &MembraneNet) -> BTreeSet<Vec<String>> {
        u.ess
            .sim
            .iter()
            .map(|s| {
                let mut v: Vec<String> = s
                    .iter()
                    .map(|&i| net.transition(u.ess.labels[i]).to_string())
                    .collect();
                v.sort();
                v
            })
            .collect()
    }

    #[test]
    fn pes_closure_and_heredity_check() {
        let p = Pes::new(3, &[(0, 1), (1, 2)], &[]);
        assert!(p.le(0, 2));
        assert!(p.violations().is_empty());
        let q = Pes::new(3, &[(1, 2)], &[(0, 1)]);
        assert_eq!(q.violations(), vec!["0#1 and 1≤2 but not 0#2".to_string()]);
        let r = Pes::new(2, &[(0, 1), (1, 0)], &[]);
        assert!(!r.violations().is_empty());
    }

    #[test]
    fn pes_configurations_small() {
        // 0 ≤ 1, 0 # 2: {}, {0}, {0,1}, {2}.
        let p = Pes::new(3, &[(0, 1)], &[(0, 2), (1, 2)]);
        let cs = p.configurations(100).unwrap();
        let as_vecs: Vec<Vec<usize>> = cs.iter().map(|c| c.ones().collect()).collect();
        assert_eq!(as_vecs, vec![vec![], vec![0], vec![2], vec![0, 1]]);
        assert_eq!(p.configurations(2), Err(EssError::Bound(2)));
    }

    #[test]
    fn pes_of_pi1() {
        let (net, unf) = setup(fixtures::PI1, 2);
        let pes = pes_of(&unf);
        assert!(pes.violations().is_empty());
        let first = labelled(&unf, &net, "t_1^r1")[0];
        let bz = unf.occ.event(first).postset[0];
        let heat = unf.occ.consumers(bz)[0];
        let b1 = unf.occ.event(heat).postset[0];
        let second = unf.occ.consumers(b1)[0];
        assert!(pes.le(first.ix(), second.ix()));
        let (_, empty) = setup(fixtures::PI1, 0);
        assert!(pes_of(&empty).is_empty());
    }

    #[test]
    fn intro2_r1_events_sharing_tokens_conflict() {
        let (net, unf) = setup(fixtures::INTRO2, 2);
        let pes = pes_of(&unf);
        let r1 = labelled(&unf, &net, "t_1^r1");
        assert_eq!(r1.len(), 4);
        for &a in &r1 {
            for &b in &r1 {
                let share = unf
                    .occ
                    .event(a)
                    .preset
                    .iter()
                    .any(|c| unf.occ.event(b).preset.contains(c));
                assert_eq!(pes.conflict(a.ix(), b.ix()), a != b && share);
            }
        }
    }

    #[test]
    fn pi1_first_round_classes() {
        let (net, unf) = setup(fixtures::PI1, 1);
        let u = ess_of(&unf, &net).unwrap();
        let expect: BTreeSet<Vec<String>> = [vec!["t_1^r1", "t_1^r2"], vec!["t_1^r1", "t_1^r3"]]
            .into_iter()
            .map(|v| v.into_iter().map(String::from).collect())
            .collect();
        assert_eq!(class_labels(&u, &net), expect);
        let r2 = u.index_of(labelled(&unf, &net, "t_1^r2")[0]).unwrap();
        let r3 = u.index_of(labelled(&unf, &net, "t_1^r3")[0]).unwrap();
        assert!(u.ess.pes.conflict(r2, r3));
        assert!(u.ess.violations().is_empty());
    }

    #[test]
    fn intro1_single_class_of_three() {
        let (net, unf) = setup(fixtures::INTRO1, 1);
        let u = ess_of(&unf, &net).unwrap();
        assert_eq!(u.ess.sim.len(), 1);
        assert_eq!(u.ess.sim[0].len(), 3);
        assert!(!u.truncated);
    }

    #[test]
    fn intro2_concurrent_but_not_simultaneous() {
        let (net, unf) = setup(fixtures::INTRO2, 2);
        let u = ess_of(&unf, &net).unwrap();
        let r1 = labelled(&unf, &net, "t_1^r1");
        let r2 = labelled(&unf, &net, "t_2^r2");
        let witness = r1.iter().any(|&a| {
            r2.iter().any(|&b| {
                let (i, j) = (u.index_of(a).unwrap(), u.index_of(b).unwrap());
                u.ess.pes.co(i, j) && !u.ess.sim.iter().any(|s| s.contains(&i) && s.contains(&j))
            })
        });
        assert!(witness);
    }

    #[test]
    fn no_rules_gives_empty_ess() {
        let text = "psystem { objects: a; membrane 1 { init: a; } }";
        let (net, unf) = setup(text, 3);
        let u = ess_of(&unf, &net).unwrap();
        assert!(u.ess.is_empty());
        assert!(u.ess.sim.is_empty());
        assert!(u.ess.violations().is_empty());
        assert_eq!(u.ess.configurations(10).unwrap().len(), 1);
    }

    #[test]
    fn halting_slice_contributes_nothing() {
        let text = "psystem { objects: a b; membrane 1 { init: a; rule r: a -> (b, here); } }";
        let (net, unf) = setup(text, 3);
        let sims = sim_classes(&unf, &net).unwrap();
        assert_eq!(sims.classes.len(), 1);
        assert_eq!(sims.slices.len(), 2);
    }

    #[test]
    fn slice_classification() {
        let (net, unf) = setup(fixtures::PI1, 2);
        let occ = &unf.occ;
        assert_eq!(
            classify_slice(&unf, &net, occ.initial()).unwrap(),
            SliceClass::StableSlice
        );
        let r1 = labelled(&unf, &net, "t_1^r1")[0];
        let bz = occ.event(r1).postset[0];
        let b1 = occ.event(occ.consumers(bz)[0]).postset[0];
        assert_eq!(
            classify_slice(&unf, &net, &[bz, b1]).unwrap(),
            SliceClass::NotASlice
        );

        // Both r2 occurrences at once: a transaction at two b tokens, which
        // no sequence of transactions reaches.
        let r2 = labelled(&unf, &net, "t_1^r2");
        let late = r2
            .iter()
            .copied()
            .find(|e| occ.event(*e).preset == vec![b1])
            .unwrap();
        let early = r2
            .iter()
            .copied()
            .find(|e| occ.event(*e).preset == vec![occ.initial()[1]])
            .unwrap();
        let a = vec![occ.event(late).postset[0], occ.event(early).postset[0]];
        assert_eq!(
            classify_slice(&unf, &net, &a).unwrap(),
            SliceClass::MaximalUnstable
        );

        // r1 with r3 from the initial slice.
        let r3 = labelled(&unf, &net, "t_1^r3")[0];
        let both = vec![bz, occ.event(r3).postset[0]];
        assert_eq!(
            classify_slice(&unf, &net, &both).unwrap(),
            SliceClass::MaximallySimultaneous
        );
        // r1 alone with the untouched b: not maximal.
        assert_eq!(
            classify_slice(&unf, &net, &[bz, occ.initial()[1]]).unwrap(),
            SliceClass::UnstableSlice
        );
    }

    /// Classes from replay agree with the classes read off every
    /// maximally simultaneous slice.
    #[test]
    fn replay_agrees_with_slice_oracle() {
        for text in [fixtures::PI1, fixtures::INTRO1, fixtures::INTRO2] {
            let (net, unf) = setup(text, 2);
            let occ = &unf.occ;
            let mut from_slices: BTreeSet<Vec<EventIx>> = BTreeSet::new();
            let conds: Vec<CondIx> = occ.cond_ixs().collect();
            let mut stack: Vec<(Vec<CondIx>, usize)> = vec![(Vec::new(), 0)];
            while let Some((set, from)) = stack.pop() {
                if set.iter().any(|b| occ.is_zero(*b))
                    && classify_slice(&unf, &net, &set).unwrap()
                        == SliceClass::MaximallySimultaneous
                {
                    let class: BTreeSet<EventIx> = set
                        .iter()
                        .filter(|b| occ.is_zero(**b))
                        .filter_map(|b| occ.producer(*b))
                        .collect();
                    from_slices.insert(class.into_iter().collect());
                }
                for (k, &d) in conds.iter().enumerate().skip(from) {
                    if set.iter().all(|&c| occ.co_conditions(c, d)) {
                        let mut s2 = set.clone();
                        s2.push(d);
                        stack.push((s2, k + 1));
                    }
                }
            }
            let replay: BTreeSet<Vec<EventIx>> = sim_classes(&unf, &net)
                .unwrap()
                .classes
                .into_iter()
                .map(|c| c.events)
                .collect();
            assert_eq!(replay, from_slices);
        }
    }

    #[test]
    fn ess_configurations_on_pi1() {
        let (net, unf) = setup(fixtures::PI1, 1);
        let u = ess_of(&unf, &net).unwrap();
        let r1 = labelled(&unf, &net, "t_1^r1")[0];
        let r3 = labelled(&unf, &net, "t_1^r3")[0];
        let confs = u.ess.configurations(1000).unwrap();
        assert!(confs.contains(&u.lift(&[r1, r3]).unwrap()));
        assert!(confs.contains(&FixedBitSet::with_capacity(u.ess.len())));
        assert!(!u.ess.is_configuration(&u.lift(&[r1]).unwrap()));
        let pes_confs: HashSet<FixedBitSet> = u
            .ess
            .pes
            .configurations(1000)
            .unwrap()
            .into_iter()
            .collect();
        assert!(confs.iter().all(|c| pes_confs.contains(c)));
    }

    #[test]
    fn singleton_embedding_round_trips() {
        let (_, unf) = setup(fixtures::INTRO2, 2);
        let pes = pes_of(&unf);
        let ess = pes_to_ess(&pes);
        assert!(ess.violations().is_empty());
        assert_eq!(ess_to_pes(&ess), pes);
        assert_eq!(
            ess.configurations(10_000).unwrap(),
            pes.configurations(10_000).unwrap()
        );
    }

    #[test]
    fn configuration_to_rules_orders_by_depth() {
        let sys = parse(fixtures::INTRO1).unwrap();
        let net = compile(&sys);
        let unf = unfold(&net, UnfoldBounds::layers(2));
        let u = ess_of(&unf, &net).unwrap();
        let all = FixedBitSet::with_capacity(u.ess.len());
        assert!(configuration_to_rules(&sys, &net, &u, &all)
            .unwrap()
            .is_empty());
        // The largest configuration: both r2, r3, then one r1.
        let confs = u.ess.configurations(10_000).unwrap();
        let full = confs.last().unwrap();
        let steps = configuration_to_rules(&sys, &net, &u, full).unwrap();
        let text: Vec<String> = steps.iter().map(|v| v.to_string()).collect();
        assert_eq!(text, vec!["({}, {r2:2, r3:1})", "({r1:1}, {})"]);
    }

    #[test]
    fn exports_are_consistent() {
        let (net, unf) = setup(fixtures::PI1, 2);
        let u = ess_of(&unf, &net).unwrap();
        let ex = u.to_export(&net, &unf);
        assert_eq!(ex.events.len(), u.ess.len());
        assert_eq!(ex.sim.len(), u.ess.sim.len());
        let dot = u.to_dot(&net);
        assert!(dot.starts_with("digraph ess {"));
        assert_eq!(
            dot.matches("style=dotted, label=\"sim").count(),
            u.ess.sim.len()
        );
    }
}
