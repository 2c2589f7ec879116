//! Occurrence nets and the individual-token unfolding of a zero-safe net.
//!
//! Conditions are individual tokens: an initial token `(m, s, i)` or the
//! `i`-th token an event deposits on place `s`. An event is a pair of a
//! pairwise concurrent set of conditions and a transition whose preset they
//! fold onto.
//!
//! Construction adds events in order of (layer, transition, preset). An
//! event consuming a stable condition sits one layer above the latest
//! producer of its preset, while heating-like events consuming only zero
//! conditions stay in the layer of their producer. Layers measure causal
//! depth in transactions, not rounds of a computation: an event of layer
//! `k` may fire in a later round when its inputs wait.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};
use std::fmt;

use fixedbitset::FixedBitSet;
use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::zsnet::{dot_escape, Marking, PlaceIx, Step, TransIx, ZsNet};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CondIx(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EventIx(pub u32);

impl CondIx {
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

impl EventIx {
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Origin {
    Initial,
    Produced(EventIx),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Condition {
    pub origin: Origin,
    pub place: PlaceIx,
    /// Index among the tokens of `place` with the same origin.
    pub copy: u32,
    pub zero: bool,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Event {
    /// Sorted.
    pub preset: Vec<CondIx>,
    pub transition: TransIx,
    pub postset: Vec<CondIx>,
    pub layer: u32,
}

/// A node of an occurrence net.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Node {
    Cond(CondIx),
    Event(EventIx),
}

/// An acyclic safe net with unbranched condition presets, together with
/// its causality, conflict and concurrency relations.
#[derive(Clone, Debug, Default)]
pub struct OccurrenceNet {
    conditions: Vec<Condition>,
    events: Vec<Event>,
    initial: Vec<CondIx>,
    consumers: Vec<Vec<EventIx>>,
    by_place: HashMap<PlaceIx, Vec<CondIx>>,
    /// Conditions concurrent with each condition.
    co: Vec<FixedBitSet>,
    /// Events `e' ≤ e`, including `e`.
    past: Vec<FixedBitSet>,
    /// Events in immediate conflict with some event of the past.
    conflict_reach: Vec<FixedBitSet>,
}

/// The folding morphism `(η, β)` onto the unfolded net.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldingMorphism {
    pub eta: Vec<TransIx>,
    pub beta: Vec<PlaceIx>,
}

impl FoldingMorphism {
    /// `μβ(A)`.
    pub fn fold_marking(&self, conditions: impl IntoIterator<Item = CondIx>) -> Marking {
        conditions.into_iter().map(|c| self.beta[c.ix()]).collect()
    }

    /// `μη(X)`.
    pub fn fold_events(&self, events: impl IntoIterator<Item = EventIx>) -> Step {
        events.into_iter().map(|e| self.eta[e.ix()]).collect()
    }
}

fn bits(len: usize, items: impl IntoIterator<Item = usize>) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(len);
    for i in items {
        b.grow(i + 1);
        b.insert(i);
    }
    b
}

impl OccurrenceNet {
    /// A net consisting of the given initial conditions.
    fn with_initial(initial: Vec<(PlaceIx, u32, bool)>) -> Self {
        let mut on = Self::default();
        let n = initial.len();
        for (k, (place, copy, zero)) in initial.into_iter().enumerate() {
            on.conditions.push(Condition {
                origin: Origin::Initial,
                place,
                copy,
                zero,
            });
            on.initial.push(CondIx(k as u32));
            on.consumers.push(Vec::new());
            on.by_place.entry(place).or_default().push(CondIx(k as u32));
            let mut co = bits(n, 0..n);
            co.set(k, false);
            on.co.push(co);
        }
        on
    }

    /// Appends event `(preset, transition)` and its postset conditions.
    ///
    /// `produce` lists, per place, how many conditions the event deposits.
    fn push_event(
        &mut self,
        preset: Vec<CondIx>,
        transition: TransIx,
        layer: u32,
        produce: &[(PlaceIx, u32, bool)],
    ) -> EventIx {
        let e = EventIx(self.events.len() as u32);
        let mut past = FixedBitSet::with_capacity(self.events.len() + 1);
        for &b in &preset {
            if let Origin::Produced(p) = self.conditions[b.ix()].origin {
                past.union_with(&self.past[p.ix()]);
            }
            self.consumers[b.ix()].push(e);
        }
        past.grow(e.ix() + 1);
        past.insert(e.ix());
        self.past.push(past);

        // Conditions concurrent with every preset condition stay concurrent
        // with the new ones; siblings are concurrent with each other.
        let first = self.conditions.len();
        let total = first + produce.iter().map(|(_, k, _)| *k as usize).sum::<usize>();
        let mut common = bits(total, 0..first);
        for &b in &preset {
            let mut cb = self.co[b.ix()].clone();
            cb.grow(total);
            common.intersect_with(&cb);
        }
        let mut postset = Vec::new();
        for &(place, count, zero) in produce {
            for copy in 0..count {
                let c = CondIx(self.conditions.len() as u32);
                self.conditions.push(Condition {
                    origin: Origin::Produced(e),
                    place,
                    copy,
                    zero,
                });
                self.consumers.push(Vec::new());
                self.by_place.entry(place).or_default().push(c);
                postset.push(c);
            }
        }
        for &c in &postset {
            let mut co = common.clone();
            for &d in &postset {
                if d != c {
                    co.insert(d.ix());
                }
            }
            for other in common.ones() {
                self.co[other].grow(total);
                self.co[other].insert(c.ix());
            }
            self.co.push(co);
        }
        self.events.push(Event {
            preset,
            transition,
            postset,
            layer,
        });
        e
    }

    /// Computes the conflict relation once all events are present.
    fn finalize(&mut self) {
        let n = self.events.len();
        let mut clash = vec![FixedBitSet::with_capacity(n); n];
        for cs in &self.consumers {
            for &a in cs {
                for &b in cs {
                    if a != b {
                        clash[a.ix()].insert(b.ix());
                    }
                }
            }
        }
        self.conflict_reach = Vec::with_capacity(n);
        for (e, own) in clash.iter().enumerate() {
            let mut r = FixedBitSet::with_capacity(n);
            for p in self.past[e].ones() {
                if p == e {
                    r.union_with(own);
                } else {
                    r.union_with(&self.conflict_reach[p]);
                }
            }
            self.conflict_reach.push(r);
        }
        for p in &mut self.past {
            p.grow(n);
        }
        for c in &mut self.co {
            c.grow(self.conditions.len());
        }
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn condition(&self, c: CondIx) -> &Condition {
        &self.conditions[c.ix()]
    }

    pub fn event(&self, e: EventIx) -> &Event {
        &self.events[e.ix()]
    }

    pub fn initial(&self) -> &[CondIx] {
        &self.initial
    }

    pub fn consumers(&self, c: CondIx) -> &[EventIx] {
        &self.consumers[c.ix()]
    }

    pub fn producer(&self, c: CondIx) -> Option<EventIx> {
        match self.conditions[c.ix()].origin {
            Origin::Initial => None,
            Origin::Produced(e) => Some(e),
        }
    }

    pub fn event_ixs(&self) -> impl Iterator<Item = EventIx> {
        (0..self.events.len() as u32).map(EventIx)
    }

    pub fn cond_ixs(&self) -> impl Iterator<Item = CondIx> {
        (0..self.conditions.len() as u32).map(CondIx)
    }

    pub fn is_zero(&self, c: CondIx) -> bool {
        self.conditions[c.ix()].zero
    }

    /// Events `e' ≤ e`, including `e` itself.
    pub fn past(&self, e: EventIx) -> &FixedBitSet {
        &self.past[e.ix()]
    }

    /// Events in the causal history of a node, `{e | e F* x}`.
    pub fn history(&self, x: Node) -> FixedBitSet {
        match x {
            Node::Event(e) => self.past[e.ix()].clone(),
            Node::Cond(c) => match self.producer(c) {
                Some(e) => self.past[e.ix()].clone(),
                None => FixedBitSet::with_capacity(self.events.len()),
            },
        }
    }

    fn conflict_closure(&self, x: Node) -> FixedBitSet {
        let mut r = FixedBitSet::with_capacity(self.events.len());
        let e = match x {
            Node::Event(e) => Some(e),
            Node::Cond(c) => self.producer(c),
        };
        if let Some(e) = e {
            r.union_with(&self.conflict_reach[e.ix()]);
        }
        r
    }

    fn check(&self, x: Node) -> Result<(), UnknownNode> {
        let ok = match x {
            Node::Cond(c) => c.ix() < self.conditions.len(),
            Node::Event(e) => e.ix() < self.events.len(),
        };
        if ok {
            Ok(())
        } else {
            Err(UnknownNode(x))
        }
    }

    /// `x F+ y`.
    pub fn causally_before(&self, x: Node, y: Node) -> Result<bool, UnknownNode> {
        self.check(x)?;
        self.check(y)?;
        let hy = self.history(y);
        Ok(match x {
            Node::Event(e) => hy.contains(e.ix()) && x != y,
            Node::Cond(c) => self.consumers[c.ix()].iter().any(|e| hy.contains(e.ix())),
        })
    }

    /// `x # y`: some event in the history of `x` and some event in the
    /// history of `y` are distinct and share a preset condition.
    pub fn conflict(&self, x: Node, y: Node) -> Result<bool, UnknownNode> {
        self.check(x)?;
        self.check(y)?;
        let hy = self.history(y);
        Ok(!self.conflict_closure(x).is_disjoint(&hy))
    }

    /// Neither ordered nor in conflict; irreflexive.
    pub fn concurrent(&self, x: Node, y: Node) -> Result<bool, UnknownNode> {
        Ok(x != y
            && !self.causally_before(x, y)?
            && !self.causally_before(y, x)?
            && !self.conflict(x, y)?)
    }

    /// Fast concurrency test between conditions, from the incremental relation.
    pub fn co_conditions(&self, a: CondIx, b: CondIx) -> bool {
        self.co[a.ix()].contains(b.ix())
    }

    /// Conditions concurrent with `c`.
    pub fn co_of(&self, c: CondIx) -> &FixedBitSet {
        &self.co[c.ix()]
    }

    /// `co(A)`: pairwise concurrent conditions; causal pasts are always finite here.
    pub fn co_set(&self, a: &[CondIx]) -> bool {
        a.iter().enumerate().all(|(k, &x)| {
            a[k + 1..]
                .iter()
                .all(|&y| x != y && self.co_conditions(x, y))
        })
    }

    /// Whether a set of events is causally closed and conflict-free.
    pub fn is_configuration(&self, x: &FixedBitSet) -> bool {
        x.ones()
            .all(|e| self.past[e].is_subset(x) && self.conflict_reach[e].is_disjoint(x))
    }

    /// The marking `(m ∪ X•) \ •X` reached by a configuration.
    pub fn cut(&self, x: &FixedBitSet) -> Option<FixedBitSet> {
        if !self.is_configuration(x) {
            return None;
        }
        let mut m = bits(self.conditions.len(), self.initial.iter().map(|c| c.ix()));
        for e in x.ones() {
            for c in &self.events[e].postset {
                m.insert(c.ix());
            }
        }
        for e in x.ones() {
            for c in &self.events[e].preset {
                m.set(c.ix(), false);
            }
        }
        Some(m)
    }

    /// A configuration whose cut is exactly `a`, if any.
    ///
    /// Starts from the causal past of `a` and consumes every extra
    /// condition of the cut, branching on which event consumes it.
    pub fn configuration_reaching(&self, a: &[CondIx]) -> Option<FixedBitSet> {
        if !self.co_set(a) {
            return None;
        }
        let target = bits(self.conditions.len(), a.iter().map(|c| c.ix()));
        let mut x = FixedBitSet::with_capacity(self.events.len());
        for &c in a {
            x.union_with(&self.history(Node::Cond(c)));
        }
        let cut = self.cut(&x)?;
        if !target.is_subset(&cut) {
            return None;
        }
        let mut seen = HashSet::new();
        self.extend_to(&target, x, cut, &mut seen)
    }

    fn extend_to(
        &self,
        target: &FixedBitSet,
        x: FixedBitSet,
        cut: FixedBitSet,
        seen: &mut HashSet<FixedBitSet>,
    ) -> Option<FixedBitSet> {
        let Some(extra) = cut.difference(target).next() else {
            return Some(x);
        };
        if !seen.insert(x.clone()) {
            return None;
        }
        for &e in &self.consumers[extra] {
            let ev = &self.events[e.ix()];
            if ev
                .preset
                .iter()
                .all(|b| cut.contains(b.ix()) && !target.contains(b.ix()))
            {
                let mut x2 = x.clone();
                x2.insert(e.ix());
                let mut cut2 = cut.clone();
                for b in &ev.preset {
                    cut2.set(b.ix(), false);
                }
                for b in &ev.postset {
                    cut2.insert(b.ix());
                }
                if let Some(found) = self.extend_to(target, x2, cut2, seen) {
                    return Some(found);
                }
            }
        }
        None
    }

    /// Whether `a` is a slice: a concurrent set of conditions reached by some state.
    pub fn is_slice(&self, a: &[CondIx]) -> bool {
        self.configuration_reaching(a).is_some()
    }

    /// Events whose preset lies in `marking`.
    pub fn enabled_events(&self, marking: &FixedBitSet) -> Vec<EventIx> {
        let mut out = BTreeSet::new();
        for c in marking.ones() {
            for &e in &self.consumers[c] {
                if self.events[e.ix()]
                    .preset
                    .iter()
                    .all(|b| marking.contains(b.ix()))
                {
                    out.insert(e);
                }
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown node {0:?}")]
pub struct UnknownNode(pub Node);

/// Bounds on the unfolding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UnfoldBounds {
    /// Highest layer to include; `None` for no layer bound.
    pub layers: Option<u32>,
    /// Maximum number of events.
    pub events: usize,
}

impl UnfoldBounds {
    pub fn layers(k: u32) -> Self {
        Self {
            layers: Some(k),
            events: DEFAULT_EVENT_BUDGET,
        }
    }
}

pub const DEFAULT_EVENT_BUDGET: usize = 100_000;

/// A bounded unfolding with its folding morphism.
#[derive(Clone, Debug)]
pub struct Unfolding {
    pub occ: OccurrenceNet,
    pub fold: FoldingMorphism,
    pub bounds: UnfoldBounds,
    /// The event budget ran out before the layer bound was reached.
    pub truncated: bool,
}

type Candidate = Reverse<(u32, TransIx, Vec<CondIx>)>;

/// Unfolds `net` up to the given bounds.
pub fn unfold<P, T>(net: &ZsNet<P, T>, bounds: UnfoldBounds) -> Unfolding {
    let mut initial = Vec::new();
    for (p, c) in net.initial().iter() {
        for copy in 0..c {
            initial.push((*p, copy, net.is_zero(*p)));
        }
    }
    let mut occ = OccurrenceNet::with_initial(initial);

    // Transitions by preset place.
    let mut wanting: HashMap<PlaceIx, Vec<TransIx>> = HashMap::new();
    for t in net.trans_ixs() {
        for (p, _) in net.pre(t).iter() {
            wanting.entry(*p).or_default().push(t);
        }
    }
    let produce: Vec<Vec<(PlaceIx, u32, bool)>> = net
        .trans_ixs()
        .map(|t| {
            net.post(t)
                .iter()
                .map(|(p, c)| (*p, c, net.is_zero(*p)))
                .collect()
        })
        .collect();

    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
    let mut queued: HashSet<(TransIx, Vec<CondIx>)> = HashSet::new();
    let mut layer_of_cond: Vec<u32> = vec![0; occ.conditions.len()];
    let mut truncated = false;

    let discover = |occ: &OccurrenceNet,
                    layer_of_cond: &[u32],
                    heap: &mut BinaryHeap<Candidate>,
                    queued: &mut HashSet<(TransIx, Vec<CondIx>)>,
                    new: CondIx| {
        let place = occ.conditions[new.ix()].place;
        let Some(ts) = wanting.get(&place) else {
            return;
        };
        for &t in ts {
            for preset in presets_with(occ, net.pre(t), new) {
                let base = preset
                    .iter()
                    .map(|c| layer_of_cond[c.ix()])
                    .max()
                    .unwrap_or(0);
                let bump = u32::from(preset.iter().any(|c| !occ.conditions[c.ix()].zero));
                let layer = base + bump;
                if bounds.layers.is_some_and(|k| layer > k) {
                    continue;
                }
                if queued.insert((t, preset.clone())) {
                    heap.push(Reverse((layer, t, preset)));
                }
            }
        }
    };

    for c in occ.initial.clone() {
        discover(&occ, &layer_of_cond, &mut heap, &mut queued, c);
    }
    while let Some(Reverse((layer, t, preset))) = heap.pop() {
        if occ.events.len() >= bounds.events {
            truncated = true;
            break;
        }
        let e = occ.push_event(preset, t, layer, &produce[t.ix()]);
        let post = occ.events[e.ix()].postset.clone();
        for &c in &post {
            layer_of_cond.push(layer);
            debug_assert_eq!(layer_of_cond.len(), c.ix() + 1);
        }
        for c in post {
            discover(&occ, &layer_of_cond, &mut heap, &mut queued, c);
        }
    }
    occ.finalize();
    let fold = FoldingMorphism {
        eta: occ.events.iter().map(|e| e.transition).collect(),
        beta: occ.conditions.iter().map(|c| c.place).collect(),
    };
    Unfolding {
        occ,
        fold,
        bounds,
        truncated,
    }
}

/// Concurrent condition sets folding onto `pre` that contain `new`, using
/// only conditions older than `new`.
fn presets_with(occ: &OccurrenceNet, pre: &Marking, new: CondIx) -> Vec<Vec<CondIx>> {
    let new_place = occ.conditions[new.ix()].place;
    let co_new = &occ.co[new.ix()];
    let mut needs: Vec<(PlaceIx, u32, Vec<CondIx>)> = Vec::new();
    for (p, w) in pre.iter() {
        let mut w = w;
        if *p == new_place {
            w -= 1;
        }
        if w == 0 {
            continue;
        }
        let pool: Vec<CondIx> = occ
            .by_place
            .get(p)
            .map(|v| {
                v.iter()
                    .copied()
                    .filter(|c| *c < new && co_new.contains(c.ix()))
                    .collect()
            })
            .unwrap_or_default();
        if (pool.len() as u32) < w {
            return Vec::new();
        }
        needs.push((*p, w, pool));
    }
    let mut out = Vec::new();
    let mut chosen = vec![new];
    choose(occ, &needs, 0, 0, 0, &mut chosen, &mut out);
    out
}

fn choose(
    occ: &OccurrenceNet,
    needs: &[(PlaceIx, u32, Vec<CondIx>)],
    k: usize,
    taken: u32,
    from: usize,
    chosen: &mut Vec<CondIx>,
    out: &mut Vec<Vec<CondIx>>,
) {
    if k == needs.len() {
        let mut preset = chosen.clone();
        preset.sort();
        out.push(preset);
        return;
    }
    let (_, w, pool) = &needs[k];
    if taken == *w {
        choose(occ, needs, k + 1, 0, 0, chosen, out);
        return;
    }
    for (idx, &c) in pool.iter().enumerate().skip(from) {
        if chosen.iter().all(|&d| occ.co_conditions(c, d)) {
            chosen.push(c);
            choose(occ, needs, k, taken + 1, idx + 1, chosen, out);
            chosen.pop();
        }
    }
}

impl Unfolding {
    /// Copy of the unfolding without event `e`, everything causally after
    /// it, and the conditions those events produced.
    pub fn without_event(&self, e: EventIx) -> Unfolding {
        let removed: Vec<bool> = self
            .occ
            .event_ixs()
            .map(|x| self.occ.past[x.ix()].contains(e.ix()))
            .collect();
        let initial: Vec<(PlaceIx, u32, bool)> = self
            .occ
            .initial
            .iter()
            .map(|c| {
                let b = &self.occ.conditions[c.ix()];
                (b.place, b.copy, b.zero)
            })
            .collect();
        let mut occ = OccurrenceNet::with_initial(initial);
        let mut cond_map: HashMap<CondIx, CondIx> = self
            .occ
            .initial
            .iter()
            .enumerate()
            .map(|(k, &c)| (c, CondIx(k as u32)))
            .collect();
        for old in self.occ.event_ixs() {
            if removed[old.ix()] {
                continue;
            }
            let ev = &self.occ.events[old.ix()];
            let mut preset: Vec<CondIx> = ev.preset.iter().map(|c| cond_map[c]).collect();
            preset.sort();
            let mut produce: Vec<(PlaceIx, u32, bool)> = Vec::new();
            for c in &ev.postset {
                let b = &self.occ.conditions[c.ix()];
                match produce.last_mut() {
                    Some((p, k, _)) if *p == b.place => *k += 1,
                    _ => produce.push((b.place, 1, b.zero)),
                }
            }
            let new = occ.push_event(preset, ev.transition, ev.layer, &produce);
            for (a, b) in ev.postset.iter().zip(occ.events[new.ix()].postset.clone()) {
                cond_map.insert(*a, b);
            }
        }
        occ.finalize();
        let fold = FoldingMorphism {
            eta: occ.events.iter().map(|e| e.transition).collect(),
            beta: occ.conditions.iter().map(|c| c.place).collect(),
        };
        Unfolding {
            occ,
            fold,
            bounds: self.bounds,
            truncated: self.truncated,
        }
    }

    /// Number of the highest layer present.
    pub fn max_layer(&self) -> u32 {
        self.occ.events.iter().map(|e| e.layer).max().unwrap_or(0)
    }

    /// Morphism violations: the initial marking and every event's preset
    /// and postset must fold onto the net's.
    pub fn morphism_violations<P: fmt::Display, T: fmt::Display>(
        &self,
        net: &ZsNet<P, T>,
    ) -> Vec<String> {
        let mut out = Vec::new();
        let m0 = self.fold.fold_marking(self.occ.initial.iter().copied());
        if &m0 != net.initial() {
            out.push(format!(
                "initial conditions fold to {}, net starts at {}",
                net.marking_text(&m0),
                net.marking_text(net.initial())
            ));
        }
        for e in self.occ.event_ixs() {
            let ev = &self.occ.events[e.ix()];
            let t = self.fold.eta[e.ix()];
            let pre = self.fold.fold_marking(ev.preset.iter().copied());
            let post = self.fold.fold_marking(ev.postset.iter().copied());
            if &pre != net.pre(t) {
                out.push(format!(
                    "event #{} preset folds to {}, not •{}",
                    e.0,
                    net.marking_text(&pre),
                    net.transition(t)
                ));
            }
            if &post != net.post(t) {
                out.push(format!(
                    "event #{} postset folds to {}, not {}•",
                    e.0,
                    net.marking_text(&post),
                    net.transition(t)
                ));
            }
        }
        out
    }

    /// Fires `steps` random events from the initial conditions, checking at
    /// each firing that no condition is marked twice and that the folded
    /// markings follow the net's token game. Returns the number of events fired.
    pub fn random_run<P, T: fmt::Display, R: Rng>(
        &self,
        net: &ZsNet<P, T>,
        rng: &mut R,
        steps: usize,
    ) -> Result<usize, String> {
        let n = self.occ.conditions.len();
        let mut marking = bits(n, self.occ.initial.iter().map(|c| c.ix()));
        let mut fired = 0;
        for _ in 0..steps {
            let enabled = self.occ.enabled_events(&marking);
            if enabled.is_empty() {
                break;
            }
            let e = enabled[rng.gen_range(0..enabled.len())];
            let ev = &self.occ.events[e.ix()];
            let before = self
                .fold
                .fold_marking(marking.ones().map(|c| CondIx(c as u32)));
            for b in &ev.preset {
                marking.set(b.ix(), false);
            }
            for b in &ev.postset {
                if marking.contains(b.ix()) {
                    return Err(format!(
                        "condition #{} marked twice after event #{}",
                        b.0, e.0
                    ));
                }
                marking.insert(b.ix());
            }
            let after = self
                .fold
                .fold_marking(marking.ones().map(|c| CondIx(c as u32)));
            let t = self.fold.eta[e.ix()];
            match net.fire(&before, &Step::singleton(t, 1)) {
                Ok(m) if m == after => {}
                _ => {
                    return Err(format!(
                        "firing {} does not match event #{}",
                        net.transition(t),
                        e.0
                    ))
                }
            }
            fired += 1;
        }
        Ok(fired)
    }

    /// Structural hashes of events, stable across runs.
    pub fn event_hashes<P, T: fmt::Display>(&self, net: &ZsNet<P, T>) -> (Vec<String>, Vec<String>)
    where
        P: fmt::Display,
    {
        let mut cond_h: Vec<String> = vec![String::new(); self.occ.conditions.len()];
        let mut ev_h: Vec<String> = Vec::with_capacity(self.occ.events.len());
        let cond_hash = |origin: &str, b: &Condition| {
            let mut h = Sha256::new();
            h.update(origin.as_bytes());
            h.update(b"|");
            h.update(net.place(b.place).to_string().as_bytes());
            h.update(b"|");
            h.update(b.copy.to_string().as_bytes());
            hex(&h.finalize())
        };
        for &c in &self.occ.initial {
            cond_h[c.ix()] = cond_hash("init", &self.occ.conditions[c.ix()]);
        }
        for ev in &self.occ.events {
            let mut pre: Vec<&str> = ev.preset.iter().map(|c| cond_h[c.ix()].as_str()).collect();
            pre.sort();
            let mut h = Sha256::new();
            for p in pre {
                h.update(p.as_bytes());
                h.update(b",");
            }
            h.update(b"|");
            h.update(net.transition(ev.transition).to_string().as_bytes());
            let eh = hex(&h.finalize());
            for c in &ev.postset {
                cond_h[c.ix()] = cond_hash(&eh, &self.occ.conditions[c.ix()]);
            }
            ev_h.push(eh);
        }
        (cond_h, ev_h)
    }

    pub fn to_export<P: fmt::Display, T: fmt::Display>(
        &self,
        net: &ZsNet<P, T>,
    ) -> UnfoldingExport {
        let (ch, eh) = self.event_hashes(net);
        let short = |s: &str| s[..12].to_string();
        UnfoldingExport {
            bounds: self.bounds,
            truncated: self.truncated,
            conditions: self
                .occ
                .cond_ixs()
                .map(|c| {
                    let b = self.occ.condition(c);
                    CondExport {
                        id: format!("b{}", c.0),
                        hash: short(&ch[c.ix()]),
                        place: net.place(b.place).to_string(),
                        copy: b.copy,
                        zero: b.zero,
                        producer: self.occ.producer(c).map(|e| format!("e{}", e.0)),
                    }
                })
                .collect(),
            events: self
                .occ
                .event_ixs()
                .map(|e| {
                    let ev = self.occ.event(e);
                    EventExport {
                        id: format!("e{}", e.0),
                        hash: short(&eh[e.ix()]),
                        transition: net.transition(ev.transition).to_string(),
                        layer: ev.layer,
                        preset: ev.preset.iter().map(|c| format!("b{}", c.0)).collect(),
                        postset: ev.postset.iter().map(|c| format!("b{}", c.0)).collect(),
                    }
                })
                .collect(),
        }
    }

    /// Graphviz rendering: conditions as circles (zero ones small), events
    /// as boxes, initial conditions filled.
    pub fn to_dot<P: fmt::Display, T: fmt::Display>(&self, net: &ZsNet<P, T>) -> String {
        let mut out = String::from("digraph unfolding {\n  rankdir=TB;\n");
        for c in self.occ.cond_ixs() {
            let b = self.occ.condition(c);
            let label = dot_escape(&format!("{}#{}", net.place(b.place), b.copy));
            let init = if b.origin == Origin::Initial {
                ", style=filled, fillcolor=gray85"
            } else {
                ""
            };
            if b.zero {
                out.push_str(&format!(
                    "  b{} [shape=circle, width=0.2, fixedsize=true, label=\"\", xlabel=\"{label}\"{init}];\n",
                    c.0
                ));
            } else {
                out.push_str(&format!(
                    "  b{} [shape=circle, label=\"{label}\"{init}];\n",
                    c.0
                ));
            }
        }
        for e in self.occ.event_ixs() {
            let ev = self.occ.event(e);
            let label = dot_escape(&net.transition(ev.transition).to_string());
            out.push_str(&format!(
                "  e{} [shape=box, label=\"{label}\\nlayer {}\"];\n",
                e.0, ev.layer
            ));
            for b in &ev.preset {
                out.push_str(&format!("  b{} -> e{};\n", b.0, e.0));
            }
            for b in &ev.postset {
                out.push_str(&format!("  e{} -> b{};\n", e.0, b.0));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct UnfoldingExport {
    pub bounds: UnfoldBounds,
    pub truncated: bool,
    pub conditions: Vec<CondExport>,
    pub events: Vec<EventExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CondExport {
    pub id: String,
    pub hash: String,
    pub place: String,
    pub copy: u32,
    pub zero: bool,
    pub producer: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EventExport {
    pub id: String,
    pub hash: String,
    pub transition: String,
    pub layer: u32,
    pub preset: Vec<String>,
    pub postset: Vec<String>,
}

/// Outcome of [`states_cover_markings`].
#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub depth: usize,
    /// Markings of the net reachable within `depth` firings.
    pub markings: usize,
    /// Of those, markings equal to the folding of some reachable cut.
    pub covered: usize,
    /// Folded cuts that are not reachable markings of the net.
    pub spurious: usize,
    pub witness: Option<String>,
}

impl CoverReport {
    pub fn passed(&self) -> bool {
        self.covered == self.markings && self.spurious == 0
    }
}

/// Compares the markings the net reaches within `depth` single firings
/// with the foldings of the cuts the unfolding reaches within `depth`
/// events. Every marking must be the image of a state of the unfolding.
pub fn states_cover_markings<P: fmt::Display, T: fmt::Display>(
    net: &ZsNet<P, T>,
    unf: &Unfolding,
    depth: usize,
    budget: usize,
) -> Result<CoverReport, crate::zsnet::StateError> {
    let mut net_seen: HashSet<Marking> = HashSet::from([net.initial().clone()]);
    let mut frontier = vec![net.initial().clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for m in &frontier {
            for t in net.trans_ixs() {
                if net.pre(t).leq(m) {
                    let m2 = net.fire(m, &Step::singleton(t, 1))?;
                    if net_seen.insert(m2.clone()) {
                        if net_seen.len() > budget {
                            return Err(crate::zsnet::StateError::Budget(budget));
                        }
                        next.push(m2);
                    }
                }
            }
        }
        frontier = next;
    }

    let occ = &unf.occ;
    let start = bits(occ.conditions.len(), occ.initial.iter().map(|c| c.ix()));
    let mut cut_seen: HashSet<FixedBitSet> = HashSet::from([start.clone()]);
    let mut folded: HashMap<Marking, FixedBitSet> = HashMap::new();
    folded.insert(
        unf.fold.fold_marking(occ.initial.iter().copied()),
        start.clone(),
    );
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((cut, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for e in occ.enabled_events(&cut) {
            let ev = occ.event(e);
            let mut c2 = cut.clone();
            for b in &ev.preset {
                c2.set(b.ix(), false);
            }
            for b in &ev.postset {
                c2.insert(b.ix());
            }
            if cut_seen.insert(c2.clone()) {
                if cut_seen.len() > budget {
                    return Err(crate::zsnet::StateError::Budget(budget));
                }
                folded
                    .entry(unf.fold.fold_marking(c2.ones().map(|c| CondIx(c as u32))))
                    .or_insert(c2.clone());
                queue.push_back((c2, d + 1));
            }
        }
    }

    let mut witness = None;
    let mut covered = 0;
    let mut sorted: Vec<&Marking> = net_seen.iter().collect();
    sorted.sort();
    for m in sorted {
        if folded.contains_key(m) {
            covered += 1;
        } else if witness.is_none() {
            witness = Some(format!(
                "reachable marking {} is not the image of any state",
                net.marking_text(m)
            ));
        }
    }
    let mut spurious = 0;
    for m in folded.keys() {
        if !net_seen.contains(m) {
            spurious += 1;
            if witness.is_none() {
                witness = Some(format!(
                    "cut folds to {}, which the net does not reach",
                    net.marking_text(m)
                ));
            }
        }
    }
    Ok(CoverReport {
        depth,
        markings: net_seen.len(),
        covered,
        spurious,
        witness,
    })
}
