//! Zero-safe Petri nets: token game, stable steps and stable transactions.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::multiset::{Count, Multiset};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PlaceIx(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TransIx(pub u32);

impl PlaceIx {
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

impl TransIx {
    pub fn ix(self) -> usize {
        self.0 as usize
    }
}

pub type Marking = Multiset<PlaceIx>;
pub type Step = Multiset<TransIx>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("unknown transition #{0}")]
    UnknownTransition(u32),
    #[error("unknown place #{0}")]
    UnknownPlace(u32),
    #[error("step is not enabled")]
    NotEnabled,
    #[error("step {index} of the sequence is not enabled")]
    InvalidSequence { index: usize },
    #[error("initial marking puts tokens on zero place #{0}")]
    MarkedZeroPlace(u32),
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("marking is not stable")]
    NotStable,
    #[error("net lacks the heating shape: {0}")]
    ShapeViolation(String),
    #[error("multiset count overflow")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("not a state: {0}")]
    NotAState(String),
    #[error("search budget of {0} markings exhausted")]
    Budget(usize),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// A place/transition net with a designated set of zero places.
#[derive(Clone, Debug)]
pub struct ZsNet<P, T> {
    places: Vec<P>,
    zero: Vec<bool>,
    transitions: Vec<T>,
    pre: Vec<Marking>,
    post: Vec<Marking>,
    initial: Marking,
    place_ix: HashMap<P, PlaceIx>,
    trans_ix: HashMap<T, TransIx>,
}

/// A transition as handed to [`ZsNet::new`]: identifier, preset, postset.
pub type TransitionSpec<T> = (T, Vec<(PlaceIx, Count)>, Vec<(PlaceIx, Count)>);

impl<P, T> ZsNet<P, T>
where
    P: Clone + Eq + Hash,
    T: Clone + Eq + Hash,
{
    /// `places` pairs each place with whether it is a zero place.
    pub fn new(
        places: Vec<(P, bool)>,
        transitions: Vec<TransitionSpec<T>>,
        initial: Marking,
    ) -> Result<Self, NetError> {
        let n = places.len();
        let check = |p: PlaceIx| {
            if p.ix() < n {
                Ok(p)
            } else {
                Err(NetError::UnknownPlace(p.0))
            }
        };
        let mut place_ix = HashMap::new();
        let mut ps = Vec::with_capacity(n);
        let mut zero = Vec::with_capacity(n);
        for (k, (p, z)) in places.into_iter().enumerate() {
            if place_ix.insert(p.clone(), PlaceIx(k as u32)).is_some() {
                return Err(NetError::Duplicate(format!("place #{k}")));
            }
            ps.push(p);
            zero.push(z);
        }
        let mut trans_ix = HashMap::new();
        let (mut ts, mut pre, mut post) = (Vec::new(), Vec::new(), Vec::new());
        for (k, (t, i, o)) in transitions.into_iter().enumerate() {
            if trans_ix.insert(t.clone(), TransIx(k as u32)).is_some() {
                return Err(NetError::Duplicate(format!("transition #{k}")));
            }
            let mut a = Marking::new();
            for (p, w) in i {
                a.try_insert(check(p)?, w).map_err(|_| NetError::Overflow)?;
            }
            let mut b = Marking::new();
            for (p, w) in o {
                b.try_insert(check(p)?, w).map_err(|_| NetError::Overflow)?;
            }
            ts.push(t);
            pre.push(a);
            post.push(b);
        }
        for (p, _) in initial.iter() {
            check(*p)?;
            if zero[p.ix()] {
                return Err(NetError::MarkedZeroPlace(p.0));
            }
        }
        Ok(Self {
            places: ps,
            zero,
            transitions: ts,
            pre,
            post,
            initial,
            place_ix,
            trans_ix,
        })
    }

    pub fn place_index(&self, p: &P) -> Option<PlaceIx> {
        self.place_ix.get(p).copied()
    }

    pub fn transition_index(&self, t: &T) -> Option<TransIx> {
        self.trans_ix.get(t).copied()
    }

    /// Copy of the net without transition `t`; indices of later transitions shift down.
    pub fn without_transition(&self, t: TransIx) -> Self {
        let places = self
            .places
            .iter()
            .cloned()
            .zip(self.zero.iter().copied())
            .collect();
        let transitions = (0..self.transitions.len())
            .filter(|&k| k != t.ix())
            .map(|k| self.spec(TransIx(k as u32)))
            .collect();
        Self::new(places, transitions, self.initial.clone())
            .expect("removing a transition keeps the net valid")
    }

    /// Copy of the net with the arc weight between `p` and `t` replaced;
    /// `input` selects the preset arc, otherwise the postset arc.
    pub fn with_arc_weight(&self, t: TransIx, p: PlaceIx, input: bool, weight: Count) -> Self {
        let places = self
            .places
            .iter()
            .cloned()
            .zip(self.zero.iter().copied())
            .collect();
        let transitions = (0..self.transitions.len())
            .map(|k| {
                let (id, mut i, mut o) = self.spec(TransIx(k as u32));
                if k == t.ix() {
                    let side = if input { &mut i } else { &mut o };
                    side.retain(|(q, _)| *q != p);
                    side.push((p, weight));
                }
                (id, i, o)
            })
            .collect();
        Self::new(places, transitions, self.initial.clone())
            .expect("reweighting keeps the net valid")
    }

    fn spec(&self, t: TransIx) -> TransitionSpec<T> {
        let arcs = |m: &Marking| m.iter().map(|(p, c)| (*p, c)).collect();
        (
            self.transitions[t.ix()].clone(),
            arcs(&self.pre[t.ix()]),
            arcs(&self.post[t.ix()]),
        )
    }
}

impl<P, T> ZsNet<P, T> {
    pub fn places(&self) -> &[P] {
        &self.places
    }

    pub fn transitions(&self) -> &[T] {
        &self.transitions
    }

    pub fn place(&self, p: PlaceIx) -> &P {
        &self.places[p.ix()]
    }

    pub fn transition(&self, t: TransIx) -> &T {
        &self.transitions[t.ix()]
    }

    pub fn place_ixs(&self) -> impl Iterator<Item = PlaceIx> {
        (0..self.places.len() as u32).map(PlaceIx)
    }

    pub fn trans_ixs(&self) -> impl Iterator<Item = TransIx> {
        (0..self.transitions.len() as u32).map(TransIx)
    }

    pub fn is_zero(&self, p: PlaceIx) -> bool {
        self.zero[p.ix()]
    }

    pub fn initial(&self) -> &Marking {
        &self.initial
    }

    /// `•t` as a multiset of places.
    pub fn pre(&self, t: TransIx) -> &Marking {
        &self.pre[t.ix()]
    }

    /// `t•` as a multiset of places.
    pub fn post(&self, t: TransIx) -> &Marking {
        &self.post[t.ix()]
    }

    /// Arc weight `F(p, t)`.
    pub fn weight_in(&self, p: PlaceIx, t: TransIx) -> Count {
        self.pre[t.ix()].get(&p)
    }

    /// Arc weight `F(t, p)`.
    pub fn weight_out(&self, t: TransIx, p: PlaceIx) -> Count {
        self.post[t.ix()].get(&p)
    }

    fn check_step(&self, u: &Step) -> Result<(), NetError> {
        match u.iter().find(|(t, _)| t.ix() >= self.transitions.len()) {
            Some((t, _)) => Err(NetError::UnknownTransition(t.0)),
            None => Ok(()),
        }
    }

    /// `Σ_t U(t)·•t`.
    pub fn demand(&self, u: &Step) -> Marking {
        let mut d = Marking::new();
        for (t, k) in u.iter() {
            d = d.union(&self.pre[t.ix()].scalar(k));
        }
        d
    }

    /// `Σ_t U(t)·t•`.
    pub fn supply(&self, u: &Step) -> Marking {
        let mut d = Marking::new();
        for (t, k) in u.iter() {
            d = d.union(&self.post[t.ix()].scalar(k));
        }
        d
    }

    pub fn enabled(&self, m: &Marking, u: &Step) -> Result<bool, NetError> {
        self.check_step(u)?;
        Ok(self.demand(u).leq(m))
    }

    pub fn fire(&self, m: &Marking, u: &Step) -> Result<Marking, NetError> {
        if !self.enabled(m, u)? {
            return Err(NetError::NotEnabled);
        }
        m.difference(&self.demand(u))
            .try_union(&self.supply(u))
            .map_err(|_| NetError::Overflow)
    }

    pub fn is_stable(&self, m: &Marking) -> bool {
        m.iter().all(|(p, _)| !self.is_zero(*p))
    }

    /// The part of `m` on stable places.
    pub fn stable_part(&self, m: &Marking) -> Marking {
        m.filter(|p| !self.is_zero(*p))
    }

    /// Stable part of the preset of `t`.
    pub fn stable_pre(&self, t: TransIx) -> Marking {
        self.stable_part(&self.pre[t.ix()])
    }

    /// Markings `m_0 = m, m_1, ..., m_n` along a step sequence.
    pub fn run(&self, m: &Marking, seq: &[Step]) -> Result<Vec<Marking>, NetError> {
        let mut out = vec![m.clone()];
        for (index, u) in seq.iter().enumerate() {
            self.check_step(u)?;
            let next = self.fire(out.last().unwrap(), u).map_err(|e| match e {
                NetError::NotEnabled => NetError::InvalidSequence { index },
                e => e,
            })?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn check_stable_step(&self, m: &Marking, seq: &[Step]) -> Result<bool, NetError> {
        Ok(!matches!(
            self.transaction_verdict(m, seq)?,
            Verdict::UnstableStart | Verdict::UnstableEnd | Verdict::StableDemandExceeded
        ))
    }

    pub fn check_stable_transaction(&self, m: &Marking, seq: &[Step]) -> Result<bool, NetError> {
        Ok(self.transaction_verdict(m, seq)? == Verdict::Transaction)
    }

    /// Classifies a firing sequence against the stable step and stable
    /// transaction conditions, reporting the first one that fails.
    ///
    /// Maximality is read per transition: every transition with a nonempty
    /// stable preset must lack tokens on some stable place of the residual
    /// marking `m - Σ U(t)·•t`.
    pub fn transaction_verdict(&self, m: &Marking, seq: &[Step]) -> Result<Verdict, NetError> {
        let ms = self.run(m, seq)?;
        if !self.is_stable(m) {
            return Ok(Verdict::UnstableStart);
        }
        let total = seq.iter().fold(Step::new(), |acc, u| acc.union(u));
        let demand = self.stable_part(&self.demand(&total));
        if !demand.leq(m) {
            return Ok(Verdict::StableDemandExceeded);
        }
        if !self.is_stable(ms.last().unwrap()) {
            return Ok(Verdict::UnstableEnd);
        }
        if let Some(k) = (1..ms.len().saturating_sub(1)).find(|&k| self.is_stable(&ms[k])) {
            return Ok(Verdict::StableIntermediate(k));
        }
        if total.is_empty() {
            return Ok(Verdict::Empty);
        }
        let residual = m.difference(&demand);
        for t in self.trans_ixs() {
            let sp = self.stable_pre(t);
            if !sp.is_empty() && sp.leq(&residual) {
                return Ok(Verdict::NotMaximal(t));
            }
        }
        Ok(Verdict::Transaction)
    }

    /// Integer marking `m_0 + Σ X(t)·(t• - •t)`, or the first negative place.
    pub fn state_vector(&self, x: &Step) -> Result<Result<Marking, PlaceIx>, NetError> {
        self.check_step(x)?;
        let mut v: Vec<i64> = vec![0; self.places.len()];
        for (p, c) in self.initial.iter() {
            v[p.ix()] += i64::from(c);
        }
        for (t, k) in x.iter() {
            for (p, c) in self.post[t.ix()].iter() {
                v[p.ix()] += i64::from(c) * i64::from(k);
            }
            for (p, c) in self.pre[t.ix()].iter() {
                v[p.ix()] -= i64::from(c) * i64::from(k);
            }
        }
        let mut m = Marking::new();
        for (k, &c) in v.iter().enumerate() {
            if c < 0 {
                return Ok(Err(PlaceIx(k as u32)));
            }
            let c = Count::try_from(c).map_err(|_| NetError::Overflow)?;
            m.insert(PlaceIx(k as u32), c);
        }
        Ok(Ok(m))
    }

    /// Whether `target` is reachable from the initial marking, by
    /// breadth-first search over single firings visiting at most `budget` markings.
    pub fn reachable(&self, target: &Marking, budget: usize) -> Result<bool, StateError> {
        let mut seen: HashSet<Marking> = HashSet::from([self.initial.clone()]);
        let mut queue = VecDeque::from([self.initial.clone()]);
        while let Some(m) = queue.pop_front() {
            if &m == target {
                return Ok(true);
            }
            for t in self.trans_ixs() {
                if self.pre[t.ix()].leq(&m) {
                    let next = self.fire(&m, &Step::singleton(t, 1))?;
                    if !seen.contains(&next) {
                        if seen.len() >= budget {
                            return Err(StateError::Budget(budget));
                        }
                        seen.insert(next.clone());
                        queue.push_back(next);
                    }
                }
            }
        }
        Ok(false)
    }

    /// The marking `m_X` of a state `X`.
    ///
    /// First tries to fire exactly the transitions of `X` in some order; if
    /// no order works, falls back to a bounded reachability search.
    pub fn state_marking(&self, x: &Step, budget: usize) -> Result<Marking, StateError> {
        let m = match self.state_vector(x)? {
            Ok(m) => m,
            Err(p) => {
                return Err(StateError::NotAState(format!(
                    "place #{} would hold a negative count",
                    p.0
                )))
            }
        };
        if self.serializable(x, budget) || self.reachable(&m, budget)? {
            Ok(m)
        } else {
            Err(StateError::NotAState("the marking is not reachable".into()))
        }
    }

    /// Whether some firing order uses exactly the transitions of `x`.
    fn serializable(&self, x: &Step, budget: usize) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![(self.initial.clone(), x.clone())];
        while let Some((m, rest)) = stack.pop() {
            if rest.is_empty() {
                return true;
            }
            for (t, _) in rest.iter() {
                if self.pre[t.ix()].leq(&m) {
                    let mut r = rest.clone();
                    r.remove(t, 1);
                    let Ok(next) = self.fire(&m, &Step::singleton(*t, 1)) else {
                        continue;
                    };
                    if seen.len() < budget && seen.insert((next.clone(), r.clone())) {
                        stack.push((next, r));
                    }
                }
            }
        }
        false
    }

    /// Checks that every zero place is emptied only by heating-shaped
    /// transitions and returns, for each zero place, its unique consumer.
    ///
    /// A heating consumes exactly one token from one zero place and only
    /// produces on stable places. Every other transition has a nonempty
    /// stable preset and consumes nothing from zero places.
    pub fn heating_shape(&self) -> Result<Vec<Option<TransIx>>, NetError> {
        let mut consumer: Vec<Option<TransIx>> = vec![None; self.places.len()];
        for t in self.trans_ixs() {
            let pre = &self.pre[t.ix()];
            let zero_in: Vec<_> = pre.iter().filter(|(p, _)| self.is_zero(**p)).collect();
            if zero_in.is_empty() {
                if pre.is_empty() {
                    return Err(NetError::ShapeViolation(format!(
                        "transition #{} has an empty preset",
                        t.0
                    )));
                }
                continue;
            }
            let heating = zero_in.len() == 1 && zero_in[0].1 == 1 && pre.distinct() == 1;
            if !heating {
                return Err(NetError::ShapeViolation(format!(
                    "transition #{} consumes from a zero place but is not a heating",
                    t.0
                )));
            }
            if self.post[t.ix()].iter().any(|(p, _)| self.is_zero(*p)) {
                return Err(NetError::ShapeViolation(format!(
                    "heating #{} produces on a zero place",
                    t.0
                )));
            }
            let z = *zero_in[0].0;
            if consumer[z.ix()].replace(t).is_some() {
                return Err(NetError::ShapeViolation(format!(
                    "zero place #{} has two consumers",
                    z.0
                )));
            }
        }
        Ok(consumer)
    }

    /// All stable transactions from a stable marking `m`, for nets with the
    /// heating shape.
    ///
    /// The rule part is a maximal multiset of non-heating transitions whose
    /// joint stable preset fits `m`; the heat part fires the consumer of each
    /// zero place once per produced token. Results are ordered by the rule
    /// part, lexicographically by transition index and count.
    pub fn enumerate_stable_transactions(&self, m: &Marking) -> Result<Vec<Transaction>, NetError> {
        let consumer = self.heating_shape()?;
        if !self.is_stable(m) {
            return Err(NetError::NotStable);
        }
        let is_heating: Vec<bool> = {
            let mut h = vec![false; self.transitions.len()];
            for t in consumer.iter().flatten() {
                h[t.ix()] = true;
            }
            h
        };
        let rules: Vec<TransIx> = self.trans_ixs().filter(|t| !is_heating[t.ix()]).collect();
        let pres: Vec<Marking> = rules.iter().map(|&t| self.pre[t.ix()].clone()).collect();

        let mut parts = Vec::new();
        let mut chosen = Vec::new();
        maximal_fits(&pres, 0, m, &mut chosen, &mut parts);

        let mut out = Vec::new();
        for counts in parts {
            let rule_step: Step = rules.iter().zip(&counts).map(|(&t, &c)| (t, c)).collect();
            if rule_step.is_empty() {
                continue;
            }
            let produced = self.supply(&rule_step).filter(|p| self.is_zero(*p));
            let mut heat_step = Step::new();
            let mut stuck = false;
            for (z, k) in produced.iter() {
                match consumer[z.ix()] {
                    Some(h) => heat_step.insert(h, k),
                    None => stuck = true,
                }
            }
            if stuck {
                continue;
            }
            let mut t = Transaction {
                step: rule_step.union(&heat_step),
                rule_step,
                heat_step,
                target: Marking::new(),
            };
            t.target = self
                .run(m, &t.sequence())?
                .pop()
                .expect("run returns the start marking");
            out.push(t);
        }
        Ok(out)
    }
}

/// Maximal count vectors `c` with `Σ c_k·pres[k] ⊆ m`.
fn maximal_fits(
    pres: &[Marking],
    k: usize,
    residual: &Marking,
    chosen: &mut Vec<Count>,
    out: &mut Vec<Vec<Count>>,
) {
    if k == pres.len() {
        if pres.iter().all(|p| !p.leq(residual)) {
            out.push(chosen.clone());
        }
        return;
    }
    let fit = pres[k]
        .iter()
        .map(|(p, c)| residual.get(p) / c)
        .min()
        .unwrap_or(0);
    let mut rest = residual.clone();
    for c in 0..=fit {
        if c > 0 {
            rest = rest.difference(&pres[k]);
        }
        chosen.push(c);
        maximal_fits(pres, k + 1, &rest, chosen, out);
        chosen.pop();
    }
}

/// Outcome of [`ZsNet::transaction_verdict`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Transaction,
    UnstableStart,
    UnstableEnd,
    StableDemandExceeded,
    /// The marking after the given number of steps is stable.
    StableIntermediate(usize),
    /// This transition is still stably enabled after the step.
    NotMaximal(TransIx),
    Empty,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Transaction => f.write_str("stable transaction"),
            Verdict::UnstableStart => f.write_str("initial marking is not stable"),
            Verdict::UnstableEnd => f.write_str("final marking is not stable"),
            Verdict::StableDemandExceeded => {
                f.write_str("stable preset demand exceeds the initial marking")
            }
            Verdict::StableIntermediate(k) => write!(f, "marking after step {k} is stable"),
            Verdict::NotMaximal(t) => write!(f, "transition #{} is still stably enabled", t.0),
            Verdict::Empty => f.write_str("empty step"),
        }
    }
}

/// A stable transaction found by [`ZsNet::enumerate_stable_transactions`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub rule_step: Step,
    pub heat_step: Step,
    /// `rule_step ⊕ heat_step`.
    pub step: Step,
    pub target: Marking,
}

impl Transaction {
    /// The rule part followed by the heat part, omitting an empty heat part.
    pub fn sequence(&self) -> Vec<Step> {
        let mut seq = vec![self.rule_step.clone()];
        if !self.heat_step.is_empty() {
            seq.push(self.heat_step.clone());
        }
        seq
    }
}

impl<P: fmt::Display, T: fmt::Display> ZsNet<P, T> {
    pub fn marking_text(&self, m: &Marking) -> String {
        let parts: Vec<String> = m
            .iter()
            .map(|(p, c)| {
                if c == 1 {
                    self.place(*p).to_string()
                } else {
                    format!("{}:{c}", self.place(*p))
                }
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn step_text(&self, u: &Step) -> String {
        let parts: Vec<String> = u
            .iter()
            .map(|(t, c)| {
                if c == 1 {
                    self.transition(*t).to_string()
                } else {
                    format!("{}:{c}", self.transition(*t))
                }
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }

    /// Graphviz rendering: stable places as circles, zero places as small
    /// double circles, transitions as boxes, weights above 1 as labels.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph zsnet {\n  rankdir=TB;\n");
        for p in self.place_ixs() {
            let tokens = self.initial.get(&p);
            let label = dot_escape(&self.place(p).to_string());
            if self.is_zero(p) {
                out.push_str(&format!(
                    "  p{} [shape=doublecircle, width=0.25, fixedsize=true, label=\"\", xlabel=\"{label}\"];\n",
                    p.0
                ));
            } else {
                let mark = if tokens > 0 {
                    format!("\\n{}", "•".repeat(tokens.min(6) as usize))
                } else {
                    String::new()
                };
                out.push_str(&format!(
                    "  p{} [shape=circle, label=\"{label}{mark}\"];\n",
                    p.0
                ));
            }
        }
        for t in self.trans_ixs() {
            out.push_str(&format!(
                "  t{} [shape=box, label=\"{}\"];\n",
                t.0,
                dot_escape(&self.transition(t).to_string())
            ));
        }
        for t in self.trans_ixs() {
            for (p, w) in self.pre(t).iter() {
                out.push_str(&format!("  p{} -> t{}{};\n", p.0, t.0, weight_label(w)));
            }
            for (p, w) in self.post(t).iter() {
                out.push_str(&format!("  t{} -> p{}{};\n", t.0, p.0, weight_label(w)));
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn to_export(&self) -> NetExport {
        let arcs = |m: &Marking| {
            m.iter()
                .map(|(p, w)| ArcExport {
                    place: format!("p{}", p.0),
                    weight: w,
                })
                .collect()
        };
        NetExport {
            places: self
                .place_ixs()
                .map(|p| PlaceExport {
                    id: format!("p{}", p.0),
                    name: self.place(p).to_string(),
                    zero: self.is_zero(p),
                    initial: self.initial.get(&p),
                })
                .collect(),
            transitions: self
                .trans_ixs()
                .map(|t| TransitionExport {
                    id: format!("t{}", t.0),
                    name: self.transition(t).to_string(),
                    pre: arcs(self.pre(t)),
                    post: arcs(self.post(t)),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NetExport {
    pub places: Vec<PlaceExport>,
    pub transitions: Vec<TransitionExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaceExport {
    pub id: String,
    pub name: String,
    pub zero: bool,
    pub initial: Count,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionExport {
    pub id: String,
    pub name: String,
    pub pre: Vec<ArcExport>,
    pub post: Vec<ArcExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcExport {
    pub place: String,
    pub weight: Count,
}

fn weight_label(w: Count) -> String {
    if w == 1 {
        String::new()
    } else {
        format!(" [label=\"{w}\"]")
    }
}

pub(crate) fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// p0 -t0-> z1 -h-> p2, plus t2: p0 p0 -> p2.
    fn tiny() -> ZsNet<&'static str, &'static str> {
        ZsNet::new(
            vec![("p0", false), ("z1", true), ("p2", false)],
            vec![
                ("t0", vec![(PlaceIx(0), 1)], vec![(PlaceIx(1), 1)]),
                ("h", vec![(PlaceIx(1), 1)], vec![(PlaceIx(2), 1)]),
                ("t2", vec![(PlaceIx(0), 2)], vec![(PlaceIx(2), 1)]),
            ],
            Marking::singleton(PlaceIx(0), 3),
        )
        .unwrap()
    }

    fn step(pairs: &[(u32, Count)]) -> Step {
        pairs.iter().map(|&(t, c)| (TransIx(t), c)).collect()
    }

    #[test]
    fn construction_checks() {
        let bad =
            ZsNet::<&str, &str>::new(vec![("z", true)], vec![], Marking::singleton(PlaceIx(0), 1));
        assert_eq!(bad.unwrap_err(), NetError::MarkedZeroPlace(0));
        let bad = ZsNet::<&str, &str>::new(
            vec![("a", false)],
            vec![("t", vec![(PlaceIx(3), 1)], vec![])],
            Marking::new(),
        );
        assert_eq!(bad.unwrap_err(), NetError::UnknownPlace(3));
        let net = tiny();
        assert_eq!(net.weight_in(PlaceIx(0), TransIx(2)), 2);
        assert_eq!(net.weight_out(TransIx(0), PlaceIx(1)), 1);
        assert_eq!(net.place_index(&"z1"), Some(PlaceIx(1)));
    }

    #[test]
    fn token_game() {
        let net = tiny();
        let m = net.initial().clone();
        assert!(net.enabled(&m, &Step::new()).unwrap());
        assert!(net.enabled(&m, &step(&[(0, 1), (2, 1)])).unwrap());
        assert!(!net.enabled(&m, &step(&[(0, 2), (2, 1)])).unwrap());
        assert_eq!(
            net.enabled(&m, &step(&[(9, 1)])),
            Err(NetError::UnknownTransition(9))
        );
        assert_eq!(net.fire(&m, &Step::new()).unwrap(), m);
        let m1 = net.fire(&m, &step(&[(0, 1)])).unwrap();
        assert!(!net.is_stable(&m1));
        let m2 = net.fire(&m1, &step(&[(1, 1)])).unwrap();
        assert!(net.is_stable(&m2));
        assert_eq!(m2.len(), m.len());
        assert_eq!(net.fire(&m2, &step(&[(1, 1)])), Err(NetError::NotEnabled));
    }

    #[test]
    fn transactions_need_maximality() {
        let net = tiny();
        let m = net.initial().clone();
        // One t0 leaves two tokens, enough for t2.
        let seq = [step(&[(0, 1)]), step(&[(1, 1)])];
        assert!(net.check_stable_step(&m, &seq).unwrap());
        assert_eq!(
            net.transaction_verdict(&m, &seq).unwrap(),
            Verdict::NotMaximal(TransIx(0))
        );
        let seq = [step(&[(0, 3)]), step(&[(1, 3)])];
        assert!(net.check_stable_transaction(&m, &seq).unwrap());
        assert!(!net.check_stable_step(&m, &[step(&[(0, 1)])]).unwrap());
        assert!(net.check_stable_step(&m, &[]).unwrap());
        assert_eq!(net.transaction_verdict(&m, &[]).unwrap(), Verdict::Empty);
        assert_eq!(
            net.check_stable_step(&m, &[step(&[(1, 1)])]),
            Err(NetError::InvalidSequence { index: 0 })
        );
    }

    #[test]
    fn enumerated_transactions_pass_the_check() {
        let net = tiny();
        let ts = net.enumerate_stable_transactions(net.initial()).unwrap();
        let rule_parts: Vec<_> = ts.iter().map(|t| t.rule_step.clone()).collect();
        assert_eq!(rule_parts, vec![step(&[(0, 1), (2, 1)]), step(&[(0, 3)])]);
        for t in &ts {
            assert!(net
                .check_stable_transaction(net.initial(), &t.sequence())
                .unwrap());
        }
        assert_eq!(
            net.enumerate_stable_transactions(&Marking::singleton(PlaceIx(1), 1)),
            Err(NetError::NotStable)
        );
    }

    #[test]
    fn shape_violations() {
        let net = ZsNet::new(
            vec![("a", false), ("z", true)],
            vec![("t", vec![(PlaceIx(0), 1), (PlaceIx(1), 1)], vec![])],
            Marking::new(),
        )
        .unwrap();
        assert!(matches!(
            net.heating_shape(),
            Err(NetError::ShapeViolation(_))
        ));
        let net = ZsNet::new(
            vec![("z", true), ("a", false)],
            vec![
                ("h1", vec![(PlaceIx(0), 1)], vec![(PlaceIx(1), 1)]),
                ("h2", vec![(PlaceIx(0), 1)], vec![]),
            ],
            Marking::new(),
        )
        .unwrap();
        assert!(matches!(
            net.enumerate_stable_transactions(&Marking::new()),
            Err(NetError::ShapeViolation(_))
        ));
    }

    #[test]
    fn states() {
        let net = tiny();
        assert_eq!(
            net.state_marking(&Step::new(), 1000).unwrap(),
            *net.initial()
        );
        let m = net.state_marking(&step(&[(0, 1)]), 1000).unwrap();
        assert_eq!(m.get(&PlaceIx(1)), 1);
        assert!(matches!(
            net.state_marking(&step(&[(1, 1)]), 1000),
            Err(StateError::NotAState(_))
        ));
        assert!(matches!(
            net.state_marking(&step(&[(0, 4)]), 1000),
            Err(StateError::NotAState(_))
        ));
    }

    #[test]
    fn heating_conserves_tokens() {
        let net = tiny();
        let m = Marking::singleton(PlaceIx(1), 2).union(&Marking::singleton(PlaceIx(0), 1));
        let after = net.fire(&m, &step(&[(1, 2)])).unwrap();
        assert_eq!(after.len(), m.len());
    }

    #[test]
    fn mutations() {
        let net = tiny();
        let smaller = net.without_transition(TransIx(1));
        assert_eq!(smaller.transitions(), &["t0", "t2"]);
        let heavier = net.with_arc_weight(TransIx(0), PlaceIx(1), false, 2);
        assert_eq!(heavier.weight_out(TransIx(0), PlaceIx(1)), 2);
        let dropped = net.with_arc_weight(TransIx(2), PlaceIx(0), true, 0);
        assert!(dropped.pre(TransIx(2)).is_empty());
    }

    #[test]
    fn dot_marks_zero_places_and_weights() {
        let dot = tiny().to_dot();
        assert!(dot.contains("p1 [shape=doublecircle"));
        assert!(dot.contains("p0 -> t2 [label=\"2\"];"));
        assert!(dot.contains("p0 -> t0;"));
    }
}
