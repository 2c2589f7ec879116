//! Maximally parallel semantics: micro steps on partial configurations,
//! heating, macro steps and bounded reachability.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::multiset::{Count, Multiset};
use crate::psystem::{MembraneId, MembraneSystem, Rule, RuleName, Symbol, Target};

/// Default bound on the number of explored configurations.
pub const DEFAULT_STATE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("rule `{rule}` is not applicable in membrane {membrane}")]
    NotApplicable { rule: String, membrane: MembraneId },
    #[error("membrane {membrane} has no rule `{rule}`")]
    UnknownRule { rule: String, membrane: MembraneId },
    #[error("membrane {0} does not exist")]
    UnknownMembrane(MembraneId),
    #[error("configuration has {found} membranes, the system has {expected}")]
    Arity { found: usize, expected: usize },
    #[error("state budget of {cap} configurations exhausted")]
    StateCap { cap: usize },
}

/// One multiset of objects per membrane.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Configuration(pub Vec<Multiset<Symbol>>);

impl Configuration {
    /// Builds a configuration from space-separated object names, one string per membrane.
    pub fn from_words(sys: &MembraneSystem, words: &[&str]) -> Option<Self> {
        if words.len() != sys.membranes() {
            return None;
        }
        let mut out = Vec::with_capacity(words.len());
        for w in words {
            let mut m = Multiset::new();
            for name in w.split_whitespace() {
                m.insert(sys.symbol(name)?.clone(), 1);
            }
            out.push(m);
        }
        Some(Self(out))
    }

    pub fn membrane(&self, i: MembraneId) -> &Multiset<Symbol> {
        &self.0[i.slot()]
    }

    /// Total number of objects.
    pub fn size(&self) -> u64 {
        self.0.iter().map(Multiset::len).sum()
    }

    /// The partial configuration `((w_1, 0), ..., (w_n, 0))`.
    pub fn to_partial(&self) -> PartialConfiguration {
        PartialConfiguration(
            self.0
                .iter()
                .map(|w| (w.clone(), Multiset::new()))
                .collect(),
        )
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, w) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str(")")
    }
}

/// Per membrane, the objects still available `w_i` and those produced
/// during the current step `w̄_i`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PartialConfiguration(pub Vec<(Multiset<Symbol>, Multiset<Symbol>)>);

impl fmt::Display for PartialConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, (w, p)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({w}, {p})")?;
        }
        f.write_str(")")
    }
}

/// One multiset of rule instances per membrane.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VectorMultiRule(pub Vec<Multiset<RuleName>>);

impl VectorMultiRule {
    pub fn empty(membranes: usize) -> Self {
        Self(vec![Multiset::new(); membranes])
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Multiset::is_empty)
    }

    pub fn membrane(&self, i: MembraneId) -> &Multiset<RuleName> {
        &self.0[i.slot()]
    }

    /// Total number of rule instances.
    pub fn size(&self) -> u64 {
        self.0.iter().map(Multiset::len).sum()
    }
}

impl fmt::Display for VectorMultiRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, r) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str(")")
    }
}

pub fn initial(sys: &MembraneSystem) -> PartialConfiguration {
    initial_configuration(sys).to_partial()
}

pub fn initial_configuration(sys: &MembraneSystem) -> Configuration {
    Configuration(sys.membrane_ids().map(|i| sys.initial(i).clone()).collect())
}

fn check_arity(sys: &MembraneSystem, found: usize) -> Result<(), SemanticsError> {
    if found == sys.membranes() {
        Ok(())
    } else {
        Err(SemanticsError::Arity {
            found,
            expected: sys.membranes(),
        })
    }
}

/// Applies one instance of rule `rule` of membrane `i`.
pub fn micro_step(
    sys: &MembraneSystem,
    gamma: &PartialConfiguration,
    rule: &str,
    i: MembraneId,
) -> Result<PartialConfiguration, SemanticsError> {
    check_arity(sys, gamma.0.len())?;
    if i.0 == 0 || i.slot() >= sys.membranes() {
        return Err(SemanticsError::UnknownMembrane(i));
    }
    let r = sys
        .rule(i, rule)
        .ok_or_else(|| SemanticsError::UnknownRule {
            rule: rule.into(),
            membrane: i,
        })?;
    apply_rule(sys, gamma, r, i)
}

pub(crate) fn apply_rule(
    sys: &MembraneSystem,
    gamma: &PartialConfiguration,
    r: &Rule,
    i: MembraneId,
) -> Result<PartialConfiguration, SemanticsError> {
    let mut out = gamma.clone();
    let (w, p) = &mut out.0[i.slot()];
    *w = w
        .checked_sub(&r.lhs)
        .ok_or_else(|| SemanticsError::NotApplicable {
            rule: r.name.to_string(),
            membrane: i,
        })?;
    *p = p.union(&r.products(Target::Here));
    if let Some(f) = sys.father(i).ok().flatten() {
        let p = &mut out.0[f.slot()].1;
        *p = p.union(&r.products(Target::Out));
    }
    for t in r.targets() {
        if let Target::In(j) = t {
            let p = &mut out.0[j.slot()].1;
            *p = p.union(&r.products(t));
        }
    }
    Ok(out)
}

/// True when no rule fits the available part of any membrane.
pub fn is_quiescent(sys: &MembraneSystem, gamma: &PartialConfiguration) -> bool {
    sys.membrane_ids().all(|i| {
        sys.rules(i)
            .iter()
            .all(|r| !r.lhs.leq(&gamma.0[i.slot()].0))
    })
}

/// Merges produced objects into the available ones.
pub fn heated(gamma: &PartialConfiguration) -> Configuration {
    Configuration(gamma.0.iter().map(|(w, p)| w.union(p)).collect())
}

/// A macro step together with the configuration it leads to.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MacroStep {
    pub rules: VectorMultiRule,
    pub target: Configuration,
    /// Objects sent out of the skin, which leave the system.
    pub expelled: Multiset<Symbol>,
}

/// Maximal multisets of rules of membrane `i` fitting `w`, in lexicographic
/// order of (rule position, count).
fn maximal_rule_multisets(rules: &[Rule], w: &Multiset<Symbol>) -> Vec<Multiset<RuleName>> {
    fn go(
        rules: &[Rule],
        k: usize,
        residual: &Multiset<Symbol>,
        chosen: &mut Vec<Count>,
        out: &mut Vec<Multiset<RuleName>>,
    ) {
        if k == rules.len() {
            if rules.iter().all(|r| !r.lhs.leq(residual)) {
                out.push(
                    rules
                        .iter()
                        .zip(chosen.iter())
                        .map(|(r, &c)| (r.name.clone(), c))
                        .collect(),
                );
            }
            return;
        }
        let lhs = &rules[k].lhs;
        let fit = lhs
            .iter()
            .map(|(s, c)| residual.get(s) / c)
            .min()
            .unwrap_or(0);
        let mut rest = residual.clone();
        for c in 0..=fit {
            if c > 0 {
                rest = rest.difference(lhs);
            }
            chosen.push(c);
            go(rules, k + 1, &rest, chosen, out);
            chosen.pop();
        }
    }
    let mut out = Vec::new();
    go(rules, 0, w, &mut Vec::new(), &mut out);
    out
}

/// Applies a vector multi-rule to a configuration in one go.
pub fn apply_vector(
    sys: &MembraneSystem,
    c: &Configuration,
    rules: &VectorMultiRule,
) -> Result<(Configuration, Multiset<Symbol>), SemanticsError> {
    check_arity(sys, c.0.len())?;
    check_arity(sys, rules.0.len())?;
    let mut avail = c.0.clone();
    let mut produced = vec![Multiset::new(); sys.membranes()];
    let mut expelled = Multiset::new();
    for i in sys.membrane_ids() {
        let father = sys.father(i).ok().flatten();
        for (name, n) in rules.membrane(i).iter() {
            let r = sys
                .rule(i, name.name())
                .ok_or_else(|| SemanticsError::UnknownRule {
                    rule: name.to_string(),
                    membrane: i,
                })?;
            avail[i.slot()] = avail[i.slot()]
                .checked_sub(&r.lhs.scalar(n))
                .ok_or_else(|| SemanticsError::NotApplicable {
                    rule: name.to_string(),
                    membrane: i,
                })?;
            for ((s, t), k) in r.rhs.iter() {
                let dest = match *t {
                    Target::Here => Some(i),
                    Target::Out => father,
                    Target::In(j) => Some(j),
                };
                match dest {
                    Some(d) => produced[d.slot()].insert(s.clone(), k * n),
                    None => expelled.insert(s.clone(), k * n),
                }
            }
        }
    }
    let target = avail
        .iter()
        .zip(&produced)
        .map(|(w, p)| w.union(p))
        .collect();
    Ok((Configuration(target), expelled))
}

/// All macro steps from `c`: per membrane, a multiset of rules whose
/// left-hand sides fit together and whose residual enables no further rule.
pub fn macro_steps(
    sys: &MembraneSystem,
    c: &Configuration,
) -> Result<Vec<MacroStep>, SemanticsError> {
    check_arity(sys, c.0.len())?;
    let per: Vec<Vec<Multiset<RuleName>>> = sys
        .membrane_ids()
        .map(|i| maximal_rule_multisets(sys.rules(i), c.membrane(i)))
        .collect();
    let mut vectors = vec![Vec::new()];
    for options in &per {
        let mut next = Vec::with_capacity(vectors.len() * options.len());
        for prefix in &vectors {
            for o in options {
                let mut v: Vec<Multiset<RuleName>> = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        vectors = next;
    }
    let mut out = Vec::new();
    for v in vectors {
        let rules = VectorMultiRule(v);
        if rules.is_empty() {
            continue;
        }
        let (target, expelled) = apply_vector(sys, c, &rules)?;
        out.push(MacroStep {
            rules,
            target,
            expelled,
        });
    }
    Ok(out)
}

/// Macro steps found by exploring every interleaving of micro steps until
/// quiescence. Exponential; intended as a cross-check for [`macro_steps`].
pub fn macro_steps_by_interleaving(
    sys: &MembraneSystem,
    c: &Configuration,
) -> Result<Vec<(VectorMultiRule, Configuration)>, SemanticsError> {
    check_arity(sys, c.0.len())?;
    let start = (c.to_partial(), VectorMultiRule::empty(sys.membranes()));
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([start.clone()]);
    seen.insert(start);
    let mut found = std::collections::BTreeSet::new();
    while let Some((gamma, acc)) = queue.pop_front() {
        let mut moved = false;
        for i in sys.membrane_ids() {
            for r in sys.rules(i) {
                if let Ok(next) = apply_rule(sys, &gamma, r, i) {
                    moved = true;
                    let mut acc2 = acc.clone();
                    acc2.0[i.slot()].insert(r.name.clone(), 1);
                    let state = (next, acc2);
                    if seen.insert(state.clone()) {
                        queue.push_back(state);
                    }
                }
            }
        }
        if !moved && !acc.is_empty() {
            found.insert((acc, heated(&gamma)));
        }
    }
    Ok(found.into_iter().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    #[serde(serialize_with = "display")]
    pub rules: VectorMultiRule,
    #[serde(serialize_with = "display")]
    pub expelled: Multiset<Symbol>,
}

fn display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Configurations reachable within a number of macro steps.
#[derive(Debug, Clone)]
pub struct ReachabilityGraph {
    /// Node 0 is the initial configuration; nodes are in breadth-first order.
    pub nodes: Vec<Configuration>,
    /// Macro-step distance from the initial configuration.
    pub depth: Vec<usize>,
    /// Whether no macro step leaves the node.
    pub halting: Vec<bool>,
    /// Edges out of every node with depth below the bound.
    pub edges: Vec<Edge>,
    pub bound: usize,
}

impl ReachabilityGraph {
    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.nodes.iter().position(|n| n == c)
    }

    pub fn successors(&self, node: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.from == node)
    }

    pub fn to_export(&self) -> GraphExport {
        GraphExport {
            bound: self.bound,
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(k, c)| NodeExport {
                    id: k,
                    configuration: c.to_string(),
                    depth: self.depth[k],
                    halting: self.halting[k],
                })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut out =
            String::from("digraph reachability {\n  node [shape=box, fontname=\"monospace\"];\n");
        for (k, c) in self.nodes.iter().enumerate() {
            let style = if self.halting[k] {
                ", peripheries=2"
            } else {
                ""
            };
            out.push_str(&format!("  n{k} [label=\"{c}\"{style}];\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{}\"];\n",
                e.from, e.to, e.rules
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphExport {
    pub bound: usize,
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeExport {
    pub id: usize,
    pub configuration: String,
    pub depth: usize,
    pub halting: bool,
}

/// Breadth-first exploration of macro steps from the initial configuration.
///
/// Successors of one frontier are computed in parallel and merged in
/// frontier order, so the result does not depend on scheduling.
pub fn reachability_graph(
    sys: &MembraneSystem,
    depth: usize,
    cap: usize,
) -> Result<ReachabilityGraph, SemanticsError> {
    let init = initial_configuration(sys);
    let mut index: HashMap<Configuration, usize> = HashMap::from([(init.clone(), 0)]);
    let mut g = ReachabilityGraph {
        nodes: vec![init],
        depth: vec![0],
        halting: vec![],
        edges: vec![],
        bound: depth,
    };
    if cap == 0 {
        return Err(SemanticsError::StateCap { cap });
    }
    let mut frontier = vec![0usize];
    for d in 0..depth {
        let succ: Vec<Result<Vec<MacroStep>, SemanticsError>> = frontier
            .par_iter()
            .map(|&n| macro_steps(sys, &g.nodes[n]))
            .collect();
        let mut next = Vec::new();
        for (&from, steps) in frontier.iter().zip(succ) {
            for step in steps? {
                let to = match index.get(&step.target) {
                    Some(&k) => k,
                    None => {
                        if g.nodes.len() >= cap {
                            return Err(SemanticsError::StateCap { cap });
                        }
                        let k = g.nodes.len();
                        index.insert(step.target.clone(), k);
                        g.nodes.push(step.target);
                        g.depth.push(d + 1);
                        next.push(k);
                        k
                    }
                };
                g.edges.push(Edge {
                    from,
                    to,
                    rules: step.rules,
                    expelled: step.expelled,
                });
            }
        }
        frontier = next;
    }
    g.halting = g
        .nodes
        .iter()
        .map(|c| is_quiescent(sys, &c.to_partial()))
        .collect();
    Ok(g)
}

/// A sequence of macro steps from the initial configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Computation {
    /// `configurations.len() == steps.len() + 1`.
    pub configurations: Vec<Configuration>,
    pub steps: Vec<VectorMultiRule>,
}

impl Computation {
    pub fn last(&self) -> &Configuration {
        self.configurations
            .last()
            .expect("a computation has an initial configuration")
    }
}

/// Every computation of at most `max_len` macro steps, prefixes included,
/// in breadth-first order.
pub fn computations(
    sys: &MembraneSystem,
    max_len: usize,
    cap: usize,
) -> Result<Vec<Computation>, SemanticsError> {
    let start = Computation {
        configurations: vec![initial_configuration(sys)],
        steps: vec![],
    };
    let mut out = vec![start];
    let mut memo: BTreeMap<Configuration, Vec<MacroStep>> = BTreeMap::new();
    let mut lo = 0;
    for _ in 0..max_len {
        let hi = out.len();
        for k in lo..hi {
            let last = out[k].last().clone();
            if !memo.contains_key(&last) {
                let steps = macro_steps(sys, &last)?;
                memo.insert(last.clone(), steps);
            }
            for step in &memo[&last] {
                if out.len() >= cap {
                    return Err(SemanticsError::StateCap { cap });
                }
                let mut c = out[k].clone();
                c.configurations.push(step.target.clone());
                c.steps.push(step.rules.clone());
                out.push(c);
            }
        }
        lo = hi;
    }
    Ok(out)
}
