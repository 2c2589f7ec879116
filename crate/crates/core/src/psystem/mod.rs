//! Membrane systems: alphabet, membrane tree, initial multisets and rules.

mod parse;
mod pretty;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::multiset::Multiset;

pub use parse::{parse, parse_with, ParseOptions};

/// An object of the alphabet. Ordered by declaration position.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol {
    index: u32,
    name: Arc<str>,
}

impl Symbol {
    pub(crate) fn new(index: usize, name: &str) -> Self {
        Self {
            index: index as u32,
            name: name.into(),
        }
    }

    /// Declaration position in the alphabet.
    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Name of a rule, ordered by its position inside its membrane.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleName {
    index: u32,
    name: Arc<str>,
}

impl RuleName {
    pub(crate) fn new(index: usize, name: &str) -> Self {
        Self {
            index: index as u32,
            name: name.into(),
        }
    }

    /// Position of the rule inside its membrane's rule list.
    pub fn index(&self) -> usize {
        self.index as usize
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Debug for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Membrane index, 1-based; membrane 1 is the skin.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize)]
#[serde(transparent)]
pub struct MembraneId(pub u32);

impl MembraneId {
    pub const SKIN: MembraneId = MembraneId(1);

    /// Zero-based position, for indexing per-membrane vectors.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_slot(slot: usize) -> Self {
        MembraneId(slot as u32 + 1)
    }
}

impl fmt::Display for MembraneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Destination of a produced object.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Target {
    Here,
    Out,
    In(MembraneId),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Here => f.write_str("here"),
            Target::Out => f.write_str("out"),
            Target::In(j) => write!(f, "in({j})"),
        }
    }
}

/// An evolution rule `u -> v`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub name: RuleName,
    pub lhs: Multiset<Symbol>,
    pub rhs: Multiset<(Symbol, Target)>,
}

impl Rule {
    /// The objects of the right-hand side sent to `target`.
    pub fn products(&self, target: Target) -> Multiset<Symbol> {
        self.rhs
            .iter()
            .filter(|((_, t), _)| *t == target)
            .map(|((s, _), c)| (s.clone(), c))
            .collect()
    }

    /// Distinct targets occurring on the right-hand side.
    pub fn targets(&self) -> BTreeSet<Target> {
        self.rhs.iter().map(|((_, t), _)| *t).collect()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.name)?;
        for s in self.lhs.elements() {
            write!(f, " {s}")?;
        }
        f.write_str(" ->")?;
        for (i, (s, t)) in self.rhs.elements().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}({s}, {t})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PsystemError {
    #[error("membrane {index} out of range 1..={count}")]
    MembraneOutOfRange { index: u32, count: usize },
    #[error("{0}")]
    Invalid(Diagnostics),
}

/// A positioned message produced while parsing or validating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    /// 1-based; 0 when the message has no source position.
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn at(line: usize, col: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            col,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            f.write_str(&self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.col, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Rooted membrane tree with indices `1..=n`, root 1, and `parent(j) < j`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MembraneTree {
    parent: Vec<Option<MembraneId>>,
}

impl MembraneTree {
    /// `parents[k]` is the father of membrane `k + 1`.
    pub fn new(parents: Vec<Option<MembraneId>>) -> Result<Self, String> {
        if parents.is_empty() {
            return Err("a membrane structure has at least one membrane".into());
        }
        for (slot, p) in parents.iter().enumerate() {
            let id = MembraneId::from_slot(slot);
            match (slot, p) {
                (0, None) => {}
                (0, Some(_)) => return Err("membrane 1 is the skin and has no father".into()),
                (_, None) => return Err(format!("membrane {id} has no father")),
                (_, Some(f)) if f.0 == 0 || f.0 >= id.0 => {
                    return Err(format!(
                        "father of membrane {id} must have a smaller index, got {f}"
                    ))
                }
                _ => {}
            }
        }
        Ok(Self { parent: parents })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = MembraneId> + '_ {
        (0..self.parent.len()).map(MembraneId::from_slot)
    }

    fn check(&self, i: MembraneId) -> Result<(), PsystemError> {
        if i.0 == 0 || i.slot() >= self.parent.len() {
            Err(PsystemError::MembraneOutOfRange {
                index: i.0,
                count: self.parent.len(),
            })
        } else {
            Ok(())
        }
    }

    pub fn father(&self, i: MembraneId) -> Result<Option<MembraneId>, PsystemError> {
        self.check(i)?;
        Ok(self.parent[i.slot()])
    }

    pub fn children(&self, i: MembraneId) -> Result<Vec<MembraneId>, PsystemError> {
        self.check(i)?;
        Ok(self
            .ids()
            .filter(|&j| self.parent[j.slot()] == Some(i))
            .collect())
    }

    /// Number of membranes in the subtree rooted at `i` (`mem`).
    pub fn mem(&self, i: MembraneId) -> Result<usize, PsystemError> {
        Ok(1 + self
            .children(i)?
            .into_iter()
            .map(|c| self.mem(c).unwrap_or(0))
            .sum::<usize>())
    }

    /// Nesting depth of the subtree rooted at `i`; a leaf has depth 1.
    pub fn depth(&self, i: MembraneId) -> Result<usize, PsystemError> {
        let below = self
            .children(i)?
            .into_iter()
            .map(|c| self.depth(c).unwrap_or(0))
            .max();
        Ok(1 + below.unwrap_or(0))
    }
}

/// A validated membrane system.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MembraneSystem {
    alphabet: Vec<Symbol>,
    tree: MembraneTree,
    init: Vec<Multiset<Symbol>>,
    rules: Vec<Vec<Rule>>,
    allow_skin_out: bool,
}

impl MembraneSystem {
    pub(crate) fn from_parts(
        alphabet: Vec<Symbol>,
        tree: MembraneTree,
        init: Vec<Multiset<Symbol>>,
        rules: Vec<Vec<Rule>>,
        allow_skin_out: bool,
    ) -> Self {
        debug_assert_eq!(tree.len(), init.len());
        debug_assert_eq!(tree.len(), rules.len());
        Self {
            alphabet,
            tree,
            init,
            rules,
            allow_skin_out,
        }
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn symbol(&self, name: &str) -> Option<&Symbol> {
        self.alphabet.iter().find(|s| s.name() == name)
    }

    pub fn tree(&self) -> &MembraneTree {
        &self.tree
    }

    /// Number of membranes.
    pub fn membranes(&self) -> usize {
        self.tree.len()
    }

    pub fn membrane_ids(&self) -> impl Iterator<Item = MembraneId> + '_ {
        self.tree.ids()
    }

    pub fn father(&self, i: MembraneId) -> Result<Option<MembraneId>, PsystemError> {
        self.tree.father(i)
    }

    pub fn children(&self, i: MembraneId) -> Result<Vec<MembraneId>, PsystemError> {
        self.tree.children(i)
    }

    /// Initial multiset of membrane `i`; panics when `i` is out of range.
    pub fn initial(&self, i: MembraneId) -> &Multiset<Symbol> {
        &self.init[i.slot()]
    }

    /// Rules of membrane `i` in declaration order; panics when `i` is out of range.
    pub fn rules(&self, i: MembraneId) -> &[Rule] {
        &self.rules[i.slot()]
    }

    pub fn rule(&self, i: MembraneId, name: &str) -> Option<&Rule> {
        self.rules
            .get((i.0 as usize).checked_sub(1)?)?
            .iter()
            .find(|r| r.name.name() == name)
    }

    /// Whether objects sent out of the skin are discarded instead of rejected.
    pub fn allow_skin_out(&self) -> bool {
        self.allow_skin_out
    }

    /// Total number of rules over all membranes.
    pub fn rule_count(&self) -> usize {
        self.rules.iter().map(Vec::len).sum()
    }

    pub fn to_export(&self) -> SystemExport {
        SystemExport {
            objects: self.alphabet.iter().map(|s| s.name().to_string()).collect(),
            membranes: self
                .membrane_ids()
                .map(|i| MembraneExport {
                    index: i,
                    parent: self.tree.parent[i.slot()],
                    init: self.init[i.slot()].to_string(),
                    rules: self.rules[i.slot()]
                        .iter()
                        .map(|r| RuleExport {
                            name: r.name.name().to_string(),
                            lhs: r.lhs.to_string(),
                            rhs: r
                                .rhs
                                .elements()
                                .map(|(s, t)| ProductExport {
                                    object: s.name().to_string(),
                                    target: t.to_string(),
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
            allow_skin_out: self.allow_skin_out,
        }
    }
}

/// Serializable mirror of [`MembraneSystem`].
#[derive(Debug, Clone, Serialize)]
pub struct SystemExport {
    pub objects: Vec<String>,
    pub membranes: Vec<MembraneExport>,
    pub allow_skin_out: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembraneExport {
    pub index: MembraneId,
    pub parent: Option<MembraneId>,
    pub init: String,
    pub rules: Vec<RuleExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleExport {
    pub name: String,
    pub lhs: String,
    pub rhs: Vec<ProductExport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductExport {
    pub object: String,
    pub target: String,
}

/// Unvalidated membrane declaration, as written in the source.
#[derive(Debug, Clone)]
pub(crate) struct MembraneDecl {
    pub index: u32,
    pub pos: (usize, usize),
    pub init: Vec<(String, (usize, usize))>,
    pub rules: Vec<RuleDecl>,
    pub children: Vec<MembraneDecl>,
}

#[derive(Debug, Clone)]
pub(crate) struct RuleDecl {
    pub name: String,
    pub pos: (usize, usize),
    pub lhs: Vec<(String, (usize, usize))>,
    pub rhs: Vec<ProductDecl>,
}

#[derive(Debug, Clone)]
pub(crate) struct ProductDecl {
    pub object: String,
    pub pos: (usize, usize),
    pub target: TargetDecl,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum TargetDecl {
    Here,
    Out,
    In(u32),
}

/// Turns declarations into a [`MembraneSystem`], collecting every problem found.
pub(crate) fn validate(
    objects: &[(String, (usize, usize))],
    root: &MembraneDecl,
    options: ParseOptions,
) -> Result<MembraneSystem, Diagnostics> {
    let mut diags = Vec::new();
    let diag = |pos: (usize, usize), msg: String| Diagnostic::at(pos.0, pos.1, msg);

    let mut alphabet: Vec<Symbol> = Vec::new();
    let mut by_name: BTreeMap<&str, Symbol> = BTreeMap::new();
    for (name, pos) in objects {
        if by_name.contains_key(name.as_str()) {
            diags.push(diag(*pos, format!("object `{name}` declared twice")));
            continue;
        }
        let s = Symbol::new(alphabet.len(), name);
        by_name.insert(name, s.clone());
        alphabet.push(s);
    }

    // Flatten the tree, recording fathers.
    let mut flat: Vec<(&MembraneDecl, Option<u32>)> = Vec::new();
    let mut stack = vec![(root, None)];
    while let Some((m, father)) = stack.pop() {
        flat.push((m, father));
        for c in m.children.iter().rev() {
            stack.push((c, Some(m.index)));
        }
    }
    let n = flat.len();
    if root.index != 1 {
        diags.push(diag(
            root.pos,
            format!(
                "the outermost membrane must have index 1, found {}",
                root.index
            ),
        ));
    }
    let mut slots: Vec<Option<&(&MembraneDecl, Option<u32>)>> = vec![None; n];
    for entry in &flat {
        let (m, father) = entry;
        if m.index == 0 || m.index as usize > n {
            diags.push(diag(
                m.pos,
                format!("membrane index {} outside 1..={n}", m.index),
            ));
            continue;
        }
        if let Some(f) = father {
            if *f >= m.index {
                diags.push(diag(
                    m.pos,
                    format!(
                        "membrane {} is nested in membrane {f}; nested indices must be larger",
                        m.index
                    ),
                ));
            }
        }
        let slot = &mut slots[m.index as usize - 1];
        if slot.is_some() {
            diags.push(diag(
                m.pos,
                format!("membrane index {} used twice", m.index),
            ));
        } else {
            *slot = Some(entry);
        }
    }
    if !diags.is_empty() || slots.iter().any(Option::is_none) {
        if diags.is_empty() {
            diags.push(Diagnostic::at(
                0,
                0,
                "membrane indices must be exactly 1..=n",
            ));
        }
        return Err(Diagnostics(diags));
    }
    let slots: Vec<&(&MembraneDecl, Option<u32>)> = slots.into_iter().map(Option::unwrap).collect();
    let parents: Vec<Option<MembraneId>> = slots.iter().map(|(_, f)| f.map(MembraneId)).collect();
    let tree = match MembraneTree::new(parents) {
        Ok(t) => t,
        Err(e) => return Err(Diagnostics(vec![diag(root.pos, e)])),
    };

    let lookup = |name: &str, pos: (usize, usize), diags: &mut Vec<Diagnostic>| -> Option<Symbol> {
        let s = by_name.get(name).cloned();
        if s.is_none() {
            diags.push(diag(pos, format!("unknown object `{name}`")));
        }
        s
    };

    let mut init = Vec::with_capacity(n);
    let mut rules = Vec::with_capacity(n);
    for (m, _) in slots.iter().copied() {
        let id = MembraneId(m.index);
        let mut w = Multiset::new();
        for (name, pos) in &m.init {
            if let Some(s) = lookup(name, *pos, &mut diags) {
                w.insert(s, 1);
            }
        }
        init.push(w);

        let children = tree.children(id).unwrap_or_default();
        let mut seen = BTreeSet::new();
        let mut rs = Vec::new();
        for r in &m.rules {
            if !seen.insert(r.name.as_str()) {
                diags.push(diag(
                    r.pos,
                    format!("rule `{}` declared twice in membrane {id}", r.name),
                ));
                continue;
            }
            if r.lhs.is_empty() {
                diags.push(diag(r.pos, format!("empty lhs in rule `{}`", r.name)));
            }
            let mut lhs = Multiset::new();
            for (name, pos) in &r.lhs {
                if let Some(s) = lookup(name, *pos, &mut diags) {
                    lhs.insert(s, 1);
                }
            }
            let mut rhs = Multiset::new();
            for p in &r.rhs {
                let target = match p.target {
                    TargetDecl::Here => Target::Here,
                    TargetDecl::Out => {
                        if id == MembraneId::SKIN && !options.allow_skin_out {
                            diags.push(diag(
                                p.pos,
                                format!(
                                    "rule `{}` sends `{}` out of the skin membrane",
                                    r.name, p.object
                                ),
                            ));
                        }
                        Target::Out
                    }
                    TargetDecl::In(j) => {
                        if !children.contains(&MembraneId(j)) {
                            diags.push(diag(
                                p.pos,
                                format!("in({j}) in rule `{}`: membrane {j} is not a child of membrane {id}", r.name),
                            ));
                        }
                        Target::In(MembraneId(j))
                    }
                };
                if let Some(s) = lookup(&p.object, p.pos, &mut diags) {
                    rhs.insert((s, target), 1);
                }
            }
            rs.push(Rule {
                name: RuleName::new(rs.len(), &r.name),
                lhs,
                rhs,
            });
        }
        rules.push(rs);
    }

    if diags.is_empty() {
        Ok(MembraneSystem::from_parts(
            alphabet,
            tree,
            init,
            rules,
            options.allow_skin_out,
        ))
    } else {
        Err(Diagnostics(diags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn pi1_has_one_membrane() {
        let sys = parse(fixtures::PI1).unwrap();
        assert_eq!(sys.membranes(), 1);
        assert_eq!(sys.initial(MembraneId(1)).to_string(), "{a:1, b:1}");
        let names: Vec<_> = sys
            .rules(MembraneId(1))
            .iter()
            .map(|r| r.name.name())
            .collect();
        assert_eq!(names, ["r1", "r2", "r3"]);
        assert_eq!(sys.children(MembraneId(1)).unwrap(), vec![]);
    }

    #[test]
    fn intro_structure() {
        let sys = parse(fixtures::INTRO1).unwrap();
        assert_eq!(sys.membranes(), 2);
        assert_eq!(sys.father(MembraneId(2)).unwrap(), Some(MembraneId(1)));
        assert_eq!(sys.father(MembraneId(1)).unwrap(), None);
        assert_eq!(sys.children(MembraneId(1)).unwrap(), vec![MembraneId(2)]);
        assert!(sys.children(MembraneId(2)).unwrap().is_empty());
        assert_eq!(
            sys.father(MembraneId(5)),
            Err(PsystemError::MembraneOutOfRange { index: 5, count: 2 })
        );
        assert_eq!(sys.initial(MembraneId(2)).to_string(), "{a:2, b:1}");
        let r2 = sys.rule(MembraneId(2), "r2").unwrap();
        assert_eq!(r2.products(Target::Out).to_string(), "{b:1}");
        assert!(r2.products(Target::Here).is_empty());
    }

    #[test]
    fn tree_rejects_bad_fathers() {
        assert!(MembraneTree::new(vec![]).is_err());
        assert!(MembraneTree::new(vec![None, Some(MembraneId(2))]).is_err());
        assert!(MembraneTree::new(vec![None, None]).is_err());
        assert!(MembraneTree::new(vec![None, Some(MembraneId(1)), Some(MembraneId(1))]).is_ok());
    }

    fn arb_tree() -> impl Strategy<Value = MembraneTree> {
        proptest::collection::vec(any::<prop::sample::Index>(), 0..12).prop_map(|picks| {
            let mut parents = vec![None];
            for (k, p) in picks.into_iter().enumerate() {
                parents.push(Some(MembraneId::from_slot(p.index(k + 1))));
            }
            MembraneTree::new(parents).unwrap()
        })
    }

    proptest! {
        #[test]
        fn mem_and_depth_match_brute_force(tree in arb_tree()) {
            let ancestors = |j: MembraneId| {
                let mut chain = vec![j];
                let mut cur = j;
                while let Some(f) = tree.father(cur).unwrap() {
                    chain.push(f);
                    cur = f;
                }
                chain
            };
            for i in tree.ids() {
                let below: Vec<usize> = tree
                    .ids()
                    .filter_map(|j| ancestors(j).iter().position(|&a| a == i))
                    .collect();
                prop_assert_eq!(tree.mem(i).unwrap(), below.len());
                prop_assert_eq!(tree.depth(i).unwrap(), below.iter().max().unwrap() + 1);
            }
        }
    }
}
