//! Translation of a membrane system into a zero-safe net, the marking of a
//! partial configuration, and the step-by-step correspondence checker.
//!
//! Each object `a` of membrane `i` gets a stable place `(a,i,nz)` and a zero
//! place `(a,i,z)`. Rule `r` of membrane `i` becomes a transition `t_i^r`
//! consuming its left-hand side from stable places and depositing every
//! product on the zero place of its destination membrane. The heating
//! transition `t^h_(a,i)` moves one token from `(a,i,z)` to `(a,i,nz)`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::multiset::Multiset;
use crate::psystem::{MembraneId, MembraneSystem, RuleName, Symbol, Target};
use crate::semantics::{
    apply_rule, heated, macro_steps, reachability_graph, Configuration, PartialConfiguration,
    SemanticsError, VectorMultiRule,
};
use crate::zsnet::{Marking, NetError, Step, TransIx, TransitionSpec, Verdict, ZsNet};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Kind {
    Nz,
    Z,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PlaceId {
    pub object: Symbol,
    pub membrane: MembraneId,
    pub kind: Kind,
}

impl fmt::Display for PlaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Kind::Nz => "nz",
            Kind::Z => "z",
        };
        write!(f, "({},{},{k})", self.object, self.membrane)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TransitionId {
    Rule {
        rule: RuleName,
        membrane: MembraneId,
    },
    Heat {
        object: Symbol,
        membrane: MembraneId,
    },
}

impl TransitionId {
    pub fn is_heat(&self) -> bool {
        matches!(self, TransitionId::Heat { .. })
    }
}

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransitionId::Rule { rule, membrane } => write!(f, "t_{membrane}^{rule}"),
            TransitionId::Heat { object, membrane } => write!(f, "t^h_({object},{membrane})"),
        }
    }
}

pub type MembraneNet = ZsNet<PlaceId, TransitionId>;

fn place(a: &Symbol, i: MembraneId, kind: Kind) -> PlaceId {
    PlaceId {
        object: a.clone(),
        membrane: i,
        kind,
    }
}

/// Builds the zero-safe net of `sys`.
///
/// Places are ordered by membrane, object, then `nz` before `z`; rule
/// transitions come first in membrane and declaration order, followed by
/// heatings. Objects sent out of the skin produce no token.
pub fn compile(sys: &MembraneSystem) -> MembraneNet {
    let mut places = Vec::new();
    for i in sys.membrane_ids() {
        for a in sys.alphabet() {
            places.push((place(a, i, Kind::Nz), false));
            places.push((place(a, i, Kind::Z), true));
        }
    }
    let ix = |a: &Symbol, i: MembraneId, kind: Kind| {
        let k = (i.slot() * sys.alphabet().len() + a.index()) * 2 + usize::from(kind == Kind::Z);
        crate::zsnet::PlaceIx(k as u32)
    };
    let mut transitions: Vec<TransitionSpec<TransitionId>> = Vec::new();
    for i in sys.membrane_ids() {
        let father = sys.father(i).ok().flatten();
        for r in sys.rules(i) {
            let pre = r.lhs.iter().map(|(a, c)| (ix(a, i, Kind::Nz), c)).collect();
            let post = r
                .rhs
                .iter()
                .filter_map(|((a, t), c)| {
                    let dest = match *t {
                        Target::Here => Some(i),
                        Target::Out => father,
                        Target::In(j) => Some(j),
                    };
                    dest.map(|d| (ix(a, d, Kind::Z), c))
                })
                .collect();
            transitions.push((
                TransitionId::Rule {
                    rule: r.name.clone(),
                    membrane: i,
                },
                pre,
                post,
            ));
        }
    }
    for i in sys.membrane_ids() {
        for a in sys.alphabet() {
            transitions.push((
                TransitionId::Heat {
                    object: a.clone(),
                    membrane: i,
                },
                vec![(ix(a, i, Kind::Z), 1)],
                vec![(ix(a, i, Kind::Nz), 1)],
            ));
        }
    }
    let initial = sys
        .membrane_ids()
        .flat_map(|i| {
            sys.initial(i)
                .iter()
                .map(move |(a, c)| (ix(a, i, Kind::Nz), c))
                .collect::<Vec<_>>()
        })
        .collect();
    ZsNet::new(places, transitions, initial).expect("compiled nets are well formed")
}

/// The marking of a partial configuration: available objects on `nz`
/// places, produced ones on `z` places.
///
/// Places missing from `net` are skipped, so this also works on mutated nets.
pub fn nu(net: &MembraneNet, gamma: &PartialConfiguration) -> Marking {
    let mut m = Marking::new();
    for (slot, (w, p)) in gamma.0.iter().enumerate() {
        let i = MembraneId::from_slot(slot);
        for (kind, part) in [(Kind::Nz, w), (Kind::Z, p)] {
            for (a, c) in part.iter() {
                if let Some(px) = net.place_index(&place(a, i, kind)) {
                    m.insert(px, c);
                }
            }
        }
    }
    m
}

/// `ν` of a configuration, read as a partial configuration with nothing produced.
pub fn nu_config(net: &MembraneNet, c: &Configuration) -> Marking {
    nu(net, &c.to_partial())
}

/// Inverse of [`nu`] on markings of a compiled net.
pub fn partial_of_marking(
    sys: &MembraneSystem,
    net: &MembraneNet,
    m: &Marking,
) -> PartialConfiguration {
    let mut out = vec![(Multiset::new(), Multiset::new()); sys.membranes()];
    for (p, c) in m.iter() {
        let id = net.place(*p);
        let part = &mut out[id.membrane.slot()];
        match id.kind {
            Kind::Nz => part.0.insert(id.object.clone(), c),
            Kind::Z => part.1.insert(id.object.clone(), c),
        }
    }
    PartialConfiguration(out)
}

/// `U_R`: one firing of `t_i^r` per instance of `r` in `R_i`.
pub fn rule_step(net: &MembraneNet, rules: &VectorMultiRule) -> Result<Step, TransitionId> {
    let mut u = Step::new();
    for (slot, rs) in rules.0.iter().enumerate() {
        for (r, c) in rs.iter() {
            let id = TransitionId::Rule {
                rule: r.clone(),
                membrane: MembraneId::from_slot(slot),
            };
            u.insert(net.transition_index(&id).ok_or(id)?, c);
        }
    }
    Ok(u)
}

/// `U_heat`: one firing of `t^h_(a,i)` per produced object `a` of membrane `i`.
pub fn heat_step(net: &MembraneNet, gamma: &PartialConfiguration) -> Result<Step, TransitionId> {
    let mut u = Step::new();
    for (slot, (_, p)) in gamma.0.iter().enumerate() {
        for (a, c) in p.iter() {
            let id = TransitionId::Heat {
                object: a.clone(),
                membrane: MembraneId::from_slot(slot),
            };
            u.insert(net.transition_index(&id).ok_or(id)?, c);
        }
    }
    Ok(u)
}

/// The vector multi-rule of the rule transitions in `u`; heatings are ignored.
pub fn rules_of_step(sys: &MembraneSystem, net: &MembraneNet, u: &Step) -> VectorMultiRule {
    let mut v = VectorMultiRule::empty(sys.membranes());
    for (t, c) in u.iter() {
        if let TransitionId::Rule { rule, membrane } = net.transition(*t) {
            v.0[membrane.slot()].insert(rule.clone(), c);
        }
    }
    v
}

/// Outcome of one proposition of the correspondence check.
#[derive(Debug, Clone, Serialize)]
pub struct PropositionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual assertions evaluated.
    pub checked: usize,
    /// First counterexample found, if any.
    pub witness: Option<String>,
}

impl PropositionResult {
    fn new(id: u8, name: &'static str) -> Self {
        Self {
            id,
            name,
            passed: true,
            checked: 0,
            witness: None,
        }
    }

    fn assert(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.passed {
            self.passed = false;
            self.witness = Some(witness());
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    pub depth: usize,
    pub configurations: usize,
    pub macro_steps: usize,
    pub transactions: usize,
    pub propositions: Vec<PropositionResult>,
}

impl CorrespondenceReport {
    pub fn passed(&self) -> bool {
        self.propositions.iter().all(|p| p.passed)
    }

    pub fn summary(&self) -> String {
        let ok = self.propositions.iter().filter(|p| p.passed).count();
        format!("{ok}/{} propositions verified", self.propositions.len())
    }
}

impl fmt::Display for CorrespondenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "explored {} configurations, {} macro steps, {} stable transactions (depth {})",
            self.configurations, self.macro_steps, self.transactions, self.depth
        )?;
        for p in &self.propositions {
            let status = if p.passed { "ok  " } else { "FAIL" };
            writeln!(
                f,
                "  [{status}] ({}) {} ({} checks)",
                p.id, p.name, p.checked
            )?;
            if let Some(w) = &p.witness {
                writeln!(f, "         witness: {w}")?;
            }
        }
        write!(f, "{}", self.summary())
    }
}

/// Checks the compiled net of `sys` against its semantics on every
/// configuration reachable within `depth` macro steps.
pub fn check_correspondence(
    sys: &MembraneSystem,
    depth: usize,
    cap: usize,
) -> Result<CorrespondenceReport, SemanticsError> {
    check_correspondence_with(sys, &compile(sys), depth, cap)
}

/// Like [`check_correspondence`], against a given (possibly altered) net.
pub fn check_correspondence_with(
    sys: &MembraneSystem,
    net: &MembraneNet,
    depth: usize,
    cap: usize,
) -> Result<CorrespondenceReport, SemanticsError> {
    let graph = reachability_graph(sys, depth, cap)?;
    let mut effects = PropositionResult::new(1, "rule effects match transition firings");
    let mut heating = PropositionResult::new(2, "heating step reaches the heated configuration");
    let mut forward = PropositionResult::new(3, "every macro step is a stable transaction");
    let mut converse = PropositionResult::new(4, "every stable transaction is a macro step");
    let mut partition = PropositionResult::new(
        5,
        "zero-place producers and consumers partition the transitions",
    );
    let mut macro_count = 0;
    let mut transaction_count = 0;

    let rule_ids: Vec<(MembraneId, &crate::psystem::Rule)> = sys
        .membrane_ids()
        .flat_map(|i| sys.rules(i).iter().map(move |r| (i, r)))
        .collect();

    // (1) and (2) along the micro steps of every macro step, firing every
    // applicable rule at every visited partial configuration.
    let check_partial = |gamma: &PartialConfiguration,
                         effects: &mut PropositionResult,
                         heating: &mut PropositionResult| {
        let m = nu(net, gamma);
        for (i, r) in &rule_ids {
            let id = TransitionId::Rule {
                rule: r.name.clone(),
                membrane: *i,
            };
            let t = net.transition_index(&id);
            match (apply_rule(sys, gamma, r, *i), t) {
                (Ok(next), Some(t)) => {
                    let fired = net.fire(&m, &Step::singleton(t, 1));
                    effects.assert(fired.as_ref().ok() == Some(&nu(net, &next)), || {
                        format!(
                            "{id} at {gamma}: expected {}, net gives {}",
                            nu_text(net, &next),
                            fired_text(net, &fired)
                        )
                    });
                }
                (Ok(_), None) => effects.assert(false, || format!("{id} is missing from the net")),
                (Err(_), Some(t)) => {
                    let enabled = net.enabled(&m, &Step::singleton(t, 1)).unwrap_or(false);
                    effects.assert(!enabled, || {
                        format!("{id} is enabled at {gamma} although the rule is not applicable")
                    });
                }
                (Err(_), None) => {}
            }
        }
        let target = nu_config(net, &heated(gamma));
        match heat_step(net, gamma) {
            Ok(u) => {
                let fired = net.fire(&m, &u);
                heating.assert(fired.as_ref().ok() == Some(&target), || {
                    format!(
                        "heating {} at {gamma}: expected {}, net gives {}",
                        net.step_text(&u),
                        net.marking_text(&target),
                        fired_text(net, &fired)
                    )
                });
            }
            Err(id) => heating.assert(false, || {
                format!("heating at {gamma} needs {id}, which is missing from the net")
            }),
        }
    };

    let mut visited: HashSet<PartialConfiguration> = HashSet::new();
    for (k, c) in graph.nodes.iter().enumerate() {
        let steps = if graph.depth[k] < depth {
            graph
                .successors(k)
                .map(|e| (e.rules.clone(), graph.nodes[e.to].clone()))
                .collect::<Vec<_>>()
        } else {
            macro_steps(sys, c)?
                .into_iter()
                .map(|s| (s.rules, s.target))
                .collect()
        };
        let start = c.to_partial();
        if visited.insert(start.clone()) {
            check_partial(&start, &mut effects, &mut heating);
        }
        let m = nu_config(net, c);
        let mut expected: HashSet<(VectorMultiRule, Marking)> = HashSet::new();
        let mut verdicts: HashMap<Vec<Step>, Result<Verdict, NetError>> = HashMap::new();
        let mut verdict_of = |seq: &[Step]| {
            verdicts
                .entry(seq.to_vec())
                .or_insert_with(|| net.transaction_verdict(&m, seq))
                .clone()
        };
        // Micro steps in membrane and rule order; consecutive macro steps
        // share the partial configurations of their common prefix.
        let mut path: Vec<(MembraneId, &RuleName)> = Vec::new();
        let mut gammas = vec![start.clone()];
        for (rules, target) in &steps {
            macro_count += 1;
            let seq: Vec<(MembraneId, &RuleName)> = sys
                .membrane_ids()
                .flat_map(|i| {
                    rules
                        .membrane(i)
                        .iter()
                        .flat_map(move |(name, n)| std::iter::repeat_n((i, name), n as usize))
                })
                .collect();
            let common = path.iter().zip(&seq).take_while(|(a, b)| a == b).count();
            gammas.truncate(common + 1);
            for &(i, name) in &seq[common..] {
                let r = sys
                    .rule(i, name.name())
                    .expect("macro steps name existing rules");
                let gamma = apply_rule(sys, gammas.last().expect("start is kept"), r, i)?;
                if visited.insert(gamma.clone()) {
                    check_partial(&gamma, &mut effects, &mut heating);
                }
                gammas.push(gamma);
            }
            path = seq;
            let gamma = gammas.last().expect("start is kept");
            let target_marking = nu_config(net, target);
            expected.insert((rules.clone(), target_marking.clone()));

            // (3) the rule step followed by its heating is a stable transaction.
            match (rule_step(net, rules), heat_step(net, gamma)) {
                (Ok(u), Ok(h)) => {
                    let mut seq = vec![u];
                    if !h.is_empty() {
                        seq.push(h);
                    }
                    let verdict = verdict_of(&seq);
                    let end = net.run(&m, &seq).ok().and_then(|ms| ms.last().cloned());
                    forward.assert(verdict == Ok(Verdict::Transaction) && end.as_ref() == Some(&target_marking), || {
                        let why = match &verdict {
                            Ok(v) => v.to_string(),
                            Err(e) => e.to_string(),
                        };
                        format!("macro step {rules} at {c}: {} is not a stable transaction to {} ({why})", seq_text(net, &seq), net.marking_text(&target_marking))
                    });
                }
                (Err(id), _) | (_, Err(id)) => forward.assert(false, || {
                    format!("macro step {rules} at {c} needs {id}, which is missing from the net")
                }),
            }
        }

        // (4) every enumerated transaction at ν(C) is one of the macro steps.
        match net.enumerate_stable_transactions(&m) {
            Ok(ts) => {
                let mut found = HashSet::new();
                for t in &ts {
                    transaction_count += 1;
                    let rules = rules_of_step(sys, net, &t.rule_step);
                    let verdict = verdict_of(&t.sequence());
                    let key = (rules.clone(), t.target.clone());
                    converse.assert(
                        verdict == Ok(Verdict::Transaction) && expected.contains(&key),
                        || {
                            format!(
                                "transaction {} at {} (rules {rules}) has no matching macro step",
                                net.step_text(&t.step),
                                net.marking_text(&m)
                            )
                        },
                    );
                    found.insert(key);
                }
                for (rules, target) in &expected {
                    converse.assert(found.contains(&(rules.clone(), target.clone())), || {
                        format!(
                            "macro step {rules} at {c} is not among the enumerated transactions"
                        )
                    });
                }
            }
            Err(e) => converse.assert(false, || {
                format!(
                    "cannot enumerate transactions at {}: {e}",
                    net.marking_text(&m)
                )
            }),
        }
    }

    // (5) producers of zero tokens and consumers of zero tokens split T.
    for t in net.trans_ixs() {
        let produces = net.post(t).iter().any(|(p, _)| net.is_zero(*p));
        let consumes = net.pre(t).iter().any(|(p, _)| net.is_zero(*p));
        partition.assert(produces != consumes, || {
            let what = if produces {
                "both produces on and consumes from"
            } else {
                "neither produces on nor consumes from"
            };
            format!("{} {what} zero places", net.transition(t))
        });
    }
    partition.assert(net.heating_shape().is_ok(), || {
        net.heating_shape()
            .err()
            .map(|e: NetError| e.to_string())
            .unwrap_or_default()
    });

    Ok(CorrespondenceReport {
        depth,
        configurations: graph.nodes.len(),
        macro_steps: macro_count,
        transactions: transaction_count,
        propositions: vec![effects, heating, forward, converse, partition],
    })
}

fn nu_text(net: &MembraneNet, gamma: &PartialConfiguration) -> String {
    net.marking_text(&nu(net, gamma))
}

fn fired_text(net: &MembraneNet, fired: &Result<Marking, NetError>) -> String {
    match fired {
        Ok(m) => net.marking_text(m),
        Err(e) => e.to_string(),
    }
}

fn seq_text(net: &MembraneNet, seq: &[Step]) -> String {
    let parts: Vec<String> = seq.iter().map(|u| net.step_text(u)).collect();
    format!("[{}]", parts.join(", "))
}

/// A transition of `net` picked by its printed name, for tests and tools.
pub fn transition_named(net: &MembraneNet, name: &str) -> Option<TransIx> {
    net.trans_ixs()
        .find(|&t| net.transition(t).to_string() == name)
}
