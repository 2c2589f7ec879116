//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use zsm_core::compile::{
    check_correspondence, check_correspondence_with, compile, nu_config, rule_step,
    transition_named, MembraneNet,
};
use zsm_core::ess::{
    classify_slice, configuration_to_rules, ess_of, ess_to_pes, pes_to_ess, replay_step,
    SliceClass, UnfoldingEss,
};
use zsm_core::fixtures;
use zsm_core::random::random_system;
use zsm_core::semantics::{
    computations, initial_configuration, macro_steps, macro_steps_by_interleaving,
    reachability_graph, Configuration, VectorMultiRule, DEFAULT_STATE_CAP,
};
use zsm_core::unfold::{unfold, EventIx, UnfoldBounds, Unfolding};
use zsm_core::zsnet::Step;
use zsm_core::{parse, MembraneSystem};

/// Random systems used by the suites that ask for them.
const RANDOM_SYSTEMS: u64 = 50;
/// Seeds scanned for systems with few objects in the oracle comparison.
const SMALL_SYSTEM_SEEDS: u64 = 300;
const MAX_OBJECTS: usize = 6;
const CONFIG_BOUND: usize = 200_000;

type Outcome = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "running example reachability",
            limit: secs(1),
            run: c1,
        },
        Criterion {
            id: 2,
            name: "first intro example",
            limit: secs(1),
            run: c2,
        },
        Criterion {
            id: 3,
            name: "concurrency without simultaneity",
            limit: secs(1),
            run: c3,
        },
        Criterion {
            id: 4,
            name: "stable transaction on the running example",
            limit: secs(1),
            run: c4,
        },
        Criterion {
            id: 5,
            name: "correspondence suite and mutations",
            limit: secs(60),
            run: c5,
        },
        Criterion {
            id: 6,
            name: "unfolding morphism and random firings",
            limit: secs(30),
            run: c6,
        },
        Criterion {
            id: 7,
            name: "maximal but not maximally simultaneous slice",
            limit: secs(1),
            run: c7,
        },
        Criterion {
            id: 8,
            name: "ESS axioms",
            limit: secs(60),
            run: c8,
        },
        Criterion {
            id: 9,
            name: "computations and ESS configurations round trip",
            limit: secs(60),
            run: c9,
        },
        Criterion {
            id: 10,
            name: "macro steps against interleavings",
            limit: secs(30),
            run: c10,
        },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > c.limit => {
                Err(format!("{detail}; took {took:.2?}, limit {:?}", c.limit))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:>2}  {}: {detail} ({took:.2?})", c.id, c.name),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}  {}: {why} ({took:.2?})", c.id, c.name);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(ok: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

fn sys(text: &str) -> MembraneSystem {
    parse(text).expect("fixture parses")
}

fn fixture_systems() -> Vec<(&'static str, MembraneSystem)> {
    fixtures::ALL
        .iter()
        .map(|(name, text)| (*name, sys(text)))
        .collect()
}

fn random_systems() -> Vec<(String, MembraneSystem)> {
    (0..RANDOM_SYSTEMS)
        .map(|s| (format!("random seed {s}"), random_system(s)))
        .collect()
}

fn config(sys: &MembraneSystem, words: &[&str]) -> Configuration {
    Configuration::from_words(sys, words).expect("words match the membranes")
}

fn c1() -> Outcome {
    let s = sys(fixtures::PI1);
    let g = reachability_graph(&s, 3, DEFAULT_STATE_CAP).map_err(|e| e.to_string())?;
    let nodes: BTreeSet<Configuration> = g.nodes.iter().cloned().collect();
    let expect: BTreeSet<Configuration> = ["a b", "b c", "a c", "c c"]
        .iter()
        .map(|w| config(&s, &[w]))
        .collect();
    ensure(nodes == expect, || format!("configurations {nodes:?}"))?;
    let halting: BTreeSet<Configuration> = g
        .nodes
        .iter()
        .zip(&g.halting)
        .filter(|(_, h)| **h)
        .map(|(c, _)| c.clone())
        .collect();
    ensure(halting == BTreeSet::from([config(&s, &["c c"])]), || {
        format!("halting {halting:?}")
    })?;
    let steps: BTreeSet<(String, Configuration)> = macro_steps(&s, &config(&s, &["a b"]))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|m| (m.rules.to_string(), m.target))
        .collect();
    let expect = BTreeSet::from([
        ("({r1:1, r3:1})".to_string(), config(&s, &["a b"])),
        ("({r1:1, r2:1})".to_string(), config(&s, &["b c"])),
    ]);
    ensure(steps == expect, || format!("macro steps at ab {steps:?}"))?;
    Ok("4 configurations, cc halting, 2 macro steps at ab".into())
}

fn c2() -> Outcome {
    let s = sys(fixtures::INTRO1);
    let steps = macro_steps(&s, &initial_configuration(&s)).map_err(|e| e.to_string())?;
    ensure(steps.len() == 1, || {
        format!("{} first macro steps", steps.len())
    })?;
    let step = &steps[0];
    ensure(step.rules.to_string() == "({}, {r2:2, r3:1})", || {
        format!("rules {}", step.rules)
    })?;
    ensure(step.target == config(&s, &["b b c", "c"]), || {
        format!("target {}", step.target)
    })?;
    let net = compile(&s);
    let unf = unfold(&net, UnfoldBounds::layers(1));
    let u = ess_of(&unf, &net).map_err(|e| e.to_string())?;
    let sizes: Vec<usize> = u.ess.sim.iter().map(Vec::len).collect();
    ensure(sizes == vec![3], || format!("class sizes {sizes:?}"))?;
    Ok("r2 twice and r3 once, one class of 3 events".into())
}

fn labelled(unf: &Unfolding, net: &MembraneNet, name: &str) -> Vec<EventIx> {
    let t = transition_named(net, name).expect("transition exists");
    unf.occ
        .event_ixs()
        .filter(|e| unf.fold.eta[e.ix()] == t)
        .collect()
}

fn c3() -> Outcome {
    let s = sys(fixtures::INTRO2);
    let net = compile(&s);
    let unf = unfold(&net, UnfoldBounds::layers(2));
    let u = ess_of(&unf, &net).map_err(|e| e.to_string())?;
    for a in labelled(&unf, &net, "t_1^r1") {
        for b in labelled(&unf, &net, "t_2^r2") {
            let (Some(i), Some(j)) = (u.index_of(a), u.index_of(b)) else {
                continue;
            };
            if u.ess.pes.co(i, j) && !u.ess.sim.iter().any(|c| c.contains(&i) && c.contains(&j)) {
                return Ok(format!("e{} (r1) co e{} (r2), no common class", a.0, b.0));
            }
        }
    }
    Err("no concurrent r1/r2 pair outside every class".into())
}

fn step(net: &MembraneNet, names: &[&str]) -> Step {
    names
        .iter()
        .map(|n| transition_named(net, n).expect("transition exists"))
        .collect()
}

fn c4() -> Outcome {
    let s = sys(fixtures::PI1);
    let net = compile(&s);
    let m = nu_config(&net, &config(&s, &["a b"]));
    let full = [
        step(&net, &["t_1^r1", "t_1^r3"]),
        step(&net, &["t^h_(b,1)", "t^h_(a,1)"]),
    ];
    let ok = net
        .check_stable_transaction(&m, &full)
        .map_err(|e| e.to_string())?;
    ensure(ok, || "r1 with r3 and both heatings rejected".into())?;
    let lone = [step(&net, &["t_1^r1"])];
    let lone_ok = net
        .check_stable_transaction(&m, &lone)
        .map_err(|e| e.to_string())?;
    ensure(!lone_ok, || "r1 alone without heating accepted".into())?;
    let half = [step(&net, &["t_1^r1"]), step(&net, &["t^h_(b,1)"])];
    let half_ok = net
        .check_stable_transaction(&m, &half)
        .map_err(|e| e.to_string())?;
    ensure(!half_ok, || "r1 alone with its heating accepted".into())?;
    Ok("{r1, r3} + heatings accepted; lone r1 rejected".into())
}

/// A heating and an output arc of the first rule fired from the initial
/// configuration, so that mutations touch something the check exercises.
fn mutations(s: &MembraneSystem, net: &MembraneNet) -> Option<Vec<(String, MembraneNet)>> {
    let first = macro_steps(s, &initial_configuration(s))
        .ok()?
        .into_iter()
        .find(|m| !m.rules.is_empty())?;
    let u = rule_step(net, &first.rules).ok()?;
    let (t, _) = u.iter().next()?;
    let (p, w) = net.post(*t).iter().next()?;
    let heat = net.trans_ixs().find(|h| net.pre(*h).get(p) > 0)?;
    Some(vec![
        (
            format!("without {}", net.transition(heat)),
            net.without_transition(heat),
        ),
        (
            format!(
                "{} -> {} weighs {}",
                net.transition(*t),
                net.place(*p),
                w + 1
            ),
            net.with_arc_weight(*t, *p, false, w + 1),
        ),
    ])
}

fn c5() -> Outcome {
    const DEPTH: usize = 4;
    let mut systems: Vec<(String, MembraneSystem)> = fixture_systems()
        .into_iter()
        .map(|(n, s)| (n.to_string(), s))
        .collect();
    systems.extend(random_systems());
    let mut mutated = 0;
    for (name, s) in &systems {
        let r = check_correspondence(s, DEPTH, DEFAULT_STATE_CAP)
            .map_err(|e| format!("{name}: {e}"))?;
        ensure(r.passed(), || format!("{name}: {}\n{r}", r.summary()))?;
        let net = compile(s);
        for (what, broken) in mutations(s, &net).unwrap_or_default() {
            let r = check_correspondence_with(s, &broken, DEPTH, DEFAULT_STATE_CAP)
                .map_err(|e| format!("{name} {what}: {e}"))?;
            ensure(!r.passed(), || {
                format!("{name}: mutation {what} went unnoticed")
            })?;
            mutated += 1;
        }
    }
    Ok(format!(
        "{} systems 5/5 at depth {DEPTH}, {mutated} mutations detected",
        systems.len()
    ))
}

fn c6() -> Outcome {
    const LAYERS: u32 = 3;
    const RUNS: usize = 1000;
    const STEPS: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut events = 0;
    let mut fired = 0;
    for (name, s) in fixture_systems() {
        let net = compile(&s);
        let unf = unfold(&net, UnfoldBounds::layers(LAYERS));
        ensure(!unf.truncated, || format!("{name}: unfolding truncated"))?;
        let bad = unf.morphism_violations(&net);
        ensure(bad.is_empty(), || format!("{name}: {}", bad.join("; ")))?;
        events += unf.occ.events().len();
        for _ in 0..RUNS {
            fired += unf
                .random_run(&net, &mut rng, STEPS)
                .map_err(|e| format!("{name}: {e}"))?;
        }
    }
    Ok(format!(
        "{events} events checked, {} runs firing {fired} events",
        3 * RUNS
    ))
}

fn c7() -> Outcome {
    let s = sys(fixtures::PI1);
    let net = compile(&s);
    let unf = unfold(&net, UnfoldBounds::layers(2));
    let occ = &unf.occ;
    // r1 on the initial a, its b heated, r2 on that b; r2 on the initial b.
    let r1 = labelled(&unf, &net, "t_1^r1")
        .into_iter()
        .find(|e| occ.event(*e).preset == vec![occ.initial()[0]])
        .ok_or("no r1 on the initial a")?;
    let bz = occ.event(r1).postset[0];
    let heat = *occ.consumers(bz).first().ok_or("b is never heated")?;
    let b1 = occ.event(heat).postset[0];
    let r2 = labelled(&unf, &net, "t_1^r2");
    let late = r2
        .iter()
        .find(|e| occ.event(**e).preset == vec![b1])
        .ok_or("no r2 on the produced b")?;
    let early = r2
        .iter()
        .find(|e| occ.event(**e).preset == vec![occ.initial()[1]])
        .ok_or("no r2 on the initial b")?;
    let a = [occ.event(*late).postset[0], occ.event(*early).postset[0]];
    let class = classify_slice(&unf, &net, &a).map_err(|e| e.to_string())?;
    ensure(class == SliceClass::MaximalUnstable, || {
        format!("classified {class:?}")
    })?;
    Ok("two (c,1,z) conditions: MaximalUnstable".into())
}

fn check_ess(name: &str, u: &UnfoldingEss) -> Result<(), String> {
    let v = u.ess.violations();
    ensure(v.is_empty(), || {
        let shown: Vec<String> = v.iter().take(3).map(|x| x.to_string()).collect();
        format!("{name}: {} violations, e.g. {}", v.len(), shown.join("; "))
    })?;
    let ess_confs = u
        .ess
        .configurations(CONFIG_BOUND)
        .map_err(|e| format!("{name}: {e}"))?;
    let pes_confs: HashSet<FixedBitSet> = u
        .ess
        .pes
        .configurations(CONFIG_BOUND)
        .map_err(|e| format!("{name}: {e}"))?
        .into_iter()
        .collect();
    ensure(ess_confs.iter().all(|c| pes_confs.contains(c)), || {
        format!("{name}: ESS configuration outside the PES")
    })?;
    let pes = ess_to_pes(&u.ess);
    let embedded = pes_to_ess(&pes);
    ensure(
        embedded.violations().is_empty() && ess_to_pes(&embedded) == pes,
        || format!("{name}: singleton embedding does not round-trip"),
    )?;
    let singles = embedded
        .configurations(CONFIG_BOUND)
        .map_err(|e| format!("{name}: {e}"))?;
    ensure(singles.len() == pes_confs.len(), || {
        format!("{name}: singleton configurations differ")
    })?;
    Ok(())
}

fn c8() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut runs: Vec<(String, MembraneSystem, u32)> = fixture_systems()
        .into_iter()
        .map(|(n, s)| (n.to_string(), s, 3))
        .collect();
    runs.extend(random_systems().into_iter().map(|(n, s)| (n, s, 2)));
    for (name, s, layers) in &runs {
        let net = compile(s);
        let unf = unfold(&net, UnfoldBounds::layers(*layers));
        let u = ess_of(&unf, &net).map_err(|e| format!("{name}: {e}"))?;
        checked += 1;
        if let Err(e) = check_ess(name, &u) {
            failures.push(e);
        }
    }
    if failures.is_empty() {
        Ok(format!("{checked} event structures valid"))
    } else {
        Err(format!(
            "{} of {checked} fail; first: {}",
            failures.len(),
            failures[0]
        ))
    }
}

fn c9() -> Outcome {
    const DEPTH: usize = 3;
    let mut forward = 0;
    let mut backward = 0;
    let mut failures: Vec<String> = Vec::new();
    for (name, s) in fixture_systems() {
        let net = compile(&s);
        let unf = unfold(&net, UnfoldBounds::layers(DEPTH as u32));
        let u = ess_of(&unf, &net).map_err(|e| format!("{name}: {e}"))?;
        let comps =
            computations(&s, DEPTH, DEFAULT_STATE_CAP).map_err(|e| format!("{name}: {e}"))?;
        for comp in &comps {
            let mut lifts: Vec<(Vec<zsm_core::unfold::CondIx>, Vec<EventIx>)> =
                vec![(unf.occ.initial().to_vec(), vec![])];
            for rules in &comp.steps {
                let u_step =
                    rule_step(&net, rules).map_err(|t| format!("{name}: no transition {t}"))?;
                lifts = lifts
                    .into_iter()
                    .flat_map(|(slice, events)| {
                        replay_step(&unf, &slice, &u_step)
                            .into_iter()
                            .map(move |(fired, next)| {
                                let mut all = events.clone();
                                all.extend(fired);
                                (next, all)
                            })
                    })
                    .collect();
            }
            if lifts.is_empty() {
                failures.push(format!(
                    "{name}: computation {} has no lift",
                    steps_text(&comp.steps)
                ));
            }
            for (_, events) in lifts {
                forward += 1;
                let Some(x) = u.lift(&events) else {
                    failures.push(format!(
                        "{name}: lift of {} leaves the ESS",
                        steps_text(&comp.steps)
                    ));
                    continue;
                };
                match configuration_to_rules(&s, &net, &u, &x) {
                    Ok(back) if back == comp.steps => {}
                    Ok(back) => failures.push(format!(
                        "{name}: {} reads back as {}",
                        steps_text(&comp.steps),
                        steps_text(&back)
                    )),
                    Err(e) => {
                        failures.push(format!("{name}: lift of {}: {e}", steps_text(&comp.steps)))
                    }
                }
            }
        }
        let confs = u
            .ess
            .configurations(CONFIG_BOUND)
            .map_err(|e| format!("{name}: {e}"))?;
        for x in &confs {
            backward += 1;
            let events: Vec<u32> = x.ones().map(|i| u.events[i].0).collect();
            let steps = match configuration_to_rules(&s, &net, &u, x) {
                Ok(v) => v,
                Err(e) => {
                    failures.push(format!("{name}: configuration {events:?}: {e}"));
                    continue;
                }
            };
            if let Err(why) = replay(&s, &steps) {
                failures.push(format!(
                    "{name}: configuration {events:?} as {}: {why}",
                    steps_text(&steps)
                ));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "{forward} lifted computations and {backward} configurations match"
        ))
    } else {
        Err(format!(
            "{} mismatches over {forward} lifts and {backward} configurations; first: {}",
            failures.len(),
            failures[0]
        ))
    }
}

fn steps_text(steps: &[VectorMultiRule]) -> String {
    let parts: Vec<String> = steps.iter().map(|v| v.to_string()).collect();
    format!("[{}]", parts.join(" "))
}

/// Fires each vector multi-rule as a macro step from the initial configuration.
fn replay(s: &MembraneSystem, steps: &[VectorMultiRule]) -> Result<(), String> {
    let mut c = initial_configuration(s);
    for (k, v) in steps.iter().enumerate() {
        let next = macro_steps(s, &c)
            .map_err(|e| e.to_string())?
            .into_iter()
            .find(|m| &m.rules == v)
            .ok_or_else(|| format!("step {} is not a macro step at {c}", k + 1))?;
        c = next.target;
    }
    Ok(())
}

fn c10() -> Outcome {
    let mut systems: Vec<(String, MembraneSystem)> = fixture_systems()
        .into_iter()
        .map(|(n, s)| (n.to_string(), s))
        .filter(|(_, s)| initial_configuration(s).size() <= MAX_OBJECTS as u64)
        .collect();
    systems.extend(
        (0..SMALL_SYSTEM_SEEDS)
            .map(|seed| (format!("random seed {seed}"), random_system(seed)))
            .filter(|(_, s)| initial_configuration(s).size() <= MAX_OBJECTS as u64),
    );
    let mut configurations = 0;
    for (name, s) in &systems {
        let g = reachability_graph(s, 4, DEFAULT_STATE_CAP).map_err(|e| format!("{name}: {e}"))?;
        for c in g.nodes.iter().filter(|c| c.size() <= MAX_OBJECTS as u64) {
            configurations += 1;
            let fast: BTreeSet<(String, Configuration)> = macro_steps(s, c)
                .map_err(|e| format!("{name}: {e}"))?
                .into_iter()
                .map(|m| (m.rules.to_string(), m.target))
                .collect();
            let slow: BTreeSet<(String, Configuration)> = macro_steps_by_interleaving(s, c)
                .map_err(|e| format!("{name}: {e}"))?
                .into_iter()
                .map(|(r, t)| (r.to_string(), t))
                .collect();
            ensure(fast == slow, || {
                format!("{name} at {c}: {fast:?} vs {slow:?}")
            })?;
        }
    }
    Ok(format!(
        "{} systems, {configurations} configurations agree",
        systems.len()
    ))
}
