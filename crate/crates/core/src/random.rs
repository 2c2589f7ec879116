//! Seeded generator of small membrane systems, used by tests and benches.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::psystem::{parse, MembraneSystem};

/// Size limits for generated systems.
#[derive(Debug, Clone, Copy)]
pub struct RandomShape {
    pub max_membranes: usize,
    pub max_objects: usize,
    pub max_rules: usize,
    pub max_init: usize,
}

impl Default for RandomShape {
    fn default() -> Self {
        Self {
            max_membranes: 3,
            max_objects: 4,
            max_rules: 5,
            max_init: 3,
        }
    }
}

const NAMES: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

/// Source text of a random system; the same seed always gives the same text.
///
/// Every rule has a nonempty right-hand side and only legal targets, so the
/// text always parses.
pub fn random_system_text(seed: u64) -> String {
    random_system_text_with(seed, RandomShape::default())
}

pub fn random_system_text_with(seed: u64, shape: RandomShape) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = &NAMES[..rng.gen_range(1..=shape.max_objects.min(NAMES.len()))];
    let n = rng.gen_range(1..=shape.max_membranes);
    let parents: Vec<usize> = (0..n)
        .map(|j| if j == 0 { 0 } else { rng.gen_range(1..=j) })
        .collect();
    let total_rules = rng.gen_range(1..=shape.max_rules);
    let mut per_membrane = vec![0usize; n];
    for _ in 0..total_rules {
        per_membrane[rng.gen_range(0..n)] += 1;
    }

    let mut bodies: Vec<String> = Vec::with_capacity(n);
    for i in 1..=n {
        let children: Vec<usize> = (2..=n).filter(|&j| parents[j - 1] == i).collect();
        let mut body = String::from("init:");
        for _ in 0..rng.gen_range(0..=shape.max_init) {
            write!(body, " {}", objects.choose(&mut rng).unwrap()).unwrap();
        }
        body.push_str(";\n");
        for k in 0..per_membrane[i - 1] {
            write!(body, "rule r{i}_{k}:").unwrap();
            for _ in 0..rng.gen_range(1..=2) {
                write!(body, " {}", objects.choose(&mut rng).unwrap()).unwrap();
            }
            body.push_str(" ->");
            for p in 0..rng.gen_range(1..=2) {
                let mut targets = vec!["here".to_string()];
                if i != 1 {
                    targets.push("out".into());
                }
                targets.extend(children.iter().map(|j| format!("in({j})")));
                let t = targets.choose(&mut rng).unwrap();
                let sep = if p == 0 { " " } else { ", " };
                write!(body, "{sep}({}, {t})", objects.choose(&mut rng).unwrap()).unwrap();
            }
            body.push_str(";\n");
        }
        bodies.push(body);
    }

    fn emit(out: &mut String, i: usize, bodies: &[String], parents: &[usize]) {
        writeln!(out, "membrane {i} {{").unwrap();
        out.push_str(&bodies[i - 1]);
        for j in (i + 1)..=bodies.len() {
            if parents[j - 1] == i {
                emit(out, j, bodies, parents);
            }
        }
        out.push_str("}\n");
    }

    let mut out = format!("psystem {{\nobjects: {};\n", objects.join(" "));
    emit(&mut out, 1, &bodies, &parents);
    out.push_str("}\n");
    out
}

/// Parsed form of [`random_system_text`].
pub fn random_system(seed: u64) -> MembraneSystem {
    parse(&random_system_text(seed)).expect("generated systems are valid")
}
