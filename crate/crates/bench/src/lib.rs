//! Benchmark inputs: the reference systems and a family that grows with
//! the number of initial objects.

use zsm_core::fixtures;
use zsm_core::{parse, MembraneSystem};

/// The running example with `n` copies of each initial object.
pub fn scaled_pi1_text(n: usize) -> String {
    let init = vec!["a b"; n].join(" ");
    format!(
        "psystem {{\n  objects: a b c;\n  membrane 1 {{\n    init: {init};\n    \
         rule r1: a -> (b, here);\n    rule r2: b -> (c, here);\n    rule r3: b -> (a, here);\n  }}\n}}\n"
    )
}

pub fn scaled_pi1(n: usize) -> MembraneSystem {
    parse(&scaled_pi1_text(n)).expect("generated text parses")
}

/// The shipped reference systems, by name.
pub fn reference_systems() -> Vec<(&'static str, MembraneSystem)> {
    fixtures::ALL
        .iter()
        .map(|(name, text)| (*name, parse(text).expect("fixture parses")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_parse() {
        assert_eq!(reference_systems().len(), 3);
        let sys = scaled_pi1(3);
        assert_eq!(sys.initial(zsm_core::MembraneId(1)).len(), 6);
    }
}
