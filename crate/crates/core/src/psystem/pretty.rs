//! Printing a system back to the `.psys` format.

use std::fmt::{self, Write};

use super::{MembraneId, MembraneSystem};

impl fmt::Display for MembraneSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("psystem {\n  objects:")?;
        for s in self.alphabet() {
            write!(f, " {s}")?;
        }
        f.write_str(";\n")?;
        let mut out = String::new();
        self.write_membrane(&mut out, MembraneId::SKIN, 1)?;
        f.write_str(&out)?;
        f.write_str("}\n")
    }
}

impl MembraneSystem {
    fn write_membrane(&self, out: &mut String, i: MembraneId, level: usize) -> fmt::Result {
        let pad = "  ".repeat(level);
        writeln!(out, "{pad}membrane {i} {{")?;
        write!(out, "{pad}  init:")?;
        for s in self.initial(i).elements() {
            write!(out, " {s}")?;
        }
        out.push_str(";\n");
        for r in self.rules(i) {
            write!(out, "{pad}  rule {}:", r.name)?;
            for s in r.lhs.elements() {
                write!(out, " {s}")?;
            }
            out.push_str(" ->");
            for (k, (s, t)) in r.rhs.elements().enumerate() {
                let sep = if k == 0 { " " } else { ", " };
                write!(out, "{sep}({s}, {t})")?;
            }
            out.push_str(";\n");
        }
        for c in self.children(i).unwrap_or_default() {
            self.write_membrane(out, c, level + 1)?;
        }
        writeln!(out, "{pad}}}")
    }
}

#[cfg(test)]
mod tests {
    use crate::fixtures;
    use crate::psystem::{parse, parse_with, ParseOptions};
    use crate::random::random_system_text;

    #[test]
    fn fixtures_round_trip() {
        for text in [fixtures::PI1, fixtures::INTRO1, fixtures::INTRO2] {
            let sys = parse(text).unwrap();
            let printed = sys.to_string();
            assert_eq!(parse(&printed).unwrap(), sys, "{printed}");
        }
    }

    #[test]
    fn printed_form_is_stable() {
        let sys = parse(fixtures::PI1).unwrap();
        assert_eq!(
            sys.to_string(),
            "psystem {\n  objects: a b c;\n  membrane 1 {\n    init: a b;\n    rule r1: a -> (b, here);\n    rule r2: b -> (c, here);\n    rule r3: b -> (a, here);\n  }\n}\n"
        );
    }

    #[test]
    fn random_systems_round_trip() {
        for seed in 0..200 {
            let text = random_system_text(seed);
            let sys = parse(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
            assert_eq!(parse(&sys.to_string()).unwrap(), sys);
        }
        let text = "psystem { objects: a; membrane 1 { init: a; rule r: a -> (a, out); } }";
        let opts = ParseOptions {
            allow_skin_out: true,
        };
        let sys = parse_with(text, opts).unwrap();
        assert_eq!(parse_with(&sys.to_string(), opts).unwrap(), sys);
    }
}
