//! The three reference systems shipped with the crate.

/// One membrane over `{a, b, c}` starting at `ab`, with `r1: a -> b`,
/// `r2: b -> c`, `r3: b -> a`.
pub const PI1: &str = include_str!("../fixtures/pi1.psys");

/// Two membranes; the first step applies `r2` twice and `r3` once.
pub const INTRO1: &str = include_str!("../fixtures/intro1.psys");

/// Two membranes where concurrent `r1` and `r2` occurrences are never simultaneous.
pub const INTRO2: &str = include_str!("../fixtures/intro2.psys");

/// All fixtures with their file stems.
pub const ALL: [(&str, &str); 3] = [("pi1", PI1), ("intro1", INTRO1), ("intro2", INTRO2)];
