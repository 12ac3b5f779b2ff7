//! Shared test helpers: a generator of small action descriptions that
//! satisfy the structural assumptions by construction.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbcplus_core::parser::parse_description;
use pbcplus_core::pbc::ActionDescription;

/// Boolean fluents under inertia, pairwise non-concurrent actions,
/// pf-guarded deterministic effect laws, and an initpf per fluent
/// pinning the initial state.
pub fn random_description(seed: u64) -> ActionDescription {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = rng.gen_range(1..=3usize);
    let na = rng.gen_range(1..=2usize);
    let np = rng.gen_range(1..=2usize);
    let mut src = String::from("sort bv = {t, f}\n");
    for i in 0..nf {
        writeln!(src, "fluent f{i}").unwrap();
    }
    for i in 0..na {
        writeln!(src, "action a{i}").unwrap();
    }
    for i in 0..np {
        writeln!(src, "pf p{i}").unwrap();
    }
    for i in 0..nf {
        writeln!(src, "initpf ii{i}").unwrap();
    }
    for i in 0..nf {
        writeln!(src, "caused {{f{i}}} after f{i}.").unwrap();
        writeln!(src, "caused {{~f{i}}} after ~f{i}.").unwrap();
    }
    for a in 0..na {
        for f in 0..nf {
            if rng.gen_bool(0.6) {
                let head = if rng.gen_bool(0.5) {
                    format!("f{f}")
                } else {
                    format!("~f{f}")
                };
                let p = rng.gen_range(0..np);
                let mut body = format!("a{a} & p{p}");
                if rng.gen_bool(0.4) {
                    let g = rng.gen_range(0..nf);
                    let sign = if rng.gen_bool(0.5) { "" } else { "~" };
                    write!(body, " & {sign}f{g}").unwrap();
                }
                writeln!(src, "caused {head} after {body}.").unwrap();
            }
        }
    }
    for a in 0..na {
        for b in a + 1..na {
            writeln!(src, "caused false after a{a} & a{b}.").unwrap();
        }
    }
    for i in 0..np {
        let k: u32 = rng.gen_range(50..=950);
        writeln!(src, "caused p{i} = {{t: 0.{k:03}, f: 0.{:03}}}.", 1000 - k).unwrap();
    }
    for i in 0..nf {
        let k: u32 = rng.gen_range(50..=950);
        writeln!(src, "caused ii{i} = {{t: 0.{k:03}, f: 0.{:03}}}.", 1000 - k).unwrap();
        writeln!(src, "initially f{i} = bv if ii{i} = bv.").unwrap();
    }
    parse_description(&src).unwrap_or_else(|e| panic!("generated description invalid: {e}\n{src}"))
}
