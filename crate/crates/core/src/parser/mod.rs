//! Concrete syntax: `.pbc` action descriptions and `.pq` query files.
//! Hand-rolled lexer and recursive-descent parsers with line/column
//! diagnostics, plus a pretty-printer whose output re-parses to the
//! same AST.

mod desc;
mod lex;
mod print;
mod query;

pub use desc::parse_description;
pub use print::{print_description, print_formula, print_query};
pub use query::{parse_query, QuerySpec, QueryTarget, TimedAtom};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use crate::pbc::{CausalLaw, PbcAtom};

    const PSD: &str = "
        sort x = {t, f}
        fluent p
        action a
        pf pf1
        initpf initp

        caused p after ~p & a & pf1.
        caused ~p after p & a & pf1.
        caused {p} after p.
        caused {~p} after ~p.
        caused pf1 = {t: 0.8, f: 0.2}.
        caused initp = {t: 0.6, f: 0.4}.
        initially p = x if initp = x.   % expands over x
    ";

    fn atom(c: &str, v: &str) -> Formula<PbcAtom> {
        Formula::Atom(PbcAtom::new(c, v))
    }

    #[test]
    fn parses_simplest_description() {
        let d = parse_description(PSD).unwrap();
        assert_eq!(d.signature.constants.len(), 4);
        assert_eq!(d.laws.len(), 8);
        assert_eq!(
            d.laws[0],
            CausalLaw::FluentDynamic {
                head: atom("p", "t"),
                cond: Formula::Top,
                after: Formula::conj([atom("p", "f"), atom("a", "t"), atom("pf1", "t")]),
            }
        );
        assert_eq!(
            d.laws[4],
            CausalLaw::PfDecl {
                constant: "pf1".into(),
                entries: vec![("t".into(), 0.8), ("f".into(), 0.2)],
            }
        );
        // `initially p = x if initp = x` expands over the sort x = {t, f}.
        assert_eq!(
            d.laws[6],
            CausalLaw::InitStatic { head: atom("p", "t"), cond: atom("initp", "t") }
        );
        assert_eq!(
            d.laws[7],
            CausalLaw::InitStatic { head: atom("p", "f"), cond: atom("initp", "f") }
        );
        assert!(d.errors().is_empty());
    }

    #[test]
    fn schematic_arguments_expand() {
        let d = parse_description(
            "sort u = {s1, s2}
             fluent alive(u)
             action fire(u)
             caused ~alive(u) after fire(u).",
        )
        .unwrap();
        assert_eq!(d.signature.constants.len(), 4);
        assert_eq!(d.laws.len(), 2);
        assert_eq!(
            d.laws[0],
            CausalLaw::FluentDynamic {
                head: atom("alive(s1)", "f"),
                cond: Formula::Top,
                after: atom("fire(s1)", "t"),
            }
        );
    }

    #[test]
    fn constant_equality_expands_to_disjunction() {
        let d = parse_description(
            "sort r = {r1, r2}
             fluent locRobot : r
             fluent locBook : r
             fluent hasBook
             action pickup
             caused hasBook if locRobot = locBook after pickup.",
        )
        .unwrap();
        let want = Formula::or(
            Formula::and(atom("locRobot", "r1"), atom("locBook", "r1")),
            Formula::and(atom("locRobot", "r2"), atom("locBook", "r2")),
        );
        assert_eq!(
            d.laws[0],
            CausalLaw::FluentDynamic {
                head: atom("hasBook", "t"),
                cond: want,
                after: atom("pickup", "t"),
            }
        );
    }

    #[test]
    fn not_differs_from_tilde() {
        let d = parse_description(
            "fluent p
             fluent q
             caused p if not (q & p).
             caused p if ~q.",
        )
        .unwrap();
        assert_eq!(
            d.laws[0],
            CausalLaw::Static {
                head: atom("p", "t"),
                cond: Formula::not(Formula::and(atom("q", "t"), atom("p", "t"))),
            }
        );
        assert_eq!(
            d.laws[1],
            CausalLaw::Static { head: atom("p", "t"), cond: atom("q", "f") }
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_description("fluent p\ncaused q.").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        assert!(e.to_string().contains("unknown constant `q`"));
        let e = parse_description("fluent p\ncaused p = {t: 0.5, f: 0.5}.").unwrap_err();
        assert!(e.to_string().contains("not a probability constant"));
    }

    #[test]
    fn description_round_trips() {
        let d = parse_description(PSD).unwrap();
        let printed = print_description(&d);
        let d2 = parse_description(&printed)
            .unwrap_or_else(|e| panic!("reparse failed: {e}\n{printed}"));
        assert_eq!(d, d2);
    }

    #[test]
    fn query_parses_and_round_trips() {
        let d = parse_description(PSD).unwrap();
        let q = parse_query(
            "steps 1.\nobserve 0: p.\ndo 0: a.\nquery conditional 1: ~p given 0: p.",
            &d,
        )
        .unwrap();
        assert_eq!(q.max_step, 1);
        assert_eq!(q.observations, vec![(0, PbcAtom::new("p", "t"))]);
        assert_eq!(q.action_facts, vec![(0, "a".to_string(), true)]);
        assert_eq!(
            q.target,
            QueryTarget::Conditional(
                Formula::Atom(TimedAtom { step: 1, atom: PbcAtom::new("p", "f") }),
                Formula::Atom(TimedAtom { step: 0, atom: PbcAtom::new("p", "t") }),
            )
        );
        let printed = print_query(&q, &d.signature);
        assert_eq!(parse_query(&printed, &d).unwrap(), q);
    }

    #[test]
    fn query_rejects_out_of_range_steps() {
        let d = parse_description(PSD).unwrap();
        let e = parse_query("steps 1. do 1: a. query map.", &d).unwrap_err();
        assert!(e.to_string().contains("below the horizon"));
        let e = parse_query("steps 1. observe 2: p. query map.", &d).unwrap_err();
        assert!(e.to_string().contains("exceeds the horizon"));
        let e = parse_query("steps 1. do 0: p. query map.", &d).unwrap_err();
        assert!(e.to_string().contains("not an action"));
    }
}
