//! Propositional formulas over a generic atom type.
//!
//! The same tree is used for ground LP^MLN formulas (atoms are `AtomId`s
//! into a [`Signature`](crate::lpmln::Signature)) and for pBC+ causal-law
//! formulas (atoms name constants of an action description).

use std::fmt;

/// Three-valued truth, for evaluation under partial assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl Tri {
    pub fn from_bool(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }
}

/// A propositional formula. `Choice(f)` is the choice wrapper `{f}ch`,
/// kept as explicit sugar for `f | ~f` so printers can round-trip it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<A> {
    Top,
    Bot,
    Atom(A),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Or(Box<Formula<A>>, Box<Formula<A>>),
    Implies(Box<Formula<A>>, Box<Formula<A>>),
    Choice(Box<Formula<A>>),
}

impl<A> Formula<A> {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula<A>) -> Formula<A> {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula<A>, b: Formula<A>) -> Formula<A> {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula<A>, b: Formula<A>) -> Formula<A> {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula<A>, b: Formula<A>) -> Formula<A> {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn choice(f: Formula<A>) -> Formula<A> {
        Formula::Choice(Box::new(f))
    }

    /// Conjunction of an iterator of formulas; empty yields `Top`.
    pub fn conj(it: impl IntoIterator<Item = Formula<A>>) -> Formula<A> {
        let mut out: Option<Formula<A>> = None;
        for f in it {
            out = Some(match out {
                None => f,
                Some(acc) => Formula::and(acc, f),
            });
        }
        out.unwrap_or(Formula::Top)
    }

    /// Disjunction of an iterator of formulas; empty yields `Bot`.
    pub fn disj(it: impl IntoIterator<Item = Formula<A>>) -> Formula<A> {
        let mut out: Option<Formula<A>> = None;
        for f in it {
            out = Some(match out {
                None => f,
                Some(acc) => Formula::or(acc, f),
            });
        }
        out.unwrap_or(Formula::Bot)
    }

    pub fn map_atoms<B>(&self, f: &mut impl FnMut(&A) -> B) -> Formula<B> {
        match self {
            Formula::Top => Formula::Top,
            Formula::Bot => Formula::Bot,
            Formula::Atom(a) => Formula::Atom(f(a)),
            Formula::Not(x) => Formula::not(x.map_atoms(f)),
            Formula::And(x, y) => Formula::and(x.map_atoms(f), y.map_atoms(f)),
            Formula::Or(x, y) => Formula::or(x.map_atoms(f), y.map_atoms(f)),
            Formula::Implies(x, y) => Formula::implies(x.map_atoms(f), y.map_atoms(f)),
            Formula::Choice(x) => Formula::choice(x.map_atoms(f)),
        }
    }

    /// Like `map_atoms` but the mapping may fail.
    pub fn try_map_atoms<B, E>(
        &self,
        f: &mut impl FnMut(&A) -> Result<B, E>,
    ) -> Result<Formula<B>, E> {
        Ok(match self {
            Formula::Top => Formula::Top,
            Formula::Bot => Formula::Bot,
            Formula::Atom(a) => Formula::Atom(f(a)?),
            Formula::Not(x) => Formula::not(x.try_map_atoms(f)?),
            Formula::And(x, y) => Formula::and(x.try_map_atoms(f)?, y.try_map_atoms(f)?),
            Formula::Or(x, y) => Formula::or(x.try_map_atoms(f)?, y.try_map_atoms(f)?),
            Formula::Implies(x, y) => Formula::implies(x.try_map_atoms(f)?, y.try_map_atoms(f)?),
            Formula::Choice(x) => Formula::choice(x.try_map_atoms(f)?),
        })
    }

    pub fn for_each_atom(&self, f: &mut impl FnMut(&A)) {
        match self {
            Formula::Top | Formula::Bot => {}
            Formula::Atom(a) => f(a),
            Formula::Not(x) | Formula::Choice(x) => x.for_each_atom(f),
            Formula::And(x, y) | Formula::Or(x, y) | Formula::Implies(x, y) => {
                x.for_each_atom(f);
                y.for_each_atom(f);
            }
        }
    }

    /// True if the formula contains an implication (choice wrappers and
    /// negations do not count; they desugar without implications).
    pub fn contains_implication(&self) -> bool {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) => false,
            Formula::Not(x) | Formula::Choice(x) => x.contains_implication(),
            Formula::And(x, y) | Formula::Or(x, y) => {
                x.contains_implication() || y.contains_implication()
            }
            Formula::Implies(_, _) => true,
        }
    }

    pub fn eval(&self, model: &impl Fn(&A) -> bool) -> bool {
        match self {
            Formula::Top => true,
            Formula::Bot => false,
            Formula::Atom(a) => model(a),
            Formula::Not(x) => !x.eval(model),
            Formula::And(x, y) => x.eval(model) && y.eval(model),
            Formula::Or(x, y) => x.eval(model) || y.eval(model),
            Formula::Implies(x, y) => !x.eval(model) || y.eval(model),
            // f | ~f is a tautology
            Formula::Choice(_) => true,
        }
    }

    pub fn eval3(&self, model: &impl Fn(&A) -> Tri) -> Tri {
        match self {
            Formula::Top => Tri::True,
            Formula::Bot => Tri::False,
            Formula::Atom(a) => model(a),
            Formula::Not(x) => match x.eval3(model) {
                Tri::True => Tri::False,
                Tri::False => Tri::True,
                Tri::Unknown => Tri::Unknown,
            },
            Formula::And(x, y) => match (x.eval3(model), y.eval3(model)) {
                (Tri::False, _) | (_, Tri::False) => Tri::False,
                (Tri::True, Tri::True) => Tri::True,
                _ => Tri::Unknown,
            },
            Formula::Or(x, y) => match (x.eval3(model), y.eval3(model)) {
                (Tri::True, _) | (_, Tri::True) => Tri::True,
                (Tri::False, Tri::False) => Tri::False,
                _ => Tri::Unknown,
            },
            Formula::Implies(x, y) => match (x.eval3(model), y.eval3(model)) {
                (Tri::False, _) | (_, Tri::True) => Tri::True,
                (Tri::True, Tri::False) => Tri::False,
                _ => Tri::Unknown,
            },
            Formula::Choice(_) => Tri::True,
        }
    }
}

impl<A: fmt::Display> Formula<A> {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::Top => write!(f, "true"),
            Formula::Bot => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => {
                write!(f, "not ")?;
                x.fmt_prec(f, 3)
            }
            Formula::And(x, y) => {
                if prec > 2 {
                    write!(f, "(")?;
                }
                x.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                y.fmt_prec(f, 2)?;
                if prec > 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Or(x, y) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                x.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                y.fmt_prec(f, 1)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Implies(x, y) => {
                write!(f, "(")?;
                x.fmt_prec(f, 0)?;
                write!(f, " -> ")?;
                y.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Formula::Choice(x) => {
                write!(f, "{{")?;
                x.fmt_prec(f, 0)?;
                write!(f, "}}")
            }
        }
    }
}

impl<A: fmt::Display> fmt::Display for Formula<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choice_is_tautology() {
        let f: Formula<u32> = Formula::choice(Formula::Atom(0));
        assert!(f.eval(&|_| false));
        assert!(f.eval(&|_| true));
    }

    #[test]
    fn eval3_partial() {
        let f: Formula<u32> = Formula::and(Formula::Atom(0), Formula::Atom(1));
        let m = |a: &u32| if *a == 0 { Tri::False } else { Tri::Unknown };
        assert_eq!(f.eval3(&m), Tri::False);
        let m = |a: &u32| if *a == 0 { Tri::True } else { Tri::Unknown };
        assert_eq!(f.eval3(&m), Tri::Unknown);
    }
}
