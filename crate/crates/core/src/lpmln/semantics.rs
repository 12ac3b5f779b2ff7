//! Stable-model checking via the formula reduct.
//!
//! The reduct of a formula relative to an interpretation I replaces every
//! maximal subformula not satisfied by I with `false`. I is a stable
//! model of a program iff I satisfies every rule of the satisfied
//! fragment (true by construction) and I is a minimal model of the
//! conjunction of reducts.

use crate::formula::Formula;

use super::{
    AtomId, Interpretation, LpmlnError, ModelWeight, Weight, Weight2, WeightedProgram,
};

/// Reduct with on-the-fly constant folding. Choice wrappers expand to
/// `f | ~f` before reduction.
pub(super) fn reduct(f: &Formula<AtomId>, i: &Interpretation) -> Formula<AtomId> {
    if !f.eval(&|a| i.get(*a)) {
        return Formula::Bot;
    }
    match f {
        Formula::Top => Formula::Top,
        Formula::Bot => unreachable!("unsatisfied formula handled above"),
        Formula::Atom(a) => Formula::Atom(*a),
        Formula::Not(x) => simplify_not(reduct(x, i)),
        Formula::And(x, y) => simplify_and(reduct(x, i), reduct(y, i)),
        Formula::Or(x, y) => simplify_or(reduct(x, i), reduct(y, i)),
        Formula::Implies(x, y) => simplify_implies(reduct(x, i), reduct(y, i)),
        Formula::Choice(x) => {
            let expanded = Formula::or(x.as_ref().clone(), Formula::not(x.as_ref().clone()));
            reduct(&expanded, i)
        }
    }
}

fn simplify_not(x: Formula<AtomId>) -> Formula<AtomId> {
    match x {
        Formula::Bot => Formula::Top,
        Formula::Top => Formula::Bot,
        other => Formula::not(other),
    }
}

fn simplify_and(x: Formula<AtomId>, y: Formula<AtomId>) -> Formula<AtomId> {
    match (x, y) {
        (Formula::Bot, _) | (_, Formula::Bot) => Formula::Bot,
        (Formula::Top, y) => y,
        (x, Formula::Top) => x,
        (x, y) => Formula::and(x, y),
    }
}

fn simplify_or(x: Formula<AtomId>, y: Formula<AtomId>) -> Formula<AtomId> {
    match (x, y) {
        (Formula::Top, _) | (_, Formula::Top) => Formula::Top,
        (Formula::Bot, y) => y,
        (x, Formula::Bot) => x,
        (x, y) => Formula::or(x, y),
    }
}

fn simplify_implies(x: Formula<AtomId>, y: Formula<AtomId>) -> Formula<AtomId> {
    match (x, y) {
        (Formula::Bot, _) => Formula::Top,
        (_, Formula::Top) => Formula::Top,
        (Formula::Top, y) => y,
        (x, Formula::Bot) => simplify_not(x),
        (x, y) => Formula::implies(x, y),
    }
}

/// A Horn view of a reduct formula: `body -> head` with conjunctive
/// atomic body and a single atom (or nothing to prove) as head.
enum HornClause {
    Fact(AtomId),
    Rule(Vec<AtomId>, AtomId),
}

/// Try to decompose a reduct into Horn clauses. Fails (returns None) on
/// genuine disjunctions, which need the search fallback.
fn horn_clauses(f: &Formula<AtomId>, out: &mut Vec<HornClause>) -> Option<()> {
    match f {
        Formula::Top => Some(()),
        Formula::Bot => None, // reducts of satisfied rules are never Bot
        Formula::Atom(a) => {
            out.push(HornClause::Fact(*a));
            Some(())
        }
        Formula::And(x, y) => {
            horn_clauses(x, out)?;
            horn_clauses(y, out)
        }
        Formula::Implies(body, head) => {
            let mut atoms = Vec::new();
            conj_atoms(body, &mut atoms)?;
            match head.as_ref() {
                Formula::Atom(a) => {
                    out.push(HornClause::Rule(atoms, *a));
                    Some(())
                }
                Formula::Top => Some(()),
                Formula::And(_, _) => {
                    // split conjunctive heads
                    let mut heads = Vec::new();
                    conj_atoms(head, &mut heads)?;
                    for h in heads {
                        out.push(HornClause::Rule(atoms.clone(), h));
                    }
                    Some(())
                }
                _ => None,
            }
        }
        Formula::Not(_) | Formula::Or(_, _) | Formula::Choice(_) => None,
    }
}

fn conj_atoms(f: &Formula<AtomId>, out: &mut Vec<AtomId>) -> Option<()> {
    match f {
        Formula::Top => Some(()),
        Formula::Atom(a) => {
            out.push(*a);
            Some(())
        }
        Formula::And(x, y) => {
            conj_atoms(x, out)?;
            conj_atoms(y, out)
        }
        _ => None,
    }
}

/// Is `i` a minimal model of the given reducts? `i` satisfies them by
/// construction; minimality means no proper sub-interpretation does.
pub(super) fn is_minimal_model(reducts: &[Formula<AtomId>], i: &Interpretation) -> bool {
    // Horn fast path: the least model is the Horn fixpoint.
    let mut clauses = Vec::new();
    if reducts.iter().try_for_each(|f| horn_clauses(f, &mut clauses)).is_some() {
        let mut derived = Interpretation::empty(i.n_atoms());
        let mut changed = true;
        while changed {
            changed = false;
            for c in &clauses {
                let (body, head) = match c {
                    HornClause::Fact(h) => (&[][..], *h),
                    HornClause::Rule(b, h) => (&b[..], *h),
                };
                if !derived.get(head) && body.iter().all(|a| derived.get(*a)) {
                    derived.set(head, true);
                    changed = true;
                }
            }
        }
        return &derived == i;
    }

    // General fallback: search for a proper submodel among subsets of the
    // atoms true in i.
    let true_atoms: Vec<AtomId> = i.true_atoms().collect();
    let mut candidate = i.clone();
    !search_submodel(reducts, &true_atoms, 0, &mut candidate, true)
}

/// Depth-first search for a model of `reducts` that is a proper subset of
/// the original interpretation. `all_true_so_far` tracks whether every
/// atom considered so far kept its original (true) value.
fn search_submodel(
    reducts: &[Formula<AtomId>],
    atoms: &[AtomId],
    depth: usize,
    candidate: &mut Interpretation,
    all_true_so_far: bool,
) -> bool {
    if depth == atoms.len() {
        return !all_true_so_far && reducts.iter().all(|f| f.eval(&|a| candidate.get(*a)));
    }
    let a = atoms[depth];
    // try dropping the atom first: finds small models early
    candidate.set(a, false);
    if search_submodel(reducts, atoms, depth + 1, candidate, false) {
        candidate.set(a, true);
        return true;
    }
    candidate.set(a, true);
    search_submodel(reducts, atoms, depth + 1, candidate, all_true_so_far)
}

impl WeightedProgram {
    /// The rules satisfied by `i` (the program Π_I), as indices.
    pub(super) fn satisfied_rules(&self, i: &Interpretation) -> Vec<usize> {
        self.rules()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.formula.eval(&|a| i.get(*a)))
            .map(|(idx, _)| idx)
            .collect()
    }

    pub(super) fn weight2_of_satisfied(&self, satisfied: &[usize]) -> Weight2 {
        let mut hard_count = 0;
        let mut soft_sum = 0.0;
        for &idx in satisfied {
            match self.rules()[idx].weight {
                Weight::Hard => hard_count += 1,
                Weight::Soft(w) => soft_sum += w,
            }
        }
        Weight2 {
            hard_count,
            soft_sum,
        }
    }

    pub(super) fn check_interp(&self, i: &Interpretation) -> Result<(), LpmlnError> {
        if i.n_atoms() != self.signature().n_atoms() {
            return Err(LpmlnError::SignatureMismatch);
        }
        Ok(())
    }

    /// Stability of `i`: minimality of `i` over the reduct of Π_i.
    pub fn is_stable_model(&self, i: &Interpretation) -> Result<bool, LpmlnError> {
        self.check_interp(i)?;
        let satisfied = self.satisfied_rules(i);
        let reducts: Vec<_> = satisfied
            .iter()
            .map(|&idx| reduct(&self.rules()[idx].formula, i))
            .collect();
        Ok(is_minimal_model(&reducts, i))
    }

    /// The unnormalized weight of `i`: its Weight2 if stable, the
    /// distinguished zero marker otherwise.
    pub fn weight_of(&self, i: &Interpretation) -> Result<ModelWeight, LpmlnError> {
        self.check_interp(i)?;
        let satisfied = self.satisfied_rules(i);
        let reducts: Vec<_> = satisfied
            .iter()
            .map(|&idx| reduct(&self.rules()[idx].formula, i))
            .collect();
        if is_minimal_model(&reducts, i) {
            Ok(ModelWeight::Stable(self.weight2_of_satisfied(&satisfied)))
        } else {
            Ok(ModelWeight::NotStable)
        }
    }
}
