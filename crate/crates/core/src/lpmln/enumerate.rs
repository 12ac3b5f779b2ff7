//! Exact enumeration of probabilistic stable models.
//!
//! Probabilistic stable models are the stable models satisfying the most
//! hard rules; they carry all probability mass in the hard-weight limit.
//! The enumerator is a backtracking search over value assignments with
//! three sound prunes: definitely-violated hard rules beyond the current
//! budget, definitely-false evidence, and true atoms with no remaining
//! potential support. Leaves that survive the prunes get the full
//! reduct-minimality check.

use crate::formula::{Formula, Tri};

use super::{AtomId, Interpretation, LpmlnError, ModelWeight, Weight2, WeightedProgram};

#[derive(Debug, Clone)]
pub struct EnumOptions {
    /// Cap on full interpretations examined before giving up.
    pub max_candidates: u64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            max_candidates: 1 << 24,
        }
    }
}

/// A conditional probability with its unnormalized parts: sums of
/// exp(soft weight) over the probabilistic stable models satisfying
/// query-and-evidence and evidence alone.
#[derive(Debug, Clone, Copy)]
pub struct ProbResult {
    pub p: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Most probable stable models under the evidence. `models` holds every
/// model tied for the maximum; `probability` is the conditional
/// probability of each one.
#[derive(Debug, Clone)]
pub struct MapOutcome {
    pub models: Vec<Interpretation>,
    pub weight: Weight2,
    pub probability: f64,
}

/// A rule occurrence that can justify an atom being true: the atom occurs
/// positively outside every antecedent and negation. `guard` is the
/// rule's top-level body, if it has one; a definitely-false guard means
/// the occurrence cannot provide support.
struct Supporter {
    guard: Option<Formula<AtomId>>,
}

enum RuleStatus {
    Open,
    Decided { violated: bool },
}

struct Search<'a> {
    prog: &'a WeightedProgram,
    evidence: Option<&'a Formula<AtomId>>,
    /// hard-rule indices (into prog.rules) mentioning each atom
    hard_by_atom: Vec<Vec<u32>>,
    supporters: Vec<Vec<Supporter>>,
    assign: Vec<Tri>,
    status: Vec<RuleStatus>,
    violations: u32,
    budget: u32,
    candidates: u64,
    max_candidates: u64,
    found: Vec<(Interpretation, Weight2)>,
}

impl<'a> Search<'a> {
    fn new(
        prog: &'a WeightedProgram,
        evidence: Option<&'a Formula<AtomId>>,
        opts: &EnumOptions,
    ) -> Search<'a> {
        let n = prog.signature().n_atoms() as usize;
        let mut hard_by_atom = vec![Vec::new(); n];
        let mut supporters: Vec<Vec<Supporter>> = (0..n).map(|_| Vec::new()).collect();
        let mut status = Vec::with_capacity(prog.rules().len());
        for (idx, r) in prog.rules().iter().enumerate() {
            if matches!(r.weight, super::Weight::Hard) {
                let mut seen = vec![false; n];
                r.formula.for_each_atom(&mut |a| {
                    if !seen[a.0 as usize] {
                        seen[a.0 as usize] = true;
                        hard_by_atom[a.0 as usize].push(idx as u32);
                    }
                });
            }
            status.push(RuleStatus::Open);
            let (guard, head) = match &r.formula {
                Formula::Implies(b, h) => (Some(b.as_ref().clone()), h.as_ref()),
                other => (None, other),
            };
            let mut heads = Vec::new();
            head_atoms(head, false, &mut heads);
            heads.sort_unstable();
            heads.dedup();
            for a in heads {
                supporters[a.0 as usize].push(Supporter {
                    guard: guard.clone(),
                });
            }
        }
        Search {
            prog,
            evidence,
            hard_by_atom,
            supporters,
            assign: vec![Tri::Unknown; n],
            status,
            violations: 0,
            budget: 0,
            candidates: 0,
            max_candidates: opts.max_candidates,
            found: Vec::new(),
        }
    }

    fn eval3_partial(&self, f: &Formula<AtomId>) -> Tri {
        f.eval3(&|a| self.assign[a.0 as usize])
    }

    /// Decide hard rules touching `atom` that the new assignment settles.
    /// Returns the decided rule indices (for undo) or None to prune.
    fn settle(&mut self, atom: AtomId) -> Option<Vec<u32>> {
        let mut decided = Vec::new();
        let rules = std::mem::take(&mut self.hard_by_atom[atom.0 as usize]);
        let mut prune = false;
        for &ri in &rules {
            if let RuleStatus::Open = self.status[ri as usize] {
                match self.eval3_partial(&self.prog.rules()[ri as usize].formula) {
                    Tri::Unknown => {}
                    t => {
                        let violated = t == Tri::False;
                        self.status[ri as usize] = RuleStatus::Decided { violated };
                        decided.push(ri);
                        if violated {
                            self.violations += 1;
                            if self.violations > self.budget {
                                prune = true;
                            }
                        }
                    }
                }
            }
        }
        self.hard_by_atom[atom.0 as usize] = rules;
        if prune {
            self.undo(&decided);
            None
        } else {
            Some(decided)
        }
    }

    fn undo(&mut self, decided: &[u32]) {
        for &ri in decided {
            if let RuleStatus::Decided { violated } = self.status[ri as usize] {
                if violated {
                    self.violations -= 1;
                }
            }
            self.status[ri as usize] = RuleStatus::Open;
        }
    }

    /// Can `atom` still be justified by some rule under the current
    /// partial assignment?
    fn supportable(&self, atom: AtomId) -> bool {
        self.supporters[atom.0 as usize].iter().any(|s| match &s.guard {
            None => true,
            Some(g) => self.eval3_partial(g) != Tri::False,
        })
    }

    fn dfs(&mut self, depth: usize) -> Result<(), LpmlnError> {
        if depth == self.assign.len() {
            return self.leaf();
        }
        let atom = AtomId(depth as u32);
        for value in [Tri::False, Tri::True] {
            // assign before the support check: a supporter's guard may
            // mention the atom itself
            self.assign[depth] = value;
            if value == Tri::True && !self.supportable(atom) {
                self.assign[depth] = Tri::Unknown;
                continue;
            }
            if let Some(ev) = self.evidence {
                if self.eval3_partial(ev) == Tri::False {
                    self.assign[depth] = Tri::Unknown;
                    continue;
                }
            }
            match self.settle(atom) {
                None => {}
                Some(decided) => {
                    self.dfs(depth + 1)?;
                    self.undo(&decided);
                }
            }
        }
        self.assign[depth] = Tri::Unknown;
        Ok(())
    }

    fn leaf(&mut self) -> Result<(), LpmlnError> {
        // only collect at the exact budget: smaller violation counts were
        // covered by earlier passes
        if self.violations != self.budget {
            return Ok(());
        }
        self.candidates += 1;
        if self.candidates > self.max_candidates {
            return Err(LpmlnError::Capacity {
                cap: self.max_candidates,
            });
        }
        let mut interp = Interpretation::empty(self.assign.len() as u32);
        for (i, t) in self.assign.iter().enumerate() {
            if *t == Tri::True {
                interp.set(AtomId(i as u32), true);
            }
        }
        if let ModelWeight::Stable(w) = self.prog.weight_of(&interp)? {
            self.found.push((interp, w));
        }
        Ok(())
    }
}

/// Positive atom occurrences outside antecedents and negations.
fn head_atoms(f: &Formula<AtomId>, under_not: bool, out: &mut Vec<AtomId>) {
    match f {
        Formula::Top | Formula::Bot => {}
        Formula::Atom(a) => {
            if !under_not {
                out.push(*a);
            }
        }
        Formula::Not(x) => head_atoms(x, true, out),
        Formula::And(x, y) | Formula::Or(x, y) => {
            head_atoms(x, under_not, out);
            head_atoms(y, under_not, out);
        }
        // an antecedent atom never needs support from this rule
        Formula::Implies(_, y) => head_atoms(y, under_not, out),
        Formula::Choice(x) => head_atoms(x, under_not, out),
    }
}

impl WeightedProgram {
    /// All probabilistic stable models (optionally restricted to those
    /// satisfying `evidence`), in lexicographic interpretation order,
    /// with their weights. Empty result means no stable model satisfies
    /// the evidence.
    pub fn enumerate_stable_models(
        &self,
        evidence: Option<&Formula<AtomId>>,
        opts: &EnumOptions,
    ) -> Result<Vec<(Interpretation, Weight2)>, LpmlnError> {
        if let Some(ev) = evidence {
            let mut bad = false;
            ev.for_each_atom(&mut |a| bad |= a.0 >= self.signature().n_atoms());
            if bad {
                return Err(LpmlnError::SignatureMismatch);
            }
        }
        let mut search = Search::new(self, evidence, opts);
        for budget in 0..=self.n_hard_rules() {
            search.budget = budget;
            search.dfs(0)?;
            if !search.found.is_empty() {
                break;
            }
        }
        let mut models = std::mem::take(&mut search.found);
        models.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(models)
    }

    /// Conditional probability of `query` given `evidence` under the
    /// probabilistic-stable-model distribution.
    pub fn probability(
        &self,
        query: &Formula<AtomId>,
        evidence: Option<&Formula<AtomId>>,
        opts: &EnumOptions,
    ) -> Result<ProbResult, LpmlnError> {
        let models = self.enumerate_stable_models(evidence, opts)?;
        if models.is_empty() {
            return Err(LpmlnError::ZeroMassEvidence);
        }
        // factor out the largest exponent for numerical stability
        let max_soft = models
            .iter()
            .map(|(_, w)| w.soft_sum)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        for (i, w) in &models {
            let mass = (w.soft_sum - max_soft).exp();
            denominator += mass;
            if query.eval(&|a| i.get(*a)) {
                numerator += mass;
            }
        }
        Ok(ProbResult {
            p: numerator / denominator,
            numerator,
            denominator,
        })
    }

    /// Stable models of maximum weight under the evidence, with ties kept.
    pub fn map_models(
        &self,
        evidence: Option<&Formula<AtomId>>,
        opts: &EnumOptions,
    ) -> Result<MapOutcome, LpmlnError> {
        let models = self.enumerate_stable_models(evidence, opts)?;
        if models.is_empty() {
            return Err(LpmlnError::ZeroMassEvidence);
        }
        let best = models
            .iter()
            .map(|(_, w)| w.soft_sum)
            .fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = models.iter().map(|(_, w)| (w.soft_sum - best).exp()).sum();
        let mut out = Vec::new();
        let mut weight = Weight2::ZERO;
        for (i, w) in models {
            if w.soft_sum >= best - 1e-9 {
                weight = w;
                out.push(i);
            }
        }
        Ok(MapOutcome {
            models: out,
            weight,
            probability: 1.0 / total,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Constant, Signature, WeightedRule};
    use super::*;

    fn bool_sig(names: &[&str]) -> Signature {
        Signature::new(names.iter().map(|n| Constant::boolean(*n)).collect()).unwrap()
    }

    fn atom(sig: &Signature, c: &str) -> Formula<AtomId> {
        Formula::Atom(sig.atom_by_name(c, "t").unwrap())
    }

    #[test]
    fn soft_fact_distribution() {
        // { 1 : a } has stable models {} and {a}, masses 1 and e
        let sig = bool_sig(&["a"]);
        let prog =
            WeightedProgram::new(sig.clone(), vec![WeightedRule::soft(1.0, atom(&sig, "a"))])
                .unwrap();
        let models = prog
            .enumerate_stable_models(None, &EnumOptions::default())
            .unwrap();
        assert_eq!(models.len(), 2);
        let r = prog
            .probability(&atom(&sig, "a"), None, &EnumOptions::default())
            .unwrap();
        let e = 1.0f64.exp();
        assert!((r.p - e / (1.0 + e)).abs() < 1e-12);
    }

    #[test]
    fn hard_constraint_dominates() {
        // soft fact a, hard constraint a -> false: only {} survives at
        // the maximal hard count
        let sig = bool_sig(&["a"]);
        let prog = WeightedProgram::new(
            sig.clone(),
            vec![
                WeightedRule::soft(1.0, atom(&sig, "a")),
                WeightedRule::hard(Formula::implies(atom(&sig, "a"), Formula::Bot)),
            ],
        )
        .unwrap();
        let models = prog
            .enumerate_stable_models(None, &EnumOptions::default())
            .unwrap();
        assert_eq!(models.len(), 1);
        assert_eq!(models[0].0.count_true(), 0);
        assert_eq!(models[0].1.hard_count, 1);
    }

    #[test]
    fn violated_hard_rules_still_yield_models() {
        // two contradictory hard facts: every stable model violates one
        let sig = bool_sig(&["a"]);
        let prog = WeightedProgram::new(
            sig.clone(),
            vec![
                WeightedRule::hard(atom(&sig, "a")),
                WeightedRule::hard(Formula::implies(atom(&sig, "a"), Formula::Bot)),
            ],
        )
        .unwrap();
        let models = prog
            .enumerate_stable_models(None, &EnumOptions::default())
            .unwrap();
        assert_eq!(models.len(), 2);
        assert!(models.iter().all(|(_, w)| w.hard_count == 1));
    }

    #[test]
    fn evidence_conditions_the_distribution() {
        let sig = bool_sig(&["a", "b"]);
        let prog = WeightedProgram::new(
            sig.clone(),
            vec![
                WeightedRule::soft(0.5, atom(&sig, "a")),
                WeightedRule::soft(-0.3, atom(&sig, "b")),
            ],
        )
        .unwrap();
        let r = prog
            .probability(&atom(&sig, "a"), Some(&atom(&sig, "b")), &EnumOptions::default())
            .unwrap();
        let ea = 0.5f64.exp();
        assert!((r.p - ea / (1.0 + ea)).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_evidence_is_an_error() {
        let sig = bool_sig(&["a"]);
        let prog = WeightedProgram::new(
            sig.clone(),
            vec![WeightedRule::hard(Formula::implies(
                atom(&sig, "a"),
                Formula::Bot,
            ))],
        )
        .unwrap();
        let err = prog.probability(&atom(&sig, "a"), Some(&atom(&sig, "a")), &EnumOptions::default());
        assert!(matches!(err, Err(LpmlnError::ZeroMassEvidence)));
    }

    #[test]
    fn capacity_cap_is_enforced() {
        let sig = bool_sig(&["a", "b", "c"]);
        let rules = ["a", "b", "c"]
            .iter()
            .map(|c| WeightedRule::soft(0.1, atom(&sig, c)))
            .collect();
        let prog = WeightedProgram::new(sig, rules).unwrap();
        let opts = EnumOptions { max_candidates: 3 };
        assert!(matches!(
            prog.enumerate_stable_models(None, &opts),
            Err(LpmlnError::Capacity { cap: 3 })
        ));
    }

    #[test]
    fn map_model_with_ties() {
        let sig = bool_sig(&["a", "b"]);
        let prog = WeightedProgram::new(
            sig.clone(),
            vec![
                WeightedRule::soft(1.0, atom(&sig, "a")),
                WeightedRule::soft(1.0, atom(&sig, "b")),
                WeightedRule::hard(Formula::implies(
                    Formula::and(atom(&sig, "a"), atom(&sig, "b")),
                    Formula::Bot,
                )),
            ],
        )
        .unwrap();
        let out = prog.map_models(None, &EnumOptions::default()).unwrap();
        assert_eq!(out.models.len(), 2);
        let e = 1.0f64.exp();
        assert!((out.probability - e / (1.0 + 2.0 * e)).abs() < 1e-12);
    }
}
