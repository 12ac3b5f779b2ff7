//! Multi-valued probabilistic programs: probability declarations over a
//! subset of constants plus hard rules, compiled to a weighted program.
//! The compilation emits a weighted fact per declaration entry and
//! uniqueness/existence constraints that force every stable model to be
//! a total value assignment.

use thiserror::Error;

use crate::formula::Formula;
use crate::lpmln::{AtomId, ConstId, Signature, WeightedProgram, WeightedRule};

#[derive(Debug, Error)]
pub enum MvppError {
    #[error("duplicate declaration for constant `{0}`")]
    DuplicateDeclaration(String),
    #[error("declaration for `{constant}` does not match its domain")]
    DomainMismatch { constant: String },
    #[error("probabilities for `{constant}` sum to {sum}, expected 1")]
    BadProbabilitySum { constant: String, sum: f64 },
    #[error("probability {p} for `{constant}` is outside [0, 1]")]
    BadProbability { constant: String, p: f64 },
    #[error("probabilistic constant `{0}` occurs in a rule head")]
    ProbConstantInHead(String),
    #[error("rule {0} contains an implication")]
    ImplicationInRule(usize),
    #[error("constant id out of range")]
    BadConstant,
}

/// The declared distribution of one probabilistic constant, as ordered
/// `(value, probability)` entries covering its whole domain.
#[derive(Debug, Clone)]
pub struct ProbDeclaration {
    pub constant: ConstId,
    pub entries: Vec<(String, f64)>,
}

impl ProbDeclaration {
    /// Declaration listing the domain in signature order.
    pub fn uniform_order(sig: &Signature, constant: ConstId, probs: &[f64]) -> ProbDeclaration {
        let dom = &sig.constant(constant).domain;
        ProbDeclaration {
            constant,
            entries: dom.iter().cloned().zip(probs.iter().copied()).collect(),
        }
    }
}

/// An implication-free rule `head <- body`.
#[derive(Debug, Clone)]
pub struct MvppRule {
    pub head: Formula<AtomId>,
    pub body: Formula<AtomId>,
}

#[derive(Debug, Clone)]
pub struct MvppProgram {
    signature: Signature,
    declarations: Vec<ProbDeclaration>,
    rules: Vec<MvppRule>,
}

impl MvppProgram {
    pub fn new(
        signature: Signature,
        declarations: Vec<ProbDeclaration>,
        rules: Vec<MvppRule>,
    ) -> Result<MvppProgram, MvppError> {
        let mut is_prob = vec![false; signature.n_consts()];
        for d in &declarations {
            if d.constant.0 as usize >= signature.n_consts() {
                return Err(MvppError::BadConstant);
            }
            let cd = signature.constant(d.constant);
            if std::mem::replace(&mut is_prob[d.constant.0 as usize], true) {
                return Err(MvppError::DuplicateDeclaration(cd.name.clone()));
            }
            let mut values: Vec<&str> = d.entries.iter().map(|(v, _)| v.as_str()).collect();
            values.sort_unstable();
            values.dedup();
            let mut dom: Vec<&str> = cd.domain.iter().map(|v| v.as_str()).collect();
            dom.sort_unstable();
            if values != dom {
                return Err(MvppError::DomainMismatch {
                    constant: cd.name.clone(),
                });
            }
            let mut sum = 0.0;
            for (_, p) in &d.entries {
                if !(0.0..=1.0).contains(p) {
                    return Err(MvppError::BadProbability {
                        constant: cd.name.clone(),
                        p: *p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(MvppError::BadProbabilitySum {
                    constant: cd.name.clone(),
                    sum,
                });
            }
        }
        for (idx, r) in rules.iter().enumerate() {
            if r.head.contains_implication() || r.body.contains_implication() {
                return Err(MvppError::ImplicationInRule(idx));
            }
            let mut offender = None;
            r.head.for_each_atom(&mut |a| {
                let (c, _) = signature.atom_parts(*a);
                if is_prob[c.0 as usize] && offender.is_none() {
                    offender = Some(signature.constant(c).name.clone());
                }
            });
            if let Some(name) = offender {
                return Err(MvppError::ProbConstantInHead(name));
            }
        }
        Ok(MvppProgram {
            signature,
            declarations,
            rules,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn declarations(&self) -> &[ProbDeclaration] {
        &self.declarations
    }

    pub fn rules(&self) -> &[MvppRule] {
        &self.rules
    }
}

/// The weighted program equivalent: weighted facts per declaration entry
/// (hard fact at p=1, hard denial at p=0), a hard `body -> head` per
/// rule, and per-constant uniqueness and existence constraints.
pub fn translate_mvpp(m: &MvppProgram) -> Result<WeightedProgram, MvppError> {
    let sig = m.signature();
    let mut rules = Vec::new();
    for d in m.declarations() {
        let dom = &sig.constant(d.constant).domain;
        for (v, p) in &d.entries {
            let vi = dom.iter().position(|x| x == v).expect("validated domain");
            let atom = Formula::Atom(sig.atom(d.constant, vi));
            rules.push(if *p == 1.0 {
                WeightedRule::hard(atom)
            } else if *p == 0.0 {
                WeightedRule::hard(Formula::implies(atom, Formula::Bot))
            } else {
                WeightedRule::soft(p.ln(), atom)
            });
        }
    }
    for r in m.rules() {
        rules.push(WeightedRule::hard(Formula::implies(
            r.body.clone(),
            r.head.clone(),
        )));
    }
    for (c, cd) in sig.constants() {
        for v1 in 0..cd.domain.len() {
            for v2 in v1 + 1..cd.domain.len() {
                rules.push(WeightedRule::hard(Formula::implies(
                    Formula::and(
                        Formula::Atom(sig.atom(c, v1)),
                        Formula::Atom(sig.atom(c, v2)),
                    ),
                    Formula::Bot,
                )));
            }
        }
        let any = Formula::disj(
            (0..cd.domain.len()).map(|v| Formula::Atom(sig.atom(c, v))),
        );
        rules.push(WeightedRule::hard(Formula::implies(
            Formula::not(any),
            Formula::Bot,
        )));
    }
    WeightedProgram::new(sig.clone(), rules).map_err(|_| MvppError::BadConstant)
}
