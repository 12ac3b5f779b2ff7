//! Time-stamping translation of an action description into a
//! multi-valued probabilistic program over steps 0..m: static laws at
//! every step, dynamic laws between consecutive steps, initial choice
//! rules for regular fluents, per-step action choices, probability
//! declarations for the pf and initpf constants, and the initial-state
//! constraints.

use thiserror::Error;

use crate::formula::Formula;
use crate::lpmln::{AtomId, ConstId, Constant, LpmlnError, Signature};
use crate::mvpp::{MvppError, MvppProgram, MvppRule, ProbDeclaration};
use crate::pbc::{ActionDescription, CausalLaw, ConstClass, Diagnostic, PbcConstant, PbcFormula};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("description is not well-formed: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
    #[error("sugar expansion failed: {0}")]
    Sugar(Diagnostic),
    #[error(transparent)]
    Mvpp(#[from] MvppError),
    #[error(transparent)]
    Lpmln(#[from] LpmlnError),
}

/// The flat signature of atoms `i:c=v`: fluents at steps 0..m, actions
/// and pf constants at steps 0..m-1, initpf constants at step 0.
#[derive(Debug, Clone)]
pub struct TimedSignature {
    base: ActionDescription,
    m: usize,
    sig: Signature,
}

pub fn timed_name(step: usize, name: &str) -> String {
    format!("{step}:{name}")
}

/// Split `i:name` back into its step and base name.
pub fn split_timed(name: &str) -> Option<(usize, &str)> {
    let (step, base) = name.split_once(':')?;
    Some((step.parse().ok()?, base))
}

impl TimedSignature {
    /// `base` must be sugar-free. Constants are laid out step-major —
    /// initpf, then per step fluents / actions / pf — so that search in
    /// atom order follows the timeline. `with_init` controls whether the
    /// initpf constants exist at all (they belong to the initial-state
    /// program, not the transition program).
    pub fn new(
        base: &ActionDescription,
        m: usize,
        with_init: bool,
    ) -> Result<TimedSignature, TranslateError> {
        let mut consts = Vec::new();
        let mut push = |step: usize, c: &PbcConstant| {
            consts.push(Constant {
                name: timed_name(step, &c.name),
                domain: c.domain.clone(),
            });
        };
        if with_init {
            for c in base.signature.of_class(ConstClass::InitPf) {
                push(0, c);
            }
        }
        for step in 0..=m {
            for (c, _) in base.signature.fluents() {
                push(step, c);
            }
            if step < m {
                for c in base.signature.actions() {
                    push(step, c);
                }
                for c in base.signature.of_class(ConstClass::Pf) {
                    push(step, c);
                }
            }
        }
        Ok(TimedSignature {
            base: base.clone(),
            m,
            sig: Signature::new(consts)?,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn base(&self) -> &ActionDescription {
        &self.base
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn const_id(&self, step: usize, name: &str) -> Option<ConstId> {
        self.sig.lookup(&timed_name(step, name))
    }

    pub fn atom(&self, step: usize, name: &str, value: &str) -> Result<AtomId, LpmlnError> {
        self.sig.atom_by_name(&timed_name(step, name), value)
    }

    /// Time-stamp every atom of an untimed formula at `step`.
    pub fn stamp(&self, f: &PbcFormula, step: usize) -> Result<Formula<AtomId>, LpmlnError> {
        f.try_map_atoms(&mut |a| self.atom(step, &a.constant, &a.value))
    }

    /// Stamp a dynamic-law after-part: fluents at `step` alongside the
    /// action and pf constants of the same step.
    pub fn class_of(&self, name: &str) -> Option<ConstClass> {
        self.base.signature.constant(name).map(|c| c.class)
    }
}

/// Where an emitted rule came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// law index in the sugar-free description, instantiated at `step`
    Law { law: usize, step: usize },
    /// initial choice rule for a regular fluent value
    FluentChoice { constant: String, value: String },
    /// per-step action choice rule
    ActionChoice { constant: String, step: usize, value: String },
}

#[derive(Debug, Clone)]
pub struct TranslationOutput {
    pub timed: TimedSignature,
    pub program: MvppProgram,
    /// parallel to `program.rules()`
    pub provenance: Vec<Provenance>,
}

/// The full translation: transition program plus initial-state
/// declarations and constraints.
pub fn translate(d: &ActionDescription, m: usize) -> Result<TranslationOutput, TranslateError> {
    build(d, m, true)
}

/// The transition program alone, with step-0 fluents left open. This is
/// the program whose residual stable models define states (m = 0) and
/// transitions (m = 1).
pub fn translate_dm(d: &ActionDescription, m: usize) -> Result<TranslationOutput, TranslateError> {
    build(d, m, false)
}

fn build(
    d: &ActionDescription,
    m: usize,
    with_init: bool,
) -> Result<TranslationOutput, TranslateError> {
    let d = d.expand_sugar().map_err(TranslateError::Sugar)?;
    let errors = d.errors();
    if !errors.is_empty() {
        return Err(TranslateError::Validation(errors));
    }
    let timed = TimedSignature::new(&d, m, with_init)?;
    let sig = timed.signature().clone();
    let mut rules = Vec::new();
    let mut provenance = Vec::new();
    let mut declarations = Vec::new();

    for (idx, law) in d.laws.iter().enumerate() {
        match law {
            CausalLaw::Static { head, cond } => {
                for i in 0..=m {
                    rules.push(MvppRule {
                        head: timed.stamp(head, i)?,
                        body: timed.stamp(cond, i)?,
                    });
                    provenance.push(Provenance::Law { law: idx, step: i });
                }
            }
            CausalLaw::FluentDynamic { head, cond, after } => {
                for i in 0..m {
                    rules.push(MvppRule {
                        head: timed.stamp(head, i + 1)?,
                        body: Formula::and(timed.stamp(cond, i + 1)?, timed.stamp(after, i)?),
                    });
                    provenance.push(Provenance::Law { law: idx, step: i });
                }
            }
            CausalLaw::PfDecl { constant, entries } => {
                for i in 0..m {
                    declarations.push(ProbDeclaration {
                        constant: timed
                            .const_id(i, constant)
                            .expect("pf constant in timed signature"),
                        entries: entries.clone(),
                    });
                }
            }
            CausalLaw::InitPfDecl { constant, entries } => {
                if with_init {
                    declarations.push(ProbDeclaration {
                        constant: timed
                            .const_id(0, constant)
                            .expect("initpf constant in timed signature"),
                        entries: entries.clone(),
                    });
                }
            }
            CausalLaw::InitStatic { head, cond } => {
                if with_init {
                    rules.push(MvppRule {
                        head: Formula::Bot,
                        body: Formula::and(
                            Formula::not(timed.stamp(head, 0)?),
                            timed.stamp(cond, 0)?,
                        ),
                    });
                    provenance.push(Provenance::Law { law: idx, step: 0 });
                }
            }
            CausalLaw::Default { .. } | CausalLaw::CausedAb { .. } | CausalLaw::EnableAb => {
                unreachable!("sugar expanded above")
            }
        }
    }
    for (c, kind) in d.signature.fluents() {
        if !kind.is_regular() {
            continue;
        }
        for v in &c.domain {
            rules.push(MvppRule {
                head: Formula::choice(Formula::Atom(timed.sig.atom(
                    timed.const_id(0, &c.name).expect("fluent in timed signature"),
                    c.domain.iter().position(|x| x == v).unwrap(),
                ))),
                body: Formula::Top,
            });
            provenance.push(Provenance::FluentChoice {
                constant: c.name.clone(),
                value: v.clone(),
            });
        }
    }
    for i in 0..m {
        for a in d.signature.actions() {
            for v in &a.domain {
                rules.push(MvppRule {
                    head: Formula::choice(Formula::Atom(timed.atom(i, &a.name, v)?)),
                    body: Formula::Top,
                });
                provenance.push(Provenance::ActionChoice {
                    constant: a.name.clone(),
                    step: i,
                    value: v.clone(),
                });
            }
        }
    }

    let program = MvppProgram::new(sig, declarations, rules)?;
    Ok(TranslationOutput {
        timed,
        program,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpmln::EnumOptions;
    use crate::mvpp::translate_mvpp;
    use crate::pbc::{FluentKind, PbcAtom, PbcSignature};

    fn psd() -> ActionDescription {
        let mut sig = PbcSignature::default();
        sig.add("p", None, ConstClass::Fluent(FluentKind::Regular));
        sig.add("a", None, ConstClass::Action);
        sig.add("pf1", None, ConstClass::Pf);
        sig.add("initP", None, ConstClass::InitPf);
        let atom = |c: &str, v: &str| Formula::Atom(PbcAtom::new(c, v));
        ActionDescription {
            signature: sig,
            laws: vec![
                CausalLaw::FluentDynamic {
                    head: atom("p", "t"),
                    cond: Formula::Top,
                    after: Formula::conj([atom("p", "f"), atom("a", "t"), atom("pf1", "t")]),
                },
                CausalLaw::FluentDynamic {
                    head: atom("p", "f"),
                    cond: Formula::Top,
                    after: Formula::conj([atom("p", "t"), atom("a", "t"), atom("pf1", "t")]),
                },
                CausalLaw::FluentDynamic {
                    head: Formula::choice(atom("p", "t")),
                    cond: Formula::Top,
                    after: atom("p", "t"),
                },
                CausalLaw::FluentDynamic {
                    head: Formula::choice(atom("p", "f")),
                    cond: Formula::Top,
                    after: atom("p", "f"),
                },
                CausalLaw::PfDecl {
                    constant: "pf1".into(),
                    entries: vec![("t".into(), 0.8), ("f".into(), 0.2)],
                },
                CausalLaw::InitPfDecl {
                    constant: "initP".into(),
                    entries: vec![("t".into(), 0.6), ("f".into(), 0.4)],
                },
                CausalLaw::InitStatic {
                    head: atom("p", "t"),
                    cond: atom("initP", "t"),
                },
                CausalLaw::InitStatic {
                    head: atom("p", "f"),
                    cond: atom("initP", "f"),
                },
            ],
        }
    }

    #[test]
    fn rule_counts_follow_the_schemas() {
        for m in 0..=3usize {
            let out = translate(&psd(), m).unwrap();
            // 4m dynamic rules, 2 initial fluent choices, 2m action
            // choices, 2 initial constraints
            assert_eq!(out.program.rules().len(), 4 * m + 2 + 2 * m + 2);
            assert_eq!(out.provenance.len(), out.program.rules().len());
            // m pf declarations plus the initpf declaration
            assert_eq!(out.program.declarations().len(), m + 1);
        }
    }

    #[test]
    fn zero_step_translation_has_no_timeline() {
        let out = translate(&psd(), 0).unwrap();
        let names: Vec<String> = out
            .timed
            .signature()
            .constants()
            .map(|(_, c)| c.name.clone())
            .collect();
        assert_eq!(names, ["0:initP", "0:p"]);
    }

    #[test]
    fn timed_signature_layout_is_step_major() {
        let out = translate(&psd(), 2).unwrap();
        let names: Vec<String> = out
            .timed
            .signature()
            .constants()
            .map(|(_, c)| c.name.clone())
            .collect();
        assert_eq!(
            names,
            ["0:initP", "0:p", "0:a", "0:pf1", "1:p", "1:a", "1:pf1", "2:p"]
        );
        assert_eq!(split_timed("1:pf1"), Some((1, "pf1")));
    }

    #[test]
    fn one_step_translation_matches_hand_distribution() {
        let out = translate(&psd(), 1).unwrap();
        let prog = translate_mvpp(&out.program).unwrap();
        let opts = EnumOptions::default();
        let models = prog.enumerate_stable_models(None, &opts).unwrap();
        // one stable model per total choice x action value
        assert_eq!(models.len(), 8);
        let t = &out.timed;
        let p0 = Formula::Atom(t.atom(0, "p", "t").unwrap());
        let r = prog.probability(&p0, None, &opts).unwrap();
        assert!((r.p - 0.6).abs() < 1e-9);
        let ev = Formula::and(
            Formula::Atom(t.atom(0, "p", "t").unwrap()),
            Formula::Atom(t.atom(0, "a", "t").unwrap()),
        );
        let toggled = Formula::Atom(t.atom(1, "p", "f").unwrap());
        let r = prog.probability(&toggled, Some(&ev), &opts).unwrap();
        assert!((r.p - 0.8).abs() < 1e-9);
    }

    #[test]
    fn transition_program_leaves_step_zero_open() {
        let out = translate_dm(&psd(), 0).unwrap();
        // no initpf constant, no init constraints; only the fluent choices
        assert!(out.timed.const_id(0, "initP").is_none());
        assert_eq!(out.program.rules().len(), 2);
        assert!(out.program.declarations().is_empty());
        let prog = translate_mvpp(&out.program).unwrap();
        let models = prog
            .enumerate_stable_models(None, &EnumOptions::default())
            .unwrap();
        assert_eq!(models.len(), 2);
    }
}
