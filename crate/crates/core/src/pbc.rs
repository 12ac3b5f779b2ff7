//! Action descriptions: sorted signatures of fluent / action /
//! probability-fact constants, causal laws, sugar expansion, and
//! well-formedness validation.

use std::collections::HashSet;
use std::fmt;

use crate::formula::Formula;

/// Name of the statically determined Boolean fluent injected by the
/// abnormality machinery.
pub const AB_FLUENT: &str = "ab";
pub const BOOL_TRUE: &str = "t";
pub const BOOL_FALSE: &str = "f";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluentKind {
    Regular,
    StaticallyDetermined,
    /// Abnormality fluent: behaves like a regular fluent, but is the
    /// target of `caused_ab` laws and of diagnosis queries.
    Abnormal,
}

impl FluentKind {
    pub fn is_regular(self) -> bool {
        !matches!(self, FluentKind::StaticallyDetermined)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstClass {
    Fluent(FluentKind),
    Action,
    Pf,
    InitPf,
}

/// An untimed atom `constant = value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PbcAtom {
    pub constant: String,
    pub value: String,
}

impl PbcAtom {
    pub fn new(constant: impl Into<String>, value: impl Into<String>) -> PbcAtom {
        PbcAtom {
            constant: constant.into(),
            value: value.into(),
        }
    }

    /// Boolean `c = t`.
    pub fn pos(constant: impl Into<String>) -> PbcAtom {
        PbcAtom::new(constant, BOOL_TRUE)
    }

    /// Boolean `c = f`.
    pub fn neg(constant: impl Into<String>) -> PbcAtom {
        PbcAtom::new(constant, BOOL_FALSE)
    }
}

impl fmt::Display for PbcAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.constant, self.value)
    }
}

pub type PbcFormula = Formula<PbcAtom>;

#[derive(Debug, Clone, PartialEq)]
pub struct PbcConstant {
    pub name: String,
    pub domain: Vec<String>,
    pub class: ConstClass,
}

impl PbcConstant {
    pub fn is_boolean(&self) -> bool {
        self.domain == [BOOL_TRUE, BOOL_FALSE]
    }
}

/// The four pairwise-disjoint constant classes of an action description,
/// plus the named sorts used for schematic expansion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PbcSignature {
    pub constants: Vec<PbcConstant>,
    pub sorts: Vec<(String, Vec<String>)>,
}

fn bool_domain() -> Vec<String> {
    vec![BOOL_TRUE.to_string(), BOOL_FALSE.to_string()]
}

impl PbcSignature {
    pub fn constant(&self, name: &str) -> Option<&PbcConstant> {
        self.constants.iter().find(|c| c.name == name)
    }

    pub fn sort(&self, name: &str) -> Option<&[String]> {
        self.sorts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, vs)| vs.as_slice())
    }

    pub fn add(&mut self, name: impl Into<String>, domain: Option<Vec<String>>, class: ConstClass) {
        self.constants.push(PbcConstant {
            name: name.into(),
            domain: domain.unwrap_or_else(bool_domain),
            class,
        });
    }

    pub fn fluents(&self) -> impl Iterator<Item = (&PbcConstant, FluentKind)> {
        self.constants.iter().filter_map(|c| match c.class {
            ConstClass::Fluent(k) => Some((c, k)),
            _ => None,
        })
    }

    pub fn of_class(&self, class: ConstClass) -> impl Iterator<Item = &PbcConstant> + '_ {
        self.constants.iter().filter(move |c| c.class == class)
    }

    pub fn actions(&self) -> impl Iterator<Item = &PbcConstant> {
        self.of_class(ConstClass::Action)
    }

    pub fn has_abnormal_fluent(&self) -> bool {
        self.constants
            .iter()
            .any(|c| c.class == ConstClass::Fluent(FluentKind::Abnormal))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CausalLaw {
    /// caused HEAD if COND
    Static { head: PbcFormula, cond: PbcFormula },
    /// caused HEAD if COND after AFTER
    FluentDynamic {
        head: PbcFormula,
        cond: PbcFormula,
        after: PbcFormula,
    },
    /// caused PF = { v1 : p1, ... }
    PfDecl {
        constant: String,
        entries: Vec<(String, f64)>,
    },
    /// caused INITPF = { v1 : p1, ... }
    InitPfDecl {
        constant: String,
        entries: Vec<(String, f64)>,
    },
    /// initially HEAD if COND (HEAD is a fluent atom or ⊥)
    InitStatic { head: PbcFormula, cond: PbcFormula },
    /// default HEAD — sugar for caused {HEAD}ch
    Default { head: PbcFormula },
    /// caused_ab HEAD if COND after AFTER — abnormality-guarded dynamic law
    CausedAb {
        head: PbcFormula,
        cond: PbcFormula,
        after: PbcFormula,
    },
    /// enable_ab — sugar for caused ab
    EnableAb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDescription {
    pub signature: PbcSignature,
    pub laws: Vec<CausalLaw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub law: Option<usize>,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.law {
            Some(idx) => write!(f, "{sev}: law {idx}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

impl ActionDescription {
    /// Rewrite the sugar forms into core laws. Adds the `ab` fluent and
    /// its closed-world default when any abnormal fluent is declared.
    /// Idempotent.
    pub fn expand_sugar(&self) -> Result<ActionDescription, Diagnostic> {
        let mut signature = self.signature.clone();
        let uses_ab = self.signature.has_abnormal_fluent();
        let needs_ab_law = uses_ab && self.signature.constant(AB_FLUENT).is_none();
        if needs_ab_law {
            signature.add(
                AB_FLUENT,
                None,
                ConstClass::Fluent(FluentKind::StaticallyDetermined),
            );
        }
        let mut laws = Vec::with_capacity(self.laws.len() + 1);
        if needs_ab_law {
            // default ~ab: abnormalities are off unless enabled
            laws.push(CausalLaw::Static {
                head: Formula::choice(Formula::Atom(PbcAtom::neg(AB_FLUENT))),
                cond: Formula::Top,
            });
        }
        for (idx, law) in self.laws.iter().enumerate() {
            match law {
                CausalLaw::Default { head } => laws.push(CausalLaw::Static {
                    head: Formula::choice(head.clone()),
                    cond: Formula::Top,
                }),
                CausalLaw::CausedAb { head, cond, after } => {
                    if !uses_ab {
                        return Err(Diagnostic {
                            law: Some(idx),
                            severity: Severity::Error,
                            message: "caused_ab law requires an abnormal fluent declaration"
                                .to_string(),
                        });
                    }
                    laws.push(CausalLaw::FluentDynamic {
                        head: head.clone(),
                        cond: Formula::and(Formula::Atom(PbcAtom::pos(AB_FLUENT)), cond.clone()),
                        after: after.clone(),
                    });
                }
                CausalLaw::EnableAb => laws.push(CausalLaw::Static {
                    head: Formula::Atom(PbcAtom::pos(AB_FLUENT)),
                    cond: Formula::Top,
                }),
                other => laws.push(other.clone()),
            }
        }
        Ok(ActionDescription { signature, laws })
    }

    /// Append an `enable_ab` law (used by diagnosis).
    pub fn with_enable_ab(&self) -> ActionDescription {
        let mut d = self.clone();
        d.laws.push(CausalLaw::EnableAb);
        d
    }

    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let sig = &self.signature;
        let mut seen = HashSet::new();
        for c in &sig.constants {
            if !seen.insert(c.name.as_str()) {
                out.push(Diagnostic {
                    law: None,
                    severity: Severity::Error,
                    message: format!("constant `{}` declared more than once", c.name),
                });
            }
            if c.domain.is_empty() {
                out.push(Diagnostic {
                    law: None,
                    severity: Severity::Error,
                    message: format!("constant `{}` has an empty domain", c.name),
                });
            }
            if c.class == ConstClass::Action && !c.is_boolean() {
                out.push(Diagnostic {
                    law: None,
                    severity: Severity::Error,
                    message: format!("action constant `{}` must be Boolean", c.name),
                });
            }
        }
        for (idx, law) in self.laws.iter().enumerate() {
            self.validate_law(idx, law, &mut out);
        }
        // statically determined fluents should get their values from some
        // static-law head; otherwise their initial values are unconstrained
        let mut supported: HashSet<&str> = HashSet::new();
        for law in &self.laws {
            let head = match law {
                CausalLaw::Static { head, .. }
                | CausalLaw::Default { head }
                | CausalLaw::InitStatic { head, .. } => head,
                CausalLaw::EnableAb => {
                    supported.insert(AB_FLUENT);
                    continue;
                }
                _ => continue,
            };
            head.for_each_atom(&mut |a| {
                if let Some(c) = sig.constant(&a.constant) {
                    supported.insert(&c.name);
                }
            });
        }
        for c in sig.of_class(ConstClass::Fluent(FluentKind::StaticallyDetermined)) {
            if !supported.contains(c.name.as_str()) {
                out.push(Diagnostic {
                    law: None,
                    severity: Severity::Warning,
                    message: format!(
                        "statically determined fluent `{}` has no static law",
                        c.name
                    ),
                });
            }
        }
        out
    }

    pub fn errors(&self) -> Vec<Diagnostic> {
        self.validate()
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect()
    }

    fn validate_law(&self, idx: usize, law: &CausalLaw, out: &mut Vec<Diagnostic>) {
        let mut err = |msg: String| {
            out.push(Diagnostic {
                law: Some(idx),
                severity: Severity::Error,
                message: msg,
            })
        };
        let sig = &self.signature;
        let check_atoms = |f: &PbcFormula, err: &mut dyn FnMut(String)| {
            f.for_each_atom(&mut |a| match sig.constant(&a.constant) {
                None => err(format!("unknown constant `{}`", a.constant)),
                Some(c) if !c.domain.contains(&a.value) => err(format!(
                    "value `{}` is not in the domain of `{}`",
                    a.value, a.constant
                )),
                _ => {}
            })
        };
        let classes = |f: &PbcFormula| {
            let mut cs = Vec::new();
            f.for_each_atom(&mut |a| {
                if let Some(c) = sig.constant(&a.constant) {
                    cs.push((a.constant.clone(), c.class));
                }
            });
            cs
        };
        let require = |f: &PbcFormula,
                       what: &str,
                       allowed: &dyn Fn(ConstClass) -> bool,
                       reason: &str,
                       err: &mut dyn FnMut(String)| {
            for (name, class) in classes(f) {
                if !allowed(class) {
                    err(format!("{what} must not mention `{name}`: {reason}"));
                }
            }
        };
        let is_fluent = |c: ConstClass| matches!(c, ConstClass::Fluent(_));
        match law {
            CausalLaw::Static { head, cond } => {
                check_atoms(head, &mut err);
                check_atoms(cond, &mut err);
                require(head, "a static-law head", &is_fluent, "fluent formulas only", &mut err);
                require(cond, "a static-law condition", &is_fluent, "fluent formulas only", &mut err);
            }
            CausalLaw::Default { head } => {
                check_atoms(head, &mut err);
                require(head, "a default-law head", &is_fluent, "fluent formulas only", &mut err);
            }
            CausalLaw::FluentDynamic { head, cond, after }
            | CausalLaw::CausedAb { head, cond, after } => {
                check_atoms(head, &mut err);
                check_atoms(cond, &mut err);
                check_atoms(after, &mut err);
                require(head, "a dynamic-law head", &is_fluent, "fluent formulas only", &mut err);
                require(
                    head,
                    "a dynamic-law head",
                    &|c| c != ConstClass::Fluent(FluentKind::StaticallyDetermined),
                    "no statically determined constants",
                    &mut err,
                );
                require(cond, "a dynamic-law condition", &is_fluent, "fluent formulas only", &mut err);
                require(
                    after,
                    "a dynamic-law after-part",
                    &|c| c != ConstClass::InitPf,
                    "no initpf constants",
                    &mut err,
                );
            }
            CausalLaw::PfDecl { constant, entries } => {
                self.validate_decl(constant, entries, ConstClass::Pf, "pf", &mut err)
            }
            CausalLaw::InitPfDecl { constant, entries } => {
                self.validate_decl(constant, entries, ConstClass::InitPf, "initpf", &mut err)
            }
            CausalLaw::InitStatic { head, cond } => {
                check_atoms(head, &mut err);
                check_atoms(cond, &mut err);
                match head {
                    Formula::Bot | Formula::Atom(_) => {}
                    _ => err("an initial-state law head must be a single atom or false".into()),
                }
                require(
                    head,
                    "an initial-state law head",
                    &is_fluent,
                    "fluent atoms only",
                    &mut err,
                );
                require(
                    cond,
                    "an initial-state law condition",
                    &|c| !matches!(c, ConstClass::Action | ConstClass::Pf),
                    "no action or pf constants",
                    &mut err,
                );
            }
            CausalLaw::EnableAb => {}
        }
    }

    fn validate_decl(
        &self,
        constant: &str,
        entries: &[(String, f64)],
        class: ConstClass,
        what: &str,
        err: &mut dyn FnMut(String),
    ) {
        let c = match self.signature.constant(constant) {
            None => return err(format!("unknown constant `{constant}`")),
            Some(c) => c,
        };
        if c.class != class {
            return err(format!("`{constant}` is not a {what} constant"));
        }
        let mut values: Vec<&str> = entries.iter().map(|(v, _)| v.as_str()).collect();
        values.sort_unstable();
        values.dedup();
        let mut dom: Vec<&str> = c.domain.iter().map(|v| v.as_str()).collect();
        dom.sort_unstable();
        if values != dom {
            err(format!(
                "declaration for `{constant}` must cover its domain exactly"
            ));
        }
        let mut sum = 0.0;
        for (v, p) in entries {
            if !(*p > 0.0 && *p < 1.0) {
                err(format!(
                    "probability {p} for `{constant}={v}` must lie strictly between 0 and 1"
                ));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            err(format!(
                "probabilities for `{constant}` sum to {sum}, expected 1"
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn psd_is_legal() {
        assert!(psd().validate().is_empty());
    }

    #[test]
    fn sugar_free_description_expands_to_itself() {
        let d = psd();
        let e = d.expand_sugar().unwrap();
        assert_eq!(e.laws, d.laws);
        assert_eq!(e.signature.constants.len(), d.signature.constants.len());
    }

    #[test]
    fn expand_sugar_is_idempotent() {
        let mut d = psd();
        d.signature
            .add("broken", None, ConstClass::Fluent(FluentKind::Abnormal));
        d.laws.push(CausalLaw::Default {
            head: Formula::Atom(PbcAtom::neg("p")),
        });
        d.laws.push(CausalLaw::CausedAb {
            head: Formula::Atom(PbcAtom::pos("broken")),
            cond: Formula::Top,
            after: Formula::Atom(PbcAtom::pos("a")),
        });
        let once = d.expand_sugar().unwrap();
        let twice = once.expand_sugar().unwrap();
        assert_eq!(once.laws, twice.laws);
        assert!(once.signature.constant(AB_FLUENT).is_some());
        // default F => caused {F}ch if true
        assert!(once.laws.iter().any(|l| matches!(
            l,
            CausalLaw::Static { head: Formula::Choice(_), cond: Formula::Top }
        )));
        assert!(once.validate().iter().all(|d| d.severity != Severity::Error));
    }

    #[test]
    fn caused_ab_requires_abnormal_fluent() {
        let mut d = psd();
        d.laws.push(CausalLaw::CausedAb {
            head: Formula::Atom(PbcAtom::pos("p")),
            cond: Formula::Top,
            after: Formula::Top,
        });
        assert!(d.expand_sugar().is_err());
    }

    #[test]
    fn initpf_in_after_part_is_rejected() {
        let mut d = psd();
        d.laws.push(CausalLaw::FluentDynamic {
            head: Formula::Atom(PbcAtom::pos("p")),
            cond: Formula::Top,
            after: Formula::Atom(PbcAtom::pos("initP")),
        });
        let diags = d.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("initpf"));
        assert_eq!(diags[0].law, Some(d.laws.len() - 1));
    }

    #[test]
    fn bad_probability_sum_is_diagnosed() {
        let mut d = psd();
        d.laws[4] = CausalLaw::PfDecl {
            constant: "pf1".into(),
            entries: vec![("t".into(), 0.5), ("f".into(), 0.6)],
        };
        let diags = d.validate();
        assert!(diags.iter().any(|g| g.message.contains("sum")));
    }

    #[test]
    fn boundary_pf_probability_is_rejected_here() {
        let mut d = psd();
        d.laws[4] = CausalLaw::PfDecl {
            constant: "pf1".into(),
            entries: vec![("t".into(), 1.0), ("f".into(), 0.0)],
        };
        assert!(!d.validate().is_empty());
    }

    #[test]
    fn sd_fluent_without_static_law_warns() {
        let mut d = psd();
        d.signature.add(
            "sd",
            None,
            ConstClass::Fluent(FluentKind::StaticallyDetermined),
        );
        let diags = d.validate();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert!(d.errors().is_empty());
    }
}
