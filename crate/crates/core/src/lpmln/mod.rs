//! Propositional LP^MLN: weighted rules over a multi-valued signature,
//! stable models via the formula reduct, exhaustive enumeration, and
//! probability computation with hard/soft weight semantics.
//!
//! Hard weights are realized finitely: the weight of an interpretation is
//! the pair (number of satisfied hard rules, sum of satisfied soft
//! weights), compared lexicographically. Only interpretations attaining
//! the maximal hard count carry probability mass, which is exactly the
//! limit semantics of the infinite weight.

mod enumerate;
mod semantics;

pub use enumerate::{EnumOptions, MapOutcome, ProbResult};

use std::collections::HashMap;
use std::fmt;

use crate::formula::Formula;
use thiserror::Error;

pub const BOOL_TRUE: &str = "t";
pub const BOOL_FALSE: &str = "f";

#[derive(Debug, Error)]
pub enum LpmlnError {
    #[error("duplicate constant '{0}' in signature")]
    DuplicateConstant(String),
    #[error("constant '{0}' has an empty or duplicated domain")]
    BadDomain(String),
    #[error("unknown constant '{0}'")]
    UnknownConstant(String),
    #[error("'{value}' is not in the domain of constant '{constant}'")]
    UnknownValue { constant: String, value: String },
    #[error("interpretation does not match the program signature")]
    SignatureMismatch,
    #[error("soft rule weight must be finite")]
    NonFiniteWeight,
    #[error("enumeration exceeded the capacity cap of {cap} candidate interpretations")]
    Capacity { cap: u64 },
    #[error("evidence has zero total weight (conditioning on an impossible event)")]
    ZeroMassEvidence,
}

/// Index of a constant in a [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstId(pub u32);

/// Index of an atom `c=v` in the atom space of a [`Signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constant {
    pub name: String,
    pub domain: Vec<String>,
}

impl Constant {
    pub fn boolean(name: impl Into<String>) -> Constant {
        Constant {
            name: name.into(),
            domain: vec![BOOL_TRUE.to_string(), BOOL_FALSE.to_string()],
        }
    }

    pub fn is_boolean(&self) -> bool {
        self.domain.len() == 2 && self.domain[0] == BOOL_TRUE && self.domain[1] == BOOL_FALSE
    }
}

/// An ordered set of multi-valued constants. The atom space is exactly
/// `{ c=v : c a constant, v in Dom(c) }`, laid out constant-major in
/// declaration order.
#[derive(Debug, Clone)]
pub struct Signature {
    consts: Vec<Constant>,
    by_name: HashMap<String, ConstId>,
    atom_base: Vec<u32>,
    n_atoms: u32,
}

impl Signature {
    pub fn new(consts: Vec<Constant>) -> Result<Signature, LpmlnError> {
        let mut by_name = HashMap::new();
        let mut atom_base = Vec::with_capacity(consts.len());
        let mut n_atoms: u32 = 0;
        for (i, c) in consts.iter().enumerate() {
            if by_name.insert(c.name.clone(), ConstId(i as u32)).is_some() {
                return Err(LpmlnError::DuplicateConstant(c.name.clone()));
            }
            if c.domain.is_empty() {
                return Err(LpmlnError::BadDomain(c.name.clone()));
            }
            for (j, v) in c.domain.iter().enumerate() {
                if c.domain[..j].contains(v) {
                    return Err(LpmlnError::BadDomain(c.name.clone()));
                }
            }
            atom_base.push(n_atoms);
            n_atoms += c.domain.len() as u32;
        }
        Ok(Signature {
            consts,
            by_name,
            atom_base,
            n_atoms,
        })
    }

    pub fn n_consts(&self) -> usize {
        self.consts.len()
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn constants(&self) -> impl Iterator<Item = (ConstId, &Constant)> {
        self.consts
            .iter()
            .enumerate()
            .map(|(i, c)| (ConstId(i as u32), c))
    }

    pub fn constant(&self, id: ConstId) -> &Constant {
        &self.consts[id.0 as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<ConstId> {
        self.by_name.get(name).copied()
    }

    pub fn atom(&self, c: ConstId, value_idx: usize) -> AtomId {
        debug_assert!(value_idx < self.consts[c.0 as usize].domain.len());
        AtomId(self.atom_base[c.0 as usize] + value_idx as u32)
    }

    pub fn atom_by_name(&self, constant: &str, value: &str) -> Result<AtomId, LpmlnError> {
        let c = self
            .lookup(constant)
            .ok_or_else(|| LpmlnError::UnknownConstant(constant.to_string()))?;
        let cd = self.constant(c);
        let v = cd
            .domain
            .iter()
            .position(|x| x == value)
            .ok_or_else(|| LpmlnError::UnknownValue {
                constant: constant.to_string(),
                value: value.to_string(),
            })?;
        Ok(self.atom(c, v))
    }

    /// Inverse of `atom`: the constant and domain index of an atom.
    pub fn atom_parts(&self, a: AtomId) -> (ConstId, usize) {
        let c = match self.atom_base.binary_search(&a.0) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (ConstId(c as u32), (a.0 - self.atom_base[c]) as usize)
    }

    pub fn atom_name(&self, a: AtomId) -> String {
        let (c, v) = self.atom_parts(a);
        let cd = self.constant(c);
        format!("{}={}", cd.name, cd.domain[v])
    }
}

/// Rule weight: a finite real, or the hard (infinite) weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Soft(f64),
    Hard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRule {
    pub weight: Weight,
    pub formula: Formula<AtomId>,
}

impl WeightedRule {
    pub fn hard(formula: Formula<AtomId>) -> WeightedRule {
        WeightedRule {
            weight: Weight::Hard,
            formula,
        }
    }

    pub fn soft(w: f64, formula: Formula<AtomId>) -> WeightedRule {
        WeightedRule {
            weight: Weight::Soft(w),
            formula,
        }
    }
}

/// The two-level unnormalized weight of an interpretation: number of
/// satisfied hard rules first, then the sum of satisfied soft weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight2 {
    pub hard_count: u32,
    pub soft_sum: f64,
}

impl Weight2 {
    pub const ZERO: Weight2 = Weight2 {
        hard_count: 0,
        soft_sum: 0.0,
    };
}

/// Result of `weight_of`: either the Weight2 of a stable model, or the
/// distinguished zero-weight marker for non-stable interpretations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelWeight {
    Stable(Weight2),
    NotStable,
}

#[derive(Debug, Clone)]
pub struct WeightedProgram {
    signature: Signature,
    rules: Vec<WeightedRule>,
    n_hard: u32,
}

impl WeightedProgram {
    pub fn new(
        signature: Signature,
        rules: Vec<WeightedRule>,
    ) -> Result<WeightedProgram, LpmlnError> {
        let mut n_hard = 0;
        for r in &rules {
            match r.weight {
                Weight::Hard => n_hard += 1,
                Weight::Soft(w) => {
                    if !w.is_finite() {
                        return Err(LpmlnError::NonFiniteWeight);
                    }
                }
            }
            let mut bad = false;
            r.formula.for_each_atom(&mut |a| {
                if a.0 >= signature.n_atoms() {
                    bad = true;
                }
            });
            if bad {
                return Err(LpmlnError::SignatureMismatch);
            }
        }
        Ok(WeightedProgram {
            signature,
            rules,
            n_hard,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn rules(&self) -> &[WeightedRule] {
        &self.rules
    }

    pub fn n_hard_rules(&self) -> u32 {
        self.n_hard
    }
}

/// A truth assignment over (a subset of) an atom space, stored as a
/// bitset. Value assignments `constant -> value` are identified with the
/// interpretation making exactly the atoms `c = v(c)` true.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interpretation {
    bits: Vec<u64>,
    n_atoms: u32,
}

impl Interpretation {
    pub fn empty(n_atoms: u32) -> Interpretation {
        Interpretation {
            bits: vec![0; (n_atoms as usize).div_ceil(64)],
            n_atoms,
        }
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn get(&self, a: AtomId) -> bool {
        self.bits[(a.0 / 64) as usize] >> (a.0 % 64) & 1 == 1
    }

    pub fn set(&mut self, a: AtomId, value: bool) {
        let w = &mut self.bits[(a.0 / 64) as usize];
        if value {
            *w |= 1 << (a.0 % 64);
        } else {
            *w &= !(1 << (a.0 % 64));
        }
    }

    pub fn count_true(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.n_atoms).map(AtomId).filter(|a| self.get(*a))
    }

    /// Build from explicitly listed true atoms `(constant, value)`.
    pub fn from_true_atoms<'a>(
        sig: &Signature,
        atoms: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Interpretation, LpmlnError> {
        let mut i = Interpretation::empty(sig.n_atoms());
        for (c, v) in atoms {
            i.set(sig.atom_by_name(c, v)?, true);
        }
        Ok(i)
    }

    /// Build from a value assignment. For Boolean constants the value `f`
    /// is the classical abbreviation for "c=t is false": it makes no atom
    /// true. All other values make exactly the atom `c=v` true.
    pub fn from_assignment<'a>(
        sig: &Signature,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Interpretation, LpmlnError> {
        let mut i = Interpretation::empty(sig.n_atoms());
        for (cname, v) in pairs {
            let c = sig
                .lookup(cname)
                .ok_or_else(|| LpmlnError::UnknownConstant(cname.to_string()))?;
            let cd = sig.constant(c);
            if cd.is_boolean() && v == BOOL_FALSE {
                continue;
            }
            i.set(sig.atom_by_name(cname, v)?, true);
        }
        Ok(i)
    }

    /// The value assigned to a constant, if exactly one of its atoms is
    /// true. Boolean constants with no true atom read as `f`.
    pub fn value_of(&self, sig: &Signature, c: ConstId) -> Option<usize> {
        let cd = sig.constant(c);
        let mut found = None;
        for v in 0..cd.domain.len() {
            if self.get(sig.atom(c, v)) {
                if found.is_some() {
                    return None;
                }
                found = Some(v);
            }
        }
        if found.is_none() && cd.is_boolean() {
            // domain is [t, f]; index of f
            return Some(1);
        }
        found
    }

    pub fn render(&self, sig: &Signature) -> String {
        let mut parts = Vec::new();
        for (c, cd) in sig.constants() {
            match self.value_of(sig, c) {
                Some(v) => parts.push(format!("{}={}", cd.name, cd.domain[v])),
                None => {
                    for v in 0..cd.domain.len() {
                        if self.get(sig.atom(c, v)) {
                            parts.push(format!("{}={}", cd.name, cd.domain[v]));
                        }
                    }
                }
            }
        }
        parts.join(" ")
    }
}

impl PartialOrd for Interpretation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interpretation {
    /// Lexicographic over the sorted sequences of true atoms, so the
    /// empty interpretation comes first.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.true_atoms()
            .map(|a| a.0)
            .cmp(other.true_atoms().map(|a| a.0))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Hard => write!(f, "alpha"),
            Weight::Soft(w) => write!(f, "{w}"),
        }
    }
}
