//! Transition-system semantics of an action description: states from the
//! zero-step program, transitions with probabilities from the one-step
//! program, the deterministic successor function phi, the three
//! structural assumptions behind the fast inference path, exact path
//! probabilities, stationarity verification, and DOT export.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::lpmln::{EnumOptions, Interpretation, LpmlnError};
use crate::mvpp::translate_mvpp;
use crate::pbc::{ActionDescription, ConstClass, PbcConstant, BOOL_TRUE};
use crate::translator::{translate, translate_dm, TimedSignature, TranslateError};

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Lpmln(#[from] LpmlnError),
    #[error("state space exceeds the cap of {cap}")]
    StateCapacity { cap: usize },
    #[error("path space exceeds the cap of {cap}")]
    ComboCapacity { cap: u64 },
    #[error("concurrent actions in a transition: {witness}")]
    Assumption1 { witness: String },
    #[error("{count} successors for {witness}; expected exactly one")]
    Assumption2 { witness: String, count: usize },
    #[error("initial state not determined by the initpf assignment: {witness}")]
    Assumption3 { witness: String },
    #[error("conditioning on a zero-mass state/event pair")]
    ZeroMass,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

#[derive(Debug, Clone)]
pub struct TransitionOptions {
    pub max_states: usize,
    pub max_combos: u64,
    pub enum_opts: EnumOptions,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        TransitionOptions {
            max_states: 1 << 20,
            max_combos: 1 << 26,
            enum_opts: EnumOptions::default(),
        }
    }
}

/// A total value assignment over one constant class, as value indices in
/// class order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn render(&self, consts: &[PbcConstant]) -> String {
        self.0
            .iter()
            .zip(consts)
            .map(|(v, c)| format!("{}={}", c.name, c.domain[*v]))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Event label: names of the actions that are true.
    pub fn render_event(&self, actions: &[PbcConstant]) -> String {
        let names: Vec<&str> = self
            .0
            .iter()
            .zip(actions)
            .filter(|(v, c)| c.domain[**v] == BOOL_TRUE)
            .map(|(_, c)| c.name.as_str())
            .collect();
        if names.is_empty() {
            "none".to_string()
        } else {
            names.join("+")
        }
    }

    fn true_action_count(&self, actions: &[PbcConstant]) -> usize {
        self.0
            .iter()
            .zip(actions)
            .filter(|(v, c)| c.domain[**v] == BOOL_TRUE)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub event: Assignment,
    pub to: usize,
    pub p: f64,
}

#[derive(Debug, Clone)]
pub struct ProbTransitionSystem {
    pub states: Vec<Assignment>,
    pub edges: Vec<Transition>,
}

/// Per-assumption outcome: `None` means the assumption holds, otherwise
/// a human-readable counterexample.
#[derive(Debug, Clone, Default)]
pub struct AssumptionReport {
    pub no_concurrency: Option<String>,
    pub pf_determinism: Option<String>,
    pub init_determinism: Option<String>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.no_concurrency.is_none()
            && self.pf_determinism.is_none()
            && self.init_determinism.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub max_deviation: f64,
    pub compared: usize,
}

impl StationarityReport {
    pub fn pass(&self) -> bool {
        self.max_deviation <= 1e-9
    }
}

/// A path through the fast inference machinery: one state per step plus
/// the total choice and action assignments that produced it.
#[derive(Debug, Clone)]
pub struct PathModel {
    pub initpf: Assignment,
    pub pfs: Vec<Assignment>,
    pub acts: Vec<Assignment>,
    pub states: Vec<usize>,
    pub probability: f64,
}

/// Exhaustive semantic tables of a description: states (zero-step
/// residual stable models), one-step stable models grouped into
/// successor and mass tables, and the initial-state table keyed by
/// initpf assignment.
pub struct TransitionAnalysis {
    d: ActionDescription,
    pub fluents: Vec<PbcConstant>,
    pub actions: Vec<PbcConstant>,
    pub pf: Vec<PbcConstant>,
    pub initpf: Vec<PbcConstant>,
    states: Vec<Assignment>,
    state_index: HashMap<Assignment, usize>,
    /// exactly-one-successor table for (state, event, pf assignment)
    successors: HashMap<(usize, Assignment, Assignment), Vec<usize>>,
    /// exp-mass of one-step models grouped by (state, event) then successor
    masses: HashMap<(usize, Assignment), HashMap<usize, f64>>,
    /// events observed in some one-step stable model
    observed_events: Vec<Assignment>,
    /// initpf assignment -> [(initial state, product of declared probs)]
    init_table: HashMap<Assignment, Vec<(usize, f64)>>,
    opts: TransitionOptions,
}

fn project(
    interp: &Interpretation,
    timed: &TimedSignature,
    step: usize,
    consts: &[PbcConstant],
) -> Result<Assignment, TransitionError> {
    let sig = timed.signature();
    let mut values = Vec::with_capacity(consts.len());
    for c in consts {
        let cid = timed
            .const_id(step, &c.name)
            .ok_or_else(|| TransitionError::Internal(format!("missing constant {}", c.name)))?;
        let v = interp
            .value_of(sig, cid)
            .ok_or_else(|| TransitionError::Internal(format!("non-total value for {}", c.name)))?;
        values.push(v);
    }
    Ok(Assignment(values))
}

/// All total assignments over `consts`, in lexicographic order.
fn all_assignments(consts: &[PbcConstant]) -> Vec<Assignment> {
    let mut out = vec![Assignment(Vec::new())];
    for c in consts {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..c.domain.len()).map(move |v| {
                    let mut b = a.clone();
                    b.0.push(v);
                    b
                })
            })
            .collect();
    }
    out
}

impl TransitionAnalysis {
    pub fn new(d: &ActionDescription, opts: TransitionOptions) -> Result<Self, TransitionError> {
        let d = d
            .expand_sugar()
            .map_err(TranslateError::Sugar)?;
        let sig = &d.signature;
        let fluents: Vec<PbcConstant> = sig.fluents().map(|(c, _)| c.clone()).collect();
        let actions: Vec<PbcConstant> = sig.actions().cloned().collect();
        let pf: Vec<PbcConstant> = sig.of_class(ConstClass::Pf).cloned().collect();
        let initpf: Vec<PbcConstant> = sig.of_class(ConstClass::InitPf).cloned().collect();

        // states: residual stable models of the zero-step program
        let d0 = translate_dm(&d, 0)?;
        let prog0 = translate_mvpp(&d0.program).map_err(TranslateError::Mvpp)?;
        let mut states = Vec::new();
        for (interp, _) in prog0.enumerate_stable_models(None, &opts.enum_opts)? {
            states.push(project(&interp, &d0.timed, 0, &fluents)?);
        }
        states.sort();
        states.dedup();
        if states.len() > opts.max_states {
            return Err(TransitionError::StateCapacity {
                cap: opts.max_states,
            });
        }
        let state_index: HashMap<Assignment, usize> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();

        // one-step stable models give successors and transition masses
        let d1 = translate_dm(&d, 1)?;
        let prog1 = translate_mvpp(&d1.program).map_err(TranslateError::Mvpp)?;
        let mut successors: HashMap<(usize, Assignment, Assignment), Vec<usize>> = HashMap::new();
        let mut masses: HashMap<(usize, Assignment), HashMap<usize, f64>> = HashMap::new();
        let mut observed_events = Vec::new();
        for (interp, w) in prog1.enumerate_stable_models(None, &opts.enum_opts)? {
            let s = project(&interp, &d1.timed, 0, &fluents)?;
            let e = project(&interp, &d1.timed, 0, &actions)?;
            let pfv = project(&interp, &d1.timed, 0, &pf)?;
            let s2 = project(&interp, &d1.timed, 1, &fluents)?;
            let si = *state_index
                .get(&s)
                .ok_or_else(|| TransitionError::Internal("source is not a state".into()))?;
            let ti = *state_index
                .get(&s2)
                .ok_or_else(|| TransitionError::Internal("target is not a state".into()))?;
            successors
                .entry((si, e.clone(), pfv))
                .or_default()
                .push(ti);
            *masses
                .entry((si, e.clone()))
                .or_default()
                .entry(ti)
                .or_insert(0.0) += w.soft_sum.exp();
            observed_events.push(e);
        }
        observed_events.sort();
        observed_events.dedup();

        // initial states per initpf assignment
        let dinit = translate(&d, 0)?;
        let proginit = translate_mvpp(&dinit.program).map_err(TranslateError::Mvpp)?;
        let mut init_table: HashMap<Assignment, Vec<(usize, f64)>> = HashMap::new();
        for (interp, w) in proginit.enumerate_stable_models(None, &opts.enum_opts)? {
            let tc = project(&interp, &dinit.timed, 0, &initpf)?;
            let s = project(&interp, &dinit.timed, 0, &fluents)?;
            let si = *state_index
                .get(&s)
                .ok_or_else(|| TransitionError::Internal("initial state is not a state".into()))?;
            init_table.entry(tc).or_default().push((si, w.soft_sum.exp()));
        }

        Ok(TransitionAnalysis {
            d,
            fluents,
            actions,
            pf,
            initpf,
            states,
            state_index,
            successors,
            masses,
            observed_events,
            init_table,
            opts,
        })
    }

    pub fn description(&self) -> &ActionDescription {
        &self.d
    }

    pub fn states(&self) -> &[Assignment] {
        &self.states
    }

    pub fn state_index(&self, s: &Assignment) -> Option<usize> {
        self.state_index.get(s).copied()
    }

    /// States reachable at step 0 under the initial-state program.
    pub fn initial_states(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .init_table
            .values()
            .flat_map(|v| v.iter().map(|(s, _)| *s))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Initial-state table: each initpf assignment with the states (and
    /// masses) it admits.
    pub fn init_entries(&self) -> impl Iterator<Item = (&Assignment, &[(usize, f64)])> {
        self.init_table.iter().map(|(a, v)| (a, v.as_slice()))
    }

    /// Marginal probability of each initial state.
    pub fn initial_distribution(&self) -> Vec<(usize, f64)> {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for entries in self.init_table.values() {
            for (s, mass) in entries {
                *acc.entry(*s).or_insert(0.0) += mass;
            }
        }
        let total: f64 = acc.values().sum();
        let mut out: Vec<(usize, f64)> = acc.into_iter().map(|(s, m)| (s, m / total)).collect();
        out.sort_by_key(|a| a.0);
        out
    }

    /// Events with at most one action true, the all-idle event first.
    pub fn no_concurrency_events(&self) -> Vec<Assignment> {
        let idle = Assignment(
            self.actions
                .iter()
                .map(|a| a.domain.iter().position(|v| v != BOOL_TRUE).unwrap_or(0))
                .collect(),
        );
        let mut out = vec![idle.clone()];
        for (i, a) in self.actions.iter().enumerate() {
            let mut e = idle.clone();
            e.0[i] = a.domain.iter().position(|v| v == BOOL_TRUE).unwrap_or(0);
            out.push(e);
        }
        out
    }

    pub fn all_pf_assignments(&self) -> Vec<Assignment> {
        all_assignments(&self.pf)
    }

    pub fn all_initpf_assignments(&self) -> Vec<Assignment> {
        all_assignments(&self.initpf)
    }

    /// Declared probability of one pf-class value assignment.
    pub fn pf_mass(&self, consts: &[PbcConstant], a: &Assignment, laws_for: ConstClass) -> f64 {
        let mut m = 1.0;
        for (c, v) in consts.iter().zip(&a.0) {
            m *= self.declared_prob(c, &c.domain[*v], laws_for);
        }
        m
    }

    fn declared_prob(&self, c: &PbcConstant, value: &str, class: ConstClass) -> f64 {
        use crate::pbc::CausalLaw;
        for law in &self.d.laws {
            let (constant, entries) = match (class, law) {
                (ConstClass::Pf, CausalLaw::PfDecl { constant, entries })
                | (ConstClass::InitPf, CausalLaw::InitPfDecl { constant, entries }) => {
                    (constant, entries)
                }
                _ => continue,
            };
            if constant == &c.name {
                if let Some((_, p)) = entries.iter().find(|(v, _)| v == value) {
                    return *p;
                }
            }
        }
        // a pf constant without a declaration cannot pass validation
        1.0
    }

    /// The unique successor state of (state, event, pf assignment).
    pub fn phi(
        &self,
        state: usize,
        event: &Assignment,
        pf: &Assignment,
    ) -> Result<usize, TransitionError> {
        let key = (state, event.clone(), pf.clone());
        let witness = || {
            format!(
                "state [{}], event [{}], pf [{}]",
                self.states[state].render(&self.fluents),
                event.render_event(&self.actions),
                pf.render(&self.pf)
            )
        };
        match self.successors.get(&key) {
            None => Err(TransitionError::Assumption2 {
                witness: witness(),
                count: 0,
            }),
            Some(ts) if ts.len() == 1 => Ok(ts[0]),
            Some(ts) => Err(TransitionError::Assumption2 {
                witness: witness(),
                count: ts.len(),
            }),
        }
    }

    /// Pr(1:to | 0:from, 0:event) over the one-step transition program.
    pub fn transition_probability(
        &self,
        from: usize,
        event: &Assignment,
        to: usize,
    ) -> Result<f64, TransitionError> {
        let by_target = self
            .masses
            .get(&(from, event.clone()))
            .ok_or(TransitionError::ZeroMass)?;
        let total: f64 = by_target.values().sum();
        Ok(by_target.get(&to).copied().unwrap_or(0.0) / total)
    }

    /// The full labeled graph over observed events.
    pub fn transition_system(&self) -> ProbTransitionSystem {
        let mut edges = Vec::new();
        let mut keys: Vec<&(usize, Assignment)> = self.masses.keys().collect();
        keys.sort();
        for key in keys {
            let by_target = &self.masses[key];
            let total: f64 = by_target.values().sum();
            let mut targets: Vec<(&usize, &f64)> = by_target.iter().collect();
            targets.sort_by(|a, b| a.0.cmp(b.0));
            for (to, mass) in targets {
                edges.push(Transition {
                    from: key.0,
                    event: key.1.clone(),
                    to: *to,
                    p: mass / total,
                });
            }
        }
        ProbTransitionSystem {
            states: self.states.clone(),
            edges,
        }
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        let mut report = AssumptionReport::default();
        for e in &self.observed_events {
            if e.true_action_count(&self.actions) > 1 {
                report.no_concurrency = Some(format!(
                    "transition with concurrent event [{}]",
                    e.render_event(&self.actions)
                ));
                break;
            }
        }
        'outer: for s in 0..self.states.len() {
            for e in self.no_concurrency_events() {
                for pf in self.all_pf_assignments() {
                    if let Err(err) = self.phi(s, &e, &pf) {
                        report.pf_determinism = Some(err.to_string());
                        break 'outer;
                    }
                }
            }
        }
        for tc in self.all_initpf_assignments() {
            match self.init_table.get(&tc) {
                Some(entries) if entries.len() == 1 => {}
                found => {
                    report.init_determinism = Some(format!(
                        "initpf [{}] admits {} initial states",
                        tc.render(&self.initpf),
                        found.map_or(0, |e| e.len())
                    ));
                    break;
                }
            }
        }
        report
    }

    /// Number of (total choice, action sequence) combinations at horizon m.
    pub fn combo_count(&self, m: usize) -> u64 {
        let n_tc: u64 = self
            .initpf
            .iter()
            .map(|c| c.domain.len() as u64)
            .product::<u64>()
            .saturating_mul(
                self.pf
                    .iter()
                    .map(|c| c.domain.len() as u64)
                    .product::<u64>()
                    .saturating_pow(m as u32),
            );
        n_tc.saturating_mul((self.actions.len() as u64 + 1).saturating_pow(m as u32))
    }

    /// Follow the total choice and action sequence through phi, returning
    /// the unique path model and its unconditional probability
    /// `M(tc) / (|actions|+1)^m`.
    pub fn path_probability_fast(
        &self,
        initpf: &Assignment,
        pfs: &[Assignment],
        acts: &[Assignment],
    ) -> Result<PathModel, TransitionError> {
        if pfs.len() != acts.len() {
            return Err(TransitionError::LengthMismatch(format!(
                "{} pf steps vs {} action steps",
                pfs.len(),
                acts.len()
            )));
        }
        let m = acts.len();
        let entries = self
            .init_table
            .get(initpf)
            .ok_or_else(|| TransitionError::Assumption3 {
                witness: format!("initpf [{}] admits no initial state", initpf.render(&self.initpf)),
            })?;
        if entries.len() != 1 {
            return Err(TransitionError::Assumption3 {
                witness: format!(
                    "initpf [{}] admits {} initial states",
                    initpf.render(&self.initpf),
                    entries.len()
                ),
            });
        }
        let (s0, init_mass) = entries[0];
        let mut states = vec![s0];
        let mut prob = init_mass;
        for i in 0..m {
            let next = self.phi(states[i], &acts[i], &pfs[i])?;
            states.push(next);
            prob *= self.pf_mass(&self.pf, &pfs[i], ConstClass::Pf);
        }
        prob /= ((self.actions.len() + 1) as f64).powi(m as i32);
        Ok(PathModel {
            initpf: initpf.clone(),
            pfs: pfs.to_vec(),
            acts: acts.to_vec(),
            states,
            probability: prob,
        })
    }

    /// The stable model a path corresponds to, over the timed signature
    /// of the full m-step translation.
    pub fn path_interpretation(
        &self,
        path: &PathModel,
        timed: &TimedSignature,
    ) -> Result<Interpretation, TransitionError> {
        let sig = timed.signature();
        let mut interp = Interpretation::empty(sig.n_atoms());
        let mut put = |step: usize,
                       consts: &[PbcConstant],
                       a: &Assignment|
         -> Result<(), TransitionError> {
            for (c, v) in consts.iter().zip(&a.0) {
                let atom = timed
                    .atom(step, &c.name, &c.domain[*v])
                    .map_err(|e| TransitionError::Internal(e.to_string()))?;
                interp.set(atom, true);
            }
            Ok(())
        };
        put(0, &self.initpf, &path.initpf)?;
        for (i, s) in path.states.iter().enumerate() {
            put(i, &self.fluents, &self.states[*s])?;
        }
        for (i, (e, pf)) in path.acts.iter().zip(&path.pfs).enumerate() {
            put(i, &self.actions, e)?;
            put(i, &self.pf, pf)?;
        }
        Ok(interp)
    }

    /// Visit every (total choice, no-concurrency action sequence) path of
    /// horizon m. The callback receives each path with its probability.
    pub fn for_each_path(
        &self,
        m: usize,
        f: &mut impl FnMut(&PathModel) -> Result<(), TransitionError>,
    ) -> Result<(), TransitionError> {
        if self.combo_count(m) > self.opts.max_combos {
            return Err(TransitionError::ComboCapacity {
                cap: self.opts.max_combos,
            });
        }
        let events = self.no_concurrency_events();
        let pf_assignments = self.all_pf_assignments();
        let mut pfs = Vec::with_capacity(m);
        let mut acts = Vec::with_capacity(m);
        for tc in self.all_initpf_assignments() {
            self.walk_paths(&tc, m, &events, &pf_assignments, &mut pfs, &mut acts, f)?;
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_paths(
        &self,
        tc: &Assignment,
        m: usize,
        events: &[Assignment],
        pf_assignments: &[Assignment],
        pfs: &mut Vec<Assignment>,
        acts: &mut Vec<Assignment>,
        f: &mut impl FnMut(&PathModel) -> Result<(), TransitionError>,
    ) -> Result<(), TransitionError> {
        if pfs.len() == m {
            let path = self.path_probability_fast(tc, pfs, acts)?;
            return f(&path);
        }
        for pf in pf_assignments {
            pfs.push(pf.clone());
            for e in events {
                acts.push(e.clone());
                self.walk_paths(tc, m, events, pf_assignments, pfs, acts, f)?;
                acts.pop();
            }
            pfs.pop();
        }
        Ok(())
    }

    /// Compare Pr(i+1:s' | i:s, i:e) across timesteps by exhaustive path
    /// enumeration; the maximum pairwise deviation should be zero.
    pub fn verify_stationarity(&self, m: usize) -> Result<StationarityReport, TransitionError> {
        assert!(m >= 2, "stationarity needs at least two steps to compare");
        let mut joint: HashMap<(usize, usize, Assignment, usize), f64> = HashMap::new();
        let mut marg: HashMap<(usize, usize, Assignment), f64> = HashMap::new();
        self.for_each_path(m, &mut |path| {
            for i in 0..m {
                let key = (i, path.states[i], path.acts[i].clone(), path.states[i + 1]);
                *joint.entry(key).or_insert(0.0) += path.probability;
                *marg
                    .entry((i, path.states[i], path.acts[i].clone()))
                    .or_insert(0.0) += path.probability;
            }
            Ok(())
        })?;
        let mut per_step: HashMap<(usize, Assignment, usize), Vec<f64>> = HashMap::new();
        for ((i, s, e, s2), mass) in &joint {
            let denom = marg[&(*i, *s, e.clone())];
            if denom > 0.0 {
                per_step
                    .entry((*s, e.clone(), *s2))
                    .or_default()
                    .push(mass / denom);
            }
        }
        let mut max_deviation = 0.0f64;
        let mut compared = 0;
        for probs in per_step.values() {
            if probs.len() < 2 {
                continue;
            }
            compared += 1;
            let lo = probs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            max_deviation = max_deviation.max(hi - lo);
        }
        Ok(StationarityReport {
            max_deviation,
            compared,
        })
    }
}

/// Deterministic DOT rendering: node labels are state assignments, edge
/// labels are `event : p` with three-decimal probabilities.
pub fn export_dot(ts: &ProbTransitionSystem, fluents: &[PbcConstant], actions: &[PbcConstant]) -> String {
    if ts.states.is_empty() && ts.edges.is_empty() {
        return "digraph {}\n".to_string();
    }
    let mut out = String::from("digraph {\n");
    for (i, s) in ts.states.iter().enumerate() {
        let _ = writeln!(out, "  s{} [label=\"{}\"];", i, s.render(fluents));
    }
    for e in &ts.edges {
        let _ = writeln!(
            out,
            "  s{} -> s{} [label=\"{} : {:.3}\"];",
            e.from,
            e.to,
            e.event.render_event(actions),
            e.p
        );
    }
    out.push_str("}\n");
    out
}
