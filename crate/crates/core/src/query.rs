//! Answers the query forms found in `.pq` files: marginal and
//! conditional probabilities, MAP estimates, best-plan search, and
//! abductive diagnosis over abnormality fluents.

use std::collections::HashMap;

use thiserror::Error;

use crate::formula::Formula;
use crate::lpmln::{
    AtomId, EnumOptions, Interpretation, LpmlnError, ProbResult, WeightedProgram, BOOL_FALSE,
    BOOL_TRUE,
};
use crate::mvpp::{translate_mvpp, MvppError};
use crate::parser::{QuerySpec, QueryTarget, TimedAtom};
use crate::pbc::{ActionDescription, ConstClass, FluentKind, PbcAtom};
use crate::transition::{Assignment, TransitionAnalysis, TransitionError, TransitionOptions};
use crate::translator::{translate, TimedSignature, TranslateError};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Mvpp(#[from] MvppError),
    #[error(transparent)]
    Lpmln(#[from] LpmlnError),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error("plan search space exceeds the cap of {cap} action sequences")]
    PlanSpace { cap: u64 },
    #[error("no action sequence is consistent with the initial condition")]
    NoPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    /// Maximize the conditional probability of reaching the goal.
    Argmax,
    /// Read the actions off the single most probable model.
    Map,
}

#[derive(Debug, Clone)]
pub struct QueryOptions {
    pub enum_opts: EnumOptions,
    pub transition: TransitionOptions,
    pub plan_mode: PlanMode,
    /// Cap on explicitly enumerated action sequences in plan search.
    pub max_plans: u64,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            enum_opts: EnumOptions::default(),
            transition: TransitionOptions::default(),
            plan_mode: PlanMode::Argmax,
            max_plans: 1 << 16,
        }
    }
}

#[derive(Debug, Clone)]
pub enum QueryAnswer {
    Probability(ProbResult),
    /// Most probable model, as the timed values of every constant.
    Map {
        atoms: Vec<TimedAtom>,
        probability: f64,
    },
    /// Actions to execute at each step, and the probability achieved
    /// (goal probability for argmax mode, model probability for map mode).
    Plan {
        steps: Vec<Vec<String>>,
        probability: f64,
    },
    /// Abnormalities (value t) in the most probable explanation.
    Diagnosis {
        abnormalities: Vec<TimedAtom>,
        probability: f64,
    },
}

pub fn answer(
    d: &ActionDescription,
    spec: &QuerySpec,
    opts: &QueryOptions,
) -> Result<QueryAnswer, QueryError> {
    match &spec.target {
        QueryTarget::Marginal(f) => {
            let (timed, program) = compile(d, spec.max_step)?;
            let query = timed_formula(&timed, f)?;
            let evidence = evidence_formula(&timed, spec)?;
            let p = program.probability(&query, evidence.as_ref(), &opts.enum_opts)?;
            Ok(QueryAnswer::Probability(p))
        }
        QueryTarget::Conditional(f, given) => {
            let (timed, program) = compile(d, spec.max_step)?;
            let query = timed_formula(&timed, f)?;
            let mut parts = vec![timed_formula(&timed, given)?];
            if let Some(e) = evidence_formula(&timed, spec)? {
                parts.push(e);
            }
            let evidence = Formula::conj(parts);
            let p = program.probability(&query, Some(&evidence), &opts.enum_opts)?;
            Ok(QueryAnswer::Probability(p))
        }
        QueryTarget::Map => {
            let (timed, program) = compile(d, spec.max_step)?;
            let evidence = evidence_formula(&timed, spec)?;
            let (model, probability) = best_model(&program, evidence.as_ref(), opts)?;
            Ok(QueryAnswer::Map {
                atoms: model_atoms(&timed, &model),
                probability,
            })
        }
        QueryTarget::Diagnose => {
            let enabled = d.with_enable_ab();
            let (timed, program) = compile(&enabled, spec.max_step)?;
            let evidence = evidence_formula(&timed, spec)?;
            let (model, probability) = best_model(&program, evidence.as_ref(), opts)?;
            let abnormalities = model_atoms(&timed, &model)
                .into_iter()
                .filter(|ta| {
                    matches!(
                        enabled.signature.constant(&ta.atom.constant).map(|c| c.class),
                        Some(ConstClass::Fluent(FluentKind::Abnormal))
                    ) && ta.atom.value == BOOL_TRUE
                })
                .collect();
            Ok(QueryAnswer::Diagnosis { abnormalities, probability })
        }
        QueryTarget::Plan { goal, init } => plan(d, spec, goal, init, opts),
    }
}

fn compile(
    d: &ActionDescription,
    m: usize,
) -> Result<(TimedSignature, WeightedProgram), QueryError> {
    let out = translate(d, m)?;
    let program = translate_mvpp(&out.program)?;
    Ok((out.timed, program))
}

fn timed_formula(
    timed: &TimedSignature,
    f: &Formula<TimedAtom>,
) -> Result<Formula<AtomId>, LpmlnError> {
    f.try_map_atoms(&mut |ta: &TimedAtom| timed.atom(ta.step, &ta.atom.constant, &ta.atom.value))
}

/// Observations and do-facts as a hard conditioning formula.
fn evidence_formula(
    timed: &TimedSignature,
    spec: &QuerySpec,
) -> Result<Option<Formula<AtomId>>, LpmlnError> {
    let mut parts = Vec::new();
    for (step, atom) in &spec.observations {
        parts.push(Formula::Atom(timed.atom(*step, &atom.constant, &atom.value)?));
    }
    for (step, name, polarity) in &spec.action_facts {
        let value = if *polarity { BOOL_TRUE } else { BOOL_FALSE };
        parts.push(Formula::Atom(timed.atom(*step, name, value)?));
    }
    Ok(if parts.is_empty() {
        None
    } else {
        Some(Formula::conj(parts))
    })
}

fn best_model(
    program: &WeightedProgram,
    evidence: Option<&Formula<AtomId>>,
    opts: &QueryOptions,
) -> Result<(Interpretation, f64), QueryError> {
    let outcome = program.map_models(evidence, &opts.enum_opts)?;
    // Ties are resolved by the canonical interpretation order.
    Ok((outcome.models[0].clone(), outcome.probability))
}

fn model_atoms(timed: &TimedSignature, model: &Interpretation) -> Vec<TimedAtom> {
    let sig = timed.signature();
    let mut out = Vec::new();
    for id in 0..sig.n_consts() {
        let c = sig.constant(crate::lpmln::ConstId(id as u32));
        let v = match model.value_of(sig, crate::lpmln::ConstId(id as u32)) {
            Some(v) => v,
            None => continue,
        };
        if let Some((step, name)) = crate::translator::split_timed(&c.name) {
            out.push(TimedAtom {
                step,
                atom: PbcAtom::new(name, &c.domain[v]),
            });
        }
    }
    out
}

fn plan(
    d: &ActionDescription,
    spec: &QuerySpec,
    goal: &Formula<TimedAtom>,
    init: &Formula<TimedAtom>,
    opts: &QueryOptions,
) -> Result<QueryAnswer, QueryError> {
    let clean = spec.observations.is_empty() && spec.action_facts.is_empty();
    if opts.plan_mode == PlanMode::Map {
        // Viterbi over the transition system when it is faithful;
        // otherwise MAP over the full multi-step program.
        if clean {
            let ta = TransitionAnalysis::new(d, opts.transition.clone())?;
            if ta.check_assumptions().all_pass() {
                if let (Some(gp), Some(ip)) = (
                    state_predicate(&ta, goal, spec.max_step),
                    state_predicate(&ta, init, 0),
                ) {
                    return plan_map_over_system(&ta, spec.max_step, &gp, &ip);
                }
            }
        }
        let (timed, program) = compile(d, spec.max_step)?;
        let mut parts = vec![timed_formula(&timed, goal)?, timed_formula(&timed, init)?];
        if let Some(e) = evidence_formula(&timed, spec)? {
            parts.push(e);
        }
        let evidence = Formula::conj(parts);
        let (model, probability) = best_model(&program, Some(&evidence), opts)?;
        let steps = plan_steps(d, &timed, &model, spec.max_step);
        return Ok(QueryAnswer::Plan { steps, probability });
    }
    // Argmax mode: evaluate every candidate action sequence on the
    // transition system when it faithfully represents the description,
    // otherwise fall back to one conditional query per sequence.
    let ta = TransitionAnalysis::new(d, opts.transition.clone())?;
    if clean && ta.check_assumptions().all_pass() {
        if let (Some(gp), Some(ip)) = (
            state_predicate(&ta, goal, spec.max_step),
            state_predicate(&ta, init, 0),
        ) {
            return plan_over_system(&ta, spec.max_step, &gp, &ip, opts);
        }
    }
    plan_by_enumeration(d, spec, goal, init, opts)
}

/// Actions executed at each step according to a model.
fn plan_steps(
    d: &ActionDescription,
    timed: &TimedSignature,
    model: &Interpretation,
    m: usize,
) -> Vec<Vec<String>> {
    let sig = timed.signature();
    (0..m)
        .map(|i| {
            d.signature
                .of_class(ConstClass::Action)
                .filter(|a| {
                    let id = timed
                        .const_id(i, &a.name)
                        .expect("action constant missing from timed signature");
                    model.value_of(sig, id) == Some(0)
                })
                .map(|a| a.name.clone())
                .collect()
        })
        .collect()
}

/// Compile a single-step fluent formula into a predicate on states.
/// Returns None if any atom is at the wrong step or not a state fluent.
fn state_predicate(
    ta: &TransitionAnalysis,
    f: &Formula<TimedAtom>,
    step: usize,
) -> Option<Formula<(usize, usize)>> {
    f.try_map_atoms(&mut |a: &TimedAtom| {
        if a.step != step {
            return Err(());
        }
        let fi = ta
            .fluents
            .iter()
            .position(|c| c.name == a.atom.constant)
            .ok_or(())?;
        let vi = ta.fluents[fi]
            .domain
            .iter()
            .position(|v| v == &a.atom.value)
            .ok_or(())?;
        Ok((fi, vi))
    })
    .ok()
}

fn holds(pred: &Formula<(usize, usize)>, state: &Assignment) -> bool {
    pred.eval(&|&(fi, vi): &(usize, usize)| state.0[fi] == vi)
}

fn plan_over_system(
    ta: &TransitionAnalysis,
    m: usize,
    goal: &Formula<(usize, usize)>,
    init: &Formula<(usize, usize)>,
    opts: &QueryOptions,
) -> Result<QueryAnswer, QueryError> {
    let events = ta.no_concurrency_events();
    let n_states = ta.states().len();
    let mut start = vec![0.0; n_states];
    let mut mass = 0.0;
    for (s, p) in ta.initial_distribution() {
        if holds(init, &ta.states()[s]) {
            start[s] = p;
            mass += p;
        }
    }
    if mass <= 0.0 {
        return Err(QueryError::Lpmln(LpmlnError::ZeroMassEvidence));
    }
    for v in &mut start {
        *v /= mass;
    }
    let ts = ta.transition_system();
    let mut edges: HashMap<(usize, &Assignment), Vec<(usize, f64)>> = HashMap::new();
    for e in &ts.edges {
        edges.entry((e.from, &e.event)).or_default().push((e.to, e.p));
    }
    let n_seq = (events.len() as u64)
        .checked_pow(m as u32)
        .unwrap_or(u64::MAX);
    if n_seq > opts.max_plans {
        return Err(QueryError::PlanSpace { cap: opts.max_plans });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    // Mixed-radix order: earlier steps vary slowest and the idle event
    // comes first, so ties prefer fewer and earlier-listed actions.
    let mut seq = vec![0usize; m];
    loop {
        let mut v = start.clone();
        for &ei in &seq {
            let mut next = vec![0.0; n_states];
            for (s, p) in v.iter().enumerate() {
                if *p == 0.0 {
                    continue;
                }
                if let Some(outs) = edges.get(&(s, &events[ei])) {
                    for (to, q) in outs {
                        next[*to] += p * q;
                    }
                }
            }
            v = next;
        }
        let p: f64 = v
            .iter()
            .enumerate()
            .filter(|(s, _)| holds(goal, &ta.states()[*s]))
            .map(|(_, p)| p)
            .sum();
        if best.as_ref().is_none_or(|(_, bp)| p > bp + 1e-12) {
            best = Some((seq.clone(), p));
        }
        let mut k = m;
        loop {
            if k == 0 {
                let (seq, p) = best.ok_or(QueryError::NoPlan)?;
                let steps = seq
                    .iter()
                    .map(|&ei| {
                        ta.actions
                            .iter()
                            .enumerate()
                            .filter(|(ai, _)| events[ei].0[*ai] == 0)
                            .map(|(_, a)| a.name.clone())
                            .collect()
                    })
                    .collect();
                return Ok(QueryAnswer::Plan { steps, probability: p });
            }
            k -= 1;
            seq[k] += 1;
            if seq[k] < events.len() {
                break;
            }
            seq[k] = 0;
        }
    }
}

/// Viterbi search for the most probable model satisfying init and goal.
/// Valid when Assumptions 1–3 hold: every model corresponds to a unique
/// (initpf, events, pf sequence) choice, with mass M(initpf)·∏M(pfᵢ)
/// and a uniform action factor that cancels in the ratio.
fn plan_map_over_system(
    ta: &TransitionAnalysis,
    m: usize,
    goal: &Formula<(usize, usize)>,
    init: &Formula<(usize, usize)>,
) -> Result<QueryAnswer, QueryError> {
    let events = ta.no_concurrency_events();
    let n = ta.states().len();
    let mut vmax = vec![0.0f64; n];
    let mut vsum = vec![0.0f64; n];
    for (_, entries) in ta.init_entries() {
        for &(s, mass) in entries {
            if holds(init, &ta.states()[s]) {
                vmax[s] = vmax[s].max(mass);
                vsum[s] += mass;
            }
        }
    }
    // Per-edge best and total pf mass.
    let pfs = ta.all_pf_assignments();
    let mut wmax: HashMap<(usize, usize, usize), f64> = HashMap::new();
    let mut wsum: HashMap<(usize, usize), f64> = HashMap::new();
    for s in 0..n {
        for (ei, e) in events.iter().enumerate() {
            for pf in &pfs {
                let s2 = ta.phi(s, e, pf)?;
                let mass = ta.pf_mass(&ta.pf, pf, ConstClass::Pf);
                let w = wmax.entry((s, ei, s2)).or_insert(0.0);
                *w = w.max(mass);
                *wsum.entry((s, s2)).or_insert(0.0) += mass;
            }
        }
    }
    let mut back: Vec<Vec<Option<(usize, usize)>>> = Vec::new();
    for _ in 0..m {
        let mut next_max = vec![0.0f64; n];
        let mut next_sum = vec![0.0f64; n];
        let mut ptr = vec![None; n];
        for s in 0..n {
            for ei in 0..events.len() {
                for s2 in 0..n {
                    if let Some(w) = wmax.get(&(s, ei, s2)) {
                        let cand = vmax[s] * w;
                        if cand > next_max[s2] {
                            next_max[s2] = cand;
                            ptr[s2] = Some((s, ei));
                        }
                    }
                }
            }
            for (s2, acc) in next_sum.iter_mut().enumerate() {
                if let Some(w) = wsum.get(&(s, s2)) {
                    *acc += vsum[s] * w;
                }
            }
        }
        vmax = next_max;
        vsum = next_sum;
        back.push(ptr);
    }
    let denom: f64 = (0..n)
        .filter(|&s| holds(goal, &ta.states()[s]))
        .map(|s| vsum[s])
        .sum();
    let mut best_state = None;
    for s in 0..n {
        if holds(goal, &ta.states()[s]) && vmax[s] > 0.0
            && best_state.is_none_or(|b| vmax[s] > vmax[b]) {
                best_state = Some(s);
            }
    }
    let mut s = best_state.ok_or(QueryError::NoPlan)?;
    let probability = vmax[s] / denom;
    let mut seq = vec![0usize; m];
    for i in (0..m).rev() {
        let (prev, ei) = back[i][s].expect("positive mass entails a predecessor");
        seq[i] = ei;
        s = prev;
    }
    let steps = seq
        .iter()
        .map(|&ei| {
            ta.actions
                .iter()
                .enumerate()
                .filter(|(ai, _)| events[ei].0[*ai] == 0)
                .map(|(_, a)| a.name.clone())
                .collect()
        })
        .collect();
    Ok(QueryAnswer::Plan { steps, probability })
}

/// Exhaustive fallback: condition one lpmln query per action sequence.
fn plan_by_enumeration(
    d: &ActionDescription,
    spec: &QuerySpec,
    goal: &Formula<TimedAtom>,
    init: &Formula<TimedAtom>,
    opts: &QueryOptions,
) -> Result<QueryAnswer, QueryError> {
    let m = spec.max_step;
    let (timed, program) = compile(d, m)?;
    let query = timed_formula(&timed, goal)?;
    let actions: Vec<String> = d
        .signature
        .of_class(ConstClass::Action)
        .map(|c| c.name.clone())
        .collect();
    // Candidate events: subsets of actions, fewest actions first.
    let mut events: Vec<Vec<usize>> = (0u32..(1 << actions.len()))
        .map(|bits| (0..actions.len()).filter(|i| bits >> i & 1 == 1).collect())
        .collect();
    events.sort_by_key(|e| (e.len(), e.clone()));
    let n_seq = (events.len() as u64)
        .checked_pow(m as u32)
        .unwrap_or(u64::MAX);
    if n_seq > opts.max_plans {
        return Err(QueryError::PlanSpace { cap: opts.max_plans });
    }
    let base = {
        let mut parts = vec![timed_formula(&timed, init)?];
        if let Some(e) = evidence_formula(&timed, spec)? {
            parts.push(e);
        }
        parts
    };
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut seq = vec![0usize; m];
    loop {
        let mut parts = base.clone();
        for (i, &ei) in seq.iter().enumerate() {
            for (ai, name) in actions.iter().enumerate() {
                let value = if events[ei].contains(&ai) { BOOL_TRUE } else { BOOL_FALSE };
                parts.push(Formula::Atom(timed.atom(i, name, value).map_err(QueryError::Lpmln)?));
            }
        }
        let evidence = Formula::conj(parts);
        match program.probability(&query, Some(&evidence), &opts.enum_opts) {
            Ok(r) => {
                if best.as_ref().is_none_or(|(_, bp)| r.p > bp + 1e-12) {
                    best = Some((seq.clone(), r.p));
                }
            }
            // This action sequence contradicts the evidence; skip it.
            Err(LpmlnError::ZeroMassEvidence) => {}
            Err(e) => return Err(e.into()),
        }
        let mut k = m;
        loop {
            if k == 0 {
                let (seq, p) = best.ok_or(QueryError::NoPlan)?;
                let steps = seq
                    .iter()
                    .map(|&ei| events[ei].iter().map(|&ai| actions[ai].clone()).collect())
                    .collect();
                return Ok(QueryAnswer::Plan { steps, probability: p });
            }
            k -= 1;
            seq[k] += 1;
            if seq[k] < events.len() {
                break;
            }
            seq[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_description, parse_query};

    const PSD: &str = include_str!("../../../corpus/psd.pbc");

    fn psd() -> ActionDescription {
        parse_description(PSD).unwrap()
    }

    fn run(d: &ActionDescription, q: &str) -> QueryAnswer {
        let spec = parse_query(q, d).unwrap();
        answer(d, &spec, &QueryOptions::default()).unwrap()
    }

    fn prob(a: QueryAnswer) -> f64 {
        match a {
            QueryAnswer::Probability(r) => r.p,
            other => panic!("expected probability, got {other:?}"),
        }
    }

    #[test]
    fn marginal_without_evidence() {
        let d = psd();
        let p = prob(run(&d, "steps 0. query marginal 0: p."));
        assert!((p - 0.6).abs() < 1e-9);
    }

    #[test]
    fn conditional_matches_bayes() {
        let d = psd();
        // P(1:~p | 0:p, 0:a) = 0.8 via evidence facts...
        let p1 = prob(run(&d, "steps 1. observe 0: p. do 0: a. query marginal 1: ~p."));
        assert!((p1 - 0.8).abs() < 1e-9);
        // ...and the same number via an explicit conditional target.
        let p2 = prob(run(&d, "steps 1. do 0: a. query conditional 1: ~p given 0: p."));
        assert!((p2 - 0.8).abs() < 1e-9);
        // Bayes consistency: P(q ∧ e) = P(q | e) · P(e).
        let joint = prob(run(&d, "steps 1. query marginal 1: ~p & 0: p & 0: a."));
        let pe = prob(run(&d, "steps 1. query marginal 0: p & 0: a."));
        assert!((joint - p2 * pe).abs() < 1e-9);
    }

    #[test]
    fn map_finds_most_probable_initial_state() {
        let d = psd();
        match run(&d, "steps 0. query map.") {
            QueryAnswer::Map { atoms, .. } => {
                assert!(atoms.contains(&TimedAtom { step: 0, atom: PbcAtom::new("p", "t") }));
            }
            other => panic!("expected map, got {other:?}"),
        }
    }

    #[test]
    fn plan_turns_p_off() {
        let d = psd();
        // From p, the only way to make p false in one step is to act.
        match run(&d, "steps 1. query plan goal 1: ~p init 0: p.") {
            QueryAnswer::Plan { steps, probability } => {
                assert_eq!(steps, vec![vec!["a".to_string()]]);
                assert!((probability - 0.8).abs() < 1e-9);
            }
            other => panic!("expected plan, got {other:?}"),
        }
    }

    #[test]
    fn plan_prefers_idle_on_ties() {
        let d = psd();
        // Keeping p true is best served by doing nothing.
        match run(&d, "steps 1. query plan goal 1: p init 0: p.") {
            QueryAnswer::Plan { steps, probability } => {
                assert_eq!(steps, vec![Vec::<String>::new()]);
                assert!((probability - 1.0).abs() < 1e-9);
            }
            other => panic!("expected plan, got {other:?}"),
        }
    }

    #[test]
    fn fallback_plan_agrees_with_fast_path() {
        let d = psd();
        let spec = parse_query("steps 2. query plan goal 2: ~p init 0: p.", &d).unwrap();
        let fast = answer(&d, &spec, &QueryOptions::default()).unwrap();
        // Forcing the fallback by adding a vacuous observation.
        let spec2 =
            parse_query("steps 2. observe 0: p. query plan goal 2: ~p init 0: p.", &d).unwrap();
        let slow = answer(&d, &spec2, &QueryOptions::default()).unwrap();
        match (fast, slow) {
            (
                QueryAnswer::Plan { steps: s1, probability: p1 },
                QueryAnswer::Plan { steps: s2, probability: p2 },
            ) => {
                assert_eq!(s1, s2);
                assert!((p1 - p2).abs() < 1e-9);
            }
            other => panic!("expected plans, got {other:?}"),
        }
    }
}
