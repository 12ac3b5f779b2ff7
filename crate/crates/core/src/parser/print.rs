use super::query::{QuerySpec, QueryTarget, TimedAtom};
use crate::formula::Formula;
use crate::pbc::{
    ActionDescription, CausalLaw, ConstClass, FluentKind, PbcAtom, PbcSignature, BOOL_FALSE,
    BOOL_TRUE,
};

/// Render a description in the concrete syntax. Parsing the result yields
/// an identical AST for any description produced by the parser.
pub fn print_description(d: &ActionDescription) -> String {
    let sig = &d.signature;
    let mut out = String::new();
    let mut sorts = sig.sorts.clone();
    // Constants whose domain matches no declared sort get a synthetic one.
    let mut aux = 0usize;
    for c in &sig.constants {
        if c.is_boolean() {
            continue;
        }
        if !sorts.iter().any(|(_, es)| es == &c.domain) {
            aux += 1;
            sorts.push((format!("dom{aux}"), c.domain.clone()));
        }
    }
    for (name, elems) in &sorts {
        out.push_str(&format!("sort {name} = {{{}}}\n", elems.join(", ")));
    }
    if !sorts.is_empty() {
        out.push('\n');
    }
    for c in &sig.constants {
        let kw = match c.class {
            ConstClass::Fluent(FluentKind::Regular) => "fluent",
            ConstClass::Fluent(FluentKind::StaticallyDetermined) => "sdFluent",
            ConstClass::Fluent(FluentKind::Abnormal) => "abFluent",
            ConstClass::Action => "action",
            ConstClass::Pf => "pf",
            ConstClass::InitPf => "initpf",
        };
        out.push_str(kw);
        out.push(' ');
        out.push_str(&c.name);
        if !c.is_boolean() {
            let sort = sorts
                .iter()
                .find(|(_, es)| es == &c.domain)
                .map(|(n, _)| n.clone())
                .unwrap();
            out.push_str(&format!(" : {sort}"));
        }
        out.push('\n');
    }
    out.push('\n');
    for law in &d.laws {
        out.push_str(&print_law(law, sig));
        out.push('\n');
    }
    out
}

fn print_law(law: &CausalLaw, sig: &PbcSignature) -> String {
    match law {
        CausalLaw::Static { head, cond } => {
            format!("caused {}{}.", print_formula(head, sig), if_part(cond, sig))
        }
        CausalLaw::FluentDynamic { head, cond, after } => format!(
            "caused {}{} after {}.",
            print_formula(head, sig),
            if_part(cond, sig),
            print_formula(after, sig)
        ),
        CausalLaw::PfDecl { constant, entries } | CausalLaw::InitPfDecl { constant, entries } => {
            let body: Vec<String> = entries.iter().map(|(v, p)| format!("{v}: {p}")).collect();
            format!("caused {constant} = {{{}}}.", body.join(", "))
        }
        CausalLaw::InitStatic { head, cond } => {
            format!("initially {}{}.", print_formula(head, sig), if_part(cond, sig))
        }
        CausalLaw::Default { head } => format!("default {}.", print_formula(head, sig)),
        CausalLaw::CausedAb { head, cond, after } => format!(
            "caused_ab {}{} after {}.",
            print_formula(head, sig),
            if_part(cond, sig),
            print_formula(after, sig)
        ),
        CausalLaw::EnableAb => "enable_ab.".to_string(),
    }
}

fn if_part(cond: &Formula<PbcAtom>, sig: &PbcSignature) -> String {
    if matches!(cond, Formula::Top) {
        String::new()
    } else {
        format!(" if {}", print_formula(cond, sig))
    }
}

/// Precedence: `|` binds loosest, then `&`, then prefix operators.
pub fn print_formula(f: &Formula<PbcAtom>, sig: &PbcSignature) -> String {
    fmt_fml(f, sig, 0)
}

fn fmt_fml(f: &Formula<PbcAtom>, sig: &PbcSignature, prec: u8) -> String {
    let (body, my_prec) = match f {
        Formula::Top => ("true".to_string(), 3),
        Formula::Bot => ("false".to_string(), 3),
        Formula::Atom(a) => (fmt_atom(a, sig), 3),
        Formula::Not(x) => (format!("not {}", fmt_fml(x, sig, 3)), 2),
        Formula::And(x, y) => (
            format!("{} & {}", fmt_fml(x, sig, 2), fmt_fml(y, sig, 2)),
            1,
        ),
        Formula::Or(x, y) => (
            format!("{} | {}", fmt_fml(x, sig, 1), fmt_fml(y, sig, 1)),
            0,
        ),
        // No surface syntax; only appears in programmatic ASTs.
        Formula::Implies(x, y) => (
            format!("not {} | {}", fmt_fml(x, sig, 3), fmt_fml(y, sig, 1)),
            0,
        ),
        Formula::Choice(x) => (format!("{{{}}}", fmt_fml(x, sig, 0)), 3),
    };
    if my_prec < prec {
        format!("({body})")
    } else {
        body
    }
}

fn fmt_atom(a: &PbcAtom, sig: &PbcSignature) -> String {
    let boolean = sig.constant(&a.constant).is_some_and(|c| c.is_boolean());
    if boolean && a.value == BOOL_TRUE {
        a.constant.clone()
    } else if boolean && a.value == BOOL_FALSE {
        format!("~{}", a.constant)
    } else {
        format!("{}={}", a.constant, a.value)
    }
}

pub fn print_query(q: &QuerySpec, sig: &PbcSignature) -> String {
    let mut out = format!("steps {}.\n", q.max_step);
    for (step, atom) in &q.observations {
        out.push_str(&format!("observe {step}: {}.\n", fmt_atom(atom, sig)));
    }
    for (step, name, pol) in &q.action_facts {
        let t = if *pol { "" } else { "~" };
        out.push_str(&format!("do {step}: {t}{name}.\n"));
    }
    let target = match &q.target {
        QueryTarget::Marginal(f) => format!("marginal {}", fmt_timed(f, sig, 0)),
        QueryTarget::Conditional(f, g) => format!(
            "conditional {} given {}",
            fmt_timed(f, sig, 0),
            fmt_timed(g, sig, 0)
        ),
        QueryTarget::Map => "map".to_string(),
        QueryTarget::Plan { goal, init } => format!(
            "plan goal {} init {}",
            fmt_timed(goal, sig, 0),
            fmt_timed(init, sig, 0)
        ),
        QueryTarget::Diagnose => "diagnose".to_string(),
    };
    out.push_str(&format!("query {target}.\n"));
    out
}

fn fmt_timed(f: &Formula<TimedAtom>, sig: &PbcSignature, prec: u8) -> String {
    let (body, my_prec) = match f {
        Formula::Top => ("true".to_string(), 3),
        Formula::Bot => ("false".to_string(), 3),
        Formula::Atom(a) => (format!("{}: {}", a.step, fmt_atom(&a.atom, sig)), 3),
        Formula::Not(x) => (format!("not {}", fmt_timed(x, sig, 3)), 2),
        Formula::And(x, y) => (
            format!("{} & {}", fmt_timed(x, sig, 2), fmt_timed(y, sig, 2)),
            1,
        ),
        Formula::Or(x, y) => (
            format!("{} | {}", fmt_timed(x, sig, 1), fmt_timed(y, sig, 1)),
            0,
        ),
        Formula::Implies(x, y) => (
            format!("not {} | {}", fmt_timed(x, sig, 3), fmt_timed(y, sig, 1)),
            0,
        ),
        Formula::Choice(x) => (format!("{{{}}}", fmt_timed(x, sig, 0)), 3),
    };
    if my_prec < prec {
        format!("({body})")
    } else {
        body
    }
}
