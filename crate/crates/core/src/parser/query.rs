use super::desc::{parse_atom, RawAtom};
use super::lex::{lex, Cursor, Tok};
use super::ParseError;
use crate::formula::Formula;
use crate::pbc::{ActionDescription, ConstClass, PbcAtom, BOOL_FALSE, BOOL_TRUE};

/// A ground atom stamped with a time step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimedAtom {
    pub step: usize,
    pub atom: PbcAtom,
}

impl std::fmt::Display for TimedAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.step, self.atom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryTarget {
    Marginal(Formula<TimedAtom>),
    Conditional(Formula<TimedAtom>, Formula<TimedAtom>),
    Map,
    Plan {
        goal: Formula<TimedAtom>,
        init: Formula<TimedAtom>,
    },
    Diagnose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub max_step: usize,
    /// Observed fluent atoms, each at a step in 0..=max_step.
    pub observations: Vec<(usize, PbcAtom)>,
    /// Action facts (step, ground action name, polarity), step < max_step.
    pub action_facts: Vec<(usize, String, bool)>,
    pub target: QueryTarget,
}

pub fn parse_query(src: &str, desc: &ActionDescription) -> Result<QuerySpec, ParseError> {
    let mut cur = Cursor::new(lex(src)?);
    if !cur.eat_ident("steps") {
        return Err(cur.err("query file must start with `steps N.`"));
    }
    let max_step = match cur.next() {
        Tok::Int(n) => n,
        other => return Err(cur.err(format!("expected step count, found {other}"))),
    };
    cur.expect(&Tok::Dot)?;
    let mut observations = Vec::new();
    let mut action_facts = Vec::new();
    let mut target = None;
    loop {
        if matches!(cur.peek(), Tok::Eof) {
            break;
        }
        if cur.eat_ident("observe") {
            let (step, err_loc) = parse_step(&mut cur, max_step)?;
            let neg = if matches!(cur.peek(), Tok::Tilde) {
                cur.next();
                true
            } else {
                false
            };
            let raw = parse_atom(&mut cur)?;
            let atom = resolve_atom(&raw, neg, desc)?;
            let c = desc.signature.constant(&atom.constant).unwrap();
            if !matches!(c.class, ConstClass::Fluent(_)) {
                return Err(err(err_loc, format!("`{}` is not a fluent", atom.constant)));
            }
            cur.expect(&Tok::Dot)?;
            observations.push((step, atom));
        } else if cur.eat_ident("do") {
            let (step, err_loc) = parse_step(&mut cur, max_step)?;
            if step >= max_step {
                return Err(err(
                    err_loc,
                    format!("action step {step} must be below the horizon {max_step}"),
                ));
            }
            let neg = if matches!(cur.peek(), Tok::Tilde) {
                cur.next();
                true
            } else {
                false
            };
            let raw = parse_atom(&mut cur)?;
            let atom = resolve_atom(&raw, neg, desc)?;
            let c = desc.signature.constant(&atom.constant).unwrap();
            if c.class != ConstClass::Action {
                return Err(err(err_loc, format!("`{}` is not an action", atom.constant)));
            }
            cur.expect(&Tok::Dot)?;
            action_facts.push((step, atom.constant, atom.value == BOOL_TRUE));
        } else if cur.eat_ident("query") {
            if target.is_some() {
                return Err(cur.err("multiple `query` statements"));
            }
            target = Some(parse_target(&mut cur, max_step, desc)?);
        } else {
            return Err(cur.err(format!(
                "expected `observe`, `do` or `query`, found {}",
                cur.peek()
            )));
        }
    }
    let target = target.ok_or_else(|| cur.err("missing `query` statement"))?;
    Ok(QuerySpec { max_step, observations, action_facts, target })
}

fn err(loc: (usize, usize), message: String) -> ParseError {
    ParseError { line: loc.0, col: loc.1, message }
}

fn parse_step(cur: &mut Cursor, max_step: usize) -> Result<(usize, (usize, usize)), ParseError> {
    let loc = cur.loc();
    let step = match cur.next() {
        Tok::Int(n) => n,
        other => return Err(cur.err(format!("expected a step number, found {other}"))),
    };
    if step > max_step {
        return Err(err(loc, format!("step {step} exceeds the horizon {max_step}")));
    }
    cur.expect(&Tok::Colon)?;
    Ok((step, loc))
}

fn parse_target(
    cur: &mut Cursor,
    max_step: usize,
    desc: &ActionDescription,
) -> Result<QueryTarget, ParseError> {
    let t = if cur.eat_ident("marginal") {
        QueryTarget::Marginal(parse_timed_fml(cur, max_step, desc)?)
    } else if cur.eat_ident("conditional") {
        let q = parse_timed_fml(cur, max_step, desc)?;
        if !cur.eat_ident("given") {
            return Err(cur.err("`conditional` requires a `given` part"));
        }
        QueryTarget::Conditional(q, parse_timed_fml(cur, max_step, desc)?)
    } else if cur.eat_ident("map") {
        QueryTarget::Map
    } else if cur.eat_ident("plan") {
        if !cur.eat_ident("goal") {
            return Err(cur.err("`plan` requires a `goal` part"));
        }
        let goal = parse_timed_fml(cur, max_step, desc)?;
        if !cur.eat_ident("init") {
            return Err(cur.err("`plan` requires an `init` part"));
        }
        QueryTarget::Plan { goal, init: parse_timed_fml(cur, max_step, desc)? }
    } else if cur.eat_ident("diagnose") {
        QueryTarget::Diagnose
    } else {
        return Err(cur.err(format!("unknown query kind {}", cur.peek())));
    };
    cur.expect(&Tok::Dot)?;
    Ok(t)
}

/// Formulas in queries use ground atoms prefixed with `STEP :`.
fn parse_timed_fml(
    cur: &mut Cursor,
    max_step: usize,
    desc: &ActionDescription,
) -> Result<Formula<TimedAtom>, ParseError> {
    // Reuse the description formula grammar by treating `5:alive(x)` as
    // impossible there; instead parse a parallel grammar where every atom
    // carries a step prefix.
    parse_or(cur, max_step, desc)
}

fn parse_or(
    cur: &mut Cursor,
    m: usize,
    d: &ActionDescription,
) -> Result<Formula<TimedAtom>, ParseError> {
    let mut f = parse_and(cur, m, d)?;
    while matches!(cur.peek(), Tok::Pipe) {
        cur.next();
        f = Formula::or(f, parse_and(cur, m, d)?);
    }
    Ok(f)
}

fn parse_and(
    cur: &mut Cursor,
    m: usize,
    d: &ActionDescription,
) -> Result<Formula<TimedAtom>, ParseError> {
    let mut f = parse_unary(cur, m, d)?;
    while matches!(cur.peek(), Tok::Amp) {
        cur.next();
        f = Formula::and(f, parse_unary(cur, m, d)?);
    }
    Ok(f)
}

fn parse_unary(
    cur: &mut Cursor,
    m: usize,
    d: &ActionDescription,
) -> Result<Formula<TimedAtom>, ParseError> {
    if cur.at_ident("not") {
        cur.next();
        return Ok(Formula::not(parse_unary(cur, m, d)?));
    }
    match cur.peek().clone() {
        Tok::LParen => {
            cur.next();
            let f = parse_or(cur, m, d)?;
            cur.expect(&Tok::RParen)?;
            Ok(f)
        }
        Tok::Ident(s) if s == "true" => {
            cur.next();
            Ok(Formula::Top)
        }
        Tok::Ident(s) if s == "false" => {
            cur.next();
            Ok(Formula::Bot)
        }
        Tok::Int(_) => {
            let (step, _) = parse_step(cur, m)?;
            let neg = if matches!(cur.peek(), Tok::Tilde) {
                cur.next();
                true
            } else {
                false
            };
            let raw = parse_atom(cur)?;
            let atom = resolve_atom(&raw, neg, d)?;
            Ok(Formula::Atom(TimedAtom { step, atom }))
        }
        other => Err(cur.err(format!("expected a timed atom, found {other}"))),
    }
}

/// Ground a query atom: no schematic variables, arguments taken literally.
fn resolve_atom(raw: &RawAtom, neg: bool, desc: &ActionDescription) -> Result<PbcAtom, ParseError> {
    let name = super::desc::ground_name(&raw.name, &raw.args);
    let at = |message: String| ParseError { line: raw.line, col: raw.col, message };
    let c = desc
        .signature
        .constant(&name)
        .ok_or_else(|| at(format!("unknown constant `{name}`")))?;
    let value = match (&raw.value, neg || raw.neg) {
        (None, false) => {
            if !c.is_boolean() {
                return Err(at(format!("constant `{name}` requires an explicit value")));
            }
            BOOL_TRUE.to_string()
        }
        (None, true) => {
            if !c.is_boolean() {
                return Err(at(format!("constant `{name}` requires an explicit value")));
            }
            BOOL_FALSE.to_string()
        }
        (Some(_), true) => return Err(at("`~` cannot be combined with an explicit value".into())),
        (Some(v), false) => {
            if !v.args.is_empty() {
                return Err(at("query values must be plain domain elements".into()));
            }
            if !c.domain.iter().any(|d| d == &v.name) {
                return Err(at(format!(
                    "value `{}` is not in the domain of `{name}`",
                    v.name
                )));
            }
            v.name.clone()
        }
    };
    Ok(PbcAtom::new(name, value))
}
