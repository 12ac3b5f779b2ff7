use super::lex::{lex, Cursor, Tok};
use super::ParseError;
use crate::formula::Formula;
use crate::pbc::{
    ActionDescription, CausalLaw, ConstClass, FluentKind, PbcAtom, PbcFormula, PbcSignature,
};

/// An atom as written, before schematic variables are resolved.
#[derive(Debug, Clone)]
pub(super) struct RawAtom {
    pub name: String,
    pub args: Vec<String>,
    pub value: Option<RawVal>,
    /// `~atom` with no explicit value: the Boolean c=f abbreviation.
    pub neg: bool,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub(super) struct RawVal {
    pub name: String,
    pub args: Vec<String>,
}

impl RawAtom {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, message: message.into() }
    }
}

pub(super) fn ground_name(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{}({})", name, args.join(","))
    }
}

enum RawLaw {
    Static { head: Formula<RawAtom>, cond: Formula<RawAtom> },
    Dynamic { head: Formula<RawAtom>, cond: Formula<RawAtom>, after: Formula<RawAtom> },
    Decl { name: String, args: Vec<String>, entries: Vec<(String, f64)>, line: usize, col: usize },
    Init { head: Formula<RawAtom>, cond: Formula<RawAtom> },
    Default { head: Formula<RawAtom> },
    CausedAb { head: Formula<RawAtom>, cond: Formula<RawAtom>, after: Formula<RawAtom> },
    EnableAb,
}

pub fn parse_description(src: &str) -> Result<ActionDescription, ParseError> {
    let mut cur = Cursor::new(lex(src)?);
    let mut sig = PbcSignature::default();
    let mut laws = Vec::new();
    loop {
        if matches!(cur.peek(), Tok::Eof) {
            break;
        }
        if cur.eat_ident("sort") {
            parse_sort_decl(&mut cur, &mut sig)?;
        } else if let Some(class) = peek_const_kind(&cur) {
            cur.next();
            parse_const_decl(&mut cur, &mut sig, class)?;
        } else {
            let raw = parse_raw_law(&mut cur)?;
            expand_law(raw, &sig, &mut laws)?;
        }
    }
    Ok(ActionDescription { signature: sig, laws })
}

fn peek_const_kind(cur: &Cursor) -> Option<ConstClass> {
    let kw = match cur.peek() {
        Tok::Ident(s) => s.as_str(),
        _ => return None,
    };
    match kw {
        "fluent" => Some(ConstClass::Fluent(FluentKind::Regular)),
        "sdFluent" => Some(ConstClass::Fluent(FluentKind::StaticallyDetermined)),
        "abFluent" => Some(ConstClass::Fluent(FluentKind::Abnormal)),
        "action" => Some(ConstClass::Action),
        "pf" => Some(ConstClass::Pf),
        "initpf" => Some(ConstClass::InitPf),
        _ => None,
    }
}

fn parse_sort_decl(cur: &mut Cursor, sig: &mut PbcSignature) -> Result<(), ParseError> {
    let name = cur.expect_ident()?;
    if sig.sort(&name).is_some() {
        return Err(cur.err(format!("duplicate sort `{name}`")));
    }
    cur.expect(&Tok::Eq)?;
    cur.expect(&Tok::LBrace)?;
    let mut elems = vec![cur.expect_ident()?];
    while matches!(cur.peek(), Tok::Comma) {
        cur.next();
        elems.push(cur.expect_ident()?);
    }
    cur.expect(&Tok::RBrace)?;
    sig.sorts.push((name, elems));
    Ok(())
}

fn parse_const_decl(
    cur: &mut Cursor,
    sig: &mut PbcSignature,
    class: ConstClass,
) -> Result<(), ParseError> {
    let name = cur.expect_ident()?;
    let mut params: Vec<Vec<String>> = Vec::new();
    if matches!(cur.peek(), Tok::LParen) {
        cur.next();
        loop {
            let p = cur.expect_ident()?;
            match sig.sort(&p) {
                Some(es) => params.push(es.to_vec()),
                // A non-sort parameter names a single fixed instance.
                None => params.push(vec![p]),
            }
            if matches!(cur.peek(), Tok::Comma) {
                cur.next();
            } else {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    }
    let domain = if matches!(cur.peek(), Tok::Colon) {
        cur.next();
        let s = cur.expect_ident()?;
        match sig.sort(&s) {
            Some(es) => Some(es.to_vec()),
            None => return Err(cur.err(format!("unknown sort `{s}`"))),
        }
    } else {
        None
    };
    let mut combos: Vec<Vec<String>> = vec![Vec::new()];
    for p in &params {
        let mut next = Vec::new();
        for c in &combos {
            for e in p {
                let mut c = c.clone();
                c.push(e.clone());
                next.push(c);
            }
        }
        combos = next;
    }
    for args in combos {
        let g = ground_name(&name, &args);
        if sig.constant(&g).is_some() {
            return Err(cur.err(format!("duplicate constant `{g}`")));
        }
        sig.add(g, domain.clone(), class);
    }
    Ok(())
}

fn parse_raw_law(cur: &mut Cursor) -> Result<RawLaw, ParseError> {
    if cur.eat_ident("caused") {
        // Probability declarations look like `caused NAME = { v: p, ... }.`
        let save = cur.pos();
        if matches!(cur.peek(), Tok::Ident(_)) {
            let (line, col) = cur.loc();
            let name = cur.expect_ident()?;
            let args = parse_args(cur)?;
            if matches!(cur.peek(), Tok::Eq) && matches!(cur.peek_at(1), Tok::LBrace) {
                cur.next();
                cur.next();
                let mut entries = Vec::new();
                loop {
                    let v = cur.expect_ident()?;
                    cur.expect(&Tok::Colon)?;
                    let p = match cur.next() {
                        Tok::Float(x) => x,
                        Tok::Int(n) => n as f64,
                        other => {
                            return Err(cur.err(format!("expected probability, found {other}")))
                        }
                    };
                    entries.push((v, p));
                    if matches!(cur.peek(), Tok::Comma) {
                        cur.next();
                    } else {
                        break;
                    }
                }
                cur.expect(&Tok::RBrace)?;
                cur.expect(&Tok::Dot)?;
                return Ok(RawLaw::Decl { name, args, entries, line, col });
            }
            cur.rewind(save);
        }
        let head = parse_fml(cur)?;
        let cond = if cur.eat_ident("if") { parse_fml(cur)? } else { Formula::Top };
        if cur.eat_ident("after") {
            let after = parse_fml(cur)?;
            cur.expect(&Tok::Dot)?;
            Ok(RawLaw::Dynamic { head, cond, after })
        } else {
            cur.expect(&Tok::Dot)?;
            Ok(RawLaw::Static { head, cond })
        }
    } else if cur.eat_ident("initially") {
        let head = if cur.eat_ident("false") {
            Formula::Bot
        } else {
            let neg = if matches!(cur.peek(), Tok::Tilde) {
                cur.next();
                true
            } else {
                false
            };
            let mut a = parse_atom(cur)?;
            if neg {
                if a.value.is_some() {
                    return Err(a.err("`~` cannot be combined with an explicit value"));
                }
                a.neg = true;
            }
            Formula::Atom(a)
        };
        let cond = if cur.eat_ident("if") { parse_fml(cur)? } else { Formula::Top };
        cur.expect(&Tok::Dot)?;
        Ok(RawLaw::Init { head, cond })
    } else if cur.eat_ident("default") {
        let head = parse_fml(cur)?;
        cur.expect(&Tok::Dot)?;
        Ok(RawLaw::Default { head })
    } else if cur.eat_ident("caused_ab") {
        let head = parse_fml(cur)?;
        let cond = if cur.eat_ident("if") { parse_fml(cur)? } else { Formula::Top };
        if !cur.eat_ident("after") {
            return Err(cur.err("`caused_ab` requires an `after` part"));
        }
        let after = parse_fml(cur)?;
        cur.expect(&Tok::Dot)?;
        Ok(RawLaw::CausedAb { head, cond, after })
    } else if cur.eat_ident("enable_ab") {
        cur.expect(&Tok::Dot)?;
        Ok(RawLaw::EnableAb)
    } else {
        Err(cur.err(format!(
            "expected a declaration or law, found {}",
            cur.peek()
        )))
    }
}

fn parse_args(cur: &mut Cursor) -> Result<Vec<String>, ParseError> {
    let mut args = Vec::new();
    if matches!(cur.peek(), Tok::LParen) {
        cur.next();
        loop {
            args.push(cur.expect_ident()?);
            if matches!(cur.peek(), Tok::Comma) {
                cur.next();
            } else {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    }
    Ok(args)
}

pub(super) fn parse_atom(cur: &mut Cursor) -> Result<RawAtom, ParseError> {
    let (line, col) = cur.loc();
    let name = cur.expect_ident()?;
    let args = parse_args(cur)?;
    let value = if matches!(cur.peek(), Tok::Eq) {
        cur.next();
        let vname = cur.expect_ident()?;
        let vargs = parse_args(cur)?;
        Some(RawVal { name: vname, args: vargs })
    } else {
        None
    };
    Ok(RawAtom { name, args, value, neg: false, line, col })
}

pub(super) fn parse_fml(cur: &mut Cursor) -> Result<Formula<RawAtom>, ParseError> {
    let mut f = parse_and(cur)?;
    while matches!(cur.peek(), Tok::Pipe) {
        cur.next();
        f = Formula::or(f, parse_and(cur)?);
    }
    Ok(f)
}

fn parse_and(cur: &mut Cursor) -> Result<Formula<RawAtom>, ParseError> {
    let mut f = parse_unary(cur)?;
    while matches!(cur.peek(), Tok::Amp) {
        cur.next();
        f = Formula::and(f, parse_unary(cur)?);
    }
    Ok(f)
}

fn parse_unary(cur: &mut Cursor) -> Result<Formula<RawAtom>, ParseError> {
    if matches!(cur.peek(), Tok::Tilde) {
        cur.next();
        let inner = parse_unary(cur)?;
        // `~` on a valueless atom is the Boolean c=f abbreviation;
        // on anything else it is ordinary negation.
        return Ok(match inner {
            Formula::Atom(mut a) if a.value.is_none() && !a.neg => {
                a.neg = true;
                Formula::Atom(a)
            }
            other => Formula::not(other),
        });
    }
    if cur.at_ident("not") {
        cur.next();
        return Ok(Formula::not(parse_unary(cur)?));
    }
    parse_primary(cur)
}

fn parse_primary(cur: &mut Cursor) -> Result<Formula<RawAtom>, ParseError> {
    match cur.peek().clone() {
        Tok::LParen => {
            cur.next();
            let f = parse_fml(cur)?;
            cur.expect(&Tok::RParen)?;
            Ok(f)
        }
        Tok::LBrace => {
            cur.next();
            let f = parse_fml(cur)?;
            cur.expect(&Tok::RBrace)?;
            Ok(Formula::choice(f))
        }
        Tok::Ident(s) if s == "true" => {
            cur.next();
            Ok(Formula::Top)
        }
        Tok::Ident(s) if s == "false" => {
            cur.next();
            Ok(Formula::Bot)
        }
        Tok::Ident(_) => Ok(Formula::Atom(parse_atom(cur)?)),
        other => Err(cur.err(format!("expected a formula, found {other}"))),
    }
}

/// A schematic variable: a sort name used in argument or value position.
type Vars = Vec<(String, Vec<String>)>;

fn collect_vars(f: &Formula<RawAtom>, sig: &PbcSignature, vars: &mut Vars) {
    f.for_each_atom(&mut |a: &RawAtom| collect_atom_vars(a, sig, vars));
}

fn collect_atom_vars(a: &RawAtom, sig: &PbcSignature, vars: &mut Vars) {
    collect_name_vars(&a.name, &a.args, sig, vars);
    if let Some(v) = &a.value {
        if !v.args.is_empty() || sig.constant(&ground_name(&v.name, &v.args)).is_some() {
            // Value position naming another constant: equality between constants.
            collect_name_vars(&v.name, &v.args, sig, vars);
        } else if sig.sort(&v.name).is_some() && !value_in_domain(a, &v.name, sig, vars) {
            add_var(&v.name, sig, vars);
        }
    }
}

fn collect_name_vars(name: &str, args: &[String], sig: &PbcSignature, vars: &mut Vars) {
    let all_literal = ground_name(name, args);
    if sig.constant(&all_literal).is_some() {
        return;
    }
    for arg in args {
        if sig.sort(arg).is_some() && !vars.iter().any(|(v, _)| v == arg) {
            add_var(arg, sig, vars);
        }
    }
}

fn add_var(name: &str, sig: &PbcSignature, vars: &mut Vars) {
    if !vars.iter().any(|(v, _)| v == name) {
        let elems = sig.sort(name).unwrap().to_vec();
        vars.push((name.to_string(), elems));
    }
}

/// Whether `tok` is a literal domain value of the constant named by `a`
/// under some instantiation of the argument variables seen so far.
fn value_in_domain(a: &RawAtom, tok: &str, sig: &PbcSignature, vars: &Vars) -> bool {
    let args: Vec<String> = a
        .args
        .iter()
        .map(|arg| {
            if let Some((_, es)) = vars.iter().find(|(v, _)| v == arg) {
                es[0].clone()
            } else if let Some(es) = sig.sort(arg) {
                es[0].clone()
            } else {
                arg.clone()
            }
        })
        .collect();
    match sig.constant(&ground_name(&a.name, &args)) {
        Some(c) => c.domain.iter().any(|d| d == tok),
        None => false,
    }
}

struct Subst<'a> {
    vars: &'a Vars,
    vals: Vec<&'a str>,
}

impl<'a> Subst<'a> {
    fn get(&self, tok: &str) -> Option<&'a str> {
        self.vars
            .iter()
            .position(|(v, _)| v == tok)
            .map(|i| self.vals[i])
    }
}

fn ground_args(args: &[String], subst: &Subst) -> Vec<String> {
    args.iter()
        .map(|a| subst.get(a).unwrap_or(a).to_string())
        .collect()
}

fn ground_atom(a: &RawAtom, sig: &PbcSignature, subst: &Subst) -> Result<PbcFormula, ParseError> {
    let name = {
        // Prefer an exact literal match so sort names can double as
        // instance names.
        let literal = ground_name(&a.name, &a.args);
        if sig.constant(&literal).is_some() {
            literal
        } else {
            ground_name(&a.name, &ground_args(&a.args, subst))
        }
    };
    let c = sig
        .constant(&name)
        .ok_or_else(|| a.err(format!("unknown constant `{name}`")))?;
    match &a.value {
        None => {
            if !c.is_boolean() {
                return Err(a.err(format!("constant `{name}` requires an explicit value")));
            }
            Ok(Formula::Atom(if a.neg {
                PbcAtom::neg(&name)
            } else {
                PbcAtom::pos(&name)
            }))
        }
        Some(v) => {
            if a.neg {
                return Err(a.err("`~` cannot be combined with an explicit value"));
            }
            let vname = {
                let literal = ground_name(&v.name, &v.args);
                if v.args.is_empty() && c.domain.iter().any(|d| d == &v.name) {
                    // Plain domain value wins over sorts and constants.
                    return Ok(Formula::Atom(PbcAtom::new(&name, &v.name)));
                }
                if v.args.is_empty() {
                    if let Some(val) = subst.get(&v.name) {
                        if !c.domain.iter().any(|d| d == val) {
                            return Err(a.err(format!(
                                "value `{val}` is not in the domain of `{name}`"
                            )));
                        }
                        return Ok(Formula::Atom(PbcAtom::new(&name, val)));
                    }
                }
                if sig.constant(&literal).is_some() {
                    literal
                } else {
                    ground_name(&v.name, &ground_args(&v.args, subst))
                }
            };
            let other = sig
                .constant(&vname)
                .ok_or_else(|| a.err(format!("unknown value `{}` for `{name}`", v.name)))?;
            let common: Vec<&String> = c
                .domain
                .iter()
                .filter(|d| other.domain.contains(d))
                .collect();
            if common.is_empty() {
                return Err(a.err(format!("`{name}` and `{vname}` share no values")));
            }
            Ok(Formula::disj(common.into_iter().map(|u| {
                Formula::and(
                    Formula::Atom(PbcAtom::new(&name, u)),
                    Formula::Atom(PbcAtom::new(&vname, u)),
                )
            })))
        }
    }
}

fn ground_fml(
    f: &Formula<RawAtom>,
    sig: &PbcSignature,
    subst: &Subst,
) -> Result<PbcFormula, ParseError> {
    match f {
        Formula::Top => Ok(Formula::Top),
        Formula::Bot => Ok(Formula::Bot),
        Formula::Atom(a) => ground_atom(a, sig, subst),
        Formula::Not(g) => Ok(Formula::not(ground_fml(g, sig, subst)?)),
        Formula::And(g, h) => Ok(Formula::and(
            ground_fml(g, sig, subst)?,
            ground_fml(h, sig, subst)?,
        )),
        Formula::Or(g, h) => Ok(Formula::or(
            ground_fml(g, sig, subst)?,
            ground_fml(h, sig, subst)?,
        )),
        Formula::Implies(g, h) => Ok(Formula::implies(
            ground_fml(g, sig, subst)?,
            ground_fml(h, sig, subst)?,
        )),
        Formula::Choice(g) => Ok(Formula::choice(ground_fml(g, sig, subst)?)),
    }
}

fn expand_law(
    raw: RawLaw,
    sig: &PbcSignature,
    laws: &mut Vec<CausalLaw>,
) -> Result<(), ParseError> {
    let mut vars: Vars = Vec::new();
    match &raw {
        RawLaw::Static { head, cond } | RawLaw::Init { head, cond } => {
            collect_vars(head, sig, &mut vars);
            collect_vars(cond, sig, &mut vars);
        }
        RawLaw::Dynamic { head, cond, after } | RawLaw::CausedAb { head, cond, after } => {
            collect_vars(head, sig, &mut vars);
            collect_vars(cond, sig, &mut vars);
            collect_vars(after, sig, &mut vars);
        }
        RawLaw::Default { head } => collect_vars(head, sig, &mut vars),
        RawLaw::Decl { name, args, .. } => {
            collect_name_vars(name, args, sig, &mut vars);
        }
        RawLaw::EnableAb => {}
    }
    let mut combo = vec![0usize; vars.len()];
    loop {
        let subst = Subst {
            vars: &vars,
            vals: vars
                .iter()
                .zip(&combo)
                .map(|((_, es), &i)| es[i].as_str())
                .collect(),
        };
        laws.push(instantiate(&raw, sig, &subst)?);
        // Advance the mixed-radix counter over variable assignments.
        let mut k = vars.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            combo[k] += 1;
            if combo[k] < vars[k].1.len() {
                break;
            }
            combo[k] = 0;
        }
    }
}

fn instantiate(raw: &RawLaw, sig: &PbcSignature, subst: &Subst) -> Result<CausalLaw, ParseError> {
    Ok(match raw {
        RawLaw::Static { head, cond } => CausalLaw::Static {
            head: ground_fml(head, sig, subst)?,
            cond: ground_fml(cond, sig, subst)?,
        },
        RawLaw::Dynamic { head, cond, after } => CausalLaw::FluentDynamic {
            head: ground_fml(head, sig, subst)?,
            cond: ground_fml(cond, sig, subst)?,
            after: ground_fml(after, sig, subst)?,
        },
        RawLaw::Init { head, cond } => CausalLaw::InitStatic {
            head: ground_fml(head, sig, subst)?,
            cond: ground_fml(cond, sig, subst)?,
        },
        RawLaw::Default { head } => CausalLaw::Default {
            head: ground_fml(head, sig, subst)?,
        },
        RawLaw::CausedAb { head, cond, after } => CausalLaw::CausedAb {
            head: ground_fml(head, sig, subst)?,
            cond: ground_fml(cond, sig, subst)?,
            after: ground_fml(after, sig, subst)?,
        },
        RawLaw::EnableAb => CausalLaw::EnableAb,
        RawLaw::Decl { name, args, entries, line, col } => {
            let gname = {
                let literal = ground_name(name, args);
                if sig.constant(&literal).is_some() {
                    literal
                } else {
                    ground_name(name, &ground_args(args, subst))
                }
            };
            let c = sig.constant(&gname).ok_or_else(|| ParseError {
                line: *line,
                col: *col,
                message: format!("unknown constant `{gname}`"),
            })?;
            match c.class {
                ConstClass::Pf => CausalLaw::PfDecl {
                    constant: gname,
                    entries: entries.clone(),
                },
                ConstClass::InitPf => CausalLaw::InitPfDecl {
                    constant: gname,
                    entries: entries.clone(),
                },
                _ => {
                    return Err(ParseError {
                        line: *line,
                        col: *col,
                        message: format!(
                            "`{gname}` is not a probability constant and cannot take a distribution"
                        ),
                    })
                }
            }
        }
    })
}
