//! `pbcplus` — command-line front end: parse action descriptions,
//! dump their LP^MLN translations, build transition systems, check the
//! structural assumptions, and answer probabilistic queries.

use std::fs;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use serde::Serialize;

use pbcplus_core::formula::Formula;
use pbcplus_core::lpmln::{AtomId, EnumOptions, LpmlnError, Signature};
use pbcplus_core::mvpp::MvppProgram;
use pbcplus_core::parser::{parse_description, parse_query, print_description, print_query};
use pbcplus_core::pbc::{ActionDescription, Severity};
use pbcplus_core::query::{answer, PlanMode, QueryAnswer, QueryError, QueryOptions};
use pbcplus_core::transition::{
    export_dot, TransitionAnalysis, TransitionError, TransitionOptions,
};
use pbcplus_core::translator::{translate, Provenance, TranslateError};

#[derive(Parser)]
#[command(name = "pbcplus", version, about = "pBC+ compiler and exact inference")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, default_value = "text", value_parser = ["text", "json"])]
    format: String,
    /// Worker threads (results are identical at any value).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Cap on enumerated interpretations (env: PBC_MAX_INTERP).
    #[arg(long, global = true)]
    max_interp: Option<u64>,
    /// Cap on transition-system states (env: PBC_MAX_STATES).
    #[arg(long, global = true)]
    max_states: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a description and dump the ground AST plus diagnostics.
    Parse {
        #[arg(short = 'i', long = "input")]
        input: String,
    },
    /// Dump the LP^MLN translation over steps 0..m.
    Translate {
        #[arg(short = 'i', long = "input")]
        input: String,
        #[arg(short = 'm', default_value_t = 1)]
        m: usize,
        /// Annotate each rule with the law or choice that produced it.
        #[arg(long, action = ArgAction::SetTrue)]
        explain: bool,
    },
    /// Compute the probabilistic transition system.
    Ts {
        #[arg(short = 'i', long = "input")]
        input: String,
        /// Also write the system as Graphviz DOT to this file.
        #[arg(long)]
        dot: Option<String>,
    },
    /// Check the structural assumptions and stationarity up to m steps.
    Check {
        #[arg(short = 'i', long = "input")]
        input: String,
        #[arg(short = 'm', default_value_t = 3)]
        m: usize,
        /// Stationarity tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Answer a query file against a description.
    Query {
        #[arg(short = 'i', long = "input")]
        input: String,
        #[arg(short = 'q', long = "query")]
        query: String,
        /// Plan by reading actions off the most probable model.
        #[arg(long, action = ArgAction::SetTrue, conflicts_with = "argmax")]
        map: bool,
        /// Plan by maximizing the goal's conditional probability (default).
        #[arg(long, action = ArgAction::SetTrue)]
        argmax: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn user(message: impl Into<String>) -> CliError {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<TranslateError> for CliError {
    fn from(e: TranslateError) -> CliError {
        let code = match &e {
            TranslateError::Lpmln(LpmlnError::Capacity { .. }) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<TransitionError> for CliError {
    fn from(e: TransitionError) -> CliError {
        let code = match &e {
            TransitionError::StateCapacity { .. }
            | TransitionError::ComboCapacity { .. }
            | TransitionError::Lpmln(LpmlnError::Capacity { .. }) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> CliError {
        let code = match &e {
            QueryError::PlanSpace { .. }
            | QueryError::Lpmln(LpmlnError::Capacity { .. })
            | QueryError::Translate(TranslateError::Lpmln(LpmlnError::Capacity { .. }))
            | QueryError::Transition(TransitionError::StateCapacity { .. })
            | QueryError::Transition(TransitionError::ComboCapacity { .. })
            | QueryError::Transition(TransitionError::Lpmln(LpmlnError::Capacity { .. })) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Parse { input } => cmd_parse(cli, input),
        Cmd::Translate { input, m, explain } => cmd_translate(cli, input, *m, *explain),
        Cmd::Ts { input, dot } => cmd_ts(cli, input, dot.as_deref()),
        Cmd::Check {
            input,
            m,
            tolerance,
        } => cmd_check(cli, input, *m, *tolerance),
        Cmd::Query {
            input,
            query,
            map,
            argmax: _,
        } => cmd_query(cli, input, query, *map),
    }
}

fn read_file(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::user(format!("{path}: {e}")))
}

fn load_description(path: &str) -> Result<ActionDescription, CliError> {
    let src = read_file(path)?;
    parse_description(&src).map_err(|e| CliError::user(format!("{path}:{e}")))
}

fn enum_opts(cli: &Cli) -> Result<EnumOptions, CliError> {
    let mut o = EnumOptions::default();
    if let Some(v) = env_cap::<u64>("PBC_MAX_INTERP")? {
        o.max_candidates = v;
    }
    if let Some(v) = cli.max_interp {
        o.max_candidates = v;
    }
    if o.max_candidates == 0 {
        return Err(CliError::user("interpretation cap must be at least 1"));
    }
    Ok(o)
}

fn transition_opts(cli: &Cli) -> Result<TransitionOptions, CliError> {
    let mut o = TransitionOptions {
        enum_opts: enum_opts(cli)?,
        ..TransitionOptions::default()
    };
    if let Some(v) = env_cap::<usize>("PBC_MAX_STATES")? {
        o.max_states = v;
    }
    if let Some(v) = cli.max_states {
        o.max_states = v;
    }
    if o.max_states == 0 {
        return Err(CliError::user("state cap must be at least 1"));
    }
    Ok(o)
}

fn env_cap<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match std::env::var(name) {
        Ok(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|_| CliError::user(format!("{name}: `{s}` is not a valid cap"))),
        Err(_) => Ok(None),
    }
}

fn emit_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::user(format!("serialization failed: {e}")))?;
    println!("{s}");
    Ok(())
}

#[derive(Serialize)]
struct ConstantJson {
    name: String,
    class: String,
    domain: Vec<String>,
}

#[derive(Serialize)]
struct ParseJson {
    sorts: Vec<(String, Vec<String>)>,
    constants: Vec<ConstantJson>,
    laws: Vec<String>,
    diagnostics: Vec<String>,
}

fn cmd_parse(cli: &Cli, input: &str) -> Result<(), CliError> {
    let d = load_description(input)?;
    let diagnostics = d.validate();
    let errors: Vec<_> = diagnostics
        .iter()
        .filter(|x| x.severity == Severity::Error)
        .collect();
    if cli.format == "json" {
        let text = print_description(&d);
        let laws = text
            .lines()
            .filter(|l| l.ends_with('.'))
            .map(str::to_string)
            .collect();
        emit_json(&ParseJson {
            sorts: d.signature.sorts.clone(),
            constants: d
                .signature
                .constants
                .iter()
                .map(|c| ConstantJson {
                    name: c.name.clone(),
                    class: format!("{:?}", c.class),
                    domain: c.domain.clone(),
                })
                .collect(),
            laws,
            diagnostics: diagnostics.iter().map(|x| x.to_string()).collect(),
        })?;
    } else {
        print!("{}", print_description(&d));
        for x in &diagnostics {
            eprintln!("{x}");
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::user(format!(
            "{input}: {} validation error(s)",
            errors.len()
        )))
    }
}

fn fmt_atomid(sig: &Signature, a: AtomId) -> String {
    sig.atom_name(a)
}

fn fmt_lp_formula(f: &Formula<AtomId>, sig: &Signature, prec: u8) -> String {
    let wrap = |s: String, mine: u8| {
        if mine < prec {
            format!("({s})")
        } else {
            s
        }
    };
    match f {
        Formula::Top => "true".into(),
        Formula::Bot => "false".into(),
        Formula::Atom(a) => fmt_atomid(sig, *a),
        Formula::Not(x) => format!("not {}", fmt_lp_formula(x, sig, 3)),
        Formula::And(x, y) => wrap(
            format!(
                "{} & {}",
                fmt_lp_formula(x, sig, 1),
                fmt_lp_formula(y, sig, 1)
            ),
            1,
        ),
        Formula::Or(x, y) => wrap(
            format!(
                "{} | {}",
                fmt_lp_formula(x, sig, 0),
                fmt_lp_formula(y, sig, 0)
            ),
            0,
        ),
        Formula::Implies(x, y) => wrap(
            format!(
                "{} -> {}",
                fmt_lp_formula(x, sig, 1),
                fmt_lp_formula(y, sig, 0)
            ),
            0,
        ),
        Formula::Choice(x) => format!("{{{}}}", fmt_lp_formula(x, sig, 0)),
    }
}

fn provenance_note(p: &Provenance) -> String {
    match p {
        Provenance::Law { law, step } => format!("law {law} at step {step}"),
        Provenance::FluentChoice { constant, value } => {
            format!("initial fluent choice {constant}={value}")
        }
        Provenance::ActionChoice {
            constant,
            step,
            value,
        } => format!("action choice {constant}={value} at step {step}"),
    }
}

#[derive(Serialize)]
struct RuleJson {
    head: String,
    body: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
}

#[derive(Serialize)]
struct DeclJson {
    constant: String,
    entries: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct TranslateJson {
    m: usize,
    constants: Vec<ConstantJson>,
    declarations: Vec<DeclJson>,
    rules: Vec<RuleJson>,
}

fn dump_program(
    program: &MvppProgram,
    provenance: &[Provenance],
    explain: bool,
) -> (Vec<DeclJson>, Vec<RuleJson>) {
    let sig = program.signature();
    let decls = program
        .declarations()
        .iter()
        .map(|dcl| DeclJson {
            constant: sig.constant(dcl.constant).name.clone(),
            entries: dcl.entries.clone(),
        })
        .collect();
    let rules = program
        .rules()
        .iter()
        .enumerate()
        .map(|(i, r)| RuleJson {
            head: fmt_lp_formula(&r.head, sig, 0),
            body: fmt_lp_formula(&r.body, sig, 0),
            provenance: if explain {
                provenance.get(i).map(provenance_note)
            } else {
                None
            },
        })
        .collect();
    (decls, rules)
}

fn cmd_translate(cli: &Cli, input: &str, m: usize, explain: bool) -> Result<(), CliError> {
    let d = load_description(input)?;
    let out = translate(&d, m)?;
    let (decls, rules) = dump_program(&out.program, &out.provenance, explain);
    if cli.format == "json" {
        let sig = out.program.signature();
        emit_json(&TranslateJson {
            m,
            constants: sig
                .constants()
                .map(|(_, c)| ConstantJson {
                    name: c.name.clone(),
                    class: "timed".into(),
                    domain: c.domain.clone(),
                })
                .collect(),
            declarations: decls,
            rules,
        })?;
    } else {
        for dcl in &decls {
            let body: Vec<String> = dcl
                .entries
                .iter()
                .map(|(v, p)| format!("{v}: {p:.9}"))
                .collect();
            println!("@{} = {{{}}}", dcl.constant, body.join(", "));
        }
        for r in &rules {
            let mut line = if r.body == "true" {
                format!("{}.", r.head)
            } else {
                format!("{} <- {}.", r.head, r.body)
            };
            if let Some(p) = &r.provenance {
                line = format!("{line}  % {p}");
            }
            println!("{line}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EdgeJson {
    from: usize,
    event: String,
    to: usize,
    p: f64,
}

#[derive(Serialize)]
struct TsJson {
    states: Vec<String>,
    edges: Vec<EdgeJson>,
    initial: Vec<(usize, f64)>,
}

fn cmd_ts(cli: &Cli, input: &str, dot: Option<&str>) -> Result<(), CliError> {
    let d = load_description(input)?;
    let ta = TransitionAnalysis::new(&d, transition_opts(cli)?)?;
    let ts = ta.transition_system();
    let states: Vec<String> = ts.states.iter().map(|s| s.render(&ta.fluents)).collect();
    let edges: Vec<EdgeJson> = ts
        .edges
        .iter()
        .map(|e| EdgeJson {
            from: e.from,
            event: e.event.render_event(&ta.actions),
            to: e.to,
            p: e.p,
        })
        .collect();
    let initial = ta.initial_distribution();
    if let Some(path) = dot {
        let text = export_dot(&ts, &ta.fluents, &ta.actions);
        fs::write(path, text).map_err(|e| CliError::user(format!("{path}: {e}")))?;
    }
    if cli.format == "json" {
        emit_json(&TsJson {
            states,
            edges,
            initial,
        })?;
    } else {
        println!("{} states, {} transitions", states.len(), edges.len());
        for (i, s) in states.iter().enumerate() {
            println!("  s{i}: {s}");
        }
        for e in &edges {
            println!(
                "  s{} --[{}]--> s{}  p={:.9}",
                e.from, e.event, e.to, e.p
            );
        }
        println!("initial distribution:");
        for (s, p) in &initial {
            println!("  s{s}: p={p:.9}");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckJson {
    no_concurrency: Option<String>,
    pf_determinism: Option<String>,
    init_determinism: Option<String>,
    stationarity_max_deviation: f64,
    stationarity_compared: usize,
    stationary: bool,
}

fn cmd_check(cli: &Cli, input: &str, m: usize, tolerance: f64) -> Result<(), CliError> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(CliError::user("--tolerance must be positive"));
    }
    let d = load_description(input)?;
    let ta = TransitionAnalysis::new(&d, transition_opts(cli)?)?;
    let report = ta.check_assumptions();
    let st = ta.verify_stationarity(m)?;
    let stationary = st.max_deviation <= tolerance;
    if cli.format == "json" {
        emit_json(&CheckJson {
            no_concurrency: report.no_concurrency.clone(),
            pf_determinism: report.pf_determinism.clone(),
            init_determinism: report.init_determinism.clone(),
            stationarity_max_deviation: st.max_deviation,
            stationarity_compared: st.compared,
            stationary,
        })?;
    } else {
        let line = |name: &str, witness: &Option<String>| match witness {
            None => println!("{name}: holds"),
            Some(w) => println!("{name}: fails ({w})"),
        };
        line("no concurrency", &report.no_concurrency);
        line("pf-determinism", &report.pf_determinism);
        line("init-determinism", &report.init_determinism);
        println!(
            "stationarity over {} steps: {} (max deviation {:.3e}, {} transitions compared)",
            m,
            if stationary { "holds" } else { "fails" },
            st.max_deviation,
            st.compared
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct QueryJson {
    query: String,
    engine: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    masses: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    models: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<Vec<Vec<String>>>,
}

fn cmd_query(cli: &Cli, input: &str, query: &str, map: bool) -> Result<(), CliError> {
    let d = load_description(input)?;
    let qsrc = read_file(query)?;
    let spec = parse_query(&qsrc, &d).map_err(|e| CliError::user(format!("{query}:{e}")))?;
    let opts = QueryOptions {
        enum_opts: enum_opts(cli)?,
        transition: transition_opts(cli)?,
        plan_mode: if map { PlanMode::Map } else { PlanMode::Argmax },
        ..QueryOptions::default()
    };
    let ans = answer(&d, &spec, &opts)?;
    let printed = print_query(&spec, &d.signature);
    let (engine, probability, masses, models, plan) = match &ans {
        QueryAnswer::Probability(p) => (
            "exact-enumeration".to_string(),
            Some(p.p),
            Some((p.numerator, p.denominator)),
            None,
            None,
        ),
        QueryAnswer::Map { atoms, probability } => (
            "map-enumeration".to_string(),
            Some(*probability),
            None,
            Some(atoms.iter().map(|a| a.to_string()).collect()),
            None,
        ),
        QueryAnswer::Plan { steps, probability } => (
            format!("plan-{}", if map { "map" } else { "argmax" }),
            Some(*probability),
            None,
            None,
            Some(steps.clone()),
        ),
        QueryAnswer::Diagnosis {
            abnormalities,
            probability,
        } => (
            "diagnosis-map".to_string(),
            Some(*probability),
            None,
            Some(abnormalities.iter().map(|a| a.to_string()).collect()),
            None,
        ),
    };
    if cli.format == "json" {
        emit_json(&QueryJson {
            query: printed,
            engine,
            probability,
            masses,
            models,
            plan,
        })?;
    } else {
        match &ans {
            QueryAnswer::Probability(p) => println!("probability: {:.9}", p.p),
            QueryAnswer::Map { atoms, probability } => {
                let rendered: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
                println!("most probable model: {}", rendered.join(" "));
                println!("probability: {probability:.9}");
            }
            QueryAnswer::Plan { steps, probability } => {
                for (i, acts) in steps.iter().enumerate() {
                    let shown = if acts.is_empty() {
                        "(idle)".to_string()
                    } else {
                        acts.join(", ")
                    };
                    println!("step {i}: {shown}");
                }
                println!(
                    "{} probability: {probability:.9}",
                    if map { "plan (map)" } else { "goal" }
                );
            }
            QueryAnswer::Diagnosis {
                abnormalities,
                probability,
            } => {
                if abnormalities.is_empty() {
                    println!("diagnosis: no abnormality required");
                } else {
                    let rendered: Vec<String> =
                        abnormalities.iter().map(|a| a.to_string()).collect();
                    println!("diagnosis: {}", rendered.join(" "));
                }
                println!("probability: {probability:.9}");
            }
        }
    }
    Ok(())
}
