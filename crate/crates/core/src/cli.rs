//! Command dispatch, result documents and their two serializations.
//!
//! A result document is a problem-style file: the declarations in force
//! followed by one `result` block per command. The text form is read back by
//! [`parse_document`]; the machine form is JSON read back by
//! [`document_from_json`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::{json, Value};

use crate::enau::{run_enau, AuEquation, Genvar, Limits, Rule, Step};
use crate::eqvm::{eqvm, eqvm_all, AtomMapping};
use crate::minimize::{minimize_set, post_process, tic_subset, unique_lgg_a, unique_lgg_ac, unique_lgg_c, PostConfig};
use crate::semantics::{atom_pool, holds_eq, holds_freshness, sem_ground_terms, sem_member};
use crate::syntax::{parse_problem_with, Command, Decls, ParseError, Parser, ProblemFile, Tok};
use crate::term::{
    is_reserved, AtomVar, Constraint, Context, EqrConstraint, FreshnessConstraint, FunSymbol, Ground, Perm, Subst,
    Susp, Term, TermInContext, TermVar, Theory,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Clone, Debug)]
pub struct Flags {
    pub minimize: bool,
    pub post_process: bool,
    pub max_states: usize,
    /// Atoms used by the semantic cross-check of generalizations; 0 disables it.
    pub pool_size: usize,
    pub oracle_depth: usize,
    pub jobs: usize,
    pub all_mappings: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            minimize: false,
            post_process: false,
            max_states: Limits::default().max_states,
            pool_size: 0,
            oracle_depth: 2,
            jobs: 1,
            all_mappings: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Generalize,
    Check,
    CheckFresh,
    Equiv,
    Subsumes,
    Unique,
}

impl CommandKind {
    pub const ALL: [CommandKind; 6] = [
        CommandKind::Generalize,
        CommandKind::Check,
        CommandKind::CheckFresh,
        CommandKind::Equiv,
        CommandKind::Subsumes,
        CommandKind::Unique,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            CommandKind::Generalize => "generalize",
            CommandKind::Check => "check",
            CommandKind::CheckFresh => "checkfresh",
            CommandKind::Equiv => "equiv",
            CommandKind::Subsumes => "subsumes",
            CommandKind::Unique => "unique",
        }
    }

    fn of(cmd: &Command) -> Self {
        match cmd {
            Command::Generalize { .. } => CommandKind::Generalize,
            Command::Check { .. } => CommandKind::Check,
            Command::CheckFresh { .. } => CommandKind::CheckFresh,
            Command::Equiv { .. } => CommandKind::Equiv,
            Command::Subsumes { .. } => CommandKind::Subsumes,
            Command::Unique { .. } => CommandKind::Unique,
        }
    }
}

/// One generalization with its bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenItem {
    pub tic: TermInContext,
    pub store: Vec<AuEquation>,
    pub subst: Subst,
    pub trace: Vec<Step>,
    /// Outcome of the semantic cross-check, when it ran.
    pub checked: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Generalizations { items: Vec<GenItem>, minimized: bool, post_processed: bool },
    Judgement { holds: bool },
    Mappings { items: Vec<AtomMapping> },
    Unique { lgg: Option<Term>, note: Option<String> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandResult {
    pub kind: CommandKind,
    pub outcome: Outcome,
    pub limits_hit: bool,
}

impl CommandResult {
    pub fn exit_code(&self) -> i32 {
        if self.limits_hit {
            return EXIT_LIMIT;
        }
        let ok = match &self.outcome {
            Outcome::Generalizations { items, .. } => !items.is_empty() && items.iter().all(|i| i.checked != Some(false)),
            Outcome::Judgement { holds } => *holds,
            Outcome::Mappings { items } => !items.is_empty(),
            Outcome::Unique { lgg, .. } => lgg.is_some(),
        };
        if ok {
            EXIT_OK
        } else {
            EXIT_FALSE
        }
    }
}

#[derive(Clone, Debug)]
pub struct ResultDocument {
    pub decls: Decls,
    pub results: Vec<CommandResult>,
}

impl ResultDocument {
    /// The worst exit code over all results.
    pub fn exit_code(&self) -> i32 {
        self.results.iter().map(CommandResult::exit_code).max().unwrap_or(EXIT_OK)
    }
}

// ===== dispatch =====

pub fn run_command(cmd: &Command, flags: &Flags) -> CommandResult {
    let kind = CommandKind::of(cmd);
    let mut limits_hit = false;
    let outcome = match cmd {
        Command::Generalize { context, left, right } => {
            let limits = Limits { max_states: flags.max_states, jobs: flags.jobs.max(1) };
            let out = run_enau(context, left, right, limits);
            limits_hit |= out.incomplete;
            let lhs = TermInContext::new(context.clone(), left.flatten());
            let rhs = TermInContext::new(context.clone(), right.flatten());
            let mut items: Vec<GenItem> = out
                .results
                .into_iter()
                .map(|r| GenItem { tic: r.tic, store: r.store, subst: r.sigma, trace: r.trace, checked: None })
                .collect();
            if flags.post_process {
                let cfg = PostConfig::default();
                for item in &mut items {
                    let post = post_process(&item.tic, &lhs, &rhs, &cfg);
                    limits_hit |= post.budget_exceeded;
                    item.tic = post.tic;
                }
            }
            if flags.minimize {
                let tics: Vec<TermInContext> = items.iter().map(|i| i.tic.clone()).collect();
                let keep = minimize_set(&tics);
                items = keep.into_iter().map(|i| items[i].clone()).collect();
            }
            if flags.pool_size > 0 {
                let pool = atom_pool(flags.pool_size);
                let mut inputs = sem_ground_terms(&lhs, &pool, flags.oracle_depth);
                inputs.extend(sem_ground_terms(&rhs, &pool, flags.oracle_depth));
                for item in &mut items {
                    item.checked = Some(inputs.iter().all(|g| sem_member(&item.tic, g)));
                }
            }
            Outcome::Generalizations { items, minimized: flags.minimize, post_processed: flags.post_process }
        }
        Command::Check { context, left, right } => Outcome::Judgement { holds: holds_eq(context, left, right) },
        Command::CheckFresh { context, constraint } => Outcome::Judgement { holds: holds_freshness(context, constraint) },
        Command::Equiv { context, equations } => {
            let items = if flags.all_mappings {
                eqvm_all(equations, context)
            } else {
                eqvm(equations, context).into_iter().collect()
            };
            Outcome::Mappings { items }
        }
        Command::Subsumes { candidate, reference } => Outcome::Judgement { holds: tic_subset(candidate, reference) },
        Command::Unique { left, right } => unique(left, right),
    };
    CommandResult { kind, outcome, limits_hit }
}

fn unique(left: &Ground, right: &Ground) -> Outcome {
    let theory = match left {
        Ground::App(f, _) => f.theory,
        _ => Theory::Free,
    };
    let res = match theory {
        Theory::AC => unique_lgg_ac(left, right),
        Theory::C => unique_lgg_c(left, right),
        Theory::A => unique_lgg_a(left, right),
        Theory::Free => {
            return Outcome::Unique { lgg: None, note: Some("the head symbol carries no equational theory".into()) }
        }
    };
    match res {
        Ok(Some(t)) => Outcome::Unique { lgg: Some(t), note: None },
        Ok(None) => Outcome::Unique { lgg: None, note: Some("the criterion does not apply".into()) },
        Err(e) => Outcome::Unique { lgg: None, note: Some(e.to_string()) },
    }
}

pub fn run_problem(pf: &ProblemFile, flags: &Flags) -> ResultDocument {
    let results = pf.commands.iter().map(|c| run_command(c, flags)).collect();
    let mut doc = ResultDocument { decls: pf.decls.clone(), results };
    doc.decls.overrides.clear();
    declare_payload_vars(&mut doc);
    doc
}

/// Declares user-style names met in results so that the text form parses.
fn declare_payload_vars(doc: &mut ResultDocument) {
    let mut atoms = Vec::new();
    let mut terms = Vec::new();
    fn visit(atoms: &mut Vec<AtomVar>, terms: &mut Vec<TermVar>, t: &Term) {
        atoms.extend(t.atom_vars());
        terms.extend(t.term_vars());
    }
    for r in &doc.results {
        match &r.outcome {
            Outcome::Generalizations { items, .. } => {
                for i in items {
                    visit(&mut atoms, &mut terms, &i.tic.term);
                    atoms.extend(i.tic.context.atom_vars());
                    terms.extend(i.tic.context.term_vars());
                    for e in &i.store {
                        visit(&mut atoms, &mut terms, &e.var.to_term());
                        visit(&mut atoms, &mut terms, &e.left);
                        visit(&mut atoms, &mut terms, &e.right);
                    }
                    for (x, t) in &i.subst.terms {
                        visit(&mut atoms, &mut terms, &Term::Var(Perm::id(), x.clone()));
                        visit(&mut atoms, &mut terms, t);
                    }
                    for (a, w) in &i.subst.atoms {
                        atoms.push(a.clone());
                        atoms.extend(w.atom_vars());
                    }
                }
            }
            Outcome::Mappings { items } => {
                for m in items {
                    for (a, w) in &m.entries {
                        atoms.push(a.clone());
                        atoms.extend(w.atom_vars());
                    }
                    atoms.extend(m.context.atom_vars());
                }
            }
            Outcome::Unique { lgg: Some(t), .. } => visit(&mut atoms, &mut terms, t),
            _ => {}
        }
    }
    let user = |n: &str| !is_reserved(n) && !n.starts_with(|c: char| c.is_lowercase());
    for a in atoms {
        if user(a.name()) && !doc.decls.term_vars.contains(a.name()) {
            doc.decls.atom_vars.insert(a.name().to_string());
        }
    }
    for x in terms {
        if user(x.name()) && !doc.decls.atom_vars.contains(x.name()) {
            doc.decls.term_vars.insert(x.name().to_string());
        }
    }
}

// ===== text rendering =====

pub fn render(doc: &ResultDocument, format: Format) -> String {
    match format {
        Format::Text => render_text(doc),
        Format::Machine => {
            let mut s = serde_json::to_string_pretty(&document_to_json(doc)).expect("json");
            s.push('\n');
            s
        }
    }
}

fn render_equation(e: &AuEquation) -> String {
    format!("{}: {} =^= {}", e.var, e.left, e.right)
}

fn render_trace(trace: &[Step]) -> String {
    let steps: Vec<String> =
        trace.iter().map(|s| format!("{}({}, {})", s.rule, s.measure.0, s.measure.1)).collect();
    format!("{{{}}}", steps.join(", "))
}

fn render_mapping(m: &AtomMapping) -> String {
    let entries: Vec<String> = m.entries.iter().map(|(a, w)| format!("{a} -> {w}")).collect();
    format!("mapping {{{}}} under {};\n", entries.join(", "), m.context)
}

pub fn render_text(doc: &ResultDocument) -> String {
    let mut out = doc.decls.render();
    for r in &doc.results {
        out.push_str(&format!("result {}", r.kind.keyword()));
        if let Outcome::Generalizations { minimized, post_processed, .. } = &r.outcome {
            if *minimized {
                out.push_str(" minimized");
            }
            if *post_processed {
                out.push_str(" post-processed");
            }
        }
        if r.limits_hit {
            out.push_str(" limits-hit");
        }
        out.push_str(";\n");
        match &r.outcome {
            Outcome::Generalizations { items, .. } => {
                for i in items {
                    let store: Vec<String> = i.store.iter().map(render_equation).collect();
                    out.push_str(&format!("gen {}\n  store {{{}}}\n", i.tic, store.join(", ")));
                    out.push_str(&format!("  subst {}\n  trace {}", i.subst, render_trace(&i.trace)));
                    if let Some(c) = i.checked {
                        out.push_str(&format!("\n  checked {c}"));
                    }
                    out.push_str(";\n");
                }
                if items.is_empty() {
                    out.push_str(&no_results(r.limits_hit));
                }
            }
            Outcome::Judgement { holds } => out.push_str(&format!("holds {holds};\n")),
            Outcome::Mappings { items } => {
                for m in items {
                    out.push_str(&render_mapping(m));
                }
                if items.is_empty() {
                    out.push_str(&no_results(r.limits_hit));
                }
            }
            Outcome::Unique { lgg, note } => {
                if let Some(note) = note {
                    out.push_str(&format!("% {note}\n"));
                }
                match lgg {
                    Some(t) => out.push_str(&format!("lgg {t};\n")),
                    None => out.push_str(&no_results(r.limits_hit)),
                }
            }
        }
    }
    out
}

fn no_results(limits_hit: bool) -> String {
    if limits_hit {
        "no-results limits-hit;\n".into()
    } else {
        "no-results;\n".into()
    }
}

// ===== text parsing =====

fn keyword(p: &Parser, kw: &str) -> bool {
    matches!(p.peek_token(), Tok::Ident(s) if s == kw)
}

fn parse_rule(name: &str) -> Option<Rule> {
    [
        Rule::Dec,
        Rule::Abs,
        Rule::SusAA,
        Rule::SusYY,
        Rule::SolAB,
        Rule::Sol,
        Rule::Mer,
        Rule::DecA,
        Rule::DecC,
        Rule::DecAC,
    ]
    .into_iter()
    .find(|r| r.name() == name)
}

fn parse_store(p: &mut Parser) -> Result<Vec<AuEquation>, ParseError> {
    p.expect("{")?;
    let mut out = Vec::new();
    if !p.is_sym("}") {
        loop {
            let name = p.ident()?;
            p.expect(":")?;
            let left = p.term()?;
            p.expect("=^=")?;
            let right = p.term()?;
            let var = if p.is_term_var(&name) {
                Genvar::Term(TermVar::new(&name))
            } else {
                Genvar::Atom(AtomVar::new(&name))
            };
            out.push(AuEquation { var, left, right });
            if !p.eat(",") {
                break;
            }
        }
    }
    p.expect("}")?;
    Ok(out)
}

fn parse_trace(p: &mut Parser) -> Result<Vec<Step>, ParseError> {
    p.expect("{")?;
    let mut out = Vec::new();
    if !p.is_sym("}") {
        loop {
            let name = p.ident()?;
            let Some(rule) = parse_rule(&name) else {
                return p.error_here(format!("unknown rule `{name}`"));
            };
            p.expect("(")?;
            let a = p.number()?;
            p.expect(",")?;
            let b = p.number()?;
            p.expect(")")?;
            out.push(Step { rule, measure: (a, b) });
            if !p.eat(",") {
                break;
            }
        }
    }
    p.expect("}")?;
    Ok(out)
}

fn parse_mapping(p: &mut Parser) -> Result<AtomMapping, ParseError> {
    p.expect("{")?;
    let mut entries = BTreeMap::new();
    if !p.is_sym("}") {
        loop {
            let a = AtomVar::new(&p.ident()?);
            p.expect("->")?;
            entries.insert(a, p.susp()?);
            if !p.eat(",") {
                break;
            }
        }
    }
    p.expect("}")?;
    if !keyword(p, "under") {
        return p.error_here("expected `under`");
    }
    p.ident()?;
    let context = p.context(&[";"])?;
    Ok(AtomMapping { entries, context })
}

/// Reads a text result document.
pub fn parse_document(text: &str) -> Result<ResultDocument, ParseError> {
    let decls = Decls { allow_reserved: true, ..Decls::default() };
    // `-` is not a token; the hyphenated markers are read as single words
    let text = text.replace("no-results", "no_results").replace("post-processed", "post_processed").replace("limits-hit", "limits_hit");
    let mut p = Parser::new(&text, decls)?;
    let mut results: Vec<CommandResult> = Vec::new();
    while !p.at_eof() {
        p.begin_command();
        let kw = p.ident()?;
        match kw.as_str() {
            "sig" | "atomvars" | "termvars" => {
                p.declaration(&kw)?;
                continue;
            }
            "result" => {
                let name = p.ident()?;
                let Some(kind) = CommandKind::ALL.into_iter().find(|k| k.keyword() == name) else {
                    return p.error_here(format!("unknown command `{name}`"));
                };
                let (mut minimized, mut post_processed, mut limits_hit) = (false, false, false);
                while !p.is_sym(";") {
                    match p.ident()?.as_str() {
                        "minimized" => minimized = true,
                        "post_processed" => post_processed = true,
                        "limits_hit" => limits_hit = true,
                        other => return p.error_here(format!("unknown flag `{other}`")),
                    }
                }
                let outcome = match kind {
                    CommandKind::Generalize => Outcome::Generalizations { items: Vec::new(), minimized, post_processed },
                    CommandKind::Equiv => Outcome::Mappings { items: Vec::new() },
                    CommandKind::Unique => Outcome::Unique { lgg: None, note: None },
                    _ => Outcome::Judgement { holds: false },
                };
                results.push(CommandResult { kind, outcome, limits_hit });
            }
            other => {
                let Some(last) = results.last_mut() else {
                    return p.error_here(format!("`{other}` outside a result block"));
                };
                match (other, &mut last.outcome) {
                    ("gen", Outcome::Generalizations { items, .. }) => {
                        let tic = p.tic()?;
                        expect_word(&mut p, "store")?;
                        let store = parse_store(&mut p)?;
                        expect_word(&mut p, "subst")?;
                        let subst = p.subst()?;
                        expect_word(&mut p, "trace")?;
                        let trace = parse_trace(&mut p)?;
                        let checked = if keyword(&p, "checked") {
                            p.ident()?;
                            Some(parse_bool(&mut p)?)
                        } else {
                            None
                        };
                        items.push(GenItem { tic, store, subst, trace, checked });
                    }
                    ("holds", Outcome::Judgement { holds }) => *holds = parse_bool(&mut p)?,
                    ("mapping", Outcome::Mappings { items }) => items.push(parse_mapping(&mut p)?),
                    ("lgg", Outcome::Unique { lgg, .. }) => *lgg = Some(p.term()?),
                    ("no_results", _) => {
                        if keyword(&p, "limits_hit") {
                            p.ident()?;
                        }
                    }
                    _ => return p.error_here(format!("unexpected `{other}`")),
                }
            }
        }
        p.expect(";")?;
    }
    let mut decls = p.decls.clone();
    decls.allow_reserved = false;
    Ok(ResultDocument { decls, results })
}

fn expect_word(p: &mut Parser, w: &str) -> Result<(), ParseError> {
    if keyword(p, w) {
        p.ident()?;
        Ok(())
    } else {
        p.error_here(format!("expected `{w}`"))
    }
}

fn parse_bool(p: &mut Parser) -> Result<bool, ParseError> {
    match p.ident()?.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => p.error_here(format!("expected `true` or `false`, found `{other}`")),
    }
}

// ===== machine format =====
//
// Every term-level node is an object with a `kind` field:
//   atom   {kind, perm, var}            perm: [[susp, susp], ...] outermost first
//   var    {kind, perm, name}
//   app    {kind, symbol: {name, theory, arity}, args}
//   abs    {kind, binder: susp, body}
//   fresh  {kind, atom, term}
//   eqr    {kind, members: [susp], blocks: [n], body: null | [[i, term]]}
// A suspension is {perm, var}.

fn perm_json(p: &Perm) -> Value {
    Value::Array(p.swaps().iter().map(|(a, b)| json!([susp_json(a), susp_json(b)])).collect())
}

fn susp_json(w: &Susp) -> Value {
    json!({"perm": perm_json(&w.perm), "var": w.var.name()})
}

fn symbol_json(f: &FunSymbol) -> Value {
    json!({"name": f.name.as_ref(), "theory": f.theory.tag(), "arity": f.arity})
}

pub fn term_to_json(t: &Term) -> Value {
    match t {
        Term::Atom(w) => json!({"kind": "atom", "perm": perm_json(&w.perm), "var": w.var.name()}),
        Term::Var(p, x) => json!({"kind": "var", "perm": perm_json(p), "name": x.name()}),
        Term::App(f, args) => {
            json!({"kind": "app", "symbol": symbol_json(f), "args": args.iter().map(term_to_json).collect::<Vec<_>>()})
        }
        Term::Abs(w, body) => json!({"kind": "abs", "binder": susp_json(w), "body": term_to_json(body)}),
    }
}

fn constraint_json(c: &Constraint) -> Value {
    match c {
        Constraint::Fresh(f) => json!({"kind": "fresh", "atom": f.var.name(), "term": term_to_json(&f.target)}),
        Constraint::Eqr(e) => json!({
            "kind": "eqr",
            "members": e.members.iter().map(susp_json).collect::<Vec<_>>(),
            "blocks": e.blocks,
            "body": e.body.as_ref().map(|b| b.iter().map(|(i, t)| json!([i, term_to_json(t)])).collect::<Vec<_>>()),
        }),
    }
}

fn context_json(ctx: &Context) -> Value {
    Value::Array(ctx.iter().map(constraint_json).collect())
}

fn genvar_json(g: &Genvar) -> Value {
    match g {
        Genvar::Term(x) => json!({"kind": "termvar", "name": x.name()}),
        Genvar::Atom(a) => json!({"kind": "atomvar", "name": a.name()}),
    }
}

fn subst_json(s: &Subst) -> Value {
    let terms: serde_json::Map<String, Value> =
        s.terms.iter().map(|(x, t)| (x.name().to_string(), term_to_json(t))).collect();
    let atoms: serde_json::Map<String, Value> =
        s.atoms.iter().map(|(a, w)| (a.name().to_string(), susp_json(w))).collect();
    json!({"terms": terms, "atoms": atoms})
}

fn outcome_json(o: &Outcome) -> Value {
    match o {
        Outcome::Generalizations { items, minimized, post_processed } => json!({
            "kind": "generalizations",
            "minimized": minimized,
            "post_processed": post_processed,
            "items": items.iter().map(|i| json!({
                "context": context_json(&i.tic.context),
                "term": term_to_json(&i.tic.term),
                "store": i.store.iter().map(|e| json!({
                    "var": genvar_json(&e.var),
                    "left": term_to_json(&e.left),
                    "right": term_to_json(&e.right),
                })).collect::<Vec<_>>(),
                "subst": subst_json(&i.subst),
                "trace": i.trace.iter().map(|s| json!({"rule": s.rule.name(), "measure": [s.measure.0, s.measure.1]})).collect::<Vec<_>>(),
                "checked": i.checked,
            })).collect::<Vec<_>>(),
        }),
        Outcome::Judgement { holds } => json!({"kind": "judgement", "holds": holds}),
        Outcome::Mappings { items } => json!({
            "kind": "mappings",
            "items": items.iter().map(|m| json!({
                "entries": m.entries.iter().map(|(a, w)| (a.name().to_string(), susp_json(w))).collect::<serde_json::Map<_, _>>(),
                "context": context_json(&m.context),
            })).collect::<Vec<_>>(),
        }),
        Outcome::Unique { lgg, note } => json!({
            "kind": "unique",
            "lgg": lgg.as_ref().map(term_to_json),
            "note": note,
        }),
    }
}

pub fn document_to_json(doc: &ResultDocument) -> Value {
    json!({
        "format": "nau-result",
        "version": 1,
        "signature": doc.decls.sig.symbols.values().map(symbol_json).collect::<Vec<_>>(),
        "atomvars": doc.decls.atom_vars,
        "termvars": doc.decls.term_vars,
        "results": doc.results.iter().map(|r| json!({
            "command": r.kind.keyword(),
            "limits_hit": r.limits_hit,
            "outcome": outcome_json(&r.outcome),
        })).collect::<Vec<_>>(),
    })
}

type JResult<T> = Result<T, String>;

fn field<'a>(v: &'a Value, k: &str) -> JResult<&'a Value> {
    v.get(k).ok_or_else(|| format!("missing field `{k}`"))
}

fn string(v: &Value, k: &str) -> JResult<String> {
    field(v, k)?.as_str().map(str::to_string).ok_or_else(|| format!("field `{k}` is not a string"))
}

fn array<'a>(v: &'a Value, k: &str) -> JResult<&'a Vec<Value>> {
    field(v, k)?.as_array().ok_or_else(|| format!("field `{k}` is not an array"))
}

fn boolean(v: &Value, k: &str) -> JResult<bool> {
    field(v, k)?.as_bool().ok_or_else(|| format!("field `{k}` is not a boolean"))
}

fn usize_of(v: &Value) -> JResult<usize> {
    v.as_u64().map(|n| n as usize).ok_or_else(|| "expected a number".to_string())
}

fn perm_from(v: &Value) -> JResult<Perm> {
    let swaps = v
        .as_array()
        .ok_or("permutation is not an array")?
        .iter()
        .map(|pair| match pair.as_array().map(Vec::as_slice) {
            Some([a, b]) => Ok((susp_from(a)?, susp_from(b)?)),
            _ => Err("swap is not a pair".to_string()),
        })
        .collect::<JResult<Vec<_>>>()?;
    Ok(Perm::from_swaps(swaps))
}

fn susp_from(v: &Value) -> JResult<Susp> {
    Ok(Susp::new(perm_from(field(v, "perm")?)?, AtomVar::new(&string(v, "var")?)))
}

fn symbol_from(v: &Value) -> JResult<FunSymbol> {
    let theory = Theory::parse(&string(v, "theory")?).ok_or("unknown theory")?;
    let arity = usize_of(field(v, "arity")?)?;
    if theory != Theory::Free && arity != 2 {
        return Err("theory symbols must have arity 2".into());
    }
    Ok(FunSymbol::new(&string(v, "name")?, arity, theory))
}

pub fn term_from_json(v: &Value) -> JResult<Term> {
    Ok(match string(v, "kind")?.as_str() {
        "atom" => Term::Atom(Susp::new(perm_from(field(v, "perm")?)?, AtomVar::new(&string(v, "var")?))),
        "var" => Term::Var(perm_from(field(v, "perm")?)?, TermVar::new(&string(v, "name")?)),
        "app" => Term::App(
            symbol_from(field(v, "symbol")?)?,
            array(v, "args")?.iter().map(term_from_json).collect::<JResult<_>>()?,
        ),
        "abs" => Term::Abs(susp_from(field(v, "binder")?)?, Box::new(term_from_json(field(v, "body")?)?)),
        k => return Err(format!("unknown term kind `{k}`")),
    })
}

fn constraint_from(v: &Value) -> JResult<Constraint> {
    Ok(match string(v, "kind")?.as_str() {
        "fresh" => Constraint::Fresh(FreshnessConstraint::new(
            AtomVar::new(&string(v, "atom")?),
            term_from_json(field(v, "term")?)?,
        )),
        "eqr" => {
            let members = array(v, "members")?.iter().map(susp_from).collect::<JResult<Vec<_>>>()?;
            let blocks = array(v, "blocks")?.iter().map(usize_of).collect::<JResult<Vec<_>>>()?;
            let body = match field(v, "body")? {
                Value::Null => None,
                Value::Array(items) => Some(
                    items
                        .iter()
                        .map(|it| match it.as_array().map(Vec::as_slice) {
                            Some([i, t]) => Ok((usize_of(i)?, term_from_json(t)?)),
                            _ => Err("eqr body entry is not a pair".to_string()),
                        })
                        .collect::<JResult<Vec<_>>>()?,
                ),
                _ => return Err("eqr body is neither null nor an array".into()),
            };
            Constraint::Eqr(EqrConstraint { members, blocks, body })
        }
        k => return Err(format!("unknown constraint kind `{k}`")),
    })
}

fn context_from(v: &Value) -> JResult<Context> {
    Ok(Context::from_constraints(
        v.as_array().ok_or("context is not an array")?.iter().map(constraint_from).collect::<JResult<Vec<_>>>()?,
    ))
}

fn subst_from(v: &Value) -> JResult<Subst> {
    let mut s = Subst::new();
    for (x, t) in field(v, "terms")?.as_object().ok_or("terms is not an object")? {
        s.bind_term(TermVar::new(x), term_from_json(t)?);
    }
    for (a, w) in field(v, "atoms")?.as_object().ok_or("atoms is not an object")? {
        s.bind_atom(AtomVar::new(a), susp_from(w)?);
    }
    Ok(s)
}

fn outcome_from(v: &Value) -> JResult<Outcome> {
    Ok(match string(v, "kind")?.as_str() {
        "generalizations" => {
            let items = array(v, "items")?
                .iter()
                .map(|i| {
                    let store = array(i, "store")?
                        .iter()
                        .map(|e| {
                            let g = field(e, "var")?;
                            let name = string(g, "name")?;
                            let var = match string(g, "kind")?.as_str() {
                                "termvar" => Genvar::Term(TermVar::new(&name)),
                                "atomvar" => Genvar::Atom(AtomVar::new(&name)),
                                k => return Err(format!("unknown variable kind `{k}`")),
                            };
                            Ok(AuEquation {
                                var,
                                left: term_from_json(field(e, "left")?)?,
                                right: term_from_json(field(e, "right")?)?,
                            })
                        })
                        .collect::<JResult<Vec<_>>>()?;
                    let trace = array(i, "trace")?
                        .iter()
                        .map(|s| {
                            let rule = parse_rule(&string(s, "rule")?).ok_or("unknown rule")?;
                            match array(s, "measure")?.as_slice() {
                                [a, b] => Ok(Step { rule, measure: (usize_of(a)?, usize_of(b)?) }),
                                _ => Err("measure is not a pair".to_string()),
                            }
                        })
                        .collect::<JResult<Vec<_>>>()?;
                    Ok(GenItem {
                        tic: TermInContext::new(context_from(field(i, "context")?)?, term_from_json(field(i, "term")?)?),
                        store,
                        subst: subst_from(field(i, "subst")?)?,
                        trace,
                        checked: i.get("checked").and_then(Value::as_bool),
                    })
                })
                .collect::<JResult<Vec<_>>>()?;
            Outcome::Generalizations {
                items,
                minimized: boolean(v, "minimized")?,
                post_processed: boolean(v, "post_processed")?,
            }
        }
        "judgement" => Outcome::Judgement { holds: boolean(v, "holds")? },
        "mappings" => Outcome::Mappings {
            items: array(v, "items")?
                .iter()
                .map(|m| {
                    let entries = field(m, "entries")?
                        .as_object()
                        .ok_or("entries is not an object")?
                        .iter()
                        .map(|(a, w)| Ok((AtomVar::new(a), susp_from(w)?)))
                        .collect::<JResult<BTreeMap<_, _>>>()?;
                    Ok(AtomMapping { entries, context: context_from(field(m, "context")?)? })
                })
                .collect::<JResult<Vec<_>>>()?,
        },
        "unique" => Outcome::Unique {
            lgg: match field(v, "lgg")? {
                Value::Null => None,
                t => Some(term_from_json(t)?),
            },
            note: v.get("note").and_then(Value::as_str).map(str::to_string),
        },
        k => return Err(format!("unknown outcome kind `{k}`")),
    })
}

pub fn document_from_json(v: &Value) -> JResult<ResultDocument> {
    if v.get("format").and_then(Value::as_str) != Some("nau-result") {
        return Err("not a result document".into());
    }
    let mut decls = Decls::new();
    for s in array(v, "signature")? {
        decls.sig.declare(symbol_from(s)?);
    }
    let names = |k: &str| -> JResult<Vec<String>> {
        array(v, k)?.iter().map(|n| n.as_str().map(str::to_string).ok_or_else(|| format!("bad name in `{k}`"))).collect()
    };
    decls.atom_vars.extend(names("atomvars")?);
    decls.term_vars.extend(names("termvars")?);
    let results = array(v, "results")?
        .iter()
        .map(|r| {
            let cmd = string(r, "command")?;
            let kind = CommandKind::ALL.into_iter().find(|k| k.keyword() == cmd).ok_or("unknown command")?;
            Ok(CommandResult { kind, outcome: outcome_from(field(r, "outcome")?)?, limits_hit: boolean(r, "limits_hit")? })
        })
        .collect::<JResult<Vec<_>>>()?;
    Ok(ResultDocument { decls, results })
}

// ===== command line =====

/// Nominal anti-unification with atom-variables modulo A, C and AC.
#[derive(clap::Parser, Debug)]
#[command(name = "nau", version)]
pub struct Cli {
    /// Problem files (`.naup`); `-` reads standard input.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Replace the theory of a declared binary symbol: `f=AC`, or `*=C` for all.
    #[arg(long = "theory-override", value_name = "SYM=THEORY")]
    pub theory_override: Vec<String>,
    /// Keep only a minimal complete subset of the generalizations.
    #[arg(long)]
    pub minimize: bool,
    /// Strengthen result contexts as far as both inputs allow.
    #[arg(long)]
    pub post_process: bool,
    #[arg(long, value_name = "N", default_value_t = Limits::default().max_states)]
    pub max_states: usize,
    /// Cross-check generalizations on ground instances over N atoms (0: off).
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub pool_size: usize,
    /// Depth of the ground terms used by the cross-check.
    #[arg(long, value_name = "N", default_value_t = 2)]
    pub oracle_depth: usize,
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Report every equivariance mapping instead of the first one.
    #[arg(long)]
    pub all_mappings: bool,
}

impl Cli {
    pub fn flags(&self) -> Flags {
        Flags {
            minimize: self.minimize,
            post_process: self.post_process,
            max_states: self.max_states,
            pool_size: self.pool_size,
            oracle_depth: self.oracle_depth,
            jobs: self.jobs,
            all_mappings: self.all_mappings,
        }
    }

    pub fn overrides(&self) -> Result<Vec<(String, Theory)>, String> {
        self.theory_override
            .iter()
            .map(|o| {
                let (name, th) = o.split_once('=').ok_or_else(|| format!("malformed override `{o}`"))?;
                let theory = Theory::parse(th.trim()).ok_or_else(|| format!("unknown theory `{th}`"))?;
                Ok((name.trim().to_string(), theory))
            })
            .collect()
    }
}

/// Runs the tool; writes the documents to `out`, diagnostics to `err`, and
/// returns the exit code.
pub fn run_cli(cli: &Cli, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    let overrides = match cli.overrides() {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "nau: {e}");
            return EXIT_PARSE;
        }
    };
    let flags = cli.flags();
    let mut code = EXIT_OK;
    for path in &cli.files {
        let text = if path.as_os_str() == "-" {
            let mut s = String::new();
            std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map(|_| s)
        } else {
            std::fs::read_to_string(path)
        };
        let text = match text {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "nau: {}: {e}", path.display());
                code = code.max(EXIT_PARSE);
                continue;
            }
        };
        let decls = Decls { overrides: overrides.clone(), ..Decls::default() };
        let pf = match parse_problem_with(&text, decls) {
            Ok(pf) => pf,
            Err(e) => {
                let _ = writeln!(err, "{}:{e}", path.display());
                code = code.max(EXIT_PARSE);
                continue;
            }
        };
        let doc = run_problem(&pf, &flags);
        let _ = out.write_all(render(&doc, cli.format).as_bytes());
        code = code.max(doc.exit_code());
    }
    code
}
