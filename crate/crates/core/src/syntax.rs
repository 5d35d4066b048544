//! Concrete syntax: a printer for every term-level value and a
//! position-reporting recursive-descent parser for problem files.
//!
//! Swaps are written outermost first, left to right: `(A B)(B C)*A` applies
//! `(B C)` first and denotes `B` when the three variables are distinct.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::{
    is_reserved, Atom, AtomVar, Constraint, Context, EqrConstraint, FreshnessConstraint, FunSymbol, Ground, Perm,
    Signature, Subst, Susp, Term, TermInContext, TermVar, Theory,
};

// ===== printing =====

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_id() {
            return f.write_str("Id");
        }
        for (a, b) in self.swaps() {
            write!(f, "({a} {b})")?;
        }
        Ok(())
    }
}

impl fmt::Display for Susp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.perm.is_id() {
            write!(f, "{}", self.var)
        } else {
            write!(f, "{}*{}", self.perm, self.var)
        }
    }
}

fn write_args<T: fmt::Display>(f: &mut fmt::Formatter<'_>, head: &str, args: &[T]) -> fmt::Result {
    f.write_str(head)?;
    if args.is_empty() {
        return Ok(());
    }
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(w) => write!(f, "{w}"),
            Term::Var(p, x) if p.is_id() => write!(f, "{x}"),
            Term::Var(p, x) => write!(f, "{p}*{x}"),
            Term::App(g, args) => write_args(f, &g.name, args),
            Term::Abs(w, body) => write!(f, "lam {w}. {body}"),
        }
    }
}

impl fmt::Display for Ground {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ground::Atom(a) => write!(f, "{a}"),
            Ground::App(g, args) => write_args(f, &g.name, args),
            Ground::Abs(a, body) => write!(f, "lam {a}. {body}"),
        }
    }
}

impl fmt::Display for FreshnessConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} # {}", self.var, self.target)
    }
}

impl fmt::Display for EqrConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let classes = self.blocks.iter().copied().max().map_or(0, |m| m + 1);
        f.write_str("[")?;
        for c in 0..classes {
            if c > 0 {
                f.write_str(" | ")?;
            }
            let members: Vec<String> = self
                .members
                .iter()
                .zip(&self.blocks)
                .filter(|(_, b)| **b == c)
                .map(|(m, _)| m.to_string())
                .collect();
            f.write_str(&members.join("="))?;
        }
        f.write_str("] => ")?;
        match &self.body {
            None => f.write_str("false"),
            Some(body) => {
                let items: Vec<String> = body.iter().map(|(i, t)| format!("{} # {t}", self.members[*i])).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Fresh(c) => write!(f, "{c}"),
            Constraint::Eqr(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|c| c.to_string()).collect();
        f.write_str(&items.join(", "))
    }
}

impl fmt::Display for TermInContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} | {})", self.context, self.term)
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = self.atoms.iter().map(|(a, w)| format!("{a} -> {w}")).collect();
        items.extend(self.terms.iter().map(|(x, t)| format!("{x} -> {t}")));
        write!(f, "{{{}}}", items.join(", "))
    }
}

macro_rules! debug_as_display {
    ($($t:ty),*) => {
        $(impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(self, f)
            }
        })*
    };
}

debug_as_display!(Perm, Susp, Term, Ground, FreshnessConstraint, EqrConstraint, Constraint, Context, TermInContext, Subst);

pub fn render_signature(sig: &Signature) -> String {
    let items: Vec<String> = sig
        .symbols
        .values()
        .map(|s| format!("{}:{}/{}", s.name, s.theory.tag(), s.arity))
        .collect();
    items.join(", ")
}

// ===== declarations =====

/// Names in scope while parsing.
#[derive(Clone, Debug, Default)]
pub struct Decls {
    pub sig: Signature,
    pub atom_vars: BTreeSet<String>,
    pub term_vars: BTreeSet<String>,
    /// Accept generated `_A…`/`_X…` names (result documents only).
    pub allow_reserved: bool,
    /// Theory overrides applied to declarations: symbol name or `*`.
    pub overrides: Vec<(String, Theory)>,
}

impl Decls {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_symbol(&mut self, name: &str, theory: Theory, arity: usize) -> Result<(), String> {
        let mut theory = theory;
        for (target, th) in &self.overrides {
            if target == name || (target == "*" && arity == 2) {
                theory = *th;
            }
        }
        if theory != Theory::Free && arity != 2 {
            return Err(format!("symbol {name} with theory {} must have arity 2", theory.tag()));
        }
        self.sig.declare(FunSymbol::new(name, arity, theory));
        Ok(())
    }

    /// Declares every variable of `tc` (used when rendering documents).
    pub fn declare_vars_of(&mut self, ctx: &Context, terms: &[&Term]) {
        for a in ctx.atom_vars() {
            self.atom_vars.insert(a.name().to_string());
        }
        for x in ctx.term_vars() {
            self.term_vars.insert(x.name().to_string());
        }
        for t in terms {
            for a in t.atom_vars() {
                self.atom_vars.insert(a.name().to_string());
            }
            for x in t.term_vars() {
                self.term_vars.insert(x.name().to_string());
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.sig.symbols.is_empty() {
            out.push_str(&format!("sig: {};\n", render_signature(&self.sig)));
        }
        if !self.atom_vars.is_empty() {
            out.push_str(&format!("atomvars: {};\n", self.atom_vars.iter().cloned().collect::<Vec<_>>().join(" ")));
        }
        if !self.term_vars.is_empty() {
            out.push_str(&format!("termvars: {};\n", self.term_vars.iter().cloned().collect::<Vec<_>>().join(" ")));
        }
        out
    }
}

// ===== lexing =====

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(usize),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: [&str; 24] = [
    "=?=", "=^=", "<~", "<=", "=>", "->", "(", ")", ",", ".", "*", "#", ":", ";", "/", "=", "~", "|", "[", "]", "{", "}",
    "<", ">",
];

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '%' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (l0, c0) = (line, col);
        if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut n = 0;
            while start + n < chars.len() && (chars[start + n].is_alphanumeric() || chars[start + n] == '_' || chars[start + n] == '\'') {
                n += 1;
            }
            let s: String = chars[start..start + n].iter().collect();
            advance(&mut i, &mut line, &mut col, n);
            out.push((Tok::Ident(s), l0, c0));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut n = 0;
            while start + n < chars.len() && chars[start + n].is_ascii_digit() {
                n += 1;
            }
            let s: String = chars[start..start + n].iter().collect();
            advance(&mut i, &mut line, &mut col, n);
            let v = s.parse().map_err(|_| ParseError { line: l0, col: c0, msg: "number too large".into() })?;
            out.push((Tok::Num(v), l0, c0));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                advance(&mut i, &mut line, &mut col, s.chars().count());
                out.push((Tok::Sym(s), l0, c0));
            }
            None => return Err(ParseError { line: l0, col: c0, msg: format!("unexpected character `{c}`") }),
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

// ===== parsing =====

/// Problem-file commands. Each carries the context in force where it occurs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Generalize { context: Context, left: Term, right: Term },
    Check { context: Context, left: Term, right: Term },
    CheckFresh { context: Context, constraint: FreshnessConstraint },
    Equiv { context: Context, equations: Vec<(Term, Term)> },
    Subsumes { candidate: TermInContext, reference: TermInContext },
    Unique { left: Ground, right: Ground },
}

#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub decls: Decls,
    pub commands: Vec<Command>,
}

pub struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    pub decls: Decls,
    /// Concrete atoms met in the current command.
    concrete: BTreeSet<String>,
}

impl Parser {
    pub fn new(text: &str, decls: Decls) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0, decls, concrete: BTreeSet::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (_, line, col) = &self.toks[self.pos];
        Err(ParseError { line: *line, col: *col, msg: msg.into() })
    }

    fn err_at<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
        let (_, line, col) = &self.toks[pos];
        Err(ParseError { line: *line, col: *col, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    pub fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {t}")),
        }
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn check_name(&self, name: &str) -> Result<(), ParseError> {
        if is_reserved(name) && !self.decls.allow_reserved {
            return self.err(format!("identifier `{name}` uses the reserved prefix `_`"));
        }
        Ok(())
    }

    pub fn is_atom_var(&self, name: &str) -> bool {
        self.decls.atom_vars.contains(name)
            || (self.decls.allow_reserved && name.starts_with("_A"))
            || self.concrete.contains(name)
    }

    pub fn is_term_var(&self, name: &str) -> bool {
        self.decls.term_vars.contains(name) || (self.decls.allow_reserved && name.starts_with("_X"))
    }

    fn is_concrete_name(&self, name: &str) -> bool {
        name.chars().next().is_some_and(|c| c.is_lowercase())
            && self.decls.sig.get(name).is_none()
            && !self.decls.atom_vars.contains(name)
            && !self.decls.term_vars.contains(name)
    }

    /// `A`, or `(W W)…(W W)*A`.
    pub fn susp(&mut self) -> Result<Susp, ParseError> {
        if self.is_sym("(") {
            let perm = self.perm()?;
            self.expect("*")?;
            let name = self.ident()?;
            let v = self.atom_var_name(&name)?;
            Ok(Susp::new(perm, v))
        } else {
            let name = self.ident()?;
            Ok(Susp::var(self.atom_var_name(&name)?))
        }
    }

    fn atom_var_name(&mut self, name: &str) -> Result<AtomVar, ParseError> {
        self.check_name(name)?;
        if self.is_atom_var(name) {
            return Ok(AtomVar::new(name));
        }
        if self.is_concrete_name(name) {
            self.concrete.insert(name.to_string());
            return Ok(AtomVar::new(name));
        }
        self.err(format!("`{name}` is not an atom-variable"))
    }

    fn perm(&mut self) -> Result<Perm, ParseError> {
        let mut swaps = Vec::new();
        while self.is_sym("(") {
            self.bump();
            let a = self.susp()?;
            let b = self.susp()?;
            self.expect(")")?;
            swaps.push((a, b));
        }
        Ok(Perm::from_swaps(swaps))
    }

    pub fn term(&mut self) -> Result<Term, ParseError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "lam") {
            self.bump();
            let binder = self.susp()?;
            self.expect(".")?;
            let body = self.term()?;
            return Ok(Term::abs(binder, body));
        }
        if self.is_sym("(") {
            // a permutation applied to any term is pushed to the leaves
            let perm = self.perm()?;
            self.expect("*")?;
            return Ok(self.term()?.permute(&perm));
        }
        let start = self.pos;
        let name = self.ident()?;
        self.check_name(&name)?;
        if self.is_sym("(") {
            let Some(sym) = self.decls.sig.get(&name).cloned() else {
                return self.err_at(start, format!("undeclared function symbol `{name}`"));
            };
            self.bump();
            let mut args = Vec::new();
            if !self.is_sym(")") {
                loop {
                    args.push(self.term()?);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
            let ok = if sym.theory.is_assoc() { args.len() >= 2 } else { args.len() == sym.arity };
            if !ok {
                return self.err(format!("`{name}` expects {} arguments, got {}", sym.arity, args.len()));
            }
            return Ok(Term::app(sym, args));
        }
        if self.is_term_var(&name) {
            return Ok(Term::Var(Perm::id(), TermVar::new(&name)));
        }
        if let Some(sym) = self.decls.sig.get(&name) {
            if sym.arity != 0 {
                return self.err(format!("`{name}` expects {} arguments", sym.arity));
            }
            return Ok(Term::App(sym.clone(), Vec::new()));
        }
        Ok(Term::Atom(Susp::var(self.atom_var_name(&name)?)))
    }

    pub fn constraint(&mut self) -> Result<Constraint, ParseError> {
        if self.is_sym("[") {
            return Ok(Constraint::Eqr(self.eqr()?));
        }
        let w = self.susp()?;
        self.expect("#")?;
        let t = self.term()?;
        Ok(Constraint::Fresh(FreshnessConstraint::from_susp(&w, &t)))
    }

    fn eqr(&mut self) -> Result<EqrConstraint, ParseError> {
        self.expect("[")?;
        let mut members = Vec::new();
        let mut blocks = Vec::new();
        let mut class = 0;
        loop {
            loop {
                members.push(self.susp()?);
                blocks.push(class);
                if !self.eat("=") {
                    break;
                }
            }
            if !self.eat("|") {
                break;
            }
            class += 1;
        }
        self.expect("]")?;
        self.expect("=>")?;
        let body = if matches!(self.peek(), Tok::Ident(s) if s == "false") {
            self.bump();
            None
        } else {
            self.expect("{")?;
            let mut body = Vec::new();
            if !self.is_sym("}") {
                loop {
                    let w = self.susp()?;
                    let Some(i) = members.iter().position(|m| *m == w) else {
                        return self.err(format!("`{w}` is not a member of the constraint"));
                    };
                    self.expect("#")?;
                    body.push((i, self.term()?));
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect("}")?;
            Some(body)
        };
        Ok(EqrConstraint { members, blocks, body })
    }

    /// A comma-separated, possibly empty constraint list ending before `stop`.
    pub fn context(&mut self, stop: &[&str]) -> Result<Context, ParseError> {
        let mut ctx = Context::new();
        if stop.iter().any(|s| self.is_sym(s)) || self.at_eof() {
            return Ok(ctx);
        }
        loop {
            ctx.insert(self.constraint()?);
            if !self.eat(",") {
                break;
            }
        }
        Ok(ctx)
    }

    pub fn begin_command(&mut self) {
        self.concrete.clear();
    }

    /// Concrete atoms denote pairwise distinct atoms.
    fn concrete_context(&self) -> Context {
        let names: Vec<&String> = self.concrete.iter().collect();
        let mut ctx = Context::new();
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                ctx.add_fresh(AtomVar::new(a), Term::Atom(Susp::named(b)));
            }
        }
        ctx
    }

    pub fn declaration(&mut self, kw: &str) -> Result<(), ParseError> {
        self.expect(":")?;
        match kw {
            "sig" => {
                while !self.is_sym(";") && !self.at_eof() {
                    let name = self.ident()?;
                    self.check_name(&name)?;
                    self.expect(":")?;
                    let theory = match self.peek().clone() {
                        Tok::Ident(s) => {
                            self.bump();
                            match Theory::parse(&s) {
                                Some(t) => t,
                                None => return self.err(format!("unknown theory `{s}`")),
                            }
                        }
                        Tok::Num(0) => {
                            self.bump();
                            Theory::Free
                        }
                        _ => Theory::Free,
                    };
                    self.expect("/")?;
                    let arity = match self.bump() {
                        Tok::Num(n) => n,
                        t => return self.err(format!("expected arity, found {t}")),
                    };
                    if let Err(msg) = self.decls.declare_symbol(&name, theory, arity) {
                        return self.err(msg);
                    }
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            "atomvars" | "termvars" => {
                while let Tok::Ident(name) = self.peek().clone() {
                    self.check_name(&name)?;
                    if self.decls.sig.get(&name).is_some() {
                        return self.err(format!("`{name}` is already a function symbol"));
                    }
                    self.bump();
                    let (mine, other) = if kw == "atomvars" {
                        (&mut self.decls.atom_vars, &self.decls.term_vars)
                    } else {
                        (&mut self.decls.term_vars, &self.decls.atom_vars)
                    };
                    if other.contains(&name) {
                        return self.err(format!("`{name}` is declared both as atom- and term-variable"));
                    }
                    mine.insert(name);
                    self.eat(",");
                }
            }
            _ => unreachable!(),
        }
        self.expect(";")
    }

    pub fn problem(mut self) -> Result<ProblemFile, ParseError> {
        let mut commands = Vec::new();
        let mut fresh = Context::new();
        while !self.at_eof() {
            let kw = self.ident()?;
            match kw.as_str() {
                "sig" | "atomvars" | "termvars" => self.declaration(&kw)?,
                "fresh" => {
                    self.expect(":")?;
                    self.begin_command();
                    fresh = self.context(&[";"])?;
                    self.expect(";")?;
                }
                "generalize" | "check" | "unique" => {
                    self.begin_command();
                    let left = self.term()?;
                    let sep = if kw == "check" { "~" } else { "=?=" };
                    self.expect(sep)?;
                    let right = self.term()?;
                    let context = fresh.union(&self.concrete_context());
                    commands.push(match kw.as_str() {
                        "generalize" => Command::Generalize { context, left, right },
                        "check" => Command::Check { context, left, right },
                        _ => {
                            let left = self.to_ground(&left)?;
                            let right = self.to_ground(&right)?;
                            Command::Unique { left, right }
                        }
                    });
                    self.eat(";");
                }
                "checkfresh" => {
                    self.begin_command();
                    let w = self.susp()?;
                    self.expect("#")?;
                    let t = self.term()?;
                    let context = fresh.union(&self.concrete_context());
                    commands.push(Command::CheckFresh { context, constraint: FreshnessConstraint::from_susp(&w, &t) });
                    self.eat(";");
                }
                "equiv" => {
                    self.begin_command();
                    let mut equations = Vec::new();
                    loop {
                        let l = self.term()?;
                        self.expect("<~")?;
                        let r = self.term()?;
                        equations.push((l, r));
                        if !self.eat(",") {
                            break;
                        }
                    }
                    let context = fresh.union(&self.concrete_context());
                    commands.push(Command::Equiv { context, equations });
                    self.eat(";");
                }
                "subsumes" => {
                    self.begin_command();
                    let candidate = self.tic()?;
                    self.expect("<=")?;
                    let reference = self.tic()?;
                    let extra = self.concrete_context();
                    let candidate = TermInContext::new(candidate.context.union(&extra), candidate.term);
                    commands.push(Command::Subsumes { candidate, reference });
                    self.eat(";");
                }
                other => {
                    self.pos -= 1;
                    return self.err(format!("unknown declaration or command `{other}`"));
                }
            }
        }
        Ok(ProblemFile { decls: self.decls, commands })
    }

    /// `(ctx | t)`
    pub fn tic(&mut self) -> Result<TermInContext, ParseError> {
        self.expect("(")?;
        let ctx = if self.is_sym("|") { Context::new() } else { self.context(&["|"])? };
        self.expect("|")?;
        let t = self.term()?;
        self.expect(")")?;
        Ok(TermInContext::new(ctx, t))
    }

    fn to_ground(&self, t: &Term) -> Result<Ground, ParseError> {
        term_to_ground(t).ok_or_else(|| {
            let (_, line, col) = &self.toks[self.pos.saturating_sub(1)];
            ParseError { line: *line, col: *col, msg: format!("`{t}` is not ground") }
        })
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(format!("unexpected {}", self.peek()))
        }
    }

    /// `{A -> W, X -> t}`; the left-hand name decides the binding kind.
    pub fn subst(&mut self) -> Result<Subst, ParseError> {
        self.expect("{")?;
        let mut out = Subst::new();
        if !self.is_sym("}") {
            loop {
                let name = self.ident()?;
                self.check_name(&name)?;
                self.expect("->")?;
                if self.is_term_var(&name) {
                    out.bind_term(TermVar::new(&name), self.term()?);
                } else {
                    let a = self.atom_var_name(&name)?;
                    out.bind_atom(a, self.susp()?);
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("}")?;
        Ok(out)
    }

    pub fn number(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(n)
            }
            t => self.err(format!("expected number, found {t}")),
        }
    }

    pub fn error_here<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        self.err(msg)
    }

    pub fn peek_token(&self) -> &Tok {
        self.peek()
    }

    pub fn peek_token_at(&self, k: usize) -> &Tok {
        self.peek_at(k)
    }
}

/// Reads a term whose atom leaves are plain names as a ground term.
pub fn term_to_ground(t: &Term) -> Option<Ground> {
    Some(match t {
        Term::Atom(w) if w.perm.is_id() => Ground::Atom(Atom::new(w.var.name())),
        Term::Atom(_) | Term::Var(..) => return None,
        Term::App(f, args) => Ground::app(f.clone(), args.iter().map(term_to_ground).collect::<Option<_>>()?),
        Term::Abs(w, body) if w.perm.is_id() => Ground::abs(Atom::new(w.var.name()), term_to_ground(body)?),
        Term::Abs(..) => return None,
    })
}

pub fn ground_to_term(g: &Ground) -> Term {
    match g {
        Ground::Atom(a) => Term::atom(a.name()),
        Ground::App(f, args) => Term::app(f.clone(), args.iter().map(ground_to_term).collect()),
        Ground::Abs(a, body) => Term::abs(Susp::named(a.name()), ground_to_term(body)),
    }
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    parse_problem_with(text, Decls::new())
}

pub fn parse_problem_with(text: &str, decls: Decls) -> Result<ProblemFile, ParseError> {
    Parser::new(text, decls)?.problem()
}

pub fn parse_term(text: &str, decls: &Decls) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, decls.clone())?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_context(text: &str, decls: &Decls) -> Result<Context, ParseError> {
    let mut p = Parser::new(text, decls.clone())?;
    let c = p.context(&[])?;
    p.expect_eof()?;
    Ok(c)
}

/// Renders commands back to problem syntax; `parse_problem` reads it back.
pub fn render_problem(pf: &ProblemFile) -> String {
    let mut out = pf.decls.render();
    for cmd in &pf.commands {
        let ctx_line = |c: &Context| format!("fresh: {c};\n");
        match cmd {
            Command::Generalize { context, left, right } => {
                out.push_str(&ctx_line(context));
                out.push_str(&format!("generalize {left} =?= {right};\n"));
            }
            Command::Check { context, left, right } => {
                out.push_str(&ctx_line(context));
                out.push_str(&format!("check {left} ~ {right};\n"));
            }
            Command::CheckFresh { context, constraint } => {
                out.push_str(&ctx_line(context));
                out.push_str(&format!("checkfresh {constraint};\n"));
            }
            Command::Equiv { context, equations } => {
                out.push_str(&ctx_line(context));
                let eqs: Vec<String> = equations.iter().map(|(l, r)| format!("{l} <~ {r}")).collect();
                out.push_str(&format!("equiv {};\n", eqs.join(", ")));
            }
            Command::Subsumes { candidate, reference } => {
                out.push_str(&format!("subsumes {candidate} <= {reference};\n"));
            }
            Command::Unique { left, right } => {
                out.push_str(&format!("unique {left} =?= {right};\n"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decls() -> Decls {
        let mut d = Decls::new();
        d.declare_symbol("f", Theory::AC, 2).unwrap();
        d.declare_symbol("g", Theory::Free, 2).unwrap();
        d.declare_symbol("c", Theory::Free, 0).unwrap();
        for a in ["A", "B", "C", "D"] {
            d.atom_vars.insert(a.into());
        }
        for x in ["X", "Y"] {
            d.term_vars.insert(x.into());
        }
        d
    }

    #[test]
    fn suspension_syntax() {
        let d = decls();
        let t = parse_term("(A B)(C D)*X", &d).unwrap();
        let Term::Var(p, x) = &t else { panic!("not a variable suspension") };
        assert_eq!(x.name(), "X");
        assert_eq!(p.swaps().len(), 2);
        assert_eq!(p.swaps()[0].0, Susp::named("A"));
        assert_eq!(t.to_string(), "(A B)(C D)*X");
    }

    #[test]
    fn terms_round_trip() {
        let d = decls();
        for src in [
            "lam A. f(A, A, B)",
            "g(c, (A B)*C)",
            "lam (A B)*C. g(X, lam D. Y)",
            "f(A, f(B, C))",
            "((A B)*C D)*A",
        ] {
            let t = parse_term(src, &d).unwrap();
            let back = parse_term(&t.to_string(), &d).unwrap();
            assert_eq!(t, back, "{src}");
        }
        assert_eq!(parse_term("f(A, f(B, C))", &d).unwrap().to_string(), "f(A, B, C)");
    }

    #[test]
    fn errors_have_positions() {
        let d = decls();
        let e = parse_term("h(A)", &d).unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        assert!(e.msg.contains("undeclared"));
        assert!(parse_term("g(A)", &d).is_err());
        assert!(parse_term("_X1", &d).is_err());
        assert!(parse_problem("sig: f:AC/3;").is_err());
    }

    #[test]
    fn contexts_and_eqr() {
        let d = decls();
        let c = parse_context("A # lam B. A, [A=B | C] => {C # X}, [A | B] => false", &d).unwrap();
        assert_eq!(c.len(), 3);
        let back = parse_context(&c.to_string(), &d).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn problem_file() {
        let pf = parse_problem(
            "sig: f:AC/2;\natomvars: A B;\nfresh: A#B;\ngeneralize lam A. f(A,A,B) =?= lam B. f(A,B,A);\n",
        )
        .unwrap();
        assert_eq!(pf.commands.len(), 1);
        let again = parse_problem(&render_problem(&pf)).unwrap();
        assert_eq!(pf.commands, again.commands);
    }

    #[test]
    fn concrete_atoms_are_distinct() {
        let pf = parse_problem("sig: g:/2; check g(a, b) ~ g(a, b);").unwrap();
        let Command::Check { context, .. } = &pf.commands[0] else { panic!() };
        assert_eq!(context.len(), 1);
    }
}
