//! Term languages: ground terms over concrete atoms and nominal terms over
//! atom-variables, together with permutations, suspensions, substitutions and
//! freshness constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Names starting with this prefix are reserved for generated variables.
pub const RESERVED_PREFIX: &str = "_";

macro_rules! name_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub Arc<str>);

        impl $name {
            pub fn new(name: &str) -> Self {
                $name(Arc::from(name))
            }

            pub fn name(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

name_type!(
    /// A concrete atom; atoms are identified by their name.
    Atom
);
name_type!(
    /// A variable ranging over atoms.
    AtomVar
);
name_type!(
    /// A variable ranging over terms.
    TermVar
);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Theory {
    Free,
    A,
    C,
    AC,
}

impl Theory {
    pub fn is_assoc(self) -> bool {
        matches!(self, Theory::A | Theory::AC)
    }

    pub fn is_comm(self) -> bool {
        matches!(self, Theory::C | Theory::AC)
    }

    pub fn parse(s: &str) -> Option<Theory> {
        match s {
            "" | "0" | "∅" | "free" | "Free" => Some(Theory::Free),
            "A" => Some(Theory::A),
            "C" => Some(Theory::C),
            "AC" => Some(Theory::AC),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Theory::Free => "",
            Theory::A => "A",
            Theory::C => "C",
            Theory::AC => "AC",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunSymbol {
    pub name: Arc<str>,
    pub arity: usize,
    pub theory: Theory,
}

impl FunSymbol {
    /// Panics if an equational symbol is not binary.
    pub fn new(name: &str, arity: usize, theory: Theory) -> Self {
        assert!(
            theory == Theory::Free || arity == 2,
            "symbol {name} with theory {theory:?} must have arity 2"
        );
        FunSymbol { name: Arc::from(name), arity, theory }
    }

    pub fn constant(name: &str) -> Self {
        FunSymbol::new(name, 0, Theory::Free)
    }
}

impl fmt::Debug for FunSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}/{}", self.name, self.theory.tag(), self.arity)
    }
}

/// Declared function symbols by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub symbols: BTreeMap<String, FunSymbol>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, sym: FunSymbol) {
        self.symbols.insert(sym.name.to_string(), sym);
    }

    pub fn get(&self, name: &str) -> Option<&FunSymbol> {
        self.symbols.get(name)
    }
}

// ===== permutations and suspensions =====

/// A sequence of swappings. Index 0 is the outermost swap, so the last swap
/// acts first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Perm(Vec<(Susp, Susp)>);

/// A permutation suspended on an atom-variable, `π·A`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Susp {
    pub perm: Perm,
    pub var: AtomVar,
}

fn same_swap(a: &(Susp, Susp), b: &(Susp, Susp)) -> bool {
    (a.0 == b.0 && a.1 == b.1) || (a.0 == b.1 && a.1 == b.0)
}

impl Perm {
    pub fn id() -> Self {
        Perm(Vec::new())
    }

    pub fn swap(w1: Susp, w2: Susp) -> Self {
        Perm::from_swaps(vec![(w1, w2)])
    }

    /// Builds a permutation from swaps listed outermost first.
    pub fn from_swaps(swaps: Vec<(Susp, Susp)>) -> Self {
        let mut out: Vec<(Susp, Susp)> = Vec::with_capacity(swaps.len());
        for sw in swaps {
            if sw.0 == sw.1 {
                continue;
            }
            if out.last().is_some_and(|last| same_swap(last, &sw)) {
                out.pop();
            } else {
                out.push(sw);
            }
        }
        Perm(out)
    }

    pub fn swaps(&self) -> &[(Susp, Susp)] {
        &self.0
    }

    pub fn is_id(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Perm {
        Perm(self.0.iter().rev().cloned().collect())
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Perm) -> Perm {
        if other.is_id() {
            return self.clone();
        }
        if self.is_id() {
            return other.clone();
        }
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Perm::from_swaps(v)
    }

    pub fn collect_atom_vars(&self, out: &mut BTreeSet<AtomVar>) {
        for (a, b) in &self.0 {
            a.collect_atom_vars(out);
            b.collect_atom_vars(out);
        }
    }

    pub fn subst(&self, s: &Subst) -> Perm {
        if s.atoms.is_empty() {
            return self.clone();
        }
        Perm::from_swaps(self.0.iter().map(|(a, b)| (a.subst(s), b.subst(s))).collect())
    }

    pub fn rename_atoms(&self, f: &dyn Fn(&AtomVar) -> AtomVar) -> Perm {
        Perm::from_swaps(
            self.0
                .iter()
                .map(|(a, b)| (a.rename_atoms(f), b.rename_atoms(f)))
                .collect(),
        )
    }
}

impl Susp {
    /// Builds `perm·var`, evaluating innermost swaps that name `var` itself.
    pub fn new(perm: Perm, var: AtomVar) -> Susp {
        let mut swaps = perm.0;
        let mut var = var;
        while let Some(last) = swaps.last() {
            let here = Susp { perm: Perm::id(), var: var.clone() };
            let target = if last.0 == here {
                last.1.clone()
            } else if last.1 == here {
                last.0.clone()
            } else {
                break;
            };
            swaps.pop();
            swaps.extend(target.perm.0);
            swaps = Perm::from_swaps(swaps).0;
            var = target.var;
        }
        Susp { perm: Perm(swaps), var }
    }

    pub fn var(v: AtomVar) -> Susp {
        Susp { perm: Perm::id(), var: v }
    }

    pub fn named(name: &str) -> Susp {
        Susp::var(AtomVar::new(name))
    }

    pub fn is_plain(&self) -> bool {
        self.perm.is_id()
    }

    pub fn permute(&self, p: &Perm) -> Susp {
        if p.is_id() {
            return self.clone();
        }
        Susp::new(p.compose(&self.perm), self.var.clone())
    }

    pub fn collect_atom_vars(&self, out: &mut BTreeSet<AtomVar>) {
        out.insert(self.var.clone());
        self.perm.collect_atom_vars(out);
    }

    pub fn atom_vars(&self) -> BTreeSet<AtomVar> {
        let mut s = BTreeSet::new();
        self.collect_atom_vars(&mut s);
        s
    }

    pub fn subst(&self, s: &Subst) -> Susp {
        let perm = self.perm.subst(s);
        match s.atoms.get(&self.var) {
            Some(w) => Susp::new(perm.compose(&w.perm), w.var.clone()),
            None => Susp::new(perm, self.var.clone()),
        }
    }

    pub fn rename_atoms(&self, f: &dyn Fn(&AtomVar) -> AtomVar) -> Susp {
        Susp::new(self.perm.rename_atoms(f), f(&self.var))
    }
}

// ===== nominal terms =====

/// Terms over atom-variables. Permutations are kept only at leaves.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Atom(Susp),
    Var(Perm, TermVar),
    App(FunSymbol, Vec<Term>),
    Abs(Susp, Box<Term>),
}

fn flatten_args<T: Clone>(
    sym: &FunSymbol,
    args: Vec<T>,
    split: impl Fn(&T) -> Option<(&FunSymbol, &Vec<T>)>,
) -> Vec<T> {
    if !sym.theory.is_assoc() {
        return args;
    }
    let mut out = Vec::with_capacity(args.len());
    for a in args {
        match split(&a) {
            Some((g, inner)) if g == sym => out.extend(inner.iter().cloned()),
            _ => out.push(a),
        }
    }
    out
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Susp::named(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Perm::id(), TermVar::new(name))
    }

    /// Smart constructor: flattens nested applications of an associative
    /// symbol, and a one-argument associative application stands for its
    /// argument.
    pub fn app(sym: FunSymbol, args: Vec<Term>) -> Term {
        let args = flatten_args(&sym, args, |t| match t {
            Term::App(g, inner) => Some((g, inner)),
            _ => None,
        });
        if sym.theory.is_assoc() && args.len() == 1 {
            return args.into_iter().next().unwrap();
        }
        Term::App(sym, args)
    }

    pub fn abs(binder: Susp, body: Term) -> Term {
        Term::Abs(binder, Box::new(body))
    }

    /// Pushes a permutation to the leaves.
    pub fn permute(&self, p: &Perm) -> Term {
        if p.is_id() {
            return self.clone();
        }
        match self {
            Term::Atom(s) => Term::Atom(s.permute(p)),
            Term::Var(q, x) => Term::Var(p.compose(q), x.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.permute(p)).collect()),
            Term::Abs(w, body) => Term::Abs(w.permute(p), Box::new(body.permute(p))),
        }
    }

    pub fn subst(&self, s: &Subst) -> Term {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Term::Atom(w) => Term::Atom(w.subst(s)),
            Term::Var(p, x) => {
                let p = p.subst(s);
                match s.terms.get(x) {
                    Some(t) => t.permute(&p),
                    None => Term::Var(p, x.clone()),
                }
            }
            Term::App(f, args) => Term::app(f.clone(), args.iter().map(|a| a.subst(s)).collect()),
            Term::Abs(w, body) => Term::abs(w.subst(s), body.subst(s)),
        }
    }

    /// Re-flattens associative applications everywhere.
    pub fn flatten(&self) -> Term {
        match self {
            Term::App(f, args) => Term::app(f.clone(), args.iter().map(Term::flatten).collect()),
            Term::Abs(w, body) => Term::abs(w.clone(), body.flatten()),
            t => t.clone(),
        }
    }

    pub fn collect_atom_vars(&self, out: &mut BTreeSet<AtomVar>) {
        match self {
            Term::Atom(s) => s.collect_atom_vars(out),
            Term::Var(p, _) => p.collect_atom_vars(out),
            Term::App(_, args) => args.iter().for_each(|a| a.collect_atom_vars(out)),
            Term::Abs(w, body) => {
                w.collect_atom_vars(out);
                body.collect_atom_vars(out);
            }
        }
    }

    pub fn atom_vars(&self) -> BTreeSet<AtomVar> {
        let mut s = BTreeSet::new();
        self.collect_atom_vars(&mut s);
        s
    }

    pub fn collect_term_vars(&self, out: &mut BTreeSet<TermVar>) {
        match self {
            Term::Atom(_) => {}
            Term::Var(_, x) => {
                out.insert(x.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_term_vars(out)),
            Term::Abs(_, body) => body.collect_term_vars(out),
        }
    }

    pub fn term_vars(&self) -> BTreeSet<TermVar> {
        let mut s = BTreeSet::new();
        self.collect_term_vars(&mut s);
        s
    }

    pub fn collect_symbols(&self, out: &mut BTreeSet<FunSymbol>) {
        match self {
            Term::App(f, args) => {
                out.insert(f.clone());
                args.iter().for_each(|a| a.collect_symbols(out));
            }
            Term::Abs(_, body) => body.collect_symbols(out),
            _ => {}
        }
    }

    /// Node count where an n-ary associative application counts as n-1
    /// binary nodes. Strictly decreases under every decomposition rule.
    pub fn size(&self) -> usize {
        match self {
            Term::Atom(_) | Term::Var(..) => 1,
            Term::App(f, args) => {
                let own = if f.theory.is_assoc() { args.len().saturating_sub(1) } else { 1 };
                own + args.iter().map(Term::size).sum::<usize>()
            }
            Term::Abs(_, body) => 1 + body.size(),
        }
    }

    pub fn rename(&self, fa: &dyn Fn(&AtomVar) -> AtomVar, fx: &dyn Fn(&TermVar) -> TermVar) -> Term {
        match self {
            Term::Atom(s) => Term::Atom(s.rename_atoms(fa)),
            Term::Var(p, x) => Term::Var(p.rename_atoms(fa), fx(x)),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.rename(fa, fx)).collect()),
            Term::Abs(w, body) => Term::abs(w.rename_atoms(fa), body.rename(fa, fx)),
        }
    }
}

pub fn apply_permutation_nla(p: &Perm, t: &Term) -> Term {
    t.permute(p)
}

pub fn apply_substitution(t: &Term, s: &Subst) -> Term {
    t.subst(s)
}

pub fn flatten(t: &Term) -> Term {
    t.flatten()
}

// ===== ground terms =====

/// A ground permutation as a swap list, outermost first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct GPerm(pub Vec<(Atom, Atom)>);

impl GPerm {
    pub fn id() -> Self {
        GPerm(Vec::new())
    }

    pub fn apply(&self, a: &Atom) -> Atom {
        let mut cur = a.clone();
        for (x, y) in self.0.iter().rev() {
            if cur == *x {
                cur = y.clone();
            } else if cur == *y {
                cur = x.clone();
            }
        }
        cur
    }

    pub fn inverse(&self) -> GPerm {
        GPerm(self.0.iter().rev().cloned().collect())
    }

    pub fn compose(&self, other: &GPerm) -> GPerm {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        GPerm(v)
    }

    pub fn support(&self) -> BTreeSet<Atom> {
        self.0.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect()
    }

    /// Atoms on which the two permutations differ.
    pub fn disagreement(&self, other: &GPerm) -> BTreeSet<Atom> {
        let mut sup = self.support();
        sup.extend(other.support());
        sup.into_iter().filter(|a| self.apply(a) != other.apply(a)).collect()
    }

    pub fn same_function(&self, other: &GPerm) -> bool {
        self.disagreement(other).is_empty()
    }
}

/// Terms over concrete atoms; permutations are applied on construction.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ground {
    Atom(Atom),
    App(FunSymbol, Vec<Ground>),
    Abs(Atom, Box<Ground>),
}

impl Ground {
    pub fn atom(name: &str) -> Ground {
        Ground::Atom(Atom::new(name))
    }

    pub fn app(sym: FunSymbol, args: Vec<Ground>) -> Ground {
        let args = flatten_args(&sym, args, |t| match t {
            Ground::App(g, inner) => Some((g, inner)),
            _ => None,
        });
        if sym.theory.is_assoc() && args.len() == 1 {
            return args.into_iter().next().unwrap();
        }
        Ground::App(sym, args)
    }

    pub fn abs(a: Atom, body: Ground) -> Ground {
        Ground::Abs(a, Box::new(body))
    }

    pub fn permute(&self, p: &GPerm) -> Ground {
        if p.0.is_empty() {
            return self.clone();
        }
        match self {
            Ground::Atom(a) => Ground::Atom(p.apply(a)),
            Ground::App(f, args) => Ground::App(f.clone(), args.iter().map(|a| a.permute(p)).collect()),
            Ground::Abs(a, body) => Ground::Abs(p.apply(a), Box::new(body.permute(p))),
        }
    }

    pub fn flatten(&self) -> Ground {
        match self {
            Ground::App(f, args) => Ground::app(f.clone(), args.iter().map(Ground::flatten).collect()),
            Ground::Abs(a, body) => Ground::abs(a.clone(), body.flatten()),
            t => t.clone(),
        }
    }

    pub fn free_atoms(&self) -> BTreeSet<Atom> {
        fn go(t: &Ground, bound: &mut Vec<Atom>, out: &mut BTreeSet<Atom>) {
            match t {
                Ground::Atom(a) => {
                    if !bound.contains(a) {
                        out.insert(a.clone());
                    }
                }
                Ground::App(_, args) => args.iter().for_each(|x| go(x, bound, out)),
                Ground::Abs(a, body) => {
                    bound.push(a.clone());
                    go(body, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        fn go(t: &Ground, out: &mut BTreeSet<Atom>) {
            match t {
                Ground::Atom(a) => {
                    out.insert(a.clone());
                }
                Ground::App(_, args) => args.iter().for_each(|x| go(x, out)),
                Ground::Abs(a, body) => {
                    out.insert(a.clone());
                    go(body, out);
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        match self {
            Ground::Atom(_) => 1,
            Ground::App(_, args) => 1 + args.iter().map(Ground::size).sum::<usize>(),
            Ground::Abs(_, body) => 1 + body.size(),
        }
    }
}

pub fn apply_permutation_ground(p: &GPerm, t: &Ground) -> Ground {
    t.permute(p)
}

// ===== substitutions =====

#[derive(Clone, PartialEq, Eq, Default)]
pub struct Subst {
    pub terms: BTreeMap<TermVar, Term>,
    pub atoms: BTreeMap<AtomVar, Susp>,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty() && self.atoms.is_empty()
    }

    pub fn bind_term(&mut self, x: TermVar, t: Term) {
        self.terms.insert(x, t);
    }

    pub fn bind_atom(&mut self, a: AtomVar, w: Susp) {
        self.atoms.insert(a, w);
    }

    /// Applies the substitution repeatedly until no bound variable remains.
    /// Only valid for acyclic binding sets.
    pub fn resolve(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        loop {
            let next = cur.subst(self);
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }
}

// ===== freshness constraints =====

/// `var # target`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreshnessConstraint {
    pub var: AtomVar,
    pub target: Term,
}

impl FreshnessConstraint {
    pub fn new(var: AtomVar, target: Term) -> Self {
        FreshnessConstraint { var, target }
    }

    /// `π·A # t` is stored as `A # π⁻¹·t`.
    pub fn from_susp(subject: &Susp, target: &Term) -> Self {
        FreshnessConstraint {
            var: subject.var.clone(),
            target: target.permute(&subject.perm.inverse()),
        }
    }

    pub fn subst(&self, s: &Subst) -> Self {
        let subject = Susp::var(self.var.clone()).subst(s);
        FreshnessConstraint::from_susp(&subject, &self.target.subst(s))
    }

    pub fn collect_atom_vars(&self, out: &mut BTreeSet<AtomVar>) {
        out.insert(self.var.clone());
        self.target.collect_atom_vars(out);
    }
}

/// One EQR pair: when the equality pattern of `members` is exactly `blocks`
/// (class index per member, in first-occurrence order), the body must hold;
/// a `None` body stands for `False`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EqrConstraint {
    pub members: Vec<Susp>,
    pub blocks: Vec<usize>,
    pub body: Option<Vec<(usize, Term)>>,
}

impl EqrConstraint {
    pub fn subst(&self, s: &Subst) -> Self {
        EqrConstraint {
            members: self.members.iter().map(|m| m.subst(s)).collect(),
            blocks: self.blocks.clone(),
            body: self
                .body
                .as_ref()
                .map(|b| b.iter().map(|(i, t)| (*i, t.subst(s))).collect()),
        }
    }

    pub fn collect_atom_vars(&self, out: &mut BTreeSet<AtomVar>) {
        self.members.iter().for_each(|m| m.collect_atom_vars(out));
        if let Some(b) = &self.body {
            b.iter().for_each(|(_, t)| t.collect_atom_vars(out));
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    Fresh(FreshnessConstraint),
    Eqr(EqrConstraint),
}

impl Constraint {
    pub fn fresh(var: AtomVar, target: Term) -> Constraint {
        Constraint::Fresh(FreshnessConstraint::new(var, target))
    }

    pub fn subst(&self, s: &Subst) -> Constraint {
        match self {
            Constraint::Fresh(c) => Constraint::Fresh(c.subst(s)),
            Constraint::Eqr(c) => Constraint::Eqr(c.subst(s)),
        }
    }

    pub fn collect_atom_vars(&self, out: &mut BTreeSet<AtomVar>) {
        match self {
            Constraint::Fresh(c) => c.collect_atom_vars(out),
            Constraint::Eqr(c) => c.collect_atom_vars(out),
        }
    }

    pub fn atom_vars(&self) -> BTreeSet<AtomVar> {
        let mut s = BTreeSet::new();
        self.collect_atom_vars(&mut s);
        s
    }

    pub fn collect_term_vars(&self, out: &mut BTreeSet<TermVar>) {
        match self {
            Constraint::Fresh(c) => c.target.collect_term_vars(out),
            Constraint::Eqr(c) => {
                if let Some(b) = &c.body {
                    b.iter().for_each(|(_, t)| t.collect_term_vars(out));
                }
            }
        }
    }
}

/// A finite set of constraints, kept sorted and duplicate-free.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Context {
    items: BTreeSet<Constraint>,
}

pub type FreshnessContext = Context;

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constraints(it: impl IntoIterator<Item = Constraint>) -> Self {
        Context { items: it.into_iter().collect() }
    }

    pub fn from_fresh(it: impl IntoIterator<Item = (AtomVar, Term)>) -> Self {
        Context::from_constraints(it.into_iter().map(|(a, t)| Constraint::fresh(a, t)))
    }

    pub fn insert(&mut self, c: Constraint) {
        self.items.insert(c);
    }

    pub fn add_fresh(&mut self, var: AtomVar, target: Term) {
        self.items.insert(Constraint::fresh(var, target));
    }

    pub fn extend(&mut self, other: &Context) {
        self.items.extend(other.items.iter().cloned());
    }

    pub fn union(&self, other: &Context) -> Context {
        let mut c = self.clone();
        c.extend(other);
        c
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn subst(&self, s: &Subst) -> Context {
        Context::from_constraints(self.items.iter().map(|c| c.subst(s)))
    }

    pub fn atom_vars(&self) -> BTreeSet<AtomVar> {
        let mut s = BTreeSet::new();
        self.items.iter().for_each(|c| c.collect_atom_vars(&mut s));
        s
    }

    pub fn term_vars(&self) -> BTreeSet<TermVar> {
        let mut s = BTreeSet::new();
        self.items.iter().for_each(|c| c.collect_term_vars(&mut s));
        s
    }

    pub fn rename(&self, fa: &dyn Fn(&AtomVar) -> AtomVar, fx: &dyn Fn(&TermVar) -> TermVar) -> Context {
        let mut s = Subst::new();
        for a in self.atom_vars() {
            s.bind_atom(a.clone(), Susp::var(fa(&a)));
        }
        for x in self.term_vars() {
            s.bind_term(x.clone(), Term::Var(Perm::id(), fx(&x)));
        }
        self.subst(&s)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermInContext {
    pub context: Context,
    pub term: Term,
}

impl TermInContext {
    pub fn new(context: Context, term: Term) -> Self {
        TermInContext { context, term }
    }

    pub fn atom_vars(&self) -> BTreeSet<AtomVar> {
        let mut s = self.context.atom_vars();
        self.term.collect_atom_vars(&mut s);
        s
    }

    pub fn term_vars(&self) -> BTreeSet<TermVar> {
        let mut s = self.context.term_vars();
        self.term.collect_term_vars(&mut s);
        s
    }
}

// ===== fresh names =====

/// Generates names with the reserved prefix; safe to share across threads.
#[derive(Debug, Default)]
pub struct NameGen {
    counter: AtomicU64,
}

impl NameGen {
    pub fn new() -> Self {
        Self::default()
    }

    fn next(&self) -> u64 {
        self.counter.fetch_add(1, Ordering::Relaxed) + 1
    }

    pub fn atom_var(&self) -> AtomVar {
        AtomVar::new(&format!("{RESERVED_PREFIX}A{}", self.next()))
    }

    pub fn term_var(&self) -> TermVar {
        TermVar::new(&format!("{RESERVED_PREFIX}X{}", self.next()))
    }
}

pub fn is_reserved(name: &str) -> bool {
    name.starts_with(RESERVED_PREFIX)
}

pub fn atom_vars_of_terms<'a>(ts: impl IntoIterator<Item = &'a Term>) -> BTreeSet<AtomVar> {
    let mut s = BTreeSet::new();
    for t in ts {
        t.collect_atom_vars(&mut s);
    }
    s
}
