//! The anti-unification state machine.
//!
//! A state is `P; S; Γ; σ`: open equations, the store of solved differences,
//! the context built so far (starting from the input context) and the
//! substitution for generalization variables. Search always works on the most
//! recently added open equation; the deterministic rules never branch, the
//! A, C and AC decompositions do. Once `P` is empty the store is merged to a
//! fixpoint and the state is final.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::eqvm::eqvm;
use crate::semantics::{every_model_extends, holds_atom_eq, holds_eq};
use crate::term::{
    is_reserved, AtomVar, Constraint, Context, FunSymbol, Perm, Subst, Susp, Term, TermInContext, TermVar, Theory,
    RESERVED_PREFIX,
};

/// A generalization variable: term-variables label open equations and most
/// store entries, atom-variables label differing atom suspensions.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Genvar {
    Term(TermVar),
    Atom(AtomVar),
}

impl Genvar {
    pub fn to_term(&self) -> Term {
        match self {
            Genvar::Term(x) => Term::Var(Perm::id(), x.clone()),
            Genvar::Atom(a) => Term::Atom(Susp::var(a.clone())),
        }
    }

    fn same_kind(&self, other: &Genvar) -> bool {
        matches!((self, other), (Genvar::Term(_), Genvar::Term(_)) | (Genvar::Atom(_), Genvar::Atom(_)))
    }
}

impl fmt::Display for Genvar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Genvar::Term(x) => write!(f, "{x}"),
            Genvar::Atom(a) => write!(f, "{a}"),
        }
    }
}

/// `var: left ≜ right`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AuEquation {
    pub var: Genvar,
    pub left: Term,
    pub right: Term,
}

impl AuEquation {
    fn open(var: TermVar, left: Term, right: Term) -> Self {
        AuEquation { var: Genvar::Term(var), left, right }
    }

    fn size(&self) -> usize {
        self.left.size() + self.right.size()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Rule {
    Dec,
    Abs,
    SusAA,
    SusYY,
    SolAB,
    Sol,
    Mer,
    DecA,
    DecC,
    DecAC,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Dec => "Dec",
            Rule::Abs => "Abs",
            Rule::SusAA => "SusAA",
            Rule::SusYY => "SusYY",
            Rule::SolAB => "SolAB",
            Rule::Sol => "Sol",
            Rule::Mer => "Mer",
            Rule::DecA => "DecA",
            Rule::DecC => "DecC",
            Rule::DecAC => "DecAC",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(total size of P, |S|)`, compared lexicographically.
pub type Measure = (usize, usize);

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub rule: Rule,
    /// Measure of the state produced by this step.
    pub measure: Measure,
}

/// One rule application, addressed by the index of its open equation (or of
/// its store entries for `Mer`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RuleInstance {
    Dec(usize),
    Abs(usize),
    SusAA(usize),
    SusYY(usize),
    SolAB(usize),
    Sol(usize),
    DecA { eq: usize, k: usize, l: usize },
    DecC { eq: usize, swapped: bool },
    /// Argument positions that go to the first new equation on each side.
    DecAC { eq: usize, left: Vec<usize>, right: Vec<usize> },
    Mer { keep: usize, drop: usize, perm: Perm },
}

impl RuleInstance {
    pub fn rule(&self) -> Rule {
        match self {
            RuleInstance::Dec(_) => Rule::Dec,
            RuleInstance::Abs(_) => Rule::Abs,
            RuleInstance::SusAA(_) => Rule::SusAA,
            RuleInstance::SusYY(_) => Rule::SusYY,
            RuleInstance::SolAB(_) => Rule::SolAB,
            RuleInstance::Sol(_) => Rule::Sol,
            RuleInstance::DecA { .. } => Rule::DecA,
            RuleInstance::DecC { .. } => Rule::DecC,
            RuleInstance::DecAC { .. } => Rule::DecAC,
            RuleInstance::Mer { .. } => Rule::Mer,
        }
    }
}

#[derive(Clone, Debug)]
pub struct State {
    /// Open equations; the last one is worked on next.
    pub problems: Vec<AuEquation>,
    pub store: Vec<AuEquation>,
    pub gamma: Context,
    pub sigma: Subst,
    pub nabla: Context,
    pub root: TermVar,
    pub trace: Vec<Step>,
    next_name: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnauError {
    #[error("generalization variable {0} already occurs in the input")]
    NameClash(String),
    #[error("reversal failed: {0}")]
    Reversal(String),
}

fn reserved_index(name: &str) -> u64 {
    name.strip_prefix(RESERVED_PREFIX)
        .and_then(|r| r.get(1..))
        .and_then(|n| n.parse().ok())
        .unwrap_or(0)
}

fn input_names(ctx: &Context, s: &Term, t: &Term) -> (BTreeSet<AtomVar>, BTreeSet<TermVar>) {
    let mut av = ctx.atom_vars();
    s.collect_atom_vars(&mut av);
    t.collect_atom_vars(&mut av);
    let mut tv = ctx.term_vars();
    s.collect_term_vars(&mut tv);
    t.collect_term_vars(&mut tv);
    (av, tv)
}

/// Starts `{X: s ≜ t}; ∅; ∇; Id` with a generated `X`.
pub fn init_state(nabla: &Context, s: &Term, t: &Term) -> State {
    let (av, tv) = input_names(nabla, s, t);
    let first = av.iter().map(|a| reserved_index(a.name())).chain(tv.iter().map(|x| reserved_index(x.name()))).max();
    let mut st = blank_state(nabla, s, t, TermVar::new("_"), first.unwrap_or(0));
    st.root = st.fresh_term_var();
    st.problems = vec![AuEquation::open(st.root.clone(), s.flatten(), t.flatten())];
    st
}

/// Starts with a caller-chosen root variable, rejecting a clash with the input.
pub fn init_state_with(nabla: &Context, s: &Term, t: &Term, root: TermVar) -> Result<State, EnauError> {
    let (av, tv) = input_names(nabla, s, t);
    if tv.contains(&root) || av.iter().any(|a| a.name() == root.name()) {
        return Err(EnauError::NameClash(root.name().to_string()));
    }
    let first = av.iter().map(|a| reserved_index(a.name())).chain(tv.iter().map(|x| reserved_index(x.name()))).max();
    let mut st = blank_state(nabla, s, t, root.clone(), first.unwrap_or(0).max(reserved_index(root.name())));
    st.problems = vec![AuEquation::open(root, s.flatten(), t.flatten())];
    Ok(st)
}

fn blank_state(nabla: &Context, _s: &Term, _t: &Term, root: TermVar, next_name: u64) -> State {
    State {
        problems: Vec::new(),
        store: Vec::new(),
        gamma: nabla.clone(),
        sigma: Subst::new(),
        nabla: nabla.clone(),
        root,
        trace: Vec::new(),
        next_name,
    }
}

impl State {
    fn fresh_term_var(&mut self) -> TermVar {
        self.next_name += 1;
        TermVar::new(&format!("{RESERVED_PREFIX}X{}", self.next_name))
    }

    fn fresh_atom_var(&mut self) -> AtomVar {
        self.next_name += 1;
        AtomVar::new(&format!("{RESERVED_PREFIX}A{}", self.next_name))
    }

    pub fn measure(&self) -> Measure {
        (self.problems.iter().map(AuEquation::size).sum(), self.store.len())
    }

    pub fn is_final(&self) -> bool {
        self.problems.is_empty()
    }

    /// `Xσ`.
    pub fn generalization(&self) -> Term {
        self.sigma.resolve(&Term::Var(Perm::id(), self.root.clone()))
    }
}

pub fn measure(state: &State) -> Measure {
    state.measure()
}

// ===== rule selection =====

/// Rules applicable to one open equation. Exactly one deterministic rule
/// applies, or one or more decompositions, or `Sol`.
fn rules_for(state: &State, i: usize) -> Vec<RuleInstance> {
    let eq = &state.problems[i];
    match (&eq.left, &eq.right) {
        (Term::App(f, ts), Term::App(g, ss)) if f == g => decompositions(i, f, ts, ss),
        (Term::Abs(..), Term::Abs(..)) => vec![RuleInstance::Abs(i)],
        (Term::Atom(w1), Term::Atom(w2)) => {
            if holds_atom_eq(&state.gamma, w1, w2) {
                vec![RuleInstance::SusAA(i)]
            } else {
                vec![RuleInstance::SolAB(i)]
            }
        }
        (Term::Var(_, x), Term::Var(_, y)) if x == y && holds_eq(&state.gamma, &eq.left, &eq.right) => {
            vec![RuleInstance::SusYY(i)]
        }
        _ => vec![RuleInstance::Sol(i)],
    }
}

fn decompositions(i: usize, f: &FunSymbol, ts: &[Term], ss: &[Term]) -> Vec<RuleInstance> {
    match f.theory {
        Theory::Free => vec![RuleInstance::Dec(i)],
        Theory::C => {
            let mut out = vec![RuleInstance::DecC { eq: i, swapped: false }];
            if ts[0] != ts[1] && ss[0] != ss[1] {
                out.push(RuleInstance::DecC { eq: i, swapped: true });
            }
            out
        }
        Theory::A => {
            let mut out = Vec::new();
            for k in 1..ts.len() {
                for l in 1..ss.len() {
                    out.push(RuleInstance::DecA { eq: i, k, l });
                }
            }
            out
        }
        Theory::AC => ac_splits(ts, ss)
            .into_iter()
            .map(|(left, right)| RuleInstance::DecAC { eq: i, left, right })
            .collect(),
    }
}

fn sorted_part(args: &[Term], pick: &[usize]) -> Vec<Term> {
    let mut v: Vec<Term> = pick.iter().map(|&j| args[j].clone()).collect();
    v.sort();
    v
}

fn complement(n: usize, pick: &[usize]) -> Vec<usize> {
    (0..n).filter(|j| !pick.contains(j)).collect()
}

/// All ways to split both argument lists into two non-empty groups, up to
/// swapping the two resulting equations and up to repeated arguments.
fn ac_splits(ts: &[Term], ss: &[Term]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (n, m) = (ts.len(), ss.len());
    let subsets = |len: usize, need_first: bool| -> Vec<Vec<usize>> {
        (1u64..(1u64 << len) - 1)
            .filter(|mask| !need_first || mask & 1 == 1)
            .map(|mask| (0..len).filter(|j| mask >> j & 1 == 1).collect())
            .collect()
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for left in subsets(n, true) {
        let lc = complement(n, &left);
        for right in subsets(m, false) {
            let rc = complement(m, &right);
            let a = (sorted_part(ts, &left), sorted_part(ss, &right));
            let b = (sorted_part(ts, &lc), sorted_part(ss, &rc));
            let key = if a <= b { (a, b) } else { (b, a) };
            if seen.insert(key) {
                out.push((left.clone(), right));
            }
        }
    }
    out
}

/// Every applicable rule instance of the state.
pub fn applicable_rules(state: &State) -> Vec<RuleInstance> {
    if state.problems.is_empty() {
        return merge_candidates(state, usize::MAX);
    }
    (0..state.problems.len()).flat_map(|i| rules_for(state, i)).collect()
}

/// Pairs of store entries that `Mer` can join, with the permutation found.
fn merge_candidates(state: &State, limit: usize) -> Vec<RuleInstance> {
    let mut out = Vec::new();
    for keep in 0..state.store.len() {
        for drop in keep + 1..state.store.len() {
            let (a, b) = (&state.store[keep], &state.store[drop]);
            if !a.var.same_kind(&b.var) {
                continue;
            }
            let eqs = [(a.left.clone(), b.left.clone()), (a.right.clone(), b.right.clone())];
            if let Some(m) = eqvm(&eqs, &state.gamma) {
                out.push(RuleInstance::Mer { keep, drop, perm: m.to_permutation() });
                if out.len() >= limit {
                    return out;
                }
            }
        }
    }
    out
}

// ===== rule application =====

fn args_of(t: &Term) -> (&FunSymbol, &[Term]) {
    match t {
        Term::App(f, args) => (f, args),
        _ => unreachable!("decomposition applied to a non-application"),
    }
}

/// Applies one instance. The instance must come from `applicable_rules`.
pub fn apply_rule(state: &State, inst: &RuleInstance) -> State {
    let mut st = state.clone();
    match inst {
        RuleInstance::Mer { keep, drop, perm } => {
            let kept = st.store[*keep].var.clone();
            let dropped = st.store.remove(*drop).var;
            let mut bind = Subst::new();
            match (&dropped, &kept) {
                (Genvar::Term(z2), Genvar::Term(z1)) => bind.bind_term(z2.clone(), Term::Var(perm.clone(), z1.clone())),
                (Genvar::Atom(z2), Genvar::Atom(z1)) => bind.bind_atom(z2.clone(), Susp::new(perm.clone(), z1.clone())),
                _ => unreachable!("merge of different kinds"),
            }
            st.gamma = st.gamma.subst(&bind);
            extend_sigma(&mut st.sigma, bind);
        }
        _ => {
            let i = eq_index(inst);
            let eq = st.problems.remove(i);
            let Genvar::Term(x) = eq.var.clone() else { unreachable!("open equations carry term-variables") };
            let mut new_eqs = Vec::new();
            let image = match inst {
                RuleInstance::Dec(_) => {
                    let (f, ts) = args_of(&eq.left);
                    let (_, ss) = args_of(&eq.right);
                    let mut ys = Vec::new();
                    for (t, s) in ts.iter().zip(ss) {
                        let y = st.fresh_term_var();
                        ys.push(Term::Var(Perm::id(), y.clone()));
                        new_eqs.push(AuEquation::open(y, t.clone(), s.clone()));
                    }
                    Term::App(f.clone(), ys)
                }
                RuleInstance::Abs(_) => {
                    let (Term::Abs(w1, t), Term::Abs(w2, s)) = (&eq.left, &eq.right) else { unreachable!() };
                    let c = st.fresh_atom_var();
                    let cs = Susp::var(c.clone());
                    let y = st.fresh_term_var();
                    let left = t.permute(&Perm::swap(w1.clone(), cs.clone()));
                    let right = s.permute(&Perm::swap(w2.clone(), cs.clone()));
                    st.gamma.add_fresh(c.clone(), eq.left.clone());
                    st.gamma.add_fresh(c.clone(), eq.right.clone());
                    new_eqs.push(AuEquation::open(y.clone(), left, right));
                    Term::abs(cs, Term::Var(Perm::id(), y))
                }
                RuleInstance::SusAA(_) | RuleInstance::SusYY(_) => eq.left.clone(),
                RuleInstance::SolAB(_) => {
                    let (Term::Atom(w1), Term::Atom(w2)) = (&eq.left, &eq.right) else { unreachable!() };
                    let c = st.fresh_atom_var();
                    let cs = Susp::var(c.clone());
                    let witness = Term::abs(w1.clone(), Term::abs(w2.clone(), Term::Atom(cs.clone())));
                    st.gamma.add_fresh(c.clone(), witness);
                    st.store.push(AuEquation { var: Genvar::Atom(c), left: eq.left.clone(), right: eq.right.clone() });
                    Term::Atom(cs)
                }
                RuleInstance::Sol(_) => {
                    st.store.push(eq.clone());
                    Term::Var(Perm::id(), x.clone())
                }
                RuleInstance::DecA { k, l, .. } => {
                    let (f, ts) = args_of(&eq.left);
                    let (_, ss) = args_of(&eq.right);
                    split_into(&mut st, &mut new_eqs, f, [&ts[..*k], &ts[*k..]], [&ss[..*l], &ss[*l..]])
                }
                RuleInstance::DecC { swapped, .. } => {
                    let (f, ts) = args_of(&eq.left);
                    let (_, ss) = args_of(&eq.right);
                    let (s1, s2) = if *swapped { (&ss[1], &ss[0]) } else { (&ss[0], &ss[1]) };
                    let y1 = st.fresh_term_var();
                    let y2 = st.fresh_term_var();
                    new_eqs.push(AuEquation::open(y1.clone(), ts[0].clone(), s1.clone()));
                    new_eqs.push(AuEquation::open(y2.clone(), ts[1].clone(), s2.clone()));
                    Term::App(f.clone(), vec![Term::Var(Perm::id(), y1), Term::Var(Perm::id(), y2)])
                }
                RuleInstance::DecAC { left, right, .. } => {
                    let (f, ts) = args_of(&eq.left);
                    let (_, ss) = args_of(&eq.right);
                    let pick = |args: &[Term], idx: &[usize]| -> Vec<Term> { idx.iter().map(|&j| args[j].clone()).collect() };
                    let (t1, t2) = (pick(ts, left), pick(ts, &complement(ts.len(), left)));
                    let (s1, s2) = (pick(ss, right), pick(ss, &complement(ss.len(), right)));
                    split_into(&mut st, &mut new_eqs, f, [&t1, &t2], [&s1, &s2])
                }
                RuleInstance::Mer { .. } => unreachable!(),
            };
            // the first new equation is worked on first
            st.problems.extend(new_eqs.into_iter().rev());
            if !matches!(inst, RuleInstance::Sol(_)) {
                let mut bind = Subst::new();
                bind.bind_term(x, image);
                extend_sigma(&mut st.sigma, bind);
            }
        }
    }
    st.trace.push(Step { rule: inst.rule(), measure: st.measure() });
    st
}

fn eq_index(inst: &RuleInstance) -> usize {
    match inst {
        RuleInstance::Dec(i)
        | RuleInstance::Abs(i)
        | RuleInstance::SusAA(i)
        | RuleInstance::SusYY(i)
        | RuleInstance::SolAB(i)
        | RuleInstance::Sol(i) => *i,
        RuleInstance::DecA { eq, .. } | RuleInstance::DecC { eq, .. } | RuleInstance::DecAC { eq, .. } => *eq,
        RuleInstance::Mer { .. } => unreachable!(),
    }
}

fn split_into(
    st: &mut State,
    new_eqs: &mut Vec<AuEquation>,
    f: &FunSymbol,
    ts: [&[Term]; 2],
    ss: [&[Term]; 2],
) -> Term {
    let mut ys = Vec::new();
    for side in 0..2 {
        let y = st.fresh_term_var();
        ys.push(Term::Var(Perm::id(), y.clone()));
        new_eqs.push(AuEquation::open(y, Term::app(f.clone(), ts[side].to_vec()), Term::app(f.clone(), ss[side].to_vec())));
    }
    Term::App(f.clone(), ys)
}

/// `σ{bind}`: composes, keeping every earlier binding.
fn extend_sigma(sigma: &mut Subst, bind: Subst) {
    sigma.terms.extend(bind.terms);
    sigma.atoms.extend(bind.atoms);
}

// ===== search =====

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Maximum number of expanded states before the search gives up.
    pub max_states: usize,
    /// Worker threads; 1 runs sequentially.
    pub jobs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 10_000, jobs: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct GeneralizationResult {
    pub tic: TermInContext,
    pub store: Vec<AuEquation>,
    pub sigma: Subst,
    pub trace: Vec<Step>,
    /// Measure of the initial state; `trace` continues from it.
    pub initial_measure: Measure,
}

#[derive(Clone, Debug)]
pub struct EnauOutcome {
    pub results: Vec<GeneralizationResult>,
    /// Set when a limit cut the search short.
    pub incomplete: bool,
    pub states: usize,
}

/// Merges store entries until no pair is equivariant.
fn saturate(mut st: State) -> State {
    while let Some(inst) = merge_candidates(&st, 1).pop() {
        st = apply_rule(&st, &inst);
    }
    st
}

/// The successors of a non-final state: the rules for its newest equation.
fn successors(st: &State) -> Vec<State> {
    let i = st.problems.len() - 1;
    rules_for(st, i).iter().map(|inst| apply_rule(st, inst)).collect()
}

struct Shared {
    seen: Mutex<HashSet<String>>,
    expanded: AtomicUsize,
    incomplete: AtomicBool,
    max_states: usize,
}

impl Shared {
    /// Registers a state; false if an equivalent one was already visited or
    /// the budget is spent.
    fn admit(&self, st: &State, inputs: &InputNames) -> bool {
        if self.expanded.fetch_add(1, Ordering::Relaxed) >= self.max_states {
            self.incomplete.store(true, Ordering::Relaxed);
            return false;
        }
        let key = state_key(st, inputs);
        self.seen.lock().unwrap().insert(key)
    }
}

fn dfs(start: State, shared: &Shared, inputs: &InputNames, out: &mut Vec<State>) {
    let mut stack = vec![start];
    while let Some(st) = stack.pop() {
        if st.is_final() {
            out.push(saturate(st));
            continue;
        }
        if !shared.admit(&st, inputs) {
            continue;
        }
        let mut next = successors(&st);
        next.reverse();
        stack.extend(next);
    }
}

/// All final states reachable from `{X: s ≜ t}` under `∇`.
pub fn run_enau(nabla: &Context, s: &Term, t: &Term, limits: Limits) -> EnauOutcome {
    let init = init_state(nabla, s, t);
    run_from(init, nabla, s, t, limits)
}

pub fn run_from(init: State, nabla: &Context, s: &Term, t: &Term, limits: Limits) -> EnauOutcome {
    let inputs = InputNames::of(nabla, s, t);
    let initial_measure = init.measure();
    let shared = Shared {
        seen: Mutex::new(HashSet::new()),
        expanded: AtomicUsize::new(0),
        incomplete: AtomicBool::new(false),
        max_states: limits.max_states.max(1),
    };
    let mut finals = Vec::new();
    if limits.jobs <= 1 {
        dfs(init, &shared, &inputs, &mut finals);
    } else {
        // breadth-first until there is enough work to share
        let mut frontier = vec![init];
        while !frontier.is_empty() && frontier.len() < 4 * limits.jobs {
            let mut next = Vec::new();
            for st in frontier {
                if st.is_final() {
                    finals.push(saturate(st));
                } else if shared.admit(&st, &inputs) {
                    next.extend(successors(&st));
                }
            }
            frontier = next;
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(limits.jobs).build().expect("thread pool");
        let parts: Vec<Vec<State>> = pool.install(|| {
            frontier
                .into_par_iter()
                .map(|st| {
                    let mut out = Vec::new();
                    dfs(st, &shared, &inputs, &mut out);
                    out
                })
                .collect()
        });
        finals.extend(parts.into_iter().flatten());
    }
    let mut results: Vec<GeneralizationResult> =
        finals.into_iter().map(|st| finish(st, &inputs, initial_measure)).collect();
    results.sort_by_cached_key(|r| format!("{:?}", (&r.tic, &r.store)));
    results.dedup_by(|a, b| a.tic == b.tic && a.store == b.store);
    EnauOutcome {
        results,
        incomplete: shared.incomplete.load(Ordering::Relaxed),
        states: shared.expanded.load(Ordering::Relaxed),
    }
}

// ===== canonical naming =====

struct InputNames {
    atoms: BTreeSet<AtomVar>,
    terms: BTreeSet<TermVar>,
}

impl InputNames {
    fn of(nabla: &Context, s: &Term, t: &Term) -> Self {
        let (atoms, terms) = input_names(nabla, s, t);
        InputNames { atoms, terms }
    }
}

/// Variables in order of first occurrence.
#[derive(Default)]
struct Occurrences {
    atoms: Vec<AtomVar>,
    terms: Vec<TermVar>,
}

impl Occurrences {
    fn atom(&mut self, a: &AtomVar) {
        if !self.atoms.contains(a) {
            self.atoms.push(a.clone());
        }
    }

    fn perm(&mut self, p: &Perm) {
        for (a, b) in p.swaps() {
            self.susp(a);
            self.susp(b);
        }
    }

    fn susp(&mut self, w: &Susp) {
        self.perm(&w.perm);
        self.atom(&w.var);
    }

    fn term(&mut self, t: &Term) {
        match t {
            Term::Atom(w) => self.susp(w),
            Term::Var(p, x) => {
                self.perm(p);
                if !self.terms.contains(x) {
                    self.terms.push(x.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| self.term(a)),
            Term::Abs(w, body) => {
                self.susp(w);
                self.term(body);
            }
        }
    }

    fn context(&mut self, ctx: &Context) {
        for c in ctx.iter() {
            match c {
                Constraint::Fresh(f) => {
                    self.atom(&f.var);
                    self.term(&f.target);
                }
                Constraint::Eqr(e) => {
                    e.members.iter().for_each(|w| self.susp(w));
                    for (_, t) in e.body.iter().flatten() {
                        self.term(t);
                    }
                }
            }
        }
    }
}

/// Renames generated variables to `_X1, _X2, …` and `_A1, _A2, …` in order of
/// first occurrence, skipping names the input already uses.
struct Renaming {
    atoms: BTreeMap<AtomVar, AtomVar>,
    terms: BTreeMap<TermVar, TermVar>,
}

impl Renaming {
    fn new(occ: &Occurrences, inputs: &InputNames) -> Self {
        let mut atoms = BTreeMap::new();
        let mut n = 0;
        for a in occ.atoms.iter().filter(|a| is_reserved(a.name()) && !inputs.atoms.contains(*a)) {
            let name = loop {
                n += 1;
                let cand = AtomVar::new(&format!("{RESERVED_PREFIX}A{n}"));
                if !inputs.atoms.contains(&cand) {
                    break cand;
                }
            };
            atoms.insert(a.clone(), name);
        }
        let mut terms = BTreeMap::new();
        let mut n = 0;
        for x in occ.terms.iter().filter(|x| is_reserved(x.name()) && !inputs.terms.contains(*x)) {
            let name = loop {
                n += 1;
                let cand = TermVar::new(&format!("{RESERVED_PREFIX}X{n}"));
                if !inputs.terms.contains(&cand) {
                    break cand;
                }
            };
            terms.insert(x.clone(), name);
        }
        Renaming { atoms, terms }
    }

    fn atom(&self, a: &AtomVar) -> AtomVar {
        self.atoms.get(a).cloned().unwrap_or_else(|| a.clone())
    }

    fn term_var(&self, x: &TermVar) -> TermVar {
        self.terms.get(x).cloned().unwrap_or_else(|| x.clone())
    }

    fn term(&self, t: &Term) -> Term {
        t.rename(&|a| self.atom(a), &|x| self.term_var(x))
    }

    fn context(&self, c: &Context) -> Context {
        c.rename(&|a| self.atom(a), &|x| self.term_var(x))
    }

    fn genvar(&self, g: &Genvar) -> Genvar {
        match g {
            Genvar::Term(x) => Genvar::Term(self.term_var(x)),
            Genvar::Atom(a) => Genvar::Atom(self.atom(a)),
        }
    }

    fn equation(&self, e: &AuEquation) -> AuEquation {
        AuEquation { var: self.genvar(&e.var), left: self.term(&e.left), right: self.term(&e.right) }
    }
}

fn state_key(st: &State, inputs: &InputNames) -> String {
    let gen = st.generalization();
    let mut occ = Occurrences::default();
    occ.term(&gen);
    for e in st.problems.iter().rev().chain(&st.store) {
        occ.term(&e.var.to_term());
        occ.term(&e.left);
        occ.term(&e.right);
    }
    occ.context(&st.gamma);
    let r = Renaming::new(&occ, inputs);
    let problems: Vec<AuEquation> = st.problems.iter().map(|e| r.equation(e)).collect();
    let store: Vec<AuEquation> = st.store.iter().map(|e| r.equation(e)).collect();
    format!("{:?}", (r.term(&gen), problems, store, r.context(&st.gamma)))
}

fn finish(st: State, inputs: &InputNames, initial_measure: Measure) -> GeneralizationResult {
    let gen = st.generalization();
    let mut occ = Occurrences::default();
    occ.term(&gen);
    for e in &st.store {
        occ.term(&e.var.to_term());
        occ.term(&e.left);
        occ.term(&e.right);
    }
    occ.context(&st.gamma);
    for (x, t) in &st.sigma.terms {
        occ.term(&Term::Var(Perm::id(), x.clone()));
        occ.term(t);
    }
    for (a, w) in &st.sigma.atoms {
        occ.atom(a);
        occ.susp(w);
    }
    let r = Renaming::new(&occ, inputs);
    let mut sigma = Subst::new();
    for (x, t) in &st.sigma.terms {
        sigma.bind_term(r.term_var(x), r.term(t));
    }
    for (a, w) in &st.sigma.atoms {
        sigma.bind_atom(r.atom(a), w.rename_atoms(&|v| r.atom(v)));
    }
    GeneralizationResult {
        tic: TermInContext::new(r.context(&st.gamma), r.term(&gen)),
        store: st.store.iter().map(|e| r.equation(e)).collect(),
        sigma,
        trace: st.trace,
        initial_measure,
    }
}

// ===== soundness reversal =====

/// Substitutions sending each store variable to its left, resp. right, side.
pub fn reversal_substitutions(result: &GeneralizationResult) -> (Subst, Subst) {
    let mut left = Subst::new();
    let mut right = Subst::new();
    for e in &result.store {
        match (&e.var, &e.left, &e.right) {
            (Genvar::Term(x), l, r) => {
                left.bind_term(x.clone(), l.clone());
                right.bind_term(x.clone(), r.clone());
            }
            (Genvar::Atom(a), Term::Atom(l), Term::Atom(r)) => {
                left.bind_atom(a.clone(), l.clone());
                right.bind_atom(a.clone(), r.clone());
            }
            _ => unreachable!("atom store entries hold atom suspensions"),
        }
    }
    (left, right)
}

/// Checks that instantiating the result by each reversal substitution gives
/// back the corresponding input: every model of `∇` extends to a model of
/// `Γσᵢ`, and `∇ ∪ Γσᵢ ⊨ rσᵢ ≈ input`.
pub fn verify_result(result: &GeneralizationResult, nabla: &Context, s: &Term, t: &Term) -> Result<(), EnauError> {
    let (left, right) = reversal_substitutions(result);
    let (av, _) = input_names(nabla, s, t);
    let fixed: Vec<AtomVar> = av.into_iter().collect();
    for (side, sub, input) in [("left", &left, s), ("right", &right, t)] {
        let gamma = result.tic.context.subst(sub);
        if !every_model_extends(nabla, &fixed, &gamma) {
            return Err(EnauError::Reversal(format!("{side} context is not satisfiable under the input context")));
        }
        let inst = result.tic.term.subst(sub);
        if !holds_eq(&nabla.union(&gamma), &inst, &input.flatten()) {
            return Err(EnauError::Reversal(format!("{side} instance differs from the input")));
        }
    }
    Ok(())
}

/// True if every step of the trace strictly decreased the measure.
pub fn measure_decreases(result: &GeneralizationResult) -> bool {
    let mut prev = result.initial_measure;
    for step in &result.trace {
        if step.measure >= prev {
            return false;
        }
        prev = step.measure;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::entails;
    use crate::syntax::{parse_context, parse_term, Decls};

    fn decls() -> Decls {
        let mut d = Decls::new();
        d.declare_symbol("f", Theory::Free, 2).unwrap();
        d.declare_symbol("fac", Theory::AC, 2).unwrap();
        d.declare_symbol("fa", Theory::A, 2).unwrap();
        d.declare_symbol("fc", Theory::C, 2).unwrap();
        d.declare_symbol("g", Theory::Free, 1).unwrap();
        d.declare_symbol("c1", Theory::Free, 0).unwrap();
        d.declare_symbol("c2", Theory::Free, 0).unwrap();
        d.atom_vars.extend(["A", "B", "C", "D"].map(String::from));
        d.term_vars.extend(["X", "Y", "Z"].map(String::from));
        d
    }

    fn term(s: &str) -> Term {
        parse_term(s, &decls()).unwrap()
    }

    fn ctx(s: &str) -> Context {
        parse_context(s, &decls()).unwrap()
    }

    fn run(nabla: &str, s: &str, t: &str) -> (Context, Term, Term, EnauOutcome) {
        let (n, s, t) = (ctx(nabla), term(s), term(t));
        let out = run_enau(&n, &s, &t, Limits::default());
        for r in &out.results {
            verify_result(r, &n, &s, &t).unwrap();
            assert!(measure_decreases(r));
        }
        (n, s, t, out)
    }

    #[test]
    fn weak_completeness_example() {
        let (_, _, _, out) = run("", "f(c1, A)", "f(c2, A)");
        assert_eq!(out.results.len(), 1);
        let r = &out.results[0];
        let y = Term::Var(Perm::id(), TermVar::new("_X1"));
        assert_eq!(r.tic.term, Term::app(FunSymbol::new("f", 2, Theory::Free), vec![y, term("A")]));
        assert_eq!(r.store.len(), 1);
        assert_eq!(r.store[0].left, term("c1"));
        assert_eq!(r.store[0].right, term("c2"));
        assert!(r.tic.context.is_empty());
        let (l, rr) = reversal_substitutions(r);
        assert_eq!(r.tic.term.subst(&l), term("f(c1, A)"));
        assert_eq!(r.tic.term.subst(&rr), term("f(c2, A)"));
    }

    #[test]
    fn abstraction_step() {
        let n = Context::new();
        let mut st = init_state(&n, &term("f(lam A. A, Z)"), &term("f(lam B. C, Z)"));
        let rules = applicable_rules(&st);
        assert_eq!(rules, vec![RuleInstance::Dec(0)]);
        st = apply_rule(&st, &rules[0]);
        let abs = applicable_rules(&st).into_iter().find(|r| r.rule() == Rule::Abs).unwrap();
        st = apply_rule(&st, &abs);
        let open = st.problems.iter().find(|e| matches!(e.left, Term::Atom(_))).unwrap();
        let Term::Atom(d) = &open.left else { unreachable!() };
        let d = d.var.clone();
        assert_eq!(open.left, Term::Atom(Susp::var(d.clone())));
        let expected_right = Term::Atom(Susp::new(Perm::swap(Susp::named("B"), Susp::var(d.clone())), AtomVar::new("C")));
        assert_eq!(open.right, expected_right);
        let mut want = Context::new();
        want.add_fresh(d.clone(), term("lam A. A"));
        want.add_fresh(d.clone(), term("lam B. C"));
        assert!(want.iter().all(|c| st.gamma.iter().any(|g| g == c)));
        let gen = st.generalization();
        let Term::App(_, args) = &gen else { panic!() };
        assert!(matches!(&args[0], Term::Abs(w, _) if w.var == d));
    }

    #[test]
    fn example_four_derivation() {
        let (_, _, _, out) = run("A # B", "lam A. fac(A, A, B)", "lam B. fac(A, B, A)");
        assert!(!out.incomplete);
        let found = out.results.iter().find(|r| {
            if r.store.len() != 1 {
                return false;
            }
            let Term::Abs(c, body) = &r.tic.term else { return false };
            let e = &r.store[0];
            let Genvar::Atom(d) = &e.var else { return false };
            let pi = Perm::from_swaps(vec![
                (Susp::named("A"), Susp::var(c.var.clone())),
                (Susp::var(c.var.clone()), Susp::named("B")),
            ]);
            let dd = Term::Atom(Susp::var(d.clone()));
            let want = Term::app(
                FunSymbol::new("fac", 2, Theory::AC),
                vec![dd.clone(), dd.clone(), dd.permute(&pi)],
            );
            e.left == Term::Atom(c.clone())
                && e.right == Term::Atom(Susp::new(Perm::swap(Susp::named("B"), c.clone()), AtomVar::new("A")))
                && holds_eq(&r.tic.context, body, &want)
        });
        assert!(found.is_some(), "{:#?}", out.results.iter().map(|r| (&r.tic, &r.store)).collect::<Vec<_>>());
    }

    #[test]
    fn identical_inputs() {
        let (_, s, _, out) = run("", "f(g(c1), lam A. A)", "f(g(c1), lam A. A)");
        assert_eq!(out.results.len(), 1);
        let r = &out.results[0];
        assert!(r.store.is_empty());
        assert!(holds_eq(&r.tic.context, &r.tic.term, &s));
    }

    #[test]
    fn rule_choices() {
        let st = init_state(&Context::new(), &term("A"), &term("B"));
        assert_eq!(applicable_rules(&st), vec![RuleInstance::SolAB(0)]);
        let st = init_state(&Context::new(), &term("fa(c1, c2, g(Y))"), &term("fa(c2, g(Z))"));
        let ks: Vec<(usize, usize)> = applicable_rules(&st)
            .into_iter()
            .map(|r| match r {
                RuleInstance::DecA { k, l, .. } => (k, l),
                _ => panic!(),
            })
            .collect();
        assert_eq!(ks, vec![(1, 1), (2, 1)]);
        let st = init_state(&Context::new(), &term("fc(c1, c2)"), &term("fc(c2, c1)"));
        assert_eq!(applicable_rules(&st).len(), 2);
    }

    #[test]
    fn ac_splits_skip_repeats() {
        let a = term("c1");
        let splits = ac_splits(&[a.clone(), a.clone()], &[a.clone(), a.clone()]);
        assert_eq!(splits.len(), 1);
        let b = term("c2");
        assert_eq!(ac_splits(&[a.clone(), b.clone()], &[a, b]).len(), 2);
    }

    #[test]
    fn merge_uses_equivariance() {
        // both differences are the same up to renaming A to B
        let (_, _, _, out) = run("A # B", "f(g(A), g(B))", "f(c1, c1)");
        assert_eq!(out.results.len(), 1);
        let r = &out.results[0];
        assert_eq!(r.store.len(), 1);
        assert!(r.trace.iter().any(|s| s.rule == Rule::Mer));
    }

    #[test]
    fn name_clash_is_rejected() {
        let err = init_state_with(&Context::new(), &term("X"), &term("c1"), TermVar::new("X")).unwrap_err();
        assert_eq!(err, EnauError::NameClash("X".into()));
    }

    #[test]
    fn store_context_is_consistent_with_input() {
        let (n, _, _, out) = run("A # B", "A", "B");
        let r = &out.results[0];
        assert!(entails(&r.tic.context, &n));
        assert!(matches!(r.tic.term, Term::Atom(_)));
    }

    #[test]
    fn parallel_search_matches_sequential() {
        let (n, s, t) = (ctx("A # B"), term("lam A. fac(A, A, B)"), term("lam B. fac(A, B, A)"));
        let seq = run_enau(&n, &s, &t, Limits::default());
        let par = run_enau(&n, &s, &t, Limits { jobs: 4, ..Limits::default() });
        let key = |o: &EnauOutcome| o.results.iter().map(|r| format!("{:?}", (&r.tic, &r.store))).collect::<Vec<_>>();
        assert_eq!(key(&seq), key(&par));
    }
}
