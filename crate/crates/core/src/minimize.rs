//! The generality order on terms-in-context, constraint entailment,
//! EQR-based strengthening of computed generalizations, reduction of result
//! sets to pairwise incomparable ones, and the polynomial unique-lgg criteria
//! for single A, C and AC symbols over constants.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::ground::canon;
use crate::semantics::{every_model_extends, holds_atom_eq, holds_constraint, holds_eq, is_consistent, oracle_constant};
use crate::term::{
    AtomVar, Constraint, Context, EqrConstraint, FreshnessConstraint, FunSymbol, Ground, Perm, Subst, Susp, Term,
    TermInContext, TermVar, Theory,
};

// ===== matching =====

/// Finds substitutions `σ` for the variables of `pattern` with
/// `ctx ⊨ pattern·σ ≈_E target`. Structure is matched syntactically up to
/// A and AC regrouping; repeated variables are compared semantically.
struct Matcher<'a> {
    ctx: &'a Context,
    limit: usize,
    budget: usize,
    out: Vec<Subst>,
    /// Instances tried for atom-variables that occur only inside permutations.
    atoms: Vec<AtomVar>,
}

type Goals = Vec<(Term, Term)>;

fn perm_bound(p: &Perm, sub: &Subst) -> bool {
    let mut vs = BTreeSet::new();
    p.collect_atom_vars(&mut vs);
    vs.iter().all(|v| sub.atoms.contains_key(v))
}

fn ready(pattern: &Term, sub: &Subst) -> bool {
    match pattern {
        Term::Var(p, _) => perm_bound(p, sub),
        Term::Atom(w) => perm_bound(&w.perm, sub),
        Term::Abs(w, _) => perm_bound(&w.perm, sub),
        Term::App(..) => true,
    }
}

fn unbound_perm_var(pattern: &Term, sub: &Subst) -> Option<AtomVar> {
    let p = match pattern {
        Term::Var(p, _) => p,
        Term::Atom(w) | Term::Abs(w, _) => &w.perm,
        Term::App(..) => return None,
    };
    let mut vs = BTreeSet::new();
    p.collect_atom_vars(&mut vs);
    vs.into_iter().find(|v| !sub.atoms.contains_key(v))
}

fn is_var(t: &Term) -> bool {
    matches!(t, Term::Var(..))
}

impl Matcher<'_> {
    fn solve(&mut self, mut goals: Goals, mut sub: Subst) {
        if self.out.len() >= self.limit || self.budget == 0 {
            return;
        }
        self.budget -= 1;
        let Some(pos) = goals.iter().position(|(p, _)| ready(p, &sub)) else {
            match goals.iter().find_map(|(p, _)| unbound_perm_var(p, &sub)) {
                None => self.out.push(sub),
                Some(v) => {
                    // not fixed by any leaf: try each candidate atom, then a new one
                    let fresh = AtomVar::new(&format!("{}'", v.name()));
                    for a in self.atoms.clone().into_iter().chain([fresh]) {
                        let mut next = sub.clone();
                        next.bind_atom(v.clone(), Susp::var(a));
                        self.solve(goals.clone(), next);
                    }
                }
            }
            return;
        };
        let (pat, target) = goals.remove(pos);
        match (&pat, &target) {
            (Term::Var(p, x), _) => {
                let p = p.subst(&sub);
                if let Some(bound) = sub.terms.get(x) {
                    if !holds_eq(self.ctx, &bound.permute(&p), &target) {
                        return;
                    }
                } else {
                    sub.bind_term(x.clone(), target.permute(&p.inverse()));
                }
                self.solve(goals, sub);
            }
            (Term::Atom(w), Term::Atom(v)) => {
                if self.bind_atom(w, v, &mut sub) {
                    self.solve(goals, sub);
                }
            }
            (Term::Abs(w, pb), Term::Abs(v, tb)) => {
                if self.bind_atom(w, v, &mut sub) {
                    goals.push(((**pb).clone(), (**tb).clone()));
                    self.solve(goals, sub);
                }
            }
            (Term::App(f, ps), Term::App(g, ts)) if f == g => {
                for extra in arg_alignments(f, ps, ts) {
                    let mut next = goals.clone();
                    next.extend(extra);
                    self.solve(next, sub.clone());
                }
            }
            _ => {}
        }
    }

    fn bind_atom(&self, w: &Susp, v: &Susp, sub: &mut Subst) -> bool {
        let p = w.perm.subst(sub);
        if sub.atoms.contains_key(&w.var) {
            holds_atom_eq(self.ctx, &w.subst(sub), v)
        } else {
            sub.bind_atom(w.var.clone(), Susp::new(p.inverse().compose(&v.perm), v.var.clone()));
            true
        }
    }
}

/// Ways to pair pattern arguments with target arguments. Under A and AC a
/// pattern variable may take several target arguments.
fn arg_alignments(f: &FunSymbol, ps: &[Term], ts: &[Term]) -> Vec<Goals> {
    match f.theory {
        Theory::Free => {
            if ps.len() != ts.len() {
                return Vec::new();
            }
            vec![ps.iter().cloned().zip(ts.iter().cloned()).collect()]
        }
        Theory::C => {
            let straight: Goals = vec![(ps[0].clone(), ts[0].clone()), (ps[1].clone(), ts[1].clone())];
            let crossed: Goals = vec![(ps[0].clone(), ts[1].clone()), (ps[1].clone(), ts[0].clone())];
            if ts[0] == ts[1] {
                vec![straight]
            } else {
                vec![straight, crossed]
            }
        }
        Theory::A => {
            let mut out = Vec::new();
            segments(f, ps, ts, 0, 0, &mut Vec::new(), &mut out);
            out
        }
        Theory::AC => ac_alignments(f, ps, ts),
    }
}

fn segments(f: &FunSymbol, ps: &[Term], ts: &[Term], i: usize, j: usize, acc: &mut Goals, out: &mut Vec<Goals>) {
    if i == ps.len() {
        if j == ts.len() {
            out.push(acc.clone());
        }
        return;
    }
    let rest = ps.len() - i - 1;
    let max_len = if is_var(&ps[i]) { ts.len().saturating_sub(j + rest) } else { 1 };
    for len in 1..=max_len {
        if j + len > ts.len() {
            break;
        }
        acc.push((ps[i].clone(), Term::app(f.clone(), ts[j..j + len].to_vec())));
        segments(f, ps, ts, i + 1, j + len, acc, out);
        acc.pop();
    }
}

fn ac_alignments(f: &FunSymbol, ps: &[Term], ts: &[Term]) -> Vec<Goals> {
    let n = ps.len();
    if n > ts.len() {
        return Vec::new();
    }
    // owner[j] = pattern index taking target j
    let mut owner = vec![usize::MAX; ts.len()];
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    fn go(
        f: &FunSymbol,
        ps: &[Term],
        ts: &[Term],
        j: usize,
        owner: &mut Vec<usize>,
        out: &mut Vec<Goals>,
        seen: &mut BTreeSet<Vec<(Term, Vec<Term>)>>,
    ) {
        if j == ts.len() {
            let mut groups: Vec<Vec<Term>> = vec![Vec::new(); ps.len()];
            for (k, &o) in owner.iter().enumerate() {
                groups[o].push(ts[k].clone());
            }
            if groups.iter().any(Vec::is_empty) {
                return;
            }
            let mut key: Vec<(Term, Vec<Term>)> = ps
                .iter()
                .cloned()
                .zip(groups.iter().map(|g| {
                    let mut g = g.clone();
                    g.sort();
                    g
                }))
                .collect();
            key.sort();
            if seen.insert(key) {
                out.push(ps.iter().cloned().zip(groups.into_iter().map(|g| Term::app(f.clone(), g))).collect());
            }
            return;
        }
        for i in 0..ps.len() {
            let taken = owner[..j].iter().filter(|&&o| o == i).count();
            if taken > 0 && !is_var(&ps[i]) {
                continue;
            }
            owner[j] = i;
            go(f, ps, ts, j + 1, owner, out, seen);
        }
        owner[j] = usize::MAX;
    }
    go(f, ps, ts, 0, &mut owner, &mut out, &mut seen);
    out
}

// ===== generality order =====

#[derive(Clone, Copy, Debug)]
pub struct SubsetConfig {
    /// Maximum number of matchers tried.
    pub max_matches: usize,
    /// Maximum number of search nodes in the matcher.
    pub max_steps: usize,
}

impl Default for SubsetConfig {
    fn default() -> Self {
        SubsetConfig { max_matches: 512, max_steps: 200_000 }
    }
}

/// Renames every variable of `tc` with a prefix that `avoid` does not use.
fn rename_apart(tc: &TermInContext, avoid: &TermInContext) -> TermInContext {
    let names: BTreeSet<String> = avoid
        .atom_vars()
        .iter()
        .map(|a| a.name().to_string())
        .chain(avoid.term_vars().iter().map(|x| x.name().to_string()))
        .collect();
    let mut prefix = String::from("'");
    while names.iter().any(|n| n.starts_with(&prefix)) {
        prefix.push('\'');
    }
    let fa = |a: &AtomVar| AtomVar::new(&format!("{prefix}{}", a.name()));
    let fx = |x: &TermVar| TermVar::new(&format!("{prefix}{}", x.name()));
    TermInContext::new(tc.context.rename(&fa, &fx), tc.term.rename(&fa, &fx))
}

/// `⟦candidate⟧ ⊆ ⟦reference⟧`: some instance of the reference term equals
/// the candidate term under the candidate's context, and every model of the
/// candidate's context extends to one of the instantiated reference context.
pub fn tic_subset(candidate: &TermInContext, reference: &TermInContext) -> bool {
    tic_subset_with(candidate, reference, &SubsetConfig::default())
}

pub fn tic_subset_with(candidate: &TermInContext, reference: &TermInContext, cfg: &SubsetConfig) -> bool {
    if !is_consistent(&candidate.context) {
        return true;
    }
    let reference = rename_apart(reference, candidate);
    let cand_term = candidate.term.flatten();
    let atoms = candidate.atom_vars().into_iter().collect();
    let mut m =
        Matcher { ctx: &candidate.context, limit: cfg.max_matches, budget: cfg.max_steps, out: Vec::new(), atoms };
    m.solve(vec![(reference.term.flatten(), cand_term.clone())], Subst::new());
    let fixed: Vec<AtomVar> = candidate.atom_vars().into_iter().collect();
    m.out.into_iter().any(|mut sigma| {
        // variables seen only in the context are existential; a closed term
        // satisfies every freshness constraint on them
        for x in reference.context.term_vars() {
            sigma.terms.entry(x).or_insert_with(|| Term::App(oracle_constant(), Vec::new()));
        }
        let ctx = reference.context.subst(&sigma);
        holds_eq(&candidate.context, &reference.term.subst(&sigma), &cand_term)
            && every_model_extends(&candidate.context, &fixed, &ctx)
    })
}

/// Both directions of `tic_subset`.
pub fn tic_equivalent(a: &TermInContext, b: &TermInContext) -> bool {
    tic_subset(a, b) && tic_subset(b, a)
}

/// `∇ ⊢ A # r`.
pub fn entails_constraint(ctx: &Context, c: &FreshnessConstraint) -> bool {
    holds_constraint(ctx, &Constraint::Fresh(c.clone()))
}

// ===== post-processing =====

#[derive(Clone, Copy, Debug)]
pub struct PostConfig {
    /// Maximum number of candidate constraints tested.
    pub budget: usize,
    /// Equality patterns are enumerated only up to this many atom-variables.
    pub max_partition_vars: usize,
}

impl Default for PostConfig {
    fn default() -> Self {
        PostConfig { budget: 2_000, max_partition_vars: 6 }
    }
}

#[derive(Clone, Debug)]
pub struct PostOutcome {
    pub tic: TermInContext,
    /// Constraints added to the context, in order.
    pub added: Vec<Constraint>,
    /// Set when candidates were left untested.
    pub budget_exceeded: bool,
}

fn fresh_c(a: &AtomVar, t: Term) -> Constraint {
    Constraint::fresh(a.clone(), t)
}

fn var_term(x: &TermVar) -> Term {
    Term::Var(Perm::id(), x.clone())
}

fn atom_term(a: &AtomVar) -> Term {
    Term::Atom(Susp::var(a.clone()))
}

/// Set partitions of `vars` as restricted-growth block vectors.
fn block_patterns(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(i: usize, n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..=max {
            cur.push(b);
            go(i + 1, n, max.max(b + 1), cur, out);
            cur.pop();
        }
    }
    go(0, n, 0, &mut Vec::new(), &mut out);
    out
}

/// Candidate strengthenings: plain constraints first, then one EQR pair per
/// equality pattern of the atom-variables (forbidding it, or adding one
/// freshness fact under it).
fn candidates(tic: &TermInContext, cfg: &PostConfig) -> Vec<Constraint> {
    let avars: Vec<AtomVar> = tic.atom_vars().into_iter().collect();
    let tvars: Vec<TermVar> = tic.term.term_vars().into_iter().collect();
    let mut out = Vec::new();
    for a in &avars {
        for x in &tvars {
            out.push(fresh_c(a, var_term(x)));
        }
    }
    for (i, a) in avars.iter().enumerate() {
        for b in &avars[i + 1..] {
            out.push(fresh_c(a, atom_term(b)));
        }
    }
    for a in &avars {
        for b in avars.iter().filter(|b| *b != a) {
            for x in &tvars {
                out.push(fresh_c(a, Term::abs(Susp::var(b.clone()), var_term(x))));
            }
        }
    }
    if !avars.is_empty() && avars.len() <= cfg.max_partition_vars {
        let members: Vec<Susp> = avars.iter().map(|v| Susp::var(v.clone())).collect();
        for blocks in block_patterns(avars.len()) {
            let eqr = |body| Constraint::Eqr(EqrConstraint { members: members.clone(), blocks: blocks.clone(), body });
            out.push(eqr(None));
            let reps: Vec<usize> = (0..=blocks.iter().copied().max().unwrap_or(0))
                .filter_map(|b| blocks.iter().position(|&x| x == b))
                .collect();
            for &r in &reps {
                for x in &tvars {
                    out.push(eqr(Some(vec![(r, var_term(x))])));
                }
            }
        }
    }
    out
}

/// Greedily strengthens the context of `result` while it still generalizes
/// both inputs.
pub fn post_process(result: &TermInContext, left: &TermInContext, right: &TermInContext, cfg: &PostConfig) -> PostOutcome {
    let mut cur = result.clone();
    let mut added = Vec::new();
    let mut tested = 0;
    let mut budget_exceeded = false;
    for c in candidates(result, cfg) {
        if holds_constraint(&cur.context, &c) {
            continue;
        }
        if tested >= cfg.budget {
            budget_exceeded = true;
            break;
        }
        tested += 1;
        let mut ctx = cur.context.clone();
        ctx.insert(c.clone());
        let next = TermInContext::new(ctx, cur.term.clone());
        if tic_subset(left, &next) && tic_subset(right, &next) {
            cur = next;
            added.push(c);
        }
    }
    PostOutcome { tic: cur, added, budget_exceeded }
}

// ===== minimal sets =====

/// Indices of the elements kept: those with no strictly more specific
/// element, and of each group of equivalent elements the first.
pub fn minimize_set(items: &[TermInContext]) -> Vec<usize> {
    let n = items.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let subset: BTreeSet<(usize, usize)> =
        pairs.into_par_iter().filter(|&(i, j)| tic_subset(&items[i], &items[j])).collect();
    (0..n)
        .filter(|&i| {
            !(0..n).any(|j| {
                j != i && subset.contains(&(j, i)) && (!subset.contains(&(i, j)) || j < i)
            })
        })
        .collect()
}

// ===== unique lgg criteria =====

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("expected an application of one {0} symbol")]
    NotApplication(&'static str),
    #[error("the two terms have different head symbols")]
    DifferentHeads,
    #[error("arguments must be constants")]
    NotConstant,
}

fn numbered_vars(k: usize, start: usize) -> Vec<Term> {
    (0..k).map(|i| var_term(&TermVar::new(&format!("X{}", start + i + 1)))).collect()
}

fn ground_to_term(g: &Ground) -> Term {
    match g {
        Ground::Atom(a) => Term::Atom(Susp::named(a.name())),
        Ground::App(f, args) => Term::App(f.clone(), args.iter().map(ground_to_term).collect()),
        Ground::Abs(a, body) => Term::abs(Susp::named(a.name()), ground_to_term(body)),
    }
}

fn head<'a>(g: &'a Ground, theory: Theory, what: &'static str) -> Result<(&'a FunSymbol, &'a [Ground]), ShapeError> {
    match g {
        Ground::App(f, args) if f.theory == theory => Ok((f, args)),
        _ => Err(ShapeError::NotApplication(what)),
    }
}

fn constant_args<'a>(g: &'a Ground, theory: Theory, what: &'static str) -> Result<(&'a FunSymbol, Vec<&'a str>), ShapeError> {
    let (f, args) = head(g, theory, what)?;
    let names = args
        .iter()
        .map(|a| match a {
            Ground::App(c, inner) if inner.is_empty() && c.arity == 0 => Ok(c.name.as_ref()),
            _ => Err(ShapeError::NotConstant),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((f, names))
}

fn counts<'a>(xs: &[&'a str]) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for x in xs {
        *m.entry(*x).or_insert(0) += 1;
    }
    m
}

/// The AC criterion: `None` when it does not apply.
pub fn unique_lgg_ac(s: &Ground, t: &Ground) -> Result<Option<Term>, ShapeError> {
    let (f, ss) = constant_args(s, Theory::AC, "AC")?;
    let (g, ts) = constant_args(t, Theory::AC, "AC")?;
    if f != g {
        return Err(ShapeError::DifferentHeads);
    }
    let (cs, ct) = (counts(&ss), counts(&ts));
    if cs == ct {
        return Ok(Some(ground_to_term(s)));
    }
    let mut m1 = Vec::new();
    let (mut m2, mut m3) = (0usize, 0usize);
    for (c, &n) in &cs {
        let shared = n.min(ct.get(c).copied().unwrap_or(0));
        let rest = n - shared;
        if shared > 1 || rest > 1 {
            return Ok(None);
        }
        if shared == 1 {
            m1.push(*c);
        }
        m2 += rest;
    }
    for (c, &n) in &ct {
        let shared = n.min(cs.get(c).copied().unwrap_or(0));
        let rest = n - shared;
        if rest > 1 {
            return Ok(None);
        }
        m3 += rest;
    }
    if m2 == 0 || m3 == 0 {
        return Ok(None);
    }
    // keep the shared constants in their order of appearance in `s`
    let mut shared: Vec<Term> = Vec::new();
    let mut left: BTreeSet<&str> = m1.into_iter().collect();
    let Ground::App(_, sargs) = s else { unreachable!() };
    for a in sargs {
        if let Ground::App(c, _) = a {
            if left.remove(c.name.as_ref()) {
                shared.push(ground_to_term(a));
            }
        }
    }
    shared.extend(numbered_vars(m2.min(m3), 0));
    Ok(Some(Term::app(f.clone(), shared)))
}

/// `(constant, depth)` pairs counted with multiplicity; the root's
/// arguments have depth 1.
pub type DepthMultiset = BTreeMap<(String, usize), usize>;

pub fn depth_multiset(s: &Ground) -> DepthMultiset {
    fn go(g: &Ground, depth: usize, out: &mut DepthMultiset) {
        match g {
            Ground::App(c, args) if args.is_empty() => *out.entry((c.name.to_string(), depth)).or_insert(0) += 1,
            Ground::App(_, args) => args.iter().for_each(|a| go(a, depth + 1, out)),
            Ground::Atom(a) => *out.entry((a.name().to_string(), depth)).or_insert(0) += 1,
            Ground::Abs(_, body) => go(body, depth + 1, out),
        }
    }
    let mut out = DepthMultiset::new();
    go(s, 0, &mut out);
    out
}

fn c_shape(g: &Ground, f: &FunSymbol) -> Result<(), ShapeError> {
    match g {
        Ground::App(h, args) if args.is_empty() && h.arity == 0 => Ok(()),
        Ground::App(h, args) if h == f => args.iter().try_for_each(|a| c_shape(a, f)),
        Ground::App(..) => Err(ShapeError::DifferentHeads),
        _ => Err(ShapeError::NotConstant),
    }
}

fn star() -> FunSymbol {
    FunSymbol::constant("*")
}

/// Replaces maximal subterms with no kept constant occurrence by `*`.
fn starred(g: &Ground, keep: &BTreeSet<(String, usize)>, depth: usize) -> (Ground, bool) {
    match g {
        Ground::App(c, args) if args.is_empty() => {
            if keep.contains(&(c.name.to_string(), depth)) {
                (g.clone(), true)
            } else {
                (Ground::app(star(), vec![]), false)
            }
        }
        Ground::App(f, args) => {
            let parts: Vec<(Ground, bool)> = args.iter().map(|a| starred(a, keep, depth + 1)).collect();
            if parts.iter().any(|(_, k)| *k) {
                (Ground::app(f.clone(), parts.into_iter().map(|(p, _)| p).collect()), true)
            } else {
                (Ground::app(star(), vec![]), false)
            }
        }
        _ => (g.clone(), true),
    }
}

fn stars_to_vars(g: &Ground, next: &mut usize) -> Term {
    match g {
        Ground::App(c, args) if args.is_empty() && *c == star() => {
            *next += 1;
            var_term(&TermVar::new(&format!("X{next}")))
        }
        Ground::App(f, args) => Term::App(f.clone(), args.iter().map(|a| stars_to_vars(a, next)).collect()),
        other => ground_to_term(other),
    }
}

/// The C criterion: `None` when more than one lgg might exist.
pub fn unique_lgg_c(s: &Ground, t: &Ground) -> Result<Option<Term>, ShapeError> {
    let (f, _) = head(s, Theory::C, "C")?;
    let (g, _) = head(t, Theory::C, "C")?;
    if f != g {
        return Err(ShapeError::DifferentHeads);
    }
    c_shape(s, f)?;
    c_shape(t, f)?;
    if canon(s) == canon(t) {
        return Ok(Some(ground_to_term(s)));
    }
    let (ms, mt) = (depth_multiset(s), depth_multiset(t));
    if ms.values().chain(mt.values()).any(|&n| n > 1) {
        return Ok(None);
    }
    let shared: BTreeSet<(String, usize)> = ms.keys().filter(|k| mt.contains_key(*k)).cloned().collect();
    let (s_star, _) = starred(s, &shared, 0);
    let (t_star, _) = starred(t, &shared, 0);
    if canon(&s_star) != canon(&t_star) {
        return Ok(None);
    }
    Ok(Some(stars_to_vars(&s_star, &mut 0)))
}

/// Maximal runs of arguments, tagged with whether they are shared symbols.
fn runs<'a>(xs: &[&'a str], shared: &BTreeSet<&str>) -> Vec<(bool, Vec<&'a str>)> {
    let mut out: Vec<(bool, Vec<&str>)> = Vec::new();
    for x in xs {
        let q = shared.contains(x);
        match out.last_mut() {
            Some((tag, run)) if *tag == q => run.push(x),
            _ => out.push((q, vec![x])),
        }
    }
    out
}

/// Splits a run list into `Q₁ G₁ Q₂ … Gₙ₋₁ Qₙ` with possibly empty outer
/// `Q`s.
fn q_and_gaps(rs: Vec<(bool, Vec<&str>)>) -> (Vec<Vec<&str>>, Vec<Vec<&str>>) {
    let mut qs = Vec::new();
    let mut gaps = Vec::new();
    let mut expect_q = true;
    for (is_q, run) in rs {
        if expect_q && !is_q {
            qs.push(Vec::new());
        }
        if is_q {
            qs.push(run);
            expect_q = false;
        } else {
            gaps.push(run);
            expect_q = true;
        }
    }
    if expect_q {
        qs.push(Vec::new());
    }
    (qs, gaps)
}

fn linear(xs: &[&str]) -> bool {
    let mut seen = BTreeSet::new();
    xs.iter().all(|x| seen.insert(*x))
}

/// The A criterion: `None` when the strings do not decompose as required.
pub fn unique_lgg_a(s: &Ground, t: &Ground) -> Result<Option<Term>, ShapeError> {
    let (f, ss) = constant_args(s, Theory::A, "A")?;
    let (g, ts) = constant_args(t, Theory::A, "A")?;
    if f != g {
        return Err(ShapeError::DifferentHeads);
    }
    if ss == ts {
        return Ok(Some(ground_to_term(s)));
    }
    // a symbol in both strings can only belong to the common parts
    let in_s: BTreeSet<&str> = ss.iter().copied().collect();
    let in_t: BTreeSet<&str> = ts.iter().copied().collect();
    let shared: BTreeSet<&str> = in_s.intersection(&in_t).copied().collect();
    let (qs, s_gaps) = q_and_gaps(runs(&ss, &shared));
    let (qt, t_gaps) = q_and_gaps(runs(&ts, &shared));
    if qs != qt || s_gaps.len() != t_gaps.len() || s_gaps.is_empty() {
        return Ok(None);
    }
    let (q_all, s_all, t_all) = (qs.concat(), s_gaps.concat(), t_gaps.concat());
    if !linear(&q_all) || !linear(&s_all) || !linear(&t_all) {
        return Ok(None);
    }
    let Ground::App(_, sargs) = s else { unreachable!() };
    let by_name: BTreeMap<&str, &Ground> =
        sargs.iter().map(|a| (match a { Ground::App(c, _) => c.name.as_ref(), _ => unreachable!() }, a)).collect();
    let mut out = Vec::new();
    let mut next = 0;
    for (i, q) in qs.iter().enumerate() {
        out.extend(q.iter().map(|c| ground_to_term(by_name[c])));
        if i < s_gaps.len() {
            let k = s_gaps[i].len().min(t_gaps[i].len());
            out.extend(numbered_vars(k, next));
            next += k;
        }
    }
    Ok(Some(Term::app(f.clone(), out)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_term, term_to_ground, Decls};

    fn decls() -> Decls {
        let mut d = Decls::new();
        d.declare_symbol("f", Theory::Free, 2).unwrap();
        d.declare_symbol("g", Theory::Free, 1).unwrap();
        d.declare_symbol("fa", Theory::A, 2).unwrap();
        d.declare_symbol("fc", Theory::C, 2).unwrap();
        d.declare_symbol("fac", Theory::AC, 2).unwrap();
        d.declare_symbol("tup", Theory::Free, 3).unwrap();
        for c in ["a", "b", "c", "d", "c1", "c2", "c3", "c4", "c5", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8"] {
            d.declare_symbol(c, Theory::Free, 0).unwrap();
        }
        d.atom_vars.extend(["A", "B", "C", "D"].map(String::from));
        d.term_vars.extend(["X", "Y", "Z", "X1", "X2", "X3", "Y1"].map(String::from));
        d
    }

    fn term(s: &str) -> Term {
        parse_term(s, &decls()).unwrap()
    }

    fn tic(ctx: &str, t: &str) -> TermInContext {
        TermInContext::new(parse_context(ctx, &decls()).unwrap(), term(t))
    }

    fn ground(s: &str) -> Ground {
        term_to_ground(&term(s)).unwrap()
    }

    #[test]
    fn subset_examples() {
        assert!(tic_subset(&tic("A # X", "f(A, X)"), &tic("", "f(A, X)")));
        assert!(!tic_subset(&tic("", "f(A, X)"), &tic("A # X", "f(A, X)")));
        assert!(tic_equivalent(&tic("A # X", "f(A, X)"), &tic("B # Y", "f(B, Y)")));
        assert!(tic_subset(&tic("A # X", "f(A, g(X))"), &tic("A # X", "f(A, X)")));
        assert!(tic_equivalent(&tic("", "lam A. f(A, X)"), &tic("", "lam B. f(B, Y)")));
        assert!(!tic_subset(&tic("B # Y", "f(A, g(Y))"), &tic("A # X", "f(A, X)")));
        assert!(tic_subset(&tic("A # Y", "f(A, g(Y))"), &tic("A # X, B # Y", "f(A, X)")));
        assert!(!tic_subset(&tic("A # X, B # Y", "f(A, X)"), &tic("A # Y", "f(A, g(Y))")));
    }

    #[test]
    fn subset_modulo_theories() {
        assert!(tic_subset(&tic("", "fac(a, b, c)"), &tic("", "fac(X, b)")));
        assert!(!tic_subset(&tic("", "fac(a, b, c)"), &tic("", "fac(X, d)")));
        assert!(tic_subset(&tic("", "fa(a, b, c)"), &tic("", "fa(a, X)")));
        assert!(!tic_subset(&tic("", "fa(a, b, c)"), &tic("", "fa(b, X)")));
        assert!(tic_subset(&tic("", "fc(a, g(b))"), &tic("", "fc(g(X), Y)")));
        assert!(tic_subset(&tic("", "fac(X1, g(Y))"), &tic("", "fac(X, X2)")));
    }

    #[test]
    fn constraint_entailment() {
        let ctx = |s: &str| parse_context(s, &decls()).unwrap();
        let fc = |a: &str, t: &str| FreshnessConstraint::new(AtomVar::new(a), term(t));
        assert!(entails_constraint(&ctx("A # B"), &fc("A", "B")));
        assert!(!entails_constraint(&ctx(""), &fc("A", "B")));
        assert!(!entails_constraint(&ctx("A # lam B. Y"), &fc("A", "Y")));
        assert!(entails_constraint(&ctx("A # lam B. Y, A # B"), &fc("A", "Y")));
    }

    #[test]
    fn post_processing_repairs_weak_completeness() {
        let r = tic("", "f(Y1, A)");
        let out = post_process(&r, &tic("", "f(c1, A)"), &tic("", "f(c2, A)"), &PostConfig::default());
        assert_eq!(out.tic.context, parse_context("A # Y1", &decls()).unwrap());
        assert!(!out.budget_exceeded);
    }

    #[test]
    fn post_processing_uses_disjunctive_constraints() {
        let r = tic("", "tup(Y, A, B)");
        let out = post_process(&r, &tic("", "tup(g(A), A, B)"), &tic("", "tup(c, A, B)"), &PostConfig::default());
        assert!(tic_equivalent(&out.tic, &tic("B # lam A. Y", "tup(Y, A, B)")), "{:?}", out.tic);
    }

    #[test]
    fn post_processing_keeps_maximal_results() {
        let r = tic("", "f(c1, c2)");
        let out = post_process(&r, &tic("", "f(c1, c2)"), &tic("", "f(c1, c2)"), &PostConfig::default());
        assert_eq!(out.tic, r);
    }

    #[test]
    fn minimal_sets() {
        let items = vec![tic("", "fa(X1, X2)"), tic("", "fa(X1, g(Y1))")];
        assert_eq!(minimize_set(&items), vec![1]);
        let items = vec![tic("", "f(X, Y)"), tic("", "f(Y, X)")];
        assert_eq!(minimize_set(&items), vec![0]);
        assert_eq!(minimize_set(&items[..1]), vec![0]);
    }

    fn rename_free(t: &Term) -> String {
        format!("{t:?}")
    }

    #[test]
    fn ac_criterion() {
        let r = unique_lgg_ac(&ground("fac(s1, s2, s3, s4)"), &ground("fac(s5, s6, s1, s2)")).unwrap().unwrap();
        assert_eq!(rename_free(&r), rename_free(&term("fac(s1, s2, X1, X2)")));
        let r = unique_lgg_ac(&ground("fac(s1, s2, s3, s4)"), &ground("fac(s5, s6, s1, s2, s7, s8)")).unwrap().unwrap();
        assert_eq!(rename_free(&r), rename_free(&term("fac(s1, s2, X1, X2)")));
        assert_eq!(unique_lgg_ac(&ground("fac(s1, s2, s3)"), &ground("fac(s1, s2, s3, s4)")).unwrap(), None);
        let same = ground("fac(s1, s2)");
        assert_eq!(unique_lgg_ac(&same, &ground("fac(s2, s1)")).unwrap(), Some(term("fac(s1, s2)")));
    }

    #[test]
    fn depth_multisets() {
        let m = depth_multiset(&ground("fc(a, fc(a, b))"));
        let want: DepthMultiset = [(("a".to_string(), 1), 1), (("a".to_string(), 2), 1), (("b".to_string(), 2), 1)].into();
        assert_eq!(m, want);
        assert_eq!(depth_multiset(&ground("c")), [(("c".to_string(), 0), 1)].into());
        let m = depth_multiset(&ground("fc(fc(a, b), fc(c, fc(a, c)))"));
        let keys: BTreeSet<(String, usize)> = m.keys().cloned().collect();
        let want: BTreeSet<(String, usize)> =
            [("a", 2), ("b", 2), ("c", 2), ("a", 3), ("c", 3)].iter().map(|(c, d)| (c.to_string(), *d)).collect();
        assert_eq!(keys, want);
    }

    #[test]
    fn c_criterion() {
        let r = unique_lgg_c(&ground("fc(a, fc(a, b))"), &ground("fc(b, fc(a, d))")).unwrap().unwrap();
        assert_eq!(r, term("fc(X1, fc(a, X2))"));
        let r = unique_lgg_c(&ground("fc(a, fc(a, b))"), &ground("fc(a, fc(a, d))")).unwrap().unwrap();
        assert_eq!(r, term("fc(a, fc(a, X1))"));
        let none = unique_lgg_c(
            &ground("fc(fc(a, b), fc(c, fc(a, c)))"),
            &ground("fc(a, fc(fc(c, fc(a, c)), b))"),
        )
        .unwrap();
        assert_eq!(none, None);
    }

    #[test]
    fn a_criterion() {
        let r = unique_lgg_a(&ground("fa(a, b, c1, c2, c3, d)"), &ground("fa(a, b, c4, c5, d)")).unwrap().unwrap();
        assert_eq!(r, term("fa(a, b, X1, X2, d)"));
        let same = ground("fa(a, b, c)");
        assert_eq!(unique_lgg_a(&same, &same).unwrap(), Some(term("fa(a, b, c)")));
        assert_eq!(unique_lgg_a(&ground("fa(a, c1, a)"), &ground("fa(a, c2, a)")).unwrap(), None);
    }

    #[test]
    fn shapes_are_checked() {
        assert!(unique_lgg_ac(&ground("fa(a, b)"), &ground("fac(a, b)")).is_err());
        assert!(unique_lgg_c(&ground("fc(a, g(b))"), &ground("fc(a, b)")).is_err());
    }
}
