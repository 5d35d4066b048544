//! Interpretations, semantic judgements over freshness contexts, simple and
//! EQR contexts, and bounded ground enumeration of term-in-context semantics.
//!
//! Judgements only depend on which atom-variables denote the same atom, so the
//! decision procedures enumerate equivalence relations on atom-variables and
//! give every class its own atom. Term-variables stay symbolic and carry the
//! freshness facts `a # X` that the context forces.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::ground::{canon, eq_modulo, eq_modulo_symbolic, fresh_ground, fresh_requirements, Canon, FreshEnv, SymTerm};
use crate::term::{
    Atom, AtomVar, Constraint, Context, EqrConstraint, FreshnessConstraint, FunSymbol, GPerm, Ground, Perm, Susp, Term,
    TermInContext, TermVar, Theory,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemError {
    #[error("no binding for atom-variable {0}")]
    UnboundAtomVar(AtomVar),
    #[error("no binding for term-variable {0}")]
    UnboundTermVar(TermVar),
}

// ===== evaluation under an atom assignment =====

pub type AtomAssignment = HashMap<AtomVar, Atom>;

pub fn eval_perm(p: &Perm, asg: &AtomAssignment) -> GPerm {
    GPerm(p.swaps().iter().map(|(a, b)| (eval_susp(a, asg), eval_susp(b, asg))).collect())
}

/// Panics on unassigned variables; callers assign every variable first.
pub fn eval_susp(w: &Susp, asg: &AtomAssignment) -> Atom {
    let base = asg.get(&w.var).unwrap_or_else(|| panic!("unassigned atom-variable {}", w.var));
    if w.perm.is_id() {
        base.clone()
    } else {
        eval_perm(&w.perm, asg).apply(base)
    }
}

pub fn to_sym(t: &Term, asg: &AtomAssignment) -> SymTerm {
    match t {
        Term::Atom(w) => SymTerm::Atom(eval_susp(w, asg)),
        Term::Var(p, x) => SymTerm::Var(eval_perm(p, asg), x.clone()),
        Term::App(f, args) => SymTerm::app(f.clone(), args.iter().map(|a| to_sym(a, asg)).collect()),
        Term::Abs(w, body) => SymTerm::Abs(eval_susp(w, asg), Box::new(to_sym(body, asg))),
    }
}

/// Equality pattern of a list of atoms: the class index of each entry, with
/// classes numbered by first occurrence.
pub fn pattern_of(atoms: &[Atom]) -> Vec<usize> {
    let mut seen: Vec<&Atom> = Vec::new();
    atoms
        .iter()
        .map(|a| match seen.iter().position(|b| *b == a) {
            Some(i) => i,
            None => {
                seen.push(a);
                seen.len() - 1
            }
        })
        .collect()
}

/// Evaluates one constraint once all its atom-variables are assigned:
/// `None` if it is violated, otherwise the facts it requires.
pub fn eval_constraint(c: &Constraint, asg: &AtomAssignment) -> Option<Vec<(Atom, TermVar)>> {
    match c {
        Constraint::Fresh(fc) => {
            let a = asg.get(&fc.var).expect("subject assigned");
            fresh_requirements(a, &to_sym(&fc.target, asg))
        }
        Constraint::Eqr(e) => {
            let atoms: Vec<Atom> = e.members.iter().map(|m| eval_susp(m, asg)).collect();
            if pattern_of(&atoms) != e.blocks {
                return Some(Vec::new());
            }
            let body = e.body.as_ref()?;
            let mut out = Vec::new();
            for (i, t) in body {
                out.extend(fresh_requirements(&atoms[*i], &to_sym(t, asg))?);
            }
            Some(out)
        }
    }
}

// ===== models =====

/// One consistent case of a context: an equivalence relation on its
/// atom-variables (one atom per class) and the freshness facts it forces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub vars: Vec<AtomVar>,
    pub classes: Vec<usize>,
    pub facts: FreshEnv,
}

pub fn class_atom(i: usize) -> Atom {
    Atom::new(&format!("@{i}"))
}

impl Model {
    pub fn class_of(&self, v: &AtomVar) -> Option<usize> {
        self.vars.iter().position(|w| w == v).map(|i| self.classes[i])
    }

    pub fn assignment(&self) -> AtomAssignment {
        self.vars.iter().cloned().zip(self.classes.iter().map(|&c| class_atom(c))).collect()
    }

    pub fn class_count(&self) -> usize {
        self.classes.iter().map(|c| c + 1).max().unwrap_or(0)
    }

    pub fn partition(&self) -> AtomPartition {
        let mut blocks: BTreeMap<usize, Vec<AtomVar>> = BTreeMap::new();
        for (v, c) in self.vars.iter().zip(&self.classes) {
            blocks.entry(*c).or_default().push(v.clone());
        }
        let reps: BTreeMap<Atom, AtomVar> = blocks
            .iter()
            .map(|(c, members)| (class_atom(*c), members.iter().min().unwrap().clone()))
            .collect();
        let mut classes: Vec<Vec<AtomVar>> = blocks
            .into_values()
            .map(|mut m| {
                m.sort();
                m
            })
            .collect();
        classes.sort();
        let facts = self
            .facts
            .iter()
            .filter_map(|(a, x)| reps.get(a).map(|r| (r.clone(), x.clone())))
            .collect();
        AtomPartition { classes, facts }
    }
}

struct Enumerator<'a> {
    vars: Vec<AtomVar>,
    checks: Vec<Vec<&'a Constraint>>,
    fixed: Vec<Option<usize>>,
    allowed: Option<&'a FreshEnv>,
}

impl<'a> Enumerator<'a> {
    fn new(constraints: &[&'a Constraint], primary: &[AtomVar]) -> Self {
        let mut vars: Vec<AtomVar> = Vec::new();
        for v in primary {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        let sets: Vec<BTreeSet<AtomVar>> = constraints.iter().map(|c| c.atom_vars()).collect();
        // greedily close the constraint with the fewest missing variables
        let mut pending: Vec<usize> = (0..constraints.len()).collect();
        while !pending.is_empty() {
            let (k, _) = pending
                .iter()
                .enumerate()
                .min_by_key(|(_, &ci)| sets[ci].iter().filter(|v| !vars.contains(v)).count())
                .unwrap();
            let ci = pending.remove(k);
            for v in &sets[ci] {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        let mut checks: Vec<Vec<&Constraint>> = vec![Vec::new(); vars.len().max(1)];
        for (c, set) in constraints.iter().zip(&sets) {
            let last = set.iter().map(|v| vars.iter().position(|w| w == v).unwrap()).max().unwrap_or(0);
            checks[last].push(c);
        }
        let fixed = vec![None; vars.len()];
        Enumerator { vars, checks, fixed, allowed: None }
    }

    /// Visits models until `visit` returns false; returns false if stopped.
    fn run(&self, visit: &mut dyn FnMut(Model) -> bool) -> bool {
        let mut asg = AtomAssignment::new();
        let mut classes = Vec::new();
        let mut facts = Vec::new();
        if self.vars.is_empty() {
            return self.visit_empty(visit);
        }
        self.rec(0, 0, &mut classes, &mut asg, &mut facts, visit)
    }

    /// Only an EQR pair over no members can appear without atom-variables.
    fn visit_empty(&self, visit: &mut dyn FnMut(Model) -> bool) -> bool {
        let asg = AtomAssignment::new();
        let mut facts = FreshEnv::new();
        for c in &self.checks[0] {
            match eval_constraint(c, &asg) {
                None => return true,
                Some(req) => facts.extend(req),
            }
        }
        visit(Model { vars: Vec::new(), classes: Vec::new(), facts })
    }

    fn rec(
        &self,
        i: usize,
        used: usize,
        classes: &mut Vec<usize>,
        asg: &mut AtomAssignment,
        facts: &mut Vec<(Atom, TermVar)>,
        visit: &mut dyn FnMut(Model) -> bool,
    ) -> bool {
        if i == self.vars.len() {
            return visit(Model {
                vars: self.vars.clone(),
                classes: classes.clone(),
                facts: facts.iter().cloned().collect(),
            });
        }
        let options: Vec<usize> = match self.fixed[i] {
            Some(c) => vec![c],
            None => (0..=used).collect(),
        };
        for c in options {
            classes.push(c);
            asg.insert(self.vars[i].clone(), class_atom(c));
            let mark = facts.len();
            let mut ok = true;
            for con in &self.checks[i] {
                match eval_constraint(con, asg) {
                    None => {
                        ok = false;
                        break;
                    }
                    Some(req) => {
                        if let Some(allowed) = self.allowed {
                            if req.iter().any(|f| !allowed.contains(f)) {
                                ok = false;
                                break;
                            }
                        }
                        facts.extend(req);
                    }
                }
            }
            let keep_going = !ok || self.rec(i + 1, used.max(c + 1), classes, asg, facts, visit);
            facts.truncate(mark);
            asg.remove(&self.vars[i]);
            classes.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
}

/// Visits every model of `ctx` over its atom-variables plus `extra`.
pub fn for_each_model(ctx: &Context, extra: &[AtomVar], visit: &mut dyn FnMut(Model) -> bool) -> bool {
    let cs: Vec<&Constraint> = ctx.iter().collect();
    Enumerator::new(&cs, extra).run(visit)
}

pub fn models(ctx: &Context, extra: &[AtomVar]) -> Vec<Model> {
    let mut out = Vec::new();
    for_each_model(ctx, extra, &mut |m| {
        out.push(m);
        true
    });
    out
}

fn consistent_constraints(cs: &[&Constraint]) -> bool {
    let mut found = false;
    Enumerator::new(cs, &[]).run(&mut |_| {
        found = true;
        false
    });
    found
}

pub fn is_consistent(ctx: &Context) -> bool {
    components(ctx).iter().all(|c| consistent_constraints(c))
}

/// Groups constraints that share atom-variables.
fn components(ctx: &Context) -> Vec<Vec<&Constraint>> {
    let cs: Vec<&Constraint> = ctx.iter().collect();
    let sets: Vec<BTreeSet<AtomVar>> = cs.iter().map(|c| c.atom_vars()).collect();
    let mut comp: Vec<usize> = (0..cs.len()).collect();
    fn find(comp: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while comp[r] != r {
            r = comp[r];
        }
        comp[i] = r;
        r
    }
    let mut owner: HashMap<&AtomVar, usize> = HashMap::new();
    for (i, set) in sets.iter().enumerate() {
        for v in set {
            if let Some(&j) = owner.get(v) {
                let (ri, rj) = (find(&mut comp, i), find(&mut comp, j));
                comp[ri] = rj;
            } else {
                owner.insert(v, i);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&Constraint>> = BTreeMap::new();
    for (i, c) in cs.iter().enumerate() {
        let r = find(&mut comp, i);
        groups.entry(r).or_default().push(c);
    }
    groups.into_values().collect()
}

/// Splits `ctx` into the constraints connected to `vars` and the rest.
fn split_relevant<'a>(ctx: &'a Context, vars: &BTreeSet<AtomVar>) -> (Vec<&'a Constraint>, Vec<Vec<&'a Constraint>>) {
    let mut relevant = Vec::new();
    let mut others = Vec::new();
    for comp in components(ctx) {
        let touches = comp.iter().any(|c| c.atom_vars().iter().any(|v| vars.contains(v)));
        if touches {
            relevant.extend(comp);
        } else {
            others.push(comp);
        }
    }
    (relevant, others)
}

/// Decides "for every model of `ctx`, `check` holds", restricted to the part
/// of `ctx` connected to `vars`. An inconsistent context validates anything.
fn judge(ctx: &Context, vars: &BTreeSet<AtomVar>, check: &mut dyn FnMut(&Model, &AtomAssignment) -> bool) -> bool {
    let (relevant, others) = split_relevant(ctx, vars);
    if others.iter().any(|c| !consistent_constraints(c)) {
        return true;
    }
    let primary: Vec<AtomVar> = vars.iter().cloned().collect();
    Enumerator::new(&relevant, &primary).run(&mut |m| {
        let asg = m.assignment();
        check(&m, &asg)
    })
}

/// The equivalence relations on `vars` allowed by `ctx`, each with the facts
/// that hold in every model inducing it. `None` if `ctx` is inconsistent.
pub fn projected_partitions(ctx: &Context, vars: &BTreeSet<AtomVar>) -> Option<Vec<AtomPartition>> {
    let (relevant, others) = split_relevant(ctx, vars);
    if others.iter().any(|c| !consistent_constraints(c)) {
        return None;
    }
    let primary: Vec<AtomVar> = vars.iter().cloned().collect();
    let mut groups: BTreeMap<Vec<Vec<AtomVar>>, BTreeSet<(AtomVar, TermVar)>> = BTreeMap::new();
    Enumerator::new(&relevant, &primary).run(&mut |m| {
        let p = m.partition().restrict(vars);
        groups
            .entry(p.classes)
            .and_modify(|f| f.retain(|x| p.facts.contains(x)))
            .or_insert(p.facts);
        true
    });
    if groups.is_empty() {
        return None;
    }
    Some(groups.into_iter().map(|(classes, facts)| AtomPartition { classes, facts }).collect())
}

pub fn holds_eq(ctx: &Context, s: &Term, t: &Term) -> bool {
    let mut vars = s.atom_vars();
    t.collect_atom_vars(&mut vars);
    judge(ctx, &vars, &mut |m, asg| eq_modulo_symbolic(&to_sym(s, asg), &to_sym(t, asg), &m.facts))
}

pub fn holds_atom_eq(ctx: &Context, w1: &Susp, w2: &Susp) -> bool {
    let mut vars = w1.atom_vars();
    w2.collect_atom_vars(&mut vars);
    judge(ctx, &vars, &mut |_, asg| eval_susp(w1, asg) == eval_susp(w2, asg))
}

pub fn holds_freshness(ctx: &Context, c: &FreshnessConstraint) -> bool {
    holds_constraint(ctx, &Constraint::Fresh(c.clone()))
}

pub fn holds_constraint(ctx: &Context, c: &Constraint) -> bool {
    let vars = c.atom_vars();
    judge(ctx, &vars, &mut |m, asg| match eval_constraint(c, asg) {
        Some(req) => req.iter().all(|f| m.facts.contains(f)),
        None => false,
    })
}

pub fn entails(ctx: &Context, other: &Context) -> bool {
    other.iter().all(|c| holds_constraint(ctx, c))
}

pub fn perm_equiv(ctx: &Context, p1: &Perm, p2: &Perm) -> bool {
    let mut vars = BTreeSet::new();
    p1.collect_atom_vars(&mut vars);
    p2.collect_atom_vars(&mut vars);
    judge(ctx, &vars, &mut |_, asg| eval_perm(p1, asg).same_function(&eval_perm(p2, asg)))
}

/// True iff every model of `base` over `fixed_vars` extends to a model of
/// `ext` that needs no facts beyond those of the base model.
pub fn every_model_extends(base: &Context, fixed_vars: &[AtomVar], ext: &Context) -> bool {
    let ext_cs: Vec<&Constraint> = ext.iter().collect();
    for_each_model(base, fixed_vars, &mut |m| {
        let mut e = Enumerator::new(&ext_cs, &m.vars);
        for (i, v) in e.vars.iter().enumerate() {
            if let Some(c) = m.class_of(v) {
                e.fixed[i] = Some(c);
            }
        }
        // fixed classes may leave gaps; numbering only has to be injective
        let base_classes = m.class_count();
        let mut found = false;
        e.allowed = Some(&m.facts);
        let shifted = ShiftedRun { inner: &e, base_classes };
        shifted.run(&mut |_| {
            found = true;
            false
        });
        found
    })
}

/// Runs an enumerator whose fixed prefix already occupies `base_classes`.
struct ShiftedRun<'a, 'b> {
    inner: &'b Enumerator<'a>,
    base_classes: usize,
}

impl ShiftedRun<'_, '_> {
    fn run(&self, visit: &mut dyn FnMut(Model) -> bool) -> bool {
        let e = self.inner;
        let mut asg = AtomAssignment::new();
        let mut classes = Vec::new();
        let mut facts = Vec::new();
        if e.vars.is_empty() {
            return e.visit_empty(visit);
        }
        e.rec(0, self.base_classes, &mut classes, &mut asg, &mut facts, visit)
    }
}

// ===== simple contexts and partitions =====

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SimpleConstraint {
    /// `A # B`
    Neq(AtomVar, AtomVar),
    /// `A # λB.A`
    Eq(AtomVar, AtomVar),
    /// `A # X`
    Fresh(AtomVar, TermVar),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct SimpleContext(pub BTreeSet<SimpleConstraint>);

impl SimpleContext {
    pub fn to_context(&self) -> Context {
        Context::from_constraints(self.0.iter().map(|c| match c {
            SimpleConstraint::Neq(a, b) => Constraint::fresh(a.clone(), Term::Atom(Susp::var(b.clone()))),
            SimpleConstraint::Eq(a, b) => Constraint::fresh(
                a.clone(),
                Term::abs(Susp::var(b.clone()), Term::Atom(Susp::var(a.clone()))),
            ),
            SimpleConstraint::Fresh(a, x) => Constraint::fresh(a.clone(), Term::Var(Perm::id(), x.clone())),
        }))
    }
}

/// An equivalence relation on atom-variables plus per-class facts, keyed by
/// the least member of each class.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AtomPartition {
    pub classes: Vec<Vec<AtomVar>>,
    pub facts: BTreeSet<(AtomVar, TermVar)>,
}

impl AtomPartition {
    pub fn to_simple(&self) -> SimpleContext {
        let mut s = BTreeSet::new();
        for class in &self.classes {
            for m in &class[1..] {
                s.insert(SimpleConstraint::Eq(class[0].clone(), m.clone()));
            }
        }
        for (i, c1) in self.classes.iter().enumerate() {
            for c2 in &self.classes[i + 1..] {
                s.insert(SimpleConstraint::Neq(c1[0].clone(), c2[0].clone()));
            }
        }
        for (a, x) in &self.facts {
            s.insert(SimpleConstraint::Fresh(a.clone(), x.clone()));
        }
        SimpleContext(s)
    }

    pub fn restrict(&self, keep: &BTreeSet<AtomVar>) -> AtomPartition {
        let mut classes = Vec::new();
        let mut facts = BTreeSet::new();
        for class in &self.classes {
            let kept: Vec<AtomVar> = class.iter().filter(|v| keep.contains(v)).cloned().collect();
            if kept.is_empty() {
                continue;
            }
            for (a, x) in &self.facts {
                if *a == class[0] {
                    facts.insert((kept[0].clone(), x.clone()));
                }
            }
            classes.push(kept);
        }
        classes.sort();
        AtomPartition { classes, facts }
    }
}

/// A disjunction of simple contexts equivalent to `ctx`: one disjunct per
/// consistent equivalence relation on its atom-variables.
pub fn simplify_context(ctx: &Context) -> Vec<SimpleContext> {
    let mut out = BTreeSet::new();
    for_each_model(ctx, &[], &mut |m| {
        out.insert(m.partition().to_simple());
        true
    });
    out.into_iter().collect()
}

/// Equivalence relations on `avars` consistent with at least one disjunct.
pub fn enumerate_partitions(avars: &BTreeSet<AtomVar>, disjuncts: &[SimpleContext]) -> Vec<AtomPartition> {
    let extra: Vec<AtomVar> = avars.iter().cloned().collect();
    let mut out = BTreeSet::new();
    for d in disjuncts {
        for_each_model(&d.to_context(), &extra, &mut |m| {
            out.insert(m.partition().restrict(avars));
            true
        });
    }
    out.into_iter().collect()
}

/// The standardized EQR form of `ctx` over `m` (extended by the
/// atom-variables of `ctx`): one pair per equivalence relation.
pub fn to_eqr(ctx: &Context, m: &BTreeSet<AtomVar>) -> Context {
    let mut all: BTreeSet<AtomVar> = m.clone();
    all.extend(ctx.atom_vars());
    let members: Vec<AtomVar> = all.into_iter().collect();
    let cs: Vec<&Constraint> = ctx.iter().collect();
    let mut out = Context::new();
    Enumerator::new(&[], &members).run(&mut |model| {
        let asg = model.assignment();
        let atoms: Vec<Atom> = members.iter().map(|v| asg[v].clone()).collect();
        let mut body = Some(BTreeSet::new());
        for c in &cs {
            match eval_constraint(c, &asg) {
                None => {
                    body = None;
                    break;
                }
                Some(req) => body.as_mut().unwrap().extend(req),
            }
        }
        let body = body.map(|facts| {
            facts
                .into_iter()
                .map(|(a, x)| {
                    let idx = atoms.iter().position(|b| *b == a).expect("fact on a member");
                    (idx, Term::Var(Perm::id(), x))
                })
                .collect()
        });
        out.insert(Constraint::Eqr(EqrConstraint {
            members: members.iter().map(|v| Susp::var(v.clone())).collect(),
            blocks: pattern_of(&atoms),
            body,
        }));
        true
    });
    out
}

// ===== interpretations =====

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Interpretation {
    pub atoms: BTreeMap<AtomVar, Atom>,
    pub terms: BTreeMap<TermVar, Ground>,
}

impl Interpretation {
    fn atom(&self, v: &AtomVar) -> Result<&Atom, SemError> {
        self.atoms.get(v).ok_or_else(|| SemError::UnboundAtomVar(v.clone()))
    }

    pub fn perm(&self, p: &Perm) -> Result<GPerm, SemError> {
        p.swaps()
            .iter()
            .map(|(a, b)| Ok((self.susp(a)?, self.susp(b)?)))
            .collect::<Result<Vec<_>, _>>()
            .map(GPerm)
    }

    pub fn susp(&self, w: &Susp) -> Result<Atom, SemError> {
        let base = self.atom(&w.var)?;
        Ok(self.perm(&w.perm)?.apply(base))
    }
}

pub fn interpret(t: &Term, rho: &Interpretation) -> Result<Ground, SemError> {
    Ok(match t {
        Term::Atom(w) => Ground::Atom(rho.susp(w)?),
        Term::Var(p, x) => {
            let g = rho.terms.get(x).ok_or_else(|| SemError::UnboundTermVar(x.clone()))?;
            g.permute(&rho.perm(p)?)
        }
        Term::App(f, args) => Ground::app(f.clone(), args.iter().map(|a| interpret(a, rho)).collect::<Result<_, _>>()?),
        Term::Abs(w, body) => Ground::abs(rho.susp(w)?, interpret(body, rho)?),
    })
}

pub fn interpret_constraint(c: &Constraint, rho: &Interpretation) -> Result<bool, SemError> {
    match c {
        Constraint::Fresh(fc) => Ok(fresh_ground(rho.atom(&fc.var)?, &interpret(&fc.target, rho)?)),
        Constraint::Eqr(e) => {
            let atoms = e.members.iter().map(|m| rho.susp(m)).collect::<Result<Vec<_>, _>>()?;
            if pattern_of(&atoms) != e.blocks {
                return Ok(true);
            }
            let Some(body) = &e.body else { return Ok(false) };
            for (i, t) in body {
                if !fresh_ground(&atoms[*i], &interpret(t, rho)?) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

pub fn interpret_context(ctx: &Context, rho: &Interpretation) -> Result<bool, SemError> {
    for c in ctx.iter() {
        if !interpret_constraint(c, rho)? {
            return Ok(false);
        }
    }
    Ok(true)
}

// ===== bounded ground enumeration =====

pub fn oracle_constant() -> FunSymbol {
    FunSymbol::constant("_k")
}

pub fn oracle_unary() -> FunSymbol {
    FunSymbol::new("_h", 1, Theory::Free)
}

/// Ground terms up to `depth` over `pool`: atoms and a constant, closed
/// under abstraction over a pool atom and a unary symbol. One term per
/// α-class.
pub fn universe(pool: &[Atom], depth: usize) -> Vec<Ground> {
    let mut seen = BTreeSet::new();
    let mut level: Vec<Ground> = Vec::new();
    let mut push = |g: Ground, level: &mut Vec<Ground>| {
        if seen.insert(canon(&g)) {
            level.push(g);
        }
    };
    for a in pool {
        push(Ground::Atom(a.clone()), &mut level);
    }
    push(Ground::app(oracle_constant(), vec![]), &mut level);
    for _ in 0..depth {
        let prev = level.clone();
        for u in &prev {
            for a in pool {
                push(Ground::abs(a.clone(), u.clone()), &mut level);
            }
            push(Ground::app(oracle_unary(), vec![u.clone()]), &mut level);
        }
    }
    level
}

/// Calls `visit` on every interpretation of `avars`/`tvars` over `pool` and
/// `terms`; stops when `visit` returns false.
pub fn for_each_interpretation(
    avars: &[AtomVar],
    tvars: &[TermVar],
    pool: &[Atom],
    terms: &[Ground],
    visit: &mut dyn FnMut(&Interpretation) -> bool,
) -> bool {
    fn rec_t(
        i: usize,
        tvars: &[TermVar],
        terms: &[Ground],
        rho: &mut Interpretation,
        visit: &mut dyn FnMut(&Interpretation) -> bool,
    ) -> bool {
        if i == tvars.len() {
            return visit(rho);
        }
        for g in terms {
            rho.terms.insert(tvars[i].clone(), g.clone());
            if !rec_t(i + 1, tvars, terms, rho, visit) {
                return false;
            }
        }
        true
    }
    fn rec_a(
        i: usize,
        avars: &[AtomVar],
        tvars: &[TermVar],
        pool: &[Atom],
        terms: &[Ground],
        rho: &mut Interpretation,
        visit: &mut dyn FnMut(&Interpretation) -> bool,
    ) -> bool {
        if i == avars.len() {
            return rec_t(0, tvars, terms, rho, visit);
        }
        for a in pool {
            rho.atoms.insert(avars[i].clone(), a.clone());
            if !rec_a(i + 1, avars, tvars, pool, terms, rho, visit) {
                return false;
            }
        }
        true
    }
    rec_a(0, avars, tvars, pool, terms, &mut Interpretation::default(), visit)
}

pub fn atom_pool(n: usize) -> Vec<Atom> {
    (0..n).map(|i| Atom::new(&format!("p{i}"))).collect()
}

/// The canonical classes of `⟦tc⟧` reachable with atoms from `pool` and
/// term-variable instances from `universe(pool, depth)`.
pub fn sem_representatives(tc: &TermInContext, pool: &[Atom], depth: usize) -> BTreeSet<Canon> {
    let avars: Vec<AtomVar> = tc.atom_vars().into_iter().collect();
    let tvars: Vec<TermVar> = tc.term_vars().into_iter().collect();
    let terms = universe(pool, depth);
    let mut out = BTreeSet::new();
    for_each_interpretation(&avars, &tvars, pool, &terms, &mut |rho| {
        if interpret_context(&tc.context, rho).unwrap_or(false) {
            out.insert(canon(&interpret(&tc.term, rho).expect("total interpretation")));
        }
        true
    });
    out
}

/// Ground representatives as terms rather than canonical keys.
pub fn sem_ground_terms(tc: &TermInContext, pool: &[Atom], depth: usize) -> Vec<Ground> {
    let avars: Vec<AtomVar> = tc.atom_vars().into_iter().collect();
    let tvars: Vec<TermVar> = tc.term_vars().into_iter().collect();
    let terms = universe(pool, depth);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for_each_interpretation(&avars, &tvars, pool, &terms, &mut |rho| {
        if interpret_context(&tc.context, rho).unwrap_or(false) {
            let g = interpret(&tc.term, rho).expect("total interpretation");
            if seen.insert(canon(&g)) {
                out.push(g);
            }
        }
        true
    });
    out
}

// ===== membership =====

/// Decides `[g] ∈ ⟦tc⟧` by matching the term against `g` modulo E and α and
/// searching for atom-variable values among the atoms of `g` and fresh ones.
pub fn sem_member(tc: &TermInContext, g: &Ground) -> bool {
    let avars: Vec<AtomVar> = tc.atom_vars().into_iter().collect();
    let tvars: Vec<TermVar> = tc.term_vars().into_iter().collect();
    let fresh: Vec<Atom> = (0..avars.len()).map(|i| Atom::new(&format!("~{i}"))).collect();
    let m = Member { ctx: &tc.context, avars: &avars, tvars: &tvars, known: g.atoms().into_iter().collect(), fresh };
    let st = MState { atoms: BTreeMap::new(), terms: BTreeMap::new(), fresh_used: 0 };
    m.solve(vec![Goal::Match(tc.term.clone(), g.clone())], st)
}

#[derive(Clone)]
enum Goal {
    Match(Term, Ground),
}

#[derive(Clone)]
struct MState {
    atoms: BTreeMap<AtomVar, Atom>,
    terms: BTreeMap<TermVar, Ground>,
    fresh_used: usize,
}

struct Member<'a> {
    ctx: &'a Context,
    avars: &'a [AtomVar],
    tvars: &'a [TermVar],
    known: Vec<Atom>,
    fresh: Vec<Atom>,
}

impl Member<'_> {
    fn candidates(&self, st: &MState) -> Vec<(Atom, usize)> {
        let mut out: Vec<(Atom, usize)> = self.known.iter().map(|a| (a.clone(), st.fresh_used)).collect();
        for (i, f) in self.fresh.iter().enumerate().take(st.fresh_used) {
            let _ = i;
            out.push((f.clone(), st.fresh_used));
        }
        if st.fresh_used < self.fresh.len() {
            out.push((self.fresh[st.fresh_used].clone(), st.fresh_used + 1));
        }
        out
    }

    fn rho(&self, st: &MState) -> Interpretation {
        Interpretation { atoms: st.atoms.clone(), terms: st.terms.clone() }
    }

    /// Checks every constraint whose variables are all bound.
    fn partial_ok(&self, st: &MState) -> bool {
        let rho = self.rho(st);
        for c in self.ctx.iter() {
            let mut tv = BTreeSet::new();
            c.collect_term_vars(&mut tv);
            if c.atom_vars().iter().all(|v| st.atoms.contains_key(v)) && tv.iter().all(|x| st.terms.contains_key(x))
                && !interpret_constraint(c, &rho).unwrap_or(false) {
                    return false;
                }
        }
        true
    }

    fn first_unbound(&self, vars: &BTreeSet<AtomVar>, st: &MState) -> Option<AtomVar> {
        vars.iter().find(|v| !st.atoms.contains_key(*v)).cloned()
    }

    /// Branches over the values of `v`, then continues with `goals`.
    fn branch_atom(&self, v: AtomVar, goals: Vec<Goal>, st: MState) -> bool {
        for (a, used) in self.candidates(&st) {
            let mut s2 = st.clone();
            s2.atoms.insert(v.clone(), a);
            s2.fresh_used = used;
            if self.partial_ok(&s2) && self.solve(goals.clone(), s2) {
                return true;
            }
        }
        false
    }

    fn solve(&self, mut goals: Vec<Goal>, mut st: MState) -> bool {
        let Some(goal) = goals.pop() else {
            return self.finish(st);
        };
        let Goal::Match(t, g) = goal;
        let rho = |st: &MState| self.rho(st);
        match &t {
            Term::Atom(w) => {
                let Ground::Atom(a) = &g else { return false };
                let mut pv = BTreeSet::new();
                w.perm.collect_atom_vars(&mut pv);
                if let Some(v) = self.first_unbound(&pv, &st) {
                    goals.push(Goal::Match(t.clone(), g.clone()));
                    return self.branch_atom(v, goals, st);
                }
                let p = rho(&st).perm(&w.perm).expect("bound");
                let want = p.inverse().apply(a);
                match st.atoms.get(&w.var) {
                    Some(b) if *b != want => false,
                    Some(_) => self.solve(goals, st),
                    None => {
                        if !self.known.contains(&want) && !self.fresh[..st.fresh_used].contains(&want) {
                            // fresh atom introduced through a permutation
                            if let Some(i) = self.fresh.iter().position(|f| *f == want) {
                                st.fresh_used = st.fresh_used.max(i + 1);
                            }
                        }
                        st.atoms.insert(w.var.clone(), want);
                        self.partial_ok(&st) && self.solve(goals, st)
                    }
                }
            }
            Term::Var(p, x) => {
                let mut pv = BTreeSet::new();
                p.collect_atom_vars(&mut pv);
                if let Some(v) = self.first_unbound(&pv, &st) {
                    goals.push(Goal::Match(t.clone(), g.clone()));
                    return self.branch_atom(v, goals, st);
                }
                let gp = rho(&st).perm(p).expect("bound");
                let val = g.permute(&gp.inverse());
                match st.terms.get(x) {
                    Some(old) => eq_modulo(old, &val) && self.solve(goals, st),
                    None => {
                        st.terms.insert(x.clone(), val);
                        self.partial_ok(&st) && self.solve(goals, st)
                    }
                }
            }
            Term::Abs(w, body) => {
                let Ground::Abs(b, gb) = &g else { return false };
                let wv = w.atom_vars();
                if let Some(v) = self.first_unbound(&wv, &st) {
                    goals.push(Goal::Match(t.clone(), g.clone()));
                    return self.branch_atom(v, goals, st);
                }
                let a = rho(&st).susp(w).expect("bound");
                if a == *b {
                    goals.push(Goal::Match((**body).clone(), (**gb).clone()));
                } else {
                    if !fresh_ground(&a, gb) {
                        return false;
                    }
                    let sw = GPerm(vec![(a, b.clone())]);
                    goals.push(Goal::Match((**body).clone(), gb.permute(&sw)));
                }
                self.solve(goals, st)
            }
            Term::App(f, args) => {
                let Ground::App(h, gargs) = &g else { return false };
                if f != h {
                    return false;
                }
                match f.theory {
                    Theory::Free => {
                        if args.len() != gargs.len() {
                            return false;
                        }
                        for (a, b) in args.iter().zip(gargs).rev() {
                            goals.push(Goal::Match(a.clone(), b.clone()));
                        }
                        self.solve(goals, st)
                    }
                    Theory::C => {
                        for order in [[0, 1], [1, 0]] {
                            let mut gs = goals.clone();
                            gs.push(Goal::Match(args[1].clone(), gargs[order[1]].clone()));
                            gs.push(Goal::Match(args[0].clone(), gargs[order[0]].clone()));
                            if self.solve(gs, st.clone()) {
                                return true;
                            }
                        }
                        false
                    }
                    Theory::A => {
                        let mut found = false;
                        segments(args, gargs.len(), &mut |cuts| {
                            let mut gs = goals.clone();
                            for (i, (lo, hi)) in cuts.iter().enumerate().rev() {
                                gs.push(Goal::Match(args[i].clone(), group(f, &gargs[*lo..*hi])));
                            }
                            found = self.solve(gs, st.clone());
                            !found
                        });
                        found
                    }
                    Theory::AC => {
                        let mut found = false;
                        ac_alignments(args, gargs.len(), &mut |assign| {
                            let mut gs = goals.clone();
                            for (i, idxs) in assign.iter().enumerate().rev() {
                                let parts: Vec<Ground> = idxs.iter().map(|&j| gargs[j].clone()).collect();
                                gs.push(Goal::Match(args[i].clone(), group(f, &parts)));
                            }
                            found = self.solve(gs, st.clone());
                            !found
                        });
                        found
                    }
                }
            }
        }
    }

    fn finish(&self, st: MState) -> bool {
        if let Some(v) = self.avars.iter().find(|v| !st.atoms.contains_key(*v)) {
            return self.branch_atom(v.clone(), Vec::new(), st);
        }
        let mut st = st;
        for x in self.tvars {
            st.terms.entry(x.clone()).or_insert_with(|| Ground::app(oracle_constant(), vec![]));
        }
        interpret_context(self.ctx, &self.rho(&st)).unwrap_or(false)
    }
}

fn group(f: &FunSymbol, parts: &[Ground]) -> Ground {
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        Ground::app(f.clone(), parts.to_vec())
    }
}

fn is_var(t: &Term) -> bool {
    matches!(t, Term::Var(..))
}

/// Enumerates splittings of `n` ground arguments into consecutive nonempty
/// segments, one per pattern argument; only variables take longer segments.
type SegmentVisitor<'a> = dyn FnMut(&[(usize, usize)]) -> bool + 'a;

fn segments(args: &[Term], n: usize, visit: &mut SegmentVisitor) {
    fn rec(
        args: &[Term],
        i: usize,
        pos: usize,
        n: usize,
        cur: &mut Vec<(usize, usize)>,
        visit: &mut SegmentVisitor,
    ) -> bool {
        if i == args.len() {
            return if pos == n { visit(cur) } else { true };
        }
        let rest = args.len() - i - 1;
        if pos + 1 + rest > n {
            return true;
        }
        let max_len = if is_var(&args[i]) { n - pos - rest } else { 1 };
        for len in 1..=max_len {
            cur.push((pos, pos + len));
            let go_on = rec(args, i + 1, pos + len, n, cur, visit);
            cur.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    rec(args, 0, 0, n, &mut Vec::new(), visit);
}

/// Enumerates assignments of `n` ground arguments to pattern arguments:
/// non-variables take exactly one, variables a nonempty sub-multiset.
fn ac_alignments(args: &[Term], n: usize, visit: &mut dyn FnMut(&[Vec<usize>]) -> bool) {
    let fixed: Vec<usize> = (0..args.len()).filter(|&i| !is_var(&args[i])).collect();
    let vars: Vec<usize> = (0..args.len()).filter(|&i| is_var(&args[i])).collect();
    if fixed.len() + vars.len() > n || (vars.is_empty() && fixed.len() != n) {
        return;
    }
    let mut assign: Vec<Vec<usize>> = vec![Vec::new(); args.len()];
    let mut used = vec![false; n];
    fn place_fixed(
        k: usize,
        fixed: &[usize],
        vars: &[usize],
        used: &mut Vec<bool>,
        assign: &mut Vec<Vec<usize>>,
        visit: &mut dyn FnMut(&[Vec<usize>]) -> bool,
    ) -> bool {
        if k == fixed.len() {
            let rest: Vec<usize> = (0..used.len()).filter(|&j| !used[j]).collect();
            return distribute(0, &rest, vars, assign, visit);
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                assign[fixed[k]] = vec![j];
                let go_on = place_fixed(k + 1, fixed, vars, used, assign, visit);
                assign[fixed[k]].clear();
                used[j] = false;
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
    fn distribute(
        r: usize,
        rest: &[usize],
        vars: &[usize],
        assign: &mut Vec<Vec<usize>>,
        visit: &mut dyn FnMut(&[Vec<usize>]) -> bool,
    ) -> bool {
        if r == rest.len() {
            if vars.iter().all(|&v| !assign[v].is_empty()) {
                return visit(assign);
            }
            return true;
        }
        let empty_left = vars.iter().filter(|&&v| assign[v].is_empty()).count();
        if rest.len() - r < empty_left {
            return true;
        }
        for &v in vars {
            assign[v].push(rest[r]);
            let go_on = distribute(r + 1, rest, vars, assign, visit);
            assign[v].pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    place_fixed(0, &fixed, &vars, &mut used, &mut assign, visit);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_term, Decls};

    fn decls() -> Decls {
        let mut d = Decls::new();
        d.declare_symbol("f", Theory::AC, 2).unwrap();
        d.declare_symbol("g", Theory::Free, 2).unwrap();
        for a in ["A", "B", "C", "D"] {
            d.atom_vars.insert(a.into());
        }
        d.term_vars.insert("X".into());
        d
    }

    fn t(s: &str) -> Term {
        parse_term(s, &decls()).unwrap()
    }

    fn ctx(s: &str) -> Context {
        parse_context(s, &decls()).unwrap()
    }

    fn av(s: &str) -> AtomVar {
        AtomVar::new(s)
    }

    fn neq(a: &str, b: &str) -> SimpleConstraint {
        SimpleConstraint::Neq(av(a), av(b))
    }

    #[test]
    fn simplify_abstraction_context() {
        let d = simplify_context(&ctx("C # lam A. f(A, A, B), C # lam B. f(A, B, A), A # B"));
        assert_eq!(d.len(), 1);
        let expected: BTreeSet<_> = [neq("A", "B"), neq("A", "C"), neq("B", "C")].into_iter().collect();
        assert_eq!(d[0].0, expected);
    }

    #[test]
    fn simplify_small_cases() {
        let d = simplify_context(&ctx("A # lam B. A"));
        assert_eq!(d, vec![SimpleContext([SimpleConstraint::Eq(av("A"), av("B"))].into_iter().collect())]);
        assert_eq!(simplify_context(&Context::new()), vec![SimpleContext::default()]);
        assert!(simplify_context(&ctx("A # A")).is_empty());
    }

    #[test]
    fn partitions() {
        let ab: BTreeSet<AtomVar> = [av("A"), av("B")].into_iter().collect();
        let p = enumerate_partitions(&ab, &simplify_context(&ctx("A # B")));
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].classes, vec![vec![av("A")], vec![av("B")]]);
        assert_eq!(enumerate_partitions(&ab, &[SimpleContext::default()]).len(), 2);
        let abc: BTreeSet<AtomVar> = [av("A"), av("B"), av("C")].into_iter().collect();
        let p = enumerate_partitions(&abc, &simplify_context(&ctx("A # B, A # C, C # B")));
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].classes.len(), 3);
        let bell = [1, 1, 2, 5, 15, 52];
        for (n, expected) in bell.iter().enumerate() {
            let vars: BTreeSet<AtomVar> = (0..n).map(|i| av(&format!("V{i}"))).collect();
            assert_eq!(enumerate_partitions(&vars, &[SimpleContext::default()]).len(), *expected);
        }
    }

    #[test]
    fn judgements() {
        let empty = Context::new();
        assert!(holds_constraint(&empty, &Constraint::fresh(av("A"), t("lam A. A"))));
        assert!(!holds_constraint(&empty, &Constraint::fresh(av("A"), t("B"))));
        assert!(!holds_eq(&empty, &t("A"), &t("B")));
        assert!(holds_eq(&ctx("A # B, A # C, C # B"), &t("(A C)*B"), &t("B")));
        assert!(holds_eq(&ctx("A # lam B. A"), &t("(A C)*f((B C)*A, C, B)"), &t("f(C, A, A)")));
        // inconsistent contexts validate everything
        assert!(holds_eq(&ctx("A # A"), &t("A"), &t("B")));
        assert!(!is_consistent(&ctx("A # A")));
    }

    #[test]
    fn permutation_equivalence() {
        let ab = Perm::swap(Susp::named("A"), Susp::named("B"));
        let twice = ab.compose(&ab);
        assert!(perm_equiv(&Context::new(), &twice, &Perm::id()));
        assert!(perm_equiv(&ctx("A # lam B. A"), &ab, &Perm::id()));
        assert!(!perm_equiv(&Context::new(), &ab, &Perm::id()));
    }

    #[test]
    fn eqr_standard_form() {
        let ab: BTreeSet<AtomVar> = [av("A"), av("B")].into_iter().collect();
        let e = to_eqr(&ctx("A # lam B. A"), &ab);
        let items: Vec<&Constraint> = e.iter().collect();
        assert_eq!(items.len(), 2);
        let mut seen = BTreeMap::new();
        for c in items {
            let Constraint::Eqr(q) = c else { panic!("not an EQR constraint") };
            seen.insert(q.blocks.clone(), q.body.clone());
        }
        assert_eq!(seen[&vec![0, 0]], Some(vec![]));
        assert_eq!(seen[&vec![0, 1]], None);
        let x = to_eqr(&ctx("A # X"), &ab);
        assert_eq!(x.len(), 2);
        for c in x.iter() {
            let Constraint::Eqr(q) = c else { panic!() };
            assert_eq!(q.body.as_ref().map(|b| b.len()), Some(1));
        }
    }

    #[test]
    fn eqr_is_equivalent() {
        for src in ["A # lam B. A", "A # X, B # g(A, X)", "A # (A B)*X", "C # lam A. lam B. C"] {
            let c = ctx(src);
            let e = to_eqr(&c, &BTreeSet::new());
            let vars: Vec<AtomVar> = c.atom_vars().into_iter().collect();
            let pool = atom_pool(vars.len() + 1);
            let terms = universe(&pool[..2], 1);
            for_each_interpretation(&vars, &[TermVar::new("X")], &pool, &terms, &mut |rho| {
                assert_eq!(interpret_context(&c, rho), interpret_context(&e, rho), "{src}");
                true
            });
        }
    }

    #[test]
    fn interpretation() {
        let mut rho = Interpretation::default();
        rho.atoms.insert(av("A"), Atom::new("a"));
        rho.atoms.insert(av("B"), Atom::new("b"));
        rho.atoms.insert(av("C"), Atom::new("a"));
        assert_eq!(interpret(&t("(A B)*C"), &rho).unwrap(), Ground::atom("b"));
        let g = interpret(&t("lam A. g(A, B)"), &rho).unwrap();
        assert_eq!(g.to_string(), "lam a. g(a, b)");
        rho.terms.insert(TermVar::new("X"), Ground::app(oracle_unary(), vec![Ground::atom("c")]));
        assert_eq!(interpret(&t("X"), &rho).unwrap().to_string(), "_h(c)");
        assert_eq!(interpret(&t("D"), &rho), Err(SemError::UnboundAtomVar(av("D"))));
    }

    #[test]
    fn abstraction_semantics() {
        let pool = atom_pool(3);
        let body = t("lam A. g(A, B)");
        let with = sem_representatives(&TermInContext::new(ctx("A # C"), body.clone()), &pool, 0);
        let without = sem_representatives(&TermInContext::new(Context::new(), body.clone()), &pool, 0);
        assert_eq!(with, without);
        let sep = sem_representatives(&TermInContext::new(ctx("A # B"), body), &pool[..2], 0);
        // second argument is free: two choices of atom, one class per choice
        assert_eq!(sep.len(), 2);
    }

    #[test]
    fn membership_agrees_with_enumeration() {
        let cases = [
            ("", "g(A, X)"),
            ("A # X", "g(A, X)"),
            ("A # lam B. A", "f(A, B, X)"),
            ("C # lam A. lam B. C", "lam C. f((A C)*X, B)"),
            ("", "lam A. (A B)*X"),
        ];
        let pool = atom_pool(3);
        let tcs: Vec<TermInContext> = cases.iter().map(|(c, s)| TermInContext::new(ctx(c), t(s))).collect();
        for tc in &tcs {
            let reps = sem_representatives(tc, &pool, 1);
            for other in &tcs {
                for g in sem_ground_terms(other, &pool, 1) {
                    let member = sem_member(tc, &g);
                    if reps.contains(&canon(&g)) {
                        assert!(member, "{g} should be in {tc}");
                    } else {
                        assert!(!member || other != tc, "{g} wrongly in {tc}");
                    }
                    if !member {
                        assert!(!reps.contains(&canon(&g)));
                    }
                }
            }
        }
    }

    #[test]
    fn model_extension() {
        // every model of {A # B} extends to one of {C # A, C # B}
        let base = ctx("A # B");
        let vars = [av("A"), av("B")];
        assert!(every_model_extends(&base, &vars, &ctx("C # A, C # B")));
        // an extension that forces A = B cannot exist
        assert!(!every_model_extends(&base, &vars, &ctx("A # lam B. A")));
        // facts outside the base model are not available
        assert!(!every_model_extends(&base, &vars, &ctx("A # X")));
        assert!(every_model_extends(&ctx("A # X"), &vars, &ctx("A # X")));
    }
}
