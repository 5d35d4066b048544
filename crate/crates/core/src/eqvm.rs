//! Equivariance matching modulo E: find an injective atom-variable mapping
//! `Π` with `∇ ⊨ Π·t ≈_E s` for every equation `t ⋖ s`.
//!
//! The context is split into equality patterns of the atom-variables
//! involved. Under a fixed pattern each class denotes its own atom, so
//! decomposition and the construction of the mapping work on concrete atoms
//! and every case distinction is exact. Each candidate is finally checked
//! against the full context.

use std::collections::{BTreeMap, BTreeSet};

use crate::ground::{FreshEnv, SymTerm};
use crate::semantics::{class_atom, holds_eq, projected_partitions, to_sym, AtomAssignment, AtomPartition, SimpleContext};
use crate::term::{Atom, AtomVar, Context, GPerm, NameGen, Perm, Susp, Term, TermVar, Theory};

/// `left ⋖ right`: find `π` with `π·left ≈ right`.
pub type EquivEquation = (Term, Term);

/// An injective mapping on atom-variables together with the equality
/// pattern under which it was derived.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AtomMapping {
    pub entries: BTreeMap<AtomVar, Susp>,
    pub context: Context,
}

impl AtomMapping {
    pub fn identity() -> Self {
        AtomMapping { entries: BTreeMap::new(), context: Context::new() }
    }

    pub fn to_permutation(&self) -> Perm {
        mapping_to_permutation(&self.entries)
    }
}

/// Turns an injective finite mapping into swaps: each maximal chain
/// `A₁ ↦ A₂ ↦ … ↦ Aₖ` becomes `(A₁ A₂)(A₂ A₃)…(Aₖ₋₁ Aₖ)`, which also sends
/// `Aₖ` back to `A₁`; a cycle drops its closing edge.
pub fn mapping_to_permutation(m: &BTreeMap<AtomVar, Susp>) -> Perm {
    let plain: BTreeMap<AtomVar, AtomVar> = m
        .iter()
        .filter(|(k, v)| v.perm.is_id() && v.var != **k)
        .map(|(k, v)| (k.clone(), v.var.clone()))
        .collect();
    assert_eq!(plain.len(), m.iter().filter(|(k, v)| !(v.perm.is_id() && v.var == **k)).count(), "mapping targets must be plain atom-variables");
    let range: BTreeSet<&AtomVar> = plain.values().collect();
    let mut swaps = Vec::new();
    let mut done: BTreeSet<AtomVar> = BTreeSet::new();
    let walk = |start: &AtomVar, swaps: &mut Vec<(Susp, Susp)>, done: &mut BTreeSet<AtomVar>| {
        let mut cur = start.clone();
        while let Some(next) = plain.get(&cur) {
            if !done.insert(cur.clone()) || next == start {
                break;
            }
            swaps.push((Susp::var(cur.clone()), Susp::var(next.clone())));
            cur = next.clone();
        }
        done.insert(cur);
    };
    for k in plain.keys().filter(|k| !range.contains(k)) {
        walk(k, &mut swaps, &mut done);
    }
    for k in plain.keys() {
        if !done.contains(k) {
            walk(k, &mut swaps, &mut done);
        }
    }
    Perm::from_swaps(swaps)
}

// ===== decomposition under a fixed equality pattern =====

/// Concrete view of one equality pattern: one atom per class plus the atoms
/// introduced by abstraction steps.
#[derive(Clone)]
struct Frame {
    names: BTreeMap<Atom, AtomVar>,
    facts: FreshEnv,
    universe: Vec<Atom>,
    fresh: Vec<Atom>,
}

impl Frame {
    fn new(p: &AtomPartition) -> (Frame, AtomAssignment) {
        let mut asg = AtomAssignment::new();
        let mut names = BTreeMap::new();
        let mut universe = Vec::new();
        for (i, class) in p.classes.iter().enumerate() {
            let a = class_atom(i);
            for v in class {
                asg.insert(v.clone(), a.clone());
            }
            names.insert(a.clone(), class[0].clone());
            universe.push(a);
        }
        let facts = p
            .facts
            .iter()
            .map(|(v, x)| (asg[v].clone(), x.clone()))
            .collect();
        (Frame { names, facts, universe, fresh: Vec::new() }, asg)
    }

    fn fresh_atom(&mut self, tvars: &BTreeSet<TermVar>) -> Atom {
        let a = class_atom(self.universe.len());
        for x in tvars {
            self.facts.insert((a.clone(), x.clone()));
        }
        self.universe.push(a.clone());
        self.fresh.push(a.clone());
        a
    }
}

type SymEq = (SymTerm, SymTerm);

struct Leaves {
    eqs: Vec<SymEq>,
    frame: Frame,
}

fn swap(a: &Atom, b: &Atom) -> GPerm {
    GPerm(vec![(a.clone(), b.clone())])
}

/// Applies the decomposition rules exhaustively; every branch ends with
/// leaf equations only.
fn decompose_sym(
    mut todo: Vec<SymEq>,
    mut leaves: Vec<SymEq>,
    mut frame: Frame,
    tvars: &BTreeSet<TermVar>,
    out: &mut Vec<Leaves>,
) {
    let Some((l, r)) = todo.pop() else {
        out.push(Leaves { eqs: leaves, frame });
        return;
    };
    match (&l, &r) {
        (SymTerm::Abs(a, t), SymTerm::Abs(b, s)) => {
            let c = frame.fresh_atom(tvars);
            todo.push((t.permute(&swap(a, &c)), s.permute(&swap(b, &c))));
            leaves.push((SymTerm::Atom(c.clone()), SymTerm::Atom(c)));
            decompose_sym(todo, leaves, frame, tvars, out);
        }
        (SymTerm::App(f, xs), SymTerm::App(g, ys)) => {
            if f != g || xs.len() != ys.len() {
                return;
            }
            match f.theory {
                Theory::Free | Theory::A => {
                    todo.extend(xs.iter().cloned().zip(ys.iter().cloned()).rev());
                    decompose_sym(todo, leaves, frame, tvars, out);
                }
                Theory::C => {
                    for (i, j) in [(0, 1), (1, 0)] {
                        let mut t2 = todo.clone();
                        t2.push((xs[1].clone(), ys[j].clone()));
                        t2.push((xs[0].clone(), ys[i].clone()));
                        decompose_sym(t2, leaves.clone(), frame.clone(), tvars, out);
                    }
                }
                Theory::AC => {
                    let mut tried: BTreeSet<&SymTerm> = BTreeSet::new();
                    for (i, y) in ys.iter().enumerate() {
                        if !tried.insert(y) {
                            continue;
                        }
                        let rest: Vec<SymTerm> =
                            ys.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| y.clone()).collect();
                        let mut t2 = todo.clone();
                        t2.push((SymTerm::app(f.clone(), xs[1..].to_vec()), SymTerm::app(f.clone(), rest)));
                        t2.push((xs[0].clone(), y.clone()));
                        decompose_sym(t2, leaves.clone(), frame.clone(), tvars, out);
                    }
                }
            }
        }
        (SymTerm::Atom(_), SymTerm::Atom(_)) => {
            leaves.push((l, r));
            decompose_sym(todo, leaves, frame, tvars, out);
        }
        (SymTerm::Var(_, x), SymTerm::Var(_, y)) if x == y => {
            leaves.push((l, r));
            decompose_sym(todo, leaves, frame, tvars, out);
        }
        _ => {}
    }
}

/// Collects the constraints `f(a) = b` that the leaves force on a
/// permutation `f` of the frame's atoms; `None` on a conflict.
fn forced_map(leaves: &Leaves) -> Option<BTreeMap<Atom, Atom>> {
    let mut f: BTreeMap<Atom, Atom> = BTreeMap::new();
    let mut inv: BTreeMap<Atom, Atom> = BTreeMap::new();
    let mut force = |a: Atom, b: Atom| -> bool {
        match (f.get(&a), inv.get(&b)) {
            (Some(x), _) if *x != b => false,
            (_, Some(y)) if *y != a => false,
            _ => {
                f.insert(a.clone(), b.clone());
                inv.insert(b, a);
                true
            }
        }
    };
    for (l, r) in &leaves.eqs {
        match (l, r) {
            (SymTerm::Atom(a), SymTerm::Atom(b)) => {
                if !force(a.clone(), b.clone()) {
                    return None;
                }
            }
            (SymTerm::Var(p, x), SymTerm::Var(q, _)) => {
                for y in &leaves.frame.universe {
                    if !leaves.frame.facts.contains(&(y.clone(), x.clone())) && !force(p.apply(y), q.apply(y)) {
                        return None;
                    }
                }
            }
            _ => return None,
        }
    }
    Some(f)
}

// ===== public interface =====

/// One decomposition branch in terms of atom-variables.
#[derive(Clone, Debug)]
pub struct Branch {
    pub equations: Vec<EquivEquation>,
    pub fresh: Vec<AtomVar>,
    pub context: SimpleContext,
}

fn sym_to_term(t: &SymTerm, names: &BTreeMap<Atom, AtomVar>) -> Term {
    let name = |a: &Atom| Susp::var(names[a].clone());
    let perm = |p: &GPerm| Perm::from_swaps(p.0.iter().map(|(a, b)| (name(a), name(b))).collect());
    match t {
        SymTerm::Atom(a) => Term::Atom(name(a)),
        SymTerm::Var(p, x) => Term::Var(perm(p), x.clone()),
        SymTerm::App(f, args) => Term::app(f.clone(), args.iter().map(|a| sym_to_term(a, names)).collect()),
        SymTerm::Abs(a, body) => Term::abs(name(a), sym_to_term(body, names)),
    }
}

fn input_vars(eqs: &[EquivEquation]) -> (BTreeSet<AtomVar>, BTreeSet<TermVar>) {
    let mut av = BTreeSet::new();
    let mut tv = BTreeSet::new();
    for (l, r) in eqs {
        l.collect_atom_vars(&mut av);
        r.collect_atom_vars(&mut av);
        l.collect_term_vars(&mut tv);
        r.collect_term_vars(&mut tv);
    }
    (av, tv)
}

fn branches_for(eqs: &[EquivEquation], p: &AtomPartition, tvars: &BTreeSet<TermVar>) -> Vec<Leaves> {
    let (frame, asg) = Frame::new(p);
    let todo: Vec<SymEq> = eqs.iter().rev().map(|(l, r)| (to_sym(l, &asg), to_sym(r, &asg))).collect();
    let mut out = Vec::new();
    decompose_sym(todo, Vec::new(), frame, tvars, &mut out);
    out
}

/// The decomposition branches of `eqs` under every equality pattern of
/// `ctx`. Variables introduced by abstraction steps are named by `gen`.
pub fn decompose(eqs: &[EquivEquation], ctx: &Context, gen: &NameGen) -> Vec<Branch> {
    let (avars, tvars) = input_vars(eqs);
    let mut out = Vec::new();
    for p in projected_partitions(ctx, &avars).unwrap_or_default() {
        for leaves in branches_for(eqs, &p, &tvars) {
            let mut names = leaves.frame.names.clone();
            let mut fresh = Vec::new();
            for a in &leaves.frame.fresh {
                let v = gen.atom_var();
                names.insert(a.clone(), v.clone());
                fresh.push(v);
            }
            let equations = leaves.eqs.iter().map(|(l, r)| (sym_to_term(l, &names), sym_to_term(r, &names))).collect();
            let mut ctx = p.to_simple();
            for v in &fresh {
                for w in names.values() {
                    if w != v {
                        ctx.0.insert(crate::semantics::SimpleConstraint::Neq(v.clone(), w.clone()));
                    }
                }
                for x in &tvars {
                    ctx.0.insert(crate::semantics::SimpleConstraint::Fresh(v.clone(), x.clone()));
                }
            }
            out.push(Branch { equations, fresh, context: ctx });
        }
    }
    out
}

/// Verifies `∇ ⊨ π·t ≈ s` for every equation.
pub fn solves(eqs: &[EquivEquation], ctx: &Context, pi: &Perm) -> bool {
    eqs.iter().all(|(l, r)| holds_eq(ctx, &l.permute(pi), r))
}

/// Every choice of one representative variable per class.
fn representative_choices(p: &AtomPartition, limit: usize) -> Vec<BTreeMap<Atom, AtomVar>> {
    let mut out = vec![BTreeMap::new()];
    for (i, class) in p.classes.iter().enumerate() {
        let mut next = Vec::new();
        for m in &out {
            for v in class {
                let mut m2 = m.clone();
                m2.insert(class_atom(i), v.clone());
                next.push(m2);
                if next.len() >= limit {
                    break;
                }
            }
        }
        out = next;
    }
    out
}

fn search(eqs: &[EquivEquation], ctx: &Context, all: bool) -> Vec<AtomMapping> {
    let (avars, tvars) = input_vars(eqs);
    let mut found: Vec<AtomMapping> = Vec::new();
    let Some(parts) = projected_partitions(ctx, &avars) else {
        // nothing to satisfy
        return vec![AtomMapping::identity()];
    };
    let mut seen_perms: BTreeSet<Perm> = BTreeSet::new();
    for p in &parts {
        for leaves in branches_for(eqs, p, &tvars) {
            let Some(f) = forced_map(&leaves) else { continue };
            let moved: Vec<(&Atom, &Atom)> = f.iter().filter(|(a, b)| a != b).collect();
            if moved.iter().any(|(a, b)| leaves.frame.fresh.contains(a) || leaves.frame.fresh.contains(b)) {
                continue;
            }
            for names in representative_choices(p, 64) {
                let entries: BTreeMap<AtomVar, Susp> =
                    moved.iter().map(|(a, b)| (names[*a].clone(), Susp::var(names[*b].clone()))).collect();
                let pi = mapping_to_permutation(&entries);
                if !seen_perms.insert(pi.clone()) {
                    continue;
                }
                if solves(eqs, ctx, &pi) {
                    found.push(AtomMapping { entries, context: p.to_simple().to_context() });
                    if !all {
                        return found;
                    }
                }
            }
        }
    }
    found
}

/// The first mapping that solves every equation under `ctx`.
pub fn eqvm(eqs: &[EquivEquation], ctx: &Context) -> Option<AtomMapping> {
    search(eqs, ctx, false).into_iter().next()
}

/// Every mapping found, one per distinct permutation.
pub fn eqvm_all(eqs: &[EquivEquation], ctx: &Context) -> Vec<AtomMapping> {
    search(eqs, ctx, true)
}
