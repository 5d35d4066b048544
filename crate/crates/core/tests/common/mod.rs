//! Shared test support: seeded random generators for terms and problems,
//! and oracles that decide ground questions by brute force without using
//! the library's canonical forms or decision procedures.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use nominal_au::term::{
    Atom, AtomVar, Constraint, Context, FunSymbol, Ground, Perm, Susp, Term, TermVar, Theory,
};

// ===== generators =====

pub struct Gen {
    pub rng: StdRng,
    pub avars: Vec<AtomVar>,
    pub tvars: Vec<TermVar>,
    pub binary: FunSymbol,
    pub unary: FunSymbol,
    pub constants: Vec<FunSymbol>,
    /// Probability that a suspension carries one swap.
    pub swap_rate: f64,
}

impl Gen {
    pub fn new(seed: u64, n_avars: usize, n_tvars: usize, theory: Theory) -> Self {
        Gen {
            rng: StdRng::seed_from_u64(seed),
            avars: ["A", "B", "C", "D"][..n_avars].iter().map(|n| AtomVar::new(n)).collect(),
            tvars: ["X", "Y"][..n_tvars].iter().map(|n| TermVar::new(n)).collect(),
            binary: FunSymbol::new("f", 2, theory),
            unary: FunSymbol::new("g", 1, Theory::Free),
            constants: vec![FunSymbol::constant("c"), FunSymbol::constant("d")],
            swap_rate: 0.2,
        }
    }

    pub fn avar(&mut self) -> AtomVar {
        self.avars[self.rng.gen_range(0..self.avars.len())].clone()
    }

    pub fn perm(&mut self) -> Perm {
        if self.avars.len() >= 2 && self.rng.gen_bool(self.swap_rate) {
            Perm::swap(Susp::var(self.avar()), Susp::var(self.avar()))
        } else {
            Perm::id()
        }
    }

    pub fn susp(&mut self) -> Susp {
        let p = self.perm();
        Susp::new(p, self.avar())
    }

    /// A random term with between 1 and `max` nodes.
    pub fn sized(&mut self, max: usize) -> Term {
        let n = self.rng.gen_range(1..=max);
        self.term(n)
    }

    /// A random term with at most `size` nodes.
    pub fn term(&mut self, size: usize) -> Term {
        if size <= 1 {
            let r: f64 = self.rng.gen();
            return if r < 0.2 && !self.tvars.is_empty() {
                let x = self.tvars[self.rng.gen_range(0..self.tvars.len())].clone();
                let p = self.perm();
                Term::Var(p, x)
            } else if r < 0.35 || self.avars.is_empty() {
                let c = self.constants[self.rng.gen_range(0..self.constants.len())].clone();
                Term::App(c, vec![])
            } else {
                Term::Atom(self.susp())
            };
        }
        let r: f64 = self.rng.gen();
        if r < 0.25 && !self.avars.is_empty() {
            let w = self.susp();
            Term::abs(w, self.term(size - 1))
        } else if r < 0.4 {
            let u = self.unary.clone();
            Term::app(u, vec![self.term(size - 1)])
        } else if size >= 3 {
            let left = self.rng.gen_range(1..size - 1);
            let f = self.binary.clone();
            let a = self.term(left);
            let b = self.term(size - 1 - left);
            Term::app(f, vec![a, b])
        } else {
            self.term(1)
        }
    }

    /// Up to `n` freshness constraints of the forms `A # B` or `A # t`.
    pub fn context(&mut self, n: usize, size: usize) -> Context {
        let mut ctx = Context::new();
        if self.avars.is_empty() {
            return ctx;
        }
        for _ in 0..self.rng.gen_range(0..=n) {
            let a = self.avar();
            let t = if self.rng.gen_bool(0.5) { Term::Atom(Susp::var(self.avar())) } else { self.term(size) };
            ctx.add_fresh(a, t);
        }
        ctx
    }
}

/// Ground AC/C/A/free terms over constants and atoms (no binders).
pub fn random_ground(rng: &mut StdRng, sym: &FunSymbol, depth: usize, max_args: usize) -> Ground {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..4) {
            0 => Ground::Atom(Atom::new("a")),
            1 => Ground::Atom(Atom::new("b")),
            2 => Ground::app(FunSymbol::constant("c"), vec![]),
            _ => Ground::app(FunSymbol::constant("d"), vec![]),
        };
    }
    let n = if sym.theory.is_assoc() { rng.gen_range(2..=max_args) } else { sym.arity };
    Ground::app(sym.clone(), (0..n).map(|_| random_ground(rng, sym, depth - 1, max_args)).collect())
}

/// Node count; associative applications count once per argument.
pub fn nodes(t: &Term) -> usize {
    match t {
        Term::Atom(_) | Term::Var(..) => 1,
        Term::App(_, args) => 1 + args.iter().map(nodes).sum::<usize>(),
        Term::Abs(_, b) => 1 + nodes(b),
    }
}

// ===== ground oracles =====

fn swap_atom(a: &Atom, x: &Atom, y: &Atom) -> Atom {
    if a == x {
        y.clone()
    } else if a == y {
        x.clone()
    } else {
        a.clone()
    }
}

pub fn swap_ground(t: &Ground, x: &Atom, y: &Atom) -> Ground {
    match t {
        Ground::Atom(a) => Ground::Atom(swap_atom(a, x, y)),
        Ground::App(f, args) => Ground::App(f.clone(), args.iter().map(|s| swap_ground(s, x, y)).collect()),
        Ground::Abs(a, b) => Ground::Abs(swap_atom(a, x, y), Box::new(swap_ground(b, x, y))),
    }
}

pub fn free_in(a: &Atom, t: &Ground) -> bool {
    match t {
        Ground::Atom(b) => a == b,
        Ground::App(_, args) => args.iter().any(|s| free_in(a, s)),
        Ground::Abs(b, body) => a != b && free_in(a, body),
    }
}

/// Arguments of `f` after flattening nested `f` applications (A and AC only).
fn flat_args<'a>(f: &FunSymbol, args: &'a [Ground], out: &mut Vec<&'a Ground>) {
    for a in args {
        match a {
            Ground::App(g, inner) if g == f && f.theory.is_assoc() => flat_args(f, inner, out),
            _ => out.push(a),
        }
    }
}

/// Equality modulo α, A, C and AC by the inference rules, with a
/// brute-force search over argument permutations for AC.
pub fn oracle_eq(s: &Ground, t: &Ground) -> bool {
    match (s, t) {
        (Ground::Atom(a), Ground::Atom(b)) => a == b,
        (Ground::Abs(a, s1), Ground::Abs(b, t1)) => {
            if a == b {
                oracle_eq(s1, t1)
            } else {
                !free_in(a, t1) && oracle_eq(s1, &swap_ground(t1, a, b))
            }
        }
        (Ground::App(f, ss), Ground::App(g, ts)) => {
            if f.name != g.name {
                return false;
            }
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            if f.theory.is_assoc() {
                flat_args(f, ss, &mut xs);
                flat_args(g, ts, &mut ys);
            } else {
                xs = ss.iter().collect();
                ys = ts.iter().collect();
            }
            if xs.len() != ys.len() {
                return false;
            }
            match f.theory {
                Theory::Free | Theory::A => xs.iter().zip(&ys).all(|(x, y)| oracle_eq(x, y)),
                Theory::C => {
                    (oracle_eq(xs[0], ys[0]) && oracle_eq(xs[1], ys[1]))
                        || (oracle_eq(xs[0], ys[1]) && oracle_eq(xs[1], ys[0]))
                }
                Theory::AC => {
                    let mut used = vec![false; ys.len()];
                    perm_match(&xs, &ys, &mut used)
                }
            }
        }
        _ => false,
    }
}

fn perm_match(xs: &[&Ground], ys: &[&Ground], used: &mut [bool]) -> bool {
    let Some((x, rest)) = xs.split_first() else { return true };
    // a candidate structurally equal to one already tried fails the same way
    let mut tried: Vec<&Ground> = Vec::new();
    for j in 0..ys.len() {
        if used[j] || tried.contains(&ys[j]) {
            continue;
        }
        tried.push(ys[j]);
        if oracle_eq(x, ys[j]) {
            used[j] = true;
            if perm_match(rest, ys, used) {
                return true;
            }
            used[j] = false;
        }
    }
    false
}

/// Recursive multiset equality on binder-free AC terms: arguments of an AC
/// node are compared as multisets by counting equal classes.
pub fn multiset_eq(s: &Ground, t: &Ground) -> bool {
    match (s, t) {
        (Ground::Atom(a), Ground::Atom(b)) => a == b,
        (Ground::App(f, ss), Ground::App(g, ts)) if f.name == g.name => {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            flat_args(f, ss, &mut xs);
            flat_args(g, ts, &mut ys);
            if xs.len() != ys.len() {
                return false;
            }
            if f.theory != Theory::AC {
                return xs.iter().zip(&ys).all(|(x, y)| multiset_eq(x, y));
            }
            xs.iter().all(|x| {
                let cx = xs.iter().filter(|y| multiset_eq(x, y)).count();
                let cy = ys.iter().filter(|y| multiset_eq(x, y)).count();
                cx == cy
            })
        }
        _ => false,
    }
}

// ===== interpretation oracle =====

#[derive(Clone, Debug, Default)]
pub struct Valuation {
    pub atoms: BTreeMap<AtomVar, Atom>,
    pub terms: BTreeMap<TermVar, Ground>,
}

impl Valuation {
    fn swaps(&self, p: &Perm) -> Vec<(Atom, Atom)> {
        p.swaps().iter().map(|(a, b)| (self.susp(a), self.susp(b))).collect()
    }

    pub fn susp(&self, w: &Susp) -> Atom {
        let mut a = self.atoms[&w.var].clone();
        // innermost swap acts first
        for (x, y) in self.swaps(&w.perm).iter().rev() {
            a = swap_atom(&a, x, y);
        }
        a
    }

    pub fn term(&self, t: &Term) -> Ground {
        match t {
            Term::Atom(w) => Ground::Atom(self.susp(w)),
            Term::Var(p, x) => {
                let mut g = self.terms[x].clone();
                for (a, b) in self.swaps(p).iter().rev() {
                    g = swap_ground(&g, a, b);
                }
                g
            }
            Term::App(f, args) => Ground::App(f.clone(), args.iter().map(|a| self.term(a)).collect()),
            Term::Abs(w, body) => Ground::Abs(self.susp(w), Box::new(self.term(body))),
        }
    }

    pub fn satisfies(&self, ctx: &Context) -> bool {
        ctx.iter().all(|c| match c {
            Constraint::Fresh(f) => !free_in(&self.atoms[&f.var], &self.term(&f.target)),
            Constraint::Eqr(e) => {
                let atoms: Vec<Atom> = e.members.iter().map(|m| self.susp(m)).collect();
                let mut pattern = Vec::new();
                let mut firsts: Vec<&Atom> = Vec::new();
                for a in &atoms {
                    match firsts.iter().position(|b| *b == a) {
                        Some(i) => pattern.push(i),
                        None => {
                            pattern.push(firsts.len());
                            firsts.push(a);
                        }
                    }
                }
                if pattern != e.blocks {
                    return true;
                }
                match &e.body {
                    None => false,
                    Some(body) => body.iter().all(|(i, t)| !free_in(&atoms[*i], &self.term(t))),
                }
            }
        })
    }
}

pub fn pool(n: usize) -> Vec<Atom> {
    (0..n).map(|i| Atom::new(&format!("q{i}"))).collect()
}

/// Atoms, a constant, and one level of abstraction and a unary symbol per
/// extra depth.
pub fn small_universe(pool: &[Atom], depth: usize) -> Vec<Ground> {
    let k = FunSymbol::constant("k");
    let u = FunSymbol::new("u", 1, Theory::Free);
    let mut level: Vec<Ground> = pool.iter().cloned().map(Ground::Atom).collect();
    level.push(Ground::App(k, vec![]));
    let mut all = level.clone();
    for _ in 1..depth {
        let mut next = Vec::new();
        for g in &level {
            next.push(Ground::App(u.clone(), vec![g.clone()]));
            for a in pool {
                next.push(Ground::Abs(a.clone(), Box::new(g.clone())));
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all
}

/// Calls `visit` on every valuation of the given variables; stops early when
/// `visit` returns false. Returns false if it was stopped.
pub fn for_each_valuation(
    avars: &[AtomVar],
    tvars: &[TermVar],
    pool: &[Atom],
    universe: &[Ground],
    visit: &mut dyn FnMut(&Valuation) -> bool,
) -> bool {
    let na = avars.len();
    let nt = tvars.len();
    let total_a = pool.len().pow(na as u32);
    let total_t = universe.len().pow(nt as u32);
    for ia in 0..total_a {
        let mut v = Valuation::default();
        let mut r = ia;
        for a in avars {
            v.atoms.insert(a.clone(), pool[r % pool.len()].clone());
            r /= pool.len();
        }
        for it in 0..total_t {
            let mut r = it;
            for x in tvars {
                v.terms.insert(x.clone(), universe[r % universe.len()].clone());
                r /= universe.len();
            }
            if !visit(&v) {
                return false;
            }
        }
    }
    true
}

pub fn vars_of(ctx: &Context, terms: &[&Term]) -> (Vec<AtomVar>, Vec<TermVar>) {
    let mut a: BTreeSet<AtomVar> = ctx.atom_vars();
    let mut x: BTreeSet<TermVar> = ctx.term_vars();
    for t in terms {
        a.extend(t.atom_vars());
        x.extend(t.term_vars());
    }
    (a.into_iter().collect(), x.into_iter().collect())
}

/// Searches for a valuation satisfying `ctx` under which `holds` fails.
pub fn counterexample(
    ctx: &Context,
    terms: &[&Term],
    pool_size: usize,
    depth: usize,
    holds: &dyn Fn(&Valuation) -> bool,
) -> Option<Valuation> {
    let (avars, tvars) = vars_of(ctx, terms);
    let pool = pool(pool_size);
    let universe = small_universe(&pool, depth);
    let mut found = None;
    for_each_valuation(&avars, &tvars, &pool, &universe, &mut |v| {
        if v.satisfies(ctx) && !holds(v) {
            found = Some(v.clone());
            return false;
        }
        true
    });
    found
}

// ===== renaming =====

fn generated(name: &str) -> bool {
    name.starts_with('_')
}

#[derive(Default)]
pub struct Bijection {
    fwd: BTreeMap<String, String>,
    bwd: BTreeMap<String, String>,
}

impl Bijection {
    fn pair(&mut self, a: &str, b: &str) -> bool {
        if generated(a) != generated(b) {
            return false;
        }
        if !generated(a) {
            return a == b;
        }
        match (self.fwd.get(a), self.bwd.get(b)) {
            (None, None) => {
                self.fwd.insert(a.into(), b.into());
                self.bwd.insert(b.into(), a.into());
                true
            }
            (Some(x), Some(y)) => x == b && y == a,
            _ => false,
        }
    }

    fn perm(&mut self, p: &Perm, q: &Perm) -> bool {
        p.swaps().len() == q.swaps().len()
            && p.swaps().iter().zip(q.swaps()).all(|((a, b), (c, d))| self.susp(a, c) && self.susp(b, d))
    }

    fn susp(&mut self, v: &Susp, w: &Susp) -> bool {
        self.perm(&v.perm, &w.perm) && self.pair(v.var.name(), w.var.name())
    }

    /// Structural equality up to a bijective renaming of generated names.
    pub fn term(&mut self, s: &Term, t: &Term) -> bool {
        match (s, t) {
            (Term::Atom(v), Term::Atom(w)) => self.susp(v, w),
            (Term::Var(p, x), Term::Var(q, y)) => self.perm(p, q) && self.pair(x.name(), y.name()),
            (Term::App(f, ss), Term::App(g, ts)) => {
                f == g && ss.len() == ts.len() && ss.iter().zip(ts).all(|(a, b)| self.term(a, b))
            }
            (Term::Abs(v, a), Term::Abs(w, b)) => self.susp(v, w) && self.term(a, b),
            _ => false,
        }
    }
}

pub fn renaming_equal(s: &Term, t: &Term) -> bool {
    Bijection::default().term(s, t)
}
