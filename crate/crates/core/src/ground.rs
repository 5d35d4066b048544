//! Freshness, α-equivalence and equality modulo A, C and AC on ground terms,
//! plus a symbolic variant where term-variables stay uninstantiated.

use std::collections::BTreeSet;

use crate::term::{Atom, FunSymbol, GPerm, Ground, TermVar, Theory};

/// `a # t`: `a` does not occur free in `t`.
pub fn fresh_ground(a: &Atom, t: &Ground) -> bool {
    match t {
        Ground::Atom(b) => a != b,
        Ground::App(_, args) => args.iter().all(|s| fresh_ground(a, s)),
        Ground::Abs(b, body) => a == b || fresh_ground(a, body),
    }
}

/// Plain α-equivalence; every symbol is treated as free.
pub fn alpha_eq(s: &Ground, t: &Ground) -> bool {
    match (s, t) {
        (Ground::Atom(a), Ground::Atom(b)) => a == b,
        (Ground::App(f, xs), Ground::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_eq(x, y))
        }
        (Ground::Abs(a, x), Ground::Abs(b, y)) => {
            if a == b {
                alpha_eq(x, y)
            } else {
                let sw = GPerm(vec![(a.clone(), b.clone())]);
                fresh_ground(a, y) && alpha_eq(x, &y.permute(&sw))
            }
        }
        _ => false,
    }
}

/// Canonical representative of an `≈_E` class: bound atoms become de Bruijn
/// indices, associative applications are flattened and commutative argument
/// lists are sorted.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Canon {
    Free(Atom),
    Bound(usize),
    App(FunSymbol, Vec<Canon>),
    Abs(Box<Canon>),
}

pub fn canon(t: &Ground) -> Canon {
    fn go(t: &Ground, binders: &mut Vec<Atom>) -> Canon {
        match t {
            Ground::Atom(a) => match binders.iter().rev().position(|b| b == a) {
                Some(i) => Canon::Bound(i),
                None => Canon::Free(a.clone()),
            },
            Ground::Abs(a, body) => {
                binders.push(a.clone());
                let c = go(body, binders);
                binders.pop();
                Canon::Abs(Box::new(c))
            }
            Ground::App(f, args) => {
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    let c = go(a, binders);
                    match c {
                        Canon::App(g, inner) if f.theory.is_assoc() && g == *f => out.extend(inner),
                        c => out.push(c),
                    }
                }
                if f.theory.is_comm() {
                    out.sort();
                }
                Canon::App(f.clone(), out)
            }
        }
    }
    go(t, &mut Vec::new())
}

/// `s ≈_E t` where the theory of each symbol is read from the symbol itself.
pub fn eq_modulo(s: &Ground, t: &Ground) -> bool {
    canon(s) == canon(t)
}

// ===== symbolic terms =====

/// A ground term that may contain suspended term-variables `π·X`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SymTerm {
    Atom(Atom),
    Var(GPerm, TermVar),
    App(FunSymbol, Vec<SymTerm>),
    Abs(Atom, Box<SymTerm>),
}

/// Known facts `a # X`.
pub type FreshEnv = BTreeSet<(Atom, TermVar)>;

impl SymTerm {
    pub fn app(f: FunSymbol, args: Vec<SymTerm>) -> SymTerm {
        if !f.theory.is_assoc() {
            return SymTerm::App(f, args);
        }
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            match a {
                SymTerm::App(g, inner) if g == f => out.extend(inner),
                a => out.push(a),
            }
        }
        if out.len() == 1 {
            return out.pop().unwrap();
        }
        SymTerm::App(f, out)
    }

    pub fn permute(&self, p: &GPerm) -> SymTerm {
        if p.0.is_empty() {
            return self.clone();
        }
        match self {
            SymTerm::Atom(a) => SymTerm::Atom(p.apply(a)),
            SymTerm::Var(q, x) => SymTerm::Var(p.compose(q), x.clone()),
            SymTerm::App(f, args) => SymTerm::App(f.clone(), args.iter().map(|a| a.permute(p)).collect()),
            SymTerm::Abs(a, body) => SymTerm::Abs(p.apply(a), Box::new(body.permute(p))),
        }
    }

    pub fn from_ground(g: &Ground) -> SymTerm {
        match g {
            Ground::Atom(a) => SymTerm::Atom(a.clone()),
            Ground::App(f, args) => SymTerm::App(f.clone(), args.iter().map(SymTerm::from_ground).collect()),
            Ground::Abs(a, body) => SymTerm::Abs(a.clone(), Box::new(SymTerm::from_ground(body))),
        }
    }

    /// Atoms occurring anywhere, including inside suspended permutations.
    pub fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            SymTerm::Atom(a) => {
                out.insert(a.clone());
            }
            SymTerm::Var(p, _) => out.extend(p.support()),
            SymTerm::App(_, args) => args.iter().for_each(|a| a.collect_atoms(out)),
            SymTerm::Abs(a, body) => {
                out.insert(a.clone());
                body.collect_atoms(out);
            }
        }
    }
}

/// Freshness of `a` in a symbolic term. Returns the facts `b # X` that must
/// hold, or `None` when freshness fails outright.
pub fn fresh_requirements(a: &Atom, t: &SymTerm) -> Option<Vec<(Atom, TermVar)>> {
    let mut out = Vec::new();
    fn go(a: &Atom, t: &SymTerm, out: &mut Vec<(Atom, TermVar)>) -> bool {
        match t {
            SymTerm::Atom(b) => a != b,
            SymTerm::Var(p, x) => {
                out.push((p.inverse().apply(a), x.clone()));
                true
            }
            SymTerm::App(_, args) => args.iter().all(|s| go(a, s, out)),
            SymTerm::Abs(b, body) => a == b || go(a, body, out),
        }
    }
    go(a, t, &mut out).then_some(out)
}

pub fn fresh_symbolic(a: &Atom, t: &SymTerm, env: &FreshEnv) -> bool {
    match fresh_requirements(a, t) {
        Some(reqs) => reqs.into_iter().all(|f| env.contains(&f)),
        None => false,
    }
}

/// `s ≈_E t` for every instantiation of the term-variables that respects `env`.
pub fn eq_modulo_symbolic(s: &SymTerm, t: &SymTerm, env: &FreshEnv) -> bool {
    match (s, t) {
        (SymTerm::Atom(a), SymTerm::Atom(b)) => a == b,
        (SymTerm::Var(p, x), SymTerm::Var(q, y)) => {
            x == y && p.disagreement(q).into_iter().all(|a| env.contains(&(a, x.clone())))
        }
        (SymTerm::Abs(a, x), SymTerm::Abs(b, y)) => {
            if a == b {
                eq_modulo_symbolic(x, y, env)
            } else {
                let sw = GPerm(vec![(a.clone(), b.clone())]);
                fresh_symbolic(a, y, env) && eq_modulo_symbolic(x, &y.permute(&sw), env)
            }
        }
        (SymTerm::App(f, xs), SymTerm::App(g, ys)) => {
            if f != g || xs.len() != ys.len() {
                return false;
            }
            match f.theory {
                Theory::Free | Theory::A => xs.iter().zip(ys).all(|(x, y)| eq_modulo_symbolic(x, y, env)),
                Theory::C => {
                    (eq_modulo_symbolic(&xs[0], &ys[0], env) && eq_modulo_symbolic(&xs[1], &ys[1], env))
                        || (eq_modulo_symbolic(&xs[0], &ys[1], env) && eq_modulo_symbolic(&xs[1], &ys[0], env))
                }
                Theory::AC => multiset_match(xs, ys, env),
            }
        }
        _ => false,
    }
}

fn multiset_match(xs: &[SymTerm], ys: &[SymTerm], env: &FreshEnv) -> bool {
    let n = xs.len();
    // compatibility matrix, then backtracking over a perfect matching
    let compat: Vec<Vec<bool>> = xs
        .iter()
        .map(|x| ys.iter().map(|y| eq_modulo_symbolic(x, y, env)).collect())
        .collect();
    fn assign(i: usize, compat: &[Vec<bool>], used: &mut [bool]) -> bool {
        if i == compat.len() {
            return true;
        }
        for j in 0..used.len() {
            if !used[j] && compat[i][j] {
                used[j] = true;
                if assign(i + 1, compat, used) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    assign(0, &compat, &mut vec![false; n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(n: &str) -> Ground {
        Ground::atom(n)
    }

    #[test]
    fn freshness_rules() {
        assert!(fresh_ground(&Atom::new("a"), &a("b")));
        assert!(fresh_ground(&Atom::new("a"), &Ground::abs(Atom::new("a"), a("a"))));
        let f = FunSymbol::new("f", 2, Theory::Free);
        assert!(!fresh_ground(&Atom::new("a"), &Ground::app(f, vec![a("a"), a("b")])));
    }

    #[test]
    fn alpha_renaming() {
        let f = FunSymbol::new("f", 2, Theory::Free);
        let l = Ground::abs(Atom::new("a"), Ground::app(f.clone(), vec![a("a"), a("b")]));
        let r = Ground::abs(Atom::new("c"), Ground::app(f, vec![a("c"), a("b")]));
        assert!(alpha_eq(&l, &r));
        assert!(eq_modulo(&l, &r));
        assert!(!alpha_eq(&Ground::abs(Atom::new("a"), a("a")), &Ground::abs(Atom::new("a"), a("b"))));
    }

    #[test]
    fn theories() {
        let ac = FunSymbol::new("f", 2, Theory::AC);
        let c = FunSymbol::new("g", 2, Theory::C);
        let asym = FunSymbol::new("h", 2, Theory::A);
        assert!(eq_modulo(
            &Ground::app(ac.clone(), vec![a("a"), a("a"), a("c")]),
            &Ground::app(ac, vec![a("c"), a("a"), a("a")])
        ));
        assert!(eq_modulo(&Ground::app(c.clone(), vec![a("a"), a("b")]), &Ground::app(c, vec![a("b"), a("a")])));
        assert!(!eq_modulo(
            &Ground::app(asym.clone(), vec![a("a"), a("b"), a("c")]),
            &Ground::app(asym, vec![a("b"), a("a"), a("c")])
        ));
    }

    #[test]
    fn symbolic_disagreement() {
        let x = TermVar::new("X");
        let sw = GPerm(vec![(Atom::new("a"), Atom::new("b"))]);
        let l = SymTerm::Var(sw, x.clone());
        let r = SymTerm::Var(GPerm::id(), x.clone());
        let mut env = FreshEnv::new();
        assert!(!eq_modulo_symbolic(&l, &r, &env));
        env.insert((Atom::new("a"), x.clone()));
        env.insert((Atom::new("b"), x.clone()));
        assert!(eq_modulo_symbolic(&l, &r, &env));
        let y = SymTerm::Var(GPerm::id(), TermVar::new("Y"));
        assert!(!eq_modulo_symbolic(&r, &y, &env));
    }
}
