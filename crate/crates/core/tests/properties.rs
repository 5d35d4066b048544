mod common;

use proptest::prelude::*;
use rand::SeedableRng;

use common::{oracle_eq, random_ground, Gen};
use nominal_au::cli::{document_from_json, document_to_json, parse_document, render_text, run_problem, Flags};
use nominal_au::enau::{run_enau, verify_result, Limits};
use nominal_au::ground::eq_modulo;
use nominal_au::minimize::{minimize_set, tic_equivalent, tic_subset, unique_lgg_ac, unique_lgg_c};
use nominal_au::semantics::holds_eq;
use nominal_au::syntax::{ground_to_term, parse_problem, parse_term, ProblemFile};
use nominal_au::term::{Context, FunSymbol, TermInContext, Theory};

fn theory() -> impl Strategy<Value = Theory> {
    prop_oneof![Just(Theory::Free), Just(Theory::A), Just(Theory::C), Just(Theory::AC)]
}

fn decls_for(th: Theory) -> ProblemFile {
    parse_problem(&format!("sig: f:{}/2, g:/1, c:/0, d:/0;\natomvars: A B C D;\ntermvars: X Y;\n", th.tag())).unwrap()
}

fn limits() -> Limits {
    Limits { max_states: 20_000, jobs: 1 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn flatten_is_idempotent(seed: u64, th in theory()) {
        let mut g = Gen::new(seed, 3, 2, th);
        let t = g.sized(12).flatten();
        prop_assert_eq!(t.flatten(), t);
    }

    #[test]
    fn render_then_parse_is_identity(seed: u64, th in theory()) {
        let pf = decls_for(th);
        let mut g = Gen::new(seed, 4, 2, th);
        let t = g.sized(14).flatten();
        let back = parse_term(&t.to_string(), &pf.decls).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn permutation_inverse_cancels(seed: u64, th in theory()) {
        let mut g = Gen::new(seed, 4, 2, th);
        g.swap_rate = 0.6;
        let t = g.sized(10);
        let p = nominal_au::term::Perm::from_swaps(
            (0..3).flat_map(|_| g.perm().swaps().to_vec()).collect(),
        );
        let there_and_back = t.permute(&p).permute(&p.inverse());
        prop_assert!(holds_eq(&Context::new(), &there_and_back, &t));
        prop_assert!(holds_eq(&Context::new(), &t.permute(&p.inverse()).permute(&p), &t));
    }

    #[test]
    fn equality_is_symmetric_and_matches_oracle(seed: u64, th in theory()) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let f = FunSymbol::new("f", 2, th);
        let s = random_ground(&mut rng, &f, 3, 4).flatten();
        let t = random_ground(&mut rng, &f, 3, 4).flatten();
        let got = eq_modulo(&s, &t);
        prop_assert_eq!(got, eq_modulo(&t, &s));
        prop_assert_eq!(got, oracle_eq(&s, &t));
        prop_assert!(eq_modulo(&s, &s));
    }

    #[test]
    fn holds_eq_is_reflexive_and_symmetric(seed: u64, th in theory()) {
        let mut g = Gen::new(seed, 3, 2, th);
        let ctx = g.context(2, 2);
        let s = g.sized(8);
        let t = g.sized(8);
        prop_assert!(holds_eq(&ctx, &s, &s));
        prop_assert_eq!(holds_eq(&ctx, &s, &t), holds_eq(&ctx, &t, &s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generalizations_verify_and_are_self_subsumed(seed: u64, th in theory()) {
        let mut g = Gen::new(seed, 3, 0, th);
        let ctx = g.context(1, 1);
        let s = g.sized(6);
        let t = g.sized(6);
        let out = run_enau(&ctx, &s, &t, limits());
        prop_assume!(!out.incomplete);
        prop_assert!(!out.results.is_empty());
        for r in &out.results {
            prop_assert!(verify_result(r, &ctx, &s, &t).is_ok());
            prop_assert!(tic_subset(&r.tic, &r.tic));
        }
        let tics: Vec<TermInContext> = out.results.iter().map(|r| r.tic.clone()).collect();
        prop_assert!(!minimize_set(&tics).is_empty());
    }

    #[test]
    fn result_documents_round_trip(seed: u64, th in theory()) {
        let mut g = Gen::new(seed, 3, 0, th);
        let s = g.sized(6).flatten();
        let t = g.sized(6).flatten();
        let text = format!(
            "sig: f:{}/2, g:/1, c:/0, d:/0;\natomvars: A B C;\nfresh: A # B;\ngeneralize {s} =?= {t};\ncheck {s} ~ {t};\n",
            th.tag()
        );
        let problem = parse_problem(&text).unwrap();
        let doc = run_problem(&problem, &Flags { minimize: true, ..Flags::default() });
        let from_text = parse_document(&render_text(&doc)).unwrap();
        prop_assert_eq!(&from_text.results, &doc.results);
        let from_json = document_from_json(&document_to_json(&doc)).unwrap();
        prop_assert_eq!(&from_json.results, &doc.results);
    }
}

/// The unique lgg agrees with the minimized search results wherever the
/// criteria apply.
#[test]
fn unique_lgg_matches_search() {
    let ac = FunSymbol::new("f", 2, Theory::AC);
    let c = FunSymbol::new("h", 2, Theory::C);
    let k = |n: &str| nominal_au::term::Ground::app(FunSymbol::constant(n), vec![]);
    let app = |f: &FunSymbol, args: Vec<nominal_au::term::Ground>| nominal_au::term::Ground::app(f.clone(), args).flatten();
    let cases = vec![
        (
            app(&ac, vec![k("s1"), k("s2"), k("s3"), k("s4")]),
            app(&ac, vec![k("s5"), k("s6"), k("s1"), k("s2")]),
            unique_lgg_ac as fn(&_, &_) -> _,
        ),
        (
            app(&c, vec![k("a"), app(&c, vec![k("a"), k("b")])]),
            app(&c, vec![k("b"), app(&c, vec![k("a"), k("d")])]),
            unique_lgg_c,
        ),
        (
            app(&c, vec![k("a"), app(&c, vec![k("a"), k("b")])]),
            app(&c, vec![k("a"), app(&c, vec![k("a"), k("d")])]),
            unique_lgg_c,
        ),
    ];
    for (s, t, lgg) in cases {
        let lgg = lgg(&s, &t).unwrap().expect("criterion applies");
        let (ls, lt) = (ground_to_term(&s), ground_to_term(&t));
        let out = run_enau(&Context::new(), &ls, &lt, limits());
        assert!(!out.incomplete);
        let tics: Vec<TermInContext> = out.results.iter().map(|r| r.tic.clone()).collect();
        let survivors = minimize_set(&tics);
        assert_eq!(survivors.len(), 1, "{s} vs {t}");
        let unique = TermInContext::new(Context::new(), lgg.clone());
        assert!(tic_equivalent(&tics[survivors[0]], &unique), "{lgg} vs {}", tics[survivors[0]].term);
        for tic in &tics {
            assert!(tic_subset(&unique, tic), "{lgg} is not below {}", tic.term);
        }
    }
}
