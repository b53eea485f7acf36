use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subscm::problems::expr::{BinOp, Func};
use subscm::problems::{
    load_family, make_1param_analytic, make_block_diffusion, make_example_2_3, make_random_family, parse_theta,
    write_manifest, Expr,
};
use subscm::scm::AffineFamily;
use subscm::Error;

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-5.0f64..5.0).prop_map(Expr::Num),
        (0usize..3).prop_map(Expr::Var),
        Just(Expr::Num(0.1)),
        Just(Expr::Num(1e-7)),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        let func = prop_oneof![Just(Func::Cos), Just(Func::Sin), Just(Func::Exp), Just(Func::Sqrt)];
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
            (func, inner).prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

fn same(a: &Result<f64, Error>, b: &Result<f64, Error>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-15 * x.abs().max(1.0),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

fn assert_symmetric(f: &AffineFamily) {
    let defect = f.symmetry_probe(5, 11).unwrap();
    assert!(defect <= 1e-12, "{}: symmetry defect {defect:e}", f.label());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_expressions_reparse(e in expr_strategy(), seed in any::<u64>()) {
        let text = e.to_string();
        let back = parse_theta(&text).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let mu: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (a, b) = (e.eval(&mu), back.eval(&mu));
            prop_assert!(same(&a, &b), "{text}: {a:?} vs {b:?}");
        }
        prop_assert_eq!(back.to_string(), text.clone());
    }

    #[test]
    fn random_families_are_hermitian(q in 2usize..6, n in 2usize..60, delta in 0.0f64..1.0, seed in any::<u64>()) {
        let f = make_random_family(q, n, delta, seed).unwrap();
        prop_assert!(f.symmetry_probe(5, seed).unwrap() <= 1e-12);
    }
}

#[test]
fn generated_families_pass_the_symmetry_probe() {
    assert_symmetric(&make_example_2_3());
    assert_symmetric(&make_1param_analytic(50, 1.0, 3).unwrap());
    assert_symmetric(&make_block_diffusion(12, 9, 3, 2, 0.1, 1.0).unwrap());
    assert_symmetric(&subscm::problems::make_thermal_block_standin().unwrap());
    assert_symmetric(&subscm::problems::make_fin_standin().unwrap());
    assert_symmetric(&subscm::problems::make_elasticity_standin().unwrap());
}

#[test]
fn loaded_families_match_their_source() {
    let tmp = tempfile::TempDir::new().unwrap();
    let sources = [
        ("example", make_example_2_3()),
        ("random", make_random_family(3, 25, 0.5, 9).unwrap()),
        ("blocks", make_block_diffusion(6, 5, 2, 2, 0.1, 1.0).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, f) in sources {
        let path = write_manifest(tmp.path().join(name), &f, None).unwrap();
        let loaded = load_family(&path).unwrap().family;
        assert_symmetric(&loaded);
        assert_eq!((loaded.q(), loaded.p(), loaded.dim()), (f.q(), f.p(), f.dim()));
        assert_eq!(loaded.domain(), f.domain());
        for q in 0..f.q() {
            assert_eq!(loaded.term(q).to_dense(), f.term(q).to_dense(), "{name}: term {q}");
        }
        for _ in 0..20 {
            let mu = f.random_point(&mut rng);
            assert_eq!(loaded.theta(&mu).unwrap(), f.theta(&mu).unwrap(), "{name}");
        }
    }
}

#[test]
fn unknown_function_is_reported_at_its_offset() {
    match parse_theta("co(mu1)") {
        Err(Error::Parse { offset, message, .. }) => {
            assert_eq!(offset, 0);
            assert!(message.contains("unknown function"), "{message}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}
