use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use subscm::greedy::GreedyOptions;
use subscm::linalg::{dense_eigenvalues, EigenOptions, HermitianOperator};
use subscm::problems::{make_random_family, parse_theta};
use subscm::scm::{
    compute_bounding_box, lower_bound, rayleigh_vector, scm_greedy, upper_bound, AffineFamily, ScmState, TrainingSet,
};

fn lambda_min(f: &AffineFamily, mu: &[f64]) -> f64 {
    dense_eigenvalues(&f.assemble_dense(mu).unwrap())[0]
}

fn state_with(f: &AffineFamily, samples: usize, rng: &mut ChaCha8Rng) -> ScmState {
    let mut state = ScmState::new();
    let opts = EigenOptions::default();
    for _ in 0..samples {
        let mu = f.random_point(rng);
        state.add_sample(f, &mu, &opts).unwrap();
    }
    state
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn box_contains_rayleigh_vectors(q in 2usize..5, n in 5usize..80, seed in any::<u64>()) {
        let f = make_random_family(q, n, 0.5, seed).unwrap();
        let b = compute_bounding_box(&f, &EigenOptions::default()).unwrap();
        for k in 0..q {
            prop_assert!(b.lower[k] <= b.upper[k]);
            prop_assert!(b.lower[k].is_finite() && b.upper[k].is_finite());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let u = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let r = rayleigh_vector(&f, &u.normalize()).unwrap();
            prop_assert!(b.contains(&r, 1e-6));
        }
    }

    #[test]
    fn training_sets_are_in_domain_and_distinct(size in 1usize..400, seed in any::<u64>(), p in 1usize..4) {
        let domain: Vec<(f64, f64)> = (0..p).map(|k| (-(k as f64) - 0.5, k as f64 + 1.0)).collect();
        let xi = TrainingSet::random(&domain, size, seed).unwrap();
        prop_assert_eq!(xi.len(), size);
        for pt in xi.points() {
            prop_assert!(pt.iter().zip(&domain).all(|(v, (lo, hi))| lo <= v && v <= hi));
        }
        let mut keys: Vec<Vec<u64>> = xi.points().iter().map(|p| p.iter().map(|v| v.to_bits()).collect()).collect();
        keys.sort();
        keys.dedup();
        prop_assert_eq!(keys.len(), size);
        let again = TrainingSet::random(&domain, size, seed).unwrap();
        prop_assert_eq!(again.points(), xi.points());
    }

    #[test]
    fn samples_hold_smallest_eigenpairs(q in 2usize..5, n in 5usize..60, seed in any::<u64>()) {
        let f = make_random_family(q, n, 0.5, seed).unwrap();
        let b = compute_bounding_box(&f, &EigenOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = state_with(&f, 4, &mut rng);
        for s in &state.samples {
            let exact = lambda_min(&f, &s.mu);
            prop_assert!((s.lambda - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
            prop_assert!(b.contains(&s.rayleigh, 1e-6));
        }
    }

    #[test]
    fn bounds_enclose_lambda_min(q in 2usize..5, n in 5usize..60, j in 1usize..8, seed in any::<u64>()) {
        let f = make_random_family(q, n, 0.5, seed).unwrap();
        let b = compute_bounding_box(&f, &EigenOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = state_with(&f, j, &mut rng);
        for _ in 0..20 {
            let mu = f.random_point(&mut rng);
            let exact = lambda_min(&f, &mu);
            let (lb, _) = lower_bound(&state, &f, &b, &mu).unwrap();
            let ub = upper_bound(&state, &f, &mu).unwrap();
            prop_assert!(lb <= exact + 1e-8, "lb {lb} above {exact}");
            prop_assert!(ub >= exact - 1e-8, "ub {ub} below {exact}");
        }
        for s in &state.samples {
            let (lb, _) = lower_bound(&state, &f, &b, &s.mu).unwrap();
            let ub = upper_bound(&state, &f, &s.mu).unwrap();
            prop_assert!((lb - s.lambda).abs() <= 1e-8 * (1.0 + s.lambda.abs()));
            prop_assert!((ub - s.lambda).abs() <= 1e-8 * (1.0 + s.lambda.abs()));
        }
    }

    #[test]
    fn adding_samples_never_loosens_bounds(q in 2usize..4, n in 5usize..40, seed in any::<u64>()) {
        let f = make_random_family(q, n, 0.5, seed).unwrap();
        let b = compute_bounding_box(&f, &EigenOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let probes: Vec<Vec<f64>> = (0..10).map(|_| f.random_point(&mut rng)).collect();
        let mut state = ScmState::new();
        let mut prev: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, f64::INFINITY); probes.len()];
        for _ in 0..5 {
            let mu = f.random_point(&mut rng);
            state.add_sample(&f, &mu, &EigenOptions::default()).unwrap();
            for (k, p) in probes.iter().enumerate() {
                let (lb, _) = lower_bound(&state, &f, &b, p).unwrap();
                let ub = upper_bound(&state, &f, p).unwrap();
                prop_assert!(lb >= prev[k].0 - 1e-12 * (1.0 + lb.abs()));
                prop_assert!(ub <= prev[k].1);
                prev[k] = (lb, ub);
            }
        }
    }
}

#[test]
fn one_term_family_converges_after_one_sample() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = DMatrix::from_fn(12, 12, |_, _| rng.random_range(-1.0..1.0));
    let spd = &g * g.transpose() + DMatrix::identity(12, 12);
    let a = Arc::new(HermitianOperator::from_dense(spd).unwrap());
    let f = AffineFamily::new(vec![a], vec![parse_theta("1 + mu1").unwrap()], vec![(0.0, 1.0)]).unwrap();
    let xi = TrainingSet::random(f.domain(), 50, 1).unwrap();
    let run = scm_greedy(&f, &xi, &GreedyOptions::default()).unwrap();
    assert!(run.converged());
    assert_eq!(run.state.len(), 1);
    assert!(run.final_max_ratio().abs() <= 1e-12, "{}", run.final_max_ratio());
}
