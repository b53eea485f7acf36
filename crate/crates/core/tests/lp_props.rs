#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subscm::lp::{lp_minimize, tighten_and_resolve, LpOptions, LpProblem, RowTag, TightenStatus};

/// A random box around the origin and rows `a·y ≥ min_k a·p_k` over a few
/// interior points, so the hull of those points is always feasible.
fn random_lp(q: usize, rows: usize, seed: u64) -> (LpProblem, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lower: Vec<f64> = (0..q).map(|_| rng.random_range(-2.0..-0.5)).collect();
    let upper: Vec<f64> = (0..q).map(|_| rng.random_range(0.5..2.0)).collect();
    let points: Vec<Vec<f64>> =
        (0..4).map(|_| (0..q).map(|k| rng.random_range(lower[k]..upper[k])).collect()).collect();
    let objective: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut p = LpProblem::new(objective, lower, upper);
    for _ in 0..rows {
        let a: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = points.iter().map(|pt| dot(&a, pt)).fold(f64::INFINITY, f64::min);
        p = p.with_row(a, b);
    }
    (p, points)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn gauss_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

/// All constraints as `(a, b)` with `a·y ≥ b`, box faces included.
fn all_rows(p: &LpProblem) -> Vec<(Vec<f64>, f64)> {
    let q = p.dim();
    let mut rows = p.rows.clone();
    for k in 0..q {
        let mut e = vec![0.0; q];
        e[k] = 1.0;
        rows.push((e.clone(), p.lower[k]));
        e[k] = -1.0;
        rows.push((e, -p.upper[k]));
    }
    rows
}

fn feasible(rows: &[(Vec<f64>, f64)], y: &[f64], tol: f64) -> bool {
    rows.iter().all(|(a, b)| dot(a, y) >= b - tol * (1.0 + b.abs()))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Minimum over all feasible vertices.
fn vertex_oracle(p: &LpProblem) -> f64 {
    let rows = all_rows(p);
    let mut best = f64::INFINITY;
    for s in subsets(rows.len(), p.dim()) {
        let m = s.iter().map(|&i| rows[i].0.clone()).collect();
        let rhs = s.iter().map(|&i| rows[i].1).collect();
        if let Some(y) = gauss_solve(m, rhs) {
            if feasible(&rows, &y, 1e-9) {
                best = best.min(dot(&p.objective, &y));
            }
        }
    }
    best
}

fn row_of(p: &LpProblem, tag: RowTag) -> (Vec<f64>, f64) {
    let q = p.dim();
    match tag {
        RowTag::Sample(i) => p.rows[i].clone(),
        RowTag::BoxLower(k) => {
            let mut e = vec![0.0; q];
            e[k] = 1.0;
            (e, p.lower[k])
        }
        RowTag::BoxUpper(k) => {
            let mut e = vec![0.0; q];
            e[k] = 1.0;
            (e, p.upper[k])
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn value_matches_vertex_enumeration(q in 2usize..5, rows in 0usize..7, seed in any::<u64>()) {
        let (p, _) = random_lp(q, rows, seed);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        let oracle = vertex_oracle(&p);
        prop_assert!((s.value - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), "{} vs {}", s.value, oracle);
    }

    #[test]
    fn value_is_below_random_feasible_points(q in 2usize..5, rows in 1usize..8, seed in any::<u64>()) {
        let (p, _) = random_lp(q, rows, seed);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        let all = all_rows(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51);
        let mut checked = 0;
        for _ in 0..20000 {
            let y: Vec<f64> = (0..q).map(|k| rng.random_range(p.lower[k]..=p.upper[k])).collect();
            if feasible(&all, &y, 0.0) {
                checked += 1;
                prop_assert!(s.value <= dot(&p.objective, &y) + 1e-12);
                if checked == 1000 {
                    break;
                }
            }
        }
    }

    #[test]
    fn solution_is_feasible_and_reconstructed(q in 2usize..5, rows in 0usize..8, seed in any::<u64>()) {
        let (p, _) = random_lp(q, rows, seed);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        let y = s.y.as_slice();
        for k in 0..q {
            prop_assert!(y[k] >= p.lower[k] - 1e-9 && y[k] <= p.upper[k] + 1e-9);
        }
        for (a, b) in &p.rows {
            prop_assert!(dot(a, y) >= b - 1e-9);
        }
        prop_assert_eq!(s.active.len(), q);
        let mut sorted = s.active.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), q);
        let resid = (&s.theta * &s.y - &s.psi).norm();
        prop_assert!(resid <= 1e-10 * s.psi.norm().max(1e-300));
        let m: Vec<Vec<f64>> = s.active.iter().map(|&t| row_of(&p, t).0).collect();
        let rhs: Vec<f64> = s.active.iter().map(|&t| row_of(&p, t).1).collect();
        let again = gauss_solve(m, rhs).unwrap();
        for k in 0..q {
            prop_assert!((again[k] - y[k]).abs() <= 1e-10 * (1.0 + y[k].abs()));
        }
    }

    #[test]
    fn redundant_rows_do_not_change_the_value(q in 2usize..5, rows in 1usize..6, seed in any::<u64>(), slack in 0.0f64..1.0) {
        let (p, _) = random_lp(q, rows, seed);
        let base = lp_minimize(&p, &LpOptions::default()).unwrap();
        let mut dup = p.clone();
        for (a, b) in p.rows.clone() {
            dup = dup.with_row(a.clone(), b);
            dup = dup.with_row(a, b - slack);
        }
        let again = lp_minimize(&dup, &LpOptions::default()).unwrap();
        prop_assert!((again.value - base.value).abs() <= 1e-12 * (1.0 + base.value.abs()));
    }

    #[test]
    fn tightened_solution_matches_direct_solve(q in 2usize..5, rows in 2usize..8, seed in any::<u64>()) {
        let (p, _) = random_lp(q, rows, seed);
        let s = lp_minimize(&p, &LpOptions::default()).unwrap();
        prop_assume!(s.has_sample_row() && s.condition < 1e8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb);
        let mut bumps = BTreeMap::new();
        for t in &s.active {
            if let RowTag::Sample(i) = t {
                bumps.insert(*i, rng.random_range(0.0..0.5));
            }
        }
        let t = tighten_and_resolve(&s, &bumps, &p.objective).unwrap();
        prop_assert_eq!(t.status, TightenStatus::Applied);
        let m: Vec<Vec<f64>> = s.active.iter().map(|&t| row_of(&p, t).0).collect();
        let rhs: Vec<f64> = s
            .active
            .iter()
            .map(|&t| row_of(&p, t).1 + if let RowTag::Sample(i) = t { bumps[&i] } else { 0.0 })
            .collect();
        let direct = gauss_solve(m, rhs).unwrap();
        for k in 0..q {
            prop_assert!((t.y[k] - direct[k]).abs() <= 1e-12 * (1.0 + direct[k].abs()));
        }
        prop_assert!((t.eta - dot(&p.objective, &direct)).abs() <= 1e-10 * (1.0 + t.eta.abs()));

        let zero: BTreeMap<usize, f64> = bumps.keys().map(|&i| (i, 0.0)).collect();
        let same = tighten_and_resolve(&s, &zero, &p.objective).unwrap();
        prop_assert!((same.eta - s.value).abs() <= 1e-12 * (1.0 + s.value.abs()));
    }
}
