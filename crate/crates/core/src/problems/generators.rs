//! Synthetic affine families.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::expr::{parse_theta, Expr};
use crate::error::{Error, Result};
use crate::linalg::{dense_eigenvalues, CsrMatrix, HermitianOperator, Scalar};
use crate::scm::AffineFamily;

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| f64::sample_normal(rng));
    (&a + a.transpose()).scale(0.5)
}

fn dense_term(m: DMatrix<f64>) -> Arc<HermitianOperator> {
    Arc::new(HermitianOperator::dense_trusted(m))
}

/// `A(μ) = A_1 + μ_1 A_2 + … + μ_{Q−1} A_Q` on `[0, δ]^{Q−1}`, each `A_q` the
/// symmetric part of a matrix with independent standard normal entries.
pub fn make_random_family(q: usize, n: usize, delta: f64, seed: u64) -> Result<AffineFamily> {
    if q < 2 {
        return Err(Error::Argument(format!("random family needs Q >= 2, got {q}")));
    }
    if n == 0 || !(delta >= 0.0) {
        return Err(Error::Argument(format!("invalid size N = {n} or width delta = {delta}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (0..q).map(|_| dense_term(random_symmetric(n, &mut rng))).collect();
    let mut theta = vec![Expr::num(1.0)];
    theta.extend((0..q - 1).map(Expr::var));
    Ok(AffineFamily::new(terms, theta, vec![(0.0, delta); q - 1])?
        .with_label(format!("random:Q={q},N={n},delta={delta},seed={seed}")))
}

/// `A(μ) = cos μ · diag(1, −1) + sin μ · [[0, −1], [−1, 0]]` on `[0, π]`.
/// Every `A(μ)` has eigenvalues `±1`, so the joint numerical range is the unit circle.
pub fn make_example_2_3() -> AffineFamily {
    let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let a2 = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
    let theta = vec![parse_theta("cos(mu1)").expect("valid"), parse_theta("sin(mu1)").expect("valid")];
    AffineFamily::new(vec![dense_term(a1), dense_term(a2)], theta, vec![(0.0, PI)])
        .expect("consistent")
        .with_label("circle")
}

/// Number of grid points on which the analytic family's gap is verified.
pub const GAP_CHECK_POINTS: usize = 200;

/// `A(μ) = A_1 + μA_2 + μ²/2·A_3` on `[−1, 1]`, with `λ_2(μ) − λ_1(μ) ≥ gap/2`
/// verified on a 200-point grid. `A_1` has spectrum `0, 2·gap, …` so the
/// smallest eigenvalue starts well separated; `A_2` and `A_3` are random with
/// norms comparable to `gap`, so the eigenvector turns along the interval.
pub fn make_1param_analytic(n: usize, gap: f64, seed: u64) -> Result<AffineFamily> {
    if !(gap > 0.0) {
        return Err(Error::Argument(format!("gap must be positive, got {gap}")));
    }
    if n < 2 {
        return Err(Error::Argument("need N >= 2".into()));
    }
    for attempt in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let spectrum: Vec<f64> =
            (0..n).map(|j| if j == 0 { 0.0 } else { 2.0 * gap + gap * j as f64 / n as f64 * 4.0 }).collect();
        let basis = random_orthogonal(n, &mut rng);
        let a1 = &basis * DMatrix::from_diagonal(&DVector::from_vec(spectrum)) * basis.transpose();
        let a1 = (&a1 + a1.transpose()).scale(0.5);
        let a2 = scaled_to_norm(random_symmetric(n, &mut rng), 0.6 * gap);
        let a3 = scaled_to_norm(random_symmetric(n, &mut rng), 0.6 * gap);
        let theta = vec![Expr::num(1.0), Expr::var(0), parse_theta("mu1*mu1/2").expect("valid")];
        let family = AffineFamily::new(vec![dense_term(a1), dense_term(a2), dense_term(a3)], theta, vec![(-1.0, 1.0)])?
            .with_label(format!("analytic:N={n},gap={gap},seed={}", seed.wrapping_add(attempt)));
        if min_gap_on_grid(&family, GAP_CHECK_POINTS)? >= gap / 2.0 {
            return Ok(family);
        }
    }
    Err(Error::Argument(format!("no instance with gap >= {} found in 10 attempts", gap / 2.0)))
}

/// Smallest `λ_2(μ) − λ_1(μ)` over an equispaced grid of a one-parameter family.
pub fn min_gap_on_grid(family: &AffineFamily, points: usize) -> Result<f64> {
    let (lo, hi) = family.domain()[0];
    let mut worst = f64::INFINITY;
    for i in 0..points {
        let mu = lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64;
        let ev = dense_eigenvalues(&family.assemble_dense(&[mu])?);
        worst = worst.min(ev[1] - ev[0]);
    }
    Ok(worst)
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| f64::sample_normal(rng));
    g.qr().q()
}

fn scaled_to_norm(m: DMatrix<f64>, norm: f64) -> DMatrix<f64> {
    let ev = dense_eigenvalues(&m);
    let current = ev[0].abs().max(ev[ev.len() - 1].abs());
    m.scale(norm / current)
}

/// Piecewise-constant diffusion on an `nx × ny` interior grid with homogeneous
/// Dirichlet boundary, five-point stencil. The rectangle is split into
/// `bx × by` blocks; block `k` (row-major from the lower left) is term `k+1`.
/// Term 1 has coefficient 1 and the others `mu1, mu2, …` on `[lo, hi]`.
pub fn make_block_diffusion(nx: usize, ny: usize, bx: usize, by: usize, lo: f64, hi: f64) -> Result<AffineFamily> {
    if nx == 0 || ny == 0 || bx == 0 || by == 0 || bx > nx + 1 || by > ny + 1 {
        return Err(Error::Argument(format!("invalid grid {nx}x{ny} with {bx}x{by} blocks")));
    }
    let q = bx * by;
    let n = nx * ny;
    let node = |i: usize, j: usize| j * nx + i;
    // Block of a point given in units of grid spacing, 0..=nx+1 by 0..=ny+1.
    let block = |x: f64, y: f64| {
        let cx = ((x / (nx + 1) as f64) * bx as f64).floor().clamp(0.0, (bx - 1) as f64) as usize;
        let cy = ((y / (ny + 1) as f64) * by as f64).floor().clamp(0.0, (by - 1) as f64) as usize;
        cy * bx + cx
    };
    let mut trip: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); q];
    let mut edge = |a: Option<usize>, b: Option<usize>, t: usize| {
        let w = 1.0;
        if let Some(a) = a {
            trip[t].push((a, a, w));
        }
        if let Some(b) = b {
            trip[t].push((b, b, w));
        }
        if let (Some(a), Some(b)) = (a, b) {
            trip[t].push((a, b, -w));
            trip[t].push((b, a, -w));
        }
    };
    // Grid coordinates run 1..=nx, 1..=ny; 0 and nx+1 / ny+1 are boundary.
    for j in 1..=ny {
        for i in 0..=nx {
            let a = (i >= 1).then(|| node(i - 1, j - 1));
            let b = (i < nx).then(|| node(i, j - 1));
            edge(a, b, block(i as f64 + 0.5, j as f64));
        }
    }
    for i in 1..=nx {
        for j in 0..=ny {
            let a = (j >= 1).then(|| node(i - 1, j - 1));
            let b = (j < ny).then(|| node(i - 1, j));
            edge(a, b, block(i as f64, j as f64 + 0.5));
        }
    }
    let terms = trip
        .into_iter()
        .map(|t| Ok(Arc::new(HermitianOperator::sparse_trusted(CsrMatrix::from_triplets(n, n, t)?))))
        .collect::<Result<Vec<_>>>()?;
    let mut theta = vec![Expr::num(1.0)];
    theta.extend((0..q - 1).map(Expr::var));
    Ok(AffineFamily::new(terms, theta, vec![(lo, hi); q - 1])?
        .with_label(format!("blocks:nx={nx},ny={ny},bx={bx},by={by}")))
}

/// Stand-in for a 10-term thermal block: `N = 1056`, `D = [0.1, 0.5]^9`.
pub fn make_thermal_block_standin() -> Result<AffineFamily> {
    Ok(make_block_diffusion(32, 33, 5, 2, 0.1, 0.5)?.with_label("thermal-block-standin"))
}

/// Stand-in for a 3-term fin problem: `N = 1311`, `D = [0.1, 0.5]^2`.
pub fn make_fin_standin() -> Result<AffineFamily> {
    Ok(make_block_diffusion(57, 23, 3, 1, 0.1, 0.5)?.with_label("fin-standin"))
}

/// Stand-in for a 16-term elasticity-like problem: `N = 2183`, `D = [0.1, 0.5]^15`.
pub fn make_elasticity_standin() -> Result<AffineFamily> {
    Ok(make_block_diffusion(59, 37, 4, 4, 0.1, 0.5)?.with_label("elasticity-standin"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_family_theta_at_origin() {
        let f = make_random_family(4, 10, 0.2, 1).unwrap();
        assert_eq!(f.theta(&[0.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.domain(), &[(0.0, 0.2); 3]);
        assert!(f.symmetry_probe(5, 3).unwrap() < 1e-12);
    }

    #[test]
    fn circle_family() {
        let f = make_example_2_3();
        for mu in [0.0, PI / 4.0, 1.0, PI] {
            let ev = dense_eigenvalues(&f.assemble_dense(&[mu]).unwrap());
            assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        }
        let r = f.rayleigh_vector(&DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_eq!(r, vec![-1.0, 0.0]);
        let r = f.rayleigh_vector(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(r, vec![1.0, 0.0]);
    }

    #[test]
    fn analytic_family_gap_and_origin() {
        let f = make_1param_analytic(40, 1.0, 3).unwrap();
        assert!(min_gap_on_grid(&f, GAP_CHECK_POINTS).unwrap() >= 0.5);
        assert_eq!(f.assemble_dense(&[0.0]).unwrap(), f.term(0).to_dense());
        let a = f.assemble_dense(&[0.37]).unwrap();
        let defect = (&a - a.transpose()).amax();
        assert!(defect <= 1e-14);
    }

    #[test]
    fn stand_in_signatures() {
        let t = make_thermal_block_standin().unwrap();
        assert_eq!((t.q(), t.dim(), t.p()), (10, 1056, 9));
        assert_eq!(t.domain()[0], (0.1, 0.5));
        let fin = make_fin_standin().unwrap();
        assert_eq!((fin.q(), fin.dim()), (3, 1311));
        let e = make_elasticity_standin().unwrap();
        assert_eq!((e.q(), e.dim()), (16, 2183));
    }

    #[test]
    fn block_diffusion_with_unit_coefficients_is_the_laplacian() {
        let f = make_block_diffusion(4, 3, 2, 2, 1.0, 1.0).unwrap();
        let a = f.assemble_dense(&[1.0, 1.0, 1.0]).unwrap();
        let s = a[(0, 0)];
        for i in 0..12 {
            assert!((a[(i, i)] - s).abs() < 1e-14);
        }
        let ev = dense_eigenvalues(&a);
        assert!(ev[0] > 0.0);
    }
}
