use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default training set size.
pub const DEFAULT_TRAINING_SIZE: usize = 1000;

/// Finite set of parameter points on which bounds are certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    points: Vec<Vec<f64>>,
    /// Seed of the random draw; `None` for grids and explicit lists.
    seed: Option<u64>,
}

impl TrainingSet {
    /// `size` independent uniform points in the box `domain`.
    pub fn random(domain: &[(f64, f64)], size: usize, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::Argument("training set must be nonempty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(size);
        let mut seen = std::collections::HashSet::new();
        let mut attempts = 0;
        while points.len() < size {
            attempts += 1;
            if attempts > 100 * size {
                return Err(Error::Argument(format!("could not draw {size} distinct points from the domain")));
            }
            let p: Vec<f64> =
                domain.iter().map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect();
            let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
            if seen.insert(key) {
                points.push(p);
            }
        }
        Ok(Self { points, seed: Some(seed) })
    }

    /// `n` equispaced points including both endpoints of a one-parameter domain.
    pub fn grid(domain: &[(f64, f64)], n: usize) -> Result<Self> {
        if domain.len() != 1 {
            return Err(Error::Argument(format!("grid needs a 1-parameter domain, got {}", domain.len())));
        }
        if n == 0 {
            return Err(Error::Argument("training set must be nonempty".into()));
        }
        let (lo, hi) = domain[0];
        let points = (0..n)
            .map(|i| {
                let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                vec![if i + 1 == n { hi } else { lo + t * (hi - lo) }]
            })
            .collect();
        Self::from_points(domain, points)
    }

    /// Validates an explicit list: every point inside `domain`, no duplicates.
    pub fn from_points(domain: &[(f64, f64)], points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("training set must be nonempty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (k, p) in points.iter().enumerate() {
            if p.len() != domain.len() || !p.iter().zip(domain).all(|(v, (lo, hi))| lo <= v && v <= hi) {
                return Err(Error::Argument(format!("training point {k} = {p:?} lies outside the domain")));
            }
            let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::Argument(format!("training point {k} = {p:?} is a duplicate")));
            }
        }
        Ok(Self { points, seed: None })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_points_are_inside_and_reproducible() {
        let d = [(0.0, 0.2), (-1.0, 1.0)];
        let a = TrainingSet::random(&d, 200, 5).unwrap();
        let b = TrainingSet::random(&d, 200, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.points().iter().all(|p| (0.0..=0.2).contains(&p[0]) && (-1.0..=1.0).contains(&p[1])));
    }

    #[test]
    fn grid_hits_endpoints() {
        let g = TrainingSet::grid(&[(0.0, std::f64::consts::PI)], 64).unwrap();
        assert_eq!(g.points()[0], vec![0.0]);
        assert_eq!(g.points()[63], vec![std::f64::consts::PI]);
    }

    #[test]
    fn rejects_bad_lists() {
        let d = [(0.0, 1.0)];
        assert!(TrainingSet::from_points(&d, vec![vec![0.5], vec![0.5]]).is_err());
        assert!(TrainingSet::from_points(&d, vec![vec![1.5]]).is_err());
    }
}
