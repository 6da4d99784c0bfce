//! Explicit-seed random source used by the instance generator and the
//! random automorphism / element samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jordan::{BlockKind, Cone, Element};
use crate::linalg::Matrix;
use std::sync::Arc;

/// Seeded 64-bit PRNG with Box–Muller Gaussian samples.
///
/// Never touches OS entropy: the same seed yields the same stream on every
/// platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    /// Uniform sample in (0, 1].
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.rng.gen::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }

    /// Standard normal sample.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn gaussian_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }

    /// `½(X + Xᵀ)` with `X` an `n × n` matrix of standard normals.
    pub fn sym_gaussian(&mut self, n: usize) -> Matrix {
        let data = self.gaussian_vec(n * n);
        let mut x = Matrix::from_row_major(n, n, data).expect("n*n entries");
        x.symmetrize();
        x
    }

    /// Uniformly random unit vector of length `n`.
    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v = self.gaussian_vec(n);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// Random orthogonal matrix (Q factor of a Gaussian matrix).
    pub fn orthogonal(&mut self, n: usize) -> Matrix {
        let data = self.gaussian_vec(n * n);
        let g = Matrix::from_row_major(n, n, data).expect("n*n entries");
        crate::linalg::householder_q(&g)
    }

    /// Random permutation of `0..n` (Fisher–Yates).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.index(i + 1);
            p.swap(i, j);
        }
        p
    }
}

/// Random element of J: Gaussian coordinates on orthant and second-order
/// blocks, `½(X + Xᵀ)` on PSD blocks.
pub fn random_element(cone: &Arc<Cone>, rng: &mut SeededRng) -> Element {
    let mut coords = Vec::with_capacity(cone.dim());
    for block in cone.blocks() {
        match *block {
            BlockKind::Orthant(k) => coords.extend(rng.gaussian_vec(k)),
            BlockKind::SecondOrder(m) => coords.extend(rng.gaussian_vec(m)),
            BlockKind::Psd(k) => coords.extend(crate::jordan::svec(&rng.sym_gaussian(k))),
        }
    }
    Element::new(cone, coords).expect("coordinate count matches cone dimension")
}

/// Random interior point `exp(spread · r)` with `r` from [`random_element`].
pub fn random_interior(cone: &Arc<Cone>, rng: &mut SeededRng, spread: f64) -> Element {
    (&random_element(cone, rng) * spread).exp().expect("exp of a finite element")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.gaussian().to_bits(), b.gaussian().to_bits());
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = SeededRng::new(1);
        let n = 20000;
        let xs = rng.gaussian_vec(n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn permutation_is_bijective() {
        let mut rng = SeededRng::new(3);
        let mut p = rng.permutation(17);
        p.sort_unstable();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }
}
