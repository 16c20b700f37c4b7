//! Gauss–Hermite rule for expectations against the standard normal law.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_NODES: usize = 7;

/// `E[h(G)] ~ sum_m weights[m] * h(nodes[m])` for `G ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_NODES).expect("default rule size is valid")
    }
}

impl Quadrature {
    /// `m`-point rule, exact for polynomials of degree `2m - 1`.
    ///
    /// Nodes come from the eigenvalues of the Jacobi matrix of the
    /// probabilists' Hermite polynomials, then get one Newton polish on the
    /// orthonormal recurrence; weights use the Christoffel formula.
    pub fn gauss_hermite(m: usize) -> Result<Self> {
        if !(1..=64).contains(&m) {
            return Err(Error::input("solver", format!("quadrature size {m} outside 1..=64")));
        }
        let jacobi = DMatrix::from_fn(m, m, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (p, p_prev, _) = orthonormal(m, *x);
                let dp = (m as f64).sqrt() * p_prev;
                if dp != 0.0 {
                    *x -= p / dp;
                }
            }
        }
        // enforce exact symmetry
        for i in 0..m / 2 {
            let a = 0.5 * (nodes[m - 1 - i] - nodes[i]);
            nodes[i] = -a;
            nodes[m - 1 - i] = a;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }

        let mut weights: Vec<f64> = nodes.iter().map(|&x| 1.0 / orthonormal(m, x).2).collect();
        for i in 0..m / 2 {
            let w = 0.5 * (weights[i] + weights[m - 1 - i]);
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, h: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * h(x)).sum()
    }
}

/// Returns `(p_m(x), p_{m-1}(x), sum_{k<m} p_k(x)^2)` for the orthonormal
/// Hermite polynomials under the standard normal weight.
fn orthonormal(m: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sum_sq = 0.0;
    for k in 0..m {
        sum_sq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sum_sq)
}
