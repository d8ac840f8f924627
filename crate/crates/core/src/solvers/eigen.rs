//! Lanczos estimates of extreme eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{axpy, dot};

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosResult {
    pub largest: f64,
    pub smallest: f64,
    pub steps: usize,
    /// Residual bound of the largest Ritz value relative to its magnitude.
    pub residual: f64,
    pub converged: bool,
}

/// Lanczos with full reorthogonalization for an operator `t` that is
/// self-adjoint in the inner product `<x, W y>` (`W = I` when `w` is `None`).
pub fn lanczos(
    n: usize,
    t: &dyn Fn(&[f64]) -> Vec<f64>,
    w: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
    max_steps: usize,
    tol: f64,
    seed: u64,
) -> LanczosResult {
    let apply_w = |x: &[f64]| -> Vec<f64> {
        match w {
            Some(w) => w(x),
            None => x.to_vec(),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let wv = apply_w(&v);
    let nrm = dot(&v, &wv).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut wbasis: Vec<Vec<f64>> = vec![wv.iter().map(|x| x / nrm).collect()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut result = LanczosResult {
        largest: f64::NAN,
        smallest: f64::NAN,
        steps: 0,
        residual: f64::INFINITY,
        converged: false,
    };
    let steps = max_steps.min(n);
    for j in 0..steps {
        let mut u = t(&basis[j]);
        let a = dot(&wbasis[j], &u);
        alphas.push(a);
        for _ in 0..2 {
            for (vi, wvi) in basis.iter().zip(&wbasis) {
                let c = dot(wvi, &u);
                axpy(-c, vi, &mut u);
            }
        }
        let wu = apply_w(&u);
        let b = dot(&u, &wu).max(0.0).sqrt();
        let k = alphas.len();
        let tri = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alphas[r]
            } else if r + 1 == c {
                betas[r]
            } else if c + 1 == r {
                betas[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (imax, &lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap();
        let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let res = (b * eig.eigenvectors[(k - 1, imax)]).abs() / lmax.abs().max(f64::MIN_POSITIVE);
        result = LanczosResult {
            largest: lmax,
            smallest: lmin,
            steps: k,
            residual: res,
            converged: res <= tol,
        };
        if res <= tol || b <= 1e-14 * lmax.abs() {
            result.converged = true;
            break;
        }
        betas.push(b);
        basis.push(u.iter().map(|x| x / b).collect());
        wbasis.push(wu.iter().map(|x| x / b).collect());
    }
    result
}
