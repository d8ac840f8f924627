//! Smallest generalized eigenvalue of `PG^T FE^{-1} PG w = lambda IF w`.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::assembly::SystemMatrices;
use crate::error::{Error, Result};
use crate::geometry::{Discretization, LevelSet, Side};
use crate::ife_local::CoefficientPair;
use crate::mesh::{build_background_mesh, BoxDomain};
use crate::solvers::{lanczos, CsrMatrix, LinearOperator, ProfileLu};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenMethod {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfSupOptions {
    /// Largest dimension handled by the dense path when no method is forced.
    pub dense_limit: usize,
    pub max_steps: usize,
    pub tol: f64,
    pub seed: u64,
    pub force: Option<EigenMethod>,
}

impl Default for InfSupOptions {
    fn default() -> Self {
        Self {
            dense_limit: 800,
            max_steps: 400,
            tol: 1e-10,
            seed: 7,
            force: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSupResult {
    pub lambda_min: f64,
    pub eta: f64,
    pub dim: usize,
    pub method: EigenMethod,
    /// Lanczos steps (0 for the dense path).
    pub steps: usize,
    pub converged: bool,
}

fn check_square(a: &CsrMatrix, n: usize, what: &str) -> Result<()> {
    if a.shape() != (n, n) {
        return Err(Error::InvalidArgument(format!(
            "{what} has shape {:?}, expected {n}x{n}",
            a.shape()
        )));
    }
    Ok(())
}

fn dense_cholesky(a: &CsrMatrix, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let d = a.to_dense();
    let sym = (&d + d.transpose()) * 0.5;
    Cholesky::new(sym).ok_or_else(|| Error::Singular {
        what: format!("{what} is not positive definite"),
        pivot: 0.0,
        scale: a.max_abs(),
    })
}

/// Dense generalized eigenvalue solve via the Cholesky factor of `IF`.
pub fn infsup_dense(pg: &CsrMatrix, fe: &CsrMatrix, ife: &CsrMatrix) -> Result<InfSupResult> {
    let n = pg.shape().0;
    check_square(pg, n, "B^PG")?;
    check_square(fe, n, "B^FE")?;
    check_square(ife, n, "B^IF")?;
    let fe_c = dense_cholesky(fe, "B^FE")?;
    let if_c = dense_cholesky(ife, "B^IF")?;
    let p = pg.to_dense();
    let k = p.transpose() * fe_c.solve(&p);
    let l = if_c.l();
    let li_k = l
        .solve_lower_triangular(&k)
        .ok_or_else(|| Error::Internal("triangular solve failed".into()))?;
    let s = l
        .solve_lower_triangular(&li_k.transpose())
        .ok_or_else(|| Error::Internal("triangular solve failed".into()))?;
    let s: DMatrix<f64> = (&s + s.transpose()) * 0.5;
    let lambda_min = s.symmetric_eigenvalues().min().max(0.0);
    Ok(InfSupResult {
        lambda_min,
        eta: lambda_min.sqrt(),
        dim: n,
        method: EigenMethod::Dense,
        steps: 0,
        converged: true,
    })
}

/// Lanczos on `PG^{-1} FE PG^{-T} IF`, self-adjoint in the `IF` inner product;
/// its largest eigenvalue is `1 / lambda_min`.
pub fn infsup_lanczos(pg: &CsrMatrix, fe: &CsrMatrix, ife: &CsrMatrix, opts: &InfSupOptions) -> Result<InfSupResult> {
    let n = pg.shape().0;
    check_square(pg, n, "B^PG")?;
    check_square(fe, n, "B^FE")?;
    check_square(ife, n, "B^IF")?;
    let lu = ProfileLu::factor(pg)?;
    let t = |w: &[f64]| -> Vec<f64> {
        let y = ife.apply_vec(w);
        let y = lu.solve_transpose(&y);
        let y = fe.apply_vec(&y);
        lu.solve(&y)
    };
    let wop = |x: &[f64]| ife.apply_vec(x);
    let r = lanczos(n, &t, Some(&wop), opts.max_steps, opts.tol, opts.seed);
    if !(r.largest > 0.0) {
        return Err(Error::Solver(format!("Lanczos produced a non-positive Ritz value {}", r.largest)));
    }
    let lambda_min = 1.0 / r.largest;
    Ok(InfSupResult {
        lambda_min,
        eta: lambda_min.sqrt(),
        dim: n,
        method: EigenMethod::Lanczos,
        steps: r.steps,
        converged: r.converged,
    })
}

pub fn estimate_infsup(pg: &CsrMatrix, fe: &CsrMatrix, ife: &CsrMatrix, opts: &InfSupOptions) -> Result<InfSupResult> {
    let method = opts.force.unwrap_or(if pg.shape().0 <= opts.dense_limit {
        EigenMethod::Dense
    } else {
        EigenMethod::Lanczos
    });
    match method {
        EigenMethod::Dense => infsup_dense(pg, fe, ife),
        EigenMethod::Lanczos => infsup_lanczos(pg, fe, ife, opts),
    }
}

/// Inf-sup estimate on the interior edges of an `n^3`-cube mesh of `[-1,1]^3`.
pub fn infsup_on_mesh(
    n: usize,
    levelset: &LevelSet,
    coeffs: &CoefficientPair,
    opts: &InfSupOptions,
) -> Result<InfSupResult> {
    let disc = Discretization::new(build_background_mesh(n, BoxDomain::symmetric_unit())?, levelset.clone())?;
    let zero = |_: &Vec3, _: Side| Vec3::zeros();
    let sys = SystemMatrices::assemble(&disc, coeffs, &zero, &zero)?;
    let red = sys.reduced();
    estimate_infsup(&red.matrix, &red.restrict(&sys.fe), &red.restrict(&sys.ife), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identical_matrices_give_one() {
        let a = laplace(40, 0.1);
        for force in [EigenMethod::Dense, EigenMethod::Lanczos] {
            let r = estimate_infsup(&a, &a, &a, &InfSupOptions { force: Some(force), ..Default::default() }).unwrap();
            assert!((r.lambda_min - 1.0).abs() < 1e-10, "{r:?}");
            assert!((r.eta - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_and_lanczos_agree_on_nonsymmetric_pencil() {
        let n = 60;
        let fe = laplace(n, 0.5);
        let ife = laplace(n, 1.0);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.7));
            if i + 1 < n {
                t.push((i, i + 1, -1.2));
                t.push((i + 1, i, -0.7));
            }
        }
        let pg = CsrMatrix::from_triplets(n, n, &t);
        let d = infsup_dense(&pg, &fe, &ife).unwrap();
        let l = infsup_lanczos(&pg, &fe, &ife, &InfSupOptions::default()).unwrap();
        assert!((d.lambda_min - l.lambda_min).abs() < 1e-8 * d.lambda_min.max(1.0), "{d:?} {l:?}");
    }
}
