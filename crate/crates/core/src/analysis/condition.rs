//! Spectral condition number `sigma_max / sigma_min`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{lanczos, CsrMatrix, LinearOperator, ProfileLu};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub cond: f64,
    pub dense: bool,
}

/// Dimension up to which the full SVD is used.
pub const DENSE_SVD_LIMIT: usize = 600;

pub fn condition_dense(a: &DMatrix<f64>) -> Result<ConditionEstimate> {
    let sv = a.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin <= 0.0 {
        return Err(Error::Singular {
            what: "matrix has a zero singular value".into(),
            pivot: smin,
            scale: smax,
        });
    }
    Ok(ConditionEstimate {
        sigma_max: smax,
        sigma_min: smin,
        cond: smax / smin,
        dense: true,
    })
}

/// Lanczos on `A^T A` and on `A^{-1} A^{-T}` (through a sparse LU).
pub fn condition_lanczos(a: &CsrMatrix, steps: usize, tol: f64) -> Result<ConditionEstimate> {
    let n = a.shape().0;
    let at = a.transpose();
    let ata = |x: &[f64]| at.apply_vec(&a.apply_vec(x));
    let top = lanczos(n, &ata, None, steps, tol, 11);
    let lu = ProfileLu::factor(a)?;
    let inv = |x: &[f64]| lu.solve(&lu.solve_transpose(x));
    let bottom = lanczos(n, &inv, None, steps, tol, 13);
    let sigma_max = top.largest.sqrt();
    let sigma_min = 1.0 / bottom.largest.sqrt();
    Ok(ConditionEstimate {
        sigma_max,
        sigma_min,
        cond: sigma_max / sigma_min,
        dense: false,
    })
}

pub fn estimate_condition(a: &CsrMatrix) -> Result<ConditionEstimate> {
    if a.shape().0 != a.shape().1 {
        return Err(Error::InvalidArgument("condition number needs a square matrix".into()));
    }
    if a.shape().0 <= DENSE_SVD_LIMIT {
        condition_dense(&a.to_dense())
    } else {
        condition_lanczos(a, 300, 1e-10)
    }
}
