//! Smoothed-aggregation algebraic multigrid for SPD matrices.

use super::direct::EnvelopeCholesky;
use super::sparse::{CsrMatrix, LinearOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgOptions {
    pub strength: f64,
    pub cycles: usize,
    pub sweeps: usize,
    pub jacobi_weight: f64,
    pub coarse_size: usize,
    pub max_levels: usize,
}

impl Default for AmgOptions {
    fn default() -> Self {
        Self {
            strength: 0.08,
            cycles: 2,
            sweeps: 2,
            jacobi_weight: 2.0 / 3.0,
            coarse_size: 200,
            max_levels: 12,
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: CsrMatrix,
    inv_diag: Vec<f64>,
    /// Prolongation to this level from the next coarser one.
    p: Option<CsrMatrix>,
    r: Option<CsrMatrix>,
}

#[derive(Debug, Clone)]
pub struct Amg {
    levels: Vec<Level>,
    coarse: EnvelopeCholesky,
    opts: AmgOptions,
}

fn aggregate(a: &CsrMatrix, theta: f64) -> (Vec<usize>, usize) {
    let n = a.shape().0;
    let d = a.diagonal();
    let strong: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            a.row(i)
                .filter(|&(j, v)| j != i && v.abs() >= theta * (d[i] * d[j]).abs().sqrt())
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let mut agg = vec![usize::MAX; n];
    let mut count = 0;
    // seeds: nodes whose strong neighbourhood is still free
    for i in 0..n {
        if agg[i] == usize::MAX && strong[i].iter().all(|&j| agg[j] == usize::MAX) {
            agg[i] = count;
            for &j in &strong[i] {
                agg[j] = count;
            }
            count += 1;
        }
    }
    // attach leftovers to a neighbouring aggregate
    let snapshot = agg.clone();
    for i in 0..n {
        if agg[i] == usize::MAX {
            if let Some(&j) = strong[i].iter().find(|&&j| snapshot[j] != usize::MAX) {
                agg[i] = snapshot[j];
            }
        }
    }
    for a in agg.iter_mut() {
        if *a == usize::MAX {
            *a = count;
            count += 1;
        }
    }
    (agg, count)
}

fn spectral_radius_dinv_a(a: &CsrMatrix, inv_diag: &[f64]) -> f64 {
    let n = inv_diag.len();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let mut y = vec![0.0; n];
    let mut lambda = 1.0;
    for _ in 0..15 {
        a.matvec(&x, &mut y);
        y.iter_mut().zip(inv_diag).for_each(|(v, d)| *v *= d);
        let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        lambda = nrm / xn;
        x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / nrm);
    }
    lambda
}

impl Amg {
    pub fn new(a: &CsrMatrix, opts: AmgOptions) -> Result<Self> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::InvalidArgument("AMG needs a square matrix".into()));
        }
        if !a.is_symmetric(1e-10) {
            return Err(Error::InvalidArgument("AMG needs a symmetric matrix".into()));
        }
        let mut levels = Vec::new();
        let mut cur = a.clone();
        while cur.shape().0 > opts.coarse_size && levels.len() + 1 < opts.max_levels {
            let inv_diag: Vec<f64> = cur.diagonal().iter().map(|d| 1.0 / d).collect();
            let (agg, nc) = aggregate(&cur, opts.strength);
            if nc >= cur.shape().0 {
                break;
            }
            let mut sizes = vec![0usize; nc];
            for &g in &agg {
                sizes[g] += 1;
            }
            let tent = CsrMatrix::from_triplets(
                cur.shape().0,
                nc,
                &agg.iter()
                    .enumerate()
                    .map(|(i, &g)| (i, g, 1.0 / (sizes[g] as f64).sqrt()))
                    .collect::<Vec<_>>(),
            );
            let rho = spectral_radius_dinv_a(&cur, &inv_diag);
            let omega = 4.0 / 3.0 / rho;
            let dinv_a = {
                let mut s = cur.clone();
                let ptr = s.indptr().to_vec();
                let data = s.data_mut();
                for r in 0..ptr.len() - 1 {
                    for v in &mut data[ptr[r]..ptr[r + 1]] {
                        *v *= inv_diag[r];
                    }
                }
                s
            };
            let smoother = CsrMatrix::identity(cur.shape().0).add_scaled(-omega, &dinv_a);
            let p = smoother.matmul(&tent);
            let r = p.transpose();
            let coarse = r.matmul(&cur).matmul(&p);
            // symmetrize round-off
            let coarse = coarse.add_scaled(1.0, &coarse.transpose()).scaled(0.5);
            levels.push(Level {
                a: cur,
                inv_diag,
                p: Some(p),
                r: Some(r),
            });
            cur = coarse;
        }
        let coarse = EnvelopeCholesky::factor(&cur)?;
        levels.push(Level {
            inv_diag: cur.diagonal().iter().map(|d| 1.0 / d).collect(),
            a: cur,
            p: None,
            r: None,
        });
        Ok(Self { levels, coarse, opts })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    fn smooth(&self, lvl: &Level, b: &[f64], x: &mut [f64]) {
        let n = b.len();
        let mut ax = vec![0.0; n];
        for _ in 0..self.opts.sweeps {
            lvl.a.matvec(x, &mut ax);
            for i in 0..n {
                x[i] += self.opts.jacobi_weight * lvl.inv_diag[i] * (b[i] - ax[i]);
            }
        }
    }

    fn vcycle(&self, k: usize, b: &[f64], x: &mut [f64]) {
        let lvl = &self.levels[k];
        if k + 1 == self.levels.len() {
            x.copy_from_slice(&self.coarse.solve(b));
            return;
        }
        self.smooth(lvl, b, x);
        let mut r = lvl.a.apply_vec(x);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let rc = lvl.r.as_ref().unwrap().apply_vec(&r);
        let mut ec = vec![0.0; rc.len()];
        self.vcycle(k + 1, &rc, &mut ec);
        let e = lvl.p.as_ref().unwrap().apply_vec(&ec);
        x.iter_mut().zip(&e).for_each(|(xi, ei)| *xi += ei);
        self.smooth(lvl, b, x);
    }

    /// Runs `cycles` V-cycles from a zero initial guess.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let a = &self.levels[0].a;
        for c in 0..self.opts.cycles {
            if c == 0 {
                self.vcycle(0, b, &mut x);
            } else {
                let mut r = a.apply_vec(&x);
                r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
                let mut e = vec![0.0; n];
                self.vcycle(0, &r, &mut e);
                x.iter_mut().zip(&e).for_each(|(xi, ei)| *xi += ei);
            }
        }
        x
    }
}

impl LinearOperator for Amg {
    fn nrows(&self) -> usize {
        self.levels[0].a.shape().0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.solve(x));
    }
}

/// Inverse of an SPD auxiliary matrix: exact factorization or AMG cycles.
#[derive(Debug, Clone)]
pub enum AuxSolver {
    Direct(EnvelopeCholesky),
    Multigrid(Amg),
}

/// Dimension below which the auxiliary matrices are factored directly.
pub const DIRECT_LIMIT: usize = 20_000;

impl AuxSolver {
    pub fn new(a: &CsrMatrix, cycles: usize, force_amg: bool) -> Result<Self> {
        if !force_amg && a.shape().0 < DIRECT_LIMIT {
            Ok(AuxSolver::Direct(EnvelopeCholesky::factor(a)?))
        } else {
            Ok(AuxSolver::Multigrid(Amg::new(
                a,
                AmgOptions {
                    cycles,
                    ..AmgOptions::default()
                },
            )?))
        }
    }
}

impl LinearOperator for AuxSolver {
    fn nrows(&self) -> usize {
        match self {
            AuxSolver::Direct(c) => c.dim(),
            AuxSolver::Multigrid(m) => m.nrows(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            AuxSolver::Direct(c) => c.apply(x, y),
            AuxSolver::Multigrid(m) => m.apply(x, y),
        }
    }
}
