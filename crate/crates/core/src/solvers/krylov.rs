//! Restarted GMRES (right preconditioning) and preconditioned CG.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::sparse::{axpy, dot, norm2, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    pub tol: f64,
    pub max_it: usize,
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_it: 1000,
            restart: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residuals, starting with the initial one.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub seconds: f64,
    pub breakdown: Option<String>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    /// Iteration count, or `--` when the solve did not converge.
    pub fn table_cell(&self) -> String {
        if self.converged {
            self.iterations.to_string()
        } else {
            "--".into()
        }
    }
}

fn residual(a: &dyn LinearOperator, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = a.apply_vec(x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    r
}

/// Restarted GMRES with right preconditioner `m` (identity when `None`).
pub fn gmres(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    m: Option<&dyn LinearOperator>,
    opts: &KrylovOptions,
) -> (Vec<f64>, SolveReport) {
    let start = Instant::now();
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = norm2(b);
    let mut report = SolveReport {
        iterations: 0,
        residuals: Vec::new(),
        converged: false,
        seconds: 0.0,
        breakdown: None,
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.residuals.push(0.0);
        report.converged = true;
        return (x, report);
    }
    let precond = |v: &[f64]| -> Vec<f64> {
        match m {
            Some(m) => m.apply_vec(v),
            None => v.to_vec(),
        }
    };
    let restart = opts.restart.max(1);
    let mut r = residual(a, b, &x);
    let mut beta = norm2(&r);
    report.residuals.push(beta / bnorm);
    if beta / bnorm <= opts.tol {
        report.converged = true;
        report.seconds = start.elapsed().as_secs_f64();
        return (x, report);
    }
    'outer: while report.iterations < opts.max_it {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(restart);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut k_done = 0;
        for k in 0..restart {
            if report.iterations >= opts.max_it {
                break;
            }
            let z = precond(&basis[k]);
            let mut w = a.apply_vec(&z);
            zs.push(z);
            let mut hk = vec![0.0; k + 2];
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for (j, vj) in basis.iter().enumerate() {
                    let c = dot(&w, vj);
                    hk[j] += c;
                    axpy(-c, vj, &mut w);
                }
            }
            hk[k + 1] = norm2(&w);
            for j in 0..k {
                let t = cs[j] * hk[j] + sn[j] * hk[j + 1];
                hk[j + 1] = -sn[j] * hk[j] + cs[j] * hk[j + 1];
                hk[j] = t;
            }
            let denom = hk[k].hypot(hk[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (hk[k] / denom, hk[k + 1] / denom) };
            let sub = hk[k + 1];
            hk[k] = c * hk[k] + s * hk[k + 1];
            hk[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            h.push(hk);
            report.iterations += 1;
            k_done = k + 1;
            let rel = g[k + 1].abs() / bnorm;
            report.residuals.push(rel);
            if !rel.is_finite() {
                report.breakdown = Some("non-finite residual".into());
                break 'outer;
            }
            if rel <= opts.tol || sub == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / sub).collect());
        }
        // back substitution for the update
        let mut y = vec![0.0; k_done];
        for i in (0..k_done).rev() {
            let mut s = g[i];
            for j in i + 1..k_done {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &zs[j], &mut x);
        }
        r = residual(a, b, &x);
        beta = norm2(&r);
        let true_rel = beta / bnorm;
        if let Some(last) = report.residuals.last_mut() {
            *last = true_rel;
        }
        if true_rel <= opts.tol {
            report.converged = true;
            break;
        }
        if k_done == 0 {
            break;
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    (x, report)
}

/// Preconditioned CG. Reports rather than loops on indefiniteness or stagnation.
pub fn pcg(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    m: Option<&dyn LinearOperator>,
    opts: &KrylovOptions,
) -> (Vec<f64>, SolveReport) {
    const STAGNATION: usize = 50;
    let start = Instant::now();
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = norm2(b);
    let mut report = SolveReport {
        iterations: 0,
        residuals: Vec::new(),
        converged: false,
        seconds: 0.0,
        breakdown: None,
    };
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.residuals.push(0.0);
        report.converged = true;
        return (x, report);
    }
    let precond = |v: &[f64]| -> Vec<f64> {
        match m {
            Some(m) => m.apply_vec(v),
            None => v.to_vec(),
        }
    };
    let mut r = residual(a, b, &x);
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut best = norm2(&r) / bnorm;
    let mut since_best = 0;
    report.residuals.push(best);
    if best <= opts.tol {
        report.converged = true;
    }
    let mut ap = vec![0.0; n];
    while !report.converged && report.iterations < opts.max_it {
        if rz <= 0.0 {
            report.breakdown = Some(format!("indefinite preconditioner (r.z = {rz:.3e})"));
            break;
        }
        a.apply(&p, &mut ap);
        let curv = dot(&p, &ap);
        if curv <= 0.0 {
            report.breakdown = Some(format!("non-positive curvature (p.Ap = {curv:.3e})"));
            break;
        }
        let alpha = rz / curv;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        report.iterations += 1;
        let rel = norm2(&r) / bnorm;
        report.residuals.push(rel);
        if !rel.is_finite() {
            report.breakdown = Some("non-finite residual".into());
            break;
        }
        if rel <= opts.tol {
            report.converged = true;
            break;
        }
        if rel < best {
            best = rel;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= STAGNATION {
                report.breakdown = Some(format!("no residual decrease in {STAGNATION} iterations"));
                break;
            }
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    if !report.converged && report.breakdown.is_none() {
        report.breakdown = Some(format!("iteration limit {} reached", opts.max_it));
    }
    report.seconds = start.elapsed().as_secs_f64();
    (x, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::sparse::{CsrMatrix, Identity};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_one_iteration() {
        let a = Identity(5);
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (x, rep) = gmres(&a, &b, None, None, &KrylovOptions::default());
        assert!(rep.converged && rep.iterations == 1);
        assert_eq!(rep.residuals.len(), rep.iterations + 1);
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        let (_, rep) = pcg(&a, &b, None, None, &KrylovOptions::default());
        assert!(rep.converged && rep.iterations == 1);
    }

    #[test]
    fn upper_triangular_2x2() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]);
        let (x, rep) = gmres(&a, &[3.0, 3.0], None, None, &KrylovOptions::default());
        assert!(rep.converged);
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10);
    }

    fn random_spd(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        let mut rowsum = vec![0.0; n];
        for i in 0..n {
            for _ in 0..4 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    t.push((i, j, v));
                    t.push((j, i, v));
                    rowsum[i] += v.abs();
                    rowsum[j] += v.abs();
                }
            }
        }
        for (i, s) in rowsum.iter().enumerate() {
            t.push((i, i, s + 1.0));
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn matches_dense_solve() {
        let a = random_spd(100, 2);
        let b: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        let xd = a.to_dense().lu().solve(&DVector::from_vec(b.clone())).unwrap();
        let opts = KrylovOptions { tol: 1e-12, max_it: 500, restart: 30 };
        for (x, rep) in [gmres(&a, &b, None, None, &opts), pcg(&a, &b, None, None, &opts)] {
            assert!(rep.converged);
            for (u, v) in x.iter().zip(xd.iter()) {
                assert!((u - v).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn cg_reports_indefinite() {
        let a = CsrMatrix::from_dense(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 2.0])));
        let (_, rep) = pcg(&a, &[1.0, 1.0, 1.0], None, None, &KrylovOptions::default());
        assert!(!rep.converged);
        assert!(rep.breakdown.is_some());
        assert_eq!(rep.table_cell(), "--");
    }

    #[test]
    fn gmres_respects_iteration_cap() {
        let a = random_spd(200, 4);
        let b = vec![1.0; 200];
        let opts = KrylovOptions { tol: 1e-30, max_it: 7, restart: 3 };
        let (_, rep) = gmres(&a, &b, None, None, &opts);
        assert_eq!(rep.iterations, 7);
        assert_eq!(rep.residuals.len(), 8);
        assert!(!rep.converged);
    }
}
