//! Sparse direct factorizations on a reverse Cuthill-McKee envelope.

use std::collections::VecDeque;

use super::sparse::{CsrMatrix, LinearOperator};
use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of the symmetrized pattern. Returns `perm[new] = old`.
pub fn rcm(a: &CsrMatrix) -> Vec<usize> {
    let n = a.shape().0;
    let at = a.transpose();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for r in 0..n {
        adj[r].extend(a.row(r).map(|(c, _)| c).filter(|&c| c != r));
        adj[r].extend(at.row(r).map(|(c, _)| c).filter(|&c| c != r));
        adj[r].sort_unstable();
        adj[r].dedup();
    }
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    loop {
        // start each component from a pseudo-peripheral node
        let Some(mut start) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| deg[i]) else {
            break;
        };
        let mut depth = bfs_levels(&adj, start, &visited).len();
        for _ in 0..4 {
            let levels = bfs_levels(&adj, start, &visited);
            let far = levels.last().unwrap().iter().copied().min_by_key(|&i| deg[i]).unwrap();
            let far_depth = bfs_levels(&adj, far, &visited).len();
            if far_depth > depth {
                start = far;
                depth = far_depth;
            } else {
                break;
            }
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (deg[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, blocked: &[bool]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if !blocked[w] && !seen[w] {
                    seen[w] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        levels.push(next);
    }
}

/// Lower envelope (first nonzero column per row) of the permuted, symmetrized pattern.
struct Envelope {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    ptr: Vec<usize>,
}

impl Envelope {
    fn new(a: &CsrMatrix, perm: Vec<usize>) -> Self {
        let n = perm.len();
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for r in 0..n {
            for (c, _) in a.row(r) {
                let (i, j) = (inv[r], inv[c]);
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut ptr = vec![0; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - first[i]);
        }
        Self { n, perm, first, ptr }
    }

    fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.n];
        for (k, &p) in self.perm.iter().enumerate() {
            inv[p] = k;
        }
        inv
    }

    fn size(&self) -> usize {
        self.ptr[self.n]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Envelope Cholesky `P A P^T = L L^T` for SPD matrices.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    ptr: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::InvalidArgument("Cholesky needs a square matrix".into()));
        }
        let env = Envelope::new(a, rcm(a));
        let inv = env.inverse();
        let mut lower = vec![0.0; env.size()];
        let mut diag = vec![0.0; n];
        for r in 0..n {
            for (c, v) in a.row(r) {
                let (i, j) = (inv[r], inv[c]);
                if j < i {
                    lower[env.ptr[i] + j - env.first[i]] = v;
                } else if i == j {
                    diag[i] = v;
                }
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let fk = env.first[k];
            for j in fk..k {
                let fj = env.first[j];
                let m0 = fk.max(fj);
                let lk = &lower[env.ptr[k] + m0 - fk..env.ptr[k] + j - fk];
                let lj = &lower[env.ptr[j] + m0 - fj..env.ptr[j] + j - fj];
                let s = dot(lk, lj);
                let idx = env.ptr[k] + j - fk;
                lower[idx] = (lower[idx] - s) / diag[j];
            }
            let row = &lower[env.ptr[k]..env.ptr[k + 1]];
            let d = diag[k] - dot(row, row);
            if !(d > 1e-14 * scale) {
                return Err(Error::Singular {
                    what: format!("Cholesky pivot {k} (matrix not SPD)"),
                    pivot: d,
                    scale,
                });
            }
            diag[k] = d.sqrt();
        }
        Ok(Self {
            n,
            perm: env.perm,
            first: env.first,
            ptr: env.ptr,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lower[self.ptr[i]..self.ptr[i + 1]];
            let s = dot(row, &y[self.first[i]..i]);
            y[i] = (y[i] - s) / self.diag[i];
        }
        for i in (0..n).rev() {
            y[i] /= self.diag[i];
            let yi = y[i];
            let f = self.first[i];
            for (k, l) in self.lower[self.ptr[i]..self.ptr[i + 1]].iter().enumerate() {
                y[f + k] -= l * yi;
            }
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

impl LinearOperator for EnvelopeCholesky {
    fn nrows(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }
}

/// Profile LU `P A P^T = L U` without pivoting (for structurally symmetric matrices),
/// with a pivot check and iterative refinement against the original matrix.
#[derive(Debug, Clone)]
pub struct ProfileLu {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    ptr: Vec<usize>,
    /// Rows of unit-lower `L` left of the diagonal.
    lower: Vec<f64>,
    /// Columns of `U` above the diagonal.
    upper: Vec<f64>,
    diag: Vec<f64>,
    matrix: CsrMatrix,
    pub refinement_steps: usize,
}

impl ProfileLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::InvalidArgument("LU needs a square matrix".into()));
        }
        let env = Envelope::new(a, rcm(a));
        let inv = env.inverse();
        let mut lower = vec![0.0; env.size()];
        let mut upper = vec![0.0; env.size()];
        let mut diag = vec![0.0; n];
        for r in 0..n {
            for (c, v) in a.row(r) {
                let (i, j) = (inv[r], inv[c]);
                if j < i {
                    lower[env.ptr[i] + j - env.first[i]] = v;
                } else if i < j {
                    upper[env.ptr[j] + i - env.first[j]] = v;
                } else {
                    diag[i] = v;
                }
            }
        }
        let scale = a.max_abs();
        for k in 0..n {
            let fk = env.first[k];
            let pk = env.ptr[k];
            for j in fk..k {
                let fj = env.first[j];
                let m0 = fk.max(fj);
                let s = dot(
                    &lower[pk + m0 - fk..pk + j - fk],
                    &upper[env.ptr[j] + m0 - fj..env.ptr[j] + j - fj],
                );
                lower[pk + j - fk] = (lower[pk + j - fk] - s) / diag[j];
            }
            for i in fk..k {
                let fi = env.first[i];
                let m0 = fk.max(fi);
                let s = dot(
                    &lower[env.ptr[i] + m0 - fi..env.ptr[i] + i - fi],
                    &upper[pk + m0 - fk..pk + i - fk],
                );
                upper[pk + i - fk] -= s;
            }
            let d = diag[k] - dot(&lower[pk..env.ptr[k + 1]], &upper[pk..env.ptr[k + 1]]);
            if !(d.abs() > 1e-14 * scale) {
                return Err(Error::Singular {
                    what: format!("profile LU pivot {k}"),
                    pivot: d,
                    scale,
                });
            }
            diag[k] = d;
        }
        Ok(Self {
            n,
            perm: env.perm,
            first: env.first,
            ptr: env.ptr,
            lower,
            upper,
            diag,
            matrix: a.clone(),
            refinement_steps: 2,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.ptr[self.n]
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lower[self.ptr[i]..self.ptr[i + 1]], &y[self.first[i]..i]);
            y[i] -= s;
        }
        for j in (0..n).rev() {
            y[j] /= self.diag[j];
            let yj = y[j];
            let f = self.first[j];
            for (k, u) in self.upper[self.ptr[j]..self.ptr[j + 1]].iter().enumerate() {
                y[f + k] -= u * yj;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    fn raw_solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // U^T is lower triangular with rows stored as our columns
        for j in 0..n {
            let s = dot(&self.upper[self.ptr[j]..self.ptr[j + 1]], &y[self.first[j]..j]);
            y[j] = (y[j] - s) / self.diag[j];
        }
        for i in (0..n).rev() {
            let yi = y[i];
            let f = self.first[i];
            for (k, l) in self.lower[self.ptr[i]..self.ptr[i + 1]].iter().enumerate() {
                y[f + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.raw_solve(b);
        let mut r = vec![0.0; self.n];
        for _ in 0..self.refinement_steps {
            self.matrix.matvec(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
            let dx = self.raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        }
        x
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.raw_solve_transpose(b);
        let mut r = vec![0.0; self.n];
        for _ in 0..self.refinement_steps {
            self.matrix.matvec_transpose(&x, &mut r);
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
            let dx = self.raw_solve_transpose(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        }
        x
    }
}

impl LinearOperator for ProfileLu {
    fn nrows(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.solve(x));
    }
}
