//! Auxiliary-space preconditioner with an exactly inverted interface block.
//!
//! `z = S r + P A_vec^{-1} P^T r + G A_scal^{-1} G^T r`, where `S` applies
//! the inverse diagonal away from the interface and a direct solve on the
//! edges of the interface elements expanded by `l` vertex-adjacency layers.

use std::collections::BTreeSet;

use super::amg::AuxSolver;
use super::dense::{lu_dense, DenseLu};
use super::direct::ProfileLu;
use super::sparse::{CsrMatrix, LinearOperator};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Elements reached from `seeds` through `l` layers of shared vertices.
pub fn expand_elements(mesh: &Mesh, seeds: &[usize], l: usize) -> Vec<usize> {
    let mut set: BTreeSet<usize> = seeds.iter().copied().collect();
    for _ in 0..l {
        let mut next = set.clone();
        for &t in &set {
            for &v in &mesh.tets[t] {
                next.extend(mesh.node_tets[v].iter().copied());
            }
        }
        if next.len() == set.len() {
            break;
        }
        set = next;
    }
    set.into_iter().collect()
}

#[derive(Debug, Clone)]
enum BlockFactor {
    Dense(DenseLu),
    Profile(ProfileLu),
}

/// Block-diagonal smoother: Jacobi on the leading DoFs, direct solve on the trailing block.
#[derive(Debug, Clone)]
pub struct InterfaceBlock {
    pub width: usize,
    pub elements: Vec<usize>,
    /// Reduced DoF indices in the trailing block.
    pub trail: Vec<usize>,
    n: usize,
    inv_diag: Vec<f64>,
    factor: Option<BlockFactor>,
}

const DENSE_BLOCK: usize = 400;

impl InterfaceBlock {
    /// `edge_dof[e]` maps a global edge to its reduced DoF (or `None` for eliminated edges).
    pub fn build(
        a: &CsrMatrix,
        mesh: &Mesh,
        edge_dof: &[Option<usize>],
        seeds: &[usize],
        l: usize,
    ) -> Result<Self> {
        let n = a.shape().0;
        let elements = if seeds.is_empty() {
            Vec::new()
        } else {
            expand_elements(mesh, seeds, l)
        };
        let mut in_block = vec![false; n];
        for &t in &elements {
            for &e in &mesh.tet_edges[t] {
                if let Some(d) = edge_dof[e] {
                    in_block[d] = true;
                }
            }
        }
        let trail: Vec<usize> = (0..n).filter(|&i| in_block[i]).collect();
        let diag = a.diagonal();
        let mut inv_diag = vec![0.0; n];
        for i in 0..n {
            if !in_block[i] {
                if diag[i] == 0.0 {
                    return Err(Error::Singular {
                        what: format!("zero diagonal at DoF {i}"),
                        pivot: 0.0,
                        scale: a.max_abs(),
                    });
                }
                inv_diag[i] = 1.0 / diag[i];
            }
        }
        let factor = if trail.is_empty() {
            None
        } else {
            let block = a.principal_submatrix(&trail);
            let f = if trail.len() <= DENSE_BLOCK {
                BlockFactor::Dense(lu_dense(&block.to_dense())?)
            } else {
                BlockFactor::Profile(ProfileLu::factor(&block).map_err(|e| match e {
                    Error::Singular { pivot, scale, .. } => Error::Singular {
                        what: format!("interface block of size {} (l = {l})", trail.len()),
                        pivot,
                        scale,
                    },
                    other => other,
                })?)
            };
            Some(f)
        };
        Ok(Self {
            width: l,
            elements,
            trail,
            n,
            inv_diag,
            factor,
        })
    }

    pub fn block_size(&self) -> usize {
        self.trail.len()
    }
}

impl LinearOperator for InterfaceBlock {
    fn nrows(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.inv_diag[i] * x[i];
        }
        if let Some(f) = &self.factor {
            let rb: Vec<f64> = self.trail.iter().map(|&i| x[i]).collect();
            let zb = match f {
                BlockFactor::Dense(lu) => lu.solve(&rb),
                BlockFactor::Profile(lu) => lu.solve(&rb),
            };
            for (k, &i) in self.trail.iter().enumerate() {
                y[i] = zb[k];
            }
        }
    }
}

/// Nodal auxiliary corrections: vector space through `pcurl`, scalar potentials through `grad`.
#[derive(Debug, Clone)]
pub struct AuxiliaryCorrection {
    pub pcurl: CsrMatrix,
    pcurl_t: CsrMatrix,
    pub grad: CsrMatrix,
    grad_t: CsrMatrix,
    /// Solver for one component block of the vector matrix (the three blocks coincide).
    vec_solver: AuxSolver,
    scal_solver: AuxSolver,
}

impl AuxiliaryCorrection {
    pub fn new(
        pcurl: CsrMatrix,
        grad: CsrMatrix,
        vec_block: &CsrMatrix,
        scal: &CsrMatrix,
        cycles: usize,
        force_amg: bool,
    ) -> Result<Self> {
        let nn = vec_block.shape().0;
        if pcurl.shape().1 != 3 * nn || grad.shape().1 != scal.shape().0 {
            return Err(Error::InvalidArgument("auxiliary transfer shapes do not match".into()));
        }
        Ok(Self {
            pcurl_t: pcurl.transpose(),
            grad_t: grad.transpose(),
            pcurl,
            grad,
            vec_solver: AuxSolver::new(vec_block, cycles, force_amg)?,
            scal_solver: AuxSolver::new(scal, cycles, force_amg)?,
        })
    }

    fn add_to(&self, r: &[f64], z: &mut [f64]) {
        let w = self.pcurl_t.apply_vec(r);
        let nn = w.len() / 3;
        let mut sol = vec![0.0; w.len()];
        for k in 0..3 {
            self.vec_solver
                .apply(&w[k * nn..(k + 1) * nn], &mut sol[k * nn..(k + 1) * nn]);
        }
        let zv = self.pcurl.apply_vec(&sol);
        let s = self.grad_t.apply_vec(r);
        let ps = self.scal_solver.apply_vec(&s);
        let zs = self.grad.apply_vec(&ps);
        for i in 0..z.len() {
            z[i] += zv[i] + zs[i];
        }
    }
}

#[derive(Debug, Clone)]
pub struct HxPreconditioner {
    pub block: InterfaceBlock,
    pub aux: Option<AuxiliaryCorrection>,
}

impl HxPreconditioner {
    pub fn new(block: InterfaceBlock, aux: Option<AuxiliaryCorrection>) -> Self {
        Self { block, aux }
    }
}

impl LinearOperator for HxPreconditioner {
    fn nrows(&self) -> usize {
        self.block.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.block.apply(x, y);
        if let Some(aux) = &self.aux {
            aux.add_to(x, y);
        }
    }
}
