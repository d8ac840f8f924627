//! Global matrices and load vectors.
//!
//! Bilinear forms use the coefficients of the discrete partition (the side of
//! each sub-tetrahedron); the load vector evaluates the source with the exact
//! region of every quadrature point.

use rayon::prelude::*;

use crate::derham::{gradient_incidence, interpolate_edges, ElementBases, Flavor, SplitMode, VectorField};
use crate::error::Result;
use crate::geometry::{Discretization, Side};
use crate::ife_local::{CoefficientPair, LocalBasis};
use crate::quadrature::{tet_rule, visit_tet};
use crate::solvers::{CsrMatrix, LinearOperator};
use crate::Vec3;

/// Weight of the scalar auxiliary matrix `(w grad p, grad q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarWeight {
    Alpha,
    #[default]
    Beta,
}

/// Side-tagged sub-tetrahedra of element `t`.
fn pieces(disc: &Discretization, t: usize) -> Vec<([crate::Vec3; 4], Side)> {
    match disc.cut(t) {
        Some(c) => [Side::Plus, Side::Minus]
            .into_iter()
            .flat_map(|s| c.sub_tets(s).iter().map(move |p| (*p, s)))
            .collect(),
        None => vec![(disc.mesh.tet_vertices(t), disc.element_side(t).unwrap_or(Side::Plus))],
    }
}

/// Element matrix `E[test][trial]` of `(alpha curl u, curl v) + (beta u, v)`.
fn curlcurl_element(
    trial: &LocalBasis,
    test: &LocalBasis,
    parts: &[([Vec3; 4], Side)],
    weights: &(dyn Fn(Side) -> (f64, f64) + Sync),
) -> Result<[[f64; 6]; 6]> {
    let rule = tet_rule(2)?;
    let mut e = [[0.0; 6]; 6];
    for (sub, side) in parts {
        let (a, b) = weights(*side);
        let vol = crate::mesh::signed_volume(&sub[0], &sub[1], &sub[2], &sub[3]).abs();
        let cu: [Vec3; 6] = std::array::from_fn(|i| trial.edge[i].eval_curl(*side));
        let cv: [Vec3; 6] = std::array::from_fn(|j| test.edge[j].eval_curl(*side));
        for j in 0..6 {
            for i in 0..6 {
                e[j][i] += a * vol * cu[i].dot(&cv[j]);
            }
        }
        visit_tet(sub, rule, |x, w| {
            let u: [Vec3; 6] = std::array::from_fn(|i| trial.edge[i].eval(x, *side));
            let v: [Vec3; 6] = std::array::from_fn(|j| test.edge[j].eval(x, *side));
            for j in 0..6 {
                for i in 0..6 {
                    e[j][i] += b * w * u[i].dot(&v[j]);
                }
            }
        });
    }
    Ok(e)
}

/// `(alpha curl u, curl v) + (beta u, v)` with the given trial and test bases.
pub fn assemble_curlcurl(
    disc: &Discretization,
    coeffs: &CoefficientPair,
    trial: &ElementBases,
    test: &ElementBases,
) -> Result<CsrMatrix> {
    assemble_weighted(disc, &|s| (coeffs.alpha(s), coeffs.beta(s)), trial, test)
}

/// Edge mass matrix `(w u, v)` with a per-side weight.
pub fn assemble_mass(
    disc: &Discretization,
    plus: f64,
    minus: f64,
    trial: &ElementBases,
    test: &ElementBases,
) -> Result<CsrMatrix> {
    let w = move |s: Side| match s {
        Side::Plus => (0.0, plus),
        Side::Minus => (0.0, minus),
    };
    assemble_weighted(disc, &w, trial, test)
}

fn assemble_weighted(
    disc: &Discretization,
    weights: &(dyn Fn(Side) -> (f64, f64) + Sync),
    trial: &ElementBases,
    test: &ElementBases,
) -> Result<CsrMatrix> {
    let m = &disc.mesh;
    let blocks = (0..m.num_tets())
        .into_par_iter()
        .map(|t| {
            let bt = trial.basis(disc, t)?;
            let bv = test.basis(disc, t)?;
            let e = curlcurl_element(&bt, &bv, &pieces(disc, t), weights)?;
            let mut trip = Vec::with_capacity(36);
            for j in 0..6 {
                for i in 0..6 {
                    let s = f64::from(bt.edge_signs[i] * bv.edge_signs[j]);
                    trip.push((m.tet_edges[t][j], m.tet_edges[t][i], s * e[j][i]));
                }
            }
            Ok(trip)
        })
        .collect::<Result<Vec<_>>>()?;
    let trip: Vec<_> = blocks.into_iter().flatten().collect();
    Ok(CsrMatrix::from_triplets(m.num_edges(), m.num_edges(), &trip))
}

/// Nodal stiffness `(alpha grad p, grad q)`, `(beta grad p, grad q)` and mass `(beta p, q)`.
#[derive(Debug, Clone)]
pub struct NodalMatrices {
    pub stiffness_alpha: CsrMatrix,
    pub stiffness_beta: CsrMatrix,
    pub mass_beta: CsrMatrix,
}

pub fn assemble_nodal(disc: &Discretization, coeffs: &CoefficientPair, bases: &ElementBases) -> Result<NodalMatrices> {
    let m = &disc.mesh;
    let rule = tet_rule(2)?;
    let blocks = (0..m.num_tets())
        .into_par_iter()
        .map(|t| {
            let b = bases.basis(disc, t)?;
            let mut ka = [[0.0; 4]; 4];
            let mut kb = [[0.0; 4]; 4];
            let mut mb = [[0.0; 4]; 4];
            for (sub, side) in pieces(disc, t) {
                let vol = crate::mesh::signed_volume(&sub[0], &sub[1], &sub[2], &sub[3]).abs();
                let (a, be) = (coeffs.alpha(side), coeffs.beta(side));
                let g: [Vec3; 4] = std::array::from_fn(|i| b.nodal[i].grad.get(side));
                for j in 0..4 {
                    for i in 0..4 {
                        let gg = vol * g[i].dot(&g[j]);
                        ka[j][i] += a * gg;
                        kb[j][i] += be * gg;
                    }
                }
                visit_tet(&sub, rule, |x, w| {
                    let p: [f64; 4] = std::array::from_fn(|i| b.nodal[i].eval(x, side));
                    for j in 0..4 {
                        for i in 0..4 {
                            mb[j][i] += be * w * p[i] * p[j];
                        }
                    }
                });
            }
            let v = m.tets[t];
            let mut out = [Vec::with_capacity(16), Vec::with_capacity(16), Vec::with_capacity(16)];
            for j in 0..4 {
                for i in 0..4 {
                    out[0].push((v[j], v[i], ka[j][i]));
                    out[1].push((v[j], v[i], kb[j][i]));
                    out[2].push((v[j], v[i], mb[j][i]));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let nn = m.num_nodes();
    let build = |k: usize| {
        let trip: Vec<_> = blocks.iter().flat_map(|b| b[k].iter().copied()).collect();
        let a = CsrMatrix::from_triplets(nn, nn, &trip);
        // the IFE/IFE pairing is symmetric up to round-off
        a.add_scaled(1.0, &a.transpose()).scaled(0.5)
    };
    Ok(NodalMatrices {
        stiffness_alpha: build(0),
        stiffness_beta: build(1),
        mass_beta: build(2),
    })
}

/// Discrete gradient as a real matrix (edges x nodes).
pub fn gradient_matrix(disc: &Discretization) -> CsrMatrix {
    gradient_incidence(&disc.mesh).to_csr()
}

/// Nodal vector fields to edge DoFs: `((w_a + w_b) / 2) . (z_b - z_a)`, component-major columns.
pub fn pcurl_matrix(disc: &Discretization) -> CsrMatrix {
    let m = &disc.mesh;
    let nn = m.num_nodes();
    let mut trip = Vec::with_capacity(6 * m.num_edges());
    for (e, &[a, b]) in m.edges.iter().enumerate() {
        let d = m.edge_vector(e);
        for k in 0..3 {
            trip.push((e, k * nn + a, 0.5 * d[k]));
            trip.push((e, k * nn + b, 0.5 * d[k]));
        }
    }
    CsrMatrix::from_triplets(m.num_edges(), 3 * nn, &trip)
}

/// `(f, v)` for every test edge function; the source sees the exact region.
pub fn assemble_rhs(disc: &Discretization, test: &ElementBases, f: &VectorField) -> Result<Vec<f64>> {
    let m = &disc.mesh;
    let rule = tet_rule(5)?;
    let contrib = (0..m.num_tets())
        .into_par_iter()
        .map(|t| {
            let b = test.basis(disc, t)?;
            let mut loc = [0.0; 6];
            for (sub, side) in pieces(disc, t) {
                visit_tet(&sub, rule, |x, w| {
                    let fx = f(x, disc.levelset.side(x));
                    for (j, l) in loc.iter_mut().enumerate() {
                        *l += w * fx.dot(&b.edge[j].eval(x, side));
                    }
                });
            }
            Ok(std::array::from_fn::<_, 6, _>(|j| {
                (m.tet_edges[t][j], f64::from(b.edge_signs[j]) * loc[j])
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rhs = vec![0.0; m.num_edges()];
    for c in contrib {
        for (e, v) in c {
            rhs[e] += v;
        }
    }
    Ok(rhs)
}

/// Boundary edge values `int_e g . t` of a field (discrete split at the interface).
pub fn dirichlet_data(disc: &Discretization, g: &VectorField) -> Vec<(usize, f64)> {
    let vals = interpolate_edges(disc, g, SplitMode::Discrete);
    disc.mesh
        .boundary_edges
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(e, _)| (e, vals[e]))
        .collect()
}

/// System on the free edges after eliminating boundary values.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Reduced index to global edge.
    pub free: Vec<usize>,
    /// Global edge to reduced index.
    pub edge_dof: Vec<Option<usize>>,
    /// Full-length vector carrying the fixed values (zero on free edges).
    pub lifted: Vec<f64>,
}

impl ReducedSystem {
    pub fn new(a: &CsrMatrix, rhs: &[f64], fixed: &[(usize, f64)]) -> Self {
        let n = a.shape().0;
        let mut lifted = vec![0.0; n];
        let mut is_fixed = vec![false; n];
        for &(e, v) in fixed {
            lifted[e] = v;
            is_fixed[e] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
        let mut edge_dof = vec![None; n];
        for (k, &e) in free.iter().enumerate() {
            edge_dof[e] = Some(k);
        }
        let ag = a.apply_vec(&lifted);
        let rhs = free.iter().map(|&e| rhs[e] - ag[e]).collect();
        Self {
            matrix: a.select(&free, &edge_dof, free.len()),
            rhs,
            free,
            edge_dof,
            lifted,
        }
    }

    /// Same elimination pattern applied to another matrix.
    pub fn restrict(&self, a: &CsrMatrix) -> CsrMatrix {
        a.select(&self.free, &self.edge_dof, self.free.len())
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.lifted.clone();
        for (k, &e) in self.free.iter().enumerate() {
            full[e] = x[k];
        }
        full
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }
}

/// Every matrix of one discretization and coefficient set.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub pg: CsrMatrix,
    pub fe: CsrMatrix,
    pub ife: CsrMatrix,
    pub nodal: NodalMatrices,
    pub grad: CsrMatrix,
    pub pcurl: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<(usize, f64)>,
}

impl SystemMatrices {
    pub fn assemble(
        disc: &Discretization,
        coeffs: &CoefficientPair,
        source: &VectorField,
        boundary: &VectorField,
    ) -> Result<Self> {
        let immersed = ElementBases::build(disc, coeffs, Flavor::Immersed)?;
        let standard = ElementBases::build(disc, coeffs, Flavor::Standard)?;
        Ok(Self {
            pg: assemble_curlcurl(disc, coeffs, &immersed, &standard)?,
            fe: assemble_curlcurl(disc, coeffs, &standard, &standard)?,
            ife: assemble_curlcurl(disc, coeffs, &immersed, &immersed)?,
            nodal: assemble_nodal(disc, coeffs, &immersed)?,
            grad: gradient_matrix(disc),
            pcurl: pcurl_matrix(disc),
            rhs: assemble_rhs(disc, &standard, source)?,
            dirichlet: dirichlet_data(disc, boundary),
        })
    }

    /// Petrov-Galerkin system with the boundary values eliminated.
    pub fn reduced(&self) -> ReducedSystem {
        ReducedSystem::new(&self.pg, &self.rhs, &self.dirichlet)
    }

    /// Scalar auxiliary matrix before boundary elimination.
    pub fn scalar_aux(&self, weight: ScalarWeight) -> &CsrMatrix {
        match weight {
            ScalarWeight::Alpha => &self.nodal.stiffness_alpha,
            ScalarWeight::Beta => &self.nodal.stiffness_beta,
        }
    }

    /// One component block of the vector auxiliary matrix.
    pub fn vector_aux_block(&self) -> CsrMatrix {
        self.nodal.stiffness_alpha.add_scaled(1.0, &self.nodal.mass_beta)
    }
}
