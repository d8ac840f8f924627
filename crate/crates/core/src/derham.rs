//! Global spaces, interpolation operators and the discrete de Rham complex.
//!
//! DoFs are shared between the standard and the immersed spaces: nodal
//! values, edge circulations `int_e u . t`, face fluxes `int_F u . n` and
//! element means. The discrete gradient, curl and divergence are therefore
//! the same signed incidence matrices for both flavours.

use std::borrow::Cow;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{bisect_root, Discretization, LevelSet, Side};
use crate::ife_local::{CoefficientPair, ElementView, LocalBasis};
use crate::mesh::Mesh;
use crate::quadrature::{fan, gauss_legendre, integrate_tet, tri_rule, visit_tet, visit_triangle};
use crate::solvers::{CsrMatrix, LinearOperator};
use crate::Vec3;

/// Field evaluated with the region it belongs to.
pub type VectorField<'a> = dyn Fn(&Vec3, Side) -> Vec3 + Sync + 'a;
pub type ScalarField<'a> = dyn Fn(&Vec3, Side) -> f64 + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Standard,
    Immersed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Nodal,
    Edge,
    Face,
    Element,
}

/// DoF layout of a global space.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSpace {
    pub kind: SpaceKind,
    pub flavor: Flavor,
    pub ndofs: usize,
    pub boundary: Vec<bool>,
}

impl GlobalSpace {
    pub fn new(mesh: &Mesh, kind: SpaceKind, flavor: Flavor) -> Self {
        let boundary = match kind {
            SpaceKind::Nodal => mesh.boundary_nodes.clone(),
            SpaceKind::Edge => mesh.boundary_edges.clone(),
            SpaceKind::Face => mesh.boundary_faces.clone(),
            SpaceKind::Element => vec![false; mesh.num_tets()],
        };
        Self {
            kind,
            flavor,
            ndofs: boundary.len(),
            boundary,
        }
    }

    /// Global DoFs of element `t` with their orientation signs.
    pub fn element_dofs(&self, mesh: &Mesh, t: usize) -> Vec<(usize, i8)> {
        match self.kind {
            SpaceKind::Nodal => mesh.tets[t].iter().map(|&v| (v, 1)).collect(),
            SpaceKind::Edge => mesh.tet_edges[t]
                .iter()
                .zip(&mesh.tet_edge_signs[t])
                .map(|(&e, &s)| (e, s))
                .collect(),
            SpaceKind::Face => mesh.tet_faces[t]
                .iter()
                .zip(&mesh.tet_face_signs[t])
                .map(|(&f, &s)| (f, s))
                .collect(),
            SpaceKind::Element => vec![(t, 1)],
        }
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.ndofs).filter(|&i| !self.boundary[i]).collect()
    }
}

/// Local bases of every element for one flavour and coefficient set.
#[derive(Debug, Clone)]
pub struct ElementBases {
    pub flavor: Flavor,
    pub coeffs: CoefficientPair,
    immersed: Vec<Option<LocalBasis>>,
}

impl ElementBases {
    pub fn build(disc: &Discretization, coeffs: &CoefficientPair, flavor: Flavor) -> Result<Self> {
        let immersed = match flavor {
            Flavor::Standard => vec![None; disc.mesh.num_tets()],
            Flavor::Immersed => disc
                .cuts
                .par_iter()
                .map(|c| c.as_ref().map(|c| LocalBasis::immersed(c, coeffs)).transpose())
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Self {
            flavor,
            coeffs: *coeffs,
            immersed,
        })
    }

    /// Local basis of element `t` (DoF signs attached).
    pub fn basis(&self, disc: &Discretization, t: usize) -> Result<Cow<'_, LocalBasis>> {
        let m = &disc.mesh;
        match &self.immersed[t] {
            Some(b) => Ok(Cow::Owned(
                b.clone()
                    .with_signs(m.tet_edge_signs[t], m.tet_face_signs[t]),
            )),
            None => Ok(Cow::Owned(
                LocalBasis::standard(&m.tet_vertices(t))?
                    .with_signs(m.tet_edge_signs[t], m.tet_face_signs[t]),
            )),
        }
    }
}

/// Geometry view of element `t` for the DoF functionals and side lookup.
pub fn element_view(disc: &Discretization, t: usize) -> ElementView<'_> {
    match disc.cut(t) {
        Some(c) => ElementView::Cut(c),
        None => ElementView::Whole {
            verts: disc.mesh.tet_vertices(t),
            side: disc.element_side(t).unwrap_or(Side::Plus),
        },
    }
}

/// Integer incidence matrix with rows of `(column, sign)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, i64)>>,
}

impl IncidenceMatrix {
    pub fn mul(&self, other: &IncidenceMatrix) -> IncidenceMatrix {
        assert_eq!(self.ncols, other.nrows);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: HashMap<usize, i64> = HashMap::new();
                for &(k, a) in row {
                    for &(c, b) in &other.rows[k] {
                        *acc.entry(c).or_insert(0) += a * b;
                    }
                }
                let mut v: Vec<(usize, i64)> = acc.into_iter().filter(|e| e.1 != 0).collect();
                v.sort_unstable();
                v
            })
            .collect();
        IncidenceMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            rows,
        }
    }

    pub fn max_abs(&self) -> i64 {
        self.rows
            .iter()
            .flat_map(|r| r.iter().map(|e| e.1.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let t: Vec<(usize, usize, f64)> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v as f64)))
            .collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Negates the given rows (re-orienting entities).
    pub fn flip_rows(&mut self, rows: &[usize]) {
        for &r in rows {
            self.rows[r].iter_mut().for_each(|e| e.1 = -e.1);
        }
    }

    pub fn flip_cols(&mut self, cols: &[usize]) {
        let mut flip = vec![false; self.ncols];
        for &c in cols {
            flip[c] = true;
        }
        for row in &mut self.rows {
            row.iter_mut().filter(|e| flip[e.0]).for_each(|e| e.1 = -e.1);
        }
    }

    /// Exact rank over the prime field `2^31 - 1`.
    pub fn rank(&self) -> usize {
        const P: i64 = 2_147_483_647;
        let modp = |v: i64| v.rem_euclid(P);
        let inv = |a: i64| {
            let (mut r, mut e, mut b) = (1i64, P - 2, a);
            while e > 0 {
                if e & 1 == 1 {
                    r = r * b % P;
                }
                b = b * b % P;
                e >>= 1;
            }
            r
        };
        let mut m: Vec<Vec<i64>> = self
            .rows
            .iter()
            .map(|row| {
                let mut d = vec![0i64; self.ncols];
                for &(c, v) in row {
                    d[c] = modp(v);
                }
                d
            })
            .collect();
        let mut rank = 0;
        for col in 0..self.ncols {
            let Some(p) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(rank, p);
            let pinv = inv(m[rank][col]);
            let pivot_row = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && row[col] != 0 {
                    let f = row[col] * pinv % P;
                    for c in col..self.ncols {
                        if pivot_row[c] != 0 {
                            row[c] = modp(row[c] - f * pivot_row[c] % P);
                        }
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

fn edge_lookup(mesh: &Mesh) -> HashMap<[usize; 2], usize> {
    mesh.edges.iter().enumerate().map(|(i, &e)| (e, i)).collect()
}

/// Discrete gradient: edges x nodes.
pub fn gradient_incidence(mesh: &Mesh) -> IncidenceMatrix {
    IncidenceMatrix {
        nrows: mesh.num_edges(),
        ncols: mesh.num_nodes(),
        rows: mesh.edges.iter().map(|&[a, b]| vec![(a, -1), (b, 1)]).collect(),
    }
}

/// Discrete curl: faces x edges (circulation along the right-hand boundary).
pub fn curl_incidence(mesh: &Mesh) -> IncidenceMatrix {
    let lookup = edge_lookup(mesh);
    let rows = mesh
        .faces
        .iter()
        .map(|&[a, b, c]| {
            let mut row = vec![
                (lookup[&[a, b]], 1),
                (lookup[&[b, c]], 1),
                (lookup[&[a, c]], -1),
            ];
            row.sort_unstable();
            row
        })
        .collect();
    IncidenceMatrix {
        nrows: mesh.num_faces(),
        ncols: mesh.num_edges(),
        rows,
    }
}

/// Discrete divergence: tets x faces (outward flux sums).
pub fn div_incidence(mesh: &Mesh) -> IncidenceMatrix {
    let rows = (0..mesh.num_tets())
        .map(|t| {
            let mut row: Vec<(usize, i64)> = (0..4)
                .map(|lf| (mesh.tet_faces[t][lf], i64::from(mesh.tet_face_signs[t][lf])))
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    IncidenceMatrix {
        nrows: mesh.num_tets(),
        ncols: mesh.num_faces(),
        rows,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexReport {
    pub curl_grad: i64,
    pub div_curl: i64,
}

pub fn complex_check(mesh: &Mesh) -> Result<ComplexReport> {
    let g = gradient_incidence(mesh);
    let c = curl_incidence(mesh);
    let d = div_incidence(mesh);
    let rep = ComplexReport {
        curl_grad: c.mul(&g).max_abs(),
        div_curl: d.mul(&c).max_abs(),
    };
    if rep.curl_grad != 0 || rep.div_curl != 0 {
        return Err(Error::Internal(format!("incidence products do not vanish: {rep:?}")));
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactnessReport {
    pub rank_grad: usize,
    pub rank_curl: usize,
    pub rank_div: usize,
    pub nullity_curl: usize,
    pub nodes: usize,
    pub tets: usize,
}

/// Ranks of the incidence matrices; errors unless the sequence is exact on the box.
pub fn exactness_check(mesh: &Mesh) -> Result<ExactnessReport> {
    let g = gradient_incidence(mesh);
    let c = curl_incidence(mesh);
    let d = div_incidence(mesh);
    let rank_grad = g.rank();
    let rank_curl = c.rank();
    let rank_div = d.rank();
    let rep = ExactnessReport {
        rank_grad,
        rank_curl,
        rank_div,
        nullity_curl: mesh.num_edges() - rank_curl,
        nodes: mesh.num_nodes(),
        tets: mesh.num_tets(),
    };
    let faces_nullity = mesh.num_faces() - rank_div;
    if rank_grad + 1 != rep.nodes || rep.nullity_curl != rank_grad || faces_nullity != rank_curl || rank_div != rep.tets {
        return Err(Error::Internal(format!("sequence is not exact: {rep:?}")));
    }
    Ok(rep)
}

/// How interpolation integrals split at the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Split at the discrete interface; each piece uses its discrete side.
    Discrete,
    /// Split at the exact interface; each piece uses its exact side.
    Exact,
}

const EDGE_GAUSS: usize = 5;
const EDGE_SAMPLES: usize = 32;
const FACE_DEPTH: usize = 11;

pub fn interpolate_nodal(disc: &Discretization, u: &ScalarField, mode: SplitMode) -> Vec<f64> {
    disc.mesh
        .nodes
        .par_iter()
        .enumerate()
        .map(|(v, x)| {
            let side = match mode {
                SplitMode::Discrete => Side::of(disc.phi.values[v]),
                SplitMode::Exact => disc.levelset.side(x),
            };
            u(x, side)
        })
        .collect()
}

/// Segments `(s0, s1, side)` of the parameter interval of a segment `a -> b`.
fn exact_segments(ls: &LevelSet, a: &Vec3, b: &Vec3) -> Vec<(f64, f64, Side)> {
    let f = |s: f64| ls.eval(&(a + s * (b - a)));
    let mut cuts = vec![0.0];
    let mut prev = f(0.0);
    for k in 1..=EDGE_SAMPLES {
        let s = k as f64 / EDGE_SAMPLES as f64;
        let cur = f(s);
        if (prev < 0.0) != (cur < 0.0) {
            if let Some(r) = bisect_root(f, (k - 1) as f64 / EDGE_SAMPLES as f64, s, prev) {
                cuts.push(r);
            }
        }
        prev = cur;
    }
    cuts.push(1.0);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1], Side::of(f(0.5 * (w[0] + w[1])))))
        .collect()
}

fn line_integral(u: &VectorField, a: &Vec3, b: &Vec3, pieces: &[(f64, f64, Side)]) -> f64 {
    let (gx, gw) = gauss_legendre(EDGE_GAUSS);
    let d = b - a;
    pieces
        .iter()
        .map(|&(s0, s1, side)| {
            gx.iter()
                .zip(&gw)
                .map(|(x, w)| {
                    let s = s0 + (s1 - s0) * x;
                    w * (s1 - s0) * u(&(a + s * d), side).dot(&d)
                })
                .sum::<f64>()
        })
        .sum()
}

/// `int_e u . t ds` for every edge, with `t` from the lower to the higher node.
pub fn interpolate_edges(disc: &Discretization, u: &VectorField, mode: SplitMode) -> Vec<f64> {
    let m = &disc.mesh;
    (0..m.num_edges())
        .into_par_iter()
        .map(|e| {
            let [ia, ib] = m.edges[e];
            let (a, b) = (m.nodes[ia], m.nodes[ib]);
            let pieces = match mode {
                SplitMode::Discrete => {
                    let (fa, fb) = (disc.phi.values[ia], disc.phi.values[ib]);
                    let (sa, sb) = (Side::of(fa), Side::of(fb));
                    if sa == sb {
                        vec![(0.0, 1.0, sa)]
                    } else {
                        let s = fa / (fa - fb);
                        vec![(0.0, s, sa), (s, 1.0, sb)]
                    }
                }
                SplitMode::Exact => exact_segments(&disc.levelset, &a, &b),
            };
            line_integral(u, &a, &b, &pieces)
        })
        .collect()
}

fn clip_linear(poly: &[(Vec3, f64)], side: Side) -> Vec<Vec3> {
    let keep = |v: f64| match side {
        Side::Plus => v >= 0.0,
        Side::Minus => v < 0.0,
    };
    let mut out = Vec::with_capacity(4);
    for i in 0..poly.len() {
        let (p, fp) = poly[i];
        let (q, fq) = poly[(i + 1) % poly.len()];
        if keep(fp) {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let s = fp / (fp - fq);
            out.push(p + s * (q - p));
        }
    }
    out
}

fn polygon_integral(poly: &[Vec3], f: &dyn Fn(&Vec3) -> f64) -> f64 {
    let rule = tri_rule(5).expect("degree 5 triangle rule");
    let mut acc = 0.0;
    for tri in fan(poly) {
        visit_triangle(&tri, rule, |x, w| acc += w * f(x));
    }
    acc
}

fn polygon_integral_low(poly: &[Vec3], f: &dyn Fn(&Vec3) -> f64) -> f64 {
    let rule = tri_rule(2).expect("degree 2 triangle rule");
    let mut acc = 0.0;
    for tri in fan(poly) {
        visit_triangle(&tri, rule, |x, w| acc += w * f(x));
    }
    acc
}

/// Finest-level cut triangle: exact edge crossings plus a parabolic segment
/// between the chord and the curved interface.
fn curved_cut_integral(ls: &LevelSet, tri: [Vec3; 3], vals: [f64; 3], f: &dyn Fn(&Vec3, Side) -> f64) -> f64 {
    let signs = vals.map(|v| v < 0.0);
    let lone = if signs[0] != signs[1] && signs[0] != signs[2] {
        0
    } else if signs[1] != signs[0] {
        1
    } else {
        2
    };
    let (j, k) = ((lone + 1) % 3, (lone + 2) % 3);
    let crossing = |o: usize| {
        let (a, b) = (tri[lone], tri[o]);
        let s = bisect_root(|s| ls.eval(&(a + s * (b - a))), 0.0, 1.0, vals[lone])
            .unwrap_or(vals[lone] / (vals[lone] - vals[o]));
        a + s * (b - a)
    };
    let (p, q) = (crossing(j), crossing(k));
    let lone_side = Side::of(vals[lone]);
    let other = lone_side.opposite();
    let mut acc = polygon_integral_low(&[tri[lone], p, q], &|x| f(x, lone_side))
        + polygon_integral_low(&[p, tri[j], tri[k], q], &|x| f(x, other));
    let mid = 0.5 * (p + q);
    let chord = (q - p).norm();
    let g = ls.gradient(&mid);
    if chord > 0.0 && g.norm() > 0.0 {
        let d = g.normalize();
        let phi_m = ls.eval(&mid);
        let line = |s: f64| ls.eval(&(mid + s * d));
        if let Some(s) = bisect_root(line, -chord, chord, line(-chord)) {
            if phi_m != 0.0 {
                // area 2/3 chord |s|, centroid 2/5 of the way to the apex
                let xc = mid + 0.4 * s * d;
                acc += 2.0 / 3.0 * chord * s * (f(&xc, Side::Minus) - f(&xc, Side::Plus));
            }
        }
    }
    acc
}

/// Integral over a triangle split at the exact interface by adaptive refinement.
fn exact_triangle_integral(ls: &LevelSet, tri: [Vec3; 3], f: &dyn Fn(&Vec3, Side) -> f64, depth: usize) -> f64 {
    let vals = tri.map(|x| ls.eval(&x));
    let c = (tri[0] + tri[1] + tri[2]) / 3.0;
    let fc = ls.eval(&c);
    let radius = tri.iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
    let same = vals.iter().all(|v| (*v < 0.0) == (fc < 0.0));
    let margin = 1.5 * ls.gradient(&c).norm() * radius + 4.0 * radius * radius;
    if same && fc.abs() > margin {
        let side = Side::of(fc);
        return polygon_integral(&tri, &|x| f(x, side));
    }
    if depth == 0 {
        if same {
            let side = Side::of(fc);
            return polygon_integral_low(&tri, &|x| f(x, side));
        }
        return curved_cut_integral(ls, tri, vals, f);
    }
    let m01 = 0.5 * (tri[0] + tri[1]);
    let m12 = 0.5 * (tri[1] + tri[2]);
    let m20 = 0.5 * (tri[2] + tri[0]);
    [
        [tri[0], m01, m20],
        [m01, tri[1], m12],
        [m20, m12, tri[2]],
        [m01, m12, m20],
    ]
    .into_iter()
    .map(|t| exact_triangle_integral(ls, t, f, depth - 1))
    .sum()
}

/// `int_F u . n dA` for every face, with `n` the right-hand normal of its ascending nodes.
pub fn interpolate_faces(disc: &Discretization, u: &VectorField, mode: SplitMode) -> Vec<f64> {
    let m = &disc.mesh;
    (0..m.num_faces())
        .into_par_iter()
        .map(|f| {
            let tri = m.faces[f].map(|v| m.nodes[v]);
            let n = m.face_normal(f).normalize();
            match mode {
                SplitMode::Discrete => {
                    let poly: Vec<(Vec3, f64)> = m.faces[f]
                        .iter()
                        .map(|&v| (m.nodes[v], disc.phi.values[v]))
                        .collect();
                    [Side::Plus, Side::Minus]
                        .iter()
                        .map(|&s| polygon_integral(&clip_linear(&poly, s), &|x| u(x, s).dot(&n)))
                        .sum()
                }
                SplitMode::Exact => {
                    exact_triangle_integral(&disc.levelset, tri, &|x, s| u(x, s).dot(&n), FACE_DEPTH)
                }
            }
        })
        .collect()
}

/// Element means of a scalar field, pieces split at the discrete interface.
pub fn interpolate_elements(disc: &Discretization, u: &ScalarField) -> Result<Vec<f64>> {
    let m = &disc.mesh;
    (0..m.num_tets())
        .into_par_iter()
        .map(|t| {
            let vol = m.tet_volume(t);
            let total = match disc.cut(t) {
                Some(cut) => {
                    let rule = crate::quadrature::tet_rule(5)?;
                    let mut acc = 0.0;
                    for side in [Side::Plus, Side::Minus] {
                        for sub in cut.sub_tets(side) {
                            visit_tet(sub, rule, |x, w| acc += w * u(x, side));
                        }
                    }
                    acc
                }
                None => {
                    let side = disc.element_side(t).unwrap_or(Side::Plus);
                    integrate_tet(&m.tet_vertices(t), 5, |x| u(x, side))?
                }
            };
            Ok(total / vol)
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Residuals of the commuting-diagram identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutativityReport {
    pub gradient: f64,
    pub curl: f64,
    pub divergence: f64,
}

/// `max |G I^n p - I^e grad p|`.
pub fn gradient_commutativity(disc: &Discretization, p: &ScalarField, grad_p: &VectorField, mode: SplitMode) -> f64 {
    let g = gradient_incidence(&disc.mesh).to_csr();
    let lhs = g.apply_vec(&interpolate_nodal(disc, p, mode));
    max_abs_diff(&lhs, &interpolate_edges(disc, grad_p, mode))
}

/// `max |C I^e u - I^f curl u|`.
pub fn curl_commutativity(disc: &Discretization, u: &VectorField, curl_u: &VectorField, mode: SplitMode) -> f64 {
    let c = curl_incidence(&disc.mesh).to_csr();
    let lhs = c.apply_vec(&interpolate_edges(disc, u, mode));
    max_abs_diff(&lhs, &interpolate_faces(disc, curl_u, mode))
}

/// `max |D I^f v - |K| mean(div v)|`.
pub fn div_commutativity(disc: &Discretization, v: &VectorField, div_v: &ScalarField, mode: SplitMode) -> Result<f64> {
    let d = div_incidence(&disc.mesh).to_csr();
    let lhs = d.apply_vec(&interpolate_faces(disc, v, mode));
    let means = interpolate_elements(disc, div_v)?;
    let rhs: Vec<f64> = means
        .iter()
        .enumerate()
        .map(|(t, m)| m * disc.mesh.tet_volume(t))
        .collect();
    Ok(max_abs_diff(&lhs, &rhs))
}

/// Value and curl of an edge-space function at `x` inside element `t`.
pub fn eval_edge_function(
    disc: &Discretization,
    bases: &ElementBases,
    dofs: &[f64],
    t: usize,
    x: &Vec3,
    side: Side,
) -> Result<(Vec3, Vec3)> {
    let b = bases.basis(disc, t)?;
    let mut val = Vec3::zeros();
    let mut curl = Vec3::zeros();
    for le in 0..6 {
        let c = f64::from(b.edge_signs[le]) * dofs[disc.mesh.tet_edges[t][le]];
        val += c * b.edge[le].eval(x, side);
        curl += c * b.edge[le].eval_curl(side);
    }
    Ok((val, curl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_background_mesh, BoxDomain};
    use rand::{seq::SliceRandom, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sphere_disc(n: usize) -> Discretization {
        let m = build_background_mesh(n, BoxDomain::symmetric_unit()).unwrap();
        Discretization::new(m, LevelSet::sphere([0.0; 3], 0.6)).unwrap()
    }

    #[test]
    fn complex_products_vanish() {
        for n in [1, 2, 3] {
            let m = build_background_mesh(n, BoxDomain::symmetric_unit()).unwrap();
            let r = complex_check(&m).unwrap();
            assert_eq!(r.curl_grad, 0);
            assert_eq!(r.div_curl, 0);
        }
    }

    #[test]
    fn reoriented_complex_still_vanishes() {
        let m = build_background_mesh(2, BoxDomain::symmetric_unit()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut edges: Vec<usize> = (0..m.num_edges()).collect();
        edges.shuffle(&mut rng);
        let flipped = &edges[..m.num_edges() / 2];
        let mut faces: Vec<usize> = (0..m.num_faces()).collect();
        faces.shuffle(&mut rng);
        let fflip = &faces[..m.num_faces() / 3];
        let mut g = gradient_incidence(&m);
        let mut c = curl_incidence(&m);
        let mut d = div_incidence(&m);
        g.flip_rows(flipped);
        c.flip_cols(flipped);
        c.flip_rows(fflip);
        d.flip_cols(fflip);
        assert_eq!(c.mul(&g).max_abs(), 0);
        assert_eq!(d.mul(&c).max_abs(), 0);
    }

    #[test]
    fn exactness_ranks() {
        let m1 = build_background_mesh(1, BoxDomain::unit()).unwrap();
        let r1 = exactness_check(&m1).unwrap();
        assert_eq!(r1.nullity_curl, 7);
        let m2 = build_background_mesh(2, BoxDomain::unit()).unwrap();
        let r2 = exactness_check(&m2).unwrap();
        assert_eq!(r2.nullity_curl, 26);
        assert_eq!(r2.rank_div, 40);
    }

    #[test]
    fn constant_and_gradient_fields() {
        let disc = sphere_disc(2);
        let c = Vec3::new(1.0, -2.0, 0.5);
        let dofs = interpolate_edges(&disc, &|_, _| c, SplitMode::Discrete);
        for (e, d) in dofs.iter().enumerate() {
            assert!((d - c.dot(&disc.mesh.edge_vector(e))).abs() < 1e-14);
        }
        // gradient of a linear function telescopes
        let p = |x: &Vec3, _: Side| 2.0 * x.x - x.y + 3.0 * x.z;
        let gp = |_: &Vec3, _: Side| Vec3::new(2.0, -1.0, 3.0);
        for mode in [SplitMode::Discrete, SplitMode::Exact] {
            assert!(gradient_commutativity(&disc, &p, &gp, mode) < 1e-14);
        }
    }

    #[test]
    fn curl_free_field_has_zero_circulation() {
        let disc = sphere_disc(3);
        let grad = |x: &Vec3, _: Side| Vec3::new(2.0 * x.x * x.y, x.x * x.x + x.z, x.y);
        let c = curl_incidence(&disc.mesh).to_csr();
        let dofs = interpolate_edges(&disc, &grad, SplitMode::Discrete);
        let circ = c.apply_vec(&dofs);
        assert!(circ.iter().all(|v| v.abs() < 1e-13));
    }

    /// Adaptive Simpson along an edge with the exact sign at every sample.
    fn adaptive_edge(ls: &LevelSet, u: &VectorField, a: Vec3, b: Vec3) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, flo: f64, fm: f64, fhi: f64, whole: f64, depth: usize) -> f64 {
            let mid = 0.5 * (lo + hi);
            let (l, r) = (0.5 * (lo + mid), 0.5 * (mid + hi));
            let (fl, fr) = (f(l), f(r));
            let left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fm);
            let right = (hi - mid) / 6.0 * (fm + 4.0 * fr + fhi);
            if depth == 0 || (left + right - whole).abs() < 1e-14 {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, lo, mid, flo, fl, fm, left, depth - 1) + simpson(f, mid, hi, fm, fr, fhi, right, depth - 1)
        }
        let d = b - a;
        let f = |s: f64| {
            let x = a + s * d;
            u(&x, ls.side(&x)).dot(&d)
        };
        let (f0, fm, f1) = (f(0.0), f(0.5), f(1.0));
        simpson(&f, 0.0, 1.0, f0, fm, f1, (f0 + 4.0 * fm + f1) / 6.0, 40)
    }

    #[test]
    fn exact_edge_dofs_match_adaptive_oracle() {
        let disc = sphere_disc(4);
        let u = |x: &Vec3, s: Side| {
            let r1 = 0.36 - x.norm_squared();
            let w = Vec3::new(x.y - x.z, x.z - x.x, x.x - x.y);
            match s {
                Side::Minus => x + 0.64 * r1 * w,
                Side::Plus => x / 10.0 + 0.064 * r1 * (1.0 - x.norm_squared()) * w,
            }
        };
        let dofs = interpolate_edges(&disc, &u, SplitMode::Exact);
        let m = &disc.mesh;
        let mut checked = 0;
        for e in 0..m.num_edges() {
            let [a, b] = m.edges[e];
            let (pa, pb) = (m.nodes[a], m.nodes[b]);
            if disc.levelset.side(&pa) != disc.levelset.side(&pb) {
                let want = adaptive_edge(&disc.levelset, &u, pa, pb);
                assert!((dofs[e] - want).abs() < 1e-9, "edge {e}: {} vs {want}", dofs[e]);
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn commutativity_with_benchmark_field() {
        use crate::analysis::manufactured::ManufacturedSolution;
        let ms = ManufacturedSolution::sphere_benchmark(100.0).unwrap();
        let m = build_background_mesh(4, BoxDomain::symmetric_unit()).unwrap();
        let disc = Discretization::new(m, ms.levelset()).unwrap();
        let r2 = ms.r1 * ms.r1;
        let b = ms.coeffs;
        let p = |x: &Vec3, s: Side| (x.norm_squared() - r2) / b.beta(s);
        let gp = |x: &Vec3, s: Side| 2.0 * x / b.beta(s);
        let g = gradient_commutativity(&disc, &p, &gp, SplitMode::Exact);
        assert!(g < 1e-8, "gradient {g}");
        let u = |x: &Vec3, s: Side| ms.u(x, s);
        let cu = |x: &Vec3, s: Side| ms.curl_u(x, s);
        let c = curl_commutativity(&disc, &u, &cu, SplitMode::Exact);
        assert!(c < 1e-8, "curl {c}");
        let v = |x: &Vec3, s: Side| ms.curl_u(x, s) + Vec3::new(x.y * x.y, x.x * x.z, x.z * x.z);
        let dv = |x: &Vec3, _: Side| 2.0 * x.z;
        let d = div_commutativity(&disc, &v, &dv, SplitMode::Exact).unwrap();
        assert!(d < 1e-8, "div {d}");
    }
}
