//! Local immersed bases on a single element.
//!
//! Every shape function is stored as a pair of polynomials, one per side of
//! the cutting plane, written around the reference point `x_K`:
//!
//! * nodal: `b . (x - x_K) + c` with `b_minus = B b_plus`,
//! * edge:  `a x (x - x_K) + b` with `a_minus = A a_plus`, `b_minus = B b_plus`,
//! * face:  `c (x - x_K) + a` with `a_minus = A a_plus`.
//!
//! On elements away from the interface both sides coincide and the bases
//! reduce to the barycentric, Whitney and Raviart-Thomas functions.
//! Local DoFs are oriented by local vertex order (edges run from the lower to
//! the higher local vertex, face fluxes are outward).

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{polygon_area_centroid, CutConfig, Side};
use crate::mesh::{signed_volume, LOCAL_EDGES, LOCAL_FACES};
use crate::{Mat3, Vec3};

/// Piecewise-constant material coefficients: `alpha` multiplies the curl-curl
/// term, `beta` the zero-order term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPair {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl CoefficientPair {
    pub fn new(alpha_plus: f64, alpha_minus: f64, beta_plus: f64, beta_minus: f64) -> Result<Self> {
        for (name, v) in [
            ("alpha_plus", alpha_plus),
            ("alpha_minus", alpha_minus),
            ("beta_plus", beta_plus),
            ("beta_minus", beta_minus),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            alpha_plus,
            alpha_minus,
            beta_plus,
            beta_minus,
        })
    }

    pub fn uniform(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, alpha, beta, beta)
    }

    pub fn alpha(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.alpha_plus,
            Side::Minus => self.alpha_minus,
        }
    }

    pub fn beta(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.beta_plus,
            Side::Minus => self.beta_minus,
        }
    }

    pub fn alpha_ratio(&self) -> f64 {
        self.alpha_plus / self.alpha_minus
    }

    pub fn beta_ratio(&self) -> f64 {
        self.beta_plus / self.beta_minus
    }
}

/// Linear maps carrying plus-side coefficients to the minus side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpMaps {
    /// Acts on curl-type (RT) coefficients.
    pub a: Mat3,
    /// Acts on gradient-type coefficients.
    pub b: Mat3,
    pub transform: Mat3,
}

pub fn build_jump_maps(cut: &CutConfig, coeffs: &CoefficientPair) -> JumpMaps {
    let t = cut.transform();
    let ar = coeffs.alpha_ratio();
    let br = coeffs.beta_ratio();
    JumpMaps {
        a: t * Mat3::from_diagonal(&Vec3::new(1.0, ar, ar)) * t.transpose(),
        b: t * Mat3::from_diagonal(&Vec3::new(br, 1.0, 1.0)) * t.transpose(),
        transform: t,
    }
}

/// A value per side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sided<T> {
    pub plus: T,
    pub minus: T,
}

impl<T: Copy> Sided<T> {
    pub fn both(v: T) -> Self {
        Self { plus: v, minus: v }
    }

    pub fn get(&self, side: Side) -> T {
        match side {
            Side::Plus => self.plus,
            Side::Minus => self.minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseAffine {
    pub origin: Vec3,
    pub grad: Sided<Vec3>,
    pub value: f64,
}

impl PiecewiseAffine {
    pub fn eval(&self, x: &Vec3, side: Side) -> f64 {
        self.grad.get(side).dot(&(x - self.origin)) + self.value
    }

    pub fn gradient(&self) -> PiecewiseNedelec {
        PiecewiseNedelec {
            origin: self.origin,
            a: Sided::both(Vec3::zeros()),
            b: self.grad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseNedelec {
    pub origin: Vec3,
    pub a: Sided<Vec3>,
    pub b: Sided<Vec3>,
}

impl PiecewiseNedelec {
    pub fn eval(&self, x: &Vec3, side: Side) -> Vec3 {
        self.a.get(side).cross(&(x - self.origin)) + self.b.get(side)
    }

    pub fn eval_curl(&self, side: Side) -> Vec3 {
        2.0 * self.a.get(side)
    }

    pub fn curl(&self) -> PiecewiseRT {
        PiecewiseRT {
            origin: self.origin,
            c: 0.0,
            a: Sided {
                plus: 2.0 * self.a.plus,
                minus: 2.0 * self.a.minus,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseRT {
    pub origin: Vec3,
    pub c: f64,
    pub a: Sided<Vec3>,
}

impl PiecewiseRT {
    pub fn eval(&self, x: &Vec3, side: Side) -> Vec3 {
        self.c * (x - self.origin) + self.a.get(side)
    }

    pub fn eval_div(&self) -> f64 {
        3.0 * self.c
    }
}

/// Element geometry as seen by the DoF functionals.
#[derive(Debug, Clone, Copy)]
pub enum ElementView<'a> {
    Whole { verts: [Vec3; 4], side: Side },
    Cut(&'a CutConfig),
}

impl ElementView<'_> {
    pub fn verts(&self) -> [Vec3; 4] {
        match self {
            ElementView::Whole { verts, .. } => *verts,
            ElementView::Cut(c) => c.verts,
        }
    }

    pub fn vertex_side(&self, v: usize) -> Side {
        match self {
            ElementView::Whole { side, .. } => *side,
            ElementView::Cut(c) => c.signs[v],
        }
    }

    /// Side of an arbitrary point of the element.
    pub fn side_of(&self, x: &Vec3) -> Side {
        match self {
            ElementView::Whole { side, .. } => *side,
            ElementView::Cut(c) => c.side_of(x),
        }
    }

    /// Pieces `(start, end, side)` of local edge `le`, oriented low to high local vertex.
    pub fn edge_segments(&self, le: usize) -> Vec<(Vec3, Vec3, Side)> {
        let verts = self.verts();
        let [a, b] = LOCAL_EDGES[le];
        let (pa, pb) = (verts[a], verts[b]);
        match self {
            ElementView::Cut(c) => match c.edge_params[le] {
                Some(s) => {
                    let m = pa + s * (pb - pa);
                    vec![(pa, m, c.signs[a]), (m, pb, c.signs[b])]
                }
                None => vec![(pa, pb, c.signs[a])],
            },
            ElementView::Whole { side, .. } => vec![(pa, pb, *side)],
        }
    }

    /// Pieces `(area, centroid, side)` of local face `lf`, with the outward normal.
    pub fn face_pieces(&self, lf: usize) -> (Vec<(f64, Vec3, Side)>, Vec3) {
        match self {
            ElementView::Cut(c) => {
                let fp = &c.faces[lf];
                let mut out = Vec::with_capacity(2);
                for side in [Side::Plus, Side::Minus] {
                    let poly = fp.polygon(side);
                    if poly.len() >= 3 {
                        let (area, centroid) = polygon_area_centroid(poly);
                        out.push((area, centroid, side));
                    }
                }
                (out, fp.normal)
            }
            ElementView::Whole { verts, side } => {
                let (area, centroid, normal) = face_geometry(verts, lf);
                (vec![(area, centroid, *side)], normal)
            }
        }
    }
}

/// Area, centroid and outward unit normal of a local face.
pub fn face_geometry(verts: &[Vec3; 4], lf: usize) -> (f64, Vec3, Vec3) {
    let [i, j, k] = LOCAL_FACES[lf];
    let cross = (verts[j] - verts[i]).cross(&(verts[k] - verts[i]));
    let area = cross.norm() / 2.0;
    let centroid = (verts[i] + verts[j] + verts[k]) / 3.0;
    let mut n = cross / (2.0 * area);
    if n.dot(&(verts[i] - verts[lf])) < 0.0 {
        n = -n;
    }
    (area, centroid, n)
}

/// `int_e v . t ds` along local edge `le`, with `t` pointing to the higher local vertex.
pub fn dof_edge_integral(field: &PiecewiseNedelec, elem: &ElementView, le: usize) -> f64 {
    elem.edge_segments(le)
        .iter()
        .map(|(p, q, side)| field.eval(&(0.5 * (p + q)), *side).dot(&(q - p)))
        .sum()
}

/// Outward flux of `field` through local face `lf`.
pub fn dof_face_flux(field: &PiecewiseRT, elem: &ElementView, lf: usize) -> f64 {
    let (pieces, n) = elem.face_pieces(lf);
    pieces
        .iter()
        .map(|(area, centroid, side)| area * field.eval(centroid, *side).dot(&n))
        .sum()
}

/// Nodal, edge and face shape functions of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    pub nodal: [PiecewiseAffine; 4],
    pub edge: [PiecewiseNedelec; 6],
    pub face: [PiecewiseRT; 4],
    /// Global orientation of each local edge / face DoF (`+1` when aligned).
    pub edge_signs: [i8; 6],
    pub face_signs: [i8; 4],
    pub immersed: bool,
    pub anchor: usize,
}

fn barycentric_gradients(verts: &[Vec3; 4]) -> Result<[Vec3; 4]> {
    let jac = Mat3::from_columns(&[verts[1] - verts[0], verts[2] - verts[0], verts[3] - verts[0]]);
    let inv_t = jac
        .try_inverse()
        .ok_or_else(|| Error::Geometry("degenerate tetrahedron".into()))?
        .transpose();
    let g1 = inv_t.column(0).into_owned();
    let g2 = inv_t.column(1).into_owned();
    let g3 = inv_t.column(2).into_owned();
    Ok([-(g1 + g2 + g3), g1, g2, g3])
}

impl LocalBasis {
    /// Barycentric, Whitney and Raviart-Thomas functions around the centroid.
    pub fn standard(verts: &[Vec3; 4]) -> Result<Self> {
        let grads = barycentric_gradients(verts)?;
        let origin = verts.iter().sum::<Vec3>() / 4.0;
        let vol = signed_volume(&verts[0], &verts[1], &verts[2], &verts[3]);
        let nodal = std::array::from_fn(|i| PiecewiseAffine {
            origin,
            grad: Sided::both(grads[i]),
            value: 0.25,
        });
        let edge = std::array::from_fn(|le| {
            let [a, b] = LOCAL_EDGES[le];
            PiecewiseNedelec {
                origin,
                a: Sided::both(grads[a].cross(&grads[b])),
                b: Sided::both((grads[b] - grads[a]) / 4.0),
            }
        });
        let face = std::array::from_fn(|lf| PiecewiseRT {
            origin,
            c: 1.0 / (3.0 * vol),
            a: Sided::both((origin - verts[lf]) / (3.0 * vol)),
        });
        Ok(Self {
            nodal,
            edge,
            face,
            edge_signs: [1; 6],
            face_signs: [1; 4],
            immersed: false,
            anchor: 3,
        })
    }

    /// Immersed bases on an interface element.
    pub fn immersed(cut: &CutConfig, coeffs: &CoefficientPair) -> Result<Self> {
        let maps = build_jump_maps(cut, coeffs);
        let nodal = build_h1_basis(cut, &maps)?;
        let face = build_hdiv_basis(cut, &maps)?;
        let (edge, anchor) = build_hcurl_basis(cut, &nodal, &face)?;
        Ok(Self {
            nodal,
            edge,
            face,
            edge_signs: [1; 6],
            face_signs: [1; 4],
            immersed: true,
            anchor,
        })
    }

    pub fn with_signs(mut self, edge_signs: [i8; 6], face_signs: [i8; 4]) -> Self {
        self.edge_signs = edge_signs;
        self.face_signs = face_signs;
        self
    }
}

fn check_singular(what: &str, det: f64, scale: f64) -> Result<()> {
    if !(det.abs() > 1e-13 * scale) {
        return Err(Error::Singular {
            what: what.into(),
            pivot: det,
            scale,
        });
    }
    Ok(())
}

/// Nodal basis: `phi_i(z_j) = delta_ij` with the gradient jump encoded by `B`.
pub fn build_h1_basis(cut: &CutConfig, maps: &JumpMaps) -> Result<[PiecewiseAffine; 4]> {
    let mut m = Matrix4::zeros();
    for j in 0..4 {
        let y = cut.verts[j] - cut.x_k;
        let row = match cut.signs[j] {
            Side::Plus => y,
            // (B b) . y = b . (B y) since B is symmetric
            Side::Minus => maps.b * y,
        };
        m[(j, 0)] = row.x;
        m[(j, 1)] = row.y;
        m[(j, 2)] = row.z;
        m[(j, 3)] = 1.0;
    }
    let scale: f64 = (0..4).map(|j| m.row(j).norm()).product();
    let lu = m.lu();
    check_singular("nodal immersed system", lu.determinant(), scale)?;
    let mut out = [PiecewiseAffine {
        origin: cut.x_k,
        grad: Sided::both(Vec3::zeros()),
        value: 0.0,
    }; 4];
    for (i, f) in out.iter_mut().enumerate() {
        let mut rhs = Vector4::zeros();
        rhs[i] = 1.0;
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Internal("nodal solve failed".into()))?;
        let bp = Vec3::new(sol[0], sol[1], sol[2]);
        f.grad = Sided {
            plus: bp,
            minus: maps.b * bp,
        };
        f.value = sol[3];
    }
    Ok(out)
}

/// Faces used for the flux system: the three largest, then the remaining one.
pub fn flux_face_order(verts: &[Vec3; 4]) -> [usize; 4] {
    let mut order = [0, 1, 2, 3];
    let areas: Vec<f64> = (0..4).map(|lf| face_geometry(verts, lf).0).collect();
    order.sort_by(|&a, &b| areas[b].partial_cmp(&areas[a]).unwrap().then(a.cmp(&b)));
    order
}

/// Row of the flux system for local face `lf`: flux of `a x` constant fields.
fn flux_row(cut: &CutConfig, maps: &JumpMaps, lf: usize) -> Vec3 {
    let fp = &cut.faces[lf];
    let n = fp.normal;
    fp.plus_area * n + fp.minus_area * (maps.a.transpose() * n)
}

/// The 3x3 matrix mapping `a_plus` to fluxes through the three given faces.
pub fn hdiv_system_matrix(cut: &CutConfig, maps: &JumpMaps, faces: [usize; 3]) -> Mat3 {
    let rows = faces.map(|lf| flux_row(cut, maps, lf).transpose());
    Mat3::from_rows(&rows)
}

pub fn build_hdiv_basis(cut: &CutConfig, maps: &JumpMaps) -> Result<[PiecewiseRT; 4]> {
    let order = flux_face_order(&cut.verts);
    let sel = [order[0], order[1], order[2]];
    let m = hdiv_system_matrix(cut, maps, sel);
    let scale: f64 = (0..3).map(|r| m.row(r).norm()).product();
    let lu = m.lu();
    check_singular("face immersed system", lu.determinant(), scale)?;
    let vol = cut.volume;
    let geo: Vec<(f64, Vec3, Vec3)> = (0..4).map(|lf| face_geometry(&cut.verts, lf)).collect();
    let mut out = [PiecewiseRT {
        origin: cut.x_k,
        c: 0.0,
        a: Sided::both(Vec3::zeros()),
    }; 4];
    for (i, f) in out.iter_mut().enumerate() {
        let c = 1.0 / (3.0 * vol);
        let rhs = Vec3::from_fn(|r, _| {
            let lf = sel[r];
            let (area, centroid, n) = geo[lf];
            let target = if lf == i { 1.0 } else { 0.0 };
            target - c * (centroid - cut.x_k).dot(&n) * area
        });
        let ap = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Internal("face solve failed".into()))?;
        *f = PiecewiseRT {
            origin: cut.x_k,
            c,
            a: Sided {
                plus: ap,
                minus: maps.a * ap,
            },
        };
        // the unused face closes the flux balance
        let lf = order[3];
        let flux = dof_face_flux(f, &ElementView::Cut(cut), lf);
        let target = if lf == i { 1.0 } else { 0.0 };
        if (flux - target).abs() > 1e-10 {
            return Err(Error::Internal(format!(
                "face basis {i}: residual {:.3e} on face {lf}",
                flux - target
            )));
        }
    }
    Ok(out)
}

/// `+1` when local edge `le` runs counter-clockwise around the outward normal of face `lf`.
pub fn face_edge_orientation(verts: &[Vec3; 4], lf: usize, le: usize) -> i8 {
    let (_, centroid, n) = face_geometry(verts, lf);
    let [a, b] = LOCAL_EDGES[le];
    let turn = (verts[a] - centroid).cross(&(verts[b] - centroid)).dot(&n);
    if turn > 0.0 {
        1
    } else {
        -1
    }
}

/// Local vertex whose opposite face carries the longest cut segment.
pub fn anchor_vertex(cut: &CutConfig) -> usize {
    let mut best = (3, -1.0);
    for lf in (0..4).rev() {
        let len = cut.face_cut_length(lf);
        if len > best.1 + 1e-14 {
            best = (lf, len);
        }
    }
    best.0
}

/// Edge basis from the face and nodal bases: curl part from circulations, gradient part from the anchor edges.
pub fn build_hcurl_basis(
    cut: &CutConfig,
    nodal: &[PiecewiseAffine; 4],
    face: &[PiecewiseRT; 4],
) -> Result<([PiecewiseNedelec; 6], usize)> {
    let elem = ElementView::Cut(cut);
    let anchor = anchor_vertex(cut);
    let orient: [[i8; 6]; 4] =
        std::array::from_fn(|lf| std::array::from_fn(|le| face_edge_orientation(&cut.verts, lf, le)));
    let face_edges = crate::mesh::FACE_EDGES;
    let mut out = [PiecewiseNedelec {
        origin: cut.x_k,
        a: Sided::both(Vec3::zeros()),
        b: Sided::both(Vec3::zeros()),
    }; 6];
    for (i, f) in out.iter_mut().enumerate() {
        let w: [f64; 4] = std::array::from_fn(|lf| {
            face_edges[lf]
                .iter()
                .filter(|&&le| le == i)
                .map(|&le| f64::from(orient[lf][le]))
                .sum()
        });
        let wsum: f64 = w.iter().sum();
        if wsum.abs() > 1e-12 {
            return Err(Error::Internal(format!("edge {i}: face weights sum to {wsum}")));
        }
        let mut ap = Vec3::zeros();
        let mut am = Vec3::zeros();
        let mut c = 0.0;
        for lf in 0..4 {
            ap += w[lf] * face[lf].a.plus;
            am += w[lf] * face[lf].a.minus;
            c += w[lf] * face[lf].c;
        }
        if c.abs() > 1e-10 * face[0].c.abs() {
            return Err(Error::Internal(format!("edge {i}: curl part not divergence free")));
        }
        let rot = PiecewiseNedelec {
            origin: cut.x_k,
            a: Sided {
                plus: ap / 2.0,
                minus: am / 2.0,
            },
            b: Sided::both(Vec3::zeros()),
        };
        let mut bp = Vec3::zeros();
        let mut bm = Vec3::zeros();
        for q in (0..4).filter(|&q| q != anchor) {
            let (lo, hi) = (anchor.min(q), anchor.max(q));
            let le = LOCAL_EDGES.iter().position(|e| *e == [lo, hi]).unwrap();
            let target = if le == i { 1.0 } else { 0.0 };
            let d = if anchor == lo { 1.0 } else { -1.0 };
            let coef = d * (target - dof_edge_integral(&rot, &elem, le));
            bp += coef * nodal[q].grad.plus;
            bm += coef * nodal[q].grad.minus;
        }
        *f = PiecewiseNedelec {
            origin: cut.x_k,
            a: rot.a,
            b: Sided { plus: bp, minus: bm },
        };
    }
    Ok((out, anchor))
}
