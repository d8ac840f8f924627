//! Interface representation and exact cut geometry.
//!
//! The interface is the zero set of a level-set function. Its nodal
//! interpolant is piecewise linear, so inside every interface element the
//! discrete interface is a plane cutting the tet in a triangle (three
//! intersection points) or a quadrilateral (four points). [`compute_cut`]
//! returns the plane, its local frame, and the decompositions of both sides
//! into sub-tets and of every face into clipped polygons.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{signed_volume, Mesh, TetShape, LOCAL_EDGES, LOCAL_FACES};
use crate::{Mat3, Vec3};

/// Side of the interface. `Minus` is where the level set is negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn of(value: f64) -> Side {
        if value >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

pub type LevelSetFn = dyn Fn(&Vec3) -> f64 + Send + Sync;

/// Level-set description of the interface.
#[derive(Clone)]
pub enum LevelSet {
    /// `(x - point) . normal`; signed distance when `normal` is a unit vector.
    Plane { point: Vec3, normal: Vec3 },
    /// `|x - center| - radius`.
    Sphere { center: Vec3, radius: f64 },
    /// `(sqrt((x1-c1)^2 + (x2-c2)^2) - major)^2 + (x3-c3)^2 - minor^2`.
    Torus { center: Vec3, minor: f64, major: f64 },
    Custom(Arc<LevelSetFn>),
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelSet::Plane { point, normal } => f
                .debug_struct("Plane")
                .field("point", &point.as_slice())
                .field("normal", &normal.as_slice())
                .finish(),
            LevelSet::Sphere { center, radius } => f
                .debug_struct("Sphere")
                .field("center", &center.as_slice())
                .field("radius", radius)
                .finish(),
            LevelSet::Torus {
                center,
                minor,
                major,
            } => f
                .debug_struct("Torus")
                .field("center", &center.as_slice())
                .field("minor", minor)
                .field("major", major)
                .finish(),
            LevelSet::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Serializable description of the built-in interfaces.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum InterfaceSpec {
    Plane { point: [f64; 3], normal: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
    Torus { center: [f64; 3], minor: f64, major: f64 },
}

impl InterfaceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match *self {
            InterfaceSpec::Plane { normal, .. } if Vec3::from(normal).norm() == 0.0 => bad("plane normal is zero"),
            InterfaceSpec::Sphere { radius, .. } if !(radius > 0.0) => bad("sphere radius must be positive"),
            InterfaceSpec::Torus { minor, major, .. } if !(minor > 0.0 && major > minor) => {
                bad("torus radii need 0 < minor < major")
            }
            _ => Ok(()),
        }
    }

    pub fn levelset(&self) -> LevelSet {
        match *self {
            InterfaceSpec::Plane { point, normal } => LevelSet::plane(point, normal),
            InterfaceSpec::Sphere { center, radius } => LevelSet::sphere(center, radius),
            InterfaceSpec::Torus { center, minor, major } => LevelSet::torus(center, minor, major),
        }
    }
}

impl LevelSet {
    pub fn plane(point: [f64; 3], normal: [f64; 3]) -> Self {
        let n = Vec3::from(normal);
        LevelSet::Plane {
            point: Vec3::from(point),
            normal: n / n.norm(),
        }
    }

    pub fn sphere(center: [f64; 3], radius: f64) -> Self {
        LevelSet::Sphere {
            center: Vec3::from(center),
            radius,
        }
    }

    pub fn torus(center: [f64; 3], minor: f64, major: f64) -> Self {
        LevelSet::Torus {
            center: Vec3::from(center),
            minor,
            major,
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            LevelSet::Plane { point, normal } => (x - point).dot(normal),
            LevelSet::Sphere { center, radius } => (x - center).norm() - radius,
            LevelSet::Torus {
                center,
                minor,
                major,
            } => {
                let d = x - center;
                let rho = (d.x * d.x + d.y * d.y).sqrt();
                (rho - major).powi(2) + d.z * d.z - minor * minor
            }
            LevelSet::Custom(f) => f(x),
        }
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        match self {
            LevelSet::Plane { normal, .. } => *normal,
            LevelSet::Sphere { center, .. } => {
                let d = x - center;
                let r = d.norm();
                if r > 0.0 {
                    d / r
                } else {
                    Vec3::zeros()
                }
            }
            LevelSet::Torus { center, major, .. } => {
                let d = x - center;
                let rho = (d.x * d.x + d.y * d.y).sqrt();
                if rho == 0.0 {
                    return Vec3::new(0.0, 0.0, 2.0 * d.z);
                }
                let s = 2.0 * (rho - major) / rho;
                Vec3::new(s * d.x, s * d.y, 2.0 * d.z)
            }
            LevelSet::Custom(f) => {
                let step = 1e-6;
                Vec3::from_fn(|i, _| {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[i] += step;
                    xm[i] -= step;
                    (f(&xp) - f(&xm)) / (2.0 * step)
                })
            }
        }
    }

    /// Side of the exact interface containing `x`; points on the interface count as `Plus`.
    pub fn side(&self, x: &Vec3) -> Side {
        Side::of(self.eval(x))
    }
}

/// Exact-region sign of a point (used for exact data, never for the discrete coefficients).
pub fn mismatch_sign(x: &Vec3, levelset: &LevelSet) -> Side {
    levelset.side(x)
}

/// Nodal values of the piecewise-linear level-set interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalLevelSet {
    pub values: Vec<f64>,
    /// Nodes whose value was replaced by `+snap_eps`.
    pub snapped: Vec<usize>,
    pub snap_eps: f64,
}

/// Relative snapping threshold: nodal values with `|phi| < SNAP_REL * h` become `+SNAP_REL * h`.
pub const SNAP_REL: f64 = 1e-12;

pub fn interpolate_levelset(mesh: &Mesh, levelset: &LevelSet) -> NodalLevelSet {
    let snap_eps = SNAP_REL * mesh.h;
    let mut snapped = Vec::new();
    let values = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let v = levelset.eval(x);
            if v.abs() < snap_eps {
                snapped.push(i);
                snap_eps
            } else {
                v
            }
        })
        .collect();
    NodalLevelSet {
        values,
        snapped,
        snap_eps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementClass {
    Plus,
    Minus,
    Interface,
}

pub fn classify(phi: &[f64; 4]) -> ElementClass {
    let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let max = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min * max < 0.0 {
        ElementClass::Interface
    } else if min > 0.0 {
        ElementClass::Plus
    } else {
        ElementClass::Minus
    }
}

pub fn classify_elements(mesh: &Mesh, phi: &NodalLevelSet) -> Vec<ElementClass> {
    mesh.tets
        .iter()
        .map(|t| classify(&t.map(|g| phi.values[g])))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutCase {
    ThreePoints,
    FourPoints,
}

/// A face of an interface element clipped by the discrete interface.
#[derive(Debug, Clone, PartialEq)]
pub struct FacePieces {
    pub plus: Vec<Vec3>,
    pub minus: Vec<Vec3>,
    pub plus_area: f64,
    pub minus_area: f64,
    pub area: f64,
    /// Outward unit normal of the face.
    pub normal: Vec3,
}

impl FacePieces {
    pub fn polygon(&self, side: Side) -> &[Vec3] {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn area_of(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.plus_area,
            Side::Minus => self.minus_area,
        }
    }
}

/// Cut geometry of one interface element.
#[derive(Debug, Clone, PartialEq)]
pub struct CutConfig {
    pub tet: usize,
    pub shape: TetShape,
    pub verts: [Vec3; 4],
    pub phi: [f64; 4],
    pub signs: [Side; 4],
    pub case: CutCase,
    /// Intersection polygon, ordered counter-clockwise around `normal`.
    pub points: Vec<Vec3>,
    /// Cut parameter `s` along each local edge `a -> b` (point = a + s (b - a)).
    pub edge_params: [Option<f64>; 6],
    pub x_k: Vec3,
    /// Unit normal of the cutting plane, pointing into the plus side.
    pub normal: Vec3,
    pub tangent1: Vec3,
    pub tangent2: Vec3,
    pub plus_tets: Vec<[Vec3; 4]>,
    pub minus_tets: Vec<[Vec3; 4]>,
    pub faces: [FacePieces; 4],
    pub volume: f64,
    /// Set when a sub-tet has volume below `1e-14 h^3`.
    pub degenerate: bool,
    pub plane_residual: f64,
}

impl CutConfig {
    /// `T_K = [n, t1, t2]` (columns).
    pub fn transform(&self) -> Mat3 {
        Mat3::from_columns(&[self.normal, self.tangent1, self.tangent2])
    }

    pub fn sub_tets(&self, side: Side) -> &[[Vec3; 4]] {
        match side {
            Side::Plus => &self.plus_tets,
            Side::Minus => &self.minus_tets,
        }
    }

    pub fn side_volume(&self, side: Side) -> f64 {
        self.sub_tets(side)
            .iter()
            .map(|t| signed_volume(&t[0], &t[1], &t[2], &t[3]))
            .sum()
    }

    /// Side of the discrete interface plane containing `x`.
    pub fn side_of(&self, x: &Vec3) -> Side {
        Side::of(self.normal.dot(&(x - self.x_k)))
    }

    /// Longest intersection segment of the plane with a face.
    pub fn face_cut_length(&self, local_face: usize) -> f64 {
        let mut pts = Vec::with_capacity(2);
        for (le, [a, b]) in LOCAL_EDGES.iter().enumerate() {
            if LOCAL_FACES[local_face].contains(a) && LOCAL_FACES[local_face].contains(b) {
                if let Some(s) = self.edge_params[le] {
                    pts.push(self.verts[*a] + s * (self.verts[*b] - self.verts[*a]));
                }
            }
        }
        if pts.len() == 2 {
            (pts[1] - pts[0]).norm()
        } else {
            0.0
        }
    }
}

fn orthonormal_frame(n: &Vec3) -> (Vec3, Vec3) {
    // axis least aligned with n
    let axis = (0..3)
        .min_by(|&i, &j| n[i].abs().partial_cmp(&n[j].abs()).unwrap())
        .unwrap();
    let mut e = Vec3::zeros();
    e[axis] = 1.0;
    let t1 = n.cross(&e).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

pub fn polygon_area_centroid(poly: &[Vec3]) -> (f64, Vec3) {
    if poly.len() < 3 {
        return (0.0, poly.iter().sum::<Vec3>() / poly.len().max(1) as f64);
    }
    let mut area = 0.0;
    let mut c = Vec3::zeros();
    for i in 1..poly.len() - 1 {
        let a = (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0])).norm() / 2.0;
        area += a;
        c += a * (poly[0] + poly[i] + poly[i + 1]) / 3.0;
    }
    if area > 0.0 {
        (area, c / area)
    } else {
        (0.0, poly.iter().sum::<Vec3>() / poly.len() as f64)
    }
}

pub fn polygon_area(poly: &[Vec3]) -> f64 {
    polygon_area_centroid(poly).0
}

/// Clips a convex polygon with linearly varying `phi` to the part where `phi` has sign `side`.
fn clip_polygon(poly: &[(Vec3, f64)], side: Side) -> Vec<Vec3> {
    let keep = |v: f64| match side {
        Side::Plus => v >= 0.0,
        Side::Minus => v < 0.0,
    };
    let mut out = Vec::with_capacity(poly.len() + 1);
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

fn oriented(mut t: [Vec3; 4]) -> [Vec3; 4] {
    if signed_volume(&t[0], &t[1], &t[2], &t[3]) < 0.0 {
        t.swap(2, 3);
    }
    t
}

/// Staircase split of a prism with bottom `(a, b, c)` and top `(a', b', c')`.
fn prism_tets(bottom: [Vec3; 3], top: [Vec3; 3]) -> [[Vec3; 4]; 3] {
    let [a, b, c] = bottom;
    let [ap, bp, cp] = top;
    [
        oriented([a, b, c, ap]),
        oriented([b, c, ap, bp]),
        oriented([c, ap, bp, cp]),
    ]
}

/// Cut geometry of interface element `tet` from the nodal level-set values.
pub fn compute_cut(mesh: &Mesh, tet: usize, phi: &NodalLevelSet) -> Result<CutConfig> {
    let verts = mesh.tet_vertices(tet);
    let vphi = mesh.tets[tet].map(|g| phi.values[g]);
    cut_tet(tet, mesh.shapes[tet], verts, vphi, mesh.h)
}

/// Cut of an arbitrary tet by the linear function with vertex values `vphi`.
pub fn cut_tet(
    tet: usize,
    shape: TetShape,
    verts: [Vec3; 4],
    vphi: [f64; 4],
    h: f64,
) -> Result<CutConfig> {
    if classify(&vphi) != ElementClass::Interface {
        return Err(Error::Geometry(format!("tet {tet} is not an interface element")));
    }
    let signs = vphi.map(Side::of);
    let volume = signed_volume(&verts[0], &verts[1], &verts[2], &verts[3]);

    let mut edge_params = [None; 6];
    let mut points = Vec::with_capacity(4);
    let mut edge_point = [[None::<Vec3>; 4]; 4];
    for (le, [a, b]) in LOCAL_EDGES.iter().enumerate() {
        if signs[*a] != signs[*b] {
            let s = vphi[*a] / (vphi[*a] - vphi[*b]);
            edge_params[le] = Some(s);
            let p = verts[*a] + s * (verts[*b] - verts[*a]);
            points.push(p);
            edge_point[*a][*b] = Some(p);
            edge_point[*b][*a] = Some(p);
        }
    }
    let case = match points.len() {
        3 => CutCase::ThreePoints,
        4 => CutCase::FourPoints,
        k => {
            return Err(Error::Internal(format!(
                "tet {tet}: {k} intersection points on a linear cut"
            )))
        }
    };

    // gradient of the linear interpolant
    let jac = Mat3::from_columns(&[verts[1] - verts[0], verts[2] - verts[0], verts[3] - verts[0]]);
    let dphi = Vec3::new(vphi[1] - vphi[0], vphi[2] - vphi[0], vphi[3] - vphi[0]);
    let grad = jac
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Geometry(format!("tet {tet} is degenerate")))?
        * dphi;
    let normal = grad.normalize();
    let (tangent1, tangent2) = orthonormal_frame(&normal);

    // order polygon counter-clockwise around the normal
    let centre = points.iter().sum::<Vec3>() / points.len() as f64;
    points.sort_by(|p, q| {
        let ang = |x: &Vec3| {
            let d = x - centre;
            d.dot(&tangent2).atan2(d.dot(&tangent1))
        };
        ang(p).partial_cmp(&ang(q)).unwrap()
    });
    let (_, x_k) = polygon_area_centroid(&points);
    let plane_residual = points
        .iter()
        .map(|p| normal.dot(&(p - x_k)).abs())
        .fold(0.0, f64::max);
    if plane_residual > 1e-10 * h {
        return Err(Error::Geometry(format!(
            "tet {tet}: intersection points not coplanar (residual {plane_residual:.3e})"
        )));
    }

    let plus: Vec<usize> = (0..4).filter(|&i| signs[i] == Side::Plus).collect();
    let minus: Vec<usize> = (0..4).filter(|&i| signs[i] == Side::Minus).collect();
    let ep = |a: usize, b: usize| edge_point[a][b].expect("cut edge");
    let (plus_tets, minus_tets) = match case {
        CutCase::ThreePoints => {
            let (lone, rest, lone_side) = if plus.len() == 1 {
                (plus[0], minus.clone(), Side::Plus)
            } else {
                (minus[0], plus.clone(), Side::Minus)
            };
            let cap = vec![oriented([verts[lone], ep(lone, rest[0]), ep(lone, rest[1]), ep(lone, rest[2])])];
            let frustum = prism_tets(
                [verts[rest[0]], verts[rest[1]], verts[rest[2]]],
                [ep(lone, rest[0]), ep(lone, rest[1]), ep(lone, rest[2])],
            )
            .to_vec();
            match lone_side {
                Side::Plus => (cap, frustum),
                Side::Minus => (frustum, cap),
            }
        }
        CutCase::FourPoints => {
            let wedge = |a: &[usize], b: &[usize]| {
                prism_tets(
                    [verts[a[0]], ep(a[0], b[0]), ep(a[0], b[1])],
                    [verts[a[1]], ep(a[1], b[0]), ep(a[1], b[1])],
                )
                .to_vec()
            };
            (wedge(&plus, &minus), wedge(&minus, &plus))
        }
    };
    let degenerate = plus_tets
        .iter()
        .chain(minus_tets.iter())
        .any(|t| signed_volume(&t[0], &t[1], &t[2], &t[3]) < 1e-14 * h * h * h);

    let centroid = verts.iter().sum::<Vec3>() / 4.0;
    let faces = std::array::from_fn(|lf| {
        let fv = LOCAL_FACES[lf];
        let poly: Vec<(Vec3, f64)> = fv.iter().map(|&v| (verts[v], vphi[v])).collect();
        let pp = clip_polygon(&poly, Side::Plus);
        let mp = clip_polygon(&poly, Side::Minus);
        let tri = [verts[fv[0]], verts[fv[1]], verts[fv[2]]];
        let mut nrm = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let area = nrm.norm() / 2.0;
        nrm /= 2.0 * area;
        if nrm.dot(&(tri[0] - centroid)) < 0.0 {
            nrm = -nrm;
        }
        let plus_area = polygon_area(&pp);
        let minus_area = polygon_area(&mp);
        FacePieces {
            plus: pp,
            minus: mp,
            plus_area,
            minus_area,
            area,
            normal: nrm,
        }
    });

    Ok(CutConfig {
        tet,
        shape,
        verts,
        phi: vphi,
        signs,
        case,
        points,
        edge_params,
        x_k,
        normal,
        tangent1,
        tangent2,
        plus_tets,
        minus_tets,
        faces,
        volume,
        degenerate,
        plane_residual,
    })
}

/// Mesh together with the interface and the cut data of all interface elements.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub levelset: LevelSet,
    pub phi: NodalLevelSet,
    pub classes: Vec<ElementClass>,
    pub cuts: Vec<Option<CutConfig>>,
}

impl Discretization {
    pub fn new(mesh: Mesh, levelset: LevelSet) -> Result<Self> {
        let phi = interpolate_levelset(&mesh, &levelset);
        let classes = classify_elements(&mesh, &phi);
        let cuts = (0..mesh.num_tets())
            .into_par_iter()
            .map(|t| match classes[t] {
                ElementClass::Interface => compute_cut(&mesh, t, &phi).map(Some),
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mesh,
            levelset,
            phi,
            classes,
            cuts,
        })
    }

    pub fn cut(&self, tet: usize) -> Option<&CutConfig> {
        self.cuts[tet].as_ref()
    }

    pub fn interface_elements(&self) -> Vec<usize> {
        (0..self.mesh.num_tets())
            .filter(|&t| self.classes[t] == ElementClass::Interface)
            .collect()
    }

    /// Side of a whole non-interface element.
    pub fn element_side(&self, tet: usize) -> Option<Side> {
        match self.classes[tet] {
            ElementClass::Plus => Some(Side::Plus),
            ElementClass::Minus => Some(Side::Minus),
            ElementClass::Interface => None,
        }
    }
}

fn barycentric(verts: &[Vec3; 4], x: &Vec3) -> Option<[f64; 4]> {
    let jac = Mat3::from_columns(&[verts[1] - verts[0], verts[2] - verts[0], verts[3] - verts[0]]);
    let l = jac.try_inverse()? * (x - verts[0]);
    Some([1.0 - l.x - l.y - l.z, l.x, l.y, l.z])
}

fn project_to_levelset(levelset: &LevelSet, mut x: Vec3) -> Option<Vec3> {
    for _ in 0..30 {
        let v = levelset.eval(&x);
        let g = levelset.gradient(&x);
        let g2 = g.norm_squared();
        if g2 == 0.0 {
            return None;
        }
        let dx = v / g2 * g;
        x -= dx;
        if dx.norm() < 1e-15 {
            break;
        }
    }
    (levelset.eval(&x).abs() < 1e-11).then_some(x)
}

/// Maximum sampled distance from points of the exact interface inside each
/// interface element to that element's cutting plane.
pub fn geometric_error_probe(disc: &Discretization) -> f64 {
    let ls = &disc.levelset;
    disc.cuts
        .par_iter()
        .flatten()
        .map(|cut| {
            let mut samples: Vec<Vec3> = Vec::new();
            // exact roots along cut edges
            for [a, b] in LOCAL_EDGES {
                let (pa, pb) = (cut.verts[a], cut.verts[b]);
                let (fa, fb) = (ls.eval(&pa), ls.eval(&pb));
                if fa * fb < 0.0 {
                    if let Some(s) = bisect_root(|s| ls.eval(&(pa + s * (pb - pa))), 0.0, 1.0, fa) {
                        samples.push(pa + s * (pb - pa));
                    }
                }
            }
            // projections of interior lattice points
            let m = 4;
            for i in 0..=m {
                for j in 0..=m - i {
                    for k in 0..=m - i - j {
                        let l = m - i - j - k;
                        let x = (i as f64 * cut.verts[0]
                            + j as f64 * cut.verts[1]
                            + k as f64 * cut.verts[2]
                            + l as f64 * cut.verts[3])
                            / m as f64;
                        if let Some(p) = project_to_levelset(ls, x) {
                            if barycentric(&cut.verts, &p)
                                .is_some_and(|b| b.iter().all(|&c| c >= -1e-12))
                            {
                                samples.push(p);
                            }
                        }
                    }
                }
            }
            samples
                .iter()
                .map(|p| cut.normal.dot(&(p - cut.x_k)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Root of `f` on `[lo, hi]` by bisection, given `f(lo) = f_lo` with a sign change.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> Option<f64> {
    let mut flo = f_lo;
    let fhi = f(hi);
    if flo * fhi > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo) < 1e-16 {
            return Some(mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
