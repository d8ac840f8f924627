//! Positive-weight quadrature on tetrahedra, triangles and segments, and
//! composite rules over the pieces of a cut element.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{CutConfig, Side};
use crate::mesh::signed_volume;
use crate::Vec3;

/// Rule on a reference simplex. Points are barycentric; weights sum to the reference measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn perms3(a: f64, b: f64) -> Vec<Vec<f64>> {
    // (a, a, b) and its permutations
    vec![vec![a, a, b], vec![a, b, a], vec![b, a, a]]
}

fn perms4_31(a: f64, b: f64) -> Vec<Vec<f64>> {
    (0..4)
        .map(|i| (0..4).map(|j| if i == j { b } else { a }).collect())
        .collect()
}

fn perms4_22(a: f64, b: f64) -> Vec<Vec<f64>> {
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    pairs
        .iter()
        .map(|&(i, j)| (0..4).map(|k| if k == i || k == j { a } else { b }).collect())
        .collect()
}

fn build(groups: Vec<(Vec<Vec<f64>>, f64)>, measure: f64, degree: usize) -> QuadRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (pts, w) in groups {
        for p in pts {
            points.push(p);
            weights.push(w * measure);
        }
    }
    QuadRule {
        points,
        weights,
        degree,
    }
}

fn tet_deg2() -> QuadRule {
    let a = 0.138_196_601_125_010_5;
    let b = 0.585_410_196_624_968_5;
    build(vec![(perms4_31(a, b), 0.25)], 1.0 / 6.0, 2)
}

fn tet_deg5() -> QuadRule {
    build(
        vec![
            (
                perms4_31(0.310_885_919_263_300_6, 0.067_342_242_210_098_17),
                0.112_687_925_718_015_85,
            ),
            (
                perms4_31(0.092_735_250_310_891_23, 0.721_794_249_067_326_3),
                0.073_493_043_116_361_95,
            ),
            (
                perms4_22(0.045_503_704_125_649_65, 0.454_496_295_874_350_35),
                0.042_546_020_777_081_466,
            ),
        ],
        1.0 / 6.0,
        5,
    )
}

fn tri_deg2() -> QuadRule {
    build(vec![(perms3(1.0 / 6.0, 2.0 / 3.0), 1.0 / 3.0)], 0.5, 2)
}

fn tri_deg4() -> QuadRule {
    build(
        vec![
            (perms3(0.445_948_490_915_965, 0.108_103_018_168_070), 0.223_381_589_678_011),
            (perms3(0.091_576_213_509_771, 0.816_847_572_980_459), 0.109_951_743_655_322),
        ],
        0.5,
        4,
    )
}

fn tri_deg5() -> QuadRule {
    build(
        vec![
            (vec![vec![1.0 / 3.0; 3]], 0.225),
            (perms3(0.470_142_064_105_115, 0.059_715_871_789_770), 0.132_394_152_788_506),
            (perms3(0.101_286_507_323_456, 0.797_426_985_353_087), 0.125_939_180_544_827),
        ],
        0.5,
        5,
    )
}

/// Tetrahedral rule of the given exactness. Degree 4 shares the 14-point degree-5 rule.
pub fn tet_rule(degree: usize) -> Result<&'static QuadRule> {
    static D2: OnceLock<QuadRule> = OnceLock::new();
    static D5: OnceLock<QuadRule> = OnceLock::new();
    match degree {
        0..=2 => Ok(D2.get_or_init(tet_deg2)),
        3..=5 => Ok(D5.get_or_init(tet_deg5)),
        _ => Err(Error::InvalidArgument(format!(
            "no tetrahedral rule of degree {degree}"
        ))),
    }
}

pub fn tri_rule(degree: usize) -> Result<&'static QuadRule> {
    static D2: OnceLock<QuadRule> = OnceLock::new();
    static D4: OnceLock<QuadRule> = OnceLock::new();
    static D5: OnceLock<QuadRule> = OnceLock::new();
    match degree {
        0..=2 => Ok(D2.get_or_init(tri_deg2)),
        3..=4 => Ok(D4.get_or_init(tri_deg4)),
        5 => Ok(D5.get_or_init(tri_deg5)),
        _ => Err(Error::InvalidArgument(format!(
            "no triangle rule of degree {degree}"
        ))),
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Values that can be accumulated by a quadrature sum.
pub trait Integrand: Copy {
    fn zero() -> Self;
    fn add_scaled(&mut self, w: f64, v: Self);
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, v: Self) {
        *self += w * v;
    }
}

impl Integrand for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn add_scaled(&mut self, w: f64, v: Self) {
        *self += w * v;
    }
}

/// Calls `visit(x, w)` for every physical quadrature point of a tetrahedron.
pub fn visit_tet(verts: &[Vec3; 4], rule: &QuadRule, mut visit: impl FnMut(&Vec3, f64)) {
    let scale = 6.0 * signed_volume(&verts[0], &verts[1], &verts[2], &verts[3]).abs();
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let x = p[0] * verts[0] + p[1] * verts[1] + p[2] * verts[2] + p[3] * verts[3];
        visit(&x, w * scale);
    }
}

pub fn visit_triangle(tri: &[Vec3; 3], rule: &QuadRule, mut visit: impl FnMut(&Vec3, f64)) {
    let scale = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let x = p[0] * tri[0] + p[1] * tri[1] + p[2] * tri[2];
        visit(&x, w * scale);
    }
}

/// Fan triangulation of a convex polygon.
pub fn fan(poly: &[Vec3]) -> impl Iterator<Item = [Vec3; 3]> + '_ {
    (1..poly.len().saturating_sub(1)).map(move |i| [poly[0], poly[i], poly[i + 1]])
}

pub fn integrate_tet<T: Integrand>(verts: &[Vec3; 4], degree: usize, f: impl Fn(&Vec3) -> T) -> Result<T> {
    let rule = tet_rule(degree)?;
    let mut acc = T::zero();
    visit_tet(verts, rule, |x, w| acc.add_scaled(w, f(x)));
    Ok(acc)
}

pub fn integrate_triangle<T: Integrand>(tri: &[Vec3; 3], degree: usize, f: impl Fn(&Vec3) -> T) -> Result<T> {
    let rule = tri_rule(degree)?;
    let mut acc = T::zero();
    visit_triangle(tri, rule, |x, w| acc.add_scaled(w, f(x)));
    Ok(acc)
}

/// Integral over the sub-region of a cut element on `side` of the discrete interface.
pub fn integrate_piece<T: Integrand>(
    cut: &CutConfig,
    side: Side,
    degree: usize,
    f: impl Fn(&Vec3) -> T,
) -> Result<T> {
    let rule = tet_rule(degree)?;
    let mut acc = T::zero();
    for t in cut.sub_tets(side) {
        visit_tet(t, rule, |x, w| acc.add_scaled(w, f(x)));
    }
    Ok(acc)
}

/// Integral over the part of local face `face` on `side`.
pub fn integrate_face_piece<T: Integrand>(
    cut: &CutConfig,
    face: usize,
    side: Side,
    degree: usize,
    f: impl Fn(&Vec3) -> T,
) -> Result<T> {
    let rule = tri_rule(degree)?;
    let mut acc = T::zero();
    for tri in fan(cut.faces[face].polygon(side)) {
        visit_triangle(&tri, rule, |x, w| acc.add_scaled(w, f(x)));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cut_tet, LevelSet};
    use crate::mesh::TetShape;

    fn fact(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    fn ref_tet() -> [Vec3; 4] {
        [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn tet_monomials_exact() {
        for deg in [2usize, 4, 5] {
            let rule = tet_rule(deg).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=deg as u32 {
                for b in 0..=deg as u32 - a {
                    for c in 0..=deg as u32 - a - b {
                        let q = integrate_tet(&ref_tet(), deg, |x| {
                            x.x.powi(a as i32) * x.y.powi(b as i32) * x.z.powi(c as i32)
                        })
                        .unwrap();
                        let exact = fact(a) * fact(b) * fact(c) / fact(a + b + c + 3);
                        assert!((q - exact).abs() < 1e-14, "deg {deg} ({a},{b},{c}) {q} vs {exact}");
                    }
                }
            }
        }
        assert!((integrate_tet(&ref_tet(), 2, |_| 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((integrate_tet(&ref_tet(), 2, |x| x.x * x.y).unwrap() - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn tri_monomials_exact() {
        let tri = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        for deg in [2usize, 4, 5] {
            let rule = tri_rule(deg).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=deg as u32 {
                for b in 0..=deg as u32 - a {
                    let q = integrate_triangle(&tri, deg, |x| x.x.powi(a as i32) * x.y.powi(b as i32)).unwrap();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((q - exact).abs() < 1e-13, "deg {deg} ({a},{b})");
                }
            }
        }
        assert!((integrate_triangle(&tri, 2, |x| x.x * x.x).unwrap() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degree() {
        assert!(tet_rule(6).is_err());
        assert!(tri_rule(7).is_err());
    }

    #[test]
    fn gauss_legendre_exact() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    fn sample_cut() -> CutConfig {
        let verts = ref_tet();
        let ls = LevelSet::sphere([0.7, 0.2, 0.1], 0.55);
        cut_tet(0, TetShape::Trirectangular, verts, verts.map(|v| ls.eval(&v)), 1.0).unwrap()
    }

    #[test]
    fn pieces_add_up() {
        let cut = sample_cut();
        let f = |x: &Vec3| 1.0 + x.x * x.y - 3.0 * x.z * x.z + x.y;
        let whole = integrate_tet(&ref_tet(), 2, f).unwrap();
        let sum = integrate_piece(&cut, Side::Plus, 2, f).unwrap() + integrate_piece(&cut, Side::Minus, 2, f).unwrap();
        assert!((whole - sum).abs() < 1e-12 * whole.abs());

        let vp = integrate_piece(&cut, Side::Plus, 2, |_| 1.0).unwrap();
        assert!((vp - cut.side_volume(Side::Plus)).abs() < 1e-15);

        // linear integrand: centroid times volume on each sub-tet
        let lin = |x: &Vec3| Vec3::new(x.x, 2.0 * x.y, -x.z);
        let q = integrate_piece(&cut, Side::Minus, 2, lin).unwrap();
        let mut exact = Vec3::zeros();
        for t in cut.sub_tets(Side::Minus) {
            let g = (t[0] + t[1] + t[2] + t[3]) / 4.0;
            exact += signed_volume(&t[0], &t[1], &t[2], &t[3]) * lin(&g);
        }
        assert!((q - exact).norm() < 1e-15);
    }

    #[test]
    fn face_pieces_add_up() {
        let cut = sample_cut();
        for face in 0..4 {
            let fp = &cut.faces[face];
            let ap = integrate_face_piece(&cut, face, Side::Plus, 2, |_| 1.0).unwrap();
            assert!((ap - fp.plus_area).abs() < 1e-15);
            let g = |x: &Vec3| (x - cut.x_k).dot(&fp.normal);
            let sum = integrate_face_piece(&cut, face, Side::Plus, 2, g).unwrap()
                + integrate_face_piece(&cut, face, Side::Minus, 2, g).unwrap();
            let fv = crate::mesh::LOCAL_FACES[face].map(|v| cut.verts[v]);
            let centroid = (fv[0] + fv[1] + fv[2]) / 3.0;
            assert!((sum - (centroid - cut.x_k).dot(&fp.normal) * fp.area).abs() < 1e-14);
        }
    }
}
