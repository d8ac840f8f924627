//! Sphere benchmark: a piecewise smooth field satisfying all three jump conditions.

use crate::error::{Error, Result};
use crate::geometry::{LevelSet, Side};
use crate::ife_local::CoefficientPair;
use crate::{Mat3, Vec3};

/// Rotation axis `e` with `e x x = (x2 - x3, x3 - x1, x1 - x2)`.
const AXIS: Vec3 = Vec3::new(-1.0, -1.0, -1.0);

/// `u = x / beta + g(x) (e x x)` on each side of the sphere `|x| = r1`.
///
/// `g- = n1 R1 / alpha-`, `g+ = n2 R1 R2 / alpha+` with `Ri = ri^2 - |x|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedSolution {
    pub r1: f64,
    pub r2: f64,
    pub n1: f64,
    pub n2: f64,
    pub coeffs: CoefficientPair,
}

impl ManufacturedSolution {
    pub fn new(r1: f64, r2: f64, n2: f64, coeffs: CoefficientPair) -> Result<Self> {
        if !(r1 > 0.0 && r2 > r1) {
            return Err(Error::InvalidArgument(format!("radii must satisfy 0 < r1 < r2 (got {r1}, {r2})")));
        }
        Ok(Self {
            r1,
            r2,
            n1: n2 * (r2 * r2 - r1 * r1),
            n2,
            coeffs,
        })
    }

    /// `alpha- = beta- = 1`, `alpha+ = beta+ = rho`, `r1 = 0.6`, `r2 = 1`, `n2 = 1`.
    pub fn sphere_benchmark(rho: f64) -> Result<Self> {
        Self::new(0.6, 1.0, 1.0, CoefficientPair::new(rho, 1.0, rho, 1.0)?)
    }

    pub fn levelset(&self) -> LevelSet {
        LevelSet::sphere([0.0; 3], self.r1)
    }

    /// `(g, grad g, hessian g)` on one side.
    fn profile(&self, x: &Vec3, side: Side) -> (f64, Vec3, Mat3) {
        let s = x.norm_squared();
        let r1 = self.r1 * self.r1 - s;
        match side {
            Side::Minus => {
                let c = self.n1 / self.coeffs.alpha(Side::Minus);
                (c * r1, -2.0 * c * x, -2.0 * c * Mat3::identity())
            }
            Side::Plus => {
                let c = self.n2 / self.coeffs.alpha(Side::Plus);
                let r2 = self.r2 * self.r2 - s;
                let hess = c * (-2.0 * (r1 + r2) * Mat3::identity() + 8.0 * x * x.transpose());
                (c * r1 * r2, -2.0 * c * (r1 + r2) * x, hess)
            }
        }
    }

    pub fn u(&self, x: &Vec3, side: Side) -> Vec3 {
        let (g, _, _) = self.profile(x, side);
        x / self.coeffs.beta(side) + g * AXIS.cross(x)
    }

    pub fn curl_u(&self, x: &Vec3, side: Side) -> Vec3 {
        let (g, dg, _) = self.profile(x, side);
        dg.cross(&AXIS.cross(x)) + 2.0 * g * AXIS
    }

    pub fn curl_curl_u(&self, x: &Vec3, side: Side) -> Vec3 {
        let (_, dg, h) = self.profile(x, side);
        let w = AXIS.cross(x);
        h * w - h.trace() * w + 3.0 * dg.cross(&AXIS)
    }

    pub fn div_u(&self, _x: &Vec3, side: Side) -> f64 {
        3.0 / self.coeffs.beta(side)
    }

    /// Source `curl(alpha curl u) + beta u`.
    pub fn f(&self, x: &Vec3, side: Side) -> Vec3 {
        self.coeffs.alpha(side) * self.curl_curl_u(x, side) + self.coeffs.beta(side) * self.u(x, side)
    }

    /// Residuals of `[u x n]`, `[beta u . n]`, `[alpha curl u x n]` at a point of the sphere.
    pub fn jump_residuals(&self, x: &Vec3) -> [f64; 3] {
        let n = x.normalize();
        let (up, um) = (self.u(x, Side::Plus), self.u(x, Side::Minus));
        let (cp, cm) = (self.curl_u(x, Side::Plus), self.curl_u(x, Side::Minus));
        let c = &self.coeffs;
        [
            (up - um).cross(&n).norm(),
            (c.beta(Side::Plus) * up - c.beta(Side::Minus) * um).dot(&n).abs(),
            (c.alpha(Side::Plus) * cp - c.alpha(Side::Minus) * cm).cross(&n).norm(),
        ]
    }
}
