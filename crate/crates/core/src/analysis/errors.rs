//! L2 and H(curl) errors of edge-space functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derham::{ElementBases, VectorField};
use crate::error::Result;
use crate::geometry::{Discretization, Side};
use crate::quadrature::{tet_rule, visit_tet};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub curl: f64,
}

impl ErrorNorms {
    pub fn hcurl(&self) -> f64 {
        self.l2.hypot(self.curl)
    }
}

/// Errors of the edge function with global DoFs `dofs`. The discrete function
/// uses the side of each sub-tetrahedron; the exact field uses the exact region.
pub fn compute_errors(
    disc: &Discretization,
    bases: &ElementBases,
    dofs: &[f64],
    exact: &VectorField,
    exact_curl: &VectorField,
) -> Result<ErrorNorms> {
    let m = &disc.mesh;
    let rule = tet_rule(5)?;
    let parts = (0..m.num_tets())
        .into_par_iter()
        .map(|t| {
            let b = bases.basis(disc, t)?;
            let coef: [f64; 6] =
                std::array::from_fn(|le| f64::from(b.edge_signs[le]) * dofs[m.tet_edges[t][le]]);
            let subs: Vec<([Vec3; 4], Side)> = match disc.cut(t) {
                Some(c) => [Side::Plus, Side::Minus]
                    .into_iter()
                    .flat_map(|s| c.sub_tets(s).iter().map(move |p| (*p, s)))
                    .collect(),
                None => vec![(m.tet_vertices(t), disc.element_side(t).unwrap_or(Side::Plus))],
            };
            let (mut e0, mut e1) = (0.0, 0.0);
            for (sub, side) in subs {
                let curl_h: Vec3 = (0..6).map(|i| coef[i] * b.edge[i].eval_curl(side)).sum();
                visit_tet(&sub, rule, |x, w| {
                    let uh: Vec3 = (0..6).map(|i| coef[i] * b.edge[i].eval(x, side)).sum();
                    let s = disc.levelset.side(x);
                    e0 += w * (uh - exact(x, s)).norm_squared();
                    e1 += w * (curl_h - exact_curl(x, s)).norm_squared();
                });
            }
            Ok((e0, e1))
        })
        .collect::<Result<Vec<_>>>()?;
    let (l2, curl) = parts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        curl: curl.sqrt(),
    })
}

/// Per-tet value of an edge function: the mean over the sub-tet centroids.
pub fn cell_averages(disc: &Discretization, bases: &ElementBases, dofs: &[f64]) -> Result<Vec<Vec3>> {
    let m = &disc.mesh;
    (0..m.num_tets())
        .into_par_iter()
        .map(|t| {
            let b = bases.basis(disc, t)?;
            let coef: [f64; 6] =
                std::array::from_fn(|le| f64::from(b.edge_signs[le]) * dofs[m.tet_edges[t][le]]);
            let subs: Vec<([Vec3; 4], Side)> = match disc.cut(t) {
                Some(c) => [Side::Plus, Side::Minus]
                    .into_iter()
                    .flat_map(|s| c.sub_tets(s).iter().map(move |p| (*p, s)))
                    .collect(),
                None => vec![(m.tet_vertices(t), disc.element_side(t).unwrap_or(Side::Plus))],
            };
            let sum: Vec3 = subs
                .iter()
                .map(|(sub, side)| {
                    let c = (sub[0] + sub[1] + sub[2] + sub[3]) / 4.0;
                    (0..6).map(|i| coef[i] * b.edge[i].eval(&c, *side)).sum::<Vec3>()
                })
                .sum();
            Ok(sum / subs.len() as f64)
        })
        .collect()
}
