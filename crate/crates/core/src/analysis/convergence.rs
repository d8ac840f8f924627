//! Mesh-refinement study on the sphere benchmark.

use serde::{Deserialize, Serialize};

use super::errors::{compute_errors, ErrorNorms};
use super::manufactured::ManufacturedSolution;
use super::solve::{solve_reduced, SolverSetup};
use crate::assembly::SystemMatrices;
use crate::derham::{ElementBases, Flavor};
use crate::error::Result;
use crate::geometry::{Discretization, Side};
use crate::mesh::{build_background_mesh, BoxDomain};
use crate::solvers::SolveReport;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub errors: ErrorNorms,
    /// Orders against the previous row (`None` on the first row).
    pub order_l2: Option<f64>,
    pub order_hcurl: Option<f64>,
    pub dofs: usize,
    pub interface_elements: usize,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn push(&mut self, n: usize, h: f64, errors: ErrorNorms, dofs: usize, cut: usize, report: SolveReport) {
        let order = |prev: f64, cur: f64, hp: f64| (prev / cur).ln() / (hp / h).ln();
        let (order_l2, order_hcurl) = match self.rows.last() {
            Some(p) => (
                Some(order(p.errors.l2, errors.l2, p.h)),
                Some(order(p.errors.hcurl(), errors.hcurl(), p.h)),
            ),
            None => (None, None),
        };
        self.rows.push(ConvergenceRow {
            n,
            h,
            errors,
            order_l2,
            order_hcurl,
            dofs,
            interface_elements: cut,
            report,
        });
    }

    pub fn header() -> &'static [&'static str] {
        &[
            "N", "h", "l2_error", "curl_error", "hcurl_error", "order_l2", "order_hcurl", "dofs", "interface_elements",
            "iterations", "converged", "final_residual",
        ]
    }

    pub fn records(&self) -> Vec<Vec<String>> {
        let opt = |o: Option<f64>| o.map_or_else(String::new, |v| format!("{v:.4}"));
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    format!("{:.6e}", r.h),
                    format!("{:.6e}", r.errors.l2),
                    format!("{:.6e}", r.errors.curl),
                    format!("{:.6e}", r.errors.hcurl()),
                    opt(r.order_l2),
                    opt(r.order_hcurl),
                    r.dofs.to_string(),
                    r.interface_elements.to_string(),
                    r.report.iterations.to_string(),
                    r.report.converged.to_string(),
                    format!("{:.3e}", r.report.final_residual()),
                ]
            })
            .collect()
    }
}

/// Result of one benchmark solve.
#[derive(Debug, Clone)]
pub struct BenchmarkSolve {
    pub disc: Discretization,
    pub system: SystemMatrices,
    pub dofs: Vec<f64>,
    pub errors: ErrorNorms,
    pub report: SolveReport,
    pub free_dofs: usize,
    pub block_size: usize,
}

/// Assembles and solves the sphere benchmark on an `n^3`-cube mesh of `[-1,1]^3`.
pub fn solve_benchmark(ms: &ManufacturedSolution, n: usize, setup: &SolverSetup) -> Result<BenchmarkSolve> {
    let mesh = build_background_mesh(n, BoxDomain::symmetric_unit())?;
    let disc = Discretization::new(mesh, ms.levelset())?;
    let f = |x: &Vec3, s: Side| ms.f(x, s);
    let u = |x: &Vec3, s: Side| ms.u(x, s);
    let cu = |x: &Vec3, s: Side| ms.curl_u(x, s);
    let system = SystemMatrices::assemble(&disc, &ms.coeffs, &f, &u)?;
    let red = system.reduced();
    let out = solve_reduced(&disc, &system, &red, setup)?;
    let bases = ElementBases::build(&disc, &ms.coeffs, Flavor::Immersed)?;
    let errors = compute_errors(&disc, &bases, &out.dofs, &u, &cu)?;
    Ok(BenchmarkSolve {
        free_dofs: red.dim(),
        disc,
        system,
        dofs: out.dofs,
        errors,
        report: out.report,
        block_size: out.block_size,
    })
}

pub fn run_convergence(ms: &ManufacturedSolution, meshes: &[usize], setup: &SolverSetup) -> Result<ConvergenceTable> {
    let mut table = ConvergenceTable::default();
    for &n in meshes {
        let s = solve_benchmark(ms, n, setup)?;
        table.push(
            n,
            s.disc.mesh.h,
            s.errors,
            s.free_dofs,
            s.disc.interface_elements().len(),
            s.report,
        );
    }
    Ok(table)
}
