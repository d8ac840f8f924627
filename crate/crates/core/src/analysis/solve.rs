//! Preconditioned solve of a reduced Petrov-Galerkin system.

use serde::{Deserialize, Serialize};

use crate::assembly::{ReducedSystem, ScalarWeight, SystemMatrices};
use crate::error::{Error, Result};
use crate::geometry::Discretization;
use crate::solvers::{
    gmres, pcg, AuxiliaryCorrection, CsrMatrix, HxPreconditioner, InterfaceBlock, KrylovOptions, LinearOperator,
    SolveReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrylovMethod {
    Gmres,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HxOptions {
    /// Expanding width of the interface block.
    pub width: usize,
    pub amg_cycles: usize,
    /// Use AMG for the nodal matrices even when they are small enough to factor.
    pub force_amg: bool,
    pub scalar_weight: ScalarWeight,
    /// Drop the nodal corrections and keep only the block smoother.
    pub smoother_only: bool,
}

impl Default for HxOptions {
    fn default() -> Self {
        Self {
            width: 1,
            amg_cycles: 2,
            force_amg: false,
            scalar_weight: ScalarWeight::Beta,
            smoother_only: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSetup {
    pub method: KrylovMethod,
    /// `None` runs the Krylov method unpreconditioned.
    pub hx: Option<HxOptions>,
    pub krylov: KrylovOptions,
}

impl Default for SolverSetup {
    fn default() -> Self {
        Self {
            method: KrylovMethod::Gmres,
            hx: Some(HxOptions::default()),
            krylov: KrylovOptions::default(),
        }
    }
}

/// Solution on all edges plus diagnostics.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub dofs: Vec<f64>,
    pub report: SolveReport,
    /// Size of the exactly inverted interface block (0 without preconditioner).
    pub block_size: usize,
    pub setup_seconds: f64,
}

/// HX preconditioner for `red.matrix` built from the assembled auxiliaries.
pub fn build_hx(
    disc: &Discretization,
    sys: &SystemMatrices,
    red: &ReducedSystem,
    opts: &HxOptions,
) -> Result<HxPreconditioner> {
    let mesh = &disc.mesh;
    let block = InterfaceBlock::build(&red.matrix, mesh, &red.edge_dof, &disc.interface_elements(), opts.width)?;
    if opts.smoother_only {
        return Ok(HxPreconditioner::new(block, None));
    }
    let inner = mesh.interior_nodes();
    let nn = mesh.num_nodes();
    let mut node_map = vec![None; nn];
    for (k, &v) in inner.iter().enumerate() {
        node_map[v] = Some(k);
    }
    let ni = inner.len();
    let vec_map: Vec<Option<usize>> = (0..3 * nn)
        .map(|c| node_map[c % nn].map(|k| (c / nn) * ni + k))
        .collect();
    let pcurl = sys.pcurl.select(&red.free, &vec_map, 3 * ni);
    let grad = sys.grad.select(&red.free, &node_map, ni);
    let vec_block = sys.vector_aux_block().principal_submatrix(&inner);
    let scal = sys.scalar_aux(opts.scalar_weight).principal_submatrix(&inner);
    let aux = AuxiliaryCorrection::new(pcurl, grad, &vec_block, &scal, opts.amg_cycles, opts.force_amg)?;
    Ok(HxPreconditioner::new(block, Some(aux)))
}

/// Solves the reduced system and expands the result to all edges.
pub fn solve_reduced(
    disc: &Discretization,
    sys: &SystemMatrices,
    red: &ReducedSystem,
    setup: &SolverSetup,
) -> Result<SolveOutcome> {
    solve_with_guess(disc, sys, red, setup, None)
}

pub fn solve_with_guess(
    disc: &Discretization,
    sys: &SystemMatrices,
    red: &ReducedSystem,
    setup: &SolverSetup,
    guess: Option<&[f64]>,
) -> Result<SolveOutcome> {
    let start = std::time::Instant::now();
    let pre = setup.hx.as_ref().map(|o| build_hx(disc, sys, red, o)).transpose()?;
    let setup_seconds = start.elapsed().as_secs_f64();
    let block_size = pre.as_ref().map_or(0, |p| p.block.block_size());
    let m: Option<&dyn LinearOperator> = pre.as_ref().map(|p| p as &dyn LinearOperator);
    let (x, report) = run_krylov(&red.matrix, &red.rhs, guess, m, setup);
    if report.residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::Solver(format!(
            "non-finite residual after {} iterations",
            report.iterations
        )));
    }
    Ok(SolveOutcome {
        dofs: red.expand(&x),
        report,
        block_size,
        setup_seconds,
    })
}

pub fn run_krylov(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    m: Option<&dyn LinearOperator>,
    setup: &SolverSetup,
) -> (Vec<f64>, SolveReport) {
    match setup.method {
        KrylovMethod::Gmres => gmres(a, b, x0, m, &setup.krylov),
        KrylovMethod::Cg => pcg(a, b, x0, m, &setup.krylov),
    }
}
