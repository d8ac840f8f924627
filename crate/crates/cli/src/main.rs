use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ife3d::analysis::convergence::{run_convergence, solve_benchmark};
use ife3d::analysis::errors::cell_averages;
use ife3d::analysis::infsup::{infsup_on_mesh, InfSupOptions};
use ife3d::analysis::solve::{solve_reduced, KrylovMethod};
use ife3d::analysis::timedomain::{run_time_domain, TimeStepper};
use ife3d::assembly::SystemMatrices;
use ife3d::derham::{ElementBases, Flavor};
use ife3d::geometry::{Discretization, InterfaceSpec, Side};
use ife3d::io::config::{Coefficients, Experiment, RunConfig};
use ife3d::io::csv::write_csv;
use ife3d::io::vtk::{write_vtk, CellVectors};
use ife3d::mesh::{build_background_mesh, BoxDomain};
use ife3d::{Error, Vec3};

#[derive(Parser, Debug)]
#[command(name = "ife3d", version, about = "Immersed finite elements for H(curl) interface problems")]
struct Cli {
    /// Worker threads (falls back to IFE3D_THREADS, then 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the background mesh and classify the interface elements.
    Mesh(Common),
    /// Solve the sphere benchmark on the first mesh size.
    Solve(Common),
    /// Refinement study on the sphere benchmark.
    Converge(Common),
    /// Estimate the discrete inf-sup constant.
    Infsup(Common),
    /// Iteration counts for several interface-block widths.
    PrecondBench(Common),
    /// Implicit time stepping with a Gaussian pulse.
    Timedomain(Common),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Shape {
    Sphere,
    Plane,
    Torus,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    interface: Option<Shape>,
    /// Sphere radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Offset of the plane x1 = eps.
    #[arg(long)]
    eps: Option<f64>,
    /// Outside coefficients alpha+ = beta+ = rho, inside 1.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    alpha_plus: Option<f64>,
    #[arg(long)]
    alpha_minus: Option<f64>,
    #[arg(long)]
    beta_plus: Option<f64>,
    #[arg(long)]
    beta_minus: Option<f64>,
    /// Cubes per direction, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    meshes: Option<Vec<i64>>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_it: Option<usize>,
    #[arg(long)]
    restart: Option<usize>,
    /// Interface-block width; a list for precond-bench.
    #[arg(long = "l", value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long)]
    amg_cycles: Option<usize>,
    /// Run the Krylov method without preconditioner.
    #[arg(long)]
    no_precond: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Write VTK files next to the CSV output.
    #[arg(long)]
    vtk: bool,
    /// Time steps (timedomain).
    #[arg(long)]
    steps: Option<usize>,
    /// Cubes per direction (timedomain).
    #[arg(long)]
    n: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Gmres,
    Cg,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) => 2,
        Error::Solver(_) | Error::Singular { .. } => 3,
        Error::Io { .. } => 4,
        _ => 1,
    }
}

fn config_error(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

fn build_config(kind: Experiment, a: &Common) -> Result<RunConfig, Error> {
    let mut c = match &a.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    c.experiment = kind;
    if let Some(o) = &a.out {
        c.output.dir.clone_from(o);
    }
    c.output.vtk |= a.vtk;
    match a.interface {
        Some(Shape::Sphere) => {
            c.interface = InterfaceSpec::Sphere {
                center: [0.0; 3],
                radius: a.radius.unwrap_or(0.6),
            }
        }
        Some(Shape::Plane) => {
            c.interface = InterfaceSpec::Plane {
                point: [a.eps.unwrap_or(0.0), 0.0, 0.0],
                normal: [1.0, 0.0, 0.0],
            }
        }
        Some(Shape::Torus) => c.interface = c.timedomain.interface,
        None => {
            if let (Some(r), InterfaceSpec::Sphere { radius, .. }) = (a.radius, &mut c.interface) {
                *radius = r;
            }
            if let (Some(e), InterfaceSpec::Plane { point, .. }) = (a.eps, &mut c.interface) {
                point[0] = e;
            }
        }
    }
    if let Some(rho) = a.rho {
        c.coefficients = Coefficients::from_rho(rho);
    }
    let k = &mut c.coefficients;
    for (dst, src) in [
        (&mut k.alpha_plus, a.alpha_plus),
        (&mut k.alpha_minus, a.alpha_minus),
        (&mut k.beta_plus, a.beta_plus),
        (&mut k.beta_minus, a.beta_minus),
    ] {
        if let Some(v) = src {
            *dst = v;
        }
    }
    if let Some(ms) = &a.meshes {
        c.meshes = ms
            .iter()
            .enumerate()
            .map(|(i, &n)| usize::try_from(n).map_err(|_| config_error(&format!("meshes[{i}]"), format!("invalid mesh size {n}"))))
            .collect::<Result<_, _>>()?;
    }
    let s = &mut c.solver;
    if let Some(m) = a.method {
        s.method = match m {
            MethodArg::Gmres => KrylovMethod::Gmres,
            MethodArg::Cg => KrylovMethod::Cg,
        };
    }
    s.tol = a.tol.unwrap_or(s.tol);
    s.max_it = a.max_it.unwrap_or(s.max_it);
    s.restart = a.restart.unwrap_or(s.restart);
    s.amg_cycles = a.amg_cycles.unwrap_or(s.amg_cycles);
    if let Some(w) = &a.widths {
        if w.is_empty() {
            return Err(config_error("solver.widths", "empty list"));
        }
        s.width = w[0];
        s.widths.clone_from(w);
    }
    s.preconditioner &= !a.no_precond;
    c.seed = a.seed.unwrap_or(c.seed);
    c.timedomain.steps = a.steps.unwrap_or(c.timedomain.steps);
    c.timedomain.n = a.n.unwrap_or(c.timedomain.n);
    c.validate()?;
    Ok(c)
}

fn threads(flag: Option<usize>) -> Result<usize, Error> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("IFE3D_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| config_error("IFE3D_THREADS", format!("not a thread count: `{v}`")))?,
            Err(_) => 1,
        },
    };
    if n == 0 {
        return Err(config_error("threads", "must be positive"));
    }
    Ok(n)
}

fn out_path(c: &RunConfig, name: &str) -> PathBuf {
    c.output.dir.join(name)
}

fn solve_failed(what: &str) -> Error {
    Error::Solver(format!("{what} did not converge"))
}

fn run_mesh(c: &RunConfig) -> Result<(), Error> {
    for &n in &c.meshes {
        let disc = Discretization::new(build_background_mesh(n, BoxDomain::symmetric_unit())?, c.interface.levelset())?;
        let m = &disc.mesh;
        println!(
            "N={n} nodes={} edges={} faces={} tets={} interface_elements={}",
            m.num_nodes(),
            m.num_edges(),
            m.num_faces(),
            m.num_tets(),
            disc.interface_elements().len()
        );
        let ls = disc.levelset.clone();
        let side: Vec<Vec3> = (0..m.num_tets())
            .map(|t| {
                let v = m.tet_vertices(t);
                let x = (v[0] + v[1] + v[2] + v[3]) / 4.0;
                let g = ls.gradient(&x);
                if disc.cut(t).is_some() { g } else { Vec3::zeros() }
            })
            .collect();
        write_vtk(
            &out_path(c, &format!("mesh_N{n}.vtk")),
            m,
            &[CellVectors { name: "interface_normal", values: &side }],
            &format!("background mesh N={n}"),
        )?;
    }
    Ok(())
}

fn run_solve(c: &RunConfig) -> Result<(), Error> {
    let ms = c.manufactured()?;
    let n = c.meshes[0];
    let s = solve_benchmark(&ms, n, &c.solver.setup(c.solver.width))?;
    println!(
        "N={n} dofs={} iterations={} converged={} residual={:.3e} l2={:.6e} curl={:.6e}",
        s.free_dofs,
        s.report.iterations,
        s.report.converged,
        s.report.final_residual(),
        s.errors.l2,
        s.errors.curl
    );
    let header = ["iteration", "relative_residual"];
    let rows: Vec<Vec<String>> = s
        .report
        .residuals
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i.to_string(), format!("{r:.6e}")])
        .collect();
    write_csv(&out_path(c, "residuals.csv"), &header, &rows)?;
    if c.output.vtk {
        let bases = ElementBases::build(&s.disc, &ms.coeffs, Flavor::Immersed)?;
        let uh = cell_averages(&s.disc, &bases, &s.dofs)?;
        let m = &s.disc.mesh;
        let exact: Vec<Vec3> = (0..m.num_tets())
            .map(|t| {
                let v = m.tet_vertices(t);
                let x = (v[0] + v[1] + v[2] + v[3]) / 4.0;
                ms.u(&x, s.disc.levelset.side(&x))
            })
            .collect();
        write_vtk(
            &out_path(c, "solution.vtk"),
            m,
            &[CellVectors { name: "u_h", values: &uh }, CellVectors { name: "u", values: &exact }],
            "sphere benchmark",
        )?;
    }
    if !s.report.converged {
        return Err(solve_failed("the Krylov solve"));
    }
    Ok(())
}

fn run_converge(c: &RunConfig) -> Result<(), Error> {
    let ms = c.manufactured()?;
    let table = run_convergence(&ms, &c.meshes, &c.solver.setup(c.solver.width))?;
    let fmt = |o: Option<f64>| o.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    for r in &table.rows {
        println!(
            "N={} l2={:.4e} hcurl={:.4e} order_l2={} order_hcurl={} iterations={}",
            r.n,
            r.errors.l2,
            r.errors.hcurl(),
            fmt(r.order_l2),
            fmt(r.order_hcurl),
            r.report.table_cell()
        );
    }
    write_csv(&out_path(c, "convergence.csv"), ife3d::analysis::convergence::ConvergenceTable::header(), &table.records())?;
    if table.rows.iter().any(|r| !r.report.converged) {
        return Err(solve_failed("at least one row"));
    }
    Ok(())
}

fn run_infsup(c: &RunConfig) -> Result<(), Error> {
    let coeffs = c.coefficients.pair()?;
    let opts = InfSupOptions {
        seed: c.seed,
        ..InfSupOptions::default()
    };
    let ls = c.interface.levelset();
    let mut rows = Vec::new();
    for &n in &c.meshes {
        let r = infsup_on_mesh(n, &ls, &coeffs, &opts)?;
        println!("N={n} dim={} eta={:.6e} lambda_min={:.6e} method={:?}", r.dim, r.eta, r.lambda_min, r.method);
        if !r.converged {
            return Err(Error::Solver(format!("eigenvalue iteration stagnated at N={n}")));
        }
        rows.push(vec![
            n.to_string(),
            r.dim.to_string(),
            format!("{:.10e}", r.lambda_min),
            format!("{:.10e}", r.eta),
            format!("{:?}", r.method).to_lowercase(),
            r.steps.to_string(),
        ]);
    }
    write_csv(&out_path(c, "infsup.csv"), &["N", "dim", "lambda_min", "eta", "method", "steps"], &rows)
}

fn run_precond_bench(c: &RunConfig) -> Result<(), Error> {
    let ms = c.manufactured()?;
    let mut header = vec!["N".to_string(), "dofs".to_string()];
    header.extend(c.solver.widths.iter().map(|l| format!("l={l}")));
    let mut rows = Vec::new();
    for &n in &c.meshes {
        let disc = Discretization::new(build_background_mesh(n, BoxDomain::symmetric_unit())?, ms.levelset())?;
        let f = |x: &Vec3, s: Side| ms.f(x, s);
        let u = |x: &Vec3, s: Side| ms.u(x, s);
        let sys = SystemMatrices::assemble(&disc, &ms.coeffs, &f, &u)?;
        let red = sys.reduced();
        let mut row = vec![n.to_string(), red.dim().to_string()];
        let mut line = format!("N={n}");
        for &l in &c.solver.widths {
            let out = solve_reduced(&disc, &sys, &red, &c.solver.setup(l))?;
            line += &format!(" l={l}:{}({:.2}s)", out.report.table_cell(), out.report.seconds + out.setup_seconds);
            row.push(out.report.table_cell());
        }
        println!("{line}");
        rows.push(row);
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&out_path(c, "precond_bench.csv"), &header, &rows)
}

fn run_timedomain(c: &RunConfig) -> Result<(), Error> {
    let stepper = TimeStepper::new(c.timedomain.clone())?;
    let bases = &stepper.immersed;
    let run = run_time_domain(&stepper, &c.solver.setup(c.solver.width), |k, _, rep| {
        println!("step {k} t={:.5} iterations={}", stepper.time(k), rep.iterations);
    })?;
    let rows: Vec<Vec<String>> = run
        .l2_trace
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let its = if k >= 2 { run.reports[k - 2].iterations.to_string() } else { String::new() };
            vec![k.to_string(), format!("{:.6e}", stepper.time(k)), format!("{v:.10e}"), its]
        })
        .collect();
    write_csv(&out_path(c, "timedomain.csv"), &["step", "t", "l2_norm", "iterations"], &rows)?;
    if c.output.vtk {
        for (k, u) in &run.snapshots {
            let vals = cell_averages(&stepper.disc, bases, u)?;
            write_vtk(
                &out_path(c, &format!("timedomain_{k:04}.vtk")),
                &stepper.disc.mesh,
                &[CellVectors { name: "u_h", values: &vals }],
                &format!("step {k}"),
            )?;
        }
    }
    println!("max_norm_ratio={:.4}", run.max_growth());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let n = threads(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let (kind, args) = match &cli.command {
        Command::Mesh(a) => (Experiment::Mesh, a),
        Command::Solve(a) => (Experiment::Solve, a),
        Command::Converge(a) => (Experiment::Converge, a),
        Command::Infsup(a) => (Experiment::Infsup, a),
        Command::PrecondBench(a) => (Experiment::PrecondBench, a),
        Command::Timedomain(a) => (Experiment::Timedomain, a),
    };
    let config = build_config(kind, args)?;
    if args.dump_config {
        println!("{}", config.to_json());
        return Ok(());
    }
    std::fs::create_dir_all(&config.output.dir).map_err(|e| Error::Io {
        path: config.output.dir.clone(),
        source: e,
    })?;
    match kind {
        Experiment::Mesh => run_mesh(&config),
        Experiment::Solve => run_solve(&config),
        Experiment::Converge => run_converge(&config),
        Experiment::Infsup => run_infsup(&config),
        Experiment::PrecondBench => run_precond_bench(&config),
        Experiment::Timedomain => run_timedomain(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
