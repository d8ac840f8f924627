//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::time::Instant;

use ife3d::analysis::condition::estimate_condition;
use ife3d::analysis::convergence::{run_convergence, solve_benchmark};
use ife3d::analysis::infsup::{estimate_infsup, infsup_on_mesh, EigenMethod, InfSupOptions};
use ife3d::analysis::manufactured::ManufacturedSolution;
use ife3d::analysis::solve::{solve_reduced, HxOptions, KrylovMethod, SolverSetup};
use ife3d::analysis::timedomain::{run_time_domain, TimeDomainConfig, TimeStepper};
use ife3d::assembly::{assemble_mass, dirichlet_data, ReducedSystem, SystemMatrices};
use ife3d::derham::{
    complex_check, curl_commutativity, div_commutativity, exactness_check, gradient_commutativity, ElementBases,
    Flavor, SplitMode,
};
use ife3d::geometry::{classify, cut_tet, CutConfig, Discretization, ElementClass, LevelSet, Side};
use ife3d::ife_local::{
    build_jump_maps, dof_edge_integral, dof_face_flux, hdiv_system_matrix, CoefficientPair, ElementView, LocalBasis,
};
use ife3d::mesh::{build_background_mesh, BoxDomain, TetShape};
use ife3d::solvers::{KrylovOptions, LinearOperator};
use ife3d::{Mat3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn trirect() -> [Vec3; 4] {
    [Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()]
}

fn regular() -> [Vec3; 4] {
    let s3 = 3f64.sqrt();
    [
        Vec3::zeros(),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.5, s3 / 2.0, 0.0),
        Vec3::new(0.5, s3 / 6.0, (2.0f64 / 3.0).sqrt()),
    ]
}

fn shape(k: usize) -> ([Vec3; 4], TetShape) {
    if k % 2 == 0 {
        (regular(), TetShape::Regular)
    } else {
        (trirect(), TetShape::Trirectangular)
    }
}

/// Random plane or sphere cut of `verts` that yields an interface element.
fn random_cut(rng: &mut ChaCha8Rng, verts: [Vec3; 4], shape: TetShape, sphere: bool) -> CutConfig {
    let centroid = verts.iter().sum::<Vec3>() / 4.0;
    let jitter = |rng: &mut ChaCha8Rng, s: f64| Vec3::new(rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s));
    loop {
        let phi = if sphere {
            let c = centroid + jitter(rng, 2.0);
            let r = (verts[rng.gen_range(0..4)] - c).norm() * rng.gen_range(0.8..1.2);
            verts.map(|v| (v - c).norm() - r)
        } else {
            let n = jitter(rng, 1.0);
            if n.norm() < 0.1 {
                continue;
            }
            let p = centroid + jitter(rng, 0.3);
            verts.map(|v| (v - p).dot(&n.normalize()))
        };
        if classify(&phi) == ElementClass::Interface {
            if let Ok(c) = cut_tet(0, shape, verts, phi, 1.0) {
                return c;
            }
        }
    }
}

fn random_coeffs(rng: &mut ChaCha8Rng) -> CoefficientPair {
    let e = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-3.0..3.0));
    CoefficientPair::new(e(rng), 1.0, e(rng), 1.0).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = [0.0f64; 3];
    for k in 0..1000 {
        let (verts, sh) = shape(k);
        let cut = random_cut(&mut rng, verts, sh, k % 4 < 2);
        let coeffs = random_coeffs(&mut rng);
        let b = LocalBasis::immersed(&cut, &coeffs).unwrap();
        let view = ElementView::Cut(&cut);
        for i in 0..4 {
            for j in 0..4 {
                let d = if i == j { 1.0 } else { 0.0 };
                worst[0] = worst[0].max((b.nodal[i].eval(&cut.verts[j], cut.signs[j]) - d).abs());
                worst[2] = worst[2].max((dof_face_flux(&b.face[i], &view, j) - d).abs());
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                let d = if i == j { 1.0 } else { 0.0 };
                worst[1] = worst[1].max((dof_edge_integral(&b.edge[i], &view, j) - d).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst.iter().all(|&w| w < 1e-10) && secs < 60.0,
        format!(
            "1000 cuts: nodal {:.1e}, edge {:.1e}, face {:.1e} (< 1e-10), {secs:.1}s (< 60s)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn criterion_2() -> Outcome {
    let verts = regular();
    let cut = cut_tet(0, TetShape::Regular, verts, verts.map(|v| v.x - 0.4), 1.0).unwrap();
    let maps = build_jump_maps(&cut, &CoefficientPair::uniform(1.0, 1.0).unwrap());
    let det_c = hdiv_system_matrix(&cut, &maps, [3, 1, 2]).determinant();
    let oracle = (det_c + 1.0 / 16.0).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut min_rel = f64::INFINITY;
    let mut signs = [0usize; 2];
    for k in 0..100_000 {
        let (verts, sh) = shape(k);
        let cut = random_cut(&mut rng, verts, sh, k % 4 < 2);
        let maps = build_jump_maps(&cut, &random_coeffs(&mut rng));
        let m: Mat3 = hdiv_system_matrix(&cut, &maps, [3, 1, 2]);
        let scale: f64 = (0..3).map(|r| m.row(r).norm()).product();
        let det = m.determinant();
        min_rel = min_rel.min(det.abs() / scale);
        signs[usize::from(det > 0.0)] += 1;
    }
    outcome(
        oracle && min_rel > 1e-10,
        format!(
            "det(M_K) = {det_c:.15} (oracle -0.0625); 1e5 cuts: min |det|/scale {min_rel:.2e} (> 1e-10), negative {} positive {}",
            signs[0], signs[1]
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = [0.0f64; 8];
    let rel = |a: f64, s: f64| a / s.max(1.0);
    for k in 0..1000 {
        let (verts, sh) = shape(k);
        let cut = random_cut(&mut rng, verts, sh, k % 4 < 2);
        let c = random_coeffs(&mut rng);
        let b = LocalBasis::immersed(&cut, &c).unwrap();
        let n = cut.normal;
        let xk = cut.x_k;
        let (ap, am, bp, bm) = (c.alpha_plus, c.alpha_minus, c.beta_plus, c.beta_minus);
        for _ in 0..10 {
            let x = xk + rng.gen_range(-1.0..1.0) * cut.tangent1 + rng.gen_range(-1.0..1.0) * cut.tangent2;
            for f in &b.nodal {
                let (vp, vm) = (f.eval(&x, Side::Plus), f.eval(&x, Side::Minus));
                worst[0] = worst[0].max(rel((vp - vm).abs(), vp.abs()));
                let (gp, gm) = (bp * f.grad.plus.dot(&n), bm * f.grad.minus.dot(&n));
                worst[1] = worst[1].max(rel((gp - gm).abs(), gp.abs().max(gm.abs())));
            }
            for e in &b.edge {
                let (vp, vm) = (e.eval(&x, Side::Plus), e.eval(&x, Side::Minus));
                worst[2] = worst[2].max(rel((vp - vm).cross(&n).norm(), vp.norm()));
                let (cp, cm) = (ap * e.eval_curl(Side::Plus), am * e.eval_curl(Side::Minus));
                worst[3] = worst[3].max(rel((cp - cm).cross(&n).norm(), cp.norm().max(cm.norm())));
            }
            for f in &b.face {
                let (vp, vm) = (f.eval(&x, Side::Plus), f.eval(&x, Side::Minus));
                worst[5] = worst[5].max(rel((vp - vm).dot(&n).abs(), vp.norm()));
            }
        }
        for e in &b.edge {
            let (vp, vm) = (bp * e.eval(&xk, Side::Plus), bm * e.eval(&xk, Side::Minus));
            worst[4] = worst[4].max(rel((vp - vm).dot(&n).abs(), vp.norm().max(vm.norm())));
        }
        for f in &b.face {
            let (vp, vm) = (ap * f.eval(&xk, Side::Plus), am * f.eval(&xk, Side::Minus));
            worst[6] = worst[6].max(rel((vp - vm).cross(&n).norm(), vp.norm().max(vm.norm())));
            // one constant divergence for both sides by construction
            let c = f.eval_div();
            worst[7] = worst[7].max(if c.is_finite() { 0.0 } else { f64::INFINITY });
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max < 1e-10,
        format!(
            "nodal [v] {:.1e} [b dv.n] {:.1e}; edge [vxn] {:.1e} [a curl v xn] {:.1e} [b v.n](x_K) {:.1e}; face [v.n] {:.1e} [a vxn](x_K) {:.1e} [div] {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5], worst[6], worst[7]
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [1, 2, 4] {
        let m = build_background_mesh(n, BoxDomain::symmetric_unit()).unwrap();
        let cr = complex_check(&m).unwrap();
        ok &= cr.curl_grad == 0 && cr.div_curl == 0;
        if n <= 2 {
            let ex = exactness_check(&m).unwrap();
            let want = (n + 1).pow(3) - 1;
            ok &= ex.nullity_curl == want;
            notes.push(format!("N={n} nullity(C)={} (want {want})", ex.nullity_curl));
        }
    }
    let ms = ManufacturedSolution::sphere_benchmark(100.0).unwrap();
    let disc = Discretization::new(build_background_mesh(4, BoxDomain::symmetric_unit()).unwrap(), ms.levelset()).unwrap();
    let r2 = ms.r1 * ms.r1;
    let k = ms.coeffs;
    let p = |x: &Vec3, s: Side| (x.norm_squared() - r2) / k.beta(s);
    let gp = |x: &Vec3, s: Side| 2.0 * x / k.beta(s);
    let u = |x: &Vec3, s: Side| ms.u(x, s);
    let cu = |x: &Vec3, s: Side| ms.curl_u(x, s);
    let v = |x: &Vec3, s: Side| ms.curl_u(x, s) + Vec3::new(x.y * x.y, x.x * x.z, x.z * x.z);
    let dv = |x: &Vec3, _: Side| 2.0 * x.z;
    let g = gradient_commutativity(&disc, &p, &gp, SplitMode::Exact);
    let c = curl_commutativity(&disc, &u, &cu, SplitMode::Exact);
    let d = div_commutativity(&disc, &v, &dv, SplitMode::Exact).unwrap();
    ok &= g < 1e-8 && c < 1e-8 && d < 1e-8;
    outcome(
        ok,
        format!(
            "CG = 0, DC = 0 (N=1,2,4); commutativity N=4 grad {g:.1e} curl {c:.1e} div {d:.1e} (< 1e-8); {}",
            notes.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for rho in [100.0, 1000.0] {
        let ms = ManufacturedSolution::sphere_benchmark(rho).unwrap();
        let t = run_convergence(&ms, &[4, 8, 16], &SolverSetup::default()).unwrap();
        let last = t.rows.last().unwrap();
        let (ol2, oh) = (last.order_l2.unwrap(), last.order_hcurl.unwrap());
        ok &= ol2 >= 0.8 && oh >= 0.8 && t.rows.iter().all(|r| r.report.converged);
        notes.push(format!("rho={rho}: L2 {ol2:.2}, H(curl) {oh:.2}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 600.0;
    outcome(ok, format!("orders on N=8->16 {} (>= 0.8), {secs:.0}s (< 600s)", notes.join("; ")))
}

fn criterion_6() -> Outcome {
    let ms100 = ManufacturedSolution::sphere_benchmark(100.0).unwrap();
    let hx = SolverSetup::default();
    let plain = SolverSetup {
        hx: None,
        krylov: KrylovOptions { max_it: 3000, ..Default::default() },
        ..Default::default()
    };
    let mut its = Vec::new();
    let mut ok = true;
    for n in [8, 16] {
        let s = solve_benchmark(&ms100, n, &hx).unwrap();
        let disc = &s.disc;
        let red = s.system.reduced();
        let unpre = solve_reduced(disc, &s.system, &red, &plain).unwrap();
        ok &= s.report.converged;
        let reduction_ok = unpre.report.iterations >= 5 * s.report.iterations;
        ok &= reduction_ok;
        its.push((n, s.report.iterations, unpre.report.table_cell(), unpre.report.iterations));
    }
    let (a, b) = (its[0].1 as f64, its[1].1 as f64);
    let spread = (a - b).abs() / a.min(b);
    ok &= spread <= 0.30;

    // CG pattern at rho = 1000: l = 0 fails, l >= 1 converges.
    let ms1000 = ManufacturedSolution::sphere_benchmark(1000.0).unwrap();
    let mut cg_cells = Vec::new();
    let mut pattern = true;
    for n in [8, 16] {
        let disc = Discretization::new(build_background_mesh(n, BoxDomain::symmetric_unit()).unwrap(), ms1000.levelset()).unwrap();
        let f = |x: &Vec3, s: Side| ms1000.f(x, s);
        let u = |x: &Vec3, s: Side| ms1000.u(x, s);
        let sys = SystemMatrices::assemble(&disc, &ms1000.coeffs, &f, &u).unwrap();
        let red = sys.reduced();
        let mut row = Vec::new();
        for l in 0..=2 {
            let setup = SolverSetup {
                method: KrylovMethod::Cg,
                hx: Some(HxOptions { width: l, ..Default::default() }),
                ..Default::default()
            };
            let out = solve_reduced(&disc, &sys, &red, &setup).unwrap();
            pattern &= out.report.converged == (l >= 1);
            row.push(format!(
                "l={l}:{}(res {:.0e})",
                out.report.table_cell(),
                out.report.residuals.iter().copied().fold(f64::INFINITY, f64::min)
            ));
        }
        cg_cells.push(format!("N={n} {}", row.join(" ")));
    }
    ok &= pattern;
    outcome(
        ok,
        format!(
            "GMRES+HX l=1: N=8 {} its, N=16 {} its (spread {:.0}%, <= 30%); unpreconditioned N=8 {}, N=16 {} (>= 5x); CG rho=1000 {} [want l=0 --, l>=1 converged]",
            its[0].1,
            its[1].1,
            100.0 * spread,
            its[0].2,
            its[1].2,
            cg_cells.join("; ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let c = CoefficientPair::new(100.0, 1.0, 100.0, 1.0).unwrap();
    let zero = |_: &Vec3, _: Side| Vec3::zeros();
    let mut conds = Vec::new();
    for j in 1..=6 {
        let eps = 10f64.powi(-j);
        let disc = Discretization::new(
            build_background_mesh(6, BoxDomain::symmetric_unit()).unwrap(),
            LevelSet::plane([eps, 0.0, 0.0], [1.0, 0.0, 0.0]),
        )
        .unwrap();
        let sys = SystemMatrices::assemble(&disc, &c, &zero, &zero).unwrap();
        conds.push(estimate_condition(&sys.pg).unwrap().cond);
    }
    let max = conds.iter().copied().fold(0.0, f64::max);
    let min = conds.iter().copied().fold(f64::INFINITY, f64::min);
    let list: Vec<String> = conds.iter().map(|c| format!("{c:.0}")).collect();
    outcome(
        max / min <= 10.0 && min.is_finite(),
        format!("N=6, eps=1e-1..1e-6: cond {} ; max/min {:.3} (<= 10)", list.join(" "), max / min),
    )
}

fn criterion_8() -> Outcome {
    let ls = LevelSet::sphere([0.0; 3], 0.6);
    let assignments = [(200.0, 1.0, 100.0, 1.0), (1.0, 200.0, 1.0, 100.0), (200.0, 1.0, 1.0, 100.0), (1.0, 200.0, 100.0, 1.0)];
    let mut ok = true;
    let mut primary = Vec::new();
    let mut others = Vec::new();
    for (idx, &(bp, bm, ap, am)) in assignments.iter().enumerate() {
        let c = CoefficientPair::new(ap, am, bp, bm).unwrap();
        let etas: Vec<f64> = [6, 8, 10]
            .iter()
            .map(|&n| infsup_on_mesh(n, &ls, &c, &InfSupOptions::default()).unwrap().eta)
            .collect();
        let max = etas.iter().copied().fold(0.0, f64::max);
        let min = etas.iter().copied().fold(f64::INFINITY, f64::min);
        let text = format!("(b+ {bp}, b- {bm}, a+ {ap}, a- {am}) eta {:.3} {:.3} {:.3}", etas[0], etas[1], etas[2]);
        if idx == 0 {
            ok &= min > 0.01 && max / min < 3.0;
            primary.push(format!("{text}, max/min {:.2}", max / min));
        } else {
            others.push(text);
        }
    }
    // dense vs Lanczos on small systems
    let mut agree = 0.0f64;
    for n in [3, 4] {
        let disc = Discretization::new(build_background_mesh(n, BoxDomain::symmetric_unit()).unwrap(), ls.clone()).unwrap();
        let c = CoefficientPair::new(100.0, 1.0, 200.0, 1.0).unwrap();
        let zero = |_: &Vec3, _: Side| Vec3::zeros();
        let sys = SystemMatrices::assemble(&disc, &c, &zero, &zero).unwrap();
        let red = sys.reduced();
        if red.dim() > 500 {
            continue;
        }
        let (fe, ife) = (red.restrict(&sys.fe), red.restrict(&sys.ife));
        let force = |m| InfSupOptions { force: Some(m), ..Default::default() };
        let d = estimate_infsup(&red.matrix, &fe, &ife, &force(EigenMethod::Dense)).unwrap();
        let l = estimate_infsup(&red.matrix, &fe, &ife, &force(EigenMethod::Lanczos)).unwrap();
        agree = agree.max((d.lambda_min - l.lambda_min).abs());
    }
    ok &= agree < 1e-6;
    println!("    info: other assignments: {}", others.join("; "));
    outcome(
        ok,
        format!("{} (> 0.01, < 3); dense vs Lanczos |d lambda| {agree:.1e} (< 1e-6)", primary.join("")),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let cfg = TimeDomainConfig::torus_default();
    let stepper = TimeStepper::new(cfg.clone()).unwrap();
    let setup = SolverSetup::default();
    let mut u2 = Vec::new();
    let run = match run_time_domain(&stepper, &setup, |k, u, _| {
        if k == 2 {
            u2 = u.to_vec();
        }
    }) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run aborted: {e}")),
    };
    let completed = run.l2_trace.len() == cfg.steps + 1;
    let growth = run.max_growth();
    let bounded = growth.is_finite() && growth <= 5.0;

    // One-shot: assemble the stationary system of step 2 from scratch and
    // solve it independently of the stepper.
    let tau = cfg.tau;
    let k = CoefficientPair::new(
        1.0 / cfg.plus.mu,
        1.0 / cfg.minus.mu,
        cfg.plus.eps / (tau * tau) + cfg.plus.sigma / tau,
        cfg.minus.eps / (tau * tau) + cfg.minus.sigma / tau,
    )
    .unwrap();
    let disc = Discretization::new(build_background_mesh(cfg.n, BoxDomain::symmetric_unit()).unwrap(), cfg.interface.levelset()).unwrap();
    let zero = |_: &Vec3, _: Side| Vec3::zeros();
    let sys = SystemMatrices::assemble(&disc, &k, &zero, &zero).unwrap();
    let im = ElementBases::build(&disc, &k, Flavor::Immersed).unwrap();
    let st = ElementBases::build(&disc, &k, Flavor::Standard).unwrap();
    let me = assemble_mass(&disc, cfg.plus.eps, cfg.minus.eps, &im, &st).unwrap();
    let msig = assemble_mass(&disc, cfg.plus.sigma, cfg.minus.sigma, &im, &st).unwrap();
    let (u0, u1) = (stepper.initial_state(0), stepper.initial_state(1));
    let lag: Vec<f64> = u1.iter().zip(&u0).map(|(a, b)| 2.0 * a - b).collect();
    let (a, b) = (me.apply_vec(&lag), msig.apply_vec(&u1));
    let rhs: Vec<f64> = a.iter().zip(&b).map(|(a, b)| a / (tau * tau) + b / tau).collect();
    let fixed = dirichlet_data(&disc, &|x: &Vec3, _| cfg.boundary_at(x, 2.0 * tau));
    let red = ReducedSystem::new(&sys.pg, &rhs, &fixed);
    let one_shot = solve_reduced(&disc, &sys, &red, &setup).unwrap();
    let x: Vec<f64> = red.free.iter().map(|&e| u2[e]).collect();
    let res = {
        let ax = red.matrix.apply_vec(&x);
        let num: f64 = ax.iter().zip(&red.rhs).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        num / red.rhs.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let diff = {
        let num: f64 = u2.iter().zip(&one_shot.dofs).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        num / one_shot.dofs.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let tol = setup.krylov.tol;
    let step_ok = res <= tol && diff <= 100.0 * tol;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        completed && bounded && step_ok,
        format!(
            "torus N={} {} steps: completed {completed}, |u^n| {:.3} -> {:.3}, max growth {growth:.4} (<= 5); step 2 vs one-shot: residual {res:.1e} (<= tol {tol:.0e}), rel diff {diff:.1e}; {secs:.0}s",
            cfg.n,
            cfg.steps,
            run.l2_trace[0],
            run.l2_trace.last().unwrap()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("basis duality", criterion_1),
        ("M_K determinant", criterion_2),
        ("jump conditions", criterion_3),
        ("de Rham complex", criterion_4),
        ("convergence", criterion_5),
        ("preconditioner", criterion_6),
        ("conditioning", criterion_7),
        ("inf-sup", criterion_8),
        ("time domain", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} [{tag}] {name}: {} ({:.1}s)", i + 1, o.detail, t.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
