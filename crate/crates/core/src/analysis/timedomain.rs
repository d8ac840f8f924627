//! Implicit time stepping for the damped Maxwell system
//! `eps u'' + sigma u' + curl(mu^-1 curl u) = 0` with a Gaussian pulse.
//!
//! With backward differences every step is a stationary interface problem
//! with `alpha = 1/mu` and `beta = eps/tau^2 + sigma/tau`; the immersed trial
//! space is therefore fixed and the matrix and preconditioner are built once.

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_mass, ReducedSystem, SystemMatrices};
use crate::derham::{interpolate_edges, ElementBases, Flavor, SplitMode};
use crate::error::{Error, Result};
use crate::geometry::{Discretization, InterfaceSpec, Side};
use crate::ife_local::CoefficientPair;
use crate::mesh::{build_background_mesh, BoxDomain};
use crate::solvers::{CsrMatrix, LinearOperator, SolveReport};
use crate::Vec3;

use super::solve::{build_hx, run_krylov, SolverSetup};

/// `exp(-b (a (x1 - z0) - omega t)^2) e2` with `a = omega sqrt(eps+ mu+)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub b: f64,
    pub omega: f64,
    pub z0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    pub eps: f64,
    pub sigma: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeDomainConfig {
    pub n: usize,
    pub interface: InterfaceSpec,
    pub plus: Medium,
    pub minus: Medium,
    pub tau: f64,
    pub steps: usize,
    pub pulse: Pulse,
    /// Keep every k-th state (0 keeps only the last one).
    pub snapshot_every: usize,
}

impl Default for TimeDomainConfig {
    fn default() -> Self {
        Self::torus_default()
    }
}

impl TimeDomainConfig {
    /// Torus inside `[-1,1]^3` with a pulse entering from the `x1 = -1` side.
    pub fn torus_default() -> Self {
        Self {
            n: 16,
            interface: InterfaceSpec::Torus {
                center: [0.0, 0.0, -0.3],
                minor: 0.2,
                major: std::f64::consts::PI / 5.0,
            },
            plus: Medium {
                eps: 0.05,
                sigma: 0.1,
                mu: 4.0 * std::f64::consts::PI,
            },
            minus: Medium {
                eps: 0.1,
                sigma: 1.0,
                mu: 12.0 * std::f64::consts::PI,
            },
            tau: 1.5 / 128.0,
            steps: 32,
            pulse: Pulse {
                b: 1.0,
                omega: 2.0 * std::f64::consts::PI,
                z0: -0.7,
            },
            snapshot_every: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.steps < 2 {
            return bad(format!("steps must be at least 2, got {}", self.steps));
        }
        for (name, m) in [("plus", &self.plus), ("minus", &self.minus)] {
            if !(m.eps > 0.0 && m.mu > 0.0 && m.sigma >= 0.0) {
                return bad(format!("{name} medium needs eps > 0, mu > 0, sigma >= 0"));
            }
        }
        self.interface.validate()
    }

    pub fn medium(&self, side: Side) -> &Medium {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// `alpha = 1/mu`, `beta = eps/tau^2 + sigma/tau` on each side.
    pub fn coefficients(&self) -> Result<CoefficientPair> {
        let ab = |m: &Medium| (1.0 / m.mu, m.eps / (self.tau * self.tau) + m.sigma / self.tau);
        let (ap, bp) = ab(&self.plus);
        let (am, bm) = ab(&self.minus);
        CoefficientPair::new(ap, am, bp, bm)
    }

    pub fn pulse_at(&self, x: &Vec3, t: f64) -> Vec3 {
        let p = &self.pulse;
        let a = p.omega * (self.plus.eps * self.plus.mu).sqrt();
        let s = a * (x[0] - p.z0) - p.omega * t;
        Vec3::new(0.0, (-p.b * s * s).exp(), 0.0)
    }

    /// Boundary trace: the pulse, except zero on the faces `x1 = +-1`.
    pub fn boundary_at(&self, x: &Vec3, t: f64) -> Vec3 {
        if (x[0].abs() - 1.0).abs() < 1e-12 {
            Vec3::zeros()
        } else {
            self.pulse_at(x, t)
        }
    }
}

/// Fixed-in-time part of the scheme.
pub struct TimeStepper {
    pub config: TimeDomainConfig,
    pub disc: Discretization,
    pub coeffs: CoefficientPair,
    pub system: SystemMatrices,
    pub immersed: ElementBases,
    /// `(eps u, v)` and `(sigma u, v)`, immersed trial against standard test.
    pub mass_eps: CsrMatrix,
    pub mass_sigma: CsrMatrix,
    /// Unit-weight immersed mass matrix for the discrete L2 norm.
    pub mass_l2: CsrMatrix,
}

impl TimeStepper {
    pub fn new(config: TimeDomainConfig) -> Result<Self> {
        config.validate()?;
        let mesh = build_background_mesh(config.n, BoxDomain::symmetric_unit())?;
        let disc = Discretization::new(mesh, config.interface.levelset())?;
        let coeffs = config.coefficients()?;
        let zero = |_: &Vec3, _: Side| Vec3::zeros();
        let system = SystemMatrices::assemble(&disc, &coeffs, &zero, &zero)?;
        let immersed = ElementBases::build(&disc, &coeffs, Flavor::Immersed)?;
        let standard = ElementBases::build(&disc, &coeffs, Flavor::Standard)?;
        let (p, m) = (&config.plus, &config.minus);
        let mass_eps = assemble_mass(&disc, p.eps, m.eps, &immersed, &standard)?;
        let mass_sigma = assemble_mass(&disc, p.sigma, m.sigma, &immersed, &standard)?;
        let mass_l2 = assemble_mass(&disc, 1.0, 1.0, &immersed, &immersed)?;
        Ok(Self {
            config,
            disc,
            coeffs,
            system,
            immersed,
            mass_eps,
            mass_sigma,
            mass_l2,
        })
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.config.tau
    }

    /// Edge interpolant of the pulse at step `k`.
    pub fn initial_state(&self, step: usize) -> Vec<f64> {
        let t = self.time(step);
        interpolate_edges(&self.disc, &|x: &Vec3, _| self.config.pulse_at(x, t), SplitMode::Discrete)
    }

    /// Load vector of step `n` from the two previous states.
    pub fn rhs(&self, prev: &[f64], prev2: &[f64]) -> Vec<f64> {
        let tau = self.config.tau;
        let mut lag: Vec<f64> = prev.iter().zip(prev2).map(|(a, b)| 2.0 * a - b).collect();
        let e = self.mass_eps.apply_vec(&lag);
        self.mass_sigma.matvec(prev, &mut lag);
        e.iter().zip(&lag).map(|(e, s)| e / (tau * tau) + s / tau).collect()
    }

    /// Reduced stationary system solved at step `n`.
    pub fn step_system(&self, step: usize, prev: &[f64], prev2: &[f64]) -> ReducedSystem {
        let t = self.time(step);
        let fixed = crate::assembly::dirichlet_data(&self.disc, &|x: &Vec3, _| self.config.boundary_at(x, t));
        ReducedSystem::new(&self.system.pg, &self.rhs(prev, prev2), &fixed)
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        let mu = self.mass_l2.apply_vec(u);
        u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct TimeDomainRun {
    /// `(step, edge DoFs)` of the kept states.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    /// Discrete L2 norm of every state, steps `0..=M`.
    pub l2_trace: Vec<f64>,
    pub reports: Vec<SolveReport>,
}

impl TimeDomainRun {
    pub fn max_growth(&self) -> f64 {
        let u0 = self.l2_trace.first().copied().unwrap_or(0.0);
        self.l2_trace.iter().copied().fold(0.0, f64::max) / u0
    }
}

/// Runs all steps. `on_step` sees each new state (for progress output).
pub fn run_time_domain(
    stepper: &TimeStepper,
    setup: &SolverSetup,
    mut on_step: impl FnMut(usize, &[f64], &SolveReport),
) -> Result<TimeDomainRun> {
    let cfg = &stepper.config;
    let mut prev2 = stepper.initial_state(0);
    let mut prev = stepper.initial_state(1);
    let keep = |k: usize| cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0;
    let mut snapshots: Vec<(usize, Vec<f64>)> = [(0, &prev2), (1, &prev)]
        .into_iter()
        .filter(|(k, _)| keep(*k))
        .map(|(k, u)| (k, u.clone()))
        .collect();
    let mut l2_trace = vec![stepper.l2_norm(&prev2), stepper.l2_norm(&prev)];
    let mut reports = Vec::new();
    let first = stepper.step_system(2, &prev, &prev2);
    let pre = setup
        .hx
        .as_ref()
        .map(|o| build_hx(&stepper.disc, &stepper.system, &first, o))
        .transpose()?;
    let m: Option<&dyn LinearOperator> = pre.as_ref().map(|p| p as &dyn LinearOperator);
    let mut red = Some(first);
    for k in 2..=cfg.steps {
        let sys = match red.take() {
            Some(r) => r,
            None => stepper.step_system(k, &prev, &prev2),
        };
        let guess: Vec<f64> = sys.free.iter().map(|&e| prev[e]).collect();
        let (x, report) = run_krylov(&sys.matrix, &sys.rhs, Some(&guess), m, setup);
        if !report.converged {
            return Err(Error::Solver(format!(
                "time step {k}: no convergence after {} iterations (residual {:.3e})",
                report.iterations,
                report.final_residual()
            )));
        }
        let u = sys.expand(&x);
        l2_trace.push(stepper.l2_norm(&u));
        on_step(k, &u, &report);
        reports.push(report);
        if keep(k) {
            snapshots.push((k, u.clone()));
        }
        prev2 = std::mem::replace(&mut prev, u);
    }
    if cfg.snapshot_every == 0 {
        snapshots.push((cfg.steps, prev));
    }
    Ok(TimeDomainRun {
        snapshots,
        l2_trace,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{KrylovOptions, ProfileLu};

    fn small() -> TimeDomainConfig {
        TimeDomainConfig {
            n: 4,
            steps: 3,
            snapshot_every: 1,
            ..TimeDomainConfig::torus_default()
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let mut cfg = small();
        cfg.pulse.b = 1e6;
        cfg.pulse.z0 = 50.0;
        let st = TimeStepper::new(cfg).unwrap();
        let run = run_time_domain(&st, &SolverSetup::default(), |_, _, _| {}).unwrap();
        assert!(run.l2_trace.iter().all(|&v| v == 0.0));
        assert!(run.snapshots.iter().all(|(_, u)| u.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn step_matches_direct_solve() {
        let st = TimeStepper::new(small()).unwrap();
        let setup = SolverSetup {
            krylov: KrylovOptions { tol: 1e-12, ..Default::default() },
            ..Default::default()
        };
        let run = run_time_domain(&st, &setup, |_, _, _| {}).unwrap();
        let (u0, u1) = (st.initial_state(0), st.initial_state(1));
        let red = st.step_system(2, &u1, &u0);
        let direct = red.expand(&ProfileLu::factor(&red.matrix).unwrap().solve(&red.rhs));
        let stepped = &run.snapshots.iter().find(|(k, _)| *k == 2).unwrap().1;
        let scale = direct.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = stepped.iter().zip(&direct).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(diff <= 1e-8 * scale, "diff {diff:e} scale {scale:e}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = small();
        cfg.tau = 0.0;
        assert!(TimeStepper::new(cfg).is_err());
        let mut cfg = small();
        cfg.steps = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn boundary_is_zero_on_x1_faces() {
        let cfg = small();
        assert_eq!(cfg.boundary_at(&Vec3::new(-1.0, 0.2, 0.3), 0.0), Vec3::zeros());
        assert!(cfg.boundary_at(&Vec3::new(-0.7, 1.0, 0.3), 0.0)[1] > 0.99);
    }
}
