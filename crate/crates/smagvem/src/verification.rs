//! Convergence studies, cavity runs and comparisons against reference data.

use smagvem_core::assembly::{DiscreteState, EddyScaling, Smagorinsky};
use smagvem_core::cases::ManufacturedCase;
use smagvem_core::locate::{evaluate_velocity, midline_profiles, CellLocator};
use smagvem_core::mesh::{MeshFamily, MeshKind, PolygonalMesh};
use smagvem_core::norms::{self, ErrorNorms};

use crate::error::{Result, SolverError};
use crate::newton::{newton_solve, InitialGuess, NewtonConfig, NewtonTrace};
use crate::problem::{cavity_setup, manufactured_problem, Problem};
use crate::reference::ReferenceProfile;

/// One level of a convergence study.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub norms: ErrorNorms,
    /// Rates of `(grad, l2, pressure)` against the previous level.
    pub rates: [Option<f64>; 3],
    pub trace: NewtonTrace,
    /// `max_T ‖div u_h‖_T / (1 + |u_h|_{1,h})`.
    pub divergence: f64,
}

/// Scaled divergence defect of a state.
pub fn divergence_defect(problem: &Problem, state: &DiscreteState) -> f64 {
    let max = norms::divergence_norms(&problem.disc, state).into_iter().fold(0.0, f64::max);
    max / (1.0 + norms::broken_h1_seminorm(&problem.disc, state))
}

/// Rates between consecutive reports, filled in place.
pub fn fill_rates(reports: &mut [ErrorReport]) {
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let cols: [Vec<f64>; 3] = [
        reports.iter().map(|r| r.norms.grad).collect(),
        reports.iter().map(|r| r.norms.l2).collect(),
        reports.iter().map(|r| r.norms.pressure).collect(),
    ];
    for (c, col) in cols.iter().enumerate() {
        for (r, rate) in reports.iter_mut().zip(norms::rates(col, &h)) {
            r.rates[c] = rate;
        }
    }
}

/// Solves `case` on `family` meshes with `N` segments per side for every
/// entry of `ns` (increasing), with `h = 1/N`.
pub fn convergence_study(
    case: ManufacturedCase,
    kind: MeshKind,
    ns: &[usize],
    k: usize,
    config: &NewtonConfig,
) -> Result<Vec<ErrorReport>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SolverError::InvalidArgument("mesh sizes must be non-empty and decreasing".into()));
    }
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        let family = MeshFamily { kind, n, ..MeshFamily::usm(n) };
        let mut problem = manufactured_problem(case, family.build()?, k)?;
        let (state, trace) = newton_solve(&mut problem, config, None)?;
        if !trace.converged() {
            return Err(SolverError::NotConverged(format!("k = {k}, N = {n}: {}", trace.outcome.as_str())));
        }
        let e = norms::error_norms(
            &problem.disc,
            &state,
            |p| case.velocity(p),
            |p| case.velocity_gradient(p),
            |p| case.pressure(p),
        );
        out.push(ErrorReport {
            n,
            h: 1.0 / n as f64,
            dofs: problem.n_unknowns(),
            norms: e,
            rates: [None; 3],
            divergence: divergence_defect(&problem, &state),
            trace,
        });
    }
    fill_rates(&mut out);
    Ok(out)
}

/// Newton settings used for the P2P1 study: the Stokes guess is useless at
/// `Re = 10^4` with a body force, so the run ramps up from `Re = 1`.
pub fn manufactured_config(case: &ManufacturedCase, base: &NewtonConfig) -> NewtonConfig {
    let re = case.re();
    if re <= 100.0 || base.initial_guess != InitialGuess::Stokes {
        return base.clone();
    }
    let ramp: Vec<f64> = [1.0, 10.0, 100.0, 1000.0].into_iter().filter(|&r| r < re).collect();
    NewtonConfig { initial_guess: InitialGuess::Continuation, re_ramp: Some(ramp), ..base.clone() }
}

/// Refinement levels of the cavity study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CavityLevel {
    Coarse,
    Medium,
    Fine,
}

impl CavityLevel {
    pub const ALL: [CavityLevel; 3] = [CavityLevel::Coarse, CavityLevel::Medium, CavityLevel::Fine];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Coarse => "coarse",
            Self::Medium => "medium",
            Self::Fine => "fine",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Self::Coarse),
            "medium" => Ok(Self::Medium),
            "fine" => Ok(Self::Fine),
            other => Err(SolverError::InvalidArgument(format!("unknown level `{other}`"))),
        }
    }
}

/// Mesh family at a cavity level: comparable DoF counts across families.
pub fn cavity_mesh(kind: MeshKind, level: CavityLevel) -> MeshFamily {
    let i = level as usize;
    match kind {
        MeshKind::Imh => MeshFamily::imh([22, 28, 40][i]),
        MeshKind::Usm => MeshFamily::usm([31, 38, 54][i]),
        MeshKind::Arm => MeshFamily::arm([31, 38, 54][i]),
    }
}

/// Warm-start ladder ending just below `re`.
pub fn default_ramp(re: f64) -> Vec<f64> {
    let mut ladder = vec![100.0, 400.0, 1000.0];
    ladder.extend((2..=20).map(|i| 1000.0 * i as f64));
    ladder.into_iter().filter(|&r| r < re).collect()
}

/// Cavity Newton settings: the base config, or a continuation along
/// [`default_ramp`] when `ramp` is set.
pub fn cavity_config(re: f64, base: &NewtonConfig, ramp: bool) -> NewtonConfig {
    if ramp {
        NewtonConfig { initial_guess: InitialGuess::Continuation, re_ramp: Some(default_ramp(re)), ..base.clone() }
    } else {
        base.clone()
    }
}

/// A solved cavity run.
pub struct CavityRun {
    pub problem: Problem,
    pub state: DiscreteState,
    pub trace: NewtonTrace,
}

pub fn solve_cavity(
    mesh: PolygonalMesh,
    re: f64,
    k: usize,
    smagorinsky: Option<Smagorinsky>,
    config: &NewtonConfig,
) -> Result<CavityRun> {
    let mut problem = cavity_setup(re, mesh, k, smagorinsky)?;
    let (state, trace) = newton_solve(&mut problem, config, None)?;
    Ok(CavityRun { problem, state, trace })
}

/// Smagorinsky model with the given length scale and `C_S = 0.1`.
pub fn smagorinsky_with(scaling: EddyScaling) -> Smagorinsky {
    Smagorinsky { scaling, ..Smagorinsky::default() }
}

/// Sampled midline velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct Profiles {
    pub ys: Vec<f64>,
    pub ux: Vec<f64>,
    pub xs: Vec<f64>,
    pub uy: Vec<f64>,
}

pub fn sample_profiles(problem: &Problem, state: &DiscreteState, ys: &[f64], xs: &[f64]) -> Result<Profiles> {
    if ys.iter().chain(xs).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(SolverError::InvalidArgument("profile ordinates must lie in [0, 1]".into()));
    }
    let (ux, uy) = midline_profiles(&problem.disc, &problem.mesh, state, ys, xs)?;
    Ok(Profiles { ys: ys.to_vec(), ux, xs: xs.to_vec(), uy })
}

/// Relative ℓ² error of both midline profiles against a reference table,
/// over all its samples jointly.
pub fn reference_error(problem: &Problem, state: &DiscreteState, profile: &ReferenceProfile) -> Result<f64> {
    let p = sample_profiles(problem, state, &profile.ys(), &profile.xs())?;
    let sampled: Vec<f64> = p.ux.into_iter().chain(p.uy).collect();
    Ok(norms::relative_l2(&sampled, &profile.values()))
}

/// Relative L² distance `‖Π0 u_a - Π0 u_b‖ / ‖Π0 u_b‖`, integrated with the
/// quadrature of whichever mesh has fewer cells.
pub fn field_error(a: (&Problem, &DiscreteState), b: (&Problem, &DiscreteState)) -> Result<f64> {
    let a_coarse = a.0.mesh.n_cells() <= b.0.mesh.n_cells();
    let (coarse, fine) = if a_coarse { (a, b) } else { (b, a) };
    let locator = CellLocator::new(&fine.0.mesh);
    let (mut num, mut den) = (0.0, 0.0);
    for (c, o) in coarse.0.disc.ops.iter().enumerate() {
        let coeffs = o.apply(&o.pi_zero, &coarse.0.disc.local_velocity(coarse.1, c));
        for (&x, &w) in o.rule.points.iter().zip(&o.rule.weights) {
            let uc = o.eval_vector(&coeffs, x);
            let uf = evaluate_velocity(&fine.0.disc, &locator, fine.1, x)?;
            let (ua, ub) = if a_coarse { (uc, uf) } else { (uf, uc) };
            num += w * ((ua[0] - ub[0]).powi(2) + (ua[1] - ub[1]).powi(2));
            den += w * (ub[0] * ub[0] + ub[1] * ub[1]);
        }
    }
    if den == 0.0 {
        return Err(SolverError::InvalidArgument("reference field is zero".into()));
    }
    Ok((num / den).sqrt())
}
