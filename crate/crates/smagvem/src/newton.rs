//! Newton iteration on the coupled velocity-pressure system.

use smagvem_core::assembly::DiscreteState;

use crate::error::{Result, SolverError};
use crate::linsolve::{linear_solve, norm};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    /// Zero interior velocity with the boundary data.
    Zero,
    /// One linear Stokes solve from the zero state.
    Stokes,
    /// Caller-provided state.
    Supplied,
    /// Warm start along `re_ramp`, each entry solved from the previous one.
    Continuation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on the Euclidean norm of the residual.
    pub epsilon: f64,
    pub max_iters: usize,
    pub initial_guess: InitialGuess,
    /// Failure once the residual exceeds this factor times the initial one.
    pub divergence_guard: f64,
    /// Failure after this many consecutive residual increases.
    pub growth_limit: usize,
    pub re_ramp: Option<Vec<f64>>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-10,
            max_iters: 50,
            initial_guess: InitialGuess::Stokes,
            divergence_guard: 1e6,
            growth_limit: 3,
            re_ramp: None,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(SolverError::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(SolverError::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.divergence_guard > 1.0) || self.growth_limit == 0 {
            return Err(SolverError::InvalidArgument("divergence guard must exceed 1 and growth limit be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Converged,
    Diverged,
    MaxIters,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::Diverged => "diverged",
            Outcome::MaxIters => "max_iters",
        }
    }
}

/// Residual norms `‖R(U^n)‖`, starting with the initial guess.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonTrace {
    pub residuals: Vec<f64>,
    pub outcome: Outcome,
}

impl NewtonTrace {
    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }

    /// Number of Newton updates performed.
    pub fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }
}

/// Linear Stokes solution with the problem's boundary data and forcing.
pub fn stokes_guess(problem: &Problem) -> Result<DiscreteState> {
    let mut state = problem.boundary_state()?;
    let sys = problem.assemble(&state, &problem.physics.linearized(), true)?;
    let delta = linear_solve(&sys)?;
    problem.disc.update(&mut state, &delta, 1.0);
    Ok(state)
}

/// Newton's method from the configured initial guess. On failure the best
/// iterate seen is returned together with a non-converged trace.
pub fn newton_solve(
    problem: &mut Problem,
    config: &NewtonConfig,
    supplied: Option<DiscreteState>,
) -> Result<(DiscreteState, NewtonTrace)> {
    config.validate()?;
    let start = match config.initial_guess {
        InitialGuess::Zero => problem.boundary_state()?,
        InitialGuess::Stokes => stokes_guess(problem)?,
        InitialGuess::Supplied => {
            let mut s = supplied.ok_or_else(|| SolverError::InvalidArgument("no initial state supplied".into()))?;
            if s.velocity.len() != problem.disc.dofs.n_velocity || s.pressure.len() != problem.disc.dofs.n_pressure {
                return Err(SolverError::InvalidArgument("supplied state does not match the discretization".into()));
            }
            problem.disc.apply_dirichlet(&mut s, &problem.boundary)?;
            s
        }
        InitialGuess::Continuation => {
            let target = problem.re();
            let mut ramp: Vec<f64> = config.re_ramp.clone().unwrap_or_default();
            ramp.retain(|&r| r < target);
            ramp.push(target);
            let inner = NewtonConfig { initial_guess: InitialGuess::Stokes, ..config.clone() };
            let (state, mut traces) = continuation_ramp(problem, &ramp, &inner)?;
            return Ok((state, traces.pop().map(|(_, t)| t).expect("ramp is non-empty")));
        }
    };
    iterate(problem, config, start)
}

fn iterate(problem: &Problem, config: &NewtonConfig, mut state: DiscreteState) -> Result<(DiscreteState, NewtonTrace)> {
    let mut residuals = Vec::new();
    let mut best = (f64::INFINITY, state.clone());
    let mut increases = 0;
    let outcome = loop {
        let it = residuals.len();
        let sys = problem
            .assemble(&state, &problem.physics, true)
            .map_err(|e| SolverError::Newton { iteration: it, source: Box::new(e) })?;
        let r = norm(&sys.residual);
        residuals.push(r);
        if !r.is_finite() || !state.is_finite() {
            break Outcome::Diverged;
        }
        if r < best.0 {
            best = (r, state.clone());
        }
        if r <= config.epsilon {
            break Outcome::Converged;
        }
        if it > 0 {
            increases = if r > residuals[it - 1] { increases + 1 } else { 0 };
            if increases >= config.growth_limit || r > config.divergence_guard * residuals[0] {
                break Outcome::Diverged;
            }
        }
        if it >= config.max_iters {
            break Outcome::MaxIters;
        }
        let delta = linear_solve(&sys).map_err(|e| SolverError::Newton { iteration: it, source: Box::new(e) })?;
        problem.disc.update(&mut state, &delta, 1.0);
    };
    let state = if outcome == Outcome::Converged { state } else { best.1 };
    Ok((state, NewtonTrace { residuals, outcome }))
}

/// Solves at each Reynolds number of `re_list` in turn, warm-starting from
/// the previous solution. The problem is left at the last Reynolds number
/// attempted; a non-converged step stops the ramp.
pub fn continuation_ramp(
    problem: &mut Problem,
    re_list: &[f64],
    config: &NewtonConfig,
) -> Result<(DiscreteState, Vec<(f64, NewtonTrace)>)> {
    if re_list.is_empty() {
        return Err(SolverError::InvalidArgument("empty Reynolds ramp".into()));
    }
    if re_list.windows(2).any(|w| !(w[0] < w[1])) || re_list.iter().any(|r| !(*r > 0.0)) {
        return Err(SolverError::InvalidArgument("Reynolds ramp must be positive and increasing".into()));
    }
    let mut traces = Vec::with_capacity(re_list.len());
    let mut state: Option<DiscreteState> = None;
    for (i, &re) in re_list.iter().enumerate() {
        problem.set_re(re);
        let cfg = if i == 0 {
            NewtonConfig { re_ramp: None, ..config.clone() }
        } else {
            NewtonConfig { initial_guess: InitialGuess::Supplied, re_ramp: None, ..config.clone() }
        };
        let (s, trace) = newton_solve(problem, &cfg, state.take())
            .map_err(|e| SolverError::Continuation { re, source: Box::new(e) })?;
        let ok = trace.converged();
        traces.push((re, trace));
        state = Some(s);
        if !ok {
            break;
        }
    }
    Ok((state.expect("at least one step"), traces))
}
