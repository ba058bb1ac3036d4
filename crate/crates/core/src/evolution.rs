//! The analytic phase-covariant map and an independent master-equation
//! integrator used to check it.
//!
//! The map is parametrized by four integrated kernels
//!
//! ```text
//!     Γ(t) = ½∫(γ₁+γ₂),   Γ̃(t) = ∫γ₃,   G(t) = ½∫e^{Γ(τ)}γ₂(τ)dτ,   Ω(t) = ∫2ω
//! ```
//!
//! and acts as `p1 ↦ e^{-Γ}(G + p1)`, `α ↦ α e^{iΩ − Γ/2 − Γ̃}`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use thiserror::Error;

use crate::conditions::{DynamicsClass, Orientation};
use crate::par::{self, Execution};
use crate::rates::{RateError, RateModel, RateSample};
use crate::state::{QubitState, StateError};

/// Tolerance on the output state of [`apply_map`] before it is declared non-physical.
pub const MAP_STATE_TOL: f64 = 1e-9;
/// Default tolerance of [`cp_check`].
pub const CP_TOL: f64 = 1e-9;
/// Drift in trace, hermiticity or positivity at which [`ode_evolve`] aborts.
pub const ODE_ABORT_TOL: f64 = 1e-6;
/// The step must satisfy `h ≤ STEP_GUARD / max|rate|`.
pub const STEP_GUARD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("time grid: {0}")]
    Grid(&'static str),
    #[error("step h = {h} too large at t = {t}: rates reach {max_rate}, requiring h <= {limit}")]
    StepTooLarge {
        h: f64,
        t: f64,
        max_rate: f64,
        limit: f64,
    },
    #[error("map is not physical at t = {t}: {source}")]
    NonPhysical {
        t: f64,
        #[source]
        source: StateError,
    },
    #[error("master-equation integration left the state space at t = {t}: {what} = {value:e}")]
    OdeDiverged {
        t: f64,
        what: &'static str,
        value: f64,
    },
    #[error("stationary state needs kappa in [0, 1], got {0}")]
    KappaOutOfRange(f64),
}

/// Uniform grid `t_k = k·t_max/steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self, EvolutionError> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(EvolutionError::Grid("t_max must be finite and positive"));
        }
        if steps < 2 {
            return Err(EvolutionError::Grid("at least two steps are required"));
        }
        Ok(Self { t_max, steps })
    }

    /// Grid with step `h` covering `[0, t_max]` (t_max rounded to a whole number of steps).
    pub fn with_step(t_max: f64, h: f64) -> Result<Self, EvolutionError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(EvolutionError::Grid("step must be finite and positive"));
        }
        Self::new(t_max, (t_max / h).round().max(1.0) as usize)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_max
        } else {
            self.t_max * k as f64 / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Grid points and midpoints, `t = j·h/2` for `j = 0..=2·steps`.
    pub fn half_times(&self) -> Vec<f64> {
        let n = 2 * self.steps;
        (0..=n)
            .map(|j| {
                if j == n {
                    self.t_max
                } else {
                    self.t_max * j as f64 / n as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kernels {
    pub t: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub g: f64,
    pub omega: f64,
}

impl Kernels {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Population contraction `e^{-Γ}`.
    pub fn population_factor(&self) -> f64 {
        (-self.gamma).exp()
    }

    /// Coherence factor `e^{iΩ − Γ/2 − Γ̃}`.
    pub fn coherence_factor(&self) -> Complex64 {
        Complex64::from_polar((-0.5 * self.gamma - self.gamma_tilde).exp(), self.omega)
    }

    /// Population of the image of the zero-population state, `e^{-Γ}G`.
    pub fn pumped_population(&self) -> f64 {
        (-self.gamma).exp() * self.g
    }
}

/// Rates at every grid point and midpoint, and the kernels at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub grid: TimeGrid,
    /// `2·steps + 1` samples at `t = j·h/2`.
    pub half_samples: Vec<RateSample>,
    pub kernels: Vec<Kernels>,
}

impl KernelTable {
    /// Rate sample at grid point `k`.
    pub fn sample(&self, k: usize) -> &RateSample {
        &self.half_samples[2 * k]
    }

    pub fn samples(&self) -> Vec<RateSample> {
        self.half_samples.iter().step_by(2).copied().collect()
    }
}

/// Evaluates the model on the grid and accumulates the kernels.
///
/// Γ, Γ̃, Ω and G are advanced together by classical RK4 using the rate
/// samples at the step ends and midpoint; `dG/dt = ½e^{Γ}γ₂` couples G to Γ.
pub fn integrate_kernels(
    model: &RateModel,
    grid: &TimeGrid,
    exec: Execution,
) -> Result<KernelTable, EvolutionError> {
    if let Some(&pole) = model.poles_in(0.0, grid.t_max()).first() {
        return Err(RateError::Pole {
            t: pole,
            nearest_pole: pole,
        }
        .into());
    }
    let half_samples = model.eval_many(&grid.half_times(), exec)?;
    integrate_samples(half_samples, grid)
}

/// Kernel accumulation from precomputed samples at `t = j·h/2`.
pub fn integrate_samples(
    half_samples: Vec<RateSample>,
    grid: &TimeGrid,
) -> Result<KernelTable, EvolutionError> {
    if half_samples.len() != 2 * grid.steps() + 1 {
        return Err(EvolutionError::Grid("sample count does not match the grid"));
    }
    let h = grid.h();
    check_step(&half_samples, h)?;
    let mut kernels = Vec::with_capacity(grid.len());
    let mut k = Kernels::identity();
    kernels.push(k);
    for n in 0..grid.steps() {
        let s0 = &half_samples[2 * n];
        let sm = &half_samples[2 * n + 1];
        let s1 = &half_samples[2 * n + 2];
        let dg0 = 0.5 * s0.gamma_prime();
        let dgm = 0.5 * sm.gamma_prime();
        let dg1 = 0.5 * s1.gamma_prime();
        // the Γ stages are exact samples, so G sees Γ at t, t+h/2 (twice) and t+h
        let gamma_mid = k.gamma + 0.5 * h * dg0;
        let gamma_mid2 = k.gamma + 0.5 * h * dgm;
        let gamma_end = k.gamma + h * dgm;
        let g1 = 0.5 * k.gamma.exp() * s0.gamma2;
        let g2 = 0.5 * gamma_mid.exp() * sm.gamma2;
        let g3 = 0.5 * gamma_mid2.exp() * sm.gamma2;
        let g4 = 0.5 * gamma_end.exp() * s1.gamma2;
        let simpson = |a: f64, m: f64, b: f64| h / 6.0 * (a + 4.0 * m + b);
        k = Kernels {
            t: grid.time(n + 1),
            gamma: k.gamma + simpson(dg0, dgm, dg1),
            gamma_tilde: k.gamma_tilde + simpson(s0.gamma3, sm.gamma3, s1.gamma3),
            g: k.g + h / 6.0 * (g1 + 2.0 * g2 + 2.0 * g3 + g4),
            omega: k.omega + simpson(2.0 * s0.omega, 2.0 * sm.omega, 2.0 * s1.omega),
        };
        kernels.push(k);
    }
    Ok(KernelTable {
        grid: *grid,
        half_samples,
        kernels,
    })
}

fn check_step(samples: &[RateSample], h: f64) -> Result<(), EvolutionError> {
    for s in samples {
        let max_rate = s.max_abs();
        if max_rate > 0.0 && h > STEP_GUARD / max_rate {
            return Err(EvolutionError::StepTooLarge {
                h,
                t: s.t,
                max_rate,
                limit: STEP_GUARD / max_rate,
            });
        }
    }
    Ok(())
}

/// Closed-form G for commutative rates, `G = w·(e^Γ − 1)` with `w` the
/// stationary excited population. `None` outside the commutative class.
pub fn commutative_g(class: &DynamicsClass, gamma: f64) -> Option<f64> {
    let p1 = class.stationary_p1()?;
    Some(p1 * gamma.exp_m1())
}

pub fn apply_map(k: &Kernels, rho0: &QubitState) -> Result<QubitState, EvolutionError> {
    let p1 = k.population_factor() * (k.g + rho0.p1());
    let alpha = rho0.alpha() * k.coherence_factor();
    QubitState::with_tolerance(p1, alpha, MAP_STATE_TOL)
        .map_err(|source| EvolutionError::NonPhysical { t: k.t, source })
}

/// The map applied without checking the output; non-CP kernels may leave the state space.
pub fn apply_map_unchecked(k: &Kernels, rho0: &QubitState) -> QubitState {
    QubitState::unchecked(
        k.population_factor() * (k.g + rho0.p1()),
        rho0.alpha() * k.coherence_factor(),
    )
}

/// Choi matrix `Σ_ij E_ij ⊗ Φ(E_ij)`, with Φ extended to traceless inputs by
/// letting the pumping term scale with the input trace.
pub fn choi_matrix(k: &Kernels) -> Matrix4<Complex64> {
    let c = |x: f64| Complex64::new(x, 0.0);
    let pumped = k.pumped_population();
    let lifted = k.population_factor() * (k.g + 1.0);
    let phase = k.coherence_factor();
    let mut m = Matrix4::zeros();
    // Φ(E00) = diag(1 − e^{-Γ}G, e^{-Γ}G)
    m[(0, 0)] = c(1.0 - pumped);
    m[(1, 1)] = c(pumped);
    // Φ(E11) = diag(1 − e^{-Γ}(G+1), e^{-Γ}(G+1))
    m[(2, 2)] = c(1.0 - lifted);
    m[(3, 3)] = c(lifted);
    // Φ(E01) = phase·E01 sits in block (0,1) at entry (0,1)
    m[(0, 3)] = phase;
    m[(3, 0)] = phase.conj();
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpReport {
    pub t: f64,
    pub min_eigenvalue: f64,
    pub passed: bool,
}

pub fn choi_min_eigenvalue(k: &Kernels) -> f64 {
    choi_matrix(k)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn cp_check(k: &Kernels, tol: f64) -> CpReport {
    let min_eigenvalue = choi_min_eigenvalue(k);
    CpReport {
        t: k.t,
        min_eigenvalue,
        passed: min_eigenvalue >= -tol,
    }
}

/// Stationary state `diag(1/(κ+1), κ/(κ+1))` of commutative dynamics with `γ₂ = κγ₁`.
pub fn stationary_state(kappa: f64) -> Result<QubitState, EvolutionError> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(EvolutionError::KappaOutOfRange(kappa));
    }
    QubitState::diagonal(kappa / (kappa + 1.0))
        .map_err(|source| EvolutionError::NonPhysical { t: 0.0, source })
}

/// Stationary state for either labelling of the commutative rates.
pub fn stationary_state_oriented(
    kappa: f64,
    orientation: Orientation,
) -> Result<QubitState, EvolutionError> {
    let s = stationary_state(kappa)?;
    match orientation {
        Orientation::Standard => Ok(s),
        Orientation::Swapped => Ok(QubitState::diagonal(s.p0()).expect("mirror of a valid state")),
    }
}

/// States of the analytic map on a grid, with the rates and kernels behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<QubitState>,
    pub rates: Vec<RateSample>,
    pub kernels: Vec<Kernels>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn initial(&self) -> &QubitState {
        &self.states[0]
    }
}

/// Applies the map at every grid point of `table` to `rho0`.
pub fn evolve(table: &KernelTable, rho0: &QubitState) -> Result<Trajectory, EvolutionError> {
    let states = table
        .kernels
        .iter()
        .map(|k| apply_map(k, rho0))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory {
        times: table.grid.times(),
        states,
        rates: table.samples(),
        kernels: table.kernels.clone(),
    })
}

/// Like [`evolve`] but keeps formally evolved states of non-physical maps.
pub fn evolve_unchecked(table: &KernelTable, rho0: &QubitState) -> Trajectory {
    Trajectory {
        times: table.grid.times(),
        states: table
            .kernels
            .iter()
            .map(|k| apply_map_unchecked(k, rho0))
            .collect(),
        rates: table.samples(),
        kernels: table.kernels.clone(),
    }
}

pub fn evolve_model(
    model: &RateModel,
    rho0: &QubitState,
    grid: &TimeGrid,
    exec: Execution,
) -> Result<Trajectory, EvolutionError> {
    evolve(&integrate_kernels(model, grid, exec)?, rho0)
}

/// Which Hamiltonian the master-equation integrator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseConvention {
    /// Hamiltonian chosen so the coherence phase is `∫2ω`, matching the analytic map.
    #[default]
    KernelPhase,
    /// `H = (ω/2)σ_z` taken literally; the phase then differs from the map's.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<QubitState>,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
}

type M2 = Matrix2<Complex64>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn generator(rho: &M2, s: &RateSample, convention: PhaseConvention) -> M2 {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let sigma_plus = M2::new(zero, one, zero, zero);
    let sigma_minus = M2::new(zero, zero, one, zero);
    let sigma_z = M2::new(one, zero, zero, -one);
    let omega_h = match convention {
        PhaseConvention::KernelPhase => -2.0 * s.omega,
        PhaseConvention::Literal => s.omega,
    };
    let i = Complex64::new(0.0, 1.0);
    let comm = sigma_z * rho - rho * sigma_z;
    let lindblad = |l: &M2, ld: &M2| {
        let ldl = ld * l;
        l * rho * ld - (ldl * rho + rho * ldl) * Complex64::new(0.5, 0.0)
    };
    let l1 = lindblad(&sigma_plus, &sigma_minus);
    let l2 = lindblad(&sigma_minus, &sigma_plus);
    let l3 = sigma_z * rho * sigma_z - rho;
    comm * (-i * 0.5 * omega_h)
        + l1 * re(0.5 * s.gamma1)
        + l2 * re(0.5 * s.gamma2)
        + l3 * re(0.5 * s.gamma3)
}

/// Fixed-step RK4 integration of the master equation in matrix form.
pub fn ode_evolve(
    model: &RateModel,
    rho0: &QubitState,
    grid: &TimeGrid,
    convention: PhaseConvention,
    exec: Execution,
) -> Result<OdeTrajectory, EvolutionError> {
    let samples = model.eval_many(&grid.half_times(), exec)?;
    ode_evolve_samples(&samples, rho0, grid, convention)
}

/// [`ode_evolve`] from precomputed samples at `t = j·h/2`.
pub fn ode_evolve_samples(
    samples: &[RateSample],
    rho0: &QubitState,
    grid: &TimeGrid,
    convention: PhaseConvention,
) -> Result<OdeTrajectory, EvolutionError> {
    if samples.len() != 2 * grid.steps() + 1 {
        return Err(EvolutionError::Grid("sample count does not match the grid"));
    }
    let h = grid.h();
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let m = rho0.matrix();
    let mut rho = M2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    let mut states = Vec::with_capacity(grid.len());
    states.push(*rho0);
    let mut max_trace_error: f64 = 0.0;
    let mut max_hermiticity_error: f64 = 0.0;
    for n in 0..grid.steps() {
        let (s0, sm, s1) = (&samples[2 * n], &samples[2 * n + 1], &samples[2 * n + 2]);
        let k1 = generator(&rho, s0, convention);
        let k2 = generator(&(rho + k1 * hc * half), sm, convention);
        let k3 = generator(&(rho + k2 * hc * half), sm, convention);
        let k4 = generator(&(rho + k3 * hc), s1, convention);
        rho += (k1 + (k2 + k3) * re(2.0) + k4) * (hc / 6.0);
        let t = grid.time(n + 1);

        let trace_err = (rho[(0, 0)] + rho[(1, 1)] - 1.0).norm();
        let herm_err = (rho[(0, 1)] - rho[(1, 0)].conj())
            .norm()
            .max(rho[(0, 0)].im.abs())
            .max(rho[(1, 1)].im.abs());
        max_trace_error = max_trace_error.max(trace_err);
        max_hermiticity_error = max_hermiticity_error.max(herm_err);
        if trace_err > ODE_ABORT_TOL || !trace_err.is_finite() {
            return Err(EvolutionError::OdeDiverged {
                t,
                what: "trace error",
                value: trace_err,
            });
        }
        if herm_err > ODE_ABORT_TOL {
            return Err(EvolutionError::OdeDiverged {
                t,
                what: "hermiticity error",
                value: herm_err,
            });
        }
        let p1 = rho[(1, 1)].re;
        let alpha = 0.5 * (rho[(0, 1)] + rho[(1, 0)].conj());
        let state = QubitState::with_tolerance(p1, alpha, ODE_ABORT_TOL).map_err(|e| {
            let value = match e {
                StateError::PopulationOutOfRange { p1, .. } => p1,
                StateError::NotPositive { abs2, cap, .. } => abs2 - cap,
                _ => f64::NAN,
            };
            EvolutionError::OdeDiverged {
                t,
                what: "positivity violation",
                value,
            }
        })?;
        states.push(state);
    }
    Ok(OdeTrajectory {
        times: grid.times(),
        states,
        max_trace_error,
        max_hermiticity_error,
    })
}

/// CP report at every kernel of the table.
pub fn cp_series(table: &KernelTable, tol: f64, exec: Execution) -> Vec<CpReport> {
    par::map(exec, &table.kernels, |k| cp_check(k, tol))
}
