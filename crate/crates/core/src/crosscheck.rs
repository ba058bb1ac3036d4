//! Cross-checks between the analytic map, the master-equation integrator,
//! the detection conditions and the numeric indicators.

use std::fmt;

use num_complex::Complex64;

use crate::conditions::{classify_samples, predicates_with, DynamicsClass, EPS_PRED};
use crate::evolution::{
    commutative_g, cp_series, evolve_unchecked, integrate_kernels, ode_evolve_samples, KernelTable,
    PhaseConvention, TimeGrid, CP_TOL,
};
use crate::indicators::{
    applicable_series, IndicatorError, PairedSeries, Probes, EPS_SIGN, PROBE_ALPHA,
};
use crate::par::Execution;
use crate::rates::RateModel;
use crate::state::trace_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    MapVsOde,
    PredicatesVsIndicators,
    CompletePositivity,
    CommutativeG,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::MapVsOde => "map-vs-ode",
            CheckKind::PredicatesVsIndicators => "predicates-vs-indicators",
            CheckKind::CompletePositivity => "complete-positivity",
            CheckKind::CommutativeG => "commutative-G",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub kind: CheckKind,
    pub status: CheckStatus,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub eps_sign: f64,
    pub eps_pred: f64,
    pub cp_tol: f64,
    /// Largest trace distance allowed between map and ODE states.
    pub map_ode_tol: f64,
    /// Largest population-scale difference allowed between integrated and closed-form G.
    pub g_tol: f64,
    pub alpha0: Complex64,
    pub diagonal_p1: Option<f64>,
    pub phase: PhaseConvention,
    /// Multiplies the integrated G before checking; 1 leaves kernels untouched.
    pub kernel_g_scale: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            eps_sign: EPS_SIGN,
            eps_pred: EPS_PRED,
            cp_tol: CP_TOL,
            map_ode_tol: 1e-6,
            g_tol: 1e-8,
            alpha0: Complex64::new(PROBE_ALPHA, 0.0),
            diagonal_p1: None,
            phase: PhaseConvention::KernelPhase,
            kernel_g_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub class: DynamicsClass,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, kind: CheckKind) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.kind == kind)
    }

    pub fn failed(&self, kind: CheckKind) -> bool {
        self.get(kind)
            .is_some_and(|c| c.status == CheckStatus::Fail)
    }
}

pub use crate::indicators::RESOLUTION_FLOOR;

/// Agreement between one numeric series and its analytic condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub series: String,
    pub compared: usize,
    /// Points next to a sign change of the condition.
    pub excluded: usize,
    /// Points where the indicator change is below [`RESOLUTION_FLOOR`].
    pub unresolved: usize,
    /// Compared points at which the condition holds.
    pub holding: usize,
    /// Times at which the numeric detection disagrees with the condition.
    pub mismatches: Vec<f64>,
}

/// Compares each series' detection flags with its condition at every grid
/// point not within one step of a sign change of the condition and where the
/// indicator moves by more than [`RESOLUTION_FLOOR`] across the point.
pub fn oracle_agreement(
    table: &KernelTable,
    class: &DynamicsClass,
    paired: &[PairedSeries],
    eps_pred: f64,
) -> Vec<Agreement> {
    let samples = table.samples();
    paired
        .iter()
        .map(|p| {
            let truth: Vec<bool> = samples
                .iter()
                .map(|s| predicates_with(s, class, eps_pred).get(p.condition).holds())
                .collect();
            let n = truth.len();
            let mut out = Agreement {
                series: format!("{}→{}", p.series.column(), p.condition),
                compared: 0,
                excluded: 0,
                unresolved: 0,
                holding: 0,
                mismatches: Vec::new(),
            };
            let two_h = 2.0 * (p.series.times[1] - p.series.times[0]);
            for k in 0..n {
                let near_crossing =
                    (k > 0 && truth[k - 1] != truth[k]) || (k + 1 < n && truth[k + 1] != truth[k]);
                if near_crossing {
                    out.excluded += 1;
                    continue;
                }
                if p.series.detected_rate(k).abs() * two_h < RESOLUTION_FLOOR {
                    out.unresolved += 1;
                    continue;
                }
                out.compared += 1;
                out.holding += usize::from(truth[k]);
                if p.series.detection[k] != truth[k] {
                    out.mismatches.push(samples[k].t);
                }
            }
            out
        })
        .collect()
}

/// Runs the four cross-checks on `model`.
pub fn verify(
    model: &RateModel,
    grid: &TimeGrid,
    class_override: Option<DynamicsClass>,
    opts: &VerifyOptions,
    exec: Execution,
) -> Result<VerifyReport, IndicatorError> {
    let mut table = integrate_kernels(model, grid, exec)?;
    if opts.kernel_g_scale != 1.0 {
        for k in &mut table.kernels {
            k.g *= opts.kernel_g_scale;
        }
    }
    let class = class_override.unwrap_or_else(|| classify_samples(&table.samples()).class);
    let probes = Probes::for_class(&class, opts.alpha0, opts.diagonal_p1)?;
    let coherence = evolve_unchecked(&table, &probes.coherence);
    let diagonal = evolve_unchecked(&table, &probes.diagonal);
    let mut checks = Vec::with_capacity(4);

    // 1. analytic map against the master equation, both probes
    let mut worst: f64 = 0.0;
    let mut ode_failure = None;
    for traj in [&coherence, &diagonal] {
        match ode_evolve_samples(&table.half_samples, traj.initial(), grid, opts.phase) {
            Ok(ode) => {
                for (a, b) in traj.states.iter().zip(&ode.states) {
                    worst = worst.max(trace_distance(a, b));
                }
            }
            Err(e) => ode_failure = Some(e),
        }
    }
    checks.push(match ode_failure {
        Some(e) => CheckOutcome {
            kind: CheckKind::MapVsOde,
            status: CheckStatus::Fail,
            max_deviation: f64::INFINITY,
            tolerance: opts.map_ode_tol,
            detail: e.to_string(),
        },
        None => CheckOutcome {
            kind: CheckKind::MapVsOde,
            status: pass_if(worst <= opts.map_ode_tol),
            max_deviation: worst,
            tolerance: opts.map_ode_tol,
            detail: "max trace distance over both probes".into(),
        },
    });

    // 2. analytic conditions against numeric detection
    let paired = applicable_series(&coherence, &diagonal, &class, opts.eps_sign)?;
    let agreement = oracle_agreement(&table, &class, &paired, opts.eps_pred);
    let compared: usize = agreement.iter().map(|a| a.compared).sum();
    let unresolved: usize = agreement.iter().map(|a| a.unresolved).sum();
    let bad: Vec<&Agreement> = agreement
        .iter()
        .filter(|a| !a.mismatches.is_empty())
        .collect();
    let mismatches: usize = bad.iter().map(|a| a.mismatches.len()).sum();
    checks.push(CheckOutcome {
        kind: CheckKind::PredicatesVsIndicators,
        status: pass_if(mismatches == 0),
        max_deviation: mismatches as f64,
        tolerance: 0.0,
        detail: if bad.is_empty() {
            format!(
                "{} series, {compared} points compared, {unresolved} below resolution",
                agreement.len()
            )
        } else {
            let names: Vec<String> = bad
                .iter()
                .map(|a| format!("{} (first at t={})", a.series, a.mismatches[0]))
                .collect();
            format!(
                "{mismatches} of {compared} points disagree: {}",
                names.join(", ")
            )
        },
    });

    // 3. complete positivity along the trajectory
    let cp = cp_series(&table, opts.cp_tol, exec);
    let min = cp
        .iter()
        .map(|r| r.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let first_fail = cp.iter().find(|r| !r.passed);
    checks.push(CheckOutcome {
        kind: CheckKind::CompletePositivity,
        status: pass_if(first_fail.is_none()),
        max_deviation: min,
        tolerance: -opts.cp_tol,
        detail: match first_fail {
            Some(r) => format!("Choi eigenvalue {:e} at t={}", r.min_eigenvalue, r.t),
            None => "minimum Choi eigenvalue".into(),
        },
    });

    // 4. commutative closed form of G
    checks.push(if class.is_commutative() {
        let dev = table
            .kernels
            .iter()
            .map(|k| {
                let closed = commutative_g(&class, k.gamma).expect("commutative");
                (k.g - closed).abs() * (-k.gamma).exp()
            })
            .fold(0.0, f64::max);
        CheckOutcome {
            kind: CheckKind::CommutativeG,
            status: pass_if(dev <= opts.g_tol),
            max_deviation: dev,
            tolerance: opts.g_tol,
            detail: "max e^{-Γ}|G - G_closed|".into(),
        }
    } else {
        CheckOutcome {
            kind: CheckKind::CommutativeG,
            status: CheckStatus::Skipped,
            max_deviation: 0.0,
            tolerance: opts.g_tol,
            detail: "dynamics is not commutative".into(),
        }
    });

    Ok(VerifyReport { class, checks })
}

fn pass_if(ok: bool) -> CheckStatus {
    if ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}
