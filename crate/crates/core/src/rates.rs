//! Decay-rate models: point evaluation of (γ₁, γ₂, γ₃, ω) at a time `t`.
//!
//! Three kinds of model are supported: constant rates, user expressions in
//! the [`crate::expr`] language, and the always-physical phenomenological
//! model whose dissipative rates come from
//!
//! ```text
//!     f(t) = -2 Re[ċ(t)/c(t)],
//!     c(t) = e^{-t/2} [cosh(a t/2) + sinh(a t/2)/a],   a = sqrt(1 - 2R)
//! ```
//!
//! and whose dephasing rate is a spectral integral over an Ohmic density
//! J(ω) = ν ω^s / ω_c^s · e^{-ω/ω_c}.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::expr::{self, EvalError, Expr, ParseError};
use crate::par::{self, Execution};
use crate::quadrature::{self, QuadratureError, QuadratureOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("rate `{which}` at t = {t}: {source}")]
    Expression {
        which: &'static str,
        t: f64,
        #[source]
        source: EvalError,
    },
    #[error("pole of c(t) at t = {t}: |c| below threshold; nearest pole at t = {nearest_pole}")]
    Pole { t: f64, nearest_pole: f64 },
    #[error("dephasing quadrature at t = {t}: {source}")]
    Quadrature {
        t: f64,
        #[source]
        source: QuadratureError,
    },
    #[error("invalid model parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("negative time t = {0}")]
    NegativeTime(f64),
}

/// Decay rates and Hamiltonian frequency at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateSample {
    pub t: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub omega: f64,
}

impl RateSample {
    /// γ′ = γ₁ + γ₂.
    pub fn gamma_prime(&self) -> f64 {
        self.gamma1 + self.gamma2
    }

    pub fn max_abs(&self) -> f64 {
        self.gamma1
            .abs()
            .max(self.gamma2.abs())
            .max(self.gamma3.abs())
            .max(self.omega.abs())
    }
}

/// How the temperature enters the coth factor of the dephasing integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CothConvention {
    /// coth(ω / kT)
    #[default]
    Printed,
    /// coth(ω / 2kT)
    HalfTemperature,
}

/// Frequency weighting of the dephasing integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DephasingKernel {
    /// 2 J(ω) coth(·) sin(ωt)
    #[default]
    Printed,
    /// 2 J(ω)/ω coth(·) sin(ωt)
    PerFrequency,
}

/// Absolute accuracy of the dephasing quadrature, in units of ν·ω_c.
pub const DEPHASING_ABS_TOL: f64 = 1e-10;

/// Threshold on the oscillatory factor of c(t) below which evaluation fails.
pub const POLE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhenomParams {
    pub r: f64,
    /// Mean thermal excitation number N.
    pub n: f64,
    /// Ohmic exponent.
    pub s: f64,
    pub nu: f64,
    pub omega_c: f64,
    pub kt: f64,
    /// Constant Hamiltonian frequency.
    pub omega0: f64,
    pub coth: CothConvention,
    pub kernel: DephasingKernel,
}

impl Default for PhenomParams {
    fn default() -> Self {
        Self {
            r: 0.4,
            n: 0.0,
            s: 1.0,
            nu: 1.0,
            omega_c: 1.0,
            kt: 0.0,
            omega0: 0.0,
            coth: CothConvention::Printed,
            kernel: DephasingKernel::Printed,
        }
    }
}

impl PhenomParams {
    pub fn validate(&self) -> Result<(), RateError> {
        let checks: [(&'static str, f64, bool, &'static str); 6] = [
            ("r", self.r, self.r >= 0.0, "must be non-negative"),
            ("n", self.n, self.n >= 0.0, "must be non-negative"),
            ("s", self.s, self.s > 0.0, "must be positive"),
            ("nu", self.nu, self.nu >= 0.0, "must be non-negative"),
            (
                "omega_c",
                self.omega_c,
                self.omega_c > 0.0,
                "must be positive",
            ),
            ("kt", self.kt, self.kt >= 0.0, "must be non-negative"),
        ];
        for (name, value, ok, reason) in checks {
            if !value.is_finite() || !ok {
                return Err(RateError::InvalidParameter {
                    name,
                    value,
                    reason,
                });
            }
        }
        if !self.omega0.is_finite() {
            return Err(RateError::InvalidParameter {
                name: "omega0",
                value: self.omega0,
                reason: "must be finite",
            });
        }
        Ok(())
    }
}

/// Bose–Einstein occupation N = 1/(e^{ω₀/kT} − 1); zero at kT = 0.
pub fn thermal_occupation(omega0: f64, kt: f64) -> f64 {
    if kt <= 0.0 {
        0.0
    } else {
        1.0 / (omega0 / kt).exp_m1()
    }
}

/// The four rate expressions of an [`RateModel::Expressions`] model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprRates {
    pub gamma1: Expr,
    pub gamma2: Expr,
    pub gamma3: Expr,
    pub omega: Expr,
}

impl ExprRates {
    pub fn parse(
        gamma1: &str,
        gamma2: &str,
        gamma3: &str,
        omega: &str,
    ) -> Result<Self, ParseError> {
        Ok(Self {
            gamma1: expr::parse(gamma1)?,
            gamma2: expr::parse(gamma2)?,
            gamma3: expr::parse(gamma3)?,
            omega: expr::parse(omega)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateModel {
    Constant {
        gamma1: f64,
        gamma2: f64,
        gamma3: f64,
        omega: f64,
    },
    Expressions(ExprRates),
    Phenomenological(PhenomParams),
}

impl RateModel {
    pub fn constant(gamma1: f64, gamma2: f64, gamma3: f64, omega: f64) -> Self {
        RateModel::Constant {
            gamma1,
            gamma2,
            gamma3,
            omega,
        }
    }

    /// Parses four expressions; convenience for tests and configuration.
    pub fn expressions(
        gamma1: &str,
        gamma2: &str,
        gamma3: &str,
        omega: &str,
    ) -> Result<Self, ParseError> {
        ExprRates::parse(gamma1, gamma2, gamma3, omega).map(RateModel::Expressions)
    }

    pub fn eval(&self, t: f64) -> Result<RateSample, RateError> {
        eval_rates(self, t)
    }

    /// Evaluates the model at every time in `ts`.
    pub fn eval_many(&self, ts: &[f64], exec: Execution) -> Result<Vec<RateSample>, RateError> {
        par::try_map(exec, ts, |&t| eval_rates(self, t))
    }

    /// Poles of the phenomenological c(t) inside `[t0, t1]`; empty otherwise.
    pub fn poles_in(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self {
            RateModel::Phenomenological(p) => poles_in(p.r, t0, t1),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for RateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateModel::Constant {
                gamma1,
                gamma2,
                gamma3,
                omega,
            } => write!(
                f,
                "constant(γ1={gamma1}, γ2={gamma2}, γ3={gamma3}, ω={omega})"
            ),
            RateModel::Expressions(e) => write!(
                f,
                "expressions(γ1={}, γ2={}, γ3={}, ω={})",
                e.gamma1, e.gamma2, e.gamma3, e.omega
            ),
            RateModel::Phenomenological(p) => write!(
                f,
                "phenomenological(R={}, N={}, s={}, ν={}, ω_c={}, kT={}, ω0={})",
                p.r, p.n, p.s, p.nu, p.omega_c, p.kt, p.omega0
            ),
        }
    }
}

pub fn eval_rates(model: &RateModel, t: f64) -> Result<RateSample, RateError> {
    if t < 0.0 || t.is_nan() {
        return Err(RateError::NegativeTime(t));
    }
    match model {
        RateModel::Constant {
            gamma1,
            gamma2,
            gamma3,
            omega,
        } => Ok(RateSample {
            t,
            gamma1: *gamma1,
            gamma2: *gamma2,
            gamma3: *gamma3,
            omega: *omega,
        }),
        RateModel::Expressions(e) => {
            let ev = |which: &'static str, ex: &Expr| {
                ex.eval(t)
                    .map_err(|source| RateError::Expression { which, t, source })
            };
            Ok(RateSample {
                t,
                gamma1: ev("gamma1", &e.gamma1)?,
                gamma2: ev("gamma2", &e.gamma2)?,
                gamma3: ev("gamma3", &e.gamma3)?,
                omega: ev("omega", &e.omega)?,
            })
        }
        RateModel::Phenomenological(p) => {
            p.validate()?;
            let f = f_of_t(p.r, t)?;
            Ok(RateSample {
                t,
                gamma1: 2.0 * p.n * f,
                gamma2: 2.0 * (p.n + 1.0) * f,
                gamma3: dephasing_gamma3(p, t)?,
                omega: p.omega0,
            })
        }
    }
}

/// Poles of c(t) (zeros of its oscillatory factor) inside `[t0, t1]`.
/// Only `R > 1/2` has any.
pub fn poles_in(r: f64, t0: f64, t1: f64) -> Vec<f64> {
    let a2 = 2.0 * r - 1.0;
    if a2 <= 0.0 {
        return Vec::new();
    }
    let a = a2.sqrt();
    let phase = a.atan();
    let mut out = Vec::new();
    let mut n = 1u64;
    loop {
        let t = 2.0 * (n as f64 * PI - phase) / a;
        if t > t1 {
            break;
        }
        if t >= t0 {
            out.push(t);
        }
        n += 1;
    }
    out
}

fn nearest_pole(r: f64, t: f64) -> f64 {
    let a = (2.0 * r - 1.0).sqrt();
    let n = ((a * t / 2.0 + a.atan()) / PI).round().max(1.0);
    2.0 * (n * PI - a.atan()) / a
}

/// Bracket B(t) = cosh(a t/2) + sinh(a t/2)/a and its time derivative, as a
/// power series in a² = 1 − 2R (valid for either sign of a²).
fn bracket_series(a2: f64, t: f64) -> (f64, f64) {
    let h = 0.5 * t;
    let mut b = 0.0;
    let mut db = 0.0;
    // term_even = h^{2k}/(2k)!, term_odd = h^{2k+1}/(2k+1)!
    let mut even = 1.0;
    let mut odd = h;
    // h^{2k-1}/(2k-1)!
    let mut prev_odd = 0.0;
    let mut a2k = 1.0;
    for k in 0..30 {
        b += a2k * (even + odd);
        db += 0.5 * a2k * (prev_odd + even);
        let kk = k as f64;
        prev_odd = odd;
        even *= h * h / ((2.0 * kk + 1.0) * (2.0 * kk + 2.0));
        odd *= h * h / ((2.0 * kk + 2.0) * (2.0 * kk + 3.0));
        a2k *= a2;
        if (a2k * (even + odd)).abs() < 1e-18 * b.abs() {
            break;
        }
    }
    (b, db)
}

/// f(t) = −2 Re[ċ/c] for the phenomenological model, with c(0) = 1.
pub fn f_of_t(r: f64, t: f64) -> Result<f64, RateError> {
    if !r.is_finite() || r < 0.0 {
        return Err(RateError::InvalidParameter {
            name: "r",
            value: r,
            reason: "must be non-negative",
        });
    }
    if t < 0.0 || t.is_nan() {
        return Err(RateError::NegativeTime(t));
    }
    let a2 = 1.0 - 2.0 * r;
    // ċ/c = -1/2 + B'/B, so f = 1 - 2 B'/B
    if (a2 * t * t / 4.0).abs() <= 1.0 {
        let (b, db) = bracket_series(a2, t);
        return Ok(1.0 - 2.0 * db / b);
    }
    if a2 > 0.0 {
        let a = a2.sqrt();
        let th = (0.5 * a * t).tanh();
        // B'/B = (1/2)(a·tanh + 1)/(1 + tanh/a)
        Ok(1.0 - (a * th + 1.0) / (1.0 + th / a))
    } else {
        let a = (-a2).sqrt();
        let (s, c) = (0.5 * a * t).sin_cos();
        let b = c + s / a;
        if b.abs() < POLE_THRESHOLD {
            return Err(RateError::Pole {
                t,
                nearest_pole: nearest_pole(r, t),
            });
        }
        let db = -0.5 * a * s + 0.5 * c;
        Ok(1.0 - 2.0 * db / b)
    }
}

/// Upper frequency cut of the dephasing integral.
pub fn dephasing_cutoff(p: &PhenomParams) -> f64 {
    p.omega_c * 50f64.max(10.0 * p.s)
}

/// Pure-dephasing rate γ₃(t) by adaptive quadrature of the Ohmic spectral integral.
pub fn dephasing_gamma3(p: &PhenomParams, t: f64) -> Result<f64, RateError> {
    if t < 0.0 || t.is_nan() {
        return Err(RateError::NegativeTime(t));
    }
    if t == 0.0 || p.nu == 0.0 {
        return Ok(0.0);
    }
    let scale = 2.0 * p.nu;
    let inv_wc = 1.0 / p.omega_c;
    let temp = match p.coth {
        CothConvention::Printed => p.kt,
        CothConvention::HalfTemperature => 2.0 * p.kt,
    };
    let per_frequency = p.kernel == DephasingKernel::PerFrequency;
    let s = p.s;
    let integrand = move |w: f64| {
        let x = w * inv_wc;
        // (ω/ω_c)^s e^{-ω/ω_c}
        let mut v = scale * (s * x.ln() - x).exp() * (w * t).sin();
        if temp > 0.0 {
            v /= (w / temp).tanh();
        }
        if per_frequency {
            v /= w;
        }
        v
    };
    let opts = QuadratureOptions {
        abs_tol: DEPHASING_ABS_TOL * p.nu * p.omega_c,
        rel_tol: 1e-10,
        ..QuadratureOptions::default()
    };
    let w_max = dephasing_cutoff(p);
    let panel = (PI / (4.0 * t)).min(w_max);
    quadrature::integrate(integrand, 0.0, w_max, panel, &opts)
        .map(|r| r.value)
        .map_err(|source| RateError::Quadrature { t, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_model() {
        let m = RateModel::constant(1.0, 1.0, 1.0, 0.0);
        let s = m.eval(7.0).unwrap();
        assert_eq!(
            (s.gamma1, s.gamma2, s.gamma3, s.omega),
            (1.0, 1.0, 1.0, 0.0)
        );
        assert_eq!(s.t, 7.0);
    }

    #[test]
    fn expression_model_eternal() {
        let m = RateModel::expressions("2", "2", "-tanh(t)", "0").unwrap();
        let s = m.eval(0.0).unwrap();
        assert_eq!(
            (s.gamma1, s.gamma2, s.gamma3, s.omega),
            (2.0, 2.0, 0.0, 0.0)
        );
    }

    #[test]
    fn expression_errors_propagate() {
        let m = RateModel::expressions("sqrt(t-1)", "0", "0", "0").unwrap();
        assert!(matches!(
            m.eval(0.0),
            Err(RateError::Expression {
                which: "gamma1",
                ..
            })
        ));
        assert!(matches!(m.eval(-1.0), Err(RateError::NegativeTime(_))));
    }

    #[test]
    fn phenomenological_r_zero_has_no_dissipation() {
        let p = PhenomParams {
            r: 0.0,
            n: 1.0,
            ..Default::default()
        };
        let m = RateModel::Phenomenological(p);
        for t in [0.0, 0.5, 3.0, 20.0] {
            let s = m.eval(t).unwrap();
            assert!(s.gamma1.abs() < 1e-14 && s.gamma2.abs() < 1e-14, "{s:?}");
        }
    }

    #[test]
    fn f_vanishes_at_origin() {
        for r in [0.0, 0.1, 0.4, 0.5, 0.6, 4.0, 100.0] {
            assert_eq!(f_of_t(r, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn f_critical_limit() {
        // R = 1/2: c = e^{-t/2}(1 + t/2), so f = 1 - 2·(1/2)/(1 + t/2)
        let exact = |t: f64| 1.0 - 1.0 / (1.0 + 0.5 * t);
        for t in [0.3, 1.0, 5.0, 40.0] {
            assert!((f_of_t(0.5, t).unwrap() - exact(t)).abs() < 1e-14);
        }
        // continuity on both sides of the critical point
        let near_lo = f_of_t(0.5 - 5e-13, 1.0).unwrap();
        let near_hi = f_of_t(0.5 + 5e-13, 1.0).unwrap();
        assert!((near_lo - exact(1.0)).abs() < 1e-10);
        assert!((near_hi - exact(1.0)).abs() < 1e-10);
    }

    #[test]
    fn f_closed_forms_match_series_at_switchover() {
        // the series branch and closed forms must agree where they meet
        for r in [0.2, 0.45, 0.55, 1.0, 4.0] {
            let a2: f64 = 1.0 - 2.0 * r;
            let t_switch = 2.0 / a2.abs().sqrt();
            let lo = f_of_t(r, t_switch * (1.0 - 1e-9)).unwrap();
            let hi = f_of_t(r, t_switch * (1.0 + 1e-9)).unwrap();
            assert!((lo - hi).abs() < 1e-7, "r={r}: {lo} vs {hi}");
        }
    }

    #[test]
    fn f_matches_finite_difference_of_c() {
        // independent route: numerically differentiate c(t) directly
        fn c(r: f64, t: f64) -> f64 {
            let a2 = 1.0 - 2.0 * r;
            let env = (-t / 2.0).exp();
            if a2 > 0.0 {
                let a = a2.sqrt();
                env * ((a * t / 2.0).cosh() + (a * t / 2.0).sinh() / a)
            } else {
                let a = (-a2).sqrt();
                env * ((a * t / 2.0).cos() + (a * t / 2.0).sin() / a)
            }
        }
        for r in [0.1, 0.4, 0.7, 4.0] {
            for t in [0.2, 0.9, 1.3, 3.0, 7.5] {
                let h = 1e-5;
                let dc = (c(r, t + h) - c(r, t - h)) / (2.0 * h);
                let expected = -2.0 * dc / c(r, t);
                let got = f_of_t(r, t).unwrap();
                assert!(
                    (got - expected).abs() < 1e-6 * (1.0 + expected.abs()),
                    "r={r} t={t}: {got} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn f_nonnegative_below_half() {
        for r in [0.05, 0.25, 0.4, 0.49] {
            for k in 0..=5000 {
                let t = 50.0 * k as f64 / 5000.0;
                assert!(f_of_t(r, t).unwrap() >= 0.0, "r={r} t={t}");
            }
        }
    }

    #[test]
    fn poles_for_r_four() {
        let poles = poles_in(4.0, 0.0, 10.0);
        let a = 7f64.sqrt();
        let first = 2.0 * (PI - a.atan()) / a;
        assert!((poles[0] - first).abs() < 1e-15);
        assert!((first - 1.4606).abs() < 1e-4);
        assert_eq!(poles.len(), 4);
        let err = f_of_t(4.0, first).unwrap_err();
        match err {
            RateError::Pole { nearest_pole, .. } => assert!((nearest_pole - first).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(poles_in(0.4, 0.0, 100.0).is_empty());
        assert!(poles_in(0.5, 0.0, 100.0).is_empty());
    }

    #[test]
    fn phenomenological_ratio_and_difference() {
        let p = PhenomParams {
            r: 0.3,
            n: 1.5,
            nu: 0.0,
            ..Default::default()
        };
        let m = RateModel::Phenomenological(p);
        for t in [0.1, 1.0, 4.0] {
            let s = m.eval(t).unwrap();
            let f = f_of_t(0.3, t).unwrap();
            assert!((s.gamma2 - s.gamma1 - 2.0 * f).abs() < 1e-14);
            assert!((s.gamma2 / s.gamma1 - 2.5 / 1.5).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma3_zero_time_and_unit_example() {
        let p = PhenomParams {
            s: 1.0,
            kt: 0.0,
            ..Default::default()
        };
        assert_eq!(dephasing_gamma3(&p, 0.0).unwrap(), 0.0);
        // zero temperature, s = 1, ω_c = ν = 1, t = 1 gives exactly 1
        let g = dephasing_gamma3(&p, 1.0).unwrap();
        assert!((g - 1.0).abs() < 1e-10, "{g}");
    }

    #[test]
    fn thermal_occupation_limits() {
        assert_eq!(thermal_occupation(1.0, 0.0), 0.0);
        let n = thermal_occupation(1.0, 3.0);
        assert!((n - 1.0 / ((1.0f64 / 3.0).exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = PhenomParams {
            s: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            RateModel::Phenomenological(p).eval(1.0),
            Err(RateError::InvalidParameter { name: "s", .. })
        ));
    }
}
