//! Run configuration, read from a TOML document.
//!
//! ```toml
//! schema_version = 1
//!
//! [model]
//! kind = "expressions"
//! gamma1 = "2"
//! gamma2 = "2"
//! gamma3 = "-tanh(t)"
//! omega = "0"
//!
//! [time]
//! t_max = 10.0
//! steps = 10000
//! ```
//!
//! Every section except `model` is optional.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use phasecov::conditions::{DynamicsClass, Orientation};
use phasecov::crosscheck::VerifyOptions;
use phasecov::evolution::{PhaseConvention, TimeGrid};
use phasecov::rates::{
    thermal_occupation, CothConvention, DephasingKernel, ExprRates, PhenomParams, RateModel,
};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    #[serde(default)]
    pub class_override: Option<ClassSpec>,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Constant {
        gamma1: f64,
        gamma2: f64,
        gamma3: f64,
        #[serde(default)]
        omega: f64,
    },
    Expressions {
        gamma1: String,
        gamma2: String,
        gamma3: String,
        #[serde(default = "zero_expr")]
        omega: String,
    },
    Phenomenological {
        r: f64,
        /// Computed from `kt` and `omega0` when absent.
        #[serde(default)]
        n: Option<f64>,
        s: f64,
        #[serde(default = "one")]
        nu: f64,
        #[serde(default = "one")]
        omega_c: f64,
        #[serde(default)]
        kt: f64,
        #[serde(default)]
        omega0: f64,
        #[serde(default)]
        coth: CothSpec,
        #[serde(default)]
        kernel: KernelSpec,
    },
}

fn zero_expr() -> String {
    "0".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CothSpec {
    #[default]
    Printed,
    HalfTemperature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Printed,
    PerFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    General,
    Unital,
    Commutative {
        kappa: f64,
        #[serde(default)]
        swapped: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub t_max: f64,
    pub steps: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            steps: 10_000,
        }
    }
}

/// A complex number written either as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexSpec::Real(re) => Complex64::new(re, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSpec {
    pub coherence_alpha0: ComplexSpec,
    pub diagonal_p1: Option<f64>,
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            coherence_alpha0: ComplexSpec::Real(phasecov::indicators::PROBE_ALPHA),
            diagonal_p1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    pub eps_sign: f64,
    pub eps_pred: f64,
    pub cp_tol: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            eps_sign: phasecov::indicators::EPS_SIGN,
            eps_pred: phasecov::conditions::EPS_PRED,
            cp_tol: phasecov::evolution::CP_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One file per indicator.
    #[default]
    Long,
    /// All indicators in one table.
    Wide,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub layout: Layout,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("."),
            layout: Layout::Long,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub gamma_prime_range: [f64; 2],
    pub gamma3_range: [f64; 2],
    pub resolution: usize,
    /// Also write the model's (γ′(t), γ₃(t)) curve.
    pub overlay: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            gamma_prime_range: [-5.0, 5.0],
            gamma3_range: [-5.0, 5.0],
            resolution: 201,
            overlay: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSpec {
    #[default]
    Kernel,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSpec {
    /// Scales the integrated G before verification; a negative control.
    pub kernel_g_scale: f64,
    pub phase_convention: PhaseSpec,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            kernel_g_scale: 1.0,
            phase_convention: PhaseSpec::Kernel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(key: &str, why: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("invalid `{key}`: {why}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(key, format!("must be positive, got {v}")))
            }
        };
        positive("time.t_max", self.time.t_max)?;
        if self.time.steps < 10 {
            return Err(bad(
                "time.steps",
                format!("must be at least 10, got {}", self.time.steps),
            ));
        }
        positive("tolerances.eps_sign", self.tolerances.eps_sign)?;
        positive("tolerances.eps_pred", self.tolerances.eps_pred)?;
        positive("tolerances.cp_tol", self.tolerances.cp_tol)?;
        if let Some(p1) = self.probes.diagonal_p1 {
            if !(0.0..=1.0).contains(&p1) {
                return Err(bad(
                    "probes.diagonal_p1",
                    format!("must lie in [0, 1], got {p1}"),
                ));
            }
        }
        let a = self.probes.coherence_alpha0.value();
        if !(a.re.is_finite() && a.im.is_finite()) || a.norm() == 0.0 {
            return Err(bad(
                "probes.coherence_alpha0",
                "must be finite and non-zero",
            ));
        }
        if let Some(s) = &self.sweep {
            for (key, r) in [
                ("sweep.gamma_prime_range", s.gamma_prime_range),
                ("sweep.gamma3_range", s.gamma3_range),
            ] {
                if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                    return Err(bad(key, "must be a finite increasing pair"));
                }
            }
            if s.resolution < 2 {
                return Err(bad("sweep.resolution", "must be at least 2"));
            }
        }
        if let Some(ClassSpec::Commutative { kappa, .. }) = self.class_override {
            if !(0.0..=1.0).contains(&kappa) {
                return Err(bad(
                    "class_override.kappa",
                    format!("must lie in [0, 1], got {kappa}"),
                ));
            }
        }
        if !(self.diagnostics.kernel_g_scale.is_finite()) {
            return Err(bad("diagnostics.kernel_g_scale", "must be finite"));
        }
        self.rate_model().map(|_| ())
    }

    pub fn rate_model(&self) -> Result<RateModel, ConfigError> {
        match &self.model {
            ModelSpec::Constant {
                gamma1,
                gamma2,
                gamma3,
                omega,
            } => {
                for (key, v) in [
                    ("model.gamma1", gamma1),
                    ("model.gamma2", gamma2),
                    ("model.gamma3", gamma3),
                    ("model.omega", omega),
                ] {
                    if !v.is_finite() {
                        return Err(bad(key, "must be finite"));
                    }
                }
                Ok(RateModel::constant(*gamma1, *gamma2, *gamma3, *omega))
            }
            ModelSpec::Expressions {
                gamma1,
                gamma2,
                gamma3,
                omega,
            } => {
                let p = |key: &str, text: &str| {
                    phasecov::expr::parse(text).map_err(|e| bad(key, format!("{e} in {text:?}")))
                };
                Ok(RateModel::Expressions(ExprRates {
                    gamma1: p("model.gamma1", gamma1)?,
                    gamma2: p("model.gamma2", gamma2)?,
                    gamma3: p("model.gamma3", gamma3)?,
                    omega: p("model.omega", omega)?,
                }))
            }
            ModelSpec::Phenomenological {
                r,
                n,
                s,
                nu,
                omega_c,
                kt,
                omega0,
                coth,
                kernel,
            } => {
                let n = match n {
                    Some(n) => *n,
                    None => thermal_occupation(*omega0, *kt),
                };
                let params = PhenomParams {
                    r: *r,
                    n,
                    s: *s,
                    nu: *nu,
                    omega_c: *omega_c,
                    kt: *kt,
                    omega0: *omega0,
                    coth: match coth {
                        CothSpec::Printed => CothConvention::Printed,
                        CothSpec::HalfTemperature => CothConvention::HalfTemperature,
                    },
                    kernel: match kernel {
                        KernelSpec::Printed => DephasingKernel::Printed,
                        KernelSpec::PerFrequency => DephasingKernel::PerFrequency,
                    },
                };
                params.validate().map_err(|e| match e {
                    phasecov::rates::RateError::InvalidParameter {
                        name,
                        value,
                        reason,
                    } => bad(&format!("model.{name}"), format!("{reason}, got {value}")),
                    other => ConfigError(other.to_string()),
                })?;
                Ok(RateModel::Phenomenological(params))
            }
        }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid::new(self.time.t_max, self.time.steps).expect("validated")
    }

    pub fn class_override(&self) -> Option<DynamicsClass> {
        self.class_override.map(|c| match c {
            ClassSpec::General => DynamicsClass::General,
            ClassSpec::Unital => DynamicsClass::Unital,
            ClassSpec::Commutative { kappa, swapped } => DynamicsClass::Commutative {
                kappa,
                orientation: if swapped {
                    Orientation::Swapped
                } else {
                    Orientation::Standard
                },
            },
        })
    }

    pub fn phase(&self) -> PhaseConvention {
        match self.diagnostics.phase_convention {
            PhaseSpec::Kernel => PhaseConvention::KernelPhase,
            PhaseSpec::Literal => PhaseConvention::Literal,
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            eps_sign: self.tolerances.eps_sign,
            eps_pred: self.tolerances.eps_pred,
            cp_tol: self.tolerances.cp_tol,
            alpha0: self.probes.coherence_alpha0.value(),
            diagonal_p1: self.probes.diagonal_p1,
            phase: self.phase(),
            kernel_g_scale: self.diagnostics.kernel_g_scale,
            ..VerifyOptions::default()
        }
    }
}
