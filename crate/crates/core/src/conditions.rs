//! Analytic detection conditions, classification of the rates into the
//! general / commutative / unital families, and the inverse inference from
//! observed detections to rate inequalities.
//!
//! Every condition is a strict sign test on one of three linear forms of the
//! rates, with γ′ = γ₁ + γ₂:
//!
//! | form        | conditions                                             |
//! |-------------|--------------------------------------------------------|
//! | γ′ + 4γ₃    | trace1, l1, entropy1, eigen1, purity1, singular1       |
//! | γ′          | trace2, entropy2, eigen2, purity2, singular2           |
//! | γ′ + 2γ₃    | bloch                                                  |
//!
//! In the commutative family γ′ = (1+κ)γ and in the unital family γ′ = 2γ.

use std::fmt;

use thiserror::Error;

use crate::evolution::TimeGrid;
use crate::par::{self, Execution};
use crate::rates::{RateError, RateModel, RateSample};

/// Predicates use `lhs < -EPS_PRED` for the strict inequality.
pub const EPS_PRED: f64 = 1e-12;
/// Relative residual allowed in the proportionality fit.
pub const CLASS_TOL: f64 = 1e-9;
/// Boundary resolution of [`detection_report`].
pub const BISECTION_TOL: f64 = 1e-10;

/// Which rate is the larger one in a commutative pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// γ₂ = κγ₁
    #[default]
    Standard,
    /// γ₁ = κγ₂ (rates relabelled so that κ ≤ 1)
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DynamicsClass {
    #[default]
    General,
    Commutative {
        kappa: f64,
        orientation: Orientation,
    },
    Unital,
}

impl DynamicsClass {
    pub fn commutative(kappa: f64) -> Self {
        DynamicsClass::Commutative {
            kappa,
            orientation: Orientation::Standard,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self {
            DynamicsClass::General => None,
            DynamicsClass::Commutative { kappa, .. } => Some(*kappa),
            DynamicsClass::Unital => Some(1.0),
        }
    }

    pub fn is_commutative(&self) -> bool {
        !matches!(self, DynamicsClass::General)
    }

    pub fn is_unital(&self) -> bool {
        matches!(self, DynamicsClass::Unital)
    }

    /// Excited population of the stationary state, `γ₂/(γ₁+γ₂)`.
    pub fn stationary_p1(&self) -> Option<f64> {
        match *self {
            DynamicsClass::General => None,
            DynamicsClass::Unital => Some(0.5),
            DynamicsClass::Commutative {
                kappa,
                orientation: Orientation::Standard,
            } => Some(kappa / (1.0 + kappa)),
            DynamicsClass::Commutative {
                kappa,
                orientation: Orientation::Swapped,
            } => Some(1.0 / (1.0 + kappa)),
        }
    }
}

impl fmt::Display for DynamicsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsClass::General => write!(f, "General"),
            DynamicsClass::Unital => write!(f, "Unital (κ=1.000000)"),
            DynamicsClass::Commutative {
                kappa,
                orientation: Orientation::Standard,
            } => write!(f, "Commutative (κ = γ2/γ1 = {kappa})"),
            DynamicsClass::Commutative {
                kappa,
                orientation: Orientation::Swapped,
            } => write!(f, "Commutative (κ = γ1/γ2 = {kappa})"),
        }
    }
}

/// Result of fitting `γ₂ = κγ₁` (or the swapped form) to sampled rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: DynamicsClass,
    /// Least-squares ratio of the final attempted orientation, if any fit was possible.
    pub kappa_fit: Option<f64>,
    /// Largest absolute deviation from proportionality.
    pub residual: f64,
}

fn fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let kappa = sxy / sxx;
    let residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - kappa * x).abs())
        .fold(0.0, f64::max);
    let scale = xs.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Some((kappa, residual, scale))
}

pub fn classify_samples(samples: &[RateSample]) -> Classification {
    let g1: Vec<f64> = samples.iter().map(|s| s.gamma1).collect();
    let g2: Vec<f64> = samples.iter().map(|s| s.gamma2).collect();
    let general = |kappa_fit, residual| Classification {
        class: DynamicsClass::General,
        kappa_fit,
        residual,
    };
    let finish = |kappa: f64, residual: f64, orientation| {
        let kappa = if kappa < 0.0 { 0.0 } else { kappa.min(1.0) };
        let class = if (kappa - 1.0).abs() <= CLASS_TOL {
            DynamicsClass::Unital
        } else {
            DynamicsClass::Commutative { kappa, orientation }
        };
        Classification {
            class,
            kappa_fit: Some(kappa),
            residual,
        }
    };
    let (standard, swapped) = (fit(&g1, &g2), fit(&g2, &g1));
    match (standard, swapped) {
        // no dissipation at all: pure dephasing is unital
        (None, None) => Classification {
            class: DynamicsClass::Unital,
            kappa_fit: Some(1.0),
            residual: 0.0,
        },
        (Some((k, r, scale)), _)
            if r <= CLASS_TOL * scale && (-CLASS_TOL..=1.0 + CLASS_TOL).contains(&k) =>
        {
            finish(k, r, Orientation::Standard)
        }
        (_, Some((k, r, scale)))
            if r <= CLASS_TOL * scale && (-CLASS_TOL..=1.0 + CLASS_TOL).contains(&k) =>
        {
            finish(k, r, Orientation::Swapped)
        }
        (Some((k, r, _)), _) => general(Some(k), r),
        (None, Some((k, r, _))) => general(Some(k), r),
    }
}

pub fn classify_dynamics(
    model: &RateModel,
    grid: &TimeGrid,
    exec: Execution,
) -> Result<Classification, RateError> {
    let samples = model.eval_many(&grid.times(), exec)?;
    Ok(classify_samples(&samples))
}

/// The linear form of the rates that a condition tests for negativity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateForm {
    /// γ′ + 4γ₃
    Coherence,
    /// γ′
    Population,
    /// γ′ + 2γ₃
    Volume,
}

impl RateForm {
    pub const ALL: [RateForm; 3] = [RateForm::Coherence, RateForm::Population, RateForm::Volume];

    pub fn eval(self, s: &RateSample) -> f64 {
        self.eval_parts(s.gamma_prime(), s.gamma3)
    }

    pub fn eval_parts(self, gamma_prime: f64, gamma3: f64) -> f64 {
        match self {
            RateForm::Coherence => gamma_prime + 4.0 * gamma3,
            RateForm::Population => gamma_prime,
            RateForm::Volume => gamma_prime + 2.0 * gamma3,
        }
    }

    /// Coefficients on (γ₁, γ₂, γ₃).
    pub fn coefficients(self) -> [f64; 3] {
        match self {
            RateForm::Coherence => [1.0, 1.0, 4.0],
            RateForm::Population => [1.0, 1.0, 0.0],
            RateForm::Volume => [1.0, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Trace1,
    Trace2,
    Bloch,
    L1,
    Entropy1,
    Entropy2,
    Eigen1,
    Eigen2,
    Purity1,
    Purity2,
    Singular1,
    Singular2,
}

impl Condition {
    pub const ALL: [Condition; 12] = [
        Condition::Trace1,
        Condition::Trace2,
        Condition::Bloch,
        Condition::L1,
        Condition::Entropy1,
        Condition::Entropy2,
        Condition::Eigen1,
        Condition::Eigen2,
        Condition::Purity1,
        Condition::Purity2,
        Condition::Singular1,
        Condition::Singular2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Trace1 => "trace1",
            Condition::Trace2 => "trace2",
            Condition::Bloch => "bloch",
            Condition::L1 => "l1",
            Condition::Entropy1 => "entropy1",
            Condition::Entropy2 => "entropy2",
            Condition::Eigen1 => "eigen1",
            Condition::Eigen2 => "eigen2",
            Condition::Purity1 => "purity1",
            Condition::Purity2 => "purity2",
            Condition::Singular1 => "singular1",
            Condition::Singular2 => "singular2",
        }
    }

    pub fn from_name(name: &str) -> Option<Condition> {
        Condition::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn form(self) -> RateForm {
        match self {
            Condition::Bloch => RateForm::Volume,
            Condition::Trace2
            | Condition::Entropy2
            | Condition::Eigen2
            | Condition::Purity2
            | Condition::Singular2 => RateForm::Population,
            _ => RateForm::Coherence,
        }
    }

    pub fn is_applicable(self, class: &DynamicsClass) -> bool {
        match self {
            Condition::Trace1 | Condition::Trace2 | Condition::Bloch | Condition::L1 => true,
            Condition::Entropy1 | Condition::Entropy2 | Condition::Eigen1 | Condition::Eigen2 => {
                class.is_commutative()
            }
            Condition::Purity1
            | Condition::Purity2
            | Condition::Singular1
            | Condition::Singular2 => class.is_unital(),
        }
    }

    /// The narrowest class in which the condition applies.
    pub fn home_class(self) -> DynamicsClass {
        match self {
            Condition::Trace1 | Condition::Trace2 | Condition::Bloch | Condition::L1 => {
                DynamicsClass::General
            }
            Condition::Entropy1 | Condition::Entropy2 | Condition::Eigen1 | Condition::Eigen2 => {
                DynamicsClass::commutative(0.5)
            }
            _ => DynamicsClass::Unital,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    True,
    False,
    NotApplicable,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::True
    }

    pub fn as_option(self) -> Option<bool> {
        match self {
            Verdict::True => Some(true),
            Verdict::False => Some(false),
            Verdict::NotApplicable => None,
        }
    }
}

/// Verdict of every condition for one rate sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Predicates([Verdict; 12]);

impl Predicates {
    pub fn get(&self, c: Condition) -> Verdict {
        self.0[c as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Condition, Verdict)> + '_ {
        Condition::ALL.into_iter().map(move |c| (c, self.get(c)))
    }
}

pub fn predicates(s: &RateSample, class: &DynamicsClass) -> Predicates {
    predicates_with(s, class, EPS_PRED)
}

pub fn predicates_with(s: &RateSample, class: &DynamicsClass, eps_pred: f64) -> Predicates {
    predicates_parts(s.gamma_prime(), s.gamma3, class, eps_pred)
}

pub fn predicates_parts(
    gamma_prime: f64,
    gamma3: f64,
    class: &DynamicsClass,
    eps_pred: f64,
) -> Predicates {
    let mut out = [Verdict::NotApplicable; 12];
    for c in Condition::ALL {
        if c.is_applicable(class) {
            out[c as usize] = if c.form().eval_parts(gamma_prime, gamma3) < -eps_pred {
                Verdict::True
            } else {
                Verdict::False
            };
        }
    }
    Predicates(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub class: DynamicsClass,
    pub t_max: f64,
    /// Intervals per condition; `None` when the condition does not apply.
    pub intervals: Vec<(Condition, Option<Vec<Interval>>)>,
}

impl DetectionReport {
    pub fn get(&self, c: Condition) -> Option<&[Interval]> {
        self.intervals
            .iter()
            .find(|(k, _)| *k == c)
            .and_then(|(_, v)| v.as_deref())
    }

    /// True when no applicable condition holds anywhere.
    pub fn all_empty(&self) -> bool {
        self.intervals
            .iter()
            .all(|(_, v)| v.as_ref().is_none_or(|v| v.is_empty()))
    }
}

/// Finds the crossing of `holds` between `lo` (value `at_lo`) and `hi`.
fn bisect<F>(mut lo: f64, mut hi: f64, at_lo: bool, holds: &F) -> Result<f64, RateError>
where
    F: Fn(f64) -> Result<bool, RateError>,
{
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Intervals where `form(rates) < -eps_pred`, from grid samples refined by bisection.
pub fn form_intervals(
    model: &RateModel,
    samples: &[RateSample],
    form: RateForm,
    eps_pred: f64,
) -> Result<Vec<Interval>, RateError> {
    let holds = |t: f64| model.eval(t).map(|s| form.eval(&s) < -eps_pred);
    let flags: Vec<bool> = samples.iter().map(|s| form.eval(s) < -eps_pred).collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < flags.len() {
        if !flags[k] {
            k += 1;
            continue;
        }
        let first = k;
        while k + 1 < flags.len() && flags[k + 1] {
            k += 1;
        }
        let last = k;
        let start = if first == 0 {
            samples[0].t
        } else {
            bisect(samples[first - 1].t, samples[first].t, false, &holds)?
        };
        let end = if last + 1 == flags.len() {
            samples[last].t
        } else {
            bisect(samples[last].t, samples[last + 1].t, true, &holds)?
        };
        out.push(Interval { start, end });
        k += 1;
    }
    Ok(out)
}

/// Detection intervals for every applicable condition from grid samples of `model`.
pub fn detection_report_from_samples(
    model: &RateModel,
    samples: &[RateSample],
    class: DynamicsClass,
    eps_pred: f64,
) -> Result<DetectionReport, RateError> {
    let mut by_form = Vec::with_capacity(3);
    for form in RateForm::ALL {
        by_form.push((form, form_intervals(model, samples, form, eps_pred)?));
    }
    let intervals = Condition::ALL
        .into_iter()
        .map(|c| {
            let v = c.is_applicable(&class).then(|| {
                by_form
                    .iter()
                    .find(|(f, _)| *f == c.form())
                    .map(|(_, v)| v.clone())
                    .unwrap_or_default()
            });
            (c, v)
        })
        .collect();
    Ok(DetectionReport {
        class,
        t_max: samples.last().map_or(0.0, |s| s.t),
        intervals,
    })
}

/// Classifies the model (unless `class` is given) and builds its detection report.
pub fn detection_report(
    model: &RateModel,
    grid: &TimeGrid,
    class: Option<DynamicsClass>,
    exec: Execution,
) -> Result<DetectionReport, RateError> {
    let samples = model.eval_many(&grid.times(), exec)?;
    let class = class.unwrap_or_else(|| classify_samples(&samples).class);
    detection_report_from_samples(model, &samples, class, EPS_PRED)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Less,
    GreaterOrEqual,
    Greater,
}

/// `c₁γ₁ + c₂γ₂ + c₃γ₃ (relation) 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: [f64; 3],
    pub relation: Relation,
}

impl LinearConstraint {
    pub fn new(coefficients: [f64; 3], relation: Relation) -> Self {
        Self {
            coefficients,
            relation,
        }
    }

    pub fn from_form(form: RateForm, negative: bool) -> Self {
        let relation = if negative {
            Relation::Less
        } else {
            Relation::GreaterOrEqual
        };
        Self::new(form.coefficients(), relation)
    }

    pub fn is_satisfied(&self, s: &RateSample) -> bool {
        let [a, b, c] = self.coefficients;
        let v = a * s.gamma1 + b * s.gamma2 + c * s.gamma3;
        match self.relation {
            Relation::Less => v < 0.0,
            Relation::GreaterOrEqual => v >= 0.0,
            Relation::Greater => v > 0.0,
        }
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, name) in self.coefficients.iter().zip(["γ1", "γ2", "γ3"]) {
            if *c == 0.0 {
                continue;
            }
            let sign = if *c < 0.0 { "-" } else { "+" };
            if first {
                if *c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if c.abs() != 1.0 {
                write!(f, "{}", c.abs())?;
            }
            f.write_str(name)?;
            first = false;
        }
        let rel = match self.relation {
            Relation::Less => "<",
            Relation::GreaterOrEqual => ">=",
            Relation::Greater => ">",
        };
        write!(f, " {rel} 0")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("indicator `{0}` does not apply to this class of dynamics")]
    NotApplicable(Condition),
    #[error("`{0}` and `{1}` test the same rate inequality but were observed differently")]
    Contradictory(Condition, Condition),
    #[error("observations violate the implication {0}")]
    Inconsistent(&'static str),
}

/// Rate inequalities implied by a vector of observed detections.
///
/// Each observation contributes its own inequality or its negation; the
/// relation `γ′ + 2γ₃ = ½[(γ′ + 4γ₃) + γ′]` between the three forms then
/// yields sign information on γ₃ and γ′.
pub fn infer_rate_constraints(
    observed: &[(Condition, bool)],
    class: &DynamicsClass,
) -> Result<Vec<LinearConstraint>, InferenceError> {
    let mut known: [Option<(bool, Condition)>; 3] = [None; 3];
    let slot = |f: RateForm| RateForm::ALL.iter().position(|g| *g == f).expect("listed");
    for &(c, v) in observed {
        if !c.is_applicable(class) {
            return Err(InferenceError::NotApplicable(c));
        }
        let i = slot(c.form());
        match known[i] {
            Some((prev, other)) if prev != v => {
                return Err(InferenceError::Contradictory(other, c))
            }
            Some(_) => {}
            None => known[i] = Some((v, c)),
        }
    }
    let a = known[slot(RateForm::Coherence)].map(|k| k.0);
    let b = known[slot(RateForm::Population)].map(|k| k.0);
    let c = known[slot(RateForm::Volume)].map(|k| k.0);

    if c == Some(true) && a == Some(false) && b == Some(false) {
        return Err(InferenceError::Inconsistent(
            "bloch ⇒ trace1 ∨ trace2 (γ′+2γ3 < 0 and γ′ ≥ 0 force γ′+4γ3 < 0)",
        ));
    }
    if c == Some(false) && a == Some(true) && b == Some(true) {
        return Err(InferenceError::Inconsistent(
            "trace1 ∧ trace2 ⇒ bloch (γ′+2γ3 is the mean of γ′+4γ3 and γ′)",
        ));
    }

    let mut out = Vec::new();
    let mut push = |k: LinearConstraint| {
        if !out.contains(&k) {
            out.push(k);
        }
    };
    for (form, v) in [
        (RateForm::Population, b),
        (RateForm::Volume, c),
        (RateForm::Coherence, a),
    ] {
        if let Some(v) = v {
            push(LinearConstraint::from_form(form, v));
        }
    }
    let gamma3 = |rel| LinearConstraint::new([0.0, 0.0, 1.0], rel);
    let gamma_prime = |rel| LinearConstraint::new([1.0, 1.0, 0.0], rel);
    match (a, b, c) {
        (Some(true), _, Some(false)) => {
            push(gamma3(Relation::Less));
            push(gamma_prime(Relation::Greater));
        }
        (Some(false), _, Some(true)) => {
            push(gamma3(Relation::Greater));
            push(gamma_prime(Relation::Less));
        }
        _ => {}
    }
    match (a, b, c) {
        (None, Some(false), Some(true)) => {
            push(LinearConstraint::from_form(RateForm::Coherence, true));
            push(gamma3(Relation::Less));
        }
        (_, Some(false), Some(true)) => push(gamma3(Relation::Less)),
        (None, Some(true), Some(false)) => {
            push(LinearConstraint::from_form(RateForm::Coherence, false));
            push(gamma3(Relation::Greater));
        }
        (_, Some(true), Some(false)) => push(gamma3(Relation::Greater)),
        _ => {}
    }
    match (a, b, c) {
        (Some(false), Some(true), _) => push(gamma3(Relation::Greater)),
        (Some(true), Some(false), _) => push(gamma3(Relation::Less)),
        (Some(false), Some(false), None) => {
            push(LinearConstraint::from_form(RateForm::Volume, false))
        }
        (Some(true), Some(true), None) => push(LinearConstraint::from_form(RateForm::Volume, true)),
        _ => {}
    }
    Ok(out)
}

/// One cell of a (γ′, γ₃) region sweep; each condition is evaluated in the
/// narrowest class where it applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCell {
    pub gamma_prime: f64,
    pub gamma3: f64,
    pub flags: [bool; 12],
}

impl RegionCell {
    pub fn new(gamma_prime: f64, gamma3: f64, eps_pred: f64) -> Self {
        let mut flags = [false; 12];
        for c in Condition::ALL {
            flags[c as usize] = predicates_parts(gamma_prime, gamma3, &c.home_class(), eps_pred)
                .get(c)
                .holds();
        }
        Self {
            gamma_prime,
            gamma3,
            flags,
        }
    }

    pub fn get(&self, c: Condition) -> bool {
        self.flags[c as usize]
    }
}

fn linspace(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }
}

/// Evaluates every condition on a `resolution × resolution` grid; γ′ varies slowest.
pub fn region_sweep(
    gamma_prime_range: (f64, f64),
    gamma3_range: (f64, f64),
    resolution: usize,
    eps_pred: f64,
    exec: Execution,
) -> Vec<RegionCell> {
    let n = resolution.max(2);
    let idx: Vec<usize> = (0..n * n).collect();
    par::map(exec, &idx, |&k| {
        let gp = linspace(gamma_prime_range.0, gamma_prime_range.1, n, k / n);
        let g3 = linspace(gamma3_range.0, gamma3_range.1, n, k % n);
        RegionCell::new(gp, g3, eps_pred)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub cell: RegionCell,
}

/// The parametric curve t ↦ (γ′(t), γ₃(t)) of a model with the region flags along it.
pub fn overlay_curve(
    model: &RateModel,
    grid: &TimeGrid,
    eps_pred: f64,
    exec: Execution,
) -> Result<Vec<CurvePoint>, RateError> {
    let samples = model.eval_many(&grid.times(), exec)?;
    Ok(samples
        .iter()
        .map(|s| CurvePoint {
            t: s.t,
            cell: RegionCell::new(s.gamma_prime(), s.gamma3, eps_pred),
        })
        .collect())
}
