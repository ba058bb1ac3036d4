//! Numerical non-Markovianity indicators along a trajectory, and the sign of
//! their time derivative.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

use crate::conditions::{Condition, DynamicsClass};
use crate::evolution::{apply_map_unchecked as apply_map, EvolutionError, Kernels, Trajectory};
use crate::state::{cross_entropy_diagonal, trace_distance, QubitState, StateError};

/// Dead band of [`derivative_sign`]. Indicator series scale it by their own
/// magnitude at each grid point, so detection survives decayed signals.
pub const EPS_SIGN: f64 = 1e-9;
/// Changes of an indicator between neighbouring grid points smaller than this
/// are rounding noise, since every indicator is computed from O(1) state
/// entries. A point is only flagged when the rate moves the indicator by more
/// than this across the central-difference stencil.
pub const RESOLUTION_FLOOR: f64 = 1e-12;

fn resolved(rate: f64, h: f64) -> bool {
    rate.abs() * 2.0 * h >= RESOLUTION_FLOOR
}
/// Default coherence of the coherence probe.
pub const PROBE_ALPHA: f64 = 0.45;
/// The coherence probe never exceeds this fraction of the positivity bound.
pub const PROBE_CAP_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndicatorError {
    #[error("series of length {0} is too short for a derivative (need 3)")]
    TooShort(usize),
    #[error("indicator `{id}` does not apply to {class} dynamics")]
    NotApplicable {
        id: IndicatorId,
        class: DynamicsClass,
    },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndicatorId {
    EntropyProduction,
    PurityRate,
    TraceDistanceXy,
    TraceDistanceZ,
    BlochVolume,
    MapEigOffdiag,
    MapEigZ,
    L1,
    Rec,
}

impl IndicatorId {
    pub const ALL: [IndicatorId; 9] = [
        IndicatorId::EntropyProduction,
        IndicatorId::PurityRate,
        IndicatorId::TraceDistanceXy,
        IndicatorId::TraceDistanceZ,
        IndicatorId::BlochVolume,
        IndicatorId::MapEigOffdiag,
        IndicatorId::MapEigZ,
        IndicatorId::L1,
        IndicatorId::Rec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndicatorId::EntropyProduction => "entropy_production",
            IndicatorId::PurityRate => "purity_rate",
            IndicatorId::TraceDistanceXy => "trace_distance_xy",
            IndicatorId::TraceDistanceZ => "trace_distance_z",
            IndicatorId::BlochVolume => "bloch_volume",
            IndicatorId::MapEigOffdiag => "map_eig_offdiag",
            IndicatorId::MapEigZ => "map_eig_z",
            IndicatorId::L1 => "l1",
            IndicatorId::Rec => "rec",
        }
    }

    pub fn is_applicable(self, class: &DynamicsClass) -> bool {
        match self {
            IndicatorId::EntropyProduction | IndicatorId::MapEigOffdiag | IndicatorId::MapEigZ => {
                class.is_commutative()
            }
            IndicatorId::PurityRate => class.is_unital(),
            _ => true,
        }
    }
}

impl fmt::Display for IndicatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values of one indicator on the grid with their derivative and detection flags.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub id: IndicatorId,
    /// Label of the probe state or pair used, e.g. `"coherence"`.
    pub probe: &'static str,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivative: Vec<f64>,
    pub detection: Vec<bool>,
    /// Closed-form derivative where one is available.
    pub reference: Option<Vec<f64>>,
    pub warning: Option<String>,
}

impl IndicatorSeries {
    fn from_values(
        id: IndicatorId,
        probe: &'static str,
        times: Vec<f64>,
        values: Vec<f64>,
        eps_sign: f64,
    ) -> Result<Self, IndicatorError> {
        let h = step(&times)?;
        let derivative = derivative(&values, h)?;
        let detection = derivative
            .iter()
            .zip(&values)
            .map(|(d, v)| *d > eps_sign * v.abs() && resolved(*d, h))
            .collect();
        Ok(Self {
            id,
            probe,
            times,
            values,
            derivative,
            detection,
            reference: None,
            warning: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn any_detected(&self) -> bool {
        self.detection.iter().any(|d| *d)
    }

    /// The rate whose sign decides detection at grid point `k`: σ itself for
    /// entropy production, the time derivative otherwise.
    pub fn detected_rate(&self, k: usize) -> f64 {
        match self.id {
            IndicatorId::EntropyProduction => self.values[k],
            _ => self.derivative[k],
        }
    }

    /// Column name in a wide table, `<id>` or `<id>_<probe>` for non-default probes.
    pub fn column(&self) -> String {
        match self.probe {
            "" => self.id.name().to_string(),
            p => format!("{}_{}", self.id.name(), p),
        }
    }
}

fn step(times: &[f64]) -> Result<f64, IndicatorError> {
    if times.len() < 3 {
        return Err(IndicatorError::TooShort(times.len()));
    }
    Ok(times[1] - times[0])
}

/// Central differences inside, second-order one-sided differences at the ends.
pub fn derivative(values: &[f64], h: f64) -> Result<Vec<f64>, IndicatorError> {
    let n = values.len();
    if n < 3 {
        return Err(IndicatorError::TooShort(n));
    }
    let mut d = Vec::with_capacity(n);
    d.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h));
    for k in 1..n - 1 {
        d.push((values[k + 1] - values[k - 1]) / (2.0 * h));
    }
    d.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h));
    Ok(d)
}

/// `true` where the derivative exceeds `eps_sign`.
pub fn derivative_sign(values: &[f64], h: f64, eps_sign: f64) -> Result<Vec<bool>, IndicatorError> {
    Ok(derivative(values, h)?
        .into_iter()
        .map(|d| d > eps_sign)
        .collect())
}

/// Initial states for which each indicator's detection condition is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probes {
    /// Stationary populations with non-zero coherence.
    pub coherence: QubitState,
    /// Incoherent state away from the stationary populations.
    pub diagonal: QubitState,
}

impl Probes {
    /// Default probes for a class. The coherence magnitude is capped to
    /// [`PROBE_CAP_FRACTION`] of the positivity bound at the stationary populations.
    pub fn for_class(
        class: &DynamicsClass,
        alpha0: Complex64,
        diagonal_p1: Option<f64>,
    ) -> Result<Self, IndicatorError> {
        let p1 = class.stationary_p1().unwrap_or(0.5);
        let cap = PROBE_CAP_FRACTION * (p1 * (1.0 - p1)).sqrt();
        let alpha = if alpha0.norm() > cap {
            alpha0 * (cap / alpha0.norm())
        } else {
            alpha0
        };
        let coherence = QubitState::new(p1, alpha)?;
        let diag_p1 = diagonal_p1.unwrap_or(if class.is_unital() || !class.is_commutative() {
            1.0
        } else {
            1.0 - p1
        });
        Ok(Self {
            coherence,
            diagonal: QubitState::diagonal(diag_p1)?,
        })
    }

    pub fn default_for(class: &DynamicsClass) -> Result<Self, IndicatorError> {
        Self::for_class(class, Complex64::new(PROBE_ALPHA, 0.0), None)
    }
}

fn require(id: IndicatorId, class: &DynamicsClass) -> Result<(), IndicatorError> {
    if id.is_applicable(class) {
        Ok(())
    } else {
        Err(IndicatorError::NotApplicable { id, class: *class })
    }
}

/// Entropy production σ(t) = d/dt tr[ρ ln ρ_κ] + dS/dt relative to the
/// stationary state. Detection is `σ < −eps_sign·D(ρ‖ρ_κ)`.
pub fn entropy_production_series(
    traj: &Trajectory,
    class: &DynamicsClass,
    probe: &'static str,
    eps_sign: f64,
) -> Result<IndicatorSeries, IndicatorError> {
    let id = IndicatorId::EntropyProduction;
    require(id, class)?;
    let p1s = class.stationary_p1().expect("commutative");
    let h = step(&traj.times)?;
    let f = traj
        .states
        .iter()
        .map(|s| Ok(cross_entropy_diagonal(s, p1s)? + s.von_neumann_entropy()))
        .collect::<Result<Vec<f64>, StateError>>()?;
    let sigma = derivative(&f, h)?;
    let d_sigma = derivative(&sigma, h)?;
    // f = −D(ρ‖ρ_κ), so the band scales with the distance to the stationary state
    let detection = sigma
        .iter()
        .zip(&f)
        .map(|(s, f)| *s < -eps_sign * f.abs() && resolved(*s, h))
        .collect();
    Ok(IndicatorSeries {
        id,
        probe,
        times: traj.times.clone(),
        values: sigma,
        derivative: d_sigma,
        detection,
        reference: None,
        warning: None,
    })
}

/// Purity P(t) and its rate; unital dynamics only.
pub fn purity_rate_series(
    traj: &Trajectory,
    class: &DynamicsClass,
    probe: &'static str,
    eps_sign: f64,
) -> Result<IndicatorSeries, IndicatorError> {
    let id = IndicatorId::PurityRate;
    require(id, class)?;
    let values = traj.states.iter().map(|s| s.purity()).collect();
    let mut series = IndicatorSeries::from_values(id, probe, traj.times.clone(), values, eps_sign)?;
    let h = step(&traj.times)?;
    // purity never drops below 1/2, so the band is measured from there
    for ((det, d), v) in series
        .detection
        .iter_mut()
        .zip(&series.derivative)
        .zip(&series.values)
    {
        *det = *d > eps_sign * (v - 0.5).abs() && resolved(*d, h);
    }
    let rho0 = traj.initial();
    let dev2 = (rho0.p1() - 0.5).powi(2);
    let coh2 = rho0.alpha().norm_sqr();
    series.reference = Some(
        traj.kernels
            .iter()
            .zip(&traj.rates)
            .map(|(k, r)| {
                let gamma = 0.5 * r.gamma_prime();
                let e = (-k.gamma).exp();
                -4.0 * e
                    * (gamma * e * dev2
                        + (0.5 * gamma + r.gamma3) * coh2 * (-2.0 * k.gamma_tilde).exp())
            })
            .collect(),
    );
    Ok(series)
}

/// Trace distance of the pair {|+⟩, |−⟩} and of the pair {diag(1,0), diag(0,1)}.
pub fn trace_distance_series(
    times: &[f64],
    kernels: &[Kernels],
    eps_sign: f64,
) -> Result<(IndicatorSeries, IndicatorSeries), IndicatorError> {
    let ground = QubitState::diagonal(0.0)?;
    let excited = QubitState::diagonal(1.0)?;
    let (plus, minus) = (QubitState::plus(), QubitState::minus());
    let mut xy = Vec::with_capacity(kernels.len());
    let mut z = Vec::with_capacity(kernels.len());
    for k in kernels {
        xy.push(trace_distance(&apply_map(k, &plus), &apply_map(k, &minus)));
        z.push(trace_distance(
            &apply_map(k, &ground),
            &apply_map(k, &excited),
        ));
    }
    Ok((
        IndicatorSeries::from_values(
            IndicatorId::TraceDistanceXy,
            "",
            times.to_vec(),
            xy,
            eps_sign,
        )?,
        IndicatorSeries::from_values(IndicatorId::TraceDistanceZ, "", times.to_vec(), z, eps_sign)?,
    ))
}

/// Affine Bloch-vector form `r ↦ Λr + c` of the map, reconstructed from the
/// images of the maximally mixed state and three axis states. The images are
/// taken formally, so non-CP kernels are allowed.
pub fn bloch_map(k: &Kernels) -> Result<(Matrix3<f64>, Vector3<f64>), IndicatorError> {
    let v = |s: &QubitState| -> Result<Vector3<f64>, IndicatorError> {
        let b = apply_map(k, s).bloch();
        Ok(Vector3::new(b.x, b.y, b.z))
    };
    let c = v(&QubitState::maximally_mixed())?;
    let ex = v(&QubitState::plus())? - c;
    let ey = v(&QubitState::new(0.5, Complex64::new(0.0, -0.5))?)? - c;
    let ez = v(&QubitState::diagonal(0.0)?)? - c;
    Ok((Matrix3::from_columns(&[ex, ey, ez]), c))
}

/// Volume of the image of the Bloch ball relative to the ball, det Λ.
pub fn bloch_volume_series(
    times: &[f64],
    kernels: &[Kernels],
    eps_sign: f64,
) -> Result<IndicatorSeries, IndicatorError> {
    let values = kernels
        .iter()
        .map(|k| Ok(bloch_map(k)?.0.determinant()))
        .collect::<Result<Vec<f64>, IndicatorError>>()?;
    IndicatorSeries::from_values(
        IndicatorId::BlochVolume,
        "",
        times.to_vec(),
        values,
        eps_sign,
    )
}

/// Moduli of the map eigenvalues: |λ₁| on the coherences and |λ₃| on the populations.
pub fn map_spectrum_series(
    times: &[f64],
    kernels: &[Kernels],
    class: &DynamicsClass,
    eps_sign: f64,
) -> Result<(IndicatorSeries, IndicatorSeries), IndicatorError> {
    require(IndicatorId::MapEigOffdiag, class)?;
    let mut off = Vec::with_capacity(kernels.len());
    let mut z = Vec::with_capacity(kernels.len());
    for k in kernels {
        let (m, _) = bloch_map(k)?;
        let xy_det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        off.push(xy_det.max(0.0).sqrt());
        z.push(m[(2, 2)].abs());
    }
    Ok((
        IndicatorSeries::from_values(
            IndicatorId::MapEigOffdiag,
            "",
            times.to_vec(),
            off,
            eps_sign,
        )?,
        IndicatorSeries::from_values(IndicatorId::MapEigZ, "", times.to_vec(), z, eps_sign)?,
    ))
}

pub fn l1_series(traj: &Trajectory, eps_sign: f64) -> Result<IndicatorSeries, IndicatorError> {
    let values = traj.states.iter().map(|s| s.l1_coherence()).collect();
    let mut s =
        IndicatorSeries::from_values(IndicatorId::L1, "", traj.times.clone(), values, eps_sign)?;
    if traj.initial().alpha().norm() == 0.0 {
        s.warning = Some("probe state has no coherence; l1 series is identically zero".into());
    }
    Ok(s)
}

pub fn rec_series(traj: &Trajectory, eps_sign: f64) -> Result<IndicatorSeries, IndicatorError> {
    let values = traj
        .states
        .iter()
        .map(|s| s.rel_entropy_coherence())
        .collect();
    let mut s =
        IndicatorSeries::from_values(IndicatorId::Rec, "", traj.times.clone(), values, eps_sign)?;
    if traj.initial().alpha().norm() == 0.0 {
        s.warning = Some("probe state has no coherence; rec series is identically zero".into());
    }
    Ok(s)
}

/// One numeric series paired with the analytic condition it should reproduce.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub condition: Condition,
    pub series: IndicatorSeries,
}

/// All series applicable to `class`, each paired with its analytic condition.
///
/// `coherence` and `diagonal` are trajectories of the two probe states
/// under the same kernels.
pub fn applicable_series(
    coherence: &Trajectory,
    diagonal: &Trajectory,
    class: &DynamicsClass,
    eps_sign: f64,
) -> Result<Vec<PairedSeries>, IndicatorError> {
    let times = &coherence.times;
    let kernels = &coherence.kernels;
    let mut out = Vec::new();
    let mut add = |condition, series| out.push(PairedSeries { condition, series });
    let (xy, z) = trace_distance_series(times, kernels, eps_sign)?;
    add(Condition::Trace1, xy);
    add(Condition::Trace2, z);
    add(
        Condition::Bloch,
        bloch_volume_series(times, kernels, eps_sign)?,
    );
    add(Condition::L1, l1_series(coherence, eps_sign)?);
    if class.is_commutative() {
        add(
            Condition::Entropy1,
            entropy_production_series(coherence, class, "coherence", eps_sign)?,
        );
        add(
            Condition::Entropy2,
            entropy_production_series(diagonal, class, "diagonal", eps_sign)?,
        );
        let (off, z) = map_spectrum_series(times, kernels, class, eps_sign)?;
        if class.is_unital() {
            add(Condition::Singular1, off.clone());
            add(Condition::Singular2, z.clone());
        }
        add(Condition::Eigen1, off);
        add(Condition::Eigen2, z);
        // with stationary populations REC tracks the coherence magnitude
        add(Condition::Trace1, rec_series(coherence, eps_sign)?);
    }
    if class.is_unital() {
        add(
            Condition::Purity1,
            purity_rate_series(coherence, class, "coherence", eps_sign)?,
        );
        add(
            Condition::Purity2,
            purity_rate_series(diagonal, class, "diagonal", eps_sign)?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{evolve_unchecked, integrate_kernels, TimeGrid};
    use crate::par::Execution;
    use crate::rates::RateModel;

    fn evolve_unchecked_ok(
        t: &crate::evolution::KernelTable,
        rho: &QubitState,
    ) -> Result<Trajectory, IndicatorError> {
        Ok(evolve_unchecked(t, rho))
    }

    fn table(m: &RateModel, t: f64, steps: usize) -> crate::evolution::KernelTable {
        integrate_kernels(m, &TimeGrid::new(t, steps).unwrap(), Execution::Sequential).unwrap()
    }

    #[test]
    fn derivative_sign_examples() {
        assert!(derivative_sign(&[1.0; 10], 0.1, EPS_SIGN)
            .unwrap()
            .iter()
            .all(|d| !d));
        let h = 0.01;
        let v: Vec<f64> = (0..200).map(|k| (0.1 * k as f64 * h).exp()).collect();
        assert!(derivative_sign(&v, h, EPS_SIGN).unwrap().iter().all(|d| *d));
        let tiny: Vec<f64> = (0..50).map(|k| 1e-12 * k as f64).collect();
        assert!(derivative_sign(&tiny, 0.1, EPS_SIGN)
            .unwrap()
            .iter()
            .all(|d| !d));
        assert!(matches!(
            derivative(&[1.0, 2.0], 0.1),
            Err(IndicatorError::TooShort(2))
        ));
    }

    #[test]
    fn derivative_is_second_order_at_the_ends() {
        let h = 0.01;
        let v: Vec<f64> = (0..10).map(|k| (k as f64 * h).powi(2)).collect();
        let d = derivative(&v, h).unwrap();
        for (k, dk) in d.iter().enumerate() {
            assert!((dk - 2.0 * k as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_examples() {
        let t = table(&RateModel::constant(0.0, 0.0, -0.1, 0.0), 5.0, 500);
        let (xy, z) = trace_distance_series(&t.grid.times(), &t.kernels, EPS_SIGN).unwrap();
        assert!(xy.detection.iter().all(|d| *d));
        assert!(!z.any_detected());
        for (tt, v) in xy.times.iter().zip(&xy.values) {
            assert!((v - (0.1 * tt).exp()).abs() < 1e-12);
        }

        let t = table(
            &RateModel::expressions("2", "2", "-tanh(t)", "0").unwrap(),
            10.0,
            10_000,
        );
        let (xy, z) = trace_distance_series(&t.grid.times(), &t.kernels, EPS_SIGN).unwrap();
        assert!(!xy.any_detected() && !z.any_detected());
    }

    #[test]
    fn bloch_volume_examples() {
        let t = table(&RateModel::constant(-0.1, -0.1, 0.0, 0.0), 2.0, 200);
        let v = bloch_volume_series(&t.grid.times(), &t.kernels, EPS_SIGN).unwrap();
        assert!(v.detection.iter().all(|d| *d));
        for (tt, x) in v.times.iter().zip(&v.values) {
            assert!((x - (0.2 * tt).exp()).abs() < 1e-12);
        }
        let t = table(
            &RateModel::expressions("2", "2", "-tanh(t)", "0").unwrap(),
            10.0,
            10_000,
        );
        let v = bloch_volume_series(&t.grid.times(), &t.kernels, EPS_SIGN).unwrap();
        assert!(!v.any_detected());
    }

    #[test]
    fn map_spectrum_on_cosine() {
        let m = RateModel::expressions("cos(t)", "cos(t)", "0", "0").unwrap();
        let t = table(&m, 6.0, 6000);
        let (off, z) = map_spectrum_series(
            &t.grid.times(),
            &t.kernels,
            &DynamicsClass::Unital,
            EPS_SIGN,
        )
        .unwrap();
        for ((tt, d), o) in z.times.iter().zip(&z.detection).zip(&off.detection) {
            if (tt.cos()).abs() > 1e-2 {
                assert_eq!(*d, tt.cos() < 0.0, "t={tt}");
                assert_eq!(*o, tt.cos() < 0.0, "t={tt}");
            }
        }
        assert!(map_spectrum_series(
            &t.grid.times(),
            &t.kernels,
            &DynamicsClass::General,
            EPS_SIGN
        )
        .is_err());
    }

    #[test]
    fn purity_rate_example() {
        let m = RateModel::constant(1.0, 1.0, -1.0, 0.0);
        let t = table(&m, 2.0, 2000);
        let traj = evolve_unchecked_ok(&t, &QubitState::plus()).unwrap();
        let s = purity_rate_series(&traj, &DynamicsClass::Unital, "coherence", EPS_SIGN).unwrap();
        let r = s.reference.as_ref().unwrap();
        for (k, tt) in s.times.iter().enumerate() {
            assert!((r[k] - 0.5 * tt.exp()).abs() < 1e-10);
            assert!((s.derivative[k] - r[k]).abs() < 1e-5);
        }
        assert!(s.detection.iter().all(|d| *d));
        let mixed = evolve_unchecked_ok(&t, &QubitState::maximally_mixed()).unwrap();
        let s = purity_rate_series(&mixed, &DynamicsClass::Unital, "", EPS_SIGN).unwrap();
        assert!(s.derivative.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn entropy_production_examples() {
        let unital = DynamicsClass::Unital;
        let m = RateModel::constant(1.0, 1.0, 0.3, 0.0);
        let t = table(&m, 3.0, 3000);
        let traj = evolve_unchecked_ok(&t, &QubitState::diagonal(0.9).unwrap()).unwrap();
        let s = entropy_production_series(&traj, &unital, "", EPS_SIGN).unwrap();
        assert!(s.values.iter().all(|v| *v >= -1e-9));

        // coherence grows as e^{t/2}; the probe stays a valid state up to t ≈ 0.21
        let m = RateModel::constant(1.0, 1.0, -1.0, 0.0);
        let probe = Probes::default_for(&unital).unwrap().coherence;
        let traj = evolve_unchecked_ok(&table(&m, 0.2, 2000), &probe).unwrap();
        assert!(traj.states.iter().all(|s| s.is_valid(0.0)));
        let s = entropy_production_series(&traj, &unital, "coherence", EPS_SIGN).unwrap();
        assert!(s.detection.iter().all(|d| *d));
        assert!(entropy_production_series(&traj, &DynamicsClass::General, "", EPS_SIGN).is_err());
    }

    #[test]
    fn entropy_production_commutative_cosine() {
        let class = DynamicsClass::commutative(0.5);
        let m = RateModel::expressions("cos(t)", "0.5*cos(t)", "0", "0").unwrap();
        let t = table(&m, 10.0, 10_000);
        let probes = Probes::default_for(&class).unwrap();
        assert!((probes.diagonal.p1() - 2.0 / 3.0).abs() < 1e-15);
        let traj = evolve_unchecked_ok(&t, &probes.diagonal).unwrap();
        let s = entropy_production_series(&traj, &class, "diagonal", EPS_SIGN).unwrap();
        for (k, tt) in s.times.iter().enumerate().skip(1) {
            if tt.cos().abs() > 2e-3 {
                assert_eq!(s.detection[k], tt.cos() < 0.0, "t={tt}");
            }
        }
    }

    #[test]
    fn l1_and_rec() {
        let m = RateModel::constant(0.0, 0.0, -0.1, 0.0);
        let t = table(&m, 2.0, 200);
        let traj = evolve_unchecked_ok(&t, &QubitState::plus()).unwrap();
        let l1 = l1_series(&traj, EPS_SIGN).unwrap();
        assert!(l1.detection.iter().all(|d| *d));
        assert!(l1.warning.is_none());
        let flat = evolve_unchecked_ok(&t, &QubitState::diagonal(0.3).unwrap()).unwrap();
        let l1 = l1_series(&flat, EPS_SIGN).unwrap();
        assert!(l1.values.iter().all(|v| *v == 0.0) && l1.warning.is_some());
        let rec = rec_series(&flat, EPS_SIGN).unwrap();
        assert!(rec.values.iter().all(|v| *v == 0.0) && !rec.any_detected());
    }

    #[test]
    fn probes_respect_positivity() {
        for kappa in [0.0, 0.01, 0.2, 0.5, 0.9] {
            let p = Probes::default_for(&DynamicsClass::commutative(kappa)).unwrap();
            let cap = p.coherence.p1() * p.coherence.p0();
            assert!(p.coherence.alpha().norm_sqr() < cap || cap == 0.0);
        }
        let p = Probes::default_for(&DynamicsClass::General).unwrap();
        assert_eq!(p.coherence.alpha(), Complex64::new(0.45, 0.0));
        assert_eq!(
            Probes::default_for(&DynamicsClass::Unital)
                .unwrap()
                .diagonal
                .p1(),
            1.0
        );
    }
}
