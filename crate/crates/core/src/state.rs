//! Single-qubit states in the population/coherence parametrization and the
//! scalar information quantities built on them.
//!
//! A state is stored as the pair `(p1, alpha)` of the density matrix
//!
//! ```text
//!     ρ = | 1 - p1   alpha |
//!         | alpha*   p1    |
//! ```
//!
//! so the trace is 1 by construction. Entropies are in nats.

use num_complex::Complex64;
use thiserror::Error;

/// Invariant violations smaller than this are clamped away by the constructors.
pub const STATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("population p1 = {p1} outside [0, 1] (tolerance {tol:e})")]
    PopulationOutOfRange { p1: f64, tol: f64 },
    #[error("coherence |alpha|^2 = {abs2} exceeds p1(1-p1) = {cap} (tolerance {tol:e})")]
    NotPositive { abs2: f64, cap: f64, tol: f64 },
    #[error("state has non-finite entries")]
    NonFinite,
    #[error("reference state is rank deficient (Bloch norm {norm}); relative entropy diverges")]
    RankDeficientReference { norm: f64 },
}

/// Bloch vector under the convention ρ = (I + r·σ)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn sub(&self, other: &BlochVector) -> BlochVector {
        BlochVector::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    p1: f64,
    alpha: Complex64,
}

impl QubitState {
    /// Builds a state, clamping invariant violations up to [`STATE_TOL`].
    pub fn new(p1: f64, alpha: Complex64) -> Result<Self, StateError> {
        Self::with_tolerance(p1, alpha, STATE_TOL)
    }

    /// Like [`QubitState::new`] with a caller-chosen clamping tolerance.
    pub fn with_tolerance(p1: f64, alpha: Complex64, tol: f64) -> Result<Self, StateError> {
        if !p1.is_finite() || !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(StateError::NonFinite);
        }
        if p1 < -tol || p1 > 1.0 + tol {
            return Err(StateError::PopulationOutOfRange { p1, tol });
        }
        let p1 = p1.clamp(0.0, 1.0);
        let cap = p1 * (1.0 - p1);
        let abs2 = alpha.norm_sqr();
        if abs2 - cap > tol {
            return Err(StateError::NotPositive { abs2, cap, tol });
        }
        let alpha = if abs2 > cap {
            // shrink onto the boundary of the Bloch ball
            if cap > 0.0 {
                alpha * (cap / abs2).sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else {
            alpha
        };
        Ok(Self { p1, alpha })
    }

    /// Stores `(p1, alpha)` without any validity check. Used for the images
    /// of non-physical maps, where indicators are still evaluated formally.
    pub fn unchecked(p1: f64, alpha: Complex64) -> Self {
        Self { p1, alpha }
    }

    /// Whether the invariants hold within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        (-tol..=1.0 + tol).contains(&self.p1)
            && self.alpha.norm_sqr() <= self.p1 * (1.0 - self.p1) + tol
    }

    pub fn diagonal(p1: f64) -> Result<Self, StateError> {
        Self::new(p1, Complex64::new(0.0, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        Self {
            p1: 0.5,
            alpha: Complex64::new(0.0, 0.0),
        }
    }

    /// |+⟩⟨+| with |+⟩ = (|0⟩ + |1⟩)/√2.
    pub fn plus() -> Self {
        Self {
            p1: 0.5,
            alpha: Complex64::new(0.5, 0.0),
        }
    }

    /// |−⟩⟨−| with |−⟩ = (|0⟩ − |1⟩)/√2.
    pub fn minus() -> Self {
        Self {
            p1: 0.5,
            alpha: Complex64::new(-0.5, 0.0),
        }
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p0(&self) -> f64 {
        1.0 - self.p1
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// Density matrix, row-major.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(1.0 - self.p1, 0.0), self.alpha],
            [self.alpha.conj(), Complex64::new(self.p1, 0.0)],
        ]
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector::new(
            2.0 * self.alpha.re,
            -2.0 * self.alpha.im,
            1.0 - 2.0 * self.p1,
        )
    }

    pub fn from_bloch(r: BlochVector) -> Result<Self, StateError> {
        Self::new(0.5 * (1.0 - r.z), Complex64::new(0.5 * r.x, -0.5 * r.y))
    }

    /// Eigenvalue half-splitting `x` with λ± = (1 ± x)/2; equals the Bloch norm.
    pub fn mixedness_parameter(&self) -> f64 {
        let d = 2.0 * self.p1 - 1.0;
        (4.0 * self.alpha.norm_sqr() + d * d).sqrt().min(1.0)
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let x = self.mixedness_parameter();
        (0.5 * (1.0 + x), 0.5 * (1.0 - x))
    }

    pub fn von_neumann_entropy(&self) -> f64 {
        let (hi, lo) = self.eigenvalues();
        -xlogx(hi) - xlogx(lo)
    }

    pub fn purity(&self) -> f64 {
        let p0 = 1.0 - self.p1;
        p0 * p0 + self.p1 * self.p1 + 2.0 * self.alpha.norm_sqr()
    }

    pub fn l1_coherence(&self) -> f64 {
        2.0 * self.alpha.norm()
    }

    /// Relative entropy of coherence, S(ρ_diag) − S(ρ).
    pub fn rel_entropy_coherence(&self) -> f64 {
        (binary_entropy(self.p1) - self.von_neumann_entropy()).max(0.0)
    }

    /// Quantum relative entropy S(ρ‖σ) = tr ρ ln ρ − tr ρ ln σ.
    pub fn rel_entropy_to(&self, reference: &QubitState) -> Result<f64, StateError> {
        let r_ref = reference.bloch();
        let norm = r_ref.norm();
        if norm >= 1.0 - STATE_TOL {
            return Err(StateError::RankDeficientReference { norm });
        }
        // ln σ = a·I + b·(r̂·σ) in the eigenbasis of σ
        let ln_hi = (0.5 * (1.0 + norm)).ln();
        let ln_lo = (0.5 * (1.0 - norm)).ln();
        let a = 0.5 * (ln_hi + ln_lo);
        let cross = if norm > 0.0 {
            0.5 * (ln_hi - ln_lo) * self.bloch().dot(&r_ref) / norm
        } else {
            0.0
        };
        let tr_rho_ln_sigma = a + cross;
        Ok((-self.von_neumann_entropy() - tr_rho_ln_sigma).max(0.0))
    }
}

/// `tr[ρ ln σ]` for a full-rank diagonal σ; used by the entropy-production indicator.
pub fn cross_entropy_diagonal(rho: &QubitState, sigma_p1: f64) -> Result<f64, StateError> {
    if sigma_p1 <= 0.0 || sigma_p1 >= 1.0 {
        return Err(StateError::RankDeficientReference {
            norm: (1.0 - 2.0 * sigma_p1).abs(),
        });
    }
    Ok(rho.p0() * (1.0 - sigma_p1).ln() + rho.p1() * sigma_p1.ln())
}

pub fn trace_distance(a: &QubitState, b: &QubitState) -> f64 {
    0.5 * a.bloch().sub(&b.bloch()).norm()
}

pub fn binary_entropy(p: f64) -> f64 {
    -xlogx(p) - xlogx(1.0 - p)
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn st(p1: f64, re: f64, im: f64) -> QubitState {
        QubitState::new(p1, Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn bloch_examples() {
        assert_eq!(st(0.5, 0.0, 0.0).bloch(), BlochVector::new(0.0, 0.0, 0.0));
        assert_eq!(st(0.0, 0.0, 0.0).bloch(), BlochVector::new(0.0, 0.0, 1.0));
        assert_eq!(st(0.5, 0.5, 0.0).bloch(), BlochVector::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn entropy_examples() {
        assert!((st(0.5, 0.0, 0.0).von_neumann_entropy() - LN_2).abs() < 1e-15);
        assert_eq!(st(0.0, 0.0, 0.0).von_neumann_entropy(), 0.0);
        let direct = -0.75 * 0.75f64.ln() - 0.25 * 0.25f64.ln();
        let s = st(0.5, 0.25, 0.0).von_neumann_entropy();
        assert!((s - direct).abs() < 1e-15);
        assert!((s - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn purity_examples() {
        assert_eq!(st(0.5, 0.0, 0.0).purity(), 0.5);
        assert_eq!(st(0.0, 0.0, 0.0).purity(), 1.0);
        assert_eq!(st(0.25, 0.0, 0.0).purity(), 0.625);
    }

    #[test]
    fn trace_distance_examples() {
        let a = st(0.3, 0.1, -0.2);
        assert_eq!(trace_distance(&a, &a), 0.0);
        assert!((trace_distance(&st(0.0, 0.0, 0.0), &st(1.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        let d = trace_distance(&st(0.0, 0.0, 0.0), &st(0.5, 0.5, 0.0));
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(st(0.3, 0.0, 0.0).l1_coherence(), 0.0);
        assert_eq!(st(0.5, 0.5, 0.0).l1_coherence(), 1.0);
        assert!((st(0.5, 0.3, 0.0).l1_coherence() - 0.6).abs() < 1e-15);

        assert_eq!(st(0.3, 0.0, 0.0).rel_entropy_coherence(), 0.0);
        assert!((st(0.5, 0.5, 0.0).rel_entropy_coherence() - LN_2).abs() < 1e-15);
        let rec = st(0.5, 0.25, 0.0).rel_entropy_coherence();
        assert!((rec - 0.1308).abs() < 1e-4);
    }

    #[test]
    fn relative_entropy_examples() {
        let s = st(0.3, 0.1, 0.05);
        assert!(s.rel_entropy_to(&s).unwrap().abs() < 1e-14);

        let pure = st(0.0, 0.0, 0.0);
        let mixed = QubitState::maximally_mixed();
        assert!((pure.rel_entropy_to(&mixed).unwrap() - LN_2).abs() < 1e-15);

        // diag(2/3, 1/3) against diag(1/3, 2/3): classical KL divergence
        let a = st(1.0 / 3.0, 0.0, 0.0);
        let b = st(2.0 / 3.0, 0.0, 0.0);
        let kl = (2.0 / 3.0) * 2f64.ln() + (1.0 / 3.0) * 0.5f64.ln();
        assert!((a.rel_entropy_to(&b).unwrap() - kl).abs() < 1e-15);
        assert!((kl - LN_2 / 3.0).abs() < 1e-15);

        assert!(matches!(
            mixed.rel_entropy_to(&pure),
            Err(StateError::RankDeficientReference { .. })
        ));
    }

    #[test]
    fn constructor_clamps_and_rejects() {
        let s = QubitState::new(1.0 + 5e-13, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(s.p1(), 1.0);
        assert!(QubitState::new(1.0 + 1e-9, Complex64::new(0.0, 0.0)).is_err());
        let s = QubitState::new(0.5, Complex64::new(0.5 + 1e-13, 0.0)).unwrap();
        assert!(s.alpha().norm_sqr() <= 0.25);
        assert!(matches!(
            QubitState::new(0.5, Complex64::new(0.6, 0.0)),
            Err(StateError::NotPositive { .. })
        ));
        assert!(QubitState::new(f64::NAN, Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn purity_entropy_limits() {
        for s in [st(0.0, 0.0, 0.0), st(1.0, 0.0, 0.0), QubitState::plus()] {
            assert!((s.purity() - 1.0).abs() < 1e-15);
            assert!(s.von_neumann_entropy().abs() < 1e-15);
        }
        let m = QubitState::maximally_mixed();
        assert_eq!(m.purity(), 0.5);
        assert!((m.von_neumann_entropy() - LN_2).abs() < 1e-15);
    }
}
