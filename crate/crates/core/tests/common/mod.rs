//! Random rate models shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use phasecov::conditions::DynamicsClass;
use phasecov::evolution::{cp_series, integrate_kernels, TimeGrid, CP_TOL};
use phasecov::rates::RateModel;
use phasecov::Execution;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    General,
    Commutative,
    Unital,
}

/// `a + b·f(c·t + d)` with f one of sin, cos, tanh and |a| + |b| ≤ `bound`.
pub fn term<R: Rng>(rng: &mut R, bound: f64, nonnegative: bool) -> String {
    let f = ["sin", "cos", "tanh"][rng.gen_range(0..3)];
    let b = rng.gen_range(-0.45 * bound..0.45 * bound);
    let a = if nonnegative {
        rng.gen_range(b.abs()..bound - b.abs())
    } else {
        rng.gen_range(-(bound - b.abs())..(bound - b.abs()))
    };
    let c = rng.gen_range(0.3..3.0);
    let d = rng.gen_range(0.0..TAU);
    format!("{a:.6} + {b:.6}*{f}({c:.6}*t + {d:.6})")
}

/// A model of the given family whose rates may change sign, |rates| ≤ 5.
pub fn signed_model<R: Rng>(rng: &mut R, family: Family) -> (RateModel, String) {
    let g3 = term(rng, 5.0, false);
    let omega = term(rng, 2.0, false);
    let (g1, g2) = match family {
        Family::General => (term(rng, 5.0, false), term(rng, 5.0, false)),
        Family::Unital => {
            let g = term(rng, 5.0, false);
            (g.clone(), g)
        }
        Family::Commutative => {
            let g = term(rng, 5.0, false);
            let kappa = rng.gen_range(0.05..0.95);
            (g.clone(), format!("{kappa:.6}*({g})"))
        }
    };
    let desc = format!("γ1={g1}; γ2={g2}; γ3={g3}; ω={omega}");
    (RateModel::expressions(&g1, &g2, &g3, &omega).unwrap(), desc)
}

/// `a + b·f(c·t + d)` with `a` comparable to `|b|`, so the rate dips below
/// zero for part of each period while its running integral keeps growing.
pub fn wavy_term<R: Rng>(rng: &mut R) -> String {
    let f = ["sin", "cos", "tanh"][rng.gen_range(0..3)];
    let b: f64 = rng.gen_range(0.5..2.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let a = rng.gen_range(0.3..1.2) * b.abs();
    let c = rng.gen_range(0.3..3.0);
    let d = rng.gen_range(0.0..TAU);
    format!("{a:.6} + {b:.6}*{f}({c:.6}*t + {d:.6})")
}

/// Like [`signed_model`] but built from [`wavy_term`]s.
pub fn wavy_model<R: Rng>(rng: &mut R, family: Family) -> (RateModel, String) {
    let g3 = wavy_term(rng);
    let omega = term(rng, 2.0, false);
    let (g1, g2) = match family {
        Family::General => (wavy_term(rng), wavy_term(rng)),
        Family::Unital => {
            let g = wavy_term(rng);
            (g.clone(), g)
        }
        Family::Commutative => {
            let g = wavy_term(rng);
            let kappa = rng.gen_range(0.05..0.95);
            (g.clone(), format!("{kappa:.6}*({g})"))
        }
    };
    let desc = format!("γ1={g1}; γ2={g2}; γ3={g3}; ω={omega}");
    (RateModel::expressions(&g1, &g2, &g3, &omega).unwrap(), desc)
}

/// Draws [`wavy_model`]s until one whose map stays completely positive on `grid`.
pub fn physical_model<R: Rng>(rng: &mut R, family: Family, grid: &TimeGrid) -> (RateModel, String) {
    loop {
        let (m, desc) = wavy_model(rng, family);
        let table = integrate_kernels(&m, grid, Execution::Sequential).unwrap();
        if cp_series(&table, CP_TOL, Execution::Sequential)
            .iter()
            .all(|r| r.passed)
        {
            return (m, desc);
        }
    }
}

/// A model with non-negative rates of the given family.
pub fn markovian_model<R: Rng>(rng: &mut R, family: Family) -> (RateModel, String) {
    let g3 = term(rng, 2.5, true);
    let omega = term(rng, 2.0, false);
    let (g1, g2) = match family {
        Family::General => (term(rng, 2.5, true), term(rng, 2.5, true)),
        Family::Unital => {
            let g = term(rng, 2.5, true);
            (g.clone(), g)
        }
        Family::Commutative => {
            let g = term(rng, 2.5, true);
            let kappa = rng.gen_range(0.05..0.95);
            (g.clone(), format!("{kappa:.6}*({g})"))
        }
    };
    let desc = format!("γ1={g1}; γ2={g2}; γ3={g3}; ω={omega}");
    (RateModel::expressions(&g1, &g2, &g3, &omega).unwrap(), desc)
}

pub fn family_of(class: &DynamicsClass) -> Family {
    match class {
        DynamicsClass::General => Family::General,
        DynamicsClass::Commutative { .. } => Family::Commutative,
        DynamicsClass::Unital => Family::Unital,
    }
}
