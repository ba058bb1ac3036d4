//! Globally adaptive 15-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error(
    "quadrature did not converge after {subdivisions} subdivisions: \
     estimate {estimate:e}, error estimate {error:e} (target {target:e})"
)]
pub struct QuadratureError {
    pub estimate: f64,
    pub error: f64,
    pub target: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of live panels.
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_panels: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Error floor from round-off; the panel cannot be improved below it.
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.error - self.floor).total_cmp(&(other.error - other.floor))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let w = half.abs();
    let value = kronrod * half;
    res_abs *= w;
    res_asc *= w;
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    Panel {
        a,
        b,
        value,
        error: error.max(floor),
        floor,
    }
}

/// Integrates `f` over `[a, b]`, pre-splitting into panels no wider than
/// `max_panel_width`, then bisecting the worst panel until the summed error
/// estimate meets `max(abs_tol, rel_tol·|I|)`.
///
/// When every remaining panel sits at its round-off floor the result is
/// accepted as the best attainable in double precision.
pub fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    max_panel_width: f64,
    opts: &QuadratureOptions,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let n0 = ((b - a) / max_panel_width).abs().ceil().max(1.0) as usize;
    let width = (b - a) / n0 as f64;
    let mut heap = BinaryHeap::with_capacity(2 * n0);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut floor = 0.0;
    for i in 0..n0 {
        let lo = a + width * i as f64;
        let hi = if i + 1 == n0 { b } else { lo + width };
        let p = gauss_kronrod(&f, lo, hi);
        value += p.value;
        error += p.error;
        floor += p.floor;
        heap.push(p);
    }
    let mut evaluations = 15 * n0;

    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target || error <= 2.0 * floor {
            return Ok(QuadratureResult {
                value,
                error,
                evaluations,
            });
        }
        let worst = match heap.peek() {
            Some(p) if p.error > p.floor => heap.pop().expect("peeked"),
            _ => {
                // everything is round-off limited
                return Ok(QuadratureResult {
                    value,
                    error,
                    evaluations,
                });
            }
        };
        if heap.len() + 2 > opts.max_panels {
            return Err(QuadratureError {
                estimate: value,
                error,
                target,
                subdivisions: heap.len(),
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            let mut frozen = worst;
            frozen.floor = frozen.error;
            floor += frozen.error - worst.floor;
            heap.push(frozen);
            continue;
        }
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);
    }
}
