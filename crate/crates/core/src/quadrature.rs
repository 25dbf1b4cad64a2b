//! Adaptive Gauss–Kronrod (7, 15) quadrature for complex-valued integrands,
//! plus helpers for line segments, polylines and circles in the plane.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

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

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
    /// False when the interval budget ran out before the tolerance was met.
    pub converged: bool,
    /// True when the integrand produced a non-finite value.
    pub non_finite: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
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
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        let s = f1 + f2;
        kron += s * w;
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let value = kron * h;
    let err = ((kron - gauss) * h).norm();
    (value, err)
}

/// `∫_a^b f(s) ds` by globally adaptive bisection of the worst panel.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> QuadResult {
    let non_finite = Cell::new(false);
    let mut g = |s: f64| {
        let v = f(s);
        if !(v.re.is_finite() && v.im.is_finite()) {
            non_finite.set(true);
        }
        v
    };
    let (v0, e0) = gk15(&mut g, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut total = v0;
    let mut total_err = e0;
    let mut converged = false;
    while heap.len() < opts.max_intervals {
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.norm()) {
            converged = true;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // panel cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (vl, el) = gk15(&mut g, worst.a, m);
        let (vr, er) = gk15(&mut g, m, worst.b);
        evaluations += 30;
        total += vl + vr - worst.value;
        total_err += el + er - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: m,
            value: vl,
            error: el,
        });
        heap.push(Panel {
            a: m,
            b: worst.b,
            value: vr,
            error: er,
        });
        if non_finite.get() {
            break;
        }
    }
    // re-sum to shed accumulated cancellation in the running totals
    let (value, error) = heap
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| {
            (v + p.value, e + p.error)
        });
    if !converged {
        converged = error <= opts.abs_tol.max(opts.rel_tol * value.norm());
    }
    QuadResult {
        value,
        error,
        evaluations,
        converged: converged && !non_finite.get(),
        non_finite: non_finite.get(),
    }
}

/// `∫ g(z) dz` along the straight segment from `z0` to `z1`.
pub fn segment_integral<G: FnMut(Complex64) -> Complex64>(
    mut g: G,
    z0: Complex64,
    z1: Complex64,
    opts: QuadOptions,
) -> QuadResult {
    let d = z1 - z0;
    integrate(|s| g(z0 + d * s) * d, 0.0, 1.0, opts)
}

/// `∫ g(z) dz` along a polyline; tolerances apply per segment.
pub fn polyline_integral<G: FnMut(Complex64) -> Complex64>(
    mut g: G,
    points: &[Complex64],
    opts: QuadOptions,
) -> QuadResult {
    let mut out = QuadResult {
        value: Complex64::new(0.0, 0.0),
        error: 0.0,
        evaluations: 0,
        converged: true,
        non_finite: false,
    };
    for w in points.windows(2) {
        let r = segment_integral(&mut g, w[0], w[1], opts);
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
        out.converged &= r.converged;
        out.non_finite |= r.non_finite;
    }
    out
}

/// `∮ g(z) dz` over the positively oriented circle `|z - center| = radius`.
pub fn circle_integral<G: FnMut(Complex64) -> Complex64>(
    mut g: G,
    center: Complex64,
    radius: f64,
    opts: QuadOptions,
) -> QuadResult {
    let tau = std::f64::consts::TAU;
    integrate(
        |theta| {
            let e = Complex64::from_polar(radius, theta);
            g(center + e) * Complex64::new(0.0, 1.0) * e
        },
        0.0,
        tau,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(
            |s| Complex64::new(s.powi(5), -s * s),
            0.0,
            2.0,
            QuadOptions::default(),
        );
        assert!((r.value - Complex64::new(64.0 / 6.0, -8.0 / 3.0)).norm() < 1e-13);
        assert!(r.converged);
    }

    #[test]
    fn reciprocal_on_real_segment() {
        let r = segment_integral(
            |z| 1.0 / z,
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            QuadOptions::default(),
        );
        assert!((r.value.re - LN_2).abs() < 1e-14);
        assert!(r.value.im.abs() < 1e-15);
    }

    #[test]
    fn residue_of_reciprocal() {
        let r = circle_integral(
            |z| 1.0 / z,
            Complex64::new(0.0, 0.0),
            0.3,
            QuadOptions::default(),
        );
        assert!((r.value - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn peaked_integrand_needs_refinement() {
        // ∫_{-1}^{1} ds/(s²+ε²) = 2 atan(1/ε)/ε
        let eps = 1e-3;
        let r = integrate(
            |s| Complex64::new(1.0 / (s * s + eps * eps), 0.0),
            -1.0,
            1.0,
            QuadOptions::default(),
        );
        let exact = 2.0 * (1.0 / eps).atan() / eps;
        assert!((r.value.re - exact).abs() <= 1e-9 * exact);
        assert!(r.evaluations > 15);
    }

    #[test]
    fn flags_non_finite() {
        let r = integrate(
            |s| Complex64::new(1.0 / s, 0.0),
            0.0,
            1.0,
            QuadOptions {
                max_intervals: 50,
                ..QuadOptions::default()
            },
        );
        // the centre node is never exactly 0 on [0,1], but the integrand is unbounded
        assert!(!r.converged);
    }
}
