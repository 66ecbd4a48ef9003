//! Adaptive Gauss-Kronrod (7/15) quadrature on finite and half-infinite
//! intervals.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 50;

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = kronrod(f, a, b);
    if err <= tol.max(1e-15 * value.abs()) || depth >= MAX_DEPTH {
        return value;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1)
}

/// ∫_a^b f(x) dx to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&f, a, b, tol, 0)
}

/// ∫_a^∞ f(x) dx for a > 0, via x = a/s on s ∈ (0, 1].
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    assert!(a > 0.0, "lower limit must be positive");
    let g = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            let x = a / s;
            f(x) * a / (s * s)
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// ∫ over the plane outside radius `rho` of a radial function g(|y|),
/// i.e. 2π ∫_ρ^∞ g(r) r dr. For ρ = 0 the integral is split at r = 1.
pub fn radial_integral_outside<F: Fn(f64) -> f64>(g: F, rho: f64, tol: f64) -> f64 {
    let h = |r: f64| 2.0 * std::f64::consts::PI * r * g(r);
    if rho > 0.0 {
        integrate_to_infinity(h, rho, tol)
    } else {
        integrate(&h, 0.0, 1.0, 0.5 * tol) + integrate_to_infinity(&h, 1.0, 0.5 * tol)
    }
}

/// Like [`radial_integral_outside`] but to a tolerance relative to the
/// value itself, for integrals that are tiny in absolute terms.
pub fn radial_integral_outside_relative<F: Fn(f64) -> f64>(g: F, rho: f64, rel: f64) -> f64 {
    let mut estimate = radial_integral_outside(&g, rho, f64::MAX);
    for _ in 0..2 {
        if estimate == 0.0 {
            return 0.0;
        }
        estimate = radial_integral_outside(&g, rho, (rel * estimate).abs());
    }
    estimate
}

/// 2π ∫_0^ρ g(r) r dr.
pub fn radial_integral_inside<F: Fn(f64) -> f64>(g: F, rho: f64, tol: f64) -> f64 {
    integrate(|r| 2.0 * std::f64::consts::PI * r * g(r), 0.0, rho, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_and_exponentials() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-12) - 9.0).abs() < 1e-12);
        assert!((integrate(f64::exp, 0.0, 1.0, 1e-12) - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((integrate(|x| x.sqrt(), 0.0, 1.0, 1e-10) - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn relative_tolerance_resolves_tiny_tails() {
        // 2π ∫_ρ^∞ r^-15 dr = 2π ρ^-14 / 14
        let rho: f64 = 40.0;
        let exact = 2.0 * PI * rho.powi(-14) / 14.0;
        let got = radial_integral_outside_relative(|r| r.powi(-16), rho, 1e-10);
        assert!(((got - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn half_line() {
        let v = integrate_to_infinity(|x| 1.0 / (x * x), 2.0, 1e-12);
        assert!((v - 0.5).abs() < 1e-12);
        let v = integrate_to_infinity(|x| (-x).exp(), 1.0, 1e-12);
        assert!((v - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn radial_cauchy_mass() {
        let eta = |r: f64| 1.0 / (PI * (1.0 + r * r).powi(2));
        let total = radial_integral_outside(eta, 0.0, 1e-12);
        assert!((total - 1.0).abs() < 1e-10);
        let tail = radial_integral_outside(eta, 10.0, 1e-14);
        assert!((tail - 1.0 / 101.0).abs() < 1e-12);
    }
}
