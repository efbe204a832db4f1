//! Modified Bessel function of the second kind, `K_ν`.
//!
//! Real arguments use Temme's series for `x < 2` and Steed's continued
//! fraction otherwise, both at fractional order `|μ| <= 1/2`, followed by
//! upward recurrence carried in logarithms so that very large or very small
//! values never overflow. Complex arguments in the right half plane use the
//! integral `e^z K_ν(z) = ∫_0^∞ exp(-z(cosh t - 1)) cosh(νt) dt` with the
//! trapezoid rule, which converges geometrically for analytic integrands.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

// Chebyshev coefficients of Temme's gamma helpers on [-1, 1].
const G1_DAT: [f64; 14] = [
    -1.145_164_083_662_683_1,
    0.006_360_853_113_470_842_4,
    0.001_862_451_930_072_068_5,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_04,
    -6.459_750_292_334_725_4e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818_3e-10,
    3.243_322_737_102_087_3e-11,
    6.830_943_402_494_752_3e-13,
    2.835_350_275_517_210_2e-14,
    -7.988_390_576_932_359e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];

const G2_DAT: [f64; 15] = [
    1.882_645_524_949_671_8,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961_4e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769_4e-18,
    -7.522_524_321_825_39e-20,
];

fn cheb_eval(c: &[f64], x: f64) -> f64 {
    let (mut d, mut dd) = (0.0, 0.0);
    let y2 = 2.0 * x;
    for &ck in c.iter().skip(1).rev() {
        let tmp = d;
        d = y2 * d - dd + ck;
        dd = tmp;
    }
    x * d - dd + 0.5 * c[0]
}

/// Returns `(1/Γ(1+μ), 1/Γ(1-μ), g1, g2)` for `|μ| <= 1/2` where
/// `g1 = (1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ)` and `g2` is their mean.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let anu = mu.abs();
    let x = 4.0 * anu - 1.0;
    let g1 = cheb_eval(&G1_DAT, x);
    let g2 = cheb_eval(&G2_DAT, x);
    (g2 - mu * g1, g2 + mu * g1, g1, g2)
}

/// Temme's series: `(K_μ(x), K_{μ+1}(x))` for `|μ| <= 1/2`, `0 < x < 2`.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    const MAX_ITER: usize = 15_000;
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let (r_gp, r_gm, g1, g2) = temme_gamma(mu);
    let pimu = PI * mu;
    let fact = if pimu.abs() < f64::EPSILON {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let sigma = -mu * ln_half_x;
    let fact2 = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let half_x_mu = (mu * ln_half_x).exp();

    let mut f = fact * (g1 * sigma.cosh() - g2 * fact2 * ln_half_x);
    let mut p = 0.5 / (half_x_mu * r_gp);
    let mut q = 0.5 * half_x_mu / r_gm;
    let mut c = 1.0;
    let d = half_x * half_x;
    let mut sum0 = f;
    let mut sum1 = p;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        f = (kf * f + p + q) / (kf * kf - mu * mu);
        c *= d / kf;
        p /= kf - mu;
        q /= kf + mu;
        let del0 = c * f;
        sum0 += del0;
        sum1 += c * (p - kf * f);
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            break;
        }
    }
    (sum0, sum1 / half_x)
}

/// Steed's CF2: `(e^x K_μ(x), e^x K_{μ+1}(x))` for `|μ| <= 1/2`, `x >= 2`.
fn steed_cf2_scaled(mu: f64, x: f64) -> (f64, f64) {
    const MAX_ITER: usize = 15_000;
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut ai = -a1;
    let mut ci = -ai;
    let mut qq = -ai;
    let mut s = 1.0 + qq * delhi;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        ai -= 2.0 * (fi - 1.0);
        ci = -ai * ci / fi;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        qq += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi *= bi * di - 1.0;
        hi += delhi;
        let dels = qq * delhi;
        s += dels;
        if (dels / s).abs() < 0.5 * f64::EPSILON {
            break;
        }
    }
    hi *= a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mup1 = k_mu * (mu + x + 0.5 - hi) / x;
    (k_mu, k_mup1)
}

/// `ln K_ν(x)` for real `ν` and `x > 0`.
pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K_nu needs x > 0, got {x}")));
    }
    if !nu.is_finite() {
        return Err(Error::Domain(format!("K_nu needs finite order, got {nu}")));
    }
    let nu = nu.abs();
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (k0, k1, ln_scale) = if x < 2.0 {
        let (a, b) = temme_series(mu, x);
        (a, b, 0.0)
    } else {
        let (a, b) = steed_cf2_scaled(mu, x);
        (a, b, -x)
    };
    let steps = n as usize;
    if steps == 0 {
        return Ok(k0.ln() + ln_scale);
    }
    // Upward recurrence on the ratio r_k = K_{μ+k+1} / K_{μ+k}, which
    // grows monotonically and never overflows for sane orders.
    let mut ln_k = k1.ln();
    let mut ratio = k1 / k0;
    for k in 1..steps {
        let order = mu + k as f64;
        ratio = 1.0 / ratio + 2.0 * order / x;
        ln_k += ratio.ln();
    }
    Ok(ln_k + ln_scale)
}

/// `K_ν(x)`; overflows to `+∞` and underflows to `0` like `exp`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    ln_bessel_k(nu, x).map(f64::exp)
}

/// Ratio `K_{ν+m}(x) / K_ν(x)` computed in log space.
pub fn bessel_k_ratio(nu: f64, m: f64, x: f64) -> Result<f64> {
    Ok((ln_bessel_k(nu + m, x)? - ln_bessel_k(nu, x)?).exp())
}

/// `∂/∂ν ln K_ν(x)` by a fourth-order central difference.
pub fn d_ln_bessel_k_dnu(nu: f64, x: f64) -> Result<f64> {
    let h = 1e-3 * (1.0 + nu.abs());
    let f = |d: f64| ln_bessel_k(nu + d, x);
    Ok((8.0 * (f(h)? - f(-h)?) - (f(2.0 * h)? - f(-2.0 * h)?)) / (12.0 * h))
}

/// `ln K_ν(z)` for complex `z` with `Re z > 0`, on the branch continuous
/// from the positive real axis, i.e. `ln(e^z K_ν(z)) - z`.
pub fn ln_bessel_k_complex(nu: f64, z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) || !z.im.is_finite() {
        return Err(Error::Domain(format!(
            "complex K_nu needs Re z > 0, got {z}"
        )));
    }
    if z.im == 0.0 {
        return Ok(Complex64::new(ln_bessel_k(nu, z.re)?, 0.0));
    }
    let nu = nu.abs();
    // Distance from the arg of z to the edge of the half plane sets the
    // width of the strip of analyticity of the integrand in t.
    let margin = 0.5 * PI - z.arg().abs();
    let h = (2.0 * PI * 0.8 * margin / 36.0).min(0.25);
    let integrand = |t: f64| -> Complex64 {
        let c = t.cosh() - 1.0;
        // cosh(νt) e^{-z c}: fold the growth of cosh into the exponent.
        let e = Complex64::new(-z.re * c + nu * t, -z.im * c);
        let decay = (-2.0 * nu * t).exp();
        e.exp() * 0.5 * (1.0 + decay)
    };
    let mut sum = 0.5 * integrand(0.0);
    let mut k = 1usize;
    loop {
        let t = k as f64 * h;
        let term = integrand(t);
        sum += term;
        let log_bound = -z.re * (t.cosh() - 1.0) + nu * t;
        if log_bound < -45.0 && t * nu < z.re * t.sinh() {
            break;
        }
        k += 1;
        if k > 200_000 {
            return Err(Error::Domain(format!(
                "complex K_nu quadrature did not settle for nu={nu}, z={z}"
            )));
        }
    }
    Ok((sum * h).ln() - z)
}

#[cfg(test)]
mod tests {
    use super::*;

    // (ν, x, ln K_ν(x)) from an arbitrary-precision reference.
    const REAL_CASES: &[(f64, f64, f64)] = &[
        (2.0, 1.5, -0.538_443_573_756_441_4),
        (0.0, 1e-6, 2.634_148_305_306_988_4),
        (0.3, 0.01, 1.930_085_981_618_933),
        (-0.5, 2.0, -2.120_782_237_635_245_2),
        (1.7, 0.5, 1.491_590_046_718_174),
        (2.5, 3.0, -2.476_216_931_302_123_8),
        (10.0, 0.001, 88.117_704_867_164_57),
        (10.0, 1000.0, -1_003.178_236_612_779_5),
        (-4.5, 7.25, -6.748_051_184_617_107),
        (3.3, 25.0, -26.175_209_885_100_57),
        (0.0, 1.0, -0.865_064_398_906_788_1),
        (1.0, 1.0, -0.507_651_948_210_752_3),
        (-1.25, 0.2, 2.059_928_762_190_960_7),
        (7.5, 2.0, 6.689_431_485_642_535),
        (0.49, 1.99, -2.110_327_658_116_043_3),
        (0.51, 2.01, -2.131_200_889_219_555_6),
    ];

    #[test]
    fn real_log_values() {
        for &(nu, x, want) in REAL_CASES {
            let got = ln_bessel_k(nu, x).unwrap();
            let tol = 2e-14 * want.abs().max(1.0);
            assert!((got - want).abs() < tol, "nu={nu} x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn real_values_near_one() {
        let k = bessel_k(2.0, 1.5).unwrap();
        assert!((k - 0.583_655_963_256_650_8).abs() < 1e-14);
        let k = bessel_k(1.7, 0.5).unwrap();
        assert!((k - 4.444_156_320_186_134).abs() < 5e-14);
    }

    #[test]
    fn recurrence_identity() {
        for &(nu, x) in &[(0.3, 0.7), (2.2, 4.0), (-3.1, 1.1)] {
            let km = bessel_k(nu - 1.0, x).unwrap();
            let k = bessel_k(nu, x).unwrap();
            let kp = bessel_k(nu + 1.0, x).unwrap();
            let lhs = kp - km;
            let rhs = 2.0 * nu / x * k;
            assert!((lhs - rhs).abs() < 1e-12 * kp.abs(), "{nu} {x}");
        }
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[0.05, 0.9, 2.0, 7.0, 40.0] {
            let want = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let got = bessel_k(0.5, x).unwrap();
            assert!((got / want - 1.0).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn rejects_nonpositive_argument() {
        assert!(ln_bessel_k(1.0, 0.0).is_err());
        assert!(ln_bessel_k(1.0, -1.0).is_err());
        assert!(ln_bessel_k_complex(1.0, Complex64::new(-0.1, 1.0)).is_err());
    }

    // (ν, z, ln K_ν(z)) from an arbitrary-precision reference.
    const COMPLEX_CASES: &[(f64, f64, f64, f64, f64)] = &[
        (0.5, 1.0, 0.5, -0.829_994_535_183_825, -0.731_823_804_500_403_1),
        (-1.5, 0.3, -0.2, 1.730_017_678_294_487_2, 0.929_354_576_926_086_2),
        (2.25, 2.0, 1.8, -1.636_328_603_281_674_1, -2.616_071_394_906_969_7),
        (0.0, 0.05, 0.03, 1.101_390_657_399_271_4, -0.179_690_346_093_101_56),
        (-3.0, 10.0, -6.0, -10.688_362_297_377_134, 0.165_473_935_711_522_93),
        (1.0, 0.7, 0.0, 0.049_060_161_348_263_62, 0.0),
    ];

    #[test]
    fn complex_log_values() {
        for &(nu, re, im, wre, wim) in COMPLEX_CASES {
            let got = ln_bessel_k_complex(nu, Complex64::new(re, im)).unwrap();
            assert!((got.re - wre).abs() < 1e-13 * wre.abs().max(1.0), "{nu} {re} {im}: {got}");
            // Same value up to the branch of the logarithm.
            let turns = ((got.im - wim) / (2.0 * PI)).round();
            assert!((got.im - wim - turns * 2.0 * PI).abs() < 1e-12, "{nu} {re} {im}: {got}");
        }
    }

    #[test]
    fn complex_agrees_with_real_on_axis_limit() {
        let z = Complex64::new(1.3, 1e-9);
        let c = ln_bessel_k_complex(1.4, z).unwrap();
        let r = ln_bessel_k(1.4, 1.3).unwrap();
        assert!((c.re - r).abs() < 1e-12);
    }
}
