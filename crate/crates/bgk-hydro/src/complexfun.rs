//! Plasma dispersion function Z, its analytic continuations and derivatives.
//!
//! Z(z) = (2*pi)^{-1/2} integral of e^{-v^2/2}/(v - z) dv is analytic on each
//! half-plane and extends to entire functions Z+ and Z- from above and below.
//! Everything reduces to the Faddeeva function w through Z+(z) = i sqrt(pi/2)
//! w(z/sqrt(2)), which is evaluated by a ported, well-tested kernel; the
//! quadrature oracle in [`crate::oracle`] provides the independent check.

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;
use thiserror::Error;

pub type Cx = Complex64;

/// sqrt(pi/2)
pub const SQRT_PI_OVER_2: f64 = 1.2533141373155003;

#[derive(Debug, Error, PartialEq)]
pub enum ComplexFunError {
    #[error("non-finite input {0}")]
    NonFiniteInput(Cx),
    #[error("overflow evaluating at {0} (|Im| too large for this continuation)")]
    Overflow(Cx),
    #[error("argument {0} of zeta within guard of +-pi/2; asymptotic series invalid")]
    AsymptoticDomain(f64),
    #[error("asymptotic series supports at most 20 terms, got {0}")]
    TooManyTerms(usize),
    #[error("derivative order must be >= 1")]
    ZeroOrder,
}

/// Which analytic continuation of Z to evaluate where the half-plane formula
/// and the requested point disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Z+, the continuation of Z from the upper half-plane.
    UpperContinuation,
    /// Z-, the continuation from the lower half-plane.
    LowerContinuation,
}

fn check_finite(z: Cx) -> Result<(), ComplexFunError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(ComplexFunError::NonFiniteInput(z))
    }
}

/// Faddeeva function w(z) = e^{-z^2}(1 - erf(-iz)).
pub fn faddeeva_w(z: Cx) -> Result<Cx, ComplexFunError> {
    check_finite(z)?;
    let w = z.w();
    if w.re.is_finite() && w.im.is_finite() {
        Ok(w)
    } else {
        Err(ComplexFunError::Overflow(z))
    }
}

/// Plasma dispersion function on the selected analytic continuation.
///
/// `UpperContinuation` equals the defining integral for Im z > 0 and extends
/// it analytically below the real axis; `LowerContinuation` the other way.
///
/// The rational Faddeeva kernel carries ~1e-13 relative error with small
/// jumps between its algorithm regions; past |z| = 8.5 (inside the sector
/// where the power asymptotics hold) the smallest-term-truncated asymptotic
/// series is smooth and accurate to ~1e-15 relative, so it takes over there.
/// The spectral problem evaluates at |z| = 1/(k tau), which is exactly where
/// that accuracy is needed.
pub fn plasma_z(zeta: Cx, branch: Branch) -> Result<Cx, ComplexFunError> {
    check_finite(zeta)?;
    let i = Cx::new(0.0, 1.0);
    match branch {
        Branch::UpperContinuation if zeta.im >= 0.0 => {
            let t_arg = (-i * zeta).arg();
            if zeta.norm() >= 8.5 && t_arg.abs() < 3.0 * std::f64::consts::FRAC_PI_4 - 1e-3 {
                return plasma_z_asymptotic_auto(zeta);
            }
            let w = faddeeva_w(zeta / std::f64::consts::SQRT_2)?;
            Ok(i * SQRT_PI_OVER_2 * w)
        }
        // on its own side each continuation is the defining integral, and the
        // lower-half-plane value is the conjugate of the upper one at zeta*;
        // crossing sides adds the entire function 2i sqrt(pi/2) e^{-z^2/2},
        // which genuinely grows there (guarded against overflow)
        Branch::LowerContinuation if zeta.im <= 0.0 => {
            Ok(plasma_z(zeta.conj(), Branch::UpperContinuation)?.conj())
        }
        Branch::UpperContinuation => {
            let zm = plasma_z(zeta.conj(), Branch::UpperContinuation)?.conj();
            let ex = -zeta * zeta / 2.0;
            if ex.re > 700.0 {
                return Err(ComplexFunError::Overflow(zeta));
            }
            Ok(zm + i * 2.0 * SQRT_PI_OVER_2 * ex.exp())
        }
        Branch::LowerContinuation => {
            let zp = plasma_z(zeta, Branch::UpperContinuation)?;
            let ex = -zeta * zeta / 2.0;
            if ex.re > 700.0 {
                return Err(ComplexFunError::Overflow(zeta));
            }
            Ok(zp - i * 2.0 * SQRT_PI_OVER_2 * ex.exp())
        }
    }
}

/// n-th derivative of Z from the recurrence Z' = -z Z - 1,
/// Z^{(n+1)} = -z Z^{(n)} - n Z^{(n-1)}.
pub fn plasma_z_derivative(zeta: Cx, branch: Branch, order: usize) -> Result<Cx, ComplexFunError> {
    if order == 0 {
        return Err(ComplexFunError::ZeroOrder);
    }
    let z0 = plasma_z(zeta, branch)?;
    let mut prev = z0;
    let mut cur = -zeta * z0 - 1.0;
    for n in 1..order {
        let next = -zeta * cur - (n as f64) * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Partial sum of the large-|z| expansion Z+(z) ~ -sum (2n-1)!!/z^{2n+1}.
/// The series is divergent; truncating at the smallest term is near-optimal.
///
/// Valid where the scaled complementary error function keeps its power-law
/// asymptotics, |arg(-i z)| < 3 pi/4: the closed upper half-plane plus a
/// pi/4 sector below the real axis. Below that the continuation Z+ grows
/// like a Gaussian and no power series can follow it.
pub fn plasma_z_asymptotic(zeta: Cx, terms: usize) -> Result<Cx, ComplexFunError> {
    check_finite(zeta)?;
    if terms > 20 {
        return Err(ComplexFunError::TooManyTerms(terms));
    }
    const DELTA: f64 = 1e-6;
    let t_arg = (-Cx::new(0.0, 1.0) * zeta).arg();
    if t_arg.abs() > 3.0 * std::f64::consts::FRAC_PI_4 - DELTA {
        return Err(ComplexFunError::AsymptoticDomain(zeta.arg()));
    }
    let inv2 = 1.0 / (zeta * zeta);
    let mut term = 1.0 / zeta; // (2n-1)!!/z^{2n+1} at n=0
    let mut sum = Cx::new(0.0, 0.0);
    for n in 0..terms {
        sum += term;
        term = term * (2.0 * n as f64 + 1.0) * inv2;
    }
    Ok(-sum)
}

/// Z+ evaluated with truncation at the smallest term of the asymptotic series;
/// used past the rational kernel's validated range.
pub fn plasma_z_asymptotic_auto(zeta: Cx) -> Result<Cx, ComplexFunError> {
    check_finite(zeta)?;
    let inv2 = 1.0 / (zeta * zeta);
    let mut term = 1.0 / zeta;
    let mut sum = Cx::new(0.0, 0.0);
    let mut best = term.norm();
    for n in 0..28 {
        sum += term;
        term = term * (2.0 * n as f64 + 1.0) * inv2;
        let t = term.norm();
        if t >= best {
            break;
        }
        best = t;
    }
    Ok(-sum)
}

/// S(x) - 1 where Z = (i eps / (1+u)) S(x) at zeta = i(1+u)/eps and
/// x = (eps/(1+u))^2: the resummed tail sum_{n>=1} (2n-1)!! (-x)^n, truncated
/// at its smallest term. The workhorse behind the cancellation-free small-k
/// forms of the spectral function and the spectral temperature.
pub(crate) fn z_series_sm1(x: Cx) -> Cx {
    let mut sum = Cx::new(0.0, 0.0);
    let mut term = -x;
    let mut best = f64::INFINITY;
    for n in 1..20usize {
        if term.norm() >= best {
            break;
        }
        best = term.norm();
        sum += term;
        term *= -x * (2.0 * n as f64 + 1.0);
    }
    sum
}

/// d/dx of [`z_series_sm1`].
pub(crate) fn z_series_sm1_prime(x: Cx) -> Cx {
    let mut sum = Cx::new(0.0, 0.0);
    let mut term = Cx::new(-1.0, 0.0); // n (2n-1)!! (-1)^n x^{n-1} at n=1
    let mut best = f64::INFINITY;
    for n in 1..20usize {
        if term.norm() >= best {
            break;
        }
        best = term.norm();
        sum += term;
        let nf = n as f64;
        term *= -x * (2.0 * nf + 1.0) * (nf + 1.0) / nf;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn w_at_zero_is_one() {
        assert_eq!(faddeeva_w(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn w_functional_identity() {
        // w(-z) = 2 e^{-z^2} - w(z)
        let z = c(0.3, 0.7);
        let lhs = faddeeva_w(-z).unwrap();
        let rhs = 2.0 * (-z * z).exp() - faddeeva_w(z).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn w_pure_imaginary_matches_reference() {
        // e^9 erfc(3), from 40-digit quadrature of (i/pi) int e^{-s^2}/(z-s) ds
        let w = faddeeva_w(c(0.0, 3.0)).unwrap();
        assert!((w - c(0.17900115118138995, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn z_upper_limit_at_origin() {
        let z = plasma_z(c(0.0, 0.0), Branch::UpperContinuation).unwrap();
        assert!((z - c(0.0, SQRT_PI_OVER_2)).norm() < 1e-15);
        let zm = plasma_z(c(0.0, 0.0), Branch::LowerContinuation).unwrap();
        assert!((zm - c(0.0, -SQRT_PI_OVER_2)).norm() < 1e-15);
    }

    #[test]
    fn z_known_values() {
        let z = plasma_z(c(0.0, 1.0), Branch::UpperContinuation).unwrap();
        assert!((z - c(0.0, 0.65567954241879847)).norm() < 1e-14);
        let z2 = plasma_z(c(1.0, 1.0), Branch::UpperContinuation).unwrap();
        assert!((z2 - c(-0.28866304584607212, 0.52086243590133673)).norm() < 1e-14);
        let z3 = plasma_z(c(0.0, 2.0), Branch::UpperContinuation).unwrap();
        assert!((z3 - c(0.0, 0.42136922928805447)).norm() < 1e-14);
    }

    #[test]
    fn conjugation_identity_between_branches() {
        // Z(i(tau lam + 1)/(k tau))* = -Z(i(tau lam* + 1)/(k tau)) with the
        // conjugate argument landing on the other side of the axis
        let (k, tau) = (0.7, 0.5);
        let lam = c(-0.3, 0.2);
        let zeta = Cx::new(0.0, 1.0) * (tau * lam + 1.0) / (k * tau);
        let zeta_c = Cx::new(0.0, 1.0) * (tau * lam.conj() + 1.0) / (k * tau);
        // both arguments sit in the upper half-plane where the defining
        // integral applies; the identity follows from v -> -v in the integral
        let lhs = plasma_z(zeta, Branch::UpperContinuation).unwrap().conj();
        let rhs = -plasma_z(zeta_c, Branch::UpperContinuation).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn derivative_order_one_at_origin() {
        let d = plasma_z_derivative(c(0.0, 0.0), Branch::UpperContinuation, 1).unwrap();
        assert!((d - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let zeta = c(1.0, 1.0);
        let h = 1e-5;
        let fp = plasma_z(zeta + h, Branch::UpperContinuation).unwrap();
        let fm = plasma_z(zeta - h, Branch::UpperContinuation).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        let an = plasma_z_derivative(zeta, Branch::UpperContinuation, 1).unwrap();
        assert!((fd - an).norm() < 1e-8);
    }

    #[test]
    fn second_derivative_recurrence() {
        // Z'' = (z^2 - 1) Z + z
        let zeta = c(0.0, 0.5);
        let d2 = plasma_z_derivative(zeta, Branch::UpperContinuation, 2).unwrap();
        let z = plasma_z(zeta, Branch::UpperContinuation).unwrap();
        let direct = (zeta * zeta - 1.0) * z + zeta;
        assert!((d2 - direct).norm() < 1e-12);
        assert!((direct - c(0.0, -0.59545557056711543)).norm() < 1e-14);
    }

    #[test]
    fn asymptotic_series_values() {
        // one term at 5i: -1/(5i) = 0.2i
        let s = plasma_z_asymptotic(c(0.0, 5.0), 1).unwrap();
        assert!((s - c(0.0, 0.2)).norm() < 1e-15);

        // zeta = 10 on the real axis (upper limit; w is continuous there):
        // the first omitted term of the 6-term sum is 10395/10^13 ~ 1e-9,
        // and 8 terms reach 1e-10
        let s6 = plasma_z_asymptotic(c(10.0, 0.0), 6).unwrap();
        let z10 = plasma_z(c(10.0, 0.0), Branch::UpperContinuation).unwrap();
        assert!((z10.re - -0.10103161564918599).abs() < 1e-13);
        assert!((s6 - z10).norm() < 2e-9);
        let s8 = plasma_z_asymptotic(c(10.0, 0.0), 8).unwrap();
        assert!((s8 - z10).norm() < 1e-10);
    }

    #[test]
    fn asymptotic_truncation_optimality() {
        // divergent series: at zeta = 4, 8 terms beat 20
        let exact = plasma_z(c(4.0, 0.0), Branch::UpperContinuation).unwrap();
        let e8 = (plasma_z_asymptotic(c(4.0, 0.0), 8).unwrap() - exact).norm();
        let e20 = (plasma_z_asymptotic(c(4.0, 0.0), 20).unwrap() - exact).norm();
        assert!(e8 < e20, "e8={e8:.3e} e20={e20:.3e}");
        let auto = plasma_z_asymptotic_auto(c(4.0, 0.0)).unwrap();
        assert!((auto - exact).norm() <= e8 * 1.5);
    }

    #[test]
    fn asymptotic_domain_guard() {
        // deep lower half-plane: the continuation grows like a Gaussian
        assert!(matches!(
            plasma_z_asymptotic(c(0.0, -5.0), 3),
            Err(ComplexFunError::AsymptoticDomain(_))
        ));
        assert!(matches!(
            plasma_z_asymptotic(c(-3.0, -3.1), 3),
            Err(ComplexFunError::AsymptoticDomain(_))
        ));
        assert!(matches!(
            plasma_z_asymptotic(c(1.0, 0.0), 21),
            Err(ComplexFunError::TooManyTerms(21))
        ));
    }

    #[test]
    fn ode_residual_via_finite_differences() {
        // |dZ/dz + z Z + 1| <= 1e-11 with dZ/dz from a 4th-order stencil,
        // 1000 points in the upper half of the disk |z| <= 5
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let r = 5.0 * rng.gen::<f64>().sqrt();
            let phi = std::f64::consts::PI * rng.gen::<f64>();
            let mut zeta = c(r * phi.cos(), r * phi.sin());
            if zeta.im < 0.1 {
                zeta.im = 0.1 + zeta.im.abs();
            }
            let h = 4e-5 * (1.0 + zeta.norm() / 5.0);
            let z = plasma_z(zeta, Branch::UpperContinuation).unwrap();
            let at = |x: f64| plasma_z(zeta + x, Branch::UpperContinuation).unwrap();
            let fd = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            let resid = (fd + zeta * z + 1.0).norm();
            worst = worst.max(resid);
            assert!(resid < 1e-11, "resid {resid:.3e} at {zeta}");
        }
    }

    proptest! {
        #[test]
        fn z_bounded_by_sqrt_pi_over_2(re in -8.0f64..8.0, im in 0.02f64..8.0, upper in proptest::bool::ANY) {
            // |Z| <= sqrt(pi/2) off the real axis, on the side where each
            // continuation equals the defining integral
            let (zeta, branch) = if upper {
                (c(re, im), Branch::UpperContinuation)
            } else {
                (c(re, -im), Branch::LowerContinuation)
            };
            let z = plasma_z(zeta, branch).unwrap();
            prop_assert!(z.norm() <= SQRT_PI_OVER_2 * (1.0 + 1e-12));
            // argument range: 0 < arg Z+ < pi above, -pi < arg Z- < 0 below
            let arg = z.im.atan2(z.re);
            if upper {
                prop_assert!(arg > 0.0 && arg < std::f64::consts::PI);
            } else {
                prop_assert!(arg < 0.0 && arg > -std::f64::consts::PI);
            }
        }
    }
}
