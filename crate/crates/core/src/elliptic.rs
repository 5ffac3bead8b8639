//! Jacobi elliptic functions sn, cn, dn and the complete elliptic integral
//! K(m), built on the arithmetic-geometric mean.
//!
//! The amplitude returned by [`jacobi_point`] is *unwrapped*: it is the
//! monotone continuation of am(x, m) over all of `x`, satisfying
//! am(x + 4K) = am(x) + 2π. Half-angle factors built from it are smooth
//! across the points where 1 ± cn has a double zero, which is what makes
//! them usable as antiperiodic eigenfunction prefactors.

use crate::error::{Error, Result};

/// Elliptic modulus parameter m, restricted to [0, 1].
///
/// Convention matches scipy/Mathematica: m = k² where k is the modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus(f64);

impl Modulus {
    pub fn new(m: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::domain(format!(
                "elliptic modulus m must lie in [0, 1], got {m}"
            )));
        }
        Ok(Modulus(m))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// One evaluation of the Jacobi functions at (x, m).
///
/// `am` is the unwrapped amplitude: sn = sin(am), cn = cos(am), and am is
/// strictly increasing in x with am(x + 4K) = am(x) + 2π.
#[derive(Debug, Clone, Copy)]
pub struct EllipticPoint {
    pub x: f64,
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
    pub am: f64,
}

/// Below this, sn/cn/dn are taken in their trigonometric limit forms;
/// above 1 − this, in their hyperbolic limit forms. Keeps the Landen
/// recursion away from its degenerate endpoints.
const MODULUS_SWITCH: f64 = 1e-12;

/// Complete elliptic integral of the first kind K(m) by AGM iteration.
///
/// Requires 0 ≤ m < 1; K diverges logarithmically as m → 1.
pub fn complete_elliptic_k(m: Modulus) -> Result<f64> {
    let m = m.get();
    if m >= 1.0 {
        return Err(Error::domain("K(m) diverges at m = 1".to_string()));
    }
    let mut a = 1.0_f64;
    let mut b = (1.0 - m).sqrt();
    // Quadratic convergence: ~5 iterations for any m in [0, 1 - 1e-12].
    for _ in 0..40 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(std::f64::consts::FRAC_PI_2 / a)
}

/// Jacobi sn, cn, dn and the unwrapped amplitude at (x, m).
///
/// At m = 0 this is (sin x, cos x, 1, x); at m = 1 it is
/// (tanh x, sech x, sech x, gd x) with gd the Gudermannian. In between the
/// principal amplitude on [0, 4K) comes from the descending Landen angle
/// recursion and is unwrapped by whole periods of x.
pub fn jacobi_point(x: f64, m: Modulus) -> EllipticPoint {
    assert!(x.is_finite(), "jacobi_point requires finite x, got {x}");
    let m = m.get();

    if m < MODULUS_SWITCH {
        let (sn, cn) = x.sin_cos();
        let dn = (1.0 - m * sn * sn).sqrt();
        return EllipticPoint { x, sn, cn, dn, am: x };
    }
    if m > 1.0 - MODULUS_SWITCH {
        let sn = x.tanh();
        let sech = 1.0 / x.cosh();
        return EllipticPoint {
            x,
            sn,
            cn: sech,
            dn: sech,
            am: sn.asin(), // gd(x)
        };
    }

    let quarter = complete_elliptic_k(Modulus(m)).expect("m < 1 checked above");
    let period = 4.0 * quarter;
    let wraps = (x / period).floor();
    let xr = x - wraps * period; // in [0, period)

    // Quadrant reduction keeps the angle recursion on [0, K], where its
    // intermediate angles are smallest and the result is most accurate:
    // am(2K − u) = π − am(u), am(2K + u) = π + am(u), am(4K − u) = 2π − am(u).
    use std::f64::consts::PI;
    let (phi, am_principal, sn_sign, cn_sign) = if xr <= quarter {
        (landen_amplitude(xr, m), None, 1.0, 1.0)
    } else if xr <= 2.0 * quarter {
        let phi = landen_amplitude(2.0 * quarter - xr, m);
        (phi, Some(PI - phi), 1.0, -1.0)
    } else if xr <= 3.0 * quarter {
        let phi = landen_amplitude(xr - 2.0 * quarter, m);
        (phi, Some(PI + phi), -1.0, -1.0)
    } else {
        let phi = landen_amplitude(period - xr, m);
        (phi, Some(2.0 * PI - phi), -1.0, 1.0)
    };
    let (s, c) = phi.sin_cos();
    let (sn, cn) = (sn_sign * s, cn_sign * c);
    // dn² = (1 - m) + m·cn² avoids cancellation near sn = ±1.
    let dn = ((1.0 - m) + m * cn * cn).sqrt();
    EllipticPoint {
        x,
        sn,
        cn,
        dn,
        am: am_principal.unwrap_or(phi) + wraps * 2.0 * PI,
    }
}

/// Amplitude am(u, m) for 0 < m < 1 via the AGM / descending Landen chain.
///
/// Forward pass builds the AGM scale factors; the backward angle recursion
/// φ_{i-1} = (φ_i + asin((c_i/a_i) sin φ_i)) / 2 keeps |2φ_{i-1} - φ_i| ≤ π/2,
/// which selects the continuous branch of the amplitude.
fn landen_amplitude(u: f64, m: f64) -> f64 {
    let mut a = [0.0_f64; 40];
    let mut c = [0.0_f64; 40];
    a[0] = 1.0;
    c[0] = m.sqrt();
    let mut b = (1.0 - m).sqrt();
    let mut n = 0;
    while c[n] > f64::EPSILON * a[n] && n + 1 < 40 {
        let an = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
        a[n] = an;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    for i in (1..=n).rev() {
        let s = (c[i] / a[i] * phi.sin()).clamp(-1.0, 1.0);
        phi = 0.5 * (phi + s.asin());
    }
    phi
}

/// Smooth half-angle prefactors (cos(am/2), sin(am/2)).
///
/// These are the analytic continuations of √((1 ± cn)/2): they change sign
/// where 1 ± cn has a double zero and are antiperiodic over 4K.
pub fn half_angle_factors(p: &EllipticPoint) -> (f64, f64) {
    let half = 0.5 * p.am;
    (half.cos(), half.sin())
}
