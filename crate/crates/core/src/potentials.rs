//! The elliptic potential family, its trigonometric/hyperbolic companions,
//! the gauge factor, and full wavefunction assembly.
//!
//! The central object is the 4K(m)-periodic potential
//!
//! ```text
//! V(x, m) = [b²/4 − m(1−m)a(a+1)] sn²/dn² − b(a+½) cn/dn²
//! ```
//!
//! which reduces to the double sine-Gordon potential at m = 0 and the double
//! sinh-Gordon potential at m = 1. Eigenfunctions factor as
//! ψ = gauge · dn⁻ᵃ · u with u a sector prefactor times a polynomial in cn;
//! the gauge and dn⁻ᵃ layers are strictly positive and 4K-periodic, so ψ and
//! u share their node set and periodicity class.

use crate::elliptic::{complete_elliptic_k, half_angle_factors, jacobi_point, EllipticPoint, Modulus};
use crate::error::{Error, Result};

/// Problem parameters (a, b, m) with the derived quarter period K(m).
///
/// `a` is a non-negative integer or half-integer stored as `twice_a`, which
/// keeps the half-integer arithmetic exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    twice_a: u32,
    b: f64,
    m: Modulus,
    quarter: f64,
}

impl PotentialParams {
    /// Requires m ∈ [0, 1): the period 4K(m) must be finite. The m = 1
    /// hyperbolic limit is served by [`v_hyperbolic`] and the bound-state
    /// solver instead.
    pub fn new(twice_a: u32, b: f64, m: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::domain(format!("coupling b must be finite, got {b}")));
        }
        let m = Modulus::new(m)?;
        let quarter = complete_elliptic_k(m)?;
        Ok(PotentialParams {
            twice_a,
            b,
            m,
            quarter,
        })
    }

    pub fn twice_a(&self) -> u32 {
        self.twice_a
    }

    pub fn a(&self) -> f64 {
        self.twice_a as f64 / 2.0
    }

    pub fn is_integer_a(&self) -> bool {
        self.twice_a % 2 == 0
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn m(&self) -> Modulus {
        self.m
    }

    pub fn m_value(&self) -> f64 {
        self.m.get()
    }

    /// K(m), the quarter period of sn and cn.
    pub fn quarter_period(&self) -> f64 {
        self.quarter
    }

    /// 4K(m), the period of the potential.
    pub fn period(&self) -> f64 {
        4.0 * self.quarter
    }

    /// Same parameters with the coupling negated (the half-period shift
    /// x → x + 2K maps the potential onto itself with b → −b).
    pub fn with_negated_b(&self) -> Self {
        PotentialParams {
            b: -self.b,
            ..*self
        }
    }
}

/// Symmetry sector of an algebraic band-edge solution, identified by the
/// prefactor multiplying the polynomial in cn.
///
/// Integer a: `IntegerEven` (prefactor 1) and `IntegerOdd` (prefactor sn),
/// both 4K-periodic. Half-integer a: `HalfPlus` (cos(am/2), the smooth
/// branch of √((1+cn)/2)) and `HalfMinus` (sin(am/2)), both antiperiodic
/// over 4K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SectorTag {
    IntegerEven,
    IntegerOdd,
    HalfPlus,
    HalfMinus,
}

impl SectorTag {
    pub fn prefactor(&self, p: &EllipticPoint) -> f64 {
        match self {
            SectorTag::IntegerEven => 1.0,
            SectorTag::IntegerOdd => p.sn,
            SectorTag::HalfPlus => half_angle_factors(p).0,
            SectorTag::HalfMinus => half_angle_factors(p).1,
        }
    }

    /// True for the 4K-periodic sectors, false for the antiperiodic ones.
    pub fn is_periodic_4k(&self) -> bool {
        matches!(self, SectorTag::IntegerEven | SectorTag::IntegerOdd)
    }

    pub fn label(&self) -> &'static str {
        match self {
            SectorTag::IntegerEven => "integer_even",
            SectorTag::IntegerOdd => "integer_odd",
            SectorTag::HalfPlus => "half_plus",
            SectorTag::HalfMinus => "half_minus",
        }
    }
}

/// The elliptic potential V(x, m). 4K-periodic; satisfies
/// V(x + 2K; b) = V(x; −b).
pub fn v_elliptic(x: f64, p: &PotentialParams) -> f64 {
    let ep = jacobi_point(x, p.m);
    let m = p.m.get();
    let a = p.a();
    let dn2 = ep.dn * ep.dn;
    (p.b * p.b / 4.0 - m * (1.0 - m) * a * (a + 1.0)) * ep.sn * ep.sn / dn2
        - p.b * (a + 0.5) * ep.cn / dn2
}

/// Double sine-Gordon potential, the m = 0 limit of [`v_elliptic`].
pub fn v_dsg(x: f64, a: f64, b: f64) -> f64 {
    let s = x.sin();
    b * b / 4.0 * s * s - b * (a + 0.5) * x.cos()
}

/// Double sinh-Gordon potential, the m = 1 limit of [`v_elliptic`].
pub fn v_dshg(x: f64, a: f64, b: f64) -> f64 {
    let s = x.sinh();
    b * b / 4.0 * s * s - b * (a + 0.5) * x.cosh()
}

/// Hyperbolic potential on the line:
/// [β²/4 − a(a+1)] sech²x − β(a+½) sech x tanh x.
///
/// Its bound-state energies are β-independent; its eigenfunctions are not.
pub fn v_hyperbolic(x: f64, a: f64, beta: f64) -> f64 {
    let sech = 1.0 / x.cosh();
    (beta * beta / 4.0 - a * (a + 1.0)) * sech * sech
        - beta * (a + 0.5) * sech * x.tanh()
}

/// Companion periodic potential [β²/4 − m a(a+1)] cn² + β(a+½) sn dn.
///
/// The half-period shift x → x + K maps the elliptic potential onto this
/// one (up to reflection; the sn·dn term is odd) with β = −b/√(1−m). As
/// m → 1 it converges pointwise to [`v_hyperbolic`] mirrored under x → −x.
pub fn v_companion(x: f64, a: f64, beta: f64, m: Modulus) -> f64 {
    let ep = jacobi_point(x, m);
    (beta * beta / 4.0 - m.get() * a * (a + 1.0)) * ep.cn * ep.cn
        + beta * (a + 0.5) * ep.sn * ep.dn
}

/// Below this m (or 1 − m), the gauge exponent switches to its limit form;
/// the √(m(1−m)) denominator is numerically singular at both ends while the
/// normalized factor stays finite.
const GAUGE_SWITCH: f64 = 1e-10;

/// Exponent of the gauge factor, (b/(2√(m(1−m)))) · arctan(√(m/(1−m)) cn x).
///
/// At m → 0 this tends to (b/2) cn x / (1−m); at m → 1, after dropping the
/// x-independent divergent constant (absorbed into normalization), it tends
/// to the double sinh-Gordon form −(b/2) cosh x on the |x| < K window that
/// survives the limit.
pub fn gauge_exponent(x: f64, p: &PotentialParams) -> f64 {
    if p.b == 0.0 {
        return 0.0;
    }
    let m = p.m.get();
    let cn = jacobi_point(x, p.m).cn;
    if m < GAUGE_SWITCH {
        0.5 * p.b * cn / (1.0 - m)
    } else if 1.0 - m < GAUGE_SWITCH {
        // arctan(z) = sign(z) π/2 − arctan(1/z); the ±π/2 piece carries the
        // divergent prefactor and is dropped.
        let s = (m * (1.0 - m)).sqrt();
        let q = (m / (1.0 - m)).sqrt();
        -(0.5 * p.b / s) * (1.0 / (q * cn)).atan()
    } else {
        let s = (m * (1.0 - m)).sqrt();
        let q = (m / (1.0 - m)).sqrt();
        (0.5 * p.b / s) * (q * cn).atan()
    }
}

/// Strictly positive, 4K-periodic gauge layer of the wavefunction.
pub fn gauge_factor(x: f64, p: &PotentialParams) -> f64 {
    gauge_exponent(x, p).exp()
}

/// One wavefunction sample with its multiplicative layers.
#[derive(Debug, Clone, Copy)]
pub struct PsiSample {
    pub x: f64,
    pub psi: f64,
    pub u: f64,
    pub gauge: f64,
    pub dn_power: f64,
}

/// A fully assembled band-edge eigenfunction ψ = gauge · dn⁻ᵃ · u, where
/// u = prefactor(sector) · Σ coeffs[k] cnᵏ.
///
/// Not L²-normalized: the coefficient vector carries the leading-one
/// convention of the sector eigenproblem.
#[derive(Debug, Clone)]
pub struct Wavefunction {
    params: PotentialParams,
    sector: SectorTag,
    coeffs: Vec<f64>,
}

impl Wavefunction {
    pub fn new(params: PotentialParams, sector: SectorTag, coeffs: Vec<f64>) -> Self {
        Wavefunction {
            params,
            sector,
            coeffs,
        }
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn sector(&self) -> SectorTag {
        self.sector
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn u_at(&self, ep: &EllipticPoint) -> f64 {
        let mut poly = 0.0;
        for &c in self.coeffs.iter().rev() {
            poly = poly * ep.cn + c;
        }
        self.sector.prefactor(ep) * poly
    }

    pub fn u(&self, x: f64) -> f64 {
        self.u_at(&jacobi_point(x, self.params.m))
    }

    pub fn gauge(&self, x: f64) -> f64 {
        gauge_factor(x, &self.params)
    }

    /// dn(x)⁻ᵃ, strictly positive and 4K-periodic.
    pub fn dn_power(&self, x: f64) -> f64 {
        jacobi_point(x, self.params.m).dn.powf(-self.params.a())
    }

    pub fn psi(&self, x: f64) -> f64 {
        self.sample(x).psi
    }

    pub fn sample(&self, x: f64) -> PsiSample {
        let ep = jacobi_point(x, self.params.m);
        let u = self.u_at(&ep);
        let gauge = gauge_factor(x, &self.params);
        let dn_power = ep.dn.powf(-self.params.a());
        PsiSample {
            x,
            psi: gauge * dn_power * u,
            u,
            gauge,
            dn_power,
        }
    }
}

/// Relative Schrödinger residual of an assembled eigenpair:
/// max over an `n_grid`-point period grid of
/// |ψ'' + (E − V)ψ| / ((1 + |E|) ‖ψ‖∞), with ψ'' from the 5-point central
/// difference stencil at step h = 1e−4.
pub fn schrodinger_residual(wf: &Wavefunction, energy: f64, n_grid: usize) -> f64 {
    let p = wf.params();
    let period = p.period();
    let h = 1e-4;
    let mut sup = 0.0_f64;
    let mut worst = 0.0_f64;
    let samples: Vec<(f64, f64)> = (0..n_grid)
        .map(|i| {
            let x = period * i as f64 / n_grid as f64;
            (x, wf.psi(x))
        })
        .collect();
    for &(_, psi) in &samples {
        sup = sup.max(psi.abs());
    }
    for &(x, psi) in &samples {
        let f2 = wf.psi(x + 2.0 * h);
        let f1 = wf.psi(x + h);
        let b1 = wf.psi(x - h);
        let b2 = wf.psi(x - 2.0 * h);
        let second = (-f2 + 16.0 * f1 - 30.0 * psi + 16.0 * b1 - b2) / (12.0 * h * h);
        let resid = second + (energy - v_elliptic(x, p)) * psi;
        worst = worst.max(resid.abs());
    }
    worst / ((1.0 + energy.abs()) * sup)
}
