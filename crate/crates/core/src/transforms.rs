//! Parameter and spectrum maps: the half-period shift relating the elliptic
//! potential to its companion form, and the m → 0 / m → 1 limit plumbing
//! toward the double sine-Gordon, double sinh-Gordon and hyperbolic
//! potentials.

use crate::elliptic::Modulus;
use crate::error::{Error, Result};
use crate::potentials::{v_companion, PotentialParams, Wavefunction};
use crate::qes::{closed_form_energies, solve_band_edges, BandEdgeSolution};

/// Parameters (a, β, m) of the companion potential
/// [β²/4 − m a(a+1)] cn² + β(a+½) sn dn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompanionParams {
    twice_a: u32,
    beta: f64,
    m: Modulus,
}

impl CompanionParams {
    pub fn new(twice_a: u32, beta: f64, m: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::domain(format!("beta must be finite, got {beta}")));
        }
        let m = Modulus::new(m)?;
        if m.get() >= 1.0 {
            return Err(Error::domain(
                "companion parameters require m < 1".to_string(),
            ));
        }
        Ok(CompanionParams { twice_a, beta, m })
    }

    pub fn twice_a(&self) -> u32 {
        self.twice_a
    }

    pub fn a(&self) -> f64 {
        self.twice_a as f64 / 2.0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m(&self) -> Modulus {
        self.m
    }

    pub fn potential(&self, x: f64) -> f64 {
        v_companion(x, self.a(), self.beta, self.m)
    }
}

/// Map elliptic parameters to companion parameters: β = −b/√(1−m).
pub fn to_companion(p: &PotentialParams) -> CompanionParams {
    CompanionParams {
        twice_a: p.twice_a(),
        beta: -p.b() / (1.0 - p.m_value()).sqrt(),
        m: p.m(),
    }
}

/// Inverse map: b = −√(1−m) β.
pub fn to_elliptic(c: &CompanionParams) -> Result<PotentialParams> {
    PotentialParams::new(
        c.twice_a,
        -(1.0 - c.m.get()).sqrt() * c.beta,
        c.m.get(),
    )
}

/// Band edges of the companion potential: identical energies to the mapped
/// elliptic problem, by translation invariance of the spectrum.
pub fn companion_edges(c: &CompanionParams) -> Result<Vec<BandEdgeSolution>> {
    solve_band_edges(&to_elliptic(c)?)
}

/// A companion-potential eigenfunction: the mapped elliptic eigenfunction
/// with its argument shifted by a quarter period, ψ_c(x) = ψ(x − K). The
/// shift direction realizes the substitution set sn → −cn/dn,
/// cn → √(1−m) sn/dn, dn → √(1−m)/dn, under which the elliptic potential
/// becomes exactly the companion form (sn·dn term sign included).
#[derive(Debug, Clone)]
pub struct CompanionWavefunction {
    inner: Wavefunction,
    shift: f64,
}

impl CompanionWavefunction {
    pub fn psi(&self, x: f64) -> f64 {
        self.inner.psi(x - self.shift)
    }

    pub fn u(&self, x: f64) -> f64 {
        self.inner.u(x - self.shift)
    }
}

pub fn companion_wavefunction(
    c: &CompanionParams,
    sol: &BandEdgeSolution,
) -> Result<CompanionWavefunction> {
    let p = to_elliptic(c)?;
    Ok(CompanionWavefunction {
        inner: sol.wavefunction(&p),
        shift: p.quarter_period(),
    })
}

/// Which endpoint of the modulus family to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    /// m → 0: double sine-Gordon, coupling is b.
    DsgM0,
    /// m → 1 at fixed b: double sinh-Gordon.
    DshgM1,
    /// m → 1 with b = −√(1−m) β: the hyperbolic potential. The coupling
    /// argument is β, and it drops out of the energies analytically.
    HyperbolicM1,
}

/// Band-edge energies at the family endpoints, sorted ascending.
///
/// For a ≤ 2 the closed forms are evaluated at the endpoint itself (they
/// stay finite at m = 1). For larger a the m = 0 endpoint is solved
/// directly, while the m → 1 endpoints are reached by polynomial
/// extrapolation in 1 − m (fixed b) or √(1−m) (hyperbolic coupling), since
/// the period diverges there.
pub fn limit_edges(twice_a: u32, coupling: f64, which: LimitKind) -> Result<Vec<f64>> {
    let closed_form = twice_a <= 4;
    let mut energies = match which {
        LimitKind::DsgM0 => {
            if closed_form {
                closed_form_energies(twice_a, coupling, 0.0)?
                    .into_iter()
                    .map(|(_, e)| e)
                    .collect()
            } else {
                solve_band_edges(&PotentialParams::new(twice_a, coupling, 0.0)?)?
                    .into_iter()
                    .map(|s| s.energy)
                    .collect()
            }
        }
        LimitKind::DshgM1 => {
            if closed_form {
                closed_form_energies(twice_a, coupling, 1.0)?
                    .into_iter()
                    .map(|(_, e)| e)
                    .collect()
            } else {
                // E is analytic in 1 − m at fixed b.
                extrapolate_to_limit(twice_a, &[1e-6, 4e-6, 16e-6], |h| {
                    (coupling, 1.0 - h)
                })?
            }
        }
        LimitKind::HyperbolicM1 => {
            if closed_form {
                // b = −√(1−m) β vanishes at the endpoint; β is gone exactly.
                closed_form_energies(twice_a, 0.0, 1.0)?
                    .into_iter()
                    .map(|(_, e)| e)
                    .collect()
            } else {
                // b = −√(1−m) β makes √(1−m) the natural small parameter.
                extrapolate_to_limit(twice_a, &[1e-3, 2e-3, 4e-3], |h| {
                    (-h * coupling, 1.0 - h * h)
                })?
            }
        }
    };
    energies.sort_by(f64::total_cmp);
    Ok(energies)
}

/// Evaluate the sorted band-edge energies at parameter points (b(h), m(h))
/// and extrapolate each level to h = 0 with the degree-2 Lagrange
/// polynomial through the three nodes.
fn extrapolate_to_limit(
    twice_a: u32,
    nodes: &[f64; 3],
    params_at: impl Fn(f64) -> (f64, f64),
) -> Result<Vec<f64>> {
    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(3);
    for &h in nodes {
        let (b, m) = params_at(h);
        let p = PotentialParams::new(twice_a, b, m)?;
        levels.push(solve_band_edges(&p)?.into_iter().map(|s| s.energy).collect());
    }
    let count = levels[0].len();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut acc = 0.0;
        for j in 0..3 {
            let mut weight = 1.0;
            for k in 0..3 {
                if k != j {
                    weight *= -nodes[k] / (nodes[j] - nodes[k]);
                }
            }
            acc += weight * levels[j][i];
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::bound_states_line;

    #[test]
    fn parameter_map_values_and_roundtrip() {
        let p = PotentialParams::new(2, 0.0, 0.5).unwrap();
        assert_eq!(to_companion(&p).beta(), 0.0);

        let p = PotentialParams::new(2, 1.0, 0.75).unwrap();
        let c = to_companion(&p);
        assert!((c.beta() + 2.0).abs() < 1e-15);

        let back = to_elliptic(&c).unwrap();
        assert!((back.b() - p.b()).abs() < 1e-15);
        assert_eq!(back.m_value(), p.m_value());
    }

    #[test]
    fn companion_energies_equal_mapped_elliptic_exactly() {
        let mut rng = crate::testutil::Rng::new(0xc0_11);
        for _ in 0..50 {
            let twice_a = (rng.next_u64() % 5) as u32;
            let beta = rng.uniform(-2.5, 2.5);
            let m = rng.uniform(0.02, 0.97);
            let c = CompanionParams::new(twice_a, beta, m).unwrap();
            let got: Vec<f64> = companion_edges(&c).unwrap().iter().map(|s| s.energy).collect();
            let p = to_elliptic(&c).unwrap();
            let want: Vec<f64> = solve_band_edges(&p).unwrap().iter().map(|s| s.energy).collect();
            assert_eq!(got, want, "a={} beta={beta} m={m}", c.a());
        }
    }

    #[test]
    fn companion_eigenfunction_solves_companion_potential() {
        let c = CompanionParams::new(2, 1.3, 0.5).unwrap();
        let sols = companion_edges(&c).unwrap();
        let h = 1e-4;
        for sol in &sols {
            let wf = companion_wavefunction(&c, sol).unwrap();
            let mut sup = 0.0_f64;
            let mut worst = 0.0_f64;
            for i in 0..400 {
                let x = -6.0 + 0.03 * i as f64;
                sup = sup.max(wf.psi(x).abs());
            }
            for i in 0..400 {
                let x = -6.0 + 0.03 * i as f64;
                let second = (-wf.psi(x + 2.0 * h) + 16.0 * wf.psi(x + h) - 30.0 * wf.psi(x)
                    + 16.0 * wf.psi(x - h)
                    - wf.psi(x - 2.0 * h))
                    / (12.0 * h * h);
                let resid = second + (sol.energy - c.potential(x)) * wf.psi(x);
                worst = worst.max(resid.abs());
            }
            let rel = worst / ((1.0 + sol.energy.abs()) * sup);
            assert!(rel < 1e-6, "companion residual {rel:.3e} at E = {}", sol.energy);
        }
    }

    #[test]
    fn dsg_limit_for_a_one() {
        let got = limit_edges(2, 1.0, LimitKind::DsgM0).unwrap();
        let r5 = 5.0_f64.sqrt();
        let want = [(1.0 - r5) / 2.0, 1.0, (1.0 + r5) / 2.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn dshg_limit_for_a_half() {
        for &b in &[0.5, 1.0, 2.0] {
            let got = limit_edges(1, b, LimitKind::DshgM1).unwrap();
            let mut want = [(-1.0 - 2.0 * b) / 4.0, (-1.0 + 2.0 * b) / 4.0];
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hyperbolic_limit_is_exactly_beta_independent() {
        for twice_a in [1u32, 2, 3, 4] {
            let a = limit_edges(twice_a, 0.5, LimitKind::HyperbolicM1).unwrap();
            let b = limit_edges(twice_a, 17.0, LimitKind::HyperbolicM1).unwrap();
            assert_eq!(a, b, "β must drop out exactly");
        }
        let both = limit_edges(1, 3.0, LimitKind::HyperbolicM1).unwrap();
        assert!((both[0] + 0.25).abs() < 1e-15);
        assert!((both[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_limit_matches_cubic_endpoint_for_a_two() {
        // At m = 1, b = 0 the three polynomial-sector levels are the roots
        // of x³ + 2x² − 3x = 0 shifted by 1 − 2m: {−4, −1, 0}.
        let got = limit_edges(4, 1.0, LimitKind::HyperbolicM1).unwrap();
        let want = [-4.0, -4.0, -1.0, -1.0, 0.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{got:?}");
        }
    }

    #[test]
    fn numeric_limit_path_matches_bound_states_for_a_three() {
        // a = 3 exceeds the closed-form range, so the m → 1 extrapolation
        // machinery is exercised against the finite-difference solver.
        let limit = limit_edges(6, 1.2, LimitKind::HyperbolicM1).unwrap();
        let bound = bound_states_line(3.0, 1.2, 25.0, 4001).unwrap();
        assert_eq!(bound.eigenvalues.len(), 3, "{:?}", bound.eigenvalues);
        for &e in &bound.eigenvalues {
            let nearest = limit
                .iter()
                .map(|&l| (l - e).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-4, "bound state {e} missing from limit {limit:?}");
        }
        for &l in limit.iter().filter(|&&l| l < -1e-3) {
            let nearest = bound
                .eigenvalues
                .iter()
                .map(|&e| (l - e).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-4, "limit level {l} not among bound states");
        }
    }

    #[test]
    fn companion_energies_approach_hyperbolic_values() {
        let m = 1.0 - 1e-8;
        let b = -(1.0_f64 - m).sqrt() * 1.5;
        let levels = closed_form_energies(4, b, m).unwrap();
        for (_, e) in levels {
            let nearest = [-4.0, -1.0, 0.0]
                .iter()
                .map(|w| (e - w).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-3, "level {e} far from limit set");
        }
    }

    #[test]
    fn companion_eigenfunctions_stay_beta_dependent_as_energies_merge() {
        let m = 1.0 - 1e-6;
        let c1 = CompanionParams::new(2, 0.5, m).unwrap();
        let c2 = CompanionParams::new(2, 1.5, m).unwrap();
        let s1 = companion_edges(&c1).unwrap();
        let s2 = companion_edges(&c2).unwrap();
        assert!(
            (s1[0].energy - s2[0].energy).abs() < 1e-4,
            "energies nearly agree near the limit"
        );
        let w1 = companion_wavefunction(&c1, &s1[0]).unwrap();
        let w2 = companion_wavefunction(&c2, &s2[0]).unwrap();
        let xs: Vec<f64> = (0..200).map(|i| -4.0 + 0.04 * i as f64).collect();
        let sup1 = xs.iter().map(|&x| w1.psi(x).abs()).fold(0.0_f64, f64::max);
        let sup2 = xs.iter().map(|&x| w2.psi(x).abs()).fold(0.0_f64, f64::max);
        let diff = xs
            .iter()
            .map(|&x| (w1.psi(x) / sup1 - w2.psi(x) / sup2).abs())
            .fold(0.0_f64, f64::max);
        assert!(diff > 1e-3, "normalized eigenfunctions differ by only {diff:.3e}");
    }
}
