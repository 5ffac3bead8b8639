//! Independent numeric spectra, with no knowledge of the algebraic sector
//! structure: Floquet band edges of a periodic potential in a real
//! trigonometric basis, and bound states of the hyperbolic potential by
//! finite differences on a truncated line.

use crate::error::{Error, Result};
use crate::linalg::{
    householder_tridiagonalize, tridiagonal_eigenvalues, tridiagonal_eigenvalues_below,
    tridiagonal_eigenvector, Matrix,
};
use crate::potentials::v_hyperbolic;

/// Floquet boundary condition over one period: band edges are the
/// eigenvalues under periodic (k = 0) and antiperiodic (k = π/L) conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    Periodic,
    Antiperiodic,
}

/// A Floquet band-edge problem: −ψ'' + V(x)ψ = Eψ with V of period
/// `period`, diagonalized in an orthonormal real trigonometric basis.
pub struct FloquetSpec<'a> {
    pub period: f64,
    pub bc: Bc,
    /// Resolution parameter; the matrix dimension is n_basis + 1
    /// (periodic) or n_basis (antiperiodic). Must be even and ≥ 16.
    pub n_basis: usize,
    pub potential: &'a dyn Fn(f64) -> f64,
}

/// How a [`NumericSpectrum`] was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discretization {
    PlaneWave { n_basis: usize },
    /// Eigenvalues are Richardson-extrapolated from the `n_grid` mesh and
    /// its half-step refinement.
    FiniteDifference { n_grid: usize, half_width: f64 },
}

/// Sorted eigenvalues from one numeric solver run.
#[derive(Debug, Clone)]
pub struct NumericSpectrum {
    pub eigenvalues: Vec<f64>,
    pub bc: Option<Bc>,
    pub discretization: Discretization,
}

impl NumericSpectrum {
    /// Distance from `energy` to the nearest eigenvalue.
    pub fn nearest_distance(&self, energy: f64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|&e| (e - energy).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Lowest `count` Floquet band-edge eigenvalues.
///
/// The basis is the constant plus cos/sin pairs at wavenumbers 2πj/L
/// (periodic) or 2π(j+½)/L (antiperiodic); potential matrix elements come
/// from the rectangle rule on 8·n_basis uniform samples, which is
/// spectrally accurate for periodic integrands. Doubling `n_basis` nests
/// the basis, so reported eigenvalues decrease monotonically toward the
/// exact edges.
pub fn floquet_edges(spec: &FloquetSpec, count: usize) -> Result<NumericSpectrum> {
    let n_basis = spec.n_basis;
    let period = spec.period;
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::domain(format!("period must be positive, got {period}")));
    }
    if n_basis < 16 || n_basis % 2 != 0 {
        return Err(Error::domain(format!(
            "n_basis must be even and at least 16, got {n_basis}"
        )));
    }

    let v = spec.potential;
    let n_samples = 8 * n_basis;
    let step = period / n_samples as f64;
    let values: Vec<f64> = (0..n_samples).map(|s| v(s as f64 * step)).collect();
    let v_scale = values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));

    // The claimed period must actually be one.
    for i in 0..7 {
        let x = period * i as f64 / 7.0 + 0.1 * period / 7.0;
        if (v(x + period) - v(x)).abs() > 1e-9 * (1.0 + v_scale) {
            return Err(Error::domain(format!(
                "potential is not {period}-periodic at x = {x}"
            )));
        }
    }

    // Wavenumber of each basis function; cos/sin pairs share one.
    let mut wavenumbers: Vec<f64> = Vec::new();
    let mut is_cos: Vec<bool> = Vec::new();
    match spec.bc {
        Bc::Periodic => {
            wavenumbers.push(0.0);
            is_cos.push(true);
            for j in 1..=n_basis / 2 {
                let k = 2.0 * std::f64::consts::PI * j as f64 / period;
                wavenumbers.push(k);
                is_cos.push(true);
                wavenumbers.push(k);
                is_cos.push(false);
            }
        }
        Bc::Antiperiodic => {
            for j in 0..n_basis / 2 {
                let k = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / period;
                wavenumbers.push(k);
                is_cos.push(true);
                wavenumbers.push(k);
                is_cos.push(false);
            }
        }
    }
    let dim = wavenumbers.len();
    if count > dim {
        return Err(Error::domain(format!(
            "requested {count} eigenvalues from a dimension-{dim} basis"
        )));
    }

    // Orthonormal basis samples: B[p][s] = φ_p(x_s).
    let norm_const = (1.0 / period).sqrt();
    let norm_wave = (2.0 / period).sqrt();
    let mut b = vec![vec![0.0_f64; n_samples]; dim];
    for p in 0..dim {
        for (s, row) in b[p].iter_mut().enumerate() {
            let x = s as f64 * step;
            let k = wavenumbers[p];
            *row = if k == 0.0 {
                norm_const
            } else if is_cos[p] {
                norm_wave * (k * x).cos()
            } else {
                norm_wave * (k * x).sin()
            };
        }
    }

    let mut h = Matrix::zeros(dim, dim);
    for p in 0..dim {
        for q in p..dim {
            let mut acc = 0.0;
            for s in 0..n_samples {
                acc += b[p][s] * values[s] * b[q][s];
            }
            let elem = acc * step;
            h[(p, q)] = elem;
            h[(q, p)] = elem;
        }
    }
    for p in 0..dim {
        h[(p, p)] += wavenumbers[p] * wavenumbers[p];
    }

    let (d, e) = householder_tridiagonalize(&h);
    let mut eig = tridiagonal_eigenvalues(&d, &e)?;
    eig.truncate(count);
    Ok(NumericSpectrum {
        eigenvalues: eig,
        bc: Some(spec.bc),
        discretization: Discretization::PlaneWave { n_basis },
    })
}

fn fd_eigenvalues_below(a: f64, beta: f64, half_width: f64, n_grid: usize, bound: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = 2.0 * half_width / (n_grid - 1) as f64;
    let interior = n_grid - 2;
    let inv_h2 = 1.0 / (h * h);
    let diag: Vec<f64> = (0..interior)
        .map(|i| {
            let x = -half_width + (i + 1) as f64 * h;
            2.0 * inv_h2 + v_hyperbolic(x, a, beta)
        })
        .collect();
    let sub = vec![-inv_h2; interior - 1];
    let eig = tridiagonal_eigenvalues_below(&diag, &sub, bound);
    (eig, diag, sub)
}

/// Bound states (E < −1e−6) of the hyperbolic potential by 3-point finite
/// differences on [−W, W] with Dirichlet ends.
///
/// Solves on the requested grid and its half-step refinement and returns
/// the h² Richardson extrapolation, so halving the step changes the
/// reported values far below the raw discretization error. Errors if the
/// box is too small: every returned eigenfunction must hold its mass away
/// from the boundary (outermost 1% of the grid carries < 1e−8 of it).
pub fn bound_states_line(
    a: f64,
    beta: f64,
    half_width: f64,
    n_grid: usize,
) -> Result<NumericSpectrum> {
    if !(a.is_finite() && beta.is_finite()) {
        return Err(Error::domain("a and beta must be finite".to_string()));
    }
    if half_width < 20.0 {
        return Err(Error::domain(format!(
            "half_width must be at least 20, got {half_width}"
        )));
    }
    if n_grid < 2001 || n_grid % 2 == 0 {
        return Err(Error::domain(format!(
            "n_grid must be odd and at least 2001, got {n_grid}"
        )));
    }

    let detect = -1e-7;
    let (coarse, _, _) = fd_eigenvalues_below(a, beta, half_width, n_grid, detect);
    let fine_grid = 2 * n_grid - 1;
    let (fine, diag, sub) = fd_eigenvalues_below(a, beta, half_width, fine_grid, detect);

    let pairs = coarse.len().min(fine.len());
    let mut eigenvalues = Vec::with_capacity(pairs);
    for i in 0..pairs {
        let change = (fine[i] - coarse[i]).abs();
        if change > 1e-3 * (1.0 + fine[i].abs()) {
            return Err(Error::internal(format!(
                "finite-difference level {i} not converged: step halving moved it by {change:.3e}"
            )));
        }
        let extrapolated = (4.0 * fine[i] - coarse[i]) / 3.0;
        if extrapolated < -1e-6 {
            eigenvalues.push(extrapolated);
        }
    }

    // Boundary-mass guard on every retained level, at the fine resolution.
    let interior = fine_grid - 2;
    let tail = (interior / 100).max(1);
    for (i, &lam) in fine.iter().enumerate().take(eigenvalues.len()) {
        let psi = tridiagonal_eigenvector(&diag, &sub, lam);
        let total: f64 = psi.iter().map(|v| v * v).sum();
        let edge: f64 = psi[..tail]
            .iter()
            .chain(&psi[interior - tail..])
            .map(|v| v * v)
            .sum();
        if edge / total > 1e-8 {
            return Err(Error::DomainSize(format!(
                "level {i} (E ≈ {lam:.6}) keeps {:.3e} of its mass at the box edge; \
                 enlarge half_width",
                edge / total
            )));
        }
    }

    eigenvalues.sort_by(f64::total_cmp);
    Ok(NumericSpectrum {
        eigenvalues,
        bc: None,
        discretization: Discretization::FiniteDifference { n_grid, half_width },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{v_dsg, v_elliptic, PotentialParams};

    #[test]
    fn free_particle_periodic_spectrum() {
        let period = 2.0 * std::f64::consts::PI;
        let zero = |_: f64| 0.0;
        let spec = FloquetSpec {
            period,
            bc: Bc::Periodic,
            n_basis: 32,
            potential: &zero,
        };
        let s = floquet_edges(&spec, 7).unwrap();
        let want = [0.0, 1.0, 1.0, 4.0, 4.0, 9.0, 9.0];
        for (got, want) in s.eigenvalues.iter().zip(want) {
            assert!((got - want).abs() < 1e-10, "{:?}", s.eigenvalues);
        }
    }

    #[test]
    fn free_particle_antiperiodic_spectrum() {
        let period = 2.0 * std::f64::consts::PI;
        let zero = |_: f64| 0.0;
        let spec = FloquetSpec {
            period,
            bc: Bc::Antiperiodic,
            n_basis: 32,
            potential: &zero,
        };
        let s = floquet_edges(&spec, 6).unwrap();
        let want = [0.25, 0.25, 2.25, 2.25, 6.25, 6.25];
        for (got, want) in s.eigenvalues.iter().zip(want) {
            assert!((got - want).abs() < 1e-10, "{:?}", s.eigenvalues);
        }
    }

    #[test]
    fn validation_errors() {
        let zero = |_: f64| 0.0;
        let bad_basis = FloquetSpec {
            period: 1.0,
            bc: Bc::Periodic,
            n_basis: 10,
            potential: &zero,
        };
        assert!(floquet_edges(&bad_basis, 3).is_err());
        let odd_basis = FloquetSpec {
            period: 1.0,
            bc: Bc::Periodic,
            n_basis: 33,
            potential: &zero,
        };
        assert!(floquet_edges(&odd_basis, 3).is_err());
        let linear = |x: f64| x;
        let not_periodic = FloquetSpec {
            period: 1.0,
            bc: Bc::Periodic,
            n_basis: 16,
            potential: &linear,
        };
        assert!(floquet_edges(&not_periodic, 3).is_err());
    }

    #[test]
    fn analytic_levels_appear_in_floquet_spectrum() {
        let p = PotentialParams::new(2, 1.0, 0.5).unwrap();
        let pot = |x: f64| v_elliptic(x, &p);
        let spec = FloquetSpec {
            period: p.period(),
            bc: Bc::Periodic,
            n_basis: 64,
            potential: &pot,
        };
        let s = floquet_edges(&spec, 20).unwrap();
        let r5h = 0.5 * (5.0_f64).sqrt();
        for want in [-r5h, 0.0, r5h] {
            assert!(
                s.nearest_distance(want) < 1e-6,
                "{want} missing from {:?}",
                &s.eigenvalues[..6]
            );
        }
    }

    #[test]
    fn doubling_converges_and_is_monotone() {
        let p = PotentialParams::new(3, 1.5, 0.4).unwrap();
        let pot = |x: f64| v_elliptic(x, &p);
        let run = |n_basis: usize| {
            floquet_edges(
                &FloquetSpec {
                    period: p.period(),
                    bc: Bc::Antiperiodic,
                    n_basis,
                    potential: &pot,
                },
                6,
            )
            .unwrap()
            .eigenvalues
        };
        let a = run(32);
        let b = run(64);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "doubling moved an edge by {}", (x - y).abs());
            assert!(*y <= x + 1e-12, "variational monotonicity violated");
        }
    }

    #[test]
    fn dsg_spectrum_from_dsg_potential_function() {
        // Same physics through the m = 0 elliptic route and the explicit
        // trigonometric formula.
        let p = PotentialParams::new(2, 1.0, 0.0).unwrap();
        let via_elliptic = |x: f64| v_elliptic(x, &p);
        let direct = |x: f64| v_dsg(x, 1.0, 1.0);
        let run = |pot: &dyn Fn(f64) -> f64| {
            floquet_edges(
                &FloquetSpec {
                    period: 2.0 * std::f64::consts::PI,
                    bc: Bc::Periodic,
                    n_basis: 32,
                    potential: pot,
                },
                8,
            )
            .unwrap()
            .eigenvalues
        };
        let s1 = run(&via_elliptic);
        let s2 = run(&direct);
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperbolic_bound_states_single_level() {
        let s = bound_states_line(1.0, 0.7, 25.0, 4001).unwrap();
        assert_eq!(s.eigenvalues.len(), 1, "{:?}", s.eigenvalues);
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-4, "{:?}", s.eigenvalues);
    }

    #[test]
    fn hyperbolic_bound_states_two_levels() {
        let s = bound_states_line(2.0, 1.5, 25.0, 4001).unwrap();
        assert_eq!(s.eigenvalues.len(), 2, "{:?}", s.eigenvalues);
        assert!((s.eigenvalues[0] + 4.0).abs() < 1e-4);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn bound_state_energies_are_beta_independent() {
        let s1 = bound_states_line(2.0, 0.5, 25.0, 4001).unwrap();
        let s2 = bound_states_line(2.0, 2.0, 25.0, 4001).unwrap();
        assert_eq!(s1.eigenvalues.len(), s2.eigenvalues.len());
        for (a, b) in s1.eigenvalues.iter().zip(&s2.eigenvalues) {
            assert!((a - b).abs() < 2e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn halving_the_step_barely_moves_extrapolated_levels() {
        let s1 = bound_states_line(1.0, 0.7, 25.0, 2001).unwrap();
        let s2 = bound_states_line(1.0, 0.7, 25.0, 4001).unwrap();
        for (a, b) in s1.eigenvalues.iter().zip(&s2.eigenvalues) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn shallow_state_triggers_domain_size_error() {
        // a = 2.2 has a level near −0.04 whose tail reaches x = 20.
        match bound_states_line(2.2, 1.0, 20.0, 2001) {
            Err(Error::DomainSize(_)) => {}
            other => panic!("expected DomainSize error, got {other:?}"),
        }
    }

    #[test]
    fn grid_validation_errors() {
        assert!(bound_states_line(1.0, 0.5, 10.0, 4001).is_err());
        assert!(bound_states_line(1.0, 0.5, 25.0, 2000).is_err());
        assert!(bound_states_line(1.0, 0.5, 25.0, 999).is_err());
    }
}
