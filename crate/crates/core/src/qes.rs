//! The algebraic (quasi-exactly solvable) band edges.
//!
//! After the gauge and dn⁻ᵃ layers are peeled off, the remaining factor u
//! satisfies
//!
//! ```text
//! u'' + [2am sn·cn/dn − b sn/dn] u' + [E + am + ab cn + m a(a−1) sn²] u = 0
//! ```
//!
//! and, for integer or half-integer a, this operator closes on finite
//! function spaces: polynomials in cn times a sector prefactor (1, sn,
//! cos(am/2) or sin(am/2)). Each sector yields a small dense real matrix
//! whose eigenvalues are band-edge energies; the union over sectors has
//! exactly 2a+1 members.
//!
//! The sector matrices are built by collocation with a closure self-check:
//! the operator is applied analytically at points where cn sits on Chebyshev
//! nodes, expanded back onto the basis by least squares, and the expansion
//! is validated at held-out points. For the polynomial-only sector an exact
//! monomial-action matrix is available as an independent cross-check, and
//! the same matrix is what the quadratic sl(2, R) generator combination
//! must reproduce.

use crate::elliptic::{jacobi_point, EllipticPoint};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::potentials::{PotentialParams, SectorTag, Wavefunction};

/// Tolerance for the held-out closure residual, relative to ‖Lφ‖∞.
const CLOSURE_TOL: f64 = 1e-8;
/// Least-squares condition estimate beyond which the fit is rejected.
const CONDITION_LIMIT: f64 = 1e12;
/// Largest tolerated |Im λ| before a sector spectrum is declared non-real.
const REALITY_TOL: f64 = 1e-8;
/// Eigenvalues closer than this are treated as a degenerate pair.
const DEGENERACY_TOL: f64 = 1e-10;
/// Grid resolution for node counting over one period.
const NODE_GRID: usize = 4096;

/// One invariant sector: prefactor family and polynomial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sector {
    pub tag: SectorTag,
    pub dim: usize,
}

/// Periodicity class of a band edge over the 4K period: periodic (`P4K`)
/// or antiperiodic (`A4K`, i.e. period 8K).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Periodicity {
    P4K,
    A4K,
}

impl Periodicity {
    pub fn label(&self) -> &'static str {
        match self {
            Periodicity::P4K => "4K",
            Periodicity::A4K => "8K",
        }
    }
}

/// Sector matrix in the basis φ_k = prefactor · cnᵏ. `entries` is the
/// matrix whose eigenvalues are the sector's band-edge energies.
#[derive(Debug, Clone)]
pub struct SectorMatrix {
    pub sector: Sector,
    pub entries: Matrix,
    /// Worst held-out closure residual, relative to ‖Lφ‖∞.
    pub closure_residual: f64,
    /// Condition estimate of the collocation least-squares fit.
    pub condition_estimate: f64,
}

/// One analytic band-edge level.
#[derive(Debug, Clone)]
pub struct BandEdgeSolution {
    pub energy: f64,
    pub sector: SectorTag,
    /// Polynomial coefficients in cn (ascending powers), leading
    /// coefficient one.
    pub coeffs: Vec<f64>,
    pub nodes_4k: usize,
    /// Even-multiplicity grazes of zero, reported but not counted as nodes.
    pub tangential_4k: usize,
    pub periodicity: Periodicity,
}

impl BandEdgeSolution {
    pub fn wavefunction(&self, p: &PotentialParams) -> Wavefunction {
        Wavefunction::new(*p, self.sector, self.coeffs.clone())
    }
}

/// Node count of u over [0, 4K): sign changes, with even-multiplicity
/// grazes reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCount {
    pub nodes: usize,
    pub tangential: usize,
}

/// The sectors for a given a, in deterministic order. Total dimension is
/// always 2a+1: integer a = n gives n+1 even and n odd solutions;
/// half-integer a = n+½ gives n+1 of each half-angle family.
pub fn enumerate_sectors(p: &PotentialParams) -> Vec<Sector> {
    let twice_a = p.twice_a() as usize;
    if twice_a % 2 == 0 {
        let n = twice_a / 2;
        let mut out = vec![Sector {
            tag: SectorTag::IntegerEven,
            dim: n + 1,
        }];
        if n >= 1 {
            out.push(Sector {
                tag: SectorTag::IntegerOdd,
                dim: n,
            });
        }
        out
    } else {
        let n = (twice_a - 1) / 2;
        vec![
            Sector {
                tag: SectorTag::HalfPlus,
                dim: n + 1,
            },
            Sector {
                tag: SectorTag::HalfMinus,
                dim: n + 1,
            },
        ]
    }
}

fn sector_dim_for(p: &PotentialParams, tag: SectorTag) -> Result<usize> {
    enumerate_sectors(p)
        .into_iter()
        .find(|s| s.tag == tag)
        .map(|s| s.dim)
        .ok_or_else(|| {
            Error::domain(format!(
                "sector {:?} does not exist for a = {}",
                tag,
                p.a()
            ))
        })
}

/// Basis function φ_k = prefactor · cnᵏ and its first two derivatives,
/// all in closed form via sn' = cn·dn, cn' = −sn·dn, dn' = −m·sn·cn,
/// am' = dn.
fn basis_derivs(tag: SectorTag, k: usize, ep: &EllipticPoint, m: f64) -> (f64, f64, f64) {
    let (sn, cn, dn) = (ep.sn, ep.cn, ep.dn);
    let kf = k as f64;
    let g = cn.powi(k as i32);
    let gm1 = if k >= 1 { cn.powi(k as i32 - 1) } else { 0.0 };
    let gm2 = if k >= 2 { cn.powi(k as i32 - 2) } else { 0.0 };
    let gp = -kf * sn * dn * gm1;
    let gpp = -kf * (dn * dn - m * sn * sn) * g + kf * (kf - 1.0) * sn * sn * dn * dn * gm2;

    let (f, fp, fpp) = match tag {
        SectorTag::IntegerEven => (1.0, 0.0, 0.0),
        SectorTag::IntegerOdd => (sn, cn * dn, -sn * (dn * dn + m * cn * cn)),
        SectorTag::HalfPlus => {
            let half = 0.5 * ep.am;
            let (s, c) = half.sin_cos();
            (
                c,
                -0.5 * dn * s,
                0.5 * m * sn * cn * s - 0.25 * dn * dn * c,
            )
        }
        SectorTag::HalfMinus => {
            let half = 0.5 * ep.am;
            let (s, c) = half.sin_cos();
            (
                s,
                0.5 * dn * c,
                -0.5 * m * sn * cn * c - 0.25 * dn * dn * s,
            )
        }
    };
    (f * g, fp * g + f * gp, fpp * g + 2.0 * fp * gp + f * gpp)
}

/// E-independent part of the transformed operator applied to φ_k.
/// Returns (value, term magnitude); the latter sets the rounding-noise
/// scale left after cancellation between the stencil terms.
fn apply_operator(p: &PotentialParams, tag: SectorTag, k: usize, ep: &EllipticPoint) -> (f64, f64) {
    let m = p.m_value();
    let a = p.a();
    let b = p.b();
    let (phi, dphi, ddphi) = basis_derivs(tag, k, ep, m);
    let c1 = 2.0 * a * m * ep.sn * ep.cn / ep.dn - b * ep.sn / ep.dn;
    let c0 = a * m + a * b * ep.cn + m * a * (a - 1.0) * ep.sn * ep.sn;
    (
        ddphi + c1 * dphi + c0 * phi,
        ddphi.abs() + (c1 * dphi).abs() + (c0 * phi).abs(),
    )
}

/// Invert cn on its monotone branch over (0, 2K) by bisection.
fn x_where_cn_equals(p: &PotentialParams, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 2.0 * p.quarter_period());
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if jacobi_point(mid, p.m()).cn > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Build the sector matrix by collocation.
///
/// The operator is applied analytically at 2·dim points with cn on
/// first-kind Chebyshev nodes, expanded back onto the basis by least
/// squares, and the expansion is checked at 2·dim held-out points (cn on
/// second-kind nodes). The eigenvalues of the returned matrix are the
/// sector energies: the raw expansion A satisfies L φ = Φ A with
/// L u = −E u, so the energy matrix is −A.
pub fn build_sector_matrix(p: &PotentialParams, sector: &Sector) -> Result<SectorMatrix> {
    let expected_dim = sector_dim_for(p, sector.tag)?;
    if sector.dim != expected_dim {
        return Err(Error::domain(format!(
            "sector {:?} for a = {} has dimension {}, got {}",
            sector.tag,
            p.a(),
            expected_dim,
            sector.dim
        )));
    }
    let dim = sector.dim;
    if dim > 64 {
        return Err(Error::domain(format!(
            "sector dimension {dim} exceeds the supported maximum of 64"
        )));
    }
    let n_fit = 2 * dim;
    let n_held = 2 * dim;

    let fit_points: Vec<EllipticPoint> = (0..n_fit)
        .map(|j| {
            let tau = (std::f64::consts::PI * (2.0 * j as f64 + 1.0) / (2.0 * n_fit as f64)).cos();
            jacobi_point(x_where_cn_equals(p, tau), p.m())
        })
        .collect();
    let held_points: Vec<EllipticPoint> = (0..n_held)
        .map(|j| {
            let tau =
                (std::f64::consts::PI * (j as f64 + 1.0) / (n_held as f64 + 1.0)).cos();
            jacobi_point(x_where_cn_equals(p, tau), p.m())
        })
        .collect();

    let mut basis = Matrix::zeros(n_fit, dim);
    let mut action = Matrix::zeros(n_fit, dim);
    for (row, ep) in fit_points.iter().enumerate() {
        for k in 0..dim {
            basis[(row, k)] = basis_derivs(sector.tag, k, ep, p.m_value()).0;
            action[(row, k)] = apply_operator(p, sector.tag, k, ep).0;
        }
    }
    let (expansion, cond) = linalg::least_squares(&basis, &action)?;
    if cond > CONDITION_LIMIT {
        return Err(Error::Conditioning(format!(
            "collocation fit condition estimate {cond:.3e} for sector {:?}, dim {dim}",
            sector.tag
        )));
    }

    // Held-out closure check: L φ_k must lie in the sector span. The
    // reference scale gets a rounding-noise term for elements the operator
    // annihilates outright (‖Lφ‖ can be zero up to cancellation noise).
    let mut worst_rel = 0.0_f64;
    for k in 0..dim {
        let mut resid = 0.0_f64;
        let mut scale = 0.0_f64;
        let mut noise = 0.0_f64;
        for ep in &held_points {
            let (lv, mag) = apply_operator(p, sector.tag, k, ep);
            let mut expanded = 0.0;
            for j in 0..dim {
                expanded += expansion[(j, k)] * basis_derivs(sector.tag, j, ep, p.m_value()).0;
            }
            resid = resid.max((lv - expanded).abs());
            scale = scale.max(lv.abs());
            noise = noise.max(mag);
        }
        let reference = scale + 1e3 * f64::EPSILON * noise / CLOSURE_TOL;
        let rel = resid / reference.max(f64::MIN_POSITIVE);
        worst_rel = worst_rel.max(rel);
        if rel > CLOSURE_TOL {
            return Err(Error::internal(format!(
                "sector {:?} basis element {k} fails closure: held-out residual {rel:.3e} \
                 of scale {reference:.3e}",
                sector.tag
            )));
        }
    }

    Ok(SectorMatrix {
        sector: *sector,
        entries: expansion.scaled(-1.0),
        closure_residual: worst_rel,
        condition_estimate: cond,
    })
}

/// Exact monomial-action energy matrix for the polynomial sector of
/// integer a = n, obtained by applying the t = cn form of the operator to
/// tᵏ. Independent of the collocation machinery.
pub fn integer_even_monomial_matrix(p: &PotentialParams) -> Result<Matrix> {
    if !p.is_integer_a() {
        return Err(Error::domain(
            "monomial-action matrix requires integer a".to_string(),
        ));
    }
    let n = (p.twice_a() / 2) as usize;
    let a = n as f64;
    let m = p.m_value();
    let b = p.b();
    let dim = n + 1;
    let mut out = Matrix::zeros(dim, dim);
    for k in 0..dim {
        let kf = k as f64;
        out[(k, k)] = (1.0 - 2.0 * m) * kf * kf + 2.0 * m * a * kf - m * a * a;
        if k + 1 < dim {
            out[(k + 1, k)] = b * (kf - a);
        }
        if k + 2 < dim {
            out[(k + 2, k)] = m * (a - kf) * (a - kf - 1.0);
        }
        if k >= 1 {
            out[(k - 1, k)] = -b * kf;
        }
        if k >= 2 {
            out[(k - 2, k)] = -(1.0 - m) * kf * (kf - 1.0);
        }
    }
    Ok(out)
}

fn normalize_leading_one(coeffs: &mut [f64]) {
    let max_abs = coeffs.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if max_abs == 0.0 {
        return;
    }
    let mut lead = coeffs.len() - 1;
    while lead > 0 && coeffs[lead].abs() <= 1e-10 * max_abs {
        lead -= 1;
    }
    let scale = coeffs[lead];
    for c in coeffs {
        *c /= scale;
    }
}

fn solutions_from_matrix(
    p: &PotentialParams,
    tag: SectorTag,
    energy_matrix: &Matrix,
) -> Result<Vec<BandEdgeSolution>> {
    let eig = linalg::eigenvalues(energy_matrix)?;
    let worst_im = eig.iter().fold(0.0_f64, |acc, e| acc.max(e.1.abs()));
    if worst_im >= REALITY_TOL {
        return Err(Error::internal(format!(
            "sector {tag:?} spectrum not real: max |Im λ| = {worst_im:.3e}"
        )));
    }
    let mut energies: Vec<f64> = eig.into_iter().map(|e| e.0).collect();
    energies.sort_by(f64::total_cmp);

    let periodicity = if tag.is_periodic_4k() {
        Periodicity::P4K
    } else {
        Periodicity::A4K
    };

    let mut out = Vec::with_capacity(energies.len());
    let mut cluster: Vec<Vec<f64>> = Vec::new();
    for (i, &energy) in energies.iter().enumerate() {
        if i > 0 && (energy - energies[i - 1]).abs() > DEGENERACY_TOL {
            cluster.clear();
        }
        let mut coeffs =
            linalg::eigenvector_inverse_iteration(energy_matrix, energy, &cluster)?;
        cluster.push(coeffs.clone());
        normalize_leading_one(&mut coeffs);
        let wf = Wavefunction::new(*p, tag, coeffs.clone());
        let nodes = count_nodes(&wf);
        out.push(BandEdgeSolution {
            energy,
            sector: tag,
            coeffs,
            nodes_4k: nodes.nodes,
            tangential_4k: nodes.tangential,
            periodicity,
        });
    }
    Ok(out)
}

/// All 2a+1 analytic band edges, sorted by energy.
pub fn solve_band_edges(p: &PotentialParams) -> Result<Vec<BandEdgeSolution>> {
    let mut out = Vec::new();
    for sector in enumerate_sectors(p) {
        let sm = build_sector_matrix(p, &sector)?;
        out.extend(solutions_from_matrix(p, sector.tag, &sm.entries)?);
    }
    out.sort_by(|x, y| x.energy.total_cmp(&y.energy).then(x.sector.cmp(&y.sector)));
    let expected = p.twice_a() as usize + 1;
    if out.len() != expected {
        return Err(Error::internal(format!(
            "expected {expected} band edges, found {}",
            out.len()
        )));
    }
    Ok(out)
}

/// Closed-form sector energies for a ∈ {0, ½, 1, 3/2, 2}, evaluable at any
/// m in [0, 1] (the formulas stay finite at m = 1, which serves the
/// hyperbolic-limit plumbing).
///
/// The two-level odd sector of a = 2 uses E = [(5−10m) ± √(9+4b²)]/2; the
/// variant with the radical left unhalved is rejected by independent
/// Floquet validation (see the acceptance suite).
pub fn closed_form_energies(twice_a: u32, b: f64, m: f64) -> Result<Vec<(SectorTag, f64)>> {
    match twice_a {
        0 => Ok(vec![(SectorTag::IntegerEven, 0.0)]),
        1 => Ok(vec![
            (SectorTag::HalfPlus, (1.0 - 2.0 * m - 2.0 * b) / 4.0),
            (SectorTag::HalfMinus, (1.0 - 2.0 * m + 2.0 * b) / 4.0),
        ]),
        2 => {
            let r = (1.0 + 4.0 * b * b).sqrt();
            Ok(vec![
                (SectorTag::IntegerOdd, 1.0 - 2.0 * m),
                (SectorTag::IntegerEven, (1.0 - 2.0 * m - r) / 2.0),
                (SectorTag::IntegerEven, (1.0 - 2.0 * m + r) / 2.0),
            ])
        }
        3 => {
            let rp = (1.0 - m * (1.0 - m) + (1.0 - 2.0 * m) * b + b * b).sqrt();
            let rm = (1.0 - m * (1.0 - m) - (1.0 - 2.0 * m) * b + b * b).sqrt();
            let base_p = (5.0 - 10.0 * m - 2.0 * b) / 4.0;
            let base_m = (5.0 - 10.0 * m + 2.0 * b) / 4.0;
            Ok(vec![
                (SectorTag::HalfPlus, base_p - rp),
                (SectorTag::HalfPlus, base_p + rp),
                (SectorTag::HalfMinus, base_m - rm),
                (SectorTag::HalfMinus, base_m + rm),
            ])
        }
        4 => {
            let r = (9.0 + 4.0 * b * b).sqrt();
            let mut out = vec![
                (SectorTag::IntegerOdd, ((5.0 - 10.0 * m) - r) / 2.0),
                (SectorTag::IntegerOdd, ((5.0 - 10.0 * m) + r) / 2.0),
            ];
            // x³ + 2(2m−1)x² − (4b²+3)x + 8(1−2m)b² = 0, E = x + 1 − 2m,
            // solved by companion matrix.
            let c2 = 2.0 * (2.0 * m - 1.0);
            let c1 = -(4.0 * b * b + 3.0);
            let c0 = 8.0 * (1.0 - 2.0 * m) * b * b;
            let companion = Matrix::from_rows(&[
                vec![0.0, 0.0, -c0],
                vec![1.0, 0.0, -c1],
                vec![0.0, 1.0, -c2],
            ]);
            for (re, im) in linalg::eigenvalues(&companion)? {
                if im.abs() >= REALITY_TOL {
                    return Err(Error::internal(format!(
                        "cubic root with |Im| = {:.3e}",
                        im.abs()
                    )));
                }
                out.push((SectorTag::IntegerEven, re + 1.0 - 2.0 * m));
            }
            Ok(out)
        }
        _ => Err(Error::NoClosedForm(format!(
            "closed forms cover a in {{0, 1/2, 1, 3/2, 2}}, got a = {}",
            twice_a as f64 / 2.0
        ))),
    }
}

/// Analytic sector energy matrices for the closed-form range, used to
/// recover eigenvector constants by back-substitution.
fn closed_form_sector_matrix(p: &PotentialParams, tag: SectorTag) -> Result<Matrix> {
    let m = p.m_value();
    let b = p.b();
    match (p.twice_a(), tag) {
        (0, SectorTag::IntegerEven) | (2, SectorTag::IntegerEven) | (4, SectorTag::IntegerEven) => {
            integer_even_monomial_matrix(p)
        }
        (1, SectorTag::HalfPlus) => Ok(Matrix::from_rows(&[vec![
            (1.0 - 2.0 * m - 2.0 * b) / 4.0,
        ]])),
        (1, SectorTag::HalfMinus) => Ok(Matrix::from_rows(&[vec![
            (1.0 - 2.0 * m + 2.0 * b) / 4.0,
        ]])),
        (2, SectorTag::IntegerOdd) => Ok(Matrix::from_rows(&[vec![1.0 - 2.0 * m]])),
        (3, SectorTag::HalfPlus) => Ok(Matrix::from_rows(&[
            vec![0.25 - 2.5 * m - 0.5 * b, -(1.0 - m + b)],
            vec![m - b, 2.25 - 2.5 * m - 0.5 * b],
        ])),
        (3, SectorTag::HalfMinus) => Ok(Matrix::from_rows(&[
            vec![0.25 - 2.5 * m + 0.5 * b, 1.0 - m - b],
            vec![-(m + b), 2.25 - 2.5 * m + 0.5 * b],
        ])),
        (4, SectorTag::IntegerOdd) => Ok(Matrix::from_rows(&[
            vec![1.0 - 5.0 * m, -b],
            vec![-b, 4.0 - 5.0 * m],
        ])),
        _ => Err(Error::NoClosedForm(format!(
            "no analytic sector matrix for a = {}, {tag:?}",
            p.a()
        ))),
    }
}

/// Closed-form band edges for a ∈ {0, ½, 1, 3/2, 2}: energies from the
/// explicit formulas, eigenvector constants by back-substitution into the
/// analytic sector systems. Independent of the collocation path.
pub fn closed_form_edges(p: &PotentialParams) -> Result<Vec<BandEdgeSolution>> {
    let energies = closed_form_energies(p.twice_a(), p.b(), p.m_value())?;
    let mut out = Vec::with_capacity(energies.len());
    // Degenerate-pair handling within a sector only; coincidences across
    // sectors need no disambiguation (different bases).
    let mut cluster: Vec<(SectorTag, f64, Vec<Vec<f64>>)> = Vec::new();
    for (tag, energy) in energies {
        let matrix = closed_form_sector_matrix(p, tag)?;
        let dim = matrix.rows();
        let mut coeffs = if dim == 1 {
            vec![1.0]
        } else if dim == 2 {
            // Null space of (M − E): rows are parallel; take the larger.
            let r0 = [matrix[(0, 0)] - energy, matrix[(0, 1)]];
            let r1 = [matrix[(1, 0)], matrix[(1, 1)] - energy];
            if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) {
                vec![-r0[1], r0[0]]
            } else {
                vec![-r1[1], r1[0]]
            }
        } else {
            let prior: &[Vec<f64>] = cluster
                .iter()
                .find(|(t, e, _)| *t == tag && (e - energy).abs() <= DEGENERACY_TOL)
                .map(|(_, _, vs)| vs.as_slice())
                .unwrap_or(&[]);
            linalg::eigenvector_inverse_iteration(&matrix, energy, prior)?
        };
        match cluster
            .iter_mut()
            .find(|(t, e, _)| *t == tag && (e - energy).abs() <= DEGENERACY_TOL)
        {
            Some((_, _, vs)) => vs.push(coeffs.clone()),
            None => cluster.push((tag, energy, vec![coeffs.clone()])),
        }
        normalize_leading_one(&mut coeffs);
        let wf = Wavefunction::new(*p, tag, coeffs.clone());
        let nodes = count_nodes(&wf);
        out.push(BandEdgeSolution {
            energy,
            sector: tag,
            coeffs,
            nodes_4k: nodes.nodes,
            tangential_4k: nodes.tangential,
            periodicity: if tag.is_periodic_4k() {
                Periodicity::P4K
            } else {
                Periodicity::A4K
            },
        });
    }
    out.sort_by(|x, y| x.energy.total_cmp(&y.energy).then(x.sector.cmp(&y.sector)));
    Ok(out)
}

fn sl2_generators(n: usize) -> (Matrix, Matrix, Matrix) {
    let dim = n + 1;
    let nf = n as f64;
    let mut jp = Matrix::zeros(dim, dim);
    let mut j0 = Matrix::zeros(dim, dim);
    let mut jm = Matrix::zeros(dim, dim);
    for k in 0..dim {
        let kf = k as f64;
        if k + 1 < dim {
            jp[(k + 1, k)] = kf - nf;
        }
        j0[(k, k)] = kf - nf / 2.0;
        if k >= 1 {
            jm[(k - 1, k)] = kf;
        }
    }
    (jp, j0, jm)
}

/// Exact commutator check of the degree-n monomial realization:
/// [J⁰, J±] = ±J±, [J⁺, J⁻] = −2J⁰. (With J⁺ = t²d/dt − nt, J⁻ = d/dt,
/// the plus-minus commutator closes on J⁰ with a minus sign; relabeling
/// J⁰ → −J⁰ recovers the textbook sl(2, R) convention.) Entries are
/// integers after doubling J⁰, so the check is exact integer arithmetic.
pub fn sl2_commutators_exact(n: usize) -> bool {
    let dim = n + 1;
    let ni = n as i64;
    let mut jp = vec![vec![0i64; dim]; dim];
    let mut jm = vec![vec![0i64; dim]; dim];
    let mut d2 = vec![vec![0i64; dim]; dim]; // 2·J⁰
    for k in 0..dim {
        let ki = k as i64;
        if k + 1 < dim {
            jp[k + 1][k] = ki - ni;
        }
        d2[k][k] = 2 * ki - ni;
        if k >= 1 {
            jm[k - 1][k] = ki;
        }
    }
    let mul = |x: &Vec<Vec<i64>>, y: &Vec<Vec<i64>>| -> Vec<Vec<i64>> {
        let mut out = vec![vec![0i64; dim]; dim];
        for i in 0..dim {
            for k in 0..dim {
                if x[i][k] == 0 {
                    continue;
                }
                for j in 0..dim {
                    out[i][j] += x[i][k] * y[k][j];
                }
            }
        }
        out
    };
    let comm = |x: &Vec<Vec<i64>>, y: &Vec<Vec<i64>>| -> Vec<Vec<i64>> {
        let xy = mul(x, y);
        let yx = mul(y, x);
        let mut out = vec![vec![0i64; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                out[i][j] = xy[i][j] - yx[i][j];
            }
        }
        out
    };
    // [2J⁰, J⁺] = 2J⁺, [2J⁰, J⁻] = −2J⁻, [J⁺, J⁻] = −2J⁰
    let c1 = comm(&d2, &jp);
    let c2 = comm(&d2, &jm);
    let c3 = comm(&jp, &jm);
    for i in 0..dim {
        for j in 0..dim {
            if c1[i][j] != 2 * jp[i][j] || c2[i][j] != -2 * jm[i][j] || c3[i][j] != -d2[i][j] {
                return false;
            }
        }
    }
    true
}

/// Verify that the quadratic generator combination
/// m J⁺J⁺ + (1−2m) J⁰J⁰ − (1−m) J⁻J⁻ + n J⁰ + b(J⁺ − J⁻)
/// equals the polynomial-sector monomial matrix after removing the
/// constant shift m n²/2 − n²/4. Returns the max entrywise deviation.
pub fn sl2_verify(p: &PotentialParams) -> Result<f64> {
    if !p.is_integer_a() {
        return Err(Error::domain(
            "the quadratic generator identity applies to integer a".to_string(),
        ));
    }
    let n = (p.twice_a() / 2) as usize;
    let nf = n as f64;
    let m = p.m_value();
    let b = p.b();
    let (jp, j0, jm) = sl2_generators(n);
    let mut t = jp
        .mul(&jp)
        .scaled(m)
        .add(&j0.mul(&j0).scaled(1.0 - 2.0 * m))
        .add(&jm.mul(&jm).scaled(-(1.0 - m)))
        .add(&j0.scaled(nf))
        .add(&jp.scaled(b))
        .add(&jm.scaled(-b));
    let shift = m * nf * nf / 2.0 - nf * nf / 4.0;
    for k in 0..=n {
        t[(k, k)] -= shift;
    }
    let monomial = integer_even_monomial_matrix(p)?;
    Ok(t.max_abs_diff(&monomial))
}

/// Count sign changes of u over one period [0, 4K), sampling at midpoints
/// of a uniform grid and closing the circle with the sector's periodicity
/// sign. Bracketed zeros are refined by bisection; samples that graze zero
/// without a sign change are reported as tangential, not counted.
pub fn count_nodes(wf: &Wavefunction) -> NodeCount {
    node_census(wf).0
}

/// Node census with refined positions (in [0, 4K)), for inspection.
pub fn node_census(wf: &Wavefunction) -> (NodeCount, Vec<f64>) {
    let p = wf.params();
    let period = p.period();
    let n = NODE_GRID;
    let h = period / n as f64;
    let sigma = if wf.sector().is_periodic_4k() { 1.0 } else { -1.0 };

    let mut s: Vec<f64> = (0..n).map(|i| wf.u((i as f64 + 0.5) * h)).collect();
    let scale = s.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return (NodeCount { nodes: 0, tangential: 0 }, Vec::new());
    }
    let zero_tol = 1e-12 * scale;
    let graze_tol = 1e-9 * scale;

    // A sample indistinguishable from zero borrows the sign of the next
    // clearly nonzero sample, so a simple zero that lands on a sample is
    // counted exactly once and a double zero not at all.
    let mut resolved = s.clone();
    for i in (0..n).rev() {
        if resolved[i].abs() <= zero_tol {
            let next = if i + 1 < n { resolved[i + 1] } else { sigma * resolved[0] };
            resolved[i] = 0.5 * zero_tol * next.signum();
        }
    }
    let tangential = (1..n - 1)
        .filter(|&i| {
            s[i].abs() < graze_tol
                && s[i - 1].abs() >= graze_tol
                && s[i + 1].abs() >= graze_tol
                && s[i - 1].signum() == s[i + 1].signum()
        })
        .count();
    s = resolved;

    let mut positions = Vec::new();
    for i in 0..n {
        let a = s[i];
        let b = if i + 1 < n { s[i + 1] } else { sigma * s[0] };
        if a.signum() != b.signum() {
            let xa = (i as f64 + 0.5) * h;
            let refined = refine_zero(wf, xa, xa + h);
            positions.push(refined.rem_euclid(period));
        }
    }
    positions.sort_by(f64::total_cmp);
    (
        NodeCount {
            nodes: positions.len(),
            tangential,
        },
        positions,
    )
}

fn refine_zero(wf: &Wavefunction, mut lo: f64, mut hi: f64) -> f64 {
    let flo = wf.u(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fmid = wf.u(mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::schrodinger_residual;
    use crate::testutil::Rng;

    fn params(twice_a: u32, b: f64, m: f64) -> PotentialParams {
        PotentialParams::new(twice_a, b, m).unwrap()
    }

    fn energies(sols: &[BandEdgeSolution]) -> Vec<f64> {
        sols.iter().map(|s| s.energy).collect()
    }

    /// Greedy multiset match: every element of `got` pairs with a distinct
    /// element of `want` within `tol`.
    fn multiset_close(got: &[f64], want: &[f64], tol: f64) -> bool {
        if got.len() != want.len() {
            return false;
        }
        let mut used = vec![false; want.len()];
        for &g in got {
            let mut best: Option<(usize, f64)> = None;
            for (i, &w) in want.iter().enumerate() {
                if !used[i] {
                    let d = (g - w).abs();
                    if best.map_or(true, |(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
            }
            match best {
                Some((i, d)) if d <= tol => used[i] = true,
                _ => return false,
            }
        }
        true
    }

    #[test]
    fn sector_enumeration_dimensions() {
        for twice_a in 0..=12u32 {
            let p = params(twice_a, 1.0, 0.4);
            let sectors = enumerate_sectors(&p);
            let total: usize = sectors.iter().map(|s| s.dim).sum();
            assert_eq!(total, twice_a as usize + 1, "a = {}", p.a());
            if twice_a % 2 == 0 {
                assert!(sectors.iter().all(|s| s.tag.is_periodic_4k()));
            } else {
                assert!(sectors.iter().all(|s| !s.tag.is_periodic_4k()));
                assert_eq!(sectors[0].dim, sectors[1].dim);
            }
        }
    }

    #[test]
    fn collocation_matches_monomial_action_for_polynomial_sector() {
        let mut rng = Rng::new(0xabcd);
        for n in 0..=10u32 {
            let m = rng.uniform(0.05, 0.95);
            let b = rng.uniform(-2.0, 2.0);
            let p = params(2 * n, b, m);
            let sector = Sector {
                tag: SectorTag::IntegerEven,
                dim: n as usize + 1,
            };
            let sm = build_sector_matrix(&p, &sector).unwrap();
            let monomial = integer_even_monomial_matrix(&p).unwrap();
            let dev = sm.entries.max_abs_diff(&monomial);
            assert!(dev < 1e-10, "n={n}: collocation vs monomial dev {dev:.3e}");
        }
    }

    #[test]
    fn sector_matrix_rejects_mismatched_dimension() {
        let p = params(4, 1.0, 0.5);
        let bad = Sector {
            tag: SectorTag::IntegerEven,
            dim: 2,
        };
        assert!(build_sector_matrix(&p, &bad).is_err());
        let wrong_family = Sector {
            tag: SectorTag::HalfPlus,
            dim: 2,
        };
        assert!(build_sector_matrix(&p, &wrong_family).is_err());
    }

    #[test]
    fn known_small_sector_spectra() {
        // a=1: odd sector {1−2m}; even sector {(1−2m ± √(1+4b²))/2}.
        let p = params(2, 1.0, 0.5);
        let odd = build_sector_matrix(
            &p,
            &Sector {
                tag: SectorTag::IntegerOdd,
                dim: 1,
            },
        )
        .unwrap();
        assert!((odd.entries[(0, 0)] - 0.0).abs() < 1e-12);

        let even = build_sector_matrix(
            &p,
            &Sector {
                tag: SectorTag::IntegerEven,
                dim: 2,
            },
        )
        .unwrap();
        let eig = linalg::eigenvalues(&even.entries).unwrap();
        let want = 0.5 * (1.0 + 4.0_f64).sqrt();
        assert!((eig[0].0 + want).abs() < 1e-10);
        assert!((eig[1].0 - want).abs() < 1e-10);
    }

    #[test]
    fn a_zero_single_constant_solution() {
        let p = params(0, 1.0, 0.5);
        let sols = solve_band_edges(&p).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(sols[0].energy.abs() < 1e-12);
        assert_eq!(sols[0].coeffs, vec![1.0]);
        assert_eq!(sols[0].nodes_4k, 0);
        assert_eq!(sols[0].periodicity, Periodicity::P4K);
    }

    #[test]
    fn a_one_full_set_matches_formulas() {
        let p = params(2, 1.0, 0.5);
        let sols = solve_band_edges(&p).unwrap();
        let want = [-(5.0_f64).sqrt() / 2.0, 0.0, (5.0_f64).sqrt() / 2.0];
        assert!(multiset_close(&energies(&sols), &want, 1e-10));
        // u = b − (E+m) cn for the polynomial levels, leading-one scaled.
        for s in &sols {
            if s.sector == SectorTag::IntegerEven {
                let expect0 = 1.0 / (-(s.energy + 0.5));
                assert!((s.coeffs[0] - expect0).abs() < 1e-9, "{:?}", s.coeffs);
                assert!((s.coeffs[1] - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn a_half_closed_pair() {
        let p = params(1, 1.0, 0.25);
        let sols = solve_band_edges(&p).unwrap();
        assert!(multiset_close(&energies(&sols), &[-0.375, 0.625], 1e-10));
        assert!(sols.iter().all(|s| s.periodicity == Periodicity::A4K));
        assert!(sols.iter().all(|s| s.nodes_4k == 1));
    }

    #[test]
    fn a_two_even_sector_at_half_modulus() {
        let p = params(4, 1.0, 0.5);
        let sols = solve_band_edges(&p).unwrap();
        let r7 = (7.0_f64).sqrt();
        let r13h = 0.5 * (13.0_f64).sqrt();
        let want = [-r7, -r13h, 0.0, r13h, r7];
        assert!(multiset_close(&energies(&sols), &want, 1e-10), "{:?}", energies(&sols));
    }

    #[test]
    fn oracle_agreement_full_grid() {
        for &twice_a in &[0u32, 1, 2, 3, 4] {
            for &m in &[0.1, 0.5, 0.9] {
                for &b in &[0.5, 2.0] {
                    let p = params(twice_a, b, m);
                    let got = energies(&solve_band_edges(&p).unwrap());
                    let want = energies(&closed_form_edges(&p).unwrap());
                    assert!(
                        multiset_close(&got, &want, 1e-9),
                        "a={} m={m} b={b}: {got:?} vs {want:?}",
                        p.a()
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_rejects_unsupported_a() {
        let p = params(5, 1.0, 0.5);
        assert!(matches!(
            closed_form_edges(&p),
            Err(Error::NoClosedForm(_))
        ));
    }

    #[test]
    fn solution_count_is_2a_plus_1_up_to_a_six() {
        for twice_a in 0..=12u32 {
            for &m in &[0.1, 0.5, 0.9] {
                for &b in &[0.5, 1.0, 2.0] {
                    let p = params(twice_a, b, m);
                    let sols = solve_band_edges(&p).unwrap();
                    assert_eq!(sols.len(), twice_a as usize + 1, "a={} m={m} b={b}", p.a());
                    for w in sols.windows(2) {
                        assert!(w[0].energy <= w[1].energy + 1e-12);
                        assert!(
                            w[0].nodes_4k <= w[1].nodes_4k,
                            "nodes not monotone for a={} m={m} b={b}: {:?}",
                            p.a(),
                            sols.iter().map(|s| (s.energy, s.nodes_4k)).collect::<Vec<_>>()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn coupling_sign_flip_preserves_spectrum() {
        let mut rng = Rng::new(0xfeed);
        for _ in 0..12 {
            let twice_a = (rng.next_u64() % 9) as u32;
            let m = rng.uniform(0.05, 0.95);
            let b = rng.uniform(0.2, 2.5);
            let p = params(twice_a, b, m);
            let got = energies(&solve_band_edges(&p).unwrap());
            let flipped = energies(&solve_band_edges(&p.with_negated_b()).unwrap());
            assert!(
                multiset_close(&got, &flipped, 1e-9),
                "a={} m={m} b={b}",
                p.a()
            );
        }
    }

    #[test]
    fn half_modulus_spectra_symmetric_for_closed_form_range() {
        for &twice_a in &[0u32, 1, 2, 3, 4] {
            for &b in &[0.5, 1.0, 2.0] {
                let p = params(twice_a, b, 0.5);
                let mut es = energies(&solve_band_edges(&p).unwrap());
                let negated: Vec<f64> = es.iter().rev().map(|e| -e).collect();
                es.sort_by(f64::total_cmp);
                assert!(
                    multiset_close(&es, &negated, 1e-9),
                    "a={} b={b}: {es:?}",
                    p.a()
                );
            }
        }
    }

    #[test]
    fn node_ladder_for_closed_form_range() {
        let cases: &[(u32, &[usize])] = &[
            (0, &[0]),
            (1, &[1, 1]),
            (2, &[0, 2, 2]),
            (3, &[1, 1, 3, 3]),
            (4, &[0, 2, 2, 4, 4]),
        ];
        for &(twice_a, ladder) in cases {
            let p = params(twice_a, 1.0, 0.4);
            let sols = solve_band_edges(&p).unwrap();
            let nodes: Vec<usize> = sols.iter().map(|s| s.nodes_4k).collect();
            assert_eq!(nodes, ladder, "a = {}", p.a());
        }
    }

    #[test]
    fn half_plus_ground_node_sits_at_2k() {
        // a=1/2, + family: u = cos(am/2) vanishes once per period, at 2K.
        let p = params(1, 1.0, 0.5);
        let wf = Wavefunction::new(p, SectorTag::HalfPlus, vec![1.0]);
        let (count, positions) = node_census(&wf);
        assert_eq!(count.nodes, 1);
        assert_eq!(count.tangential, 0);
        assert!((positions[0] - 2.0 * p.quarter_period()).abs() < 1e-8);
    }

    #[test]
    fn sn_nodes_at_zero_and_2k() {
        let p = params(2, 0.0, 0.5);
        let wf = Wavefunction::new(p, SectorTag::IntegerOdd, vec![1.0]);
        let (count, positions) = node_census(&wf);
        assert_eq!(count.nodes, 2);
        assert!(positions[0].abs() < 1e-8 || (positions[0] - p.period()).abs() < 1e-8);
        assert!((positions[1] - 2.0 * p.quarter_period()).abs() < 1e-8);
    }

    #[test]
    fn tangential_graze_detected_not_counted() {
        // u = (cn − c)² + tiny has a double-zero-like graze with no sign change.
        let p = params(4, 0.0, 0.5);
        let c = 0.3;
        let wf = Wavefunction::new(
            p,
            SectorTag::IntegerEven,
            vec![c * c + 1e-13, -2.0 * c, 1.0],
        );
        let count = count_nodes(&wf);
        assert_eq!(count.nodes, 0, "no sign changes");
        assert!(count.tangential >= 1, "graze should be flagged");
    }

    #[test]
    fn residuals_of_all_solved_eigenpairs() {
        for &(twice_a, b, m) in &[
            (1u32, 1.0, 0.5),
            (2, 1.0, 0.5),
            (3, 0.7, 0.3),
            (4, 2.0, 0.6),
            (5, 1.2, 0.45),
        ] {
            let p = params(twice_a, b, m);
            for sol in solve_band_edges(&p).unwrap() {
                let wf = sol.wavefunction(&p);
                let r = schrodinger_residual(&wf, sol.energy, 500);
                assert!(
                    r < 1e-6,
                    "residual {r:.3e} for a={} b={b} m={m} E={}",
                    p.a(),
                    sol.energy
                );
            }
        }
    }

    #[test]
    fn sl2_commutators_hold_exactly() {
        for n in 0..=10 {
            assert!(sl2_commutators_exact(n), "n = {n}");
        }
    }

    #[test]
    fn sl2_combination_reproduces_polynomial_sector() {
        let mut rng = Rng::new(0x51_2a);
        for n in 0..=10u32 {
            let m = rng.uniform(0.05, 0.95);
            let b = rng.uniform(-2.0, 2.0);
            let p = params(2 * n, b, m);
            let dev = sl2_verify(&p).unwrap();
            assert!(dev < 1e-12, "n={n}: deviation {dev:.3e}");
        }
        let dev = sl2_verify(&params(2, 1.0, 0.5)).unwrap();
        assert!(dev < 1e-12);
        assert!(sl2_verify(&params(3, 1.0, 0.5)).is_err());
    }

    #[test]
    fn degenerate_pair_reported_with_distinct_vectors() {
        // b = 0, a = 2: even sector at m = 1/2 has E = {−√3·…}? Use a case
        // with an exact within-sector degeneracy instead: even sector of
        // a = 1 at b = 0 is diagonal {−m, 1−m} — distinct. Construct the
        // degenerate situation directly on a matrix with a double eigenvalue.
        let mtx = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let p = params(2, 0.0, 0.5);
        let sols = solutions_from_matrix(&p, SectorTag::IntegerEven, &mtx).unwrap();
        assert_eq!(sols.len(), 2);
        assert!((sols[0].energy - 2.0).abs() < 1e-9);
        assert!((sols[1].energy - 2.0).abs() < 1e-9);
        let dot: f64 = sols[0]
            .coeffs
            .iter()
            .zip(&sols[1].coeffs)
            .map(|(a, b)| a * b)
            .sum();
        let n0: f64 = sols[0].coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n1: f64 = sols[1].coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(dot.abs() / (n0 * n1) < 0.99, "vectors must be distinct");
    }
}
