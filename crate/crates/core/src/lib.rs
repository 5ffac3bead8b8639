//! Band-edge spectra of a one-dimensional quasi-exactly solvable elliptic
//! potential family.
//!
//! For the 4K(m)-periodic potential
//!
//! ```text
//! V(x, m) = [b²/4 − m(1−m)a(a+1)] sn²(x,m)/dn²(x,m) − b(a+½) cn(x,m)/dn²(x,m)
//! ```
//!
//! with a a non-negative integer or half-integer, exactly 2a+1 band-edge
//! eigenvalues and eigenfunctions are algebraic: after a gauge factor and a
//! dn⁻ᵃ peel-off, the remaining factor is a prefactor times a polynomial in
//! cn living in one of a handful of finite invariant sectors. This crate
//! builds those sector matrices, solves them, and cross-validates the result
//! against solvers that know nothing of the algebraic structure: a
//! plane-wave Floquet band-edge solver and a finite-difference bound-state
//! solver for the m → 1 hyperbolic limit.
//!
//! Module map:
//! - [`elliptic`]: sn, cn, dn, unwrapped amplitude, K(m) — from scratch (AGM).
//! - [`potentials`]: the potential family, gauge factor, wavefunction assembly.
//! - [`qes`]: sector enumeration, collocation matrices, band-edge solve,
//!   closed forms for a ≤ 2, the sl(2, R) operator identity, node counting.
//! - [`spectra`]: independent Floquet and bound-state solvers.
//! - [`transforms`]: the half-period companion-potential map and the
//!   m → 0 / m → 1 limit plumbing.
//! - [`linalg`]: small dense eigensolvers and least squares, self-contained.

pub mod elliptic;
pub mod error;
pub mod linalg;
pub mod potentials;
pub mod qes;
pub mod spectra;
pub mod transforms;

#[doc(hidden)]
pub mod testutil;

pub use error::{Error, Result};
