//! Crate-wide error type.
//!
//! Every fallible operation in this crate reports one of these variants;
//! callers match on the variant rather than parsing messages.

use num_complex::Complex64;
use std::fmt;

/// Errors produced by parsing, formal solving, and numeric evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// DSL parse failure at a byte offset of the input.
    Syntax { pos: usize, msg: String },
    /// The zero operator was supplied where a nonzero one is required.
    ZeroOperator,
    /// `q` with modulus <= 1 was supplied; the engine requires |q| > 1.
    InvalidModulus { modulus: f64 },
    /// A rational with zero denominator was supplied.
    ZeroDenominator,
    /// Rational exponent arithmetic left the i64 range.
    ExponentOverflow,
    /// A scalar exceeded the term-count budget after canonicalization.
    TermBudget { terms: usize },
    /// The equation forces a nonzero coefficient at a negative degree.
    NoPowerSeriesSolution { degree: usize },
    /// The recurrence multiplier vanishes numerically at this degree,
    /// so the coefficient there is not determined.
    Resonance { degree: usize },
    /// Too few usable data points for an estimate or a fit.
    InsufficientData { need: usize, have: usize },
    /// The Newton polygon has no positive slope, so no summation plan exists.
    NoPositiveSlope,
    /// Conjugated slopes disagree with the level-shift prediction,
    /// or the requested level is below the maximal positive slope.
    SlopeMismatch { detail: String },
    /// Spiral continuation hit a near-zero division coefficient at this
    /// lattice index; the direction is (numerically) forbidden.
    BadDirection { index: i64 },
    /// The seed series does not cover the initial continuation window.
    SeedTooShort,
    /// Evaluation point is too close to the pole spiral.
    NearPole { z: Complex64 },
    /// A growth certificate was required but missing or negative.
    NotCertified { stage: usize },
    /// A bilateral sum failed to pass the truncation test within the cap.
    TruncationNotConverged { index: i64 },
    /// Theta evaluated too close to one of its zeros for the requested use.
    NearZeroTheta { z: Complex64 },
    /// All grid points were excluded; the scan domain is empty.
    EmptyDomain,
    /// A value left the representable floating-point range.
    Overflow,
    /// A gauge or block matrix is singular at the evaluation point.
    SingularGauge,
    /// The summed gauge lost the leading behavior of its formal determinant.
    DegenerateGauge,
    /// Spectra of the two block matrices are q-power resonant.
    ResonantSpectrum,
    /// Matrix is too ill-conditioned to diagonalize reliably.
    IllConditioned { cond: f64 },
    /// The iterative eigensolver did not converge.
    EigenFailed,
    /// A spiral index lattice does not refine the requested one.
    LatticeMismatch { expected: i64, found: i64 },
    /// A structurally valid input is outside the supported shape.
    Unsupported { what: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Syntax { pos, msg } => write!(f, "syntax error at byte {pos}: {msg}"),
            Error::ZeroOperator => write!(f, "the zero operator is not allowed"),
            Error::InvalidModulus { modulus } => {
                write!(f, "|q| = {modulus} but the engine requires |q| > 1")
            }
            Error::ZeroDenominator => write!(f, "rational with zero denominator"),
            Error::ExponentOverflow => write!(f, "rational exponent arithmetic overflowed i64"),
            Error::TermBudget { terms } => {
                write!(f, "scalar has {terms} terms, over the canonical budget")
            }
            Error::NoPowerSeriesSolution { degree } => {
                write!(f, "no power-series solution: nonzero forced at degree {degree}")
            }
            Error::Resonance { degree } => {
                write!(f, "resonant recurrence: coefficient at degree {degree} undetermined")
            }
            Error::InsufficientData { need, have } => {
                write!(f, "need at least {need} data points, have {have}")
            }
            Error::NoPositiveSlope => write!(f, "Newton polygon has no positive slope"),
            Error::SlopeMismatch { detail } => write!(f, "slope mismatch: {detail}"),
            Error::BadDirection { index } => {
                write!(f, "continuation blocked near spiral index {index}")
            }
            Error::SeedTooShort => write!(f, "seed series does not reach the continuation window"),
            Error::NearPole { z } => write!(f, "evaluation point {z} is near the pole spiral"),
            Error::NotCertified { stage } => {
                write!(f, "stage {stage} input lacks a positive growth certificate")
            }
            Error::TruncationNotConverged { index } => {
                write!(f, "bilateral sum did not converge within the term cap (index {index})")
            }
            Error::NearZeroTheta { z } => write!(f, "theta nearly vanishes at {z}"),
            Error::EmptyDomain => write!(f, "scan domain is empty after exclusions"),
            Error::Overflow => write!(f, "value left the floating-point range"),
            Error::SingularGauge => write!(f, "gauge matrix is singular at the evaluation point"),
            Error::DegenerateGauge => {
                write!(f, "summed gauge determinant lost its formal leading behavior")
            }
            Error::ResonantSpectrum => write!(f, "block spectra are q-power resonant"),
            Error::IllConditioned { cond } => {
                write!(f, "matrix condition estimate {cond:.3e} exceeds the guard")
            }
            Error::EigenFailed => write!(f, "eigenvalue iteration failed to converge"),
            Error::LatticeMismatch { expected, found } => {
                write!(f, "lattice {found} does not refine the requested lattice {expected}")
            }
            Error::Unsupported { what } => write!(f, "unsupported input shape: {what}"),
        }
    }
}

impl std::error::Error for Error {}
