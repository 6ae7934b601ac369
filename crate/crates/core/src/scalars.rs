//! Exact scalar arithmetic in the group ring of rational powers of `q`.
//!
//! A [`QExpScalar`] is a finite sum `sum_k c_k * q^(e_k)` with complex
//! coefficients `c_k` and rational exponents `e_k`. The representation is
//! canonical: exponents strictly increasing, no exactly-zero coefficients,
//! the empty sum meaning zero. Ring operations stay exact in the exponents;
//! only [`bind`](QExpScalar::bind) turns a scalar into a number, through one
//! fixed branch of `log q` held by [`QValue`].
//!
//! Merging of like exponents sums contributions in a canonical order
//! (exponent, then coefficient bit pattern), so two algebraically identical
//! computations that produce the same multiset of contributions bind to
//! bit-identical results. The golden identity tests rely on this.

use crate::error::{Error, Result};
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rational exponent type: reduced ratio of two i64.
pub type QRat = Rational64;

/// Hard cap on the number of canonical terms in one scalar.
pub const TERM_BUDGET: usize = 10_000;

/// Builds a reduced rational, rejecting zero denominators.
pub fn qrat(num: i64, den: i64) -> Result<QRat> {
    if den == 0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(QRat::new(num, den))
}

/// Checked rational addition; overflow is a hard error, never a wrap.
pub fn qrat_add(a: QRat, b: QRat) -> Result<QRat> {
    a.checked_add(&b).ok_or(Error::ExponentOverflow)
}

/// Checked rational multiplication; overflow is a hard error, never a wrap.
pub fn qrat_mul(a: QRat, b: QRat) -> Result<QRat> {
    a.checked_mul(&b).ok_or(Error::ExponentOverflow)
}

/// Converts a rational to f64 (exact for the magnitudes used here).
pub fn qrat_f64(r: QRat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// A fixed numeric `q` with `|q| > 1` and one chosen branch of `log q`.
///
/// All fractional powers of `q` anywhere in the engine are defined as
/// `exp(e * log_q)` with this single branch, fixed at construction, so
/// powers compose coherently: `q^a * q^b` binds to `q^(a+b)` exactly in
/// exponent arithmetic and to rounding error numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValue {
    q: Complex64,
    log_q: Complex64,
}

impl QValue {
    /// Fixes `q` and its principal-branch logarithm. Rejects `|q| <= 1`.
    pub fn new(q: Complex64) -> Result<Self> {
        let modulus = q.norm();
        if !(modulus > 1.0) || !modulus.is_finite() {
            return Err(Error::InvalidModulus { modulus });
        }
        Ok(QValue { q, log_q: q.ln() })
    }

    /// The numeric base.
    pub fn q(&self) -> Complex64 {
        self.q
    }

    /// The fixed branch of `log q`.
    pub fn log_q(&self) -> Complex64 {
        self.log_q
    }

    /// `q^e` for a rational exponent, through the fixed branch.
    pub fn pow(&self, e: QRat) -> Complex64 {
        (self.log_q * qrat_f64(e)).exp()
    }

    /// `q^e` for a real exponent, through the fixed branch.
    pub fn pow_f64(&self, e: f64) -> Complex64 {
        (self.log_q * e).exp()
    }

    /// The derived base `q^e` (e > 0) as a `QValue` with the coherent branch
    /// `log(q^e) := e * log q`.
    pub fn root(&self, e: QRat) -> Result<QValue> {
        let log = self.log_q * qrat_f64(e);
        let q = log.exp();
        let modulus = q.norm();
        if !(modulus > 1.0) || !modulus.is_finite() {
            return Err(Error::InvalidModulus { modulus });
        }
        Ok(QValue { q, log_q: log })
    }

    /// The base `|q|` (used by growth bounds on the modulus side).
    pub fn modulus_base(&self) -> QValue {
        let m = self.q.norm();
        QValue {
            q: Complex64::new(m, 0.0),
            log_q: Complex64::new(m.ln(), 0.0),
        }
    }

    /// `log_2 |q^(1)|`, the per-unit spiral magnification in bits.
    pub fn log2_modulus(&self) -> f64 {
        self.log_q.re / std::f64::consts::LN_2
    }

    /// `arg` advance per unit exponent along the fixed branch.
    pub fn arg_step(&self) -> f64 {
        self.log_q.im
    }
}

/// A finite sum of complex multiples of rational powers of `q`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QExpScalar {
    /// Sorted by strictly increasing exponent; no zero coefficients.
    terms: Vec<(QRat, Complex64)>,
}

/// Merges raw contributions into canonical form.
///
/// Contributions with equal exponents are summed in the order of their
/// coefficient bit patterns, so the result depends only on the multiset of
/// contributions and never on the order the caller produced them in.
fn canonicalize(mut raw: Vec<(QRat, Complex64)>) -> Result<Vec<(QRat, Complex64)>> {
    raw.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| a.1.re.total_cmp(&b.1.re))
            .then_with(|| a.1.im.total_cmp(&b.1.im))
    });
    let mut out: Vec<(QRat, Complex64)> = Vec::with_capacity(raw.len());
    for (e, c) in raw {
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 += c,
            _ => out.push((e, c)),
        }
    }
    out.retain(|(_, c)| c.re != 0.0 || c.im != 0.0);
    if out.len() > TERM_BUDGET {
        return Err(Error::TermBudget { terms: out.len() });
    }
    Ok(out)
}

impl QExpScalar {
    /// The zero scalar (empty sum).
    pub fn zero() -> Self {
        QExpScalar { terms: Vec::new() }
    }

    /// The unit scalar `1 * q^0`.
    pub fn one() -> Self {
        Self::from_complex(Complex64::new(1.0, 0.0))
    }

    /// A plain complex number as a `q^0` term.
    pub fn from_complex(c: Complex64) -> Self {
        Self::monomial(c, QRat::zero())
    }

    /// A single term `c * q^e`.
    pub fn monomial(c: Complex64, e: QRat) -> Self {
        if c.re == 0.0 && c.im == 0.0 {
            return Self::zero();
        }
        QExpScalar { terms: vec![(e, c)] }
    }

    /// Builds a scalar from arbitrary contributions, canonicalizing.
    pub fn from_terms(raw: Vec<(QRat, Complex64)>) -> Result<Self> {
        Ok(QExpScalar { terms: canonicalize(raw)? })
    }

    /// True when the canonical form is the empty sum.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The canonical terms, ascending in exponent.
    pub fn terms(&self) -> &[(QRat, Complex64)] {
        &self.terms
    }

    /// Number of canonical terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Sum of two scalars.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut raw = Vec::with_capacity(self.terms.len() + other.terms.len());
        raw.extend_from_slice(&self.terms);
        raw.extend_from_slice(&other.terms);
        Self::from_terms(raw)
    }

    /// Difference of two scalars.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Negation (exact).
    pub fn neg(&self) -> Self {
        QExpScalar {
            terms: self.terms.iter().map(|&(e, c)| (e, -c)).collect(),
        }
    }

    /// Product of two scalars; exponents add with overflow checked.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(ea, ca) in &self.terms {
            for &(eb, cb) in &other.terms {
                raw.push((qrat_add(ea, eb)?, ca * cb));
            }
        }
        Self::from_terms(raw)
    }

    /// Multiplies by the monomial `c * q^e` (one complex multiply per term).
    pub fn mul_monomial(&self, c: Complex64, e: QRat) -> Result<Self> {
        if c.re == 0.0 && c.im == 0.0 {
            return Ok(Self::zero());
        }
        let mut raw = Vec::with_capacity(self.terms.len());
        for &(ek, ck) in &self.terms {
            raw.push((qrat_add(ek, e)?, ck * c));
        }
        Self::from_terms(raw)
    }

    /// Multiplies by the pure power `q^e`, leaving coefficients untouched.
    /// This is the exact operation the transform identities are built from.
    pub fn shift_exponent(&self, e: QRat) -> Result<Self> {
        let mut raw = Vec::with_capacity(self.terms.len());
        for &(ek, ck) in &self.terms {
            raw.push((qrat_add(ek, e)?, ck));
        }
        // Exponents stay distinct under a common shift; re-canonicalize anyway.
        Self::from_terms(raw)
    }

    /// Evaluates the scalar at the bound `q`: `sum_k c_k exp(e_k log q)`.
    pub fn bind(&self, qv: &QValue) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(e, c) in &self.terms {
            acc += c * qv.pow(e);
        }
        acc
    }

    /// Largest single-term modulus after binding; the scale against which
    /// numeric vanishing of the bound value is judged.
    pub fn bound_term_scale(&self, qv: &QValue) -> f64 {
        self.terms
            .iter()
            .map(|&(e, c)| (c * qv.pow(e)).norm())
            .fold(0.0, f64::max)
    }

    /// Exact reciprocal, available only for single-term scalars.
    pub fn invert_monomial(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms[0];
        Some(Self::monomial(Complex64::new(1.0, 0.0) / c, -e))
    }

    /// Largest exponent denominator among the terms (1 for the zero scalar).
    pub fn max_exponent_denominator(&self) -> i64 {
        self.terms.iter().map(|(e, _)| *e.denom()).max().unwrap_or(1)
    }
}

/// Wire form of one term, matching the pinned JSON interchange shape.
#[derive(Serialize, Deserialize)]
struct TermWire {
    re: f64,
    im: f64,
    e_num: i64,
    e_den: i64,
}

impl Serialize for QExpScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire: Vec<TermWire> = self
            .terms
            .iter()
            .map(|&(e, c)| TermWire {
                re: c.re,
                im: c.im,
                e_num: *e.numer(),
                e_den: *e.denom(),
            })
            .collect();
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QExpScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = Vec::<TermWire>::deserialize(deserializer)?;
        let mut raw = Vec::with_capacity(wire.len());
        for t in wire {
            if t.e_den == 0 {
                return Err(D::Error::custom("term exponent has zero denominator"));
            }
            raw.push((QRat::new(t.e_num, t.e_den), Complex64::new(t.re, t.im)));
        }
        QExpScalar::from_terms(raw).map_err(|e| D::Error::custom(e.to_string()))
    }
}
