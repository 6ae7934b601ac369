//! q-difference operator algebra.
//!
//! A [`QDiffOperator`] is a finite sum `sum_i b_i(z) sigma^i` where the
//! shift exponents `i` are rationals, the coefficients `b_i` are polynomials
//! in `z` with [`QExpScalar`] coefficients, and `sigma^i` dilates the
//! argument: `(sigma^i f)(z) = f(q^i z)`. Everything downstream — Newton
//! polygons, Borel conjugation, summation plans, recurrence solving — works
//! on this one representation.

mod newton;
mod parse;
mod plan;
mod solve;

pub use newton::{newton_polygon, slope_shift_check, NewtonPolygon, Slope};
pub use parse::parse_operator;
pub use plan::{summation_plan, SummationPlan};
pub use solve::solve_formal;

use crate::error::{Error, Result};
use crate::numeric::ScaledComplex;
use crate::scalars::{qrat_add, qrat_mul, QExpScalar, QRat, QValue};
use crate::series::FormalSeries;
use num_complex::Complex64;
use num_traits::{CheckedMul, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

/// Polynomial in `z` with exact q-power coefficients, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZPoly {
    coeffs: Vec<QExpScalar>,
}

impl ZPoly {
    /// Builds a polynomial from coefficients (degree 0 upward).
    pub fn new(mut coeffs: Vec<QExpScalar>) -> Self {
        while coeffs.last().is_some_and(QExpScalar::is_zero) {
            coeffs.pop();
        }
        ZPoly { coeffs }
    }

    /// The zero polynomial.
    pub fn zero() -> Self {
        ZPoly { coeffs: Vec::new() }
    }

    /// The constant polynomial 1.
    pub fn one() -> Self {
        ZPoly { coeffs: vec![QExpScalar::one()] }
    }

    /// The single term `c * z^j`.
    pub fn monomial(c: QExpScalar, j: usize) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![QExpScalar::zero(); j];
        coeffs.push(c);
        ZPoly { coeffs }
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Smallest degree with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Coefficient of `z^j` (exact zero beyond the degree).
    pub fn coeff(&self, j: usize) -> QExpScalar {
        self.coeffs.get(j).cloned().unwrap_or_else(QExpScalar::zero)
    }

    /// The coefficients, degree 0 upward.
    pub fn coeffs(&self) -> &[QExpScalar] {
        &self.coeffs
    }

    /// Polynomial sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for j in 0..n {
            coeffs.push(self.coeff(j).add(&other.coeff(j))?);
        }
        Ok(ZPoly::new(coeffs))
    }

    /// Multiplies every coefficient by a scalar.
    pub fn scale(&self, s: &QExpScalar) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.mul(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(ZPoly::new(coeffs))
    }

    /// Numeric value at `z` (Horner).
    pub fn eval(&self, qv: &QValue, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.bind(qv);
        }
        acc
    }

    /// Numeric value at an overflow-safe point (Horner in scaled arithmetic,
    /// for spiral points far beyond f64 range).
    pub fn eval_scaled(&self, qv: &QValue, z: &ScaledComplex) -> ScaledComplex {
        let mut acc = ScaledComplex::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(&ScaledComplex::from_complex(c.bind(qv)));
        }
        acc
    }

    /// The largest single-monomial modulus `|c_j| * |z|^j` at a scaled point:
    /// the natural scale against which a near-zero value signals a root.
    pub fn eval_scale(&self, qv: &QValue, z: &ScaledComplex) -> f64 {
        let z_log2 = z.norm_log2();
        let mut best = f64::NEG_INFINITY;
        for (j, c) in self.coeffs.iter().enumerate() {
            let m = c.bind(qv).norm();
            if m > 0.0 {
                best = best.max(m.log2() + j as f64 * z_log2);
            }
        }
        best
    }

    /// Coefficients bound at `q`, degree 0 upward.
    pub fn bind_coeffs(&self, qv: &QValue) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.bind(qv)).collect()
    }
}

/// A q-difference operator: finite map shift exponent -> coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QDiffOperator {
    terms: BTreeMap<QRat, ZPoly>,
}

impl QDiffOperator {
    /// Builds an operator, merging duplicated shifts and dropping zero
    /// coefficient polynomials.
    pub fn from_terms(terms: impl IntoIterator<Item = (QRat, ZPoly)>) -> Result<Self> {
        let mut map: BTreeMap<QRat, ZPoly> = BTreeMap::new();
        for (shift, poly) in terms {
            match map.remove(&shift) {
                Some(existing) => {
                    map.insert(shift, existing.add(&poly)?);
                }
                None => {
                    map.insert(shift, poly);
                }
            }
        }
        map.retain(|_, p| !p.is_zero());
        Ok(QDiffOperator { terms: map })
    }

    /// True when no terms remain.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Shift exponents, ascending.
    pub fn shifts(&self) -> impl Iterator<Item = QRat> + '_ {
        self.terms.keys().copied()
    }

    /// Coefficient polynomial at a shift, if present.
    pub fn term(&self, shift: QRat) -> Option<&ZPoly> {
        self.terms.get(&shift)
    }

    /// Iterates `(shift, coefficient)` pairs, ascending in shift.
    pub fn iter(&self) -> impl Iterator<Item = (QRat, &ZPoly)> {
        self.terms.iter().map(|(s, p)| (*s, p))
    }

    /// Number of terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Smallest shift exponent.
    pub fn min_shift(&self) -> Option<QRat> {
        self.terms.keys().next().copied()
    }

    /// Largest shift exponent.
    pub fn max_shift(&self) -> Option<QRat> {
        self.terms.keys().next_back().copied()
    }

    /// Least common denominator of the shift exponents.
    pub fn denominator(&self) -> i64 {
        self.terms.keys().fold(1i64, |acc, s| lcm_i64(acc, *s.denom()))
    }

    /// Largest z-degree among the coefficient polynomials.
    pub fn max_z_degree(&self) -> usize {
        self.terms
            .values()
            .filter_map(ZPoly::degree)
            .max()
            .unwrap_or(0)
    }

    /// Applies the operator to a truncated series, exactly. The result is
    /// truncated to `N - max_z_degree` where `N` is the input's truncation
    /// order, the window on which all contributions are known.
    ///
    /// Every output coefficient is assembled in a single canonicalization
    /// pass over all its monomial contributions, so two operator/series
    /// routes producing the same contribution multiset produce bit-identical
    /// results.
    pub fn apply_series(&self, f: &FormalSeries) -> Result<FormalSeries> {
        let n = f.truncation_order();
        let keep = n.saturating_sub(self.max_z_degree());
        let mut atoms: Vec<Vec<(QRat, Complex64)>> = vec![Vec::new(); keep];
        for (shift, poly) in &self.terms {
            for (j, c) in poly.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for (k, fk) in f.coeffs().iter().enumerate() {
                    let d = j + k;
                    if d >= keep || fk.is_zero() {
                        continue;
                    }
                    let dilation = qrat_mul(*shift, QRat::from_integer(k as i64))?;
                    for &(e_f, v_f) in fk.terms() {
                        for &(e_c, v_c) in c.terms() {
                            atoms[d].push((qrat_add(qrat_add(e_f, e_c)?, dilation)?, v_f * v_c));
                        }
                    }
                }
            }
        }
        let coeffs = atoms
            .into_iter()
            .map(QExpScalar::from_terms)
            .collect::<Result<Vec<_>>>()?;
        Ok(FormalSeries::new(coeffs))
    }

    /// Applies the operator to a numeric function at a point:
    /// `sum_i b_i(z) f(q^i z)`.
    pub fn apply_fn<F>(&self, qv: &QValue, z: Complex64, mut f: F) -> Result<Complex64>
    where
        F: FnMut(Complex64) -> Result<Complex64>,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for (shift, poly) in &self.terms {
            acc += poly.eval(qv, z) * f(qv.pow(*shift) * z)?;
        }
        Ok(acc)
    }

    /// Borel conjugation of order `mu`: the operator `Q` with
    /// `Q(borel(f)) = borel(P(f))`, built monomial by monomial from
    /// `a z^j sigma^i  ->  a q^(-j(j-1)/(2 mu)) z^j sigma^(i - j/mu)`.
    pub fn borel_conjugate(&self, mu: QRat) -> Result<QDiffOperator> {
        if mu <= QRat::zero() {
            return Err(Error::Unsupported {
                what: format!("Borel conjugation order {mu} (must be positive)"),
            });
        }
        let mut out: Vec<(QRat, ZPoly)> = Vec::new();
        for (shift, poly) in &self.terms {
            for (j, c) in poly.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let j_i = j as i64;
                let weight = qrat_mul(QRat::new(j_i * (j_i - 1), 2), mu.recip())?;
                let new_shift = qrat_add(*shift, -qrat_mul(QRat::from_integer(j_i), mu.recip())?)?;
                let new_coeff = c.shift_exponent(-weight)?;
                out.push((new_shift, ZPoly::monomial(new_coeff, j)));
            }
        }
        QDiffOperator::from_terms(out)
    }

    /// Degree bound satisfied by every Borel-conjugated operator:
    /// `deg(b_i) - deg(b_top) <= (top - i) * mu` for the largest shift `top`.
    pub fn degree_bound_check(&self, mu: QRat) -> bool {
        let Some(top) = self.max_shift() else {
            return true;
        };
        let top_deg = self.terms[&top].degree().unwrap_or(0) as i64;
        self.terms.iter().all(|(shift, poly)| {
            let deg = poly.degree().unwrap_or(0) as i64;
            let gap = QRat::from_integer(deg - top_deg);
            match (top - shift).checked_mul(&mu) {
                Some(budget) => gap <= budget,
                None => false,
            }
        })
    }
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm_i64(a: i64, b: i64) -> i64 {
    if a == 0 || b == 0 {
        return 0;
    }
    (a / gcd_i64(a, b)) * b
}

/// Wire form of one operator term.
#[derive(Serialize, Deserialize)]
struct TermWire {
    shift_num: i64,
    shift_den: i64,
    poly: Vec<QExpScalar>,
}

/// Pinned JSON interchange form:
/// `{"n": denominator, "terms": [{"shift_num", "shift_den", "poly"}]}`.
#[derive(Serialize, Deserialize)]
struct OperatorWire {
    n: i64,
    terms: Vec<TermWire>,
}

impl Serialize for QDiffOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorWire {
            n: self.denominator(),
            terms: self
                .terms
                .iter()
                .map(|(shift, poly)| TermWire {
                    shift_num: *shift.numer(),
                    shift_den: *shift.denom(),
                    poly: poly.coeffs.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QDiffOperator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = OperatorWire::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(wire.terms.len());
        for t in wire.terms {
            if t.shift_den == 0 {
                return Err(D::Error::custom("shift exponent has zero denominator"));
            }
            terms.push((QRat::new(t.shift_num, t.shift_den), ZPoly::new(t.poly)));
        }
        let op = QDiffOperator::from_terms(terms).map_err(|e| D::Error::custom(e.to_string()))?;
        if op.denominator() % wire.n != 0 && wire.n % op.denominator() != 0 {
            return Err(D::Error::custom(format!(
                "declared denominator {} incompatible with shifts (lcd {})",
                wire.n,
                op.denominator()
            )));
        }
        Ok(op)
    }
}
