//! Truncated formal power series with exact q-power coefficients.
//!
//! A [`FormalSeries`] holds the coefficients of `sum_{l=0}^{N-1} a_l z^l`;
//! `N` is the truncation order (nothing is known from degree `N` on). The
//! q-Borel and formal q-Laplace transforms act exactly on the coefficient
//! exponents:
//!
//! * Borel of order `mu` maps `a_l` to `a_l * q^(-l(l-1)/(2 mu))`,
//! * formal Laplace of order `mu` maps `a_l` to `a_l * q^(+l(l-1)/(2 mu))`,
//!
//! so the pair is an exact involution, and Borel transforms compose by
//! reciprocal addition of their orders.

use crate::error::{Error, Result};
use crate::scalars::{qrat_mul, QExpScalar, QRat, QValue};
use num_complex::Complex64;
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Truncated formal series: `coeffs()[l]` is the coefficient of `z^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries {
    coeffs: Vec<QExpScalar>,
}

/// Guards a Borel/Laplace order: must be a positive rational.
fn check_order(mu: QRat) -> Result<()> {
    if mu <= QRat::zero() {
        return Err(Error::Unsupported {
            what: format!("transform order {mu} (must be positive)"),
        });
    }
    Ok(())
}

/// The quadratic exponent weight `l(l-1)/(2 mu)` used by both transforms.
fn quadratic_weight(l: i64, mu: QRat) -> Result<QRat> {
    let base = l.checked_mul(l - 1).ok_or(Error::ExponentOverflow)?;
    qrat_mul(QRat::new(base, 2), mu.recip())
}

impl FormalSeries {
    /// Builds a series from its coefficient window (degree 0 upward).
    pub fn new(coeffs: Vec<QExpScalar>) -> Self {
        FormalSeries { coeffs }
    }

    /// The zero series truncated at order `n`.
    pub fn zeros(n: usize) -> Self {
        FormalSeries { coeffs: vec![QExpScalar::zero(); n] }
    }

    /// Truncation order: the number of known coefficients.
    pub fn truncation_order(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `z^l`; exact zero beyond the window is *not* implied,
    /// so out-of-window degrees also return zero but mean "unknown".
    pub fn coeff(&self, l: usize) -> QExpScalar {
        self.coeffs.get(l).cloned().unwrap_or_else(QExpScalar::zero)
    }

    /// The coefficient window.
    pub fn coeffs(&self) -> &[QExpScalar] {
        &self.coeffs
    }

    /// Smallest degree with a nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Restricts the window to degrees `< n`.
    pub fn truncate(&self, n: usize) -> Self {
        FormalSeries { coeffs: self.coeffs[..n.min(self.coeffs.len())].to_vec() }
    }

    /// Termwise sum; the shorter window is zero-padded, so the caller is
    /// responsible for truncating to the jointly known range.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for l in 0..n {
            coeffs.push(self.coeff(l).add(&other.coeff(l))?);
        }
        Ok(FormalSeries { coeffs })
    }

    /// Termwise difference (window rules as in [`add`](Self::add)).
    pub fn sub(&self, other: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for l in 0..n {
            coeffs.push(self.coeff(l).sub(&other.coeff(l))?);
        }
        Ok(FormalSeries { coeffs })
    }

    /// Multiplies every coefficient by a fixed scalar.
    pub fn scale(&self, s: &QExpScalar) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.mul(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(FormalSeries { coeffs })
    }

    /// Multiplies by `z^j`, `j >= 0`: prepends zeros, extending the window.
    pub fn mul_z_pow(&self, j: usize) -> Self {
        let mut coeffs = vec![QExpScalar::zero(); j];
        coeffs.extend_from_slice(&self.coeffs);
        FormalSeries { coeffs }
    }

    /// Applies the dilation `z -> q^e z` exactly: `a_l` gains `q^(e l)`.
    pub fn sigma(&self, e: QRat) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (l, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.shift_exponent(qrat_mul(e, QRat::from_integer(l as i64))?)?);
        }
        Ok(FormalSeries { coeffs })
    }

    /// q-Borel transform of order `mu`, acting exactly on exponents.
    pub fn q_borel(&self, mu: QRat) -> Result<Self> {
        check_order(mu)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (l, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.shift_exponent(-quadratic_weight(l as i64, mu)?)?);
        }
        Ok(FormalSeries { coeffs })
    }

    /// Formal q-Laplace transform of order `mu`: the exact inverse of
    /// [`q_borel`](Self::q_borel) with the same order.
    pub fn formal_q_laplace(&self, mu: QRat) -> Result<Self> {
        check_order(mu)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (l, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.shift_exponent(quadratic_weight(l as i64, mu)?)?);
        }
        Ok(FormalSeries { coeffs })
    }

    /// Binds every coefficient at `q`, ascending from degree 0.
    pub fn bind_coeffs(&self, qv: &QValue) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.bind(qv)).collect()
    }

    /// Evaluates the truncated series at `z` by Horner summation.
    pub fn eval(&self, qv: &QValue, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.bind(qv);
        }
        acc
    }

    /// Evaluates and reports the modulus of the largest of the last three
    /// window terms, the caller's handle on truncation error.
    pub fn eval_with_tail(&self, qv: &QValue, z: Complex64) -> (Complex64, f64) {
        let value = self.eval(qv, z);
        let n = self.coeffs.len();
        let mut tail = 0.0f64;
        for l in n.saturating_sub(3)..n {
            tail = tail.max((self.coeffs[l].bind(qv) * z.powi(l as i32)).norm());
        }
        (value, tail)
    }

    /// Estimates the radius of convergence from the bound coefficients:
    /// the reciprocal of the max of `|a_l|^(1/l)` over the window tail
    /// (a finite stand-in for the limsup). Infinite when the tail vanishes;
    /// near zero for series with q-exponential coefficient growth.
    pub fn radius_estimate(&self, qv: &QValue) -> f64 {
        let bound = self.bind_coeffs(qv);
        let n = bound.len();
        let start = n.saturating_sub((n / 2).max(1));
        let mut sup: f64 = 0.0;
        for (l, b) in bound.iter().enumerate().skip(start.max(1)) {
            let m = b.norm();
            if m > 0.0 {
                sup = sup.max(m.powf(1.0 / l as f64));
            }
        }
        if sup == 0.0 {
            f64::INFINITY
        } else {
            1.0 / sup
        }
    }
}

/// Pinned JSON interchange form: `{"order": N, "coeffs": [...]}`.
#[derive(Serialize, Deserialize)]
struct SeriesWire {
    order: usize,
    coeffs: Vec<QExpScalar>,
}

impl Serialize for FormalSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesWire {
            order: self.coeffs.len(),
            coeffs: self.coeffs.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FormalSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = SeriesWire::deserialize(deserializer)?;
        if wire.order != wire.coeffs.len() {
            return Err(D::Error::custom(format!(
                "series order {} does not match coefficient count {}",
                wire.order,
                wire.coeffs.len()
            )));
        }
        Ok(FormalSeries { coeffs: wire.coeffs })
    }
}
