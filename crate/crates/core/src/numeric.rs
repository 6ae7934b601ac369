//! Numeric workhorses: overflow-safe complex scalars, polynomial roots,
//! complex eigenvalues, and small least-squares fits.
//!
//! Theta kernels and spiral samples routinely reach magnitudes like
//! `|q|^(l^2/2)`, far past f64 range, so every quantity that can grow that
//! way is carried as a [`ScaledComplex`]: a normalized complex mantissa with
//! a separate binary exponent. Ratios of such values are ordinary numbers
//! again and convert back to `Complex64` at the end.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// A complex value `m * 2^e` with `0.5 <= |m| < 2` (or exactly zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledComplex {
    m: Complex64,
    e: i64,
}

/// Exponent gap beyond which the smaller addend cannot move the mantissa.
const ADD_CUTOFF: i64 = 128;

impl ScaledComplex {
    /// The zero value.
    pub fn zero() -> Self {
        ScaledComplex { m: Complex64::new(0.0, 0.0), e: 0 }
    }

    /// Wraps an ordinary complex number.
    pub fn from_complex(v: Complex64) -> Self {
        ScaledComplex { m: v, e: 0 }.normalized()
    }

    /// Builds `2^(log2_mod) * exp(i arg)` without ever forming the modulus.
    pub fn from_polar_log2(log2_mod: f64, arg: f64) -> Self {
        let e = log2_mod.floor();
        let frac = log2_mod - e;
        let m = Complex64::from_polar(frac.exp2(), arg);
        ScaledComplex { m, e: e as i64 }.normalized()
    }

    fn normalized(self) -> Self {
        let n = self.m.norm();
        if n == 0.0 || !n.is_finite() {
            return ScaledComplex { m: self.m, e: 0 };
        }
        let shift = n.log2().floor() as i64;
        if shift == 0 {
            return self;
        }
        ScaledComplex {
            m: self.m * (-(shift as f64)).exp2(),
            e: self.e + shift,
        }
    }

    /// True for the exact zero.
    pub fn is_zero(&self) -> bool {
        self.m.norm() == 0.0
    }

    /// `log2` of the modulus; `-inf` for zero.
    pub fn norm_log2(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.m.norm().log2() + self.e as f64
        }
    }

    /// Argument of the value.
    pub fn arg(&self) -> f64 {
        self.m.arg()
    }

    /// Converts back to `Complex64`; values beyond f64 range become
    /// infinities or zeros, so check [`norm_log2`](Self::norm_log2) first
    /// when that matters.
    pub fn to_complex(&self) -> Complex64 {
        self.m * (self.e as f64).exp2()
    }

    /// Product.
    pub fn mul(&self, other: &Self) -> Self {
        ScaledComplex { m: self.m * other.m, e: self.e + other.e }.normalized()
    }

    /// Quotient; division by zero yields a non-finite mantissa the caller
    /// can detect with [`is_finite`](Self::is_finite).
    pub fn div(&self, other: &Self) -> Self {
        ScaledComplex { m: self.m / other.m, e: self.e - other.e }.normalized()
    }

    /// Sum, aligning binary exponents; an addend more than `ADD_CUTOFF`
    /// bits below the other is absorbed without loss of headroom.
    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (hi, lo) = if self.e >= other.e { (self, other) } else { (other, self) };
        let gap = hi.e - lo.e;
        if gap > ADD_CUTOFF {
            return *hi;
        }
        ScaledComplex {
            m: hi.m + lo.m * (-(gap as f64)).exp2(),
            e: hi.e,
        }
        .normalized()
    }

    /// Negation.
    pub fn neg(&self) -> Self {
        ScaledComplex { m: -self.m, e: self.e }
    }

    /// Difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Scales by an ordinary complex factor.
    pub fn mul_complex(&self, v: Complex64) -> Self {
        ScaledComplex { m: self.m * v, e: self.e }.normalized()
    }

    /// True when the mantissa is finite (division by zero and overflow of
    /// the mantissa itself poison it to NaN/inf).
    pub fn is_finite(&self) -> bool {
        self.m.re.is_finite() && self.m.im.is_finite()
    }
}

/// All roots of `sum_k coeffs[k] x^k`, zeros included, via the companion
/// matrix of the monic normalization. Exactly-zero leading coefficients are
/// stripped; a polynomial that is identically zero is rejected.
pub fn polyroots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    if c.is_empty() {
        return Err(Error::ZeroOperator);
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -c[i] / lead;
    }
    eig_complex(&companion)
}

/// The nonzero roots of a polynomial, with zeros filtered at a relative
/// threshold against the largest root modulus (exact zeros of the constant
/// term are stripped before the eigensolve, so this is a safety net).
pub fn nonzero_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c = coeffs.to_vec();
    let mut skip = 0;
    while skip < c.len() && c[skip].norm() == 0.0 {
        skip += 1;
    }
    c.drain(..skip);
    let roots = polyroots(&c)?;
    let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    Ok(roots
        .into_iter()
        .filter(|r| r.norm() > 1e-12 * scale.max(1e-300))
        .collect())
}

/// Eigenvalues of a square complex matrix via its Schur form.
pub fn eig_complex(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = m.clone().try_schur(1e-13, 20_000).ok_or(Error::EigenFailed)?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Least-squares quadratic `y ~ a x^2 + b x + c` with its rms residual.
#[derive(Debug, Clone, Copy)]
pub struct QuadFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub rms: f64,
}

/// Fits a quadratic through `(xs, ys)` by normal equations.
pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<QuadFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InsufficientData { need: 3, have: xs.len().min(ys.len()) });
    }
    let n = xs.len();
    let mut design = DMatrix::<f64>::zeros(n, 3);
    let mut rhs = DMatrix::<f64>::zeros(n, 1);
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        design[(i, 0)] = x * x;
        design[(i, 1)] = x;
        design[(i, 2)] = 1.0;
        rhs[(i, 0)] = y;
    }
    let gram = design.transpose() * &design;
    let moment = design.transpose() * &rhs;
    let sol = gram.lu().solve(&moment).ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
    let (a, b, c) = (sol[(0, 0)], sol[(1, 0)], sol[(2, 0)]);
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (a * x * x + b * x + c);
        ss += r * r;
    }
    Ok(QuadFit { a, b, c, rms: (ss / n as f64).sqrt() })
}

/// Least-squares line `y ~ b x + c` with its rms residual.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub b: f64,
    pub c: f64,
    pub rms: f64,
}

/// Fits a line through `(xs, ys)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData { need: 2, have: xs.len().min(ys.len()) });
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::IllConditioned { cond: f64::INFINITY });
    }
    let b = (n * sxy - sx * sy) / det;
    let c = (sy - b * sx) / n;
    let mut ss = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (b * x + c);
        ss += r * r;
    }
    Ok(LineFit { b, c, rms: (ss / n).sqrt() })
}
