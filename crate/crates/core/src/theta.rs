//! Jacobi-style theta function for `|q| > 1` and its companions.
//!
//! `theta(z) = sum over all integers l of q^(-l(l+1)/2) z^l` converges on
//! the whole punctured plane and vanishes exactly on the discrete spiral
//! `-q^Z`, with simple zeros. It is the kernel of the numeric q-Laplace
//! transform, the building block of the log-free `Lambda_c` characters, and
//! the yardstick for growth classes. All evaluation goes through argument
//! reduction to the annulus `1 <= |w| < |q|` — the raw bilateral sum is
//! catastrophically conditioned away from it — with the quasi-periodicity
//! prefactor `q^(k(k-1)/2) w^k` carried in exponent form so nothing
//! overflows even when `|z|` is astronomically large or small.

use crate::error::{Error, Result};
use crate::numeric::ScaledComplex;
use crate::scalars::{qrat_f64, QRat, QValue};
use num_complex::Complex64;

/// Truncation controls for theta sums.
#[derive(Debug, Clone, Copy)]
pub struct ThetaOptions {
    /// Relative floor: stop after three consecutive terms fall below
    /// `tol * (largest term so far)`.
    pub tol: f64,
    /// Hard cap on summed terms.
    pub max_terms: usize,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions { tol: 1e-16, max_terms: 64 }
    }
}

/// Theta value together with the largest term magnitude met while summing
/// (in log2), which is the natural scale for "is this value effectively
/// zero" decisions near the zero spiral.
struct ThetaCore {
    value: ScaledComplex,
    scale_log2: f64,
    /// Log-derivative numerator `sum l c_l w^l`, over the same reduction.
    weighted: ScaledComplex,
    /// Lattice exponent of the reduction `z = base^k w`.
    reduction: i64,
}

fn theta_core(base: &QValue, z: &ScaledComplex, opts: &ThetaOptions) -> Result<ThetaCore> {
    if z.is_zero() || !z.is_finite() {
        return Err(Error::Unsupported {
            what: "theta evaluation at z = 0 or a non-finite point".to_string(),
        });
    }
    let step_log2 = base.log2_modulus();
    let step_arg = base.arg_step();

    // Reduce to w = z / base^k with 1 <= |w| < |base|.
    let k = (z.norm_log2() / step_log2).floor();
    let w_scaled = z.mul(&ScaledComplex::from_polar_log2(-k * step_log2, -k * step_arg));
    let w = w_scaled.to_complex();
    if !w.is_finite() || w.norm() == 0.0 {
        return Err(Error::Overflow);
    }
    let w_log2 = w.norm().log2();
    let w_arg = w.arg();

    let term = |l: f64| -> ScaledComplex {
        let e = -l * (l + 1.0) / 2.0;
        ScaledComplex::from_polar_log2(e * step_log2 + l * w_log2, e * step_arg + l * w_arg)
    };

    let mut value = ScaledComplex::zero();
    let mut weighted = ScaledComplex::zero();
    let mut scale_log2 = f64::NEG_INFINITY;
    let mut quiet_run = 0u32;
    let mut count = 0usize;
    let mut l_pos = 0i64;
    let mut l_neg = -1i64;
    let mut take_pos = true;
    loop {
        if count >= opts.max_terms {
            return Err(Error::TermBudget { terms: count });
        }
        let l = if take_pos { l_pos } else { l_neg };
        let t = term(l as f64);
        value = value.add(&t);
        weighted = weighted.add(&t.mul_complex(Complex64::new(l as f64, 0.0)));
        scale_log2 = scale_log2.max(t.norm_log2());
        if t.norm_log2() < scale_log2 + opts.tol.log2() {
            quiet_run += 1;
            if quiet_run >= 3 && count >= 2 {
                break;
            }
        } else {
            quiet_run = 0;
        }
        if take_pos {
            l_pos += 1;
        } else {
            l_neg -= 1;
        }
        take_pos = !take_pos;
        count += 1;
    }

    // Quasi-periodicity prefactor base^(k(k-1)/2) w^k, in exponent form.
    let e = k * (k - 1.0) / 2.0;
    let prefactor = ScaledComplex::from_polar_log2(
        e * step_log2 + k * w_log2,
        e * step_arg + k * w_arg,
    );
    Ok(ThetaCore {
        value: prefactor.mul(&value),
        scale_log2: prefactor.norm_log2() + scale_log2,
        weighted: prefactor.mul(&weighted),
        reduction: k as i64,
    })
}

/// Theta value at an exponent-scaled point; never overflows.
pub fn theta_scaled(base: &QValue, z: &ScaledComplex, opts: &ThetaOptions) -> Result<ScaledComplex> {
    Ok(theta_core(base, z, opts)?.value)
}

/// Theta value at an ordinary point, with default truncation. Errors with
/// `Overflow` when the value leaves f64 range.
pub fn theta_eval(base: &QValue, z: Complex64) -> Result<Complex64> {
    let v = theta_scaled(base, &ScaledComplex::from_complex(z), &ThetaOptions::default())?;
    let out = v.to_complex();
    if !out.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(out)
}

/// Independent oracle: the triple-product form
/// `prod_{l>=0} (1 - q^(-l-1)) (1 + q^(-l-1) z) (1 + q^(-l) / z)`.
pub fn theta_triple_product(base: &QValue, z: Complex64) -> Result<ScaledComplex> {
    if z.norm() == 0.0 || !z.is_finite() {
        return Err(Error::Unsupported {
            what: "theta evaluation at z = 0 or a non-finite point".to_string(),
        });
    }
    let q_inv = Complex64::new(1.0, 0.0) / base.q();
    let z_inv = Complex64::new(1.0, 0.0) / z;
    let mut acc = ScaledComplex::from_complex(Complex64::new(1.0, 0.0));
    let mut qp = Complex64::new(1.0, 0.0); // q^(-l)
    for l in 0..512 {
        let a = Complex64::new(1.0, 0.0) - qp * q_inv;
        let b = Complex64::new(1.0, 0.0) + qp * q_inv * z;
        let c = Complex64::new(1.0, 0.0) + qp * z_inv;
        acc = acc.mul_complex(a).mul_complex(b).mul_complex(c);
        qp *= q_inv;
        if l > 2 && qp.norm() * (1.0 + z.norm() + z_inv.norm()) < 1e-18 {
            return Ok(acc);
        }
    }
    Err(Error::TermBudget { terms: 512 })
}

/// Relative residual of the quasi-periodicity identity in base `q^(1/mu)`:
/// `theta(q^(k/mu) z) = q^(k(k-1)/(2 mu)) z^k theta(z)`. Both sides are
/// evaluated independently (the left reduces its own argument).
pub fn theta_quasi_periodicity(qv: &QValue, mu: QRat, k: i64, z: Complex64) -> Result<f64> {
    if mu <= QRat::from_integer(0) {
        return Err(Error::Unsupported {
            what: format!("theta order {mu} (must be positive)"),
        });
    }
    let base = qv.root(mu.recip())?;
    let zs = ScaledComplex::from_complex(z);
    let opts = ThetaOptions::default();

    let shift = ScaledComplex::from_polar_log2(
        k as f64 * base.log2_modulus(),
        k as f64 * base.arg_step(),
    );
    let lhs = theta_scaled(&base, &zs.mul(&shift), &opts)?;

    let e = qrat_f64(QRat::from_integer(k * (k - 1))) / (2.0 * qrat_f64(mu));
    let prefactor = ScaledComplex::from_polar_log2(
        e * qv.log2_modulus(),
        e * qv.arg_step(),
    );
    let z_pow = ScaledComplex::from_polar_log2(
        k as f64 * z.norm().log2(),
        k as f64 * z.arg(),
    );
    let rhs = prefactor.mul(&z_pow).mul(&theta_scaled(&base, &zs, &opts)?);

    let diff = lhs.sub(&rhs);
    if diff.is_zero() {
        return Ok(0.0);
    }
    let denom = lhs.norm_log2().max(rhs.norm_log2());
    Ok((diff.norm_log2() - denom).exp2())
}

/// Relative floor below which a theta value counts as sitting on the zero
/// spiral.
const THETA_ZERO_REL: f64 = 1e-12;

/// The q-logarithm `l_q(z) = z theta'(z) / theta(z)`, by termwise
/// differentiation of the reduced series (the reduction exponent enters
/// additively). Satisfies `l_q(qz) = l_q(z) + 1`.
pub fn lq_eval(qv: &QValue, z: Complex64) -> Result<Complex64> {
    let core = theta_core(qv, &ScaledComplex::from_complex(z), &ThetaOptions::default())?;
    if core.value.is_zero() || core.value.norm_log2() < core.scale_log2 + THETA_ZERO_REL.log2() {
        return Err(Error::NearZeroTheta { z });
    }
    let ratio = core.weighted.div(&core.value).to_complex();
    if !ratio.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(Complex64::new(core.reduction as f64, 0.0) + ratio)
}

/// The theta character `Lambda_c(z) = theta(z) / theta(z/c)`, satisfying
/// `Lambda_c(qz) = c Lambda_c(z)`. Exponent-scaled: the value grows like a
/// power of `|z|`.
pub fn lambda_c_eval(qv: &QValue, c: Complex64, z: Complex64) -> Result<ScaledComplex> {
    if c.norm() == 0.0 || !c.is_finite() {
        return Err(Error::Unsupported {
            what: "Lambda_c with c = 0 or non-finite".to_string(),
        });
    }
    let opts = ThetaOptions::default();
    let num = theta_core(qv, &ScaledComplex::from_complex(z), &opts)?;
    let den = theta_core(qv, &ScaledComplex::from_complex(z / c), &opts)?;
    if den.value.is_zero() || den.value.norm_log2() < den.scale_log2 + THETA_ZERO_REL.log2() {
        return Err(Error::NearZeroTheta { z: z / c });
    }
    Ok(num.value.div(&den.value))
}

/// Numerical Lemma-1.3 constant: the minimum of
/// `|theta_{q^(1/mu)}(z)| / |theta_{|q|^(1/mu)}(|z|)|` over a grid of at
/// least 10^4 points on the fundamental annulus `1 <= |z| <= |q|^(1/mu)`,
/// excluding the relative `eps`-disks around the lattice spiral
/// `-q^(Z/K)`. Requires `K/mu` to be a positive integer and
/// `eps` in `(0, 1/2)`.
pub fn comparison_constant(qv: &QValue, mu: QRat, k_lattice: i64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Unsupported {
            what: format!("exclusion radius {eps} outside (0, 1/2)"),
        });
    }
    let ratio = QRat::from_integer(k_lattice) / mu;
    if k_lattice <= 0 || !ratio.is_integer() || ratio <= QRat::from_integer(0) {
        return Err(Error::Unsupported {
            what: format!("lattice {k_lattice} is not a positive multiple of the order {mu}"),
        });
    }
    let base = qv.root(mu.recip())?;
    let abs_base = base.modulus_base();
    let opts = ThetaOptions::default();

    // Spiral points -q^(l/K) whose half-modulus disks can reach the
    // annulus: |p| within a factor 2 of [1, |q|^(1/mu)].
    let ln_q_abs = qv.log_q().re;
    let reach = (k_lattice as f64 * std::f64::consts::LN_2 / ln_q_abs).ceil() as i64 + 1;
    let upper = (k_lattice as f64 / qrat_f64(mu)).ceil() as i64;
    let mut spiral: Vec<Complex64> = Vec::new();
    for l in -reach..=upper + reach {
        let p = -qv.pow(QRat::new(l, k_lattice));
        if p.is_finite() {
            spiral.push(p);
        }
    }

    let n_radial = 64usize;
    let n_angular = 160usize; // 64 * 160 = 10240 grid points
    let mut min_ratio = f64::INFINITY;
    let mut seen = false;
    for i in 0..n_radial {
        let t = (i as f64 + 0.5) / n_radial as f64;
        let r = abs_base.q().re.powf(t);
        let mut theta_abs_log2: Option<f64> = None;
        for j in 0..n_angular {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_angular as f64;
            let z = Complex64::from_polar(r, phi);
            if spiral.iter().any(|&p| (z - p).norm() < eps * p.norm()) {
                continue;
            }
            let denom = match theta_abs_log2 {
                Some(d) => d,
                None => {
                    let d = theta_scaled(
                        &abs_base,
                        &ScaledComplex::from_complex(Complex64::new(r, 0.0)),
                        &opts,
                    )?
                    .norm_log2();
                    theta_abs_log2 = Some(d);
                    d
                }
            };
            let v = theta_scaled(&base, &ScaledComplex::from_complex(z), &opts)?;
            min_ratio = min_ratio.min((v.norm_log2() - denom).exp2());
            seen = true;
        }
    }
    if !seen {
        return Err(Error::EmptyDomain);
    }
    Ok(min_ratio)
}
