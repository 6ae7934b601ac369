//! Numeric q-Laplace transforms along discrete spirals.
//!
//! The transform of order `mu` on the lattice `q^(Z/K) lambda` is
//!
//! ```text
//! L(f)(z) = (mu/K) * sum over j of  f(q^(j/K) lambda) / theta_{q^(1/mu)}(q^(1/mu + j/K) lambda / z)
//! ```
//!
//! It inverts the formal q-Borel transform on convergent germs, sends
//! theta-growth functions to meromorphic ones with simple poles on
//! `-lambda q^(Z/K)`, and composes across levels into the multilevel
//! summation pipeline. This module houses the kernel sum; spiral-value
//! bookkeeping lives in [`spiral`], growth certification in [`growth`], and
//! the pipeline plus its diagnostics in [`pipeline`].

mod growth;
mod pipeline;
mod spiral;

pub use growth::{h_membership, GrowthCertificate};
pub use pipeline::{
    asymptotic_check, borel_sum_pipeline, borel_summation, pole_scan, residual_check,
    AsymptoticReport, BorelSummation, DetectedPole, PoleScanReport,
};
pub use spiral::{continue_along_spiral, LaplaceStage, Relation, Seed, SpiralFunction};

use crate::error::{Error, Result};
use crate::numeric::ScaledComplex;
use crate::scalars::{qrat_f64, QRat};
use crate::theta::{theta_scaled, ThetaOptions};
use num_complex::Complex64;

/// Controls for the bilateral kernel sum and its guards.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceOptions {
    /// Relative floor for tail truncation.
    pub tol: f64,
    /// Hard cap per tail; beyond it the sum is declared non-convergent.
    pub max_terms_per_side: usize,
    /// A tail stops after this many consecutive sub-threshold terms.
    pub consecutive_quiet: u32,
    /// Relative distance to the pole spiral below which evaluation refuses.
    pub near_pole_rel: f64,
    /// Skip growth certification (for callers that certify separately or
    /// deliberately probe outside the certified class).
    pub skip_certificate: bool,
    /// Lattice depth used when a certificate has to be produced on demand.
    pub probe_depth: i64,
    /// Debug switch: drop the mu/K prefactor (verification batteries use
    /// this to prove the harness would catch a broken transform).
    pub drop_prefactor: bool,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions {
            tol: 1e-16,
            max_terms_per_side: 400,
            consecutive_quiet: 5,
            near_pole_rel: 1e-8,
            skip_certificate: false,
            probe_depth: 24,
            drop_prefactor: false,
        }
    }
}

/// Divergence guard: a term this far (in log2) above the running maximum
/// means the input outgrows the kernel and the sum cannot converge.
const DIVERGENCE_BITS: f64 = 100.0;

/// The q-Laplace transform of `sf` of order `mu`, summed over the
/// sub-lattice `q^(Z/sum_lattice) lambda` of the spiral (so `sum_lattice`
/// must divide the spiral's lattice), at an exponent-scaled point.
///
/// Truncation: each tail stops after `consecutive_quiet` terms below
/// `tol * (running max)`; a tail that exceeds `max_terms_per_side` or grows
/// beyond the running maximum by `2^100` fails with
/// `TruncationNotConverged`.
pub fn q_laplace_scaled(
    sf: &SpiralFunction,
    mu: QRat,
    sum_lattice: i64,
    z: &ScaledComplex,
    opts: &LaplaceOptions,
) -> Result<ScaledComplex> {
    if mu <= QRat::from_integer(0) {
        return Err(Error::Unsupported {
            what: format!("Laplace order {mu} (must be positive)"),
        });
    }
    if sum_lattice <= 0 || sf.lattice() % sum_lattice != 0 {
        return Err(Error::LatticeMismatch {
            expected: sf.lattice(),
            found: sum_lattice,
        });
    }
    if z.is_zero() || !z.is_finite() {
        return Err(Error::Unsupported {
            what: "Laplace evaluation at z = 0 or a non-finite point".to_string(),
        });
    }
    let qv = *sf.q_value();
    let lambda = sf.lambda();

    // Refuse points within relative tolerance of the pole spiral
    // -lambda q^(Z/sum_lattice).
    let z_c = z.to_complex();
    let ln_q = qv.log_q().re;
    let m = (sum_lattice as f64 * (z.norm_log2() - lambda.norm().log2()) * std::f64::consts::LN_2
        / ln_q)
        .round();
    let pole = ScaledComplex::from_complex(-lambda).mul(&ScaledComplex::from_polar_log2(
        m / sum_lattice as f64 * qv.log2_modulus(),
        m / sum_lattice as f64 * qv.arg_step(),
    ));
    let rel = (z.sub(&pole).norm_log2() - pole.norm_log2()).exp2();
    if rel <= opts.near_pole_rel {
        return Err(Error::NearPole { z: z_c });
    }

    if !opts.skip_certificate {
        match sf.certificate(mu) {
            Some(cert) if cert.ok => {}
            Some(_) => return Err(Error::NotCertified { stage: 0 }),
            None => {
                let cert = h_membership(sf, mu, opts.probe_depth * sf.lattice())?;
                let ok = cert.ok;
                sf.store_certificate(cert);
                if !ok {
                    return Err(Error::NotCertified { stage: 0 });
                }
            }
        }
    }

    let theta_base = qv.root(mu.recip())?;
    let theta_opts = ThetaOptions { tol: 1e-16, max_terms: 256 };
    let step = sf.lattice() / sum_lattice;

    // Kernel argument for sub-lattice index j: q^(1/mu + j/sum_lattice) lambda / z.
    let mu_f = qrat_f64(mu);
    let kernel = |j: i64| -> Result<ScaledComplex> {
        let e = 1.0 / mu_f + j as f64 / sum_lattice as f64;
        let w = ScaledComplex::from_polar_log2(
            e * qv.log2_modulus() + lambda.norm().log2() - z.norm_log2(),
            e * qv.arg_step() + lambda.arg() - z.arg(),
        );
        theta_scaled(&theta_base, &w, &theta_opts)
    };

    let mut acc = ScaledComplex::zero();
    let mut run_max_log2 = f64::NEG_INFINITY;
    for side in [1i64, -1] {
        let mut quiet = 0u32;
        let mut count = 0usize;
        let mut j = if side == 1 { 0 } else { -1 };
        loop {
            if count >= opts.max_terms_per_side {
                return Err(Error::TruncationNotConverged { index: j });
            }
            let value = sf.value(j * step)?;
            let denom = kernel(j)?;
            if denom.is_zero() {
                return Err(Error::NearZeroTheta { z: z_c });
            }
            let term = value.div(&denom);
            if !term.is_finite() {
                return Err(Error::Overflow);
            }
            acc = acc.add(&term);
            let t_log2 = term.norm_log2();
            if t_log2 > run_max_log2 {
                run_max_log2 = t_log2;
            }
            if t_log2 > run_max_log2.min(0.0) + DIVERGENCE_BITS
                && t_log2 > acc.norm_log2() + DIVERGENCE_BITS
            {
                return Err(Error::TruncationNotConverged { index: j });
            }
            if t_log2 < run_max_log2 + opts.tol.log2() {
                quiet += 1;
                if quiet >= opts.consecutive_quiet {
                    break;
                }
            } else {
                quiet = 0;
            }
            j += side;
            count += 1;
        }
    }

    if opts.drop_prefactor {
        Ok(acc)
    } else {
        Ok(acc.mul_complex(Complex64::new(mu_f / sum_lattice as f64, 0.0)))
    }
}

/// The q-Laplace transform at an ordinary point, as a plain complex value.
pub fn q_laplace_eval(
    sf: &SpiralFunction,
    mu: QRat,
    sum_lattice: i64,
    z: Complex64,
    opts: &LaplaceOptions,
) -> Result<Complex64> {
    let v = q_laplace_scaled(sf, mu, sum_lattice, &ScaledComplex::from_complex(z), opts)?;
    let out = v.to_complex();
    if !out.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(out)
}
