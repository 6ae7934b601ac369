//! Power-series solutions of `P(h) = a` by degree recursion.
//!
//! Writing `v` for the smallest z-valuation among the coefficient
//! polynomials, the degree-`(m + v)` part of the equation pins the
//! degree-`m` coefficient of `h` through the multiplier
//! `c(m) = sum_i b_{i,v} q^(i m)`. Division stays exact whenever the
//! multiplier is a single q-power monomial (which covers every operator
//! whose minimal valuation is attained once by a monomial coefficient);
//! otherwise the multiplier is bound at `q` and the division is numeric,
//! with a relative floor guarding against resonances masked by rounding.

use super::QDiffOperator;
use crate::error::{Error, Result};
use crate::scalars::{qrat_mul, QExpScalar, QRat, QValue};
use crate::series::FormalSeries;
use num_complex::Complex64;

/// Relative floor for the bound multiplier before a degree is declared
/// resonant: `|c(m)| < RESONANCE_REL * (largest bound term of c)`.
const RESONANCE_REL: f64 = 1e-10;

/// Solves `P(h) = rhs` for a power series `h` with `order` coefficients.
///
/// Errors: `NoPowerSeriesSolution` when `rhs` has a nonzero coefficient
/// below the operator's minimal valuation, `Resonance` when a degree
/// multiplier vanishes (exactly, or relatively below `1e-10` once bound).
pub fn solve_formal(
    op: &QDiffOperator,
    rhs: &FormalSeries,
    qv: &QValue,
    order: usize,
) -> Result<FormalSeries> {
    if op.is_zero() {
        return Err(Error::ZeroOperator);
    }
    let v = op
        .iter()
        .map(|(_, poly)| poly.valuation().expect("operator terms are nonzero"))
        .min()
        .expect("nonzero operator");

    for d in 0..v.min(rhs.truncation_order()) {
        if !rhs.coeff(d).is_zero() {
            return Err(Error::NoPowerSeriesSolution { degree: d });
        }
    }

    let mut coeffs: Vec<QExpScalar> = Vec::with_capacity(order);
    for m in 0..order {
        let d = m + v;
        let m_rat = QRat::from_integer(m as i64);

        // Multiplier of h_m at output degree d.
        let mut multiplier = QExpScalar::zero();
        for (shift, poly) in op.iter() {
            let b = poly.coeff(v);
            if !b.is_zero() {
                multiplier = multiplier.add(&b.shift_exponent(qrat_mul(shift, m_rat)?)?)?;
            }
        }
        if multiplier.is_zero() {
            return Err(Error::Resonance { degree: m });
        }

        // Contributions of the already-known coefficients at degree d.
        let mut num = rhs.coeff(d);
        for (shift, poly) in op.iter() {
            let top = poly.degree().expect("nonzero").min(d);
            for j in (v + 1)..=top {
                let b = poly.coeff(j);
                if b.is_zero() {
                    continue;
                }
                let k = d - j;
                if k >= m {
                    continue; // the j = v column is the multiplier
                }
                let k_rat = QRat::from_integer(k as i64);
                let w = b.shift_exponent(qrat_mul(shift, k_rat)?)?;
                num = num.sub(&w.mul(&coeffs[k])?)?;
            }
        }

        let h_m = match multiplier.invert_monomial() {
            Some(inv) => num.mul(&inv)?,
            None => {
                let bound = multiplier.bind(qv);
                if bound.norm() < RESONANCE_REL * multiplier.bound_term_scale(qv) {
                    return Err(Error::Resonance { degree: m });
                }
                num.mul(&QExpScalar::from_complex(Complex64::new(1.0, 0.0) / bound))?
            }
        };
        coeffs.push(h_m);
    }
    Ok(FormalSeries::new(coeffs))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{euler_op, two_level_op};
    use super::super::{parse_operator, QDiffOperator, ZPoly};
    use super::*;
    use crate::scalars::qrat;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn qv2() -> QValue {
        QValue::new(Complex64::new(2.0, 0.0)).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euler_coefficients_are_exact() {
        // z sigma(h) + h = z  =>  h_m = (-1)^(m-1) q^(m(m-1)/2), h_0 = 0.
        let rhs = FormalSeries::new(vec![QExpScalar::zero(), QExpScalar::one()]);
        let h = solve_formal(&euler_op(), &rhs, &qv2(), 12).unwrap();
        assert_eq!(h.coeff(0), QExpScalar::zero());
        for m in 1..12usize {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            let e = (m * (m - 1) / 2) as i64;
            assert_eq!(
                h.coeff(m),
                QExpScalar::monomial(c(sign, 0.0), QRat::from_integer(e)),
                "degree {m}"
            );
        }
    }

    #[test]
    fn squared_theta_like_sum_is_recovered_exactly() {
        // The two-level equation is solved by the square of the model
        // series sum q^(l(l-1)/2) z^l; its coefficients are the exact
        // convolution sums.
        let rhs = FormalSeries::new(vec![QExpScalar::one(), QExpScalar::one()]);
        let h = solve_formal(&two_level_op(), &rhs, &qv2(), 12).unwrap();
        for l in 0..12usize {
            let mut pairs = Vec::new();
            for i in 0..=l as i64 {
                let j = l as i64 - i;
                let e = (i * (i - 1) + j * (j - 1)) / 2;
                pairs.push((QRat::from_integer(e), c(1.0, 0.0)));
            }
            let oracle = QExpScalar::from_terms(pairs).unwrap();
            assert_eq!(h.coeff(l), oracle, "degree {l}");
        }
    }

    #[test]
    fn exact_resonance_is_detected() {
        // sigma - q: degree-1 multiplier q^1 - q vanishes identically.
        let op = parse_operator("s - q").unwrap();
        let rhs = FormalSeries::new(vec![QExpScalar::one(), QExpScalar::one(), QExpScalar::one()]);
        assert_eq!(
            solve_formal(&op, &rhs, &qv2(), 3),
            Err(Error::Resonance { degree: 1 })
        );
    }

    #[test]
    fn low_degree_obstruction_is_reported() {
        // Every coefficient of z sigma + z has valuation 1, so a constant
        // term on the right-hand side is unreachable.
        let op = parse_operator("z*s + z").unwrap();
        let rhs = FormalSeries::new(vec![QExpScalar::one(), QExpScalar::one()]);
        assert_eq!(
            solve_formal(&op, &rhs, &qv2(), 4),
            Err(Error::NoPowerSeriesSolution { degree: 0 })
        );
    }

    #[test]
    fn numeric_division_path_leaves_tiny_residual() {
        // sigma + 1 has the two-term multiplier q^m + 1: the division is
        // numeric, so check the residual after binding.
        let qv = qv2();
        let op = parse_operator("s + 1").unwrap();
        let rhs = FormalSeries::new(vec![
            QExpScalar::one(),
            QExpScalar::from_complex(c(0.5, -1.0)),
            QExpScalar::monomial(c(1.0, 0.0), qrat(1, 2).unwrap()),
        ]);
        let h = solve_formal(&op, &rhs, &qv, 3).unwrap();
        let lhs = op.apply_series(&h).unwrap();
        for d in 0..3usize {
            let r = lhs.coeff(d).sub(&rhs.coeff(d)).unwrap().bind(&qv);
            assert!(r.norm() < 1e-12, "degree {d}: residual {r}");
        }
    }

    /// Operator with a unique minimal-valuation pivot term whose
    /// coefficient is a monomial, so every division in the solver is exact.
    fn arb_pivoted_op() -> impl Strategy<Value = QDiffOperator> {
        (
            -4i64..=4,
            -2i64..=2,
            proptest::collection::vec((-6i64..=6, 1usize..4, -3i64..=3, -2i64..=2), 0..5),
        )
            .prop_map(|(pivot_shift, pivot_exp, others)| {
                let mut terms = vec![(
                    QRat::new(pivot_shift, 3),
                    ZPoly::monomial(
                        QExpScalar::monomial(Complex64::new(1.0, 1.0), QRat::from_integer(pivot_exp)),
                        0,
                    ),
                )];
                terms.extend(others.into_iter().map(|(sn, j, cre, qe)| {
                    (
                        QRat::new(sn, 3),
                        ZPoly::monomial(
                            QExpScalar::monomial(
                                Complex64::new(cre as f64, -1.0),
                                QRat::from_integer(qe),
                            ),
                            j,
                        ),
                    )
                }));
                QDiffOperator::from_terms(terms).unwrap()
            })
    }

    proptest! {
        /// With an exact division path, the solved series reproduces the
        /// right-hand side exactly on the shared window.
        #[test]
        fn residual_vanishes_exactly(
            op in arb_pivoted_op(),
            rhs_coeffs in proptest::collection::vec((-3i64..=3, -2i64..=2), 1..8)
        ) {
            let rhs = FormalSeries::new(
                rhs_coeffs
                    .iter()
                    .map(|&(re, e)| QExpScalar::monomial(Complex64::new(re as f64, 0.25), QRat::from_integer(e)))
                    .collect(),
            );
            // Depth 8 keeps every product and fold inside f64's 53 bits for
            // these dyadic Gaussian coefficients, so equality is exact.
            let order = 8usize;
            let h = solve_formal(&op, &rhs, &qv2(), order).unwrap();
            let lhs = op.apply_series(&h).unwrap();
            for d in 0..lhs.truncation_order() {
                prop_assert_eq!(lhs.coeff(d), rhs.coeff(d), "degree {}", d);
            }
        }
    }
}
