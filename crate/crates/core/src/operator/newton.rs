//! Newton polygons of q-difference operators.
//!
//! The polygon of `sum_i b_i(z) sigma^i` is the lower convex hull of the
//! points `(i, val b_i)`. Its slopes drive the whole summation pipeline:
//! each positive slope is one level of divergence to be Borel-transformed
//! away. Everything here is exact rational arithmetic — hull membership is
//! decided by integer cross products, never floats.

use super::QDiffOperator;
use crate::error::{Error, Result};
use crate::scalars::QRat;
use num_traits::{CheckedDiv, CheckedMul, CheckedSub, Zero};

/// One slope of the polygon with its horizontal multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slope {
    /// Rise over run of the edge.
    pub value: QRat,
    /// Horizontal extent of the edge (shift-axis length).
    pub multiplicity: QRat,
}

/// Lower convex hull of an operator's `(shift, valuation)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonPolygon {
    /// Hull vertices, ascending in shift. Every vertex is extremal:
    /// removing one changes the hull.
    pub vertices: Vec<(QRat, i64)>,
    /// Edge slopes, ascending. A single-vertex polygon reports the
    /// conventional `{value: 0, multiplicity: 0}`.
    pub slopes: Vec<Slope>,
}

impl NewtonPolygon {
    /// The slopes with positive value, ascending.
    pub fn positive_slopes(&self) -> Vec<Slope> {
        self.slopes
            .iter()
            .filter(|s| s.value > QRat::zero() && s.multiplicity > QRat::zero())
            .copied()
            .collect()
    }
}

/// Computes the Newton polygon. Errors on the zero operator.
pub fn newton_polygon(op: &QDiffOperator) -> Result<NewtonPolygon> {
    if op.is_zero() {
        return Err(Error::ZeroOperator);
    }
    let n = op.denominator();
    // Scale shifts by the common denominator so the hull runs on integers.
    let mut pts: Vec<(i128, i128, QRat)> = Vec::new();
    for (shift, poly) in op.iter() {
        let x = *shift.numer() as i128 * (n / shift.denom()) as i128;
        let y = poly.valuation().expect("operator terms are nonzero") as i128;
        pts.push((x, y, shift));
    }
    // BTreeMap iteration gives ascending x already.
    let mut hull: Vec<(i128, i128, QRat)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Keep b only when a -> b -> p turns strictly left.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let vertices: Vec<(QRat, i64)> = hull
        .iter()
        .map(|&(_, y, shift)| (shift, y as i64))
        .collect();
    let slopes = if vertices.len() == 1 {
        vec![Slope { value: QRat::zero(), multiplicity: QRat::zero() }]
    } else {
        hull.windows(2)
            .map(|w| {
                let dx_scaled = (w[1].0 - w[0].0) as i64;
                let dy = (w[1].1 - w[0].1) as i64;
                Ok(Slope {
                    value: QRat::new(dy.checked_mul(n).ok_or(Error::ExponentOverflow)?, dx_scaled),
                    multiplicity: QRat::new(dx_scaled, n),
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(NewtonPolygon { vertices, slopes })
}

/// Verifies that Borel conjugation of order `mu` moves the positive slopes
/// as predicted — each positive slope `s < mu` of `op` must reappear in the
/// conjugate at value `1/(1/s - 1/mu)` with multiplicity scaled by
/// `1 - s/mu`, and the `s = mu` edge must collapse. Returns the conjugate's
/// positive slopes.
///
/// Requires `mu >=` every positive slope of `op`.
pub fn slope_shift_check(op: &QDiffOperator, mu: QRat) -> Result<Vec<Slope>> {
    if mu <= QRat::zero() {
        return Err(Error::Unsupported {
            what: format!("Borel conjugation order {mu} (must be positive)"),
        });
    }
    let polygon = newton_polygon(op)?;
    let pos = polygon.positive_slopes();
    if pos.iter().any(|s| s.value > mu) {
        return Err(Error::Unsupported {
            what: format!(
                "Borel order {mu} below the operator's maximal slope; conjugation would fold the polygon"
            ),
        });
    }
    let mut expected: Vec<Slope> = Vec::new();
    for s in &pos {
        if s.value == mu {
            continue; // top edge turns vertical and drops out
        }
        let inv = s
            .value
            .recip()
            .checked_sub(&mu.recip())
            .ok_or(Error::ExponentOverflow)?;
        let scale = QRat::from_integer(1)
            .checked_sub(&s.value.checked_div(&mu).ok_or(Error::ExponentOverflow)?)
            .ok_or(Error::ExponentOverflow)?;
        expected.push(Slope {
            value: inv.recip(),
            multiplicity: s.multiplicity.checked_mul(&scale).ok_or(Error::ExponentOverflow)?,
        });
    }
    let conj = op.borel_conjugate(mu)?;
    let found = newton_polygon(&conj)?.positive_slopes();
    if found != expected {
        return Err(Error::SlopeMismatch {
            detail: format!(
                "conjugation of order {mu}: expected positive slopes {expected:?}, found {found:?}"
            ),
        });
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{arb_operator, euler_op, three_term_op, two_level_op};
    use super::super::parse_operator;
    use super::*;
    use crate::scalars::qrat;
    use proptest::prelude::*;

    #[test]
    fn three_term_polygon() {
        let np = newton_polygon(&three_term_op()).unwrap();
        assert_eq!(
            np.vertices,
            vec![
                (QRat::from_integer(1), 0),
                (QRat::from_integer(2), 1),
                (QRat::from_integer(4), 4),
            ]
        );
        assert_eq!(
            np.slopes,
            vec![
                Slope { value: QRat::from_integer(1), multiplicity: QRat::from_integer(1) },
                Slope { value: QRat::new(3, 2), multiplicity: QRat::from_integer(2) },
            ]
        );
    }

    #[test]
    fn two_level_polygon() {
        let np = newton_polygon(&two_level_op()).unwrap();
        assert_eq!(
            np.vertices,
            vec![
                (QRat::from_integer(0), 0),
                (QRat::from_integer(1), 1),
                (QRat::from_integer(2), 3),
            ]
        );
        let values: Vec<QRat> = np.slopes.iter().map(|s| s.value).collect();
        assert_eq!(values, vec![QRat::from_integer(1), QRat::from_integer(2)]);
    }

    #[test]
    fn degenerate_polygons() {
        // Single term: conventional zero slope with zero multiplicity.
        let np = newton_polygon(&parse_operator("z^3*s^2").unwrap()).unwrap();
        assert_eq!(np.vertices, vec![(QRat::from_integer(2), 3)]);
        assert_eq!(np.slopes, vec![Slope { value: QRat::zero(), multiplicity: QRat::zero() }]);
        assert!(np.positive_slopes().is_empty());

        // Flat polygon: one zero slope, no positive ones.
        let flat = newton_polygon(&parse_operator("s + 1").unwrap()).unwrap();
        assert_eq!(flat.slopes.len(), 1);
        assert!(flat.positive_slopes().is_empty());

        // Collinear interior points are not vertices.
        let straight = newton_polygon(&parse_operator("1 + z*s + z^2*s^2").unwrap()).unwrap();
        assert_eq!(
            straight.vertices,
            vec![(QRat::from_integer(0), 0), (QRat::from_integer(2), 2)]
        );
        assert_eq!(
            straight.slopes,
            vec![Slope { value: QRat::from_integer(1), multiplicity: QRat::from_integer(2) }]
        );
    }

    #[test]
    fn fractional_shift_polygon() {
        let op = parse_operator("z*s^(1/2) + 1").unwrap();
        let np = newton_polygon(&op).unwrap();
        assert_eq!(
            np.slopes,
            vec![Slope { value: QRat::from_integer(2), multiplicity: QRat::new(1, 2) }]
        );
    }

    #[test]
    fn slope_shift_through_the_golden_chain() {
        // Order 3/2 sends slope 1 to 3 and collapses the 3/2 edge.
        let first = slope_shift_check(&three_term_op(), qrat(3, 2).unwrap()).unwrap();
        assert_eq!(
            first,
            vec![Slope { value: QRat::from_integer(3), multiplicity: QRat::new(1, 3) }]
        );
        // Order 3 on the conjugate collapses everything.
        let q1 = three_term_op().borel_conjugate(qrat(3, 2).unwrap()).unwrap();
        assert_eq!(slope_shift_check(&q1, qrat(3, 1).unwrap()).unwrap(), vec![]);
        // q-Euler: order 1 flattens the single slope.
        assert_eq!(slope_shift_check(&euler_op(), qrat(1, 1).unwrap()).unwrap(), vec![]);
        // Too small an order is rejected up front.
        assert!(matches!(
            slope_shift_check(&three_term_op(), qrat(1, 1).unwrap()),
            Err(Error::Unsupported { .. })
        ));
    }

    proptest! {
        /// Conjugation by an order at least the maximal slope always moves
        /// the positive slopes as predicted, for random operators.
        #[test]
        fn slope_shift_holds_generically(op in arb_operator(), bump in 0i64..3) {
            let np = newton_polygon(&op).unwrap();
            let max_pos = np
                .positive_slopes()
                .last()
                .map(|s| s.value)
                .unwrap_or_else(QRat::zero);
            // Round up to a denominator-3 rational at least the max slope.
            let mut mu = QRat::new(max_pos.numer() * 3 / max_pos.denom() + 1 + bump, 3);
            if mu <= QRat::zero() {
                mu = QRat::new(1 + bump, 3);
            }
            prop_assert!(slope_shift_check(&op, mu).is_ok());
        }
    }
}
