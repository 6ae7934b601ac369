//! Multilevel summation plans.
//!
//! A plan turns the Newton polygon of an operator into the data the
//! Borel–Laplace pipeline consumes: the ladder of Borel orders (one per
//! positive slope, combined so consecutive transforms telescope), the
//! evaluation lattice, the conjugated operator for every stage, and the
//! forbidden directions — the q-spiral classes through roots of the stage
//! operators' leading coefficients, where Laplace sums hit theta zeros.

use super::newton::{newton_polygon, slope_shift_check};
use super::QDiffOperator;
use crate::error::{Error, Result};
use crate::numeric::nonzero_roots;
use crate::scalars::{QRat, QValue};
use num_complex::Complex64;
use num_traits::Zero;

/// Everything needed to run a multilevel q-Borel–Laplace summation.
#[derive(Debug, Clone)]
pub struct SummationPlan {
    /// Positive slopes of the operator, ascending.
    pub positive_slopes: Vec<QRat>,
    /// Borel orders `kappa_1, ..., kappa_r`: reciprocal gaps between
    /// consecutive reciprocal slopes, so the transforms compose to the
    /// smallest level. The last entry equals the largest slope.
    pub levels: Vec<QRat>,
    /// Evaluation lattice order: the smallest `K` with `K / kappa_i`
    /// integral for every level. Lattice points are `q^(j/K) lambda`.
    pub lattice: i64,
    /// Lattice order of the final Laplace transform: the reduced numerator
    /// of the last level. Divides `lattice`.
    pub final_lattice: i64,
    /// Conjugated operators `[P, O_1, ..., O_r]`; stage `j` annihilates the
    /// `j`-fold Borel transform of a formal solution of `P`.
    pub stage_operators: Vec<QDiffOperator>,
    /// One representative per forbidden spiral class, pinned to modulus in
    /// `[|q|^(-1/2K), |q|^(1/2K))` and sorted by argument.
    pub forbidden: Vec<Complex64>,
    /// Relative padding around forbidden spirals.
    pub direction_tol: f64,
    qv: QValue,
}

/// True when `a` and `b` lie on the same `q^(Z/K)` spiral, up to relative
/// tolerance: the modulus pins the unique candidate lattice offset, then the
/// ratio must be close to 1.
pub(crate) fn same_spiral_class(
    a: Complex64,
    b: Complex64,
    qv: &QValue,
    lattice: i64,
    tol: f64,
) -> bool {
    if a.norm() == 0.0 || b.norm() == 0.0 || !a.is_finite() || !b.is_finite() {
        return false;
    }
    let ln_q = qv.log_q().re;
    let m = (lattice as f64 * (a.norm() / b.norm()).ln() / ln_q).round() as i64;
    let candidate = b * qv.pow(QRat::new(m, lattice));
    (a / candidate - Complex64::new(1.0, 0.0)).norm() <= tol
}

impl SummationPlan {
    /// Number of Borel–Laplace stages.
    pub fn stage_count(&self) -> usize {
        self.levels.len()
    }

    /// The base `q`.
    pub fn q_value(&self) -> &QValue {
        &self.qv
    }

    /// Whether a summation direction falls in a forbidden spiral class,
    /// within the plan's padding tolerance.
    pub fn is_forbidden(&self, lambda: Complex64) -> bool {
        self.forbidden
            .iter()
            .any(|&rep| same_spiral_class(lambda, rep, &self.qv, self.lattice, self.direction_tol))
    }

    /// Errors with the offending class index when the direction is
    /// forbidden or degenerate.
    pub fn check_direction(&self, lambda: Complex64) -> Result<()> {
        if lambda.norm() == 0.0 || !lambda.is_finite() {
            return Err(Error::BadDirection { index: -1 });
        }
        for (idx, &rep) in self.forbidden.iter().enumerate() {
            if same_spiral_class(lambda, rep, &self.qv, self.lattice, self.direction_tol) {
                return Err(Error::BadDirection { index: idx as i64 });
            }
        }
        Ok(())
    }
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Builds the summation plan for an operator with at least one positive
/// slope. Each conjugation is cross-checked against the predicted slope
/// transform before the next stage runs.
pub fn summation_plan(op: &QDiffOperator, qv: &QValue) -> Result<SummationPlan> {
    let polygon = newton_polygon(op)?;
    let positive: Vec<QRat> = polygon.positive_slopes().iter().map(|s| s.value).collect();
    if positive.is_empty() {
        return Err(Error::NoPositiveSlope);
    }

    // Reciprocal gaps: 1/kappa_i = 1/mu_i - 1/mu_{i+1}, closing with mu_r.
    let mut levels = Vec::with_capacity(positive.len());
    for pair in positive.windows(2) {
        let gap = pair[0].recip() - pair[1].recip();
        levels.push(gap.recip());
    }
    levels.push(*positive.last().expect("nonempty"));

    let lattice = levels
        .iter()
        .fold(1i64, |acc, k| {
            let p = *k.numer();
            (acc / gcd_i64(acc, p)) * p
        });
    let final_lattice = *levels.last().expect("nonempty").numer();

    // Conjugate from the top level down; validate each slope transform.
    let mut stage_operators = vec![op.clone()];
    for level in levels.iter().rev() {
        let last = stage_operators.last().expect("seeded");
        slope_shift_check(last, *level)?;
        stage_operators.push(last.borel_conjugate(*level)?);
    }

    // Forbidden classes: roots of leading coefficients of O_1..O_r, reduced
    // to spiral representatives.
    let ln_q = qv.log_q().re;
    let mut forbidden: Vec<Complex64> = Vec::new();
    for stage in &stage_operators[1..] {
        let top = stage.max_shift().ok_or(Error::ZeroOperator)?;
        let leading = stage.term(top).expect("max shift present");
        for root in nonzero_roots(&leading.bind_coeffs(qv))? {
            let m = (lattice as f64 * root.norm().ln() / ln_q).round() as i64;
            let rep = root * qv.pow(QRat::new(-m, lattice));
            let dup = forbidden
                .iter()
                .any(|&r| same_spiral_class(rep, r, qv, lattice, 1e-7));
            if !dup {
                forbidden.push(rep);
            }
        }
    }
    forbidden.sort_by(|a, b| {
        a.arg()
            .total_cmp(&b.arg())
            .then_with(|| a.norm().total_cmp(&b.norm()))
    });

    Ok(SummationPlan {
        positive_slopes: positive,
        levels,
        lattice,
        final_lattice,
        stage_operators,
        forbidden,
        direction_tol: 1e-6,
        qv: qv.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{euler_op, three_term_op, two_level_op};
    use super::*;
    use crate::scalars::{qrat, QExpScalar};

    fn qv2() -> QValue {
        QValue::new(Complex64::new(2.0, 0.0)).unwrap()
    }

    #[test]
    fn three_term_plan() {
        let plan = summation_plan(&three_term_op(), &qv2()).unwrap();
        assert_eq!(plan.positive_slopes, vec![QRat::from_integer(1), QRat::new(3, 2)]);
        assert_eq!(plan.levels, vec![QRat::from_integer(3), QRat::new(3, 2)]);
        assert_eq!(plan.lattice, 3);
        assert_eq!(plan.final_lattice, 3);
        assert_eq!(plan.stage_operators.len(), 3);
        // Stage operators match the hand-conjugated chain exactly.
        let q1 = three_term_op().borel_conjugate(qrat(3, 2).unwrap()).unwrap();
        let q2 = q1.borel_conjugate(qrat(3, 1).unwrap()).unwrap();
        assert_eq!(plan.stage_operators[1], q1);
        assert_eq!(plan.stage_operators[2], q2);
        // Forbidden classes: the cube roots of -q^4 reduce to the unit-
        // modulus sixth roots, plus the duplicate class from stage two.
        assert_eq!(plan.forbidden.len(), 3);
        let mut args: Vec<f64> = plan.forbidden.iter().map(|c| c.arg()).collect();
        args.sort_by(f64::total_cmp);
        let pi = std::f64::consts::PI;
        assert!((args[0] + pi / 3.0).abs() < 1e-9);
        assert!((args[1] - pi / 3.0).abs() < 1e-9);
        assert!((args[2] - pi).abs() < 1e-9);
        for rep in &plan.forbidden {
            assert!((rep.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn euler_plan() {
        let plan = summation_plan(&euler_op(), &qv2()).unwrap();
        assert_eq!(plan.positive_slopes, vec![QRat::from_integer(1)]);
        assert_eq!(plan.levels, vec![QRat::from_integer(1)]);
        assert_eq!(plan.lattice, 1);
        assert_eq!(plan.final_lattice, 1);
        assert_eq!(plan.forbidden.len(), 1);
        assert!((plan.forbidden[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-9);
        // The whole -q^Z spiral is forbidden; everything else is fine.
        assert!(plan.is_forbidden(Complex64::new(-1.0, 0.0)));
        assert!(plan.is_forbidden(Complex64::new(-128.0, 0.0)));
        assert!(plan.is_forbidden(Complex64::new(-0.25, 0.0)));
        assert!(!plan.is_forbidden(Complex64::new(1.0, 0.0)));
        assert!(!plan.is_forbidden(Complex64::new(0.0, 1.0)));
        assert!(plan.check_direction(Complex64::new(1.0, 0.0)).is_ok());
        assert!(matches!(
            plan.check_direction(Complex64::new(-2.0, 0.0)),
            Err(Error::BadDirection { index: 0 })
        ));
        assert!(matches!(
            plan.check_direction(Complex64::new(0.0, 0.0)),
            Err(Error::BadDirection { .. })
        ));
    }

    #[test]
    fn two_level_plan() {
        let qv = qv2();
        let plan = summation_plan(&two_level_op(), &qv).unwrap();
        assert_eq!(plan.positive_slopes, vec![QRat::from_integer(1), QRat::from_integer(2)]);
        assert_eq!(plan.levels, vec![QRat::from_integer(2), QRat::from_integer(2)]);
        assert_eq!(plan.lattice, 2);
        assert_eq!(plan.final_lattice, 2);

        // First conjugate: (q^(1/2) z^3 - z) s^(1/2) + (1 - q^(-1/2) z^2).
        let o1 = &plan.stage_operators[1];
        let half = QRat::new(1, 2);
        let top = o1.term(half).unwrap();
        assert_eq!(top.coeff(3), QExpScalar::monomial(Complex64::new(1.0, 0.0), half));
        assert_eq!(top.coeff(1), QExpScalar::from_complex(Complex64::new(-1.0, 0.0)));
        let low = o1.term(QRat::from_integer(0)).unwrap();
        assert_eq!(low.coeff(0), QExpScalar::one());
        assert_eq!(
            low.coeff(2),
            QExpScalar::monomial(Complex64::new(-1.0, 0.0), -half)
        );

        // Second conjugate: q^(-1) z^2 (z - 1) s^(-1) + (1 - z).
        let o2 = &plan.stage_operators[2];
        let minus_one = QRat::from_integer(-1);
        let back = o2.term(minus_one).unwrap();
        assert_eq!(back.coeff(3), QExpScalar::monomial(Complex64::new(1.0, 0.0), minus_one));
        assert_eq!(back.coeff(2), QExpScalar::monomial(Complex64::new(-1.0, 0.0), minus_one));
        let level = o2.term(QRat::from_integer(0)).unwrap();
        assert_eq!(level.coeff(0), QExpScalar::one());
        assert_eq!(level.coeff(1), QExpScalar::from_complex(Complex64::new(-1.0, 0.0)));

        // Forbidden: the two square roots of q^(-1/2) and the class of 1.
        assert_eq!(plan.forbidden.len(), 3);
        assert!(plan.is_forbidden(Complex64::new(1.0, 0.0)));
        let r = 2.0f64.powf(-0.25);
        assert!(plan.is_forbidden(Complex64::new(r, 0.0)));
        assert!(plan.is_forbidden(Complex64::new(-r, 0.0)));
        assert!(plan.is_forbidden(Complex64::new(4.0 * r, 0.0)));
        assert!(!plan.is_forbidden(Complex64::new(0.0, 0.9)));
        assert!(!plan.is_forbidden(Complex64::new(-1.0, 0.0)));
    }

    #[test]
    fn no_positive_slope_is_rejected() {
        let op = super::super::parse_operator("s + 1").unwrap();
        assert!(matches!(
            summation_plan(&op, &qv2()),
            Err(Error::NoPositiveSlope)
        ));
    }

    #[test]
    fn spiral_class_matching_pins_modulus() {
        let qv = qv2();
        let a = Complex64::new(-1.0, 0.0);
        // -q^(5): same class.
        assert!(same_spiral_class(Complex64::new(-32.0, 0.0), a, &qv, 1, 1e-6));
        // Perturbed beyond tolerance: rejected.
        assert!(!same_spiral_class(Complex64::new(-32.1, 0.0), a, &qv, 1, 1e-6));
        // Within tolerance: accepted.
        assert!(same_spiral_class(Complex64::new(-32.0 * (1.0 + 1e-8), 0.0), a, &qv, 1, 1e-6));
        // Off-spiral modulus on a finer lattice is distinguished.
        assert!(same_spiral_class(
            Complex64::new(2.0f64.sqrt(), 0.0),
            Complex64::new(1.0, 0.0),
            &qv,
            2,
            1e-6
        ));
        assert!(!same_spiral_class(
            Complex64::new(2.0f64.sqrt(), 0.0),
            Complex64::new(1.0, 0.0),
            &qv,
            1,
            1e-6
        ));
    }
}
