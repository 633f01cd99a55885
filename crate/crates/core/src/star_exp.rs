//! Star powers, truncated star exponentials and the conjugation route to
//! the Moyal-Lie flow.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::coeffs::GaussianRational;
use crate::lie::{BracketKind, FlowError, Generator, Order};
use crate::poly::{factorial, PhasePoly};
use crate::series::ParamSeries;
use crate::star::star;

/// `A ⋆ A ⋆ … ⋆ A` (`k` factors, `1` for `k = 0`).
pub fn star_power(a: &PhasePoly, k: u32) -> PhasePoly {
    let mut acc = PhasePoly::one();
    for _ in 0..k {
        acc = star(&acc, a);
    }
    acc
}

/// Coefficients `A^{⋆k} / k!`, `k = 0..=order`.
pub fn star_exponential_terms(a: &PhasePoly, order: usize) -> ParamSeries {
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut power = PhasePoly::one();
    for k in 0..=order {
        if k > 0 {
            power = star(&power, a);
        }
        let inv = BigRational::new(BigInt::one(), factorial(k as u32));
        coeffs.push(power.scale_rational(&inv));
    }
    ParamSeries::new(coeffs)
}

/// `Σ_{k≤order} c^k/k! A^{⋆k}`.
pub fn star_exponential_series(a: &PhasePoly, c: &GaussianRational, order: usize) -> PhasePoly {
    if c.is_zero() {
        return PhasePoly::one();
    }
    star_exponential_terms(a, order).eval(c)
}

/// Series in `c` of `e_⋆^{−cA} ⋆ f ⋆ e_⋆^{cA}`, truncated at `order`.
pub fn star_conjugate_series(a: &PhasePoly, f: &PhasePoly, order: usize) -> ParamSeries {
    let right = star_exponential_terms(a, order);
    let left = right.rescale(&-GaussianRational::one());
    let left_f = left.product_with(&ParamSeries::constant(f.clone()), Some(order), star);
    left_f.product_with(&right, Some(order), star)
}

pub fn star_conjugate(a: &PhasePoly, c: &GaussianRational, f: &PhasePoly, order: usize) -> PhasePoly {
    if c.is_zero() {
        return f.clone();
    }
    star_conjugate_series(a, f, order).eval(c)
}

/// Series of `star_conjugate(A, c, f) − flow(MoyalRaw, A, −c, f)`.
///
/// The conjugation expands as `exp(−c·ad_A) f`, so the matching Moyal-Lie
/// flow parameter is `−c`.
pub fn mlt_equivalence_defect_series(a: &PhasePoly, f: &PhasePoly, order: usize) -> Result<ParamSeries, FlowError> {
    let conj = star_conjugate_series(a, f, order);
    let flow = Generator::new(BracketKind::MoyalRaw, a.clone())
        .series(f, Order::Truncated(order))?
        .rescale(&-GaussianRational::one());
    Ok(conj.sub(&flow).trimmed())
}

pub fn mlt_equivalence_defect(
    a: &PhasePoly,
    c: &GaussianRational,
    f: &PhasePoly,
    order: usize,
) -> Result<PhasePoly, FlowError> {
    if c.is_zero() {
        return Ok(PhasePoly::zero());
    }
    Ok(mlt_equivalence_defect_series(a, f, order)?.eval(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;
    use crate::star::moyal;

    fn poly(s: &str) -> PhasePoly {
        parse_poly(s).unwrap()
    }

    #[test]
    fn star_power_examples() {
        assert_eq!(star_power(&poly("q"), 2), poly("q^2"));
        let h0 = poly("(1/2)*(p^2 + q^2)");
        assert_eq!(star_power(&h0, 2), star(&h0, &h0));
        assert_eq!(star_power(&h0, 2), &h0 * &h0 - poly("(1/4)*hbar^2"));
        assert_eq!(star_power(&h0, 1), h0);
        assert_eq!(star_power(&h0, 0), PhasePoly::one());
    }

    #[test]
    fn exponential_examples() {
        let a = poly("q^2*p - p");
        assert_eq!(star_exponential_series(&a, &GaussianRational::zero(), 5), PhasePoly::one());
        assert_eq!(star_exponential_series(&poly("q"), &GaussianRational::i(), 1), poly("1 + i*q"));
        let h0 = poly("(1/2)*(p^2 + q^2)");
        let terms = star_exponential_terms(&h0, 2);
        assert_eq!(terms.coeff(2), (&h0 * &h0 - poly("(1/4)*hbar^2")).scale(&GaussianRational::ratio(1, 2)));
    }

    #[test]
    fn conjugation_first_order_is_minus_moyal() {
        let a = poly("(1/3)*q^3 + p*q");
        let f = poly("p^2*q");
        let s = star_conjugate_series(&a, &f, 1);
        assert_eq!(s.coeff(0), f);
        assert_eq!(s.coeff(1), -moyal(&a, &f));
        assert_eq!(star_conjugate(&a, &GaussianRational::zero(), &f, 4), f);
    }

    #[test]
    fn conjugation_matches_coordinate_flow_for_quadratic() {
        let a = poly("(1/2)*(p^2 + q^2)");
        let c = GaussianRational::ratio(1, 3);
        let conj = star_conjugate(&a, &c, &poly("q"), 4);
        let gen = Generator::new(BracketKind::MoyalRaw, a);
        let flowed = gen.flow(&-c, &poly("q"), Order::Truncated(4)).unwrap();
        assert_eq!(conj, flowed);
    }

    #[test]
    fn mlt_examples() {
        let c = GaussianRational::ratio(2, 5);
        assert!(mlt_equivalence_defect(&poly("(1/3)*q^3"), &c, &poly("p"), 6).unwrap().is_zero());
        assert!(mlt_equivalence_defect(&poly("(1/2)*(p^2+q^2)"), &c, &poly("q"), 6).unwrap().is_zero());
        assert!(mlt_equivalence_defect(&poly("q^5"), &GaussianRational::zero(), &poly("p^4"), 3)
            .unwrap()
            .is_zero());
    }
}
