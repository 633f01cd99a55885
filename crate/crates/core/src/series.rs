//! Power series in a flow parameter `c` with polynomial coefficients.
//!
//! Defects compare two expansions coefficient by coefficient, so a nonzero
//! result can never come from mismatched truncation.

use num_traits::{One, Zero};

use crate::coeffs::GaussianRational;
use crate::poly::PhasePoly;

/// `Σ_k c^k · coeffs[k]`, optionally known only up to a truncation order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ParamSeries {
    coeffs: Vec<PhasePoly>,
}

impl ParamSeries {
    pub fn new(coeffs: Vec<PhasePoly>) -> Self {
        ParamSeries { coeffs }
    }

    pub fn constant(f: PhasePoly) -> Self {
        ParamSeries { coeffs: vec![f] }
    }

    pub fn coeffs(&self) -> &[PhasePoly] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> PhasePoly {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// Index of the last stored coefficient (0 for an empty series).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(PhasePoly::is_zero)
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(mut self, order: usize) -> Self {
        self.coeffs.truncate(order + 1);
        self
    }

    pub fn eval(&self, c: &GaussianRational) -> PhasePoly {
        // Horner
        let mut acc = PhasePoly::zero();
        for k in self.coeffs.iter().rev() {
            acc = acc.scale(c);
            acc += k;
        }
        acc
    }

    /// Rescales the parameter: returns the series in `c` of `self(s·c)`.
    pub fn rescale(&self, s: &GaussianRational) -> Self {
        let mut w = GaussianRational::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for k in &self.coeffs {
            out.push(k.scale(&w));
            w = &w * s;
        }
        ParamSeries { coeffs: out }
    }

    pub fn sub(&self, other: &ParamSeries) -> ParamSeries {
        let n = self.coeffs.len().max(other.coeffs.len());
        ParamSeries {
            coeffs: (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect(),
        }
    }

    pub fn add(&self, other: &ParamSeries) -> ParamSeries {
        let n = self.coeffs.len().max(other.coeffs.len());
        ParamSeries {
            coeffs: (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    /// Cauchy product under an arbitrary bilinear `product`, keeping powers
    /// up to `order` (all of them when `None`).
    pub fn product_with<F>(&self, other: &ParamSeries, order: Option<usize>, product: F) -> ParamSeries
    where
        F: Fn(&PhasePoly, &PhasePoly) -> PhasePoly,
    {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return ParamSeries::default();
        }
        let full = self.coeffs.len() + other.coeffs.len() - 2;
        let top = order.map_or(full, |o| o.min(full));
        let mut out = vec![PhasePoly::zero(); top + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(top + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(top + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                out[i + j] += &product(a, b);
            }
        }
        ParamSeries { coeffs: out }
    }

    /// Ordinary product.
    pub fn mul(&self, other: &ParamSeries, order: Option<usize>) -> ParamSeries {
        self.product_with(other, order, |a, b| a * b)
    }

    /// `Σ_m coeff_m(f) Q^{m.q} P^{m.p} ħ^{m.hbar}` with `Q`, `P` series:
    /// the series of `f(Q(c), P(c))`.
    pub fn compose(f: &PhasePoly, q_image: &ParamSeries, p_image: &ParamSeries, order: Option<usize>) -> ParamSeries {
        use crate::poly::{Monomial, Var};
        let pows = |base: &ParamSeries, n: u32| {
            let mut v = vec![ParamSeries::constant(PhasePoly::one())];
            for k in 1..=n as usize {
                let next = v[k - 1].mul(base, order);
                v.push(next);
            }
            v
        };
        let qp = pows(q_image, f.degree_in(Var::Q));
        let pp = pows(p_image, f.degree_in(Var::P));
        let mut out = ParamSeries::default();
        for (m, c) in f.terms() {
            let t = qp[m.q as usize].mul(&pp[m.p as usize], order);
            let t = ParamSeries {
                coeffs: t
                    .coeffs
                    .iter()
                    .map(|k| k.shift(Monomial::new(0, 0, m.hbar)).scale(c))
                    .collect(),
            };
            out = out.add(&t);
        }
        out
    }

    /// Strips trailing zero coefficients.
    pub fn trimmed(mut self) -> Self {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        self
    }
}

impl Zero for ParamSeries {
    fn zero() -> Self {
        ParamSeries::default()
    }

    fn is_zero(&self) -> bool {
        ParamSeries::is_zero(self)
    }
}

impl std::ops::Add for ParamSeries {
    type Output = ParamSeries;
    fn add(self, rhs: ParamSeries) -> ParamSeries {
        ParamSeries::add(&self, &rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;

    #[test]
    fn eval_and_truncated_product() {
        let a = ParamSeries::new(vec![PhasePoly::one(), PhasePoly::q()]);
        let sq = a.mul(&a, None);
        assert_eq!(sq.coeffs().len(), 3);
        assert_eq!(sq.eval(&GaussianRational::from_integer(2)), parse_poly("1 + 4*q + 4*q^2").unwrap());
        let cut = a.mul(&a, Some(1));
        assert_eq!(cut.eval(&GaussianRational::one()), parse_poly("1 + 2*q").unwrap());
    }

    #[test]
    fn compose_matches_subst_when_untruncated() {
        let f = parse_poly("q^2*p - hbar*p + 3").unwrap();
        let qs = ParamSeries::new(vec![PhasePoly::q(), PhasePoly::p()]);
        let ps = ParamSeries::new(vec![PhasePoly::p(), parse_poly("q^2").unwrap()]);
        let c = GaussianRational::ratio(3, 5);
        let direct = f.subst(&qs.eval(&c), &ps.eval(&c));
        assert_eq!(ParamSeries::compose(&f, &qs, &ps, None).eval(&c), direct);
    }

    #[test]
    fn rescale_flips_odd_powers() {
        let a = ParamSeries::new(vec![PhasePoly::one(), PhasePoly::q(), PhasePoly::p()]);
        let b = a.rescale(&GaussianRational::from_integer(-1));
        assert_eq!(b.coeff(1), -PhasePoly::q());
        assert_eq!(b.coeff(2), PhasePoly::p());
    }
}
