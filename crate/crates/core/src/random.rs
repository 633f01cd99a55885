//! Seeded random polynomials for property checks.
//!
//! Draws are sequential and come from a single ChaCha8 stream, so a seed
//! fixes every generated case regardless of how the cases are evaluated.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeffs::GaussianRational;
use crate::poly::{Monomial, PhasePoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Bound on the `(q, p)` degree of every monomial.
    pub max_degree: u32,
    pub max_hbar: u32,
    pub max_terms: usize,
    /// Numerators are drawn from `-max_numer..=max_numer`.
    pub max_numer: i64,
    pub max_denom: i64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_degree: 5,
            max_hbar: 2,
            max_terms: 6,
            max_numer: 5,
            max_denom: 4,
        }
    }
}

pub struct PolyGen {
    rng: ChaCha8Rng,
    limits: Limits,
}

impl PolyGen {
    pub fn new(seed: u64) -> Self {
        Self::with_limits(seed, Limits::default())
    }

    pub fn with_limits(seed: u64, limits: Limits) -> Self {
        PolyGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            limits,
        }
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn rational(&mut self) -> BigRational {
        let n = self.rng.random_range(-self.limits.max_numer..=self.limits.max_numer);
        let d = self.rng.random_range(1..=self.limits.max_denom);
        BigRational::new(n.into(), d.into())
    }

    pub fn nonzero_rational(&mut self) -> BigRational {
        loop {
            let r = self.rational();
            if !num_traits::Zero::is_zero(&r) {
                return r;
            }
        }
    }

    /// Real half the time, otherwise a full Gaussian rational.
    pub fn coefficient(&mut self) -> GaussianRational {
        let re = self.rational();
        if self.rng.random_bool(0.5) {
            GaussianRational::from_real(re)
        } else {
            GaussianRational::new(re, self.rational())
        }
    }

    pub fn monomial(&mut self, max_degree: u32, max_hbar: u32) -> Monomial {
        let d = self.rng.random_range(0..=max_degree);
        let q = self.rng.random_range(0..=d);
        let h = self.rng.random_range(0..=max_hbar);
        Monomial::new(q, d - q, h)
    }

    /// Between one and `max_terms` terms (fewer if coefficients collide or
    /// vanish).
    pub fn poly(&mut self) -> PhasePoly {
        let Limits {
            max_degree,
            max_hbar,
            max_terms,
            ..
        } = self.limits;
        self.poly_with(max_degree, max_hbar, max_terms, false)
    }

    /// Real coefficients and no `ħ`.
    pub fn classical_poly(&mut self) -> PhasePoly {
        let Limits {
            max_degree, max_terms, ..
        } = self.limits;
        self.poly_with(max_degree, 0, max_terms, true)
    }

    pub fn poly_with(&mut self, max_degree: u32, max_hbar: u32, max_terms: usize, real: bool) -> PhasePoly {
        let n = self.rng.random_range(1..=max_terms.max(1));
        let mut terms = Vec::with_capacity(n);
        for _ in 0..n {
            let m = self.monomial(max_degree, max_hbar);
            let c = if real {
                GaussianRational::from_real(self.rational())
            } else {
                self.coefficient()
            };
            terms.push((m, c));
        }
        PhasePoly::from_terms(terms)
    }

    /// Real quadratic form `a q² + b qp + c p²`, not identically zero.
    pub fn quadratic(&mut self) -> PhasePoly {
        loop {
            let terms = [(2, 0), (1, 1), (0, 2)]
                .map(|(q, p)| (Monomial::new(q, p, 0), GaussianRational::from_real(self.rational())));
            let f = PhasePoly::from_terms(terms);
            if !f.is_zero() {
                return f;
            }
        }
    }

    /// Real potential in `q` alone with degree in `2..=max_degree`.
    pub fn potential(&mut self, max_degree: u32) -> PhasePoly {
        let top = self.rng.random_range(2..=max_degree.max(2));
        let mut terms = vec![(Monomial::new(top, 0, 0), GaussianRational::from_real(self.nonzero_rational()))];
        for k in 0..top {
            if self.rng.random_bool(0.5) {
                terms.push((Monomial::new(k, 0, 0), GaussianRational::from_real(self.rational())));
            }
        }
        PhasePoly::from_terms(terms)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Var;

    #[test]
    fn same_seed_same_stream() {
        let mut a = PolyGen::new(42);
        let mut b = PolyGen::new(42);
        for _ in 0..20 {
            assert_eq!(a.poly(), b.poly());
        }
        let mut c = PolyGen::new(43);
        let differs = (0..20).any(|_| a.poly() != c.poly());
        assert!(differs);
    }

    #[test]
    fn respects_limits() {
        let mut g = PolyGen::new(7);
        for _ in 0..200 {
            let f = g.poly();
            assert!(f.degree() <= 5);
            assert!(f.hbar_degree() <= 2);
            assert!(f.len() <= 6);
            let v = g.potential(6);
            assert_eq!(v.degree_in(Var::P), 0);
            assert!((2..=6).contains(&v.degree()));
            let c = g.classical_poly();
            assert!(c.has_real_coefficients());
            assert_eq!(c.hbar_degree(), 0);
            assert_eq!(g.quadratic().degree(), 2);
        }
    }
}
