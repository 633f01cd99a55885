//! Sparse polynomials in `q`, `p` and a formal `ħ` over [`GaussianRational`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::coeffs::GaussianRational;

/// Exponents of `q^q p^p ħ^hbar`.
///
/// The ordering is the canonical display order: descending total `(q, p)`
/// degree, then descending `q` power, then ascending `ħ` power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    pub q: u32,
    pub p: u32,
    pub hbar: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { q: 0, p: 0, hbar: 0 };

    pub const fn new(q: u32, p: u32, hbar: u32) -> Self {
        Monomial { q, p, hbar }
    }

    /// Total degree in the phase-space coordinates (ħ excluded).
    pub fn degree(&self) -> u32 {
        self.q + self.p
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            q: self.q + other.q,
            p: self.p + other.p,
            hbar: self.hbar + other.hbar,
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree()
            .cmp(&self.degree())
            .then(other.q.cmp(&self.q))
            .then(self.hbar.cmp(&other.hbar))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Phase-space coordinate selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    Q,
    P,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomial is not divisible by i*hbar: term {0} has no hbar factor")]
    NotDivisible(String),
}

/// A polynomial in `q`, `p`, `ħ`; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PhasePoly {
    terms: BTreeMap<Monomial, GaussianRational>,
}

pub(crate) fn falling_factorial(n: u32, k: u32) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i))
}

pub(crate) fn factorial(n: u32) -> BigInt {
    falling_factorial(n, n)
}

impl PhasePoly {
    pub fn zero() -> Self {
        PhasePoly::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::monomial(Monomial::ONE, c)
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(GaussianRational::from_integer(n))
    }

    pub fn monomial(m: Monomial, c: GaussianRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        PhasePoly { terms }
    }

    pub fn q() -> Self {
        Self::monomial(Monomial::new(1, 0, 0), GaussianRational::one())
    }

    pub fn p() -> Self {
        Self::monomial(Monomial::new(0, 1, 0), GaussianRational::one())
    }

    pub fn hbar() -> Self {
        Self::monomial(Monomial::new(0, 0, 1), GaussianRational::one())
    }

    /// `i·ħ`
    pub fn i_hbar() -> Self {
        Self::monomial(Monomial::new(0, 0, 1), GaussianRational::i())
    }

    pub fn var(v: Var) -> Self {
        match v {
            Var::Q => Self::q(),
            Var::P => Self::p(),
        }
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, GaussianRational)>,
    {
        let mut out = PhasePoly::zero();
        for (m, c) in terms {
            out.add_term(m, &c);
        }
        out
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: Monomial) -> GaussianRational {
        self.terms.get(&m).cloned().unwrap_or_default()
    }

    /// Total `(q, p)` degree; 0 for constants and for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms
            .keys()
            .map(|m| match v {
                Var::Q => m.q,
                Var::P => m.p,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn hbar_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.hbar).max().unwrap_or(0)
    }

    /// Lowest power of ħ among the terms, `None` for the zero polynomial.
    pub fn min_hbar_power(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.hbar).min()
    }

    /// The set of ħ powers that occur.
    pub fn hbar_powers(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.terms.keys().map(|m| m.hbar).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Constant value, if the polynomial has no `q`, `p` or `ħ` dependence.
    pub fn as_constant(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => self.terms.get(&Monomial::ONE).cloned(),
            _ => None,
        }
    }

    pub fn has_real_coefficients(&self) -> bool {
        self.terms.values().all(GaussianRational::is_real)
    }

    pub fn scale(&self, c: &GaussianRational) -> PhasePoly {
        if c.is_zero() {
            return PhasePoly::zero();
        }
        PhasePoly {
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    pub fn scale_rational(&self, r: &BigRational) -> PhasePoly {
        self.scale(&GaussianRational::from_real(r.clone()))
    }

    /// Multiplies by the monomial `m`.
    pub fn shift(&self, m: Monomial) -> PhasePoly {
        PhasePoly {
            terms: self.terms.iter().map(|(k, c)| (k.mul(&m), c.clone())).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> PhasePoly {
        let mut acc = PhasePoly::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Formal partial derivative; ħ is a constant.
    pub fn diff(&self, v: Var) -> PhasePoly {
        self.diff_n(v, 1)
    }

    /// `n`-th partial derivative with respect to `v`.
    pub fn diff_n(&self, v: Var, n: u32) -> PhasePoly {
        if n == 0 {
            return self.clone();
        }
        let mut out = PhasePoly::zero();
        for (m, c) in &self.terms {
            let e = match v {
                Var::Q => m.q,
                Var::P => m.p,
            };
            if e < n {
                continue;
            }
            let mut m2 = *m;
            match v {
                Var::Q => m2.q -= n,
                Var::P => m2.p -= n,
            }
            let f = BigRational::from_integer(falling_factorial(e, n));
            out.add_term(m2, &c.scale(&f));
        }
        out
    }

    /// `∂_q^a ∂_p^b f`
    pub fn partial(&self, a: u32, b: u32) -> PhasePoly {
        self.diff_n(Var::Q, a).diff_n(Var::P, b)
    }

    /// Substitutes `q → q_image`, `p → p_image` and expands; ħ is unchanged.
    pub fn subst(&self, q_image: &PhasePoly, p_image: &PhasePoly) -> PhasePoly {
        let q_pows = powers(q_image, self.degree_in(Var::Q));
        let p_pows = powers(p_image, self.degree_in(Var::P));
        let mut out = PhasePoly::zero();
        for (m, c) in &self.terms {
            let prod = &q_pows[m.q as usize] * &p_pows[m.p as usize];
            let prod = prod.shift(Monomial::new(0, 0, m.hbar)).scale(c);
            out += &prod;
        }
        out
    }

    /// Substitutes a polynomial for ħ (e.g. a constant for a numeric limit).
    pub fn subst_hbar(&self, h_image: &PhasePoly) -> PhasePoly {
        let h_pows = powers(h_image, self.hbar_degree());
        let mut out = PhasePoly::zero();
        for (m, c) in &self.terms {
            let base = Monomial::new(m.q, m.p, 0);
            out += &h_pows[m.hbar as usize].shift(base).scale(c);
        }
        out
    }

    /// The `ħ → 0` limit.
    pub fn classical_limit(&self) -> PhasePoly {
        PhasePoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.hbar == 0)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Numeric value at `pt`.
    pub fn eval<S: Scalar>(&self, pt: &PhasePoint<S>) -> S {
        let mut acc = S::zero();
        for (m, c) in &self.terms {
            let term = S::from_coeff(c)
                * pow_scalar(&pt.q, m.q)
                * pow_scalar(&pt.p, m.p)
                * pow_scalar(&pt.hbar, m.hbar);
            acc = acc + term;
        }
        acc
    }

    /// Exact division by `iħ`.
    pub fn div_i_hbar(&self) -> Result<PhasePoly, PolyError> {
        let minus_i = -GaussianRational::i();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.hbar == 0 {
                let lone = PhasePoly::monomial(*m, c.clone());
                return Err(PolyError::NotDivisible(lone.to_string()));
            }
            terms.insert(Monomial::new(m.q, m.p, m.hbar - 1), c * &minus_i);
        }
        Ok(PhasePoly { terms })
    }

    /// Applies `op` to every coefficient, dropping zeros.
    pub fn map_coeffs<F>(&self, mut op: F) -> PhasePoly
    where
        F: FnMut(&Monomial, &GaussianRational) -> GaussianRational,
    {
        PhasePoly::from_terms(self.terms.iter().map(|(m, c)| (*m, op(m, c))))
    }

    pub fn conj(&self) -> PhasePoly {
        self.map_coeffs(|_, c| c.conj())
    }
}

fn powers(base: &PhasePoly, max: u32) -> Vec<PhasePoly> {
    let mut v = Vec::with_capacity(max as usize + 1);
    v.push(PhasePoly::one());
    for k in 1..=max as usize {
        let next = &v[k - 1] * base;
        v.push(next);
    }
    v
}

fn pow_scalar<S: Scalar>(x: &S, n: u32) -> S {
    let mut acc = S::one();
    for _ in 0..n {
        acc = acc * x.clone();
    }
    acc
}

/// Numeric field used by [`PhasePoly::eval`]: exact Gaussian rationals or
/// double-precision complex numbers.
pub trait Scalar:
    Clone + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn from_coeff(c: &GaussianRational) -> Self;
}

impl Scalar for GaussianRational {
    fn from_coeff(c: &GaussianRational) -> Self {
        c.clone()
    }
}

impl Scalar for Complex64 {
    fn from_coeff(c: &GaussianRational) -> Self {
        c.to_complex64()
    }
}

/// A phase-space point together with the numeric value of ħ.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<S> {
    pub q: S,
    pub p: S,
    pub hbar: S,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointError {
    #[error("hbar must be non-negative, got {0}")]
    NegativeHbar(f64),
}

impl<S> PhasePoint<S> {
    pub fn new(q: S, p: S, hbar: S) -> Self {
        PhasePoint { q, p, hbar }
    }
}

impl PhasePoint<GaussianRational> {
    pub fn exact(q: BigRational, p: BigRational, hbar: BigRational) -> Self {
        PhasePoint {
            q: q.into(),
            p: p.into(),
            hbar: hbar.into(),
        }
    }
}

impl PhasePoint<Complex64> {
    pub fn float(q: f64, p: f64, hbar: f64) -> Result<Self, PointError> {
        if hbar.is_nan() || hbar < 0.0 {
            return Err(PointError::NegativeHbar(hbar));
        }
        Ok(PhasePoint {
            q: Complex64::new(q, 0.0),
            p: Complex64::new(p, 0.0),
            hbar: Complex64::new(hbar, 0.0),
        })
    }
}

impl<'a> Add<&'a PhasePoly> for &PhasePoly {
    type Output = PhasePoly;
    fn add(self, rhs: &'a PhasePoly) -> PhasePoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a PhasePoly> for &PhasePoly {
    type Output = PhasePoly;
    fn sub(self, rhs: &'a PhasePoly) -> PhasePoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, &-c);
        }
        out
    }
}

impl<'a> Mul<&'a PhasePoly> for &PhasePoly {
    type Output = PhasePoly;
    fn mul(self, rhs: &'a PhasePoly) -> PhasePoly {
        let mut out = PhasePoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), &(ca * cb));
            }
        }
        out
    }
}

impl Neg for &PhasePoly {
    type Output = PhasePoly;
    fn neg(self) -> PhasePoly {
        PhasePoly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }
}

impl Neg for PhasePoly {
    type Output = PhasePoly;
    fn neg(self) -> PhasePoly {
        -&self
    }
}

macro_rules! forward_poly_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<PhasePoly> for PhasePoly {
            type Output = PhasePoly;
            fn $method(self, rhs: PhasePoly) -> PhasePoly {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a PhasePoly> for PhasePoly {
            type Output = PhasePoly;
            fn $method(self, rhs: &'a PhasePoly) -> PhasePoly {
                (&self).$method(rhs)
            }
        }
        impl $tr<PhasePoly> for &PhasePoly {
            type Output = PhasePoly;
            fn $method(self, rhs: PhasePoly) -> PhasePoly {
                self.$method(&rhs)
            }
        }
    };
}

forward_poly_owned!(Add, add);
forward_poly_owned!(Sub, sub);
forward_poly_owned!(Mul, mul);

impl std::ops::AddAssign<&PhasePoly> for PhasePoly {
    fn add_assign(&mut self, rhs: &PhasePoly) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c);
        }
    }
}

impl std::ops::SubAssign<&PhasePoly> for PhasePoly {
    fn sub_assign(&mut self, rhs: &PhasePoly) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, &-c);
        }
    }
}

impl From<GaussianRational> for PhasePoly {
    fn from(c: GaussianRational) -> Self {
        PhasePoly::constant(c)
    }
}

impl fmt::Debug for PhasePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhasePoly({})", self)
    }
}

impl fmt::Display for PhasePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::expr::format_poly(self))
    }
}
