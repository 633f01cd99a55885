//! Poisson-Lie and Moyal-Lie generators, their exponentiated flows, and the
//! covariance / star-covariance defects.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::coeffs::GaussianRational;
use crate::poly::{factorial, falling_factorial, Monomial, PhasePoly};
use crate::series::ParamSeries;
use crate::star::{moyal, poisson, star};

/// Iteration cap for [`Order::Exact`] flows.
pub const DEFAULT_MAX_ITER: usize = 64;

/// Which adjoint action a generator symbol induces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BracketKind {
    /// `f ↦ {G, f}`
    Classical,
    /// `f ↦ G ⋆ f − f ⋆ G`
    MoyalRaw,
    /// `f ↦ (G ⋆ f − f ⋆ G) / (iħ)`; reduces to `Classical` as ħ → 0.
    MoyalNormalized,
}

/// Truncation of a flow series in the parameter `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// Keep powers `c^0 ..= c^n`.
    Truncated(usize),
    /// Sum until the iterated bracket vanishes.
    Exact,
}

impl Order {
    fn limit(self) -> Option<usize> {
        match self {
            Order::Truncated(n) => Some(n),
            Order::Exact => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("iterated bracket did not vanish after {0} iterations (generator is not nilpotent on this input)")]
    NonTerminating(usize),
}

/// One application of the generator `g` of the given kind to `f`.
pub fn bracket_apply(kind: BracketKind, g: &PhasePoly, f: &PhasePoly) -> PhasePoly {
    match kind {
        BracketKind::Classical => poisson(g, f),
        BracketKind::MoyalRaw => moyal(g, f),
        BracketKind::MoyalNormalized => moyal(g, f)
            .div_i_hbar()
            .expect("every Moyal bracket term carries hbar"),
    }
}

/// A generator symbol together with its bracket kind.
#[derive(Clone, Debug)]
pub struct Generator {
    kind: BracketKind,
    symbol: PhasePoly,
    max_iter: usize,
}

impl Generator {
    pub fn new(kind: BracketKind, symbol: PhasePoly) -> Self {
        Generator {
            kind,
            symbol,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn kind(&self) -> BracketKind {
        self.kind
    }

    pub fn symbol(&self) -> &PhasePoly {
        &self.symbol
    }

    pub fn apply(&self, f: &PhasePoly) -> PhasePoly {
        bracket_apply(self.kind, &self.symbol, f)
    }

    /// Coefficients `L^k f / k!` of the flow as a series in `c`.
    pub fn series(&self, f: &PhasePoly, order: Order) -> Result<ParamSeries, FlowError> {
        let mut coeffs = vec![f.clone()];
        let mut power = f.clone();
        let mut k: usize = 0;
        loop {
            if let Order::Truncated(n) = order {
                if k >= n {
                    break;
                }
            }
            if power.is_zero() {
                break;
            }
            if order == Order::Exact && k >= self.max_iter {
                return Err(FlowError::NonTerminating(self.max_iter));
            }
            power = self.apply(&power);
            k += 1;
            if power.is_zero() {
                break;
            }
            let inv = BigRational::new(BigInt::one(), factorial(k as u32));
            coeffs.push(power.scale_rational(&inv));
        }
        Ok(ParamSeries::new(coeffs))
    }

    /// `Σ c^k/k! L^k f` up to `order`.
    pub fn flow(&self, c: &GaussianRational, f: &PhasePoly, order: Order) -> Result<PhasePoly, FlowError> {
        if c.is_zero() {
            return Ok(f.clone());
        }
        Ok(self.series(f, order)?.eval(c))
    }
}

pub fn flow(
    kind: BracketKind,
    g: &PhasePoly,
    c: &GaussianRational,
    f: &PhasePoly,
    order: Order,
) -> Result<PhasePoly, FlowError> {
    Generator::new(kind, g.clone()).flow(c, f, order)
}

/// Images `(Q, P)` of the coordinates under the flow.
pub fn transform_coordinates(
    kind: BracketKind,
    g: &PhasePoly,
    c: &GaussianRational,
    order: Order,
) -> Result<(PhasePoly, PhasePoly), FlowError> {
    let gen = Generator::new(kind, g.clone());
    Ok((gen.flow(c, &PhasePoly::q(), order)?, gen.flow(c, &PhasePoly::p(), order)?))
}

/// Which bracket certifies canonicity in [`symplectic_defect`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalKind {
    Classical,
    Quantum,
}

/// `{Q, P} − 1` (classical) or `{Q, P}_M − iħ` (quantum); zero iff canonical.
pub fn symplectic_defect(big_q: &PhasePoly, big_p: &PhasePoly, kind: CanonicalKind) -> PhasePoly {
    match kind {
        CanonicalKind::Classical => poisson(big_q, big_p) - PhasePoly::one(),
        CanonicalKind::Quantum => moyal(big_q, big_p) - PhasePoly::i_hbar(),
    }
}

/// `Σ coeff_{a,b} ∂_q^a ∂_p^b` with polynomial coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct PolyDiffOperator {
    terms: BTreeMap<(u32, u32), PhasePoly>,
}

impl PolyDiffOperator {
    pub fn zero() -> Self {
        PolyDiffOperator::default()
    }

    /// Builds from `((∂_q order, ∂_p order), coefficient)` pairs.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), PhasePoly)>,
    {
        let mut op = PolyDiffOperator::zero();
        for (k, c) in terms {
            op.add_term(k, &c);
        }
        op
    }

    fn add_term(&mut self, key: (u32, u32), c: &PhasePoly) {
        let entry = self.terms.entry(key).or_default();
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &PhasePoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, dq: u32, dp: u32) -> PhasePoly {
        self.terms.get(&(dq, dp)).cloned().unwrap_or_default()
    }

    pub fn apply(&self, f: &PhasePoly) -> PhasePoly {
        let mut out = PhasePoly::zero();
        for (&(a, b), c) in &self.terms {
            let d = f.partial(a, b);
            if !d.is_zero() {
                out += &(c * &d);
            }
        }
        out
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        PolyDiffOperator::from_terms(self.terms.iter().map(|(k, v)| (*k, v.scale(c))))
    }
}

impl std::ops::Add for &PolyDiffOperator {
    type Output = PolyDiffOperator;
    fn add(self, rhs: &PolyDiffOperator) -> PolyDiffOperator {
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(*k, c);
        }
        out
    }
}

impl std::ops::Sub for &PolyDiffOperator {
    type Output = PolyDiffOperator;
    fn sub(self, rhs: &PolyDiffOperator) -> PolyDiffOperator {
        self + &rhs.scale(&-GaussianRational::one())
    }
}

impl fmt::Display for PolyDiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(a, b), c)| {
                let mut s = format!("({})", c);
                for (name, e) in [("d_q", a), ("d_p", b)] {
                    match e {
                        0 => {}
                        1 => s.push_str(&format!("*{}", name)),
                        _ => s.push_str(&format!("*{}^{}", name, e)),
                    }
                }
                s
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

impl fmt::Debug for PolyDiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyDiffOperator({})", self)
    }
}

/// Recovers the differential operator behind a linear map on polynomials by
/// probing it with the monomials `q^i p^j`, `i ≤ max_q`, `j ≤ max_p`.
///
/// With `V = Σ c_{ab} ∂_q^a ∂_p^b`,
/// `V(q^i p^j) = Σ_{a≤i, b≤j} c_{ab} i!/(i−a)! j!/(j−b)! q^{i−a} p^{j−b}`,
/// which is solved for `c_{ij}` in order of increasing `i + j`.
pub fn extract_operator<F>(op: F, max_q_order: u32, max_p_order: u32) -> PolyDiffOperator
where
    F: Fn(&PhasePoly) -> PhasePoly,
{
    let mut keys: Vec<(u32, u32)> = (0..=max_q_order)
        .flat_map(|i| (0..=max_p_order).map(move |j| (i, j)))
        .collect();
    keys.sort_by_key(|&(i, j)| (i + j, i));
    let mut found = PolyDiffOperator::zero();
    for (i, j) in keys {
        let probe = PhasePoly::monomial(Monomial::new(i, j, 0), GaussianRational::one());
        let residual = op(&probe) - found.apply(&probe);
        if residual.is_zero() {
            continue;
        }
        let norm = BigRational::new(BigInt::one(), factorial(i) * factorial(j));
        found.add_term((i, j), &residual.scale_rational(&norm));
    }
    found
}

/// The explicit differential operator of `f ↦ {A, f}_M`.
///
/// `max_q_order` / `max_p_order` bound the extracted derivative orders;
/// passing `A.degree()` for both gives the complete operator.
pub fn generator_as_operator(a: &PhasePoly, max_p_order: u32, max_q_order: u32) -> PolyDiffOperator {
    extract_operator(|f| moyal(a, f), max_q_order, max_p_order)
}

/// Symbol and printed operator of one `sp(2, ℝ)` generator.
#[derive(Clone, Debug)]
pub struct Sp2Generator {
    pub label: &'static str,
    pub symbol: PhasePoly,
    pub operator: PolyDiffOperator,
}

/// The quadratic generators `A₁ = −(p²−q²)/4`, `A₂ = (p²+q²)/4`, `A₃ = pq/2`
/// with their closed-form Moyal-Lie operators.
pub fn sp2_generators() -> Vec<Sp2Generator> {
    let half_i_hbar = PhasePoly::i_hbar().scale(&GaussianRational::ratio(1, 2));
    let (q, p) = (PhasePoly::q(), PhasePoly::p());
    let quarter = GaussianRational::ratio(1, 4);
    let sq = |x: &PhasePoly| x * x;
    vec![
        Sp2Generator {
            label: "A1",
            symbol: (sq(&q) - sq(&p)).scale(&quarter),
            // (iħ/2)(p ∂_q + q ∂_p)
            operator: PolyDiffOperator::from_terms([
                ((1, 0), &half_i_hbar * &p),
                ((0, 1), &half_i_hbar * &q),
            ]),
        },
        Sp2Generator {
            label: "A2",
            symbol: (sq(&p) + sq(&q)).scale(&quarter),
            // (−iħ/2)(p ∂_q − q ∂_p)
            operator: PolyDiffOperator::from_terms([
                ((1, 0), -(&half_i_hbar * &p)),
                ((0, 1), &half_i_hbar * &q),
            ]),
        },
        Sp2Generator {
            label: "A3",
            symbol: (&p * &q).scale(&GaussianRational::ratio(1, 2)),
            // (iħ/2)(p ∂_p − q ∂_q)
            operator: PolyDiffOperator::from_terms([
                ((0, 1), &half_i_hbar * &p),
                ((1, 0), -(&half_i_hbar * &q)),
            ]),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymplecticError {
    #[error("matrix is not symplectic: ad - bc = {0}")]
    NotSymplectic(BigRational),
}

/// `(P, Q)ᵀ = M (p, q)ᵀ` with `det M = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticMatrix {
    a: BigRational,
    b: BigRational,
    c: BigRational,
    d: BigRational,
}

impl SymplecticMatrix {
    pub fn new(a: BigRational, b: BigRational, c: BigRational, d: BigRational) -> Result<Self, SymplecticError> {
        let det = &a * &d - &b * &c;
        if !det.is_one() {
            return Err(SymplecticError::NotSymplectic(det));
        }
        Ok(SymplecticMatrix { a, b, c, d })
    }

    pub fn from_integers(a: i64, b: i64, c: i64, d: i64) -> Result<Self, SymplecticError> {
        let r = |x: i64| BigRational::from_integer(x.into());
        Self::new(r(a), r(b), r(c), r(d))
    }

    pub fn identity() -> Self {
        Self::from_integers(1, 0, 0, 1).expect("det 1")
    }

    pub fn inverse(&self) -> Self {
        SymplecticMatrix {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        }
    }

    /// Images `(Q, P)` of the coordinates.
    pub fn images(&self) -> (PhasePoly, PhasePoly) {
        let lin = |x: &BigRational, y: &BigRational| {
            PhasePoly::p().scale_rational(x) + PhasePoly::q().scale_rational(y)
        };
        (lin(&self.c, &self.d), lin(&self.a, &self.b))
    }
}

/// `f(Q, P)` for the linear canonical map `M`.
pub fn linear_symplectic_subst(m: &SymplecticMatrix, f: &PhasePoly) -> PhasePoly {
    let (big_q, big_p) = m.images();
    f.subst(&big_q, &big_p)
}

/// Series of `flow(f) − f(Q, P)`, both expanded to the same order in `c`.
pub fn covariance_defect_series(
    kind: BracketKind,
    g: &PhasePoly,
    f: &PhasePoly,
    order: Order,
) -> Result<ParamSeries, FlowError> {
    covariance_defect_series_with(&Generator::new(kind, g.clone()), f, order)
}

pub fn covariance_defect_series_with(gen: &Generator, f: &PhasePoly, order: Order) -> Result<ParamSeries, FlowError> {
    let flowed = gen.series(f, order)?;
    let qs = gen.series(&PhasePoly::q(), order)?;
    let ps = gen.series(&PhasePoly::p(), order)?;
    let composed = ParamSeries::compose(f, &qs, &ps, order.limit());
    Ok(flowed.sub(&composed).trimmed())
}

/// `[e^{c L} f](z) − f(Z)`; zero certifies covariance through `order`.
pub fn covariance_defect(
    kind: BracketKind,
    g: &PhasePoly,
    c: &GaussianRational,
    f: &PhasePoly,
    order: Order,
) -> Result<PhasePoly, FlowError> {
    if c.is_zero() {
        return Ok(PhasePoly::zero());
    }
    Ok(covariance_defect_series(kind, g, f, order)?.eval(c))
}

/// Series of `flow(f) ⋆ flow(g) − flow(f ⋆ g)` for the Moyal-Lie flow of `a`.
pub fn star_covariance_defect_series(
    a: &PhasePoly,
    f: &PhasePoly,
    g: &PhasePoly,
    order: Order,
) -> Result<ParamSeries, FlowError> {
    let gen = Generator::new(BracketKind::MoyalRaw, a.clone());
    let ff = gen.series(f, order)?;
    let fg = gen.series(g, order)?;
    let ffg = gen.series(&star(f, g), order)?;
    let lhs = ff.product_with(&fg, order.limit(), star);
    Ok(lhs.sub(&ffg).trimmed())
}

pub fn star_covariance_defect(
    a: &PhasePoly,
    c: &GaussianRational,
    f: &PhasePoly,
    g: &PhasePoly,
    order: Order,
) -> Result<PhasePoly, FlowError> {
    if c.is_zero() {
        return Ok(PhasePoly::zero());
    }
    Ok(star_covariance_defect_series(a, f, g, order)?.eval(c))
}

/// Closed-form Moyal-Lie operator read off the bidifferential series:
/// for odd `k`, `2 (iħ/2)^k/k! C(k,j) (−1)^j (∂_q^{k−j}∂_p^j A) ∂_q^j ∂_p^{k−j}`.
pub fn moyal_operator_closed_form(a: &PhasePoly) -> PolyDiffOperator {
    let deg = a.degree();
    let mut terms = Vec::new();
    let half_i_hbar = PhasePoly::i_hbar().scale(&GaussianRational::ratio(1, 2));
    for k in (1..=deg).step_by(2) {
        let pref = half_i_hbar
            .pow(k)
            .scale_rational(&BigRational::new(BigInt::from(2), factorial(k)));
        for j in 0..=k {
            let binom = BigRational::from_integer(falling_factorial(k, j) / factorial(j));
            let sign = if j % 2 == 1 { -BigRational::one() } else { BigRational::one() };
            let coeff = (&pref * &a.partial(k - j, j)).scale_rational(&(binom * sign));
            terms.push(((j, k - j), coeff));
        }
    }
    PolyDiffOperator::from_terms(terms)
}
