//! Star product (two independent routes), Poisson and Moyal brackets, and
//! the non-associative half-bracket `×`.
//!
//! Sign convention: `{q, p} = 1`, hence `q ⋆ p = qp + iħ/2` and
//! `p ⋆ q = pq − iħ/2`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::coeffs::GaussianRational;
use crate::poly::{factorial, falling_factorial, Monomial, PhasePoly, Var};

/// `f ⋆ g` via the terminating bidifferential series
/// `Σ_k (iħ/2)^k/k! Σ_j C(k,j)(−1)^j (∂_q^{k−j}∂_p^j f)(∂_p^{k−j}∂_q^j g)`.
///
/// Evaluated monomial pair by monomial pair; with `s = k − j` the weight of a
/// pair is `(i/2)^{s+j} (−1)^j / (s! j!)` times the falling factorials from the
/// derivatives.
pub fn star(f: &PhasePoly, g: &PhasePoly) -> PhasePoly {
    let mut out = PhasePoly::zero();
    for (ma, ca) in f.terms() {
        for (mb, cb) in g.terms() {
            let base = ca * cb;
            let s_max = ma.q.min(mb.p);
            let j_max = ma.p.min(mb.q);
            for s in 0..=s_max {
                for j in 0..=j_max {
                    let k = s + j;
                    let num = falling_factorial(ma.q, s)
                        * falling_factorial(mb.p, s)
                        * falling_factorial(ma.p, j)
                        * falling_factorial(mb.q, j);
                    let den = factorial(s) * factorial(j) * (BigInt::one() << k);
                    let mut w = GaussianRational::i_pow(k).scale(&BigRational::new(num, den));
                    if j % 2 == 1 {
                        w = -w;
                    }
                    let m = Monomial::new(ma.q - s + mb.q - j, ma.p - j + mb.p - s, ma.hbar + mb.hbar + k);
                    out.add_term(m, &(&base * &w));
                }
            }
        }
    }
    out
}

/// Left Bopp operator `q_L g = q g + (iħ/2) ∂_p g`.
fn bopp_q(g: &PhasePoly) -> PhasePoly {
    let half_i_hbar = PhasePoly::i_hbar().scale(&GaussianRational::ratio(1, 2));
    &PhasePoly::q() * g + &half_i_hbar * &g.diff(Var::P)
}

/// Left Bopp operator `p_L g = p g − (iħ/2) ∂_q g`.
fn bopp_p(g: &PhasePoly) -> PhasePoly {
    let half_i_hbar = PhasePoly::i_hbar().scale(&GaussianRational::ratio(1, 2));
    &PhasePoly::p() * g - &half_i_hbar * &g.diff(Var::Q)
}

/// `f ⋆ g` by letting the Weyl-ordered operator `f(q_L, p_L)` act on `g`.
///
/// `q_L` and `p_L` do not commute (`[q_L, p_L] = iħ`), so each monomial
/// `q^a p^b` is realized in its symmetric (Weyl) ordering through
/// `2^{-a} Σ_k C(a,k) q_L^k p_L^b q_L^{a−k}`. Only the first-order operators
/// above are used; no part of the bidifferential series is shared with
/// [`star`].
pub fn star_bopp(f: &PhasePoly, g: &PhasePoly) -> PhasePoly {
    let max_q = f.degree_in(Var::Q) as usize;
    // q_L^j g for all j needed on the right
    let mut right = Vec::with_capacity(max_q + 1);
    right.push(g.clone());
    for j in 1..=max_q {
        let next = bopp_q(&right[j - 1]);
        right.push(next);
    }
    let mut out = PhasePoly::zero();
    for (m, c) in f.terms() {
        let a = m.q;
        let mut sym = PhasePoly::zero();
        for k in 0..=a {
            let mut h = right[(a - k) as usize].clone();
            for _ in 0..m.p {
                h = bopp_p(&h);
            }
            for _ in 0..k {
                h = bopp_q(&h);
            }
            let binom = falling_factorial(a, k) / factorial(k);
            sym += &h.scale(&GaussianRational::from_real(BigRational::from_integer(binom)));
        }
        let weight = c.scale(&BigRational::new(BigInt::one(), BigInt::one() << a));
        out += &sym.shift(Monomial::new(0, 0, m.hbar)).scale(&weight);
    }
    out
}

/// `{f, g} = ∂_q f ∂_p g − ∂_p f ∂_q g`
pub fn poisson(f: &PhasePoly, g: &PhasePoly) -> PhasePoly {
    &f.diff(Var::Q) * &g.diff(Var::P) - &f.diff(Var::P) * &g.diff(Var::Q)
}

/// `{f, g}_M = f ⋆ g − g ⋆ f`
pub fn moyal(f: &PhasePoly, g: &PhasePoly) -> PhasePoly {
    star(f, g) - star(g, f)
}

/// `f × g = ½ (∂_q f ∂_p g − ∂_p f ∂_q g)`; `{g, f} = g × f − f × g`.
pub fn cross(f: &PhasePoly, g: &PhasePoly) -> PhasePoly {
    poisson(f, g).scale(&GaussianRational::ratio(1, 2))
}

/// A fixed triple `(f, g, h)` of monomials with `(f×g)×h ≠ f×(g×h)`.
///
/// First hit of an exhaustive scan over monomial triples of degree ≤ 3 in
/// canonical order; the scan itself lives in the tests.
pub fn cross_nonassoc_witness() -> (PhasePoly, PhasePoly, PhasePoly) {
    let mono = |q, p| PhasePoly::monomial(Monomial::new(q, p, 0), GaussianRational::one());
    (mono(3, 0), mono(3, 0), mono(1, 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;

    fn poly(s: &str) -> PhasePoly {
        parse_poly(s).unwrap()
    }

    /// Direct transcription of the bidifferential series over `(k, j)`.
    fn star_series_oracle(f: &PhasePoly, g: &PhasePoly) -> PhasePoly {
        let kmax = f.degree().min(g.degree());
        let mut out = PhasePoly::zero();
        let half_i_hbar = PhasePoly::i_hbar().scale(&GaussianRational::ratio(1, 2));
        for k in 0..=kmax {
            let mut inner = PhasePoly::zero();
            for j in 0..=k {
                let binom = falling_factorial(k, j) / factorial(j);
                let mut c = GaussianRational::from_real(BigRational::from_integer(binom));
                if j % 2 == 1 {
                    c = -c;
                }
                inner += &(&f.partial(k - j, j) * &g.partial(j, k - j)).scale(&c);
            }
            let pref = half_i_hbar
                .pow(k)
                .scale(&GaussianRational::from_real(BigRational::new(1.into(), factorial(k))));
            out += &(&pref * &inner);
        }
        out
    }

    #[test]
    fn star_examples() {
        assert_eq!(star(&poly("p"), &poly("q")), poly("p*q - (1/2)*i*hbar"));
        assert_eq!(star(&poly("q"), &poly("q")), poly("q^2"));
        assert_eq!(
            star(&poly("q^2"), &poly("p^2")),
            poly("q^2*p^2 + 2*i*hbar*q*p - (1/2)*hbar^2")
        );
        let h0 = poly("(1/2)*p^2 + (1/2)*q^2");
        assert_eq!(star(&h0, &h0), &h0 * &h0 - poly("(1/4)*hbar^2"));
    }

    #[test]
    fn star_matches_series_transcription() {
        let cases = [
            ("q^3*p + hbar*p^2", "p^3 - i*q*p"),
            ("q^2*p^2", "q*p^3 + 2"),
            ("(1/3)*q^4 - hbar", "p^4*q"),
        ];
        for (a, b) in cases {
            assert_eq!(star(&poly(a), &poly(b)), star_series_oracle(&poly(a), &poly(b)));
        }
    }

    #[test]
    fn star_bopp_examples() {
        assert_eq!(star_bopp(&poly("p"), &poly("q")), poly("p*q - (1/2)*i*hbar"));
        let f = poly("q^2*p - 3*hbar*p + i");
        assert_eq!(star_bopp(&f, &PhasePoly::one()), f);
        assert_eq!(
            star_bopp(&poly("q^3"), &poly("p^3")),
            poly("q^3*p^3 + (9/2)*i*hbar*q^2*p^2 - (9/2)*hbar^2*q*p - (3/4)*i*hbar^3")
        );
        assert_eq!(star(&poly("q^3"), &poly("p^3")), star_bopp(&poly("q^3"), &poly("p^3")));
    }

    #[test]
    fn unsymmetrized_bopp_ordering_is_wrong() {
        // q_L p_L acting on 1 gives qp + iħ/2, not the symbol qp
        let naive = bopp_q(&bopp_p(&PhasePoly::one()));
        assert_eq!(naive, poly("q*p + (1/2)*i*hbar"));
        assert_eq!(star_bopp(&poly("q*p"), &PhasePoly::one()), poly("q*p"));
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson(&poly("q"), &poly("p")), PhasePoly::one());
        let f = poly("q^3*p - hbar*p^2");
        assert!(poisson(&f, &f).is_zero());
        assert_eq!(poisson(&poly("(1/2)*p^2 + (1/2)*q^2"), &poly("q")), poly("-p"));
    }

    #[test]
    fn moyal_examples() {
        assert_eq!(moyal(&poly("q"), &poly("p")), PhasePoly::i_hbar());
        let expected = poly("9*i*hbar*q^2*p^2 - (3/2)*i*hbar^3");
        assert_eq!(moyal(&poly("q^3"), &poly("p^3")), expected);
        let via_bopp = star_bopp(&poly("q^3"), &poly("p^3")) - star_bopp(&poly("p^3"), &poly("q^3"));
        assert_eq!(via_bopp, expected);
        let f = poly("q^2*p + hbar");
        assert!(moyal(&f, &f).is_zero());
    }

    #[test]
    fn cross_examples() {
        assert_eq!(cross(&poly("q"), &poly("p")), poly("1/2"));
        assert!(cross(&poly("q^2*p"), &poly("5 - i")).is_zero());
        assert_eq!(
            cross(&poly("q"), &poly("p")) - cross(&poly("p"), &poly("q")),
            poisson(&poly("q"), &poly("p"))
        );
    }

    fn assoc_gap(f: &PhasePoly, g: &PhasePoly, h: &PhasePoly) -> PhasePoly {
        cross(&cross(f, g), h) - cross(f, &cross(g, h))
    }

    #[test]
    fn witness_is_first_hit_of_exhaustive_scan() {
        let mut monos = Vec::new();
        for d in 0..=3u32 {
            for q in 0..=d {
                monos.push(Monomial::new(q, d - q, 0));
            }
        }
        monos.sort();
        let as_poly = |m: &Monomial| PhasePoly::monomial(*m, GaussianRational::one());
        let mut first = None;
        'scan: for a in &monos {
            for b in &monos {
                for c in &monos {
                    let (f, g, h) = (as_poly(a), as_poly(b), as_poly(c));
                    if !assoc_gap(&f, &g, &h).is_zero() {
                        first = Some((f, g, h));
                        break 'scan;
                    }
                }
            }
        }
        let (f, g, h) = cross_nonassoc_witness();
        assert_eq!(first, Some((f.clone(), g.clone(), h.clone())));
        assert!(!assoc_gap(&f, &g, &h).is_zero());
        let star_gap = star(&star(&f, &g), &h) - star(&f, &star(&g, &h));
        assert!(star_gap.is_zero());
    }
}
