//! Seeded invariant suites behind `moyal verify`.
//!
//! Every case draws its inputs up front from one seeded stream and then
//! evaluates them (possibly in parallel); the first failing input in draw
//! order becomes the reported counterexample, so a seed fixes the report
//! byte for byte.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::coeffs::GaussianRational;
use crate::exec::{map_slice, Execution};
use crate::expr::{format_poly, parse_poly, poly_json_roundtrip};
use crate::kicked::KickedSystem;
use crate::lie::{
    bracket_apply, covariance_defect, covariance_defect_series, generator_as_operator, sp2_generators,
    star_covariance_defect_series, symplectic_defect, BracketKind, CanonicalKind, Generator, Order,
    PolyDiffOperator, DEFAULT_MAX_ITER,
};
use crate::poly::{Monomial, PhasePoint, PhasePoly, Var};
use crate::random::PolyGen;
use crate::star::{cross, cross_nonassoc_witness, moyal, poisson, star, star_bopp};
use crate::star_exp::{mlt_equivalence_defect_series, star_conjugate, star_exponential_terms, star_power};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("unknown suite {0:?} (expected one of algebra, covariance, kick, starexp, all)")]
    UnknownSuite(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Algebra,
    Covariance,
    Kick,
    StarExp,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Covariance => "covariance",
            Suite::Kick => "kick",
            Suite::StarExp => "starexp",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "algebra" => Ok(Suite::Algebra),
            "covariance" => Ok(Suite::Covariance),
            "kick" => Ok(Suite::Kick),
            "starexp" => Ok(Suite::StarExp),
            "all" => Ok(Suite::All),
            other => Err(VerifyError::UnknownSuite(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub count: usize,
    pub pass: bool,
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub cases: Vec<CaseResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&CaseResult> {
        self.cases.iter().find(|c| !c.pass)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} (seed {})", self.suite, self.seed)?;
        for c in &self.cases {
            let status = if c.pass { "PASS" } else { "FAIL" };
            writeln!(f, "{} {} [{} cases]", status, c.name, c.count)?;
            if let Some(ce) = &c.counterexample {
                writeln!(f, "    counterexample: {}", ce)?;
            }
        }
        let failed = self.cases.iter().filter(|c| !c.pass).count();
        write!(f, "{} of {} properties passed", self.cases.len() - failed, self.cases.len())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    pub exec: Execution,
    pub max_iter: usize,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        VerifyConfig {
            seed,
            exec: Execution::default(),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

pub fn verify_suite(name: &str, seed: u64) -> Result<Report, VerifyError> {
    Ok(run_suite(name.parse()?, &VerifyConfig::new(seed)))
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Report {
    let cases = match suite {
        Suite::Algebra => algebra(cfg),
        Suite::Covariance => covariance(cfg),
        Suite::Kick => kick(cfg),
        Suite::StarExp => starexp(cfg),
        Suite::All => [algebra(cfg), covariance(cfg), kick(cfg), starexp(cfg)].concat(),
    };
    Report {
        suite: suite.name().to_string(),
        seed: cfg.seed,
        cases,
    }
}

type Check = Result<(), String>;

fn run_case<I, F>(name: &str, exec: Execution, inputs: &[I], check: F) -> CaseResult
where
    I: Sync,
    F: Fn(&I) -> Check + Sync + Send,
{
    let outcomes = map_slice(exec, inputs, |i| check(i).err());
    let counterexample = outcomes.into_iter().flatten().next();
    CaseResult {
        name: name.to_string(),
        count: inputs.len(),
        pass: counterexample.is_none(),
        counterexample,
    }
}

fn fmt_inputs(labels: &[(&str, &PhasePoly)]) -> String {
    labels
        .iter()
        .map(|(l, f)| format!("{} = {}", l, format_poly(f)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn expect_eq(context: String, lhs: &PhasePoly, rhs: &PhasePoly) -> Check {
    if lhs == rhs {
        Ok(())
    } else {
        Err(format!(
            "{}: lhs = {}, rhs = {}",
            context,
            format_poly(lhs),
            format_poly(rhs)
        ))
    }
}

fn expect_zero(context: String, value: &PhasePoly) -> Check {
    if value.is_zero() {
        Ok(())
    } else {
        Err(format!("{}: residual = {}", context, format_poly(value)))
    }
}

fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn gr(r: &BigRational) -> GaussianRational {
    GaussianRational::from_real(r.clone())
}

/// Monomials `q^a p^b` with `a + b ≤ max_degree`.
fn monomials_up_to(max_degree: u32) -> Vec<PhasePoly> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        for q in 0..=d {
            out.push(PhasePoly::monomial(Monomial::new(q, d - q, 0), GaussianRational::one()));
        }
    }
    out
}

/// `V'''(q − T p)`
fn third_derivative_at_drift(v: &PhasePoly, period: &BigRational) -> PhasePoly {
    let q_next = PhasePoly::q() - PhasePoly::p().scale_rational(period);
    v.diff_n(Var::Q, 3).subst(&q_next, &PhasePoly::p())
}

/// `V = q^n / n`
fn power_potential(n: u32) -> PhasePoly {
    PhasePoly::monomial(Monomial::new(n, 0, 0), GaussianRational::ratio(1, n as i64))
}

fn algebra(cfg: &VerifyConfig) -> Vec<CaseResult> {
    let mut gen = PolyGen::new(cfg.seed);
    let exec = cfg.exec;
    let mut cases = Vec::new();

    let triples: Vec<_> = (0..100).map(|_| (gen.poly(), gen.poly(), gen.poly())).collect();
    cases.push(run_case("algebra.product_assoc_comm", exec, &triples, |(f, g, h)| {
        let ctx = || fmt_inputs(&[("f", f), ("g", g), ("h", h)]);
        expect_eq(ctx(), &(&(f * g) * h), &(f * &(g * h)))?;
        expect_eq(ctx(), &(f * g), &(g * f))
    }));

    let pairs: Vec<_> = (0..100).map(|_| (gen.poly(), gen.poly())).collect();
    cases.push(run_case("algebra.leibniz", exec, &pairs, |(f, g)| {
        for v in [Var::Q, Var::P] {
            let lhs = (f * g).diff(v);
            let rhs = &f.diff(v) * g + f * &g.diff(v);
            expect_eq(fmt_inputs(&[("f", f), ("g", g)]), &lhs, &rhs)?;
        }
        Ok(())
    }));

    let singles: Vec<_> = (0..100).map(|_| gen.poly()).collect();
    cases.push(run_case("algebra.div_i_hbar_inverse", exec, &singles, |f| {
        let lifted = f * &PhasePoly::i_hbar();
        let back = lifted.div_i_hbar().map_err(|e| format!("f = {}: {}", format_poly(f), e))?;
        expect_eq(format!("f = {}", format_poly(f)), &back, f)?;
        if let Ok(d) = f.div_i_hbar() {
            expect_eq(format!("f = {}", format_poly(f)), &(&d * &PhasePoly::i_hbar()), f)?;
        }
        Ok(())
    }));

    let compositions: Vec<_> = (0..50)
        .map(|_| {
            let f = gen.poly_with(3, 1, 4, false);
            let maps: Vec<PhasePoly> = (0..4).map(|_| gen.poly_with(2, 1, 3, false)).collect();
            (f, maps)
        })
        .collect();
    cases.push(run_case("algebra.subst_composition", exec, &compositions, |(f, m)| {
        let lhs = f.subst(&m[0], &m[1]).subst(&m[2], &m[3]);
        let rhs = f.subst(&m[0].subst(&m[2], &m[3]), &m[1].subst(&m[2], &m[3]));
        let ctx = fmt_inputs(&[("f", f), ("A", &m[0]), ("B", &m[1]), ("C", &m[2]), ("D", &m[3])]);
        expect_eq(ctx, &lhs, &rhs)
    }));

    let evals: Vec<_> = (0..50)
        .map(|_| {
            let f = gen.poly_with(4, 2, 5, false);
            let a = gen.poly_with(2, 1, 3, false);
            let b = gen.poly_with(2, 1, 3, false);
            let pt = PhasePoint::new(gen.coefficient(), gen.coefficient(), gen.coefficient());
            (f, a, b, pt)
        })
        .collect();
    cases.push(run_case("algebra.eval_after_subst", exec, &evals, |(f, a, b, pt)| {
        let lhs = f.subst(a, b).eval(pt);
        let moved = PhasePoint::new(a.eval(pt), b.eval(pt), pt.hbar.clone());
        let rhs = f.eval(&moved);
        if lhs == rhs {
            Ok(())
        } else {
            Err(format!("{}: {} != {}", fmt_inputs(&[("f", f), ("A", a), ("B", b)]), lhs, rhs))
        }
    }));

    let triples: Vec<_> = (0..200).map(|_| (gen.poly(), gen.poly(), gen.poly())).collect();
    cases.push(run_case("algebra.star_associativity", exec, &triples, |(f, g, h)| {
        let lhs = star(&star(f, g), h);
        let rhs = star(f, &star(g, h));
        expect_eq(fmt_inputs(&[("f", f), ("g", g), ("h", h)]), &lhs, &rhs)
    }));

    let pairs: Vec<_> = (0..100).map(|_| (gen.poly(), gen.poly())).collect();
    cases.push(run_case("algebra.star_bopp_agreement", exec, &pairs, |(f, g)| {
        expect_eq(fmt_inputs(&[("f", f), ("g", g)]), &star(f, g), &star_bopp(f, g))
    }));

    // the inputs carry no ħ so every ħ in the bracket comes from the series
    let pairs: Vec<_> = (0..100).map(|_| (gen.poly_with(5, 0, 6, false), gen.poly_with(5, 0, 6, false))).collect();
    cases.push(run_case("algebra.moyal_leading_order", exec, &pairs, |(f, g)| {
        let rest = moyal(f, g) - &PhasePoly::i_hbar() * &poisson(f, g);
        match rest.hbar_powers().iter().find(|&&k| k < 3 || k % 2 == 0) {
            None => Ok(()),
            Some(k) => Err(format!(
                "{}: remainder {} has hbar^{}",
                fmt_inputs(&[("f", f), ("g", g)]),
                format_poly(&rest),
                k
            )),
        }
    }));

    cases.push(run_case("algebra.moyal_q3_p3", exec, &[()], |_| {
        let (q3, p3) = (PhasePoly::q().pow(3), PhasePoly::p().pow(3));
        let expected = parse_poly("9*i*hbar*q^2*p^2 - (3/2)*i*hbar^3").expect("literal");
        expect_eq("moyal(q^3, p^3)".into(), &moyal(&q3, &p3), &expected)?;
        let via_bopp = star_bopp(&q3, &p3) - star_bopp(&p3, &q3);
        expect_eq("bopp route".into(), &via_bopp, &expected)
    }));

    let pairs: Vec<_> = (0..100).map(|_| (gen.poly(), gen.poly())).collect();
    cases.push(run_case("algebra.star_classical_limit", exec, &pairs, |(f, g)| {
        let lhs = star(f, g).classical_limit();
        let rhs = (f * g).classical_limit();
        expect_eq(fmt_inputs(&[("f", f), ("g", g)]), &lhs, &rhs)
    }));

    let triples: Vec<_> = (0..50)
        .map(|_| {
            (
                gen.poly_with(4, 1, 4, false),
                gen.poly_with(4, 1, 4, false),
                gen.poly_with(4, 1, 4, false),
            )
        })
        .collect();
    for (name, bracket) in [
        ("algebra.poisson_antisymmetry_jacobi", poisson as fn(&PhasePoly, &PhasePoly) -> PhasePoly),
        ("algebra.moyal_antisymmetry_jacobi", moyal),
    ] {
        cases.push(run_case(name, exec, &triples, |(f, g, h)| {
            let ctx = || fmt_inputs(&[("f", f), ("g", g), ("h", h)]);
            expect_zero(ctx(), &(bracket(f, g) + bracket(g, f)))?;
            let jacobi = bracket(f, &bracket(g, h)) + bracket(g, &bracket(h, f)) + bracket(h, &bracket(f, g));
            expect_zero(ctx(), &jacobi)
        }));
    }

    let triples: Vec<_> = (0..100).map(|_| (gen.poly(), gen.poly(), gen.poly())).collect();
    cases.push(run_case("algebra.cross_distributive", exec, &triples, |(f, g, h)| {
        let ctx = || fmt_inputs(&[("f", f), ("g", g), ("h", h)]);
        expect_eq(ctx(), &cross(f, &(g + h)), &(cross(f, g) + cross(f, h)))?;
        expect_eq(ctx(), &cross(&(f + g), h), &(cross(f, h) + cross(g, h)))
    }));

    cases.push(run_case("algebra.cross_nonassociative_witness", exec, &[()], |_| {
        let (f, g, h) = cross_nonassoc_witness();
        let gap = cross(&cross(&f, &g), &h) - cross(&f, &cross(&g, &h));
        let ctx = fmt_inputs(&[("f", &f), ("g", &g), ("h", &h)]);
        if gap.is_zero() {
            return Err(format!("{}: x-product associates", ctx));
        }
        expect_zero(ctx, &(star(&star(&f, &g), &h) - star(&f, &star(&g, &h))))
    }));

    let singles: Vec<_> = (0..100).map(|_| gen.poly()).collect();
    cases.push(run_case("algebra.star_identity", exec, &singles, |f| {
        let one = PhasePoly::one();
        expect_eq(format!("f = {}", format_poly(f)), &star(&one, f), f)?;
        expect_eq(format!("f = {}", format_poly(f)), &star(f, &one), f)
    }));

    let singles: Vec<_> = (0..100).map(|_| gen.poly()).collect();
    cases.push(run_case("algebra.parse_format_roundtrip", exec, &singles, |f| {
        let text = format_poly(f);
        let back = parse_poly(&text).map_err(|e| format!("{:?}: {}", text, e))?;
        expect_eq(format!("text = {:?}", text), &back, f)
    }));

    let singles: Vec<_> = (0..100).map(|_| gen.poly()).collect();
    cases.push(run_case("algebra.json_roundtrip", exec, &singles, |f| {
        let back = poly_json_roundtrip(f).map_err(|e| format!("f = {}: {}", format_poly(f), e))?;
        expect_eq(format!("f = {}", format_poly(f)), &back, f)
    }));

    cases
}

fn commutator_matches(kind: BracketKind, a1: &PhasePoly, a2: &PhasePoly, probes: &[PhasePoly]) -> Check {
    let combined = match kind {
        BracketKind::Classical => poisson(a1, a2),
        _ => moyal(a1, a2),
    };
    for f in probes {
        let lhs = bracket_apply(kind, a1, &bracket_apply(kind, a2, f)) - bracket_apply(kind, a2, &bracket_apply(kind, a1, f));
        let rhs = bracket_apply(kind, &combined, f);
        expect_eq(fmt_inputs(&[("A1", a1), ("A2", a2), ("f", f)]), &lhs, &rhs)?;
    }
    Ok(())
}

/// `−iħ(p∂_q − q∂_p) + iħλ[q³∂_p − (ħ²/4) q ∂_p³]`
pub fn quartic_operator_expected(lambda: &BigRational) -> PolyDiffOperator {
    let ih = PhasePoly::i_hbar();
    let (q, p) = (PhasePoly::q(), PhasePoly::p());
    let d_q = -(&ih * &p);
    let d_p = &ih * &q + (&ih * &q.pow(3)).scale_rational(lambda);
    let d_p3 = (&ih * &(&PhasePoly::hbar().pow(2) * &q)).scale_rational(&(-lambda / BigRational::from_integer(4.into())));
    PolyDiffOperator::from_terms([((1, 0), d_q), ((0, 1), d_p), ((0, 3), d_p3)])
}

fn covariance(cfg: &VerifyConfig) -> Vec<CaseResult> {
    let mut gen = PolyGen::new(cfg.seed.wrapping_add(1));
    let exec = cfg.exec;
    let mut cases = Vec::new();
    let probes6 = monomials_up_to(6);
    let sp2 = sp2_generators();

    let mut gen_pairs: Vec<(PhasePoly, PhasePoly)> = Vec::new();
    for i in 0..sp2.len() {
        for j in i + 1..sp2.len() {
            gen_pairs.push((sp2[i].symbol.clone(), sp2[j].symbol.clone()));
        }
    }
    for _ in 0..25 {
        gen_pairs.push((gen.poly_with(3, 1, 3, false), gen.poly_with(3, 1, 3, false)));
    }
    cases.push(run_case("covariance.adjoint_homomorphism_moyal", exec, &gen_pairs, |(a1, a2)| {
        commutator_matches(BracketKind::MoyalRaw, a1, a2, &probes6)
    }));
    cases.push(run_case("covariance.adjoint_homomorphism_poisson", exec, &gen_pairs, |(a1, a2)| {
        commutator_matches(BracketKind::Classical, a1, a2, &probes6)
    }));

    let probes8 = monomials_up_to(8);
    cases.push(run_case("covariance.sp2_operators", exec, &sp2, |g| {
        let extracted = generator_as_operator(&g.symbol, 2, 2);
        if extracted != g.operator {
            return Err(format!("{}: extracted {} vs closed form {}", g.label, extracted, g.operator));
        }
        for f in &probes8 {
            let raw = bracket_apply(BracketKind::MoyalRaw, &g.symbol, f);
            let classical = &PhasePoly::i_hbar() * &bracket_apply(BracketKind::Classical, &g.symbol, f);
            let ctx = format!("{} on {}", g.label, format_poly(f));
            expect_eq(ctx.clone(), &raw, &classical)?;
            expect_eq(ctx, &g.operator.apply(f), &raw)?;
        }
        Ok(())
    }));

    let lambdas = [frac(1, 1), frac(-2, 3), frac(5, 7)];
    cases.push(run_case("covariance.quartic_generator_operator", exec, &lambdas, |lam| {
        let h0 = parse_poly("(1/2)*p^2 + (1/2)*q^2").expect("literal");
        let a = h0 + power_potential(4).scale_rational(lam);
        let got = generator_as_operator(&a, 4, 4);
        let want = quartic_operator_expected(lam);
        if got == want {
            Ok(())
        } else {
            Err(format!("lambda = {}: got {}, want {}", lam, got, want))
        }
    }));

    let triples: Vec<_> = (0..30)
        .map(|_| {
            (
                gen.poly_with(3, 0, 3, false),
                gen.poly_with(3, 1, 3, false),
                gen.poly_with(3, 1, 3, false),
            )
        })
        .collect();
    cases.push(run_case("covariance.classical_leibniz", exec, &triples, |(g, f1, f2)| {
        let order = Order::Truncated(5);
        let gen = Generator::new(BracketKind::Classical, g.clone());
        let run = || -> Result<bool, String> {
            let lhs = gen.series(&(f1 * f2), order).map_err(|e| e.to_string())?;
            let a = gen.series(f1, order).map_err(|e| e.to_string())?;
            let b = gen.series(f2, order).map_err(|e| e.to_string())?;
            Ok(lhs.sub(&a.mul(&b, Some(5))).is_zero())
        };
        match run()? {
            true => Ok(()),
            false => Err(fmt_inputs(&[("G", g), ("f", f1), ("g", f2)])),
        }
    }));

    let pairs: Vec<_> = (0..50)
        .map(|_| (gen.poly_with(3, 1, 3, false), gen.poly_with(4, 1, 4, false)))
        .collect();
    cases.push(run_case("covariance.classical_covariance", exec, &pairs, |(g, f)| {
        let d = covariance_defect_series(BracketKind::Classical, g, f, Order::Truncated(6)).map_err(|e| e.to_string())?;
        if d.is_zero() {
            Ok(())
        } else {
            Err(format!("{}: defect series {:?}", fmt_inputs(&[("G", g), ("f", f)]), d))
        }
    }));

    let mut quads: Vec<(PhasePoly, PhasePoly)> = sp2.iter().map(|g| (g.symbol.clone(), PhasePoly::p().pow(3))).collect();
    for _ in 0..20 {
        quads.push((gen.quadratic(), gen.poly_with(4, 1, 4, false)));
    }
    cases.push(run_case("covariance.quadratic_moyal_covariance", exec, &quads, |(g, f)| {
        let d = covariance_defect_series(BracketKind::MoyalNormalized, g, f, Order::Truncated(8)).map_err(|e| e.to_string())?;
        match d.coeffs().iter().position(|c| !c.is_zero()) {
            None => Ok(()),
            Some(k) => Err(format!(
                "{}: c^{} coefficient {}",
                fmt_inputs(&[("G", g), ("f", f)]),
                k,
                format_poly(&d.coeff(k))
            )),
        }
    }));

    cases.push(run_case("covariance.quartic_violation", exec, &[()], |_| {
        let v = power_potential(4);
        let d = covariance_defect(BracketKind::MoyalNormalized, &v, &GaussianRational::one(), &PhasePoly::p().pow(3), Order::Exact)
            .map_err(|e| e.to_string())?;
        let expected = parse_poly("-(3/2)*hbar^2*q").expect("literal");
        expect_eq("defect(q^4/4, p^3)".into(), &d, &expected)?;
        match d.min_hbar_power() {
            Some(2) => Ok(()),
            other => Err(format!("lowest hbar power {:?}", other)),
        }
    }));

    let pairs: Vec<_> = (0..100).map(|_| (gen.poly_with(5, 0, 5, false), gen.poly_with(5, 0, 5, false))).collect();
    cases.push(run_case("covariance.normalized_minus_classical_even", exec, &pairs, |(g, f)| {
        let rest = bracket_apply(BracketKind::MoyalNormalized, g, f) - bracket_apply(BracketKind::Classical, g, f);
        match rest.hbar_powers().iter().find(|&&k| k < 2 || k % 2 == 1) {
            None => Ok(()),
            Some(k) => Err(format!("{}: hbar^{} in {}", fmt_inputs(&[("G", g), ("f", f)]), k, format_poly(&rest))),
        }
    }));

    // kick and drift generators are nilpotent on polynomials, so the group
    // law can be checked with exact flows
    let kinds = [BracketKind::Classical, BracketKind::MoyalRaw, BracketKind::MoyalNormalized];
    let groups: Vec<_> = (0..30)
        .map(|k| {
            let g = if k % 2 == 0 {
                gen.potential(4)
            } else {
                PhasePoly::p().pow(2).scale_rational(&gen.nonzero_rational())
            };
            let f = gen.poly_with(4, 1, 4, false);
            (kinds[k % 3], g, f, gr(&gen.rational()), gr(&gen.rational()))
        })
        .collect();
    let max_iter = cfg.max_iter;
    cases.push(run_case("covariance.flow_group_law", exec, &groups, |(kind, g, f, c1, c2)| {
        let gen = Generator::new(*kind, g.clone()).with_max_iter(max_iter);
        let err = |e: crate::lie::FlowError| e.to_string();
        let inner = gen.flow(c2, f, Order::Exact).map_err(err)?;
        let lhs = gen.flow(c1, &inner, Order::Exact).map_err(err)?;
        let rhs = gen.flow(&(c1 + c2), f, Order::Exact).map_err(err)?;
        expect_eq(format!("{:?} {}, c1 = {}, c2 = {}", kind, fmt_inputs(&[("G", g), ("f", f)]), c1, c2), &lhs, &rhs)
    }));

    let star_cov: Vec<_> = star_exp_generators()
        .into_iter()
        .flat_map(|a| {
            let fs = star_exp_observables();
            fs.iter()
                .flat_map(|f| fs.iter().map(move |g| (f.clone(), g.clone())))
                .map(move |(f, g)| (a.clone(), f, g))
                .collect::<Vec<_>>()
        })
        .collect();
    cases.push(run_case("covariance.star_covariance", exec, &star_cov, |(a, f, g)| {
        let d = star_covariance_defect_series(a, f, g, Order::Truncated(6)).map_err(|e| e.to_string())?;
        if d.is_zero() {
            Ok(())
        } else {
            Err(format!("{}: defect series {:?}", fmt_inputs(&[("A", a), ("f", f), ("g", g)]), d))
        }
    }));

    cases
}

/// `(p² + q²)/2`, `q³/3`, `pq/2`
pub fn star_exp_generators() -> Vec<PhasePoly> {
    ["(1/2)*p^2 + (1/2)*q^2", "(1/3)*q^3", "(1/2)*p*q"]
        .iter()
        .map(|s| parse_poly(s).expect("literal"))
        .collect()
}

/// `q`, `p`, `p²q`
pub fn star_exp_observables() -> Vec<PhasePoly> {
    ["q", "p", "p^2*q"].iter().map(|s| parse_poly(s).expect("literal")).collect()
}

/// `q³/3`, `q⁴/4`, `q⁵/5`
pub fn kick_potentials() -> Vec<PhasePoly> {
    (3..=5).map(power_potential).collect()
}

fn random_system(gen: &mut PolyGen, potential: PhasePoly) -> KickedSystem {
    KickedSystem::new(potential, gen.nonzero_rational(), gen.nonzero_rational()).expect("q-only potential")
}

fn kick(cfg: &VerifyConfig) -> Vec<CaseResult> {
    let mut gen = PolyGen::new(cfg.seed.wrapping_add(2));
    let exec = cfg.exec;
    let mut cases = Vec::new();

    let mut systems: Vec<KickedSystem> = kick_potentials().into_iter().map(|v| random_system(&mut gen, v)).collect();
    for _ in 0..12 {
        let v = gen.potential(6);
        systems.push(random_system(&mut gen, v));
    }
    let describe = |s: &KickedSystem| format!("V = {}, lambda = {}, T = {}", format_poly(s.potential()), s.lambda(), s.period());

    cases.push(run_case("kick.coordinates_match_classical", exec, &systems, |s| {
        for f in [PhasePoly::q(), PhasePoly::p()] {
            expect_eq(
                format!("{}, f = {}", describe(s), format_poly(&f)),
                &s.quantum_step_observable(&f),
                &s.classical_step_observable(&f),
            )?;
        }
        Ok(())
    }));

    cases.push(run_case("kick.step_is_canonical", exec, &systems, |s| {
        let (q1, p1) = s.step_images();
        expect_zero(describe(s), &symplectic_defect(&q1, &p1, CanonicalKind::Classical))?;
        let qq = s.quantum_step_observable(&PhasePoly::q());
        let qp = s.quantum_step_observable(&PhasePoly::p());
        expect_zero(describe(s), &symplectic_defect(&qq, &qp, CanonicalKind::Quantum))
    }));

    let p3q = PhasePoly::p().pow(3) * PhasePoly::q();
    let hbar2 = PhasePoly::hbar().pow(2);
    let named: Vec<KickedSystem> = systems.iter().take(3).cloned().collect();

    // −(3/2) λ ħ² V'''(q − T p), as printed
    cases.push(run_case("kick.p3q_defect_printed_formula", exec, &named, |s| {
        let printed = (&hbar2 * &third_derivative_at_drift(s.potential(), s.period()))
            .scale_rational(&(s.lambda() * frac(-3, 2)));
        expect_eq(describe(s), &s.quantum_classical_defect(&p3q), &printed)
    }));

    // −(λħ²/4)(q − T p) V'''(q − T p)
    cases.push(run_case("kick.p3q_defect_closed_form", exec, &systems, |s| {
        let q_next = PhasePoly::q() - PhasePoly::p().scale_rational(s.period());
        let derived = (&(&hbar2 * &q_next) * &third_derivative_at_drift(s.potential(), s.period()))
            .scale_rational(&(s.lambda() * frac(-1, 4)));
        expect_eq(describe(s), &s.quantum_classical_defect(&p3q), &derived)
    }));

    let gauges: Vec<_> = systems.iter().map(|s| (s.clone(), gen.rational())).collect();
    cases.push(run_case("kick.gauge_defect_formula", exec, &gauges, |(s, a)| {
        let expected = (&hbar2 * &third_derivative_at_drift(s.potential(), s.period()))
            .scale_rational(&(a * s.lambda() * frac(-1, 4)));
        let direct = s.quantum_classical_defect(&(PhasePoly::q() + PhasePoly::p().pow(3).scale_rational(a)));
        let ctx = format!("{}, a = {}", describe(s), a);
        expect_eq(ctx.clone(), &s.gauge_defect(a), &expected)?;
        expect_eq(ctx, &direct, &expected)
    }));

    let low: Vec<_> = systems.iter().map(|s| (s.clone(), gen.poly_with(2, 2, 6, false))).collect();
    cases.push(run_case("kick.low_degree_observables_exact", exec, &low, |(s, f)| {
        expect_zero(format!("{}, f = {}", describe(s), format_poly(f)), &s.quantum_classical_defect(f))
    }));

    let kappa_pairs = [
        ((frac(1, 1), frac(1, 1)), (frac(2, 1), frac(1, 2))),
        ((frac(3, 1), frac(2, 1)), (frac(6, 1), frac(1, 1))),
        ((frac(1, 2), frac(-4, 3)), (frac(-1, 3), frac(2, 1))),
    ];
    cases.push(run_case("kick.defect_not_a_function_of_kappa", exec, &kappa_pairs, |(a, b)| {
        let v = power_potential(4);
        let sa = KickedSystem::new(v.clone(), a.0.clone(), a.1.clone()).expect("q-only potential");
        let sb = KickedSystem::new(v, b.0.clone(), b.1.clone()).expect("q-only potential");
        if sa.kappa() != sb.kappa() {
            return Err(format!("kappa differs: {} vs {}", sa.kappa(), sb.kappa()));
        }
        let (da, db) = (sa.quantum_classical_defect(&p3q), sb.quantum_classical_defect(&p3q));
        if da == db {
            Err(format!("{} and {} give the same defect {}", describe(&sa), describe(&sb), format_poly(&da)))
        } else {
            Ok(())
        }
    }));

    cases.push(run_case("kick.classical_kappa_scaling", exec, &systems, |s| {
        if s.period().is_zero() {
            return Ok(());
        }
        // p̃ = T p, written with the symbol p
        let p_orig = PhasePoly::p().scale_rational(&(BigRational::one() / s.period()));
        let (q1, p1) = s.step_images();
        let q_scaled = q1.subst(&PhasePoly::q(), &p_orig);
        let p_scaled = p1.subst(&PhasePoly::q(), &p_orig).scale_rational(s.period());
        let q_want = PhasePoly::q() - PhasePoly::p();
        let p_want = PhasePoly::p() + s.force().subst(&q_want, &PhasePoly::p()).scale_rational(&s.kappa());
        expect_eq(describe(s), &q_scaled, &q_want)?;
        expect_eq(describe(s), &p_scaled, &p_want)
    }));

    let traj = trajectory_cases(&mut gen);
    cases.push(run_case("kick.trajectory_float_matches_exact", exec, &traj, |(s, start, steps)| {
        check_trajectory(s, start, *steps).map_err(|e| format!("{}: {}", describe(s), e))
    }));

    cases
}

type TrajectoryCase = (KickedSystem, (BigRational, BigRational), usize);

/// Elliptic quadratic kicks (`0 < λT < 4` for `V = q²/2`) run 50 steps; nonlinear
/// potentials run a few steps since exact rationals grow with the degree.
fn trajectory_cases(gen: &mut PolyGen) -> Vec<TrajectoryCase> {
    let mut out = Vec::new();
    let half_sq = PhasePoly::q().pow(2).scale(&GaussianRational::ratio(1, 2));
    while out.len() < 8 {
        let (lam, t) = (gen.nonzero_rational().abs(), gen.nonzero_rational().abs());
        let prod = &lam * &t;
        if prod >= frac(4, 1) {
            continue;
        }
        let s = KickedSystem::new(half_sq.clone(), lam, t).expect("q-only potential");
        out.push((s, (gen.rational(), gen.rational()), 50));
    }
    for v in kick_potentials() {
        let s = KickedSystem::new(v, frac(1, 4), frac(1, 2)).expect("q-only potential");
        out.push((s, (gen.rational() / frac(2, 1), gen.rational() / frac(2, 1)), 6));
    }
    out
}

fn check_trajectory(s: &KickedSystem, start: &(BigRational, BigRational), steps: usize) -> Check {
    let exact = s.trajectory(&PhasePoint::exact(start.0.clone(), start.1.clone(), BigRational::zero()), steps);
    let fstart = PhasePoint::<Complex64>::new(
        GaussianRational::from_real(start.0.clone()).to_complex64(),
        GaussianRational::from_real(start.1.clone()).to_complex64(),
        Complex64::new(0.0, 0.0),
    );
    let float = s.trajectory(&fstart, steps);
    for (n, (e, f)) in exact.iter().zip(&float).enumerate() {
        let (eq, ep) = (e.q.to_complex64(), e.p.to_complex64());
        let err = ((f.q - eq).norm_sqr() + (f.p - ep).norm_sqr()).sqrt();
        let scale = (eq.norm_sqr() + ep.norm_sqr()).sqrt().max(f64::MIN_POSITIVE);
        if err > 1e-9 * scale && err > 1e-300 {
            return Err(format!("step {}: exact ({}, {}) vs float ({}, {})", n, e.q, e.p, f.q.re, f.p.re));
        }
    }
    Ok(())
}

fn starexp(cfg: &VerifyConfig) -> Vec<CaseResult> {
    let mut gen = PolyGen::new(cfg.seed.wrapping_add(3));
    let exec = cfg.exec;
    let mut cases = Vec::new();

    let mut pairs: Vec<(PhasePoly, PhasePoly, usize)> = Vec::new();
    for a in star_exp_generators() {
        for f in star_exp_observables() {
            pairs.push((a.clone(), f, 6));
        }
    }
    for _ in 0..15 {
        pairs.push((gen.poly_with(3, 1, 3, false), gen.poly_with(3, 1, 3, false), 4));
    }
    cases.push(run_case("starexp.conjugation_matches_flow", exec, &pairs, |(a, f, order)| {
        let d = mlt_equivalence_defect_series(a, f, *order).map_err(|e| e.to_string())?;
        match d.coeffs().iter().position(|c| !c.is_zero()) {
            None => Ok(()),
            Some(k) => Err(format!(
                "{}, order {}: c^{} coefficient {}",
                fmt_inputs(&[("A", a), ("f", f)]),
                order,
                k,
                format_poly(&d.coeff(k))
            )),
        }
    }));

    let groups: Vec<_> = (0..20)
        .map(|_| (gen.poly_with(3, 1, 3, false), gen.coefficient(), gen.coefficient()))
        .collect();
    cases.push(run_case("starexp.group_property", exec, &groups, |(a, x1, x2)| {
        // E(s x1) ⋆ E(s x2) = E(s (x1 + x2)) as series in s through order 4
        let n = 4;
        let terms = star_exponential_terms(a, n);
        let lhs = terms.rescale(x1).product_with(&terms.rescale(x2), Some(n), star);
        let rhs = terms.rescale(&(x1 + x2));
        if lhs.sub(&rhs).is_zero() {
            Ok(())
        } else {
            Err(format!("A = {}, c1 = {}, c2 = {}", format_poly(a), x1, x2))
        }
    }));

    let unitary: Vec<_> = (0..20)
        .map(|_| (gen.poly_with(3, 0, 3, true), gen.poly_with(3, 1, 4, true), gen.rational()))
        .collect();
    cases.push(run_case("starexp.unitarity_shadow", exec, &unitary, |(a, f, gamma)| {
        let c = GaussianRational::new(BigRational::zero(), gamma.clone());
        let out = star_conjugate(a, &c, f, 4);
        if out.has_real_coefficients() {
            Ok(())
        } else {
            Err(format!("{}, gamma = {}: {}", fmt_inputs(&[("A", a), ("f", f)]), gamma, format_poly(&out)))
        }
    }));

    cases.push(run_case("starexp.oscillator_square", exec, &[()], |_| {
        let h0 = star_exp_generators().remove(0);
        let expected = &h0 * &h0 - PhasePoly::hbar().pow(2).scale(&GaussianRational::ratio(1, 4));
        expect_eq("H0 star H0".into(), &star_power(&h0, 2), &expected)
    }));

    cases
}
