//! Periodically kicked Hamiltonians `p²/2 + λ V(q) δ_T(t)`.
//!
//! One period acts on observables as the kick flow followed by the drift
//! flow (the rightmost exponential acts first), which on coordinates gives
//! `q' = q − T p`, `p' = p + λ V'(q')`.

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::coeffs::GaussianRational;
use crate::exec::{map_slice, Execution};
use crate::lie::{BracketKind, Generator, Order, DEFAULT_MAX_ITER};
use crate::poly::{PhasePoint, PhasePoly, Scalar, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KickError {
    #[error("potential must depend on q only, got {0}")]
    InvalidPotential(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KickedSystem {
    potential: PhasePoly,
    lambda: BigRational,
    period: BigRational,
}

impl KickedSystem {
    pub fn new(potential: PhasePoly, lambda: BigRational, period: BigRational) -> Result<Self, KickError> {
        let q_only = potential.terms().all(|(m, _)| m.p == 0 && m.hbar == 0);
        if !q_only {
            return Err(KickError::InvalidPotential(potential.to_string()));
        }
        Ok(KickedSystem {
            potential,
            lambda,
            period,
        })
    }

    pub fn potential(&self) -> &PhasePoly {
        &self.potential
    }

    pub fn lambda(&self) -> &BigRational {
        &self.lambda
    }

    pub fn period(&self) -> &BigRational {
        &self.period
    }

    /// `κ = T λ`, the only combination the classical map depends on after
    /// rescaling `p̃ = T p`.
    pub fn kappa(&self) -> BigRational {
        &self.period * &self.lambda
    }

    /// `V'(q)`
    pub fn force(&self) -> PhasePoly {
        self.potential.diff(Var::Q)
    }

    /// `(q − T p, p + λ V'(q − T p))`
    pub fn step_images(&self) -> (PhasePoly, PhasePoly) {
        let q_next = PhasePoly::q() - PhasePoly::p().scale_rational(&self.period);
        let kicked = self.force().subst(&q_next, &PhasePoly::p()).scale_rational(&self.lambda);
        (q_next, PhasePoly::p() + kicked)
    }

    pub fn classical_step_point<S: Scalar>(&self, pt: &PhasePoint<S>) -> PhasePoint<S> {
        let t = S::from_coeff(&self.period.clone().into());
        let lam = S::from_coeff(&self.lambda.clone().into());
        let q = pt.q.clone() - t * pt.p.clone();
        let at = PhasePoint::new(q.clone(), pt.p.clone(), pt.hbar.clone());
        let p = pt.p.clone() + lam * self.force().eval(&at);
        PhasePoint::new(q, p, pt.hbar.clone())
    }

    /// `n + 1` points starting with `start`.
    pub fn trajectory<S: Scalar>(&self, start: &PhasePoint<S>, n: usize) -> Vec<PhasePoint<S>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(start.clone());
        for _ in 0..n {
            let next = self.classical_step_point(out.last().expect("nonempty"));
            out.push(next);
        }
        out
    }

    /// Independent trajectories for several starting points.
    pub fn ensemble<S>(&self, starts: &[PhasePoint<S>], n: usize, exec: Execution) -> Vec<Vec<PhasePoint<S>>>
    where
        S: Scalar + Send + Sync,
    {
        map_slice(exec, starts, |s| self.trajectory(s, n))
    }

    fn exact_generator(&self, symbol: PhasePoly, f: &PhasePoly) -> Generator {
        // kick lowers the p-degree and drift lowers the q-degree, so the
        // series stops after at most deg f + 1 brackets
        let cap = DEFAULT_MAX_ITER.max(f.degree() as usize + 2);
        Generator::new(BracketKind::MoyalNormalized, symbol).with_max_iter(cap)
    }

    /// Exact one-period quantum (Moyal-Lie) evolution of an observable.
    pub fn quantum_step_observable(&self, f: &PhasePoly) -> PhasePoly {
        let kick = self
            .exact_generator(self.potential.clone(), f)
            .flow(&self.lambda.clone().into(), f, Order::Exact)
            .expect("kick flow is nilpotent on polynomials");
        let drift_symbol = PhasePoly::p().pow(2).scale(&GaussianRational::ratio(1, 2));
        self.exact_generator(drift_symbol, &kick)
            .flow(&self.period.clone().into(), &kick, Order::Exact)
            .expect("drift flow is nilpotent on polynomials")
    }

    /// Covariant classical evolution `f(q', p')`.
    pub fn classical_step_observable(&self, f: &PhasePoly) -> PhasePoly {
        let (q_next, p_next) = self.step_images();
        f.subst(&q_next, &p_next)
    }

    /// Quantum minus classical one-period evolution.
    pub fn quantum_classical_defect(&self, f: &PhasePoly) -> PhasePoly {
        self.quantum_step_observable(f) - self.classical_step_observable(f)
    }

    /// One-period defect of the gauge-transformed coordinate `Q = q + a p³`.
    pub fn gauge_defect(&self, a: &BigRational) -> PhasePoly {
        if a.is_zero() {
            return PhasePoly::zero();
        }
        self.quantum_classical_defect(&PhasePoly::p().pow(3)).scale_rational(a)
    }

    /// `steps` periods of observable evolution.
    pub fn evolve_observable(&self, f: &PhasePoly, steps: usize, quantum: bool) -> PhasePoly {
        (0..steps).fold(f.clone(), |acc, _| {
            if quantum {
                self.quantum_step_observable(&acc)
            } else {
                self.classical_step_observable(&acc)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_poly;
    use num_complex::Complex64;

    fn poly(s: &str) -> PhasePoly {
        parse_poly(s).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn exact_pt(q: i64, p: i64) -> PhasePoint<GaussianRational> {
        PhasePoint::exact(r(q, 1), r(p, 1), r(0, 1))
    }

    #[test]
    fn rejects_momentum_dependent_potential() {
        assert!(KickedSystem::new(poly("q^2*p"), r(1, 1), r(1, 1)).is_err());
        assert!(KickedSystem::new(poly("hbar*q"), r(1, 1), r(1, 1)).is_err());
        let sys = KickedSystem::new(poly("(1/4)*q^4"), r(3, 2), r(2, 3)).unwrap();
        assert_eq!(sys.kappa(), r(1, 1));
    }

    #[test]
    fn classical_point_steps() {
        let sys = KickedSystem::new(poly("(1/4)*q^4"), r(1, 1), r(1, 1)).unwrap();
        assert_eq!(sys.classical_step_point(&exact_pt(1, 1)), exact_pt(0, 1));
        let free = KickedSystem::new(poly("(1/4)*q^4"), r(0, 1), r(2, 1)).unwrap();
        assert_eq!(free.classical_step_point(&exact_pt(3, 1)), exact_pt(1, 1));
        let kick_only = KickedSystem::new(poly("(1/3)*q^3"), r(2, 1), r(0, 1)).unwrap();
        assert_eq!(kick_only.classical_step_point(&exact_pt(3, 1)), exact_pt(3, 19));
    }

    #[test]
    fn trajectory_examples() {
        let sys = KickedSystem::new(poly("q^2"), r(0, 1), r(1, 1)).unwrap();
        assert_eq!(sys.trajectory(&exact_pt(0, 1), 0), vec![exact_pt(0, 1)]);
        assert_eq!(
            sys.trajectory(&exact_pt(0, 1), 2),
            vec![exact_pt(0, 1), exact_pt(-1, 1), exact_pt(-2, 1)]
        );
        let quartic = KickedSystem::new(poly("(1/4)*q^4"), r(1, 3), r(1, 2)).unwrap();
        let start = exact_pt(1, 2);
        assert_eq!(quartic.trajectory(&start, 1)[1], quartic.classical_step_point(&start));
        let fstart = PhasePoint::float(1.0, 2.0, 0.0).unwrap();
        let f1 = &quartic.trajectory(&fstart, 1)[1];
        let e1 = &quartic.trajectory(&start, 1)[1];
        assert!((f1.p - e1.p.to_complex64()).norm() < 1e-12);
        let _: &Complex64 = &f1.q;
    }

    #[test]
    fn quantum_step_on_coordinates() {
        let sys = KickedSystem::new(poly("(1/4)*q^4 - 2*q^3"), r(2, 3), r(5, 7)).unwrap();
        let (q1, p1) = sys.step_images();
        assert_eq!(sys.quantum_step_observable(&PhasePoly::q()), q1);
        assert_eq!(sys.quantum_step_observable(&PhasePoly::p()), p1);
        assert_eq!(q1, poly("q - (5/7)*p"));
        assert_eq!(sys.quantum_step_observable(&PhasePoly::one()), PhasePoly::one());
        assert_eq!(sys.classical_step_observable(&PhasePoly::one()), PhasePoly::one());
        assert_eq!(sys.classical_step_observable(&poly("p^2")), p1.pow(2));
    }

    #[test]
    fn quartic_defects() {
        let sys = KickedSystem::new(poly("(1/4)*q^4"), r(3, 1), r(2, 1)).unwrap();
        // −(λħ²/4)(q − Tp)·V'''(q − Tp) with V''' = 6q
        assert_eq!(sys.quantum_classical_defect(&poly("p^3*q")), poly("-(9/2)*hbar^2*(q - 2*p)^2"));
        assert_eq!(sys.gauge_defect(&r(5, 1)), poly("-(45/2)*hbar^2*(q - 2*p)"));
        assert!(sys.gauge_defect(&r(0, 1)).is_zero());
        assert!(sys.quantum_classical_defect(&poly("p^2 - q*p + 3*q")).is_zero());
    }

    #[test]
    fn multi_step_matches_iterated_map() {
        let sys = KickedSystem::new(poly("(1/3)*q^3"), r(1, 2), r(1, 1)).unwrap();
        let two = sys.evolve_observable(&PhasePoly::q(), 2, true);
        let (q1, p1) = sys.step_images();
        assert_eq!(two, q1.subst(&q1, &p1));
        assert_eq!(sys.evolve_observable(&PhasePoly::q(), 2, false), two);
    }
}
