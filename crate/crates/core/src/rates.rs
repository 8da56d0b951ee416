//! Exact rate calculus for criteria whose second-derivative matrix is singular.
//!
//! A population criterion that behaves like `ψ₁(a) + ψ₂(b) + Σ φᵢ(a, b)` near its
//! minimum, with `ψ₁` homogeneous of degree `α`, `ψ₂` of degree `β` and `φᵢ`
//! bihomogeneous of degrees `(γᵢ, ηᵢ)`, yields estimator rates `n^{-τ_a}` and
//! `n^{-τ_b}` for the two blocks. All exponents are kept as exact rationals so the
//! coupled/decoupled classification is an exact comparison.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational exponent.
pub type Exponent = Rational64;

/// Parse `"3"`, `"-1/2"` or `"2/4"` into a reduced rational.
pub fn parse_exponent(s: &str) -> Result<Exponent> {
    let t = s.trim();
    let r = Exponent::from_str(t).map_err(|_| Error::ParseFraction(s.to_string()))?;
    if r.denom().is_zero() {
        return Err(Error::ParseFraction(s.to_string()));
    }
    Ok(r)
}

/// Parse a cross term written `gamma:eta`, e.g. `2/1:1/1` or `2:1`.
pub fn parse_term(s: &str) -> Result<CrossTerm> {
    let (g, e) = s
        .split_once(':')
        .ok_or_else(|| Error::ParseFraction(s.to_string()))?;
    Ok(CrossTerm {
        gamma: parse_exponent(g)?,
        eta: parse_exponent(e)?,
    })
}

/// Bihomogeneous cross term `φ(λ₁a, λ₂b) = λ₁^γ λ₂^η φ(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossTerm {
    pub gamma: Exponent,
    pub eta: Exponent,
}

impl CrossTerm {
    pub fn new(gamma: Exponent, eta: Exponent) -> Self {
        Self { gamma, eta }
    }
}

/// Exponent profile of a population criterion near its minimizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateSpec {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub terms: Vec<CrossTerm>,
}

impl RateSpec {
    pub fn new(alpha: Exponent, beta: Exponent, terms: Vec<CrossTerm>) -> Self {
        Self { alpha, beta, terms }
    }

    pub fn validate(&self) -> Result<()> {
        let one = Exponent::one();
        if self.beta <= one {
            return Err(Error::InvalidRateSpec(format!(
                "requires beta > 1, got beta = {}",
                self.beta
            )));
        }
        if self.alpha <= self.beta {
            return Err(Error::InvalidRateSpec(format!(
                "requires alpha > beta, got alpha = {} and beta = {}",
                self.alpha, self.beta
            )));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.gamma <= Exponent::zero() || t.eta <= Exponent::zero() {
                return Err(Error::InvalidRateSpec(format!(
                    "term {i}: exponents must be positive, got ({}, {})",
                    t.gamma, t.eta
                )));
            }
            if t.eta >= self.beta {
                return Err(Error::InvalidRateSpec(format!(
                    "term {i}: requires beta > eta, got eta = {} with beta = {}",
                    t.eta, self.beta
                )));
            }
            // a sign-changing term must be dominated by ‖a‖^α + ‖b‖^β near the origin
            if t.gamma / self.alpha + t.eta / self.beta < Exponent::one() {
                return Err(Error::InvalidRateSpec(format!(
                    "term {i}: requires gamma/alpha + eta/beta >= 1 for the criterion to stay \
                     bounded below by |a|^alpha + |b|^beta, got ({}, {})",
                    t.gamma, t.eta
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `α·τ_a = β·τ_b`: the limit is a joint argmin over both blocks.
    Coupled,
    /// `α·τ_a < β·τ_b`: the slow block is solved first, the fast block given it.
    Decoupled,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Coupled => write!(f, "coupled"),
            Regime::Decoupled => write!(f, "decoupled"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RateResult {
    #[serde(serialize_with = "ser_ratio")]
    pub tau_a: Exponent,
    #[serde(serialize_with = "ser_ratio")]
    pub tau_b: Exponent,
    #[serde(serialize_with = "ser_ratio")]
    pub lambda0: Exponent,
    #[serde(serialize_with = "ser_ratios")]
    pub lambdas: Vec<Exponent>,
    /// Positions in `RateSpec::terms` whose `λᵢ` attains `τ_b`.
    pub active_terms: Vec<usize>,
    /// Whether `λ₀` attains `τ_b` (the linear noise term survives in the limit).
    pub lambda0_active: bool,
    pub regime: Regime,
}

fn ser_ratio<S: Serializer>(r: &Exponent, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fraction_string(r))
}

fn ser_ratios<S: Serializer>(v: &[Exponent], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fraction_string))
}

/// `"p/q"` with the sign on the numerator; integers keep an explicit `/1`-free form.
pub fn fraction_string(r: &Exponent) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rates for the slow block `a` and fast block `b`, with the regime dichotomy.
pub fn compute_theorem3_rates(spec: &RateSpec) -> Result<RateResult> {
    spec.validate()?;
    let one = Exponent::one();
    let two = Exponent::from_integer(2);

    let tau_a = one / (two * (spec.alpha - one));
    let lambda0 = one / (two * (spec.beta - one));
    let lambdas: Vec<Exponent> = spec
        .terms
        .iter()
        .map(|t| tau_a * t.gamma / (spec.beta - t.eta))
        .collect();

    let tau_b = lambdas.iter().copied().fold(lambda0, |m, l| m.min(l));
    let active_terms = lambdas
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == tau_b)
        .map(|(i, _)| i)
        .collect();
    let regime = if spec.alpha * tau_a == spec.beta * tau_b {
        Regime::Coupled
    } else {
        Regime::Decoupled
    };

    Ok(RateResult {
        tau_a,
        tau_b,
        lambda0,
        lambdas,
        active_terms,
        lambda0_active: lambda0 == tau_b,
        regime,
    })
}

/// Noise term bounded by `n^{-η} ‖(a, b)‖^γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseTerm {
    pub gamma: Exponent,
    pub eta: Exponent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma1Spec {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub noise_terms: Vec<NoiseTerm>,
}

impl Lemma1Spec {
    pub fn validate(&self) -> Result<()> {
        if self.alpha <= Exponent::zero() || self.beta <= Exponent::zero() {
            return Err(Error::InvalidRateSpec(
                "alpha and beta must be positive".into(),
            ));
        }
        if self.alpha < self.beta {
            return Err(Error::InvalidRateSpec(format!(
                "requires alpha >= beta, got alpha = {} and beta = {}",
                self.alpha, self.beta
            )));
        }
        if self.noise_terms.is_empty() {
            return Err(Error::InvalidRateSpec(
                "at least one noise term is required".into(),
            ));
        }
        for (i, t) in self.noise_terms.iter().enumerate() {
            if t.gamma < Exponent::zero() || t.eta < Exponent::zero() {
                return Err(Error::InvalidRateSpec(format!(
                    "noise term {i}: exponents must be nonnegative"
                )));
            }
            if t.gamma >= self.alpha {
                return Err(Error::InvalidRateSpec(format!(
                    "noise term {i}: requires gamma < alpha, got gamma = {} with alpha = {}",
                    t.gamma, self.alpha
                )));
            }
        }
        Ok(())
    }
}

/// Returns `(τ_a, b_rate)` where `‖a_n‖ = O(n^{-τ_a})` and `‖b_n‖ = O(n^{-b_rate})`.
pub fn compute_lemma1_rate(spec: &Lemma1Spec) -> Result<(Exponent, Exponent)> {
    spec.validate()?;
    let tau_a = spec
        .noise_terms
        .iter()
        .map(|t| t.eta / (spec.alpha - t.gamma))
        .min()
        .expect("validated nonempty");
    Ok((tau_a, spec.alpha * tau_a / spec.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Exponent {
        Exponent::new(n, d)
    }

    fn term(g: i64, e: i64) -> CrossTerm {
        CrossTerm::new(q(g, 1), q(e, 1))
    }

    #[test]
    fn quartic_plus_quadratic_is_decoupled() {
        let r = compute_theorem3_rates(&RateSpec::new(q(4, 1), q(2, 1), vec![])).unwrap();
        assert_eq!(r.tau_a, q(1, 6));
        assert_eq!(r.tau_b, q(1, 2));
        assert_eq!(r.lambda0, q(1, 2));
        assert!(r.lambda0_active);
        assert!(r.active_terms.is_empty());
        assert_eq!(r.regime, Regime::Decoupled);
    }

    #[test]
    fn a_squared_b_term_couples() {
        let r = compute_theorem3_rates(&RateSpec::new(q(4, 1), q(2, 1), vec![term(2, 1)])).unwrap();
        assert_eq!(r.tau_a, q(1, 6));
        assert_eq!(r.lambdas, vec![q(1, 3)]);
        assert_eq!(r.tau_b, q(1, 3));
        assert_eq!(r.active_terms, vec![0]);
        assert!(!r.lambda0_active);
        assert_eq!(r.regime, Regime::Coupled);
    }

    #[test]
    fn a_cubed_b_term_stays_decoupled() {
        let r = compute_theorem3_rates(&RateSpec::new(q(4, 1), q(2, 1), vec![term(3, 1)])).unwrap();
        assert_eq!(r.tau_a, q(1, 6));
        assert_eq!(r.lambdas, vec![q(1, 2)]);
        assert_eq!(r.tau_b, q(1, 2));
        assert_eq!(r.active_terms, vec![0]);
        assert!(r.lambda0_active);
        assert_eq!(r.regime, Regime::Decoupled);
    }

    #[test]
    fn kmeans_profile() {
        let spec = RateSpec::new(q(3, 1), q(2, 1), vec![term(2, 1); 3]);
        let r = compute_theorem3_rates(&spec).unwrap();
        assert_eq!(r.tau_a, q(1, 4));
        assert_eq!(r.tau_b, q(1, 2));
        assert_eq!(r.lambdas, vec![q(1, 2); 3]);
        assert_eq!(r.active_terms, vec![0, 1, 2]);
        assert!(r.lambda0_active);
        assert_eq!(r.regime, Regime::Decoupled);
    }

    #[test]
    fn rejects_violated_hypotheses() {
        let e = compute_theorem3_rates(&RateSpec::new(q(2, 1), q(3, 1), vec![])).unwrap_err();
        assert!(e.to_string().contains("alpha > beta"), "{e}");
        let e = compute_theorem3_rates(&RateSpec::new(q(3, 1), q(1, 1), vec![])).unwrap_err();
        assert!(e.to_string().contains("beta > 1"), "{e}");
        let e =
            compute_theorem3_rates(&RateSpec::new(q(3, 1), q(2, 1), vec![term(1, 2)])).unwrap_err();
        assert!(e.to_string().contains("beta > eta"), "{e}");
        let e =
            compute_theorem3_rates(&RateSpec::new(q(4, 1), q(2, 1), vec![term(1, 1)])).unwrap_err();
        assert!(e.to_string().contains("gamma/alpha + eta/beta"), "{e}");
    }

    #[test]
    fn lemma1_examples() {
        let spec = |a: Exponent, b: Exponent| Lemma1Spec {
            alpha: a,
            beta: b,
            noise_terms: vec![NoiseTerm {
                gamma: q(1, 1),
                eta: q(1, 2),
            }],
        };
        assert_eq!(
            compute_lemma1_rate(&spec(q(2, 1), q(1, 2))).unwrap(),
            (q(1, 2), q(2, 1))
        );
        assert_eq!(
            compute_lemma1_rate(&spec(q(2, 1), q(2, 1))).unwrap(),
            (q(1, 2), q(1, 2))
        );
        assert_eq!(
            compute_lemma1_rate(&spec(q(3, 1), q(2, 1))).unwrap(),
            (q(1, 4), q(3, 8))
        );
    }

    #[test]
    fn lemma1_rejections() {
        let bad_gamma = Lemma1Spec {
            alpha: q(2, 1),
            beta: q(1, 1),
            noise_terms: vec![NoiseTerm {
                gamma: q(2, 1),
                eta: q(1, 2),
            }],
        };
        assert!(compute_lemma1_rate(&bad_gamma).is_err());
        let bad_order = Lemma1Spec {
            alpha: q(1, 1),
            beta: q(2, 1),
            noise_terms: vec![NoiseTerm {
                gamma: q(0, 1),
                eta: q(1, 2),
            }],
        };
        assert!(compute_lemma1_rate(&bad_order).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_exponent("3").unwrap(), q(3, 1));
        assert_eq!(parse_exponent(" 2/4 ").unwrap(), q(1, 2));
        assert!(parse_exponent("1/0").is_err());
        assert!(parse_exponent("x").is_err());
        assert_eq!(parse_term("2/1:1/1").unwrap(), term(2, 1));
        assert!(parse_term("2/1").is_err());
        assert_eq!(fraction_string(&q(-1, 6)), "-1/6");
        assert_eq!(fraction_string(&q(4, 2)), "2");
    }

    fn small_ratio(lo: i64, hi: i64) -> impl Strategy<Value = Exponent> {
        (lo..hi, 1i64..7).prop_map(|(n, d)| Exponent::new(n, d))
    }

    fn valid_spec() -> impl Strategy<Value = RateSpec> {
        (
            small_ratio(7, 30),
            small_ratio(1, 20),
            prop::collection::vec((small_ratio(1, 20), 1i64..100), 0..5),
        )
            .prop_filter_map("alpha > beta > 1", |(a, b, raw)| {
                let beta = b + Exponent::one();
                let alpha = a.max(beta + Exponent::new(1, 7));
                let terms = raw
                    .into_iter()
                    .map(|(g, frac)| CrossTerm::new(g, beta * Exponent::new(frac, 100)))
                    .collect();
                let spec = RateSpec::new(alpha, beta, terms);
                spec.validate().ok().map(|_| spec)
            })
    }

    proptest! {
        #[test]
        fn slow_block_never_outruns_fast_block(spec in valid_spec()) {
            let r = compute_theorem3_rates(&spec).unwrap();
            prop_assert!(spec.alpha * r.tau_a <= spec.beta * r.tau_b);
            let min = r.lambdas.iter().copied().fold(r.lambda0, |m, l| m.min(l));
            prop_assert_eq!(r.tau_b, min);
            prop_assert_eq!(r.regime == Regime::Coupled, spec.alpha * r.tau_a == spec.beta * r.tau_b);
            if spec.terms.is_empty() {
                prop_assert_eq!(r.regime, Regime::Decoupled);
                prop_assert!(r.lambda0_active);
            }
        }

        #[test]
        fn adding_a_term_never_raises_tau_b(spec in valid_spec(), g in small_ratio(1, 20), frac in 1i64..100) {
            let before = compute_theorem3_rates(&spec).unwrap();
            let mut more = spec.clone();
            more.terms.push(CrossTerm::new(g, spec.beta * Exponent::new(frac, 100)));
            prop_assume!(more.validate().is_ok());
            let after = compute_theorem3_rates(&more).unwrap();
            prop_assert!(after.tau_b <= before.tau_b);
        }

        #[test]
        fn lemma1_matches_exhaustive_minimum(
            alpha in small_ratio(2, 20),
            raw in prop::collection::vec((0i64..100, small_ratio(0, 12)), 1..6),
        ) {
            let noise_terms: Vec<NoiseTerm> = raw
                .iter()
                .map(|(frac, eta)| NoiseTerm { gamma: alpha * Exponent::new(*frac, 100), eta: *eta })
                .collect();
            let spec = Lemma1Spec { alpha, beta: alpha / 2, noise_terms: noise_terms.clone() };
            let (tau_a, b_rate) = compute_lemma1_rate(&spec).unwrap();
            // exhaustive: tau_a must be attained and be a lower bound
            let mut attained = false;
            for t in &noise_terms {
                let v = t.eta / (alpha - t.gamma);
                prop_assert!(tau_a <= v);
                attained |= v == tau_a;
            }
            prop_assert!(attained);
            prop_assert_eq!(b_rate, alpha * tau_a / (alpha / 2));
        }
    }
}
