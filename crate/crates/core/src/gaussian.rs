//! Gaussian signal structure: success probability, public-event likelihoods
//! under a cutoff strategy, and Bayes posteriors about ability.
//!
//! Conditional on the state `s` and the expert's ability `a`, the signal is
//! `x ~ N(mu_s, sigma_a)`. The expert does not know `a`, so the success
//! probability uses the ability mixture weighted by public reputation.
//!
//! Likelihoods are carried in log space so posteriors stay continuous
//! far into the tails; the boundary strategies take the limit of the
//! interior formulas.

use serde::Serialize;

use crate::cutoff::Cutoff;
use crate::model::{Primitives, Reputation};
use crate::scalar::Scalar;

#[inline]
fn half<T: Scalar>() -> T {
    T::lit(0.5)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf<T: Scalar>(z: T) -> T {
    (-(z * z) * half()).exp() * T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * half()
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf<T: Scalar>(z: T) -> T {
    half::<T>() * (-z * T::FRAC_1_SQRT_2()).erfc()
}

/// Standard normal upper tail `1 - Phi(z)`, accurate for large `z`.
#[inline]
pub fn norm_sf<T: Scalar>(z: T) -> T {
    half::<T>() * (z * T::FRAC_1_SQRT_2()).erfc()
}

/// `ln(1 - Phi(z))` without underflow.
pub fn log_norm_sf<T: Scalar>(z: T) -> T {
    if z == T::infinity() {
        return T::neg_infinity();
    }
    if z <= T::zero() {
        return (-norm_cdf(z)).ln_1p();
    }
    let sf = norm_sf(z);
    if sf > T::min_positive_value() * T::lit(1e6) {
        return sf.ln();
    }
    // Mills-ratio asymptotic series; only reached for z beyond ~12 (f32)
    // or ~37 (f64), where six terms are far below epsilon.
    let inv = (z * z).recip();
    let mut term = T::one();
    let mut series = T::one();
    for k in 1..=6 {
        term = term * (-T::lit((2 * k - 1) as f64)) * inv;
        series = series + term;
    }
    -(z * z) * half() - z.ln() - half::<T>() * (T::PI() + T::PI()).ln() + series.ln()
}

/// `ln Phi(z)` without underflow.
#[inline]
pub fn log_norm_cdf<T: Scalar>(z: T) -> T {
    log_norm_sf(-z)
}

#[inline]
fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[inline]
fn logistic<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        (T::one() + (-t).exp()).recip()
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// Expert ability type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Ability {
    High,
    Low,
}

impl Ability {
    pub const BOTH: [Ability; 2] = [Ability::High, Ability::Low];

    #[inline]
    pub fn sigma<T: Scalar>(self, p: &Primitives<T>) -> T {
        match self {
            Ability::High => p.sigma_h,
            Ability::Low => p.sigma_l,
        }
    }
}

/// Public observation at the end of the episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PublicEvent {
    RiskySuccess,
    RiskyFailure,
    RiskyUnimplemented,
    Safe,
}

impl PublicEvent {
    pub const ALL: [PublicEvent; 4] = [
        PublicEvent::RiskySuccess,
        PublicEvent::RiskyFailure,
        PublicEvent::RiskyUnimplemented,
        PublicEvent::Safe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PublicEvent::RiskySuccess => "risky_success",
            PublicEvent::RiskyFailure => "risky_failure",
            PublicEvent::RiskyUnimplemented => "risky_unimplemented",
            PublicEvent::Safe => "safe",
        }
    }
}

/// Per-state mixture pieces at a signal value.
struct MixtureTerms<T> {
    log_density: T,
    /// Posterior weight of the high-ability component given `x` and state.
    w_high: T,
    w_low: T,
    /// d/dx of `log_density`.
    score: T,
}

#[inline]
fn log_normal_density<T: Scalar>(x: T, mu: T, sigma: T) -> T {
    let z = (x - mu) / sigma;
    -(z * z) * half() - sigma.ln() - half::<T>() * (T::PI() + T::PI()).ln()
}

fn mixture_terms<T: Scalar>(x: T, mu: T, rho: T, p: &Primitives<T>) -> MixtureTerms<T> {
    let lh = rho.ln() + log_normal_density(x, mu, p.sigma_h);
    let ll = (-rho).ln_1p() + log_normal_density(x, mu, p.sigma_l);
    let log_density = log_add_exp(lh, ll);
    let w_high = (lh - log_density).exp();
    let w_low = (ll - log_density).exp();
    let score =
        -(w_high * (x - mu) / (p.sigma_h * p.sigma_h) + w_low * (x - mu) / (p.sigma_l * p.sigma_l));
    MixtureTerms {
        log_density,
        w_high,
        w_low,
        score,
    }
}

/// Success probability and its partial derivatives at a signal value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProb<T> {
    pub p: T,
    /// d p / d x
    pub dx: T,
    /// d p / d rho, through the ability mixture
    pub drho: T,
    /// d p / d pi
    pub dpi: T,
    /// d p / d theta
    pub dtheta: T,
}

/// `Pr[s = 1 | x]` under the reputation-weighted ability mixture, with
/// partial derivatives.
pub fn success_prob_parts<T: Scalar>(
    x: T,
    rho: Reputation<T>,
    p: &Primitives<T>,
) -> SuccessProb<T> {
    let r = rho.get();
    let (m0, m1) = p.signal_means();
    let good = mixture_terms(x, m1, r, p);
    let bad = mixture_terms(x, m0, r, p);
    let logit = p.pi.ln() - (-p.pi).ln_1p() + good.log_density - bad.log_density;
    let prob = logistic(logit);
    let spread = prob * (T::one() - prob);
    let sep = p.mu1 - p.mu0;
    let dlogit_dx = good.score - bad.score;
    let dlogit_drho = (good.w_high - bad.w_high) / r - (good.w_low - bad.w_low) / (T::one() - r);
    let dlogit_dpi = (p.pi * (T::one() - p.pi)).recip();
    // Only the bad-state mean moves with theta.
    let dlogit_dtheta = -sep * bad.score;
    SuccessProb {
        p: prob,
        dx: spread * dlogit_dx,
        drho: spread * dlogit_drho,
        dpi: spread * dlogit_dpi,
        dtheta: spread * dlogit_dtheta,
    }
}

/// `Pr[s = 1 | x, rho]`.
#[inline]
pub fn success_prob<T: Scalar>(x: T, rho: Reputation<T>, p: &Primitives<T>) -> T {
    success_prob_parts(x, rho, p).p
}

/// Success probability at a cutoff, with the boundaries as limits.
pub fn success_prob_at<T: Scalar>(c: Cutoff<T>, rho: Reputation<T>, p: &Primitives<T>) -> T {
    match c {
        Cutoff::AlwaysRisky => T::zero(),
        Cutoff::Interior(x) => success_prob(x, rho, p),
        Cutoff::AlwaysSafe => T::one(),
    }
}

/// `ln Pr[event | ability]` under the cutoff strategy.
pub fn log_event_likelihood<T: Scalar>(
    event: PublicEvent,
    c: Cutoff<T>,
    rho: Reputation<T>,
    ability: Ability,
    p: &Primitives<T>,
) -> T {
    let sigma = ability.sigma(p);
    let (m0, m1) = p.signal_means();
    let cv = c.value();
    let lam = p.lambda_at(rho.get());
    let ln_pi = p.pi.ln();
    let ln_not_pi = (-p.pi).ln_1p();
    let above_good = log_norm_sf((cv - m1) / sigma);
    let above_bad = log_norm_sf((cv - m0) / sigma);
    match event {
        PublicEvent::RiskySuccess => lam.ln() + ln_pi + above_good,
        PublicEvent::RiskyFailure => lam.ln() + ln_not_pi + above_bad,
        PublicEvent::RiskyUnimplemented => {
            (-lam).ln_1p() + log_add_exp(ln_pi + above_good, ln_not_pi + above_bad)
        }
        PublicEvent::Safe => log_add_exp(
            ln_pi + log_norm_cdf((cv - m1) / sigma),
            ln_not_pi + log_norm_cdf((cv - m0) / sigma),
        ),
    }
}

/// `Pr[event | ability]` under the cutoff strategy. The four events
/// partition the outcome space for each ability.
pub fn event_likelihood<T: Scalar>(
    event: PublicEvent,
    c: Cutoff<T>,
    rho: Reputation<T>,
    ability: Ability,
    p: &Primitives<T>,
) -> T {
    let sigma = ability.sigma(p);
    let (m0, m1) = p.signal_means();
    let cv = c.value();
    let lam = p.lambda_at(rho.get());
    let above_good = norm_sf((cv - m1) / sigma);
    let above_bad = norm_sf((cv - m0) / sigma);
    match event {
        PublicEvent::RiskySuccess => lam * p.pi * above_good,
        PublicEvent::RiskyFailure => lam * (T::one() - p.pi) * above_bad,
        PublicEvent::RiskyUnimplemented => {
            (T::one() - lam) * (p.pi * above_good + (T::one() - p.pi) * above_bad)
        }
        PublicEvent::Safe => {
            p.pi * norm_cdf((cv - m1) / sigma) + (T::one() - p.pi) * norm_cdf((cv - m0) / sigma)
        }
    }
}

/// Probability of the event before ability is known.
pub fn event_probability<T: Scalar>(
    event: PublicEvent,
    c: Cutoff<T>,
    rho: Reputation<T>,
    p: &Primitives<T>,
) -> T {
    let r = rho.get();
    r * event_likelihood(event, c, rho, Ability::High, p)
        + (T::one() - r) * event_likelihood(event, c, rho, Ability::Low, p)
}

/// True when the event has probability zero for every cutoff, e.g. an
/// implemented outcome with `lambda = 0`.
fn structurally_impossible<T: Scalar>(event: PublicEvent, lam: T) -> bool {
    match event {
        PublicEvent::RiskySuccess | PublicEvent::RiskyFailure => lam <= T::zero(),
        PublicEvent::RiskyUnimplemented => lam >= T::one(),
        PublicEvent::Safe => false,
    }
}

/// Posterior reputation after observing `event`.
///
/// An event that is impossible under both abilities leaves the prior
/// unchanged. At the boundary strategies, events that are only impossible
/// because the cutoff is infinite get the limit of the interior posterior:
/// they are arbitrarily strong evidence of the noisier type when
/// `sigma_h < sigma_l`, and uninformative when the noises coincide.
pub fn posterior_after<T: Scalar>(
    event: PublicEvent,
    c: Cutoff<T>,
    rho: Reputation<T>,
    p: &Primitives<T>,
) -> T {
    let r = rho.get();
    let lh = log_event_likelihood(event, c, rho, Ability::High, p);
    let ll = log_event_likelihood(event, c, rho, Ability::Low, p);
    let neg_inf = T::neg_infinity();
    if lh == neg_inf && ll == neg_inf {
        let lam = p.lambda_at(r);
        if c.is_interior() || structurally_impossible(event, lam) {
            return r;
        }
        return if p.sigma_h < p.sigma_l { T::zero() } else { r };
    }
    if lh == ll {
        return r;
    }
    let log_odds_low = (-r).ln_1p() + ll - (r.ln() + lh);
    logistic(-log_odds_low)
}

/// Posteriors after each public event under one cutoff strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Posteriors<T> {
    pub r_success: T,
    pub r_failure: T,
    pub r_safe: T,
    pub r_unimplemented: T,
}

impl<T: Scalar> Posteriors<T> {
    /// All four posteriors equal to `rho`.
    pub fn flat(rho: T) -> Self {
        Posteriors {
            r_success: rho,
            r_failure: rho,
            r_safe: rho,
            r_unimplemented: rho,
        }
    }

    pub fn get(&self, event: PublicEvent) -> T {
        match event {
            PublicEvent::RiskySuccess => self.r_success,
            PublicEvent::RiskyFailure => self.r_failure,
            PublicEvent::RiskyUnimplemented => self.r_unimplemented,
            PublicEvent::Safe => self.r_safe,
        }
    }
}

pub fn posteriors_of_cutoff<T: Scalar>(
    c: Cutoff<T>,
    rho: Reputation<T>,
    p: &Primitives<T>,
) -> Posteriors<T> {
    Posteriors {
        r_success: posterior_after(PublicEvent::RiskySuccess, c, rho, p),
        r_failure: posterior_after(PublicEvent::RiskyFailure, c, rho, p),
        r_safe: posterior_after(PublicEvent::Safe, c, rho, p),
        r_unimplemented: posterior_after(PublicEvent::RiskyUnimplemented, c, rho, p),
    }
}

/// Expected posterior over public events; equals `rho` by Bayes' rule.
pub fn expected_posterior<T: Scalar>(c: Cutoff<T>, rho: Reputation<T>, p: &Primitives<T>) -> T {
    let post = posteriors_of_cutoff(c, rho, p);
    PublicEvent::ALL
        .iter()
        .map(|&e| event_probability(e, c, rho, p) * post.get(e))
        .fold(T::zero(), |a, b| a + b)
}

/// Unconditional signal CDF `F_X(c)`, mixing over ability and state.
pub fn signal_cdf<T: Scalar>(c: T, rho: Reputation<T>, p: &Primitives<T>) -> T {
    signal_mixture(c, rho, p, norm_cdf)
}

/// `1 - F_X(c)`, computed from upper tails.
pub fn signal_sf<T: Scalar>(c: T, rho: Reputation<T>, p: &Primitives<T>) -> T {
    signal_mixture(c, rho, p, norm_sf)
}

/// Unconditional signal density `f_X(c)`.
pub fn signal_pdf<T: Scalar>(c: T, rho: Reputation<T>, p: &Primitives<T>) -> T {
    let r = rho.get();
    let (m0, m1) = p.signal_means();
    let mut acc = T::zero();
    for (wa, sa) in [(r, p.sigma_h), (T::one() - r, p.sigma_l)] {
        for (ws, mu) in [(p.pi, m1), (T::one() - p.pi, m0)] {
            acc = acc + wa * ws * norm_pdf((c - mu) / sa) / sa;
        }
    }
    acc
}

fn signal_mixture<T: Scalar>(c: T, rho: Reputation<T>, p: &Primitives<T>, f: fn(T) -> T) -> T {
    let r = rho.get();
    let (m0, m1) = p.signal_means();
    let mut acc = T::zero();
    for (wa, sa) in [(r, p.sigma_h), (T::one() - r, p.sigma_l)] {
        for (ws, mu) in [(p.pi, m1), (T::one() - p.pi, m0)] {
            acc = acc + wa * ws * f((c - mu) / sa);
        }
    }
    acc
}
