//! Shared test support: an adaptive Gauss–Kronrod quadrature oracle built
//! only from the Gaussian density, and a seeded family of random instances.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use cutoff_core::{Primitives, Reputation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XK[i]) + f(c + h * XK[i]);
        k += WK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    adapt(f, a, b, tol, 40)
}

pub fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

const TOL: f64 = 1e-14;
const REACH: f64 = 40.0;

/// `Pr[x >= c]` for `x ~ N(mu, sigma)`, integrated over `[c, mu + 40 sigma]`.
pub fn mass_above(c: f64, mu: f64, sigma: f64) -> f64 {
    let lo = c.max(mu - REACH * sigma);
    let hi = mu + REACH * sigma;
    integrate(&|x| normal_pdf(x, mu, sigma), lo, hi, TOL)
}

/// `Pr[x < c]` for `x ~ N(mu, sigma)`.
pub fn mass_below(c: f64, mu: f64, sigma: f64) -> f64 {
    let lo = mu - REACH * sigma;
    let hi = c.min(mu + REACH * sigma);
    integrate(&|x| normal_pdf(x, mu, sigma), lo, hi, TOL)
}

/// Oracle for the unconditional signal CDF.
pub fn oracle_fx(c: f64, rho: f64, p: &Primitives<f64>) -> f64 {
    let (m0, m1) = p.signal_means();
    let mut acc = 0.0;
    for (wa, sa) in [(rho, p.sigma_h), (1.0 - rho, p.sigma_l)] {
        for (ws, mu) in [(p.pi, m1), (1.0 - p.pi, m0)] {
            acc += wa * ws * mass_below(c, mu, sa);
        }
    }
    acc
}

/// Oracle likelihoods `[success, failure, unimplemented, safe]` for one
/// ability noise level.
pub fn oracle_likelihoods(c: f64, rho: f64, sigma: f64, p: &Primitives<f64>) -> [f64; 4] {
    let (m0, m1) = p.signal_means();
    let lam = p.lambda_at(rho);
    let up1 = mass_above(c, m1, sigma);
    let up0 = mass_above(c, m0, sigma);
    [
        lam * p.pi * up1,
        lam * (1.0 - p.pi) * up0,
        (1.0 - lam) * (p.pi * up1 + (1.0 - p.pi) * up0),
        p.pi * mass_below(c, m1, sigma) + (1.0 - p.pi) * mass_below(c, m0, sigma),
    ]
}

/// Oracle posteriors in the same event order.
pub fn oracle_posteriors(c: f64, rho: f64, p: &Primitives<f64>) -> [f64; 4] {
    let lh = oracle_likelihoods(c, rho, p.sigma_h, p);
    let ll = oracle_likelihoods(c, rho, p.sigma_l, p);
    std::array::from_fn(|i| {
        let num = rho * lh[i];
        let den = num + (1.0 - rho) * ll[i];
        if den > 0.0 {
            num / den
        } else {
            rho
        }
    })
}

/// Success probability by explicit enumeration of the two states and two
/// abilities.
pub fn enumerated_success_prob(x: f64, rho: f64, p: &Primitives<f64>) -> f64 {
    let (m0, m1) = p.signal_means();
    let mut joint = [0.0; 2];
    for (s, mu) in [(0usize, m0), (1, m1)] {
        let prior = if s == 1 { p.pi } else { 1.0 - p.pi };
        for (wa, sa) in [(rho, p.sigma_h), (1.0 - rho, p.sigma_l)] {
            joint[s] += prior * wa * normal_pdf(x, mu, sa);
        }
    }
    joint[1] / (joint[0] + joint[1])
}

/// Random instance with moderate signal-to-noise.
pub fn random_primitives(rng: &mut ChaCha8Rng) -> Primitives<f64> {
    let sigma_h = rng.random_range(0.5..1.0);
    let lambda_min = rng.random_range(0.0..0.5);
    Primitives {
        pi: rng.random_range(0.3..0.7),
        mu0: 0.0,
        mu1: rng.random_range(0.5..1.5),
        sigma_h,
        sigma_l: sigma_h * rng.random_range(1.0..2.5),
        theta: rng.random_range(0.5..1.5),
        kappa: rng.random_range(0.5..2.0),
        b: rng.random_range(0.0..2.0),
        t_gate: rng.random_range(0.0..1.0),
        lambda_min,
        lambda_max: rng.random_range(lambda_min..1.0),
    }
    .validate()
    .expect("generated primitives are valid")
}

pub fn instances(seed: u64, n: usize) -> Vec<Primitives<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_primitives(&mut rng)).collect()
}

pub fn rep(r: f64) -> Reputation<f64> {
    Reputation::new(r).unwrap()
}

pub fn reference() -> Primitives<f64> {
    Primitives::reference()
}
