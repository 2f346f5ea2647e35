//! Model primitives and the functional forms for implementation intensity
//! and the reputational payoff.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field} = {value}: {bound}")]
    Invalid {
        field: &'static str,
        value: f64,
        bound: &'static str,
    },
    #[error("{what} = {value} lies outside [0, 1]")]
    Domain { what: &'static str, value: f64 },
}

impl ModelError {
    fn invalid<T: Scalar>(field: &'static str, value: T, bound: &'static str) -> Self {
        ModelError::Invalid {
            field,
            value: value.as_f64(),
            bound,
        }
    }

    /// Name of the offending field, if the error concerns a primitive.
    pub fn field(&self) -> &'static str {
        match self {
            ModelError::Invalid { field, .. } => field,
            ModelError::Domain { what, .. } => what,
        }
    }
}

/// Structural parameters of one model instance.
///
/// The JSON form is a flat object with exactly these keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Primitives<T> {
    /// Prior probability of the good state.
    pub pi: T,
    /// Signal mean in the bad state.
    pub mu0: T,
    /// Signal mean in the good state.
    pub mu1: T,
    /// Signal noise of a high-ability expert.
    pub sigma_h: T,
    /// Signal noise of a low-ability expert.
    pub sigma_l: T,
    /// Informativeness index; multiplies the mean separation.
    pub theta: T,
    /// Career-concern strength.
    pub kappa: T,
    /// Success-only bonus.
    pub b: T,
    /// Gatekeeping stringency.
    pub t_gate: T,
    pub lambda_min: T,
    pub lambda_max: T,
}

impl<T: Scalar> Primitives<T> {
    /// The reference parameter set used across tests and docs.
    pub fn reference() -> Self {
        Primitives {
            pi: T::lit(0.5),
            mu0: T::zero(),
            mu1: T::one(),
            sigma_h: T::lit(0.5),
            sigma_l: T::one(),
            theta: T::one(),
            kappa: T::one(),
            b: T::zero(),
            t_gate: T::zero(),
            lambda_min: T::lit(0.2),
            lambda_max: T::lit(0.8),
        }
    }

    /// Checks every bound and returns the primitives unchanged on success.
    pub fn validate(self) -> Result<Self, ModelError> {
        let zero = T::zero();
        let one = T::one();
        let finite = [
            ("pi", self.pi),
            ("mu0", self.mu0),
            ("mu1", self.mu1),
            ("sigma_h", self.sigma_h),
            ("sigma_l", self.sigma_l),
            ("theta", self.theta),
            ("kappa", self.kappa),
            ("b", self.b),
            ("t_gate", self.t_gate),
            ("lambda_min", self.lambda_min),
            ("lambda_max", self.lambda_max),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(ModelError::invalid(field, v, "must be finite"));
            }
        }
        if !(self.pi > zero && self.pi < one) {
            return Err(ModelError::invalid(
                "pi",
                self.pi,
                "pi must lie strictly inside (0,1)",
            ));
        }
        if !(self.mu1 > self.mu0) {
            return Err(ModelError::invalid("mu1", self.mu1, "mu1 must exceed mu0"));
        }
        if !(self.sigma_h > zero) {
            return Err(ModelError::invalid(
                "sigma_h",
                self.sigma_h,
                "sigma_h must be positive",
            ));
        }
        if !(self.sigma_l >= self.sigma_h) {
            return Err(ModelError::invalid(
                "sigma_l",
                self.sigma_l,
                "sigma_l must be at least sigma_h",
            ));
        }
        if !(self.theta > zero) {
            return Err(ModelError::invalid(
                "theta",
                self.theta,
                "theta must be positive",
            ));
        }
        if !(self.kappa >= zero) {
            return Err(ModelError::invalid(
                "kappa",
                self.kappa,
                "kappa must be nonnegative",
            ));
        }
        if !(self.b >= zero) {
            return Err(ModelError::invalid("b", self.b, "b must be nonnegative"));
        }
        if !(self.t_gate >= zero) {
            return Err(ModelError::invalid(
                "t_gate",
                self.t_gate,
                "t_gate must be nonnegative",
            ));
        }
        if !(self.lambda_min >= zero) {
            return Err(ModelError::invalid(
                "lambda_min",
                self.lambda_min,
                "lambda_min must be nonnegative",
            ));
        }
        if !(self.lambda_max >= self.lambda_min) {
            return Err(ModelError::invalid(
                "lambda_max",
                self.lambda_max,
                "lambda_max must be at least lambda_min",
            ));
        }
        if !(self.lambda_max <= one) {
            return Err(ModelError::invalid(
                "lambda_max",
                self.lambda_max,
                "lambda_max must not exceed 1",
            ));
        }
        Ok(self)
    }

    /// Signal means `(mu0, mu1)` after informativeness scaling.
    ///
    /// The good-state mean stays fixed and the bad-state mean moves to
    /// `mu1 - theta * (mu1 - mu0)`, so a higher `theta` raises the success
    /// probability at every signal above the bad-state mean.
    #[inline]
    pub fn signal_means(&self) -> (T, T) {
        let sep = self.theta * (self.mu1 - self.mu0);
        (self.mu1 - sep, self.mu1)
    }

    /// Midpoint of the scaled signal means; the solver's starting cutoff.
    #[inline]
    pub fn signal_midpoint(&self) -> T {
        let (m0, m1) = self.signal_means();
        (m0 + m1) * T::lit(0.5)
    }

    /// `lambda(rho; T)` without domain checks.
    #[inline]
    pub fn lambda_at(&self, rho: T) -> T {
        (self.lambda_min + (self.lambda_max - self.lambda_min) * rho) * (-self.t_gate).exp()
    }

    /// Slope of `lambda` in reputation.
    #[inline]
    pub fn lambda_slope(&self) -> T {
        (self.lambda_max - self.lambda_min) * (-self.t_gate).exp()
    }

    /// Reputational payoff `kappa * W(posterior)` without domain checks.
    #[inline]
    pub fn payoff(&self, posterior: T) -> T {
        self.kappa * posterior
    }
}

/// Public belief that the expert is of high ability; strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Reputation<T>(T);

impl<T: Scalar> Reputation<T> {
    pub fn new(rho: T) -> Result<Self, ModelError> {
        if rho > T::zero() && rho < T::one() {
            Ok(Reputation(rho))
        } else {
            Err(ModelError::invalid(
                "rho",
                rho,
                "rho must lie strictly inside (0,1)",
            ))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

/// Implementation intensity `lambda(rho; T)` for `rho` in `[0, 1]`.
///
/// Endpoints are accepted so the functional form can be inspected at
/// `rho = 0` and `rho = 1`.
pub fn lambda_of<T: Scalar>(rho: T, p: &Primitives<T>) -> Result<T, ModelError> {
    if !(rho >= T::zero() && rho <= T::one()) {
        return Err(ModelError::Domain {
            what: "rho",
            value: rho.as_f64(),
        });
    }
    Ok(p.lambda_at(rho))
}

/// Career-concerns payoff `kappa * W(rho_post)` with `W` the identity.
pub fn w_of<T: Scalar>(rho_post: T, p: &Primitives<T>) -> Result<T, ModelError> {
    if !(rho_post >= T::zero() && rho_post <= T::one()) {
        return Err(ModelError::Domain {
            what: "rho_post",
            value: rho_post.as_f64(),
        });
    }
    Ok(p.payoff(rho_post))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> Primitives<f64> {
        Primitives::reference()
    }

    #[test]
    fn reference_set_is_accepted() {
        assert_eq!(reference().validate(), Ok(reference()));
    }

    #[test]
    fn equal_means_rejected() {
        let p = Primitives {
            mu1: 0.0,
            ..reference()
        };
        let err = p.validate().unwrap_err();
        assert_eq!(err.field(), "mu1");
        assert!(err.to_string().contains("mu1 must exceed mu0"));
    }

    #[test]
    fn pi_at_one_rejected() {
        let p = Primitives {
            pi: 1.0,
            ..reference()
        };
        let err = p.validate().unwrap_err();
        assert!(err
            .to_string()
            .contains("pi must lie strictly inside (0,1)"));
    }

    #[test]
    fn each_bound_names_its_field() {
        let cases: Vec<(Primitives<f64>, &str)> = vec![
            (
                Primitives {
                    sigma_h: 0.0,
                    ..reference()
                },
                "sigma_h",
            ),
            (
                Primitives {
                    sigma_l: 0.4,
                    ..reference()
                },
                "sigma_l",
            ),
            (
                Primitives {
                    theta: 0.0,
                    ..reference()
                },
                "theta",
            ),
            (
                Primitives {
                    kappa: -1.0,
                    ..reference()
                },
                "kappa",
            ),
            (
                Primitives {
                    b: -0.1,
                    ..reference()
                },
                "b",
            ),
            (
                Primitives {
                    t_gate: -0.1,
                    ..reference()
                },
                "t_gate",
            ),
            (
                Primitives {
                    lambda_min: -0.1,
                    ..reference()
                },
                "lambda_min",
            ),
            (
                Primitives {
                    lambda_max: 0.1,
                    ..reference()
                },
                "lambda_max",
            ),
            (
                Primitives {
                    lambda_max: 1.1,
                    ..reference()
                },
                "lambda_max",
            ),
            (
                Primitives {
                    mu0: f64::NAN,
                    ..reference()
                },
                "mu0",
            ),
        ];
        for (p, field) in cases {
            assert_eq!(p.validate().unwrap_err().field(), field);
        }
    }

    #[test]
    fn validate_is_idempotent() {
        let once = reference().validate().unwrap();
        assert_eq!(once.validate().unwrap(), once);
    }

    #[test]
    fn lambda_endpoints_and_gate() {
        let p = reference();
        assert!((lambda_of(0.0, &p).unwrap() - 0.2).abs() < 1e-15);
        assert!((lambda_of(1.0, &p).unwrap() - 0.8).abs() < 1e-15);
        let gated = Primitives {
            t_gate: std::f64::consts::LN_2,
            ..p
        };
        assert!((lambda_of(0.5, &gated).unwrap() - 0.25).abs() < 1e-15);
        assert!(lambda_of(1.5, &p).is_err());
    }

    #[test]
    fn lambda_monotone_on_grid() {
        let p = reference();
        let mut prev_rho = -1.0;
        for i in 0..=100 {
            let rho = i as f64 / 100.0;
            let l = lambda_of(rho, &p).unwrap();
            assert!((0.0..=1.0).contains(&l));
            if i > 0 {
                assert!(l >= lambda_of(prev_rho, &p).unwrap());
            }
            let stricter = Primitives { t_gate: 0.3, ..p };
            assert!(lambda_of(rho, &stricter).unwrap() <= l);
            prev_rho = rho;
        }
    }

    #[test]
    fn payoff_scaling() {
        let p = reference();
        assert!((w_of(0.7, &p).unwrap() - 0.7).abs() < 1e-15);
        let doubled = Primitives { kappa: 2.0, ..p };
        assert!((w_of(0.7, &doubled).unwrap() - 1.4).abs() < 1e-15);
        assert_eq!(w_of(0.0, &doubled).unwrap(), 0.0);
        assert!(w_of(-0.1, &p).is_err());
        assert!(w_of(0.3, &p).unwrap() < w_of(0.31, &p).unwrap());
    }

    #[test]
    fn reputation_rejects_boundary() {
        assert!(Reputation::new(0.0f64).is_err());
        assert!(Reputation::new(1.0f64).is_err());
        assert_eq!(Reputation::new(0.3f64).unwrap().get(), 0.3);
    }

    #[test]
    fn json_roundtrip_rejects_unknown_keys() {
        let p = reference();
        let text = serde_json::to_string(&p).unwrap();
        let back: Primitives<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let extra = text.replace("{", "{\"gamma\":1.0,");
        assert!(serde_json::from_str::<Primitives<f64>>(&extra).is_err());
        let missing = r#"{"pi":0.5}"#;
        assert!(serde_json::from_str::<Primitives<f64>>(missing).is_err());
    }
}
