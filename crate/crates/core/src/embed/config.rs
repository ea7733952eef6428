use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util_serde::rational64;

/// Slack constants of the embedding pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct HierarchyConfig {
    gamma: Rational64,
    mu: Rational64,
    epsilon: Rational64,
    eta: Rational64,
    xi: Rational64,
    alpha: Rational64,
    beta: Rational64,
    zeta: Rational64,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    #[serde(with = "rational64")]
    gamma: Rational64,
    #[serde(with = "rational64")]
    mu: Rational64,
    #[serde(with = "rational64")]
    epsilon: Rational64,
    #[serde(with = "rational64")]
    eta: Rational64,
    #[serde(with = "rational64")]
    xi: Rational64,
    #[serde(with = "rational64")]
    alpha: Rational64,
    #[serde(with = "rational64")]
    beta: Rational64,
    #[serde(with = "rational64")]
    zeta: Rational64,
}

impl TryFrom<RawConfig> for HierarchyConfig {
    type Error = Error;

    fn try_from(r: RawConfig) -> Result<Self> {
        let c = HierarchyConfig {
            gamma: r.gamma,
            mu: r.mu,
            epsilon: r.epsilon,
            eta: r.eta,
            xi: r.xi,
            alpha: r.alpha,
            beta: r.beta,
            zeta: r.zeta,
        };
        c.validate()?;
        Ok(c)
    }
}

impl From<HierarchyConfig> for RawConfig {
    fn from(c: HierarchyConfig) -> Self {
        RawConfig {
            gamma: c.gamma,
            mu: c.mu,
            epsilon: c.epsilon,
            eta: c.eta,
            xi: c.xi,
            alpha: c.alpha,
            beta: c.beta,
            zeta: c.zeta,
        }
    }
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        let r = Rational64::new;
        HierarchyConfig {
            gamma: r(1, 10),
            mu: r(1, 8),
            epsilon: r(1, 800),
            eta: r(1, 320),
            xi: r(1, 40),
            alpha: r(1, 400),
            beta: r(1, 80),
            zeta: r(1, 2000),
        }
    }
}

macro_rules! setters {
    ($($name:ident => $with:ident),*) => {
        impl HierarchyConfig {
            $(
                pub fn $name(&self) -> Rational64 {
                    self.$name
                }

                /// Copy with this constant replaced; the ordering is re-checked.
                pub fn $with(mut self, value: Rational64) -> Result<Self> {
                    self.$name = value;
                    self.validate()?;
                    Ok(self)
                }
            )*
        }
    };
}

setters!(
    gamma => with_gamma,
    mu => with_mu,
    epsilon => with_epsilon,
    eta => with_eta,
    xi => with_xi,
    alpha => with_alpha,
    beta => with_beta,
    zeta => with_zeta
);

impl HierarchyConfig {
    fn validate(&self) -> Result<()> {
        let zero = Rational64::from_integer(0);
        let one = Rational64::from_integer(1);
        let all = [
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("xi", self.xi),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("zeta", self.zeta),
        ];
        for (name, v) in all {
            if v <= zero || v >= one {
                return Err(Error::InvalidArgument(format!("{name} = {v} is not in (0, 1)")));
            }
        }
        let chain = [
            ("epsilon", self.epsilon, "beta", self.beta),
            ("beta", self.beta, "mu", self.mu),
            ("alpha", self.alpha, "eta", self.eta),
            ("eta", self.eta, "xi", self.xi),
            ("xi", self.xi, "gamma", self.gamma),
            ("xi", self.xi, "mu", self.mu),
        ];
        for (a, x, b, y) in chain {
            if x >= y {
                return Err(Error::InvalidArgument(format!("need {a} < {b}, got {x} and {y}")));
            }
        }
        Ok(())
    }
}
