//! Closed-form two-node model: one potential edge observed through `T`
//! noisy binary measurements with true-positive rate `q` and false-positive
//! rate `r`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmath::{binary_entropy, log2_binomial, log2_one_minus, log2_sum_exp, LOG_ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleEdgeModel {
    /// Prior probability that the edge exists.
    pub p: f64,
    /// Probability of a positive observation when the edge exists.
    pub q: f64,
    /// Probability of a positive observation when it does not.
    pub r: f64,
    /// Number of observations.
    pub t: u64,
}

fn log2_prob(p: f64) -> f64 {
    if p <= 0.0 {
        LOG_ZERO
    } else {
        p.log2()
    }
}

impl SingleEdgeModel {
    /// `q` and `r` must lie in (0, 1); `p` may sit on the boundary, where the
    /// reconstructability is undefined.
    pub fn new(p: f64, q: f64, r: f64, t: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidModel(format!("prior probability {p} outside [0, 1]")));
        }
        for (name, v) in [("q", q), ("r", r)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidModel(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if t == 0 {
            return Err(Error::InvalidModel("at least one observation is required".into()));
        }
        Ok(SingleEdgeModel { p, q, r, t })
    }

    /// λ = r/q.
    pub fn lambda(&self) -> f64 {
        self.r / self.q
    }

    /// η = (1 − r)/(1 − q).
    pub fn eta(&self) -> f64 {
        (1.0 - self.r) / (1.0 - self.q)
    }

    fn log_binomial_pmf(&self, n: u64, success: f64) -> f64 {
        log2_binomial(self.t, n) + n as f64 * success.log2() + (self.t - n) as f64 * log2_one_minus(success)
    }

    /// log₂ P(n | a).
    pub fn log_likelihood(&self, n: u64, a: bool) -> f64 {
        self.log_binomial_pmf(n, if a { self.q } else { self.r })
    }

    /// log₂ P(n) with the edge marginalized.
    pub fn log_evidence(&self, n: u64) -> f64 {
        log2_sum_exp([
            log2_prob(self.p) + self.log_likelihood(n, true),
            log2_prob(1.0 - self.p) + self.log_likelihood(n, false),
        ])
    }

    /// P(a = 1 | n) = p / (p + η^{T−n} λⁿ (1 − p)).
    pub fn edge_posterior(&self, n: u64) -> Result<f64> {
        if n > self.t {
            return Err(Error::InvalidModel(format!("{n} positives out of {} observations", self.t)));
        }
        if self.p == 0.0 || self.p == 1.0 {
            return Ok(self.p);
        }
        let log_odds_against = (self.t - n) as f64 * self.eta().log2() + n as f64 * self.lambda().log2()
            + log2_one_minus(self.p)
            - self.p.log2();
        Ok(1.0 / (1.0 + log_odds_against.exp2()))
    }

    /// Posterior entropy H(G|X) = Σₙ P(n) h(P(a = 1 | n)), in bits.
    pub fn edge_posterior_entropy(&self) -> f64 {
        (0..=self.t)
            .map(|n| {
                let pn = self.log_evidence(n).exp2();
                pn * binary_entropy(self.edge_posterior(n).expect("n within range"))
            })
            .sum()
    }

    /// I(G; X) = h(p) − H(G|X).
    pub fn mutual_information(&self) -> f64 {
        binary_entropy(self.p) - self.edge_posterior_entropy()
    }

    /// Ψ = 1 − H(G|X)/h(p).
    pub fn reconstructability(&self) -> Result<f64> {
        if self.p <= 0.0 || self.p >= 1.0 {
            return Err(Error::Undefined(format!("prior entropy is zero at p = {}", self.p)));
        }
        Ok((1.0 - self.edge_posterior_entropy() / binary_entropy(self.p)).clamp(0.0, 1.0))
    }

    /// Draws the edge state and the number of positive observations.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (bool, u64) {
        let a = rng.random_bool(self.p);
        let success = if a { self.q } else { self.r };
        let n = Binomial::new(self.t, success).expect("valid binomial").sample(rng);
        (a, n)
    }
}

/// Posterior edge probability for every possible count `n = 0..=T`.
pub fn posterior_curve(model: &SingleEdgeModel) -> Vec<(u64, f64)> {
    (0..=model.t).map(|n| (n, model.edge_posterior(n).expect("n within range"))).collect()
}
