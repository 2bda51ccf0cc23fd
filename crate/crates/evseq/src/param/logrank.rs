//! Sequential two-group logrank martingale (proportional hazards with the
//! treatment indicator as the only covariate).
//!
//! Conditional on the current risk sets, the group of the next event is
//! Bernoulli: under hazard ratio e^β the treatment group has probability
//! `n₁e^β / (n₁e^β + n₀)`, and under the null (β = 0) simply `n₁/(n₁+n₀)`.
//! The per-event bet is the ratio of those probabilities at the observed
//! group, so its null expectation is exactly one at every step.

use serde::{Deserialize, Serialize};

use crate::eprocess::{StreamingEProcess, UnitBet};
use crate::error::{Error, Result};

/// Remaining at-risk counts plus the simple-alternative log hazard ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSetState {
    pub n_treat: u64,
    pub n_ctrl: u64,
    pub beta1: f64,
}

impl RiskSetState {
    pub fn new(n_treat: u64, n_ctrl: u64, beta1: f64) -> Result<Self> {
        if n_treat + n_ctrl == 0 {
            return Err(Error::Parameter("risk set must be nonempty".into()));
        }
        if !beta1.is_finite() {
            return Err(Error::Parameter("beta1 must be finite".into()));
        }
        Ok(RiskSetState {
            n_treat,
            n_ctrl,
            beta1,
        })
    }

    /// Alternative probability that the next event is in the treatment
    /// group.
    pub fn alt_prob_treat(&self) -> f64 {
        let e = self.beta1.exp();
        let nt = self.n_treat as f64;
        let nc = self.n_ctrl as f64;
        nt * e / (nt * e + nc)
    }

    /// Null (β = 0) probability that the next event is in the treatment
    /// group.
    pub fn null_prob_treat(&self) -> f64 {
        self.n_treat as f64 / (self.n_treat + self.n_ctrl) as f64
    }

    /// Records one event; returns the single-round bet and decrements the
    /// observed group.
    pub fn step(&mut self, event_in_treatment: bool) -> Result<UnitBet> {
        let bet = logrank_bet(self, event_in_treatment)?;
        if event_in_treatment {
            self.n_treat -= 1;
        } else {
            self.n_ctrl -= 1;
        }
        Ok(bet)
    }
}

/// Single-round logrank bet: alternative over null conditional probability
/// of the observed group.
pub fn logrank_bet(state: &RiskSetState, event_in_treatment: bool) -> Result<UnitBet> {
    let nt = state.n_treat as f64;
    let nc = state.n_ctrl as f64;
    if event_in_treatment && state.n_treat == 0 {
        return Err(Error::data("event in an empty treatment group"));
    }
    if !event_in_treatment && state.n_ctrl == 0 {
        return Err(Error::data("event in an empty control group"));
    }
    let e = state.beta1.exp();
    let denom = nt * e + nc;
    let total = nt + nc;
    let bet = if event_in_treatment {
        e * total / denom
    } else {
        total / denom
    };
    UnitBet::new(bet)
}

/// Streaming logrank test martingale; observations are group bits (1 =
/// event in the treatment group).
#[derive(Debug, Clone)]
pub struct LogrankProcess {
    state: RiskSetState,
    log_wealth: f64,
    events: u64,
}

impl LogrankProcess {
    pub fn new(state: RiskSetState) -> Self {
        LogrankProcess {
            state,
            log_wealth: 0.0,
            events: 0,
        }
    }

    pub fn state(&self) -> &RiskSetState {
        &self.state
    }

    pub fn observe_event(&mut self, event_in_treatment: bool) -> Result<()> {
        let bet = self.state.step(event_in_treatment)?;
        self.log_wealth += bet.value().ln();
        self.events += 1;
        Ok(())
    }

    pub fn events(&self) -> u64 {
        self.events
    }
}

impl StreamingEProcess for LogrankProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        if x == 0.0 || x == 1.0 {
            self.observe_event(x == 1.0)
        } else {
            Err(Error::data(format!("expected a group bit, got {x}")))
        }
    }

    fn log_evalue(&self) -> f64 {
        self.log_wealth
    }
}
