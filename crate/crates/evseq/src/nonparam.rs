//! Tests with composite nonparametric nulls: symmetry about zero and binary
//! exchangeability.
//!
//! Symmetry: for any λ, multiplying wealth by `exp(λx − λ²x²/2)` gives a
//! test supermartingale under every distribution that is conditionally
//! symmetric about zero. The raw bet is inadmissible: replacing it with
//! `1 + odd part` — i.e. `b°(x) = 1 + [g(x) − g(−x)]/2` — gives a test
//! *martingale* whose wealth dominates the raw version pathwise.
//!
//! Exchangeability: no nontrivial test supermartingale exists for binary
//! exchangeability in the data filtration, but universal inference gives an
//! e-process: a smoothed first-order Markov predictor in the numerator over
//! the exchangeable maximum likelihood (which for binary data depends only
//! on the counts) in the denominator.

use serde::{Deserialize, Serialize};

use crate::eprocess::StreamingEProcess;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Symmetry about zero
// ---------------------------------------------------------------------------

/// Single-round symmetry bet parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryBetSpec {
    pub lambda: f64,
    /// Use the admissible odd-rectified bet instead of the raw
    /// sub-Gaussian-style bet.
    pub rectified: bool,
}

impl SymmetryBetSpec {
    pub fn new(lambda: f64, rectified: bool) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Parameter(format!(
                "symmetry lambda must be finite, got {lambda}"
            )));
        }
        Ok(SymmetryBetSpec { lambda, rectified })
    }
}

/// Raw bet `g(x) = exp(λx − λ²x²/2)`.
pub fn symmetry_raw_bet(lambda: f64, x: f64) -> f64 {
    (lambda * x - lambda * lambda * x * x / 2.0).exp()
}

/// Rectified bet `b°(x) = 1 + [g(x) − g(−x)]/2 = 1 + e^{−λ²x²/2} sinh(λx)`.
///
/// `b° − 1` is odd in x, so the wealth process is a test martingale for the
/// symmetric null, and `b° ≥ g` pointwise because
/// `(g(x) + g(−x))/2 = e^{−λ²x²/2} cosh(λx) ≤ 1`.
pub fn symmetry_rectified_bet(lambda: f64, x: f64) -> f64 {
    let y = lambda * x;
    1.0 + (-y * y / 2.0).exp() * y.sinh()
}

/// One wealth step for the symmetry test; returns the multiplicative factor
/// applied.
pub fn symmetry_step_factor(spec: &SymmetryBetSpec, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::data("NaN observation"));
    }
    let raw = symmetry_raw_bet(spec.lambda, x);
    let bet = if spec.rectified {
        let rect = symmetry_rectified_bet(spec.lambda, x);
        if rect < 0.0 {
            // Cannot occur analytically: e^{−y²/2}|sinh y| < 1 for all y.
            return Err(Error::Invariant(format!(
                "rectified symmetry bet went negative at x={x}"
            )));
        }
        debug_assert!(rect >= raw - 1e-12 * raw.max(1.0));
        rect
    } else {
        raw
    };
    Ok(bet)
}

/// Streaming symmetry test process.
#[derive(Debug, Clone)]
pub struct SymmetryProcess {
    spec: SymmetryBetSpec,
    log_wealth: f64,
    t: u64,
}

impl SymmetryProcess {
    pub fn new(spec: SymmetryBetSpec) -> Self {
        SymmetryProcess {
            spec,
            log_wealth: 0.0,
            t: 0,
        }
    }

    pub fn time(&self) -> u64 {
        self.t
    }
}

impl StreamingEProcess for SymmetryProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        let factor = symmetry_step_factor(&self.spec, x)?;
        self.log_wealth += factor.ln();
        self.t += 1;
        Ok(())
    }

    fn log_evalue(&self) -> f64 {
        self.log_wealth
    }
}

// ---------------------------------------------------------------------------
// Binary exchangeability via universal inference
// ---------------------------------------------------------------------------

/// Counts underlying the universal-inference e-process for binary
/// exchangeability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySequenceState {
    pub count_ones: u64,
    pub count_zeros: u64,
    /// `transition_counts[prev][next]` over consecutive pairs seen so far.
    pub transition_counts: [[u64; 2]; 2],
    last_bit: Option<u8>,
}

impl Default for BinarySequenceState {
    fn default() -> Self {
        Self::new()
    }
}

impl BinarySequenceState {
    pub fn new() -> Self {
        BinarySequenceState {
            count_ones: 0,
            count_zeros: 0,
            transition_counts: [[0; 2]; 2],
            last_bit: None,
        }
    }

    pub fn len(&self) -> u64 {
        self.count_ones + self.count_zeros
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Add-1-smoothed Markov predictive probability of the next bit, using
    /// only the data recorded so far (predictable). The first bit has no
    /// context and is predicted with probability 1/2.
    pub fn predictive_prob(&self, next: u8) -> f64 {
        match self.last_bit {
            None => 0.5,
            Some(prev) => {
                let row = &self.transition_counts[prev as usize];
                (row[next as usize] as f64 + 1.0) / (row[0] as f64 + row[1] as f64 + 2.0)
            }
        }
    }

    fn push(&mut self, bit: u8) {
        if let Some(prev) = self.last_bit {
            self.transition_counts[prev as usize][bit as usize] += 1;
        }
        if bit == 1 {
            self.count_ones += 1;
        } else {
            self.count_zeros += 1;
        }
        self.last_bit = Some(bit);
        debug_assert_eq!(
            self.transition_counts.iter().flatten().sum::<u64>() + 1,
            self.len()
        );
    }
}

/// Universal-inference e-process for binary exchangeability.
///
/// Numerator: product of add-1-smoothed first-order Markov predictive
/// probabilities. Denominator: the exchangeable maximum likelihood, which on
/// binary data is the iid-Bernoulli MLE `(k/t)^k ((t−k)/t)^{t−k}`.
#[derive(Debug, Clone, Default)]
pub struct ExchangeabilityProcess {
    state: BinarySequenceState,
    log_numerator: f64,
}

impl ExchangeabilityProcess {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> &BinarySequenceState {
        &self.state
    }

    pub fn observe_bit(&mut self, bit: u8) -> Result<()> {
        if bit > 1 {
            return Err(Error::data(format!("expected a bit, got {bit}")));
        }
        self.log_numerator += self.state.predictive_prob(bit).ln();
        self.state.push(bit);
        Ok(())
    }

    fn log_denominator(&self) -> f64 {
        let t = self.state.len() as f64;
        if t == 0.0 {
            return 0.0;
        }
        let k = self.state.count_ones as f64;
        let mut ld = 0.0;
        if k > 0.0 {
            ld += k * (k / t).ln();
        }
        if t - k > 0.0 {
            ld += (t - k) * ((t - k) / t).ln();
        }
        ld
    }
}

impl StreamingEProcess for ExchangeabilityProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        if x == 0.0 || x == 1.0 {
            self.observe_bit(x as u8)
        } else {
            Err(Error::data(format!("expected a 0/1 observation, got {x}")))
        }
    }

    fn log_evalue(&self) -> f64 {
        self.log_numerator - self.log_denominator()
    }
}
