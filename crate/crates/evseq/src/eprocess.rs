//! Log-space wealth accounting for test (super)martingales and e-processes.
//!
//! The central object is [`WealthLedger`]: the wealth of a bettor playing
//! against the null, starting from one unit. A nonnegative per-round
//! multiplicative factor ([`UnitBet`]) with conditional null expectation at
//! most one keeps the wealth a test supermartingale, so by Ville's
//! inequality the running maximum exceeds `1/α` with null probability at
//! most `α` — which is what [`ville_reject`] thresholds and what
//! [`anytime_p`] inverts into an anytime-valid p-value.
//!
//! All arithmetic is done on natural-log wealth; products of thousands of
//! bets would otherwise overflow or underflow. Raw wealth is exponentiated
//! on demand.
//!
//! The module also holds the batch e-value combinators (convex averaging,
//! multiplication), p-to-e calibrators, and the lookback adjuster that turns
//! a running maximum back into an e-value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Bets below this are flushed to exact zero and bankrupt the ledger;
/// denormal-range wealth is statistically meaningless and numerically
/// hazardous.
pub const BANKRUPTCY_FLOOR: f64 = 1e-300;

/// One round's multiplicative wealth factor.
///
/// Construction only checks nonnegativity; the statistical contract — a
/// conditional null expectation of at most one — is certified by the module
/// that builds the bet and checked by the Monte Carlo oracles in [`crate::sim`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitBet(f64);

impl UnitBet {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidBet(value));
        }
        Ok(UnitBet(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A realized e-value: nonnegative, possibly infinite.
///
/// An infinite e-value encodes an event with measure zero under every null;
/// downstream thresholding treats it as rejecting at any level.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EValue(f64);

impl EValue {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Parameter(format!(
                "e-value must be nonnegative, got {value}"
            )));
        }
        Ok(EValue(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `e ≥ 1/α`, with +∞ rejecting at every level.
    pub fn rejects_at(self, alpha: f64) -> Result<bool> {
        check_alpha(alpha)?;
        Ok(self.0 >= 1.0 / alpha)
    }
}

/// An anytime-valid p-value: `min(1, 1/max_{s≤t} M_s)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AnytimeP(f64);

impl AnytimeP {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Running log-wealth of one betting process plus its running maximum.
///
/// Invariants:
/// - wealth starts at 1 (`log_wealth = 0`) and the running maximum never
///   drops below `max(0, log_wealth)`;
/// - zero is absorbing: once a zero bet arrives the ledger is bankrupt and
///   every later log-wealth is −∞;
/// - the step count increments by exactly one per recorded bet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WealthLedger {
    log_wealth: f64,
    max_log_wealth: f64,
    steps: u64,
    bankrupt: bool,
}

impl Default for WealthLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl WealthLedger {
    pub fn new() -> Self {
        WealthLedger {
            log_wealth: 0.0,
            max_log_wealth: 0.0,
            steps: 0,
            bankrupt: false,
        }
    }

    /// Records one bet, multiplying the wealth by `bet`.
    pub fn step(&mut self, bet: UnitBet) {
        self.steps += 1;
        if self.bankrupt {
            return;
        }
        let v = bet.value();
        if v < BANKRUPTCY_FLOOR {
            self.bankrupt = true;
            self.log_wealth = f64::NEG_INFINITY;
            return;
        }
        self.log_wealth += v.ln();
        if self.log_wealth > self.max_log_wealth {
            self.max_log_wealth = self.log_wealth;
        }
    }

    /// Adds `delta` to the log wealth directly; the supermartingale
    /// constructions that work on log scale throughout use this to avoid a
    /// needless exp/ln round trip.
    pub fn step_log(&mut self, delta: f64) {
        self.steps += 1;
        if self.bankrupt {
            return;
        }
        if delta == f64::NEG_INFINITY {
            self.bankrupt = true;
            self.log_wealth = f64::NEG_INFINITY;
            return;
        }
        self.log_wealth += delta;
        if self.log_wealth > self.max_log_wealth {
            self.max_log_wealth = self.log_wealth;
        }
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_wealth
    }

    pub fn wealth(&self) -> f64 {
        self.log_wealth.exp()
    }

    pub fn max_log_wealth(&self) -> f64 {
        self.max_log_wealth
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn is_bankrupt(&self) -> bool {
        self.bankrupt
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    Ok(())
}

/// Level-α sequential test: reject once the running maximum wealth reaches
/// `1/α`. The decision is monotone — once true it stays true on the same
/// growing ledger, because it thresholds the running maximum.
pub fn ville_reject(ledger: &WealthLedger, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(ledger.max_log_wealth() >= -alpha.ln())
}

/// Anytime-valid p-value from the running maximum wealth.
pub fn anytime_p(ledger: &WealthLedger) -> AnytimeP {
    AnytimeP((-ledger.max_log_wealth()).exp().min(1.0))
}

/// Convex combination of e-values.
///
/// Valid under arbitrary dependence between the inputs, provided the weights
/// were fixed before the e-values were observed (the caller's
/// responsibility).
pub fn average_evalues(evalues: &[EValue], weights: &[f64]) -> Result<EValue> {
    if evalues.len() != weights.len() {
        return Err(Error::Parameter(format!(
            "{} e-values but {} weights",
            evalues.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
        return Err(Error::Parameter("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "weights must sum to 1 (got {total})"
        )));
    }
    let mut acc = 0.0;
    for (e, &w) in evalues.iter().zip(weights) {
        if w > 0.0 {
            acc += w * e.value();
        }
    }
    EValue::new(acc)
}

/// Product of e-values, accumulated in log space.
///
/// Requires independence or sequential conditional validity of the factors
/// (caller's assertion). A zero factor dominates: the product is zero even
/// if another factor is infinite.
pub fn product_evalues<I: IntoIterator<Item = EValue>>(evalues: I) -> EValue {
    let mut log_acc = 0.0_f64;
    for e in evalues {
        let v = e.value();
        if v == 0.0 {
            return EValue(0.0);
        }
        log_acc += v.ln();
    }
    EValue(log_acc.exp())
}

/// Log of a product of e-values; −∞ encodes a zero factor.
pub fn product_evalues_log<I: IntoIterator<Item = EValue>>(evalues: I) -> f64 {
    let mut log_acc = 0.0_f64;
    for e in evalues {
        let v = e.value();
        if v == 0.0 {
            return f64::NEG_INFINITY;
        }
        log_acc += v.ln();
    }
    log_acc
}

/// A p-to-e calibrator: a nonincreasing function on \[0,1] integrating to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Calibrator {
    /// `f_κ(p) = κ p^{κ−1}` for κ ∈ (0,1).
    Kappa { kappa: f64 },
    /// The κ-family integrated over κ ∈ (0,1):
    /// `f(p) = (1 − p + p ln p) / (p ln² p)`.
    Integrated,
}

impl Calibrator {
    pub fn validate(&self) -> Result<()> {
        if let Calibrator::Kappa { kappa } = self {
            if !(*kappa > 0.0 && *kappa < 1.0) {
                return Err(Error::Parameter(format!(
                    "calibrator kappa must be in (0,1), got {kappa}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the calibrator; `p = 0` maps to +∞.
    pub fn apply(&self, p: f64) -> Result<EValue> {
        self.validate()?;
        if p.is_nan() || !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("p must be in [0,1], got {p}")));
        }
        let v = self.density(p, 1.0 - p);
        EValue::new(v)
    }

    /// Pointwise density, taking the complement `1 − p` separately so the
    /// quadrature oracle can evaluate accurately next to p = 1.
    pub(crate) fn density(&self, p: f64, one_minus_p: f64) -> f64 {
        match *self {
            Calibrator::Kappa { kappa } => {
                if p == 0.0 {
                    f64::INFINITY
                } else {
                    kappa * p.powf(kappa - 1.0)
                }
            }
            Calibrator::Integrated => {
                if p == 0.0 {
                    return f64::INFINITY;
                }
                let q = one_minus_p;
                if q < 1e-8 {
                    // Series around p = 1: f = 1/2 + q/6 + O(q²).
                    return 0.5 + q / 6.0;
                }
                // ln p from whichever of p, 1−p is known to full precision.
                let ln_p = if p <= 0.5 { p.ln() } else { (-q).ln_1p() };
                (q + p * ln_p) / (p * ln_p * ln_p)
            }
        }
    }

    /// The density expressed in u = −ln p coordinates, already including the
    /// Jacobian: `g(u) = f(e^{−u}) e^{−u}`, so `∫₀^∞ g = ∫₀¹ f`. The
    /// quadrature oracle integrates this form because the mass of the
    /// integrated calibrator near p = 0 sits beyond the smallest positive
    /// float in p-coordinates.
    pub(crate) fn density_neg_log(&self, u: f64) -> f64 {
        match *self {
            Calibrator::Kappa { kappa } => kappa * (-kappa * u).exp(),
            Calibrator::Integrated => {
                if u < 1e-4 {
                    // Series at u → 0: (1 − e^{−u}(1+u))/u² = 1/2 − u/3 + u²/8 − ...
                    0.5 - u / 3.0 + u * u / 8.0
                } else {
                    (1.0 - (-u).exp() * (1.0 + u)) / (u * u)
                }
            }
        }
    }

    /// The built-in family: κ ∈ {0.1, …, 0.9} plus the integrated variant.
    pub fn builtin() -> Vec<Calibrator> {
        let mut v: Vec<Calibrator> = (1..=9)
            .map(|k| Calibrator::Kappa {
                kappa: k as f64 / 10.0,
            })
            .collect();
        v.push(Calibrator::Integrated);
        v
    }

    pub fn name(&self) -> String {
        match self {
            Calibrator::Kappa { kappa } => format!("kappa-{kappa:.1}"),
            Calibrator::Integrated => "integrated".to_string(),
        }
    }
}

/// A lookback adjuster: a function `a` with `∫₁^∞ a(y)/y² dy ≤ 1`, turning
/// the running maximum of a wealth process back into an e-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjuster {
    /// `a(y) = √y − 1` for y ≥ 1 (zero below); its integral condition holds
    /// with equality.
    SqrtLookback,
}

impl Adjuster {
    pub fn apply_to_max(&self, max_wealth: f64) -> f64 {
        match self {
            Adjuster::SqrtLookback => {
                if max_wealth < 1.0 {
                    0.0
                } else {
                    max_wealth.sqrt() - 1.0
                }
            }
        }
    }
}

/// E-value from the running maximum of a ledger via a lookback adjuster.
pub fn adjust_running_max(ledger: &WealthLedger, adjuster: Adjuster) -> EValue {
    let y = ledger.max_log_wealth().exp();
    EValue(adjuster.apply_to_max(y))
}

/// A streaming e-process over scalar observations: feed data one point at a
/// time, read off the current log e-value.
///
/// Implementations promise that under every distribution in their declared
/// null class the process is an e-value at every stopping time. The Monte
/// Carlo harness in [`crate::sim`] checks exactly that.
pub trait StreamingEProcess {
    fn observe(&mut self, x: f64) -> Result<()>;

    fn log_evalue(&self) -> f64;

    fn evalue(&self) -> f64 {
        self.log_evalue().exp()
    }
}

/// Mixture of e-processes maintained as a log-weighted log-sum-exp.
pub fn mixture_log_evalue(log_weights: &[f64], log_values: &[f64]) -> f64 {
    debug_assert_eq!(log_weights.len(), log_values.len());
    let terms: Vec<f64> = log_weights
        .iter()
        .zip(log_values)
        .map(|(&lw, &lv)| lw + lv)
        .collect();
    log_sum_exp(&terms)
}
