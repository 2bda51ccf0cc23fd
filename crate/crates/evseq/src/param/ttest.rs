//! Scale-invariant sequential t-test.
//!
//! Null: the observations are iid `N(δ₀σ, σ²)` for some unknown σ > 0;
//! alternative: iid `N(δ₁σ, σ²)`. Coarsening to `V_i = X_i/|X_1|` removes
//! the scale nuisance, and the likelihood ratio of the coarsened process is
//! a test martingale. It equals the ratio of right-Haar (prior `1/σ`)
//! marginal densities of the raw data, which reduces in closed form to the
//! noncentral Student kernel
//!
//! ```text
//!   M_n(c) = ∫₀^∞ wⁿ exp(−w²/2 + c·w) dw
//! ```
//!
//! of the sufficient statistics: with `r = Σx / sqrt(Σx²)`,
//!
//! ```text
//!   log E_t = −t(δ₁² − δ₀²)/2 + ln M_{t−1}(δ₁ r) − ln M_{t−1}(δ₀ r).
//! ```
//!
//! `r` is exactly invariant under rescaling every observation by c > 0, so
//! the whole wealth path is. `ln M_n(c)` is evaluated by an exact log-space
//! recurrence for c ≥ 0 (all terms positive, no cancellation) and by
//! double-exponential quadrature for c < 0, where the upward recurrence
//! loses all precision to cancellation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_normal_cdf, log_add_exp, log_sum_exp};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln M_n(c)` with `M_n(c) = ∫₀^∞ wⁿ exp(−w²/2 + c w) dw`.
pub fn ln_m(n: u64, c: f64) -> f64 {
    if c >= 0.0 {
        ln_m_recurrence(n, c)
    } else {
        ln_m_quadrature(n, c)
    }
}

/// Exact three-term recurrence `M_{k+1} = k M_{k−1} + c M_k` carried in log
/// space; every term is positive for c ≥ 0.
fn ln_m_recurrence(n: u64, c: f64) -> f64 {
    debug_assert!(c >= 0.0);
    // M_0 = e^{c²/2} √(2π) Φ(c), M_1 = 1 + c M_0.
    let l0 = c * c / 2.0 + LN_SQRT_2PI + ln_normal_cdf(c);
    if n == 0 {
        return l0;
    }
    let ln_c = c.ln(); // −∞ for c = 0 is fine under log_add_exp
    let l1 = log_add_exp(0.0, ln_c + l0);
    if n == 1 {
        return l1;
    }
    let mut prev = l0;
    let mut cur = l1;
    for k in 1..n {
        let next = log_add_exp((k as f64).ln() + prev, ln_c + cur);
        prev = cur;
        cur = next;
    }
    cur
}

/// Double-exponential quadrature on (0, ∞) via `w = exp(π/2 · sinh t)`.
fn ln_m_quadrature(n: u64, c: f64) -> f64 {
    let nf = n as f64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let t_max = 3.8;
    let ln_integrand = |t: f64| -> f64 {
        let ln_w = half_pi * t.sinh();
        if ln_w > 350.0 {
            return f64::NEG_INFINITY;
        }
        let w = ln_w.exp();
        // wⁿ e^{−w²/2 + cw} · dw/dt, with dw/dt = w · (π/2) cosh t.
        nf * ln_w - w * w / 2.0 + c * w + ln_w + (half_pi * t.cosh()).ln()
    };
    let mut prev = f64::NAN;
    let mut k_pow = 4u32; // start at h = t_max / 2^4
    loop {
        let steps = 1usize << k_pow;
        let h = t_max / steps as f64;
        let mut terms = Vec::with_capacity(2 * steps + 1);
        for k in -(steps as i64)..=(steps as i64) {
            terms.push(ln_integrand(k as f64 * h));
        }
        let s = log_sum_exp(&terms) + h.ln();
        if !prev.is_nan() && (s - prev).abs() < 1e-12 {
            return s;
        }
        prev = s;
        k_pow += 1;
        if k_pow > 10 {
            return s;
        }
    }
}

/// Streaming state of the sequential t-test e-process.
///
/// Wealth depends on the data only through `(t, Σx, Σx²)`; the ratio
/// `Σx/sqrt(Σx²)` makes it exactly scale-invariant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TTestState {
    delta0: f64,
    delta1: f64,
    t: u64,
    sum: f64,
    sum_sq: f64,
}

/// Outcome of feeding one observation to the t-test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTestStep {
    Applied,
    /// A leading zero cannot define the scale pivot `V_1 = X_1/|X_1|`; the
    /// state is held unchanged until a nonzero observation arrives.
    HeldLeadingZero,
}

impl TTestState {
    pub fn new(delta0: f64, delta1: f64) -> Result<Self> {
        if !delta0.is_finite() || !delta1.is_finite() {
            return Err(Error::Parameter(
                "effect sizes must be finite".into(),
            ));
        }
        Ok(TTestState {
            delta0,
            delta1,
            t: 0,
            sum: 0.0,
            sum_sq: 0.0,
        })
    }

    pub fn observe(&mut self, x: f64) -> Result<TTestStep> {
        if !x.is_finite() {
            return Err(Error::data(format!("non-finite observation {x}")));
        }
        if self.t == 0 && x == 0.0 {
            return Ok(TTestStep::HeldLeadingZero);
        }
        self.t += 1;
        self.sum += x;
        self.sum_sq += x * x;
        Ok(TTestStep::Applied)
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Log wealth of the likelihood-ratio martingale of the maximal
    /// invariants, via the right-Haar closed form.
    pub fn log_wealth(&self) -> f64 {
        if self.t == 0 || self.delta0 == self.delta1 {
            return 0.0;
        }
        let r = self.sum / self.sum_sq.sqrt();
        let t = self.t as f64;
        let n = self.t - 1;
        -t * (self.delta1 * self.delta1 - self.delta0 * self.delta0) / 2.0
            + ln_m(n, self.delta1 * r)
            - ln_m(n, self.delta0 * r)
    }
}

impl crate::eprocess::StreamingEProcess for TTestState {
    fn observe(&mut self, x: f64) -> Result<()> {
        TTestState::observe(self, x).map(|_| ())
    }

    fn log_evalue(&self) -> f64 {
        self.log_wealth()
    }
}
