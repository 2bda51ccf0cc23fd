//! Predictable bet policies λ_t for bounded-observation betting martingales
//! and λ-indexed supermartingale families.
//!
//! A policy emits the next bet from the past only; replaying a data prefix
//! yields the identical λ_t regardless of what comes later. For bounded
//! observations in \[0,1] with candidate mean μ, bets are truncated into
//! `[−c/(1−μ), c/μ]` with `c < 1`, which keeps every wealth factor
//! `1 + λ(x − μ)` at least `1 − c > 0` — the policy never bets the farm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_weighted_sum_exp;

/// Default truncation constant: wealth factor at least 0.5 per round.
pub const DEFAULT_TRUNCATION: f64 = 0.5;
/// Reference level in the plug-in bet formula.
pub const DEFAULT_ALPHA_REF: f64 = 0.05;
/// Variance floor, guarding the plug-in formula against constant prefixes.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-4;

/// Legal bet range of the consuming supermartingale family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRange {
    pub lo: f64,
    pub hi: f64,
}

impl LambdaRange {
    /// Range for the bounded-mean betting family `1 + λ(x − μ)` on \[0,1]:
    /// `[−c/(1−μ), c/μ]`. Division by zero at the endpoints yields an
    /// unbounded (infinite) side, which is harmless under clamping.
    pub fn bounded_mean(mu: f64, c: f64) -> Self {
        LambdaRange {
            lo: -c / (1.0 - mu),
            hi: c / mu,
        }
    }

    /// One-sided range `[0, c]` for the sub-exponential family, whose bets
    /// must stay in [0, 1).
    pub fn subexponential(c: f64) -> Self {
        LambdaRange { lo: 0.0, hi: c }
    }

    pub fn clamp(&self, lambda: f64) -> f64 {
        lambda.clamp(self.lo, self.hi)
    }
}

/// Predictable running statistics over a \[0,1]-valued stream.
///
/// The mean estimate is regularized toward 1/2 and the variance estimate
/// toward 1/4 (the maximal variance on \[0,1]), so both are well defined
/// before any data arrives and never degenerate on a constant prefix.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunningStats {
    n: u64,
    sum: f64,
    sq_dev_sum: f64,
}

impl Default for RunningStats {
    fn default() -> Self {
        Self::new()
    }
}

impl RunningStats {
    pub fn new() -> Self {
        RunningStats {
            n: 0,
            sum: 0.0,
            sq_dev_sum: 0.0,
        }
    }

    /// Regularized mean estimate for the *next* observation: `(1/2 + Σx)/(n+1)`.
    pub fn predictable_mean(&self) -> f64 {
        (0.5 + self.sum) / (self.n as f64 + 1.0)
    }

    /// Regularized variance estimate: `(1/4 + Σ(x_i − μ̂_i)²)/(n+1)`.
    pub fn variance_estimate(&self) -> f64 {
        (0.25 + self.sq_dev_sum) / (self.n as f64 + 1.0)
    }

    /// Squared-deviation accumulator `Σ(x_i − μ̂_i)²` with predictable μ̂_i.
    pub fn sq_dev_sum(&self) -> f64 {
        self.sq_dev_sum
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Feeds one observation. Returns the predictable mean that was in
    /// force *before* this observation (the μ̂_i paired with x_i).
    pub fn observe(&mut self, x: f64) -> f64 {
        let mu_hat = self.predictable_mean();
        let d = x - mu_hat;
        self.sq_dev_sum += d * d;
        self.sum += x;
        self.n += 1;
        mu_hat
    }
}

/// A predictable rule producing the next single-round bet from the past only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetPolicy {
    /// Constant λ, truncated to the consuming family's legal range.
    Fixed { lambda: f64 },
    /// Empirical plug-in bet
    /// `λ_t = sqrt(2 ln(2/α_ref) / (σ̂²_{t−1} · t · ln(t+1)))`,
    /// with `λ₁ = min(cap, sqrt(2 ln(2/α_ref)))` on the first round.
    PluginEmpirical {
        c: f64,
        variance_floor: f64,
        alpha_ref: f64,
    },
}

impl BetPolicy {
    pub fn plugin_default() -> Self {
        BetPolicy::PluginEmpirical {
            c: DEFAULT_TRUNCATION,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            alpha_ref: DEFAULT_ALPHA_REF,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BetPolicy::Fixed { lambda } => {
                if lambda.is_nan() {
                    return Err(Error::Parameter("fixed lambda must be finite".into()));
                }
            }
            BetPolicy::PluginEmpirical {
                c,
                variance_floor,
                alpha_ref,
            } => {
                if !(*c > 0.0 && *c < 1.0) {
                    return Err(Error::Parameter(format!(
                        "truncation constant must be in (0,1), got {c}"
                    )));
                }
                if !(*variance_floor > 0.0) {
                    return Err(Error::Parameter("variance floor must be positive".into()));
                }
                if !(*alpha_ref > 0.0 && *alpha_ref < 1.0) {
                    return Err(Error::Parameter("alpha_ref must be in (0,1)".into()));
                }
            }
        }
        Ok(())
    }

    /// Next bet for a fixed policy.
    pub fn next_bet_fixed(&self, range: LambdaRange) -> Result<f64> {
        match self {
            BetPolicy::Fixed { lambda } => Ok(range.clamp(*lambda)),
            _ => Err(Error::Parameter("policy is not fixed-bet".into())),
        }
    }

    /// Unclamped magnitude of the plug-in bet at round `t` (1-based), given
    /// the stats of the first `t−1` observations. Grid-inversion callers
    /// hoist this out of their per-candidate loop.
    pub fn plugin_raw_bet(&self, stats: &RunningStats, t: u64) -> Result<f64> {
        let (variance_floor, alpha_ref) = match self {
            BetPolicy::PluginEmpirical {
                variance_floor,
                alpha_ref,
                ..
            } => (*variance_floor, *alpha_ref),
            _ => return Err(Error::Parameter("policy is not plug-in".into())),
        };
        if t == 0 {
            return Err(Error::Parameter("round index t is 1-based".into()));
        }
        let two_ln = 2.0 * (2.0 / alpha_ref).ln();
        Ok(if t == 1 {
            two_ln.sqrt()
        } else {
            let var = stats.variance_estimate().max(variance_floor);
            (two_ln / (var * t as f64 * ((t + 1) as f64).ln())).sqrt()
        })
    }

    /// Next bet for the plug-in policy at round `t` (1-based), given the
    /// stats of the first `t−1` observations.
    ///
    /// One-sided callers get a nonnegative bet in `[0, range.hi]`. Two-sided
    /// callers pass the candidate mean: the bet is signed toward the running
    /// mean estimate and clamped to the full range.
    pub fn next_bet_plugin(
        &self,
        stats: &RunningStats,
        t: u64,
        range: LambdaRange,
        mu_candidate: Option<f64>,
    ) -> Result<f64> {
        let raw = self.plugin_raw_bet(stats, t)?;
        let lam = match mu_candidate {
            None => raw.clamp(0.0, range.hi),
            Some(mu) => {
                let signed = if stats.predictable_mean() >= mu {
                    raw
                } else {
                    -raw
                };
                range.clamp(signed)
            }
        };
        Ok(lam)
    }
}

/// A finite mixing distribution over bet values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Parameter(
                "lambda grid needs matching nonempty points and weights".into(),
            ));
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::Parameter("grid weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "grid weights must sum to 1 (got {total})"
            )));
        }
        Ok(LambdaGrid { points, weights })
    }

    /// Uniform weights over the given points.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Parameter("lambda grid must be nonempty".into()));
        }
        let w = vec![1.0 / n as f64; n];
        LambdaGrid::new(points, w)
    }

    /// Default mixture grid: `n` logarithmically spaced points on
    /// `[hi/1000, hi]` with uniform weights.
    pub fn log_spaced(hi: f64, n: usize) -> Result<Self> {
        if !(hi > 0.0) || n < 2 {
            return Err(Error::Parameter(
                "log-spaced grid needs hi > 0 and n >= 2".into(),
            ));
        }
        let lo = hi / 1000.0;
        let ratio = (hi / lo).ln();
        let points: Vec<f64> = (0..n)
            .map(|k| lo * (ratio * k as f64 / (n - 1) as f64).exp())
            .collect();
        LambdaGrid::uniform(points)
    }

    /// Grid with weights proportional to a gamma(shape, rate) density at
    /// log-spaced nodes; the discrete stand-in for gamma mixing over the
    /// sub-exponential family.
    pub fn gamma_weighted(hi: f64, n: usize, shape: f64, rate: f64) -> Result<Self> {
        let base = Self::log_spaced(hi, n)?;
        let mut weights: Vec<f64> = base
            .points
            .iter()
            .map(|&x| x.powf(shape - 1.0) * (-rate * x).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Parameter("gamma weights degenerate".into()));
        }
        for w in &mut weights {
            *w /= total;
        }
        // Renormalize exactly.
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        LambdaGrid::new(base.points, weights)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Log-wealth of the mixture `Σ_k w_k exp(L_k)`, computed with max-shift
/// stabilization.
pub fn mixture_log_wealth(grid: &LambdaGrid, per_lambda_log_wealths: &[f64]) -> Result<f64> {
    if per_lambda_log_wealths.len() != grid.len() {
        return Err(Error::Parameter(format!(
            "{} log-wealths for a {}-point grid",
            per_lambda_log_wealths.len(),
            grid.len()
        )));
    }
    Ok(log_weighted_sum_exp(
        grid.weights(),
        per_lambda_log_wealths,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_policy_passes_through_and_truncates() {
        let p = BetPolicy::Fixed { lambda: 0.2 };
        let r = LambdaRange::bounded_mean(0.5, 0.5);
        assert_eq!(p.next_bet_fixed(r).unwrap(), 0.2);

        let p = BetPolicy::Fixed { lambda: 5.0 };
        assert_eq!(p.next_bet_fixed(r).unwrap(), 1.0); // c/mu = 0.5/0.5

        let p = BetPolicy::Fixed { lambda: 0.0 };
        assert_eq!(p.next_bet_fixed(r).unwrap(), 0.0);
    }

    #[test]
    fn bounded_range_keeps_wealth_positive() {
        let c = 0.5;
        for &mu in &[0.0, 0.1, 0.5, 0.9, 1.0] {
            let r = LambdaRange::bounded_mean(mu, c);
            for &raw in &[-100.0, -1.0, 0.3, 2.0, 100.0] {
                let lam = r.clamp(raw);
                for &x in &[0.0, 0.25, 0.75, 1.0] {
                    assert!(
                        1.0 + lam * (x - mu) >= 1.0 - c - 1e-12,
                        "mu={mu} lam={lam} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn plugin_first_round_initialization() {
        let p = BetPolicy::plugin_default();
        let stats = RunningStats::new();
        let r = LambdaRange::bounded_mean(0.5, 0.5);
        let lam = p.next_bet_plugin(&stats, 1, r, None).unwrap();
        // min(c/mu, sqrt(2 ln(2/alpha_ref))) with cap 1.0 here.
        let unconstrained = (2.0 * (2.0 / 0.05_f64).ln()).sqrt();
        assert!((lam - unconstrained.min(1.0)).abs() < 1e-12);
    }

    #[test]
    fn plugin_matches_stated_formula() {
        // Independent re-evaluation of the plug-in formula on a fixed
        // 10-point history.
        let xs = [0.1, 0.9, 0.4, 0.6, 0.5, 0.2, 0.8, 0.7, 0.3, 0.55];
        let mut stats = RunningStats::new();
        let mut sum = 0.0;
        let mut sq_dev = 0.0;
        let mut n = 0u64;
        for &x in &xs {
            let mu_hat_manual = (0.5 + sum) / (n as f64 + 1.0);
            sq_dev += (x - mu_hat_manual) * (x - mu_hat_manual);
            sum += x;
            n += 1;
            stats.observe(x);
        }
        let t = n + 1;
        let var = ((0.25 + sq_dev) / (n as f64 + 1.0)).max(1e-4);
        let expected =
            (2.0 * (2.0 / 0.05_f64).ln() / (var * t as f64 * ((t + 1) as f64).ln())).sqrt();

        let p = BetPolicy::plugin_default();
        let r = LambdaRange { lo: 0.0, hi: 10.0 };
        let lam = p.next_bet_plugin(&stats, t, r, None).unwrap();
        assert!((lam - expected).abs() < 1e-14);
    }

    #[test]
    fn plugin_vanishes_for_huge_variance() {
        let p = BetPolicy::PluginEmpirical {
            c: 0.5,
            variance_floor: 1e-4,
            alpha_ref: 0.05,
        };
        let mut stats = RunningStats::new();
        // Alternating extremes make the variance estimate large.
        for i in 0..1000 {
            stats.observe(if i % 2 == 0 { 0.0 } else { 1.0 });
        }
        let r = LambdaRange { lo: 0.0, hi: 10.0 };
        let lam = p.next_bet_plugin(&stats, 1001, r, None).unwrap();
        assert!(lam < 0.1);
    }

    #[test]
    fn plugin_two_sided_signs_toward_running_mean() {
        let p = BetPolicy::plugin_default();
        let mut stats = RunningStats::new();
        for _ in 0..20 {
            stats.observe(0.9);
        }
        let r = LambdaRange::bounded_mean(0.5, 0.5);
        let up = p.next_bet_plugin(&stats, 21, r, Some(0.5)).unwrap();
        assert!(up > 0.0);
        let down = p.next_bet_plugin(&stats, 21, r, Some(0.99)).unwrap();
        assert!(down < 0.0);
    }

    #[test]
    fn predictability_prefix_replay() {
        // The bet at round t only depends on the first t−1 points.
        let xs = [0.2, 0.7, 0.7, 0.1, 0.9, 0.5];
        let futures = [0.0, 1.0, 0.42];
        let p = BetPolicy::plugin_default();
        let r = LambdaRange { lo: 0.0, hi: 1.0 };
        for cut in 0..xs.len() {
            let mut base = RunningStats::new();
            for &x in &xs[..cut] {
                base.observe(x);
            }
            let lam0 = p
                .next_bet_plugin(&base, cut as u64 + 1, r, None)
                .unwrap();
            for &f in &futures {
                let mut alt = RunningStats::new();
                for &x in &xs[..cut] {
                    alt.observe(x);
                }
                let lam1 = p.next_bet_plugin(&alt, cut as u64 + 1, r, None).unwrap();
                assert_eq!(lam0, lam1);
                // Feeding the future point afterwards cannot change the
                // already-emitted bet.
                alt.observe(f);
                let _ = alt;
            }
        }
    }

    #[test]
    fn mixture_log_wealth_examples() {
        let g = LambdaGrid::new(vec![0.5], vec![1.0]).unwrap();
        assert!((mixture_log_wealth(&g, &[0.7]).unwrap() - 0.7).abs() < 1e-15);

        let g = LambdaGrid::uniform(vec![0.1, 0.2]).unwrap();
        assert!(mixture_log_wealth(&g, &[0.0, 0.0]).unwrap().abs() < 1e-15);

        let g = LambdaGrid::new(vec![0.1, 0.2], vec![0.3, 0.7]).unwrap();
        let v = mixture_log_wealth(&g, &[2.0_f64.ln(), 4.0_f64.ln()]).unwrap();
        assert!((v - 3.4_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn mixture_rejects_misaligned_lengths() {
        let g = LambdaGrid::uniform(vec![0.1, 0.2]).unwrap();
        assert!(mixture_log_wealth(&g, &[0.0]).is_err());
    }

    #[test]
    fn mixture_shift_identity() {
        let g = LambdaGrid::new(vec![0.1, 0.2, 0.3], vec![0.2, 0.3, 0.5]).unwrap();
        let ls = [1.0, -2.0, 0.5];
        let shifted: Vec<f64> = ls.iter().map(|l| l + 57.0).collect();
        let a = mixture_log_wealth(&g, &ls).unwrap();
        let b = mixture_log_wealth(&g, &shifted).unwrap() - 57.0;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mixture_dominates_worst_component() {
        let g = LambdaGrid::new(vec![0.1, 0.2, 0.3], vec![0.2, 0.3, 0.5]).unwrap();
        let ls = [1.0, -3.0, 2.5];
        let mix = mixture_log_wealth(&g, &ls).unwrap();
        let min_w: f64 = 0.2;
        let max_l = ls.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(mix >= min_w.ln() + max_l - 1e-12);
    }

    #[test]
    fn gamma_grid_is_convex() {
        let g = LambdaGrid::gamma_weighted(0.9, 32, 0.5, 1.0).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(g.weights().iter().all(|&w| w >= 0.0));
    }
}
