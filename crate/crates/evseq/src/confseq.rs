//! Confidence sequences for means.
//!
//! Each method maintains a family of test (super)martingales indexed by the
//! candidate mean μ and reports, at every time, the set of candidates whose
//! wealth has stayed below `1/α`. Four families are implemented:
//!
//! - sub-Gaussian Gaussian-mixture (closed form),
//! - sub-exponential empirical-Bernstein (plug-in bets, plus a λ-grid
//!   mixture backend),
//! - betting martingales on \[0,1] inverted over a candidate grid,
//! - Catoni-style heavy-tailed (finite conditional variance only),
//!
//! plus the asymptotic variant of the sub-Gaussian band with an empirical
//! standard deviation plugged in (no finite-sample guarantee; flagged).
//!
//! Two-sided bands are intersections of two one-sided constructions at α/2
//! each.

use serde::{Deserialize, Serialize};

use crate::betting::{BetPolicy, LambdaGrid, LambdaRange, RunningStats};
use crate::eprocess::StreamingEProcess;
use crate::error::{Error, Result};
use crate::numeric::log_weighted_sum_exp;

/// Which construction produced a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsMethod {
    SubGaussian,
    EmpBernstein,
    EmpBernsteinMixture,
    Betting,
    Catoni,
    Asymptotic,
    TwoByTwoEffect,
}

impl CsMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CsMethod::SubGaussian => "subgaussian",
            CsMethod::EmpBernstein => "emp-bernstein",
            CsMethod::EmpBernsteinMixture => "emp-bernstein-mixture",
            CsMethod::Betting => "betting",
            CsMethod::Catoni => "catoni",
            CsMethod::Asymptotic => "asymptotic",
            CsMethod::TwoByTwoEffect => "2x2-effect-difference",
        }
    }
}

/// Per-time interval for the target functional.
///
/// `interval_certified` is true when the construction guarantees the
/// rejection set's complement is an interval; the betting method reports the
/// hull of a grid scan instead and leaves it false.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub time: u64,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub method: CsMethod,
    pub interval_certified: bool,
}

/// Candidate-mean grid for inversion methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanGridSpec {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
}

impl MeanGridSpec {
    pub fn new(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        if !(lo < hi) || resolution < 2 {
            return Err(Error::Parameter(format!(
                "mean grid needs lo < hi and resolution >= 2, got [{lo}, {hi}] x {resolution}"
            )));
        }
        Ok(MeanGridSpec { lo, hi, resolution })
    }

    pub fn unit_interval() -> Self {
        MeanGridSpec {
            lo: 0.0,
            hi: 1.0,
            resolution: 1024,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.resolution;
        (0..n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64)
            .collect()
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

// ---------------------------------------------------------------------------
// Sub-Gaussian Gaussian-mixture
// ---------------------------------------------------------------------------

/// Default mixture scale, tuned to make the band tight around a target time
/// `t0` (the mixture cannot be tight everywhere; this picks where).
pub fn rho_for_target_time(t0: u64) -> f64 {
    1.0 / (t0.max(1) as f64).sqrt()
}

/// Closed-form sub-Gaussian mixture band:
/// `Y_t/t ± σ sqrt(((tρ²+1)/(t²ρ²))·ln((tρ²+1)/α²))`.
///
/// `rho` here is the scale of the Gaussian mixing distribution over the
/// *standardized* bet λσ; equivalently the band inverts
/// [`subgaussian_mixture_log_wealth`] called with mixture scale `rho/σ`.
pub fn subgaussian_cs(t: u64, sum: f64, sigma: f64, rho: f64, alpha: f64) -> Result<ConfidenceBand> {
    check_alpha(alpha)?;
    if !(sigma > 0.0) || !(rho > 0.0) {
        return Err(Error::Parameter(format!(
            "sigma and rho must be positive, got sigma={sigma}, rho={rho}"
        )));
    }
    if t == 0 {
        return Ok(ConfidenceBand {
            time: 0,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            alpha,
            method: CsMethod::SubGaussian,
            interval_certified: true,
        });
    }
    let tf = t as f64;
    let r2 = rho * rho;
    let hw = sigma * ((tf * r2 + 1.0) / (tf * tf * r2) * ((tf * r2 + 1.0) / (alpha * alpha)).ln())
        .sqrt();
    let center = sum / tf;
    Ok(ConfidenceBand {
        time: t,
        lower: center - hw,
        upper: center + hw,
        alpha,
        method: CsMethod::SubGaussian,
        interval_certified: true,
    })
}

/// Log-wealth of the Gaussian-mixture supermartingale at candidate mean μ:
/// `ρ²(Y_t − tμ)²/(2(tσ²ρ²+1)) − ½ ln(tρ²σ²+1)`.
///
/// `rho` is the raw mixture scale over the bet λ itself (see
/// [`subgaussian_cs`] for the relation between the two conventions).
pub fn subgaussian_mixture_log_wealth(t: u64, sum: f64, mu: f64, sigma: f64, rho: f64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    let tf = t as f64;
    let s = sum - tf * mu;
    let r2 = rho * rho;
    let denom = tf * sigma * sigma * r2 + 1.0;
    r2 * s * s / (2.0 * denom) - 0.5 * denom.ln()
}

/// Streaming Gaussian-mixture supermartingale at a fixed candidate mean.
#[derive(Debug, Clone)]
pub struct SubGaussianMixtureProcess {
    mu: f64,
    sigma: f64,
    rho_mix: f64,
    t: u64,
    sum: f64,
}

impl SubGaussianMixtureProcess {
    /// `rho_mix` is the raw mixture scale over λ.
    pub fn new(mu: f64, sigma: f64, rho_mix: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(rho_mix > 0.0) {
            return Err(Error::Parameter(
                "sigma and rho must be positive".into(),
            ));
        }
        Ok(SubGaussianMixtureProcess {
            mu,
            sigma,
            rho_mix,
            t: 0,
            sum: 0.0,
        })
    }

    pub fn time(&self) -> u64 {
        self.t
    }
}

impl StreamingEProcess for SubGaussianMixtureProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        if x.is_nan() {
            return Err(Error::data("NaN observation"));
        }
        self.t += 1;
        self.sum += x;
        Ok(())
    }

    fn log_evalue(&self) -> f64 {
        subgaussian_mixture_log_wealth(self.t, self.sum, self.mu, self.sigma, self.rho_mix)
    }
}

// ---------------------------------------------------------------------------
// Empirical-Bernstein (sub-exponential) plug-in
// ---------------------------------------------------------------------------

/// `ψ_E(λ) = −ln(1−λ) − λ`, the centered unit-rate exponential log-MGF.
pub fn psi_e(lambda: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&lambda));
    -(-lambda).ln_1p() - lambda
}

/// Streaming empirical-Bernstein confidence sequence with plug-in bets.
///
/// State is O(1): the band at time t is
/// `Σλ_i X_i / Σλ_i ± (ln(2/α) + Σψ_E(λ_i)(X_i − μ̂_i)²) / Σλ_i`,
/// clipped to \[0,1], which inverts a pair of one-sided sub-exponential
/// supermartingales sharing the same bets and variance term.
#[derive(Debug, Clone)]
pub struct EmpBernsteinCs {
    alpha: f64,
    policy: BetPolicy,
    cap: f64,
    stats: RunningStats,
    t: u64,
    sum_lambda: f64,
    sum_lambda_x: f64,
    psi_var: f64,
}

impl EmpBernsteinCs {
    pub fn new(alpha: f64, policy: BetPolicy, cap: f64) -> Result<Self> {
        check_alpha(alpha)?;
        policy.validate()?;
        if !(cap > 0.0 && cap < 1.0) {
            return Err(Error::Parameter(format!(
                "bet cap must be in (0,1), got {cap}"
            )));
        }
        Ok(EmpBernsteinCs {
            alpha,
            policy,
            cap,
            stats: RunningStats::new(),
            t: 0,
            sum_lambda: 0.0,
            sum_lambda_x: 0.0,
            psi_var: 0.0,
        })
    }

    pub fn with_defaults(alpha: f64) -> Result<Self> {
        Self::new(alpha, BetPolicy::plugin_default(), 0.5)
    }

    fn next_lambda(&self) -> Result<f64> {
        let range = LambdaRange::subexponential(self.cap);
        match &self.policy {
            BetPolicy::Fixed { .. } => {
                let lam = self.policy.next_bet_fixed(range)?;
                Ok(lam.clamp(0.0, self.cap))
            }
            BetPolicy::PluginEmpirical { .. } => {
                self.policy
                    .next_bet_plugin(&self.stats, self.t + 1, range, None)
            }
        }
    }

    pub fn observe(&mut self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::data(format!(
                "empirical-Bernstein CS needs observations in [0,1], got {x}"
            )));
        }
        let lam = self.next_lambda()?;
        let mu_hat = self.stats.observe(x);
        self.t += 1;
        self.sum_lambda += lam;
        self.sum_lambda_x += lam * x;
        self.psi_var += psi_e(lam) * (x - mu_hat) * (x - mu_hat);
        Ok(())
    }

    pub fn band(&self) -> ConfidenceBand {
        let (lower, upper) = if self.sum_lambda > 0.0 {
            let center = self.sum_lambda_x / self.sum_lambda;
            let hw = ((2.0 / self.alpha).ln() + self.psi_var) / self.sum_lambda;
            ((center - hw).max(0.0), (center + hw).min(1.0))
        } else {
            // No betting, no information.
            (0.0, 1.0)
        };
        ConfidenceBand {
            time: self.t,
            lower,
            upper,
            alpha: self.alpha,
            method: CsMethod::EmpBernstein,
            interval_certified: true,
        }
    }

    /// Log of the one-sided supermartingale at candidate μ; `up = true` is
    /// the side whose wealth grows when the true mean exceeds μ.
    pub fn log_smg_at(&self, mu: f64, up: bool) -> f64 {
        let drift = self.sum_lambda_x - mu * self.sum_lambda;
        let signed = if up { drift } else { -drift };
        signed - self.psi_var
    }

    pub fn time(&self) -> u64 {
        self.t
    }
}

// ---------------------------------------------------------------------------
// Empirical-Bernstein λ-grid mixture
// ---------------------------------------------------------------------------

/// Empirical-Bernstein CS with a λ-grid mixture (the auditable stand-in for
/// the conjugate gamma mixture). State is O(1) because each component holds
/// a fixed λ: `N^μ_t(λ) = exp(λ(Y_t − tμ) − ψ_E(λ)·V_t)` with shared
/// `Y_t = ΣX_i` and `V_t = Σ(X_i − μ̂_i)²`.
#[derive(Debug, Clone)]
pub struct EmpBernsteinMixtureCs {
    alpha: f64,
    grid: LambdaGrid,
    stats: RunningStats,
    t: u64,
    sum: f64,
}

impl EmpBernsteinMixtureCs {
    pub fn new(alpha: f64, grid: LambdaGrid) -> Result<Self> {
        check_alpha(alpha)?;
        if grid.points().iter().any(|&l| !(0.0..1.0).contains(&l)) {
            return Err(Error::Parameter(
                "sub-exponential mixture grid must lie in [0,1)".into(),
            ));
        }
        Ok(EmpBernsteinMixtureCs {
            alpha,
            grid,
            stats: RunningStats::new(),
            t: 0,
            sum: 0.0,
        })
    }

    pub fn with_default_grid(alpha: f64) -> Result<Self> {
        Self::new(alpha, LambdaGrid::gamma_weighted(0.9, 32, 0.5, 1.0)?)
    }

    pub fn observe(&mut self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::data(format!(
                "empirical-Bernstein CS needs observations in [0,1], got {x}"
            )));
        }
        self.stats.observe(x);
        self.t += 1;
        self.sum += x;
        Ok(())
    }

    fn log_mixture_at(&self, mu: f64, up: bool) -> f64 {
        let drift = self.sum - self.t as f64 * mu;
        let signed = if up { drift } else { -drift };
        let v = self.stats.sq_dev_sum();
        let terms: Vec<f64> = self
            .grid
            .points()
            .iter()
            .map(|&lam| lam * signed - psi_e(lam) * v)
            .collect();
        log_weighted_sum_exp(self.grid.weights(), &terms)
    }

    pub fn band(&self) -> ConfidenceBand {
        let threshold = (2.0 / self.alpha).ln();
        // Each side is monotone in μ, so bisect for the root.
        let lower = if self.log_mixture_at(0.0, true) < threshold {
            0.0
        } else {
            bisect_decreasing(|mu| self.log_mixture_at(mu, true) - threshold, 0.0, 1.0)
        };
        let upper = if self.log_mixture_at(1.0, false) < threshold {
            1.0
        } else {
            bisect_increasing(|mu| self.log_mixture_at(mu, false) - threshold, 0.0, 1.0)
        };
        ConfidenceBand {
            time: self.t,
            lower: lower.min(upper),
            upper: upper.max(lower),
            alpha: self.alpha,
            method: CsMethod::EmpBernsteinMixture,
            interval_certified: true,
        }
    }

    pub fn time(&self) -> u64 {
        self.t
    }
}

/// Root of a decreasing function on [lo, hi] with f(lo) ≥ 0 > f(hi)-ish.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of an increasing function on [lo, hi] with f(lo) < 0 ≤ f(hi)-ish.
fn bisect_increasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Betting martingale inversion
// ---------------------------------------------------------------------------

/// Betting confidence sequence on \[0,1]: per candidate μ on a grid, the
/// capital process `K^μ_t = Π(1 + λ^μ_i (X_i − μ))` with plug-in bets signed
/// toward the running mean and clamped into `[−c/(1−μ), c/μ]`.
///
/// The reported band is the convex hull of the surviving grid candidates,
/// extended one cell outward so it always contains the exact rejection-set
/// complement; `interval_certified` is false because the underlying
/// rejection set need not be an interval.
#[derive(Debug, Clone)]
pub struct BettingCs {
    alpha: f64,
    c: f64,
    policy: BetPolicy,
    grid: Vec<f64>,
    log_wealth: Vec<f64>,
    stats: RunningStats,
    t: u64,
}

impl BettingCs {
    pub fn new(alpha: f64, policy: BetPolicy, grid_spec: MeanGridSpec, c: f64) -> Result<Self> {
        check_alpha(alpha)?;
        policy.validate()?;
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Parameter(format!(
                "truncation constant must be in (0,1), got {c}"
            )));
        }
        if grid_spec.lo < 0.0 || grid_spec.hi > 1.0 {
            return Err(Error::Parameter(
                "betting CS grid must lie within [0,1]".into(),
            ));
        }
        let grid = grid_spec.points();
        let n = grid.len();
        Ok(BettingCs {
            alpha,
            c,
            policy,
            grid,
            log_wealth: vec![0.0; n],
            stats: RunningStats::new(),
            t: 0,
        })
    }

    pub fn with_defaults(alpha: f64) -> Result<Self> {
        Self::new(
            alpha,
            BetPolicy::plugin_default(),
            MeanGridSpec::unit_interval(),
            0.5,
        )
    }

    pub fn observe(&mut self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::data(format!(
                "betting CS needs observations in [0,1], got {x}"
            )));
        }
        let t_next = self.t + 1;
        // The bet magnitude is candidate-independent; only the sign and the
        // clamp vary across the grid.
        let raw = match &self.policy {
            BetPolicy::Fixed { lambda } => *lambda,
            BetPolicy::PluginEmpirical { .. } => self.policy.plugin_raw_bet(&self.stats, t_next)?,
        };
        let mean_est = self.stats.predictable_mean();
        let signed_toward = |mu: f64| if mean_est >= mu { raw } else { -raw };
        for (k, &mu) in self.grid.iter().enumerate() {
            let range = LambdaRange::bounded_mean(mu, self.c);
            let lam = match &self.policy {
                BetPolicy::Fixed { .. } => range.clamp(raw),
                BetPolicy::PluginEmpirical { .. } => range.clamp(signed_toward(mu)),
            };
            // Wealth factor ≥ 1 − c > 0 by the range clamp.
            self.log_wealth[k] += (lam * (x - mu)).ln_1p();
        }
        self.stats.observe(x);
        self.t += 1;
        Ok(())
    }

    /// Log capital at a grid index (for oracles and stopped e-CIs).
    pub fn log_wealth_at(&self, k: usize) -> f64 {
        self.log_wealth[k]
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Hull of `{μ on the grid : K^μ_t < 1/α'}` for an arbitrary level; the
    /// e-BY procedure re-reads stopped state at an adjusted level.
    pub fn band_at_level(&self, alpha: f64) -> Result<ConfidenceBand> {
        check_alpha(alpha)?;
        let threshold = -alpha.ln();
        let mut first: Option<usize> = None;
        let mut last: Option<usize> = None;
        for (k, &lw) in self.log_wealth.iter().enumerate() {
            if lw < threshold {
                if first.is_none() {
                    first = Some(k);
                }
                last = Some(k);
            }
        }
        let (first, last) = match (first, last) {
            (Some(f), Some(l)) => (f, l),
            _ => {
                return Err(Error::Invariant(
                    "betting CS rejected every candidate in the grid".into(),
                ))
            }
        };
        // Extend one cell outward: the exact boundary lies between the last
        // surviving candidate and its rejected neighbor.
        let lower = if first == 0 {
            self.grid[0]
        } else {
            self.grid[first - 1]
        };
        let upper = if last + 1 == self.grid.len() {
            self.grid[last]
        } else {
            self.grid[last + 1]
        };
        Ok(ConfidenceBand {
            time: self.t,
            lower,
            upper,
            alpha,
            method: CsMethod::Betting,
            interval_certified: false,
        })
    }

    pub fn band(&self) -> Result<ConfidenceBand> {
        self.band_at_level(self.alpha)
    }

    /// True when the surviving candidates are not contiguous on the grid.
    pub fn rejection_set_fragmented(&self) -> bool {
        let threshold = -self.alpha.ln();
        let mut seen_survivor = false;
        let mut seen_gap_after_survivor = false;
        for &lw in &self.log_wealth {
            if lw < threshold {
                if seen_gap_after_survivor {
                    return true;
                }
                seen_survivor = true;
            } else if seen_survivor {
                seen_gap_after_survivor = true;
            }
        }
        false
    }

    pub fn time(&self) -> u64 {
        self.t
    }
}

/// Single-candidate betting capital process (used by the coverage oracles,
/// the power check and the e-BH simulations).
#[derive(Debug, Clone)]
pub struct BettingProcess {
    mu: f64,
    c: f64,
    policy: BetPolicy,
    stats: RunningStats,
    t: u64,
    log_wealth: f64,
}

impl BettingProcess {
    pub fn new(mu: f64, policy: BetPolicy, c: f64) -> Result<Self> {
        policy.validate()?;
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::Parameter(format!(
                "candidate mean must be in [0,1], got {mu}"
            )));
        }
        Ok(BettingProcess {
            mu,
            c,
            policy,
            stats: RunningStats::new(),
            t: 0,
            log_wealth: 0.0,
        })
    }
}

impl StreamingEProcess for BettingProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::data(format!(
                "betting process needs observations in [0,1], got {x}"
            )));
        }
        let range = LambdaRange::bounded_mean(self.mu, self.c);
        let lam = match &self.policy {
            BetPolicy::Fixed { .. } => self.policy.next_bet_fixed(range)?,
            BetPolicy::PluginEmpirical { .. } => {
                self.policy
                    .next_bet_plugin(&self.stats, self.t + 1, range, Some(self.mu))?
            }
        };
        self.log_wealth += (lam * (x - self.mu)).ln_1p();
        self.stats.observe(x);
        self.t += 1;
        Ok(())
    }

    fn log_evalue(&self) -> f64 {
        self.log_wealth
    }
}

// ---------------------------------------------------------------------------
// Catoni heavy-tailed
// ---------------------------------------------------------------------------

/// Catoni's influence function: `ln(1 + x + x²/2)` for x ≥ 0, odd-extended.
pub fn phi_catoni(x: f64) -> f64 {
    if x >= 0.0 {
        (x + x * x / 2.0).ln_1p()
    } else {
        -(-x + x * x / 2.0).ln_1p()
    }
}

/// Catoni-style confidence sequence under a conditional variance bound σ².
///
/// The wealth at an arbitrary candidate is not a function of
/// fixed-dimension sufficient statistics, so the state is one running
/// `Σφ(λ(X_i − μ))` per grid candidate — memory bounded by the grid, not
/// the stream. The boundary is refined within its bracketing cell by the
/// secant root of the (monotone) per-candidate log-wealth, accurate to one
/// grid cell.
#[derive(Debug, Clone)]
pub struct CatoniCs {
    sigma: f64,
    lambda: f64,
    alpha: f64,
    grid: Vec<f64>,
    phi_sums: Vec<f64>,
    t: u64,
}

impl CatoniCs {
    pub fn new(sigma: f64, lambda: f64, alpha: f64, grid_spec: MeanGridSpec) -> Result<Self> {
        check_alpha(alpha)?;
        if !(sigma > 0.0) {
            return Err(Error::Parameter(format!(
                "variance bound sigma must be positive, got {sigma}"
            )));
        }
        if !(lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let grid = grid_spec.points();
        let n = grid.len();
        Ok(CatoniCs {
            sigma,
            lambda,
            alpha,
            grid,
            phi_sums: vec![0.0; n],
            t: 0,
        })
    }

    /// λ tuned to make the band tight near time `t0` at level α.
    pub fn default_lambda(sigma: f64, alpha: f64, t0: u64) -> f64 {
        (2.0 * (2.0 / alpha).ln() / (sigma * sigma * t0.max(1) as f64)).sqrt()
    }

    pub fn observe(&mut self, x: f64) -> Result<()> {
        if x.is_nan() || x.is_infinite() {
            return Err(Error::data(format!("non-finite observation {x}")));
        }
        for (k, &mu) in self.grid.iter().enumerate() {
            self.phi_sums[k] += phi_catoni(self.lambda * (x - mu));
        }
        self.t += 1;
        Ok(())
    }

    /// Log-wealth of the one-sided process at grid index k; `up = true`
    /// grows when the truth exceeds the candidate.
    pub fn log_wealth_at_index(&self, k: usize, up: bool) -> f64 {
        let signed = if up { self.phi_sums[k] } else { -self.phi_sums[k] };
        signed - self.lambda * self.lambda * self.sigma * self.sigma * self.t as f64 / 2.0
    }

    /// Boundary where the index-decreasing `f` crosses zero, refined by the
    /// secant within the bracketing cell; `coord` maps the scan index to its
    /// candidate-mean coordinate.
    fn refine_root(
        &self,
        f: impl Fn(usize) -> f64,
        coord: impl Fn(usize) -> f64,
    ) -> f64 {
        let n = self.grid.len();
        // f(0) >= 0 > f(n−1) is guaranteed by the caller's bracket check.
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if f(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (f(lo), f(hi));
        if a == b {
            return coord(lo);
        }
        let frac = (a / (a - b)).clamp(0.0, 1.0);
        coord(lo) + frac * (coord(hi) - coord(lo))
    }

    /// Grid scan plus in-cell refinement of the two one-sided boundaries.
    /// The declared grid window is the candidate parameter space; an
    /// unbracketed side returns the window edge.
    pub fn band(&self) -> Result<ConfidenceBand> {
        let threshold = (2.0 / self.alpha).ln();
        let n = self.grid.len();

        // Quasi-convexity spot check: each one-sided log-wealth must be
        // monotone along the grid (decreasing for the up side).
        let mut prev = f64::INFINITY;
        for k in (0..n).step_by((n / 32).max(1)) {
            let v = self.log_wealth_at_index(k, true);
            if v > prev + 1e-9 {
                return Err(Error::Invariant(
                    "catoni wealth not monotone in the candidate mean".into(),
                ));
            }
            prev = v;
        }

        let up = |k: usize| self.log_wealth_at_index(k, true) - threshold;
        let lower = if up(0) < 0.0 {
            self.grid[0]
        } else if up(n - 1) >= 0.0 {
            self.grid[n - 1]
        } else {
            self.refine_root(up, |k| self.grid[k])
        };
        // The down side is increasing in μ; scan it from the top of the
        // grid so it is decreasing in the scan index.
        let down = |k: usize| self.log_wealth_at_index(n - 1 - k, false) - threshold;
        let upper = if down(0) < 0.0 {
            self.grid[n - 1]
        } else if down(n - 1) >= 0.0 {
            self.grid[0]
        } else {
            self.refine_root(down, |k| self.grid[n - 1 - k])
        };
        Ok(ConfidenceBand {
            time: self.t,
            lower: lower.min(upper),
            upper: upper.max(lower),
            alpha: self.alpha,
            method: CsMethod::Catoni,
            interval_certified: true,
        })
    }

    pub fn time(&self) -> u64 {
        self.t
    }
}

/// O(1) Catoni wealth tracker at one candidate mean (for coverage oracles).
#[derive(Debug, Clone)]
pub struct CatoniAtPoint {
    mu: f64,
    sigma: f64,
    lambda: f64,
    t: u64,
    phi_sum: f64,
}

impl CatoniAtPoint {
    pub fn new(mu: f64, sigma: f64, lambda: f64) -> Self {
        CatoniAtPoint {
            mu,
            sigma,
            lambda,
            t: 0,
            phi_sum: 0.0,
        }
    }

    pub fn observe(&mut self, x: f64) {
        self.phi_sum += phi_catoni(self.lambda * (x - self.mu));
        self.t += 1;
    }

    pub fn log_wealth(&self, up: bool) -> f64 {
        let signed = if up { self.phi_sum } else { -self.phi_sum };
        signed - self.lambda * self.lambda * self.sigma * self.sigma * self.t as f64 / 2.0
    }
}

// ---------------------------------------------------------------------------
// Asymptotic (empirical σ) variant
// ---------------------------------------------------------------------------

/// Sub-Gaussian band with the empirical standard deviation plugged in.
/// No finite-sample guarantee; flagged by method id.
pub fn asymptotic_cs(
    t: u64,
    sum: f64,
    sigma_hat: f64,
    rho: f64,
    alpha: f64,
) -> Result<ConfidenceBand> {
    if t < 2 {
        return Err(Error::data(
            "asymptotic CS needs at least 2 observations to estimate the variance",
        ));
    }
    let sigma = sigma_hat.max(1e-6);
    let mut band = subgaussian_cs(t, sum, sigma, rho, alpha)?;
    band.method = CsMethod::Asymptotic;
    Ok(band)
}

/// Streaming Welford accumulator feeding [`asymptotic_cs`].
#[derive(Debug, Clone, Default)]
pub struct AsymptoticCs {
    t: u64,
    mean: f64,
    m2: f64,
    rho: f64,
    alpha: f64,
}

impl AsymptoticCs {
    pub fn new(rho: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(rho > 0.0) {
            return Err(Error::Parameter("rho must be positive".into()));
        }
        Ok(AsymptoticCs {
            t: 0,
            mean: 0.0,
            m2: 0.0,
            rho,
            alpha,
        })
    }

    pub fn observe(&mut self, x: f64) -> Result<()> {
        if x.is_nan() {
            return Err(Error::data("NaN observation"));
        }
        self.t += 1;
        let d = x - self.mean;
        self.mean += d / self.t as f64;
        self.m2 += d * (x - self.mean);
        Ok(())
    }

    pub fn sigma_hat(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            (self.m2 / self.t as f64).sqrt()
        }
    }

    pub fn band(&self) -> Result<ConfidenceBand> {
        asymptotic_cs(
            self.t,
            self.mean * self.t as f64,
            self.sigma_hat(),
            self.rho,
            self.alpha,
        )
    }

    pub fn time(&self) -> u64 {
        self.t
    }
}

// ---------------------------------------------------------------------------
// Running intersection
// ---------------------------------------------------------------------------

/// Optional post-processing: the running intersection `∩_{s≤t} C_s` is also
/// a valid band and never expands. `None` once the intersection empties.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningIntersection {
    lo: Option<f64>,
    hi: Option<f64>,
}

impl RunningIntersection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, band: &ConfidenceBand) -> Option<(f64, f64)> {
        let lo = self.lo.map_or(band.lower, |l| l.max(band.lower));
        let hi = self.hi.map_or(band.upper, |h| h.min(band.upper));
        self.lo = Some(lo);
        self.hi = Some(hi);
        if lo <= hi {
            Some((lo, hi))
        } else {
            None
        }
    }
}
