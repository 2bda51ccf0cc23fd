//! Blocked two-sample Bernoulli testing (sequential 2×2 tables).
//!
//! Each block carries `n_a` outcomes from group a and `n_b` from group b.
//! For a simple alternative `(θ_a, θ_b)`, the one-round block e-variable
//! divides the alternative likelihood by the product over every outcome in
//! the block of the size-weighted mixture
//! `(n_a p_{θa}(y) + n_b p_{θb}(y)) / (n_a + n_b)`. Its null expectation is
//! at most one for every θ on the diagonal θ_a = θ_b = θ, which the exact
//! enumeration oracle verifies outcome by outcome.
//!
//! Composite alternatives are handled by mixing block e-processes over a
//! discrete prior on `(θ_a, θ_b)`; the mixture is maintained exactly as a
//! weighted log-sum-exp of per-point log wealth, which coincides with
//! posterior-reweighting the prior after every block.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::eprocess::EValue;
use crate::error::{Error, Result};
use crate::numeric::log_weighted_sum_exp;

/// One block of outcomes with fixed, pre-declared group sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoByTwoBlock {
    pub group_a: Vec<u8>,
    pub group_b: Vec<u8>,
}

impl TwoByTwoBlock {
    pub fn new(group_a: Vec<u8>, group_b: Vec<u8>) -> Result<Self> {
        if group_a.is_empty() || group_b.is_empty() {
            return Err(Error::data("both groups in a block must be nonempty"));
        }
        if group_a.iter().chain(&group_b).any(|&y| y > 1) {
            return Err(Error::data("block outcomes must be bits"));
        }
        Ok(TwoByTwoBlock { group_a, group_b })
    }

    pub fn n_a(&self) -> usize {
        self.group_a.len()
    }

    pub fn n_b(&self) -> usize {
        self.group_b.len()
    }
}

fn check_theta(theta: f64, name: &str) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Parameter(format!(
            "{name} must be in (0,1), got {theta}"
        )));
    }
    Ok(())
}

fn ln_bern(theta: f64, y: u8) -> f64 {
    if y == 1 {
        theta.ln()
    } else {
        (-theta).ln_1p()
    }
}

/// Log of the one-round block e-variable at alternative `(θ_a, θ_b)`.
pub fn twobytwo_block_log_evalue(block: &TwoByTwoBlock, theta_a: f64, theta_b: f64) -> Result<f64> {
    check_theta(theta_a, "theta_a")?;
    check_theta(theta_b, "theta_b")?;
    let na = block.n_a() as f64;
    let nb = block.n_b() as f64;
    let wa = na / (na + nb);
    let wb = nb / (na + nb);
    let mut log_num = 0.0;
    let mut log_den = 0.0;
    for &y in &block.group_a {
        log_num += ln_bern(theta_a, y);
    }
    for &y in &block.group_b {
        log_num += ln_bern(theta_b, y);
    }
    for &y in block.group_a.iter().chain(&block.group_b) {
        let pa = if y == 1 { theta_a } else { 1.0 - theta_a };
        let pb = if y == 1 { theta_b } else { 1.0 - theta_b };
        log_den += (wa * pa + wb * pb).ln();
    }
    Ok(log_num - log_den)
}

/// The one-round block e-variable itself.
pub fn twobytwo_block_evalue(block: &TwoByTwoBlock, theta_a: f64, theta_b: f64) -> Result<EValue> {
    EValue::new(twobytwo_block_log_evalue(block, theta_a, theta_b)?.exp())
}

/// Discrete-prior mixture of block e-processes over `(θ_a, θ_b)`.
#[derive(Debug, Clone)]
pub struct TwoByTwoMixture {
    support: Vec<(f64, f64)>,
    weights: Vec<f64>,
    log_wealth: Vec<f64>,
    blocks_seen: u64,
}

impl TwoByTwoMixture {
    pub fn new(support: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::Parameter(
                "mixture needs matching nonempty support and weights".into(),
            ));
        }
        for &(ta, tb) in &support {
            check_theta(ta, "theta_a")?;
            check_theta(tb, "theta_b")?;
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::Parameter("prior weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "prior weights must sum to 1 (got {total})"
            )));
        }
        let n = support.len();
        Ok(TwoByTwoMixture {
            support,
            weights,
            log_wealth: vec![0.0; n],
            blocks_seen: 0,
        })
    }

    /// Uniform prior on the n×n interior grid `{k/(n+1)}²`.
    pub fn uniform_grid(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("grid must be nonempty".into()));
        }
        let mut support = Vec::with_capacity(n * n);
        for i in 1..=n {
            for j in 1..=n {
                support.push((i as f64 / (n + 1) as f64, j as f64 / (n + 1) as f64));
            }
        }
        let w = vec![1.0 / (n * n) as f64; n * n];
        TwoByTwoMixture::new(support, w)
    }

    /// Independent Beta(a, b) priors on each axis, discretized at `m`
    /// midpoints per axis.
    pub fn discretized_beta(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || m == 0 {
            return Err(Error::Parameter(
                "beta prior needs positive shape parameters and m >= 1".into(),
            ));
        }
        let nodes: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect();
        let dens: Vec<f64> = nodes
            .iter()
            .map(|&x| x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0))
            .collect();
        let total: f64 = dens.iter().sum();
        let mut support = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (i, &ta) in nodes.iter().enumerate() {
            for (j, &tb) in nodes.iter().enumerate() {
                support.push((ta, tb));
                weights.push(dens[i] / total * dens[j] / total);
            }
        }
        let wt: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= wt;
        }
        TwoByTwoMixture::new(support, weights)
    }

    pub fn observe_block(&mut self, block: &TwoByTwoBlock) -> Result<()> {
        for (k, &(ta, tb)) in self.support.iter().enumerate() {
            self.log_wealth[k] += twobytwo_block_log_evalue(block, ta, tb)?;
        }
        self.blocks_seen += 1;
        Ok(())
    }

    /// Log of the mixture e-process `Σ_k w_k Π_j S_j^{θ_k}`.
    pub fn log_evalue(&self) -> f64 {
        log_weighted_sum_exp(&self.weights, &self.log_wealth)
    }

    pub fn blocks_seen(&self) -> u64 {
        self.blocks_seen
    }
}

// ---------------------------------------------------------------------------
// Effect-difference confidence sequence
// ---------------------------------------------------------------------------

/// Confidence sequence for the effect difference `δ = θ_b − θ_a` by
/// universal inference: a predictable smoothed-empirical alternative in the
/// numerator over, per candidate δ, the δ-constrained null maximum
/// likelihood in the denominator (the worst case over the nuisance θ_a).
/// Candidates whose e-process stays below `1/α` form the band; the hull of
/// the surviving grid is reported.
///
/// Only the difference functional is covered; log-odds and log-relative-risk
/// variants are not.
#[derive(Debug, Clone)]
pub struct TwoByTwoEffectCs {
    alpha: f64,
    delta_grid: Vec<f64>,
    // Sufficient counts per group plus the predictable-alternative product.
    n_a: u64,
    s_a: u64,
    n_b: u64,
    s_b: u64,
    log_numerator: f64,
    blocks_seen: u64,
}

impl TwoByTwoEffectCs {
    pub fn new(alpha: f64, delta_resolution: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must be in (0,1), got {alpha}"
            )));
        }
        if delta_resolution < 3 {
            return Err(Error::Parameter("delta grid needs at least 3 points".into()));
        }
        let n = delta_resolution;
        let delta_grid = (0..n)
            .map(|k| -1.0 + 2.0 * (k as f64 + 0.5) / n as f64)
            .collect();
        Ok(TwoByTwoEffectCs {
            alpha,
            delta_grid,
            n_a: 0,
            s_a: 0,
            n_b: 0,
            s_b: 0,
            log_numerator: 0.0,
            blocks_seen: 0,
        })
    }

    pub fn observe_block(&mut self, block: &TwoByTwoBlock) -> Result<()> {
        // Add-1/2 smoothed sequential predictive probabilities, one group at
        // a time; each factor uses counts from strictly earlier outcomes.
        for &y in &block.group_a {
            let p1 = (self.s_a as f64 + 0.5) / (self.n_a as f64 + 1.0);
            self.log_numerator += if y == 1 { p1.ln() } else { (1.0 - p1).ln() };
            self.n_a += 1;
            self.s_a += u64::from(y == 1);
        }
        for &y in &block.group_b {
            let p1 = (self.s_b as f64 + 0.5) / (self.n_b as f64 + 1.0);
            self.log_numerator += if y == 1 { p1.ln() } else { (1.0 - p1).ln() };
            self.n_b += 1;
            self.s_b += u64::from(y == 1);
        }
        self.blocks_seen += 1;
        Ok(())
    }

    /// Log-likelihood of the counts at `(θ_a, θ_a + δ)`.
    fn null_log_lik(&self, theta_a: f64, delta: f64) -> f64 {
        let tb = theta_a + delta;
        let mut ll = 0.0;
        if self.s_a > 0 {
            ll += self.s_a as f64 * theta_a.ln();
        }
        if self.n_a > self.s_a {
            ll += (self.n_a - self.s_a) as f64 * (1.0 - theta_a).ln();
        }
        if self.s_b > 0 {
            ll += self.s_b as f64 * tb.ln();
        }
        if self.n_b > self.s_b {
            ll += (self.n_b - self.s_b) as f64 * (1.0 - tb).ln();
        }
        ll
    }

    /// Log of the universal-inference e-process at candidate δ: numerator
    /// over the exact supremum of the δ-constrained null likelihood (the
    /// log-likelihood is concave in θ_a, so ternary search finds it).
    pub fn log_evalue_at(&self, delta: f64) -> f64 {
        if self.n_a + self.n_b == 0 {
            return 0.0;
        }
        let mut lo = (-delta).max(0.0);
        let mut hi = (1.0 - delta).min(1.0);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if self.null_log_lik(m1, delta) < self.null_log_lik(m2, delta) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let sup = self.null_log_lik(0.5 * (lo + hi), delta);
        self.log_numerator - sup
    }

    /// Hull of the surviving δ candidates, extended one grid cell outward.
    pub fn band(&self) -> Result<crate::confseq::ConfidenceBand> {
        let threshold = -self.alpha.ln();
        let mut first = None;
        let mut last = None;
        for (k, &d) in self.delta_grid.iter().enumerate() {
            if self.log_evalue_at(d) < threshold {
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
                    "effect CS rejected every candidate difference".into(),
                ))
            }
        };
        let lower = if first == 0 {
            -1.0
        } else {
            self.delta_grid[first - 1]
        };
        let upper = if last + 1 == self.delta_grid.len() {
            1.0
        } else {
            self.delta_grid[last + 1]
        };
        Ok(crate::confseq::ConfidenceBand {
            time: self.blocks_seen,
            lower,
            upper,
            alpha: self.alpha,
            method: crate::confseq::CsMethod::TwoByTwoEffect,
            interval_certified: false,
        })
    }

    pub fn blocks_seen(&self) -> u64 {
        self.blocks_seen
    }
}

// ---------------------------------------------------------------------------
// Worst-case growth search over beta priors
// ---------------------------------------------------------------------------

/// Monte Carlo configuration for [`regrow_beta_prior_search`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegrowConfig {
    pub n_a: usize,
    pub n_b: usize,
    /// Fixed evaluation horizon, in blocks. The worst-case growth criterion
    /// quantifies over stopping times; this estimates a fixed-horizon
    /// surrogate and is labeled as such.
    pub blocks: u64,
    pub replications: u64,
    pub seed: u64,
    /// Discretization resolution per axis for each candidate beta prior.
    pub grid_per_axis: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegrowResult {
    pub best_index: usize,
    /// Worst-case (over the alternative grid) mean log-wealth shortfall per
    /// candidate; larger (closer to zero) is better.
    pub scores: Vec<f64>,
    /// Standard error of the score at the worst alternative, per candidate.
    pub score_ses: Vec<f64>,
}

/// Picks, from a grid of beta-prior hyperparameters, the prior whose mixture
/// e-process has the best worst-case expected log-wealth shortfall against
/// the oracle that knows the true alternative. Common random numbers across
/// candidates; deterministic given the seed.
pub fn regrow_beta_prior_search(
    candidates: &[(f64, f64)],
    alternatives: &[(f64, f64)],
    cfg: &RegrowConfig,
) -> Result<RegrowResult> {
    if candidates.is_empty() {
        return Err(Error::Parameter("candidate grid must be nonempty".into()));
    }
    if alternatives.is_empty() {
        return Err(Error::Parameter("alternative grid must be nonempty".into()));
    }
    if cfg.replications == 0 || cfg.blocks == 0 {
        return Err(Error::Parameter(
            "replications and blocks must be positive".into(),
        ));
    }
    for &(ta, tb) in alternatives {
        check_theta(ta, "alternative theta_a")?;
        check_theta(tb, "alternative theta_b")?;
    }

    let priors: Vec<TwoByTwoMixture> = candidates
        .iter()
        .map(|&(a, b)| TwoByTwoMixture::discretized_beta(a, b, cfg.grid_per_axis))
        .collect::<Result<_>>()?;

    // shortfall_sums[cand][alt] accumulates log W_prior − log W_oracle.
    let mut sums = vec![vec![0.0f64; alternatives.len()]; candidates.len()];
    let mut sq_sums = vec![vec![0.0f64; alternatives.len()]; candidates.len()];

    for (ai, &(ta, tb)) in alternatives.iter().enumerate() {
        for rep in 0..cfg.replications {
            let stream_id = (ai as u64) * cfg.replications + rep;
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream_id);

            // Sample the whole run once; evaluate every candidate on it.
            let mut blocks = Vec::with_capacity(cfg.blocks as usize);
            for _ in 0..cfg.blocks {
                let ga: Vec<u8> = (0..cfg.n_a)
                    .map(|_| u8::from(rng.gen::<f64>() < ta))
                    .collect();
                let gb: Vec<u8> = (0..cfg.n_b)
                    .map(|_| u8::from(rng.gen::<f64>() < tb))
                    .collect();
                blocks.push(TwoByTwoBlock::new(ga, gb)?);
            }

            let mut oracle_log = 0.0;
            for block in &blocks {
                oracle_log += twobytwo_block_log_evalue(block, ta, tb)?;
            }
            for (ci, prior) in priors.iter().enumerate() {
                let mut mix = prior.clone();
                for block in &blocks {
                    mix.observe_block(block)?;
                }
                let shortfall = mix.log_evalue() - oracle_log;
                sums[ci][ai] += shortfall;
                sq_sums[ci][ai] += shortfall * shortfall;
            }
        }
    }

    let reps = cfg.replications as f64;
    let mut scores = Vec::with_capacity(candidates.len());
    let mut score_ses = Vec::with_capacity(candidates.len());
    for ci in 0..candidates.len() {
        let mut worst = f64::INFINITY;
        let mut worst_se = 0.0;
        for ai in 0..alternatives.len() {
            let mean = sums[ci][ai] / reps;
            if mean < worst {
                worst = mean;
                let var = (sq_sums[ci][ai] / reps - mean * mean).max(0.0);
                worst_se = (var / reps).sqrt();
            }
        }
        scores.push(worst);
        score_ses.push(worst_se);
    }
    let best_index = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    Ok(RegrowResult {
        best_index,
        scores,
        score_ses,
    })
}
