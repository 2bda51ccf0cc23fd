//! Prior-posterior ratio martingale on a discrete parameter grid, and the
//! e-posterior interval it induces.
//!
//! For data drawn from the grid point θ*, the ratio `π₀(θ*)/π_t(θ*)` of
//! prior to exact Bayes posterior mass is a test martingale (the reciprocal
//! of the Savage–Dickey density ratio), so thresholding the whole family at
//! `1/α` gives an anytime-valid confidence set for θ*.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Discrete prior over a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePrior {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscretePrior {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::Parameter(
                "prior needs matching nonempty support and weights".into(),
            ));
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
        Ok(DiscretePrior { support, weights })
    }

    pub fn uniform(support: Vec<f64>) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::Parameter("prior support must be nonempty".into()));
        }
        let w = vec![1.0 / n as f64; n];
        DiscretePrior::new(support, w)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Built-in observation models for the discrete Bayes update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum LikelihoodModel {
    Bernoulli,
    GaussianKnownSigma { sigma: f64 },
}

impl LikelihoodModel {
    fn validate_support(&self, support: &[f64]) -> Result<()> {
        match self {
            LikelihoodModel::Bernoulli => {
                if support.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
                    return Err(Error::Parameter(
                        "Bernoulli support must lie in (0,1)".into(),
                    ));
                }
            }
            LikelihoodModel::GaussianKnownSigma { sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Parameter("sigma must be positive".into()));
                }
            }
        }
        Ok(())
    }

    fn log_pdf(&self, theta: f64, x: f64) -> Result<f64> {
        match self {
            LikelihoodModel::Bernoulli => {
                if x == 1.0 {
                    Ok(theta.ln())
                } else if x == 0.0 {
                    Ok((-theta).ln_1p())
                } else {
                    Err(Error::data(format!(
                        "Bernoulli model expects 0/1 observations, got {x}"
                    )))
                }
            }
            LikelihoodModel::GaussianKnownSigma { sigma } => {
                if x.is_nan() {
                    return Err(Error::data("NaN observation"));
                }
                let z = (x - theta) / sigma;
                Ok(-0.5 * z * z - sigma.ln())
            }
        }
    }
}

/// Exact discrete Bayes posterior tracker; the per-θ prior/posterior mass
/// ratios are the family of test martingales.
#[derive(Debug, Clone)]
pub struct PriorPosteriorProcess {
    model: LikelihoodModel,
    support: Vec<f64>,
    log_prior: Vec<f64>,
    log_post: Vec<f64>,
    t: u64,
}

impl PriorPosteriorProcess {
    pub fn new(prior: DiscretePrior, model: LikelihoodModel) -> Result<Self> {
        model.validate_support(&prior.support)?;
        let log_prior: Vec<f64> = prior.weights.iter().map(|&w| w.ln()).collect();
        Ok(PriorPosteriorProcess {
            model,
            support: prior.support,
            log_post: log_prior.clone(),
            log_prior,
            t: 0,
        })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn observe(&mut self, x: f64) -> Result<()> {
        for (k, &theta) in self.support.iter().enumerate() {
            self.log_post[k] += self.model.log_pdf(theta, x)?;
        }
        let norm = log_sum_exp(&self.log_post);
        for lp in &mut self.log_post {
            *lp -= norm;
        }
        self.t += 1;
        Ok(())
    }

    /// Log of the prior-posterior ratio martingale at grid index k.
    pub fn log_ratio(&self, k: usize) -> Result<f64> {
        if k >= self.support.len() {
            return Err(Error::Parameter(format!("index {k} out of range")));
        }
        if self.log_prior[k] == f64::NEG_INFINITY {
            return Err(Error::Parameter(
                "prior mass at theta* must be positive".into(),
            ));
        }
        Ok(self.log_prior[k] - self.log_post[k])
    }

    /// Log ratios across the whole grid.
    pub fn log_ratios(&self) -> Result<Vec<f64>> {
        (0..self.support.len()).map(|k| self.log_ratio(k)).collect()
    }

    /// Posterior mass at grid index k.
    pub fn posterior(&self, k: usize) -> f64 {
        self.log_post[k].exp()
    }
}

/// Hull of `{θ : wealth(θ) < 1/α}` over the grid; `None` when every grid
/// point is rejected.
pub fn eposterior_interval(
    support: &[f64],
    log_wealths: &[f64],
    alpha: f64,
) -> Result<Option<(f64, f64)>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    if support.len() != log_wealths.len() || support.is_empty() {
        return Err(Error::Parameter(
            "support and wealth lists must align and be nonempty".into(),
        ));
    }
    let threshold = -alpha.ln();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for (&theta, &lw) in support.iter().zip(log_wealths) {
        if lw < threshold {
            any = true;
            lo = lo.min(theta);
            hi = hi.max(theta);
        }
    }
    Ok(if any { Some((lo, hi)) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_one_before_data() {
        let prior = DiscretePrior::uniform(vec![0.3, 0.7]).unwrap();
        let p = PriorPosteriorProcess::new(prior, LikelihoodModel::Bernoulli).unwrap();
        assert!((p.log_ratio(0).unwrap()).abs() < 1e-15);
        assert!((p.log_ratio(1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn one_step_bernoulli_update() {
        let prior = DiscretePrior::uniform(vec![0.3, 0.7]).unwrap();
        let mut p = PriorPosteriorProcess::new(prior, LikelihoodModel::Bernoulli).unwrap();
        p.observe(1.0).unwrap();
        // Posterior ∝ (0.5·0.3, 0.5·0.7) = (0.3, 0.7).
        assert!((p.posterior(1) - 0.7).abs() < 1e-12);
        let ratio = p.log_ratio(1).unwrap().exp();
        assert!((ratio - 0.5 / 0.7).abs() < 1e-12);
    }

    #[test]
    fn ratio_increments_telescope() {
        let prior =
            DiscretePrior::uniform((1..=9).map(|k| k as f64 / 10.0).collect()).unwrap();
        let mut p = PriorPosteriorProcess::new(prior, LikelihoodModel::Bernoulli).unwrap();
        let bits = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0];
        let k = 6; // θ* = 0.7
        let mut product_of_increments = 0.0;
        let mut prev = p.log_ratio(k).unwrap();
        for &b in &bits {
            p.observe(b).unwrap();
            let cur = p.log_ratio(k).unwrap();
            product_of_increments += cur - prev;
            prev = cur;
        }
        assert!((product_of_increments - p.log_ratio(k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_model_tracks_the_mean() {
        let prior = DiscretePrior::uniform(vec![-1.0, 0.0, 1.0]).unwrap();
        let mut p = PriorPosteriorProcess::new(
            prior,
            LikelihoodModel::GaussianKnownSigma { sigma: 1.0 },
        )
        .unwrap();
        for _ in 0..30 {
            p.observe(1.05).unwrap();
        }
        // Posterior concentrates at θ = 1, so its ratio stays small and the
        // others blow up.
        assert!(p.log_ratio(2).unwrap() < 0.5);
        assert!(p.log_ratio(0).unwrap() > 2.0);
    }

    #[test]
    fn eposterior_interval_examples() {
        let support = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        // All wealth 1: nothing excluded.
        let w = vec![0.0; 5];
        let got = eposterior_interval(&support, &w, 0.05).unwrap().unwrap();
        assert_eq!(got, (0.1, 0.9));
        // Wealth exactly 1/α at one θ: excluded (strict inequality).
        let mut w = vec![0.0; 5];
        w[0] = (1.0 / 0.05_f64).ln();
        let got = eposterior_interval(&support, &w, 0.05).unwrap().unwrap();
        assert_eq!(got, (0.3, 0.9));
        // Everything rejected: empty with explicit flag.
        let w = vec![10.0; 5];
        assert!(eposterior_interval(&support, &w, 0.05).unwrap().is_none());
    }

    #[test]
    fn eposterior_matches_posterior_support_interval() {
        // With log-wealth = ln π₀ − ln π_t, the exclusion rule
        // wealth ≥ 1/α coincides with the support-interval rule
        // π_t/π₀ ≤ α on the grid.
        let support: Vec<f64> = (1..=19).map(|k| k as f64 / 20.0).collect();
        let prior = DiscretePrior::uniform(support.clone()).unwrap();
        let mut p = PriorPosteriorProcess::new(prior, LikelihoodModel::Bernoulli).unwrap();
        for i in 0..60 {
            p.observe(f64::from(i % 2 == 0 || i % 5 == 0)).unwrap();
        }
        let alpha = 0.05;
        let lws = p.log_ratios().unwrap();
        let hull = eposterior_interval(&support, &lws, alpha).unwrap();
        let support_set: Vec<f64> = support
            .iter()
            .zip(&lws)
            .filter(|(_, &lw)| (-lw).exp() > alpha)
            .map(|(&t, _)| t)
            .collect();
        match hull {
            Some((lo, hi)) => {
                assert_eq!(lo, *support_set.first().unwrap());
                assert_eq!(hi, *support_set.last().unwrap());
            }
            None => assert!(support_set.is_empty()),
        }
    }
}
