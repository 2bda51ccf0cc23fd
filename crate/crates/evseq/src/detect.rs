//! E-detectors for sequential change detection.
//!
//! An e-detector sums e-processes restarted at consecutive times: a fresh
//! process joins at every step (an extra unit of capital injected into the
//! game), every active process ingests the new observation, and the detector
//! value is the sum of their wealth. Stopping at `detector ≥ 1/α` guarantees
//! an average run length of at least `1/α` under the pre-change class.
//!
//! With a simple likelihood-ratio base process the construction collapses to
//! the Shiryaev–Roberts recursion `R_t = (1 + R_{t−1})·LR_t`, which the
//! tests assert pathwise.

use serde::{Deserialize, Serialize};

use crate::confseq::{BettingProcess, SubGaussianMixtureProcess};
use crate::eprocess::StreamingEProcess;
use crate::error::{Error, Result};
use crate::sim::NullSampler;

/// Default cap on simultaneously active restarts. Pruning drops the restart
/// with the smallest wealth, so the pruned detector is at most the exact
/// one: detection can only be delayed, never falsely accelerated.
pub const DEFAULT_RESTART_CAP: usize = 512;

/// Base e-process families the detector knows how to restart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaseProcessConfig {
    /// Simple likelihood ratio N(mu1, sigma) against N(mu0, sigma); the
    /// Shiryaev–Roberts base.
    GaussianLr { mu0: f64, mu1: f64, sigma: f64 },
    /// Sub-Gaussian mixture supermartingale at a fixed pre-change mean.
    SubgaussianMixture { mu: f64, sigma: f64, rho: f64 },
    /// Betting martingale for a pre-change mean on \[0,1].
    BettingMean { mu: f64, c: f64 },
    /// Constant unit wealth (λ = 0); detector value is exactly t.
    Unit,
}

impl BaseProcessConfig {
    pub fn build(&self) -> Result<Box<dyn StreamingEProcess>> {
        Ok(match *self {
            BaseProcessConfig::GaussianLr { mu0, mu1, sigma } => {
                Box::new(GaussianLrProcess::new(mu0, mu1, sigma)?)
            }
            BaseProcessConfig::SubgaussianMixture { mu, sigma, rho } => {
                Box::new(SubGaussianMixtureProcess::new(mu, sigma, rho)?)
            }
            BaseProcessConfig::BettingMean { mu, c } => Box::new(BettingProcess::new(
                mu,
                crate::betting::BetPolicy::plugin_default(),
                c,
            )?),
            BaseProcessConfig::Unit => Box::new(UnitProcess),
        })
    }
}

/// Likelihood-ratio e-process for a known simple pre/post-change pair.
#[derive(Debug, Clone)]
pub struct GaussianLrProcess {
    mu0: f64,
    mu1: f64,
    sigma: f64,
    log_lr: f64,
}

impl GaussianLrProcess {
    pub fn new(mu0: f64, mu1: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Parameter("sigma must be positive".into()));
        }
        Ok(GaussianLrProcess {
            mu0,
            mu1,
            sigma,
            log_lr: 0.0,
        })
    }
}

impl StreamingEProcess for GaussianLrProcess {
    fn observe(&mut self, x: f64) -> Result<()> {
        if x.is_nan() {
            return Err(Error::data("NaN observation"));
        }
        let s2 = self.sigma * self.sigma;
        let d0 = x - self.mu0;
        let d1 = x - self.mu1;
        self.log_lr += (d0 * d0 - d1 * d1) / (2.0 * s2);
        Ok(())
    }

    fn log_evalue(&self) -> f64 {
        self.log_lr
    }
}

/// λ = 0 degenerate process: wealth is identically one.
#[derive(Debug, Clone, Copy)]
pub struct UnitProcess;

impl StreamingEProcess for UnitProcess {
    fn observe(&mut self, _x: f64) -> Result<()> {
        Ok(())
    }

    fn log_evalue(&self) -> f64 {
        0.0
    }
}

/// Sum-of-restarted-e-processes detector state.
pub struct EDetector {
    base: BaseProcessConfig,
    restarts: Vec<Box<dyn StreamingEProcess>>,
    cap: usize,
    t: u64,
}

impl EDetector {
    pub fn new(base: BaseProcessConfig, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Config("restart cap must be positive".into()));
        }
        // Validate the factory up front.
        base.build()
            .map_err(|e| Error::Config(format!("base process: {e}")))?;
        Ok(EDetector {
            base,
            restarts: Vec::new(),
            cap,
            t: 0,
        })
    }

    pub fn with_default_cap(base: BaseProcessConfig) -> Result<Self> {
        Self::new(base, DEFAULT_RESTART_CAP)
    }

    /// Starts a fresh process at this time (wealth 1 before seeing x), feeds
    /// x to every active process, and recomputes the detector value.
    pub fn step(&mut self, x: f64) -> Result<()> {
        self.restarts.push(
            self.base
                .build()
                .map_err(|e| Error::Config(format!("base process: {e}")))?,
        );
        for p in &mut self.restarts {
            p.observe(x)?;
        }
        if self.restarts.len() > self.cap {
            let (worst, _) = self
                .restarts
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.log_evalue().total_cmp(&b.1.log_evalue()))
                .expect("nonempty restarts");
            self.restarts.remove(worst);
        }
        self.t += 1;
        Ok(())
    }

    /// Σ over active restarts of their wealth.
    pub fn value(&self) -> f64 {
        self.restarts.iter().map(|p| p.log_evalue().exp()).sum()
    }

    /// Stop decision: `detector ≥ 1/α`.
    pub fn should_stop(&self, alpha: f64) -> Result<bool> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must be in (0,1), got {alpha}"
            )));
        }
        Ok(self.value() >= 1.0 / alpha)
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn active_restarts(&self) -> usize {
        self.restarts.len()
    }
}

/// Outcome of one change-detection run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub stop_time: Option<u64>,
    pub change_time: Option<u64>,
    pub false_alarm: bool,
}

/// Configuration for an average-run-length / detection-delay experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArlConfig {
    pub base: BaseProcessConfig,
    pub pre_change: NullSampler,
    /// Post-change sampler and the change time ν (observations after the
    /// ν-th come from the post-change law). `None` runs a pure no-change
    /// experiment.
    pub post_change: Option<(NullSampler, u64)>,
    pub alpha: f64,
    /// Truncation horizon; runs that never stop count the horizon (which
    /// biases the measured run length downward, the conservative direction
    /// for an ARL lower bound).
    pub horizon: u64,
    pub restart_cap: usize,
}

/// Summary across replications.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArlSummary {
    pub replications: u64,
    pub mean_stop_time: f64,
    pub se_stop_time: f64,
    /// Mean of `stop − ν` over runs that stopped after the change.
    pub mean_detection_delay: Option<f64>,
    pub false_alarm_rate: f64,
}

/// Runs the detector on simulated streams and reports run-length metrics.
pub fn run_arl_experiment(cfg: &ArlConfig, replications: u64, seed: u64) -> Result<ArlSummary> {
    if replications == 0 {
        return Err(Error::Parameter("replications must be positive".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Parameter("alpha must be in (0,1)".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut delays = Vec::new();
    let mut false_alarms = 0u64;

    for rep in 0..replications {
        let mut pre = cfg.pre_change.stream(seed, rep)?;
        let mut post = match &cfg.post_change {
            Some((sampler, _)) => Some(sampler.stream(seed ^ 0x9e37_79b9_7f4a_7c15, rep)?),
            None => None,
        };
        let nu = cfg.post_change.as_ref().map(|(_, nu)| *nu);
        let mut det = EDetector::new(cfg.base, cfg.restart_cap)?;
        let mut metrics = RunMetrics {
            stop_time: None,
            change_time: nu,
            false_alarm: false,
        };
        for t in 1..=cfg.horizon {
            let x = match (nu, &mut post) {
                (Some(nu), Some(post)) if t > nu => post.next_scalar()?,
                _ => pre.next_scalar()?,
            };
            det.step(x)?;
            if det.should_stop(cfg.alpha)? {
                metrics.stop_time = Some(t);
                break;
            }
        }
        let stopped_at = metrics.stop_time.unwrap_or(cfg.horizon);
        metrics.false_alarm = match nu {
            Some(nu) => metrics.stop_time.is_some_and(|s| s <= nu),
            None => metrics.stop_time.is_some(),
        };
        if metrics.false_alarm {
            false_alarms += 1;
        }
        if let (Some(nu), Some(s)) = (nu, metrics.stop_time) {
            if s > nu {
                delays.push((s - nu) as f64);
            }
        }
        sum += stopped_at as f64;
        sum_sq += (stopped_at as f64) * (stopped_at as f64);
    }

    let n = replications as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let mean_delay = if delays.is_empty() {
        None
    } else {
        Some(delays.iter().sum::<f64>() / delays.len() as f64)
    };
    Ok(ArlSummary {
        replications,
        mean_stop_time: mean,
        se_stop_time: (var / n).sqrt(),
        mean_detection_delay: mean_delay,
        false_alarm_rate: false_alarms as f64 / n,
    })
}

/// Direct Shiryaev–Roberts recursion `R_t = (1 + R_{t−1})·LR_t`; the oracle
/// the detector is checked against for the likelihood-ratio base.
pub struct ShiryaevRobertsRecursion {
    lr: GaussianLrProcess,
    last_log_lr: f64,
    r: f64,
}

impl ShiryaevRobertsRecursion {
    pub fn new(mu0: f64, mu1: f64, sigma: f64) -> Result<Self> {
        Ok(ShiryaevRobertsRecursion {
            lr: GaussianLrProcess::new(mu0, mu1, sigma)?,
            last_log_lr: 0.0,
            r: 0.0,
        })
    }

    pub fn step(&mut self, x: f64) -> Result<f64> {
        self.lr.observe(x)?;
        let inc = self.lr.log_evalue() - self.last_log_lr;
        self.last_log_lr = self.lr.log_evalue();
        self.r = (1.0 + self.r) * inc.exp();
        Ok(self.r)
    }

    pub fn value(&self) -> f64 {
        self.r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_unit_base_has_value_one() {
        let mut det = EDetector::with_default_cap(BaseProcessConfig::Unit).unwrap();
        det.step(0.3).unwrap();
        assert_eq!(det.value(), 1.0);
    }

    #[test]
    fn unit_base_detector_value_is_t() {
        let mut det = EDetector::with_default_cap(BaseProcessConfig::Unit).unwrap();
        for t in 1..=50u64 {
            det.step(0.0).unwrap();
            assert_eq!(det.value(), t as f64);
        }
    }

    #[test]
    fn unit_base_stops_at_ceil_one_over_alpha() {
        let alpha = 0.03;
        let mut det = EDetector::with_default_cap(BaseProcessConfig::Unit).unwrap();
        let mut stop = None;
        for t in 1..=100u64 {
            det.step(0.0).unwrap();
            if det.should_stop(alpha).unwrap() {
                stop = Some(t);
                break;
            }
        }
        assert_eq!(stop, Some((1.0 / alpha).ceil() as u64));
    }

    #[test]
    fn stop_boundary_is_inclusive() {
        let mut det = EDetector::with_default_cap(BaseProcessConfig::Unit).unwrap();
        for _ in 0..100 {
            det.step(0.0).unwrap();
        }
        assert!(det.should_stop(0.01).unwrap()); // value == 100 == 1/α
        let mut det99 = EDetector::with_default_cap(BaseProcessConfig::Unit).unwrap();
        for _ in 0..99 {
            det99.step(0.0).unwrap();
        }
        assert!(!det99.should_stop(0.01).unwrap());
    }

    #[test]
    fn matches_shiryaev_roberts_recursion() {
        let base = BaseProcessConfig::GaussianLr {
            mu0: 0.0,
            mu1: 1.0,
            sigma: 1.0,
        };
        let mut det = EDetector::with_default_cap(base).unwrap();
        let mut sr = ShiryaevRobertsRecursion::new(0.0, 1.0, 1.0).unwrap();
        // Deterministic pseudo-stream.
        let xs: Vec<f64> = (0..100).map(|i| ((i * 31 + 17) % 97) as f64 / 48.5 - 1.0).collect();
        for &x in &xs {
            det.step(x).unwrap();
            let r = sr.step(x).unwrap();
            let rel = (det.value() - r).abs() / r.max(1.0);
            assert!(rel < 1e-9, "detector {} vs recursion {}", det.value(), r);
        }
    }

    #[test]
    fn pruned_detector_never_exceeds_exact() {
        let base = BaseProcessConfig::GaussianLr {
            mu0: 0.0,
            mu1: 1.0,
            sigma: 1.0,
        };
        let mut exact = EDetector::new(base, usize::MAX).unwrap();
        let mut pruned = EDetector::new(base, 8).unwrap();
        let xs: Vec<f64> = (0..200).map(|i| ((i * 13 + 5) % 89) as f64 / 44.0 - 1.0).collect();
        for &x in &xs {
            exact.step(x).unwrap();
            pruned.step(x).unwrap();
            assert!(pruned.value() <= exact.value() + 1e-9 * exact.value());
            assert!(pruned.active_restarts() <= 8);
        }
    }

    #[test]
    fn arl_unit_base_is_deterministic() {
        let cfg = ArlConfig {
            base: BaseProcessConfig::Unit,
            pre_change: NullSampler::Gaussian {
                mean: 0.0,
                sd: 1.0,
            },
            post_change: None,
            alpha: 0.05,
            horizon: 100,
            restart_cap: DEFAULT_RESTART_CAP,
        };
        let s = run_arl_experiment(&cfg, 50, 1).unwrap();
        assert_eq!(s.mean_stop_time, 20.0);
        assert_eq!(s.se_stop_time, 0.0);
        assert_eq!(s.false_alarm_rate, 1.0);
    }
}
