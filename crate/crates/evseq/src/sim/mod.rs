//! Monte Carlo harness and exact brute-force oracles.
//!
//! All randomness flows through one named generator (ChaCha12) with the
//! replication index as the stream id, so identical `(config, seed)` pairs
//! reproduce identical results byte for byte, serially or in parallel.

pub mod oracles;
pub mod quad;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::eprocess::StreamingEProcess;
use crate::error::{Error, Result};
use crate::numeric::KahanSum;
use crate::param::two_by_two::{twobytwo_block_log_evalue, TwoByTwoBlock};
use crate::param::logrank::{logrank_bet, RiskSetState};

/// Identifier of the generator, echoed into every report so a run can be
/// reproduced from its output alone.
pub const RNG_ALGORITHM: &str = "chacha12";

/// Deterministic per-replication substream: same `(seed, replication)`
/// always yields the same stream, independent of evaluation order.
pub fn substream_rng(seed: u64, replication: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Built-in data models instantiating null (and alternative) classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NullSampler {
    Gaussian { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
    BoundedBeta { a: f64, b: f64 },
    /// Unit-variance Laplace (scale 1/√2), symmetric about zero.
    SymmetricLaplace,
    /// Two-state Markov chain on {0,1}, started from its stationary law.
    TwoStateMarkov { p01: f64, p10: f64 },
    /// Blocks of n_a Bernoulli(θ_a) and n_b Bernoulli(θ_b) outcomes.
    TwoByTwo {
        theta_a: f64,
        theta_b: f64,
        n_a: usize,
        n_b: usize,
    },
    /// Event stream from the proportional-hazards two-group model; the
    /// stream ends when the risk sets are exhausted.
    Logrank { beta: f64, m_treat: u64, m_ctrl: u64 },
}

/// One record of a simulated stream.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Scalar(f64),
    Bit(u8),
    Block(TwoByTwoBlock),
    Event { in_treatment: bool },
}

#[derive(Debug, Clone)]
enum StreamState {
    Plain,
    Markov { current: Option<u8> },
    Logrank { state: RiskSetState },
}

/// A reproducible stream of observations from one sampler.
#[derive(Debug, Clone)]
pub struct NullStream {
    sampler: NullSampler,
    rng: ChaCha12Rng,
    state: StreamState,
}

impl NullSampler {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NullSampler::Gaussian { sd, .. } => {
                if !(sd > 0.0) {
                    return Err(Error::Parameter("gaussian sd must be positive".into()));
                }
            }
            NullSampler::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Parameter("bernoulli p must be in [0,1]".into()));
                }
            }
            NullSampler::BoundedBeta { a, b } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::Parameter("beta shapes must be positive".into()));
                }
            }
            NullSampler::SymmetricLaplace => {}
            NullSampler::TwoStateMarkov { p01, p10 } => {
                if !(0.0..=1.0).contains(&p01) || !(0.0..=1.0).contains(&p10) {
                    return Err(Error::Parameter(
                        "markov transition probabilities must be in [0,1]".into(),
                    ));
                }
            }
            NullSampler::TwoByTwo {
                theta_a,
                theta_b,
                n_a,
                n_b,
            } => {
                if !(0.0..=1.0).contains(&theta_a) || !(0.0..=1.0).contains(&theta_b) {
                    return Err(Error::Parameter("thetas must be in [0,1]".into()));
                }
                if n_a == 0 || n_b == 0 {
                    return Err(Error::Parameter("block sizes must be positive".into()));
                }
            }
            NullSampler::Logrank {
                beta,
                m_treat,
                m_ctrl,
            } => {
                if !beta.is_finite() {
                    return Err(Error::Parameter("beta must be finite".into()));
                }
                if m_treat + m_ctrl == 0 {
                    return Err(Error::Parameter("risk sets must be nonempty".into()));
                }
            }
        }
        Ok(())
    }

    /// Opens the deterministic stream for one replication.
    pub fn stream(&self, seed: u64, replication: u64) -> Result<NullStream> {
        self.validate()?;
        let mut rng = substream_rng(seed, replication);
        let state = match *self {
            NullSampler::TwoStateMarkov { p01, p10 } => {
                // Stationary start: P(state = 1) = p01/(p01+p10).
                let pi1 = if p01 + p10 > 0.0 {
                    p01 / (p01 + p10)
                } else {
                    0.5
                };
                let first = u8::from(rng.gen::<f64>() < pi1);
                StreamState::Markov {
                    current: Some(first),
                }
            }
            NullSampler::Logrank {
                beta,
                m_treat,
                m_ctrl,
            } => StreamState::Logrank {
                state: RiskSetState::new(m_treat, m_ctrl, beta)?,
            },
            _ => StreamState::Plain,
        };
        Ok(NullStream {
            sampler: *self,
            rng,
            state,
        })
    }
}

impl NullStream {
    /// Next observation; `None` once a finite stream (logrank) is exhausted.
    pub fn next_observation(&mut self) -> Result<Option<Observation>> {
        Ok(Some(match self.sampler {
            NullSampler::Gaussian { mean, sd } => {
                let n = Normal::new(mean, sd)
                    .map_err(|e| Error::Parameter(format!("normal: {e}")))?;
                Observation::Scalar(n.sample(&mut self.rng))
            }
            NullSampler::Bernoulli { p } => {
                Observation::Bit(u8::from(self.rng.gen::<f64>() < p))
            }
            NullSampler::BoundedBeta { a, b } => {
                let d =
                    Beta::new(a, b).map_err(|e| Error::Parameter(format!("beta: {e}")))?;
                Observation::Scalar(d.sample(&mut self.rng))
            }
            NullSampler::SymmetricLaplace => {
                let u: f64 = self.rng.gen::<f64>() - 0.5;
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                let x = -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                Observation::Scalar(x)
            }
            NullSampler::TwoStateMarkov { p01, p10 } => {
                let StreamState::Markov { current } = &mut self.state else {
                    unreachable!()
                };
                let cur = current.expect("markov stream initialized");
                let out = cur;
                let p_one = if cur == 0 { p01 } else { 1.0 - p10 };
                *current = Some(u8::from(self.rng.gen::<f64>() < p_one));
                Observation::Bit(out)
            }
            NullSampler::TwoByTwo {
                theta_a,
                theta_b,
                n_a,
                n_b,
            } => {
                let ga: Vec<u8> = (0..n_a)
                    .map(|_| u8::from(self.rng.gen::<f64>() < theta_a))
                    .collect();
                let gb: Vec<u8> = (0..n_b)
                    .map(|_| u8::from(self.rng.gen::<f64>() < theta_b))
                    .collect();
                Observation::Block(TwoByTwoBlock::new(ga, gb)?)
            }
            NullSampler::Logrank { .. } => {
                let StreamState::Logrank { state } = &mut self.state else {
                    unreachable!()
                };
                if state.n_treat + state.n_ctrl == 0 {
                    return Ok(None);
                }
                let p_treat = state.alt_prob_treat();
                let in_treatment = self.rng.gen::<f64>() < p_treat;
                if in_treatment {
                    state.n_treat -= 1;
                } else {
                    state.n_ctrl -= 1;
                }
                Observation::Event { in_treatment }
            }
        }))
    }

    /// Next observation coerced to a scalar (bits become 0.0/1.0); errors
    /// for block and event streams.
    pub fn next_scalar(&mut self) -> Result<f64> {
        match self.next_observation()? {
            Some(Observation::Scalar(x)) => Ok(x),
            Some(Observation::Bit(b)) => Ok(f64::from(b)),
            Some(_) => Err(Error::Config(
                "sampler does not produce scalar observations".into(),
            )),
            None => Err(Error::Config("stream exhausted".into())),
        }
    }
}

// ---------------------------------------------------------------------------
// Stopping rules
// ---------------------------------------------------------------------------

/// A stopping rule whose decision at time t uses the path up to t only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingRule {
    FixedTime { t: u64 },
    /// Stop at the first time the process value reaches `level`. Not usable
    /// in the Monte Carlo harness without a truncation horizon.
    FirstCrossing { level: f64 },
    FirstCrossingOrHorizon { level: f64, horizon: u64 },
}

impl StoppingRule {
    pub fn validate_for_mc(&self) -> Result<()> {
        match self {
            StoppingRule::FirstCrossing { .. } => Err(Error::Config(
                "untruncated first-crossing rules are not allowed in simulation; \
                 use first_crossing_or_horizon"
                    .into(),
            )),
            StoppingRule::FixedTime { t } if *t == 0 => {
                Err(Error::Config("fixed-time rule needs t >= 1".into()))
            }
            StoppingRule::FirstCrossingOrHorizon { horizon, .. } if *horizon == 0 => {
                Err(Error::Config("horizon must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Latest time the rule can run to.
    pub fn horizon(&self) -> Option<u64> {
        match self {
            StoppingRule::FixedTime { t } => Some(*t),
            StoppingRule::FirstCrossing { .. } => None,
            StoppingRule::FirstCrossingOrHorizon { horizon, .. } => Some(*horizon),
        }
    }

    /// Whether the rule fires at time t (1-based) given the value path up to
    /// and including t.
    pub fn stops_at(&self, t: u64, value_at_t: f64) -> bool {
        match self {
            StoppingRule::FixedTime { t: fixed } => t >= *fixed,
            StoppingRule::FirstCrossing { level } => value_at_t >= *level,
            StoppingRule::FirstCrossingOrHorizon { level, horizon } => {
                value_at_t >= *level || t >= *horizon
            }
        }
    }

    /// First stop index on a recorded path (1-based), if any.
    pub fn stop_time(&self, values: &[f64]) -> Option<u64> {
        for (i, &v) in values.iter().enumerate() {
            let t = i as u64 + 1;
            if self.stops_at(t, v) {
                return Some(t);
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo harness
// ---------------------------------------------------------------------------

/// A process the harness can drive with arbitrary observation kinds.
pub trait EvalueProcess {
    fn observe(&mut self, obs: &Observation) -> Result<()>;
    fn log_evalue(&self) -> f64;
}

/// Adapter for scalar processes.
pub struct ScalarAdapter<P: StreamingEProcess>(pub P);

impl<P: StreamingEProcess> EvalueProcess for ScalarAdapter<P> {
    fn observe(&mut self, obs: &Observation) -> Result<()> {
        match obs {
            Observation::Scalar(x) => self.0.observe(*x),
            Observation::Bit(b) => self.0.observe(f64::from(*b)),
            _ => Err(Error::Config(
                "scalar process fed a non-scalar observation".into(),
            )),
        }
    }

    fn log_evalue(&self) -> f64 {
        self.0.log_evalue()
    }
}

impl EvalueProcess for crate::param::two_by_two::TwoByTwoMixture {
    fn observe(&mut self, obs: &Observation) -> Result<()> {
        match obs {
            Observation::Block(b) => self.observe_block(b),
            _ => Err(Error::Config("2x2 mixture needs block observations".into())),
        }
    }

    fn log_evalue(&self) -> f64 {
        crate::param::two_by_two::TwoByTwoMixture::log_evalue(self)
    }
}

impl EvalueProcess for crate::param::logrank::LogrankProcess {
    fn observe(&mut self, obs: &Observation) -> Result<()> {
        match obs {
            Observation::Event { in_treatment } => self.observe_event(*in_treatment),
            _ => Err(Error::Config("logrank process needs event observations".into())),
        }
    }

    fn log_evalue(&self) -> f64 {
        crate::eprocess::StreamingEProcess::log_evalue(self)
    }
}

/// Estimate with its standard error (sample SD / √n).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McSummary {
    pub mean: f64,
    pub se: f64,
    pub replications: u64,
}

impl McSummary {
    fn from_samples(sum: f64, sum_sq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(0.0);
        McSummary {
            mean,
            se: (var / nf).sqrt(),
            replications: n,
        }
    }
}

/// Empirical mean (with SE) of the stopped process value under the sampler.
///
/// Never-stopped paths contribute their value at the truncation horizon, so
/// the estimate is the expectation at the stopped time `min(τ, T)` — still
/// an e-value by optional stopping.
pub fn mc_evalue_at_stop<F>(
    mut factory: F,
    sampler: &NullSampler,
    rule: &StoppingRule,
    replications: u64,
    seed: u64,
) -> Result<McSummary>
where
    F: FnMut() -> Result<Box<dyn EvalueProcess>>,
{
    if replications == 0 {
        return Err(Error::Parameter("replications must be positive".into()));
    }
    rule.validate_for_mc()?;
    let horizon = rule.horizon().expect("validated rule has a horizon");
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for rep in 0..replications {
        let mut stream = sampler.stream(seed, rep)?;
        let mut process = factory()?;
        let mut value = process.log_evalue().exp();
        for t in 1..=horizon {
            match stream.next_observation()? {
                Some(obs) => process.observe(&obs)?,
                None => break,
            }
            value = process.log_evalue().exp();
            if rule.stops_at(t, value) {
                break;
            }
        }
        sum += value;
        sum_sq += value * value;
    }
    Ok(McSummary::from_samples(sum, sum_sq, replications))
}

/// Confidence-sequence families the coverage harness knows how to track at
/// the true parameter in O(1) per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CoverageMethod {
    SubGaussian { sigma: f64, rho: f64 },
    EmpBernstein { cap: f64 },
    Betting { c: f64 },
    Catoni { sigma: f64, lambda: f64 },
}

/// Fraction of replications in which the truth leaves the band at any time
/// up to the horizon.
///
/// Membership of the truth is evaluated through each method's own inversion
/// rule (wealth at the truth against its threshold); for the betting method
/// the reported hull can only be wider, so the measured rate upper-bounds
/// the reported band's miscoverage.
pub fn mc_coverage(
    method: &CoverageMethod,
    sampler: &NullSampler,
    truth: f64,
    alpha: f64,
    horizon: u64,
    replications: u64,
    seed: u64,
) -> Result<McSummary> {
    if replications == 0 || horizon == 0 {
        return Err(Error::Parameter(
            "replications and horizon must be positive".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter("alpha must be in (0,1)".into()));
    }
    let mut misses = 0u64;
    for rep in 0..replications {
        let mut stream = sampler.stream(seed, rep)?;
        let missed = match *method {
            CoverageMethod::SubGaussian { sigma, rho } => {
                let mut p =
                    crate::confseq::SubGaussianMixtureProcess::new(truth, sigma, rho / sigma)?;
                let threshold = (1.0 / alpha).ln();
                let mut hit = false;
                for _ in 0..horizon {
                    crate::eprocess::StreamingEProcess::observe(&mut p, stream.next_scalar()?)?;
                    if p.log_evalue() >= threshold {
                        hit = true;
                        break;
                    }
                }
                hit
            }
            CoverageMethod::EmpBernstein { cap } => {
                let mut cs = crate::confseq::EmpBernsteinCs::new(
                    alpha,
                    crate::betting::BetPolicy::plugin_default(),
                    cap,
                )?;
                let mut hit = false;
                for _ in 0..horizon {
                    cs.observe(stream.next_scalar()?)?;
                    let band = cs.band();
                    if truth < band.lower || truth > band.upper {
                        hit = true;
                        break;
                    }
                }
                hit
            }
            CoverageMethod::Betting { c } => {
                let mut p = crate::confseq::BettingProcess::new(
                    truth,
                    crate::betting::BetPolicy::plugin_default(),
                    c,
                )?;
                let threshold = (1.0 / alpha).ln();
                let mut hit = false;
                for _ in 0..horizon {
                    crate::eprocess::StreamingEProcess::observe(&mut p, stream.next_scalar()?)?;
                    if crate::eprocess::StreamingEProcess::log_evalue(&p) >= threshold {
                        hit = true;
                        break;
                    }
                }
                hit
            }
            CoverageMethod::Catoni { sigma, lambda } => {
                let mut p = crate::confseq::CatoniAtPoint::new(truth, sigma, lambda);
                let threshold = (2.0 / alpha).ln();
                let mut hit = false;
                for _ in 0..horizon {
                    p.observe(stream.next_scalar()?);
                    if p.log_wealth(true) >= threshold || p.log_wealth(false) >= threshold {
                        hit = true;
                        break;
                    }
                }
                hit
            }
        };
        if missed {
            misses += 1;
        }
    }
    let n = replications as f64;
    let rate = misses as f64 / n;
    Ok(McSummary {
        mean: rate,
        se: (rate * (1.0 - rate) / n).sqrt(),
        replications,
    })
}

// ---------------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------------

/// Discrete models small enough to enumerate outcome by outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DiscreteModel {
    /// `E[1]` under Bernoulli(p)^n — the sanity base case.
    ConstantOne { n: u32, p: f64 },
    /// Null expectation of the block e-variable at alternative (θ_a, θ_b)
    /// when both groups draw iid Bernoulli(θ_null).
    TwoByTwoBlockEvalue {
        n_a: usize,
        n_b: usize,
        theta_null: f64,
        theta_a: f64,
        theta_b: f64,
    },
    /// Null (β=0) expectation of one logrank bet at the given risk set,
    /// betting with hazard ratio e^β.
    LogrankStepEvalue { n_treat: u64, n_ctrl: u64, beta: f64 },
    /// Worst (largest) count-class average of the binary-exchangeability
    /// e-process value over all sequences of the given length.
    ExchangeabilityWorstClassMean { len: u32 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExactResult {
    pub value: f64,
    pub outcomes_enumerated: u64,
}

/// Exact probability-weighted expectation over every outcome of a small
/// discrete model (compensated summation).
pub fn enumerate_exact(model: &DiscreteModel) -> Result<ExactResult> {
    const CAPACITY: u64 = 1 << 20;
    match *model {
        DiscreteModel::ConstantOne { n, p } => {
            if n >= 20 {
                return Err(Error::Parameter("state space too large".into()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter("p must be in [0,1]".into()));
            }
            let total = 1u64 << n;
            let mut acc = KahanSum::default();
            for pattern in 0..total {
                let ones = pattern.count_ones() as f64;
                let prob = p.powf(ones) * (1.0 - p).powf(n as f64 - ones);
                acc.add(prob);
            }
            Ok(ExactResult {
                value: acc.value(),
                outcomes_enumerated: total,
            })
        }
        DiscreteModel::TwoByTwoBlockEvalue {
            n_a,
            n_b,
            theta_null,
            theta_a,
            theta_b,
        } => {
            let total_bits = n_a + n_b;
            let total = 1u64
                .checked_shl(total_bits as u32)
                .filter(|&t| t <= CAPACITY)
                .ok_or_else(|| Error::Parameter("state space too large".into()))?;
            if !(theta_null > 0.0 && theta_null < 1.0) {
                return Err(Error::Parameter("theta_null must be in (0,1)".into()));
            }
            let mut acc = KahanSum::default();
            for pattern in 0..total {
                let bits: Vec<u8> = (0..total_bits).map(|i| ((pattern >> i) & 1) as u8).collect();
                let ones = bits.iter().filter(|&&b| b == 1).count() as f64;
                let prob = theta_null.powf(ones)
                    * (1.0 - theta_null).powf(total_bits as f64 - ones);
                let block = TwoByTwoBlock::new(bits[..n_a].to_vec(), bits[n_a..].to_vec())?;
                let s = twobytwo_block_log_evalue(&block, theta_a, theta_b)?.exp();
                acc.add(prob * s);
            }
            Ok(ExactResult {
                value: acc.value(),
                outcomes_enumerated: total,
            })
        }
        DiscreteModel::LogrankStepEvalue {
            n_treat,
            n_ctrl,
            beta,
        } => {
            let state = RiskSetState::new(n_treat, n_ctrl, beta)?;
            let p1 = state.null_prob_treat();
            let mut acc = KahanSum::default();
            let mut outcomes = 0u64;
            if n_treat > 0 {
                acc.add(p1 * logrank_bet(&state, true)?.value());
                outcomes += 1;
            }
            if n_ctrl > 0 {
                acc.add((1.0 - p1) * logrank_bet(&state, false)?.value());
                outcomes += 1;
            }
            Ok(ExactResult {
                value: acc.value(),
                outcomes_enumerated: outcomes,
            })
        }
        DiscreteModel::ExchangeabilityWorstClassMean { len } => {
            if len == 0 || len > 20 {
                return Err(Error::Parameter("length must be in 1..=20".into()));
            }
            let total = 1u64 << len;
            let mut class_sum = vec![KahanSum::default(); len as usize + 1];
            let mut class_count = vec![0u64; len as usize + 1];
            for pattern in 0..total {
                let mut p = crate::nonparam::ExchangeabilityProcess::new();
                let mut ones = 0usize;
                for i in 0..len {
                    let b = ((pattern >> i) & 1) as u8;
                    ones += b as usize;
                    p.observe_bit(b)?;
                }
                class_sum[ones].add(p.evalue());
                class_count[ones] += 1;
            }
            let worst = class_sum
                .iter()
                .zip(&class_count)
                .map(|(s, &n)| s.value() / n as f64)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(ExactResult {
                value: worst,
                outcomes_enumerated: total,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confseq::SubGaussianMixtureProcess;

    #[test]
    fn substreams_are_reproducible_and_disjoint() {
        let a: Vec<f64> = {
            let mut r = substream_rng(7, 3);
            (0..8).map(|_| r.gen::<f64>()).collect()
        };
        let b: Vec<f64> = {
            let mut r = substream_rng(7, 3);
            (0..8).map(|_| r.gen::<f64>()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<f64> = {
            let mut r = substream_rng(7, 4);
            (0..8).map(|_| r.gen::<f64>()).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn streams_reproduce_bit_for_bit() {
        let s = NullSampler::Gaussian {
            mean: 0.3,
            sd: 1.2,
        };
        let xs: Vec<f64> = {
            let mut st = s.stream(99, 0).unwrap();
            (0..32).map(|_| st.next_scalar().unwrap()).collect()
        };
        let ys: Vec<f64> = {
            let mut st = s.stream(99, 0).unwrap();
            (0..32).map(|_| st.next_scalar().unwrap()).collect()
        };
        assert_eq!(xs, ys);
    }

    #[test]
    fn laplace_sampler_is_symmetric_with_unit_variance() {
        let s = NullSampler::SymmetricLaplace;
        let mut st = s.stream(5, 0).unwrap();
        let n = 200_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let x = st.next_scalar().unwrap();
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn logrank_stream_depletes() {
        let s = NullSampler::Logrank {
            beta: 0.0,
            m_treat: 3,
            m_ctrl: 2,
        };
        let mut st = s.stream(1, 0).unwrap();
        let mut events = 0;
        while let Some(obs) = st.next_observation().unwrap() {
            assert!(matches!(obs, Observation::Event { .. }));
            events += 1;
        }
        assert_eq!(events, 5);
    }

    #[test]
    fn untruncated_rule_is_rejected() {
        let rule = StoppingRule::FirstCrossing { level: 5.0 };
        assert!(rule.validate_for_mc().is_err());
    }

    #[test]
    fn stopping_rule_prefix_consistency() {
        let rule = StoppingRule::FirstCrossingOrHorizon {
            level: 2.0,
            horizon: 10,
        };
        let path = [0.5, 1.0, 2.5, 0.1, 3.0];
        let full = rule.stop_time(&path);
        for cut in 1..=path.len() {
            let partial = rule.stop_time(&path[..cut]);
            if let Some(t) = partial {
                assert_eq!(full, Some(t));
                assert!(t as usize <= cut);
            }
        }
    }

    #[test]
    fn constant_process_has_mean_one_se_zero() {
        let factory = || -> Result<Box<dyn EvalueProcess>> {
            Ok(Box::new(ScalarAdapter(crate::detect::UnitProcess)))
        };
        let s = mc_evalue_at_stop(
            factory,
            &NullSampler::Gaussian {
                mean: 0.0,
                sd: 1.0,
            },
            &StoppingRule::FixedTime { t: 20 },
            500,
            11,
        )
        .unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.se, 0.0);
    }

    #[test]
    fn stopped_mixture_supermartingale_stays_subunit() {
        let factory = || -> Result<Box<dyn EvalueProcess>> {
            Ok(Box::new(ScalarAdapter(
                SubGaussianMixtureProcess::new(0.0, 1.0, 0.5).unwrap(),
            )))
        };
        let s = mc_evalue_at_stop(
            factory,
            &NullSampler::Gaussian {
                mean: 0.0,
                sd: 1.0,
            },
            &StoppingRule::FirstCrossingOrHorizon {
                level: 5.0,
                horizon: 200,
            },
            2000,
            13,
        )
        .unwrap();
        assert!(
            s.mean <= 1.0 + 3.0 * s.se,
            "mean {} se {}",
            s.mean,
            s.se
        );
    }

    #[test]
    fn coverage_vanishes_in_the_small_alpha_limit() {
        // alpha = 1e−6 over 1e3 short paths: a miss is too rare to observe.
        let s = mc_coverage(
            &CoverageMethod::SubGaussian {
                sigma: 1.0,
                rho: 0.1,
            },
            &NullSampler::Gaussian {
                mean: 0.0,
                sd: 1.0,
            },
            0.0,
            1e-6,
            100,
            1000,
            21,
        )
        .unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn coverage_is_perfect_on_degenerate_data() {
        // Constant stream with the truth at the constant.
        let s = mc_coverage(
            &CoverageMethod::EmpBernstein { cap: 0.5 },
            &NullSampler::Bernoulli { p: 1.0 },
            1.0,
            0.05,
            200,
            500,
            22,
        )
        .unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn enumerate_constant_is_exactly_one() {
        let r = enumerate_exact(&DiscreteModel::ConstantOne { n: 4, p: 0.5 }).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.outcomes_enumerated, 16);
    }

    #[test]
    fn enumerate_twobytwo_block() {
        let r = enumerate_exact(&DiscreteModel::TwoByTwoBlockEvalue {
            n_a: 2,
            n_b: 2,
            theta_null: 0.3,
            theta_a: 0.3,
            theta_b: 0.3,
        })
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.outcomes_enumerated, 16);
    }

    #[test]
    fn enumerate_exchangeability_length_ten() {
        let r =
            enumerate_exact(&DiscreteModel::ExchangeabilityWorstClassMean { len: 10 }).unwrap();
        assert!(r.value <= 1.0 + 1e-12, "worst class mean {}", r.value);
        assert_eq!(r.outcomes_enumerated, 1024);
    }
}
