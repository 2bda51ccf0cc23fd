//! Parametric composite-null e-processes: the scale-invariant sequential
//! t-test, 2×2-table block e-values with mixtures, the two-group logrank
//! martingale, and the prior-posterior ratio martingale with e-posterior
//! intervals.

pub mod logrank;
pub mod prior_posterior;
pub mod ttest;
pub mod two_by_two;

pub use logrank::{logrank_bet, LogrankProcess, RiskSetState};
pub use prior_posterior::{
    eposterior_interval, DiscretePrior, LikelihoodModel, PriorPosteriorProcess,
};
pub use ttest::TTestState;
pub use two_by_two::{
    regrow_beta_prior_search, twobytwo_block_evalue, twobytwo_block_log_evalue, RegrowConfig,
    RegrowResult, TwoByTwoBlock, TwoByTwoMixture,
};
