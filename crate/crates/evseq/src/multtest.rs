//! E-value multiple testing: e-BH for FDR control under arbitrary
//! dependence, the BH baseline for p-values, the e-BY adjusted level for
//! false coverage control over e-CIs, and e-value-weighted BH.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A batch of hypotheses with one score (e-value or p-value) each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPanel {
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
}

impl HypothesisPanel {
    /// Panel of e-values: nonnegative, +∞ allowed.
    pub fn from_evalues(labels: Vec<String>, evalues: Vec<f64>) -> Result<Self> {
        if evalues.is_empty() || labels.len() != evalues.len() {
            return Err(Error::Parameter(
                "panel needs matching nonempty labels and scores".into(),
            ));
        }
        if evalues.iter().any(|&e| e.is_nan() || e < 0.0) {
            return Err(Error::data("e-values must be nonnegative"));
        }
        Ok(HypothesisPanel {
            labels,
            scores: evalues,
        })
    }

    /// Panel of p-values in \[0,1].
    pub fn from_pvalues(labels: Vec<String>, pvalues: Vec<f64>) -> Result<Self> {
        if pvalues.is_empty() || labels.len() != pvalues.len() {
            return Err(Error::Parameter(
                "panel needs matching nonempty labels and scores".into(),
            ));
        }
        if pvalues.iter().any(|&p| p.is_nan() || !(0.0..=1.0).contains(&p)) {
            return Err(Error::data("p-values must lie in [0,1]"));
        }
        Ok(HypothesisPanel {
            labels,
            scores: pvalues,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Indices selected for post-hoc confidence reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionSet {
    pub selected: Vec<usize>,
}

/// Rejections plus the audit trail of the threshold walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub procedure: String,
    pub alpha: f64,
    pub k_star: usize,
    /// Rejected hypothesis indices in the original input order.
    pub rejected: Vec<usize>,
    /// Per-hypothesis score as consumed by the procedure (weighted p-values
    /// for the weighted variant).
    pub scores: Vec<f64>,
}

impl DecisionReport {
    pub fn is_rejected(&self, index: usize) -> bool {
        self.rejected.contains(&index)
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

/// Indices sorted by descending score; ties broken by input index (stable),
/// +∞ above every finite value.
fn order_descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// e-BH: reject the hypotheses carrying the k* largest e-values, where
/// `k* = max{k : e_[k] ≥ K/(kα)}`. Controls FDR at α under arbitrary
/// dependence between the e-values.
pub fn ebh(panel: &HypothesisPanel, alpha: f64) -> Result<DecisionReport> {
    check_alpha(alpha)?;
    if panel.scores.iter().any(|&e| e.is_nan() || e < 0.0) {
        return Err(Error::data("e-values must be nonnegative"));
    }
    let kk = panel.len() as f64;
    let order = order_descending(&panel.scores);
    let mut k_star = 0usize;
    for (rank0, &i) in order.iter().enumerate() {
        let k = rank0 + 1;
        if panel.scores[i] >= kk / (k as f64 * alpha) {
            k_star = k;
        }
    }
    let mut rejected: Vec<usize> = order[..k_star].to_vec();
    rejected.sort_unstable();
    Ok(DecisionReport {
        procedure: "ebh".into(),
        alpha,
        k_star,
        rejected,
        scores: panel.scores.clone(),
    })
}

/// BH baseline: reject the k* smallest p-values with
/// `k* = max{k : p_(k) ≤ αk/K}`.
pub fn bh(panel: &HypothesisPanel, alpha: f64) -> Result<DecisionReport> {
    check_alpha(alpha)?;
    if panel
        .scores
        .iter()
        .any(|&p| p.is_nan() || !(0.0..=1.0).contains(&p))
    {
        return Err(Error::data("p-values must lie in [0,1]"));
    }
    bh_on_scores(&panel.scores, alpha, "bh")
}

fn bh_on_scores(pvalues: &[f64], alpha: f64, procedure: &str) -> Result<DecisionReport> {
    let kk = pvalues.len() as f64;
    let mut idx: Vec<usize> = (0..pvalues.len()).collect();
    idx.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]).then(a.cmp(&b)));
    let mut k_star = 0usize;
    for (rank0, &i) in idx.iter().enumerate() {
        let k = rank0 + 1;
        if pvalues[i] <= alpha * k as f64 / kk {
            k_star = k;
        }
    }
    let mut rejected: Vec<usize> = idx[..k_star].to_vec();
    rejected.sort_unstable();
    Ok(DecisionReport {
        procedure: procedure.into(),
        alpha,
        k_star,
        rejected,
        scores: pvalues.to_vec(),
    })
}

/// e-BY adjusted level `α·|S|/K`: reporting `(1 − α|S|/K)` e-CIs for the
/// selected parameters controls the false coverage rate at α, for any
/// selection rule and any dependence.
pub fn eby_adjusted_level(k: usize, selection: &SelectionSet, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let s = selection.selected.len();
    if s == 0 {
        return Err(Error::Parameter("selection set must be nonempty".into()));
    }
    if s > k || selection.selected.iter().any(|&i| i >= k) {
        return Err(Error::Parameter(
            "selection indices must lie within the panel".into(),
        ));
    }
    Ok(alpha * s as f64 / k as f64)
}

/// BH applied to `p_i / e_i`, with e-values as unnormalized weights;
/// `e_i = 0` maps to a weighted p-value of +∞, i.e. never rejected.
pub fn evalue_weighted_bh(
    pvalues: &HypothesisPanel,
    weights: &[f64],
    alpha: f64,
) -> Result<DecisionReport> {
    check_alpha(alpha)?;
    if weights.len() != pvalues.len() {
        return Err(Error::Parameter(
            "weights must align with the panel".into(),
        ));
    }
    if weights.iter().any(|&e| e.is_nan() || e < 0.0) {
        return Err(Error::data("e-value weights must be nonnegative"));
    }
    let weighted: Vec<f64> = pvalues
        .scores
        .iter()
        .zip(weights)
        .map(|(&p, &e)| if e == 0.0 { f64::INFINITY } else { p / e })
        .collect();
    let kk = weighted.len() as f64;
    let mut idx: Vec<usize> = (0..weighted.len()).collect();
    idx.sort_by(|&a, &b| weighted[a].total_cmp(&weighted[b]).then(a.cmp(&b)));
    let mut k_star = 0usize;
    for (rank0, &i) in idx.iter().enumerate() {
        let k = rank0 + 1;
        if weighted[i] <= alpha * k as f64 / kk {
            k_star = k;
        }
    }
    let mut rejected: Vec<usize> = idx[..k_star].to_vec();
    rejected.sort_unstable();
    Ok(DecisionReport {
        procedure: "evalue-weighted-bh".into(),
        alpha,
        k_star,
        rejected,
        scores: weighted,
    })
}
