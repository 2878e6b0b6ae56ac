//! Tree pruning for list decoding.
//!
//! After the sort step at every level, a path `j` whose share of the
//! survivors' total probability mass is small may be deleted:
//!
//! * [`PrunePolicy::Static`] deletes `j` when `P_j < alpha_i * sum_k P_k`
//!   with a per-level table calibrated by Monte Carlo ([`calibrate_static`]).
//! * [`PrunePolicy::Dynamic`] spends a tolerated frame-error budget: at
//!   level `i` it deletes the largest set of weakest paths whose mass
//!   fraction fits in `p_tol - P_de`, where `P_de` bounds the loss already
//!   caused by earlier deletions (see [`ledger`]).
//! * [`PrunePolicy::MaxRatio`] is a baseline that deletes paths far below
//!   the best one.
//!
//! The best path is never deleted. All arithmetic is in the log domain on
//! per-level normalized metrics; only ratios enter the rules.

mod budget;
mod calibrate;
pub mod ledger;

pub use budget::{llr_budget, LlrBudget, LlrBudgetFile};
pub use calibrate::{calibrate_static, StaticTable, ALPHA_MAX};
pub use ledger::{estimate_accumulated_loss, update_ledger, PrunedRecord, RecordLedger};

use crate::error::{Error, Result};
use crate::metric::logsumexp;

#[derive(Debug, Clone, PartialEq)]
pub enum PrunePolicy {
    Off,
    Static { alpha: Vec<f64> },
    Dynamic { p_tol: f64, budget: LlrBudget },
    /// Deletes `j` when `P_j < beta * max_k P_k`.
    MaxRatio { beta: f64 },
}

impl PrunePolicy {
    /// Checks the policy against a code of length `len`.
    pub fn validate(&self, len: usize) -> Result<()> {
        match self {
            PrunePolicy::Off => Ok(()),
            PrunePolicy::Static { alpha } => {
                if alpha.len() != len {
                    return Err(Error::config(format!("{} thresholds for N = {len}", alpha.len())));
                }
                if let Some(a) = alpha.iter().find(|a| !(0.0..1.0).contains(*a)) {
                    return Err(Error::config(format!("threshold {a} outside [0,1)")));
                }
                Ok(())
            }
            PrunePolicy::Dynamic { p_tol, budget } => {
                if !(*p_tol > 0.0 && *p_tol < 1.0) {
                    return Err(Error::config(format!("p_tol {p_tol} outside (0,1)")));
                }
                if budget.len() != len {
                    return Err(Error::config(format!("{} LLR budgets for N = {len}", budget.len())));
                }
                Ok(())
            }
            PrunePolicy::MaxRatio { beta } => {
                if !(0.0..1.0).contains(beta) {
                    return Err(Error::config(format!("beta {beta} outside [0,1)")));
                }
                Ok(())
            }
        }
    }

    pub fn is_off(&self) -> bool {
        matches!(self, PrunePolicy::Off)
    }
}

/// Number of leading paths kept by the static rule. `metrics` are sorted
/// descending; the first path always stays.
pub fn apply_static_rule(metrics: &[f64], alpha: f64) -> usize {
    if metrics.len() <= 1 || alpha <= 0.0 {
        return metrics.len();
    }
    let threshold = alpha.ln() + logsumexp(metrics);
    1 + metrics[1..].iter().take_while(|&&m| m >= threshold).count()
}

/// Share `P_j / S` of one path in the survivors' mass, from log values.
pub fn deletion_loss(log_metric: f64, log_sum: f64) -> f64 {
    (log_metric - log_sum).exp().clamp(0.0, 1.0)
}

/// Outcome of the budgeted prune-set selection at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneSelection {
    /// Leading paths that survive.
    pub keep: usize,
    /// Retained mass fraction, `sum_{kept} P_j / sum_j P_j`.
    pub alpha: f64,
    /// Deletion loss of each pruned path, in list order.
    pub losses: Vec<f64>,
}

/// Picks the weakest paths whose total mass fraction stays within
/// `budget_fraction`, walking up from the smallest metric. `metrics` are
/// sorted descending.
pub fn select_prune_set(metrics: &[f64], budget_fraction: f64) -> PruneSelection {
    let len = metrics.len();
    let mut keep = len;
    let mut spent = 0.0;
    if len > 1 && budget_fraction > 0.0 {
        let sum = logsumexp(metrics);
        while keep > 1 {
            let q = deletion_loss(metrics[keep - 1], sum);
            if spent + q > budget_fraction {
                break;
            }
            spent += q;
            keep -= 1;
        }
        let losses = metrics[keep..].iter().map(|&m| deletion_loss(m, sum)).collect();
        return PruneSelection {
            keep,
            alpha: retained_fraction(metrics, keep),
            losses,
        };
    }
    PruneSelection {
        keep,
        alpha: 1.0,
        losses: Vec::new(),
    }
}

fn retained_fraction(metrics: &[f64], keep: usize) -> f64 {
    (logsumexp(&metrics[..keep]) - logsumexp(metrics)).exp().min(1.0)
}

/// Per-decode pruning state: the record ledger and accumulated loss.
#[derive(Debug)]
pub(crate) struct PruneSession<'p> {
    policy: &'p PrunePolicy,
    list_size: usize,
    ledger: RecordLedger,
}

impl<'p> PruneSession<'p> {
    pub(crate) fn new(policy: &'p PrunePolicy, list_size: usize) -> Self {
        PruneSession {
            policy,
            list_size,
            ledger: RecordLedger::default(),
        }
    }

    pub(crate) fn active(&self) -> bool {
        !self.policy.is_off()
    }

    pub(crate) fn accumulated_loss(&self) -> f64 {
        self.ledger.accumulated_loss()
    }

    pub(crate) fn ledger(&self) -> &RecordLedger {
        &self.ledger
    }

    /// Applies the policy to the survivors at `level` (bits decided so far,
    /// 1-based). `metrics` are sorted descending and normalized; `offset`
    /// restores absolute log metrics. Returns how many leading paths stay.
    pub(crate) fn apply(&mut self, level: usize, metrics: &[f64], offset: f64) -> usize {
        match self.policy {
            PrunePolicy::Off => metrics.len(),
            PrunePolicy::Static { alpha } => apply_static_rule(metrics, alpha[level - 1]),
            PrunePolicy::MaxRatio { beta } => {
                if *beta <= 0.0 || metrics.is_empty() {
                    return metrics.len();
                }
                let threshold = beta.ln() + metrics[0];
                1 + metrics[1..].iter().take_while(|&&m| m >= threshold).count()
            }
            PrunePolicy::Dynamic { p_tol, budget } => self.apply_dynamic(level, metrics, offset, *p_tol, budget),
        }
    }

    fn apply_dynamic(&mut self, level: usize, metrics: &[f64], offset: f64, p_tol: f64, budget: &LlrBudget) -> usize {
        let prior = self.ledger.accumulated_loss();
        let mut selection = select_prune_set(metrics, p_tol - prior);
        // Every record that can still re-enter a list counts against the
        // budget; hold back pruned paths until the worst case fits.
        while selection.keep < metrics.len()
            && self.ledger.worst_case_loss(&selection.losses, self.list_size) > p_tol
        {
            selection.keep += 1;
            selection.losses.remove(0);
        }
        let new_records: Vec<PrunedRecord> = metrics[selection.keep..]
            .iter()
            .zip(&selection.losses)
            .map(|(&m, &q)| PrunedRecord::new(level, m + offset, q))
            .collect();
        if !new_records.is_empty() || !self.ledger.is_empty() {
            update_ledger(&mut self.ledger, new_records, level, self.list_size, budget);
            let survivors: Vec<f64> = metrics[..selection.keep].iter().map(|m| m + offset).collect();
            let estimate = estimate_accumulated_loss(&self.ledger, level, &survivors, self.list_size, budget);
            self.ledger.raise_accumulated_loss(estimate);
        }
        debug_assert!(self.ledger.accumulated_loss() <= p_tol, "loss budget overrun");
        selection.keep
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logs(p: &[f64]) -> Vec<f64> {
        p.iter().map(|x| x.ln()).collect()
    }

    #[test]
    fn static_rule_examples() {
        assert_eq!(apply_static_rule(&logs(&[0.5, 0.3, 0.15, 0.05]), 0.1), 3);
        assert_eq!(apply_static_rule(&logs(&[0.5, 0.3, 0.15, 0.05]), 0.0), 4);
        assert_eq!(apply_static_rule(&logs(&[0.5, 0.5]), 0.49), 2);
        // normalization invariance
        let shifted: Vec<f64> = logs(&[0.5, 0.3, 0.15, 0.05]).iter().map(|m| m - 123.0).collect();
        assert_eq!(apply_static_rule(&shifted, 0.1), 3);
    }

    #[test]
    fn static_rule_never_drops_best() {
        assert_eq!(apply_static_rule(&logs(&[0.3]), 0.999), 1);
        assert_eq!(apply_static_rule(&logs(&[0.5, 0.5]), 0.999), 1);
    }

    #[test]
    fn deletion_loss_examples() {
        assert!((deletion_loss(0.2f64.ln(), 0.0) - 0.2).abs() < 1e-15);
        assert_eq!(deletion_loss(-2.5, -2.5), 1.0);
        let s = logsumexp(&[-1.0, -2.0, -3.0]);
        let q = deletion_loss(-3.0, s);
        let hand = (-3f64).exp() / ((-1f64).exp() + (-2f64).exp() + (-3f64).exp());
        assert!((q - hand).abs() < 1e-15);
        assert!((q - 0.0900).abs() < 5e-5);
    }

    #[test]
    fn prune_set_examples() {
        let sel = select_prune_set(&logs(&[0.5, 0.3, 0.15, 0.05]), 0.08);
        assert_eq!(sel.keep, 3);
        assert!((sel.alpha - 0.95).abs() < 1e-12);
        assert!((sel.losses[0] - 0.05).abs() < 1e-12);

        assert_eq!(select_prune_set(&logs(&[0.5, 0.3, 0.15, 0.05]), 0.0).keep, 4);
        let sel = select_prune_set(&logs(&[0.9, 0.1]), 1.0 - 1e-12);
        assert_eq!(sel.keep, 1);
    }

    #[test]
    fn pruned_losses_sum_to_pruned_mass() {
        let m = logs(&[0.31, 0.2, 0.17, 0.12, 0.1, 0.06, 0.03, 0.01]);
        let sel = select_prune_set(&m, 0.15);
        let mass = 1.0 - sel.alpha;
        let q: f64 = sel.losses.iter().sum();
        assert!((mass - q).abs() < 1e-12);
        assert!(q <= 0.15);
    }

    #[test]
    fn policy_validation() {
        assert!(PrunePolicy::Static { alpha: vec![0.0; 4] }.validate(4).is_ok());
        assert!(PrunePolicy::Static { alpha: vec![1.0; 4] }.validate(4).is_err());
        assert!(PrunePolicy::Static { alpha: vec![0.0; 3] }.validate(4).is_err());
        assert!(PrunePolicy::MaxRatio { beta: 1.0 }.validate(4).is_err());
        let budget = LlrBudget::from_levels(vec![1.0; 4], 1e-3);
        assert!(PrunePolicy::Dynamic { p_tol: 0.0, budget: budget.clone() }.validate(4).is_err());
        assert!(PrunePolicy::Dynamic { p_tol: 1e-3, budget }.validate(4).is_ok());
    }
}
