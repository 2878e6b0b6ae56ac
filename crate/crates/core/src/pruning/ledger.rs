//! Bookkeeping of pruned paths for the dynamic policy.
//!
//! Each deletion leaves a [`PrunedRecord`] `(t, p, q)`: the level it was
//! pruned at, its log metric then, and its deletion loss. The best any
//! descendant could score at a later level `i` is
//! `Z(i) = p + B(i) - B(t)` where `B` is the budget prefix table.
//! Records whose descendants can no longer reach the list are retired.

use crate::pruning::LlrBudget;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrunedRecord {
    /// Bits decided when the path was pruned (1-based level).
    pub level: usize,
    /// Absolute log metric at pruning time.
    pub log_metric: f64,
    /// Estimated loss `P_j / sum_k P_k` at pruning time.
    pub loss: f64,
}

impl PrunedRecord {
    pub fn new(level: usize, log_metric: f64, loss: f64) -> Self {
        PrunedRecord {
            level,
            log_metric,
            loss,
        }
    }

    /// Log upper bound on the metric of any descendant at `level`.
    pub fn descendant_bound(&self, level: usize, budget: &LlrBudget) -> f64 {
        debug_assert!(level >= self.level, "bound queried before pruning level");
        self.log_metric + budget.log_factor_prefix(level) - budget.log_factor_prefix(self.level)
    }
}

/// Active records, ordered by loss (largest first, older first on ties),
/// plus the running accumulated-loss bound.
#[derive(Debug, Clone, Default)]
pub struct RecordLedger {
    records: Vec<PrunedRecord>,
    accumulated: f64,
    retired: u64,
}

impl RecordLedger {
    pub fn records(&self) -> &[PrunedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Accumulated loss bound after the last update; never decreases.
    pub fn accumulated_loss(&self) -> f64 {
        self.accumulated
    }

    pub(crate) fn raise_accumulated_loss(&mut self, estimate: f64) {
        self.accumulated = self.accumulated.max(estimate);
    }

    /// Number of records inactivated so far.
    pub fn retired(&self) -> u64 {
        self.retired
    }

    /// Sum of the `list_size` largest losses among the active records and
    /// `extra`: the loss bound if every one of them could re-enter the list.
    pub fn worst_case_loss(&self, extra: &[f64], list_size: usize) -> f64 {
        let mut extra: Vec<f64> = extra.to_vec();
        extra.sort_by(|a, b| b.total_cmp(a));
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        for _ in 0..list_size {
            let from_records = self.records.get(i).map(|r| r.loss);
            let from_extra = extra.get(j).copied();
            match (from_records, from_extra) {
                (Some(a), Some(b)) if a >= b => {
                    sum += a;
                    i += 1;
                }
                (_, Some(b)) => {
                    sum += b;
                    j += 1;
                }
                (Some(a), None) => {
                    sum += a;
                    i += 1;
                }
                (None, None) => break,
            }
        }
        sum
    }

    fn merge(&mut self, mut incoming: Vec<PrunedRecord>) {
        if incoming.is_empty() {
            return;
        }
        incoming.sort_by(|a, b| b.loss.total_cmp(&a.loss));
        let old = std::mem::take(&mut self.records);
        let mut merged = Vec::with_capacity(old.len() + incoming.len());
        let (mut a, mut b) = (old.into_iter().peekable(), incoming.into_iter().peekable());
        loop {
            let take_old = match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => x.loss >= y.loss,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            merged.push(if take_old { a.next() } else { b.next() }.expect("peeked"));
        }
        self.records = merged;
    }
}

/// Bound on the frame-error loss caused by pruning through `level`.
///
/// Survivors at least as strong as every record's descendant bound keep
/// their list slots; the remaining `list_size - |strong|` slots are charged
/// with the largest record losses.
pub fn estimate_accumulated_loss(
    ledger: &RecordLedger,
    level: usize,
    survivors: &[f64],
    list_size: usize,
    budget: &LlrBudget,
) -> f64 {
    if ledger.is_empty() {
        return 0.0;
    }
    let max_bound = ledger
        .records
        .iter()
        .map(|r| r.descendant_bound(level, budget))
        .fold(f64::NEG_INFINITY, f64::max);
    let strong = survivors.iter().filter(|&&m| m >= max_bound).count();
    let slots = list_size.saturating_sub(strong);
    ledger.records.iter().take(slots).map(|r| r.loss).sum()
}

/// Adds `new_records` pruned at `level` and retires records whose
/// descendant bound falls below the weakest bound among the `list_size`
/// largest-loss records.
pub fn update_ledger(
    ledger: &mut RecordLedger,
    new_records: Vec<PrunedRecord>,
    level: usize,
    list_size: usize,
    budget: &LlrBudget,
) {
    ledger.merge(new_records);
    if ledger.records.len() <= list_size {
        return;
    }
    let floor = ledger.records[..list_size]
        .iter()
        .map(|r| r.descendant_bound(level, budget))
        .fold(f64::INFINITY, f64::min);
    let before = ledger.records.len();
    ledger.records.retain(|r| r.descendant_bound(level, budget) >= floor);
    ledger.retired += (before - ledger.records.len()) as u64;
}
