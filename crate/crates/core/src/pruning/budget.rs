//! Per-level LLR budgets and the descendant metric upper bound they imply.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::construction::{ReliabilityKind, ReliabilityProfile};
use crate::error::{Error, Result};
use crate::metric::log_sigmoid;

/// LLR magnitudes `l_i` with a prefix table of `ln(e^l / (1 + e^l))`.
///
/// `prefix[i]` sums the first `i` factors, so the bound between levels
/// `t < j` is `prefix[j] - prefix[t]` in O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBudget {
    levels: Vec<f64>,
    p_llr: f64,
    prefix: Vec<f64>,
}

impl LlrBudget {
    pub fn from_levels(levels: Vec<f64>, p_llr: f64) -> Self {
        let mut prefix = Vec::with_capacity(levels.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &l in &levels {
            acc += log_sigmoid(l);
            prefix.push(acc);
        }
        LlrBudget { levels, p_llr, prefix }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn p_llr(&self) -> f64 {
        self.p_llr
    }

    /// Sum of the log factors over levels `1..=level`.
    pub fn log_factor_prefix(&self, level: usize) -> f64 {
        self.prefix[level]
    }

    /// Upper bound on the log metric at `to` of any descendant of a path
    /// whose log metric at `from` is `log_metric` (`from < to`, 1-based).
    pub fn metric_upper_bound(&self, from: usize, to: usize, log_metric: f64) -> Result<f64> {
        if !(from < to && to <= self.levels.len()) {
            return Err(Error::config(format!(
                "bound needs from < to <= {}, got {from}, {to}",
                self.levels.len()
            )));
        }
        Ok(log_metric + self.prefix[to] - self.prefix[from])
    }

    pub fn to_file(&self, code_hash: &str) -> LlrBudgetFile {
        LlrBudgetFile {
            code_hash: code_hash.to_string(),
            p_llr: self.p_llr,
            l: self.levels.clone(),
        }
    }
}

/// Serialized [`LlrBudget`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrBudgetFile {
    pub code_hash: String,
    pub p_llr: f64,
    pub l: Vec<f64>,
}

impl LlrBudgetFile {
    pub fn into_budget(self) -> LlrBudget {
        LlrBudget::from_levels(self.l, self.p_llr)
    }
}

/// Budgets `l_i = m_i + z sqrt(2 m_i)` with `z` the upper `p_llr / 2`
/// quantile of the standard normal, treating the decision LLR of bit `i`
/// as `Normal(m_i, 2 m_i)`. Both `Pr{|LLR| > l}` and `Pr{LLR > l}` stay
/// below `p_llr` under that model.
pub fn llr_budget(profile: &ReliabilityProfile, p_llr: f64) -> Result<LlrBudget> {
    if profile.kind != ReliabilityKind::GaussianApproxMeanLlr {
        return Err(Error::UnsupportedConstruction(profile.kind.label()));
    }
    if !(p_llr > 0.0 && p_llr < 1.0) {
        return Err(Error::config(format!("p_llr {p_llr} outside (0,1)")));
    }
    let z = -Normal::standard().inverse_cdf(p_llr / 2.0);
    let levels = profile
        .values
        .iter()
        .map(|&m| {
            let m = m.max(0.0);
            m + z * (2.0 * m).sqrt()
        })
        .collect();
    Ok(LlrBudget::from_levels(levels, p_llr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{evaluate_reliability_bec, evaluate_reliability_ga};

    /// Upper normal quantile by bisection on the complementary error function.
    fn upper_quantile(p: f64) -> f64 {
        let tail = |z: f64| 0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2);
        let (mut lo, mut hi) = (0.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if tail(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn profile(values: Vec<f64>) -> ReliabilityProfile {
        ReliabilityProfile {
            n: values.len().trailing_zeros(),
            values,
            kind: ReliabilityKind::GaussianApproxMeanLlr,
            design_param: 0.0,
        }
    }

    #[test]
    fn degenerate_channel_has_zero_budget() {
        let b = llr_budget(&profile(vec![0.0, 4.0]), 1e-3).unwrap();
        assert_eq!(b.levels()[0], 0.0);
    }

    #[test]
    fn gaussian_quantile_budget() {
        let p_llr = 1e-9 / 1024.0;
        let b = llr_budget(&profile(vec![4.0, 9.0]), p_llr).unwrap();
        let z = upper_quantile(p_llr / 2.0);
        assert!((z - 7.133770).abs() < 1e-5, "z = {z}");
        let expect = 4.0 + z * 8f64.sqrt();
        assert!((b.levels()[0] - expect).abs() < 1e-6);
        assert!((b.levels()[0] - 24.177349).abs() < 1e-5);
        assert!(b.levels()[1] > b.levels()[0]);
    }

    #[test]
    fn budget_monotone_in_mean() {
        let p = evaluate_reliability_ga(8, 0.5, 1.5).unwrap();
        let b = llr_budget(&p, 1e-6).unwrap();
        let mut pairs: Vec<(f64, f64)> = p.values.iter().copied().zip(b.levels().iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(b.levels().iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn bec_profile_rejected() {
        let p = evaluate_reliability_bec(3, 0.5).unwrap();
        assert!(matches!(llr_budget(&p, 1e-3), Err(Error::UnsupportedConstruction(_))));
        assert!(llr_budget(&profile(vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let b = LlrBudget::from_levels(vec![5.0, 2.0, 1.0], 1e-3);
        let ub = b.metric_upper_bound(1, 2, 0.9f64.ln()).unwrap().exp();
        assert!((ub - 0.9 * 2f64.exp() / (1.0 + 2f64.exp())).abs() < 1e-12);
        assert!((ub - 0.79272).abs() < 1e-5);
        assert!(b.metric_upper_bound(2, 2, 0.0).is_err());
        assert!(b.metric_upper_bound(1, 4, 0.0).is_err());

        let reliable = LlrBudget::from_levels(vec![800.0; 8], 1e-3);
        assert_eq!(reliable.metric_upper_bound(0, 8, -1.5).unwrap(), -1.5);
    }

    #[test]
    fn file_round_trip() {
        let b = LlrBudget::from_levels(vec![0.5, 3.0], 1e-4);
        let file = b.to_file("abc");
        let text = serde_json::to_string(&file).unwrap();
        let back: LlrBudgetFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_budget(), b);
    }
}
