//! Peak-ratio scoring and the paired Wilcoxon signed-rank test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::objective::{count_peaks_found, PeakRegistry, Solution};

/// `sum(found) / (peaks * runs)`.
pub fn peak_ratio(found_per_run: &[usize], peaks: usize) -> Result<f64> {
    if found_per_run.is_empty() {
        return Err(Error::config("peak ratio needs at least one run"));
    }
    if peaks == 0 {
        return Err(Error::config("peak ratio needs a positive number of peaks"));
    }
    let total: usize = found_per_run.iter().sum();
    Ok(total as f64 / (peaks * found_per_run.len()) as f64)
}

/// Peaks found at every accuracy level and their mean ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub found: Vec<usize>,
    pub peak_ratio: f64,
}

pub fn score_run(heads: &[Solution], registry: &PeakRegistry, accuracy_levels: &[f64]) -> RunScore {
    let found: Vec<usize> = accuracy_levels
        .iter()
        .map(|&acc| count_peaks_found(heads, registry, acc))
        .collect();
    let peak_ratio = if found.is_empty() {
        0.0
    } else {
        found.iter().map(|&f| f as f64 / registry.len() as f64).sum::<f64>() / found.len() as f64
    };
    RunScore { found, peak_ratio }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Better,
    Worse,
    Similar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonOutcome {
    pub w_plus: f64,
    pub w_minus: f64,
    /// Signed-rank sum `w_plus - w_minus`.
    pub w: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub p_value: f64,
    /// Verdict for `a` relative to `b`.
    pub verdict: Verdict,
}

/// Pairs up to this size use the exact null distribution.
const EXACT_LIMIT: usize = 25;

/// Two-sided paired signed-rank test of `a` against `b`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alpha: f64) -> Result<WilcoxonOutcome> {
    if a.len() != b.len() {
        return Err(Error::config("signed-rank test needs paired samples of equal length"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config("significance level must lie in (0, 1)"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonOutcome {
            w_plus: 0.0,
            w_minus: 0.0,
            w: 0.0,
            n: 0,
            p_value: 1.0,
            verdict: Verdict::Similar,
        });
    }

    let ranks = mid_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_minus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d < 0.0)
        .map(|(_, r)| r)
        .sum();

    let p_value = if n <= EXACT_LIMIT {
        exact_p_value(&ranks, w_plus.min(w_minus))
    } else {
        normal_p_value(&ranks, w_plus)
    };
    let verdict = if p_value >= alpha {
        Verdict::Similar
    } else {
        let m = median(&diffs);
        let direction = if m != 0.0 { m } else { w_plus - w_minus };
        if direction > 0.0 {
            Verdict::Better
        } else {
            Verdict::Worse
        }
    };
    Ok(WilcoxonOutcome {
        w_plus,
        w_minus,
        w: w_plus - w_minus,
        n,
        p_value,
        verdict,
    })
}

/// Ranks starting at 1 with ties sharing their mean rank.
fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end) as f64 / 2.0 + 1.0;
        for &i in &order[start..=end] {
            ranks[i] = rank;
        }
        start = end + 1;
    }
    ranks
}

/// `2 P(W+ <= t)` under the permutation null, counting over doubled
/// (hence integral) mid-ranks.
fn exact_p_value(ranks: &[f64], t: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut ways = vec![0.0f64; total + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            ways[s] += ways[s - r];
        }
    }
    let limit = (t * 2.0).round() as usize;
    let below: f64 = ways[..=limit.min(total)].iter().sum();
    let all = 2f64.powi(ranks.len() as i32);
    (2.0 * below / all).min(1.0)
}

fn normal_p_value(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Sample mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
