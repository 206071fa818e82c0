//! Spearman rank correlation and the Wilcoxon signed-rank test.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatMethod {
    SpearmanExactPermutation,
    SpearmanTApproximation,
    WilcoxonExact,
    WilcoxonNormalApproximation,
    /// All paired differences were zero.
    WilcoxonDegenerate,
    /// A vector had zero variance; ρ is undefined.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatResult {
    /// ρ for Spearman, `min(W+, W-)` for Wilcoxon; `None` when undefined.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    /// Observations used (non-zero pairs for Wilcoxon).
    pub n: usize,
    pub method: StatMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<(), StatError> {
    if x.len() != y.len() {
        return Err(StatError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min {
        return Err(StatError::TooFew {
            needed: min,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatError::NonFinite);
    }
    Ok(())
}

pub const SPEARMAN_EXACT_BELOW: usize = 10;

/// Two-sided test; exact permutation p below
/// [`SPEARMAN_EXACT_BELOW`] observations, t approximation otherwise.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<StatResult, StatError> {
    check_pair(x, y, 3)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len();
    let Some(rho) = pearson(&rx, &ry) else {
        return Ok(StatResult {
            statistic: None,
            p_value: None,
            n,
            method: StatMethod::Undefined,
        });
    };
    if n < SPEARMAN_EXACT_BELOW {
        let p = permutation_p(&rx, &ry, rho);
        return Ok(StatResult {
            statistic: Some(rho),
            p_value: Some(p),
            n,
            method: StatMethod::SpearmanExactPermutation,
        });
    }
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid degrees of freedom");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(StatResult {
        statistic: Some(rho),
        p_value: Some(p),
        n,
        method: StatMethod::SpearmanTApproximation,
    })
}

/// Share of permutations of `ry` whose |ρ| reaches the observed |ρ|.
fn permutation_p(rx: &[f64], ry: &[f64], rho: f64) -> f64 {
    let n = ry.len();
    let mut perm: Vec<f64> = ry.to_vec();
    let target = rho.abs() - 1e-12;
    let mut hits = 0u64;
    let mut total = 0u64;
    let mut c = vec![0usize; n];
    let mut visit = |p: &[f64]| {
        total += 1;
        if pearson(rx, p).is_some_and(|r| r.abs() >= target) {
            hits += 1;
        }
    };
    visit(&perm);
    // Heap's algorithm.
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WilcoxonMethod {
    /// Exact up to [`WILCOXON_EXACT_MAX`] non-zero pairs, normal beyond.
    #[default]
    Auto,
    Exact,
    Normal,
}

pub const WILCOXON_EXACT_MAX: usize = 12;

pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<StatResult, StatError> {
    wilcoxon_signed_rank_with(x, y, WilcoxonMethod::Auto)
}

/// Two-sided signed-rank test; zero differences are dropped.
pub fn wilcoxon_signed_rank_with(x: &[f64], y: &[f64], method: WilcoxonMethod) -> Result<StatResult, StatError> {
    check_pair(x, y, 1)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(StatResult {
            statistic: Some(0.0),
            p_value: Some(1.0),
            n: 0,
            method: StatMethod::WilcoxonDegenerate,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let exact = match method {
        WilcoxonMethod::Auto => n <= WILCOXON_EXACT_MAX,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    if exact {
        return Ok(StatResult {
            statistic: Some(statistic),
            p_value: Some(exact_signed_rank_p(&ranks, w_plus)),
            n,
            method: StatMethod::WilcoxonExact,
        });
    }

    let mean = total / 2.0;
    let mut tie_term = 0.0;
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
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
    let nf = n as f64;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0)
    };
    Ok(StatResult {
        statistic: Some(statistic),
        p_value: Some(p),
        n,
        method: StatMethod::WilcoxonNormalApproximation,
    })
}

/// Exact null distribution of W+ over all sign assignments, by dynamic
/// programming over doubled (integer) ranks.
fn exact_signed_rank_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let total: f64 = counts.iter().sum();
    let w = (w_plus * 2.0).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / total;
    let upper: f64 = counts[w..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations() {
        let r = spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(r.statistic, Some(1.0));
        let r = spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.statistic, Some(-1.0));
        // Only 2 of 6 permutations reach |ρ| = 1.
        assert!((r.p_value.unwrap() - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn undefined_on_constant_input() {
        let r = spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.method, StatMethod::Undefined);
        assert!(r.statistic.is_none());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn degenerate_wilcoxon() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.p_value, Some(1.0));
        assert_eq!(r.method, StatMethod::WilcoxonDegenerate);
    }

    #[test]
    fn small_exact_wilcoxon() {
        // All three differences positive: W+ = 6, P = 2 * 1/8.
        let r = wilcoxon_signed_rank(&[2.0, 3.0, 4.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!((r.p_value.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(r.statistic, Some(0.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            spearman(&[1.0], &[1.0, 2.0]),
            Err(StatError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0]),
            Err(StatError::TooFew { .. })
        ));
    }
}
