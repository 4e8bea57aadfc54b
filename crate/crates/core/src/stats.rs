//! Descriptive summaries and the rank-based tests used to compare ranking
//! methods: Friedman with the Nemenyi critical difference, and
//! Kruskal–Wallis with pairwise Wilcoxon rank-sum follow-ups.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Mean, sample standard deviation and five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    /// `None` for an empty sample. The standard deviation uses the `n - 1`
    /// denominator and is 0 for a single observation.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary {
            count: n,
            mean,
            std,
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }
}

/// Linear interpolation between order statistics at position `q * (n - 1)`.
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn median(values: &[f64]) -> Option<f64> {
    Summary::of(values).map(|s| s.median)
}

/// Result of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    #[serde(default)]
    pub extras: BTreeMap<String, serde_json::Value>,
}

/// Upper tail of the chi-square distribution, via the regularized upper
/// incomplete gamma function.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Ranks 1..n with ties sharing their mean rank. Returns the ranks (in
/// input order) and the tie groups' sizes.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share ranks i+1..=j
        let mean_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = mean_rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Direction used when ranking methods within a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankOrder {
    /// Largest value gets rank 1.
    #[default]
    HigherIsBetter,
    LowerIsBetter,
}

/// Friedman test over `rows` datasets × `k` methods.
///
/// `extras["average_ranks"]` holds the mean rank of every method.
pub fn friedman(rows: &[Vec<f64>], order: RankOrder) -> Result<TestResult> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::usage("friedman needs at least 2 rows"));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(Error::usage("friedman needs at least 2 methods"));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::usage("friedman rows must all have the same length"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::usage("friedman cells must be finite"));
    }
    let mut rank_sums = vec![0.0; k];
    for row in rows {
        let keyed: Vec<f64> = match order {
            RankOrder::HigherIsBetter => row.iter().map(|v| -v).collect(),
            RankOrder::LowerIsBetter => row.clone(),
        };
        let (ranks, _) = average_ranks(&keyed);
        for (sum, r) in rank_sums.iter_mut().zip(ranks) {
            *sum += r;
        }
    }
    let avg: Vec<f64> = rank_sums.iter().map(|s| s / n as f64).collect();
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = avg.iter().map(|r| r * r).sum();
    let stat = (12.0 * nf / (kf * (kf + 1.0))) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    // rounding can leave a tiny negative value for constant rows
    let stat = if stat.abs() < 1e-12 { 0.0 } else { stat };
    let df = k - 1;
    let mut extras = BTreeMap::new();
    extras.insert("average_ranks".into(), serde_json::json!(avg));
    extras.insert("n".into(), serde_json::json!(n));
    Ok(TestResult {
        test: "friedman".into(),
        statistic: stat,
        df,
        p_value: chi_square_sf(stat, df),
        extras,
    })
}

/// Studentized-range based critical values for the Nemenyi test, divided
/// by √2, for k = 2..=10 methods.
const NEMENYI_Q_05: [f64; 9] = [
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164,
];
const NEMENYI_Q_01: [f64; 9] = [
    2.576, 2.913, 3.113, 3.255, 3.364, 3.452, 3.526, 3.590, 3.646,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha {
    P05,
    P01,
}

impl Alpha {
    pub fn from_f64(alpha: f64) -> Result<Alpha> {
        if (alpha - 0.05).abs() < 1e-12 {
            Ok(Alpha::P05)
        } else if (alpha - 0.01).abs() < 1e-12 {
            Ok(Alpha::P01)
        } else {
            Err(Error::usage(format!(
                "unsupported alpha {alpha}; use 0.05 or 0.01"
            )))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Alpha::P05 => 0.05,
            Alpha::P01 => 0.01,
        }
    }
}

pub fn nemenyi_q(k: usize, alpha: Alpha) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(Error::usage(format!(
            "nemenyi supports 2..=10 methods, got {k}"
        )));
    }
    Ok(match alpha {
        Alpha::P05 => NEMENYI_Q_05[k - 2],
        Alpha::P01 => NEMENYI_Q_01[k - 2],
    })
}

/// Critical difference between average ranks of `k` methods over `n`
/// datasets.
pub fn nemenyi_cd(k: usize, n: usize, alpha: Alpha) -> Result<f64> {
    if n == 0 {
        return Err(Error::usage("nemenyi needs at least one dataset"));
    }
    let q = nemenyi_q(k, alpha)?;
    Ok(q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt())
}

/// Pairwise average-rank differences and their significance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemenyiComparison {
    pub i: usize,
    pub j: usize,
    pub difference: f64,
    pub significant_05: bool,
    pub significant_01: bool,
}

pub fn nemenyi_pairs(average_ranks: &[f64], n: usize) -> Result<Vec<NemenyiComparison>> {
    let k = average_ranks.len();
    let cd05 = nemenyi_cd(k, n, Alpha::P05)?;
    let cd01 = nemenyi_cd(k, n, Alpha::P01)?;
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let difference = (average_ranks[i] - average_ranks[j]).abs();
            out.push(NemenyiComparison {
                i,
                j,
                difference,
                significant_05: difference >= cd05,
                significant_01: difference >= cd01,
            });
        }
    }
    Ok(out)
}

const SMALL_GROUP: usize = 4;

/// Kruskal–Wallis H test with tie correction.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::usage("kruskal-wallis needs at least 2 groups"));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::usage("kruskal-wallis groups must be non-empty"));
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len();
    if n < 3 {
        return Err(Error::usage("kruskal-wallis needs at least 3 observations"));
    }
    if groups.iter().any(|g| g.len() < SMALL_GROUP) {
        log::warn!(
            "kruskal-wallis: group smaller than {SMALL_GROUP}; chi-square approximation is rough"
        );
    }
    let (ranks, ties) = average_ranks(&pooled);
    let nf = n as f64;
    let centre = (nf + 1.0) / 2.0;
    let mut offset = 0;
    let mut acc = 0.0;
    let mut mean_ranks = Vec::with_capacity(k);
    for g in groups {
        let r = &ranks[offset..offset + g.len()];
        let mean = r.iter().sum::<f64>() / g.len() as f64;
        acc += g.len() as f64 * (mean - centre).powi(2);
        mean_ranks.push(mean);
        offset += g.len();
    }
    let h = 12.0 / (nf * (nf + 1.0)) * acc;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let correction = 1.0 - tie_term / (nf.powi(3) - nf);
    let h = if correction > 0.0 {
        h / correction
    } else {
        0.0
    };
    let df = k - 1;
    let mut extras = BTreeMap::new();
    extras.insert("mean_ranks".into(), serde_json::json!(mean_ranks));
    extras.insert("tie_correction".into(), serde_json::json!(correction));
    Ok(TestResult {
        test: "kruskal_wallis".into(),
        statistic: h,
        df,
        p_value: chi_square_sf(h, df),
        extras,
    })
}

/// Wilcoxon rank-sum test of two independent samples. The statistic is the
/// rank sum of `a` in the joint ranking; the p-value is two-sided from the
/// normal approximation with tie-corrected variance and no continuity
/// correction.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::usage(
            "wilcoxon rank-sum needs two non-empty samples",
        ));
    }
    if a.len() < SMALL_GROUP || b.len() < SMALL_GROUP {
        log::warn!("wilcoxon: sample smaller than {SMALL_GROUP}; normal approximation is rough");
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = average_ranks(&pooled);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let w: f64 = ranks[..a.len()].iter().sum();
    let mu = n1 * (n + 1.0) / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)).max(1.0));
    let z = if var > 0.0 {
        (w - mu) / var.sqrt()
    } else {
        0.0
    };
    let mut extras = BTreeMap::new();
    extras.insert("w".into(), serde_json::json!(w));
    extras.insert("u".into(), serde_json::json!(w - n1 * (n1 + 1.0) / 2.0));
    extras.insert("mean_w".into(), serde_json::json!(mu));
    extras.insert("z".into(), serde_json::json!(z));
    Ok(TestResult {
        test: "wilcoxon_rank_sum".into(),
        statistic: w,
        df: 1,
        p_value: normal_two_sided(z),
        extras,
    })
}
