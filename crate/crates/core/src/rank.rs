//! Transport ranks, median sets, quantile sets, binning and trimming.
//!
//! The rank of a query object is the expit of its average integrated
//! quantile gap to the in-sample profiles. Large ranks mean central objects.

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::numeric::{self, ceil_count, expit};
use crate::onedim::{self, EmpiricalDistribution};
use crate::par;
use crate::profile::{ProfileMode, ProfileSet};

/// Ranks plus the derived median set and center-outward groups.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub ranks: Vec<f64>,
    pub median_indices: Vec<usize>,
    /// Group per object in `1..=k`; group 1 is the most central bin.
    pub group_labels: Vec<usize>,
    /// The `k − 1` rank quantiles separating the bins.
    pub thresholds: Vec<f64>,
}

impl RankReport {
    pub fn new(profiles: &ProfileSet, bins: usize) -> Result<Self> {
        let ranks = rank_all(profiles)?;
        let median_indices = transport_median(&ranks)?;
        let (group_labels, thresholds) = quantile_groups(&ranks, bins)?;
        Ok(Self {
            ranks,
            median_indices,
            group_labels,
            thresholds,
        })
    }
}

fn check_profiles(p: &ProfileSet) -> Result<()> {
    if p.is_empty() {
        return Err(Error::arg("transport rank against an empty profile set"));
    }
    if p.mode() != ProfileMode::WithSelf {
        return Err(Error::arg(
            "transport ranks use profiles that include the self-distance",
        ));
    }
    Ok(())
}

/// Transport rank of an arbitrary query object, given its profile against
/// the sample (e.g. its cross-distances to every sample object).
pub fn transport_rank(query: &EmpiricalDistribution, p: &ProfileSet) -> Result<f64> {
    check_profiles(p)?;
    let gap = numeric::sum(
        p.profiles()
            .iter()
            .map(|pi| onedim::quantile_gap_integral(pi, query)),
    );
    Ok(expit(gap / p.len() as f64))
}

/// Ranks of every in-sample object.
pub fn rank_all(p: &ProfileSet) -> Result<Vec<f64>> {
    check_profiles(p)?;
    par::try_map_indexed(p.len(), |j| transport_rank(p.get(j), p))
}

/// Closed form of [`rank_all`] through row means of `d`; a cross-check only.
pub fn ranks_from_row_means(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.n();
    let row_means: Vec<f64> = (0..n)
        .map(|i| numeric::sum(d.row(i).iter().copied()) / n as f64)
        .collect();
    let grand = numeric::sum(row_means.iter().copied()) / n as f64;
    row_means.iter().map(|r| expit(grand - r)).collect()
}

/// Every index attaining the maximal rank.
pub fn transport_median(ranks: &[f64]) -> Result<Vec<usize>> {
    let best = ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if ranks.is_empty() {
        return Err(Error::arg("median of an empty rank vector"));
    }
    Ok((0..ranks.len()).filter(|&i| ranks[i] == best).collect())
}

/// Empirical `p`-quantile of `sorted` (left-continuous inverse).
fn order_quantile(sorted: &[f64], p: f64) -> f64 {
    sorted[ceil_count(p, sorted.len()) - 1]
}

/// Center-outward bins: thresholds are the `j/k` rank quantiles, label 1 is
/// `(q_{(k−1)/k}, 1]` and label `k` is `[0, q_{1/k}]`.
pub fn quantile_groups(ranks: &[f64], k: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    if k < 1 {
        return Err(Error::arg("need at least one bin"));
    }
    if ranks.is_empty() {
        return Err(Error::arg("no ranks to bin"));
    }
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let thresholds: Vec<f64> = (1..k)
        .map(|j| order_quantile(&sorted, j as f64 / k as f64))
        .collect();
    let labels = ranks
        .iter()
        .map(|&r| k - thresholds.iter().filter(|&&q| r > q).count())
        .collect();
    Ok((labels, thresholds))
}

/// Smallest superlevel set `{i : rank_i >= α}` holding at least a `ζ`
/// fraction of the sample. Returns `α` and the ascending index set.
pub fn transport_quantile_set(ranks: &[f64], zeta: f64) -> Result<(f64, Vec<usize>)> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::arg(format!("zeta {zeta} outside (0, 1)")));
    }
    if ranks.is_empty() {
        return Err(Error::arg("no ranks"));
    }
    let mut desc = ranks.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let alpha = desc[ceil_count(zeta, ranks.len()) - 1];
    Ok((alpha, trim(ranks, alpha)))
}

/// Indices with rank at least `alpha0`.
pub fn trim(ranks: &[f64], alpha0: f64) -> Vec<usize> {
    (0..ranks.len()).filter(|&i| ranks[i] >= alpha0).collect()
}

/// Hausdorff distance between two index sets under `d`.
pub fn hausdorff_distance(a: &[usize], b: &[usize], d: &DistanceMatrix) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("Hausdorff distance needs nonempty sets"));
    }
    if let Some(&bad) = a.iter().chain(b).find(|&&i| i >= d.n()) {
        return Err(Error::arg(format!("index {bad} out of range")));
    }
    let directed = |from: &[usize], to: &[usize]| {
        from.iter()
            .map(|&i| {
                to.iter()
                    .map(|&j| d.get(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}
