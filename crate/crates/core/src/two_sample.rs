//! Two-sample testing with distance profiles.
//!
//! For every object the in-sample profile (leave-one-out distances to its
//! own sample) is compared with its out-of-sample profile (distances to the
//! other sample) through the integrated squared CDF gap. The statistic is
//! calibrated by recomputing it on uniformly random relabelings of the
//! pooled sample.

use std::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::metric::{
    cross_distance_matrix, distance_matrix, DistanceMatrix, MetricSpec, ObjectSample,
};
use crate::numeric::{ceil_count, Sum};
use crate::onedim::{integral_weighted_sq_cdf_diff, EmpiricalDistribution, StepWeight};
use crate::par;
use crate::rng::substream;

/// Pooled distance matrix; indices `0..n` are the first sample and
/// `n..n+m` the second.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledDistances {
    n: usize,
    m: usize,
    d: DistanceMatrix,
}

impl PooledDistances {
    pub fn new(d: DistanceMatrix, n: usize) -> Result<Self> {
        let total = d.n();
        if n < 2 || total < n + 2 {
            return Err(Error::arg(format!(
                "both samples need at least two objects (n = {n}, m = {})",
                total.saturating_sub(n)
            )));
        }
        Ok(Self { n, m: total - n, d })
    }

    /// Measures all pairwise distances of the pooled sample `x ∪ y`.
    pub fn from_samples(spec: &MetricSpec, x: &ObjectSample, y: &ObjectSample) -> Result<Self> {
        let n = x.len();
        let pooled = x.concat(y)?;
        Self::new(distance_matrix(spec, &pooled)?, n)
    }

    /// Assembles the pooled matrix from within- and cross-sample blocks.
    pub fn from_blocks(spec: &MetricSpec, x: &ObjectSample, y: &ObjectSample) -> Result<Self> {
        let dx = distance_matrix(spec, x)?;
        let dy = distance_matrix(spec, y)?;
        let dxy = cross_distance_matrix(spec, x, y)?;
        let (n, m) = (x.len(), y.len());
        let total = n + m;
        let mut data = vec![0.0; total * total];
        for i in 0..total {
            for j in 0..total {
                data[i * total + j] = match (i < n, j < n) {
                    (true, true) => dx.get(i, j),
                    (false, false) => dy.get(i - n, j - n),
                    (true, false) => dxy.get(i, j - n),
                    (false, true) => dxy.get(j, i - n),
                };
            }
        }
        Self::new(DistanceMatrix::from_row_major(total, data)?, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &DistanceMatrix {
        &self.d
    }

    /// The pooled sample relabeled so that `perm[..n]` forms the first sample.
    pub fn permuted(&self, perm: &[usize]) -> PooledDistances {
        Self {
            n: self.n,
            m: self.m,
            d: self.d.gather(perm),
        }
    }

    fn prefactor(&self) -> f64 {
        (self.n * self.m) as f64 / (self.n + self.m) as f64
    }
}

/// Weight profile `w(u)`, shared by all objects or one per pooled object.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightProfile {
    Global(StepWeight),
    PerObject(Vec<StepWeight>),
}

impl WeightProfile {
    pub fn unit() -> Self {
        WeightProfile::Global(StepWeight::unit())
    }

    fn for_object(&self, i: usize) -> &StepWeight {
        match self {
            WeightProfile::Global(w) => w,
            WeightProfile::PerObject(ws) => &ws[i],
        }
    }

    fn check(&self, total: usize) -> Result<()> {
        match self {
            WeightProfile::PerObject(ws) if ws.len() != total => Err(Error::arg(format!(
                "{} weight profiles for {total} pooled objects",
                ws.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl Default for WeightProfile {
    fn default() -> Self {
        Self::unit()
    }
}

/// Plug-in estimate of the population discrepancy: the mean over first-sample
/// objects of `∫w(F̂^XX − F̂^YX)²` plus the mean over second-sample objects of
/// `∫w(F̂^XY − F̂^YY)²`.
pub fn dw_plugin(p: &PooledDistances, w: &WeightProfile) -> Result<f64> {
    w.check(p.n + p.m)?;
    let (n, total) = (p.n, p.n + p.m);
    let per_object = par::try_map_indexed(total, |i| {
        let row = p.d.row(i);
        let in_first = i < n;
        let (own, other): (Vec<f64>, Vec<f64>) = {
            let mut own = Vec::new();
            let mut other = Vec::new();
            for (j, &v) in row.iter().enumerate() {
                if j == i {
                    continue;
                }
                if (j < n) == in_first {
                    own.push(v);
                } else {
                    other.push(v);
                }
            }
            (own, other)
        };
        let own = EmpiricalDistribution::from_values(own)?;
        let other = EmpiricalDistribution::from_values(other)?;
        integral_weighted_sq_cdf_diff(&own, &other, w.for_object(i))
    })?;
    let mut tx = Sum::default();
    let mut ty = Sum::default();
    for (i, v) in per_object.into_iter().enumerate() {
        if i < n {
            tx.add(v);
        } else {
            ty.add(v);
        }
    }
    Ok(tx.value() / p.n as f64 + ty.value() / p.m as f64)
}

/// The distance-profile statistic `nm/(n+m) · (T^X + T^Y)`.
pub fn dp_statistic(p: &PooledDistances, w: &WeightProfile) -> Result<f64> {
    Ok(p.prefactor() * dw_plugin(p, w)?)
}

/// Pre-sorted pooled rows for fast re-evaluation of the statistic under
/// relabeling. Each evaluation is a single linear pass per object.
#[derive(Debug, Clone)]
pub struct DpEngine {
    n: usize,
    m: usize,
    rows: Vec<Vec<(f64, u32)>>,
    weights: WeightProfile,
}

impl DpEngine {
    pub fn new(p: &PooledDistances, w: &WeightProfile) -> Result<Self> {
        let total = p.n + p.m;
        w.check(total)?;
        let rows = par::map_indexed(total, |i| {
            let mut r: Vec<(f64, u32)> =
                p.d.row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(j, &v)| (v, j as u32))
                    .collect();
            r.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            r
        });
        Ok(Self {
            n: p.n,
            m: p.m,
            rows,
            weights: w.clone(),
        })
    }

    /// Statistic when `first[i]` marks the objects of the first sample.
    pub fn statistic(&self, first: &[bool]) -> f64 {
        let (n, m) = (self.n, self.m);
        let mut tx = Sum::default();
        let mut ty = Sum::default();
        for (i, row) in self.rows.iter().enumerate() {
            let mine = first[i];
            let (own_size, other_size) = if mine { (n - 1, m) } else { (m - 1, n) };
            let w = self.weights.for_object(i);
            let unit = w.as_constant() == Some(1.0);
            let (mut c_own, mut c_other) = (0usize, 0usize);
            let mut acc = Sum::default();
            let mut k = 0;
            let mut t = row[0].0;
            loop {
                while k < row.len() && row[k].0 <= t {
                    if first[row[k].1 as usize] == mine {
                        c_own += 1;
                    } else {
                        c_other += 1;
                    }
                    k += 1;
                }
                if k == row.len() {
                    break;
                }
                let next = row[k].0;
                let f_own = if c_own == 0 {
                    0.0
                } else {
                    c_own as f64 / own_size as f64
                };
                let f_other = if c_other == 0 {
                    0.0
                } else {
                    c_other as f64 / other_size as f64
                };
                let gap = f_own - f_other;
                if gap != 0.0 {
                    let width = if unit { next - t } else { w.integral(t, next) };
                    acc.add(gap * gap * width);
                }
                t = next;
            }
            if mine {
                tx.add(acc.value());
            } else {
                ty.add(acc.value());
            }
        }
        let factor = (n * m) as f64 / (n + m) as f64;
        factor * (tx.value() / n as f64 + ty.value() / m as f64)
    }

    /// Statistic for the split `perm[..n]` vs `perm[n..]`.
    pub fn statistic_for_permutation(&self, perm: &[usize]) -> f64 {
        self.statistic(&labels_from_permutation(perm, self.n))
    }

    pub fn observed(&self) -> f64 {
        let first: Vec<bool> = (0..self.n + self.m).map(|i| i < self.n).collect();
        self.statistic(&first)
    }
}

pub fn labels_from_permutation(perm: &[usize], n: usize) -> Vec<bool> {
    let mut first = vec![false; perm.len()];
    for &i in &perm[..n] {
        first[i] = true;
    }
    first
}

/// `K` uniform random permutations of `0..total`, replicate `k` drawn from
/// its own substream of `seed`.
pub fn random_permutation(total: usize, seed: u64, k: usize) -> Vec<usize> {
    let mut rng = substream(seed, &[k as u64]);
    let mut perm: Vec<usize> = (0..total).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Generic permutation harness: evaluates `stat` on `k` random relabelings.
pub fn permutation_replicates_with<F>(total: usize, k: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&[usize]) -> f64 + Sync + Send,
{
    par::map_indexed(k, |r| stat(&random_permutation(total, seed, r + 1)))
}

/// Replicates of the distance-profile statistic.
pub fn permutation_replicates(
    p: &PooledDistances,
    w: &WeightProfile,
    k: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if k < 1 {
        return Err(Error::arg("need at least one permutation"));
    }
    let engine = DpEngine::new(p, w)?;
    Ok(permutation_replicates_with(p.n + p.m, k, seed, |perm| {
        engine.statistic_for_permutation(perm)
    }))
}

/// `(1 + #{replicates >= statistic}) / (K + 1)`.
pub fn p_value(statistic: f64, replicates: &[f64]) -> f64 {
    let hits = replicates.iter().filter(|&&r| r >= statistic).count();
    (1 + hits) as f64 / (replicates.len() + 1) as f64
}

/// `inf{t : Γ̂(t) >= 1 − α}` over the replicate ECDF, i.e. the
/// `⌈(1 − α)K⌉`-th order statistic.
pub fn critical_value(replicates: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!("alpha {alpha} outside (0, 1)")));
    }
    if replicates.is_empty() {
        return Err(Error::arg("no replicates"));
    }
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[ceil_count(1.0 - alpha, sorted.len()) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestMethod {
    Dp,
    Energy,
    Hotelling,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::Dp => "dp",
            TestMethod::Energy => "energy",
            TestMethod::Hotelling => "hotelling",
        }
    }
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub method: TestMethod,
    pub statistic: f64,
    pub replicates: Vec<f64>,
    pub p_value: f64,
    pub q_alpha_hat: f64,
    pub alpha: f64,
    pub k: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
}

impl TestResult {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        method: TestMethod,
        statistic: f64,
        replicates: Vec<f64>,
        alpha: f64,
        seed: u64,
        n: usize,
        m: usize,
    ) -> Result<Self> {
        let q_alpha_hat = critical_value(&replicates, alpha)?;
        Ok(Self {
            method,
            statistic,
            p_value: p_value(statistic, &replicates),
            q_alpha_hat,
            alpha,
            k: replicates.len(),
            seed,
            n,
            m,
            replicates,
        })
    }

    pub fn rejects(&self) -> bool {
        self.p_value <= self.alpha
    }
}

/// Permutation test with the distance-profile statistic.
pub fn dp_test(
    p: &PooledDistances,
    w: &WeightProfile,
    k: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    if k < 1 {
        return Err(Error::arg("need at least one permutation"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::arg(format!("alpha {alpha} outside (0, 1)")));
    }
    let engine = DpEngine::new(p, w)?;
    let observed = engine.observed();
    let reps = permutation_replicates_with(p.n + p.m, k, seed, |perm| {
        engine.statistic_for_permutation(perm)
    });
    TestResult::assemble(TestMethod::Dp, observed, reps, alpha, seed, p.n, p.m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    fn line_pool(xs: &[f64], ys: &[f64]) -> PooledDistances {
        let to = |v: &[f64]| ObjectSample::vectors(v.iter().map(|&a| vec![a]).collect()).unwrap();
        PooledDistances::from_samples(&MetricSpec::euclidean(), &to(xs), &to(ys)).unwrap()
    }

    #[test]
    fn coincident_pool_is_zero() {
        let p = line_pool(&[1.0, 1.0, 1.0], &[1.0, 1.0]);
        let w = WeightProfile::unit();
        assert_eq!(dp_statistic(&p, &w).unwrap(), 0.0);
        assert_eq!(dw_plugin(&p, &w).unwrap(), 0.0);
        let reps = permutation_replicates(&p, &w, 20, 1).unwrap();
        assert!(reps.iter().all(|&r| r == 0.0));
        let t = dp_test(&p, &w, 20, 0.05, 1).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn two_point_gap() {
        let c = 1.75;
        let p = line_pool(&[0.0, 0.0], &[c, c]);
        let w = WeightProfile::unit();
        assert_eq!(dp_statistic(&p, &w).unwrap(), 2.0 * c);
        assert_eq!(dw_plugin(&p, &w).unwrap(), 2.0 * c);
        let swapped = line_pool(&[c, c], &[0.0, 0.0]);
        assert_eq!(dp_statistic(&swapped, &w).unwrap(), 2.0 * c);
    }

    #[test]
    fn swap_symmetry_unequal_sizes() {
        let xs = [0.0, 0.4, 1.3];
        let ys = [0.2, 2.0, 2.5, 3.1];
        let w = WeightProfile::unit();
        let a = dp_statistic(&line_pool(&xs, &ys), &w).unwrap();
        let b = dp_statistic(&line_pool(&ys, &xs), &w).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn engine_matches_reference() {
        let p = line_pool(&[0.0, 0.4, 1.3, 0.9, 0.9], &[0.2, 2.0, 2.5, 3.1]);
        for w in [
            WeightProfile::unit(),
            WeightProfile::Global(StepWeight::new(vec![0.5, 1.5], vec![2.0, 1.0, 0.25]).unwrap()),
        ] {
            let engine = DpEngine::new(&p, &w).unwrap();
            assert_eq!(engine.observed(), dp_statistic(&p, &w).unwrap());
            let perm = random_permutation(9, 3, 1);
            let reference = dp_statistic(&p.permuted(&perm), &w).unwrap();
            let fast = engine.statistic_for_permutation(&perm);
            assert!((reference - fast).abs() <= 1e-12 * reference.max(1.0));
        }
    }

    #[test]
    fn identity_replicate_equals_observed() {
        let p = line_pool(&[0.0, 0.4, 1.3], &[0.2, 2.0, 2.5]);
        let engine = DpEngine::new(&p, &WeightProfile::unit()).unwrap();
        let ident: Vec<usize> = (0..6).collect();
        assert_eq!(engine.statistic_for_permutation(&ident), engine.observed());
    }

    #[test]
    fn replicates_are_seed_deterministic() {
        let p = line_pool(&[0.0, 0.4, 1.3, 5.0], &[0.2, 2.0, 2.5]);
        let w = WeightProfile::unit();
        let a = permutation_replicates(&p, &w, 50, 9).unwrap();
        let b = permutation_replicates(&p, &w, 50, 9).unwrap();
        let c = permutation_replicates(&p, &w, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(p_value(10.0, &[1.0, 2.0, 3.0]), 0.25);
        assert_eq!(p_value(0.5, &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(p_value(2.5, &[1.0, 2.0, 3.0, 4.0]), 0.6);
    }

    #[test]
    fn critical_value_examples() {
        let reps: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(critical_value(&reps, 0.05).unwrap(), 95.0);
        assert_eq!(critical_value(&reps, 0.999_999).unwrap(), 1.0);
        assert_eq!(critical_value(&[3.0; 7], 0.1).unwrap(), 3.0);
        assert!(critical_value(&reps, 0.0).is_err());
    }

    #[test]
    fn small_samples_rejected() {
        let d = DistanceMatrix::zeros(3);
        assert!(PooledDistances::new(d.clone(), 1).is_err());
        assert!(PooledDistances::new(d, 2).is_err());
    }

    #[test]
    fn block_assembly_matches_pooled() {
        let to =
            |v: &[f64]| ObjectSample::vectors(v.iter().map(|&a| vec![a, -a]).collect()).unwrap();
        let (x, y) = (to(&[0.0, 1.0, 4.0]), to(&[2.0, 2.5]));
        let spec = MetricSpec::euclidean();
        assert_eq!(
            PooledDistances::from_blocks(&spec, &x, &y).unwrap(),
            PooledDistances::from_samples(&spec, &x, &y).unwrap()
        );
    }

    #[test]
    fn scaling_distances_scales_discrepancy() {
        let p = line_pool(&[0.0, 0.4, 1.3], &[0.2, 2.0, 2.5, 3.1]);
        let w = WeightProfile::unit();
        let base = dw_plugin(&p, &w).unwrap();
        let scaled = PooledDistances::new(p.matrix().scaled(3.0).unwrap(), 3).unwrap();
        assert!((dw_plugin(&scaled, &w).unwrap() - 3.0 * base).abs() < 1e-13);
    }
}
