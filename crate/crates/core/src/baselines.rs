//! Baseline two-sample tests sharing the permutation harness: the energy
//! test on distances and Hotelling's T² on raw vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::numeric::Sum;
use crate::two_sample::{
    labels_from_permutation, permutation_replicates_with, PooledDistances, TestMethod, TestResult,
};

/// Ridge added to the pooled covariance before inversion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Ridge {
    /// `1e-8 · trace(S) / p`.
    #[default]
    Default,
    Value(f64),
}

/// Energy statistic for an arbitrary labeling of the pooled matrix.
pub fn energy_statistic_labeled(d: &DistanceMatrix, first: &[bool]) -> f64 {
    let total = d.n();
    let n = first.iter().filter(|&&f| f).count();
    let m = total - n;
    let mut xy = Sum::default();
    let mut xx = Sum::default();
    let mut yy = Sum::default();
    for i in 0..total {
        let row = d.row(i);
        for j in (i + 1)..total {
            match (first[i], first[j]) {
                (true, true) => xx.add(row[j]),
                (false, false) => yy.add(row[j]),
                _ => xy.add(row[j]),
            }
        }
    }
    let (nf, mf) = (n as f64, m as f64);
    // within-sample sums cover each unordered pair twice among n² ordered pairs
    let between = 2.0 * xy.value() / (nf * mf);
    let within_x = 2.0 * xx.value() / (nf * nf);
    let within_y = 2.0 * yy.value() / (mf * mf);
    nf * mf / (nf + mf) * (between - within_x - within_y)
}

/// `nm/(n+m) · [2·mean d(x,y) − mean d(x,x') − mean d(y,y')]`.
pub fn energy_statistic(p: &PooledDistances) -> f64 {
    let first: Vec<bool> = (0..p.n() + p.m()).map(|i| i < p.n()).collect();
    energy_statistic_labeled(p.matrix(), &first)
}

pub fn energy_test(p: &PooledDistances, k: usize, alpha: f64, seed: u64) -> Result<TestResult> {
    if k < 1 {
        return Err(Error::arg("need at least one permutation"));
    }
    let n = p.n();
    let observed = energy_statistic(p);
    let reps = permutation_replicates_with(n + p.m(), k, seed, |perm| {
        energy_statistic_labeled(p.matrix(), &labels_from_permutation(perm, n))
    });
    TestResult::assemble(TestMethod::Energy, observed, reps, alpha, seed, n, p.m())
}

/// Pooled raw vectors for Hotelling's statistic; rows `0..n` are the first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledVectors {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl PooledVectors {
    pub fn new(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<Self> {
        let (n, m) = (x.len(), y.len());
        if n < 1 || m < 1 || n + m < 3 {
            return Err(Error::arg(format!(
                "Hotelling needs n + m − 2 ≥ 1 with both samples nonempty (n = {n}, m = {m})"
            )));
        }
        let p = x[0].len();
        if p == 0 {
            return Err(Error::arg("zero-dimensional vectors"));
        }
        let mut rows = Vec::with_capacity(n + m);
        for (i, r) in x.iter().chain(y).enumerate() {
            if r.len() != p {
                return Err(Error::arg(format!(
                    "vector {i} has dimension {}, expected {p}",
                    r.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("vector {i}")));
            }
            rows.push(r.clone());
        }
        Ok(Self { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len() - self.n
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }
}

fn mean_of<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, p: usize) -> DVector<f64> {
    let mut acc = DVector::zeros(p);
    let mut count = 0usize;
    for r in rows {
        acc += DVector::from_column_slice(r);
        count += 1;
    }
    acc / count as f64
}

/// T² for the split `first` / not `first`.
pub fn hotelling_statistic_labeled(v: &PooledVectors, first: &[bool], ridge: Ridge) -> Result<f64> {
    let p = v.dim();
    let pick = |want: bool| {
        v.rows
            .iter()
            .zip(first)
            .filter(move |&(_, &f)| f == want)
            .map(|(r, _)| r)
    };
    let n = first.iter().filter(|&&f| f).count();
    let m = first.len() - n;
    let mx = mean_of(pick(true), p);
    let my = mean_of(pick(false), p);
    let mut s = DMatrix::<f64>::zeros(p, p);
    for (r, &f) in v.rows.iter().zip(first) {
        let centered = DVector::from_column_slice(r) - if f { &mx } else { &my };
        s.ger(1.0, &centered, &centered, 1.0);
    }
    s /= (n + m - 2) as f64;
    let eps = match ridge {
        Ridge::Default => 1e-8 * s.trace() / p as f64,
        Ridge::Value(e) if e >= 0.0 && e.is_finite() => e,
        Ridge::Value(e) => return Err(Error::arg(format!("ridge {e} must be nonnegative"))),
    };
    for k in 0..p {
        s[(k, k)] += eps;
    }
    let diff = mx - my;
    let chol = s.cholesky().ok_or(Error::SingularCovariance)?;
    let solved = chol.solve(&diff);
    let q = diff.dot(&solved);
    if !q.is_finite() {
        return Err(Error::SingularCovariance);
    }
    Ok((n * m) as f64 / (n + m) as f64 * q.max(0.0))
}

/// `nm/(n+m) · (x̄ − ȳ)ᵀ (S_pooled + εI)⁻¹ (x̄ − ȳ)`.
pub fn hotelling_statistic(v: &PooledVectors, ridge: Ridge) -> Result<f64> {
    let first: Vec<bool> = (0..v.rows.len()).map(|i| i < v.n).collect();
    hotelling_statistic_labeled(v, &first, ridge)
}

pub fn hotelling_test(
    v: &PooledVectors,
    ridge: Ridge,
    k: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult> {
    if k < 1 {
        return Err(Error::arg("need at least one permutation"));
    }
    let observed = hotelling_statistic(v, ridge)?;
    let n = v.n;
    let reps = permutation_replicates_with(v.rows.len(), k, seed, |perm| {
        hotelling_statistic_labeled(v, &labels_from_permutation(perm, n), ridge).unwrap_or(f64::NAN)
    });
    if reps.iter().any(|r| r.is_nan()) {
        return Err(Error::SingularCovariance);
    }
    TestResult::assemble(TestMethod::Hotelling, observed, reps, alpha, seed, n, v.m())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{MetricSpec, ObjectSample};

    fn pool(xs: &[f64], ys: &[f64]) -> PooledDistances {
        let to = |v: &[f64]| ObjectSample::vectors(v.iter().map(|&a| vec![a]).collect()).unwrap();
        PooledDistances::from_samples(&MetricSpec::euclidean(), &to(xs), &to(ys)).unwrap()
    }

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&a| vec![a]).collect()
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy_statistic(&pool(&[1.0, 1.0], &[1.0, 1.0])), 0.0);
        assert_eq!(energy_statistic(&pool(&[0.0, 0.0], &[2.5, 2.5])), 5.0);
        let a = energy_statistic(&pool(&[0.0, 3.0, 1.0], &[2.0, 5.0]));
        let b = energy_statistic(&pool(&[1.0, 0.0, 3.0], &[5.0, 2.0]));
        assert!((a - b).abs() < 1e-14);
        assert!(a >= 0.0);
        assert!(energy_statistic(&pool(&[0.0, 1.0, 4.0], &[4.0, 0.0, 1.0])).abs() < 1e-14);
    }

    #[test]
    fn energy_matches_direct_means() {
        let xs = [0.0, 0.7, 2.1];
        let ys = [1.0, 3.5, 4.0, -1.0];
        let mean = |a: &[f64], b: &[f64]| {
            a.iter()
                .flat_map(|x| b.iter().map(move |y| (x - y).abs()))
                .sum::<f64>()
                / (a.len() * b.len()) as f64
        };
        let direct = 12.0 / 7.0 * (2.0 * mean(&xs, &ys) - mean(&xs, &xs) - mean(&ys, &ys));
        assert!((energy_statistic(&pool(&xs, &ys)) - direct).abs() < 1e-13);
    }

    #[test]
    fn hotelling_scalar() {
        // unit pooled variance, mean gap delta
        let x = col(&[-1.0, 1.0, 0.0]);
        let delta = 2.0;
        let y = col(&[delta - 1.0, delta + 1.0, delta]);
        let v = PooledVectors::new(&x, &y).unwrap();
        let t = hotelling_statistic(&v, Ridge::Value(0.0)).unwrap();
        assert!((t - 1.5 * delta * delta).abs() < 1e-12);
        let same = PooledVectors::new(&x, &x).unwrap();
        assert_eq!(hotelling_statistic(&same, Ridge::Default).unwrap(), 0.0);
    }

    #[test]
    fn hotelling_rotation_invariant() {
        let x = vec![
            vec![0.0, 1.0],
            vec![2.0, 0.5],
            vec![1.0, -1.0],
            vec![0.3, 0.2],
        ];
        let y = vec![vec![1.0, 2.0], vec![3.0, 1.5], vec![2.5, 0.0]];
        let (c, s) = (0.6f64, 0.8f64);
        let rot = |r: &Vec<f64>| vec![c * r[0] - s * r[1] + 4.0, s * r[0] + c * r[1] - 1.0];
        let a =
            hotelling_statistic(&PooledVectors::new(&x, &y).unwrap(), Ridge::Value(0.0)).unwrap();
        let xr: Vec<_> = x.iter().map(rot).collect();
        let yr: Vec<_> = y.iter().map(rot).collect();
        let b =
            hotelling_statistic(&PooledVectors::new(&xr, &yr).unwrap(), Ridge::Value(0.0)).unwrap();
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn hotelling_singular_without_ridge() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let y = vec![vec![2.0, 0.0], vec![3.0, 0.0]];
        let v = PooledVectors::new(&x, &y).unwrap();
        assert_eq!(
            hotelling_statistic(&v, Ridge::Value(0.0)),
            Err(Error::SingularCovariance)
        );
        assert!(hotelling_statistic(&v, Ridge::Default).unwrap() > 0.0);
    }

    #[test]
    fn baseline_tests_share_harness() {
        let p = pool(&[1.0, 1.0, 1.0], &[1.0, 1.0]);
        let t = energy_test(&p, 30, 0.05, 4).unwrap();
        assert_eq!((t.statistic, t.p_value, t.k), (0.0, 1.0, 30));
        let v =
            PooledVectors::new(&col(&[0.0, 0.1, 0.2, 0.3]), &col(&[5.0, 5.1, 5.2, 5.3])).unwrap();
        let t = hotelling_test(&v, Ridge::Default, 99, 0.05, 4).unwrap();
        assert!(t.p_value < 0.1);
    }
}
