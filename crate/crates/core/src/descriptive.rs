//! Fréchet means and variances, metric variance, covariance and correlation.

use crate::error::{Error, Result};
use crate::metric::{CrossMatrix, DistanceMatrix, MetricKind, MetricSpec, Object, ObjectSample};
use crate::numeric::{self, Sum};
use crate::onedim::{barycenter_exact, EmpiricalDistribution};
use crate::par;

/// Fréchet mean restricted to the sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetSummary {
    /// Every minimizing index, ascending; the first is the reported mean.
    pub mean_indices: Vec<usize>,
    pub frechet_variance: f64,
    /// `(1/n) Σᵢ d²(Xᵢ, X_j)` for each candidate `j`.
    pub candidate_values: Vec<f64>,
}

impl FrechetSummary {
    pub fn mean_index(&self) -> usize {
        self.mean_indices[0]
    }
}

pub fn frechet_mean_sample(d: &DistanceMatrix) -> Result<FrechetSummary> {
    let n = d.n();
    if n == 0 {
        return Err(Error::arg("Fréchet mean of an empty sample"));
    }
    let candidate_values = par::map_indexed(n, |j| {
        numeric::sum(d.row(j).iter().map(|v| v * v)) / n as f64
    });
    let best = candidate_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mean_indices = (0..n).filter(|&j| candidate_values[j] == best).collect();
    Ok(FrechetSummary {
        mean_indices,
        frechet_variance: best,
        candidate_values,
    })
}

/// Closed-form Fréchet mean: coordinatewise mean of vectors, or the
/// quantile-averaging barycenter of one-dimensional distributions.
pub fn frechet_mean_exact(sample: &ObjectSample, spec: &MetricSpec) -> Result<Object> {
    if sample.is_empty() {
        return Err(Error::arg("Fréchet mean of an empty sample"));
    }
    match spec.kind {
        MetricKind::Euclidean => {
            let rows = sample.as_vectors().ok_or(Error::EncodingMismatch {
                metric: "euclidean",
                expected: "vector",
                found: sample.encoding(),
            })?;
            let p = rows[0].len();
            let mean = (0..p)
                .map(|k| numeric::sum(rows.iter().map(|r| r[k])) / rows.len() as f64)
                .collect();
            Ok(Object::Vector(mean))
        }
        MetricKind::Wasserstein1d => {
            let dists = sample
                .objects()
                .iter()
                .map(|o| match o {
                    Object::Distribution1d(d) => Ok(d.clone()),
                    other => Err(Error::EncodingMismatch {
                        metric: "wasserstein1d",
                        expected: "distribution1d",
                        found: other.encoding(),
                    }),
                })
                .collect::<Result<Vec<EmpiricalDistribution>>>()?;
            Ok(Object::Distribution1d(barycenter_exact(&dists)?))
        }
        other => Err(Error::Unsupported(format!(
            "no closed-form Fréchet mean for the {} metric",
            other.name()
        ))),
    }
}

/// `1/(2n(n−1)) · Σᵢ Σⱼ d²(Xᵢ, Xⱼ)`.
pub fn metric_variance(d: &DistanceMatrix) -> Result<f64> {
    let n = d.n();
    if n < 2 {
        return Err(Error::arg("metric variance needs at least two objects"));
    }
    let mut s = Sum::default();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = d.get(i, j);
            s.add(v * v);
        }
    }
    // the strict upper triangle holds half of the double sum
    Ok(s.value() / (n * (n - 1)) as f64)
}

/// Sample metric covariance of the pairs `(Xᵢ, Yᵢ)`, with `dxy[i][j] = d(Xᵢ, Yⱼ)`.
/// Independent copies are replaced by averages over ordered pairs `i ≠ j`.
pub fn metric_covariance(dxy: &CrossMatrix) -> Result<f64> {
    let n = dxy.rows();
    if n != dxy.cols() {
        return Err(Error::arg(format!(
            "paired samples need equal sizes ({n} vs {})",
            dxy.cols()
        )));
    }
    if n < 2 {
        return Err(Error::arg("metric covariance needs at least two pairs"));
    }
    let mut off = Sum::default();
    let mut diag = Sum::default();
    for i in 0..n {
        for (j, &v) in dxy.row(i).iter().enumerate() {
            if i == j {
                diag.add(v * v);
            } else {
                off.add(v * v);
            }
        }
    }
    let cross = off.value() / (n * (n - 1)) as f64;
    let paired = diag.value() / n as f64;
    Ok(0.5 * (cross - paired))
}

/// Metric correlation of paired samples.
pub fn metric_correlation(
    dx: &DistanceMatrix,
    dy: &DistanceMatrix,
    dxy: &CrossMatrix,
) -> Result<f64> {
    if dx.n() != dy.n() || dx.n() != dxy.rows() || dxy.rows() != dxy.cols() {
        return Err(Error::arg("paired samples need matching sizes"));
    }
    let cov = metric_covariance(dxy)?;
    let vx = metric_variance(dx)?;
    let vy = metric_variance(dy)?;
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::arg("zero self-covariance: a sample is constant"));
    }
    Ok(cov / (vx * vy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_upper(xs.len(), |i, j| (xs[i] - xs[j]).abs()).unwrap()
    }

    fn cross(xs: &[f64], ys: &[f64]) -> CrossMatrix {
        let data = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| (x - y).abs()))
            .collect();
        CrossMatrix::from_row_major(xs.len(), ys.len(), data).unwrap()
    }

    #[test]
    fn frechet_sample_examples() {
        let f = frechet_mean_sample(&line(&[0.0, 1.0, 3.0])).unwrap();
        assert_eq!(f.candidate_values, vec![10.0 / 3.0, 5.0 / 3.0, 13.0 / 3.0]);
        assert_eq!(f.mean_index(), 1);
        assert_eq!(f.frechet_variance, 5.0 / 3.0);
        let tie = frechet_mean_sample(&line(&[0.0, 2.0])).unwrap();
        assert_eq!(tie.mean_indices, vec![0, 1]);
        assert_eq!(tie.frechet_variance, 2.0);
        let flat = frechet_mean_sample(&DistanceMatrix::zeros(3)).unwrap();
        assert_eq!(flat.frechet_variance, 0.0);
    }

    #[test]
    fn frechet_exact_examples() {
        let v = ObjectSample::vectors(vec![vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(
            frechet_mean_exact(&v, &MetricSpec::euclidean()).unwrap(),
            Object::Vector(vec![1.0, 1.0])
        );
        let d = ObjectSample::new(vec![
            Object::Distribution1d(EmpiricalDistribution::point_mass(0.0)),
            Object::Distribution1d(EmpiricalDistribution::point_mass(2.0)),
        ])
        .unwrap();
        let spec = MetricSpec::new(MetricKind::Wasserstein1d);
        match frechet_mean_exact(&d, &spec).unwrap() {
            Object::Distribution1d(b) => assert_eq!(b.atoms(), &[1.0]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(frechet_mean_exact(&v, &MetricSpec::new(MetricKind::Frobenius)).is_err());
    }

    #[test]
    fn metric_variance_examples() {
        assert_eq!(metric_variance(&line(&[0.0, 2.0])).unwrap(), 2.0);
        assert!((metric_variance(&line(&[0.0, 1.0, 3.0])).unwrap() - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(metric_variance(&DistanceMatrix::zeros(4)).unwrap(), 0.0);
        assert!(metric_variance(&DistanceMatrix::zeros(1)).is_err());
    }

    #[test]
    fn covariance_of_self_is_variance() {
        let xs = [0.0, 1.5, -2.0, 4.0];
        let d = line(&xs);
        let c = metric_covariance(&CrossMatrix::from(&d)).unwrap();
        assert!((c - metric_variance(&d).unwrap()).abs() < 1e-14);
        let r = metric_correlation(&d, &d, &CrossMatrix::from(&d)).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn correlation_is_symmetric() {
        let xs = [0.0, 1.5, -2.0, 4.0, 0.3];
        let ys = [1.0, 0.5, 2.0, -4.0, 0.0];
        let r1 = metric_correlation(&line(&xs), &line(&ys), &cross(&xs, &ys)).unwrap();
        let r2 = metric_correlation(&line(&ys), &line(&xs), &cross(&ys, &xs)).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&r1));
    }

    #[test]
    fn constant_sample_has_no_correlation() {
        let xs = [1.0, 1.0, 1.0];
        let ys = [0.0, 1.0, 2.0];
        assert!(metric_correlation(&line(&xs), &line(&ys), &cross(&xs, &ys)).is_err());
    }
}
