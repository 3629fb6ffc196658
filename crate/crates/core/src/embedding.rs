//! Classical (Torgerson) multidimensional scaling.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::profile::{profile_distance_matrix, ProfileSet};

#[derive(Debug, Clone, PartialEq)]
pub struct MdsEmbedding {
    /// Row-major `n × q` coordinates.
    pub coordinates: Vec<Vec<f64>>,
    /// The leading `q` eigenvalues of the centered Gram matrix, descending.
    /// Negative values are reported as is; their columns are zero.
    pub eigenvalues: Vec<f64>,
    pub q: usize,
}

impl MdsEmbedding {
    pub fn n(&self) -> usize {
        self.coordinates.len()
    }

    /// Euclidean distance between two embedded points.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.coordinates[i]
            .iter()
            .zip(&self.coordinates[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Embeds `d` in `q` dimensions from the top eigenpairs of `−½ J D² J`.
pub fn classical_mds(d: &DistanceMatrix, q: usize) -> Result<MdsEmbedding> {
    let n = d.n();
    if q < 1 || q + 1 > n {
        return Err(Error::arg(format!(
            "target dimension {q} outside 1..={}",
            n.saturating_sub(1)
        )));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| {
        let v = d.get(i, j);
        v * v
    });
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    // enforce exact symmetry before the symmetric solver
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| {
        eig.eigenvalues[c]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&c))
    });
    let mut coordinates = vec![vec![0.0; q]; n];
    let mut eigenvalues = Vec::with_capacity(q);
    for (k, &idx) in order.iter().take(q).enumerate() {
        let lambda = eig.eigenvalues[idx];
        eigenvalues.push(lambda);
        let scale = lambda.max(0.0).sqrt();
        let v = eig.eigenvectors.column(idx);
        // the entry of largest magnitude is made nonnegative
        let pivot = (0..n)
            .max_by(|&a, &c| v[a].abs().total_cmp(&v[c].abs()).then(c.cmp(&a)))
            .unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coordinates[i][k] = sign * v[i] * scale;
        }
    }
    Ok(MdsEmbedding {
        coordinates,
        eigenvalues,
        q,
    })
}

/// Classical MDS on the profile metric.
pub fn profile_mds(p: &ProfileSet, q: usize) -> Result<MdsEmbedding> {
    classical_mds(&profile_distance_matrix(p)?, q)
}
