//! Empirical distance profiles and the profile metric.

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;
use crate::onedim::{self, EmpiricalDistribution};
use crate::par;

/// Whether an object's own zero self-distance is part of its profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    /// `n` atoms per profile, self included (used for ranks).
    WithSelf,
    /// `n − 1` atoms per profile (used for in-sample two-sample profiles).
    LeaveOneOut,
}

/// The distance profile of every object in a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    mode: ProfileMode,
    profiles: Vec<EmpiricalDistribution>,
}

impl ProfileSet {
    pub fn mode(&self) -> ProfileMode {
        self.mode
    }

    pub fn profiles(&self) -> &[EmpiricalDistribution] {
        &self.profiles
    }

    pub fn get(&self, i: usize) -> &EmpiricalDistribution {
        &self.profiles[i]
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Profile `i` is the equal-weight distribution of row `i` of `d`.
pub fn build_profiles(d: &DistanceMatrix, mode: ProfileMode) -> Result<ProfileSet> {
    let n = d.n();
    if mode == ProfileMode::LeaveOneOut && n < 2 {
        return Err(Error::arg(
            "leave-one-out profiles need at least two objects",
        ));
    }
    let profiles = par::try_map_indexed(n, |i| {
        let row = d.row(i);
        let atoms: Vec<f64> = match mode {
            ProfileMode::WithSelf => row.to_vec(),
            ProfileMode::LeaveOneOut => row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .collect(),
        };
        EmpiricalDistribution::from_values(atoms)
    })?;
    Ok(ProfileSet { mode, profiles })
}

/// Profile of an object against another sample, from its cross-distances.
pub fn out_of_sample_profile(cross_row: &[f64]) -> Result<EmpiricalDistribution> {
    if cross_row.is_empty() {
        return Err(Error::arg("out-of-sample profile of an empty row"));
    }
    if cross_row.iter().any(|&v| v < 0.0) {
        return Err(Error::arg("distances must be nonnegative"));
    }
    EmpiricalDistribution::from_values(cross_row.to_vec())
}

/// Profile metric: the 2-Wasserstein distance between two profiles.
pub fn profile_metric(p1: &EmpiricalDistribution, p2: &EmpiricalDistribution) -> f64 {
    onedim::wasserstein2(p1, p2)
}

/// Pairwise profile-metric matrix.
pub fn profile_distance_matrix(p: &ProfileSet) -> Result<DistanceMatrix> {
    DistanceMatrix::from_upper(p.len(), |i, j| profile_metric(p.get(i), p.get(j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> DistanceMatrix {
        DistanceMatrix::from_rows(&[
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 2.0],
            vec![3.0, 2.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn build_examples() {
        let z = build_profiles(&DistanceMatrix::zeros(2), ProfileMode::WithSelf).unwrap();
        assert!(z.profiles().iter().all(|p| p.atoms() == [0.0, 0.0]));
        let with = build_profiles(&line(), ProfileMode::WithSelf).unwrap();
        assert_eq!(with.get(0).atoms(), &[0.0, 1.0, 3.0]);
        let loo = build_profiles(&line(), ProfileMode::LeaveOneOut).unwrap();
        assert_eq!(loo.get(0).atoms(), &[1.0, 3.0]);
        assert_eq!(loo.get(2).atoms(), &[2.0, 3.0]);
        assert!(build_profiles(&DistanceMatrix::zeros(1), ProfileMode::LeaveOneOut).is_err());
    }

    #[test]
    fn out_of_sample_examples() {
        let p = out_of_sample_profile(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.atoms(), &[0.0, 0.0, 0.0]);
        assert_eq!(p.quantile(1.0).unwrap(), 0.0);
        assert_eq!(
            out_of_sample_profile(&[5.0, 2.0]).unwrap().atoms(),
            &[2.0, 5.0]
        );
        let with = build_profiles(&line(), ProfileMode::WithSelf).unwrap();
        assert_eq!(&out_of_sample_profile(line().row(1)).unwrap(), with.get(1));
        assert!(out_of_sample_profile(&[]).is_err());
    }

    #[test]
    fn rectangle_corners_share_profiles() {
        // opposite corners of a 1x2 rectangle have the same sorted rows
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)];
        let rows: Vec<Vec<f64>> = pts
            .iter()
            .map(|a: &(f64, f64)| {
                pts.iter()
                    .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                    .collect()
            })
            .collect();
        let d = DistanceMatrix::from_rows(&rows).unwrap();
        let p = build_profiles(&d, ProfileMode::WithSelf).unwrap();
        assert_eq!(profile_metric(p.get(0), p.get(2)), 0.0);
        assert!(d.get(0, 2) > 0.0);
        let pd = profile_distance_matrix(&p).unwrap();
        assert!(pd.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn line_profile_metric_is_sorted_rms() {
        let p = build_profiles(&line(), ProfileMode::WithSelf).unwrap();
        let pd = profile_distance_matrix(&p).unwrap();
        // sorted rows: {0,1,3}, {0,1,2}, {0,2,3}
        let rms = |a: [f64; 3], b: [f64; 3]| {
            (a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                / 3.0)
                .sqrt()
        };
        assert_eq!(pd.get(0, 1), rms([0.0, 1.0, 3.0], [0.0, 1.0, 2.0]));
        assert_eq!(pd.get(0, 2), rms([0.0, 1.0, 3.0], [0.0, 2.0, 3.0]));
        assert_eq!(pd.get(1, 2), rms([0.0, 1.0, 2.0], [0.0, 2.0, 3.0]));
        assert_eq!(pd.get(2, 1), pd.get(1, 2));
    }
}
