//! Exact arithmetic on empirical one-dimensional distributions.
//!
//! Every distribution is a finite list of sorted atoms with positive weights,
//! so CDFs and quantile functions are step functions and every integral
//! below is a finite sum over merged breakpoints. No smoothing happens here.

use crate::error::{Error, Result};
use crate::numeric::{self, Sum};

/// A weighted-atom distribution on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    /// `cum[k]` is the CDF just after `atoms[k]`; the last entry is exactly 1.
    cum: Vec<f64>,
    equal_weights: bool,
}

impl EmpiricalDistribution {
    /// Equal-weight distribution of `values` (any order).
    pub fn from_values(values: impl Into<Vec<f64>>) -> Result<Self> {
        let mut atoms = values.into();
        check_atoms(&atoms)?;
        atoms.sort_by(f64::total_cmp);
        Ok(Self::equal_weight_sorted(atoms))
    }

    /// Equal-weight distribution of already sorted `values`.
    pub fn from_sorted(values: impl Into<Vec<f64>>) -> Result<Self> {
        let atoms = values.into();
        check_atoms(&atoms)?;
        if atoms.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::arg("atoms must be nondecreasing"));
        }
        Ok(Self::equal_weight_sorted(atoms))
    }

    pub fn point_mass(at: f64) -> Self {
        Self::equal_weight_sorted(vec![at])
    }

    /// Weighted distribution. Pairs are sorted by atom; weights must be
    /// positive and sum to one within `1e-12`.
    pub fn with_weights(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::arg(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        check_atoms(&atoms)?;
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::arg("weights must be positive and finite"));
        }
        let total = numeric::sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!("weights sum to {total}, expected 1")));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (atoms, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut cum = Vec::with_capacity(weights.len());
        let mut run = Sum::default();
        for w in &weights {
            run.add(*w);
            cum.push(run.value().min(1.0));
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        Ok(Self {
            atoms,
            weights,
            cum,
            equal_weights: false,
        })
    }

    fn equal_weight_sorted(atoms: Vec<f64>) -> Self {
        let n = atoms.len();
        let nf = n as f64;
        let weights = vec![1.0 / nf; n];
        let cum = (1..=n).map(|k| k as f64 / nf).collect();
        Self {
            atoms,
            weights,
            cum,
            equal_weights: true,
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_equal_weight(&self) -> bool {
        self.equal_weights
    }

    pub fn min(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1]
    }

    /// Right-continuous CDF `P(X <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match self.atoms.partition_point(|&a| a <= t) {
            0 => 0.0,
            k => self.cum[k - 1],
        }
    }

    /// Left-continuous quantile `inf{x : F(x) >= u}` for `u` in `(0, 1]`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::arg(format!("quantile level {u} outside (0, 1]")));
        }
        let k = self.cum.partition_point(|&c| c < u);
        Ok(self.atoms[k.min(self.atoms.len() - 1)])
    }

    pub fn mean(&self) -> f64 {
        if self.equal_weights {
            numeric::sum(self.atoms.iter().copied()) / self.len() as f64
        } else {
            numeric::sum(self.atoms.iter().zip(&self.weights).map(|(a, w)| a * w))
        }
    }

    /// `∫₀¹ F⁻¹(u) du` summed over the quantile steps, i.e. the mean computed
    /// as an integral rather than a weighted sum.
    pub fn quantile_integral(&self) -> f64 {
        let mut acc = Sum::default();
        let mut prev = 0.0;
        for (a, c) in self.atoms.iter().zip(&self.cum) {
            acc.add(a * (c - prev));
            prev = *c;
        }
        acc.value()
    }

    fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_atoms(atoms: &[f64]) -> Result<()> {
    if atoms.is_empty() {
        return Err(Error::arg("distribution needs at least one atom"));
    }
    if atoms.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("distribution atoms".into()));
    }
    Ok(())
}

/// Walks both quantile functions over their merged u-breakpoints, calling
/// `f(du, q1, q2)` on every segment of positive length.
fn for_each_quantile_step(
    d1: &EmpiricalDistribution,
    d2: &EmpiricalDistribution,
    mut f: impl FnMut(f64, f64, f64),
) {
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    while i < d1.len() && j < d2.len() {
        let (c1, c2) = (d1.cum[i], d2.cum[j]);
        let next = c1.min(c2);
        if next > prev {
            f(next - prev, d1.atoms[i], d2.atoms[j]);
        }
        prev = next;
        if c1 <= next {
            i += 1;
        }
        if c2 <= next {
            j += 1;
        }
    }
}

/// 2-Wasserstein distance: the L² distance between quantile functions.
pub fn wasserstein2(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution) -> f64 {
    let mut acc = Sum::default();
    if d1.equal_weights && d2.equal_weights && d1.len() == d2.len() {
        for (a, b) in d1.atoms.iter().zip(&d2.atoms) {
            acc.add((a - b) * (a - b));
        }
        return (acc.value() / d1.len() as f64).sqrt();
    }
    for_each_quantile_step(d1, d2, |du, a, b| acc.add((a - b) * (a - b) * du));
    acc.value().sqrt()
}

/// `∫₀¹ [F₁⁻¹(u) − F₂⁻¹(u)] du`, the integrated quantile gap.
pub fn quantile_gap_integral(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution) -> f64 {
    let mut acc = Sum::default();
    for_each_quantile_step(d1, d2, |du, a, b| acc.add((a - b) * du));
    acc.value()
}

/// Transport map minus identity, `H(u) = F_target⁻¹(F_source(u)) − u`.
///
/// Where `F_source(u) = 0` the target quantile is taken at the smallest atom
/// weight of the source.
pub fn transport_map(
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    u: f64,
) -> f64 {
    let mut level = source.cdf(u);
    if level <= 0.0 {
        level = source.min_weight();
    }
    let q = target
        .quantile(level)
        .expect("CDF values of a valid distribution lie in (0, 1]");
    q - u
}

/// Wasserstein barycenter sampled on the midpoint grid `u = (k − ½)/m`,
/// returned as `m` equal-weight atoms.
pub fn barycenter(dists: &[EmpiricalDistribution], m: usize) -> Result<EmpiricalDistribution> {
    if dists.is_empty() {
        return Err(Error::arg("barycenter of an empty list"));
    }
    if m < 2 {
        return Err(Error::arg("barycenter grid needs m >= 2"));
    }
    let k = dists.len() as f64;
    let atoms = (1..=m)
        .map(|step| {
            let u = (step as f64 - 0.5) / m as f64;
            numeric::sum(dists.iter().map(|d| d.quantile(u).expect("u in (0,1)"))) / k
        })
        .collect::<Vec<_>>();
    Ok(EmpiricalDistribution::equal_weight_sorted(atoms))
}

/// Exact Wasserstein barycenter: the pointwise mean of the step quantile
/// functions over all merged u-breakpoints.
pub fn barycenter_exact(dists: &[EmpiricalDistribution]) -> Result<EmpiricalDistribution> {
    if dists.is_empty() {
        return Err(Error::arg("barycenter of an empty list"));
    }
    if dists.iter().all(|d| *d == dists[0]) {
        return Ok(dists[0].clone());
    }
    let mut levels: Vec<f64> = dists.iter().flat_map(|d| d.cum.iter().copied()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let k = dists.len() as f64;
    let mut atoms = Vec::with_capacity(levels.len());
    let mut weights = Vec::with_capacity(levels.len());
    let mut prev = 0.0;
    for &c in &levels {
        let w = c - prev;
        prev = c;
        if w <= 0.0 {
            continue;
        }
        atoms.push(numeric::sum(dists.iter().map(|d| d.quantile(c).expect("c in (0,1]"))) / k);
        weights.push(w);
    }
    EmpiricalDistribution::with_weights(atoms, weights)
}

/// A nonnegative piecewise-constant function of `u`.
///
/// `values[0]` applies below `breaks[0]`, `values[k]` on
/// `[breaks[k-1], breaks[k])` and the last value beyond the last break.
#[derive(Debug, Clone, PartialEq)]
pub struct StepWeight {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepWeight {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::arg("step weight needs one more value than breaks"));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg(
                "step weight breaks must be finite and increasing",
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::arg(
                "step weight values must be finite and nonnegative",
            ));
        }
        Ok(Self { breaks, values })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    pub fn unit() -> Self {
        Self {
            breaks: Vec::new(),
            values: vec![1.0],
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.breaks.is_empty().then(|| self.values[0])
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= u)]
    }

    /// `∫ₐᵇ w(u) du` for `a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if let Some(c) = self.as_constant() {
            return c * (b - a);
        }
        let mut k = self.breaks.partition_point(|&x| x <= a);
        let mut lo = a;
        let mut acc = 0.0;
        loop {
            let hi = self.breaks.get(k).copied().unwrap_or(f64::INFINITY).min(b);
            acc += self.values[k] * (hi - lo);
            if hi >= b {
                return acc;
            }
            lo = hi;
            k += 1;
        }
    }
}

/// `∫₀^∞ [F₁(u) − F₂(u)]² du`, exact for step CDFs of nonnegative atoms.
pub fn integral_sq_cdf_diff(d1: &EmpiricalDistribution, d2: &EmpiricalDistribution) -> Result<f64> {
    sq_cdf_diff_with(d1, d2, |a, b| b - a)
}

/// `∫₀^∞ w(u) [F₁(u) − F₂(u)]² du` for a step weight `w`.
pub fn integral_weighted_sq_cdf_diff(
    d1: &EmpiricalDistribution,
    d2: &EmpiricalDistribution,
    w: &StepWeight,
) -> Result<f64> {
    sq_cdf_diff_with(d1, d2, |a, b| w.integral(a, b))
}

fn sq_cdf_diff_with(
    d1: &EmpiricalDistribution,
    d2: &EmpiricalDistribution,
    measure: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if d1.min() < 0.0 || d2.min() < 0.0 {
        return Err(Error::arg(
            "distance distributions must have nonnegative atoms",
        ));
    }
    let (a1, a2) = (&d1.atoms, &d2.atoms);
    let (mut i, mut j) = (0, 0);
    let (mut f1, mut f2) = (0.0, 0.0);
    let mut t = a1[0].min(a2[0]);
    let mut acc = Sum::default();
    loop {
        while i < a1.len() && a1[i] <= t {
            f1 = d1.cum[i];
            i += 1;
        }
        while j < a2.len() && a2[j] <= t {
            f2 = d2.cum[j];
            j += 1;
        }
        let next = match (a1.get(i), a2.get(j)) {
            (None, None) => break,
            (Some(&x), None) | (None, Some(&x)) => x,
            (Some(&x), Some(&y)) => x.min(y),
        };
        let gap = f1 - f2;
        if gap != 0.0 {
            acc.add(gap * gap * measure(t, next));
        }
        t = next;
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ew(v: &[f64]) -> EmpiricalDistribution {
        EmpiricalDistribution::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn cdf_steps() {
        let d = ew(&[2.0]);
        assert_eq!(d.cdf(1.0), 0.0);
        assert_eq!(d.cdf(2.0), 1.0);
        let d = ew(&[0.0, 1.0, 3.0]);
        assert_eq!(d.cdf(1.0), 2.0 / 3.0);
        assert_eq!(d.cdf(-0.5), 0.0);
    }

    #[test]
    fn quantile_is_left_continuous_inverse() {
        let d = ew(&[3.0, 0.0, 1.0]);
        assert_eq!(d.quantile(0.5).unwrap(), 1.0);
        assert_eq!(d.quantile(1.0).unwrap(), 3.0);
        assert_eq!(d.quantile(1.0 / 3.0).unwrap(), 0.0);
        assert_eq!(ew(&[4.2]).quantile(0.123).unwrap(), 4.2);
        assert!(d.quantile(0.0).is_err());
        assert!(d.quantile(1.5).is_err());
        assert!(d.quantile(f64::NAN).is_err());
    }

    #[test]
    fn means() {
        assert!((ew(&[0.0, 1.0, 3.0]).mean() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(EmpiricalDistribution::point_mass(7.0).mean(), 7.0);
        assert_eq!(ew(&[-1.0, 1.0]).mean(), 0.0);
    }

    #[test]
    fn wasserstein_examples() {
        let a = ew(&[0.0, 1.0]);
        let b = ew(&[0.0, 3.0]);
        assert_eq!(wasserstein2(&a, &a), 0.0);
        assert!((wasserstein2(&a, &b) - 2f64.sqrt()).abs() < 1e-15);
        let p = EmpiricalDistribution::point_mass(-1.5);
        let q = EmpiricalDistribution::point_mass(2.25);
        assert_eq!(wasserstein2(&p, &q), 3.75);
    }

    #[test]
    fn wasserstein_unequal_sizes() {
        // {0,1} vs {0,0,3}: quantiles differ on (1/3,1/2] by 0, (1/2,2/3] by 1, (2/3,1] by 2
        let a = ew(&[0.0, 1.0]);
        let b = ew(&[0.0, 0.0, 3.0]);
        let expected = (1.0f64 / 6.0 + 4.0 / 3.0).sqrt();
        assert!((wasserstein2(&a, &b) - expected).abs() < 1e-14);
        assert!((wasserstein2(&b, &a) - expected).abs() < 1e-14);
    }

    #[test]
    fn transport_map_examples() {
        let s = ew(&[0.5, 1.0, 2.0]);
        for &a in s.atoms() {
            assert_eq!(transport_map(&s, &s, a), 0.0);
        }
        // between atoms the step map sends u back to the atom below it
        assert_eq!(transport_map(&s, &s, 1.5), -0.5);
        assert_eq!(transport_map(&s, &s, 0.0), 0.5);
        let p1 = EmpiricalDistribution::point_mass(1.0);
        let p3 = EmpiricalDistribution::point_mass(3.0);
        assert_eq!(transport_map(&p1, &p3, 1.0), 2.0);
        let shifted = ew(&[2.5, 3.0, 4.0]);
        for &a in s.atoms() {
            assert_eq!(transport_map(&s, &shifted, a), 2.0);
        }
    }

    #[test]
    fn barycenter_examples() {
        let p0 = EmpiricalDistribution::point_mass(0.0);
        let p2 = EmpiricalDistribution::point_mass(2.0);
        let b = barycenter(&[p0.clone(), p2.clone()], 4).unwrap();
        assert!(b.atoms().iter().all(|&a| a == 1.0));
        let b = barycenter(&[ew(&[0.0, 2.0]), ew(&[1.0, 3.0])], 2).unwrap();
        assert_eq!(b.atoms(), &[0.5, 2.5]);
        let single = ew(&[1.0, 2.0, 7.0]);
        let b = barycenter(std::slice::from_ref(&single), 6).unwrap();
        assert_eq!(b.atoms(), &[1.0, 1.0, 2.0, 2.0, 7.0, 7.0]);
        assert!(barycenter(&[], 4).is_err());
        assert!(barycenter(&[single], 1).is_err());
        let exact = barycenter_exact(&[p0, p2]).unwrap();
        assert_eq!(exact.atoms(), &[1.0]);
    }

    #[test]
    fn sq_cdf_diff_examples() {
        let p0 = EmpiricalDistribution::point_mass(0.0);
        let p2 = EmpiricalDistribution::point_mass(2.0);
        assert_eq!(integral_sq_cdf_diff(&p0, &p0).unwrap(), 0.0);
        assert_eq!(integral_sq_cdf_diff(&p0, &p2).unwrap(), 2.0);
        let d = ew(&[0.3, 1.0, 4.0]);
        assert_eq!(integral_sq_cdf_diff(&d, &d).unwrap(), 0.0);
        let neg = ew(&[-1.0, 1.0]);
        assert!(integral_sq_cdf_diff(&neg, &d).is_err());
    }

    #[test]
    fn weighted_sq_cdf_diff_examples() {
        let p0 = EmpiricalDistribution::point_mass(0.0);
        let p2 = EmpiricalDistribution::point_mass(2.0);
        let two = StepWeight::constant(2.0).unwrap();
        let zero = StepWeight::constant(0.0).unwrap();
        assert_eq!(integral_weighted_sq_cdf_diff(&p0, &p2, &two).unwrap(), 4.0);
        assert_eq!(integral_weighted_sq_cdf_diff(&p0, &p2, &zero).unwrap(), 0.0);
        // w = 1 on [0,1), 3 on [1,∞): ∫₀² w = 1 + 3
        let w = StepWeight::new(vec![1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(integral_weighted_sq_cdf_diff(&p0, &p2, &w).unwrap(), 4.0);
        let a = ew(&[0.1, 0.4, 2.0]);
        let b = ew(&[0.2, 0.3, 0.9, 5.0]);
        assert_eq!(
            integral_weighted_sq_cdf_diff(&a, &b, &StepWeight::unit()).unwrap(),
            integral_sq_cdf_diff(&a, &b).unwrap()
        );
        assert!(StepWeight::constant(-1.0).is_err());
        assert!(StepWeight::new(vec![2.0, 1.0], vec![1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn step_weight_integral_spans_pieces() {
        let w = StepWeight::new(vec![0.0, 1.0, 2.0], vec![9.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(w.integral(0.5, 3.0), 0.5 + 2.0 + 4.0);
        assert_eq!(w.integral(-1.0, 0.0), 9.0);
        assert_eq!(w.eval(1.0), 2.0);
    }

    #[test]
    fn weighted_construction() {
        let d = EmpiricalDistribution::with_weights(vec![3.0, 1.0], vec![0.25, 0.75]).unwrap();
        assert_eq!(d.atoms(), &[1.0, 3.0]);
        assert_eq!(d.cdf(1.0), 0.75);
        assert_eq!(d.quantile(0.8).unwrap(), 3.0);
        assert!((d.mean() - 1.5).abs() < 1e-15);
        assert!(EmpiricalDistribution::with_weights(vec![1.0], vec![0.5]).is_err());
        assert!(EmpiricalDistribution::with_weights(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(EmpiricalDistribution::from_values(Vec::new()).is_err());
        assert!(EmpiricalDistribution::from_values(vec![f64::NAN]).is_err());
        assert!(EmpiricalDistribution::from_sorted(vec![2.0, 1.0]).is_err());
    }
}
