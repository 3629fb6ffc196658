//! Seeded two-sample scenario generators and a Monte-Carlo power harness.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution, StandardNormal, StudentT};
use statrs::function::erf::erfc;

use crate::baselines::{energy_test, hotelling_test, PooledVectors, Ridge};
use crate::error::{Error, Result};
use crate::metric::{Adjacency, Grid, MetricKind, MetricSpec, Object, ObjectSample};
use crate::par;
use crate::rng::{child_seed, substream, StreamRng};
use crate::two_sample::{dp_test, PooledDistances, TestMethod, WeightProfile};

/// Half-width of the square window carrying the 2-D CDF grids.
pub const GAUSS2D_WINDOW: f64 = 4.0;
pub const GAUSS2D_DEFAULT_RESOLUTION: usize = 64;
pub const PREFATTACH_DEFAULT_NODES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    MvnormMeanShift,
    MvnormScaleChange,
    MvnormVsMixture,
    MvnormVsT,
    Gauss2dMeanShift,
    Gauss2dScaleChange,
    PrefAttach,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::MvnormMeanShift,
        ScenarioName::MvnormScaleChange,
        ScenarioName::MvnormVsMixture,
        ScenarioName::MvnormVsT,
        ScenarioName::Gauss2dMeanShift,
        ScenarioName::Gauss2dScaleChange,
        ScenarioName::PrefAttach,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioName::MvnormMeanShift => "mvnorm_mean_shift",
            ScenarioName::MvnormScaleChange => "mvnorm_scale_change",
            ScenarioName::MvnormVsMixture => "mvnorm_vs_mixture",
            ScenarioName::MvnormVsT => "mvnorm_vs_t",
            ScenarioName::Gauss2dMeanShift => "gauss2d_distn_mean_shift",
            ScenarioName::Gauss2dScaleChange => "gauss2d_distn_scale_change",
            ScenarioName::PrefAttach => "prefattach_network",
        }
    }

    pub fn is_vector(self) -> bool {
        matches!(
            self,
            ScenarioName::MvnormMeanShift
                | ScenarioName::MvnormScaleChange
                | ScenarioName::MvnormVsMixture
                | ScenarioName::MvnormVsT
        )
    }

    /// Default `size`: dimension, grid resolution or node count.
    pub fn default_size(self) -> usize {
        match self {
            ScenarioName::Gauss2dMeanShift | ScenarioName::Gauss2dScaleChange => {
                GAUSS2D_DEFAULT_RESOLUTION
            }
            ScenarioName::PrefAttach => PREFATTACH_DEFAULT_NODES,
            _ => 30,
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ScenarioName::ALL.iter().map(|k| k.name()).collect();
                Error::arg(format!(
                    "unknown scenario '{s}' (one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// One scenario instance. `size` is the dimension `p` for vector scenarios,
/// the grid resolution per axis for the 2-D distribution scenarios and the
/// node count for networks. `param` is the scenario's shift, scale change,
/// degrees of freedom or attachment exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub size: usize,
    pub param: f64,
    pub n: usize,
    pub m: usize,
}

impl ScenarioSpec {
    pub fn new(name: ScenarioName, size: usize, param: f64, n: usize, m: usize) -> Self {
        Self {
            name,
            size,
            param,
            n,
            m,
        }
    }

    /// The metric the scenario's objects are compared with.
    pub fn metric(&self) -> MetricSpec {
        match self.name {
            ScenarioName::Gauss2dMeanShift | ScenarioName::Gauss2dScaleChange => {
                let h = 2.0 * GAUSS2D_WINDOW / self.size as f64;
                MetricSpec {
                    kind: MetricKind::L2Cdf,
                    cell_area: h * h,
                }
            }
            ScenarioName::PrefAttach => MetricSpec::new(MetricKind::Frobenius),
            _ => MetricSpec::euclidean(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 || self.m < 1 {
            return Err(Error::arg("sample sizes must be positive"));
        }
        if !self.param.is_finite() {
            return Err(Error::arg("scenario parameter must be finite"));
        }
        match self.name {
            ScenarioName::MvnormMeanShift | ScenarioName::MvnormScaleChange if self.size < 2 => {
                Err(Error::arg("dimension p must be at least 2"))
            }
            ScenarioName::MvnormScaleChange if self.param >= 0.8 => Err(Error::arg(format!(
                "variance change {} must stay below 0.8",
                self.param
            ))),
            ScenarioName::MvnormVsMixture if (0.1 * self.size as f64).round() < 1.0 => Err(
                Error::arg("dimension too small: round(0.1 p) must be at least 1"),
            ),
            ScenarioName::MvnormVsT if self.size < 1 || self.param <= 0.0 => Err(Error::arg(
                "t scenario needs p ≥ 1 and positive degrees of freedom",
            )),
            ScenarioName::Gauss2dMeanShift | ScenarioName::Gauss2dScaleChange if self.size < 16 => {
                Err(Error::arg("grid resolution must be at least 16"))
            }
            ScenarioName::Gauss2dScaleChange if self.param <= -0.4 => {
                Err(Error::arg("scale change must exceed -0.4"))
            }
            ScenarioName::PrefAttach if self.size < 2 || self.param < 0.0 => Err(Error::arg(
                "networks need at least 2 nodes and a nonnegative exponent",
            )),
            _ => Ok(()),
        }
    }

    /// Draws the two samples.
    pub fn generate(&self, seed: u64) -> Result<(ObjectSample, ObjectSample)> {
        self.validate()?;
        let mut rx = substream(seed, &[0]);
        let mut ry = substream(seed, &[1]);
        let (n, m, p, t) = (self.n, self.m, self.size, self.param);
        let (x, y) = match self.name {
            ScenarioName::MvnormMeanShift => {
                let a = mean_shift_factor(p);
                let shift = DVector::from_element(p, t);
                let zero = DVector::zeros(p);
                (
                    vectors(n, |r| correlated_normal(&a, &zero, r), &mut rx),
                    vectors(m, |r| correlated_normal(&a, &shift, r), &mut ry),
                )
            }
            ScenarioName::MvnormScaleChange => {
                let (sx, sy) = (0.8f64.sqrt(), (0.8 - t).sqrt());
                (
                    vectors(n, |r| scaled_normal(p, sx, r), &mut rx),
                    vectors(m, |r| scaled_normal(p, sy, r), &mut ry),
                )
            }
            ScenarioName::MvnormVsMixture => {
                let shifted = (0.1 * p as f64).round() as usize;
                (
                    vectors(n, |r| scaled_normal(p, 1.0, r), &mut rx),
                    vectors(m, |r| mixture_draw(p, shifted, t, r), &mut ry),
                )
            }
            ScenarioName::MvnormVsT => {
                let student = StudentT::new(t).map_err(|e| Error::arg(e.to_string()))?;
                (
                    vectors(n, |r| scaled_normal(p, 1.0, r), &mut rx),
                    vectors(m, |r| (0..p).map(|_| student.sample(r)).collect(), &mut ry),
                )
            }
            ScenarioName::Gauss2dMeanShift => (
                gauss2d(n, p, [0.0, 0.0], 0.5, &mut rx),
                gauss2d(m, p, [t, 0.0], 0.5, &mut ry),
            ),
            ScenarioName::Gauss2dScaleChange => (
                gauss2d(n, p, [0.0, 0.0], 0.4, &mut rx),
                gauss2d(m, p, [0.0, 0.0], 0.4 + t, &mut ry),
            ),
            ScenarioName::PrefAttach => (
                (0..n)
                    .map(|_| Object::Adjacency(prefattach(p, 0.0, &mut rx)))
                    .collect(),
                (0..m)
                    .map(|_| Object::Adjacency(prefattach(p, t, &mut ry)))
                    .collect(),
            ),
        };
        Ok((ObjectSample::new(x)?, ObjectSample::new(y)?))
    }
}

fn vectors<F>(count: usize, mut draw: F, rng: &mut StreamRng) -> Vec<Object>
where
    F: FnMut(&mut StreamRng) -> Vec<f64>,
{
    (0..count).map(|_| Object::Vector(draw(rng))).collect()
}

fn normal(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

fn scaled_normal(p: usize, sd: f64, rng: &mut StreamRng) -> Vec<f64> {
    (0..p).map(|_| sd * normal(rng)).collect()
}

fn correlated_normal(a: &DMatrix<f64>, mean: &DVector<f64>, rng: &mut StreamRng) -> Vec<f64> {
    let z = DVector::from_fn(a.ncols(), |_, _| normal(rng));
    (a * z + mean).iter().copied().collect()
}

fn mixture_draw(p: usize, shifted: usize, delta: f64, rng: &mut StreamRng) -> Vec<f64> {
    let sign = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
    (0..p)
        .map(|k| {
            let mu = if k < shifted { sign * delta } else { 0.0 };
            mu + normal(rng)
        })
        .collect()
}

/// The diagonal of `Λ`: `cos(kπ/p) + 1.5` for `k = 1..=p`.
pub fn mean_shift_eigenvalues(p: usize) -> Vec<f64> {
    (1..=p)
        .map(|k| (k as f64 * std::f64::consts::PI / p as f64).cos() + 1.5)
        .collect()
}

/// Orthogonal `U` whose first column is `p^{-1/2}·1`, completed by
/// Gram–Schmidt over the standard basis.
pub fn mean_shift_basis(p: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = vec![DVector::from_element(p, 1.0 / (p as f64).sqrt())];
    for e in 0..p {
        if cols.len() == p {
            break;
        }
        let mut v = DVector::zeros(p);
        v[e] = 1.0;
        // two passes keep the basis orthogonal to rounding level
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v.axpy(-proj, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_columns(&cols)
}

/// `U Λ^{1/2}`, so that `U Λ^{1/2} z` has covariance `U Λ Uᵀ`.
fn mean_shift_factor(p: usize) -> DMatrix<f64> {
    let mut a = mean_shift_basis(p);
    for (k, l) in mean_shift_eigenvalues(p).into_iter().enumerate() {
        a.column_mut(k).scale_mut(l.sqrt());
    }
    a
}

/// `U Λ Uᵀ`.
pub fn mean_shift_covariance(p: usize) -> DMatrix<f64> {
    let a = mean_shift_factor(p);
    &a * a.transpose()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Grid points `t_k = −w + (k + 1)·h`, `h = 2w / res`.
pub fn gauss2d_grid_points(res: usize) -> Vec<f64> {
    let h = 2.0 * GAUSS2D_WINDOW / res as f64;
    (0..res)
        .map(|k| -GAUSS2D_WINDOW + (k + 1) as f64 * h)
        .collect()
}

/// CDF of `N(z, 0.25 I₂)` on the grid. The last row and column are taken at
/// `+∞`, so each object is the exact CDF of its law clamped into the window.
/// Row `r` indexes the second coordinate, column `c` the first.
pub fn gauss2d_cdf_grid(z: [f64; 2], res: usize) -> Grid {
    let pts = gauss2d_grid_points(res);
    let marginal = |center: f64| -> Vec<f64> {
        pts.iter()
            .enumerate()
            .map(|(k, &t)| {
                if k + 1 == res {
                    1.0
                } else {
                    std_normal_cdf((t - center) / 0.5)
                }
            })
            .collect()
    };
    let (f1, f2) = (marginal(z[0]), marginal(z[1]));
    let values = f2
        .iter()
        .flat_map(|&b| f1.iter().map(move |&a| a * b))
        .collect();
    Grid::new(res, res, values).expect("square grid")
}

fn gauss2d(
    count: usize,
    res: usize,
    center: [f64; 2],
    sd: f64,
    rng: &mut StreamRng,
) -> Vec<Object> {
    (0..count)
        .map(|_| {
            let z = [center[0] + sd * normal(rng), center[1] + sd * normal(rng)];
            Object::CdfGrid(gauss2d_cdf_grid(z, res))
        })
        .collect()
}

/// Growing tree: nodes 0 and 1 start joined, then each new node attaches by
/// one edge to an existing node chosen with probability ∝ degree^θ.
pub fn prefattach(nodes: usize, theta: f64, rng: &mut StreamRng) -> Adjacency {
    let mut degree = vec![0usize; nodes];
    let mut edges = Vec::with_capacity(nodes.saturating_sub(1));
    if nodes >= 2 {
        edges.push((0, 1));
        degree[0] = 1;
        degree[1] = 1;
    }
    for new in 2..nodes {
        let target = if theta == 0.0 {
            rng.random_range(0..new)
        } else {
            let weights = degree[..new].iter().map(|&d| (d as f64).powf(theta));
            WeightedIndex::new(weights)
                .expect("existing nodes have positive degree")
                .sample(rng)
        };
        edges.push((target, new));
        degree[target] += 1;
        degree[new] = 1;
    }
    Adjacency::from_edges(nodes, &edges).expect("valid tree edges")
}

/// Empirical rejection rates over a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub scenario: ScenarioName,
    pub test: TestMethod,
    pub grid: Vec<f64>,
    pub rates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub runs: usize,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConfig {
    pub runs: usize,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Runs one test on one generated pair; `true` when it rejects at `alpha`.
pub fn run_once(
    spec: &ScenarioSpec,
    test: TestMethod,
    k: usize,
    alpha: f64,
    seed: u64,
) -> Result<bool> {
    let (x, y) = spec.generate(child_seed(seed, &[0]))?;
    let perm_seed = child_seed(seed, &[1]);
    let result = match test {
        TestMethod::Dp => {
            let p = PooledDistances::from_samples(&spec.metric(), &x, &y)?;
            dp_test(&p, &WeightProfile::unit(), k, alpha, perm_seed)?
        }
        TestMethod::Energy => {
            let p = PooledDistances::from_samples(&spec.metric(), &x, &y)?;
            energy_test(&p, k, alpha, perm_seed)?
        }
        TestMethod::Hotelling => {
            let to_rows = |s: &ObjectSample| -> Vec<Vec<f64>> {
                s.as_vectors()
                    .expect("vector scenario")
                    .into_iter()
                    .map(<[f64]>::to_vec)
                    .collect()
            };
            let v = PooledVectors::new(&to_rows(&x), &to_rows(&y))?;
            hotelling_test(&v, Ridge::Default, k, alpha, perm_seed)?
        }
    };
    Ok(result.rejects())
}

/// Rejection rate of `test` at every grid value. Run `r` at grid index `g`
/// uses the substream keyed by `(seed, g, r)`, so the data drawn for a run
/// do not depend on the test being studied.
pub fn power_study(
    name: ScenarioName,
    size: usize,
    n: usize,
    m: usize,
    grid: &[f64],
    test: TestMethod,
    cfg: PowerConfig,
) -> Result<PowerCurve> {
    if cfg.runs < 1 || cfg.k < 1 {
        return Err(Error::arg("runs and K must be at least 1"));
    }
    if grid.is_empty() {
        return Err(Error::arg("empty parameter grid"));
    }
    if test == TestMethod::Hotelling && !name.is_vector() {
        return Err(Error::Unsupported(format!(
            "Hotelling's test needs vector data; {name} produces {}",
            ScenarioSpec::new(name, size, 0.0, 1, 1)
                .metric()
                .kind
                .encoding()
        )));
    }
    let mut rates = Vec::with_capacity(grid.len());
    let mut standard_errors = Vec::with_capacity(grid.len());
    for (g, &param) in grid.iter().enumerate() {
        let spec = ScenarioSpec::new(name, size, param, n, m);
        spec.validate()?;
        let rejections = par::try_map_indexed(cfg.runs, |r| {
            run_once(
                &spec,
                test,
                cfg.k,
                cfg.alpha,
                child_seed(cfg.seed, &[g as u64, r as u64]),
            )
        })?;
        let rate = rejections.iter().filter(|&&b| b).count() as f64 / cfg.runs as f64;
        rates.push(rate);
        standard_errors.push((rate * (1.0 - rate) / cfg.runs as f64).sqrt());
    }
    Ok(PowerCurve {
        scenario: name,
        test,
        grid: grid.to_vec(),
        rates,
        standard_errors,
        runs: cfg.runs,
        k: cfg.k,
        alpha: cfg.alpha,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_for_p4() {
        let l = mean_shift_eigenvalues(4);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [1.5 + h, 1.5, 1.5 - h, 0.5];
        for (a, b) in l.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_is_orthogonal_with_fixed_first_column() {
        for p in [2, 5, 30] {
            let u = mean_shift_basis(p);
            let gram = u.transpose() * &u;
            assert!((gram - DMatrix::identity(p, p)).abs().max() < 1e-12);
            for i in 0..p {
                assert!((u[(i, 0)] - 1.0 / (p as f64).sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn generation_is_reproducible() {
        for name in ScenarioName::ALL {
            let size = match name {
                ScenarioName::Gauss2dMeanShift | ScenarioName::Gauss2dScaleChange => 16,
                ScenarioName::PrefAttach => 20,
                _ => 10,
            };
            let param = if name == ScenarioName::MvnormVsT {
                5.0
            } else {
                0.3
            };
            let spec = ScenarioSpec::new(name, size, param, 4, 3);
            let a = spec.generate(11).unwrap();
            assert_eq!(a, spec.generate(11).unwrap());
            assert_ne!(a, spec.generate(12).unwrap());
            assert_eq!((a.0.len(), a.1.len()), (4, 3));
        }
    }

    #[test]
    fn invalid_scenarios() {
        let bad = [
            ScenarioSpec::new(ScenarioName::MvnormScaleChange, 5, 0.8, 3, 3),
            ScenarioSpec::new(ScenarioName::MvnormMeanShift, 1, 0.0, 3, 3),
            ScenarioSpec::new(ScenarioName::MvnormVsMixture, 4, 0.5, 3, 3),
            ScenarioSpec::new(ScenarioName::MvnormVsT, 4, 0.0, 3, 3),
            ScenarioSpec::new(ScenarioName::Gauss2dMeanShift, 8, 0.0, 3, 3),
            ScenarioSpec::new(ScenarioName::PrefAttach, 10, -1.0, 3, 3),
        ];
        for s in bad {
            assert!(s.generate(1).is_err(), "{s:?}");
        }
    }

    #[test]
    fn cdf_grid_shape() {
        let g = gauss2d_cdf_grid([0.0, 0.0], 64);
        assert!((g.at(31, 31) - 0.25).abs() < 1e-15);
        assert!(g.at(63, 63) >= 1.0 - 1e-4);
        assert!(Object::CdfGrid(g).validate().is_ok());
        let far = gauss2d_cdf_grid([3.9, -3.0], 16);
        assert!(Object::CdfGrid(far).validate().is_ok());
    }

    #[test]
    fn prefattach_is_a_tree() {
        let mut rng = substream(3, &[]);
        for theta in [0.0, 0.5, 5.0] {
            let a = prefattach(50, theta, &mut rng);
            assert_eq!(a.edges().count(), 49);
            assert_eq!(a.degrees().iter().sum::<f64>(), 98.0);
        }
    }

    #[test]
    fn power_study_degenerate_runs() {
        let cfg = PowerConfig {
            runs: 1,
            k: 9,
            alpha: 0.05,
            seed: 2,
        };
        let c = power_study(
            ScenarioName::MvnormScaleChange,
            3,
            5,
            5,
            &[0.0, 0.5],
            TestMethod::Dp,
            cfg,
        )
        .unwrap();
        assert!(c.rates.iter().all(|&r| r == 0.0 || r == 1.0));
        assert!(power_study(
            ScenarioName::PrefAttach,
            10,
            5,
            5,
            &[0.0],
            TestMethod::Hotelling,
            cfg
        )
        .is_err());
    }
}
