//! The `dprof` command line: ingestion, analyses and machine-readable output.
//!
//! Exit codes: 0 on success, 2 on invalid input or arguments, 1 on
//! internal failures such as unwritable output.

pub mod ingest;
pub mod output;

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dprof::baselines::{energy_test, hotelling_test, PooledVectors, Ridge};
use dprof::descriptive::{
    frechet_mean_exact, frechet_mean_sample, metric_correlation, metric_covariance, metric_variance,
};
use dprof::embedding::{classical_mds, profile_mds, MdsEmbedding};
use dprof::onedim::barycenter;
use dprof::rank::{rank_all, transport_quantile_set, trim};
use dprof::simulation::{power_study, PowerConfig, ScenarioName, ScenarioSpec};
use dprof::two_sample::dp_test;
use dprof::{
    build_profiles, cross_distance_matrix, distance_matrix, DistanceMatrix, EmpiricalDistribution,
    MetricKind, MetricSpec, Object, ObjectSample, PooledDistances, ProfileMode, RankReport,
    TestMethod, TestResult, WeightProfile,
};

use ingest::{ingest, Data, Format, GridShape};

pub const DEFAULT_SEED: u64 = 42;
/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "DPROF_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] dprof::Error),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write output: {0}")]
    Write(#[from] io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Core(_) | CliError::Read { .. } => 2,
            CliError::Write(_) | CliError::Internal(_) => 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "dprof",
    version,
    about = "Distance-profile statistics for random objects in metric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum MetricArg {
    Euclidean,
    Wasserstein1d,
    L2cdf,
    SphereGeodesic,
    FisherRao,
    Frobenius,
    Precomputed,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Euclidean => MetricKind::Euclidean,
            MetricArg::Wasserstein1d => MetricKind::Wasserstein1d,
            MetricArg::L2cdf => MetricKind::L2Cdf,
            MetricArg::SphereGeodesic => MetricKind::SphereGeodesic,
            MetricArg::FisherRao => MetricKind::FisherRao,
            MetricArg::Frobenius => MetricKind::Frobenius,
            MetricArg::Precomputed => MetricKind::Precomputed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input CSV file, or directory of CSV files for adjacency_dir.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long, value_enum)]
    pub format: Format,
    /// Metric; defaults to the natural metric of the format.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// The first row of every CSV is a header.
    #[arg(long)]
    pub header: bool,
    /// Grid shape ROWSxCOLS for cdfgrid_csv and densitygrid_csv (default: square).
    #[arg(long)]
    pub grid_shape: Option<GridShape>,
    /// Grid cell area for l2cdf and fisher_rao.
    #[arg(long)]
    pub cell_area: Option<f64>,
}

impl InputArgs {
    fn spec(&self) -> Result<MetricSpec, CliError> {
        let kind = self
            .metric
            .map(MetricKind::from)
            .unwrap_or_else(|| self.format.default_metric());
        Ok(match self.cell_area {
            Some(a) => MetricSpec::with_cell_area(kind, a)?,
            None => MetricSpec::new(kind),
        })
    }

    fn load(&self, path: &Path) -> Result<Data, CliError> {
        ingest(path, self.format, self.header, self.grid_shape)
    }

    fn objects(&self, path: &Path) -> Result<ObjectSample, CliError> {
        match self.load(path)? {
            Data::Objects(s) => Ok(s),
            Data::Matrix(_) => Err(invalid(
                "this operation needs objects, not a distance matrix",
            )),
        }
    }

    fn distances(&self) -> Result<DistanceMatrix, CliError> {
        match self.load(&self.input)? {
            Data::Matrix(d) => Ok(d),
            Data::Objects(s) => Ok(distance_matrix(&self.spec()?, &s)?),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dp,
    Energy,
    Hotelling,
}

impl From<MethodArg> for TestMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dp => TestMethod::Dp,
            MethodArg::Energy => TestMethod::Energy,
            MethodArg::Hotelling => TestMethod::Hotelling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MdsKind {
    Object,
    Profile,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise distance matrix.
    Dist {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sorted distance profile of every object, one row per object.
    Profiles {
        #[command(flatten)]
        input: InputArgs,
        /// Drop each object's zero self-distance.
        #[arg(long)]
        leave_one_out: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Transport ranks, median set, center-outward groups and group barycenters.
    Ranks {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Write per-group Wasserstein barycenters of the profiles (quantile grids).
        #[arg(long)]
        barycenters: Option<PathBuf>,
        /// Number of quantile levels (k - 1/2)/m in barycenter grids.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Also write kernel density curves of the group barycenters.
        #[arg(long)]
        emit_density: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Smallest transport quantile set reaching mass zeta.
    QuantileSet {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        zeta: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Objects whose rank is at least alpha0.
    Trim {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        alpha0: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Permutation two-sample test; writes a JSON document.
    Test {
        #[command(flatten)]
        input: InputArgs,
        /// Second sample (same format). Omit with distmatrix_csv and use --split.
        #[arg(long)]
        input2: Option<PathBuf>,
        /// With a pooled distance matrix: the first `split` rows are sample one.
        #[arg(long)]
        split: Option<usize>,
        #[arg(long, value_enum, default_value = "dp")]
        method: MethodArg,
        /// Number of permutations.
        #[arg(short = 'K', long = "permutations", default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Ridge for Hotelling's pooled covariance (default 1e-8 trace(S)/p).
        #[arg(long)]
        ridge: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Classical MDS on object distances or on the profile metric.
    Mds {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value = "profile")]
        kind: MdsKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Fréchet mean and variance, metric variance; metric covariance and
    /// correlation when a paired second sample is given.
    Describe {
        #[command(flatten)]
        input: InputArgs,
        /// Paired second sample (same format and size).
        #[arg(long)]
        input2: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw one two-sample scenario and write both samples.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        param: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Directory receiving x/y files (x.csv, y.csv or x/, y/ for networks).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Monte-Carlo rejection rates over a parameter grid.
    Power {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long, value_enum, default_value = "dp")]
        test: MethodArg,
        #[arg(long, default_value_t = 500)]
        runs: usize,
        #[arg(short = 'K', long = "permutations", default_value_t = 1000)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// mvnorm_mean_shift, mvnorm_scale_change, mvnorm_vs_mixture, mvnorm_vs_t,
    /// gauss2d_distn_mean_shift, gauss2d_distn_scale_change or prefattach_network.
    #[arg(long)]
    pub scenario: ScenarioName,
    /// Dimension, grid resolution or node count (scenario default when omitted).
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(short, long, default_value_t = 100)]
    pub n: usize,
    #[arg(short, long, default_value_t = 100)]
    pub m: usize,
}

impl ScenarioArgs {
    fn size(&self) -> usize {
        self.size.unwrap_or_else(|| self.scenario.default_size())
    }
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Dist { input, out } => {
            let d = input.distances()?;
            let mut w = output::open(out.output.as_deref())?;
            output::matrix(&mut w, &d)?;
            w.flush()?;
        }
        Command::Profiles {
            input,
            leave_one_out,
            out,
        } => {
            let mode = if leave_one_out {
                ProfileMode::LeaveOneOut
            } else {
                ProfileMode::WithSelf
            };
            let p = build_profiles(&input.distances()?, mode)?;
            let mut w = output::open(out.output.as_deref())?;
            for prof in p.profiles() {
                output::row(&mut w, prof.atoms())?;
            }
            w.flush()?;
        }
        Command::Ranks {
            input,
            bins,
            barycenters,
            grid,
            emit_density,
            out,
        } => ranks(
            &input,
            bins,
            barycenters.as_deref(),
            grid,
            emit_density.as_deref(),
            &out,
        )?,
        Command::QuantileSet { input, zeta, out } => {
            let ranks = ranks_of(&input)?;
            let (alpha, set) = transport_quantile_set(&ranks, zeta)?;
            let mut w = output::open(out.output.as_deref())?;
            output::comment(&mut w, &format!("zeta={zeta} alpha={alpha}"))?;
            write_index_ranks(&mut w, &set, &ranks)?;
        }
        Command::Trim { input, alpha0, out } => {
            let ranks = ranks_of(&input)?;
            let kept = trim(&ranks, alpha0);
            let mut w = output::open(out.output.as_deref())?;
            output::comment(&mut w, &format!("alpha0={alpha0} kept={}", kept.len()))?;
            write_index_ranks(&mut w, &kept, &ranks)?;
        }
        Command::Test {
            input,
            input2,
            split,
            method,
            k,
            alpha,
            seed,
            ridge,
            out,
        } => {
            let r = two_sample(
                &input,
                input2.as_deref(),
                split,
                method.into(),
                k,
                alpha,
                seed,
                ridge,
            )?;
            let mut w = output::open(out.output.as_deref())?;
            output::json(
                &mut w,
                &json!({
                    "method": r.method.name(),
                    "statistic": r.statistic,
                    "p_value": r.p_value,
                    "K": r.k,
                    "q_alpha_hat": r.q_alpha_hat,
                    "alpha": r.alpha,
                    "seed": r.seed,
                    "n": r.n,
                    "m": r.m,
                }),
            )?;
            w.flush()?;
        }
        Command::Mds {
            input,
            kind,
            dim,
            out,
        } => {
            let d = input.distances()?;
            let e = match kind {
                MdsKind::Object => classical_mds(&d, dim)?,
                MdsKind::Profile => profile_mds(&build_profiles(&d, ProfileMode::WithSelf)?, dim)?,
            };
            write_mds(&e, &out)?;
        }
        Command::Describe { input, input2, out } => describe(&input, input2.as_deref(), &out)?,
        Command::Simulate {
            scenario,
            param,
            seed,
            out_dir,
        } => simulate(&scenario, param, seed, &out_dir)?,
        Command::Power {
            scenario,
            grid,
            test,
            runs,
            k,
            alpha,
            seed,
            out,
        } => {
            let cfg = PowerConfig {
                runs,
                k,
                alpha,
                seed,
            };
            let c = power_study(
                scenario.scenario,
                scenario.size(),
                scenario.n,
                scenario.m,
                &grid,
                test.into(),
                cfg,
            )?;
            let mut w = output::open(out.output.as_deref())?;
            output::comment(
                &mut w,
                &format!(
                    "seed={seed} scenario={} size={} n={} m={} test={} runs={runs} K={k} alpha={alpha}",
                    c.scenario,
                    scenario.size(),
                    scenario.n,
                    scenario.m,
                    c.test
                ),
            )?;
            output::row(&mut w, ["param", "rate", "se"])?;
            for ((g, r), s) in c.grid.iter().zip(&c.rates).zip(&c.standard_errors) {
                output::row(&mut w, [g, r, s])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn ranks_of(input: &InputArgs) -> Result<Vec<f64>, CliError> {
    let p = build_profiles(&input.distances()?, ProfileMode::WithSelf)?;
    Ok(rank_all(&p)?)
}

fn write_index_ranks(w: &mut output::Sink, idx: &[usize], ranks: &[f64]) -> Result<(), CliError> {
    output::row(w, ["index", "rank"])?;
    for &i in idx {
        writeln!(w, "{i},{}", ranks[i])?;
    }
    w.flush()?;
    Ok(())
}

fn ranks(
    input: &InputArgs,
    bins: usize,
    barycenters: Option<&Path>,
    grid: usize,
    density: Option<&Path>,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let profiles = build_profiles(&input.distances()?, ProfileMode::WithSelf)?;
    let report = RankReport::new(&profiles, bins)?;
    let mut w = output::open(out.output.as_deref())?;
    output::comment(
        &mut w,
        &format!(
            "bins={bins} thresholds={}",
            report
                .thresholds
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";")
        ),
    )?;
    output::row(&mut w, ["index", "rank", "group", "median"])?;
    for (i, r) in report.ranks.iter().enumerate() {
        let median = u8::from(report.median_indices.contains(&i));
        writeln!(w, "{i},{r},{},{median}", report.group_labels[i])?;
    }
    w.flush()?;
    if barycenters.is_none() && density.is_none() {
        return Ok(());
    }
    let mut bary = Vec::with_capacity(bins);
    for g in 1..=bins {
        let members: Vec<EmpiricalDistribution> = (0..profiles.len())
            .filter(|&i| report.group_labels[i] == g)
            .map(|i| profiles.get(i).clone())
            .collect();
        bary.push(if members.is_empty() {
            None
        } else {
            Some(barycenter(&members, grid)?)
        });
    }
    if let Some(path) = barycenters {
        let mut w = output::open(Some(path))?;
        output::comment(
            &mut w,
            &format!("quantile levels u_k = (k - 0.5)/{grid}, k = 1..{grid}"),
        )?;
        let mut names = vec!["group".to_string()];
        names.extend((1..=grid).map(|k| format!("q{k}")));
        output::header(&mut w, &names)?;
        for (g, b) in bary.iter().enumerate() {
            if let Some(b) = b {
                write!(w, "{},", g + 1)?;
                output::row(&mut w, b.atoms())?;
            }
        }
        w.flush()?;
    }
    if let Some(path) = density {
        write_densities(path, &bary)?;
    }
    Ok(())
}

/// Silverman's rule of thumb, falling back to a small positive width for
/// degenerate inputs.
fn silverman_bandwidth(atoms: &[f64]) -> f64 {
    let n = atoms.len() as f64;
    let mean = atoms.iter().sum::<f64>() / n;
    let sd =
        (atoms.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let q = |p: f64| atoms[((p * (n - 1.0)).round() as usize).min(atoms.len() - 1)];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * n.powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1e-3 * mean.abs().max(1.0)
    }
}

fn write_densities(path: &Path, bary: &[Option<EmpiricalDistribution>]) -> Result<(), CliError> {
    const POINTS: usize = 128;
    let present: Vec<(usize, &EmpiricalDistribution)> = bary
        .iter()
        .enumerate()
        .filter_map(|(g, b)| b.as_ref().map(|b| (g + 1, b)))
        .collect();
    let widths: Vec<f64> = present
        .iter()
        .map(|(_, b)| silverman_bandwidth(b.atoms()))
        .collect();
    let hmax = widths.iter().copied().fold(0.0, f64::max);
    let lo = present
        .iter()
        .map(|(_, b)| b.min())
        .fold(f64::INFINITY, f64::min)
        - 3.0 * hmax;
    let hi = present
        .iter()
        .map(|(_, b)| b.max())
        .fold(f64::NEG_INFINITY, f64::max)
        + 3.0 * hmax;
    let mut w = output::open(Some(path))?;
    let bw: Vec<String> = present
        .iter()
        .zip(&widths)
        .map(|((g, _), h)| format!("group{g}={h}"))
        .collect();
    output::comment(
        &mut w,
        &format!("gaussian kernel, Silverman bandwidth {}", bw.join(" ")),
    )?;
    let mut names = vec!["x".to_string()];
    names.extend(present.iter().map(|(g, _)| format!("group{g}")));
    output::header(&mut w, &names)?;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    for k in 0..POINTS {
        let x = lo + (hi - lo) * k as f64 / (POINTS - 1) as f64;
        let mut vals = vec![x];
        for ((_, b), &h) in present.iter().zip(&widths) {
            let dens = b
                .atoms()
                .iter()
                .zip(b.weights())
                .map(|(a, wt)| wt * norm * (-0.5 * ((x - a) / h).powi(2)).exp() / h)
                .sum::<f64>();
            vals.push(dens);
        }
        output::row(&mut w, vals)?;
    }
    w.flush()?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn two_sample(
    input: &InputArgs,
    input2: Option<&Path>,
    split: Option<usize>,
    method: TestMethod,
    k: usize,
    alpha: f64,
    seed: u64,
    ridge: Option<f64>,
) -> Result<TestResult, CliError> {
    let ridge = ridge.map_or(Ridge::Default, Ridge::Value);
    match (input.load(&input.input)?, input2, split) {
        (Data::Matrix(d), None, Some(n)) => {
            if method == TestMethod::Hotelling {
                return Err(invalid(
                    "Hotelling's test needs raw vectors, not a distance matrix",
                ));
            }
            let p = PooledDistances::new(d, n)?;
            distance_test(&p, method, k, alpha, seed)
        }
        (Data::Matrix(_), _, _) => Err(invalid(
            "a pooled distance matrix needs --split and no --input2",
        )),
        (Data::Objects(_), _, Some(_)) => {
            Err(invalid("--split only applies to distmatrix_csv input"))
        }
        (Data::Objects(_), None, None) => {
            Err(invalid("the second sample is missing: pass --input2"))
        }
        (Data::Objects(x), Some(path2), None) => {
            let y = input.objects(path2)?;
            if method == TestMethod::Hotelling {
                let rows = |s: &ObjectSample| -> Result<Vec<Vec<f64>>, CliError> {
                    s.as_vectors()
                        .map(|v| v.into_iter().map(<[f64]>::to_vec).collect())
                        .ok_or_else(|| invalid("Hotelling's test needs vectors_csv input"))
                };
                let v = PooledVectors::new(&rows(&x)?, &rows(&y)?)?;
                return Ok(hotelling_test(&v, ridge, k, alpha, seed)?);
            }
            let p = PooledDistances::from_samples(&input.spec()?, &x, &y)?;
            distance_test(&p, method, k, alpha, seed)
        }
    }
}

fn distance_test(
    p: &PooledDistances,
    method: TestMethod,
    k: usize,
    alpha: f64,
    seed: u64,
) -> Result<TestResult, CliError> {
    Ok(match method {
        TestMethod::Dp => dp_test(p, &WeightProfile::unit(), k, alpha, seed)?,
        TestMethod::Energy => energy_test(p, k, alpha, seed)?,
        TestMethod::Hotelling => unreachable!("handled by the caller"),
    })
}

fn write_mds(e: &MdsEmbedding, out: &OutputArgs) -> Result<(), CliError> {
    let mut w = output::open(out.output.as_deref())?;
    output::comment(
        &mut w,
        &format!(
            "eigenvalues={}",
            e.eigenvalues
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";")
        ),
    )?;
    let mut names = vec!["index".to_string()];
    names.extend((1..=e.q).map(|k| format!("dim{k}")));
    output::header(&mut w, &names)?;
    for (i, c) in e.coordinates.iter().enumerate() {
        write!(w, "{i},")?;
        output::row(&mut w, c)?;
    }
    w.flush()?;
    Ok(())
}

fn describe(input: &InputArgs, input2: Option<&Path>, out: &OutputArgs) -> Result<(), CliError> {
    let data = input.load(&input.input)?;
    let spec = input.spec()?;
    let (d, objects) = match data {
        Data::Matrix(d) => (d, None),
        Data::Objects(s) => (distance_matrix(&spec, &s)?, Some(s)),
    };
    let f = frechet_mean_sample(&d)?;
    let mut doc = json!({
        "n": d.n(),
        "frechet_mean_indices": f.mean_indices,
        "frechet_variance": f.frechet_variance,
        "metric_variance": if d.n() >= 2 { json!(metric_variance(&d)?) } else { json!(null) },
    });
    if let Some(s) = &objects {
        if matches!(spec.kind, MetricKind::Euclidean | MetricKind::Wasserstein1d) {
            let mean = match frechet_mean_exact(s, &spec)? {
                Object::Vector(v) => v,
                Object::Distribution1d(q) => q.atoms().to_vec(),
                _ => unreachable!("closed forms exist only for vectors and 1-D distributions"),
            };
            doc["frechet_mean_exact"] = json!(mean);
        }
    }
    if let Some(path2) = input2 {
        let x = objects
            .ok_or_else(|| invalid("paired descriptors need objects, not a distance matrix"))?;
        let y = input.objects(path2)?;
        if x.len() != y.len() {
            return Err(invalid(format!(
                "paired samples differ in size ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        let dy = distance_matrix(&spec, &y)?;
        let dxy = cross_distance_matrix(&spec, &x, &y)?;
        doc["metric_covariance"] = json!(metric_covariance(&dxy)?);
        doc["metric_correlation"] = json!(metric_correlation(&d, &dy, &dxy)?);
    }
    let mut w = output::open(out.output.as_deref())?;
    output::json(&mut w, &doc)?;
    w.flush()?;
    Ok(())
}

fn simulate(args: &ScenarioArgs, param: f64, seed: u64, dir: &Path) -> Result<(), CliError> {
    let spec = ScenarioSpec::new(args.scenario, args.size(), param, args.n, args.m);
    let (x, y) = spec.generate(seed)?;
    let header = format!(
        "seed={seed} scenario={} size={} param={param} metric={} cell_area={}",
        spec.name,
        spec.size,
        spec.metric().kind,
        spec.metric().cell_area
    );
    std::fs::create_dir_all(dir)?;
    for (label, sample) in [("x", &x), ("y", &y)] {
        if args.scenario == ScenarioName::PrefAttach {
            let sub = dir.join(label);
            std::fs::create_dir_all(&sub)?;
            for (i, o) in sample.objects().iter().enumerate() {
                let Object::Adjacency(a) = o else {
                    return Err(CliError::Internal(
                        "network scenario produced a non-network".into(),
                    ));
                };
                let mut w = output::open(Some(&sub.join(format!("{i:05}.csv"))))?;
                output::comment(&mut w, &header)?;
                output::adjacency(&mut w, a)?;
                w.flush()?;
            }
        } else {
            let mut w = output::open(Some(&dir.join(format!("{label}.csv"))))?;
            output::comment(&mut w, &header)?;
            for o in sample.objects() {
                match o {
                    Object::Vector(v) => output::row(&mut w, v)?,
                    Object::CdfGrid(g) => output::row(&mut w, &g.values)?,
                    _ => return Err(CliError::Internal("unexpected object encoding".into())),
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Applies the thread count from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        invalid(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}
