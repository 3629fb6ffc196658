//! CSV ingestion with per-encoding validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use dprof::{
    Adjacency, DistanceMatrix, EmpiricalDistribution, Grid, MetricKind, Object, ObjectSample,
};

use crate::CliError;

/// Symmetry tolerance for precomputed distance matrices.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Format {
    VectorsCsv,
    QuantilesCsv,
    CdfgridCsv,
    DensitygridCsv,
    CompositionsCsv,
    AdjacencyDir,
    DistmatrixCsv,
}

impl Format {
    /// The metric used when none is given explicitly.
    pub fn default_metric(self) -> MetricKind {
        match self {
            Format::VectorsCsv => MetricKind::Euclidean,
            Format::QuantilesCsv => MetricKind::Wasserstein1d,
            Format::CdfgridCsv => MetricKind::L2Cdf,
            Format::DensitygridCsv => MetricKind::FisherRao,
            Format::CompositionsCsv => MetricKind::SphereGeodesic,
            Format::AdjacencyDir => MetricKind::Frobenius,
            Format::DistmatrixCsv => MetricKind::Precomputed,
        }
    }
}

/// `rows x cols` for grid formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for GridShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("grid shape '{s}' is not of the form ROWSxCOLS"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| format!("invalid grid dimension '{v}'"))
        };
        Ok(GridShape {
            rows: parse(r)?,
            cols: parse(c)?,
        })
    }
}

/// Either objects or a precomputed matrix.
#[derive(Debug, Clone)]
pub enum Data {
    Objects(ObjectSample),
    Matrix(DistanceMatrix),
}

fn invalid(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {msg}", path.display()))
}

/// Reads a numeric CSV; lines starting with `#` are comments. Row and
/// column numbers in errors are 1-based and count data rows only.
pub fn read_numeric_csv(path: &Path, header: bool) -> Result<Vec<Vec<f64>>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| invalid(path, format!("row {}: {e}", r + 1)))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                let v: f64 = field.parse().map_err(|_| {
                    invalid(
                        path,
                        format!("row {}, column {}: '{field}' is not a number", r + 1, c + 1),
                    )
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(invalid(
                        path,
                        format!("row {}, column {}: non-finite value", r + 1, c + 1),
                    ))
                }
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(invalid(path, "no data rows"));
    }
    Ok(rows)
}

fn equal_lengths(path: &Path, rows: &[Vec<f64>]) -> Result<usize, CliError> {
    let len = rows[0].len();
    if let Some(r) = rows.iter().position(|row| row.len() != len) {
        return Err(invalid(
            path,
            format!("row {} has {} values, expected {len}", r + 1, rows[r].len()),
        ));
    }
    Ok(len)
}

fn grid_shape(path: &Path, len: usize, shape: Option<GridShape>) -> Result<GridShape, CliError> {
    let shape = match shape {
        Some(s) => s,
        None => {
            let side = (len as f64).sqrt().round() as usize;
            if side * side != len {
                return Err(invalid(
                    path,
                    format!("rows of {len} values are not square grids; pass --grid-shape"),
                ));
            }
            GridShape {
                rows: side,
                cols: side,
            }
        }
    };
    if shape.rows * shape.cols != len {
        return Err(invalid(
            path,
            format!(
                "grid shape {}x{} does not match rows of {len} values",
                shape.rows, shape.cols
            ),
        ));
    }
    Ok(shape)
}

fn objects_from_rows(
    path: &Path,
    rows: Vec<Vec<f64>>,
    make: impl Fn(usize, Vec<f64>) -> Result<Object, CliError>,
) -> Result<ObjectSample, CliError> {
    let objects = rows
        .into_iter()
        .enumerate()
        .map(|(r, row)| {
            let o = make(r, row)?;
            o.validate()
                .map_err(|e| invalid(path, format!("row {}: {e}", r + 1)))?;
            Ok(o)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ObjectSample::new(objects)?)
}

/// Loads `path` in the given format.
pub fn ingest(
    path: &Path,
    format: Format,
    header: bool,
    shape: Option<GridShape>,
) -> Result<Data, CliError> {
    match format {
        Format::AdjacencyDir => return read_adjacency_dir(path, header).map(Data::Objects),
        Format::DistmatrixCsv => return read_distance_matrix(path, header).map(Data::Matrix),
        _ => {}
    }
    let rows = read_numeric_csv(path, header)?;
    let len = equal_lengths(path, &rows)?;
    let sample = match format {
        Format::VectorsCsv => objects_from_rows(path, rows, |_, row| Ok(Object::Vector(row)))?,
        Format::QuantilesCsv => objects_from_rows(path, rows, |r, row| {
            if let Some(c) = row.windows(2).position(|w| w[1] < w[0]) {
                return Err(invalid(
                    path,
                    format!("row {}, column {}: quantiles decrease", r + 1, c + 2),
                ));
            }
            Ok(Object::Distribution1d(EmpiricalDistribution::from_sorted(
                row,
            )?))
        })?,
        Format::CdfgridCsv | Format::DensitygridCsv => {
            let s = grid_shape(path, len, shape)?;
            objects_from_rows(path, rows, |_, row| {
                let g = Grid::new(s.rows, s.cols, row)?;
                Ok(if format == Format::CdfgridCsv {
                    Object::CdfGrid(g)
                } else {
                    Object::DensityGrid(g)
                })
            })?
        }
        Format::CompositionsCsv => {
            objects_from_rows(path, rows, |_, row| Ok(Object::Composition(row)))?
        }
        Format::AdjacencyDir | Format::DistmatrixCsv => unreachable!("handled above"),
    };
    Ok(Data::Objects(sample))
}

fn read_adjacency_dir(dir: &Path, header: bool) -> Result<ObjectSample, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Read {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(invalid(dir, "no .csv files in directory"));
    }
    let objects = files
        .iter()
        .map(|f| {
            let rows = read_numeric_csv(f, header)?;
            let order = rows.len();
            if let Some(r) = rows.iter().position(|row| row.len() != order) {
                return Err(invalid(
                    f,
                    format!(
                        "row {} has {} values; adjacency must be {order}x{order}",
                        r + 1,
                        rows[r].len()
                    ),
                ));
            }
            let dense: Vec<f64> = rows.into_iter().flatten().collect();
            Adjacency::from_dense(order, &dense)
                .map(Object::Adjacency)
                .map_err(|e| invalid(f, e))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ObjectSample::new(objects)?)
}

/// Reads a square matrix, checks symmetry within [`SYMMETRY_TOL`] and
/// symmetrizes by averaging.
pub fn read_distance_matrix(path: &Path, header: bool) -> Result<DistanceMatrix, CliError> {
    let rows = read_numeric_csv(path, header)?;
    let n = rows.len();
    if let Some(r) = rows.iter().position(|row| row.len() != n) {
        return Err(invalid(
            path,
            format!(
                "row {} has {} values; distance matrix must be {n}x{n}",
                r + 1,
                rows[r].len()
            ),
        ));
    }
    let mut worst = (0.0f64, 0, 0);
    #[allow(clippy::needless_range_loop)]
    for i in 0..n {
        if rows[i][i] != 0.0 {
            return Err(invalid(
                path,
                format!(
                    "diagonal entry ({}, {}) is {}, expected 0",
                    i + 1,
                    i + 1,
                    rows[i][i]
                ),
            ));
        }
        for j in 0..n {
            if rows[i][j] < 0.0 {
                return Err(invalid(
                    path,
                    format!("entry ({}, {}) is negative", i + 1, j + 1),
                ));
            }
            let gap = (rows[i][j] - rows[j][i]).abs();
            if j > i && gap > worst.0 {
                worst = (gap, i, j);
            }
        }
    }
    if worst.0 > SYMMETRY_TOL {
        let (gap, i, j) = worst;
        return Err(invalid(
            path,
            format!(
                "matrix is not symmetric: |D[{i1},{j1}] - D[{j1},{i1}]| = {gap:e} exceeds {SYMMETRY_TOL:e} (row {i1}, column {j1})",
                i1 = i + 1,
                j1 = j + 1
            ),
        ));
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = if rows[i][j] == rows[j][i] {
                rows[i][j]
            } else {
                0.5 * (rows[i][j] + rows[j][i])
            };
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix::from_row_major(n, data)?)
}
