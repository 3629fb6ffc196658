//! Object encodings and the metrics between them.
//!
//! Downstream modules only ever see a [`DistanceMatrix`] (or a
//! [`CrossMatrix`] between two samples); this module is the one place that
//! knows what an object looks like.

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::Sum;
use crate::onedim::{self, EmpiricalDistribution};
use crate::par;

/// Tolerance on terminal CDF values and composition sums.
pub const ENCODING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Euclidean,
    Wasserstein1d,
    L2Cdf,
    SphereGeodesic,
    FisherRao,
    Frobenius,
    Precomputed,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Wasserstein1d => "wasserstein1d",
            MetricKind::L2Cdf => "l2cdf",
            MetricKind::SphereGeodesic => "sphere_geodesic",
            MetricKind::FisherRao => "fisher_rao",
            MetricKind::Frobenius => "frobenius",
            MetricKind::Precomputed => "precomputed",
        }
    }

    /// The object encoding this metric consumes.
    pub fn encoding(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "vector",
            MetricKind::Wasserstein1d => "distribution1d",
            MetricKind::L2Cdf => "cdf_grid",
            MetricKind::SphereGeodesic => "composition",
            MetricKind::FisherRao => "density_grid",
            MetricKind::Frobenius => "adjacency",
            MetricKind::Precomputed => "distance_matrix",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A metric plus the grid cell area used by the grid-based kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSpec {
    pub kind: MetricKind,
    /// Area (or width, in 1-D) of one grid cell for `l2cdf` and `fisher_rao`.
    pub cell_area: f64,
}

impl MetricSpec {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            cell_area: 1.0,
        }
    }

    pub fn with_cell_area(kind: MetricKind, cell_area: f64) -> Result<Self> {
        if !(cell_area.is_finite() && cell_area > 0.0) {
            return Err(Error::arg("cell area must be positive and finite"));
        }
        Ok(Self { kind, cell_area })
    }

    pub fn euclidean() -> Self {
        Self::new(MetricKind::Euclidean)
    }
}

/// Values on a rectangular `rows × cols` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() || values.is_empty() {
            return Err(Error::GridMismatch(format!(
                "{} values do not fill a {rows}x{cols} grid",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Symmetric nonnegative matrix with zero diagonal, stored as its nonzero
/// upper-triangle entries `(i, j, w)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    order: usize,
    edges: Vec<(u32, u32, f64)>,
}

impl Adjacency {
    /// From a dense row-major `order × order` matrix; symmetry must be exact.
    pub fn from_dense(order: usize, values: &[f64]) -> Result<Self> {
        if values.len() != order * order {
            return Err(Error::arg(format!(
                "adjacency needs {} entries, found {}",
                order * order,
                values.len()
            )));
        }
        let mut edges = Vec::new();
        for i in 0..order {
            if values[i * order + i] != 0.0 {
                return Err(Error::arg(format!(
                    "adjacency diagonal ({i},{i}) is nonzero"
                )));
            }
            for j in (i + 1)..order {
                let w = values[i * order + j];
                if !w.is_finite() {
                    return Err(Error::NonFinite(format!("adjacency entry ({i},{j})")));
                }
                if w != values[j * order + i] {
                    return Err(Error::arg(format!("adjacency not symmetric at ({i},{j})")));
                }
                if w < 0.0 {
                    return Err(Error::arg(format!("adjacency entry ({i},{j}) is negative")));
                }
                if w != 0.0 {
                    edges.push((i as u32, j as u32, w));
                }
            }
        }
        Ok(Self { order, edges })
    }

    /// Unweighted graph from an undirected edge list.
    pub fn from_edges(order: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b || a >= order || b >= order {
                return Err(Error::arg(format!(
                    "invalid edge ({a},{b}) for order {order}"
                )));
            }
            edges.push((a.min(b) as u32, a.max(b) as u32, 1.0));
        }
        edges.sort_by_key(|e| (e.0, e.1));
        edges.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        Ok(Self { order, edges })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .iter()
            .map(|&(i, j, w)| (i as usize, j as usize, w))
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.order;
        let mut out = vec![0.0; n * n];
        for (i, j, w) in self.edges() {
            out[i * n + j] = w;
            out[j * n + i] = w;
        }
        out
    }

    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.order];
        for (i, j, w) in self.edges() {
            deg[i] += w;
            deg[j] += w;
        }
        deg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Object {
    Vector(Vec<f64>),
    Distribution1d(EmpiricalDistribution),
    CdfGrid(Grid),
    DensityGrid(Grid),
    Composition(Vec<f64>),
    Adjacency(Adjacency),
}

impl Object {
    pub fn encoding(&self) -> &'static str {
        match self {
            Object::Vector(_) => "vector",
            Object::Distribution1d(_) => "distribution1d",
            Object::CdfGrid(_) => "cdf_grid",
            Object::DensityGrid(_) => "density_grid",
            Object::Composition(_) => "composition",
            Object::Adjacency(_) => "adjacency",
        }
    }

    /// Checks the per-encoding constraints.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let finite = |v: &[f64]| {
            v.iter()
                .position(|x| !x.is_finite())
                .map_or(Ok(()), |k| Err(format!("non-finite value at position {k}")))
        };
        match self {
            Object::Vector(v) => {
                if v.is_empty() {
                    return Err("empty vector".into());
                }
                finite(v)
            }
            // finiteness and ordering are enforced at construction
            Object::Distribution1d(_) | Object::Adjacency(_) => Ok(()),
            Object::CdfGrid(g) => {
                finite(&g.values)?;
                for r in 0..g.rows {
                    for c in 0..g.cols {
                        let v = g.at(r, c);
                        if !(0.0..=1.0 + ENCODING_TOL).contains(&v) {
                            return Err(format!("cdf value {v} outside [0,1] at ({r},{c})"));
                        }
                        if c > 0 && v < g.at(r, c - 1) {
                            return Err(format!("cdf decreases along row {r} at column {c}"));
                        }
                        if r > 0 && v < g.at(r - 1, c) {
                            return Err(format!("cdf decreases along column {c} at row {r}"));
                        }
                    }
                }
                let last = *g.values.last().expect("nonempty grid");
                if (last - 1.0).abs() > ENCODING_TOL {
                    return Err(format!("terminal cdf value {last} is not 1"));
                }
                Ok(())
            }
            Object::DensityGrid(g) => {
                finite(&g.values)?;
                if let Some(k) = g.values.iter().position(|&v| v < 0.0) {
                    return Err(format!("negative density at position {k}"));
                }
                if g.values.iter().all(|&v| v == 0.0) {
                    return Err("density grid is identically zero".into());
                }
                Ok(())
            }
            Object::Composition(v) => {
                if v.is_empty() {
                    return Err("empty composition".into());
                }
                finite(v)?;
                if let Some(k) = v.iter().position(|&x| x < 0.0) {
                    return Err(format!("negative component at position {k}"));
                }
                let s: f64 = v.iter().sum();
                if (s - 1.0).abs() > ENCODING_TOL {
                    return Err(format!("components sum to {s}, expected 1"));
                }
                Ok(())
            }
        }
    }
}

/// A validated sample of objects sharing one encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSample {
    objects: Vec<Object>,
}

impl ObjectSample {
    pub fn new(objects: Vec<Object>) -> Result<Self> {
        if objects.is_empty() {
            return Err(Error::arg("sample must contain at least one object"));
        }
        let encoding = objects[0].encoding();
        for (index, o) in objects.iter().enumerate() {
            if o.encoding() != encoding {
                return Err(Error::InvalidObject {
                    index,
                    reason: format!("mixed encodings: {} vs {}", o.encoding(), encoding),
                });
            }
            o.validate()
                .map_err(|reason| Error::InvalidObject { index, reason })?;
        }
        Ok(Self { objects })
    }

    pub fn vectors(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Object::Vector).collect())
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn encoding(&self) -> &'static str {
        self.objects[0].encoding()
    }

    /// The raw coordinates when every object is a vector.
    pub fn as_vectors(&self) -> Option<Vec<&[f64]>> {
        self.objects
            .iter()
            .map(|o| match o {
                Object::Vector(v) => Some(v.as_slice()),
                _ => None,
            })
            .collect()
    }

    pub fn concat(&self, other: &ObjectSample) -> Result<ObjectSample> {
        let mut objects = self.objects.clone();
        objects.extend(other.objects.iter().cloned());
        ObjectSample::new(objects)
    }
}

impl From<ObjectSample> for Vec<Object> {
    fn from(s: ObjectSample) -> Self {
        s.objects
    }
}

/// Metric value between two objects.
pub fn distance(spec: &MetricSpec, a: &Object, b: &Object) -> Result<f64> {
    let mismatch = |found: &Object| Error::EncodingMismatch {
        metric: spec.kind.name(),
        expected: spec.kind.encoding(),
        found: found.encoding(),
    };
    let d = match (spec.kind, a, b) {
        (MetricKind::Euclidean, Object::Vector(x), Object::Vector(y)) => {
            same_len(x, y)?;
            let mut acc = Sum::default();
            for (p, q) in x.iter().zip(y) {
                acc.add((p - q) * (p - q));
            }
            acc.value().sqrt()
        }
        (MetricKind::Wasserstein1d, Object::Distribution1d(x), Object::Distribution1d(y)) => {
            onedim::wasserstein2(x, y)
        }
        (MetricKind::L2Cdf, Object::CdfGrid(x), Object::CdfGrid(y)) => {
            same_grid(x, y)?;
            let mut acc = Sum::default();
            for (p, q) in x.values.iter().zip(&y.values) {
                acc.add((p - q) * (p - q));
            }
            (acc.value() * spec.cell_area).sqrt()
        }
        (MetricKind::SphereGeodesic, Object::Composition(x), Object::Composition(y)) => {
            same_len(x, y)?;
            sphere_angle(x, y, 1.0)
        }
        (MetricKind::FisherRao, Object::DensityGrid(x), Object::DensityGrid(y)) => {
            same_grid(x, y)?;
            sphere_angle(&x.values, &y.values, spec.cell_area)
        }
        (MetricKind::Frobenius, Object::Adjacency(x), Object::Adjacency(y)) => {
            if x.order != y.order {
                return Err(Error::GridMismatch(format!(
                    "adjacency orders {} and {}",
                    x.order, y.order
                )));
            }
            frobenius(x, y)
        }
        (MetricKind::Precomputed, _, _) => {
            return Err(Error::Unsupported(
                "object distances under the precomputed metric".into(),
            ))
        }
        (_, a, b) => {
            let bad = if a.encoding() == spec.kind.encoding() {
                b
            } else {
                a
            };
            return Err(mismatch(bad));
        }
    };
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::NonFinite(format!("{} distance", spec.kind)))
    }
}

fn same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::GridMismatch(format!(
            "dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("object coordinates".into()));
    }
    Ok(())
}

fn same_grid(x: &Grid, y: &Grid) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::GridMismatch(format!(
            "{}x{} vs {}x{}",
            x.rows, x.cols, y.rows, y.cols
        )));
    }
    same_len(&x.values, &y.values)
}

/// Geodesic angle between the square-root embeddings of two nonnegative
/// vectors on the unit sphere of `L²(cell_area · counting measure)`.
///
/// Evaluated as `2·atan2(|u − v|, |u + v|)` on the normalized square roots,
/// which equals `arccos(clamp(⟨u, v⟩, −1, 1))` but keeps full precision for
/// nearby points and gives exactly zero for identical inputs.
fn sphere_angle(x: &[f64], y: &[f64], cell_area: f64) -> f64 {
    if x.iter().chain(y).any(|&v| v < 0.0) {
        return f64::NAN;
    }
    let norm = |v: &[f64]| {
        let mut s = Sum::default();
        v.iter().for_each(|&p| s.add(p * cell_area));
        s.value().sqrt()
    };
    let (nx, ny) = (norm(x), norm(y));
    let mut minus = Sum::default();
    let mut plus = Sum::default();
    for (&p, &q) in x.iter().zip(y) {
        let (u, v) = (p.sqrt() / nx, q.sqrt() / ny);
        minus.add((u - v) * (u - v) * cell_area);
        plus.add((u + v) * (u + v) * cell_area);
    }
    2.0 * minus.value().sqrt().atan2(plus.value().sqrt())
}

fn frobenius(x: &Adjacency, y: &Adjacency) -> f64 {
    let (a, b) = (&x.edges, &y.edges);
    let (mut i, mut j) = (0, 0);
    let mut acc = Sum::default();
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map(|e| (e.0, e.1));
        let kb = b.get(j).map(|e| (e.0, e.1));
        let diff = match (ka, kb) {
            (Some(p), Some(q)) if p == q => {
                let d = a[i].2 - b[j].2;
                i += 1;
                j += 1;
                d
            }
            (Some(p), Some(q)) if p < q => {
                i += 1;
                a[i - 1].2
            }
            (Some(_), None) => {
                i += 1;
                a[i - 1].2
            }
            _ => {
                j += 1;
                b[j - 1].2
            }
        };
        // each upper-triangle entry appears twice in the full matrix
        acc.add(2.0 * diff * diff);
    }
    acc.value().sqrt()
}

/// Symmetric nonnegative matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates exact symmetry, zero diagonal and nonnegativity.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {n}x{n} entries, found {}",
                data.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() {
                    return Err(Error::InvalidMatrix(format!(
                        "non-finite entry at ({i},{j})"
                    )));
                }
                if v < 0.0 {
                    return Err(Error::InvalidMatrix(format!("negative entry at ({i},{j})")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "nonzero diagonal at ({i},{i})"
                    )));
                }
                if v != data[j * n + i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("rows are not all of length n".into()));
        }
        Self::from_row_major(n, rows.concat())
    }

    /// Builds `d(i, j)` for `i < j` and mirrors it.
    pub fn from_upper(n: usize, f: impl Fn(usize, usize) -> f64 + Sync + Send) -> Result<Self> {
        let rows = par::map_indexed(n, |i| ((i + 1)..n).map(|j| f(i, j)).collect::<Vec<_>>());
        let mut data = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::from_row_major(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sub-matrix on `idx` (in the given order).
    pub fn gather(&self, idx: &[usize]) -> DistanceMatrix {
        let k = idx.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in idx {
            data.extend(idx.iter().map(|&j| self.get(i, j)));
        }
        Self { n: k, data }
    }

    pub fn scaled(&self, s: f64) -> Result<DistanceMatrix> {
        Self::from_row_major(self.n, self.data.iter().map(|v| v * s).collect())
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Rectangular matrix of cross-sample distances, entry `(i, j) = d(xᵢ, yⱼ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CrossMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "expected {rows}x{cols} entries, found {}",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({},{}) is negative or non-finite",
                k / cols,
                k % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl From<&DistanceMatrix> for CrossMatrix {
    fn from(d: &DistanceMatrix) -> Self {
        Self {
            rows: d.n,
            cols: d.n,
            data: d.data.clone(),
        }
    }
}

fn check_sample(spec: &MetricSpec, s: &ObjectSample) -> Result<()> {
    if spec.kind == MetricKind::Precomputed {
        return Err(Error::Unsupported(
            "object samples under the precomputed metric; ingest a distance matrix".into(),
        ));
    }
    if s.encoding() != spec.kind.encoding() {
        return Err(Error::EncodingMismatch {
            metric: spec.kind.name(),
            expected: spec.kind.encoding(),
            found: s.encoding(),
        });
    }
    Ok(())
}

/// Pairwise distances within one sample. Only `i < j` pairs are evaluated,
/// so the result is exactly symmetric.
pub fn distance_matrix(spec: &MetricSpec, sample: &ObjectSample) -> Result<DistanceMatrix> {
    check_sample(spec, sample)?;
    let objs = sample.objects();
    let n = objs.len();
    let rows = par::try_map_indexed(n, |i| {
        ((i + 1)..n)
            .map(|j| {
                distance(spec, &objs[i], &objs[j]).map_err(|e| Error::Pair {
                    i,
                    j,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let mut data = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    DistanceMatrix::from_row_major(n, data)
}

/// Distances from every object of `x` to every object of `y`.
pub fn cross_distance_matrix(
    spec: &MetricSpec,
    x: &ObjectSample,
    y: &ObjectSample,
) -> Result<CrossMatrix> {
    check_sample(spec, x)?;
    check_sample(spec, y)?;
    let (xs, ys) = (x.objects(), y.objects());
    let rows = par::try_map_indexed(xs.len(), |i| {
        ys.iter()
            .enumerate()
            .map(|(j, yo)| {
                distance(spec, &xs[i], yo).map_err(|e| Error::Pair {
                    i,
                    j,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    CrossMatrix::from_row_major(xs.len(), ys.len(), rows.concat())
}
