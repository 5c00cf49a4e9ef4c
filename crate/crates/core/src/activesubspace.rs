//! Active subspaces of a scalar function sampled on a parameter box.
//!
//! The pipeline is: sample table -> gradients (local-linear regression or
//! central differences) -> uncentered covariance `(1/N) sum g g^T` ->
//! sorted eigendecomposition with bootstrap intervals -> active dimension ->
//! polynomial response surface in the active variables.
//!
//! All gradient and covariance work happens in normalized coordinates, where
//! each parameter interval `[lo, hi]` is mapped affinely onto `[-1, 1]`.

use std::fs;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, symmetric_eigen_desc};
use crate::rng::{derived, stream};
use crate::scalar::Real;

/// Scalar callback in physical parameter coordinates.
pub type Evaluator<'a, T> = &'a (dyn Fn(&DVector<T>) -> Result<T> + Sync);

const LOG_FLOOR: f64 = 1e-16;
const SURFACE_COND_WARN: f64 = 1e10;

/// Samples `(mu_i, f_i)` with optional physical gradients and the parameter box.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleTable<T: Real> {
    inputs: DMatrix<T>,
    outputs: DVector<T>,
    gradients: Option<DMatrix<T>>,
    bounds: Vec<[T; 2]>,
}

impl<T: Real> SampleTable<T> {
    /// `inputs` is `N x m`; `bounds` holds one `[lo, hi]` per column.
    pub fn new(inputs: DMatrix<T>, outputs: DVector<T>, bounds: Vec<[T; 2]>) -> Result<Self> {
        let (n, m) = inputs.shape();
        if outputs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: outputs.len(),
            });
        }
        if bounds.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bounds.len(),
            });
        }
        if m == 0 || n == 0 {
            return Err(Error::InsufficientData("empty sample table".into()));
        }
        if inputs.iter().chain(outputs.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sample table".into()));
        }
        for (j, &[lo, hi]) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!("bounds of parameter {} must satisfy lo < hi", j + 1)));
            }
            let tol = (hi - lo) * T::lit(1e-12);
            for i in 0..n {
                let x = inputs[(i, j)];
                if x < lo - tol || x > hi + tol {
                    return Err(Error::Domain(format!(
                        "sample {} parameter {} = {x} outside [{lo}, {hi}]",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            inputs,
            outputs,
            gradients: None,
            bounds,
        })
    }

    /// Bounds taken from the per-column sample range. Constant columns get
    /// `[v - 1, v + 1]`.
    pub fn with_data_bounds(inputs: DMatrix<T>, outputs: DVector<T>) -> Result<Self> {
        let bounds = inputs
            .column_iter()
            .map(|c| {
                let lo = c.iter().copied().fold(T::max_value().unwrap(), T::min);
                let hi = c.iter().copied().fold(T::min_value().unwrap(), T::max);
                if lo < hi {
                    [lo, hi]
                } else {
                    [lo - T::one(), hi + T::one()]
                }
            })
            .collect();
        Self::new(inputs, outputs, bounds)
    }

    /// Attaches physical gradients (`N x m`).
    pub fn with_gradients(mut self, gradients: DMatrix<T>) -> Result<Self> {
        if gradients.shape() != self.inputs.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs.len(),
                got: gradients.len(),
            });
        }
        if gradients.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("gradients".into()));
        }
        self.gradients = Some(gradients);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter dimension `m`.
    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn inputs(&self) -> &DMatrix<T> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DVector<T> {
        &self.outputs
    }

    pub fn gradients(&self) -> Option<&DMatrix<T>> {
        self.gradients.as_ref()
    }

    pub fn bounds(&self) -> &[[T; 2]] {
        &self.bounds
    }

    /// Maps a physical parameter vector into `[-1, 1]^m`.
    pub fn normalize(&self, mu: &DVector<T>) -> DVector<T> {
        normalize_with(&self.bounds, mu)
    }

    pub fn denormalize(&self, x: &DVector<T>) -> DVector<T> {
        let half = T::lit(0.5);
        DVector::from_fn(x.len(), |j, _| {
            let [lo, hi] = self.bounds[j];
            lo + (x[j] + T::one()) * (hi - lo) * half
        })
    }

    pub fn normalized_inputs(&self) -> DMatrix<T> {
        let two = T::lit(2.0);
        DMatrix::from_fn(self.len(), self.dim(), |i, j| {
            let [lo, hi] = self.bounds[j];
            two * (self.inputs[(i, j)] - lo) / (hi - lo) - T::one()
        })
    }

    /// Gradients with respect to the normalized coordinates.
    pub fn normalized_gradients(&self) -> Option<DMatrix<T>> {
        let half = T::lit(0.5);
        self.gradients.as_ref().map(|g| {
            DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| {
                let [lo, hi] = self.bounds[j];
                g[(i, j)] * (hi - lo) * half
            })
        })
    }

    /// Rows `rows`, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let pick = |m: &DMatrix<T>| DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)]);
        Self {
            inputs: pick(&self.inputs),
            outputs: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.outputs[i])),
            gradients: self.gradients.as_ref().map(pick),
            bounds: self.bounds.clone(),
        }
    }

    /// Parses `mu_1..mu_m, f[, g_1..g_m]` with a header row.
    pub fn parse_csv(text: &str, bounds: Option<Vec<[T; 2]>>) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        let f_col = names
            .iter()
            .position(|&n| n == "f")
            .ok_or_else(|| Error::MissingField("f".into()))?;
        let m = f_col;
        let expect_mu = (1..=m).map(|j| format!("mu_{j}"));
        if !names[..m].iter().map(|s| s.to_string()).eq(expect_mu) {
            return Err(Error::parse(1, "header must start with mu_1..mu_m"));
        }
        let has_grad = match names.len() - m - 1 {
            0 => false,
            k if k == m && names[m + 1..].iter().map(|s| s.to_string()).eq((1..=m).map(|j| format!("g_{j}"))) => {
                true
            }
            _ => return Err(Error::parse(1, "gradient columns must be g_1..g_m")),
        };
        let mut rows = Vec::new();
        for (n, line) in lines {
            let row: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(n + 1, format!("bad number `{}`", t.trim())))
                })
                .collect::<Result<_>>()?;
            if row.len() != names.len() {
                return Err(Error::parse(
                    n + 1,
                    format!("expected {} columns, got {}", names.len(), row.len()),
                ));
            }
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::InsufficientData("no sample rows".into()));
        }
        let inputs = DMatrix::from_fn(n, m, |i, j| T::lit(rows[i][j]));
        let outputs = DVector::from_fn(n, |i, _| T::lit(rows[i][m]));
        let table = match bounds {
            Some(b) => Self::new(inputs, outputs, b)?,
            None => Self::with_data_bounds(inputs, outputs)?,
        };
        if has_grad {
            let g = DMatrix::from_fn(n, m, |i, j| T::lit(rows[i][m + 1 + j]));
            table.with_gradients(g)
        } else {
            Ok(table)
        }
    }

    pub fn load_csv(path: &Path, bounds: Option<Vec<[T; 2]>>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, bounds)
    }

    pub fn to_csv(&self) -> String {
        let m = self.dim();
        let mut names: Vec<String> = (1..=m).map(|j| format!("mu_{j}")).collect();
        names.push("f".into());
        if self.gradients.is_some() {
            names.extend((1..=m).map(|j| format!("g_{j}")));
        }
        let mut out = names.join(",");
        out.push('\n');
        for i in 0..self.len() {
            let mut cells: Vec<String> = self.inputs.row(i).iter().map(|x| x.as_f64().to_string()).collect();
            cells.push(self.outputs[i].as_f64().to_string());
            if let Some(g) = &self.gradients {
                cells.extend(g.row(i).iter().map(|x| x.as_f64().to_string()));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn normalize_with<T: Real>(bounds: &[[T; 2]], mu: &DVector<T>) -> DVector<T> {
    let two = T::lit(2.0);
    DVector::from_fn(mu.len(), |j, _| {
        let [lo, hi] = bounds[j];
        two * (mu[j] - lo) / (hi - lo) - T::one()
    })
}

// ---- gradients ------------------------------------------------------------

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    #[default]
    LocalLinear,
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientOptions {
    pub method: GradientMethod,
    /// Neighborhood size for local-linear fits; `None` picks `max(m+2, ceil(N/10))`.
    pub neighbors: Option<usize>,
    /// Central-difference step in normalized coordinates.
    pub step: f64,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            method: GradientMethod::LocalLinear,
            neighbors: None,
            step: 1e-5,
        }
    }
}

/// Returns a copy of `table` with physical gradients filled in.
pub fn estimate_gradients<T: Real>(
    table: &SampleTable<T>,
    options: &GradientOptions,
    evaluator: Option<Evaluator<'_, T>>,
) -> Result<SampleTable<T>> {
    let g = match options.method {
        GradientMethod::LocalLinear => local_linear_gradients(table, options.neighbors)?,
        GradientMethod::FiniteDifference => {
            let f = evaluator.ok_or_else(|| {
                Error::Config("finite-difference gradients need an evaluator".into())
            })?;
            finite_difference_gradients(table, f, T::lit(options.step))?
        }
    };
    table.clone().with_gradients(g)
}

pub fn default_neighbors(n: usize, m: usize) -> usize {
    (m + 2).max(n.div_ceil(10))
}

/// Least-squares hyperplane through the `k` nearest samples (the point itself
/// included) of every sample, in normalized coordinates.
pub fn local_linear_gradients<T: Real>(
    table: &SampleTable<T>,
    neighbors: Option<usize>,
) -> Result<DMatrix<T>> {
    let (n, m) = (table.len(), table.dim());
    if n < m + 1 {
        return Err(Error::InsufficientData(format!(
            "local-linear gradients need at least m+1 = {} samples, got {n}",
            m + 1
        )));
    }
    let k = neighbors.unwrap_or_else(|| default_neighbors(n, m)).min(n);
    if k < m + 1 {
        return Err(Error::Config(format!("neighborhood of {k} points is below m+1 = {}", m + 1)));
    }
    let x = table.normalized_inputs();
    let f = table.outputs();
    let half = T::lit(0.5);
    let scale: Vec<T> = table.bounds().iter().map(|&[lo, hi]| (hi - lo) * half).collect();
    let limit = T::one() / (T::eps() * T::lit(1e3));

    let rows: Vec<Result<Vec<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dist: Vec<(T, usize)> = (0..n)
                .map(|j| ((x.row(j) - x.row(i)).norm_squared(), j))
                .collect();
            dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let a = DMatrix::from_fn(k, m + 1, |r, c| {
                if c == 0 {
                    T::one()
                } else {
                    x[(dist[r].1, c - 1)] - x[(i, c - 1)]
                }
            });
            let b = DVector::from_fn(k, |r, _| f[dist[r].1] - f[i]);
            let (sol, cond) = lstsq(&a, &b)?;
            if !(cond < limit) {
                return Err(Error::Singular(format!("rank-deficient neighborhood around sample {}", i + 1)));
            }
            Ok((0..m).map(|j| sol[j + 1] / scale[j]).collect())
        })
        .collect();
    let mut g = DMatrix::zeros(n, m);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            g[(i, j)] = v;
        }
    }
    Ok(g)
}

/// Central differences with step `h` in normalized coordinates.
pub fn finite_difference_gradients<T: Real>(
    table: &SampleTable<T>,
    f: Evaluator<'_, T>,
    h: T,
) -> Result<DMatrix<T>> {
    if !(h > T::zero()) {
        return Err(Error::Domain("finite-difference step must be positive".into()));
    }
    let (n, m) = (table.len(), table.dim());
    let half = T::lit(0.5);
    let rows: Vec<Result<Vec<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mu = table.inputs().row(i).transpose();
            (0..m)
                .map(|j| {
                    let [lo, hi] = table.bounds()[j];
                    let d = h * (hi - lo) * half;
                    let mut plus = mu.clone();
                    let mut minus = mu.clone();
                    plus[j] += d;
                    minus[j] -= d;
                    Ok((f(&plus)? - f(&minus)?) / (d + d))
                })
                .collect()
        })
        .collect();
    let mut g = DMatrix::zeros(n, m);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            g[(i, j)] = v;
        }
    }
    Ok(g)
}

// ---- covariance and decomposition ----------------------------------------

/// `(1/N) G^T G` for gradient rows `G`.
pub fn covariance_from_gradients<T: Real>(g: &DMatrix<T>) -> DMatrix<T> {
    let n = T::from_count(g.nrows().max(1));
    let c = g.transpose() * g / n;
    (&c + c.transpose()) * T::lit(0.5)
}

/// Covariance of the normalized gradients stored in `table`.
pub fn estimate_covariance<T: Real>(table: &SampleTable<T>) -> Result<DMatrix<T>> {
    let g = table
        .normalized_gradients()
        .ok_or_else(|| Error::MissingField("gradients".into()))?;
    Ok(covariance_from_gradients(&g))
}

/// Sorted eigenpairs of a symmetric PSD matrix: tiny negative eigenvalues
/// clipped to zero, each eigenvector signed so its largest-magnitude entry is
/// positive.
pub fn eigendecompose<T: Real>(cov: &DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    let m = cov.nrows();
    if cov.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: cov.ncols(),
        });
    }
    let scale = cov.amax().max(T::one());
    if (cov - cov.transpose()).amax() > T::lit(1e-10) * scale {
        return Err(Error::Domain("covariance matrix is not symmetric".into()));
    }
    let (mut vals, mut vecs) = symmetric_eigen_desc(cov.clone());
    vals.iter_mut().for_each(|v| *v = v.max(T::zero()));
    for mut col in vecs.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            // first index wins ties so the choice is stable
            if col[i].abs() > col[best].abs() * (T::one() + T::lit(1e-12)) {
                best = i;
            }
        }
        if col[best] < T::zero() {
            col.neg_mut();
        }
    }
    Ok((vals, vecs))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActiveDimRule {
    /// `argmax_i (log lambda_i - log lambda_{i+1})`.
    #[default]
    LargestGap,
    Explicit(usize),
    /// Count of eigenvalues with `lambda_i / lambda_1 >= ratio`.
    Threshold(f64),
}

/// Active dimension in `1..m` (or 1 when `m == 1`).
pub fn choose_active_dimension<T: Real>(eigenvalues: &DVector<T>, rule: ActiveDimRule) -> usize {
    let m = eigenvalues.len();
    let cap = m.saturating_sub(1).max(1);
    let floor = T::lit(LOG_FLOOR);
    let chosen = match rule {
        ActiveDimRule::Explicit(k) => k,
        ActiveDimRule::LargestGap => {
            let logs: Vec<T> = eigenvalues.iter().map(|&l| l.max(floor).ln()).collect();
            let mut best = (1, T::min_value().unwrap());
            for i in 0..m.saturating_sub(1) {
                let gap = logs[i] - logs[i + 1];
                if gap > best.1 {
                    best = (i + 1, gap);
                }
            }
            best.0
        }
        ActiveDimRule::Threshold(ratio) => {
            let l1 = eigenvalues.get(0).copied().unwrap_or(T::zero());
            if l1 <= T::zero() {
                1
            } else {
                eigenvalues.iter().filter(|&&l| l / l1 >= T::lit(ratio)).count()
            }
        }
    };
    chosen.clamp(1, cap)
}

/// `lambda_M / lambda_{M+1}` with both floored at `1e-16`.
pub fn gap_ratio<T: Real>(eigenvalues: &DVector<T>, active_dim: usize) -> T {
    let floor = T::lit(LOG_FLOOR);
    match (eigenvalues.get(active_dim - 1), eigenvalues.get(active_dim)) {
        (Some(&a), Some(&b)) => a.max(floor) / b.max(floor),
        _ => T::one(),
    }
}

/// Spectrum-level verdict used by reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    /// Gradients vanish: the output does not depend on the parameters.
    NoStructure,
    /// The chosen gap is below a factor of 10.
    WeakGap,
    Clear,
}

pub const WEAK_GAP_RATIO: f64 = 10.0;

pub fn classify<T: Real>(eigenvalues: &DVector<T>, active_dim: usize, output_scale: T) -> Structure {
    let l1 = eigenvalues.get(0).copied().unwrap_or(T::zero());
    let negligible = T::eps() * output_scale;
    if l1 <= negligible * negligible {
        Structure::NoStructure
    } else if gap_ratio(eigenvalues, active_dim) < T::lit(WEAK_GAP_RATIO) {
        Structure::WeakGap
    } else {
        Structure::Clear
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsDecomposition<T: Real> {
    eigenvalues: DVector<T>,
    eigenvectors: DMatrix<T>,
    bootstrap_lo: DVector<T>,
    bootstrap_hi: DVector<T>,
    bootstrap: Vec<DVector<T>>,
    active_dim: usize,
}

/// Eigendecomposition of `(1/N) G^T G` plus percentile bootstrap intervals
/// (5% / 95%) from `n_boot` row resamples of `G`. Resample `b` draws from
/// a generator seeded with `seed + b`, so results do not depend on threads.
pub fn decompose<T: Real>(gradients: &DMatrix<T>, n_boot: usize, seed: u64) -> Result<AsDecomposition<T>> {
    let n = gradients.nrows();
    if n == 0 {
        return Err(Error::InsufficientData("no gradient rows".into()));
    }
    let (eigenvalues, eigenvectors) = eigendecompose(&covariance_from_gradients(gradients))?;
    let bootstrap: Vec<DVector<T>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = derived(seed, stream::BOOTSTRAP, b as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let g = DMatrix::from_fn(n, gradients.ncols(), |i, j| gradients[(rows[i], j)]);
            eigendecompose(&covariance_from_gradients(&g)).map(|(v, _)| v)
        })
        .collect::<Result<_>>()?;
    let m = eigenvalues.len();
    let (lo, hi) = if bootstrap.is_empty() {
        (eigenvalues.clone(), eigenvalues.clone())
    } else {
        let mut lo = DVector::zeros(m);
        let mut hi = DVector::zeros(m);
        for i in 0..m {
            let mut column: Vec<T> = bootstrap.iter().map(|v| v[i]).collect();
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lo[i] = percentile(&column, 0.05);
            hi[i] = percentile(&column, 0.95);
        }
        (lo, hi)
    };
    let active_dim = choose_active_dimension(&eigenvalues, ActiveDimRule::LargestGap);
    Ok(AsDecomposition {
        eigenvalues,
        eigenvectors,
        bootstrap_lo: lo,
        bootstrap_hi: hi,
        bootstrap,
        active_dim,
    })
}

/// Linear-interpolation percentile of sorted data.
pub fn percentile<T: Real>(sorted: &[T], p: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let i = (pos.floor() as usize).min(n - 2);
    let frac = T::lit(pos - i as f64);
    sorted[i] + (sorted[i + 1] - sorted[i]) * frac
}

impl<T: Real> AsDecomposition<T> {
    /// Decomposition of an explicit covariance, without bootstrap.
    pub fn from_covariance(cov: &DMatrix<T>) -> Result<Self> {
        let (eigenvalues, eigenvectors) = eigendecompose(cov)?;
        let active_dim = choose_active_dimension(&eigenvalues, ActiveDimRule::LargestGap);
        Ok(Self {
            bootstrap_lo: eigenvalues.clone(),
            bootstrap_hi: eigenvalues.clone(),
            eigenvalues,
            eigenvectors,
            bootstrap: Vec::new(),
            active_dim,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// Columns are eigenvectors, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    pub fn bootstrap_lo(&self) -> &DVector<T> {
        &self.bootstrap_lo
    }

    pub fn bootstrap_hi(&self) -> &DVector<T> {
        &self.bootstrap_hi
    }

    /// Eigenvalues of every bootstrap resample.
    pub fn bootstrap_samples(&self) -> &[DVector<T>] {
        &self.bootstrap
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn active_dim(&self) -> usize {
        self.active_dim
    }

    pub fn with_rule(mut self, rule: ActiveDimRule) -> Self {
        self.active_dim = choose_active_dimension(&self.eigenvalues, rule);
        self
    }

    pub fn gap_ratio(&self) -> T {
        gap_ratio(&self.eigenvalues, self.active_dim)
    }

    /// `W_1`, the leading `M` eigenvectors.
    pub fn active_directions(&self) -> DMatrix<T> {
        self.eigenvectors.columns(0, self.active_dim).into_owned()
    }

    pub fn inactive_directions(&self) -> DMatrix<T> {
        let m = self.dim();
        self.eigenvectors.columns(self.active_dim, m - self.active_dim).into_owned()
    }

    /// `(W_1^T x, W_2^T x)` for a normalized parameter vector.
    pub fn project(&self, x: &DVector<T>) -> Result<(DVector<T>, DVector<T>)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok((
            self.active_directions().transpose() * x,
            self.inactive_directions().transpose() * x,
        ))
    }

    /// `W_1 y + W_2 z`.
    pub fn reassemble(&self, active: &DVector<T>, inactive: &DVector<T>) -> DVector<T> {
        self.active_directions() * active + self.inactive_directions() * inactive
    }

    /// Coordinates of normalized rows `x` (`N x m`) along the first `k` eigenvectors.
    pub fn leading_coordinates(&self, x: &DMatrix<T>, k: usize) -> DMatrix<T> {
        x * self.eigenvectors.columns(0, k.min(self.dim()))
    }
}

// ---- response surfaces ----------------------------------------------------

/// Exponent tuples of all monomials of total degree `<= degree` in `vars`
/// variables, ordered by total degree, then lexicographically descending.
pub fn monomial_exponents(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, vars: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == vars - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=remaining).rev() {
            prefix.push(e);
            fill(prefix, vars, remaining - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if vars == 0 {
        return vec![Vec::new()];
    }
    for total in 0..=degree {
        fill(&mut Vec::with_capacity(vars), vars, total, &mut out);
    }
    out
}

/// `C(M + d, d)`.
pub fn monomial_count(vars: usize, degree: usize) -> usize {
    (1..=degree).fold(1usize, |acc, i| acc * (vars + i) / i)
}

/// Least-squares polynomial `g(y)` in the active variables `y = W_1^T x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseSurface<T: Real> {
    degree: usize,
    directions: DMatrix<T>,
    input_bounds: Vec<[T; 2]>,
    shift: DVector<T>,
    scale: DVector<T>,
    exponents: Vec<Vec<usize>>,
    coefficients: DVector<T>,
}

fn design_matrix<T: Real>(y: &DMatrix<T>, shift: &DVector<T>, scale: &DVector<T>, exponents: &[Vec<usize>]) -> DMatrix<T> {
    let (n, vars) = y.shape();
    let degree = exponents.iter().flatten().copied().max().unwrap_or(0);
    DMatrix::from_fn(n, exponents.len(), |i, c| {
        let mut v = T::one();
        for j in 0..vars {
            let z = (y[(i, j)] - shift[j]) / scale[j];
            let e = exponents[c][j];
            debug_assert!(e <= degree);
            for _ in 0..e {
                v *= z;
            }
        }
        v
    })
}

impl<T: Real> ResponseSurface<T> {
    /// Fits `outputs ~ g(active)` on the rows of `active` (`N x M`).
    /// Active coordinates are rescaled to `[-1, 1]` over the training rows.
    pub fn fit(
        active: &DMatrix<T>,
        outputs: &DVector<T>,
        degree: usize,
        directions: DMatrix<T>,
        input_bounds: Vec<[T; 2]>,
    ) -> Result<Self> {
        if !(1..=6).contains(&degree) {
            return Err(Error::Config(format!("surface degree {degree} outside 1..=6")));
        }
        let (n, vars) = active.shape();
        if outputs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: outputs.len(),
            });
        }
        let terms = monomial_count(vars, degree);
        if n < 2 * terms {
            return Err(Error::InsufficientData(format!(
                "degree-{degree} surface in {vars} variable(s) has {terms} terms and needs {} training samples, got {n}",
                2 * terms
            )));
        }
        let half = T::lit(0.5);
        let mut shift = DVector::zeros(vars);
        let mut scale = DVector::zeros(vars);
        for j in 0..vars {
            let col = active.column(j);
            let lo = col.min();
            let hi = col.max();
            shift[j] = (lo + hi) * half;
            scale[j] = if hi > lo { (hi - lo) * half } else { T::one() };
        }
        let exponents = monomial_exponents(vars, degree);
        let a = design_matrix(active, &shift, &scale, &exponents);
        let (coefficients, cond) = lstsq(&a, outputs)?;
        if cond > T::lit(SURFACE_COND_WARN) {
            warn!("response surface design matrix is ill-conditioned (cond ~ {cond:e})");
        }
        Ok(Self {
            degree,
            directions,
            input_bounds,
            shift,
            scale,
            exponents,
            coefficients,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn active_dim(&self) -> usize {
        self.shift.len()
    }

    pub fn coefficients(&self) -> &DVector<T> {
        &self.coefficients
    }

    pub fn exponents(&self) -> &[Vec<usize>] {
        &self.exponents
    }

    pub fn directions(&self) -> &DMatrix<T> {
        &self.directions
    }

    pub fn shift(&self) -> &DVector<T> {
        &self.shift
    }

    pub fn scale(&self) -> &DVector<T> {
        &self.scale
    }

    pub fn input_bounds(&self) -> &[[T; 2]] {
        &self.input_bounds
    }

    /// `g(y)` at active coordinates `y`.
    pub fn evaluate(&self, active: &DVector<T>) -> T {
        let vars = self.active_dim();
        let z: Vec<T> = (0..vars).map(|j| (active[j] - self.shift[j]) / self.scale[j]).collect();
        let powers: Vec<Vec<T>> = z
            .iter()
            .map(|&zj| {
                let mut p = vec![T::one(); self.degree + 1];
                for e in 1..=self.degree {
                    p[e] = p[e - 1] * zj;
                }
                p
            })
            .collect();
        self.exponents
            .iter()
            .zip(self.coefficients.iter())
            .fold(T::zero(), |acc, (alpha, &c)| {
                acc + alpha.iter().enumerate().fold(c, |t, (j, &e)| t * powers[j][e])
            })
    }

    /// `g(W_1^T x(mu))` for a physical parameter vector.
    pub fn evaluate_mu(&self, mu: &DVector<T>) -> Result<T> {
        if mu.len() != self.directions.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.directions.nrows(),
                got: mu.len(),
            });
        }
        let x = normalize_with(&self.input_bounds, mu);
        Ok(self.evaluate(&(self.directions.transpose() * x)))
    }

    /// Root-mean-square residual on the given samples.
    pub fn rmse(&self, active: &DMatrix<T>, outputs: &DVector<T>) -> T {
        let a = design_matrix(active, &self.shift, &self.scale, &self.exponents);
        let r = a * &self.coefficients - outputs;
        (r.norm_squared() / T::from_count(outputs.len().max(1))).sqrt()
    }
}

/// Serialized [`ResponseSurface`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDocument {
    pub degree: usize,
    pub active_dim: usize,
    /// Columns of `W_1`.
    pub directions: Vec<Vec<f64>>,
    pub input_bounds: Vec<[f64; 2]>,
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    pub exponents: Vec<Vec<usize>>,
    pub coefficients: Vec<f64>,
}

impl SurfaceDocument {
    pub fn from_surface<T: Real>(s: &ResponseSurface<T>) -> Self {
        let v = |x: &DVector<T>| x.iter().map(|t| t.as_f64()).collect::<Vec<_>>();
        Self {
            degree: s.degree,
            active_dim: s.active_dim(),
            directions: s
                .directions
                .column_iter()
                .map(|c| c.iter().map(|t| t.as_f64()).collect())
                .collect(),
            input_bounds: s.input_bounds.iter().map(|&[a, b]| [a.as_f64(), b.as_f64()]).collect(),
            shift: v(&s.shift),
            scale: v(&s.scale),
            exponents: s.exponents.clone(),
            coefficients: v(&s.coefficients),
        }
    }

    pub fn surface<T: Real>(&self) -> Result<ResponseSurface<T>> {
        let m = self.input_bounds.len();
        let k = self.active_dim;
        if self.directions.len() != k
            || self.directions.iter().any(|c| c.len() != m)
            || self.shift.len() != k
            || self.scale.len() != k
            || self.exponents.len() != self.coefficients.len()
            || self.exponents.iter().any(|e| e.len() != k)
        {
            return Err(Error::Config("inconsistent response surface document".into()));
        }
        let vec = |x: &[f64]| DVector::from_iterator(x.len(), x.iter().map(|&t| T::lit(t)));
        Ok(ResponseSurface {
            degree: self.degree,
            directions: DMatrix::from_fn(m, k, |i, j| T::lit(self.directions[j][i])),
            input_bounds: self.input_bounds.iter().map(|&[a, b]| [T::lit(a), T::lit(b)]).collect(),
            shift: vec(&self.shift),
            scale: vec(&self.scale),
            exponents: self.exponents.clone(),
            coefficients: vec(&self.coefficients),
        })
    }
}

// ---- train/test protocol --------------------------------------------------

/// Random partition of `0..n` into sorted train and test index lists.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} outside (0, 1)")));
    }
    if n < 2 {
        return Err(Error::InsufficientData("need at least 2 samples to split".into()));
    }
    let n_train = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut derived(seed, stream::SPLIT, 0));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceReport {
    pub train_rmse: f64,
    pub test_rmse: f64,
    /// Test RMSE divided by the output range over the whole dataset (0 when
    /// the range is 0).
    pub normalized_test_error: f64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

fn output_range<T: Real>(f: &DVector<T>) -> T {
    f.max() - f.min()
}

fn fit_on_split<T: Real>(
    directions: DMatrix<T>,
    table: &SampleTable<T>,
    degree: usize,
    train: Vec<usize>,
    test: Vec<usize>,
) -> Result<(ResponseSurface<T>, SurfaceReport)> {
    let y = table.normalized_inputs() * &directions;
    let rows = |idx: &[usize]| {
        (
            DMatrix::from_fn(idx.len(), y.ncols(), |i, j| y[(idx[i], j)]),
            DVector::from_iterator(idx.len(), idx.iter().map(|&i| table.outputs()[i])),
        )
    };
    let (y_train, f_train) = rows(&train);
    let (y_test, f_test) = rows(&test);
    let surface = ResponseSurface::fit(&y_train, &f_train, degree, directions, table.bounds().to_vec())?;
    let train_rmse = surface.rmse(&y_train, &f_train);
    let test_rmse = surface.rmse(&y_test, &f_test);
    let range = output_range(table.outputs());
    let normalized = if range > T::zero() { test_rmse / range } else { T::zero() };
    Ok((
        surface,
        SurfaceReport {
            train_rmse: train_rmse.as_f64(),
            test_rmse: test_rmse.as_f64(),
            normalized_test_error: normalized.as_f64(),
            train_indices: train,
            test_indices: test,
        },
    ))
}

/// Fits a degree-`d` surface along `decomp`'s active directions on a random
/// `split` fraction of the samples and measures the normalized test error.
pub fn fit_response_surface<T: Real>(
    decomp: &AsDecomposition<T>,
    table: &SampleTable<T>,
    degree: usize,
    split: f64,
    split_seed: u64,
) -> Result<(ResponseSurface<T>, SurfaceReport)> {
    if decomp.dim() != table.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.dim(),
            got: decomp.dim(),
        });
    }
    let (train, test) = split_indices(table.len(), split, split_seed)?;
    fit_on_split(decomp.active_directions(), table, degree, train, test)
}

/// Largest `M <= wanted` for which a degree-`d` surface fits `n_train` samples.
pub fn max_active_dim_for(n_train: usize, degree: usize, wanted: usize) -> Option<usize> {
    (1..=wanted).rev().find(|&k| 2 * monomial_count(k, degree) <= n_train)
}

// ---- full analysis ---------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSettings {
    pub degree: usize,
    pub split: f64,
    pub n_boot: usize,
    pub seed: u64,
    /// Independent train/test replicates whose test errors are averaged.
    pub replicates: usize,
    pub gradients: GradientOptions,
    pub active_dim: ActiveDimRule,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            degree: 4,
            split: 0.75,
            n_boot: 100,
            seed: 0,
            replicates: 10,
            gradients: GradientOptions::default(),
            active_dim: ActiveDimRule::LargestGap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub split_seed: u64,
    pub active_dim: usize,
    pub report: SurfaceReport,
}

#[derive(Clone, Debug)]
pub struct AsAnalysis<T: Real> {
    /// Full-data decomposition with bootstrap intervals.
    pub decomposition: AsDecomposition<T>,
    pub table: SampleTable<T>,
    pub structure: Structure,
    /// Surface of replicate 0, whose active subspace was learned on its
    /// training rows only.
    pub surface: ResponseSurface<T>,
    pub replicates: Vec<ReplicateResult>,
    pub mean_test_error: f64,
}

/// Full protocol: gradients and bootstrap decomposition on every sample,
/// then `replicates` train/test splits (seeds `seed + r`) that each learn
/// the active subspace on their training rows, fit the surface and score it
/// on the held-out rows.
pub fn analyze<T: Real>(
    table: &SampleTable<T>,
    settings: &AnalysisSettings,
    evaluator: Option<Evaluator<'_, T>>,
) -> Result<AsAnalysis<T>> {
    let m = table.dim();
    if table.len() < m + 2 {
        return Err(Error::InsufficientData(format!(
            "analysis needs at least m+2 = {} samples, got {}",
            m + 2,
            table.len()
        )));
    }
    let with_grad = match table.gradients() {
        Some(_) => table.clone(),
        None => estimate_gradients(table, &settings.gradients, evaluator)?,
    };
    let g = with_grad.normalized_gradients().expect("gradients set");
    let decomposition = decompose(&g, settings.n_boot, settings.seed)?.with_rule(settings.active_dim);
    let scale = table.outputs().amax();
    let structure = classify(decomposition.eigenvalues(), decomposition.active_dim(), scale);

    let count = settings.replicates.max(1);
    let runs: Vec<Result<(ResponseSurface<T>, ReplicateResult)>> = (0..count)
        .into_par_iter()
        .map(|r| run_replicate(table, table.gradients().is_some(), settings, evaluator, r as u64))
        .collect();
    let mut surface = None;
    let mut replicates = Vec::with_capacity(count);
    for run in runs {
        let (s, rep) = run?;
        surface.get_or_insert(s);
        replicates.push(rep);
    }
    let mean_test_error =
        replicates.iter().map(|r| r.report.normalized_test_error).sum::<f64>() / count as f64;
    Ok(AsAnalysis {
        decomposition,
        table: with_grad,
        structure,
        surface: surface.expect("at least one replicate"),
        replicates,
        mean_test_error,
    })
}

fn run_replicate<T: Real>(
    table: &SampleTable<T>,
    given_gradients: bool,
    settings: &AnalysisSettings,
    evaluator: Option<Evaluator<'_, T>>,
    r: u64,
) -> Result<(ResponseSurface<T>, ReplicateResult)> {
    let split_seed = settings.seed.wrapping_add(r);
    let (train, test) = split_indices(table.len(), settings.split, split_seed)?;
    let train_table = table.subset(&train);
    let train_table = if given_gradients {
        train_table
    } else {
        estimate_gradients(&train_table, &settings.gradients, evaluator)?
    };
    let cov = estimate_covariance(&train_table)?;
    let decomp = AsDecomposition::from_covariance(&cov)?.with_rule(settings.active_dim);
    let wanted = decomp.active_dim();
    let k = max_active_dim_for(train.len(), settings.degree, wanted).ok_or_else(|| {
        Error::InsufficientData(format!(
            "{} training samples cannot support a degree-{} surface",
            train.len(),
            settings.degree
        ))
    })?;
    if k < wanted {
        warn!("replicate {r}: active dimension reduced from {wanted} to {k} to fit the training set");
    }
    let directions = decomp.eigenvectors().columns(0, k).into_owned();
    let (surface, report) = fit_on_split(directions, table, settings.degree, train, test)?;
    Ok((
        surface,
        ReplicateResult {
            split_seed,
            active_dim: k,
            report,
        },
    ))
}

// ---- reporting -------------------------------------------------------------

/// Serializable summary of one [`AsAnalysis`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub samples: usize,
    pub eigenvalues: Vec<f64>,
    pub bootstrap_lo: Vec<f64>,
    pub bootstrap_hi: Vec<f64>,
    /// Columns of `W`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub active_dim: usize,
    pub gap_ratio: f64,
    pub structure: Structure,
    /// Active dimension of the replicate-0 surface.
    pub surface_active_dim: usize,
    pub normalized_test_error: f64,
    pub mean_test_error: f64,
    pub replicate_errors: Vec<f64>,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub surface: SurfaceDocument,
}

impl AnalysisReport {
    pub fn from_analysis(a: &AsAnalysis<f64>) -> Self {
        let d = &a.decomposition;
        let rep0 = &a.replicates[0];
        Self {
            samples: a.table.len(),
            eigenvalues: d.eigenvalues().iter().copied().collect(),
            bootstrap_lo: d.bootstrap_lo().iter().copied().collect(),
            bootstrap_hi: d.bootstrap_hi().iter().copied().collect(),
            eigenvectors: d
                .eigenvectors()
                .column_iter()
                .map(|c| c.iter().copied().collect())
                .collect(),
            active_dim: d.active_dim(),
            gap_ratio: d.gap_ratio(),
            structure: a.structure,
            surface_active_dim: rep0.active_dim,
            normalized_test_error: rep0.report.normalized_test_error,
            mean_test_error: a.mean_test_error,
            replicate_errors: a.replicates.iter().map(|r| r.report.normalized_test_error).collect(),
            train_rmse: rep0.report.train_rmse,
            test_rmse: rep0.report.test_rmse,
            surface: SurfaceDocument::from_surface(&a.surface),
        }
    }
}

/// Tidy CSV tables for the eigenvalue plot (with bootstrap band and raw
/// replicates) and the sufficient-summary scatter in one and two active
/// variables. Every row starts with the output name.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotData {
    pub eigenvalues: String,
    pub bootstrap: String,
    pub summary_1d: String,
    pub summary_2d: String,
}

impl Default for PlotData {
    fn default() -> Self {
        Self {
            eigenvalues: "output,index,eigenvalue,bootstrap_lo,bootstrap_hi\n".into(),
            bootstrap: "output,replicate,index,eigenvalue\n".into(),
            summary_1d: "output,sample,y1,f\n".into(),
            summary_2d: "output,sample,y1,y2,f\n".into(),
        }
    }
}

impl PlotData {
    pub fn append(&mut self, name: &str, a: &AsAnalysis<f64>) {
        use std::fmt::Write as _;
        let d = &a.decomposition;
        for i in 0..d.dim() {
            let _ = writeln!(
                self.eigenvalues,
                "{name},{},{},{},{}",
                i + 1,
                d.eigenvalues()[i],
                d.bootstrap_lo()[i],
                d.bootstrap_hi()[i]
            );
        }
        for (b, v) in d.bootstrap_samples().iter().enumerate() {
            for (i, x) in v.iter().enumerate() {
                let _ = writeln!(self.bootstrap, "{name},{b},{},{x}", i + 1);
            }
        }
        let y = d.leading_coordinates(&a.table.normalized_inputs(), 2);
        for i in 0..a.table.len() {
            let f = a.table.outputs()[i];
            let _ = writeln!(self.summary_1d, "{name},{i},{},{f}", y[(i, 0)]);
            if y.ncols() > 1 {
                let _ = writeln!(self.summary_2d, "{name},{i},{},{},{f}", y[(i, 0)], y[(i, 1)]);
            }
        }
    }

    /// Writes `eigenvalues.csv`, `bootstrap.csv`, `summary_1d.csv` and
    /// `summary_2d.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (file, text) in [
            ("eigenvalues.csv", &self.eigenvalues),
            ("bootstrap.csv", &self.bootstrap),
            ("summary_1d.csv", &self.summary_1d),
            ("summary_2d.csv", &self.summary_2d),
        ] {
            let p = dir.join(file);
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_table(n: usize, m: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> SampleTable<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..=1.0));
        let y = DVector::from_fn(n, |i, _| f(x.row(i).transpose().as_slice()));
        SampleTable::new(x, y, vec![[-1.0, 1.0]; m]).unwrap()
    }

    #[test]
    fn local_linear_exact_on_affine() {
        let c = [0.5, -2.0, 1.5];
        let t = uniform_table(40, 3, 1, |x| 3.0 + c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        let g = local_linear_gradients(&t, None).unwrap();
        for i in 0..40 {
            for j in 0..3 {
                assert!((g[(i, j)] - c[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn constant_function_gives_zero_gradients() {
        let t = uniform_table(30, 4, 2, |_| 7.25);
        let g = local_linear_gradients(&t, None).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn physical_gradient_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(30, 2, |_, j| if j == 0 { rng.random_range(0.0f64..=4.0) } else { rng.random_range(-0.3..=0.3) });
        let y = DVector::from_fn(30, |i, _| 2.0 * x[(i, 0)] - 5.0 * x[(i, 1)]);
        let t = SampleTable::new(x, y, vec![[0.0, 4.0], [-0.3, 0.3]]).unwrap();
        let g = local_linear_gradients(&t, None).unwrap();
        assert!((g[(0, 0)] - 2.0).abs() < 1e-8 && (g[(0, 1)] + 5.0).abs() < 1e-8);
        let ng = t.with_gradients(g).unwrap().normalized_gradients().unwrap();
        assert!((ng[(0, 0)] - 4.0).abs() < 1e-8 && (ng[(0, 1)] + 1.5).abs() < 1e-8);
    }

    #[test]
    fn central_difference_of_square() {
        let x = DMatrix::from_row_slice(1, 1, &[0.3]);
        let t = SampleTable::new(x, DVector::from_element(1, 0.09), vec![[-1.0, 1.0]]).unwrap();
        let f = |mu: &DVector<f64>| Ok(mu[0] * mu[0]);
        let g = finite_difference_gradients(&t, &f, 1e-5).unwrap();
        assert!((g[(0, 0)] - 0.6).abs() < 1e-9);
        let opts = GradientOptions {
            method: GradientMethod::FiniteDifference,
            ..Default::default()
        };
        assert!(matches!(estimate_gradients(&t, &opts, None), Err(Error::Config(_))));
    }

    #[test]
    fn rank_deficient_neighborhood() {
        // every sample lies on the line x2 = x1
        let x = DMatrix::from_fn(10, 2, |i, _| -0.9 + 0.2 * i as f64);
        let y = DVector::from_fn(10, |i, _| i as f64);
        let t = SampleTable::new(x, y, vec![[-1.0, 1.0]; 2]).unwrap();
        assert!(matches!(local_linear_gradients(&t, None), Err(Error::Singular(_))));
    }

    #[test]
    fn covariance_hand_examples() {
        let c = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        let g = DMatrix::from_fn(5, 3, |_, j| c[j]);
        assert_eq!(covariance_from_gradients(&g), &c * c.transpose());

        let alt = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0]);
        assert_eq!(covariance_from_gradients(&alt), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));

        let three = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 3.0, -1.0, 1.0]);
        // (1,2)(1,2)^T + (0,3)(0,3)^T + (-1,1)(-1,1)^T = [[2, 1], [1, 14]]
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 14.0]) / 3.0;
        assert!((covariance_from_gradients(&three) - expect).amax() < 1e-15);
    }

    #[test]
    fn decomposition_examples() {
        let d = AsDecomposition::from_covariance(&DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0f64, 4.0]))).unwrap();
        assert_eq!(d.eigenvalues().as_slice(), &[4.0, 1.0]);
        assert!((d.eigenvectors()[(1, 0)] - 1.0).abs() < 1e-15);

        let c = DVector::from_row_slice(&[0.6f64, 0.8]);
        let d = AsDecomposition::from_covariance(&(&c * c.transpose())).unwrap();
        assert!((d.eigenvalues()[0] - 1.0).abs() < 1e-14);
        assert!(d.eigenvalues()[1].abs() < 1e-14);
        assert!((d.eigenvectors().column(0) - &c).norm() < 1e-14);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(eigendecompose(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn identical_rows_have_zero_width_intervals() {
        let g = DMatrix::from_fn(25, 3, |_, j| [0.3, -1.0, 2.0][j]);
        let d = decompose(&g, 50, 11).unwrap();
        assert_eq!(d.bootstrap_lo(), d.bootstrap_hi());
        assert_eq!(d.bootstrap_samples().len(), 50);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let t = uniform_table(60, 3, 5, |x| x[0] * x[0] + 0.1 * x[1]);
        let g = local_linear_gradients(&t, None).unwrap();
        let a = decompose(&g, 30, 9).unwrap();
        let b = decompose(&g, 30, 9).unwrap();
        assert_eq!(a, b);
        for i in 0..3 {
            assert!(a.bootstrap_lo()[i] <= a.bootstrap_hi()[i]);
        }
    }

    #[test]
    fn active_dimension_rules() {
        let v = DVector::from_row_slice(&[1.0, 1e-8, 1e-9, 1e-10]);
        assert_eq!(choose_active_dimension(&v, ActiveDimRule::LargestGap), 1);
        let v = DVector::from_row_slice(&[4.0, 3.9, 1e-6, 1e-7]);
        assert_eq!(choose_active_dimension(&v, ActiveDimRule::LargestGap), 2);
        assert_eq!(choose_active_dimension(&v, ActiveDimRule::Explicit(2)), 2);
        assert_eq!(choose_active_dimension(&v, ActiveDimRule::Explicit(9)), 3);
        assert_eq!(choose_active_dimension(&v, ActiveDimRule::Threshold(0.5)), 2);
        let zero = DVector::from_row_slice(&[0.0, 0.0, 0.0]);
        assert_eq!(choose_active_dimension(&zero, ActiveDimRule::LargestGap), 1);
        assert_eq!(classify(&zero, 1, 1.0), Structure::NoStructure);
    }

    #[test]
    fn projection_examples() {
        let mut d = AsDecomposition::from_covariance(&DMatrix::from_diagonal(&DVector::from_row_slice(&[5.0, 4.0, 1.0]))).unwrap();
        d = d.with_rule(ActiveDimRule::Explicit(2));
        let (a, i) = d.project(&DVector::from_row_slice(&[0.1, 0.2, 0.3])).unwrap();
        assert_eq!(a.as_slice(), &[0.1, 0.2]);
        assert_eq!(i.as_slice(), &[0.3]);

        let c = DVector::from_row_slice(&[0.6f64, 0.8]);
        let d = AsDecomposition::from_covariance(&(&c * c.transpose())).unwrap();
        let (a, _) = d.project(&DVector::from_row_slice(&[1.0, 1.0])).unwrap();
        assert!((a[0] - 1.4).abs() < 1e-14);
        assert!(d.project(&DVector::from_row_slice(&[1.0])).is_err());
    }

    #[test]
    fn monomial_basis_counts() {
        assert_eq!(monomial_exponents(1, 4).len(), 5);
        assert_eq!(monomial_exponents(2, 4).len(), monomial_count(2, 4));
        assert_eq!(monomial_count(2, 4), 15);
        assert_eq!(monomial_count(3, 2), 10);
        assert_eq!(monomial_exponents(2, 1), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn linear_surface_identity() {
        let t = uniform_table(40, 2, 7, |x| x[0]);
        let d = AsDecomposition::from_covariance(&DMatrix::from_diagonal(&DVector::from_row_slice(&[1.0, 0.0]))).unwrap();
        let (s, rep) = fit_response_surface(&d, &t, 1, 0.75, 3).unwrap();
        assert!((s.evaluate(&DVector::from_element(1, 0.2)) - 0.2).abs() < 1e-10);
        assert!(rep.normalized_test_error < 1e-12);
    }

    #[test]
    fn constant_surface() {
        let t = uniform_table(40, 3, 8, |_| 2.5);
        let d = AsDecomposition::from_covariance(&DMatrix::identity(3, 3)).unwrap();
        let (s, rep) = fit_response_surface(&d, &t, 4, 0.75, 1).unwrap();
        assert!((s.evaluate(&DVector::from_element(1, 0.7)) - 2.5).abs() < 1e-12);
        assert_eq!(rep.normalized_test_error, 0.0);
    }

    #[test]
    fn too_few_training_rows() {
        let t = uniform_table(12, 2, 8, |x| x[0]);
        let d = AsDecomposition::from_covariance(&DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(fit_response_surface(&d, &t, 4, 0.75, 1), Err(Error::InsufficientData(_))));
        assert_eq!(max_active_dim_for(97, 4, 7), Some(3));
        assert_eq!(max_active_dim_for(60, 4, 7), Some(2));
        assert_eq!(max_active_dim_for(5, 4, 3), None);
    }

    #[test]
    fn csv_round_trip() {
        let t = uniform_table(6, 2, 4, |x| x[0] - x[1]);
        let g = local_linear_gradients(&t, Some(6)).unwrap();
        let t = t.with_gradients(g).unwrap();
        let back = SampleTable::parse_csv(&t.to_csv(), Some(vec![[-1.0, 1.0]; 2])).unwrap();
        assert_eq!(back, t);
        assert!(SampleTable::<f64>::parse_csv("mu_1,mu_2,f\n0,1\n", None).is_err());
        assert!(SampleTable::<f64>::parse_csv("x,f\n0,1\n", None).is_err());
        let err = SampleTable::<f64>::parse_csv("mu_1,f\n2,1\n", Some(vec![[-1.0, 1.0]])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn split_is_a_partition() {
        let (train, test) = split_indices(130, 0.75, 4).unwrap();
        assert_eq!(train.len(), 98);
        assert_eq!(test.len(), 32);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..130).collect::<Vec<_>>());
        assert_eq!(split_indices(130, 0.75, 4).unwrap().0, train);
        assert_ne!(split_indices(130, 0.75, 5).unwrap().0, train);
    }

    #[test]
    fn analysis_finds_ridge() {
        let t = uniform_table(200, 4, 12, |x| {
            let s = (x[0] + x[1] - x[2]) / 3f64.sqrt();
            s * s + 0.5 * s
        });
        let settings = AnalysisSettings {
            n_boot: 20,
            replicates: 3,
            ..Default::default()
        };
        let a = analyze(&t, &settings, None).unwrap();
        assert_eq!(a.decomposition.active_dim(), 1);
        assert_eq!(a.structure, Structure::Clear);
        let w = a.decomposition.eigenvectors().column(0);
        let cos = (w[0] + w[1] - w[2]).abs() / 3f64.sqrt();
        assert!(cos > 0.99, "cos = {cos}");
        assert!(a.mean_test_error < 0.05);
        assert_eq!(a.replicates.len(), 3);
    }
}
